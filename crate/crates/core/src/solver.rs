//! Transition probabilities of the semi-Markov process and of the joint
//! (state, backward-recurrence-time) chain, plus its stationary law.
//!
//! `solve_phi` runs the forward dynamic program for the evolution equation
//!
//! ```text
//! phi_ij(t) = delta_ij (1 - H_i(t)) + sum_k sum_{tau=1..t} b_ik(tau) phi_kj(t - tau)
//! ```
//!
//! `solve_backward` first solves the v = 0 system for the joint probabilities
//! `bphib_ij(0; v', t)` with the same kind of recursion and then assembles the
//! general-v surface from it. Convolutions are direct summations: horizons
//! stay small enough that exactness and simplicity beat transforms.

use crate::error::{Error, Result};
use crate::kernel::DerivedKernelViews;

/// Transition probabilities `phi[t][i][j]` up to a horizon.
#[derive(Debug, Clone)]
pub struct TransitionSurface {
    pub m: usize,
    pub horizon: usize,
    pub phi: Vec<Vec<Vec<f64>>>,
}

impl TransitionSurface {
    #[inline]
    pub fn at(&self, t: usize, i: usize, j: usize) -> f64 {
        self.phi[t][i][j]
    }
}

/// Solves the evolution equation for `phi_ij(t)`, t = 0..=horizon.
pub fn solve_phi(views: &DerivedKernelViews, horizon: usize) -> TransitionSurface {
    let m = views.m;
    let mut phi = vec![vec![vec![0.0; m]; m]; horizon + 1];
    for i in 0..m {
        phi[0][i][i] = 1.0;
    }
    for t in 1..=horizon {
        for i in 0..m {
            let surv = views.survival(i, t);
            for j in 0..m {
                let mut acc = if i == j { surv } else { 0.0 };
                for k in 0..m {
                    for tau in 1..=t.min(views.t_max) {
                        let b = views.b[i][k][tau];
                        if b != 0.0 {
                            acc += b * phi[t - tau][k][j];
                        }
                    }
                }
                phi[t][i][j] = acc;
            }
        }
    }
    TransitionSurface { m, horizon, phi }
}

/// Backward-conditioned transition probabilities for one initial backward
/// value `v`: the joint law `bphib_ij(v; v', t)` of the state and the new
/// backward value, and its marginal over `v'`.
#[derive(Debug, Clone)]
pub struct BackwardSurface {
    pub m: usize,
    pub v: usize,
    pub horizon: usize,
    /// Largest stored backward value.
    pub vmax: usize,
    /// `joint[t][i][j][v']`.
    pub joint: Vec<Vec<Vec<Vec<f64>>>>,
    /// `marginal[t][i][j] = sum_v' joint[t][i][j][v']`.
    pub marginal: Vec<Vec<Vec<f64>>>,
}

impl BackwardSurface {
    #[inline]
    pub fn joint_at(&self, t: usize, i: usize, j: usize, vprime: usize) -> f64 {
        if vprime > self.vmax {
            0.0
        } else {
            self.joint[t][i][j][vprime]
        }
    }
}

/// Solves the v = 0 joint system forward in t. `vmax` bounds the stored
/// backward values; entries beyond it carry zero survival weight.
fn solve_backward_zero(
    views: &DerivedKernelViews,
    horizon: usize,
    vmax: usize,
) -> Vec<Vec<Vec<Vec<f64>>>> {
    let m = views.m;
    let mut joint = vec![vec![vec![vec![0.0; vmax + 1]; m]; m]; horizon + 1];
    for i in 0..m {
        joint[0][i][i][0] = 1.0;
    }
    for t in 1..=horizon {
        let (earlier, current) = joint.split_at_mut(t);
        let now = &mut current[0];
        for i in 0..m {
            // no jump by t: still in i with backward t
            if t <= vmax {
                now[i][i][t] = views.survival(i, t);
            }
            for k in 0..m {
                for s in 1..=t.min(views.t_max) {
                    let b = views.b[i][k][s];
                    if b == 0.0 {
                        continue;
                    }
                    let sub = &earlier[t - s][k];
                    for j in 0..m {
                        for vp in 0..=vmax.min(t - s) {
                            let x = sub[j][vp];
                            if x != 0.0 {
                                now[i][j][vp] += b * x;
                            }
                        }
                    }
                }
            }
        }
    }
    joint
}

/// Computes the backward surface for initial backward value `v`.
///
/// Requires `H_i(v) < 1` for every state; the first violating state is
/// reported otherwise.
pub fn solve_backward(
    views: &DerivedKernelViews,
    v: usize,
    horizon: usize,
) -> Result<BackwardSurface> {
    let m = views.m;
    for i in 0..m {
        if views.survival(i, v) <= 0.0 {
            return Err(Error::BackwardPrecondition { state: i, v });
        }
    }
    let absorbing = (0..m).any(|i| views.survival(i, views.t_max) > 0.0);
    let vmax = if absorbing {
        v + horizon
    } else {
        views.t_max.saturating_sub(1).min(v + horizon)
    };
    let zero = solve_backward_zero(views, horizon, vmax);
    let joint = if v == 0 {
        zero
    } else {
        let mut joint = vec![vec![vec![vec![0.0; vmax + 1]; m]; m]; horizon + 1];
        for i in 0..m {
            if v <= vmax {
                joint[0][i][i][v] = 1.0;
            }
        }
        for t in 1..=horizon {
            for i in 0..m {
                let denom = views.survival(i, v);
                // no jump: backward grows to t + v
                if t + v <= vmax {
                    joint[t][i][i][t + v] = views.survival(i, t + v) / denom;
                }
                for k in 0..m {
                    for s in 1..=t {
                        let b = views.increment(i, k, s + v);
                        if b == 0.0 {
                            continue;
                        }
                        let w = b / denom;
                        let sub = &zero[t - s][k];
                        for j in 0..m {
                            for vp in 0..=vmax.min(t - s) {
                                let x = sub[j][vp];
                                if x != 0.0 {
                                    joint[t][i][j][vp] += w * x;
                                }
                            }
                        }
                    }
                }
            }
        }
        joint
    };
    let marginal = joint
        .iter()
        .map(|per_t| {
            per_t
                .iter()
                .map(|per_i| per_i.iter().map(|per_j| per_j.iter().sum()).collect())
                .collect()
        })
        .collect();
    Ok(BackwardSurface {
        m,
        v,
        horizon,
        vmax,
        joint,
        marginal,
    })
}

/// Marginal backward-conditioned transition row `bphi_hj(v; t)` for all
/// t = 0..=horizon and j, computed from a precomputed `phi` surface:
///
/// ```text
/// bphi_hj(v; t) = delta_hj (1 - H_h(t+v)) / (1 - H_h(v))
///               + sum_k sum_{s=1..t} b_hk(s+v) / (1 - H_h(v)) * phi_kj(t-s)
/// ```
pub fn backward_marginal(
    views: &DerivedKernelViews,
    phi: &TransitionSurface,
    h: usize,
    v: usize,
    horizon: usize,
) -> Result<Vec<Vec<f64>>> {
    let m = views.m;
    let denom = views.survival(h, v);
    if denom <= 0.0 {
        return Err(Error::BackwardPrecondition { state: h, v });
    }
    assert!(horizon <= phi.horizon, "phi surface too short");
    let mut out = vec![vec![0.0; m]; horizon + 1];
    for (t, row) in out.iter_mut().enumerate() {
        row[h] = views.survival(h, t + v) / denom;
        for k in 0..m {
            for s in 1..=t {
                let b = views.increment(h, k, s + v);
                if b == 0.0 {
                    continue;
                }
                let w = b / denom;
                for j in 0..m {
                    row[j] += w * phi.at(t - s, k, j);
                }
            }
        }
    }
    Ok(out)
}

/// Stationary law of the joint (state, backward) chain: mean recurrence
/// times, the joint law `pi_j(v')`, and its state marginals.
#[derive(Debug, Clone)]
pub struct BackwardLaw {
    /// Embedded-chain stationary vector.
    pub nu: Vec<f64>,
    /// Mean recurrence time of each state.
    pub mu: Vec<f64>,
    /// Joint stationary law `pi_v[j][v']`, normalized to total mass 1.
    pub pi_v: Vec<Vec<f64>>,
    /// State marginals `pi_j = sum_v' pi_j(v')`.
    pub pi: Vec<f64>,
}

/// Computes the stationary backward law.
///
/// Solves `nu P = nu` for the embedded chain, forms mean sojourns
/// `eta_i = sum_t t (H_i(t) - H_i(t-1))`, mean recurrence times
/// `mu_jj = sum_i nu_i eta_i / nu_j`, and the joint law
/// `pi_j(v') = (1 - H_j(v')) / mu_jj`, renormalized so the whole joint law
/// sums to one. Requires the embedded chain to be irreducible.
pub fn stationary_law(views: &DerivedKernelViews) -> Result<BackwardLaw> {
    let m = views.m;
    let components = strongly_connected_components(&views.p);
    if components.len() != 1 {
        return Err(Error::ReducibleChain { components });
    }
    let nu = embedded_stationary(&views.p)?;
    let eta: Vec<f64> = (0..m).map(|i| views.mean_sojourn(i)).collect();
    let cycle: f64 = (0..m).map(|i| nu[i] * eta[i]).sum();
    let mu: Vec<f64> = (0..m).map(|j| cycle / nu[j]).collect();
    let mut pi_v: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            (0..views.t_max)
                .map(|vp| views.survival(j, vp) / mu[j])
                .collect()
        })
        .collect();
    let total: f64 = pi_v.iter().flat_map(|r| r.iter()).sum();
    for row in &mut pi_v {
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    let pi: Vec<f64> = pi_v.iter().map(|r| r.iter().sum()).collect();
    Ok(BackwardLaw { nu, mu, pi_v, pi })
}

/// Stationary vector of a row-stochastic matrix via a dense linear solve of
/// `x (P - I) = 0` with the normalization `sum x = 1`.
pub fn embedded_stationary(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = p.len();
    // transpose(P) - I, last equation replaced by the normalization
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        for c in 0..m {
            a[r][c] = p[c][r] - if r == c { 1.0 } else { 0.0 };
        }
    }
    a[m - 1] = vec![1.0; m];
    rhs[m - 1] = 1.0;
    let x = solve_dense(a, rhs)?;
    if x.iter().any(|&v| v < -1e-9) {
        return Err(Error::InvalidParameter(
            "stationary solve produced negative mass".into(),
        ));
    }
    Ok(x.into_iter().map(|v| v.max(0.0)).collect())
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::InvalidParameter("singular linear system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Strongly connected components of the support graph of `p` (Kosaraju),
/// in discovery order.
pub fn strongly_connected_components(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let m = p.len();
    let edge = |from: usize, to: usize| p[from][to] > 0.0;

    fn dfs_order(m: usize, edge: &dyn Fn(usize, usize) -> bool) -> Vec<usize> {
        let mut seen = vec![false; m];
        let mut order = Vec::with_capacity(m);
        for start in 0..m {
            if seen[start] {
                continue;
            }
            // iterative DFS recording finish order
            let mut stack = vec![(start, 0usize)];
            seen[start] = true;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                let mut advanced = false;
                while *next < m {
                    let to = *next;
                    *next += 1;
                    if !seen[to] && edge(node, to) {
                        seen[to] = true;
                        stack.push((to, 0));
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    order.push(node);
                    stack.pop();
                }
            }
        }
        order
    }

    let order = dfs_order(m, &|a, b| edge(a, b));
    let mut seen = vec![false; m];
    let mut components = Vec::new();
    for &start in order.iter().rev() {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for to in 0..m {
                if !seen[to] && edge(to, node) {
                    seen[to] = true;
                    comp.push(to);
                    stack.push(to);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}
