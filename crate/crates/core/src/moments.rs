//! Moment recursions for the accumulation factor and the squared-return
//! autocovariance.
//!
//! With `f_i = 1 + i*delta` and the convention that a jump at time `theta`
//! puts the new state in place from slot `theta` onward (the pre-jump run
//! contributes `f_i^theta` over slots `0..theta-1`), the expected
//! accumulation factor `m_i(v; t) = E[M_0(t+1) | (i, v)]` satisfies
//!
//! ```text
//! m_i(v; t) = f_i^(t+1) (1 - H_i(t+v)) / (1 - H_i(v))
//!   + sum_a sum_{theta=1..t} f_i^theta b_ia(theta+v) / (1 - H_i(v)) m_a(0; t-theta)
//! ```
//!
//! and the second-order cross moment
//! `m2_i(v; t, s) = E[M_0(t+1) M_0(t+s+1) | (i, v)]` decomposes over the
//! first jump into three branches (no jump through `t+s`; jump in
//! `(t, t+s]`; jump in `[1, t]`):
//!
//! ```text
//! m2_i(v; t, s) = f_i^(2(t+1)+s) (1 - H_i(t+s+v)) / (1 - H_i(v))
//!   + sum_a sum_{theta=t+1..t+s} f_i^(t+theta+1) b_ia(theta+v) / (1 - H_i(v)) m_a(0; t+s-theta)
//!   + sum_a sum_{theta=1..t}     f_i^(2 theta)    b_ia(theta+v) / (1 - H_i(v)) m2_a(0; t-theta, s)
//! ```
//!
//! Every exponent above is pinned by the exhaustive enumeration oracle in the
//! test suite; the s = 0 case reduces to `E[M_0(t+1)^2]` exactly.
//!
//! The squared-return autocovariance uses the backward-conditioned
//! probabilities: conditionally on `(i, v)` and, under the stationary joint
//! law of (state, backward time), unconditionally.

use crate::error::{Error, Result};
use crate::kernel::DerivedKernelViews;
use crate::solver::{backward_marginal, solve_backward, solve_phi, BackwardLaw};
use crate::state::StateSpace;

fn check_backward(views: &DerivedKernelViews, i: usize, v: usize) -> Result<f64> {
    let denom = views.survival(i, v);
    if denom <= 0.0 {
        return Err(Error::BackwardPrecondition { state: i, v });
    }
    Ok(denom)
}

/// Fresh-state expectation table `m_a(0; tau)` for tau = 0..=t.
fn m1_zero_table(views: &DerivedKernelViews, f: &[f64], t: usize) -> Vec<Vec<f64>> {
    let m = views.m;
    let mut table = vec![vec![0.0; t + 1]; m];
    for tau in 0..=t {
        for a in 0..m {
            let mut acc = f[a].powi(tau as i32 + 1) * views.survival(a, tau);
            for theta in 1..=tau.min(views.t_max) {
                let w = f[a].powi(theta as i32);
                for b in 0..m {
                    let inc = views.b[a][b][theta];
                    if inc != 0.0 {
                        acc += w * inc * table[b][tau - theta];
                    }
                }
            }
            table[a][tau] = acc;
        }
    }
    table
}

/// Expected accumulation factor `m_i(v; t) = E[M_0(t+1) | (i, v)]`.
pub fn expected_accumulation(
    views: &DerivedKernelViews,
    space: &StateSpace,
    i: usize,
    v: usize,
    t: usize,
) -> Result<f64> {
    let denom = check_backward(views, i, v)?;
    let f: Vec<f64> = space.states.iter().map(|&s| 1.0 + s).collect();
    let table = m1_zero_table(views, &f, t.saturating_sub(1));
    let mut acc = f[i].powi(t as i32 + 1) * views.survival(i, t + v) / denom;
    for theta in 1..=t {
        let w = f[i].powi(theta as i32);
        for a in 0..views.m {
            let inc = views.increment(i, a, theta + v);
            if inc != 0.0 {
                acc += w * inc / denom * table[a][t - theta];
            }
        }
    }
    Ok(acc)
}

/// Fresh-state cross-moment table `m2_a(0; tau, s)` for tau = 0..=t, fixed s.
fn m2_zero_table(
    views: &DerivedKernelViews,
    f: &[f64],
    m1_table: &[Vec<f64>],
    t: usize,
    s: usize,
) -> Vec<Vec<f64>> {
    let m = views.m;
    let mut table = vec![vec![0.0; t + 1]; m];
    for tau in 0..=t {
        for a in 0..m {
            let mut acc =
                f[a].powi(2 * (tau as i32 + 1) + s as i32) * views.survival(a, tau + s);
            for theta in tau + 1..=tau + s {
                let inc_total = f[a].powi(tau as i32 + theta as i32 + 1);
                for b in 0..m {
                    let inc = views.increment(a, b, theta);
                    if inc != 0.0 {
                        acc += inc_total * inc * m1_table[b][tau + s - theta];
                    }
                }
            }
            for theta in 1..=tau.min(views.t_max) {
                let w = f[a].powi(2 * theta as i32);
                for b in 0..m {
                    let inc = views.b[a][b][theta];
                    if inc != 0.0 {
                        acc += w * inc * table[b][tau - theta];
                    }
                }
            }
            table[a][tau] = acc;
        }
    }
    table
}

/// Second-order cross moment `m2_i(v; t, s) = E[M_0(t+1) M_0(t+s+1) | (i, v)]`.
pub fn cross_moment(
    views: &DerivedKernelViews,
    space: &StateSpace,
    i: usize,
    v: usize,
    t: usize,
    s: usize,
) -> Result<f64> {
    let denom = check_backward(views, i, v)?;
    let f: Vec<f64> = space.states.iter().map(|&st| 1.0 + st).collect();
    let m1_table = m1_zero_table(views, &f, (t + s).saturating_sub(1));
    let m2_table = m2_zero_table(views, &f, &m1_table, t.saturating_sub(1), s);
    let mut acc = f[i].powi(2 * (t as i32 + 1) + s as i32) * views.survival(i, t + s + v) / denom;
    for theta in t + 1..=t + s {
        let w = f[i].powi(t as i32 + theta as i32 + 1);
        for a in 0..views.m {
            let inc = views.increment(i, a, theta + v);
            if inc != 0.0 {
                acc += w * inc / denom * m1_table[a][t + s - theta];
            }
        }
    }
    for theta in 1..=t {
        let w = f[i].powi(2 * theta as i32);
        for a in 0..views.m {
            let inc = views.increment(i, a, theta + v);
            if inc != 0.0 {
                acc += w * inc / denom * m2_table[a][t - theta];
            }
        }
    }
    Ok(acc)
}

/// Intraday volatility autocovariance
/// `gamma_i(v; t, s) = m2_i(v; t, s) - m_i(v; t) m_i(v; t+s)`.
pub fn intraday_autocov(
    views: &DerivedKernelViews,
    space: &StateSpace,
    i: usize,
    v: usize,
    t: usize,
    s: usize,
) -> Result<f64> {
    let m2 = cross_moment(views, space, i, v, t, s)?;
    let m1_t = expected_accumulation(views, space, i, v, t)?;
    let m1_ts = expected_accumulation(views, space, i, v, t + s)?;
    Ok(m2 - m1_t * m1_ts)
}

/// Accumulation-moment curves over t = 0..=t_upto at fixed (i, v, s).
#[derive(Debug, Clone)]
pub struct MomentSurfaces {
    /// `m_i(v; t)`.
    pub m1: Vec<f64>,
    /// `m2_i(v; t, s)`.
    pub m2: Vec<f64>,
    /// `gamma_i(v; t, s)`.
    pub gamma: Vec<f64>,
}

/// Evaluates the three moment curves on a time grid.
pub fn moment_surfaces(
    views: &DerivedKernelViews,
    space: &StateSpace,
    i: usize,
    v: usize,
    t_upto: usize,
    s: usize,
) -> Result<MomentSurfaces> {
    let mut m1 = Vec::with_capacity(t_upto + 1);
    let mut m2 = Vec::with_capacity(t_upto + 1);
    let mut gamma = Vec::with_capacity(t_upto + 1);
    for t in 0..=t_upto {
        let a = expected_accumulation(views, space, i, v, t)?;
        let c = cross_moment(views, space, i, v, t, s)?;
        let b = expected_accumulation(views, space, i, v, t + s)?;
        m1.push(a);
        m2.push(c);
        gamma.push(c - a * b);
    }
    Ok(MomentSurfaces { m1, m2, gamma })
}

/// One evaluation of the conditional squared-return autocovariance.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalSqAcf {
    /// `E[W^2(t+tau) W^2(t) | (i, v)]`.
    pub cross: f64,
    /// `E[W^2(t) | (i, v)]`.
    pub sq_t: f64,
    /// `E[W^2(t+tau) | (i, v)]`.
    pub sq_t_tau: f64,
    /// `Cov(W^2(t+tau), W^2(t) | (i, v))`.
    pub cov: f64,
}

/// Conditional squared-return autocovariance at lag `tau` from time `t`,
/// given the initial condition `(i, v)`.
///
/// The cross expectation pairs the joint backward law at time t with the
/// marginal law over the following tau minutes:
///
/// ```text
/// E[W^2(t+tau) W^2(t)] = sum_h sum_j sum_v' bphib_ih(v; v', t)
///                        * bphi_hj(v'; tau) (h delta)^2 (j delta)^2
/// ```
pub fn squared_acf_conditional(
    views: &DerivedKernelViews,
    space: &StateSpace,
    i: usize,
    v: usize,
    t: usize,
    tau: usize,
) -> Result<ConditionalSqAcf> {
    check_backward(views, i, v)?;
    let sq: Vec<f64> = space.states.iter().map(|&s| s * s).collect();
    let phi = solve_phi(views, t + tau);
    let surface = solve_backward(views, v, t)?;
    let mut cross = 0.0;
    for h in 0..views.m {
        if sq[h] == 0.0 {
            continue;
        }
        for vp in 0..=surface.vmax {
            let mass = surface.joint_at(t, i, h, vp);
            if mass == 0.0 {
                continue;
            }
            let rows = backward_marginal(views, &phi, h, vp, tau)?;
            let inner: f64 = (0..views.m).map(|j| rows[tau][j] * sq[j]).sum();
            cross += mass * inner * sq[h];
        }
    }
    let sq_t: f64 = (0..views.m)
        .map(|h| surface.marginal[t][i][h] * sq[h])
        .sum();
    let rows_i = backward_marginal(views, &phi, i, v, t + tau)?;
    let sq_t_tau: f64 = (0..views.m).map(|j| rows_i[t + tau][j] * sq[j]).sum();
    Ok(ConditionalSqAcf {
        cross,
        sq_t,
        sq_t_tau,
        cov: cross - sq_t * sq_t_tau,
    })
}

/// Stationary squared-return autocovariance and its normalized curve.
#[derive(Debug, Clone)]
pub struct SquaredAcf {
    /// `Sigma(tau)` for tau = 0..=tau_max.
    pub sigma: Vec<f64>,
    /// `Sigma(tau) / Sigma(0)`; `None` when the squared returns are
    /// degenerate (`Sigma(0) = 0`).
    pub rho_acf: Option<Vec<f64>>,
}

/// Stationary squared-return autocovariance
///
/// ```text
/// Sigma(tau) = sum_h sum_v' sum_j pi_h(v') bphi_hj(v'; tau)
///              (h delta)^2 (j delta)^2  -  (sum_j pi_j (j delta)^2)^2
/// ```
///
/// evaluated for tau = 0..=tau_max under the stationary backward law.
pub fn squared_acf_stationary(
    views: &DerivedKernelViews,
    space: &StateSpace,
    law: &BackwardLaw,
    tau_max: usize,
) -> Result<SquaredAcf> {
    let sq: Vec<f64> = space.states.iter().map(|&s| s * s).collect();
    let phi = solve_phi(views, tau_max);
    let mean_sq: f64 = (0..views.m).map(|j| law.pi[j] * sq[j]).sum();
    let mut sigma = vec![-mean_sq * mean_sq; tau_max + 1];
    for h in 0..views.m {
        if sq[h] == 0.0 {
            continue;
        }
        for vp in 0..law.pi_v[h].len() {
            let mass = law.pi_v[h][vp];
            if mass == 0.0 {
                continue;
            }
            let rows = backward_marginal(views, &phi, h, vp, tau_max)?;
            for (tau, sig) in sigma.iter_mut().enumerate() {
                let inner: f64 = (0..views.m).map(|j| rows[tau][j] * sq[j]).sum();
                *sig += mass * inner * sq[h];
            }
        }
    }
    let rho_acf = if sigma[0] > 0.0 {
        Some(sigma.iter().map(|&s| s / sigma[0]).collect())
    } else {
        None
    };
    Ok(SquaredAcf { sigma, rho_acf })
}
