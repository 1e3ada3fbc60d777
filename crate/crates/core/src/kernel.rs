//! Semi-Markov kernel, derived views, and estimators.
//!
//! The kernel stores the increments `b_ij(t)`: the probability that the next
//! jump goes to state `j` after a sojourn of exactly `t` minutes, truncated at
//! a horizon `t_max`. Everything the solvers need is derived from it: the
//! cumulative kernel `Q`, the sojourn cdf `H` (with its survival complement),
//! the embedded-chain matrix `P`, and the conditional sojourn cdf `G`.
//!
//! Estimation counts completed sojourns only: a run cut short by the day close
//! never ended with an observed jump, so it is censored rather than counted.

use crate::error::{Error, Result};
use crate::state::DiscretizedPath;
use serde::{Deserialize, Serialize};

/// Tolerance for validating externally supplied probability rows.
const ROW_SUM_TOL: f64 = 1e-9;

/// Rewrites the last nonzero cell of a near-stochastic row (by at most a few
/// ulps of mass) so the left-to-right float sum equals exactly 1.0.
///
/// Retargeting the final summand means no later rounding can disturb the
/// correction; if prefix rounding already overshot 1, the largest earlier
/// cell is deflated ulp by ulp first.
fn close_row_gap(row: &mut [f64]) {
    if row.iter().sum::<f64>() == 0.0 {
        return;
    }
    let last = row.iter().rposition(|&x| x > 0.0).unwrap();
    for _ in 0..256 {
        let prefix: f64 = row[..last].iter().sum();
        if prefix <= 1.0 {
            break;
        }
        let jmax = row[..last]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        row[jmax] = row[jmax].next_down();
    }
    let prefix: f64 = row[..last].iter().sum();
    let mut cell = (1.0 - prefix).max(0.0);
    for _ in 0..256 {
        row[last] = cell;
        let sum: f64 = row.iter().sum();
        if sum == 1.0 {
            return;
        }
        cell += 1.0 - sum;
        if cell < 0.0 {
            cell = 0.0;
        }
    }
    debug_assert!(false, "row gap failed to close");
}

/// Truncated-horizon semi-Markov kernel increments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiMarkovKernel {
    /// State count.
    pub m: usize,
    /// Sojourn truncation horizon (minutes); increments live on t = 1..=t_max.
    pub t_max: usize,
    /// Increments `b[i][j][t]`, t = 0..=t_max with `b[i][j][0] = 0`.
    pub b: Vec<Vec<Vec<f64>>>,
    /// Observed transition counts with the same layout, kept for inference.
    pub counts: Option<Vec<Vec<Vec<u64>>>>,
    /// Rows that were filled by a configured fallback instead of data.
    pub fallback_rows: Vec<usize>,
}

impl SemiMarkovKernel {
    /// Builds a kernel from raw increments, validating the invariants:
    /// nonnegative entries, zero diagonal, `b(0) = 0`, and each row mass
    /// summing to 1 (or to 0 for an absorbing state).
    pub fn from_increments(m: usize, t_max: usize, mut b: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if b.len() != m || b.iter().any(|r| r.len() != m) {
            return Err(Error::LengthMismatch {
                what: "kernel rows",
                expected: m,
                got: b.len(),
            });
        }
        for (i, row) in b.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (j, cell) in row.iter_mut().enumerate() {
                if cell.len() != t_max + 1 {
                    return Err(Error::LengthMismatch {
                        what: "kernel horizon",
                        expected: t_max + 1,
                        got: cell.len(),
                    });
                }
                if cell[0] != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "b[{i}][{j}](0) must be 0"
                    )));
                }
                if cell.iter().any(|&x| x < 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "negative increment in b[{i}][{j}]"
                    )));
                }
                if i == j && cell.iter().any(|&x| x != 0.0) {
                    return Err(Error::NonzeroDiagonal { row: i });
                }
                sum += cell.iter().sum::<f64>();
            }
            if sum != 0.0 && (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NonStochasticRow { row: i, sum });
            }
            if sum != 0.0 {
                // flatten, fix the residual, write back
                let mut flat: Vec<f64> = row.iter().flat_map(|c| c.iter().copied()).collect();
                close_row_gap(&mut flat);
                for (j, cell) in row.iter_mut().enumerate() {
                    for t in 0..=t_max {
                        cell[t] = flat[j * (t_max + 1) + t];
                    }
                }
            }
        }
        Ok(Self {
            m,
            t_max,
            b,
            counts: None,
            fallback_rows: Vec::new(),
        })
    }

    /// True when state `i` has no outgoing kernel mass.
    pub fn is_absorbing(&self, i: usize) -> bool {
        self.b[i]
            .iter()
            .all(|cell| cell.iter().all(|&x| x == 0.0))
    }
}

/// Quantities derived from a kernel by partial sums.
#[derive(Debug, Clone)]
pub struct DerivedKernelViews {
    pub m: usize,
    pub t_max: usize,
    /// Increments, shared layout with the kernel.
    pub b: Vec<Vec<Vec<f64>>>,
    /// Cumulative kernel `Q[i][j][t]`.
    pub q: Vec<Vec<Vec<f64>>>,
    /// Sojourn cdf `H[i][t]`.
    pub h: Vec<Vec<f64>>,
    /// Survival weights `1 - H[i][t]`, computed as exact tail sums so that
    /// `survival(i, t_max) == 0` for non-absorbing states.
    survival: Vec<Vec<f64>>,
    /// Embedded-chain matrix `P`.
    pub p: Vec<Vec<f64>>,
    /// Conditional sojourn cdf `G[i][j][t]`; identically 1 when `p_ij = 0`.
    pub g: Vec<Vec<Vec<f64>>>,
}

/// Derives `Q`, `H`, `P`, `G` and the survival weights from a kernel.
pub fn derive_views(kernel: &SemiMarkovKernel) -> DerivedKernelViews {
    let m = kernel.m;
    let t_max = kernel.t_max;
    let mut q = vec![vec![vec![0.0; t_max + 1]; m]; m];
    let mut p = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for t in 0..=t_max {
                acc += kernel.b[i][j][t];
                q[i][j][t] = acc;
            }
            p[i][j] = acc;
        }
    }
    // sojourn mass per minute, then survival as backward tail sums
    let mut survival = vec![vec![0.0; t_max + 1]; m];
    let mut h = vec![vec![0.0; t_max + 1]; m];
    for i in 0..m {
        if kernel.is_absorbing(i) {
            survival[i] = vec![1.0; t_max + 1];
            continue;
        }
        let mut tail = 0.0;
        for t in (0..=t_max).rev() {
            if t < t_max {
                let mass: f64 = (0..m).map(|j| kernel.b[i][j][t + 1]).sum();
                tail += mass;
            }
            survival[i][t] = tail;
        }
        // pin the open end: all mass sits within the truncation
        survival[i][0] = 1.0;
        for t in 0..=t_max {
            h[i][t] = 1.0 - survival[i][t];
        }
    }
    let mut g = vec![vec![vec![1.0; t_max + 1]; m]; m];
    for i in 0..m {
        for j in 0..m {
            if p[i][j] != 0.0 {
                for t in 0..=t_max {
                    g[i][j][t] = q[i][j][t] / p[i][j];
                }
            }
        }
    }
    DerivedKernelViews {
        m,
        t_max,
        b: kernel.b.clone(),
        q,
        h,
        survival,
        p,
        g,
    }
}

impl DerivedKernelViews {
    /// Increment `b_ij(t)`, zero beyond the truncation horizon.
    #[inline]
    pub fn increment(&self, i: usize, j: usize, t: usize) -> f64 {
        if t > self.t_max {
            0.0
        } else {
            self.b[i][j][t]
        }
    }

    /// Total jump mass out of `i` at sojourn exactly `t`.
    #[inline]
    pub fn mass(&self, i: usize, t: usize) -> f64 {
        if t == 0 || t > self.t_max {
            0.0
        } else {
            self.survival[i][t - 1] - self.survival[i][t]
        }
    }

    /// Survival weight `1 - H_i(t)`, zero beyond the truncation horizon for
    /// non-absorbing states.
    #[inline]
    pub fn survival(&self, i: usize, t: usize) -> f64 {
        if t > self.t_max {
            self.survival[i][self.t_max]
        } else {
            self.survival[i][t]
        }
    }

    /// Mean sojourn time in state `i`.
    pub fn mean_sojourn(&self, i: usize) -> f64 {
        (1..=self.t_max).map(|t| t as f64 * self.mass(i, t)).sum()
    }
}

/// Row-stochastic overnight transition matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OvernightChain {
    pub t: Vec<Vec<f64>>,
    /// Rows filled with the uniform fallback for lack of observations.
    pub fallback_rows: Vec<usize>,
}

impl OvernightChain {
    pub fn new(t: Vec<Vec<f64>>) -> Result<Self> {
        validate_stochastic(&t)?;
        Ok(Self {
            t,
            fallback_rows: Vec::new(),
        })
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            t: vec![vec![1.0 / m as f64; m]; m],
            fallback_rows: Vec::new(),
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut t = vec![vec![0.0; m]; m];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            t,
            fallback_rows: Vec::new(),
        }
    }
}

/// Checks that every row of `mat` is a probability distribution.
pub fn validate_stochastic(mat: &[Vec<f64>]) -> Result<()> {
    for (i, row) in mat.iter().enumerate() {
        if row.iter().any(|&x| !(0.0..=1.0 + ROW_SUM_TOL).contains(&x)) {
            return Err(Error::NonStochasticRow {
                row: i,
                sum: f64::NAN,
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NonStochasticRow { row: i, sum });
        }
    }
    Ok(())
}

/// Policy for states with no completed sojourns in the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowFallback {
    /// Reject the estimation, naming the unobserved states.
    #[default]
    Error,
    /// Fill the row uniformly over destinations and sojourn times, and record
    /// it in `fallback_rows`.
    Uniform,
}

/// Options for [`estimate_kernel`].
#[derive(Debug, Clone, Default)]
pub struct EstimateOptions {
    /// Truncation horizon; defaults to the maximum observed sojourn.
    pub t_max: Option<usize>,
    /// What to do with states that never complete a sojourn.
    pub unobserved: RowFallback,
    /// Drop (censor) sojourns longer than the requested `t_max` instead of
    /// rejecting the sample.
    pub censor_long: bool,
}

/// Estimates the kernel increments from a discretized path.
///
/// `b_ij(t) = N_ij(t) / N_i` where `N_ij(t)` counts jumps `i -> j` with
/// sojourn exactly `t` and `N_i` is the total number of completed sojourns in
/// `i`. The last run of every day is censored: it did not end with an
/// observed jump. Counts are retained on the returned kernel.
pub fn estimate_kernel(path: &DiscretizedPath, opts: &EstimateOptions) -> Result<SemiMarkovKernel> {
    let m = path.m;
    let mut sojourns: Vec<(usize, usize, usize)> = Vec::new();
    for day in 0..path.days.len() {
        let chain = path.jump_chain(day);
        for w in chain.windows(2) {
            let (from, start) = w[0];
            let (to, end) = w[1];
            sojourns.push((from, to, end - start));
        }
    }
    if sojourns.is_empty() {
        return Err(Error::EmptyPath);
    }
    let observed_max = sojourns.iter().map(|&(_, _, s)| s).max().unwrap();
    let t_max = opts.t_max.unwrap_or(observed_max);
    if observed_max > t_max {
        if opts.censor_long {
            sojourns.retain(|&(_, _, s)| s <= t_max);
            if sojourns.is_empty() {
                return Err(Error::EmptyPath);
            }
        } else {
            return Err(Error::SojournExceedsHorizon {
                observed: observed_max,
                t_max,
            });
        }
    }

    let mut counts = vec![vec![vec![0u64; t_max + 1]; m]; m];
    for &(i, j, s) in &sojourns {
        counts[i][j][s] += 1;
    }
    let totals: Vec<u64> = (0..m)
        .map(|i| counts[i].iter().map(|c| c.iter().sum::<u64>()).sum())
        .collect();
    let unobserved: Vec<usize> = (0..m).filter(|&i| totals[i] == 0).collect();
    if !unobserved.is_empty() && opts.unobserved == RowFallback::Error {
        return Err(Error::UnobservedStates { states: unobserved });
    }

    let mut b = vec![vec![vec![0.0; t_max + 1]; m]; m];
    for i in 0..m {
        if totals[i] == 0 {
            let fill = 1.0 / ((m - 1) as f64 * t_max as f64);
            for j in 0..m {
                if j != i {
                    for t in 1..=t_max {
                        b[i][j][t] = fill;
                    }
                }
            }
            continue;
        }
        let n_i = totals[i] as f64;
        let mut flat = vec![0.0; m * (t_max + 1)];
        for j in 0..m {
            for t in 1..=t_max {
                flat[j * (t_max + 1) + t] = counts[i][j][t] as f64 / n_i;
            }
        }
        close_row_gap(&mut flat);
        for j in 0..m {
            for t in 0..=t_max {
                b[i][j][t] = flat[j * (t_max + 1) + t];
            }
        }
    }
    Ok(SemiMarkovKernel {
        m,
        t_max,
        b,
        counts: Some(counts),
        fallback_rows: unobserved,
    })
}

/// Estimates the overnight transition matrix from the day boundaries of a
/// path: row `a` is the empirical law of the overnight state given that the
/// last intraday state of the day was `a`. Rows without observations get the
/// uniform fallback (or an error under [`RowFallback::Error`]).
pub fn estimate_overnight(path: &DiscretizedPath, fallback: RowFallback) -> Result<OvernightChain> {
    let m = path.m;
    if path.overnight.is_empty() {
        return Err(Error::NoDayBoundaries);
    }
    let mut counts = vec![vec![0u64; m]; m];
    for (k, &j) in path.overnight.iter().enumerate() {
        let a = *path.days[k].last().ok_or(Error::EmptyPath)?;
        counts[a][j] += 1;
    }
    let mut t = vec![vec![0.0; m]; m];
    let mut fallback_rows = Vec::new();
    for a in 0..m {
        let total: u64 = counts[a].iter().sum();
        if total == 0 {
            if fallback == RowFallback::Error {
                return Err(Error::UnobservedStates { states: vec![a] });
            }
            t[a] = vec![1.0 / m as f64; m];
            fallback_rows.push(a);
        } else {
            for j in 0..m {
                t[a][j] = counts[a][j] as f64 / total as f64;
            }
            close_row_gap(&mut t[a]);
        }
    }
    Ok(OvernightChain { t, fallback_rows })
}

/// Empirical one-step transition matrix over the intraday sequences
/// (self-transitions included); the simple Markov baseline.
pub fn estimate_markov_baseline(path: &DiscretizedPath) -> Result<Vec<Vec<f64>>> {
    let m = path.m;
    let mut counts = vec![vec![0u64; m]; m];
    let mut any = false;
    for day in &path.days {
        for w in day.windows(2) {
            counts[w[0]][w[1]] += 1;
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyPath);
    }
    let mut mat = vec![vec![0.0; m]; m];
    for i in 0..m {
        let total: u64 = counts[i].iter().sum();
        if total == 0 {
            mat[i] = vec![1.0 / m as f64; m];
        } else {
            for j in 0..m {
                mat[i][j] = counts[i][j] as f64 / total as f64;
            }
            close_row_gap(&mut mat[i]);
        }
    }
    Ok(mat)
}

/// Kernel with geometric sojourn laws: `b_ij(t) = p_ij * q_i (1-q_i)^(t-1)`,
/// the tail mass beyond `t_max` folded into the last bin. The resulting
/// semi-Markov process is equivalent to a Markov chain with one-step matrix
/// `M = diag(1-q) + diag(q) P`.
pub fn geometric_kernel(
    p: &[Vec<f64>],
    q: &[f64],
    t_max: usize,
) -> Result<SemiMarkovKernel> {
    let m = p.len();
    validate_stochastic(p)?;
    for (i, row) in p.iter().enumerate() {
        if row[i] != 0.0 {
            return Err(Error::NonzeroDiagonal { row: i });
        }
    }
    if q.len() != m {
        return Err(Error::LengthMismatch {
            what: "q",
            expected: m,
            got: q.len(),
        });
    }
    if let Some(&bad) = q.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "jump probability {bad} outside (0, 1]"
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidParameter("t_max must be >= 1".into()));
    }
    let mut b = vec![vec![vec![0.0; t_max + 1]; m]; m];
    for i in 0..m {
        let mut flat = vec![0.0; m * (t_max + 1)];
        for j in 0..m {
            if p[i][j] == 0.0 {
                continue;
            }
            for t in 1..t_max {
                flat[j * (t_max + 1) + t] = p[i][j] * q[i] * (1.0 - q[i]).powi(t as i32 - 1);
            }
            // geometric pmf at t_max plus the whole tail: p * (1-q)^(t_max-1)
            flat[j * (t_max + 1) + t_max] = p[i][j] * (1.0 - q[i]).powi(t_max as i32 - 1);
        }
        close_row_gap(&mut flat);
        for j in 0..m {
            for t in 0..=t_max {
                b[i][j][t] = flat[j * (t_max + 1) + t];
            }
        }
    }
    Ok(SemiMarkovKernel {
        m,
        t_max,
        b,
        counts: None,
        fallback_rows: Vec::new(),
    })
}

/// One-step matrix of the Markov chain equivalent to a geometric kernel:
/// `M = diag(1-q) + diag(q) P`.
pub fn geometric_one_step(p: &[Vec<f64>], q: &[f64]) -> Vec<Vec<f64>> {
    let m = p.len();
    let mut mat = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            mat[i][j] = q[i] * p[i][j] + if i == j { 1.0 - q[i] } else { 0.0 };
        }
    }
    mat
}

/// Decomposes a one-step matrix with `M_ii < 1` into the embedded matrix and
/// per-state jump probabilities of the equivalent geometric kernel.
pub fn one_step_to_geometric(mat: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    validate_stochastic(mat)?;
    let m = mat.len();
    let mut p = vec![vec![0.0; m]; m];
    let mut q = vec![0.0; m];
    for i in 0..m {
        q[i] = 1.0 - mat[i][i];
        if q[i] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "state {i} is absorbing in the one-step matrix"
            )));
        }
        for j in 0..m {
            if j != i {
                p[i][j] = mat[i][j] / q[i];
            }
        }
        close_row_gap(&mut p[i]);
    }
    Ok((p, q))
}
