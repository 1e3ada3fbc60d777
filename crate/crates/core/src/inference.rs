//! Nonparametric test of geometric sojourn times.
//!
//! Under the geometric (Markov) hypothesis the conditional sojourn pmf
//! satisfies `g(1)(1 - g(1)) - g(2) = 0`, so a strong deviation from that
//! equality is evidence for the semi-Markov model. The per-pair statistic
//!
//! ```text
//! S_ij = sqrt(N(i,j)) (g1 (1 - g1) - g2) / sqrt(g1 (1 - g1)^2 (2 - g1))
//! ```
//!
//! with `g1 = g_ij(1)`, `g2 = g_ij(2)` estimated from the transition counts,
//! is approximately standard normal under the null.

use crate::error::{Error, Result};
use crate::kernel::{DerivedKernelViews, SemiMarkovKernel};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Conditional sojourn pmf `g_ij(t)` for t = 0..=t_max (index 0 unused).
///
/// When the kernel carries counts the empirical ratio
/// `#(i -> j with sojourn exactly t) / N(i,j)` is used; otherwise the pmf is
/// differenced from `G_ij`: `g(1) = G(1)`, `g(t) = G(t) - G(t-1)`.
pub fn sojourn_pmf(
    kernel: &SemiMarkovKernel,
    views: &DerivedKernelViews,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    if let Some(counts) = &kernel.counts {
        let n: u64 = counts[i][j].iter().sum();
        if n == 0 {
            return Err(Error::NoTransitions { i, j });
        }
        return Ok(counts[i][j]
            .iter()
            .map(|&c| c as f64 / n as f64)
            .collect());
    }
    if views.p[i][j] == 0.0 {
        return Err(Error::NoTransitions { i, j });
    }
    let g = &views.g[i][j];
    let mut pmf = vec![0.0; views.t_max + 1];
    for t in 1..=views.t_max {
        pmf[t] = if t == 1 { g[1] } else { g[t] - g[t - 1] };
    }
    Ok(pmf)
}

/// The test statistic; requires `0 < g1 < 1` for the variance estimate to be
/// positive.
pub fn test_statistic(g1: f64, g2: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one transition".into()));
    }
    if !(g1 > 0.0 && g1 < 1.0) {
        return Err(Error::StatisticUndefined { g1 });
    }
    let numer = (n as f64).sqrt() * (g1 * (1.0 - g1) - g2);
    let denom = (g1 * (1.0 - g1).powi(2) * (2.0 - g1)).sqrt();
    Ok(numer / denom)
}

/// Two-sided standard-normal critical value at level `alpha`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// One tested state pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairTest {
    pub i: usize,
    pub j: usize,
    pub n: u64,
    pub g1: f64,
    pub g2: f64,
    pub score: f64,
    pub p_value: f64,
    /// `|score|` exceeds the critical value.
    pub reject: bool,
    /// `n` lies below the small-sample floor; the normal approximation is
    /// asymptotic, so treat the decision with care.
    pub low_sample: bool,
}

/// A pair that could not be tested.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedPair {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

/// Decision report over every ordered state pair.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub alpha: f64,
    pub critical: f64,
    pub low_sample_floor: u64,
    pub rows: Vec<PairTest>,
    pub skipped: Vec<SkippedPair>,
    /// Number of rejected pairs among the tested ones.
    pub rejected: usize,
}

/// Runs the geometric-sojourn test for every ordered pair `i != j` with
/// observed transitions, at two-sided level `alpha`. Pairs whose statistic is
/// undefined (no transitions, or `g1` on the boundary) land in the skip list.
pub fn run_tests(kernel: &SemiMarkovKernel, alpha: f64, low_sample_floor: u64) -> Result<TestReport> {
    let counts = kernel
        .counts
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("kernel carries no counts".into()))?;
    let critical = critical_value(alpha)?;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..kernel.m {
        for j in 0..kernel.m {
            if i == j {
                continue;
            }
            let n: u64 = counts[i][j].iter().sum();
            if n == 0 {
                skipped.push(SkippedPair {
                    i,
                    j,
                    reason: "no observed transitions".into(),
                });
                continue;
            }
            let g1 = counts[i][j].get(1).copied().unwrap_or(0) as f64 / n as f64;
            let g2 = counts[i][j].get(2).copied().unwrap_or(0) as f64 / n as f64;
            match test_statistic(g1, g2, n) {
                Ok(score) => {
                    let p_value = 2.0 * (1.0 - normal.cdf(score.abs()));
                    rows.push(PairTest {
                        i,
                        j,
                        n,
                        g1,
                        g2,
                        score,
                        p_value,
                        reject: score.abs() > critical,
                        low_sample: n < low_sample_floor,
                    });
                }
                Err(e) => skipped.push(SkippedPair {
                    i,
                    j,
                    reason: e.to_string(),
                }),
            }
        }
    }
    let rejected = rows.iter().filter(|r| r.reject).count();
    Ok(TestReport {
        alpha,
        critical,
        low_sample_floor,
        rows,
        skipped,
        rejected,
    })
}
