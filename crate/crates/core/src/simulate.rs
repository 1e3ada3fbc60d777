//! Seeded simulation of the fitted model and empirical estimators used as
//! Monte Carlo cross-checks.
//!
//! All randomness flows through ChaCha8 seeded with a caller 64-bit seed, and
//! every discrete draw inverts the cumulative distribution with a single
//! uniform, so output is byte-identical across platforms and runs.
//! Replication batches split the seed into independent per-replication
//! streams, which keeps parallel execution deterministic regardless of
//! scheduling.
//!
//! The simulator mirrors the solver conventions exactly: each day fills
//! `n - 1` return slots by successive (next state, sojourn) draws with the
//! final sojourn truncated at the close, the overnight state is drawn from
//! the row of the last intraday state, and the next day restarts from the
//! overnight state with backward value zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{validate_stochastic, DerivedKernelViews, OvernightChain};
use crate::par;
use crate::state::{DiscretizedPath, StateSpace};

/// Which fitted model drives a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    SemiMarkov,
    MarkovBaseline,
}

/// Simulation run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Replication stream carved out of the seed; batches give each
    /// replication its own stream so they can run in any order.
    #[serde(default)]
    pub stream: u64,
    /// Number of trading days.
    pub days: usize,
    /// Minutes per day; each day carries `n - 1` return slots.
    pub n: usize,
    pub initial_state: usize,
    /// Backward value already elapsed in the initial state at the first open.
    pub initial_backward: usize,
    pub model: ModelKind,
}

impl SimConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.n < 2 || self.days == 0 {
            return Err(Error::InvalidDayStructure(format!(
                "n = {}, days = {}",
                self.n, self.days
            )));
        }
        if self.initial_state >= m {
            return Err(Error::InvalidParameter(format!(
                "initial state {} outside 0..{m}",
                self.initial_state
            )));
        }
        Ok(())
    }
}

/// Inverse-cdf draw over a weight row.
fn draw_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = i;
        if u < cum {
            return i;
        }
    }
    last
}

/// Draws `(next state, total sojourn)` conditioned on `total > elapsed`, via
/// inverse cdf over the kernel increments in (time, state) order. `None` for
/// an absorbing state.
fn draw_jump(
    views: &DerivedKernelViews,
    state: usize,
    elapsed: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, usize)> {
    let denom = views.survival(state, elapsed);
    if views.survival(state, views.t_max) > 0.0 {
        // absorbing: no kernel mass at all
        return None;
    }
    let u: f64 = rng.gen::<f64>() * denom;
    let mut cum = 0.0;
    let mut last = None;
    for t in elapsed + 1..=views.t_max {
        for j in 0..views.m {
            let b = views.b[state][j][t];
            if b <= 0.0 {
                continue;
            }
            cum += b;
            last = Some((j, t));
            if u < cum {
                return last;
            }
        }
    }
    last
}

/// Simulates a semi-Markov trajectory over the configured day structure.
pub fn simulate_smp(
    views: &DerivedKernelViews,
    overnight: &OvernightChain,
    cfg: &SimConfig,
) -> Result<DiscretizedPath> {
    cfg.validate(views.m)?;
    if views.survival(cfg.initial_state, cfg.initial_backward) <= 0.0 {
        return Err(Error::BackwardPrecondition {
            state: cfg.initial_state,
            v: cfg.initial_backward,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);
    let slots = cfg.n - 1;
    let mut days = Vec::with_capacity(cfg.days);
    let mut overnights = Vec::with_capacity(cfg.days.saturating_sub(1));
    let mut state = cfg.initial_state;
    let mut elapsed = cfg.initial_backward;
    for k in 0..cfg.days {
        let mut seq = Vec::with_capacity(slots);
        let mut cur = state;
        let mut spent = elapsed;
        while seq.len() < slots {
            match draw_jump(views, cur, spent, &mut rng) {
                None => {
                    while seq.len() < slots {
                        seq.push(cur);
                    }
                }
                Some((next, total)) => {
                    for _ in 0..total - spent {
                        seq.push(cur);
                        if seq.len() == slots {
                            break;
                        }
                    }
                    // the drawn jump fires only if the day has room left;
                    // otherwise the sojourn is truncated at the close
                    cur = next;
                    spent = 0;
                }
            }
        }
        let last = *seq.last().expect("slots >= 1");
        days.push(seq);
        if k + 1 < cfg.days {
            let x = draw_index(&mut rng, &overnight.t[last]);
            overnights.push(x);
            state = x;
            elapsed = 0;
        }
    }
    Ok(DiscretizedPath {
        m: views.m,
        days,
        overnight: overnights,
    })
}

/// Simulates the one-step Markov baseline over the same day structure; the
/// chain runs unbroken through day boundaries (the overnight state is one
/// more draw of the same matrix).
pub fn simulate_markov(mat: &[Vec<f64>], cfg: &SimConfig) -> Result<DiscretizedPath> {
    validate_stochastic(mat)?;
    cfg.validate(mat.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);
    let slots = cfg.n - 1;
    let mut days = Vec::with_capacity(cfg.days);
    let mut overnights = Vec::with_capacity(cfg.days.saturating_sub(1));
    let mut state = cfg.initial_state;
    for k in 0..cfg.days {
        let mut seq = Vec::with_capacity(slots);
        if k == 0 {
            seq.push(state);
        } else {
            state = draw_index(&mut rng, &mat[state]);
            seq.push(state);
        }
        while seq.len() < slots {
            state = draw_index(&mut rng, &mat[state]);
            seq.push(state);
        }
        days.push(seq);
        if k + 1 < cfg.days {
            state = draw_index(&mut rng, &mat[state]);
            overnights.push(state);
        }
    }
    Ok(DiscretizedPath {
        m: mat.len(),
        days,
        overnight: overnights,
    })
}

/// Empirical first-passage estimate from overlapping scans of a path.
#[derive(Debug, Clone)]
pub struct EmpiricalFpt {
    /// Kaplan-Meier survival estimate for t = 0..=t_upto.
    pub survival: Vec<f64>,
    /// Differenced pmf.
    pub pmf: Vec<f64>,
    pub n_scans: usize,
    /// Scans that ran off the end of the path before crossing.
    pub n_censored: usize,
}

/// Scans the combined return sequence from stride-sampled start indices,
/// accumulating the log accumulation factor until it reaches `ln rho`; scans
/// that exhaust the path are right-censored and enter the standard
/// product-limit estimator.
pub fn empirical_fpt(
    path: &DiscretizedPath,
    space: &StateSpace,
    rho: f64,
    stride: usize,
    t_upto: usize,
) -> Result<EmpiricalFpt> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be > 0")));
    }
    let log_rho = rho.ln();
    let lf = space.log_factors();
    let w: Vec<f64> = path.w_sequence().iter().map(|&s| lf[s]).collect();
    if w.is_empty() {
        return Err(Error::EmptyPath);
    }
    // (time, crossed) per scan, truncated to the estimation window
    let mut events: Vec<(usize, bool)> = Vec::new();
    let mut n_censored = 0;
    let mut start = 0;
    while start < w.len() {
        if log_rho <= 0.0 {
            events.push((0, true));
        } else {
            let mut cum = 0.0;
            let mut hit = None;
            for (k, &f) in w[start..].iter().enumerate() {
                cum += f;
                if cum >= log_rho {
                    hit = Some(k + 1);
                    break;
                }
            }
            match hit {
                Some(t) => events.push((t, true)),
                None => {
                    n_censored += 1;
                    events.push((w.len() - start, false));
                }
            }
        }
        start += stride;
    }
    // product-limit estimator on the discrete time grid
    let mut deaths = vec![0usize; t_upto + 1];
    let mut leaves = vec![0usize; t_upto + 2];
    for &(t, crossed) in &events {
        if t <= t_upto {
            if crossed {
                deaths[t] += 1;
            }
            leaves[t + 1] += 1;
        }
    }
    let mut at_risk = events.len();
    let mut s = 1.0;
    let mut survival = Vec::with_capacity(t_upto + 1);
    for t in 0..=t_upto {
        at_risk -= leaves[t];
        if at_risk > 0 && deaths[t] > 0 {
            s *= 1.0 - deaths[t] as f64 / at_risk as f64;
        }
        survival.push(s);
    }
    let pmf = crate::fpt::pmf_from_survival(&survival);
    Ok(EmpiricalFpt {
        survival,
        pmf,
        n_scans: events.len(),
        n_censored,
    })
}

/// Empirical autocorrelation of squared returns, lags 0..=tau_max, computed
/// within days only (no pair spans a boundary) and normalized by lag 0.
pub fn empirical_sq_acf(
    path: &DiscretizedPath,
    space: &StateSpace,
    tau_max: usize,
) -> Result<Vec<f64>> {
    let sq: Vec<f64> = space.states.iter().map(|&s| s * s).collect();
    let days: Vec<Vec<f64>> = path
        .days
        .iter()
        .map(|d| d.iter().map(|&s| sq[s]).collect())
        .collect();
    let total: usize = days.iter().map(|d| d.len()).sum();
    if total == 0 {
        return Err(Error::EmptyPath);
    }
    if !days.iter().any(|d| d.len() > tau_max) {
        return Err(Error::InvalidParameter(format!(
            "tau_max = {tau_max} leaves no within-day pairs"
        )));
    }
    let mean: f64 = days.iter().flat_map(|d| d.iter()).sum::<f64>() / total as f64;
    let mut acf = Vec::with_capacity(tau_max + 1);
    for tau in 0..=tau_max {
        let mut acc = 0.0;
        let mut pairs = 0usize;
        for d in &days {
            if d.len() <= tau {
                continue;
            }
            for t in 0..d.len() - tau {
                acc += (d[t] - mean) * (d[t + tau] - mean);
                pairs += 1;
            }
        }
        acf.push(acc / pairs as f64);
    }
    if acf[0] <= 0.0 {
        return Err(Error::ZeroVariance(
            "squared returns are constant; autocorrelation undefined".into(),
        ));
    }
    let c0 = acf[0];
    Ok(acf.into_iter().map(|c| c / c0).collect())
}

/// Monte Carlo estimate of a first-passage survival curve.
#[derive(Debug, Clone)]
pub struct McCurve {
    pub survival: Vec<f64>,
    /// Binomial standard error per time point.
    pub se: Vec<f64>,
    pub n_paths: usize,
}

/// Estimates `P(lambda_rho > t)` for t = 0..=horizon by simulating
/// independent trajectories from `(state, v)` under the full day structure.
/// Replications run on per-path ChaCha streams, parallelized in chunks; the
/// merged counts are integers, so the estimate is deterministic.
#[allow(clippy::too_many_arguments)]
pub fn mc_fpt_survival(
    views: &DerivedKernelViews,
    overnight: &OvernightChain,
    space: &StateSpace,
    state: usize,
    v: usize,
    rho: f64,
    n_per_day: usize,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<McCurve> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be > 0")));
    }
    if views.survival(state, v) <= 0.0 {
        return Err(Error::BackwardPrecondition { state, v });
    }
    let log_rho = rho.ln();
    let lf = space.log_factors();
    let chunks = 512.min(n_paths.max(1));
    let per_chunk = n_paths.div_ceil(chunks);
    let counts = par::sum_counts(chunks, horizon + 2, |chunk| {
        let mut hist = vec![0u64; horizon + 2];
        let lo = chunk * per_chunk;
        let hi = ((chunk + 1) * per_chunk).min(n_paths);
        for path_idx in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path_idx as u64 + 1);
            let lambda = walk_lambda(
                views, overnight, &lf, state, v, log_rho, n_per_day, horizon, &mut rng,
            );
            hist[lambda.min(horizon + 1)] += 1;
        }
        hist
    });
    // survival from the crossing-time histogram
    let mut crossed_so_far = 0u64;
    let mut survival = Vec::with_capacity(horizon + 1);
    let mut se = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        crossed_so_far += counts[t];
        let p = 1.0 - crossed_so_far as f64 / n_paths as f64;
        survival.push(p);
        se.push((p * (1.0 - p) / n_paths as f64).sqrt());
    }
    Ok(McCurve {
        survival,
        se,
        n_paths,
    })
}

/// First crossing time of one simulated trajectory, or `horizon + 1` if it
/// survives the whole window.
#[allow(clippy::too_many_arguments)]
fn walk_lambda(
    views: &DerivedKernelViews,
    overnight: &OvernightChain,
    lf: &[f64],
    state0: usize,
    v: usize,
    log_rho: f64,
    n_per_day: usize,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    if log_rho <= 0.0 {
        return 0;
    }
    let slots = n_per_day - 1;
    let mut cum = 0.0;
    let mut t = 0usize;
    let mut state = state0;
    let mut elapsed = v;
    loop {
        // one day of intraday slots
        let mut filled = 0usize;
        let mut cur = state;
        let mut spent = elapsed;
        'day: while filled < slots {
            let (next, total) = match draw_jump(views, cur, spent, rng) {
                Some(pair) => pair,
                None => (cur, spent + slots), // absorbing: run to the close
            };
            for _ in 0..total - spent {
                cum += lf[cur];
                t += 1;
                filled += 1;
                if cum >= log_rho {
                    return t;
                }
                if t > horizon {
                    return horizon + 1;
                }
                if filled == slots {
                    break 'day;
                }
            }
            cur = next;
            spent = 0;
        }
        // overnight slot, conditioned on the last intraday state
        let x = draw_index(rng, &overnight.t[cur]);
        cum += lf[x];
        t += 1;
        if cum >= log_rho {
            return t;
        }
        if t > horizon {
            return horizon + 1;
        }
        state = x;
        elapsed = 0;
    }
}
