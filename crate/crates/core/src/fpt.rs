//! First-passage-time distributions of the accumulation factor.
//!
//! The first passage time is `lambda_rho = min{tau >= 0 : M_0(tau) >= rho}`
//! where `M_0(tau)` multiplies `(1 + return)` over the first `tau` return
//! slots (`M_0(0) = 1`). Two independent routes compute its survival function
//! `R(t) = P(lambda_rho > t)`:
//!
//! - [`fpt_within_day`] evaluates the marginal renewal equation directly,
//!   memoizing the fresh-state solutions `R_a(0, .; rho')` at the rescaled
//!   thresholds `rho' = rho / (1 + i*delta)^m` the recursion generates;
//! - [`fpt_joint_within_day`] and [`fpt_multi_day`] propagate the surviving
//!   joint measure over (state, backward time, accumulation value) one minute
//!   at a time, growing the accumulation grid constructively by multiplying
//!   grid factors and pruning values that reach `rho`.
//!
//! Accumulation values live in log space and are deduplicated within a
//! configurable tolerance; equality of products is resolved constructively
//! (multiply, then prune), never by comparing floats for equality. A day
//! boundary pushes each surviving atom through the overnight matrix, applies
//! the overnight state's factor, and restarts the next day from the overnight
//! state with backward time zero, so the boundary composition sits at
//! `t = n*k`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::kernel::{DerivedKernelViews, OvernightChain};
use crate::state::StateSpace;

/// Default log-space deduplication tolerance for accumulation values.
pub const DEFAULT_EPSILON_LOG: f64 = 1e-12;

/// Tuning knobs for the joint measure propagation.
#[derive(Debug, Clone)]
pub struct FptOptions {
    /// Merge tolerance for log accumulation values.
    pub epsilon_log: f64,
    /// Hard cap on the number of grid atoms; exceeding it is an error.
    pub grid_cap: Option<usize>,
    /// Atoms lighter than this are dropped; the lost mass is reported in the
    /// solution statistics. Zero keeps the propagation exact.
    pub mass_floor: f64,
    /// Retain the per-t joint grids on the solution.
    pub keep_joint: bool,
}

impl Default for FptOptions {
    fn default() -> Self {
        Self {
            epsilon_log: DEFAULT_EPSILON_LOG,
            grid_cap: None,
            mass_floor: 0.0,
            keep_joint: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Atom {
    logw: f64,
    mass: f64,
}

/// Surviving joint measure over (state, backward time, log accumulation).
///
/// Keys quantize the log accumulation by `epsilon_log`; merged atoms keep a
/// mass-weighted representative value. Iteration order is fixed, so repeated
/// runs produce identical results.
#[derive(Debug, Clone)]
pub struct FptMeasure {
    eps: f64,
    atoms: BTreeMap<(usize, usize, i64), Atom>,
}

impl FptMeasure {
    /// Measure concentrated on `(state, backward)` with initial log
    /// accumulation `logw0`, or empty when `logw0` already reaches `log_rho`.
    pub fn initial(state: usize, backward: usize, logw0: f64, log_rho: f64, eps: f64) -> Self {
        let mut measure = Self {
            eps,
            atoms: BTreeMap::new(),
        };
        if logw0 < log_rho {
            measure.push(state, backward, logw0, 1.0);
        }
        measure
    }

    fn empty_like(&self) -> Self {
        Self {
            eps: self.eps,
            atoms: BTreeMap::new(),
        }
    }

    fn push(&mut self, state: usize, backward: usize, logw: f64, mass: f64) {
        let bin = (logw / self.eps).round() as i64;
        match self.atoms.entry((state, backward, bin)) {
            Entry::Occupied(mut e) => {
                let a = e.get_mut();
                let total = a.mass + mass;
                a.logw = (a.logw * a.mass + logw * mass) / total;
                a.mass = total;
            }
            Entry::Vacant(e) => {
                e.insert(Atom { logw, mass });
            }
        }
    }

    /// Total surviving mass.
    pub fn total_mass(&self) -> f64 {
        // the empty sum is -0.0, which would leak a minus sign into output
        let sum: f64 = self.atoms.values().map(|a| a.mass).sum();
        if sum == 0.0 {
            0.0
        } else {
            sum
        }
    }

    /// Number of stored atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms as `(state, backward, log accumulation, mass)`.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.atoms
            .iter()
            .map(|(&(s, u, _), a)| (s, u, a.logw, a.mass))
    }

    /// Marginal grid over backward time: the joint law of (state, value).
    pub fn grid(&self, rho: f64) -> AccumulationGrid {
        let mut merged: BTreeMap<(usize, i64), Atom> = BTreeMap::new();
        for (&(s, _, bin), a) in &self.atoms {
            match merged.entry((s, bin)) {
                Entry::Occupied(mut e) => {
                    let cur = e.get_mut();
                    let total = cur.mass + a.mass;
                    cur.logw = (cur.logw * cur.mass + a.logw * a.mass) / total;
                    cur.mass = total;
                }
                Entry::Vacant(e) => {
                    e.insert(*a);
                }
            }
        }
        AccumulationGrid {
            rho,
            epsilon_log: self.eps,
            values: merged
                .into_iter()
                .map(|((s, _), a)| JointAtom {
                    state: s,
                    w: a.logw.exp(),
                    mass: a.mass,
                })
                .collect(),
        }
    }

    fn apply_floor(&mut self, floor: f64) -> f64 {
        if floor <= 0.0 {
            return 0.0;
        }
        let mut lost = 0.0;
        self.atoms.retain(|_, a| {
            if a.mass < floor {
                lost += a.mass;
                false
            } else {
                true
            }
        });
        lost
    }

    fn check_cap(&self, cap: Option<usize>) -> Result<()> {
        if let Some(cap) = cap {
            if self.atoms.len() > cap {
                return Err(Error::GridCapExceeded {
                    size: self.atoms.len(),
                    cap,
                });
            }
        }
        Ok(())
    }
}

/// Joint grid of surviving accumulation values at one time point.
#[derive(Debug, Clone)]
pub struct AccumulationGrid {
    /// Threshold the grid was pruned against; every stored value is < rho.
    pub rho: f64,
    /// Deduplication tolerance of the log values.
    pub epsilon_log: f64,
    /// Atoms ordered by state, then value.
    pub values: Vec<JointAtom>,
}

/// One surviving accumulation atom `(state, value, mass)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAtom {
    pub state: usize,
    pub w: f64,
    pub mass: f64,
}

/// Advances the surviving measure by one intraday minute: the current state's
/// factor multiplies in, values reaching `rho` are absorbed, and the
/// (state, backward) pair evolves by the sojourn hazard.
///
/// Returns the new measure, the crossed mass, and the mass dropped by the
/// floor.
pub fn fpt_step_within_day(
    views: &DerivedKernelViews,
    measure: &FptMeasure,
    log_factors: &[f64],
    log_rho: f64,
    opts: &FptOptions,
) -> Result<(FptMeasure, f64, f64)> {
    let mut out = measure.empty_like();
    let mut crossed = 0.0;
    for (&(state, u, _), atom) in &measure.atoms {
        let denom = views.survival(state, u);
        if denom <= 0.0 || atom.mass == 0.0 {
            continue;
        }
        let xp = atom.logw + log_factors[state];
        if xp >= log_rho {
            crossed += atom.mass;
            continue;
        }
        let stay = views.survival(state, u + 1) / denom;
        if stay > 0.0 {
            out.push(state, u + 1, xp, atom.mass * stay);
        }
        for k in 0..views.m {
            let b = views.increment(state, k, u + 1);
            if b != 0.0 {
                out.push(k, 0, xp, atom.mass * b / denom);
            }
        }
    }
    let lost = out.apply_floor(opts.mass_floor);
    out.check_cap(opts.grid_cap)?;
    Ok((out, crossed, lost))
}

/// Applies the last intraday factor of a day without evolving the sojourn:
/// the run in progress is truncated at the close (mirroring the estimator's
/// censoring), so the measure keeps the last intraday state for the
/// overnight draw.
pub fn fpt_step_day_close(
    measure: &FptMeasure,
    log_factors: &[f64],
    log_rho: f64,
    opts: &FptOptions,
) -> Result<(FptMeasure, f64, f64)> {
    let mut out = measure.empty_like();
    let mut crossed = 0.0;
    for (&(state, u, _), atom) in &measure.atoms {
        let xp = atom.logw + log_factors[state];
        if xp >= log_rho {
            crossed += atom.mass;
        } else {
            out.push(state, u, xp, atom.mass);
        }
    }
    let lost = out.apply_floor(opts.mass_floor);
    out.check_cap(opts.grid_cap)?;
    Ok((out, crossed, lost))
}

/// Pushes the surviving measure through a day boundary: the overnight state
/// is drawn from the row of the last intraday state, its factor multiplies in
/// (pruning values that reach `rho`), and the next day restarts from the
/// overnight state with backward time zero.
pub fn fpt_day_boundary(
    measure: &FptMeasure,
    overnight: &OvernightChain,
    log_factors: &[f64],
    log_rho: f64,
    opts: &FptOptions,
) -> Result<(FptMeasure, f64, f64)> {
    let mut out = measure.empty_like();
    let mut crossed = 0.0;
    for (&(state, _, _), atom) in &measure.atoms {
        for (j, &w) in overnight.t[state].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let xp = atom.logw + log_factors[j];
            let mass = atom.mass * w;
            if xp >= log_rho {
                crossed += mass;
            } else {
                out.push(j, 0, xp, mass);
            }
        }
    }
    let lost = out.apply_floor(opts.mass_floor);
    out.check_cap(opts.grid_cap)?;
    Ok((out, crossed, lost))
}

/// Grid-size and mass-accounting statistics of one solve.
#[derive(Debug, Clone, Default)]
pub struct GridStats {
    /// Largest atom count over the run.
    pub max_atoms: usize,
    /// Atom count of the final measure.
    pub final_atoms: usize,
    /// Total mass dropped by the floor.
    pub discarded_mass: f64,
}

/// Survival function, first-passage pmf, and (optionally) the per-t joint
/// grids of one first-passage solve.
#[derive(Debug, Clone)]
pub struct FptSolution {
    pub rho: f64,
    /// `P(lambda_rho > t)` for t = 0..=horizon.
    pub survival: Vec<f64>,
    /// `P(lambda_rho = t) = R(t-1) - R(t)` with `R(-1) = 1`.
    pub pmf: Vec<f64>,
    /// Joint grids per t when requested.
    pub joint: Option<Vec<AccumulationGrid>>,
    pub stats: GridStats,
}

/// `pmf[t] = R(t-1) - R(t)` with `R(-1) = 1`.
pub fn pmf_from_survival(survival: &[f64]) -> Vec<f64> {
    let mut prev = 1.0;
    survival
        .iter()
        .map(|&r| {
            let p = prev - r;
            prev = r;
            p
        })
        .collect()
}

fn validate_rho(rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be > 0")));
    }
    Ok(rho.ln())
}

#[allow(clippy::too_many_arguments)]
fn run_joint(
    views: &DerivedKernelViews,
    space: &StateSpace,
    overnight: Option<&OvernightChain>,
    state: usize,
    v: usize,
    rho: f64,
    n_per_day: Option<usize>,
    horizon: usize,
    opts: &FptOptions,
) -> Result<FptSolution> {
    let log_rho = validate_rho(rho)?;
    if views.survival(state, v) <= 0.0 {
        return Err(Error::BackwardPrecondition { state, v });
    }
    let lf = space.log_factors();
    let mut measure = FptMeasure::initial(state, v, 0.0, log_rho, opts.epsilon_log);
    let mut stats = GridStats {
        max_atoms: measure.len(),
        ..Default::default()
    };
    let mut joint = if opts.keep_joint { Some(Vec::new()) } else { None };

    // survival decreases only by explicitly crossed or discarded mass, so the
    // emitted pmf is nonnegative by construction
    let mut live = measure.total_mass();
    let mut survival = Vec::with_capacity(horizon + 1);
    survival.push(live);
    if let Some(j) = joint.as_mut() {
        j.push(measure.grid(rho));
    }
    for t in 1..=horizon {
        let (next, crossed, lost) = match n_per_day {
            Some(n) if t % n == 0 => {
                let chain = overnight.ok_or_else(|| {
                    Error::InvalidParameter(
                        "horizon spans a day boundary but no overnight chain given".into(),
                    )
                })?;
                fpt_day_boundary(&measure, chain, &lf, log_rho, opts)?
            }
            // the day's last intraday slot: the running sojourn truncates
            Some(n) if t % n == n - 1 => fpt_step_day_close(&measure, &lf, log_rho, opts)?,
            _ => fpt_step_within_day(views, &measure, &lf, log_rho, opts)?,
        };
        measure = next;
        live -= crossed + lost;
        stats.discarded_mass += lost;
        stats.max_atoms = stats.max_atoms.max(measure.len());
        survival.push(live);
        if let Some(j) = joint.as_mut() {
            j.push(measure.grid(rho));
        }
    }
    stats.final_atoms = measure.len();
    let pmf = pmf_from_survival(&survival);
    Ok(FptSolution {
        rho,
        survival,
        pmf,
        joint,
        stats,
    })
}

/// Joint first-passage solve within a single day (no boundary crossing),
/// tracking the terminal state and accumulation value per t up to `t_upto`.
pub fn fpt_joint_within_day(
    views: &DerivedKernelViews,
    space: &StateSpace,
    state: usize,
    v: usize,
    rho: f64,
    t_upto: usize,
    opts: &FptOptions,
) -> Result<FptSolution> {
    run_joint(views, space, None, state, v, rho, None, t_upto, opts)
}

/// Full first-passage solve over `day_count` days of `n_per_day` minutes:
/// within-day propagation alternating with day-boundary pushes at t = n*k,
/// covering t = 0..=n*day_count.
#[allow(clippy::too_many_arguments)]
pub fn fpt_multi_day(
    views: &DerivedKernelViews,
    space: &StateSpace,
    overnight: &OvernightChain,
    state: usize,
    v: usize,
    rho: f64,
    n_per_day: usize,
    day_count: usize,
    opts: &FptOptions,
) -> Result<FptSolution> {
    if n_per_day < 2 || day_count < 1 {
        return Err(Error::InvalidParameter(
            "need n_per_day >= 2 and day_count >= 1".into(),
        ));
    }
    run_joint(
        views,
        space,
        Some(overnight),
        state,
        v,
        rho,
        Some(n_per_day),
        n_per_day * day_count,
        opts,
    )
}

type Memo = HashMap<(usize, i64), Vec<f64>>;

#[inline]
fn memo_key(state: usize, log_rho: f64) -> (usize, i64) {
    (state, (log_rho / DEFAULT_EPSILON_LOG).round() as i64)
}

/// Marginal within-day survival `R_i(v, t; rho)` for t = 0..=t_upto via the
/// renewal equation:
///
/// ```text
/// R_i(v, t; rho) = 1{(1+i delta)^t < rho} (1 - H_i(t+v)) / (1 - H_i(v))
///   + sum_a sum_{m=1..t} b_ia(v+m) / (1 - H_i(v)) 1{(1+i delta)^m < rho}
///     * R_a(0, t-m; rho / (1+i delta)^m)
/// ```
///
/// Thresholds are compared in log space; the fresh-state sub-solutions are
/// memoized per (state, rescaled threshold).
pub fn fpt_within_day(
    views: &DerivedKernelViews,
    space: &StateSpace,
    state: usize,
    v: usize,
    rho: f64,
    t_upto: usize,
) -> Result<Vec<f64>> {
    let log_rho = validate_rho(rho)?;
    let denom = views.survival(state, v);
    if denom <= 0.0 {
        return Err(Error::BackwardPrecondition { state, v });
    }
    if log_rho <= 0.0 {
        return Ok(vec![0.0; t_upto + 1]);
    }
    let lf = space.log_factors();
    let lf_max = lf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut memo: Memo = HashMap::new();
    let mut out = Vec::with_capacity(t_upto + 1);
    out.push(1.0);
    for t in 1..=t_upto {
        let mut acc = if (t as f64) * lf[state] < log_rho {
            views.survival(state, t + v) / denom
        } else {
            0.0
        };
        for m_jump in 1..=t {
            // once the pre-jump run itself crosses, longer runs do too
            if (m_jump as f64) * lf[state] >= log_rho {
                break;
            }
            let sub_rho = log_rho - m_jump as f64 * lf[state];
            for a in 0..views.m {
                let b = views.increment(state, a, v + m_jump);
                if b != 0.0 {
                    let r = fresh_survival(views, &lf, lf_max, a, sub_rho, t - m_jump, &mut memo);
                    acc += b / denom * r;
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `R_a(0, t; rho')`, memoized.
fn fresh_survival(
    views: &DerivedKernelViews,
    lf: &[f64],
    lf_max: f64,
    state: usize,
    log_rho: f64,
    t: usize,
    memo: &mut Memo,
) -> f64 {
    if log_rho <= 0.0 {
        return 0.0;
    }
    if (t as f64) * lf_max < log_rho {
        // the threshold is unreachable even under maximal growth
        return 1.0;
    }
    let key = memo_key(state, log_rho);
    if let Some(vec) = memo.get(&key) {
        if vec.len() > t {
            return vec[t];
        }
    }
    compute_fresh(views, lf, lf_max, state, log_rho, t, memo);
    memo[&key][t]
}

/// Builds the memo entry for `(state, log_rho)` up to horizon `t_need` by the
/// v = 0 renewal recursion, recursing into child thresholds on demand.
fn compute_fresh(
    views: &DerivedKernelViews,
    lf: &[f64],
    lf_max: f64,
    state: usize,
    log_rho: f64,
    t_need: usize,
    memo: &mut Memo,
) {
    let mut vec = vec![0.0; t_need + 1];
    vec[0] = 1.0;
    for t in 1..=t_need {
        let mut acc = if (t as f64) * lf[state] < log_rho {
            views.survival(state, t)
        } else {
            0.0
        };
        for s in 1..=t.min(views.t_max) {
            if (s as f64) * lf[state] >= log_rho {
                break;
            }
            let sub_rho = log_rho - s as f64 * lf[state];
            for a in 0..views.m {
                let b = views.b[state][a][s];
                if b != 0.0 {
                    acc += b * fresh_survival(views, lf, lf_max, a, sub_rho, t - s, memo);
                }
            }
        }
        vec[t] = acc;
    }
    let key = memo_key(state, log_rho);
    let replace = memo.get(&key).map_or(true, |old| old.len() < vec.len());
    if replace {
        memo.insert(key, vec);
    }
}
