//! State space, return computation, discretization, and day-structured paths.
//!
//! Prices are sampled once per minute and organized by trading day. Intraday
//! returns are one-minute relative increments within a day; the overnight
//! return bridges each close to the next open. Raw returns are mapped onto a
//! symmetric grid of states `{-z_min*delta, ..., 0, ..., z_max*delta}` whose
//! bins are delimited by strictly increasing thresholds.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Symmetric discretized return grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpace {
    /// Grid step (dimensionless return per minute).
    pub delta: f64,
    /// Number of negative states.
    pub z_min: usize,
    /// Number of positive states.
    pub z_max: usize,
    /// Ordered state values `(i - z_min) * delta`, strictly increasing.
    pub states: Vec<f64>,
    /// Strictly increasing cut points; a raw return maps to the number of
    /// thresholds that are <= it (boundary values go to the upper bin).
    pub thresholds: Vec<f64>,
}

impl StateSpace {
    /// Symmetric space with thresholds at the midpoints between grid values
    /// (for the 5-state default: +-delta/2, +-3*delta/2).
    pub fn symmetric(delta: f64, z_min: usize, z_max: usize) -> Result<Self> {
        let m = z_min + z_max + 1;
        let thresholds: Vec<f64> = (0..m - 1)
            .map(|k| (k as f64 - z_min as f64 + 0.5) * delta)
            .collect();
        Self::with_thresholds(delta, z_min, z_max, thresholds)
    }

    /// Grid symmetric in log returns: state values `exp(k * delta_log) - 1`
    /// for k = -z_min..=z_max, thresholds at the log midpoints. Products of
    /// accumulation factors then live on a one-dimensional log lattice, which
    /// keeps first-passage grids exactly collapsible.
    pub fn log_symmetric(delta_log: f64, z_min: usize, z_max: usize) -> Result<Self> {
        if !(delta_log > 0.0) {
            return Err(Error::InvalidStateSpace(format!(
                "delta_log = {delta_log} must be > 0"
            )));
        }
        let m = z_min + z_max + 1;
        if m < 2 {
            return Err(Error::InvalidStateSpace("need at least 2 states".into()));
        }
        let states: Vec<f64> = (0..m)
            .map(|i| ((i as f64 - z_min as f64) * delta_log).exp() - 1.0)
            .collect();
        let thresholds: Vec<f64> = (0..m - 1)
            .map(|k| ((k as f64 - z_min as f64 + 0.5) * delta_log).exp() - 1.0)
            .collect();
        Ok(Self {
            delta: delta_log,
            z_min,
            z_max,
            states,
            thresholds,
        })
    }

    /// Space with caller-supplied thresholds (e.g. empirical quantiles).
    pub fn with_thresholds(
        delta: f64,
        z_min: usize,
        z_max: usize,
        thresholds: Vec<f64>,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidStateSpace(format!("delta = {delta} must be > 0")));
        }
        let m = z_min + z_max + 1;
        if m < 2 {
            return Err(Error::InvalidStateSpace("need at least 2 states".into()));
        }
        if thresholds.len() != m - 1 {
            return Err(Error::InvalidStateSpace(format!(
                "need {} thresholds for {} states, got {}",
                m - 1,
                m,
                thresholds.len()
            )));
        }
        if !thresholds.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidStateSpace(
                "thresholds must be strictly increasing".into(),
            ));
        }
        let states: Vec<f64> = (0..m).map(|i| (i as f64 - z_min as f64) * delta).collect();
        if 1.0 + states[0] <= 0.0 {
            return Err(Error::InvalidStateSpace(format!(
                "1 + {} <= 0: accumulation factors must stay positive",
                states[0]
            )));
        }
        Ok(Self {
            delta,
            z_min,
            z_max,
            states,
            thresholds,
        })
    }

    /// Thresholds at the `k/m` empirical quantiles of `returns` (one way to
    /// balance bin occupancy when the symmetric cut points fit the data badly).
    pub fn quantile_thresholds(returns: &[f64], m: usize) -> Result<Vec<f64>> {
        if returns.is_empty() {
            return Err(Error::EmptyPath);
        }
        let mut sorted = returns.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut thr = Vec::with_capacity(m - 1);
        for k in 1..m {
            let pos = (k as f64 / m as f64) * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let q = if lo + 1 < sorted.len() {
                sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
            } else {
                sorted[lo]
            };
            thr.push(q);
        }
        if !thr.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidStateSpace(
                "quantile thresholds are not strictly increasing; data too discrete".into(),
            ));
        }
        Ok(thr)
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Return value of state `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        self.states[idx]
    }

    /// Index of the zero-return state, if the grid contains it.
    pub fn zero_state(&self) -> usize {
        self.z_min
    }

    /// Maps a raw return to its state index: the number of thresholds <= r,
    /// so a return exactly on a cut point goes to the upper bin.
    pub fn classify(&self, r: f64) -> usize {
        self.thresholds.iter().take_while(|&&t| t <= r).count()
    }

    /// `ln(1 + value)` per state, used by the accumulation-factor solvers.
    pub fn log_factors(&self) -> Vec<f64> {
        self.states.iter().map(|&s| (1.0 + s).ln()).collect()
    }
}

/// Trading-day layout: nominal minutes per day plus per-day effective lengths
/// (shortened sessions keep only their effective minutes).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayStructure {
    /// Nominal unit periods (minutes) per day.
    pub n: usize,
    /// Effective minutes per day, each <= n.
    pub lengths: Vec<usize>,
}

impl DayStructure {
    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::with_lengths(n, vec![n; d])
    }

    pub fn with_lengths(n: usize, lengths: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDayStructure(format!("n = {n} must be >= 2")));
        }
        if lengths.is_empty() {
            return Err(Error::InvalidDayStructure("need at least one day".into()));
        }
        if let Some(&bad) = lengths.iter().find(|&&l| l < 2 || l > n) {
            return Err(Error::InvalidDayStructure(format!(
                "effective day length {bad} outside [2, {n}]"
            )));
        }
        Ok(Self { n, lengths })
    }

    pub fn days(&self) -> usize {
        self.lengths.len()
    }
}

/// Raw returns split into per-day intraday sequences and overnight returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPath {
    /// Per-day intraday returns; day k holds `lengths[k] - 1` values.
    pub intraday: Vec<Vec<f64>>,
    /// Close-to-open returns, one per day boundary (`days - 1` values).
    pub overnight: Vec<f64>,
}

/// Computes intraday and overnight returns from per-day positive price series.
///
/// Day k must contain `days.lengths[k]` prices. The overnight return at
/// boundary k is `(open of day k+1 - close of day k) / close of day k`; no
/// intraday return spans two days.
pub fn compute_returns(prices: &[Vec<f64>], days: &DayStructure) -> Result<ReturnPath> {
    if prices.len() != days.days() {
        return Err(Error::LengthMismatch {
            what: "days of prices",
            expected: days.days(),
            got: prices.len(),
        });
    }
    for (k, (day, &len)) in prices.iter().zip(&days.lengths).enumerate() {
        if day.len() != len {
            return Err(Error::LengthMismatch {
                what: "prices in day",
                expected: len,
                got: day.len(),
            });
        }
        if let Some((minute, &value)) = day.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
            return Err(Error::NonPositivePrice {
                day: k,
                minute,
                value,
            });
        }
    }
    let intraday = prices
        .iter()
        .map(|day| day.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
        .collect();
    let overnight = prices
        .windows(2)
        .map(|pair| {
            let close = *pair[0].last().unwrap();
            let open = pair[1][0];
            (open - close) / close
        })
        .collect();
    Ok(ReturnPath {
        intraday,
        overnight,
    })
}

/// Day-structured sequence of state indices: the combined return process,
/// with intraday states per day and one overnight state per boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedPath {
    /// State count of the underlying space.
    pub m: usize,
    /// Per-day intraday state sequences.
    pub days: Vec<Vec<usize>>,
    /// Overnight states, one per day boundary.
    pub overnight: Vec<usize>,
}

/// Maps every raw return of `path` to its state index.
pub fn discretize(path: &ReturnPath, space: &StateSpace) -> DiscretizedPath {
    DiscretizedPath {
        m: space.len(),
        days: path
            .intraday
            .iter()
            .map(|day| day.iter().map(|&r| space.classify(r)).collect())
            .collect(),
        overnight: path.overnight.iter().map(|&r| space.classify(r)).collect(),
    }
}

impl DiscretizedPath {
    /// Jump chain `(J_n, T_n)` of one day: run states with their start minutes.
    /// Only state changes count as jumps; the first run starts at minute 0.
    pub fn jump_chain(&self, day: usize) -> Vec<(usize, usize)> {
        let seq = &self.days[day];
        let mut chain = Vec::new();
        for (t, &s) in seq.iter().enumerate() {
            match chain.last() {
                Some(&(prev, _)) if prev == s => {}
                _ => chain.push((s, t)),
            }
        }
        chain
    }

    /// Backward recurrence time per minute of one day: elapsed minutes since
    /// the last jump, resetting to 0 at each jump and at the day opening.
    pub fn backward(&self, day: usize) -> Vec<usize> {
        let seq = &self.days[day];
        let mut out = Vec::with_capacity(seq.len());
        let mut run_start = 0usize;
        for (t, &s) in seq.iter().enumerate() {
            if t > 0 && seq[t - 1] != s {
                run_start = t;
            }
            out.push(t - run_start);
        }
        out
    }

    /// Flattened combined process: day 0 states, overnight 0, day 1 states, ...
    pub fn w_sequence(&self) -> Vec<usize> {
        let mut w = Vec::new();
        for (k, day) in self.days.iter().enumerate() {
            w.extend_from_slice(day);
            if k < self.overnight.len() {
                w.push(self.overnight[k]);
            }
        }
        w
    }

    /// Total number of intraday return observations.
    pub fn intraday_len(&self) -> usize {
        self.days.iter().map(|d| d.len()).sum()
    }
}
