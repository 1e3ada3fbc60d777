//! File formats: minute-price CSV ingestion, the state-path CSV, and the
//! fitted-model JSON document.
//!
//! State-path CSV: header `day,minute,raw_return,state_index`, one row per
//! return. Intraday returns carry their within-day minute; the overnight
//! return entering day `k` is the row `(day = k, minute = -1)`. Floats are
//! printed with the shortest round-trip representation, so rewriting a file
//! is byte-stable.
//!
//! Model JSON: the kernel object carries `{m, delta, t_max, b, counts}` with
//! `b` and `counts` as dense triple-indexed arrays `[i][j][t]`; matrices are
//! nested row-major arrays. Field order is fixed by the struct definitions,
//! which keeps golden-file comparisons meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{OvernightChain, SemiMarkovKernel};
use crate::state::{DayStructure, DiscretizedPath, ReturnPath, StateSpace};

/// Parses `timestamp,price` rows into per-day price series.
///
/// Days split on the date part of the timestamp; minutes with no row carry
/// the previous price forward. A late open or early close simply shortens the
/// day's effective series.
pub fn ingest_prices(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut days: Vec<Vec<f64>> = Vec::new();
    let mut current_date: Option<String> = None;
    let mut last_minute = 0u32;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.to_lowercase().starts_with("timestamp")) {
            continue;
        }
        let (stamp, price_str) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: "expected `timestamp,price`".into(),
        })?;
        let price: f64 = price_str.trim().parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("bad price: {e}"),
        })?;
        let (date, minute) = parse_timestamp(stamp.trim()).map_err(|message| Error::Parse {
            line: idx + 1,
            message,
        })?;
        if current_date.as_deref() != Some(date) {
            current_date = Some(date.to_string());
            days.push(Vec::new());
        } else {
            if minute <= last_minute {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("timestamps not increasing within {date}"),
                });
            }
            // fill skipped minutes with the last price
            let day = days.last_mut().unwrap();
            let hold = *day.last().unwrap();
            for _ in last_minute + 1..minute {
                day.push(hold);
            }
        }
        days.last_mut().unwrap().push(price);
        last_minute = minute;
    }
    if days.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(days)
}

/// `(date, minute-of-day)` from `YYYY-MM-DD HH:MM[:SS]` (or with `T`).
fn parse_timestamp(stamp: &str) -> std::result::Result<(&str, u32), String> {
    let (date, time) = stamp
        .split_once([' ', 'T'])
        .ok_or_else(|| format!("bad timestamp {stamp:?}"))?;
    let mut parts = time.split(':');
    let hour: u32 = parts
        .next()
        .and_then(|h| h.parse().ok())
        .ok_or_else(|| format!("bad hour in {stamp:?}"))?;
    let minute: u32 = parts
        .next()
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| format!("bad minute in {stamp:?}"))?;
    Ok((date, hour * 60 + minute))
}

/// Serializes a path (with optional raw returns) to the state-path CSV.
pub fn path_to_csv(path: &DiscretizedPath, raw: Option<&ReturnPath>, space: &StateSpace) -> String {
    let mut out = String::from("day,minute,raw_return,state_index\n");
    for (k, day) in path.days.iter().enumerate() {
        if k > 0 {
            let s = path.overnight[k - 1];
            let r = raw.map_or(space.value(s), |rp| rp.overnight[k - 1]);
            out.push_str(&format!("{k},-1,{r},{s}\n"));
        }
        for (t, &s) in day.iter().enumerate() {
            let r = raw.map_or(space.value(s), |rp| rp.intraday[k][t]);
            out.push_str(&format!("{k},{t},{r},{s}\n"));
        }
    }
    out
}

/// Reads the state-path CSV back into a path and its raw returns.
pub fn path_from_csv(text: &str, m: usize) -> Result<(DiscretizedPath, ReturnPath)> {
    let mut days: Vec<Vec<usize>> = Vec::new();
    let mut intraday: Vec<Vec<f64>> = Vec::new();
    let mut overnight_states: Vec<usize> = Vec::new();
    let mut overnight_raw: Vec<f64> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("day,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected `day,minute,raw_return,state_index`".into(),
            });
        }
        let parse_err = |what: &str| Error::Parse {
            line: idx + 1,
            message: format!("bad {what}"),
        };
        let day: usize = fields[0].parse().map_err(|_| parse_err("day"))?;
        let minute: i64 = fields[1].parse().map_err(|_| parse_err("minute"))?;
        let raw: f64 = fields[2].parse().map_err(|_| parse_err("raw_return"))?;
        let state: usize = fields[3].parse().map_err(|_| parse_err("state_index"))?;
        if state >= m {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("state {state} outside 0..{m}"),
            });
        }
        while days.len() <= day {
            days.push(Vec::new());
            intraday.push(Vec::new());
        }
        if minute < 0 {
            overnight_states.push(state);
            overnight_raw.push(raw);
        } else {
            if days[day].len() != minute as usize {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("minute {minute} out of order in day {day}"),
                });
            }
            days[day].push(state);
            intraday[day].push(raw);
        }
    }
    if days.is_empty() {
        return Err(Error::EmptyPath);
    }
    if overnight_states.len() + 1 != days.len() {
        return Err(Error::LengthMismatch {
            what: "overnight rows",
            expected: days.len() - 1,
            got: overnight_states.len(),
        });
    }
    Ok((
        DiscretizedPath {
            m,
            days,
            overnight: overnight_states,
        },
        ReturnPath {
            intraday,
            overnight: overnight_raw,
        },
    ))
}

/// Kernel serialization: `{m, delta, t_max, b, counts}` in this field order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelJson {
    pub m: usize,
    pub delta: f64,
    pub t_max: usize,
    pub b: Vec<Vec<Vec<f64>>>,
    pub counts: Option<Vec<Vec<Vec<u64>>>>,
}

/// Fitted-model document: state space, day layout, kernel, overnight matrix,
/// and the Markov baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub state_space: StateSpace,
    pub day: DayStructure,
    pub kernel: KernelJson,
    pub overnight: Vec<Vec<f64>>,
    pub markov_baseline: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn new(
        space: &StateSpace,
        day: &DayStructure,
        kernel: &SemiMarkovKernel,
        overnight: &OvernightChain,
        markov_baseline: Vec<Vec<f64>>,
    ) -> Self {
        Self {
            state_space: space.clone(),
            day: day.clone(),
            kernel: KernelJson {
                m: kernel.m,
                delta: space.delta,
                t_max: kernel.t_max,
                b: kernel.b.clone(),
                counts: kernel.counts.clone(),
            },
            overnight: overnight.t.clone(),
            markov_baseline,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rebuilds the kernel (with counts) from the document.
    pub fn kernel(&self) -> Result<SemiMarkovKernel> {
        let mut k =
            SemiMarkovKernel::from_increments(self.kernel.m, self.kernel.t_max, self.kernel.b.clone())?;
        k.counts = self.kernel.counts.clone();
        Ok(k)
    }

    pub fn overnight_chain(&self) -> Result<OvernightChain> {
        OvernightChain::new(self.overnight.clone())
    }
}

/// Transition surface as CSV rows `i,j,t,value`.
pub fn transition_surface_csv(surface: &crate::solver::TransitionSurface) -> String {
    let mut out = String::from("i,j,t,value\n");
    for (t, per_t) in surface.phi.iter().enumerate() {
        for (i, row) in per_t.iter().enumerate() {
            for (j, value) in row.iter().enumerate() {
                out.push_str(&format!("{i},{j},{t},{value}\n"));
            }
        }
    }
    out
}

/// Backward surface as CSV rows `i,j,v,vprime,t,value` (zero entries skipped).
pub fn backward_surface_csv(surface: &crate::solver::BackwardSurface) -> String {
    let mut out = String::from("i,j,v,vprime,t,value\n");
    let v = surface.v;
    for (t, per_t) in surface.joint.iter().enumerate() {
        for (i, per_i) in per_t.iter().enumerate() {
            for (j, per_j) in per_i.iter().enumerate() {
                for (vprime, value) in per_j.iter().enumerate() {
                    if *value != 0.0 {
                        out.push_str(&format!("{i},{j},{v},{vprime},{t},{value}\n"));
                    }
                }
            }
        }
    }
    out
}

/// FNV-1a over a byte string; used to fingerprint run configurations.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
