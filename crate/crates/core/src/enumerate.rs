//! Exhaustive reference computations for small instances.
//!
//! Everything here walks the probability tree of the one-step
//! (state, backward) chain directly, branching on stay/jump at every minute
//! and on the overnight draw at day boundaries. Runtime is exponential in the
//! horizon, so this is only usable for small instances, which is exactly what
//! the recursion-based solvers are cross-checked against. None of the solver
//! code paths are reused.

use crate::kernel::{DerivedKernelViews, OvernightChain};

/// Exact first-passage quantities from path enumeration.
#[derive(Debug, Clone)]
pub struct EnumFpt {
    /// Survival probabilities `P(lambda > t)` for t = 0..=horizon.
    pub survival: Vec<f64>,
    /// Surviving joint mass per t: `(state, log accumulation, probability)`.
    pub joint: Vec<Vec<(usize, f64, f64)>>,
}

/// Enumerates the first-passage problem exactly.
///
/// `n` is the number of minutes per day: slot `t` is an overnight slot when
/// `(t + 1) % n == 0`, requiring `overnight` to be present. The walk starts
/// in `state` with elapsed backward time `v` and unit accumulation.
#[allow(clippy::too_many_arguments)]
pub fn enum_fpt(
    views: &DerivedKernelViews,
    overnight: Option<&OvernightChain>,
    log_factors: &[f64],
    n: usize,
    state: usize,
    v: usize,
    rho: f64,
    horizon: usize,
) -> EnumFpt {
    let log_rho = rho.ln();
    let mut survival = vec![0.0; horizon + 1];
    let mut joint: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); horizon + 1];

    #[allow(clippy::too_many_arguments)]
    fn walk(
        views: &DerivedKernelViews,
        overnight: Option<&OvernightChain>,
        lf: &[f64],
        n: usize,
        horizon: usize,
        log_rho: f64,
        t: usize,
        state: usize,
        u: usize,
        x: f64,
        p: f64,
        survival: &mut [f64],
        joint: &mut [Vec<(usize, f64, f64)>],
    ) {
        if p == 0.0 {
            return;
        }
        if x >= log_rho {
            // crossed at time t; contributes to no later survival
            return;
        }
        survival[t] += p;
        joint[t].push((state, x, p));
        if t == horizon {
            return;
        }
        if (t + 1) % n == 0 {
            // overnight slot: draw the new state, apply its factor, restart
            let chain = overnight.expect("horizon spans a day boundary but no overnight chain");
            for (j, &w) in chain.t[state].iter().enumerate() {
                walk(
                    views,
                    overnight,
                    lf,
                    n,
                    horizon,
                    log_rho,
                    t + 1,
                    j,
                    0,
                    x + lf[j],
                    p * w,
                    survival,
                    joint,
                );
            }
            return;
        }
        if (t + 2) % n == 0 {
            // last intraday slot of the day: the sojourn truncates at the
            // close, so only the factor applies
            walk(
                views,
                overnight,
                lf,
                n,
                horizon,
                log_rho,
                t + 1,
                state,
                u,
                x + lf[state],
                p,
                survival,
                joint,
            );
            return;
        }
        let denom = views.survival(state, u);
        if denom <= 0.0 {
            return;
        }
        let xp = x + lf[state];
        let stay = views.survival(state, u + 1) / denom;
        walk(
            views, overnight, lf, n, horizon, log_rho, t + 1, state, u + 1, xp,
            p * stay, survival, joint,
        );
        for k in 0..views.m {
            let b = views.increment(state, k, u + 1);
            if b != 0.0 {
                walk(
                    views, overnight, lf, n, horizon, log_rho, t + 1, k, 0, xp,
                    p * b / denom, survival, joint,
                );
            }
        }
    }

    walk(
        views,
        overnight,
        log_factors,
        n,
        horizon,
        log_rho,
        0,
        state,
        v,
        0.0,
        1.0,
        &mut survival,
        &mut joint,
    );
    EnumFpt { survival, joint }
}

/// Exact expected accumulation factor `E[M_0(t+1) | (state, v)]` over one day.
pub fn enum_moment1(
    views: &DerivedKernelViews,
    log_factors: &[f64],
    state: usize,
    v: usize,
    t: usize,
) -> f64 {
    let factors: Vec<f64> = log_factors.iter().map(|&l| l.exp()).collect();
    let mut acc = 0.0;

    fn walk(
        views: &DerivedKernelViews,
        f: &[f64],
        depth: usize,
        state: usize,
        u: usize,
        prod: f64,
        p: f64,
        acc: &mut f64,
    ) {
        if depth == 0 {
            *acc += p * prod;
            return;
        }
        let denom = views.survival(state, u);
        if denom <= 0.0 || p == 0.0 {
            return;
        }
        let prod = prod * f[state];
        let stay = views.survival(state, u + 1) / denom;
        walk(views, f, depth - 1, state, u + 1, prod, p * stay, acc);
        for k in 0..views.m {
            let b = views.increment(state, k, u + 1);
            if b != 0.0 {
                walk(views, f, depth - 1, k, 0, prod, p * b / denom, acc);
            }
        }
    }

    walk(views, &factors, t + 1, state, v, 1.0, 1.0, &mut acc);
    acc
}

/// Exact second-order cross moment
/// `E[M_0(t+1) M_0(t+s+1) | (state, v)]` over one day.
pub fn enum_moment2(
    views: &DerivedKernelViews,
    log_factors: &[f64],
    state: usize,
    v: usize,
    t: usize,
    s: usize,
) -> f64 {
    let factors: Vec<f64> = log_factors.iter().map(|&l| l.exp()).collect();
    let mut acc = 0.0;

    #[allow(clippy::too_many_arguments)]
    fn walk(
        views: &DerivedKernelViews,
        f: &[f64],
        slot: usize,
        last: usize,
        t: usize,
        state: usize,
        u: usize,
        prod_first: f64,
        prod_all: f64,
        p: f64,
        acc: &mut f64,
    ) {
        if slot > last {
            *acc += p * prod_first * prod_all;
            return;
        }
        let denom = views.survival(state, u);
        if denom <= 0.0 || p == 0.0 {
            return;
        }
        let prod_all = prod_all * f[state];
        let prod_first = if slot <= t {
            prod_first * f[state]
        } else {
            prod_first
        };
        let stay = views.survival(state, u + 1) / denom;
        walk(
            views, f, slot + 1, last, t, state, u + 1, prod_first, prod_all,
            p * stay, acc,
        );
        for k in 0..views.m {
            let b = views.increment(state, k, u + 1);
            if b != 0.0 {
                walk(
                    views, f, slot + 1, last, t, k, 0, prod_first, prod_all,
                    p * b / denom, acc,
                );
            }
        }
    }

    walk(
        views,
        &factors,
        0,
        t + s,
        t,
        state,
        v,
        1.0,
        1.0,
        1.0,
        &mut acc,
    );
    acc
}
