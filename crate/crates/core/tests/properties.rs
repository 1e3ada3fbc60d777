//! Property tests for the structural invariants of paths, kernels, and the
//! transition solvers.

use proptest::prelude::*;

use smpret::kernel::{derive_views, estimate_kernel, EstimateOptions, SemiMarkovKernel};
use smpret::solver::solve_phi;
use smpret::state::{compute_returns, discretize, DayStructure, DiscretizedPath, StateSpace};

/// Day-structured state sequences over a small symmetric grid.
fn arb_path() -> impl Strategy<Value = (usize, DiscretizedPath)> {
    (2usize..=2, 1usize..=4).prop_flat_map(|(z, d)| {
        let m = 2 * z + 1;
        let day = prop::collection::vec(0..m, 2..40);
        let days = prop::collection::vec(day, d..=d);
        let overnight = prop::collection::vec(0..m, d - 1..=d - 1);
        (days, overnight).prop_map(move |(days, overnight)| {
            (
                z,
                DiscretizedPath {
                    m,
                    days,
                    overnight,
                },
            )
        })
    })
}

proptest! {
    /// Expanding a path to prices by cumulative accumulation and re-running
    /// return computation plus discretization reproduces the states exactly.
    #[test]
    fn price_round_trip((z, path) in arb_path()) {
        let space = StateSpace::symmetric(0.004, z, z).unwrap();
        let mut prices: Vec<Vec<f64>> = Vec::new();
        let mut level = 1.0f64;
        for (k, day) in path.days.iter().enumerate() {
            if k > 0 {
                level *= 1.0 + space.value(path.overnight[k - 1]);
            }
            let mut series = vec![level];
            for &s in day {
                level *= 1.0 + space.value(s);
                series.push(level);
            }
            prices.push(series);
        }
        let lengths: Vec<usize> = prices.iter().map(|p| p.len()).collect();
        let n = *lengths.iter().max().unwrap();
        let structure = DayStructure::with_lengths(n, lengths).unwrap();
        let returns = compute_returns(&prices, &structure).unwrap();
        let redone = discretize(&returns, &space);
        prop_assert_eq!(&redone, &path);
    }

    /// The backward process equals a direct scan for the latest jump time,
    /// and replaying the jump chain reproduces the state sequence.
    #[test]
    fn backward_and_jump_chain_are_consistent((_z, path) in arb_path()) {
        for day in 0..path.days.len() {
            let seq = &path.days[day];
            let backward = path.backward(day);
            for (t, &b) in backward.iter().enumerate() {
                // scan back to the most recent state change
                let mut last_jump = 0;
                for u in (1..=t).rev() {
                    if seq[u] != seq[u - 1] {
                        last_jump = u;
                        break;
                    }
                }
                prop_assert_eq!(b, t - last_jump, "day {} t {}", day, t);
            }
            let chain = path.jump_chain(day);
            let mut replay = Vec::with_capacity(seq.len());
            for (idx, &(state, start)) in chain.iter().enumerate() {
                let end = chain.get(idx + 1).map_or(seq.len(), |&(_, next)| next);
                replay.extend(std::iter::repeat(state).take(end - start));
            }
            prop_assert_eq!(&replay, seq);
        }
    }

    /// Estimated kernel rows sum to exactly 1.0 in floating point.
    #[test]
    fn estimated_rows_sum_to_one((_z, path) in arb_path()) {
        let opts = EstimateOptions {
            unobserved: smpret::kernel::RowFallback::Uniform,
            ..Default::default()
        };
        if let Ok(kernel) = estimate_kernel(&path, &opts) {
            let counts = kernel.counts.as_ref().unwrap();
            for i in 0..kernel.m {
                let observed: u64 = counts[i].iter().map(|c| c.iter().sum::<u64>()).sum();
                if observed == 0 {
                    continue;
                }
                let sum: f64 = kernel.b[i].iter().flat_map(|c| c.iter()).sum();
                prop_assert_eq!(sum, 1.0, "row {}", i);
            }
        }
    }
}

/// Random dense kernels for the solver invariants.
fn arb_kernel() -> impl Strategy<Value = SemiMarkovKernel> {
    (2usize..=4, 1usize..=4).prop_flat_map(|(m, t_max)| {
        prop::collection::vec(0.01f64..1.0, m * m * t_max).prop_map(move |weights| {
            let mut b = vec![vec![vec![0.0; t_max + 1]; m]; m];
            for i in 0..m {
                let mut total = 0.0;
                for j in 0..m {
                    if j == i {
                        continue;
                    }
                    for t in 1..=t_max {
                        let w = weights[(i * m + j) * t_max + t - 1];
                        b[i][j][t] = w;
                        total += w;
                    }
                }
                for j in 0..m {
                    for t in 1..=t_max {
                        b[i][j][t] /= total;
                    }
                }
            }
            SemiMarkovKernel::from_increments(m, t_max, b).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The transition surface stays row-stochastic at every horizon.
    #[test]
    fn phi_rows_are_stochastic(kernel in arb_kernel()) {
        let views = derive_views(&kernel);
        let surface = solve_phi(&views, 25);
        for t in 0..=25 {
            for i in 0..views.m {
                let sum: f64 = surface.phi[t][i].iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12, "t {} i {} sum {}", t, i, sum);
                prop_assert!(surface.phi[t][i].iter().all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
            }
        }
    }

    /// The backward joint law stays a probability distribution.
    #[test]
    fn backward_joint_is_stochastic(kernel in arb_kernel(), v in 0usize..3) {
        let views = derive_views(&kernel);
        if (0..views.m).any(|i| views.survival(i, v) <= 0.0) {
            return Ok(());
        }
        let surface = smpret::solver::solve_backward(&views, v, 12).unwrap();
        for t in 0..=12 {
            for i in 0..views.m {
                let sum: f64 = surface.joint[t][i].iter().flat_map(|r| r.iter()).sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12, "t {} i {} sum {}", t, i, sum);
            }
        }
    }
}
