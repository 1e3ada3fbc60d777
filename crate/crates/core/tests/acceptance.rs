//! Acceptance suite: every criterion below prints one PASS line (run with
//! `--nocapture` to see them) and asserts its stated tolerance.
//!
//! Runtime budgets are enforced in release builds only (`cargo test
//! --release`); debug builds still check all numerical tolerances. The
//! reproducibility criterion (byte-identical CLI reruns) lives with the CLI
//! crate's integration tests, next to the binary it exercises.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smpret::enumerate::{enum_fpt, enum_moment1, enum_moment2};
use smpret::fpt::{fpt_joint_within_day, fpt_multi_day, fpt_within_day, FptOptions};
use smpret::inference::{critical_value, test_statistic};
use smpret::kernel::{
    derive_views, estimate_kernel, estimate_markov_baseline, geometric_kernel,
    geometric_one_step, one_step_to_geometric, DerivedKernelViews, EstimateOptions,
    OvernightChain, SemiMarkovKernel,
};
use smpret::moments::{cross_moment, expected_accumulation, squared_acf_stationary};
use smpret::simulate::{empirical_sq_acf, mc_fpt_survival, simulate_smp, ModelKind, SimConfig};
use smpret::solver::{solve_phi, stationary_law};
use smpret::state::StateSpace;

fn budget(elapsed: Duration, limit: Duration, what: &str) {
    println!("  [{what}] took {elapsed:?} (budget {limit:?})");
    if !cfg!(debug_assertions) {
        assert!(elapsed <= limit, "{what} exceeded its runtime budget");
    }
}

/// Random dense kernel: every off-diagonal (j, t <= t_max) cell positive.
fn random_kernel(rng: &mut ChaCha8Rng, m: usize, t_max: usize) -> SemiMarkovKernel {
    let mut b = vec![vec![vec![0.0; t_max + 1]; m]; m];
    for i in 0..m {
        let mut total = 0.0;
        for j in 0..m {
            if j == i {
                continue;
            }
            for t in 1..=t_max {
                let w: f64 = rng.gen::<f64>().powi(2) + 0.01;
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
}

/// Random strictly increasing return values with positive gross factors.
fn random_space(rng: &mut ChaCha8Rng, m: usize) -> StateSpace {
    let mut states: Vec<f64> = (0..m)
        .map(|_| rng.gen::<f64>() * 0.10 - 0.04)
        .collect();
    states.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for k in 1..m {
        if states[k] - states[k - 1] < 2e-3 {
            states[k] = states[k - 1] + 2e-3;
        }
    }
    let thresholds = states.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    StateSpace {
        delta: 0.01,
        z_min: 0,
        z_max: m - 1,
        states,
        thresholds,
    }
}

fn random_overnight(rng: &mut ChaCha8Rng, m: usize) -> OvernightChain {
    let mut t = vec![vec![0.0; m]; m];
    for row in t.iter_mut() {
        let mut total = 0.0;
        for cell in row.iter_mut() {
            *cell = rng.gen::<f64>() + 0.05;
            total += *cell;
        }
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }
    OvernightChain::new(t).unwrap()
}

#[test]
fn acceptance_markov_reduction() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let m = 3;
    let mut p = vec![vec![0.0; m]; m];
    for (i, row) in p.iter_mut().enumerate() {
        let mut total = 0.0;
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = rng.gen::<f64>() + 0.05;
                total += *cell;
            }
        }
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }
    let q: Vec<f64> = (0..m).map(|_| 0.3 + 0.6 * rng.gen::<f64>()).collect();
    // t_max large enough that the folded geometric tail is below 1e-12
    let views = derive_views(&geometric_kernel(&p, &q, 120).unwrap());
    let surface = solve_phi(&views, 50);
    let one_step = geometric_one_step(&p, &q);
    let mut power = vec![vec![0.0; m]; m];
    for (i, row) in power.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut worst: f64 = 0.0;
    for t in 0..=50 {
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((surface.at(t, i, j) - power[i][j]).abs());
            }
        }
        let mut next = vec![vec![0.0; m]; m];
        for i in 0..m {
            for k in 0..m {
                for j in 0..m {
                    next[i][j] += power[i][k] * one_step[k][j];
                }
            }
        }
        power = next;
    }
    assert!(worst <= 1e-10, "max |phi(t) - M^t| = {worst:e}");
    budget(start.elapsed(), Duration::from_secs(1), "markov reduction");
    println!("ACCEPTANCE markov_reduction: PASS (max deviation {worst:.3e})");
}

#[test]
fn acceptance_fpt_oracle_equivalence() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut boundary_instances = 0;
    for idx in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        rng.set_stream(idx);
        let m = 2 + (idx % 2) as usize;
        let t_max = 1 + (idx % 3) as usize;
        let kernel = random_kernel(&mut rng, m, t_max);
        let views = derive_views(&kernel);
        let space = random_space(&mut rng, m);
        let lf = space.log_factors();
        let state = (idx as usize) % m;
        let v = (idx as usize) % t_max;
        let rho = if idx % 10 == 0 {
            0.9 + 0.05 * rng.gen::<f64>()
        } else {
            1.0005 + 0.07 * rng.gen::<f64>()
        };
        let opts = FptOptions::default();
        if idx % 3 == 0 {
            // spans one day boundary
            let n = 3 + (idx % 3) as usize;
            let horizon = (n + 3).min(8);
            boundary_instances += 1;
            let chain = random_overnight(&mut rng, m);
            let oracle = enum_fpt(&views, Some(&chain), &lf, n, state, v, rho, horizon);
            let days = horizon.div_ceil(n);
            let sol =
                fpt_multi_day(&views, &space, &chain, state, v, rho, n, days, &opts).unwrap();
            for t in 0..=horizon {
                worst = worst.max((sol.survival[t] - oracle.survival[t]).abs());
            }
        } else {
            let horizon = 4 + (idx % 5) as usize;
            let oracle = enum_fpt(&views, None, &lf, horizon + 2, state, v, rho, horizon);
            let sol =
                fpt_joint_within_day(&views, &space, state, v, rho, horizon, &opts).unwrap();
            let marginal = fpt_within_day(&views, &space, state, v, rho, horizon).unwrap();
            for t in 0..=horizon {
                worst = worst.max((sol.survival[t] - oracle.survival[t]).abs());
                worst = worst.max((marginal[t] - oracle.survival[t]).abs());
            }
        }
    }
    assert!(boundary_instances > 0);
    assert!(worst <= 1e-12, "max |recursion - enumeration| = {worst:e}");
    budget(start.elapsed(), Duration::from_secs(60), "fpt oracle equivalence");
    println!(
        "ACCEPTANCE fpt_oracle_equivalence: PASS (100 instances, {boundary_instances} with a day boundary, max error {worst:.3e})"
    );
}

/// The moderate instance shared by the Monte Carlo agreement criterion:
/// m = 5, t_max = 20, n = 100, on a log-symmetric grid.
fn moderate_instance() -> (DerivedKernelViews, StateSpace, OvernightChain) {
    let space = StateSpace::log_symmetric(0.01, 2, 2).unwrap();
    let m = 5;
    let t_max = 20;
    let mut b = vec![vec![vec![0.0; t_max + 1]; m]; m];
    for i in 0..m {
        let mut total = 0.0;
        for j in 0..m {
            if j == i {
                continue;
            }
            let affinity = 1.0 + ((i + 2 * j) % 4) as f64;
            for t in 1..=t_max {
                // decaying sojourn law with a bump at 15: clearly non-geometric
                let w = affinity * ((-(t as f64) / 8.0).exp() + if t == 15 { 0.4 } else { 0.0 });
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
    let kernel = SemiMarkovKernel::from_increments(m, t_max, b).unwrap();
    let mut overnight = vec![vec![0.0; m]; m];
    for (a, row) in overnight.iter_mut().enumerate() {
        let mut total = 0.0;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = 1.0 / (1.0 + (a as f64 - j as f64).abs());
            total += *cell;
        }
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }
    (
        derive_views(&kernel),
        space,
        OvernightChain::new(overnight).unwrap(),
    )
}

#[test]
fn acceptance_fpt_monte_carlo_agreement() {
    let start = Instant::now();
    let (views, space, chain) = moderate_instance();
    let rho = (0.0053f64).exp();
    let (n, days) = (100, 2);
    let horizon = n * days;
    let sol = fpt_multi_day(
        &views,
        &space,
        &chain,
        2,
        0,
        rho,
        n,
        days,
        &FptOptions::default(),
    )
    .unwrap();
    assert_eq!(sol.stats.discarded_mass, 0.0);
    let mc = mc_fpt_survival(
        &views, &chain, &space, 2, 0, rho, n, horizon, 1_000_000, 0x5eed_0003,
    )
    .unwrap();
    let mut worst_sigma: f64 = 0.0;
    for t in 0..=horizon {
        let diff = (sol.survival[t] - mc.survival[t]).abs();
        if mc.se[t] > 0.0 {
            worst_sigma = worst_sigma.max(diff / mc.se[t]);
        } else {
            assert!(diff <= 1e-12, "t = {t}: diff {diff} with zero SE");
        }
    }
    assert!(
        worst_sigma <= 3.0,
        "worst deviation {worst_sigma:.2} standard errors"
    );
    budget(start.elapsed(), Duration::from_secs(120), "fpt monte carlo");
    println!(
        "ACCEPTANCE fpt_monte_carlo_agreement: PASS (10^6 paths, worst deviation {worst_sigma:.2} SE, grid peak {} atoms)",
        sol.stats.max_atoms
    );
}

#[test]
fn acceptance_moment_recursions() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_gate: f64 = 0.0;
    for idx in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
        rng.set_stream(idx);
        let m = 2 + (idx % 2) as usize;
        let t_max = 1 + (idx % 3) as usize;
        let views = derive_views(&random_kernel(&mut rng, m, t_max));
        let space = random_space(&mut rng, m);
        let lf = space.log_factors();
        let i = (idx as usize) % m;
        let v = (idx as usize) % t_max;
        let t = (idx % 4) as usize;
        let s = (idx % 3) as usize;
        if t + s > 6 {
            continue;
        }
        let m1 = expected_accumulation(&views, &space, i, v, t).unwrap();
        worst = worst.max((m1 - enum_moment1(&views, &lf, i, v, t)).abs());
        let m2 = cross_moment(&views, &space, i, v, t, s).unwrap();
        worst = worst.max((m2 - enum_moment2(&views, &lf, i, v, t, s)).abs());
        let gamma = smpret::moments::intraday_autocov(&views, &space, i, v, t, s).unwrap();
        let gamma_oracle = enum_moment2(&views, &lf, i, v, t, s)
            - enum_moment1(&views, &lf, i, v, t) * enum_moment1(&views, &lf, i, v, t + s);
        worst = worst.max((gamma - gamma_oracle).abs());
        // exponent-convention gate: s = 0 must reproduce E[M^2]
        let second = cross_moment(&views, &space, i, v, t, 0).unwrap();
        worst_gate = worst_gate.max((second - enum_moment2(&views, &lf, i, v, t, 0)).abs());
    }
    assert!(worst <= 1e-12, "max moment error {worst:e}");
    assert!(worst_gate <= 1e-12, "s = 0 gate error {worst_gate:e}");
    budget(start.elapsed(), Duration::from_secs(30), "moment recursions");
    println!(
        "ACCEPTANCE moment_recursions: PASS (max error {worst:.3e}, s=0 gate {worst_gate:.3e})"
    );
}

/// Small non-geometric kernel with non-degenerate squared returns, shared by
/// the ACF and stationary-law criteria.
fn acf_instance() -> (DerivedKernelViews, StateSpace) {
    let space = StateSpace::log_symmetric(0.012, 1, 1).unwrap();
    let mut b = vec![vec![vec![0.0; 5]; 3]; 3];
    let p = [
        [0.0, 0.55, 0.45],
        [0.35, 0.0, 0.65],
        [0.5, 0.5, 0.0],
    ];
    let sojourn = [0.15, 0.5, 0.1, 0.25]; // mass at t = 1..4
    for i in 0..3 {
        for j in 0..3 {
            for (t, w) in sojourn.iter().enumerate() {
                b[i][j][t + 1] = p[i][j] * w;
            }
        }
    }
    (
        derive_views(&SemiMarkovKernel::from_increments(3, 4, b).unwrap()),
        space,
    )
}

#[test]
fn acceptance_squared_return_acf() {
    let start = Instant::now();
    let (views, space) = acf_instance();
    let law = stationary_law(&views).unwrap();
    let tau_max = 50;
    let acf = squared_acf_stationary(&views, &space, &law, tau_max).unwrap();
    let rho_model = acf.rho_acf.clone().unwrap();

    // empirical side: 100 independent single-day replications of 10^5 steps
    // (10^7 total), burn-in dropped, per-replication normalized acf
    let reps = 100usize;
    let len = 100_000usize;
    let burn = 500usize;
    let chain = OvernightChain::uniform(3);
    let curves = smpret::par::map_indexed(reps, |r| {
        let cfg = SimConfig {
            seed: 0x5eed_0005,
            stream: r as u64,
            days: 1,
            n: len + burn + 1,
            initial_state: r % 3,
            initial_backward: 0,
            model: ModelKind::SemiMarkov,
        };
        let mut path = simulate_smp(&views, &chain, &cfg).unwrap();
        path.days[0].drain(..burn);
        empirical_sq_acf(&path, &space, tau_max).unwrap()
    });
    let mut worst_sigma: f64 = 0.0;
    for tau in 1..=tau_max {
        let vals: Vec<f64> = curves.iter().map(|c| c[tau]).collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let sigma = (mean - rho_model[tau]).abs() / se;
        worst_sigma = worst_sigma.max(sigma);
    }
    assert!(
        worst_sigma <= 3.0,
        "worst acf deviation {worst_sigma:.2} standard errors"
    );

    // geometric kernel: closed form via powers of the one-step matrix
    let p = vec![
        vec![0.0, 0.7, 0.3],
        vec![0.45, 0.0, 0.55],
        vec![0.6, 0.4, 0.0],
    ];
    let q = vec![0.5, 0.3, 0.65];
    let gviews = derive_views(&geometric_kernel(&p, &q, 80).unwrap());
    let glaw = stationary_law(&gviews).unwrap();
    let gacf = squared_acf_stationary(&gviews, &space, &glaw, 25).unwrap();
    let one_step = geometric_one_step(&p, &q);
    let mut dist = vec![1.0 / 3.0; 3];
    for _ in 0..60_000 {
        let mut next = vec![0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                next[j] += dist[i] * one_step[i][j];
            }
        }
        dist = next;
    }
    let sq: Vec<f64> = space.states.iter().map(|&s| s * s).collect();
    let mean_sq: f64 = (0..3).map(|j| dist[j] * sq[j]).sum();
    let mut power = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    let mut worst_geo: f64 = 0.0;
    for tau in 0..=25 {
        let mut cross = 0.0;
        for h in 0..3 {
            for j in 0..3 {
                cross += dist[h] * sq[h] * power[h][j] * sq[j];
            }
        }
        worst_geo = worst_geo.max((gacf.sigma[tau] - (cross - mean_sq * mean_sq)).abs());
        let mut next = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                for j in 0..3 {
                    next[i][j] += power[i][k] * one_step[k][j];
                }
            }
        }
        power = next;
    }
    assert!(worst_geo <= 1e-9, "geometric closed-form error {worst_geo:e}");
    budget(start.elapsed(), Duration::from_secs(120), "squared-return acf");
    println!(
        "ACCEPTANCE squared_return_acf: PASS (worst {worst_sigma:.2} SE over tau <= 50; geometric closed form {worst_geo:.3e})"
    );
}

#[test]
fn acceptance_test_calibration_and_power() {
    let start = Instant::now();
    let crit = critical_value(0.05).unwrap();
    assert!((crit - 1.959964).abs() < 1e-6);
    let reps = 1000usize;
    let n = 10_000usize;

    // geometric null at q = 0.3
    let rejections: Vec<u64> = smpret::par::map_indexed(reps, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
        rng.set_stream(r as u64);
        let q: f64 = 0.3;
        let (mut n1, mut n2) = (0u64, 0u64);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let t = (u.ln() / (1.0 - q).ln()).floor() as u64 + 1;
            if t == 1 {
                n1 += 1;
            } else if t == 2 {
                n2 += 1;
            }
        }
        let g1 = n1 as f64 / n as f64;
        let g2 = n2 as f64 / n as f64;
        let s = test_statistic(g1, g2, n as u64).unwrap();
        (s.abs() > crit) as u64
    });
    let rate = rejections.iter().sum::<u64>() as f64 / reps as f64;
    assert!(
        (0.035..=0.065).contains(&rate),
        "null rejection rate {rate}"
    );

    // strongly non-geometric alternatives built from near-deterministic and
    // mixed sojourn laws
    let mut powers = Vec::new();
    for p1 in [0.02, 0.5] {
        let hits: Vec<u64> = smpret::par::map_indexed(reps, |r| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
            rng.set_stream(r as u64);
            // sojourn 1 w.p. p1, otherwise 3: never geometric, and no
            // sojourns of length 2 at all
            let mut n1 = 0u64;
            for _ in 0..n {
                if rng.gen::<f64>() < p1 {
                    n1 += 1;
                }
            }
            let g1 = n1 as f64 / n as f64;
            let g2 = 0.0;
            match test_statistic(g1, g2, n as u64) {
                Ok(s) => (s.abs() > crit) as u64,
                Err(_) => 0,
            }
        });
        let power = hits.iter().sum::<u64>() as f64 / reps as f64;
        assert!(power >= 0.9, "power {power} for mixture p1 = {p1}");
        powers.push(power);
    }
    budget(start.elapsed(), Duration::from_secs(60), "test calibration");
    println!(
        "ACCEPTANCE test_calibration: PASS (null rate {rate:.3}, powers {powers:?})"
    );
}

#[test]
fn acceptance_stationary_law() {
    let start = Instant::now();
    let (views, _space) = acf_instance();
    let law = stationary_law(&views).unwrap();

    // fixed point of the joint (state, backward) evolution
    let surfaces: Vec<_> = (0..views.t_max)
        .map(|u| smpret::solver::solve_backward(&views, u, 1).unwrap())
        .collect();
    let mut residual: f64 = 0.0;
    for j in 0..views.m {
        for wp in 0..views.t_max {
            let mut acc = 0.0;
            for h in 0..views.m {
                for u in 0..views.t_max {
                    let mass = law.pi_v[h][u];
                    if mass != 0.0 {
                        acc += mass * surfaces[u].joint_at(1, h, j, wp);
                    }
                }
            }
            residual = residual.max((acc - law.pi_v[j][wp]).abs());
        }
    }
    assert!(residual <= 1e-9, "fixed-point residual {residual:e}");

    // occupation frequencies of simulated intraday trajectories
    let reps = 60usize;
    let len = 30_000usize;
    let burn = 500usize;
    let chain = OvernightChain::uniform(3);
    let freqs = smpret::par::map_indexed(reps, |r| {
        let cfg = SimConfig {
            seed: 0x5eed_0008,
            stream: r as u64,
            days: 1,
            n: len + burn + 1,
            initial_state: r % 3,
            initial_backward: 0,
            model: ModelKind::SemiMarkov,
        };
        let path = simulate_smp(&views, &chain, &cfg).unwrap();
        let mut counts = vec![0usize; 3];
        for &s in &path.days[0][burn..] {
            counts[s] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / len as f64)
            .collect::<Vec<f64>>()
    });
    let mut worst_sigma: f64 = 0.0;
    for j in 0..3 {
        let vals: Vec<f64> = freqs.iter().map(|f| f[j]).collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        worst_sigma = worst_sigma.max((mean - law.pi[j]).abs() / se);
    }
    assert!(
        worst_sigma <= 3.0,
        "occupation deviation {worst_sigma:.2} standard errors"
    );
    budget(start.elapsed(), Duration::from_secs(60), "stationary law");
    println!(
        "ACCEPTANCE stationary_law: PASS (fixed-point residual {residual:.3e}, occupation within {worst_sigma:.2} SE)"
    );
}

#[test]
fn acceptance_model_comparison() {
    let start = Instant::now();
    // ground truth: strongly non-geometric sojourns (mass at 2 and 5 only)
    let space = StateSpace::log_symmetric(0.012, 1, 1).unwrap();
    let p = [
        [0.0, 0.6, 0.4],
        [0.3, 0.0, 0.7],
        [0.55, 0.45, 0.0],
    ];
    let mut b = vec![vec![vec![0.0; 6]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j][2] = p[i][j] * 0.6;
            b[i][j][5] = p[i][j] * 0.4;
        }
    }
    let truth = derive_views(&SemiMarkovKernel::from_increments(3, 5, b).unwrap());
    let chain = OvernightChain::uniform(3);

    // a long synthetic path, then both model fits
    let cfg = SimConfig {
        seed: 0x5eed_0009,
        stream: 0,
        days: 400,
        n: 120,
        initial_state: 1,
        initial_backward: 0,
        model: ModelKind::SemiMarkov,
    };
    let path = simulate_smp(&truth, &chain, &cfg).unwrap();
    let fitted = derive_views(&estimate_kernel(&path, &EstimateOptions::default()).unwrap());
    let markov = estimate_markov_baseline(&path).unwrap();
    let (mp, mq) = one_step_to_geometric(&markov).unwrap();
    let markov_views = derive_views(&geometric_kernel(&mp, &mq, 60).unwrap());

    let l1 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    };

    // first-passage curves within one day
    let rho = 1.01;
    let horizon = 40;
    let opts = FptOptions::default();
    let truth_fpt = fpt_joint_within_day(&truth, &space, 1, 0, rho, horizon, &opts).unwrap();
    let smp_fpt = fpt_joint_within_day(&fitted, &space, 1, 0, rho, horizon, &opts).unwrap();
    let markov_fpt =
        fpt_joint_within_day(&markov_views, &space, 1, 0, rho, horizon, &opts).unwrap();
    let smp_l1_fpt = l1(&smp_fpt.survival, &truth_fpt.survival);
    let markov_l1_fpt = l1(&markov_fpt.survival, &truth_fpt.survival);
    assert!(
        smp_l1_fpt < markov_l1_fpt,
        "fpt: smp {smp_l1_fpt} vs markov {markov_l1_fpt}"
    );

    // stationary squared-return autocorrelation curves
    let tau_max = 40;
    let truth_acf = squared_acf_stationary(&truth, &space, &stationary_law(&truth).unwrap(), tau_max)
        .unwrap()
        .rho_acf
        .unwrap();
    let smp_acf = squared_acf_stationary(&fitted, &space, &stationary_law(&fitted).unwrap(), tau_max)
        .unwrap()
        .rho_acf
        .unwrap();
    let markov_acf = squared_acf_stationary(
        &markov_views,
        &space,
        &stationary_law(&markov_views).unwrap(),
        tau_max,
    )
    .unwrap()
    .rho_acf
    .unwrap();
    let smp_l1_acf = l1(&smp_acf[1..], &truth_acf[1..]);
    let markov_l1_acf = l1(&markov_acf[1..], &truth_acf[1..]);
    assert!(
        smp_l1_acf < markov_l1_acf,
        "acf: smp {smp_l1_acf} vs markov {markov_l1_acf}"
    );
    budget(start.elapsed(), Duration::from_secs(60), "model comparison");
    println!(
        "ACCEPTANCE model_comparison: PASS (fpt L1 smp {smp_l1_fpt:.4} < markov {markov_l1_fpt:.4}; acf L1 smp {smp_l1_acf:.4} < markov {markov_l1_acf:.4})"
    );
}
