//! Command-line interface: ingestion, fitting, testing, solving, simulation,
//! and model comparison as reproducible runs.
//!
//! Every command is a pure function of its input files and flags: outputs are
//! byte-identical across reruns with the same configuration. Each run writes
//! a `<output>.meta.json` recording the command, crate version, resolved
//! configuration, and its fingerprint. Errors print one machine-readable
//! JSON object to stderr and exit nonzero.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smpret::fpt::{fpt_multi_day, FptOptions};
use smpret::inference::run_tests;
use smpret::io::{fnv1a_hex, ingest_prices, path_from_csv, path_to_csv, ModelFile};
use smpret::kernel::{
    derive_views, estimate_kernel, estimate_markov_baseline, estimate_overnight,
    EstimateOptions, OvernightChain, RowFallback,
};
use smpret::moments::squared_acf_stationary;
use smpret::simulate::{
    empirical_fpt, empirical_sq_acf, mc_fpt_survival, simulate_markov, simulate_smp, ModelKind,
    SimConfig,
};
use smpret::solver::stationary_law;
use smpret::state::{compute_returns, discretize, DayStructure, DiscretizedPath, StateSpace};
use smpret::{Error, Result};

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "smpret",
    version,
    about = "Semi-Markov modeling of high-frequency price returns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Resample a minute-price CSV into discretized return states.
    Ingest(IngestArgs),
    /// Estimate the semi-Markov kernel, overnight matrix, and Markov baseline.
    Fit(FitArgs),
    /// Run the geometric-sojourn hypothesis test on a fitted model.
    Test(TestArgs),
    /// Solve first-passage-time distributions of the accumulation factor.
    Fpt(FptArgs),
    /// Compute the squared-return autocorrelation (stationary or conditional).
    Acf(AcfArgs),
    /// Simulate a synthetic trajectory from a fitted model.
    Simulate(SimulateArgs),
    /// Compare semi-Markov and Markov fits of a path against the data itself.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Serialize)]
struct SpaceArgs {
    /// Return-grid step.
    #[arg(long, default_value_t = 0.001)]
    delta: f64,
    /// Number of states (odd, symmetric around zero).
    #[arg(long, default_value_t = 5)]
    states: usize,
    /// Derive thresholds from return quantiles instead of grid midpoints.
    #[arg(long)]
    quantile_thresholds: bool,
}

impl SpaceArgs {
    fn build(&self, returns: Option<&[f64]>) -> Result<StateSpace> {
        if self.states < 3 || self.states % 2 == 0 {
            return Err(Error::InvalidStateSpace(format!(
                "--states {} must be odd and >= 3",
                self.states
            )));
        }
        let z = (self.states - 1) / 2;
        if self.quantile_thresholds {
            let returns = returns.ok_or_else(|| {
                Error::InvalidStateSpace("quantile thresholds need return data".into())
            })?;
            let thresholds = StateSpace::quantile_thresholds(returns, self.states)?;
            StateSpace::with_thresholds(self.delta, z, z, thresholds)
        } else {
            StateSpace::symmetric(self.delta, z, z)
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    space: SpaceArgs,
    /// Nominal minutes per day; defaults to the longest observed day.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    /// State CSV produced by `ingest` (or `simulate`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    space: SpaceArgs,
    /// Sojourn truncation horizon; defaults to the maximum observed sojourn.
    #[arg(long)]
    t_max: Option<usize>,
    /// Drop sojourns longer than --t-max instead of failing.
    #[arg(long)]
    censor_long: bool,
    /// Give states without completed sojourns a uniform kernel row instead of
    /// failing.
    #[arg(long)]
    uniform_fallback: bool,
}

#[derive(Args, Debug, Serialize)]
struct TestArgs {
    /// Fitted model JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Two-sided significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Flag pairs with fewer transitions than this as low-sample.
    #[arg(long, default_value_t = 30)]
    low_sample_floor: u64,
}

#[derive(Args, Debug, Serialize)]
struct FptArgs {
    /// Fitted model JSON.
    #[arg(long)]
    input: PathBuf,
    /// Output stem; each threshold writes `<stem>_rho<rho>.csv`.
    #[arg(long)]
    output: PathBuf,
    /// Threshold(s) for the accumulation factor.
    #[arg(long, required = true)]
    rho: Vec<f64>,
    /// Initial state index; defaults to the zero-return state.
    #[arg(long)]
    state: Option<usize>,
    /// Initial backward value.
    #[arg(long, default_value_t = 0)]
    v: usize,
    /// Days to span.
    #[arg(long, default_value_t = 1)]
    days: usize,
    /// Also estimate the curve from simulated trajectories.
    #[arg(long)]
    empirical: bool,
    /// Simulated paths for --empirical.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Drop grid atoms lighter than this (0 keeps the solve exact; the stats
    /// sidecar reports the total mass dropped).
    #[arg(long, default_value_t = 1e-12)]
    mass_floor: f64,
    /// Merge tolerance for log accumulation values.
    #[arg(long, default_value_t = 1e-12)]
    epsilon_log: f64,
    /// Abort if the accumulation grid exceeds this many atoms (0 = no cap).
    /// Arithmetic return grids grow polynomially in the horizon; a coarser
    /// --epsilon-log, a higher --mass-floor, or --empirical keeps long
    /// horizons tractable.
    #[arg(long, default_value_t = 2_000_000)]
    grid_cap: usize,
}

#[derive(Args, Debug, Serialize)]
struct AcfArgs {
    /// Fitted model JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 50)]
    tau_max: usize,
    /// Emit the conditional covariance surface for one initial condition
    /// instead of the stationary curve.
    #[arg(long)]
    conditional: bool,
    /// Initial state for --conditional; defaults to the zero-return state.
    #[arg(long)]
    state: Option<usize>,
    /// Initial backward value for --conditional.
    #[arg(long, default_value_t = 0)]
    v: usize,
    /// Base time for --conditional.
    #[arg(long, default_value_t = 0)]
    t: usize,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Fitted model JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Days to simulate; defaults to the fitted day count.
    #[arg(long)]
    days: Option<usize>,
    /// Minutes per day; defaults to the fitted nominal day length.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModelArg::Smp)]
    model: ModelArg,
    /// Initial state; defaults to the zero-return state.
    #[arg(long)]
    state: Option<usize>,
    /// Initial backward value.
    #[arg(long, default_value_t = 0)]
    v: usize,
    /// Independent replications; more than one writes `<stem>_rep<k>` files,
    /// one per seed stream.
    #[arg(long, default_value_t = 1)]
    replications: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    Smp,
    Markov,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    /// State CSV of the reference data (from `ingest` or `simulate`).
    #[arg(long)]
    input: PathBuf,
    /// Output stem; writes `<stem>_fpt.csv`, `<stem>_acf.csv`,
    /// `<stem>_summary.json`.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value_t = 1.005)]
    rho: f64,
    #[arg(long, default_value_t = 50)]
    tau_max: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Start-index stride for the empirical first-passage scans.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Horizon for the first-passage comparison.
    #[arg(long, default_value_t = 100)]
    t_upto: usize,
    /// Give states without completed sojourns a uniform kernel row.
    #[arg(long)]
    uniform_fallback: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "kind": error_kind(&e), "message": e.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(e: &Error) -> String {
    format!("{e:?}")
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect()
}

fn log(msg: &str) {
    if std::env::var("SMPRET_LOG").map_or(false, |v| !v.is_empty()) {
        eprintln!("smpret: {msg}");
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Test(args) => cmd_test(args),
        Command::Fpt(args) => cmd_fpt(args),
        Command::Acf(args) => cmd_acf(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

/// Writes `<output>.meta.json` with the resolved configuration fingerprint.
fn write_meta<A: Serialize>(output: &Path, command: &str, args: &A) -> Result<()> {
    let config = serde_json::to_value(args)?;
    let canonical = serde_json::to_string(&config)?;
    let meta = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": fnv1a_hex(canonical.as_bytes()),
        "config": config,
    });
    let mut name = output
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    name.push_str(".meta.json");
    std::fs::write(output.with_file_name(name), format!("{meta:#}\n"))?;
    Ok(())
}

fn read_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&std::fs::read_to_string(path)?)
}

fn zero_state_or(space: &StateSpace, requested: Option<usize>) -> Result<usize> {
    let state = requested.unwrap_or_else(|| space.zero_state());
    if state >= space.len() {
        return Err(Error::InvalidParameter(format!(
            "state {state} outside 0..{}",
            space.len()
        )));
    }
    Ok(state)
}

fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)?;
    let prices = ingest_prices(&text)?;
    let lengths: Vec<usize> = prices.iter().map(|d| d.len()).collect();
    let max_len = *lengths.iter().max().unwrap();
    let n = args.n.unwrap_or(max_len);
    if n < max_len {
        return Err(Error::InvalidDayStructure(format!(
            "--n {n} is shorter than the longest observed day ({max_len})"
        )));
    }
    let days = DayStructure::with_lengths(n, lengths)?;
    let returns = compute_returns(&prices, &days)?;
    let pooled: Vec<f64> = returns
        .intraday
        .iter()
        .flatten()
        .chain(returns.overnight.iter())
        .copied()
        .collect();
    let space = args.space.build(Some(&pooled))?;
    let path = discretize(&returns, &space);
    log(&format!(
        "ingested {} days, {} intraday returns",
        days.days(),
        path.intraday_len()
    ));
    std::fs::write(&args.output, path_to_csv(&path, Some(&returns), &space))?;
    write_meta(&args.output, "ingest", args)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let space = args.space.build(None)?;
    let text = std::fs::read_to_string(&args.input)?;
    let (path, _raw) = path_from_csv(&text, space.len())?;
    let lengths: Vec<usize> = path.days.iter().map(|d| d.len() + 1).collect();
    let n = *lengths.iter().max().unwrap();
    let day = DayStructure::with_lengths(n, lengths)?;
    let opts = EstimateOptions {
        t_max: args.t_max,
        unobserved: if args.uniform_fallback {
            RowFallback::Uniform
        } else {
            RowFallback::Error
        },
        censor_long: args.censor_long,
    };
    let kernel = estimate_kernel(&path, &opts)?;
    let overnight = if path.overnight.is_empty() {
        OvernightChain::uniform(space.len())
    } else {
        estimate_overnight(&path, RowFallback::Uniform)?
    };
    let markov = estimate_markov_baseline(&path)?;
    log(&format!(
        "fitted kernel: m = {}, t_max = {}",
        kernel.m, kernel.t_max
    ));
    let doc = ModelFile::new(&space, &day, &kernel, &overnight, markov);
    std::fs::write(&args.output, doc.to_json()? + "\n")?;
    write_meta(&args.output, "fit", args)
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let model = read_model(&args.input)?;
    let kernel = model.kernel()?;
    let report = run_tests(&kernel, args.alpha, args.low_sample_floor)?;
    let mut csv = String::from("i,j,N,g1,g2,score,pvalue,decision\n");
    for row in &report.rows {
        let decision = if row.reject {
            "H0 rejected"
        } else {
            "H0 not rejected"
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            row.i, row.j, row.n, row.g1, row.g2, row.score, row.p_value, decision
        )
        .expect("string write");
    }
    std::fs::write(&args.output, csv)?;
    // full report (including skipped pairs) as a sidecar
    std::fs::write(
        args.output.with_extension("json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    log(&format!(
        "tested {} pairs, rejected {}, skipped {}",
        report.rows.len(),
        report.rejected,
        report.skipped.len()
    ));
    write_meta(&args.output, "test", args)
}

/// `<stem>_rho<rho><ext>`.
fn rho_path(output: &Path, rho: f64) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "fpt".into());
    let ext = output
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    output.with_file_name(format!("{stem}_rho{rho}{ext}"))
}

fn cmd_fpt(args: &FptArgs) -> Result<()> {
    let model = read_model(&args.input)?;
    let space = model.state_space.clone();
    let views = derive_views(&model.kernel()?);
    let overnight = model.overnight_chain()?;
    let state = zero_state_or(&space, args.state)?;
    let n = model.day.n;
    let opts = FptOptions {
        mass_floor: args.mass_floor,
        epsilon_log: args.epsilon_log,
        grid_cap: (args.grid_cap > 0).then_some(args.grid_cap),
        ..Default::default()
    };
    for &rho in &args.rho {
        let sol = fpt_multi_day(
            &views, &space, &overnight, state, args.v, rho, n, args.days, &opts,
        )?;
        let mut csv = String::new();
        if args.empirical {
            let mc = mc_fpt_survival(
                &views,
                &overnight,
                &space,
                state,
                args.v,
                rho,
                n,
                n * args.days,
                args.paths,
                args.seed,
            )?;
            csv.push_str("t,survival,pmf,mc_survival,mc_se\n");
            for t in 0..sol.survival.len() {
                writeln!(
                    csv,
                    "{t},{},{},{},{}",
                    sol.survival[t], sol.pmf[t], mc.survival[t], mc.se[t]
                )
                .expect("string write");
            }
        } else {
            csv.push_str("t,survival,pmf\n");
            for t in 0..sol.survival.len() {
                writeln!(csv, "{t},{},{}", sol.survival[t], sol.pmf[t]).expect("string write");
            }
        }
        let out = rho_path(&args.output, rho);
        std::fs::write(&out, csv)?;
        let stats = serde_json::json!({
            "rho": rho,
            "state": state,
            "v": args.v,
            "days": args.days,
            "n": n,
            "max_atoms": sol.stats.max_atoms,
            "final_atoms": sol.stats.final_atoms,
            "discarded_mass": sol.stats.discarded_mass,
        });
        std::fs::write(out.with_extension("stats.json"), format!("{stats:#}\n"))?;
        log(&format!(
            "fpt rho = {rho}: grid peaked at {} atoms",
            sol.stats.max_atoms
        ));
    }
    write_meta(&args.output, "fpt", args)
}

fn cmd_acf(args: &AcfArgs) -> Result<()> {
    let model = read_model(&args.input)?;
    let space = model.state_space.clone();
    let views = derive_views(&model.kernel()?);
    let mut csv = String::new();
    if args.conditional {
        let state = zero_state_or(&space, args.state)?;
        csv.push_str("i,v,t,tau,value\n");
        for tau in 0..=args.tau_max {
            let point = smpret::moments::squared_acf_conditional(
                &views, &space, state, args.v, args.t, tau,
            )?;
            writeln!(csv, "{},{},{},{tau},{}", state, args.v, args.t, point.cov)
                .expect("string write");
        }
    } else {
        let law = stationary_law(&views)?;
        let acf = squared_acf_stationary(&views, &space, &law, args.tau_max)?;
        let rho = acf.rho_acf.ok_or_else(|| {
            Error::ZeroVariance("squared returns are degenerate under this model".into())
        })?;
        csv.push_str("tau,sigma,rho\n");
        for tau in 0..=args.tau_max {
            writeln!(csv, "{tau},{},{}", acf.sigma[tau], rho[tau]).expect("string write");
        }
    }
    std::fs::write(&args.output, csv)?;
    write_meta(&args.output, "acf", args)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    if args.replications == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    let model = read_model(&args.input)?;
    let space = model.state_space.clone();
    let state = zero_state_or(&space, args.state)?;
    let base = SimConfig {
        seed: args.seed,
        stream: 0,
        days: args.days.unwrap_or_else(|| model.day.days()),
        n: args.n.unwrap_or(model.day.n),
        initial_state: state,
        initial_backward: args.v,
        model: match args.model {
            ModelArg::Smp => ModelKind::SemiMarkov,
            ModelArg::Markov => ModelKind::MarkovBaseline,
        },
    };
    let views = match base.model {
        ModelKind::SemiMarkov => Some((derive_views(&model.kernel()?), model.overnight_chain()?)),
        ModelKind::MarkovBaseline => None,
    };
    for rep in 0..args.replications {
        let cfg = SimConfig {
            stream: rep as u64,
            ..base.clone()
        };
        let path = match &views {
            Some((views, chain)) => simulate_smp(views, chain, &cfg)?,
            None => simulate_markov(&model.markov_baseline, &cfg)?,
        };
        let out = if args.replications == 1 {
            args.output.clone()
        } else {
            rep_path(&args.output, rep)
        };
        std::fs::write(out, path_to_csv(&path, None, &space))?;
    }
    write_meta(&args.output, "simulate", args)
}

/// `<stem>_rep<k><ext>`.
fn rep_path(output: &Path, rep: usize) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "path".into());
    let ext = output
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    output.with_file_name(format!("{stem}_rep{rep}{ext}"))
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let space = args.space.build(None)?;
    let text = std::fs::read_to_string(&args.input)?;
    let (data, _raw) = path_from_csv(&text, space.len())?;
    let opts = EstimateOptions {
        unobserved: if args.uniform_fallback {
            RowFallback::Uniform
        } else {
            RowFallback::Error
        },
        ..Default::default()
    };
    let kernel = estimate_kernel(&data, &opts)?;
    let views = derive_views(&kernel);
    let overnight = if data.overnight.is_empty() {
        OvernightChain::uniform(space.len())
    } else {
        estimate_overnight(&data, RowFallback::Uniform)?
    };
    let markov = estimate_markov_baseline(&data)?;

    // synthetic trajectories matching the data's day layout
    let n = data.days.iter().map(|d| d.len() + 1).max().unwrap_or(2);
    let cfg = |seed: u64| SimConfig {
        seed,
        stream: 0,
        days: data.days.len(),
        n,
        initial_state: data.days[0][0],
        initial_backward: 0,
        model: ModelKind::SemiMarkov,
    };
    let smp_path = simulate_smp(&views, &overnight, &cfg(args.seed))?;
    let markov_path = simulate_markov(&markov, &cfg(args.seed.wrapping_add(1)))?;

    let curves: Vec<(&str, &DiscretizedPath)> = vec![
        ("data", &data),
        ("smp", &smp_path),
        ("markov", &markov_path),
    ];
    let mut fpt_curves = Vec::new();
    let mut acf_curves = Vec::new();
    for (name, path) in &curves {
        let est = empirical_fpt(path, &space, args.rho, args.stride, args.t_upto)?;
        let acf = empirical_sq_acf(path, &space, args.tau_max)?;
        log(&format!(
            "{name}: {} fpt scans ({} censored)",
            est.n_scans, est.n_censored
        ));
        fpt_curves.push(est.survival);
        acf_curves.push(acf);
    }

    let stem = args.output.to_string_lossy().into_owned();
    let mut fpt_csv = String::from("t,data,smp,markov\n");
    for t in 0..=args.t_upto {
        writeln!(
            fpt_csv,
            "{t},{},{},{}",
            fpt_curves[0][t], fpt_curves[1][t], fpt_curves[2][t]
        )
        .expect("string write");
    }
    std::fs::write(format!("{stem}_fpt.csv"), fpt_csv)?;
    let mut acf_csv = String::from("tau,data,smp,markov\n");
    for tau in 0..=args.tau_max {
        writeln!(
            acf_csv,
            "{tau},{},{},{}",
            acf_curves[0][tau], acf_curves[1][tau], acf_curves[2][tau]
        )
        .expect("string write");
    }
    std::fs::write(format!("{stem}_acf.csv"), acf_csv)?;

    let summary = serde_json::json!({
        "rho": args.rho,
        "l1_fpt": {
            "smp": l1(&fpt_curves[1], &fpt_curves[0]),
            "markov": l1(&fpt_curves[2], &fpt_curves[0]),
        },
        "l1_acf": {
            "smp": l1(&acf_curves[1][1..], &acf_curves[0][1..]),
            "markov": l1(&acf_curves[2][1..], &acf_curves[0][1..]),
        },
    });
    std::fs::write(format!("{stem}_summary.json"), format!("{summary:#}\n"))?;
    write_meta(&args.output, "compare", args)
}
