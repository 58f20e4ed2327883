//! Command-line front end for bound sweeps, estimation campaigns and checks.
//!
//! Exit codes: 0 ok, 1 usage or configuration error, 2 numerical failure or
//! a summary that does not match its raw file, 3 no sweep point localizable.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use elaa_loc::harness::{self, ScenarioConfig, SweepMode, SweepSpec, SweepVariable};
use elaa_loc::Error;

#[derive(Parser)]
#[command(name = "elaa-loc", version, about = "Near-field localization bounds and estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (TOML). Defaults to the reference scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set array.num_elements=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep, e.g. `--sweep num_elements=100,200,300`.
    #[arg(long, value_name = "VAR=V1,V2,..")]
    sweep: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    BoundsOnly,
    FullEstimation,
    DopplerOnly,
    DelayOnly,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::BoundsOnly => SweepMode::BoundsOnly,
            ModeArg::FullEstimation => SweepMode::FullEstimation,
            ModeArg::DopplerOnly => SweepMode::DopplerOnly,
            ModeArg::DelayOnly => SweepMode::DelayOnly,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// C-CRB bounds over a sweep.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Random geometries per sweep point.
        #[arg(long)]
        geometries: Option<usize>,
    },
    /// Monte Carlo estimation against the bounds.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Trials per sweep point.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Joint, Doppler-only and delay-only bounds side by side.
    DopplerStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        geometries: usize,
    },
    /// Recompute summaries from raw files and compare.
    Verify {
        /// Directory holding harness output.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the pinned scenario, a measurement draw and Fisher term breakdown.
    ScenarioGen {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let text = match &common.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    Ok(ScenarioConfig::from_toml_with_overrides(&text, &common.set)?)
}

fn parse_sweep(s: &str) -> Result<(SweepVariable, Vec<f64>), Failure> {
    let (var, vals) = s.split_once('=').ok_or_else(|| Failure::Usage(format!("--sweep '{s}' is not VAR=V1,V2")))?;
    let var = SweepVariable::parse(var.trim())?;
    let vals = vals
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad sweep value '{v}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((var, vals))
}

/// Resolves the sweep from the config and the flags. Without either, the
/// sweep is the single configured SNR.
fn resolve_sweep(
    cfg: &ScenarioConfig,
    args: &SweepArgs,
    default_mode: SweepMode,
    trials: Option<usize>,
    geometries: Option<usize>,
) -> Result<SweepSpec, Failure> {
    let mut spec = cfg.sweep.clone().unwrap_or(SweepSpec {
        variable: SweepVariable::Snr,
        values: vec![cfg.noise.snr_db],
        trials_per_point: 1,
        geometries: 1,
        mode: default_mode,
    });
    if let Some(s) = &args.sweep {
        let (v, vals) = parse_sweep(s)?;
        spec.variable = v;
        spec.values = vals;
    }
    if let Some(m) = args.mode {
        spec.mode = m.into();
    }
    if let Some(t) = trials {
        spec.trials_per_point = t;
    }
    if let Some(g) = geometries {
        spec.geometries = g;
    }
    spec.validate()?;
    Ok(spec)
}

fn report_time(what: &str, t: std::time::Duration) {
    eprintln!("{what}: wall time {:.3} s", t.as_secs_f64());
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Bounds { common, sweep, geometries } => {
            let cfg = load(&common)?;
            let spec = resolve_sweep(&cfg, &sweep, SweepMode::BoundsOnly, None, geometries)?;
            if spec.mode == SweepMode::FullEstimation {
                return Err(Failure::Usage("use the estimate subcommand for full_estimation".into()));
            }
            let res = harness::with_threads(common.threads, || harness::run_bounds_sweep(&spec, &cfg))??;
            res.write(&common.out)?;
            report_time("bounds", res.wall_time);
            for p in &res.points {
                println!(
                    "{}={:e} localizable={:.3} peb={:e} veb={:e} oeb={:e}",
                    p.variable, p.value, p.localizable_fraction, p.peb, p.veb, p.oeb
                );
            }
            Ok(exit_for(res.all_non_localizable()))
        }
        Command::Estimate { common, sweep, trials } => {
            let cfg = load(&common)?;
            let mut spec = resolve_sweep(&cfg, &sweep, SweepMode::FullEstimation, trials, None)?;
            spec.mode = SweepMode::FullEstimation;
            let res = harness::with_threads(common.threads, || harness::run_estimation_campaign(&spec, &cfg))??;
            res.write(&common.out)?;
            report_time("estimate", res.wall_time);
            for p in &res.points {
                println!(
                    "{}={:e} trials={} failed={} conv={:.3} rmse/peb={:.3} rmse/veb={:.3} rmse/oeb={:.3}",
                    p.variable, p.value, p.trials, p.failed, p.convergence_rate, p.ratio_p, p.ratio_v, p.ratio_o
                );
            }
            Ok(exit_for(res.all_non_localizable()))
        }
        Command::DopplerStudy { common, geometries } => {
            let cfg = load(&common)?;
            let res = harness::with_threads(common.threads, || harness::run_doppler_only_study(&cfg, geometries))??;
            res.write(&common.out)?;
            report_time("doppler-study", res.wall_time);
            for p in &res.points {
                println!(
                    "{}: localizable={:.3} peb={:e} veb={:e} oeb={:e} ratios {:.3e} {:.3e} {:.3e}",
                    p.mode, p.localizable_fraction, p.peb, p.veb, p.oeb, p.peb_ratio, p.veb_ratio, p.oeb_ratio
                );
            }
            Ok(exit_for(res.all_non_localizable()))
        }
        Command::Verify { out } => verify(&out),
        Command::ScenarioGen { common } => {
            let cfg = load(&common)?;
            let b = harness::scenario_gen(&cfg, &common.out)?;
            println!("wrote {}: peb={:e} veb={:e} oeb={:e} rank={}", common.out.display(), b.peb, b.veb, b.oeb, b.rank_kappa1);
            Ok(exit_for(!b.localizable))
        }
    }
}

fn verify(dir: &Path) -> Result<ExitCode, Failure> {
    let outcomes = harness::verify_dir(dir)?;
    let mut bad = Vec::new();
    for o in &outcomes {
        println!("{}: {}", o.summary, if o.matches { "ok" } else { "MISMATCH" });
        if !o.matches {
            bad.push(o.summary.clone());
        }
    }
    if bad.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Failure::Mismatch(bad.join(", ")))
    }
}

fn exit_for(all_non_localizable: bool) -> ExitCode {
    if all_non_localizable {
        eprintln!("no sweep point is localizable");
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(c) => c,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("summary does not match raw file: {m}");
            ExitCode::from(2)
        }
    }
}
