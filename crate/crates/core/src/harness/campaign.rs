//! Bound sweeps, Monte Carlo estimation campaigns and the Doppler-only study.
//!
//! Work items run on the rayon pool; results are collected in canonical
//! order (sweep value, then geometry or trial index), so output does not
//! depend on the number of threads.

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{ScenarioConfig, SweepMode, SweepSpec, SweepVariable};
use super::records::*;
use crate::estimator::{refine, refine_multistart, Jitter, StartPoint};
use crate::fisher::{analyze_with_stats, assemble_channel_fim, BoundReport, FisherReport};
use crate::initializer::{initialize, InitConfig};
use crate::measurement::{noise_floor_from_crlb, sample, NoiseFloor};
use crate::rng::{mix, STREAM_GEOMETRY, STREAM_TRIAL};
use crate::scenario::Scenario;
use crate::waveform::{compute_stats, Quadrature};
use crate::{Error, Result};

pub const BOUNDS_RAW: &str = "bounds_raw.csv";
pub const BOUNDS_SUMMARY: &str = "bounds_summary.csv";
pub const TRIALS_RAW: &str = "trials.csv";
pub const ESTIMATE_SUMMARY: &str = "estimate_summary.csv";
pub const STUDY_RAW: &str = "doppler_raw.csv";
pub const STUDY_SUMMARY: &str = "doppler_summary.csv";

/// Seed of geometry `g`. Geometry 0 uses the config seed itself.
pub fn geometry_seed(seed: u64, g: usize) -> u64 {
    if g == 0 {
        seed
    } else {
        mix(&[seed, STREAM_GEOMETRY, g as u64])
    }
}

/// Noise seed of trial `t`. It does not depend on the sweep value, so every
/// point of a sweep sees the same unit-variance noise draws.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    mix(&[seed, STREAM_TRIAL, t as u64])
}

/// Results of one harness run.
#[derive(Debug, Clone)]
pub struct CampaignResult<R, P> {
    pub provenance: Provenance,
    pub raw: Vec<R>,
    pub points: Vec<P>,
    /// Reported on stderr only; never written to CSV.
    pub wall_time: Duration,
}

pub type BoundsResult = CampaignResult<BoundsRow, BoundsPoint>;
pub type EstimationResult = CampaignResult<TrialRow, EstimatePoint>;
pub type StudyResult = CampaignResult<BoundsRow, StudyRow>;

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn evaluate(scenario: &Scenario, cfg: &ScenarioConfig, mode: SweepMode) -> Result<FisherReport> {
    let settings = cfg.bound_settings(mode);
    let stats = compute_stats(&scenario.waveform, &Quadrature::default())?;
    analyze_with_stats(scenario, &settings, &stats)
}

fn bounds_row(hash: &str, seed: u64, variable: &str, value: f64, mode: SweepMode, g: usize, b: &BoundReport) -> BoundsRow {
    BoundsRow {
        config_hash: hash.into(),
        seed,
        variable: variable.into(),
        value,
        mode: mode.as_str().into(),
        geometry: g,
        localizable: b.localizable,
        rank: b.rank_kappa1,
        cond: b.condition_number,
        peb: b.peb,
        veb: b.veb,
        oeb: b.oeb,
        peb_sq: b.peb_sq,
        veb_sq: b.veb_sq,
        oeb_sq: b.oeb_sq,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::INFINITY
    } else {
        s / n as f64
    }
}

/// Aggregates raw bound rows into one row per (variable, value, mode), in
/// the order of first appearance.
pub fn summarize_bounds(prov: &Provenance, raw: &[BoundsRow]) -> Vec<BoundsPoint> {
    let mut keys: Vec<(String, u64, String)> = Vec::new();
    for r in raw {
        let k = (r.variable.clone(), r.value.to_bits(), r.mode.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(variable, bits, mode)| {
            let rows: Vec<&BoundsRow> =
                raw.iter().filter(|r| r.variable == variable && r.value.to_bits() == bits && r.mode == mode).collect();
            let good: Vec<&&BoundsRow> = rows.iter().filter(|r| r.localizable).collect();
            BoundsPoint {
                config_hash: prov.config_hash.clone(),
                seed: prov.seed,
                variable,
                value: f64::from_bits(bits),
                mode,
                geometries: rows.len(),
                localizable_fraction: good.len() as f64 / rows.len() as f64,
                peb: mean(good.iter().map(|r| r.peb)),
                veb: mean(good.iter().map(|r| r.veb)),
                oeb: mean(good.iter().map(|r| r.oeb)),
                peb_sq: mean(good.iter().map(|r| r.peb_sq)),
                veb_sq: mean(good.iter().map(|r| r.veb_sq)),
                oeb_sq: mean(good.iter().map(|r| r.oeb_sq)),
                rank_min: rows.iter().map(|r| r.rank).min().unwrap_or(0),
                cond_max: rows.iter().map(|r| r.cond).fold(0.0, f64::max),
            }
        })
        .collect()
}

/// Bounds at every sweep point, averaged over `spec.geometries` random
/// geometries. Anchors are placed around the base array, so a sweep value
/// never moves them.
pub fn run_bounds_sweep(spec: &SweepSpec, base: &ScenarioConfig) -> Result<BoundsResult> {
    spec.validate()?;
    let start = Instant::now();
    let hash = base.hash();
    let seed = base.seed.value;
    let mode = match spec.mode {
        SweepMode::FullEstimation => SweepMode::BoundsOnly,
        m => m,
    };
    let configs: Vec<ScenarioConfig> =
        spec.values.iter().map(|&v| base.with_sweep_value(spec.variable, v)).collect::<Result<_>>()?;
    let items: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|p| (0..spec.geometries).map(move |g| (p, g))).collect();
    let raw = items
        .par_iter()
        .map(|&(p, g)| {
            let gs = geometry_seed(seed, g);
            let sc = configs[p].build_scenario_around(gs, base)?;
            let rep = evaluate(&sc, &configs[p], mode)?;
            Ok(bounds_row(&hash, gs, spec.variable.as_str(), spec.values[p], mode, g, &rep.bounds))
        })
        .collect::<Result<Vec<_>>>()?;
    let prov = Provenance::new("bounds_raw", &hash, seed);
    let points = summarize_bounds(&prov, &raw);
    Ok(CampaignResult { provenance: prov, raw, points, wall_time: start.elapsed() })
}

/// Everything needed to run trials at one sweep point.
pub struct TrialContext {
    pub scenario: Scenario,
    pub report: FisherReport,
    pub noise: NoiseFloor,
    pub config: ScenarioConfig,
}

impl TrialContext {
    pub fn new(base: &ScenarioConfig, variable: SweepVariable, value: f64) -> Result<Self> {
        let config = base.with_sweep_value(variable, value)?;
        let scenario = config.build_scenario_around(base.seed.value, base)?;
        let report = evaluate(&scenario, &config, SweepMode::FullEstimation)?;
        let settings = config.bound_settings(SweepMode::FullEstimation);
        let cf = assemble_channel_fim(&report.channel, &report.stats, &settings.fim);
        let noise = noise_floor_from_crlb(&cf, config.noise.sigma_mode)?;
        Ok(Self { scenario, report, noise, config })
    }

    /// Runs trial `t`. Initializer and solver errors give a failed row.
    pub fn trial(&self, hash: &str, variable: &str, value: f64, t: usize) -> Result<TrialRow> {
        let seed = trial_seed(self.config.seed.value, t);
        let b = &self.report.bounds;
        let mut row = TrialRow {
            config_hash: hash.into(),
            seed,
            variable: variable.into(),
            value,
            trial: t,
            ok: false,
            converged: false,
            iters: 0,
            stop_reason: "failed".into(),
            cost: f64::NAN,
            init_err_p: f64::NAN,
            err_p: f64::NAN,
            err_v: f64::NAN,
            err_o: f64::NAN,
            peb: b.peb,
            veb: b.veb,
            oeb: b.oeb,
        };
        let meas = sample(&self.report.channel, &self.noise, seed)?;
        let solver = &self.config.solver;
        let init_cfg = InitConfig { default_set_size: solver.index_set_size, ..InitConfig::default() };
        let truth = &self.scenario.receiver;
        let init = match initialize(&meas, &self.scenario, &init_cfg) {
            Ok(i) => i,
            Err(e) if e.is_numerical() => return Ok(row),
            Err(e) => return Err(e),
        };
        row.init_err_p = (init.position0 - truth.position0).norm();
        let start = StartPoint::from(&init);
        let cfg = solver.solver_config();
        let est = if solver.restarts > 0 {
            refine_multistart(&start, &meas, &self.scenario, &cfg, solver.restarts, &Jitter::default(), seed)
        } else {
            refine(&start, &meas, &self.scenario, &cfg)
        };
        let est = match est {
            Ok(e) => e,
            Err(e) if e.is_numerical() => return Ok(row),
            Err(e) => return Err(e),
        };
        row.ok = true;
        row.converged = est.converged;
        row.iters = est.iteration;
        row.stop_reason = est.stop_reason.as_str().into();
        row.cost = est.cost;
        row.err_p = (est.position0 - truth.position0).norm();
        row.err_v = (est.velocity - truth.velocity).norm();
        row.err_o = (est.orientation - truth.orientation).norm();
        Ok(row)
    }
}

/// Reruns a single trial row from its config.
pub fn reproduce_trial(base: &ScenarioConfig, variable: SweepVariable, value: f64, t: usize) -> Result<TrialRow> {
    TrialContext::new(base, variable, value)?.trial(&base.hash(), variable.as_str(), value, t)
}

fn rmse(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        (s / n as f64).sqrt()
    }
}

/// Aggregates trial rows into one row per (variable, value).
pub fn summarize_trials(prov: &Provenance, raw: &[TrialRow]) -> Vec<EstimatePoint> {
    let mut keys: Vec<(String, u64)> = Vec::new();
    for r in raw {
        let k = (r.variable.clone(), r.value.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(variable, bits)| {
            let rows: Vec<&TrialRow> =
                raw.iter().filter(|r| r.variable == variable && r.value.to_bits() == bits).collect();
            let ok: Vec<&&TrialRow> = rows.iter().filter(|r| r.ok).collect();
            let first = rows[0];
            let rmse_p = rmse(ok.iter().map(|r| r.err_p));
            let rmse_v = rmse(ok.iter().map(|r| r.err_v));
            let rmse_o = rmse(ok.iter().map(|r| r.err_o));
            EstimatePoint {
                config_hash: prov.config_hash.clone(),
                seed: prov.seed,
                variable,
                value: f64::from_bits(bits),
                trials: rows.len(),
                failed: rows.len() - ok.len(),
                convergence_rate: rows.iter().filter(|r| r.converged).count() as f64 / rows.len() as f64,
                peb: first.peb,
                veb: first.veb,
                oeb: first.oeb,
                rmse_p,
                rmse_v,
                rmse_o,
                ratio_p: rmse_p / first.peb,
                ratio_v: rmse_v / first.veb,
                ratio_o: rmse_o / first.oeb,
            }
        })
        .collect()
}

/// Monte Carlo RMSE against the bounds at every sweep point, on the fixed
/// geometry given by the config seed.
pub fn run_estimation_campaign(spec: &SweepSpec, base: &ScenarioConfig) -> Result<EstimationResult> {
    spec.validate()?;
    let start = Instant::now();
    let hash = base.hash();
    let contexts: Vec<TrialContext> = spec
        .values
        .par_iter()
        .map(|&v| TrialContext::new(base, spec.variable, v))
        .collect::<Result<_>>()?;
    let items: Vec<(usize, usize)> =
        (0..contexts.len()).flat_map(|p| (0..spec.trials_per_point).map(move |t| (p, t))).collect();
    let raw = items
        .par_iter()
        .map(|&(p, t)| contexts[p].trial(&hash, spec.variable.as_str(), spec.values[p], t))
        .collect::<Result<Vec<_>>>()?;
    let prov = Provenance::new("trials", &hash, base.seed.value);
    let points = summarize_trials(&prov, &raw);
    Ok(CampaignResult { provenance: prov, raw, points, wall_time: start.elapsed() })
}

pub const STUDY_MODES: [SweepMode; 3] = [SweepMode::BoundsOnly, SweepMode::DopplerOnly, SweepMode::DelayOnly];

fn study_mode_name(m: SweepMode) -> &'static str {
    match m {
        SweepMode::BoundsOnly | SweepMode::FullEstimation => "joint",
        m => m.as_str(),
    }
}

/// Aggregates study rows per mode, with bound ratios to the joint mode.
pub fn summarize_study(prov: &Provenance, raw: &[BoundsRow]) -> Vec<StudyRow> {
    let points = summarize_bounds(prov, raw);
    let joint = points.iter().find(|p| p.mode == "joint").cloned();
    points
        .into_iter()
        .map(|p| {
            let ratio = |x: f64, j: Option<f64>| j.map_or(f64::NAN, |j| x / j);
            StudyRow {
                peb_ratio: ratio(p.peb, joint.as_ref().map(|j| j.peb)),
                veb_ratio: ratio(p.veb, joint.as_ref().map(|j| j.veb)),
                oeb_ratio: ratio(p.oeb, joint.as_ref().map(|j| j.oeb)),
                config_hash: p.config_hash,
                seed: p.seed,
                mode: p.mode,
                geometries: p.geometries,
                localizable_fraction: p.localizable_fraction,
                peb: p.peb,
                veb: p.veb,
                oeb: p.oeb,
            }
        })
        .collect()
}

/// Joint, Doppler-only and delay-only bounds on `geometries` geometries of
/// the base scenario.
pub fn run_doppler_only_study(base: &ScenarioConfig, geometries: usize) -> Result<StudyResult> {
    if geometries == 0 {
        return Err(Error::Config("the study needs at least one geometry".into()));
    }
    let start = Instant::now();
    let hash = base.hash();
    let seed = base.seed.value;
    let items: Vec<(usize, usize)> = (0..STUDY_MODES.len()).flat_map(|m| (0..geometries).map(move |g| (m, g))).collect();
    let raw = items
        .par_iter()
        .map(|&(m, g)| {
            let gs = geometry_seed(seed, g);
            let sc = base.build_scenario(gs)?;
            let rep = evaluate(&sc, base, STUDY_MODES[m])?;
            let mut row = bounds_row(&hash, gs, "none", 0.0, STUDY_MODES[m], g, &rep.bounds);
            row.mode = study_mode_name(STUDY_MODES[m]).into();
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let prov = Provenance::new("doppler_raw", &hash, seed);
    let points = summarize_study(&prov, &raw);
    Ok(CampaignResult { provenance: prov, raw, points, wall_time: start.elapsed() })
}

impl BoundsResult {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_file(&dir.join(BOUNDS_RAW), &self.provenance, &self.raw)?;
        write_file(&dir.join(BOUNDS_SUMMARY), &self.provenance.with_kind("bounds_summary"), &self.points)
    }

    pub fn all_non_localizable(&self) -> bool {
        self.points.iter().all(|p| !p.localizable())
    }
}

impl EstimationResult {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_file(&dir.join(TRIALS_RAW), &self.provenance, &self.raw)?;
        write_file(&dir.join(ESTIMATE_SUMMARY), &self.provenance.with_kind("estimate_summary"), &self.points)
    }

    pub fn all_non_localizable(&self) -> bool {
        self.points.iter().all(|p| !p.peb.is_finite())
    }
}

impl StudyResult {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_file(&dir.join(STUDY_RAW), &self.provenance, &self.raw)?;
        write_file(&dir.join(STUDY_SUMMARY), &self.provenance.with_kind("doppler_summary"), &self.points)
    }

    pub fn all_non_localizable(&self) -> bool {
        self.points.iter().all(|p| p.localizable_fraction == 0.0)
    }
}

/// Outcome of checking one summary file against its raw file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub summary: String,
    pub matches: bool,
}

fn verify_pair<R: Record, P: Record>(
    dir: &Path,
    raw_name: &str,
    summary_name: &str,
    kind: &str,
    summarize: impl Fn(&Provenance, &[R]) -> Vec<P>,
) -> Result<Option<VerifyOutcome>> {
    let raw_path = dir.join(raw_name);
    let sum_path = dir.join(summary_name);
    if !raw_path.exists() && !sum_path.exists() {
        return Ok(None);
    }
    let (prov, raw) = read_file::<R>(&raw_path)?;
    let expected = records_to_string(&prov.with_kind(kind), &summarize(&prov, &raw))?;
    let actual = std::fs::read_to_string(&sum_path)?;
    Ok(Some(VerifyOutcome { summary: summary_name.into(), matches: expected == actual }))
}

/// Recomputes every summary file in `dir` from its raw file and compares the
/// bytes. Errors if `dir` holds no harness output.
pub fn verify_dir(dir: &Path) -> Result<Vec<VerifyOutcome>> {
    let mut out = Vec::new();
    out.extend(verify_pair(dir, BOUNDS_RAW, BOUNDS_SUMMARY, "bounds_summary", summarize_bounds)?);
    out.extend(verify_pair(dir, TRIALS_RAW, ESTIMATE_SUMMARY, "estimate_summary", summarize_trials)?);
    out.extend(verify_pair(dir, STUDY_RAW, STUDY_SUMMARY, "doppler_summary", summarize_study)?);
    if out.is_empty() {
        return Err(Error::Config(format!("no harness output in {}", dir.display())));
    }
    Ok(out)
}

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const FIM_TERMS_FILE: &str = "fim_terms.csv";

/// Writes the pinned scenario, one noisy measurement draw (trial 0) and the
/// per-triple decomposition of the delay Fisher entry into
/// `f_d^2 + alpha_1^2 + f_d alpha_2`.
pub fn scenario_gen(base: &ScenarioConfig, dir: &Path) -> Result<BoundReport> {
    std::fs::create_dir_all(dir)?;
    let ctx = TrialContext::new(base, SweepVariable::Snr, base.noise.snr_db)?;
    let pinned = base.pinned(&ctx.scenario);
    std::fs::write(dir.join(SCENARIO_FILE), pinned.to_toml_string()?)?;
    let prov = Provenance::new("measurements", &base.hash(), trial_seed(base.seed.value, 0));
    let meas = sample(&ctx.report.channel, &ctx.noise, prov.seed)?;
    let mut buf = format!("{}\n", prov.header_line()).into_bytes();
    meas.write_csv(&mut buf)?;
    std::fs::write(dir.join(MEASUREMENTS_FILE), buf)?;

    let ch = &ctx.report.channel;
    let mut w = format!("{}\n", prov.with_kind("fim_terms").header_line()).into_bytes();
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        cw.write_record(["b", "u", "k", "fd_sq", "alpha1_sq", "cross"])?;
        for b in 0..ch.num_anchors {
            for k in 0..ch.num_slots {
                for u in 0..ch.num_elements {
                    let (t1, t2, t3) = crate::fisher::delay_fim_terms(ch.doppler_freq[ch.index(b, u, k)], &ctx.report.stats);
                    cw.write_record([b.to_string(), u.to_string(), k.to_string(), fmt_f64(t1), fmt_f64(t2), fmt_f64(t3)])?;
                }
            }
        }
        cw.flush()?;
    }
    std::fs::write(dir.join(FIM_TERMS_FILE), w)?;
    Ok(ctx.report.bounds)
}
