//! CSV records written by the harness.
//!
//! Every file starts with a comment line
//! `# elaa-loc <kind> schema=1 config_hash=<hash> seed=<seed> version=<version>`
//! followed by a header row. Floats use Rust's shortest round-trip exponent
//! format, so parsing a file and writing it again reproduces it byte for byte.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("bad float '{s}'")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.parse().map_err(|_| Error::Config(format!("bad integer '{s}'")))
}

fn parse_bool(s: &str) -> Result<bool> {
    s.parse().map_err(|_| Error::Config(format!("bad boolean '{s}'")))
}

/// Provenance carried by every file and row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(kind: &str, config_hash: &str, seed: u64) -> Self {
        Self { kind: kind.into(), config_hash: config_hash.into(), seed, version: env!("CARGO_PKG_VERSION").into() }
    }

    pub fn with_kind(&self, kind: &str) -> Self {
        Self { kind: kind.into(), ..self.clone() }
    }

    pub fn header_line(&self) -> String {
        format!(
            "# elaa-loc {} schema={} config_hash={} seed={} version={}",
            self.kind, SCHEMA_VERSION, self.config_hash, self.seed, self.version
        )
    }

    pub fn parse_header(line: &str) -> Result<Self> {
        let mut it = line.split_whitespace();
        if it.next() != Some("#") || it.next() != Some("elaa-loc") {
            return Err(Error::Config(format!("not an elaa-loc CSV header: '{line}'")));
        }
        let kind = it.next().ok_or_else(|| Error::Config("header lacks the file kind".into()))?;
        let kv: BTreeMap<&str, &str> = it.filter_map(|t| t.split_once('=')).collect();
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Config(format!("header lacks '{k}'")));
        let schema = parse_u64(get("schema")?)?;
        if schema != SCHEMA_VERSION as u64 {
            return Err(Error::Config(format!("unsupported schema {schema}")));
        }
        Ok(Self {
            kind: kind.into(),
            config_hash: get("config_hash")?.into(),
            seed: parse_u64(get("seed")?)?,
            version: get("version")?.into(),
        })
    }
}

/// A CSV row type.
pub trait Record: Sized {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    fn parse(fields: &csv::StringRecord) -> Result<Self>;
}

pub fn write_records<R: Record, W: Write>(w: W, prov: &Provenance, rows: &[R]) -> Result<()> {
    let mut w = w;
    writeln!(w, "{}", prov.header_line())?;
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(R::HEADER)?;
    for r in rows {
        cw.write_record(r.fields())?;
    }
    cw.flush()?;
    Ok(())
}

pub fn records_to_string<R: Record>(prov: &Provenance, rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, prov, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
}

pub fn write_file<R: Record>(path: &Path, prov: &Provenance, rows: &[R]) -> Result<()> {
    std::fs::write(path, records_to_string(prov, rows)?)?;
    Ok(())
}

pub fn read_records<R: Record>(text: &str) -> Result<(Provenance, Vec<R>)> {
    let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Config("empty CSV file".into()))?;
    let prov = Provenance::parse_header(first)?;
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(R::HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected columns in {} file", prov.kind)));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != R::HEADER.len() {
            return Err(Error::Config("row length differs from header".into()));
        }
        rows.push(R::parse(&rec)?);
    }
    Ok((prov, rows))
}

pub fn read_file<R: Record>(path: &Path) -> Result<(Provenance, Vec<R>)> {
    read_records(&std::fs::read_to_string(path)?)
}

/// One geometry at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub config_hash: String,
    /// Seed of the geometry.
    pub seed: u64,
    pub variable: String,
    pub value: f64,
    pub mode: String,
    pub geometry: usize,
    pub localizable: bool,
    pub rank: usize,
    pub cond: f64,
    pub peb: f64,
    pub veb: f64,
    pub oeb: f64,
    pub peb_sq: f64,
    pub veb_sq: f64,
    pub oeb_sq: f64,
}

impl Record for BoundsRow {
    const HEADER: &'static [&'static str] = &[
        "config_hash", "seed", "variable", "value", "mode", "geometry", "localizable", "rank", "cond", "peb", "veb",
        "oeb", "peb_sq", "veb_sq", "oeb_sq",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.config_hash.clone(),
            self.seed.to_string(),
            self.variable.clone(),
            fmt_f64(self.value),
            self.mode.clone(),
            self.geometry.to_string(),
            self.localizable.to_string(),
            self.rank.to_string(),
            fmt_f64(self.cond),
            fmt_f64(self.peb),
            fmt_f64(self.veb),
            fmt_f64(self.oeb),
            fmt_f64(self.peb_sq),
            fmt_f64(self.veb_sq),
            fmt_f64(self.oeb_sq),
        ]
    }

    fn parse(f: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            config_hash: f[0].into(),
            seed: parse_u64(&f[1])?,
            variable: f[2].into(),
            value: parse_f64(&f[3])?,
            mode: f[4].into(),
            geometry: parse_u64(&f[5])? as usize,
            localizable: parse_bool(&f[6])?,
            rank: parse_u64(&f[7])? as usize,
            cond: parse_f64(&f[8])?,
            peb: parse_f64(&f[9])?,
            veb: parse_f64(&f[10])?,
            oeb: parse_f64(&f[11])?,
            peb_sq: parse_f64(&f[12])?,
            veb_sq: parse_f64(&f[13])?,
            oeb_sq: parse_f64(&f[14])?,
        })
    }
}

/// Aggregate over the geometries of one sweep point. Bounds are averaged over
/// the localizable geometries and are infinite when there are none.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsPoint {
    pub config_hash: String,
    pub seed: u64,
    pub variable: String,
    pub value: f64,
    pub mode: String,
    pub geometries: usize,
    pub localizable_fraction: f64,
    pub peb: f64,
    pub veb: f64,
    pub oeb: f64,
    pub peb_sq: f64,
    pub veb_sq: f64,
    pub oeb_sq: f64,
    pub rank_min: usize,
    pub cond_max: f64,
}

impl BoundsPoint {
    pub fn localizable(&self) -> bool {
        self.localizable_fraction > 0.0
    }
}

impl Record for BoundsPoint {
    const HEADER: &'static [&'static str] = &[
        "config_hash", "seed", "variable", "value", "mode", "geometries", "localizable_fraction", "peb", "veb", "oeb",
        "peb_sq", "veb_sq", "oeb_sq", "rank_min", "cond_max",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.config_hash.clone(),
            self.seed.to_string(),
            self.variable.clone(),
            fmt_f64(self.value),
            self.mode.clone(),
            self.geometries.to_string(),
            fmt_f64(self.localizable_fraction),
            fmt_f64(self.peb),
            fmt_f64(self.veb),
            fmt_f64(self.oeb),
            fmt_f64(self.peb_sq),
            fmt_f64(self.veb_sq),
            fmt_f64(self.oeb_sq),
            self.rank_min.to_string(),
            fmt_f64(self.cond_max),
        ]
    }

    fn parse(f: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            config_hash: f[0].into(),
            seed: parse_u64(&f[1])?,
            variable: f[2].into(),
            value: parse_f64(&f[3])?,
            mode: f[4].into(),
            geometries: parse_u64(&f[5])? as usize,
            localizable_fraction: parse_f64(&f[6])?,
            peb: parse_f64(&f[7])?,
            veb: parse_f64(&f[8])?,
            oeb: parse_f64(&f[9])?,
            peb_sq: parse_f64(&f[10])?,
            veb_sq: parse_f64(&f[11])?,
            oeb_sq: parse_f64(&f[12])?,
            rank_min: parse_u64(&f[13])? as usize,
            cond_max: parse_f64(&f[14])?,
        })
    }
}

/// One Monte Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub config_hash: String,
    /// Noise seed of the trial.
    pub seed: u64,
    pub variable: String,
    pub value: f64,
    pub trial: usize,
    /// `false` when the initializer or the solver failed.
    pub ok: bool,
    pub converged: bool,
    pub iters: usize,
    pub stop_reason: String,
    pub cost: f64,
    pub init_err_p: f64,
    pub err_p: f64,
    pub err_v: f64,
    pub err_o: f64,
    pub peb: f64,
    pub veb: f64,
    pub oeb: f64,
}

impl Record for TrialRow {
    const HEADER: &'static [&'static str] = &[
        "config_hash", "seed", "variable", "value", "trial", "ok", "converged", "iters", "stop_reason", "cost",
        "init_err_p", "err_p", "err_v", "err_o", "peb", "veb", "oeb",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.config_hash.clone(),
            self.seed.to_string(),
            self.variable.clone(),
            fmt_f64(self.value),
            self.trial.to_string(),
            self.ok.to_string(),
            self.converged.to_string(),
            self.iters.to_string(),
            self.stop_reason.clone(),
            fmt_f64(self.cost),
            fmt_f64(self.init_err_p),
            fmt_f64(self.err_p),
            fmt_f64(self.err_v),
            fmt_f64(self.err_o),
            fmt_f64(self.peb),
            fmt_f64(self.veb),
            fmt_f64(self.oeb),
        ]
    }

    fn parse(f: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            config_hash: f[0].into(),
            seed: parse_u64(&f[1])?,
            variable: f[2].into(),
            value: parse_f64(&f[3])?,
            trial: parse_u64(&f[4])? as usize,
            ok: parse_bool(&f[5])?,
            converged: parse_bool(&f[6])?,
            iters: parse_u64(&f[7])? as usize,
            stop_reason: f[8].into(),
            cost: parse_f64(&f[9])?,
            init_err_p: parse_f64(&f[10])?,
            err_p: parse_f64(&f[11])?,
            err_v: parse_f64(&f[12])?,
            err_o: parse_f64(&f[13])?,
            peb: parse_f64(&f[14])?,
            veb: parse_f64(&f[15])?,
            oeb: parse_f64(&f[16])?,
        })
    }
}

/// Aggregate over the trials of one sweep point. RMSEs use the successful
/// trials only; `convergence_rate` counts failed trials as not converged.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePoint {
    pub config_hash: String,
    pub seed: u64,
    pub variable: String,
    pub value: f64,
    pub trials: usize,
    pub failed: usize,
    pub convergence_rate: f64,
    pub peb: f64,
    pub veb: f64,
    pub oeb: f64,
    pub rmse_p: f64,
    pub rmse_v: f64,
    pub rmse_o: f64,
    pub ratio_p: f64,
    pub ratio_v: f64,
    pub ratio_o: f64,
}

impl Record for EstimatePoint {
    const HEADER: &'static [&'static str] = &[
        "config_hash", "seed", "variable", "value", "trials", "failed", "convergence_rate", "peb", "veb", "oeb",
        "rmse_p", "rmse_v", "rmse_o", "ratio_p", "ratio_v", "ratio_o",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.config_hash.clone(),
            self.seed.to_string(),
            self.variable.clone(),
            fmt_f64(self.value),
            self.trials.to_string(),
            self.failed.to_string(),
            fmt_f64(self.convergence_rate),
            fmt_f64(self.peb),
            fmt_f64(self.veb),
            fmt_f64(self.oeb),
            fmt_f64(self.rmse_p),
            fmt_f64(self.rmse_v),
            fmt_f64(self.rmse_o),
            fmt_f64(self.ratio_p),
            fmt_f64(self.ratio_v),
            fmt_f64(self.ratio_o),
        ]
    }

    fn parse(f: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            config_hash: f[0].into(),
            seed: parse_u64(&f[1])?,
            variable: f[2].into(),
            value: parse_f64(&f[3])?,
            trials: parse_u64(&f[4])? as usize,
            failed: parse_u64(&f[5])? as usize,
            convergence_rate: parse_f64(&f[6])?,
            peb: parse_f64(&f[7])?,
            veb: parse_f64(&f[8])?,
            oeb: parse_f64(&f[9])?,
            rmse_p: parse_f64(&f[10])?,
            rmse_v: parse_f64(&f[11])?,
            rmse_o: parse_f64(&f[12])?,
            ratio_p: parse_f64(&f[13])?,
            ratio_v: parse_f64(&f[14])?,
            ratio_o: parse_f64(&f[15])?,
        })
    }
}

/// Per-mode aggregate of a Doppler-only study with ratios to the joint mode.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub config_hash: String,
    pub seed: u64,
    pub mode: String,
    pub geometries: usize,
    pub localizable_fraction: f64,
    pub peb: f64,
    pub veb: f64,
    pub oeb: f64,
    pub peb_ratio: f64,
    pub veb_ratio: f64,
    pub oeb_ratio: f64,
}

impl Record for StudyRow {
    const HEADER: &'static [&'static str] = &[
        "config_hash", "seed", "mode", "geometries", "localizable_fraction", "peb", "veb", "oeb", "peb_ratio",
        "veb_ratio", "oeb_ratio",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.config_hash.clone(),
            self.seed.to_string(),
            self.mode.clone(),
            self.geometries.to_string(),
            fmt_f64(self.localizable_fraction),
            fmt_f64(self.peb),
            fmt_f64(self.veb),
            fmt_f64(self.oeb),
            fmt_f64(self.peb_ratio),
            fmt_f64(self.veb_ratio),
            fmt_f64(self.oeb_ratio),
        ]
    }

    fn parse(f: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            config_hash: f[0].into(),
            seed: parse_u64(&f[1])?,
            mode: f[2].into(),
            geometries: parse_u64(&f[3])? as usize,
            localizable_fraction: parse_f64(&f[4])?,
            peb: parse_f64(&f[5])?,
            veb: parse_f64(&f[6])?,
            oeb: parse_f64(&f[7])?,
            peb_ratio: parse_f64(&f[8])?,
            veb_ratio: parse_f64(&f[9])?,
            oeb_ratio: parse_f64(&f[10])?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1e-300, -3.25e17, f64::INFINITY, 5e-324, 1.0 / 3.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert!(fmt_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn header_round_trip() {
        let p = Provenance::new("bounds_raw", "0123abcd", 42);
        assert_eq!(Provenance::parse_header(&p.header_line()).unwrap(), p);
    }
}
