//! Run records and their two serializations.
//!
//! A record is self-contained: it embeds the configuration (inline and as a
//! hash) next to every solve row and check report. Two formats are emitted:
//!
//! - record stream: one JSON object per line, tagged by `type`, fully
//!   lossless (parsing and re-emitting reproduces the bytes);
//! - tabular: comma-separated files with fixed column orders and every
//!   float printed at 17 significant digits, also byte-stable under a
//!   parse/emit round trip.
//!
//! Timings are kept in their own rows so records can be compared modulo
//! wall-clock noise.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::CheckReport;

pub const ARTIFACT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    pub label: String,
    pub mu: f64,
    pub lambda: f64,
    pub mass: f64,
    pub n_max: u32,
    pub dim: usize,
    pub energy: f64,
    pub gap: f64,
    pub sector: String,
    pub number_expect: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mass: f64,
    pub energy: f64,
    pub energy_minus_massless: f64,
    pub number_expect: f64,
    pub sector: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub label: String,
    pub millis: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub artifact_version: String,
    pub config_hash: String,
    pub config_toml: String,
    pub solves: Vec<SolveRow>,
    pub sweep: Vec<SweepRow>,
    pub checks: Vec<CheckReport>,
    pub timings: Vec<TimingRow>,
}

impl RunRecord {
    pub fn new(config_hash: String, config_toml: String) -> Self {
        RunRecord {
            artifact_version: ARTIFACT_VERSION.to_string(),
            config_hash,
            config_toml,
            solves: Vec::new(),
            sweep: Vec::new(),
            checks: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Equality modulo wall-clock timings.
    pub fn same_results(&self, other: &RunRecord) -> bool {
        self.artifact_version == other.artifact_version
            && self.config_hash == other.config_hash
            && self.config_toml == other.config_toml
            && self.solves == other.solves
            && self.sweep == other.sweep
            && self.checks == other.checks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RecordLine {
    Meta {
        artifact_version: String,
        config_hash: String,
        config_toml: String,
    },
    Solve(SolveRow),
    Sweep(SweepRow),
    Check(CheckReport),
    Timing(TimingRow),
}

// ---------------------------------------------------------------------------
// record stream (JSON lines)
// ---------------------------------------------------------------------------

pub fn emit_record_stream(record: &RunRecord) -> String {
    let mut out = String::new();
    let mut push = |line: &RecordLine| {
        out.push_str(&serde_json::to_string(line).expect("record serialization is infallible"));
        out.push('\n');
    };
    push(&RecordLine::Meta {
        artifact_version: record.artifact_version.clone(),
        config_hash: record.config_hash.clone(),
        config_toml: record.config_toml.clone(),
    });
    for r in &record.solves {
        push(&RecordLine::Solve(r.clone()));
    }
    for r in &record.sweep {
        push(&RecordLine::Sweep(r.clone()));
    }
    for r in &record.checks {
        push(&RecordLine::Check(r.clone()));
    }
    for r in &record.timings {
        push(&RecordLine::Timing(r.clone()));
    }
    out
}

pub fn parse_record_stream(text: &str) -> Result<RunRecord> {
    let mut record: Option<RunRecord> = None;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(line)
            .map_err(|e| Error::Record(format!("line {}: {e}", n + 1)))?;
        match parsed {
            RecordLine::Meta {
                artifact_version,
                config_hash,
                config_toml,
            } => {
                if record.is_some() {
                    return Err(Error::Record("duplicate meta record".into()));
                }
                let mut r = RunRecord::new(config_hash, config_toml);
                r.artifact_version = artifact_version;
                record = Some(r);
            }
            other => {
                let r = record
                    .as_mut()
                    .ok_or_else(|| Error::Record("record stream must start with meta".into()))?;
                match other {
                    RecordLine::Solve(x) => r.solves.push(x),
                    RecordLine::Sweep(x) => r.sweep.push(x),
                    RecordLine::Check(x) => r.checks.push(x),
                    RecordLine::Timing(x) => r.timings.push(x),
                    RecordLine::Meta { .. } => unreachable!(),
                }
            }
        }
    }
    record.ok_or_else(|| Error::Record("empty record stream".into()))
}

// ---------------------------------------------------------------------------
// tabular (comma-separated, 17 significant digits)
// ---------------------------------------------------------------------------

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(out: &mut String, record_hash: &str, columns: &str) {
    writeln!(out, "# config_hash={record_hash}").unwrap();
    writeln!(out, "# artifact_version={ARTIFACT_VERSION}").unwrap();
    writeln!(out, "{columns}").unwrap();
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn csv_unquote(s: &str) -> Result<String> {
    let inner = s
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .ok_or_else(|| Error::Record(format!("expected quoted field, got `{s}`")))?;
    Ok(inner.replace("\"\"", "\""))
}

pub fn emit_solves_csv(hash: &str, rows: &[SolveRow]) -> String {
    let mut out = String::new();
    header(
        &mut out,
        hash,
        "label,mu,lambda,mass,n_max,dim,energy,gap,sector,number_expect,residual",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.label,
            f(r.mu),
            f(r.lambda),
            f(r.mass),
            r.n_max,
            r.dim,
            f(r.energy),
            f(r.gap),
            r.sector,
            f(r.number_expect),
            f(r.residual)
        )
        .unwrap();
    }
    out
}

pub fn emit_sweep_csv(hash: &str, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    header(
        &mut out,
        hash,
        "mass,E0,E0_minus_E0_massless,N_expect,sector",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            f(r.mass),
            f(r.energy),
            f(r.energy_minus_massless),
            f(r.number_expect),
            r.sector
        )
        .unwrap();
    }
    out
}

pub fn emit_checks_csv(hash: &str, rows: &[CheckReport]) -> String {
    let mut out = String::new();
    header(&mut out, hash, "check_id,residual,threshold,passed,context");
    for r in rows {
        let ctx = serde_json::to_string(&r.context).expect("context serialization");
        writeln!(
            out,
            "{},{},{},{},{}",
            r.check_id,
            f(r.residual),
            f(r.threshold),
            r.passed,
            csv_quote(&ctx)
        )
        .unwrap();
    }
    out
}

pub fn emit_timings_csv(hash: &str, rows: &[TimingRow]) -> String {
    let mut out = String::new();
    header(&mut out, hash, "label,millis");
    for r in rows {
        writeln!(out, "{},{}", r.label, r.millis).unwrap();
    }
    out
}

struct CsvBody<'a> {
    hash: String,
    rows: Vec<&'a str>,
}

fn parse_csv<'a>(text: &'a str, expect_columns: &str) -> Result<CsvBody<'a>> {
    let mut hash = None;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# config_hash=") {
            hash = Some(rest.to_string());
        } else if line.starts_with('#') {
            continue;
        } else if !saw_header {
            if line != expect_columns {
                return Err(Error::Record(format!(
                    "unexpected column header `{line}`, want `{expect_columns}`"
                )));
            }
            saw_header = true;
        } else if !line.is_empty() {
            rows.push(line);
        }
    }
    let hash = hash.ok_or_else(|| Error::Record("missing config_hash header".into()))?;
    if !saw_header {
        return Err(Error::Record("missing column header".into()));
    }
    Ok(CsvBody { hash, rows })
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|e| Error::Record(format!("bad float `{s}`: {e}")))
}

pub fn parse_solves_csv(text: &str) -> Result<(String, Vec<SolveRow>)> {
    let body = parse_csv(
        text,
        "label,mu,lambda,mass,n_max,dim,energy,gap,sector,number_expect,residual",
    )?;
    let mut rows = Vec::new();
    for line in body.rows {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 11 {
            return Err(Error::Record(format!("bad solve row `{line}`")));
        }
        rows.push(SolveRow {
            label: parts[0].to_string(),
            mu: parse_f64(parts[1])?,
            lambda: parse_f64(parts[2])?,
            mass: parse_f64(parts[3])?,
            n_max: parts[4]
                .parse()
                .map_err(|e| Error::Record(format!("bad n_max: {e}")))?,
            dim: parts[5]
                .parse()
                .map_err(|e| Error::Record(format!("bad dim: {e}")))?,
            energy: parse_f64(parts[6])?,
            gap: parse_f64(parts[7])?,
            sector: parts[8].to_string(),
            number_expect: parse_f64(parts[9])?,
            residual: parse_f64(parts[10])?,
        });
    }
    Ok((body.hash, rows))
}

pub fn parse_sweep_csv(text: &str) -> Result<(String, Vec<SweepRow>)> {
    let body = parse_csv(text, "mass,E0,E0_minus_E0_massless,N_expect,sector")?;
    let mut rows = Vec::new();
    for line in body.rows {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Record(format!("bad sweep row `{line}`")));
        }
        rows.push(SweepRow {
            mass: parse_f64(parts[0])?,
            energy: parse_f64(parts[1])?,
            energy_minus_massless: parse_f64(parts[2])?,
            number_expect: parse_f64(parts[3])?,
            sector: parts[4].to_string(),
        });
    }
    Ok((body.hash, rows))
}

pub fn parse_checks_csv(text: &str) -> Result<(String, Vec<CheckReport>)> {
    let body = parse_csv(text, "check_id,residual,threshold,passed,context")?;
    let mut rows = Vec::new();
    for line in body.rows {
        let parts: Vec<&str> = line.splitn(5, ',').collect();
        if parts.len() != 5 {
            return Err(Error::Record(format!("bad check row `{line}`")));
        }
        let context: std::collections::BTreeMap<String, String> =
            serde_json::from_str(&csv_unquote(parts[4])?)
                .map_err(|e| Error::Record(format!("bad context: {e}")))?;
        rows.push(CheckReport {
            check_id: parts[0].to_string(),
            residual: parse_f64(parts[1])?,
            threshold: parse_f64(parts[2])?,
            passed: parts[3]
                .parse()
                .map_err(|e| Error::Record(format!("bad passed flag: {e}")))?,
            context,
        });
    }
    Ok((body.hash, rows))
}

/// Files written by one emission.
#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub paths: Vec<PathBuf>,
}

pub fn emit_tabular(record: &RunRecord, dir: &Path) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let h = &record.config_hash;
    let solves = dir.join("solves.csv");
    std::fs::write(&solves, emit_solves_csv(h, &record.solves))?;
    paths.push(solves);
    let sweep = dir.join("sweep.csv");
    std::fs::write(&sweep, emit_sweep_csv(h, &record.sweep))?;
    paths.push(sweep);
    let checks = dir.join("checks.csv");
    std::fs::write(&checks, emit_checks_csv(h, &record.checks))?;
    paths.push(checks);
    let timings = dir.join("timings.csv");
    std::fs::write(&timings, emit_timings_csv(h, &record.timings))?;
    paths.push(timings);
    Ok(EmittedFiles { paths })
}

pub fn emit_records(record: &RunRecord, dir: &Path) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("run.jsonl");
    std::fs::write(&path, emit_record_stream(record))?;
    Ok(EmittedFiles { paths: vec![path] })
}
