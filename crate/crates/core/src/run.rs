//! Experiment orchestration: single solve, sector scan, mass sweep, the
//! verification suite, or all of them, producing one self-contained record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::operators::Model;
use crate::record::{emit_records, emit_tabular, RunRecord, SolveRow, SweepRow, TimingRow};
use crate::spectral::{ground_state, mass_limit_sweep, sector_ground_state, SpectralResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Sectors,
    Sweep,
    Verify,
    All,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Sectors => "sectors",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
            Mode::All => "all",
        }
    }
}

fn solve_row(
    label: String,
    cfg: &RunConfig,
    mass: f64,
    dim: usize,
    r: &SpectralResult,
) -> SolveRow {
    SolveRow {
        label,
        mu: cfg.model.mu,
        lambda: cfg.model.lambda,
        mass,
        n_max: cfg.model.n_max,
        dim,
        energy: r.energy,
        // a one-dimensional space has no second level; clamp for serialization
        gap: r.gap.min(f64::MAX),
        sector: r.sector.to_string(),
        number_expect: r.number_expect,
        residual: r.residual,
    }
}

fn build_model(cfg: &RunConfig) -> Result<Model> {
    Model::with_cap(cfg.model_params()?, cfg.solver.mode_cap)
}

/// Execute the requested pipeline and collect a run record.
pub fn run_experiment(cfg: &RunConfig, mode: Mode) -> Result<RunRecord> {
    cfg.validate()?;
    let mut record = RunRecord::new(cfg.hash(), cfg.canonical_toml());
    let opts = cfg.solver_options();

    let needs_model = matches!(mode, Mode::Solve | Mode::Sectors | Mode::Sweep | Mode::All);
    let model = if needs_model {
        Some(build_model(cfg)?)
    } else {
        None
    };

    if matches!(mode, Mode::Solve | Mode::All) {
        let model = model.as_ref().unwrap();
        let t = Instant::now();
        let h = if cfg.model.mass > 0.0 {
            model.hamiltonian_massive(cfg.model.mass)?
        } else {
            model.hamiltonian()
        };
        let r = ground_state(&h, &model.basis, &opts)
            .map_err(|e| Error::Operator(format!("solve: {e}")))?;
        record.solves.push(solve_row(
            "solve".into(),
            cfg,
            cfg.model.mass,
            model.dim(),
            &r,
        ));
        record.timings.push(TimingRow {
            label: "solve".into(),
            millis: t.elapsed().as_millis() as u64,
        });
    }

    if matches!(mode, Mode::Sectors | Mode::All) {
        use rayon::prelude::*;
        let model = model.as_ref().unwrap();
        let t = Instant::now();
        let h = if cfg.model.mass > 0.0 {
            model.hamiltonian_massive(cfg.model.mass)?
        } else {
            model.hamiltonian()
        };
        let q = model.charge_op();
        // sector solves are independent; merge in ascending charge order
        let charges: Vec<i64> = model.basis.sectors().keys().copied().collect();
        let solved: Vec<Result<SolveRow>> = charges
            .par_iter()
            .map(|&z| {
                let r = sector_ground_state(&h, &model.basis, &q, z, &opts)
                    .map_err(|e| Error::Operator(format!("sector z={z}: {e}")))?;
                Ok(solve_row(
                    format!("sector z={z}"),
                    cfg,
                    cfg.model.mass,
                    model.dim(),
                    &r,
                ))
            })
            .collect();
        for row in solved {
            record.solves.push(row?);
        }
        record.timings.push(TimingRow {
            label: "sectors".into(),
            millis: t.elapsed().as_millis() as u64,
        });
    }

    if matches!(mode, Mode::Sweep | Mode::All) {
        let model = model.as_ref().unwrap();
        let t = Instant::now();
        let rows = mass_limit_sweep(model, &cfg.model.masses, &opts)
            .map_err(|e| Error::Operator(format!("sweep: {e}")))?;
        for p in &rows {
            record.sweep.push(SweepRow {
                mass: p.mass,
                energy: p.result.energy,
                energy_minus_massless: p.excess_over_massless,
                number_expect: p.result.number_expect,
                sector: p.result.sector.to_string(),
            });
        }
        record.timings.push(TimingRow {
            label: "sweep".into(),
            millis: t.elapsed().as_millis() as u64,
        });
    }

    if matches!(mode, Mode::Verify | Mode::All) {
        let t = Instant::now();
        let ctx = cfg.verify_context()?;
        let selection = if cfg.checks.run.is_empty() {
            None
        } else {
            Some(cfg.checks.run.as_slice())
        };
        let checks = crate::verify::run_registry(&ctx, selection, &cfg.checks.thresholds)?;
        record.checks = checks;
        record.timings.push(TimingRow {
            label: "verify".into(),
            millis: t.elapsed().as_millis() as u64,
        });
    }

    Ok(record)
}

/// Write the record in the configured formats; returns the written paths.
pub fn emit_report(record: &RunRecord, dir: &Path, formats: &[String]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for format in formats {
        match format.as_str() {
            "tabular" => paths.extend(emit_tabular(record, dir)?.paths),
            "records" => paths.extend(emit_records(record, dir)?.paths),
            other => return Err(Error::Record(format!("unknown output format `{other}`"))),
        }
    }
    Ok(paths)
}

/// Dump the assembled operators of the configured model as triplet files.
pub fn dump_operators(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let model = build_model(cfg)?;
    std::fs::create_dir_all(dir)?;
    let named: Vec<(&str, crate::sparse::SparseOperator)> = vec![
        ("h0", model.h0()),
        ("h1", model.h1().clone()),
        ("h2", model.h2().clone()),
        ("h", model.hamiltonian()),
        ("number", model.number_op()),
        ("charge", model.charge_op()),
    ];
    let mut paths = Vec::new();
    for (name, op) in named {
        let path = dir.join(format!("{name}.triplets"));
        let mut buf = Vec::new();
        op.write_triplets(&mut buf)?;
        std::fs::write(&path, buf)?;
        paths.push(path);
    }
    Ok(paths)
}
