//! Run configuration: a strict, human-editable TOML format.
//!
//! Unknown keys are fatal (a typo in a coupling name would silently change
//! the physics), every module-level precondition is re-validated at parse
//! time with a field-accurate message, and the canonical re-serialization is
//! hashed into every output file so a record can always be traced back to
//! the exact configuration that produced it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::DEFAULT_DIMENSION_CAP;
use crate::grid::{
    build_mode_grid, build_spatial_quadrature, ChiProfile, CutoffProfile, ModeGrid,
    SpatialQuadrature,
};
use crate::operators::ModelParams;
use crate::spectral::SolverOptions;
use crate::verify::VerifyContext;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub checks: ChecksConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Spatial dimension d.
    pub dimension: usize,
    /// Momentum extent K of the grid box [-K, K]^d.
    pub momentum_extent: f64,
    /// Half-count per axis; M = (2 n_half)^d modes.
    pub half_modes: usize,
    pub profile: ProfileConfig,
    /// Spatial extent L of the cutoff box [-L, L]^d.
    pub spatial_extent: f64,
    /// Spatial quadrature points per axis.
    pub spatial_count: usize,
    pub chi: ChiConfig,
    pub mu: f64,
    pub lambda: f64,
    /// Charge unit q, nonzero.
    pub charge: f64,
    /// Boson mass for single solves; 0 is the massless model.
    pub mass: f64,
    /// Descending positive masses for sweep mode.
    pub masses: Vec<f64>,
    pub n_max: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// "triangular" or "indicator".
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChiConfig {
    /// "gaussian" or "uniform".
    pub kind: String,
    pub width: f64,
    pub height: f64,
    /// Rescale chi so the discrete L1 mass is exactly one.
    pub normalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// At or below this dimension the ground-state path is the dense solve.
    pub dense_threshold: usize,
    /// Basis dimension guard.
    pub mode_cap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    /// Subset of the registry to run; empty means all.
    pub run: Vec<String>,
    /// Random trials for the interior identity checks.
    pub trials: usize,
    /// Random states for the relative-bound inequalities.
    pub relative_trials: usize,
    /// Coupling matrix the coupling-dependent checks run over.
    pub mu_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// Coupling sweep of the lower-bound check.
    pub lower_mu_values: Vec<f64>,
    pub lower_lambda_values: Vec<f64>,
    /// Mass for the pull-through check.
    pub pull_mass: f64,
    /// Masses in (0, 1] for the uniform number bound, descending.
    pub masses: Vec<f64>,
    /// Per-check threshold overrides.
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    /// "tabular" and/or "records".
    pub formats: Vec<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dimension: 1,
            momentum_extent: 1.0,
            half_modes: 1,
            profile: ProfileConfig::default(),
            spatial_extent: 2.0,
            spatial_count: 9,
            chi: ChiConfig::default(),
            mu: -1.0,
            lambda: 1.0,
            charge: 1.0,
            mass: 0.0,
            masses: vec![1.0, 0.5, 0.1, 0.01],
            n_max: 8,
        }
    }
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            kind: "triangular".into(),
        }
    }
}

impl Default for ChiConfig {
    fn default() -> Self {
        ChiConfig {
            kind: "gaussian".into(),
            width: 1.0,
            height: 0.5,
            normalize: true,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 4000,
            seed: 7,
            dense_threshold: 2000,
            mode_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            run: Vec::new(),
            trials: 20,
            relative_trials: 100,
            mu_values: vec![-1.0, 0.0, 1.0],
            lambda_values: vec![0.1, 1.0],
            lower_mu_values: vec![-2.0, -1.0, 0.0, 1.0],
            lower_lambda_values: vec![0.1, 0.5, 1.0],
            pull_mass: 0.5,
            masses: vec![1.0, 0.5, 0.1, 0.01],
            thresholds: BTreeMap::new(),
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            formats: vec!["tabular".into(), "records".into()],
        }
    }
}

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.dimension == 0 || m.dimension > 3 {
            return Err(cfg_err("model.dimension", "must be 1, 2 or 3"));
        }
        if m.momentum_extent <= 0.0 {
            return Err(cfg_err("model.momentum_extent", "must be positive"));
        }
        if m.half_modes == 0 {
            return Err(cfg_err("model.half_modes", "must be at least 1"));
        }
        self.profile_kind()?;
        if m.spatial_extent <= 0.0 {
            return Err(cfg_err("model.spatial_extent", "must be positive"));
        }
        if m.spatial_count == 0 {
            return Err(cfg_err("model.spatial_count", "must be at least 1"));
        }
        self.chi_kind()?;
        if m.lambda <= 0.0 {
            return Err(cfg_err(
                "model.lambda",
                format!("must be a positive coupling constant, got {}", m.lambda),
            ));
        }
        if m.charge == 0.0 {
            return Err(cfg_err("model.charge", "the charge unit q must be nonzero"));
        }
        if m.mass < 0.0 {
            return Err(cfg_err("model.mass", "must be non-negative"));
        }
        for w in m.masses.windows(2) {
            if w[1] >= w[0] {
                return Err(cfg_err("model.masses", "must be strictly descending"));
            }
        }
        if m.masses.iter().any(|&x| x <= 0.0) {
            return Err(cfg_err("model.masses", "sweep masses must be positive"));
        }
        let s = &self.solver;
        if s.tol <= 0.0 {
            return Err(cfg_err("solver.tol", "must be positive"));
        }
        if s.max_iter == 0 {
            return Err(cfg_err("solver.max_iter", "must be at least 1"));
        }
        let c = &self.checks;
        for id in &c.run {
            if !crate::verify::CHECK_IDS.contains(&id.as_str()) {
                return Err(cfg_err("checks.run", format!("unknown check id `{id}`")));
            }
        }
        for id in c.thresholds.keys() {
            if !crate::verify::CHECK_IDS.contains(&id.as_str()) {
                return Err(cfg_err(
                    "checks.thresholds",
                    format!("unknown check id `{id}`"),
                ));
            }
        }
        if c.lambda_values.iter().any(|&l| l <= 0.0)
            || c.lower_lambda_values.iter().any(|&l| l <= 0.0)
        {
            return Err(cfg_err(
                "checks.lambda_values",
                "every lambda must be a positive coupling constant",
            ));
        }
        if c.pull_mass <= 0.0 {
            return Err(cfg_err("checks.pull_mass", "must be positive"));
        }
        if c.masses.iter().any(|&x| x <= 0.0 || x > 1.0) {
            return Err(cfg_err("checks.masses", "must lie in (0, 1]"));
        }
        for w in c.masses.windows(2) {
            if w[1] >= w[0] {
                return Err(cfg_err("checks.masses", "must be strictly descending"));
            }
        }
        for f in &self.output.formats {
            if f != "tabular" && f != "records" {
                return Err(cfg_err("output.formats", format!("unknown format `{f}`")));
            }
        }
        Ok(())
    }

    pub fn profile_kind(&self) -> Result<CutoffProfile> {
        match self.model.profile.kind.as_str() {
            "triangular" => Ok(CutoffProfile::Triangular),
            "indicator" => Ok(CutoffProfile::Indicator),
            other => Err(cfg_err(
                "model.profile.kind",
                format!("unknown profile `{other}` (want triangular or indicator)"),
            )),
        }
    }

    pub fn chi_kind(&self) -> Result<ChiProfile> {
        match self.model.chi.kind.as_str() {
            "gaussian" => {
                if self.model.chi.width <= 0.0 {
                    return Err(cfg_err("model.chi.width", "must be positive"));
                }
                Ok(ChiProfile::Gaussian {
                    width: self.model.chi.width,
                })
            }
            "uniform" => {
                if self.model.chi.height < 0.0 {
                    return Err(cfg_err("model.chi.height", "must be non-negative"));
                }
                Ok(ChiProfile::Uniform {
                    height: self.model.chi.height,
                })
            }
            other => Err(cfg_err(
                "model.chi.kind",
                format!("unknown chi profile `{other}` (want gaussian or uniform)"),
            )),
        }
    }

    pub fn build_grid(&self) -> Result<ModeGrid> {
        build_mode_grid(
            self.model.dimension,
            self.model.momentum_extent,
            self.model.half_modes,
            self.profile_kind()?,
        )
    }

    pub fn build_quadrature(&self) -> Result<SpatialQuadrature> {
        build_spatial_quadrature(
            self.model.dimension,
            self.model.spatial_extent,
            self.model.spatial_count,
            self.chi_kind()?,
            self.model.chi.normalize,
        )
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        Ok(ModelParams {
            mu: self.model.mu,
            lambda: self.model.lambda,
            charge_unit: self.model.charge,
            mass: self.model.mass,
            n_max: self.model.n_max,
            grid: self.build_grid()?,
            quad: self.build_quadrature()?,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            seed: self.solver.seed,
            dense_threshold: self.solver.dense_threshold,
            degeneracy_tol: 1e-9,
        }
    }

    pub fn verify_context(&self) -> Result<VerifyContext> {
        let couplings: Vec<(f64, f64)> = self
            .checks
            .mu_values
            .iter()
            .flat_map(|&mu| self.checks.lambda_values.iter().map(move |&l| (mu, l)))
            .collect();
        let lower: Vec<(f64, f64)> = self
            .checks
            .lower_mu_values
            .iter()
            .flat_map(|&mu| {
                self.checks
                    .lower_lambda_values
                    .iter()
                    .map(move |&l| (mu, l))
            })
            .collect();
        Ok(VerifyContext {
            grid: self.build_grid()?,
            quad: self.build_quadrature()?,
            n_max: self.model.n_max,
            charge_unit: self.model.charge,
            couplings,
            lower_bound_sweep: lower,
            trials: self.checks.trials,
            relative_trials: self.checks.relative_trials,
            seed: self.solver.seed,
            pull_mass: self.checks.pull_mass,
            masses: self.checks.masses.clone(),
            solver: self.solver_options(),
            dim_cap: self.solver.mode_cap,
        })
    }

    /// Canonical serialization used for hashing; field order is fixed by the
    /// struct layout, so semantically equal configs hash equally.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serialization is infallible")
    }

    /// Hash of the result-relevant blocks (model, solver, checks). The output
    /// block is excluded so that writing the same experiment to a different
    /// directory does not change its identity.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let mut hasher = Sha256::new();
        hasher.update(canonical.canonical_toml().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_valid() {
        let cfg = RunConfig::parse_str("[model]\nn_max = 8\n").unwrap();
        assert_eq!(cfg.model.n_max, 8);
        assert_eq!(cfg.model.dimension, 1);
        assert_eq!(cfg.model.half_modes, 1);
    }

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn zero_lambda_rejected_with_constraint() {
        let err = RunConfig::parse_str("[model]\nlambda = 0.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("model.lambda"), "{msg}");
        assert!(msg.contains("positive coupling constant"), "{msg}");
    }

    #[test]
    fn zero_charge_rejected() {
        let err = RunConfig::parse_str("[model]\ncharge = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("model.charge"));
        assert!(err.to_string().contains("nonzero"));
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = RunConfig::parse_str("[model]\nlambdah = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("lambdah") || msg.contains("unknown field"),
            "{msg}"
        );
        // toml reports line/column spans
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn parse_error_carries_position() {
        let err = RunConfig::parse_str("[model\nn_max = 3").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn hash_stable_under_reserialization() {
        let cfg = RunConfig::parse_str("[model]\nn_max = 4\nmu = 0.5\n").unwrap();
        let round = RunConfig::parse_str(&cfg.canonical_toml()).unwrap();
        assert_eq!(cfg.hash(), round.hash());
        let other = RunConfig::parse_str("[model]\nn_max = 5\n").unwrap();
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn verify_context_builds_coupling_matrix() {
        let cfg = RunConfig::default();
        let ctx = cfg.verify_context().unwrap();
        assert_eq!(ctx.couplings.len(), 6);
        assert_eq!(ctx.lower_bound_sweep.len(), 12);
        assert_eq!(ctx.n_max, 8);
    }

    #[test]
    fn bad_check_id_rejected() {
        let err = RunConfig::parse_str("[checks]\nrun = [\"nope\"]\n").unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
