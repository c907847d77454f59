//! Run configuration: a sectioned, human-editable TOML document.
//!
//! Unknown keys are rejected (fail fast on typos), every field is validated
//! before any simulation starts, and the built-in desk-scale profile is used
//! whenever no file is given. The same structure backs the CLI overrides:
//! `--seed`, `--spins`, `--backend`, and `--out` patch the corresponding
//! fields after loading.
//!
//! ```toml
//! seed = 42
//! backend = "eigen"            # or "trotter"
//! trotter_step_s = 5.76e-6     # substep for the trotter backend
//!
//! [system]
//! n_spins = 12
//! [system.coupling]
//! model = "random_all_to_all"  # | "chain" | "geometric"
//! second_moment_hz = 7900.0    # RMS coupling target, in Hz
//!
//! [schedule]
//! tau0_s = 5.76e-5
//! n_cycles = 40
//! p_values = [0.0, 0.034, 0.065, 0.108, 0.2, 0.5]
//! n_prep_cycles = [2, 10]
//! equilibrium_p_values = [0.108]
//! evolution = "static"         # or "segmented" (literal τ₀/τ_Σ alternation)
//!
//! [analysis]
//! window_fraction = 0.34
//! slope_tol = 0.05
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "svg"]
//! ```

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::PlateauParams;
use crate::error::{Error, Result};
use crate::hamiltonian::{CouplingModel, CouplingVariant};
use crate::hilbert::MAX_SPINS;
use crate::propagate::Backend;

/// Seed of the built-in profile's coupling realization.
pub const DEFAULT_SEED: u64 = 42;

/// Propagator backend selector (the trotter substep lives in
/// [`ExperimentConfig::trotter_step_s`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Eigen,
    Trotter,
}

/// Output file formats. CSVs are the data contract; SVGs are plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
}

/// How the perturbed cycle is realized.
///
/// `Static` applies the time-averaged blend `H_eff = (1−p)H_0 + p·H_dd` for
/// the whole cycle; `Segmented` applies the literal alternation — τ₀ under
/// `H_0`, then τ_Σ under `H_dd` — whose first-order average is `H_eff`. The
/// two agree as τ_c → 0 at fixed p, but at finite cycle length only the
/// alternation dephases freshly grown coherences each cycle, which is what
/// arrests cluster growth at strong perturbation. Unperturbed runs (p = 0)
/// have no perturbation segment, so the distinction vanishes there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    #[default]
    Static,
    Segmented,
}

/// Complete description of a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for the coupling realization (recorded in all outputs).
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub backend: BackendChoice,
    /// Substep in seconds for the trotter backend; ignored by eigen.
    #[serde(default)]
    pub trotter_step_s: Option<f64>,
    pub system: SystemConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_spins: usize,
    /// Optional run identifier; defaults to a description of the couplings.
    #[serde(default)]
    pub label: Option<String>,
    pub coupling: CouplingConfig,
}

/// Coupling-network choice, tagged by `model`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    /// Uniform-random all-to-all couplings rescaled to a target RMS.
    RandomAllToAll {
        #[serde(default = "defaults::second_moment_hz")]
        second_moment_hz: f64,
    },
    /// Nearest-neighbor chain with a fixed coupling strength.
    Chain { strength_rad_s: f64 },
    /// Dipolar couplings from explicit 3D positions,
    /// d_ij = prefactor·(1 − 3cos²θ_ij)/r_ij³, optionally rescaled.
    Geometric {
        prefactor_rad_s: f64,
        positions_m: Vec<[f64; 3]>,
        #[serde(default)]
        second_moment_hz: Option<f64>,
    },
}

impl CouplingConfig {
    /// Lowers the config form into the hamiltonian-module model; random
    /// networks draw from the run seed.
    pub fn to_model(&self, seed: u64) -> CouplingModel {
        match self {
            CouplingConfig::RandomAllToAll { second_moment_hz } => CouplingModel {
                variant: CouplingVariant::RandomAllToAll { seed },
                target_second_moment: Some(TAU * second_moment_hz),
            },
            CouplingConfig::Chain { strength_rad_s } => CouplingModel {
                variant: CouplingVariant::Chain { nearest_neighbor_strength: *strength_rad_s },
                target_second_moment: None,
            },
            CouplingConfig::Geometric { prefactor_rad_s, positions_m, second_moment_hz } => {
                CouplingModel {
                    variant: CouplingVariant::Geometric {
                        positions: positions_m.clone(),
                        prefactor: *prefactor_rad_s,
                    },
                    target_second_moment: second_moment_hz.map(|hz| TAU * hz),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Unperturbed cycle period τ₀ in seconds.
    pub tau0_s: f64,
    /// Maximum number of evolution cycles per trace.
    pub n_cycles: usize,
    /// Perturbation strengths for the localization sweep; p ∈ [0, 1].
    pub p_values: Vec<f64>,
    /// Preparation cycle counts N₀ for the equilibrium experiment.
    #[serde(default)]
    pub n_prep_cycles: Vec<usize>,
    /// Perturbation strengths for the equilibrium experiment; defaults to
    /// `p_values` when omitted.
    #[serde(default)]
    pub equilibrium_p_values: Option<Vec<f64>>,
    /// Whether perturbed cycles use the static blend or the literal
    /// τ₀/τ_Σ alternation. Defaults to `static`.
    #[serde(default)]
    pub evolution: EvolutionMode,
}

/// Plateau/fit thresholds; defaults mirror [`PlateauParams::default`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "defaults::window_fraction")]
    pub window_fraction: f64,
    #[serde(default = "defaults::slope_tol")]
    pub slope_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window_fraction: defaults::window_fraction(),
            slope_tol: defaults::slope_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "defaults::out_dir")]
    pub dir: PathBuf,
    #[serde(default = "defaults::formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: defaults::out_dir(), formats: defaults::formats() }
    }
}

mod defaults {
    use super::*;

    pub fn seed() -> u64 {
        DEFAULT_SEED
    }
    pub fn second_moment_hz() -> f64 {
        7900.0
    }
    pub fn window_fraction() -> f64 {
        1.0 / 3.0
    }
    pub fn slope_tol() -> f64 {
        0.05
    }
    pub fn out_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn formats() -> Vec<OutputFormat> {
        vec![OutputFormat::Csv, OutputFormat::Svg]
    }
}

impl ExperimentConfig {
    /// The built-in desk-scale profile: 12 spins with random all-to-all
    /// couplings at RMS 2π·7.9 krad/s, τ₀ = 57.6 µs, a perturbation sweep
    /// spanning the localization crossover, and 40 cycles per trace.
    pub fn default_profile() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            backend: BackendChoice::Eigen,
            trotter_step_s: Some(5.76e-6),
            system: SystemConfig {
                n_spins: 12,
                label: None,
                coupling: CouplingConfig::RandomAllToAll {
                    second_moment_hz: defaults::second_moment_hz(),
                },
            },
            schedule: ScheduleConfig {
                tau0_s: 57.6e-6,
                n_cycles: 40,
                p_values: vec![0.0, 0.034, 0.065, 0.108, 0.2, 0.5],
                n_prep_cycles: vec![2, 10],
                equilibrium_p_values: Some(vec![0.108]),
                evolution: EvolutionMode::Static,
            },
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse failed: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads, parses and validates a TOML file.
    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Checks every field against its domain. Called by the loaders and by
    /// every run entry point, so overridden configs cannot skip validation.
    pub fn validate(&self) -> Result<()> {
        if self.system.n_spins < 1 || self.system.n_spins > MAX_SPINS {
            return Err(Error::Config(format!(
                "n_spins = {} outside supported range 1..={MAX_SPINS}",
                self.system.n_spins
            )));
        }
        match &self.system.coupling {
            CouplingConfig::RandomAllToAll { second_moment_hz } => {
                if !(second_moment_hz > &0.0) || !second_moment_hz.is_finite() {
                    return Err(Error::Config(format!(
                        "second_moment_hz must be positive and finite, got {second_moment_hz}"
                    )));
                }
            }
            CouplingConfig::Chain { strength_rad_s } => {
                if !strength_rad_s.is_finite() {
                    return Err(Error::Config(format!(
                        "chain strength must be finite, got {strength_rad_s}"
                    )));
                }
            }
            CouplingConfig::Geometric { prefactor_rad_s, positions_m, second_moment_hz } => {
                if !prefactor_rad_s.is_finite() {
                    return Err(Error::Config(format!(
                        "geometric prefactor must be finite, got {prefactor_rad_s}"
                    )));
                }
                if positions_m.len() != self.system.n_spins {
                    return Err(Error::Config(format!(
                        "{} positions given for {} spins",
                        positions_m.len(),
                        self.system.n_spins
                    )));
                }
                if let Some(hz) = second_moment_hz {
                    if !(hz > &0.0) || !hz.is_finite() {
                        return Err(Error::Config(format!(
                            "second_moment_hz must be positive and finite, got {hz}"
                        )));
                    }
                }
            }
        }
        if !(self.schedule.tau0_s > 0.0) || !self.schedule.tau0_s.is_finite() {
            return Err(Error::Config(format!(
                "tau0_s must be positive and finite, got {}",
                self.schedule.tau0_s
            )));
        }
        if self.schedule.p_values.is_empty() {
            return Err(Error::Config("p_values must not be empty".into()));
        }
        for list in [Some(&self.schedule.p_values), self.schedule.equilibrium_p_values.as_ref()]
            .into_iter()
            .flatten()
        {
            for &p in list {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(Error::Config(format!(
                        "perturbation strength p = {p} outside [0, 1]"
                    )));
                }
            }
        }
        if let Some(eq) = &self.schedule.equilibrium_p_values {
            if eq.is_empty() {
                return Err(Error::Config(
                    "equilibrium_p_values, when given, must not be empty".into(),
                ));
            }
        }
        if !(self.analysis.window_fraction > 0.0 && self.analysis.window_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "window_fraction must lie in (0, 1], got {}",
                self.analysis.window_fraction
            )));
        }
        if !(self.analysis.slope_tol > 0.0) || !self.analysis.slope_tol.is_finite() {
            return Err(Error::Config(format!(
                "slope_tol must be positive, got {}",
                self.analysis.slope_tol
            )));
        }
        if let Some(step) = self.trotter_step_s {
            if !(step > 0.0) || !step.is_finite() {
                return Err(Error::Config(format!(
                    "trotter_step_s must be positive and finite, got {step}"
                )));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output formats must not be empty".into()));
        }
        self.backend()?;
        Ok(())
    }

    /// Resolves the backend selector into a propagator backend.
    pub fn backend(&self) -> Result<Backend> {
        match self.backend {
            BackendChoice::Eigen => Ok(Backend::Eigen),
            BackendChoice::Trotter => match self.trotter_step_s {
                Some(step) if step > 0.0 && step.is_finite() => Ok(Backend::Trotter { step }),
                _ => Err(Error::Config(
                    "backend = \"trotter\" requires a positive trotter_step_s".into(),
                )),
            },
        }
    }

    pub fn plateau_params(&self) -> PlateauParams {
        PlateauParams {
            window_fraction: self.analysis.window_fraction,
            slope_tol: self.analysis.slope_tol,
        }
    }

    /// Perturbation strengths used by the equilibrium experiment.
    pub fn equilibrium_p(&self) -> &[f64] {
        self.schedule.equilibrium_p_values.as_deref().unwrap_or(&self.schedule.p_values)
    }

    /// True when `format` is enabled in the output section.
    pub fn emits(&self, format: OutputFormat) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [system]
        n_spins = 4
        [system.coupling]
        model = "random_all_to_all"
        [schedule]
        tau0_s = 5.76e-5
        n_cycles = 10
        p_values = [0.0, 0.5]
    "#;

    #[test]
    fn minimal_document_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.backend, BackendChoice::Eigen);
        assert_eq!(cfg.system.n_spins, 4);
        assert!(matches!(
            cfg.system.coupling,
            CouplingConfig::RandomAllToAll { second_moment_hz } if second_moment_hz == 7900.0
        ));
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        assert!(cfg.emits(OutputFormat::Csv) && cfg.emits(OutputFormat::Svg));
        assert_eq!(cfg.equilibrium_p(), &[0.0, 0.5]);
        assert_eq!(cfg.schedule.evolution, EvolutionMode::Static);
    }

    #[test]
    fn evolution_mode_parses_and_rejects_unknown_values() {
        let seg = MINIMAL.replace(
            "p_values = [0.0, 0.5]",
            "p_values = [0.0, 0.5]\nevolution = \"segmented\"",
        );
        let cfg = ExperimentConfig::from_toml_str(&seg).unwrap();
        assert_eq!(cfg.schedule.evolution, EvolutionMode::Segmented);
        let bad = MINIMAL.replace(
            "p_values = [0.0, 0.5]",
            "p_values = [0.0, 0.5]\nevolution = \"floquet\"",
        );
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn default_profile_is_valid() {
        let cfg = ExperimentConfig::default_profile();
        cfg.validate().unwrap();
        assert_eq!(cfg.system.n_spins, 12);
        assert_eq!(cfg.schedule.p_values.len(), 6);
        assert_eq!(cfg.equilibrium_p(), &[0.108]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = format!("{MINIMAL}\nunknown_key = 3\n");
        let err = ExperimentConfig::from_toml_str(&doc).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn out_of_range_p_is_rejected() {
        let doc = MINIMAL.replace("[0.0, 0.5]", "[0.0, 1.5]");
        let err = ExperimentConfig::from_toml_str(&doc).unwrap_err();
        assert_eq!(err.category(), "config");
        // the p = 1 boundary itself is allowed (the fully perturbed limit)
        let doc = MINIMAL.replace("[0.0, 0.5]", "[0.0, 1.0]");
        ExperimentConfig::from_toml_str(&doc).unwrap();
    }

    #[test]
    fn empty_p_list_is_rejected_before_any_run() {
        let doc = MINIMAL.replace("[0.0, 0.5]", "[]");
        let err = ExperimentConfig::from_toml_str(&doc).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn trotter_backend_requires_a_step() {
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.backend = BackendChoice::Trotter;
        cfg.trotter_step_s = None;
        assert_eq!(cfg.validate().unwrap_err().category(), "config");
        cfg.trotter_step_s = Some(1e-6);
        cfg.validate().unwrap();
        assert!(matches!(cfg.backend().unwrap(), Backend::Trotter { step } if step == 1e-6));
    }

    #[test]
    fn geometric_positions_must_match_spin_count() {
        let doc = r#"
            [system]
            n_spins = 3
            [system.coupling]
            model = "geometric"
            prefactor_rad_s = 1.0
            positions_m = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
            [schedule]
            tau0_s = 1e-5
            n_cycles = 5
            p_values = [0.0]
        "#;
        let err = ExperimentConfig::from_toml_str(doc).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn coupling_model_lowering_carries_the_seed() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let model = cfg.system.coupling.to_model(99);
        assert!(matches!(model.variant, CouplingVariant::RandomAllToAll { seed: 99 }));
        let target = model.target_second_moment.unwrap();
        assert!((target - TAU * 7900.0).abs() < 1e-9);
    }
}
