use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::perturbation::PerturbationSpec;
use crate::elliptic::{EigenOptions, SolveOptions};
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::geometry::{RadialGrid, Scheme};
use crate::lojasiewicz::{FunctionalKind, ReductionOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Curvature,
    Entropy,
    Mass,
    Flow,
    Spectrum,
    Loj,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub nodes: usize,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub scheme: Scheme,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nodes: 800, r_max: 30.0, scheme: Scheme::Order4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassConfig {
    /// Number of seeds swept, starting at the perturbation seed.
    pub seeds: u64,
}

impl Default for MassConfig {
    fn default() -> Self {
        Self { seeds: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Shifts c of the scalar operators Δ + c.
    pub scalar_shifts: Vec<f64>,
    pub eigen: EigenOptions,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { scalar_shifts: vec![0.0, 1.0, 4.0], eigen: EigenOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LojConfig {
    pub functionals: Vec<FunctionalKind>,
    pub dim: usize,
    pub reduction: ReductionOptions,
    /// Accepted distance between the sampled and the closed-form exponent.
    pub theta_tol: f64,
}

impl Default for LojConfig {
    fn default() -> Self {
        Self {
            functionals: vec![
                FunctionalKind::NegSquare,
                FunctionalKind::NegQuartic,
                FunctionalKind::SplitQuartic,
                FunctionalKind::Cubic,
            ],
            dim: 2,
            reduction: ReductionOptions::default(),
            theta_tol: 0.02,
        }
    }
}

/// A complete, validated description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub grid: GridConfig,
    pub perturbation: PerturbationSpec,
    pub solver: SolveOptions,
    pub flow: FlowConfig,
    pub mass: MassConfig,
    pub spectrum: SpectrumConfig,
    pub loj: LojConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Entropy,
            n: 4,
            grid: GridConfig::default(),
            perturbation: PerturbationSpec::default(),
            solver: SolveOptions::default(),
            flow: FlowConfig::default(),
            mass: MassConfig::default(),
            spectrum: SpectrumConfig::default(),
            loj: LojConfig::default(),
            output_dir: PathBuf::from("pe-lab-out"),
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON or TOML; the format follows the file extension, and
    /// files without a known extension are tried as JSON first.
    pub fn from_str_with_format(text: &str, path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let cfg: Self = match ext {
            "json" => serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?,
            "toml" => toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?,
            _ => match serde_json::from_str(text) {
                Ok(c) => c,
                Err(_) => toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?,
            },
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_with_format(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=10).contains(&self.n) {
            return Err(Error::ConfigInvalid(format!("dimension n = {} outside 3..=10", self.n)));
        }
        self.grid_arc()?;
        self.solver.validate()?;
        if self.experiment == Experiment::Flow {
            self.flow.validate()?;
        }
        self.perturbation.validate(self.grid.r_max)?;
        if self.mass.seeds == 0 {
            return Err(Error::ConfigInvalid("mass.seeds must be positive".into()));
        }
        let eig = &self.spectrum.eigen;
        if !(eig.tol > 0.0) || eig.max_iter == 0 || self.spectrum.scalar_shifts.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::ConfigInvalid("spectrum options must be positive".into()));
        }
        let r = &self.loj.reduction;
        if self.loj.functionals.is_empty()
            || r.samples < 2
            || r.exponent_shells < 2
            || r.exponent_directions == 0
            || !(r.max_constant > 0.0)
            || r.radius.is_some_and(|x| !(x > 0.0))
            || !(self.loj.theta_tol > 0.0)
        {
            return Err(Error::ConfigInvalid("invalid loj options".into()));
        }
        for kind in &self.loj.functionals {
            crate::lojasiewicz::AnalyticFunctional::new(*kind, self.loj.dim)?;
        }
        Ok(())
    }

    pub fn grid_arc(&self) -> Result<Arc<RadialGrid>> {
        RadialGrid::new(self.n, self.grid.nodes, self.grid.r_max, self.grid.scheme)
            .map(Arc::new)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let toml_text = "experiment = \"flow\"\nn = 3\n[grid]\nN = 400\nR_max = 20.0\n[flow]\ngauge = \"entropy_gradient\"\n";
        let json_text = r#"{"experiment":"flow","n":3,"grid":{"N":400,"R_max":20.0},"flow":{"gauge":"entropy_gradient"}}"#;
        let a = ExperimentConfig::from_str_with_format(toml_text, Path::new("a.toml")).unwrap();
        let b = ExperimentConfig::from_str_with_format(json_text, Path::new("a.json")).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"experiment":"flow","grid":{"N":400,"Rmax":20.0}}"#;
        assert!(matches!(
            ExperimentConfig::from_str_with_format(bad, Path::new("c.json")),
            Err(Error::ConfigInvalid(_))
        ));
    }
}
