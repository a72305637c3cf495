use serde::{Deserialize, Serialize};

use super::velocity::Gauge;
use crate::elliptic::SolveOptions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub gauge: Gauge,
    pub dt_init: f64,
    pub t_max: f64,
    /// Largest change of u or v accepted in one step; larger steps are halved.
    pub cfl: f64,
    /// Threshold on ‖g − ĝ‖_∞ (modulo gauge) and ‖∇μ‖_{L²} for convergence.
    pub conv_tol: f64,
    /// Threshold on ‖g − ĝ‖_∞ beyond which the run counts as escaped.
    pub escape_radius: f64,
    /// Steps between recorded states.
    pub diag_every: usize,
    pub max_halvings: usize,
    /// Allowed entropy decrease between recorded states.
    pub monotonicity_tol: f64,
    pub solver: SolveOptions,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            gauge: Gauge::Deturck,
            dt_init: 0.02,
            t_max: 20.0,
            cfl: 0.05,
            conv_tol: 1e-6,
            escape_radius: 0.5,
            diag_every: 5,
            max_halvings: 12,
            monotonicity_tol: 1e-8,
            solver: SolveOptions::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.dt_init, self.t_max, self.cfl, self.conv_tol, self.escape_radius, self.monotonicity_tol];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) || self.diag_every == 0 {
            return Err(Error::ConfigInvalid(format!("flow parameters must be positive: {self:?}")));
        }
        if !(self.conv_tol < self.escape_radius) {
            return Err(Error::ConfigInvalid("conv_tol must be below escape_radius".into()));
        }
        self.solver.validate()
    }
}
