//! Finite-dimensional Łojasiewicz–Simon toolkit: analytic test functionals,
//! the Lyapunov–Schmidt reduction onto the Hessian kernel, sampled checks of
//! the reduction inequalities and gradient flows near a critical point.

pub mod ascent;
pub mod functional;
pub mod reduction;

pub use functional::{AnalyticFunctional, FunctionalKind};
pub use reduction::{
    exponent_directions, invert_n, kernel_projection, ls_exponent, n_map, reduced_gradient,
    reduced_polynomial_residual, reduced_value, sample_ball, verify_lemmas, KernelProjection, LemmaCheck,
    LemmaSample, LsExponent,
};
pub use ascent::{finite_instability_probe, gradient_ascent, AscentTrajectory};

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;

/// Sampling parameters of a reduction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionOptions {
    pub samples: usize,
    /// Sample radius; `None` uses the functional's reduction radius.
    pub radius: Option<f64>,
    pub seed: u64,
    /// Largest sampled constant accepted for a lemma check.
    pub max_constant: f64,
    pub exponent_directions: usize,
    pub exponent_shells: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self { samples: 100, radius: None, seed: 0, max_constant: 1e3, exponent_directions: 64, exponent_shells: 11 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionResult {
    pub provenance: String,
    pub kernel_basis: Vec<Vec<f64>>,
    /// max ‖L k‖ over the kernel basis.
    pub kernel_residual: f64,
    pub condition_number: f64,
    pub theta: f64,
    pub theta_closed_form: f64,
    pub c: f64,
    pub polynomial_residual: f64,
    pub lemma_checks: Vec<LemmaCheck>,
}

/// Full reduction pipeline for one functional.
pub fn reduce(f: &AnalyticFunctional, opts: &ReductionOptions) -> Result<ReductionResult> {
    let k = kernel_projection(f)?;
    let l = f.hess(&DVector::zeros(f.dim));
    let kernel_residual = k.basis.column_iter().map(|c| (&l * c).norm()).fold(0.0, f64::max);
    let radius = opts.radius.unwrap_or(f.reduction_radius());
    let dirs = exponent_directions(&k, opts.exponent_directions, opts.seed);
    let ls = ls_exponent(f, &dirs, radius, opts.exponent_shells)?;
    let xs = sample_ball(f.dim, opts.samples, radius, opts.seed.wrapping_add(1));
    let lemma_checks = verify_lemmas(f, &k, &xs, opts.max_constant)?;
    Ok(ReductionResult {
        provenance: f.provenance(),
        kernel_basis: k.basis.column_iter().map(|c| c.iter().copied().collect()).collect(),
        kernel_residual,
        condition_number: k.condition_number,
        theta: ls.theta,
        theta_closed_form: f.closed_form_theta(),
        c: ls.c,
        polynomial_residual: reduced_polynomial_residual(f, &k, 0.2 * radius, 8)?,
        lemma_checks,
    })
}

/// Writes lemma samples as CSV rows (functional, lemma, sample, lhs, rhs, ratio).
pub fn write_lemma_csv<W: Write>(results: &[ReductionResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["functional", "lemma", "sample", "lhs", "rhs", "ratio"])?;
    for r in results {
        for check in &r.lemma_checks {
            for s in &check.samples {
                out.write_record([
                    r.provenance.clone(),
                    check.name.clone(),
                    s.sample.to_string(),
                    format!("{:e}", s.lhs),
                    format!("{:e}", s.rhs),
                    format!("{:e}", s.ratio),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
