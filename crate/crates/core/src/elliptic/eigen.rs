use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::curvature;
use crate::geometry::operators::{einstein_operator_band, laplacian_rows, rows_to_band, sphere_curvature};
use crate::geometry::quadrature::volume_density;
use crate::geometry::{RadialSymmetric2Tensor, WarpedMetric};
use crate::linalg::BandMatrix;

/// Operators whose bottom eigenvalue on the radial class can be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigenOperator {
    /// Δ + c on scalar functions (returned as the pure-trace tensor w·g).
    ShiftedScalar { c: f64 },
    /// Δ_E on the full radial class (a, b).
    Einstein,
    /// Δ_E projected onto pure-trace tensors w·g.
    EinsteinPureTrace,
    /// Δ_E projected onto trace-free tensors b·(−(n−1), 1).
    EinsteinTraceFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    /// Shift σ of the inverse iteration; must lie below the spectrum.
    pub shift: f64,
    /// Relative change of the Rayleigh quotient accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { shift: -1.0, tol: 1e-12, max_iter: 20000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    #[serde(skip)]
    pub mode: RadialSymmetric2Tensor,
    pub iterations: usize,
    /// Weighted residual ‖Ax − λx‖/‖x‖ at exit.
    pub residual: f64,
}

/// Value placed on Dirichlet rows so that boundary modes sit far above the
/// part of the spectrum of interest.
const DIRICHLET_PENALTY: f64 = 1e6;

fn dirichlet(m: &mut BandMatrix, i: usize) {
    m.set_identity_row(i);
    m.set(i, i, DIRICHLET_PENALTY);
}

/// Assembles the discrete operator and the diagonal mass weights of its
/// L²(dV_g) pairing.
fn assemble(op: EigenOperator, g: &WarpedMetric) -> Result<(BandMatrix, Vec<f64>)> {
    let n = g.dim() as f64;
    let dens = volume_density(g);
    let len = g.grid.len();
    match op {
        EigenOperator::ShiftedScalar { c } => {
            let mut m = rows_to_band(&laplacian_rows(g));
            m.shift_diagonal(c);
            dirichlet(&mut m, len - 1);
            Ok((m, dens))
        }
        EigenOperator::EinsteinPureTrace => {
            let cd = curvature(g)?;
            let mut m = rows_to_band(&laplacian_rows(g));
            for k in 0..len {
                m.add(k, k, -2.0 * cd.scal[k] / n);
            }
            dirichlet(&mut m, len - 1);
            Ok((m, dens))
        }
        EigenOperator::EinsteinTraceFree => {
            let cd = curvature(g)?;
            let kappa = sphere_curvature(g);
            let mut m = rows_to_band(&laplacian_rows(g));
            for k in 0..len {
                let pot = 2.0 * n * kappa[k] * kappa[k] + 4.0 * (n - 1.0) / n * cd.k_rad[k]
                    - 2.0 * (n - 2.0) / n * cd.k_tan[k];
                m.add(k, k, pot);
            }
            dirichlet(&mut m, len - 1);
            Ok((m, dens))
        }
        EigenOperator::Einstein => {
            let mut m = einstein_operator_band(g)?;
            dirichlet(&mut m, 2 * len - 2);
            dirichlet(&mut m, 2 * len - 1);
            let mass = dens.iter().flat_map(|d| [*d, (n - 1.0) * d]).collect();
            Ok((m, mass))
        }
    }
}

fn weighted_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

/// Smallest eigenvalue of the discretised operator on the radial class by
/// shifted inverse iteration; the mode is normalised in L²(dV_g).
pub fn lowest_eigenvalue(op: EigenOperator, g: &WarpedMetric, opts: &EigenOptions) -> Result<EigenResult> {
    g.validate()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::ConfigInvalid(format!("invalid eigen options {opts:?}")));
    }
    let (a, mass) = assemble(op, g)?;
    let mut shifted = a.clone();
    shifted.shift_diagonal(-opts.shift);
    let lu = shifted.lu()?;
    let dim = a.dim();
    // Smooth positive start with a component along every low mode.
    let nodes = g.grid.nodes();
    let mut x: Vec<f64> = (0..dim)
        .map(|i| {
            let k = if dim == nodes.len() { i } else { i / 2 };
            let r = nodes[k] / g.grid.r_max();
            (1.0 - r) * (1.0 + 0.3 * (i % 2) as f64)
        })
        .collect();
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut y = lu.solve(&x);
        let norm = weighted_dot(&mass, &y, &y).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::IterationStalled { iterations: it, residual });
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let ay = a.matvec(&y);
        let rq = weighted_dot(&mass, &ay, &y);
        let r: Vec<f64> = ay.iter().zip(&y).map(|(p, q)| p - rq * q).collect();
        residual = weighted_dot(&mass, &r, &r).sqrt();
        let change = (rq - lambda).abs();
        lambda = rq;
        x = y;
        if change <= opts.tol * lambda.abs().max(1.0) && it > 1 {
            return Ok(EigenResult { lambda, mode: to_tensor(op, g, &x), iterations: it, residual });
        }
    }
    Err(Error::IterationStalled { iterations: opts.max_iter, residual })
}

fn to_tensor(op: EigenOperator, g: &WarpedMetric, x: &[f64]) -> RadialSymmetric2Tensor {
    let n = g.dim() as f64;
    let mut t = RadialSymmetric2Tensor::zeros(g.grid.clone());
    match op {
        EigenOperator::ShiftedScalar { .. } | EigenOperator::EinsteinPureTrace => {
            let s = 1.0 / n.sqrt();
            t.a = x.iter().map(|v| v * s).collect();
            t.b = t.a.clone();
        }
        EigenOperator::EinsteinTraceFree => {
            let s = 1.0 / (n * (n - 1.0)).sqrt();
            t.a = x.iter().map(|v| -(n - 1.0) * v * s).collect();
            t.b = x.iter().map(|v| v * s).collect();
        }
        EigenOperator::Einstein => {
            t.a = x.iter().step_by(2).copied().collect();
            t.b = x.iter().skip(1).step_by(2).copied().collect();
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{RadialGrid, Scheme};

    fn hyp(n: usize, r_max: f64) -> WarpedMetric {
        let h = 0.05;
        let len = (r_max / h).round() as usize;
        WarpedMetric::hyperbolic(Arc::new(RadialGrid::new(n, len, r_max, Scheme::Order4).unwrap()))
    }

    #[test]
    fn scalar_bottom_above_essential_spectrum() {
        for n in 3..=4 {
            let q = ((n - 1) as f64 / 2.0).powi(2);
            let res = lowest_eigenvalue(EigenOperator::ShiftedScalar { c: 1.0 }, &hyp(n, 15.0), &EigenOptions::default())
                .unwrap();
            assert!(res.lambda >= q + 1.0 - 1e-6, "{n}: {}", res.lambda);
            assert!(res.lambda < q + 1.0 + 0.2, "{n}: {}", res.lambda);
        }
    }

    #[test]
    fn pure_trace_matches_shifted_scalar() {
        let g = hyp(4, 12.0);
        let a = lowest_eigenvalue(EigenOperator::EinsteinPureTrace, &g, &EigenOptions::default()).unwrap();
        let b = lowest_eigenvalue(EigenOperator::ShiftedScalar { c: 6.0 }, &g, &EigenOptions::default()).unwrap();
        assert!((a.lambda - b.lambda).abs() < 1e-8);
        let full = lowest_eigenvalue(EigenOperator::Einstein, &g, &EigenOptions::default()).unwrap();
        assert!(full.lambda <= a.lambda + 1e-8);
    }
}
