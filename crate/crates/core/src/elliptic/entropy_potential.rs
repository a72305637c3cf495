use serde::Serialize;

use super::newton::{damped_newton, NewtonReport};
use super::shifted::SolveOptions;
use crate::error::Result;
use crate::geometry::grid::{apply_rows, Parity};
use crate::geometry::operators::{laplacian_rows, rows_to_band};
use crate::geometry::{curvature, RadialScalarField, WarpedMetric};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct EntropyPotential {
    #[serde(skip)]
    pub f: RadialScalarField,
    pub report: NewtonReport,
}

/// Euler–Lagrange residual 2Δf + |∇f|² − scal − n(n−1) + 2(n−1)f, with the
/// last entry replaced by the Dirichlet condition f(R_max) = 0.
pub fn el_residual(g: &WarpedMetric, scal_excess: &[f64], f: &[f64]) -> Vec<f64> {
    let rows = laplacian_rows(g);
    el_residual_with(g, &rows, scal_excess, f)
}

fn el_residual_with(g: &WarpedMetric, rows: &[crate::geometry::grid::Row], scal_excess: &[f64], f: &[f64]) -> Vec<f64> {
    let n1 = (g.dim() - 1) as f64;
    let lap = apply_rows(rows, f);
    let df = g.grid.d1(f, Parity::Even);
    let last = f.len() - 1;
    (0..f.len())
        .map(|k| {
            if k == last {
                f[k]
            } else {
                2.0 * lap[k] + (-2.0 * g.u[k]).exp() * df[k] * df[k] - scal_excess[k] + 2.0 * n1 * f[k]
            }
        })
        .collect()
}

fn el_jacobian(g: &WarpedMetric, lap: &BandMatrix, f: &[f64]) -> BandMatrix {
    let n1 = (g.dim() - 1) as f64;
    let df = g.grid.d1(f, Parity::Even);
    let d1 = g.grid.d1_rows(Parity::Even);
    let grad_rows: Vec<_> = d1
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let s = 2.0 * (-2.0 * g.u[k]).exp() * df[k];
            row.iter().map(|&(c, w)| (c, s * w)).collect::<Vec<_>>()
        })
        .collect();
    let mut j = lap.add_scaled(1.0, &rows_to_band(&grad_rows));
    j.shift_diagonal(2.0 * n1);
    j.set_identity_row(f.len() - 1);
    j
}

/// Minimiser of the W-functional: solves the Euler–Lagrange equation by
/// damped Newton, starting from `initial` or from scal-excess/(2(n−1)).
pub fn solve_entropy_potential_from(
    g: &WarpedMetric,
    initial: Option<&RadialScalarField>,
    opts: &SolveOptions,
) -> Result<EntropyPotential> {
    g.check_decay(opts.decay_tol)?;
    let c = curvature(g)?;
    let n1 = (g.dim() - 1) as f64;
    let rows = laplacian_rows(g);
    let lap2 = {
        let mut m = rows_to_band(&rows);
        m.scale_rows(&vec![2.0; rows.len()]);
        m
    };
    let x0 = match initial {
        Some(f0) => {
            crate::geometry::fields::same_grid(&g.grid, &f0.grid)?;
            f0.values.clone()
        }
        None => {
            let mut x: Vec<f64> = c.scal_excess.iter().map(|s| s / (2.0 * n1)).collect();
            let last = x.len() - 1;
            x[last] = 0.0;
            x
        }
    };
    let (f, report) = damped_newton(
        x0,
        |f| Ok(el_residual_with(g, &rows, &c.scal_excess, f)),
        |f| Ok(el_jacobian(g, &lap2, f)),
        |_| Ok(()),
        opts,
    )?;
    Ok(EntropyPotential { f: RadialScalarField::new(g.grid.clone(), f)?, report })
}

pub fn solve_entropy_potential(g: &WarpedMetric, opts: &SolveOptions) -> Result<RadialScalarField> {
    Ok(solve_entropy_potential_from(g, None, opts)?.f)
}
