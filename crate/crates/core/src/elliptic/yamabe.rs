use nalgebra::SVector;
use num_dual::{gradient, DualSVec64};
use serde::Serialize;

use super::newton::{damped_newton, NewtonReport};
use super::shifted::{solve_shifted_scalar, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::curvature::{metric_jets, scal_excess_point};
use crate::geometry::grid::Parity;
use crate::geometry::{curvature, RadialScalarField, WarpedMetric};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct YamabeSolution {
    #[serde(skip)]
    pub w: RadialScalarField,
    #[serde(skip)]
    pub metric: WarpedMetric,
    pub report: NewtonReport,
}

/// Conformal exponent w = 2/(n−2)·ln(1+z) of the substitution variable z.
fn exponent(n: usize, z: &[f64]) -> Vec<f64> {
    let p = 2.0 / (n as f64 - 2.0);
    z.iter().map(|z| p * z.ln_1p()).collect()
}

fn conformal_profiles(g: &WarpedMetric, z: &[f64]) -> WarpedMetric {
    let w = exponent(g.dim(), z);
    WarpedMetric {
        grid: g.grid.clone(),
        u: g.u.iter().zip(&w).map(|(a, b)| a + b).collect(),
        v: g.v.iter().zip(&w).map(|(a, b)| a + b).collect(),
    }
}

fn positive(z: &[f64]) -> Result<()> {
    match z.iter().position(|z| !(1.0 + z > 0.0)) {
        Some(node) => Err(Error::NegativeConformalFactor { node }),
        None => Ok(()),
    }
}

fn residual(g: &WarpedMetric, z: &[f64]) -> Vec<f64> {
    let gb = conformal_profiles(g, z);
    let n = g.dim();
    let jets = metric_jets(&gb);
    let last = z.len() - 1;
    jets.iter()
        .enumerate()
        .map(|(k, j)| if k == last { z[k] } else { scal_excess_point(n, g.grid.nodes()[k], j) })
        .collect()
}

/// Exact Jacobian: the scalar-curvature partials with respect to the jet are
/// obtained by forward-mode differentiation and chained through the stencils.
fn jacobian(g: &WarpedMetric, z: &[f64]) -> BandMatrix {
    let n = g.dim();
    let gb = conformal_profiles(g, z);
    let jets = metric_jets(&gb);
    let p = 2.0 / (n as f64 - 2.0);
    let dw: Vec<f64> = z.iter().map(|z| p / (1.0 + z)).collect();
    let d1 = g.grid.d1_rows(Parity::Even);
    let d2 = g.grid.d2_rows(Parity::Even);
    let mut rows = Vec::with_capacity(z.len());
    for (k, jet) in jets.iter().enumerate() {
        let r = g.grid.nodes()[k];
        let (_, grad) = gradient(
            |x: SVector<DualSVec64<6>, 6>| scal_excess_point(n, r, &[x[0], x[1], x[2], x[3], x[4], x[5]]),
            &SVector::<f64, 6>::from(*jet),
        );
        let mut row: Vec<(usize, f64)> = vec![(k, (grad[0] + grad[3]) * dw[k])];
        row.extend(d1[k].iter().map(|&(c, wt)| (c, (grad[1] + grad[4]) * wt * dw[c])));
        row.extend(d2[k].iter().map(|&(c, wt)| (c, (grad[2] + grad[5]) * wt * dw[c])));
        rows.push(crate::geometry::grid::compact(row));
    }
    let mut m = crate::geometry::operators::rows_to_band(&rows);
    m.set_identity_row(z.len() - 1);
    m
}

/// Conformal metric e^{2w}g of scalar curvature −n(n−1).
///
/// Newton runs on z with e^{2w} = (1+z)^{4/(n−2)}; the initial guess solves
/// the linearised equation 4(n−1)/(n−2)·(Δ+n)z = −(scal + n(n−1)).
pub fn solve_yamabe_full(g: &WarpedMetric, opts: &SolveOptions) -> Result<YamabeSolution> {
    g.check_decay(opts.decay_tol)?;
    let n = g.dim() as f64;
    let c = curvature(g)?;
    let factor = 4.0 * (n - 1.0) / (n - 2.0);
    let rhs = RadialScalarField::new(g.grid.clone(), c.scal_excess.iter().map(|s| -s / factor).collect())?;
    let z0 = solve_shifted_scalar(g, n, &rhs, opts)?.values;
    let z0 = if positive(&z0).is_ok() { z0 } else { vec![0.0; z0.len()] };
    let (z, report) = damped_newton(z0, |z| Ok(residual(g, z)), |z| Ok(jacobian(g, z)), positive, opts)?;
    let w = RadialScalarField::new(g.grid.clone(), exponent(g.dim(), &z))?;
    let metric = g.conformal(&w)?;
    Ok(YamabeSolution { w, metric, report })
}

pub fn solve_yamabe(g: &WarpedMetric, opts: &SolveOptions) -> Result<(RadialScalarField, WarpedMetric)> {
    let s = solve_yamabe_full(g, opts)?;
    Ok((s.w, s.metric))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::elliptic::solve_entropy_potential_from;
    use crate::geometry::{RadialGrid, Scheme};

    fn bumped(n: usize, eps: f64) -> WarpedMetric {
        let grid = Arc::new(RadialGrid::new(n, 400, 20.0, Scheme::Order4).unwrap());
        let bump = |r: f64| if r < 3.0 { (1.0 - (r / 3.0).powi(2)).powi(4) } else { 0.0 };
        let u: Vec<f64> = grid.nodes().iter().map(|&r| eps * bump(r)).collect();
        let v: Vec<f64> = grid.nodes().iter().map(|&r| eps * bump(r) / (1.0 + r * r)).collect();
        WarpedMetric::new(grid, u, v).unwrap()
    }

    #[test]
    fn hyperbolic_is_its_own_yamabe_metric() {
        let g = bumped(4, 0.0);
        let (w, _) = solve_yamabe(&g, &SolveOptions::default()).unwrap();
        assert!(w.sup_norm() < 1e-14);
    }

    #[test]
    fn yamabe_reaches_constant_scalar_curvature() {
        for n in 3..=5 {
            let g = bumped(n, 0.05);
            let s = solve_yamabe_full(&g, &SolveOptions::default()).unwrap();
            let c = curvature(&s.metric).unwrap();
            let last = c.scal_excess.len() - 1;
            let worst = c.scal_excess[..last].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(worst < 1e-8, "n={n}: {worst}");
            assert!(s.report.iterations <= 6, "{:?}", s.report);
        }
    }

    #[test]
    fn entropy_potential_converges_quadratically() {
        let g = bumped(4, 0.05);
        let sol = solve_entropy_potential_from(&g, None, &SolveOptions::default()).unwrap();
        let r = &sol.report.residuals;
        assert!(*r.last().unwrap() <= 1e-10);
        for k in 1..r.len() {
            if r[k - 1] < 1e-2 && r[k] > 1e-11 {
                assert!(r[k] <= 50.0 * r[k - 1] * r[k - 1], "{r:?}");
            }
        }
        assert!(sol.f.sup_norm() > 0.0, "{r:?}");
    }
}
