use serde::{Deserialize, Serialize};

use super::indicial::threshold_c;
use crate::error::{Error, Result};
use crate::geometry::fields::same_grid;
use crate::geometry::operators::{laplacian_rows, rows_to_band, tensor_laplacian_band};
use crate::geometry::{RadialScalarField, RadialSymmetric2Tensor, WarpedMetric};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Residual tolerance.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
    /// Backtracking factor of the line search.
    pub damping: f64,
    /// Allowed size of |u|, |v| at R_max for admissible metrics.
    pub decay_tol: f64,
    /// Lower bound i₀ of the boundary operator used for tensor shifts.
    pub tensor_i0: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, damping: 0.5, decay_tol: 1e-8, tensor_i0: 0.0 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::ConfigInvalid(format!("invalid solver options {self:?}")));
        }
        Ok(())
    }
}

/// Band matrix of Δ + c with the Dirichlet row at R_max.
pub fn shifted_scalar_matrix(g: &WarpedMetric, c: f64) -> BandMatrix {
    let mut m = rows_to_band(&laplacian_rows(g));
    m.shift_diagonal(c);
    let last = m.dim() - 1;
    m.set_identity_row(last);
    m
}

fn sup(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A direct solve that misses the tolerance means the discrete operator is
/// numerically singular.
fn check_residual(m: &BandMatrix, x: &[f64], b: &[f64], tol: f64) -> Result<()> {
    let r: Vec<f64> = m.matvec(x).iter().zip(b).map(|(a, b)| a - b).collect();
    let res = sup(&r);
    if res > tol * sup(b) && res > 0.0 {
        let row = r.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > r[best].abs() { i } else { best });
        return Err(Error::SingularSystem { row, pivot: res });
    }
    Ok(())
}

/// Solves (Δ + c)φ = rhs with φ(R_max) = 0.
pub fn solve_shifted_scalar(
    g: &WarpedMetric,
    c: f64,
    rhs: &RadialScalarField,
    opts: &SolveOptions,
) -> Result<RadialScalarField> {
    same_grid(&g.grid, &rhs.grid)?;
    if !(c > 0.0) {
        return Err(Error::ShiftNotPositive(c));
    }
    let m = shifted_scalar_matrix(g, c);
    let mut b = rhs.values.clone();
    let last = b.len() - 1;
    b[last] = 0.0;
    let x = m.solve(&b)?;
    check_residual(&m, &x, &b, opts.tol)?;
    RadialScalarField::new(g.grid.clone(), x)
}

/// Band matrix of Δ + c on radial tensors (interleaved unknowns) with Dirichlet rows.
pub fn shifted_tensor_matrix(g: &WarpedMetric, c: f64) -> BandMatrix {
    let mut m = tensor_laplacian_band(g);
    m.shift_diagonal(c);
    let n = m.dim();
    m.set_identity_row(n - 2);
    m.set_identity_row(n - 1);
    m
}

pub fn interleave(h: &RadialSymmetric2Tensor) -> Vec<f64> {
    h.a.iter().zip(&h.b).flat_map(|(a, b)| [*a, *b]).collect()
}

pub fn deinterleave(g: &WarpedMetric, x: &[f64]) -> RadialSymmetric2Tensor {
    RadialSymmetric2Tensor {
        grid: g.grid.clone(),
        a: x.iter().step_by(2).copied().collect(),
        b: x.iter().skip(1).step_by(2).copied().collect(),
    }
}

/// Solves (Δ + c)h = rhs on radial symmetric 2-tensors with h(R_max) = 0.
///
/// Frame components are weight-zero functions, so the admissible shifts are
/// those above `threshold_c(n, 0, opts.tensor_i0)`.
pub fn solve_shifted_tensor(
    g: &WarpedMetric,
    c: f64,
    rhs: &RadialSymmetric2Tensor,
    opts: &SolveOptions,
) -> Result<RadialSymmetric2Tensor> {
    same_grid(&g.grid, &rhs.grid)?;
    let (lambda2, _) = threshold_c(g.dim(), 0, opts.tensor_i0);
    if !(c > lambda2) {
        return Err(Error::ShiftBelowThreshold { c, threshold: lambda2 });
    }
    let m = shifted_tensor_matrix(g, c);
    let mut b = interleave(rhs);
    let n = b.len();
    b[n - 1] = 0.0;
    b[n - 2] = 0.0;
    let x = m.solve(&b)?;
    check_residual(&m, &x, &b, opts.tol)?;
    Ok(deinterleave(g, &x))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{scalar_laplacian, tensor_laplacian, RadialGrid, Scheme};

    fn bump(r: f64, c: f64, w: f64) -> f64 {
        let x = (r - c) / w;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - x * x).powi(4)
        }
    }

    #[test]
    fn scalar_round_trip() {
        let grid = Arc::new(RadialGrid::new(3, 400, 16.0, Scheme::Order4).unwrap());
        let g = WarpedMetric::hyperbolic(grid.clone());
        let phi = RadialScalarField::from_fn(grid.clone(), |r| bump(r, 3.0, 2.5));
        let lap = scalar_laplacian(&g, &phi).unwrap();
        let rhs = RadialScalarField::new(grid, lap.values.iter().zip(&phi.values).map(|(l, p)| l + p).collect())
            .unwrap();
        let x = solve_shifted_scalar(&g, 1.0, &rhs, &SolveOptions::default()).unwrap();
        for k in 0..400 {
            assert!((x.values[k] - phi.values[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn non_positive_shift_rejected() {
        let grid = Arc::new(RadialGrid::new(3, 40, 8.0, Scheme::Order4).unwrap());
        let g = WarpedMetric::hyperbolic(grid.clone());
        let rhs = RadialScalarField::zeros(grid);
        assert_eq!(
            solve_shifted_scalar(&g, 0.0, &rhs, &SolveOptions::default()).unwrap_err(),
            Error::ShiftNotPositive(0.0)
        );
    }

    #[test]
    fn tensor_round_trip() {
        let grid = Arc::new(RadialGrid::new(4, 300, 12.0, Scheme::Order4).unwrap());
        let u: Vec<f64> = grid.nodes().iter().map(|&r| 0.05 * bump(r, 2.0, 1.8)).collect();
        let g = WarpedMetric::new(grid.clone(), u.clone(), u).unwrap();
        let h = RadialSymmetric2Tensor {
            grid: grid.clone(),
            a: grid.nodes().iter().map(|&r| bump(r, 3.0, 2.0)).collect(),
            b: grid.nodes().iter().map(|&r| bump(r, 4.0, 1.5) - 0.3 * bump(r, 3.0, 2.0)).collect(),
        };
        let rhs = tensor_laplacian(&g, &h).unwrap().axpy(2.0, &h).unwrap();
        let x = solve_shifted_tensor(&g, 2.0, &rhs, &SolveOptions::default()).unwrap();
        assert!(x.axpy(-1.0, &h).unwrap().sup_norm() < 1e-10);
        let err = solve_shifted_tensor(&g, -1.0, &rhs, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ShiftBelowThreshold { .. }));
    }
}
