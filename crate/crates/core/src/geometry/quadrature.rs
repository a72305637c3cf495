use super::fields::{same_grid, RadialScalarField, WarpedMetric};
use super::grid::{ln_sinh, sphere_area};
use crate::error::Result;

/// Radial density e^{u}ψ^{n−1} of dV_g (without the sphere area).
pub fn volume_density(g: &WarpedMetric) -> Vec<f64> {
    let n1 = (g.dim() - 1) as f64;
    g.grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &r)| (g.u[k] + n1 * g.v[k] + n1 * ln_sinh(r)).exp())
        .collect()
}

/// ω_{n−1}∫_0^R f e^{u}ψ^{n−1} dr.
pub fn integrate_ball(g: &WarpedMetric, f: &RadialScalarField, radius: f64) -> Result<f64> {
    same_grid(&g.grid, &f.grid)?;
    let dens = volume_density(g);
    let integrand: Vec<f64> = f.values.iter().zip(&dens).map(|(a, b)| a * b).collect();
    Ok(sphere_area(g.dim()) * g.grid.integrate_to(&integrand, radius)?)
}

/// ∫_M f dV_g over the whole truncated domain, using the nodal weights.
pub fn integrate_all(g: &WarpedMetric, f: &[f64]) -> f64 {
    let dens = volume_density(g);
    let w = g.grid.quadrature_weights();
    sphere_area(g.dim()) * (0..f.len()).map(|k| w[k] * dens[k] * f[k]).sum::<f64>()
}

/// Radial integrand of RV: (e^{u+(n−1)v} − 1)·sinh^{n−1} r, free of cancellation.
pub fn volume_difference_density(g: &WarpedMetric) -> Vec<f64> {
    let n1 = (g.dim() - 1) as f64;
    g.grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &r)| (g.u[k] + n1 * g.v[k]).exp_m1() * (n1 * ln_sinh(r)).exp())
        .collect()
}
