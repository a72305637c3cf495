use crate::error::{Error, Result};
use crate::geometry::fields::same_grid;
use crate::geometry::grid::{coth, ln_sinh, sphere_area, Parity};
use crate::geometry::quadrature::volume_difference_density;
use crate::geometry::WarpedMetric;

/// Checks that `gref` is the hyperbolic metric on the grid of `g`.
pub(crate) fn check_reference(g: &WarpedMetric, gref: &WarpedMetric) -> Result<()> {
    same_grid(&g.grid, &gref.grid)?;
    if gref.u.iter().chain(&gref.v).any(|x| *x != 0.0) {
        return Err(Error::PreconditionFailed("the reference metric must be hyperbolic".into()));
    }
    Ok(())
}

fn check_radius(g: &WarpedMetric, radius: f64) -> Result<()> {
    let r_max = g.grid.r_max();
    if !(radius > 0.0 && radius <= r_max * (1.0 + 1e-12)) {
        return Err(Error::RadiusOutOfRange { radius, r_max });
    }
    Ok(())
}

/// Components (a, b) of h = g − ĝ in the ĝ-frame and b′ at every node.
fn reference_frame_difference(g: &WarpedMetric) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = g.difference_from_reference();
    let v1 = g.grid.d1(&g.v, Parity::Even);
    let db = g.v.iter().zip(&v1).map(|(v, v1)| 2.0 * v1 * (2.0 * v).exp()).collect();
    (d.a, d.b, db)
}

/// m_ADM(g, R) = ω sinh^{n−1}R·(n−1)·[coth R·(a − b) − b′](R).
pub fn adm_mass_at_radius(g: &WarpedMetric, gref: &WarpedMetric, radius: f64) -> Result<f64> {
    check_reference(g, gref)?;
    check_radius(g, radius)?;
    let n1 = (g.dim() - 1) as f64;
    let (a, b, db) = reference_frame_difference(g);
    let grid = &g.grid;
    let ar = grid.interpolate(&a, radius, Parity::Even);
    let br = grid.interpolate(&b, radius, Parity::Even);
    let dbr = grid.interpolate(&db, radius, Parity::Odd);
    let bracket = coth(radius) * (ar - br) - dbr;
    Ok(sphere_area(g.dim()) * n1 * (n1 * ln_sinh(radius)).exp() * bracket)
}

/// RV(g, R) = ∫_{B_R} dV_g − dV_ĝ.
pub fn renormalized_volume_at_radius(g: &WarpedMetric, gref: &WarpedMetric, radius: f64) -> Result<f64> {
    check_reference(g, gref)?;
    check_radius(g, radius)?;
    let dens = volume_difference_density(g);
    Ok(sphere_area(g.dim()) * g.grid.integrate_to(&dens, radius)?)
}

/// Radial density of the counterterms d/dr[m_ADM(r)]/ω + 2(n−1)·(dV_g − dV_ĝ)/(ω dr).
///
/// The derivative of the boundary flux is taken analytically from the nodal
/// jets, so the terms linear in g − ĝ cancel node by node against the
/// scalar-curvature integrand.
pub(crate) fn counterterm_density(g: &WarpedMetric) -> Vec<f64> {
    let n1 = (g.dim() - 1) as f64;
    let grid = &g.grid;
    let (u1, v1, v2) = (grid.d1(&g.u, Parity::Even), grid.d1(&g.v, Parity::Even), grid.d2(&g.v, Parity::Even));
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let (u, v) = (g.u[k], g.v[k]);
            let s = r.sinh();
            let c = coth(r);
            let a = (2.0 * u).exp_m1();
            let b = (2.0 * v).exp_m1();
            let da = 2.0 * u1[k] * (2.0 * u).exp();
            let db = 2.0 * v1[k] * (2.0 * v).exp();
            let d2b = (2.0 * v2[k] + 4.0 * v1[k] * v1[k]) * (2.0 * v).exp();
            let dflux = n1 * (n1 * c * (c * (a - b) - db) - (a - b) / (s * s) + c * (da - db) - d2b);
            let vol = 2.0 * n1 * (u + n1 * v).exp_m1();
            (dflux + vol) * (n1 * ln_sinh(r)).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{RadialGrid, Scheme};

    #[test]
    fn flux_derivative_matches_boundary_term() {
        let n = 4;
        let mismatch = |nodes: usize| {
            let grid = Arc::new(RadialGrid::new(n, nodes, 15.0, Scheme::Order4).unwrap());
            let u: Vec<f64> = grid.nodes().iter().map(|&r| 0.02 * (-(r - 2.0).powi(2)).exp()).collect();
            let v: Vec<f64> = grid.nodes().iter().map(|&r| 0.01 * (-r * r / 4.0).exp()).collect();
            let g = WarpedMetric::new(grid.clone(), u, v).unwrap();
            let gref = WarpedMetric::hyperbolic(grid.clone());
            let dens = counterterm_density(&g);
            let rv_dens = volume_difference_density(&g);
            let omega = sphere_area(n);
            let n1 = (n - 1) as f64;
            [1.0, 3.3, 5.0].map(|radius| {
                let total = omega * grid.integrate_to(&dens, radius).unwrap();
                let rv = omega * grid.integrate_to(&rv_dens, radius).unwrap();
                let m = adm_mass_at_radius(&g, &gref, radius).unwrap();
                (total - m - 2.0 * n1 * rv).abs() / (m.abs() + 2.0 * n1 * rv.abs())
            })
        };
        let coarse = mismatch(300);
        let fine = mismatch(600);
        for k in 0..3 {
            assert!(fine[k] < 1e-5, "{fine:?}");
            assert!(coarse[k] / fine[k] > 10.0, "{coarse:?} {fine:?}");
        }
    }
}
