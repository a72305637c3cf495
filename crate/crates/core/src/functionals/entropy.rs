use serde::{Deserialize, Serialize};

use super::boundary::{check_reference, counterterm_density};
use super::limits::{extrapolate, LimitEstimate, RADIUS_FRACTIONS};
use crate::elliptic::{solve_entropy_potential_from, SolveOptions};
use crate::error::Result;
use crate::geometry::fields::same_grid;
use crate::geometry::grid::{ln_sinh, sphere_area};
use crate::geometry::operators::{gradient_norm_sq, hessian};
use crate::geometry::{curvature, RadialScalarField, RadialSymmetric2Tensor, WarpedMetric};

/// Local integrand of the W-functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WIntegrand {
    /// (|∇f|² + scal + n(n−1))e^{−f} − 2(n−1)((f+1)e^{−f} − 1); its
    /// f-variation is the Euler–Lagrange operator of the entropy potential.
    Consistent,
    /// (|∇f|² + scal + f)e^{−f} − 2(n−1)((f+1)e^{−f} − 1); kept only to show
    /// that it is incompatible with the Euler–Lagrange equation.
    Transcribed,
}

/// ∫_{B_R} I dV_g − m_ADM(R) − 2(n−1)RV(R) as a radial density, for a
/// pointwise integrand I given at the nodes.
fn renormalized_density(g: &WarpedMetric, integrand: &[f64]) -> Vec<f64> {
    let n1 = (g.dim() - 1) as f64;
    let ct = counterterm_density(g);
    g.grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &r)| integrand[k] * (g.u[k] + n1 * g.v[k] + n1 * ln_sinh(r)).exp() - ct[k])
        .collect()
}

fn sampled_limit(g: &WarpedMetric, name: &str, density: &[f64]) -> Result<LimitEstimate> {
    let omega = sphere_area(g.dim());
    let radii: Vec<f64> = RADIUS_FRACTIONS.iter().map(|s| s * g.grid.r_max()).collect();
    let values = radii
        .iter()
        .map(|&r| Ok(omega * g.grid.integrate_to(density, r)?))
        .collect::<Result<Vec<f64>>>()?;
    extrapolate(name, &radii, &values)
}

fn w_integrand(g: &WarpedMetric, f: &RadialScalarField, variant: WIntegrand) -> Result<Vec<f64>> {
    let n = g.dim() as f64;
    let c = curvature(g)?;
    let grad = gradient_norm_sq(g, f);
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(k, &fk)| {
            let e = (-fk).exp();
            match variant {
                // (f+1)e^{−f} − 1 = expm1(−f) + f e^{−f}
                WIntegrand::Consistent => {
                    (grad[k] + c.scal_excess[k]) * e - 2.0 * (n - 1.0) * ((-fk).exp_m1() + fk * e)
                }
                WIntegrand::Transcribed => {
                    (grad[k] + c.scal[k] + fk) * e - 2.0 * (n - 1.0) * ((-fk).exp_m1() + fk * e)
                }
            }
        })
        .collect())
}

/// The bracket of the W-functional at a single radius R.
pub fn w_at_radius(g: &WarpedMetric, f: &RadialScalarField, radius: f64, variant: WIntegrand) -> Result<f64> {
    same_grid(&g.grid, &f.grid)?;
    let dens = renormalized_density(g, &w_integrand(g, f, variant)?);
    Ok(sphere_area(g.dim()) * g.grid.integrate_to(&dens, radius)?)
}

pub fn w_functional_limit(g: &WarpedMetric, f: &RadialScalarField) -> Result<LimitEstimate> {
    same_grid(&g.grid, &f.grid)?;
    let dens = renormalized_density(g, &w_integrand(g, f, WIntegrand::Consistent)?);
    sampled_limit(g, "W", &dens)
}

/// W(g, f) with the counterterms −m_ADM − 2(n−1)RV.
pub fn w_functional(g: &WarpedMetric, f: &RadialScalarField) -> Result<f64> {
    Ok(w_functional_limit(g, f)?.value)
}

pub fn s_functional_limit(g: &WarpedMetric, gref: &WarpedMetric) -> Result<LimitEstimate> {
    check_reference(g, gref)?;
    let c = curvature(g)?;
    let dens = renormalized_density(g, &c.scal_excess);
    sampled_limit(g, "S", &dens)
}

/// S(g) = lim(∫_{B_R}(scal + n(n−1))dV_g − m_ADM(R) − 2(n−1)RV(R)).
pub fn s_functional(g: &WarpedMetric, gref: &WarpedMetric) -> Result<f64> {
    Ok(s_functional_limit(g, gref)?.value)
}

/// Entropy μ and its minimising potential, optionally warm-started.
pub fn entropy_from(
    g: &WarpedMetric,
    gref: &WarpedMetric,
    initial: Option<&RadialScalarField>,
    opts: &SolveOptions,
) -> Result<(f64, RadialScalarField)> {
    check_reference(g, gref)?;
    let f = solve_entropy_potential_from(g, initial, opts)?.f;
    let mu = w_functional(g, &f)?;
    Ok((mu, f))
}

pub fn entropy(g: &WarpedMetric, gref: &WarpedMetric, opts: &SolveOptions) -> Result<(f64, RadialScalarField)> {
    entropy_from(g, gref, None, opts)
}

/// −(Ric + ∇²f + (n−1)g)e^{−f} for a given potential f.
pub fn entropy_gradient_with(g: &WarpedMetric, f: &RadialScalarField) -> Result<RadialSymmetric2Tensor> {
    let c = curvature(g)?;
    let hess = hessian(g, f)?;
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    for k in 0..f.values.len() {
        let e = (-f.values[k]).exp();
        out.a[k] = -(c.ric_rr_excess[k] + hess.a[k]) * e;
        out.b[k] = -(c.ric_tt_excess[k] + hess.b[k]) * e;
    }
    Ok(out)
}

/// L²-gradient of μ; the sign is the one for which dμ[h] = ⟨∇μ, h⟩.
pub fn entropy_gradient(g: &WarpedMetric, gref: &WarpedMetric, opts: &SolveOptions) -> Result<RadialSymmetric2Tensor> {
    let (_, f) = entropy(g, gref, opts)?;
    entropy_gradient_with(g, &f)
}

/// ∇S = −Ric + ½scal·g + ½(n−1)(n−2)g.
pub fn s_gradient(g: &WarpedMetric, gref: &WarpedMetric) -> Result<RadialSymmetric2Tensor> {
    check_reference(g, gref)?;
    let c = curvature(g)?;
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    for k in 0..g.u.len() {
        out.a[k] = -c.ric_rr_excess[k] + 0.5 * c.scal_excess[k];
        out.b[k] = -c.ric_tt_excess[k] + 0.5 * c.scal_excess[k];
    }
    Ok(out)
}
