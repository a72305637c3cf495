//! Renormalised functionals of radial asymptotically hyperbolic metrics:
//! ADM boundary term, renormalised volume, volume-renormalised mass, S, W and
//! the expander entropy μ, with their gradients.

pub mod boundary;
pub mod entropy;
pub mod limits;

use std::io::Write;

use serde::Serialize;

pub use boundary::{adm_mass_at_radius, renormalized_volume_at_radius};
pub use entropy::{
    entropy, entropy_from, entropy_gradient, entropy_gradient_with, s_functional, s_functional_limit, s_gradient,
    w_at_radius, w_functional, w_functional_limit, WIntegrand,
};
pub use limits::{extrapolate, LimitEstimate, RADIUS_FRACTIONS};

use crate::elliptic::SolveOptions;
use crate::error::Result;
use crate::geometry::grid::sphere_area;
use crate::geometry::WarpedMetric;

/// m_VR as the limit of ω∫_0^R d/dr(m_ADM + 2(n−1)RV) dr.
///
/// The flux derivative is taken analytically at the nodes, which keeps this
/// estimate discretely consistent with S and W (S + m_VR = ∫(scal + n(n−1))dV_g).
pub fn volume_renormalized_mass_limit(g: &WarpedMetric, gref: &WarpedMetric) -> Result<LimitEstimate> {
    boundary::check_reference(g, gref)?;
    let ct = boundary::counterterm_density(g);
    let omega = sphere_area(g.dim());
    let radii: Vec<f64> = RADIUS_FRACTIONS.iter().map(|s| s * g.grid.r_max()).collect();
    let values = radii.iter().map(|&r| Ok(omega * g.grid.integrate_to(&ct, r)?)).collect::<Result<Vec<f64>>>()?;
    extrapolate("m_VR", &radii, &values)
}

/// m_VR from the boundary formula m_ADM(R) + 2(n−1)RV(R) sampled directly.
pub fn volume_renormalized_mass_direct_limit(g: &WarpedMetric, gref: &WarpedMetric) -> Result<LimitEstimate> {
    let n1 = (g.dim() - 1) as f64;
    let radii: Vec<f64> = RADIUS_FRACTIONS.iter().map(|s| s * g.grid.r_max()).collect();
    let values = radii
        .iter()
        .map(|&r| Ok(adm_mass_at_radius(g, gref, r)? + 2.0 * n1 * renormalized_volume_at_radius(g, gref, r)?))
        .collect::<Result<Vec<f64>>>()?;
    extrapolate("m_VR (boundary formula)", &radii, &values)
}

/// m_VR(g) = lim(m_ADM(g, R) + 2(n−1)RV(g, R)).
pub fn volume_renormalized_mass(g: &WarpedMetric, gref: &WarpedMetric) -> Result<f64> {
    Ok(volume_renormalized_mass_limit(g, gref)?.value)
}

/// All renormalised functionals of one metric.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub n: usize,
    /// (R, m_ADM(g, R)).
    pub m_adm_at: Vec<(f64, f64)>,
    /// (R, RV(g, R)).
    pub rv_at: Vec<(f64, f64)>,
    pub m_vr: f64,
    pub s_value: f64,
    pub w_value: f64,
    pub mu: f64,
    pub f: Vec<f64>,
    pub convergence_flags: Vec<LimitEstimate>,
}

pub fn functional_report(g: &WarpedMetric, gref: &WarpedMetric, opts: &SolveOptions) -> Result<FunctionalReport> {
    let radii: Vec<f64> = RADIUS_FRACTIONS.iter().map(|s| s * g.grid.r_max()).collect();
    let m_adm_at =
        radii.iter().map(|&r| Ok((r, adm_mass_at_radius(g, gref, r)?))).collect::<Result<Vec<_>>>()?;
    let rv_at =
        radii.iter().map(|&r| Ok((r, renormalized_volume_at_radius(g, gref, r)?))).collect::<Result<Vec<_>>>()?;
    let m_vr = volume_renormalized_mass_limit(g, gref)?;
    let m_vr_direct = volume_renormalized_mass_direct_limit(g, gref)?;
    let s = s_functional_limit(g, gref)?;
    let (_, f) = entropy(g, gref, opts)?;
    let w = w_functional_limit(g, &f)?;
    Ok(FunctionalReport {
        n: g.dim(),
        m_adm_at,
        rv_at,
        m_vr: m_vr.value,
        s_value: s.value,
        w_value: w.value,
        mu: w.value,
        f: f.values,
        convergence_flags: vec![m_vr, m_vr_direct, s, w],
    })
}

impl FunctionalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Radius table with columns R, m_adm, rv, partial_sum.
    pub fn write_radius_csv<W: Write>(&self, w: W) -> Result<()> {
        let n1 = (self.n - 1) as f64;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["R", "m_adm", "rv", "partial_sum"])?;
        for ((r, m), (_, rv)) in self.m_adm_at.iter().zip(&self.rv_at) {
            wr.write_record(&[r.to_string(), m.to_string(), rv.to_string(), (m + 2.0 * n1 * rv).to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}
