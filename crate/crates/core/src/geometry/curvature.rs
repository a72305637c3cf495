use num_dual::DualNum;
use serde::Serialize;

use super::fields::WarpedMetric;
use super::grid::{coth, Parity};
use crate::error::Result;

/// Pointwise jet (u, u', u'', v, v', v'') of the metric profiles.
pub type Jet<D> = [D; 6];

/// Per-node curvature of a radial metric.
///
/// The `*_excess` vectors store the offsets from the hyperbolic values
/// (K + 1, Ric + (n−1), scal + n(n−1)); they are computed without
/// cancellation and are what the functionals consume.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureData {
    pub k_rad: Vec<f64>,
    pub k_tan: Vec<f64>,
    pub ric_rr: Vec<f64>,
    pub ric_tt: Vec<f64>,
    pub scal: Vec<f64>,
    pub k_rad_excess: Vec<f64>,
    pub k_tan_excess: Vec<f64>,
    pub ric_rr_excess: Vec<f64>,
    pub ric_tt_excess: Vec<f64>,
    pub scal_excess: Vec<f64>,
}

/// Jets of (u, v) at every node, using even-parity stencils.
pub fn metric_jets(g: &WarpedMetric) -> Vec<Jet<f64>> {
    let grid = &g.grid;
    let (u1, u2) = (grid.d1(&g.u, Parity::Even), grid.d2(&g.u, Parity::Even));
    let (v1, v2) = (grid.d1(&g.v, Parity::Even), grid.d2(&g.v, Parity::Even));
    (0..grid.len()).map(|k| [g.u[k], u1[k], u2[k], g.v[k], v1[k], v2[k]]).collect()
}

/// (K_rad + 1, K_tan + 1) at radius `r` from the jet.
pub fn sectional_excess<D: DualNum<Primitive = f64> + Copy>(r: f64, j: &Jet<D>) -> (D, D) {
    let [u, u1, _u2, v, v1, v2] = *j;
    let cth = coth(r);
    let s = r.sinh();
    let em2u = (u * (-2.0)).exp();
    let one_minus_em2u = -(u * (-2.0)).exp_m1();
    let k_rad = one_minus_em2u - em2u * (v2 + v1 * v1 + v1 * (2.0 * cth) - u1 * v1 - u1 * cth);
    // e^{-2v} − e^{-2u} = e^{-2u}(e^{2(u−v)} − 1)
    let diff = em2u * ((u - v) * 2.0).exp_m1();
    let k_tan = one_minus_em2u + diff / (s * s) - em2u * (v1 * (2.0 * cth) + v1 * v1);
    (k_rad, k_tan)
}

/// (Ric_rr + (n−1), Ric_tt + (n−1), scal + n(n−1)) from sectional excesses.
pub fn ricci_excess<D: DualNum<Primitive = f64> + Copy>(n: usize, k_rad: D, k_tan: D) -> (D, D, D) {
    let n1 = (n - 1) as f64;
    let n2 = (n - 2) as f64;
    let rr = k_rad * n1;
    let tt = k_rad + k_tan * n2;
    let scal = k_rad * (2.0 * n1) + k_tan * (n1 * n2);
    (rr, tt, scal)
}

pub fn scal_excess_point<D: DualNum<Primitive = f64> + Copy>(n: usize, r: f64, j: &Jet<D>) -> D {
    let (kr, kt) = sectional_excess(r, j);
    ricci_excess(n, kr, kt).2
}

pub fn curvature(g: &WarpedMetric) -> Result<CurvatureData> {
    g.validate()?;
    let n = g.dim();
    let n1 = (n - 1) as f64;
    let jets = metric_jets(g);
    let len = jets.len();
    let mut c = CurvatureData {
        k_rad: Vec::with_capacity(len),
        k_tan: Vec::with_capacity(len),
        ric_rr: Vec::with_capacity(len),
        ric_tt: Vec::with_capacity(len),
        scal: Vec::with_capacity(len),
        k_rad_excess: Vec::with_capacity(len),
        k_tan_excess: Vec::with_capacity(len),
        ric_rr_excess: Vec::with_capacity(len),
        ric_tt_excess: Vec::with_capacity(len),
        scal_excess: Vec::with_capacity(len),
    };
    for (k, j) in jets.iter().enumerate() {
        let r = g.grid.nodes()[k];
        let (kr, kt) = sectional_excess(r, j);
        let (rr, tt, sc) = ricci_excess(n, kr, kt);
        c.k_rad_excess.push(kr);
        c.k_tan_excess.push(kt);
        c.ric_rr_excess.push(rr);
        c.ric_tt_excess.push(tt);
        c.scal_excess.push(sc);
        c.k_rad.push(kr - 1.0);
        c.k_tan.push(kt - 1.0);
        c.ric_rr.push(rr - n1);
        c.ric_tt.push(tt - n1);
        c.scal.push(sc - n1 * n as f64);
    }
    Ok(c)
}
