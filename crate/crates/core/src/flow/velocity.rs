use nalgebra::{SMatrix, SVector};
use num_dual::{jacobian, DualNum, DualSVec64};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::entropy_gradient_with;
use crate::geometry::curvature::{metric_jets, ricci_excess, sectional_excess, Jet};
use crate::geometry::grid::{compact, Parity, Row};
use crate::geometry::operators::{deturck_point, lie_derivative_point, rows_to_band};
use crate::geometry::{RadialScalarField, RadialSymmetric2Tensor, WarpedMetric};
use crate::linalg::BandMatrix;

/// Gauge of the normalised Ricci flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// ∂_t g = −2(Ric + (n−1)g) + L_W g with W the Christoffel difference to ĝ.
    Deturck,
    /// ∂_t g = −2(Ric + (n−1)g + ∇²f_g).
    EntropyGradient,
}

/// (u_t, v_t) of the Ricci–DeTurck flow at one node from the metric jet.
pub fn deturck_rate_point<D: DualNum<Primitive = f64> + Copy>(n: usize, r: f64, j: &Jet<D>) -> (D, D) {
    let (kr, kt) = sectional_excess(r, j);
    let (rr, tt, _) = ricci_excess(n, kr, kt);
    let (w, dw) = deturck_point(n, r, j);
    let (lr, lt) = lie_derivative_point(r, j, w, dw);
    (lr * 0.5 - rr, lt * 0.5 - tt)
}

/// Frame components of ∂_t g for the Ricci–DeTurck flow (zero at R_max).
pub fn deturck_velocity(g: &WarpedMetric) -> RadialSymmetric2Tensor {
    let jets = metric_jets(g);
    let n = g.dim();
    let last = jets.len() - 1;
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    for (k, (j, &r)) in jets.iter().zip(g.grid.nodes()).enumerate().take(last) {
        let (ut, vt) = deturck_rate_point(n, r, j);
        out.a[k] = 2.0 * ut;
        out.b[k] = 2.0 * vt;
    }
    out
}

/// Frame components of ∂_t g in the entropy-gradient gauge for a given potential.
pub fn entropy_gauge_velocity(g: &WarpedMetric, f: &RadialScalarField) -> Result<RadialSymmetric2Tensor> {
    // −2(Ric + (n−1)g + ∇²f) = 2e^{f}∇μ
    let grad = entropy_gradient_with(g, f)?;
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    let last = f.values.len() - 1;
    for k in 0..last {
        let e = 2.0 * f.values[k].exp();
        out.a[k] = e * grad.a[k];
        out.b[k] = e * grad.b[k];
    }
    Ok(out)
}

/// Interleaved (u_t, v_t) of the DeTurck flow.
pub fn deturck_rates(g: &WarpedMetric) -> Vec<f64> {
    let vel = deturck_velocity(g);
    vel.a.iter().zip(&vel.b).flat_map(|(a, b)| [0.5 * a, 0.5 * b]).collect()
}

/// Exact Jacobian of `deturck_rates` with respect to the interleaved
/// unknowns (u_0, v_0, u_1, v_1, …); the R_max row is zero.
pub fn deturck_jacobian(g: &WarpedMetric) -> BandMatrix {
    let n = g.dim();
    let jets = metric_jets(g);
    let d1 = g.grid.d1_rows(Parity::Even);
    let d2 = g.grid.d2_rows(Parity::Even);
    let last = jets.len() - 1;
    let mut rows: Vec<Row> = Vec::with_capacity(2 * jets.len());
    for (k, (jet, &r)) in jets.iter().zip(g.grid.nodes()).enumerate() {
        if k == last {
            rows.push(vec![(2 * k, 0.0)]);
            rows.push(vec![(2 * k + 1, 0.0)]);
            continue;
        }
        let (_, jac): (SVector<f64, 2>, SMatrix<f64, 2, 6>) = jacobian(
            |x: SVector<DualSVec64<6>, 6>| {
                let (a, b) = deturck_rate_point(n, r, &[x[0], x[1], x[2], x[3], x[4], x[5]]);
                SVector::from([a, b])
            },
            &SVector::<f64, 6>::from(*jet),
        );
        for comp in 0..2 {
            let mut row: Row = vec![(2 * k, jac[(comp, 0)]), (2 * k + 1, jac[(comp, 3)])];
            row.extend(d1[k].iter().map(|&(c, w)| (2 * c, jac[(comp, 1)] * w)));
            row.extend(d2[k].iter().map(|&(c, w)| (2 * c, jac[(comp, 2)] * w)));
            row.extend(d1[k].iter().map(|&(c, w)| (2 * c + 1, jac[(comp, 4)] * w)));
            row.extend(d2[k].iter().map(|&(c, w)| (2 * c + 1, jac[(comp, 5)] * w)));
            rows.push(compact(row));
        }
    }
    rows_to_band(&rows)
}
