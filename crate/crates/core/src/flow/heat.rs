use serde::Serialize;

use super::stepper::ros2_step;
use crate::error::{Error, Result};
use crate::geometry::operators::{einstein_operator_band, tensor_inner};
use crate::geometry::{RadialSymmetric2Tensor, WarpedMetric};

/// ROS2 substeps used to evaluate the nonlinear flow map over one interval.
const FLOW_SUBSTEPS: usize = 4;

/// exp(−tΔ_E)h by classical RK4 on the discrete operator, with the R_max
/// node held at zero.
pub fn einstein_heat(g: &WarpedMetric, h: &RadialSymmetric2Tensor, t: f64) -> Result<RadialSymmetric2Tensor> {
    let mut m = einstein_operator_band(g)?;
    let dim = m.dim();
    for i in [dim - 2, dim - 1] {
        m.set_identity_row(i);
        m.set(i, i, 0.0);
    }
    let spacing = g.grid.spacing();
    // RK4 is stable for |λ|Δt < 2.78 and the spectrum reaches ~4/h² per unit.
    let cap = 0.1 * spacing * spacing;
    let steps = ((t / cap).ceil() as usize).max(20);
    let dt = t / steps as f64;
    let rhs = |x: &[f64]| -> Vec<f64> { m.matvec(x).into_iter().map(|y| -y).collect() };
    let mut x: Vec<f64> = h.a.iter().zip(&h.b).flat_map(|(a, b)| [*a, *b]).collect();
    x[dim - 2] = 0.0;
    x[dim - 1] = 0.0;
    let axpy = |x: &[f64], s: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = rhs(&x);
        let k2 = rhs(&axpy(&x, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&x, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&x, dt, &k3));
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    out.a = x.iter().step_by(2).copied().collect();
    out.b = x.iter().skip(1).step_by(2).copied().collect();
    Ok(out)
}

fn flow_map(g: &WarpedMetric, t: f64) -> Result<WarpedMetric> {
    let mut x = g.clone();
    for _ in 0..FLOW_SUBSTEPS {
        x = ros2_step(&x, t / FLOW_SUBSTEPS as f64)?;
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationDefect {
    pub dts: Vec<f64>,
    pub eps: Vec<f64>,
    /// ‖(S_Δt(ĝ+εh) − S_Δt(ĝ−εh))/(2ε) − exp(−ΔtΔ_E)h‖/Δt in L²(dV_ĝ).
    pub errors: Vec<f64>,
    /// Least-squares slope of log error against log Δt.
    pub order: f64,
}

/// Compares the centred difference of the discrete DeTurck flow map at ĝ
/// with the linear heat semigroup of Δ_E, refining Δt and ε = `eps_ratio`·Δt
/// together.
pub fn linearization_defect(
    g_hat: &WarpedMetric,
    h: &RadialSymmetric2Tensor,
    dts: &[f64],
    eps_ratio: f64,
) -> Result<LinearizationDefect> {
    if dts.len() < 2 || dts.iter().any(|d| !(*d > 0.0)) || !(eps_ratio > 0.0) {
        return Err(Error::ConfigInvalid("need at least two positive time steps and ε/Δt > 0".into()));
    }
    let mut eps = Vec::with_capacity(dts.len());
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let e = eps_ratio * dt;
        let plus = flow_map(&g_hat.perturbed(h, e)?, dt)?.difference_from_reference();
        let minus = flow_map(&g_hat.perturbed(h, -e)?, dt)?.difference_from_reference();
        let lin = einstein_heat(g_hat, h, dt)?;
        let diff = plus.axpy(-1.0, &minus)?.scale(0.5 / e).axpy(-1.0, &lin)?;
        errors.push(tensor_inner(g_hat, &diff, &diff)?.max(0.0).sqrt() / dt);
        eps.push(e);
    }
    let lx: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let order = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Ok(LinearizationDefect { dts: dts.to_vec(), eps, errors, order })
}

