use nalgebra::DVector;
use serde::Serialize;

use super::functional::AnalyticFunctional;
use crate::error::{Error, Result};
use crate::flow::fits::{check_growth_bound, fit_lojasiewicz, GrowthCheck, LojasiewiczFit};

/// Samples of the gradient flow ẋ = ∇F(x), along which F increases.
#[derive(Debug, Clone, Serialize)]
pub struct AscentTrajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<DVector<f64>>,
    /// F(x(t)) − F(0).
    pub values: Vec<f64>,
    pub grad_sq: Vec<f64>,
    /// Whether the flow left the ball of radius `escape_radius`.
    pub escaped: bool,
}

/// Classical RK4 integration of ẋ = ∇F(x) up to `t_max` or escape.
pub fn gradient_ascent(
    f: &AnalyticFunctional,
    x0: &DVector<f64>,
    dt: f64,
    t_max: f64,
    escape_radius: f64,
) -> Result<AscentTrajectory> {
    if x0.len() != f.dim || !(dt > 0.0) || !(t_max > 0.0) || !(escape_radius > 0.0) {
        return Err(Error::ConfigInvalid("invalid ascent parameters".into()));
    }
    let f0 = f.eval(&DVector::zeros(f.dim));
    let mut traj =
        AscentTrajectory { times: vec![], points: vec![], values: vec![], grad_sq: vec![], escaped: false };
    let mut x = x0.clone();
    let steps = (t_max / dt).ceil() as usize;
    for s in 0..=steps {
        let g = f.grad(&x);
        traj.times.push(s as f64 * dt);
        traj.values.push(f.eval(&x) - f0);
        traj.grad_sq.push(g.norm_squared());
        traj.points.push(x.clone());
        if x.norm() > escape_radius {
            traj.escaped = true;
            break;
        }
        if s == steps {
            break;
        }
        let k1 = g;
        let k2 = f.grad(&(&x + &k1 * (0.5 * dt)));
        let k3 = f.grad(&(&x + &k2 * (0.5 * dt)));
        let k4 = f.grad(&(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteProfile { node: s + 1 });
        }
    }
    Ok(traj)
}

impl AscentTrajectory {
    /// Exponent fitted on (F − F(0), ‖∇F‖²) along the trajectory.
    pub fn lojasiewicz_fit(&self, floor: f64) -> Result<LojasiewiczFit> {
        fit_lojasiewicz(&self.values, &self.grad_sq, floor)
    }
}

/// Runs the ascent from a point of positive F − F(0) and checks the growth
/// bound implied by the inequality with exponent θ and constant C.
pub fn finite_instability_probe(
    f: &AnalyticFunctional,
    x0: &DVector<f64>,
    dt: f64,
    escape_radius: f64,
    theta: f64,
    c: f64,
) -> Result<(AscentTrajectory, GrowthCheck)> {
    let f0 = f.eval(&DVector::zeros(f.dim));
    if !(f.eval(x0) - f0 > 0.0) {
        return Err(Error::PreconditionFailed("F(x₀) − F(0) is not positive".into()));
    }
    let traj = gradient_ascent(f, x0, dt, 1e6 * dt, escape_radius)?;
    let check = check_growth_bound(&traj.times, &traj.values, theta, c, 1e-6)?;
    Ok((traj, check))
}
