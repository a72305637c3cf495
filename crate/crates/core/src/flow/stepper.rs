use super::velocity::{deturck_jacobian, deturck_rates};
use crate::error::Result;
use crate::geometry::WarpedMetric;

/// γ = 1 + 1/√2 makes the two-stage Rosenbrock scheme L-stable.
const GAMMA: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;

fn with_offsets(g: &WarpedMetric, x: &[f64]) -> WarpedMetric {
    WarpedMetric {
        grid: g.grid.clone(),
        u: g.u.iter().zip(x.iter().step_by(2)).map(|(a, d)| a + d).collect(),
        v: g.v.iter().zip(x.iter().skip(1).step_by(2)).map(|(a, d)| a + d).collect(),
    }
}

/// One linearly implicit Rosenbrock step (second order, L-stable) of the
/// Ricci–DeTurck flow:
/// (I − γΔtJ)k₁ = F(x), (I − γΔtJ)k₂ = F(x + Δt k₁) − 2k₁,
/// x⁺ = x + Δt(3k₁ + k₂)/2, with J the exact Jacobian of F at x.
pub fn ros2_step(g: &WarpedMetric, dt: f64) -> Result<WarpedMetric> {
    let mut m = deturck_jacobian(g);
    let dim = m.dim();
    m.scale_rows(&vec![-GAMMA * dt; dim]);
    m.shift_diagonal(1.0);
    let lu = m.lu()?;
    let f0 = deturck_rates(g);
    let k1 = lu.solve(&f0);
    let stage: Vec<f64> = k1.iter().map(|k| dt * k).collect();
    let f1 = deturck_rates(&with_offsets(g, &stage));
    let rhs: Vec<f64> = f1.iter().zip(&k1).map(|(f, k)| f - 2.0 * k).collect();
    let k2 = lu.solve(&rhs);
    let dx: Vec<f64> = k1.iter().zip(&k2).map(|(a, b)| dt * (1.5 * a + 0.5 * b)).collect();
    let out = with_offsets(g, &dx);
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{RadialGrid, Scheme};

    fn bumped(eps: f64) -> WarpedMetric {
        let grid = Arc::new(RadialGrid::new(3, 300, 15.0, Scheme::Order4).unwrap());
        let bump = |r: f64| if r < 3.0 { (1.0 - (r / 3.0).powi(2)).powi(4) } else { 0.0 };
        let u = grid.nodes().iter().map(|&r| eps * bump(r)).collect();
        let v = grid.nodes().iter().map(|&r| eps * bump(r) / (1.0 + r * r)).collect();
        WarpedMetric::new(grid, u, v).unwrap()
    }

    #[test]
    fn hyperbolic_metric_is_stationary() {
        let g = bumped(0.0);
        let next = ros2_step(&g, 0.1).unwrap();
        assert!(next.sup_distance_to_reference() < 1e-13);
    }

    fn integrate(g: &WarpedMetric, t: f64, steps: usize) -> WarpedMetric {
        (0..steps).fold(g.clone(), |x, _| ros2_step(&x, t / steps as f64).unwrap())
    }

    #[test]
    fn global_error_is_second_order() {
        let g = bumped(0.05);
        let reference = integrate(&g, 0.2, 160);
        let err = |steps: usize| {
            let x = integrate(&g, 0.2, steps);
            x.u.iter().zip(&reference.u).chain(x.v.iter().zip(&reference.v)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let (e10, e20, e40) = (err(10), err(20), err(40));
        for ratio in [e10 / e20, e20 / e40] {
            assert!(ratio > 3.3 && ratio < 5.0, "{e10:e} {e20:e} {e40:e}");
        }
    }
}
