use crate::elliptic::{solve_entropy_potential_from, SolveOptions};
use crate::error::Result;
use crate::geometry::grid::{coth, lagrange, ln_sinh, Parity};
use crate::geometry::{deturck_vector, RadialGrid, RadialScalarField, WarpedMetric};

/// Stencil of the interpolation used to compose profiles with φ; the
/// pulled-back metric is differentiated twice, so a wide stencil keeps the
/// composition error far below the flow tolerances.
const PULLBACK_POINTS: usize = 10;

fn interp(grid: &RadialGrid, f: &[f64], r: f64, parity: Parity) -> f64 {
    grid.interpolate_with(f, r, parity, PULLBACK_POINTS)
}

/// Radial diffeomorphism φ(r) = r·e^{χ(r)} carried along an entropy-gauge
/// run. Storing the even function χ keeps φ odd by construction, so the
/// pulled-back metric stays smooth at the origin.
#[derive(Debug, Clone)]
pub struct RadialDiffeo {
    pub chi: Vec<f64>,
}

impl RadialDiffeo {
    pub fn identity(g: &WarpedMetric) -> Self {
        Self { chi: vec![0.0; g.grid.len()] }
    }

    pub fn phi(&self, grid: &RadialGrid) -> Vec<f64> {
        self.chi.iter().zip(grid.nodes()).map(|(c, r)| r + r * c.exp_m1()).collect()
    }

    /// ln φ′ = χ + ln(1 + rχ′), differentiated from χ itself so that the
    /// pulled-back metric is an isometric image up to differencing error.
    pub fn ln_dphi(&self, grid: &RadialGrid) -> Vec<f64> {
        let d = grid.d1(&self.chi, Parity::Even);
        (0..d.len()).map(|k| self.chi[k] + (grid.nodes()[k] * d[k]).ln_1p()).collect()
    }

    /// φ*g: ũ = u∘φ + ln φ′, ṽ = v∘φ + ln(sinh φ / sinh r).
    pub fn pull_back(&self, g: &WarpedMetric) -> Result<WarpedMetric> {
        let grid = &g.grid;
        let nodes = grid.nodes();
        let ln_dphi = self.ln_dphi(grid);
        let phi = self.phi(grid);
        let delta: Vec<f64> = self.chi.iter().zip(nodes).map(|(c, r)| r * c.exp_m1()).collect();
        let u = (0..nodes.len())
            .map(|k| interp(grid, &g.u, phi[k], Parity::Even) + ln_dphi[k])
            .collect();
        let v = (0..nodes.len())
            .map(|k| interp(grid, &g.v, phi[k], Parity::Even) + ln_sinh_ratio(nodes[k], delta[k]))
            .collect();
        WarpedMetric::new(grid.clone(), u, v)
    }
}

/// ln(sinh(r+δ)/sinh r) without the cancellation of ln sinh(r+δ) − ln sinh r,
/// which the volume weight would amplify at large r.
fn ln_sinh_ratio(r: f64, delta: f64) -> f64 {
    let half = (0.5 * delta).sinh();
    (2.0 * half * half + coth(r) * delta.sinh()).ln_1p()
}

#[derive(Debug, Clone)]
/// Coordinate generator X = −W − ∇f of the entropy gauge.
pub struct GaugeField {
    pub x: Vec<f64>,
    pub f: RadialScalarField,
}

pub fn gauge_field(g: &WarpedMetric, f_guess: Option<&RadialScalarField>, opts: &SolveOptions) -> Result<GaugeField> {
    let f = solve_entropy_potential_from(g, f_guess, opts)?.f;
    let w = deturck_vector(g, &WarpedMetric::hyperbolic(g.grid.clone()))?;
    let f1 = g.grid.d1(&f.values, Parity::Even);
    let last = f1.len() - 1;
    let x: Vec<f64> = (0..f1.len())
        .map(|k| if k == last { 0.0 } else { -w.values[k] - (-2.0 * g.u[k]).exp() * f1[k] })
        .collect();
    Ok(GaugeField { x, f })
}

/// Advances ∂_t φ = X_t(φ), i.e. ∂_t χ = X_t(φ)/φ, over one step with Heun's
/// rule, X given at both ends. φ(R_max) = R_max is kept fixed.
pub fn advance_diffeo(g: &WarpedMetric, d: &RadialDiffeo, x0: &GaugeField, x1: &GaugeField, dt: f64) -> RadialDiffeo {
    let grid = &g.grid;
    let nodes = grid.nodes();
    let last = d.chi.len() - 1;
    let rate = |x: &GaugeField, chi: f64, r: f64| {
        let p = r * chi.exp();
        interp(grid, &x.x, p, Parity::Odd) / p
    };
    let mut out = d.clone();
    for k in 0..last {
        let (c, r) = (d.chi[k], nodes[k]);
        let a0 = rate(x0, c, r);
        let a1 = rate(x1, c + dt * a0, r);
        out.chi[k] = c + 0.5 * dt * (a0 + a1);
    }
    regularize_axis(grid, &mut out.chi);
    out
}

/// Nodes next to the origin whose χ is re-extrapolated after every step.
const AXIS_NODES: usize = 8;
const AXIS_FIT_NODES: usize = 4;

/// X/r contains (u − v)/r², which amplifies the discretisation noise of u − v
/// at the origin by 1/h². Any φ yields an isometric metric, so χ near the axis
/// is replaced by the even polynomial through the next nodes.
fn regularize_axis(grid: &RadialGrid, chi: &mut [f64]) {
    if chi.len() < 2 * (AXIS_NODES + AXIS_FIT_NODES) {
        return;
    }
    let nodes = grid.nodes();
    let xs: Vec<f64> = (AXIS_NODES..AXIS_NODES + AXIS_FIT_NODES).map(|k| nodes[k] * nodes[k]).collect();
    let ys: Vec<f64> = chi[AXIS_NODES..AXIS_NODES + AXIS_FIT_NODES].to_vec();
    for k in 0..AXIS_NODES {
        chi[k] = lagrange(&xs, &ys, nodes[k] * nodes[k]);
    }
}

/// Distance of a radial metric from ĝ modulo radial diffeomorphisms:
/// sup |ln ρ(s) − ln sinh s| where ρ is the areal radius at arc length s.
pub fn gauge_distance(g: &WarpedMetric) -> f64 {
    let grid = &g.grid;
    let e: Vec<f64> = g.u.iter().map(|u| u.exp_m1()).collect();
    let e0 = 1.5 * e[0] - 0.6 * e[1] + 0.1 * e[2];
    let shifted: Vec<f64> = e.iter().map(|x| x - e0).collect();
    let mut worst = 0.0f64;
    for (k, &r) in grid.nodes().iter().enumerate() {
        let s = r * (1.0 + e0) + grid.integrate_to(&shifted, r).unwrap_or(f64::NAN);
        let d = g.v[k] + ln_sinh(r) - ln_sinh(s);
        worst = if d.is_nan() { f64::NAN } else { worst.max(d.abs()) };
    }
    worst
}
