use std::sync::Arc;

use num_dual::{first_derivative, DualNum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_shifted_scalar, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::{Parity, RadialGrid, RadialScalarField, RadialSymmetric2Tensor, WarpedMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// a = b.
    Conformal,
    /// Trace-free: a = −(n−1)b.
    Tt,
    /// Independent bump superpositions in a and b.
    RandomCompact,
    /// b = a + a'·tanh r/(n−1), divergence-free with respect to ĝ.
    DivergenceFree,
    /// a = b = (1+z)^{4/(n−2)} − 1 with (Δ + n)z = ψ ≥ 0, so that
    /// ĝ + h has scal ≥ −n(n−1); the amplitude bounds z rather than h.
    ScalBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Bound on max(|h|, |h'|, |h''|).
    pub amplitude: f64,
    /// Interval [r₀, r₁] containing the support of every bump.
    pub support: [f64; 2],
    pub seed: u64,
    pub bumps: usize,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { kind: PerturbationKind::Conformal, amplitude: 0.0, support: [0.0, 4.0], seed: 0, bumps: 3 }
    }
}

impl PerturbationSpec {
    pub fn validate(&self, r_max: f64) -> Result<()> {
        let [r0, r1] = self.support;
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::SpecInvalid(format!("amplitude {} must be finite and nonnegative", self.amplitude)));
        }
        if !(r0 >= 0.0 && r1 > r0 && r1 < r_max) {
            return Err(Error::SpecInvalid(format!("support [{r0}, {r1}] must satisfy 0 ≤ r₀ < r₁ < R_max = {r_max}")));
        }
        if self.bumps == 0 || self.bumps > 64 {
            return Err(Error::SpecInvalid(format!("bump count {} outside 1..=64", self.bumps)));
        }
        Ok(())
    }
}

/// Smooth bump e^{1 − 1/(1−s²)} on |s| < 1.
fn bump<D: DualNum<Primitive = f64>>(s: D) -> D {
    let q = D::one() - s.clone() * s;
    if q.re() <= 0.0 {
        D::zero()
    } else {
        (D::one() - q.recip()).exp()
    }
}

#[derive(Debug, Clone)]
struct Bumps(Vec<(f64, f64, f64)>);

impl Bumps {
    fn draw(rng: &mut ChaCha8Rng, spec: &PerturbationSpec, positive: bool) -> Self {
        let [r0, r1] = spec.support;
        let half = 0.5 * (r1 - r0);
        let bumps = (0..spec.bumps)
            .map(|_| {
                let width = half * rng.random_range(0.3..1.0);
                let center = if r1 - r0 > 2.0 * width { rng.random_range(r0 + width..=r1 - width) } else { r0 + half };
                let weight = if positive { rng.random_range(0.2..1.0) } else { rng.random_range(-1.0..1.0) };
                (center, width, weight)
            })
            .collect();
        Bumps(bumps)
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, r: D) -> D {
        self.0.iter().fold(D::zero(), |acc, &(c, w, a)| acc + bump((r.clone() - c) / w) * a)
    }
}

/// max(sup|f|, sup|f'|, sup|f''|) with finite-difference derivatives.
fn c2_norm(grid: &RadialGrid, f: &[f64]) -> f64 {
    let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    sup(f).max(sup(&grid.d1(f, Parity::Even))).max(sup(&grid.d2(f, Parity::Even)))
}

/// Deterministic perturbation tensor in the orthonormal frame of ĝ.
pub fn generate_perturbation(spec: &PerturbationSpec, grid: &Arc<RadialGrid>) -> Result<RadialSymmetric2Tensor> {
    spec.validate(grid.r_max())?;
    let n1 = (grid.dim() - 1) as f64;
    let mut h = RadialSymmetric2Tensor::zeros(grid.clone());
    if spec.amplitude == 0.0 {
        return Ok(h);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nodes = grid.nodes();
    let profile = |b: &Bumps| -> Vec<f64> { nodes.iter().map(|&r| b.eval(r)).collect() };
    match spec.kind {
        PerturbationKind::Conformal => {
            h.a = profile(&Bumps::draw(&mut rng, spec, false));
            h.b = h.a.clone();
        }
        PerturbationKind::Tt => {
            h.b = profile(&Bumps::draw(&mut rng, spec, false));
            h.a = h.b.iter().map(|b| -n1 * b).collect();
        }
        PerturbationKind::RandomCompact => {
            h.a = profile(&Bumps::draw(&mut rng, spec, false));
            h.b = profile(&Bumps::draw(&mut rng, spec, false));
        }
        PerturbationKind::DivergenceFree => {
            let bumps = Bumps::draw(&mut rng, spec, false);
            for (k, &r) in nodes.iter().enumerate() {
                let (a, da) = first_derivative(|x| bumps.eval(x), r);
                h.a[k] = a;
                h.b[k] = a + da * r.tanh() / n1;
            }
        }
        PerturbationKind::ScalBounded => {
            let bumps = Bumps::draw(&mut rng, spec, true);
            let g = WarpedMetric::hyperbolic(grid.clone());
            let psi = RadialScalarField::new(grid.clone(), profile(&bumps))?;
            let z = solve_shifted_scalar(&g, grid.dim() as f64, &psi, &SolveOptions::default())?.values;
            let scale = spec.amplitude / c2_norm(grid, &z);
            let p = 4.0 / (grid.dim() as f64 - 2.0);
            h.a = z.iter().map(|z| (p * (scale * z).ln_1p()).exp_m1()).collect();
            h.b = h.a.clone();
            return Ok(h);
        }
    }
    let norm = c2_norm(grid, &h.a).max(c2_norm(grid, &h.b));
    if norm > 0.0 {
        h = h.scale(spec.amplitude / norm);
    }
    Ok(h)
}
