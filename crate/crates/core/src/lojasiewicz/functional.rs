use nalgebra::{DMatrix, DVector, Dyn};
use num_dual::{gradient, hessian, Dual2Vec, DualNum, DualVec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form test functionals with a critical point at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    /// −|x|²
    NegSquare,
    /// −|x|⁴
    NegQuartic,
    /// −x₁² − x₂⁴ − Σ_{i>2} x_i²
    SplitQuartic,
    /// −x₁² + x₂³ − Σ_{i>2} x_i²
    Cubic,
    /// −x₁²
    NegFirstSquare,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 5] = [
        FunctionalKind::NegSquare,
        FunctionalKind::NegQuartic,
        FunctionalKind::SplitQuartic,
        FunctionalKind::Cubic,
        FunctionalKind::NegFirstSquare,
    ];
}

/// A real-analytic functional on ℝ^dim with derivatives from dual numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticFunctional {
    pub kind: FunctionalKind,
    pub dim: usize,
}

impl AnalyticFunctional {
    pub fn new(kind: FunctionalKind, dim: usize) -> Result<Self> {
        let min_dim = match kind {
            FunctionalKind::NegSquare | FunctionalKind::NegQuartic => 1,
            _ => 2,
        };
        if dim < min_dim || dim > 10 {
            return Err(Error::ConfigInvalid(format!("{kind:?} needs dimension in [{min_dim}, 10], got {dim}")));
        }
        Ok(Self { kind, dim })
    }

    pub fn provenance(&self) -> String {
        let tail = if self.dim > 2 { " − Σ_{i>2} x_i²" } else { "" };
        match self.kind {
            FunctionalKind::NegSquare => format!("F(x) = −|x|² on ℝ^{}", self.dim),
            FunctionalKind::NegQuartic => format!("F(x) = −|x|⁴ on ℝ^{}", self.dim),
            FunctionalKind::SplitQuartic => format!("F(x) = −x₁² − x₂⁴{tail} on ℝ^{}", self.dim),
            FunctionalKind::Cubic => format!("F(x) = −x₁² + x₂³{tail} on ℝ^{}", self.dim),
            FunctionalKind::NegFirstSquare => format!("F(x) = −x₁² on ℝ^{}", self.dim),
        }
    }

    /// Exponent θ of |F(x) − F(0)|^{2−θ} ≤ C‖∇F(x)‖² near 0.
    pub fn closed_form_theta(&self) -> f64 {
        match self.kind {
            FunctionalKind::NegSquare | FunctionalKind::NegFirstSquare => 1.0,
            FunctionalKind::NegQuartic | FunctionalKind::SplitQuartic => 0.5,
            // Along x₁ = 0: |x₂|^{3(2−θ)} ≤ 9C x₂⁴.
            FunctionalKind::Cubic => 2.0 / 3.0,
        }
    }

    /// Radius of a ball around 0 on which N = ∇F + Π_K is inverted by Φ
    /// along every segment used in the reduction checks.
    pub fn reduction_radius(&self) -> f64 {
        match self.kind {
            // Φ(0, y₂) solves 3s² + s = y₂ and exists only for y₂ ≥ −1/12.
            FunctionalKind::Cubic => 0.05,
            _ => 0.1,
        }
    }

    pub fn value<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let sq = |d: &D| d.clone() * d.clone();
        let rest = |from: usize| x[from..].iter().fold(D::zero(), |acc, d| acc + sq(d));
        match self.kind {
            FunctionalKind::NegSquare => -rest(0),
            FunctionalKind::NegQuartic => {
                let s = rest(0);
                -(s.clone() * s)
            }
            FunctionalKind::SplitQuartic => -sq(&x[0]) - sq(&x[1]) * sq(&x[1]) - rest(2),
            FunctionalKind::Cubic => -sq(&x[0]) + sq(&x[1]) * x[1].clone() - rest(2),
            FunctionalKind::NegFirstSquare => -sq(&x[0]),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.value(x.as_slice())
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        gradient(|v: DVector<DualVec<f64, Dyn>>| self.value(v.as_slice()), x).1
    }

    pub fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        hessian(|v: DVector<Dual2Vec<f64, Dyn>>| self.value(v.as_slice()), x).2
    }
}
