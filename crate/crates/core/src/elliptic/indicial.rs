use serde::Serialize;

/// A complex number, enough for the characteristic exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// Indicial radius: real and nonnegative, or imaginary (roots off the real axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum IndicialRadius {
    Real(f64),
    /// |R| of the purely imaginary radius.
    Imaginary(f64),
}

impl IndicialRadius {
    pub fn real(self) -> Option<f64> {
        match self {
            IndicialRadius::Real(r) => Some(r),
            IndicialRadius::Imaginary(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicialReport {
    pub n: usize,
    pub c: f64,
    pub weight_r: i32,
    pub i0: f64,
    pub roots: [Complex; 2],
    pub radius: IndicialRadius,
}

impl IndicialReport {
    /// i0 + c + s(n−1−s−2r) at a (complex) s.
    pub fn residual(&self, s: Complex) -> f64 {
        let k = (self.n - 1) as f64 - 2.0 * self.weight_r as f64;
        // s(k − s) = ks − s²
        let re = k * s.re - (s.re * s.re - s.im * s.im) + self.i0 + self.c;
        let im = k * s.im - 2.0 * s.re * s.im;
        re.hypot(im)
    }
}

/// Roots of i0 + c + s(n−1−s−2r) = 0 and the induced indicial radius.
pub fn indicial_roots(n: usize, c: f64, weight_r: i32, i0: f64) -> IndicialReport {
    let mid = ((n - 1) as f64 - 2.0 * weight_r as f64) / 2.0;
    let disc = mid * mid + i0 + c;
    let (roots, radius) = if disc >= 0.0 {
        let rad = disc.sqrt();
        (
            [Complex { re: mid - rad, im: 0.0 }, Complex { re: mid + rad, im: 0.0 }],
            IndicialRadius::Real(rad),
        )
    } else {
        let rad = (-disc).sqrt();
        (
            [Complex { re: mid, im: -rad }, Complex { re: mid, im: rad }],
            IndicialRadius::Imaginary(rad),
        )
    };
    IndicialReport { n, c, weight_r, i0, roots, radius }
}

/// Least shifts (λ₂, λ₁) making the indicial radius positive, respectively
/// larger than (n−1)/2; both are clamped at zero because the shifted
/// operators are only considered for c ≥ 0.
pub fn threshold_c(n: usize, weight_r: i32, i0: f64) -> (f64, f64) {
    let half = (n - 1) as f64 / 2.0;
    let mid = half - weight_r as f64;
    let lambda2 = (-mid * mid - i0).max(0.0);
    let lambda1 = (half * half - mid * mid - i0).max(0.0);
    (lambda2, lambda1)
}
