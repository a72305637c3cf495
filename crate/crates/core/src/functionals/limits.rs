use serde::Serialize;

use crate::error::{Error, Result};

/// Fractions of R_max at which renormalised quantities are sampled.
pub const RADIUS_FRACTIONS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Extrapolated R → ∞ limit of a sampled quantity with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub name: String,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub value: f64,
    /// Disagreement between extrapolations from different sample triples.
    pub residual: f64,
}

/// Extrapolates equally spaced samples with the model A + B·e^{−κR}.
///
/// Samples that are already stationary (increments at rounding level) are
/// accepted as is; growing increments mean the quantity has no limit.
pub fn extrapolate(name: &str, radii: &[f64], values: &[f64]) -> Result<LimitEstimate> {
    if radii.len() != values.len() || values.len() < 3 {
        return Err(Error::InsufficientData(format!("{name}: need at least three samples")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::LimitNotConverged(format!("{name}: non-finite sample")));
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 + 1e-10 * scale;
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let last = *values.last().unwrap();
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let done = |value: f64, residual: f64| LimitEstimate {
        name: name.to_string(),
        radii: radii.to_vec(),
        values: values.to_vec(),
        value,
        residual,
    };
    if dmax <= floor {
        return Ok(done(last, dmax));
    }
    let aitken = |i: usize| -> Option<f64> {
        let (d1, d2) = (d[i], d[i + 1]);
        let q = d2 / d1;
        (d1 != 0.0 && q > 0.0 && q < 1.0).then(|| values[i + 2] + d2 * q / (1.0 - q))
    };
    let m = d.len();
    match (aitken(m - 2), aitken(m - 3)) {
        (Some(a), prev) => {
            let residual = prev.map_or(d[m - 1].abs(), |p| (a - p).abs());
            Ok(done(a, residual))
        }
        (None, _) => {
            let dl = d[m - 1].abs();
            if dl <= 1e-8 * scale + 1e-12 && dl <= d[0].abs().max(floor) {
                Ok(done(last, dl))
            } else {
                Err(Error::LimitNotConverged(format!("{name}: increments {d:?} do not decay")))
            }
        }
    }
}
