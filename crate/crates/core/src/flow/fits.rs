use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line y = slope·x + intercept with its RMS residual.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / m).sqrt();
    (slope, intercept, rms)
}

/// Empirical Łojasiewicz exponent from samples of |μ| and ‖∇μ‖².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LojasiewiczFit {
    /// Exponent in (0, 1]; the raw fit is clamped at 1.
    pub theta: f64,
    pub theta_raw: f64,
    /// Slope of log|μ| against log‖∇μ‖².
    pub slope: f64,
    /// Smallest C with |μ|^{2−θ} ≤ C‖∇μ‖² on the samples.
    pub c: f64,
    pub residual: f64,
    pub samples: usize,
}

pub const MIN_LOJASIEWICZ_SAMPLES: usize = 10;

/// Fits |μ|^{2−θ} = C‖∇μ‖² on samples with |μ| above `floor`.
pub fn fit_lojasiewicz(mu: &[f64], grad_sq: &[f64], floor: f64) -> Result<LojasiewiczFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = mu
        .iter()
        .zip(grad_sq)
        .filter(|(m, g)| m.abs() > floor && **g > 0.0 && m.is_finite() && g.is_finite())
        .map(|(m, g)| (g.ln(), m.abs().ln()))
        .unzip();
    if x.len() < MIN_LOJASIEWICZ_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} usable samples, need {MIN_LOJASIEWICZ_SAMPLES}",
            x.len()
        )));
    }
    let (slope, _, residual) = linear_fit(&x, &y);
    if !(slope > 0.0) {
        return Err(Error::InsufficientData(format!("non-positive slope {slope}")));
    }
    let theta_raw = 2.0 - 1.0 / slope;
    let theta = theta_raw.min(1.0);
    let c = x.iter().zip(&y).map(|(lg, lm)| ((2.0 - theta) * lm - lg).exp()).fold(0.0, f64::max);
    Ok(LojasiewiczFit { theta, theta_raw, slope, c, residual, samples: x.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateBranch {
    /// d ≈ A e^{−λt}.
    Exponential { lambda: f64 },
    /// d ≈ A (t+1)^{−β}.
    Polynomial { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub branch: RateBranch,
    pub residual: f64,
    /// Residual of the rejected branch.
    pub other_residual: f64,
}

/// Chooses between exponential and polynomial decay of `dist(t)` by the
/// smaller RMS residual of the log-linear fits.
pub fn fit_rate(times: &[f64], dist: &[f64]) -> Result<RateFit> {
    let (t, ld): (Vec<f64>, Vec<f64>) =
        times.iter().zip(dist).filter(|(_, d)| **d > 0.0 && d.is_finite()).map(|(t, d)| (*t, d.ln())).unzip();
    if t.len() < 4 {
        return Err(Error::InsufficientData(format!("{} positive distances, need 4", t.len())));
    }
    let lt: Vec<f64> = t.iter().map(|t| (t + 1.0).ln()).collect();
    let (se, _, re) = linear_fit(&t, &ld);
    let (sp, _, rp) = linear_fit(&lt, &ld);
    Ok(if re <= rp {
        RateFit { branch: RateBranch::Exponential { lambda: -se }, residual: re, other_residual: rp }
    } else {
        RateFit { branch: RateBranch::Polynomial { beta: -sp }, residual: rp, other_residual: re }
    })
}

/// Lower bound F(s) ≥ [F(t)^{θ−1} − C₁(s−t)]^{−1/(1−θ)} for a positive
/// quantity with Ḟ ≥ F^{2−θ}/C and C₁ = (1−θ)/C; valid while the bracket
/// stays positive.
pub fn growth_lower_bound(f_t: f64, elapsed: f64, theta: f64, c: f64) -> Option<f64> {
    let c1 = (1.0 - theta) / c;
    let bracket = f_t.powf(theta - 1.0) - c1 * elapsed;
    (bracket > 0.0).then(|| bracket.powf(-1.0 / (1.0 - theta)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub theta: f64,
    pub c: f64,
    /// Pairs of consecutive samples for which the bound was defined.
    pub checked: usize,
    /// Smallest ratio F(s)/bound over checked pairs.
    pub min_ratio: f64,
}

/// Checks the growth bound between consecutive samples of a positive
/// increasing quantity.
pub fn check_growth_bound(times: &[f64], values: &[f64], theta: f64, c: f64, rel_tol: f64) -> Result<GrowthCheck> {
    if !(theta > 0.0 && theta < 1.0 && c > 0.0) {
        return Err(Error::PreconditionFailed(format!("need θ in (0,1) and C > 0, got θ={theta}, C={c}")));
    }
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let mut checked = 0;
    let mut min_ratio = f64::INFINITY;
    for i in 1..times.len() {
        if !(values[i - 1] > 0.0) {
            return Err(Error::PreconditionFailed(format!("value {} at sample {} is not positive", values[i - 1], i - 1)));
        }
        if let Some(bound) = growth_lower_bound(values[i - 1], times[i] - times[i - 1], theta, c) {
            checked += 1;
            min_ratio = min_ratio.min(values[i] / bound);
            if values[i] < bound * (1.0 - rel_tol) {
                return Err(Error::GrowthBoundViolated { index: i, value: values[i], bound });
            }
        }
    }
    Ok(GrowthCheck { theta, c, checked, min_ratio })
}
