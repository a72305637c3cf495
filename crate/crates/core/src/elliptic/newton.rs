use serde::Serialize;

use super::shifted::SolveOptions;
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

/// Convergence history of a Newton solve.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Sup-norm residual before each iteration and after the last one.
    pub residuals: Vec<f64>,
}

fn sup(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Damped Newton iteration with backtracking on the sup-norm residual.
///
/// `admissible` may veto trial iterates (e.g. a conformal factor crossing
/// zero); the error it returns is surfaced if no admissible step is found.
pub fn damped_newton(
    x0: Vec<f64>,
    residual: impl Fn(&[f64]) -> Result<Vec<f64>>,
    jacobian: impl Fn(&[f64]) -> Result<BandMatrix>,
    admissible: impl Fn(&[f64]) -> Result<()>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, NewtonReport)> {
    opts.validate()?;
    admissible(&x0)?;
    let mut x = x0;
    let mut f = residual(&x)?;
    let mut norm = sup(&f);
    let mut residuals = vec![norm];
    for it in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok((x, NewtonReport { iterations: it, residuals }));
        }
        if !norm.is_finite() {
            return Err(Error::NewtonDiverged { iterations: it, residual: norm });
        }
        let j = jacobian(&x)?;
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = j.solve(&rhs)?;
        let mut alpha = 1.0;
        let mut veto = None;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            match admissible(&trial) {
                Ok(()) => {
                    let ft = residual(&trial)?;
                    let nt = sup(&ft);
                    if nt.is_finite() && nt < (1.0 - 1e-4 * alpha) * norm {
                        x = trial;
                        f = ft;
                        norm = nt;
                        break;
                    }
                }
                Err(e) => veto = Some(e),
            }
            alpha *= opts.damping;
            if alpha < 1e-8 {
                if let Some(e) = veto {
                    return Err(e);
                }
                return Err(Error::NewtonDiverged { iterations: it + 1, residual: norm });
            }
        }
        residuals.push(norm);
    }
    if norm <= opts.tol {
        return Ok((x, NewtonReport { iterations: opts.max_iter, residuals }));
    }
    Err(Error::NewtonDiverged { iterations: opts.max_iter, residual: norm })
}
