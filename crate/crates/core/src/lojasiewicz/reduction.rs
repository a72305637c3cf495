use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::functional::AnalyticFunctional;
use crate::error::{Error, Result};

/// Kernel K of the Hessian L = ∇²F(0) and the orthogonal projector onto it.
#[derive(Debug, Clone, Serialize)]
pub struct KernelProjection {
    #[serde(skip)]
    pub basis: DMatrix<f64>,
    #[serde(skip)]
    pub projector: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    /// Condition number of D₀N = L + Π_K.
    pub condition_number: f64,
}

/// Relative threshold below which Hessian eigenvalues count as zero.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

pub fn kernel_projection(f: &AnalyticFunctional) -> Result<KernelProjection> {
    let l = f.hess(&DVector::zeros(f.dim));
    let eig = SymmetricEigen::new(l.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cols: Vec<usize> = (0..f.dim).filter(|&i| eig.eigenvalues[i].abs() <= KERNEL_THRESHOLD * scale).collect();
    let basis = DMatrix::from_fn(f.dim, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])]);
    let projector = &basis * basis.transpose();
    let sv = (&l + &projector).singular_values();
    let smin = sv.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let smax = sv.iter().fold(0.0f64, |m, x| m.max(*x));
    if !(smin > 0.0) {
        return Err(Error::SingularSystem { row: 0, pivot: smin });
    }
    Ok(KernelProjection {
        basis,
        projector,
        eigenvalues: eig.eigenvalues.iter().copied().collect(),
        kernel_dim: cols.len(),
        condition_number: smax / smin,
    })
}

/// N(x) = ∇F(x) + Π_K x.
pub fn n_map(f: &AnalyticFunctional, k: &KernelProjection, x: &DVector<f64>) -> DVector<f64> {
    f.grad(x) + &k.projector * x
}

/// Φ = N⁻¹ near the origin, by Newton with Jacobian ∇²F + Π_K.
pub fn invert_n(f: &AnalyticFunctional, k: &KernelProjection, y: &DVector<f64>) -> Result<DVector<f64>> {
    let tol = 1e-15 * y.norm().max(1e-300) + 1e-300;
    let jac = |x: &DVector<f64>| f.hess(x) + &k.projector;
    let solve = |m: DMatrix<f64>, rhs: DVector<f64>| {
        m.lu().solve(&rhs).ok_or(Error::SingularSystem { row: 0, pivot: 0.0 })
    };
    let mut x = solve(jac(&DVector::zeros(f.dim)), y.clone())?;
    let mut res = n_map(f, k, &x) - y;
    for it in 0..60 {
        if res.norm() <= tol.max(4.0 * f64::EPSILON * y.norm()) {
            return Ok(x);
        }
        let dx = solve(jac(&x), res.clone())?;
        x -= dx;
        let next = n_map(f, k, &x) - y;
        if !next.norm().is_finite() || (it > 30 && next.norm() >= res.norm()) {
            return Err(Error::NewtonDiverged { iterations: it + 1, residual: next.norm() });
        }
        res = next;
    }
    Err(Error::NewtonDiverged { iterations: 60, residual: res.norm() })
}

/// Reduced functional G(z) = F(Φ(z)) for z ∈ K.
pub fn reduced_value(f: &AnalyticFunctional, k: &KernelProjection, z: &DVector<f64>) -> Result<f64> {
    Ok(f.eval(&invert_n(f, k, z)?))
}

/// ∇G(z) = Π_K (∇²F(Φ) + Π_K)⁻¹ ∇F(Φ), as a vector of K ⊂ ℝ^dim.
pub fn reduced_gradient(f: &AnalyticFunctional, k: &KernelProjection, z: &DVector<f64>) -> Result<DVector<f64>> {
    let x = invert_n(f, k, z)?;
    let m = f.hess(&x) + &k.projector;
    let w = m.lu().solve(&f.grad(&x)).ok_or(Error::SingularSystem { row: 0, pivot: 0.0 })?;
    Ok(&k.projector * w)
}

/// Points drawn uniformly from the ball of radius `radius`.
pub fn sample_ball(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        if x.norm() <= 1.0 && x.norm() > 0.0 {
            out.push(x * radius);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaSample {
    pub sample: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Samples of an inequality lhs ≤ C·rhs and the smallest admissible C.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub statement: String,
    pub samples: Vec<LemmaSample>,
    pub worst_constant: f64,
    pub passed: bool,
}

fn lemma(name: &str, statement: &str, pairs: Vec<(f64, f64)>, max_constant: f64) -> LemmaCheck {
    let samples: Vec<LemmaSample> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (lhs, rhs))| {
            let ratio = if lhs == 0.0 { 0.0 } else if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
            LemmaSample { sample: i, lhs, rhs, ratio }
        })
        .collect();
    let worst = samples.iter().fold(0.0f64, |m, s| if s.ratio.is_nan() { f64::NAN } else { m.max(s.ratio) });
    LemmaCheck {
        name: name.into(),
        statement: statement.into(),
        samples,
        worst_constant: worst,
        passed: worst.is_finite() && worst <= max_constant,
    }
}

/// Sampled checks of the reduction inequalities at points `xs` near 0.
///
/// With y_t = Π_K x + t∇F(x) one has Φ(y_0) = Φ(Π_K x) and Φ(y_1) = x, so
/// F(x) − G(Π_K x) is controlled along the segment t ↦ Φ(y_t).
pub fn verify_lemmas(
    f: &AnalyticFunctional,
    k: &KernelProjection,
    xs: &[DVector<f64>],
    max_constant: f64,
) -> Result<Vec<LemmaCheck>> {
    let mut inverse = Vec::new();
    let mut lipschitz = Vec::new();
    let mut grad_g = Vec::new();
    let mut value = Vec::new();
    let mut segment = Vec::new();
    let ys: Vec<DVector<f64>> = xs.iter().map(|x| n_map(f, k, x)).collect();
    let phis: Vec<DVector<f64>> = ys.iter().map(|y| invert_n(f, k, y)).collect::<Result<_>>()?;
    for (i, x) in xs.iter().enumerate() {
        let gf = f.grad(x);
        let z = &k.projector * x;
        inverse.push(((&phis[i] - x).norm(), x.norm()));
        let j = (i + 1) % xs.len();
        lipschitz.push(((&phis[i] - &phis[j]).norm(), (&ys[i] - &ys[j]).norm()));
        grad_g.push((reduced_gradient(f, k, &z)?.norm(), gf.norm()));
        value.push(((f.eval(x) - reduced_value(f, k, &z)?).abs(), gf.norm_squared()));
        let mut sup = 0.0f64;
        for s in 0..=10 {
            let y = &z + &gf * (s as f64 / 10.0);
            sup = sup.max(f.grad(&invert_n(f, k, &y)?).norm());
        }
        segment.push((sup, gf.norm()));
    }
    Ok(vec![
        lemma("inverse", "|Φ(N(x)) − x| ≤ C|x|", inverse, 1e-10),
        lemma("lipschitz", "|Φ(y) − Φ(y')| ≤ C|y − y'|", lipschitz, max_constant),
        lemma("reduced_gradient", "|∇G(Π_K x)| ≤ C|∇F(x)|", grad_g, max_constant),
        lemma("reduced_value", "|F(x) − G(Π_K x)| ≤ C|∇F(x)|²", value, max_constant),
        lemma("segment", "sup_t |∇F(Φ(y_t))| ≤ C|∇F(x)|", segment, max_constant),
    ])
}

/// Relative residual of a degree-`degree` least-squares polynomial fit of G
/// along each kernel direction on [−radius, radius].
pub fn reduced_polynomial_residual(
    f: &AnalyticFunctional,
    k: &KernelProjection,
    radius: f64,
    degree: usize,
) -> Result<f64> {
    let m = 4 * (degree + 1) + 1;
    let mut worst = 0.0f64;
    for col in 0..k.kernel_dim {
        let e = k.basis.column(col).into_owned();
        let ts: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
        let g: Vec<f64> = ts.iter().map(|t| reduced_value(f, k, &(&e * (t * radius)))).collect::<Result<_>>()?;
        let a = DMatrix::from_fn(m, degree + 1, |i, j| ts[i].powi(j as i32));
        let b = DVector::from_vec(g);
        let coef = a.clone().svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Parse(e.into()))?;
        let scale = b.amax().max(f64::MIN_POSITIVE);
        worst = worst.max((a * coef - &b).amax() / scale);
    }
    Ok(worst)
}

/// Empirical exponent of |F(x) − F(0)|^{2−θ} ≤ C‖∇F(x)‖².
#[derive(Debug, Clone, Serialize)]
pub struct LsExponent {
    pub theta: f64,
    pub c: f64,
    /// Ratio of the worst constant on the innermost shell to the outermost,
    /// at the selected θ.
    pub shell_growth: f64,
}

/// Grid step of the exponent search.
pub const THETA_STEP: f64 = 0.01;
/// Allowed growth of the worst constant from the outer to the inner shell.
pub const SHELL_TOLERANCE: f64 = 0.02;

/// Largest θ on a 0.01 grid for which the constant stays bounded towards 0.
///
/// Any finite sample gives a finite constant, so boundedness is tested by
/// scaling a fixed set of directions onto shells of radius radius·2^{−j}:
/// θ is accepted when the worst constant on the innermost shell exceeds the
/// one on the outermost by at most the relative `SHELL_TOLERANCE`.
pub fn ls_exponent(f: &AnalyticFunctional, directions: &[DVector<f64>], radius: f64, shells: usize) -> Result<LsExponent> {
    if directions.is_empty() || shells < 2 {
        return Err(Error::InsufficientData("need directions and at least two shells".into()));
    }
    let f0 = f.eval(&DVector::zeros(f.dim));
    // (|F − F(0)|, ‖∇F‖²) per shell.
    let data: Vec<Vec<(f64, f64)>> = (0..shells)
        .map(|j| {
            let r = radius * 0.5f64.powi(j as i32);
            directions
                .iter()
                .map(|d| {
                    let x = d * (r / d.norm());
                    ((f.eval(&x) - f0).abs(), f.grad(&x).norm_squared())
                })
                .collect()
        })
        .collect();
    let worst = |shell: &[(f64, f64)], theta: f64| {
        shell.iter().fold(0.0f64, |m, &(v, g)| {
            if v == 0.0 {
                m
            } else if g > 0.0 {
                m.max(v.powf(2.0 - theta) / g)
            } else {
                f64::INFINITY
            }
        })
    };
    let steps = (1.0 / THETA_STEP).round() as usize;
    for s in (1..=steps).rev() {
        let theta = s as f64 * THETA_STEP;
        let outer = worst(&data[0], theta);
        let inner = worst(&data[shells - 1], theta);
        let c = data.iter().map(|sh| worst(sh, theta)).fold(0.0, f64::max);
        if c.is_finite() && inner <= (1.0 + SHELL_TOLERANCE) * outer {
            let shell_growth = if outer > 0.0 { inner / outer } else { 0.0 };
            return Ok(LsExponent { theta, c, shell_growth });
        }
    }
    Err(Error::InsufficientData("no admissible exponent on the grid".into()))
}

/// Unit directions for the exponent search: random ones together with ±
/// each kernel basis vector, along which degenerate behaviour concentrates.
pub fn exponent_directions(k: &KernelProjection, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let dim = k.basis.nrows();
    let mut dirs: Vec<DVector<f64>> = sample_ball(dim, count, 1.0, seed).into_iter().map(|x| x.normalize()).collect();
    for col in 0..k.kernel_dim {
        let e = k.basis.column(col).into_owned();
        dirs.push(e.clone());
        dirs.push(-e);
    }
    dirs
}


#[cfg(test)]
mod exponent_tests {
    use super::*;
    use crate::lojasiewicz::FunctionalKind;

    #[test]
    fn exponents_and_lemmas_on_the_table() {
        for kind in FunctionalKind::ALL {
            let f = AnalyticFunctional::new(kind, 2).unwrap();
            let k = kernel_projection(&f).unwrap();
            let dirs = exponent_directions(&k, 64, 11);
            let ls = ls_exponent(&f, &dirs, 0.1, 11).unwrap();
            assert!((ls.theta - f.closed_form_theta()).abs() <= 0.02, "{kind:?}: {ls:?}");
            let xs = sample_ball(2, 100, f.reduction_radius(), 5);
            for check in verify_lemmas(&f, &k, &xs, 1e3).unwrap() {
                assert!(check.passed, "{kind:?} {}", check.name);
            }
            let res = reduced_polynomial_residual(&f, &k, 0.2 * f.reduction_radius(), 8).unwrap();
            assert!(res < 1e-8, "{kind:?}: {res:e}");
        }
    }
}
