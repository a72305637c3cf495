//! Independent curvature oracle: Ricci curvature of the warped metric from
//! coordinate Christoffel symbols in spherical coordinates.

use std::sync::Arc;

use nalgebra::{DVector, Dyn};
use num_dual::{hessian, Dual2Vec, DualNum};
use pe_lab::geometry::{curvature, RadialGrid, Scheme, WarpedMetric};

fn u_profile<D: DualNum<Primitive = f64>>(r: D) -> D {
    (-(r.clone() * r)).exp() * 0.1
}

fn v_profile<D: DualNum<Primitive = f64>>(r: D) -> D {
    let r2 = r.clone() * r;
    (-r2.clone() * 0.5).exp() * 0.05 - (-r2).exp() * 0.03
}

/// Diagonal metric component g_ii at x = (r, θ₁, …, θ_{n−1}).
fn component<D: DualNum<Primitive = f64>>(i: usize, x: &[D]) -> D {
    let r = x[0].clone();
    if i == 0 {
        return (u_profile(r) * 2.0).exp();
    }
    let mut g = (v_profile(r.clone()) * 2.0).exp() * r.sinh().powi(2);
    for theta in &x[1..i] {
        g *= theta.sin().powi(2);
    }
    g
}

/// Orthonormal diagonal Ricci components Ric(e_j, e_j) at `x`.
fn ricci_oracle(n: usize, x: &[f64]) -> Vec<f64> {
    let x0 = DVector::from_column_slice(x);
    let mut g = vec![0.0; n];
    let mut dg = vec![vec![0.0; n]; n];
    let mut ddg = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        let (val, grad, hess) = hessian(|y: DVector<Dual2Vec<f64, Dyn>>| component(i, y.as_slice()), &x0);
        g[i] = val;
        for k in 0..n {
            dg[i][k] = grad[k];
            for l in 0..n {
                ddg[i][k][l] = hess[(k, l)];
            }
        }
    }
    // ∂_k g_ij and ∂_l∂_k g_ij of the diagonal metric.
    let d = |i: usize, j: usize, k: usize| if i == j { dg[i][k] } else { 0.0 };
    let dd = |i: usize, j: usize, k: usize, l: usize| if i == j { ddg[i][k][l] } else { 0.0 };
    let gamma = |i: usize, j: usize, k: usize| 0.5 / g[i] * (d(i, k, j) + d(i, j, k) - d(j, k, i));
    let dgamma = |l: usize, i: usize, j: usize, k: usize| {
        -0.5 * dg[i][l] / (g[i] * g[i]) * (d(i, k, j) + d(i, j, k) - d(j, k, i))
            + 0.5 / g[i] * (dd(i, k, j, l) + dd(i, j, k, l) - dd(j, k, i, l))
    };
    (0..n)
        .map(|j| {
            let mut ric = 0.0;
            for i in 0..n {
                ric += dgamma(i, i, j, j) - dgamma(j, i, j, i);
                for p in 0..n {
                    ric += gamma(i, i, p) * gamma(p, j, j) - gamma(i, j, p) * gamma(p, j, i);
                }
            }
            ric / g[j]
        })
        .collect()
}

#[test]
fn ricci_matches_coordinate_christoffel_oracle() {
    for n in 3..=5 {
        let grid = Arc::new(RadialGrid::new(n, 800, 20.0, Scheme::Order4).unwrap());
        let u = grid.nodes().iter().map(|&r| u_profile(r)).collect();
        let v = grid.nodes().iter().map(|&r| v_profile(r)).collect();
        let g = WarpedMetric::new(grid.clone(), u, v).unwrap();
        let c = curvature(&g).unwrap();
        for r in [0.4, 1.1, 2.3, 4.0] {
            let k = grid.nearest_node(r);
            let mut x = vec![grid.nodes()[k]];
            x.extend((1..n).map(|i| 0.4 + 0.3 * i as f64));
            let ric = ricci_oracle(n, &x);
            assert!((ric[0] - c.ric_rr[k]).abs() < 1e-6, "n={n} r={r}: {} vs {}", ric[0], c.ric_rr[k]);
            for (j, value) in ric.iter().enumerate().skip(1) {
                assert!((value - c.ric_tt[k]).abs() < 1e-6, "n={n} r={r} j={j}: {value} vs {}", c.ric_tt[k]);
            }
            let scal: f64 = ric.iter().sum();
            assert!((scal - c.scal[k]).abs() < 1e-5, "n={n} r={r}: {scal} vs {}", c.scal[k]);
        }
    }
}
