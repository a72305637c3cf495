use num_dual::DualNum;

use super::curvature::{curvature, Jet};
use super::fields::{same_grid, RadialScalarField, RadialSymmetric2Tensor, WarpedMetric};
use super::grid::{coth, ln_sinh, Parity, RadialGrid, Row, Scheme};
use crate::error::Result;
use crate::linalg::BandMatrix;

/// Range (0-based, inclusive) of rows discretised in flux form.
fn flux_rows(grid: &RadialGrid) -> (usize, usize) {
    let n = grid.len();
    match grid.scheme() {
        Scheme::Order4 => (4, n - 4),
        Scheme::Order2 => (2, n - 2),
    }
}

/// Sparse rows of the positive scalar Laplacian Δ = ∇*∇ of `g`.
///
/// Interior rows use the conservative form −W⁻¹∂(P∂f) with staggered
/// differences, W = e^{u}ψ^{n−1}, P = e^{−u}ψ^{n−1}; the rows near the origin
/// and the outer boundary use the expanded form.
pub fn laplacian_rows(g: &WarpedMetric) -> Vec<Row> {
    let grid = &g.grid;
    let n1 = (grid.dim() - 1) as f64;
    let h = grid.spacing();
    let len = grid.len();
    let nodes = grid.nodes();
    let u1 = grid.d1(&g.u, Parity::Even);
    let v1 = grid.d1(&g.v, Parity::Even);
    let d1 = grid.d1_rows(Parity::Even);
    let d2 = grid.d2_rows(Parity::Even);
    let (lo, hi) = flux_rows(grid);
    let ln_w = |k: usize| g.u[k] + n1 * g.v[k] + n1 * ln_sinh(nodes[k]);
    // ln P at the half node between 1-based positions m and m+1.
    let ln_p_half = |m: usize| -> f64 {
        let r = (m as f64 + 0.5) * h;
        let (uh, vh) = match grid.scheme() {
            Scheme::Order4 => {
                let ip = |f: &[f64]| (-f[m - 2] + 9.0 * f[m - 1] + 9.0 * f[m] - f[m + 1]) / 16.0;
                (ip(&g.u), ip(&g.v))
            }
            Scheme::Order2 => (0.5 * (g.u[m - 1] + g.u[m]), 0.5 * (g.v[m - 1] + g.v[m])),
        };
        -uh + n1 * vh + n1 * ln_sinh(r)
    };
    let (tw, sw): (&[f64], &[f64]) = match grid.scheme() {
        Scheme::Order4 => (&[1.0, -27.0, 27.0, -1.0], &[1.0, -27.0, 27.0, -1.0]),
        Scheme::Order2 => (&[-1.0, 1.0], &[-1.0, 1.0]),
    };
    let denom = match grid.scheme() {
        Scheme::Order4 => 24.0 * h,
        Scheme::Order2 => h,
    };
    let mut rows = Vec::with_capacity(len);
    for k in 0..len {
        let mut row = Row::new();
        if k >= lo && k <= hi {
            let i = k + 1; // 1-based
            let lw = ln_w(k);
            // half nodes m+1/2: order 4 uses m = i−2..i+1, order 2 uses m = i−1, i
            let m0 = i + 1 - tw.len() / 2 - 1;
            for (t, &tc) in tw.iter().enumerate() {
                let m = m0 + t;
                let ratio = (ln_p_half(m) - lw).exp();
                let s0 = m + 1 - sw.len() / 2; // first 1-based node of the S stencil
                for (q, &sc) in sw.iter().enumerate() {
                    let node = s0 + q;
                    row.push((node - 1, -ratio * tc * sc / (denom * denom)));
                }
            }
        } else {
            let r = nodes[k];
            let e = (-2.0 * g.u[k]).exp();
            let drift = n1 * (v1[k] + coth(r)) - u1[k];
            for &(c, w) in &d2[k] {
                row.push((c, -e * w));
            }
            for &(c, w) in &d1[k] {
                row.push((c, -e * drift * w));
            }
        }
        rows.push(super::grid::compact(row));
    }
    rows
}

pub fn rows_to_band(rows: &[Row]) -> BandMatrix {
    let (mut kl, mut ku) = (0usize, 0usize);
    for (i, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            if j < i {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
    }
    let mut m = BandMatrix::zeros(rows.len(), kl, ku);
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            m.add(i, j, w);
        }
    }
    m
}

pub fn scalar_laplacian(g: &WarpedMetric, f: &RadialScalarField) -> Result<RadialScalarField> {
    same_grid(&g.grid, &f.grid)?;
    let rows = laplacian_rows(g);
    Ok(RadialScalarField { grid: g.grid.clone(), values: super::grid::apply_rows(&rows, &f.values) })
}

/// κ = e^{−u}(v' + coth r), the mean curvature of geodesic spheres per direction.
pub fn sphere_curvature(g: &WarpedMetric) -> Vec<f64> {
    let v1 = g.grid.d1(&g.v, Parity::Even);
    g.grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &r)| (-g.u[k]).exp() * (v1[k] + coth(r)))
        .collect()
}

/// Rough Laplacian of a radial tensor whose components are in the frame of `g`.
pub fn tensor_laplacian(g: &WarpedMetric, h: &RadialSymmetric2Tensor) -> Result<RadialSymmetric2Tensor> {
    same_grid(&g.grid, &h.grid)?;
    let rows = laplacian_rows(g);
    let n1 = (g.dim() - 1) as f64;
    let kappa = sphere_curvature(g);
    let la = super::grid::apply_rows(&rows, &h.a);
    let lb = super::grid::apply_rows(&rows, &h.b);
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    for k in 0..la.len() {
        let k2 = kappa[k] * kappa[k] * (h.a[k] - h.b[k]);
        out.a[k] = la[k] + 2.0 * n1 * k2;
        out.b[k] = lb[k] - 2.0 * k2;
    }
    Ok(out)
}

/// Band matrix of the tensor Laplacian on interleaved unknowns (a_k ↦ 2k, b_k ↦ 2k+1).
pub fn tensor_laplacian_band(g: &WarpedMetric) -> BandMatrix {
    let rows = laplacian_rows(g);
    let n1 = (g.dim() - 1) as f64;
    let kappa = sphere_curvature(g);
    let mut out = Vec::with_capacity(2 * rows.len());
    for (k, row) in rows.iter().enumerate() {
        let k2 = kappa[k] * kappa[k];
        let mut ra: Row = row.iter().map(|&(c, w)| (2 * c, w)).collect();
        ra.push((2 * k, 2.0 * n1 * k2));
        ra.push((2 * k + 1, -2.0 * n1 * k2));
        let mut rb: Row = row.iter().map(|&(c, w)| (2 * c + 1, w)).collect();
        rb.push((2 * k, -2.0 * k2));
        rb.push((2 * k + 1, 2.0 * k2));
        out.push(super::grid::compact(ra));
        out.push(super::grid::compact(rb));
    }
    rows_to_band(&out)
}

/// R̊h with (R̊h)_ij = R_iklj h^kl, normalised so that R̊g = Ric.
pub fn curvature_action(g: &WarpedMetric, h: &RadialSymmetric2Tensor) -> Result<RadialSymmetric2Tensor> {
    same_grid(&g.grid, &h.grid)?;
    let c = curvature(g)?;
    let n1 = (g.dim() - 1) as f64;
    let n2 = (g.dim() - 2) as f64;
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    for k in 0..h.a.len() {
        out.a[k] = n1 * c.k_rad[k] * h.b[k];
        out.b[k] = c.k_rad[k] * h.a[k] + n2 * c.k_tan[k] * h.b[k];
    }
    Ok(out)
}

/// Δ_E = Δ − 2R̊.
pub fn einstein_operator(g: &WarpedMetric, h: &RadialSymmetric2Tensor) -> Result<RadialSymmetric2Tensor> {
    let lap = tensor_laplacian(g, h)?;
    let rc = curvature_action(g, h)?;
    lap.axpy(-2.0, &rc)
}

/// Band matrix of Δ_E on interleaved unknowns.
pub fn einstein_operator_band(g: &WarpedMetric) -> Result<BandMatrix> {
    let mut m = tensor_laplacian_band(g);
    let c = curvature(g)?;
    let n1 = (g.dim() - 1) as f64;
    let n2 = (g.dim() - 2) as f64;
    for k in 0..g.grid.len() {
        m.add(2 * k, 2 * k + 1, -2.0 * n1 * c.k_rad[k]);
        m.add(2 * k + 1, 2 * k, -2.0 * c.k_rad[k]);
        m.add(2 * k + 1, 2 * k + 1, -2.0 * n2 * c.k_tan[k]);
    }
    Ok(m)
}

/// Lichnerowicz Laplacian Δ_L h = Δh + Ric∘h + h∘Ric − 2R̊h.
pub fn lichnerowicz_laplacian(g: &WarpedMetric, h: &RadialSymmetric2Tensor) -> Result<RadialSymmetric2Tensor> {
    let lap = tensor_laplacian(g, h)?;
    let c = curvature(g)?;
    let n1 = (g.dim() - 1) as f64;
    let n2 = (g.dim() - 2) as f64;
    let mut out = lap;
    for k in 0..h.a.len() {
        out.a[k] += 2.0 * c.ric_rr[k] * h.a[k] - 2.0 * n1 * c.k_rad[k] * h.b[k];
        out.b[k] += 2.0 * c.ric_tt[k] * h.b[k] - 2.0 * (c.k_rad[k] * h.a[k] + n2 * c.k_tan[k] * h.b[k]);
    }
    Ok(out)
}

/// Frame components of the Hessian ∇²f of a radial function.
pub fn hessian(g: &WarpedMetric, f: &RadialScalarField) -> Result<RadialSymmetric2Tensor> {
    same_grid(&g.grid, &f.grid)?;
    let grid = &g.grid;
    let f1 = grid.d1(&f.values, Parity::Even);
    let f2 = grid.d2(&f.values, Parity::Even);
    let u1 = grid.d1(&g.u, Parity::Even);
    let v1 = grid.d1(&g.v, Parity::Even);
    let mut out = RadialSymmetric2Tensor::zeros(grid.clone());
    for (k, &r) in grid.nodes().iter().enumerate() {
        let e = (-2.0 * g.u[k]).exp();
        out.a[k] = e * (f2[k] - u1[k] * f1[k]);
        out.b[k] = e * (v1[k] + coth(r)) * f1[k];
    }
    Ok(out)
}

/// |∇f|²_g.
pub fn gradient_norm_sq(g: &WarpedMetric, f: &RadialScalarField) -> Vec<f64> {
    let f1 = g.grid.d1(&f.values, Parity::Even);
    f1.iter().zip(&g.u).map(|(d, u)| (-2.0 * u).exp() * d * d).collect()
}

/// Frame e_r-component of div h − d tr h for h in the frame of `g`.
pub fn bianchi_flux(g: &WarpedMetric, h: &RadialSymmetric2Tensor) -> Result<Vec<f64>> {
    same_grid(&g.grid, &h.grid)?;
    let n1 = (g.dim() - 1) as f64;
    let kappa = sphere_curvature(g);
    let b1 = g.grid.d1(&h.b, Parity::Even);
    Ok((0..h.a.len())
        .map(|k| n1 * kappa[k] * (h.a[k] - h.b[k]) - n1 * (-g.u[k]).exp() * b1[k])
        .collect())
}

/// Frame e_r-component of div h.
pub fn divergence(g: &WarpedMetric, h: &RadialSymmetric2Tensor) -> Result<Vec<f64>> {
    same_grid(&g.grid, &h.grid)?;
    let n1 = (g.dim() - 1) as f64;
    let kappa = sphere_curvature(g);
    let a1 = g.grid.d1(&h.a, Parity::Even);
    Ok((0..h.a.len()).map(|k| (-g.u[k]).exp() * a1[k] + n1 * kappa[k] * (h.a[k] - h.b[k])).collect())
}

/// Divergence of the radial vector field with frame component `x` (odd parity).
pub fn vector_divergence(g: &WarpedMetric, x: &[f64]) -> Vec<f64> {
    let n1 = (g.dim() - 1) as f64;
    let kappa = sphere_curvature(g);
    let x1 = g.grid.d1(x, Parity::Odd);
    (0..x.len()).map(|k| (-g.u[k]).exp() * x1[k] + n1 * kappa[k] * x[k]).collect()
}

/// Coordinate radial component w of W = g^{pq}(Γ_pq − Γ̂_pq) and its r-derivative.
pub fn deturck_point<D: DualNum<Primitive = f64> + Copy>(n: usize, r: f64, j: &Jet<D>) -> (D, D) {
    let n1 = (n - 1) as f64;
    let [u, u1, u2, v, v1, v2] = *j;
    let cth = coth(r);
    let csch2 = 1.0 / (r.sinh() * r.sinh());
    let em2u = (u * (-2.0)).exp();
    let em2v = (v * (-2.0)).exp();
    let diff = em2u * ((u - v) * 2.0).exp_m1(); // e^{-2v} − e^{-2u}
    let w = em2u * u1 - em2u * v1 * n1 + diff * (n1 * cth);
    let dw = em2u * (u2 - u1 * u1 * 2.0) - em2u * (v2 - u1 * v1 * 2.0) * n1
        + (diff * (-csch2) + (em2u * u1 * 2.0 - em2v * v1 * 2.0) * cth) * n1;
    (w, dw)
}

/// Frame components of L_W g for W = w∂_r.
pub fn lie_derivative_point<D: DualNum<Primitive = f64> + Copy>(r: f64, j: &Jet<D>, w: D, dw: D) -> (D, D) {
    let u1 = j[1];
    let v1 = j[4];
    ((u1 * w + dw) * 2.0, w * (v1 + coth(r)) * 2.0)
}

/// DeTurck vector of `g` relative to the hyperbolic reference `gref`.
pub fn deturck_vector(g: &WarpedMetric, gref: &WarpedMetric) -> Result<RadialScalarField> {
    same_grid(&g.grid, &gref.grid)?;
    if gref.u.iter().chain(&gref.v).any(|x| *x != 0.0) {
        return Err(crate::error::Error::PreconditionFailed(
            "the reference metric must be the hyperbolic metric".into(),
        ));
    }
    let jets = super::curvature::metric_jets(g);
    let values = jets
        .iter()
        .zip(g.grid.nodes())
        .map(|(j, &r)| deturck_point(g.dim(), r, j).0)
        .collect();
    Ok(RadialScalarField { grid: g.grid.clone(), values })
}

/// Frame components of L_W g for the DeTurck vector of `g`.
pub fn deturck_lie_derivative(g: &WarpedMetric) -> RadialSymmetric2Tensor {
    let jets = super::curvature::metric_jets(g);
    let mut out = RadialSymmetric2Tensor::zeros(g.grid.clone());
    for (k, (j, &r)) in jets.iter().zip(g.grid.nodes()).enumerate() {
        let (w, dw) = deturck_point(g.dim(), r, j);
        let (a, b) = lie_derivative_point(r, j, w, dw);
        out.a[k] = a;
        out.b[k] = b;
    }
    out
}

/// L² pairing ∫⟨h1, h2⟩ dV_g over the whole grid.
pub fn tensor_inner(g: &WarpedMetric, h1: &RadialSymmetric2Tensor, h2: &RadialSymmetric2Tensor) -> Result<f64> {
    same_grid(&g.grid, &h1.grid)?;
    same_grid(&g.grid, &h2.grid)?;
    let n1 = (g.dim() - 1) as f64;
    let f: Vec<f64> = (0..h1.a.len()).map(|k| h1.a[k] * h2.a[k] + n1 * h1.b[k] * h2.b[k]).collect();
    Ok(super::quadrature::integrate_all(g, &f))
}

/// L² pairing ∫ f1 f2 dV_g.
pub fn scalar_inner(g: &WarpedMetric, f1: &[f64], f2: &[f64]) -> f64 {
    let f: Vec<f64> = f1.iter().zip(f2).map(|(a, b)| a * b).collect();
    super::quadrature::integrate_all(g, &f)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::grid::Scheme;

    fn bump(r: f64, c: f64, w: f64) -> f64 {
        let x = (r - c) / w;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - x * x).powi(4)
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let grid = Arc::new(RadialGrid::new(4, 200, 10.0, Scheme::Order4).unwrap());
        let g = WarpedMetric::hyperbolic(grid.clone());
        let f = RadialScalarField::from_fn(grid, |_| 1.0);
        let l = scalar_laplacian(&g, &f).unwrap();
        assert!(l.sup_norm() < 1e-9, "{}", l.sup_norm());
    }

    #[test]
    fn laplacian_indicial_identity() {
        let n = 4;
        let s = (n - 1) as f64;
        let grid = Arc::new(RadialGrid::new(n, 800, 20.0, Scheme::Order4).unwrap());
        let g = WarpedMetric::hyperbolic(grid.clone());
        let f = RadialScalarField::from_fn(grid.clone(), |r| (-s * r).exp());
        let l = scalar_laplacian(&g, &f).unwrap();
        for (k, &r) in grid.nodes().iter().enumerate().skip(10).take(700) {
            // exact: s(n−1−s)e^{−sr} + (n−1)s(coth r − 1)e^{−sr}
            let exact = (n - 1) as f64 * s * (coth(r) - 1.0) * f.values[k];
            assert!((l.values[k] - exact).abs() < 1e-3 * f.values[k], "{r}");
        }
    }

    #[test]
    fn laplacian_is_symmetric_on_compact_fields() {
        let grid = Arc::new(RadialGrid::new(3, 400, 12.0, Scheme::Order4).unwrap());
        let u: Vec<f64> = grid.nodes().iter().map(|&r| 0.05 * bump(r, 3.0, 2.0)).collect();
        let v: Vec<f64> = grid.nodes().iter().map(|&r| -0.03 * bump(r, 4.0, 2.5)).collect();
        let g = WarpedMetric::new(grid.clone(), u, v).unwrap();
        let f1 = RadialScalarField::from_fn(grid.clone(), |r| bump(r, 4.0, 2.0));
        let f2 = RadialScalarField::from_fn(grid.clone(), |r| bump(r, 5.0, 2.0) * r);
        let l1 = scalar_laplacian(&g, &f1).unwrap();
        let l2 = scalar_laplacian(&g, &f2).unwrap();
        let a = scalar_inner(&g, &l1.values, &f2.values);
        let b = scalar_inner(&g, &f1.values, &l2.values);
        assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} {b}");
    }

    #[test]
    fn curvature_action_normalisation() {
        let grid = Arc::new(RadialGrid::new(5, 200, 8.0, Scheme::Order4).unwrap());
        let u: Vec<f64> = grid.nodes().iter().map(|&r| 0.1 * bump(r, 2.0, 1.5)).collect();
        let v: Vec<f64> = grid.nodes().iter().map(|&r| 0.2 * bump(r, 2.5, 1.5)).collect();
        let g = WarpedMetric::new(grid.clone(), u, v).unwrap();
        let id = RadialSymmetric2Tensor { grid: grid.clone(), a: vec![1.0; 200], b: vec![1.0; 200] };
        let rg = curvature_action(&g, &id).unwrap();
        let c = curvature(&g).unwrap();
        for k in 0..200 {
            assert!((rg.a[k] - c.ric_rr[k]).abs() < 1e-12);
            assert!((rg.b[k] - c.ric_tt[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn einstein_band_matches_operator() {
        let grid = Arc::new(RadialGrid::new(3, 100, 8.0, Scheme::Order4).unwrap());
        let u: Vec<f64> = grid.nodes().iter().map(|&r| 0.1 * bump(r, 2.0, 1.5)).collect();
        let g = WarpedMetric::new(grid.clone(), u.clone(), u).unwrap();
        let h = RadialSymmetric2Tensor {
            grid: grid.clone(),
            a: grid.nodes().iter().map(|&r| bump(r, 3.0, 2.0)).collect(),
            b: grid.nodes().iter().map(|&r| -0.5 * bump(r, 3.5, 2.0)).collect(),
        };
        let e = einstein_operator(&g, &h).unwrap();
        let m = einstein_operator_band(&g).unwrap();
        let x: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { h.a[i / 2] } else { h.b[i / 2] }).collect();
        let y = m.matvec(&x);
        for k in 0..100 {
            assert!((y[2 * k] - e.a[k]).abs() < 1e-9 * (1.0 + e.a[k].abs()));
            assert!((y[2 * k + 1] - e.b[k]).abs() < 1e-9 * (1.0 + e.b[k].abs()));
        }
    }
}
