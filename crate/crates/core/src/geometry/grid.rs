use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::fd_weights;

/// Interior finite-difference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scheme {
    Order2,
    Order4,
}

impl Scheme {
    pub fn order(self) -> usize {
        match self {
            Scheme::Order2 => 2,
            Scheme::Order4 => 4,
        }
    }
}

impl TryFrom<u8> for Scheme {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(Scheme::Order2),
            4 => Ok(Scheme::Order4),
            _ => Err(format!("scheme must be 2 or 4, got {v}")),
        }
    }
}

impl From<Scheme> for u8 {
    fn from(s: Scheme) -> u8 {
        s.order() as u8
    }
}

/// Behaviour of a field under the reflection r ↦ −r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Profiles, scalar fields and frame components of tensors.
    Even,
    /// Radial components of vector fields.
    Odd,
}

/// Sparse row of a finite-difference operator: `(column, weight)` pairs.
pub type Row = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
struct Stencils {
    d1_even: Vec<Row>,
    d2_even: Vec<Row>,
    d1_odd: Vec<Row>,
    d2_odd: Vec<Row>,
}

/// Uniform radial grid r_i = i·R_max/N, i = 1..N.
///
/// Node 0 of every per-node array sits at r = h; the origin itself is not a
/// node and is handled by parity-folded stencils.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    n: usize,
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
    scheme: Scheme,
    stencils: Stencils,
    weights: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.nodes.len() == other.nodes.len()
            && self.r_max == other.r_max
            && self.scheme == other.scheme
    }
}

impl RadialGrid {
    pub fn new(n: usize, num_nodes: usize, r_max: f64, scheme: Scheme) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("dimension must be at least 3, got {n}")));
        }
        if num_nodes < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 nodes, got {num_nodes}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("R_max must be positive, got {r_max}")));
        }
        let h = r_max / num_nodes as f64;
        let mut nodes: Vec<f64> = (1..=num_nodes).map(|i| i as f64 * h).collect();
        nodes[num_nodes - 1] = r_max;
        let mut grid = Self {
            n,
            r_max,
            h,
            nodes,
            scheme,
            stencils: Stencils { d1_even: vec![], d2_even: vec![], d1_odd: vec![], d2_odd: vec![] },
            weights: vec![],
        };
        grid.stencils = Stencils {
            d1_even: grid.build_rows(1, Parity::Even),
            d2_even: grid.build_rows(2, Parity::Even),
            d1_odd: grid.build_rows(1, Parity::Odd),
            d2_odd: grid.build_rows(2, Parity::Odd),
        };
        grid.weights = grid.build_weights();
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Index of the node closest to `r`.
    pub fn nearest_node(&self, r: f64) -> usize {
        let k = (r / self.h).round() as isize - 1;
        k.clamp(0, self.len() as isize - 1) as usize
    }

    /// Maps a 1-based stencil position `m` (r = m·h, possibly ≤ 0) to
    /// weighted columns using the parity of the field.
    fn fold(&self, m: isize, w: f64, parity: Parity, out: &mut Row) {
        if m >= 1 {
            out.push((m as usize - 1, w));
        } else if m == 0 {
            if parity == Parity::Even {
                // Even extrapolation to r = 0, exact for 1, r², r⁴.
                out.push((0, 1.5 * w));
                out.push((1, -0.6 * w));
                out.push((2, 0.1 * w));
            }
        } else {
            let s = if parity == Parity::Even { 1.0 } else { -1.0 };
            out.push(((-m) as usize - 1, s * w));
        }
    }

    fn build_rows(&self, deriv: usize, parity: Parity) -> Vec<Row> {
        let n_nodes = self.len();
        let h = self.h;
        let half = self.scheme.order() / 2;
        let central: Vec<f64> = match (self.scheme, deriv) {
            (Scheme::Order2, 1) => vec![-0.5 / h, 0.0, 0.5 / h],
            (Scheme::Order2, _) => vec![1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)],
            (Scheme::Order4, 1) => [1.0, -8.0, 0.0, 8.0, -1.0].iter().map(|c| c / (12.0 * h)).collect(),
            (Scheme::Order4, _) => {
                [-1.0, 16.0, -30.0, 16.0, -1.0].iter().map(|c| c / (12.0 * h * h)).collect()
            }
        };
        // One-sided closure at the outer boundary.
        let closure_pts = self.scheme.order() + 2;
        let first_closure = n_nodes + 1 - half; // 1-based
        let mut rows = Vec::with_capacity(n_nodes);
        for i in 1..=n_nodes {
            let mut row = Row::new();
            if i < first_closure {
                for (j, &c) in central.iter().enumerate() {
                    let m = i as isize + j as isize - half as isize;
                    if c != 0.0 {
                        self.fold(m, c, parity, &mut row);
                    }
                }
            } else {
                let start = n_nodes + 1 - closure_pts;
                let x: Vec<f64> = (start..=n_nodes).map(|m| m as f64 * h).collect();
                let w = fd_weights(i as f64 * h, &x, deriv);
                for (j, m) in (start..=n_nodes).enumerate() {
                    row.push((m - 1, w[deriv][j]));
                }
            }
            rows.push(compact(row));
        }
        rows
    }

    /// Per-node quadrature weights for ∫_0^{R_max} F dr, assuming F(0) = 0.
    fn build_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        let n_nodes = self.len();
        for j in 0..n_nodes {
            for (m, c) in self.cell_weights(j) {
                if m >= 1 {
                    w[m - 1] += c;
                }
            }
        }
        w
    }

    /// Weights of the full-cell rule on [x_j, x_{j+1}] over extended node
    /// positions x_m = m·h (m = 0 is the origin).
    fn cell_weights(&self, j: usize) -> Vec<(usize, f64)> {
        let h = self.h;
        let n_nodes = self.len();
        match self.scheme {
            Scheme::Order2 => vec![(j, 0.5 * h), (j + 1, 0.5 * h)],
            Scheme::Order4 => {
                let c = h / 24.0;
                if j == 0 {
                    vec![(0, 9.0 * c), (1, 19.0 * c), (2, -5.0 * c), (3, c)]
                } else if j + 2 > n_nodes {
                    vec![(j + 1, 9.0 * c), (j, 19.0 * c), (j - 1, -5.0 * c), (j - 2, c)]
                } else {
                    vec![(j - 1, -c), (j, 13.0 * c), (j + 1, 13.0 * c), (j + 2, -c)]
                }
            }
        }
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_0^R F dr for per-node samples `f` of a function vanishing at r = 0.
    pub fn integrate_to(&self, f: &[f64], radius: f64) -> Result<f64> {
        assert_eq!(f.len(), self.len());
        if !(radius >= 0.0 && radius <= self.r_max * (1.0 + 1e-12)) {
            return Err(Error::RadiusOutOfRange { radius, r_max: self.r_max });
        }
        let h = self.h;
        let n_nodes = self.len();
        let ext = |m: usize| if m == 0 { 0.0 } else { f[m - 1] };
        let pos = (radius / h).min(n_nodes as f64);
        let mut full = pos.floor() as usize;
        if (pos - pos.round()).abs() < 1e-9 {
            full = pos.round() as usize;
        }
        let full = full.min(n_nodes);
        let mut total = 0.0;
        for j in 0..full {
            total += self.cell_weights(j).iter().map(|&(m, c)| c * ext(m)).sum::<f64>();
        }
        let x0 = full as f64 * h;
        if radius - x0 > 1e-12 * h {
            // Partial cell: interpolate and integrate with Gauss–Legendre.
            let npts = self.scheme.order();
            let start = (full as isize - (npts as isize / 2 - 1)).clamp(0, (n_nodes + 1 - npts) as isize) as usize;
            let xs: Vec<f64> = (start..start + npts).map(|m| m as f64 * h).collect();
            let ys: Vec<f64> = (start..start + npts).map(ext).collect();
            let mid = 0.5 * (x0 + radius);
            let half = 0.5 * (radius - x0);
            let g = 1.0 / 3f64.sqrt();
            for t in [-g, g] {
                total += half * lagrange(&xs, &ys, mid + half * t);
            }
        }
        Ok(total)
    }

    /// Interpolates per-node samples at radius `r` with the local Lagrange
    /// polynomial of the scheme order (parity-extended near the origin).
    pub fn interpolate(&self, f: &[f64], r: f64, parity: Parity) -> f64 {
        self.interpolate_with(f, r, parity, self.scheme.order())
    }

    /// Interpolation with an explicit (even) number of stencil points.
    pub fn interpolate_with(&self, f: &[f64], r: f64, parity: Parity, points: usize) -> f64 {
        let h = self.h;
        let n_nodes = self.len() as isize;
        let npts = points as isize;
        let pos = r / h;
        let base = pos.floor() as isize;
        let start = (base - (npts / 2 - 1)).min(n_nodes + 1 - npts);
        let mut xs = Vec::with_capacity(npts as usize);
        let mut ys = Vec::with_capacity(npts as usize);
        for m in start..start + npts {
            xs.push(m as f64 * h);
            ys.push(self.extended_value(f, m, parity));
        }
        lagrange(&xs, &ys, r)
    }

    /// Value at 1-based position m with parity extension (m ≤ 0 allowed).
    pub fn extended_value(&self, f: &[f64], m: isize, parity: Parity) -> f64 {
        let mut row = Row::new();
        self.fold(m, 1.0, parity, &mut row);
        row.iter().map(|&(c, w)| w * f[c]).sum()
    }

    pub fn d1_rows(&self, parity: Parity) -> &[Row] {
        match parity {
            Parity::Even => &self.stencils.d1_even,
            Parity::Odd => &self.stencils.d1_odd,
        }
    }

    pub fn d2_rows(&self, parity: Parity) -> &[Row] {
        match parity {
            Parity::Even => &self.stencils.d2_even,
            Parity::Odd => &self.stencils.d2_odd,
        }
    }

    pub fn d1(&self, f: &[f64], parity: Parity) -> Vec<f64> {
        apply_rows(self.d1_rows(parity), f)
    }

    pub fn d2(&self, f: &[f64], parity: Parity) -> Vec<f64> {
        apply_rows(self.d2_rows(parity), f)
    }
}

pub fn apply_rows(rows: &[Row], f: &[f64]) -> Vec<f64> {
    rows.iter().map(|row| row.iter().map(|&(c, w)| w * f[c]).sum()).collect()
}

/// Merges duplicate columns of a sparse row.
pub fn compact(mut row: Row) -> Row {
    row.sort_by_key(|&(c, _)| c);
    let mut out: Row = Vec::with_capacity(row.len());
    for (c, w) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += w,
            _ => out.push((c, w)),
        }
    }
    out
}

pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..xs.len() {
        let mut l = 1.0;
        for j in 0..xs.len() {
            if i != j {
                l *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        total += l * ys[i];
    }
    total
}

/// ln sinh r for r > 0 without overflow.
pub fn ln_sinh(r: f64) -> f64 {
    r + (-(-2.0 * r).exp_m1()).ln() - std::f64::consts::LN_2
}

/// coth r.
pub fn coth(r: f64) -> f64 {
    1.0 / r.tanh()
}

/// Area of the unit (n−1)-sphere, 2π^{n/2}/Γ(n/2).
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // Γ(n/2) for integer n via the half-integer recursion.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut k = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k < n as f64 / 2.0 - 1e-12 {
        gamma *= k;
        k += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(RadialGrid::new(3, 8, 10.0, Scheme::Order4).is_err());
        assert!(RadialGrid::new(2, 100, 10.0, Scheme::Order4).is_err());
        assert!(RadialGrid::new(3, 100, -1.0, Scheme::Order4).is_err());
    }

    #[test]
    fn derivatives_of_even_and_odd_functions() {
        let g = RadialGrid::new(3, 200, 4.0, Scheme::Order4).unwrap();
        let even: Vec<f64> = g.nodes().iter().map(|r| (r * r).cos()).collect();
        let odd: Vec<f64> = g.nodes().iter().map(|r| r.sin()).collect();
        let de = g.d1(&even, Parity::Even);
        let dde = g.d2(&even, Parity::Even);
        let d_o = g.d1(&odd, Parity::Odd);
        for (k, &r) in g.nodes().iter().enumerate() {
            assert!((de[k] + 2.0 * r * (r * r).sin()).abs() < 1e-4 * (1.0 + r.powi(4)), "d1 even at {r}");
            let exact = -2.0 * (r * r).sin() - 4.0 * r * r * (r * r).cos();
            assert!((dde[k] - exact).abs() < 1e-3 * (1.0 + r.powi(6)), "d2 even at {r}: {} vs {exact}", dde[k]);
            assert!((d_o[k] - r.cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn quadrature_is_fourth_order() {
        let err = |n_nodes: usize| {
            let g = RadialGrid::new(3, n_nodes, 5.0, Scheme::Order4).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|r| r * r * (-r).exp()).collect();
            let exact = 2.0 - (-5.0f64).exp() * (25.0 + 10.0 + 2.0);
            (g.integrate_to(&f, 5.0).unwrap() - exact).abs()
        };
        let ratio = err(100) / err(200);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn partial_cells_are_consistent() {
        let g = RadialGrid::new(3, 100, 5.0, Scheme::Order4).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| r.sin() * r).collect();
        let exact = |x: f64| x.sin() - x * x.cos();
        for &r in &[0.013, 0.77, 2.5, 3.2, 4.999, 5.0] {
            let v = g.integrate_to(&f, r).unwrap();
            assert!((v - exact(r)).abs() < 1e-6, "{r}: {v} vs {}", exact(r));
        }
        assert!(g.integrate_to(&f, 5.1).is_err());
    }
}
