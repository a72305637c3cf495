//! Banded linear algebra and finite-difference weight generation.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals so the same buffer can hold the
/// LU factors produced with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let off = j as isize - i as isize + self.kl as isize;
        assert!(
            off >= 0 && (off as usize) < self.width,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        i * self.width + off as usize
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        let d = j as isize - i as isize;
        d >= -(self.kl as isize) && d <= self.ku as isize
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if !self.in_band(i, j) {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Replaces row `i` by the identity row (Dirichlet closure).
    pub fn set_identity_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, 0.0);
        }
        self.set(i, i, 1.0);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// `self + alpha * other`, widening the band as needed.
    pub fn add_scaled(&self, alpha: f64, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(self.n, self.kl.max(other.kl), self.ku.max(other.ku));
        for m in [(1.0, self), (alpha, other)] {
            let (s, a) = m;
            for i in 0..a.n {
                let lo = i.saturating_sub(a.kl);
                let hi = (i + a.ku).min(a.n - 1);
                for j in lo..=hi {
                    out.add(i, j, s * a.get(i, j));
                }
            }
        }
        out
    }

    /// Adds `alpha` to every diagonal entry.
    pub fn shift_diagonal(&mut self, alpha: f64) {
        for i in 0..self.n {
            self.add(i, i, alpha);
        }
    }

    /// Product of two band matrices.
    pub fn mul(&self, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = BandMatrix::zeros(n, (self.kl + other.kl).min(n - 1), (self.ku + other.ku).min(n - 1));
        for i in 0..n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(n - 1);
            for k in lo..=hi {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let lo2 = k.saturating_sub(other.kl);
                let hi2 = (k + other.ku).min(n - 1);
                for j in lo2..=hi2 {
                    out.add(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    /// Left-multiplies by `diag(d)`.
    pub fn scale_rows(&mut self, d: &[f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let s = self.slot(i, j);
                self.data[s] *= d[i];
            }
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let mut a = self.data.clone();
        let mut piv = vec![0usize; n];
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = a[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best <= scale * 1e-300 || !best.is_finite() {
                return Err(Error::SingularSystem { row: k, pivot: best });
            }
            let last_col = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    a.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = a[idx(k, k)];
            for i in k + 1..=last_row {
                let l = a[idx(i, k)] / pivot;
                a[idx(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        a[idx(i, j)] -= l * a[idx(k, j)];
                    }
                }
            }
        }
        Ok(BandLu { n, kl, ku, width: w, data: a, piv })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.lu()?.solve(rhs))
    }
}

/// Factors produced by [`BandMatrix::lu`].
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.data[idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + ku + kl).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=last_col {
                s -= self.data[idx(k, j)] * x[j];
            }
            x[k] = s / self.data[idx(k, k)];
        }
        x
    }
}

/// Finite-difference weights for derivatives `0..=m` at `z` from nodes `x`.
///
/// Returns `c[d][j]`, the weight of `f(x[j])` in the approximation of the
/// `d`-th derivative (Fornberg's recursion).
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let np = x.len();
    let mut c = vec![vec![0.0; np]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
