use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{RadialGrid, Scheme};
use crate::error::{Error, Result};

/// Radial metric g = e^{2u}dr² + e^{2v}sinh²r·g_S on the ball.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    pub grid: Arc<RadialGrid>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Symmetric 2-tensor of the radial class, given by its frame components
/// a = h(e_r, e_r) and b = h(e_α, e_α) in the orthonormal frame of a base metric.
#[derive(Debug, Clone)]
pub struct RadialSymmetric2Tensor {
    pub grid: Arc<RadialGrid>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RadialScalarField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

pub(crate) fn same_grid(a: &Arc<RadialGrid>, b: &Arc<RadialGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(node) => Err(Error::NonFiniteProfile { node }),
        None => Ok(()),
    }
}

impl WarpedMetric {
    pub fn new(grid: Arc<RadialGrid>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        check_finite(&u)?;
        check_finite(&v)?;
        Ok(Self { grid, u, v })
    }

    /// The hyperbolic reference metric, u = v = 0.
    pub fn hyperbolic(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, u: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn validate(&self) -> Result<()> {
        check_finite(&self.u)?;
        check_finite(&self.v)
    }

    /// Checks membership of the decaying class: |u|, |v| ≤ tol at R_max.
    pub fn check_decay(&self, tol: f64) -> Result<()> {
        let last = self.grid.len() - 1;
        let (u, v) = (self.u[last], self.v[last]);
        if u.abs() > tol || v.abs() > tol {
            return Err(Error::NonAdmissibleMetric(format!(
                "profiles do not decay at R_max: u = {u:e}, v = {v:e} (tolerance {tol:e})"
            )));
        }
        Ok(())
    }

    /// g + εh where h is given in the orthonormal frame of g.
    pub fn perturbed(&self, h: &RadialSymmetric2Tensor, eps: f64) -> Result<Self> {
        same_grid(&self.grid, &h.grid)?;
        let u = self.u.iter().zip(&h.a).map(|(u, a)| u + 0.5 * (eps * a).ln_1p()).collect();
        let v = self.v.iter().zip(&h.b).map(|(v, b)| v + 0.5 * (eps * b).ln_1p()).collect();
        Self::new(self.grid.clone(), u, v)
    }

    /// e^{2w}g.
    pub fn conformal(&self, w: &RadialScalarField) -> Result<Self> {
        same_grid(&self.grid, &w.grid)?;
        let u = self.u.iter().zip(&w.values).map(|(u, w)| u + w).collect();
        let v = self.v.iter().zip(&w.values).map(|(v, w)| v + w).collect();
        Self::new(self.grid.clone(), u, v)
    }

    /// g − ĝ expressed in the orthonormal frame of ĝ: a = e^{2u} − 1, b = e^{2v} − 1.
    pub fn difference_from_reference(&self) -> RadialSymmetric2Tensor {
        RadialSymmetric2Tensor {
            grid: self.grid.clone(),
            a: self.u.iter().map(|u| (2.0 * u).exp_m1()).collect(),
            b: self.v.iter().map(|v| (2.0 * v).exp_m1()).collect(),
        }
    }

    /// ‖g − ĝ‖_∞ measured as the largest frame component of the difference.
    pub fn sup_distance_to_reference(&self) -> f64 {
        let d = self.difference_from_reference();
        d.a.iter().chain(&d.b).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MetricJson {
            n: self.grid.dim(),
            r_max: self.grid.r_max(),
            num_nodes: self.grid.len(),
            scheme: self.grid.scheme(),
            u: self.u.clone(),
            v: self.v.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MetricJson = serde_json::from_str(s)?;
        let grid = Arc::new(RadialGrid::new(m.n, m.num_nodes, m.r_max, m.scheme)?);
        Self::new(grid, m.u, m.v)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_columns(w, &["r", "u", "v"], self.grid.nodes(), &[&self.u, &self.v])
    }

    /// Reads a metric written by [`WarpedMetric::write_csv`] onto `grid`.
    pub fn read_csv<R: Read>(grid: Arc<RadialGrid>, r: R) -> Result<Self> {
        let cols = read_columns(r, &grid, 2)?;
        let mut it = cols.into_iter();
        Self::new(grid, it.next().unwrap(), it.next().unwrap())
    }
}

impl RadialSymmetric2Tensor {
    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, a: vec![0.0; n], b: vec![0.0; n] }
    }

    /// w·g in any frame: a = b = w.
    pub fn pure_trace(w: &RadialScalarField) -> Self {
        Self { grid: w.grid.clone(), a: w.values.clone(), b: w.values.clone() }
    }

    /// tr h = a + (n−1)b.
    pub fn trace(&self) -> RadialScalarField {
        let n1 = (self.grid.dim() - 1) as f64;
        RadialScalarField {
            grid: self.grid.clone(),
            values: self.a.iter().zip(&self.b).map(|(a, b)| a + n1 * b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            a: self.a.iter().map(|x| s * x).collect(),
            b: self.b.iter().map(|x| s * x).collect(),
        }
    }

    /// self + s·other.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + s * y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + s * y).collect(),
        })
    }

    /// Pointwise |h|² = a² + (n−1)b².
    pub fn pointwise_norm_sq(&self) -> Vec<f64> {
        let n1 = (self.grid.dim() - 1) as f64;
        self.a.iter().zip(&self.b).map(|(a, b)| a * a + n1 * b * b).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_columns(w, &["r", "a", "b"], self.grid.nodes(), &[&self.a, &self.b])
    }

    pub fn read_csv<R: Read>(grid: Arc<RadialGrid>, r: R) -> Result<Self> {
        let cols = read_columns(r, &grid, 2)?;
        let mut it = cols.into_iter();
        Ok(Self { grid, a: it.next().unwrap(), b: it.next().unwrap() })
    }
}

impl RadialScalarField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_columns(w, &["r", "value"], self.grid.nodes(), &[&self.values])
    }

    pub fn read_csv<R: Read>(grid: Arc<RadialGrid>, r: R) -> Result<Self> {
        let mut cols = read_columns(r, &grid, 1)?;
        Self::new(grid, cols.remove(0))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricJson {
    n: usize,
    #[serde(rename = "R_max")]
    r_max: f64,
    #[serde(rename = "N")]
    num_nodes: usize,
    scheme: Scheme,
    u: Vec<f64>,
    v: Vec<f64>,
}

fn write_columns<W: Write>(w: W, header: &[&str], r: &[f64], cols: &[&Vec<f64>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for (k, rk) in r.iter().enumerate() {
        let mut rec = vec![rk.to_string()];
        rec.extend(cols.iter().map(|c| c[k].to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_columns<R: Read>(r: R, grid: &RadialGrid, ncols: usize) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut cols = vec![Vec::with_capacity(grid.len()); ncols];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != ncols + 1 {
            return Err(Error::Parse(format!("row {k}: expected {} columns", ncols + 1)));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {k}: {e}")));
        let r = parse(&rec[0])?;
        if k >= grid.len() || (r - grid.nodes()[k]).abs() > 1e-12 * grid.r_max() {
            return Err(Error::GridMismatch);
        }
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse(&rec[c + 1])?);
        }
    }
    if cols[0].len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(4, 64, 8.0, Scheme::Order4).unwrap())
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = grid();
        let u: Vec<f64> = g.nodes().iter().map(|r| (0.1 + r).sin() / 3.0).collect();
        let v: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp() * std::f64::consts::PI).collect();
        let m = WarpedMetric::new(g, u, v).unwrap();
        let back = WarpedMetric::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.u, m.u);
        assert_eq!(back.v, m.v);
        assert!(m.to_json().unwrap().contains("\"R_max\""));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = grid();
        let u: Vec<f64> = g.nodes().iter().map(|r| 1.0 / (3.0 + r)).collect();
        let m = WarpedMetric::new(g.clone(), u.clone(), u.iter().map(|x| -x / 7.0).collect()).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = WarpedMetric::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back.u, m.u);
        assert_eq!(back.v, m.v);
    }

    #[test]
    fn non_finite_profiles_are_rejected() {
        let g = grid();
        let mut u = vec![0.0; g.len()];
        u[5] = f64::NAN;
        assert_eq!(
            WarpedMetric::new(g.clone(), u, vec![0.0; 64]).unwrap_err(),
            Error::NonFiniteProfile { node: 5 }
        );
    }

    #[test]
    fn perturbation_matches_difference() {
        let g = grid();
        let h = RadialSymmetric2Tensor {
            grid: g.clone(),
            a: g.nodes().iter().map(|r| (-r).exp()).collect(),
            b: g.nodes().iter().map(|r| -(-2.0 * r).exp()).collect(),
        };
        let m = WarpedMetric::hyperbolic(g).perturbed(&h, 0.3).unwrap();
        let d = m.difference_from_reference();
        for k in 0..h.a.len() {
            assert!((d.a[k] - 0.3 * h.a[k]).abs() < 1e-14);
            assert!((d.b[k] - 0.3 * h.b[k]).abs() < 1e-14);
        }
    }
}
