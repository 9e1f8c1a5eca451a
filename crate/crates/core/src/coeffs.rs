//! Dense coefficient matrices and the quantities the bounds are built from.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Row-major dense `n × m` matrix with validated symmetry / zero-diagonal flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    symmetric: bool,
    zero_diag: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    symmetric: bool,
    #[serde(default)]
    zero_diag: bool,
}

impl CoeffMatrix {
    pub fn new(rows: Vec<Vec<f64>>, symmetric: bool, zero_diag: bool) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        let data = rows.into_iter().flatten().collect();
        Self::from_flat(n, m, data, symmetric, zero_diag)
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>, symmetric: bool, zero_diag: bool) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        let a = Self { rows, cols, data, symmetric, zero_diag };
        if symmetric {
            if rows != cols {
                return Err(Error::Flags(format!("symmetric flag on a {rows}x{cols} matrix")));
            }
            for i in 0..rows {
                for j in 0..i {
                    if a.get(i, j) != a.get(j, i) {
                        return Err(Error::Flags(format!("entry ({i},{j}) differs from ({j},{i})")));
                    }
                }
            }
        }
        if zero_diag {
            for i in 0..rows.min(cols) {
                if a.get(i, i) != 0.0 {
                    return Err(Error::Flags(format!("diagonal entry ({i},{i}) is nonzero")));
                }
            }
        }
        Ok(a)
    }

    /// Unflagged matrix.
    pub fn dense(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows, false, false)
    }

    /// Symmetric, zero-diagonal matrix (the undecoupled setting).
    pub fn chaos(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows, true, true)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data, symmetric: true, zero_diag: n == 0 }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols], symmetric: rows == cols, zero_diag: true }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: MatrixFile = serde_json::from_str(text)?;
        Self::new(f.rows, f.symmetric, f.zero_diag)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        let f = MatrixFile { rows: self.to_rows(), symmetric: self.symmetric, zero_diag: self.zero_diag };
        serde_json::to_string(&f).expect("matrix serializes")
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[f64]>::to_vec).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_zero_diag(&self) -> bool {
        self.zero_diag
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self { rows: self.cols, cols: self.rows, data, symmetric: self.symmetric, zero_diag: self.zero_diag }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { data: self.data.iter().map(|x| x * factor).collect(), ..self.clone() }
    }

    /// `A y`.
    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), y)).collect()
    }

    /// `Aᵀ x`.
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += xi * a;
                }
            }
        }
        out
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, &xi)| if xi == 0.0 { 0.0 } else { xi * dot(self.row(i), y) }).sum()
    }

    /// `A_i = sqrt(Σ_j a_ij²)` per row.
    pub fn row_l2_norms(&self) -> Vec<f64> {
        (0..self.rows).map(|i| l2(self.row(i))).collect()
    }

    /// `sqrt(Σ_i a_ij²)` per column.
    pub fn col_l2_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, a) in sq.iter_mut().zip(self.row(i)) {
                *s += a * a;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn frobenius(&self) -> f64 {
        l2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sum_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    /// Largest singular value with default tolerance `1e-10`.
    pub fn operator_norm(&self) -> f64 {
        self.operator_norm_with(1e-10).0
    }

    /// Largest singular value by power iteration on `AᵀA`, with the unit
    /// right singular vector as certificate.
    ///
    /// Starts: the column of largest norm plus three seeded random restarts;
    /// each run stops when the relative change drops below `tol` or after
    /// `10⁴` iterations.
    pub fn operator_norm_with(&self, tol: f64) -> (f64, Vec<f64>) {
        let m = self.cols;
        if m == 0 || self.rows == 0 || self.is_zero() {
            return (0.0, vec![0.0; m]);
        }
        let mut starts = Vec::with_capacity(4);
        let cn = self.col_l2_norms();
        let jmax = (0..m).fold(0, |b, j| if cn[j] > cn[b] { j } else { b });
        let mut e = vec![0.0; m];
        e[jmax] = 1.0;
        starts.push(e);
        let mut r = rng::stream(0x5eed_0f0e, 0, 0);
        for _ in 0..3 {
            starts.push((0..m).map(|_| r.sample::<f64, _>(StandardNormal)).collect());
        }
        let mut best = (0.0, vec![0.0; m]);
        for mut v in starts {
            let nv = l2(&v);
            if nv == 0.0 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let mut sigma = 0.0;
            for _ in 0..10_000 {
                let w = self.mul_t_vec(&self.mul_vec(&v));
                let nw = l2(&w);
                if nw == 0.0 {
                    break;
                }
                let next = nw.sqrt();
                v = w.into_iter().map(|x| x / nw).collect();
                let done = (next - sigma).abs() <= tol * next;
                sigma = next;
                if done {
                    break;
                }
            }
            // Rayleigh-style final value ‖Av‖ for the unit vector v
            let s = l2(&self.mul_vec(&v));
            if s > best.0 {
                best = (s, v);
            }
        }
        best
    }
}

/// Magnitudes sorted nonincreasing (stable, so ties keep their order).
pub fn nonincreasing_rearrangement(v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Matrix families for reproducible sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    RandomFull,
    Diagonal,
    Rank1,
    Sparse,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Diagonal, Family::Rank1, Family::RandomFull, Family::Sparse];

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomFull => "random_full",
            Family::Diagonal => "diagonal",
            Family::Rank1 => "rank1",
            Family::Sparse => "sparse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random_full" | "dense" => Ok(Family::RandomFull),
            "diagonal" => Ok(Family::Diagonal),
            "rank1" => Ok(Family::Rank1),
            "sparse" => Ok(Family::Sparse),
            _ => Err(Error::Config(format!("unknown matrix family `{s}`"))),
        }
    }
}

/// Generator description `{"family": ..., "n": .., "m": .., "seed": ..}`.
///
/// With `chaos: true` the draw is symmetrized and its diagonal cleared, so
/// the result is usable in the undecoupled setting (the diagonal family
/// then becomes a symmetric off-diagonal band).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub m: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub chaos: bool,
}

/// Fraction of nonzero entries in the sparse family.
pub const SPARSE_DENSITY: f64 = 0.2;

impl GeneratorSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self { family, n, m: None, seed, chaos: false }
    }

    pub fn chaos(family: Family, n: usize, seed: u64) -> Self {
        Self { family, n, m: None, seed, chaos: true }
    }

    /// Draws the matrix; never returns the zero matrix.
    pub fn generate(&self) -> Result<CoeffMatrix> {
        let n = self.n;
        let m = if self.chaos { n } else { self.m.unwrap_or(n) };
        if n == 0 || m == 0 || (self.chaos && n < 2) {
            return Err(Error::InvalidParameter(format!("generator needs a nonempty shape, got {n}x{m}")));
        }
        let mut r = rng::stream(self.seed, 0xC0EF, self.family as u32);
        let mut g = || -> f64 { StandardNormal.sample(&mut r) };
        let mut data = vec![0.0; n * m];
        match self.family {
            Family::RandomFull => data.iter_mut().for_each(|x| *x = g()),
            Family::Diagonal => {
                for i in 0..n.min(m) {
                    let j = if self.chaos { (i + 1) % n } else { i };
                    data[i * m + j] = g();
                }
            }
            Family::Rank1 => {
                let u: Vec<f64> = (0..n).map(|_| g()).collect();
                let v: Vec<f64> = if self.chaos { u.clone() } else { (0..m).map(|_| g()).collect() };
                for i in 0..n {
                    for j in 0..m {
                        data[i * m + j] = u[i] * v[j];
                    }
                }
            }
            Family::Sparse => {
                let mut r2 = rng::stream(self.seed, 0x5A25, 1);
                for x in data.iter_mut() {
                    let keep = r2.random::<f64>() < SPARSE_DENSITY;
                    let v = g();
                    if keep {
                        *x = v;
                    }
                }
                if data.iter().all(|&x| x == 0.0) {
                    data[if self.chaos { 1 } else { 0 }] = 1.0;
                }
            }
        }
        if self.chaos {
            let mut sym = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        sym[i * n + j] = 0.5 * (data[i * n + j] + data[j * n + i]);
                    }
                }
            }
            if sym.iter().all(|&x| x == 0.0) {
                sym[1] = 1.0;
                sym[n] = 1.0;
            }
            return CoeffMatrix::from_flat(n, n, sym, true, true);
        }
        CoeffMatrix::from_flat(n, m, data, false, false)
    }
}

/// Loads either a matrix file or a generator spec (detected by a `family` key).
pub fn load_matrix_source(path: &Path) -> Result<CoeffMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("family").is_some() {
        let spec: GeneratorSpec = serde_json::from_value(value)?;
        spec.generate()
    } else {
        CoeffMatrix::from_json_str(&text)
    }
}
