//! Dense and banded LU with partial pivoting.
//!
//! Pivots below `PIVOT_TOL · max|a_ij|` are reported as singular.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-13;

/// `PA = LU` of a square matrix, row-major.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::ShapeMismatch(format!("LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                lu[i * n + j] = a[(i, j)];
            }
        }
        Self::from_row_major(n, lu)
    }

    pub fn from_row_major(n: usize, mut lu: Vec<f64>) -> Result<Self> {
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::NonFinite("LU input"));
        }
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pv) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pv <= tol {
                return Err(Error::Singular { column: k, pivot: pv });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let (top, bottom) = lu.split_at_mut((k + 1) * n);
            let row_k = &top[k * n + k + 1..k * n + n];
            for row in bottom.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(row_k) {
                        *x -= l * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A X = B` for a dense right-hand side block.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let m = b.ncols();
        // row-major work array so that row updates are contiguous
        let mut x = vec![0.0; n * m];
        for (i, &p) in self.perm.iter().enumerate() {
            for j in 0..m {
                x[i * m + j] = b[(p, j)];
            }
        }
        for i in 0..n {
            let (done, rest) = x.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != 0.0 {
                    for (a, &v) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                        *a -= l * v;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u != 0.0 {
                    let off = (k - i - 1) * m;
                    for (a, &v) in xi.iter_mut().zip(&tail[off..off + m]) {
                        *a -= u * v;
                    }
                }
            }
            let d = self.lu[i * n + i];
            xi.iter_mut().for_each(|a| *a /= d);
        }
        DMatrix::from_fn(n, m, |i, j| x[i * m + j])
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i − kl ..= i + ku + kl`; the extra `kl` columns hold
/// fill-in from row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku + self.kl || i >= self.n || j >= self.n {
            return None;
        }
        Some(i * self.width() + (j + self.kl - i))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside the band");
        let s = self.slot(i, j).expect("index within dimension");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// In-place LU with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let w = self.width();
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::NonFinite("banded LU input"));
        }
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let (p, pv) =
                (k..=last)
                    .map(|i| (i, self.get(i, k).abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pv <= tol {
                return Err(Error::Singular { column: k, pivot: pv });
            }
            piv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.slot(k, j).unwrap();
                    let b = self.slot(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let si = self.slot(i, k).unwrap();
                let l = self.data[si] / pivot;
                self.data[si] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    let u = self.data[k * w + (j + kl - k)];
                    let s = i * w + (j + kl - i);
                    self.data[s] -= l * u;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.m.n;
        let (kl, ku) = (self.m.kl, self.m.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.m.get(i, k) * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + ku + kl).min(n - 1) {
                s -= self.m.get(i, j) * b[j];
            }
            b[i] = s / self.m.get(i, i);
        }
    }
}
