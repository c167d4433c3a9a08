//! Truncated power series on a fixed window `{0..N}` and on the box `{0..N}^K`.
//!
//! Every product is taken modulo `z^{N+1}` (componentwise for tensors). Caps never
//! grow implicitly, so entry `n` of a product only ever reads entries `0..=n`.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Coefficients `c_0..c_N` of a series truncated at cap `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesWindow {
    coeffs: Vec<f64>,
}

impl SeriesWindow {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("series window needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("series window"));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(cap: usize) -> Self {
        Self { coeffs: vec![0.0; cap + 1] }
    }

    /// The monomial `z^k` truncated at `cap` (zero when `k > cap`).
    pub fn monomial(cap: usize, k: usize) -> Self {
        let mut s = Self::zeros(cap);
        if k <= cap {
            s.coeffs[k] = 1.0;
        }
        s
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    /// Same series re-windowed at `cap`: truncated or zero-extended.
    pub fn resized(&self, cap: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(cap + 1, 0.0);
        Self { coeffs }
    }

    /// Index of the last nonzero coefficient, if any.
    pub fn support_end(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Evaluates the truncated polynomial at `z` by Horner's rule.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

impl std::ops::Index<usize> for SeriesWindow {
    type Output = f64;
    fn index(&self, n: usize) -> &f64 {
        &self.coeffs[n]
    }
}

/// `out_n = Σ_{k≤n} a_k b_{n−k}` for `n < out.len()`; all three slices share one length.
pub fn cauchy_product_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    debug_assert!(a.len() == b.len() && b.len() == out.len());
    let len = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    // Accumulates each out[n] in ascending k, so level n never reads above n.
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        for (o, bv) in out[k..].iter_mut().zip(&b[..len - k]) {
            *o += ak * bv;
        }
    }
}

pub fn cauchy_product(a: &SeriesWindow, b: &SeriesWindow) -> Result<SeriesWindow> {
    check_caps(a, b)?;
    let mut out = vec![0.0; a.coeffs.len()];
    cauchy_product_into(&a.coeffs, &b.coeffs, &mut out);
    Ok(SeriesWindow { coeffs: out })
}

/// `a(z)^p` truncated at the cap of `a`, as `p − 1` chained products.
pub fn cauchy_power_coefficients(a: &SeriesWindow, p: u32) -> SeriesWindow {
    if p == 0 {
        return SeriesWindow::monomial(a.cap(), 0);
    }
    let mut acc = a.clone();
    let mut tmp = vec![0.0; a.coeffs.len()];
    for _ in 1..p {
        cauchy_product_into(&acc.coeffs, &a.coeffs, &mut tmp);
        std::mem::swap(&mut acc.coeffs, &mut tmp);
    }
    acc
}

fn check_caps(a: &SeriesWindow, b: &SeriesWindow) -> Result<()> {
    if a.cap() != b.cap() {
        return Err(Error::CapMismatch { left: a.cap(), right: b.cap() });
    }
    Ok(())
}

/// Reusable FFT plans and buffers. One workspace per concurrent caller.
pub struct FftWorkspace {
    planner: FftPlanner<f64>,
    plans: HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    buf: Vec<Complex64>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Default for FftWorkspace {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for FftWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftWorkspace").field("sizes", &self.plans.keys().collect::<Vec<_>>()).finish()
    }
}

impl FftWorkspace {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
            buf: Vec::new(),
            line: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn plans(&mut self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let planner = &mut self.planner;
        self.plans.entry(len).or_insert_with(|| (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))).clone()
    }

    /// Padded per-axis transform length for cap `n`.
    pub fn padded_len(cap: usize) -> usize {
        (2 * cap + 2).next_power_of_two()
    }

    /// FFT-backed truncated product of two equal-length slices.
    ///
    /// Both real inputs ride in one complex transform (`a + i b`) and are
    /// separated by conjugate symmetry before the pointwise product.
    pub fn product_into(&mut self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let n = a.len();
        debug_assert!(b.len() == n && out.len() == n);
        let len = Self::padded_len(n - 1);
        let (fwd, inv) = self.plans(len);
        self.buf.clear();
        self.buf.resize(len, Complex64::new(0.0, 0.0));
        for k in 0..n {
            self.buf[k] = Complex64::new(a[k], b[k]);
        }
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        self.scratch.resize(scratch_len, Complex64::new(0.0, 0.0));
        fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        separate_and_multiply(&mut self.buf, &mut self.line, &[len]);
        inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / len as f64;
        for k in 0..n {
            out[k] = self.buf[k].re * scale;
        }
    }

    /// FFT-backed product on the box `{0..N}^K`.
    pub fn tensor_product_into(&mut self, k: usize, cap: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        let side = cap + 1;
        let len = Self::padded_len(cap);
        let dims = vec![len; k];
        let total = len.pow(k as u32);
        self.buf.clear();
        self.buf.resize(total, Complex64::new(0.0, 0.0));
        let pad_strides = strides(k, len);
        let mut idx = vec![0usize; k];
        for flat in 0..side.pow(k as u32) {
            unflatten(flat, side, &mut idx);
            let p: usize = idx.iter().zip(&pad_strides).map(|(i, s)| i * s).sum();
            self.buf[p] = Complex64::new(a[flat], b[flat]);
        }
        let (fwd, inv) = self.plans(len);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        self.scratch.resize(scratch_len, Complex64::new(0.0, 0.0));
        transform_axes(&mut self.buf, &mut self.line, &mut self.scratch, &dims, fwd.as_ref());
        separate_and_multiply(&mut self.buf, &mut self.line, &dims);
        transform_axes(&mut self.buf, &mut self.line, &mut self.scratch, &dims, inv.as_ref());
        let scale = 1.0 / total as f64;
        for flat in 0..side.pow(k as u32) {
            unflatten(flat, side, &mut idx);
            let p: usize = idx.iter().zip(&pad_strides).map(|(i, s)| i * s).sum();
            out[flat] = self.buf[p].re * scale;
        }
    }
}

/// Given the spectrum `X` of `a + i b`, overwrites it with the spectrum of `a ∗ b`.
fn separate_and_multiply(buf: &mut [Complex64], tmp: &mut Vec<Complex64>, dims: &[usize]) {
    tmp.clear();
    tmp.extend_from_slice(buf);
    let k = dims.len();
    let mut idx = vec![0usize; k];
    let st = strides_dims(dims);
    for flat in 0..buf.len() {
        let mut rem = flat;
        for d in (0..k).rev() {
            idx[d] = rem % dims[d];
            rem /= dims[d];
        }
        let mirror: usize = (0..k).map(|d| ((dims[d] - idx[d]) % dims[d]) * st[d]).sum();
        let x = tmp[flat];
        let xm = tmp[mirror].conj();
        let fa = (x + xm) * 0.5;
        let fb = (x - xm) * Complex64::new(0.0, -0.5);
        buf[flat] = fa * fb;
    }
}

fn transform_axes(
    buf: &mut [Complex64],
    line: &mut Vec<Complex64>,
    scratch: &mut [Complex64],
    dims: &[usize],
    fft: &dyn Fft<f64>,
) {
    let st = strides_dims(dims);
    let total = buf.len();
    for (axis, &n) in dims.iter().enumerate() {
        let stride = st[axis];
        if stride == 1 {
            for chunk in buf.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, scratch);
            }
            continue;
        }
        line.resize(n, Complex64::new(0.0, 0.0));
        let block = n * stride;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                for l in 0..n {
                    line[l] = buf[base + off + l * stride];
                }
                fft.process_with_scratch(line, scratch);
                for l in 0..n {
                    buf[base + off + l * stride] = line[l];
                }
            }
        }
    }
}

pub fn fft_cauchy_product(a: &SeriesWindow, b: &SeriesWindow, ws: Option<&mut FftWorkspace>) -> Result<SeriesWindow> {
    check_caps(a, b)?;
    let mut out = vec![0.0; a.coeffs.len()];
    match ws {
        Some(ws) => ws.product_into(&a.coeffs, &b.coeffs, &mut out),
        None => FftWorkspace::new().product_into(&a.coeffs, &b.coeffs, &mut out),
    }
    Ok(SeriesWindow { coeffs: out })
}

/// Product kernel used by the closures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductBackend {
    #[default]
    Direct,
    Fft,
}

/// Coefficients on the box `{0..N}^K`, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorWindow {
    species: usize,
    cap: usize,
    coeffs: Vec<f64>,
}

impl TensorWindow {
    pub fn zeros(species: usize, cap: usize) -> Self {
        assert!(species >= 1, "tensor window needs at least one axis");
        Self { species, cap, coeffs: vec![0.0; (cap + 1).pow(species as u32)] }
    }

    pub fn from_vec(species: usize, cap: usize, coeffs: Vec<f64>) -> Result<Self> {
        if species == 0 {
            return Err(Error::InvalidArgument("tensor window needs at least one axis".into()));
        }
        let len = (cap + 1).pow(species as u32);
        if coeffs.len() != len {
            return Err(Error::ShapeMismatch(format!("expected {len} entries, got {}", coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("tensor window"));
        }
        Ok(Self { species, cap, coeffs })
    }

    /// Unit mass at one multi-index.
    pub fn delta(species: usize, cap: usize, index: &[usize]) -> Self {
        let mut t = Self::zeros(species, cap);
        if index.iter().all(|&i| i <= cap) {
            let f = t.flat_index(index);
            t.coeffs[f] = 1.0;
        }
        t
    }

    pub fn from_series(s: &SeriesWindow) -> Self {
        Self { species: 1, cap: s.cap(), coeffs: s.coeffs.clone() }
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn side(&self) -> usize {
        self.cap + 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(self.species, self.cap + 1)
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.species);
        index.iter().fold(0, |acc, &i| acc * (self.cap + 1) + i)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.species];
        unflatten(flat, self.cap + 1, &mut idx);
        idx
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.coeffs[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let f = self.flat_index(index);
        self.coeffs[f] = value;
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Restriction to the smaller box `{0..cap}^K`.
    pub fn restricted(&self, cap: usize) -> Result<Self> {
        if cap > self.cap {
            return Err(Error::ShapeMismatch(format!("cannot restrict cap {} to {cap}", self.cap)));
        }
        let mut out = Self::zeros(self.species, cap);
        let mut idx = vec![0; self.species];
        for flat in 0..out.coeffs.len() {
            unflatten(flat, cap + 1, &mut idx);
            out.coeffs[flat] = self.get(&idx);
        }
        Ok(out)
    }

    /// Marginal along one axis.
    pub fn marginal(&self, axis: usize) -> SeriesWindow {
        let mut out = vec![0.0; self.cap + 1];
        let mut idx = vec![0; self.species];
        for (flat, &c) in self.coeffs.iter().enumerate() {
            unflatten(flat, self.cap + 1, &mut idx);
            out[idx[axis]] += c;
        }
        SeriesWindow { coeffs: out }
    }

    pub fn outer(factors: &[SeriesWindow]) -> Result<Self> {
        let cap = factors.first().map(|f| f.cap()).ok_or_else(|| Error::InvalidArgument("no factors".into()))?;
        if factors.iter().any(|f| f.cap() != cap) {
            return Err(Error::ShapeMismatch("outer product factors differ in cap".into()));
        }
        let mut out = Self::zeros(factors.len(), cap);
        let mut idx = vec![0; factors.len()];
        for flat in 0..out.coeffs.len() {
            unflatten(flat, cap + 1, &mut idx);
            out.coeffs[flat] = idx.iter().zip(factors).map(|(&i, f)| f.coeffs[i]).product();
        }
        Ok(out)
    }
}

pub(crate) fn strides(species: usize, side: usize) -> Vec<usize> {
    let mut st = vec![1usize; species];
    for d in (0..species.saturating_sub(1)).rev() {
        st[d] = st[d + 1] * side;
    }
    st
}

fn strides_dims(dims: &[usize]) -> Vec<usize> {
    let mut st = vec![1usize; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        st[d] = st[d + 1] * dims[d + 1];
    }
    st
}

pub(crate) fn unflatten(mut flat: usize, side: usize, idx: &mut [usize]) {
    for d in (0..idx.len()).rev() {
        idx[d] = flat % side;
        flat /= side;
    }
}

/// Direct box-truncated convolution of two flat tensors with equal shape.
pub fn tensor_product_into(species: usize, cap: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let side = cap + 1;
    out.iter_mut().for_each(|o| *o = 0.0);
    let st = strides(species, side);
    let mut i_idx = vec![0usize; species];
    let mut j_idx = vec![0usize; species];
    for (i_flat, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        unflatten(i_flat, side, &mut i_idx);
        // odometer over j in the sub-box j_d <= cap - i_d, last axis as a contiguous run
        let run = side - i_idx[species - 1];
        j_idx.iter_mut().for_each(|j| *j = 0);
        'odometer: loop {
            let j_base: usize = j_idx[..species - 1].iter().zip(&st).map(|(j, s)| j * s).sum();
            let o = i_flat + j_base;
            for (ob, &bv) in out[o..o + run].iter_mut().zip(&b[j_base..j_base + run]) {
                *ob += ai * bv;
            }
            let mut d = species - 1;
            loop {
                if d == 0 {
                    break 'odometer;
                }
                d -= 1;
                j_idx[d] += 1;
                if j_idx[d] <= cap - i_idx[d] {
                    continue 'odometer;
                }
                j_idx[d] = 0;
            }
        }
    }
}

pub fn tensor_cauchy_product(a: &TensorWindow, b: &TensorWindow) -> Result<TensorWindow> {
    check_shapes(a, b)?;
    let mut out = TensorWindow::zeros(a.species, a.cap);
    tensor_product_into(a.species, a.cap, &a.coeffs, &b.coeffs, &mut out.coeffs);
    Ok(out)
}

pub fn tensor_fft_cauchy_product(
    a: &TensorWindow,
    b: &TensorWindow,
    ws: Option<&mut FftWorkspace>,
) -> Result<TensorWindow> {
    check_shapes(a, b)?;
    let mut out = TensorWindow::zeros(a.species, a.cap);
    match ws {
        Some(ws) => ws.tensor_product_into(a.species, a.cap, &a.coeffs, &b.coeffs, &mut out.coeffs),
        None => FftWorkspace::new().tensor_product_into(a.species, a.cap, &a.coeffs, &b.coeffs, &mut out.coeffs),
    }
    Ok(out)
}

fn check_shapes(a: &TensorWindow, b: &TensorWindow) -> Result<()> {
    if a.species != b.species || a.cap != b.cap {
        return Err(Error::ShapeMismatch(format!(
            "tensor shapes (K={}, N={}) and (K={}, N={})",
            a.species, a.cap, b.species, b.cap
        )));
    }
    Ok(())
}

/// Anything stored as a flat coefficient array with a fixed shape.
pub trait Coefficients: Sized {
    fn values(&self) -> &[f64];
    fn shape(&self) -> Vec<usize>;
    /// A value of the same shape holding `values`.
    fn with_values(&self, values: Vec<f64>) -> Self;
}

impl Coefficients for SeriesWindow {
    fn values(&self) -> &[f64] {
        &self.coeffs
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.coeffs.len()]
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.coeffs.len());
        Self { coeffs: values }
    }
}

impl Coefficients for TensorWindow {
    fn values(&self) -> &[f64] {
        &self.coeffs
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.cap + 1; self.species]
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.coeffs.len());
        Self { species: self.species, cap: self.cap, coeffs: values }
    }
}

impl Coefficients for Vec<f64> {
    fn values(&self) -> &[f64] {
        self
    }
    fn shape(&self) -> Vec<usize> {
        vec![self.len()]
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        values
    }
}

/// Raw `Σ|a − b|` over equal shapes; no renormalization.
pub fn l1_distance<S: Coefficients>(a: &S, b: &S) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum())
}

pub fn linf_distance<S: Coefficients>(a: &S, b: &S) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
