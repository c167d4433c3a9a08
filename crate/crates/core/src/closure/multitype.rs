use std::cell::RefCell;

use super::scalar::ClosureOptions;
use crate::error::{Error, Result};
use crate::generators::MultiTypeGenerator;
use crate::integrators::{rk45_solve_with, OdeProblem, Rk45Options, StepStats};
use crate::series::{tensor_product_into, FftWorkspace, ProductBackend, TensorWindow};

/// Vector characteristic `Φ = (Φ^{(1)}, …, Φ^{(K)})` and scalar multiplier on `{0..N}^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiClosureState {
    pub phi: Vec<TensorWindow>,
    pub kappa: TensorWindow,
    pub t: f64,
}

impl MultiClosureState {
    /// `φ^{(i)} = δ_{e_i}`, `κ = δ_0`. Needs `cap ≥ 1`.
    pub fn initial(species: usize, cap: usize) -> Self {
        let phi = (0..species)
            .map(|i| {
                let mut idx = vec![0; species];
                idx[i] = 1;
                TensorWindow::delta(species, cap, &idx)
            })
            .collect();
        Self { phi, kappa: TensorWindow::delta(species, cap, &vec![0; species]), t: 0.0 }
    }

    pub fn species(&self) -> usize {
        self.kappa.species()
    }

    pub fn cap(&self) -> usize {
        self.kappa.cap()
    }
}

/// Distinct monomials `Φ^v` used by the rate tables, with per-type and
/// immigration weights pointing into them.
struct MultiRhs {
    species: usize,
    cap: usize,
    len: usize,
    monomials: Vec<Vec<usize>>,
    per_type: Vec<Vec<(usize, f64)>>,
    immigration: Vec<(usize, f64)>,
    backend: ProductBackend,
    scratch: RefCell<(Vec<Vec<f64>>, Vec<f64>, FftWorkspace)>,
}

impl MultiRhs {
    fn new(gen: &MultiTypeGenerator, cap: usize, backend: ProductBackend) -> Self {
        let k = gen.species();
        let mut monomials: Vec<Vec<usize>> = Vec::new();
        let mut slot = |v: Vec<usize>| match monomials.iter().position(|m| *m == v) {
            Some(i) => i,
            None => {
                monomials.push(v);
                monomials.len() - 1
            }
        };
        let per_type = gen
            .per_type()
            .iter()
            .enumerate()
            .map(|(i, terms)| {
                terms
                    .iter()
                    .map(|t| {
                        let v = t.r.iter().enumerate().map(|(j, &r)| (r + i64::from(i == j)) as usize).collect();
                        (slot(v), t.rate)
                    })
                    .collect()
            })
            .collect();
        let immigration =
            gen.immigration().iter().map(|t| (slot(t.r.iter().map(|&r| r as usize).collect()), t.rate)).collect();
        let len = (cap + 1).pow(k as u32);
        let bufs = vec![vec![0.0; len]; monomials.len()];
        Self {
            species: k,
            cap,
            len,
            monomials,
            per_type,
            immigration,
            backend,
            scratch: RefCell::new((bufs, vec![0.0; len], FftWorkspace::new())),
        }
    }

    fn product(&self, ws: &mut FftWorkspace, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self.backend {
            ProductBackend::Direct => tensor_product_into(self.species, self.cap, a, b, out),
            ProductBackend::Fft => ws.tensor_product_into(self.species, self.cap, a, b, out),
        }
    }

    /// `y = [φ^{(1)}, …, φ^{(K)}, κ]` flattened.
    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let len = self.len;
        let k = self.species;
        let mut guard = self.scratch.borrow_mut();
        let (monos, tmp, ws) = &mut *guard;
        for (v, buf) in self.monomials.iter().zip(monos.iter_mut()) {
            buf.iter_mut().for_each(|x| *x = 0.0);
            buf[0] = 1.0;
            for (j, &p) in v.iter().enumerate() {
                for _ in 0..p {
                    self.product(ws, buf, &y[j * len..(j + 1) * len], tmp);
                    buf.copy_from_slice(tmp);
                }
            }
        }
        dy.iter_mut().for_each(|x| *x = 0.0);
        for (i, terms) in self.per_type.iter().enumerate() {
            let out = &mut dy[i * len..(i + 1) * len];
            for &(m, rate) in terms {
                for (o, v) in out.iter_mut().zip(&monos[m]) {
                    *o += rate * v;
                }
            }
        }
        if !self.immigration.is_empty() {
            let b = &mut *tmp;
            b.iter_mut().for_each(|x| *x = 0.0);
            for &(m, rate) in &self.immigration {
                for (o, v) in b.iter_mut().zip(&monos[m]) {
                    *o += rate * v;
                }
            }
            let dk = &mut dy[k * len..];
            let kappa = &y[k * len..];
            match self.backend {
                ProductBackend::Direct => tensor_product_into(k, self.cap, b, kappa, dk),
                ProductBackend::Fft => ws.tensor_product_into(k, self.cap, b, kappa, dk),
            }
        }
    }
}

pub fn integrate_closure_multi(gen: &MultiTypeGenerator, cap: usize, t: f64, rtol: f64) -> Result<MultiClosureState> {
    integrate_closure_multi_with(gen, cap, t, &ClosureOptions::with_rtol(rtol)).map(|(s, _)| s)
}

/// Tensor coefficients of `Φ_t` and `K_t` on the box `{0..N}^K`.
pub fn integrate_closure_multi_with(
    gen: &MultiTypeGenerator,
    cap: usize,
    t: f64,
    opts: &ClosureOptions,
) -> Result<(MultiClosureState, StepStats)> {
    if cap == 0 {
        return Err(Error::param("cap", "multi-type closure needs N ≥ 1"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    let k = gen.species();
    let init = MultiClosureState::initial(k, cap);
    if t == 0.0 {
        return Ok((init, StepStats::default()));
    }
    let rhs = MultiRhs::new(gen, cap, opts.backend);
    let len = rhs.len;
    let mut y0 = Vec::with_capacity((k + 1) * len);
    for p in &init.phi {
        y0.extend_from_slice(p.coeffs());
    }
    y0.extend_from_slice(init.kappa.coeffs());
    let problem = OdeProblem::new(|_, y: &[f64], dy: &mut [f64]| rhs.eval(y, dy), y0, 0.0, t);
    let ode_opts = Rk45Options { rtol: opts.rtol, atol: opts.atol, guard: Some(opts.guard), ..Default::default() };
    let (y, stats) = rk45_solve_with(&problem, &ode_opts)?;
    let phi = (0..k)
        .map(|i| TensorWindow::from_vec(k, cap, y[i * len..(i + 1) * len].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let kappa = TensorWindow::from_vec(k, cap, y[k * len..].to_vec())?;
    Ok((MultiClosureState { phi, kappa, t }, stats))
}

/// `P = K_t · Σ_n π_n Π_j (Φ^{(j)})^{n_j}` on the box.
pub fn multi_composition(state: &MultiClosureState, init: &TensorWindow) -> Result<TensorWindow> {
    let (k, cap) = (state.species(), state.cap());
    if init.species() != k || init.cap() != cap {
        return Err(Error::ShapeMismatch(format!(
            "initial data (K={}, N={}) on a closure of (K={k}, N={cap})",
            init.species(),
            init.cap()
        )));
    }
    let len = init.len();
    let mut max_pow = vec![0usize; k];
    for flat in 0..len {
        if init.coeffs()[flat] != 0.0 {
            for (m, i) in max_pow.iter_mut().zip(init.multi_index(flat)) {
                *m = (*m).max(i);
            }
        }
    }
    let one = TensorWindow::delta(k, cap, &vec![0; k]);
    let mut powers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(k);
    for (j, &mp) in max_pow.iter().enumerate() {
        let mut list = vec![one.coeffs().to_vec()];
        for p in 1..=mp {
            let mut next = vec![0.0; len];
            tensor_product_into(k, cap, &list[p - 1], state.phi[j].coeffs(), &mut next);
            list.push(next);
        }
        powers.push(list);
    }
    let mut acc = vec![0.0; len];
    let mut term = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    for flat in 0..len {
        let w = init.coeffs()[flat];
        if w == 0.0 {
            continue;
        }
        let idx = init.multi_index(flat);
        term.copy_from_slice(&powers[0][idx[0]]);
        for j in 1..k {
            tensor_product_into(k, cap, &term, &powers[j][idx[j]], &mut tmp);
            std::mem::swap(&mut term, &mut tmp);
        }
        for (a, v) in acc.iter_mut().zip(&term) {
            *a += w * v;
        }
    }
    let mut out = vec![0.0; len];
    tensor_product_into(k, cap, &acc, state.kappa.coeffs(), &mut out);
    TensorWindow::from_vec(k, cap, out)
}

/// Closure solve on the box from tensor initial data.
pub fn closure_solve_multi(
    gen: &MultiTypeGenerator,
    init: &TensorWindow,
    t: f64,
    opts: &ClosureOptions,
) -> Result<TensorWindow> {
    let (state, _) = integrate_closure_multi_with(gen, init.cap(), t, opts)?;
    multi_composition(&state, init)
}
