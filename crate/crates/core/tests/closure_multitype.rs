mod common;

use common::{bd_ratio_form, l1, linf, rng, uniform_vec};
use linrate::baselines::{dense_expm_action, uniformization_solve};
use linrate::closure::{
    closure_solve, closure_solve_multi, integrate_closure, integrate_closure_multi, integrate_closure_multi_with,
    multi_composition, ClosureOptions, MultiClosureState,
};
use linrate::generators::{LinearRateGenerator, MultiTypeGenerator, MultiTypeTerm};
use linrate::series::{tensor_product_into, SeriesWindow, TensorWindow};

fn term(r: &[i64], rate: f64) -> MultiTypeTerm {
    MultiTypeTerm { r: r.to_vec(), rate }
}

/// Two non-interacting binary birth–death types.
fn independent_bd(l: [f64; 2], m: [f64; 2]) -> MultiTypeGenerator {
    MultiTypeGenerator::markov(
        vec![vec![term(&[1, 0], l[0]), term(&[-1, 0], m[0])], vec![term(&[0, 1], l[1]), term(&[0, -1], m[1])]],
        Vec::new(),
    )
    .unwrap()
}

fn scalar_bd(l: f64, m: f64) -> LinearRateGenerator {
    LinearRateGenerator::markov(&[(1, l, 0.0), (-1, m, 0.0)]).unwrap()
}

#[test]
fn independent_types_reduce_to_scalar_characteristics() {
    let (l, m) = ([0.8, 1.2], [1.0, 0.7]);
    let cap = 12;
    let s = integrate_closure_multi(&independent_bd(l, m), cap, 1.3, 1e-12).unwrap();
    for i in 0..2 {
        let scalar = integrate_closure(&scalar_bd(l[i], m[i]), cap, 1.3, 1e-12).unwrap();
        let mut embedded = TensorWindow::zeros(2, cap);
        for (n, &v) in scalar.phi.coeffs().iter().enumerate() {
            let mut idx = [0, 0];
            idx[i] = n;
            embedded.set(&idx, v);
        }
        assert!(linf(s.phi[i].coeffs(), embedded.coeffs()) < 1e-10, "type {i}");
    }
    assert_eq!(s.kappa, TensorWindow::delta(2, cap, &[0, 0]));
}

#[test]
fn time_zero_is_initial_data() {
    let g = MultiTypeGenerator::cyclic_cross_production(3, 0.95, 1.0, 0.6).unwrap();
    assert_eq!(integrate_closure_multi(&g, 3, 0.0, 1e-10).unwrap(), MultiClosureState::initial(3, 3));
}

#[test]
fn vacuum_is_invariant_without_immigration() {
    let g = MultiTypeGenerator::cyclic_cross_production(2, 0.95, 1.0, 0.6).unwrap();
    let origin = TensorWindow::delta(2, 6, &[0, 0]);
    assert_eq!(closure_solve_multi(&g, &origin, 1.0, &ClosureOptions::default()).unwrap(), origin);
}

#[test]
fn product_of_independent_single_ancestors() {
    let (l, m, t, cap) = ([0.8, 1.2], [1.0, 0.7], 1.0, 20);
    let p = closure_solve_multi(
        &independent_bd(l, m),
        &TensorWindow::delta(2, cap, &[1, 1]),
        t,
        &ClosureOptions::default(),
    )
    .unwrap();
    let f0 = SeriesWindow::new(bd_ratio_form(l[0], m[0], t, cap)).unwrap();
    let f1 = SeriesWindow::new(bd_ratio_form(l[1], m[1], t, cap)).unwrap();
    let outer = TensorWindow::outer(&[f0, f1]).unwrap();
    assert!(linf(p.coeffs(), outer.coeffs()) < 1e-10);
}

#[test]
fn factorization_for_block_diagonal_generators() {
    let (l, m, t, cap) = ([0.5, 0.9], [1.0, 1.1], 0.8, 10);
    let g = independent_bd(l, m);
    let mut r = rng(21);
    let a = SeriesWindow::new(
        uniform_vec(&mut r, cap + 1)
            .iter()
            .take(3)
            .map(|v| v.abs())
            .chain(std::iter::repeat(0.0))
            .take(cap + 1)
            .collect(),
    )
    .unwrap();
    let b = SeriesWindow::new(vec![0.0, 0.4, 0.6].into_iter().chain(std::iter::repeat(0.0)).take(cap + 1).collect())
        .unwrap();
    let init = TensorWindow::outer(&[a.clone(), b.clone()]).unwrap();
    let joint = closure_solve_multi(&g, &init, t, &ClosureOptions::default()).unwrap();
    let pa = closure_solve(&scalar_bd(l[0], m[0]), &a, cap, t).unwrap();
    let pb = closure_solve(&scalar_bd(l[1], m[1]), &b, cap, t).unwrap();
    let prod = TensorWindow::outer(&[pa, pb]).unwrap();
    assert!(linf(joint.coeffs(), prod.coeffs()) < 1e-10);
}

#[test]
fn single_type_one_ancestor_is_kappa_times_phi() {
    let g = MultiTypeGenerator::markov(
        vec![vec![term(&[0, 1], 0.5), term(&[-1, 0], 1.0)], vec![term(&[0, -1], 1.0)]],
        vec![term(&[1, 0], 0.7)],
    )
    .unwrap();
    let s = integrate_closure_multi(&g, 5, 0.9, 1e-12).unwrap();
    let p = multi_composition(&s, &TensorWindow::delta(2, 5, &[1, 0])).unwrap();
    let mut expect = vec![0.0; 36];
    tensor_product_into(2, 5, s.kappa.coeffs(), s.phi[0].coeffs(), &mut expect);
    assert!(linf(p.coeffs(), &expect) < 1e-15);
}

fn cyclic_k4_gap(t: f64, big: usize) -> f64 {
    let g = MultiTypeGenerator::cyclic_cross_production(4, 0.95, 1.0, 0.6).unwrap();
    let cap = 4;
    let x =
        closure_solve_multi(&g, &TensorWindow::delta(4, cap, &[1, 0, 0, 0]), t, &ClosureOptions::default()).unwrap();
    let big_init = TensorWindow::delta(4, big, &[1, 0, 0, 0]);
    let u = uniformization_solve(&g.truncate(big), big_init.coeffs(), t, 1e-14).unwrap();
    let u = TensorWindow::from_vec(4, big, u).unwrap().restricted(cap).unwrap();
    l1(x.coeffs(), u.coeffs())
}

// Cap 8 per axis leaks about 1e-7 of in-window mass by t = 0.5, so the cap-8 comparison runs at t = 0.25.
#[test]
fn cyclic_k4_matches_uniformization_of_truncated_joint() {
    let gap = cyclic_k4_gap(0.25, 8);
    assert!(gap <= 1e-8, "{gap:e}");
}

#[test]
fn cyclic_k4_against_wider_truncation() {
    let gap = cyclic_k4_gap(0.5, 12);
    assert!(gap <= 1e-10, "{gap:e}");
}

#[test]
fn cyclic_k2_matches_dense_expm() {
    let g = MultiTypeGenerator::cyclic_cross_production(2, 0.95, 1.0, 0.6).unwrap();
    let (cap, big, t) = (5usize, 30usize, 0.7);
    let x = closure_solve_multi(&g, &TensorWindow::delta(2, cap, &[1, 1]), t, &ClosureOptions::default()).unwrap();
    let d = dense_expm_action(&g.truncate(big), TensorWindow::delta(2, big, &[1, 1]).coeffs(), t).unwrap();
    let d = TensorWindow::from_vec(2, big, d).unwrap().restricted(cap).unwrap();
    assert!(l1(x.coeffs(), d.coeffs()) <= 1e-8);
}

#[test]
fn window_independence() {
    let g = MultiTypeGenerator::cyclic_cross_production(2, 0.95, 1.0, 0.6).unwrap();
    let a = integrate_closure_multi(&g, 6, 1.0, 1e-12).unwrap();
    let b = integrate_closure_multi(&g, 10, 1.0, 1e-12).unwrap();
    for i in 0..2 {
        let r = b.phi[i].restricted(6).unwrap();
        assert!(linf(a.phi[i].coeffs(), r.coeffs()) < 1e-10);
    }
}

#[test]
fn product_is_lower_triangular_per_multi_index() {
    let (k, cap) = (2usize, 4usize);
    let side = cap + 1;
    let mut r = rng(4);
    let a = uniform_vec(&mut r, side * side);
    let b = uniform_vec(&mut r, side * side);
    let mut base = vec![0.0; side * side];
    tensor_product_into(k, cap, &a, &b, &mut base);
    for target in 0..side * side {
        let (ti, tj) = (target / side, target % side);
        let (mut a2, mut b2) = (a.clone(), b.clone());
        for f in 0..side * side {
            if f / side > ti || f % side > tj {
                a2[f] += 9.0;
                b2[f] -= 4.0;
            }
        }
        let mut out = vec![0.0; side * side];
        tensor_product_into(k, cap, &a2, &b2, &mut out);
        assert_eq!(out[target].to_bits(), base[target].to_bits(), "multi-index ({ti},{tj})");
    }
}

#[test]
fn markov_mass_in_box_is_at_most_one() {
    let g = MultiTypeGenerator::cyclic_cross_production(3, 0.95, 1.0, 0.6).unwrap();
    let p = closure_solve_multi(&g, &TensorWindow::delta(3, 6, &[1, 0, 0]), 0.5, &ClosureOptions::default()).unwrap();
    let s = p.sum();
    assert!(s <= 1.0 + 1e-10 && s > 0.99, "{s}");
}

#[test]
fn shape_checks() {
    let g = MultiTypeGenerator::cyclic_cross_production(2, 0.95, 1.0, 0.6).unwrap();
    let s = integrate_closure_multi(&g, 4, 0.5, 1e-10).unwrap();
    assert!(multi_composition(&s, &TensorWindow::delta(2, 5, &[0, 0])).is_err());
    assert!(multi_composition(&s, &TensorWindow::delta(3, 4, &[0, 0, 0])).is_err());
    assert!(integrate_closure_multi_with(&g, 0, 0.5, &ClosureOptions::default()).is_err());
    assert!(MultiTypeGenerator::new(vec![vec![term(&[-2, 0], 1.0)], vec![]], vec![]).is_err());
    assert!(MultiTypeGenerator::new(vec![vec![], vec![]], vec![term(&[-1, 0], 1.0)]).is_err());
}
