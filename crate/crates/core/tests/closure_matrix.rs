mod common;

use common::{l1, linf, loglog_slope, poisson, rng};
use linrate::baselines::dense_expm_action;
use linrate::closure::{
    apply_multiplier, binomial_thinning_half, closure_richardson_solve, closure_solve, integrate_matrix_multiplier,
    integrate_matrix_multiplier_adaptive, matrix_closure_solve, production_half_step, purebd_richardson_solve,
    purebd_strang_solve, telegraph_characteristic, JointArray,
};
use linrate::{LinearRateGenerator, MatrixTelegraphModel, SeriesWindow};
use nalgebra::DMatrix;
use rand::Rng;

/// `exp(At)` for the two-state switch `A = [[−a, b], [a, −b]]`.
fn switch_expm(a: f64, b: f64, t: f64) -> DMatrix<f64> {
    let s = a + b;
    let e = (-s * t).exp();
    let (p0, p1) = (b / s, a / s);
    DMatrix::from_row_slice(2, 2, &[p0 + p1 * e, p0 - p0 * e, p1 - p1 * e, p1 + p0 * e])
}

fn silent_switch(a: f64, b: f64) -> MatrixTelegraphModel {
    let am = DMatrix::from_row_slice(2, 2, &[-a, b, a, -b]);
    MatrixTelegraphModel::new(am, DMatrix::zeros(2, 2), 1.0, true).unwrap()
}

fn binom_pmf(n: usize, k: usize, s: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * s.powi(k as i32) * (1.0 - s).powi((n - k) as i32)
}

#[test]
fn characteristic_examples() {
    assert_eq!(telegraph_characteristic(1.3, 2.0, 1.0), 1.0);
    assert_eq!(telegraph_characteristic(1.3, 0.0, 0.37), 0.37);
    assert!((telegraph_characteristic(1.0, 1.0, 0.0) - 0.632121).abs() < 1e-6);
}

#[test]
fn multiplier_seed_at_time_zero() {
    let m = MatrixTelegraphModel::gr_chain(4, 0.35, 0.55, 6.0, 1.0).unwrap();
    let s = integrate_matrix_multiplier(&m, 5, 0.0, 10).unwrap();
    assert_eq!(s.blocks[0], DMatrix::identity(4, 4));
    assert!(s.blocks[1..].iter().all(|b| b.iter().all(|&v| v == 0.0)));
}

#[test]
fn silent_hidden_chain_gives_exp_at() {
    let (a, b, t) = (0.35, 0.55, 1.7);
    let s = integrate_matrix_multiplier(&silent_switch(a, b), 6, t, 2000).unwrap();
    assert!((&s.blocks[0] - switch_expm(a, b, t)).amax() < 1e-12);
    assert!(s.blocks[1..].iter().all(|k| k.amax() == 0.0));

    let p = matrix_closure_solve(&silent_switch(a, b), &JointArray::at_zero_count(&[1.0, 0.0], 6), 6, t, 2000).unwrap();
    let expect = switch_expm(a, b, t).column(0).clone_owned();
    assert!((p.values().column(0) - expect).amax() < 1e-12);
    assert!(p.values().columns(1, 6).amax() == 0.0);
}

// K^{(m)} = Poisson(c) with c = ν(1 − e^{−μt})/μ, so K^{(0)} = e^{−c} ≈ 0.282454.
#[test]
fn single_state_immigration_is_poisson() {
    let (nu, mu, t, cap): (f64, f64, f64, usize) = (2.0, 1.0, 1.0, 20);
    let c = nu * (1.0 - (-mu * t).exp()) / mu;
    let m = MatrixTelegraphModel::single_state(nu, mu).unwrap();
    let (s, _) = integrate_matrix_multiplier_adaptive(&m, cap, t, 1e-12, 1e-15).unwrap();
    assert!((s.blocks[0][(0, 0)] - 0.2824536).abs() < 1e-7);
    let k: Vec<f64> = s.blocks.iter().map(|b| b[(0, 0)]).collect();
    assert!(linf(&k, &poisson(c, cap)) < 1e-11);

    let p = matrix_closure_solve(&m, &JointArray::at_zero_count(&[1.0], cap), cap, t, 400).unwrap();
    assert!(l1(p.as_flat(), &poisson(c, cap)) < 1e-10);
}

#[test]
fn single_state_reduces_to_scalar_closure() {
    let (nu, mu, t, cap) = (2.0, 1.0, 1.5, 25);
    let scalar = LinearRateGenerator::markov(&[(1, 0.0, nu), (-1, mu, 0.0)]).unwrap();
    let mut init = vec![0.0; cap + 1];
    init[3] = 1.0;
    let s = closure_solve(&scalar, &SeriesWindow::new(init.clone()).unwrap(), cap, t).unwrap();
    let m = MatrixTelegraphModel::single_state(nu, mu).unwrap();
    let (k, _) = integrate_matrix_multiplier_adaptive(&m, cap, t, 1e-13, 1e-16).unwrap();
    let p = apply_multiplier(&k, &JointArray::from_flat(1, cap, init).unwrap()).unwrap();
    assert!(linf(p.as_flat(), s.coeffs()) < 1e-12);
}

#[test]
fn two_state_matches_dense_expm() {
    let (cap, t) = (40, 2.0);
    let m = MatrixTelegraphModel::two_state(0.35, 0.55, 5.0, 1.0).unwrap();
    let init = JointArray::at_zero_count(&[1.0, 0.0], cap);
    let big = cap + 50;
    let d =
        dense_expm_action(&m.joint_generator(big), JointArray::at_zero_count(&[1.0, 0.0], big).as_flat(), t).unwrap();
    let d = &d[..2 * (cap + 1)];

    let (k, _) = integrate_matrix_multiplier_adaptive(&m, cap, t, 1e-12, 1e-15).unwrap();
    let adaptive = apply_multiplier(&k, &init).unwrap();
    assert!(l1(adaptive.as_flat(), d) <= 1e-8);
    let rk4 = matrix_closure_solve(&m, &init, cap, t, 400).unwrap();
    assert!(l1(rk4.as_flat(), d) <= 1e-8);
}

#[test]
fn gr_chain_with_counts_present_matches_dense_expm() {
    let (cap, t) = (30, 1.0);
    let m = MatrixTelegraphModel::gr_chain(4, 0.35, 0.55, 6.0, 1.0).unwrap();
    let mut flat = vec![0.0; 4 * (cap + 1)];
    flat[2 * 4] = 0.6;
    flat[5 * 4 + 1] = 0.4;
    let init = JointArray::from_flat(4, cap, flat.clone()).unwrap();
    let (k, _) = integrate_matrix_multiplier_adaptive(&m, cap, t, 1e-12, 1e-15).unwrap();
    let p = apply_multiplier(&k, &init).unwrap();
    let big = cap + 50;
    flat.resize(4 * (big + 1), 0.0);
    let d = dense_expm_action(&m.joint_generator(big), &flat, t).unwrap();
    assert!(l1(p.as_flat(), &d[..4 * (cap + 1)]) <= 1e-8);
}

#[test]
fn multiplier_blocks_do_not_depend_on_window() {
    let m = MatrixTelegraphModel::gr_chain(5, 0.35, 0.55, 6.0, 1.0).unwrap();
    let small = integrate_matrix_multiplier(&m, 8, 0.9, 60).unwrap();
    let large = integrate_matrix_multiplier(&m, 20, 0.9, 60).unwrap();
    assert_eq!(small.blocks[..], large.blocks[..9]);
}

#[test]
fn thinning_examples() {
    let mut p = JointArray::zeros(1, 4);
    p.values_mut()[(0, 1)] = 1.0;
    assert_eq!(binomial_thinning_half(&p, 1.0, 0.0).unwrap(), p);
    let h = binomial_thinning_half(&p, 1.0, 2f64.ln()).unwrap();
    assert!(linf(h.as_flat(), &[0.5, 0.5, 0.0, 0.0, 0.0]) < 1e-15);
    assert!(binomial_thinning_half(&p, 1.0, -0.1).is_err());
}

#[test]
fn thinning_matches_binomial_oracle_and_keeps_row_mass() {
    let (n, cap, mu, dt) = (3, 30, 0.8, 0.45);
    let mut r = rng(9);
    let flat: Vec<f64> = (0..n * (cap + 1)).map(|_| r.random_range(0.0..1.0)).collect();
    let p = JointArray::from_flat(n, cap, flat).unwrap();
    let h = binomial_thinning_half(&p, mu, dt).unwrap();
    let s = (-mu * dt).exp();
    for a in 0..n {
        for k in 0..=cap {
            let expect: f64 = (k..=cap).map(|m| p.get(a, m) * binom_pmf(m, k, s)).sum();
            assert!((h.get(a, k) - expect).abs() < 1e-13);
        }
    }
    for (x, y) in h.hidden_marginal().iter().zip(p.hidden_marginal()) {
        assert!((x - y).abs() < 1e-14 * y.max(1.0) * cap as f64);
    }
}

#[test]
fn production_step_without_b_is_exp_a() {
    let (a, b, dt) = (0.7, 0.4, 0.8);
    let mut r = rng(2);
    let flat: Vec<f64> = (0..2 * 6).map(|_| r.random_range(0.0..1.0)).collect();
    let p = JointArray::from_flat(2, 5, flat).unwrap();
    let out = production_half_step(&p, &silent_switch(a, b), dt, 400).unwrap();
    let expect = switch_expm(a, b, dt) * p.values();
    assert!((out.values() - expect).amax() < 1e-10);
    assert_eq!(production_half_step(&p, &silent_switch(a, b), 0.0, 4).unwrap(), p);
}

#[test]
fn production_step_is_lower_triangular_in_count() {
    let m = MatrixTelegraphModel::gr_chain(4, 0.35, 0.55, 6.0, 1.0).unwrap();
    let mut r = rng(5);
    let flat: Vec<f64> = (0..4 * 11).map(|_| r.random_range(0.0..1.0)).collect();
    let p = JointArray::from_flat(4, 10, flat).unwrap();
    let base = production_half_step(&p, &m, 0.3, 8).unwrap();
    for cut in 0..10 {
        let mut q = p.clone();
        q.values_mut().columns_mut(cut + 1, 10 - cut).iter_mut().for_each(|v| *v += 3.0);
        let out = production_half_step(&q, &m, 0.3, 8).unwrap();
        assert_eq!(out.values().columns(0, cut + 1), base.values().columns(0, cut + 1), "cut {cut}");
    }
}

#[test]
fn strang_is_exact_when_halves_commute() {
    let (a, b, t) = (0.35, 0.55, 1.2);
    let init = JointArray::at_zero_count(&[0.3, 0.7], 8);
    let expect = switch_expm(a, b, t) * DMatrix::from_column_slice(2, 1, &[0.3, 0.7]);
    for k_s in [1, 3, 10] {
        let p = purebd_strang_solve(&silent_switch(a, b), &init, 8, t, k_s, 400).unwrap();
        assert!((p.values().column(0) - &expect).amax() < 1e-12);
    }
}

fn gr_split_errors(k_list: &[usize], richardson: bool) -> Vec<f64> {
    let (cap, t) = (60, 1.0);
    let m = MatrixTelegraphModel::gr_chain(6, 0.35, 0.55, 6.0, 1.0).unwrap();
    let init = JointArray::at_zero_count(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], cap);
    let (k, _) = integrate_matrix_multiplier_adaptive(&m, cap, t, 1e-13, 1e-16).unwrap();
    let reference = apply_multiplier(&k, &init).unwrap();
    k_list
        .iter()
        .map(|&k_s| {
            let p = if richardson {
                purebd_richardson_solve(&m, &init, cap, t, k_s, 4).unwrap()
            } else {
                purebd_strang_solve(&m, &init, cap, t, k_s, 4).unwrap()
            };
            l1(p.as_flat(), reference.as_flat())
        })
        .collect()
}

#[test]
fn strang_error_quarters_per_doubling() {
    let errs = gr_split_errors(&[10, 20, 40, 80], false);
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() <= 0.5, "{errs:?}");
    }
}

#[test]
fn richardson_split_is_fourth_order() {
    let ks = [10usize, 20, 40, 80];
    let errs = gr_split_errors(&ks, true);
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let slope = loglog_slope(&x, &errs);
    assert!(slope < -3.5, "{slope} {errs:?}");
}

#[test]
fn strang_step_conserves_mass_inside_window() {
    let m = MatrixTelegraphModel::gr_chain(6, 0.35, 0.55, 6.0, 1.0).unwrap();
    let p = purebd_strang_solve(&m, &JointArray::at_zero_count(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 80), 80, 1.0, 20, 4)
        .unwrap();
    assert!((p.sum() - 1.0).abs() < 1e-12);
    assert!(p.as_flat().iter().all(|&v| v > -1e-14));
}

#[test]
fn closure_richardson_uses_fourth_order_weights() {
    let m = MatrixTelegraphModel::gr_chain(4, 0.35, 0.55, 6.0, 1.0).unwrap();
    let init = JointArray::at_zero_count(&[1.0, 0.0, 0.0, 0.0], 20);
    let coarse = matrix_closure_solve(&m, &init, 20, 1.0, 32).unwrap();
    let fine = matrix_closure_solve(&m, &init, 20, 1.0, 64).unwrap();
    let combined = closure_richardson_solve(&m, &init, 20, 1.0, 32).unwrap();
    let manual: Vec<f64> = fine.as_flat().iter().zip(coarse.as_flat()).map(|(f, c)| (16.0 * f - c) / 15.0).collect();
    assert!(linf(combined.as_flat(), &manual) < 1e-15);

    let (k, _) = integrate_matrix_multiplier_adaptive(&m, 20, 1.0, 1e-13, 1e-16).unwrap();
    let reference = apply_multiplier(&k, &init).unwrap();
    assert!(l1(combined.as_flat(), reference.as_flat()) < l1(fine.as_flat(), reference.as_flat()) / 10.0);
}

#[test]
fn contract_violations() {
    let m = MatrixTelegraphModel::gr_chain(4, 0.35, 0.55, 6.0, 1.0).unwrap();
    let init = JointArray::at_zero_count(&[1.0, 0.0, 0.0, 0.0], 5);
    assert!(purebd_strang_solve(&m, &init, 5, 1.0, 0, 4).is_err());
    assert!(JointArray::from_flat(2, 3, vec![0.0; 7]).is_err());
    let k = integrate_matrix_multiplier(&m, 5, 0.5, 10).unwrap();
    assert!(apply_multiplier(&k, &JointArray::at_zero_count(&[1.0, 0.0], 5)).is_err());
    assert!(production_half_step(&init, &m, -0.1, 4).is_err());
    let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.5, 0.0]);
    assert!(MatrixTelegraphModel::new(bad, DMatrix::zeros(2, 2), 1.0, true).is_err());
    assert!(MatrixTelegraphModel::gr_chain(2, 0.35, 0.55, 6.0, 1.0).is_err());
}
