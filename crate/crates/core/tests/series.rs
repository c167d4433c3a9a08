mod common;

use common::{naive_conv, naive_conv2, rng, uniform_vec};
use linrate::series::{
    cauchy_power_coefficients, cauchy_product, fft_cauchy_product, l1_distance, tensor_cauchy_product,
    tensor_fft_cauchy_product, FftWorkspace, SeriesWindow, TensorWindow,
};
use linrate::Error;
use proptest::prelude::*;

fn sw(v: &[f64]) -> SeriesWindow {
    SeriesWindow::new(v.to_vec()).unwrap()
}

#[test]
fn binomial_square() {
    assert_eq!(cauchy_product(&sw(&[1.0, 1.0, 0.0]), &sw(&[1.0, 1.0, 0.0])).unwrap().coeffs(), &[1.0, 2.0, 1.0]);
}

#[test]
fn delta_is_identity() {
    let a = sw(&[0.3, -1.2, 4.0, 0.5]);
    assert_eq!(cauchy_product(&a, &SeriesWindow::monomial(3, 0)).unwrap(), a);
}

#[test]
fn z_times_z() {
    let z = sw(&[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(cauchy_product(&z, &z).unwrap().coeffs(), &[0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn cap_mismatch_is_rejected() {
    let r = cauchy_product(&sw(&[1.0, 2.0]), &sw(&[1.0, 2.0, 3.0]));
    assert!(matches!(r, Err(Error::CapMismatch { left: 1, right: 2 })));
    assert!(fft_cauchy_product(&sw(&[1.0]), &sw(&[1.0, 2.0]), None).is_err());
}

#[test]
fn power_examples() {
    assert_eq!(cauchy_power_coefficients(&sw(&[0.0, 1.0, 0.0]), 0).coeffs(), &[1.0, 0.0, 0.0]);
    assert_eq!(cauchy_power_coefficients(&sw(&[0.0, 1.0, 0.0, 0.0]), 3).coeffs(), &[0.0, 0.0, 0.0, 1.0]);
    assert_eq!(cauchy_power_coefficients(&sw(&[1.0, 1.0]), 2).coeffs(), &[1.0, 2.0]);
}

#[test]
fn power_equals_chained_products_exactly() {
    let mut r = rng(7);
    let a = sw(&uniform_vec(&mut r, 20));
    let mut chained = a.clone();
    for _ in 1..5 {
        chained = cauchy_product(&chained, &a).unwrap();
    }
    assert_eq!(cauchy_power_coefficients(&a, 5), chained);
}

#[test]
fn fft_matches_direct_on_small_examples() {
    let cases = [
        (vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]),
        (vec![0.3, -1.2, 4.0, 0.5], vec![1.0, 0.0, 0.0, 0.0]),
        (vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]),
    ];
    for (a, b) in cases {
        let d = cauchy_product(&sw(&a), &sw(&b)).unwrap();
        let f = fft_cauchy_product(&sw(&a), &sw(&b), None).unwrap();
        assert!(l1_distance(&d, &f).unwrap() <= 1e-12);
    }
    let mut r = rng(11);
    let mut ws = FftWorkspace::new();
    for cap in [1usize, 7, 31, 64] {
        let a = sw(&uniform_vec(&mut r, cap + 1));
        let b = sw(&uniform_vec(&mut r, cap + 1));
        let d = naive_conv(a.coeffs(), b.coeffs());
        let f = fft_cauchy_product(&a, &b, Some(&mut ws)).unwrap();
        let dev = d.iter().zip(f.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-12, "cap {cap}: {dev:e}");
    }
}

#[test]
fn fft_identity_is_exact() {
    let a = sw(&[0.25, -0.5, 0.125, 1.0]);
    let f = fft_cauchy_product(&a, &SeriesWindow::monomial(3, 0), None).unwrap();
    let dev = a.coeffs().iter().zip(f.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dev <= 1e-15);
}

#[test]
fn fft_matches_direct_at_cap_512_and_4096() {
    let mut r = rng(3);
    let mut ws = FftWorkspace::new();
    for cap in [512usize, 4096] {
        let a = sw(&uniform_vec(&mut r, cap + 1));
        let b = sw(&uniform_vec(&mut r, cap + 1));
        let d = cauchy_product(&a, &b).unwrap();
        let f = fft_cauchy_product(&a, &b, Some(&mut ws)).unwrap();
        let dev = d.coeffs().iter().zip(f.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-10, "cap {cap}: {dev:e}");
    }
}

#[test]
fn lower_triangularity_is_bit_exact() {
    let mut r = rng(5);
    let a = uniform_vec(&mut r, 16);
    let b = uniform_vec(&mut r, 16);
    let base = cauchy_product(&sw(&a), &sw(&b)).unwrap();
    for n in 0..15 {
        let (mut a2, mut b2) = (a.clone(), b.clone());
        for k in n + 1..16 {
            a2[k] += 3.0;
            b2[k] -= 7.0;
        }
        let pert = cauchy_product(&sw(&a2), &sw(&b2)).unwrap();
        assert_eq!(&base.coeffs()[..=n], &pert.coeffs()[..=n]);
    }
}

#[test]
fn tensor_examples() {
    let mut r = rng(9);
    let a = TensorWindow::from_vec(2, 3, uniform_vec(&mut r, 16)).unwrap();
    let one = TensorWindow::delta(2, 3, &[0, 0]);
    assert_eq!(tensor_cauchy_product(&one, &a).unwrap(), a);
    let e = TensorWindow::delta(2, 3, &[1, 0]);
    assert_eq!(tensor_cauchy_product(&e, &e).unwrap(), TensorWindow::delta(2, 3, &[2, 0]));
}

#[test]
fn tensor_fft_matches_naive_convolution() {
    let mut r = rng(13);
    let side = 5;
    let a = TensorWindow::from_vec(2, 4, uniform_vec(&mut r, side * side)).unwrap();
    let b = TensorWindow::from_vec(2, 4, uniform_vec(&mut r, side * side)).unwrap();
    let naive = naive_conv2(side, a.coeffs(), b.coeffs());
    let direct = tensor_cauchy_product(&a, &b).unwrap();
    let fft = tensor_fft_cauchy_product(&a, &b, None).unwrap();
    for ((n, d), f) in naive.iter().zip(direct.coeffs()).zip(fft.coeffs()) {
        assert!((n - d).abs() <= 1e-14);
        assert!((n - f).abs() <= 1e-12);
    }
}

#[test]
fn tensor_fft_three_axes() {
    let mut r = rng(17);
    let a = TensorWindow::from_vec(3, 3, uniform_vec(&mut r, 64)).unwrap();
    let b = TensorWindow::from_vec(3, 3, uniform_vec(&mut r, 64)).unwrap();
    let d = tensor_cauchy_product(&a, &b).unwrap();
    let f = tensor_fft_cauchy_product(&a, &b, Some(&mut FftWorkspace::new())).unwrap();
    assert!(l1_distance(&d, &f).unwrap() <= 1e-11);
}

#[test]
fn tensor_outer_marginal_restrict() {
    let f1 = sw(&[0.5, 0.3, 0.2]);
    let f2 = sw(&[0.1, 0.6, 0.3]);
    let t = TensorWindow::outer(&[f1.clone(), f2.clone()]).unwrap();
    assert!(l1_distance(&t.marginal(0), &f1).unwrap() < 1e-15);
    assert!(l1_distance(&t.marginal(1), &f2).unwrap() < 1e-15);
    let small = t.restricted(1).unwrap();
    assert_eq!(small.get(&[1, 1]), 0.3 * 0.6);
    assert!(t.restricted(5).is_err());
}

#[test]
fn windows_reject_non_finite() {
    assert!(SeriesWindow::new(vec![1.0, f64::NAN]).is_err());
    assert!(SeriesWindow::new(vec![]).is_err());
    assert!(TensorWindow::from_vec(2, 1, vec![0.0; 3]).is_err());
}

fn series(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #[test]
    fn product_commutes(a in series(12), b in series(12)) {
        let ab = cauchy_product(&sw(&a), &sw(&b)).unwrap();
        let ba = cauchy_product(&sw(&b), &sw(&a)).unwrap();
        prop_assert!(l1_distance(&ab, &ba).unwrap() <= 1e-14);
    }

    #[test]
    fn product_associates(a in series(10), b in series(10), c in series(10)) {
        let l = cauchy_product(&cauchy_product(&sw(&a), &sw(&b)).unwrap(), &sw(&c)).unwrap();
        let r = cauchy_product(&sw(&a), &cauchy_product(&sw(&b), &sw(&c)).unwrap()).unwrap();
        let dev = l.coeffs().iter().zip(r.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-14);
    }

    #[test]
    fn fft_agrees_with_direct(a in series(40), b in series(40)) {
        let d = cauchy_product(&sw(&a), &sw(&b)).unwrap();
        let f = fft_cauchy_product(&sw(&a), &sw(&b), None).unwrap();
        let dev = d.coeffs().iter().zip(f.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-10);
    }
}
