use std::collections::BTreeMap;

use linrate::generators::{
    model_zoo, polynomials_of, truncate_generator, LinearRateGenerator, MatrixTelegraphModel, Model, ModelConfig,
    MultiTypeGenerator, SparseOperator, MODEL_CONFIG_SCHEMA, ZOO_NAMES,
};
use linrate::Error;

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn linear(name: &str, kv: &[(&str, f64)]) -> LinearRateGenerator {
    match model_zoo(name, &params(kv)).unwrap() {
        Model::Linear(g) => g,
        m => panic!("{name} built a {} model", m.kind()),
    }
}

#[test]
fn binary_bd_polynomials() {
    let (l, m) = (1.3, 0.7);
    let p = polynomials_of(&linear("binary_bd", &[("lambda", l), ("mu", m)]));
    assert_eq!(p.a.coeffs(), &[m, -(l + m), l]);
    assert!(p.b.coeffs().iter().all(|&c| c == 0.0));
    assert!(!p.has_source());
}

#[test]
fn mm_inf_polynomials() {
    let p = polynomials_of(&linear("mm_inf", &[("nu", 2.0), ("mu", 1.0)]));
    // A(z) = μ − μz, B(z) = ν(z − 1)
    assert_eq!(&p.a.coeffs()[..2], &[1.0, -1.0]);
    assert!(p.a.coeffs()[2..].iter().all(|&c| c == 0.0));
    assert_eq!(p.b.coeffs(), &[-2.0, 2.0]);
}

#[test]
fn empty_generator_polynomials() {
    let p = polynomials_of(&LinearRateGenerator::new());
    assert!(p.a.coeffs().iter().all(|&c| c == 0.0));
    assert!(p.b.coeffs().iter().all(|&c| c == 0.0));
}

#[test]
fn conservative_polynomials_vanish_at_one() {
    for name in ["binary_bd", "bdi", "mm_inf"] {
        let p = polynomials_of(&linear(name, &[]));
        assert!(p.a.eval(1.0).abs() < 1e-14, "{name}");
        assert!(p.b.eval(1.0).abs() < 1e-14, "{name}");
    }
}

#[test]
fn polynomials_round_trip() {
    for name in ["binary_bd", "bdi", "mm_inf", "signed_mm_inf"] {
        let g = linear(name, &[]);
        assert_eq!(polynomials_of(&g).to_generator().unwrap(), g, "{name}");
    }
    let g = LinearRateGenerator::new().with_rate(3, 0.2, 0.1).unwrap().with_rate(-1, 0.5, 0.0).unwrap();
    assert_eq!(polynomials_of(&g).to_generator().unwrap(), g);
}

#[test]
fn generator_invariants_enforced() {
    assert!(LinearRateGenerator::new().with_rate(-2, 1.0, 0.0).is_err());
    assert!(LinearRateGenerator::new().with_rate(-1, 1.0, 0.5).is_err());
    assert!(LinearRateGenerator::new().with_rate(1, f64::NAN, 0.0).is_err());
    assert!(LinearRateGenerator::markov(&[(1, -1.0, 0.0)]).is_err());
}

#[test]
fn truncate_binary_bd_at_one() {
    let (l, m) = (1.5, 2.0);
    let op = truncate_generator(&linear("binary_bd", &[("lambda", l), ("mu", m)]), 1);
    let d = op.to_dense();
    assert_eq!(d[(0, 1)], m);
    assert_eq!(d[(1, 0)], 0.0);
    assert_eq!(d[(0, 0)], 0.0);
    assert_eq!(d[(1, 1)], -(l + m));
}

#[test]
fn truncate_pure_death_at_zero() {
    let op = truncate_generator(&LinearRateGenerator::markov(&[(-1, 1.0, 0.0)]).unwrap(), 0);
    assert_eq!(op.to_dense()[(0, 0)], 0.0);
}

#[test]
fn truncate_mm_inf_at_two() {
    let d = truncate_generator(&linear("mm_inf", &[]), 2).to_dense();
    assert_eq!((d[(0, 1)], d[(1, 2)]), (1.0, 2.0));
    assert_eq!((d[(1, 0)], d[(2, 1)]), (2.0, 2.0));
    assert_eq!((d[(0, 0)], d[(1, 1)], d[(2, 2)]), (-2.0, -3.0, -4.0));
}

#[test]
fn truncated_columns_leak_only_at_the_cap() {
    for name in ["binary_bd", "bdi", "mm_inf"] {
        let cap = 12;
        let sums = truncate_generator(&linear(name, &[]), cap).column_sums();
        for (n, s) in sums.iter().enumerate() {
            assert!(*s <= 1e-14, "{name} column {n}");
            if n < cap {
                assert!(s.abs() < 1e-14, "{name} column {n} leaks");
            }
        }
        assert!(sums[cap] < 0.0, "{name} top column keeps its outflow");
    }
}

#[test]
fn schlogl_defaults_and_structure() {
    let m = match model_zoo("schlogl", &BTreeMap::new()).unwrap() {
        Model::Hybrid(h) => h,
        _ => panic!(),
    };
    assert_eq!((m.species(), m.cap()), (1, 200));
    let aff = &m.affine()[0];
    assert_eq!(aff.rate(1).beta, 0.25 * 25.0);
    assert_eq!(aff.rate(-1).alpha, 2.95);
    let rem = m.remainder();
    for &(r, c, _) in rem.triplets() {
        assert!(r.abs_diff(c) <= 1, "remainder entry ({r},{c}) off the tridiagonal");
    }
    // 2X → 3X at k1 n(n−1)/V, 3X → 2X at k−1 n(n−1)(n−2)/V².
    assert!((rem.get(6, 5) - 3.0 * 20.0 / 25.0).abs() < 1e-12);
    assert!((rem.get(4, 5) - 0.6 * 60.0 / 625.0).abs() < 1e-12);
    assert!(rem.column_sums()[..200].iter().all(|s| s.abs() < 1e-10));
}

#[test]
fn predator_prey_bilinear_entries() {
    let m = match model_zoo("predator_prey_K", &params(&[("K", 2.0), ("N", 4.0)])).unwrap() {
        Model::Hybrid(h) => h,
        _ => panic!(),
    };
    let rem = m.remainder();
    // state (x, y) = (3, 2) → (2, 3) at γ·3·2.
    let from = 3 * 5 + 2;
    let to = 2 * 5 + 3;
    assert!((rem.get(to, from) - 0.1 * 6.0).abs() < 1e-15);
    assert!((rem.get(from, from) + 0.6).abs() < 1e-15);
    assert_eq!(m.affine()[0].rate(1).beta, 10.0);
    assert_eq!(m.affine()[1].rate(1).beta, 0.5);
    let cyc = match model_zoo("predator_prey_K", &params(&[("K", 3.0), ("N", 2.0)])).unwrap() {
        Model::Hybrid(h) => h,
        _ => panic!(),
    };
    // (1,0,1): species 2 preys on... cyclic pair (2,0) moves (x2−1, x0+1).
    let f = 9 + 1;
    let t = 2 * 9;
    assert!((cyc.remainder().get(t, f) - 0.1).abs() < 1e-15);
}

#[test]
fn telegraph_defaults() {
    let m = match model_zoo("telegraph_gr", &params(&[("n_T", 6.0)])).unwrap() {
        Model::Telegraph(t) => t,
        _ => panic!(),
    };
    assert_eq!(m.hidden_states(), 6);
    assert_eq!(m.a()[(1, 0)], 0.35);
    assert_eq!(m.a()[(0, 1)], 0.55);
    assert_eq!(m.b()[(2, 1)], 6.0);
    assert_eq!(m.b()[(1, 5)], 6.0);
    assert_eq!(m.mu(), 1.0);
    let s = m.a() + m.b();
    for j in 0..6 {
        assert!(s.column(j).sum().abs() < 1e-14);
    }
}

#[test]
fn zoo_errors() {
    assert!(matches!(model_zoo("nope", &BTreeMap::new()), Err(Error::UnknownModel(_))));
    assert!(matches!(model_zoo("mm_inf", &params(&[("mu", 0.0)])), Err(Error::InvalidParameter { .. })));
    assert!(matches!(model_zoo("bdi", &params(&[("mu", -1.0)])), Err(Error::InvalidParameter { .. })));
    assert!(matches!(model_zoo("mm_inf", &params(&[("lambda", 1.0)])), Err(Error::InvalidParameter { .. })));
    assert!(model_zoo("schlogl", &params(&[("N", 2.5)])).is_err());
    for name in ZOO_NAMES {
        assert!(model_zoo(name, &BTreeMap::new()).is_ok(), "{name}");
    }
}

#[test]
fn config_round_trip() {
    let text = format!(r#"{{"schema": "{MODEL_CONFIG_SCHEMA}", "model": "bdi", "params": {{"nu": 3.0}}}}"#);
    let cfg = ModelConfig::from_json(&text).unwrap();
    assert_eq!(cfg.params["nu"], 3.0);
    match cfg.build().unwrap() {
        Model::Linear(g) => assert_eq!(g.rate(1).beta, 3.0),
        _ => panic!(),
    }
    let back: ModelConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert!(ModelConfig::from_json(r#"{"schema": "other/9", "model": "bdi"}"#).is_err());
}

#[test]
fn telegraph_validation() {
    use nalgebra::DMatrix;
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
    let b = DMatrix::zeros(2, 2);
    assert!(MatrixTelegraphModel::new(a.clone(), b.clone(), 1.0, true).is_ok());
    assert!(MatrixTelegraphModel::new(a.clone(), b.clone(), 0.0, true).is_err());
    let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.5, 0.0]);
    assert!(MatrixTelegraphModel::new(bad.clone(), b.clone(), 1.0, true).is_err());
    assert!(MatrixTelegraphModel::new(bad, b, 1.0, false).is_ok());
}

#[test]
fn joint_generator_conserves_below_cap() {
    let m = MatrixTelegraphModel::gr_chain(6, 0.35, 0.55, 6.0, 1.0).unwrap();
    let cap = 10;
    let sums = m.joint_generator(cap).column_sums();
    for (i, s) in sums.iter().enumerate() {
        if i / 6 < cap {
            assert!(s.abs() < 1e-13, "column {i}: {s}");
        }
    }
}

#[test]
fn sparse_operator_assembly() {
    let op = SparseOperator::from_triplets(3, vec![(0, 1, 1.0), (0, 1, 2.0), (2, 2, 0.0)]).unwrap();
    assert_eq!(op.nnz(), 1);
    assert_eq!(op.get(0, 1), 3.0);
    assert!(SparseOperator::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    assert!(op.clone().with_band(0, 0).is_err());
    assert_eq!(op.with_band(0, 1).unwrap().band().unwrap().upper, 1);
}

#[test]
fn multitype_truncation_is_markov_inside() {
    let g = MultiTypeGenerator::cyclic_cross_production(2, 0.95, 1.0, 0.6).unwrap();
    let op = g.truncate(3);
    let sums = op.column_sums();
    // (0,0) and (1,0) have no cut transitions.
    assert!(sums[0].abs() < 1e-15);
    assert!(sums[4].abs() < 1e-14);
    assert!(sums.iter().all(|&s| s <= 1e-14));
}
