use grushin_core::extensions::*;
use grushin_core::matrix::CMatrix;
use grushin_core::params::{indicial_data, GrushinParams};
use grushin_core::Complex64;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn cx() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn cx2() -> impl Strategy<Value = [Complex64; 2]> {
    (cx(), cx()).prop_map(|(a, b)| [a, b])
}

fn arb_jet(modes: usize) -> impl Strategy<Value = BoundaryJet> {
    proptest::collection::vec((cx2(), cx2()), modes).prop_map(|v| {
        BoundaryJet::new(v.into_iter().enumerate().map(|(k, (p, m))| ModeJet::new(vec![k as i64], p, m)).collect())
    })
}

fn hermitian() -> impl Strategy<Value = CMatrix> {
    (-3.0..3.0f64, -3.0..3.0f64, cx()).prop_map(|(a, d, b)| {
        CMatrix::from_rows(&[vec![Complex64::new(a, 0.0), b], vec![b.conj(), Complex64::new(d, 0.0)]]).unwrap()
    })
}

fn arb_family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Friedrichs),
        (-5.0..5.0f64).prop_map(|gamma| Family::RightRobin { gamma }),
        (-5.0..5.0f64).prop_map(|gamma| Family::LeftRobin { gamma }),
        (cx(), -5.0..5.0f64).prop_map(|(b, gamma)| Family::Transmission { b, gamma }),
        hermitian().prop_map(|gamma| Family::Cayley { gamma }),
    ]
}

fn admitted(spec: &ExtensionSpec, free: &[[Complex64; 2]]) -> BoundaryJet {
    BoundaryJet::new(free.iter().enumerate().map(|(k, w)| spec.admissible_mode(vec![k as i64], *w)).collect())
}

/// Random unitary `e^{iφ}[[a, −b̄], [b, ā]]` with `|a|² + |b|² = 1`.
fn unitary() -> impl Strategy<Value = CMatrix> {
    (0.0..6.3f64, 0.0..6.3f64, 0.0..6.3f64, 0.0..1.57f64).prop_map(|(phi, s, t, th)| {
        let e = Complex64::from_polar(1.0, phi);
        let a = Complex64::from_polar(th.cos(), s);
        let b = Complex64::from_polar(th.sin(), t);
        CMatrix::from_rows(&[vec![e * a, -e * b.conj()], vec![e * b, e * a.conj()]]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn antisymmetry(u in arb_jet(3), v in arb_jet(3), neg in any::<bool>()) {
        let regime = if neg { FormRegime::MuNeg } else { FormRegime::MuPos };
        let w1 = asymmetry_form_in(&u, &v, regime, 2.5).unwrap();
        let w2 = asymmetry_form_in(&v, &u, regime, 2.5).unwrap();
        prop_assert!((w1 + w2.conj()).norm() < 1e-12);
        let wu = asymmetry_form_in(&u, &u, regime, 2.5).unwrap();
        prop_assert!(wu.re.abs() < 1e-12);
    }

    #[test]
    fn families_are_unitary_and_isotropic(f in arb_family(), pairs in proptest::collection::vec((cx2(), cx2()), 1000)) {
        let spec = named_family(f).unwrap();
        prop_assert!(spec.u.unitarity_defect() < 1e-12);
        for (a, b) in pairs {
            let u = admitted(&spec, &[a]);
            let v = admitted(&spec, &[b]);
            let w = asymmetry_form_in(&u, &v, spec.regime, 1.0).unwrap();
            prop_assert!(w.norm() < 1e-10 * (1.0 + u.norm() * v.norm()));
        }
    }

    #[test]
    fn arbitrary_unitaries_are_isotropic(u in unitary(), neg in any::<bool>(), a in cx2(), b in cx2()) {
        let regime = if neg { FormRegime::MuNeg } else { FormRegime::MuPos };
        let spec = ExtensionSpec::new(regime, u).unwrap();
        let w = asymmetry_form_in(&admitted(&spec, &[a]), &admitted(&spec, &[b]), regime, 3.0).unwrap();
        prop_assert!(w.norm() < 1e-10 * (1.0 + a[0].norm() + a[1].norm()) * (1.0 + b[0].norm() + b[1].norm()));
    }

    #[test]
    fn relations_match_graph(f in arb_family(), jets in proptest::collection::vec((cx2(), cx2(), cx2()), 1000)) {
        let spec = named_family(f.clone()).unwrap();
        for (w, p, m) in jets {
            // Admitted jets satisfy the listed relations.
            let j = spec.admissible_mode(vec![0], w);
            prop_assert!(f.relations(&j).iter().all(|r| r.norm() < 1e-10 * (1.0 + w[0].norm() + w[1].norm())));
            // A generic jet satisfies the relations exactly when it satisfies the graph.
            let g = ModeJet::new(vec![0], p, m);
            let by_relations = f.relations(&g).iter().all(|r| r.norm() < 1e-9);
            prop_assert_eq!(by_relations, spec.admits(&BoundaryJet::single(g), 1e-9));
        }
    }

    #[test]
    fn friedrichs_kills_minus_coefficients(w in cx2()) {
        let spec = named_family(Family::Friedrichs).unwrap();
        let j = spec.admissible_mode(vec![1], w);
        prop_assert_eq!(j.a_minus, [Complex64::new(0.0, 0.0); 2]);
    }

    #[test]
    fn cayley_is_injective(g1 in hermitian(), g2 in hermitian()) {
        let u1 = cayley(&g1).unwrap();
        let u2 = cayley(&g2).unwrap();
        prop_assert!(u1.unitarity_defect() < 1e-12);
        let dg = (&g1 - &g2).max_abs();
        if dg > 1e-6 {
            prop_assert!((&u1 - &u2).max_abs() > 0.0);
        }
    }
}

#[test]
fn maximality_witnesses() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = (arb_family(), arb_jet(3), 0usize..3);
    let mut found = 0;
    while found < 100 {
        let (f, v, k) = strat.new_tree(&mut runner).unwrap().current();
        let spec = named_family(f).unwrap();
        if spec.admits(&BoundaryJet::single(v.modes[k].clone()), 1e-8) {
            continue;
        }
        let w = maximality_witness(&spec, &v, k, 1.0).unwrap();
        assert!(spec.admits(&w.u, 1e-12));
        assert!(w.pairing.norm() > 1e-8 * v.norm(), "{w:?}");
        for (i, m) in w.u.modes.iter().enumerate() {
            if i != k {
                assert!(m.a_plus.iter().chain(&m.a_minus).all(|z| z.norm() == 0.0));
            }
        }
        found += 1;
    }
}

fn green(params: &GrushinParams, seed: u64) {
    let mut runner = proptest::test_runner::TestRunner::new_with_rng(
        Default::default(),
        proptest::test_runner::TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &[seed as u8; 32]),
    );
    for _ in 0..5 {
        let u = arb_jet(2).new_tree(&mut runner).unwrap().current();
        let v = arb_jet(2).new_tree(&mut runner).unwrap().current();
        let g = greens_identity_check(params, &u, &v, &GreensOptions::default()).unwrap();
        assert!(g.relative_error < 1e-4, "{params:?} {g:?}");
    }
}

#[test]
fn greens_identity_negative_mu() {
    let params = GrushinParams::new(1.0, 1, 1.0).unwrap();
    assert_eq!(indicial_data(&params).mu, -12.0);
    green(&params, 1);
    green(&GrushinParams::new(0.3, 2, 0.9).unwrap(), 2);
}

#[test]
fn greens_identity_positive_mu() {
    green(&GrushinParams::new(0.5, 1, 0.0).unwrap(), 3);
    green(&GrushinParams::new(-0.4, 3, 0.1).unwrap(), 4);
    // √μ = 1 ∈ Θ: the minus solution carries a log term.
    green(&GrushinParams::new(1.0, 1, 3.0 / 16.0).unwrap(), 5);
}
