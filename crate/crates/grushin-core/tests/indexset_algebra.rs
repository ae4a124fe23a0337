use std::collections::BTreeSet;

use grushin_core::indexset::*;
use grushin_core::Complex64;
use proptest::prelude::*;

type Model = BTreeSet<(i32, u32)>;

/// Exponents on a half-integer grid (stored doubled), so every sum is exact.
fn arb_model(max: usize) -> impl Strategy<Value = Model> {
    prop::collection::btree_set((0i32..16, 0u32..3), 0..max)
}

fn to_set(m: &Model) -> IndexSet {
    IndexSet::from_real(&m.iter().map(|&(s, p)| (s as f64 / 2.0, p)).collect::<Vec<_>>())
}

fn model_eu(a: &Model, b: &Model) -> Model {
    let mut out: Model = a.union(b).copied().collect();
    for &(s, p) in a {
        for &(t, q) in b {
            if s == t {
                out.insert((s, p + q + 1));
            }
        }
    }
    out
}

fn model_sum(a: &Model, b: &Model) -> Model {
    a.iter().flat_map(|&(s, p)| b.iter().map(move |&(t, q)| (s + t, p + q))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn extended_union_matches_brute_force(a in arb_model(6), b in arb_model(6), c in arb_model(6)) {
        let (ea, eb, ec) = (to_set(&a), to_set(&b), to_set(&c));
        prop_assert_eq!(extended_union(&ea, &eb), to_set(&model_eu(&a, &b)));
        prop_assert_eq!(extended_union(&ea, &eb), extended_union(&eb, &ea));
        prop_assert_eq!(
            extended_union(&extended_union(&ea, &eb), &ec),
            extended_union(&ea, &extended_union(&eb, &ec))
        );
    }

    #[test]
    fn sum_matches_brute_force(a in arb_model(5), b in arb_model(5)) {
        prop_assert_eq!(sum(&to_set(&a), &to_set(&b)), to_set(&model_sum(&a, &b)));
    }

    #[test]
    fn outputs_satisfy_finite_tail(a in arb_model(5), b in arb_model(5), alpha in -0.9f64..3.0) {
        let theta = IndexSet::generated(vec![Exponent::real(0.0, 0)], Lattice::Theta(alpha));
        let ea = sum(&to_set(&a), &theta);
        let out = [
            extended_union_to(&ea, &IndexSet::smooth(), 12.0),
            sum_to(&ea, &to_set(&b), 12.0),
            extended_union_to(&ea, &to_set(&b), 12.0),
        ];
        for o in &out {
            prop_assert!(o.satisfies_finite_tail(12.0));
            prop_assert!(o.entries_up_to(12.0).len() < 10_000);
        }
    }

    #[test]
    fn smooth_closure_survives_extended_union(a in arb_model(4), b in arb_model(4)) {
        // Close the bases under lowering the log power; ℕ₀ supplies the shifts.
        let close = |m: &Model| -> IndexSet {
            let bases = m
                .iter()
                .flat_map(|&(s, p)| (0..=p).map(move |q| Exponent::real(s as f64 / 2.0, q)))
                .collect();
            IndexSet::generated(bases, Lattice::Naturals)
        };
        let (ea, eb) = (close(&a), close(&b));
        prop_assume!(!ea.is_empty() && !eb.is_empty());
        prop_assert!(ea.is_smooth_closed(12.0) && eb.is_smooth_closed(12.0));
        prop_assert!(extended_union_to(&ea, &eb, 12.0).is_smooth_closed(12.0));
    }

    #[test]
    fn identity_pullback_then_pushforward(a in arb_model(4), b in arb_model(4), c in arb_model(4)) {
        let shift = |m: &Model| to_set(m).shift_real(0.5);
        let f = IndexFamily::unlabelled(vec![shift(&a), shift(&b), shift(&c)]);
        let id = LiftingMatrix::identity(3);
        let back = pushforward_indexset(&pullback_indexset(&f, &id, 20.0).unwrap(), &id, true, 20.0).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn composition_associates_with_rapidly_vanishing_side_faces(
        a in arb_model(4), b in arb_model(4), c in arb_model(4),
    ) {
        let fam = |m: &Model| IndexFamily::double_space(IndexSet::Empty, IndexSet::Empty, to_set(m));
        let (e, f, g) = (fam(&a), fam(&b), fam(&c));
        let l = compose_indexsets(&compose_indexsets(&e, &f, 1.0, 1).unwrap(), &g, 1.0, 1).unwrap();
        let r = compose_indexsets(&e, &compose_indexsets(&f, &g, 1.0, 1).unwrap(), 1.0, 1).unwrap();
        prop_assert_eq!(l, r);
    }
}

#[test]
fn composition_bounds_are_not_associative_in_general() {
    let set = |v: &[(f64, u32)]| IndexSet::from_real(v);
    let e = IndexFamily::double_space(set(&[(5.5, 1)]), set(&[(7.5, 2)]), set(&[(2.0, 2)]));
    let f = IndexFamily::double_space(IndexSet::Empty, set(&[(3.5, 0), (4.5, 1)]), set(&[(2.0, 0)]));
    let g = IndexFamily::double_space(set(&[(8.5, 2)]), set(&[(5.0, 0)]), IndexSet::Empty);
    let l = compose_indexsets(&compose_indexsets(&e, &f, 1.0, 1).unwrap(), &g, 1.0, 1).unwrap();
    let r = compose_indexsets(&e, &compose_indexsets(&f, &g, 1.0, 1).unwrap(), 1.0, 1).unwrap();
    // (E∘F)∘G picks up E₁₀ + F₀₁ + G₁₀ at the left face; E∘(F∘G) does not.
    assert!(l.get("B10").unwrap().contains(Complex64::new(17.5, 0.0), 3));
    assert!(!r.get("B10").unwrap().contains(Complex64::new(17.5, 0.0), 3));
}

#[test]
fn theta_generators_compose_exactly() {
    let theta = IndexSet::generated(vec![Exponent::real(0.0, 0)], Lattice::Theta(0.5));
    let fam = IndexFamily::double_space(IndexSet::Empty, IndexSet::Empty, theta.clone());
    let g = compose_indexsets(&fam, &fam, 0.5, 1).unwrap();
    assert_eq!(g.get("B11"), Some(&theta));
}

#[test]
fn pushforward_through_blowdown_divides_by_weights() {
    // Column sums of a blow-down send the front face to both targets.
    let e = blowdown_lifting_matrix(&[FaceIncidence::at_level(0)], &[2.0]).unwrap();
    let fam = IndexFamily::unlabelled(vec![IndexSet::from_real(&[(4.0, 1)]), IndexSet::from_real(&[(1.0, 0)])]);
    let pushed = pushforward_indexset(&fam, &e, true, 20.0).unwrap();
    assert_eq!(pushed.set(0), &IndexSet::from_real(&[(1.0, 0), (2.0, 1)]));
}
