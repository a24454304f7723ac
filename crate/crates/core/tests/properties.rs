use proptest::prelude::*;

use goi_core::groupoid::{
    compose, exact_eq, g_compose, monoid_word_eval, nilpotency, Generator, GroupElement, Index, Nilpotency,
    PartialInjectionOp,
};
use goi_core::linalg::{cr, DenseOperator, Label};
use goi_core::logic::{
    allocate_locations, interpret_mall_matricial, parse_basis, parse_formula, parse_proof, Formula,
};
use goi_core::measurement::{dagger, ldet, sca_mat, DialectIso, Measure};
use goi_core::projects::{sum_lambda, tensor_project, Project};
use goi_core::sampling::{
    random_dialect, random_dialectal, random_matrix, random_trace, random_unitary, rng, Shape,
};

fn group_element() -> impl Strategy<Value = GroupElement> {
    prop::collection::vec((prop::bool::ANY, 0u32..4), 0..6).prop_map(|w| {
        monoid_word_eval(&w.into_iter().map(|(a, n)| (if a { Generator::A } else { Generator::B }, n)).collect::<Vec<_>>())
    })
}

fn table() -> impl Strategy<Value = PartialInjectionOp> {
    (1usize..7, any::<u64>()).prop_map(|(n, seed)| {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut r = rng(seed);
        let mut targets: Vec<u64> = (0..8).collect();
        targets.shuffle(&mut r);
        let pairs: Vec<(u64, u64)> =
            (0..n as u64).filter(|_| r.gen_bool(0.7)).map(|s| (targets[s as usize], s)).collect();
        PartialInjectionOp::arrows(&pairs).unwrap()
    })
}

fn project(seed: u64, carrier: &[Label]) -> Project {
    let mut r = rng(seed);
    let d = random_dialect(&mut r, 2, 2);
    let t = random_trace(&mut r, &d);
    let op = random_dialectal(&mut r, carrier, &d, &t, 0.5, Shape::Hermitian);
    Project::new(Measure::Finite((seed % 7) as f64 / 7.0 - 0.5), op).unwrap()
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        "[A-Z][0-9]?".prop_map(Formula::Var),
        "[A-Z][0-9]?".prop_map(Formula::Dual),
        Just(Formula::Top),
        Just(Formula::Zero),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (inner.clone(), inner, 0..4).prop_map(|(a, b, k)| match k {
            0 => Formula::tensor(a, b),
            1 => Formula::par(a, b),
            2 => Formula::with(a, b),
            _ => Formula::plus(a, b),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_law(g in group_element(), h in group_element(), k in group_element()) {
        prop_assert_eq!(g_compose(&g_compose(&g, &h), &k), g_compose(&g, &g_compose(&h, &k)));
        prop_assert_eq!(g_compose(&g, &GroupElement::identity()), g.clone());
        prop_assert_eq!(g_compose(&GroupElement::identity(), &g), g);
    }

    #[test]
    fn partial_injections_compose_associatively(u in table(), v in table(), w in table()) {
        let l = compose(&compose(&u, &v), &w);
        let r = compose(&u, &compose(&v, &w));
        prop_assert_eq!(exact_eq(&l, &r), Some(true));
        prop_assert_eq!(exact_eq(&u.adjoint().adjoint(), &u), Some(true));
        // u u* u = u
        prop_assert_eq!(exact_eq(&compose(&u, &compose(&u.adjoint(), &u)), &u), Some(true));
    }

    #[test]
    fn strictly_increasing_injections_are_nilpotent(n in 1u64..8) {
        let pairs: Vec<(u64, u64)> = (0..n).map(|i| (i + 1, i)).collect();
        let u = PartialInjectionOp::arrows(&pairs).unwrap();
        let seeds: Vec<Index> = (0..=n).map(Index::new).collect();
        prop_assert_eq!(nilpotency(&u, Some(&seeds), 1000), Nilpotency::Nilpotent(n as usize + 1));
    }

    #[test]
    fn measure_arithmetic(a in -1e3f64..1e3, b in -1e3f64..1e3, l in -10f64..10.0) {
        let (x, y) = (Measure::Finite(a), Measure::Finite(b));
        prop_assert_eq!(x.add(&y), y.add(&x));
        prop_assert_eq!(x.add(&Measure::Infinite), Measure::Infinite);
        prop_assert_eq!(Measure::Infinite.scale(0.0), Measure::Finite(0.0));
        if l != 0.0 {
            prop_assert_eq!(Measure::Infinite.scale(l), Measure::Infinite);
        }
        let s = x.scale(l).distance(&Measure::Finite(l * a));
        prop_assert!(s == 0.0);
    }

    #[test]
    fn determinant_is_multiplicative(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let c: Vec<Label> = (0..n as Label).collect();
        let (a, b) = (random_matrix(&mut r, &c), random_matrix(&mut r, &c));
        let ab = a.mat_mul(&b).unwrap().plain_det();
        let p = a.plain_det() * b.plain_det();
        prop_assert!((ab - p).norm() <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn fk_determinant_of_unitary_is_one(seed in any::<u64>(), n in 1usize..5) {
        let u = random_unitary(&mut rng(seed), n);
        prop_assert!((u.fk_det(None).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dialect_inflation_scales_ldet(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c: Vec<Label> = vec![0, 1, 2];
        let d = random_dialect(&mut r, 2, 2);
        let t = random_trace(&mut r, &d);
        let u = random_dialectal(&mut r, &c, &d, &t, 0.4, Shape::Real);
        let e = random_dialect(&mut r, 2, 2);
        let beta = random_trace(&mut r, &e);
        let lhs = ldet(&dagger(&u, &e, &beta));
        let rhs = ldet(&u).scale(beta.unit_value());
        prop_assert!(lhs.distance(&rhs) <= 1e-9);
    }

    #[test]
    fn tensor_is_associative(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let (a, b, c) = (project(s1, &[0, 1]), project(s2, &[5]), project(s3, &[8, 9]));
        let l = tensor_project(&tensor_project(&a, &b).unwrap(), &c).unwrap();
        let r = tensor_project(&a, &tensor_project(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(l.dialect(), r.dialect());
        prop_assert!(l.op.max_abs_diff(&r.op).unwrap() <= 1e-12);
        prop_assert!(l.wager.distance(&r.wager) <= 1e-12);
    }

    #[test]
    fn inflation_by_zero_preserves_measurement(s1 in any::<u64>(), s2 in any::<u64>(), lambda in 0.1f64..5.0) {
        let c: Vec<Label> = vec![0, 1];
        let (a, b) = (project(s1, &c), project(s2, &c));
        let inflated = sum_lambda(&a, lambda, &Project::zero_on(&c)).unwrap();
        let (x, y) = (sca_mat(&a, &b).unwrap(), sca_mat(&inflated, &b).unwrap());
        // the zero summand only adds λ·1 to the unit value of the trace
        let shift = b.wager.scale(lambda);
        prop_assert!(x.add(&shift).distance(&y) <= 1e-9, "{} vs {}", x, y);
        let b0 = Project { wager: Measure::zero(), ..b };
        prop_assert!(sca_mat(&a, &b0).unwrap().distance(&sca_mat(&inflated, &b0).unwrap()) <= 1e-9);
    }

    #[test]
    fn variants_measure_alike(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        use rand::seq::SliceRandom;
        let c: Vec<Label> = vec![0, 1, 2];
        let (a, b) = (project(s1, &c), project(s2, &c));
        let mut r = rng(s3);
        let n = a.dialect().blocks.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let unitaries = perm.iter().map(|&p| random_unitary(&mut r, a.dialect().blocks[p])).collect();
        let v = a.variant(&DialectIso { perm, unitaries }).unwrap();
        let (x, y) = (sca_mat(&a, &b).unwrap(), sca_mat(&v, &b).unwrap());
        prop_assert!(x.distance(&y) <= 1e-9, "{} vs {}", x, y);
    }

    #[test]
    fn formulas_round_trip(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text).unwrap(), f.clone());
        prop_assert_eq!(f.dual().dual(), f);
    }
}

#[test]
fn corpus_round_trips_and_interprets_deterministically() {
    let basis = parse_basis(goi_core::corpus::BASIS).unwrap();
    for (name, text) in goi_core::corpus::MLL.iter().chain(goi_core::corpus::MALL) {
        let p = parse_proof(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_proof(&p.to_raw().to_string()).unwrap(), p, "{name}");
        assert_eq!(allocate_locations(&p, &basis).unwrap(), allocate_locations(&p, &basis).unwrap(), "{name}");
        let a = interpret_mall_matricial(&p, &basis).unwrap();
        let b = interpret_mall_matricial(&p, &basis).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap(), "{name}");
    }
}

#[test]
fn identity_fk_determinant() {
    let i = DenseOperator::identity(vec![0, 1, 2]);
    assert_eq!(i.fk_det(None).unwrap(), 1.0);
    assert_eq!(i.scale(cr(2.0)).fk_det(None).unwrap(), 2.0);
}
