use proptest::prelude::*;
use sbc_core::poly::{Polynomial, TermRecord, VarSpace};

fn space() -> VarSpace {
    VarSpace::new(2, 1).unwrap()
}

fn exps(nvars: usize, max_deg: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max_deg, nvars).prop_filter("degree bound", move |e| e.iter().sum::<u32>() <= max_deg)
}

/// Integer coefficients keep every ring identity exact in floating point.
fn int_poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((exps(3, 6), -5i32..=5), 0..8)
        .prop_map(|terms| Polynomial::from_terms(space(), terms.into_iter().map(|(e, c)| (e, c as f64))).unwrap())
}

fn real_state_poly(max_deg: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((exps(2, max_deg), -1.0f64..1.0), 1..8)
        .prop_map(|terms| Polynomial::from_terms(space(), terms).unwrap())
}

fn real_poly(max_deg: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((exps(3, max_deg), -1.0f64..1.0), 1..6)
        .prop_map(|terms| Polynomial::from_terms(space(), terms).unwrap())
}

proptest! {
    #[test]
    fn ring_axioms(p in int_poly(), q in int_poly(), r in int_poly()) {
        prop_assert_eq!(p.add(&q).unwrap(), q.add(&p).unwrap());
        prop_assert_eq!(p.mul(&q).unwrap(), q.mul(&p).unwrap());
        prop_assert_eq!(
            p.add(&q).unwrap().add(&r).unwrap(),
            p.add(&q.add(&r).unwrap()).unwrap()
        );
        prop_assert_eq!(
            p.mul(&q).unwrap().mul(&r).unwrap(),
            p.mul(&q.mul(&r).unwrap()).unwrap()
        );
        prop_assert_eq!(
            p.mul(&q.add(&r).unwrap()).unwrap(),
            p.mul(&q).unwrap().add(&p.mul(&r).unwrap()).unwrap()
        );
        prop_assert!(p.sub(&p).unwrap().is_zero());
    }

    #[test]
    fn product_degree_is_additive(p in int_poly(), q in int_poly()) {
        prop_assume!(!p.is_zero() && !q.is_zero());
        prop_assert_eq!(p.mul(&q).unwrap().degree(), p.degree() + q.degree());
    }

    #[test]
    fn compose_agrees_with_pointwise_evaluation(
        p in real_state_poly(4),
        f1 in real_poly(3),
        f2 in real_poly(3),
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 100),
    ) {
        let c = p.compose(&[f1.clone(), f2.clone()]).unwrap();
        for pt in &pts {
            let inner = [f1.eval(pt).unwrap(), f2.eval(pt).unwrap(), pt[2]];
            let direct = p.eval(&inner).unwrap();
            let got = c.eval(pt).unwrap();
            prop_assert!((got - direct).abs() <= 1e-10 * direct.abs().max(1.0), "{got} vs {direct}");
        }
    }

    #[test]
    fn serialization_round_trip(p in real_poly(6)) {
        let text = serde_json::to_string(&p.to_records()).unwrap();
        let recs: Vec<TermRecord> = serde_json::from_str(&text).unwrap();
        let back = Polynomial::from_records(space(), &recs).unwrap();
        prop_assert_eq!(back, p);
    }
}
