mod common;

use std::collections::BTreeMap;

use num_traits::Zero;
use odolab::scales::*;
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = MultiplicityProfile> {
    let exp = prop_oneof![Just(Exponent::Inf), (0..4u32).prop_map(Exponent::Finite)];
    prop::collection::vec(exp, 4).prop_map(|es| {
        let entries: BTreeMap<u64, Exponent> = [2, 3, 5, 7].into_iter().zip(es).collect();
        MultiplicityProfile::new(entries).unwrap()
    })
}

proptest! {
    #[test]
    fn equivalence_is_an_equivalence(a in common::scale(12), b in common::scale(12), c in common::scale(12)) {
        prop_assert!(equivalent(&a, &a));
        prop_assert_eq!(equivalent(&a, &b), equivalent(&b, &a));
        if equivalent(&a, &b) && equivalent(&b, &c) {
            prop_assert!(equivalent(&a, &c));
        }
    }

    #[test]
    fn equivalence_transitive_on_related_scales(a in common::scale_over(&[2, 3])) {
        let b = prime_refine(&a);
        let c = multiplicity_profile(&a).to_scale().unwrap();
        prop_assert!(equivalent(&a, &b) && equivalent(&b, &c) && equivalent(&a, &c));
    }

    #[test]
    fn factor_order(a in common::scale_over(&[2, 3]), b in common::scale_over(&[2, 3]), c in common::scale_over(&[2, 3])) {
        prop_assert!(precedes(&a, &a));
        if precedes(&a, &b) && precedes(&b, &c) {
            prop_assert!(precedes(&a, &c));
        }
        if equivalent(&a, &b) {
            prop_assert!(precedes(&a, &b) && precedes(&b, &a));
        }
        if precedes(&a, &b) && precedes(&b, &a) {
            prop_assert!(equivalent(&a, &b));
        }
    }

    #[test]
    fn terms_divide(s in common::scale(30), k in 0usize..12) {
        let a = scale_term(&s, k);
        let b = scale_term(&s, k + 1);
        prop_assert!((&b % &a).is_zero());
    }

    #[test]
    fn valuations_follow_profile(s in common::scale(30)) {
        let prof = multiplicity_profile(&s);
        let h = s.head().len();
        let l = s.cycle().len();
        for (&p, &e) in prof.entries() {
            match e {
                Exponent::Finite(e) => {
                    for k in h..h + 2 * l + 1 {
                        prop_assert_eq!(valuation(&scale_term(&s, k), p).unwrap(), e);
                    }
                }
                Exponent::Inf => {
                    for k in h..h + l {
                        let here = valuation(&scale_term(&s, k), p).unwrap();
                        let later = valuation(&scale_term(&s, k + l), p).unwrap();
                        prop_assert!(later > here);
                    }
                }
            }
        }
        // primes outside the profile never appear
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29] {
            if !prof.entries().contains_key(&p) {
                prop_assert_eq!(valuation(&scale_term(&s, h + l), p).unwrap(), 0);
            }
        }
    }

    #[test]
    fn prime_refinement(s in common::scale(30)) {
        let r = prime_refine(&s);
        prop_assert!(equivalent(&s, &r));
        prop_assert!(is_prime_scale(&r));
    }

    #[test]
    fn decomposition_round_trip(p in profile()) {
        let d = decompose_profile(&p);
        prop_assert_eq!(&d.reconstruct(), &p);
        prop_assert_eq!(decompose_profile(&d.reconstruct()), d);
    }

    #[test]
    fn profiles_synthesize_scales(p in profile()) {
        match p.to_scale() {
            Ok(s) => prop_assert_eq!(multiplicity_profile(&s), p),
            Err(_) => prop_assert!(p.infinite_support().is_empty()),
        }
    }

    #[test]
    fn torsion_class_matches_finite_part(s in common::scale(30)) {
        let free = torsion_subgroup(&s).is_empty();
        prop_assert_eq!(classify(&s) == TorsionClass::TorsionFree, free);
        prop_assert_ne!(classify(&s), TorsionClass::InfiniteTorsion);
    }

    #[test]
    fn equality_is_up_to_presentation(s in common::scale(12), extra in 1usize..4) {
        // unrolling the cycle into the head changes nothing
        let mut head = s.head().to_vec();
        for i in 0..extra {
            head.push(s.cycle()[i % s.cycle().len()]);
        }
        let mut cycle = s.cycle().to_vec();
        let n = cycle.len();
        cycle.rotate_left(extra % n);
        let t = Scale::new(head, cycle).unwrap();
        prop_assert_eq!(&t, &s);
        for k in 0..8 {
            prop_assert_eq!(scale_term(&s, k), scale_term(&t, k));
        }
    }

    #[test]
    fn json_round_trip(s in common::scale(30)) {
        let text = serde_json::to_string(&s).unwrap();
        let back: Scale = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}
