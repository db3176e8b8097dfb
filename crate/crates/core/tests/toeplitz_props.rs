use odolab::toeplitz::*;
use proptest::prelude::*;

fn window() -> impl Strategy<Value = ToeplitzWindow<u8>> {
    (
        -300i64..300,
        prop::collection::vec(prop_oneof![3 => (0..2u8).prop_map(Some), 1 => Just(None)], 40..300),
    )
        .prop_map(|(off, syms)| ToeplitzWindow::from_word(off, syms))
}

fn rule() -> impl Strategy<Value = FillRule> {
    let stage = prop_oneof![
        (0..2u8).prop_map(StageFill::Constant),
        prop::collection::vec(0..2u8, 2..4).prop_map(StageFill::Alternating),
    ];
    prop_oneof![
        Just(FillRule::AlternatingConstants),
        Just(FillRule::AlternatingWords),
        prop::collection::vec(stage, 1..3).prop_map(|v| FillRule::general(v).unwrap()),
    ]
}

fn constants(len: usize) -> (ToeplitzWindow<u8>, PeriodStructure) {
    let (lo, hi) = centered(len);
    let w = generate(&FillRule::AlternatingConstants, 10, lo, hi).unwrap();
    let ps = essential_periods(&w, &[2, 4, 8, 16], DEFAULT_MIN_TRANSLATES).unwrap();
    (w, ps)
}

proptest! {
    #[test]
    fn periodicity_is_inherited(w in window(), p in 1u64..8, k in 1u64..4, mt in 1usize..5) {
        let a = per_p(&w, p, mt);
        let b = per_p(&w, p * k, mt);
        for pos in a.members.intersection(&b.certified) {
            prop_assert!(b.members.contains(pos));
        }
        prop_assert!(a.members.is_subset(&a.certified));
    }

    #[test]
    fn generated_cells_are_periodic(r in rule(), stages in 0usize..7, lo in -600i64..0) {
        let w = generate(&r, stages, lo, lo + 1024).unwrap();
        let periods = r.stage_periods(stages);
        let sets: Vec<PerSet> = periods.iter().map(|&p| per_p(&w, p, DEFAULT_MIN_TRANSLATES)).collect();
        for pos in w.positions() {
            match (w.get(pos), w.annotation(pos)) {
                (None, None) => {}
                (Some(_), Some(a)) => {
                    let j = periods.iter().position(|&p| p == a).expect("annotation is a stage period");
                    if sets[j].certified.contains(&pos) {
                        prop_assert!(sets[j].members.contains(&pos), "cell {} period {}", pos, a);
                    }
                }
                other => prop_assert!(false, "symbol and annotation disagree at {}: {:?}", pos, other),
            }
        }
        // holes are exactly one class mod 2^stages
        let holes = w.holes();
        prop_assert!(holes.windows(2).all(|h| h[1] - h[0] == 1 << stages));
    }

    #[test]
    fn skeleton_refines_and_shifts(m in -200i64..200, n in -200i64..200) {
        let (w, ps) = constants(1024);
        for i in 0..=ps.periods.len() {
            let cm = skeleton_class(m, i, &ps).unwrap();
            let cn = skeleton_class(n, i, &ps).unwrap();
            prop_assert_eq!(
                skeleton_signature(&w, m, i, &ps).unwrap() == skeleton_signature(&w, n, i, &ps).unwrap(),
                cm == cn
            );
            prop_assert_eq!(skeleton_class(m + 1, i, &ps).unwrap(), (cm + 1) % ps.level(i).unwrap());
            if i > 0 {
                let coarse = |x| skeleton_class(x, i - 1, &ps).unwrap();
                if cm == cn {
                    prop_assert_eq!(coarse(m), coarse(n));
                }
            }
        }
    }

    #[test]
    fn block_recoding_keeps_symbols(w in window(), m in 1usize..6) {
        let r = recode_blocks(&w, m).unwrap();
        for b in r.positions() {
            let expect: Option<Vec<u8>> = (0..m as i64).map(|c| w.get(b * m as i64 + c).copied()).collect();
            prop_assert_eq!(r.get(b).cloned(), expect);
        }
    }
}

#[test]
fn sigma_components_are_distinct_and_cycled() {
    let (w, ps) = constants(1024);
    for m in [2u64, 4, 8, 6, 12] {
        let comps = sigma_m_components(&FillRule::AlternatingConstants, &w, &ps, m).unwrap();
        let big_m = comps.big_m;
        let i = ps.periods.iter().position(|&p| p == big_m).map(|i| i + 1).unwrap();
        let sig = |x: i64| skeleton_signature(&w, x, i, &ps).unwrap();
        let sigs: Vec<_> = (0..big_m as i64).map(sig).collect();
        for a in 0..sigs.len() {
            for b in a + 1..sigs.len() {
                assert_ne!(sigs[a], sigs[b], "m={m}");
            }
        }
        assert_eq!(sig(big_m as i64), sigs[0]);
        for (k, rep) in comps.representatives.iter().enumerate() {
            assert_eq!(rep, &w.shift(k as i64));
        }
    }
}

#[test]
fn limitation_sequences_agree() {
    let (lo, hi) = centered(4096);
    let w53 = generate(&FillRule::AlternatingConstants, 10, lo, hi).unwrap();
    let w54 = generate(&FillRule::AlternatingWords, 10, lo, hi).unwrap();
    let ps53 = essential_periods(&w53, &[2, 4, 8, 16, 32, 64], DEFAULT_MIN_TRANSLATES).unwrap();
    let ps54 = essential_periods(&w54, &[4, 16, 64], DEFAULT_MIN_TRANSLATES).unwrap();
    assert_ne!(ps53.periods, ps54.periods);
    for j in 0..=6 {
        assert_eq!(f_lower_bound(&ps53, 1 << j), f_lower_bound(&ps54, 1 << j));
    }
}
