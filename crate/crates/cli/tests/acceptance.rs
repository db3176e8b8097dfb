//! One PASS/FAIL line per acceptance criterion. All comparisons are exact;
//! each criterion also has a wall-clock limit.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use odolab::groups::{distinguish, f_sequence, inclusion_jk, sd_inv, sd_mul, AutStage, Verdict};
use odolab::odometer::{component_count, conjugacy_to_component, embed_int, Element};
use odolab::oracle::{block_code_autos, commuting_bijections_count, orbit_count, DEFAULT_RULE_BUDGET};
use odolab::scales::Scale;
use odolab::toeplitz::{
    centered, essential_periods, f_lower_bound, generate, skeleton_class, skeleton_signature, FillRule,
    DEFAULT_MIN_TRANSLATES,
};
use odolab_cli::{corpus, run, CHART_CONSTANTS, CHART_WORDS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const WINDOW: usize = 4096;
const STAGES: usize = 10;
const SEED: u64 = 20_240_601;

type Check = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn factorial(n: u64) -> BigUint {
    (1..=n).map(BigUint::from).product()
}

fn geometric(r: u64) -> Scale {
    Scale::geometric(r).unwrap()
}

fn window(rule: &FillRule) -> odolab::toeplitz::ToeplitzWindow<u8> {
    let (lo, hi) = centered(WINDOW);
    generate(rule, STAGES, lo, hi).unwrap()
}

fn c1_centralizers() -> Check {
    let mut cases = 0;
    for n in 1..=64u64 {
        for m in 0..=n {
            let d = n.gcd(&m);
            let want = BigUint::from(n / d).pow(d as u32) * factorial(d);
            let got = commuting_bijections_count(n, m).map_err(|e| e.to_string())?;
            ensure(got == want, || format!("N={n} m={m}: {got} != {want}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (N, m) pairs"))
}

fn c2_components() -> Check {
    let scales = corpus();
    ensure(scales.len() >= 10, || "corpus too small".into())?;
    let mut cases = 0;
    for s in &scales {
        for m in 1..=100u64 {
            let dec = component_count(s, m).map_err(|e| e.to_string())?;
            let mut k = dec.stabilization_index;
            while let Ok(n) = s.term_u64(k) {
                if n > 1 << 18 {
                    break;
                }
                let orbits = orbit_count(n, m).unwrap();
                ensure(orbits == dec.s, || {
                    format!("{s} m={m} k={k}: s={} orbits={orbits}", dec.s)
                })?;
                cases += 1;
                k += 1;
            }
        }
    }
    Ok(format!("{cases} (scale, m, k) triples over {} scales", scales.len()))
}

fn c3_group_axioms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let stages = [
        AutStage::new(&geometric(2), 2, 5),
        AutStage::new(&geometric(3), 3, 4),
        AutStage::new(&geometric(2), 4, 5),
        AutStage::new(&geometric(6), 6, 3),
    ];
    let mut seen = Vec::new();
    for st in stages {
        let st = st.map_err(|e| e.to_string())?;
        let s = st.descriptor().s;
        for _ in 0..10_000 {
            let a = st.random_element(&mut rng);
            let b = st.random_element(&mut rng);
            let c = st.random_element(&mut rng);
            let e = st.identity();
            let ab = sd_mul(&a, &b).unwrap();
            ensure(
                sd_mul(&ab, &c).unwrap() == sd_mul(&a, &sd_mul(&b, &c).unwrap()).unwrap(),
                || format!("associativity fails for s={s}"),
            )?;
            ensure(sd_mul(&a, &e).unwrap() == a && sd_mul(&e, &a).unwrap() == a, || {
                format!("identity, s={s}")
            })?;
            ensure(sd_mul(&a, &sd_inv(&a)).unwrap().is_identity(), || {
                format!("inverse, s={s}")
            })?;
            let fa = st.bijection(&a).unwrap();
            let fb = st.bijection(&b).unwrap();
            let composed: Vec<u64> = fb.iter().map(|&y| fa[y as usize]).collect();
            ensure(st.bijection(&ab).unwrap() == composed, || {
                format!("action not a homomorphism, s={s}")
            })?;
            ensure(st.factor_bijection(&fa).unwrap() == a, || {
                format!("action not faithful, s={s}")
            })?;
        }
        seen.push(s);
    }
    Ok(format!("10^4 triples for s in {seen:?}"))
}

fn c4_tower() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    for (r, depth, j, k) in [(2u64, 6usize, 1usize, 3usize), (6, 3, 0, 1)] {
        let s = geometric(r);
        let from = AutStage::tower(&s, j, depth).unwrap();
        let to = AutStage::tower(&s, k, depth).unwrap();
        for _ in 0..1000 {
            let a = from.random_element(&mut rng);
            let b = from.random_element(&mut rng);
            let ia = inclusion_jk(&from, &to, &a).unwrap();
            let ib = inclusion_jk(&from, &to, &b).unwrap();
            let iab = inclusion_jk(&from, &to, &sd_mul(&a, &b).unwrap()).unwrap();
            ensure(iab == sd_mul(&ia, &ib).unwrap(), || {
                format!("j_k not multiplicative on ({r}^n)")
            })?;
            ensure(from.bijection(&a).unwrap() == to.bijection(&ia).unwrap(), || {
                format!("j_k changes the bijection on ({r}^n)")
            })?;
        }
    }
    Ok("10^3 pairs on (2^n) levels 2 -> 8 and (6^n) levels 1 -> 6".into())
}

fn c5_f_values() -> Check {
    let chain: Vec<u64> = (0..=6).map(|j| 1 << j).collect();
    let got: Vec<BigUint> = f_sequence(&geometric(2), &chain)
        .unwrap()
        .into_iter()
        .map(|r| r.f_value)
        .collect();
    let want: Vec<BigUint> = chain.iter().map(|&m| factorial(m)).collect();
    ensure(got == want, || format!("(2^n): {got:?}"))?;
    let nine = Scale::new(vec![9], vec![2]).unwrap();
    let got: Vec<BigUint> = f_sequence(&nine, &[1, 2])
        .unwrap()
        .into_iter()
        .map(|r| r.f_value)
        .collect();
    ensure(got == [BigUint::from(9u32), BigUint::from(162u32)], || {
        format!("9:2: {got:?}")
    })?;
    let mut pairs = 0;
    for s in corpus() {
        for m in 1..=64u64 {
            for k in 2..=64 / m {
                let seq = f_sequence(&s, &[m, m * k]).unwrap();
                ensure(seq[0].f_value <= seq[1].f_value, || {
                    format!("{s}: F({m}) > F({})", m * k)
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!(
        "64! has {} digits; {pairs} monotone pairs",
        want[6].to_string().len()
    ))
}

fn c6_charts() -> Check {
    for (rule, chart) in [
        (FillRule::AlternatingConstants, CHART_CONSTANTS),
        (FillRule::AlternatingWords, CHART_WORDS),
    ] {
        let text = window(&rule).to_symbol_string();
        ensure(text.contains(chart), || format!("{} window lacks {chart}", rule.name()))?;
    }
    Ok(format!("window {WINDOW}, {STAGES} stages"))
}

fn c7_period_structures() -> Check {
    let w53 = window(&FillRule::AlternatingConstants);
    let w54 = window(&FillRule::AlternatingWords);
    let p53 = essential_periods(&w53, &[2, 4, 8, 16], DEFAULT_MIN_TRANSLATES).unwrap();
    let p54 = essential_periods(&w54, &[4, 16], DEFAULT_MIN_TRANSLATES).unwrap();
    ensure(p53.periods == [2, 4, 8, 16], || format!("constants: {:?}", p53.periods))?;
    ensure(p54.periods == [4, 16], || format!("words: {:?}", p54.periods))?;
    let wide = essential_periods(&w54, &[2, 4, 8, 16], DEFAULT_MIN_TRANSLATES).unwrap();
    Ok(format!(
        "constants {:?}, words {:?} (from 2|4|8|16: {:?})",
        p53.periods, p54.periods, wide.periods
    ))
}

fn c8_limitation() -> Check {
    let p53 = essential_periods(
        &window(&FillRule::AlternatingConstants),
        &[2, 4, 8, 16, 32, 64],
        DEFAULT_MIN_TRANSLATES,
    )
    .unwrap();
    let p54 = essential_periods(
        &window(&FillRule::AlternatingWords),
        &[4, 16, 64],
        DEFAULT_MIN_TRANSLATES,
    )
    .unwrap();
    ensure(p53.periods != p54.periods, || "period structures coincide".into())?;
    let ms: Vec<u64> = (0..=6).map(|j| 1 << j).collect();
    let a: Vec<BigUint> = ms.iter().map(|&m| f_lower_bound(&p53, m)).collect();
    let b: Vec<BigUint> = ms.iter().map(|&m| f_lower_bound(&p54, m)).collect();
    let want: Vec<BigUint> = ms.iter().map(|&m| factorial(m)).collect();
    ensure(a == want && b == want, || format!("{a:?} vs {b:?}"))?;
    Ok(format!(
        "both [(2^j)!] for j <= 6; structures {:?} vs {:?}",
        p53.periods, p54.periods
    ))
}

fn compare(a: &str, b: &str) -> Result<Value, String> {
    let (out, code) = run(["odolab", "--json", "compare", a, b]);
    ensure(code == 0, || format!("compare {a} {b} exited {code}"))?;
    serde_json::from_str(&out).map_err(|e| e.to_string())
}

fn c9_distinguishing() -> Check {
    let v = compare("2", "3")?;
    let verdict = &v["results"]["verdict"];
    ensure(verdict["verdict"] == "DistinctByInfiniteSupport", || {
        format!("{verdict}")
    })?;
    ensure(verdict["witness"].as_u64().is_some(), || "no witness".into())?;
    ensure(verdict["levels"].as_array().is_some_and(|l| !l.is_empty()), || {
        "no levels".into()
    })?;
    ensure(verdict["f_first"] != verdict["f_second"], || {
        "F sequences do not diverge".into()
    })?;
    // the library verdict agrees with the command
    let lib = distinguish(&geometric(2), &geometric(3)).unwrap();
    ensure(
        matches!(lib, Verdict::DistinctByInfiniteSupport { witness: 2, .. }),
        || format!("{lib:?}"),
    )?;

    let v = compare("2", "4")?;
    ensure(v["results"]["verdict"]["verdict"] == "EquivalentScales", || {
        format!("{v}")
    })?;

    let v = compare("2", "9:2")?;
    let verdict = &v["results"]["verdict"];
    ensure(verdict["verdict"] == "SameInfiniteSupport", || format!("{verdict}"))?;
    ensure(verdict["torsion_second"]["3"] == 2, || {
        format!("torsion report {verdict}")
    })?;
    ensure(verdict["undecided"] == true, || "honesty flag missing".into())?;
    let distinct = &compare("2", "3")?["results"]["verdict"];
    Ok(format!(
        "(2^n) vs (3^n): witness {}, levels {}, F {} vs {}",
        distinct["witness"], distinct["levels"], distinct["f_first"], distinct["f_second"]
    ))
}

fn c10_skeleton() -> Check {
    let w = window(&FillRule::AlternatingConstants);
    let ps = essential_periods(&w, &[2, 4, 8, 16], DEFAULT_MIN_TRANSLATES).unwrap();
    let ms: Vec<i64> = (0..=257).collect();
    for i in 0..=4usize {
        let p = ps.level(i).unwrap() as i64;
        let sigs: Vec<_> = ms.iter().map(|&m| skeleton_signature(&w, m, i, &ps).unwrap()).collect();
        for (a, &m) in ms.iter().enumerate().take(257) {
            let cm = skeleton_class(m, i, &ps).unwrap();
            ensure(cm as i64 == m.rem_euclid(p), || format!("class of {m} at level {i}"))?;
            for (b, &n) in ms.iter().enumerate().take(257) {
                let same = sigs[a] == sigs[b];
                ensure(same == (cm == skeleton_class(n, i, &ps).unwrap()), || {
                    format!("partition fails for {m}, {n} at level {i}")
                })?;
                if i > 0 && same {
                    let coarse = |x| skeleton_class(x, i - 1, &ps).unwrap();
                    ensure(coarse(m) == coarse(n), || {
                        format!("no refinement for {m}, {n} at level {i}")
                    })?;
                }
            }
            // σ maps A_c into A_{c+1}
            let next = skeleton_class(m + 1, i, &ps).unwrap();
            ensure(next as i64 == (cm as i64 + 1) % p, || {
                format!("shift at {m}, level {i}")
            })?;
            let rep = ms.iter().position(|&n| n.rem_euclid(p) == (cm as i64 + 1) % p).unwrap();
            ensure(sigs[a + 1] == sigs[rep], || {
                format!("σ moves {m} out of the next class at level {i}")
            })?;
        }
    }
    Ok("m <= 256, levels 0..=4".into())
}

fn c11_conjugacy() -> Check {
    let two = geometric(2);
    let depth = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    for m in [2u64, 4, 8] {
        let dec = component_count(&two, m).unwrap();
        for _ in 0..100 {
            let x = Element::random(two.clone(), depth, &mut rng);
            let z = Element::random(two.clone(), depth, &mut rng);
            let y = x.add(&z.scalar_mul(&BigInt::from(dec.s))).unwrap();
            let phi = conjugacy_to_component(&two, m, &x, &y).map_err(|e| e.to_string())?;
            let ym = y.add(&embed_int(m, &two, depth)).unwrap();
            let phi_m = conjugacy_to_component(&two, m, &x, &ym).map_err(|e| e.to_string())?;
            let one = embed_int(1, phi.scale(), phi.depth());
            ensure(phi_m == phi.add(&one).unwrap(), || format!("m={m}: φ(y+m) != φ(y)+1"))?;
        }
    }
    Ok("100 points each for m = 2, 4, 8 at depth 12".into())
}

fn c12_block_codes() -> Check {
    let w = window(&FillRule::AlternatingConstants);
    let mut summary = Vec::new();
    for r in 0..=1 {
        let one = block_code_autos(&w, r, 1, DEFAULT_RULE_BUDGET).map_err(|e| e.to_string())?;
        let three = block_code_autos(&w, r, 3, DEFAULT_RULE_BUDGET).map_err(|e| e.to_string())?;
        ensure(one.rules == three.rules, || {
            format!("radius {r}: {:?} vs {:?}", one.shifts, three.shifts)
        })?;
        summary.push(format!("r={r}: shifts {:?}", one.shifts));
    }
    Ok(summary.join("; "))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("centralizer oracle equals (N/d)^d d!", 10, c1_centralizers),
        ("component count equals orbit count", 5, c2_components),
        ("semidirect group axioms", 30, c3_group_axioms),
        ("tower maps are homomorphisms", 20, c4_tower),
        ("F-sequence values and monotonicity", 5, c5_f_values),
        ("example charts appear in the windows", 5, c6_charts),
        ("period structures (2,4,8,16) and (4,16)", 10, c7_period_structures),
        ("identical lower bounds despite different structures", 5, c8_limitation),
        ("compare verdicts", 5, c9_distinguishing),
        ("skeleton partition, refinement and shift", 5, c10_skeleton),
        ("conjugacy intertwines +m with +1", 5, c11_conjugacy),
        ("block codes agree for m = 1 and m = 3", 60, c12_block_codes),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let result = f();
        let elapsed = t.elapsed();
        let limit = Duration::from_secs(limit);
        let (status, detail) = match result {
            Ok(d) if elapsed < limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("too slow; {d}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!(
            "{status} {:>2} {name} [{:.2}s < {}s] {detail}",
            i + 1,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    let total = start.elapsed();
    let suite_ok = total < Duration::from_secs(120);
    println!(
        "{} suite total {:.2}s < 120s, {failures} failing",
        if suite_ok && failures == 0 { "PASS" } else { "FAIL" },
        total.as_secs_f64()
    );
    if failures == 0 && suite_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
