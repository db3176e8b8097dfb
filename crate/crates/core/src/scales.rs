//! Scales, valuations and multiplicity profiles.
//!
//! A [`Scale`] is an eventually periodic ratio sequence: the explicit `head`
//! ratios are followed by `cycle` repeated forever, and `p_k` is the product
//! of the first `k` ratios.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_prime::nt_funcs::{factorize64, is_prime64};
use num_traits::{One, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prime factorization of a positive integer, as (prime, exponent) pairs in
/// increasing order of the prime.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    if n <= 1 {
        return Vec::new();
    }
    factorize64(n).into_iter().map(|(p, e)| (p, e as u32)).collect()
}

pub fn is_prime(p: u64) -> bool {
    is_prime64(p)
}

/// The exponent of `p` in `n`.
pub fn valuation(n: &BigUint, p: u64) -> Result<u32> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if n.is_zero() {
        return Err(Error::ZeroValuation);
    }
    let p = BigUint::from(p);
    let mut n = n.clone();
    let mut k = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return Ok(k);
        }
        n = q;
        k += 1;
    }
}

pub fn valuation_u64(n: u64, p: u64) -> Result<u32> {
    valuation(&BigUint::from(n), p)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawScale", into = "RawScale")]
pub struct Scale {
    head: Vec<u64>,
    cycle: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawScale {
    #[serde(default)]
    head: Vec<u64>,
    cycle: Vec<u64>,
}

impl TryFrom<RawScale> for Scale {
    type Error = Error;
    fn try_from(raw: RawScale) -> Result<Self> {
        Scale::new(raw.head, raw.cycle)
    }
}

impl From<Scale> for RawScale {
    fn from(s: Scale) -> Self {
        RawScale {
            head: s.head,
            cycle: s.cycle,
        }
    }
}

impl Scale {
    pub fn new(head: Vec<u64>, cycle: Vec<u64>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidScale("the cycle must be nonempty".into()));
        }
        if head.iter().chain(cycle.iter()).any(|&r| r == 0) {
            return Err(Error::InvalidScale("ratios must be positive".into()));
        }
        if cycle.iter().all(|&r| r == 1) {
            return Err(Error::FiniteScale);
        }
        Ok(Scale { head, cycle })
    }

    /// The scale `(r^n)`.
    pub fn geometric(r: u64) -> Result<Self> {
        Scale::new(Vec::new(), vec![r])
    }

    pub fn head(&self) -> &[u64] {
        &self.head
    }

    pub fn cycle(&self) -> &[u64] {
        &self.cycle
    }

    /// The `i`-th ratio `p_i / p_{i-1}`, counting from 1.
    pub fn ratio(&self, i: usize) -> u64 {
        assert!(i >= 1, "ratios are indexed from 1");
        let h = self.head.len();
        if i <= h {
            self.head[i - 1]
        } else {
            self.cycle[(i - h - 1) % self.cycle.len()]
        }
    }

    /// `p_k`, with `p_0 = 1`.
    pub fn term(&self, k: usize) -> BigUint {
        let mut p = BigUint::one();
        for i in 1..=k {
            p *= self.ratio(i);
        }
        p
    }

    /// `[p_0, p_1, ..., p_k]`.
    pub fn terms(&self, k: usize) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(k + 1);
        let mut p = BigUint::one();
        out.push(p.clone());
        for i in 1..=k {
            p *= self.ratio(i);
            out.push(p.clone());
        }
        out
    }

    /// `p_k` as a `u64`, if it fits.
    pub fn term_u64(&self, k: usize) -> Result<u64> {
        let t = self.term(k);
        u64::try_from(&t).map_err(|_| Error::Overflow(format!("p_{k} = {t}")))
    }

    pub fn cycle_product(&self) -> BigUint {
        self.cycle.iter().fold(BigUint::one(), |acc, &r| acc * r)
    }

    /// Same ratio sequence with the shortest head and a primitive cycle.
    pub fn normalized(&self) -> Scale {
        let mut head = self.head.clone();
        let mut cycle = primitive_period(&self.cycle);
        while let (Some(&h), Some(&c)) = (head.last(), cycle.last()) {
            if h != c {
                break;
            }
            head.pop();
            cycle.rotate_right(1);
        }
        Scale { head, cycle }
    }
}

fn primitive_period(cycle: &[u64]) -> Vec<u64> {
    let n = cycle.len();
    for d in 1..=n {
        if n.is_multiple_of(d) && (0..n).all(|i| cycle[i] == cycle[i % d]) {
            return cycle[..d].to_vec();
        }
    }
    cycle.to_vec()
}

/// Two scales are equal when they have the same ratio sequence.
impl PartialEq for Scale {
    fn eq(&self, other: &Self) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.head == b.head && a.cycle == b.cycle
    }
}

impl Eq for Scale {}

/// `head:cycle`, or just the cycle when the head is empty.
impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u64]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        if self.head.is_empty() {
            write!(f, "{}", join(&self.cycle))
        } else {
            write!(f, "{}:{}", join(&self.head), join(&self.cycle))
        }
    }
}

pub fn scale_term(s: &Scale, k: usize) -> BigUint {
    s.term(k)
}

/// An exponent in `N ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Finite(u32),
    Inf,
}

impl Exponent {
    pub fn is_inf(self) -> bool {
        matches!(self, Exponent::Inf)
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Exponent::Finite(e) => Some(e),
            Exponent::Inf => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{e}"),
            Exponent::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(e) => s.serialize_u32(*e),
            Exponent::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s.eq_ignore_ascii_case("inf") => Ok(Exponent::Inf),
            serde_json::Value::Number(n) => n
                .as_u64()
                .and_then(|e| u32::try_from(e).ok())
                .map(Exponent::Finite)
                .ok_or_else(|| de::Error::custom("exponent must be a small nonnegative integer")),
            other => Err(de::Error::custom(format!("bad exponent {other}"))),
        }
    }
}

/// Prime to exponent map; absent primes have exponent 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiplicityProfile {
    entries: BTreeMap<u64, Exponent>,
}

impl MultiplicityProfile {
    pub fn new(entries: BTreeMap<u64, Exponent>) -> Result<Self> {
        let mut clean = BTreeMap::new();
        for (p, e) in entries {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            if e != Exponent::Finite(0) {
                clean.insert(p, e);
            }
        }
        Ok(MultiplicityProfile { entries: clean })
    }

    pub fn entries(&self) -> &BTreeMap<u64, Exponent> {
        &self.entries
    }

    pub fn exponent(&self, p: u64) -> Exponent {
        self.entries.get(&p).copied().unwrap_or(Exponent::Finite(0))
    }

    pub fn infinite_support(&self) -> BTreeSet<u64> {
        self.entries
            .iter()
            .filter(|(_, e)| e.is_inf())
            .map(|(&p, _)| p)
            .collect()
    }

    pub fn finite_part(&self) -> BTreeMap<u64, u32> {
        self.entries
            .iter()
            .filter_map(|(&p, e)| e.finite().map(|e| (p, e)))
            .collect()
    }

    /// Order of the torsion subgroup.
    pub fn torsion_order(&self) -> BigUint {
        self.finite_part()
            .iter()
            .fold(BigUint::one(), |acc, (&p, &e)| acc * BigUint::from(p).pow(e))
    }

    /// A scale realizing this profile: the finite part as prime head ratios,
    /// the infinite primes as the cycle.
    pub fn to_scale(&self) -> Result<Scale> {
        let mut head = Vec::new();
        for (p, e) in self.finite_part() {
            head.extend(std::iter::repeat_n(p, e as usize));
        }
        let cycle: Vec<u64> = self.infinite_support().into_iter().collect();
        if cycle.is_empty() {
            return Err(Error::FiniteScale);
        }
        Scale::new(head, cycle)
    }
}

impl fmt::Display for MultiplicityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(p, e)| format!("{p}: {e}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl Serialize for MultiplicityProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (p, e) in &self.entries {
            map.serialize_entry(&p.to_string(), e)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for MultiplicityProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, Exponent>::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for (k, e) in raw {
            let p: u64 = k
                .trim()
                .parse()
                .map_err(|_| de::Error::custom(format!("bad prime {k}")))?;
            entries.insert(p, e);
        }
        MultiplicityProfile::new(entries).map_err(de::Error::custom)
    }
}

/// `v_p` is infinite exactly for primes dividing the cycle product, and
/// otherwise equals the exponent of `p` in the head product.
pub fn multiplicity_profile(s: &Scale) -> MultiplicityProfile {
    let mut entries = BTreeMap::new();
    for &r in s.cycle() {
        for (p, _) in factor(r) {
            entries.insert(p, Exponent::Inf);
        }
    }
    for &r in s.head() {
        for (p, e) in factor(r) {
            let slot = entries.entry(p).or_insert(Exponent::Finite(0));
            if let Exponent::Finite(old) = *slot {
                *slot = Exponent::Finite(old + e);
            }
        }
    }
    MultiplicityProfile { entries }
}

pub fn equivalent(a: &Scale, b: &Scale) -> bool {
    multiplicity_profile(a) == multiplicity_profile(b)
}

pub fn profile_precedes(a: &MultiplicityProfile, b: &MultiplicityProfile) -> bool {
    if a.infinite_support() != b.infinite_support() {
        return false;
    }
    let fb = b.finite_part();
    a.finite_part().iter().all(|(p, &e)| fb.get(p).is_some_and(|&f| e <= f))
}

/// The factor order: same infinite support, and finite exponents of `a`
/// bounded by those of `b`.
pub fn precedes(a: &Scale, b: &Scale) -> bool {
    profile_precedes(&multiplicity_profile(a), &multiplicity_profile(b))
}

/// The cyclic factors `p^{v_p}` with `0 < v_p < ∞`, ordered by prime.
pub fn torsion_subgroup(s: &Scale) -> Vec<BigUint> {
    multiplicity_profile(s)
        .finite_part()
        .into_iter()
        .map(|(p, e)| BigUint::from(p).pow(e))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorsionClass {
    TorsionFree,
    FiniteTorsion,
    /// Not produced by [`classify`]: finite ratio data gives finite support.
    InfiniteTorsion,
}

pub fn classify_profile(p: &MultiplicityProfile) -> TorsionClass {
    if p.finite_part().is_empty() {
        TorsionClass::TorsionFree
    } else {
        TorsionClass::FiniteTorsion
    }
}

pub fn classify(s: &Scale) -> TorsionClass {
    classify_profile(&multiplicity_profile(s))
}

/// The split into infinite primes `I` and finite exponents `F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub infinite: BTreeSet<u64>,
    pub finite: BTreeMap<u64, u32>,
}

impl Decomposition {
    pub fn reconstruct(&self) -> MultiplicityProfile {
        let mut entries: BTreeMap<u64, Exponent> =
            self.finite.iter().map(|(&p, &e)| (p, Exponent::Finite(e))).collect();
        for &p in &self.infinite {
            entries.insert(p, Exponent::Inf);
        }
        MultiplicityProfile::new(entries).expect("decomposition holds primes only")
    }
}

pub fn decompose_profile(p: &MultiplicityProfile) -> Decomposition {
    Decomposition {
        infinite: p.infinite_support(),
        finite: p.finite_part(),
    }
}

pub fn decompose(s: &Scale) -> Decomposition {
    decompose_profile(&multiplicity_profile(s))
}

/// Replace every ratio by its prime factors; ratios equal to 1 vanish.
pub fn prime_refine(s: &Scale) -> Scale {
    let refine = |v: &[u64]| -> Vec<u64> {
        v.iter()
            .flat_map(|&r| {
                factor(r)
                    .into_iter()
                    .flat_map(|(p, e)| std::iter::repeat_n(p, e as usize))
            })
            .collect()
    };
    Scale::new(refine(s.head()), refine(s.cycle())).expect("refinement keeps the cycle product")
}

pub fn is_prime_scale(s: &Scale) -> bool {
    s.head().iter().chain(s.cycle()).all(|&r| is_prime(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(h: &[u64], c: &[u64]) -> Scale {
        Scale::new(h.to_vec(), c.to_vec()).unwrap()
    }

    fn prof(e: &[(u64, Exponent)]) -> MultiplicityProfile {
        MultiplicityProfile::new(e.iter().copied().collect()).unwrap()
    }

    use Exponent::{Finite, Inf};

    #[test]
    fn valuations() {
        assert_eq!(valuation_u64(8, 2).unwrap(), 3);
        assert_eq!(valuation_u64(7, 5).unwrap(), 0);
        assert_eq!(valuation_u64(360, 3).unwrap(), 2);
        assert_eq!(valuation_u64(0, 3), Err(Error::ZeroValuation));
        assert_eq!(valuation_u64(12, 4), Err(Error::NotPrime(4)));
    }

    #[test]
    fn terms() {
        assert_eq!(sc(&[], &[2]).term(5), BigUint::from(32u32));
        assert_eq!(sc(&[12], &[5]).term(3), BigUint::from(300u32));
        assert_eq!(sc(&[2, 3], &[6]).term(2), BigUint::from(6u32));
        assert_eq!(sc(&[], &[2]).term(0), BigUint::one());
    }

    #[test]
    fn construction_rules() {
        assert_eq!(Scale::new(vec![], vec![1]), Err(Error::FiniteScale));
        assert_eq!(Scale::new(vec![1, 1], vec![1, 1]), Err(Error::FiniteScale));
        assert!(Scale::new(vec![], vec![]).is_err());
        assert!(Scale::new(vec![0], vec![2]).is_err());
        assert!(Scale::new(vec![1, 3], vec![1, 2]).is_ok());
    }

    #[test]
    fn normal_form() {
        assert_eq!(sc(&[2, 2], &[2]).normalized().head(), &[] as &[u64]);
        assert_eq!(sc(&[2, 2], &[2]), sc(&[], &[2, 2]));
        assert_eq!(sc(&[3], &[2, 3]), sc(&[], &[3, 2]));
        assert_ne!(sc(&[4], &[2]), sc(&[], &[2]));
    }

    #[test]
    fn profiles() {
        assert_eq!(multiplicity_profile(&sc(&[], &[2])), prof(&[(2, Inf)]));
        assert_eq!(
            multiplicity_profile(&sc(&[12], &[5])),
            prof(&[(2, Finite(2)), (3, Finite(1)), (5, Inf)])
        );
        assert_eq!(multiplicity_profile(&sc(&[], &[6])), prof(&[(2, Inf), (3, Inf)]));
        assert_eq!(
            multiplicity_profile(&sc(&[2, 3], &[3, 1])),
            prof(&[(2, Finite(1)), (3, Inf)])
        );
    }

    #[test]
    fn equivalence_and_order() {
        assert!(equivalent(&sc(&[], &[2]), &sc(&[], &[4])));
        assert!(!equivalent(&sc(&[], &[2]), &sc(&[], &[3])));
        assert!(!precedes(&sc(&[], &[2]), &sc(&[], &[6])));
        assert!(precedes(&sc(&[2], &[5]), &sc(&[4], &[5])));
        assert!(!precedes(&sc(&[4], &[5]), &sc(&[2], &[5])));
        assert!(!precedes(&sc(&[3], &[5]), &sc(&[2], &[5])));
    }

    #[test]
    fn torsion() {
        assert!(torsion_subgroup(&sc(&[], &[2])).is_empty());
        assert_eq!(
            torsion_subgroup(&sc(&[12], &[5])),
            vec![BigUint::from(4u32), BigUint::from(3u32)]
        );
        assert_eq!(torsion_subgroup(&sc(&[9], &[2])), vec![BigUint::from(9u32)]);
        assert_eq!(classify(&sc(&[], &[2])), TorsionClass::TorsionFree);
        assert_eq!(classify(&sc(&[12], &[5])), TorsionClass::FiniteTorsion);
        assert_eq!(classify(&sc(&[], &[30])), TorsionClass::TorsionFree);
    }

    #[test]
    fn decompositions() {
        let d = decompose(&sc(&[], &[6]));
        assert_eq!(d.infinite, [2, 3].into_iter().collect());
        assert!(d.finite.is_empty());
        let d = decompose(&sc(&[9], &[2]));
        assert_eq!(d.infinite, [2].into_iter().collect());
        assert_eq!(d.finite, [(3, 2)].into_iter().collect());
        assert_eq!(d.reconstruct(), multiplicity_profile(&sc(&[9], &[2])));
    }

    #[test]
    fn refinement() {
        let r = prime_refine(&sc(&[], &[6]));
        assert_eq!(r.head(), &[] as &[u64]);
        assert_eq!(r.cycle(), &[2, 3]);
        let r = prime_refine(&sc(&[4], &[2]));
        assert_eq!(r.head(), &[2, 2]);
        assert_eq!(r.cycle(), &[2]);
        let p = sc(&[3, 2], &[5, 2]);
        let r = prime_refine(&p);
        assert_eq!((r.head(), r.cycle()), (p.head(), p.cycle()));
        let r = prime_refine(&sc(&[1, 12], &[1, 10]));
        assert!(is_prime_scale(&r));
    }

    #[test]
    fn profile_json() {
        let p: MultiplicityProfile = serde_json::from_str(r#"{"2":"inf","3":2}"#).unwrap();
        assert_eq!(p, prof(&[(2, Inf), (3, Finite(2))]));
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"2":"inf","3":2}"#);
        let s = p.to_scale().unwrap();
        assert_eq!(multiplicity_profile(&s), p);
        assert!(prof(&[(3, Finite(2))]).to_scale().is_err());
        let s: Scale = serde_json::from_str(r#"{"head":[12],"cycle":[5]}"#).unwrap();
        assert_eq!(s, sc(&[12], &[5]));
        assert!(serde_json::from_str::<Scale>(r#"{"cycle":[1]}"#).is_err());
    }
}
