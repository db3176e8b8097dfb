//! The groups `Z_w^s ⋊ Sym(s)`, their realization on `Z/p_K`, the tower maps
//! `j_k`, the finite-subgroup growth `F` and the distinguishing procedure.

use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odometer::{component_count, ComponentDecomposition, Element};
use crate::scales::{multiplicity_profile, valuation, Exponent, MultiplicityProfile, Scale};

/// Largest `p_K` for which a stage will tabulate a whole bijection.
pub const BIJECTION_LIMIT: u64 = 1 << 22;

/// `Aut(Z_(p_n), +level) ≅ Z_w^s ⋊ Sym(s)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub w: MultiplicityProfile,
    pub s: u64,
    pub level: u64,
}

/// `((a_0, ..., a_{s-1}), π)`; symbols are numbered from 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemidirectElement {
    pub descriptor: GroupDescriptor,
    pub components: Vec<Element>,
    pub perm: Vec<usize>,
}

impl SemidirectElement {
    pub fn identity(descriptor: GroupDescriptor, scale: &Scale, depth: usize) -> Self {
        let s = descriptor.s as usize;
        SemidirectElement {
            descriptor,
            components: vec![Element::zero(scale.clone(), depth); s],
            perm: (0..s).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.components.iter().all(Element::is_zero) && self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn is_pure_permutation(&self) -> bool {
        self.components.iter().all(Element::is_zero)
    }
}

impl Serialize for SemidirectElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let tops: Vec<String> = self.components.iter().map(|c| c.top().to_string()).collect();
        serde_json::json!({
            "descriptor": self.descriptor,
            "components": tops,
            "perm": self.perm,
        })
        .serialize(s)
    }
}

fn check_pair(a: &SemidirectElement, b: &SemidirectElement) -> Result<()> {
    if a.descriptor != b.descriptor {
        return Err(Error::Mismatch("descriptors differ".into()));
    }
    if a.components.first().map(Element::depth) != b.components.first().map(Element::depth) {
        return Err(Error::Mismatch("truncation depths differ".into()));
    }
    Ok(())
}

/// `(a, π1)(b, π2) = ((a_{π2(i)} + b_i)_i, π1 ∘ π2)`, the composition of the
/// maps `(i, u) ↦ (π(i), u + a_i)`.
pub fn sd_mul(a: &SemidirectElement, b: &SemidirectElement) -> Result<SemidirectElement> {
    check_pair(a, b)?;
    let s = a.perm.len();
    let mut components = Vec::with_capacity(s);
    for i in 0..s {
        components.push(a.components[b.perm[i]].add(&b.components[i])?);
    }
    let perm = (0..s).map(|i| a.perm[b.perm[i]]).collect();
    Ok(SemidirectElement {
        descriptor: a.descriptor.clone(),
        components,
        perm,
    })
}

pub fn sd_inv(a: &SemidirectElement) -> SemidirectElement {
    let s = a.perm.len();
    let mut inv = vec![0; s];
    for (i, &p) in a.perm.iter().enumerate() {
        inv[p] = i;
    }
    let components = (0..s).map(|i| a.components[inv[i]].neg()).collect();
    SemidirectElement {
        descriptor: a.descriptor.clone(),
        components,
        perm: inv,
    }
}

/// `Aut(Z_(p_n), +m)` acting on `Z/p_K`.
///
/// Component `j < s` has base point `j` and chart `y ↦ t^{-1} (y - j) / s`.
#[derive(Clone, Debug)]
pub struct AutStage {
    scale: Scale,
    depth: usize,
    dec: ComponentDecomposition,
    modulus: BigUint,
    component_modulus: BigUint,
    t: BigUint,
    t_inv: BigUint,
}

impl AutStage {
    pub fn new(scale: &Scale, m: u64, depth: usize) -> Result<Self> {
        let dec = component_count(scale, m)?;
        if depth < dec.base_level + 1 {
            return Err(Error::InsufficientDepth {
                needed: dec.base_level + 1,
                have: depth,
            });
        }
        let modulus = scale.term(depth);
        let component_modulus = &modulus / dec.s;
        let t = BigUint::from(dec.t);
        let t_inv = if component_modulus.is_one() {
            BigUint::zero()
        } else {
            t.modinv(&component_modulus).expect("t is a unit on the component")
        };
        Ok(AutStage {
            scale: scale.clone(),
            depth,
            dec,
            modulus,
            component_modulus,
            t,
            t_inv,
        })
    }

    /// The stage at level `p_k`.
    pub fn tower(scale: &Scale, k: usize, depth: usize) -> Result<Self> {
        AutStage::new(scale, scale.term_u64(k)?, depth)
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self) -> u64 {
        self.dec.m
    }

    pub fn decomposition(&self) -> &ComponentDecomposition {
        &self.dec
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        GroupDescriptor {
            w: self.dec.component_profile.clone(),
            s: self.dec.s,
            level: self.dec.m,
        }
    }

    pub fn component_depth(&self) -> usize {
        self.depth - self.dec.base_level
    }

    /// `p_K`.
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    fn s(&self) -> usize {
        self.dec.s as usize
    }

    fn component(&self, top: &BigUint) -> Element {
        Element::from_top(self.dec.component_scale.clone(), self.component_depth(), top)
    }

    pub fn identity(&self) -> SemidirectElement {
        SemidirectElement::identity(self.descriptor(), &self.dec.component_scale, self.component_depth())
    }

    pub fn element(&self, tops: &[BigUint], perm: Vec<usize>) -> Result<SemidirectElement> {
        let s = self.s();
        if tops.len() != s || perm.len() != s {
            return Err(Error::InvalidArgument(format!("expected {s} components and symbols")));
        }
        let mut seen = vec![false; s];
        for &p in &perm {
            if p >= s || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        let components = tops
            .iter()
            .map(|t| self.component(&(t % &self.component_modulus)))
            .collect();
        Ok(SemidirectElement {
            descriptor: self.descriptor(),
            components,
            perm,
        })
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> SemidirectElement {
        let s = self.s();
        let tops: Vec<BigUint> = (0..s).map(|_| rng.gen_biguint_below(&self.component_modulus)).collect();
        let mut perm: Vec<usize> = (0..s).collect();
        perm.shuffle(rng);
        self.element(&tops, perm).expect("well formed")
    }

    pub fn pure_permutation(&self, perm: Vec<usize>) -> Result<SemidirectElement> {
        self.element(&vec![BigUint::zero(); self.s()], perm)
    }

    fn check(&self, g: &SemidirectElement) -> Result<()> {
        if g.descriptor != self.descriptor() {
            return Err(Error::Mismatch("element belongs to another stage".into()));
        }
        if g.components.iter().any(|c| c.depth() != self.component_depth()) {
            return Err(Error::Mismatch("component depth differs from the stage".into()));
        }
        Ok(())
    }

    /// Image of `y ∈ Z/p_K`: `y - i + π(i) + s t a_i` with `i = y mod s`.
    pub fn apply(&self, g: &SemidirectElement, y: &BigUint) -> Result<BigUint> {
        self.check(g)?;
        Ok(self.apply_unchecked(g, y))
    }

    fn apply_unchecked(&self, g: &SemidirectElement, y: &BigUint) -> BigUint {
        let y = y % &self.modulus;
        let i = (&y % self.dec.s).to_usize().expect("below s");
        let a = g.components[i].top() % &self.component_modulus;
        let shift = (&self.t * a) % &self.component_modulus * self.dec.s;
        (y - i + g.perm[i] + shift) % &self.modulus
    }

    /// The whole induced permutation of `Z/p_K`.
    pub fn bijection(&self, g: &SemidirectElement) -> Result<Vec<u64>> {
        self.check(g)?;
        let n = self.tabulable()?;
        let s = self.dec.s;
        let w = n / s;
        let t = self.t.to_u64().unwrap_or(0) % w.max(1);
        let mut out = vec![0u64; n as usize];
        for i in 0..s as usize {
            let a = (g.components[i].top() % &self.component_modulus)
                .to_u64()
                .expect("small");
            let shift = ((t as u128 * a as u128) % w as u128) as u64 * s;
            let base = g.perm[i] as u64;
            for u in 0..w {
                let y = i as u64 + u * s;
                out[y as usize] = (y - i as u64 + base + shift) % n;
            }
        }
        Ok(out)
    }

    fn tabulable(&self) -> Result<u64> {
        match self.modulus.to_u64() {
            Some(n) if n <= BIJECTION_LIMIT => Ok(n),
            _ => Err(Error::BudgetExceeded(format!(
                "p_K = {} exceeds {BIJECTION_LIMIT}",
                self.modulus
            ))),
        }
    }

    /// Reads an automorphism off its values at the base points `0..s`.
    pub fn factor_map<F: Fn(&BigUint) -> BigUint>(&self, f: F) -> Result<SemidirectElement> {
        let s = self.s();
        let mut tops = Vec::with_capacity(s);
        let mut perm = Vec::with_capacity(s);
        for j in 0..s {
            let fj = f(&BigUint::from(j)) % &self.modulus;
            let pj = (&fj % self.dec.s).to_usize().expect("below s");
            let a = ((fj - pj) / self.dec.s * &self.t_inv) % &self.component_modulus;
            tops.push(a);
            perm.push(pj);
        }
        self.element(&tops, perm)
    }

    /// Factors a tabulated bijection of `Z/p_K`, failing unless it commutes
    /// with `+m`.
    pub fn factor_bijection(&self, f: &[u64]) -> Result<SemidirectElement> {
        let n = self.tabulable()?;
        if f.len() as u64 != n {
            return Err(Error::InvalidArgument(format!("expected a table of length {n}")));
        }
        let g = self.factor_map(|y| BigUint::from(f[y.to_usize().expect("small")]))?;
        if self.bijection(&g)? != f {
            return Err(Error::Mismatch("the map does not commute with +m".into()));
        }
        Ok(g)
    }

    /// The translation `y ↦ y + z`.
    pub fn translation(&self, z: &BigUint) -> SemidirectElement {
        self.factor_map(|y| y + z).expect("translations commute with +m")
    }
}

/// `j_k`: the element of `from` viewed inside the stage `to`, whose level is
/// a multiple of the level of `from`.
pub fn inclusion_jk(from: &AutStage, to: &AutStage, a: &SemidirectElement) -> Result<SemidirectElement> {
    if from.scale != to.scale || from.depth != to.depth {
        return Err(Error::Mismatch("stages over different truncations".into()));
    }
    if !to.level().is_multiple_of(from.level()) {
        return Err(Error::NotChain(format!(
            "{} does not divide {}",
            from.level(),
            to.level()
        )));
    }
    from.check(a)?;
    to.factor_map(|y| from.apply_unchecked(a, y))
}

fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `|T(Z_w)|^s · s!`.
pub fn max_finite_subgroup_order(d: &GroupDescriptor) -> Result<BigUint> {
    if d.s == 0 {
        return Err(Error::InvalidArgument("s must be positive".into()));
    }
    let s = u32::try_from(d.s).map_err(|_| Error::Overflow(format!("s = {}", d.s)))?;
    Ok(d.w.torsion_order().pow(s) * factorial(d.s))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FGrowthRecord {
    pub level: u64,
    pub f_value: BigUint,
}

impl Serialize for FGrowthRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_json::json!({ "level": self.level, "f": self.f_value.to_string() }).serialize(s)
    }
}

pub fn check_chain(levels: &[u64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::NotChain("empty".into()));
    }
    if levels.contains(&0) {
        return Err(Error::NotChain("levels must be positive".into()));
    }
    for w in levels.windows(2) {
        if w[1] % w[0] != 0 {
            return Err(Error::NotChain(format!("{} does not divide {}", w[0], w[1])));
        }
    }
    Ok(())
}

pub fn f_sequence(scale: &Scale, levels: &[u64]) -> Result<Vec<FGrowthRecord>> {
    check_chain(levels)?;
    levels
        .iter()
        .map(|&m| {
            let d = crate::odometer::aut_structure(scale, m)?;
            Ok(FGrowthRecord {
                level: m,
                f_value: max_finite_subgroup_order(&d)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    EquivalentScales,
    /// `witness` has infinite multiplicity on `infinite_side` only; along
    /// `levels` the F-value of that side grows while the other stays put.
    DistinctByInfiniteSupport {
        witness: u64,
        infinite_side: Side,
        levels: Vec<u64>,
        f_first: Vec<BigUint>,
        f_second: Vec<BigUint>,
    },
    /// Equal infinite support, different torsion. `undecided` is always set:
    /// the invariance results only settle the torsion-free case.
    SameInfiniteSupport {
        torsion_first: BTreeMap<u64, u32>,
        torsion_second: BTreeMap<u64, u32>,
        undecided: bool,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::EquivalentScales => "EquivalentScales",
            Verdict::DistinctByInfiniteSupport { .. } => "DistinctByInfiniteSupport",
            Verdict::SameInfiniteSupport { .. } => "SameInfiniteSupport",
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs = |v: &Vec<BigUint>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let tors = |m: &BTreeMap<u64, u32>| {
            m.iter()
                .map(|(p, e)| (p.to_string(), *e))
                .collect::<BTreeMap<String, u32>>()
        };
        let v = match self {
            Verdict::EquivalentScales => serde_json::json!({ "verdict": self.name() }),
            Verdict::DistinctByInfiniteSupport {
                witness,
                infinite_side,
                levels,
                f_first,
                f_second,
            } => {
                serde_json::json!({
                    "verdict": self.name(),
                    "witness": witness,
                    "infinite_side": infinite_side,
                    "levels": levels,
                    "f_first": strs(f_first),
                    "f_second": strs(f_second),
                })
            }
            Verdict::SameInfiniteSupport {
                torsion_first,
                torsion_second,
                undecided,
            } => serde_json::json!({
                "verdict": self.name(),
                "torsion_first": tors(torsion_first),
                "torsion_second": tors(torsion_second),
                "undecided": undecided,
                "note": "full isomorphism invariance is guaranteed only in the torsion-free case",
            }),
        };
        v.serialize(s)
    }
}

pub fn distinguish(a: &Scale, b: &Scale) -> Result<Verdict> {
    let pa = multiplicity_profile(a);
    let pb = multiplicity_profile(b);
    if pa == pb {
        return Ok(Verdict::EquivalentScales);
    }
    let ia = pa.infinite_support();
    let ib = pb.infinite_support();
    if let Some(&q) = ia.symmetric_difference(&ib).next() {
        let (infinite_side, finite) = if ia.contains(&q) {
            (Side::First, &pb)
        } else {
            (Side::Second, &pa)
        };
        let l = finite.exponent(q).finite().expect("q is finite on the other side");
        let levels = vec![q.pow(l), q.pow(l + 1)];
        let f = |s: &Scale| -> Result<Vec<BigUint>> {
            Ok(f_sequence(s, &levels)?.into_iter().map(|r| r.f_value).collect())
        };
        return Ok(Verdict::DistinctByInfiniteSupport {
            witness: q,
            infinite_side,
            f_first: f(a)?,
            f_second: f(b)?,
            levels,
        });
    }
    Ok(Verdict::SameInfiniteSupport {
        torsion_first: pa.finite_part(),
        torsion_second: pb.finite_part(),
        undecided: true,
    })
}

/// A pure permutation commuting with `+qx` but not with `+x`.
#[derive(Clone, Debug)]
pub struct GapWitness {
    pub stage: AutStage,
    pub lambda: SemidirectElement,
    /// `λ` rotates the components by this amount.
    pub rotation: u64,
    pub commutes_with_qx: bool,
    pub commutes_with_x: bool,
    /// Whether the two relations were also checked on tabulated bijections.
    pub bijections_checked: bool,
}

/// Works at the stage `s = q^{ν_q(x)+1}`, where `+qx` fixes every component
/// and `+x` moves them.
pub fn centralizer_gap_witness(scale: &Scale, x: &Element, q: u64) -> Result<GapWitness> {
    if x.scale() != scale {
        return Err(Error::Mismatch("x is not over the given scale".into()));
    }
    if multiplicity_profile(scale).exponent(q) != Exponent::Inf {
        return Err(Error::InvalidArgument(format!(
            "{q} does not have infinite multiplicity"
        )));
    }
    let depth = x.depth();
    let n = x.modulus();
    let e = valuation(&n, q)?;
    if x.is_zero() {
        return Err(Error::InvalidArgument("x vanishes at this truncation".into()));
    }
    let v = valuation(x.top(), q)?;
    if v >= e {
        return Err(Error::InvalidArgument(format!(
            "x has no {q}-primary part at this truncation"
        )));
    }
    let s = q
        .checked_pow(v + 1)
        .ok_or_else(|| Error::Overflow(format!("{q}^{}", v + 1)))?;
    let stage = AutStage::new(scale, s, depth)?;
    let rotation = (x.top() % s).to_u64().expect("below s");
    let perm = (0..s).map(|i| ((i + rotation) % s) as usize).collect();
    let lambda = stage.pure_permutation(perm)?;
    let tx = stage.translation(x.top());
    let tqx = stage.translation(&(x.top() * q));
    let commutes = |t: &SemidirectElement| -> Result<bool> { Ok(sd_mul(&lambda, t)? == sd_mul(t, &lambda)?) };
    let mut commutes_with_qx = commutes(&tqx)?;
    let mut commutes_with_x = commutes(&tx)?;
    let bijections_checked = stage.modulus().to_u64().is_some_and(|n| n <= 1 << 20);
    if bijections_checked {
        let l = stage.bijection(&lambda)?;
        let nn = stage.modulus().to_u64().expect("small");
        let shift = |z: u64| -> Vec<u64> { (0..nn).map(|y| (y + z) % nn).collect() };
        let compose = |f: &[u64], g: &[u64]| -> Vec<u64> { g.iter().map(|&y| f[y as usize]).collect() };
        let xs = shift((x.top() % nn).to_u64().expect("small"));
        let qxs = shift(((x.top() * q) % nn).to_u64().expect("small"));
        commutes_with_qx &= compose(&l, &qxs) == compose(&qxs, &l);
        commutes_with_x |= compose(&l, &xs) == compose(&xs, &l);
    }
    Ok(GapWitness {
        stage,
        lambda,
        rotation,
        commutes_with_qx,
        commutes_with_x,
        bijections_checked,
    })
}
