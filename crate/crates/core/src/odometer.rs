//! Truncated odometer elements and the minimal components of `+m`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::GroupDescriptor;
use crate::scales::{factor, multiplicity_profile, Exponent, MultiplicityProfile, Scale};

/// A coherent residue vector `(x_1, ..., x_K)` with `x_i` taken mod `p_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    scale: Scale,
    residues: Vec<BigUint>,
}

impl Element {
    pub fn new(scale: Scale, residues: Vec<BigUint>) -> Result<Self> {
        if residues.is_empty() {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        let terms = scale.terms(residues.len());
        for (i, x) in residues.iter().enumerate() {
            if x >= &terms[i + 1] {
                return Err(Error::InvalidArgument(format!(
                    "residue {x} out of range at index {}",
                    i + 1
                )));
            }
            if i > 0 && (x % &terms[i]) != residues[i - 1] {
                return Err(Error::InvalidArgument(format!(
                    "incoherent residues at index {}",
                    i + 1
                )));
            }
        }
        Ok(Element { scale, residues })
    }

    pub fn zero(scale: Scale, depth: usize) -> Self {
        Element::from_top(scale, depth, &BigUint::zero())
    }

    /// The element whose deepest coordinate is `top mod p_K`.
    pub fn from_top(scale: Scale, depth: usize, top: &BigUint) -> Self {
        assert!(depth >= 1, "depth must be at least 1");
        let terms = scale.terms(depth);
        let residues = terms[1..].iter().map(|p| top % p).collect();
        Element { scale, residues }
    }

    pub fn random<R: Rng + ?Sized>(scale: Scale, depth: usize, rng: &mut R) -> Self {
        let top = rng.gen_biguint_below(&scale.term(depth));
        Element::from_top(scale, depth, &top)
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn depth(&self) -> usize {
        self.residues.len()
    }

    pub fn residues(&self) -> &[BigUint] {
        &self.residues
    }

    /// `x_K`, which determines every other coordinate.
    pub fn top(&self) -> &BigUint {
        self.residues.last().expect("depth is at least 1")
    }

    pub fn modulus(&self) -> BigUint {
        self.scale.term(self.depth())
    }

    pub fn is_zero(&self) -> bool {
        self.top().is_zero()
    }

    fn check_compatible(&self, other: &Element) -> Result<()> {
        if self.depth() != other.depth() {
            return Err(Error::Mismatch(format!(
                "depths {} and {}",
                self.depth(),
                other.depth()
            )));
        }
        if self.scale != other.scale {
            return Err(Error::Mismatch(format!("scales {} and {}", self.scale, other.scale)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_compatible(other)?;
        let top = (self.top() + other.top()) % self.modulus();
        Ok(Element::from_top(self.scale.clone(), self.depth(), &top))
    }

    pub fn neg(&self) -> Element {
        let n = self.modulus();
        let top = (&n - self.top()) % &n;
        Element::from_top(self.scale.clone(), self.depth(), &top)
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.add(&other.neg())
    }

    pub fn scalar_mul(&self, k: &BigInt) -> Element {
        let n = BigInt::from(self.modulus());
        let top = (BigInt::from(self.top().clone()) * k).mod_floor(&n);
        Element::from_top(self.scale.clone(), self.depth(), &top.to_biguint().expect("reduced"))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r: Vec<String> = self.residues.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", r.join(","))
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let residues: Vec<serde_json::Value> = self
            .residues
            .iter()
            .map(|x| serde_json::Value::Number(serde_json::Number::from_str(&x.to_string()).expect("decimal")))
            .collect();
        serde_json::json!({ "scale": self.scale, "residues": residues }).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            scale: Scale,
            residues: Vec<serde_json::Value>,
        }
        let raw = Raw::deserialize(d)?;
        let mut residues = Vec::with_capacity(raw.residues.len());
        for v in raw.residues {
            let text = match v {
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::String(s) => s,
                other => return Err(de::Error::custom(format!("bad residue {other}"))),
            };
            residues.push(BigUint::from_str(&text).map_err(de::Error::custom)?);
        }
        Element::new(raw.scale, residues).map_err(de::Error::custom)
    }
}

/// The image of the integer `m` in the odometer, truncated at depth `K`.
pub fn embed_int(m: impl Into<BigInt>, scale: &Scale, depth: usize) -> Element {
    let m: BigInt = m.into();
    let n = BigInt::from(scale.term(depth));
    let top = m.mod_floor(&n).to_biguint().expect("reduced");
    Element::from_top(scale.clone(), depth, &top)
}

pub fn add(x: &Element, y: &Element) -> Result<Element> {
    x.add(y)
}

/// The odometer metric `2^{-i}`, `i` being the first index where the
/// coordinates differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distance {
    Exact {
        first_difference: usize,
    },
    /// Equal through the whole truncation: the distance is at most `2^{-(depth+1)}`.
    TruncationLimited {
        depth: usize,
    },
}

impl Distance {
    pub fn is_truncation_limited(self) -> bool {
        matches!(self, Distance::TruncationLimited { .. })
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact { first_difference } => write!(f, "2^-{first_difference}"),
            Distance::TruncationLimited { depth } => write!(f, "<= 2^-{} (truncation-limited)", depth + 1),
        }
    }
}

pub fn distance(x: &Element, y: &Element) -> Result<Distance> {
    x.check_compatible(y)?;
    Ok(match x.residues.iter().zip(&y.residues).position(|(a, b)| a != b) {
        Some(i) => Distance::Exact {
            first_difference: i + 1,
        },
        None => Distance::TruncationLimited { depth: x.depth() },
    })
}

/// Minimal components of `(Z_(p_n), +m)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentDecomposition {
    pub m: u64,
    /// Number of components.
    pub s: u64,
    /// `m / s`, a unit on each component.
    pub t: u64,
    pub component_profile: MultiplicityProfile,
    /// Least `k ≥ 1` with `s | p_k`.
    pub stabilization_index: usize,
    /// Least `k ≥ 0` with `s | p_k`; components are read off `x_k` at this level.
    pub base_level: usize,
    /// The scale `(p_{base_level + n} / s)_n` of each component.
    pub component_scale: Scale,
}

pub fn component_count(scale: &Scale, m: u64) -> Result<ComponentDecomposition> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let profile = multiplicity_profile(scale);
    let mut s = 1u64;
    let mut entries = profile.entries().clone();
    for (a, b) in factor(m) {
        let r = match profile.exponent(a) {
            Exponent::Inf => b,
            Exponent::Finite(e) => {
                let r = b.min(e);
                if e > r {
                    entries.insert(a, Exponent::Finite(e - r));
                } else {
                    entries.remove(&a);
                }
                r
            }
        };
        s *= a.pow(r);
    }
    let component_profile = MultiplicityProfile::new(entries).expect("primes only");
    let sb = BigUint::from(s);
    let mut base_level = 0;
    let mut p = BigUint::one();
    while !(&p % &sb).is_zero() {
        base_level += 1;
        p *= scale.ratio(base_level);
    }
    let component_scale = component_scale(scale, base_level, s)?;
    Ok(ComponentDecomposition {
        m,
        s,
        t: m / s,
        component_profile,
        stabilization_index: base_level.max(1),
        base_level,
        component_scale,
    })
}

fn component_scale(scale: &Scale, base_level: usize, s: u64) -> Result<Scale> {
    let first = scale.term(base_level + 1) / s;
    let first = u64::try_from(&first).map_err(|_| Error::Overflow(format!("component ratio {first}")))?;
    let h = scale.head().len();
    let mut head = vec![first];
    let start = base_level + 2;
    for i in start..=h {
        head.push(scale.ratio(i));
    }
    let mut cycle = scale.cycle().to_vec();
    let shift = (start.max(h + 1) - h - 1) % cycle.len();
    cycle.rotate_left(shift);
    Ok(Scale::new(head, cycle)?.normalized())
}

/// Component index `x_k mod s`, `k` being the base level of the decomposition.
pub fn component_of(x: &Element, m: u64) -> Result<u64> {
    let dec = component_count(x.scale(), m)?;
    if dec.s == 1 {
        return Ok(0);
    }
    if dec.base_level > x.depth() {
        return Err(Error::InsufficientDepth {
            needed: dec.base_level,
            have: x.depth(),
        });
    }
    let r = &x.residues()[dec.base_level - 1] % dec.s;
    Ok(u64::try_from(&r).expect("below s"))
}

/// The conjugacy `y ↦ t^{-1} (y - x) / s` from the component of `x` under
/// `+m` onto the component odometer with `+1`.
pub fn conjugacy_to_component(scale: &Scale, m: u64, x: &Element, y: &Element) -> Result<Element> {
    x.check_compatible(y)?;
    if x.scale() != scale {
        return Err(Error::Mismatch("elements are not over the given scale".into()));
    }
    let dec = component_count(scale, m)?;
    let depth = x.depth();
    if depth < dec.base_level + 1 {
        return Err(Error::InsufficientDepth {
            needed: dec.base_level + 1,
            have: depth,
        });
    }
    let n = x.modulus();
    let diff = (y.top() + &n - x.top()) % &n;
    let s = BigUint::from(dec.s);
    if !(&diff % &s).is_zero() {
        return Err(Error::OutsideComponent);
    }
    let w = &n / &s;
    let t_inv = BigUint::from(dec.t).modinv(&w).unwrap_or_else(BigUint::zero);
    let top = ((diff / &s) * t_inv) % &w;
    Ok(Element::from_top(dec.component_scale, depth - dec.base_level, &top))
}

pub fn aut_structure(scale: &Scale, m: u64) -> Result<GroupDescriptor> {
    let dec = component_count(scale, m)?;
    Ok(GroupDescriptor {
        w: dec.component_profile,
        s: dec.s,
        level: m,
    })
}
