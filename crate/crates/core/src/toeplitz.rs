//! Toeplitz windows: generation by hole filling, window-certified period
//! sets, skeletons, block recoding and the components of `σ^m`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::hash::Hash;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odometer::component_count;
use crate::scales::Scale;

/// Minimum number of verified translates before a cell counts as periodic.
pub const DEFAULT_MIN_TRANSLATES: usize = 4;

/// Stage `j` fills the residue class of the leftmost hole at or after this
/// position.
pub const FILL_ORIGIN: i64 = -1;

/// Largest supported number of stages.
pub const MAX_STAGES: usize = 48;

/// A finite piece of a sequence. `None` marks a hole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzWindow<S = u8> {
    offset: i64,
    symbols: Vec<Option<S>>,
    annotations: Vec<Option<u64>>,
}

impl<S: Clone + Eq + Hash + Ord> ToeplitzWindow<S> {
    pub fn new(offset: i64, symbols: Vec<Option<S>>, annotations: Vec<Option<u64>>) -> Result<Self> {
        if symbols.len() != annotations.len() {
            return Err(Error::InvalidArgument(
                "symbols and annotations differ in length".into(),
            ));
        }
        Ok(ToeplitzWindow {
            offset,
            symbols,
            annotations,
        })
    }

    /// A window without period annotations.
    pub fn from_word(offset: i64, symbols: Vec<Option<S>>) -> Self {
        let annotations = vec![None; symbols.len()];
        ToeplitzWindow {
            offset,
            symbols,
            annotations,
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// One past the last position.
    pub fn end(&self) -> i64 {
        self.offset + self.symbols.len() as i64
    }

    pub fn positions(&self) -> std::ops::Range<i64> {
        self.offset..self.end()
    }

    pub fn contains(&self, pos: i64) -> bool {
        self.positions().contains(&pos)
    }

    pub fn symbols(&self) -> &[Option<S>] {
        &self.symbols
    }

    pub fn annotations(&self) -> &[Option<u64>] {
        &self.annotations
    }

    /// The symbol at `pos`; `None` for holes and positions outside the window.
    pub fn get(&self, pos: i64) -> Option<&S> {
        if !self.contains(pos) {
            return None;
        }
        self.symbols[(pos - self.offset) as usize].as_ref()
    }

    pub fn annotation(&self, pos: i64) -> Option<u64> {
        if !self.contains(pos) {
            return None;
        }
        self.annotations[(pos - self.offset) as usize]
    }

    pub fn holes(&self) -> Vec<i64> {
        self.positions().filter(|&p| self.get(p).is_none()).collect()
    }

    /// `σ^i` of the window: position `n` of the result holds position `n + i`.
    pub fn shift(&self, i: i64) -> Self {
        ToeplitzWindow {
            offset: self.offset - i,
            symbols: self.symbols.clone(),
            annotations: self.annotations.clone(),
        }
    }

    /// Replaces the symbol at `pos`.
    pub fn with_symbol(&self, pos: i64, symbol: Option<S>) -> Self {
        let mut out = self.clone();
        if self.contains(pos) {
            out.symbols[(pos - self.offset) as usize] = symbol;
        }
        out
    }

    /// All hole-free factors of length `n`, with their starting positions.
    pub fn factors_at(&self, n: usize) -> Vec<(i64, Vec<S>)> {
        if n == 0 || n > self.len() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut run = 0usize;
        for k in 0..self.len() {
            if self.symbols[k].is_some() {
                run += 1;
            } else {
                run = 0;
            }
            if run >= n {
                let start = k + 1 - n;
                let word = self.symbols[start..=k]
                    .iter()
                    .map(|s| s.clone().expect("hole-free"))
                    .collect();
                out.push((self.offset + start as i64, word));
            }
        }
        out
    }

    /// The window language in length `n`.
    pub fn factors(&self, n: usize) -> BTreeSet<Vec<S>> {
        self.factors_at(n).into_iter().map(|(_, w)| w).collect()
    }
}

impl ToeplitzWindow<u8> {
    /// `0`/`1`/`?` rendering.
    pub fn to_symbol_string(&self) -> String {
        self.symbols
            .iter()
            .map(|s| match s {
                Some(d) => char::from_digit(u32::from(*d), 36).unwrap_or('#'),
                None => '?',
            })
            .collect()
    }

    pub fn parse(offset: i64, text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| match c {
                '?' => Ok(None),
                c => c
                    .to_digit(36)
                    .map(|d| Some(d as u8))
                    .ok_or_else(|| Error::InvalidArgument(format!("bad symbol {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ToeplitzWindow::from_word(offset, symbols))
    }
}

impl fmt::Display for ToeplitzWindow<u8> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.to_symbol_string(), self.offset)
    }
}

impl Serialize for ToeplitzWindow<u8> {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        serde_json::json!({
            "offset": self.offset,
            "symbols": self.to_symbol_string(),
            "annotations": self.annotations,
        })
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ToeplitzWindow<u8> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            offset: i64,
            symbols: String,
            #[serde(default)]
            annotations: Option<Vec<Option<u64>>>,
        }
        let raw = Raw::deserialize(d)?;
        let w = ToeplitzWindow::parse(raw.offset, &raw.symbols).map_err(de::Error::custom)?;
        match raw.annotations {
            Some(a) => ToeplitzWindow::new(raw.offset, w.symbols, a).map_err(de::Error::custom),
            None => Ok(w),
        }
    }
}

/// What one stage writes into the holes it fills.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageFill {
    Constant(u8),
    /// Consecutive filled cells cycle through this word.
    Alternating(Vec<u8>),
}

impl StageFill {
    pub fn word(&self) -> Vec<u8> {
        match self {
            StageFill::Constant(c) => vec![*c],
            StageFill::Alternating(w) => w.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FillRule {
    /// Odd stages fill 0, even stages fill 1.
    AlternatingConstants,
    /// Every stage alternates 0 and 1.
    AlternatingWords,
    /// Stage `j` uses entry `(j - 1) mod len`.
    General(Vec<StageFill>),
}

impl FillRule {
    pub fn general(stages: Vec<StageFill>) -> Result<Self> {
        if stages.is_empty() || stages.iter().any(|s| s.word().is_empty()) {
            return Err(Error::InvalidArgument("stage descriptors must be nonempty".into()));
        }
        Ok(FillRule::General(stages))
    }

    fn stages(&self) -> Vec<StageFill> {
        match self {
            FillRule::AlternatingConstants => vec![StageFill::Constant(0), StageFill::Constant(1)],
            FillRule::AlternatingWords => vec![StageFill::Alternating(vec![0, 1])],
            FillRule::General(v) => v.clone(),
        }
    }

    /// Fill word of stage `j ≥ 1`.
    pub fn stage_word(&self, j: usize) -> Vec<u8> {
        let st = self.stages();
        st[(j - 1) % st.len()].word()
    }

    /// `p_j = 2^j · lcm(L_1, ..., L_j)`, `L_i` the fill word lengths.
    pub fn stage_periods(&self, stages: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(stages);
        let mut l = 1u64;
        for j in 1..=stages {
            l = l.lcm(&(self.stage_word(j).len() as u64));
            out.push((1u64 << j) * l);
        }
        out
    }

    /// The scale `(p_j)` of stage periods.
    pub fn generating_scale(&self) -> Scale {
        let n = self.stages().len();
        let periods = self.stage_periods(n);
        let mut head = Vec::with_capacity(n);
        let mut prev = 1;
        for p in periods {
            head.push(p / prev);
            prev = p;
        }
        Scale::new(head, vec![2]).expect("cycle 2").normalized()
    }

    pub fn name(&self) -> String {
        match self {
            FillRule::AlternatingConstants => "constants".into(),
            FillRule::AlternatingWords => "words".into(),
            FillRule::General(_) => "general".into(),
        }
    }
}

impl Serialize for FillRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FillRule::General(v) => {
                let stages: Vec<serde_json::Value> = v
                    .iter()
                    .map(|f| match f {
                        StageFill::Constant(c) => serde_json::json!(c),
                        StageFill::Alternating(w) => serde_json::json!(w),
                    })
                    .collect();
                serde_json::json!({ "stages": stages }).serialize(s)
            }
            other => s.serialize_str(&other.name()),
        }
    }
}

impl<'de> Deserialize<'de> for FillRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        rule_from_value(&v).map_err(de::Error::custom)
    }
}

fn rule_from_value(v: &serde_json::Value) -> Result<FillRule> {
    use serde_json::Value;
    match v {
        Value::String(s) => match s.to_ascii_lowercase().as_str() {
            "constants" => Ok(FillRule::AlternatingConstants),
            "words" => Ok(FillRule::AlternatingWords),
            other => Err(Error::InvalidArgument(format!("unknown rule {other}"))),
        },
        Value::Object(o) => {
            let stages = o
                .get("stages")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidArgument("rule object needs a \"stages\" array".into()))?;
            let digit = |x: &Value| -> Result<u8> {
                x.as_u64()
                    .and_then(|d| u8::try_from(d).ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad symbol {x}")))
            };
            let fills = stages
                .iter()
                .map(|st| match st {
                    Value::Number(_) => Ok(StageFill::Constant(digit(st)?)),
                    Value::Array(w) => Ok(StageFill::Alternating(w.iter().map(digit).collect::<Result<_>>()?)),
                    Value::String(w) => Ok(StageFill::Alternating(
                        w.chars()
                            .map(|c| {
                                c.to_digit(36)
                                    .map(|d| d as u8)
                                    .ok_or_else(|| Error::InvalidArgument(format!("bad symbol {c:?}")))
                            })
                            .collect::<Result<_>>()?,
                    )),
                    other => Err(Error::InvalidArgument(format!("bad stage {other}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            FillRule::general(fills)
        }
        other => Err(Error::InvalidArgument(format!("bad rule {other}"))),
    }
}

impl std::str::FromStr for FillRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(t).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            rule_from_value(&v)
        } else {
            rule_from_value(&serde_json::Value::String(t.to_string()))
        }
    }
}

/// Stage `j` fills every second hole: the class mod `2^j` of the leftmost
/// remaining hole at or after [`FILL_ORIGIN`]. A cell `i` filled at stage `j`
/// receives `word_j[⌊i / 2^j⌋ mod |word_j|]`.
pub fn generate(rule: &FillRule, stages: usize, lo: i64, hi: i64) -> Result<ToeplitzWindow<u8>> {
    if !(lo <= 0 && 0 <= hi) {
        return Err(Error::InvalidArgument(format!("window [{lo}, {hi}] must contain 0")));
    }
    if stages > MAX_STAGES {
        return Err(Error::InvalidArgument(format!("at most {MAX_STAGES} stages")));
    }
    let periods = rule.stage_periods(stages);
    let mut classes = Vec::with_capacity(stages);
    let mut hole = 0i64;
    for j in 1..=stages {
        let step = 1i64 << (j - 1);
        let first = FILL_ORIGIN + (hole - FILL_ORIGIN).rem_euclid(step);
        classes.push(first.rem_euclid(2 * step));
        hole = (first + step).rem_euclid(2 * step);
    }
    let words: Vec<Vec<u8>> = (1..=stages).map(|j| rule.stage_word(j)).collect();
    let n = (hi - lo + 1) as usize;
    let mut symbols = Vec::with_capacity(n);
    let mut annotations = Vec::with_capacity(n);
    for i in lo..=hi {
        let stage = (1..=stages).find(|&j| (i - classes[j - 1]).rem_euclid(1i64 << j) == 0);
        match stage {
            Some(j) => {
                let w = &words[j - 1];
                let idx = i.div_euclid(1i64 << j).rem_euclid(w.len() as i64) as usize;
                symbols.push(Some(w[idx]));
                annotations.push(Some(periods[j - 1]));
            }
            None => {
                symbols.push(None);
                annotations.push(None);
            }
        }
    }
    ToeplitzWindow::new(lo, symbols, annotations)
}

/// `per_p` on a window: the cells whose residue class mod `p` is hole-free
/// and constant, among the classes with at least `min_translates + 1` cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerSet {
    pub p: u64,
    pub members: BTreeSet<i64>,
    /// Cells whose class is large enough to be judged at all.
    pub certified: BTreeSet<i64>,
    pub min_translates: usize,
}

pub fn per_p<S: Clone + Eq + Hash + Ord>(w: &ToeplitzWindow<S>, p: u64, min_translates: usize) -> PerSet {
    assert!(p >= 1, "p must be positive");
    let mut classes: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for pos in w.positions() {
        classes.entry(pos.rem_euclid(p as i64)).or_default().push(pos);
    }
    let mut members = BTreeSet::new();
    let mut certified = BTreeSet::new();
    for cells in classes.values() {
        if cells.len() < min_translates + 1 {
            continue;
        }
        certified.extend(cells.iter().copied());
        let first = w.get(cells[0]);
        if first.is_some() && cells.iter().all(|&c| w.get(c) == first) {
            members.extend(cells.iter().copied());
        }
    }
    PerSet {
        p,
        members,
        certified,
        min_translates,
    }
}

/// A chain of essential periods, certified on a window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodStructure {
    pub periods: Vec<u64>,
    pub min_translates: usize,
    pub window_len: usize,
}

impl PeriodStructure {
    pub fn last(&self) -> u64 {
        self.periods.last().copied().unwrap_or(1)
    }

    /// `p_i`, with `p_0 = 1`.
    pub fn level(&self, i: usize) -> Result<u64> {
        match i {
            0 => Ok(1),
            i if i <= self.periods.len() => Ok(self.periods[i - 1]),
            _ => Err(Error::InvalidArgument(format!(
                "level {i} beyond the certified structure of length {}",
                self.periods.len()
            ))),
        }
    }
}

/// Keeps `p_n` when no smaller `p` has the same period set on the region
/// certified for `p_n`.
pub fn essential_periods<S: Clone + Eq + Hash + Ord>(
    w: &ToeplitzWindow<S>,
    candidates: &[u64],
    min_translates: usize,
) -> Result<PeriodStructure> {
    if candidates.contains(&0) {
        return Err(Error::NotChain("periods must be positive".into()));
    }
    for c in candidates.windows(2) {
        if c[1] % c[0] != 0 || c[1] == c[0] {
            return Err(Error::NotChain(format!("{} does not strictly divide {}", c[0], c[1])));
        }
    }
    let top = candidates.last().copied().unwrap_or(1);
    let sets: Vec<PerSet> = (1..=top).map(|p| per_p(w, p, min_translates)).collect();
    let mut periods = Vec::new();
    for &pn in candidates {
        let own = &sets[(pn - 1) as usize];
        let region = &own.certified;
        let restrict = |s: &BTreeSet<i64>| -> BTreeSet<i64> { s.intersection(region).copied().collect() };
        let mine = restrict(&own.members);
        if (1..pn).all(|p| restrict(&sets[(p - 1) as usize].members) != mine) {
            periods.push(pn);
        }
    }
    Ok(PeriodStructure {
        periods,
        min_translates,
        window_len: w.len(),
    })
}

/// `P(x) = ∪ per_{p_n}(x)`; with no periods, `per_1`.
pub fn periodic_part<S: Clone + Eq + Hash + Ord>(w: &ToeplitzWindow<S>, ps: &PeriodStructure) -> BTreeSet<i64> {
    if ps.periods.is_empty() {
        return per_p(w, 1, ps.min_translates).members;
    }
    ps.periods
        .iter()
        .flat_map(|&p| per_p(w, p, ps.min_translates).members)
        .collect()
}

pub fn aperiodic_part<S: Clone + Eq + Hash + Ord>(w: &ToeplitzWindow<S>, ps: &PeriodStructure) -> BTreeSet<i64> {
    let per = periodic_part(w, ps);
    w.positions().filter(|p| !per.contains(p)).collect()
}

/// Every hole-free factor of length at most `max_len` that touches the
/// aperiodic part also occurs inside the periodic part.
pub fn aperiodic_factors_covered<S: Clone + Eq + Hash + Ord>(
    w: &ToeplitzWindow<S>,
    ps: &PeriodStructure,
    max_len: usize,
) -> bool {
    let per = periodic_part(w, ps);
    for n in 1..=max_len {
        let mut inside = BTreeSet::new();
        let mut touching = Vec::new();
        for (start, word) in w.factors_at(n) {
            if (start..start + n as i64).all(|p| per.contains(&p)) {
                inside.insert(word);
            } else {
                touching.push(word);
            }
        }
        if touching.iter().any(|word| !inside.contains(word)) {
            return false;
        }
    }
    true
}

/// Class of `σ^m(u)` in the partition `{A_n^i}`: `m mod p_i`.
pub fn skeleton_class(m: i64, i: usize, ps: &PeriodStructure) -> Result<u64> {
    let p = ps.level(i)?;
    Ok(m.rem_euclid(p as i64) as u64)
}

/// One period of `σ^m(u)` read on `per_{p_i}(u)` shifted by `m`; holes
/// elsewhere. Two shifts carry the same signature exactly when they share a
/// skeleton class.
pub fn skeleton_signature<S: Clone + Eq + Hash + Ord>(
    w: &ToeplitzWindow<S>,
    m: i64,
    i: usize,
    ps: &PeriodStructure,
) -> Result<Vec<Option<S>>> {
    let p = ps.level(i)?;
    let per = per_p(w, p, ps.min_translates);
    (0..p as i64)
        .map(|k| {
            let pos = k + m;
            if !w.contains(pos) {
                return Err(Error::InvalidArgument(format!("position {pos} outside the window")));
            }
            Ok(if per.members.contains(&pos) {
                w.get(pos).cloned()
            } else {
                None
            })
        })
        .collect()
}

/// The `m`-block recoding. Block `b` covers `[b m, b m + m)`; blocks that
/// stick out of the window are dropped, blocks with a hole are holes, and a
/// block's annotation is `P / gcd(P, m)`, `P` the largest constituent period.
pub fn recode_blocks<S: Clone + Eq + Hash + Ord>(w: &ToeplitzWindow<S>, m: usize) -> Result<ToeplitzWindow<Vec<S>>> {
    if m == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    let mi = m as i64;
    let first = (w.offset() + mi - 1).div_euclid(mi);
    let last = w.end().div_euclid(mi);
    let mut symbols = Vec::new();
    let mut annotations = Vec::new();
    for b in first..last.max(first) {
        let cells: Vec<i64> = (b * mi..(b + 1) * mi).collect();
        let syms: Option<Vec<S>> = cells.iter().map(|&c| w.get(c).cloned()).collect();
        let ann = match &syms {
            Some(_) => cells
                .iter()
                .map(|&c| w.annotation(c))
                .collect::<Option<Vec<u64>>>()
                .and_then(|a| a.into_iter().max())
                .map(|p| p / p.gcd(&(m as u64))),
            None => None,
        };
        symbols.push(syms);
        annotations.push(ann);
    }
    ToeplitzWindow::new(first, symbols, annotations)
}

/// Components of `(X, σ^m)`.
#[derive(Clone, Debug)]
pub struct SigmaComponents<S = u8> {
    pub m: u64,
    /// `M = lim gcd(m, p_k)`, the number of components.
    pub big_m: u64,
    pub t: u64,
    /// `(p_n / M)` over the certified periods divisible by `M`.
    pub component_structure: Vec<u64>,
    /// `σ^i(u)` for `i < M`.
    pub representatives: Vec<ToeplitzWindow<S>>,
}

impl<S> SigmaComponents<S> {
    pub fn is_minimal(&self) -> bool {
        self.big_m == 1
    }
}

pub fn sigma_m_components<S: Clone + Eq + Hash + Ord>(
    rule: &FillRule,
    w: &ToeplitzWindow<S>,
    ps: &PeriodStructure,
    m: u64,
) -> Result<SigmaComponents<S>> {
    let dec = component_count(&rule.generating_scale(), m)?;
    let big_m = dec.s;
    if !ps.last().is_multiple_of(big_m) {
        return Err(Error::InvalidArgument(format!(
            "certified structure {:?} does not reach a multiple of {big_m}",
            ps.periods
        )));
    }
    let component_structure = ps
        .periods
        .iter()
        .filter(|&&p| p % big_m == 0)
        .map(|&p| p / big_m)
        .filter(|&p| p > 1)
        .collect();
    let representatives = (0..big_m as i64).map(|i| w.shift(i)).collect();
    Ok(SigmaComponents {
        m,
        big_m,
        t: dec.t,
        component_structure,
        representatives,
    })
}

/// `Aut(X, σ^{p_k}) ≅ Aut(T, τ)^{p_k} ⋊ Sym(p_k)`, with `Aut(T, τ)` left
/// symbolic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AutTowerDescriptor {
    pub level: usize,
    pub count: u64,
    pub component_structure: Vec<u64>,
    pub symbolic: String,
}

pub fn aut_tower_descriptor(ps: &PeriodStructure, k: usize) -> Result<AutTowerDescriptor> {
    let count = ps.level(k)?;
    let component_structure = ps.periods[k..].iter().map(|&p| p / count).collect();
    let symbolic = if k == 0 {
        "Aut(X,σ)".to_string()
    } else {
        format!("Aut(T,τ)^{count} ⋊ Sym({count})")
    };
    Ok(AutTowerDescriptor {
        level: k,
        count,
        component_structure,
        symbolic,
    })
}

/// `M!` with `M = gcd(m, p)`, `p` the last certified period.
pub fn f_lower_bound(ps: &PeriodStructure, m: u64) -> BigUint {
    let big_m = m.gcd(&ps.last());
    (2..=big_m).fold(BigUint::one(), |acc, k| acc * k)
}

/// Number of distinct hole-free factors of length `n`.
pub fn complexity<S: Clone + Eq + Hash + Ord>(w: &ToeplitzWindow<S>, n: usize) -> Result<usize> {
    if n == 0 || n > w.len() {
        return Err(Error::InvalidArgument(format!("length {n} outside 1..={}", w.len())));
    }
    let seen: HashSet<Vec<S>> = w.factors_at(n).into_iter().map(|(_, word)| word).collect();
    Ok(seen.len())
}

/// The window `[-len/2, len - len/2 - 1]`.
pub fn centered(len: usize) -> (i64, i64) {
    let half = (len / 2) as i64;
    (-half, len as i64 - half - 1)
}
