//! Brute-force checks on finite objects. Nothing here calls the formula code
//! it is meant to check; the arithmetic is done again on plain integers.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::toeplitz::ToeplitzWindow;

/// Largest modulus accepted by [`commuting_bijections_count`].
pub const CENTRALIZER_LIMIT: u64 = 64;
/// Largest modulus accepted by [`commuting_bijections_scan`].
pub const SCAN_LIMIT: u64 = 9;
/// Largest group order accepted by [`max_subgroup_bruteforce`].
pub const SUBGROUP_LIMIT: u64 = 200;
/// Default number of candidate rules [`block_code_autos`] may examine.
pub const DEFAULT_RULE_BUDGET: u64 = 1 << 20;

/// `x ↦ x + m` on `Z/N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuotientAction {
    pub n: u64,
    pub m: u64,
}

impl QuotientAction {
    pub fn new(n: u64, m: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("modulus must be positive".into()));
        }
        Ok(QuotientAction { n, m: m % n })
    }

    pub fn step(&self, x: u64) -> u64 {
        (x + self.m) % self.n
    }

    /// Orbits in order of their least element, each listed along the action.
    pub fn orbits(&self) -> Vec<Vec<u64>> {
        let mut seen = vec![false; self.n as usize];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start as usize] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut x = start;
            while !seen[x as usize] {
                seen[x as usize] = true;
                orbit.push(x);
                x = self.step(x);
            }
            out.push(orbit);
        }
        out
    }
}

/// Number of orbits of `+m` on `Z/N`, by traversal.
pub fn orbit_count(n: u64, m: u64) -> Result<u64> {
    Ok(QuotientAction::new(n, m)?.orbits().len() as u64)
}

pub fn commutes(f: &[u64], n: u64, m: u64) -> bool {
    (0..n).all(|x| f[((x + m) % n) as usize] == (f[x as usize] + m) % n)
}

/// Number of bijections of `Z/N` commuting with `+m`, built orbit by orbit:
/// the image of an orbit representative fixes the image of its whole orbit,
/// and each candidate image is checked before it is counted.
pub fn commuting_bijections_count(n: u64, m: u64) -> Result<BigUint> {
    if n > CENTRALIZER_LIMIT {
        return Err(Error::BudgetExceeded(format!("N = {n} exceeds {CENTRALIZER_LIMIT}")));
    }
    let act = QuotientAction::new(n, m)?;
    let orbits = act.orbits();
    let mut orbit_of = vec![0usize; n as usize];
    for (k, o) in orbits.iter().enumerate() {
        for &x in o {
            orbit_of[x as usize] = k;
        }
    }
    let mut memo = HashMap::new();
    let all: Vec<usize> = (0..orbits.len()).collect();
    Ok(count_from(&act, &orbits, &orbit_of, &all, &all, &mut memo))
}

fn lengths(orbits: &[Vec<u64>], idx: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = idx.iter().map(|&k| orbits[k].len()).collect();
    v.sort_unstable();
    v
}

fn count_from(
    act: &QuotientAction,
    orbits: &[Vec<u64>],
    orbit_of: &[usize],
    sources: &[usize],
    targets: &[usize],
    memo: &mut HashMap<(Vec<usize>, Vec<usize>), BigUint>,
) -> BigUint {
    if sources.is_empty() {
        return BigUint::one();
    }
    let key = (lengths(orbits, sources), lengths(orbits, targets));
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let src = &orbits[sources[0]];
    let mut total = BigUint::zero();
    for &tk in targets {
        for &y in &orbits[tk] {
            // f(src[i]) = y + i m must land in target orbit tk, bijectively.
            let mut img = HashSet::new();
            let mut ok = true;
            let mut z = y;
            for _ in 0..src.len() {
                if orbit_of[z as usize] != tk || !img.insert(z) {
                    ok = false;
                    break;
                }
                z = act.step(z);
            }
            // going once round the source orbit must close up the image
            ok &= z == y && img.len() == orbits[tk].len();
            if ok {
                let rest_t: Vec<usize> = targets.iter().copied().filter(|&k| k != tk).collect();
                total += count_from(act, orbits, orbit_of, &sources[1..], &rest_t, memo);
            }
        }
    }
    memo.insert(key, total.clone());
    total
}

/// The same count by scanning all `N!` bijections.
pub fn commuting_bijections_scan(n: u64, m: u64) -> Result<u64> {
    if n > SCAN_LIMIT {
        return Err(Error::BudgetExceeded(format!("N = {n} exceeds {SCAN_LIMIT}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    let mut perm: Vec<u64> = (0..n).collect();
    let mut count = 0;
    loop {
        if commutes(&perm, n, m % n) {
            count += 1;
        }
        if !next_permutation(&mut perm) {
            return Ok(count);
        }
    }
}

fn next_permutation(v: &mut [u64]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A uniformly chosen bijection of `Z/N` commuting with `+m`.
pub fn sample_commuting_bijection<R: Rng + ?Sized>(n: u64, m: u64, rng: &mut R) -> Result<Vec<u64>> {
    let act = QuotientAction::new(n, m)?;
    let orbits = act.orbits();
    let mut targets: Vec<usize> = (0..orbits.len()).collect();
    targets.shuffle(rng);
    let mut f = vec![0u64; n as usize];
    for (src, &tk) in orbits.iter().zip(&targets) {
        let mut y = *orbits[tk].choose(rng).expect("orbits are nonempty");
        for &x in src {
            f[x as usize] = y;
            y = act.step(y);
        }
    }
    Ok(f)
}

/// A radius-`r` sliding block code applied with phase `n mod m` at position
/// `n`, recorded on the neighborhoods seen in the window.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalRule {
    pub radius: usize,
    pub phases: Vec<BTreeMap<Vec<u8>, u8>>,
}

impl LocalRule {
    /// The `i` with `|i| ≤ r` such that the rule reads off `x_{n+i}`.
    pub fn shift_amount(&self) -> Option<i64> {
        let r = self.radius as i64;
        (-r..=r).find(|&i| {
            self.phases
                .iter()
                .all(|f| f.iter().all(|(nb, &out)| nb[(r + i) as usize] == out))
        })
    }

    fn collapse(mut self) -> Self {
        if self.phases.windows(2).all(|w| w[0] == w[1]) {
            self.phases.truncate(1);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockCodeReport {
    pub radius: usize,
    pub m: usize,
    /// Window-certified rules, one phase when the phases coincide.
    #[serde(skip)]
    pub rules: Vec<LocalRule>,
    /// Rules expressed as shifts, in the same order (`None` otherwise).
    pub shifts: Vec<Option<i64>>,
    pub candidates_examined: u64,
    /// Set when the window has no hole-free neighborhoods at all.
    pub degenerate: bool,
}

/// Radius-`r`, `m`-phase block codes on a binary window that, on the shifts
/// `σ^j u` with `j < m`, keep the window language, are injective to within
/// the window and reach every factor of the window.
pub fn block_code_autos(w: &ToeplitzWindow<u8>, r: usize, m: usize, budget: u64) -> Result<BlockCodeReport> {
    if r > 2 {
        return Err(Error::InvalidArgument("radius at most 2".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if w.symbols().iter().flatten().any(|&s| s > 1) {
        return Err(Error::InvalidArgument("binary alphabet only".into()));
    }
    let k = 2 * r + 1;
    let domain: Vec<Vec<u8>> = w.factors(k).into_iter().collect();
    if domain.is_empty() {
        let rule = LocalRule {
            radius: r,
            phases: vec![BTreeMap::new()],
        };
        return Ok(BlockCodeReport {
            radius: r,
            m,
            shifts: vec![rule.shift_amount()],
            rules: vec![rule],
            candidates_examined: 0,
            degenerate: true,
        });
    }
    let bits = domain.len() * m;
    if bits >= 63 || (1u64 << bits) > budget {
        return Err(Error::BudgetExceeded(format!(
            "2^{bits} candidate rules exceed the budget of {budget}"
        )));
    }
    let index: HashMap<&[u8], usize> = domain.iter().enumerate().map(|(i, d)| (d.as_slice(), i)).collect();
    let base = w.offset();
    let len = w.len();
    // neighborhood index of each window cell (None near holes and edges)
    let nb: Vec<Option<usize>> = (0..len)
        .map(|q| {
            if q < r || q + r >= len {
                return None;
            }
            let cells: Option<Vec<u8>> = (q - r..=q + r).map(|c| w.symbols()[c]).collect();
            cells.and_then(|c| index.get(c.as_slice()).copied())
        })
        .collect();
    let ell = (6 * (r + 1)).min(60);
    let language: HashSet<u64> = w.factors(ell).iter().map(|f| pack(f)).collect();
    let radius_inv = 3 * (r + 1);
    let mut rules = BTreeSet::new();
    let total = 1u64 << bits;
    for code in 0..total {
        let out = |phase: usize, d: usize| -> u8 { ((code >> (phase * domain.len() + d)) & 1) as u8 };
        let mut images = Vec::with_capacity(m);
        let mut ok = true;
        for j in 0..m {
            let mut img = Vec::with_capacity(len);
            let mut run = 0usize;
            let mut acc = 0u64;
            let mask = (1u64 << ell) - 1;
            for (q, cell) in nb.iter().enumerate() {
                let v = cell.map(|d| {
                    let pos = base + q as i64;
                    let phase = (pos - j as i64).rem_euclid(m as i64) as usize;
                    out(phase, d)
                });
                match v {
                    Some(b) => {
                        run += 1;
                        acc = ((acc << 1) | u64::from(b)) & mask;
                        if run >= ell && !language.contains(&(acc | (1u64 << ell))) {
                            ok = false;
                            break;
                        }
                    }
                    None => run = 0,
                }
                img.push(v);
            }
            if !ok {
                break;
            }
            images.push(img);
        }
        if !ok || !surjective(&images, &language, ell) || !injective(w, &images, m, radius_inv) {
            continue;
        }
        let phases = (0..m)
            .map(|phase| {
                domain
                    .iter()
                    .enumerate()
                    .map(|(d, nbh)| (nbh.clone(), out(phase, d)))
                    .collect()
            })
            .collect();
        rules.insert(LocalRule { radius: r, phases }.collapse());
    }
    let rules: Vec<LocalRule> = rules.into_iter().collect();
    Ok(BlockCodeReport {
        radius: r,
        m,
        shifts: rules.iter().map(LocalRule::shift_amount).collect(),
        rules,
        candidates_examined: total,
        degenerate: false,
    })
}

/// Binary word as an integer with a leading marker bit.
fn pack(word: &[u8]) -> u64 {
    word.iter().fold(1u64, |acc, &b| (acc << 1) | u64::from(b))
}

fn surjective(images: &[Vec<Option<u8>>], language: &HashSet<u64>, ell: usize) -> bool {
    let mut seen = HashSet::new();
    for img in images {
        for win in img.windows(ell) {
            if let Some(word) = win.iter().copied().collect::<Option<Vec<u8>>>() {
                seen.insert(pack(&word));
            }
        }
    }
    language.iter().all(|f| seen.contains(f))
}

/// No two cells with the same image context and phase carry different source
/// symbols.
fn injective(w: &ToeplitzWindow<u8>, images: &[Vec<Option<u8>>], m: usize, radius: usize) -> bool {
    let mut seen: HashMap<(usize, Vec<u8>), u8> = HashMap::new();
    for (j, img) in images.iter().enumerate() {
        if img.len() < 2 * radius + 1 {
            continue;
        }
        for q in radius..img.len() - radius {
            let Some(src) = w.symbols()[q] else { continue };
            let Some(ctx) = img[q - radius..=q + radius]
                .iter()
                .copied()
                .collect::<Option<Vec<u8>>>()
            else {
                continue;
            };
            let phase = (w.offset() + q as i64 - j as i64).rem_euclid(m as i64) as usize;
            if *seen.entry((phase, ctx)).or_insert(src) != src {
                return false;
            }
        }
    }
    true
}

/// Largest subgroup of `(Z/N)^d ⋊ Sym(d)` whose intersection with `(Z/N)^d`
/// lies in `((N/τ) Z/N)^d`, found by growing subgroups one generator at a
/// time. The group acts on `d` copies of `Z/N` by `(i, u) ↦ (π(i), u + a_i)`.
pub fn max_subgroup_bruteforce(n: u64, d: usize, tau: u64) -> Result<u64> {
    if n == 0 || d == 0 || tau == 0 || !n.is_multiple_of(tau) {
        return Err(Error::InvalidArgument("need N, d, τ positive with τ | N".into()));
    }
    let order = (n as u128).pow(d as u32) * (1..=d as u128).product::<u128>();
    if order > SUBGROUP_LIMIT as u128 {
        return Err(Error::BudgetExceeded(format!(
            "group order {order} exceeds {SUBGROUP_LIMIT}"
        )));
    }
    let points = n as usize * d;
    let mut elements: Vec<Vec<u16>> = Vec::new();
    let mut allowed_translation: Vec<bool> = Vec::new();
    let mut perms: Vec<Vec<usize>> = vec![(0..d).collect()];
    let mut p: Vec<u64> = (0..d as u64).collect();
    while next_permutation(&mut p) {
        perms.push(p.iter().map(|&x| x as usize).collect());
    }
    let unit = n / tau;
    for pi in &perms {
        for code in 0..n.pow(d as u32) {
            let a: Vec<u64> = (0..d).map(|i| (code / n.pow(i as u32)) % n).collect();
            let mut g = vec![0u16; points];
            for i in 0..d {
                for u in 0..n {
                    g[i * n as usize + u as usize] = (pi[i] * n as usize + ((u + a[i]) % n) as usize) as u16;
                }
            }
            let identity_perm = pi.iter().enumerate().all(|(i, &x)| i == x);
            allowed_translation.push(!identity_perm || a.iter().all(|&x| x % unit == 0));
            elements.push(g);
        }
    }
    let lookup: HashMap<Vec<u16>, usize> = elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
    let size = elements.len();
    let mul = |x: usize, y: usize| -> usize {
        // x after y
        let g: Vec<u16> = elements[y].iter().map(|&pt| elements[x][pt as usize]).collect();
        lookup[&g]
    };
    let table: Vec<Vec<usize>> = (0..size).map(|x| (0..size).map(|y| mul(x, y)).collect()).collect();
    let identity = lookup[&(0..points as u16).collect::<Vec<u16>>()];
    let closure = |gens: &[usize]| -> Vec<bool> {
        let mut inside = vec![false; size];
        inside[identity] = true;
        let mut queue = VecDeque::from([identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = table[x][g];
                if !inside[y] {
                    inside[y] = true;
                    queue.push_back(y);
                }
            }
        }
        inside
    };
    let admissible = |h: &[bool]| h.iter().enumerate().all(|(x, &inn)| !inn || allowed_translation[x]);
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let start = closure(&[]);
    seen.insert(start.clone());
    let mut frontier = vec![(start, Vec::<usize>::new())];
    let mut best = 1u64;
    while let Some((h, gens)) = frontier.pop() {
        best = best.max(h.iter().filter(|&&x| x).count() as u64);
        for (g, _) in h.iter().enumerate().filter(|(_, &inside)| !inside) {
            let mut more = gens.clone();
            more.push(g);
            let h2 = closure(&more);
            if admissible(&h2) && seen.insert(h2.clone()) {
                frontier.push((h2, more));
            }
        }
    }
    Ok(best)
}
