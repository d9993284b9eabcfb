//! Finite truncations of left-preorders relative to a subgroup C: sign maps
//! on a symmetric ball with values in {+1, -1, 0}, zero exactly on C, closed
//! under products of positives and under multiplication by C on either side.
//!
//! A truncation validates necessary conditions only; nothing here claims a
//! truncation extends to a full preorder unless a constructive witness or a
//! deeper enumeration says so.

use crate::bass_serre::QuotientGraph;
use crate::words::{FreeProduct, SymmetricSet, Word};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// The subgroup C that a cone is relative to, as a membership oracle.
#[derive(Clone, Copy)]
pub enum Relative<'a> {
    Trivial,
    Subgroup(&'a QuotientGraph),
}

impl Relative<'_> {
    pub fn contains(&self, w: &Word) -> bool {
        match self {
            Relative::Trivial => w.is_identity(),
            Relative::Subgroup(g) => g.membership(w),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("domain has {0} sign slots, over the enumeration guard")]
    GuardExceeded(usize),
    #[error("sign undefined on domain element {0:?}")]
    MissingSign(String),
    #[error("seed element {0:?} lies in C (or is not positive)")]
    SeedInC(String),
    #[error("cone is not extendable to the requested domain")]
    NotExtendable,
    #[error("comparator is partial on the ball (at {0:?} vs {1:?})")]
    PartialComparator(String, String),
    #[error("every ball element is C-equivalent; no maximal element")]
    TrivialOnBall,
    #[error("incompatible extension domains at {0:?}")]
    IncompatibleDomains(String),
}

/// Sign assignment on a finite symmetric domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedCone {
    domain: Vec<Word>,
    signs: Vec<i8>,
}

impl TruncatedCone {
    pub fn from_fn(domain: &SymmetricSet, f: impl Fn(&Word) -> i8) -> TruncatedCone {
        let domain: Vec<Word> = domain.elems().to_vec();
        let signs = domain.iter().map(f).collect();
        TruncatedCone { domain, signs }
    }

    pub fn from_parts(domain: Vec<Word>, signs: Vec<i8>) -> TruncatedCone {
        debug_assert!(domain.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(domain.len(), signs.len());
        TruncatedCone { domain, signs }
    }

    pub fn domain(&self) -> &[Word] {
        &self.domain
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, w: &Word) -> Option<i8> {
        self.domain.binary_search(w).ok().map(|i| self.signs[i])
    }

    pub fn positives(&self) -> Vec<Word> {
        self.domain
            .iter()
            .zip(&self.signs)
            .filter(|(_, s)| **s == 1)
            .map(|(w, _)| w.clone())
            .collect()
    }

    /// Restriction to a smaller symmetric domain.
    pub fn restrict(&self, domain: &SymmetricSet) -> Option<TruncatedCone> {
        let mut signs = Vec::new();
        for w in domain.elems() {
            signs.push(self.sign(w)?);
        }
        Some(TruncatedCone {
            domain: domain.elems().to_vec(),
            signs,
        })
    }

    pub fn render(&self, fp: &FreeProduct) -> String {
        self.domain
            .iter()
            .zip(&self.signs)
            .map(|(w, s)| {
                let mark = match s {
                    1 => "+",
                    -1 => "-",
                    _ => "0",
                };
                format!("{}{}", mark, fp.display(w))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One reported axiom violation, with witnesses.
#[derive(Clone, Debug)]
pub enum Violation {
    NotSymmetric(Word),
    MissingIdentity,
    InverseMismatch(Word),
    ZeroSetMismatch(Word),
    Closure(Word, Word),
    Absorption(Word, Word),
}

impl Violation {
    pub fn render(&self, fp: &FreeProduct) -> String {
        match self {
            Violation::NotSymmetric(w) => {
                format!("domain misses the inverse of {}", fp.display(w))
            }
            Violation::MissingIdentity => "domain misses the identity".to_string(),
            Violation::InverseMismatch(w) => {
                format!("sign({}) is not minus the sign of its inverse", fp.display(w))
            }
            Violation::ZeroSetMismatch(w) => {
                format!("sign({}) disagrees with C-membership", fp.display(w))
            }
            Violation::Closure(u, v) => format!(
                "positives {} and {} have a non-positive product",
                fp.display(u),
                fp.display(v)
            ),
            Violation::Absorption(u, v) => format!(
                "product of positive {} and C-element {} is not positive",
                fp.display(u),
                fp.display(v)
            ),
        }
    }
}

/// Index structure over a symmetric domain: inverses, C-membership, and all
/// in-domain product triples. Build once per domain, reuse across cones.
pub struct DomainTable {
    pub elems: Vec<Word>,
    pub inv: Vec<usize>,
    pub zero: Vec<bool>,
    /// (i, j, k) with elems[i]·elems[j] = elems[k].
    pub triples: Vec<[u32; 3]>,
    pub by_slot: Vec<Vec<u32>>,
    pub identity_ok: bool,
    pub asymmetric: Vec<Option<Word>>,
}

impl DomainTable {
    pub fn build(fp: &FreeProduct, domain: &SymmetricSet, relative: Relative<'_>) -> DomainTable {
        let elems: Vec<Word> = domain.elems().to_vec();
        let index: HashMap<&Word, usize> = elems.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let mut inv = vec![0usize; elems.len()];
        let mut asymmetric = vec![None; elems.len()];
        for (i, w) in elems.iter().enumerate() {
            let wi = fp.inv(w);
            match index.get(&wi) {
                Some(&j) => inv[i] = j,
                None => {
                    asymmetric[i] = Some(w.clone());
                    inv[i] = i;
                }
            }
        }
        let zero: Vec<bool> = elems.iter().map(|w| relative.contains(w)).collect();
        let mut triples = Vec::new();
        for (i, u) in elems.iter().enumerate() {
            for (j, v) in elems.iter().enumerate() {
                let p = fp.mul(u, v);
                if let Some(&k) = index.get(&p) {
                    triples.push([i as u32, j as u32, k as u32]);
                }
            }
        }
        let mut by_slot = vec![Vec::new(); elems.len()];
        for (t, tri) in triples.iter().enumerate() {
            for &s in tri {
                by_slot[s as usize].push(t as u32);
            }
        }
        for v in &mut by_slot {
            v.dedup();
        }
        let identity_ok = index.contains_key(&Word::identity());
        DomainTable {
            elems,
            inv,
            zero,
            triples,
            by_slot,
            identity_ok,
            asymmetric,
        }
    }
}

/// Check the four truncation axioms; the empty list means the cone is valid.
pub fn check_axioms(
    fp: &FreeProduct,
    cone: &TruncatedCone,
    relative: Relative<'_>,
) -> Result<Vec<Violation>, ConeError> {
    let domain = SymmetricSet::new(fp, cone.domain().to_vec());
    let table = DomainTable::build(fp, &domain, relative);
    check_axioms_with_table(&table, cone)
}

pub fn check_axioms_with_table(
    table: &DomainTable,
    cone: &TruncatedCone,
) -> Result<Vec<Violation>, ConeError> {
    let mut out = Vec::new();
    if !table.identity_ok {
        out.push(Violation::MissingIdentity);
    }
    let mut signs = Vec::with_capacity(table.elems.len());
    for w in &table.elems {
        match cone.sign(w) {
            Some(s) => signs.push(s),
            None => return Err(ConeError::MissingSign(format!("{w:?}"))),
        }
    }
    for (i, w) in table.elems.iter().enumerate() {
        if let Some(missing) = &table.asymmetric[i] {
            out.push(Violation::NotSymmetric(missing.clone()));
            continue;
        }
        if signs[i] != -signs[table.inv[i]] {
            out.push(Violation::InverseMismatch(w.clone()));
        }
        if (signs[i] == 0) != table.zero[i] {
            out.push(Violation::ZeroSetMismatch(w.clone()));
        }
    }
    for tri in &table.triples {
        let (i, j, k) = (tri[0] as usize, tri[1] as usize, tri[2] as usize);
        if signs[i] == 1 && signs[j] == 1 && signs[k] != 1 {
            out.push(Violation::Closure(
                table.elems[i].clone(),
                table.elems[j].clone(),
            ));
        }
        if signs[i] == 1 && table.zero[j] && signs[k] != 1 {
            out.push(Violation::Absorption(
                table.elems[i].clone(),
                table.elems[j].clone(),
            ));
        }
        if table.zero[i] && signs[j] == 1 && signs[k] != 1 {
            out.push(Violation::Absorption(
                table.elems[j].clone(),
                table.elems[i].clone(),
            ));
        }
    }
    Ok(out)
}

const PLUS: u8 = 1;
const ZERO: u8 = 2;
const MINUS: u8 = 4;

fn compose_mask(a: u8, b: u8) -> u8 {
    let mut out = 0u8;
    for sa in [PLUS, ZERO, MINUS] {
        if a & sa == 0 {
            continue;
        }
        for sb in [PLUS, ZERO, MINUS] {
            if b & sb == 0 {
                continue;
            }
            out |= match (sa, sb) {
                (PLUS, PLUS) | (PLUS, ZERO) | (ZERO, PLUS) => PLUS,
                (MINUS, MINUS) | (MINUS, ZERO) | (ZERO, MINUS) => MINUS,
                (ZERO, ZERO) => ZERO,
                _ => PLUS | ZERO | MINUS,
            };
        }
    }
    out
}

struct Search<'a> {
    table: &'a DomainTable,
    masks: Vec<u8>,
    trail: Vec<(usize, u8)>,
}

impl<'a> Search<'a> {
    fn new(table: &'a DomainTable) -> Search<'a> {
        let masks = table
            .zero
            .iter()
            .map(|&z| if z { ZERO } else { PLUS | MINUS })
            .collect();
        Search {
            table,
            masks,
            trail: vec![],
        }
    }

    fn set(&mut self, slot: usize, mask: u8, queue: &mut Vec<usize>) -> bool {
        let cur = self.masks[slot];
        let new = cur & mask;
        if new == 0 {
            return false;
        }
        if new != cur {
            self.trail.push((slot, cur));
            self.masks[slot] = new;
            queue.push(slot);
        }
        true
    }

    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        while let Some(slot) = queue.pop() {
            let other = self.table.inv[slot];
            let flipped = flip_mask(self.masks[slot]);
            if !self.set(other, flipped, &mut queue) {
                return false;
            }
            for t in self.table.by_slot[slot].clone() {
                let tri = self.table.triples[t as usize];
                let (i, j, k) = (tri[0] as usize, tri[1] as usize, tri[2] as usize);
                let dk = compose_mask(self.masks[i], self.masks[j]);
                if !self.set(k, dk, &mut queue) {
                    return false;
                }
                let di = admissible_left(self.masks[j], self.masks[k]);
                if !self.set(i, di, &mut queue) {
                    return false;
                }
                let dj = admissible_right(self.masks[i], self.masks[k]);
                if !self.set(j, dj, &mut queue) {
                    return false;
                }
            }
        }
        true
    }

    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (slot, mask) = self.trail.pop().unwrap();
            self.masks[slot] = mask;
        }
    }
}

fn flip_mask(m: u8) -> u8 {
    let mut out = 0;
    if m & PLUS != 0 {
        out |= MINUS;
    }
    if m & MINUS != 0 {
        out |= PLUS;
    }
    if m & ZERO != 0 {
        out |= ZERO;
    }
    out
}

/// Values allowed in slot i of a triple i·j = k given the masks of j and k.
fn admissible_left(dj: u8, dk: u8) -> u8 {
    let mut out = 0;
    for sa in [PLUS, ZERO, MINUS] {
        for sb in [PLUS, ZERO, MINUS] {
            if dj & sb != 0 && compose_mask(sa, sb) & dk != 0 {
                out |= sa;
                break;
            }
        }
    }
    out
}

fn admissible_right(di: u8, dk: u8) -> u8 {
    let mut out = 0;
    for sb in [PLUS, ZERO, MINUS] {
        for sa in [PLUS, ZERO, MINUS] {
            if di & sa != 0 && compose_mask(sa, sb) & dk != 0 {
                out |= sb;
                break;
            }
        }
    }
    out
}

fn mask_to_sign(m: u8) -> i8 {
    match m {
        PLUS => 1,
        ZERO => 0,
        MINUS => -1,
        _ => panic!("unresolved mask"),
    }
}

const SLOT_GUARD: usize = 20_000;

/// Enumerate every sign map on the domain passing the axioms, in canonical
/// order (domain positions, +1 branch before -1). Backtracking with unit
/// propagation over the in-domain product triples; the all-zero map (the
/// trivial preorder) is excluded.
pub fn enumerate_cones(
    fp: &FreeProduct,
    domain: &SymmetricSet,
    relative: Relative<'_>,
) -> Result<Vec<TruncatedCone>, ConeError> {
    let table = DomainTable::build(fp, domain, relative);
    enumerate_with_table(&table, &[], None)
}

/// Extend a cone to a larger domain: first completion in canonical order.
pub fn extend_to_domain(
    fp: &FreeProduct,
    cone: &TruncatedCone,
    domain: &SymmetricSet,
    relative: Relative<'_>,
) -> Result<TruncatedCone, ConeError> {
    let table = DomainTable::build(fp, domain, relative);
    let mut seeds = Vec::new();
    for (w, s) in cone.domain().iter().zip(cone.signs()) {
        if let Ok(i) = table.elems.binary_search(w) {
            seeds.push((i, *s));
        }
    }
    let found = enumerate_with_table(&table, &seeds, Some(1))?;
    found.into_iter().next().ok_or(ConeError::NotExtendable)
}

fn enumerate_with_table(
    table: &DomainTable,
    seeds: &[(usize, i8)],
    limit: Option<usize>,
) -> Result<Vec<TruncatedCone>, ConeError> {
    if table.elems.len() > SLOT_GUARD {
        return Err(ConeError::GuardExceeded(table.elems.len()));
    }
    if table.asymmetric.iter().any(|s| s.is_some()) || !table.identity_ok {
        return Err(ConeError::NotExtendable);
    }
    let mut search = Search::new(table);
    let mut queue: Vec<usize> = (0..table.elems.len()).collect();
    for &(slot, sign) in seeds {
        let mask = match sign {
            1 => PLUS,
            -1 => MINUS,
            _ => ZERO,
        };
        if !search.set(slot, mask, &mut queue) {
            return Ok(vec![]);
        }
    }
    if !search.propagate(queue) {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    dfs(&mut search, 0, &mut out, limit);
    Ok(out
        .into_iter()
        .map(|signs| TruncatedCone {
            domain: table.elems.clone(),
            signs,
        })
        .collect())
}

fn dfs(search: &mut Search<'_>, from: usize, out: &mut Vec<Vec<i8>>, limit: Option<usize>) {
    if let Some(l) = limit {
        if out.len() >= l {
            return;
        }
    }
    let slot = (from..search.masks.len()).find(|&i| search.masks[i].count_ones() > 1);
    match slot {
        None => {
            let signs: Vec<i8> = search.masks.iter().map(|&m| mask_to_sign(m)).collect();
            // the trivial all-zero preorder is not a left-preorder
            if signs.iter().any(|&s| s != 0) {
                out.push(signs);
            }
        }
        Some(slot) => {
            for mask in [PLUS, MINUS] {
                if search.masks[slot] & mask == 0 {
                    continue;
                }
                let mark = search.mark();
                let mut queue = Vec::new();
                if search.set(slot, mask, &mut queue) && search.propagate(queue) {
                    dfs(search, slot + 1, out, limit);
                }
                search.undo(mark);
            }
        }
    }
}

/// Outcome of a property (E_C) probe at a given saturation depth. A
/// refutation is conclusive; compatibility is evidence at this depth only.
#[derive(Clone, Debug)]
pub enum PropertyEOutcome {
    Compatible { eta: Vec<i8> },
    Refuted { certificates: Vec<Certificate> },
}

/// An explicit semigroup product landing in C.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub eta: Vec<i8>,
    pub factors: Vec<Word>,
    pub product: Word,
}

/// Search sign exponents η over f keeping the semigroup generated by
/// x ∪ f^η away from C, within products of at most `depth` factors.
pub fn property_e_search(
    fp: &FreeProduct,
    relative: Relative<'_>,
    x: &[Word],
    f: &[Word],
    depth: usize,
) -> Result<PropertyEOutcome, ConeError> {
    for w in x.iter().chain(f) {
        if relative.contains(w) {
            return Err(ConeError::SeedInC(fp.display(w)));
        }
    }
    let mut certificates = Vec::new();
    let k = f.len();
    for bits in 0..(1u64 << k) {
        let eta: Vec<i8> = (0..k)
            .map(|i| if bits >> i & 1 == 0 { 1 } else { -1 })
            .collect();
        let mut seeds: Vec<Word> = x.to_vec();
        for (w, e) in f.iter().zip(&eta) {
            seeds.push(if *e == 1 { w.clone() } else { fp.inv(w) });
        }
        match saturate_until_c(fp, relative, &seeds, depth) {
            None => return Ok(PropertyEOutcome::Compatible { eta }),
            Some((factors, product)) => certificates.push(Certificate {
                eta,
                factors,
                product,
            }),
        }
    }
    Ok(PropertyEOutcome::Refuted { certificates })
}

/// Saturate semigroup products of at most `depth` seeds; return the first
/// product landing in C, with its factorization.
fn saturate_until_c(
    fp: &FreeProduct,
    relative: Relative<'_>,
    seeds: &[Word],
    depth: usize,
) -> Option<(Vec<Word>, Word)> {
    // parents for certificate reconstruction: word -> (previous word, seed)
    let mut parent: HashMap<Word, (Word, usize)> = HashMap::new();
    let mut frontier: Vec<Word> = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        if !parent.contains_key(s) {
            parent.insert(s.clone(), (Word::identity(), i));
            frontier.push(s.clone());
        }
    }
    let reconstruct = |parent: &HashMap<Word, (Word, usize)>, w: &Word| {
        let mut factors = Vec::new();
        let mut cur = w.clone();
        loop {
            let Some((prev, i)) = parent.get(&cur) else { break };
            factors.push(seeds[*i].clone());
            if prev.is_identity() {
                break;
            }
            cur = prev.clone();
        }
        factors.reverse();
        factors
    };
    for w in frontier.clone() {
        if relative.contains(&w) {
            return Some((reconstruct(&parent, &w), w));
        }
    }
    for _ in 1..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for (i, s) in seeds.iter().enumerate() {
                let p = fp.mul(w, s);
                if parent.contains_key(&p) {
                    continue;
                }
                parent.insert(p.clone(), (w.clone(), i));
                if relative.contains(&p) {
                    return Some((reconstruct(&parent, &p), p));
                }
                next.push(p);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    None
}

/// Union of a cone relative to C* with an order p0 on C* relative to C:
/// positives become P ∪ P₀, zeros shrink to C.
pub fn extend_cone(
    fp: &FreeProduct,
    p: &TruncatedCone,
    p0: &TruncatedCone,
    relative_c: Relative<'_>,
) -> Result<TruncatedCone, ConeError> {
    for w in p0.domain() {
        match p.sign(w) {
            Some(0) => {}
            _ => return Err(ConeError::IncompatibleDomains(fp.display(w))),
        }
    }
    let mut signs = Vec::with_capacity(p.domain().len());
    for (w, s) in p.domain().iter().zip(p.signs()) {
        if *s != 0 {
            signs.push(*s);
            continue;
        }
        match p0.sign(w) {
            Some(s0) => signs.push(s0),
            None => {
                if relative_c.contains(w) {
                    signs.push(0);
                } else {
                    return Err(ConeError::IncompatibleDomains(fp.display(w)));
                }
            }
        }
    }
    Ok(TruncatedCone {
        domain: p.domain().to_vec(),
        signs,
    })
}

/// Total preorder on cosets: the comparator abstraction shared by ball maxima
/// and the dynamical realization.
pub trait CosetOrder {
    /// Compare uC against vC; None when the data cannot decide.
    fn cmp_cosets(&self, u: &Word, v: &Word) -> Option<Ordering>;
}

/// Comparator backed by a truncated cone: uC < vC iff sign(u⁻¹v) = +1,
/// decided only when the quotient lies in the cone domain.
pub struct ConeOrder<'a> {
    pub fp: &'a FreeProduct,
    pub cone: &'a TruncatedCone,
    pub relative: Relative<'a>,
}

impl CosetOrder for ConeOrder<'_> {
    fn cmp_cosets(&self, u: &Word, v: &Word) -> Option<Ordering> {
        let q = self.fp.mul(&self.fp.inv(u), v);
        if self.relative.contains(&q) {
            return Some(Ordering::Equal);
        }
        match self.cone.sign(&q)? {
            1 => Some(Ordering::Less),
            -1 => Some(Ordering::Greater),
            _ => Some(Ordering::Equal),
        }
    }
}

/// The Magnus-expansion left order on a free product of two integer factors:
/// lexicographic by abelianization, ties refined by the lowest degree-lex
/// term of the expansion a ↦ 1+X, b ↦ 1+Y. Total on the whole group, zero
/// only at the identity.
pub struct MagnusOrder<'a> {
    pub fp: &'a FreeProduct,
}

type Series = BTreeMap<(usize, Vec<u8>), BigInt>;

fn series_one() -> Series {
    let mut s = Series::new();
    s.insert((0, vec![]), BigInt::one());
    s
}

fn series_mul(a: &Series, b: &Series, degree: usize) -> Series {
    let mut out = Series::new();
    for ((da, ma), ca) in a {
        for ((db, mb), cb) in b {
            if da + db > degree {
                continue;
            }
            let mut m = ma.clone();
            m.extend_from_slice(mb);
            let e = out.entry((da + db, m)).or_insert_with(BigInt::zero);
            *e += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// (1 + v)^k truncated, generalized binomial for negative k.
fn binomial_series(var: u8, k: &BigInt, degree: usize) -> Series {
    let mut s = series_one();
    let mut coeff = BigInt::one();
    for d in 1..=degree {
        coeff = coeff * (k - BigInt::from(d as i64 - 1)) / BigInt::from(d as i64);
        if !coeff.is_zero() {
            s.insert((d, vec![var; d]), coeff.clone());
        }
    }
    s
}

impl MagnusOrder<'_> {
    /// Sign of w under the order; 0 only for the identity.
    pub fn word_sign(&self, w: &Word) -> i8 {
        if w.is_identity() {
            return 0;
        }
        let degree = self.fp.gen_length(w) as usize;
        let mut series = series_one();
        for s in w.syllables() {
            let var = match s.side {
                crate::factor::Side::Left => 0u8,
                crate::factor::Side::Right => 1u8,
            };
            let k = match &s.elem {
                crate::factor::FactorElem::Int(k) => k.clone(),
                _ => panic!("Magnus order needs integer factors"),
            };
            series = series_mul(&series, &binomial_series(var, &k, degree), degree);
        }
        series.remove(&(0, vec![]));
        match series.into_iter().next() {
            None => panic!("nontrivial word with trivial expansion at its own degree"),
            Some((_, c)) => {
                if c.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

impl CosetOrder for MagnusOrder<'_> {
    fn cmp_cosets(&self, u: &Word, v: &Word) -> Option<Ordering> {
        let q = self.fp.mul(&self.fp.inv(u), v);
        Some(match self.word_sign(&q) {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        })
    }
}

/// Truncate a total comparator to a cone on the given domain.
pub fn cone_from_order(
    order: &dyn CosetOrder,
    domain: &SymmetricSet,
) -> Result<TruncatedCone, ConeError> {
    let id = Word::identity();
    let mut signs = Vec::new();
    for w in domain.elems() {
        match order.cmp_cosets(&id, w) {
            Some(Ordering::Less) => signs.push(1),
            Some(Ordering::Greater) => signs.push(-1),
            Some(Ordering::Equal) => signs.push(0),
            None => {
                return Err(ConeError::PartialComparator("1".into(), format!("{w:?}")))
            }
        }
    }
    Ok(TruncatedCone {
        domain: domain.elems().to_vec(),
        signs,
    })
}

/// Maximal and minimal elements of the ball under the comparator, canonical
/// first representatives (the coset values are unique, the words are not).
pub fn maximal_in_ball(
    fp: &FreeProduct,
    order: &dyn CosetOrder,
    x: &SymmetricSet,
    n: usize,
) -> Result<(Word, Word), ConeError> {
    let ball = fp.ball(x, n);
    let mut max = ball[0].clone();
    let mut min = ball[0].clone();
    for w in &ball[1..] {
        match order.cmp_cosets(&max, w) {
            None => {
                return Err(ConeError::PartialComparator(
                    fp.display(&max),
                    fp.display(w),
                ))
            }
            Some(Ordering::Less) => max = w.clone(),
            _ => {}
        }
        match order.cmp_cosets(&min, w) {
            None => {
                return Err(ConeError::PartialComparator(
                    fp.display(&min),
                    fp.display(w),
                ))
            }
            Some(Ordering::Greater) => min = w.clone(),
            _ => {}
        }
    }
    if order.cmp_cosets(&max, &min) == Some(Ordering::Equal) {
        return Err(ConeError::TrivialOnBall);
    }
    Ok((max, min))
}

/// Which positive domain elements are not products of at most `depth` factors
/// from S: evidence against finite semigroup generation, never a proof.
#[derive(Clone, Debug)]
pub struct CoverageReport {
    pub covered: Vec<Word>,
    pub uncovered: Vec<Word>,
}

pub fn semigroup_probe(
    fp: &FreeProduct,
    seeds: &[Word],
    cone: &TruncatedCone,
    depth: usize,
) -> Result<CoverageReport, ConeError> {
    for s in seeds {
        if cone.sign(s) != Some(1) {
            return Err(ConeError::SeedInC(fp.display(s)));
        }
    }
    let mut seen: std::collections::BTreeSet<Word> = std::collections::BTreeSet::new();
    let mut frontier: Vec<Word> = Vec::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            frontier.push(s.clone());
        }
    }
    for _ in 1..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for s in seeds {
                let p = fp.mul(w, s);
                if seen.insert(p.clone()) {
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    let mut covered = Vec::new();
    let mut uncovered = Vec::new();
    for w in cone.positives() {
        if seen.contains(&w) {
            covered.push(w);
        } else {
            uncovered.push(w);
        }
    }
    Ok(CoverageReport { covered, uncovered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bass_serre::QuotientGraph;
    use crate::factor::{FactorElem, FactorGroup, Side};
    use crate::words::free_product_zz;

    fn a_ball(fp: &FreeProduct, n: usize) -> SymmetricSet {
        let x = SymmetricSet::new(fp, vec![fp.parse("a").unwrap()]);
        SymmetricSet::new(fp, fp.ball(&x, n))
    }

    fn exponent_sign(w: &Word) -> i8 {
        match w.syllables().first() {
            None => 0,
            Some(s) => match &s.elem {
                FactorElem::Int(k) => {
                    if k.is_positive() {
                        1
                    } else {
                        -1
                    }
                }
                _ => unreachable!(),
            },
        }
    }

    #[test]
    fn natural_order_on_z_passes() {
        let fp = free_product_zz();
        let dom = a_ball(&fp, 3);
        let cone = TruncatedCone::from_fn(&dom, exponent_sign);
        let v = check_axioms(&fp, &cone, Relative::Trivial).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn flipped_sign_reports_violations() {
        let fp = free_product_zz();
        let dom = a_ball(&fp, 3);
        let a2 = fp.parse("a^2").unwrap();
        let cone = TruncatedCone::from_fn(&dom, |w| {
            if *w == a2 {
                -1
            } else {
                exponent_sign(w)
            }
        });
        let v = check_axioms(&fp, &cone, Relative::Trivial).unwrap();
        assert!(v.iter().any(|x| matches!(x, Violation::InverseMismatch(_))));
        assert!(v.iter().any(|x| matches!(x, Violation::Closure(_, _))));
    }

    #[test]
    fn abelianization_rule_on_radius_two() {
        let fp = free_product_zz();
        let dom = SymmetricSet::new(&fp, fp.ball(&fp.standard_symmetric_set(), 2));
        let order = MagnusOrder { fp: &fp };
        let cone = cone_from_order(&order, &dom).unwrap();
        let v = check_axioms(&fp, &cone, Relative::Trivial).unwrap();
        assert!(v.is_empty(), "{} violations", v.len());
        assert_eq!(cone.sign(&fp.parse("a b^-1").unwrap()), Some(1));
        assert_eq!(cone.sign(&fp.parse("b").unwrap()), Some(1));
        assert_eq!(cone.sign(&fp.parse("a^-1 b").unwrap()), Some(-1));
    }

    #[test]
    fn magnus_refines_commutators() {
        let fp = free_product_zz();
        let order = MagnusOrder { fp: &fp };
        let comm = fp.parse("a b a^-1 b^-1").unwrap();
        // [a,b] has lowest term +XY
        assert_eq!(order.word_sign(&comm), 1);
        assert_eq!(order.word_sign(&fp.inv(&comm)), -1);
        assert_eq!(order.word_sign(&Word::identity()), 0);
        // left invariance spot check
        let u = fp.parse("a b").unwrap();
        let v = fp.parse("b a").unwrap();
        let t = fp.parse("b^-2 a").unwrap();
        let c = order.cmp_cosets(&u, &v);
        assert_eq!(order.cmp_cosets(&fp.mul(&t, &u), &fp.mul(&t, &v)), c);
    }

    #[test]
    fn z_has_exactly_two_cones_each_radius() {
        let fp = free_product_zz();
        for n in 1..=8 {
            let dom = a_ball(&fp, n);
            let fam = enumerate_cones(&fp, &dom, Relative::Trivial).unwrap();
            assert_eq!(fam.len(), 2, "radius {n}");
            // canonical order: a^-1 is the first free slot, so the first
            // member is the descending direction of the natural order
            let a = fp.parse("a").unwrap();
            assert_eq!(fam[0].sign(&a), Some(-1));
            assert_eq!(fam[1].sign(&a), Some(1));
        }
    }

    #[test]
    fn non_convex_cyclic_subgroup_has_no_cones() {
        let fp = free_product_zz();
        let g = QuotientGraph::build(&fp, &[fp.parse("a^2").unwrap()]);
        let dom = a_ball(&fp, 2);
        let fam = enumerate_cones(&fp, &dom, Relative::Subgroup(&g)).unwrap();
        assert!(fam.is_empty());
    }

    #[test]
    fn involutions_kill_relative_cones_in_z2_z2() {
        let z22 = FreeProduct::new(
            FactorGroup::cyclic("G", 2, "a"),
            FactorGroup::cyclic("H", 2, "b"),
        );
        let g = QuotientGraph::build(&z22, &[z22.parse("a b").unwrap()]);
        let dom = SymmetricSet::new(&z22, z22.ball(&z22.standard_symmetric_set(), 2));
        let fam = enumerate_cones(&z22, &dom, Relative::Subgroup(&g)).unwrap();
        assert!(fam.is_empty());
    }

    #[test]
    fn propagation_matches_naive_filter() {
        let fp = free_product_zz();
        let doms = [
            a_ball(&fp, 3),
            SymmetricSet::new(&fp, fp.ball(&fp.standard_symmetric_set(), 1)),
        ];
        for dom in doms {
            let fast = enumerate_cones(&fp, &dom, Relative::Trivial).unwrap();
            let table = DomainTable::build(&fp, &dom, Relative::Trivial);
            let k = dom.len();
            let mut naive = Vec::new();
            for code0 in 0..(3usize.pow(k as u32)) {
                let mut code = code0;
                let mut signs = Vec::with_capacity(k);
                for _ in 0..k {
                    signs.push([1i8, 0, -1][code % 3]);
                    code /= 3;
                }
                if signs.iter().all(|&s| s == 0) {
                    continue;
                }
                let cone = TruncatedCone {
                    domain: dom.elems().to_vec(),
                    signs,
                };
                if check_axioms_with_table(&table, &cone).unwrap().is_empty() {
                    naive.push(cone);
                }
            }
            assert_eq!(fast.len(), naive.len());
            for c in &fast {
                assert!(naive.contains(c));
            }
        }
    }

    #[test]
    fn projection_consistency_across_radii() {
        let fp = free_product_zz();
        let x = fp.standard_symmetric_set();
        let small = SymmetricSet::new(&fp, fp.ball(&x, 1));
        let big = SymmetricSet::new(&fp, fp.ball(&x, 2));
        let fam_small = enumerate_cones(&fp, &small, Relative::Trivial).unwrap();
        let fam_big = enumerate_cones(&fp, &big, Relative::Trivial).unwrap();
        for c in &fam_big {
            let r = c.restrict(&small).unwrap();
            assert!(fam_small.contains(&r));
        }
    }

    #[test]
    fn property_e_positive_generator() {
        let fp = free_product_zz();
        let a = fp.parse("a").unwrap();
        let ainv = fp.parse("a^-1").unwrap();
        let out = property_e_search(&fp, Relative::Trivial, &[a.clone()], &[ainv.clone()], 4)
            .unwrap();
        match out {
            PropertyEOutcome::Compatible { eta } => {
                // the compatible branch turns a^-1 into a
                assert_eq!(eta, vec![-1]);
                assert_eq!(fp.pow(&ainv, eta[0] as i64), a);
            }
            _ => panic!("expected compatibility"),
        }
    }

    #[test]
    fn property_e_refutation_certificate() {
        let fp = free_product_zz();
        let g = QuotientGraph::build(&fp, &[fp.parse("a^2").unwrap()]);
        let a = fp.parse("a").unwrap();
        let out = property_e_search(&fp, Relative::Subgroup(&g), &[a.clone()], &[], 2).unwrap();
        match out {
            PropertyEOutcome::Refuted { certificates } => {
                assert_eq!(certificates.len(), 1);
                let c = &certificates[0];
                assert_eq!(c.product, fp.parse("a^2").unwrap());
                let prod = c
                    .factors
                    .iter()
                    .fold(Word::identity(), |acc, w| fp.mul(&acc, w));
                assert_eq!(prod, c.product);
                assert!(g.membership(&prod));
            }
            _ => panic!("expected refutation"),
        }
    }

    #[test]
    fn property_e_free_product_seed() {
        let fp = free_product_zz();
        let x = vec![fp.parse("a").unwrap(), fp.parse("b").unwrap()];
        let f = vec![fp.parse("a^-1 b").unwrap()];
        let out = property_e_search(&fp, Relative::Trivial, &x, &f, 3).unwrap();
        assert!(matches!(out, PropertyEOutcome::Compatible { .. }));
    }

    #[test]
    fn property_e_rejects_c_seed() {
        let fp = free_product_zz();
        let g = QuotientGraph::build(&fp, &[fp.parse("a^2").unwrap()]);
        assert!(property_e_search(
            &fp,
            Relative::Subgroup(&g),
            &[fp.parse("a^2").unwrap()],
            &[],
            2
        )
        .is_err());
    }

    #[test]
    fn extend_cone_trivial_p0_is_identity_map() {
        let fp = free_product_zz();
        let dom = a_ball(&fp, 3);
        let cone = TruncatedCone::from_fn(&dom, exponent_sign);
        let p0 = TruncatedCone {
            domain: vec![],
            signs: vec![],
        };
        let out = extend_cone(&fp, &cone, &p0, Relative::Trivial).unwrap();
        assert_eq!(out, cone);
    }

    fn exponent_b_sign(w: &Word) -> i8 {
        match w.syllables().first() {
            None => 0,
            Some(s) => match &s.elem {
                FactorElem::Int(k) => {
                    if k.is_positive() {
                        1
                    } else {
                        -1
                    }
                }
                _ => unreachable!(),
            },
        }
    }

    #[test]
    fn extend_relative_cone_both_ways() {
        let fp = free_product_zz();
        let gb = QuotientGraph::build(&fp, &[fp.parse("b").unwrap()]);
        let dom = SymmetricSet::new(&fp, fp.ball(&fp.standard_symmetric_set(), 2));
        // relative to C* = <b>: sign of the total a-exponent
        let rel = |w: &Word| -> i8 {
            let mut sum = BigInt::zero();
            for s in w.syllables() {
                if s.side == Side::Left {
                    if let FactorElem::Int(k) = &s.elem {
                        sum += k;
                    }
                }
            }
            if sum.is_positive() {
                1
            } else if sum.is_negative() {
                -1
            } else {
                0
            }
        };
        let p = TruncatedCone::from_fn(&dom, rel);
        assert!(check_axioms(&fp, &p, Relative::Subgroup(&gb))
            .unwrap()
            .is_empty());
        let zeros: Vec<Word> = p
            .domain()
            .iter()
            .filter(|w| p.sign(w) == Some(0) && !w.is_identity())
            .cloned()
            .collect();
        let p0_domain = SymmetricSet::new(&fp, zeros);
        let p0 = TruncatedCone::from_fn(&p0_domain, exponent_b_sign);
        let e1 = extend_cone(&fp, &p, &p0, Relative::Trivial).unwrap();
        assert!(check_axioms(&fp, &e1, Relative::Trivial).unwrap().is_empty());
        let p0f = TruncatedCone::from_fn(&p0_domain, |w| -exponent_b_sign(w));
        let e2 = extend_cone(&fp, &p, &p0f, Relative::Trivial).unwrap();
        assert!(check_axioms(&fp, &e2, Relative::Trivial).unwrap().is_empty());
        assert_ne!(e1, e2);
        for w in e1.domain() {
            assert_eq!(e1.sign(w) == Some(0), w.is_identity());
        }
    }

    #[test]
    fn maximal_in_ball_natural_order() {
        let fp = free_product_zz();
        let dom = a_ball(&fp, 8);
        let cone = TruncatedCone::from_fn(&dom, exponent_sign);
        let order = ConeOrder {
            fp: &fp,
            cone: &cone,
            relative: Relative::Trivial,
        };
        let x = SymmetricSet::new(&fp, vec![fp.parse("a").unwrap()]);
        let (max, min) = maximal_in_ball(&fp, &order, &x, 3).unwrap();
        assert_eq!(fp.display(&max), "a^3");
        assert_eq!(fp.display(&min), "a^-3");
        let (m2, _) = maximal_in_ball(&fp, &order, &x, 2).unwrap();
        assert_eq!(order.cmp_cosets(&m2, &max), Some(Ordering::Less));
    }

    #[test]
    fn maximal_in_ball_magnus_strict_growth() {
        let fp = free_product_zz();
        let order = MagnusOrder { fp: &fp };
        let x = fp.standard_symmetric_set();
        let mut prev: Option<Word> = None;
        for n in 1..=4 {
            let (max, min) = maximal_in_ball(&fp, &order, &x, n).unwrap();
            assert_eq!(order.cmp_cosets(&min, &max), Some(Ordering::Less));
            if let Some(p) = prev {
                assert_eq!(order.cmp_cosets(&p, &max), Some(Ordering::Less));
            }
            prev = Some(max);
        }
    }

    #[test]
    fn maximal_in_ball_rejects_degenerate() {
        struct AllEqual;
        impl CosetOrder for AllEqual {
            fn cmp_cosets(&self, _: &Word, _: &Word) -> Option<Ordering> {
                Some(Ordering::Equal)
            }
        }
        let fp = free_product_zz();
        let x = SymmetricSet::new(&fp, vec![fp.parse("a").unwrap()]);
        assert!(matches!(
            maximal_in_ball(&fp, &AllEqual, &x, 2),
            Err(ConeError::TrivialOnBall)
        ));
    }

    #[test]
    fn semigroup_probe_coverage() {
        let fp = free_product_zz();
        let dom = a_ball(&fp, 4);
        let cone = TruncatedCone::from_fn(&dom, exponent_sign);
        let a = fp.parse("a").unwrap();
        let full = semigroup_probe(&fp, &[a.clone()], &cone, 4).unwrap();
        assert!(full.uncovered.is_empty());
        let none = semigroup_probe(&fp, &[], &cone, 4).unwrap();
        assert!(none.covered.is_empty());
        assert_eq!(none.uncovered.len(), 4);
        assert!(semigroup_probe(&fp, &[fp.parse("a^-1").unwrap()], &cone, 2).is_err());
    }

    #[test]
    fn magnus_cone_positives_not_finitely_covered_at_depth() {
        let fp = free_product_zz();
        let dom = SymmetricSet::new(&fp, fp.ball(&fp.standard_symmetric_set(), 3));
        let order = MagnusOrder { fp: &fp };
        let cone = cone_from_order(&order, &dom).unwrap();
        let seeds: Vec<Word> = cone
            .positives()
            .into_iter()
            .filter(|w| fp.gen_length(w) <= 1)
            .collect();
        let report = semigroup_probe(&fp, &seeds, &cone, 4).unwrap();
        assert!(!report.uncovered.is_empty());
    }

    #[test]
    fn seeded_extension_extends_and_is_deterministic() {
        let fp = free_product_zz();
        let x = fp.standard_symmetric_set();
        let small = SymmetricSet::new(&fp, fp.ball(&x, 1));
        let big = SymmetricSet::new(&fp, fp.ball(&x, 2));
        let fam = enumerate_cones(&fp, &small, Relative::Trivial).unwrap();
        for c in &fam {
            let e1 = extend_to_domain(&fp, c, &big, Relative::Trivial).unwrap();
            let e2 = extend_to_domain(&fp, c, &big, Relative::Trivial).unwrap();
            assert_eq!(e1, e2);
            assert_eq!(e1.restrict(&small).unwrap(), *c);
            assert!(check_axioms(&fp, &e1, Relative::Trivial)
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn relative_enumeration_on_a_words() {
        // C = <b> inside Z*Z, domain of a-powers only: exactly two cones
        let fp = free_product_zz();
        let g = QuotientGraph::build(&fp, &[fp.parse("b").unwrap()]);
        for n in 1..=3 {
            let dom = a_ball(&fp, n);
            let fam = enumerate_cones(&fp, &dom, Relative::Subgroup(&g)).unwrap();
            assert_eq!(fam.len(), 2, "radius {n}");
        }
    }
}
