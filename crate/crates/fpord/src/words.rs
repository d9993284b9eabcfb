//! Reduced words in a free product of two factor groups: the normal form is
//! an alternating sequence of non-identity syllables, unique per element.

use crate::factor::{FactorElem, FactorError, FactorGroup, Side};
use num_bigint::BigInt;
use num_traits::Signed;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::str::FromStr;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Syllable {
    pub side: Side,
    pub elem: FactorElem,
}

impl Syllable {
    pub fn new(side: Side, elem: FactorElem) -> Syllable {
        Syllable { side, elem }
    }
}

/// An element of the free product in reduced normal form. Construct through
/// [`FreeProduct`] so syllables stay validated, alternating and non-trivial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word {
    syllables: Vec<Syllable>,
}

impl Word {
    pub fn identity() -> Word {
        Word { syllables: vec![] }
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn syllable_length(&self) -> usize {
        self.syllables.len()
    }
}

/// Canonical order on factor elements: table index, or exponent.
pub fn cmp_factor_elems(a: &FactorElem, b: &FactorElem) -> Ordering {
    cmp_elem(a, b)
}

fn cmp_elem(a: &FactorElem, b: &FactorElem) -> Ordering {
    match (a, b) {
        (FactorElem::Table(x), FactorElem::Table(y)) => x.cmp(y),
        (FactorElem::Int(x), FactorElem::Int(y)) => x.cmp(y),
        (FactorElem::Table(_), FactorElem::Int(_)) => Ordering::Less,
        (FactorElem::Int(_), FactorElem::Table(_)) => Ordering::Greater,
    }
}

fn cmp_syllable(a: &Syllable, b: &Syllable) -> Ordering {
    a.side.cmp(&b.side).then_with(|| cmp_elem(&a.elem, &b.elem))
}

/// Shortlex: fewer syllables first, then side and element per syllable. This
/// is the canonical enumeration order used everywhere determinism matters.
impl Ord for Word {
    fn cmp(&self, other: &Word) -> Ordering {
        self.syllables
            .len()
            .cmp(&other.syllables.len())
            .then_with(|| {
                for (a, b) in self.syllables.iter().zip(&other.syllables) {
                    let c = cmp_syllable(a, b);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Word) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error)]
pub enum WordError {
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("empty token in word literal")]
    EmptyToken,
    #[error("bad exponent in token {0:?}")]
    BadExponent(String),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
}

/// The ambient free product G * H. All word arithmetic goes through here.
#[derive(Clone, Debug)]
pub struct FreeProduct {
    left: FactorGroup,
    right: FactorGroup,
}

impl FreeProduct {
    pub fn new(left: FactorGroup, right: FactorGroup) -> FreeProduct {
        FreeProduct { left, right }
    }

    pub fn factor(&self, side: Side) -> &FactorGroup {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Fold a raw syllable list into the unique reduced normal form: merge
    /// same-side neighbours through factor arithmetic, drop identity
    /// syllables, and cascade.
    pub fn normalize<I>(&self, raw: I) -> Result<Word, WordError>
    where
        I: IntoIterator<Item = Syllable>,
    {
        let mut stack: Vec<Syllable> = Vec::new();
        for s in raw {
            self.factor(s.side).validate(&s.elem)?;
            self.push_reduced(&mut stack, s);
        }
        Ok(Word { syllables: stack })
    }

    fn push_reduced(&self, stack: &mut Vec<Syllable>, s: Syllable) {
        let f = self.factor(s.side);
        if f.is_identity(&s.elem) {
            return;
        }
        match stack.last() {
            Some(top) if top.side == s.side => {
                let merged = f.mul(&top.elem, &s.elem);
                stack.pop();
                if !f.is_identity(&merged) {
                    stack.push(Syllable::new(s.side, merged));
                }
            }
            _ => stack.push(s),
        }
    }

    pub fn mul(&self, u: &Word, v: &Word) -> Word {
        let mut stack = u.syllables.clone();
        for s in &v.syllables {
            self.push_reduced(&mut stack, s.clone());
        }
        Word { syllables: stack }
    }

    pub fn inv(&self, w: &Word) -> Word {
        let syllables = w
            .syllables
            .iter()
            .rev()
            .map(|s| Syllable::new(s.side, self.factor(s.side).inv(&s.elem)))
            .collect();
        Word { syllables }
    }

    pub fn pow(&self, w: &Word, k: i64) -> Word {
        let base = if k < 0 { self.inv(w) } else { w.clone() };
        let mut acc = Word::identity();
        for _ in 0..k.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }

    pub fn mul_all(&self, ws: &[&Word]) -> Word {
        let mut acc = Word::identity();
        for w in ws {
            acc = self.mul(&acc, w);
        }
        acc
    }

    /// Word with a single syllable (identity elements give the empty word).
    pub fn syllable_word(&self, side: Side, elem: FactorElem) -> Word {
        self.normalize([Syllable::new(side, elem)]).expect("validated syllable")
    }

    pub fn gen_word(&self, side: Side, k: i64) -> Word {
        let f = self.factor(side);
        let elem = if f.is_integer() {
            FactorElem::int(k)
        } else {
            let (_, g) = f.generators().into_iter().next().expect("factor has a generator");
            f.pow(&g, &BigInt::from(k))
        };
        self.syllable_word(side, elem)
    }

    /// All products of at most n factors from x, in canonical order.
    pub fn ball(&self, x: &SymmetricSet, n: usize) -> Vec<Word> {
        let mut seen: BTreeSet<Word> = BTreeSet::new();
        seen.insert(Word::identity());
        let mut frontier: Vec<Word> = vec![Word::identity()];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in &frontier {
                for g in x.elems() {
                    let p = self.mul(w, g);
                    if seen.insert(p.clone()) {
                        next.push(p);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen.into_iter().collect()
    }

    /// Length of a word as a product of declared factor generators.
    pub fn gen_length(&self, w: &Word) -> u64 {
        w.syllables
            .iter()
            .map(|s| self.factor(s.side).gen_length(&s.elem))
            .sum()
    }

    /// The declared generators of one side, with inverses, as words.
    pub fn generator_set(&self, side: Side) -> Vec<Word> {
        let f = self.factor(side);
        let mut out = Vec::new();
        for (_, e) in f.generators() {
            out.push(self.syllable_word(side, e.clone()));
            out.push(self.syllable_word(side, f.inv(&e)));
        }
        out.sort();
        out.dedup();
        out
    }

    /// Declared generators of both sides with inverses.
    pub fn standard_symmetric_set(&self) -> SymmetricSet {
        let mut v = self.generator_set(Side::Left);
        v.extend(self.generator_set(Side::Right));
        SymmetricSet::new(self, v)
    }

    pub fn parse(&self, input: &str) -> Result<Word, WordError> {
        let mut raw = Vec::new();
        for tok in input.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                None => (tok, BigInt::from(1)),
                Some((n, e)) => {
                    if n.is_empty() {
                        return Err(WordError::EmptyToken);
                    }
                    let k = BigInt::from_str(e)
                        .map_err(|_| WordError::BadExponent(tok.to_string()))?;
                    (n, k)
                }
            };
            let (side, base) = self.resolve_generator(name)?;
            let f = self.factor(side);
            raw.push(Syllable::new(side, f.pow(&base, &exp)));
        }
        self.normalize(raw)
    }

    fn resolve_generator(&self, name: &str) -> Result<(Side, FactorElem), WordError> {
        if let Ok(e) = self.left.resolve(name) {
            return Ok((Side::Left, e));
        }
        if let Ok(e) = self.right.resolve(name) {
            return Ok((Side::Right, e));
        }
        Err(WordError::UnknownGenerator(name.to_string()))
    }

    pub fn display(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        w.syllables
            .iter()
            .map(|s| self.factor(s.side).format_elem(&s.elem))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn display_all(&self, ws: &[Word]) -> Vec<String> {
        ws.iter().map(|w| self.display(w)).collect()
    }

    /// True when every left syllable lies in g0 and every right syllable in
    /// h0; over the reduced normal form this decides membership in ⟨G₀, H₀⟩.
    pub fn syllables_within(
        &self,
        w: &Word,
        g0: &crate::factor::SubgroupDescriptor,
        h0: &crate::factor::SubgroupDescriptor,
    ) -> bool {
        w.syllables.iter().all(|s| match s.side {
            Side::Left => g0.contains(&self.left, &s.elem),
            Side::Right => h0.contains(&self.right, &s.elem),
        })
    }

    /// Largest absolute integer exponent appearing, used by guards.
    pub fn max_exponent(&self, w: &Word) -> BigInt {
        let mut m = BigInt::from(0);
        for s in &w.syllables {
            if let FactorElem::Int(k) = &s.elem {
                if k.abs() > m {
                    m = k.abs();
                }
            }
        }
        m
    }
}

/// A finite set of words closed under inversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricSet {
    elems: Vec<Word>,
}

impl SymmetricSet {
    pub fn new(fp: &FreeProduct, words: Vec<Word>) -> SymmetricSet {
        let mut set: BTreeSet<Word> = BTreeSet::new();
        for w in words {
            set.insert(fp.inv(&w));
            set.insert(w);
        }
        SymmetricSet {
            elems: set.into_iter().collect(),
        }
    }

    pub fn elems(&self) -> &[Word] {
        &self.elems
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }
}

/// Z * Z with generators a, b: the rank-2 free group fixture.
pub fn free_product_zz() -> FreeProduct {
    FreeProduct::new(
        FactorGroup::integer("G", "a"),
        FactorGroup::integer("H", "b"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::FactorGroup;

    fn z2_z3() -> FreeProduct {
        FreeProduct::new(
            FactorGroup::cyclic("G", 2, "a"),
            FactorGroup::cyclic("H", 3, "b"),
        )
    }

    #[test]
    fn normalize_empty_is_identity() {
        let fp = free_product_zz();
        assert!(fp.normalize([]).unwrap().is_identity());
    }

    #[test]
    fn normalize_cancellation_in_zz() {
        let fp = free_product_zz();
        let w = fp
            .normalize([
                Syllable::new(Side::Left, FactorElem::int(2)),
                Syllable::new(Side::Left, FactorElem::int(-2)),
            ])
            .unwrap();
        assert!(w.is_identity());
    }

    #[test]
    fn normalize_cascade_in_z2_z3() {
        // a b b b a = a (b^3) a = a a = 1
        let fp = z2_z3();
        let w = fp
            .normalize([
                Syllable::new(Side::Left, FactorElem::Table(1)),
                Syllable::new(Side::Right, FactorElem::Table(1)),
                Syllable::new(Side::Right, FactorElem::Table(1)),
                Syllable::new(Side::Right, FactorElem::Table(1)),
                Syllable::new(Side::Left, FactorElem::Table(1)),
            ])
            .unwrap();
        assert!(w.is_identity());
    }

    #[test]
    fn multiply_inner_cancellation() {
        let fp = free_product_zz();
        let ab = fp.parse("a b").unwrap();
        let b_inv_a = fp.parse("b^-1 a").unwrap();
        assert_eq!(fp.mul(&ab, &b_inv_a), fp.parse("a^2").unwrap());
    }

    #[test]
    fn multiply_no_reduction_alternating() {
        let fp = free_product_zz();
        let ab = fp.parse("a b").unwrap();
        let abab = fp.mul(&ab, &ab);
        assert_eq!(abab, fp.parse("a b a b").unwrap());
        assert_eq!(abab.syllable_length(), 4);
    }

    #[test]
    fn invert_is_antihomomorphism() {
        let fp = free_product_zz();
        let ab = fp.parse("a b").unwrap();
        assert_eq!(fp.inv(&ab), fp.parse("b^-1 a^-1").unwrap());
        assert!(fp.inv(&Word::identity()).is_identity());
    }

    #[test]
    fn ball_sizes() {
        let z = FreeProduct::new(
            FactorGroup::integer("G", "a"),
            FactorGroup::integer("H", "b"),
        );
        let xa = SymmetricSet::new(&z, vec![z.parse("a").unwrap()]);
        assert_eq!(z.ball(&xa, 2).len(), 5);
        assert_eq!(z.ball(&xa, 0), vec![Word::identity()]);
        let x = z.standard_symmetric_set();
        // 1 + 4 + 4·3 elements of the rank-2 free group
        assert_eq!(z.ball(&x, 2).len(), 17);
        let empty = SymmetricSet::new(&z, vec![]);
        assert_eq!(z.ball(&empty, 3), vec![Word::identity()]);
    }

    #[test]
    fn ball_monotone_and_submultiplicative() {
        let fp = free_product_zz();
        let x = fp.standard_symmetric_set();
        let b1 = fp.ball(&x, 1);
        let b2 = fp.ball(&x, 2);
        let b3 = fp.ball(&x, 3);
        assert!(b1.len() <= b2.len() && b2.len() <= b3.len());
        let b3set: BTreeSet<_> = b3.iter().cloned().collect();
        for u in &b1 {
            for v in &b2 {
                assert!(b3set.contains(&fp.mul(u, v)));
            }
        }
    }

    #[test]
    fn syllable_length_after_merge() {
        let fp = free_product_zz();
        let w = fp
            .normalize([
                Syllable::new(Side::Left, FactorElem::int(1)),
                Syllable::new(Side::Right, FactorElem::int(1)),
                Syllable::new(Side::Right, FactorElem::int(-1)),
                Syllable::new(Side::Left, FactorElem::int(1)),
            ])
            .unwrap();
        assert_eq!(w, fp.parse("a^2").unwrap());
        assert_eq!(w.syllable_length(), 1);
        assert_eq!(Word::identity().syllable_length(), 0);
        assert_eq!(fp.parse("a b a^-1").unwrap().syllable_length(), 3);
    }

    #[test]
    fn parse_display_roundtrip() {
        let fp = z2_z3();
        for lit in ["1", "a", "b", "a b", "b^-1 a", "a b a b^-1"] {
            let w = fp.parse(lit).unwrap();
            let shown = fp.display(&w);
            assert_eq!(fp.parse(&shown).unwrap(), w, "roundtrip of {lit:?}");
        }
        let fp = free_product_zz();
        for lit in ["a^5 b^-3 a", "b^2", "a^-1 b a"] {
            let w = fp.parse(lit).unwrap();
            assert_eq!(fp.display(&w), lit);
        }
    }

    #[test]
    fn parse_rejects_unknown() {
        let fp = free_product_zz();
        assert!(fp.parse("c").is_err());
        assert!(fp.parse("a^x").is_err());
    }

    #[test]
    fn canonical_order_is_shortlex() {
        let fp = free_product_zz();
        let mut ws = vec![
            fp.parse("a b").unwrap(),
            fp.parse("a").unwrap(),
            fp.parse("b").unwrap(),
            fp.parse("a^-1").unwrap(),
            Word::identity(),
        ];
        ws.sort();
        let shown: Vec<String> = fp.display_all(&ws);
        assert_eq!(shown, vec!["1", "a^-1", "a", "b", "a b"]);
    }
}
