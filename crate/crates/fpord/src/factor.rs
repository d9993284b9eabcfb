//! Concrete base groups for the two free-product factors: finite groups given
//! by a multiplication table, and the infinite cyclic group.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Which factor of the free product an element or vertex belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "G"),
            Side::Right => write!(f, "H"),
        }
    }
}

/// An element of one factor group: a table index for finite factors, an
/// exponent for the integer factor. Index 0 and exponent 0 are the identity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorElem {
    Table(usize),
    Int(BigInt),
}

impl FactorElem {
    pub fn int(k: i64) -> FactorElem {
        FactorElem::Int(BigInt::from(k))
    }
}

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("multiplication table is not square with rows of equal length")]
    TableShape,
    #[error("table row or column 0 does not act as the identity")]
    TableIdentity,
    #[error("table is not a Latin square (row {0} repeats an element)")]
    TableLatin(usize),
    #[error("element {0} has no inverse in the table")]
    TableInverse(usize),
    #[error("table entry out of range in row {0}")]
    TableRange(usize),
    #[error("integer factor must declare exactly one generator")]
    IntegerGenerators,
    #[error("finite factor needs at least one generator")]
    NoGenerators,
    #[error("generator index {0} out of range")]
    GeneratorRange(usize),
    #[error("declared generators do not generate the finite factor (element {0} unreachable)")]
    NotGenerating(usize),
    #[error("duplicate generator name {0:?}")]
    DuplicateName(String),
    #[error("unknown generator name {0:?}")]
    UnknownGenerator(String),
    #[error("element index {0} out of range for factor {1:?}")]
    ElemRange(usize, String),
}

#[derive(Clone, Debug)]
enum Kind {
    Integer {
        gen_name: String,
    },
    Finite {
        table: Vec<Vec<usize>>,
        inv: Vec<usize>,
        gens: Vec<(String, usize)>,
        /// Shortest expression of each element as a product of declared
        /// generators and their inverses, found by breadth-first search.
        decomp: Vec<Vec<(usize, bool)>>,
    },
}

/// One factor of the free product.
#[derive(Clone, Debug)]
pub struct FactorGroup {
    name: String,
    kind: Kind,
}

impl FactorGroup {
    /// The integers, with a single named generator.
    pub fn integer(name: &str, gen_name: &str) -> FactorGroup {
        FactorGroup {
            name: name.to_string(),
            kind: Kind::Integer {
                gen_name: gen_name.to_string(),
            },
        }
    }

    /// A finite group given by its full multiplication table. Index 0 must be
    /// the identity, `table[i][j]` is the product of elements i and j, and the
    /// declared generators must generate the whole group.
    pub fn finite(
        name: &str,
        table: Vec<Vec<usize>>,
        gens: Vec<(String, usize)>,
    ) -> Result<FactorGroup, FactorError> {
        let n = table.len();
        if n == 0 || table.iter().any(|row| row.len() != n) {
            return Err(FactorError::TableShape);
        }
        for (i, row) in table.iter().enumerate() {
            for &v in row {
                if v >= n {
                    return Err(FactorError::TableRange(i));
                }
            }
        }
        for i in 0..n {
            if table[0][i] != i || table[i][0] != i {
                return Err(FactorError::TableIdentity);
            }
        }
        for (i, row) in table.iter().enumerate() {
            let mut seen = vec![false; n];
            for &v in row {
                if seen[v] {
                    return Err(FactorError::TableLatin(i));
                }
                seen[v] = true;
            }
            let mut col_seen = vec![false; n];
            for r in &table {
                if col_seen[r[i]] {
                    return Err(FactorError::TableLatin(i));
                }
                col_seen[r[i]] = true;
            }
        }
        let mut inv = vec![usize::MAX; n];
        for i in 0..n {
            for j in 0..n {
                if table[i][j] == 0 {
                    inv[i] = j;
                }
            }
            if inv[i] == usize::MAX {
                return Err(FactorError::TableInverse(i));
            }
        }
        if gens.is_empty() {
            return Err(FactorError::NoGenerators);
        }
        let mut names = std::collections::HashSet::new();
        for (g_name, idx) in &gens {
            if *idx >= n {
                return Err(FactorError::GeneratorRange(*idx));
            }
            if !names.insert(g_name.clone()) {
                return Err(FactorError::DuplicateName(g_name.clone()));
            }
        }
        // BFS over the Cayley graph for shortest generator decompositions.
        let mut decomp: Vec<Option<Vec<(usize, bool)>>> = vec![None; n];
        decomp[0] = Some(vec![]);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(e) = queue.pop_front() {
            let path = decomp[e].clone().unwrap();
            for (gi, &(_, gelem)) in gens.iter().enumerate() {
                for (invflag, step) in [(false, gelem), (true, inv[gelem])] {
                    let next = table[e][step];
                    if decomp[next].is_none() {
                        let mut p = path.clone();
                        p.push((gi, invflag));
                        decomp[next] = Some(p);
                        queue.push_back(next);
                    }
                }
            }
        }
        let decomp = decomp
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or(FactorError::NotGenerating(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FactorGroup {
            name: name.to_string(),
            kind: Kind::Finite {
                table,
                inv,
                gens,
                decomp,
            },
        })
    }

    /// Cyclic group of order n as a table group with one generator.
    pub fn cyclic(name: &str, n: usize, gen_name: &str) -> FactorGroup {
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        FactorGroup::finite(name, table, vec![(gen_name.to_string(), 1)])
            .expect("cyclic table is always valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_integer(&self) -> bool {
        matches!(self.kind, Kind::Integer { .. })
    }

    /// Number of elements for finite factors.
    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            Kind::Integer { .. } => None,
            Kind::Finite { table, .. } => Some(table.len()),
        }
    }

    pub fn identity(&self) -> FactorElem {
        match &self.kind {
            Kind::Integer { .. } => FactorElem::Int(BigInt::zero()),
            Kind::Finite { .. } => FactorElem::Table(0),
        }
    }

    pub fn is_identity(&self, e: &FactorElem) -> bool {
        match e {
            FactorElem::Int(k) => k.is_zero(),
            FactorElem::Table(i) => *i == 0,
        }
    }

    pub fn validate(&self, e: &FactorElem) -> Result<(), FactorError> {
        match (&self.kind, e) {
            (Kind::Integer { .. }, FactorElem::Int(_)) => Ok(()),
            (Kind::Finite { table, .. }, FactorElem::Table(i)) => {
                if *i < table.len() {
                    Ok(())
                } else {
                    Err(FactorError::ElemRange(*i, self.name.clone()))
                }
            }
            (_, FactorElem::Table(i)) => Err(FactorError::ElemRange(*i, self.name.clone())),
            (_, FactorElem::Int(_)) => Err(FactorError::ElemRange(0, self.name.clone())),
        }
    }

    pub fn mul(&self, a: &FactorElem, b: &FactorElem) -> FactorElem {
        match (&self.kind, a, b) {
            (Kind::Integer { .. }, FactorElem::Int(x), FactorElem::Int(y)) => {
                FactorElem::Int(x + y)
            }
            (Kind::Finite { table, .. }, FactorElem::Table(i), FactorElem::Table(j)) => {
                FactorElem::Table(table[*i][*j])
            }
            _ => panic!("factor element does not belong to factor {}", self.name),
        }
    }

    pub fn inv(&self, a: &FactorElem) -> FactorElem {
        match (&self.kind, a) {
            (Kind::Integer { .. }, FactorElem::Int(x)) => FactorElem::Int(-x),
            (Kind::Finite { inv, .. }, FactorElem::Table(i)) => FactorElem::Table(inv[*i]),
            _ => panic!("factor element does not belong to factor {}", self.name),
        }
    }

    /// Conjugate `a` by `t`: returns t⁻¹ a t.
    pub fn conj(&self, a: &FactorElem, t: &FactorElem) -> FactorElem {
        self.mul(&self.mul(&self.inv(t), a), t)
    }

    /// All elements, finite factors only.
    pub fn elements(&self) -> Vec<FactorElem> {
        match &self.kind {
            Kind::Integer { .. } => panic!("integer factor has infinitely many elements"),
            Kind::Finite { table, .. } => (0..table.len()).map(FactorElem::Table).collect(),
        }
    }

    pub fn generators(&self) -> Vec<(String, FactorElem)> {
        match &self.kind {
            Kind::Integer { gen_name } => {
                vec![(gen_name.clone(), FactorElem::int(1))]
            }
            Kind::Finite { gens, .. } => gens
                .iter()
                .map(|(n, i)| (n.clone(), FactorElem::Table(*i)))
                .collect(),
        }
    }

    pub fn resolve(&self, name: &str) -> Result<FactorElem, FactorError> {
        match &self.kind {
            Kind::Integer { gen_name } => {
                if name == gen_name {
                    Ok(FactorElem::int(1))
                } else {
                    Err(FactorError::UnknownGenerator(name.to_string()))
                }
            }
            Kind::Finite { gens, .. } => gens
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, i)| FactorElem::Table(*i))
                .ok_or_else(|| FactorError::UnknownGenerator(name.to_string())),
        }
    }

    pub fn pow(&self, a: &FactorElem, k: &BigInt) -> FactorElem {
        match (&self.kind, a) {
            (Kind::Integer { .. }, FactorElem::Int(x)) => FactorElem::Int(x * k),
            (Kind::Finite { table, inv, .. }, FactorElem::Table(i)) => {
                let n = BigInt::from(table.len());
                let mut m = k.mod_floor(&n);
                let base = *i;
                let mut acc = 0usize;
                while m > BigInt::zero() {
                    acc = table[acc][base];
                    m -= 1;
                }
                let _ = inv;
                FactorElem::Table(acc)
            }
            _ => panic!("factor element does not belong to factor {}", self.name),
        }
    }

    /// Shortest expression of an element as generator letters (index, inverted).
    pub fn decompose(&self, e: &FactorElem) -> Vec<(usize, bool)> {
        match (&self.kind, e) {
            (Kind::Integer { .. }, FactorElem::Int(k)) => {
                let neg = k.is_negative();
                let mag: u64 = k.abs().try_into().unwrap_or(u64::MAX);
                (0..mag).map(|_| (0usize, neg)).collect()
            }
            (Kind::Finite { decomp, .. }, FactorElem::Table(i)) => decomp[*i].clone(),
            _ => panic!("factor element does not belong to factor {}", self.name),
        }
    }

    /// Generator word length of an element (number of generator letters).
    pub fn gen_length(&self, e: &FactorElem) -> u64 {
        match (&self.kind, e) {
            (Kind::Integer { .. }, FactorElem::Int(k)) => k.abs().try_into().unwrap_or(u64::MAX),
            (Kind::Finite { decomp, .. }, FactorElem::Table(i)) => decomp[*i].len() as u64,
            _ => panic!("factor element does not belong to factor {}", self.name),
        }
    }

    /// Print an element as whitespace-separated `name` / `name^k` tokens.
    pub fn format_elem(&self, e: &FactorElem) -> String {
        match (&self.kind, e) {
            (Kind::Integer { gen_name }, FactorElem::Int(k)) => {
                if *k == BigInt::from(1) {
                    gen_name.clone()
                } else {
                    format!("{}^{}", gen_name, k)
                }
            }
            (Kind::Finite { gens, .. }, FactorElem::Table(_)) => {
                let letters = self.decompose(e);
                let mut runs: Vec<(usize, i64)> = Vec::new();
                for (gi, invflag) in letters {
                    let step = if invflag { -1 } else { 1 };
                    match runs.last_mut() {
                        Some((g, c)) if *g == gi && (*c > 0) == (step > 0) => *c += step,
                        _ => runs.push((gi, step)),
                    }
                }
                runs.iter()
                    .map(|(gi, c)| {
                        if *c == 1 {
                            gens[*gi].0.clone()
                        } else {
                            format!("{}^{}", gens[*gi].0, c)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            _ => panic!("factor element does not belong to factor {}", self.name),
        }
    }
}

/// A subgroup of one factor, in canonical form: kZ for the integer factor
/// (k ≥ 0, k = 0 the trivial subgroup, k = 1 everything), or a sorted element
/// list closed under products and inverses for a finite factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SubgroupDescriptor {
    Cyclic(BigInt),
    FiniteSubset(Vec<usize>),
}

impl SubgroupDescriptor {
    pub fn trivial(factor: &FactorGroup) -> SubgroupDescriptor {
        if factor.is_integer() {
            SubgroupDescriptor::Cyclic(BigInt::zero())
        } else {
            SubgroupDescriptor::FiniteSubset(vec![0])
        }
    }

    pub fn full(factor: &FactorGroup) -> SubgroupDescriptor {
        match factor.order() {
            None => SubgroupDescriptor::Cyclic(BigInt::from(1)),
            Some(n) => SubgroupDescriptor::FiniteSubset((0..n).collect()),
        }
    }

    /// Smallest subgroup containing the given elements.
    pub fn generated(factor: &FactorGroup, elems: &[FactorElem]) -> SubgroupDescriptor {
        let mut s = SubgroupDescriptor::trivial(factor);
        for e in elems {
            s = s.adjoin(factor, e);
        }
        s
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            SubgroupDescriptor::Cyclic(k) => k.is_zero(),
            SubgroupDescriptor::FiniteSubset(v) => v.len() == 1,
        }
    }

    pub fn contains(&self, factor: &FactorGroup, e: &FactorElem) -> bool {
        match (self, e) {
            (SubgroupDescriptor::Cyclic(k), FactorElem::Int(x)) => {
                if k.is_zero() {
                    x.is_zero()
                } else {
                    (x % k).is_zero()
                }
            }
            (SubgroupDescriptor::FiniteSubset(v), FactorElem::Table(i)) => {
                v.binary_search(i).is_ok()
            }
            _ => panic!("subgroup descriptor does not match factor {}", factor.name()),
        }
    }

    /// Subgroup generated by self and one more element.
    pub fn adjoin(&self, factor: &FactorGroup, e: &FactorElem) -> SubgroupDescriptor {
        match (self, e) {
            (SubgroupDescriptor::Cyclic(k), FactorElem::Int(x)) => {
                SubgroupDescriptor::Cyclic(k.gcd(x))
            }
            (SubgroupDescriptor::FiniteSubset(v), FactorElem::Table(i)) => {
                let mut set: std::collections::BTreeSet<usize> = v.iter().copied().collect();
                let mut queue: Vec<usize> = vec![*i];
                while let Some(x) = queue.pop() {
                    if set.contains(&x) {
                        continue;
                    }
                    let mut next = std::collections::BTreeSet::new();
                    set.insert(x);
                    for &a in &set {
                        for &b in &set {
                            if let FactorElem::Table(p) =
                                factor.mul(&FactorElem::Table(a), &FactorElem::Table(b))
                            {
                                next.insert(p);
                            }
                            if let FactorElem::Table(p) = factor.inv(&FactorElem::Table(a)) {
                                next.insert(p);
                            }
                        }
                    }
                    for p in next {
                        if !set.contains(&p) {
                            queue.push(p);
                        }
                    }
                }
                SubgroupDescriptor::FiniteSubset(set.into_iter().collect())
            }
            _ => panic!("subgroup descriptor does not match factor {}", factor.name()),
        }
    }

    pub fn union_closure(&self, factor: &FactorGroup, other: &SubgroupDescriptor) -> SubgroupDescriptor {
        match other {
            SubgroupDescriptor::Cyclic(k) => self.adjoin(factor, &FactorElem::Int(k.clone())),
            SubgroupDescriptor::FiniteSubset(v) => {
                let mut s = self.clone();
                for &i in v {
                    s = s.adjoin(factor, &FactorElem::Table(i));
                }
                s
            }
        }
    }

    pub fn intersect(&self, factor: &FactorGroup, other: &SubgroupDescriptor) -> SubgroupDescriptor {
        match (self, other) {
            (SubgroupDescriptor::Cyclic(a), SubgroupDescriptor::Cyclic(b)) => {
                if a.is_zero() || b.is_zero() {
                    SubgroupDescriptor::Cyclic(BigInt::zero())
                } else {
                    SubgroupDescriptor::Cyclic(a.lcm(b))
                }
            }
            (SubgroupDescriptor::FiniteSubset(a), SubgroupDescriptor::FiniteSubset(b)) => {
                SubgroupDescriptor::FiniteSubset(
                    a.iter().copied().filter(|i| b.binary_search(i).is_ok()).collect(),
                )
            }
            _ => panic!("subgroup descriptors do not match factor {}", factor.name()),
        }
    }

    /// t⁻¹ S t elementwise.
    pub fn conj(&self, factor: &FactorGroup, t: &FactorElem) -> SubgroupDescriptor {
        match self {
            SubgroupDescriptor::Cyclic(_) => self.clone(),
            SubgroupDescriptor::FiniteSubset(v) => {
                let mut out: Vec<usize> = v
                    .iter()
                    .map(|&i| match factor.conj(&FactorElem::Table(i), t) {
                        FactorElem::Table(j) => j,
                        _ => unreachable!(),
                    })
                    .collect();
                out.sort_unstable();
                SubgroupDescriptor::FiniteSubset(out)
            }
        }
    }

    /// Canonical representative of the right coset S·g.
    pub fn coset_rep(&self, factor: &FactorGroup, g: &FactorElem) -> FactorElem {
        match (self, g) {
            (SubgroupDescriptor::Cyclic(k), FactorElem::Int(x)) => {
                if k.is_zero() {
                    FactorElem::Int(x.clone())
                } else {
                    FactorElem::Int(x.mod_floor(k))
                }
            }
            (SubgroupDescriptor::FiniteSubset(v), FactorElem::Table(i)) => {
                let m = v
                    .iter()
                    .map(|&s| match factor.mul(&FactorElem::Table(s), &FactorElem::Table(*i)) {
                        FactorElem::Table(j) => j,
                        _ => unreachable!(),
                    })
                    .min()
                    .unwrap();
                FactorElem::Table(m)
            }
            _ => panic!("subgroup descriptor does not match factor {}", factor.name()),
        }
    }

    /// A small deterministic generating list.
    pub fn gen_list(&self, factor: &FactorGroup) -> Vec<FactorElem> {
        match self {
            SubgroupDescriptor::Cyclic(k) => {
                if k.is_zero() {
                    vec![]
                } else {
                    vec![FactorElem::Int(k.clone())]
                }
            }
            SubgroupDescriptor::FiniteSubset(v) => {
                let mut gens = Vec::new();
                let mut span = SubgroupDescriptor::trivial(factor);
                for &i in v {
                    if !span.contains(factor, &FactorElem::Table(i)) {
                        gens.push(FactorElem::Table(i));
                        span = span.adjoin(factor, &FactorElem::Table(i));
                    }
                }
                gens
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_table_roundtrip() {
        let z3 = FactorGroup::cyclic("H", 3, "b");
        let b = FactorElem::Table(1);
        assert_eq!(z3.mul(&b, &z3.mul(&b, &b)), FactorElem::Table(0));
        assert_eq!(z3.inv(&b), FactorElem::Table(2));
        assert_eq!(z3.format_elem(&FactorElem::Table(2)), "b^-1");
    }

    #[test]
    fn bad_table_rejected() {
        // row 1 repeats element 1
        let t = vec![vec![0, 1], vec![1, 1]];
        assert!(FactorGroup::finite("X", t, vec![("a".into(), 1)]).is_err());
    }

    #[test]
    fn subgroup_gcd_and_intersection() {
        let z = FactorGroup::integer("G", "a");
        let s = SubgroupDescriptor::generated(&z, &[FactorElem::int(4), FactorElem::int(6)]);
        assert_eq!(s, SubgroupDescriptor::Cyclic(BigInt::from(2)));
        let t = SubgroupDescriptor::Cyclic(BigInt::from(3));
        assert_eq!(s.intersect(&z, &t), SubgroupDescriptor::Cyclic(BigInt::from(6)));
    }

    #[test]
    fn finite_subgroup_closure() {
        let z6 = FactorGroup::cyclic("H", 6, "b");
        let s = SubgroupDescriptor::generated(&z6, &[FactorElem::Table(2)]);
        assert_eq!(s, SubgroupDescriptor::FiniteSubset(vec![0, 2, 4]));
        assert_eq!(
            s.coset_rep(&z6, &FactorElem::Table(5)),
            FactorElem::Table(1)
        );
    }
}
