//! Finite data for intersections C ∩ ⟨G₀, H₀⟩: the sets F₀, ζ_i, α_j, β_k read
//! off the spanning data of the quotient graph, the induced generating set,
//! and the rewriting algorithm that expresses intersection elements over it,
//! by induction on the critical number of their tree geodesic.

use crate::bass_serre::QuotientGraph;
use crate::factor::{FactorElem, Side, SubgroupDescriptor};
use crate::words::Word;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntersectError {
    #[error("element {0:?} of F0 is not contained in <G0, H0>")]
    NotInSubfactor(String),
    #[error("word {0:?} is not in the intersection")]
    NotInIntersection(String),
    #[error("critical number failed to decrease while rewriting {0:?}")]
    NoDescent(String),
    #[error("internal walk left the folded graph on a subgroup element")]
    WalkEscaped,
}

/// A choice of subgroups G₀ ≤ G and H₀ ≤ H.
#[derive(Clone, Debug)]
pub struct SubfactorPair {
    pub g0: SubgroupDescriptor,
    pub h0: SubgroupDescriptor,
}

/// The finite sets of the intersection theorem, with provenance into the
/// quotient graph.
#[derive(Clone, Debug)]
pub struct IntersectionData {
    /// One ζ per transversal edge, in deterministic edge order.
    pub zetas: Vec<(usize, Word)>,
    /// One α per nontrivial-stabilizer left-factor core vertex.
    pub alphas: Vec<(usize, Word)>,
    /// One β per nontrivial-stabilizer right-factor core vertex.
    pub betas: Vec<(usize, Word)>,
    /// ζ ∪ α ∪ β.
    pub f0_small: Vec<Word>,
    /// f0_small plus the edge witnesses x with x·e a lifted tree or
    /// transversal edge.
    pub f0: Vec<Word>,
}

/// Read the theorem data off a built graph.
pub fn theorem_data(g: &QuotientGraph) -> IntersectionData {
    let zetas: Vec<(usize, Word)> = g
        .transversal()
        .into_iter()
        .map(|(e, _, zeta)| (e, zeta))
        .collect();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for (f, side, rep, stab) in g.core_factor_data() {
        if stab.is_trivial() {
            continue;
        }
        match side {
            Side::Left => alphas.push((f, rep)),
            Side::Right => betas.push((f, rep)),
        }
    }
    let mut f0_small: Vec<Word> = zetas.iter().map(|(_, w)| w.clone()).collect();
    f0_small.extend(alphas.iter().map(|(_, w)| w.clone()));
    f0_small.extend(betas.iter().map(|(_, w)| w.clone()));
    f0_small.sort();
    f0_small.dedup();
    let mut f0 = f0_small.clone();
    for side in [Side::Left, Side::Right] {
        f0.extend(g.edge_lifts(side));
    }
    f0.sort();
    f0.dedup();
    IntersectionData {
        zetas,
        alphas,
        betas,
        f0_small,
        f0,
    }
}

fn check_precondition(
    g: &QuotientGraph,
    d: &IntersectionData,
    p: &SubfactorPair,
) -> Result<(), IntersectError> {
    let fp = g.free_product();
    for w in &d.f0 {
        if !fp.syllables_within(w, &p.g0, &p.h0) {
            return Err(IntersectError::NotInSubfactor(fp.display(w)));
        }
    }
    Ok(())
}

/// The generating set of C ∩ ⟨G₀, H₀⟩: the ζ verbatim, plus the generators of
/// (α⁻¹Cα) ∩ G₀ conjugated by α, and likewise for the β.
pub fn intersection_generators(
    d: &IntersectionData,
    g: &QuotientGraph,
    p: &SubfactorPair,
) -> Result<Vec<Word>, IntersectError> {
    Ok(generator_table(d, g, p)?.words)
}

/// One generator with enough provenance for the rewriting step.
#[derive(Clone, Debug)]
enum GenKind {
    Zeta { edge: usize },
    Conj { fac: usize, elem: FactorElem },
}

struct GeneratorTable {
    words: Vec<Word>,
    kinds: Vec<GenKind>,
}

impl GeneratorTable {
    fn zeta_index(&self, edge: usize) -> usize {
        self.kinds
            .iter()
            .position(|k| matches!(k, GenKind::Zeta { edge: e } if *e == edge))
            .expect("transversal edge has a zeta generator")
    }

    fn conj_gens(&self, fac: usize) -> Vec<(FactorElem, usize)> {
        self.kinds
            .iter()
            .enumerate()
            .filter_map(|(i, k)| match k {
                GenKind::Conj { fac: f, elem } if *f == fac => Some((elem.clone(), i)),
                _ => None,
            })
            .collect()
    }
}

fn generator_table(
    d: &IntersectionData,
    g: &QuotientGraph,
    p: &SubfactorPair,
) -> Result<GeneratorTable, IntersectError> {
    check_precondition(g, d, p)?;
    let fp = g.free_product();
    let mut words = Vec::new();
    let mut kinds = Vec::new();
    for (e, zeta) in &d.zetas {
        words.push(zeta.clone());
        kinds.push(GenKind::Zeta { edge: *e });
    }
    for (list, side, sub) in [
        (&d.alphas, Side::Left, &p.g0),
        (&d.betas, Side::Right, &p.h0),
    ] {
        let factor = fp.factor(side);
        for (f, rep) in list.iter() {
            let gj = g.factor_stab(*f).intersect(factor, sub);
            for elem in gj.gen_list(factor) {
                let mid = fp.syllable_word(side, elem.clone());
                words.push(fp.mul(&fp.mul(rep, &mid), &fp.inv(rep)));
                kinds.push(GenKind::Conj { fac: *f, elem });
            }
        }
    }
    Ok(GeneratorTable { words, kinds })
}

/// Critical items of the tree geodesic of w: vertices outside the lifted tree
/// and edges outside the lifted tree and the transversal.
pub fn critical_number(g: &QuotientGraph, w: &Word) -> usize {
    let fp = g.free_product();
    let left_edges = g.edge_lifts(Side::Left);
    let right_edges = g.edge_lifts(Side::Right);
    let edge_lifted = |side: Side, x: &Word| -> bool {
        match side {
            Side::Left => left_edges.binary_search(x).is_ok(),
            Side::Right => right_edges.binary_search(x).is_ok(),
        }
    };
    let mut count = 0usize;
    let mut prefix = Word::identity();
    let mut zero: Option<usize> = Some(g.base());
    for s in w.syllables() {
        let side = s.side;
        let fac = zero.and_then(|z| g.zero_side_fac(z, side));
        // backward edge out of the current zero vertex
        if !edge_lifted(side, &prefix) {
            count += 1;
        }
        // the factor vertex between
        let vertex_lifted = match fac {
            None => false,
            Some(f) => {
                g.factor_is_core(f) && {
                    let q = fp.mul(&fp.inv(g.factor_rep(f)), &prefix);
                    q.is_identity()
                        || (q.syllable_length() == 1 && q.syllables()[0].side == side)
                }
            }
        };
        if !vertex_lifted {
            count += 1;
        }
        prefix = fp.mul(&prefix, &fp.syllable_word(side, s.elem.clone()));
        // forward edge into the next zero vertex
        if !edge_lifted(side, &prefix) {
            count += 1;
        }
        zero = zero.and_then(|z| g.walk_step(z, s));
        let zero_lifted = match zero {
            None => false,
            Some(z) => g.zero_is_core(z) && g.zero_rep(z) == &prefix,
        };
        if !zero_lifted {
            count += 1;
        }
    }
    count
}

/// Outcome of the rewriting induction: the generator word, and the critical
/// numbers recorded before each step (strictly decreasing by construction).
#[derive(Clone, Debug)]
pub struct RewriteOutcome {
    pub factors: Vec<(usize, i64)>,
    pub critical_trace: Vec<usize>,
}

/// Express x ∈ C ∩ ⟨G₀, H₀⟩ as a product of the intersection generators.
pub fn rewrite_in_generators(
    g: &QuotientGraph,
    d: &IntersectionData,
    p: &SubfactorPair,
    x: &Word,
) -> Result<RewriteOutcome, IntersectError> {
    let fp = g.free_product().clone();
    if !g.membership(x) || !fp.syllables_within(x, &p.g0, &p.h0) {
        return Err(IntersectError::NotInIntersection(fp.display(x)));
    }
    let table = generator_table(d, g, p)?;
    let zeta_of: std::collections::HashMap<usize, Word> = d.zetas.iter().cloned().collect();
    let mut factors: Vec<(usize, i64)> = Vec::new();
    let mut trace = Vec::new();
    let mut cur = x.clone();
    loop {
        let cn = critical_number(g, &cur);
        if let Some(&prev) = trace.last() {
            if cn >= prev {
                return Err(IntersectError::NoDescent(fp.display(x)));
            }
        }
        trace.push(cn);
        if cur.is_identity() {
            break;
        }
        let step = first_critical_action(g, &table, &zeta_of, p, &cur)?;
        match step {
            Action::MultiplyZeta { index, zeta, emit } => {
                factors.push((index, emit));
                cur = if emit > 0 {
                    // x = ζ · (ζ⁻¹ x)
                    fp.mul(&fp.inv(&zeta), &cur)
                } else {
                    // x = ζ⁻¹ · (ζ x)
                    fp.mul(&zeta, &cur)
                };
            }
            Action::MultiplyConj { expr, u } => {
                // x = u⁻¹ · (u x); u = Π gens^e, so emit the reversed inverse.
                for (idx, e) in expr.iter().rev() {
                    factors.push((*idx, -e));
                }
                cur = fp.mul(&u, &cur);
            }
        }
    }
    Ok(RewriteOutcome {
        factors,
        critical_trace: trace,
    })
}

enum Action {
    MultiplyZeta { index: usize, zeta: Word, emit: i64 },
    MultiplyConj { expr: Vec<(usize, i64)>, u: Word },
}

/// Find the first critical item on the geodesic of a nontrivial subgroup
/// element and produce the matching multiplier.
fn first_critical_action(
    g: &QuotientGraph,
    table: &GeneratorTable,
    zeta_of: &std::collections::HashMap<usize, Word>,
    p: &SubfactorPair,
    x: &Word,
) -> Result<Action, IntersectError> {
    let fp = g.free_product();
    let left_edges = g.edge_lifts(Side::Left);
    let right_edges = g.edge_lifts(Side::Right);
    let edge_lifted = |side: Side, w: &Word| -> bool {
        match side {
            Side::Left => left_edges.binary_search(w).is_ok(),
            Side::Right => right_edges.binary_search(w).is_ok(),
        }
    };
    let mut prefix = Word::identity();
    let mut zero = g.base();
    for s in x.syllables() {
        let side = s.side;
        let factor = fp.factor(side);
        let f = g
            .zero_side_fac(zero, side)
            .ok_or(IntersectError::WalkEscaped)?;
        // backward edge: if it is the first critical item, its inverse
        // projects onto a transversal edge
        if !edge_lifted(side, &prefix) {
            let edge = g.zero_side_edge(zero, side).ok_or(IntersectError::WalkEscaped)?;
            if !g.edge_is_transversal(edge) {
                return Err(IntersectError::WalkEscaped);
            }
            let zeta = zeta_of[&edge].clone();
            let index = table.zeta_index(edge);
            return Ok(Action::MultiplyZeta {
                index,
                zeta,
                emit: 1,
            });
        }
        let next_prefix = fp.mul(&prefix, &fp.syllable_word(side, s.elem.clone()));
        if !edge_lifted(side, &next_prefix) {
            // the forward edge turns at a stabilized vertex
            let q = fp.mul(&fp.inv(g.factor_rep(f)), &next_prefix);
            let g_v = if q.is_identity() {
                factor.identity()
            } else {
                debug_assert!(q.syllable_length() == 1 && q.syllables()[0].side == side);
                q.syllables()[0].elem.clone()
            };
            let target = g.factor_stab(f).coset_rep(factor, &g_v);
            let witness = factor.mul(&target, &factor.inv(&g_v));
            debug_assert!(g.factor_stab(f).contains(factor, &witness));
            let sub = match side {
                Side::Left => &p.g0,
                Side::Right => &p.h0,
            };
            if !sub.contains(factor, &witness) {
                return Err(IntersectError::NotInSubfactor(
                    factor.format_elem(&witness),
                ));
            }
            let gj = g.factor_stab(f).intersect(factor, sub);
            let expr_local = express_in_subgroup(factor, &gj, &witness);
            let gens = table.conj_gens(f);
            let mut expr = Vec::new();
            for (elem, e) in expr_local {
                let idx = gens
                    .iter()
                    .find(|(ge, _)| *ge == elem)
                    .map(|(_, i)| *i)
                    .expect("subgroup generator is in the table");
                expr.push((idx, e));
            }
            let rep = g.factor_rep(f).clone();
            let mid = fp.syllable_word(side, witness);
            let u = fp.mul(&fp.mul(&rep, &mid), &fp.inv(&rep));
            return Ok(Action::MultiplyConj { expr, u });
        }
        let next_zero = g.walk_step(zero, s).ok_or(IntersectError::WalkEscaped)?;
        let zero_lifted = g.zero_is_core(next_zero) && g.zero_rep(next_zero) == &next_prefix;
        if !zero_lifted {
            // the forward edge was a transversal lift; its ζ pulls the
            // terminal vertex back into the lifted tree
            let e_out = g
                .fac_edge_to_zero(f, next_zero, &next_prefix)
                .ok_or(IntersectError::WalkEscaped)?;
            if !g.edge_is_transversal(e_out) {
                return Err(IntersectError::WalkEscaped);
            }
            let zeta = zeta_of[&e_out].clone();
            let index = table.zeta_index(e_out);
            return Ok(Action::MultiplyZeta {
                index,
                zeta,
                emit: -1,
            });
        }
        prefix = next_prefix;
        zero = next_zero;
    }
    Err(IntersectError::WalkEscaped)
}

/// Express an element of a factor subgroup over its deterministic generator
/// list, as (generator, exponent) pairs whose ordered product equals it.
fn express_in_subgroup(
    factor: &crate::factor::FactorGroup,
    sub: &SubgroupDescriptor,
    elem: &FactorElem,
) -> Vec<(FactorElem, i64)> {
    match (sub, elem) {
        (SubgroupDescriptor::Cyclic(k), FactorElem::Int(x)) => {
            if x.is_zero() {
                vec![]
            } else {
                debug_assert!(!k.is_zero() && (x % k).is_zero());
                let e: i64 = (x / k).try_into().expect("exponent fits in i64");
                vec![(FactorElem::Int(k.clone()), e)]
            }
        }
        (SubgroupDescriptor::FiniteSubset(_), FactorElem::Table(t)) => {
            if *t == 0 {
                return vec![];
            }
            let gens = sub.gen_list(factor);
            // breadth-first search in the subgroup's Cayley graph
            let mut prev: std::collections::HashMap<usize, (usize, usize, i64)> =
                std::collections::HashMap::new();
            let mut queue = std::collections::VecDeque::from([0usize]);
            prev.insert(0, (0, usize::MAX, 0));
            while let Some(c) = queue.pop_front() {
                if c == *t {
                    break;
                }
                for (gi, ge) in gens.iter().enumerate() {
                    for (step, e) in [(ge.clone(), 1i64), (factor.inv(ge), -1)] {
                        if let FactorElem::Table(n) = factor.mul(&FactorElem::Table(c), &step) {
                            if !prev.contains_key(&n) {
                                prev.insert(n, (c, gi, e));
                                queue.push_back(n);
                            }
                        }
                    }
                }
            }
            let mut path = Vec::new();
            let mut cur = *t;
            while cur != 0 {
                let (pv, gi, e) = prev[&cur];
                path.push((gens[gi].clone(), e));
                cur = pv;
            }
            path.reverse();
            path
        }
        _ => panic!("subgroup descriptor does not match factor element"),
    }
}

/// Kurosh rank of the rebuilt intersection graph never exceeds the rank of C.
pub fn kurosh_bound_check(g_c: &QuotientGraph, g_int: &QuotientGraph) -> bool {
    g_int.kurosh_rank().total <= g_c.kurosh_rank().total
}

/// JSON report for the CLI.
pub fn report_json(
    g: &QuotientGraph,
    d: &IntersectionData,
    p: &SubfactorPair,
) -> serde_json::Value {
    let fp = g.free_product();
    let show = |ws: &[Word]| -> Vec<String> { ws.iter().map(|w| fp.display(w)).collect() };
    let zetas: Vec<String> = d.zetas.iter().map(|(_, w)| fp.display(w)).collect();
    let alphas: Vec<String> = d.alphas.iter().map(|(_, w)| fp.display(w)).collect();
    let betas: Vec<String> = d.betas.iter().map(|(_, w)| fp.display(w)).collect();
    match intersection_generators(d, g, p) {
        Err(e) => serde_json::json!({
            "error": e.to_string(),
            "f0": show(&d.f0),
            "zetas": zetas,
            "alphas": alphas,
            "betas": betas,
        }),
        Ok(gens) => {
            let g_int = QuotientGraph::build(fp, &gens);
            serde_json::json!({
                "f0": show(&d.f0),
                "zetas": zetas,
                "alphas": alphas,
                "betas": betas,
                "generators": show(&gens),
                "rank_C": g.kurosh_rank(),
                "rank_intersection": g_int.kurosh_rank(),
                "bound_ok": kurosh_bound_check(g, &g_int),
            })
        }
    }
}

/// Multiply out a rewriting outcome against the generator list.
pub fn expand_factors(g: &QuotientGraph, gens: &[Word], factors: &[(usize, i64)]) -> Word {
    let fp = g.free_product();
    let mut acc = Word::identity();
    for (i, e) in factors {
        let pw = fp.pow(&gens[*i], *e);
        acc = fp.mul(&acc, &pw);
    }
    acc
}
