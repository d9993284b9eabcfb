//! Quotient graph of the ambient tree by a finitely generated subgroup C of
//! G * H, built by folding the generator loops.
//!
//! Vertices come in three types. Zero vertices are cosets C·x·v₀ and carry a
//! representative word; factor vertices are cosets C·x·v_G or C·x·v_H and
//! carry a stabilizer descriptor S with C ∩ xGx⁻¹ = xSx⁻¹ relative to the
//! stored representative. Edges join a factor vertex to a zero vertex and are
//! labelled by a canonical right-coset representative of the stabilizer, so a
//! folded vertex never has two edges in the same stabilizer coset. Paths from
//! the base zero vertex spell exactly the elements of C.

use crate::factor::{FactorElem, Side, SubgroupDescriptor};
use crate::words::{FreeProduct, Syllable, Word};
use serde::Serialize;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("generator {0:?} is not a valid word over this factor pair")]
    BadGenerator(String),
    #[error("spanning data has not been computed")]
    NoSpanningData,
}

#[derive(Clone, Debug)]
struct ZeroVertex {
    rep: Word,
    edges: Vec<usize>,
    alive: bool,
    core: bool,
    /// BFS visit number within the core, usize::MAX when unvisited.
    order: usize,
}

#[derive(Clone, Debug)]
struct FactorVertex {
    side: Side,
    rep: Word,
    stab: SubgroupDescriptor,
    edges: Vec<usize>,
    alive: bool,
    core: bool,
    order: usize,
    /// Label of the spanning-tree edge through which BFS entered.
    parent_label: Option<FactorElem>,
}

#[derive(Clone, Debug)]
struct Edge {
    fv: usize,
    zv: usize,
    label: FactorElem,
    alive: bool,
    core: bool,
    maxtree: bool,
    transversal: bool,
    /// Exact word x with x·e_side the chosen lift in the ambient tree.
    lift: Option<Word>,
}

/// Totals for the Kurosh decomposition read off the fundamental core.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KuroshReport {
    /// Vertices with nontrivial stabilizer.
    pub t: usize,
    /// Core edges outside a maximal subtree.
    pub graph_rank: usize,
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct QuotientGraph {
    fp: FreeProduct,
    gens: Vec<Word>,
    zeros: Vec<ZeroVertex>,
    facs: Vec<FactorVertex>,
    edges: Vec<Edge>,
    base: usize,
    spanned: bool,
}

impl QuotientGraph {
    /// Build the folded graph for C = ⟨gens⟩. Words equal to the identity are
    /// allowed and ignored; an empty list gives the trivial subgroup.
    pub fn build(fp: &FreeProduct, gens: &[Word]) -> QuotientGraph {
        let mut g = QuotientGraph {
            fp: fp.clone(),
            gens: gens.to_vec(),
            zeros: vec![ZeroVertex {
                rep: Word::identity(),
                edges: vec![],
                alive: true,
                core: true,
                order: usize::MAX,
            }],
            facs: vec![],
            edges: vec![],
            base: 0,
            spanned: false,
        };
        for w in gens {
            g.trace_loop(w);
        }
        g.fold();
        g.mark_core();
        g.spanning_data();
        g
    }

    pub fn free_product(&self) -> &FreeProduct {
        &self.fp
    }

    pub fn generators(&self) -> &[Word] {
        &self.gens
    }

    fn trace_loop(&mut self, w: &Word) {
        if w.is_identity() {
            return;
        }
        let mut cur = self.base;
        let n = w.syllable_length();
        for (i, s) in w.syllables().iter().enumerate() {
            let f = self.facs.len();
            self.facs.push(FactorVertex {
                side: s.side,
                rep: Word::identity(),
                stab: SubgroupDescriptor::trivial(self.fp.factor(s.side)),
                edges: vec![],
                alive: true,
                core: false,
                order: usize::MAX,
                parent_label: None,
            });
            self.add_edge(f, cur, self.fp.factor(s.side).identity());
            let next = if i + 1 == n {
                self.base
            } else {
                self.zeros.push(ZeroVertex {
                    rep: Word::identity(),
                    edges: vec![],
                    alive: true,
                    core: false,
                    order: usize::MAX,
                });
                self.zeros.len() - 1
            };
            self.add_edge(f, next, s.elem.clone());
            cur = next;
        }
    }

    fn add_edge(&mut self, fv: usize, zv: usize, label: FactorElem) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            fv,
            zv,
            label,
            alive: true,
            core: false,
            maxtree: false,
            transversal: false,
            lift: None,
        });
        self.facs[fv].edges.push(id);
        self.zeros[zv].edges.push(id);
        id
    }

    fn live_edges_of_zero(&self, z: usize) -> Vec<usize> {
        self.zeros[z].edges.iter().copied().filter(|&e| self.edges[e].alive).collect()
    }

    fn live_edges_of_fac(&self, f: usize) -> Vec<usize> {
        self.facs[f].edges.iter().copied().filter(|&e| self.edges[e].alive).collect()
    }

    fn kill_edge(&mut self, e: usize) {
        self.edges[e].alive = false;
    }

    fn fold(&mut self) {
        loop {
            let mut progressed = false;
            for f in 0..self.facs.len() {
                if self.facs[f].alive {
                    progressed |= self.recanonicalize(f);
                }
            }
            for z in 0..self.zeros.len() {
                if self.zeros[z].alive && self.resolve_zero(z) {
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                break;
            }
        }
        debug_assert!(self.is_folded());
    }

    /// One folding step at a zero vertex with two edges of the same side.
    fn resolve_zero(&mut self, z: usize) -> bool {
        let live = self.live_edges_of_zero(z);
        for side in [Side::Left, Side::Right] {
            let same: Vec<usize> = live
                .iter()
                .copied()
                .filter(|&e| self.facs[self.edges[e].fv].side == side)
                .collect();
            if same.len() < 2 {
                continue;
            }
            let (e1, e2) = (same[0], same[1]);
            let f1 = self.edges[e1].fv;
            let f2 = self.edges[e2].fv;
            let factor = self.fp.factor(side);
            let l1 = self.edges[e1].label.clone();
            let l2 = self.edges[e2].label.clone();
            if f1 == f2 {
                if l1 == l2 {
                    self.kill_edge(e2);
                } else {
                    // Both cosets hit the same zero vertex: their difference
                    // stabilizes the factor vertex.
                    let witness = factor.mul(&l1, &factor.inv(&l2));
                    self.facs[f1].stab = self.facs[f1].stab.adjoin(factor, &witness);
                    self.recanonicalize(f1);
                }
            } else {
                // Two names for the same factor vertex; merge f2 into f1,
                // rewriting labels by the coset shift.
                let gamma = factor.mul(&l1, &factor.inv(&l2));
                let moved = self.live_edges_of_fac(f2);
                let stab2 = self.facs[f2].stab.conj(factor, &factor.inv(&gamma));
                self.facs[f1].stab = self.facs[f1].stab.union_closure(factor, &stab2);
                for e in moved {
                    self.edges[e].label = factor.mul(&gamma, &self.edges[e].label);
                    self.edges[e].fv = f1;
                    let id = e;
                    self.facs[f1].edges.push(id);
                }
                self.facs[f2].alive = false;
                self.recanonicalize(f1);
            }
            return true;
        }
        false
    }

    /// Rewrite the labels at a factor vertex as canonical coset representatives
    /// and collapse edges that end up in the same coset.
    fn recanonicalize(&mut self, f: usize) -> bool {
        let side = self.facs[f].side;
        let mut progressed = false;
        loop {
            let stab = self.facs[f].stab.clone();
            let factor = self.fp.factor(side);
            for &e in &self.facs[f].edges.clone() {
                if self.edges[e].alive {
                    let canon = stab.coset_rep(factor, &self.edges[e].label);
                    if canon != self.edges[e].label {
                        self.edges[e].label = canon;
                        progressed = true;
                    }
                }
            }
            let live = self.live_edges_of_fac(f);
            let mut dup: Option<(usize, usize)> = None;
            'outer: for i in 0..live.len() {
                for j in i + 1..live.len() {
                    if self.edges[live[i]].label == self.edges[live[j]].label {
                        dup = Some((live[i], live[j]));
                        break 'outer;
                    }
                }
            }
            match dup {
                None => return progressed,
                Some((keep, drop)) => {
                    progressed = true;
                    let (za, zb) = (self.edges[keep].zv, self.edges[drop].zv);
                    self.kill_edge(drop);
                    if za != zb {
                        self.merge_zeros(za, zb);
                    }
                }
            }
        }
    }

    fn merge_zeros(&mut self, a: usize, b: usize) {
        let (keep, dead) = if a == self.base {
            (a, b)
        } else if b == self.base {
            (b, a)
        } else if a < b {
            (a, b)
        } else {
            (b, a)
        };
        let moved = self.zeros[dead].edges.clone();
        for e in moved {
            if self.edges[e].zv == dead {
                self.edges[e].zv = keep;
            }
            self.zeros[keep].edges.push(e);
        }
        self.zeros[dead].alive = false;
        self.zeros[dead].edges.clear();
    }

    fn is_folded(&self) -> bool {
        for z in 0..self.zeros.len() {
            if !self.zeros[z].alive {
                continue;
            }
            for side in [Side::Left, Side::Right] {
                let k = self
                    .live_edges_of_zero(z)
                    .into_iter()
                    .filter(|&e| self.facs[self.edges[e].fv].side == side)
                    .count();
                if k > 1 {
                    return false;
                }
            }
        }
        for f in 0..self.facs.len() {
            if !self.facs[f].alive {
                continue;
            }
            let live = self.live_edges_of_fac(f);
            for i in 0..live.len() {
                for j in i + 1..live.len() {
                    if self.edges[live[i]].label == self.edges[live[j]].label {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Walk a word's path from the base. Returns the zero vertex where it
    /// lands, or None when the path leaves the built graph.
    pub fn coset_walk(&self, w: &Word) -> Option<usize> {
        let mut cur = self.base;
        for s in w.syllables() {
            cur = self.step(cur, s)?;
        }
        Some(cur)
    }

    fn step(&self, z: usize, s: &Syllable) -> Option<usize> {
        let e_in = self
            .live_edges_of_zero(z)
            .into_iter()
            .find(|&e| self.facs[self.edges[e].fv].side == s.side)?;
        let f = self.edges[e_in].fv;
        let factor = self.fp.factor(s.side);
        let target = self.facs[f]
            .stab
            .coset_rep(factor, &factor.mul(&self.edges[e_in].label, &s.elem));
        let e_out = self
            .live_edges_of_fac(f)
            .into_iter()
            .find(|&e| self.edges[e].label == target)?;
        Some(self.edges[e_out].zv)
    }

    /// Membership in C: the path exists in the folded graph and closes at the
    /// base.
    pub fn membership(&self, w: &Word) -> bool {
        self.coset_walk(w) == Some(self.base)
    }

    /// One syllable of a coset walk.
    pub fn walk_step(&self, z: usize, s: &Syllable) -> Option<usize> {
        self.step(z, s)
    }

    /// The factor vertex behind a zero vertex's edge of one side.
    pub fn zero_side_fac(&self, z: usize, side: Side) -> Option<usize> {
        self.zero_side_edge(z, side).map(|e| self.edges[e].fv)
    }

    pub fn zero_side_edge(&self, z: usize, side: Side) -> Option<usize> {
        self.live_edges_of_zero(z)
            .into_iter()
            .find(|&e| self.facs[self.edges[e].fv].side == side)
    }

    pub fn zero_is_core(&self, z: usize) -> bool {
        self.zeros[z].core
    }

    pub fn factor_is_core(&self, f: usize) -> bool {
        self.facs[f].core
    }

    pub fn edge_is_transversal(&self, e: usize) -> bool {
        self.edges[e].transversal
    }

    /// The edge from a factor vertex to a given zero vertex whose lift word
    /// matches, used to identify a traversed transversal edge.
    pub fn fac_edge_to_zero(&self, f: usize, z: usize, lift: &Word) -> Option<usize> {
        self.live_edges_of_fac(f)
            .into_iter()
            .find(|&e| self.edges[e].zv == z && self.edges[e].lift.as_ref() == Some(lift))
    }

    /// Right cosets: Cu = Cv.
    pub fn same_right_coset(&self, u: &Word, v: &Word) -> bool {
        self.membership(&self.fp.mul(u, &self.fp.inv(v)))
    }

    /// Left cosets: uC = vC.
    pub fn same_left_coset(&self, u: &Word, v: &Word) -> bool {
        self.membership(&self.fp.mul(&self.fp.inv(u), v))
    }

    /// Leaf-prune down to the fundamental core: keep the base, every vertex on
    /// a closed reduced base path, every nontrivial-stabilizer vertex, and the
    /// geodesics connecting them.
    fn mark_core(&mut self) {
        for z in 0..self.zeros.len() {
            self.zeros[z].core = self.zeros[z].alive;
        }
        for f in 0..self.facs.len() {
            self.facs[f].core = self.facs[f].alive;
        }
        for e in 0..self.edges.len() {
            self.edges[e].core = self.edges[e].alive;
        }
        loop {
            let mut pruned = false;
            for z in 0..self.zeros.len() {
                if !self.zeros[z].core || z == self.base {
                    continue;
                }
                let deg: Vec<usize> = self
                    .live_edges_of_zero(z)
                    .into_iter()
                    .filter(|&e| self.edges[e].core)
                    .collect();
                if deg.len() <= 1 {
                    self.zeros[z].core = false;
                    for e in deg {
                        self.edges[e].core = false;
                    }
                    pruned = true;
                }
            }
            for f in 0..self.facs.len() {
                if !self.facs[f].core || !self.facs[f].stab.is_trivial() {
                    continue;
                }
                let deg: Vec<usize> = self
                    .live_edges_of_fac(f)
                    .into_iter()
                    .filter(|&e| self.edges[e].core)
                    .collect();
                if deg.len() <= 1 {
                    self.facs[f].core = false;
                    for e in deg {
                        self.edges[e].core = false;
                    }
                    pruned = true;
                }
            }
            if !pruned {
                break;
            }
        }
    }

    /// Deterministic BFS over the core: spanning tree, exact representative
    /// words (the lifted tree), transversal edges and their lifts.
    fn spanning_data(&mut self) {
        #[derive(Clone, Copy)]
        enum Node {
            Zero(usize),
            Fac(usize),
        }
        let mut queue = VecDeque::new();
        let mut zcount = 0usize;
        let mut fcount = 0usize;
        self.zeros[self.base].rep = Word::identity();
        self.zeros[self.base].order = zcount;
        zcount += 1;
        queue.push_back(Node::Zero(self.base));
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Zero(z) => {
                    let mut es: Vec<usize> = self
                        .live_edges_of_zero(z)
                        .into_iter()
                        .filter(|&e| self.edges[e].core)
                        .collect();
                    es.sort_by_key(|&e| self.facs[self.edges[e].fv].side);
                    for e in es {
                        let f = self.edges[e].fv;
                        if self.facs[f].order != usize::MAX {
                            continue;
                        }
                        // Entering a factor vertex: shift its labels so the
                        // entry edge carries the trivial coset, making labels
                        // and stabilizer independent of folding history.
                        let side = self.facs[f].side;
                        let factor = self.fp.factor(side);
                        let delta = self.edges[e].label.clone();
                        let delta_inv = factor.inv(&delta);
                        self.facs[f].stab = self.facs[f].stab.conj(factor, &delta);
                        for &e2 in &self.facs[f].edges.clone() {
                            if self.edges[e2].alive {
                                self.edges[e2].label =
                                    factor.mul(&delta_inv, &self.edges[e2].label);
                            }
                        }
                        self.recanonicalize_labels_only(f);
                        self.facs[f].rep = self.zeros[z].rep.clone();
                        self.facs[f].parent_label = Some(self.edges[e].label.clone());
                        self.facs[f].order = fcount;
                        fcount += 1;
                        self.edges[e].maxtree = true;
                        queue.push_back(Node::Fac(f));
                    }
                }
                Node::Fac(f) => {
                    let side = self.facs[f].side;
                    let mut es: Vec<usize> = self
                        .live_edges_of_fac(f)
                        .into_iter()
                        .filter(|&e| self.edges[e].core)
                        .collect();
                    es.sort_by(|&a, &b| {
                        crate::words::cmp_factor_elems(
                            &self.edges[a].label,
                            &self.edges[b].label,
                        )
                    });
                    for e in es {
                        let lift = self.fp.mul(
                            &self.facs[f].rep,
                            &self.fp.syllable_word(side, self.edges[e].label.clone()),
                        );
                        self.edges[e].lift = Some(lift.clone());
                        let z = self.edges[e].zv;
                        if self.zeros[z].order == usize::MAX {
                            self.zeros[z].rep = lift;
                            self.zeros[z].order = zcount;
                            zcount += 1;
                            self.edges[e].maxtree = true;
                            queue.push_back(Node::Zero(z));
                        } else if !self.edges[e].maxtree {
                            self.edges[e].transversal = true;
                        }
                    }
                }
            }
        }
        self.spanned = true;
    }

    fn recanonicalize_labels_only(&mut self, f: usize) {
        let side = self.facs[f].side;
        let stab = self.facs[f].stab.clone();
        let factor = self.fp.factor(side);
        for &e in &self.facs[f].edges.clone() {
            if self.edges[e].alive {
                self.edges[e].label = stab.coset_rep(factor, &self.edges[e].label);
            }
        }
    }

    pub fn kurosh_rank(&self) -> KuroshReport {
        let t = self
            .facs
            .iter()
            .filter(|f| f.core && !f.stab.is_trivial())
            .count();
        let v = self.zeros.iter().filter(|z| z.core).count()
            + self.facs.iter().filter(|f| f.core).count();
        let e = self.edges.iter().filter(|e| e.core).count();
        let graph_rank = e + 1 - v;
        KuroshReport {
            t,
            graph_rank,
            total: t + graph_rank,
        }
    }

    /// Core zero vertices in BFS order, as (vertex id, representative).
    pub fn core_zero_reps(&self) -> Vec<(usize, Word)> {
        let mut v: Vec<(usize, usize, Word)> = self
            .zeros
            .iter()
            .enumerate()
            .filter(|(_, z)| z.core)
            .map(|(i, z)| (z.order, i, z.rep.clone()))
            .collect();
        v.sort_by_key(|(o, _, _)| *o);
        v.into_iter().map(|(_, i, w)| (i, w)).collect()
    }

    /// Core factor vertices in BFS order: (id, side, rep, stabilizer).
    pub fn core_factor_data(&self) -> Vec<(usize, Side, Word, SubgroupDescriptor)> {
        let mut v: Vec<(usize, usize, Side, Word, SubgroupDescriptor)> = self
            .facs
            .iter()
            .enumerate()
            .filter(|(_, f)| f.core)
            .map(|(i, f)| (f.order, i, f.side, f.rep.clone(), f.stab.clone()))
            .collect();
        v.sort_by_key(|(o, _, _, _, _)| *o);
        v.into_iter().map(|(_, i, s, w, d)| (i, s, w, d)).collect()
    }

    /// The label of the spanning-tree edge through which BFS reached a factor
    /// vertex.
    pub fn parent_label(&self, f: usize) -> Option<FactorElem> {
        self.facs[f].parent_label.clone()
    }

    pub fn factor_side(&self, f: usize) -> Side {
        self.facs[f].side
    }

    pub fn factor_rep(&self, f: usize) -> &Word {
        &self.facs[f].rep
    }

    pub fn factor_stab(&self, f: usize) -> &SubgroupDescriptor {
        &self.facs[f].stab
    }

    pub fn zero_rep(&self, z: usize) -> &Word {
        &self.zeros[z].rep
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Transversal edges in deterministic order: (edge id, lift x, ζ).
    /// The edge's tree lift is x·e_side and ζ ∈ C moves its terminal vertex
    /// back into the lifted tree.
    pub fn transversal(&self) -> Vec<(usize, Word, Word)> {
        let mut out = Vec::new();
        let mut es: Vec<usize> = (0..self.edges.len())
            .filter(|&e| self.edges[e].transversal)
            .collect();
        es.sort_by_key(|&e| {
            (
                self.facs[self.edges[e].fv].order,
                self.edges[e].lift.clone().map(|w| w.syllable_length()),
                e,
            )
        });
        for e in es {
            let x = self.edges[e].lift.clone().expect("transversal edges carry lifts");
            let zeta = self
                .fp
                .mul(&self.zeros[self.edges[e].zv].rep, &self.fp.inv(&x));
            out.push((e, x, zeta));
        }
        out
    }

    /// Number of core edges, undirected.
    pub fn core_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.core).count()
    }

    /// Lift words of spanning-tree and transversal edges of one side.
    pub fn edge_lifts(&self, side: Side) -> Vec<Word> {
        let mut v: Vec<Word> = self
            .edges
            .iter()
            .filter(|e| (e.maxtree || e.transversal) && self.facs[e.fv].side == side)
            .filter_map(|e| e.lift.clone())
            .collect();
        v.sort();
        v
    }

    /// All (lift, stabilizer) pairs of core factor vertices of one side.
    pub fn factor_lifts(&self, side: Side) -> Vec<(Word, SubgroupDescriptor)> {
        self.core_factor_data()
            .into_iter()
            .filter(|(_, s, _, _)| *s == side)
            .map(|(_, _, w, d)| (w, d))
            .collect()
    }

    pub fn is_spanned(&self) -> bool {
        self.spanned
    }

    /// Canonical structural encoding of the fundamental core. Two builds of
    /// the same subgroup agree line for line; used by the confluence checks.
    pub fn core_signature(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let report = self.kurosh_rank();
        lines.push(format!(
            "kurosh t={} rank={} total={}",
            report.t, report.graph_rank, report.total
        ));
        for (z, _) in self.core_zero_reps() {
            let mut parts = Vec::new();
            for side in [Side::Left, Side::Right] {
                let e = self
                    .live_edges_of_zero(z)
                    .into_iter()
                    .find(|&e| self.edges[e].core && self.facs[self.edges[e].fv].side == side);
                match e {
                    None => parts.push(format!("{side}:-")),
                    Some(e) => parts.push(format!(
                        "{side}:f{}",
                        self.facs[self.edges[e].fv].order
                    )),
                }
            }
            lines.push(format!("z{} {}", self.zeros[z].order, parts.join(" ")));
        }
        for (f, side, _, stab) in self.core_factor_data() {
            let factor = self.fp.factor(side);
            let stab_str = match &stab {
                SubgroupDescriptor::Cyclic(k) => format!("cyc:{k}"),
                SubgroupDescriptor::FiniteSubset(v) => format!("set:{v:?}"),
            };
            let mut es: Vec<String> = self
                .live_edges_of_fac(f)
                .into_iter()
                .filter(|&e| self.edges[e].core)
                .map(|e| {
                    format!(
                        "[{}]->z{}",
                        factor.format_elem(&self.edges[e].label),
                        self.zeros[self.edges[e].zv].order
                    )
                })
                .collect();
            es.sort();
            lines.push(format!(
                "f{} {} stab={} {}",
                self.facs[f].order,
                side,
                stab_str,
                es.join(" ")
            ));
        }
        lines
    }

    /// Representatives Cλ of the finitely many cosets outside Ξ: core zero
    /// vertices filtered by directly testing the separation condition.
    pub fn xi_complement(&self) -> Vec<Word> {
        let mut out = Vec::new();
        for (_, rep) in self.core_zero_reps() {
            if !self.xi_condition(&rep) {
                out.push(rep);
            }
        }
        out.sort();
        out
    }

    /// The Ξ condition for a right coset Cλ: some declared generators g, h of
    /// the two factors move the coset and keep all four combinations apart.
    pub fn xi_condition(&self, lambda: &Word) -> bool {
        let gs = self.fp.factor(Side::Left).generators();
        let hs = self.fp.factor(Side::Right).generators();
        for (_, g) in &gs {
            let gw = self.fp.syllable_word(Side::Left, g.clone());
            if self.right_translate_fixes(lambda, &gw) {
                continue;
            }
            for (_, h) in &hs {
                let hw = self.fp.syllable_word(Side::Right, h.clone());
                if self.right_translate_fixes(lambda, &hw) {
                    continue;
                }
                let mut ok = true;
                for eps in [1i64, -1] {
                    for delta in [1i64, -1] {
                        // Cλg^ε = Cλh^δ iff λ g^ε h^{-δ} λ⁻¹ ∈ C
                        let mid = self.fp.mul(&self.fp.pow(&gw, eps), &self.fp.pow(&hw, -delta));
                        let probe = self.fp.mul(&self.fp.mul(lambda, &mid), &self.fp.inv(lambda));
                        if self.membership(&probe) {
                            ok = false;
                        }
                    }
                }
                if ok {
                    return true;
                }
            }
        }
        false
    }

    fn right_translate_fixes(&self, lambda: &Word, g: &Word) -> bool {
        let probe = self.fp.mul(&self.fp.mul(lambda, g), &self.fp.inv(lambda));
        self.membership(&probe)
    }

    /// DOT rendering in canonical order: boxes for left-factor vertices,
    /// diamonds for right, circles for zero vertices, doubled circle at the
    /// base; non-core items dashed.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph quotient {\n");
        let mut zs: Vec<usize> = (0..self.zeros.len()).filter(|&z| self.zeros[z].alive).collect();
        zs.sort_by_key(|&z| (self.zeros[z].order, z));
        let mut fs: Vec<usize> = (0..self.facs.len()).filter(|&f| self.facs[f].alive).collect();
        fs.sort_by_key(|&f| (self.facs[f].order, f));
        for z in &zs {
            let shape = if *z == self.base { "doublecircle" } else { "circle" };
            let style = if self.zeros[*z].core { "solid" } else { "dashed" };
            let label = if self.zeros[*z].order == usize::MAX {
                "?".to_string()
            } else {
                self.fp.display(&self.zeros[*z].rep)
            };
            s.push_str(&format!(
                "  z{z} [shape={shape}, style={style}, label=\"{label}\"];\n"
            ));
        }
        for f in &fs {
            let shape = match self.facs[*f].side {
                Side::Left => "box",
                Side::Right => "diamond",
            };
            let style = if self.facs[*f].core { "solid" } else { "dashed" };
            let stab = if self.facs[*f].stab.is_trivial() { "" } else { "*" };
            let label = if self.facs[*f].order == usize::MAX {
                "?".to_string()
            } else {
                format!("{}{}", self.fp.display(&self.facs[*f].rep), stab)
            };
            s.push_str(&format!(
                "  f{f} [shape={shape}, style={style}, label=\"{label}\"];\n"
            ));
        }
        let mut es: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].alive).collect();
        es.sort_by_key(|&e| {
            (
                self.facs[self.edges[e].fv].order,
                self.zeros[self.edges[e].zv].order,
                e,
            )
        });
        for e in es {
            let ed = &self.edges[e];
            let style = if ed.maxtree {
                "bold"
            } else if ed.transversal {
                "dotted"
            } else if ed.core {
                "solid"
            } else {
                "dashed"
            };
            let label = self.fp.factor(self.facs[ed.fv].side).format_elem(&ed.label);
            s.push_str(&format!(
                "  f{} -- z{} [style={style}, label=\"{label}\"];\n",
                ed.fv, ed.zv
            ));
        }
        s.push_str("}\n");
        s
    }

    /// Full JSON mirror of the graph including lifts and spanning data.
    pub fn to_json(&self) -> serde_json::Value {
        let zeros: Vec<_> = self
            .zeros
            .iter()
            .enumerate()
            .filter(|(_, z)| z.alive)
            .map(|(i, z)| {
                serde_json::json!({
                    "id": i,
                    "rep": if z.order == usize::MAX { serde_json::Value::Null } else { self.fp.display(&z.rep).into() },
                    "core": z.core,
                    "base": i == self.base,
                })
            })
            .collect();
        let facs: Vec<_> = self
            .facs
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive)
            .map(|(i, f)| {
                let stab = match &f.stab {
                    SubgroupDescriptor::Cyclic(k) => serde_json::json!({"kind": "cyclic", "k": k.to_string()}),
                    SubgroupDescriptor::FiniteSubset(v) => serde_json::json!({"kind": "finite-subset", "elems": v}),
                };
                serde_json::json!({
                    "id": i,
                    "side": f.side.to_string(),
                    "rep": if f.order == usize::MAX { serde_json::Value::Null } else { self.fp.display(&f.rep).into() },
                    "stab": stab,
                    "core": f.core,
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.alive)
            .map(|(i, e)| {
                serde_json::json!({
                    "id": i,
                    "factor_vertex": e.fv,
                    "zero_vertex": e.zv,
                    "side": self.facs[e.fv].side.to_string(),
                    "label": self.fp.factor(self.facs[e.fv].side).format_elem(&e.label),
                    "core": e.core,
                    "maxtree": e.maxtree,
                    "transversal": e.transversal,
                    "lift": e.lift.as_ref().map(|w| self.fp.display(w)),
                })
            })
            .collect();
        serde_json::json!({
            "factors": [self.fp.factor(Side::Left).name(), self.fp.factor(Side::Right).name()],
            "generators": self.gens.iter().map(|w| self.fp.display(w)).collect::<Vec<_>>(),
            "base": self.base,
            "zero_vertices": zeros,
            "factor_vertices": facs,
            "edges": edges,
            "kurosh": self.kurosh_rank(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::free_product_zz;
    use crate::factor::FactorGroup;
    use num_bigint::BigInt;

    fn graph_zz(gens: &[&str]) -> QuotientGraph {
        let fp = free_product_zz();
        let ws: Vec<Word> = gens.iter().map(|s| fp.parse(s).unwrap()).collect();
        QuotientGraph::build(&fp, &ws)
    }

    fn z2_z3() -> FreeProduct {
        FreeProduct::new(
            FactorGroup::cyclic("G", 2, "a"),
            FactorGroup::cyclic("H", 3, "b"),
        )
    }

    #[test]
    fn factor_subgroup_full_stab() {
        let g = graph_zz(&["a"]);
        let r = g.kurosh_rank();
        assert_eq!((r.t, r.graph_rank, r.total), (1, 0, 1));
        let facs = g.core_factor_data();
        assert_eq!(facs.len(), 1);
        assert_eq!(facs[0].3, SubgroupDescriptor::Cyclic(BigInt::from(1)));
        // core = base, the vertex, the edge between
        assert_eq!(g.core_zero_reps().len(), 1);
        assert_eq!(g.core_edge_count(), 1);
    }

    #[test]
    fn trivial_subgroup() {
        let g = graph_zz(&[]);
        let r = g.kurosh_rank();
        assert_eq!((r.t, r.graph_rank, r.total), (0, 0, 0));
        assert_eq!(g.core_zero_reps().len(), 1);
        assert!(g.membership(&Word::identity()));
        assert!(!g.membership(&g.free_product().parse("a").unwrap()));
    }

    #[test]
    fn index_two_subgroup_of_f2() {
        let g = graph_zz(&["a^2", "b", "a b a^-1"]);
        let r = g.kurosh_rank();
        assert_eq!((r.t, r.graph_rank, r.total), (3, 0, 3));
        // whole 5-vertex graph is the core
        assert_eq!(g.core_zero_reps().len(), 2);
        assert_eq!(g.core_factor_data().len(), 3);
        assert_eq!(g.core_edge_count(), 4);
        let fp = g.free_product();
        // stabilizers: <a^2> at lift 1, <b> at lift 1, <b> at lift a
        let mut stabs: Vec<(String, String)> = g
            .core_factor_data()
            .iter()
            .map(|(_, side, rep, stab)| {
                (
                    format!("{side}:{}", fp.display(rep)),
                    format!("{stab:?}"),
                )
            })
            .collect();
        stabs.sort();
        assert_eq!(stabs[0].0, "G:1");
        assert!(stabs[0].1.contains("Cyclic(BigInt { sign: Plus, data: BigUint { data: [2] } })") || stabs[0].1.contains("2"));
        assert_eq!(stabs[1].0, "H:1");
        assert_eq!(stabs[2].0, "H:a");
    }

    #[test]
    fn index_two_membership_parity_oracle() {
        let g = graph_zz(&["a^2", "b", "a b a^-1"]);
        let fp = g.free_product().clone();
        let x = fp.standard_symmetric_set();
        // membership iff the a-exponent sum is even
        for w in fp.ball(&x, 6) {
            let mut asum = BigInt::from(0);
            for s in w.syllables() {
                if s.side == Side::Left {
                    if let FactorElem::Int(k) = &s.elem {
                        asum += k;
                    }
                }
            }
            let even = (&asum % 2i32) == BigInt::from(0);
            assert_eq!(g.membership(&w), even, "word {}", fp.display(&w));
        }
        assert!(!g.membership(&fp.parse("a").unwrap()));
        assert!(g.membership(&fp.parse("a^2 b^2").unwrap()));
    }

    #[test]
    fn cyclic_ab_in_z2_z3() {
        let fp = z2_z3();
        let gens = vec![fp.parse("a b").unwrap()];
        let g = QuotientGraph::build(&fp, &gens);
        let r = g.kurosh_rank();
        assert_eq!((r.t, r.graph_rank, r.total), (0, 1, 1));
        // membership against the cyclic listing oracle up to length 12
        let mut listing = vec![Word::identity()];
        for k in 1..=6i64 {
            listing.push(fp.pow(&gens[0], k));
            listing.push(fp.pow(&gens[0], -k));
        }
        let x = fp.standard_symmetric_set();
        for w in fp.ball(&x, 6) {
            assert_eq!(
                g.membership(&w),
                listing.contains(&w),
                "word {}",
                fp.display(&w)
            );
        }
        assert!(g.membership(&fp.pow(&gens[0], 3)));
        assert!(!g.membership(&fp.parse("b a").unwrap()));
        // one transversal edge
        assert_eq!(g.transversal().len(), 1);
        let (_, _, zeta) = g.transversal()[0].clone();
        assert!(g.membership(&zeta));
        assert!(!zeta.is_identity());
    }

    #[test]
    fn stabilizer_oracle_on_index_two() {
        let g = graph_zz(&["a^2", "b", "a b a^-1"]);
        let fp = g.free_product().clone();
        for (_, side, rep, stab) in g.core_factor_data() {
            for k in -6i64..=6 {
                let elem = fp.gen_word(side, k);
                let conj = fp.mul(&fp.mul(&rep, &elem), &fp.inv(&rep));
                let in_stab = match &stab {
                    SubgroupDescriptor::Cyclic(m) => {
                        if m == &BigInt::from(0) {
                            k == 0
                        } else {
                            BigInt::from(k) % m == BigInt::from(0)
                        }
                    }
                    _ => unreachable!(),
                };
                assert_eq!(g.membership(&conj), in_stab);
            }
        }
    }

    #[test]
    fn spanning_tree_counts() {
        let fp = z2_z3();
        let g = QuotientGraph::build(&fp, &[fp.parse("a b").unwrap()]);
        assert_eq!(g.transversal().len(), g.kurosh_rank().graph_rank);
        let g2 = graph_zz(&["a^2", "b", "a b a^-1"]);
        assert_eq!(g2.transversal().len(), 0);
    }

    #[test]
    fn xi_complement_examples() {
        // C = G: only the base coset fails the separation condition
        let g = graph_zz(&["a"]);
        let fp = g.free_product().clone();
        assert_eq!(g.xi_complement(), vec![Word::identity()]);
        // C trivial: complement is empty
        let t = graph_zz(&[]);
        assert!(t.xi_complement().is_empty());
        // every ball element outside the complement satisfies the condition
        let x = fp.standard_symmetric_set();
        for w in fp.ball(&x, 4) {
            let excluded = g
                .xi_complement()
                .iter()
                .any(|rep| g.same_right_coset(&w, rep));
            assert_eq!(!g.xi_condition(&w), excluded, "word {}", fp.display(&w));
        }
    }

    #[test]
    fn folding_confluence_small() {
        // same subgroup, different generators: <a^2, b, aba^-1> = kernel of parity
        let g1 = graph_zz(&["a^2", "b", "a b a^-1"]);
        let g2 = graph_zz(&["b", "a b a^-1", "a^2"]);
        let g3 = graph_zz(&["a^2", "b", "a b^2 a^-1", "a b a^-1"]);
        assert_eq!(g1.core_signature(), g2.core_signature());
        assert_eq!(g1.core_signature(), g3.core_signature());
        // <ab, ab^2> generates everything
        let g4 = graph_zz(&["a b", "a b^2"]);
        let g5 = graph_zz(&["a", "b"]);
        assert_eq!(g4.core_signature(), g5.core_signature());
    }

    #[test]
    fn dot_and_json_are_stable() {
        let g = graph_zz(&["a^2", "b", "a b a^-1"]);
        let d1 = g.to_dot();
        let g2 = graph_zz(&["a^2", "b", "a b a^-1"]);
        assert_eq!(d1, g2.to_dot());
        assert!(d1.contains("doublecircle"));
        let j = g.to_json();
        assert_eq!(j["kurosh"]["total"], 3);
    }
}
