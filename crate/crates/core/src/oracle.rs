//! Exact searches on small instances: square Hamilton cycles and paths,
//! copy counts and packings of squared paths, and 2-universality.

use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::powers::{enumerate_maxdeg2, verify_square_cycle, verify_square_path, MaxDeg2Graph};
use crate::report::{Budget, Search};

/// Largest order for which [`is_2_universal`] runs exhaustively.
pub const UNIVERSALITY_CAP: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("end tuples must be disjoint")]
    TuplesOverlap,
    #[error("end tuple vertex {0} not in the cover set")]
    OutsideCover(usize),
    #[error("k must be at least {0}")]
    BadK(usize),
    #[error("graph has {0} vertices, exhaustive mode supports at most {1}")]
    TooLarge(usize, usize),
}

struct CycleSearch<'a> {
    g: &'a Graph,
    n: usize,
    order: Vec<usize>,
    unplaced: VertexSet,
    budget: &'a mut Budget,
}

impl CycleSearch<'_> {
    // Every unplaced vertex needs four neighbours among the vertices that can
    // still be adjacent to it in the cycle.
    fn feasible(&self) -> bool {
        let i = self.order.len();
        let mut pool = self.unplaced.clone();
        for &v in &[self.order[0], self.order[1.min(i - 1)], self.order[i - 1], self.order[i.saturating_sub(2)]] {
            pool.insert(v);
        }
        self.unplaced.iter().all(|u| self.g.count_into(u, &pool) >= 4)
    }

    fn rec(&mut self) -> Option<bool> {
        let i = self.order.len();
        if i == self.n {
            return Some(true);
        }
        let mut cand = self.unplaced.clone();
        cand.and_words(self.g.row(self.order[i - 1]));
        if i >= 2 {
            cand.and_words(self.g.row(self.order[i - 2]));
        }
        let v0 = self.order[0];
        if i == self.n - 2 {
            cand.and_words(self.g.row(v0));
        }
        if i == self.n - 1 {
            cand.and_words(self.g.row(v0));
            cand.and_words(self.g.row(self.order[1]));
        }
        for c in cand.iter() {
            // Reflection symmetry: the last vertex has a larger id than the second.
            if i == self.n - 1 && c < self.order[1] {
                continue;
            }
            if !self.budget.tick() {
                return None;
            }
            self.order.push(c);
            self.unplaced.remove(c);
            if self.order.len() == self.n || self.feasible() {
                match self.rec() {
                    Some(true) => return Some(true),
                    None => return None,
                    Some(false) => {}
                }
            }
            self.order.pop();
            self.unplaced.insert(c);
        }
        Some(false)
    }
}

/// Backtracking search for an ordering whose square is contained in `g`.
///
/// The minimum-degree vertex is placed first, each next vertex is drawn from
/// the common neighbourhood of the previous two, and reflections are broken by
/// requiring the last vertex to have a larger id than the second.
pub fn find_square_ham_cycle(g: &Graph, budget: &mut Budget) -> Search<Vec<usize>> {
    let n = g.n();
    if n < 3 {
        return Search::Absent;
    }
    if n <= 5 {
        return if g.edge_count() == n * (n - 1) / 2 { Search::Found((0..n).collect()) } else { Search::Absent };
    }
    if g.min_degree() < 4 {
        return Search::Absent;
    }
    let v0 = (0..n).min_by_key(|&v| g.degree(v)).expect("n > 0");
    let mut unplaced = VertexSet::full(n);
    unplaced.remove(v0);
    let mut s = CycleSearch { g, n, order: vec![v0], unplaced, budget };
    match s.rec() {
        Some(true) => {
            debug_assert!(verify_square_cycle(g, &s.order).unwrap_or(false));
            Search::Found(s.order)
        }
        Some(false) => Search::Absent,
        None => Search::BudgetExhausted,
    }
}

struct PathSearch<'a> {
    g: &'a Graph,
    k: usize,
    right: (usize, usize),
    relax: bool,
    seq: Vec<usize>,
    unplaced: VertexSet,
    budget: &'a mut Budget,
}

impl PathSearch<'_> {
    fn feasible(&self) -> bool {
        let i = self.seq.len();
        let mut pool = self.unplaced.clone();
        pool.insert(self.seq[i - 1]);
        pool.insert(self.seq[i - 2]);
        self.unplaced.iter().filter(|&u| u != self.right.0 && u != self.right.1).all(|u| self.g.count_into(u, &pool) >= 4)
    }

    fn rec(&mut self) -> Option<bool> {
        let i = self.seq.len();
        if i == self.k {
            return Some(true);
        }
        let (a, b) = (self.seq[i - 1], self.seq[i - 2]);
        let mut cand = self.unplaced.clone();
        if i == self.k - 2 {
            cand = VertexSet::from_iter(self.g.n(), [self.right.0]);
        } else if i == self.k - 1 {
            cand = VertexSet::from_iter(self.g.n(), [self.right.1]);
        } else {
            cand.remove(self.right.0);
            cand.remove(self.right.1);
        }
        let exempt_last = self.relax && i == self.k - 1;
        if !exempt_last {
            cand.and_words(self.g.row(a));
        }
        cand.and_words(self.g.row(b));
        for c in cand.iter() {
            if !self.budget.tick() {
                return None;
            }
            self.seq.push(c);
            self.unplaced.remove(c);
            if self.seq.len() == self.k || self.feasible() {
                match self.rec() {
                    Some(true) => return Some(true),
                    None => return None,
                    Some(false) => {}
                }
            }
            self.seq.pop();
            self.unplaced.insert(c);
        }
        Some(false)
    }
}

/// Square of a Hamilton path of `g[cover]` starting with `left = (v2, v1)` and
/// ending with `right = (v_{k-1}, v_k)`.
pub fn find_square_path(
    g: &Graph,
    left: (usize, usize),
    right: (usize, usize),
    cover: &VertexSet,
    relax_end_edges: bool,
    budget: &mut Budget,
) -> Result<Search<Vec<usize>>, OracleError> {
    let ends = [left.0, left.1, right.0, right.1];
    for (i, &x) in ends.iter().enumerate() {
        if ends[i + 1..].contains(&x) {
            return Err(OracleError::TuplesOverlap);
        }
        if !cover.contains(x) {
            return Err(OracleError::OutsideCover(x));
        }
    }
    if !relax_end_edges && !g.has_edge(left.0, left.1) {
        return Ok(Search::Absent);
    }
    let k = cover.len();
    let mut unplaced = cover.clone();
    unplaced.remove(left.0);
    unplaced.remove(left.1);
    let mut s = PathSearch { g, k, right, relax: relax_end_edges, seq: vec![left.1, left.0], unplaced, budget };
    Ok(match s.rec() {
        Some(true) => {
            debug_assert!(verify_square_path(g, &s.seq, relax_end_edges).unwrap_or(false));
            Search::Found(s.seq)
        }
        Some(false) => Search::Absent,
        None => Search::BudgetExhausted,
    })
}

/// Order of the automorphism group of `P_k^2`.
pub fn pk2_automorphisms(k: usize) -> u64 {
    match k {
        0 | 1 => 1,
        2 => 2,
        3 => 6,
        4 => 4,
        _ => 2,
    }
}

/// Calls `f` on every labelled copy `v1..vk` of `P_k^2` inside `within`.
/// Returning false from `f` stops the walk.
pub fn for_each_labeled_pk2(g: &Graph, k: usize, within: &VertexSet, mut f: impl FnMut(&[usize]) -> bool) {
    fn rec(g: &Graph, k: usize, seq: &mut Vec<usize>, free: &mut VertexSet, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let i = seq.len();
        if i == k {
            return f(seq);
        }
        let mut cand = free.clone();
        if i >= 1 {
            cand.and_words(g.row(seq[i - 1]));
        }
        if i >= 2 {
            cand.and_words(g.row(seq[i - 2]));
        }
        for c in cand.iter() {
            seq.push(c);
            free.remove(c);
            let go_on = rec(g, k, seq, free, f);
            free.insert(c);
            seq.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    if k == 0 {
        return;
    }
    let mut free = within.clone();
    rec(g, k, &mut Vec::with_capacity(k), &mut free, &mut f);
}

/// Unlabelled copies of `P_k^2` with every vertex in `within`.
pub fn count_pk2_copies(g: &Graph, k: usize, within: &VertexSet) -> Result<u64, OracleError> {
    if k < 2 {
        return Err(OracleError::BadK(2));
    }
    if k == 2 {
        return Ok(g.edges_within(within) as u64);
    }
    let mut labeled = 0u64;
    for_each_labeled_pk2(g, k, within, |_| {
        labeled += 1;
        true
    });
    let aut = pk2_automorphisms(k);
    debug_assert_eq!(labeled % aut, 0);
    Ok(labeled / aut)
}

/// Distinct vertex sets spanning at least one `P_k^2` inside `within`, as sorted lists.
pub fn pk2_vertex_sets(g: &Graph, k: usize, within: &VertexSet) -> Vec<Vec<usize>> {
    let mut sets = std::collections::BTreeSet::new();
    for_each_labeled_pk2(g, k, within, |seq| {
        let mut s = seq.to_vec();
        s.sort_unstable();
        sets.insert(s);
        true
    });
    sets.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub count: usize,
    /// False when the budget ran out; `count` is then only a lower bound.
    pub exact: bool,
    pub copies: Vec<Vec<usize>>,
}

/// Maximum number of vertex-disjoint copies of `P_k^2` inside `within`.
pub fn max_disjoint_pk2_packing(g: &Graph, k: usize, within: &VertexSet, budget: &mut Budget) -> Result<Packing, OracleError> {
    if k < 2 {
        return Err(OracleError::BadK(2));
    }
    let sets = pk2_vertex_sets(g, k, within);
    let n = g.n();
    let masks: Vec<VertexSet> = sets.iter().map(|s| VertexSet::from_iter(n, s.iter().copied())).collect();
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in sets.iter().enumerate() {
        for &v in s {
            by_vertex[v].push(i);
        }
    }
    let mut usable = VertexSet::empty(n);
    for s in &sets {
        for &v in s {
            usable.insert(v);
        }
    }

    struct Bb<'a> {
        k: usize,
        masks: &'a [VertexSet],
        by_vertex: &'a [Vec<usize>],
        best: Vec<usize>,
        cur: Vec<usize>,
        budget: &'a mut Budget,
        aborted: bool,
    }
    impl Bb<'_> {
        fn rec(&mut self, usable: &mut VertexSet) {
            if self.aborted {
                return;
            }
            if self.cur.len() + usable.len() / self.k <= self.best.len() {
                return;
            }
            if !self.budget.tick() {
                self.aborted = true;
                return;
            }
            let v = match usable.first() {
                Some(v) => v,
                None => {
                    if self.cur.len() > self.best.len() {
                        self.best = self.cur.clone();
                    }
                    return;
                }
            };
            for &ci in &self.by_vertex[v] {
                let m = &self.masks[ci];
                if m.is_subset(usable) {
                    let mut next = usable.difference(m);
                    self.cur.push(ci);
                    if self.cur.len() > self.best.len() {
                        self.best = self.cur.clone();
                    }
                    self.rec(&mut next);
                    self.cur.pop();
                }
            }
            usable.remove(v);
            self.rec(usable);
            usable.insert(v);
        }
    }
    let mut bb = Bb { k, masks: &masks, by_vertex: &by_vertex, best: Vec::new(), cur: Vec::new(), budget, aborted: false };
    bb.rec(&mut usable);
    let copies: Vec<Vec<usize>> = bb.best.iter().map(|&i| sets[i].clone()).collect();
    Ok(Packing { count: copies.len(), exact: !bb.aborted, copies })
}

/// Injective map of `pattern` into `host` preserving edges, by backtracking in
/// vertex-id order of the pattern.
pub fn find_embedding(pattern: &Graph, host: &Graph, budget: &mut Budget) -> Search<Vec<usize>> {
    let pn = pattern.n();
    if pn > host.n() {
        return Search::Absent;
    }
    let back: Vec<Vec<usize>> = (0..pn).map(|v| pattern.neighbors(v).filter(|&u| u < v).collect()).collect();
    let pdeg: Vec<usize> = (0..pn).map(|v| pattern.degree(v)).collect();
    let hdeg: Vec<usize> = (0..host.n()).map(|v| host.degree(v)).collect();
    let mut map = Vec::with_capacity(pn);
    let mut free = VertexSet::full(host.n());

    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        host: &Graph,
        back: &[Vec<usize>],
        pdeg: &[usize],
        hdeg: &[usize],
        map: &mut Vec<usize>,
        free: &mut VertexSet,
        budget: &mut Budget,
    ) -> Option<bool> {
        if i == back.len() {
            return Some(true);
        }
        let mut cand = free.clone();
        for &u in &back[i] {
            cand.and_words(host.row(map[u]));
        }
        for c in cand.iter() {
            if hdeg[c] < pdeg[i] {
                continue;
            }
            if !budget.tick() {
                return None;
            }
            map.push(c);
            free.remove(c);
            match rec(i + 1, host, back, pdeg, hdeg, map, free, budget) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            free.insert(c);
            map.pop();
        }
        Some(false)
    }
    match rec(0, host, &back, &pdeg, &hdeg, &mut map, &mut free, budget) {
        Some(true) => Search::Found(map),
        Some(false) => Search::Absent,
        None => Search::BudgetExhausted,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Universality {
    Universal,
    Missing(MaxDeg2Graph),
    BudgetExhausted,
}

/// Whether every max-degree-two graph on `g.n()` vertices embeds into `g`.
pub fn is_2_universal(g: &Graph, budget: &mut Budget) -> Result<Universality, OracleError> {
    let n = g.n();
    if n > UNIVERSALITY_CAP {
        return Err(OracleError::TooLarge(n, UNIVERSALITY_CAP));
    }
    for h in enumerate_maxdeg2(n).expect("n under cap") {
        match find_embedding(&h.to_graph(), g, budget) {
            Search::Found(_) => {}
            Search::Absent => return Ok(Universality::Missing(h)),
            Search::BudgetExhausted => return Ok(Universality::BudgetExhausted),
        }
    }
    Ok(Universality::Universal)
}
