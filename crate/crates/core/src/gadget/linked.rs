//! Randomized search for chains of squared paths inside a sampled graph.
//!
//! A [`LinkedSquares`] request lists segments of per-position candidate sets.
//! A realization picks pairwise distinct vertices so that every segment spans
//! the square of a path and, where `linked[i]` is set, the last vertex of
//! segment `i` is adjacent to the first vertex of segment `i + 1`.
//!
//! A [`HubTemplate`] is a square path in which some positions are pinned to
//! given hub vertices. Hub-incident edges are checked in a hub graph and folded
//! into the candidate sets, which reduces the rest to a linked-squares request.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::graph::{Graph, VertexSet};
use crate::report::Budget;
use crate::seed::Rng;

#[derive(Clone, Debug)]
pub struct LinkedSquares {
    pub segments: Vec<Vec<VertexSet>>,
    pub linked: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum LinkedOutcome<T> {
    Found(T),
    AbsentInSample,
    BudgetExhausted,
}

impl<T> LinkedOutcome<T> {
    pub fn found(self) -> Option<T> {
        match self {
            LinkedOutcome::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, LinkedOutcome::Found(_))
    }
}

pub type Accept<'a> = &'a dyn Fn(&[usize]) -> bool;

struct Dfs<'a> {
    g: &'a Graph,
    sets: Vec<&'a VertexSet>,
    // For each flat position, earlier positions it must be adjacent to.
    back: Vec<Vec<usize>>,
    seq: Vec<usize>,
    used: VertexSet,
    rng: &'a mut Rng,
    budget: &'a mut Budget,
    accept: Option<Accept<'a>>,
}

impl Dfs<'_> {
    fn rec(&mut self) -> Option<bool> {
        let i = self.seq.len();
        if i == self.sets.len() {
            return Some(self.accept.map_or(true, |f| f(&self.seq)));
        }
        let mut cand = self.sets[i].difference(&self.used);
        for &j in &self.back[i] {
            cand.and_words(self.g.row(self.seq[j]));
        }
        let mut list = cand.to_vec();
        list.shuffle(self.rng);
        for c in list {
            if !self.budget.tick() {
                return None;
            }
            self.seq.push(c);
            self.used.insert(c);
            match self.rec() {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            self.used.remove(c);
            self.seq.pop();
        }
        Some(false)
    }
}

/// Realizes `query` in `sampled`, trying candidates in a seeded random order.
/// `accept` can reject complete realizations. `AbsentInSample` means the whole
/// candidate space was exhausted for this sample.
pub fn find_linked_squares(
    query: &LinkedSquares,
    sampled: &Graph,
    rng: &mut Rng,
    budget: &mut Budget,
    accept: Option<Accept<'_>>,
) -> LinkedOutcome<Vec<Vec<usize>>> {
    let mut sets = Vec::new();
    let mut back = Vec::new();
    let mut bounds = Vec::new();
    for (si, seg) in query.segments.iter().enumerate() {
        let start = sets.len();
        for (j, s) in seg.iter().enumerate() {
            let pos = start + j;
            let mut b = Vec::new();
            if j >= 1 {
                b.push(pos - 1);
            }
            if j >= 2 {
                b.push(pos - 2);
            }
            if j == 0 && si > 0 && query.linked.get(si - 1).copied().unwrap_or(false) && start > 0 {
                b.push(start - 1);
            }
            sets.push(s);
            back.push(b);
        }
        bounds.push((start, sets.len()));
    }
    if sets.is_empty() {
        return LinkedOutcome::Found(vec![Vec::new(); query.segments.len()]);
    }
    let mut dfs = Dfs { g: sampled, sets, back, seq: Vec::new(), used: VertexSet::empty(sampled.n()), rng, budget, accept };
    match dfs.rec() {
        Some(true) => LinkedOutcome::Found(bounds.iter().map(|&(a, b)| dfs.seq[a..b].to_vec()).collect()),
        Some(false) => LinkedOutcome::AbsentInSample,
        None => LinkedOutcome::BudgetExhausted,
    }
}

#[derive(Clone, Debug)]
pub enum Slot {
    Hub(usize),
    Free(VertexSet),
}

#[derive(Clone, Debug)]
pub struct HubTemplate {
    pub slots: Vec<Slot>,
}

impl HubTemplate {
    /// Free segments of equal candidate set around the given hubs:
    /// `free_runs[0], hubs[0], free_runs[1], ..., hubs[h-1], free_runs[h]`.
    pub fn alternating(free_runs: &[usize], hubs: &[usize], free: &VertexSet) -> Self {
        assert_eq!(free_runs.len(), hubs.len() + 1);
        let mut slots = Vec::new();
        for (i, &r) in free_runs.iter().enumerate() {
            slots.extend(std::iter::repeat_with(|| Slot::Free(free.clone())).take(r));
            if i < hubs.len() {
                slots.push(Slot::Hub(hubs[i]));
            }
        }
        HubTemplate { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Fills the free slots of `t`. Hub–hub and hub–free pairs at distance at most
/// two must be edges of `hub_graph`; free–free pairs must be edges of `free_graph`.
pub fn realize_hub_template(
    t: &HubTemplate,
    hub_graph: &Graph,
    free_graph: &Graph,
    rng: &mut Rng,
    budget: &mut Budget,
) -> LinkedOutcome<Vec<usize>> {
    let n = hub_graph.n();
    let len = t.slots.len();
    let hubs: Vec<(usize, usize)> =
        t.slots.iter().enumerate().filter_map(|(i, s)| if let Slot::Hub(v) = s { Some((i, *v)) } else { None }).collect();
    let mut hub_set = VertexSet::empty(n);
    for &(_, v) in &hubs {
        if !hub_set.insert(v) {
            return LinkedOutcome::AbsentInSample;
        }
    }
    for (x, &(i, u)) in hubs.iter().enumerate() {
        for &(j, v) in &hubs[x + 1..] {
            if j - i <= 2 && !hub_graph.has_edge(u, v) {
                return LinkedOutcome::AbsentInSample;
            }
        }
    }
    let mut segments: Vec<Vec<VertexSet>> = Vec::new();
    let mut seg_pos: Vec<Vec<usize>> = Vec::new();
    let mut linked = Vec::new();
    let mut last_free_end: Option<usize> = None;
    for i in 0..len {
        if let Slot::Free(s) = &t.slots[i] {
            let mut c = s.difference(&hub_set);
            for &(j, v) in &hubs {
                if i.abs_diff(j) <= 2 {
                    c.and_words(hub_graph.row(v));
                }
            }
            if c.is_empty() {
                return LinkedOutcome::AbsentInSample;
            }
            let continues = last_free_end == Some(i.wrapping_sub(1));
            if !continues {
                if let Some(prev) = last_free_end {
                    linked.push(i - prev == 2);
                }
                segments.push(Vec::new());
                seg_pos.push(Vec::new());
            }
            segments.last_mut().expect("pushed").push(c);
            seg_pos.last_mut().expect("pushed").push(i);
            last_free_end = Some(i);
        }
    }
    let query = LinkedSquares { segments, linked };
    match find_linked_squares(&query, free_graph, rng, budget, None) {
        LinkedOutcome::Found(segs) => {
            let mut seq = vec![usize::MAX; len];
            for &(i, v) in &hubs {
                seq[i] = v;
            }
            for (seg, pos) in segs.iter().zip(&seg_pos) {
                for (&v, &i) in seg.iter().zip(pos) {
                    seq[i] = v;
                }
            }
            LinkedOutcome::Found(seq)
        }
        LinkedOutcome::AbsentInSample => LinkedOutcome::AbsentInSample,
        LinkedOutcome::BudgetExhausted => LinkedOutcome::BudgetExhausted,
    }
}
