//! Vertex-disjoint copies of `P_k^2` covering a vertex set.
//!
//! Randomized greedy packing, then a walk that places a copy through an
//! uncovered vertex and evicts the one existing copy it overlaps. Sets of at
//! most [`EXACT_LIMIT`] vertices are solved exhaustively.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::graph::{Graph, VertexSet};
use crate::powers::verify_square_path;
use crate::report::{Budget, StageReport};
use crate::seed::Rng;

pub const EXACT_LIMIT: usize = 24;
const STAGE: &str = "pk2_factor";
const CANDIDATE_CAP: usize = 24;

struct Enum<'a> {
    g: &'a Graph,
    within: &'a VertexSet,
    k: usize,
    owner: &'a [Option<usize>],
    max_conflicts: usize,
    seq: Vec<usize>,
    chosen: VertexSet,
    conflict: Option<usize>,
    order: Vec<usize>,
    out: Vec<(Vec<usize>, Option<usize>)>,
    cap: usize,
}

impl Enum<'_> {
    // Fills positions in `order`: the anchor, then rightwards, then leftwards.
    fn rec(&mut self, step: usize, rng: &mut Rng, budget: &mut Budget) -> bool {
        if step == self.k {
            self.out.push((self.seq.clone(), self.conflict));
            return self.out.len() < self.cap;
        }
        let pos = self.order[step];
        let anchor = self.order[0];
        let mut cand = self.within.difference(&self.chosen);
        let near: Vec<usize> = if pos > anchor {
            (pos.saturating_sub(2)..pos).filter(|&q| q >= anchor).collect()
        } else {
            (pos + 1..(pos + 3).min(self.k)).collect()
        };
        for q in near {
            cand.and_words(self.g.row(self.seq[q]));
        }
        let mut list = cand.to_vec();
        list.shuffle(rng);
        for c in list {
            if !budget.tick() {
                return false;
            }
            let prev = self.conflict;
            match self.owner[c] {
                None => {}
                Some(o) if Some(o) == self.conflict => {}
                Some(o) => {
                    if self.conflict.is_some() || self.max_conflicts == 0 {
                        continue;
                    }
                    self.conflict = Some(o);
                }
            }
            self.seq[pos] = c;
            self.chosen.insert(c);
            let go_on = self.rec(step + 1, rng, budget);
            self.chosen.remove(c);
            self.conflict = prev;
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Copies through `v` inside `within`, touching at most `max_conflicts` (0 or 1)
/// existing copies, up to `cap` of them.
fn copies_through(
    g: &Graph,
    within: &VertexSet,
    k: usize,
    v: usize,
    owner: &[Option<usize>],
    max_conflicts: usize,
    cap: usize,
    rng: &mut Rng,
    budget: &mut Budget,
) -> Vec<(Vec<usize>, Option<usize>)> {
    let mut anchors: Vec<usize> = (0..k).collect();
    anchors.shuffle(rng);
    let mut e = Enum {
        g,
        within,
        k,
        owner,
        max_conflicts,
        seq: vec![usize::MAX; k],
        chosen: VertexSet::empty(g.n()),
        conflict: None,
        order: Vec::new(),
        out: Vec::new(),
        cap,
    };
    for j in anchors {
        e.order = std::iter::once(j).chain(j + 1..k).chain((0..j).rev()).collect();
        e.seq[j] = v;
        e.chosen.insert(v);
        let go_on = e.rec(1, rng, budget);
        e.chosen.remove(v);
        if !go_on {
            break;
        }
    }
    e.out
}

fn exact(g: &Graph, within: &VertexSet, k: usize, budget: &mut Budget) -> Option<Option<Vec<Vec<usize>>>> {
    let verts = within.to_vec();
    let none = vec![None; g.n()];
    let mut failed: HashSet<u32> = HashSet::new();
    let mut rng = crate::seed::Seed(0).rng();
    fn go(
        g: &Graph,
        verts: &[usize],
        k: usize,
        mask: u32,
        none: &[Option<usize>],
        failed: &mut HashSet<u32>,
        rng: &mut Rng,
        budget: &mut Budget,
        acc: &mut Vec<Vec<usize>>,
    ) -> Option<bool> {
        let full = (1u32 << verts.len()) - 1;
        if mask == full {
            return Some(true);
        }
        if failed.contains(&mask) {
            return Some(false);
        }
        let first = (!mask).trailing_zeros() as usize;
        let rest = VertexSet::from_iter(g.n(), (0..verts.len()).filter(|&i| mask >> i & 1 == 0).map(|i| verts[i]));
        let cs = copies_through(g, &rest, k, verts[first], none, 0, usize::MAX, rng, budget);
        if budget.exhausted() {
            return None;
        }
        for (c, _) in cs {
            let mut m = mask;
            for &u in &c {
                m |= 1 << verts.binary_search(&u).expect("within");
            }
            acc.push(c);
            match go(g, verts, k, m, none, failed, rng, budget, acc)? {
                true => return Some(true),
                false => {
                    acc.pop();
                }
            }
        }
        failed.insert(mask);
        Some(false)
    }
    let mut acc = Vec::new();
    let r = go(g, &verts, k, 0, &none, &mut failed, &mut rng, budget, &mut acc)?;
    Some(r.then_some(acc))
}

/// Covers `within` by disjoint copies of `P_k^2` in `g`, each returned in
/// square-path order.
pub fn find_pk2_factor(
    g: &Graph,
    within: &VertexSet,
    k: usize,
    rng: &mut Rng,
    budget: &mut Budget,
) -> Result<Vec<Vec<usize>>, StageReport> {
    if k == 0 {
        return Err(StageReport::failed(STAGE, "k must be positive"));
    }
    if within.len() % k != 0 {
        return Err(StageReport::failed(STAGE, "precondition: set size not divisible by k").stat("size", within.len() as f64));
    }
    if within.is_empty() {
        return Ok(Vec::new());
    }
    if k == 1 {
        return Ok(within.iter().map(|v| vec![v]).collect());
    }
    if within.len() <= EXACT_LIMIT {
        return match exact(g, within, k, budget) {
            Some(Some(f)) => Ok(f),
            Some(None) => Err(StageReport::failed(STAGE, "no factor exists in the sample").stat("exhaustive", 1.0)),
            None => Err(StageReport::failed(STAGE, "search budget exhausted").stat("exhaustive", 1.0)),
        };
    }
    let n = g.n();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut copies: Vec<Option<Vec<usize>>> = Vec::new();
    let mut uncovered = within.clone();
    let mut order = within.to_vec();
    order.shuffle(rng);
    for v in order {
        if owner[v].is_some() {
            continue;
        }
        let free = within.difference(&VertexSet::from_iter(n, (0..n).filter(|&u| owner[u].is_some())));
        if let Some((c, _)) = copies_through(g, &free, k, v, &owner, 0, 1, rng, budget).pop() {
            for &u in &c {
                owner[u] = Some(copies.len());
                uncovered.remove(u);
            }
            copies.push(Some(c));
        }
    }
    let mut steps = 0u64;
    while !uncovered.is_empty() {
        if budget.exhausted() {
            let left = uncovered.len();
            return Err(StageReport::failed(STAGE, "search budget exhausted")
                .stat("uncovered", left as f64)
                .stat("walk_steps", steps as f64));
        }
        steps += 1;
        let v = uncovered.nth(rng.random_range(0..uncovered.len())).expect("nonempty");
        let cands = copies_through(g, within, k, v, &owner, 1, CANDIDATE_CAP, rng, budget);
        if cands.is_empty() {
            if within.iter().all(|u| g.count_into(u, within) == 0) || g.count_into(v, within) == 0 {
                return Err(StageReport::failed(STAGE, "a vertex lies in no copy").stat("uncovered", uncovered.len() as f64));
            }
            continue;
        }
        let pick = cands.iter().find(|(_, c)| c.is_none()).cloned().unwrap_or_else(|| cands[rng.random_range(0..cands.len())].clone());
        let (c, conflict) = pick;
        if let Some(o) = conflict {
            for &u in copies[o].take().expect("live copy").iter() {
                owner[u] = None;
                uncovered.insert(u);
            }
        }
        let id = copies.len();
        for &u in &c {
            owner[u] = Some(id);
            uncovered.remove(u);
        }
        copies.push(Some(c));
    }
    let out: Vec<Vec<usize>> = copies.into_iter().flatten().collect();
    for c in &out {
        assert!(verify_square_path(g, c, false).expect("length"), "factor copy fails verification");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gnp;
    use crate::seed::Seed;

    fn check(g: &Graph, within: &VertexSet, k: usize, f: &[Vec<usize>]) {
        let mut seen = VertexSet::empty(g.n());
        for c in f {
            assert_eq!(c.len(), k);
            assert!(verify_square_path(g, c, false).unwrap());
            for &v in c {
                assert!(within.contains(v));
                assert!(seen.insert(v));
            }
        }
        assert_eq!(&seen, within);
    }

    #[test]
    fn two_triangles() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let all = VertexSet::full(6);
        let f = find_pk2_factor(&g, &all, 3, &mut Seed(0).rng(), &mut Budget::unlimited()).unwrap();
        assert_eq!(f.len(), 2);
        check(&g, &all, 3, &f);
    }

    #[test]
    fn indivisible_is_rejected() {
        let g = Graph::complete(7);
        let err = find_pk2_factor(&g, &VertexSet::full(7), 3, &mut Seed(0).rng(), &mut Budget::unlimited()).unwrap_err();
        assert!(err.unmet.unwrap().contains("divisible"));
    }

    #[test]
    fn exact_mode_detects_absence() {
        // A path on 6 vertices has a perfect matching but no triangle factor.
        let g = Graph::from_edges(6, (0..5).map(|i| (i, i + 1)));
        let all = VertexSet::full(6);
        assert_eq!(find_pk2_factor(&g, &all, 2, &mut Seed(0).rng(), &mut Budget::unlimited()).unwrap().len(), 3);
        let err = find_pk2_factor(&g, &all, 3, &mut Seed(0).rng(), &mut Budget::unlimited()).unwrap_err();
        assert_eq!(err.stats["exhaustive"], 1.0);
    }

    #[test]
    fn walk_fixes_greedy_dead_ends() {
        // Long path: greedy matchings usually strand vertices, eviction repairs them.
        let n = 200;
        let g = Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)));
        let all = VertexSet::full(n);
        for s in 0..5 {
            let f = find_pk2_factor(&g, &all, 2, &mut Seed(s).rng(), &mut Budget::new(1 << 26)).unwrap();
            check(&g, &all, 2, &f);
        }
    }

    #[test]
    fn random_graph_factors() {
        for (k, p) in [(2, 0.05), (3, 0.25), (4, 0.45)] {
            let n = 120;
            let g = gnp(n, p, Seed(k as u64)).unwrap();
            let all = VertexSet::full(n);
            let f = find_pk2_factor(&g, &all, k, &mut Seed(1).rng(), &mut Budget::new(1 << 26)).unwrap();
            check(&g, &all, k, &f);
        }
    }

    #[test]
    fn exact_matches_brute_force_on_small_sets() {
        for s in 0..40 {
            let n = 9;
            let g = gnp(n, 0.5, Seed(s)).unwrap();
            let all = VertexSet::full(n);
            let got = find_pk2_factor(&g, &all, 3, &mut Seed(s).rng(), &mut Budget::unlimited());
            // Brute force over all orderings in triples.
            let mut exists = false;
            let mut perm: Vec<usize> = (0..n).collect();
            permute(&mut perm, 0, &mut |p| {
                if p.chunks(3).all(|c| verify_square_path(&g, c, false).unwrap()) {
                    exists = true;
                }
            });
            assert_eq!(got.is_ok(), exists, "seed {s}");
        }
    }

    fn permute(v: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
        if i == v.len() {
            f(v);
            return;
        }
        for j in i..v.len() {
            v.swap(i, j);
            permute(v, i + 1, f);
            v.swap(i, j);
        }
    }
}
