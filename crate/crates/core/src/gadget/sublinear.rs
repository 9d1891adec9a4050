//! Many disjoint squared paths on `k + 1` vertices in a graph of sublinear
//! minimum degree plus a random graph.
//!
//! Below the degree cutoff the copies come from the random graph alone. Above
//! it the deterministic graph is split by a locally maximal cut `(A, B)`; each
//! copy takes one hub in `A` and fills its neighbourhood in `B` with random edges.

use serde::Serialize;

use crate::gadget::linked::{find_linked_squares, realize_hub_template, HubTemplate, LinkedOutcome, LinkedSquares, Slot};
use crate::graph::{Graph, VertexSet};
use crate::report::{Budget, StageReport};
use crate::seed::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Auto,
    PureRandom,
    Hub,
}

#[derive(Clone, Debug, Serialize)]
pub struct SublinearCopies {
    pub copies: Vec<Vec<usize>>,
    pub regime: Regime,
    pub min_degree: usize,
    pub cutoff: f64,
}

/// Copies needed for `t` rounds at minimum degree `m`.
pub fn lemma_count(t: usize, m: usize) -> usize {
    t * m + t
}

/// Degree below which the pure-random regime is used: `(ln n)^{2/(2k-3)} n^{(2k-4)/(2k-3)}`.
pub fn regime_cutoff(n: usize, k: usize) -> f64 {
    let n = n.max(2) as f64;
    let e = (2 * k - 3) as f64;
    n.ln().powf(2.0 / e) * n.powf((2 * k - 4) as f64 / e)
}

/// Single-vertex moves until every vertex of `within` has at least half its
/// `within`-degree across the cut. Returns `(A, B)` with `|B| >= |A|`.
pub fn locally_max_cut(g: &Graph, within: &VertexSet, rng: &mut Rng) -> (VertexSet, VertexSet) {
    use rand::Rng as _;
    let n = g.n();
    let mut side = VertexSet::empty(n);
    for v in within.iter() {
        if rng.random_bool(0.5) {
            side.insert(v);
        }
    }
    loop {
        let mut moved = false;
        for v in within.iter() {
            let d = g.count_into(v, within);
            let same = if side.contains(v) { g.count_into(v, &side) } else { d - g.count_into(v, &side) };
            if 2 * same > d {
                if side.contains(v) {
                    side.remove(v);
                } else {
                    side.insert(v);
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let other = within.difference(&side);
    if side.len() > other.len() {
        (other, side)
    } else {
        (side, other)
    }
}

/// Hub position and free-run lengths around it for a copy on `k + 1` vertices.
fn hub_layout(k: usize) -> (usize, usize) {
    match k {
        2 | 3 => (1, k - 1),
        _ => (2, k - 2),
    }
}

/// Finds `count` disjoint copies of the square of a path on `k + 1` vertices in
/// `det ∪ random` restricted to `within`.
pub fn find_sublinear_square_paths(
    det: &Graph,
    random: &Graph,
    within: &VertexSet,
    k: usize,
    count: usize,
    regime: Regime,
    rng: &mut Rng,
    budget: &mut Budget,
) -> Result<SublinearCopies, StageReport> {
    const STAGE: &str = "sublinear_square_paths";
    if k < 2 {
        return Err(StageReport::failed(STAGE, "k must be at least 2"));
    }
    let min_degree = within.iter().map(|v| det.count_into(v, within)).min().unwrap_or(0);
    let cutoff = regime_cutoff(within.len(), k);
    let chosen = match regime {
        Regime::Auto if (min_degree as f64) <= cutoff => Regime::PureRandom,
        Regime::Auto => Regime::Hub,
        r => r,
    };
    let mut copies = Vec::new();
    let mut free = within.clone();
    let fail = |copies: &Vec<Vec<usize>>, why: &str| {
        StageReport::failed(STAGE, why)
            .stat("copies", copies.len() as f64)
            .stat("required", count as f64)
            .stat("min_degree", min_degree as f64)
            .stat("hub_regime", f64::from(u8::from(chosen == Regime::Hub)))
    };
    match chosen {
        Regime::PureRandom | Regime::Auto => {
            while copies.len() < count {
                let query = LinkedSquares { segments: vec![vec![free.clone(); k + 1]], linked: vec![] };
                match find_linked_squares(&query, random, rng, budget, None) {
                    LinkedOutcome::Found(mut segs) => {
                        let c = segs.pop().expect("one segment");
                        for &v in &c {
                            free.remove(v);
                        }
                        copies.push(c);
                    }
                    LinkedOutcome::AbsentInSample => return Err(fail(&copies, "random graph has no further copy")),
                    LinkedOutcome::BudgetExhausted => return Err(fail(&copies, "search budget exhausted")),
                }
            }
        }
        Regime::Hub => {
            let (a, b) = locally_max_cut(det, within, rng);
            let mut hubs_left = a.clone();
            let mut b_free = b.clone();
            let (before, after) = hub_layout(k);
            while copies.len() < count {
                // Greedy hub: most free B-neighbours, at least m/8 of them.
                let pick = hubs_left.iter().map(|v| (det.count_into(v, &b_free), v)).filter(|&(d, _)| 8 * d >= min_degree && d >= 2).max();
                let Some((_, v)) = pick else {
                    return Err(fail(&copies, "no hub with enough free neighbours"));
                };
                hubs_left.remove(v);
                let mut slots = Vec::with_capacity(k + 1);
                slots.extend((0..before).map(|_| Slot::Free(b_free.clone())));
                slots.push(Slot::Hub(v));
                slots.extend((0..after).map(|_| Slot::Free(b_free.clone())));
                let t = HubTemplate { slots };
                match realize_hub_template(&t, det, random, rng, budget) {
                    LinkedOutcome::Found(seq) => {
                        for &u in &seq {
                            b_free.remove(u);
                        }
                        copies.push(seq);
                    }
                    LinkedOutcome::AbsentInSample => {}
                    LinkedOutcome::BudgetExhausted => return Err(fail(&copies, "search budget exhausted")),
                }
            }
        }
    }
    Ok(SublinearCopies { copies, regime: chosen, min_degree, cutoff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gnp;
    use crate::powers::verify_square_path;
    use crate::seed::Seed;

    fn check(det: &Graph, random: &Graph, out: &SublinearCopies, k: usize) {
        let host = det.union(random).unwrap();
        let mut seen = VertexSet::empty(det.n());
        for c in &out.copies {
            assert_eq!(c.len(), k + 1);
            assert!(verify_square_path(&host, c, false).unwrap());
            for &v in c {
                assert!(seen.insert(v));
            }
        }
    }

    #[test]
    fn complete_graph_single_round() {
        let g = Graph::complete(10);
        let out =
            find_sublinear_square_paths(&g, &g, &VertexSet::full(10), 2, 1, Regime::Auto, &mut Seed(0).rng(), &mut Budget::unlimited())
                .unwrap();
        assert_eq!(out.copies.len(), 1);
    }

    #[test]
    fn cut_gives_half_degree_across() {
        let g = gnp(80, 0.2, Seed(5)).unwrap();
        let all = VertexSet::full(80);
        let (a, b) = locally_max_cut(&g, &all, &mut Seed(1).rng());
        assert!(b.len() >= a.len());
        for v in 0..80 {
            let across = if a.contains(v) { g.count_into(v, &b) } else { g.count_into(v, &a) };
            assert!(2 * across >= g.degree(v));
        }
    }

    #[test]
    fn hub_regime_without_random_edges_fails() {
        let n = 60;
        let det = Graph::from_edges(n, (0..n).flat_map(|u| (0..n).filter(move |&v| v > u && (u + v) % 2 == 1).map(move |v| (u, v))));
        let out = find_sublinear_square_paths(
            &det,
            &Graph::empty(n),
            &VertexSet::full(n),
            3,
            2,
            Regime::Hub,
            &mut Seed(0).rng(),
            &mut Budget::unlimited(),
        );
        assert_eq!(out.unwrap_err().stats["copies"], 0.0);
    }

    #[test]
    fn both_regimes_give_valid_copies() {
        // Bipartite deterministic part: no copies without random edges.
        let n = 300;
        let det = Graph::from_edges(
            n,
            (0..n).flat_map(|u| (0..n).filter(move |&v| v > u && (u + v) % 2 == 1 && (v - u) % 7 < 3).map(move |v| (u, v))),
        );
        let all = VertexSet::full(n);
        for k in [2, 3, 4] {
            for regime in [Regime::PureRandom, Regime::Hub] {
                let random = gnp(n, 0.08, Seed(k as u64)).unwrap();
                let out =
                    find_sublinear_square_paths(&det, &random, &all, k, 5, regime, &mut Seed(9).rng(), &mut Budget::new(1 << 24)).unwrap();
                assert_eq!(out.copies.len(), 5);
                check(&det, &random, &out, k);
            }
        }
    }

    #[test]
    fn cutoff_matches_formula() {
        let n = 2000usize;
        assert!((regime_cutoff(n, 2) - (n as f64).ln().powi(2)).abs() < 1e-9);
        assert_eq!(lemma_count(3, 4), 15);
    }
}
