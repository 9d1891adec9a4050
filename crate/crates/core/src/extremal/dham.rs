//! Directed Hamilton cycles: rotation–extension with restarts, and an exact
//! subset dynamic program for small digraphs.

use rand::seq::IteratorRandom;
use rand::Rng as _;

use crate::graph::DiGraph;
use crate::report::{Budget, StageReport};
use crate::seed::Rng;

pub const EXACT_LIMIT: usize = 12;
const STAGE: &str = "directed_ham_cycle";

pub fn is_directed_ham_cycle(d: &DiGraph, order: &[usize]) -> bool {
    let n = d.n();
    if order.len() != n || n < 2 {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return false;
        }
    }
    (0..n).all(|i| d.has_arc(order[i], order[(i + 1) % n]))
}

fn exact(d: &DiGraph) -> Option<Vec<usize>> {
    let n = d.n();
    let full = (1usize << n) - 1;
    // reach[mask] bit v: a path from 0 through exactly `mask` ending at v.
    let mut reach = vec![0u32; 1 << n];
    reach[1] = 1;
    for mask in 1..=full {
        if mask & 1 == 0 || reach[mask] == 0 {
            continue;
        }
        for v in 0..n {
            if reach[mask] >> v & 1 == 1 {
                for w in d.out_neighbors(v) {
                    if mask >> w & 1 == 0 {
                        reach[mask | 1 << w] |= 1 << w;
                    }
                }
            }
        }
    }
    let end = (0..n).find(|&v| reach[full] >> v & 1 == 1 && d.has_arc(v, 0))?;
    let mut order = vec![end];
    let mut mask = full;
    let mut cur = end;
    while cur != 0 {
        let prev_mask = mask & !(1 << cur);
        let prev = (0..n).find(|&u| reach[prev_mask] >> u & 1 == 1 && d.has_arc(u, cur)).expect("dp trail");
        order.push(prev);
        mask = prev_mask;
        cur = prev;
    }
    order.reverse();
    Some(order)
}

/// Finds a directed Hamilton cycle. For at most [`EXACT_LIMIT`] vertices the
/// answer is exact; otherwise failure only means the budget ran out.
pub fn directed_ham_cycle(d: &DiGraph, rng: &mut Rng, budget: &mut Budget) -> Result<Vec<usize>, StageReport> {
    let n = d.n();
    if n < 2 {
        return Err(StageReport::failed(STAGE, "precondition: fewer than two vertices"));
    }
    if (0..n).any(|v| d.out_degree(v) == 0) || (0..n).any(|v| d.reversed().out_degree(v) == 0) {
        return Err(StageReport::failed(STAGE, "a vertex has no in- or out-arc").stat("exhaustive", 1.0));
    }
    if n <= EXACT_LIMIT {
        return match exact(d) {
            Some(c) => {
                assert!(is_directed_ham_cycle(d, &c));
                Ok(c)
            }
            None => Err(StageReport::failed(STAGE, "no Hamilton cycle").stat("exhaustive", 1.0)),
        };
    }
    let restart_after = (20 * n) as u64;
    let mut restarts = 0u64;
    loop {
        restarts += 1;
        let mut path = vec![rng.random_range(0..n)];
        let mut pos = vec![usize::MAX; n];
        pos[path[0]] = 0;
        let mut best = 1;
        let mut stale = 0u64;
        loop {
            if !budget.tick() {
                return Err(StageReport::failed(STAGE, "search budget exhausted")
                    .stat("restarts", restarts as f64)
                    .stat("longest_path", best as f64));
            }
            let last = *path.last().expect("nonempty");
            if path.len() == n && d.has_arc(last, path[0]) {
                assert!(is_directed_ham_cycle(d, &path));
                return Ok(path);
            }
            // Extension.
            if let Some(w) = d.out_neighbors(last).filter(|&w| pos[w] == usize::MAX).choose(rng) {
                pos[w] = path.len();
                path.push(w);
                if path.len() > best {
                    best = path.len();
                    stale = 0;
                }
                continue;
            }
            // Closed cycle on the path vertices: reopen it towards an outside vertex.
            if path.len() < n && d.has_arc(last, path[0]) {
                let exits: Vec<(usize, usize)> = path
                    .iter()
                    .enumerate()
                    .flat_map(|(t, &u)| d.out_neighbors(u).filter(|&w| pos[w] == usize::MAX).map(move |w| (t, w)))
                    .take(64)
                    .collect();
                if let Some(&(t, w)) = exits.get(rng.random_range(0..exits.len().max(1))) {
                    path.rotate_left(t + 1);
                    path.push(w);
                    for (i, &u) in path.iter().enumerate() {
                        pos[u] = i;
                    }
                    best = best.max(path.len());
                    stale = 0;
                    continue;
                }
            }
            stale += 1;
            if stale > restart_after {
                break;
            }
            // Double rotation: last -> p_i and p_{i-1} -> p_j with j > i gives
            // p_0..p_{i-1}, p_j..p_l, p_i..p_{j-1}.
            let l = path.len() - 1;
            let Some(i) = d.out_neighbors(last).map(|w| pos[w]).filter(|&i| i >= 1 && i <= l).choose(rng) else {
                break;
            };
            let Some(j) = d.out_neighbors(path[i - 1]).map(|w| pos[w]).filter(|&j| j != usize::MAX && j > i && j <= l).choose(rng) else {
                continue;
            };
            let mut np = Vec::with_capacity(path.len());
            np.extend_from_slice(&path[..i]);
            np.extend_from_slice(&path[j..]);
            np.extend_from_slice(&path[i..j]);
            path = np;
            for (t, &u) in path.iter().enumerate() {
                pos[u] = t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gnp_directed;
    use crate::seed::Seed;

    #[test]
    fn complete_digraph() {
        let d = DiGraph::complete(10);
        let c = directed_ham_cycle(&d, &mut Seed(0).rng(), &mut Budget::unlimited()).unwrap();
        assert!(is_directed_ham_cycle(&d, &c));
    }

    #[test]
    fn single_cycle_is_recovered() {
        for n in [5, 30] {
            let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
            let d = DiGraph::from_arcs(n, (0..n).map(|i| (perm[i], perm[(i + 1) % n])));
            let c = directed_ham_cycle(&d, &mut Seed(1).rng(), &mut Budget::unlimited()).unwrap();
            let start = c.iter().position(|&v| v == perm[0]).unwrap();
            let rotated: Vec<usize> = (0..n).map(|i| c[(start + i) % n]).collect();
            assert_eq!(rotated, perm);
        }
    }

    #[test]
    fn exact_agrees_with_brute_force() {
        for s in 0..60 {
            let n = 4 + (s % 4) as usize;
            let d = gnp_directed(n, 0.45, Seed(s)).unwrap();
            let mut perm: Vec<usize> = (1..n).collect();
            let mut exists = false;
            let len = perm.len();
            heap(&mut perm, len, &mut |p| {
                let mut o = vec![0];
                o.extend_from_slice(p);
                exists |= is_directed_ham_cycle(&d, &o);
            });
            let got = directed_ham_cycle(&d, &mut Seed(s).rng(), &mut Budget::unlimited());
            assert_eq!(got.is_ok(), exists, "seed {s}");
        }
    }

    fn heap(v: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            f(v);
            return;
        }
        for i in 0..k {
            heap(v, k - 1, f);
            if k % 2 == 0 {
                v.swap(i, k - 1);
            } else {
                v.swap(0, k - 1);
            }
        }
    }

    #[test]
    fn sparse_random_digraphs() {
        let n = 400;
        let p = 8.0 * (n as f64).ln() / n as f64;
        let mut ok = 0;
        for s in 0..10 {
            let d = gnp_directed(n, p, Seed(s)).unwrap();
            if let Ok(c) = directed_ham_cycle(&d, &mut Seed(s).rng(), &mut Budget::new(50_000_000)) {
                assert!(is_directed_ham_cycle(&d, &c));
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}/10");
    }
}
