//! Search for a partition witnessing stability.

use crate::graph::{Graph, VertexSet};
use crate::report::Budget;
use crate::stability::{verify_stable, StabilityWitness};

pub const EXHAUSTIVE_LIMIT: usize = 16;

fn size_window(n: usize, alpha: f64, beta: f64) -> (usize, usize) {
    let nf = n as f64;
    let lo = ((alpha - beta) * nf - 1e-9).ceil().max(0.0) as usize;
    let hi = ((alpha + beta) * nf + 1e-9).floor().min(nf) as usize;
    (lo, hi)
}

fn exhaustive(g: &Graph, alpha: f64, beta: f64) -> Option<StabilityWitness> {
    let n = g.n();
    let (lo, hi) = size_window(n, alpha, beta);
    (0u32..1 << n)
        .filter(|m| (lo..=hi).contains(&(m.count_ones() as usize)))
        .map(|m| StabilityWitness::from_a(VertexSet::from_iter(n, (0..n).filter(|&v| m >> v & 1 == 1)), alpha, beta))
        .find(|w| verify_stable(g, w))
}

/// Swaps and single moves that increase the cut while keeping `|A|` in the size window.
fn improve(g: &Graph, a: &mut VertexSet, lo: usize, hi: usize, budget: &mut Budget) {
    let n = g.n();
    let mut to_a: Vec<i64> = (0..n).map(|v| g.count_into(v, a) as i64).collect();
    let deg: Vec<i64> = (0..n).map(|v| g.degree(v) as i64).collect();
    // Gain of flipping v alone.
    let gain = |v: usize, a: &VertexSet, to_a: &[i64]| -> i64 {
        let inside = if a.contains(v) { to_a[v] } else { deg[v] - to_a[v] };
        2 * inside - deg[v]
    };
    let flip = |v: usize, a: &mut VertexSet, to_a: &mut [i64]| {
        let into = !a.contains(v);
        if into {
            a.insert(v);
        } else {
            a.remove(v);
        }
        for u in g.neighbors(v) {
            to_a[u] += if into { 1 } else { -1 };
        }
    };
    loop {
        if !budget.tick() {
            return;
        }
        let best_a = a.iter().map(|v| (gain(v, a, &to_a), v)).max();
        let best_b = (0..n).filter(|&v| !a.contains(v)).map(|v| (gain(v, a, &to_a), v)).max();
        let mut moved = false;
        if let Some((ga, x)) = best_a {
            if ga > 0 && a.len() > lo {
                flip(x, a, &mut to_a);
                moved = true;
            }
        }
        if !moved {
            if let Some((gb, y)) = best_b {
                if gb > 0 && a.len() < hi {
                    flip(y, a, &mut to_a);
                    moved = true;
                }
            }
        }
        if !moved {
            if let (Some((ga, x)), Some((gb, y))) = (best_a, best_b) {
                let bonus = if g.has_edge(x, y) { -2 } else { 0 };
                if ga + gb + bonus > 0 {
                    flip(x, a, &mut to_a);
                    flip(y, a, &mut to_a);
                    moved = true;
                }
            }
        }
        if !moved {
            return;
        }
    }
}

/// Exhaustive over all admissible sizes for at most [`EXHAUSTIVE_LIMIT`]
/// vertices. Larger graphs are seeded by degree and by a greedy sparse set,
/// then improved by cut-increasing moves. `None` does not prove instability.
pub fn find_stable_partition(g: &Graph, alpha: f64, beta: f64, budget: &mut Budget) -> Option<StabilityWitness> {
    let n = g.n();
    if n == 0 {
        return None;
    }
    if n <= EXHAUSTIVE_LIMIT {
        return exhaustive(g, alpha, beta);
    }
    let (lo, hi) = size_window(n, alpha, beta);
    if lo > hi {
        return None;
    }
    let target = crate::generators::class_size(alpha, n).clamp(lo, hi);
    let mut seeds = Vec::new();

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    seeds.push(VertexSet::from_iter(n, by_degree[..target].iter().copied()));

    // Fewest edges into the chosen set, ties to larger degree.
    let mut greedy = VertexSet::empty(n);
    let mut into = vec![0usize; n];
    for _ in 0..target {
        let v = (0..n).filter(|&v| !greedy.contains(v)).min_by_key(|&v| (into[v], std::cmp::Reverse(g.degree(v)), v)).expect("target <= n");
        greedy.insert(v);
        for u in g.neighbors(v) {
            into[u] += 1;
        }
    }
    seeds.push(greedy);

    for mut a in seeds {
        let w = StabilityWitness::from_a(a.clone(), alpha, beta);
        if verify_stable(g, &w) {
            return Some(w);
        }
        improve(g, &mut a, lo, hi, budget);
        let w = StabilityWitness::from_a(a, alpha, beta);
        if verify_stable(g, &w) {
            return Some(w);
        }
    }
    None
}
