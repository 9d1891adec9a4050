//! Seeded random graphs and the deterministic extremal families.

use rand::Rng as _;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::graph::{DiGraph, DiGraphBuilder, Graph, GraphBuilder, VertexSet};
use crate::seed::{Rng, Seed};
use crate::stability::{verify_stable, StabilityWitness};

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("alpha {0} outside (0, 1/2)")]
    Alpha(f64),
    #[error("empty part in multipartite sizes")]
    EmptyPart,
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

fn check_p(p: f64) -> Result<(), GenError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GenError::Probability(p))
    }
}

/// Calls `f` on each index in `0..total` kept independently with probability `p`,
/// in increasing order, using geometric gaps.
pub fn sample_indices(total: u64, p: f64, rng: &mut Rng, mut f: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(f);
        return;
    }
    let geo = Geometric::new(p).expect("p checked to lie in (0,1)");
    let mut i = geo.sample(rng);
    while i < total {
        f(i);
        let gap = geo.sample(rng);
        i = match i.checked_add(gap + 1) {
            Some(x) => x,
            None => break,
        };
    }
}

/// Samples `G(S, p)` over the unordered pairs of `members`, emitting global ids.
fn sample_pairs_of(members: &[usize], p: f64, rng: &mut Rng, b: &mut GraphBuilder) {
    let s = members.len() as u64;
    if s < 2 {
        return;
    }
    let total = s * (s - 1) / 2;
    let (mut u, mut row_start, mut row_len) = (0u64, 0u64, s - 1);
    sample_indices(total, p, rng, |i| {
        while i >= row_start + row_len {
            row_start += row_len;
            u += 1;
            row_len -= 1;
        }
        let v = u + 1 + (i - row_start);
        b.add_edge(members[u as usize], members[v as usize]);
    });
}

pub fn gnp(n: usize, p: f64, seed: Seed) -> Result<Graph, GenError> {
    check_p(p)?;
    let mut rng = seed.rng();
    let mut b = GraphBuilder::new(n);
    let all: Vec<usize> = (0..n).collect();
    sample_pairs_of(&all, p, &mut rng, &mut b);
    Ok(b.build())
}

/// `G(S, p)` on a vertex subset of `0..n`; other vertices stay isolated.
pub fn gnp_on(n: usize, subset: &VertexSet, p: f64, seed: Seed) -> Result<Graph, GenError> {
    check_p(p)?;
    let mut rng = seed.rng();
    let mut b = GraphBuilder::new(n);
    sample_pairs_of(&subset.to_vec(), p, &mut rng, &mut b);
    Ok(b.build())
}

/// Random multipartite overlay: only pairs across two distinct parts are sampled.
pub fn gnp_between(n: usize, parts: &[VertexSet], p: f64, seed: Seed) -> Result<Graph, GenError> {
    check_p(p)?;
    let mut rng = seed.rng();
    let mut b = GraphBuilder::new(n);
    let lists: Vec<Vec<usize>> = parts.iter().map(|s| s.to_vec()).collect();
    for i in 0..lists.len() {
        for j in i + 1..lists.len() {
            let (x, y) = (&lists[i], &lists[j]);
            let cols = y.len() as u64;
            sample_indices(x.len() as u64 * cols, p, &mut rng, |idx| {
                b.add_edge(x[(idx / cols) as usize], y[(idx % cols) as usize]);
            });
        }
    }
    Ok(b.build())
}

/// Parts are consecutive id ranges in the order given.
pub fn gnp_multipartite(part_sizes: &[usize], p: f64, seed: Seed) -> Result<Graph, GenError> {
    if part_sizes.contains(&0) {
        return Err(GenError::EmptyPart);
    }
    let n: usize = part_sizes.iter().sum();
    let mut parts = Vec::with_capacity(part_sizes.len());
    let mut lo = 0;
    for &s in part_sizes {
        parts.push(VertexSet::range(n, lo, lo + s));
        lo += s;
    }
    gnp_between(n, &parts, p, seed)
}

pub fn gnp_directed(n: usize, p: f64, seed: Seed) -> Result<DiGraph, GenError> {
    check_p(p)?;
    let mut rng = seed.rng();
    let mut b = DiGraphBuilder::new(n);
    if n >= 2 {
        let per = (n - 1) as u64;
        sample_indices(n as u64 * per, p, &mut rng, |i| {
            let u = (i / per) as usize;
            let r = (i % per) as usize;
            let v = if r >= u { r + 1 } else { r };
            b.add_arc(u, v);
        });
    }
    Ok(b.build())
}

/// `G(n, p)` driven by one uniform per pair, so for a fixed seed the edge set
/// grows monotonically with `p`.
pub fn gnp_coupled(n: usize, p: f64, seed: Seed) -> Result<Graph, GenError> {
    check_p(p)?;
    let mut rng = seed.rng();
    let mut b = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                b.add_edge(u, v);
            }
        }
    }
    Ok(b.build())
}

/// `|A| = round(alpha * n)` with ties to even.
pub fn class_size(alpha: f64, n: usize) -> usize {
    (alpha * n as f64).round_ties_even().max(0.0) as usize
}

/// The complete bipartite graph with `A = 0..|A|` and `B` the rest.
pub fn extremal_bipartite(alpha: f64, n: usize) -> Result<(Graph, VertexSet, VertexSet), GenError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(GenError::Alpha(alpha));
    }
    let na = class_size(alpha, n).min(n);
    let mut b = GraphBuilder::new(n);
    for u in 0..na {
        for v in na..n {
            b.add_edge(u, v);
        }
    }
    let a = VertexSet::range(n, 0, na);
    let bset = a.complement();
    Ok((b.build(), a, bset))
}

/// A dense graph plus the density of its random overlay.
#[derive(Clone, Debug)]
pub struct PerturbedModel {
    pub dense: Graph,
    pub p: f64,
    pub alpha: f64,
}

impl PerturbedModel {
    pub fn new(dense: Graph, p: f64, alpha: f64) -> Result<Self, GenError> {
        check_p(p)?;
        Ok(PerturbedModel { dense, p, alpha })
    }

    pub fn n(&self) -> usize {
        self.dense.n()
    }

    pub fn sample(&self, seed: Seed) -> Graph {
        let r = gnp(self.n(), self.p, seed).expect("p validated on construction");
        self.dense.union(&r).expect("same order")
    }

    /// Sample from the monotone coupling; see [`gnp_coupled`].
    pub fn sample_coupled(&self, seed: Seed) -> Graph {
        let r = gnp_coupled(self.n(), self.p, seed).expect("p validated on construction");
        self.dense.union(&r).expect("same order")
    }
}

/// A stable graph near the extremal bipartite one.
///
/// Starting from [`extremal_bipartite`], adds `min(round(noise n²), ⌊beta n²⌋)`
/// random edges inside `B`, then tries as many cross-edge deletions. A deletion
/// `ab` is taken only if `b` keeps degree at least `min(|A|, ⌈alpha n⌉)` and all
/// four stability conditions still hold afterwards, so the returned witness
/// always verifies. Requires `0 < beta < alpha / 4`.
pub fn stable_instance(alpha: f64, beta: f64, n: usize, noise: f64, seed: Seed) -> Result<(Graph, StabilityWitness), GenError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(GenError::Alpha(alpha));
    }
    if !(beta > 0.0 && beta < alpha / 4.0) {
        return Err(GenError::Infeasible(format!("need 0 < beta < alpha/4, got beta = {beta}")));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(GenError::Infeasible(format!("noise {noise} outside [0, 1]")));
    }
    let (h, a, b) = extremal_bipartite(alpha, n)?;
    let witness = StabilityWitness::new(a.clone(), b.clone(), alpha, beta);
    if !verify_stable(&h, &witness) {
        return Err(GenError::Infeasible(format!("extremal graph on n = {n} is not ({alpha}, {beta})-stable")));
    }
    let nf = n as f64;
    let budget = ((noise * nf * nf).round() as usize).min((beta * nf * nf).floor() as usize);
    if budget == 0 {
        return Ok((h, witness));
    }
    let mut rng = seed.derive("stable-instance", 0).rng();
    let mut gb = h.to_builder();
    let bl = b.to_vec();
    let al = a.to_vec();
    let nb = bl.len();

    let mut added = 0;
    let max_b_edges = nb * nb.saturating_sub(1) / 2;
    let mut tries = 0;
    while added < budget.min(max_b_edges) && tries < 50 * budget + 100 {
        tries += 1;
        let u = bl[rng.random_range(0..nb)];
        let v = bl[rng.random_range(0..nb)];
        if u != v && gb.add_edge(u, v) {
            added += 1;
        }
    }

    let floor_deg = a.len().min((alpha * nf - 1e-9).ceil() as usize);
    let min_cross = alpha * nf / 4.0;
    let low_allowed = beta * nf;
    let mut deg_ab: Vec<usize> = (0..n).map(|v| if a.contains(v) { nb } else { al.len() }).collect();
    let mut low_a = 0usize;
    let mut low_b = 0usize;
    let thr_a = nb as f64 - beta * nf;
    let thr_b = al.len() as f64 - beta * nf;
    let mut removed = 0;
    let mut tries = 0;
    while removed < budget && tries < 50 * budget + 100 {
        tries += 1;
        let bv = bl[rng.random_range(0..nb)];
        if gb.degree(bv) <= floor_deg {
            continue;
        }
        let av = al[rng.random_range(0..al.len())];
        if !gb.has_edge(av, bv) {
            continue;
        }
        let (da, db) = (deg_ab[av] - 1, deg_ab[bv] - 1);
        if (da as f64) < min_cross || (db as f64) < min_cross {
            continue;
        }
        let new_low_a = low_a + usize::from((da as f64) <= thr_a && (deg_ab[av] as f64) > thr_a);
        let new_low_b = low_b + usize::from((db as f64) <= thr_b && (deg_ab[bv] as f64) > thr_b);
        if new_low_a as f64 > low_allowed || new_low_b as f64 > low_allowed {
            continue;
        }
        gb.remove_edge(av, bv);
        deg_ab[av] = da;
        deg_ab[bv] = db;
        low_a = new_low_a;
        low_b = new_low_b;
        removed += 1;
    }
    let g = gb.build();
    debug_assert!(verify_stable(&g, &witness));
    Ok((g, witness))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_ok(count: usize, trials: f64, p: f64) -> bool {
        let mean = trials * p;
        let sd = (trials * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 4.0 * sd
    }

    #[test]
    fn gnp_extremes() {
        assert_eq!(gnp(10, 0.0, Seed(1)).unwrap(), Graph::empty(10));
        assert_eq!(gnp(10, 1.0, Seed(1)).unwrap(), Graph::complete(10));
        assert!(gnp(10, 1.5, Seed(1)).is_err());
        assert!(gnp(10, -0.1, Seed(1)).is_err());
        assert_eq!(gnp_directed(6, 1.0, Seed(2)).unwrap().arc_count(), 30);
        assert_eq!(gnp_directed(6, 0.0, Seed(2)).unwrap().arc_count(), 0);
        assert_eq!(gnp_multipartite(&[3, 3], 1.0, Seed(0)).unwrap().edge_count(), 9);
        assert_eq!(gnp_multipartite(&[4, 2, 5], 0.0, Seed(0)).unwrap().edge_count(), 0);
        assert_eq!(gnp_multipartite(&[3, 0], 0.5, Seed(0)), Err(GenError::EmptyPart));
    }

    #[test]
    fn gnp_edge_counts_are_binomial() {
        let pairs = 2000.0 * 1999.0 / 2.0;
        for s in 0..100 {
            let g = gnp(2000, 0.01, Seed(s)).unwrap();
            assert!(binom_ok(g.edge_count(), pairs, 0.01), "seed {s}: {}", g.edge_count());
        }
        let d = gnp_directed(500, 0.5, Seed(3)).unwrap();
        assert!(binom_ok(d.arc_count(), 500.0 * 499.0, 0.5));
    }

    #[test]
    fn multipartite_has_no_internal_edges() {
        for s in 0..20 {
            let g = gnp_multipartite(&[50, 50, 50], 0.2, Seed(s)).unwrap();
            for (u, v) in g.edges() {
                assert_ne!(u / 50, v / 50);
            }
            assert!(binom_ok(g.edge_count(), 3.0 * 2500.0, 0.2));
        }
    }

    #[test]
    fn directed_covers_both_orientations() {
        let d = gnp_directed(40, 0.5, Seed(9)).unwrap();
        let both = d.arcs().filter(|&(u, v)| d.has_arc(v, u)).count();
        assert!(both > 0 && both < d.arc_count());
    }

    #[test]
    fn pair_indicator_covariance_is_small() {
        // Two disjoint pairs at n = 200; covariance should vanish.
        let p = 0.3;
        let samples = 10_000;
        let (mut x, mut y, mut xy) = (0.0, 0.0, 0.0);
        for s in 0..samples {
            let g = gnp(200, p, Seed(1000 + s)).unwrap();
            let a = g.has_edge(3, 117) as u8 as f64;
            let b = g.has_edge(50, 199) as u8 as f64;
            x += a;
            y += b;
            xy += a * b;
        }
        let nf = samples as f64;
        let cov = xy / nf - (x / nf) * (y / nf);
        let sd = p * (1.0 - p) / nf.sqrt();
        assert!(cov.abs() < 4.0 * sd, "cov {cov}");
    }

    #[test]
    fn subset_and_coupled_samplers() {
        let s = VertexSet::from_iter(30, [1, 5, 9, 20, 29]);
        let g = gnp_on(30, &s, 1.0, Seed(0)).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!(g.edges().all(|(u, v)| s.contains(u) && s.contains(v)));
        let lo = gnp_coupled(40, 0.2, Seed(5)).unwrap();
        let hi = gnp_coupled(40, 0.5, Seed(5)).unwrap();
        assert!(lo.edges().all(|(u, v)| hi.has_edge(u, v)));
    }

    #[test]
    fn extremal_examples() {
        let (g, a, b) = extremal_bipartite(1.0 / 3.0, 9).unwrap();
        assert_eq!((a.len(), b.len(), g.edge_count()), (3, 6, 18));
        let (g, a, b) = extremal_bipartite(0.25, 8).unwrap();
        assert_eq!((a.len(), b.len(), g.edge_count()), (2, 6, 12));
        let (g, _, _) = extremal_bipartite(1.0 / 3.0, 12).unwrap();
        assert_eq!(g.min_degree(), 4);
        assert!(extremal_bipartite(0.5, 10).is_err());
        assert!(extremal_bipartite(0.0, 10).is_err());
        // 0.25 * 10 = 2.5 rounds to the even neighbour.
        assert_eq!(class_size(0.25, 10), 2);
        assert_eq!(class_size(0.25, 14), 4);
    }

    #[test]
    fn stable_instance_examples() {
        let (g, w) = stable_instance(1.0 / 3.0, 0.01, 30, 0.0, Seed(1)).unwrap();
        assert_eq!(g, extremal_bipartite(1.0 / 3.0, 30).unwrap().0);
        assert_eq!(w.a.len(), 10);
        let (g, w) = stable_instance(1.0 / 3.0, 0.01, 300, 0.001, Seed(2)).unwrap();
        assert!(verify_stable(&g, &w));
        assert_ne!(g, extremal_bipartite(1.0 / 3.0, 300).unwrap().0);
        assert!(stable_instance(1.0 / 3.0, 0.2, 30, 0.0, Seed(0)).is_err());
    }

    #[test]
    fn stable_instance_keeps_min_degree() {
        for s in 0..100 {
            let (g, w) = stable_instance(1.0 / 3.0, 0.01, 120, 0.002, Seed(s)).unwrap();
            assert!(g.min_degree() as f64 >= 40.0, "seed {s}");
            assert!(verify_stable(&g, &w));
        }
    }

    #[test]
    fn same_seed_same_graph() {
        assert_eq!(gnp(300, 0.05, Seed(11)).unwrap(), gnp(300, 0.05, Seed(11)).unwrap());
        assert_eq!(
            stable_instance(1.0 / 3.0, 0.01, 150, 0.003, Seed(4)).unwrap().0,
            stable_instance(1.0 / 3.0, 0.01, 150, 0.003, Seed(4)).unwrap().0
        );
    }
}
