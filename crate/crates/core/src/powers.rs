//! Graph powers, squares of paths and cycles, 1-density, and the verifiers
//! every embedding result is checked against.

use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphBuilder, GraphError, VertexSet};

/// Largest graph accepted by the exact 1-density routines.
pub const ONE_DENSITY_CAP: usize = 12;
/// Largest order accepted by [`enumerate_maxdeg2`].
pub const MAXDEG2_CAP: usize = 14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PowerError {
    #[error("power r must be at least 1")]
    ZeroPower,
    #[error("graph has {0} vertices, exact mode supports at most {1}")]
    TooLarge(usize, usize),
    #[error("need at least {0} vertices")]
    TooSmall(usize),
    #[error("vertex {0} repeated")]
    Duplicate(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Edge `uv` present iff `1 <= dist(u, v) <= r`.
pub fn rth_power(g: &Graph, r: usize) -> Result<Graph, PowerError> {
    if r == 0 {
        return Err(PowerError::ZeroPower);
    }
    let n = g.n();
    let mut b = GraphBuilder::new(n);
    for s in 0..n {
        let mut reached = VertexSet::from_iter(n, [s]);
        let mut frontier = reached.clone();
        for _ in 0..r {
            let mut next = VertexSet::empty(n);
            for v in frontier.iter() {
                next.union_with(&g.neighbor_set(v));
            }
            next.difference_with(&reached);
            if next.is_empty() {
                break;
            }
            reached.union_with(&next);
            frontier = next;
        }
        for v in reached.iter().filter(|&v| v > s) {
            b.add_edge(s, v);
        }
    }
    Ok(b.build())
}

pub fn path_graph(k: usize) -> Graph {
    Graph::from_edges(k, (1..k).map(|i| (i - 1, i)))
}

pub fn cycle_graph(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// `P_k^2` on `0..k` in path order.
pub fn square_of_path(k: usize) -> Graph {
    let mut b = GraphBuilder::new(k);
    for i in 0..k {
        for j in i + 1..(i + 3).min(k) {
            b.add_edge(i, j);
        }
    }
    b.build()
}

/// `C_n^2` on `0..n` in cycle order; `K_n` for `n <= 5`.
pub fn square_of_cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    let mut b = GraphBuilder::new(n);
    for i in 0..n {
        for d in 1..=2 {
            let j = (i + d) % n;
            if j != i {
                b.add_edge(i, j);
            }
        }
    }
    b.build()
}

fn induced_density(f: &Graph, mask: u32) -> Option<Rational64> {
    let vs = mask.count_ones() as i64;
    if vs < 2 {
        return None;
    }
    let mut e = 0i64;
    let n = f.n();
    for u in 0..n {
        if mask >> u & 1 == 1 {
            for v in f.neighbors(u) {
                if v > u && mask >> v & 1 == 1 {
                    e += 1;
                }
            }
        }
    }
    Some(Rational64::new(e, vs - 1))
}

/// Maximum of `e(F')/(v(F')-1)` over subgraphs with at least two vertices.
pub fn one_density(f: &Graph) -> Result<Rational64, PowerError> {
    let n = f.n();
    if n < 2 {
        return Err(PowerError::TooSmall(2));
    }
    if n > ONE_DENSITY_CAP {
        return Err(PowerError::TooLarge(n, ONE_DENSITY_CAP));
    }
    Ok(one_density_unchecked(f))
}

// Induced subgraphs dominate, so subsets suffice. Callers bound `n`.
pub(crate) fn one_density_unchecked(f: &Graph) -> Rational64 {
    let n = f.n();
    assert!((2..=20).contains(&n));
    (1u32..1 << n).filter_map(|m| induced_density(f, m)).max().expect("n >= 2")
}

pub fn is_strictly_1_balanced(f: &Graph) -> Result<bool, PowerError> {
    let n = f.n();
    if n < 2 {
        return Err(PowerError::TooSmall(2));
    }
    if n > ONE_DENSITY_CAP {
        return Err(PowerError::TooLarge(n, ONE_DENSITY_CAP));
    }
    let full = (1u32 << n) - 1;
    let whole = induced_density(f, full).expect("n >= 2");
    // Spanning proper subgraphs lose an edge over the same vertex count, so only
    // proper vertex subsets can tie or beat the whole graph.
    Ok((1u32..full).filter_map(|m| induced_density(f, m)).all(|d| d < whole))
}

fn check_distinct(g: &Graph, seq: &[usize]) -> Result<(), PowerError> {
    let mut seen = VertexSet::empty(g.n());
    for &v in seq {
        if v >= g.n() {
            return Err(GraphError::VertexOutOfRange { vertex: v, n: g.n() }.into());
        }
        if !seen.insert(v) {
            return Err(PowerError::Duplicate(v));
        }
    }
    Ok(())
}

/// True iff `ordering` lists all vertices and consecutive and next-but-one
/// vertices (cyclically) are adjacent.
pub fn verify_square_cycle(g: &Graph, ordering: &[usize]) -> Result<bool, PowerError> {
    check_distinct(g, ordering)?;
    let n = ordering.len();
    if n != g.n() || n < 3 {
        return Ok(false);
    }
    for i in 0..n {
        for d in 1..=2 {
            let j = (i + d) % n;
            if j != i && !g.has_edge(ordering[i], ordering[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff every pair at distance one or two along `seq` is an edge. With
/// `relax_end_edges`, the edges `seq[0]seq[1]` and `seq[len-2]seq[len-1]` are not required.
pub fn verify_square_path(g: &Graph, seq: &[usize], relax_end_edges: bool) -> Result<bool, PowerError> {
    check_distinct(g, seq)?;
    let k = seq.len();
    for i in 0..k {
        for j in i + 1..(i + 3).min(k) {
            let exempt = relax_end_edges && j == i + 1 && (i == 0 || j == k - 1);
            if !exempt && !g.has_edge(seq[i], seq[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Pairs at distance one or two along a path, in order.
pub fn square_path_pairs(seq: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let k = seq.len();
    (0..k).flat_map(move |i| (i + 1..(i + 3).min(k)).map(move |j| (seq[i], seq[j])))
}

/// Where an edge of an embedded structure came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSource {
    Deterministic,
    RandomRound(u8),
}

/// The deterministic graph plus labelled random rounds on the same vertices.
#[derive(Clone, Debug)]
pub struct LayeredHost {
    layers: Vec<(EdgeSource, Graph)>,
    union: Graph,
}

impl LayeredHost {
    pub fn new(deterministic: Graph) -> Self {
        let union = deterministic.clone();
        LayeredHost { layers: vec![(EdgeSource::Deterministic, deterministic)], union }
    }

    pub fn add_round(&mut self, index: u8, g: Graph) -> Result<(), GraphError> {
        self.union = self.union.union(&g)?;
        self.layers.push((EdgeSource::RandomRound(index), g));
        Ok(())
    }

    pub fn union(&self) -> &Graph {
        &self.union
    }

    pub fn layer(&self, source: EdgeSource) -> Option<&Graph> {
        self.layers.iter().find(|(s, _)| *s == source).map(|(_, g)| g)
    }

    /// First layer (deterministic before rounds, rounds in insertion order) holding `uv`.
    pub fn source_of(&self, u: usize, v: usize) -> Option<EdgeSource> {
        self.layers.iter().find(|(_, g)| g.has_edge(u, v)).map(|(s, _)| *s)
    }
}

/// An embedded square of a path with its end tuples and edge provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquarePathPiece {
    pub vertices: Vec<usize>,
    pub provenance: Vec<((usize, usize), EdgeSource)>,
}

impl SquarePathPiece {
    pub fn new(vertices: Vec<usize>) -> Self {
        SquarePathPiece { vertices, provenance: Vec::new() }
    }

    /// Builds the piece and tags each required edge by its first source in `host`.
    /// Returns `None` if some required edge is missing.
    pub fn tagged(vertices: Vec<usize>, host: &LayeredHost) -> Option<Self> {
        let mut provenance = Vec::new();
        for (u, v) in square_path_pairs(&vertices) {
            provenance.push(((u, v), host.source_of(u, v)?));
        }
        Some(SquarePathPiece { vertices, provenance })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `(v2, v1)`.
    pub fn left_tuple(&self) -> (usize, usize) {
        let v = &self.vertices;
        if v.len() >= 2 {
            (v[1], v[0])
        } else {
            (v[0], v[0])
        }
    }

    /// `(v_{k-1}, v_k)`.
    pub fn right_tuple(&self) -> (usize, usize) {
        let v = &self.vertices;
        let k = v.len();
        if k >= 2 {
            (v[k - 2], v[k - 1])
        } else {
            (v[0], v[0])
        }
    }
}

/// A graph of maximum degree two, by its component lengths.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MaxDeg2Graph {
    /// Path component orders (each at least 1), non-increasing.
    pub paths: Vec<usize>,
    /// Cycle lengths (each at least 3), non-increasing.
    pub cycles: Vec<usize>,
}

impl MaxDeg2Graph {
    pub fn order(&self) -> usize {
        self.paths.iter().sum::<usize>() + self.cycles.iter().sum::<usize>()
    }

    /// Cycles first, then paths, on consecutive ids.
    pub fn to_graph(&self) -> Graph {
        let n = self.order();
        let mut b = GraphBuilder::new(n);
        let mut lo = 0;
        for &c in &self.cycles {
            for i in 0..c {
                b.add_edge(lo + i, lo + (i + 1) % c);
            }
            lo += c;
        }
        for &p in &self.paths {
            for i in 1..p {
                b.add_edge(lo + i - 1, lo + i);
            }
            lo += p;
        }
        b.build()
    }

    pub fn label(&self) -> String {
        let mut parts: Vec<String> = self.cycles.iter().map(|c| format!("C{c}")).collect();
        parts.extend(self.paths.iter().map(|p| format!("P{p}")));
        parts.join("+")
    }
}

/// Partitions of `total` into parts in `[min_part, max_part]`, non-increasing,
/// in lexicographically descending order.
fn partitions_desc(total: usize, min_part: usize, max_part: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if total == 0 {
        out.push(cur.clone());
        return;
    }
    for part in (min_part..=max_part.min(total)).rev() {
        cur.push(part);
        partitions_desc(total - part, min_part, part, out, cur);
        cur.pop();
    }
}

/// Every max-degree-two graph on `n` vertices exactly once, graphs with more
/// vertices on cycles first.
pub fn enumerate_maxdeg2(n: usize) -> Result<std::vec::IntoIter<MaxDeg2Graph>, PowerError> {
    if n > MAXDEG2_CAP {
        return Err(PowerError::TooLarge(n, MAXDEG2_CAP));
    }
    let mut all = Vec::new();
    for c in (0..=n).rev() {
        let mut cyc = Vec::new();
        partitions_desc(c, 3, c, &mut cyc, &mut Vec::new());
        let mut pth = Vec::new();
        partitions_desc(n - c, 1, n - c, &mut pth, &mut Vec::new());
        for cy in &cyc {
            for pa in &pth {
                all.push(MaxDeg2Graph { paths: pa.clone(), cycles: cy.clone() });
            }
        }
    }
    Ok(all.into_iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn brute_distance_power(g: &Graph, r: usize) -> Graph {
        let n = g.n();
        let inf = usize::MAX / 2;
        let mut d = vec![vec![inf; n]; n];
        for u in 0..n {
            d[u][u] = 0;
            for v in g.neighbors(u) {
                d[u][v] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let mut b = GraphBuilder::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if d[u][v] <= r {
                    b.add_edge(u, v);
                }
            }
        }
        b.build()
    }

    #[test]
    fn power_examples() {
        assert_eq!(rth_power(&cycle_graph(5), 2).unwrap(), Graph::complete(5));
        assert_eq!(rth_power(&path_graph(4), 1).unwrap(), path_graph(4));
        let c8 = rth_power(&cycle_graph(8), 2).unwrap();
        assert_eq!(c8.edge_count(), 16);
        assert!((0..8).all(|v| c8.degree(v) == 4));
        assert_eq!(c8, brute_distance_power(&cycle_graph(8), 2));
        assert_eq!(c8, square_of_cycle(8));
        assert_eq!(rth_power(&cycle_graph(6), 0), Err(PowerError::ZeroPower));
    }

    #[test]
    fn square_shapes() {
        assert_eq!(square_of_path(3), Graph::complete(3));
        assert_eq!(square_of_cycle(5), Graph::complete(5));
        let p6 = square_of_path(6);
        assert_eq!(p6.edge_count(), 9);
        let degs: Vec<usize> = (0..6).map(|v| p6.degree(v)).collect();
        assert_eq!(degs, vec![2, 3, 4, 4, 3, 2]);
        for k in 2..12 {
            assert_eq!(square_of_path(k).edge_count(), 2 * k - 3);
            assert_eq!(square_of_path(k), rth_power(&path_graph(k), 2).unwrap());
        }
        for n in 5..15 {
            assert_eq!(square_of_cycle(n).edge_count(), 2 * n);
        }
    }

    #[test]
    fn one_density_examples() {
        assert_eq!(one_density(&Graph::complete(2)).unwrap(), Rational64::from_integer(1));
        assert_eq!(one_density(&square_of_path(3)).unwrap(), Rational64::new(3, 2));
        assert_eq!(one_density(&cycle_graph(4)).unwrap(), Rational64::new(4, 3));
        assert!(one_density(&Graph::empty(13)).is_err());
        for k in 2..=8 {
            let want = Rational64::new(2 * k as i64 - 3, k as i64 - 1);
            assert_eq!(one_density(&square_of_path(k)).unwrap(), want, "k = {k}");
        }
    }

    #[test]
    fn balance_examples() {
        assert!(is_strictly_1_balanced(&Graph::complete(3)).unwrap());
        assert!(!is_strictly_1_balanced(&Graph::from_edges(4, [(0, 1), (2, 3)])).unwrap());
        assert!(is_strictly_1_balanced(&square_of_path(5)).unwrap());
    }

    #[test]
    fn verifier_examples() {
        let order: Vec<usize> = (0..5).collect();
        assert!(verify_square_cycle(&Graph::complete(5), &order).unwrap());
        let six: Vec<usize> = (0..6).collect();
        assert!(!verify_square_cycle(&cycle_graph(6), &six).unwrap());
        let c6 = square_of_cycle(6);
        for shift in 0..6 {
            let fwd: Vec<usize> = (0..6).map(|i| (i + shift) % 6).collect();
            let rev: Vec<usize> = fwd.iter().rev().copied().collect();
            assert!(verify_square_cycle(&c6, &fwd).unwrap());
            assert!(verify_square_cycle(&c6, &rev).unwrap());
        }
        assert_eq!(verify_square_cycle(&c6, &[0, 1, 1, 2, 3, 4]), Err(PowerError::Duplicate(1)));
    }

    #[test]
    fn relaxed_path_skips_end_tuple_edges() {
        let p = square_of_path(6);
        let mut b = p.to_builder();
        b.remove_edge(0, 1);
        b.remove_edge(4, 5);
        let g = b.build();
        let seq: Vec<usize> = (0..6).collect();
        assert!(!verify_square_path(&g, &seq, false).unwrap());
        assert!(verify_square_path(&g, &seq, true).unwrap());
        let piece = SquarePathPiece::new(seq);
        assert_eq!(piece.left_tuple(), (1, 0));
        assert_eq!(piece.right_tuple(), (4, 5));
    }

    #[test]
    fn provenance_prefers_deterministic() {
        let mut host = LayeredHost::new(Graph::from_edges(4, [(0, 1), (1, 2)]));
        host.add_round(1, Graph::from_edges(4, [(0, 2), (1, 2), (2, 3), (1, 3)])).unwrap();
        let piece = SquarePathPiece::tagged(vec![0, 1, 2, 3], &host).unwrap();
        for ((u, v), src) in &piece.provenance {
            if *src == EdgeSource::Deterministic {
                assert!(host.layer(EdgeSource::Deterministic).unwrap().has_edge(*u, *v));
            }
        }
        assert_eq!(piece.provenance[0].1, EdgeSource::Deterministic);
        assert_eq!(piece.provenance[1].1, EdgeSource::RandomRound(1));
        assert!(SquarePathPiece::tagged(vec![3, 0, 1], &host).is_none());
    }

    fn partition_count(total: usize, min_part: usize) -> usize {
        let mut v = Vec::new();
        partitions_desc(total, min_part, total, &mut v, &mut Vec::new());
        v.len()
    }

    // Independent count: multisets of cycle lengths times multisets of path lengths,
    // computed with the generating-function recurrence.
    fn count_by_dp(n: usize) -> usize {
        let parts = |min: usize| {
            let mut ways = vec![0usize; n + 1];
            ways[0] = 1;
            for part in min..=n {
                for t in part..=n {
                    ways[t] += ways[t - part];
                }
            }
            ways
        };
        let (cyc, pth) = (parts(3), parts(1));
        (0..=n).map(|c| cyc[c] * pth[n - c]).sum()
    }

    #[test]
    fn maxdeg2_enumeration() {
        let three: Vec<String> = enumerate_maxdeg2(3).unwrap().map(|g| g.label()).collect();
        assert_eq!(three.len(), 4);
        for want in ["C3", "P3", "P2+P1", "P1+P1+P1"] {
            assert!(three.contains(&want.to_string()), "{want}");
        }
        let one: Vec<MaxDeg2Graph> = enumerate_maxdeg2(1).unwrap().collect();
        assert_eq!(one, vec![MaxDeg2Graph { paths: vec![1], cycles: vec![] }]);
        for n in 0..=MAXDEG2_CAP {
            let all: Vec<MaxDeg2Graph> = enumerate_maxdeg2(n).unwrap().collect();
            let uniq: HashSet<_> = all.iter().cloned().collect();
            assert_eq!(all.len(), uniq.len());
            assert_eq!(all.len(), count_by_dp(n));
            for g in &all {
                assert_eq!(g.order(), n);
                assert!(g.to_graph().max_degree() <= 2);
            }
        }
        assert_eq!(partition_count(5, 1), 7);
        assert!(enumerate_maxdeg2(15).is_err());
        let six: Vec<String> = enumerate_maxdeg2(6).unwrap().map(|g| g.label()).collect();
        assert_eq!(&six[..2], &["C6".to_string(), "C3+C3".to_string()]);
    }

    proptest! {
        #[test]
        fn power_is_monotone_and_saturates(n in 2usize..14, bits in proptest::collection::vec(any::<bool>(), 91)) {
            let mut b = GraphBuilder::new(n);
            let mut i = 0;
            for u in 0..n { for v in u + 1..n { if bits[i % 91] { b.add_edge(u, v); } i += 1; } }
            let g = b.build();
            let mut prev = g.clone();
            for r in 1..n {
                let cur = rth_power(&g, r).unwrap();
                prop_assert_eq!(&cur, &brute_distance_power(&g, r));
                prop_assert!(prev.edges().all(|(u, v)| cur.has_edge(u, v)));
                prev = cur;
            }
            let connected = brute_distance_power(&g, n).edge_count() == n * (n - 1) / 2;
            if connected {
                prop_assert_eq!(rth_power(&g, n - 1).unwrap(), Graph::complete(n));
            }
        }
    }
}
