//! Bitset graphs, digraphs and vertex sets over dense ids `0..n`.

use std::fmt;
use std::fs;
use std::path::Path;

use num_rational::Rational64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graphs have different orders ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("vertex sets overlap")]
    Overlap,
    #[error("empty vertex set")]
    EmptySide,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// A subset of `0..n` stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    n: usize,
    words: Vec<u64>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet { n, words: vec![0; words_for(n)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for w in s.words.iter_mut() {
            *w = !0;
        }
        s.trim();
        s
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(n: usize, iter: I) -> Self {
        let mut s = Self::empty(n);
        for v in iter {
            s.insert(v);
        }
        s
    }

    pub fn range(n: usize, lo: usize, hi: usize) -> Self {
        Self::from_iter(n, lo..hi.min(n))
    }

    pub(crate) fn from_words(n: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(n));
        let mut s = VertexSet { n, words };
        s.trim();
        s
    }

    fn trim(&mut self) {
        let r = self.n % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    /// Size of the universe, not the cardinality.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.n && self.words[v >> 6] >> (v & 63) & 1 == 1
    }

    /// Panics when `v` is outside the universe.
    #[inline]
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.n, "vertex {v} out of range for n = {}", self.n);
        let had = self.contains(v);
        self.words[v >> 6] |= 1 << (v & 63);
        !had
    }

    #[inline]
    pub fn remove(&mut self, v: usize) -> bool {
        if v >= self.n {
            return false;
        }
        let had = self.contains(v);
        self.words[v >> 6] &= !(1 << (v & 63));
        had
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn iter(&self) -> SetIter<'_> {
        SetIter { words: &self.words, idx: 0, cur: self.words.first().copied().unwrap_or(0) }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    /// The `i`-th smallest member.
    pub fn nth(&self, mut i: usize) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            let c = w.count_ones() as usize;
            if i < c {
                let mut w = w;
                for _ in 0..i {
                    w &= w - 1;
                }
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
            i -= c;
        }
        None
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        self.and_words(&other.words);
    }

    pub(crate) fn and_words(&mut self, row: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(row) {
            *a &= b;
        }
    }

    pub(crate) fn andnot_words(&mut self, row: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(row) {
            *a &= !b;
        }
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        self.andnot_words(&other.words);
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn complement(&self) -> VertexSet {
        Self::full(self.n).difference(self)
    }

    pub fn intersection_len(&self, other: &VertexSet) -> usize {
        and_count(&self.words, &other.words)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct SetIter<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl Iterator for SetIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let t = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * 64 + t);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

#[inline]
pub(crate) fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// Immutable simple undirected graph with one bitset row per vertex.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    w: usize,
    rows: Vec<u64>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        GraphBuilder::new(n).build()
    }

    pub fn complete(n: usize) -> Self {
        let mut b = GraphBuilder::new(n);
        for u in 0..n {
            for v in u + 1..n {
                b.add_edge(u, v);
            }
        }
        b.build()
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut b = GraphBuilder::new(n);
        for (u, v) in edges {
            b.add_edge(u, v);
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.w..(v + 1) * self.w]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.rows[u * self.w + (v >> 6)] >> (v & 63) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> SetIter<'_> {
        let row = self.row(v);
        SetIter { words: row, idx: 0, cur: row.first().copied().unwrap_or(0) }
    }

    pub fn neighbor_set(&self, v: usize) -> VertexSet {
        VertexSet::from_words(self.n, self.row(v).to_vec())
    }

    /// `|N(v) ∩ s|` without range checks.
    #[inline]
    pub fn count_into(&self, v: usize, s: &VertexSet) -> usize {
        and_count(self.row(v), s.words())
    }

    pub fn degree_into(&self, v: usize, s: &VertexSet) -> Result<usize, GraphError> {
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
        }
        Ok(self.count_into(v, s))
    }

    /// `⋂ N(v) ∩ s`; an empty `vs` returns `s` itself.
    pub fn common_neighborhood(&self, vs: &[usize], s: &VertexSet) -> Result<VertexSet, GraphError> {
        for &v in vs {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
            }
        }
        Ok(self.common_within(vs, s))
    }

    pub fn common_within(&self, vs: &[usize], s: &VertexSet) -> VertexSet {
        let mut out = s.clone();
        for &v in vs {
            out.and_words(self.row(v));
        }
        out
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Number of edges with both ends in `s`.
    pub fn edges_within(&self, s: &VertexSet) -> usize {
        s.iter().map(|v| self.count_into(v, s)).sum::<usize>() / 2
    }

    pub fn edges_between(&self, a: &VertexSet, b: &VertexSet) -> usize {
        a.iter().map(|v| self.count_into(v, b)).sum()
    }

    pub fn bipartite_density(&self, a: &VertexSet, b: &VertexSet) -> Result<Rational64, GraphError> {
        if a.is_empty() || b.is_empty() {
            return Err(GraphError::EmptySide);
        }
        if !a.is_disjoint(b) {
            return Err(GraphError::Overlap);
        }
        let e = self.edges_between(a, b) as i64;
        Ok(Rational64::new(e, (a.len() * b.len()) as i64))
    }

    /// Same vertex ids, only edges inside `s` kept.
    pub fn restrict(&self, s: &VertexSet) -> Graph {
        let mut rows = vec![0u64; self.rows.len()];
        let mut m2 = 0;
        for v in s.iter() {
            let dst = &mut rows[v * self.w..(v + 1) * self.w];
            for (i, (d, r)) in dst.iter_mut().zip(self.row(v)).enumerate() {
                *d = r & s.words()[i];
                m2 += d.count_ones() as usize;
            }
        }
        Graph { n: self.n, w: self.w, rows, m: m2 / 2 }
    }

    /// Induced subgraph on `keep`, relabelled so `keep[i]` becomes `i`.
    pub fn restrict_relabel(&self, keep: &[usize]) -> Graph {
        let mut b = GraphBuilder::new(keep.len());
        for (i, &u) in keep.iter().enumerate() {
            for (j, &v) in keep.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    b.add_edge(i, j);
                }
            }
        }
        b.build()
    }

    pub fn union(&self, other: &Graph) -> Result<Graph, GraphError> {
        if self.n != other.n {
            return Err(GraphError::SizeMismatch(self.n, other.n));
        }
        let rows: Vec<u64> = self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect();
        let m = rows.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2;
        Ok(Graph { n: self.n, w: self.w, rows, m })
    }

    /// Union of several graphs of the same order.
    pub fn union_all(graphs: &[&Graph]) -> Result<Graph, GraphError> {
        let first = graphs.first().ok_or(GraphError::EmptySide)?;
        let mut acc = (*first).clone();
        for g in &graphs[1..] {
            acc = acc.union(g)?;
        }
        Ok(acc)
    }

    pub fn to_builder(&self) -> GraphBuilder {
        GraphBuilder { n: self.n, w: self.w, rows: self.rows.clone() }
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.m)
    }
}

/// Mutable construction phase of a [`Graph`].
#[derive(Clone)]
pub struct GraphBuilder {
    n: usize,
    w: usize,
    rows: Vec<u64>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        let w = words_for(n);
        GraphBuilder { n, w, rows: vec![0; n * w] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `uv`; returns false if it was already present. Panics on loops or bad ids.
    #[inline]
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        assert!(u != v, "self-loop at {u}");
        assert!(u < self.n && v < self.n, "edge ({u},{v}) out of range for n = {}", self.n);
        let fresh = !self.has_edge(u, v);
        self.rows[u * self.w + (v >> 6)] |= 1 << (v & 63);
        self.rows[v * self.w + (u >> 6)] |= 1 << (u & 63);
        fresh
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let had = self.has_edge(u, v);
        if had {
            self.rows[u * self.w + (v >> 6)] &= !(1 << (v & 63));
            self.rows[v * self.w + (u >> 6)] &= !(1 << (u & 63));
        }
        had
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.w + (v >> 6)] >> (v & 63) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v * self.w..(v + 1) * self.w].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degree_into(&self, v: usize, s: &VertexSet) -> usize {
        and_count(&self.rows[v * self.w..(v + 1) * self.w], s.words())
    }

    pub fn build(self) -> Graph {
        let m = self.rows.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2;
        Graph { n: self.n, w: self.w, rows: self.rows, m }
    }
}

/// Immutable simple digraph with bitset out-rows.
#[derive(Clone, PartialEq, Eq)]
pub struct DiGraph {
    n: usize,
    w: usize,
    rows: Vec<u64>,
    m: usize,
}

impl DiGraph {
    pub fn empty(n: usize) -> Self {
        DiGraphBuilder::new(n).build()
    }

    pub fn complete(n: usize) -> Self {
        let mut b = DiGraphBuilder::new(n);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    b.add_arc(u, v);
                }
            }
        }
        b.build()
    }

    pub fn from_arcs<I: IntoIterator<Item = (usize, usize)>>(n: usize, arcs: I) -> Self {
        let mut b = DiGraphBuilder::new(n);
        for (u, v) in arcs {
            b.add_arc(u, v);
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn out_row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.w..(v + 1) * self.w]
    }

    #[inline]
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.rows[u * self.w + (v >> 6)] >> (v & 63) & 1 == 1
    }

    pub fn out_neighbors(&self, v: usize) -> SetIter<'_> {
        let row = self.out_row(v);
        SetIter { words: row, idx: 0, cur: row.first().copied().unwrap_or(0) }
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.out_neighbors(u).map(move |v| (u, v)))
    }

    pub fn reversed(&self) -> DiGraph {
        DiGraph::from_arcs(self.n, self.arcs().map(|(u, v)| (v, u)))
    }
}

impl fmt::Debug for DiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiGraph(n={}, arcs={})", self.n, self.m)
    }
}

pub struct DiGraphBuilder {
    n: usize,
    w: usize,
    rows: Vec<u64>,
}

impl DiGraphBuilder {
    pub fn new(n: usize) -> Self {
        let w = words_for(n);
        DiGraphBuilder { n, w, rows: vec![0; n * w] }
    }

    pub fn add_arc(&mut self, u: usize, v: usize) -> bool {
        assert!(u != v, "self-loop at {u}");
        assert!(u < self.n && v < self.n, "arc ({u},{v}) out of range for n = {}", self.n);
        let slot = &mut self.rows[u * self.w + (v >> 6)];
        let fresh = *slot >> (v & 63) & 1 == 0;
        *slot |= 1 << (v & 63);
        fresh
    }

    pub fn build(self) -> DiGraph {
        let m = self.rows.iter().map(|w| w.count_ones() as usize).sum();
        DiGraph { n: self.n, w: self.w, rows: self.rows, m }
    }
}

fn parse_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_pair(line: usize, s: &str) -> Result<(usize, usize), GraphError> {
    let mut it = s.split_whitespace();
    let mut next = |what: &str| -> Result<usize, GraphError> {
        it.next()
            .ok_or_else(|| GraphError::Parse { line, msg: format!("missing {what}") })?
            .parse::<usize>()
            .map_err(|e| GraphError::Parse { line, msg: format!("bad {what}: {e}") })
    };
    let a = next("first field")?;
    let b = next("second field")?;
    if it.next().is_some() {
        return Err(GraphError::Parse { line, msg: "trailing fields".into() });
    }
    Ok((a, b))
}

/// Parses the `n m` / `u v` edge-list format.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = parse_lines(text);
    let (hl, header) = lines.next().ok_or(GraphError::Parse { line: 0, msg: "empty input".into() })?;
    if header.starts_with("digraph") {
        return Err(GraphError::Parse { line: hl, msg: "expected an undirected edge list".into() });
    }
    let (n, m) = parse_pair(hl, header)?;
    let mut b = GraphBuilder::new(n);
    let mut count = 0;
    for (ln, l) in lines {
        let (u, v) = parse_pair(ln, l)?;
        if u >= n || v >= n {
            return Err(GraphError::Parse { line: ln, msg: format!("endpoint out of range for n = {n}") });
        }
        if u == v {
            return Err(GraphError::Parse { line: ln, msg: "self-loop".into() });
        }
        if !b.add_edge(u, v) {
            return Err(GraphError::Parse { line: ln, msg: format!("duplicate edge {u} {v}") });
        }
        count += 1;
    }
    if count != m {
        return Err(GraphError::Parse { line: hl, msg: format!("header promises {m} edges, found {count}") });
    }
    Ok(b.build())
}

pub fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn parse_digraph_list(text: &str) -> Result<DiGraph, GraphError> {
    let mut lines = parse_lines(text);
    let (hl, header) = lines.next().ok_or(GraphError::Parse { line: 0, msg: "empty input".into() })?;
    let rest = header.strip_prefix("digraph").ok_or_else(|| GraphError::Parse { line: hl, msg: "expected `digraph n m` header".into() })?;
    let (n, m) = parse_pair(hl, rest)?;
    let mut b = DiGraphBuilder::new(n);
    let mut count = 0;
    for (ln, l) in lines {
        let (u, v) = parse_pair(ln, l)?;
        if u >= n || v >= n || u == v {
            return Err(GraphError::Parse { line: ln, msg: format!("bad arc {u} {v}") });
        }
        if !b.add_arc(u, v) {
            return Err(GraphError::Parse { line: ln, msg: format!("duplicate arc {u} {v}") });
        }
        count += 1;
    }
    if count != m {
        return Err(GraphError::Parse { line: hl, msg: format!("header promises {m} arcs, found {count}") });
    }
    Ok(b.build())
}

pub fn to_digraph_list(d: &DiGraph) -> String {
    let mut out = format!("digraph {} {}\n", d.n(), d.arc_count());
    for (u, v) in d.arcs() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn read_graph(path: &Path) -> Result<Graph, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text)
}
