//! Super-regular instances, the tuple hypergraphs over `U_1 x ... x U_k` and
//! random greedy transversal families of squared paths.
//!
//! Vertices of a generated instance are numbered `V = 0..n+4` followed by the
//! blocks `U_1, ..., U_k` of `m` vertices each. Position `i` of every tuple or
//! copy lies in `U_{i+1}`, and the copy is the square of the path `u_1 ... u_k`.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::Serialize;
use thiserror::Error;

use crate::generators::{gnp_between, sample_indices, GenError};
use crate::graph::{Graph, GraphBuilder, VertexSet};
use crate::report::{Budget, StageReport};
use crate::seed::{Rng, Seed};

const RESAMPLE_LIMIT: usize = 200;
const END_TUPLE_TRIES: usize = 2000;
const REJECTION_MISSES: usize = 20_000;

#[derive(Debug, Error, PartialEq)]
pub enum GadgetError {
    #[error("need k >= 2, got {0}")]
    Order(usize),
    #[error("density {0} outside (0, 1]")]
    Density(f64),
    #[error("need 0 <= 2*delta1 < delta0 < 1, got delta0 = {delta0}, delta1 = {delta1}")]
    Deltas { delta0: f64, delta1: f64 },
    #[error("no part size in [{lo}, {hi}] has n - m divisible by {modulus}")]
    NoPartSize { lo: f64, hi: f64, modulus: usize },
    #[error("resample limit exceeded: {0}")]
    ResampleLimit(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Generator(#[from] GenError),
}

#[derive(Clone, Debug)]
pub struct SuperRegularInstance {
    pub k: usize,
    /// `|V| - 4`.
    pub n: usize,
    /// Common size of the parts `U_i`.
    pub m: usize,
    pub d: f64,
    pub delta0: f64,
    pub delta1: f64,
    /// Deterministic graph on the whole vertex universe.
    pub graph: Graph,
    pub v: VertexSet,
    pub parts: Vec<VertexSet>,
    /// `[x, x']`; `x'` is the outer end of the path.
    pub x: [usize; 2],
    /// `[y, y']`; `y'` is the outer end of the path.
    pub y: [usize; 2],
}

/// The part size nearest the middle of `[(1-delta0) n, (1-delta1) n]` with
/// `n - m` divisible by `6k - 2`. Ties go to the smaller size.
pub fn part_size(k: usize, n: usize, delta0: f64, delta1: f64) -> Result<usize, GadgetError> {
    let modulus = 6 * k - 2;
    let lo = (1.0 - delta0) * n as f64;
    let hi = (1.0 - delta1) * n as f64;
    let mid = (lo + hi) / 2.0;
    (lo.ceil().max(1.0) as usize..=hi.floor() as usize)
        .filter(|&m| m <= n && (n - m) % modulus == 0)
        .min_by(|&a, &b| (a as f64 - mid).abs().total_cmp(&(b as f64 - mid).abs()).then(a.cmp(&b)))
        .ok_or(GadgetError::NoPartSize { lo, hi, modulus })
}

fn check_params(k: usize, d: f64, delta0: f64, delta1: f64) -> Result<(), GadgetError> {
    if k < 2 {
        return Err(GadgetError::Order(k));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(GadgetError::Density(d));
    }
    if !(delta1 >= 0.0 && 2.0 * delta1 < delta0 && delta0 < 1.0) {
        return Err(GadgetError::Deltas { delta0, delta1 });
    }
    Ok(())
}

/// Random bipartite graph between `left` and `right` at density `q`, resampled
/// until left degrees reach `floor_l` and right degrees reach `floor_r`.
fn sample_pair(
    b: &mut GraphBuilder,
    left: &[usize],
    right: &[usize],
    q: f64,
    floors: (f64, f64),
    rng: &mut Rng,
) -> Result<(), GadgetError> {
    let cols = right.len() as u64;
    for _ in 0..RESAMPLE_LIMIT {
        let mut dl = vec![0usize; left.len()];
        let mut dr = vec![0usize; right.len()];
        let mut edges = Vec::new();
        sample_indices(left.len() as u64 * cols, q, rng, |i| {
            let (a, c) = ((i / cols) as usize, (i % cols) as usize);
            dl[a] += 1;
            dr[c] += 1;
            edges.push((left[a], right[c]));
        });
        let ok = dl.iter().all(|&x| x as f64 >= floors.0) && dr.iter().all(|&x| x as f64 >= floors.1);
        if ok {
            for (u, v) in edges {
                b.add_edge(u, v);
            }
            return Ok(());
        }
    }
    Err(GadgetError::ResampleLimit("degree floors of a random pair".into()))
}

/// Vertices of `part` adjacent to both members of `pair`.
fn tuple_common(g: &Graph, pair: [usize; 2], part: &VertexSet) -> VertexSet {
    g.common_within(&pair, part)
}

impl SuperRegularInstance {
    /// Wraps explicitly given sets; checks sizes, disjointness, degree floors
    /// and the end-tuple condition.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        graph: Graph,
        v: VertexSet,
        parts: Vec<VertexSet>,
        x: [usize; 2],
        y: [usize; 2],
        d: f64,
        delta0: f64,
        delta1: f64,
    ) -> Result<Self, GadgetError> {
        let k = parts.len();
        check_params(k, d, delta0, delta1)?;
        if v.len() < 5 {
            return Err(GadgetError::Invalid("V needs at least five vertices".into()));
        }
        let m = parts[0].len();
        if parts.iter().any(|p| p.len() != m) {
            return Err(GadgetError::Invalid("parts differ in size".into()));
        }
        let mut seen = v.clone();
        for p in &parts {
            if !seen.is_disjoint(p) {
                return Err(GadgetError::Invalid("sets overlap".into()));
            }
            seen.union_with(p);
        }
        let ends = [x[0], x[1], y[0], y[1]];
        let distinct = (0..4).all(|i| (i + 1..4).all(|j| ends[i] != ends[j]));
        if !distinct || ends.iter().any(|&e| !v.contains(e)) {
            return Err(GadgetError::Invalid("end tuples must be four distinct vertices of V".into()));
        }
        let inst = SuperRegularInstance { k, n: v.len() - 4, m, d, delta0, delta1, graph, v, parts, x, y };
        let problems = inst.violations();
        if let Some(p) = problems.first() {
            return Err(GadgetError::Invalid(p.clone()));
        }
        Ok(inst)
    }

    /// Degree-floor and end-tuple violations; empty for a valid instance.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (g, d) = (&self.graph, self.d);
        for (i, p) in self.parts.iter().enumerate() {
            if let Some(v) = self.v.iter().find(|&v| (g.count_into(v, p) as f64) < d * self.m as f64) {
                out.push(format!("vertex {v} of V has fewer than d*m neighbours in part {i}"));
            }
            if let Some(u) = p.iter().find(|&u| (g.count_into(u, &self.v) as f64) < d * self.v.len() as f64) {
                out.push(format!("vertex {u} of part {i} has fewer than d*|V| neighbours in V"));
            }
            let need = 0.5 * d * d * self.n as f64;
            for (name, t) in [("x", self.x), ("y", self.y)] {
                if (tuple_common(g, t, p).len() as f64) < need {
                    out.push(format!("end tuple {name} has too few common neighbours in part {i}"));
                }
            }
        }
        out
    }

    pub fn universe(&self) -> usize {
        self.graph.n()
    }

    pub fn part_of(&self, u: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.contains(u))
    }

    /// All vertices of the parts.
    pub fn u_all(&self) -> VertexSet {
        let mut s = VertexSet::empty(self.universe());
        for p in &self.parts {
            s.union_with(p);
        }
        s
    }

    /// Common neighbourhood of `vs` inside `V`.
    pub fn v_common(&self, vs: &[usize]) -> VertexSet {
        self.graph.common_within(vs, &self.v)
    }
}

/// Random bipartite pairs `(V, U_i)` at density `min(2d, 1)` with the
/// minimum-degree half of super-regularity enforced by resampling.
pub fn gen_super_regular_instance(
    k: usize,
    n: usize,
    d: f64,
    delta0: f64,
    delta1: f64,
    seed: Seed,
) -> Result<SuperRegularInstance, GadgetError> {
    check_params(k, d, delta0, delta1)?;
    let m = part_size(k, n, delta0, delta1)?;
    let nv = n + 4;
    let total = nv + k * m;
    let vlist: Vec<usize> = (0..nv).collect();
    let mut rng = seed.rng();
    let mut b = GraphBuilder::new(total);
    let q = (2.0 * d).min(1.0);
    let mut parts = Vec::with_capacity(k);
    for i in 0..k {
        let lo = nv + i * m;
        let ulist: Vec<usize> = (lo..lo + m).collect();
        sample_pair(&mut b, &vlist, &ulist, q, (d * m as f64, d * nv as f64), &mut rng)?;
        parts.push(VertexSet::range(total, lo, lo + m));
    }
    let graph = b.build();
    let v = VertexSet::range(total, 0, nv);
    let need = 0.5 * d * d * n as f64;
    let good = |t: [usize; 2]| parts.iter().all(|p| tuple_common(&graph, t, p).len() as f64 >= need);
    for _ in 0..END_TUPLE_TRIES {
        let mut pick = vlist.clone();
        let (chosen, _) = pick.partial_shuffle(&mut rng, 4);
        let (x, y) = ([chosen[0], chosen[1]], [chosen[2], chosen[3]]);
        if good(x) && good(y) {
            return Ok(SuperRegularInstance { k, n, m, d, delta0, delta1, graph, v, parts, x, y });
        }
    }
    Err(GadgetError::ResampleLimit("end tuples".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityDiagnostics {
    /// Smallest degree across a pair divided by the opposite side's size.
    pub min_degree_ratio: f64,
    /// Largest `|d(X, Y) - d(V, U_i)|` over the sampled subset pairs.
    pub max_density_gap: f64,
    pub samples: usize,
}

/// Minimum-degree half plus densities of random subset pairs with at least an
/// `eps` fraction of each side.
pub fn regularity_diagnostics(inst: &SuperRegularInstance, eps: f64, samples: usize, rng: &mut Rng) -> RegularityDiagnostics {
    let g = &inst.graph;
    let vlist = inst.v.to_vec();
    let mut min_ratio = f64::INFINITY;
    let mut gap: f64 = 0.0;
    for p in &inst.parts {
        let ulist = p.to_vec();
        for &v in &vlist {
            min_ratio = min_ratio.min(g.count_into(v, p) as f64 / p.len() as f64);
        }
        for &u in &ulist {
            min_ratio = min_ratio.min(g.count_into(u, &inst.v) as f64 / inst.v.len() as f64);
        }
        let base = g.edges_between(&inst.v, p) as f64 / (vlist.len() * ulist.len()) as f64;
        for _ in 0..samples {
            let sx = rng.random_range(((eps * vlist.len() as f64).ceil() as usize).max(1)..=vlist.len());
            let sy = rng.random_range(((eps * ulist.len() as f64).ceil() as usize).max(1)..=ulist.len());
            let mut a = vlist.clone();
            let mut c = ulist.clone();
            let xs = VertexSet::from_iter(g.n(), a.partial_shuffle(rng, sx).0.iter().copied());
            let ys = VertexSet::from_iter(g.n(), c.partial_shuffle(rng, sy).0.iter().copied());
            let dens = g.edges_between(&xs, &ys) as f64 / (sx * sy) as f64;
            gap = gap.max((dens - base).abs());
        }
    }
    RegularityDiagnostics { min_degree_ratio: min_ratio, max_density_gap: gap, samples: samples * inst.parts.len() }
}

/// Calls `f` on every tuple with position `i` in `cands[i]` spanning the square
/// of a path in `g`. Stops early when `f` returns false; returns false then.
pub fn for_each_square_tuple(g: &Graph, cands: &[VertexSet], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(g: &Graph, cands: &[VertexSet], seq: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let i = seq.len();
        if i == cands.len() {
            return f(seq);
        }
        let mut c = cands[i].clone();
        for back in 1..=2.min(i) {
            c.and_words(g.row(seq[i - back]));
        }
        for u in c.iter() {
            seq.push(u);
            let go = rec(g, cands, seq, f);
            seq.pop();
            if !go {
                return false;
            }
        }
        true
    }
    rec(g, cands, &mut Vec::with_capacity(cands.len()), f)
}

/// The tuple hypergraph: a tuple is an edge when its members have at least
/// `floor` common neighbours in `within` and, if a support graph is present,
/// span the square of a path in it. Edges are tested, never listed in full.
#[derive(Clone, Debug)]
pub struct AuxHypergraph<'a> {
    pub inst: &'a SuperRegularInstance,
    pub within: VertexSet,
    pub floor: f64,
    pub support: Option<Graph>,
}

/// `F`: common neighbourhood in `V` of size at least `d^k n / 2`.
pub fn build_f(inst: &SuperRegularInstance) -> AuxHypergraph<'_> {
    AuxHypergraph { inst, within: inst.v.clone(), floor: f_floor(inst), support: None }
}

fn f_floor(inst: &SuperRegularInstance) -> f64 {
    0.5 * inst.d.powi(inst.k as i32) * inst.n as f64
}

/// `F_X`: edges of `F` with at least `d^k |X| / 2` common neighbours in `X`.
pub fn build_f_good_for<'a>(inst: &'a SuperRegularInstance, x: &VertexSet) -> AuxHypergraph<'a> {
    AuxHypergraph { inst, within: x.clone(), floor: 0.5 * inst.d.powi(inst.k as i32) * x.len() as f64, support: None }
}

/// `F~`: edges of `F` supported by a fresh `G(U_1, ..., U_k, p)`.
pub fn sample_f_tilde(inst: &SuperRegularInstance, p: f64, seed: Seed) -> Result<AuxHypergraph<'_>, GenError> {
    let overlay = gnp_between(inst.universe(), &inst.parts, p, seed)?;
    Ok(build_f(inst).with_support(overlay))
}

impl<'a> AuxHypergraph<'a> {
    pub fn with_support(mut self, g: Graph) -> Self {
        self.support = Some(g);
        self
    }

    pub fn common_count(&self, t: &[usize]) -> usize {
        self.inst.graph.common_within(t, &self.within).len()
    }

    fn in_f(&self, t: &[usize]) -> bool {
        let g = &self.inst.graph;
        if (g.common_within(t, &self.inst.v).len() as f64) < f_floor(self.inst) {
            return false;
        }
        self.within == self.inst.v || self.common_count(t) as f64 >= self.floor
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        let k = self.inst.k;
        if t.len() != k || t.iter().enumerate().any(|(i, &u)| !self.inst.parts[i].contains(u)) {
            return false;
        }
        if let Some(s) = &self.support {
            let pattern = (0..k).all(|i| (i + 1..(i + 3).min(k)).all(|j| s.has_edge(t[i], t[j])));
            if !pattern {
                return false;
            }
        }
        self.in_f(t)
    }

    /// Every edge with position `i` in `cands[i]`. Needs a support graph.
    pub fn for_each_supported_edge(&self, cands: &[VertexSet], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let s = self.support.as_ref().expect("edges are listed only through a support graph");
        for_each_square_tuple(s, cands, &mut |t| if self.in_f(t) { f(t) } else { true })
    }

    /// Exact edge count: through the support graph when present, otherwise by
    /// scanning all pairs, which is offered for `k = 2` only.
    pub fn edge_count(&self) -> Option<u64> {
        if self.support.is_some() {
            let mut c = 0u64;
            self.for_each_supported_edge(&self.inst.parts, &mut |_| {
                c += 1;
                true
            });
            return Some(c);
        }
        if self.inst.k != 2 {
            return None;
        }
        Some(self.pair_degrees().iter().map(|&x| x as u64).sum())
    }

    /// Degrees of the vertices of `U_1` for `k = 2` without support.
    fn pair_degrees(&self) -> Vec<usize> {
        let g = &self.inst.graph;
        let f = build_f(self.inst);
        let second: Vec<(VertexSet, VertexSet)> =
            self.inst.parts[1].iter().map(|u| (g.common_within(&[u], &f.within), g.common_within(&[u], &self.within))).collect();
        self.inst.parts[0]
            .iter()
            .map(|u| {
                let nf = g.common_within(&[u], &f.within);
                let nx = g.common_within(&[u], &self.within);
                second
                    .iter()
                    .filter(|(a, b)| nf.intersection_len(a) as f64 >= f.floor && nx.intersection_len(b) as f64 >= self.floor)
                    .count()
            })
            .collect()
    }

    /// Minimum degree over both parts for `k = 2` without support.
    pub fn min_degree(&self) -> Option<usize> {
        if self.inst.k != 2 || self.support.is_some() {
            return None;
        }
        let g = &self.inst.graph;
        let f = build_f(self.inst);
        let side = |a: usize, b: usize| -> usize {
            let other: Vec<(VertexSet, VertexSet)> =
                self.inst.parts[b].iter().map(|u| (g.common_within(&[u], &f.within), g.common_within(&[u], &self.within))).collect();
            self.inst.parts[a]
                .iter()
                .map(|u| {
                    let nf = g.common_within(&[u], &f.within);
                    let nx = g.common_within(&[u], &self.within);
                    other
                        .iter()
                        .filter(|(p, q)| nf.intersection_len(p) as f64 >= f.floor && nx.intersection_len(q) as f64 >= self.floor)
                        .count()
                })
                .min()
                .unwrap_or(0)
        };
        Some(side(0, 1).min(side(1, 0)))
    }

    /// Fraction of `samples` uniform tuples that are edges.
    pub fn sampled_density(&self, samples: usize, rng: &mut Rng) -> f64 {
        let lists: Vec<Vec<usize>> = self.inst.parts.iter().map(|p| p.to_vec()).collect();
        let hits = (0..samples)
            .filter(|_| {
                let t: Vec<usize> = lists.iter().map(|l| l[rng.random_range(0..l.len())]).collect();
                self.contains(&t)
            })
            .count();
        hits as f64 / samples.max(1) as f64
    }
}

/// Pairwise disjoint transversal copies with their common neighbourhoods in `V`.
#[derive(Clone, Debug, Serialize)]
pub struct TransversalFamily {
    pub copies: Vec<Vec<usize>>,
    /// For each copy, the vertices of `V` adjacent to all of it.
    #[serde(skip)]
    pub links: Vec<VertexSet>,
    pub target: usize,
    pub report: StageReport,
}

impl TransversalFamily {
    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    /// Smallest number of copies adjacent to a vertex of `V`.
    pub fn min_v_degree(&self, inst: &SuperRegularInstance) -> usize {
        inst.v.iter().map(|v| self.links.iter().filter(|l| l.contains(v)).count()).min().unwrap_or(0)
    }

    pub fn min_copy_degree(&self) -> usize {
        self.links.iter().map(VertexSet::len).min().unwrap_or(0)
    }

    pub fn is_disjoint_family(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.copies.iter().flatten().all(|&u| seen.insert(u))
    }
}

/// `d^{k+1} 2^{-k-3} |V|`: the floor on the number of `V`-vertices adjacent to a copy.
pub fn copy_degree_floor(inst: &SuperRegularInstance) -> f64 {
    inst.d.powi(inst.k as i32 + 1) * 2f64.powi(-(inst.k as i32) - 3) * inst.v.len() as f64
}

/// Vertices with constant-time uniform sampling and removal.
struct Pool {
    list: Vec<usize>,
    pos: std::collections::HashMap<usize, usize>,
}

impl Pool {
    fn new(items: Vec<usize>) -> Self {
        let pos = items.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        Pool { list: items, pos }
    }

    fn remove(&mut self, u: usize) {
        if let Some(i) = self.pos.remove(&u) {
            self.list.swap_remove(i);
            if i < self.list.len() {
                self.pos.insert(self.list[i], i);
            }
        }
    }

    fn insert(&mut self, u: usize) {
        if !self.pos.contains_key(&u) {
            self.pos.insert(u, self.list.len());
            self.list.push(u);
        }
    }

    fn sample(&self, rng: &mut Rng) -> Option<usize> {
        (!self.list.is_empty()).then(|| self.list[rng.random_range(0..self.list.len())])
    }
}

struct Chosen {
    copies: Vec<Vec<usize>>,
    owner: Vec<usize>,
    free: Vec<Pool>,
    free_sets: Vec<VertexSet>,
}

impl Chosen {
    fn add(&mut self, t: Vec<usize>) -> usize {
        let idx = self.copies.len();
        for (i, &u) in t.iter().enumerate() {
            self.owner[u] = idx;
            self.free[i].remove(u);
            self.free_sets[i].remove(u);
        }
        self.copies.push(t);
        idx
    }

    fn evict(&mut self, idx: usize) {
        let t = self.copies.swap_remove(idx);
        for (i, &u) in t.iter().enumerate() {
            self.owner[u] = usize::MAX;
            self.free[i].insert(u);
            self.free_sets[i].insert(u);
        }
        if idx < self.copies.len() {
            for &u in &self.copies[idx] {
                self.owner[u] = idx;
            }
        }
    }
}

const STAGE: &str = "transversal";

/// Random greedy transversal family in `f_tilde` avoiding `avoid`.
///
/// Each step adds an edge drawn uniformly from those disjoint from the chosen
/// copies: first by rejection sampling over free tuples, then, once misses
/// pile up, from the explicit list of remaining edges. If the greedy process
/// stalls below `target`, a budgeted walk inserts an edge that clashes with at
/// most one chosen copy and evicts that copy.
pub fn transversal_family(
    f_tilde: &AuxHypergraph<'_>,
    avoid: &VertexSet,
    target: usize,
    rng: &mut Rng,
    budget: &mut Budget,
) -> Result<TransversalFamily, StageReport> {
    let inst = f_tilde.inst;
    let k = inst.k;
    let free_sets: Vec<VertexSet> = inst.parts.iter().map(|p| p.difference(avoid)).collect();
    let mut st = Chosen {
        copies: Vec::new(),
        owner: vec![usize::MAX; inst.universe()],
        free: free_sets.iter().map(|s| Pool::new(s.to_vec())).collect(),
        free_sets,
    };
    let (mut rejection_hits, mut listed, mut walk_steps, mut evictions) = (0usize, 0usize, 0usize, 0usize);

    let mut misses = 0;
    while st.copies.len() < target && misses < REJECTION_MISSES {
        let t: Option<Vec<usize>> = st.free.iter().map(|p| p.sample(rng)).collect();
        let Some(t) = t else { break };
        if f_tilde.contains(&t) {
            st.add(t);
            rejection_hits += 1;
            misses = 0;
        } else {
            misses += 1;
        }
    }

    if st.copies.len() < target && f_tilde.support.is_some() {
        let mut edges = Vec::new();
        f_tilde.for_each_supported_edge(&st.free_sets, &mut |t| {
            edges.push(t.to_vec());
            true
        });
        while st.copies.len() < target && !edges.is_empty() {
            let i = rng.random_range(0..edges.len());
            let e = edges.swap_remove(i);
            if e.iter().all(|&u| st.owner[u] == usize::MAX) {
                st.add(e);
                listed += 1;
            }
        }
    }

    let mut tabu = usize::MAX;
    while st.copies.len() < target && f_tilde.support.is_some() && budget.tick() {
        walk_steps += 1;
        let part = rng.random_range(0..k);
        let Some(w) = st.free[part].sample(rng) else { break };
        let mut cands: Vec<VertexSet> = inst.parts.iter().map(|p| p.difference(avoid)).collect();
        cands[part] = VertexSet::from_iter(inst.universe(), [w]);
        let mut clean = Vec::new();
        let mut single = Vec::new();
        f_tilde.for_each_supported_edge(&cands, &mut |t| {
            let mut owners: Vec<usize> = t.iter().map(|&u| st.owner[u]).filter(|&o| o != usize::MAX).collect();
            owners.dedup();
            owners.sort_unstable();
            owners.dedup();
            match owners.as_slice() {
                [] => clean.push(t.to_vec()),
                [o] if *o != tabu => single.push((t.to_vec(), *o)),
                _ => {}
            }
            true
        });
        if let Some(t) = clean.choose(rng) {
            st.add(t.clone());
            tabu = usize::MAX;
        } else if let Some((t, o)) = single.choose(rng).cloned() {
            st.evict(o);
            tabu = st.add(t);
            evictions += 1;
        }
    }

    let size = st.copies.len();
    let report = StageReport::ok(STAGE)
        .stat("size", size as f64)
        .stat("target", target as f64)
        .stat("rejection_hits", rejection_hits as f64)
        .stat("listed_hits", listed as f64)
        .stat("walk_steps", walk_steps as f64)
        .stat("evictions", evictions as f64);
    if size < target {
        let mut r = report;
        r.success = false;
        r.unmet = Some("transversal family starved below target".into());
        return Err(r);
    }
    let links = st.copies.iter().map(|c| inst.v_common(c)).collect();
    Ok(TransversalFamily { copies: st.copies, links, target, report })
}

/// Samples `G(U_1, ..., U_k, p)` and runs [`transversal_family`] towards
/// `floor(target_fraction * m)` copies.
pub fn random_greedy_transversal(
    inst: &SuperRegularInstance,
    p: f64,
    target_fraction: f64,
    seed: Seed,
    budget: &mut Budget,
) -> Result<TransversalFamily, StageReport> {
    let f_tilde = sample_f_tilde(inst, p, seed.derive("transversal-overlay", 0)).map_err(|e| StageReport::failed(STAGE, e.to_string()))?;
    let target = (target_fraction * inst.m as f64).floor() as usize;
    let mut rng = seed.derive("transversal-search", 0).rng();
    transversal_family(&f_tilde, &VertexSet::empty(inst.universe()), target, &mut rng, budget)
}
