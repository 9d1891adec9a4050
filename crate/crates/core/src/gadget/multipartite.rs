//! Square Hamilton paths through a super-regular instance `V, U_1, ..., U_k`.
//!
//! Stages: two anchor copies next to the end tuples, a transversal family in
//! the random `k`-partite graph, a directed path of copies found by a random
//! depth-first search, absorbing gadgets for the left-over copies and
//! `U`-vertices, and a matching that puts one `V`-vertex between consecutive
//! copies of the directed path.
//!
//! Counting. With `M` copies in the family, `q = k(m - 2 - M)` uncovered
//! `U`-vertices and `r` filler gadgets, the gadget chains pass through
//! `s = q + r - 2` left-over copies and the directed path has `t = M - s`
//! copies. Absorbing gadgets use four `V`-vertices, fillers use two and the
//! path uses `t - 1`, so `V` balances exactly when `M + 3q + r = n - 1`.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::Serialize;

use super::hypergraph::{build_f, transversal_family, SuperRegularInstance, TransversalFamily};
use super::linked::{find_linked_squares, LinkedOutcome, LinkedSquares};
use crate::generators::{gnp_between, gnp_on};
use crate::graph::{DiGraph, DiGraphBuilder, Graph, GraphBuilder, VertexSet};
use crate::matching::{hall_violator, hopcroft_karp};
use crate::powers::verify_square_path;
use crate::report::{Budget, StageReport, Stopwatch};
use crate::seed::{Rng, Seed};

#[derive(Clone, Debug, Serialize)]
pub struct GadgetConfig {
    /// Dead-end cap of the path search as a fraction of `n`.
    pub eps_prime: f64,
    pub search_budget: u64,
    pub transversal_budget: u64,
    pub retries: usize,
    /// Independent restarts of the path search on the same link graphs.
    pub dfs_attempts: usize,
}

impl Default for GadgetConfig {
    fn default() -> Self {
        GadgetConfig { eps_prime: 0.02, search_budget: 200_000, transversal_budget: 2_000_000, retries: 20, dfs_attempts: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bookkeeping {
    /// `M`, copies in the transversal family.
    pub family: usize,
    /// `q`, part vertices left uncovered by the family and the anchors.
    pub leftover_vertices: usize,
    /// `r`, gadgets that absorb no part vertex.
    pub fillers: usize,
    /// `s`, family copies off the directed path.
    pub leftover_copies: usize,
    /// `t`, copies on the directed path.
    pub path_len: usize,
}

/// Smallest family size with a nonnegative filler count, and the counts it
/// forces. `None` when some count would be negative or the path empty.
pub fn bookkeeping(k: usize, n: usize, m: usize) -> Option<Bookkeeping> {
    if m < 2 || k < 2 {
        return None;
    }
    let (k, n, m) = (k as i64, n as i64, m as i64);
    let num = 3 * k * (m - 2) - n + 1;
    let den = 3 * k - 1;
    let fam = (num + den - 1).div_euclid(den).max(0);
    if fam > m - 2 {
        return None;
    }
    let q = k * (m - 2 - fam);
    let r = n - 1 - fam - 3 * q;
    let s = q + r - 2;
    let t = fam - s;
    if r < 0 || s < 0 || t < 1 {
        return None;
    }
    debug_assert_eq!(4 + (t - 1) + 4 * q + 2 * r, n + 4);
    debug_assert_eq!(k * (2 + fam) + q, k * m);
    Some(Bookkeeping {
        family: fam as usize,
        leftover_vertices: q as usize,
        fillers: r as usize,
        leftover_copies: s as usize,
        path_len: t as usize,
    })
}

/// `d^{2k+2} 2^{-2k-7} n`: common `V`-neighbours needed for two copies to be linked.
pub fn link_threshold(inst: &SuperRegularInstance) -> f64 {
    let k = inst.k as i32;
    inst.d.powi(2 * k + 2) * 2f64.powi(-2 * k - 7) * inst.n as f64
}

/// `d^5 n / 2`: common `V`-neighbours of the five vertices around an absorbed vertex.
pub fn absorb_threshold(inst: &SuperRegularInstance) -> f64 {
    0.5 * inst.d.powi(5) * inst.n as f64
}

#[derive(Clone, Debug)]
pub struct LinkGraphs {
    /// Undirected, on family indices.
    pub fstar: Graph,
    /// Arc `(a, b)` iff `ab` is in `fstar` and the last vertex of copy `a` is
    /// adjacent to the first vertex of copy `b` in the random graph.
    pub fbar: DiGraph,
    pub threshold: f64,
}

impl LinkGraphs {
    /// Arcs of `fbar` all lie on edges of `fstar`.
    pub fn is_consistent(&self) -> bool {
        self.fbar.arcs().all(|(a, b)| self.fstar.has_edge(a, b))
    }
}

pub fn build_linkgraphs(family: &TransversalFamily, inst: &SuperRegularInstance, arcs: &Graph) -> LinkGraphs {
    let n = family.len();
    let thr = link_threshold(inst);
    let mut b = GraphBuilder::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if family.links[i].intersection_len(&family.links[j]) as f64 >= thr {
                b.add_edge(i, j);
            }
        }
    }
    let fstar = b.build();
    let mut first_of = vec![usize::MAX; inst.universe()];
    for (i, c) in family.copies.iter().enumerate() {
        first_of[c[0]] = i;
    }
    let mut d = DiGraphBuilder::new(n);
    for (i, c) in family.copies.iter().enumerate() {
        for w in arcs.neighbors(c[inst.k - 1]) {
            let j = first_of[w];
            if j != usize::MAX && j != i && fstar.has_edge(i, j) {
                d.add_arc(i, j);
            }
        }
    }
    LinkGraphs { fstar, fbar: d.build(), threshold: thr }
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectedPath {
    pub path: Vec<usize>,
    pub dead_ends: usize,
    pub revisited: usize,
    pub steps: usize,
}

const DFS: &str = "directed_path";

/// Depth-first random greedy search for a directed path on `t` copies.
///
/// The current path is the search stack. The top copy extends to a uniformly
/// chosen out-neighbour that is neither on the path nor a dead end; a copy
/// with no such neighbour becomes a dead end and its predecessor is marked as
/// revisited. The search fails once `dead_end_cap` dead ends accumulate.
pub fn dfs_random_greedy_path(links: &LinkGraphs, t: usize, dead_end_cap: usize, rng: &mut Rng) -> Result<DirectedPath, StageReport> {
    let n = links.fbar.n();
    if t == 0 || t > n {
        return Err(StageReport::failed(DFS, "precondition: target length outside 1..=family size")
            .stat("target", t as f64)
            .stat("family", n as f64));
    }
    let mut path: Vec<usize> = Vec::with_capacity(t);
    let mut open = VertexSet::full(n);
    let mut dead = VertexSet::empty(n);
    let mut revisited = VertexSet::empty(n);
    let mut steps = 0usize;
    while path.len() < t && dead.len() < dead_end_cap {
        steps += 1;
        let Some(&top) = path.last() else {
            let Some(&h) = open.to_vec().choose(rng) else { break };
            open.remove(h);
            path.push(h);
            continue;
        };
        let mut next = open.clone();
        next.and_words(links.fbar.out_row(top));
        if next.is_empty() {
            path.pop();
            dead.insert(top);
            if let Some(&prev) = path.last() {
                revisited.insert(prev);
            }
        } else {
            let h = next.nth(rng.random_range(0..next.len())).expect("index below length");
            open.remove(h);
            path.push(h);
        }
    }
    if path.len() == t {
        Ok(DirectedPath { path, dead_ends: dead.len(), revisited: revisited.len(), steps })
    } else {
        Err(StageReport::failed(DFS, "dead ends reached the cap before the path reached its target")
            .stat("dead_ends", dead.len() as f64)
            .stat("path_len", path.len() as f64)
            .stat("target", t as f64))
    }
}

/// Rechecks each consecutive pair against the arc rule itself.
pub fn verify_link_path(path: &[usize], family: &TransversalFamily, inst: &SuperRegularInstance, arcs: &Graph) -> bool {
    let thr = link_threshold(inst);
    path.windows(2).all(|w| {
        let (a, b) = (&family.copies[w[0]], &family.copies[w[1]]);
        let mut joint = a.clone();
        joint.extend_from_slice(b);
        arcs.has_edge(a[inst.k - 1], b[0]) && inst.v_common(&joint).len() as f64 >= thr
    })
}

fn linked(inst: &SuperRegularInstance, a: &[usize], b: &[usize]) -> bool {
    let mut joint = a.to_vec();
    joint.extend_from_slice(b);
    inst.v_common(&joint).len() as f64 >= link_threshold(inst)
}

fn tail2(c: &[usize]) -> [usize; 2] {
    [c[c.len() - 2], c[c.len() - 1]]
}

fn head2(c: &[usize]) -> [usize; 2] {
    [c[0], c[1]]
}

#[derive(Clone, Debug)]
pub struct Absorption {
    /// From the first anchor up to, not including, the first path copy.
    pub head: Vec<usize>,
    /// From after the last path copy to the second anchor, inclusive.
    pub tail: Vec<usize>,
    pub used_v: VertexSet,
    pub report: StageReport,
}

const ABSORB: &str = "absorb";

/// Orders `rest` into a chain from `from` to `to` with linked neighbours by
/// random insertion, restarting on a dead end.
fn insertion_chain(
    inst: &SuperRegularInstance,
    from: &[usize],
    rest: &[Vec<usize>],
    to: &[usize],
    tries: usize,
    rng: &mut Rng,
) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..rest.len()).collect();
    'attempt: for _ in 0..tries.max(1) {
        order.shuffle(rng);
        // Chain of indices into rest; from/to are implicit ends.
        let mut chain: Vec<usize> = Vec::with_capacity(rest.len());
        for &c in &order {
            let node = |i: usize, chain: &[usize]| -> &[usize] {
                if i == 0 {
                    from
                } else if i == chain.len() + 1 {
                    to
                } else {
                    &rest[chain[i - 1]]
                }
            };
            let slots: Vec<usize> = (0..=chain.len())
                .filter(|&i| linked(inst, node(i, &chain), &rest[c]) && linked(inst, &rest[c], node(i + 1, &chain)))
                .collect();
            let Some(&i) = slots.choose(rng) else { continue 'attempt };
            chain.insert(i, c);
        }
        return Some(chain);
    }
    None
}

/// Builds the two connecting chains. Gadget slots are consecutive pairs along
/// `anchor_x -> [one left-over copy] -> first path copy` and
/// `last path copy -> [the other left-over copies] -> anchor_y`. Each vertex of
/// `z` is matched to a slot whose five surrounding vertices have many common
/// `V`-neighbours; unmatched slots take fillers. `V`-paths come from `g2`.
#[allow(clippy::too_many_arguments)]
pub fn absorb_leftover(
    inst: &SuperRegularInstance,
    family: &TransversalFamily,
    path: &[usize],
    anchors: (&[usize], &[usize]),
    z: &[usize],
    g2: &Graph,
    cfg: &GadgetConfig,
    rng: &mut Rng,
) -> Result<Absorption, StageReport> {
    let on_path: std::collections::HashSet<usize> = path.iter().copied().collect();
    let left: Vec<Vec<usize>> = (0..family.len()).filter(|i| !on_path.contains(i)).map(|i| family.copies[i].clone()).collect();
    let s = left.len();
    if z.len() > s + 2 {
        return Err(StageReport::failed(ABSORB, "precondition: more vertices to absorb than gadget slots")
            .stat("absorb", z.len() as f64)
            .stat("slots", (s + 2) as f64));
    }
    let (hx, hy) = anchors;
    let first = &family.copies[path[0]];
    let last = &family.copies[*path.last().expect("nonempty path")];

    let mut chain1: Vec<Vec<usize>> = vec![hx.to_vec()];
    let mut rest = left.clone();
    if s > 0 {
        let ok: Vec<usize> = (0..s).filter(|&i| linked(inst, hx, &left[i]) && linked(inst, &left[i], first)).collect();
        let Some(&i) = ok.choose(rng) else {
            return Err(StageReport::failed(ABSORB, "no left-over copy links the first anchor to the path"));
        };
        chain1.push(rest.swap_remove(i));
    }
    chain1.push(first.clone());
    let Some(order) = insertion_chain(inst, last, &rest, hy, cfg.retries, rng) else {
        return Err(StageReport::failed(ABSORB, "no linked ordering of the left-over copies").stat("left_over", rest.len() as f64));
    };
    let mut chain2: Vec<Vec<usize>> = vec![last.clone()];
    chain2.extend(order.iter().map(|&i| rest[i].clone()));
    chain2.push(hy.to_vec());

    let slots: Vec<(&[usize], &[usize])> = chain1.windows(2).chain(chain2.windows(2)).map(|w| (w[0].as_slice(), w[1].as_slice())).collect();
    debug_assert_eq!(slots.len(), s + 2);

    let floor = absorb_threshold(inst);
    let adj: Vec<Vec<usize>> = z
        .iter()
        .map(|&w| {
            (0..slots.len())
                .filter(|&j| {
                    let (a, b) = slots[j];
                    let five = [tail2(a)[0], tail2(a)[1], w, head2(b)[0], head2(b)[1]];
                    inst.v_common(&five).len() as f64 >= floor
                })
                .collect()
        })
        .collect();
    let m = hopcroft_karp(&adj, slots.len());
    if let Some((viol, nb)) = hall_violator(&adj, &m) {
        return Err(StageReport::failed(ABSORB, "Hall condition fails between absorbed vertices and gadget slots")
            .stat("matched", m.size as f64)
            .stat("violator", viol.len() as f64)
            .stat("violator_neighbourhood", nb.len() as f64));
    }
    let mut slot_z: Vec<Option<usize>> = vec![None; slots.len()];
    for (i, r) in m.left_to_right.iter().enumerate() {
        slot_z[r.expect("left-perfect")] = Some(z[i]);
    }

    let mut avail = inst.v.clone();
    for e in [inst.x[0], inst.x[1], inst.y[0], inst.y[1]] {
        avail.remove(e);
    }
    let g = &inst.graph;
    let mut gadgets: Vec<Vec<usize>> = Vec::with_capacity(slots.len());
    for (j, &(a, b)) in slots.iter().enumerate() {
        let [a1, a2] = tail2(a);
        let [b1, b2] = head2(b);
        let query = match slot_z[j] {
            Some(w) => LinkedSquares {
                segments: vec![
                    vec![g.common_within(&[a1, a2, w], &avail), g.common_within(&[a2, w], &avail)],
                    vec![g.common_within(&[w, b1], &avail), g.common_within(&[w, b1, b2], &avail)],
                ],
                linked: vec![true],
            },
            None => LinkedSquares {
                segments: vec![vec![g.common_within(&[a1, a2, b1], &avail), g.common_within(&[a2, b1, b2], &avail)]],
                linked: vec![],
            },
        };
        let mut found = None;
        for _ in 0..cfg.retries.max(1) {
            let mut budget = Budget::new(cfg.search_budget);
            match find_linked_squares(&query, g2, rng, &mut budget, None) {
                LinkedOutcome::Found(segs) => {
                    found = Some(segs);
                    break;
                }
                LinkedOutcome::AbsentInSample => break,
                LinkedOutcome::BudgetExhausted => {}
            }
        }
        let Some(segs) = found else {
            return Err(StageReport::failed(ABSORB, "no path in the sampled V-graph inside the prescribed neighbourhoods")
                .stat("slot", j as f64)
                .stat("absorbing", slot_z[j].is_some() as u8 as f64));
        };
        let mut piece = segs[0].clone();
        if let Some(w) = slot_z[j] {
            piece.push(w);
            piece.extend_from_slice(&segs[1]);
        }
        for &v in &piece {
            avail.remove(v);
        }
        gadgets.push(piece);
    }

    let mut head = Vec::new();
    for i in 0..chain1.len() - 1 {
        head.extend_from_slice(&chain1[i]);
        head.extend_from_slice(&gadgets[i]);
    }
    let mut tail = Vec::new();
    let off = chain1.len() - 1;
    for i in 0..chain2.len() - 1 {
        tail.extend_from_slice(&gadgets[off + i]);
        tail.extend_from_slice(&chain2[i + 1]);
    }
    let mut used_v = inst.v.difference(&avail);
    for e in [inst.x[0], inst.x[1], inst.y[0], inst.y[1]] {
        used_v.remove(e);
    }
    let absorbing = slot_z.iter().filter(|x| x.is_some()).count();
    let report = StageReport::ok(ABSORB)
        .stat("slots", slots.len() as f64)
        .stat("absorbing", absorbing as f64)
        .stat("fillers", (slots.len() - absorbing) as f64)
        .stat("v_used", used_v.len() as f64);
    Ok(Absorption { head, tail, used_v, report })
}

const MATCH: &str = "final_matching";

/// One vertex of `v_rem` for each arc of the path, adjacent to the last two
/// vertices of the arc's tail copy and the first two of its head copy.
pub fn final_matching(
    inst: &SuperRegularInstance,
    family: &TransversalFamily,
    path: &[usize],
    v_rem: &VertexSet,
) -> Result<Vec<usize>, StageReport> {
    let arcs = path.len().saturating_sub(1);
    if arcs != v_rem.len() {
        return Err(StageReport::failed(MATCH, "precondition: arc count differs from the remaining V-vertices")
            .stat("arcs", arcs as f64)
            .stat("v_remaining", v_rem.len() as f64));
    }
    let right = v_rem.to_vec();
    let need: Vec<[usize; 4]> = path
        .windows(2)
        .map(|w| {
            let (a, b) = (tail2(&family.copies[w[0]]), head2(&family.copies[w[1]]));
            [a[0], a[1], b[0], b[1]]
        })
        .collect();
    let adj: Vec<Vec<usize>> =
        need.iter().map(|q| (0..right.len()).filter(|&r| q.iter().all(|&u| inst.graph.has_edge(right[r], u))).collect()).collect();
    let m = hopcroft_karp(&adj, right.len());
    if let Some((viol, nb)) = hall_violator(&adj, &m) {
        return Err(StageReport::failed(MATCH, "Hall condition fails")
            .stat("matched", m.size as f64)
            .stat("violator", viol.len() as f64)
            .stat("violator_neighbourhood", nb.len() as f64));
    }
    let out: Vec<usize> = m.left_to_right.iter().map(|r| right[r.expect("perfect")]).collect();
    assert!(out.iter().zip(&need).all(|(&v, q)| q.iter().all(|&u| inst.graph.has_edge(v, u))));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GadgetRun {
    pub success: bool,
    /// Starts `x', x` and ends `y, y'`.
    pub sequence: Vec<usize>,
    pub stages: Vec<StageReport>,
    pub bookkeeping: Option<Bookkeeping>,
    pub verified: bool,
    pub timings_ms: BTreeMap<String, f64>,
    /// Deterministic graph plus all random rounds.
    #[serde(skip)]
    pub host: Option<Graph>,
}

impl GadgetRun {
    pub fn failed_stage(&self) -> Option<&StageReport> {
        self.stages.iter().find(|s| !s.success)
    }
}

const ANCHOR: &str = "anchors";

/// Splits the common neighbourhoods of the two end tuples in each part into
/// disjoint candidate sets, shared vertices by a fair coin.
fn anchor_sets(inst: &SuperRegularInstance, rng: &mut Rng) -> (Vec<VertexSet>, Vec<VertexSet>) {
    let g = &inst.graph;
    let mut xs = Vec::with_capacity(inst.k);
    let mut ys = Vec::with_capacity(inst.k);
    for p in &inst.parts {
        let mut cx = g.common_within(&inst.x, p);
        let mut cy = g.common_within(&inst.y, p);
        for u in cx.intersection(&cy).iter() {
            if rng.random_bool(0.5) {
                cy.remove(u);
            } else {
                cx.remove(u);
            }
        }
        xs.push(cx);
        ys.push(cy);
    }
    (xs, ys)
}

fn find_anchor(inst: &SuperRegularInstance, cands: Vec<VertexSet>, g0: &Graph, cfg: &GadgetConfig, rng: &mut Rng) -> Option<Vec<usize>> {
    let f = build_f(inst);
    let accept = |t: &[usize]| f.contains(t);
    let query = LinkedSquares { segments: vec![cands], linked: vec![] };
    for _ in 0..cfg.retries.max(1) {
        let mut budget = Budget::new(cfg.search_budget);
        match find_linked_squares(&query, g0, rng, &mut budget, Some(&accept)) {
            LinkedOutcome::Found(mut s) => return s.pop(),
            LinkedOutcome::AbsentInSample => return None,
            LinkedOutcome::BudgetExhausted => {}
        }
    }
    None
}

/// Random rounds: two halves `G(U_1, ..., U_k, p/2)` and `G(V, p)`.
pub fn sample_gadget_rounds(inst: &SuperRegularInstance, p: f64, seed: Seed) -> [Graph; 3] {
    let n = inst.universe();
    let half = (p / 2.0).clamp(0.0, 1.0);
    let pc = p.clamp(0.0, 1.0);
    [
        gnp_between(n, &inst.parts, half, seed.derive("gadget-round", 0)).expect("probability clamped"),
        gnp_between(n, &inst.parts, half, seed.derive("gadget-round", 1)).expect("probability clamped"),
        gnp_on(n, &inst.v, pc, seed.derive("gadget-round", 2)).expect("probability clamped"),
    ]
}

/// End-to-end square Hamilton path on `V` and the parts with end tuples
/// `(x, x')` and `(y, y')`. Every success is checked by the verifier.
pub fn run_multipartite_pipeline(inst: &SuperRegularInstance, p: f64, seed: Seed, cfg: &GadgetConfig) -> GadgetRun {
    let mut clock = Stopwatch::start();
    let mut run = GadgetRun {
        success: false,
        sequence: Vec::new(),
        stages: Vec::new(),
        bookkeeping: bookkeeping(inst.k, inst.n, inst.m),
        verified: false,
        timings_ms: BTreeMap::new(),
        host: None,
    };
    let Some(bk) = run.bookkeeping else {
        run.stages.push(StageReport::failed("bookkeeping", "no admissible family size for these n and m"));
        return run;
    };
    let k = inst.k;
    let rounds = sample_gadget_rounds(inst, p, seed);
    let host = Graph::union_all(&[&inst.graph, &rounds[0], &rounds[1], &rounds[2]]).expect("same universe");
    run.timings_ms.insert("rounds".into(), clock.lap());
    let mut rng = seed.derive("gadget-search", 0).rng();

    let (cx, cy) = anchor_sets(inst, &mut rng);
    let Some(hx) = find_anchor(inst, cx, &rounds[0], cfg, &mut rng) else {
        run.stages.push(StageReport::failed(ANCHOR, "no copy next to the first end tuple in the first random round"));
        return run;
    };
    let cy: Vec<VertexSet> = cy
        .into_iter()
        .map(|mut s| {
            hx.iter().for_each(|&u| {
                s.remove(u);
            });
            s
        })
        .collect();
    let Some(hy) = find_anchor(inst, cy, &rounds[0], cfg, &mut rng) else {
        run.stages.push(StageReport::failed(ANCHOR, "no copy next to the second end tuple in the first random round"));
        return run;
    };
    run.stages.push(StageReport::ok(ANCHOR));
    run.timings_ms.insert(ANCHOR.into(), clock.lap());

    let mut avoid = VertexSet::empty(inst.universe());
    hx.iter().chain(&hy).for_each(|&u| {
        avoid.insert(u);
    });
    let f_tilde = build_f(inst).with_support(rounds[1].clone());
    let mut budget = Budget::new(cfg.transversal_budget);
    let family = match transversal_family(&f_tilde, &avoid, bk.family, &mut rng, &mut budget) {
        Ok(f) => f,
        Err(r) => {
            run.stages.push(r);
            return run;
        }
    };
    assert_eq!(family.len(), bk.family);
    run.stages.push(family.report.clone());
    run.timings_ms.insert("transversal".into(), clock.lap());

    let links = build_linkgraphs(&family, inst, &rounds[1]);
    let min_link = (0..links.fstar.n()).map(|i| links.fstar.degree(i)).min().unwrap_or(0);
    run.stages
        .push(StageReport::ok("link_graphs").stat("fstar_min_degree", min_link as f64).stat("fbar_arcs", links.fbar.arc_count() as f64));
    assert_eq!(bk.path_len + bk.leftover_copies, family.len());
    let cap = ((cfg.eps_prime * inst.n as f64).ceil() as usize).max(1);
    let mut attempt = Err(StageReport::failed(DFS, "no attempt"));
    for _ in 0..cfg.dfs_attempts.max(1) {
        attempt = dfs_random_greedy_path(&links, bk.path_len, cap, &mut rng);
        if attempt.is_ok() {
            break;
        }
    }
    let dpath = match attempt {
        Ok(d) => d,
        Err(r) => {
            run.stages.push(r);
            return run;
        }
    };
    assert!(verify_link_path(&dpath.path, &family, inst, &rounds[1]));
    run.stages.push(
        StageReport::ok(DFS)
            .stat("path_len", dpath.path.len() as f64)
            .stat("dead_ends", dpath.dead_ends as f64)
            .stat("revisited", dpath.revisited as f64)
            .stat("steps", dpath.steps as f64),
    );
    run.timings_ms.insert(DFS.into(), clock.lap());

    let mut covered = avoid.clone();
    family.copies.iter().flatten().for_each(|&u| {
        covered.insert(u);
    });
    let z = inst.u_all().difference(&covered).to_vec();
    assert_eq!(z.len(), bk.leftover_vertices);
    assert_eq!(bk.leftover_copies, bk.leftover_vertices + bk.fillers - 2);
    let absorption = match absorb_leftover(inst, &family, &dpath.path, (&hx, &hy), &z, &rounds[2], cfg, &mut rng) {
        Ok(a) => a,
        Err(r) => {
            run.stages.push(r);
            return run;
        }
    };
    assert_eq!(absorption.report.stats["fillers"] as usize, bk.fillers);
    run.stages.push(absorption.report.clone());
    run.timings_ms.insert(ABSORB.into(), clock.lap());

    let mut v_rem = inst.v.difference(&absorption.used_v);
    for e in [inst.x[0], inst.x[1], inst.y[0], inst.y[1]] {
        v_rem.remove(e);
    }
    assert_eq!(v_rem.len() + 1, bk.path_len);
    let matched = match final_matching(inst, &family, &dpath.path, &v_rem) {
        Ok(m) => m,
        Err(r) => {
            run.stages.push(r);
            return run;
        }
    };
    run.stages.push(StageReport::ok(MATCH).stat("matched", matched.len() as f64));
    run.timings_ms.insert(MATCH.into(), clock.lap());

    let mut seq = vec![inst.x[1], inst.x[0]];
    seq.extend_from_slice(&absorption.head);
    for (i, &c) in dpath.path.iter().enumerate() {
        seq.extend_from_slice(&family.copies[c]);
        if i < matched.len() {
            seq.push(matched[i]);
        }
    }
    seq.extend_from_slice(&absorption.tail);
    seq.extend_from_slice(&[inst.y[0], inst.y[1]]);
    let everything = inst.v.union(&inst.u_all());
    let covers = seq.len() == everything.len() && VertexSet::from_iter(inst.universe(), seq.iter().copied()) == everything;
    let ok = covers && verify_square_path(&host, &seq, true).unwrap_or(false);
    assert!(ok, "assembled sequence failed verification");
    debug_assert_eq!(seq.len(), inst.n + 4 + k * inst.m);
    run.stages.push(StageReport::ok("assemble").stat("length", seq.len() as f64));
    run.timings_ms.insert("assemble".into(), clock.lap());
    run.verified = true;
    run.success = true;
    run.sequence = seq;
    run.host = Some(host);
    run
}
