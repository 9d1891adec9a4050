//! Square Hamilton paths through one super-regular pair `(U, V)`.
//!
//! `V` is split into `V_1, U_2, W_2` and `U` into `V_2, U_1, W_1`, giving two
//! three-set instances with `k = 2`. A `K_4` on `z, z' in V_1` and
//! `w, w' in V_2` joins the two paths.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use super::hypergraph::{GadgetError, SuperRegularInstance};
use super::multipartite::{run_multipartite_pipeline, GadgetConfig, GadgetRun};
use crate::generators::{gnp_on, sample_indices};
use crate::graph::{Graph, GraphBuilder, VertexSet};
use crate::powers::verify_square_path;
use crate::report::{StageReport, Stopwatch};
use crate::seed::{Rng, Seed};

#[derive(Clone, Debug)]
pub struct BipartiteInstance {
    pub graph: Graph,
    pub u: VertexSet,
    pub v: VertexSet,
    pub d: f64,
    /// `[x, x']` in `V`.
    pub x: [usize; 2],
    /// `[y, y']` in `U`.
    pub y: [usize; 2],
}

/// `V = 0..n`, `U = n..n+m`, a random pair at density `min(2d, 1)` with degree
/// floors `d |V|` and `d |U|`, and end tuples with `d^2 n / 2` common
/// neighbours on the opposite side.
pub fn gen_bipartite_instance(n: usize, m: usize, d: f64, seed: Seed) -> Result<BipartiteInstance, GadgetError> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(GadgetError::Density(d));
    }
    if 4 * m < 3 * n || m > n || n < 4 {
        return Err(GadgetError::Invalid("need 3n/4 <= |U| <= n".into()));
    }
    let total = n + m;
    let mut rng = seed.rng();
    let q = (2.0 * d).min(1.0);
    for _ in 0..200 {
        let mut b = GraphBuilder::new(total);
        let (mut dv, mut du) = (vec![0usize; n], vec![0usize; m]);
        sample_indices((n * m) as u64, q, &mut rng, |i| {
            let (a, c) = ((i / m as u64) as usize, (i % m as u64) as usize);
            dv[a] += 1;
            du[c] += 1;
            b.add_edge(a, n + c);
        });
        if dv.iter().any(|&x| (x as f64) < d * m as f64) || du.iter().any(|&x| (x as f64) < d * n as f64) {
            continue;
        }
        let graph = b.build();
        let (v, u) = (VertexSet::range(total, 0, n), VertexSet::range(total, n, total));
        let need = 0.5 * d * d * n as f64;
        let pick = |side: &VertexSet, other: &VertexSet, rng: &mut Rng| -> Option<[usize; 2]> {
            let list = side.to_vec();
            (0..2000).find_map(|_| {
                let a = list[rng.random_range(0..list.len())];
                let c = list[rng.random_range(0..list.len())];
                (a != c && graph.common_within(&[a, c], other).len() as f64 >= need).then_some([a, c])
            })
        };
        let (Some(x), Some(y)) = (pick(&v, &u, &mut rng), pick(&u, &v, &mut rng)) else {
            return Err(GadgetError::ResampleLimit("end tuples".into()));
        };
        return Ok(BipartiteInstance { graph, u, v, d, x, y });
    }
    Err(GadgetError::ResampleLimit("degree floors of the pair".into()))
}

/// Fractions `(q1, q2)` sending a vertex of `V` to each of `U_2, W_2` and a
/// vertex of `U` to each of `U_1, W_1`, so that in expectation
/// `|U_i| = |W_i| = c |V_i|` with `c = 1 - (delta0 + delta1) / 2`.
pub fn split_fractions(n: usize, m: usize, delta0: f64, delta1: f64) -> (f64, f64) {
    let c = 1.0 - (delta0 + delta1) / 2.0;
    let (n, m) = (n as f64, m as f64);
    let a = (2.0 * c * c * n - c * m) / (4.0 * c * c - 1.0);
    let b = c * (n - 2.0 * a);
    (a / n, b / m)
}

#[derive(Clone, Debug, Serialize)]
pub struct BipartiteConfig {
    pub delta0: f64,
    pub delta1: f64,
    pub split_tries: usize,
    pub gadget: GadgetConfig,
}

impl Default for BipartiteConfig {
    fn default() -> Self {
        BipartiteConfig { delta0: 0.35, delta1: 0.15, split_tries: 20, gadget: GadgetConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BipartiteRun {
    pub success: bool,
    /// Starts `x', x` and ends `y, y'`.
    pub sequence: Vec<usize>,
    pub stages: Vec<StageReport>,
    pub fractions: (f64, f64),
    /// `[|V_1|, |U_1|, |V_2|, |U_2|]`.
    pub sizes: [usize; 4],
    pub halves: Vec<GadgetRun>,
    pub verified: bool,
    pub timings_ms: BTreeMap<String, f64>,
}

impl BipartiteRun {
    pub fn failed_stage(&self) -> Option<&StageReport> {
        self.stages.iter().find(|s| !s.success)
    }
}

/// Part sizes `(m1, m2)` near the realized ones with the congruence and
/// ratio conditions of both halves.
fn target_sizes(n: usize, m: usize, e1: f64, e2: f64, delta0: f64, delta1: f64) -> Option<(usize, usize)> {
    let ok = |vi: usize, mi: usize| -> bool {
        if vi < 5 || mi == 0 {
            return false;
        }
        let ni = vi - 4;
        ni >= mi && (ni - mi) % 10 == 0 && (1.0 - delta0) * ni as f64 <= mi as f64 && mi as f64 <= (1.0 - delta1) * ni as f64
    };
    let span = |e: f64| (e - 40.0).max(1.0) as usize..=(e + 40.0) as usize;
    let mut best: Option<(f64, usize, usize)> = None;
    for m1 in span(e1) {
        for m2 in span(e2) {
            if 2 * m2 >= n || 2 * m1 >= m {
                continue;
            }
            if ok(n - 2 * m2, m1) && ok(m - 2 * m1, m2) {
                let cost = (m1 as f64 - e1).abs() + (m2 as f64 - e2).abs();
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, m1, m2));
                }
            }
        }
    }
    best.map(|(_, a, b)| (a, b))
}

/// Random three-way split of `side`; fixed members go to the first class.
fn random_split(side: &VertexSet, fixed: &[usize], q: f64, rng: &mut Rng) -> [Vec<usize>; 3] {
    let mut classes: [Vec<usize>; 3] = [fixed.to_vec(), Vec::new(), Vec::new()];
    for u in side.iter().filter(|u| !fixed.contains(u)) {
        let r: f64 = rng.random();
        let c = if r < q {
            1
        } else if r < 2.0 * q {
            2
        } else {
            0
        };
        classes[c].push(u);
    }
    classes
}

/// Moves random vertices between classes to reach sizes `[big, small, small]`,
/// keeping the first `fixed` entries of class 0 in place.
fn rebalance(mut classes: [Vec<usize>; 3], fixed: usize, big: usize, small: usize, rng: &mut Rng) -> [Vec<usize>; 3] {
    let want = [big, small, small];
    let mut spare = Vec::new();
    for (i, c) in classes.iter_mut().enumerate() {
        let keep = if i == 0 { fixed } else { 0 };
        while c.len() > want[i] {
            let idx = rng.random_range(keep..c.len());
            spare.push(c.swap_remove(idx));
        }
    }
    spare.shuffle(rng);
    for (i, c) in classes.iter_mut().enumerate() {
        while c.len() < want[i] {
            c.push(spare.pop().expect("sizes sum to the side"));
        }
    }
    classes
}

/// An edge `zz'` of `ga` in `left` and an edge `ww'` of `gb` in `right` with
/// all four cross pairs in `g`, each tuple passing its own test.
fn find_bridge(
    g: &Graph,
    ga: &Graph,
    gb: &Graph,
    left: &VertexSet,
    right: &VertexSet,
    good_left: &dyn Fn([usize; 2]) -> bool,
    good_right: &dyn Fn([usize; 2]) -> bool,
    rng: &mut Rng,
) -> Option<([usize; 2], [usize; 2])> {
    let mut edges: Vec<(usize, usize)> = ga.restrict(left).edges().collect();
    edges.shuffle(rng);
    for (a, b) in edges {
        if !good_left([a, b]) {
            continue;
        }
        let cand = g.common_within(&[a, b], right);
        let mut inner: Vec<(usize, usize)> = gb.restrict(&cand).edges().collect();
        inner.shuffle(rng);
        if let Some(&(c, e)) = inner.iter().find(|&&(c, e)| good_right([c, e])) {
            return Some(([a, b], [c, e]));
        }
    }
    None
}

const SPLIT: &str = "split";
const BRIDGE: &str = "bridge";

/// Splits the pair, finds the bridge in two half-probability rounds and runs
/// the three-set pipeline on both halves at `p / 2`.
pub fn run_bipartite_pipeline(inst: &BipartiteInstance, p: f64, seed: Seed, cfg: &BipartiteConfig) -> BipartiteRun {
    let mut clock = Stopwatch::start();
    let (n, m) = (inst.v.len(), inst.u.len());
    let fractions = split_fractions(n, m, cfg.delta0, cfg.delta1);
    let mut run = BipartiteRun {
        success: false,
        sequence: Vec::new(),
        stages: Vec::new(),
        fractions,
        sizes: [0; 4],
        halves: Vec::new(),
        verified: false,
        timings_ms: BTreeMap::new(),
    };
    let g = &inst.graph;
    let total = g.n();
    let half = (p / 2.0).clamp(0.0, 1.0);
    let ga = gnp_on(total, &inst.v, half, seed.derive("bipartite-bridge", 0)).expect("probability clamped");
    let gb = gnp_on(total, &inst.u, half, seed.derive("bipartite-bridge", 1)).expect("probability clamped");
    let mut rng = seed.derive("bipartite-search", 0).rng();
    let (q1, q2) = fractions;
    let sub_d = inst.d / 8.0;

    let mut found = None;
    let mut last_problem = String::from("no admissible part sizes");
    for _ in 0..cfg.split_tries.max(1) {
        let vs = random_split(&inst.v, &inst.x, q1, &mut rng);
        let us = random_split(&inst.u, &inst.y, q2, &mut rng);
        let e1 = (us[1].len() + us[2].len()) as f64 / 2.0;
        let e2 = (vs[1].len() + vs[2].len()) as f64 / 2.0;
        let Some((m1, m2)) = target_sizes(n, m, e1, e2, cfg.delta0, cfg.delta1) else { continue };
        let vs = rebalance(vs, 2, n - 2 * m2, m2, &mut rng);
        let us = rebalance(us, 2, m - 2 * m1, m1, &mut rng);
        let set = |l: &[usize]| VertexSet::from_iter(total, l.iter().copied());
        let (v1, u2, w2) = (set(&vs[0]), set(&vs[1]), set(&vs[2]));
        let (v2, u1, w1) = (set(&us[0]), set(&us[1]), set(&us[2]));
        let need1 = 0.5 * sub_d * sub_d * (v1.len() - 4) as f64;
        let need2 = 0.5 * sub_d * sub_d * (v2.len() - 4) as f64;
        let ok_in = |t: [usize; 2], a: &VertexSet, b: &VertexSet, need: f64| {
            g.common_within(&t, a).len() as f64 >= need && g.common_within(&t, b).len() as f64 >= need
        };
        let mut left = v1.clone();
        inst.x.iter().for_each(|&e| {
            left.remove(e);
        });
        let mut right = v2.clone();
        inst.y.iter().for_each(|&e| {
            right.remove(e);
        });
        let good_l = |t: [usize; 2]| ok_in(t, &u1, &w1, need1);
        let good_r = |t: [usize; 2]| ok_in(t, &u2, &w2, need2);
        let Some((z, w)) = find_bridge(g, &ga, &gb, &left, &right, &good_l, &good_r, &mut rng) else {
            last_problem = "no bridge in the sampled rounds".into();
            continue;
        };
        let first =
            SuperRegularInstance::from_parts(g.clone(), v1.clone(), vec![u1, w1], inst.x, [z[0], z[1]], sub_d, cfg.delta0, cfg.delta1);
        let second =
            SuperRegularInstance::from_parts(g.clone(), v2.clone(), vec![u2, w2], inst.y, [w[0], w[1]], sub_d, cfg.delta0, cfg.delta1);
        match (first, second) {
            (Ok(a), Ok(b)) => {
                run.sizes = [v1.len(), m1, v2.len(), m2];
                found = Some((a, b, z, w));
                break;
            }
            (Err(e), _) | (_, Err(e)) => last_problem = e.to_string(),
        }
    }
    let Some((first, second, z, w)) = found else {
        let stage = if last_problem.contains("bridge") { BRIDGE } else { SPLIT };
        run.stages.push(StageReport::failed(stage, last_problem));
        return run;
    };
    run.stages.push(StageReport::ok(SPLIT).stat("q1", q1).stat("q2", q2));
    run.stages.push(StageReport::ok(BRIDGE).stat("z", z[0] as f64).stat("w", w[0] as f64));
    run.timings_ms.insert("split_and_bridge".into(), clock.lap());

    let a = run_multipartite_pipeline(&first, p / 2.0, seed.derive("bipartite-half", 0), &cfg.gadget);
    let b = run_multipartite_pipeline(&second, p / 2.0, seed.derive("bipartite-half", 1), &cfg.gadget);
    run.timings_ms.insert("halves".into(), clock.lap());
    let ok = a.success && b.success;
    for (i, h) in [&a, &b].iter().enumerate() {
        let mut r = if h.success {
            StageReport::ok(format!("half_{i}"))
        } else {
            let f = h.failed_stage().expect("failed run names a stage");
            StageReport::failed(format!("half_{i}"), format!("{}: {}", f.stage, f.unmet.clone().unwrap_or_default()))
        };
        r.set("length", h.sequence.len() as f64);
        run.stages.push(r);
    }
    if !ok {
        run.halves = vec![a, b];
        return run;
    }
    let mut seq = a.sequence.clone();
    seq.extend(b.sequence.iter().rev());
    let host = Graph::union_all(&[g, &ga, &gb, a.host.as_ref().expect("host"), b.host.as_ref().expect("host")]).expect("same universe");
    let everything = inst.u.union(&inst.v);
    let covers = seq.len() == everything.len() && VertexSet::from_iter(total, seq.iter().copied()) == everything;
    let verified = covers && verify_square_path(&host, &seq, true).unwrap_or(false);
    assert!(verified, "joined sequence failed verification");
    run.stages.push(StageReport::ok("assemble").stat("length", seq.len() as f64));
    run.halves = vec![a, b];
    run.sequence = seq;
    run.verified = true;
    run.success = true;
    run
}
