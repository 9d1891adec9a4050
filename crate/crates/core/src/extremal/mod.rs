//! Square Hamilton cycles in a stable graph plus four random rounds.
//!
//! Stages: balance the partition, cover low-degree vertices, factor the rest of
//! `B` into squared paths, order the pieces along a directed Hamilton cycle and
//! insert one `A`-vertex between consecutive pieces by a bipartite matching.

pub mod assemble;
pub mod balance;
pub mod cover;
pub mod dham;
pub mod factor;
pub mod partition;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{Graph, VertexSet};
use crate::powers::{square_path_pairs, verify_square_cycle, EdgeSource, LayeredHost, SquarePathPiece};
use crate::report::{Budget, StageReport, Stopwatch};
use crate::seed::Seed;
use crate::stability::{verify_stable, StabilityWitness};

pub use assemble::{assemble, build_aux_digraph, hall_match};
pub use balance::{balance_partition, deletion_positions};
pub use cover::cover_low_degree;
pub use dham::directed_ham_cycle;
pub use factor::find_pk2_factor;
pub use partition::find_stable_partition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    F1Balancing,
    F2LowDegree,
    F3Factor,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceFamily {
    pub role: Role,
    pub pieces: Vec<SquarePathPiece>,
    pub used_a: usize,
    pub used_b: usize,
}

/// A family of pieces plus what is left of `A` and `B`.
#[derive(Clone, Debug)]
pub struct StageOutput {
    pub family: PieceFamily,
    pub a: VertexSet,
    pub b: VertexSet,
    pub report: StageReport,
}

/// Which graph decides arcs between pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxArcs {
    /// Deterministic graph and all four rounds.
    HostUnion,
    /// The fourth round alone.
    Round4,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremalConfig {
    pub beta: f64,
    pub search_budget: u64,
    pub factor_budget: u64,
    pub cycle_budget: u64,
    pub retries: usize,
    pub aux_arcs: AuxArcs,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        ExtremalConfig {
            beta: 0.01,
            search_budget: 200_000,
            factor_budget: 20_000_000,
            cycle_budget: 5_000_000,
            retries: 20,
            aux_arcs: AuxArcs::HostUnion,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremalRun {
    pub success: bool,
    pub ordering: Option<Vec<usize>>,
    pub stages: Vec<StageReport>,
    pub pieces: BTreeMap<String, usize>,
    /// Edge counts of the output cycle by source.
    pub provenance: BTreeMap<String, usize>,
    /// Fewest common `A`-neighbours over all end pairs, and the required floor.
    pub end_pair_min: Option<usize>,
    pub end_pair_floor: f64,
    pub witness_verified: bool,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    pub families: Vec<PieceFamily>,
}

impl ExtremalRun {
    fn new(beta: f64, k: usize, n: usize, a: usize) -> Self {
        ExtremalRun {
            success: false,
            ordering: None,
            stages: Vec::new(),
            pieces: BTreeMap::new(),
            provenance: BTreeMap::new(),
            end_pair_min: None,
            end_pair_floor: a as f64 - 16.0 * (k * k) as f64 * beta * n as f64,
            witness_verified: false,
            timings_ms: BTreeMap::new(),
            families: Vec::new(),
        }
    }

    /// The stage that failed, if any.
    pub fn failed_stage(&self) -> Option<&StageReport> {
        self.stages.iter().find(|s| !s.success)
    }
}

pub fn source_label(s: EdgeSource) -> String {
    match s {
        EdgeSource::Deterministic => "deterministic".to_string(),
        EdgeSource::RandomRound(i) => format!("random_round_{i}"),
    }
}

/// The four random rounds at density `p/4`.
pub fn sample_rounds(n: usize, p: f64, seed: Seed) -> Result<[Graph; 4], crate::generators::GenError> {
    let r = |i: u64| crate::generators::gnp(n, p / 4.0, seed.derive("extremal-round", i));
    Ok([r(1)?, r(2)?, r(3)?, r(4)?])
}

/// Runs every stage on `g` with rounds sampled from `seed`. Without a witness
/// one is searched for first.
pub fn run_extremal_pipeline(
    g: &Graph,
    k: usize,
    p: f64,
    seed: Seed,
    witness: Option<StabilityWitness>,
    cfg: &ExtremalConfig,
) -> ExtremalRun {
    let n = g.n();
    let alpha = 1.0 / (k as f64 + 1.0);
    let mut clock = Stopwatch::start();
    let mut rng = seed.derive("extremal-search", 0).rng();
    let mut run = ExtremalRun::new(cfg.beta, k, n, witness.as_ref().map_or(0, |w| w.a.len()));
    let fail = |mut run: ExtremalRun, r: StageReport| {
        run.stages.push(r);
        run
    };
    if k < 2 || n < 3 {
        return fail(run, StageReport::failed("input", "need k >= 2 and at least three vertices"));
    }

    let witness = match witness {
        Some(w) => w,
        None => match find_stable_partition(g, alpha, cfg.beta, &mut Budget::new(cfg.search_budget)) {
            Some(w) => w,
            None => return fail(run, StageReport::failed("stable_partition", "no stable partition found")),
        },
    };
    run.witness_verified = verify_stable(g, &witness);
    run.end_pair_floor = witness.a.len() as f64 - 16.0 * (k * k) as f64 * cfg.beta * n as f64;
    run.stages.push(
        StageReport::ok("stable_partition").stat("a", witness.a.len() as f64).stat("verified", f64::from(u8::from(run.witness_verified))),
    );
    run.timings_ms.insert("stable_partition".into(), clock.lap());

    let rounds = match sample_rounds(n, p, seed) {
        Ok(r) => r,
        Err(e) => return fail(run, StageReport::failed("sample_rounds", e.to_string())),
    };
    let mut host = LayeredHost::new(g.clone());
    for (i, r) in rounds.iter().enumerate() {
        host.add_round(i as u8 + 1, r.clone()).expect("same order");
    }
    run.timings_ms.insert("sample_rounds".into(), clock.lap());

    let bal = match balance_partition(g, &witness, k, &rounds[0], &rounds[1], cfg, &mut rng) {
        Ok(b) => b,
        Err(r) => return fail(run, r),
    };
    run.stages.push(bal.report.clone());
    run.timings_ms.insert("balance".into(), clock.lap());

    let cov = match cover_low_degree(g, &witness, &bal.a, &bal.b, k, &rounds[0], cfg, &mut rng) {
        Ok(c) => c,
        Err(r) => return fail(run, r),
    };
    let (f1, f2) = (bal.family.pieces.len(), cov.family.pieces.len());
    assert_eq!(cov.b.len(), k * (cov.a.len() - f1 - f2), "cover bookkeeping");
    run.stages.push(cov.report.clone());
    run.timings_ms.insert("cover".into(), clock.lap());

    let factor_graph = g.union(&rounds[2]).expect("same order");
    let f3 = match find_pk2_factor(&factor_graph, &cov.b, k, &mut rng, &mut Budget::new(cfg.factor_budget)) {
        Ok(f) => f,
        Err(r) => return fail(run, r),
    };
    let f3: Vec<SquarePathPiece> = f3.into_iter().map(|seq| balance::tag(seq, &host)).collect();
    run.stages.push(StageReport::ok("pk2_factor").stat("pieces", f3.len() as f64));
    run.timings_ms.insert("factor".into(), clock.lap());

    let a2 = cov.a.clone();
    run.families = vec![bal.family, cov.family, PieceFamily { role: Role::F3Factor, used_a: 0, used_b: cov.b.len(), pieces: f3 }];
    let pieces: Vec<SquarePathPiece> = run.families.iter().flat_map(|f| f.pieces.iter().cloned()).collect();
    for f in &run.families {
        run.pieces.insert(format!("{:?}", f.role).to_lowercase(), f.pieces.len());
    }
    run.end_pair_min = pieces
        .iter()
        .flat_map(|f| {
            let (y, x) = f.left_tuple();
            let (u, w) = f.right_tuple();
            [g.common_within(&[x, y], &witness.a).len(), g.common_within(&[u, w], &witness.a).len()]
        })
        .min();

    let union = host.union();
    let arcs = match cfg.aux_arcs {
        AuxArcs::HostUnion => union,
        AuxArcs::Round4 => &rounds[3],
    };
    let d = build_aux_digraph(&pieces, arcs);
    run.stages.push(StageReport::ok("aux_digraph").stat("pieces", pieces.len() as f64).stat("arcs", d.arc_count() as f64));
    run.timings_ms.insert("aux_digraph".into(), clock.lap());

    let mut last_failure = None;
    let mut found = None;
    for attempt in 0..cfg.retries.max(1) {
        let cycle = if pieces.len() == 1 {
            let (_, w) = pieces[0].right_tuple();
            let (_, x) = pieces[0].left_tuple();
            if !arcs.has_edge(w, x) {
                last_failure = Some(StageReport::failed("directed_ham_cycle", "single piece does not close up"));
                break;
            }
            vec![0]
        } else {
            match directed_ham_cycle(&d, &mut rng, &mut Budget::new(cfg.cycle_budget)) {
                Ok(c) => c,
                Err(r) => {
                    let exhaustive = r.stats.contains_key("exhaustive");
                    last_failure = Some(r);
                    if exhaustive {
                        break;
                    }
                    continue;
                }
            }
        };
        match hall_match(&cycle, &pieces, &a2, union) {
            Ok(m) => {
                found = Some((cycle, m, attempt));
                break;
            }
            Err(r) => {
                let stop = r.unmet.as_deref().is_some_and(|u| u.starts_with("precondition")) || pieces.len() <= 1;
                last_failure = Some(r);
                if stop {
                    break;
                }
            }
        }
    }
    run.timings_ms.insert("cycle_and_matching".into(), clock.lap());
    let Some((cycle, matched, attempt)) = found else {
        return fail(run, last_failure.unwrap_or_else(|| StageReport::failed("hall_match", "no attempt made")));
    };
    run.stages.push(StageReport::ok("directed_ham_cycle").stat("attempts", (attempt + 1) as f64));
    run.stages.push(StageReport::ok("hall_match").stat("matched", matched.len() as f64));

    let ordering = assemble(&cycle, &pieces, &matched);
    let verified = verify_square_cycle(union, &ordering).unwrap_or(false);
    assert!(verified, "assembled ordering fails verification");
    let mut closed = ordering.clone();
    closed.extend_from_slice(&ordering[..2.min(ordering.len())]);
    let pairs: Vec<(usize, usize)> = square_path_pairs(&closed).collect();
    for (u, v) in pairs.into_iter().take(2 * n) {
        let src = host.source_of(u, v).expect("verified edge");
        *run.provenance.entry(source_label(src)).or_default() += 1;
    }
    run.stages.push(StageReport::ok("assembly").stat("length", ordering.len() as f64));
    run.timings_ms.insert("assembly".into(), clock.lap());
    run.success = true;
    run.ordering = Some(ordering);
    run
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{class_size, stable_instance};
    use crate::powers::verify_square_cycle;

    #[test]
    fn complete_graph_succeeds() {
        let n = 30;
        let g = Graph::complete(n);
        let a = VertexSet::range(n, 0, class_size(1.0 / 3.0, n));
        let w = StabilityWitness::from_a(a, 1.0 / 3.0, 0.01);
        let run = run_extremal_pipeline(&g, 2, 0.0, Seed(1), Some(w), &ExtremalConfig::default());
        assert!(run.success, "{:?}", run.failed_stage());
        assert!(verify_square_cycle(&g, run.ordering.as_ref().unwrap()).unwrap());
        assert_eq!(run.provenance["deterministic"], 2 * n);
    }

    #[test]
    fn zero_density_fails_at_a_random_search() {
        let (g, w) = stable_instance(1.0 / 3.0, 0.01, 301, 0.0, Seed(2)).unwrap();
        let run = run_extremal_pipeline(&g, 2, 0.0, Seed(2), Some(w), &ExtremalConfig::default());
        assert!(!run.success);
        assert_eq!(run.failed_stage().unwrap().stage, "balance");
    }

    #[test]
    fn desk_instances_succeed_and_verify() {
        for (n, s) in [(300, 1), (301, 2), (302, 3), (400, 4)] {
            let (g, _) = stable_instance(1.0 / 3.0, 0.01, n, 0.01, Seed(s)).unwrap();
            let p = 10.0 * (n as f64).ln() / n as f64;
            let run = run_extremal_pipeline(&g, 2, p, Seed(s), None, &ExtremalConfig::default());
            assert!(run.success, "n={n}: {:?}", run.failed_stage());
            let ord = run.ordering.as_ref().unwrap();
            let rounds = sample_rounds(n, p, Seed(s)).unwrap();
            let host = Graph::union_all(&[&g, &rounds[0], &rounds[1], &rounds[2], &rounds[3]]).unwrap();
            assert!(verify_square_cycle(&host, ord).unwrap());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (g, _) = stable_instance(1.0 / 3.0, 0.01, 240, 0.01, Seed(7)).unwrap();
        let p = 0.2;
        let a = run_extremal_pipeline(&g, 2, p, Seed(7), None, &ExtremalConfig::default());
        let b = run_extremal_pipeline(&g, 2, p, Seed(7), None, &ExtremalConfig::default());
        assert_eq!(a.ordering, b.ordering);
    }

    #[test]
    fn deterministic_tags_hold_in_g_alone() {
        let (g, _) = stable_instance(1.0 / 3.0, 0.01, 300, 0.01, Seed(9)).unwrap();
        let run = run_extremal_pipeline(&g, 2, 0.2, Seed(9), None, &ExtremalConfig::default());
        assert!(run.success);
        for f in &run.families {
            for piece in &f.pieces {
                for &((u, v), src) in &piece.provenance {
                    if src == EdgeSource::Deterministic {
                        assert!(g.has_edge(u, v));
                    }
                }
            }
        }
    }

    #[test]
    fn k3_instance() {
        let n = 240;
        let (g, _) = stable_instance(0.25, 0.01, n, 0.01, Seed(11)).unwrap();
        let p = 0.35;
        let run = run_extremal_pipeline(&g, 3, p, Seed(11), None, &ExtremalConfig::default());
        assert!(run.success, "{:?}", run.failed_stage());
    }
}
