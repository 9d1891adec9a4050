//! Pieces absorbing vertices with too few neighbours across the partition.

use rand::seq::IteratorRandom;

use super::balance::tag;
use super::{ExtremalConfig, PieceFamily, Role, StageOutput};
use crate::gadget::linked::{realize_hub_template, HubTemplate, LinkedOutcome, Slot};
use crate::graph::{Graph, VertexSet};
use crate::powers::LayeredHost;
use crate::report::{Budget, StageReport};
use crate::seed::Rng;
use crate::stability::StabilityWitness;

const STAGE: &str = "cover_low_degree";

/// Covers low-degree vertices of the balanced sets `a1`, `b1`.
/// `witness` supplies the original classes used for degree thresholds.
pub fn cover_low_degree(
    g: &Graph,
    witness: &StabilityWitness,
    a1: &VertexSet,
    b1: &VertexSet,
    k: usize,
    round1: &Graph,
    cfg: &ExtremalConfig,
    rng: &mut Rng,
) -> Result<StageOutput, StageReport> {
    let n = g.n();
    let beta_n = cfg.beta * n as f64;
    let (a0, b0) = (&witness.a, &witness.b);
    let mut host = LayeredHost::new(g.clone());
    host.add_round(1, round1.clone()).expect("same order");
    let g1 = host.union().clone();

    let low_a = VertexSet::from_iter(n, a1.iter().filter(|&v| g.count_into(v, b0) as f64 <= b0.len() as f64 - beta_n));
    let low_b_thr = a0.len() as f64 - 8.0 * (k * k) as f64 * beta_n;
    let low_b = VertexSet::from_iter(n, b1.iter().filter(|&v| g.count_into(v, a0) as f64 <= low_b_thr));
    let mut a_rem = a1.clone();
    let mut b_rem = b1.clone();
    let mut pieces = Vec::new();

    let attempt = |t: &HubTemplate, rng: &mut Rng| -> Option<Vec<usize>> {
        for _ in 0..cfg.retries.max(1) {
            let mut budget = Budget::new(cfg.search_budget);
            match realize_hub_template(t, &g1, &g1, rng, &mut budget) {
                LinkedOutcome::Found(seq) => return Some(seq),
                LinkedOutcome::AbsentInSample => return None,
                LinkedOutcome::BudgetExhausted => {}
            }
        }
        None
    };

    for v in low_a.iter() {
        let free = b_rem.difference(&low_b);
        let t = HubTemplate::alternating(&[k, k], &[v], &free);
        let Some(seq) = attempt(&t, rng) else {
            return Err(StageReport::failed(STAGE, "no square path through a low-degree A-vertex")
                .stat("low_a", low_a.len() as f64)
                .stat("pieces", pieces.len() as f64));
        };
        for &u in &seq {
            a_rem.remove(u);
            b_rem.remove(u);
        }
        pieces.push(tag(seq, &host));
    }

    let j = (k - 1) / 2;
    for w in low_b.iter() {
        let mut done = None;
        for _ in 0..cfg.retries.max(1) {
            let good_a = a_rem.difference(&low_a);
            let near = g.neighbor_set(w).intersection(&good_a);
            let Some(u1) = near.iter().choose(rng) else { break };
            let pool = if k - j <= 2 { near.clone() } else { good_a.clone() };
            let Some(u2) = pool.iter().filter(|&u| u != u1).choose(rng) else { break };
            let free = b_rem.difference(&low_b);
            let mut slots: Vec<Slot> = Vec::with_capacity(3 * k + 2);
            let fill = |slots: &mut Vec<Slot>, r: usize| slots.extend((0..r).map(|_| Slot::Free(free.clone())));
            fill(&mut slots, k);
            slots.push(Slot::Hub(u1));
            fill(&mut slots, j);
            slots.push(Slot::Hub(w));
            fill(&mut slots, k - 1 - j);
            slots.push(Slot::Hub(u2));
            fill(&mut slots, k);
            let mut budget = Budget::new(cfg.search_budget);
            if let LinkedOutcome::Found(seq) = realize_hub_template(&HubTemplate { slots }, &g1, &g1, rng, &mut budget) {
                done = Some(seq);
                break;
            }
        }
        let Some(seq) = done else {
            return Err(StageReport::failed(STAGE, "no square path through a low-degree B-vertex")
                .stat("low_b", low_b.len() as f64)
                .stat("pieces", pieces.len() as f64));
        };
        for &u in &seq {
            a_rem.remove(u);
            b_rem.remove(u);
        }
        pieces.push(tag(seq, &host));
    }

    let report =
        StageReport::ok(STAGE).stat("low_a", low_a.len() as f64).stat("low_b", low_b.len() as f64).stat("pieces", pieces.len() as f64);
    let used_a = a1.len() - a_rem.len();
    let used_b = b1.len() - b_rem.len();
    Ok(StageOutput { family: PieceFamily { role: Role::F2LowDegree, pieces, used_a, used_b }, a: a_rem, b: b_rem, report })
}
