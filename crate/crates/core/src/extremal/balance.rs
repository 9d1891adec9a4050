//! Pieces that bring the partition to the exact ratio `|B| = k(|A| - #pieces)`.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_rational::Rational64;

use super::{ExtremalConfig, PieceFamily, Role, StageOutput};
use crate::gadget::linked::{find_linked_squares, realize_hub_template, HubTemplate, LinkedOutcome, LinkedSquares, Slot};
use crate::gadget::sublinear::{find_sublinear_square_paths, Regime};
use crate::graph::{Graph, VertexSet};
use crate::powers::{one_density_unchecked, square_of_path, LayeredHost, SquarePathPiece};
use crate::report::{Budget, StageReport};
use crate::seed::Rng;
use crate::stability::StabilityWitness;

const STAGE: &str = "balance";

static DELETIONS: Mutex<BTreeMap<(usize, usize), Option<[usize; 3]>>> = Mutex::new(BTreeMap::new());

/// Three positions of `P_len^2`, outside both end pairs and not spanning a
/// triangle, whose removal leaves a graph of one-density at most that of
/// `P_k^2`. Lexicographically first such triple.
pub fn deletion_positions(k: usize, len: usize) -> Option<[usize; 3]> {
    if let Some(hit) = DELETIONS.lock().expect("cache").get(&(k, len)) {
        return *hit;
    }
    let found = compute_deletions(k, len);
    DELETIONS.lock().expect("cache").insert((k, len), found);
    found
}

fn compute_deletions(k: usize, len: usize) -> Option<[usize; 3]> {
    if k < 2 || len < 7 || len - 3 > 20 {
        return None;
    }
    let target = Rational64::new(2 * k as i64 - 3, k as i64 - 1);
    let p = square_of_path(len);
    let interior = 2..len - 2;
    for i in interior.clone() {
        for j in i + 1..len - 2 {
            for l in j + 1..len - 2 {
                if l - i <= 2 {
                    continue;
                }
                let keep: Vec<usize> = (0..len).filter(|&x| x != i && x != j && x != l).collect();
                let h = p.restrict_relabel(&keep);
                if one_density_unchecked(&h) <= target {
                    return Some([i, j, l]);
                }
            }
        }
    }
    None
}

pub(crate) fn tag(seq: Vec<usize>, host: &LayeredHost) -> SquarePathPiece {
    SquarePathPiece::tagged(seq, host).expect("realized piece uses only host edges")
}

fn high_into(g: &Graph, within: &VertexSet, other: &VertexSet, slack: f64) -> VertexSet {
    let thr = other.len() as f64 - slack;
    VertexSet::from_iter(g.n(), within.iter().filter(|&v| g.count_into(v, other) as f64 >= thr))
}

/// Balances `witness` using the first two random rounds.
pub fn balance_partition(
    g: &Graph,
    witness: &StabilityWitness,
    k: usize,
    round1: &Graph,
    round2: &Graph,
    cfg: &ExtremalConfig,
    rng: &mut Rng,
) -> Result<StageOutput, StageReport> {
    let n = g.n();
    let nf = n as f64;
    let beta_n = cfg.beta * nf;
    let mut host = LayeredHost::new(g.clone());
    host.add_round(1, round1.clone()).expect("same order");
    host.add_round(2, round2.clone()).expect("same order");
    let g1 = g.union(round1).expect("same order");
    let (a0, b0) = (&witness.a, &witness.b);
    let q = n / (k + 1);
    let extra = n - (k + 1) * q;
    let mut a_rem = a0.clone();
    let mut b_rem = b0.clone();
    let mut pieces = Vec::new();
    let mut report = StageReport::ok(STAGE).stat("a", extra as f64);

    if a0.len() > q {
        let m = a0.len() - q;
        report.set("surplus", m as f64);
        let mut lengths = vec![3 * k + 2; m - 1];
        lengths.push(3 * k + 2 + extra);
        for len in lengths {
            let Some(del) = deletion_positions(k, len) else {
                return Err(StageReport::failed(STAGE, format!("no admissible deletion triple for length {len}")));
            };
            let hubs_ok = high_into(g, &a_rem, b0, beta_n);
            let query =
                LinkedSquares { segments: vec![vec![hubs_ok.clone()]; 3], linked: vec![del[1] - del[0] <= 2, del[2] - del[1] <= 2] };
            let mut done = None;
            for _ in 0..cfg.retries.max(1) {
                let free = high_into(g, &b_rem, a0, beta_n);
                let mut budget = Budget::new(cfg.search_budget);
                let hubs = match find_linked_squares(&query, &g1, rng, &mut budget, None) {
                    LinkedOutcome::Found(h) => [h[0][0], h[1][0], h[2][0]],
                    LinkedOutcome::AbsentInSample => {
                        return Err(StageReport::failed(STAGE, "no hub path among high-degree A-vertices")
                            .stat("candidates", hubs_ok.len() as f64)
                            .stat("pieces", pieces.len() as f64))
                    }
                    LinkedOutcome::BudgetExhausted => continue,
                };
                let slots = (0..len)
                    .map(|x| match del.iter().position(|&d| d == x) {
                        Some(i) => Slot::Hub(hubs[i]),
                        None => Slot::Free(free.clone()),
                    })
                    .collect();
                if let LinkedOutcome::Found(seq) = realize_hub_template(&HubTemplate { slots }, &g1, &g1, rng, &mut budget) {
                    done = Some(seq);
                    break;
                }
            }
            let Some(seq) = done else {
                return Err(StageReport::failed(STAGE, "no gadget around the hub paths")
                    .stat("length", len as f64)
                    .stat("pieces", pieces.len() as f64));
            };
            for &v in &seq {
                a_rem.remove(v);
                b_rem.remove(v);
            }
            pieces.push(tag(seq, &host));
        }
    } else {
        let m = q - a0.len();
        report.set("deficit", m as f64);
        let star_thr = 4.0 * (k * k) as f64 * beta_n;
        let mut star: Vec<usize> = b0.iter().filter(|&v| g.count_into(v, b0) as f64 >= star_thr).collect();
        let m0 = m.saturating_sub(star.len());
        report.set("b_star", star.len() as f64);
        report.set("m0", m0 as f64);
        let count = (k + 1) * m0 + extra;
        let star_set = VertexSet::from_iter(n, star.iter().copied());
        if count > 0 {
            let within = b_rem.difference(&star_set);
            let random = g.union(round2).expect("same order");
            let mut budget = Budget::new(cfg.search_budget.saturating_mul(count as u64));
            let out = find_sublinear_square_paths(g, &random, &within, k, count, Regime::Auto, rng, &mut budget).map_err(|r| {
                StageReport::failed(STAGE, format!("short paths inside B: {}", r.unmet.unwrap_or_default()))
                    .stat("copies", r.stats.get("copies").copied().unwrap_or(0.0))
            })?;
            for seq in out.copies {
                for &v in &seq {
                    b_rem.remove(v);
                }
                pieces.push(tag(seq, &host));
            }
        }
        // Keep the m - m0 vertices of largest degree inside B.
        star.sort_by_key(|&v| (std::cmp::Reverse(g.count_into(v, b0)), v));
        star.truncate(m - m0);
        assert!(star.len() == m - m0, "trimmed hub set has the wrong size");
        let star_set = VertexSet::from_iter(n, star.iter().copied());
        let low_b = VertexSet::from_iter(n, b_rem.iter().filter(|&v| (g.count_into(v, a0) as f64) < a0.len() as f64 - beta_n));
        for w in star {
            let nw = g.neighbor_set(w).intersection(&b_rem).difference(&star_set).difference(&low_b);
            let t = HubTemplate::alternating(&[k, k], &[w], &nw);
            let mut found = None;
            for _ in 0..cfg.retries.max(1) {
                let mut budget = Budget::new(cfg.search_budget);
                match realize_hub_template(&t, g, &g1, rng, &mut budget) {
                    LinkedOutcome::Found(seq) => {
                        found = Some(seq);
                        break;
                    }
                    LinkedOutcome::AbsentInSample => break,
                    LinkedOutcome::BudgetExhausted => {}
                }
            }
            let Some(seq) = found else {
                return Err(
                    StageReport::failed(STAGE, "no square path through a high-degree B-vertex").stat("neighbourhood", nw.len() as f64)
                );
            };
            for &v in &seq {
                b_rem.remove(v);
            }
            pieces.push(tag(seq, &host));
        }
    }
    assert_eq!(b_rem.len(), k * (a_rem.len() - pieces.len()), "balance bookkeeping");
    report.set("pieces", pieces.len() as f64);
    let used_a = a0.len() - a_rem.len();
    let used_b = b0.len() - b_rem.len();
    Ok(StageOutput { family: PieceFamily { role: Role::F1Balancing, pieces, used_a, used_b }, a: a_rem, b: b_rem, report })
}
