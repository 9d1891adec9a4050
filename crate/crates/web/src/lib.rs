//! Browser bindings: small perturbed instances solved exactly, the predicted
//! threshold for a given `alpha`, and a short Monte Carlo sweep.
//!
//! Every export returns a JSON string so the page needs no generated types.

use perturb_lab::certificates::{packing_obstruction, small_gap_obstruction, CountMode};
use perturb_lab::generators::{extremal_bipartite, PerturbedModel};
use perturb_lab::oracle::find_square_ham_cycle;
use perturb_lab::report::Search;
use perturb_lab::threshold::{estimate_success_prob, predicted_threshold, Decider, EXACT_MAX_N};
use perturb_lab::{Budget, Seed};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const BUDGET: u64 = 20_000_000;

fn to_js<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string())
}

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn check_n(n: usize) -> Result<(), String> {
    if (5..=EXACT_MAX_N).contains(&n) {
        Ok(())
    } else {
        Err(format!("n must lie in 5..={EXACT_MAX_N} for the exact search"))
    }
}

/// One sample of `H_alpha ∪ G(n, p)`: its edges, the split, the exact verdict
/// and whether either certificate fires.
#[wasm_bindgen]
pub fn sample_and_solve(n: usize, alpha: f64, p: f64, seed: u64) -> String {
    if let Err(e) = check_n(n) {
        return error(e);
    }
    let (h, a, b) = match extremal_bipartite(alpha, n) {
        Ok(x) => x,
        Err(e) => return error(e),
    };
    let model = match PerturbedModel::new(h.clone(), p, alpha) {
        Ok(m) => m,
        Err(e) => return error(e),
    };
    let g = model.sample(Seed(seed));
    let random: Vec<(usize, usize)> = g.edges().filter(|&(u, v)| !h.has_edge(u, v)).collect();
    let search = find_square_ham_cycle(&g, &mut Budget::new(BUDGET));
    let k = predicted_threshold(alpha).ok().and_then(|t| t.k).unwrap_or(2);
    let fired = [packing_obstruction(&g, &a, &b, k, CountMode::Copies), small_gap_obstruction(&g, &a, &b, k)]
        .into_iter()
        .filter_map(|o| o.ok().and_then(|o| o.fired().and_then(|c| serde_json::to_value(c).ok())))
        .collect::<Vec<_>>();
    to_js(&json!({
        "n": n,
        "a": a.to_vec(),
        "dense_edges": h.edges().collect::<Vec<_>>(),
        "random_edges": random,
        "status": search.status(),
        "ordering": match search { Search::Found(o) => Some(o), _ => None },
        "certificates": fired,
    }))
}

/// The predicted threshold scale for `alpha`.
#[wasm_bindgen]
pub fn threshold_for(alpha: f64) -> String {
    match predicted_threshold(alpha) {
        Ok(t) => to_js(&t),
        Err(e) => error(e),
    }
}

/// Success rate of the exact search on `H_alpha ∪ G(n, p)` at `count` evenly
/// spaced `p` in `[lo, hi]`.
#[wasm_bindgen]
pub fn sweep(n: usize, alpha: f64, lo: f64, hi: f64, count: usize, trials: usize, seed: u64) -> String {
    if let Err(e) = check_n(n) {
        return error(e);
    }
    if count == 0 || trials == 0 || !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
        return error("need 0 <= lo <= hi <= 1 and positive counts");
    }
    let h = match extremal_bipartite(alpha, n) {
        Ok((h, _, _)) => h,
        Err(e) => return error(e),
    };
    let decider = Decider::Exact { budget: BUDGET };
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let p = if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
        let point = PerturbedModel::new(h.clone(), p, alpha)
            .map_err(|e| e.to_string())
            .and_then(|m| estimate_success_prob(&m, &decider, trials, Seed(seed)).map_err(|e| e.to_string()));
        match point {
            Ok(pt) => points.push(pt),
            Err(e) => return error(e),
        }
    }
    to_js(&json!({ "n": n, "alpha": alpha, "points": points }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn extremal_nine_without_random_edges_is_absent_and_certified() {
        let v = parse(&sample_and_solve(9, 1.0 / 3.0, 0.0, 1));
        assert_eq!(v["status"], "absent");
        assert_eq!(v["a"].as_array().unwrap().len(), 3);
        assert!(!v["certificates"].as_array().unwrap().is_empty());
    }

    #[test]
    fn complete_overlay_is_found() {
        let v = parse(&sample_and_solve(8, 1.0 / 3.0, 1.0, 1));
        assert_eq!(v["status"], "found");
        assert_eq!(v["ordering"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn bad_sizes_are_reported() {
        assert!(parse(&sample_and_solve(40, 0.3, 0.5, 1))["error"].is_string());
        assert!(parse(&sweep(9, 0.3, 0.5, 0.2, 3, 5, 1))["error"].is_string());
    }

    #[test]
    fn sweep_rises_from_zero_to_one() {
        let v = parse(&sweep(9, 1.0 / 3.0, 0.0, 1.0, 2, 10, 3));
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts[0]["successes"], 0);
        assert_eq!(pts[1]["successes"], 10);
    }

    #[test]
    fn threshold_has_a_closed_form() {
        let v = parse(&threshold_for(1.0 / 3.0));
        assert!(v["closed_form"].as_str().unwrap().contains("log n"));
    }
}
