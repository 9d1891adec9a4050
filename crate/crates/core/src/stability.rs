//! The `(alpha, beta)`-stable predicate on a two-part vertex partition.

use serde::Serialize;

use crate::graph::{Graph, VertexSet};

const EPS: f64 = 1e-9;

/// A partition `(A, B)` claimed to witness stability.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityWitness {
    pub a: VertexSet,
    pub b: VertexSet,
    pub alpha: f64,
    pub beta: f64,
}

/// Each condition of the predicate, evaluated separately.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub partition_ok: bool,
    pub sizes_ok: bool,
    pub min_cross_degree: usize,
    pub min_cross_required: f64,
    pub low_a: usize,
    pub low_b: usize,
    pub low_allowed: f64,
    pub b_edges: usize,
    pub b_edges_allowed: f64,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.partition_ok
            && self.sizes_ok
            && self.min_cross_degree as f64 + EPS >= self.min_cross_required
            && self.low_a as f64 <= self.low_allowed + EPS
            && self.low_b as f64 <= self.low_allowed + EPS
            && self.b_edges as f64 <= self.b_edges_allowed + EPS
    }
}

impl StabilityWitness {
    pub fn new(a: VertexSet, b: VertexSet, alpha: f64, beta: f64) -> Self {
        StabilityWitness { a, b, alpha, beta }
    }

    /// `B` defaults to the complement of `A`.
    pub fn from_a(a: VertexSet, alpha: f64, beta: f64) -> Self {
        let b = a.complement();
        StabilityWitness { a, b, alpha, beta }
    }
}

pub fn stability_report(g: &Graph, w: &StabilityWitness) -> StabilityReport {
    let n = g.n();
    let nf = n as f64;
    let (alpha, beta) = (w.alpha, w.beta);
    let partition_ok = w.a.universe() == n && w.b.universe() == n && w.a.is_disjoint(&w.b) && w.a.len() + w.b.len() == n;
    let (na, nb) = (w.a.len() as f64, w.b.len() as f64);
    let within = |x: f64, centre: f64| (x - centre * nf).abs() <= beta * nf + EPS;
    let sizes_ok = within(na, alpha) && within(nb, 1.0 - alpha);

    let mut min_cross = usize::MAX;
    let mut low_a = 0;
    let mut low_b = 0;
    if partition_ok {
        for v in w.a.iter() {
            let d = g.count_into(v, &w.b);
            min_cross = min_cross.min(d);
            if (d as f64) + EPS < nb - beta * nf {
                low_a += 1;
            }
        }
        for v in w.b.iter() {
            let d = g.count_into(v, &w.a);
            min_cross = min_cross.min(d);
            if (d as f64) + EPS < na - beta * nf {
                low_b += 1;
            }
        }
    }
    if min_cross == usize::MAX {
        min_cross = 0;
    }
    StabilityReport {
        partition_ok,
        sizes_ok,
        min_cross_degree: min_cross,
        min_cross_required: alpha * nf / 4.0,
        low_a,
        low_b,
        low_allowed: beta * nf,
        b_edges: if partition_ok { g.edges_within(&w.b) } else { 0 },
        b_edges_allowed: beta * nf * nf,
    }
}

/// Exact evaluation of the four stability conditions.
pub fn verify_stable(g: &Graph, w: &StabilityWitness) -> bool {
    stability_report(g, w).holds()
}
