//! Finite counting witnesses that a graph contains no square Hamilton cycle.
//!
//! Both certificates assume a partition `(A, B)` with `A` independent. In a
//! square Hamilton cycle, two vertices of an independent `A` are at cyclic
//! distance at least three, so the cycle splits into `|A|` runs of `B`-vertices,
//! each of length `L >= 2`, and each run spans the square of a path inside `B`.
//!
//! * Packing: a run of length `L` holds `⌊L/k⌋ >= (L-k+1)/k` disjoint copies of
//!   `P_k^2`, so the copy count `c` (or exact packing number) inside `B` is at
//!   least `(n - k|A|)/k`.
//! * Small gap: a run of length `L > k` holds `L - k` windows of `P_{k+1}^2`,
//!   so the number `s` of runs shorter than `k` satisfies
//!   `s <= c₊ + (k+1)|A| - n`. Vertices of `B` lying in no `P_k^2` inside `B`
//!   must sit in short runs, so `z <= (k-1)s`. The fired inequality uses the
//!   weaker right-hand side `(k²-1)c₊ + (k-1)max(0, (k+1)|A| - n)`. For `k = 2`
//!   every run is long enough, so any such vertex at all rules the cycle out.

use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::oracle::{count_pk2_copies, for_each_labeled_pk2, max_disjoint_pk2_packing};
use crate::report::Budget;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertError {
    #[error("k must be at least 2")]
    BadK,
    #[error("A and B do not partition the vertex set")]
    NotPartition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    PackingObstruction,
    SmallGapObstruction,
}

fn ser_ratio<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
    if *r.denom() == 1 {
        s.serialize_str(&r.numer().to_string())
    } else {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }
}

/// `lhs < rhs` or `lhs > rhs`, both exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Inequality {
    #[serde(serialize_with = "ser_ratio")]
    pub lhs: Rational64,
    pub relation: &'static str,
    #[serde(serialize_with = "ser_ratio")]
    pub rhs: Rational64,
    pub lhs_expr: &'static str,
    pub rhs_expr: &'static str,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        match self.relation {
            "<" => self.lhs < self.rhs,
            ">" => self.lhs > self.rhs,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbsenceCertificate {
    pub kind: CertificateKind,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub k: usize,
    pub counts: BTreeMap<String, u64>,
    pub inequality: Inequality,
    /// Packing numbers were used in place of copy counts.
    pub packing_mode: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertOutcome {
    Fired(AbsenceCertificate),
    NotApplicable { reason: String },
}

impl CertOutcome {
    pub fn fired(&self) -> Option<&AbsenceCertificate> {
        match self {
            CertOutcome::Fired(c) => Some(c),
            CertOutcome::NotApplicable { .. } => None,
        }
    }

    fn na(reason: impl Into<String>) -> Self {
        CertOutcome::NotApplicable { reason: reason.into() }
    }
}

/// How the packing certificate measures `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    Copies,
    /// Exact packing number when it can be computed in the given budget,
    /// copy count otherwise.
    Packing(u64),
}

fn check_common(g: &Graph, a: &VertexSet, b: &VertexSet, k: usize) -> Result<Option<CertOutcome>, CertError> {
    if k < 2 {
        return Err(CertError::BadK);
    }
    let n = g.n();
    if a.universe() != n || b.universe() != n || !a.is_disjoint(b) || a.len() + b.len() != n {
        return Err(CertError::NotPartition);
    }
    if n < 5 {
        return Ok(Some(CertOutcome::na("fewer than five vertices")));
    }
    if a.is_empty() {
        return Ok(Some(CertOutcome::na("A is empty")));
    }
    if g.edges_within(a) > 0 {
        return Ok(Some(CertOutcome::na("A spans an edge")));
    }
    Ok(None)
}

pub fn packing_obstruction(g: &Graph, a: &VertexSet, b: &VertexSet, k: usize, mode: CountMode) -> Result<CertOutcome, CertError> {
    if let Some(out) = check_common(g, a, b, k)? {
        return Ok(out);
    }
    let n = g.n() as i64;
    let copies = count_pk2_copies(g, k, b).expect("k >= 2");
    let mut counts = BTreeMap::from([("pk2_copies_in_b".to_string(), copies)]);
    let mut measure = copies;
    let mut packing_mode = false;
    if let CountMode::Packing(limit) = mode {
        let p = max_disjoint_pk2_packing(g, k, b, &mut Budget::new(limit)).expect("k >= 2");
        if p.exact {
            counts.insert("pk2_packing_in_b".to_string(), p.count as u64);
            measure = p.count as u64;
            packing_mode = true;
        }
    }
    let lhs = Rational64::from_integer(measure as i64);
    let rhs = Rational64::new(n - k as i64 * a.len() as i64, k as i64);
    let inequality = Inequality {
        lhs,
        relation: "<",
        rhs,
        lhs_expr: if packing_mode { "packing number of P_k^2 in B" } else { "copies of P_k^2 in B" },
        rhs_expr: "(n - k|A|)/k",
    };
    if !inequality.holds() {
        return Ok(CertOutcome::na("enough squared paths inside B"));
    }
    Ok(CertOutcome::Fired(AbsenceCertificate {
        kind: CertificateKind::PackingObstruction,
        a: a.to_vec(),
        b: b.to_vec(),
        k,
        counts,
        inequality,
        packing_mode,
    }))
}

/// Vertices of `within` lying in no copy of `P_k^2` inside `within`.
pub fn uncovered_vertices(g: &Graph, k: usize, within: &VertexSet) -> VertexSet {
    let mut covered = VertexSet::empty(g.n());
    let mut todo = within.clone();
    // One copy through each vertex is enough; walk from every still-uncovered vertex.
    while let Some(v) = todo.first() {
        todo.remove(v);
        for_each_labeled_pk2(g, k, within, |seq| {
            if seq.contains(&v) {
                for &u in seq {
                    covered.insert(u);
                    todo.remove(u);
                }
                return false;
            }
            true
        });
    }
    within.difference(&covered)
}

pub fn small_gap_obstruction(g: &Graph, a: &VertexSet, b: &VertexSet, k: usize) -> Result<CertOutcome, CertError> {
    if let Some(out) = check_common(g, a, b, k)? {
        return Ok(out);
    }
    let n = g.n() as i64;
    let z = uncovered_vertices(g, k, b).len() as i64;
    let c_plus = count_pk2_copies(g, k + 1, b).expect("k + 1 >= 2") as i64;
    let k_i = k as i64;
    let slack = ((k_i + 1) * a.len() as i64 - n).max(0);
    let (rhs, rhs_expr) =
        if k == 2 { (0, "0") } else { ((k_i * k_i - 1) * c_plus + (k_i - 1) * slack, "(k^2-1)c+ + (k-1)max(0, (k+1)|A| - n)") };
    let inequality = Inequality {
        lhs: Rational64::from_integer(z),
        relation: ">",
        rhs: Rational64::from_integer(rhs),
        lhs_expr: "vertices of B in no P_k^2 inside B",
        rhs_expr,
    };
    if !inequality.holds() {
        return Ok(CertOutcome::na("too few uncovered vertices in B"));
    }
    let counts = BTreeMap::from([("uncovered_in_b".to_string(), z as u64), ("pk1_copies_in_b".to_string(), c_plus as u64)]);
    Ok(CertOutcome::Fired(AbsenceCertificate {
        kind: CertificateKind::SmallGapObstruction,
        a: a.to_vec(),
        b: b.to_vec(),
        k,
        counts,
        inequality,
        packing_mode: false,
    }))
}

impl AbsenceCertificate {
    /// Recomputes the certificate from `g` and checks it matches and still fires.
    pub fn recheck(&self, g: &Graph) -> bool {
        let n = g.n();
        if self.a.iter().chain(&self.b).any(|&v| v >= n) {
            return false;
        }
        let a = VertexSet::from_iter(n, self.a.iter().copied());
        let b = VertexSet::from_iter(n, self.b.iter().copied());
        if g.edges_within(&a) != 0 {
            return false;
        }
        let again = match self.kind {
            CertificateKind::PackingObstruction => {
                let mode = if self.packing_mode { CountMode::Packing(u64::MAX) } else { CountMode::Copies };
                packing_obstruction(g, &a, &b, self.k, mode)
            }
            CertificateKind::SmallGapObstruction => small_gap_obstruction(g, &a, &b, self.k),
        };
        matches!(again, Ok(CertOutcome::Fired(c)) if c == *self && c.inequality.holds())
    }
}
