//! Predicted perturbed thresholds, Monte Carlo success estimates, log-scale
//! bisection, exponent fits, and the Janson and Chernoff calculators.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::certificates::{packing_obstruction, small_gap_obstruction, CountMode};
use crate::extremal::{run_extremal_pipeline, ExtremalConfig};
use crate::generators::{GenError, PerturbedModel};
use crate::graph::{Graph, VertexSet};
use crate::oracle::{find_square_ham_cycle, pk2_automorphisms};
use crate::powers::square_of_path;
use crate::report::{Budget, Search};
use crate::seed::Seed;
use crate::stability::StabilityWitness;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("alpha {0} outside [0, 1)")]
    Alpha(f64),
    #[error("decider {decider} cannot run at n = {n}: {why}")]
    Scale { decider: &'static str, n: usize, why: String },
    #[error("endpoints do not bracket the target: rate {rate_hi} at the upper endpoint {p_hi}")]
    NotBracketing { p_hi: f64, rate_hi: f64 },
    #[error("degenerate design: {0}")]
    Degenerate(String),
    #[error("unsupported structure: {0}")]
    Unsupported(String),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error(transparent)]
    Generator(#[from] GenError),
}

/// Distance below which `alpha` is read as the nearby boundary value
/// (`1/(k+1)`, `1/2`, `2/3`), so `0.3333` means `1/3`.
pub const BOUNDARY_TOL: f64 = 5e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdPrediction {
    pub alpha: f64,
    pub regime: String,
    pub k: Option<usize>,
    /// `None` when the threshold is `0`.
    pub exponent: Option<Rational64>,
    pub log_exponent: Rational64,
    pub closed_form: String,
}

impl ThresholdPrediction {
    fn zero(alpha: f64) -> Self {
        ThresholdPrediction {
            alpha,
            regime: "alpha >= 2/3".into(),
            k: None,
            exponent: None,
            log_exponent: Rational64::zero(),
            closed_form: "0".into(),
        }
    }

    fn power(alpha: f64, regime: String, k: Option<usize>, exponent: Rational64, log_exponent: Rational64) -> Self {
        let mut closed_form = format!("n^({})", exponent);
        if log_exponent == Rational64::one() {
            closed_form.push_str(" log n");
        } else if !log_exponent.is_zero() {
            closed_form.push_str(&format!(" (log n)^({})", log_exponent));
        }
        ThresholdPrediction { alpha, regime, k, exponent: Some(exponent), log_exponent, closed_form }
    }

    pub fn is_zero(&self) -> bool {
        self.exponent.is_none()
    }

    pub fn exponent_f64(&self) -> Option<f64> {
        self.exponent.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }

    /// The closed form at `n`, with natural logarithms.
    pub fn value(&self, n: f64) -> f64 {
        let Some(e) = self.exponent_f64() else { return 0.0 };
        let l = *self.log_exponent.numer() as f64 / *self.log_exponent.denom() as f64;
        n.powf(e) * n.ln().powf(l)
    }
}

fn snap(alpha: f64, target: f64) -> bool {
    (alpha - target).abs() <= BOUNDARY_TOL
}

fn check_alpha(alpha: f64) -> Result<(), ThresholdError> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(ThresholdError::Alpha(alpha))
    }
}

/// `-(k-1)/(2k-3)`.
pub fn square_path_exponent(k: usize) -> Rational64 {
    Rational64::new(-(k as i64 - 1), 2 * k as i64 - 3)
}

/// Threshold for the square of a Hamilton cycle in `G_alpha ∪ G(n, p)`.
pub fn predicted_threshold(alpha: f64) -> Result<ThresholdPrediction, ThresholdError> {
    check_alpha(alpha)?;
    if alpha >= 2.0 / 3.0 || snap(alpha, 2.0 / 3.0) {
        return Ok(ThresholdPrediction::zero(alpha));
    }
    if alpha >= 0.5 || snap(alpha, 0.5) {
        return Ok(ThresholdPrediction::power(alpha, "1/2 <= alpha < 2/3".into(), None, Rational64::from_integer(-1), Rational64::zero()));
    }
    if alpha <= BOUNDARY_TOL {
        return Ok(ThresholdPrediction::power(alpha, "alpha = 0".into(), None, Rational64::new(-1, 2), Rational64::zero()));
    }
    let near = (1.0 / alpha).round() as usize;
    let (k, boundary) = if near >= 3 && snap(alpha, 1.0 / near as f64) {
        (near - 1, true)
    } else {
        (((1.0 / alpha).ceil() as usize).saturating_sub(1).max(2), false)
    };
    let e = square_path_exponent(k);
    Ok(if boundary {
        ThresholdPrediction::power(alpha, format!("alpha = 1/{}", k + 1), Some(k), e, Rational64::new(1, 2 * k as i64 - 3))
    } else {
        ThresholdPrediction::power(alpha, format!("1/{} < alpha < 1/{}", k + 1, k), Some(k), e, Rational64::zero())
    })
}

/// Threshold for containing every graph of maximum degree two.
pub fn predicted_threshold_universality(alpha: f64) -> Result<ThresholdPrediction, ThresholdError> {
    check_alpha(alpha)?;
    let p = |regime: &str, e: Rational64, l: Rational64| ThresholdPrediction::power(alpha, regime.into(), None, e, l);
    Ok(if alpha >= 2.0 / 3.0 || snap(alpha, 2.0 / 3.0) {
        ThresholdPrediction::zero(alpha)
    } else if snap(alpha, 1.0 / 3.0) {
        p("alpha = 1/3", Rational64::from_integer(-1), Rational64::one())
    } else if alpha > 1.0 / 3.0 {
        p("1/3 < alpha < 2/3", Rational64::from_integer(-1), Rational64::zero())
    } else if alpha <= BOUNDARY_TOL {
        p("alpha = 0", Rational64::new(-2, 3), Rational64::new(1, 3))
    } else {
        p("0 < alpha < 1/3", Rational64::new(-2, 3), Rational64::zero())
    })
}

pub const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (n, z) = (trials as f64, WILSON_Z);
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeciderKind {
    Exact,
    Pipeline,
    Certificate,
}

impl DeciderKind {
    pub fn label(self) -> &'static str {
        match self {
            DeciderKind::Exact => "exact",
            DeciderKind::Pipeline => "pipeline",
            DeciderKind::Certificate => "certificate",
        }
    }
}

/// Largest order the exact decider accepts.
pub const EXACT_MAX_N: usize = 14;

/// How one sampled union is judged.
#[derive(Clone, Debug)]
pub enum Decider {
    /// Containment by exhaustive search; budget exhaustion counts as undecided.
    Exact { budget: u64 },
    /// Success of the extremal embedding pipeline; measures the algorithm,
    /// not containment.
    Pipeline { k: usize, witness: Option<StabilityWitness>, config: ExtremalConfig },
    /// Success unless a certificate fires on `(A, V \ A)`, so the rate bounds
    /// containment from above.
    Certificate { k: usize, a: VertexSet },
}

impl Decider {
    pub fn kind(&self) -> DeciderKind {
        match self {
            Decider::Exact { .. } => DeciderKind::Exact,
            Decider::Pipeline { .. } => DeciderKind::Pipeline,
            Decider::Certificate { .. } => DeciderKind::Certificate,
        }
    }

    fn check(&self, n: usize) -> Result<(), ThresholdError> {
        let bad = |why: String| Err(ThresholdError::Scale { decider: self.kind().label(), n, why });
        match self {
            Decider::Exact { .. } if n > EXACT_MAX_N => bad(format!("exhaustive search is limited to n <= {EXACT_MAX_N}")),
            Decider::Pipeline { k, .. } if n < 12 * (k + 1) => bad("too few vertices for the pipeline's pieces".into()),
            Decider::Certificate { k, a } if *k < 2 || a.universe() != n => bad("needs k >= 2 and A on the model's vertex set".into()),
            _ => Ok(()),
        }
    }

    /// `Some(true)` on success, `None` when undecided.
    pub fn decide(&self, model: &PerturbedModel, seed: Seed) -> Option<bool> {
        match self {
            Decider::Exact { budget } => match find_square_ham_cycle(&model.sample_coupled(seed), &mut Budget::new(*budget)) {
                Search::Found(_) => Some(true),
                Search::Absent => Some(false),
                Search::BudgetExhausted => None,
            },
            Decider::Pipeline { k, witness, config } => {
                Some(run_extremal_pipeline(&model.dense, *k, model.p, seed, witness.clone(), config).success)
            }
            Decider::Certificate { k, a } => {
                let g = model.sample_coupled(seed);
                let b = a.complement();
                let fired = packing_obstruction(&g, a, &b, *k, CountMode::Copies).ok().is_some_and(|o| o.fired().is_some())
                    || small_gap_obstruction(&g, a, &b, *k).ok().is_some_and(|o| o.fired().is_some());
                Some(!fired)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub trials: usize,
    pub successes: usize,
    pub undecided: usize,
    pub decider: DeciderKind,
    pub wilson: (f64, f64),
}

impl SweepPoint {
    pub fn rate(&self) -> f64 {
        let decided = self.trials - self.undecided;
        if decided == 0 {
            0.0
        } else {
            self.successes as f64 / decided as f64
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub alpha: f64,
    pub model: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

pub const SWEEP_CSV_HEADER: &str = "alpha,n,p,trials,successes,decider,seed";

/// Runs `f` on trial indices `0..trials`, in parallel when the feature is on.
fn run_trials(trials: usize, f: impl Fn(u64) -> Option<bool> + Send + Sync) -> (usize, usize) {
    let tally = |acc: (usize, usize), r: Option<bool>| match r {
        Some(true) => (acc.0 + 1, acc.1),
        Some(false) => acc,
        None => (acc.0, acc.1 + 1),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials as u64).into_par_iter().map(f).fold(|| (0, 0), tally).reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials as u64).map(f).fold((0, 0), tally)
    }
}

/// Success rate of `decider` over `trials` seeds derived from `seed`. Trial
/// `i` always uses the same derived seed, so points at different `p` share
/// their randomness.
pub fn estimate_success_prob(model: &PerturbedModel, decider: &Decider, trials: usize, seed: Seed) -> Result<SweepPoint, ThresholdError> {
    decider.check(model.n())?;
    let (successes, undecided) = run_trials(trials, |i| decider.decide(model, seed.derive("trial", i)));
    let decided = trials - undecided;
    Ok(SweepPoint { p: model.p, trials, successes, undecided, decider: decider.kind(), wilson: wilson_interval(successes, decided) })
}

#[derive(Clone, Debug, Serialize)]
pub struct Bisection {
    pub p_hat: f64,
    /// True when a probe landed within `tol` of the target; false when the
    /// bracket shrank below the width limit first or the lower endpoint
    /// already met the target.
    pub converged: bool,
    pub probes: Vec<SweepPoint>,
}

#[derive(Clone, Copy, Debug)]
pub struct BisectOptions {
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    pub tol: f64,
    /// Stop once `hi / lo - 1` falls below this.
    pub rel_width: f64,
    pub max_probes: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions { lo: 1e-4, hi: 1.0, target: 0.5, tol: 0.05, rel_width: 1e-3, max_probes: 40 }
    }
}

/// Bisection on `log p` with a caller-supplied probe.
pub fn bisect_log(
    opts: &BisectOptions,
    mut probe: impl FnMut(f64) -> Result<SweepPoint, ThresholdError>,
) -> Result<Bisection, ThresholdError> {
    if !(opts.lo > 0.0 && opts.lo < opts.hi) {
        return Err(ThresholdError::Domain(format!("need 0 < lo < hi, got [{}, {}]", opts.lo, opts.hi)));
    }
    let (mut lo, mut hi) = (opts.lo, opts.hi);
    let mut probes = Vec::new();
    let first = probe(lo)?;
    let r_lo = first.rate();
    probes.push(first);
    if r_lo >= opts.target - opts.tol {
        return Ok(Bisection { p_hat: lo, converged: false, probes });
    }
    let last = probe(hi)?;
    let r_hi = last.rate();
    probes.push(last);
    if r_hi < opts.target - opts.tol {
        return Err(ThresholdError::NotBracketing { p_hi: hi, rate_hi: r_hi });
    }
    while probes.len() < opts.max_probes && hi / lo - 1.0 > opts.rel_width {
        let mid = (lo * hi).sqrt();
        let pt = probe(mid)?;
        let r = pt.rate();
        probes.push(pt);
        if (r - opts.target).abs() <= opts.tol {
            return Ok(Bisection { p_hat: mid, converged: true, probes });
        }
        if r < opts.target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection { p_hat: (lo * hi).sqrt(), converged: false, probes })
}

/// `p̂` for the dense graph of `model` under `decider`, with common trial seeds
/// across probes.
pub fn bisect_critical_p(
    model: &PerturbedModel,
    decider: &Decider,
    trials: usize,
    opts: &BisectOptions,
    seed: Seed,
) -> Result<Bisection, ThresholdError> {
    bisect_log(opts, |p| {
        let m = PerturbedModel::new(model.dense.clone(), p, model.alpha)?;
        estimate_success_prob(&m, decider, trials, seed)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares slope of `log p̂` against `log n`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit, ThresholdError> {
    if points.len() < 3 {
        return Err(ThresholdError::Degenerate("need at least three points".into()));
    }
    if points.iter().any(|&(n, p)| !(n > 0.0 && p > 0.0)) {
        return Err(ThresholdError::Degenerate("n and p must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return Err(ThresholdError::Degenerate("all n equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(ExponentFit { slope, intercept, stderr, points: points.to_vec() })
}

/// Structures the Janson calculator supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Structure {
    /// `P_k^2`; `k = 3` is the triangle.
    SquarePath { k: usize },
    /// `s` copies of `P_k^2`, consecutive copies joined by one edge.
    LinkedSquares { k: usize, s: usize },
    /// `P_{k+1}^2`, as used for short square paths.
    ShortSquarePath { k: usize },
}

impl Structure {
    /// `(k, s)` of the equivalent linked structure.
    fn shape(self) -> Result<(usize, usize), ThresholdError> {
        let (k, s) = match self {
            Structure::SquarePath { k } => (k, 1),
            Structure::LinkedSquares { k, s } => (k, s),
            Structure::ShortSquarePath { k } => (k + 1, 1),
        };
        if k < 2 || s < 1 || k * s > 16 {
            return Err(ThresholdError::Unsupported(format!("{self:?}")));
        }
        Ok((k, s))
    }

    pub fn graph(self) -> Result<Graph, ThresholdError> {
        let (k, s) = self.shape()?;
        Ok(linked_squares_graph(k, s))
    }
}

/// `s` disjoint copies of `P_k^2` on consecutive blocks, block `i` ending in an
/// edge to the start of block `i + 1`.
pub fn linked_squares_graph(k: usize, s: usize) -> Graph {
    let sq = square_of_path(k);
    let mut b = crate::graph::GraphBuilder::new(k * s);
    for i in 0..s {
        for (u, v) in sq.edges() {
            b.add_edge(i * k + u, i * k + v);
        }
        if i + 1 < s {
            b.add_edge(i * k + k - 1, (i + 1) * k);
        }
    }
    b.build()
}

/// Largest number of shared edges between two linked-square structures that
/// share `m` vertices.
pub fn e_tilde(k: usize, m: usize) -> Result<usize, ThresholdError> {
    if k < 2 || m < 2 {
        return Err(ThresholdError::Domain(format!("need k >= 2 and m >= 2, got k = {k}, m = {m}")));
    }
    let q = m / k;
    let r = m - k * q;
    Ok(match r {
        0 => q * (2 * k - 3) + q - 1,
        1 => q * (2 * k - 3) + q,
        _ => q * (2 * k - 3) + q + 2 * r - 3,
    })
}

fn automorphisms(g: &Graph) -> u64 {
    fn rec(g: &Graph, map: &mut Vec<usize>, used: &mut Vec<bool>) -> u64 {
        let i = map.len();
        if i == g.n() {
            return 1;
        }
        let mut total = 0;
        for c in 0..g.n() {
            if used[c] || g.degree(c) != g.degree(i) {
                continue;
            }
            if (0..i).all(|j| g.has_edge(i, j) == g.has_edge(c, map[j])) {
                used[c] = true;
                map.push(c);
                total += rec(g, map, used);
                map.pop();
                used[c] = false;
            }
        }
        total
    }
    rec(g, &mut Vec::new(), &mut vec![false; g.n()])
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapTerm {
    pub shared_vertices: usize,
    pub shared_edges: usize,
    pub term: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct JansonBounds {
    pub structure: Structure,
    pub set_size: usize,
    pub p: f64,
    pub vertices: usize,
    pub edges: usize,
    pub automorphisms: u64,
    /// Over ordered vertex tuples, the family the bound is stated for.
    pub expected_tuples: f64,
    /// Over unlabelled copies: `expected_tuples / automorphisms`.
    pub expected_copies: f64,
    /// Upper bound on the overlap sum, one term per shared-vertex count.
    pub delta: f64,
    pub terms: Vec<OverlapTerm>,
    pub gamma: f64,
    /// Bound on `P[X <= (1 - gamma) E[X]]`.
    pub lower_tail: f64,
}

fn falling(n: usize, r: usize) -> BigInt {
    (0..r).fold(BigInt::one(), |acc, i| acc * BigInt::from(n.saturating_sub(i)))
}

fn binom(n: usize, r: usize) -> BigInt {
    falling(n, r) / falling(r, r)
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Expected count and overlap sum for copies of `structure` inside a set of
/// `set_size` vertices of `G(n, p)`, and the lower-tail bound at `gamma`.
/// Both sums are taken exactly in rationals; the overlap sum counts, for each
/// `m` from 2 to `v - 1`, at most `m! C(v, m)^2 n^(2v - m)` tuple pairs sharing
/// `m` vertices, each contributing `p^(2e - ẽ(m))`.
pub fn janson_bounds(structure: Structure, set_size: usize, p: f64, gamma: f64) -> Result<JansonBounds, ThresholdError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ThresholdError::Domain(format!("p = {p} outside [0, 1]")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ThresholdError::Domain(format!("gamma = {gamma} outside (0, 1)")));
    }
    let (k, s) = structure.shape()?;
    let g = linked_squares_graph(k, s);
    let (v, e) = (g.n(), g.edge_count());
    let aut = if s == 1 { pk2_automorphisms(k) } else { automorphisms(&g) };
    let pr = BigRational::from_float(p).expect("finite p");
    let pow = |x: usize| -> BigRational { (0..x).fold(BigRational::one(), |acc, _| acc * &pr) };
    let expected = BigRational::from_integer(falling(set_size, v)) * pow(e);
    let mut delta = BigRational::zero();
    let mut terms = Vec::new();
    for m in 2..v {
        let shared = e_tilde(k, m)?.min(e);
        let c = binom(v, m);
        let pairs = falling(m, m) * &c * &c * num_traits::pow(BigInt::from(set_size), 2 * v - m);
        let term = BigRational::from_integer(pairs) * pow(2 * e - shared);
        terms.push(OverlapTerm { shared_vertices: m, shared_edges: shared, term: ratio_to_f64(&term) });
        delta += term;
    }
    let expected_tuples = ratio_to_f64(&expected);
    let delta_f = ratio_to_f64(&delta);
    let lower_tail = if expected.is_zero() {
        1.0
    } else {
        let ex2 = &expected * &expected;
        let denom = (&expected + &delta) * BigRational::from_integer(BigInt::from(2));
        let frac = ratio_to_f64(&(ex2 / denom));
        (-gamma * gamma * frac).exp()
    };
    Ok(JansonBounds {
        structure,
        set_size,
        p,
        vertices: v,
        edges: e,
        automorphisms: aut,
        expected_tuples,
        expected_copies: ratio_to_f64(&(expected / BigRational::from_integer(BigInt::from(aut)))),
        delta: delta_f,
        terms,
        gamma,
        lower_tail,
    })
}

/// `D(x || y)` with `0 log 0 = 0`.
pub fn relative_entropy(x: f64, y: f64) -> f64 {
    let t = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    t(x, y) + t(1.0 - x, 1.0 - y)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChernoffBounds {
    pub n: u64,
    pub p: f64,
    pub delta: f64,
    pub mean: f64,
    /// Bound on `P[|X - E X| >= delta E X]`.
    pub multiplicative: f64,
    /// Bound on `P[X <= E X - delta n]`.
    pub relative_entropy: f64,
}

/// Both tail bounds for `Bin(n, p)`; each is capped at 1.
pub fn chernoff_bounds(n: u64, p: f64, delta: f64) -> Result<ChernoffBounds, ThresholdError> {
    if n == 0 {
        return Err(ThresholdError::Domain("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(ThresholdError::Domain(format!("p = {p} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(ThresholdError::Domain(format!("delta = {delta} outside [0, 1)")));
    }
    if delta > p {
        return Err(ThresholdError::Domain(format!("delta = {delta} exceeds p = {p}")));
    }
    let mean = n as f64 * p;
    let multiplicative = (2.0 * (-delta * delta / 3.0 * mean).exp()).min(1.0);
    let relative = (-relative_entropy(p - delta, p) * n as f64).exp().min(1.0);
    Ok(ChernoffBounds { n, p, delta, mean, multiplicative, relative_entropy: relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{extremal_bipartite, gnp};

    fn r(a: i64, b: i64) -> Option<Rational64> {
        Some(Rational64::new(a, b))
    }

    #[test]
    fn main_table() {
        assert_eq!(predicted_threshold(0.55).unwrap().exponent, r(-1, 1));
        let t = predicted_threshold(0.30).unwrap();
        assert_eq!((t.k, t.exponent, t.log_exponent), (Some(3), r(-2, 3), Rational64::zero()));
        let t = predicted_threshold(0.25).unwrap();
        assert_eq!((t.k, t.exponent, t.log_exponent), (Some(3), r(-2, 3), Rational64::new(1, 3)));
        assert!(predicted_threshold(0.7).unwrap().is_zero());
        assert_eq!(predicted_threshold(0.0).unwrap().exponent, r(-1, 2));
        let t = predicted_threshold(0.3333).unwrap();
        assert_eq!((t.k, t.exponent, t.log_exponent), (Some(2), r(-1, 1), Rational64::one()));
        assert_eq!(predicted_threshold(0.4).unwrap().log_exponent, Rational64::zero());
        assert!(predicted_threshold(1.0).is_err());
    }

    #[test]
    fn universality_table() {
        assert_eq!(predicted_threshold_universality(0.5).unwrap().exponent, r(-1, 1));
        let t = predicted_threshold_universality(1.0 / 3.0).unwrap();
        assert_eq!((t.exponent, t.log_exponent), (r(-1, 1), Rational64::one()));
        assert_eq!(predicted_threshold_universality(0.2).unwrap().exponent, r(-2, 3));
        assert_eq!(predicted_threshold_universality(0.0).unwrap().log_exponent, Rational64::new(1, 3));
        assert!(predicted_threshold_universality(0.8).unwrap().is_zero());
    }

    #[test]
    fn exponent_tends_to_one_half() {
        let mut last = -1.0;
        for k in 2..=50 {
            let alpha = 1.0 / (k as f64 + 0.5);
            let e = predicted_threshold(alpha).unwrap().exponent_f64().unwrap();
            assert!(e > last - 1e-12 && e < -0.5);
            last = e;
        }
        assert!((last + 0.5).abs() < 0.011);
        assert_eq!(square_path_exponent(2), Rational64::from_integer(-1));
        assert_eq!(predicted_threshold(0.49).unwrap().exponent, predicted_threshold(0.5).unwrap().exponent);
    }

    #[test]
    fn closed_form_values() {
        let t = predicted_threshold(0.25).unwrap();
        assert_eq!(t.closed_form, "n^(-2/3) (log n)^(1/3)");
        let n: f64 = 1000.0;
        assert!((t.value(n) - n.powf(-2.0 / 3.0) * n.ln().powf(1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(predicted_threshold(0.8).unwrap().value(n), 0.0);
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 200);
        assert_eq!(lo, 0.0);
    }

    fn h13(n: usize, p: f64) -> (PerturbedModel, VertexSet) {
        let (g, a, _) = extremal_bipartite(1.0 / 3.0, n).unwrap();
        (PerturbedModel::new(g, p, 1.0 / 3.0).unwrap(), a)
    }

    #[test]
    fn full_overlay_always_succeeds() {
        for n in [5, 7, 9] {
            let (m, _) = h13(n, 1.0);
            let pt = estimate_success_prob(&m, &Decider::Exact { budget: 1_000_000 }, 10, Seed(1)).unwrap();
            assert_eq!(pt.successes, 10);
        }
    }

    #[test]
    fn bare_extremal_graph_never_succeeds() {
        let (m, a) = h13(9, 0.0);
        let pt = estimate_success_prob(&m, &Decider::Exact { budget: 1_000_000 }, 20, Seed(1)).unwrap();
        assert_eq!((pt.successes, pt.undecided), (0, 0));
        let pt = estimate_success_prob(&m, &Decider::Certificate { k: 2, a }, 20, Seed(1)).unwrap();
        assert_eq!(pt.successes, 0);
    }

    #[test]
    fn decider_scale_is_checked() {
        let (m, _) = h13(30, 0.1);
        assert!(matches!(estimate_success_prob(&m, &Decider::Exact { budget: 10 }, 1, Seed(0)), Err(ThresholdError::Scale { .. })));
        let (m, _) = h13(9, 0.1);
        let d = Decider::Pipeline { k: 2, witness: None, config: ExtremalConfig::default() };
        assert!(matches!(estimate_success_prob(&m, &d, 1, Seed(0)), Err(ThresholdError::Scale { .. })));
    }

    #[test]
    fn rate_is_monotone_along_the_coupling() {
        let d = Decider::Exact { budget: 1_000_000 };
        let mut last = 0;
        for p in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8] {
            let (m, _) = h13(9, p);
            let pt = estimate_success_prob(&m, &d, 60, Seed(3)).unwrap();
            assert!(pt.successes >= last);
            last = pt.successes;
        }
    }

    fn step(p0: f64) -> impl FnMut(f64) -> Result<SweepPoint, ThresholdError> {
        move |p| {
            let s = if p >= p0 { 100 } else { 0 };
            Ok(SweepPoint { p, trials: 100, successes: s, undecided: 0, decider: DeciderKind::Exact, wilson: wilson_interval(s, 100) })
        }
    }

    #[test]
    fn bisection_on_synthetic_steps() {
        let opts = BisectOptions { lo: 1e-3, hi: 1.0, ..BisectOptions::default() };
        let b = bisect_log(&opts, step(0.0)).unwrap();
        assert_eq!(b.p_hat, 1e-3);
        let b = bisect_log(&opts, step(0.137)).unwrap();
        assert!((b.p_hat - 0.137).abs() <= 0.137 * 2e-3, "{}", b.p_hat);
        assert!(matches!(bisect_log(&opts, step(2.0)), Err(ThresholdError::NotBracketing { .. })));
    }

    #[test]
    fn bisection_is_reproducible_across_seed_batches() {
        let (m, _) = h13(9, 0.0);
        let d = Decider::Exact { budget: 1_000_000 };
        let opts = BisectOptions { lo: 0.01, hi: 1.0, tol: 0.05, ..BisectOptions::default() };
        let a = bisect_critical_p(&m, &d, 200, &opts, Seed(1)).unwrap();
        let b = bisect_critical_p(&m, &d, 200, &opts, Seed(2)).unwrap();
        assert!((a.p_hat - b.p_hat).abs() <= 2.0 * opts.tol, "{} {}", a.p_hat, b.p_hat);
    }

    #[test]
    fn fit_on_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0].iter().map(|&n: &f64| (n, n.powi(-1))).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12 && f.stderr < 1e-9);
        let pts: Vec<(f64, f64)> = [100.0, 300.0, 900.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-2.0 / 3.0))).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope + 2.0 / 3.0).abs() < 1e-12 && f.stderr < 1e-9);
        assert!(fit_exponent(&pts[..2]).is_err());
        assert!(fit_exponent(&[(10.0, 0.1), (10.0, 0.2), (10.0, 0.3)]).is_err());
    }

    #[test]
    fn e_tilde_small_cases() {
        for m in 2..10 {
            assert_eq!(e_tilde(2, m).unwrap(), m - 1);
        }
        assert_eq!(e_tilde(3, 3).unwrap(), 3);
        assert_eq!(e_tilde(3, 4).unwrap(), 4);
        assert_eq!(e_tilde(3, 5).unwrap(), 5);
        assert_eq!(e_tilde(4, 3).unwrap(), 3);
        assert!(e_tilde(3, 1).is_err());
    }

    #[test]
    fn linked_structure_shape() {
        let g = linked_squares_graph(3, 3);
        assert_eq!((g.n(), g.edge_count()), (9, 2 * 3 * 2 - 1));
        assert_eq!(automorphisms(&g), 8);
        assert_eq!(automorphisms(&square_of_path(4)), 4);
    }

    #[test]
    fn janson_triangle_expectation() {
        let j = janson_bounds(Structure::SquarePath { k: 3 }, 100, 0.1, 0.5).unwrap();
        assert_eq!(j.automorphisms, 6);
        assert!((j.expected_copies - 161_700.0 * 1e-3).abs() < 1e-6);
        let z = janson_bounds(Structure::SquarePath { k: 3 }, 100, 0.0, 0.5).unwrap();
        assert_eq!((z.expected_tuples, z.lower_tail), (0.0, 1.0));
        assert!(janson_bounds(Structure::LinkedSquares { k: 9, s: 2 }, 10, 0.5, 0.5).is_err());
    }

    #[test]
    fn janson_sum_uses_transcribed_overlaps() {
        let j = janson_bounds(Structure::LinkedSquares { k: 2, s: 3 }, 50, 0.2, 0.5).unwrap();
        assert_eq!(j.terms.len(), 4);
        assert!(j.terms.iter().all(|t| t.shared_edges == t.shared_vertices - 1));
        let sum: f64 = j.terms.iter().map(|t| t.term).sum();
        assert!((sum - j.delta).abs() <= 1e-9 * j.delta);
        assert!(j.lower_tail > 0.0 && j.lower_tail <= 1.0);
    }

    #[test]
    fn triangle_counts_match_expectation() {
        let j = janson_bounds(Structure::SquarePath { k: 3 }, 60, 0.15, 0.5).unwrap();
        let all = VertexSet::full(60);
        let counts: Vec<f64> =
            (0..200).map(|i| crate::oracle::count_pk2_copies(&gnp(60, 0.15, Seed(i)).unwrap(), 3, &all).unwrap() as f64).collect();
        let mean = counts.iter().sum::<f64>() / 200.0;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 199.0;
        assert!((mean - j.expected_copies).abs() <= 3.0 * (var / 200.0).sqrt());
    }

    #[test]
    fn chernoff_pinned() {
        let c = chernoff_bounds(100, 0.5, 0.25).unwrap();
        assert!((c.multiplicative - 2.0 * (-50.0_f64 / 48.0).exp()).abs() < 1e-12);
        let d = 0.25 * (0.5_f64).ln() + 0.75 * (1.5_f64).ln();
        assert!((c.relative_entropy - (-100.0 * d).exp()).abs() < 1e-15);
        assert!((c.relative_entropy - 2.08404e-6).abs() < 1e-10, "{}", c.relative_entropy);
        let z = chernoff_bounds(100, 0.5, 0.0).unwrap();
        assert_eq!((z.multiplicative, z.relative_entropy), (1.0, 1.0));
        assert_eq!(relative_entropy(0.3, 0.3), 0.0);
        assert!(chernoff_bounds(100, 0.1, 0.2).is_err());
        assert!(chernoff_bounds(0, 0.5, 0.1).is_err());
    }
}
