//! Search budgets, search outcomes and per-stage run reports.

use std::collections::BTreeMap;

use serde::Serialize;

/// A node-expansion allowance shared by one search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub limit: u64,
    pub used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    /// Consumes one unit; false once the allowance is spent.
    #[inline]
    pub fn tick(&mut self) -> bool {
        if self.used >= self.limit {
            return false;
        }
        self.used += 1;
        true
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }
}

/// Result of a bounded search. `Absent` is only produced by exhaustive runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Search<T> {
    Found(T),
    Absent,
    BudgetExhausted,
}

impl<T> Search<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Search::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Search::Found(_))
    }

    pub fn status(&self) -> &'static str {
        match self {
            Search::Found(_) => "found",
            Search::Absent => "absent",
            Search::BudgetExhausted => "budget_exhausted",
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Search<U> {
        match self {
            Search::Found(t) => Search::Found(f(t)),
            Search::Absent => Search::Absent,
            Search::BudgetExhausted => Search::BudgetExhausted,
        }
    }
}

/// Outcome of one pipeline stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub success: bool,
    pub stats: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unmet: Option<String>,
}

impl StageReport {
    pub fn ok(stage: impl Into<String>) -> Self {
        StageReport { stage: stage.into(), success: true, stats: BTreeMap::new(), unmet: None }
    }

    pub fn failed(stage: impl Into<String>, unmet: impl Into<String>) -> Self {
        StageReport { stage: stage.into(), success: false, stats: BTreeMap::new(), unmet: Some(unmet.into()) }
    }

    pub fn stat(mut self, key: &str, value: impl Into<f64>) -> Self {
        self.stats.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<f64>) {
        self.stats.insert(key.to_string(), value.into());
    }
}

impl std::fmt::Display for StageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.unmet {
            Some(u) => write!(f, "stage `{}` failed: {u}", self.stage),
            None => write!(f, "stage `{}` ok", self.stage),
        }
    }
}

impl std::error::Error for StageReport {}

/// Wall-clock laps in milliseconds. Always zero on `wasm32`.
#[derive(Debug)]
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    last: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            last: std::time::Instant::now(),
        }
    }

    /// Milliseconds since the previous lap.
    pub fn lap(&mut self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            let now = std::time::Instant::now();
            let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
            self.last = now;
            ms
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
