//! Squares of Hamilton cycles in randomly perturbed graphs: exact oracles,
//! absence certificates, constructive embedding pipelines and Monte Carlo
//! threshold estimation.

pub mod certificates;
pub mod extremal;
pub mod gadget;
pub mod generators;
pub mod graph;
pub mod matching;
pub mod oracle;
pub mod powers;
pub mod report;
pub mod seed;
pub mod stability;
pub mod threshold;

pub use graph::{DiGraph, Graph, GraphBuilder, GraphError, VertexSet};
pub use report::{Budget, StageReport, Stopwatch};
pub use seed::Seed;
pub use stability::{verify_stable, StabilityWitness};
