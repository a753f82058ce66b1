//! Upper bounds on the reach-while-stay entropy of control systems.
//!
//! The pipeline abstracts a system onto a grid, synthesizes a
//! reach-while-stay controller, groups controller cells by input, and
//! maximizes an averaged bit rate over paths of the resulting closed-loop
//! graph. Small finite systems can also be solved exactly, and
//! coder-controllers built from spanning sets can be simulated.

pub mod abstraction;
pub mod cache;
pub mod coarsening;
pub mod coder;
pub mod config;
pub mod frr;
pub mod graph;
pub mod interval;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod spanning;
pub mod synthesis;
pub mod system;

pub use abstraction::{build_abstraction, CellLayout, Grid, GridAbstraction, InputSet};
pub use coarsening::{coarsen, CoarsenMode};
pub use graph::{build_graph, max_path_value, ClosedLoopGraph, WeightMode};
pub use oracle::exact_entropy;
pub use pipeline::{run_pipeline, PipelineReport};
pub use spanning::{verify_spanning_set, ControlMap, Cover, Node, SpanningSet};
pub use synthesis::synthesize;
pub use system::{FiniteReachSpec, FiniteSystem, TransitionSystem};
