//! Seed-node selection for label-efficient learning on graphs.
//!
//! Nodes are chosen greedily to maximize a normalized sum of feature
//! influence coverage (how many nodes a seed set activates through
//! propagated features) and feature-space diversity. The crate also ships
//! simple baselines, a linear-probe evaluator and a benchmarking harness.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod diversity;
pub mod error;
pub mod graph;
pub mod greedy;
pub mod influence;
pub mod io;
pub mod pipeline;
pub mod probe;
pub mod propagation;
pub mod report;
pub mod rng;
pub mod sbm;
pub mod sparse;

pub use error::{Error, Result};
pub use graph::{NodeId, SparseGraph, TransitionKind};
pub use propagation::{Kernel, PropagationConfig};
pub use report::{Method, RunConfig, SelectionReport};
