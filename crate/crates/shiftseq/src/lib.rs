//! Successive graph shift-operator design.
//!
//! Given a directed communication graph and a target linear
//! transformation `H`, this crate computes a short sequence of
//! topology-constrained shift operators `S_1 .. S_L` whose composed
//! product approximates `H`, so that `H z` can be evaluated in `L`
//! neighbor-to-neighbor exchange rounds with no central coordinator.
//! Each stage is a sparse matrix supported on the graph's edge pattern;
//! the designer minimizes a weighted sum of per-stage Frobenius errors by
//! block coordinate descent, each block being an exact vectorized
//! least-squares solve over the free edge coefficients.
//!
//! A synchronous message-passing simulator executes a designed sequence
//! node-locally and checks it against the centralized product.
//!
//! ```
//! use nalgebra::DVector;
//! use shiftseq::design::{bcd_design, make_weights, DesignProblem, SolverConfig, WeightScheme};
//! use shiftseq::graph::er_random_graph;
//! use shiftseq::sim::run_rounds;
//! use shiftseq::targets::consensus_matrix;
//!
//! let graph = er_random_graph(12, 0.4, false, true, 7, true)?;
//! let weights = make_weights(WeightScheme::Linear, 5)?;
//! let problem = DesignProblem::new(consensus_matrix(12), graph.clone(), weights, false)?;
//! let (seq, report) = bcd_design(&problem, &SolverConfig::default())?;
//!
//! let signal = DVector::from_fn(12, |i, _| i as f64);
//! let trace = run_rounds(&graph, &seq, &signal)?;
//! println!(
//!     "{} rounds, final stage error {:.3e}",
//!     trace.rounds(),
//!     report.stage_errors.last().unwrap()
//! );
//! # Ok::<(), shiftseq::Error>(())
//! ```
//!
//! The `examples/` directory walks through each capability; the `shiftseq`
//! binary exposes the same pipelines as `design`, `simulate`, and
//! `experiment` subcommands.

pub mod design;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod sim;
pub mod targets;

pub use design::{
    bcd_design, effective_rounds, make_weights, objective, stage_errors, DesignProblem,
    ShiftSequence, SolveReport, SolverConfig, WeightScheme,
};
pub use error::{Error, Result};
pub use graph::{er_random_graph, Graph, SelectionMatrix};
pub use sim::{compare_centralized, run_rounds, storage_per_node, RoundTrace};
pub use targets::{consensus_matrix, gf_baseline_fit, random_projection};
