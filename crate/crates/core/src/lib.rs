//! Distributed property testing in the CONGEST model.
//!
//! The crate simulates synchronous message-passing networks in which every
//! vertex of a graph runs the same randomized program and must decide, with
//! one-sided error, whether the graph satisfies a property or is epsilon-far
//! from it. It provides:
//!
//! * a round-based simulator with per-edge bandwidth accounting ([`sim`]),
//! * exact graph oracles and instance generators used to certify test
//!   fixtures ([`graph`], [`generate`], [`oracle`]),
//! * testers for small forbidden subgraphs ([`local`]),
//! * a randomized low-diameter decomposition ([`decomposition`]) and the
//!   cluster-verifier constructions built on top of it ([`compiler`]),
//! * a tree-freeness tester in both query and CONGEST form ([`tree`]),
//! * an experiment harness with accept/reject gates and CSV reports
//!   ([`harness`]).

pub mod compiler;
pub mod decomposition;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod local;
pub mod oracle;
pub mod rational;
pub mod sim;
pub mod tree;

pub use graph::{FarnessCertificate, Graph, GraphError, Property, VertexId};
pub use harness::{
    gate_passes, run_experiment, soundness_margin, AggregateReport, ExperimentConfig, Gate,
    HarnessError,
};
pub use rational::Eps;
pub use sim::{
    run, RunConfig, RunOutcome, SimError, TrialReport, Verdict, VertexProgram,
};
