//! Batched trials over seeds, with CSV output and statistical gates.
//!
//! A single trial never proves anything about a randomized tester; the
//! harness runs many under consecutive seeds and aggregates. Soundness is
//! gated by the reject fraction against the 2/3 bound with a binomial
//! 3-sigma margin; completeness is gated by zero rejects, since the testers
//! are one-sided and a single false rejection is a bug, not noise.

use rayon::prelude::*;
use thiserror::Error;

use crate::compiler::{compiled_bipartite_tester, compiled_cyclefree_tester, CompileError};
use crate::graph::{Graph, GraphError, Property};
use crate::local::{c4_iterations, c4_programs, h4_programs, triangle_iterations, triangle_programs, LocalTesterConfig, PiMode};
use crate::rational::Eps;
use crate::sim::{run, RunConfig, SimError, TrialReport, Verdict};
use crate::tree::{distributed_phase_count, distributed_programs, distributed_run_config};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Compiled(#[from] CompileError),
    #[error(transparent)]
    Pattern(#[from] GraphError),
    #[error("message of {bits} bits exceeds the {limit}-bit bandwidth limit")]
    Bandwidth { bits: u32, limit: u32 },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub property: Property,
    pub epsilon: Eps,
    pub trials: u64,
    /// Trial i runs under seed `seed + i`.
    pub seed: u64,
    /// Per-edge per-round bit limit. Enforced in-simulation by the subgraph
    /// and tree testers; two-phase runs check their recorded maximum after
    /// the fact (their own messages are far below any sane limit).
    pub bandwidth: Option<u32>,
    pub pi_mode: PiMode,
    /// Overrides the distributed tree tester's phase-count formula.
    pub tree_phases: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(property: Property, epsilon: Eps) -> ExperimentConfig {
        ExperimentConfig {
            property,
            epsilon,
            trials: 1,
            seed: 0,
            bandwidth: None,
            pi_mode: PiMode::default(),
            tree_phases: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRow {
    pub seed: u64,
    pub verdict: Verdict,
    pub rounds: u32,
    pub max_bits: u32,
}

#[derive(Clone, Debug)]
pub struct AggregateReport {
    pub property: String,
    pub epsilon: Eps,
    pub n: usize,
    pub m: usize,
    pub rows: Vec<TrialRow>,
    pub accept_count: u64,
    pub reject_count: u64,
    pub mean_rounds: f64,
    pub max_rounds: u32,
    pub max_message_bits: u32,
}

impl AggregateReport {
    pub fn trials(&self) -> u64 {
        self.accept_count + self.reject_count
    }

    pub fn reject_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.reject_count as f64 / self.trials() as f64
        }
    }

    /// Fixed schema: one row per trial, bit-identical across reruns.
    pub fn csv(&self) -> String {
        let mut out = String::from("seed,verdict,rounds,max_bits,property,epsilon,n,m\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}/{},{},{}\n",
                r.seed,
                r.verdict,
                r.rounds,
                r.max_bits,
                self.property,
                self.epsilon.numer(),
                self.epsilon.denom(),
                self.n,
                self.m
            ));
        }
        out
    }
}

/// Binomial 3-sigma margin around the 2/3 soundness bound.
pub fn soundness_margin(trials: u64) -> f64 {
    3.0 * ((2.0 / 9.0) / trials as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    /// Reject fraction at least 2/3 minus the binomial margin.
    Soundness,
    /// No rejects at all: the testers are one-sided.
    Completeness,
    None,
}

pub fn gate_passes(gate: Gate, report: &AggregateReport) -> bool {
    match gate {
        Gate::Soundness => {
            report.reject_fraction() >= 2.0 / 3.0 - soundness_margin(report.trials())
        }
        Gate::Completeness => report.reject_count == 0,
        Gate::None => true,
    }
}

fn run_trial(g: &Graph, config: &ExperimentConfig, trial_seed: u64) -> Result<TrialReport, HarnessError> {
    let local = LocalTesterConfig { iterations: None, measure: false, pi_mode: config.pi_mode };
    let sim_config = |max_rounds: u32| {
        let mut rc = RunConfig::new(trial_seed);
        rc.bandwidth = config.bandwidth;
        rc.stop_on_reject = true;
        rc.max_rounds = max_rounds;
        rc
    };
    let report = match &config.property {
        Property::TriangleFree => {
            let t = triangle_iterations(config.epsilon);
            let mut programs = triangle_programs(config.epsilon, g.n(), &local);
            run(g, &mut programs, &sim_config(t + 9))?
        }
        Property::C4Free => {
            let t = c4_iterations(config.epsilon);
            let mut programs = c4_programs(config.epsilon, g.n(), &local);
            run(g, &mut programs, &sim_config(3 * t + 9))?
        }
        Property::HFree(h) => {
            let t = c4_iterations(config.epsilon);
            let mut programs = h4_programs(h, config.epsilon, g.n(), &local)?;
            run(g, &mut programs, &sim_config(3 * t + 9))?
        }
        Property::Bipartite => {
            let out = compiled_bipartite_tester(g, config.epsilon, trial_seed)?;
            check_bandwidth(config.bandwidth, out.report.max_message_bits)?;
            out.report
        }
        Property::CycleFree => {
            let out = compiled_cyclefree_tester(g, config.epsilon, trial_seed)?;
            check_bandwidth(config.bandwidth, out.report.max_message_bits)?;
            out.report
        }
        Property::TreeFree(t) => {
            let phases = config
                .tree_phases
                .unwrap_or_else(|| distributed_phase_count(t, config.epsilon, 2_000_000));
            let mut programs = distributed_programs(t, g.n(), phases);
            let mut rc = distributed_run_config(t, phases, trial_seed);
            rc.bandwidth = config.bandwidth;
            rc.stop_on_reject = true;
            run(g, &mut programs, &rc)?
        }
    };
    Ok(report)
}

fn check_bandwidth(limit: Option<u32>, bits: u32) -> Result<(), HarnessError> {
    match limit {
        Some(b) if bits > b => Err(HarnessError::Bandwidth { bits, limit: b }),
        _ => Ok(()),
    }
}

/// Runs `trials` independent seeded trials of the configured tester on one
/// graph and aggregates verdicts, round counts, and message widths.
pub fn run_experiment(g: &Graph, config: &ExperimentConfig) -> Result<AggregateReport, HarnessError> {
    if config.trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    let reports: Vec<TrialRow> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let trial_seed = config.seed + i;
            run_trial(g, config, trial_seed).map(|r| TrialRow {
                seed: trial_seed,
                verdict: r.verdict,
                rounds: r.rounds,
                max_bits: r.max_message_bits,
            })
        })
        .collect::<Result<_, _>>()?;
    let accept_count = reports.iter().filter(|r| r.verdict == Verdict::Accept).count() as u64;
    let reject_count = reports.len() as u64 - accept_count;
    let mean_rounds =
        reports.iter().map(|r| r.rounds as f64).sum::<f64>() / reports.len() as f64;
    let max_rounds = reports.iter().map(|r| r.rounds).max().unwrap_or(0);
    let max_message_bits = reports.iter().map(|r| r.max_bits).max().unwrap_or(0);
    Ok(AggregateReport {
        property: config.property.label(),
        epsilon: config.epsilon,
        n: g.n(),
        m: g.m(),
        rows: reports,
        accept_count,
        reject_count,
        mean_rounds,
        max_rounds,
        max_message_bits,
    })
}
