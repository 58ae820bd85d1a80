//! Command-line runner. Exit code 0 means the requested gate passed, 1 means
//! it failed, and 2 means the invocation or a runtime guard was invalid.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use congest_testing::compiler::cyclefree_corrector;
use congest_testing::decomposition::{decompose, verify_decomposition};
use congest_testing::local::PiMode;
use congest_testing::oracle;
use congest_testing::tree::TreePattern;
use congest_testing::{
    gate_passes, run_experiment, soundness_margin, Eps, ExperimentConfig, Gate, Graph, Property,
};

#[derive(Parser)]
#[command(
    name = "congest",
    version,
    about = "Distributed property-testing experiments in the CONGEST model"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a tester over seeded trials and gate the verdict statistics.
    Test(TestArgs),
    /// Build a low-diameter clustering and verify its invariants.
    Decompose(GraphCmdArgs),
    /// Delete inter-cluster edges to leave an acyclic subgraph.
    Correct(GraphCmdArgs),
}

#[derive(Args, Default)]
struct TestArgs {
    /// key=value file supplying defaults for any flag below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// triangle | c4 | h4:<name> | bipartite | cyclefree | tree:<alias-or-file>
    #[arg(long)]
    property: Option<String>,
    /// Farness threshold as a fraction, e.g. 1/3.
    #[arg(long)]
    epsilon: Option<String>,
    /// Edge-list file: "n m" header line, then one "u v" pair per line.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Generator spec, e.g. disjoint:triangle:30 or gnm:1000:4000.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Trial i runs under seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-edge per-round bit budget; violations abort with exit code 2.
    #[arg(long)]
    bandwidth: Option<u32>,
    /// Override the phase-count formula of the distributed tree tester.
    #[arg(long)]
    tree_phases: Option<u64>,
    /// soundness | completeness | none
    #[arg(long)]
    gate: Option<String>,
    /// Write one CSV row per trial here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphCmdArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    epsilon: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Test(args) => cmd_test(args),
        Cmd::Decompose(args) => cmd_decompose(args),
        Cmd::Correct(args) => cmd_correct(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_epsilon(s: &str) -> Result<Eps> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (
            a.trim().parse::<u64>().context("bad epsilon numerator")?,
            b.trim().parse::<u64>().context("bad epsilon denominator")?,
        ),
        None => (s.trim().parse::<u64>().context("epsilon must be a fraction like 1/3")?, 1),
    };
    Eps::new(num, den).map_err(|e| anyhow!("epsilon {s:?}: {e}"))
}

fn parse_property(s: &str) -> Result<Property> {
    if let Some(name) = s.strip_prefix("h4:") {
        let h = Graph::named(name).ok_or_else(|| anyhow!("unknown subgraph {name:?}"))?;
        return Property::h_free(h).map_err(|e| anyhow!("{e}"));
    }
    if let Some(rest) = s.strip_prefix("tree:") {
        let pattern = match TreePattern::from_alias(rest).map_err(|e| anyhow!("{e}"))? {
            Some(p) => p,
            None => {
                let text = fs::read_to_string(rest)
                    .with_context(|| format!("tree pattern file {rest:?}"))?;
                TreePattern::parse(&text).map_err(|e| anyhow!("{e}"))?
            }
        };
        return Ok(Property::TreeFree(pattern));
    }
    match s {
        "triangle" => Ok(Property::TriangleFree),
        "c4" => Ok(Property::C4Free),
        "bipartite" => Ok(Property::Bipartite),
        "cyclefree" => Ok(Property::CycleFree),
        _ => bail!("unknown property {s:?}"),
    }
}

fn parse_gate(s: &str) -> Result<Gate> {
    match s {
        "soundness" => Ok(Gate::Soundness),
        "completeness" => Ok(Gate::Completeness),
        "none" => Ok(Gate::None),
        _ => bail!("unknown gate {s:?} (expected soundness, completeness, or none)"),
    }
}

fn load_graph(graph: &Option<PathBuf>, gen: &Option<String>, seed: u64) -> Result<Graph> {
    match (graph, gen) {
        (Some(_), Some(_)) => bail!("give either --graph or --gen, not both"),
        (Some(path), None) => Graph::load(path).map_err(|e| anyhow!("{e}")),
        (None, Some(spec)) => {
            congest_testing::generate::from_spec(spec, seed).map_err(|e| anyhow!("{e}"))
        }
        (None, None) => bail!("an input is required: --graph FILE or --gen SPEC"),
    }
}

/// Fills unset flags from a key=value file, so flags override the file.
fn apply_config_file(args: &mut TestArgs, path: &Path) -> Result<()> {
    let text =
        fs::read_to_string(path).with_context(|| format!("config file {path:?}"))?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        let (key, value) = (key.trim(), value.trim().to_string());
        let bad_num = || anyhow!("config line {}: bad number for {key}", i + 1);
        match key {
            "property" => {
                args.property.get_or_insert(value);
            }
            "epsilon" => {
                args.epsilon.get_or_insert(value);
            }
            "graph" => {
                args.graph.get_or_insert(PathBuf::from(value));
            }
            "gen" => {
                args.gen.get_or_insert(value);
            }
            "gate" => {
                args.gate.get_or_insert(value);
            }
            "out" => {
                args.out.get_or_insert(PathBuf::from(value));
            }
            "trials" => {
                args.trials.get_or_insert(value.parse().map_err(|_| bad_num())?);
            }
            "seed" => {
                args.seed.get_or_insert(value.parse().map_err(|_| bad_num())?);
            }
            "bandwidth" => {
                args.bandwidth.get_or_insert(value.parse().map_err(|_| bad_num())?);
            }
            "tree-phases" => {
                args.tree_phases.get_or_insert(value.parse().map_err(|_| bad_num())?);
            }
            _ => bail!("config line {}: unknown key {key:?}", i + 1),
        }
    }
    Ok(())
}

fn cmd_test(mut args: TestArgs) -> Result<bool> {
    if let Some(path) = args.config.clone() {
        apply_config_file(&mut args, &path)?;
    }
    let property =
        parse_property(args.property.as_deref().ok_or_else(|| anyhow!("--property is required"))?)?;
    let epsilon =
        parse_epsilon(args.epsilon.as_deref().ok_or_else(|| anyhow!("--epsilon is required"))?)?;
    let gate = parse_gate(args.gate.as_deref().unwrap_or("none"))?;
    let seed = args.seed.unwrap_or(0);
    let g = load_graph(&args.graph, &args.gen, seed)?;

    let mut config = ExperimentConfig::new(property, epsilon);
    config.trials = args.trials.unwrap_or(100);
    config.seed = seed;
    config.bandwidth = args.bandwidth;
    config.pi_mode = PiMode::default();
    config.tree_phases = args.tree_phases;

    let report = run_experiment(&g, &config)?;
    if let Some(path) = &args.out {
        fs::write(path, report.csv()).with_context(|| format!("writing {path:?}"))?;
    }

    let pass = gate_passes(gate, &report);
    println!(
        "property {} epsilon {} n {} m {}",
        report.property, report.epsilon, report.n, report.m
    );
    println!(
        "trials {} accepts {} rejects {} reject-fraction {:.4}",
        report.trials(),
        report.accept_count,
        report.reject_count,
        report.reject_fraction()
    );
    println!(
        "rounds mean {:.2} max {} max-message-bits {}",
        report.mean_rounds, report.max_rounds, report.max_message_bits
    );
    match gate {
        Gate::Soundness => println!(
            "gate soundness threshold {:.4} -> {}",
            2.0 / 3.0 - soundness_margin(report.trials()),
            if pass { "pass" } else { "fail" }
        ),
        Gate::Completeness => {
            println!("gate completeness -> {}", if pass { "pass" } else { "fail" })
        }
        Gate::None => println!("gate none -> pass"),
    }
    Ok(pass)
}

fn cmd_decompose(args: GraphCmdArgs) -> Result<bool> {
    let epsilon = parse_epsilon(&args.epsilon)?;
    let g = load_graph(&args.graph, &args.gen, args.seed)?;
    let run = decompose(&g, epsilon, args.seed)?;
    let check = verify_decomposition(&g, &run.decomposition, epsilon);
    if let Some(path) = &args.out {
        fs::write(path, run.decomposition.to_text()).with_context(|| format!("writing {path:?}"))?;
    }
    let clusters: std::collections::BTreeSet<_> =
        run.decomposition.cluster_of.iter().copied().collect();
    println!(
        "n {} m {} clusters {} cut-fraction {:.4} diameter-bound {}",
        g.n(),
        g.m(),
        clusters.len(),
        run.decomposition.cut_fraction(&g),
        run.decomposition.cluster_diameter_bound
    );
    println!(
        "rounds {} attempts {} max-message-bits {}",
        run.report.rounds, run.attempts, run.report.max_message_bits
    );
    for v in &check.violations {
        println!("violation: {v}");
    }
    println!("verified {}", if check.ok() { "pass" } else { "fail" });
    Ok(check.ok())
}

fn cmd_correct(args: GraphCmdArgs) -> Result<bool> {
    let epsilon = parse_epsilon(&args.epsilon)?;
    let g = load_graph(&args.graph, &args.gen, args.seed)?;
    let out = cyclefree_corrector(&g, epsilon, args.seed)?;
    let kept: Vec<_> =
        g.edges().into_iter().filter(|e| !out.deleted.contains(e)).collect();
    let acyclic = oracle::is_forest(g.n(), &kept);
    let distance = oracle::dist_to_property(&g, &Property::CycleFree)
        .map_err(|e| anyhow!("{e}"))? as f64;
    let slack = epsilon.as_f64() * g.m() as f64;
    let within_deletion = out.deleted.len() as f64 <= distance + slack;
    let within_kept = kept.len() as f64 <= g.n() as f64 + slack;

    let mut text = out.to_text();
    text.push_str(&format!("acyclic {acyclic}\n"));
    text.push_str(&format!("deleted-count {}\n", out.deleted.len()));
    text.push_str(&format!("deletion-budget {:.2}\n", distance + slack));
    text.push_str(&format!("within-deletion-budget {within_deletion}\n"));
    text.push_str(&format!("kept {}\n", kept.len()));
    text.push_str(&format!("kept-budget {:.2}\n", g.n() as f64 + slack));
    text.push_str(&format!("within-kept-budget {within_kept}\n"));
    if let Some(path) = &args.out {
        fs::write(path, &text).with_context(|| format!("writing {path:?}"))?;
    }
    print!("{text}");
    println!("rounds {}", out.report.rounds);
    // Acyclicity and the kept-edge budget hold on every seed; the deletion
    // budget is a high-probability bound, so it is reported but not gated.
    Ok(acyclic && within_kept)
}
