//! Two-phase testers for edge-monotone properties, and the cycle corrector.
//!
//! Phase one decomposes the graph with half the distance budget; the cut
//! edges are treated as deleted, which for an edge-monotone property never
//! creates a witness. Phase two runs a per-cluster program over the intra
//! edges: every cluster has one initiator (its center) and fits inside the
//! decomposition's radius bound, so a wave from the center settles each
//! cluster in that many rounds. A graph that is far from the property stays
//! far after losing the few cut edges, and then some whole witness survives
//! inside a single cluster where the wave finds it.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decomposition::{
    cluster_knowledge, decompose, ClusterKnowledge, DecompError, Decomposition,
};
use crate::graph::{Graph, VertexId};
use crate::rational::Eps;
use crate::sim::{mix_seed, run, Ctx, Field, RunConfig, SimError, TrialReport, VertexProgram};

/// Multiple of `log2(n) / epsilon` that bounds the total rounds of a
/// compiled run (decomposition plus verifier), with additive slack.
pub const COMPILED_ROUND_FACTOR: f64 = 20.0;
pub const COMPILED_ROUND_SLACK: u32 = 16;

const PHASE2_TAG: u64 = 0xC0417;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Decomposition(#[from] DecompError),
    #[error("verifier simulation failed: {0}")]
    Sim(#[from] SimError),
}

pub struct CompiledOutcome {
    /// Decomposition and verifier runs merged: rounds add, verdict is the
    /// verifier's.
    pub report: TrialReport,
    pub decomposition: Decomposition,
}

fn decompose_then<P, F>(
    g: &Graph,
    epsilon: Eps,
    seed: u64,
    phase2: F,
) -> Result<CompiledOutcome, CompileError>
where
    P: VertexProgram,
    F: FnOnce(&[ClusterKnowledge], u32) -> Vec<P>,
{
    let first = decompose(g, epsilon.half(), seed)?;
    let knowledge = cluster_knowledge(g, &first.decomposition);
    let wave_rounds = first.decomposition.cluster_diameter_bound + 1;
    let mut programs = phase2(&knowledge, wave_rounds);
    let mut config = RunConfig::new(mix_seed(first.seed_used, PHASE2_TAG));
    config.max_rounds = 4 * wave_rounds + 64;
    let second = run(g, &mut programs, &config)?;
    Ok(CompiledOutcome {
        report: first.report.then(second),
        decomposition: first.decomposition,
    })
}

/// Decompose at half epsilon, then run a per-cluster verifier built by
/// `make` from each vertex's cluster knowledge and the wave-round budget.
pub fn compiled_tester<P, F>(
    g: &Graph,
    epsilon: Eps,
    seed: u64,
    make: F,
) -> Result<CompiledOutcome, CompileError>
where
    P: VertexProgram,
    F: FnOnce(&[ClusterKnowledge], u32) -> Vec<P>,
{
    decompose_then(g, epsilon, seed, make)
}

/// Same plumbing with the remaining distance budget handed to an inner
/// tester, which runs independently inside every cluster.
pub fn bootstrapped_tester<P, F>(
    g: &Graph,
    epsilon: Eps,
    seed: u64,
    inner: F,
) -> Result<CompiledOutcome, CompileError>
where
    P: VertexProgram,
    F: FnOnce(&[ClusterKnowledge], Eps, u32) -> Vec<P>,
{
    decompose_then(g, epsilon, seed, |k, r| inner(k, epsilon.half(), r))
}

pub fn compiled_bipartite_tester(
    g: &Graph,
    epsilon: Eps,
    seed: u64,
) -> Result<CompiledOutcome, CompileError> {
    compiled_tester(g, epsilon, seed, bipartite_programs)
}

pub fn compiled_cyclefree_tester(
    g: &Graph,
    epsilon: Eps,
    seed: u64,
) -> Result<CompiledOutcome, CompileError> {
    compiled_tester(g, epsilon, seed, cyclefree_programs)
}

// ---- per-cluster verifiers ----------------------------------------------------

/// Layered 2-coloring from the cluster center. Tokens reach a vertex exactly
/// at its BFS depth, so all first arrivals agree on a color and an
/// equal-color token later means an odd cycle inside the cluster.
pub struct BipartiteVerifier {
    knowledge: ClusterKnowledge,
    last_round: u32,
    color: Option<bool>,
    colored_at: u32,
}

pub fn bipartite_programs(knowledge: &[ClusterKnowledge], wave_rounds: u32) -> Vec<BipartiteVerifier> {
    knowledge
        .iter()
        .map(|k| BipartiteVerifier {
            knowledge: k.clone(),
            last_round: wave_rounds,
            color: None,
            colored_at: 0,
        })
        .collect()
}

impl BipartiteVerifier {
    fn intra_ports(&self) -> impl Iterator<Item = usize> + '_ {
        self.knowledge.cut_ports.iter().enumerate().filter(|(_, &cut)| !cut).map(|(p, _)| p)
    }
}

impl VertexProgram for BipartiteVerifier {
    fn init(&mut self, _ctx: &mut Ctx) {
        if self.knowledge.parent_port.is_none() {
            self.color = Some(false);
        }
    }

    fn send(&mut self, ctx: &mut Ctx) {
        let t = ctx.round();
        if let Some(c) = self.color {
            if t == self.colored_at + 1 {
                for p in self.intra_ports().collect::<Vec<_>>() {
                    ctx.send(p, [Field::Bit(c)]);
                }
            }
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        let t = ctx.round();
        let mut incoming: Option<bool> = None;
        let mut clash = false;
        for (p, msg) in ctx.received() {
            if self.knowledge.cut_ports[p] {
                continue;
            }
            let token = msg.bit_at(0).expect("wave tokens carry one color bit");
            match self.color {
                Some(mine) if token == mine => clash = true,
                Some(_) => {}
                None => match incoming {
                    // First arrivals sit at equal depth; a disagreement
                    // between them already certifies an odd closed walk.
                    Some(seen) if seen != token => clash = true,
                    _ => incoming = Some(token),
                },
            }
        }
        if clash {
            ctx.reject();
            return;
        }
        if self.color.is_none() {
            if let Some(token) = incoming {
                self.color = Some(!token);
                self.colored_at = t;
            }
        }
        if t == self.last_round {
            ctx.accept();
        }
    }
}

/// Single-initiator search wave: the center floods the cluster, everyone
/// forwards the token once, away from where it arrived. Meeting fronts or a
/// token landing on a visited vertex certify a cycle within the cluster.
pub struct CycleFreeVerifier {
    knowledge: ClusterKnowledge,
    last_round: u32,
    visited: bool,
    visited_at: u32,
    arrival_ports: Vec<usize>,
}

pub fn cyclefree_programs(knowledge: &[ClusterKnowledge], wave_rounds: u32) -> Vec<CycleFreeVerifier> {
    knowledge
        .iter()
        .map(|k| CycleFreeVerifier {
            knowledge: k.clone(),
            last_round: wave_rounds,
            visited: k.parent_port.is_none(),
            visited_at: 0,
            arrival_ports: Vec::new(),
        })
        .collect()
}

impl VertexProgram for CycleFreeVerifier {
    fn init(&mut self, _ctx: &mut Ctx) {}

    fn send(&mut self, ctx: &mut Ctx) {
        let t = ctx.round();
        if self.visited && t == self.visited_at + 1 {
            for p in 0..ctx.degree() {
                if !self.knowledge.cut_ports[p] && !self.arrival_ports.contains(&p) {
                    ctx.send(p, [Field::Bit(true)]);
                }
            }
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        let t = ctx.round();
        let mut arrivals = Vec::new();
        for (p, _msg) in ctx.received() {
            if !self.knowledge.cut_ports[p] {
                arrivals.push(p);
            }
        }
        if !arrivals.is_empty() {
            if self.visited || arrivals.len() >= 2 {
                ctx.reject();
                return;
            }
            self.visited = true;
            self.visited_at = t;
            self.arrival_ports = arrivals;
        }
        if t == self.last_round {
            ctx.accept();
        }
    }
}

// ---- cycle-freeness corrector ---------------------------------------------------

pub struct CorrectorOutput {
    /// Deleted edges: every cut edge and every intra-cluster non-tree edge.
    pub deleted: BTreeSet<(VertexId, VertexId)>,
    /// Per-vertex view of `deleted`: the neighbors across deleted edges.
    pub incident_deleted: Vec<Vec<VertexId>>,
    pub decomposition: Decomposition,
    pub report: TrialReport,
    pub seed_used: u64,
}

impl CorrectorOutput {
    pub fn kept_edge_count(&self, g: &Graph) -> usize {
        g.m() - self.deleted.len()
    }

    /// Sorted "deleted u v" lines, bit-exact across runs with one seed.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.deleted {
            out.push_str(&format!("deleted {u} {v}\n"));
        }
        out
    }
}

/// Keeps only the decomposition's tree edges, which both endpoints already
/// know locally; everything else is reported deleted. The remainder is a
/// forest for every seed, and within the decomposition's cut budget it is
/// also a largest-possible one up to epsilon m extra deletions.
pub fn cyclefree_corrector(
    g: &Graph,
    epsilon: Eps,
    seed: u64,
) -> Result<CorrectorOutput, DecompError> {
    let first = decompose(g, epsilon, seed)?;
    let d = &first.decomposition;
    let mut deleted = BTreeSet::new();
    for (u, v) in g.edges() {
        let tree_edge = d.parent_of[u as usize] == Some(v) || d.parent_of[v as usize] == Some(u);
        if !tree_edge {
            deleted.insert((u.min(v), u.max(v)));
        }
    }
    let mut incident_deleted = vec![Vec::new(); g.n()];
    for &(u, v) in &deleted {
        incident_deleted[u as usize].push(v);
        incident_deleted[v as usize].push(u);
    }
    Ok(CorrectorOutput {
        deleted,
        incident_deleted,
        decomposition: first.decomposition,
        report: first.report,
        seed_used: first.seed_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::oracle;
    use crate::sim::Verdict;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eps(num: u64, den: u64) -> Eps {
        Eps::new(num, den).unwrap()
    }

    #[test]
    fn bipartite_tester_accepts_trees_and_even_cycles_every_seed() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(31);
        for g in [
            generate::random_forest(60, &mut gen_rng).unwrap(),
            Graph::cycle(12),
            generate::random_bipartite(50, &mut gen_rng).unwrap(),
        ] {
            for seed in 0..25 {
                let out = compiled_bipartite_tester(&g, eps(1, 4), seed).unwrap();
                assert_eq!(out.report.verdict, Verdict::Accept, "seed {seed}");
            }
        }
    }

    #[test]
    fn bipartite_tester_rejects_far_triangle_unions() {
        // 30 disjoint triangles: certified 1/3-far from bipartite, tested
        // at epsilon 1/4.
        let g = generate::disjoint_copies("triangle", 30).unwrap();
        let one = Graph::complete(3);
        assert_eq!(oracle::dist_to_property(&one, &crate::graph::Property::Bipartite).unwrap(), 1);
        let trials = 200;
        let mut rejects = 0;
        for seed in 0..trials {
            let out = compiled_bipartite_tester(&g, eps(1, 4), seed).unwrap();
            if out.report.verdict == Verdict::Reject {
                rejects += 1;
            }
        }
        assert!(
            rejects as f64 >= trials as f64 * 2.0 / 3.0,
            "rejected {rejects} of {trials}"
        );
    }

    #[test]
    fn bipartite_verifier_handles_single_odd_cycle_deterministically() {
        // One odd cycle fitting in one cluster must be caught; with several
        // clusters the cycle is cut and acceptance is legitimate, so this
        // checks the all-in-one-cluster case by forcing a tiny graph.
        let g = Graph::cycle(5);
        let mut caught = 0;
        for seed in 0..50 {
            let out = compiled_bipartite_tester(&g, eps(1, 2), seed).unwrap();
            let clusters: BTreeSet<_> = out.decomposition.cluster_of.iter().copied().collect();
            if clusters.len() == 1 {
                assert_eq!(out.report.verdict, Verdict::Reject, "seed {seed}");
                caught += 1;
            }
        }
        assert!(caught > 0, "some seed must put C5 in one cluster");
    }

    #[test]
    fn cyclefree_tester_accepts_forests_every_seed() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(77);
        for g in [
            generate::random_forest(80, &mut gen_rng).unwrap(),
            Graph::star(10),
            Graph::path(40),
        ] {
            for seed in 0..25 {
                let out = compiled_cyclefree_tester(&g, eps(1, 4), seed).unwrap();
                assert_eq!(out.report.verdict, Verdict::Accept, "seed {seed}");
            }
        }
    }

    #[test]
    fn cyclefree_tester_rejects_far_graphs() {
        // 30 triangles: distance to cycle-freeness is 30 of 90 edges.
        let g = generate::disjoint_copies("triangle", 30).unwrap();
        assert_eq!(
            oracle::dist_to_property(&g, &crate::graph::Property::CycleFree).unwrap(),
            30
        );
        let trials = 200;
        let mut rejects = 0;
        for seed in 0..trials {
            let out = compiled_cyclefree_tester(&g, eps(1, 4), seed).unwrap();
            if out.report.verdict == Verdict::Reject {
                rejects += 1;
            }
        }
        assert!(
            rejects as f64 >= trials as f64 * 2.0 / 3.0,
            "rejected {rejects} of {trials}"
        );
    }

    #[test]
    fn compiled_rounds_stay_within_declared_budget() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(3);
        let g = generate::gnm(300, 900, &mut gen_rng).unwrap();
        let e = eps(1, 4);
        let out = compiled_bipartite_tester(&g, e, 11).unwrap();
        let bound = COMPILED_ROUND_FACTOR * (g.n() as f64).log2() / e.as_f64()
            + COMPILED_ROUND_SLACK as f64;
        assert!((out.report.rounds as f64) <= bound, "{} > {bound}", out.report.rounds);
    }

    #[test]
    fn corrector_output_is_always_a_forest() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(41);
        let graphs = [
            generate::gnm(120, 480, &mut gen_rng).unwrap(),
            generate::disjoint_copies("triangle", 20).unwrap(),
            generate::random_forest(60, &mut gen_rng).unwrap(),
        ];
        for g in &graphs {
            for seed in 0..30 {
                let out = cyclefree_corrector(g, eps(1, 2), seed).unwrap();
                let kept: Vec<(VertexId, VertexId)> = g
                    .edges()
                    .into_iter()
                    .filter(|&(u, v)| !out.deleted.contains(&(u.min(v), u.max(v))))
                    .collect();
                assert!(oracle::is_forest(g.n(), &kept), "seed {seed}");
                assert!(kept.len() <= g.n(), "kept {} edges", kept.len());
                for &(u, v) in &out.deleted {
                    assert!(out.incident_deleted[u as usize].contains(&v));
                    assert!(out.incident_deleted[v as usize].contains(&u));
                }
            }
        }
    }

    #[test]
    fn corrector_keeps_whole_trees_when_input_is_a_forest() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(13);
        let g = generate::random_forest(50, &mut gen_rng).unwrap();
        for seed in 0..20 {
            let out = cyclefree_corrector(&g, eps(1, 2), seed).unwrap();
            let cuts = out.decomposition.cut_edges.len();
            assert_eq!(out.deleted.len(), cuts, "seed {seed}: only cut edges go");
        }
    }

    #[test]
    fn corrector_deletion_budget_holds_on_most_seeds() {
        // On K3 the budget dist + eps*m = 1 + 1.5 allows at most 2 deleted
        // edges. Integer shifts can tie all three vertices into singleton
        // clusters (all shifts equal, or the two larger ids outbidding a
        // one-smaller vertex 0), which deletes all 3 edges; at this rate
        // that happens on roughly 4% of seeds.
        let g = Graph::complete(3);
        let trials = 200;
        let mut within = 0;
        for seed in 0..trials {
            let out = cyclefree_corrector(&g, eps(1, 2), seed).unwrap();
            assert!(matches!(out.deleted.len(), 1..=3));
            if out.deleted.len() <= 2 {
                within += 1;
            }
        }
        assert!(within >= trials * 90 / 100, "within budget on {within} of {trials}");
    }

    #[test]
    fn corrector_budget_on_triangle_unions() {
        let copies = 25;
        let g = generate::disjoint_copies("triangle", copies).unwrap();
        let e = eps(1, 4);
        let dist = oracle::dist_to_property(&g, &crate::graph::Property::CycleFree).unwrap();
        let trials = 100;
        let mut within = 0;
        for seed in 0..trials {
            let out = cyclefree_corrector(&g, e, seed).unwrap();
            let budget = dist as f64 + e.as_f64() * g.m() as f64;
            if (out.deleted.len() as f64) <= budget {
                within += 1;
            }
        }
        assert!(within >= trials * 90 / 100, "within budget on {within} of {trials}");
    }

    #[test]
    fn corrector_dump_is_sorted_and_reproducible() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(4);
        let g = generate::gnm(30, 80, &mut gen_rng).unwrap();
        let a = cyclefree_corrector(&g, eps(1, 3), 8).unwrap();
        let b = cyclefree_corrector(&g, eps(1, 3), 8).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let text = a.to_text();
        let pairs: Vec<(u32, u32)> = text
            .lines()
            .map(|l| {
                let mut f = l.split_whitespace();
                assert_eq!(f.next(), Some("deleted"));
                (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
            })
            .collect();
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(pairs, sorted);
        assert!(pairs.iter().all(|&(u, v)| u < v));
    }

    #[test]
    fn bootstrapped_tester_matches_compiled_when_inner_is_the_verifier() {
        let g = generate::disjoint_copies("triangle", 20).unwrap();
        let mut rejects = 0;
        let trials = 100;
        for seed in 0..trials {
            let out = bootstrapped_tester(&g, eps(1, 4), seed, |k, _inner_eps, r| {
                cyclefree_programs(k, r)
            })
            .unwrap();
            if out.report.verdict == Verdict::Reject {
                rejects += 1;
            }
        }
        assert!(rejects as f64 >= trials as f64 * 2.0 / 3.0);
    }

    #[test]
    fn trivially_accepting_inner_accepts() {
        struct Yes;
        impl VertexProgram for Yes {
            fn init(&mut self, ctx: &mut Ctx) {
                ctx.accept();
            }
            fn send(&mut self, _ctx: &mut Ctx) {}
            fn receive(&mut self, _ctx: &mut Ctx) {}
        }
        let g = Graph::path(12);
        let out = bootstrapped_tester(&g, eps(1, 2), 5, |k, _e, _r| {
            (0..k.len()).map(|_| Yes).collect::<Vec<_>>()
        })
        .unwrap();
        assert_eq!(out.report.verdict, Verdict::Accept);
    }
}
