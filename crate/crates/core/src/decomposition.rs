//! Low-diameter clustering by random exponential shifts.
//!
//! Every vertex draws an integer delay from an exponential distribution and
//! starts bidding for a cluster that many rounds early; offers spread by BFS,
//! so the first offer to reach a vertex minimizes `dist(u, center) - delay`.
//! Big shifts are rare, which keeps cluster radii logarithmic, and an edge is
//! cut only when its endpoints settle on different centers, which happens
//! with probability proportional to the exponential rate.
//!
//! The run is restarted under a derived seed in the unlikely event that some
//! shift exceeds the cap, so every emitted decomposition obeys the radius
//! bound deterministically.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, VertexId};
use crate::rational::Eps;
use crate::sim::{
    derive_vertex_rng, mix_seed, run, Ctx, Field, RunConfig, SimError, TrialReport, Verdict,
    VertexProgram,
};

/// Multiple of `log2(n) / epsilon` that bounds the rounds of a decomposition
/// run, with a small additive slack for the id and finalize rounds.
pub const DECOMP_ROUND_FACTOR: f64 = 4.0;
pub const DECOMP_ROUND_SLACK: u32 = 8;

const MAX_RESTARTS: u32 = 64;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("shift draws exceeded the cap {cap} in {attempts} consecutive attempts")]
    RestartsExhausted { cap: u32, attempts: u32 },
}

/// Exponential rate for the shift draws: half of epsilon, leaving margin for
/// the integer discretization of the delays.
pub fn shift_rate(epsilon: Eps) -> f64 {
    epsilon.as_f64() / 2.0
}

/// Largest allowed shift; exceeding it triggers a reseeded restart. The rate
/// times the cap is at least 2 ln n, so a restart happens with probability
/// at most n^-2 per vertex.
pub fn shift_cap(n: usize, epsilon: Eps) -> u32 {
    let ln_n = (n.max(2) as f64).ln();
    (4.0 * ln_n * epsilon.denom() as f64 / epsilon.numer() as f64).ceil() as u32
}

/// Inverse-CDF exponential draw, floored to a round delay.
fn sample_shift(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    (-u.ln() / rate).floor() as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    /// Cluster id of each vertex: the id of its center.
    pub cluster_of: Vec<VertexId>,
    /// BFS-tree parent toward the center; None exactly at centers.
    pub parent_of: Vec<Option<VertexId>>,
    /// Edges with endpoints in different clusters, normalized u < v.
    pub cut_edges: BTreeSet<(VertexId, VertexId)>,
    /// Every cluster's center eccentricity within the cluster is at most this.
    pub cluster_diameter_bound: u32,
}

impl Decomposition {
    pub fn cut_fraction(&self, g: &Graph) -> f64 {
        if g.m() == 0 {
            0.0
        } else {
            self.cut_edges.len() as f64 / g.m() as f64
        }
    }

    /// One line per vertex "v cluster parent" (parent "-" at centers),
    /// followed by sorted "cut u v" lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, &c) in self.cluster_of.iter().enumerate() {
            let parent = match self.parent_of[v] {
                Some(p) => p.to_string(),
                None => "-".into(),
            };
            out.push_str(&format!("{v} {c} {parent}\n"));
        }
        for &(u, v) in &self.cut_edges {
            out.push_str(&format!("cut {u} {v}\n"));
        }
        out
    }
}

pub struct DecompositionRun {
    pub decomposition: Decomposition,
    pub report: TrialReport,
    /// Seed the emitted run actually used (reseeded on restarts).
    pub seed_used: u64,
    pub attempts: u32,
}

/// What a vertex ends up knowing about its cluster, per incident port.
#[derive(Clone, Debug)]
pub struct ClusterKnowledge {
    pub cluster: VertexId,
    pub parent_port: Option<usize>,
    pub child_ports: Vec<bool>,
    pub cut_ports: Vec<bool>,
}

pub struct ShiftCluster {
    rate: f64,
    cap: u32,
    delta: u32,
    neighbor_ids: Vec<VertexId>,
    center: Option<VertexId>,
    parent_port: Option<usize>,
    adopted_at: u32,
    pub knowledge: Option<ClusterKnowledge>,
}

fn shift_programs(n: usize, rate: f64, cap: u32) -> Vec<ShiftCluster> {
    (0..n)
        .map(|_| ShiftCluster {
            rate,
            cap,
            delta: 0,
            neighbor_ids: Vec::new(),
            center: None,
            parent_port: None,
            adopted_at: 0,
            knowledge: None,
        })
        .collect()
}

impl ShiftCluster {
    /// Round at whose receive phase this vertex bids for itself.
    fn self_offer_round(&self) -> u32 {
        self.cap + 2 - self.delta
    }
}

impl VertexProgram for ShiftCluster {
    fn init(&mut self, ctx: &mut Ctx) {
        let d = sample_shift(ctx.rng(), self.rate);
        debug_assert!(d <= self.cap as u64, "driver pre-checks the cap");
        self.delta = d as u32;
    }

    fn send(&mut self, ctx: &mut Ctx) {
        let t = ctx.round();
        if t == 1 {
            for p in 0..ctx.degree() {
                let me = ctx.vertex();
                ctx.send(p, [Field::Id(me)]);
            }
        } else if t <= self.cap + 2 {
            // Relay the winning offer exactly one round after adopting it.
            if self.adopted_at == t - 1 {
                let c = self.center.expect("adopted implies a center");
                for p in 0..ctx.degree() {
                    ctx.send(p, [Field::Id(c)]);
                }
            }
        } else {
            let c = self.center.expect("all vertices claimed in the window");
            for p in 0..ctx.degree() {
                let toward_parent = self.parent_port == Some(p);
                ctx.send(p, [Field::Id(c), Field::Bit(toward_parent)]);
            }
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        let t = ctx.round();
        if t == 1 {
            self.neighbor_ids = vec![0; ctx.degree()];
            for (p, msg) in ctx.received() {
                self.neighbor_ids[p] = msg.id_at(0).expect("round 1 carries ids");
            }
            return;
        }
        if t <= self.cap + 2 {
            if self.center.is_some() {
                return;
            }
            // Simultaneous arrivals have equal shifted distance; the smallest
            // center id wins, and a self-bid competes on the same footing.
            let mut best: Option<(VertexId, Option<usize>)> = None;
            for (p, msg) in ctx.received() {
                let c = msg.id_at(0).expect("offers carry the center id");
                let better = match best {
                    None => true,
                    Some((bc, _)) if c < bc => true,
                    Some((bc, Some(bp))) if c == bc => {
                        self.neighbor_ids[p] < self.neighbor_ids[bp]
                    }
                    _ => false,
                };
                if better {
                    best = Some((c, Some(p)));
                }
            }
            if t == self.self_offer_round() {
                let me = ctx.vertex();
                if best.is_none_or(|(bc, _)| me < bc) {
                    best = Some((me, None));
                }
            }
            if let Some((c, p)) = best {
                self.center = Some(c);
                self.parent_port = p;
                self.adopted_at = t;
            }
            return;
        }
        let cluster = self.center.expect("all vertices claimed in the window");
        let mut child_ports = vec![false; ctx.degree()];
        let mut cut_ports = vec![false; ctx.degree()];
        for (p, msg) in ctx.received() {
            let their_cluster = msg.id_at(0).expect("finalize carries the cluster");
            let points_here = msg.bit_at(1).expect("finalize carries the parent flag");
            if their_cluster == cluster {
                child_ports[p] = points_here;
            } else {
                cut_ports[p] = true;
            }
        }
        self.knowledge = Some(ClusterKnowledge {
            cluster,
            parent_port: self.parent_port,
            child_ports,
            cut_ports,
        });
        ctx.accept();
    }
}

/// Rounds a decomposition run takes: ids, the bidding window, finalization.
pub fn decomposition_rounds(n: usize, epsilon: Eps) -> u32 {
    shift_cap(n, epsilon) + 3
}

pub fn decompose(g: &Graph, epsilon: Eps, seed: u64) -> Result<DecompositionRun, DecompError> {
    let rate = shift_rate(epsilon);
    let cap = shift_cap(g.n(), epsilon);
    let mut attempts = 0;
    let mut seed_used = seed;
    loop {
        attempts += 1;
        if attempts > MAX_RESTARTS {
            return Err(DecompError::RestartsExhausted { cap, attempts: attempts - 1 });
        }
        // Shifts depend only on (seed, vertex), so an oversized draw is
        // detectable before simulating; restart under a derived seed.
        let all_within_cap = (0..g.n()).all(|v| {
            let mut rng = derive_vertex_rng(seed_used, v as VertexId, 0);
            sample_shift(&mut rng, rate) <= cap as u64
        });
        if !all_within_cap {
            seed_used = mix_seed(seed_used, 0xD3C0);
            continue;
        }
        let mut programs = shift_programs(g.n(), rate, cap);
        let mut config = RunConfig::new(seed_used);
        config.max_rounds = cap + 3;
        let report = run(g, &mut programs, &config)?;
        debug_assert_eq!(report.verdict, Verdict::Accept);
        let mut cluster_of = Vec::with_capacity(g.n());
        let mut parent_of = Vec::with_capacity(g.n());
        for (v, p) in programs.iter().enumerate() {
            let k = p.knowledge.as_ref().expect("accepting run fills knowledge");
            cluster_of.push(k.cluster);
            parent_of.push(k.parent_port.map(|port| g.neighbors(v as VertexId)[port]));
        }
        let mut cut_edges = BTreeSet::new();
        for (u, v) in g.edges() {
            if cluster_of[u as usize] != cluster_of[v as usize] {
                cut_edges.insert((u.min(v), u.max(v)));
            }
        }
        let decomposition =
            Decomposition { cluster_of, parent_of, cut_edges, cluster_diameter_bound: cap };
        return Ok(DecompositionRun { decomposition, report, seed_used, attempts });
    }
}

/// Recomputes each vertex's end-of-run knowledge from the global maps, for
/// handing to a follow-up per-cluster program.
pub fn cluster_knowledge(g: &Graph, d: &Decomposition) -> Vec<ClusterKnowledge> {
    (0..g.n())
        .map(|v| {
            let vid = v as VertexId;
            let cluster = d.cluster_of[v];
            let mut parent_port = None;
            let mut child_ports = vec![false; g.degree(vid)];
            let mut cut_ports = vec![false; g.degree(vid)];
            for (p, &w) in g.neighbors(vid).iter().enumerate() {
                if d.cluster_of[w as usize] != cluster {
                    cut_ports[p] = true;
                } else if d.parent_of[v] == Some(w) {
                    parent_port = Some(p);
                } else if d.parent_of[w as usize] == Some(vid) {
                    child_ports[p] = true;
                }
            }
            ClusterKnowledge { cluster, parent_port, child_ports, cut_ports }
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct DecompositionReport {
    pub violations: Vec<String>,
    pub cut_fraction: f64,
    pub max_center_eccentricity: u32,
}

impl DecompositionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Global structural check of a decomposition against its graph: partition
/// totality, parent chains that stay inside their cluster and reach the
/// center, full edge classification, and the per-cluster radius bound.
pub fn verify_decomposition(g: &Graph, d: &Decomposition, _epsilon: Eps) -> DecompositionReport {
    let mut report = DecompositionReport::default();
    let n = g.n();
    if d.cluster_of.len() != n || d.parent_of.len() != n {
        report.violations.push(format!(
            "maps cover {} / {} vertices, graph has {n}",
            d.cluster_of.len(),
            d.parent_of.len()
        ));
        return report;
    }
    for v in 0..n {
        let c = d.cluster_of[v];
        if (c as usize) >= n || d.cluster_of[c as usize] != c {
            report.violations.push(format!("vertex {v}: center {c} not in its own cluster"));
        }
        match d.parent_of[v] {
            None => {
                if c != v as VertexId {
                    report.violations.push(format!("vertex {v}: no parent but center is {c}"));
                }
            }
            Some(p) => {
                if !g.neighbors(v as VertexId).contains(&p) {
                    report.violations.push(format!("vertex {v}: parent {p} is not a neighbor"));
                } else if d.cluster_of[p as usize] != c {
                    report.violations.push(format!("vertex {v}: tree leaves cluster at {p}"));
                }
            }
        }
        // Parent chains must reach the center without cycling.
        let mut cur = v as VertexId;
        let mut steps = 0;
        while let Some(p) = d.parent_of[cur as usize] {
            cur = p;
            steps += 1;
            if steps > n {
                report.violations.push(format!("vertex {v}: parent chain cycles"));
                break;
            }
        }
        if steps <= n && cur != c {
            report.violations.push(format!("vertex {v}: parent chain ends at {cur}, not {c}"));
        }
    }
    for (u, v) in g.edges() {
        let crossing = d.cluster_of[u as usize] != d.cluster_of[v as usize];
        let marked = d.cut_edges.contains(&(u.min(v), u.max(v)));
        if crossing && !marked {
            report.violations.push(format!("unclassified edge ({u}, {v})"));
        }
        if !crossing && marked {
            report.violations.push(format!("internal edge ({u}, {v}) marked cut"));
        }
    }
    for &(u, v) in &d.cut_edges {
        if u as usize >= n || v as usize >= n || !g.neighbors(u).contains(&v) {
            report.violations.push(format!("cut edge ({u}, {v}) not in the graph"));
        }
    }
    // BFS from each center over intra-cluster edges: members must be reached
    // within the diameter bound.
    let mut dist = vec![u32::MAX; n];
    for center in 0..n {
        if d.cluster_of[center] != center as VertexId {
            continue;
        }
        let c = center as VertexId;
        dist[center] = 0;
        let mut queue = std::collections::VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            for &w in g.neighbors(x) {
                if d.cluster_of[w as usize] == c && dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[x as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        for (v, &dv) in dist.iter().enumerate() {
            if d.cluster_of[v] != c {
                continue;
            }
            if dv == u32::MAX {
                report.violations.push(format!("vertex {v}: unreachable from center {c}"));
            } else {
                report.max_center_eccentricity = report.max_center_eccentricity.max(dv);
                if dv > d.cluster_diameter_bound {
                    report.violations.push(format!(
                        "vertex {v}: distance {dv} from center {c} exceeds bound {}",
                        d.cluster_diameter_bound
                    ));
                }
            }
        }
        for (v, dv) in dist.iter_mut().enumerate() {
            if d.cluster_of[v] == c {
                *dv = u32::MAX;
            }
        }
    }
    report.cut_fraction = d.cut_fraction(g);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use rand::SeedableRng;

    fn eps(num: u64, den: u64) -> Eps {
        Eps::new(num, den).unwrap()
    }

    #[test]
    fn cap_and_rate_track_epsilon() {
        assert_eq!(shift_cap(1000, eps(1, 5)), 139);
        assert_eq!(shift_cap(1000, eps(1, 1)), 28);
        assert_eq!(shift_cap(1, eps(1, 2)), 6);
        assert!((shift_rate(eps(1, 5)) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_vertex_is_its_own_cluster() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let run = decompose(&g, eps(1, 2), 3).unwrap();
        assert_eq!(run.decomposition.cluster_of, vec![0]);
        assert_eq!(run.decomposition.parent_of, vec![None]);
        assert!(run.decomposition.cut_edges.is_empty());
        assert!(verify_decomposition(&g, &run.decomposition, eps(1, 2)).ok());
    }

    #[test]
    fn path_decompositions_verify_with_exact_round_count() {
        let g = Graph::path(50);
        let e = eps(1, 4);
        for seed in 0..10 {
            let run = decompose(&g, e, seed).unwrap();
            let report = verify_decomposition(&g, &run.decomposition, e);
            assert!(report.ok(), "seed {seed}: {:?}", report.violations);
            assert_eq!(run.report.rounds, decomposition_rounds(g.n(), e));
            assert!(report.max_center_eccentricity <= shift_cap(g.n(), e));
        }
    }

    #[test]
    fn round_budget_stays_within_declared_factor() {
        for (n, e) in [(50usize, eps(1, 4)), (1000, eps(1, 5)), (10, eps(1, 1))] {
            let bound =
                DECOMP_ROUND_FACTOR * (n.max(2) as f64).log2() / e.as_f64() + DECOMP_ROUND_SLACK as f64;
            assert!(
                (decomposition_rounds(n, e) as f64) <= bound,
                "n={n}: {} > {bound}",
                decomposition_rounds(n, e)
            );
        }
    }

    #[test]
    fn mean_cut_fraction_stays_under_epsilon() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(500);
        let g = generate::gnm(200, 800, &mut gen_rng).unwrap();
        let e = eps(1, 5);
        let trials = 100;
        let mut total = 0.0;
        for seed in 0..trials {
            let run = decompose(&g, e, seed).unwrap();
            let report = verify_decomposition(&g, &run.decomposition, e);
            assert!(report.ok(), "seed {seed}: {:?}", report.violations);
            total += report.cut_fraction;
        }
        let mean = total / trials as f64;
        assert!(mean <= e.as_f64(), "mean cut fraction {mean}");
        assert!(mean > 0.0, "some edges must be cut on a random graph");
    }

    #[test]
    fn same_seed_reproduces_the_decomposition() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(7);
        let g = generate::gnm(60, 150, &mut gen_rng).unwrap();
        let a = decompose(&g, eps(1, 3), 99).unwrap();
        let b = decompose(&g, eps(1, 3), 99).unwrap();
        assert_eq!(a.decomposition, b.decomposition);
        assert_eq!(a.seed_used, b.seed_used);
        let c = decompose(&g, eps(1, 3), 100).unwrap();
        assert_ne!(a.decomposition, c.decomposition);
    }

    #[test]
    fn oversized_shifts_restart_with_a_derived_seed() {
        // At n = 2 and epsilon = 1 the cap is small enough that restarts are
        // common; some seed in a short scan must take more than one attempt
        // and still emit a valid decomposition.
        let g = Graph::path(2);
        let e = eps(1, 1);
        let mut saw_restart = false;
        for seed in 0..40 {
            let run = decompose(&g, e, seed).unwrap();
            assert!(verify_decomposition(&g, &run.decomposition, e).ok());
            if run.attempts > 1 {
                saw_restart = true;
                assert_ne!(run.seed_used, seed);
            }
        }
        assert!(saw_restart);
    }

    #[test]
    fn vacuous_epsilon_still_yields_valid_structure() {
        let g = Graph::complete(6);
        let run = decompose(&g, eps(1, 1), 1).unwrap();
        let report = verify_decomposition(&g, &run.decomposition, eps(1, 1));
        assert!(report.ok(), "{:?}", report.violations);
        assert!(report.cut_fraction <= 1.0);
    }

    #[test]
    fn verifier_flags_constructed_violations() {
        let g = Graph::path(4);
        let run = decompose(&g, eps(1, 2), 5).unwrap();
        let good = run.decomposition;
        assert!(verify_decomposition(&g, &good, eps(1, 2)).ok());

        // Parent pointer crossing clusters.
        let mut bad = good.clone();
        bad.cluster_of = vec![0, 0, 3, 3];
        bad.parent_of = vec![None, Some(0), Some(1), None];
        bad.cut_edges = BTreeSet::from([(1, 2)]);
        let report = verify_decomposition(&g, &bad, eps(1, 2));
        assert!(report.violations.iter().any(|v| v.contains("tree leaves cluster")));

        // Crossing edge missing from the cut set.
        let mut bad = good.clone();
        bad.cluster_of = vec![0, 0, 2, 2];
        bad.parent_of = vec![None, Some(0), None, Some(2)];
        bad.cut_edges = BTreeSet::new();
        let report = verify_decomposition(&g, &bad, eps(1, 2));
        assert!(report.violations.iter().any(|v| v.contains("unclassified edge")));

        // Parent chain that cycles without reaching a center.
        let mut bad = good;
        bad.cluster_of = vec![0, 0, 0, 0];
        bad.parent_of = vec![None, Some(2), Some(1), Some(2)];
        let report = verify_decomposition(&g, &bad, eps(1, 2));
        assert!(report.violations.iter().any(|v| v.contains("cycles")));
    }

    #[test]
    fn knowledge_reconstruction_matches_tree_structure() {
        let mut gen_rng = ChaCha8Rng::seed_from_u64(12);
        let g = generate::gnm(40, 90, &mut gen_rng).unwrap();
        let run = decompose(&g, eps(1, 3), 17).unwrap();
        let d = &run.decomposition;
        let knowledge = cluster_knowledge(&g, d);
        for (v, k) in knowledge.iter().enumerate() {
            assert_eq!(k.cluster, d.cluster_of[v]);
            match (k.parent_port, d.parent_of[v]) {
                (None, None) => {}
                (Some(p), Some(parent)) => assert_eq!(g.neighbors(v as VertexId)[p], parent),
                other => panic!("vertex {v}: mismatched parent {other:?}"),
            }
            for (p, &w) in g.neighbors(v as VertexId).iter().enumerate() {
                assert_eq!(
                    k.cut_ports[p],
                    d.cluster_of[w as usize] != d.cluster_of[v],
                    "vertex {v} port {p}"
                );
                assert_eq!(
                    k.child_ports[p],
                    d.parent_of[w as usize] == Some(v as VertexId)
                        && d.cluster_of[w as usize] == d.cluster_of[v],
                    "vertex {v} port {p}"
                );
            }
        }
        // Tree edges plus cut edges plus intra non-tree edges cover E.
        let tree_edges: usize = knowledge.iter().filter(|k| k.parent_port.is_some()).count();
        let centers = g.n() - tree_edges;
        assert_eq!(centers, d.cluster_of.iter().enumerate().filter(|&(v, &c)| c == v as VertexId).count());
    }

    #[test]
    fn dump_format_lists_vertices_then_cuts() {
        let g = Graph::path(3);
        let d = Decomposition {
            cluster_of: vec![0, 0, 2],
            parent_of: vec![None, Some(0), None],
            cut_edges: BTreeSet::from([(1, 2)]),
            cluster_diameter_bound: 4,
        };
        assert!(verify_decomposition(&g, &d, eps(1, 2)).ok());
        assert_eq!(d.to_text(), "0 0 -\n1 0 0\n2 2 -\ncut 1 2\n");
    }
}
