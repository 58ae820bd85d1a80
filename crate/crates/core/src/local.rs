//! Constant-round testers for small forbidden subgraphs.
//!
//! The triangle tester repeats one-round iterations: every vertex sends each
//! neighbor an independent uniform draw from the rest of its neighborhood and
//! rejects when a received id lands inside its own. The 4-vertex testers
//! repeat three-round iterations that stitch a random 2-path onto each edge:
//! neighbors exchange uniform draws, then degree-weighted 2-path reports, and
//! the receiving endpoint checks what 4-vertex subgraph the report closes.
//! Both are one-sided: every rejection is backed by a live witness.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, GraphError, VertexId};
use crate::rational::Eps;
use crate::sim::{Ctx, Field, VertexProgram};

/// Weighting for the 2-path middle-vertex draw. `DegreeMinusOne` makes the
/// sampled 2-path exactly uniform over the 2-paths through the vertex;
/// `Degree` is kept for comparison and skews toward high-degree middles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PiMode {
    #[default]
    DegreeMinusOne,
    Degree,
}

#[derive(Clone, Debug, Default)]
pub struct LocalTesterConfig {
    /// Overrides the iteration count derived from epsilon.
    pub iterations: Option<u32>,
    /// Record per-iteration detections instead of halting on the first one;
    /// the verdict is then always Accept and `detections` holds the events.
    pub measure: bool,
    pub pi_mode: PiMode,
}

/// Iterations for the triangle tester: `ceil(4 / eps)`.
pub fn triangle_iterations(epsilon: Eps) -> u32 {
    epsilon.ceil_div_into(4).min(u32::MAX as u64) as u32
}

/// Iterations for the 4-vertex testers: `ceil(16 / eps)`.
pub fn c4_iterations(epsilon: Eps) -> u32 {
    epsilon.ceil_div_into(16).min(u32::MAX as u64) as u32
}

/// Middle-vertex weights over the neighbor list of a vertex.
pub fn pi_weights(neighbor_degrees: &[usize], mode: PiMode) -> Vec<u64> {
    neighbor_degrees
        .iter()
        .map(|&d| match mode {
            PiMode::DegreeMinusOne => d.saturating_sub(1) as u64,
            PiMode::Degree => d as u64,
        })
        .collect()
}

fn draw_weighted(weights: &[u64], total: u64, rng: &mut ChaCha8Rng) -> usize {
    debug_assert!(total > 0);
    let mut x = rng.gen_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("weights sum to total")
}

/// Draws one 2-path `(a, b)` anchored at `v` the way the distributed tester
/// does: middle `a` by pi-weights over `N(v)`, endpoint `b` uniform over
/// `N(a) \ {v}`. Returns None when no 2-path can be produced.
pub fn sample_two_path(
    g: &Graph,
    v: VertexId,
    mode: PiMode,
    rng: &mut ChaCha8Rng,
) -> Option<(VertexId, VertexId)> {
    let degrees: Vec<usize> = g.neighbors(v).iter().map(|&w| g.degree(w)).collect();
    let weights = pi_weights(&degrees, mode);
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let a = g.neighbors(v)[draw_weighted(&weights, total, rng)];
    let choices: Vec<VertexId> = g.neighbors(a).iter().copied().filter(|&x| x != v).collect();
    if choices.is_empty() {
        return None;
    }
    Some((a, choices[rng.gen_range(0..choices.len())]))
}

/// Draws uniformly from the port list excluding `skip`, as an index.
fn draw_port_excluding(degree: usize, skip: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
    if degree <= 1 {
        return None;
    }
    let j = rng.gen_range(0..degree - 1);
    Some(if j >= skip { j + 1 } else { j })
}

// ---- triangle tester --------------------------------------------------------

pub struct TriangleTester {
    t: u32,
    measure: bool,
    neighbor_ids: Vec<VertexId>,
    sorted_ids: Vec<VertexId>,
    /// Per-iteration bitmask of ports whose message closed a triangle.
    /// Filled only in measure mode (ports above 63 unsupported there).
    pub detections: Vec<u64>,
}

pub fn triangle_programs(epsilon: Eps, n: usize, config: &LocalTesterConfig) -> Vec<TriangleTester> {
    let t = config.iterations.unwrap_or_else(|| triangle_iterations(epsilon));
    (0..n)
        .map(|_| TriangleTester {
            t,
            measure: config.measure,
            neighbor_ids: Vec::new(),
            sorted_ids: Vec::new(),
            detections: Vec::new(),
        })
        .collect()
}

impl VertexProgram for TriangleTester {
    fn init(&mut self, _ctx: &mut Ctx) {}

    fn send(&mut self, ctx: &mut Ctx) {
        let round = ctx.round();
        if round == 1 {
            for p in 0..ctx.degree() {
                let me = ctx.vertex();
                ctx.send(p, [Field::Id(me)]);
            }
            return;
        }
        // Iteration rounds: an independent uniform draw from N(v) minus the
        // target, re-chosen per neighbor per iteration.
        for p in 0..ctx.degree() {
            match draw_port_excluding(ctx.degree(), p, ctx.rng()) {
                Some(j) => {
                    let pick = self.neighbor_ids[j];
                    ctx.send(p, [Field::Id(pick)]);
                }
                None => ctx.send(p, [Field::Bit(false)]),
            }
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        let round = ctx.round();
        if round == 1 {
            self.neighbor_ids = vec![0; ctx.degree()];
            for (p, msg) in ctx.received() {
                self.neighbor_ids[p] = msg.id_at(0).expect("round 1 carries ids");
            }
            self.sorted_ids = self.neighbor_ids.clone();
            self.sorted_ids.sort_unstable();
            return;
        }
        let mut mask = 0u64;
        let mut hit = false;
        for (p, msg) in ctx.received() {
            let Some(x) = msg.id_at(0) else { continue };
            if self.sorted_ids.binary_search(&x).is_ok() {
                hit = true;
                if p < 64 {
                    mask |= 1 << p;
                }
            }
        }
        if self.measure {
            self.detections.push(mask);
        } else if hit {
            ctx.reject();
            return;
        }
        if round == 1 + self.t {
            ctx.accept();
        }
    }
}

// ---- 4-vertex testers ---------------------------------------------------------

/// What the receiving endpoint checks a reported 2-path against.
#[derive(Clone, Debug)]
enum PathCheck {
    /// Literal 4-cycle closure: endpoint of the path adjacent to the receiver.
    C4,
    /// Containment of a fixed 4-vertex pattern in the reconstructed subgraph.
    Pattern(Graph),
}

/// Known adjacency among the four vertices (receiver v, sender w, middle a,
/// endpoint b), as bits in pair order (vw, va, vb, wa, wb, ab).
fn contains_pattern(h: &Graph, bits: [bool; 6]) -> bool {
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let adj = |x: usize, y: usize| {
        let (x, y) = (x.min(y), x.max(y));
        let i = PAIRS.iter().position(|&p| p == (x, y)).unwrap();
        bits[i]
    };
    let hedges = h.edges();
    // Try all placements of h's 4 labels onto (v, w, a, b).
    let mut perm = [0usize, 1, 2, 3];
    loop {
        if hedges.iter().all(|&(x, y)| adj(perm[x as usize], perm[y as usize])) {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize; 4]) -> bool {
    let Some(i) = (0..3).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..4).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

pub struct PathTester {
    t: u32,
    check: PathCheck,
    pi_mode: PiMode,
    measure: bool,
    neighbor_ids: Vec<VertexId>,
    neighbor_degrees: Vec<usize>,
    sorted_ids: Vec<VertexId>,
    weights: Vec<u64>,
    weight_total: u64,
    /// Per-port uniform draws received in the current iteration's first round.
    b_received: Vec<Option<VertexId>>,
    /// Per-port path reports (middle, endpoint, sender-endpoint adjacency).
    paths: Vec<Option<(VertexId, VertexId, bool)>>,
    /// Per-iteration bitmask of ports whose report closed the target pattern.
    pub detections: Vec<u64>,
}

pub fn c4_programs(epsilon: Eps, n: usize, config: &LocalTesterConfig) -> Vec<PathTester> {
    path_programs(PathCheck::C4, epsilon, n, config)
}

fn path_programs(
    check: PathCheck,
    epsilon: Eps,
    n: usize,
    config: &LocalTesterConfig,
) -> Vec<PathTester> {
    let t = config.iterations.unwrap_or_else(|| c4_iterations(epsilon));
    (0..n)
        .map(|_| PathTester {
            t,
            check: check.clone(),
            pi_mode: config.pi_mode,
            measure: config.measure,
            neighbor_ids: Vec::new(),
            neighbor_degrees: Vec::new(),
            sorted_ids: Vec::new(),
            weights: Vec::new(),
            weight_total: 0,
            b_received: Vec::new(),
            paths: Vec::new(),
            detections: Vec::new(),
        })
        .collect()
}

/// Phase of a 3-round iteration: rounds 2,5,8,... exchange uniform draws,
/// 3,6,9,... carry the path reports, 4,7,10,... evaluate them.
fn iteration_phase(round: u32) -> u32 {
    (round - 2) % 3
}

impl VertexProgram for PathTester {
    fn init(&mut self, _ctx: &mut Ctx) {}

    fn send(&mut self, ctx: &mut Ctx) {
        let round = ctx.round();
        if round == 1 {
            for p in 0..ctx.degree() {
                let me = ctx.vertex();
                let deg = ctx.degree() as u64;
                ctx.send(p, [Field::Id(me), Field::Small(deg)]);
            }
            return;
        }
        match iteration_phase(round) {
            0 => {
                // Independent uniform draw from N(v) minus the target.
                for p in 0..ctx.degree() {
                    match draw_port_excluding(ctx.degree(), p, ctx.rng()) {
                        Some(j) => {
                            let pick = self.neighbor_ids[j];
                            ctx.send(p, [Field::Id(pick)]);
                        }
                        None => ctx.send(p, [Field::Bit(false)]),
                    }
                }
            }
            1 => {
                // Per-target 2-path report: middle by pi-weights, endpoint
                // taken from the middle's own uniform draw this iteration.
                let attach_bit = matches!(self.check, PathCheck::Pattern(_));
                for p in 0..ctx.degree() {
                    let report = if self.weight_total == 0 {
                        None
                    } else {
                        let ap = draw_weighted(&self.weights, self.weight_total, ctx.rng());
                        self.b_received[ap].map(|b| (self.neighbor_ids[ap], b))
                    };
                    match report {
                        Some((a, b)) if attach_bit => {
                            let adjacent = self.sorted_ids.binary_search(&b).is_ok();
                            ctx.send(p, [Field::Id(a), Field::Id(b), Field::Bit(adjacent)]);
                        }
                        Some((a, b)) => ctx.send(p, [Field::Id(a), Field::Id(b)]),
                        None => ctx.send(p, [Field::Bit(false)]),
                    }
                }
            }
            _ => {}
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        let round = ctx.round();
        if round == 1 {
            self.neighbor_ids = vec![0; ctx.degree()];
            self.neighbor_degrees = vec![0; ctx.degree()];
            for (p, msg) in ctx.received() {
                self.neighbor_ids[p] = msg.id_at(0).expect("round 1 carries ids");
                self.neighbor_degrees[p] = msg.small_at(1).expect("round 1 carries degrees") as usize;
            }
            self.sorted_ids = self.neighbor_ids.clone();
            self.sorted_ids.sort_unstable();
            self.weights = pi_weights(&self.neighbor_degrees, self.pi_mode);
            self.weight_total = self.weights.iter().sum();
            self.b_received = vec![None; ctx.degree()];
            self.paths = vec![None; ctx.degree()];
            return;
        }
        match iteration_phase(round) {
            0 => {
                self.b_received.fill(None);
                for (p, msg) in ctx.received() {
                    self.b_received[p] = msg.id_at(0);
                }
            }
            1 => {
                self.paths.fill(None);
                for (p, msg) in ctx.received() {
                    if let (Some(a), Some(b)) = (msg.id_at(0), msg.id_at(1)) {
                        self.paths[p] = Some((a, b, msg.bit_at(2).unwrap_or(false)));
                    }
                }
            }
            _ => {
                let me = ctx.vertex();
                let mut mask = 0u64;
                let mut hit = false;
                for (p, path) in self.paths.iter().enumerate() {
                    let Some((a, b, wb_adjacent)) = *path else { continue };
                    let w = self.neighbor_ids[p];
                    let distinct = a != me && b != me && a != w && b != w && a != b;
                    if !distinct {
                        continue;
                    }
                    let detected = match &self.check {
                        PathCheck::C4 => self.sorted_ids.binary_search(&b).is_ok(),
                        PathCheck::Pattern(h) => {
                            let va = self.sorted_ids.binary_search(&a).is_ok();
                            let vb = self.sorted_ids.binary_search(&b).is_ok();
                            contains_pattern(h, [true, va, vb, true, wb_adjacent, true])
                        }
                    };
                    if detected {
                        hit = true;
                        if p < 64 {
                            mask |= 1 << p;
                        }
                    }
                }
                if self.measure {
                    self.detections.push(mask);
                } else if hit {
                    ctx.reject();
                    return;
                }
                if round == 1 + 3 * self.t {
                    ctx.accept();
                }
            }
        }
    }
}

// ---- dispatch over all connected patterns on <= 4 vertices -------------------

/// One-round program rejecting exactly the vertices of degree >= `bound`;
/// detects stars K_{1,bound} (and so P3 for bound 2, edges for bound 1).
pub struct DegreeThreshold {
    bound: usize,
}

impl VertexProgram for DegreeThreshold {
    fn init(&mut self, _ctx: &mut Ctx) {}

    fn send(&mut self, _ctx: &mut Ctx) {}

    fn receive(&mut self, ctx: &mut Ctx) {
        if ctx.degree() >= self.bound {
            ctx.reject();
        } else {
            ctx.accept();
        }
    }
}

pub enum SubgraphTester {
    Degree(DegreeThreshold),
    Triangle(TriangleTester),
    Path(PathTester),
}

impl VertexProgram for SubgraphTester {
    fn init(&mut self, ctx: &mut Ctx) {
        match self {
            SubgraphTester::Degree(p) => p.init(ctx),
            SubgraphTester::Triangle(p) => p.init(ctx),
            SubgraphTester::Path(p) => p.init(ctx),
        }
    }

    fn send(&mut self, ctx: &mut Ctx) {
        match self {
            SubgraphTester::Degree(p) => p.send(ctx),
            SubgraphTester::Triangle(p) => p.send(ctx),
            SubgraphTester::Path(p) => p.send(ctx),
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        match self {
            SubgraphTester::Degree(p) => p.receive(ctx),
            SubgraphTester::Triangle(p) => p.receive(ctx),
            SubgraphTester::Path(p) => p.receive(ctx),
        }
    }
}

/// Programs testing freeness of any connected pattern on 2..=4 vertices.
///
/// Stars are pure degree checks; the triangle gets its one-round iterations;
/// every other 4-vertex pattern has a Hamiltonian path and reuses the 2-path
/// machinery with an extra adjacency bit, the receiver checking containment
/// in the reconstructed subgraph on the four involved vertices.
pub fn h4_programs(
    h: &Graph,
    epsilon: Eps,
    n: usize,
    config: &LocalTesterConfig,
) -> Result<Vec<SubgraphTester>, GraphError> {
    let (_, comps) = h.components();
    if h.n() < 2 || h.n() > 4 || comps != 1 {
        return Err(GraphError::Parse {
            line: 0,
            msg: format!("pattern must be connected with 2..=4 vertices, got {h:?}"),
        });
    }
    let degree_program = |bound: usize| {
        (0..n).map(|_| SubgraphTester::Degree(DegreeThreshold { bound })).collect()
    };
    let mut degrees: Vec<usize> = (0..h.n() as VertexId).map(|v| h.degree(v)).collect();
    degrees.sort_unstable();
    match (h.n(), h.m()) {
        (2, 1) => Ok(degree_program(1)),
        (3, 2) => Ok(degree_program(2)),
        (3, 3) => Ok(triangle_programs(epsilon, n, config)
            .into_iter()
            .map(SubgraphTester::Triangle)
            .collect()),
        (4, 3) if degrees == [1, 1, 1, 3] => Ok(degree_program(3)),
        _ => Ok(path_programs(PathCheck::Pattern(h.clone()), epsilon, n, config)
            .into_iter()
            .map(SubgraphTester::Path)
            .collect()),
    }
}
