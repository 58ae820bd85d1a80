//! Tree-exclusion testing: a query-model tester for "contains no copy of the
//! tree T", and its message-passing simulation.
//!
//! The query tester repeatedly tries to embed T greedily from a random edge
//! endpoint, drawing neighbors uniformly with replacement and aborting on any
//! revisit. The distributed variant runs the same embedding attempts from all
//! vertices at once in phases of exactly `2k` rounds: ranked attempts spread
//! down for `k` rounds (higher root rank displaces lower), then success
//! reports flow back up for `k` rounds. Both are one-sided: a rejection
//! always pins down a real copy of T.

use std::cell::Cell;
use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, VertexId};
use crate::rational::Eps;
use crate::sim::{Ctx, Field, Verdict, VertexProgram};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree pattern line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not a tree rooted at label 0: {0}")]
    Shape(String),
}

/// A rooted tree on labels `0..k`, label 0 the root. The tester tries to
/// embed it with the root placed first and children drawn outward.
#[derive(Clone, Debug)]
pub struct TreePattern {
    /// `parent[i]` for labels `1..k`; entry 0 is unused.
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl TreePattern {
    /// Builds from the parent vector (`parent[0]` ignored).
    pub fn from_parents(parent: Vec<usize>) -> Result<TreePattern, TreeError> {
        let k = parent.len();
        if k < 2 {
            return Err(TreeError::Shape(format!("need at least 2 labels, got {k}")));
        }
        for (i, &p) in parent.iter().enumerate().skip(1) {
            if p >= k {
                return Err(TreeError::Shape(format!("label {i} has parent {p} out of range")));
            }
            if p == i {
                return Err(TreeError::Shape(format!("label {i} is its own parent")));
            }
        }
        // Depths settle in <= k passes iff the parent relation is acyclic.
        let mut depth = vec![usize::MAX; k];
        depth[0] = 0;
        for _ in 0..k {
            for i in 1..k {
                if depth[i] == usize::MAX && depth[parent[i]] != usize::MAX {
                    depth[i] = depth[parent[i]] + 1;
                }
            }
        }
        if depth.contains(&usize::MAX) {
            return Err(TreeError::Shape("parent pointers contain a cycle".into()));
        }
        let mut children = vec![Vec::new(); k];
        for i in 1..k {
            children[parent[i]].push(i);
        }
        Ok(TreePattern { parent, children, depth })
    }

    /// Path on `k` labels rooted at an endpoint.
    pub fn path(k: usize) -> TreePattern {
        let parent = (0..k).map(|i| i.saturating_sub(1)).collect();
        TreePattern::from_parents(parent).unwrap()
    }

    /// Star on `k` labels: root 0 with `k - 1` leaf children.
    pub fn star(k: usize) -> TreePattern {
        TreePattern::from_parents(vec![0; k]).unwrap()
    }

    /// Parses the file format: first line `k`, then `k - 1` lines `i parent(i)`.
    pub fn parse(text: &str) -> Result<TreePattern, TreeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines
            .next()
            .ok_or(TreeError::Parse { line: 1, msg: "missing vertex count".into() })?;
        let k: usize = header
            .parse()
            .map_err(|_| TreeError::Parse { line, msg: format!("bad vertex count {header:?}") })?;
        if k < 2 {
            return Err(TreeError::Shape(format!("need at least 2 labels, got {k}")));
        }
        let mut parent = vec![usize::MAX; k];
        parent[0] = 0;
        for _ in 1..k {
            let (line, body) = lines
                .next()
                .ok_or(TreeError::Parse { line: 0, msg: format!("expected {} parent lines", k - 1) })?;
            let mut nums = body.split_whitespace().map(str::parse::<usize>);
            let bad = || TreeError::Parse { line, msg: format!("expected \"i parent\" in {body:?}") };
            let i = nums.next().ok_or_else(bad)?.map_err(|_| bad())?;
            let p = nums.next().ok_or_else(bad)?.map_err(|_| bad())?;
            if nums.next().is_some() {
                return Err(bad());
            }
            if i == 0 || i >= k {
                return Err(TreeError::Parse { line, msg: format!("label {i} out of range 1..{k}") });
            }
            if parent[i] != usize::MAX {
                return Err(TreeError::Parse { line, msg: format!("label {i} assigned twice") });
            }
            parent[i] = p;
        }
        if let Some((line, extra)) = lines.next() {
            return Err(TreeError::Parse { line, msg: format!("unexpected extra line {extra:?}") });
        }
        TreePattern::from_parents(parent)
    }

    /// Resolves `path:<k>` / `star:<k>`; `Ok(None)` when `s` is no alias.
    pub fn from_alias(s: &str) -> Result<Option<TreePattern>, TreeError> {
        let Some((kind, num)) = s.split_once(':') else {
            return Ok(None);
        };
        let k: usize = num
            .parse()
            .map_err(|_| TreeError::Shape(format!("bad size in alias {s:?}")))?;
        if k < 2 {
            return Err(TreeError::Shape(format!("need at least 2 labels, got {k}")));
        }
        match kind {
            "path" => Ok(Some(TreePattern::path(k))),
            "star" => Ok(Some(TreePattern::star(k))),
            _ => Ok(None),
        }
    }

    pub fn k(&self) -> usize {
        self.parent.len()
    }

    pub fn children(&self, label: usize) -> &[usize] {
        &self.children[label]
    }

    pub fn depth(&self, label: usize) -> usize {
        self.depth[label]
    }

    pub fn to_graph(&self) -> Graph {
        let edges: Vec<(VertexId, VertexId)> = (1..self.k())
            .map(|i| (self.parent[i] as VertexId, i as VertexId))
            .collect();
        Graph::from_edges(self.k(), &edges).unwrap()
    }
}

/// Neighborhood probes against a fixed graph, with every probe counted.
pub struct QueryOracle<'a> {
    g: &'a Graph,
    edges: Vec<(VertexId, VertexId)>,
    count: Cell<u64>,
}

impl<'a> QueryOracle<'a> {
    pub fn new(g: &'a Graph) -> QueryOracle<'a> {
        QueryOracle { g, edges: g.edges(), count: Cell::new(0) }
    }

    fn tick(&self) {
        self.count.set(self.count.get() + 1);
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.tick();
        self.g.degree(v)
    }

    pub fn neighbor(&self, v: VertexId, i: usize) -> VertexId {
        self.tick();
        self.g.neighbors(v)[i]
    }

    pub fn random_edge(&self, rng: &mut ChaCha8Rng) -> (VertexId, VertexId) {
        self.tick();
        self.edges[rng.gen_range(0..self.edges.len())]
    }

    pub fn query_count(&self) -> u64 {
        self.count.get()
    }
}

/// One greedy embedding step: place label `i` at `v`, then draw one uniform
/// neighbor per child of `i` (with replacement, all before recursing) and
/// continue below. Any revisit of a labeled vertex aborts the attempt, so a
/// `true` result always witnesses a genuine copy of the pattern.
pub fn recursive_tree_exclusion(
    t: &TreePattern,
    i: usize,
    v: VertexId,
    labels: &mut HashMap<VertexId, usize>,
    oracle: &QueryOracle,
    rng: &mut ChaCha8Rng,
) -> bool {
    if labels.contains_key(&v) {
        return false;
    }
    labels.insert(v, i);
    let children = t.children(i);
    if children.is_empty() {
        return true;
    }
    let deg = oracle.degree(v);
    if deg == 0 {
        return false;
    }
    let draws: Vec<VertexId> =
        children.iter().map(|_| oracle.neighbor(v, rng.gen_range(0..deg))).collect();
    children
        .iter()
        .zip(draws)
        .all(|(&child, u)| recursive_tree_exclusion(t, child, u, labels, oracle, rng))
}

/// Iteration count `ceil(k^(k^2) / eps^k)`, saturating to `cap`.
pub fn iteration_budget(k: usize, epsilon: Eps, cap: u64) -> u64 {
    let pow = |base: u128, exp: u32| base.checked_pow(exp);
    let value = (|| {
        let kk = pow(k as u128, (k * k) as u32)?;
        let num = kk.checked_mul(pow(epsilon.denom() as u128, k as u32)?)?;
        let den = pow(epsilon.numer() as u128, k as u32)?;
        Some(num.div_ceil(den))
    })();
    match value {
        Some(v) if v <= cap as u128 => v as u64,
        _ => cap,
    }
}

/// Hard ceiling asserted on the query counter after every run:
/// `4 k^(k^2+1) / eps^k`.
pub fn query_budget(k: usize, epsilon: Eps) -> f64 {
    4.0 * (k as f64).powi((k * k + 1) as i32) / epsilon.as_f64().powi(k as i32)
}

#[derive(Clone, Debug)]
pub struct GlobalTreeConfig {
    /// Overrides the iteration formula when set.
    pub iterations: Option<u64>,
    /// Ceiling on the formula value; keeps worst-case runs bounded.
    pub cap: u64,
}

impl Default for GlobalTreeConfig {
    fn default() -> Self {
        GlobalTreeConfig { iterations: None, cap: 2_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct GlobalTreeReport {
    pub verdict: Verdict,
    /// Attempts actually executed; rejection stops early.
    pub attempts: u64,
    pub queries: u64,
    pub budget: f64,
}

/// Query-model tree-exclusion tester. Rejects iff some attempt embeds all of
/// `t`, so a T-free graph is never rejected; on graphs epsilon-far from
/// T-free the attempt count makes a miss unlikely.
pub fn global_tree_tester(
    g: &Graph,
    t: &TreePattern,
    epsilon: Eps,
    config: &GlobalTreeConfig,
    seed: u64,
) -> GlobalTreeReport {
    let k = t.k();
    let budget = query_budget(k, epsilon);
    let iterations = config.iterations.unwrap_or_else(|| iteration_budget(k, epsilon, config.cap));
    let oracle = QueryOracle::new(g);
    let mut rng = crate::sim::derive_vertex_rng(seed, 0, 0);
    let mut verdict = Verdict::Accept;
    let mut attempts = 0;
    if g.m() > 0 {
        for _ in 0..iterations {
            attempts += 1;
            let (a, b) = oracle.random_edge(&mut rng);
            let v = if rng.gen::<bool>() { a } else { b };
            let mut labels = HashMap::new();
            if recursive_tree_exclusion(t, 0, v, &mut labels, &oracle, &mut rng) {
                verdict = Verdict::Reject;
                break;
            }
        }
    }
    let queries = oracle.query_count();
    assert!(
        queries as f64 <= budget,
        "query counter {queries} exceeded the budget {budget} (k = {k}, eps = {epsilon})"
    );
    GlobalTreeReport { verdict, attempts, queries, budget }
}

/// Detection frequency over a fixed number of attempts (no early exit);
/// used to compare against hand-enumerated per-attempt probabilities.
pub fn global_detection_rate(g: &Graph, t: &TreePattern, attempts: u64, seed: u64) -> f64 {
    let oracle = QueryOracle::new(g);
    let mut rng = crate::sim::derive_vertex_rng(seed, 0, 0);
    let mut found = 0u64;
    for _ in 0..attempts {
        let (a, b) = oracle.random_edge(&mut rng);
        let v = if rng.gen::<bool>() { a } else { b };
        let mut labels = HashMap::new();
        if recursive_tree_exclusion(t, 0, v, &mut labels, &oracle, &mut rng) {
            found += 1;
        }
    }
    found as f64 / attempts as f64
}

// ---- distributed variant -----------------------------------------------------

/// Number of phases the distributed tester runs by default.
pub fn distributed_phase_count(t: &TreePattern, epsilon: Eps, cap: u64) -> u64 {
    iteration_budget(t.k(), epsilon, cap)
}

/// One embedding assignment held by a vertex: the strongest root attempt it
/// has seen this phase.
#[derive(Clone, Debug)]
struct Assignment {
    rank: u64,
    label: usize,
    /// None for the vertex's own root attempt.
    parent_port: Option<usize>,
    /// Set on neighbor-draw collisions or missing neighbors; forces failure.
    doomed: bool,
    /// Children must be dealt out in the next send phase.
    pending_send: bool,
    /// (child label, port it was sent on), in child order.
    child_ports: Vec<(usize, usize)>,
    /// Success reports per child slot; None = silence = failure.
    reports: Vec<Option<bool>>,
}

impl Assignment {
    fn new(rank: u64, label: usize, parent_port: Option<usize>) -> Assignment {
        Assignment {
            rank,
            label,
            parent_port,
            doomed: false,
            pending_send: true,
            child_ports: Vec::new(),
            reports: Vec::new(),
        }
    }
}

/// Per-vertex program. Every phase of `2k` rounds, each vertex draws a fresh
/// rank in `[n^2]` and roots its own embedding attempt; assignments spread
/// downward for `k` rounds with the highest rank winning at each vertex, and
/// verification reports flow back for `k` rounds. Messages carry only
/// `(label, rank)` or `(rank, success)`. A vertex assigned the same rank
/// twice poisons that attempt, which keeps rejections witness-backed even
/// when distinct roots draw equal ranks.
pub struct DistributedTreeTester {
    t: TreePattern,
    phases: u64,
    /// Rank drawn in the most recent phase; exposed for distribution checks.
    pub last_rank: u64,
    rank_counts: HashMap<u64, u32>,
    active: Option<Assignment>,
    found: bool,
}

impl DistributedTreeTester {
    fn two_k(&self) -> u32 {
        2 * self.t.k() as u32
    }

    /// Phase-local round in `1..=2k`.
    fn rho(&self, round: u32) -> u32 {
        (round - 1) % self.two_k() + 1
    }

    fn phase_index(&self, round: u32) -> u64 {
        ((round - 1) / self.two_k()) as u64
    }

    fn note_rank(&mut self, rank: u64) {
        *self.rank_counts.entry(rank).or_insert(0) += 1;
    }

    fn active_success(&self) -> bool {
        let Some(a) = &self.active else { return false };
        !a.doomed
            && self.rank_counts.get(&a.rank) == Some(&1)
            && a.reports.iter().all(|r| *r == Some(true))
    }
}

/// Builds the program vector for a graph on `n` vertices.
pub fn distributed_programs(t: &TreePattern, n: usize, phases: u64) -> Vec<DistributedTreeTester> {
    (0..n)
        .map(|_| DistributedTreeTester {
            t: t.clone(),
            phases,
            last_rank: 0,
            rank_counts: HashMap::new(),
            active: None,
            found: false,
        })
        .collect()
}

/// A run config sized so the phase budget fits under the round limit.
pub fn distributed_run_config(t: &TreePattern, phases: u64, seed: u64) -> crate::sim::RunConfig {
    let mut config = crate::sim::RunConfig::new(seed);
    config.max_rounds = (phases * 2 * t.k() as u64 + 8).min(u32::MAX as u64) as u32;
    config
}

impl VertexProgram for DistributedTreeTester {
    fn init(&mut self, ctx: &mut Ctx) {
        // A pattern larger than the graph cannot embed anywhere.
        if self.t.k() > ctx.n() || self.phases == 0 {
            ctx.accept();
        }
    }

    fn send(&mut self, ctx: &mut Ctx) {
        let rho = self.rho(ctx.round());
        if rho == 1 {
            // Phase start: fresh rank, root a new attempt.
            self.rank_counts.clear();
            self.found = false;
            let n = ctx.n() as u64;
            let rank = ctx.rng().gen_range(0..n * n);
            self.last_rank = rank;
            self.active = Some(Assignment::new(rank, 0, None));
            self.note_rank(rank);
        }
        if rho == self.two_k() {
            if self.found {
                ctx.reject();
            } else if self.phase_index(ctx.round()) + 1 >= self.phases {
                ctx.accept();
            }
            return;
        }
        // Deal out child labels for an assignment accepted last round. Only
        // the first label per port is sent; a port drawn twice revisits that
        // neighbor, which dooms the attempt.
        let deal: Option<(u64, Vec<(usize, usize)>)> = match &mut self.active {
            Some(a) if a.pending_send => {
                a.pending_send = false;
                let children = self.t.children(a.label);
                if children.is_empty() {
                    None
                } else if ctx.degree() == 0 {
                    a.doomed = true;
                    None
                } else {
                    let deg = ctx.degree();
                    let mut seen = std::collections::BTreeSet::new();
                    let mut dealt = Vec::new();
                    for &c in children {
                        let port = ctx.rng().gen_range(0..deg);
                        a.child_ports.push((c, port));
                        a.reports.push(None);
                        if seen.insert(port) {
                            dealt.push((c, port));
                        } else {
                            a.doomed = true;
                        }
                    }
                    Some((a.rank, dealt))
                }
            }
            _ => None,
        };
        if let Some((rank, dealt)) = deal {
            for (c, port) in dealt {
                ctx.send(port, [Field::Small(c as u64), Field::Small(rank)]);
            }
        }
        // Verification: depth-d assignments report to the parent at 2k - d.
        if let Some(a) = &self.active {
            let d = self.t.depth(a.label) as u32;
            if d > 0 && rho == self.two_k() - d {
                let ok = self.active_success();
                let a = self.active.as_ref().expect("still held");
                let parent = a.parent_port.expect("non-root assignments carry a parent port");
                ctx.send(parent, [Field::Small(a.rank), Field::Bit(ok)]);
            }
        }
    }

    fn receive(&mut self, ctx: &mut Ctx) {
        let rho = self.rho(ctx.round());
        let k = self.t.k() as u32;
        if rho < k {
            // Competition window: count every rank sighting for poisoning,
            // keep the single best incoming assignment if it beats the
            // current one. Equal ranks never displace anything.
            let mut best: Option<(u64, usize, usize)> = None;
            let mut seen: Vec<u64> = Vec::new();
            for (port, msg) in ctx.received() {
                let (Some(label), Some(rank)) = (msg.small_at(0), msg.small_at(1)) else {
                    continue;
                };
                let label = label as usize;
                if label >= self.t.k() {
                    continue;
                }
                debug_assert_eq!(self.t.depth(label) as u32, rho, "assignments are depth-locked");
                seen.push(rank);
                let current = self.active.as_ref().map_or(0, |a| a.rank);
                let floor = best.map_or(current, |(r, _, _)| r.max(current));
                if rank > floor {
                    best = Some((rank, label, port));
                }
            }
            for rank in seen {
                self.note_rank(rank);
            }
            if let Some((rank, label, port)) = best {
                self.active = Some(Assignment::new(rank, label, Some(port)));
            }
        } else if rho > k {
            // Verification window: match reports to dealt child slots.
            for (port, msg) in ctx.received() {
                let (Some(rank), Some(ok)) = (msg.small_at(0), msg.bit_at(1)) else {
                    continue;
                };
                if let Some(a) = &mut self.active {
                    if a.rank != rank {
                        continue;
                    }
                    let slot = (0..a.child_ports.len())
                        .find(|&i| a.child_ports[i].1 == port && a.reports[i].is_none());
                    if let Some(i) = slot {
                        a.reports[i] = Some(ok);
                    }
                }
            }
            // The root hears its children's reports one round before the
            // phase ends and decides here.
            if rho == self.two_k() - 1 {
                if let Some(a) = &self.active {
                    if a.label == 0 && a.parent_port.is_none() && self.active_success() {
                        self.found = true;
                    }
                }
            }
        }
    }
}
