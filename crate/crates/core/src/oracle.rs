//! Exact reference oracles.
//!
//! Everything here is deliberately brute force: these functions certify test
//! fixtures and check tester outcomes, so they must be independent of the
//! algorithms under test. Exponential searches guard their input size and
//! work per connected component, which keeps disjoint-copy instances cheap
//! (each copy is its own component) while still being exact.

use std::collections::BTreeSet;

use crate::graph::{FarnessCertificate, Graph, Property, VertexId};
use crate::rational::Eps;

/// Components larger than this are rejected by the exponential searches.
pub const COMPONENT_GUARD: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("component with {n} vertices exceeds the brute-force guard of {guard}")]
    TooLarge { n: usize, guard: usize },
    #[error("pattern with {n} vertices is too large to count against a big host graph")]
    PatternTooLarge { n: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("graph satisfies the property; no farness to certify")]
    NotFar,
}

// ---- union-find ------------------------------------------------------------

/// Plain union-find with path halving; used for forest checks.
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// True iff the edge set is acyclic.
pub fn is_forest(n: usize, edges: &[(VertexId, VertexId)]) -> bool {
    let mut uf = UnionFind::new(n);
    edges.iter().all(|&(u, v)| uf.union(u as usize, v as usize))
}

// ---- cheap exact checks ------------------------------------------------------

/// BFS two-coloring; exact for any size.
pub fn is_bipartite(g: &Graph) -> bool {
    let mut color = vec![u8::MAX; g.n()];
    let mut queue = std::collections::VecDeque::new();
    for s in 0..g.n() as VertexId {
        if color[s as usize] != u8::MAX {
            continue;
        }
        color[s as usize] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &w in g.neighbors(v) {
                if color[w as usize] == u8::MAX {
                    color[w as usize] = 1 - color[v as usize];
                    queue.push_back(w);
                } else if color[w as usize] == color[v as usize] {
                    return false;
                }
            }
        }
    }
    true
}

// ---- monomorphism search ----------------------------------------------------

/// Mutable adjacency used by the deletion search; sets keep removal cheap.
struct WorkGraph {
    adj: Vec<BTreeSet<VertexId>>,
}

impl WorkGraph {
    fn from_graph(g: &Graph) -> Self {
        WorkGraph {
            adj: (0..g.n() as VertexId)
                .map(|v| g.neighbors(v).iter().copied().collect())
                .collect(),
        }
    }

    fn remove(&mut self, u: VertexId, v: VertexId) {
        self.adj[u as usize].remove(&v);
        self.adj[v as usize].remove(&u);
    }

    fn insert(&mut self, u: VertexId, v: VertexId) {
        self.adj[u as usize].insert(v);
        self.adj[v as usize].insert(u);
    }

    fn has(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u as usize].contains(&v)
    }

    fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v as usize].iter().copied()
    }

    fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }
}

/// Search plan for a connected pattern: vertices in BFS order from 0, each
/// anchored at an earlier neighbor, plus the earlier vertices it must also be
/// adjacent to.
struct PatternPlan {
    /// `(pattern vertex, anchor position, other earlier positions requiring an edge)`
    steps: Vec<(VertexId, usize, Vec<usize>)>,
}

impl PatternPlan {
    fn new(pattern: &Graph) -> PatternPlan {
        assert!(pattern.n() >= 1);
        let mut order: Vec<VertexId> = vec![0];
        let mut pos = vec![usize::MAX; pattern.n()];
        pos[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in pattern.neighbors(v) {
                if pos[w as usize] == usize::MAX {
                    pos[w as usize] = order.len();
                    order.push(w);
                }
            }
        }
        assert_eq!(order.len(), pattern.n(), "pattern must be connected");
        let mut steps = Vec::new();
        for (i, &pv) in order.iter().enumerate().skip(1) {
            let earlier: Vec<usize> = pattern
                .neighbors(pv)
                .iter()
                .filter_map(|&w| (pos[w as usize] < i).then_some(pos[w as usize]))
                .collect();
            let anchor = *earlier.first().expect("BFS order leaves an earlier neighbor");
            let rest = earlier[1..].to_vec();
            steps.push((pv, anchor, rest));
        }
        PatternPlan { steps }
    }
}

fn search_monos(
    work: &WorkGraph,
    plan: &PatternPlan,
    mapped: &mut Vec<VertexId>,
    used: &mut BTreeSet<VertexId>,
    on_found: &mut dyn FnMut(&[VertexId]) -> bool,
) -> bool {
    let depth = mapped.len() - 1;
    if depth == plan.steps.len() {
        return on_found(mapped);
    }
    let (_, anchor, ref rest) = plan.steps[depth];
    let candidates: Vec<VertexId> = work.neighbors(mapped[anchor]).collect();
    for c in candidates {
        if used.contains(&c) {
            continue;
        }
        if rest.iter().any(|&p| !work.has(mapped[p], c)) {
            continue;
        }
        mapped.push(c);
        used.insert(c);
        let stop = search_monos(work, plan, mapped, used, on_found);
        mapped.pop();
        used.remove(&c);
        if stop {
            return true;
        }
    }
    false
}

/// Runs `on_found` for every monomorphism (injective, edge-preserving map)
/// from `pattern` into `work`; `on_found` returning true stops the search.
fn for_each_mono(
    work: &WorkGraph,
    pattern: &Graph,
    plan: &PatternPlan,
    on_found: &mut dyn FnMut(&[VertexId]) -> bool,
) {
    debug_assert!(pattern.n() >= 1);
    for host in 0..work.adj.len() as VertexId {
        let mut mapped = vec![host];
        let mut used: BTreeSet<VertexId> = [host].into_iter().collect();
        if search_monos(work, plan, &mut mapped, &mut used, on_found) {
            return;
        }
    }
}

fn count_monos(work: &WorkGraph, pattern: &Graph) -> u64 {
    let plan = PatternPlan::new(pattern);
    let mut count = 0u64;
    for_each_mono(work, pattern, &plan, &mut |_| {
        count += 1;
        false
    });
    count
}

fn automorphism_count(pattern: &Graph) -> u64 {
    count_monos(&WorkGraph::from_graph(pattern), pattern)
}

/// Exact number of subgraphs of `g` isomorphic to the connected `pattern`.
///
/// Counts distinct copies (vertex/edge sets), i.e. monomorphisms divided by
/// the pattern's automorphism count.
pub fn count_subgraph_copies(g: &Graph, pattern: &Graph) -> Result<u64, OracleError> {
    if pattern.n() > 5 && g.n() > COMPONENT_GUARD {
        return Err(OracleError::PatternTooLarge { n: pattern.n() });
    }
    if pattern.n() > g.n() {
        return Ok(0);
    }
    let monos = count_monos(&WorkGraph::from_graph(g), pattern);
    let aut = automorphism_count(pattern);
    debug_assert!(aut > 0 && monos.is_multiple_of(aut));
    Ok(monos / aut)
}

fn find_one_copy(work: &WorkGraph, pattern: &Graph, plan: &PatternPlan) -> Option<Vec<VertexId>> {
    let mut found = None;
    for_each_mono(work, pattern, plan, &mut |mapped| {
        found = Some(mapped.to_vec());
        true
    });
    found
}

/// Edges of `g` used by a found copy, in the pattern plan's vertex order.
fn copy_edges(pattern: &Graph, plan: &PatternPlan, mapped: &[VertexId]) -> Vec<(VertexId, VertexId)> {
    // Reconstruct pattern-vertex -> host map from the plan order.
    let mut order: Vec<VertexId> = vec![0];
    order.extend(plan.steps.iter().map(|&(pv, _, _)| pv));
    let mut host = vec![0 as VertexId; pattern.n()];
    for (i, &pv) in order.iter().enumerate() {
        host[pv as usize] = mapped[i];
    }
    pattern
        .edges()
        .into_iter()
        .map(|(a, b)| {
            let (x, y) = (host[a as usize], host[b as usize]);
            (x.min(y), x.max(y))
        })
        .collect()
}

/// Greedily packs edge-disjoint copies of `pattern` and returns how many fit.
/// The result lower-bounds the maximum packing, and any valid deletion set
/// must hit every packed copy.
pub fn greedy_edge_disjoint_cover(g: &Graph, pattern: &Graph) -> u64 {
    let plan = PatternPlan::new(pattern);
    let mut work = WorkGraph::from_graph(g);
    let mut count = 0;
    while let Some(mapped) = find_one_copy(&work, pattern, &plan) {
        for (u, v) in copy_edges(pattern, &plan, &mapped) {
            work.remove(u, v);
        }
        count += 1;
    }
    count
}

/// Branch-and-bound minimum number of edge deletions destroying every copy.
fn min_deletions(work: &mut WorkGraph, pattern: &Graph, plan: &PatternPlan, budget: u64) -> Option<u64> {
    let Some(mapped) = find_one_copy(work, pattern, plan) else {
        return Some(0);
    };
    if budget == 0 {
        return None;
    }
    let mut best: Option<u64> = None;
    let mut seen = BTreeSet::new();
    for (u, v) in copy_edges(pattern, plan, &mapped) {
        if !seen.insert((u, v)) {
            continue;
        }
        let cap = best.map_or(budget, |b| b - 1);
        if cap == 0 {
            break;
        }
        work.remove(u, v);
        if let Some(d) = min_deletions(work, pattern, plan, cap - 1) {
            let total = d + 1;
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
        work.insert(u, v);
    }
    best
}

fn component_subgraphs(g: &Graph) -> Vec<Graph> {
    let (label, count) = g.components();
    let mut verts: Vec<Vec<VertexId>> = vec![Vec::new(); count];
    for v in 0..g.n() as VertexId {
        verts[label[v as usize]].push(v);
    }
    verts
        .into_iter()
        .map(|vs| {
            let mut index = std::collections::HashMap::new();
            for (i, &v) in vs.iter().enumerate() {
                index.insert(v, i as VertexId);
            }
            let mut edges = Vec::new();
            for &v in &vs {
                for &w in g.neighbors(v) {
                    if v < w {
                        edges.push((index[&v], index[&w]));
                    }
                }
            }
            Graph::from_edges(vs.len(), &edges).unwrap()
        })
        .collect()
}

fn max_cut_exact(g: &Graph) -> Result<u64, OracleError> {
    if g.n() > COMPONENT_GUARD {
        return Err(OracleError::TooLarge { n: g.n(), guard: COMPONENT_GUARD });
    }
    if g.n() <= 1 {
        return Ok(0);
    }
    let edges = g.edges();
    let mut best = 0u64;
    // Vertex 0's side is fixed; enumerate the rest.
    for mask in 0u32..(1 << (g.n() - 1)) {
        let side = |v: VertexId| v != 0 && (mask >> (v - 1)) & 1 == 1;
        let cut = edges.iter().filter(|&&(u, v)| side(u) != side(v)).count() as u64;
        best = best.max(cut);
    }
    Ok(best)
}

fn pattern_distance(component: &Graph, pattern: &Graph) -> Result<u64, OracleError> {
    if pattern.n() > component.n() {
        return Ok(0);
    }
    if component.n() > COMPONENT_GUARD {
        return Err(OracleError::TooLarge { n: component.n(), guard: COMPONENT_GUARD });
    }
    let plan = PatternPlan::new(pattern);
    let mut work = WorkGraph::from_graph(component);
    let budget = work.edge_count() as u64;
    Ok(min_deletions(&mut work, pattern, &plan, budget).expect("deleting all edges frees any pattern"))
}

/// Exact minimum number of edge edits taking `g` into the property.
///
/// Works per connected component; for cycle-freeness the spanning-forest
/// identity `m - n + c` is used, so any size is fine. The other properties
/// run exponential searches guarded by [`COMPONENT_GUARD`] per component.
pub fn dist_to_property(g: &Graph, property: &Property) -> Result<u64, OracleError> {
    match property {
        Property::CycleFree => {
            let (_, c) = g.components();
            Ok((g.m() + c - g.n()) as u64)
        }
        Property::Bipartite => {
            let mut total = 0;
            for comp in component_subgraphs(g) {
                total += comp.m() as u64 - max_cut_exact(&comp)?;
            }
            Ok(total)
        }
        Property::TriangleFree => dist_pattern_free(g, &Graph::complete(3)),
        Property::C4Free => dist_pattern_free(g, &Graph::cycle(4)),
        Property::HFree(h) => dist_pattern_free(g, h),
        Property::TreeFree(t) => dist_pattern_free(g, &t.to_graph()),
    }
}

fn dist_pattern_free(g: &Graph, pattern: &Graph) -> Result<u64, OracleError> {
    let mut total = 0;
    for comp in component_subgraphs(g) {
        total += pattern_distance(&comp, pattern)?;
    }
    Ok(total)
}

/// Certifies that `g` is `distance/m`-far from `property`, exactly.
pub fn certify_farness(g: &Graph, property: Property) -> Result<FarnessCertificate, OracleError> {
    let distance = dist_to_property(g, &property)?;
    if distance == 0 || g.m() == 0 {
        return Err(OracleError::NotFar);
    }
    let epsilon = Eps::new(distance, g.m() as u64)
        .map_err(|e| OracleError::Unsupported(e.to_string()))?;
    Ok(FarnessCertificate { property, epsilon, distance, m: g.m() as u64 })
}

/// All 2-paths `(a, b)` with `a` adjacent to `v` and `b` adjacent to `a`,
/// excluding `b = v`. The middle vertex may repeat across entries.
pub fn two_paths(g: &Graph, v: VertexId) -> Vec<(VertexId, VertexId)> {
    let mut out = Vec::new();
    for &a in g.neighbors(v) {
        for &b in g.neighbors(a) {
            if b != v {
                out.push((a, b));
            }
        }
    }
    out
}
