//! Seeded instance generators for experiments and fixtures.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::graph::{Graph, GraphError, VertexId};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("bad generator spec {spec:?}: {msg}")]
    Spec { spec: String, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Decodes a flat index in `[0, n*(n-1)/2)` to the pair `(u, v)`, `u < v`,
/// where row `u` holds the pairs `(u, u+1), ..., (u, n-1)`.
fn decode_pair(n: usize, k: usize) -> (VertexId, VertexId) {
    let row_start = |u: usize| u * n - u * (u + 1) / 2;
    let (mut lo, mut hi) = (0usize, n - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if row_start(mid) <= k {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let u = lo;
    let v = u + 1 + (k - row_start(u));
    (u as VertexId, v as VertexId)
}

/// Uniform simple graph with exactly `m` edges on `n` vertices.
pub fn gnm(n: usize, m: usize, rng: &mut impl Rng) -> Result<Graph, GenError> {
    let pairs = n * n.saturating_sub(1) / 2;
    if m > pairs {
        return Err(GenError::Spec {
            spec: format!("gnm:{n}:{m}"),
            msg: format!("at most {pairs} edges fit"),
        });
    }
    let edges: Vec<(VertexId, VertexId)> =
        sample_indices(rng, pairs, m).into_iter().map(|k| decode_pair(n, k)).collect();
    Ok(Graph::from_edges(n, &edges)?)
}

/// Random bipartite graph: sides `0..n/2` and `n/2..n`, with up to `2n`
/// distinct cross edges.
pub fn random_bipartite(n: usize, rng: &mut impl Rng) -> Result<Graph, GenError> {
    let left = n / 2;
    let right = n - left;
    let pairs = left * right;
    let m = (2 * n).min(pairs);
    let edges: Vec<(VertexId, VertexId)> = sample_indices(rng, pairs, m)
        .into_iter()
        .map(|k| ((k / right) as VertexId, (left + k % right) as VertexId))
        .collect();
    Ok(Graph::from_edges(n, &edges)?)
}

/// Random recursive forest: each vertex after the first attaches to a uniform
/// earlier vertex with probability 9/10, otherwise starts a new component.
pub fn random_forest(n: usize, rng: &mut impl Rng) -> Result<Graph, GenError> {
    let mut edges = Vec::new();
    for v in 1..n {
        if rng.gen_range(0..10) < 9 {
            let parent = rng.gen_range(0..v);
            edges.push((parent as VertexId, v as VertexId));
        }
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// Random graph of girth at least 5: candidate pairs are tried in random
/// order and an edge joins `u, v` only while their distance exceeds 3.
pub fn girth5(n: usize, rng: &mut impl Rng) -> Result<Graph, GenError> {
    let pairs = n * n.saturating_sub(1) / 2;
    let mut order: Vec<usize> = (0..pairs).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    let target = 3 * n / 2;
    for k in order {
        if edges.len() >= target {
            break;
        }
        let (u, v) = decode_pair(n, k);
        if bfs_dist_within(&adj, u, v, 3) {
            continue;
        }
        adj[u as usize].push(v);
        adj[v as usize].push(u);
        edges.push((u, v));
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// True iff `dist(u, v) <= limit` in the adjacency lists.
fn bfs_dist_within(adj: &[Vec<VertexId>], u: VertexId, v: VertexId, limit: usize) -> bool {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[u as usize] = 0;
    let mut queue = std::collections::VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        if dist[x as usize] == limit {
            continue;
        }
        for &y in &adj[x as usize] {
            if dist[y as usize] == usize::MAX {
                dist[y as usize] = dist[x as usize] + 1;
                if y == v {
                    return true;
                }
                queue.push_back(y);
            }
        }
    }
    false
}

/// Graph on `n` vertices with every component smaller than `k`, hence free of
/// every tree on `k` vertices. Components are stars of `k - 1` vertices.
pub fn small_components(k: usize, n: usize) -> Result<Graph, GenError> {
    if k < 2 {
        return Err(GenError::Spec {
            spec: format!("treefree:{k}:{n}"),
            msg: "component bound needs k >= 2".into(),
        });
    }
    let chunk = k - 1;
    let mut edges = Vec::new();
    let mut base = 0;
    while base < n {
        let size = chunk.min(n - base);
        for i in 1..size {
            edges.push((base as VertexId, (base + i) as VertexId));
        }
        base += size;
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// `copies` disjoint copies of the named pattern.
pub fn disjoint_copies(pattern: &str, copies: usize) -> Result<Graph, GenError> {
    let p = Graph::named(pattern).ok_or_else(|| GenError::Spec {
        spec: format!("disjoint:{pattern}:{copies}"),
        msg: "unknown pattern name".into(),
    })?;
    let refs: Vec<&Graph> = std::iter::repeat_n(&p, copies).collect();
    Ok(Graph::disjoint_union(&refs))
}

/// Parses a generator spec and builds the instance.
///
/// Specs: `disjoint:<pattern>:<copies>`, `gnm:<n>:<m>`, `bipartite:<n>`,
/// `forest:<n>`, `girth5:<n>`, `treefree:<k>:<n>`.
pub fn from_spec(spec: &str, seed: u64) -> Result<Graph, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: &str| GenError::Spec { spec: spec.to_string(), msg: msg.to_string() };
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad number {s:?}")));
    match parts.as_slice() {
        ["disjoint", pattern, copies] => disjoint_copies(pattern, num(copies)?),
        ["gnm", n, m] => gnm(num(n)?, num(m)?, &mut rng),
        ["bipartite", n] => random_bipartite(num(n)?, &mut rng),
        ["forest", n] => random_forest(num(n)?, &mut rng),
        ["girth5", n] => girth5(num(n)?, &mut rng),
        ["treefree", k, n] => small_components(num(k)?, num(n)?),
        _ => Err(bad("unknown generator")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn gnm_hits_requested_size_and_is_deterministic() {
        let a = gnm(40, 120, &mut rng(7)).unwrap();
        let b = gnm(40, 120, &mut rng(7)).unwrap();
        let c = gnm(40, 120, &mut rng(8)).unwrap();
        assert_eq!(a.n(), 40);
        assert_eq!(a.m(), 120);
        assert_eq!(a.edges(), b.edges());
        assert_ne!(a.edges(), c.edges());
        assert!(gnm(4, 7, &mut rng(0)).is_err());
    }

    #[test]
    fn pair_decoding_is_a_bijection() {
        let n = 9;
        let mut seen = std::collections::BTreeSet::new();
        for k in 0..n * (n - 1) / 2 {
            let (u, v) = decode_pair(n, k);
            assert!(u < v && (v as usize) < n);
            assert!(seen.insert((u, v)));
        }
        assert_eq!(seen.len(), 36);
    }

    #[test]
    fn bipartite_generator_is_bipartite() {
        for seed in 0..5 {
            let g = random_bipartite(31, &mut rng(seed)).unwrap();
            assert!(oracle::is_bipartite(&g));
            assert!(g.m() > 0);
        }
    }

    #[test]
    fn forest_generator_is_acyclic() {
        for seed in 0..5 {
            let g = random_forest(50, &mut rng(seed)).unwrap();
            assert!(oracle::is_forest(g.n(), &g.edges()));
        }
    }

    #[test]
    fn girth5_generator_avoids_short_cycles() {
        for seed in 0..3 {
            let g = girth5(30, &mut rng(seed)).unwrap();
            assert_eq!(oracle::count_subgraph_copies(&g, &Graph::complete(3)).unwrap(), 0);
            assert_eq!(oracle::count_subgraph_copies(&g, &Graph::cycle(4)).unwrap(), 0);
            assert!(g.m() >= g.n() / 2, "generator should not be trivially sparse");
        }
    }

    #[test]
    fn small_components_never_reach_k_vertices() {
        let g = small_components(4, 20).unwrap();
        let (label, count) = g.components();
        let mut sizes = vec![0usize; count];
        for v in 0..g.n() {
            sizes[label[v]] += 1;
        }
        assert!(sizes.iter().all(|&s| s < 4));
        assert_eq!(sizes.iter().sum::<usize>(), 20);
    }

    #[test]
    fn spec_strings_dispatch() {
        let g = from_spec("disjoint:triangle:30", 0).unwrap();
        assert_eq!((g.n(), g.m()), (90, 90));
        assert!(from_spec("gnm:10:200", 0).is_err());
        assert!(from_spec("nonsense:1", 0).is_err());
        assert_eq!(from_spec("gnm:12:20", 3).unwrap().edges(), from_spec("gnm:12:20", 3).unwrap().edges());
    }
}
