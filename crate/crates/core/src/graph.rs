//! Simple undirected graphs with sorted adjacency lists.
//!
//! Vertices are `0..n`. Adjacency lists are kept sorted by neighbor id; the
//! simulator's port numbering is exactly this order, so a deterministic
//! adjacency order is load-bearing, not cosmetic.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use crate::rational::Eps;
use crate::tree::TreePattern;

pub type VertexId = u32;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge ({u}, {v}) is out of range for n = {n}")]
    OutOfRange { u: VertexId, v: VertexId, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),
    #[error("io: {0}")]
    Io(String),
}

/// Undirected graph, no self-loops, no parallel edges.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    m: usize,
    adj: Vec<Vec<VertexId>>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges may come in any order and
    /// either orientation; loops and duplicates are rejected.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Graph, GraphError> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::OutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { n, m: seen.len(), adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    /// Neighbors of `v`, sorted ascending. Port `p` of `v` is `neighbors(v)[p]`.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v as usize]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n as VertexId {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Component label per vertex plus the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            queue.push(s as VertexId);
            while let Some(v) = queue.pop() {
                for &w in self.neighbors(v) {
                    if label[w as usize] == usize::MAX {
                        label[w as usize] = count;
                        queue.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    // ---- edge-list format ------------------------------------------------
    //
    // Header line "n m", then one "u v" line per edge.

    pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
        fn int_pair(line: &str, lineno: usize) -> Result<(usize, usize), GraphError> {
            let bad = |msg: String| GraphError::Parse { line: lineno, msg };
            let mut parts = line.split_whitespace();
            let next = |parts: &mut std::str::SplitWhitespace| -> Result<usize, GraphError> {
                parts
                    .next()
                    .ok_or_else(|| bad(format!("expected two integers in {line:?}")))?
                    .parse()
                    .map_err(|_| bad(format!("bad integer in {line:?}")))
            };
            let a = next(&mut parts)?;
            let b = next(&mut parts)?;
            if parts.next().is_some() {
                return Err(bad(format!("trailing tokens in {line:?}")));
            }
            Ok((a, b))
        }

        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| GraphError::Parse { line: 1, msg: "empty input".into() })?;
        let (n, m) = int_pair(header, 1)?;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (u, v) = int_pair(line, idx + 1)?;
            edges.push((u as VertexId, v as VertexId));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, &edges)
    }

    pub fn load(path: &Path) -> Result<Graph, GraphError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{path:?}: {e}")))?;
        Graph::parse_edge_list(&text)
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    // ---- builders ----------------------------------------------------------

    pub fn path(k: usize) -> Graph {
        let edges: Vec<_> = (1..k as VertexId).map(|v| (v - 1, v)).collect();
        Graph::from_edges(k, &edges).unwrap()
    }

    pub fn cycle(k: usize) -> Graph {
        assert!(k >= 3, "cycle needs at least 3 vertices");
        let mut edges: Vec<_> = (1..k as VertexId).map(|v| (v - 1, v)).collect();
        edges.push((k as VertexId - 1, 0));
        Graph::from_edges(k, &edges).unwrap()
    }

    /// Star with the center at vertex 0.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves as VertexId).map(|v| (0, v)).collect();
        Graph::from_edges(leaves + 1, &edges).unwrap()
    }

    pub fn complete(k: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..k as VertexId {
            for v in u + 1..k as VertexId {
                edges.push((u, v));
            }
        }
        Graph::from_edges(k, &edges).unwrap()
    }

    /// Named patterns accepted on the command line and in tests.
    pub fn named(alias: &str) -> Option<Graph> {
        let g = match alias {
            "edge" | "k2" => Graph::path(2),
            "p3" => Graph::path(3),
            "p4" => Graph::path(4),
            "triangle" | "k3" => Graph::complete(3),
            "c4" => Graph::cycle(4),
            "k4" => Graph::complete(4),
            "k13" => Graph::star(3),
            // Triangle 0-1-2 with a pendant vertex 3 attached at 0.
            "paw" => Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (0, 3)]).unwrap(),
            // K4 minus the (2, 3) edge.
            "diamond" => {
                Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap()
            }
            _ => return None,
        };
        Some(g)
    }

    /// Disjoint union; vertex ids of the i-th copy are shifted by the total
    /// size of the copies before it.
    pub fn disjoint_union(parts: &[&Graph]) -> Graph {
        let n: usize = parts.iter().map(|g| g.n).sum();
        let mut edges = Vec::new();
        let mut base = 0 as VertexId;
        for g in parts {
            for (u, v) in g.edges() {
                edges.push((base + u, base + v));
            }
            base += g.n as VertexId;
        }
        Graph::from_edges(n, &edges).unwrap()
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.m)
    }
}

/// Graph properties the testers in this crate understand.
///
/// All of them are edge-monotone: removing edges never destroys membership.
#[derive(Clone, Debug)]
pub enum Property {
    TriangleFree,
    C4Free,
    /// No copy of `h` as a subgraph; `h` must be connected with 2..=4 vertices.
    HFree(Graph),
    Bipartite,
    CycleFree,
    /// No copy of the tree pattern as a subgraph.
    TreeFree(TreePattern),
}

impl Property {
    pub fn h_free(h: Graph) -> Result<Property, GraphError> {
        let (_, comps) = h.components();
        if h.n() < 2 || h.n() > 4 || comps != 1 {
            return Err(GraphError::Parse {
                line: 0,
                msg: format!("forbidden subgraph must be connected with 2..=4 vertices, got {h:?}"),
            });
        }
        Ok(Property::HFree(h))
    }

    pub fn label(&self) -> String {
        match self {
            Property::TriangleFree => "triangle-free".into(),
            Property::C4Free => "c4-free".into(),
            Property::HFree(h) => format!("h-free-{}v{}e", h.n(), h.m()),
            Property::Bipartite => "bipartite".into(),
            Property::CycleFree => "cycle-free".into(),
            Property::TreeFree(t) => format!("tree-free-k{}", t.k()),
        }
    }
}

/// A machine-checked farness witness attached to generated instances.
///
/// `distance` is the exact minimum number of edge edits to reach the
/// property, and `epsilon = distance / m`, so the instance is epsilon-far.
#[derive(Clone, Debug)]
pub struct FarnessCertificate {
    pub property: Property,
    pub epsilon: Eps,
    pub distance: u64,
    pub m: u64,
}

impl FarnessCertificate {
    /// Key/value text block written next to generated graphs.
    pub fn to_text(&self) -> String {
        format!(
            "{{\"property\": \"{}\", \"epsilon\": \"{}\", \"distance\": {}, \"m\": {}}}\n",
            self.property.label(),
            self.epsilon,
            self.distance,
            self.m
        )
    }
}
