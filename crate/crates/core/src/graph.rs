//! Finite digraphs obtained by doubling an undirected edge set.
//!
//! Every undirected edge `{x, y}` becomes the two directed edges `x -> y` and
//! `y -> x`. Directed edges are numbered by ascending `(source, target)`, and
//! neighbor lists are kept in ascending vertex order; scattering matrices are
//! indexed by position in these neighbor lists everywhere downstream.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),
    #[error("edge list is disconnected (set allow_disconnected to accept it)")]
    Disconnected,
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    InvalidVertex { vertex: usize, count: usize },
    #[error("no directed edge {from} -> {to}")]
    InvalidEdge { from: usize, to: usize },
    #[error("edge index {index} out of range (graph has {count} directed edges)")]
    InvalidEdgeIndex { index: usize, count: usize },
    #[error("edge subset is not closed under reversal: {from} -> {to} present without its reverse")]
    NotReversalClosed { from: usize, to: usize },
    #[error("edge subset has {got} flags, graph has {expected} directed edges")]
    SubsetSize { got: usize, expected: usize },
}

/// Directed edge `from -> to`.
///
/// In ket notation the basis vector `|xy>` is the edge arriving at `x` from
/// `y`, i.e. `Edge { from: y, to: x }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn new(from: usize, to: usize) -> Self {
        Self { from, to }
    }

    pub fn reversed(self) -> Self {
        Self { from: self.to, to: self.from }
    }
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Generators for the graphs used in experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Path { k: usize },
    Cycle { k: usize },
    TorusGrid { a: usize, b: usize },
    Complete { k: usize },
    Tree { branching: usize, depth: usize },
    Explicit {
        vertices: usize,
        edges: Vec<[usize; 2]>,
        #[serde(default)]
        allow_disconnected: bool,
    },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Digraph, GraphError> {
        build_graph(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    neighbors: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    reverse: Vec<usize>,
    max_degree: usize,
}

pub fn build_graph(spec: &GraphSpec) -> Result<Digraph, GraphError> {
    let bad = |msg: &str| Err(GraphError::InvalidSpec(msg.to_string()));
    match *spec {
        GraphSpec::Path { k } => {
            if k < 2 {
                return bad("path needs k >= 2");
            }
            Digraph::from_undirected(k, (0..k - 1).map(|i| (i, i + 1)), false)
        }
        GraphSpec::Cycle { k } => {
            if k < 3 {
                return bad("cycle needs k >= 3");
            }
            Digraph::from_undirected(k, (0..k).map(|i| (i, (i + 1) % k)), false)
        }
        GraphSpec::TorusGrid { a, b } => {
            if a < 3 || b < 3 {
                return bad("torus_grid needs a >= 3 and b >= 3");
            }
            let id = |i: usize, j: usize| i * b + j;
            let mut pairs = Vec::with_capacity(2 * a * b);
            for i in 0..a {
                for j in 0..b {
                    pairs.push((id(i, j), id((i + 1) % a, j)));
                    pairs.push((id(i, j), id(i, (j + 1) % b)));
                }
            }
            Digraph::from_undirected(a * b, pairs, false)
        }
        GraphSpec::Complete { k } => {
            if k < 2 {
                return bad("complete needs k >= 2");
            }
            let pairs = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j)));
            Digraph::from_undirected(k, pairs, false)
        }
        GraphSpec::Tree { branching, depth } => {
            if branching < 1 || depth < 1 {
                return bad("tree needs branching >= 1 and depth >= 1");
            }
            // Breadth-first numbering: root 0, children of level l follow level l.
            let mut pairs = Vec::new();
            let mut level = vec![0usize];
            let mut next_id = 1usize;
            for _ in 0..depth {
                let mut next_level = Vec::with_capacity(level.len() * branching);
                for &parent in &level {
                    for _ in 0..branching {
                        pairs.push((parent, next_id));
                        next_level.push(next_id);
                        next_id += 1;
                    }
                }
                level = next_level;
            }
            Digraph::from_undirected(next_id, pairs, false)
        }
        GraphSpec::Explicit { vertices, ref edges, allow_disconnected } => {
            let pairs: Vec<(usize, usize)> = edges.iter().map(|&[x, y]| (x, y)).collect();
            let g = Digraph::from_undirected(vertices, pairs, true)?;
            if !allow_disconnected && !g.is_connected() {
                return Err(GraphError::Disconnected);
            }
            Ok(g)
        }
    }
}

impl Digraph {
    /// Builds the doubled digraph of an undirected edge list.
    ///
    /// With `strict` set, duplicate edges are rejected; generators never
    /// produce them, so they pass `false` and skip the check.
    fn from_undirected<I>(vertex_count: usize, pairs: I, strict: bool) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); vertex_count];
        for (x, y) in pairs {
            for v in [x, y] {
                if v >= vertex_count {
                    return Err(GraphError::InvalidVertex { vertex: v, count: vertex_count });
                }
            }
            if x == y {
                return Err(GraphError::SelfLoop(x));
            }
            let fresh = adjacency[x].insert(y);
            adjacency[y].insert(x);
            if !fresh && strict {
                return Err(GraphError::DuplicateEdge(x.min(y), x.max(y)));
            }
        }
        if let Some(v) = adjacency.iter().position(BTreeSet::is_empty) {
            return Err(GraphError::IsolatedVertex(v));
        }
        let neighbors: Vec<Vec<usize>> =
            adjacency.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut edges = Vec::new();
        for (x, nbrs) in neighbors.iter().enumerate() {
            offsets.push(edges.len());
            edges.extend(nbrs.iter().map(|&y| Edge::new(x, y)));
        }
        offsets.push(edges.len());
        let max_degree = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        let mut g = Digraph { neighbors, offsets, edges, reverse: Vec::new(), max_degree };
        g.reverse = g
            .edges
            .iter()
            .map(|e| g.edge_index(e.reversed()).expect("reversal-closed by construction"))
            .collect();
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Number of directed edges, i.e. the dimension of the walk's Hilbert space.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, x: usize) -> usize {
        self.neighbors[x].len()
    }

    /// Neighbors of `x` in ascending order.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    /// Position of `y` in the neighbor list of `x`.
    pub fn neighbor_position(&self, x: usize, y: usize) -> Option<usize> {
        self.neighbors.get(x)?.binary_search(&y).ok()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> Edge {
        self.edges[index]
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.neighbor_position(e.from, e.to).map(|p| self.offsets[e.from] + p)
    }

    pub fn try_edge_index(&self, e: Edge) -> Result<usize, GraphError> {
        self.edge_index(e).ok_or(GraphError::InvalidEdge { from: e.from, to: e.to })
    }

    /// Index of the reversed edge.
    pub fn reverse_index(&self, index: usize) -> usize {
        self.reverse[index]
    }

    /// Indices of the edges leaving `x`, in neighbor order.
    pub fn outgoing(&self, x: usize) -> std::ops::Range<usize> {
        self.offsets[x]..self.offsets[x + 1]
    }

    /// Indices of the edges arriving at `x`, in neighbor order.
    pub fn incoming(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.outgoing(x).map(move |i| self.reverse[i])
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex { vertex: v, count: self.vertex_count() })
        }
    }

    /// Breadth-first distances from `source`; `None` marks unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Result<Vec<Option<usize>>, GraphError> {
        self.check_vertex(source)?;
        let mut dist = vec![None; self.vertex_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].expect("queued vertices have a distance");
            for &w in &self.neighbors[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Graph distance; `None` when `y` is not reachable from `x`.
    pub fn distance(&self, x: usize, y: usize) -> Result<Option<usize>, GraphError> {
        self.check_vertex(y)?;
        Ok(self.distances_from(x)?[y])
    }

    /// Maximal graph distance over the four endpoint pairs of two edges.
    ///
    /// Note `edge_distance(e, e) == 1` for any edge, since the endpoints of
    /// `e` are adjacent.
    pub fn edge_distance(&self, e: Edge, f: Edge) -> Result<Option<usize>, GraphError> {
        self.try_edge_index(e)?;
        self.try_edge_index(f)?;
        let mut worst = Some(0usize);
        for a in [e.from, e.to] {
            let dist = self.distances_from(a)?;
            for b in [f.from, f.to] {
                worst = match (worst, dist[b]) {
                    (Some(w), Some(d)) => Some(w.max(d)),
                    _ => None,
                };
            }
        }
        Ok(worst)
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0
            || self
                .distances_from(0)
                .map(|d| d.iter().all(Option::is_some))
                .unwrap_or(false)
    }

    /// Largest finite distance between two vertices.
    pub fn diameter(&self) -> usize {
        (0..self.vertex_count())
            .filter_map(|v| self.distances_from(v).ok())
            .flat_map(|d| d.into_iter().flatten())
            .max()
            .unwrap_or(0)
    }

    /// Vertices at distance at most `radius` from the root, ascending.
    pub fn ball_vertices(&self, ball: BallSpec) -> Result<Vec<usize>, GraphError> {
        let dist = self.distances_from(ball.root)?;
        Ok((0..self.vertex_count())
            .filter(|&v| matches!(dist[v], Some(d) if d <= ball.radius))
            .collect())
    }

    /// Vertices at distance exactly `radius` from the root, ascending.
    pub fn sphere_vertices(&self, ball: BallSpec) -> Result<Vec<usize>, GraphError> {
        let dist = self.distances_from(ball.root)?;
        Ok((0..self.vertex_count())
            .filter(|&v| dist[v] == Some(ball.radius))
            .collect())
    }

    /// Directed edges with both endpoints within distance `radius` of `center`.
    ///
    /// For a ball around a root this is the edge set spanning the subspace
    /// left invariant by the walk with reflecting sphere.
    pub fn edge_ball(&self, center: usize, radius: usize) -> Result<ConsistentSubset, GraphError> {
        let dist = self.distances_from(center)?;
        let inside = |v: usize| matches!(dist[v], Some(d) if d <= radius);
        let members = self.edges.iter().map(|e| inside(e.from) && inside(e.to)).collect();
        Ok(ConsistentSubset { members })
    }
}

/// Root and radius of a vertex ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallSpec {
    pub root: usize,
    pub radius: usize,
}

impl BallSpec {
    pub fn new(root: usize, radius: usize) -> Self {
        Self { root, radius }
    }
}

/// Upper bound `d (d-1)^(n-1)` on the size of a sphere of radius `n >= 1`.
pub fn sphere_size_bound(max_degree: usize, radius: usize) -> f64 {
    if radius == 0 {
        return 1.0;
    }
    let d = max_degree as f64;
    d * (d - 1.0).powi(radius as i32 - 1)
}

/// A reversal-closed set of directed edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistentSubset {
    members: Vec<bool>,
}

impl ConsistentSubset {
    pub fn from_flags(g: &Digraph, members: Vec<bool>) -> Result<Self, GraphError> {
        if members.len() != g.edge_count() {
            return Err(GraphError::SubsetSize { got: members.len(), expected: g.edge_count() });
        }
        for (i, &m) in members.iter().enumerate() {
            if m && !members[g.reverse_index(i)] {
                let e = g.edge(i);
                return Err(GraphError::NotReversalClosed { from: e.from, to: e.to });
            }
        }
        Ok(Self { members })
    }

    pub fn from_indices<I>(g: &Digraph, indices: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut members = vec![false; g.edge_count()];
        for i in indices {
            if i >= members.len() {
                return Err(GraphError::InvalidEdgeIndex { index: i, count: members.len() });
            }
            members[i] = true;
        }
        Self::from_flags(g, members)
    }

    pub fn full(g: &Digraph) -> Self {
        Self { members: vec![true; g.edge_count()] }
    }

    pub fn empty(g: &Digraph) -> Self {
        Self { members: vec![false; g.edge_count()] }
    }

    pub fn complement(&self) -> Self {
        Self { members: self.members.iter().map(|m| !m).collect() }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.get(index).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total number of directed edges of the ambient graph.
    pub fn universe_len(&self) -> usize {
        self.members.len()
    }

    pub fn flags(&self) -> &[bool] {
        &self.members
    }

    /// Member edge indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.members.len() == other.members.len()
            && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    /// Vertices carrying at least one member edge and at least one non-member
    /// edge; the walk restricted to the subset reflects at these vertices.
    pub fn boundary_vertices(&self, g: &Digraph) -> Vec<usize> {
        (0..g.vertex_count())
            .filter(|&x| {
                let mut inside = false;
                let mut outside = false;
                for i in g.incoming(x) {
                    if self.members[i] {
                        inside = true;
                    } else {
                        outside = true;
                    }
                }
                inside && outside
            })
            .collect()
    }

    /// Vertices incident to at least one member edge.
    pub fn incident_vertices(&self, g: &Digraph) -> Vec<usize> {
        let mut seen = vec![false; g.vertex_count()];
        for i in self.indices() {
            let e = g.edge(i);
            seen[e.from] = true;
            seen[e.to] = true;
        }
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(v, _)| v).collect()
    }
}
