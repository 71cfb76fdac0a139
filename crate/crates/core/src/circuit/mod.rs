//! Graphs, terminals and the Laplacian tight-binding Hamiltonian.
//!
//! Every edge is a unit hopping amplitude, so the Hamiltonian of a graph is
//! its Laplacian `D - A`. Sites are indexed from 0.

pub mod calibrate;
pub mod enumerate;
pub mod file;
pub mod registry;

use std::collections::VecDeque;
use std::fmt;

use crate::{CMatrix, Error, Result, C64};

/// Undirected simple graph with unit edge weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    /// Sorted, each pair stored with `i < j`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<bool>,
}

impl Graph {
    /// Builds a connected graph from unordered site pairs.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = vec![false; n * n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for site in [a, b] {
                if site >= n {
                    return Err(Error::EndpointOutOfRange { site, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if adjacency[i * n + j] {
                return Err(Error::DuplicateEdge(i, j));
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
            normalized.push((i, j));
        }
        normalized.sort_unstable();
        let graph = Graph {
            n,
            edges: normalized,
            adjacency,
        };
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adjacency[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    /// Adjacency matrix as 0/1 entries.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.has_edge(i, j) as u8).collect())
            .collect()
    }

    /// Copy of this graph with one more edge.
    pub fn with_edge(&self, i: usize, j: usize) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.push((i, j));
        Graph::new(self.n, &edges)
    }

    /// Vertex pairs not joined by an edge, in lexicographic order.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }
}

/// `build_graph` under its operational name.
pub fn build_graph(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
    Graph::new(n, edges)
}

/// Complex matrix checked to be Hermitian on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        let dev = hermiticity_deviation(&m);
        if dev > Self::TOLERANCE {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermitianMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `H = D - A`.
pub fn laplacian_hamiltonian(g: &Graph) -> HermitianMatrix {
    let n = g.n();
    let mut h = CMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        h[(i, j)] = C64::new(-1.0, 0.0);
        h[(j, i)] = C64::new(-1.0, 0.0);
        h[(i, i)] += 1.0;
        h[(j, j)] += 1.0;
    }
    HermitianMatrix(h)
}

/// Which way current is driven through an asymmetric device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A graph with designated source (injection) and sink (ejection) sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    graph: Graph,
    source: usize,
    sink: usize,
    label: Option<String>,
}

impl Circuit {
    pub fn new(graph: Graph, source: usize, sink: usize) -> Result<Self> {
        let n = graph.n();
        if source >= n || sink >= n {
            return Err(Error::InvalidTerminal(format!(
                "source {source} / sink {sink} out of range for {n} sites"
            )));
        }
        if source == sink && n > 1 {
            return Err(Error::InvalidTerminal(format!(
                "source and sink coincide at site {source}"
            )));
        }
        Ok(Circuit {
            graph,
            source,
            sink,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Label, or a description derived from the structure.
    pub fn display_label(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!(
                "n{}e{}s{}k{}",
                self.n(),
                self.graph.edge_count(),
                self.source,
                self.sink
            ),
        }
    }

    pub fn hamiltonian(&self) -> HermitianMatrix {
        laplacian_hamiltonian(&self.graph)
    }
}

/// Same graph with source and sink exchanged. The label is kept.
pub fn reverse_circuit(c: &Circuit) -> Circuit {
    Circuit {
        graph: c.graph.clone(),
        source: c.sink,
        sink: c.source,
        label: c.label.clone(),
    }
}

/// Path graph; source is the first site, sink the last.
pub fn make_wire(length: usize) -> Result<Circuit> {
    if length == 0 {
        return Err(Error::InvalidArgument("wire length must be >= 1".into()));
    }
    let edges: Vec<_> = (1..length).map(|i| (i - 1, i)).collect();
    let graph = Graph::new(length, &edges)?;
    Ok(Circuit::new(graph, 0, length - 1)?.with_label(format!("wire{length}")))
}

/// Default interior length of each parallel branch.
pub const DEFAULT_BRANCH_LENGTH: usize = 1;

/// Source (site 0) and sink (site 1) joined by `branches` disjoint paths,
/// each with `branch_length` interior sites.
pub fn make_parallel_circuit(branches: usize, branch_length: usize) -> Result<Circuit> {
    if branches == 0 || branch_length == 0 {
        return Err(Error::InvalidArgument(
            "parallel circuit needs at least one branch of at least one site".into(),
        ));
    }
    let n = 2 + branches * branch_length;
    let mut edges = Vec::with_capacity(branches * (branch_length + 1));
    for b in 0..branches {
        let mut prev = 0;
        for i in 0..branch_length {
            let site = 2 + b * branch_length + i;
            edges.push((prev, site));
            prev = site;
        }
        edges.push((prev, 1));
    }
    let graph = Graph::new(n, &edges)?;
    Ok(Circuit::new(graph, 0, 1)?.with_label(format!("parallel-m{branches}-l{branch_length}")))
}

/// Sink position of the canonical pentagon (two sites from the source).
pub const PENTAGON_SINK: usize = 2;

/// 5-cycle with the source at site 0.
pub fn make_pentagon(sink_site: usize) -> Result<Circuit> {
    if !(1..5).contains(&sink_site) {
        return Err(Error::InvalidTerminal(format!(
            "pentagon sink must be in 1..=4, got {sink_site}"
        )));
    }
    let edges: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
    let graph = Graph::new(5, &edges)?;
    Ok(Circuit::new(graph, 0, sink_site)?.with_label(format!("pentagon-k{sink_site}")))
}

/// Calibrated additivity pair `(A, B)`; B is A plus one edge.
pub fn make_additivity_pair() -> Result<(Circuit, Circuit)> {
    let a = registry::calibrated("additivity-a")?;
    let b = registry::calibrated("additivity-b")?;
    Ok((a, b))
}

/// Calibrated triangular funnel in the requested current direction.
pub fn make_triangle_funnel(direction: Direction) -> Result<Circuit> {
    let forward = registry::calibrated("triangle")?;
    Ok(match direction {
        Direction::Forward => forward,
        Direction::Reverse => reverse_circuit(&forward),
    })
}
