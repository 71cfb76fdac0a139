//! Candidate families for topology calibration, enumerated up to graph
//! isomorphism.

use std::collections::{HashMap, HashSet};

use petgraph::algo::{is_isomorphic, is_isomorphic_matching};
use petgraph::graph::UnGraph;

use super::{make_pentagon, Circuit, Graph};
use crate::Result;

/// Default search bounds: desk-scale circuits.
pub const MAX_SITES: usize = 8;
pub const MAX_EDGES: usize = 14;

/// Site bound for the triangular-lattice funnel family.
pub const TRIANGLE_MAX_SITES: usize = 7;

fn to_petgraph(g: &Graph, marks: &[u8]) -> UnGraph<u8, ()> {
    let mut pg = UnGraph::with_capacity(g.n(), g.edge_count());
    let nodes: Vec<_> = (0..g.n()).map(|i| pg.add_node(marks.get(i).copied().unwrap_or(0))).collect();
    for &(i, j) in g.edges() {
        pg.add_edge(nodes[i], nodes[j], ());
    }
    pg
}

/// Isomorphism-invariant fingerprint used to bucket candidates before the
/// exact check: each site's degree together with its neighbours' degrees.
fn fingerprint(g: &Graph) -> (usize, usize, Vec<(usize, Vec<usize>)>) {
    let mut local: Vec<(usize, Vec<usize>)> = (0..g.n())
        .map(|i| {
            let mut nd: Vec<usize> = g.neighbors(i).map(|j| g.degree(j)).collect();
            nd.sort_unstable();
            (g.degree(i), nd)
        })
        .collect();
    local.sort();
    (g.n(), g.edge_count(), local)
}

pub fn graphs_isomorphic(a: &Graph, b: &Graph) -> bool {
    a.n() == b.n()
        && a.edge_count() == b.edge_count()
        && is_isomorphic(&to_petgraph(a, &[]), &to_petgraph(b, &[]))
}

fn terminal_marks(c: &Circuit) -> Vec<u8> {
    let mut marks = vec![0u8; c.n()];
    marks[c.source()] = 1;
    marks[c.sink()] = 2;
    marks
}

/// Isomorphism that also maps source to source and sink to sink.
pub fn circuits_isomorphic(a: &Circuit, b: &Circuit) -> bool {
    a.n() == b.n()
        && a.graph().edge_count() == b.graph().edge_count()
        && is_isomorphic_matching(
            &to_petgraph(a.graph(), &terminal_marks(a)),
            &to_petgraph(b.graph(), &terminal_marks(b)),
            |x, y| x == y,
            |_, _| true,
        )
}

/// Keeps the first representative of each isomorphism class, in input order.
fn dedupe(graphs: impl IntoIterator<Item = Graph>) -> Vec<Graph> {
    let mut buckets: HashMap<_, Vec<usize>> = HashMap::new();
    let mut kept: Vec<Graph> = Vec::new();
    for g in graphs {
        let bucket = buckets.entry(fingerprint(&g)).or_default();
        if bucket.iter().any(|&k| graphs_isomorphic(&kept[k], &g)) {
            continue;
        }
        bucket.push(kept.len());
        kept.push(g);
    }
    kept
}

fn canonical_order(graphs: &mut [Graph]) {
    graphs.sort_by(|a, b| (a.n(), a.edge_count(), a.edges()).cmp(&(b.n(), b.edge_count(), b.edges())));
}

/// Every connected simple graph with at most `max_sites` sites and
/// `max_edges` edges, one per isomorphism class.
///
/// Grown site by site: every connected graph has a site whose removal keeps
/// it connected, so attaching a new site to every non-empty subset of an
/// existing graph reaches all classes, and the edge bound can prune early.
pub fn connected_graphs(max_sites: usize, max_edges: usize) -> Vec<Graph> {
    let mut all = Vec::new();
    if max_sites == 0 {
        return all;
    }
    let mut layer = vec![Graph::new(1, &[]).expect("single site")];
    all.extend(layer.iter().cloned());
    for n in 2..=max_sites {
        let prev = n - 1;
        let mut grown = Vec::new();
        for g in &layer {
            for mask in 1u32..(1 << prev) {
                let extra = mask.count_ones() as usize;
                if g.edge_count() + extra > max_edges {
                    continue;
                }
                let mut edges = g.edges().to_vec();
                edges.extend((0..prev).filter(|i| mask & (1 << i) != 0).map(|i| (i, prev)));
                grown.push(Graph::new(n, &edges).expect("attaching a site keeps the graph connected"));
            }
        }
        layer = dedupe(grown);
        all.extend(layer.iter().cloned());
    }
    canonical_order(&mut all);
    all
}

const TRI_STEPS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

fn normalize(cells: &mut [(i32, i32)]) {
    let min_a = cells.iter().map(|c| c.0).min().unwrap_or(0);
    let min_b = cells.iter().map(|c| c.1).min().unwrap_or(0);
    for c in cells.iter_mut() {
        *c = (c.0 - min_a, c.1 - min_b);
    }
    cells.sort_unstable();
}

fn induced_graph(cells: &[(i32, i32)]) -> Graph {
    let mut edges = Vec::new();
    for (i, a) in cells.iter().enumerate() {
        for (j, b) in cells.iter().enumerate().skip(i + 1) {
            if TRI_STEPS.contains(&(b.0 - a.0, b.1 - a.1)) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(cells.len(), &edges).expect("lattice animals are connected")
}

/// Connected site sets of the triangular lattice with at most `max_sites`
/// sites, as induced subgraphs (nearest-neighbour bonds), one per graph
/// isomorphism class.
pub fn triangular_lattice_graphs(max_sites: usize) -> Vec<Graph> {
    let mut all = Vec::new();
    if max_sites == 0 {
        return all;
    }
    let mut layer: Vec<Vec<(i32, i32)>> = vec![vec![(0, 0)]];
    all.push(induced_graph(&layer[0]));
    for _ in 2..=max_sites {
        let mut seen: HashSet<Vec<(i32, i32)>> = HashSet::new();
        let mut next = Vec::new();
        for cells in &layer {
            for &(a, b) in cells {
                for (da, db) in TRI_STEPS {
                    let cell = (a + da, b + db);
                    if cells.contains(&cell) {
                        continue;
                    }
                    let mut grown = cells.clone();
                    grown.push(cell);
                    normalize(&mut grown);
                    if seen.insert(grown.clone()) {
                        next.push(grown);
                    }
                }
            }
        }
        next.sort();
        all.extend(dedupe(next.iter().map(|c| induced_graph(c))));
        layer = next;
    }
    let mut all = dedupe(all);
    canonical_order(&mut all);
    all
}

/// Ordered source/sink pairs of `g`, one per orbit of the graph's
/// automorphisms.
pub fn terminal_placements(g: &Graph) -> Result<Vec<Circuit>> {
    let mut kept: Vec<Circuit> = Vec::new();
    for s in 0..g.n() {
        for k in 0..g.n() {
            if s == k {
                continue;
            }
            let c = Circuit::new(g.clone(), s, k)?;
            if !kept.iter().any(|o| circuits_isomorphic(o, &c)) {
                kept.push(c);
            }
        }
    }
    Ok(kept)
}

/// The four sink placements on the 5-cycle. Every one of them lacks a
/// steady state at Δ = 0, so order breaks the tie: sinks two sites from
/// the source (the meta-like port) come first.
pub fn pentagon_family() -> Result<Vec<Circuit>> {
    [2, 3, 1, 4].into_iter().map(make_pentagon).collect()
}

/// Proper single-edge extensions of `c`, one per automorphism orbit of
/// the circuit (terminals fixed).
pub fn single_edge_extensions(c: &Circuit) -> Result<Vec<Circuit>> {
    let mut kept: Vec<Circuit> = Vec::new();
    for (i, j) in c.graph().non_edges() {
        let ext = Circuit::new(c.graph().with_edge(i, j)?, c.source(), c.sink())?;
        if !kept.iter().any(|o| circuits_isomorphic(o, &ext)) {
            kept.push(ext);
        }
    }
    Ok(kept)
}
