//! The approximating quantum graphs `F_n` and their discretized Laplacians.
//!
//! `F_n` is built from the unit interval by repeating, for `i = 1..=n`:
//! subdivide every edge into `j_i` equal pieces, duplicate the whole graph,
//! and glue the two copies together at the vertices created by the
//! subdivision. Vertices that existed before the step are not glued.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::sequence::JSequence;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
}

impl MetricGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// `degree -> number of vertices`, sorted by degree.
    pub fn degree_histogram(&self) -> Vec<(usize, usize)> {
        let mut hist = std::collections::BTreeMap::new();
        for d in self.degrees() {
            *hist.entry(d).or_insert(0) += 1;
        }
        hist.into_iter().collect()
    }

    /// Neighbour lists with multiplicity (parallel edges appear twice).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.vertex_count
    }

    /// Edge-list text: a `"<V> vertices <E> edges"` header, then `u v length`
    /// per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} vertices {} edges\n", self.vertex_count, self.edges.len());
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.u, e.v, e.length).unwrap();
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<MetricGraph> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let (vertex_count, edge_count) = match h.as_slice() {
            [v, "vertices", e, "edges"] => (
                v.parse().map_err(|_| Error::Parse(format!("bad vertex count {v:?}")))?,
                e.parse::<usize>().map_err(|_| Error::Parse(format!("bad edge count {e:?}")))?,
            ),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        let mut edges = Vec::with_capacity(edge_count);
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("bad edge line {}: {line:?}", i + 2));
            if f.len() != 3 {
                return Err(bad());
            }
            let u: usize = f[0].parse().map_err(|_| bad())?;
            let v: usize = f[1].parse().map_err(|_| bad())?;
            let length: f64 = f[2].parse().map_err(|_| bad())?;
            if u >= vertex_count || v >= vertex_count || !(length > 0.0) {
                return Err(bad());
            }
            edges.push(Edge { u, v, length });
        }
        if edges.len() != edge_count {
            return Err(Error::Parse(format!("header says {edge_count} edges, found {}", edges.len())));
        }
        Ok(MetricGraph { vertex_count, edges })
    }
}

/// `F_n` plus the level at which each vertex was created (0 for the two
/// endpoints of the unit interval).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub graph: MetricGraph,
    pub birth_level: Vec<usize>,
}

pub fn build_graph(seq: &JSequence, n: usize) -> Result<MetricGraph> {
    Ok(build_graph_labeled(seq, n)?.graph)
}

pub fn build_graph_labeled(seq: &JSequence, n: usize) -> Result<LabeledGraph> {
    seq.check_level(n)?;
    let cells = seq.scale(n)? << n;
    if cells.to_usize().is_none_or(|c| c > 50_000_000) {
        return Err(Error::validation(format!("F_{n} has {cells} edges, too many to build")));
    }
    let mut birth = vec![0usize, 0];
    let mut edges: Vec<(usize, usize)> = vec![(0, 1)];
    for level in 1..=n {
        let j = seq.j_unchecked(level) as usize;
        let old = birth.len();
        // Copy 0 keeps the old ids, copy 1 gets old + id. The shared
        // subdivision vertices come after both copies.
        let shared_base = 2 * old;
        birth.extend_from_within(..old);
        birth.extend(std::iter::repeat_n(level, edges.len() * (j - 1)));
        let mut next = Vec::with_capacity(edges.len() * j * 2);
        for copy in 0..2 {
            let offset = copy * old;
            for (e, &(u, v)) in edges.iter().enumerate() {
                let inner = |i: usize| shared_base + e * (j - 1) + (i - 1);
                let mut prev = u + offset;
                for i in 1..j {
                    next.push((prev, inner(i)));
                    prev = inner(i);
                }
                next.push((prev, v + offset));
            }
        }
        edges = next;
    }
    let length = 1.0 / seq.scale(n)?.to_f64().unwrap();
    let graph = MetricGraph {
        vertex_count: birth.len(),
        edges: edges.into_iter().map(|(u, v)| Edge { u, v, length }).collect(),
    };
    Ok(LabeledGraph { graph, birth_level: birth })
}

/// Shape counts of the newest level, read off the graph itself.
///
/// * V: two pendant edges at a common vertex; a vertex carrying `2q`
///   pendant edges holds `q` of them.
/// * loop: two vertices joined by a pair of parallel edges.
/// * cross: two degree-four vertices with identical neighbourhoods that
///   both existed before the newest level (they are the two copies of an
///   older branch point).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectedCensus {
    pub v_count: u64,
    pub loop_count: u64,
    pub cross_count: u64,
}

pub fn inspect_shapes(labeled: &LabeledGraph, n: usize) -> InspectedCensus {
    let g = &labeled.graph;
    let adj = g.adjacency();

    let mut pair_edges: HashMap<(usize, usize), u64> = HashMap::new();
    for e in &g.edges {
        *pair_edges.entry((e.u.min(e.v), e.u.max(e.v))).or_default() += 1;
    }
    let loop_count = pair_edges.values().filter(|&&c| c == 2).count() as u64;

    let mut by_neighbourhood: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (x, nb) in adj.iter().enumerate() {
        let mut key = nb.clone();
        key.sort_unstable();
        by_neighbourhood.entry(key).or_default().push(x);
    }
    let pairs = |group: &[usize]| {
        let k = group.len() as u64;
        k * k.saturating_sub(1) / 2
    };
    let mut v_count = 0;
    let mut cross_count = 0;
    for (nb, group) in &by_neighbourhood {
        match nb.len() {
            1 => v_count += group.len() as u64 / 2,
            4 => {
                let old: Vec<usize> = group.iter().copied().filter(|&x| labeled.birth_level[x] < n).collect();
                cross_count += pairs(&old);
            }
            _ => {}
        }
    }
    InspectedCensus { v_count, loop_count, cross_count }
}

/// A discretized graph Laplacian.
///
/// Unknowns are the graph vertices (ids `0..V`) followed by the interior
/// mesh points of each edge in edge order, running from `u` to `v`. With
/// mesh width `h` the lumped masses are `h` for interior points and
/// `d h / 2` for a vertex of degree `d`.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub h: f64,
    pub points_per_edge: usize,
    pub vertex_count: usize,
    /// Stiffness matrix `K` (symmetric, zero row sums).
    pub stiffness: CsrMatrix,
    /// Diagonal of the lumped mass matrix `M`.
    pub mass: Vec<f64>,
    /// `M^{-1/2} K M^{-1/2}`, the symmetric form of `-d²/dx²`.
    pub operator: CsrMatrix,
}

impl Discretization {
    pub fn dimension(&self) -> usize {
        self.mass.len()
    }

    /// Largest eigenvalue worth comparing against the continuum, `(0.1/h)²`.
    pub fn trust_cutoff(&self) -> f64 {
        (0.1 / self.h).powi(2)
    }
}

/// Eigenvalue of the discretization with mesh width `h` that approximates
/// the continuum eigenvalue `lambda`: `(4/h²) sin²(h sqrt(λ) / 2)`.
///
/// Exact for this scheme on every Laakso graph; the multiplicities carry
/// over unchanged as long as `h sqrt(λ) < π`.
pub fn discrete_eigenvalue(lambda: f64, h: f64) -> f64 {
    let s = (h * lambda.sqrt() / 2.0).sin();
    4.0 / (h * h) * s * s
}

/// Discretize with `points_per_edge` interior points per edge.
///
/// `points_per_edge = 0` gives the plain graph Laplacian on the vertices,
/// scaled by the edge length.
pub fn discretize(graph: &MetricGraph, points_per_edge: usize) -> Result<Discretization> {
    discretize_with(graph, points_per_edge, Execution::default())
}

pub fn discretize_with(graph: &MetricGraph, points_per_edge: usize, exec: Execution) -> Result<Discretization> {
    let Some(first) = graph.edges.first() else {
        return Err(Error::validation("graph has no edges"));
    };
    let length = first.length;
    if graph.edges.iter().any(|e| (e.length - length).abs() > 1e-12 * length) {
        return Err(Error::validation("discretization needs equal edge lengths"));
    }
    let m = points_per_edge;
    let nv = graph.vertex_count;
    let dim = nv + graph.edges.len() * m;
    let h = length / (m + 1) as f64;
    let interior = |e: usize, i: usize| nv + e * m + i;

    // Neighbour of each vertex along each incident edge.
    let mut vertex_nb: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, edge) in graph.edges.iter().enumerate() {
        let (near_u, near_v) = if m == 0 { (edge.v, edge.u) } else { (interior(e, 0), interior(e, m - 1)) };
        vertex_nb[edge.u].push(near_u);
        vertex_nb[edge.v].push(near_v);
    }
    if let Some(x) = vertex_nb.iter().position(Vec::is_empty) {
        return Err(Error::validation(format!("vertex {x} is isolated")));
    }

    let inv_h = 1.0 / h;
    let rows: Vec<Vec<(usize, f64)>> = par::map_range(exec, dim, |r| {
        let mut row: Vec<(usize, f64)> = if r < nv {
            let nb = &vertex_nb[r];
            let mut row = vec![(r, nb.len() as f64 * inv_h)];
            row.extend(nb.iter().map(|&c| (c, -inv_h)));
            row
        } else {
            let e = (r - nv) / m;
            let i = (r - nv) % m;
            let edge = &graph.edges[e];
            let left = if i == 0 { edge.u } else { r - 1 };
            let right = if i + 1 == m { edge.v } else { r + 1 };
            vec![(left, -inv_h), (r, 2.0 * inv_h), (right, -inv_h)]
        };
        row.sort_by_key(|&(c, _)| c);
        // Parallel edges without interior points hit the same column twice.
        row.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        row
    });
    let stiffness = CsrMatrix::from_rows(dim, &rows)?;
    let mut mass = vec![h; dim];
    for (x, nb) in vertex_nb.iter().enumerate() {
        mass[x] = nb.len() as f64 * h / 2.0;
    }
    let scale: Vec<f64> = mass.iter().map(|w| 1.0 / w.sqrt()).collect();
    let operator = stiffness.scaled_symmetric(&scale, exec);
    Ok(Discretization { h, points_per_edge: m, vertex_count: nv, stiffness, mass, operator })
}
