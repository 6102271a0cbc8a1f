//! Weighted graphs as discrete geodesic spaces.
//!
//! Distances are exact Dijkstra shortest paths. Rows of the all-pairs table
//! are computed on first use and cached per source; each row is written once
//! and read freely afterwards.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{EdgeRecord, GraphFile, VertexRecord};
use crate::metric::{FiniteMetricSpace, MetricError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex ids must be 0..n in order; found id {found} at position {position}")]
    BadVertexId { position: usize, found: usize },
    #[error("edge ({u}, {v}) references a missing vertex")]
    UnknownVertex { u: usize, v: usize },
    #[error("edge ({u}, {v}) has non-positive or non-finite length {len}")]
    BadEdgeLength { u: usize, v: usize, len: f64 },
    #[error("vertex {vertex} is unreachable from vertex 0")]
    Disconnected { vertex: usize },
    #[error("path is not a geodesic: length {length} vs endpoint distance {distance}")]
    NotAGeodesic { length: f64, distance: f64 },
    #[error("path has {0} vertices; at least 2 are needed")]
    PathTooShort(usize),
    #[error("consecutive path vertices {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("empty subset")]
    EmptySubset,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Single-source shortest-path tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPaths {
    pub source: usize,
    pub dist: Vec<f64>,
    /// Predecessor on the chosen shortest path; `None` for the source.
    pub pred: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Vertex path from the source to `target`, inclusive.
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        let mut path = vec![target];
        let mut v = target;
        while let Some(p) = self.pred[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    }
}

/// Relative slack under which two path lengths count as a tie.
const TIE: f64 = 1e-12;

#[derive(Debug)]
pub struct GraphSpace {
    positions: Vec<Option<(f64, f64)>>,
    adjacency: Vec<Vec<(usize, f64)>>,
    rows: Vec<OnceLock<ShortestPaths>>,
}

impl Clone for GraphSpace {
    fn clone(&self) -> Self {
        GraphSpace {
            positions: self.positions.clone(),
            adjacency: self.adjacency.clone(),
            rows: self.rows.to_vec(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then vertex id
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GraphSpace {
    /// Builds a connected graph on `n` vertices. Parallel edges keep the
    /// shortest length.
    pub fn new(
        positions: Vec<Option<(f64, f64)>>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, GraphError> {
        let n = positions.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(u, v, len) in edges {
            if u >= n || v >= n {
                return Err(GraphError::UnknownVertex { u, v });
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(GraphError::BadEdgeLength { u, v, len });
            }
            if u == v {
                continue;
            }
            add_edge(&mut adjacency[u], v, len);
            add_edge(&mut adjacency[v], u, len);
        }
        for a in &mut adjacency {
            a.sort_by_key(|&(v, _)| v);
        }
        let graph = GraphSpace { positions, adjacency, rows: (0..n).map(|_| OnceLock::new()).collect() };
        let reach = graph.dijkstra(0);
        if let Some(vertex) = reach.dist.iter().position(|d| d.is_infinite()) {
            return Err(GraphError::Disconnected { vertex });
        }
        let _ = graph.rows[0].set(reach);
        Ok(graph)
    }

    pub fn from_file(file: &GraphFile) -> Result<Self, GraphError> {
        let mut positions = Vec::with_capacity(file.vertices.len());
        for (position, v) in file.vertices.iter().enumerate() {
            if v.id != position {
                return Err(GraphError::BadVertexId { position, found: v.id });
            }
            positions.push(v.x.zip(v.y));
        }
        let edges: Vec<_> = file.edges.iter().map(|e| (e.u, e.v, e.len)).collect();
        GraphSpace::new(positions, &edges)
    }

    pub fn to_file(&self) -> GraphFile {
        let vertices = self
            .positions
            .iter()
            .enumerate()
            .map(|(id, p)| VertexRecord { id, x: p.map(|p| p.0), y: p.map(|p| p.1) })
            .collect();
        let edges = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| {
                nbrs.iter().filter(move |&&(v, _)| u < v).map(move |&(v, len)| EdgeRecord { u, v, len })
            })
            .collect();
        GraphFile { vertices, edges }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, v: usize) -> Option<(f64, f64)> {
        self.positions[v]
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_length(&self, u: usize, v: usize) -> Option<f64> {
        self.adjacency[u].binary_search_by_key(&v, |&(w, _)| w).ok().map(|i| self.adjacency[u][i].1)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn dijkstra(&self, source: usize) -> ShortestPaths {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry { dist: 0.0, vertex: source });
        while let Some(Entry { dist: du, vertex: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, len) in &self.adjacency[u] {
                if done[v] {
                    continue;
                }
                let nd = du + len;
                let dv = dist[v];
                if dv.is_infinite() || nd < dv - TIE * dv {
                    dist[v] = nd;
                    pred[v] = Some(u);
                    heap.push(Entry { dist: nd, vertex: v });
                } else if nd <= dv + TIE * dv {
                    // tie: prefer the smaller predecessor id, keep the smaller length
                    if pred[v].is_some_and(|p| u < p) {
                        pred[v] = Some(u);
                    }
                    if nd < dv {
                        dist[v] = nd;
                        heap.push(Entry { dist: nd, vertex: v });
                    }
                }
            }
        }
        ShortestPaths { source, dist, pred }
    }

    /// Shortest paths from `source`, computed once and cached.
    pub fn shortest_paths(&self, source: usize) -> &ShortestPaths {
        self.rows[source].get_or_init(|| self.dijkstra(source))
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        // Prefer an already computed row from either end.
        if let Some(row) = self.rows[v].get() {
            return row.dist[u];
        }
        self.shortest_paths(u).dist[v]
    }

    /// Geodesic from `u` to `v` following the cached predecessor tree of `u`.
    pub fn geodesic(&self, u: usize, v: usize) -> Vec<usize> {
        self.shortest_paths(u).path_to(v)
    }

    /// Fills every row in parallel.
    pub fn precompute_all(&self) {
        (0..self.len()).into_par_iter().for_each(|s| {
            self.shortest_paths(s);
        });
    }

    /// The shortest-path metric as a finite metric space. Labels are vertex
    /// ids; the matrix is symmetrized with `min(d(u,v), d(v,u))` to remove
    /// roundoff differences between the two Dijkstra runs.
    pub fn metric(&self) -> Result<FiniteMetricSpace, GraphError> {
        self.precompute_all();
        let n = self.len();
        let mut dist = vec![0.0; n * n];
        for u in 0..n {
            let ru = &self.shortest_paths(u).dist;
            for v in (u + 1)..n {
                let d = ru[v].min(self.shortest_paths(v).dist[u]);
                dist[u * n + v] = d;
                dist[v * n + u] = d;
            }
        }
        Ok(FiniteMetricSpace::from_trusted(crate::metric::default_labels(n), dist)?)
    }

    pub fn path_length(&self, path: &[usize]) -> Result<f64, GraphError> {
        path.windows(2).try_fold(0.0, |acc, w| {
            self.edge_length(w[0], w[1]).map(|l| acc + l).ok_or(GraphError::NotAdjacent(w[0], w[1]))
        })
    }

    /// Vertices that are approximate midpoints of `x` and `y`.
    pub fn midpoints(&self, x: usize, y: usize, tol: f64) -> MidpointSet {
        let dx = &self.shortest_paths(x).dist;
        let dy = &self.shortest_paths(y).dist;
        let dxy = dx[y];
        let members = (0..self.len())
            .filter(|&z| (dx[z] - dy[z]).abs() <= tol && dx[z] + dy[z] <= dxy + tol)
            .collect();
        MidpointSet { pair: (x, y), members, tol }
    }

    /// Arc-length weighted convexity defects of `d(p, .)` along a geodesic.
    ///
    /// For interior vertex `v_i` at arc length `s_i` the defect is
    /// `f(v_i) - [(s_{i+1}-s_i) f(v_{i-1}) + (s_i-s_{i-1}) f(v_{i+1})] / (s_{i+1}-s_{i-1})`;
    /// with equal steps this is `f(v_i) - (f(v_{i-1}) + f(v_{i+1})) / 2`.
    pub fn convexity_profile(&self, p: usize, path: &[usize], tol: f64) -> Result<Vec<f64>, GraphError> {
        if path.len() < 2 {
            return Err(GraphError::PathTooShort(path.len()));
        }
        let length = self.path_length(path)?;
        let distance = self.distance(path[0], path[path.len() - 1]);
        if (length - distance).abs() > tol {
            return Err(GraphError::NotAGeodesic { length, distance });
        }
        let f = &self.shortest_paths(p).dist;
        let mut arc = Vec::with_capacity(path.len());
        let mut s = 0.0;
        arc.push(0.0);
        for w in path.windows(2) {
            s += self.edge_length(w[0], w[1]).expect("checked above");
            arc.push(s);
        }
        Ok((1..path.len() - 1)
            .map(|i| {
                let (h0, h1) = (arc[i] - arc[i - 1], arc[i + 1] - arc[i]);
                f[path[i]] - (h1 * f[path[i - 1]] + h0 * f[path[i + 1]]) / (h0 + h1)
            })
            .collect())
    }

    /// Nearest vertex of `subset` to `x`; ties go to the smallest id.
    pub fn project(&self, subset: &[usize], x: usize) -> Result<Projection, GraphError> {
        let dx = &self.shortest_paths(x).dist;
        subset
            .iter()
            .map(|&v| (dx[v], v))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(distance, vertex)| Projection { vertex, distance })
            .ok_or(GraphError::EmptySubset)
    }

    /// Largest observed `d(pi x, pi y) / d(x, y)` over the given pairs. This is
    /// a measurement; no bound is implied.
    pub fn projection_lipschitz(&self, subset: &[usize], pairs: &[(usize, usize)]) -> Result<f64, GraphError> {
        let mut worst: f64 = 0.0;
        for &(x, y) in pairs {
            if x == y {
                continue;
            }
            let px = self.project(subset, x)?.vertex;
            let py = self.project(subset, y)?.vertex;
            worst = worst.max(self.distance(px, py) / self.distance(x, y));
        }
        Ok(worst)
    }
}

fn add_edge(list: &mut Vec<(usize, f64)>, v: usize, len: f64) {
    match list.iter_mut().find(|(w, _)| *w == v) {
        Some(e) => e.1 = e.1.min(len),
        None => list.push((v, len)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointSet {
    pub pair: (usize, usize),
    pub members: Vec<usize>,
    pub tol: f64,
}

impl MidpointSet {
    /// Diameter of the member set under `d`.
    pub fn diameter(&self, d: impl Fn(usize, usize) -> f64) -> f64 {
        let mut diam: f64 = 0.0;
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                diam = diam.max(d(a, b));
            }
        }
        diam
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub vertex: usize,
    pub distance: f64,
}

/// Grid graph on `nt x ns` points with spacings `dt, ds` starting at
/// `(t0, 0)`. Vertex `(i, j)` has id `i * ns + j`. Each vertex is joined to
/// every grid point within `k` rings along a primitive lattice direction;
/// `weight` returns the length of the straight edge between two coordinates.
pub fn grid_graph(
    nt: usize,
    ns: usize,
    t0: f64,
    dt: f64,
    ds: f64,
    k: usize,
    weight: impl Fn((f64, f64), (f64, f64)) -> f64 + Sync,
) -> Result<GraphSpace, GraphError> {
    let coord = |i: usize, j: usize| (t0 + dt * i as f64, ds * j as f64);
    let positions: Vec<_> = (0..nt).flat_map(|i| (0..ns).map(move |j| Some(coord(i, j)))).collect();
    let k = k as isize;
    let mut steps = Vec::new();
    for di in -k..=k {
        for dj in -k..=k {
            if (di, dj) != (0, 0) && gcd(di.unsigned_abs(), dj.unsigned_abs()) == 1 {
                steps.push((di, dj));
            }
        }
    }
    let edges: Vec<(usize, usize, f64)> = (0..nt * ns)
        .into_par_iter()
        .flat_map_iter(|u| {
            let (i, j) = ((u / ns) as isize, (u % ns) as isize);
            let pu = coord(i as usize, j as usize);
            let weight = &weight;
            steps.iter().filter_map(move |&(di, dj)| {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= nt as isize || b >= ns as isize {
                    return None;
                }
                let v = a as usize * ns + b as usize;
                (u < v).then(|| (u, v, weight(pu, coord(a as usize, b as usize))))
            })
        })
        .collect();
    GraphSpace::new(positions, &edges)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> GraphSpace {
        GraphSpace::new(vec![None; 3], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn cycle4() -> GraphSpace {
        GraphSpace::new(vec![None; 4], &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap()
    }

    fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
        (a.0 - b.0).hypot(a.1 - b.1)
    }

    #[test]
    fn path_and_cycle_distances() {
        assert_eq!(path3().shortest_paths(0).dist, vec![0.0, 1.0, 2.0]);
        assert_eq!(cycle4().shortest_paths(0).dist, vec![0.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn predecessor_ties_go_to_smallest_id() {
        // 0 -> 2 via 1 or via 3, both length 2.
        let g = cycle4();
        assert_eq!(g.geodesic(0, 2), vec![0, 1, 2]);
        assert_eq!(g.geodesic(2, 0), vec![2, 1, 0]);
    }

    #[test]
    fn one_ring_grid_is_octile() {
        // 3x3 unit grid, 8-neighbour: corner to opposite corner is two diagonals.
        let g = grid_graph(3, 3, 0.0, 1.0, 1.0, 1, euclid).unwrap();
        assert!((g.distance(0, 8) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        // corner to (2,1): one diagonal plus one axis step
        assert!((g.distance(0, 7) - (1.0 + 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn unit_grid_without_diagonals_is_l1() {
        let g = grid_graph(3, 3, 0.0, 1.0, 1.0, 1, |a, b| (a.0 - b.0).abs() + (a.1 - b.1).abs())
            .unwrap();
        assert_eq!(g.distance(0, 8), 4.0);
        assert_eq!(g.distance(0, 4), 2.0);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let e = GraphSpace::new(vec![None; 3], &[(0, 1, 1.0)]).unwrap_err();
        assert_eq!(e, GraphError::Disconnected { vertex: 2 });
    }

    #[test]
    fn bad_edges_are_rejected() {
        assert!(matches!(
            GraphSpace::new(vec![None; 2], &[(0, 1, 0.0)]),
            Err(GraphError::BadEdgeLength { .. })
        ));
        assert!(matches!(
            GraphSpace::new(vec![None; 2], &[(0, 5, 1.0)]),
            Err(GraphError::UnknownVertex { .. })
        ));
    }

    #[test]
    fn midpoints_small_graphs() {
        assert_eq!(path3().midpoints(0, 2, 1e-12).members, vec![1]);
        assert_eq!(cycle4().midpoints(0, 2, 1e-12).members, vec![1, 3]);
    }

    #[test]
    fn cycle_is_not_distance_convex() {
        let g = cycle4();
        let defects = g.convexity_profile(0, &[1, 2, 3], 1e-12).unwrap();
        assert_eq!(defects, vec![1.0]);
    }

    #[test]
    fn profile_from_a_point_on_the_geodesic_is_affine() {
        let g = path3();
        let defects = g.convexity_profile(0, &[0, 1, 2], 1e-12).unwrap();
        assert!(defects.iter().all(|&d| d <= 1e-12));
    }

    #[test]
    fn profile_rejects_non_geodesics() {
        let g = cycle4();
        assert!(matches!(
            g.convexity_profile(0, &[0, 1, 2, 3], 1e-9),
            Err(GraphError::NotAGeodesic { .. })
        ));
        assert_eq!(g.convexity_profile(0, &[0, 2], 1e-9), Err(GraphError::NotAdjacent(0, 2)));
    }

    #[test]
    fn projection_onto_single_vertex() {
        let g = cycle4();
        let p = g.project(&[2], 0).unwrap();
        assert_eq!(p, Projection { vertex: 2, distance: 2.0 });
        assert_eq!(g.project(&[], 0), Err(GraphError::EmptySubset));
        // tie between 1 and 3 resolves to 1
        assert_eq!(g.project(&[3, 1], 0).unwrap().vertex, 1);
    }

    #[test]
    fn metric_is_symmetric_and_valid() {
        let g = grid_graph(5, 4, -1.0, 0.5, 0.3, 2, euclid).unwrap();
        let m = g.metric().unwrap();
        let again = crate::metric::validate_metric(&m.matrix(), None).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn graph_file_round_trip() {
        let g = grid_graph(3, 2, 0.0, 1.0, 1.0, 1, euclid).unwrap();
        let text = crate::io::graph_to_json(&g).unwrap();
        let back = crate::io::graph_from_json(&text).unwrap();
        assert_eq!(back.to_file().edges.len(), g.edge_count());
        assert_eq!(crate::io::graph_to_json(&back).unwrap(), text);
        for u in 0..g.len() {
            assert_eq!(back.shortest_paths(u).dist, g.shortest_paths(u).dist);
        }
    }
}
