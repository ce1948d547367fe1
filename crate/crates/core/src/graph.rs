//! Finite connected interaction graphs and the two scalar summaries used by
//! the survival bounds: the maximal distance sum and the mean earning rate.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RateField;

/// Undirected, simple, connected graph on vertices `0..n`.
///
/// Edges are stored canonicalised as `(min, max)` and sorted, so every
/// iteration over edges or neighbours happens in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
}

/// Constructors understood by [`Graph::build`] and the CLI (`path:5`, `cycle:4`,
/// `complete:3`, `grid:3x4`, `star:5`, `file:edges.txt`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    Path(usize),
    Cycle(usize),
    Complete(usize),
    Grid(usize, usize),
    Star(usize),
    EdgeList(Vec<(usize, usize)>),
    File(String),
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut adj = vec![Vec::new(); n];
        let mut incident = vec![Vec::new(); n];
        for (id, &(u, v)) in canon.iter().enumerate() {
            adj[u].push(v);
            adj[v].push(u);
            incident[u].push(id);
            incident[v].push(id);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = Graph {
            n,
            edges: canon,
            adj,
            incident,
        };

        let dist = g.bfs_distances(0);
        let unreached: Vec<usize> = (0..n).filter(|&v| dist[v].is_none()).collect();
        if !unreached.is_empty() {
            return Err(Error::InvalidGraph(format!(
                "graph is disconnected: {} vertices unreachable from 0 (first: {})",
                unreached.len(),
                unreached[0]
            )));
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Result<Graph> {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Graph::from_edges(n, &edges)
    }

    /// Ring on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Graph> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!(
                "a simple cycle needs at least 3 vertices, got {n}"
            )));
        }
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        edges.push((0, n - 1));
        Graph::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Graph> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges)
    }

    pub fn grid(w: usize, h: usize) -> Result<Graph> {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1));
                }
                if y + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        Graph::from_edges(w * h, &edges)
    }

    /// Vertex 0 joined to `n - 1` leaves.
    pub fn star(n: usize) -> Result<Graph> {
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Graph::from_edges(n, &edges)
    }

    pub fn build(kind: &GraphKind) -> Result<Graph> {
        match kind {
            GraphKind::Path(n) => Graph::path(*n),
            GraphKind::Cycle(n) => Graph::cycle(*n),
            GraphKind::Complete(n) => Graph::complete(*n),
            GraphKind::Grid(w, h) => Graph::grid(*w, *h),
            GraphKind::Star(n) => Graph::star(*n),
            GraphKind::EdgeList(edges) => {
                let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
                Graph::from_edges(n, edges)
            }
            GraphKind::File(path) => Graph::read_edge_list(path),
        }
    }

    /// Parses one whitespace-separated `u v` pair per line; blank lines and
    /// lines starting with `#` are skipped. A file holding the single line
    /// `0` (or no edges) is not representable; a one-vertex graph is `path:1`.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: expected `u v`", lineno + 1)))?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let u = next()?;
            let v = next()?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!(
                    "line {}: trailing tokens after `u v`",
                    lineno + 1
                )));
            }
            edges.push((u, v));
        }
        Graph::build(&GraphKind::EdgeList(edges))
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
        let text = std::fs::read_to_string(path)?;
        Graph::parse_edge_list(&text)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Random connected graph: a uniformly shuffled spanning tree plus each
    /// remaining pair independently with probability `extra`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra: f64, rng: &mut R) -> Result<Graph> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut edges = Vec::new();
        for i in 1..n {
            let parent = order[rng.random_range(0..i)];
            edges.push((parent.min(order[i]), parent.max(order[i])));
        }
        for u in 0..n {
            for v in u + 1..n {
                if !edges.contains(&(u, v)) && rng.random::<f64>() < extra {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    /// Neighbours of `v` in increasing id order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices have a distance");
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// `max_x sum_z d(x, z)`: caps the total number of coins at the instant of
    /// the first death under perfect cooperation.
    pub fn distance_sum_max(&self) -> u64 {
        (0..self.n)
            .map(|x| {
                self.bfs_distances(x)
                    .into_iter()
                    .map(|d| d.expect("graph is connected") as u64)
                    .sum::<u64>()
            })
            .max()
            .unwrap_or(0)
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<GraphKind> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("graph spec `{s}` is not of the form kind:args")))?;
        let num = |a: &str| {
            a.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("graph spec `{s}`: {e}")))
        };
        match kind {
            "path" => Ok(GraphKind::Path(num(arg)?)),
            "cycle" | "ring" => Ok(GraphKind::Cycle(num(arg)?)),
            "complete" => Ok(GraphKind::Complete(num(arg)?)),
            "star" => Ok(GraphKind::Star(num(arg)?)),
            "grid" => {
                let (w, h) = arg
                    .split_once('x')
                    .ok_or_else(|| Error::Parse(format!("grid spec `{s}` must be grid:WxH")))?;
                Ok(GraphKind::Grid(num(w)?, num(h)?))
            }
            "file" => Ok(GraphKind::File(arg.to_string())),
            other => Err(Error::Parse(format!("unknown graph kind `{other}`"))),
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Path(n) => write!(f, "path:{n}"),
            GraphKind::Cycle(n) => write!(f, "cycle:{n}"),
            GraphKind::Complete(n) => write!(f, "complete:{n}"),
            GraphKind::Grid(w, h) => write!(f, "grid:{w}x{h}"),
            GraphKind::Star(n) => write!(f, "star:{n}"),
            GraphKind::EdgeList(e) => write!(f, "edges:{}", e.len()),
            GraphKind::File(p) => write!(f, "file:{p}"),
        }
    }
}

/// Mean of the earning rates.
pub fn phi_bar(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::InvalidRates("empty rate field".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidRates(format!(
            "rates must be positive and finite, found {r}"
        )));
    }
    Ok(crate::numeric::kahan_sum(rates.iter().copied()) / rates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub dee: u64,
    pub phi_bar: f64,
    pub n: usize,
}

impl GraphMetrics {
    pub fn new(g: &Graph, rates: &RateField) -> Result<GraphMetrics> {
        if rates.len() != g.vertex_count() {
            return Err(Error::InvalidRates(format!(
                "rate field has {} entries for a graph on {} vertices",
                rates.len(),
                g.vertex_count()
            )));
        }
        Ok(GraphMetrics {
            dee: g.distance_sum_max(),
            phi_bar: rates.phi_bar(),
            n: g.vertex_count(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Floyd-Warshall on an adjacency matrix, independent of the BFS path.
    fn floyd_dee(g: &Graph) -> u64 {
        let n = g.vertex_count();
        let inf = u64::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for &(u, v) in g.edges() {
            d[u][v] = 1;
            d[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d.iter().map(|row| row.iter().sum::<u64>()).max().unwrap()
    }

    #[test]
    fn builders() {
        let g = Graph::complete(2).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges(), &[(0, 1)]);

        let c4 = Graph::cycle(4).unwrap();
        assert_eq!(c4.vertex_count(), 4);
        assert_eq!(c4.edge_count(), 4);

        let grid = Graph::grid(3, 2).unwrap();
        assert_eq!(grid.edge_count(), 7);
    }

    #[test]
    fn rejects_bad_graphs() {
        let err = Graph::build(&GraphKind::EdgeList(vec![(0, 1), (2, 3)])).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
        assert!(Graph::path(0).is_err());
        assert!(Graph::from_edges(2, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(2, &[(1, 1)]).is_err());
        assert!(Graph::cycle(2).is_err());
    }

    #[test]
    fn distance_sums() {
        assert_eq!(Graph::path(3).unwrap().distance_sum_max(), 3);
        assert_eq!(Graph::cycle(4).unwrap().distance_sum_max(), 4);
        assert_eq!(Graph::path(1).unwrap().distance_sum_max(), 0);
        for n in 1..12 {
            assert_eq!(Graph::complete(n).unwrap().distance_sum_max(), n as u64 - 1);
        }
    }

    #[test]
    fn phi_bar_means() {
        assert_eq!(phi_bar(&[0.5, 1.25]).unwrap(), 0.875);
        assert_eq!(phi_bar(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(phi_bar(&[1.5, 2.5]).unwrap(), 2.0);
        assert!(phi_bar(&[]).is_err());
        assert!(phi_bar(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("# ring\n0 1\n1 2\n\n2 0\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(Graph::parse_edge_list("0 1\n2 3\n").is_err());
        assert!(Graph::parse_edge_list("0 x\n").is_err());
        let again = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn graph_kind_parsing() {
        for s in ["path:5", "cycle:4", "complete:3", "grid:3x4", "star:6"] {
            let k: GraphKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("blob:3".parse::<GraphKind>().is_err());
    }

    proptest! {
        #[test]
        fn dee_matches_floyd_warshall(n in 1usize..=50, extra in 0.0f64..0.3, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Graph::random_connected(n, extra, &mut rng).unwrap();
            prop_assert_eq!(g.distance_sum_max(), floyd_dee(&g));
        }

        #[test]
        fn dee_invariant_under_relabeling(n in 1usize..=30, extra in 0.0f64..0.3, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Graph::random_connected(n, extra, &mut rng).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let relabeled: Vec<_> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let h = Graph::from_edges(n, &relabeled).unwrap();
            prop_assert_eq!(g.distance_sum_max(), h.distance_sum_max());
        }
    }
}
