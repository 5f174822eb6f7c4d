//! Metric graphs: weighted embedded graphs whose locations are
//! (edge, offset) pairs, with Dijkstra-based shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::path::GeoPath;
use super::{GeometryError, Position};

#[derive(Clone, Debug)]
pub struct GraphNode {
    pub id: String,
    /// Optional 2D embedding, used only for rendering and trace output.
    pub xy: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub len: f64,
}

/// A location on a metric graph: `offset` meters from `edge`'s endpoint `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphLocation {
    pub edge: usize,
    pub offset: f64,
}

#[derive(Clone, Debug, Default)]
pub struct MetricGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    adj: Vec<Vec<(usize, usize)>>, // node -> [(edge index, other node)]
}

impl MetricGraph {
    pub fn new() -> Self {
        MetricGraph::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>, xy: Option<[f64; 2]>) -> usize {
        self.nodes.push(GraphNode { id: id.into(), xy });
        self.adj.push(Vec::new());
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, len: f64) -> Result<usize, GeometryError> {
        if len <= 0.0 || !len.is_finite() {
            return Err(GeometryError::InvalidEdgeLength(len));
        }
        if a >= self.nodes.len() || b >= self.nodes.len() {
            return Err(GeometryError::UnknownNode(a.max(b).to_string()));
        }
        let idx = self.edges.len();
        self.edges.push(GraphEdge { a, b, len });
        self.adj[a].push((idx, b));
        self.adj[b].push((idx, a));
        Ok(idx)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, i: usize) -> &GraphNode {
        &self.nodes[i]
    }

    pub fn edge(&self, i: usize) -> &GraphEdge {
        &self.edges[i]
    }

    pub fn node_by_id(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Location pinned to a node, represented on its first incident edge.
    pub fn node_location(&self, node: usize) -> Result<GraphLocation, GeometryError> {
        let (edge, _) = *self.adj[node]
            .first()
            .ok_or_else(|| GeometryError::Disconnected(self.nodes[node].id.clone()))?;
        let e = self.edges[edge];
        let offset = if e.a == node { 0.0 } else { e.len };
        Ok(GraphLocation { edge, offset })
    }

    pub fn location_valid(&self, loc: &GraphLocation) -> bool {
        loc.edge < self.edges.len()
            && loc.offset >= -1e-12
            && loc.offset <= self.edges[loc.edge].len + 1e-12
    }

    /// 2D rendering coordinates of a location, when the embedding exists.
    pub fn location_xy(&self, loc: &GraphLocation) -> Option<[f64; 2]> {
        let e = self.edges[loc.edge];
        let pa = self.nodes[e.a].xy?;
        let pb = self.nodes[e.b].xy?;
        let t = (loc.offset / e.len).clamp(0.0, 1.0);
        Some([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])])
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &(_, m) in &self.adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn seed_distances(&self, src: &GraphLocation) -> Vec<(usize, f64)> {
        let e = self.edges[src.edge];
        vec![(e.a, src.offset), (e.b, e.len - src.offset)]
    }

    /// Direct distance when both locations share an edge.
    fn same_edge_distance(&self, a: &GraphLocation, b: &GraphLocation) -> Option<f64> {
        (a.edge == b.edge).then(|| (a.offset - b.offset).abs())
    }

    /// Shortest-path distances from `src` to each of `targets`.
    ///
    /// Runs a single Dijkstra pass over the node set seeded with the two
    /// endpoints of the source edge, stopping early once no target can
    /// still improve. Node-index tie-breaking keeps results deterministic.
    pub fn distances(&self, src: &GraphLocation, targets: &[GraphLocation]) -> Vec<f64> {
        let node_dist = self.dijkstra_nodes(src, targets);
        targets
            .iter()
            .map(|t| {
                let e = self.edges[t.edge];
                let via_a = node_dist[e.a] + t.offset;
                let via_b = node_dist[e.b] + (e.len - t.offset);
                let mut d = via_a.min(via_b);
                if let Some(direct) = self.same_edge_distance(src, t) {
                    d = d.min(direct);
                }
                d
            })
            .collect()
    }

    pub fn distance(&self, src: &GraphLocation, dst: &GraphLocation) -> Result<f64, GeometryError> {
        let d = self.distances(src, &[*dst])[0];
        if d.is_finite() {
            Ok(d)
        } else {
            Err(GeometryError::NoPath)
        }
    }

    /// Shortest-path distance from `src` to every node.
    pub fn node_distances(&self, src: &GraphLocation) -> Vec<f64> {
        self.dijkstra_nodes(src, &[])
    }

    fn dijkstra_nodes(&self, src: &GraphLocation, targets: &[GraphLocation]) -> Vec<f64> {
        #[derive(PartialEq)]
        struct State {
            cost: f64,
            node: usize,
        }
        impl Eq for State {}
        impl Ord for State {
            fn cmp(&self, other: &Self) -> Ordering {
                // Min-heap on cost, then node index for determinism.
                other
                    .cost
                    .partial_cmp(&self.cost)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| other.node.cmp(&self.node))
            }
        }
        impl PartialOrd for State {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for (n, d) in self.seed_distances(src) {
            if d < dist[n] {
                dist[n] = d;
                heap.push(State { cost: d, node: n });
            }
        }

        // A target stops improving once its best possible value is fixed.
        let direct: Vec<Option<f64>> = targets
            .iter()
            .map(|t| self.same_edge_distance(src, t))
            .collect();
        let target_bound = |dist: &[f64], i: usize| -> f64 {
            let t = &targets[i];
            let e = self.edges[t.edge];
            let mut b = (dist[e.a] + t.offset).min(dist[e.b] + (e.len - t.offset));
            if let Some(d) = direct[i] {
                b = b.min(d);
            }
            b
        };

        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            if !targets.is_empty() {
                let worst = (0..targets.len())
                    .map(|i| target_bound(&dist, i))
                    .fold(f64::NEG_INFINITY, f64::max);
                if cost >= worst {
                    break;
                }
            }
            for &(edge, next) in &self.adj[node] {
                let cand = cost + self.edges[edge].len;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(State {
                        cost: cand,
                        node: next,
                    });
                }
            }
        }
        dist
    }

    /// Shortest path between two locations, as (length, realizing path).
    pub fn shortest_path(
        &self,
        src: &GraphLocation,
        dst: &GraphLocation,
    ) -> Result<(f64, GeoPath), GeometryError> {
        if let Some(direct) = self.same_edge_distance(src, dst) {
            // The through-node route may still be shorter; compare below.
            let (len, path) = self.shortest_path_via_nodes(src, dst)?;
            if direct <= len {
                let p = GeoPath::from_graph_locations(vec![*src, *dst])?;
                return Ok((direct, p));
            }
            return Ok((len, path));
        }
        self.shortest_path_via_nodes(src, dst)
    }

    fn shortest_path_via_nodes(
        &self,
        src: &GraphLocation,
        dst: &GraphLocation,
    ) -> Result<(f64, GeoPath), GeometryError> {
        #[derive(PartialEq)]
        struct State {
            cost: f64,
            node: usize,
        }
        impl Eq for State {}
        impl Ord for State {
            fn cmp(&self, other: &Self) -> Ordering {
                other
                    .cost
                    .partial_cmp(&self.cost)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| other.node.cmp(&self.node))
            }
        }
        impl PartialOrd for State {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.nodes.len()]; // (node, edge)
        let mut heap = BinaryHeap::new();
        for (n, d) in self.seed_distances(src) {
            if d < dist[n] {
                dist[n] = d;
                heap.push(State { cost: d, node: n });
            }
        }
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(edge, next) in &self.adj[node] {
                let cand = cost + self.edges[edge].len;
                if cand < dist[next] {
                    dist[next] = cand;
                    prev[next] = Some((node, edge));
                    heap.push(State {
                        cost: cand,
                        node: next,
                    });
                }
            }
        }

        let e_dst = self.edges[dst.edge];
        let via_a = dist[e_dst.a] + dst.offset;
        let via_b = dist[e_dst.b] + (e_dst.len - dst.offset);
        let (end_node, total) = if via_a <= via_b {
            (e_dst.a, via_a)
        } else {
            (e_dst.b, via_b)
        };
        if !total.is_finite() {
            return Err(GeometryError::NoPath);
        }

        // Walk predecessors back to one of the source edge endpoints.
        let mut steps: Vec<(usize, usize, usize)> = Vec::new(); // (from, to, edge)
        let mut cur = end_node;
        while let Some((p, e)) = prev[cur] {
            steps.push((p, cur, e));
            cur = p;
        }
        steps.reverse();
        let first = cur;

        let mut locs: Vec<GraphLocation> = Vec::new();
        // Entry segment: from src along its edge to the first chain node.
        let e_src = self.edges[src.edge];
        locs.push(*src);
        locs.push(GraphLocation {
            edge: src.edge,
            offset: if first == e_src.a { 0.0 } else { e_src.len },
        });
        // Intermediate edges: each traversed edge contributes both endpoints
        // expressed on that edge.
        for &(from, _to, edge) in &steps {
            let e = self.edges[edge];
            let (off_from, off_to) = if e.a == from { (0.0, e.len) } else { (e.len, 0.0) };
            locs.push(GraphLocation {
                edge,
                offset: off_from,
            });
            locs.push(GraphLocation {
                edge,
                offset: off_to,
            });
        }
        // Exit segment: from the last chain node along dst's edge.
        locs.push(GraphLocation {
            edge: dst.edge,
            offset: if end_node == e_dst.a { 0.0 } else { e_dst.len },
        });
        locs.push(*dst);

        let path = GeoPath::from_graph_locations(locs)?;
        Ok((total, path))
    }

    /// Graph-location variant of [`Position`], for dispatch convenience.
    pub fn position(loc: GraphLocation) -> Position {
        Position::Graph(loc)
    }
}

// ---------------------------------------------------------------------------
// JSON wire format: {"nodes": [{"id","x","y"}], "edges": [{"a","b","len"}]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NodeDto {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDto {
    a: String,
    b: String,
    len: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphDto {
    nodes: Vec<NodeDto>,
    edges: Vec<EdgeDto>,
}

impl MetricGraph {
    pub fn to_json(&self) -> String {
        let dto = GraphDto {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDto {
                    id: n.id.clone(),
                    x: n.xy.map(|p| p[0]),
                    y: n.xy.map(|p| p[1]),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDto {
                    a: self.nodes[e.a].id.clone(),
                    b: self.nodes[e.b].id.clone(),
                    len: e.len,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dto).expect("graph serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let dto: GraphDto =
            serde_json::from_str(text).map_err(|e| GeometryError::BadFormat(e.to_string()))?;
        let mut g = MetricGraph::new();
        for n in &dto.nodes {
            let xy = match (n.x, n.y) {
                (Some(x), Some(y)) => Some([x, y]),
                _ => None,
            };
            g.add_node(n.id.clone(), xy);
        }
        for e in &dto.edges {
            let a = g
                .node_by_id(&e.a)
                .ok_or_else(|| GeometryError::UnknownNode(e.a.clone()))?;
            let b = g
                .node_by_id(&e.b)
                .ok_or_else(|| GeometryError::UnknownNode(e.b.clone()))?;
            g.add_edge(a, b, e.len)?;
        }
        if !g.is_connected() {
            return Err(GeometryError::Disconnected("graph".into()));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_graph(lens: &[f64]) -> MetricGraph {
        let mut g = MetricGraph::new();
        let mut prev = g.add_node("n0", Some([0.0, 0.0]));
        let mut x = 0.0;
        for (i, &l) in lens.iter().enumerate() {
            x += l;
            let n = g.add_node(format!("n{}", i + 1), Some([x, 0.0]));
            g.add_edge(prev, n, l).unwrap();
            prev = n;
        }
        g
    }

    #[test]
    fn on_edge_distance() {
        let g = line_graph(&[7.0]);
        let a = GraphLocation {
            edge: 0,
            offset: 2.0,
        };
        let b = GraphLocation {
            edge: 0,
            offset: 5.0,
        };
        assert_eq!(g.distance(&a, &b).unwrap(), 3.0);
        assert_eq!(g.distance(&b, &a).unwrap(), 3.0);
    }

    #[test]
    fn multi_edge_distance_and_path() {
        let g = line_graph(&[2.0, 3.0, 4.0]);
        let a = GraphLocation {
            edge: 0,
            offset: 0.5,
        };
        let b = GraphLocation {
            edge: 2,
            offset: 1.5,
        };
        let (len, path) = g.shortest_path(&a, &b).unwrap();
        assert!((len - (1.5 + 3.0 + 1.5)).abs() < 1e-12);
        assert!((path.total_length() - len).abs() < 1e-12);
    }

    #[test]
    fn cycle_picks_shorter_side() {
        let mut g = MetricGraph::new();
        let a = g.add_node("a", None);
        let b = g.add_node("b", None);
        g.add_edge(a, b, 10.0).unwrap();
        g.add_edge(a, b, 3.0).unwrap();
        let la = g.node_location(a).unwrap();
        let lb = g.node_location(b).unwrap();
        assert_eq!(g.distance(&la, &lb).unwrap(), 3.0);
    }

    #[test]
    fn disconnected_reports_no_path() {
        let mut g = MetricGraph::new();
        let a = g.add_node("a", None);
        let b = g.add_node("b", None);
        let c = g.add_node("c", None);
        let d = g.add_node("d", None);
        g.add_edge(a, b, 1.0).unwrap();
        g.add_edge(c, d, 1.0).unwrap();
        let la = g.node_location(a).unwrap();
        let lc = g.node_location(c).unwrap();
        assert!(matches!(g.distance(&la, &lc), Err(GeometryError::NoPath)));
        assert!(!g.is_connected());
    }

    #[test]
    fn json_round_trip() {
        let g = line_graph(&[1.0, 2.5]);
        let text = g.to_json();
        let g2 = MetricGraph::from_json(&text).unwrap();
        assert_eq!(g2.node_count(), 3);
        assert_eq!(g2.edge_count(), 2);
        let a = g2.node_location(0).unwrap();
        let c = g2.node_location(2).unwrap();
        assert!((g2.distance(&a, &c).unwrap() - 3.5).abs() < 1e-12);
    }
}
