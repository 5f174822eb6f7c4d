//! Simple polygons, polygonal scenes, and visibility-graph geodesics.
//!
//! Intersection predicates use an absolute epsilon of 1e-12 and assume
//! roughly unit-normalized coordinates; scenes are assumed non-degenerate.
//! Obstacle boundaries are traversable: grazing contact at vertices and
//! travel along edges are allowed, only interior penetration blocks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::path::GeoPath;
use super::point::Point;
use super::GeometryError;

pub const EPS: f64 = 1e-12;

/// Cross product of (b - a) x (c - a); positive when c lies left of a->b.
fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x())
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    if orient(a, b, p).abs() > EPS * (1.0 + a.distance(b)) {
        return false;
    }
    let lo_x = a.x().min(b.x()) - EPS;
    let hi_x = a.x().max(b.x()) + EPS;
    let lo_y = a.y().min(b.y()) - EPS;
    let hi_y = a.y().max(b.y()) + EPS;
    p.x() >= lo_x && p.x() <= hi_x && p.y() >= lo_y && p.y() <= hi_y
}

/// Strict interior crossing of segments ab and cd.
fn proper_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let scale_ab = 1.0 + a.distance(b);
    let scale_cd = 1.0 + c.distance(d);
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let s1 = o1 > EPS * scale_ab;
    let s1n = o1 < -EPS * scale_ab;
    let s2 = o2 > EPS * scale_ab;
    let s2n = o2 < -EPS * scale_ab;
    let s3 = o3 > EPS * scale_cd;
    let s3n = o3 < -EPS * scale_cd;
    let s4 = o4 > EPS * scale_cd;
    let s4n = o4 < -EPS * scale_cd;
    ((s1 && s2n) || (s1n && s2)) && ((s3 && s4n) || (s3n && s4))
}

/// A simple polygon stored counterclockwise.
#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegeneratePolygon(vertices.len()));
        }
        let mut p = Polygon { vertices };
        if p.signed_area() < 0.0 {
            p.vertices.reverse();
        }
        if !p.is_simple() {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(p)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            acc += a.x() * b.y() - b.x() * a.y();
        }
        acc / 2.0
    }

    fn edges(&self) -> impl Iterator<Item = (&Point, &Point)> {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (&self.vertices[i], &self.vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                let (c, d) = (&self.vertices[j], &self.vertices[(j + 1) % n]);
                if proper_cross(a, b, c, d) {
                    return false;
                }
                // Non-adjacent edges may not even touch.
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent
                    && (on_segment(a, b, c)
                        || on_segment(a, b, d)
                        || on_segment(c, d, a)
                        || on_segment(c, d, b))
                {
                    return false;
                }
            }
        }
        true
    }

    pub fn on_boundary(&self, p: &Point) -> bool {
        self.edges().any(|(a, b)| on_segment(a, b, p))
    }

    /// Even-odd test; boundary points count as outside.
    pub fn contains_interior(&self, p: &Point) -> bool {
        if self.on_boundary(p) {
            return false;
        }
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let vi = &self.vertices[i];
            let vj = &self.vertices[j];
            if (vi.y() > p.y()) != (vj.y() > p.y()) {
                let x_cross = vj.x() + (p.y() - vj.y()) / (vi.y() - vj.y()) * (vi.x() - vj.x());
                if p.x() < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}

/// A set of pairwise interior-disjoint simple polygonal obstacles.
#[derive(Clone, Debug)]
pub struct PolygonalScene {
    obstacles: Vec<Polygon>,
}

impl PolygonalScene {
    pub fn new(obstacles: Vec<Polygon>) -> Result<Self, GeometryError> {
        for i in 0..obstacles.len() {
            for j in (i + 1)..obstacles.len() {
                if polygons_overlap(&obstacles[i], &obstacles[j]) {
                    return Err(GeometryError::OverlappingObstacles(i, j));
                }
            }
        }
        Ok(PolygonalScene { obstacles })
    }

    pub fn empty() -> Self {
        PolygonalScene { obstacles: vec![] }
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn in_free_space(&self, p: &Point) -> bool {
        !self.obstacles.iter().any(|o| o.contains_interior(p))
    }

    /// Axis-aligned bounding box over obstacle vertices and `extra` points.
    pub fn bounding_box(&self, extra: &[Point]) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut feed = |p: &Point| {
            lo[0] = lo[0].min(p.x());
            lo[1] = lo[1].min(p.y());
            hi[0] = hi[0].max(p.x());
            hi[1] = hi[1].max(p.y());
        };
        for o in &self.obstacles {
            for v in o.vertices() {
                feed(v);
            }
        }
        for p in extra {
            feed(p);
        }
        (lo, hi)
    }

    /// True when the open segment ab penetrates some obstacle interior.
    pub fn segment_blocked(&self, a: &Point, b: &Point) -> bool {
        if a.distance(b) < EPS {
            return false;
        }
        for o in &self.obstacles {
            for (s, t) in o.edges() {
                if proper_cross(a, b, s, t) {
                    return true;
                }
            }
        }
        // No proper crossing: split ab at every boundary touch point and
        // test each open piece's midpoint for interior containment.
        let mut params = vec![0.0_f64, 1.0];
        let len = a.distance(b);
        for o in &self.obstacles {
            for v in o.vertices() {
                if on_segment(a, b, v) {
                    params.push(v.sub(a).dot(&b.sub(a)) / (len * len));
                }
            }
        }
        params.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in params.windows(2) {
            if w[1] - w[0] < EPS {
                continue;
            }
            let mid = a.lerp(b, (w[0] + w[1]) / 2.0);
            if self.obstacles.iter().any(|o| o.contains_interior(&mid)) {
                return true;
            }
        }
        false
    }

    pub fn to_json(&self) -> String {
        let dto = SceneDto {
            obstacles: self
                .obstacles
                .iter()
                .map(|o| o.vertices().iter().map(|v| [v.x(), v.y()]).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&dto).expect("scene serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let dto: SceneDto =
            serde_json::from_str(text).map_err(|e| GeometryError::BadFormat(e.to_string()))?;
        let mut obstacles = Vec::new();
        for poly in dto.obstacles {
            let verts = poly.iter().map(|v| Point::xy(v[0], v[1])).collect();
            obstacles.push(Polygon::new(verts)?);
        }
        PolygonalScene::new(obstacles)
    }
}

#[derive(Serialize, Deserialize)]
struct SceneDto {
    obstacles: Vec<Vec<[f64; 2]>>,
}

fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    for (s, t) in a.edges() {
        for (u, v) in b.edges() {
            if proper_cross(s, t, u, v) {
                return true;
            }
        }
    }
    a.vertices().iter().any(|p| b.contains_interior(p))
        || b.vertices().iter().any(|p| a.contains_interior(p))
}

/// Weighted visibility graph over obstacle vertices plus extra points.
#[derive(Clone, Debug)]
pub struct VisibilityGraph {
    pub points: Vec<Point>,
    pub adj: Vec<Vec<(usize, f64)>>,
}

/// Builds the visibility graph: an edge (u, v) is present iff the open
/// segment uv intersects no obstacle interior; weights are Euclidean.
pub fn build_visibility_graph(
    scene: &PolygonalScene,
    extra: &[Point],
) -> Result<VisibilityGraph, GeometryError> {
    for (i, p) in extra.iter().enumerate() {
        if !scene.in_free_space(p) {
            return Err(GeometryError::PointInsideObstacle(i));
        }
    }
    let mut points: Vec<Point> = Vec::new();
    for o in scene.obstacles() {
        points.extend(o.vertices().iter().cloned());
    }
    points.extend(extra.iter().cloned());
    let n = points.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if !scene.segment_blocked(&points[i], &points[j]) {
                let w = points[i].distance(&points[j]);
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    Ok(VisibilityGraph { points, adj })
}

/// Reusable geodesic oracle over one scene. The vertex-to-vertex visibility
/// adjacency is computed once; each query only tests the two query points.
#[derive(Clone, Debug)]
pub struct SceneOracle {
    scene: PolygonalScene,
    verts: Vec<Point>,
    base_adj: Vec<Vec<(usize, f64)>>,
}

impl SceneOracle {
    pub fn new(scene: PolygonalScene) -> Self {
        let base = build_visibility_graph(&scene, &[]).expect("no extra points");
        SceneOracle {
            scene,
            verts: base.points,
            base_adj: base.adj,
        }
    }

    pub fn scene(&self) -> &PolygonalScene {
        &self.scene
    }

    /// Geodesic shortest path. Symmetric by construction: the query is
    /// evaluated in canonical argument order and reversed as needed.
    pub fn shortest_path(&self, a: &Point, b: &Point) -> Result<(f64, GeoPath), GeometryError> {
        let swap = match (a.x(), a.y()).partial_cmp(&(b.x(), b.y())) {
            Some(Ordering::Greater) => true,
            _ => false,
        };
        let (s, t) = if swap { (b, a) } else { (a, b) };
        let (len, mut pts) = self.directed_shortest(s, t)?;
        if swap {
            pts.reverse();
        }
        Ok((len, GeoPath::from_points(pts)?))
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64, GeometryError> {
        self.shortest_path(a, b).map(|(d, _)| d)
    }

    fn directed_shortest(&self, a: &Point, b: &Point) -> Result<(f64, Vec<Point>), GeometryError> {
        if !self.scene.in_free_space(a) {
            return Err(GeometryError::PointInsideObstacle(0));
        }
        if !self.scene.in_free_space(b) {
            return Err(GeometryError::PointInsideObstacle(1));
        }
        if !self.scene.segment_blocked(a, b) {
            return Ok((a.distance(b), vec![a.clone(), b.clone()]));
        }
        let nv = self.verts.len();
        let ia = nv;
        let ib = nv + 1;
        let n = nv + 2;
        let mut adj: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        adj.extend(self.base_adj.iter().cloned());
        adj.push(Vec::new());
        adj.push(Vec::new());
        for (i, v) in self.verts.iter().enumerate() {
            if !self.scene.segment_blocked(a, v) {
                let w = a.distance(v);
                adj[ia].push((i, w));
                adj[i].push((ia, w));
            }
            if !self.scene.segment_blocked(b, v) {
                let w = b.distance(v);
                adj[ib].push((i, w));
                adj[i].push((ib, w));
            }
        }

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

        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[ia] = 0.0;
        heap.push(State { cost: 0.0, node: ia });
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            if node == ib {
                break;
            }
            for &(next, w) in &adj[node] {
                let cand = cost + w;
                if cand < dist[next] {
                    dist[next] = cand;
                    prev[next] = node;
                    heap.push(State {
                        cost: cand,
                        node: next,
                    });
                }
            }
        }
        if !dist[ib].is_finite() {
            return Err(GeometryError::NoPath);
        }
        let mut chain = vec![ib];
        let mut cur = ib;
        while prev[cur] != usize::MAX {
            cur = prev[cur];
            chain.push(cur);
        }
        chain.reverse();
        let pts = chain
            .into_iter()
            .map(|i| {
                if i == ia {
                    a.clone()
                } else if i == ib {
                    b.clone()
                } else {
                    self.verts[i].clone()
                }
            })
            .collect();
        Ok((dist[ib], pts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(1.0, 1.0),
            Point::xy(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn empty_scene_visibility_is_direct() {
        let scene = PolygonalScene::empty();
        let g = build_visibility_graph(&scene, &[Point::xy(0.0, 0.0), Point::xy(3.0, 4.0)])
            .unwrap();
        assert_eq!(g.points.len(), 2);
        assert_eq!(g.adj[0].len(), 1);
        assert!((g.adj[0][0].1 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn square_blocks_direct_segment() {
        let scene = PolygonalScene::new(vec![unit_square()]).unwrap();
        let a = Point::xy(-1.0, 0.5);
        let b = Point::xy(2.0, 0.5);
        assert!(scene.segment_blocked(&a, &b));
        let oracle = SceneOracle::new(scene);
        let (d, path) = oracle.shortest_path(&a, &b).unwrap();
        // Around the square corners: 1 + 2*sqrt(1.25).
        let expect = 1.0 + 2.0 * 1.25_f64.sqrt();
        assert!((d - expect).abs() < 1e-9, "got {d}, want {expect}");
        assert!((path.total_length() - d).abs() < 1e-9);
    }

    #[test]
    fn boundary_travel_is_free() {
        let scene = PolygonalScene::new(vec![unit_square()]).unwrap();
        // Along the bottom edge of the square.
        assert!(!scene.segment_blocked(&Point::xy(0.0, 0.0), &Point::xy(1.0, 0.0)));
        // Grazing a corner.
        assert!(!scene.segment_blocked(&Point::xy(-1.0, 1.0), &Point::xy(2.0, 1.0)));
    }

    #[test]
    fn degenerate_scene_matches_euclid() {
        let oracle = SceneOracle::new(PolygonalScene::empty());
        let a = Point::xy(0.2, -0.7);
        let b = Point::xy(4.2, 2.3);
        let (d, _) = oracle.shortest_path(&a, &b).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn point_inside_obstacle_rejected() {
        let scene = PolygonalScene::new(vec![unit_square()]).unwrap();
        let err = build_visibility_graph(&scene, &[Point::xy(0.5, 0.5)]);
        assert!(matches!(err, Err(GeometryError::PointInsideObstacle(0))));
    }

    #[test]
    fn overlapping_obstacles_rejected() {
        let a = unit_square();
        let b = Polygon::new(vec![
            Point::xy(0.5, 0.5),
            Point::xy(1.5, 0.5),
            Point::xy(1.5, 1.5),
            Point::xy(0.5, 1.5),
        ])
        .unwrap();
        assert!(PolygonalScene::new(vec![a, b]).is_err());
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = PolygonalScene::new(vec![unit_square()]).unwrap();
        let text = scene.to_json();
        let back = PolygonalScene::from_json(&text).unwrap();
        assert_eq!(back.obstacles().len(), 1);
        assert_eq!(back.obstacles()[0].vertices().len(), 4);
    }
}
