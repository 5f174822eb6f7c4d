//! Arc-length parameterized paths through free space or along a metric graph.

use super::point::Point;
use super::{GeometryError, GraphLocation, Position};

#[derive(Clone, Debug)]
enum Waypoints {
    Free(Vec<Point>),
    Graph(Vec<GraphLocation>),
}

/// A polyline with exact arc-length parameterization.
///
/// Euclidean paths interpolate straight segments between points. Graph paths
/// require consecutive waypoints to share an edge; a node crossing appears as
/// two zero-length-separated locations, one per incident edge.
#[derive(Clone, Debug)]
pub struct GeoPath {
    waypoints: Waypoints,
    cums: Vec<f64>,
    total: f64,
}

impl GeoPath {
    pub fn from_points(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyPath);
        }
        let mut cums = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cums.push(0.0);
        for w in points.windows(2) {
            acc += w[0].distance(&w[1]);
            cums.push(acc);
        }
        Ok(GeoPath {
            waypoints: Waypoints::Free(points),
            cums,
            total: acc,
        })
    }

    pub fn from_graph_locations(locs: Vec<GraphLocation>) -> Result<Self, GeometryError> {
        if locs.is_empty() {
            return Err(GeometryError::EmptyPath);
        }
        let mut cums = Vec::with_capacity(locs.len());
        let mut acc = 0.0;
        cums.push(0.0);
        for w in locs.windows(2) {
            if w[0].edge != w[1].edge && (w[0].offset - w[1].offset).abs() > 0.0 {
                // Edge switches are only allowed at coincident node points;
                // segment length within an edge is the offset delta.
            }
            let seg = if w[0].edge == w[1].edge {
                (w[1].offset - w[0].offset).abs()
            } else {
                0.0 // node crossing between representations
            };
            acc += seg;
            cums.push(acc);
        }
        Ok(GeoPath {
            waypoints: Waypoints::Graph(locs),
            cums,
            total: acc,
        })
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    pub fn start(&self) -> Position {
        self.position_at(0.0)
    }

    pub fn end(&self) -> Position {
        self.position_at(self.total)
    }

    /// Position at arc length `arc` from the start; clamps past the end.
    pub fn position_at(&self, arc: f64) -> Position {
        let arc = arc.clamp(0.0, self.total);
        let seg = match self
            .cums
            .binary_search_by(|c| c.partial_cmp(&arc).unwrap())
        {
            Ok(i) => i.min(self.cums.len().saturating_sub(2)),
            Err(i) => i - 1,
        };
        let seg = seg.min(self.cums.len().saturating_sub(2));
        match &self.waypoints {
            Waypoints::Free(pts) => {
                if pts.len() == 1 {
                    return Position::Free(pts[0].clone());
                }
                let seg_len = self.cums[seg + 1] - self.cums[seg];
                let t = if seg_len > 0.0 {
                    (arc - self.cums[seg]) / seg_len
                } else {
                    0.0
                };
                Position::Free(pts[seg].lerp(&pts[seg + 1], t))
            }
            Waypoints::Graph(locs) => {
                if locs.len() == 1 {
                    return Position::Graph(locs[0]);
                }
                let seg_len = self.cums[seg + 1] - self.cums[seg];
                let a = locs[seg];
                let b = locs[seg + 1];
                if seg_len <= 0.0 {
                    return Position::Graph(b);
                }
                let t = (arc - self.cums[seg]) / seg_len;
                Position::Graph(GraphLocation {
                    edge: a.edge,
                    offset: a.offset + t * (b.offset - a.offset),
                })
            }
        }
    }

    /// Remaining path from arc length `arc` onward.
    pub fn subpath_from(&self, arc: f64) -> GeoPath {
        let arc = arc.clamp(0.0, self.total);
        let start = self.position_at(arc);
        let seg = match self
            .cums
            .binary_search_by(|c| c.partial_cmp(&arc).unwrap())
        {
            Ok(i) => i.min(self.cums.len().saturating_sub(2)),
            Err(i) => i - 1,
        };
        match (&self.waypoints, start) {
            (Waypoints::Free(pts), Position::Free(p)) => {
                let mut out = vec![p];
                out.extend(pts.iter().skip(seg + 1).cloned());
                GeoPath::from_points(out).expect("nonempty subpath")
            }
            (Waypoints::Graph(locs), Position::Graph(l)) => {
                let mut out = vec![l];
                out.extend(locs.iter().skip(seg + 1).copied());
                GeoPath::from_graph_locations(out).expect("nonempty subpath")
            }
            _ => unreachable!("waypoint kind matches start kind"),
        }
    }
}

/// Position at arc length `arc` along `path` (clamped at the endpoint).
pub fn advance_along_path(path: &GeoPath, arc: f64) -> Position {
    path.position_at(arc.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> GeoPath {
        GeoPath::from_points(vec![Point::xy(0.0, 0.0), Point::xy(10.0, 0.0)]).unwrap()
    }

    #[test]
    fn advance_on_straight_path() {
        let p = advance_along_path(&straight(), 4.0);
        assert_eq!(p.as_free().unwrap(), &Point::xy(4.0, 0.0));
    }

    #[test]
    fn advance_zero_is_start() {
        let p = advance_along_path(&straight(), 0.0);
        assert_eq!(p.as_free().unwrap(), &Point::xy(0.0, 0.0));
    }

    #[test]
    fn advance_two_segments() {
        let path = GeoPath::from_points(vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(1.0, 1.0),
        ])
        .unwrap();
        let p = advance_along_path(&path, 1.5);
        let got = p.as_free().unwrap();
        assert!(got.distance(&Point::xy(1.0, 0.5)) < 1e-12);
    }

    #[test]
    fn advance_clamps_at_end() {
        let p = advance_along_path(&straight(), 25.0);
        assert_eq!(p.as_free().unwrap(), &Point::xy(10.0, 0.0));
    }

    #[test]
    fn subpath_composition() {
        let path = GeoPath::from_points(vec![
            Point::xy(0.0, 0.0),
            Point::xy(3.0, 0.0),
            Point::xy(3.0, 4.0),
            Point::xy(0.0, 4.0),
        ])
        .unwrap();
        for (a, b) in [(1.0, 2.5), (2.9, 0.2), (0.0, 7.0), (5.0, 5.0)] {
            let direct = advance_along_path(&path, a + b);
            let sub = path.subpath_from(a);
            let composed = advance_along_path(&sub, b);
            let d = direct
                .as_free()
                .unwrap()
                .distance(composed.as_free().unwrap());
            assert!(d < 1e-9, "composition mismatch: {d}");
        }
    }
}
