//! Distance and motion primitives for the three environment kinds:
//! Euclidean d-space, 2D polygonal scenes with the geodesic metric, and
//! abstract metric graphs.
//!
//! Everything here is a pure function over immutable inputs.

pub mod graph;
pub mod path;
pub mod point;
pub mod polygon;

pub use graph::{GraphLocation, MetricGraph};
pub use path::{advance_along_path, GeoPath};
pub use point::{euclidean_distance, Point};
pub use polygon::{build_visibility_graph, PolygonalScene, Polygon, SceneOracle};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no path exists between the given locations")]
    NoPath,
    #[error("extra point {0} lies inside an obstacle")]
    PointInsideObstacle(usize),
    #[error("polygon with {0} vertices is degenerate")]
    DegeneratePolygon(usize),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("obstacles {0} and {1} overlap")]
    OverlappingObstacles(usize, usize),
    #[error("edge length {0} must be positive and finite")]
    InvalidEdgeLength(f64),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("graph component containing {0} is disconnected")]
    Disconnected(String),
    #[error("path must contain at least one waypoint")]
    EmptyPath,
    #[error("malformed input: {0}")]
    BadFormat(String),
    #[error("position kind does not match the environment")]
    PositionKindMismatch,
}

/// A location in whichever space the simulation runs in.
#[derive(Clone, Debug, PartialEq)]
pub enum Position {
    Free(Point),
    Graph(GraphLocation),
}

impl Position {
    pub fn as_free(&self) -> Option<&Point> {
        match self {
            Position::Free(p) => Some(p),
            Position::Graph(_) => None,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphLocation> {
        match self {
            Position::Graph(l) => Some(l),
            Position::Free(_) => None,
        }
    }
}

/// One of the three supported worlds, with its distance oracle.
///
/// Distances are Euclidean in unobstructed space and geodesic otherwise;
/// this is the metric reported as D(t) in traces.
#[derive(Clone, Debug)]
pub enum Environment {
    Unobstructed { dim: usize },
    Scene(SceneOracle),
    Graph(MetricGraph),
}

impl Environment {
    pub fn scene(scene: PolygonalScene) -> Self {
        Environment::Scene(SceneOracle::new(scene))
    }

    pub fn distance(&self, a: &Position, b: &Position) -> Result<f64, GeometryError> {
        match (self, a, b) {
            (Environment::Unobstructed { .. }, Position::Free(p), Position::Free(q)) => {
                euclidean_distance(p, q)
            }
            (Environment::Scene(oracle), Position::Free(p), Position::Free(q)) => {
                oracle.distance(p, q)
            }
            (Environment::Graph(g), Position::Graph(p), Position::Graph(q)) => g.distance(p, q),
            _ => Err(GeometryError::PositionKindMismatch),
        }
    }

    /// Shortest path realizing [`Environment::distance`].
    pub fn shortest_path(&self, a: &Position, b: &Position) -> Result<(f64, GeoPath), GeometryError> {
        match (self, a, b) {
            (Environment::Unobstructed { .. }, Position::Free(p), Position::Free(q)) => {
                let d = euclidean_distance(p, q)?;
                Ok((d, GeoPath::from_points(vec![p.clone(), q.clone()])?))
            }
            (Environment::Scene(oracle), Position::Free(p), Position::Free(q)) => {
                oracle.shortest_path(p, q)
            }
            (Environment::Graph(g), Position::Graph(p), Position::Graph(q)) => {
                g.shortest_path(p, q)
            }
            _ => Err(GeometryError::PositionKindMismatch),
        }
    }

    /// Euclidean distance between positions, available wherever positions
    /// embed in the plane (this is the noise metric for relative error).
    pub fn euclidean(&self, a: &Position, b: &Position) -> Result<f64, GeometryError> {
        match (a, b) {
            (Position::Free(p), Position::Free(q)) => euclidean_distance(p, q),
            (Position::Graph(p), Position::Graph(q)) => match self {
                Environment::Graph(g) => {
                    let pa = g
                        .location_xy(p)
                        .ok_or(GeometryError::PositionKindMismatch)?;
                    let pb = g
                        .location_xy(q)
                        .ok_or(GeometryError::PositionKindMismatch)?;
                    Ok(((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt())
                }
                _ => Err(GeometryError::PositionKindMismatch),
            },
            _ => Err(GeometryError::PositionKindMismatch),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Environment::Unobstructed { dim } => *dim,
            _ => 2,
        }
    }
}

/// Geodesic (shortest-path) distance and a realizing path.
///
/// In an unobstructed environment this degenerates to the straight segment.
pub fn geodesic_distance(
    env: &Environment,
    a: &Position,
    b: &Position,
) -> Result<(f64, GeoPath), GeometryError> {
    env.shortest_path(a, b)
}
