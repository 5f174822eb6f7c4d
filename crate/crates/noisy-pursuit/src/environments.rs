//! Parametric builders for the worst-case constructions: the U-shape
//! blind-alley scene and the three-channel gadget metric graphs.

use thiserror::Error;

use crate::geometry::{
    GeoPath, GeometryError, GraphLocation, MetricGraph, Point, Polygon, PolygonalScene,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("parameters out of range: {0}")]
    BadParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ---------------------------------------------------------------------------
// U-shape scene
// ---------------------------------------------------------------------------

/// The U-shape scene plus everything a simulation needs to play it: start
/// positions, the two branch routes from the mouth, and the arc length over
/// which the two routes share one observation stream.
#[derive(Clone, Debug)]
pub struct UShapeWorld {
    pub scene: PolygonalScene,
    pub mouth: Point,
    pub tracker_start: Point,
    /// Branch A: straight down the interior channel to the floor.
    pub route_inside: Vec<Point>,
    /// Branch B: around the left arm and away; longer than the shared arc.
    pub route_outside: Vec<Point>,
    /// Arc length at which the shared observation stream ends.
    pub shared_arc: f64,
    /// Lateral separation between equal-arc points of the two routes.
    pub width: f64,
    pub depth: f64,
}

/// Builds a rectilinear U whose channel is so narrow relative to d0/lambda
/// that a target entering the channel and one rounding the outer wall stay
/// observation-equivalent all the way down.
///
/// Channel and wall widths are d0/(6*lambda) each, so equal-arc points of
/// the two routes stay within d0/(4*lambda)*sqrt(2) of each other; the
/// channel depth is fixed at 8*d0.
pub fn build_ushape(d0: f64, lambda: f64) -> Result<UShapeWorld, EnvError> {
    if !(d0 > 0.0) || !(lambda >= 1.0) {
        return Err(EnvError::BadParams(format!("d0={d0}, lambda={lambda}")));
    }
    let slot = d0 / (6.0 * lambda);
    let wall = d0 / (6.0 * lambda);
    let s = slot / 2.0 + wall; // outer half-width
    let depth = 8.0 * d0;
    let escape = 20.0 * d0;

    let poly = Polygon::new(vec![
        Point::xy(-s, 0.0),
        Point::xy(-s, -depth - wall),
        Point::xy(s, -depth - wall),
        Point::xy(s, 0.0),
        Point::xy(slot / 2.0, 0.0),
        Point::xy(slot / 2.0, -depth),
        Point::xy(-slot / 2.0, -depth),
        Point::xy(-slot / 2.0, 0.0),
    ])?;
    let scene = PolygonalScene::new(vec![poly])?;

    let mouth = Point::xy(0.0, 0.0);
    let tracker_start = Point::xy(0.0, d0);
    let route_inside = vec![mouth.clone(), Point::xy(0.0, -depth)];
    let route_outside = vec![
        mouth.clone(),
        Point::xy(-s, 0.0),
        Point::xy(-s, -depth - wall),
        Point::xy(-s - escape, -depth - wall),
    ];

    Ok(UShapeWorld {
        scene,
        mouth,
        tracker_start,
        route_inside,
        route_outside,
        shared_arc: depth,
        width: s,
        depth,
    })
}

// ---------------------------------------------------------------------------
// Gadget metric graphs
// ---------------------------------------------------------------------------

/// Leading stub before the first junction column, as a fraction of d/lambda.
/// The construction works for any small value; this is a config default.
pub const GADGET_STUB_FRACTION: f64 = 0.01;

/// Guaranteed per-phase growth ratio of the gadget chain: 1 + 1/(2*lambda).
pub fn gadget_growth_ratio(lambda: f64) -> f64 {
    1.0 + 1.0 / (2.0 * lambda)
}

/// One gadget inside a (possibly larger) metric graph: the entry node, the
/// three designated equal-length paths, and the three exit nodes.
#[derive(Clone, Debug)]
pub struct GadgetMeta {
    pub entry: usize,
    pub exit_a: usize,
    pub exit_b: usize,
    pub exit_c: usize,
    pub path_a: GeoPath,
    pub path_b: GeoPath,
    pub path_c: GeoPath,
    pub d_i: f64,
    pub lambda: f64,
}

impl GadgetMeta {
    /// (1 + 1/lambda) * d_i, the common length of the three paths.
    pub fn path_length(&self) -> f64 {
        self.d_i + self.d_i / self.lambda
    }
}

/// A standalone single gadget.
#[derive(Clone, Debug)]
pub struct GadgetGraph {
    pub graph: MetricGraph,
    pub meta: GadgetMeta,
}

/// A chain of gadgets (the realized branch of the schema tree), scaled by
/// the guaranteed growth ratio per phase.
#[derive(Clone, Debug)]
pub struct GadgetTree {
    pub graph: MetricGraph,
    pub gadgets: Vec<GadgetMeta>,
    pub d0: f64,
    pub lambda: f64,
}

/// Appends one gadget to `graph`, hanging off existing node `entry`.
///
/// Ladder layout in the zero-width-intersection limit: junction columns
/// every d/(2*lambda) of arc, center junctions every d/(4*lambda), cross
/// edges of length d/(2*lambda) from top and bottom junctions to every
/// second center junction. A short stub precedes the first column and a
/// tail of exactly d/(4*lambda) follows the last one, so the column grid
/// stays aligned while all three paths come out to (1 + 1/lambda) * d.
/// The tail length is forced: any longer and mid-tail points of distinct
/// channels drift beyond d/lambda apart; any shorter and the exits would
/// converge below d/lambda.
pub fn append_gadget(
    graph: &mut MetricGraph,
    entry: usize,
    d: f64,
    lambda: f64,
    tag: &str,
) -> Result<GadgetMeta, EnvError> {
    if !(d > 0.0) || !(lambda >= 1.0) {
        return Err(EnvError::BadParams(format!("d={d}, lambda={lambda}")));
    }
    let u = d / (4.0 * lambda);
    let total = d + d / lambda;
    let stub = GADGET_STUB_FRACTION * d / lambda;
    let tail = u;
    let interior = total - stub - tail;
    if interior <= 0.0 {
        return Err(EnvError::BadParams("gadget interior collapsed".into()));
    }
    // Columns after the first: ceil(interior / (2u)); the first inter-column
    // interval absorbs the remainder and stays in (0, 2u].
    let k = (interior / (2.0 * u)).ceil() as usize;
    let k = k.max(1);
    let first_interval = interior - 2.0 * u * (k as f64 - 1.0);

    let origin = graph.node(entry).xy.unwrap_or([0.0, 0.0]);
    let place = |arc: f64, lane: f64| -> Option<[f64; 2]> {
        Some([origin[0] + arc, origin[1] + lane * 2.0 * u])
    };

    // Column j sits at arc stub + first_interval + (j-1)*2u for j >= 1;
    // column 0 at arc = stub.
    let col_arc = |j: usize| -> f64 {
        if j == 0 {
            stub
        } else {
            stub + first_interval + 2.0 * u * (j as f64 - 1.0)
        }
    };

    let mut top = Vec::with_capacity(k + 1);
    let mut bot = Vec::with_capacity(k + 1);
    let mut mid = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let arc = col_arc(j);
        top.push(graph.add_node(format!("{tag}:T{j}"), place(arc, 1.0)));
        bot.push(graph.add_node(format!("{tag}:B{j}"), place(arc, -1.0)));
        mid.push(graph.add_node(format!("{tag}:C{j}"), place(arc, 0.0)));
    }
    let exit_a = graph.add_node(format!("{tag}:qa"), place(total, 1.0));
    let exit_b = graph.add_node(format!("{tag}:qb"), place(total, -1.0));
    let exit_c = graph.add_node(format!("{tag}:qc"), place(total, 0.0));

    // Edge lists per channel, in traversal order, for path assembly.
    let mut top_edges = Vec::new();
    let mut bot_edges = Vec::new();
    let mut mid_edges = Vec::new();

    top_edges.push(graph.add_edge(entry, top[0], stub)?);
    bot_edges.push(graph.add_edge(entry, bot[0], stub)?);
    mid_edges.push(graph.add_edge(entry, mid[0], stub)?);

    for j in 1..=k {
        let span = if j == 1 { first_interval } else { 2.0 * u };
        top_edges.push(graph.add_edge(top[j - 1], top[j], span)?);
        bot_edges.push(graph.add_edge(bot[j - 1], bot[j], span)?);
        // Center channel keeps a junction every u of arc: one midpoint node
        // per inter-column interval.
        let half = span / 2.0;
        let arc_prev = col_arc(j - 1);
        let m = graph.add_node(format!("{tag}:M{j}"), place(arc_prev + half, 0.0));
        mid_edges.push(graph.add_edge(mid[j - 1], m, half)?);
        mid_edges.push(graph.add_edge(m, mid[j], half)?);
    }

    top_edges.push(graph.add_edge(top[k], exit_a, tail)?);
    bot_edges.push(graph.add_edge(bot[k], exit_b, tail)?);
    mid_edges.push(graph.add_edge(mid[k], exit_c, tail)?);

    // Cross edges tying the channels together at every column.
    for j in 0..=k {
        graph.add_edge(top[j], mid[j], 2.0 * u)?;
        graph.add_edge(bot[j], mid[j], 2.0 * u)?;
    }

    let path_for = |edges: &[usize], graph: &MetricGraph| -> Result<GeoPath, GeometryError> {
        let mut locs = Vec::with_capacity(edges.len() * 2);
        let mut at = entry;
        for &e in edges {
            let ed = *graph.edge(e);
            let (from_off, to_off, next) = if ed.a == at {
                (0.0, ed.len, ed.b)
            } else {
                (ed.len, 0.0, ed.a)
            };
            locs.push(GraphLocation {
                edge: e,
                offset: from_off,
            });
            locs.push(GraphLocation {
                edge: e,
                offset: to_off,
            });
            at = next;
        }
        GeoPath::from_graph_locations(locs)
    };

    let path_a = path_for(&top_edges, graph)?;
    let path_b = path_for(&bot_edges, graph)?;
    let path_c = path_for(&mid_edges, graph)?;

    Ok(GadgetMeta {
        entry,
        exit_a,
        exit_b,
        exit_c,
        path_a,
        path_b,
        path_c,
        d_i: d,
        lambda,
    })
}

/// A single gadget in a fresh graph, with its entry as node 0.
pub fn build_gadget(d: f64, lambda: f64) -> Result<GadgetGraph, EnvError> {
    let mut graph = MetricGraph::new();
    let entry = graph.add_node("entry", Some([0.0, 0.0]));
    let meta = append_gadget(&mut graph, entry, d, lambda, "g0")?;
    Ok(GadgetGraph { graph, meta })
}

/// A chain of `phases` gadgets following the top branch, gadget i scaled by
/// the guaranteed growth ratio to the i-th power. Simulations instead extend
/// the chain lazily along whichever branch each phase resolves to; this
/// eager builder backs environment export and construction checks.
pub fn build_gadget_tree(d0: f64, lambda: f64, phases: u64) -> Result<GadgetTree, EnvError> {
    if phases < 1 {
        return Err(EnvError::BadParams("phases must be >= 1".into()));
    }
    let mut graph = MetricGraph::new();
    let entry = graph.add_node("entry", Some([0.0, 0.0]));
    let mut gadgets = Vec::new();
    let mut at = entry;
    let mut d = d0;
    for i in 0..phases {
        let meta = append_gadget(&mut graph, at, d, lambda, &format!("g{i}"))?;
        at = meta.exit_a;
        d *= gadget_growth_ratio(lambda);
        gadgets.push(meta);
    }
    Ok(GadgetTree {
        graph,
        gadgets,
        d0,
        lambda,
    })
}

/// Dijkstra sweep over a gadget: verifies by measurement (not construction
/// trust) that equal-arc points of the side channels stay within d/lambda
/// of the center channel, that the three path lengths agree, that the
/// designated paths cannot be shortcut, and that the exits diverge.
#[derive(Clone, Copy, Debug)]
pub struct GadgetSweepReport {
    pub len_a: f64,
    pub len_b: f64,
    pub len_c: f64,
    pub max_rel_len_spread: f64,
    pub max_gap_a: f64,
    pub max_gap_b: f64,
    pub gap_bound: f64,
    pub shortcut_slack: f64,
    pub exit_divergence: f64,
    pub samples: usize,
}

impl GadgetSweepReport {
    pub fn passes(&self) -> bool {
        self.max_rel_len_spread <= 1e-12
            && self.max_gap_a <= self.gap_bound + 1e-9
            && self.max_gap_b <= self.gap_bound + 1e-9
            && self.shortcut_slack.abs() <= 1e-9
            && self.exit_divergence >= self.gap_bound - 1e-9
    }
}

pub fn sweep_gadget(
    graph: &MetricGraph,
    meta: &GadgetMeta,
    samples: usize,
) -> Result<GadgetSweepReport, EnvError> {
    let len_a = meta.path_a.total_length();
    let len_b = meta.path_b.total_length();
    let len_c = meta.path_c.total_length();
    let mean = (len_a + len_b + len_c) / 3.0;
    let max_rel_len_spread = [len_a, len_b, len_c]
        .iter()
        .map(|l| (l - mean).abs() / mean)
        .fold(0.0, f64::max);

    let mut max_gap_a: f64 = 0.0;
    let mut max_gap_b: f64 = 0.0;
    for i in 0..=samples {
        let arc = len_c * i as f64 / samples as f64;
        let xc = meta.path_c.position_at(arc);
        let xa = meta.path_a.position_at(arc);
        let xb = meta.path_b.position_at(arc);
        let (lc, la, lb) = match (xc, xa, xb) {
            (
                crate::geometry::Position::Graph(lc),
                crate::geometry::Position::Graph(la),
                crate::geometry::Position::Graph(lb),
            ) => (lc, la, lb),
            _ => unreachable!("gadget paths live on the graph"),
        };
        let d = graph.distances(&lc, &[la, lb]);
        max_gap_a = max_gap_a.max(d[0]);
        max_gap_b = max_gap_b.max(d[1]);
    }

    let entry_loc = graph.node_location(meta.entry)?;
    let exit_a_loc = graph.node_location(meta.exit_a)?;
    let exit_c_loc = graph.node_location(meta.exit_c)?;
    let shortest_to_a = graph.distance(&entry_loc, &exit_a_loc)?;
    let shortcut_slack = shortest_to_a - len_a;
    let exit_divergence = graph.distance(&exit_a_loc, &exit_c_loc)?;

    Ok(GadgetSweepReport {
        len_a,
        len_b,
        len_c,
        max_rel_len_spread,
        max_gap_a,
        max_gap_b,
        gap_bound: meta.d_i / meta.lambda,
        shortcut_slack,
        exit_divergence,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ushape_has_eight_vertices_and_narrow_channel() {
        let w = build_ushape(1.0, 4.0).unwrap();
        assert_eq!(w.scene.obstacles().len(), 1);
        assert_eq!(w.scene.obstacles()[0].vertices().len(), 8);
        assert!(w.width < 1.0 / (2.0 * 4.0));
        assert!(w.scene.obstacles()[0].is_simple());
    }

    #[test]
    fn ushape_width_bound_scales_with_lambda() {
        let w = build_ushape(1.0, 1.0).unwrap();
        assert!(w.width < 0.5);
    }

    #[test]
    fn ushape_routes_start_at_mouth_and_stay_close() {
        let w = build_ushape(1.0, 10.0).unwrap();
        assert_eq!(w.route_inside[0], w.mouth);
        assert_eq!(w.route_outside[0], w.mouth);
        // Equal-arc separation stays within width * sqrt(2).
        let pa = GeoPath::from_points(w.route_inside.clone()).unwrap();
        let pb = GeoPath::from_points(w.route_outside.clone()).unwrap();
        for i in 0..=100 {
            let arc = w.shared_arc * i as f64 / 100.0;
            let a = pa.position_at(arc);
            let b = pb.position_at(arc);
            let gap = a.as_free().unwrap().distance(b.as_free().unwrap());
            assert!(gap <= w.width * 2.0_f64.sqrt() + 1e-12, "gap {gap} at {arc}");
        }
    }

    #[test]
    fn gadget_lengths_and_spacings() {
        let g = build_gadget(1.0, 2.0).unwrap();
        let m = &g.meta;
        assert!((m.path_a.total_length() - 1.5).abs() < 1e-12);
        assert!((m.path_b.total_length() - 1.5).abs() < 1e-12);
        assert!((m.path_c.total_length() - 1.5).abs() < 1e-12);
        assert!((m.path_length() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn gadget_sweep_passes_for_small_lambdas() {
        for lambda in [1.0, 2.0, 4.0, 8.0] {
            let g = build_gadget(1.0, lambda).unwrap();
            let rep = sweep_gadget(&g.graph, &g.meta, 200).unwrap();
            assert!(rep.passes(), "lambda={lambda}: {rep:?}");
        }
    }

    #[test]
    fn gadget_tree_sizes_follow_schedule() {
        let t = build_gadget_tree(1.0, 2.0, 3).unwrap();
        let sizes: Vec<f64> = t.gadgets.iter().map(|g| g.d_i).collect();
        assert!((sizes[0] - 1.0).abs() < 1e-12);
        assert!((sizes[1] - 1.25).abs() < 1e-12);
        assert!((sizes[2] - 1.5625).abs() < 1e-12);
    }

    #[test]
    fn single_phase_tree_is_single_gadget() {
        let t = build_gadget_tree(1.0, 2.0, 1).unwrap();
        assert_eq!(t.gadgets.len(), 1);
    }

    #[test]
    fn chained_gadget_keeps_invariants() {
        let t = build_gadget_tree(1.0, 2.0, 3).unwrap();
        for meta in &t.gadgets {
            let rep = sweep_gadget(&t.graph, meta, 150).unwrap();
            assert!(rep.passes(), "{rep:?}");
        }
    }
}
