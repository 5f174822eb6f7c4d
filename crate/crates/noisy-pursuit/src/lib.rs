//! Simulation laboratory for worst-case target tracking under relative
//! localization noise.
//!
//! A tracker pursues a unit-speed target using only a noisy location sensor
//! whose error is proportional to the tracker-target distance, with
//! proportionality 1/lambda. The crate provides:
//!
//! - geometry primitives for Euclidean d-space, polygonal scenes with
//!   geodesic (visibility-graph) shortest paths, and metric graphs;
//! - the relative-error noise model with Euclidean or geodesic metric;
//! - tracker strategies (continuous greedy with optional speedup, and
//!   phase-committed disc-greedy for obstructed worlds);
//! - worst-case target strategies built on the deferred-branch principle:
//!   the unobstructed phase adversary, the U-shape blind-alley adversary,
//!   and the gadget-graph adversary for path-proportionate error;
//! - parametric builders for the U-shape scene and gadget metric graphs;
//! - a deterministic fixed-timestep engine with two-world bookkeeping,
//!   per-step invariant checking, and CSV trace output;
//! - library entry points backing the `noisy-pursuit` CLI (simulate,
//!   sweep, verify, gen-env, fit).
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod adversaries;
pub mod engine;
pub mod environments;
pub mod geometry;
// pub mod lab;
pub mod sensing;
pub mod targets;
pub mod trackers;

pub use engine::{fit_growth_rate, run, run_two_worlds, RunOutput, SimConfig};
pub use geometry::{Environment, GeoPath, MetricGraph, Point, PolygonalScene, Position};
pub use sensing::{NoiseMetric, NoiseModel};
