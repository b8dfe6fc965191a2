//! Shared fixtures for the criterion benchmarks.

use thermoflow::{BiWord, FlowSystem, GeodesicFlow, MetricGraph, Potential, Sft, SuspPoint, Suspension};

pub fn theta3() -> GeodesicFlow {
    GeodesicFlow::new(MetricGraph::new(2, vec![(0, 1, 1.0), (0, 1, 1.5), (0, 1, 2.0)])).unwrap()
}

pub fn golden_roofs() -> FlowSystem {
    Suspension::new(Sft::golden_mean(), thermoflow::Roof::new(vec![1.0, 2.0]).unwrap())
        .unwrap()
        .into()
}

/// Per-symbol potential with values cycling through a fixed pattern.
pub fn sample_potential(n: usize) -> Potential {
    let values: Vec<f64> = (0..n).map(|a| [0.3, -0.2, 0.1, 0.0][a % 4]).collect();
    Potential::Cylinder(thermoflow::CylinderPotential::per_symbol(&values))
}

/// Periodic geodesic through a cyclically admissible edge word.
pub fn periodic(flow: &GeodesicFlow, word: &[usize], height: f64) -> SuspPoint {
    SuspPoint {
        base: BiWord::periodic(word).unwrap(),
        height: height.min(0.99 * flow.suspension().roof().get(word[0])),
    }
}
