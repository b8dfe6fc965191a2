//! Geodesic flow on compact metric graphs as a suspension of the
//! non-backtracking edge shift, with the thermodynamic formalism built on top:
//! pressure, equilibrium states, closed-orbit equidistribution, entropy
//! density and large deviations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod biword;
pub mod cat_graph;
pub mod entropy_density;
pub mod ldp;
pub mod markov;
pub mod orbits;
pub mod potential;
pub mod sft;
pub mod stats;
pub mod suspension;
pub mod thermo;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use biword::BiWord;
pub use cat_graph::{ClosedGeodesic, GeodesicFlow, MetricGraph};
pub use entropy_density::{ApproxTarget, Approximation, GluedFamily};
pub use markov::{MarkovMeasure, SuspendedMeasure};
pub use potential::{CylinderPotential, DistancePotential, FlowSystem, Potential};
pub use stats::{EmpiricalMeasure, WeakStarConfig};
pub use sft::{Sft, Symbol};
pub use thermo::{PressureMethod, PressureReport};
pub use suspension::{OrbitSegment, Roof, SuspPoint, Suspension};
