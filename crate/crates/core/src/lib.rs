//! Graph-based head and flow state estimation for water distribution networks.
//!
//! The crate composes four layers:
//!
//! * [`graph`]: the network model and every structural matrix derived from it
//!   (incidence, Laplacian, Hazen-Williams resistances, sensor selectors).
//! * [`hydraulics`]: a steady-state Hazen-Williams solver used as ground truth
//!   and to synthesise noisy sensor snapshots.
//! * [`interpolation`] and [`filters`]: the graph-based state interpolation QP
//!   that produces the initial head guess, and the linear/unscented Kalman
//!   filter building blocks.
//! * [`estimators`]: head-only, dual (head UKF + flow KF) and joint
//!   (single UKF over heads and flows) estimators.
//!
//! [`ingest`] reads EPANET INP subsets and CSV sensor files, [`bench`] runs the
//! dual-vs-joint comparison harness.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the I/O layers produce.

pub mod bench;
pub mod error;
pub mod estimators;
pub mod filters;
pub mod graph;
pub mod hydraulics;
pub mod ingest;
pub mod interpolation;
pub mod qp;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{lit, Scalar};

pub type Graph = graph::NetworkGraph<f64>;
pub type Layout = graph::SensorLayout;
pub type Structural = graph::StructuralMatrices<f64>;
pub type State = hydraulics::HydraulicState<f64>;
pub type Belief = filters::GaussianBelief<f64>;
pub type Weights = filters::UtWeights<f64>;
pub type Setup<'a> = estimators::EstimationSetup<'a, f64>;
pub type Gsi = interpolation::GsiSolution<f64>;
