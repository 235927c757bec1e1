//! Deep Ritz training of ReLU networks on penalized variational energies.
//!
//! The crate covers the full pipeline:
//!
//! - [`net`]: ReLU networks as parameter tuples, realisations and exact input gradients.
//! - [`autodiff`]: a scalar reverse-mode tape that also carries input tangents,
//!   so losses containing `∇ₓu_θ` can be differentiated with respect to `θ`.
//! - [`geometry`]: intervals, hypercubes and balls with exact measures and
//!   uniform interior/boundary samplers.
//! - [`energy`]: Monte-Carlo estimators of the penalized (p-)Dirichlet energy and
//!   tensor-grid quadrature used as a validation oracle.
//! - [`solve`]: Adam, the plateau-stopped training loop, the ladder that grows
//!   width and penalty together, manufactured solutions and error metrics.
//! - [`pwl`]: exact CPWL-to-ReLU constructions and the Kuhn-triangulation interpolant.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below fix `f64`,
//! which is what every experiment and tolerance assumes.

// `!(x > 0)` style guards are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod autodiff;
pub mod energy;
pub mod error;
pub mod field;
pub mod geometry;
pub mod net;
pub mod pwl;
pub mod scalar;
pub mod seed;
pub mod solve;

pub use error::{Error, Result};
pub use field::{FnField, ScalarField};
pub use scalar::Scalar;

pub type Network = net::NetworkParams<f64>;
pub type Network32 = net::NetworkParams<f32>;
pub type Tape = autodiff::Tape<f64>;
pub type Domain = geometry::Domain<f64>;
pub type SampleBatch = geometry::SampleBatch<f64>;
pub type EnergySpec = energy::EnergySpec<f64>;
pub type EnergyEstimate = energy::EnergyEstimate<f64>;
pub type Breakpoints1D = pwl::Breakpoints1D<f64>;
pub type CpwlInterpolant = pwl::CpwlInterpolant<f64>;
pub type ManufacturedCase = solve::ManufacturedCase<f64>;
pub type RungReport = solve::RungReport<f64>;
