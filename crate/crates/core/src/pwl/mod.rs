//! Exact CPWL ↔ ReLU constructions and the Kuhn-triangulation interpolant.

mod breakpoints;
mod kuhn;
mod maxtree;

pub use breakpoints::{pwl_to_network_1d, Breakpoints1D};
pub use kuhn::{
    bump, bump_gradient, kuhn_interpolant, sobolev_error, sobolev_error_on, CpwlInterpolant,
    SobolevError,
};
pub use maxtree::{max_tree_depth, negate, relu_max, relu_min};
