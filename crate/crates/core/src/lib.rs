//! Simulation and verification toolkit for random k-ary growing trees.
//!
//! The tree `T_n(k)` is grown by repeatedly picking an edge uniformly at
//! random, splitting it with a new internal node and grafting `k - 1` new
//! leaves on that node. Rescaled by `n^{1/k}` these trees converge to a
//! self-similar fragmentation tree. This crate grows the discrete trees,
//! computes their metric and measure structure exactly, and ties the
//! simulations to the closed-form laws of the limit.
//!
//! Module map:
//!
//! - [`treegrow`]: the growing tree, label pruning and split statistics.
//! - [`marginals`]: marginal subtrees, stick-breaking embeddings,
//!   projections and measures on trees.
//! - [`metricspace`]: path metrics, Hausdorff and Prokhorov distances.
//! - [`crp`]: two-parameter Chinese restaurant processes and the spine and
//!   attachment restaurants read off a tree.
//! - [`analytics`]: special functions, the split law `q_n`, dislocation
//!   densities, Mittag-Leffler moments, simplex quadrature and the marking
//!   kernel.
//! - [`harness`]: exact enumeration oracles and Monte Carlo experiments.

pub mod analytics;
pub mod crp;
mod error;
pub mod harness;
pub mod marginals;
pub mod metricspace;
pub mod rng;
pub mod treegrow;

pub use error::{Error, Result};
