//! Optimal gas flow via warm-started convex relaxation.
//!
//! The crate solves steady-state and quasi-dynamic optimal gas flow (OGF)
//! with a penalty convex-concave procedure over second-order cone
//! subproblems. A small feedforward network predicts nodal pressures from
//! load fluctuations and supplies the linearization point (and the flow
//! directions) for the first iteration. A benchmark harness compares
//! cold-start against warm-start convergence, with a brute-force grid
//! oracle as the optimality reference on tiny networks.
//!
//! Module map:
//! - [`network`]: gas-network data model, serialization, scenario sampling
//! - [`model`]: OGF problem assembly and nonconvex feasibility evaluation
//! - [`socp`]: conic subproblem assembly and the solver contract
//! - [`ccp`]: the penalty convex-concave iteration (warm and cold starts)
//! - [`ann`]: from-scratch MLP with RMSprop training
//! - [`pipeline`]: presolving, synthetic networks, oracle, benchmark, CLI glue

pub mod ann;
pub mod ccp;
pub mod error;
pub mod model;
pub mod network;
pub mod pipeline;
pub mod socp;

pub use error::{Error, Result};
