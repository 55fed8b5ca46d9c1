//! Trajectory planning for fixed-wing traffic patterns.
//!
//! The library is organised in four layers:
//!
//! * [`dynamics`] — closed-form motion primitives (constant speed, climb
//!   rate, and turn rate over a fixed horizon) and their integration.
//! * [`policy`] — action priors over the primitive library, backed by a
//!   3-D occupancy costmap, a uniform fallback, or replayed demonstrations.
//! * [`scenario`] — airspace geometry (axis-aligned regions, runway
//!   patterns), episode sampling, signal derivation, and the temporal-logic
//!   mission specs built from that geometry.
//! * [`planner`] — Monte Carlo tree search whose selection rule blends
//!   visit statistics, the policy prior, and a robustness heuristic from
//!   the mission spec.
//!
//! [`harness`] ties the layers together into reproducible evaluation
//! suites with deterministic reports.

pub mod dynamics;
pub mod harness;
pub mod planner;
pub mod policy;
pub mod scenario;
