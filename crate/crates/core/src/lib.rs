//! Scenario-tree motion planning.
//!
//! The planner grows a Monte Carlo search tree over joint world states. Each
//! edge commits the ego vehicle to one target speed, realized as the best
//! Frenet-frame polynomial trajectory along the route, while the surrounding
//! agents are advanced by a multi-modal predictor that sees the ego's motion
//! on that branch.
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod frenet;
pub mod geometry;
pub mod harness;
pub mod planner;
pub mod predictor;
pub mod scene;
pub mod trajgen;
