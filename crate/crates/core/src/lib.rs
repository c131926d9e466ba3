//! Distributionally robust newsvendor on a metric.
//!
//! The crate covers the full pipeline for placing inventory at `n` locations
//! of a metric space when only the mean and (diagonal) variance of demand are
//! known:
//!
//! * [`metric`]: distance matrices, validation, tree and Euclidean instances.
//! * [`partition`]: well-separated hierarchical partitions (WSHPs), the
//!   cluster set `Γ` and the virtual underage costs attached to it.
//! * [`demand`]: demand models, the single-location Scarf quantity,
//!   parametric samplers and the nonnegative worst-case moment distribution.
//! * [`planner`]: the laminar covering LP that yields the inventory plan,
//!   with an independent dense-simplex oracle and an SAA-optimal baseline.
//! * [`offline`]: the exact fulfillment cost (min-cost transportation),
//!   hierarchical fulfillment and its closed-form upper bound.
//! * [`online`]: the hierarchical balance fulfillment policy as an
//!   exact-rational state machine.
//! * [`harness`]: experiment drivers, CSV emission and plotting scripts.

pub mod demand;
pub mod error;
pub mod harness;
pub mod lp;
pub mod metric;
pub mod offline;
pub mod online;
pub mod partition;
pub mod planner;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil;
