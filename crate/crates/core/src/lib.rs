//! Coincident-peak (CP) pricing games for flexible loads.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation: CP cost allocation, feasible action generation, best
//! responses, best-response and fictitious-play dynamics, information
//! provider signals and peak-shaving metrics. File formats, the synthetic
//! data generator and the command line live in the `cpgame` crate.
//!
//! Conventions used throughout:
//!
//! * Intervals are 0-based internally. Every file format is 1-based.
//! * Power is in MW. Energy is in MW·interval, so a budget over a
//!   96-interval day with a flat 1000 MW load is 96 000.
//! * Costs are in dollars. Energy prices are $/MWh and are converted with
//!   the grid's interval duration.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod actions;
pub mod allocation;
pub mod bestresponse;
pub mod dynamics;
mod error;
pub mod infoprovider;
pub mod metrics;
pub mod model;
pub mod seed;

pub use error::{CpError, Result};
