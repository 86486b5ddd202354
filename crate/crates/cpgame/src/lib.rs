//! Files, synthetic data, experiment drivers and the command line for the
//! coincident-peak game simulator in `cpgame-core`.

// Negated comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod manifest;
pub mod presets;
pub mod synthetic;

pub use cpgame_core as core;
pub use error::AppError;
