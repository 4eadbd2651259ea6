// SPDX-License-Identifier: Apache-2.0

//! Loading-aware static leakage estimation for gate-level CMOS netlists.

pub mod corpus;
pub mod device;
pub mod error;
pub mod estimator;
pub mod gates;
pub mod kv;
pub mod netlist;
pub mod oracle;
pub mod solver;
pub mod variation;

pub use error::{Error, Result};
