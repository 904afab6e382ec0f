//! Core models for hybrid multi-terminal soft open points (Hybrid MT-SOPs).
//!
//! A Hybrid MT-SOP couples three distribution feeders through three
//! AC/DC converters sharing a DC bus, each converter reaching any feeder
//! through a bank of AC selector switches. This crate holds the pure
//! numerical pieces:
//!
//! - [`capability`]: converter sizing, selector states, feeder
//!   interconnection capacity and capability-chart geometry;
//! - [`network`] and [`powerflow`]: radial feeder data and AC power flow;
//! - [`lossmodel`]: quadratic surrogate of network losses in the three
//!   device powers;
//! - [`dispatch`]: the mixed-integer loss-minimizing dispatch and its
//!   enumeration oracle;
//! - [`study`]: single-hour case-study step and utilization metrics.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and the
//! multi-threaded daily study live in the `sopflex` crate.
//!
//! Sign convention used throughout: a device power `P_j > 0` flows from
//! feeder `j` into the device.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod capability;
pub mod dispatch;
mod error;
pub mod linalg;
pub mod network;
pub mod lossmodel;
pub mod powerflow;
pub mod qp;
pub mod study;

pub use error::{DesignError, DispatchError, LossModelError, NetworkError, PowerFlowError, QpError};
