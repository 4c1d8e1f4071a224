//! Capacitive model of human body communication channels.
//!
//! Device capacitances follow from geometry ([`geometry`]), combine into a
//! lumped network that can be solved directly ([`network`]) or through the
//! closed-form ratios ([`transfer`]). [`resonance`] recovers the body
//! capacitance from an LC sweep, and [`scenario`] drives everything from
//! config files.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod network;
pub mod quantity;
pub mod resonance;
pub mod scenario;
pub mod transfer;

pub use error::{ConfigError, HbcError, Result};
pub use quantity::{Area, Capacitance, Decibels, Frequency, Inductance, Length, Resistance};
pub use transfer::{ChannelCapacitances, ChannelScenario};
