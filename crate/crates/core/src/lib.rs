#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Deterministic indoor visible-light-communication simulator with
//! RIS-assisted proactive handover.
//!
//! The crate is layered bottom-up: [`geometry`] and [`optics`] give channel
//! gains, [`ocdma`] separates the APs at the receiver, [`mobility`] moves
//! the user and the blockers, [`handover`] runs the decision logic with
//! element assignments from [`ris_assign`], and [`simkit`] drives seeded
//! trials and sweeps.

pub mod error;
pub mod geometry;
pub mod handover;
pub mod mobility;
pub mod ocdma;
pub mod optics;
pub mod ris_assign;
pub mod simkit;

pub use error::{Error, Result};
