//! Round-based simulator for the BoLD interactive dispute protocol.
//!
//! The crate is layered bottom-up: a toy state machine ([`vm`]), Merkle and
//! accumulator commitments ([`commitment`]), claimed execution histories
//! ([`history`]), the referee state machine ([`graph`]), the timer oracle
//! ([`timers`]), the two players ([`honest`], [`adversary`]), the round game
//! ([`arena`]) and post-hoc cost analysis ([`accounting`]).

pub mod accounting;
pub mod adversary;
pub mod arena;
pub mod cli;
pub mod commitment;
pub mod config;
pub mod error;
pub mod extnat;
pub mod graph;
pub mod history;
pub mod honest;
pub mod timers;
pub mod vm;

pub use error::{Error, Result};
pub use extnat::ExtNat;

/// Rounds are abstract integers starting at 1.
pub type Round = u64;
