//! Deterministic UAV search-mission simulator.

pub mod ablate;
pub mod coverage;
pub mod error;
pub mod eval;
pub mod flight;
pub mod geometry;
pub mod mission;
pub mod navigation;
pub mod runner;
pub mod selection;
pub mod sensor;
pub mod world;

pub use error::{Error, Result};
