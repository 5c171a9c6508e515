//! Discretized circular Furstenberg sets.
//!
//! Generators for circle families and their point clouds, (δ,q)-set
//! extraction, the three-circle geometry, arc trisection with triple
//! counting, multiplicity fields, and box-counting experiments.

pub mod cli;
pub mod experiments;
pub mod fractal;
pub mod generators;
pub mod geometry;
pub mod incidence;

mod spatial;
