//! Constructions of finite relation-algebra atom structures.
//!
//! Each submodule builds a family of atom structures from combinatorial
//! data (graphs, colour palettes, blur systems, functional networks) and
//! exposes the invariants that make the family useful as a test bed:
//! chromatic thresholds, order-preserving colour maps, blur conditions,
//! and neat-reduct correspondences.

pub mod blur;
pub mod hirsch;
pub mod monk;
pub mod rainbow;
