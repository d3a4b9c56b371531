//! Finite algebraic-logic workbench: atom structures for relation and
//! cylindric algebras, the constructions that produce them, atomic games
//! over them, and representation search on small bases.
//!
//! Everything is exact and deterministic: budgets are explicit, random
//! generators take seeds, and every solver verdict can be certified and
//! replayed by independent code.

pub mod constructions;
pub mod cyl;
pub mod doc;
pub mod games;
pub mod graphs;
pub mod ra;
pub mod repsearch;


/// Dense atom identifier. Human-readable names live in a side table on
/// the owning structure.
pub type Atom = usize;
