//! Finite cylindric-style atom structures: carriers with per-dimension
//! replacement classes, diagonal atom sets, and index transpositions,
//! plus axiom reports, basic-matrix constructions, and the layered
//! coloured-graph palette used by the game harness.

pub mod axioms;
pub mod matrices;

pub mod rainbow;
pub mod structure;

pub use axioms::{ca_axiom_check, AxiomCheck, CaAxiomReport};
pub use matrices::{basic_matrices, is_cylindric_basis, matrices_to_ca, BasicMatrix, BasisReport};
pub use rainbow::{coloured_graph_check, find_cones, rainbow_ca_atoms, ColouredGraph, EdgeColour, RainbowCaPalette};
pub use structure::{full_set_algebra, seeded_structure, CaAtomStructure, CaComplexAlgebra, CaError};
