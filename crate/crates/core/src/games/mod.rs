//! Atomic games on networks and hypernetworks.
//!
//! [`network`] holds the board type shared by every game: a complete
//! labelling of node tuples by atoms of a [`crate::cyl::CaAtomStructure`],
//! together with the completion search that enumerates a player's legal
//! ways to fill in missing labels.  [`solve`] implements the games G and
//! F(m) with an exhaustive solver, an independent naive evaluator, and
//! replayable strategy certificates.  [`hyper`] extends the boards with
//! hyperedge labellings and adds the transformation and amalgamation
//! moves of the game H.  [`rainbow`] runs the scripted strategies of the
//! rainbow palette on coloured-graph boards.

pub mod hyper;
pub mod network;
pub mod rainbow;
pub mod solve;

pub use hyper::{
    hyperedge_classify, sim_classes, solve_hypergame, solve_hypergame_from, HyperConfig,
    HyperMove, HyperMoveSet, HyperOutcome, HyperSummary, Hypernetwork, Owner,
};
pub use network::Network;
pub use rainbow::{
    run_rainbow_scripted, scripted_forall_win_round, ExistsConeStrategy, RainbowResign, RhoMap,
};
pub use solve::{
    naive_eval, run_scripted, solve_game, solve_game_with, verify_cert, CertNode, ExistsStrategy,
    ForallMove, GameKind, SolveOutcome, StrategyCert, Winner,
};
