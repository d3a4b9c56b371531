//! The games G and F(m): move generation, exhaustive solving with
//! memoization, an independent naive evaluator, certificates and replay.
//!
//! A play alternates a demand by the opponent with a board played by the
//! defender.  In G each round adjoins a fresh node to the latest board;
//! in F(m) the opponent may return to any earlier board and reuse any of
//! the m pebbles, where reuse discards the pebble's old labels (see
//! [`PartialNetwork::extend_with_node`]).  The defender's possible boards
//! are enumerated by the completion search of [`crate::games::network`];
//! her initial boards are canonicalized to the minimal ones, a node per
//! block of the chosen coordinate pattern, since extra isolated nodes
//! only add constraints to maintain and demands to answer.
//!
//! The solver memoizes G positions by the canonical key of the latest
//! board (boards equal up to node renaming share an entry) and F(m)
//! positions by the literal set of boards played.  [`naive_eval`]
//! re-derives the winner with no memoization and reversed exploration
//! order.  [`verify_cert`] replays certificates against move legality
//! recomputed through the complex-algebra oracle rather than the
//! solver's class tables.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cyl::{CaAtomStructure, CaComplexAlgebra};
use crate::games::network::{coordinate_patterns, Network, PartialNetwork};
use crate::ra::atom_set;
use crate::Atom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameKind {
    /// Chain game: every demand targets the latest board and a fresh node.
    G,
    /// Pebble game with the given supply: demands may target any earlier
    /// board and any pebble off the face, including ones already in use.
    F(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Exists,
    Forall,
    /// The search budget ran out before the position was decided.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForallMove {
    /// Initial round: the first board must realize this atom somewhere.
    Initial { atom: Atom },
    /// Demand a board extending `board` by `node`, where the tuple made
    /// of `face` with `node` inserted at position `slot` is labelled
    /// `atom`.  Legal when `atom` lies under the cylindrification of the
    /// current label of that tuple (any filler in place of `node`).
    Cylindrifier {
        board: usize,
        face: Vec<usize>,
        slot: usize,
        node: usize,
        atom: Atom,
    },
}

/// One position of a solver-produced strategy.  For a defender win, the
/// node lists all legal demands with one board answering each; for an
/// opponent win, the winning demand with every legal board, all losing.
/// A demand with an empty answer list is the stuck position that ends
/// the play.  Children are indices into [`StrategyCert::nodes`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CertNode {
    /// All rounds survived.
    RoundsDone,
    ExistsWins(Vec<CertBranch>),
    ForallWins {
        mv: ForallMove,
        answers: Vec<(Network, usize)>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertBranch {
    pub mv: ForallMove,
    pub reply: Network,
    pub next: usize,
}

/// A strategy stored as a table of positions rather than a tree of
/// plays.  Lines that reach the same position share one node: in G a
/// position is the latest board and the rounds left (demands only ever
/// name that board), in F(m) the whole board history.  Sharing keeps
/// certificates polynomial in the number of distinct positions where
/// the play tree is exponential in the round count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyCert {
    pub kind: GameKind,
    pub rounds: usize,
    pub node_budget: usize,
    pub winner: Winner,
    pub root: usize,
    pub nodes: Vec<CertNode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub winner: Winner,
    /// Present when a certificate was requested and the winner is
    /// determined.
    pub cert: Option<StrategyCert>,
    /// Positions the search visited.
    pub explored: usize,
}

struct Exhausted;

#[derive(Hash, PartialEq, Eq)]
enum MemoKey {
    Chain(usize, usize, Vec<Atom>),
    Pebble(usize, Vec<(Vec<usize>, Vec<Atom>)>),
}

/// Literal position identity for certificate sharing.  Unlike
/// [`MemoKey`] this must not identify boards up to renaming: a stored
/// branch names actual nodes, so only positions with byte-equal state
/// may share a certificate node.
#[derive(Hash, PartialEq, Eq)]
enum CertKey {
    Chain(usize, Vec<usize>, Vec<Atom>),
    Pebble(usize, Vec<(Vec<usize>, Vec<Atom>)>),
}

struct Solver<'a> {
    f: &'a CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    budget: usize,
    spent: usize,
    memo: HashMap<MemoKey, Winner>,
    nodes: Vec<CertNode>,
    cert_memo: HashMap<CertKey, usize>,
    done_idx: Option<usize>,
}

/// Exhaustively decides the `rounds`-round game and produces a
/// replayable certificate.  `node_budget` caps board sizes (a demand
/// that would exceed it is not offered to the opponent); `search_budget`
/// caps visited positions, and running out yields an explicit
/// undetermined outcome rather than a guess.
pub fn solve_game(
    f: &CaAtomStructure,
    kind: GameKind,
    rounds: usize,
    node_budget: usize,
    search_budget: usize,
) -> SolveOutcome {
    solve_game_with(f, kind, rounds, node_budget, search_budget, true)
}

/// [`solve_game`] with certificate materialization optional.  Winner-only
/// solving keeps memory at the size of the memo table, which matters when
/// the position space is large but the question is just who wins.
pub fn solve_game_with(
    f: &CaAtomStructure,
    kind: GameKind,
    rounds: usize,
    node_budget: usize,
    search_budget: usize,
    want_cert: bool,
) -> SolveOutcome {
    if let GameKind::F(m) = kind {
        assert!(m > f.dim(), "the pebble supply must exceed the dimension");
    }
    assert!(node_budget <= 8, "boards stay small enough to canonicalize");
    let mut solver = Solver {
        f,
        kind,
        node_budget,
        budget: search_budget,
        spent: 0,
        memo: HashMap::new(),
        nodes: Vec::new(),
        cert_memo: HashMap::new(),
        done_idx: None,
    };
    let mut history = Vec::new();
    let winner = match solver.eval(&mut history, rounds) {
        Ok(w) => w,
        Err(Exhausted) => {
            return SolveOutcome { winner: Winner::Undetermined, cert: None, explored: solver.spent }
        }
    };
    if !want_cert {
        return SolveOutcome { winner, cert: None, explored: solver.spent };
    }
    debug_assert!(history.is_empty());
    let root = match solver.cert(&mut history, rounds) {
        Ok(idx) => idx,
        Err(Exhausted) => {
            return SolveOutcome { winner: Winner::Undetermined, cert: None, explored: solver.spent }
        }
    };
    SolveOutcome {
        winner,
        cert: Some(StrategyCert { kind, rounds, node_budget, winner, root, nodes: solver.nodes }),
        explored: solver.spent,
    }
}

impl Solver<'_> {
    fn eval(&mut self, history: &mut Vec<Network>, rounds_left: usize) -> Result<Winner, Exhausted> {
        if rounds_left == 0 {
            return Ok(Winner::Exists);
        }
        if self.spent >= self.budget {
            return Err(Exhausted);
        }
        self.spent += 1;
        let key = memo_key(self.kind, history, rounds_left);
        if let Some(&w) = self.memo.get(&key) {
            return Ok(w);
        }
        let mut winner = Winner::Exists;
        for mv in forall_moves(self.f, self.kind, self.node_budget, history) {
            if !self.some_reply_wins(history, rounds_left, &mv)? {
                winner = Winner::Forall;
                break;
            }
        }
        self.memo.insert(key, winner);
        Ok(winner)
    }

    fn some_reply_wins(
        &mut self,
        history: &mut Vec<Network>,
        rounds_left: usize,
        mv: &ForallMove,
    ) -> Result<bool, Exhausted> {
        let base = base_board(history, mv);
        let mut found = false;
        let mut ran_out = false;
        for_each_reply(self.f, self.kind, self.node_budget, base.as_ref(), mv, &mut |net| {
            history.push(net.clone());
            let sub = self.eval(history, rounds_left - 1);
            history.pop();
            match sub {
                Ok(Winner::Exists) => {
                    found = true;
                    true
                }
                Ok(_) => false,
                Err(Exhausted) => {
                    ran_out = true;
                    true
                }
            }
        });
        if ran_out {
            return Err(Exhausted);
        }
        Ok(found)
    }

    /// Second pass over the decided game: re-walks the winning region,
    /// which is cheap against the warm memo table, and materializes the
    /// strategy in actual board coordinates.  Returns the index of the
    /// node for the current position, building it on first visit.
    fn cert(&mut self, history: &mut Vec<Network>, rounds_left: usize) -> Result<usize, Exhausted> {
        if rounds_left == 0 {
            if let Some(idx) = self.done_idx {
                return Ok(idx);
            }
            self.nodes.push(CertNode::RoundsDone);
            self.done_idx = Some(self.nodes.len() - 1);
            return Ok(self.nodes.len() - 1);
        }
        let key = cert_key(self.kind, history, rounds_left);
        if let Some(&idx) = self.cert_memo.get(&key) {
            return Ok(idx);
        }
        let node = self.cert_node(history, rounds_left)?;
        let idx = self.nodes.len();
        self.nodes.push(node);
        self.cert_memo.insert(key, idx);
        Ok(idx)
    }

    fn cert_node(
        &mut self,
        history: &mut Vec<Network>,
        rounds_left: usize,
    ) -> Result<CertNode, Exhausted> {
        let winner = self.eval(history, rounds_left)?;
        let moves = forall_moves(self.f, self.kind, self.node_budget, history);
        if winner == Winner::Exists {
            let mut branches = Vec::new();
            for mv in moves {
                let reply = self
                    .first_winning_reply(history, rounds_left, &mv)?
                    .expect("a defender-won position answers every demand");
                history.push(reply.clone());
                let next = self.cert(history, rounds_left - 1)?;
                history.pop();
                branches.push(CertBranch { mv, reply, next });
            }
            return Ok(CertNode::ExistsWins(branches));
        }
        for mv in moves {
            let mut all_lose = true;
            let mut answers = Vec::new();
            let mut ran_out = false;
            let base = base_board(history, &mv);
            for_each_reply(self.f, self.kind, self.node_budget, base.as_ref(), &mv, &mut |net| {
                history.push(net.clone());
                let sub = self.eval(history, rounds_left - 1);
                history.pop();
                match sub {
                    Ok(Winner::Exists) => {
                        all_lose = false;
                        true
                    }
                    Ok(_) => {
                        answers.push(net.clone());
                        false
                    }
                    Err(Exhausted) => {
                        ran_out = true;
                        true
                    }
                }
            });
            if ran_out {
                return Err(Exhausted);
            }
            if !all_lose {
                continue;
            }
            let mut full = Vec::new();
            for reply in answers {
                history.push(reply.clone());
                let next = self.cert(history, rounds_left - 1)?;
                history.pop();
                full.push((reply, next));
            }
            return Ok(CertNode::ForallWins { mv, answers: full });
        }
        unreachable!("an opponent-won position has a winning demand");
    }

    fn first_winning_reply(
        &mut self,
        history: &mut Vec<Network>,
        rounds_left: usize,
        mv: &ForallMove,
    ) -> Result<Option<Network>, Exhausted> {
        let base = base_board(history, mv);
        let mut chosen = None;
        let mut ran_out = false;
        for_each_reply(self.f, self.kind, self.node_budget, base.as_ref(), mv, &mut |net| {
            history.push(net.clone());
            let sub = self.eval(history, rounds_left - 1);
            history.pop();
            match sub {
                Ok(Winner::Exists) => {
                    chosen = Some(net.clone());
                    true
                }
                Ok(_) => false,
                Err(Exhausted) => {
                    ran_out = true;
                    true
                }
            }
        });
        if ran_out {
            return Err(Exhausted);
        }
        Ok(chosen)
    }
}

fn cert_key(kind: GameKind, history: &[Network], rounds_left: usize) -> CertKey {
    match kind {
        GameKind::G => match history.last() {
            Some(last) => CertKey::Chain(rounds_left, last.nodes().to_vec(), last.labels().to_vec()),
            None => CertKey::Chain(rounds_left, Vec::new(), Vec::new()),
        },
        GameKind::F(_) => CertKey::Pebble(
            rounds_left,
            history.iter().map(|n| (n.nodes().to_vec(), n.labels().to_vec())).collect(),
        ),
    }
}

fn memo_key(kind: GameKind, history: &[Network], rounds_left: usize) -> MemoKey {
    match kind {
        // The root (no board yet) keys on the impossible length zero.
        GameKind::G => match history.last() {
            Some(last) => {
                let (len, labels) = last.canonical_key();
                MemoKey::Chain(rounds_left, len, labels)
            }
            None => MemoKey::Chain(rounds_left, 0, Vec::new()),
        },
        GameKind::F(_) => {
            let mut boards: Vec<(Vec<usize>, Vec<Atom>)> = history
                .iter()
                .map(|n| (n.nodes().to_vec(), n.labels().to_vec()))
                .collect();
            boards.sort();
            boards.dedup();
            MemoKey::Pebble(rounds_left, boards)
        }
    }
}

fn base_board(history: &[Network], mv: &ForallMove) -> Option<Network> {
    match mv {
        ForallMove::Initial { .. } => None,
        ForallMove::Cylindrifier { board, .. } => Some(history[*board].clone()),
    }
}

/// Demands available to the opponent, in lexicographic order: history
/// board, face tuple, slot, node, atom.
pub fn forall_moves(
    f: &CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    history: &[Network],
) -> Vec<ForallMove> {
    if history.is_empty() {
        return (0..f.atom_count()).map(|atom| ForallMove::Initial { atom }).collect();
    }
    let dim = f.dim();
    let mut out = Vec::new();
    let boards = match kind {
        GameKind::G => history.len() - 1..history.len(),
        GameKind::F(_) => 0..history.len(),
    };
    for bi in boards {
        let net = &history[bi];
        let mut face = vec![0usize; dim - 1];
        for_each_face(net.nodes(), &mut face, 0, &mut |face| {
            for slot in 0..dim {
                let mut probe = face.to_vec();
                probe.insert(slot, net.nodes()[0]);
                let class = f.class_id(slot, net.label(&probe));
                let nodes_k: Vec<usize> = match kind {
                    GameKind::G => {
                        if net.node_count() < node_budget {
                            vec![least_fresh(net.nodes())]
                        } else {
                            Vec::new()
                        }
                    }
                    GameKind::F(m) => (0..m)
                        .filter(|k| !face.contains(k))
                        .filter(|k| {
                            net.contains_node(*k) || net.node_count() < node_budget
                        })
                        .collect(),
                };
                for k in nodes_k {
                    for atom in 0..f.atom_count() {
                        if f.class_id(slot, atom) == class {
                            out.push(ForallMove::Cylindrifier {
                                board: bi,
                                face: face.to_vec(),
                                slot,
                                node: k,
                                atom,
                            });
                        }
                    }
                }
            }
            false
        });
    }
    out
}

fn for_each_face(nodes: &[usize], face: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if at == face.len() {
        return visit(face);
    }
    for &v in nodes {
        face[at] = v;
        if for_each_face(nodes, face, at + 1, visit) {
            return true;
        }
    }
    false
}

fn least_fresh(nodes: &[usize]) -> usize {
    let mut k = 0;
    while nodes.binary_search(&k).is_ok() {
        k += 1;
    }
    k
}

/// Runs `visit` over the defender's legal boards for `mv`, in the
/// deterministic order of the completion search; `base` must be the
/// demanded history board for a cylindrifier demand.  Returns whether
/// `visit` stopped the enumeration.
pub fn for_each_reply(
    f: &CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    base: Option<&Network>,
    mv: &ForallMove,
    visit: &mut impl FnMut(&Network) -> bool,
) -> bool {
    match mv {
        ForallMove::Initial { atom } => {
            let cap = match kind {
                GameKind::G => node_budget,
                GameKind::F(m) => node_budget.min(m),
            };
            for pattern in coordinate_patterns(f.dim()) {
                let blocks = pattern.iter().max().unwrap() + 1;
                if blocks > cap {
                    continue;
                }
                let mut pn = PartialNetwork::empty(f.dim(), (0..blocks).collect());
                let index = pn.index_of_ranks(&pattern);
                if !pn.assign_checked(f, index, *atom) {
                    continue;
                }
                if pn.complete_each(f, visit) {
                    return true;
                }
            }
            false
        }
        ForallMove::Cylindrifier { face, slot, node, atom, .. } => {
            let base = base.expect("cylindrifier demands name a board");
            let mut pn = PartialNetwork::extend_with_node(base, *node);
            let mut tuple = face.clone();
            tuple.insert(*slot, *node);
            let ranks: Vec<usize> = tuple
                .iter()
                .map(|&v| pn.rank_of(v).expect("face nodes are on the board"))
                .collect();
            let index = pn.index_of_ranks(&ranks);
            if !pn.assign_checked(f, index, *atom) {
                return false;
            }
            pn.complete_each(f, visit)
        }
    }
}

/// Winner of the same game by plain recursion: no memo table, no
/// transposition detection, demands explored in reverse order.  Used as
/// the cross-check for [`solve_game`].
pub fn naive_eval(
    f: &CaAtomStructure,
    kind: GameKind,
    rounds: usize,
    node_budget: usize,
    search_budget: usize,
) -> Winner {
    if let GameKind::F(m) = kind {
        assert!(m > f.dim(), "the pebble supply must exceed the dimension");
    }
    let mut spent = 0usize;
    let mut history = Vec::new();
    match naive_rec(f, kind, node_budget, &mut history, rounds, &mut spent, search_budget) {
        Ok(w) => w,
        Err(Exhausted) => Winner::Undetermined,
    }
}

fn naive_rec(
    f: &CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    history: &mut Vec<Network>,
    rounds_left: usize,
    spent: &mut usize,
    budget: usize,
) -> Result<Winner, Exhausted> {
    if rounds_left == 0 {
        return Ok(Winner::Exists);
    }
    if *spent >= budget {
        return Err(Exhausted);
    }
    *spent += 1;
    let mut moves = forall_moves(f, kind, node_budget, history);
    moves.reverse();
    for mv in moves {
        let base = base_board(history, &mv);
        let mut found = false;
        let mut ran_out = false;
        for_each_reply(f, kind, node_budget, base.as_ref(), &mv, &mut |net| {
            history.push(net.clone());
            let sub = naive_rec(f, kind, node_budget, history, rounds_left - 1, spent, budget);
            history.pop();
            match sub {
                Ok(Winner::Exists) => {
                    found = true;
                    true
                }
                Ok(_) => false,
                Err(Exhausted) => {
                    ran_out = true;
                    true
                }
            }
        });
        if ran_out {
            return Err(Exhausted);
        }
        if !found {
            return Ok(Winner::Forall);
        }
    }
    Ok(Winner::Exists)
}

/// Replays a certificate from scratch.  Move legality is recomputed
/// through the complex-algebra oracle, boards are re-checked against the
/// literal network laws, and completeness of the branch and answer lists
/// is re-established by re-enumerating demands and boards.
///
/// The walk caches verified (node, position) pairs, with the position
/// key recomputed from its own history rather than read off the
/// certificate, so shared nodes are checked once per position they
/// actually stand for and a node reached at two different positions is
/// checked at both.
pub fn verify_cert(f: &CaAtomStructure, cert: &StrategyCert) -> Result<(), String> {
    let root = cert.nodes.get(cert.root).ok_or("root index out of range")?;
    match cert.winner {
        Winner::Exists => {
            if !matches!(root, CertNode::ExistsWins(_) | CertNode::RoundsDone) {
                return Err("a defender certificate must start at a defender node".into());
            }
        }
        Winner::Forall => {
            if !matches!(root, CertNode::ForallWins { .. }) {
                return Err("an opponent certificate must start at a demand".into());
            }
        }
        Winner::Undetermined => return Err("an undetermined outcome has no certificate".into()),
    }
    let mut history = Vec::new();
    let mut seen = HashSet::new();
    walk(f, cert, &mut history, cert.rounds, cert.root, &mut seen)
}

fn walk(
    f: &CaAtomStructure,
    cert: &StrategyCert,
    history: &mut Vec<Network>,
    rounds_left: usize,
    idx: usize,
    seen: &mut HashSet<(usize, CertKey)>,
) -> Result<(), String> {
    if !seen.insert((idx, cert_key(cert.kind, history, rounds_left))) {
        return Ok(());
    }
    let kind = cert.kind;
    let node_budget = cert.node_budget;
    let node = cert.nodes.get(idx).ok_or("node index out of range")?;
    match node {
        CertNode::RoundsDone => {
            if rounds_left != 0 {
                return Err(format!("{rounds_left} rounds left but the strategy ended"));
            }
            Ok(())
        }
        CertNode::ExistsWins(branches) => {
            if rounds_left == 0 {
                return Err("strategy continues past the last round".into());
            }
            let expected = independent_moves(f, kind, node_budget, history);
            if branches.len() != expected.len()
                || branches.iter().zip(&expected).any(|(b, e)| b.mv != *e)
            {
                return Err("branch list does not match the legal demands".into());
            }
            for branch in branches {
                validate_reply(f, kind, node_budget, history, &branch.mv, &branch.reply)?;
                history.push(branch.reply.clone());
                let res = walk(f, cert, history, rounds_left - 1, branch.next, seen);
                history.pop();
                res?;
            }
            Ok(())
        }
        CertNode::ForallWins { mv, answers } => {
            if rounds_left == 0 {
                return Err("a demand is recorded after the last round".into());
            }
            if !independent_moves(f, kind, node_budget, history).contains(mv) {
                return Err(format!("recorded demand is illegal: {mv:?}"));
            }
            let base = base_board(history, mv);
            let mut expected = Vec::new();
            for_each_reply(f, kind, node_budget, base.as_ref(), mv, &mut |net| {
                expected.push(net.clone());
                false
            });
            if answers.len() != expected.len()
                || answers.iter().zip(&expected).any(|((a, _), e)| a != e)
            {
                return Err("answer list does not enumerate every legal board".into());
            }
            for (reply, next) in answers {
                validate_reply(f, kind, node_budget, history, mv, reply)?;
                history.push(reply.clone());
                let res = walk(f, cert, history, rounds_left - 1, *next, seen);
                history.pop();
                res?;
            }
            Ok(())
        }
    }
}

/// Legal demands recomputed from first principles: legality of an atom
/// is membership in the cylindrification of the probed label, evaluated
/// in the complex algebra.
fn independent_moves(
    f: &CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    history: &[Network],
) -> Vec<ForallMove> {
    if history.is_empty() {
        return (0..f.atom_count()).map(|atom| ForallMove::Initial { atom }).collect();
    }
    let ca = CaComplexAlgebra::new(f);
    let dim = f.dim();
    let mut out = Vec::new();
    let boards = match kind {
        GameKind::G => history.len() - 1..history.len(),
        GameKind::F(_) => 0..history.len(),
    };
    for bi in boards {
        let net = &history[bi];
        let mut face = vec![0usize; dim - 1];
        for_each_face(net.nodes(), &mut face, 0, &mut |face| {
            for slot in 0..dim {
                let mut probe = face.to_vec();
                probe.insert(slot, net.nodes()[0]);
                let over = ca.cylindrify(slot, &atom_set(f.atom_count(), [net.label(&probe)]));
                let nodes_k: Vec<usize> = match kind {
                    GameKind::G => {
                        if net.node_count() < node_budget {
                            vec![least_fresh(net.nodes())]
                        } else {
                            Vec::new()
                        }
                    }
                    GameKind::F(m) => (0..m)
                        .filter(|k| !face.contains(k))
                        .filter(|k| net.contains_node(*k) || net.node_count() < node_budget)
                        .collect(),
                };
                for k in nodes_k {
                    for atom in over.ones() {
                        out.push(ForallMove::Cylindrifier {
                            board: bi,
                            face: face.to_vec(),
                            slot,
                            node: k,
                            atom,
                        });
                    }
                }
            }
            false
        });
    }
    out
}

/// First-principles legality of one recorded board.
fn validate_reply(
    f: &CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    history: &[Network],
    mv: &ForallMove,
    reply: &Network,
) -> Result<(), String> {
    reply.check(f).map_err(|e| format!("recorded board breaks a network law: {e}"))?;
    match mv {
        ForallMove::Initial { atom } => {
            let len = reply.node_count();
            let cap = match kind {
                GameKind::G => node_budget,
                GameKind::F(m) => node_budget.min(m),
            };
            if len == 0 || len > cap || reply.nodes() != (0..len).collect::<Vec<_>>() {
                return Err("initial board must use a minimal contiguous node set".into());
            }
            if !(0..reply.tuple_count()).any(|i| reply.label_at(i) == *atom) {
                return Err("initial board does not realize the demanded atom".into());
            }
            Ok(())
        }
        ForallMove::Cylindrifier { board, face, slot, node, atom } => {
            let base = &history[*board];
            let mut nodes = base.nodes().to_vec();
            if let Err(at) = nodes.binary_search(node) {
                nodes.insert(at, *node);
            }
            if reply.nodes() != nodes {
                return Err("board must extend the demanded one by exactly the demanded node".into());
            }
            let mut tuple = face.clone();
            tuple.insert(*slot, *node);
            if reply.label(&tuple) != *atom {
                return Err("board does not carry the demanded label".into());
            }
            // Labels off the demanded node are inherited.
            let dim = f.dim();
            let olds: Vec<usize> = base.nodes().iter().copied().filter(|v| v != node).collect();
            let mut t = vec![0usize; dim];
            check_inherited(base, reply, &olds, &mut t, 0)?;
            Ok(())
        }
    }
}

fn check_inherited(
    base: &Network,
    reply: &Network,
    olds: &[usize],
    tuple: &mut Vec<usize>,
    at: usize,
) -> Result<(), String> {
    if at == tuple.len() {
        if base.label(tuple) != reply.label(tuple) {
            return Err(format!("label of {tuple:?} changed although it avoids the new node"));
        }
        return Ok(());
    }
    for &v in olds {
        tuple[at] = v;
        check_inherited(base, reply, olds, tuple, at + 1)?;
    }
    Ok(())
}

/// A defender that answers scripted demands, or resigns with `None`.
pub trait ExistsStrategy {
    fn respond(
        &mut self,
        f: &CaAtomStructure,
        history: &[Network],
        mv: &ForallMove,
    ) -> Option<Network>;
}

/// Replays a fixed demand script against a strategy.  Every demand must
/// be legal and every response is validated; the transcript of boards is
/// returned with the outcome.
pub fn run_scripted(
    f: &CaAtomStructure,
    kind: GameKind,
    node_budget: usize,
    script: &[ForallMove],
    strategy: &mut dyn ExistsStrategy,
) -> Result<(Vec<Network>, Winner), String> {
    let mut history: Vec<Network> = Vec::new();
    for mv in script {
        if !forall_moves(f, kind, node_budget, &history).contains(mv) {
            return Err(format!("scripted demand is illegal here: {mv:?}"));
        }
        let Some(reply) = strategy.respond(f, &history, mv) else {
            return Ok((history, Winner::Forall));
        };
        validate_reply(f, kind, node_budget, &history, mv, &reply)
            .map_err(|e| format!("strategy played an illegal board: {e}"))?;
        history.push(reply);
    }
    Ok((history, Winner::Exists))
}

/// Defender that copies its answers out of a winning certificate.
pub struct CertStrategy<'a> {
    cert: &'a StrategyCert,
    node: usize,
}

impl<'a> CertStrategy<'a> {
    pub fn new(cert: &'a StrategyCert) -> Self {
        CertStrategy { cert, node: cert.root }
    }
}

impl ExistsStrategy for CertStrategy<'_> {
    fn respond(&mut self, _: &CaAtomStructure, _: &[Network], mv: &ForallMove) -> Option<Network> {
        let CertNode::ExistsWins(branches) = self.cert.nodes.get(self.node)? else {
            return None;
        };
        let branch = branches.iter().find(|b| b.mv == *mv)?;
        self.node = branch.next;
        Some(branch.reply.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyl::{full_set_algebra, seeded_structure};

    const BUDGET: usize = 2_000_000;

    #[test]
    fn one_atom_chain_game_is_a_defender_win() {
        let f = full_set_algebra(1, 3);
        let out = solve_game(&f, GameKind::G, 5, 8, BUDGET);
        assert_eq!(out.winner, Winner::Exists);
        verify_cert(&f, out.cert.as_ref().unwrap()).unwrap();
    }

    #[test]
    fn set_algebra_chain_game_is_a_defender_win() {
        let f = full_set_algebra(2, 3);
        let out = solve_game(&f, GameKind::G, 5, 6, BUDGET);
        assert_eq!(out.winner, Winner::Exists);
        verify_cert(&f, out.cert.as_ref().unwrap()).unwrap();
    }

    #[test]
    fn set_algebra_pebble_game_is_a_defender_win() {
        let f = full_set_algebra(2, 3);
        let out = solve_game(&f, GameKind::F(4), 3, 4, BUDGET);
        assert_eq!(out.winner, Winner::Exists);
        verify_cert(&f, out.cert.as_ref().unwrap()).unwrap();
    }

    /// Merging two replacement classes legalizes demands whose witnesses
    /// were never added: the one-round game cannot tell (old boards stay
    /// valid under the weaker laws), the two-round game loses on the
    /// first unanswerable demand.  The plant is searched mechanically
    /// over every class pair.
    #[test]
    fn a_demand_without_witnesses_flips_the_two_round_game() {
        let f = full_set_algebra(2, 3);
        let mut found = false;
        'merge: for dim in 0..3 {
            for c2 in 1..f.class_count(dim) as u32 {
                for c1 in 0..c2 {
                    let mutated = merge_classes(&f, dim, c1, c2);
                    let one = solve_game(&mutated, GameKind::G, 1, 6, BUDGET);
                    let two = solve_game(&mutated, GameKind::G, 2, 6, BUDGET);
                    if one.winner == Winner::Exists && two.winner == Winner::Forall {
                        let cert = two.cert.unwrap();
                        verify_cert(&mutated, &cert).unwrap();
                        assert!(matches!(cert.nodes[cert.root], CertNode::ForallWins { .. }));
                        // Monotone in rounds: still lost with more rounds.
                        let three = solve_game(&mutated, GameKind::G, 3, 6, BUDGET);
                        assert_eq!(three.winner, Winner::Forall);
                        found = true;
                        break 'merge;
                    }
                }
            }
        }
        assert!(found, "some class merge loses exactly at round two");
    }

    /// Image of the structure with classes `c1` and `c2` of dimension
    /// `dim` merged, ids renumbered to stay contiguous.
    fn merge_classes(f: &CaAtomStructure, dim: usize, c1: u32, c2: u32) -> CaAtomStructure {
        let atoms = f.atom_count();
        let classes: Vec<Vec<u32>> = (0..f.dim())
            .map(|i| {
                (0..atoms)
                    .map(|a| {
                        let c = f.class_id(i, a);
                        if i != dim {
                            c
                        } else if c == c2 {
                            c1
                        } else if c > c2 {
                            c - 1
                        } else {
                            c
                        }
                    })
                    .collect()
            })
            .collect();
        let mut diagonals = Vec::new();
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                diagonals.push(f.diagonal(i, j).clone());
            }
        }
        let mut transpositions = Vec::new();
        for j in 0..f.dim() {
            for i in 0..j {
                transpositions.push((0..atoms).map(|a| f.transpose(i, j, a)).collect());
            }
        }
        CaAtomStructure::new(
            f.dim(),
            f.names().to_vec(),
            classes,
            diagonals,
            transpositions,
        )
        .unwrap()
    }

    #[test]
    fn solver_and_naive_evaluator_agree_on_seeded_structures() {
        for seed in 0..6u64 {
            let f = seeded_structure(seed, 5);
            for kind in [GameKind::G, GameKind::F(4)] {
                for rounds in 1..=3 {
                    let solved = solve_game(&f, kind, rounds, 4, BUDGET);
                    let naive = naive_eval(&f, kind, rounds, 4, BUDGET);
                    assert_eq!(
                        solved.winner, naive,
                        "seed {seed}, {kind:?}, {rounds} rounds"
                    );
                    if let Some(cert) = &solved.cert {
                        verify_cert(&f, cert).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn pebble_outcomes_are_antitone_in_the_supply() {
        for seed in 0..6u64 {
            let f = seeded_structure(seed, 5);
            for rounds in 1..=3 {
                let small = solve_game(&f, GameKind::F(4), rounds, 4, BUDGET).winner;
                let large = solve_game(&f, GameKind::F(5), rounds, 5, BUDGET).winner;
                if large == Winner::Exists {
                    assert_eq!(small, Winner::Exists, "seed {seed}, {rounds} rounds");
                }
            }
        }
    }

    #[test]
    fn winners_are_monotone_in_rounds() {
        for seed in 0..8u64 {
            let f = seeded_structure(seed, 5);
            let mut lost = false;
            for rounds in 1..=3 {
                let w = solve_game(&f, GameKind::G, rounds, 4, BUDGET).winner;
                assert_ne!(w, Winner::Undetermined);
                if lost {
                    assert_eq!(w, Winner::Forall, "seed {seed}: a lost game stays lost");
                }
                lost = w == Winner::Forall;
            }
        }
    }

    #[test]
    fn outcome_is_invariant_under_atom_renaming() {
        for seed in [3u64, 7, 11] {
            let f = seeded_structure(seed, 5);
            let perm: Vec<Atom> = (0..f.atom_count()).rev().collect();
            let renamed = permute_atoms(&f, &perm);
            for rounds in 1..=3 {
                assert_eq!(
                    solve_game(&f, GameKind::G, rounds, 4, BUDGET).winner,
                    solve_game(&renamed, GameKind::G, rounds, 4, BUDGET).winner,
                    "seed {seed}, {rounds} rounds"
                );
            }
        }
    }

    /// Image of the structure under a permutation of the atoms.
    fn permute_atoms(f: &CaAtomStructure, perm: &[Atom]) -> CaAtomStructure {
        let atoms = f.atom_count();
        let mut inverse = vec![0; atoms];
        for (a, &img) in perm.iter().enumerate() {
            inverse[img] = a;
        }
        let names = (0..atoms).map(|a| f.name(inverse[a]).to_string()).collect();
        let classes = (0..f.dim())
            .map(|i| (0..atoms).map(|a| f.class_id(i, inverse[a])).collect())
            .collect();
        let mut diagonals = Vec::new();
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                diagonals.push(atom_set(
                    atoms,
                    (0..atoms).filter(|&a| f.in_diagonal(i, j, inverse[a])),
                ));
            }
        }
        let mut transpositions = Vec::new();
        for j in 0..f.dim() {
            for i in 0..j {
                transpositions.push((0..atoms).map(|a| perm[f.transpose(i, j, inverse[a])]).collect());
            }
        }
        CaAtomStructure::new(f.dim(), names, classes, diagonals, transpositions).unwrap()
    }

    #[test]
    fn certificate_strategy_replays_to_the_solved_outcome() {
        let f = full_set_algebra(2, 3);
        let out = solve_game(&f, GameKind::G, 3, 5, BUDGET);
        assert_eq!(out.winner, Winner::Exists);
        let cert = out.cert.unwrap();
        // Greedy first-branch script out of the certificate.
        let mut script = Vec::new();
        let mut node = cert.root;
        while let CertNode::ExistsWins(branches) = &cert.nodes[node] {
            if branches.is_empty() {
                break;
            }
            script.push(branches[0].mv.clone());
            node = branches[0].next;
        }
        assert_eq!(script.len(), 3);
        let mut strategy = CertStrategy::new(&cert);
        let (transcript, winner) =
            run_scripted(&f, GameKind::G, 5, &script, &mut strategy).unwrap();
        assert_eq!(winner, Winner::Exists);
        assert_eq!(transcript.len(), 3);
    }

    #[test]
    fn exhausted_budget_is_reported_not_guessed() {
        let f = full_set_algebra(2, 3);
        let out = solve_game(&f, GameKind::G, 4, 6, 10);
        assert_eq!(out.winner, Winner::Undetermined);
        assert!(out.cert.is_none());
        assert_eq!(naive_eval(&f, GameKind::G, 4, 6, 10), Winner::Undetermined);
    }

    #[test]
    fn class_mismatched_demands_are_not_offered() {
        let f = full_set_algebra(2, 3);
        let a = f.atom_by_name("p010").unwrap();
        let mut history = Vec::new();
        for_each_reply(&f, GameKind::G, 6, None, &ForallMove::Initial { atom: a }, &mut |net| {
            history.push(net.clone());
            true
        });
        let moves = forall_moves(&f, GameKind::G, 6, &history);
        assert!(!moves.is_empty());
        for mv in &moves {
            let ForallMove::Cylindrifier { board, face, slot, node, atom } = mv else {
                panic!("past round one every demand is a cylindrifier");
            };
            assert_eq!(*board, 0);
            assert!(!face.contains(node));
            let mut probe = face.clone();
            probe.insert(*slot, history[0].nodes()[0]);
            assert!(f.same_class(*slot, *atom, history[0].label(&probe)));
        }
    }
}
