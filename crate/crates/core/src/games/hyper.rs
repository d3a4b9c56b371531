//! Hypernetworks and the game H.
//!
//! A hypernetwork couples a board with a labelling of finite node
//! sequences that only depends on the sequences' similarity classes:
//! two nodes are similar when some tuple starting with them carries an
//! atom below the first diagonal, and sequences are compared pointwise.
//! A sequence whose entries span at most `dim` similarity classes is a
//! short hyperedge; the defender must label every short hyperedge with
//! the fixed label λ, so the stored data reduces to the labels of the
//! long hyperedges, keyed by class representatives.  This makes the
//! boards λ-neat and similarity-invariant by construction.
//!
//! The game adds two demands to the cylindrifier move: a transformation
//! move prescribes a relabelling of an earlier board through a partial
//! finite surjection, with the forced answer, and an amalgamation move
//! picks two earlier boards that agree on their common nodes and demands
//! one board extending both.  Fresh hyperlabels are always the least
//! label unused anywhere in the play so far.  Every edge also records
//! which player coloured it and every long hyperedge an envelope, the
//! node set its identity is tied to; both follow the fixed case list of
//! the moves and are bookkeeping only, invisible to move legality.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cyl::CaAtomStructure;
use crate::games::network::{coordinate_patterns, Network, PartialNetwork};
use crate::games::solve::Winner;
use crate::Atom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    Forall,
    Exists,
}

/// Board plus hyperedge data.  `hyper` holds only the long hyperedges,
/// keyed by the sequence of class representatives (least node of each
/// class); every short hyperedge is implicitly labelled `lambda`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypernetwork {
    pub net: Network,
    lambda: usize,
    max_len: usize,
    hyper: BTreeMap<Vec<usize>, usize>,
    owners: BTreeMap<(usize, usize), Owner>,
    envelopes: BTreeMap<Vec<usize>, BTreeSet<usize>>,
}

/// Node partition by similarity, as sorted classes of node names.
/// Components are closed transitively, so the result is a partition even
/// on structures where the underlying relation misbehaves.
pub fn sim_classes(f: &CaAtomStructure, net: &Network) -> Vec<Vec<usize>> {
    let nodes = net.nodes();
    let mut class_of: Vec<usize> = (0..nodes.len()).collect();
    fn root(class_of: &mut Vec<usize>, mut a: usize) -> usize {
        while class_of[a] != a {
            class_of[a] = class_of[class_of[a]];
            a = class_of[a];
        }
        a
    }
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if node_sim(f, net, nodes[i], nodes[j]) {
                let (a, b) = (root(&mut class_of, i), root(&mut class_of, j));
                let (lo, hi) = (a.min(b), a.max(b));
                class_of[hi] = lo;
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let r = root(&mut class_of, i);
        classes.entry(r).or_default().push(nodes[i]);
    }
    classes.into_values().collect()
}

/// Some tuple starting with `x, y` is labelled below the first diagonal.
fn node_sim(f: &CaAtomStructure, net: &Network, x: usize, y: usize) -> bool {
    let dim = net.dim();
    let mut tuple = vec![net.nodes()[0]; dim];
    tuple[0] = x;
    tuple[1] = y;
    fill_tail(f, net, &mut tuple, 2)
}

fn fill_tail(f: &CaAtomStructure, net: &Network, tuple: &mut Vec<usize>, at: usize) -> bool {
    if at == tuple.len() {
        return f.in_diagonal(0, 1, net.label(tuple));
    }
    for &z in net.nodes() {
        tuple[at] = z;
        if fill_tail(f, net, tuple, at + 1) {
            return true;
        }
    }
    false
}

impl Hypernetwork {
    /// Initial board: every edge belongs to the opponent; long
    /// hyperedges, should the board be large enough to have any, get
    /// fresh labels and the whole node set as envelope.
    pub fn initial(
        f: &CaAtomStructure,
        net: Network,
        lambda: usize,
        max_len: usize,
        fresh: &mut usize,
    ) -> Self {
        let mut owners = BTreeMap::new();
        let nodes = net.nodes().to_vec();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                owners.insert((u, v), Owner::Forall);
            }
        }
        let mut h = Hypernetwork {
            net,
            lambda,
            max_len,
            hyper: BTreeMap::new(),
            owners,
            envelopes: BTreeMap::new(),
        };
        let all: BTreeSet<usize> = nodes.iter().copied().collect();
        for key in h.long_keys(f) {
            h.hyper.insert(key.clone(), *fresh);
            *fresh += 1;
            h.envelopes.insert(key, all.clone());
        }
        h
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn owner(&self, u: usize, v: usize) -> Option<Owner> {
        self.owners.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn envelope(&self, f: &CaAtomStructure, seq: &[usize]) -> Option<&BTreeSet<usize>> {
        self.envelopes.get(&self.key_of(f, seq))
    }

    /// Representative sequence of a node sequence.
    fn key_of(&self, f: &CaAtomStructure, seq: &[usize]) -> Vec<usize> {
        let classes = sim_classes(f, &self.net);
        seq.iter()
            .map(|&x| {
                classes
                    .iter()
                    .find(|c| c.contains(&x))
                    .expect("sequence uses board nodes")[0]
            })
            .collect()
    }

    /// Label of any hyperedge: λ when short, the stored label when long.
    pub fn hyperlabel(&self, f: &CaAtomStructure, seq: &[usize]) -> usize {
        assert!(!seq.is_empty() && seq.len() <= self.max_len);
        let key = self.key_of(f, seq);
        let distinct: BTreeSet<usize> = key.iter().copied().collect();
        if distinct.len() <= self.net.dim() {
            self.lambda
        } else {
            *self.hyper.get(&key).expect("long hyperedges are labelled")
        }
    }

    /// Representative-sequence keys of the long hyperedges.
    fn long_keys(&self, f: &CaAtomStructure) -> Vec<Vec<usize>> {
        let classes = sim_classes(f, &self.net);
        let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
        let dim = self.net.dim();
        let mut out = Vec::new();
        let mut seq = Vec::new();
        fn rec(
            reps: &[usize],
            dim: usize,
            max_len: usize,
            seq: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if !seq.is_empty() {
                let distinct: BTreeSet<usize> = seq.iter().copied().collect();
                if distinct.len() > dim {
                    out.push(seq.clone());
                }
            }
            if seq.len() == max_len {
                return;
            }
            for &r in reps {
                seq.push(r);
                rec(reps, dim, max_len, seq, out);
                seq.pop();
            }
        }
        rec(&reps, dim, self.max_len, &mut seq, &mut out);
        out
    }

    /// Data making two boards interchangeable for the game: the network
    /// and the long-hyperedge labels, without the bookkeeping.
    fn state_key(&self) -> (Vec<usize>, Vec<Atom>, Vec<(Vec<usize>, usize)>) {
        (
            self.net.nodes().to_vec(),
            self.net.labels().to_vec(),
            self.hyper.iter().map(|(k, &v)| (k.clone(), v)).collect(),
        )
    }

    /// Boards agree on their common nodes: the networks coincide on all
    /// tuples over the overlap, and so do the hyperlabels of every
    /// sequence over the overlap.
    pub fn agrees_on_overlap(&self, f: &CaAtomStructure, other: &Hypernetwork) -> bool {
        let overlap: Vec<usize> = self
            .net
            .nodes()
            .iter()
            .copied()
            .filter(|v| other.net.contains_node(*v))
            .collect();
        let dim = self.net.dim();
        let mut tuple = vec![0usize; dim];
        if !agree_rec(&overlap, &mut tuple, 0, &mut |t| {
            self.net.label(t) == other.net.label(t)
        }) {
            return false;
        }
        let mut seq = Vec::new();
        all_sequences(&overlap, self.max_len, &mut seq, &mut |s| {
            self.hyperlabel(f, s) == other.hyperlabel(f, s)
        })
    }
}

fn agree_rec(
    nodes: &[usize],
    tuple: &mut Vec<usize>,
    at: usize,
    ok: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if at == tuple.len() {
        return ok(tuple);
    }
    for &v in nodes {
        tuple[at] = v;
        if !agree_rec(nodes, tuple, at + 1, ok) {
            return false;
        }
    }
    true
}

fn all_sequences(
    nodes: &[usize],
    max_len: usize,
    seq: &mut Vec<usize>,
    ok: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if !seq.is_empty() && !ok(seq) {
        return false;
    }
    if seq.len() == max_len {
        return true;
    }
    for &v in nodes {
        seq.push(v);
        let good = all_sequences(nodes, max_len, seq, ok);
        seq.pop();
        if !good {
            return false;
        }
    }
    true
}

/// Least label unused anywhere in the given boards, never below λ + 1.
fn next_fresh(lambda: usize, history: &[Hypernetwork]) -> usize {
    let mut fresh = lambda + 1;
    for h in history {
        for &l in h.hyper.values() {
            fresh = fresh.max(l + 1);
        }
    }
    fresh
}

/// Builds the defender's bookkeeping for a cylindrifier answer: labels
/// away from the new node are inherited through the class-representative
/// renaming, long hyperedges through the new node's class get fresh
/// labels and the full node set as envelope, owners follow the face.
fn after_cylindrifier(
    f: &CaAtomStructure,
    prev: &Hypernetwork,
    net: Network,
    face: &[usize],
    node: usize,
    fresh: &mut usize,
) -> Hypernetwork {
    let mut owners = prev.owners.clone();
    for &v in net.nodes() {
        if v == node {
            continue;
        }
        let key = (v.min(node), v.max(node));
        let owner = if face.contains(&v) { Owner::Forall } else { Owner::Exists };
        owners.insert(key, owner);
    }
    let mut out = Hypernetwork {
        net,
        lambda: prev.lambda,
        max_len: prev.max_len,
        hyper: BTreeMap::new(),
        owners,
        envelopes: BTreeMap::new(),
    };
    let rename = rep_rename(f, prev, &out);
    let all: BTreeSet<usize> = out.net.nodes().iter().copied().collect();
    for key in out.long_keys(f) {
        let old_key: Option<Vec<usize>> = key
            .iter()
            .map(|r| rename.get(r).copied())
            .collect::<Option<Vec<usize>>>();
        match old_key.and_then(|k| prev.hyper.get(&k).map(|&l| (k, l))) {
            Some((old_key, label)) => {
                let envelope = prev.envelopes.get(&old_key).cloned().unwrap_or_else(|| {
                    prev.net.nodes().iter().copied().collect()
                });
                out.hyper.insert(key.clone(), label);
                out.envelopes.insert(key, envelope);
            }
            None => {
                out.hyper.insert(key.clone(), *fresh);
                *fresh += 1;
                out.envelopes.insert(key, all.clone());
            }
        }
    }
    out
}

/// New representative to old representative, where defined: a class of
/// the extended board maps to the old class it contains.
fn rep_rename(f: &CaAtomStructure, prev: &Hypernetwork, now: &Hypernetwork) -> BTreeMap<usize, usize> {
    let old_classes = sim_classes(f, &prev.net);
    let mut out = BTreeMap::new();
    for class in sim_classes(f, &now.net) {
        let old = class
            .iter()
            .find_map(|v| old_classes.iter().find(|c| c.contains(v)));
        if let Some(old) = old {
            out.insert(class[0], old[0]);
        }
    }
    out
}

/// The forced answer to a transformation demand: nodes are the domain of
/// θ, every label is read through θ, and owners and envelopes pull back.
pub fn apply_transformation(
    f: &CaAtomStructure,
    prev: &Hypernetwork,
    theta: &BTreeMap<usize, usize>,
) -> Hypernetwork {
    let nodes: Vec<usize> = theta.keys().copied().collect();
    let dim = prev.net.dim();
    let mut pn = PartialNetwork::empty(dim, nodes.clone());
    let mut tuple = vec![0usize; dim];
    let mut labelled: Vec<(Vec<usize>, Atom)> = Vec::new();
    agree_rec(&nodes, &mut tuple, 0, &mut |t| {
        let image: Vec<usize> = t.iter().map(|&v| theta[&v]).collect();
        labelled.push((t.to_vec(), prev.net.label(&image)));
        true
    });
    let mut net = None;
    for (t, a) in &labelled {
        let ranks: Vec<usize> = t.iter().map(|&v| pn.rank_of(v).unwrap()).collect();
        let index = pn.index_of_ranks(&ranks);
        // The image of a network under composition keeps every law, so
        // the slots are filled directly rather than through the filter.
        pn.force(index, *a);
    }
    pn.complete_each(f, &mut |n| {
        net = Some(n.clone());
        true
    });
    let net = net.expect("every slot was forced");
    let mut owners = BTreeMap::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            let (iu, iv) = (theta[&u], theta[&v]);
            let owner = if iu == iv {
                Owner::Exists
            } else {
                prev.owner(iu, iv).expect("image edge exists")
            };
            owners.insert((u, v), owner);
        }
    }
    let mut out = Hypernetwork {
        net,
        lambda: prev.lambda,
        max_len: prev.max_len,
        hyper: BTreeMap::new(),
        owners,
        envelopes: BTreeMap::new(),
    };
    for key in out.long_keys(f) {
        let image: Vec<usize> = key.iter().map(|&v| theta[&v]).collect();
        let label = prev.hyperlabel(f, &image);
        let old_env = prev
            .envelope(f, &image)
            .cloned()
            .unwrap_or_else(|| prev.net.nodes().iter().copied().collect());
        let envelope = nodes.iter().copied().filter(|v| old_env.contains(&theta[v])).collect();
        out.hyper.insert(key.clone(), label);
        out.envelopes.insert(key, envelope);
    }
    out
}

/// Bookkeeping for an amalgamation answer `joint ⊇ left, right`: labels
/// over one side are inherited from it, straddling long hyperedges get
/// fresh labels and the full node set as envelope, an edge belongs to
/// the opponent exactly when it did on some side.
fn after_amalgamation(
    f: &CaAtomStructure,
    left: &Hypernetwork,
    right: &Hypernetwork,
    net: Network,
    fresh: &mut usize,
) -> Hypernetwork {
    let nodes = net.nodes().to_vec();
    let mut owners = BTreeMap::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            let l = left.owner(u, v);
            let r = right.owner(u, v);
            let owner = match (l, r) {
                (Some(Owner::Forall), _) | (_, Some(Owner::Forall)) => Owner::Forall,
                (None, None) => Owner::Exists,
                _ => Owner::Exists,
            };
            owners.insert((u, v), owner);
        }
    }
    let mut out = Hypernetwork {
        net,
        lambda: left.lambda,
        max_len: left.max_len,
        hyper: BTreeMap::new(),
        owners,
        envelopes: BTreeMap::new(),
    };
    let all: BTreeSet<usize> = nodes.iter().copied().collect();
    for key in out.long_keys(f) {
        let side = [left, right]
            .into_iter()
            .find(|h| key.iter().all(|v| h.net.contains_node(*v)));
        match side {
            Some(h) => {
                let label = h.hyperlabel(f, &key);
                let envelope = h
                    .envelope(f, &key)
                    .cloned()
                    .unwrap_or_else(|| h.net.nodes().iter().copied().collect());
                out.hyper.insert(key.clone(), label);
                out.envelopes.insert(key, envelope);
            }
            None => {
                out.hyper.insert(key.clone(), *fresh);
                *fresh += 1;
                out.envelopes.insert(key, all.clone());
            }
        }
    }
    out
}

/// Classification of a board's hyperedges with the bookkeeping: the
/// similarity classes, every long hyperedge with its label and envelope,
/// and the edge owners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperSummary {
    pub classes: Vec<Vec<usize>>,
    pub long: Vec<(Vec<usize>, usize, BTreeSet<usize>)>,
    pub owners: BTreeMap<(usize, usize), Owner>,
}

pub fn hyperedge_classify(f: &CaAtomStructure, h: &Hypernetwork) -> HyperSummary {
    let classes = sim_classes(f, &h.net);
    let long = h
        .long_keys(f)
        .into_iter()
        .map(|key| {
            let label = *h.hyper.get(&key).expect("long hyperedges are labelled");
            let envelope = h.envelopes.get(&key).cloned().unwrap_or_default();
            (key, label, envelope)
        })
        .collect();
    HyperSummary { classes, long, owners: h.owners.clone() }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HyperMove {
    Initial { atom: Atom },
    /// On the latest board, as in the chain game.
    Cylindrifier { face: Vec<usize>, slot: usize, node: usize, atom: Atom },
    /// Relabel the chosen board through the partial finite surjection
    /// `theta` (pairs sorted by domain node).  The answer is forced.
    Transformation { board: usize, theta: Vec<(usize, usize)> },
    /// Demand one board extending the two chosen ones, which must agree
    /// on their (nonempty) common node set.
    Amalgamation { left: usize, right: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HyperMoveSet {
    Full,
    CylindrifierOnly,
}

#[derive(Clone, Copy, Debug)]
pub struct HyperConfig {
    pub lambda: usize,
    pub node_budget: usize,
    pub search_budget: usize,
    pub max_hyperedge_len: usize,
    pub moves: HyperMoveSet,
}

impl HyperConfig {
    pub fn new(node_budget: usize, search_budget: usize) -> Self {
        HyperConfig {
            lambda: 0,
            node_budget,
            search_budget,
            max_hyperedge_len: 0, // patched to dim + 1 by the solver
            moves: HyperMoveSet::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HyperCertNode {
    RoundsDone,
    ExistsWins(Vec<(HyperMove, Hypernetwork, HyperCertNode)>),
    ForallWins { mv: HyperMove, answers: Vec<(Hypernetwork, HyperCertNode)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperOutcome {
    pub winner: Winner,
    pub cert: Option<HyperCertNode>,
    pub explored: usize,
}

struct Exhausted;

struct HyperSolver<'a> {
    f: &'a CaAtomStructure,
    cfg: HyperConfig,
    spent: usize,
    memo: HashMap<(usize, Vec<(Vec<usize>, Vec<Atom>, Vec<(Vec<usize>, usize)>)>), Winner>,
}

pub fn solve_hypergame(f: &CaAtomStructure, cfg: HyperConfig, rounds: usize) -> HyperOutcome {
    solve_hypergame_from(f, cfg, Vec::new(), rounds)
}

/// Solves the game continued from an already-played sequence of boards,
/// which is how planted positions are analysed.
pub fn solve_hypergame_from(
    f: &CaAtomStructure,
    mut cfg: HyperConfig,
    history: Vec<Hypernetwork>,
    rounds: usize,
) -> HyperOutcome {
    if cfg.max_hyperedge_len == 0 {
        cfg.max_hyperedge_len = f.dim() + 1;
    }
    let mut solver = HyperSolver { f, cfg, spent: 0, memo: HashMap::new() };
    let mut history = history;
    let winner = match solver.eval(&mut history, rounds) {
        Ok(w) => w,
        Err(Exhausted) => {
            return HyperOutcome { winner: Winner::Undetermined, cert: None, explored: solver.spent }
        }
    };
    let cert = match solver.cert(&mut history, rounds) {
        Ok(c) => c,
        Err(Exhausted) => {
            return HyperOutcome { winner: Winner::Undetermined, cert: None, explored: solver.spent }
        }
    };
    HyperOutcome { winner, cert: Some(cert), explored: solver.spent }
}

impl HyperSolver<'_> {
    fn eval(&mut self, history: &mut Vec<Hypernetwork>, rounds_left: usize) -> Result<Winner, Exhausted> {
        if rounds_left == 0 {
            return Ok(Winner::Exists);
        }
        if self.spent >= self.cfg.search_budget {
            return Err(Exhausted);
        }
        self.spent += 1;
        let mut boards: Vec<_> = history.iter().map(Hypernetwork::state_key).collect();
        boards.sort();
        boards.dedup();
        let key = (rounds_left, boards);
        if let Some(&w) = self.memo.get(&key) {
            return Ok(w);
        }
        let mut winner = Winner::Exists;
        let (f, cfg) = (self.f, self.cfg);
        let snapshot = history.clone();
        for mv in hyper_forall_moves(f, &cfg, &snapshot) {
            let mut found = false;
            let mut ran_out = false;
            for_each_hyper_reply(f, &cfg, &snapshot, &mv, &mut |h| {
                history.push(h.clone());
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
            if !found {
                winner = Winner::Forall;
                break;
            }
        }
        self.memo.insert(key, winner);
        Ok(winner)
    }

    fn cert(&mut self, history: &mut Vec<Hypernetwork>, rounds_left: usize) -> Result<HyperCertNode, Exhausted> {
        if rounds_left == 0 {
            return Ok(HyperCertNode::RoundsDone);
        }
        let winner = self.eval(history, rounds_left)?;
        let (f, cfg) = (self.f, self.cfg);
        let snapshot = history.clone();
        let moves = hyper_forall_moves(f, &cfg, &snapshot);
        if winner == Winner::Exists {
            let mut branches = Vec::new();
            for mv in moves {
                let mut chosen = None;
                let mut ran_out = false;
                for_each_hyper_reply(f, &cfg, &snapshot, &mv, &mut |h| {
                    history.push(h.clone());
                    let sub = self.eval(history, rounds_left - 1);
                    history.pop();
                    match sub {
                        Ok(Winner::Exists) => {
                            chosen = Some(h.clone());
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
                let reply = chosen.expect("a defender-won position answers every demand");
                history.push(reply.clone());
                let next = self.cert(history, rounds_left - 1)?;
                history.pop();
                branches.push((mv, reply, next));
            }
            return Ok(HyperCertNode::ExistsWins(branches));
        }
        for mv in moves {
            let mut all_lose = true;
            let mut answers = Vec::new();
            let mut ran_out = false;
            for_each_hyper_reply(f, &cfg, &snapshot, &mv, &mut |h| {
                history.push(h.clone());
                let sub = self.eval(history, rounds_left - 1);
                history.pop();
                match sub {
                    Ok(Winner::Exists) => {
                        all_lose = false;
                        true
                    }
                    Ok(_) => {
                        answers.push(h.clone());
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
            return Ok(HyperCertNode::ForallWins { mv, answers: full });
        }
        unreachable!("an opponent-won position has a winning demand");
    }
}

/// Demands available in H, in order: cylindrifier on the latest board,
/// then transformation demands, then amalgamation demands.
pub fn hyper_forall_moves(
    f: &CaAtomStructure,
    cfg: &HyperConfig,
    history: &[Hypernetwork],
) -> Vec<HyperMove> {
    if history.is_empty() {
        return (0..f.atom_count()).map(|atom| HyperMove::Initial { atom }).collect();
    }
    let dim = f.dim();
    let mut out = Vec::new();
    let last = &history.last().unwrap().net;
    let mut face = vec![0usize; dim - 1];
    faces(last.nodes(), &mut face, 0, &mut |face| {
        if last.node_count() >= cfg.node_budget {
            return;
        }
        let node = (0..).find(|k| !last.contains_node(*k)).unwrap();
        for slot in 0..dim {
            let mut probe = face.to_vec();
            probe.insert(slot, last.nodes()[0]);
            let class = f.class_id(slot, last.label(&probe));
            for atom in 0..f.atom_count() {
                if f.class_id(slot, atom) == class {
                    out.push(HyperMove::Cylindrifier {
                        face: face.to_vec(),
                        slot,
                        node,
                        atom,
                    });
                }
            }
        }
    });
    if cfg.moves == HyperMoveSet::CylindrifierOnly {
        return out;
    }
    for (bi, h) in history.iter().enumerate() {
        for theta in surjections(cfg.node_budget, h.net.nodes()) {
            out.push(HyperMove::Transformation { board: bi, theta });
        }
    }
    for left in 0..history.len() {
        for right in left + 1..history.len() {
            let (m, n) = (&history[left], &history[right]);
            let overlap = m.net.nodes().iter().any(|v| n.net.contains_node(*v));
            let union: BTreeSet<usize> = m
                .net
                .nodes()
                .iter()
                .chain(n.net.nodes())
                .copied()
                .collect();
            if overlap && union.len() <= cfg.node_budget && m.agrees_on_overlap(f, n) {
                out.push(HyperMove::Amalgamation { left, right });
            }
        }
    }
    out
}

fn faces(nodes: &[usize], face: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == face.len() {
        visit(face);
        return;
    }
    for &v in nodes {
        face[at] = v;
        faces(nodes, face, at + 1, visit);
    }
}

/// Partial finite surjections from the pebble universe onto the target
/// nodes, as sorted (domain, image) pairs, identity excluded.
fn surjections(universe: usize, target: &[usize]) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::new();
    fn rec(
        universe: usize,
        target: &[usize],
        from: usize,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let hit: BTreeSet<usize> = current.iter().map(|&(_, v)| v).collect();
        if hit.len() == target.len() && !current.is_empty() {
            let identity = current.iter().all(|&(d, v)| d == v);
            if !identity {
                out.push(current.clone());
            }
        }
        for d in from..universe {
            for &v in target {
                current.push((d, v));
                rec(universe, target, d + 1, current, out);
                current.pop();
            }
        }
    }
    rec(universe, target, 0, &mut current, &mut out);
    out
}

/// Runs `visit` over the defender's legal answers to `mv`.
pub fn for_each_hyper_reply(
    f: &CaAtomStructure,
    cfg: &HyperConfig,
    history: &[Hypernetwork],
    mv: &HyperMove,
    visit: &mut impl FnMut(&Hypernetwork) -> bool,
) -> bool {
    let fresh = next_fresh(cfg.lambda, history);
    match mv {
        HyperMove::Initial { atom } => {
            for pattern in coordinate_patterns(f.dim()) {
                let blocks = pattern.iter().max().unwrap() + 1;
                if blocks > cfg.node_budget {
                    continue;
                }
                let mut pn = PartialNetwork::empty(f.dim(), (0..blocks).collect());
                let index = pn.index_of_ranks(&pattern);
                if !pn.assign_checked(f, index, *atom) {
                    continue;
                }
                let stopped = pn.complete_each(f, &mut |net| {
                    let mut fresh_here = fresh;
                    let h = Hypernetwork::initial(
                        f,
                        net.clone(),
                        cfg.lambda,
                        cfg.max_hyperedge_len,
                        &mut fresh_here,
                    );
                    visit(&h)
                });
                if stopped {
                    return true;
                }
            }
            false
        }
        HyperMove::Cylindrifier { face, slot, node, atom } => {
            let prev = history.last().expect("past the initial round");
            let mut pn = PartialNetwork::extend_with_node(&prev.net, *node);
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
            let prev = prev.clone();
            pn.complete_each(f, &mut |net| {
                let mut fresh_here = fresh;
                let h = after_cylindrifier(f, &prev, net.clone(), face, *node, &mut fresh_here);
                visit(&h)
            })
        }
        HyperMove::Transformation { board, theta } => {
            let map: BTreeMap<usize, usize> = theta.iter().copied().collect();
            let h = apply_transformation(f, &history[*board], &map);
            visit(&h)
        }
        HyperMove::Amalgamation { left, right } => {
            let (m, n) = (history[*left].clone(), history[*right].clone());
            let nodes: BTreeSet<usize> = m
                .net
                .nodes()
                .iter()
                .chain(n.net.nodes())
                .copied()
                .collect();
            let nodes: Vec<usize> = nodes.into_iter().collect();
            let dim = f.dim();
            let mut pn = PartialNetwork::empty(dim, nodes.clone());
            let mut tuple = vec![0usize; dim];
            let mut ok = true;
            agree_rec(&nodes, &mut tuple, 0, &mut |t| {
                let side = [&m, &n]
                    .into_iter()
                    .find(|h| t.iter().all(|v| h.net.contains_node(*v)));
                if let Some(side) = side {
                    let ranks: Vec<usize> = t.iter().map(|&v| pn.rank_of(v).unwrap()).collect();
                    let index = pn.index_of_ranks(&ranks);
                    if !pn.assign_checked(f, index, side.net.label(t)) {
                        ok = false;
                        return false;
                    }
                }
                true
            });
            if !ok {
                return false;
            }
            pn.complete_each(f, &mut |net| {
                let mut fresh_here = fresh;
                let h = after_amalgamation(f, &m, &n, net.clone(), &mut fresh_here);
                visit(&h)
            })
        }
    }
}
