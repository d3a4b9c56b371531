//! Boards of the atomic games: total atom labellings of node tuples.
//!
//! A network over an `n`-dimensional atom structure assigns an atom to
//! every `n`-tuple of its nodes, subject to three laws checked literally
//! against the structure's relations:
//!
//! * a tuple equal at coordinates `i` and `j` carries an atom below the
//!   diagonal of `(i, j)`,
//! * rewriting one coordinate keeps the label inside the same
//!   replacement class of that dimension,
//! * permuting two coordinates maps the label through the corresponding
//!   transposition.
//!
//! [`PartialNetwork`] is the same board with holes; its completion
//! search enumerates, in lexicographic order, every total labelling a
//! player could legally answer with.

use serde::{Deserialize, Serialize};

use crate::cyl::CaAtomStructure;
use crate::Atom;

/// Complete board.  Labels are stored densely over node ranks in mixed
/// radix, most significant coordinate first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Network {
    dim: usize,
    nodes: Vec<usize>,
    labels: Vec<Atom>,
}

impl Network {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, v: usize) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    pub fn rank_of(&self, v: usize) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }

    pub fn tuple_count(&self) -> usize {
        self.nodes.len().pow(self.dim as u32)
    }

    pub fn index_of_ranks(&self, ranks: &[usize]) -> usize {
        index_of_ranks(self.nodes.len(), ranks)
    }

    pub fn label_at(&self, index: usize) -> Atom {
        self.labels[index]
    }

    pub fn labels(&self) -> &[Atom] {
        &self.labels
    }

    pub fn label_by_ranks(&self, ranks: &[usize]) -> Atom {
        self.labels[self.index_of_ranks(ranks)]
    }

    /// Label of a tuple given by node names.
    pub fn label(&self, tuple: &[usize]) -> Atom {
        let ranks: Vec<usize> = tuple
            .iter()
            .map(|&v| self.rank_of(v).expect("tuple uses a board node"))
            .collect();
        self.label_by_ranks(&ranks)
    }

    /// Checks the three network laws literally, one tuple at a time.
    pub fn check(&self, f: &CaAtomStructure) -> Result<(), String> {
        if self.dim != f.dim() {
            return Err(format!(
                "board dimension {} does not match the structure's {}",
                self.dim,
                f.dim()
            ));
        }
        let len = self.nodes.len();
        let mut ranks = vec![0usize; self.dim];
        for (index, &a) in self.labels.iter().enumerate() {
            if a >= f.atom_count() {
                return Err(format!("label {a} is not an atom"));
            }
            decode_ranks(len, self.dim, index, &mut ranks);
            for j in 0..self.dim {
                for i in 0..j {
                    if ranks[i] == ranks[j] && !f.in_diagonal(i, j, a) {
                        return Err(format!(
                            "tuple {:?} repeats a node at coordinates {i}, {j} but its \
                             label {} is not below that diagonal",
                            self.tuple_names(&ranks),
                            f.name(a)
                        ));
                    }
                    let swapped = index_of_ranks(len, &swap_ranks(&ranks, i, j));
                    if self.labels[swapped] != f.transpose(i, j, a) {
                        return Err(format!(
                            "swapping coordinates {i}, {j} of tuple {:?} does not follow \
                             the transposition of the labels",
                            self.tuple_names(&ranks)
                        ));
                    }
                }
            }
            for i in 0..self.dim {
                for d in 0..len {
                    if d == ranks[i] {
                        continue;
                    }
                    let mut other = ranks.clone();
                    other[i] = d;
                    let b = self.labels[index_of_ranks(len, &other)];
                    if !f.same_class(i, a, b) {
                        return Err(format!(
                            "rewriting coordinate {i} of tuple {:?} leaves the replacement \
                             class of dimension {i}",
                            self.tuple_names(&ranks)
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn tuple_names(&self, ranks: &[usize]) -> Vec<usize> {
        ranks.iter().map(|&r| self.nodes[r]).collect()
    }

    /// Label vector after renaming nodes to their ranks and minimizing
    /// lexicographically over all node permutations.  Two boards get the
    /// same key exactly when some node bijection carries one onto the
    /// other, which is the memoization granularity of the solver.
    pub fn canonical_key(&self) -> (usize, Vec<Atom>) {
        let len = self.nodes.len();
        assert!(len <= 8, "canonical form is only computed for small boards");
        let mut perm: Vec<usize> = (0..len).collect();
        let mut best: Option<Vec<Atom>> = None;
        permute(&mut perm, 0, &mut |p| {
            let relabelled = self.relabel(p);
            if best.as_ref().map_or(true, |b| relabelled < *b) {
                best = Some(relabelled);
            }
        });
        (len, best.unwrap_or_default())
    }

    /// Labels after sending the node of rank `r` to rank `perm[r]`.
    fn relabel(&self, perm: &[usize]) -> Vec<Atom> {
        let len = self.nodes.len();
        let mut out = vec![0; self.labels.len()];
        let mut ranks = vec![0usize; self.dim];
        for (index, &a) in self.labels.iter().enumerate() {
            decode_ranks(len, self.dim, index, &mut ranks);
            let image: Vec<usize> = ranks.iter().map(|&r| perm[r]).collect();
            out[index_of_ranks(len, &image)] = a;
        }
        out
    }
}

/// Mixed-radix rank of a tuple of node ranks.
pub(crate) fn index_of_ranks(len: usize, ranks: &[usize]) -> usize {
    ranks.iter().fold(0, |acc, &r| {
        debug_assert!(r < len);
        acc * len + r
    })
}

pub(crate) fn decode_ranks(len: usize, dim: usize, mut index: usize, out: &mut [usize]) {
    for i in (0..dim).rev() {
        out[i] = index % len;
        index /= len;
    }
}

fn swap_ranks(ranks: &[usize], i: usize, j: usize) -> Vec<usize> {
    let mut out = ranks.to_vec();
    out.swap(i, j);
    out
}

fn permute(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for swap in at..items.len() {
        items.swap(at, swap);
        permute(items, at + 1, visit);
        items.swap(at, swap);
    }
}

/// Set partitions of the coordinates as restricted growth strings: every
/// shape an initial tuple can take, blocks numbered by first occurrence.
pub(crate) fn coordinate_patterns(dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    fn rec(current: &mut Vec<usize>, at: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if at == current.len() {
            out.push(current.clone());
            return;
        }
        for block in 0..=max_used + 1 {
            current[at] = block;
            rec(current, at + 1, max_used.max(block), out);
        }
    }
    if dim > 0 {
        rec(&mut current, 1, 0, &mut out);
    }
    out
}

/// Board with holes, plus the legality-guided completion search.
#[derive(Clone, Debug)]
pub struct PartialNetwork {
    dim: usize,
    nodes: Vec<usize>,
    labels: Vec<Option<Atom>>,
}

impl PartialNetwork {
    pub fn empty(dim: usize, nodes: Vec<usize>) -> Self {
        assert!(nodes.windows(2).all(|w| w[0] < w[1]), "nodes sorted and distinct");
        let labels = vec![None; nodes.len().pow(dim as u32)];
        PartialNetwork { dim, nodes, labels }
    }

    /// Board obtained from `base` by adjoining node `k` with every label
    /// through `k` still open.  When `k` is already on the board (pebble
    /// reuse in F(m)) its old labels are discarded: the demanded label
    /// plus the completion search re-fill them from scratch, which is the
    /// overwrite reading of reuse.  Labels avoiding `k` are kept.
    pub fn extend_with_node(base: &Network, k: usize) -> Self {
        let mut nodes = base.nodes().to_vec();
        if let Err(at) = nodes.binary_search(&k) {
            nodes.insert(at, k);
        }
        let dim = base.dim();
        let len = nodes.len();
        let mut labels = vec![None; len.pow(dim as u32)];
        let mut ranks = vec![0usize; dim];
        for index in 0..labels.len() {
            decode_ranks(len, dim, index, &mut ranks);
            if ranks.iter().any(|&r| nodes[r] == k) {
                continue;
            }
            let old: Vec<usize> = ranks
                .iter()
                .map(|&r| base.rank_of(nodes[r]).expect("old node"))
                .collect();
            labels[index] = Some(base.label_by_ranks(&old));
        }
        PartialNetwork { dim, nodes, labels }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn rank_of(&self, v: usize) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }

    pub fn index_of_ranks(&self, ranks: &[usize]) -> usize {
        index_of_ranks(self.nodes.len(), ranks)
    }

    /// Atoms the open slot `index` can take given every label already
    /// placed: diagonal membership and transposition self-fixedness for
    /// repeated coordinates, class agreement with each single-coordinate
    /// rewrite, and the transposition law against each assigned
    /// coordinate swap, both directions.
    pub fn candidates(&self, f: &CaAtomStructure, index: usize) -> Vec<Atom> {
        let len = self.nodes.len();
        let mut ranks = vec![0usize; self.dim];
        decode_ranks(len, self.dim, index, &mut ranks);
        let mut out = Vec::new();
        'atoms: for a in 0..f.atom_count() {
            for j in 0..self.dim {
                for i in 0..j {
                    if ranks[i] == ranks[j] {
                        if !f.in_diagonal(i, j, a) || f.transpose(i, j, a) != a {
                            continue 'atoms;
                        }
                    } else {
                        let swapped = index_of_ranks(len, &swap_ranks(&ranks, i, j));
                        if let Some(b) = self.labels[swapped] {
                            if f.transpose(i, j, a) != b || f.transpose(i, j, b) != a {
                                continue 'atoms;
                            }
                        }
                    }
                }
            }
            for i in 0..self.dim {
                for d in 0..len {
                    if d == ranks[i] {
                        continue;
                    }
                    let mut other = ranks.clone();
                    other[i] = d;
                    if let Some(b) = self.labels[index_of_ranks(len, &other)] {
                        if !f.same_class(i, a, b) {
                            continue 'atoms;
                        }
                    }
                }
            }
            out.push(a);
        }
        out
    }

    /// Places `atom` at `index` unconditionally, for labellings known to
    /// satisfy the laws by construction.
    pub fn force(&mut self, index: usize, atom: Atom) {
        self.labels[index] = Some(atom);
    }

    /// Places `atom` at `index` if the candidate filter allows it.
    pub fn assign_checked(&mut self, f: &CaAtomStructure, index: usize, atom: Atom) -> bool {
        if self.labels[index].is_some() || !self.candidates(f, index).contains(&atom) {
            return false;
        }
        self.labels[index] = Some(atom);
        true
    }

    /// Runs `visit` on every completion of the open slots, candidates in
    /// ascending atom order, slots in ascending index order.  `visit`
    /// returning `true` stops the search; the return value says whether
    /// it stopped.  An already-total board yields itself once.
    pub fn complete_each(
        &mut self,
        f: &CaAtomStructure,
        visit: &mut impl FnMut(&Network) -> bool,
    ) -> bool {
        let open: Vec<usize> = (0..self.labels.len())
            .filter(|&i| self.labels[i].is_none())
            .collect();
        self.fill(f, &open, 0, visit)
    }

    fn fill(
        &mut self,
        f: &CaAtomStructure,
        open: &[usize],
        at: usize,
        visit: &mut impl FnMut(&Network) -> bool,
    ) -> bool {
        if at == open.len() {
            return visit(&self.snapshot());
        }
        let index = open[at];
        for a in self.candidates(f, index) {
            self.labels[index] = Some(a);
            let stop = self.fill(f, open, at + 1, visit);
            self.labels[index] = None;
            if stop {
                return true;
            }
        }
        false
    }

    fn snapshot(&self) -> Network {
        Network {
            dim: self.dim,
            nodes: self.nodes.clone(),
            labels: self.labels.iter().map(|l| l.expect("total board")).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyl::full_set_algebra;

    fn one_atom_structure() -> CaAtomStructure {
        full_set_algebra(1, 3)
    }

    #[test]
    fn tuple_indexing_round_trips() {
        let mut ranks = vec![0usize; 3];
        for len in 1..5usize {
            for index in 0..len.pow(3) {
                decode_ranks(len, 3, index, &mut ranks);
                assert_eq!(index_of_ranks(len, &ranks), index);
            }
        }
    }

    #[test]
    fn coordinate_patterns_are_the_set_partitions() {
        assert_eq!(
            coordinate_patterns(3),
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2],
            ]
        );
        assert_eq!(coordinate_patterns(4).len(), 15);
    }

    #[test]
    fn one_atom_boards_complete_uniquely() {
        let f = one_atom_structure();
        let mut pn = PartialNetwork::empty(3, vec![0, 1, 2]);
        let mut seen = 0;
        pn.complete_each(&f, &mut |net| {
            assert_eq!(net.check(&f), Ok(()));
            seen += 1;
            false
        });
        assert_eq!(seen, 1);
    }

    #[test]
    fn set_algebra_completions_are_the_point_assignments() {
        let f = full_set_algebra(2, 3);
        // Fix a triangle labelled like points 0, 1, 0 and adjoin a node:
        // the completions are exactly the two placements of the new point.
        let mut pn = PartialNetwork::empty(3, vec![0, 1, 2]);
        let a = f.atom_by_name("p010").unwrap();
        assert!(pn.assign_checked(&f, pn.index_of_ranks(&[0, 1, 2]), a));
        let mut base = None;
        pn.complete_each(&f, &mut |net| {
            assert_eq!(net.check(&f), Ok(()));
            assert!(base.replace(net.clone()).is_none(), "unique on three nodes");
            false
        });
        let base = base.unwrap();
        let mut extended = PartialNetwork::extend_with_node(&base, 3);
        let mut count = 0;
        extended.complete_each(&f, &mut |net| {
            assert_eq!(net.check(&f), Ok(()));
            count += 1;
            false
        });
        assert_eq!(count, 2);
    }

    #[test]
    fn check_rejects_planted_violations() {
        let f = full_set_algebra(2, 3);
        let mut pn = PartialNetwork::empty(3, vec![0, 1]);
        let a = f.atom_by_name("p010").unwrap();
        assert!(pn.assign_checked(&f, pn.index_of_ranks(&[0, 1, 0]), a));
        let mut boards = Vec::new();
        pn.complete_each(&f, &mut |net| {
            boards.push(net.clone());
            false
        });
        assert!(!boards.is_empty());
        for board in &boards {
            for index in 0..board.tuple_count() {
                for wrong in 0..f.atom_count() {
                    if wrong == board.label_at(index) {
                        continue;
                    }
                    let mut bad = board.clone();
                    bad.labels[index] = wrong;
                    assert!(bad.check(&f).is_err(), "every single-label rewrite breaks a law");
                }
            }
        }
    }

    #[test]
    fn canonical_key_identifies_renamed_boards() {
        let f = full_set_algebra(2, 3);
        let mut counts = std::collections::HashMap::new();
        // Boards on two nodes labelled by point assignments: assignments
        // that differ by swapping the two nodes collapse to one key.
        let mut pn = PartialNetwork::empty(3, vec![0, 1]);
        pn.complete_each(&f, &mut |net| {
            *counts.entry(net.canonical_key()).or_insert(0usize) += 1;
            false
        });
        let total: usize = counts.values().sum();
        assert_eq!(total, 4, "point assignments of two nodes");
        // 00 and 11 are fixed by the swap, 01 and 10 merge.
        assert_eq!(counts.len(), 3);
        assert_eq!(counts.values().filter(|&&c| c == 2).count(), 1);
    }
}
