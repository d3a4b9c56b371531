//! Backtracking search for square representations of small finite
//! structures, with an independent full-enumeration verifier.
//!
//! A square representation labels every ordered pair (binary case) or
//! every tuple (cylindric case) of base points with an atom so that the
//! induced point-set maps copy the structure faithfully: identity sits
//! exactly on the diagonal, converse mirrors, every triangle is
//! consistent, every consistent composition is witnessed by a middle
//! point, and every atom occurs somewhere.  At the sizes handled here a
//! found representation is automatically complete, so no separate
//! completeness notion appears.
//!
//! The verifier shares no propagation code with the search: it re-checks
//! every condition by raw scans over the finished label table.  A search
//! result of [`RepOutcome::NoneUpTo`] means the whole space below the
//! base bound was exhausted; it is never a claim about larger bases.

use serde::{Deserialize, Serialize};

use crate::cyl::CaAtomStructure;
use crate::games::network::PartialNetwork;
use crate::ra::RaAtomStructure;
use crate::Atom;

/// Edge labelling of a full square: `labels[x * base + y]` is the atom
/// on the ordered pair `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaRepresentation {
    pub base: usize,
    pub labels: Vec<Atom>,
}

impl RaRepresentation {
    pub fn label(&self, x: usize, y: usize) -> Atom {
        self.labels[x * self.base + y]
    }
}

/// Tuple labelling of a full cube: `labels[i]` is the atom on the tuple
/// whose big-endian digits in the base give `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaRepresentation {
    pub base: usize,
    pub dim: usize,
    pub labels: Vec<Atom>,
}

impl CaRepresentation {
    pub fn label(&self, tuple: &[usize]) -> Atom {
        self.labels[tuple_index(tuple, self.base)]
    }
}

/// Outcome of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepOutcome<R> {
    Found(R),
    /// Every base up to the bound was exhausted without a witness.  Not
    /// a non-representability claim beyond the bound.
    NoneUpTo(usize),
    /// The enumeration budget ran out at this base; nothing is decided.
    Exhausted { base: usize },
}

impl<R> RepOutcome<R> {
    pub fn found(&self) -> Option<&R> {
        match self {
            RepOutcome::Found(rep) => Some(rep),
            _ => None,
        }
    }
}

/// First failure of a representation, with its witness.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RepViolation {
    #[error("label table has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("entry {index} names atom {atom}, out of range")]
    UnknownAtom { index: usize, atom: Atom },
    #[error("off-diagonal pair ({x}, {y}) carries the identity atom {atom}")]
    IdentityOffDiagonal { x: usize, y: usize, atom: Atom },
    #[error("loop at {x} carries the non-identity atom {atom}")]
    NonIdentityOnLoop { x: usize, atom: Atom },
    #[error("labels of ({x}, {y}) and ({y}, {x}) are not converses")]
    ConverseMismatch { x: usize, y: usize },
    #[error("triangle ({x}, {y}, {z}) is inconsistent")]
    InconsistentTriangle { x: usize, y: usize, z: usize },
    #[error("({x}, {y}) lies under {a};{b} but no middle point witnesses it")]
    UnwitnessedComposition { x: usize, y: usize, a: Atom, b: Atom },
    #[error("tuple {index} and the diagonal of ({i}, {j}) disagree")]
    DiagonalMismatch { index: usize, i: usize, j: usize },
    #[error("tuples {index} and {other} differ at coordinate {dim} but their labels do not")]
    ClassMismatch { index: usize, other: usize, dim: usize },
    #[error("label of tuple {index} swapped at ({i}, {j}) is not the transposed atom")]
    TranspositionMismatch { index: usize, i: usize, j: usize },
    #[error("tuple {index} allows atom {atom} along coordinate {dim} but no point realizes it")]
    UnwitnessedCylindrifier { index: usize, dim: usize, atom: Atom },
    #[error("atom {atom} appears on no pair or tuple")]
    MissingAtom { atom: Atom },
}

/// Completions enumerated per base before the cylindric search gives up.
const CA_SEARCH_CAP: usize = 200_000;

/// Smallest-base square representation, tried on 1, 2, ... points in
/// turn.  Within a base, cells are filled in row order with atoms tried
/// in id order and the mirror cell filled by the converse, so the
/// returned labelling is the lexicographically least one that verifies.
pub fn find_square_representation(
    s: &RaAtomStructure,
    max_base: usize,
) -> RepOutcome<RaRepresentation> {
    assert!((1..=8).contains(&max_base), "bases stay desk-sized");
    for base in 1..=max_base {
        if let Some(rep) = find_square_on_base(s, base) {
            return RepOutcome::Found(rep);
        }
    }
    RepOutcome::NoneUpTo(max_base)
}

/// Least verifying labelling on exactly `base` points, if any.
pub fn find_square_on_base(s: &RaAtomStructure, base: usize) -> Option<RaRepresentation> {
    if s.atom_count() == 0 {
        return None;
    }
    let mut cells = Vec::new();
    for x in 0..base {
        for y in x..base {
            cells.push((x, y));
        }
    }
    let mut labels = vec![usize::MAX; base * base];
    square_dfs(s, base, &cells, 0, &mut labels)
}

fn square_dfs(
    s: &RaAtomStructure,
    base: usize,
    cells: &[(usize, usize)],
    at: usize,
    labels: &mut Vec<Atom>,
) -> Option<RaRepresentation> {
    if at == cells.len() {
        let rep = RaRepresentation { base, labels: labels.clone() };
        return verify_square_representation(s, &rep).is_ok().then_some(rep);
    }
    let (x, y) = cells[at];
    for a in s.atoms() {
        if s.is_identity(a) != (x == y) {
            continue;
        }
        labels[x * base + y] = a;
        labels[y * base + x] = s.converse(a);
        if assigned_triangles_ok(s, base, labels) {
            if let Some(rep) = square_dfs(s, base, cells, at + 1, labels) {
                return Some(rep);
            }
        }
    }
    labels[x * base + y] = usize::MAX;
    labels[y * base + x] = usize::MAX;
    None
}

fn assigned_triangles_ok(s: &RaAtomStructure, base: usize, labels: &[Atom]) -> bool {
    for x in 0..base {
        for y in 0..base {
            let xy = labels[x * base + y];
            if xy == usize::MAX {
                continue;
            }
            for z in 0..base {
                let (xz, zy) = (labels[x * base + z], labels[z * base + y]);
                if xz != usize::MAX && zy != usize::MAX && !s.consistent(xz, zy, xy) {
                    return false;
                }
            }
        }
    }
    true
}

/// Full re-check of a binary representation: identity exactly on the
/// diagonal, converse symmetry, triangle consistency, composition
/// witnesses, and every atom realized.
pub fn verify_square_representation(
    s: &RaAtomStructure,
    rep: &RaRepresentation,
) -> Result<(), RepViolation> {
    let (base, k) = (rep.base, s.atom_count());
    if rep.labels.len() != base * base {
        return Err(RepViolation::Shape { expected: base * base, got: rep.labels.len() });
    }
    for (index, &a) in rep.labels.iter().enumerate() {
        if a >= k {
            return Err(RepViolation::UnknownAtom { index, atom: a });
        }
    }
    for x in 0..base {
        for y in 0..base {
            let a = rep.label(x, y);
            if x == y && !s.is_identity(a) {
                return Err(RepViolation::NonIdentityOnLoop { x, atom: a });
            }
            if x != y && s.is_identity(a) {
                return Err(RepViolation::IdentityOffDiagonal { x, y, atom: a });
            }
            if rep.label(y, x) != s.converse(a) {
                return Err(RepViolation::ConverseMismatch { x, y });
            }
            for z in 0..base {
                if !s.consistent(rep.label(x, z), rep.label(z, y), a) {
                    return Err(RepViolation::InconsistentTriangle { x, y, z });
                }
            }
            for p in s.atoms() {
                for q in s.atoms() {
                    if !s.consistent(p, q, a) {
                        continue;
                    }
                    let witnessed =
                        (0..base).any(|z| rep.label(x, z) == p && rep.label(z, y) == q);
                    if !witnessed {
                        return Err(RepViolation::UnwitnessedComposition { x, y, a: p, b: q });
                    }
                }
            }
        }
    }
    for atom in s.atoms() {
        if !rep.labels.contains(&atom) {
            return Err(RepViolation::MissingAtom { atom });
        }
    }
    Ok(())
}

/// Smallest-base cylindric representation.  The boards of the games
/// double as candidates: a representation on `base` points is exactly a
/// total board on nodes `0..base` that also separates the diagonals,
/// witnesses every replacement and realizes every atom, so candidates
/// are enumerated by the board completion search and the verifier keeps
/// only the real ones.  A structure with no atom below every diagonal
/// is refused without searching: no constant tuple could be labelled.
pub fn find_ca_representation(
    f: &CaAtomStructure,
    n: usize,
    max_base: usize,
) -> RepOutcome<CaRepresentation> {
    assert_eq!(n, f.dim(), "the dimension is carried by the structure");
    assert!((1..=6).contains(&max_base), "tuple tables stay desk-sized");
    let constant_ok = (0..f.atom_count())
        .any(|a| (0..n).all(|i| (0..n).all(|j| f.in_diagonal(i, j, a))));
    if !constant_ok {
        return RepOutcome::NoneUpTo(max_base);
    }
    for base in 1..=max_base {
        let mut pn = PartialNetwork::empty(n, (0..base).collect());
        let mut found = None;
        let mut visited = 0usize;
        let capped = pn.complete_each(f, &mut |net| {
            visited += 1;
            if visited > CA_SEARCH_CAP {
                return true;
            }
            let rep = CaRepresentation { base, dim: n, labels: net.labels().to_vec() };
            if verify_ca_representation(f, &rep).is_ok() {
                found = Some(rep);
                return true;
            }
            false
        });
        if let Some(rep) = found {
            return RepOutcome::Found(rep);
        }
        if capped && visited > CA_SEARCH_CAP {
            return RepOutcome::Exhausted { base };
        }
    }
    RepOutcome::NoneUpTo(max_base)
}

/// Full re-check of a cylindric representation by raw enumeration:
/// diagonal exactness in both directions, replacement classes across
/// single-coordinate changes, the transposition equation, cylindrifier
/// witnesses, and every atom realized.
pub fn verify_ca_representation(
    f: &CaAtomStructure,
    rep: &CaRepresentation,
) -> Result<(), RepViolation> {
    let (base, dim, k) = (rep.base, rep.dim, f.atom_count());
    if dim != f.dim() || rep.labels.len() != base.pow(dim as u32) {
        return Err(RepViolation::Shape {
            expected: base.pow(f.dim() as u32),
            got: rep.labels.len(),
        });
    }
    for (index, &a) in rep.labels.iter().enumerate() {
        if a >= k {
            return Err(RepViolation::UnknownAtom { index, atom: a });
        }
    }
    for index in 0..rep.labels.len() {
        let tuple = tuple_digits(index, base, dim);
        let a = rep.labels[index];
        for i in 0..dim {
            for j in 0..dim {
                if (tuple[i] == tuple[j]) != f.in_diagonal(i, j, a) {
                    return Err(RepViolation::DiagonalMismatch { index, i, j });
                }
            }
            for x in 0..base {
                let mut other = tuple.clone();
                other[i] = x;
                let o = tuple_index(&other, base);
                if !f.same_class(i, a, rep.labels[o]) {
                    return Err(RepViolation::ClassMismatch { index, other: o, dim: i });
                }
            }
            for b in f.class_members(i, f.class_id(i, a)) {
                let witnessed = (0..base).any(|x| {
                    let mut other = tuple.clone();
                    other[i] = x;
                    rep.labels[tuple_index(&other, base)] == *b
                });
                if !witnessed {
                    return Err(RepViolation::UnwitnessedCylindrifier {
                        index,
                        dim: i,
                        atom: *b,
                    });
                }
            }
            for j in i + 1..dim {
                let mut swapped = tuple.clone();
                swapped.swap(i, j);
                if rep.labels[tuple_index(&swapped, base)] != f.transpose(i, j, a) {
                    return Err(RepViolation::TranspositionMismatch { index, i, j });
                }
            }
        }
    }
    for atom in 0..k {
        if !rep.labels.contains(&atom) {
            return Err(RepViolation::MissingAtom { atom });
        }
    }
    Ok(())
}

fn tuple_index(tuple: &[usize], base: usize) -> usize {
    tuple.iter().fold(0, |acc, &d| acc * base + d)
}

fn tuple_digits(mut index: usize, base: usize, dim: usize) -> Vec<usize> {
    let mut out = vec![0; dim];
    for slot in (0..dim).rev() {
        out[slot] = index % base;
        index /= base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyl::{basic_matrices, full_set_algebra, matrices_to_ca, seeded_structure};
    use crate::games::{solve_game_with, GameKind, Winner};
    use crate::ra::{peircean_closure, ConsistencyStore};

    fn identity_only() -> RaAtomStructure {
        let cube = peircean_closure(1, &[0], &[0], []);
        RaAtomStructure::new(vec!["1'".into()], &[0], vec![0], ConsistencyStore::Dense(cube))
            .unwrap()
    }

    /// Two atoms 1' and a, a self-converse with a;a above both atoms.
    fn reflexive_pair() -> RaAtomStructure {
        let cube = peircean_closure(2, &[0], &[0, 1], [[1, 1, 0], [1, 1, 1]]);
        RaAtomStructure::new(
            vec!["1'".into(), "a".into()],
            &[0],
            vec![0, 1],
            ConsistencyStore::Dense(cube),
        )
        .unwrap()
    }

    #[test]
    fn the_identity_algebra_represents_on_a_point() {
        let s = identity_only();
        let RepOutcome::Found(rep) = find_square_representation(&s, 8) else {
            panic!("a single loop represents the identity atom");
        };
        assert_eq!(rep.base, 1);
        assert_eq!(rep.labels, vec![0]);
        verify_square_representation(&s, &rep).unwrap();
    }

    #[test]
    fn the_reflexive_pair_needs_three_points() {
        let s = reflexive_pair();
        let RepOutcome::Found(rep) = find_square_representation(&s, 8) else {
            panic!("three points with every off-diagonal edge a suffice");
        };
        assert_eq!(rep.base, 3);
        verify_square_representation(&s, &rep).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(rep.label(x, y), usize::from(x != y));
            }
        }
        // Two points leave a;a ≥ a unwitnessed.
        assert_eq!(find_square_on_base(&s, 2), None);
        // A base found once is not lost by adding a point: the fresh
        // point duplicates an old one along the reflexive atom.
        assert!(find_square_on_base(&s, 4).is_some());
    }

    #[test]
    fn every_single_edge_mutation_fails_verification() {
        let s = reflexive_pair();
        let rep = match find_square_representation(&s, 4) {
            RepOutcome::Found(rep) => rep,
            other => panic!("expected a representation, got {other:?}"),
        };
        for cell in 0..rep.labels.len() {
            for atom in s.atoms() {
                if atom == rep.labels[cell] {
                    continue;
                }
                let mut broken = rep.clone();
                broken.labels[cell] = atom;
                assert!(
                    verify_square_representation(&s, &broken).is_err(),
                    "cell {cell} flipped to {atom} must not verify"
                );
            }
        }
    }

    #[test]
    fn the_set_algebra_atoms_represent_on_their_own_base() {
        let f = full_set_algebra(2, 3);
        let RepOutcome::Found(rep) = find_ca_representation(&f, 3, 4) else {
            panic!("the tuple structure is its own representation");
        };
        assert_eq!(rep.base, 2);
        verify_ca_representation(&f, &rep).unwrap();
        // The labelling is a point map: each tuple carries its own name.
        for (index, &atom) in rep.labels.iter().enumerate() {
            let digits = tuple_digits(index, 2, 3);
            let name: String = std::iter::once('p')
                .chain(digits.iter().map(|&d| char::from_digit(d as u32, 10).unwrap()))
                .collect();
            assert_eq!(f.name(atom), name);
        }
    }

    #[test]
    fn diagonal_starved_structures_are_refused_without_search() {
        let f = full_set_algebra(2, 3);
        let atoms = f.atom_count();
        let names = f.names().to_vec();
        let classes = (0..3).map(|i| (0..atoms).map(|a| f.class_id(i, a)).collect()).collect();
        let mut diagonals = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                let mut d = f.diagonal(i, j).clone();
                if i != j {
                    // Starve the constant tuples: no atom stays under
                    // every diagonal.
                    for a in [f.atom_by_name("p000").unwrap(), f.atom_by_name("p111").unwrap()] {
                        d.set(a, false);
                    }
                }
                diagonals.push(d);
            }
        }
        let mut transpositions = Vec::new();
        for j in 0..3 {
            for i in 0..j {
                transpositions.push((0..atoms).map(|a| f.transpose(i, j, a)).collect());
            }
        }
        let starved = CaAtomStructure::new(3, names, classes, diagonals, transpositions).unwrap();
        assert_eq!(find_ca_representation(&starved, 3, 4), RepOutcome::NoneUpTo(4));
    }

    #[test]
    fn mutated_tuple_labels_fail_verification() {
        let f = full_set_algebra(2, 3);
        let rep = match find_ca_representation(&f, 3, 2) {
            RepOutcome::Found(rep) => rep,
            other => panic!("expected a representation, got {other:?}"),
        };
        for index in 0..rep.labels.len() {
            for atom in 0..f.atom_count() {
                if atom == rep.labels[index] {
                    continue;
                }
                let mut broken = rep.clone();
                broken.labels[index] = atom;
                assert!(verify_ca_representation(&f, &broken).is_err());
            }
        }
    }

    /// Cross-check with the games: a found representation hands the
    /// defender a strategy, so the solver must agree she wins.
    #[test]
    fn represented_structures_win_the_chain_game() {
        let matrices_src = reflexive_pair();
        let mats = basic_matrices(&matrices_src, 3, 10_000).unwrap();
        let candidates = vec![
            full_set_algebra(1, 3),
            full_set_algebra(2, 3),
            matrices_to_ca(&matrices_src, &mats).unwrap(),
            seeded_structure(1, 4),
            seeded_structure(3, 4),
        ];
        let mut represented = 0;
        for (i, f) in candidates.iter().enumerate() {
            let RepOutcome::Found(rep) = find_ca_representation(f, 3, 3) else {
                continue;
            };
            verify_ca_representation(f, &rep).unwrap();
            represented += 1;
            for rounds in 1..=4 {
                let out = solve_game_with(f, GameKind::G, rounds, 6, 2_000_000, false);
                assert_eq!(out.winner, Winner::Exists, "structure {i}, {rounds} rounds");
            }
        }
        assert!(represented >= 3, "the hand-built structures all represent");
    }
}
