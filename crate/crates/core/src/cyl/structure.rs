//! Carrier type for finite cylindric-style atom structures.
//!
//! An `n`-dimensional structure keeps, per dimension `i`, a partition of
//! the atoms into replacement classes (two atoms are related when they
//! differ at most at coordinate `i`), one diagonal atom set per ordered
//! index pair, and one atom permutation per unordered index pair for the
//! transposition substitutions.  Construction validates shapes and
//! bijectivity only; the algebraic laws live in [`crate::cyl::axioms`].

use std::collections::HashMap;

use crate::ra::{atom_set, AtomSet};
use crate::Atom;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CaError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("expected {expected} class rows, got {got}")]
    ClassShape { expected: usize, got: usize },
    #[error("class ids in dimension {dim} are not contiguous from zero")]
    ClassIds { dim: usize },
    #[error("expected {expected} diagonal sets, got {got}")]
    DiagonalShape { expected: usize, got: usize },
    #[error("diagonal set {index} sized {got}, expected {expected}")]
    DiagonalSize { index: usize, got: usize, expected: usize },
    #[error("expected {expected} transposition maps, got {got}")]
    TranspositionShape { expected: usize, got: usize },
    #[error("transposition {index} is not a permutation of the atoms")]
    TranspositionNotBijective { index: usize },
    #[error("duplicate atom name {0}")]
    DuplicateName(String),
    #[error("swapping indices maps matrix {matrix} outside the collection")]
    SwapEscapes { matrix: usize },
    #[error("atom {0} out of range")]
    UnknownAtom(Atom),
    #[error("enumeration exceeds the budget of {0}")]
    BudgetExceeded(usize),
}

/// Rank of the unordered pair `i < j` in the flat transposition list.
pub fn pair_rank(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

#[derive(Clone, Debug)]
pub struct CaAtomStructure {
    n: usize,
    names: Vec<String>,
    by_name: HashMap<String, Atom>,
    classes: Vec<Vec<u32>>,
    class_members: Vec<Vec<Vec<Atom>>>,
    diagonals: Vec<AtomSet>,
    transpositions: Vec<Vec<Atom>>,
}

impl CaAtomStructure {
    /// `classes[i][a]` is the replacement class of atom `a` in dimension
    /// `i`; `diagonals[i * n + j]` collects the atoms below the diagonal
    /// of `i` and `j`; `transpositions[pair_rank(i, j)]` maps each atom
    /// to its image under swapping `i` and `j`.
    pub fn new(
        n: usize,
        names: Vec<String>,
        classes: Vec<Vec<u32>>,
        diagonals: Vec<AtomSet>,
        transpositions: Vec<Vec<Atom>>,
    ) -> Result<Self, CaError> {
        if n < 2 {
            return Err(CaError::DimensionTooSmall(n));
        }
        let atoms = names.len();
        if classes.len() != n {
            return Err(CaError::ClassShape { expected: n, got: classes.len() });
        }
        let mut class_members = Vec::with_capacity(n);
        for (dim, row) in classes.iter().enumerate() {
            if row.len() != atoms {
                return Err(CaError::ClassShape { expected: atoms, got: row.len() });
            }
            let count = row.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
            let mut members: Vec<Vec<Atom>> = vec![Vec::new(); count];
            for (a, &c) in row.iter().enumerate() {
                members[c as usize].push(a);
            }
            if members.iter().any(Vec::is_empty) {
                return Err(CaError::ClassIds { dim });
            }
            class_members.push(members);
        }
        if diagonals.len() != n * n {
            return Err(CaError::DiagonalShape { expected: n * n, got: diagonals.len() });
        }
        for (index, d) in diagonals.iter().enumerate() {
            if d.len() != atoms {
                return Err(CaError::DiagonalSize { index, got: d.len(), expected: atoms });
            }
        }
        let pairs = n * (n - 1) / 2;
        if transpositions.len() != pairs {
            return Err(CaError::TranspositionShape { expected: pairs, got: transpositions.len() });
        }
        for (index, t) in transpositions.iter().enumerate() {
            let mut seen = vec![false; atoms];
            if t.len() != atoms {
                return Err(CaError::TranspositionNotBijective { index });
            }
            for &img in t {
                if img >= atoms || seen[img] {
                    return Err(CaError::TranspositionNotBijective { index });
                }
                seen[img] = true;
            }
        }
        let mut by_name = HashMap::new();
        for (a, name) in names.iter().enumerate() {
            if by_name.insert(name.clone(), a).is_some() {
                return Err(CaError::DuplicateName(name.clone()));
            }
        }
        Ok(CaAtomStructure { n, names, by_name, classes, class_members, diagonals, transpositions })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn atom_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, a: Atom) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn atom_by_name(&self, name: &str) -> Option<Atom> {
        self.by_name.get(name).copied()
    }

    pub fn class_id(&self, dim: usize, a: Atom) -> u32 {
        self.classes[dim][a]
    }

    /// Atoms differing at most at coordinate `dim`.
    pub fn same_class(&self, dim: usize, a: Atom, b: Atom) -> bool {
        self.classes[dim][a] == self.classes[dim][b]
    }

    pub fn class_count(&self, dim: usize) -> usize {
        self.class_members[dim].len()
    }

    pub fn class_members(&self, dim: usize, class: u32) -> &[Atom] {
        &self.class_members[dim][class as usize]
    }

    pub fn diagonal(&self, i: usize, j: usize) -> &AtomSet {
        &self.diagonals[i * self.n + j]
    }

    pub fn in_diagonal(&self, i: usize, j: usize, a: Atom) -> bool {
        self.diagonals[i * self.n + j].contains(a)
    }

    /// Image of `a` under swapping indices `i` and `j`.
    pub fn transpose(&self, i: usize, j: usize, a: Atom) -> Atom {
        if i == j {
            return a;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        self.transpositions[pair_rank(lo, hi)][a]
    }
}

/// Atom structure of the full set algebra on `base` points: atoms are the
/// `dim`-tuples over the base, two atoms are in the same class of
/// dimension `i` when they agree off coordinate `i`, the diagonal of
/// `(i, j)` collects the tuples equal at `i` and `j`, and transpositions
/// permute coordinates.  Every axiom holds by construction, which makes
/// this the concrete oracle for game and representation tests.
pub fn full_set_algebra(base: usize, dim: usize) -> CaAtomStructure {
    assert!(base >= 1 && dim >= 2);
    let atoms = base.pow(dim as u32);
    let digit = |a: usize, i: usize| a / base.pow((dim - 1 - i) as u32) % base;
    let names = (0..atoms)
        .map(|a| {
            let mut s = String::from("p");
            for i in 0..dim {
                s.push_str(&digit(a, i).to_string());
            }
            s
        })
        .collect();
    let classes = (0..dim)
        .map(|i| {
            (0..atoms)
                .map(|a| {
                    let mut key = 0u32;
                    for j in 0..dim {
                        if j != i {
                            key = key * base as u32 + digit(a, j) as u32;
                        }
                    }
                    key
                })
                .collect()
        })
        .collect();
    let mut diagonals = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            diagonals.push(atom_set(
                atoms,
                (0..atoms).filter(|&a| digit(a, i) == digit(a, j)),
            ));
        }
    }
    let mut transpositions = Vec::new();
    for j in 0..dim {
        for i in 0..j {
            transpositions.push(
                (0..atoms)
                    .map(|a| {
                        (0..dim).fold(0, |acc, c| {
                            let swapped = if c == i { j } else if c == j { i } else { c };
                            acc * base + digit(a, swapped)
                        })
                    })
                    .collect(),
            );
        }
    }
    CaAtomStructure::new(dim, names, classes, diagonals, transpositions)
        .expect("tuple semantics always yields a well-shaped structure")
}

/// Pseudo-random three-dimensional structure for fuzzing the game
/// solvers: random replacement partitions, random symmetric diagonal
/// sets with full reflexive diagonals, and random involutions for the
/// transpositions.  Only the component shapes are guaranteed, not the
/// axioms, so the games on these boards exercise losing positions too.
/// The same seed always yields the same structure.
pub fn seeded_structure(seed: u64, max_atoms: usize) -> CaAtomStructure {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = 3;
    let atoms = rng.gen_range(1..=max_atoms.max(1));
    let names = (0..atoms).map(|a| format!("a{a}")).collect();
    let classes = (0..dim)
        .map(|_| {
            let mut used = 0u32;
            (0..atoms)
                .map(|_| {
                    let c = rng.gen_range(0..=used);
                    if c == used {
                        used += 1;
                    }
                    c
                })
                .collect()
        })
        .collect();
    let mut diagonals = vec![atom_set(atoms, []); dim * dim];
    for i in 0..dim {
        diagonals[i * dim + i] = atom_set(atoms, 0..atoms);
        for j in i + 1..dim {
            let d = atom_set(atoms, (0..atoms).filter(|_| rng.gen_bool(0.4)));
            diagonals[i * dim + j] = d.clone();
            diagonals[j * dim + i] = d;
        }
    }
    let pairs = dim * (dim - 1) / 2;
    let transpositions = (0..pairs)
        .map(|_| {
            let mut map: Vec<Option<Atom>> = vec![None; atoms];
            for a in 0..atoms {
                if map[a].is_some() {
                    continue;
                }
                let free: Vec<Atom> = (a + 1..atoms).filter(|&b| map[b].is_none()).collect();
                if !free.is_empty() && rng.gen_bool(0.5) {
                    let b = free[rng.gen_range(0..free.len())];
                    map[a] = Some(b);
                    map[b] = Some(a);
                } else {
                    map[a] = Some(a);
                }
            }
            map.into_iter().map(Option::unwrap).collect()
        })
        .collect();
    CaAtomStructure::new(dim, names, classes, diagonals, transpositions)
        .expect("generated components always have valid shapes")
}

/// Powerset algebra over a cylindric atom structure, used as a direct
/// evaluation oracle for the axiom equations on small carriers.
pub struct CaComplexAlgebra<'a> {
    structure: &'a CaAtomStructure,
}

impl<'a> CaComplexAlgebra<'a> {
    pub fn new(structure: &'a CaAtomStructure) -> Self {
        CaComplexAlgebra { structure }
    }

    pub fn bot(&self) -> AtomSet {
        atom_set(self.structure.atom_count(), [])
    }

    pub fn top(&self) -> AtomSet {
        let mut s = self.bot();
        s.insert_range(..);
        s
    }

    pub fn join(&self, x: &AtomSet, y: &AtomSet) -> AtomSet {
        let mut out = x.clone();
        out.union_with(y);
        out
    }

    pub fn meet(&self, x: &AtomSet, y: &AtomSet) -> AtomSet {
        let mut out = x.clone();
        out.intersect_with(y);
        out
    }

    pub fn complement(&self, x: &AtomSet) -> AtomSet {
        let mut out = x.clone();
        out.toggle_range(..);
        out
    }

    /// Union of every replacement class meeting `x`.
    pub fn cylindrify(&self, dim: usize, x: &AtomSet) -> AtomSet {
        let mut out = self.bot();
        for a in x.ones() {
            for &b in self
                .structure
                .class_members(dim, self.structure.class_id(dim, a))
            {
                out.insert(b);
            }
        }
        out
    }

    pub fn diagonal(&self, i: usize, j: usize) -> AtomSet {
        self.structure.diagonal(i, j).clone()
    }

    pub fn transpose(&self, i: usize, j: usize, x: &AtomSet) -> AtomSet {
        let mut out = self.bot();
        for a in x.ones() {
            out.insert(self.structure.transpose(i, j, a));
        }
        out
    }
}
