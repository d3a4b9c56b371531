//! Basic matrices over a relation-type atom structure and the basis
//! conditions that make them a cylindric atom structure.
//!
//! A basic matrix is an atom-labelled square with identity atoms on the
//! diagonal, converse symmetry across it, and every triangle consistent.
//! The full collection, one class per agreement pattern off a column,
//! yields an n-dimensional atom structure via [`matrices_to_ca`].  The
//! basis check demands atom coverage, closure under index swaps, and the
//! patch property: two matrices agreeing outside two columns always
//! embed into a third agreeing with each on one of them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cyl::structure::{CaAtomStructure, CaError};
use crate::ra::{atom_set, RaAtomStructure};
use crate::Atom;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicMatrix {
    n: usize,
    entries: Vec<Atom>,
}

impl BasicMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Atom {
        self.entries[i * self.n + j]
    }

    pub fn label(&self, ra: &RaAtomStructure) -> String {
        let cells: Vec<&str> = self.entries.iter().map(|&a| ra.name(a)).collect();
        cells.join(",")
    }

    /// Entries not involving index `x`, in row-major order.
    fn key_off(&self, skip: &[usize]) -> Vec<Atom> {
        let mut key = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if !skip.contains(&i) && !skip.contains(&j) {
                    key.push(self.get(i, j));
                }
            }
        }
        key
    }

    /// Row of `x` outside `x` and `y`, diagonal first.
    fn row_key(&self, x: usize, y: usize) -> Vec<Atom> {
        let mut key = vec![self.get(x, x)];
        for k in 0..self.n {
            if k != x && k != y {
                key.push(self.get(x, k));
            }
        }
        key
    }

    pub fn swap(&self, x: usize, y: usize) -> BasicMatrix {
        let tau = |d: usize| {
            if d == x {
                y
            } else if d == y {
                x
            } else {
                d
            }
        };
        let mut entries = vec![0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                entries[i * self.n + j] = self.get(tau(i), tau(j));
            }
        }
        BasicMatrix { n: self.n, entries }
    }
}

/// Diagonal entries are identity atoms, the matrix is converse-symmetric,
/// and every triangle, including those through a diagonal cell, is
/// consistent.
pub fn is_basic_matrix(ra: &RaAtomStructure, m: &BasicMatrix) -> bool {
    let n = m.dim();
    for i in 0..n {
        if !ra.is_identity(m.get(i, i)) {
            return false;
        }
        for j in 0..n {
            if ra.converse(m.get(i, j)) != m.get(j, i) {
                return false;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if !ra.consistent(m.get(i, j), m.get(j, k), m.get(i, k)) {
                    return false;
                }
            }
        }
    }
    true
}

/// All basic matrices of dimension `n`, enumerated in lexicographic
/// order of the upper triangle (diagonal first), erroring past `budget`.
pub fn basic_matrices(
    ra: &RaAtomStructure,
    n: usize,
    budget: usize,
) -> Result<Vec<BasicMatrix>, CaError> {
    if n < 2 {
        return Err(CaError::DimensionTooSmall(n));
    }
    let identities = ra.identity_atoms();
    let k = ra.atom_count();
    let mut out = Vec::new();
    let mut entries = vec![0usize; n * n];
    // Cells in fill order: diagonal, then upper pairs by (j, i).
    let mut cells = Vec::new();
    for i in 0..n {
        cells.push((i, i));
    }
    for j in 1..n {
        for i in 0..j {
            cells.push((i, j));
        }
    }
    fn fill(
        depth: usize,
        cells: &[(usize, usize)],
        ra: &RaAtomStructure,
        identities: &[Atom],
        k: usize,
        n: usize,
        entries: &mut Vec<usize>,
        out: &mut Vec<BasicMatrix>,
        budget: usize,
    ) -> Result<(), CaError> {
        if depth == cells.len() {
            if out.len() == budget {
                return Err(CaError::BudgetExceeded(budget));
            }
            out.push(BasicMatrix { n, entries: entries.clone() });
            return Ok(());
        }
        let (x, y) = cells[depth];
        let choices: Vec<Atom> = if x == y {
            identities.to_vec()
        } else {
            (0..k).collect()
        };
        'atoms: for a in choices {
            if x != y {
                // Triangles through both diagonal cells and through every
                // earlier third node.
                if !ra.consistent(entries[x * n + x], a, a)
                    || !ra.consistent(a, entries[y * n + y], a)
                {
                    continue;
                }
                for w in 0..x {
                    let wx = entries[w * n + x];
                    let wy = entries[w * n + y];
                    if !ra.consistent(ra.converse(wx), wy, a) {
                        continue 'atoms;
                    }
                }
            }
            entries[x * n + y] = a;
            entries[y * n + x] = ra.converse(a);
            fill(depth + 1, cells, ra, identities, k, n, entries, out, budget)?;
        }
        Ok(())
    }
    fill(0, &cells, ra, &identities, k, n, &mut entries, &mut out, budget)?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BasisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug)]
pub struct BasisReport {
    pub n: usize,
    pub matrix_count: usize,
    pub checks: Vec<BasisCheck>,
}

impl BasisReport {
    pub fn is_basis(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&BasisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Basis conditions for an arbitrary collection of matrices, so removing
/// or adding entries shows up as concrete witnesses.
pub fn is_cylindric_basis(
    ra: &RaAtomStructure,
    mats: &[BasicMatrix],
    n: usize,
) -> BasisReport {
    let mut checks = Vec::new();
    let set: BTreeSet<&BasicMatrix> = mats.iter().collect();

    let mut witness = None;
    for (idx, m) in mats.iter().enumerate() {
        if m.dim() != n || !is_basic_matrix(ra, m) {
            witness = Some(format!("matrix {idx} is not basic"));
            break;
        }
    }
    checks.push(BasisCheck { name: "matrices-basic", passed: witness.is_none(), witness });

    let mut witness = None;
    for a in 0..ra.atom_count() {
        if !mats.iter().any(|m| m.get(0, 1) == a) {
            witness = Some(format!("atom {} never appears at cell (0, 1)", ra.name(a)));
            break;
        }
    }
    checks.push(BasisCheck { name: "atom-coverage", passed: witness.is_none(), witness });

    let mut witness = None;
    'swap: for (idx, m) in mats.iter().enumerate() {
        for x in 0..n {
            for y in (x + 1)..n {
                if !set.contains(&m.swap(x, y)) {
                    witness = Some(format!("swap of ({x}, {y}) leaves the set at matrix {idx}"));
                    break 'swap;
                }
            }
        }
    }
    checks.push(BasisCheck { name: "transposition-closed", passed: witness.is_none(), witness });

    // Patch property.  Group by entries off {x, y}; within a group the
    // realized (row x, row y) combinations must form a full rectangle,
    // since the patch of M and N needs row y from M and row x from N.
    let mut witness = None;
    'patch: for x in 0..n {
        for y in (x + 1)..n {
            let mut groups: BTreeMap<Vec<Atom>, (BTreeSet<Vec<Atom>>, BTreeSet<Vec<Atom>>, BTreeSet<(Vec<Atom>, Vec<Atom>)>)> =
                BTreeMap::new();
            for m in mats {
                let core = m.key_off(&[x, y]);
                let rx = m.row_key(x, y);
                let ry = m.row_key(y, x);
                let slot = groups.entry(core).or_default();
                slot.0.insert(rx.clone());
                slot.1.insert(ry.clone());
                slot.2.insert((rx, ry));
            }
            for (_, (rows_x, rows_y, combos)) in groups {
                if combos.len() != rows_x.len() * rows_y.len() {
                    let (mx, my) = rows_x
                        .iter()
                        .flat_map(|rx| rows_y.iter().map(move |ry| (rx, ry)))
                        .find(|(rx, ry)| !combos.contains(&((*rx).clone(), (*ry).clone())))
                        .expect("a missing combination exists");
                    witness = Some(format!(
                        "columns ({x}, {y}): no matrix patches row {mx:?} with row {my:?}"
                    ));
                    break 'patch;
                }
            }
        }
    }
    checks.push(BasisCheck { name: "patch-property", passed: witness.is_none(), witness });

    BasisReport { n, matrix_count: mats.len(), checks }
}

/// The atom structure on a swap-closed set of basic matrices: classes
/// group matrices agreeing off a column, diagonals collect identity
/// cells, transpositions swap indices.
pub fn matrices_to_ca(
    ra: &RaAtomStructure,
    mats: &[BasicMatrix],
) -> Result<CaAtomStructure, CaError> {
    let Some(first) = mats.first() else {
        return Err(CaError::DimensionTooSmall(0));
    };
    let n = first.dim();
    let index: HashMap<&BasicMatrix, usize> =
        mats.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let names = (0..mats.len()).map(|i| format!("M{i}")).collect();
    let mut classes = Vec::with_capacity(n);
    for x in 0..n {
        let mut ids: HashMap<Vec<Atom>, u32> = HashMap::new();
        let mut row = Vec::with_capacity(mats.len());
        for m in mats {
            let key = m.key_off(&[x]);
            let next = ids.len() as u32;
            row.push(*ids.entry(key).or_insert(next));
        }
        classes.push(row);
    }
    let mut diagonals = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let members: Vec<Atom> = mats
                .iter()
                .enumerate()
                .filter(|(_, m)| ra.is_identity(m.get(i, j)))
                .map(|(idx, _)| idx)
                .collect();
            diagonals.push(atom_set(mats.len(), members.iter().copied()));
        }
    }
    let mut transpositions = Vec::new();
    for y in 1..n {
        for x in 0..y {
            let mut perm = Vec::with_capacity(mats.len());
            for (idx, m) in mats.iter().enumerate() {
                let image = m.swap(x, y);
                let Some(&target) = index.get(&image) else {
                    return Err(CaError::SwapEscapes { matrix: idx });
                };
                perm.push(target);
            }
            transpositions.push(perm);
        }
    }
    CaAtomStructure::new(n, names, classes, diagonals, transpositions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::monk::monk_ra;
    use crate::cyl::axioms::ca_axiom_check;
    use crate::graphs::complete_graph;

    fn monk_k3() -> RaAtomStructure {
        monk_ra(&complete_graph(3), 3).unwrap()
    }

    /// Independent count of three-dimensional matrices: one diagonal
    /// atom, three free upper cells, all triangles consistent; atoms are
    /// self-converse so a full triple scan is exact.
    #[test]
    fn matrix_enumeration_matches_full_scan() {
        let ra = monk_k3();
        let mats = basic_matrices(&ra, 3, 2_000).unwrap();
        let k = ra.atom_count();
        let mut count = 0usize;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let e = 0;
                    if ra.consistent(e, a, a)
                        && ra.consistent(a, e, a)
                        && ra.consistent(e, b, b)
                        && ra.consistent(b, e, b)
                        && ra.consistent(e, c, c)
                        && ra.consistent(c, e, c)
                        && ra.consistent(a, c, b)
                    {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(mats.len(), count);
        for m in &mats {
            assert!(is_basic_matrix(&ra, m));
        }
    }

    #[test]
    fn full_matrix_set_is_a_basis_and_a_valid_ca() {
        let ra = monk_k3();
        let mats = basic_matrices(&ra, 3, 2_000).unwrap();
        let report = is_cylindric_basis(&ra, &mats, 3);
        assert!(report.is_basis(), "{:?}", report.failed());
        let ca = matrices_to_ca(&ra, &mats).unwrap();
        assert_eq!(ca.atom_count(), mats.len());
        let axioms = ca_axiom_check(&ca);
        assert!(axioms.is_valid(), "{:?}", axioms.failed());
    }

    /// Removing one diversity matrix must surface as a concrete missing
    /// patch or swap witness.
    #[test]
    fn removing_a_matrix_breaks_the_basis() {
        let ra = monk_k3();
        let mats = basic_matrices(&ra, 3, 2_000).unwrap();
        let victim = mats
            .iter()
            .position(|m| !ra.is_identity(m.get(0, 1)))
            .unwrap();
        let mutated: Vec<BasicMatrix> = mats
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != victim)
            .map(|(_, m)| m.clone())
            .collect();
        let report = is_cylindric_basis(&ra, &mutated, 3);
        assert!(!report.is_basis());
        let failed = report.failed();
        assert!(!failed.is_empty());
        assert!(failed.iter().all(|c| c.witness.is_some()));
    }

    #[test]
    fn four_dimensional_matrices_validate() {
        let ra = monk_ra(&complete_graph(2), 2).unwrap();
        let mats = basic_matrices(&ra, 4, 50_000).unwrap();
        assert!(!mats.is_empty());
        for m in mats.iter().step_by(7) {
            assert!(is_basic_matrix(&ra, m));
        }
        let ca = matrices_to_ca(&ra, &mats).unwrap();
        assert_eq!(ca.dim(), 4);
        let axioms = ca_axiom_check(&ca);
        assert!(axioms.is_valid(), "{:?}", axioms.failed());
    }

    #[test]
    fn budget_is_enforced() {
        let ra = monk_k3();
        assert_eq!(
            basic_matrices(&ra, 3, 5).err(),
            Some(CaError::BudgetExceeded(5))
        );
    }
}
