//! Relation-algebra atom structures: a finite atom set with an identity
//! subset, a converse involution, and a consistent-triple predicate.
//!
//! Convention used everywhere in this crate: the triple (a, b, c) is
//! consistent exactly when c lies below a;b in the complex algebra. All
//! constructions are normalized to this reading when they are built.

use fixedbitset::FixedBitSet;
use std::sync::Arc;

use crate::Atom;

pub type AtomSet = FixedBitSet;

pub fn atom_set(n: usize, members: impl IntoIterator<Item = Atom>) -> AtomSet {
    let mut s = FixedBitSet::with_capacity(n);
    for m in members {
        s.insert(m);
    }
    s
}

pub fn set_members(s: &AtomSet) -> Vec<Atom> {
    s.ones().collect()
}

/// Dense k*k*k bit table of consistent triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleCube {
    k: usize,
    bits: FixedBitSet,
}

impl TripleCube {
    pub fn new(k: usize) -> Self {
        TripleCube { k, bits: FixedBitSet::with_capacity(k * k * k) }
    }

    pub fn from_triples(k: usize, triples: impl IntoIterator<Item = [Atom; 3]>) -> Self {
        let mut cube = Self::new(k);
        for [a, b, c] in triples {
            cube.set(a, b, c);
        }
        cube
    }

    #[inline]
    fn index(&self, a: Atom, b: Atom, c: Atom) -> usize {
        (a * self.k + b) * self.k + c
    }

    pub fn set(&mut self, a: Atom, b: Atom, c: Atom) {
        let i = self.index(a, b, c);
        self.bits.insert(i);
    }

    pub fn clear(&mut self, a: Atom, b: Atom, c: Atom) {
        let i = self.index(a, b, c);
        self.bits.set(i, false);
    }

    #[inline]
    pub fn get(&self, a: Atom, b: Atom, c: Atom) -> bool {
        self.bits.contains(self.index(a, b, c))
    }

    /// All consistent triples in lexicographic order.
    pub fn triples(&self) -> impl Iterator<Item = [Atom; 3]> + '_ {
        let k = self.k;
        self.bits.ones().map(move |i| [i / (k * k), (i / k) % k, i % k])
    }
}

/// How the consistent-triple predicate is stored. Dense tables carry the
/// full cube; rule-backed structures keep a closure plus a serializable
/// descriptor so documents can rebuild them.
#[derive(Clone)]
pub enum ConsistencyStore {
    Dense(TripleCube),
    Rule {
        descriptor: serde_json::Value,
        eval: Arc<dyn Fn(Atom, Atom, Atom) -> bool + Send + Sync>,
    },
}

impl std::fmt::Debug for ConsistencyStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConsistencyStore::Dense(_) => f.write_str("ConsistencyStore::Dense"),
            ConsistencyStore::Rule { descriptor, .. } => {
                write!(f, "ConsistencyStore::Rule({descriptor})")
            }
        }
    }
}

/// Above this atom count constructions switch from dense triple tables to
/// rule-backed evaluation.
pub const DENSE_ATOM_LIMIT: usize = 1 << 10;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RaError {
    #[error("converse table has {got} entries for {atoms} atoms")]
    ConverseLength { got: usize, atoms: usize },
    #[error("converse of atom {atom} is {image}, out of range for {atoms} atoms")]
    ConverseRange { atom: Atom, image: Atom, atoms: usize },
    #[error("identity atom {0} out of range")]
    IdentityRange(Atom),
    #[error("unknown atom id {id} (structure has {atoms} atoms)")]
    UnknownAtom { id: Atom, atoms: Atom },
    #[error("structure has {atoms} atoms, above the requested budget {budget}")]
    BudgetExceeded { atoms: usize, budget: usize },
}

#[derive(Clone, Debug)]
pub struct RaAtomStructure {
    names: Vec<String>,
    identity: Vec<bool>,
    converse: Vec<Atom>,
    consistency: ConsistencyStore,
}

impl RaAtomStructure {
    pub fn new(
        names: Vec<String>,
        identities: &[Atom],
        converse: Vec<Atom>,
        consistency: ConsistencyStore,
    ) -> Result<Self, RaError> {
        let k = names.len();
        if converse.len() != k {
            return Err(RaError::ConverseLength { got: converse.len(), atoms: k });
        }
        for (a, &img) in converse.iter().enumerate() {
            if img >= k {
                return Err(RaError::ConverseRange { atom: a, image: img, atoms: k });
            }
        }
        let mut identity = vec![false; k];
        for &e in identities {
            if e >= k {
                return Err(RaError::IdentityRange(e));
            }
            identity[e] = true;
        }
        Ok(RaAtomStructure { names, identity, converse, consistency })
    }

    pub fn atom_count(&self) -> usize {
        self.names.len()
    }

    pub fn atoms(&self) -> std::ops::Range<Atom> {
        0..self.atom_count()
    }

    pub fn name(&self, a: Atom) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn atom_by_name(&self, name: &str) -> Option<Atom> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_identity(&self, a: Atom) -> bool {
        self.identity[a]
    }

    pub fn identity_atoms(&self) -> Vec<Atom> {
        (0..self.atom_count()).filter(|&a| self.identity[a]).collect()
    }

    pub fn converse(&self, a: Atom) -> Atom {
        self.converse[a]
    }

    pub fn all_self_converse(&self) -> bool {
        self.converse.iter().enumerate().all(|(a, &c)| a == c)
    }

    pub fn consistency(&self) -> &ConsistencyStore {
        &self.consistency
    }

    #[inline]
    pub fn consistent(&self, a: Atom, b: Atom, c: Atom) -> bool {
        debug_assert!(a < self.atom_count() && b < self.atom_count() && c < self.atom_count());
        match &self.consistency {
            ConsistencyStore::Dense(cube) => cube.get(a, b, c),
            ConsistencyStore::Rule { eval, .. } => eval(a, b, c),
        }
    }

    fn check_atom(&self, a: Atom) -> Result<(), RaError> {
        if a >= self.atom_count() {
            Err(RaError::UnknownAtom { id: a, atoms: self.atom_count() })
        } else {
            Ok(())
        }
    }

    /// All c with c below a;b.
    pub fn compose_atoms(&self, a: Atom, b: Atom) -> Result<AtomSet, RaError> {
        self.check_atom(a)?;
        self.check_atom(b)?;
        let k = self.atom_count();
        let mut out = FixedBitSet::with_capacity(k);
        for c in 0..k {
            if self.consistent(a, b, c) {
                out.insert(c);
            }
        }
        Ok(out)
    }

    /// Force the consistent-triple predicate into a dense cube.
    pub fn materialize(&self, budget: usize) -> Result<TripleCube, RaError> {
        let k = self.atom_count();
        if k > budget {
            return Err(RaError::BudgetExceeded { atoms: k, budget });
        }
        match &self.consistency {
            ConsistencyStore::Dense(cube) => Ok(cube.clone()),
            ConsistencyStore::Rule { eval, .. } => {
                let mut cube = TripleCube::new(k);
                for a in 0..k {
                    for b in 0..k {
                        for c in 0..k {
                            if eval(a, b, c) {
                                cube.set(a, b, c);
                            }
                        }
                    }
                }
                Ok(cube)
            }
        }
    }

    /// True when every atom occurs in at least one consistent triple; in a
    /// validated structure this is what makes top;top = top.
    pub fn every_atom_in_some_triple(&self) -> bool {
        let k = self.atom_count();
        let mut seen = vec![false; k];
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    if self.consistent(a, b, c) {
                        seen[a] = true;
                        seen[b] = true;
                        seen[c] = true;
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A single law failure with its witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LawViolation {
    /// conv(conv(a)) != a.
    ConverseInvolution { atom: Atom, image: Atom },
    /// consistent(e, a, b) disagreed with a == b for an identity atom e.
    IdentityLaw { e: Atom, a: Atom, b: Atom, consistent: bool },
    /// The three Peircean readings of a triple disagreed.
    CycleLaw { a: Atom, b: Atom, c: Atom, original: bool, left: bool, right: bool },
}

pub const MAX_REPORTED_VIOLATIONS: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<LawViolation>,
    /// True when the scan stopped early because the report was full.
    pub truncated: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, v: LawViolation) -> bool {
        if self.violations.len() < MAX_REPORTED_VIOLATIONS {
            self.violations.push(v);
            true
        } else {
            self.truncated = true;
            false
        }
    }
}

/// Check every law by full triple enumeration: converse involution, the
/// identity law, and the Peircean cycle law. Structural defects (shape
/// errors) are rejected when the structure is built, not here.
pub fn validate_atom_structure(s: &RaAtomStructure) -> ValidationReport {
    let mut report = ValidationReport::default();
    let k = s.atom_count();
    for a in 0..k {
        let img = s.converse(a);
        if s.converse(img) != a
            && !report.push(LawViolation::ConverseInvolution { atom: a, image: img })
        {
            return report;
        }
    }
    for e in 0..k {
        if !s.is_identity(e) {
            continue;
        }
        for a in 0..k {
            for b in 0..k {
                let consistent = s.consistent(e, a, b);
                if consistent != (a == b)
                    && !report.push(LawViolation::IdentityLaw { e, a, b, consistent })
                {
                    return report;
                }
            }
        }
    }
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let original = s.consistent(a, b, c);
                let left = s.consistent(s.converse(a), c, b);
                let right = s.consistent(c, s.converse(b), a);
                if (original != left || original != right)
                    && !report.push(LawViolation::CycleLaw { a, b, c, original, left, right })
                {
                    return report;
                }
            }
        }
    }
    report
}

/// Close a seed triple set under the two Peircean transforms, with the
/// identity triples for the given identity atoms added first.
pub fn peircean_closure(
    k: usize,
    identities: &[Atom],
    converse: &[Atom],
    seed: impl IntoIterator<Item = [Atom; 3]>,
) -> TripleCube {
    let mut cube = TripleCube::new(k);
    let mut work: Vec<[Atom; 3]> = seed.into_iter().collect();
    for &e in identities {
        for a in 0..k {
            work.push([e, a, a]);
        }
    }
    while let Some([a, b, c]) = work.pop() {
        if cube.get(a, b, c) {
            continue;
        }
        cube.set(a, b, c);
        work.push([converse[a], c, b]);
        work.push([c, converse[b], a]);
    }
    cube
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarrierMode {
    /// Materialize every element of the powerset (small structures only).
    Explicit,
    /// Elements are produced lazily as atom sets.
    Lazy,
}

pub const EXPLICIT_CARRIER_ATOM_BUDGET: usize = 16;

/// The complex algebra over an atom structure: elements are atom sets,
/// all operations are completely additive.
pub struct FiniteRa<'a> {
    s: &'a RaAtomStructure,
    mode: CarrierMode,
    // manual Debug below: ConsistencyStore may hold a closure
}

impl std::fmt::Debug for FiniteRa<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteRa")
            .field("atoms", &self.s.atom_count())
            .field("mode", &self.mode)
            .finish()
    }
}

pub fn complex_algebra(
    s: &RaAtomStructure,
    mode: CarrierMode,
) -> Result<FiniteRa<'_>, RaError> {
    if mode == CarrierMode::Explicit && s.atom_count() > EXPLICIT_CARRIER_ATOM_BUDGET {
        return Err(RaError::BudgetExceeded {
            atoms: s.atom_count(),
            budget: EXPLICIT_CARRIER_ATOM_BUDGET,
        });
    }
    Ok(FiniteRa { s, mode })
}

impl<'a> FiniteRa<'a> {
    pub fn structure(&self) -> &'a RaAtomStructure {
        self.s
    }

    pub fn bot(&self) -> AtomSet {
        FixedBitSet::with_capacity(self.s.atom_count())
    }

    pub fn top(&self) -> AtomSet {
        let mut t = self.bot();
        t.insert_range(..);
        t
    }

    pub fn identity(&self) -> AtomSet {
        atom_set(self.s.atom_count(), self.s.identity_atoms())
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

    pub fn converse(&self, x: &AtomSet) -> AtomSet {
        atom_set(self.s.atom_count(), x.ones().map(|a| self.s.converse(a)))
    }

    pub fn compose(&self, x: &AtomSet, y: &AtomSet) -> AtomSet {
        let mut out = self.bot();
        for a in x.ones() {
            for b in y.ones() {
                for c in 0..self.s.atom_count() {
                    if self.s.consistent(a, b, c) {
                        out.insert(c);
                    }
                }
            }
        }
        out
    }

    pub fn leq(&self, x: &AtomSet, y: &AtomSet) -> bool {
        x.is_subset(y)
    }

    /// Every element of the carrier; refused outside explicit mode.
    pub fn carrier(&self) -> Result<Vec<AtomSet>, RaError> {
        if self.mode != CarrierMode::Explicit {
            return Err(RaError::BudgetExceeded {
                atoms: self.s.atom_count(),
                budget: EXPLICIT_CARRIER_ATOM_BUDGET,
            });
        }
        let k = self.s.atom_count();
        let mut out = Vec::with_capacity(1 << k);
        for code in 0u64..(1u64 << k) {
            out.push(atom_set(k, (0..k).filter(|&a| code & (1 << a) != 0)));
        }
        Ok(out)
    }
}
