//! Blow-up-and-blur: replace each diversity atom of a small base
//! structure by infinitely many indexed copies, spread across a family of
//! "blur" subsets, so that the copies can no longer be told apart by the
//! algebra's own terms.
//!
//! The blown-up structure has an identity plus atoms `(i, P, W)` where
//! `i` is a copy index, `P` a diversity atom of the base, and `W` a blur
//! containing `P`.  A diversity triple is consistent when its blur triple
//! is safe (every base triple drawn from the three blurs is consistent),
//! or when the copy indices form an arithmetic progression and the base
//! atoms form a consistent base triple.  Finite approximants truncate the
//! copy index; the term-level algebra keeps the copy index symbolic as
//! finite/cofinite index sets per blur block.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::ra::{
    validate_atom_structure, ConsistencyStore, RaAtomStructure, RaError, TripleCube,
    DENSE_ATOM_LIMIT,
};
use crate::Atom;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BlurError {
    #[error("base structure fails its own laws")]
    BaseInvalid,
    #[error("base structure must have exactly one identity atom")]
    BaseIdentityNotUnique,
    #[error("base atoms must all be self-converse")]
    BaseNotSelfConverse,
    #[error("blur {0} is empty")]
    EmptyBlur(usize),
    #[error("blur {blur} contains atom {atom}, which is not a diversity atom of the base")]
    BadBlurAtom { blur: usize, atom: Atom },
    #[error("need at least one blur")]
    NoBlurs,
    #[error("truncation {0} is too small, need at least 3")]
    TruncationTooSmall(usize),
    #[error("subset size {size} exceeds the {atoms} diversity atoms")]
    SubsetTooLarge { size: usize, atoms: usize },
    #[error("structure error: {0}")]
    Structure(#[from] RaError),
}

/// A blur system over a base structure: the blur subsets and the copy
/// truncation used for finite approximants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlurSpec {
    pub truncation: usize,
    pub blurs: Vec<Vec<Atom>>,
}

impl BlurSpec {
    pub fn new(truncation: usize, blurs: Vec<Vec<Atom>>) -> Self {
        let blurs = blurs
            .into_iter()
            .map(|b| {
                let set: BTreeSet<Atom> = b.into_iter().collect();
                set.into_iter().collect()
            })
            .collect();
        BlurSpec { truncation, blurs }
    }
}

fn check_base(base: &RaAtomStructure) -> Result<Atom, BlurError> {
    let ids = base.identity_atoms();
    if ids.len() != 1 {
        return Err(BlurError::BaseIdentityNotUnique);
    }
    if !base.all_self_converse() {
        return Err(BlurError::BaseNotSelfConverse);
    }
    if !validate_atom_structure(base).is_valid() {
        return Err(BlurError::BaseInvalid);
    }
    Ok(ids[0])
}

fn check_spec(base: &RaAtomStructure, spec: &BlurSpec) -> Result<Atom, BlurError> {
    let id = check_base(base)?;
    if spec.truncation < 3 {
        return Err(BlurError::TruncationTooSmall(spec.truncation));
    }
    if spec.blurs.is_empty() {
        return Err(BlurError::NoBlurs);
    }
    for (w, blur) in spec.blurs.iter().enumerate() {
        if blur.is_empty() {
            return Err(BlurError::EmptyBlur(w));
        }
        for &p in blur {
            if p >= base.atom_count() || p == id {
                return Err(BlurError::BadBlurAtom { blur: w, atom: p });
            }
        }
    }
    Ok(id)
}

/// All size-`l` subsets of the base's diversity atoms, each repeated
/// `mu` times.  The repeats are distinct blurs with equal carrier.
pub fn subset_blurs(base: &RaAtomStructure, l: usize, mu: usize) -> Result<Vec<Vec<Atom>>, BlurError> {
    let id = check_base(base)?;
    let diversity: Vec<Atom> = base.atoms().filter(|&a| a != id).collect();
    if l == 0 || l > diversity.len() {
        return Err(BlurError::SubsetTooLarge { size: l, atoms: diversity.len() });
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; l];
    fn rec(
        diversity: &[Atom],
        l: usize,
        start: usize,
        pick: &mut Vec<usize>,
        depth: usize,
        out: &mut Vec<Vec<Atom>>,
        mu: usize,
    ) {
        if depth == l {
            let subset: Vec<Atom> = pick[..l].iter().map(|&i| diversity[i]).collect();
            for _ in 0..mu {
                out.push(subset.clone());
            }
            return;
        }
        for i in start..diversity.len() {
            pick[depth] = i;
            rec(diversity, l, i + 1, pick, depth + 1, out, mu);
        }
    }
    rec(&diversity, l, 0, &mut pick, 0, &mut out, mu);
    Ok(out)
}

/// `a <= b; c` for every `a` in `u`, `b` in `v`, `c` in `w`.  Over a
/// validated self-converse base this predicate is invariant under
/// permuting the three subsets.
pub fn safe(base: &RaAtomStructure, u: &[Atom], v: &[Atom], w: &[Atom]) -> bool {
    u.iter().all(|&a| v.iter().all(|&b| w.iter().all(|&c| base.consistent(b, c, a))))
}

/// Some ordering of the copy indices is an arithmetic progression.
pub fn evenly_distributed(i: u64, j: u64, k: u64) -> bool {
    let mut v = [i, j, k];
    v.sort_unstable();
    v[2] - v[1] == v[1] - v[0]
}

/// A finite approximant of the blown-up structure, with the decode
/// tables needed to talk about blocks and copies of base atoms.
#[derive(Clone, Debug)]
pub struct BlownStructure {
    pub structure: RaAtomStructure,
    pub spec: BlurSpec,
    /// Decode table: atom id 1 + n maps to `atom_info[n] = (copy, base atom, blur)`.
    pub atom_info: Vec<(usize, Atom, usize)>,
}

impl BlownStructure {
    /// Atom id of copy `i` of base atom `p` inside blur `w`.
    pub fn atom_id(&self, i: usize, p: Atom, w: usize) -> Option<Atom> {
        self.atom_info.iter().position(|&info| info == (i, p, w)).map(|n| n + 1)
    }

    /// Join of all copies of base atom `p` across every blur containing it.
    pub fn base_atom_join(&self, p: Atom) -> crate::ra::AtomSet {
        let mut out = crate::ra::AtomSet::with_capacity(self.structure.atom_count());
        for (n, &(_, q, _)) in self.atom_info.iter().enumerate() {
            if q == p {
                out.insert(n + 1);
            }
        }
        out
    }

    /// Join of every atom in blur block `w`.
    pub fn block_join(&self, w: usize) -> crate::ra::AtomSet {
        let mut out = crate::ra::AtomSet::with_capacity(self.structure.atom_count());
        for (n, &(_, _, b)) in self.atom_info.iter().enumerate() {
            if b == w {
                out.insert(n + 1);
            }
        }
        out
    }
}

fn safe_table(base: &RaAtomStructure, blurs: &[Vec<Atom>]) -> Vec<bool> {
    let m = blurs.len();
    let mut table = vec![false; m * m * m];
    for u in 0..m {
        for v in 0..m {
            for w in 0..m {
                table[(u * m + v) * m + w] = safe(base, &blurs[u], &blurs[v], &blurs[w]);
            }
        }
    }
    table
}

/// Builds the finite approximant with copy indices below the truncation.
pub fn blur_structure(base: &RaAtomStructure, spec: &BlurSpec) -> Result<BlownStructure, BlurError> {
    check_spec(base, spec)?;
    let t = spec.truncation;
    let mut names = vec!["1'".to_owned()];
    let mut atom_info = Vec::new();
    for (w, blur) in spec.blurs.iter().enumerate() {
        for &p in blur {
            for i in 0..t {
                names.push(format!("a{i}|{}|W{w}", base.name(p)));
                atom_info.push((i, p, w));
            }
        }
    }
    let k = names.len();
    let converse: Vec<Atom> = (0..k).collect();
    let st = safe_table(base, &spec.blurs);
    let m = spec.blurs.len();
    let cube = base.materialize(base.atom_count())?;
    let info = atom_info.clone();
    let rule = move |a: Atom, b: Atom, c: Atom| {
        if a == 0 || b == 0 || c == 0 {
            return (a == 0 && b == c) || (b == 0 && a == c) || (c == 0 && a == b);
        }
        let (i, p, u) = info[a - 1];
        let (j, q, v) = info[b - 1];
        let (l, r, w) = info[c - 1];
        st[(u * m + v) * m + w]
            || (evenly_distributed(i as u64, j as u64, l as u64) && cube.get(p, q, r))
    };
    let consistency = if k <= DENSE_ATOM_LIMIT {
        let mut dense = TripleCube::new(k);
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    if rule(a, b, c) {
                        dense.set(a, b, c);
                    }
                }
            }
        }
        ConsistencyStore::Dense(dense)
    } else {
        let descriptor = serde_json::json!({
            "rule": "blur",
            "params": {
                "truncation": t,
                "blurs": spec.blurs,
                "base_atoms": base.names(),
            },
        });
        ConsistencyStore::Rule { descriptor, eval: Arc::new(rule) }
    };
    let structure = RaAtomStructure::new(names, &[0], converse, consistency)?;
    Ok(BlownStructure { structure, spec: spec.clone(), atom_info })
}

/// Outcome of one blur condition, with a concrete witness on failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionStatus {
    Holds,
    Fails(BlurWitness),
}

impl ConditionStatus {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionStatus::Holds)
    }
}

/// Concrete data showing why a blur condition fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlurWitness {
    EmptyBlur { blur: usize },
    UncoveredAtom { atom: Atom },
    MissingTriple { p: Atom, blur: usize, r: Atom },
    /// No blur is safe for every listed (V, W) pair of blur indices.
    NoSafeBlur { pairs: Vec<(usize, usize)> },
    /// The blur misses the intersection of the listed compositions.
    EmptyIntersection { pairs: Vec<(Atom, Atom)>, blur: usize },
}

/// Report for the five blur conditions at arity `n`.
#[derive(Clone, Debug)]
pub struct ComplexBlurReport {
    pub n: usize,
    pub conditions: [ConditionStatus; 5],
}

impl ComplexBlurReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds())
    }
}

fn tuples<T: Copy>(choices: &[T], len: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for &c in choices {
                let mut t = prefix.clone();
                t.push(c);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Checks the five conditions that make a blur system strong enough to
/// carry an `n`-dimensional lifting: nonempty blurs, full coverage,
/// composition density, joint safety, and joint intersection.
pub fn check_complex_blur(
    base: &RaAtomStructure,
    spec: &BlurSpec,
    n: usize,
) -> Result<ComplexBlurReport, BlurError> {
    let id = check_spec(base, spec)?;
    let diversity: Vec<Atom> = base.atoms().filter(|&a| a != id).collect();
    let blur_idx: Vec<usize> = (0..spec.blurs.len()).collect();
    let cube = base.materialize(base.atom_count())?;
    let st = safe_table(base, &spec.blurs);
    let m = spec.blurs.len();

    // (1) every blur is nonempty (structural after check_spec, re-checked
    // so the report stands alone).
    let c1 = spec
        .blurs
        .iter()
        .position(|b| b.is_empty())
        .map(|w| ConditionStatus::Fails(BlurWitness::EmptyBlur { blur: w }))
        .unwrap_or(ConditionStatus::Holds);

    // (2) the blurs jointly cover every diversity atom.
    let mut covered = vec![false; base.atom_count()];
    for blur in &spec.blurs {
        for &p in blur {
            covered[p] = true;
        }
    }
    let c2 = diversity
        .iter()
        .find(|&&p| !covered[p])
        .map(|&p| ConditionStatus::Fails(BlurWitness::UncoveredAtom { atom: p }))
        .unwrap_or(ConditionStatus::Holds);

    // (3) composing any diversity atom with any blur reaches every
    // diversity atom: for all P and W, I is below P; W.
    let mut c3 = ConditionStatus::Holds;
    'c3: for &p in &diversity {
        for (w, blur) in spec.blurs.iter().enumerate() {
            for &r in &diversity {
                if !blur.iter().any(|&b| cube.get(p, b, r)) {
                    c3 = ConditionStatus::Fails(BlurWitness::MissingTriple { p, blur: w, r });
                    break 'c3;
                }
            }
        }
    }

    // (4) for every choice of n-1 blur pairs there is one blur safe for
    // all of them.
    let mut c4 = ConditionStatus::Holds;
    'c4: for vs in tuples(&blur_idx, n - 1) {
        for ws in tuples(&blur_idx, n - 1) {
            let ok = blur_idx.iter().any(|&t| {
                vs.iter().zip(&ws).all(|(&v, &w)| st[(v * m + w) * m + t])
            });
            if !ok {
                let pairs = vs.iter().copied().zip(ws.iter().copied()).collect();
                c4 = ConditionStatus::Fails(BlurWitness::NoSafeBlur { pairs });
                break 'c4;
            }
        }
    }

    // (5) every blur meets the intersection of any n-1 compositions of
    // diversity atoms.
    let k = base.atom_count();
    let mut comp = vec![Vec::new(); k * k];
    for &p in &diversity {
        for &q in &diversity {
            comp[p * k + q] = diversity.iter().copied().filter(|&r| cube.get(p, q, r)).collect();
        }
    }
    let mut c5 = ConditionStatus::Holds;
    'c5: for ps in tuples(&diversity, n - 1) {
        for qs in tuples(&diversity, n - 1) {
            let mut meet: BTreeSet<Atom> = comp[ps[0] * k + qs[0]].iter().copied().collect();
            for i in 1..n - 1 {
                meet.retain(|r| comp[ps[i] * k + qs[i]].contains(r));
            }
            for (w, blur) in spec.blurs.iter().enumerate() {
                if !blur.iter().any(|b| meet.contains(b)) {
                    let pairs = ps.iter().copied().zip(qs.iter().copied()).collect();
                    c5 = ConditionStatus::Fails(BlurWitness::EmptyIntersection { pairs, blur: w });
                    break 'c5;
                }
            }
        }
    }

    Ok(ComplexBlurReport { n, conditions: [c1, c2, c3, c4, c5] })
}

/// A subset of the copy indices, which range over all naturals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexSet {
    Fin(BTreeSet<u64>),
    /// All naturals except the listed ones.
    Cofin(BTreeSet<u64>),
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet::Fin(BTreeSet::new())
    }

    pub fn full() -> Self {
        IndexSet::Cofin(BTreeSet::new())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, IndexSet::Fin(s) if s.is_empty())
    }

    pub fn contains(&self, i: u64) -> bool {
        match self {
            IndexSet::Fin(s) => s.contains(&i),
            IndexSet::Cofin(e) => !e.contains(&i),
        }
    }

    pub fn complement(&self) -> Self {
        match self {
            IndexSet::Fin(s) => IndexSet::Cofin(s.clone()),
            IndexSet::Cofin(e) => IndexSet::Fin(e.clone()),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        match (self, other) {
            (IndexSet::Fin(a), IndexSet::Fin(b)) => IndexSet::Fin(a.union(b).copied().collect()),
            (IndexSet::Cofin(a), IndexSet::Cofin(b)) => {
                IndexSet::Cofin(a.intersection(b).copied().collect())
            }
            (IndexSet::Cofin(e), IndexSet::Fin(s)) | (IndexSet::Fin(s), IndexSet::Cofin(e)) => {
                IndexSet::Cofin(e.iter().copied().filter(|i| !s.contains(i)).collect())
            }
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.complement().union(&other.complement()).complement()
    }

    fn max_bound(&self) -> u64 {
        let set = match self {
            IndexSet::Fin(s) => s,
            IndexSet::Cofin(e) => e,
        };
        set.iter().next_back().map(|&m| m + 1).unwrap_or(0)
    }
}

/// Copy indices `j` completing an arithmetic progression with `i` and `k`
/// in some order.
fn third_indices(i: u64, k: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(3);
    let push = |out: &mut Vec<u64>, cand: i128| {
        if cand >= 0 {
            let c = cand as u64;
            if evenly_distributed(i, c, k) && !out.contains(&c) {
                out.push(c);
            }
        }
    };
    push(&mut out, 2 * i as i128 - k as i128);
    push(&mut out, 2 * k as i128 - i as i128);
    if (i + k) % 2 == 0 {
        push(&mut out, ((i + k) / 2) as i128);
    }
    out
}

/// `{k : E(i, j, k) for some i in a, j in b}` kept finite or cofinite.
fn e_image(a: &IndexSet, b: &IndexSet) -> IndexSet {
    if a.is_empty() || b.is_empty() {
        return IndexSet::empty();
    }
    match (a, b) {
        (IndexSet::Fin(sa), IndexSet::Fin(sb)) => {
            let mut out = BTreeSet::new();
            for &i in sa {
                for &j in sb {
                    for k in third_indices(i, j) {
                        out.insert(k);
                    }
                }
            }
            IndexSet::Fin(out)
        }
        (IndexSet::Cofin(_), IndexSet::Cofin(_)) => {
            // Pick d beyond both exception sets: (k, k+d, k+2d) is a
            // progression with both witnesses inside the sets.
            IndexSet::full()
        }
        _ => {
            // One side finite: beyond twice every relevant index the
            // witness 2k - i lands inside the cofinite side, so only a
            // finite prefix needs scanning.
            let bound = 2 * (a.max_bound() + b.max_bound() + 1);
            let mut missing = BTreeSet::new();
            for k in 0..=bound {
                if !e_member(a, b, k) {
                    missing.insert(k);
                }
            }
            IndexSet::Cofin(missing)
        }
    }
}

/// Exact membership test for the E-image, valid for every `k`.
fn e_member(a: &IndexSet, b: &IndexSet, k: u64) -> bool {
    match (a, b) {
        (IndexSet::Fin(sa), _) => sa.iter().any(|&i| third_indices(i, k).iter().any(|&j| b.contains(j))),
        (_, IndexSet::Fin(sb)) => sb.iter().any(|&j| third_indices(j, k).iter().any(|&i| a.contains(i))),
        (IndexSet::Cofin(ea), IndexSet::Cofin(eb)) => {
            let d = ea.iter().chain(eb.iter()).next_back().map(|&m| m + 1).unwrap_or(1);
            debug_assert!(a.contains(k + d) && b.contains(k + 2 * d));
            let _ = (k, d);
            true
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TermBlurError {
    #[error("composition leaves block {blur} neither finite nor cofinite")]
    NotBlockRepresentable { blur: usize },
    #[error(
        "symbolic composition disagrees with the truncated brute force at \
         copy {copy} of atom {base_atom} in blur {blur}: symbolic {symbolic}, brute {brute}"
    )]
    CrossCheckMismatch { copy: u64, base_atom: Atom, blur: usize, symbolic: bool, brute: bool },
    #[error("atom {atom} does not belong to blur {blur}")]
    AtomNotInBlur { atom: Atom, blur: usize },
    #[error("blur index {0} out of range")]
    BlurOutOfRange(usize),
}

/// An element of the term-level algebra: the identity bit plus, for each
/// blur block and each base atom in it, a finite or cofinite set of copy
/// indices.  Elements of the algebra are uniform per block (all columns
/// finite or all cofinite); `compose` rejects results that are not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CofiniteSet {
    pub identity: bool,
    parts: Vec<Vec<IndexSet>>,
}

impl CofiniteSet {
    /// Copy `i` of base atom position `p` in blur `w`.
    pub fn contains(&self, w: usize, p: usize, i: u64) -> bool {
        self.parts[w][p].contains(i)
    }

    pub fn parts(&self) -> &[Vec<IndexSet>] {
        &self.parts
    }

    fn diversity_empty(&self) -> bool {
        self.parts.iter().all(|b| b.iter().all(|s| s.is_empty()))
    }
}

/// The blown-up algebra with symbolic copy indices.  All Boolean
/// operations are exact; composition is computed symbolically and then
/// cross-checked against a brute-force scan of every copy index below
/// the truncation.
pub struct TermBlurAlgebra {
    blurs: Vec<Vec<Atom>>,
    truncation: u64,
    cube: TripleCube,
    safe: Vec<bool>,
}

impl TermBlurAlgebra {
    pub fn new(base: &RaAtomStructure, spec: &BlurSpec) -> Result<Self, BlurError> {
        check_spec(base, spec)?;
        let cube = base.materialize(base.atom_count())?;
        let safe = safe_table(base, &spec.blurs);
        Ok(TermBlurAlgebra {
            blurs: spec.blurs.clone(),
            truncation: spec.truncation as u64,
            cube,
            safe,
        })
    }

    pub fn blurs(&self) -> &[Vec<Atom>] {
        &self.blurs
    }

    fn shaped(&self, fill: IndexSet, identity: bool) -> CofiniteSet {
        CofiniteSet {
            identity,
            parts: self.blurs.iter().map(|b| vec![fill.clone(); b.len()]).collect(),
        }
    }

    pub fn zero(&self) -> CofiniteSet {
        self.shaped(IndexSet::empty(), false)
    }

    pub fn top(&self) -> CofiniteSet {
        self.shaped(IndexSet::full(), true)
    }

    pub fn identity_elem(&self) -> CofiniteSet {
        self.shaped(IndexSet::empty(), true)
    }

    /// The single atom (copy `i` of base atom `p` inside blur `w`).
    pub fn atom(&self, i: u64, p: Atom, w: usize) -> Result<CofiniteSet, TermBlurError> {
        let pos = self.column(w, p)?;
        let mut out = self.zero();
        out.parts[w][pos] = IndexSet::Fin([i].into_iter().collect());
        Ok(out)
    }

    /// The join of a whole blur block (every copy of every atom in it).
    pub fn block(&self, w: usize) -> Result<CofiniteSet, TermBlurError> {
        if w >= self.blurs.len() {
            return Err(TermBlurError::BlurOutOfRange(w));
        }
        let mut out = self.zero();
        for part in out.parts[w].iter_mut() {
            *part = IndexSet::full();
        }
        Ok(out)
    }

    fn column(&self, w: usize, p: Atom) -> Result<usize, TermBlurError> {
        let blur = self.blurs.get(w).ok_or(TermBlurError::BlurOutOfRange(w))?;
        blur.iter().position(|&q| q == p).ok_or(TermBlurError::AtomNotInBlur { atom: p, blur: w })
    }

    fn assert_shape(&self, x: &CofiniteSet) {
        assert_eq!(x.parts.len(), self.blurs.len(), "element shaped for another algebra");
        for (b, blur) in x.parts.iter().zip(&self.blurs) {
            assert_eq!(b.len(), blur.len(), "element shaped for another algebra");
        }
    }

    pub fn complement(&self, x: &CofiniteSet) -> CofiniteSet {
        self.assert_shape(x);
        CofiniteSet {
            identity: !x.identity,
            parts: x
                .parts
                .iter()
                .map(|b| b.iter().map(IndexSet::complement).collect())
                .collect(),
        }
    }

    pub fn join(&self, x: &CofiniteSet, y: &CofiniteSet) -> CofiniteSet {
        self.assert_shape(x);
        self.assert_shape(y);
        CofiniteSet {
            identity: x.identity || y.identity,
            parts: x
                .parts
                .iter()
                .zip(&y.parts)
                .map(|(a, b)| a.iter().zip(b).map(|(s, t)| s.union(t)).collect())
                .collect(),
        }
    }

    pub fn meet(&self, x: &CofiniteSet, y: &CofiniteSet) -> CofiniteSet {
        self.complement(&self.join(&self.complement(x), &self.complement(y)))
    }

    pub fn is_zero(&self, x: &CofiniteSet) -> bool {
        !x.identity && x.diversity_empty()
    }

    pub fn leq(&self, x: &CofiniteSet, y: &CofiniteSet) -> bool {
        self.is_zero(&self.meet(x, &self.complement(y)))
    }

    /// All atoms are self-converse, so converse is the identity map.
    pub fn converse(&self, x: &CofiniteSet) -> CofiniteSet {
        self.assert_shape(x);
        x.clone()
    }

    fn safe_lookup(&self, u: usize, v: usize, w: usize) -> bool {
        let m = self.blurs.len();
        self.safe[(u * m + v) * m + w]
    }

    /// Relational composition.  The symbolic result is verified against a
    /// brute-force membership scan of every copy index below the
    /// truncation before it is returned.
    pub fn compose(&self, x: &CofiniteSet, y: &CofiniteSet) -> Result<CofiniteSet, TermBlurError> {
        self.assert_shape(x);
        self.assert_shape(y);
        let m = self.blurs.len();
        let mut out = self.zero();
        out.identity =
            (x.identity && y.identity) || !self.is_zero(&self.meet_diversity(x, y));
        if x.identity {
            for (ob, yb) in out.parts.iter_mut().zip(&y.parts) {
                for (o, s) in ob.iter_mut().zip(yb) {
                    *o = o.union(s);
                }
            }
        }
        if y.identity {
            for (ob, xb) in out.parts.iter_mut().zip(&x.parts) {
                for (o, s) in ob.iter_mut().zip(xb) {
                    *o = o.union(s);
                }
            }
        }
        let x_blocks: Vec<usize> =
            (0..m).filter(|&w| x.parts[w].iter().any(|s| !s.is_empty())).collect();
        let y_blocks: Vec<usize> =
            (0..m).filter(|&w| y.parts[w].iter().any(|s| !s.is_empty())).collect();
        for wz in 0..m {
            let blanket = x_blocks.iter().any(|&wx| {
                y_blocks.iter().any(|&wy| self.safe_lookup(wx, wy, wz))
            });
            if blanket {
                for part in out.parts[wz].iter_mut() {
                    *part = IndexSet::full();
                }
                continue;
            }
            for &wx in &x_blocks {
                for (px, &p) in self.blurs[wx].iter().enumerate() {
                    if x.parts[wx][px].is_empty() {
                        continue;
                    }
                    for &wy in &y_blocks {
                        for (py, &q) in self.blurs[wy].iter().enumerate() {
                            if y.parts[wy][py].is_empty() {
                                continue;
                            }
                            let image = e_image(&x.parts[wx][px], &y.parts[wy][py]);
                            for (pz, &r) in self.blurs[wz].iter().enumerate() {
                                if self.cube.get(p, q, r) {
                                    out.parts[wz][pz] = out.parts[wz][pz].union(&image);
                                }
                            }
                        }
                    }
                }
            }
        }
        self.check_uniform(&out)?;
        self.cross_check(x, y, &out, &x_blocks, &y_blocks)?;
        Ok(out)
    }

    fn meet_diversity(&self, x: &CofiniteSet, y: &CofiniteSet) -> CofiniteSet {
        let mut meet = self.meet(x, y);
        meet.identity = false;
        meet
    }

    fn check_uniform(&self, x: &CofiniteSet) -> Result<(), TermBlurError> {
        for (w, block) in x.parts.iter().enumerate() {
            let cofinite = block.iter().filter(|s| matches!(s, IndexSet::Cofin(_))).count();
            if cofinite != 0 && cofinite != block.len() {
                return Err(TermBlurError::NotBlockRepresentable { blur: w });
            }
        }
        Ok(())
    }

    /// Brute-force membership of copy `k` of column (`wz`, `pz`) in x; y.
    fn brute_member(
        &self,
        x: &CofiniteSet,
        y: &CofiniteSet,
        x_blocks: &[usize],
        y_blocks: &[usize],
        wz: usize,
        pz: usize,
        k: u64,
    ) -> bool {
        if x.identity && y.parts[wz][pz].contains(k) {
            return true;
        }
        if y.identity && x.parts[wz][pz].contains(k) {
            return true;
        }
        let blanket = x_blocks.iter().any(|&wx| {
            y_blocks.iter().any(|&wy| self.safe_lookup(wx, wy, wz))
        });
        if blanket {
            return true;
        }
        let r = self.blurs[wz][pz];
        for &wx in x_blocks {
            for (px, &p) in self.blurs[wx].iter().enumerate() {
                if x.parts[wx][px].is_empty() {
                    continue;
                }
                for &wy in y_blocks {
                    for (py, &q) in self.blurs[wy].iter().enumerate() {
                        if y.parts[wy][py].is_empty() || !self.cube.get(p, q, r) {
                            continue;
                        }
                        if e_member(&x.parts[wx][px], &y.parts[wy][py], k) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn cross_check(
        &self,
        x: &CofiniteSet,
        y: &CofiniteSet,
        out: &CofiniteSet,
        x_blocks: &[usize],
        y_blocks: &[usize],
    ) -> Result<(), TermBlurError> {
        for (wz, block) in out.parts.iter().enumerate() {
            for (pz, part) in block.iter().enumerate() {
                for k in 0..self.truncation {
                    let symbolic = part.contains(k);
                    let brute = self.brute_member(x, y, x_blocks, y_blocks, wz, pz, k);
                    if symbolic != brute {
                        return Err(TermBlurError::CrossCheckMismatch {
                            copy: k,
                            base_atom: self.blurs[wz][pz],
                            blur: wz,
                            symbolic,
                            brute,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Restriction of a symbolic element to a finite approximant's atoms.
    pub fn truncate(&self, x: &CofiniteSet, blown: &BlownStructure) -> crate::ra::AtomSet {
        self.assert_shape(x);
        let mut out = crate::ra::AtomSet::with_capacity(blown.structure.atom_count());
        if x.identity {
            out.insert(0);
        }
        for (n, &(i, p, w)) in blown.atom_info.iter().enumerate() {
            let pos = self.blurs[w].iter().position(|&q| q == p).expect("atom in its blur");
            if x.parts[w][pos].contains(i as u64) {
                out.insert(n + 1);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::monk::{monk_atom, monk_ra};
    use crate::graphs::complete_graph;
    use crate::ra::{complex_algebra, set_members, CarrierMode};

    fn f21_base() -> RaAtomStructure {
        monk_ra(&complete_graph(2), 3).unwrap()
    }

    fn f21_spec(base: &RaAtomStructure, t: usize) -> BlurSpec {
        BlurSpec::new(t, subset_blurs(base, 2, 1).unwrap())
    }

    #[test]
    fn progression_predicate() {
        assert!(evenly_distributed(0, 1, 2));
        assert!(evenly_distributed(4, 2, 0));
        assert!(evenly_distributed(1, 1, 1));
        assert!(evenly_distributed(0, 2, 4));
        assert!(!evenly_distributed(0, 0, 1));
        assert!(!evenly_distributed(1, 2, 4));
    }

    #[test]
    fn third_indices_match_brute_force() {
        for i in 0..20u64 {
            for k in 0..20u64 {
                let got = {
                    let mut v = third_indices(i, k);
                    v.sort_unstable();
                    v
                };
                let expect: Vec<u64> =
                    (0..60).filter(|&j| evenly_distributed(i, j, k)).collect();
                assert_eq!(got, expect, "i={i} k={k}");
            }
        }
    }

    #[test]
    fn e_image_matches_brute_force() {
        let samples = [
            IndexSet::Fin([0u64, 3].into_iter().collect()),
            IndexSet::Fin([7u64].into_iter().collect()),
            IndexSet::empty(),
            IndexSet::full(),
            IndexSet::Cofin([0u64, 1, 2].into_iter().collect()),
            IndexSet::Cofin([5u64].into_iter().collect()),
        ];
        // Independent witness scan: any i, j below a horizon comfortably
        // beyond every candidate for k < 50.
        let horizon = 500u64;
        for a in &samples {
            for b in &samples {
                let img = e_image(a, b);
                for k in 0..50u64 {
                    let brute = (0..horizon).any(|i| {
                        a.contains(i)
                            && (0..horizon)
                                .any(|j| b.contains(j) && evenly_distributed(i, j, k))
                    });
                    assert_eq!(img.contains(k), brute, "a={a:?} b={b:?} k={k}");
                }
            }
        }
    }

    #[test]
    fn index_set_algebra() {
        let a = IndexSet::Fin([1u64, 2].into_iter().collect());
        let b = IndexSet::Cofin([2u64, 3].into_iter().collect());
        for k in 0..10u64 {
            assert_eq!(a.union(&b).contains(k), a.contains(k) || b.contains(k));
            assert_eq!(a.intersect(&b).contains(k), a.contains(k) && b.contains(k));
            assert_eq!(a.complement().contains(k), !a.contains(k));
        }
    }

    #[test]
    fn subset_blur_counts() {
        let base = f21_base();
        assert_eq!(subset_blurs(&base, 2, 1).unwrap().len(), 15);
        assert_eq!(subset_blurs(&base, 2, 2).unwrap().len(), 30);
        assert_eq!(subset_blurs(&base, 6, 1).unwrap().len(), 1);
        assert!(subset_blurs(&base, 7, 1).is_err());
    }

    #[test]
    fn safe_on_pair_blurs_is_disjointness() {
        let base = f21_base();
        let blurs = subset_blurs(&base, 2, 1).unwrap();
        for u in &blurs {
            for v in &blurs {
                for w in &blurs {
                    let disjoint = !u
                        .iter()
                        .any(|a| v.contains(a) && w.contains(a));
                    assert_eq!(safe(&base, u, v, w), disjoint);
                }
            }
        }
    }

    #[test]
    fn blown_structure_validates() {
        let base = f21_base();
        let spec = f21_spec(&base, 3);
        let blown = blur_structure(&base, &spec).unwrap();
        assert_eq!(blown.structure.atom_count(), 1 + 15 * 2 * 3);
        assert!(blown.structure.all_self_converse());
        let report = validate_atom_structure(&blown.structure);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(blown.structure.every_atom_in_some_triple());
    }

    #[test]
    fn blur_conditions_on_pair_blurs() {
        let base = f21_base();
        let spec = f21_spec(&base, 3);
        let report = check_complex_blur(&base, &spec, 3).unwrap();
        assert!(report.conditions[0].holds());
        assert!(report.conditions[1].holds());
        assert!(report.conditions[2].holds());
        assert!(report.conditions[3].holds());
        match &report.conditions[4] {
            ConditionStatus::Fails(BlurWitness::EmptyIntersection { pairs, blur }) => {
                // Re-validate the witness from scratch.
                let cube = base.materialize(base.atom_count()).unwrap();
                for &b in &spec.blurs[*blur] {
                    assert!(!pairs.iter().all(|&(p, q)| cube.get(p, q, b)));
                }
            }
            other => panic!("expected a concrete intersection failure, got {other:?}"),
        }
        // The known failing pattern: both pairs compose a vertex-0-colour
        // atom with itself, and the blur holds exactly those two atoms.
        let u0 = monk_atom(3, 0, 0);
        let v0 = monk_atom(3, 1, 0);
        let w = spec.blurs.iter().position(|b| b == &vec![u0, v0]).unwrap();
        let cube = base.materialize(base.atom_count()).unwrap();
        assert!(!cube.get(u0, u0, u0) && !cube.get(v0, v0, v0));
        assert!(!spec.blurs[w]
            .iter()
            .any(|&b| cube.get(u0, u0, b) && cube.get(v0, v0, b)));
    }

    #[test]
    fn term_algebra_identity_and_symmetry() {
        let base = f21_base();
        let spec = f21_spec(&base, 4);
        let alg = TermBlurAlgebra::new(&base, &spec).unwrap();
        let e = alg.identity_elem();
        let samples = [
            alg.atom(0, monk_atom(3, 0, 0), 0).unwrap(),
            alg.block(0).unwrap(),
            alg.block(7).unwrap(),
            alg.complement(&alg.block(3).unwrap()),
        ];
        for x in &samples {
            assert_eq!(&alg.compose(x, &e).unwrap(), x);
            assert_eq!(&alg.compose(&e, x).unwrap(), x);
            assert_eq!(&alg.converse(x), x);
        }
        for x in &samples {
            for y in &samples {
                // Converse is the identity map, so composition commutes.
                assert_eq!(alg.compose(x, y).unwrap(), alg.compose(y, x).unwrap());
            }
        }
    }

    #[test]
    fn term_algebra_boolean_laws() {
        let base = f21_base();
        let spec = f21_spec(&base, 4);
        let alg = TermBlurAlgebra::new(&base, &spec).unwrap();
        let x = alg.block(2).unwrap();
        let y = alg.atom(5, monk_atom(3, 1, 2), 14).unwrap();
        assert_eq!(alg.meet(&x, &y), alg.complement(&alg.join(&alg.complement(&x), &alg.complement(&y))));
        assert!(alg.leq(&y, &alg.join(&x, &y)));
        assert!(alg.leq(&alg.meet(&x, &y), &y));
        assert!(alg.is_zero(&alg.meet(&x, &alg.complement(&x))));
        assert_eq!(alg.complement(&alg.complement(&x)), x);
        assert!(alg.leq(&x, &alg.top()));
        assert!(alg.leq(&alg.zero(), &x));
    }

    #[test]
    fn block_composition_matches_truncated_structure() {
        let base = f21_base();
        let spec = f21_spec(&base, 3);
        let alg = TermBlurAlgebra::new(&base, &spec).unwrap();
        let blown = blur_structure(&base, &spec).unwrap();
        let fin = complex_algebra(&blown.structure, CarrierMode::Lazy).unwrap();
        for w1 in 0..spec.blurs.len() {
            for w2 in 0..spec.blurs.len() {
                let sym = alg
                    .compose(&alg.block(w1).unwrap(), &alg.block(w2).unwrap())
                    .unwrap();
                let via_structure = {
                    let mut x = blown.block_join(w1);
                    x = fin.compose(&x, &blown.block_join(w2));
                    x
                };
                assert_eq!(
                    set_members(&alg.truncate(&sym, &blown)),
                    set_members(&via_structure),
                    "blocks {w1}, {w2}"
                );
            }
        }
    }

    #[test]
    fn base_atom_joins_preserve_consistent_triples() {
        let base = f21_base();
        let spec = f21_spec(&base, 3);
        let blown = blur_structure(&base, &spec).unwrap();
        let fin = complex_algebra(&blown.structure, CarrierMode::Lazy).unwrap();
        let cube = base.materialize(base.atom_count()).unwrap();
        for p in 1..base.atom_count() {
            for q in 1..base.atom_count() {
                let comp = fin.compose(&blown.base_atom_join(p), &blown.base_atom_join(q));
                for r in 1..base.atom_count() {
                    if cube.get(p, q, r) {
                        assert!(
                            blown.base_atom_join(r).is_subset(&comp),
                            "join of {r} not below joins of {p}; {q}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn unrepresentable_composition_is_rejected() {
        // Base forbidding exactly the triples with multiset {x, x, z}.
        let names = vec!["1'".into(), "x".into(), "y".into(), "z".into()];
        let mut cube = TripleCube::new(4);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let ok = if a == 0 || b == 0 || c == 0 {
                        (a == 0 && b == c) || (b == 0 && a == c) || (c == 0 && a == b)
                    } else {
                        let mut m = [a, b, c];
                        m.sort_unstable();
                        m != [1, 1, 3]
                    };
                    if ok {
                        cube.set(a, b, c);
                    }
                }
            }
        }
        let base = RaAtomStructure::new(
            names,
            &[0],
            vec![0, 1, 2, 3],
            ConsistencyStore::Dense(cube),
        )
        .unwrap();
        assert!(validate_atom_structure(&base).is_valid());
        let spec = BlurSpec::new(3, vec![vec![1], vec![2, 3]]);
        let alg = TermBlurAlgebra::new(&base, &spec).unwrap();
        let x = alg.block(0).unwrap();
        let err = alg.compose(&x, &x).unwrap_err();
        assert_eq!(err, TermBlurError::NotBlockRepresentable { blur: 1 });
    }

    #[test]
    fn rejects_bad_specs() {
        let base = f21_base();
        assert_eq!(
            blur_structure(&base, &BlurSpec::new(2, vec![vec![1, 2]])).unwrap_err(),
            BlurError::TruncationTooSmall(2)
        );
        assert_eq!(
            blur_structure(&base, &BlurSpec::new(3, vec![])).unwrap_err(),
            BlurError::NoBlurs
        );
        assert_eq!(
            blur_structure(&base, &BlurSpec::new(3, vec![vec![0]])).unwrap_err(),
            BlurError::BadBlurAtom { blur: 0, atom: 0 }
        );
        assert_eq!(
            blur_structure(&base, &BlurSpec::new(3, vec![vec![]])).unwrap_err(),
            BlurError::EmptyBlur(0)
        );
    }
}
