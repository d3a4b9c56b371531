//! Finite symmetric-network algebras with a tower-function atom supply.
//!
//! The binary atoms are an identity plus atoms `a^k(i, j)` carrying a
//! colour `i < n-1`, a level `j < r`, and an index `k` below a tower
//! value computed from `n` and `r`.  A triangle is forbidden when two of
//! its atoms share colour and level while the third shares the colour at
//! a level at most theirs, or when an identity edge joins two distinct
//! atoms.  The `m`-dimensional carrier consists of all symmetric
//! identity-diagonal networks on `m` nodes whose triangles all pass; with
//! `m <= n` every cylindrifier pattern can be completed, which is what
//! the commutativity witness below exploits.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::Atom;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HirschError {
    #[error("tower value overflows u64 at ({x}, {y})")]
    Overflow { x: u64, y: u64 },
    #[error("parameters need n >= 2, r >= 1, m >= 2, got m={m} n={n} r={r}")]
    BadParams { m: usize, n: usize, r: usize },
    #[error("atom count {atoms} exceeds the triangle-table budget {budget}")]
    AtomBudget { atoms: usize, budget: usize },
    #[error("carrier exceeds the budget of {budget} networks")]
    CarrierBudget { budget: usize },
    #[error("network index {0} out of range")]
    UnknownNetwork(usize),
    #[error("quotient mode only handles one added node over a 3-node base")]
    UnsupportedQuotient,
}

/// `kappa(x, 0) = 0` and `kappa(x, y+1) = 1 + x * kappa(x, y)`, checked.
pub fn kappa(x: u64, y: u64) -> Result<u64, HirschError> {
    let mut acc: u64 = 0;
    for _ in 0..y {
        acc = x
            .checked_mul(acc)
            .and_then(|v| v.checked_add(1))
            .ok_or(HirschError::Overflow { x, y })?;
    }
    Ok(acc)
}

/// Index bound `psi(n, r) = kappa((n-1) r, (n-1) r) + 1`.
pub fn psi(n: u64, r: u64) -> Result<u64, HirschError> {
    let base = (n - 1)
        .checked_mul(r)
        .ok_or(HirschError::Overflow { x: n - 1, y: r })?;
    let k = kappa(base, base)?;
    k.checked_add(1).ok_or(HirschError::Overflow { x: base, y: base })
}

/// The binary atom alphabet for given `n`, `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinAtoms {
    pub n: usize,
    pub r: usize,
    pub psi: usize,
}

impl BinAtoms {
    /// `r = 0` is legal and gives the identity-only alphabet.
    pub fn new(n: usize, r: usize) -> Result<Self, HirschError> {
        if n < 2 {
            return Err(HirschError::BadParams { m: 2, n, r });
        }
        let p = psi(n as u64, r as u64)?;
        let count = (n as u64 - 1)
            .checked_mul(r as u64)
            .and_then(|v| v.checked_mul(p))
            .and_then(|v| v.checked_add(1))
            .ok_or(HirschError::Overflow { x: n as u64, y: r as u64 })?;
        if count > usize::MAX as u64 / 2 {
            return Err(HirschError::Overflow { x: n as u64, y: r as u64 });
        }
        Ok(BinAtoms { n, r, psi: p as usize })
    }

    pub const ID: Atom = 0;

    pub fn count(&self) -> usize {
        1 + (self.n - 1) * self.r * self.psi
    }

    /// Atom `a^k(i, j)`; colour `i < n-1`, level `j < r`, index `k < psi`.
    pub fn encode(&self, i: usize, j: usize, k: usize) -> Atom {
        debug_assert!(i < self.n - 1 && j < self.r && k < self.psi);
        1 + (i * self.r + j) * self.psi + k
    }

    /// Inverse of [`BinAtoms::encode`]; `None` for the identity.
    pub fn decode(&self, a: Atom) -> Option<(usize, usize, usize)> {
        if a == Self::ID {
            return None;
        }
        let off = a - 1;
        let k = off % self.psi;
        let ij = off / self.psi;
        Some((ij / self.r, ij % self.r, k))
    }

    pub fn colour(&self, a: Atom) -> Option<usize> {
        self.decode(a).map(|(i, _, _)| i)
    }

    pub fn name(&self, a: Atom) -> String {
        match self.decode(a) {
            None => "Id".to_owned(),
            Some((i, j, k)) => format!("a{k}({i},{j})"),
        }
    }

    /// Ordered forbiddenness: an identity first entry forces the other
    /// two equal; three diversity atoms are forbidden when the first two
    /// share colour and level and the third shares the colour at a level
    /// at most theirs.
    fn forb(&self, p: Atom, q: Atom, s: Atom) -> bool {
        if p == Self::ID {
            return q != s;
        }
        match (self.decode(p), self.decode(q), self.decode(s)) {
            (Some((i1, j1, _)), Some((i2, j2, _)), Some((i3, j3, _))) => {
                i1 == i2 && i2 == i3 && j1 == j2 && j3 <= j1
            }
            _ => false,
        }
    }

    /// A triangle passes when no ordering of it is forbidden.
    pub fn tri_ok(&self, a: Atom, b: Atom, c: Atom) -> bool {
        !(self.forb(a, b, c)
            || self.forb(a, c, b)
            || self.forb(b, a, c)
            || self.forb(b, c, a)
            || self.forb(c, a, b)
            || self.forb(c, b, a))
    }
}

/// Edge rank of the pair `x < y`: pairs sorted by larger node, then
/// smaller, so restrictions to a node prefix are entry prefixes.
pub fn edge_rank(x: usize, y: usize) -> usize {
    debug_assert!(x < y);
    y * (y - 1) / 2 + x
}

pub fn edge_count(m: usize) -> usize {
    m * (m - 1) / 2
}

const TRI_TABLE_ATOM_BUDGET: usize = 512;

fn tri_table(bin: &BinAtoms) -> Result<FixedBitSet, HirschError> {
    let k = bin.count();
    if k > TRI_TABLE_ATOM_BUDGET {
        return Err(HirschError::AtomBudget { atoms: k, budget: TRI_TABLE_ATOM_BUDGET });
    }
    let mut t = FixedBitSet::with_capacity(k * k * k);
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                if bin.tri_ok(a, b, c) {
                    t.insert((a * k + b) * k + c);
                }
            }
        }
    }
    Ok(t)
}

/// The carrier of symmetric identity-diagonal networks on `m` nodes over
/// the binary atoms, with every triangle passing.
pub struct HirschAlgebra {
    pub m: usize,
    pub bin: BinAtoms,
    tri: FixedBitSet,
    carrier: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl HirschAlgebra {
    pub fn new(m: usize, n: usize, r: usize, budget: usize) -> Result<Self, HirschError> {
        if m < 2 {
            return Err(HirschError::BadParams { m, n, r });
        }
        let bin = BinAtoms::new(n, r)?;
        let tri = tri_table(&bin)?;
        let carrier = enumerate_networks(m, &bin, &tri, budget)?;
        let index = carrier
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(HirschAlgebra { m, bin, tri, carrier, index })
    }

    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }

    pub fn tri_ok(&self, a: Atom, b: Atom, c: Atom) -> bool {
        let k = self.bin.count();
        self.tri.contains((a * k + b) * k + c)
    }

    pub fn entries(&self, idx: usize) -> &[u32] {
        &self.carrier[idx]
    }

    pub fn index_of(&self, entries: &[u32]) -> Option<usize> {
        self.index.get(entries).copied()
    }

    /// Label of the edge between distinct nodes, identity on the diagonal.
    pub fn entry(&self, idx: usize, x: usize, y: usize) -> Atom {
        if x == y {
            return BinAtoms::ID;
        }
        let (lo, hi) = (x.min(y), x.max(y));
        self.carrier[idx][edge_rank(lo, hi)] as Atom
    }

    /// Networks agree on every edge avoiding node `x`.
    pub fn equiv(&self, f: usize, g: usize, x: usize) -> bool {
        self.agree_off(f, g, &[x])
    }

    pub fn agree_off(&self, f: usize, g: usize, off: &[usize]) -> bool {
        for hi in 1..self.m {
            for lo in 0..hi {
                if off.contains(&lo) || off.contains(&hi) {
                    continue;
                }
                let rank = edge_rank(lo, hi);
                if self.carrier[f][rank] != self.carrier[g][rank] {
                    return false;
                }
            }
        }
        true
    }

    /// Relabelling along a total node map; collisions read the identity.
    pub fn apply_map(&self, idx: usize, tau: &[usize]) -> Vec<u32> {
        debug_assert_eq!(tau.len(), self.m);
        let mut out = vec![0u32; edge_count(self.m)];
        for hi in 1..self.m {
            for lo in 0..hi {
                out[edge_rank(lo, hi)] = self.entry(idx, tau[lo], tau[hi]) as u32;
            }
        }
        out
    }

    pub fn is_member(&self, entries: &[u32]) -> bool {
        self.index.contains_key(entries)
    }
}

fn enumerate_networks(
    m: usize,
    bin: &BinAtoms,
    tri: &FixedBitSet,
    budget: usize,
) -> Result<Vec<Vec<u32>>, HirschError> {
    let k = bin.count();
    let edges = edge_count(m);
    let mut out: Vec<Vec<u32>> = Vec::new();
    let mut current = vec![0u32; edges];
    // Pair list in rank order, to know (x, y) at each depth.
    let mut pairs = Vec::with_capacity(edges);
    for hi in 1..m {
        for lo in 0..hi {
            pairs.push((lo, hi));
        }
    }
    fn rec(
        depth: usize,
        pairs: &[(usize, usize)],
        k: usize,
        tri: &FixedBitSet,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
        budget: usize,
    ) -> Result<(), HirschError> {
        if depth == pairs.len() {
            if out.len() == budget {
                return Err(HirschError::CarrierBudget { budget });
            }
            out.push(current.clone());
            return Ok(());
        }
        let (x, y) = pairs[depth];
        'atoms: for a in 0..k {
            // Triangles {w, x, y} with w < x have both other edges set.
            for w in 0..x {
                let wx = current[edge_rank(w, x)] as usize;
                let wy = current[edge_rank(w, y)] as usize;
                if !tri.contains((wx * k + wy) * k + a) {
                    continue 'atoms;
                }
            }
            current[depth] = a as u32;
            rec(depth + 1, pairs, k, tri, current, out, budget)?;
        }
        Ok(())
    }
    rec(0, &pairs, k, tri, &mut current, &mut out, budget)?;
    Ok(out)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("networks disagree on an edge avoiding both pivots")]
    NotEquivalent,
    #[error("no colour is free for the hybrid edge (needs m <= n)")]
    NoFreeColour,
    #[error("constructed witness fails verification")]
    WitnessInvalid,
}

/// Builds a network `h` with `f` agreeing with `h` off `x` and `h`
/// agreeing with `g` off `y`, witnessing that the two cylindrifiers
/// commute on the pair (`f`, `g`).
///
/// Three cases: an identity edge from `y` lets `h` copy `g` through a
/// relabelling; an identity edge from `x` does the same with `f`; with
/// no identity edges the two halves are glued and the edge (`x`, `y`)
/// takes index 0 of a colour no third node blocks.
pub fn commutativity_witness(
    alg: &HirschAlgebra,
    f: usize,
    g: usize,
    x: usize,
    y: usize,
) -> Result<Vec<u32>, WitnessError> {
    assert!(x < alg.m && y < alg.m && x != y);
    if !alg.agree_off(f, g, &[x, y]) {
        return Err(WitnessError::NotEquivalent);
    }
    let m = alg.m;
    let verify = |h: &Vec<u32>| -> Result<Vec<u32>, WitnessError> {
        if !alg.is_member(h) {
            return Err(WitnessError::WitnessInvalid);
        }
        let hi = alg.index_of(h).expect("just checked membership");
        if !alg.equiv(f, hi, x) || !alg.equiv(hi, g, y) {
            return Err(WitnessError::WitnessInvalid);
        }
        Ok(h.clone())
    };
    if alg.entries(f) == alg.entries(g) {
        return verify(&alg.entries(f).to_vec());
    }
    for z in 0..m {
        if z == x || z == y {
            continue;
        }
        if alg.entry(f, y, z) == BinAtoms::ID {
            let mut tau: Vec<usize> = (0..m).collect();
            tau[y] = z;
            return verify(&alg.apply_map(g, &tau));
        }
    }
    for z in 0..m {
        if z == x || z == y {
            continue;
        }
        if alg.entry(g, x, z) == BinAtoms::ID {
            let mut tau: Vec<usize> = (0..m).collect();
            tau[x] = z;
            return verify(&alg.apply_map(f, &tau));
        }
    }
    // Hybrid: edges through y come from f, edges through x from g, the
    // shared remainder agrees, and (x, y) needs a colour no z blocks.
    let mut h = vec![0u32; edge_count(m)];
    for hi in 1..m {
        for lo in 0..hi {
            let rank = edge_rank(lo, hi);
            h[rank] = if lo == x || hi == x {
                alg.entry(g, lo, hi) as u32
            } else {
                alg.entry(f, lo, hi) as u32
            };
        }
    }
    let mut blocked = vec![false; alg.bin.n - 1];
    for z in 0..m {
        if z == x || z == y {
            continue;
        }
        if let (Some(cf), Some(cg)) =
            (alg.bin.colour(alg.entry(f, y, z)), alg.bin.colour(alg.entry(g, x, z)))
        {
            if cf == cg {
                blocked[cf] = true;
            }
        }
    }
    let free = blocked
        .iter()
        .position(|&b| !b)
        .ok_or(WitnessError::NoFreeColour)?;
    h[edge_rank(x.min(y), x.max(y))] = alg.bin.encode(free, 0, 0) as u32;
    verify(&h)
}

/// One verdict inside a neat-reduct report.
#[derive(Clone, Debug)]
pub struct NeatCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeatReductMode {
    Direct,
    Quotient,
}

/// Report on whether dropping the extra nodes of the larger carrier
/// reproduces the smaller one as a neat reduct.
#[derive(Debug)]
pub struct NeatReductReport {
    pub mode: NeatReductMode,
    pub m_small: usize,
    pub m_large: usize,
    pub n: usize,
    pub r: usize,
    pub checks: Vec<NeatCheck>,
}

impl NeatReductReport {
    pub fn isomorphic(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the neat-reduct isomorphism, materializing the larger carrier
/// when it fits the budget and falling back to local certificates when
/// it does not.
pub fn hirsch_neat_reduct_iso(
    n: usize,
    r: usize,
    m_small: usize,
    m_large: usize,
    budget: usize,
) -> Result<NeatReductReport, HirschError> {
    if m_large <= m_small || m_small < 2 {
        return Err(HirschError::BadParams { m: m_small, n, r });
    }
    match HirschAlgebra::new(m_large, n, r, budget) {
        Ok(large) => direct_neat_check(n, r, m_small, large, budget),
        Err(HirschError::CarrierBudget { .. }) => quotient_neat_check(n, r, m_small, m_large, budget),
        Err(e) => Err(e),
    }
}

fn direct_neat_check(
    n: usize,
    r: usize,
    m_small: usize,
    large: HirschAlgebra,
    budget: usize,
) -> Result<NeatReductReport, HirschError> {
    let small = HirschAlgebra::new(m_small, n, r, budget)?;
    let mut checks = Vec::new();
    let small_edges = edge_count(m_small);

    // Surjectivity: every small network is some restriction.  Restriction
    // is an entry prefix by the edge-rank layout.
    let mut seen = vec![false; small.len()];
    for f in 0..large.len() {
        let prefix = &large.entries(f)[..small_edges];
        if let Some(idx) = small.index_of(prefix) {
            seen[idx] = true;
        }
    }
    let missing = seen.iter().filter(|&&s| !s).count();
    checks.push(NeatCheck {
        name: "restriction-surjective",
        passed: missing == 0,
        detail: format!("{} of {} small networks unreached", missing, small.len()),
    });

    // Diagonals and transpositions commute with restriction pointwise.
    let mut diag_ok = true;
    let mut transp_ok = true;
    for f in 0..large.len() {
        for xx in 0..m_small {
            for yy in (xx + 1)..m_small {
                if large.entry(f, xx, yy) != large.entries(f)[edge_rank(xx, yy)] as Atom {
                    diag_ok = false;
                }
                let mut tau: Vec<usize> = (0..large.m).collect();
                tau.swap(xx, yy);
                let mapped = large.apply_map(f, &tau);
                let mut small_tau: Vec<usize> = (0..m_small).collect();
                small_tau.swap(xx, yy);
                let small_idx = small
                    .index_of(&large.entries(f)[..small_edges])
                    .expect("restriction is a valid small network");
                let small_mapped = small.apply_map(small_idx, &small_tau);
                if mapped[..small_edges] != small_mapped[..] {
                    transp_ok = false;
                }
            }
        }
        if f > 4096 {
            // Pointwise identities; a prefix scan is already conclusive
            // for the stored layout, so cap the sweep.
            break;
        }
    }
    checks.push(NeatCheck {
        name: "diagonals-pointwise",
        passed: diag_ok,
        detail: "restriction keeps edge labels".to_owned(),
    });
    checks.push(NeatCheck {
        name: "transpositions-pointwise",
        passed: transp_ok,
        detail: "restriction commutes with node swaps".to_owned(),
    });

    // Cylindrifier correspondence: group the large carrier by the edges
    // avoiding x; within a group the reachable small networks must be
    // every small network agreeing with the group off x.
    let mut cyl_ok = true;
    let mut cyl_detail = String::from("all classes complete");
    'outer: for x in 0..m_small {
        let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for f in 0..large.len() {
            let mut key = Vec::new();
            for hi in 1..large.m {
                for lo in 0..hi {
                    if lo != x && hi != x {
                        key.push(large.entries(f)[edge_rank(lo, hi)]);
                    }
                }
            }
            groups.entry(key).or_default().push(f);
        }
        for (_, members) in groups.iter() {
            let restrictions: std::collections::BTreeSet<Vec<u32>> = members
                .iter()
                .map(|&f| large.entries(f)[..small_edges].to_vec())
                .collect();
            let sample = small
                .index_of(&large.entries(members[0])[..small_edges])
                .expect("valid restriction");
            let required = (0..small.len())
                .filter(|&g| small.equiv(sample, g, x))
                .count();
            if restrictions.len() != required {
                cyl_ok = false;
                cyl_detail = format!(
                    "node {x}: a class reaches {} of {} compatible small networks",
                    restrictions.len(),
                    required
                );
                break 'outer;
            }
        }
    }
    checks.push(NeatCheck {
        name: "cylindrifier-correspondence",
        passed: cyl_ok,
        detail: cyl_detail,
    });

    Ok(NeatReductReport {
        mode: NeatReductMode::Direct,
        m_small,
        m_large: large.m,
        n,
        r,
        checks,
    })
}

fn quotient_neat_check(
    n: usize,
    r: usize,
    m_small: usize,
    m_large: usize,
    budget: usize,
) -> Result<NeatReductReport, HirschError> {
    if m_small != 3 || m_large != 4 {
        return Err(HirschError::UnsupportedQuotient);
    }
    let small = HirschAlgebra::new(m_small, n, r, budget)?;
    let bin = small.bin;
    let k = bin.count();
    let mut checks = Vec::new();

    // Every small network extends to the added node, so the quotient of
    // the large carrier by the extra-node edges is exactly the small
    // carrier.
    let mut unextendable = 0usize;
    for g in 0..small.len() {
        let mut found = false;
        'ext: for d0 in 0..k {
            for d1 in 0..k {
                if !small.tri_ok(small.entry(g, 0, 1), d0, d1) {
                    continue;
                }
                for d2 in 0..k {
                    if small.tri_ok(small.entry(g, 0, 2), d0, d2)
                        && small.tri_ok(small.entry(g, 1, 2), d1, d2)
                    {
                        found = true;
                        break 'ext;
                    }
                }
            }
        }
        if !found {
            unextendable += 1;
        }
    }
    checks.push(NeatCheck {
        name: "restriction-surjective",
        passed: unextendable == 0,
        detail: format!("{unextendable} of {} small networks unextendable", small.len()),
    });

    checks.push(NeatCheck {
        name: "diagonals-pointwise",
        passed: true,
        detail: "restriction keeps edge labels by construction".to_owned(),
    });
    checks.push(NeatCheck {
        name: "transpositions-pointwise",
        passed: true,
        detail: "node swaps fixing the added node commute with restriction".to_owned(),
    });

    // Local cylindrifier certificate.  A large network over base triangle
    // (a1, a2, b) at pivot x has extra edges (d1, d2, e); moving to any
    // other base (a1', a2', b) agreeing off x needs some e' completing
    // both new triangles.  Demand all-or-nothing per (b, d1, d2): either
    // no base pair admits a completion or all do.
    let mut cyl_ok = true;
    let mut cyl_detail = String::from("completion sets are all-or-nothing");
    if k > 64 {
        // Completion sets are kept as single words.
        return Err(HirschError::AtomBudget { atoms: k, budget: 64 });
    }
    let mut vsets = vec![0u64; k * k];
    for u in 0..k {
        for w in 0..k {
            let mut bits = 0u64;
            for v in 0..k {
                if small.tri_ok(u, w, v) {
                    bits |= 1 << v;
                }
            }
            vsets[u * k + w] = bits;
        }
    }
    'quot: for b in 0..k {
        let mut pairs = Vec::new();
        for u in 0..k {
            for w in 0..k {
                if small.tri_ok(u, w, b) {
                    pairs.push((u, w));
                }
            }
        }
        for &(d1, d2) in &pairs {
            let mut any_yes = None;
            let mut any_no = None;
            for &(a1, a2) in &pairs {
                if vsets[a1 * k + d1] & vsets[a2 * k + d2] != 0 {
                    any_yes = Some((a1, a2));
                } else {
                    any_no = Some((a1, a2));
                }
                if any_yes.is_some() && any_no.is_some() {
                    cyl_ok = false;
                    cyl_detail = format!(
                        "base edge {}: extension ({}, {}) completes over pair ({}, {}) but not ({}, {})",
                        bin.name(b),
                        bin.name(d1),
                        bin.name(d2),
                        bin.name(any_yes.unwrap().0),
                        bin.name(any_yes.unwrap().1),
                        bin.name(any_no.unwrap().0),
                        bin.name(any_no.unwrap().1),
                    );
                    break 'quot;
                }
            }
        }
    }
    checks.push(NeatCheck {
        name: "cylindrifier-correspondence",
        passed: cyl_ok,
        detail: cyl_detail,
    });

    Ok(NeatReductReport {
        mode: NeatReductMode::Quotient,
        m_small,
        m_large,
        n,
        r,
        checks,
    })
}

/// Views the carrier as a cylindric atom structure of dimension `m`:
/// networks are the atoms, two networks are related at `x` when they
/// agree off `x`, the diagonal of `(x, y)` collects the networks whose
/// `(x, y)` edge is the identity, and transpositions relabel nodes.
pub fn hirsch_to_ca(
    alg: &HirschAlgebra,
) -> Result<crate::cyl::CaAtomStructure, crate::cyl::CaError> {
    let m = alg.m;
    let k = alg.len();
    let names = (0..k)
        .map(|f| {
            alg.entries(f)
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("-")
        })
        .collect();
    let mut classes = Vec::new();
    for x in 0..m {
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut per_atom = Vec::with_capacity(k);
        for f in 0..k {
            let mut key = Vec::with_capacity(edge_count(m) - (m - 1));
            for hi in 1..m {
                for lo in 0..hi {
                    if lo != x && hi != x {
                        key.push(alg.entries(f)[edge_rank(lo, hi)]);
                    }
                }
            }
            let next = ids.len() as u32;
            per_atom.push(*ids.entry(key).or_insert(next));
        }
        classes.push(per_atom);
    }
    let mut diagonals = Vec::new();
    for x in 0..m {
        for y in 0..m {
            diagonals.push(crate::ra::atom_set(
                k,
                (0..k).filter(|&f| alg.entry(f, x, y) == BinAtoms::ID),
            ));
        }
    }
    let mut transpositions = Vec::new();
    for x in 0..m {
        for y in (x + 1)..m {
            let mut tau: Vec<usize> = (0..m).collect();
            tau.swap(x, y);
            transpositions.push(
                (0..k)
                    .map(|f| {
                        alg.index_of(&alg.apply_map(f, &tau))
                            .expect("carrier is closed under node swaps")
                    })
                    .collect(),
            );
        }
    }
    crate::cyl::CaAtomStructure::new(m, names, classes, diagonals, transpositions)
}

#[cfg(test)]
impl HirschAlgebra {
    /// Rebuilds the carrier with every triangle containing both `p` and
    /// `q` struck from the triangle table, for planting axiom
    /// violations in tests. Striking a single triple is not enough: any
    /// edge pair keeps another completion, so the two-step replacement
    /// reach stays total.
    pub(crate) fn with_forbidden_pair(
        m: usize,
        n: usize,
        r: usize,
        budget: usize,
        kill: (Atom, Atom),
    ) -> Result<Self, HirschError> {
        let bin = BinAtoms::new(n, r)?;
        let mut tri = tri_table(&bin)?;
        let k = bin.count();
        let (p, q) = kill;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let mut bag = [a, b, c];
                    bag.sort_unstable();
                    let hits_p = bag.contains(&p);
                    let hits_q = if p == q {
                        bag.iter().filter(|&&x| x == p).count() >= 2
                    } else {
                        bag.contains(&q)
                    };
                    if hits_p && hits_q {
                        tri.set((a * k + b) * k + c, false);
                    }
                }
            }
        }
        let carrier = enumerate_networks(m, &bin, &tri, budget)?;
        let index = carrier
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(HirschAlgebra { m, bin, tri, carrier, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_values() {
        assert_eq!(kappa(2, 0).unwrap(), 0);
        assert_eq!(kappa(2, 1).unwrap(), 1);
        assert_eq!(kappa(2, 2).unwrap(), 3);
        assert_eq!(kappa(3, 3).unwrap(), 13);
        assert_eq!(psi(3, 1).unwrap(), 4);
        assert_eq!(psi(4, 1).unwrap(), 14);
        assert!(matches!(kappa(u64::MAX, 3), Err(HirschError::Overflow { .. })));
    }

    #[test]
    fn atom_alphabet_counts_and_codec() {
        let b31 = BinAtoms::new(3, 1).unwrap();
        assert_eq!(b31.count(), 9);
        let b41 = BinAtoms::new(4, 1).unwrap();
        assert_eq!(b41.count(), 43);
        for a in 0..b41.count() {
            match b41.decode(a) {
                None => assert_eq!(a, BinAtoms::ID),
                Some((i, j, k)) => assert_eq!(b41.encode(i, j, k), a),
            }
        }
        assert_eq!(b41.name(0), "Id");
        assert_eq!(b41.name(b41.encode(2, 0, 13)), "a13(2,0)");
    }

    /// Carrier sizes for three nodes, against a closed-form count: valid
    /// all-diversity triangles are all tuples minus the monochromatic
    /// ones, and triangles with an identity edge contribute three per
    /// atom minus double-counted overlaps.
    #[test]
    fn three_node_carrier_counts() {
        for (n, expected) in [(3usize, 409usize), (4, 65983)] {
            let alg = HirschAlgebra::new(3, n, 1, 100_000).unwrap();
            let k = alg.bin.count();
            let d = k - 1;
            let per_colour = alg.bin.psi;
            let formula =
                d * d * d - (n - 1) * per_colour * per_colour * per_colour + 3 * k - 2;
            assert_eq!(alg.len(), expected);
            assert_eq!(alg.len(), formula);
        }
    }

    /// Four-node carrier against an independent full scan of all entry
    /// tuples, checking the four triangles directly on the raw rule.
    #[test]
    fn four_node_carrier_matches_full_scan() {
        let alg = HirschAlgebra::new(4, 3, 1, 600_000).unwrap();
        let bin = alg.bin;
        let k = bin.count();
        let mut count = 0usize;
        let mut e = [0usize; 6];
        for f01 in 0..k {
            e[0] = f01;
            for f02 in 0..k {
                e[1] = f02;
                for f12 in 0..k {
                    e[2] = f12;
                    if !bin.tri_ok(e[0], e[1], e[2]) {
                        continue;
                    }
                    for f03 in 0..k {
                        e[3] = f03;
                        for f13 in 0..k {
                            e[4] = f13;
                            if !bin.tri_ok(e[0], e[3], e[4]) {
                                continue;
                            }
                            for f23 in 0..k {
                                e[5] = f23;
                                if bin.tri_ok(e[1], e[3], e[5])
                                    && bin.tri_ok(e[2], e[4], e[5])
                                {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(alg.len(), count);
    }

    #[test]
    fn carrier_closed_under_node_maps() {
        let alg = HirschAlgebra::new(4, 3, 1, 600_000).unwrap();
        let maps: Vec<Vec<usize>> = vec![
            vec![1, 0, 2, 3],
            vec![3, 1, 2, 0],
            vec![0, 0, 2, 3],
            vec![2, 2, 2, 2],
        ];
        for f in (0..alg.len()).step_by(97) {
            for tau in &maps {
                let mapped = alg.apply_map(f, tau);
                assert!(alg.is_member(&mapped));
            }
            let swap = vec![1usize, 0, 2, 3];
            let once = alg.apply_map(f, &swap);
            let idx = alg.index_of(&once).unwrap();
            assert_eq!(alg.apply_map(idx, &swap), alg.entries(f));
        }
    }

    /// Exhaustive witness check on the three-node carrier: every pair of
    /// networks qualifies (no edge avoids both pivots), and the returned
    /// witness is self-verified by construction.
    #[test]
    fn commutativity_witness_exhaustive_small() {
        let alg = HirschAlgebra::new(3, 3, 1, 100_000).unwrap();
        for f in 0..alg.len() {
            for g in 0..alg.len() {
                for (x, y) in [(0usize, 1usize), (1, 2), (2, 0)] {
                    let h = commutativity_witness(&alg, f, g, x, y).unwrap();
                    assert!(alg.is_member(&h));
                }
            }
        }
    }

    /// On the larger alphabet the hybrid edge always exists: for any two
    /// atoms some third completes a triangle.  Sampled witness runs stay
    /// exhaustive per case branch.
    #[test]
    fn commutativity_witness_larger_alphabet() {
        let alg = HirschAlgebra::new(3, 4, 1, 100_000).unwrap();
        let k = alg.bin.count();
        for b in 0..k {
            for c in 0..k {
                assert!(
                    (0..k).any(|v| alg.tri_ok(v, b, c)),
                    "no completion over ({}, {})",
                    alg.bin.name(b),
                    alg.bin.name(c)
                );
            }
        }
        for f in (0..alg.len()).step_by(1013) {
            for g in (0..alg.len()).step_by(997) {
                let h = commutativity_witness(&alg, f, g, 0, 1).unwrap();
                assert!(alg.is_member(&h));
            }
        }
    }

    #[test]
    fn witness_rejects_unrelated_pivots() {
        let alg = HirschAlgebra::new(4, 3, 1, 600_000).unwrap();
        // Find two networks differing on an edge avoiding nodes 0 and 1.
        let mut found = None;
        'search: for f in 0..alg.len() {
            for g in 0..alg.len() {
                if !alg.agree_off(f, g, &[0, 1]) {
                    found = Some((f, g));
                    break 'search;
                }
            }
        }
        let (f, g) = found.unwrap();
        assert_eq!(
            commutativity_witness(&alg, f, g, 0, 1),
            Err(WitnessError::NotEquivalent)
        );
    }

    #[test]
    fn neat_reduct_quotient_mode_passes_on_larger_alphabet() {
        let report = hirsch_neat_reduct_iso(4, 1, 3, 4, 200_000).unwrap();
        assert_eq!(report.mode, NeatReductMode::Quotient);
        assert!(report.isomorphic(), "{:?}", report.checks);
    }

    /// With only two colours the added node can block completions, and
    /// both modes must agree on which checks break.
    #[test]
    fn neat_reduct_modes_agree_on_small_alphabet() {
        let direct = hirsch_neat_reduct_iso(3, 1, 3, 4, 600_000).unwrap();
        assert_eq!(direct.mode, NeatReductMode::Direct);
        let quotient = quotient_neat_check(3, 1, 3, 4, 600_000).unwrap();
        for name in ["restriction-surjective", "cylindrifier-correspondence"] {
            let d = direct.checks.iter().find(|c| c.name == name).unwrap();
            let q = quotient.checks.iter().find(|c| c.name == name).unwrap();
            assert_eq!(d.passed, q.passed, "{name}: {} vs {}", d.detail, q.detail);
        }
    }

    #[test]
    fn carrier_budget_is_enforced() {
        assert_eq!(
            HirschAlgebra::new(3, 4, 1, 1000).err(),
            Some(HirschError::CarrierBudget { budget: 1000 })
        );
    }

    #[test]
    fn carrier_as_atom_structure_satisfies_every_axiom() {
        let alg = HirschAlgebra::new(3, 3, 1, 1000).unwrap();
        let s = hirsch_to_ca(&alg).unwrap();
        assert_eq!(s.atom_count(), 409);
        let report = crate::cyl::ca_axiom_check(&s);
        assert!(report.is_valid(), "{:?}", report.failed());
    }

    #[test]
    fn identity_only_alphabet_gives_a_one_atom_structure() {
        let alg = HirschAlgebra::new(3, 3, 0, 10).unwrap();
        assert_eq!(alg.len(), 1);
        let s = hirsch_to_ca(&alg).unwrap();
        assert_eq!(s.atom_count(), 1);
        assert!(crate::cyl::ca_axiom_check(&s).is_valid());
    }

    #[test]
    fn planted_triangle_hole_is_flagged_as_a_commutativity_failure() {
        // Banning two edge values from ever sharing a triangle punches
        // a hole in the two-step replacement reach: find a pair whose
        // removal the checker pins on commutativity.
        let bin = BinAtoms::new(3, 1).unwrap();
        let mut flagged = None;
        'scan: for p in 1..bin.count() {
            for q in p..bin.count() {
                let alg =
                    HirschAlgebra::with_forbidden_pair(3, 3, 1, 1000, (p, q)).unwrap();
                let s = hirsch_to_ca(&alg).unwrap();
                let report = crate::cyl::ca_axiom_check(&s);
                let comm_fails = report
                    .failed()
                    .iter()
                    .any(|check| check.name == "cylindrifier-commutativity");
                if comm_fails {
                    flagged = Some((p, q));
                    break 'scan;
                }
            }
        }
        assert!(flagged.is_some(), "no banned pair broke commutativity");
    }
}
