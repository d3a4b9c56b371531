//! Axiom reports for cylindric atom structures.
//!
//! Each law is checked at the atom-frame level: diagonals reflexive and
//! symmetric, the two-step diagonal decomposition through a third index,
//! at most one diagonal atom per replacement class, commuting
//! replacement relations, and the transposition interaction laws.  On
//! small carriers [`equations_hold`] re-checks the corresponding
//! equations on every element of the powerset algebra, giving an oracle
//! that is independent of the frame-level shortcuts.

use crate::cyl::structure::{CaAtomStructure, CaComplexAlgebra};
use crate::ra::{atom_set, AtomSet};

#[derive(Clone, Debug)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug)]
pub struct CaAxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl CaAxiomReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&AxiomCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn class_bitsets(s: &CaAtomStructure, dim: usize) -> Vec<AtomSet> {
    let k = s.atom_count();
    (0..s.class_count(dim))
        .map(|c| atom_set(k, s.class_members(dim, c as u32).iter().copied()))
        .collect()
}

/// Frame-level axiom scan.
pub fn ca_axiom_check(s: &CaAtomStructure) -> CaAxiomReport {
    let n = s.dim();
    let k = s.atom_count();
    let mut checks = Vec::new();
    let mut push = |name: &'static str, witness: Option<String>| {
        checks.push(AxiomCheck { name, passed: witness.is_none(), witness });
    };

    // Diagonals of a repeated index cover everything.
    let mut w = None;
    'refl: for i in 0..n {
        for a in 0..k {
            if !s.in_diagonal(i, i, a) {
                w = Some(format!("atom {} outside the diagonal of ({i}, {i})", s.name(a)));
                break 'refl;
            }
        }
    }
    push("diagonal-reflexive", w);

    let mut w = None;
    'sym: for i in 0..n {
        for j in 0..n {
            if s.diagonal(i, j) != s.diagonal(j, i) {
                w = Some(format!("diagonals of ({i}, {j}) and ({j}, {i}) differ"));
                break 'sym;
            }
        }
    }
    push("diagonal-symmetric", w);

    // Through a third index: a is below d_ij exactly when its class in
    // the third dimension meets both d_ik and d_kj. Whether a class
    // meets that meet is precomputed once per class.
    let mut w = None;
    'decomp: for i in 0..n {
        for j in 0..n {
            for dim in 0..n {
                if dim == i || dim == j {
                    continue;
                }
                let mut class_meets = vec![false; s.class_count(dim)];
                for b in 0..k {
                    if s.in_diagonal(i, dim, b) && s.in_diagonal(dim, j, b) {
                        class_meets[s.class_id(dim, b) as usize] = true;
                    }
                }
                for a in 0..k {
                    let through = class_meets[s.class_id(dim, a) as usize];
                    if through != s.in_diagonal(i, j, a) {
                        w = Some(format!(
                            "atom {} vs the ({i}, {j}) decomposition through {dim}",
                            s.name(a)
                        ));
                        break 'decomp;
                    }
                }
            }
        }
    }
    push("diagonal-decomposition", w);

    // Replacement along i is injective on a diagonal of i: at most one
    // atom of d_ij per class.
    let mut w = None;
    'func: for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for c in 0..s.class_count(i) {
                let mut hits = s
                    .class_members(i, c as u32)
                    .iter()
                    .filter(|&&a| s.in_diagonal(i, j, a));
                if let (Some(&a), Some(&b)) = (hits.next(), hits.next()) {
                    w = Some(format!(
                        "atoms {} and {} share a class of {i} inside the diagonal of ({i}, {j})",
                        s.name(a),
                        s.name(b)
                    ));
                    break 'func;
                }
            }
        }
    }
    push("diagonal-functional", w);

    // Replacement relations commute: stepping within an x-class then a
    // y-class reaches the same atoms as the other order. The two-step
    // reach from atom a depends only on its first-step class, so the
    // comparison runs once per realized class pair, not per atom.
    let mut w = None;
    'comm: for x in 0..n {
        for y in (x + 1)..n {
            let xsets = class_bitsets(s, x);
            let ysets = class_bitsets(s, y);
            let reach_via = |first: &[AtomSet], second_dim: usize, second: &[AtomSet]| {
                first
                    .iter()
                    .map(|members| {
                        let mut out = atom_set(k, []);
                        for b in members.ones() {
                            out.union_with(&second[s.class_id(second_dim, b) as usize]);
                        }
                        out
                    })
                    .collect::<Vec<_>>()
            };
            let xy = reach_via(&xsets, y, &ysets);
            let yx = reach_via(&ysets, x, &xsets);
            let mut seen = std::collections::HashSet::new();
            for a in 0..k {
                let (cx, cy) = (s.class_id(x, a), s.class_id(y, a));
                if seen.insert((cx, cy)) && xy[cx as usize] != yx[cy as usize] {
                    w = Some(format!(
                        "replacements at {x} and {y} differ from atom {}",
                        s.name(a)
                    ));
                    break 'comm;
                }
            }
        }
    }
    push("cylindrifier-commutativity", w);

    let mut w = None;
    'invol: for i in 0..n {
        for j in (i + 1)..n {
            for a in 0..k {
                if s.transpose(i, j, s.transpose(i, j, a)) != a {
                    w = Some(format!("swap of ({i}, {j}) is not an involution at {}", s.name(a)));
                    break 'invol;
                }
            }
        }
    }
    push("transposition-involution", w);

    // Swapping i and j relabels diagonals and classes accordingly and
    // fixes the atoms below the diagonal of (i, j).
    let mut w = None;
    'interact: for i in 0..n {
        for j in (i + 1)..n {
            let tau = |d: usize| if d == i { j } else if d == j { i } else { d };
            for a in 0..k {
                let ta = s.transpose(i, j, a);
                for p in 0..n {
                    for q in 0..n {
                        if s.in_diagonal(p, q, a) != s.in_diagonal(tau(p), tau(q), ta) {
                            w = Some(format!(
                                "swap of ({i}, {j}) moves {} across the diagonal of ({p}, {q})",
                                s.name(a)
                            ));
                            break 'interact;
                        }
                    }
                }
                // Class transport is checked outside the atom loop.
                if s.in_diagonal(i, j, a) && ta != a {
                    w = Some(format!(
                        "swap of ({i}, {j}) moves diagonal atom {}",
                        s.name(a)
                    ));
                    break 'interact;
                }
            }
            // Class transport: the swap must act on whole classes, so
            // class_dim(a) has to determine class_tau(dim)(swap a). An
            // involution with a well-defined class map at every dim
            // carries classes bijectively both ways.
            for dim in 0..n {
                let mut map: Vec<Option<u32>> = vec![None; s.class_count(dim)];
                for a in 0..k {
                    let image = s.class_id(tau(dim), s.transpose(i, j, a));
                    let slot = &mut map[s.class_id(dim, a) as usize];
                    match *slot {
                        None => *slot = Some(image),
                        Some(prev) if prev == image => {}
                        Some(_) => {
                            w = Some(format!(
                                "swap of ({i}, {j}) breaks class transport at {}",
                                s.name(a)
                            ));
                            break 'interact;
                        }
                    }
                }
            }
        }
    }
    push("transposition-interaction", w);

    CaAxiomReport { checks }
}

const EQUATION_ORACLE_ATOM_LIMIT: usize = 12;

/// Equation-level oracle: evaluates the laws on every element of the
/// powerset algebra.  Only for carriers of at most
/// `EQUATION_ORACLE_ATOM_LIMIT` atoms.
pub fn equations_hold(s: &CaAtomStructure) -> Option<bool> {
    let k = s.atom_count();
    if k > EQUATION_ORACLE_ATOM_LIMIT {
        return None;
    }
    let ca = CaComplexAlgebra::new(s);
    let n = s.dim();
    let elements: Vec<AtomSet> = (0..(1u64 << k))
        .map(|bits| atom_set(k, (0..k).filter(|&a| bits >> a & 1 == 1)))
        .collect();
    for x in &elements {
        for i in 0..n {
            // x <= c_i x and c_i is idempotent and additive enough to be
            // determined by atoms; increasing + idempotent checked here.
            let cx = ca.cylindrify(i, x);
            if !x.is_subset(&cx) || ca.cylindrify(i, &cx) != cx {
                return Some(false);
            }
            for j in 0..n {
                let d = ca.diagonal(i, j);
                if i == j && d != ca.top() {
                    return Some(false);
                }
                // c_i (d_ij . x) . c_i (d_ij . -x) = 0 for i != j.
                if i != j {
                    let lhs = ca.cylindrify(i, &ca.meet(&d, x));
                    let rhs = ca.cylindrify(i, &ca.meet(&d, &ca.complement(x)));
                    if !ca.meet(&lhs, &rhs).is_clear() {
                        return Some(false);
                    }
                }
                if i != j {
                    let swapped = ca.transpose(i, j, x);
                    if ca.transpose(i, j, &swapped) != *x {
                        return Some(false);
                    }
                }
            }
            for j in 0..n {
                if ca.cylindrify(i, &ca.cylindrify(j, x))
                    != ca.cylindrify(j, &ca.cylindrify(i, x))
                {
                    return Some(false);
                }
            }
        }
    }
    // d_ij = c_k (d_ik . d_kj) for distinct i, j, k.
    for i in 0..n {
        for j in 0..n {
            for w in 0..n {
                if w == i || w == j {
                    continue;
                }
                let lhs = ca.diagonal(i, j);
                let rhs = ca.cylindrify(w, &ca.meet(&ca.diagonal(i, w), &ca.diagonal(w, j)));
                if lhs != rhs {
                    return Some(false);
                }
            }
        }
    }
    Some(true)
}
