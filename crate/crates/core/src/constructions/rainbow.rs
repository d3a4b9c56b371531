//! Ordered-palette atom structures with split red atoms.
//!
//! The palette has an identity, a linearly ordered family of greens, one
//! white, and red atoms indexed by an unordered pair of ordered indices
//! plus a copy number.  All atoms are self-converse.  The rules:
//!
//! * three greens never form a triangle;
//! * two greens and the white never form a triangle;
//! * two greens and a red form a triangle only when the greens can be
//!   mapped to the red's index pair by an order-preserving partial
//!   function;
//! * three reds form a triangle only when their index pairs match as the
//!   edges {p,q}, {q,r}, {p,r} of a single triangle (copies are ignored);
//! * every other diversity triple is consistent.
//!
//! Splitting each red pair into `copies` interchangeable atoms inflates
//! the atom count without changing which triangles exist.

use std::sync::Arc;

use crate::graphs::LinearOrderSpec;
use crate::ra::{ConsistencyStore, RaAtomStructure, RaError, TripleCube, DENSE_ATOM_LIMIT};
use crate::Atom;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RainbowError {
    #[error("palette needs at least one green")]
    NoGreens,
    #[error("palette needs at least one red index")]
    NoReds,
    #[error("palette needs at least one red copy")]
    NoCopies,
    #[error("structure error: {0}")]
    Structure(#[from] RaError),
}

/// How one atom of the palette decodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaletteAtom {
    Identity,
    Green(usize),
    White,
    /// Copy `copy` of the red on the unordered index pair `lo <= hi`.
    Red { copy: usize, lo: usize, hi: usize },
}

fn pair_rank(reds: usize, lo: usize, hi: usize) -> usize {
    // lo*reds - lo*(lo-1)/2, rearranged so it cannot underflow at lo = 0.
    lo * (2 * reds - lo + 1) / 2 + (hi - lo)
}

fn pair_count(reds: usize) -> usize {
    reds * (reds + 1) / 2
}

/// Decodes atom ids laid out as identity, greens, white, then red copies.
pub fn rainbow_decode(greens: usize, reds: usize, a: Atom) -> PaletteAtom {
    if a == 0 {
        return PaletteAtom::Identity;
    }
    if a <= greens {
        return PaletteAtom::Green(a - 1);
    }
    if a == greens + 1 {
        return PaletteAtom::White;
    }
    let off = a - greens - 2;
    let p = pair_count(reds);
    let (copy, rank) = (off / p, off % p);
    // Invert the triangular rank.
    let mut lo = 0;
    let mut rank = rank;
    while rank >= reds - lo {
        rank -= reds - lo;
        lo += 1;
    }
    PaletteAtom::Red { copy, lo, hi: lo + rank }
}

/// Atom id of copy `copy` of the red on `{lo, hi}` (requires `lo <= hi`).
pub fn rainbow_red_atom(greens: usize, reds: usize, copy: usize, lo: usize, hi: usize) -> Atom {
    greens + 2 + copy * pair_count(reds) + pair_rank(reds, lo, hi)
}

fn order_preserving(
    green_order: &LinearOrderSpec,
    red_order: &LinearOrderSpec,
    i1: usize,
    i2: usize,
    j: usize,
    k: usize,
) -> bool {
    if i1 == i2 {
        return j == k;
    }
    (!green_order.lt(i1, i2) || red_order.lt(j, k))
        && (!green_order.lt(i2, i1) || red_order.lt(k, j))
}

/// Red pairs match as the three edges of one triangle on indices.
fn reds_match(a: (usize, usize), b: (usize, usize), c: (usize, usize)) -> bool {
    for (p, q) in [(a.0, a.1), (a.1, a.0)] {
        for (qb, r) in [(b.0, b.1), (b.1, b.0)] {
            if q == qb && c == (p.min(r), p.max(r)) {
                return true;
            }
        }
    }
    false
}

fn rainbow_rule(
    green_order: &LinearOrderSpec,
    red_order: &LinearOrderSpec,
    copies: usize,
    a: Atom,
    b: Atom,
    c: Atom,
) -> bool {
    let greens = green_order.len();
    let reds = red_order.len();
    let _ = copies;
    if a == 0 || b == 0 || c == 0 {
        return (a == 0 && b == c) || (b == 0 && a == c) || (c == 0 && a == b);
    }
    let parts = [
        rainbow_decode(greens, reds, a),
        rainbow_decode(greens, reds, b),
        rainbow_decode(greens, reds, c),
    ];
    let mut green_idx = Vec::new();
    let mut red_pairs = Vec::new();
    let mut whites = 0usize;
    for p in parts {
        match p {
            PaletteAtom::Green(i) => green_idx.push(i),
            PaletteAtom::Red { lo, hi, .. } => red_pairs.push((lo, hi)),
            PaletteAtom::White => whites += 1,
            PaletteAtom::Identity => unreachable!("identity handled above"),
        }
    }
    match green_idx.len() {
        3 => false,
        2 => {
            if whites == 1 {
                return false;
            }
            let (i1, i2) = (green_idx[0], green_idx[1]);
            let (j, k) = red_pairs[0];
            order_preserving(green_order, red_order, i1, i2, j, k)
                || order_preserving(green_order, red_order, i1, i2, k, j)
        }
        1 => true,
        _ => {
            if red_pairs.len() == 3 {
                reds_match(red_pairs[0], red_pairs[1], red_pairs[2])
            } else {
                true
            }
        }
    }
}

/// Builds the split-red palette structure.
///
/// Atom count is `1 + greens + 1 + copies * reds * (reds + 1) / 2`.
pub fn rainbow_ra(
    green_order: &LinearOrderSpec,
    red_order: &LinearOrderSpec,
    copies: usize,
) -> Result<RaAtomStructure, RainbowError> {
    let greens = green_order.len();
    let reds = red_order.len();
    if greens == 0 {
        return Err(RainbowError::NoGreens);
    }
    if reds == 0 {
        return Err(RainbowError::NoReds);
    }
    if copies == 0 {
        return Err(RainbowError::NoCopies);
    }
    let k = greens + 2 + copies * pair_count(reds);
    let mut names = Vec::with_capacity(k);
    names.push("1'".to_owned());
    for i in 0..greens {
        names.push(format!("g{i}"));
    }
    names.push("w".to_owned());
    for s in 0..copies {
        for lo in 0..reds {
            for hi in lo..reds {
                names.push(format!("r{s}({lo},{hi})"));
            }
        }
    }
    let converse: Vec<Atom> = (0..k).collect();
    let (go, ro) = (green_order.clone(), red_order.clone());
    let rule = move |a: Atom, b: Atom, c: Atom| rainbow_rule(&go, &ro, copies, a, b, c);
    let consistency = if k <= DENSE_ATOM_LIMIT {
        let mut cube = TripleCube::new(k);
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    if rule(a, b, c) {
                        cube.set(a, b, c);
                    }
                }
            }
        }
        ConsistencyStore::Dense(cube)
    } else {
        let descriptor = serde_json::json!({
            "rule": "rainbow",
            "params": {
                "greens": green_order,
                "reds": red_order,
                "copies": copies,
            },
        });
        ConsistencyStore::Rule { descriptor, eval: Arc::new(rule) }
    };
    Ok(RaAtomStructure::new(names, &[0], converse, consistency)?)
}

/// Canonical palette: greens ordered as reversed naturals, reds as
/// naturals, both truncated.
pub fn rainbow_ra_canonical(
    greens: usize,
    reds: usize,
    copies: usize,
) -> Result<RaAtomStructure, RainbowError> {
    rainbow_ra(
        &LinearOrderSpec::ReversedNaturalsTruncated(greens),
        &LinearOrderSpec::NaturalsTruncated(reds),
        copies,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ra::{set_members, validate_atom_structure};

    #[test]
    fn atom_count_matches_formula() {
        let s = rainbow_ra_canonical(3, 2, 2).unwrap();
        assert_eq!(s.atom_count(), 11);
        assert!(s.all_self_converse());
    }

    #[test]
    fn structure_validates() {
        for (g, r, t) in [(3, 2, 2), (2, 3, 1), (1, 1, 1)] {
            let s = rainbow_ra_canonical(g, r, t).unwrap();
            let report = validate_atom_structure(&s);
            assert!(report.is_valid(), "({g},{r},{t}): {:?}", report.violations);
            assert!(s.every_atom_in_some_triple());
        }
    }

    #[test]
    fn decode_roundtrip() {
        let (g, r) = (3, 3);
        for copy in 0..2 {
            for lo in 0..r {
                for hi in lo..r {
                    let a = rainbow_red_atom(g, r, copy, lo, hi);
                    assert_eq!(rainbow_decode(g, r, a), PaletteAtom::Red { copy, lo, hi });
                }
            }
        }
        assert_eq!(rainbow_decode(g, r, 0), PaletteAtom::Identity);
        assert_eq!(rainbow_decode(g, r, 2), PaletteAtom::Green(1));
        assert_eq!(rainbow_decode(g, r, 4), PaletteAtom::White);
    }

    #[test]
    fn two_greens_block_white_and_force_order() {
        let s = rainbow_ra_canonical(3, 2, 1).unwrap();
        let g0 = s.atom_by_name("g0").unwrap();
        let g1 = s.atom_by_name("g1").unwrap();
        let w = s.atom_by_name("w").unwrap();
        let r01 = s.atom_by_name("r0(0,1)").unwrap();
        let r00 = s.atom_by_name("r0(0,0)").unwrap();
        let r11 = s.atom_by_name("r0(1,1)").unwrap();
        assert!(!s.consistent(g0, g1, w));
        assert!(!s.consistent(g0, g1, g0));
        // Greens are ordered as reversed naturals: g1 below g0, so the
        // image pair must place g1's red below g0's red.
        assert!(s.consistent(g0, g1, r01));
        assert!(!s.consistent(g0, g1, r00));
        assert!(!s.consistent(g0, g1, r11));
        // Same green twice needs a diagonal red pair.
        assert!(s.consistent(g0, g0, r00));
        assert!(!s.consistent(g0, g0, r01));
        // One green imposes nothing.
        assert!(s.consistent(g0, w, r01));
        assert!(s.consistent(g0, w, w));
    }

    #[test]
    fn red_triangles_need_matching_pairs() {
        let s = rainbow_ra_canonical(2, 3, 1).unwrap();
        let r = |lo, hi| {
            s.atom_by_name(&format!("r0({lo},{hi})")).unwrap()
        };
        assert!(s.consistent(r(0, 1), r(1, 2), r(0, 2)));
        assert!(s.consistent(r(0, 2), r(0, 1), r(1, 2)));
        assert!(!s.consistent(r(0, 1), r(1, 2), r(0, 1)));
        assert!(s.consistent(r(0, 0), r(0, 0), r(0, 0)));
        assert!(s.consistent(r(0, 1), r(1, 1), r(0, 1)));
        assert!(!s.consistent(r(0, 0), r(1, 1), r(0, 1)));
        // Whites mix freely with reds.
        let w = s.atom_by_name("w").unwrap();
        assert!(s.consistent(w, r(0, 1), r(0, 2)));
        assert!(s.consistent(w, w, w));
    }

    #[test]
    fn copies_are_interchangeable_on_diversity_triples() {
        let s = rainbow_ra_canonical(2, 2, 2).unwrap();
        let r0 = s.atom_by_name("r0(0,1)").unwrap();
        let r1 = s.atom_by_name("r1(0,1)").unwrap();
        for a in s.atoms().filter(|&a| !s.is_identity(a)) {
            for b in s.atoms().filter(|&b| !s.is_identity(b)) {
                assert_eq!(s.consistent(a, b, r0), s.consistent(a, b, r1));
                assert_eq!(s.consistent(a, r0, b), s.consistent(a, r1, b));
            }
        }
        // Only the identity law tells copies apart: 1';r0 = {r0}.
        assert!(s.consistent(0, r0, r0));
        assert!(!s.consistent(0, r0, r1));
    }

    #[test]
    fn green_compositions() {
        let s = rainbow_ra_canonical(2, 2, 1).unwrap();
        let g0 = s.atom_by_name("g0").unwrap();
        let g1 = s.atom_by_name("g1").unwrap();
        // g0; g1 contains exactly the order-matching reds.
        let got = set_members(&s.compose_atoms(g0, g1).unwrap());
        let r01 = s.atom_by_name("r0(0,1)").unwrap();
        assert_eq!(got, vec![r01]);
        // g0; g0 contains the identity, both diagonal reds, nothing green
        // or white.
        let got = set_members(&s.compose_atoms(g0, g0).unwrap());
        let r00 = s.atom_by_name("r0(0,0)").unwrap();
        let r11 = s.atom_by_name("r0(1,1)").unwrap();
        assert_eq!(got, vec![0, r00, r11]);
    }
}
