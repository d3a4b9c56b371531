//! Graph-coloured atom structures.
//!
//! Given a loopless graph `G` and a number of colours `n >= 2`, the atoms
//! are an identity plus one atom per (vertex, colour) pair, all
//! self-converse.  A diversity triple is consistent when the colours are
//! not all equal, or when they are all equal and the three vertices span
//! at least one edge of `G`.  Monochromatic triangles over independent
//! sets are the only forbidden patterns, so representability hinges on
//! the chromatic number of `G`.

use std::sync::Arc;

use crate::graphs::SimpleGraph;
use crate::ra::{ConsistencyStore, RaAtomStructure, RaError, TripleCube, DENSE_ATOM_LIMIT};
use crate::Atom;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MonkError {
    #[error("need at least 2 colours, got {0}")]
    TooFewColours(usize),
    #[error("need at least 1 vertex, got an empty graph")]
    EmptyGraph,
    #[error("structure error: {0}")]
    Structure(#[from] RaError),
}

/// Atom id of the (vertex, colour) pair; id 0 is the identity.
pub fn monk_atom(colours: usize, vertex: usize, colour: usize) -> Atom {
    1 + vertex * colours + colour
}

/// Inverse of [`monk_atom`]; `None` for the identity.
pub fn monk_decode(colours: usize, a: Atom) -> Option<(usize, usize)> {
    if a == 0 {
        None
    } else {
        Some(((a - 1) / colours, (a - 1) % colours))
    }
}

fn diversity_rule(g: &SimpleGraph, colours: usize, a: Atom, b: Atom, c: Atom) -> bool {
    let (ua, ia) = ((a - 1) / colours, (a - 1) % colours);
    let (ub, ib) = ((b - 1) / colours, (b - 1) % colours);
    let (uc, ic) = ((c - 1) / colours, (c - 1) % colours);
    if ia != ib || ib != ic {
        return true;
    }
    g.has_edge(ua, ub) || g.has_edge(ua, uc) || g.has_edge(ub, uc)
}

/// Builds the coloured atom structure over `g` with `colours >= 2`.
pub fn monk_ra(g: &SimpleGraph, colours: usize) -> Result<RaAtomStructure, MonkError> {
    if colours < 2 {
        return Err(MonkError::TooFewColours(colours));
    }
    let vertices = g.vertices();
    if vertices == 0 {
        return Err(MonkError::EmptyGraph);
    }
    let k = 1 + vertices * colours;
    let mut names = Vec::with_capacity(k);
    names.push("1'".to_owned());
    for u in 0..vertices {
        for i in 0..colours {
            names.push(format!("v{u}c{i}"));
        }
    }
    let converse: Vec<Atom> = (0..k).collect();
    let graph = g.clone();
    let rule = move |a: Atom, b: Atom, c: Atom| {
        if a == 0 || b == 0 || c == 0 {
            // Identity triples: the other two entries must coincide.
            return (a == 0 && b == c) || (b == 0 && a == c) || (c == 0 && a == b);
        }
        diversity_rule(&graph, colours, a, b, c)
    };
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
            "rule": "monk",
            "params": {
                "vertices": vertices,
                "colours": colours,
                "edges": g.edges(),
            },
        });
        ConsistencyStore::Rule { descriptor, eval: Arc::new(rule) }
    };
    Ok(RaAtomStructure::new(names, &[0], converse, consistency)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::complete_graph;
    use crate::ra::{set_members, validate_atom_structure};

    #[test]
    fn k2_three_colours_composition() {
        let g = complete_graph(2);
        let s = monk_ra(&g, 3).unwrap();
        assert_eq!(s.atom_count(), 7);
        // (u, c0); (u, c0) = everything except (u, c0) itself: the identity,
        // all atoms of other colours, and (v, c0) since uv is an edge.
        let a = s.atom_by_name("v0c0").unwrap();
        let got = set_members(&s.compose_atoms(a, a).unwrap());
        let expect: Vec<Atom> = ["1'", "v0c1", "v0c2", "v1c0", "v1c1", "v1c2"]
            .iter()
            .map(|n| s.atom_by_name(n).unwrap())
            .collect();
        let mut expect = expect;
        expect.sort_unstable();
        assert_eq!(got, expect);
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn k3_three_colours_validates() {
        let g = complete_graph(3);
        let s = monk_ra(&g, 3).unwrap();
        assert_eq!(s.atom_count(), 10);
        assert!(s.all_self_converse());
        let report = validate_atom_structure(&s);
        assert!(report.is_valid(), "violations: {:?}", report.violations);
        assert!(s.every_atom_in_some_triple());
    }

    #[test]
    fn edgeless_graph_blocks_monochromatic_triples() {
        let g = SimpleGraph::empty(3).unwrap();
        let s = monk_ra(&g, 2).unwrap();
        let a = monk_atom(2, 0, 0);
        let b = monk_atom(2, 1, 0);
        let c = monk_atom(2, 2, 0);
        assert!(!s.consistent(a, b, c));
        // Mixed colours stay consistent even without edges.
        assert!(s.consistent(a, b, monk_atom(2, 2, 1)));
        // No colour-0 atom below (v0c0); (v1c0).
        let comp = s.compose_atoms(a, b).unwrap();
        for u in 0..3 {
            assert!(!comp.contains(monk_atom(2, u, 0)));
        }
    }

    #[test]
    fn atom_codec_roundtrip() {
        for a in 1..=12 {
            let (u, i) = monk_decode(4, a).unwrap();
            assert_eq!(monk_atom(4, u, i), a);
        }
        assert_eq!(monk_decode(4, 0), None);
    }

    #[test]
    fn rejects_degenerate_parameters() {
        let g = complete_graph(2);
        assert_eq!(monk_ra(&g, 1).unwrap_err(), MonkError::TooFewColours(1));
        let empty = SimpleGraph::empty(0).unwrap();
        assert_eq!(monk_ra(&empty, 2).unwrap_err(), MonkError::EmptyGraph);
    }
}
