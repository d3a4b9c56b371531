//! Self-describing JSON documents for every artifact the command line
//! reads or writes: atom structures, graphs, representations, and game
//! certificates.
//!
//! Each document opens with a `schema_version` and a `kind` tag so any
//! file identifies itself.  Writers are deterministic: field order is
//! fixed, triple and member lists are emitted in ascending order, and
//! rule descriptors serialize with sorted keys, so equal values always
//! produce equal bytes.
//!
//! Consistency tables travel in one of two forms.  Dense stores list
//! their triples explicitly.  Rule-backed stores (which only arise past
//! the dense size limit) embed their named-rule descriptor; reading one
//! back re-runs the named construction and checks that the rebuilt
//! atoms, identities, and converses agree with the document.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constructions::monk::monk_ra;
use crate::constructions::rainbow::rainbow_ra;
use crate::cyl::{CaAtomStructure, CaError, ColouredGraph, EdgeColour};
use crate::games::StrategyCert;
use crate::graphs::{GraphError, LinearOrderSpec, SimpleGraph};
use crate::ra::{atom_set, set_members, ConsistencyStore, RaAtomStructure, RaError, TripleCube};
use crate::repsearch::{CaRepresentation, RaRepresentation};
use crate::Atom;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("document kind is {got:?}, expected {expected:?}")]
    Kind { expected: &'static str, got: String },
    #[error("schema version {0} is not supported")]
    Schema(u32),
    #[error("entry {index} references atom {atom}, but the document names {atoms} atoms")]
    AtomRange { index: usize, atom: Atom, atoms: usize },
    #[error("node index {node} out of range for {nodes} nodes")]
    NodeRange { node: usize, nodes: usize },
    #[error("consistency rule {0:?} is not known")]
    UnknownRule(String),
    #[error("rule {rule:?} cannot be rebuilt from its parameters: {missing}")]
    RuleNotSelfContained { rule: &'static str, missing: &'static str },
    #[error("rebuilt rule structure disagrees with the document on {0}")]
    RuleMismatch(&'static str),
    #[error("named rule failed to rebuild: {0}")]
    RuleRebuild(String),
    #[error(transparent)]
    Ra(#[from] RaError),
    #[error(transparent)]
    Ca(#[from] CaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Renders any document with stable formatting: two-space pretty
/// printing and a trailing newline.
fn render<T: Serialize>(doc: &T) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("documents hold no non-string keys");
    out.push('\n');
    out
}

#[derive(Deserialize)]
struct Probe {
    schema_version: u32,
    kind: String,
}

/// The `kind` tag of any document, checking the schema version.
pub fn doc_kind(text: &str) -> Result<String, DocError> {
    let probe: Probe = serde_json::from_str(text)?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(probe.schema_version));
    }
    Ok(probe.kind)
}

fn expect_kind(got: &str, expected: &'static str) -> Result<(), DocError> {
    if got != expected {
        return Err(DocError::Kind { expected, got: got.to_owned() });
    }
    Ok(())
}

/// Explicit triple list or named-rule descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConsistentField {
    Explicit(Vec<[Atom; 3]>),
    Rule(Value),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaDoc {
    pub schema_version: u32,
    pub kind: String,
    pub atoms: Vec<String>,
    pub identities: Vec<Atom>,
    pub converse: Vec<Atom>,
    pub consistent: ConsistentField,
}

pub const RA_KIND: &str = "ra-atom-structure";

pub fn ra_to_doc(s: &RaAtomStructure) -> RaDoc {
    let consistent = match s.consistency() {
        ConsistencyStore::Dense(cube) => ConsistentField::Explicit(cube.triples().collect()),
        ConsistencyStore::Rule { descriptor, .. } => ConsistentField::Rule(descriptor.clone()),
    };
    RaDoc {
        schema_version: SCHEMA_VERSION,
        kind: RA_KIND.to_owned(),
        atoms: s.names().to_vec(),
        identities: s.identity_atoms(),
        converse: (0..s.atom_count()).map(|a| s.converse(a)).collect(),
        consistent,
    }
}

pub fn ra_from_doc(doc: &RaDoc) -> Result<RaAtomStructure, DocError> {
    expect_kind(&doc.kind, RA_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    let k = doc.atoms.len();
    match &doc.consistent {
        ConsistentField::Explicit(triples) => {
            for (index, t) in triples.iter().enumerate() {
                if let Some(&atom) = t.iter().find(|&&a| a >= k) {
                    return Err(DocError::AtomRange { index, atom, atoms: k });
                }
            }
            let cube = TripleCube::from_triples(k, triples.iter().copied());
            Ok(RaAtomStructure::new(
                doc.atoms.clone(),
                &doc.identities,
                doc.converse.clone(),
                ConsistencyStore::Dense(cube),
            )?)
        }
        ConsistentField::Rule(descriptor) => rebuild_rule(doc, descriptor),
    }
}

#[derive(Deserialize)]
struct MonkParams {
    vertices: usize,
    colours: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RainbowParams {
    greens: LinearOrderSpec,
    reds: LinearOrderSpec,
    copies: usize,
}

/// Re-runs the named construction behind a rule descriptor and checks
/// the result against the document's own atom data.
fn rebuild_rule(doc: &RaDoc, descriptor: &Value) -> Result<RaAtomStructure, DocError> {
    let name = descriptor
        .get("rule")
        .and_then(Value::as_str)
        .ok_or_else(|| DocError::UnknownRule(descriptor.to_string()))?;
    let params = descriptor.get("params").cloned().unwrap_or(Value::Null);
    let rebuilt = match name {
        "monk" => {
            let p: MonkParams = serde_json::from_value(params)?;
            let g = SimpleGraph::from_edges(p.vertices, &p.edges)?;
            monk_ra(&g, p.colours).map_err(|e| DocError::RuleRebuild(e.to_string()))?
        }
        "rainbow" => {
            let p: RainbowParams = serde_json::from_value(params)?;
            rainbow_ra(&p.greens, &p.reds, p.copies)
                .map_err(|e| DocError::RuleRebuild(e.to_string()))?
        }
        "blur" => {
            // The blur descriptor names its base atoms but not their
            // triples, and the blown-up predicate needs them.
            return Err(DocError::RuleNotSelfContained {
                rule: "blur",
                missing: "the base algebra's consistent triples",
            });
        }
        other => return Err(DocError::UnknownRule(other.to_owned())),
    };
    if rebuilt.names() != doc.atoms.as_slice() {
        return Err(DocError::RuleMismatch("atom names"));
    }
    if rebuilt.identity_atoms() != doc.identities {
        return Err(DocError::RuleMismatch("identity atoms"));
    }
    if (0..rebuilt.atom_count()).map(|a| rebuilt.converse(a)).collect::<Vec<_>>() != doc.converse {
        return Err(DocError::RuleMismatch("converse table"));
    }
    Ok(rebuilt)
}

pub fn write_ra(s: &RaAtomStructure) -> String {
    render(&ra_to_doc(s))
}

pub fn read_ra(text: &str) -> Result<RaAtomStructure, DocError> {
    ra_from_doc(&serde_json::from_str(text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaDoc {
    pub schema_version: u32,
    pub kind: String,
    pub dim: usize,
    pub atoms: Vec<String>,
    /// `classes[i][a]` is the replacement class of atom `a` in dimension `i`.
    pub classes: Vec<Vec<u32>>,
    /// Row-major `dim * dim` list of diagonal member lists, ascending.
    pub diagonals: Vec<Vec<Atom>>,
    /// Transposition tables in pair-rank order of `(i, j)`, `i < j`.
    pub transpositions: Vec<Vec<Atom>>,
}

pub const CA_KIND: &str = "ca-atom-structure";

pub fn ca_to_doc(f: &CaAtomStructure) -> CaDoc {
    let (n, k) = (f.dim(), f.atom_count());
    let mut diagonals = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            diagonals.push(set_members(f.diagonal(i, j)));
        }
    }
    let mut transpositions = Vec::new();
    for j in 0..n {
        for i in 0..j {
            transpositions.push((0..k).map(|a| f.transpose(i, j, a)).collect());
        }
    }
    CaDoc {
        schema_version: SCHEMA_VERSION,
        kind: CA_KIND.to_owned(),
        dim: n,
        atoms: f.names().to_vec(),
        classes: (0..n).map(|i| (0..k).map(|a| f.class_id(i, a)).collect()).collect(),
        diagonals,
        transpositions,
    }
}

pub fn ca_from_doc(doc: &CaDoc) -> Result<CaAtomStructure, DocError> {
    expect_kind(&doc.kind, CA_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    let k = doc.atoms.len();
    let mut diagonals = Vec::with_capacity(doc.diagonals.len());
    for members in &doc.diagonals {
        for (index, &atom) in members.iter().enumerate() {
            if atom >= k {
                return Err(DocError::AtomRange { index, atom, atoms: k });
            }
        }
        diagonals.push(atom_set(k, members.iter().copied()));
    }
    Ok(CaAtomStructure::new(
        doc.dim,
        doc.atoms.clone(),
        doc.classes.clone(),
        diagonals,
        doc.transpositions.clone(),
    )?)
}

pub fn write_ca(f: &CaAtomStructure) -> String {
    render(&ca_to_doc(f))
}

pub fn read_ca(text: &str) -> Result<CaAtomStructure, DocError> {
    ca_from_doc(&serde_json::from_str(text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaRepDoc {
    pub schema_version: u32,
    pub kind: String,
    pub base: usize,
    pub labels: Vec<Atom>,
}

pub const RA_REP_KIND: &str = "ra-representation";

pub fn write_ra_rep(rep: &RaRepresentation) -> String {
    render(&RaRepDoc {
        schema_version: SCHEMA_VERSION,
        kind: RA_REP_KIND.to_owned(),
        base: rep.base,
        labels: rep.labels.clone(),
    })
}

pub fn read_ra_rep(text: &str) -> Result<RaRepresentation, DocError> {
    let doc: RaRepDoc = serde_json::from_str(text)?;
    expect_kind(&doc.kind, RA_REP_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    Ok(RaRepresentation { base: doc.base, labels: doc.labels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaRepDoc {
    pub schema_version: u32,
    pub kind: String,
    pub base: usize,
    pub dim: usize,
    pub labels: Vec<Atom>,
}

pub const CA_REP_KIND: &str = "ca-representation";

pub fn write_ca_rep(rep: &CaRepresentation) -> String {
    render(&CaRepDoc {
        schema_version: SCHEMA_VERSION,
        kind: CA_REP_KIND.to_owned(),
        base: rep.base,
        dim: rep.dim,
        labels: rep.labels.clone(),
    })
}

pub fn read_ca_rep(text: &str) -> Result<CaRepresentation, DocError> {
    let doc: CaRepDoc = serde_json::from_str(text)?;
    expect_kind(&doc.kind, CA_REP_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    Ok(CaRepresentation { base: doc.base, dim: doc.dim, labels: doc.labels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertDoc {
    pub schema_version: u32,
    pub kind: String,
    pub cert: StrategyCert,
}

pub const CERT_KIND: &str = "game-certificate";

pub fn write_cert(cert: &StrategyCert) -> String {
    render(&CertDoc {
        schema_version: SCHEMA_VERSION,
        kind: CERT_KIND.to_owned(),
        cert: cert.clone(),
    })
}

pub fn read_cert(text: &str) -> Result<StrategyCert, DocError> {
    let doc: CertDoc = serde_json::from_str(text)?;
    expect_kind(&doc.kind, CERT_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    Ok(doc.cert)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub schema_version: u32,
    pub kind: String,
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

pub const GRAPH_KIND: &str = "graph";

pub fn write_graph(g: &SimpleGraph) -> String {
    render(&GraphDoc {
        schema_version: SCHEMA_VERSION,
        kind: GRAPH_KIND.to_owned(),
        vertices: g.vertices(),
        edges: g.edges(),
    })
}

pub fn read_graph(text: &str) -> Result<SimpleGraph, DocError> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    expect_kind(&doc.kind, GRAPH_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    Ok(SimpleGraph::from_edges(doc.vertices, &doc.edges)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColouredGraphDoc {
    pub schema_version: u32,
    pub kind: String,
    pub nodes: usize,
    /// Labelled pairs `(u, v, colour)` with `u < v`, ascending.
    pub edges: Vec<(usize, usize, EdgeColour)>,
    /// Yellow shades `(u, v, tints)` with `u < v`, ascending.
    pub yellows: Vec<(usize, usize, Vec<usize>)>,
}

pub const COLOURED_GRAPH_KIND: &str = "coloured-graph";

pub fn write_coloured_graph(g: &ColouredGraph) -> String {
    let n = g.node_count();
    let mut edges = Vec::new();
    let mut yellows = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if let Some(c) = g.edge(u, v) {
                edges.push((u, v, c));
            }
            if let Some(shade) = g.yellow(u, v) {
                yellows.push((u, v, shade.iter().copied().collect()));
            }
        }
    }
    render(&ColouredGraphDoc {
        schema_version: SCHEMA_VERSION,
        kind: COLOURED_GRAPH_KIND.to_owned(),
        nodes: n,
        edges,
        yellows,
    })
}

pub fn read_coloured_graph(text: &str) -> Result<ColouredGraph, DocError> {
    let doc: ColouredGraphDoc = serde_json::from_str(text)?;
    expect_kind(&doc.kind, COLOURED_GRAPH_KIND)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Schema(doc.schema_version));
    }
    let mut g = ColouredGraph::new(doc.nodes);
    for &(u, v, c) in &doc.edges {
        for node in [u, v] {
            if node >= doc.nodes {
                return Err(DocError::NodeRange { node, nodes: doc.nodes });
            }
        }
        if u == v {
            return Err(DocError::NodeRange { node: v, nodes: doc.nodes });
        }
        g.set_edge(u, v, c);
    }
    for (u, v, shade) in &doc.yellows {
        for node in [u, v] {
            if *node >= doc.nodes {
                return Err(DocError::NodeRange { node: *node, nodes: doc.nodes });
            }
        }
        if u == v {
            return Err(DocError::NodeRange { node: *v, nodes: doc.nodes });
        }
        g.set_yellow(*u, *v, shade.iter().copied().collect());
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::blur::{blur_structure, subset_blurs, BlurSpec};
    use crate::cyl::full_set_algebra;
    use crate::games::{solve_game, verify_cert, GameKind};
    use crate::graphs::{complete_graph, cycle_graph};
    use crate::ra::{peircean_closure, validate_atom_structure};

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
    fn dense_structure_documents_round_trip_byte_exactly() {
        let s = monk_ra(&cycle_graph(5), 3).unwrap();
        let text = write_ra(&s);
        assert_eq!(doc_kind(&text).unwrap(), RA_KIND);
        let back = read_ra(&text).unwrap();
        assert_eq!(write_ra(&back), text);
        assert!(validate_atom_structure(&back).is_valid());
    }

    #[test]
    fn rule_documents_rebuild_from_their_descriptor() {
        // Past the dense limit the store keeps only the rule; 350
        // vertices at 3 colours is 1051 atoms.
        let s = monk_ra(&cycle_graph(350), 3).unwrap();
        assert!(matches!(s.consistency(), ConsistencyStore::Rule { .. }));
        let text = write_ra(&s);
        let back = read_ra(&text).unwrap();
        assert_eq!(write_ra(&back), text);
        assert_eq!(back.consistent(1, 2, 3), s.consistent(1, 2, 3));
    }

    #[test]
    fn blur_rule_documents_are_refused_with_the_missing_piece() {
        let base = monk_ra(&complete_graph(2), 2).unwrap();
        let spec = BlurSpec::new(90, subset_blurs(&base, 2, 1).unwrap());
        let blown = blur_structure(&base, &spec).unwrap();
        assert!(blown.structure.atom_count() > crate::ra::DENSE_ATOM_LIMIT);
        let text = write_ra(&blown.structure);
        match read_ra(&text) {
            Err(DocError::RuleNotSelfContained { rule: "blur", .. }) => {}
            other => panic!("expected a self-containment refusal, got {other:?}"),
        }
    }

    #[test]
    fn ca_documents_round_trip_byte_exactly() {
        let f = full_set_algebra(2, 3);
        let text = write_ca(&f);
        assert_eq!(doc_kind(&text).unwrap(), CA_KIND);
        let back = read_ca(&text).unwrap();
        assert_eq!(write_ca(&back), text);
        assert_eq!(back.names(), f.names());
        assert_eq!(back.transpose(0, 2, 3), f.transpose(0, 2, 3));
    }

    #[test]
    fn wrong_kind_and_wrong_schema_are_rejected() {
        let f = full_set_algebra(1, 3);
        let ca_text = write_ca(&f);
        assert!(matches!(read_ra(&ca_text), Err(DocError::Json(_) | DocError::Kind { .. })));
        let mut doc = ca_to_doc(&f);
        doc.schema_version = 2;
        assert!(matches!(ca_from_doc(&doc), Err(DocError::Schema(2))));
    }

    #[test]
    fn certificate_documents_replay() {
        let f = full_set_algebra(2, 3);
        let out = solve_game(&f, GameKind::G, 3, 5, 1_000_000);
        let cert = out.cert.expect("small game certifies");
        let text = write_cert(&cert);
        let back = read_cert(&text).unwrap();
        verify_cert(&f, &back).unwrap();
        assert_eq!(write_cert(&back), text);
    }

    #[test]
    fn representation_documents_round_trip() {
        let s = reflexive_pair();
        let rep = crate::repsearch::find_square_on_base(&s, 3).unwrap();
        let text = write_ra_rep(&rep);
        assert_eq!(read_ra_rep(&text).unwrap(), rep);
        assert_eq!(write_ra_rep(&read_ra_rep(&text).unwrap()), text);

        let f = full_set_algebra(2, 3);
        let ca_rep = match crate::repsearch::find_ca_representation(&f, 3, 2) {
            crate::repsearch::RepOutcome::Found(rep) => rep,
            other => panic!("expected a representation, got {other:?}"),
        };
        let ca_text = write_ca_rep(&ca_rep);
        assert_eq!(read_ca_rep(&ca_text).unwrap(), ca_rep);
    }

    #[test]
    fn graph_documents_round_trip() {
        let g = cycle_graph(6);
        let text = write_graph(&g);
        let back = read_graph(&text).unwrap();
        assert_eq!(write_graph(&back), text);
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn coloured_graph_documents_round_trip() {
        let mut g = ColouredGraph::new(3);
        g.set_edge(0, 1, EdgeColour::GreenTint(1));
        g.set_edge(1, 0, EdgeColour::GreenTint(2));
        g.set_edge(0, 2, EdgeColour::Red { copy: 0, from: 1, to: 2 });
        g.set_yellow(1, 2, [0, 2].into_iter().collect());
        let text = write_coloured_graph(&g);
        let back = read_coloured_graph(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(write_coloured_graph(&back), text);
        // Directed reds survive the unordered storage.
        assert_eq!(back.edge(2, 0), Some(EdgeColour::Red { copy: 0, from: 2, to: 1 }));
    }
}
