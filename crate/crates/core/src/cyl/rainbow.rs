//! Rainbow coloured graphs and the dimension-3 atom structures they span.
//!
//! A coloured graph is a complete graph whose edges carry greens (one
//! plain green plus tinted greens ordered in reverse), whites, or
//! directed indexed reds, and whose green-free node pairs carry a shade
//! of yellow (a set of tints). Validity is a small list of forbidden
//! triangles plus a cone condition tying apex tints to base yellows.
//! Atoms of the induced cylindric structure are surjections from the
//! three coordinates onto valid graphs, encoded as a kernel partition
//! together with a graph on the partition blocks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cyl::structure::{CaAtomStructure, CaError};
use crate::ra::atom_set;
use crate::Atom;

/// Colour inventory for dimension 3. Tinted greens carry indices
/// `0..tints` read in reverse: tint `t` stands for `-t`, so larger raw
/// tints are smaller in the green order. Red indices `0..reds` keep
/// their natural order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RainbowCaPalette {
    pub tints: usize,
    pub plain_green: bool,
    pub white: bool,
    pub white_zero: bool,
    pub reds: usize,
    pub red_copies: usize,
}

impl RainbowCaPalette {
    /// The full palette: both whites, the plain green, `tints` tinted
    /// greens and one copy of `reds` red indices.
    pub fn standard(tints: usize, reds: usize) -> Self {
        RainbowCaPalette {
            tints,
            plain_green: true,
            white: true,
            white_zero: false,
            reds,
            red_copies: 1,
        }
        .with_white_zero()
    }

    fn with_white_zero(mut self) -> Self {
        self.white_zero = true;
        self
    }

    /// A single white and nothing else.
    pub fn white_only() -> Self {
        RainbowCaPalette {
            tints: 0,
            plain_green: false,
            white: true,
            white_zero: false,
            reds: 0,
            red_copies: 0,
        }
    }
}

/// An edge label. Reds are directed: `from` is the index shown at the
/// first node of the queried pair, `to` at the second. The shade of red
/// is a joker colour playable on graphs but barred from atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum EdgeColour {
    GreenPlain,
    GreenTint(usize),
    White,
    WhiteZero,
    Red { copy: usize, from: usize, to: usize },
    RedShade,
}

impl EdgeColour {
    pub fn is_green(self) -> bool {
        matches!(self, EdgeColour::GreenPlain | EdgeColour::GreenTint(_))
    }

    /// The same label seen from the other end of the edge.
    pub fn flip(self) -> Self {
        match self {
            EdgeColour::Red { copy, from, to } => EdgeColour::Red { copy, from: to, to: from },
            other => other,
        }
    }

    fn label(self) -> String {
        match self {
            EdgeColour::GreenPlain => "g1".into(),
            EdgeColour::GreenTint(t) => format!("g0^-{t}"),
            EdgeColour::White => "w".into(),
            EdgeColour::WhiteZero => "w0".into(),
            EdgeColour::Red { copy, from, to } => format!("r{copy}({from},{to})"),
            EdgeColour::RedShade => "rho".into(),
        }
    }
}

/// True when the pair map {(-t1, r1), (-t2, r2)} is an order-preserving
/// partial function from the reversed tint order into the red order.
pub fn tints_reds_order_preserving(t1: usize, r1: usize, t2: usize, r2: usize) -> bool {
    if t1 == t2 {
        r1 == r2
    } else if t1 > t2 {
        // -t1 < -t2 in the reversed order.
        r1 < r2
    } else {
        r2 < r1
    }
}

/// A possibly partially labelled complete graph on nodes `0..nodes`.
/// Yellows sit on unordered green-free pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColouredGraph {
    nodes: usize,
    edges: Vec<Option<EdgeColour>>,
    yellows: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

fn pair_index(u: usize, v: usize) -> usize {
    debug_assert!(u < v);
    v * (v - 1) / 2 + u
}

impl ColouredGraph {
    pub fn new(nodes: usize) -> Self {
        ColouredGraph {
            nodes,
            edges: vec![None; nodes * nodes.saturating_sub(1) / 2],
            yellows: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// The label of (u, v) as seen from u. Reflexive queries are a bug.
    pub fn edge(&self, u: usize, v: usize) -> Option<EdgeColour> {
        assert!(u != v && u < self.nodes && v < self.nodes);
        let stored = self.edges[pair_index(u.min(v), u.max(v))];
        if u < v {
            stored
        } else {
            stored.map(EdgeColour::flip)
        }
    }

    /// Labels (u, v) with `c` as seen from u.
    pub fn set_edge(&mut self, u: usize, v: usize, c: EdgeColour) {
        assert!(u != v && u < self.nodes && v < self.nodes);
        let stored = if u < v { c } else { c.flip() };
        self.edges[pair_index(u.min(v), u.max(v))] = Some(stored);
    }

    pub fn yellow(&self, u: usize, v: usize) -> Option<&BTreeSet<usize>> {
        self.yellows.get(&(u.min(v), u.max(v)))
    }

    pub fn set_yellow(&mut self, u: usize, v: usize, shade: BTreeSet<usize>) {
        assert!(u != v && u < self.nodes && v < self.nodes);
        self.yellows.insert((u.min(v), u.max(v)), shade);
    }

    pub fn clear_yellow(&mut self, u: usize, v: usize) {
        self.yellows.remove(&(u.min(v), u.max(v)));
    }

    pub fn is_complete(&self) -> bool {
        self.edges.iter().all(Option::is_some)
    }

    fn name_fragment(&self) -> String {
        let mut out = String::new();
        for v in 0..self.nodes {
            for u in 0..v {
                out.push_str(&format!(";{u}{v}:{}", match self.edges[pair_index(u, v)] {
                    Some(c) => c.label(),
                    None => "?".into(),
                }));
                if let Some(shade) = self.yellows.get(&(u, v)) {
                    let tints: Vec<String> = shade.iter().map(|t| t.to_string()).collect();
                    out.push_str(&format!("y{{{}}}", tints.join(",")));
                }
            }
        }
        out
    }
}

/// A cone: the apex sees the base through one tinted and one plain
/// green, and the base edge is not green.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cone {
    /// (tinted-side node, plain-side node).
    pub base: (usize, usize),
    pub apex: usize,
    pub tint: usize,
}

/// All cones of a graph; partial edges never form cones.
pub fn find_cones(g: &ColouredGraph) -> Vec<Cone> {
    let mut out = Vec::new();
    for d0 in 0..g.node_count() {
        for d1 in 0..g.node_count() {
            if d0 == d1 {
                continue;
            }
            for apex in 0..g.node_count() {
                if apex == d0 || apex == d1 {
                    continue;
                }
                let (Some(e0), Some(e1), Some(base)) =
                    (g.edge(d0, apex), g.edge(d1, apex), g.edge(d0, d1))
                else {
                    continue;
                };
                if let (EdgeColour::GreenTint(tint), EdgeColour::GreenPlain) = (e0, e1) {
                    if !base.is_green() {
                        out.push(Cone { base: (d0, d1), apex, tint });
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphViolation {
    MissingEdge { pair: (usize, usize) },
    UnknownColour { pair: (usize, usize) },
    AllGreenTriangle { nodes: [usize; 3] },
    PlainGreensWithWhite { nodes: [usize; 3] },
    TintedGreensWithWhiteZero { nodes: [usize; 3] },
    RedPairNotOrderPreserving { nodes: [usize; 3] },
    RedIndicesMismatch { nodes: [usize; 3] },
    YellowOnGreenPair { pair: (usize, usize) },
    MissingYellow { pair: (usize, usize) },
    UnknownTintInYellow { pair: (usize, usize) },
    ConeTintOutsideShade { cone: Cone },
}

fn colour_in_palette(p: &RainbowCaPalette, c: EdgeColour) -> bool {
    match c {
        EdgeColour::GreenPlain => p.plain_green,
        EdgeColour::GreenTint(t) => t < p.tints,
        EdgeColour::White => p.white,
        EdgeColour::WhiteZero => p.white_zero,
        EdgeColour::Red { copy, from, to } => copy < p.red_copies && from < p.reds && to < p.reds,
        EdgeColour::RedShade => true,
    }
}

/// The forbidden-triangle scan over every fully labelled triangle, plus
/// yellow placement rules on labelled pairs and the cone condition.
/// Completeness of edges and yellows is only demanded when `total`.
fn violations(g: &ColouredGraph, p: &RainbowCaPalette, total: bool) -> Vec<GraphViolation> {
    let mut out = Vec::new();
    let n = g.node_count();
    for v in 0..n {
        for u in 0..v {
            match g.edge(u, v) {
                None => {
                    if total {
                        out.push(GraphViolation::MissingEdge { pair: (u, v) });
                    }
                }
                Some(c) if !colour_in_palette(p, c) => {
                    out.push(GraphViolation::UnknownColour { pair: (u, v) });
                }
                Some(c) => {
                    match g.yellow(u, v) {
                        Some(_) if c.is_green() => {
                            out.push(GraphViolation::YellowOnGreenPair { pair: (u, v) });
                        }
                        Some(shade) if shade.iter().any(|&t| t >= p.tints) => {
                            out.push(GraphViolation::UnknownTintInYellow { pair: (u, v) });
                        }
                        None if total && !c.is_green() => {
                            out.push(GraphViolation::MissingYellow { pair: (u, v) });
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    for z in 0..n {
        for y in 0..z {
            for x in 0..y {
                let (Some(exy), Some(exz), Some(eyz)) =
                    (g.edge(x, y), g.edge(x, z), g.edge(y, z))
                else {
                    continue;
                };
                let nodes = [x, y, z];
                let greens = [exy, exz, eyz].iter().filter(|c| c.is_green()).count();
                if greens == 3 {
                    out.push(GraphViolation::AllGreenTriangle { nodes });
                    continue;
                }
                if greens == 2 {
                    // The two greens share a node; the third edge faces it.
                    let (shared, a, b, other) = if exy.is_green() && exz.is_green() {
                        (x, y, z, eyz)
                    } else if exy.is_green() && eyz.is_green() {
                        (y, x, z, exz)
                    } else {
                        (z, x, y, exy)
                    };
                    let ga = g.edge(shared, a).unwrap();
                    let gb = g.edge(shared, b).unwrap();
                    match (ga, gb, other) {
                        (EdgeColour::GreenPlain, EdgeColour::GreenPlain, EdgeColour::White) => {
                            out.push(GraphViolation::PlainGreensWithWhite { nodes });
                        }
                        (
                            EdgeColour::GreenTint(_),
                            EdgeColour::GreenTint(_),
                            EdgeColour::WhiteZero,
                        ) => {
                            out.push(GraphViolation::TintedGreensWithWhiteZero { nodes });
                        }
                        (
                            EdgeColour::GreenTint(ta),
                            EdgeColour::GreenTint(tb),
                            EdgeColour::Red { .. },
                        ) => {
                            // Tint of each apex pairs with the red index
                            // shown on that apex's side.
                            let EdgeColour::Red { from: ra, to: rb, .. } =
                                g.edge(a, b).unwrap()
                            else {
                                unreachable!("red orientation");
                            };
                            if !tints_reds_order_preserving(ta, ra, tb, rb) {
                                out.push(GraphViolation::RedPairNotOrderPreserving { nodes });
                            }
                        }
                        _ => {}
                    }
                    continue;
                }
                // Three reds must show one index per node.
                if let (
                    EdgeColour::Red { from: xy_x, to: xy_y, .. },
                    EdgeColour::Red { from: xz_x, to: xz_z, .. },
                    EdgeColour::Red { from: yz_y, to: yz_z, .. },
                ) = (exy, exz, eyz)
                {
                    if xy_x != xz_x || xy_y != yz_y || xz_z != yz_z {
                        out.push(GraphViolation::RedIndicesMismatch { nodes });
                    }
                }
            }
        }
    }

    for cone in find_cones(g) {
        if let Some(shade) = g.yellow(cone.base.0, cone.base.1) {
            if !shade.contains(&cone.tint) {
                out.push(GraphViolation::ConeTintOutsideShade { cone });
            }
        } else if total {
            // Already reported as a missing yellow: cone bases are
            // green-free by definition.
        }
    }
    out
}

/// Full validity: totally labelled, no forbidden triangle, yellows
/// exactly on green-free pairs, every cone tint inside its base shade.
pub fn coloured_graph_check(g: &ColouredGraph, p: &RainbowCaPalette) -> Vec<GraphViolation> {
    violations(g, p, true)
}

/// Validity of the labelled part only, for boards still being played.
pub fn partial_graph_ok(g: &ColouredGraph, p: &RainbowCaPalette) -> bool {
    violations(g, p, false).is_empty()
}

/// One atom: a surjection from the three coordinates onto a coloured
/// graph, stored as the kernel (first-occurrence block ids) plus the
/// graph on blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CaAtomRepr {
    assign: [u8; 3],
    graph: ColouredGraph,
}

impl CaAtomRepr {
    fn name(&self) -> String {
        let blocks: String = self.assign.iter().map(|b| b.to_string()).collect();
        format!("{blocks}{}", self.graph.name_fragment())
    }

    /// The window left after forgetting coordinate `i`: either both
    /// remaining coordinates collapse, or the directed edge between
    /// their images plus that pair's yellow.
    fn window_off(&self, i: usize) -> WindowKey {
        let mut rest = (0..3).filter(|&c| c != i);
        let (j, k) = (rest.next().unwrap(), rest.next().unwrap());
        let (bj, bk) = (self.assign[j] as usize, self.assign[k] as usize);
        if bj == bk {
            WindowKey::Collapsed
        } else {
            WindowKey::Edge(
                self.graph.edge(bj, bk).expect("atom graphs are complete"),
                self.graph.yellow(bj, bk).cloned(),
            )
        }
    }

    fn transpose(&self, i: usize, j: usize) -> CaAtomRepr {
        let mut assign = self.assign;
        assign.swap(i, j);
        // Renormalize block ids to first occurrence and carry the graph
        // across the induced node permutation.
        let mut new_of_old: [Option<u8>; 3] = [None; 3];
        let mut next = 0u8;
        let mut normalized = [0u8; 3];
        for (c, slot) in assign.iter().enumerate() {
            let old = *slot as usize;
            let id = *new_of_old[old].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            normalized[c] = id;
        }
        let blocks = next as usize;
        let mut old_of_new = vec![0usize; blocks];
        for old in 0..3 {
            if let Some(new) = new_of_old[old] {
                old_of_new[new as usize] = old;
            }
        }
        let mut graph = ColouredGraph::new(blocks);
        for v in 0..blocks {
            for u in 0..v {
                let (ou, ov) = (old_of_new[u], old_of_new[v]);
                graph.set_edge(u, v, self.graph.edge(ou, ov).expect("complete"));
                if let Some(shade) = self.graph.yellow(ou, ov) {
                    graph.set_yellow(u, v, shade.clone());
                }
            }
        }
        CaAtomRepr { assign: normalized, graph }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum WindowKey {
    Collapsed,
    Edge(EdgeColour, Option<BTreeSet<usize>>),
}

fn edge_options(p: &RainbowCaPalette) -> Vec<EdgeColour> {
    let mut out = Vec::new();
    if p.plain_green {
        out.push(EdgeColour::GreenPlain);
    }
    for t in 0..p.tints {
        out.push(EdgeColour::GreenTint(t));
    }
    if p.white {
        out.push(EdgeColour::White);
    }
    if p.white_zero {
        out.push(EdgeColour::WhiteZero);
    }
    for copy in 0..p.red_copies {
        for from in 0..p.reds {
            for to in 0..p.reds {
                out.push(EdgeColour::Red { copy, from, to });
            }
        }
    }
    out
}

/// All complete valid decorated graphs on `nodes` nodes, in a fixed
/// deterministic order: colours cycle fastest on the highest pair rank,
/// then yellows as ascending tint bitmasks per green-free pair.
fn valid_graphs(p: &RainbowCaPalette, nodes: usize) -> Vec<ColouredGraph> {
    let colours = edge_options(p);
    let pairs: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|v| (0..v).map(move |u| (u, v)))
        .collect();
    let mut out = Vec::new();
    let mut g = ColouredGraph::new(nodes);
    fn colour_rec(
        g: &mut ColouredGraph,
        pairs: &[(usize, usize)],
        at: usize,
        colours: &[EdgeColour],
        p: &RainbowCaPalette,
        out: &mut Vec<ColouredGraph>,
    ) {
        if at == pairs.len() {
            yellow_rec(g, pairs, 0, p, out);
            return;
        }
        let (u, v) = pairs[at];
        for &c in colours {
            g.set_edge(u, v, c);
            // Triangle rules only mention edges, so pruning before the
            // yellows are placed is sound.
            if partial_graph_ok(g, p) {
                colour_rec(g, pairs, at + 1, colours, p, out);
            }
        }
        g.edges[pair_index(u, v)] = None;
    }
    fn yellow_rec(
        g: &mut ColouredGraph,
        pairs: &[(usize, usize)],
        at: usize,
        p: &RainbowCaPalette,
        out: &mut Vec<ColouredGraph>,
    ) {
        if at == pairs.len() {
            if coloured_graph_check(g, p).is_empty() {
                out.push(g.clone());
            }
            return;
        }
        let (u, v) = pairs[at];
        if g.edge(u, v).expect("coloured").is_green() {
            yellow_rec(g, pairs, at + 1, p, out);
            return;
        }
        for mask in 0u64..(1 << p.tints) {
            let shade: BTreeSet<usize> = (0..p.tints).filter(|t| mask >> t & 1 == 1).collect();
            g.set_yellow(u, v, shade);
            yellow_rec(g, pairs, at + 1, p, out);
        }
        g.clear_yellow(u, v);
    }
    colour_rec(&mut g, &pairs, 0, &colours, p, &mut out);
    out
}

/// Builds the dimension-3 atom structure over a truncated palette:
/// atoms are kernel-plus-graph surjection classes, replacement classes
/// compare the window left by dropping a coordinate, diagonals read the
/// kernel, and transpositions permute coordinates.
pub fn rainbow_ca_atoms(p: &RainbowCaPalette, budget: usize) -> Result<CaAtomStructure, CaError> {
    const PARTITIONS: [[u8; 3]; 5] =
        [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [0, 1, 2]];
    let mut atoms: Vec<CaAtomRepr> = Vec::new();
    for assign in PARTITIONS {
        let blocks = 1 + *assign.iter().max().unwrap() as usize;
        for graph in valid_graphs(p, blocks) {
            if atoms.len() == budget {
                return Err(CaError::BudgetExceeded(budget));
            }
            atoms.push(CaAtomRepr { assign, graph });
        }
    }
    let index: HashMap<CaAtomRepr, usize> =
        atoms.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();

    let names = atoms.iter().map(CaAtomRepr::name).collect();
    let mut classes = Vec::new();
    for dim in 0..3 {
        let mut ids: HashMap<WindowKey, u32> = HashMap::new();
        let mut per_atom = Vec::with_capacity(atoms.len());
        for a in &atoms {
            let next = ids.len() as u32;
            per_atom.push(*ids.entry(a.window_off(dim)).or_insert(next));
        }
        classes.push(per_atom);
    }
    let mut diagonals = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            diagonals.push(atom_set(
                atoms.len(),
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.assign[i] == a.assign[j])
                    .map(|(idx, _)| idx),
            ));
        }
    }
    let mut transpositions: Vec<Vec<Atom>> = Vec::new();
    for i in 0..3 {
        for j in (i + 1)..3 {
            transpositions.push(
                atoms
                    .iter()
                    .map(|a| index[&a.transpose(i, j)])
                    .collect(),
            );
        }
    }
    CaAtomStructure::new(3, names, classes, diagonals, transpositions)
}
