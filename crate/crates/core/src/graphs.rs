//! Finite simple graphs, the generators used by the constructions, and
//! exact chromatic number / girth computation.

use serde::{Deserialize, Serialize};

/// Finite undirected loop-free graph on vertices `0..n`.
///
/// Adjacency is kept as one bitmask per vertex; vertex counts stay small
/// (exact colouring is capped well below 64).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    adj: Vec<u64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("loop edge at vertex {0} not allowed")]
    LoopEdge(usize),
    #[error("graph on {n} vertices exceeds the supported maximum {max}")]
    TooLarge { n: usize, max: usize },
}

impl SimpleGraph {
    pub const MAX_VERTICES: usize = 64;

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n > Self::MAX_VERTICES {
            return Err(GraphError::TooLarge { n, max: Self::MAX_VERTICES });
        }
        Ok(SimpleGraph { n, adj: vec![0; n] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        if u >= self.n {
            return Err(GraphError::VertexOutOfRange { vertex: u, n: self.n });
        }
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
        }
        if u == v {
            return Err(GraphError::LoopEdge(u));
        }
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
        Ok(())
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u] & (1 << v) != 0
    }

    pub fn neighbours(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.adj[u];
        (0..self.n).filter(move |v| mask & (1 << v) != 0)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    /// Edges as sorted (u, v) pairs with u < v.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

pub fn complete_graph(k: usize) -> SimpleGraph {
    let mut g = SimpleGraph::empty(k).expect("complete graph size within range");
    for u in 0..k {
        for v in (u + 1)..k {
            g.add_edge(u, v).expect("in range");
        }
    }
    g
}

/// `count` pairwise disconnected cliques, each on `size` vertices.
pub fn disjoint_cliques(count: usize, size: usize) -> SimpleGraph {
    let mut g = SimpleGraph::empty(count * size).expect("size within range");
    for c in 0..count {
        let base = c * size;
        for u in 0..size {
            for v in (u + 1)..size {
                g.add_edge(base + u, base + v).expect("in range");
            }
        }
    }
    g
}

/// Vertices `0..m`, edge between i and j exactly when 0 < |i - j| < width.
pub fn band_graph(m: usize, width: usize) -> SimpleGraph {
    let mut g = SimpleGraph::empty(m).expect("size within range");
    for i in 0..m {
        for j in (i + 1)..m {
            if j - i < width {
                g.add_edge(i, j).expect("in range");
            }
        }
    }
    g
}

pub fn cycle_graph(k: usize) -> SimpleGraph {
    let mut g = SimpleGraph::empty(k).expect("size within range");
    if k >= 3 {
        for i in 0..k {
            g.add_edge(i, (i + 1) % k).expect("in range");
        }
    }
    g
}

/// Erdos-Renyi style graph: each pair independently an edge with
/// probability `p`, driven by a ChaCha stream so the same seed always
/// yields the same graph on every platform.
pub fn seeded_random_graph(m: usize, p: f64, seed: u64) -> SimpleGraph {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut g = SimpleGraph::empty(m).expect("size within range");
    for u in 0..m {
        for v in (u + 1)..m {
            if rng.gen::<f64>() < p {
                g.add_edge(u, v).expect("in range");
            }
        }
    }
    g
}

/// A proper colouring witnessing the chromatic number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Colouring {
    pub colours_used: usize,
    pub assignment: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChromaticResult {
    Computed(Colouring),
    /// The graph is larger than the configured exact-search cap.
    Exceeded { vertices: usize, limit: usize },
}

pub const DEFAULT_CHROMATIC_VERTEX_LIMIT: usize = 20;

/// Exact chromatic number by iterative deepening over the colour count,
/// with backtracking that never branches on more than one fresh colour.
pub fn chromatic_number(g: &SimpleGraph, vertex_limit: usize) -> ChromaticResult {
    let n = g.vertices();
    if n > vertex_limit {
        return ChromaticResult::Exceeded { vertices: n, limit: vertex_limit };
    }
    if n == 0 {
        return ChromaticResult::Computed(Colouring { colours_used: 0, assignment: vec![] });
    }
    for k in 1..=n {
        let mut assignment = vec![usize::MAX; n];
        if colour_from(g, k, 0, &mut assignment) {
            return ChromaticResult::Computed(Colouring { colours_used: k, assignment });
        }
    }
    unreachable!("every graph on n vertices is n-colourable")
}

fn colour_from(g: &SimpleGraph, k: usize, v: usize, assignment: &mut Vec<usize>) -> bool {
    if v == g.vertices() {
        return true;
    }
    // Colours beyond the first unused one are interchangeable.
    let max_used = assignment[..v].iter().copied().filter(|&c| c != usize::MAX).max();
    let cap = match max_used {
        Some(m) => (m + 2).min(k),
        None => 1,
    };
    'candidate: for c in 0..cap {
        for u in g.neighbours(v) {
            if u < v && assignment[u] == c {
                continue 'candidate;
            }
        }
        assignment[v] = c;
        if colour_from(g, k, v + 1, assignment) {
            return true;
        }
        assignment[v] = usize::MAX;
    }
    false
}

/// Verify a colouring is proper; used by callers to audit witnesses.
pub fn is_proper_colouring(g: &SimpleGraph, assignment: &[usize]) -> bool {
    assignment.len() == g.vertices()
        && g.edges().iter().all(|&(u, v)| assignment[u] != assignment[v])
}

/// Largest clique size, by exhaustive search. Intended for small graphs
/// (invariant audits), not as a general-purpose routine.
pub fn clique_number(g: &SimpleGraph) -> usize {
    fn mask_above(v: usize) -> u64 {
        if v >= 63 {
            0
        } else {
            u64::MAX << (v + 1)
        }
    }
    fn grow(g: &SimpleGraph, candidates: u64, size: usize, best: &mut usize) {
        if size > *best {
            *best = size;
        }
        let mut cand = candidates;
        while cand != 0 {
            let v = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            grow(g, candidates & g.adj[v] & mask_above(v), size + 1, best);
        }
    }
    let n = g.vertices();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    grow(g, all, 0, &mut best);
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Girth {
    Finite(usize),
    /// No cycle at all (forest).
    Infinite,
}

/// Length of a shortest cycle. BFS from every vertex; the first cross or
/// back edge seen from vertex v closes a shortest cycle through v.
pub fn girth(g: &SimpleGraph) -> Girth {
    let n = g.vertices();
    let mut best: Option<usize> = None;
    for root in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for v in g.neighbours(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    let cycle = dist[u] + dist[v] + 1;
                    if best.map_or(true, |b| cycle < b) {
                        best = Some(cycle);
                    }
                }
            }
        }
    }
    match best {
        Some(b) => Girth::Finite(b),
        None => Girth::Infinite,
    }
}

/// The three truncated linear orders the rainbow and blur machinery draw
/// indices from. Integers-as-two-glued-truncations is expressible by
/// composing two of these, so it is not a separate kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "length", rename_all = "kebab-case")]
pub enum LinearOrderSpec {
    /// 0 < 1 < ... < t-1, the front of the naturals.
    NaturalsTruncated(usize),
    /// Index i stands for -i, so 0 > 1 > ... > t-1.
    ReversedNaturalsTruncated(usize),
    /// A plain finite chain 0 < 1 < ... < t-1.
    FiniteChain(usize),
}

impl LinearOrderSpec {
    pub fn len(&self) -> usize {
        match *self {
            LinearOrderSpec::NaturalsTruncated(t)
            | LinearOrderSpec::ReversedNaturalsTruncated(t)
            | LinearOrderSpec::FiniteChain(t) => t,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Strict order between element indices.
    pub fn lt(&self, i: usize, j: usize) -> bool {
        match *self {
            LinearOrderSpec::NaturalsTruncated(_) | LinearOrderSpec::FiniteChain(_) => i < j,
            LinearOrderSpec::ReversedNaturalsTruncated(_) => i > j,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: try every assignment of `k` colours.
    fn colourable_brute(g: &SimpleGraph, k: usize) -> bool {
        let n = g.vertices();
        if n == 0 {
            return true;
        }
        let total = k.pow(n as u32);
        'outer: for code in 0..total {
            let mut c = code;
            let mut assignment = vec![0usize; n];
            for slot in assignment.iter_mut() {
                *slot = c % k;
                c /= k;
            }
            for (u, v) in g.edges() {
                if assignment[u] == assignment[v] {
                    continue 'outer;
                }
            }
            return true;
        }
        false
    }

    fn chromatic(g: &SimpleGraph) -> usize {
        match chromatic_number(g, DEFAULT_CHROMATIC_VERTEX_LIMIT) {
            ChromaticResult::Computed(c) => {
                assert!(is_proper_colouring(g, &c.assignment));
                assert_eq!(
                    c.assignment.iter().collect::<std::collections::BTreeSet<_>>().len(),
                    c.colours_used
                );
                c.colours_used
            }
            ChromaticResult::Exceeded { .. } => panic!("unexpected budget refusal"),
        }
    }

    #[test]
    fn five_cycle_needs_three_colours() {
        let c5 = cycle_graph(5);
        assert!(!colourable_brute(&c5, 2));
        assert!(colourable_brute(&c5, 3));
        assert_eq!(chromatic(&c5), 3);
    }

    #[test]
    fn band_graph_width_three_on_six_vertices() {
        let g = band_graph(6, 3);
        assert!(!colourable_brute(&g, 2));
        assert!(colourable_brute(&g, 3));
        assert_eq!(chromatic(&g), 3);
        // i is adjacent to i+1 and i+2 only.
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && !g.has_edge(0, 3));
    }

    #[test]
    fn complete_graph_chromatic_is_order() {
        for k in 1..=6 {
            assert_eq!(chromatic(&complete_graph(k)), k);
        }
    }

    #[test]
    fn disjoint_cliques_chromatic_is_clique_size() {
        let g = disjoint_cliques(3, 3);
        assert_eq!(g.vertices(), 9);
        assert_eq!(chromatic(&g), 3);
        assert_eq!(clique_number(&g), 3);
        assert!(!g.has_edge(2, 3));
    }

    #[test]
    fn chromatic_budget_refusal_is_explicit() {
        let g = complete_graph(25);
        assert_eq!(
            chromatic_number(&g, 20),
            ChromaticResult::Exceeded { vertices: 25, limit: 20 }
        );
    }

    #[test]
    fn girth_values() {
        assert_eq!(girth(&cycle_graph(5)), Girth::Finite(5));
        assert_eq!(girth(&cycle_graph(9)), Girth::Finite(9));
        assert_eq!(girth(&complete_graph(4)), Girth::Finite(3));
        let path = SimpleGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(girth(&path), Girth::Infinite);
        assert_eq!(girth(&SimpleGraph::empty(5).unwrap()), Girth::Infinite);
        // Two triangles sharing no vertex: girth 3.
        assert_eq!(girth(&disjoint_cliques(2, 3)), Girth::Finite(3));
    }

    #[test]
    fn seeded_random_graph_is_reproducible() {
        let a = seeded_random_graph(12, 0.4, 99);
        let b = seeded_random_graph(12, 0.4, 99);
        assert_eq!(a, b);
        let c = seeded_random_graph(12, 0.4, 100);
        assert_ne!(a, c, "different seed should perturb at least one edge here");
    }

    #[test]
    fn linear_order_orientations() {
        let nat = LinearOrderSpec::NaturalsTruncated(5);
        let rev = LinearOrderSpec::ReversedNaturalsTruncated(5);
        assert!(nat.lt(0, 1));
        assert!(rev.lt(1, 0), "index 1 means -1, below -0");
        assert!(!rev.lt(0, 1));
        assert_eq!(LinearOrderSpec::FiniteChain(3).len(), 3);
    }

    #[test]
    fn loops_rejected() {
        let mut g = SimpleGraph::empty(3).unwrap();
        assert_eq!(g.add_edge(1, 1), Err(GraphError::LoopEdge(1)));
        assert_eq!(
            g.add_edge(0, 7),
            Err(GraphError::VertexOutOfRange { vertex: 7, n: 3 })
        );
    }

    proptest::proptest! {
        #[test]
        fn chromatic_bounds(seed in 0u64..50, m in 1usize..9) {
            let g = seeded_random_graph(m, 0.5, seed);
            let chi = chromatic(&g);
            let max_deg = (0..m).map(|v| g.degree(v)).max().unwrap_or(0);
            proptest::prop_assert!(chi >= clique_number(&g));
            proptest::prop_assert!(chi <= max_deg + 1);
            proptest::prop_assert!(!colourable_brute(&g, chi.saturating_sub(1)));
            proptest::prop_assert!(colourable_brute(&g, chi));
        }
    }
}
