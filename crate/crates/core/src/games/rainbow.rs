//! The green-cone play on rainbow coloured graphs.
//!
//! The attacking script opens with a triangle whose base pair is white
//! under the full shade of yellow and whose third node is a cone apex of
//! tint 0, then keeps demanding fresh apexes over the same base with
//! strictly smaller tints (larger raw indices read in reverse).  Every
//! answer must colour the edges between apexes, and the forbidden
//! triangles force directed reds whose indices shadow the tints in
//! reverse, so a finite red supply runs dry after a pigeonhole number of
//! rounds.  The defender's counter-strategy keeps a partial map from
//! tints to red indices that is order preserving in the reversed tint
//! order and widely spaced, halving nothing but tripling margins: after
//! round r consecutive range points stay at least 3^(total − r) apart.
//! With a truncated red supply the map can run out of room, in which
//! case the strategy resigns with a diagnostic instead of cheating.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::cyl::rainbow::{
    coloured_graph_check, find_cones, partial_graph_ok, ColouredGraph, EdgeColour,
    RainbowCaPalette,
};

/// The palette the script runs on: one tint per possible round plus the
/// opening tint, both whites, the plain green and `reds` red indices.
pub fn script_palette(reds: usize) -> RainbowCaPalette {
    RainbowCaPalette {
        tints: reds + 2,
        plain_green: true,
        white: true,
        white_zero: true,
        reds,
        red_copies: 1,
    }
}

/// The opening board: base pair (0, 1) white and yellow in every tint,
/// node 2 a cone apex of tint 0.
pub fn initial_board(p: &RainbowCaPalette) -> ColouredGraph {
    let mut g = ColouredGraph::new(3);
    g.set_edge(0, 1, EdgeColour::White);
    g.set_edge(0, 2, EdgeColour::GreenTint(0));
    g.set_edge(1, 2, EdgeColour::GreenPlain);
    g.set_yellow(0, 1, (0..p.tints).collect());
    g
}

/// The demand of round `round` (rounds count from 1, the opening): a
/// fresh apex over the base (0, 1) of tint `round − 1`.
pub fn demand_for_round(round: usize) -> (usize, usize) {
    assert!(round >= 2);
    (round + 1, round - 1)
}

/// The board with the demanded apex and its two green edges, before the
/// defender colours the rest.
pub fn extend_with_demand(board: &ColouredGraph, apex: usize, tint: usize) -> ColouredGraph {
    assert_eq!(apex, board.node_count());
    let mut g = ColouredGraph::new(apex + 1);
    for v in 0..board.node_count() {
        for u in 0..v {
            if let Some(c) = board.edge(u, v) {
                g.set_edge(u, v, c);
            }
            if let Some(shade) = board.yellow(u, v) {
                g.set_yellow(u, v, shade.clone());
            }
        }
    }
    g.set_edge(0, apex, EdgeColour::GreenTint(tint));
    g.set_edge(1, apex, EdgeColour::GreenPlain);
    g
}

/// Candidate edge labels in a fixed order; the shade of red stays out,
/// as it is not an atom colour.
fn candidate_colours(p: &RainbowCaPalette) -> Vec<EdgeColour> {
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

/// Every valid completion of the partially coloured board, visited in
/// lexicographic colour order; `visit` returning true stops the scan.
/// New green-free pairs get the empty shade of yellow: in these plays
/// greens only ever touch the two base nodes, so no cone can sit over
/// any other pair and the shade is never consulted.
pub fn exists_completions(
    board: &ColouredGraph,
    p: &RainbowCaPalette,
    visit: &mut impl FnMut(&ColouredGraph) -> bool,
) -> bool {
    let mut open = Vec::new();
    for v in 0..board.node_count() {
        for u in 0..v {
            if board.edge(u, v).is_none() {
                open.push((u, v));
            }
        }
    }
    fill_edges(board, p, &open, 0, visit)
}

fn fill_edges(
    g: &ColouredGraph,
    p: &RainbowCaPalette,
    open: &[(usize, usize)],
    at: usize,
    visit: &mut impl FnMut(&ColouredGraph) -> bool,
) -> bool {
    if at == open.len() {
        let mut done = g.clone();
        for v in 0..done.node_count() {
            for u in 0..v {
                let green = done.edge(u, v).map(EdgeColour::is_green).unwrap_or(false);
                if !green && done.yellow(u, v).is_none() {
                    debug_assert!(
                        find_cones(&done).iter().all(|c| {
                            (c.base.0.min(c.base.1), c.base.0.max(c.base.1)) != (u, v)
                        }),
                        "no cone ever sits over a defender-coloured pair"
                    );
                    done.set_yellow(u, v, BTreeSet::new());
                }
            }
        }
        if coloured_graph_check(&done, p).is_empty() {
            return visit(&done);
        }
        return false;
    }
    let (u, v) = open[at];
    for c in candidate_colours(p) {
        let mut next = g.clone();
        next.set_edge(u, v, c);
        if partial_graph_ok(&next, p) && fill_edges(&next, p, open, at + 1, visit) {
            return true;
        }
    }
    false
}

/// Rounds the defender can survive against the script, capped: `cap`
/// means some line of play lasted the whole capped game.
pub fn scripted_survival_depth(reds: usize, cap: usize) -> usize {
    let p = script_palette(reds);
    let board = initial_board(&p);
    assert!(coloured_graph_check(&board, &p).is_empty());
    survive(&board, &p, 2, cap)
}

fn survive(board: &ColouredGraph, p: &RainbowCaPalette, round: usize, cap: usize) -> usize {
    if round > cap {
        return cap;
    }
    let (apex, tint) = demand_for_round(round);
    let demanded = extend_with_demand(board, apex, tint);
    let mut best = round - 1;
    exists_completions(&demanded, p, &mut |done| {
        best = best.max(survive(done, p, round + 1, cap));
        best == cap
    });
    best
}

/// The first round at which the script has beaten every defender line,
/// or None if some line survives the capped game.
pub fn scripted_forall_win_round(reds: usize, cap: usize) -> Option<usize> {
    let depth = scripted_survival_depth(reds, cap);
    if depth < cap {
        Some(depth + 1)
    } else {
        None
    }
}

/// Resignation diagnostic of the defender's map: the red space left no
/// room for the next assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RainbowResign {
    pub round: usize,
    pub tint: usize,
    pub detail: String,
}

impl std::fmt::Display for RainbowResign {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            out,
            "round {}: no red index for tint {}: {}",
            self.round, self.tint, self.detail
        )
    }
}

/// Order-preserving, widely spaced partial map from raw tints to red
/// indices.  Raw tints read in reverse, so the stored values strictly
/// decrease as raw tints increase, and consecutive values differ by at
/// least 3^(m_total − round).
#[derive(Clone, Debug)]
pub struct RhoMap {
    m_total: usize,
    round: usize,
    red_space: usize,
    map: BTreeMap<usize, usize>,
}

impl RhoMap {
    pub fn new(m_total: usize, red_space: usize) -> Self {
        RhoMap { m_total, round: 0, red_space, map: BTreeMap::new() }
    }

    pub fn advance_round(&mut self) {
        self.round += 1;
        assert!(self.round <= self.m_total, "the declared budget covers every round");
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn get(&self, tint: usize) -> Option<usize> {
        self.map.get(&tint).copied()
    }

    /// Minimum spacing the current round must keep.
    pub fn gap_floor(&self) -> usize {
        3usize.pow((self.m_total - self.round) as u32)
    }

    /// Extends the map to cover `tint`, keeping order and spacing, or
    /// resigns when the truncated red space has no room.
    pub fn ensure(&mut self, tint: usize) -> Result<usize, RainbowResign> {
        if let Some(v) = self.map.get(&tint) {
            return Ok(*v);
        }
        let gap = self.gap_floor();
        let above = self.map.range(..tint).next_back().map(|(_, &v)| v);
        let below = self.map.range(tint + 1..).next().map(|(_, &v)| v);
        let resign = |detail: String| RainbowResign { round: self.round, tint, detail };
        let value = match (above, below) {
            (None, None) => {
                if self.red_space == 0 {
                    return Err(resign("the red space is empty".into()));
                }
                self.red_space - 1
            }
            (Some(hi), None) => {
                if hi < gap {
                    return Err(resign(format!("needs a value at least {gap} below {hi}")));
                }
                hi - gap
            }
            (None, Some(lo)) => {
                let v = lo + gap;
                if v >= self.red_space {
                    return Err(resign(format!(
                        "needs a value at least {gap} above {lo} inside {}",
                        self.red_space
                    )));
                }
                v
            }
            (Some(hi), Some(lo)) => {
                let v = lo + gap;
                if v + gap > hi {
                    return Err(resign(format!(
                        "no room between {lo} and {hi} at spacing {gap}"
                    )));
                }
                v
            }
        };
        self.map.insert(tint, value);
        Ok(value)
    }

    /// Order preservation and the spacing floor over the whole range.
    pub fn check_invariants(&self) -> bool {
        let entries: Vec<(usize, usize)> = self.map.iter().map(|(&k, &v)| (k, v)).collect();
        entries.windows(2).all(|w| {
            let ((_, hi), (_, lo)) = (w[0], w[1]);
            hi > lo && hi - lo >= self.gap_floor()
        }) && entries.iter().all(|&(_, v)| v < self.red_space)
    }
}

/// The defender's scripted-play strategy: reds between apexes of cones
/// over the same base through the map, whites otherwise, never green.
pub struct ExistsConeStrategy {
    pub rho: RhoMap,
}

impl ExistsConeStrategy {
    pub fn new(m_total: usize, red_space: usize) -> Self {
        ExistsConeStrategy { rho: RhoMap::new(m_total, red_space) }
    }

    /// The colour for the open edge (β, δ), where δ is the demanded
    /// apex: a red through the map when both ends are apexes of cones
    /// over the base, a white otherwise.
    pub fn colour_for(
        &mut self,
        demanded: &ColouredGraph,
        beta: usize,
        delta: usize,
    ) -> Result<EdgeColour, RainbowResign> {
        let beta_tint = cone_tint(demanded, beta);
        let delta_tint = cone_tint(demanded, delta);
        if let (Some(p), Some(q)) = (beta_tint, delta_tint) {
            let from = self.rho.ensure(p)?;
            let to = self.rho.ensure(q)?;
            return Ok(EdgeColour::Red { copy: 0, from, to });
        }
        // Plain white unless β already reaches the plain-green side of
        // the base, in which case the second white keeps the triangle
        // (plain, plain, w) out of the board.
        if demanded.edge(beta, 1) != Some(EdgeColour::GreenPlain) {
            Ok(EdgeColour::White)
        } else {
            Ok(EdgeColour::WhiteZero)
        }
    }

    /// A full answer to the demand: colours for every open edge and the
    /// cone-recording shades of yellow.
    pub fn reply(
        &mut self,
        demanded: &ColouredGraph,
        round: usize,
    ) -> Result<ColouredGraph, RainbowResign> {
        while self.rho.round() < round {
            self.rho.advance_round();
        }
        let mut done = demanded.clone();
        let apex = demanded.node_count() - 1;
        for beta in 0..apex {
            if done.edge(beta, apex).is_none() {
                let c = self.colour_for(demanded, beta, apex)?;
                done.set_edge(beta, apex, c);
            }
        }
        for v in 0..done.node_count() {
            for u in 0..v {
                let green = done.edge(u, v).map(EdgeColour::is_green).unwrap_or(false);
                if !green && done.yellow(u, v).is_none() {
                    let shade = find_cones(&done)
                        .into_iter()
                        .filter(|c| (c.base.0, c.base.1) == (u, v))
                        .map(|c| c.tint)
                        .collect();
                    done.set_yellow(u, v, shade);
                }
            }
        }
        Ok(done)
    }
}

/// The tint of the cone over the base (0, 1) whose apex is `node`.
fn cone_tint(g: &ColouredGraph, node: usize) -> Option<usize> {
    if node < 2 {
        return None;
    }
    match (g.edge(0, node), g.edge(1, node)) {
        (Some(EdgeColour::GreenTint(t)), Some(EdgeColour::GreenPlain)) => Some(t),
        _ => None,
    }
}

/// Plays the whole script against the map strategy.  Every board of the
/// transcript is checked valid; a truncated red space surfaces as the
/// strategy's resignation.
pub fn run_rainbow_scripted(
    reds_available: usize,
    m_total: usize,
    rounds: usize,
) -> Result<Vec<ColouredGraph>, RainbowResign> {
    assert!(rounds <= m_total);
    let p = RainbowCaPalette {
        tints: rounds.max(1),
        plain_green: true,
        white: true,
        white_zero: true,
        reds: reds_available,
        red_copies: 1,
    };
    let mut strategy = ExistsConeStrategy::new(m_total, reds_available);
    let board = initial_board(&p);
    strategy.rho.advance_round();
    strategy.rho.ensure(0).map_err(|mut e| {
        e.detail = format!("opening cone: {}", e.detail);
        e
    })?;
    let mut transcript = vec![board];
    for round in 2..=rounds {
        let (apex, tint) = demand_for_round(round);
        let demanded = extend_with_demand(transcript.last().unwrap(), apex, tint);
        let done = strategy.reply(&demanded, round)?;
        assert!(
            coloured_graph_check(&done, &p).is_empty(),
            "the strategy's answer is a coloured graph"
        );
        transcript.push(done);
    }
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_opening_board_is_valid() {
        let p = script_palette(3);
        assert!(coloured_graph_check(&initial_board(&p), &p).is_empty());
        let cones = find_cones(&initial_board(&p));
        assert_eq!(cones.len(), 1);
        assert_eq!(cones[0].tint, 0);
        assert_eq!(cones[0].apex, 2);
    }

    #[test]
    fn the_script_beats_every_line_within_the_red_bound() {
        let mut wins = Vec::new();
        for reds in [2usize, 3] {
            let cap = reds + 2;
            let won = scripted_forall_win_round(reds, cap);
            let round = won.expect("the script wins inside the cap");
            assert!(round <= cap, "{reds} reds: won at round {round}");
            wins.push(round);
        }
        assert!(wins[0] < wins[1], "more reds buy strictly more rounds: {wins:?}");
    }

    #[test]
    fn forced_reds_shadow_the_tints_in_reverse() {
        // Two apexes: the older one (smaller raw tint) must show the
        // larger red index on the shared edge.
        let p = script_palette(2);
        let board = initial_board(&p);
        let demanded = extend_with_demand(&board, 3, 1);
        let mut seen = Vec::new();
        exists_completions(&demanded, &p, &mut |done| {
            seen.push(done.edge(2, 3).unwrap());
            false
        });
        assert!(!seen.is_empty());
        for c in seen {
            let EdgeColour::Red { from, to, .. } = c else {
                panic!("the apex edge must be red, got {c:?}");
            };
            assert!(from > to, "older apex shows the larger index: {from} vs {to}");
        }
    }

    #[test]
    fn the_map_stays_ordered_and_widely_spaced() {
        let mut rho = RhoMap::new(4, 100);
        for (round, tint) in (1..=4).zip(0..4) {
            rho.advance_round();
            rho.ensure(tint).unwrap();
            assert!(rho.check_invariants(), "after round {round}");
            let values: Vec<usize> = (0..=tint).map(|t| rho.get(t).unwrap()).collect();
            for w in values.windows(2) {
                assert!(w[0] - w[1] >= rho.gap_floor());
            }
        }
        // Raw tints up, values strictly down: the reversed order.
        let vs: Vec<usize> = (0..4).map(|t| rho.get(t).unwrap()).collect();
        assert!(vs.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn no_cones_means_no_reds() {
        let mut g = ColouredGraph::new(4);
        for v in 0..4 {
            for u in 0..v {
                if (u, v) != (2, 3) {
                    g.set_edge(u, v, EdgeColour::White);
                }
            }
        }
        let mut strategy = ExistsConeStrategy::new(4, 100);
        strategy.rho.advance_round();
        let c = strategy.colour_for(&g, 2, 3).unwrap();
        assert!(!matches!(c, EdgeColour::Red { .. }));
        assert!(!c.is_green());
    }

    #[test]
    fn ample_reds_let_the_strategy_survive_the_whole_script() {
        let transcript = run_rainbow_scripted(30, 4, 4).expect("survives with room to spare");
        assert_eq!(transcript.len(), 4);
        let last = transcript.last().unwrap();
        assert_eq!(last.node_count(), 6);
        // Each apex pair carries a map red, order preserving.
        for apex in 3..6 {
            for older in 2..apex {
                let Some(EdgeColour::Red { from, to, .. }) = last.edge(older, apex) else {
                    panic!("apex pair ({older}, {apex}) must be red");
                };
                assert!(from > to);
            }
        }
    }

    #[test]
    fn a_truncated_red_space_forces_resignation() {
        let err = run_rainbow_scripted(3, 5, 5).expect_err("three reds cannot span the gaps");
        assert!(err.round >= 1);
        assert!(!err.detail.is_empty());
        let shown = err.to_string();
        assert!(shown.contains("tint"));
    }
}
