//! Order-preserving jump matchings and the minimax dynamic program over them.
//!
//! The engine only sees jump positions `a` (first argument) and `b` (second
//! argument) plus a cell cost `cell(p, q)`: the discrepancy between piece `p`
//! of the first object and piece `q` of the second. A matching pins
//! `λ(a_i) = b_j` for each pair and interpolates linearly in between, so the
//! unmatched jumps of the second object land at `λ^{-1}(b)` and the cells
//! visited between two consecutive pinned pairs depend on those two pairs
//! only. The total cost is therefore a max over segments, which is what makes
//! the DP over pinned pairs exact.

use serde::{Deserialize, Serialize};

use crate::cadlag::{interpolate, segment_log_slope};

/// Time-change penalty combined with the sup-discrepancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// `‖λ - e‖`, giving `d_J1` (and `d_D` one level up).
    #[serde(rename = "j1")]
    UniformDev,
    /// `‖λ‖⁰`, giving `d_J1^0` (and `d_D^0`).
    #[serde(rename = "j1_0")]
    LogSlope,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::UniformDev => "j1",
            Objective::LogSlope => "j1_0",
        }
    }
}

/// Pairs `(jump index in x, jump index in y)`, strictly increasing in both.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Checks order preservation; positions are not consulted.
    pub fn new(pairs: Vec<(usize, usize)>) -> Option<Self> {
        let ok = pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
        ok.then_some(Matching { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The same matching seen from the other side.
    pub fn inverted(&self) -> Self {
        Matching {
            pairs: self.pairs.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    /// Knots `(a_i, b_j)` of the induced time change, endpoints excluded.
    pub fn knots(&self, a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
        self.pairs.iter().map(|&(i, j)| (a[i], b[j])).collect()
    }
}

/// A pair can be pinned unless exactly one side sits at 1 (λ(1) = 1).
#[inline]
pub(crate) fn pair_feasible(a: f64, b: f64) -> bool {
    (a == 1.0) == (b == 1.0)
}

/// All order-preserving matchings between `p` and `q` jumps whose pairs are feasible.
pub(crate) fn all_matchings(a: &[f64], b: &[f64]) -> Vec<Matching> {
    fn rec(
        a: &[f64],
        b: &[f64],
        i0: usize,
        j0: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Matching>,
    ) {
        out.push(Matching { pairs: cur.clone() });
        for i in i0..a.len() {
            for j in j0..b.len() {
                if pair_feasible(a[i], b[j]) {
                    cur.push((i, j));
                    rec(a, b, i + 1, j + 1, cur, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(a, b, 0, 0, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Start,
    Pair(usize, usize),
    End,
}

/// Outcome of the matching DP.
#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub value: f64,
    pub matching: Matching,
    /// False when the predecessor window was restricted.
    pub exact: bool,
}

/// Above this many candidate pairs the DP only links pairs that skip at most
/// `WINDOW` jumps on either side (plus links from the start and to the end).
const FULL_NODE_LIMIT: usize = 600;
const WINDOW: usize = 4;

pub(crate) struct Engine<'a, C: FnMut(usize, usize) -> f64> {
    a: &'a [f64],
    b: &'a [f64],
    objective: Objective,
    cell: C,
}

impl<'a, C: FnMut(usize, usize) -> f64> Engine<'a, C> {
    pub(crate) fn new(a: &'a [f64], b: &'a [f64], objective: Objective, cell: C) -> Self {
        Engine {
            a,
            b,
            objective,
            cell,
        }
    }

    fn knot(&self, n: Node) -> (f64, f64) {
        match n {
            Node::Start => (0.0, 0.0),
            Node::Pair(i, j) => (self.a[i], self.b[j]),
            Node::End => (1.0, 1.0),
        }
    }

    /// Jump indices (x, y) of the first unmatched jumps after `n`.
    fn after(&self, n: Node) -> (usize, usize) {
        match n {
            Node::Start => (0, 0),
            Node::Pair(i, j) => (i + 1, j + 1),
            Node::End => (self.a.len(), self.b.len()),
        }
    }

    /// Jump indices bounding the segment that ends at `n`.
    fn before(&self, n: Node) -> (usize, usize) {
        match n {
            Node::Start => (0, 0),
            Node::Pair(i, j) => (i, j),
            Node::End => (self.a.len(), self.b.len()),
        }
    }

    fn node_cost(&self, n: Node) -> f64 {
        match (self.objective, n) {
            (Objective::UniformDev, Node::Pair(i, j)) => (self.b[j] - self.a[i]).abs(),
            _ => 0.0,
        }
    }

    /// Cost contributed strictly between `u` and `w`: the slope penalty of the
    /// linear piece and every cell visited. Stops early once `cutoff` is reached.
    fn edge_cost(&mut self, u: Node, w: Node, cutoff: f64) -> f64 {
        let (s0, v0) = self.knot(u);
        let (s1, v1) = self.knot(w);
        let mut cost = 0.0f64;
        if self.objective == Objective::LogSlope && s1 > s0 {
            cost = segment_log_slope(s0, v0, s1, v1);
            if cost >= cutoff {
                return cost;
            }
        }
        let (mut k, mut l) = self.after(u);
        let (k1, l1) = self.before(w);
        cost = cost.max((self.cell)(k, l));
        while cost < cutoff && (k < k1 || l < l1) {
            let pa = if k < k1 { self.a[k] } else { f64::INFINITY };
            let pb = if l < l1 {
                let bl = self.b[l];
                if bl == v1 {
                    s1
                } else {
                    interpolate(v0, s0, v1, s1, bl)
                }
            } else {
                f64::INFINITY
            };
            let at = pa.min(pb);
            if pa == at {
                k += 1;
            }
            if pb == at {
                l += 1;
            }
            cost = cost.max((self.cell)(k, l));
        }
        cost
    }

    /// Lower bound on any matching that pins `(i, j)`.
    fn pair_bound(&mut self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.a[i], self.b[j]);
        let mut lb = self.node_cost(Node::Pair(i, j));
        if self.objective == Objective::LogSlope {
            lb = lb.max((b / a).ln().abs());
            if a < 1.0 {
                lb = lb.max(((1.0 - b) / (1.0 - a)).ln().abs());
            }
        }
        lb.max((self.cell)(i, j)).max((self.cell)(i + 1, j + 1))
    }

    /// Cost of a given matching, computed segment by segment.
    #[cfg(test)]
    pub(crate) fn evaluate(&mut self, m: &Matching) -> f64 {
        let mut prev = Node::Start;
        let mut cost = 0.0f64;
        for &(i, j) in m.pairs() {
            let n = Node::Pair(i, j);
            cost = cost
                .max(self.node_cost(n))
                .max(self.edge_cost(prev, n, f64::INFINITY));
            prev = n;
        }
        cost.max(self.edge_cost(prev, Node::End, f64::INFINITY))
    }

    /// Minimum cost over order-preserving matchings. Pairs whose lower bound
    /// already reaches `cap` (or the empty matching's cost) are never pinned,
    /// so when nothing beats `cap` the empty matching is returned.
    pub(crate) fn solve(&mut self, cap: f64) -> Solution {
        let identity = self.edge_cost(Node::Start, Node::End, f64::INFINITY);
        let ub = identity.min(cap);
        let mut nodes: Vec<(usize, usize)> = Vec::new();
        for i in 0..self.a.len() {
            for j in 0..self.b.len() {
                if pair_feasible(self.a[i], self.b[j]) && self.pair_bound(i, j) < ub {
                    nodes.push((i, j));
                }
            }
        }
        let exact = nodes.len() <= FULL_NODE_LIMIT;
        let mut best = vec![f64::INFINITY; nodes.len()];
        let mut pred: Vec<Option<usize>> = vec![None; nodes.len()];
        // nodes are sorted by (i, j); first index with row >= r
        let row_start = |r: usize, nodes: &[(usize, usize)]| nodes.partition_point(|&(i, _)| i < r);
        for n in 0..nodes.len() {
            let (i, j) = nodes[n];
            let here = Node::Pair(i, j);
            let base = self.node_cost(here);
            let mut b = base.max(self.edge_cost(Node::Start, here, ub));
            let mut from = None;
            let lo = if exact {
                0
            } else {
                row_start(i.saturating_sub(WINDOW), &nodes)
            };
            let hi = row_start(i, &nodes);
            for m in lo..hi {
                let (pi, pj) = nodes[m];
                if pj >= j || best[m] >= b || (!exact && j - pj > WINDOW) {
                    continue;
                }
                let c = best[m].max(self.edge_cost(Node::Pair(pi, pj), here, b));
                if c < b {
                    b = c;
                    from = Some(m);
                }
            }
            best[n] = b;
            pred[n] = from;
        }
        let mut value = identity;
        let mut last = None;
        for n in 0..nodes.len() {
            if best[n] >= value {
                continue;
            }
            let (i, j) = nodes[n];
            let c = best[n].max(self.edge_cost(Node::Pair(i, j), Node::End, value));
            if c < value {
                value = c;
                last = Some(n);
            }
        }
        let mut pairs = Vec::new();
        let mut cur = last;
        while let Some(n) = cur {
            pairs.push(nodes[n]);
            cur = pred[n];
        }
        pairs.reverse();
        Solution {
            value,
            matching: Matching { pairs },
            exact,
        }
    }
}
