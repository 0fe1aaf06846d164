//! Piece-level algorithms shared by the scalar and the nested moduli.
//!
//! A piecewise-constant càdlàg object on `[0,1]` is described here only by its
//! breakpoints `b_1 < … < b_K` in `(0,1]`. Piece `k` is `[b_k, b_{k+1})` with
//! `b_0 = 0`, and the last piece is closed at 1. When `b_K = 1` the last piece
//! is the single point `{1}`. Every routine receives the piece-to-piece
//! quantity it needs (oscillation of a range, distance between two pieces)
//! as a closure, so the same code serves `w′`/`w″` and `w_D′`/`w_D″`.

use crate::cadlag::Interval;

/// Start of piece `k`.
#[inline]
pub(crate) fn piece_start(bps: &[f64], k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        bps[k - 1]
    }
}

/// Right end of piece `k` (1 for the last piece).
#[inline]
pub(crate) fn piece_end(bps: &[f64], k: usize) -> f64 {
    if k < bps.len() {
        bps[k]
    } else {
        1.0
    }
}

/// Index of the piece whose half-open interval contains `s` (the last piece at `s = 1`).
#[inline]
pub(crate) fn piece_at(bps: &[f64], s: f64) -> usize {
    bps.partition_point(|&b| b <= s)
}

/// Index of the piece that ends at or after `s` from the left, i.e. the piece
/// providing the left limit at `s`.
#[inline]
pub(crate) fn piece_before(bps: &[f64], s: f64) -> usize {
    bps.partition_point(|&b| b < s)
}

/// Inclusive range of pieces meeting `t`, or `None` when `t` is empty.
pub(crate) fn pieces_meeting(bps: &[f64], t: &Interval) -> Option<(usize, usize)> {
    let first = piece_at(bps, t.lo);
    if t.closed {
        Some((first, piece_at(bps, t.hi)))
    } else if t.hi > t.lo {
        Some((first, piece_before(bps, t.hi)))
    } else {
        None
    }
}

/// Last piece with positive length.
#[inline]
fn last_proper_piece(bps: &[f64]) -> usize {
    match bps.last() {
        Some(&b) if b >= 1.0 => bps.len() - 1,
        _ => bps.len(),
    }
}

#[derive(Clone, Copy, Debug)]
enum Boundary {
    Start,
    /// Some point strictly inside piece `k`; position is free in `(lo, hi)`.
    Interior {
        lo: f64,
        hi: f64,
    },
    /// Exactly at a breakpoint.
    Break {
        at: f64,
    },
    End,
}

/// Decides whether a δ-sparse partition `0 = t_0 < … < t_v = 1` exists whose
/// half-open cells `[t_{i-1}, t_i)` each cover a piece range accepted by `ok`.
///
/// `ok(first, last)` must be monotone: accepting a range implies accepting
/// every sub-range. Boundaries are normalised to breakpoints or to the
/// interior of a piece (at most one per piece); interior positions are placed
/// as early as the gap constraint allows, which is optimal for every later
/// boundary.
pub(crate) fn sparse_partition_exists(
    bps: &[f64],
    delta: f64,
    mut ok: impl FnMut(usize, usize) -> bool,
) -> bool {
    let last = last_proper_piece(bps);
    // (boundary, first piece of the cell starting here, last piece of the cell ending here)
    let mut types: Vec<(Boundary, usize, usize)> = Vec::with_capacity(2 * last + 3);
    types.push((Boundary::Start, 0, 0));
    for k in 0..=last {
        let lo = piece_start(bps, k);
        let hi = piece_end(bps, k);
        types.push((Boundary::Interior { lo, hi }, k, k));
        if k < last {
            types.push((Boundary::Break { at: bps[k] }, k + 1, k));
        }
    }
    types.push((Boundary::End, last, last));

    let mut earliest = vec![f64::INFINITY; types.len()];
    earliest[0] = 0.0;
    let mut window: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut lo = 0usize;
    for w in 1..types.len() {
        let u = w - 1;
        while let Some(&back) = window.back() {
            if earliest[back] >= earliest[u] {
                window.pop_back();
            } else {
                break;
            }
        }
        window.push_back(u);

        let end_piece = types[w].2;
        while lo < w && !ok(types[lo].1, end_piece) {
            lo += 1;
        }
        while let Some(&front) = window.front() {
            if front < lo {
                window.pop_front();
            } else {
                break;
            }
        }
        let from = window
            .front()
            .map(|&f| earliest[f])
            .unwrap_or(f64::INFINITY);
        // gaps are tested as `t_i - t_{i-1} > delta` on the rounded difference
        let clears = |at: f64| at - from > delta;

        earliest[w] = match types[w].0 {
            Boundary::Start => unreachable!(),
            Boundary::Break { at } => {
                if clears(at) {
                    at
                } else {
                    f64::INFINITY
                }
            }
            Boundary::Interior { lo: a, hi: b } => {
                let pos = (from + delta).max(a);
                if pos < b {
                    pos
                } else {
                    f64::INFINITY
                }
            }
            Boundary::End => return clears(1.0),
        };
    }
    unreachable!("boundary list always ends with End")
}

/// Smallest `θ ∈ [0, upper]` such that a δ-sparse partition exists with every
/// cell oscillation `≤ θ`. `upper` must itself be feasible (the oscillation of
/// the whole range always is). Bisection runs over the ordered bit patterns of
/// non-negative doubles, so the returned value is one of the oscillations
/// produced by `osc`.
pub(crate) fn min_sparse_threshold(
    bps: &[f64],
    delta: f64,
    upper: f64,
    mut osc: impl FnMut(usize, usize) -> f64,
) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let mut lo = 0u64;
    let mut hi = upper.to_bits();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let theta = f64::from_bits(mid);
        if sparse_partition_exists(bps, delta, |a, b| osc(a, b) <= theta) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    f64::from_bits(lo)
}

/// `sup min(dist(j,i), dist(j,k))` over pieces `i < j < k` that admit points
/// `s_1 ≤ s ≤ s_2` with `s_2 - s_1 ≤ delta`, i.e. `b_k - b_{i+1} < delta`.
///
/// Triples with `i = j` or `j = k` contribute zero and are skipped. Runs in
/// `O(K·W)` distance evaluations, `W` being the number of pieces per window.
pub(crate) fn three_point_sup(
    bps: &[f64],
    delta: f64,
    mut dist: impl FnMut(usize, usize) -> f64,
) -> f64 {
    let npieces = bps.len() + 1;
    let mut best = 0.0f64;
    let mut right_max: Vec<f64> = Vec::new();
    for j in 1..npieces.saturating_sub(1) {
        // i = j-1 gives the loosest constraint: b_k < b_j + delta.
        right_max.clear();
        let mut running = 0.0f64;
        let mut k = j + 1;
        while k < npieces && piece_start(bps, k) - piece_start(bps, j) < delta {
            running = running.max(dist(j, k));
            right_max.push(running);
            k += 1;
        }
        if right_max.is_empty() || running <= best {
            continue;
        }
        let mut kmax = right_max.len();
        for i in (0..j).rev() {
            let edge = piece_start(bps, i + 1);
            while kmax > 0 && !(piece_start(bps, j + kmax) - edge < delta) {
                kmax -= 1;
            }
            if kmax == 0 {
                break;
            }
            let cand = dist(j, i).min(right_max[kmax - 1]);
            if cand > best {
                best = cand;
            }
        }
    }
    best
}

/// Whether some admissible triple `i < j < k` (as in [`three_point_sup`]) has
/// both `far(j,i)` and `far(j,k)`. For each `j` only the nearest `k` with
/// `far(j,k)` matters, since it leaves the widest room for `i`.
pub(crate) fn three_point_exists(
    bps: &[f64],
    delta: f64,
    mut far: impl FnMut(usize, usize) -> bool,
) -> bool {
    let npieces = bps.len() + 1;
    for j in 1..npieces.saturating_sub(1) {
        let mut k = j + 1;
        let nearest = loop {
            if k >= npieces || !(piece_start(bps, k) - piece_start(bps, j) < delta) {
                break None;
            }
            if far(j, k) {
                break Some(k);
            }
            k += 1;
        };
        let Some(k) = nearest else { continue };
        let edge = piece_start(bps, k);
        for i in (0..j).rev() {
            if !(edge - piece_start(bps, i + 1) < delta) {
                break;
            }
            if far(j, i) {
                return true;
            }
        }
    }
    false
}

/// `sup dist(i,k)` over pieces `i < k` containing points at distance `≤ delta`,
/// i.e. `b_k - b_{i+1} < delta`. This is the ordinary modulus of continuity.
pub(crate) fn two_point_sup(
    bps: &[f64],
    delta: f64,
    mut dist: impl FnMut(usize, usize) -> f64,
) -> f64 {
    let npieces = bps.len() + 1;
    let mut best = 0.0f64;
    for i in 0..npieces {
        let edge = piece_end(bps, i);
        let mut k = i + 1;
        while k < npieces && piece_start(bps, k) - edge < delta {
            best = best.max(dist(i, k));
            k += 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range_osc(vals: &[f64]) -> impl Fn(usize, usize) -> f64 + '_ {
        move |a, b| {
            let s = &vals[a..=b];
            let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mn = s.iter().cloned().fold(f64::INFINITY, f64::min);
            mx - mn
        }
    }

    #[test]
    fn two_close_jumps_cannot_both_be_separated() {
        let bps = [0.3, 0.31];
        let vals = [0.0, 1.0, 2.0];
        let osc = range_osc(&vals);
        assert!(!sparse_partition_exists(&bps, 0.05, |a, b| osc(a, b) <= 0.0));
        assert!(sparse_partition_exists(&bps, 0.05, |a, b| osc(a, b) <= 1.0));
        assert_eq!(min_sparse_threshold(&bps, 0.05, 2.0, &osc), 1.0);
        assert_eq!(min_sparse_threshold(&bps, 0.005, 2.0, &osc), 0.0);
    }

    #[test]
    fn interior_boundary_needs_exact_placement() {
        // Jumps at 0.1 and 0.9 with delta = 0.3: neither breakpoint is usable,
        // one interior boundary in (0.3, 0.7) splits the two jumps.
        let bps = [0.1, 0.9];
        let vals = [0.0, 1.0, 2.0];
        let osc = range_osc(&vals);
        assert_eq!(min_sparse_threshold(&bps, 0.3, 2.0, &osc), 1.0);
        // delta = 0.45 still leaves room for one boundary in (0.45, 0.55);
        // delta = 0.5 does not.
        assert_eq!(min_sparse_threshold(&bps, 0.45, 2.0, &osc), 1.0);
        assert_eq!(min_sparse_threshold(&bps, 0.5, 2.0, &osc), 2.0);
    }

    #[test]
    fn point_piece_at_one_is_ignored_by_partitions() {
        let bps = [1.0];
        let vals = [0.0, 5.0];
        let osc = range_osc(&vals);
        assert_eq!(min_sparse_threshold(&bps, 0.5, 5.0, &osc), 0.0);
    }

    #[test]
    fn three_point_window() {
        let bps = [0.3, 0.31];
        let d = |a: usize, b: usize| ([0.0f64, 1.0, 2.0][a] - [0.0f64, 1.0, 2.0][b]).abs();
        assert_eq!(three_point_sup(&bps, 0.05, d), 1.0);
        assert_eq!(three_point_sup(&bps, 0.01, d), 0.0);
        assert_eq!(three_point_sup(&[0.5], 0.3, d), 0.0);
    }

    #[test]
    fn three_point_predicate_matches_value() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let k = rng.random_range(0..8);
            let mut bps: Vec<f64> = (0..k)
                .map(|_| rng.random_range(1..=32) as f64 / 32.0)
                .collect();
            bps.sort_by(f64::total_cmp);
            bps.dedup();
            let vals: Vec<f64> = (0..=bps.len())
                .map(|_| rng.random_range(-4..=4) as f64)
                .collect();
            let d = |a: usize, b: usize| (vals[a] - vals[b]).abs();
            for delta in [0.05, 0.1, 0.3] {
                let sup = three_point_sup(&bps, delta, d);
                for eps in [0.5, 1.0, 2.0, 3.0] {
                    assert_eq!(
                        three_point_exists(&bps, delta, |a, b| d(a, b) >= eps),
                        sup >= eps
                    );
                }
            }
        }
    }

    #[test]
    fn piece_lookup_conventions() {
        let bps = [0.5, 1.0];
        assert_eq!(piece_at(&bps, 0.4), 0);
        assert_eq!(piece_at(&bps, 0.5), 1);
        assert_eq!(piece_at(&bps, 1.0), 2);
        assert_eq!(piece_before(&bps, 0.5), 0);
        assert_eq!(piece_before(&bps, 1.0), 1);
    }
}
