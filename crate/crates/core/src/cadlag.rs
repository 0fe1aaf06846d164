//! Real-valued càdlàg step functions on `[0,1]` and piecewise-linear time changes.

use serde::{Deserialize, Serialize};

use crate::error::{check_delta, domain, validation, Result};
use crate::partition;

/// A càdlàg piecewise-constant function on `[0,1]`, kept in canonical form.
///
/// `values[0]` holds on `[0, b_1)`, `values[k]` on `[b_k, b_{k+1})`, and the
/// last value on `[b_K, 1]`. Adjacent values always differ, so every
/// breakpoint is a genuine jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep", into = "RawStep")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawStep {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = crate::Error;
    fn try_from(raw: RawStep) -> Result<Self> {
        StepFunction::new(raw.breakpoints, raw.values)
    }
}

impl From<StepFunction> for RawStep {
    fn from(x: StepFunction) -> Self {
        RawStep {
            breakpoints: x.breakpoints,
            values: x.values,
        }
    }
}

impl StepFunction {
    /// Validates and canonicalises. Adjacent equal values are merged and
    /// their breakpoint dropped.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(validation(format!(
                "expected {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(validation(format!("non-finite value {v}")));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b <= 1.0) {
                return Err(validation(format!(
                    "breakpoints must be strictly increasing inside (0,1]; got {b} after {prev}"
                )));
            }
            prev = b;
        }
        Ok(Self::canonical(breakpoints, values))
    }

    /// Drops breakpoints between equal values. Inputs are assumed sorted.
    pub(crate) fn canonical(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut vals = Vec::with_capacity(values.len());
        vals.push(values[0]);
        for (b, v) in breakpoints.into_iter().zip(values.into_iter().skip(1)) {
            if v != *vals.last().unwrap() {
                bps.push(b);
                vals.push(v);
            }
        }
        StepFunction {
            breakpoints: bps,
            values: vals,
        }
    }

    pub fn constant(c: f64) -> Self {
        StepFunction {
            breakpoints: Vec::new(),
            values: vec![c],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `height · 1_{[at, 1]}`.
    pub fn indicator(at: f64, height: f64) -> Result<Self> {
        Self::new(vec![at], vec![0.0, height])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jump_count(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_constant(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Jump sizes `x(b) - x(b-)`, one per breakpoint.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .zip(self.values.windows(2))
            .map(|(&b, w)| (b, w[1] - w[0]))
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(domain(format!("s = {s} outside [0,1]")));
        }
        Ok(self.values[partition::piece_at(&self.breakpoints, s)])
    }

    pub fn left_limit(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(domain(format!("left limit needs s in (0,1], got {s}")));
        }
        Ok(self.values[partition::piece_before(&self.breakpoints, s)])
    }

    /// Value at `s = 1`.
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute jump, 0 for constants.
    pub fn max_jump(&self) -> f64 {
        self.jumps().fold(0.0f64, |m, (_, j)| m.max(j.abs()))
    }

    /// `w(x, T)`: max minus min of the values taken on `T`.
    pub fn oscillation(&self, t: &Interval) -> f64 {
        match partition::pieces_meeting(&self.breakpoints, t) {
            Some((a, b)) => self.range_oscillation(a, b),
            None => 0.0,
        }
    }

    pub(crate) fn range_oscillation(&self, a: usize, b: usize) -> f64 {
        let s = &self.values[a..=b];
        let (mn, mx) = s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), &v| {
                (mn.min(v), mx.max(v))
            });
        mx - mn
    }

    /// `w′(x, δ)`: infimum over δ-sparse partitions of the largest oscillation
    /// on a cell `[t_{i-1}, t_i)`.
    pub fn modulus_wprime(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        if self.is_constant() {
            return Ok(0.0);
        }
        let table = RangeTable::new(&self.values);
        let upper = table.osc(0, self.values.len() - 1);
        Ok(partition::min_sparse_threshold(
            &self.breakpoints,
            delta,
            upper,
            |a, b| table.osc(a, b),
        ))
    }

    /// Whether `w′(x, δ) ≥ eps`, without computing the value.
    pub fn wprime_at_least(&self, delta: f64, eps: f64) -> Result<bool> {
        check_delta(delta)?;
        let table = RangeTable::new(&self.values);
        Ok(!partition::sparse_partition_exists(
            &self.breakpoints,
            delta,
            |a, b| table.osc(a, b) < eps,
        ))
    }

    /// `w″(x, δ) = sup_{s_1 ≤ s ≤ s_2, s_2 - s_1 ≤ δ} |x(s)-x(s_1)| ∧ |x(s_2)-x(s)|`.
    pub fn modulus_wsecond(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let v = &self.values;
        Ok(partition::three_point_sup(
            &self.breakpoints,
            delta,
            |a, b| (v[a] - v[b]).abs(),
        ))
    }

    /// Ordinary modulus of continuity `sup_{|s_1 - s_2| ≤ δ} |x(s_1) - x(s_2)|`.
    pub fn continuity_modulus(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(domain(format!("delta must be positive, got {delta}")));
        }
        let v = &self.values;
        Ok(partition::two_point_sup(
            &self.breakpoints,
            delta,
            |a, b| (v[a] - v[b]).abs(),
        ))
    }

    /// `x ∘ λ`: breakpoints pulled back through `λ`, values unchanged.
    pub fn compose(&self, lam: &TimeChange) -> StepFunction {
        StepFunction {
            breakpoints: self.breakpoints.iter().map(|&b| lam.inverse(b)).collect(),
            values: self.values.clone(),
        }
    }

    /// Pointwise combination on the merged breakpoint set.
    pub fn combine(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> StepFunction {
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let mut bps = Vec::with_capacity(a.len() + b.len());
        let mut vals = Vec::with_capacity(a.len() + b.len() + 1);
        let (mut i, mut j) = (0, 0);
        vals.push(f(self.values[0], other.values[0]));
        while i < a.len() || j < b.len() {
            let next_a = a.get(i).copied().unwrap_or(f64::INFINITY);
            let next_b = b.get(j).copied().unwrap_or(f64::INFINITY);
            let at = next_a.min(next_b);
            if next_a == at {
                i += 1;
            }
            if next_b == at {
                j += 1;
            }
            bps.push(at);
            vals.push(f(self.values[i], other.values[j]));
        }
        Self::canonical(bps, vals)
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |u, v| u + v)
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |u, v| u - v)
    }

    /// `‖x - y‖` without materialising the difference.
    pub fn sup_distance(&self, other: &StepFunction) -> f64 {
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let (mut i, mut j) = (0, 0);
        let mut best = (self.values[0] - other.values[0]).abs();
        while i < a.len() || j < b.len() {
            let next_a = a.get(i).copied().unwrap_or(f64::INFINITY);
            let next_b = b.get(j).copied().unwrap_or(f64::INFINITY);
            let at = next_a.min(next_b);
            if next_a == at {
                i += 1;
            }
            if next_b == at {
                j += 1;
            }
            best = best.max((self.values[i] - other.values[j]).abs());
        }
        best
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        if c == 0.0 {
            return Self::zero();
        }
        Self::canonical(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v * c).collect(),
        )
    }

    /// Adds `height · 1_{[at,1]}`.
    pub fn add_jump(&self, at: f64, height: f64) -> Result<StepFunction> {
        Ok(self.add(&StepFunction::indicator(at, height)?))
    }
}

/// Sparse table answering range max/min in O(1).
pub(crate) struct RangeTable {
    max: Vec<Vec<f64>>,
    min: Vec<Vec<f64>>,
}

impl RangeTable {
    pub(crate) fn new(v: &[f64]) -> Self {
        let mut max = vec![v.to_vec()];
        let mut min = vec![v.to_vec()];
        let mut width = 1;
        while 2 * width <= v.len() {
            let (pm, pn) = (max.last().unwrap(), min.last().unwrap());
            let n = v.len() + 1 - 2 * width;
            let nm: Vec<f64> = (0..n).map(|i| pm[i].max(pm[i + width])).collect();
            let nn: Vec<f64> = (0..n).map(|i| pn[i].min(pn[i + width])).collect();
            max.push(nm);
            min.push(nn);
            width *= 2;
        }
        RangeTable { max, min }
    }

    /// `max - min` over `v[a..=b]`.
    pub(crate) fn osc(&self, a: usize, b: usize) -> f64 {
        let len = b - a + 1;
        let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let w = 1 << lvl;
        let mx = self.max[lvl][a].max(self.max[lvl][b + 1 - w]);
        let mn = self.min[lvl][a].min(self.min[lvl][b + 1 - w]);
        mx - mn
    }
}

/// A subset `[lo, hi]` or `[lo, hi)` of `[0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, closed: bool) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(validation(format!(
                "interval [{lo}, {hi}] not inside [0,1]"
            )));
        }
        Ok(Interval { lo, hi, closed })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true)
    }

    pub fn half_open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false)
    }

    pub fn unit() -> Self {
        Interval {
            lo: 0.0,
            hi: 1.0,
            closed: true,
        }
    }
}

/// Strictly increasing piecewise-linear bijection of `[0,1]`, given by its knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeChange", into = "RawTimeChange")]
pub struct TimeChange {
    knots: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawTimeChange {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<RawTimeChange> for TimeChange {
    type Error = crate::Error;
    fn try_from(raw: RawTimeChange) -> Result<Self> {
        TimeChange::new(raw.knots)
    }
}

impl From<TimeChange> for RawTimeChange {
    fn from(t: TimeChange) -> Self {
        RawTimeChange { knots: t.knots }
    }
}

impl TimeChange {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || knots[0] != (0.0, 0.0) || *knots.last().unwrap() != (1.0, 1.0) {
            return Err(validation(
                "time change knots must start at (0,0) and end at (1,1)",
            ));
        }
        for w in knots.windows(2) {
            let (s0, v0) = w[0];
            let (s1, v1) = w[1];
            let slope = (v1 - v0) / (s1 - s0);
            if !(s1 > s0 && v1 > v0 && slope.is_finite() && slope > 0.0) {
                return Err(validation(format!(
                    "segment ({s0},{v0})-({s1},{v1}) does not have a finite positive slope"
                )));
            }
        }
        Ok(TimeChange { knots })
    }

    pub fn identity() -> Self {
        TimeChange {
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    /// Interpolant through interior pairs `(s_i, λ(s_i))`, endpoints added.
    pub fn through(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut knots = Vec::with_capacity(pairs.len() + 2);
        knots.push((0.0, 0.0));
        for &p in pairs {
            if p != (1.0, 1.0) {
                knots.push(p);
            }
        }
        knots.push((1.0, 1.0));
        Self::new(knots)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, s: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&(a, _)| a < s);
        if i < k.len() && k[i].0 == s {
            return k[i].1;
        }
        let (s0, v0) = k[i - 1];
        let (s1, v1) = k[i];
        interpolate(s0, v0, s1, v1, s)
    }

    /// `λ^{-1}(v)`. Knot values map back to their knot positions exactly.
    pub fn inverse(&self, v: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&(_, b)| b < v);
        if i < k.len() && k[i].1 == v {
            return k[i].0;
        }
        let (s0, v0) = k[i - 1];
        let (s1, v1) = k[i];
        interpolate(v0, s0, v1, s1, v)
    }

    /// `‖λ - e‖`; the deviation of a piecewise-linear map peaks at a knot.
    pub fn devnorm(&self) -> f64 {
        self.knots
            .iter()
            .fold(0.0f64, |m, &(s, v)| m.max((v - s).abs()))
    }

    /// `‖λ‖⁰ = sup_{s<s'} |log((λ(s') - λ(s)) / (s' - s))|`. A chord slope is
    /// a convex combination of segment slopes, so the sup is the largest
    /// per-segment `|log slope|`.
    pub fn lognorm(&self) -> f64 {
        self.knots.windows(2).fold(0.0f64, |m, w| {
            m.max(segment_log_slope(w[0].0, w[0].1, w[1].0, w[1].1))
        })
    }

    pub fn inverted(&self) -> TimeChange {
        TimeChange {
            knots: self.knots.iter().map(|&(s, v)| (v, s)).collect(),
        }
    }
}

/// Linear interpolation through `(x0,y0)`, `(x1,y1)` evaluated at `x`.
#[inline]
pub(crate) fn interpolate(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    y0 + (x - x0) * (y1 - y0) / (x1 - x0)
}

#[inline]
pub(crate) fn segment_log_slope(s0: f64, v0: f64, s1: f64, v1: f64) -> f64 {
    ((v1 - v0) / (s1 - s0)).ln().abs()
}
