//! Paths of step functions: piecewise-constant càdlàg maps `[0,1] → D`.
//!
//! A [`NestedPath`] is constant in `t` on `[t_{i-1}, t_i)` with value
//! `segments[i]`, which is itself a [`StepFunction`] in `s`. Suprema over `t`
//! therefore reduce to maxima over t-pieces, and every quantity that compares
//! two times goes through the inner distance `d_J1^0`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cadlag::{Interval, StepFunction, TimeChange};
use crate::error::{check_delta, domain, validation, Error, Result};
use crate::matching::{all_matchings, Engine, Objective};
use crate::metric::{self, timechange_penalty, DistanceResult};
use crate::partition;

/// A càdlàg map `t ↦ x(t) ∈ D`, piecewise constant in `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNested", into = "RawNested")]
pub struct NestedPath {
    t_breakpoints: Vec<f64>,
    segments: Vec<StepFunction>,
}

#[derive(Serialize, Deserialize)]
struct RawNested {
    t_breakpoints: Vec<f64>,
    segments: Vec<StepFunction>,
}

impl TryFrom<RawNested> for NestedPath {
    type Error = Error;
    fn try_from(raw: RawNested) -> Result<Self> {
        NestedPath::new(raw.t_breakpoints, raw.segments)
    }
}

impl From<NestedPath> for RawNested {
    fn from(x: NestedPath) -> Self {
        RawNested {
            t_breakpoints: x.t_breakpoints,
            segments: x.segments,
        }
    }
}

/// A partition `0 = t_0 < t_1 < … < t_v = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;
    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 || *points.last().unwrap() != 1.0 {
            return Err(validation("grid must start at 0 and end at 1"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(validation("grid points must be strictly increasing"));
        }
        Ok(Grid { points })
    }

    /// `{0, 1/k, …, 1}`.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(validation("uniform grid needs at least one cell"));
        }
        Grid::new((0..=k).map(|i| i as f64 / k as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest gap between consecutive points.
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Piece index pairs of two breakpoint sequences over their common refinement.
fn refined_pieces(a: &[f64], b: &[f64]) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut out = vec![(0, 0)];
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
        out.push((i, j));
    }
    out
}

fn merged_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = a.iter().chain(b).copied().collect();
    m.sort_by(f64::total_cmp);
    m.dedup();
    m
}

/// Memoised `d_J1^0` between the segments of one path.
pub(crate) struct SelfDistances<'a> {
    segs: &'a [StepFunction],
    cache: HashMap<(usize, usize), f64>,
}

impl<'a> SelfDistances<'a> {
    pub(crate) fn new(x: &'a NestedPath) -> Self {
        SelfDistances {
            segs: &x.segments,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let key = (i.min(j), i.max(j));
        let segs = self.segs;
        *self
            .cache
            .entry(key)
            .or_insert_with(|| metric::d_j1_0(&segs[key.0], &segs[key.1]).value)
    }
}

/// Memoised `max_{a ≤ p < q ≤ b} d(p, q)` for the exact partition modulus.
struct RangeDiameter<'a, 'b> {
    dist: &'b mut SelfDistances<'a>,
    cache: HashMap<(usize, usize), f64>,
}

impl RangeDiameter<'_, '_> {
    fn get(&mut self, a: usize, b: usize) -> f64 {
        if a >= b {
            return 0.0;
        }
        if let Some(&v) = self.cache.get(&(a, b)) {
            return v;
        }
        // iterate over widths to avoid deep recursion on long ranges
        for w in 1..=(b - a) {
            for lo in a..=(b - w) {
                let hi = lo + w;
                if self.cache.contains_key(&(lo, hi)) {
                    continue;
                }
                let inner = if w == 1 {
                    0.0
                } else {
                    self.cache[&(lo, hi - 1)].max(self.cache[&(lo + 1, hi)])
                };
                let v = inner.max(self.dist.get(lo, hi));
                self.cache.insert((lo, hi), v);
            }
        }
        self.cache[&(a, b)]
    }
}

impl NestedPath {
    /// Validates and canonicalises; adjacent equal segments are merged.
    pub fn new(t_breakpoints: Vec<f64>, segments: Vec<StepFunction>) -> Result<Self> {
        if segments.len() != t_breakpoints.len() + 1 {
            return Err(validation(format!(
                "expected {} segments for {} t-breakpoints, got {}",
                t_breakpoints.len() + 1,
                t_breakpoints.len(),
                segments.len()
            )));
        }
        let mut prev = 0.0;
        for &t in &t_breakpoints {
            if !(t > prev && t <= 1.0) {
                return Err(validation(format!(
                    "t-breakpoints must be strictly increasing in (0,1], got {t} after {prev}"
                )));
            }
            prev = t;
        }
        Ok(Self::canonical(t_breakpoints, segments))
    }

    pub(crate) fn canonical(t_breakpoints: Vec<f64>, segments: Vec<StepFunction>) -> Self {
        let mut bps = Vec::with_capacity(t_breakpoints.len());
        let mut segs: Vec<StepFunction> = Vec::with_capacity(segments.len());
        let mut it = segments.into_iter();
        segs.push(it.next().expect("at least one segment"));
        for (t, s) in t_breakpoints.into_iter().zip(it) {
            if segs.last() != Some(&s) {
                bps.push(t);
                segs.push(s);
            }
        }
        NestedPath {
            t_breakpoints: bps,
            segments: segs,
        }
    }

    /// The path constant in `t` equal to `x`.
    pub fn constant(x: StepFunction) -> Self {
        NestedPath {
            t_breakpoints: Vec::new(),
            segments: vec![x],
        }
    }

    pub fn zero() -> Self {
        Self::constant(StepFunction::zero())
    }

    pub fn t_breakpoints(&self) -> &[f64] {
        &self.t_breakpoints
    }

    pub fn segments(&self) -> &[StepFunction] {
        &self.segments
    }

    pub fn switch_count(&self) -> usize {
        self.t_breakpoints.len()
    }

    fn check_t(t: f64) -> Result<()> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(domain(format!("t must lie in [0,1], got {t}")))
        }
    }

    /// `x(t)`.
    pub fn eval_t(&self, t: f64) -> Result<&StepFunction> {
        Self::check_t(t)?;
        Ok(&self.segments[partition::piece_at(&self.t_breakpoints, t)])
    }

    /// `x(t, s)`.
    pub fn eval_ts(&self, t: f64, s: f64) -> Result<f64> {
        self.eval_t(t)?.eval(s)
    }

    /// `x(t-)`.
    pub fn left_limit_t(&self, t: f64) -> Result<&StepFunction> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(domain(format!("left limit needs t in (0,1], got {t}")));
        }
        Ok(&self.segments[partition::piece_before(&self.t_breakpoints, t)])
    }

    /// `‖x‖_D = sup_t ‖x(t)‖`.
    pub fn super_norm(&self) -> f64 {
        self.segments
            .iter()
            .map(StepFunction::sup_norm)
            .fold(0.0, f64::max)
    }

    /// `x ∘ λ` in the outer variable.
    pub fn compose_t(&self, lam: &TimeChange) -> NestedPath {
        NestedPath {
            t_breakpoints: self.t_breakpoints.iter().map(|&b| lam.inverse(b)).collect(),
            segments: self.segments.clone(),
        }
    }

    /// Pointwise combination on the common refinement in `t`.
    pub fn combine(
        &self,
        other: &NestedPath,
        f: impl Fn(&StepFunction, &StepFunction) -> StepFunction,
    ) -> NestedPath {
        let bps = merged_breakpoints(&self.t_breakpoints, &other.t_breakpoints);
        let segs = refined_pieces(&self.t_breakpoints, &other.t_breakpoints)
            .into_iter()
            .map(|(i, j)| f(&self.segments[i], &other.segments[j]))
            .collect();
        Self::canonical(bps, segs)
    }

    pub fn add(&self, other: &NestedPath) -> NestedPath {
        self.combine(other, StepFunction::add)
    }

    pub fn sub(&self, other: &NestedPath) -> NestedPath {
        self.combine(other, StepFunction::sub)
    }

    /// `‖x - y‖_D` without materialising the difference.
    pub fn sup_distance(&self, other: &NestedPath) -> f64 {
        refined_pieces(&self.t_breakpoints, &other.t_breakpoints)
            .into_iter()
            .map(|(i, j)| self.segments[i].sup_distance(&other.segments[j]))
            .fold(0.0, f64::max)
    }

    /// `w_D(x, T) = sup_{t_1, t_2 ∈ T} d_J1^0(x(t_1), x(t_2))`.
    pub fn w_d(&self, t: &Interval) -> f64 {
        let Some((a, b)) = partition::pieces_meeting(&self.t_breakpoints, t) else {
            return 0.0;
        };
        let mut d = SelfDistances::new(self);
        let mut best = 0.0f64;
        for p in a..=b {
            for q in p + 1..=b {
                best = best.max(d.get(p, q));
            }
        }
        best
    }

    /// `j(x) = sup_t d_J1^0(x(t), x(t-))`.
    pub fn max_jump(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| metric::d_j1_0(&w[1], &w[0]).value)
            .fold(0.0, f64::max)
    }

    /// Times at which the path is discontinuous.
    pub fn disc_set(&self) -> Vec<f64> {
        self.t_breakpoints.clone()
    }

    /// `w_D′(x, δ)`: infimum over δ-sparse partitions of the largest `w_D` on
    /// a cell `[t_{i-1}, t_i)`.
    pub fn w_d_prime(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        if self.segments.len() == 1 {
            return Ok(0.0);
        }
        let mut dist = SelfDistances::new(self);
        let mut diam = RangeDiameter {
            dist: &mut dist,
            cache: HashMap::new(),
        };
        let last = self.segments.len() - 1;
        let upper = diam.get(0, last);
        Ok(partition::min_sparse_threshold(
            &self.t_breakpoints,
            delta,
            upper,
            |a, b| diam.get(a, b),
        ))
    }

    /// Whether `w_D′(x, δ) ≥ eps`.
    pub fn w_d_prime_at_least(&self, delta: f64, eps: f64) -> Result<bool> {
        Ok(self.w_d_prime_exceeds(&[delta], eps)?[0])
    }

    /// `w_D′(x, δ) ≥ eps` for each δ. Pairs of segments are only compared
    /// against `eps`, and the comparisons are shared across the δ values.
    pub fn w_d_prime_exceeds(&self, deltas: &[f64], eps: f64) -> Result<Vec<bool>> {
        for &d in deltas {
            check_delta(d)?;
        }
        if !(eps > 0.0) {
            return Ok(vec![true; deltas.len()]);
        }
        let segs = &self.segments;
        // first[b]: smallest a such that every pair inside [a, b] is closer than eps
        let mut first: Vec<usize> = vec![0; segs.len()];
        for q in 1..segs.len() {
            let floor = first[q - 1];
            first[q] = (floor..q)
                .rev()
                .find(|&p| !metric::d_j1_0_below(&segs[p], &segs[q], eps))
                .map_or(floor, |p| p + 1);
        }
        Ok(deltas
            .iter()
            .map(|&d| {
                !partition::sparse_partition_exists(&self.t_breakpoints, d, |a, b| a >= first[b])
            })
            .collect())
    }

    /// Ordinary modulus `w_D(x, δ) = sup_{|t_1 - t_2| ≤ δ} d_J1^0(x(t_1), x(t_2))`.
    pub fn continuity_modulus(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(domain(format!("delta must be positive, got {delta}")));
        }
        let mut d = SelfDistances::new(self);
        Ok(partition::two_point_sup(
            &self.t_breakpoints,
            delta,
            |a, b| d.get(a, b),
        ))
    }

    /// `w_D″(x, δ) = sup_{t_1 ≤ t ≤ t_2, t_2 - t_1 ≤ δ} d(x(t), x(t_1)) ∧ d(x(t_2), x(t))`.
    pub fn w_d_second(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let mut d = SelfDistances::new(self);
        Ok(partition::three_point_sup(
            &self.t_breakpoints,
            delta,
            |a, b| d.get(a, b),
        ))
    }

    /// Whether `w_D″(x, δ) ≥ eps`.
    pub fn w_d_second_at_least(&self, delta: f64, eps: f64) -> Result<bool> {
        Ok(self.w_d_second_exceeds(&[delta], eps)?[0])
    }

    /// `w_D″(x, δ) ≥ eps` for each δ, testing increments against `eps` only.
    pub fn w_d_second_exceeds(&self, deltas: &[f64], eps: f64) -> Result<Vec<bool>> {
        for &d in deltas {
            check_delta(d)?;
        }
        if !(eps > 0.0) {
            return Ok(vec![true; deltas.len()]);
        }
        let segs = &self.segments;
        let mut far: HashMap<(usize, usize), bool> = HashMap::new();
        Ok(deltas
            .iter()
            .map(|&d| {
                partition::three_point_exists(&self.t_breakpoints, d, |a, b| {
                    let key = (a.min(b), a.max(b));
                    *far.entry(key)
                        .or_insert_with(|| !metric::d_j1_0_below(&segs[key.0], &segs[key.1], eps))
                })
            })
            .collect())
    }

    /// `w_u″`: as [`Self::w_d_second`] with uniform increments `‖x(t) - x(t_1)‖`.
    pub fn w_u_second(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let segs = &self.segments;
        Ok(partition::three_point_sup(
            &self.t_breakpoints,
            delta,
            |a, b| segs[a].sup_distance(&segs[b]),
        ))
    }

    /// `A_σ(x)`: the path read at the grid points and held constant between them.
    pub fn discretize(&self, sigma: &Grid) -> NestedPath {
        let values: Vec<StepFunction> = sigma
            .points()
            .iter()
            .map(|&t| self.segments[partition::piece_at(&self.t_breakpoints, t)].clone())
            .collect();
        Self::hold(values, sigma)
    }

    /// `V_σ(α)`: `α_{i-1}` on `[t_{i-1}, t_i)` and `α_k` at `t = 1`.
    pub fn assemble(values: Vec<StepFunction>, sigma: &Grid) -> Result<NestedPath> {
        if values.len() != sigma.points().len() {
            return Err(validation(format!(
                "expected {} values for {} grid points, got {}",
                sigma.points().len(),
                sigma.points().len(),
                values.len()
            )));
        }
        Ok(Self::hold(values, sigma))
    }

    fn hold(values: Vec<StepFunction>, sigma: &Grid) -> NestedPath {
        let bps = sigma.points()[1..].to_vec();
        Self::canonical(bps, values)
    }
}

/// `ρ_D(x, y) = sup_t d_J1^0(x(t), y(t))`.
pub fn rho_d(x: &NestedPath, y: &NestedPath) -> f64 {
    refined_pieces(&x.t_breakpoints, &y.t_breakpoints)
        .into_iter()
        .map(|(i, j)| metric::d_j1_0(&x.segments[i], &y.segments[j]).value)
        .fold(0.0, f64::max)
}

/// `penalty(λ) ∨ ρ_D(x, y∘λ)`.
pub fn nested_cost_of_timechange(
    x: &NestedPath,
    y: &NestedPath,
    lam: &TimeChange,
    objective: Objective,
) -> f64 {
    timechange_penalty(lam, objective).max(rho_d(x, &y.compose_t(lam)))
}

/// Matching distance one level up: `d_D` for the uniform-deviation objective,
/// `d_D^0` for the log-slope one.
pub fn nested_distance(x: &NestedPath, y: &NestedPath, objective: Objective) -> DistanceResult {
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let (xs, ys) = (&x.segments, &y.segments);
    let cell = |p: usize, q: usize| {
        *cache
            .entry((p, q))
            .or_insert_with(|| metric::d_j1_0(&xs[p], &ys[q]).value)
    };
    let sol = Engine::new(&x.t_breakpoints, &y.t_breakpoints, objective, cell).solve(f64::INFINITY);
    let mut res = DistanceResult::from_matching(
        0.0,
        objective,
        sol.matching,
        &x.t_breakpoints,
        &y.t_breakpoints,
        sol.exact,
    );
    res.value = nested_cost_of_timechange(x, y, &res.timechange, objective);
    res
}

/// `d_D(x, y)`.
pub fn d_d(x: &NestedPath, y: &NestedPath) -> DistanceResult {
    nested_distance(x, y, Objective::UniformDev)
}

/// `d_D^0(x, y)`.
pub fn d_d0(x: &NestedPath, y: &NestedPath) -> DistanceResult {
    nested_distance(x, y, Objective::LogSlope)
}

/// Minimum over every order-preserving matching of t-switches.
pub fn nested_exhaustive_distance(
    x: &NestedPath,
    y: &NestedPath,
    objective: Objective,
    cap: usize,
) -> Result<DistanceResult> {
    let total = x.switch_count() + y.switch_count();
    if total > cap {
        return Err(Error::Size(format!(
            "{total} switches exceed the exhaustive enumeration cap {cap}"
        )));
    }
    let mut best: Option<DistanceResult> = None;
    for m in all_matchings(&x.t_breakpoints, &y.t_breakpoints) {
        let r = DistanceResult::from_matching(
            0.0,
            objective,
            m,
            &x.t_breakpoints,
            &y.t_breakpoints,
            true,
        );
        let v = nested_cost_of_timechange(x, y, &r.timechange, objective);
        if best.as_ref().is_none_or(|b| v < b.value) {
            best = Some(DistanceResult { value: v, ..r });
        }
    }
    Ok(best.expect("the empty matching is always enumerated"))
}

/// Random time-change search for the nested distances, as [`metric::oracle_dist`].
pub fn nested_oracle_dist(
    x: &NestedPath,
    y: &NestedPath,
    objective: Objective,
    trials: usize,
    seed: u64,
) -> f64 {
    metric::random_timechange_search(
        &x.t_breakpoints,
        &y.t_breakpoints,
        objective,
        trials.max(1),
        seed,
        |lam| nested_cost_of_timechange(x, y, lam, objective),
    )
}
