//! Compactness profiles and Monte Carlo tightness tables for families of
//! nested paths, plus the maximal functionals `m_rst`, `L` and `M_n`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cadlag::StepFunction;
use crate::error::{domain, validation, Error, Result};
use crate::metric;
use crate::nested::NestedPath;
use crate::partition;

/// A finite sample of paths standing in for the law `P_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    n: usize,
    seed: u64,
    paths: Vec<NestedPath>,
}

impl PathEnsemble {
    pub fn new(n: usize, seed: u64, paths: Vec<NestedPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(validation("an ensemble needs at least one path"));
        }
        if n == 0 {
            return Err(validation("ensemble label n must be positive"));
        }
        Ok(PathEnsemble { n, seed, paths })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn paths(&self) -> &[NestedPath] {
        &self.paths
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Conditions built on `w′` and `w_D′`.
    Wprime,
    /// Adds the `w″`, `w_D″` and boundary-increment conditions.
    Wsecond,
}

/// Per-δ suprema over a family of paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub delta_grid: Vec<f64>,
    pub sup_super_norm: f64,
    /// `sup_x sup_t w′(x(t), δ)`.
    pub profile_wprime_inner: Vec<f64>,
    /// `sup_x w_D′(x, δ)`.
    pub profile_wdprime: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub second: Option<SecondOrderProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderProfile {
    /// `sup_x sup_t w″(x(t), δ)`.
    pub profile_wsecond_inner: Vec<f64>,
    /// `sup_x sup_t |x(t, δ) - x(t, 0)|`.
    pub inner_start: Vec<f64>,
    /// `sup_x sup_t |x(t, 1-) - x(t, 1-δ)|`.
    pub inner_end: Vec<f64>,
    /// `sup_x w_D″(x, δ)`.
    pub profile_wdsecond: Vec<f64>,
    /// `sup_x d_J1^0(x(δ), x(0))`.
    pub outer_start: Vec<f64>,
    /// `sup_x d_J1^0(x(1-), x(1-δ))`.
    pub outer_end: Vec<f64>,
}

fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() {
        return Err(validation(format!("{name} grid is empty")));
    }
    match grid.iter().find(|&&v| !ok(v)) {
        Some(v) => Err(validation(format!(
            "{name} grid contains invalid value {v}"
        ))),
        None => Ok(()),
    }
}

fn inner_start(x: &StepFunction, delta: f64) -> f64 {
    (x.eval(delta).expect("delta in (0,1)") - x.values()[0]).abs()
}

fn inner_end(x: &StepFunction, delta: f64) -> f64 {
    (x.left_limit(1.0).expect("1 is in range") - x.eval(1.0 - delta).expect("delta in (0,1)")).abs()
}

fn outer_start(x: &NestedPath, delta: f64) -> f64 {
    metric::d_j1_0(x.eval_t(delta).expect("delta in range"), &x.segments()[0]).value
}

fn outer_end(x: &NestedPath, delta: f64) -> f64 {
    metric::d_j1_0(
        x.left_limit_t(1.0).expect("1 is in range"),
        x.eval_t(1.0 - delta).expect("delta in range"),
    )
    .value
}

fn max_over_segments(x: &NestedPath, f: impl Fn(&StepFunction) -> f64) -> f64 {
    x.segments().iter().map(f).fold(0.0, f64::max)
}

fn elementwise_max(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (u, v) in a.iter_mut().zip(b) {
        *u = u.max(v);
    }
    a
}

/// Exact suprema of the relative-compactness quantities over `paths`, one
/// entry per δ.
pub fn compactness_profile(
    paths: &[NestedPath],
    delta_grid: &[f64],
    variant: Variant,
) -> Result<CompactnessReport> {
    if paths.is_empty() {
        return Err(validation("compactness profile needs at least one path"));
    }
    check_grid("delta", delta_grid, |d| d > 0.0 && d < 1.0)?;
    let nd = delta_grid.len();
    let second = variant == Variant::Wsecond;
    let blocks = if second { 8 } else { 2 };

    // per path: [wprime_inner, wdprime, (wsecond_inner, inner_start, inner_end, wdsecond, outer_start, outer_end)] × δ
    let per_path = |x: &NestedPath| -> Result<Vec<f64>> {
        let mut row = vec![0.0; blocks * nd];
        for (k, &d) in delta_grid.iter().enumerate() {
            row[k] = x
                .segments()
                .iter()
                .map(|s| s.modulus_wprime(d))
                .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
            row[nd + k] = x.w_d_prime(d)?;
            if second {
                row[2 * nd + k] = x
                    .segments()
                    .iter()
                    .map(|s| s.modulus_wsecond(d))
                    .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
                row[3 * nd + k] = max_over_segments(x, |s| inner_start(s, d));
                row[4 * nd + k] = max_over_segments(x, |s| inner_end(s, d));
                row[5 * nd + k] = x.w_d_second(d)?;
                row[6 * nd + k] = outer_start(x, d);
                row[7 * nd + k] = outer_end(x, d);
            }
        }
        Ok(row)
    };
    let rows: Vec<Vec<f64>> = paths.par_iter().map(per_path).collect::<Result<_>>()?;
    let all = rows.into_iter().reduce(elementwise_max).expect("non-empty");
    let block = |b: usize| all[b * nd..(b + 1) * nd].to_vec();
    Ok(CompactnessReport {
        delta_grid: delta_grid.to_vec(),
        sup_super_norm: paths.iter().map(NestedPath::super_norm).fold(0.0, f64::max),
        profile_wprime_inner: block(0),
        profile_wdprime: block(1),
        second: second.then(|| SecondOrderProfile {
            profile_wsecond_inner: block(2),
            inner_start: block(3),
            inner_end: block(4),
            profile_wdsecond: block(5),
            outer_start: block(6),
            outer_end: block(7),
        }),
    })
}

/// One line of a tightness table. Grid coordinates that do not apply to the
/// condition are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: usize,
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub condition: String,
    pub count: usize,
    pub total: usize,
    pub frequency: f64,
}

/// Empirical exceedance frequencies of the tightness conditions.
///
/// Conditions: `21` (`‖x‖_D ≥ a`), `22` (`w′(x(t), δ) ≥ ε` for some `t`),
/// `23` (`w_D′(x, δ) ≥ ε`), `24(t=…)` (`‖x(t)‖ ≥ a`), and the second-order
/// variants `ii'a`–`ii'c` (inner `w″` and the two boundary increments, for
/// some `t`) and `iii'a`–`iii'c` (`w_D″` and the two outer boundary distances).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub a_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub t_subset: Vec<f64>,
    pub rows: Vec<TightnessRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl TightnessReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Validation(format!("csv: {e}"));
        w.write_record([
            "n",
            "a",
            "delta",
            "epsilon",
            "condition",
            "count",
            "total",
            "frequency",
        ])
        .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_opt(r.a),
                fmt_opt(r.delta),
                fmt_opt(r.epsilon),
                r.condition.clone(),
                r.count.to_string(),
                r.total.to_string(),
                r.frequency.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Validation(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Rows of one condition for one ensemble.
    pub fn select<'a>(
        &'a self,
        n: usize,
        condition: &'a str,
    ) -> impl Iterator<Item = &'a TightnessRow> {
        self.rows
            .iter()
            .filter(move |r| r.n == n && r.condition == condition)
    }
}

/// Per-path indicator vectors, in the row order produced by [`tightness_report`].
struct PathFlags {
    flags: Vec<bool>,
}

/// `value ≥ e` for each threshold.
fn exceed(value: f64, eps: &[f64]) -> impl Iterator<Item = bool> + '_ {
    eps.iter().map(move |&e| value >= e)
}

/// Evaluates every condition on one path.
fn path_flags(
    x: &NestedPath,
    a_grid: &[f64],
    delta_grid: &[f64],
    eps_grid: &[f64],
    t_subset: &[f64],
) -> Result<PathFlags> {
    let mut flags = Vec::new();
    let norm = x.super_norm();
    flags.extend(exceed(norm, a_grid));

    // 22: some segment has w′ ≥ ε
    for &d in delta_grid {
        for &e in eps_grid {
            let mut hit = false;
            for s in x.segments() {
                if s.wprime_at_least(d, e)? {
                    hit = true;
                    break;
                }
            }
            flags.push(hit);
        }
    }
    // 23
    let by_eps: Vec<Vec<bool>> = eps_grid
        .iter()
        .map(|&e| x.w_d_prime_exceeds(delta_grid, e))
        .collect::<Result<_>>()?;
    for k in 0..delta_grid.len() {
        flags.extend(by_eps.iter().map(|row| row[k]));
    }
    // 24
    for &t in t_subset {
        let v = x.eval_t(t)?.sup_norm();
        flags.extend(exceed(v, a_grid));
    }
    // ii'a-c
    for &d in delta_grid {
        let ws = x
            .segments()
            .iter()
            .map(|s| s.modulus_wsecond(d))
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
        flags.extend(exceed(ws, eps_grid));
    }
    for &d in delta_grid {
        flags.extend(exceed(
            max_over_segments(x, |s| inner_start(s, d)),
            eps_grid,
        ));
    }
    for &d in delta_grid {
        flags.extend(exceed(max_over_segments(x, |s| inner_end(s, d)), eps_grid));
    }
    // iii'a-c
    let by_eps: Vec<Vec<bool>> = eps_grid
        .iter()
        .map(|&e| x.w_d_second_exceeds(delta_grid, e))
        .collect::<Result<_>>()?;
    for k in 0..delta_grid.len() {
        flags.extend(by_eps.iter().map(|row| row[k]));
    }
    for &d in delta_grid {
        flags.extend(exceed(outer_start(x, d), eps_grid));
    }
    for &d in delta_grid {
        flags.extend(exceed(outer_end(x, d), eps_grid));
    }
    Ok(PathFlags { flags })
}

/// `(a, delta, epsilon, condition)` of one tightness row.
type RowKey = (Option<f64>, Option<f64>, Option<f64>, String);

/// Row skeletons in the same order as [`path_flags`].
fn row_layout(
    a_grid: &[f64],
    delta_grid: &[f64],
    eps_grid: &[f64],
    t_subset: &[f64],
) -> Vec<RowKey> {
    let mut rows = Vec::new();
    for &a in a_grid {
        rows.push((Some(a), None, None, "21".to_string()));
    }
    for cond in ["22", "23"] {
        for &d in delta_grid {
            for &e in eps_grid {
                rows.push((None, Some(d), Some(e), cond.to_string()));
            }
        }
    }
    for &t in t_subset {
        for &a in a_grid {
            rows.push((Some(a), None, None, format!("24(t={t})")));
        }
    }
    for cond in ["ii'a", "ii'b", "ii'c", "iii'a", "iii'b", "iii'c"] {
        for &d in delta_grid {
            for &e in eps_grid {
                rows.push((None, Some(d), Some(e), cond.to_string()));
            }
        }
    }
    rows
}

/// Tabulates, for each ensemble and grid point, how many paths satisfy each
/// tightness condition. Frequencies depend only on the ensembles.
pub fn tightness_report(
    ensembles: &[PathEnsemble],
    a_grid: &[f64],
    delta_grid: &[f64],
    epsilon_grid: &[f64],
    t_subset: &[f64],
) -> Result<TightnessReport> {
    if ensembles.is_empty() {
        return Err(validation("tightness report needs at least one ensemble"));
    }
    check_grid("a", a_grid, |a| a.is_finite())?;
    check_grid("delta", delta_grid, |d| d > 0.0 && d < 1.0)?;
    check_grid("epsilon", epsilon_grid, |e| e.is_finite())?;
    check_grid("t", t_subset, |t| (0.0..=1.0).contains(&t))?;
    if !t_subset.contains(&1.0) {
        return Err(validation("t subset must contain 1"));
    }
    let layout = row_layout(a_grid, delta_grid, epsilon_grid, t_subset);
    let mut rows = Vec::with_capacity(layout.len() * ensembles.len());
    for ens in ensembles {
        let per_path: Vec<PathFlags> = ens
            .paths()
            .par_iter()
            .map(|x| path_flags(x, a_grid, delta_grid, epsilon_grid, t_subset))
            .collect::<Result<_>>()?;
        let total = per_path.len();
        for (r, (a, delta, epsilon, condition)) in layout.iter().enumerate() {
            let count = per_path.iter().filter(|p| p.flags[r]).count();
            rows.push(TightnessRow {
                n: ens.n(),
                a: *a,
                delta: *delta,
                epsilon: *epsilon,
                condition: condition.clone(),
                count,
                total,
                frequency: count as f64 / total as f64,
            });
        }
    }
    Ok(TightnessReport {
        a_grid: a_grid.to_vec(),
        delta_grid: delta_grid.to_vec(),
        epsilon_grid: epsilon_grid.to_vec(),
        t_subset: t_subset.to_vec(),
        rows,
    })
}

/// Which increment the maximal functionals use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Increment {
    /// `d_J1^0(X(r), X(s))`.
    J1,
    /// `‖X(s) - X(r)‖`.
    Uniform,
}

fn increment(a: &StepFunction, b: &StepFunction, metric: Increment) -> f64 {
    match metric {
        Increment::J1 => metric::d_j1_0(a, b).value,
        Increment::Uniform => a.sup_distance(b),
    }
}

/// `m_rst = inc(X(r), X(s)) ∧ inc(X(s), X(t))`.
pub fn m_rst(x: &NestedPath, r: f64, s: f64, t: f64, metric: Increment) -> Result<f64> {
    if !(0.0 <= r && r <= s && s <= t && t <= 1.0) {
        return Err(domain(format!(
            "m_rst needs 0 <= r <= s <= t <= 1, got {r}, {s}, {t}"
        )));
    }
    let (xr, xs, xt) = (x.eval_t(r)?, x.eval_t(s)?, x.eval_t(t)?);
    Ok(increment(xr, xs, metric).min(increment(xs, xt, metric)))
}

/// `L(X, δ) = sup { m_rst : r ≤ s ≤ t, t - r < δ }`.
///
/// Every t-piece is represented by its left end; a triple of pieces
/// `i ≤ j ≤ k` is admissible when some `r` in piece `i` and `t` in piece `k`
/// have `t - r < δ`.
pub fn l_max(x: &NestedPath, delta: f64, metric: Increment) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("delta must lie in (0,1], got {delta}")));
    }
    let bps = x.t_breakpoints();
    let pieces = bps.len() + 1;
    let rep: Vec<f64> = (0..pieces)
        .map(|k| partition::piece_start(bps, k))
        .collect();
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut inc = |p: usize, q: usize| -> Result<f64> {
        if let Some(&v) = cache.get(&(p, q)) {
            return Ok(v);
        }
        let v = increment(x.eval_t(rep[p])?, x.eval_t(rep[q])?, metric);
        cache.insert((p, q), v);
        Ok(v)
    };
    let mut best = 0.0f64;
    for i in 0..pieces {
        let latest_r = partition::piece_end(bps, i);
        for (k, &start) in rep.iter().enumerate().skip(i) {
            if i < k && !(start - latest_r < delta) {
                break;
            }
            for j in i..=k {
                best = best.max(inc(i, j)?.min(inc(j, k)?));
            }
        }
    }
    Ok(best)
}

/// Largest size accepted by [`discrete_max_m`].
pub const DISCRETE_MAX_CAP: usize = 512;

/// `M_n = max_{0 ≤ i ≤ j ≤ k ≤ n} ‖S_j - S_i‖ ∧ ‖S_k - S_j‖` for the partial
/// sums `S_0 = 0, S_k = Σ_{i ≤ k} X_i`.
///
/// For fixed `j` the two legs are independent, so the maximum is
/// `min(max_i ‖S_j - S_i‖, max_k ‖S_k - S_j‖)`, evaluated in `O(n²)` norms.
pub fn discrete_max_m(increments: &[StepFunction]) -> Result<f64> {
    let n = increments.len();
    if n > DISCRETE_MAX_CAP {
        return Err(Error::Size(format!(
            "{n} increments exceed the cap {DISCRETE_MAX_CAP}"
        )));
    }
    let mut sums = Vec::with_capacity(n + 1);
    sums.push(StepFunction::zero());
    for x in increments {
        let next = sums.last().unwrap().add(x);
        sums.push(next);
    }
    let mut best = 0.0f64;
    for j in 0..=n {
        let left = (0..j)
            .map(|i| sums[j].sup_distance(&sums[i]))
            .fold(0.0, f64::max);
        if left <= best {
            continue;
        }
        let right = (j + 1..=n)
            .map(|k| sums[k].sup_distance(&sums[j]))
            .fold(0.0, f64::max);
        best = best.max(left.min(right));
    }
    Ok(best)
}

/// δ-monotonicity check used by reports: whether `v` is non-decreasing along
/// the ascending-sorted `grid`.
pub fn non_decreasing_in_delta(grid: &[f64], v: &[f64]) -> bool {
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    idx.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    idx.windows(2).all(|w| v[w[0]] <= v[w[1]])
}

/// Renders a compactness report as CSV rows `quantity,delta,value`.
pub fn compactness_csv(report: &CompactnessReport) -> String {
    let mut out = String::from("quantity,delta,value\n");
    let mut emit = |name: &str, vals: &[f64]| {
        for (d, v) in report.delta_grid.iter().zip(vals) {
            let _ = writeln!(out, "{name},{d},{v}");
        }
    };
    emit("wprime_inner", &report.profile_wprime_inner);
    emit("wDprime", &report.profile_wdprime);
    if let Some(s) = &report.second {
        emit("wsecond_inner", &s.profile_wsecond_inner);
        emit("inner_start", &s.inner_start);
        emit("inner_end", &s.inner_end);
        emit("wDsecond", &s.profile_wdsecond);
        emit("outer_start", &s.outer_start);
        emit("outer_end", &s.outer_end);
    }
    let _ = writeln!(out, "super_norm,,{}", report.sup_super_norm);
    out
}
