//! Skorohod distances `d_J1` and `d_J1^0` between step functions.
//!
//! Both are computed as a minimum over order-preserving jump matchings, each
//! matching inducing the piecewise-linear time change through its pinned
//! pairs. The returned value is always the cost of the reported witness time
//! change, re-evaluated from scratch with [`cost_of_timechange`]. The value is
//! an upper bound for the infimum over all of `Λ`; [`oracle_dist`] probes that
//! infimum independently by random search over time changes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cadlag::{StepFunction, TimeChange};
use crate::error::{Error, Result};
use crate::matching::{all_matchings, Engine, Matching};

pub use crate::matching::Objective;

/// Default combined jump count above which exhaustive enumeration is refused.
pub const EXHAUSTIVE_CAP: usize = 24;

/// A distance value with its witness matching and time change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub objective: Objective,
    pub matching: Matching,
    pub timechange: TimeChange,
    /// False when the DP ran with a restricted predecessor window.
    #[serde(skip, default = "exact_default")]
    pub exact: bool,
}

fn exact_default() -> bool {
    true
}

impl DistanceResult {
    pub(crate) fn from_matching(
        value: f64,
        objective: Objective,
        matching: Matching,
        a: &[f64],
        b: &[f64],
        exact: bool,
    ) -> Self {
        let timechange = TimeChange::through(&matching.knots(a, b))
            .expect("order-preserving matchings induce valid time changes");
        DistanceResult {
            value,
            objective,
            matching,
            timechange,
            exact,
        }
    }
}

/// The penalty `‖λ - e‖` or `‖λ‖⁰`.
pub fn timechange_penalty(lam: &TimeChange, objective: Objective) -> f64 {
    match objective {
        Objective::UniformDev => lam.devnorm(),
        Objective::LogSlope => lam.lognorm(),
    }
}

/// `penalty(λ) ∨ ‖x - y∘λ‖` for an arbitrary time change.
pub fn cost_of_timechange(
    x: &StepFunction,
    y: &StepFunction,
    lam: &TimeChange,
    objective: Objective,
) -> f64 {
    timechange_penalty(lam, objective).max(x.sup_distance(&y.compose(lam)))
}

fn scalar_engine<'a>(
    x: &'a StepFunction,
    y: &'a StepFunction,
    objective: Objective,
) -> Engine<'a, impl FnMut(usize, usize) -> f64 + 'a> {
    let (xv, yv) = (x.values(), y.values());
    Engine::new(
        x.breakpoints(),
        y.breakpoints(),
        objective,
        move |p: usize, q: usize| (xv[p] - yv[q]).abs(),
    )
}

/// Optimal matching distance under `objective`.
pub fn distance(x: &StepFunction, y: &StepFunction, objective: Objective) -> DistanceResult {
    let sol = scalar_engine(x, y, objective).solve(f64::INFINITY);
    let mut res = DistanceResult::from_matching(
        0.0,
        objective,
        sol.matching,
        x.breakpoints(),
        y.breakpoints(),
        sol.exact,
    );
    res.value = cost_of_timechange(x, y, &res.timechange, objective);
    res
}

/// `d_J1(x, y)`.
pub fn d_j1(x: &StepFunction, y: &StepFunction) -> DistanceResult {
    distance(x, y, Objective::UniformDev)
}

/// `d_J1^0(x, y)`.
pub fn d_j1_0(x: &StepFunction, y: &StepFunction) -> DistanceResult {
    distance(x, y, Objective::LogSlope)
}

/// Cheap lower bound on `d_J1^0(x, y)` (and on `d_J1`). Endpoints are fixed by
/// every time change, and each value taken on a piece of positive length has
/// to be matched by some value of the other function.
pub fn lower_bound(x: &StepFunction, y: &StepFunction) -> f64 {
    fn proper_values(f: &StepFunction) -> Vec<f64> {
        let n = if f.breakpoints().last() == Some(&1.0) {
            f.values().len() - 1
        } else {
            f.values().len()
        };
        let mut v = f.values()[..n].to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
    fn directed(from: &[f64], to: &[f64]) -> f64 {
        from.iter().fold(0.0f64, |m, &v| {
            let k = to.partition_point(|&w| w < v);
            let mut d = f64::INFINITY;
            if k < to.len() {
                d = d.min(to[k] - v);
            }
            if k > 0 {
                d = d.min(v - to[k - 1]);
            }
            m.max(d)
        })
    }
    let (vx, vy) = (proper_values(x), proper_values(y));
    let ends = (x.values()[0] - y.values()[0])
        .abs()
        .max((x.terminal() - y.terminal()).abs());
    ends.max(directed(&vx, &vy)).max(directed(&vy, &vx))
}

/// Decides `d_J1^0(x, y) < theta` using bounds first and the DP only when
/// they are inconclusive.
pub fn d_j1_0_below(x: &StepFunction, y: &StepFunction, theta: f64) -> bool {
    if lower_bound(x, y) >= theta {
        return false;
    }
    if x.sup_distance(y) < theta {
        return true;
    }
    scalar_engine(x, y, Objective::LogSlope).solve(theta).value < theta
}

/// Every order-preserving matching of the jumps of `x` and `y`.
pub fn enumerate_matchings(
    x: &StepFunction,
    y: &StepFunction,
    cap: usize,
) -> Result<Vec<Matching>> {
    let total = x.jump_count() + y.jump_count();
    if total > cap {
        return Err(Error::Size(format!(
            "{total} jumps exceed the exhaustive enumeration cap {cap}"
        )));
    }
    Ok(all_matchings(x.breakpoints(), y.breakpoints()))
}

/// The minimum over [`enumerate_matchings`], each matching priced through its
/// time change with [`cost_of_timechange`]. Ties keep the first matching in
/// enumeration order.
pub fn exhaustive_distance(
    x: &StepFunction,
    y: &StepFunction,
    objective: Objective,
    cap: usize,
) -> Result<DistanceResult> {
    let mut best: Option<DistanceResult> = None;
    for m in enumerate_matchings(x, y, cap)? {
        let r = DistanceResult::from_matching(
            0.0,
            objective,
            m,
            x.breakpoints(),
            y.breakpoints(),
            true,
        );
        let v = cost_of_timechange(x, y, &r.timechange, objective);
        if best.as_ref().is_none_or(|b| v < b.value) {
            best = Some(DistanceResult { value: v, ..r });
        }
    }
    Ok(best.expect("the empty matching is always enumerated"))
}

/// Random search for `inf_λ penalty(λ) ∨ discrepancy(λ)` over piecewise-linear
/// time changes, starting from the identity.
///
/// Half of the trials draw 1–6 free knots uniformly; the other half pin
/// random equally sized subsets of jump positions against each other and add
/// up to two free knots. The best candidate is then refined by Gaussian moves
/// of its free knots with a shrinking scale.
pub(crate) fn random_timechange_search(
    a: &[f64],
    b: &[f64],
    objective: Objective,
    trials: usize,
    seed: u64,
    mut cost: impl FnMut(&TimeChange) -> f64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let identity = TimeChange::identity();
    let mut best_cost = cost(&identity);
    let mut best: Vec<(f64, f64, bool)> = Vec::new();
    let explore = trials.div_ceil(2);

    let mut consider = |knots: Vec<(f64, f64, bool)>, best_cost: &mut f64, best: &mut Vec<_>| {
        let mut k = knots;
        k.sort_by(|p, q| p.0.total_cmp(&q.0));
        let pairs: Vec<(f64, f64)> = k.iter().map(|&(s, v, _)| (s, v)).collect();
        if let Ok(lam) = TimeChange::through(&pairs) {
            let c = cost(&lam);
            let _ = objective;
            if c < *best_cost {
                *best_cost = c;
                *best = k;
            }
        }
    };

    for t in 0..explore {
        let mut knots: Vec<(f64, f64, bool)> = Vec::new();
        let free = if t % 2 == 0 || a.is_empty() || b.is_empty() {
            rng.random_range(1..=6)
        } else {
            let r = rng.random_range(1..=a.len().min(b.len()).min(6));
            let mut xs = rand::seq::index::sample(&mut rng, a.len(), r).into_vec();
            let mut ys = rand::seq::index::sample(&mut rng, b.len(), r).into_vec();
            xs.sort_unstable();
            ys.sort_unstable();
            knots.extend(xs.iter().zip(&ys).map(|(&i, &j)| (a[i], b[j], true)));
            rng.random_range(0..=2)
        };
        let mut ss: Vec<f64> = (0..free).map(|_| rng.random::<f64>()).collect();
        let mut vs: Vec<f64> = (0..free).map(|_| rng.random::<f64>()).collect();
        ss.sort_by(f64::total_cmp);
        vs.sort_by(f64::total_cmp);
        knots.extend(ss.into_iter().zip(vs).map(|(s, v)| (s, v, false)));
        // free knots must keep the pinned pairs ordered; rejected otherwise
        knots.sort_by(|p, q| p.0.total_cmp(&q.0));
        if knots.windows(2).all(|w| w[0].1 < w[1].1) {
            consider(knots, &mut best_cost, &mut best);
        }
    }

    let refine = trials - explore;
    for t in 0..refine {
        if best.is_empty() {
            break;
        }
        let scale = 0.05 * (1.0 - t as f64 / refine as f64) + 1e-4;
        let mut knots = best.clone();
        for k in knots.iter_mut().filter(|k| !k.2) {
            let ds: f64 = rng.sample(rand_distr::StandardNormal);
            let dv: f64 = rng.sample(rand_distr::StandardNormal);
            k.0 = (k.0 + scale * ds).clamp(1e-9, 1.0 - 1e-9);
            k.1 = (k.1 + scale * dv).clamp(1e-9, 1.0 - 1e-9);
        }
        if rng.random_bool(0.2) && !knots.is_empty() {
            let idx = rng.random_range(0..knots.len());
            knots.remove(idx);
        }
        let mut sorted = knots.clone();
        sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
        if sorted.windows(2).all(|w| w[0].1 < w[1].1) {
            consider(sorted, &mut best_cost, &mut best);
        }
    }
    best_cost
}

/// Independent randomized certificate for the matching distance: the best
/// cost found over `trials` random time changes (never below the infimum).
pub fn oracle_dist(
    x: &StepFunction,
    y: &StepFunction,
    objective: Objective,
    trials: usize,
    seed: u64,
) -> f64 {
    random_timechange_search(
        x.breakpoints(),
        y.breakpoints(),
        objective,
        trials.max(1),
        seed,
        |lam| cost_of_timechange(x, y, lam, objective),
    )
}
