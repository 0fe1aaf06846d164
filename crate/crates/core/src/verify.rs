//! Invariant suites run by `skorohod verify` over a directory of JSON fixtures.
//!
//! Each `*.json` file in the corpus holds an object with optional arrays
//! `step_functions`, `time_changes` and `nested_paths`. Every suite checks its
//! properties on all objects (pairs and triples where relevant) and reports
//! how many checks passed.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cadlag::{StepFunction, TimeChange};
use crate::diagnostics::{discrete_max_m, l_max, m_rst, Increment};
use crate::error::{validation, Result};
use crate::matching::Objective;
use crate::metric::{self, d_j1, d_j1_0};
use crate::nested::{d_d, d_d0, rho_d, Grid, NestedPath};

const TOL: f64 = 1e-9;
const DELTAS: [f64; 3] = [0.01, 0.05, 0.1];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    #[serde(default)]
    pub step_functions: Vec<StepFunction>,
    #[serde(default)]
    pub time_changes: Vec<TimeChange>,
    #[serde(default)]
    pub nested_paths: Vec<NestedPath>,
}

impl Corpus {
    /// Loads and merges every `*.json` file of `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Corpus> {
        let entries = fs::read_dir(dir)
            .map_err(|e| validation(format!("cannot read corpus {}: {e}", dir.display())))?;
        let mut files: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(validation(format!("no JSON fixtures in {}", dir.display())));
        }
        let mut all = Corpus::default();
        for f in files {
            let text = fs::read_to_string(&f)
                .map_err(|e| validation(format!("cannot read {}: {e}", f.display())))?;
            let c: Corpus = serde_json::from_str(&text)
                .map_err(|e| validation(format!("{}: {e}", f.display())))?;
            all.step_functions.extend(c.step_functions);
            all.time_changes.extend(c.time_changes);
            all.nested_paths.extend(c.nested_paths);
        }
        Ok(all)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Descriptions of the first few failures.
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

struct Suite {
    res: SuiteResult,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            res: SuiteResult {
                name,
                passed: 0,
                total: 0,
                failures: Vec::new(),
            },
        }
    }

    fn check(&mut self, cond: bool, what: impl FnOnce() -> String) {
        self.res.total += 1;
        if cond {
            self.res.passed += 1;
        } else if self.res.failures.len() < 5 {
            self.res.failures.push(what());
        }
    }

    fn le(&mut self, lhs: f64, rhs: f64, what: &str) {
        self.check(lhs <= rhs + TOL, || format!("{what}: {lhs} > {rhs}"));
    }

    fn eq(&mut self, lhs: f64, rhs: f64, what: &str) {
        self.check((lhs - rhs).abs() <= TOL, || {
            format!("{what}: {lhs} != {rhs}")
        });
    }

    fn exact(&mut self, lhs: f64, rhs: f64, what: &str) {
        self.check(lhs == rhs, || format!("{what}: {lhs} != {rhs}"));
    }
}

fn roundtrip<T: Serialize + for<'de> Deserialize<'de> + PartialEq>(v: &T) -> bool {
    serde_json::to_string(v)
        .ok()
        .and_then(|s| serde_json::from_str::<T>(&s).ok().map(|b| (b, s)))
        .is_some_and(|(b, s)| b == *v && serde_json::to_string(&b).ok() == Some(s))
}

fn suite_roundtrip(c: &Corpus) -> SuiteResult {
    let mut s = Suite::new("json round-trip");
    for (i, x) in c.step_functions.iter().enumerate() {
        s.check(roundtrip(x), || format!("step function {i}"));
    }
    for (i, l) in c.time_changes.iter().enumerate() {
        s.check(roundtrip(l), || format!("time change {i}"));
    }
    for (i, x) in c.nested_paths.iter().enumerate() {
        s.check(roundtrip(x), || format!("nested path {i}"));
    }
    s.res
}

fn suite_cadlag(c: &Corpus) -> SuiteResult {
    let mut s = Suite::new("cadlag");
    for lam in &c.time_changes {
        s.le(
            lam.devnorm(),
            lam.lognorm().exp() - 1.0,
            "devnorm <= exp(lognorm) - 1",
        );
    }
    for x in &c.step_functions {
        for &b in x.breakpoints() {
            let at = x.eval(b).unwrap();
            for h in [1e-6, 1e-9] {
                if b + h <= 1.0 && x.breakpoints().iter().all(|&c| !(c > b && c <= b + h)) {
                    s.exact(x.eval(b + h).unwrap(), at, "right-continuity");
                }
            }
        }
        let mut prev = (0.0f64, 0.0f64);
        for d in DELTAS.iter().copied().chain([0.2]) {
            let wp = x.modulus_wprime(d).unwrap();
            let ws = x.modulus_wsecond(d).unwrap();
            s.le(ws, wp, "w'' <= w'");
            s.le(prev.0, wp, "w' monotone in delta");
            s.le(prev.1, ws, "w'' monotone in delta");
            prev = (wp, ws);
            if d < 0.5 {
                s.le(wp, x.continuity_modulus(2.0 * d).unwrap(), "w'(d) <= w(2d)");
            }
            s.le(
                x.continuity_modulus(d).unwrap(),
                2.0 * wp + x.max_jump(),
                "w(d) <= 2 w'(d) + j",
            );
        }
    }
    s.res
}

fn suite_metric(c: &Corpus) -> SuiteResult {
    let mut s = Suite::new("skorohod metric");
    let xs = &c.step_functions;
    let zero = StepFunction::zero();
    for x in xs {
        s.exact(d_j1_0(x, x).value, 0.0, "d0(x,x) = 0");
        s.exact(d_j1(x, &zero).value, x.sup_norm(), "d(x,0) = |x|");
        s.exact(d_j1_0(x, &zero).value, x.sup_norm(), "d0(x,0) = |x|");
    }
    for x in xs {
        for y in xs {
            let r0 = d_j1_0(x, y);
            let r = d_j1(x, y);
            s.eq(r0.value, d_j1_0(y, x).value, "symmetry");
            s.le(r0.value, x.sup_distance(y), "d0 <= |x - y|");
            s.le(r.value, r0.value.exp() - 1.0, "d <= exp(d0) - 1");
            s.exact(
                metric::cost_of_timechange(x, y, &r0.timechange, Objective::LogSlope),
                r0.value,
                "witness reproduces value",
            );
            if x.jump_count() + y.jump_count() <= 10 {
                let e = metric::exhaustive_distance(x, y, Objective::LogSlope, 10).unwrap();
                s.exact(r0.value, e.value, "DP = exhaustive");
            }
            for z in xs {
                s.le(
                    d_j1_0(x, z).value,
                    r0.value + d_j1_0(y, z).value,
                    "triangle inequality",
                );
            }
        }
    }
    s.res
}

fn suite_nested(c: &Corpus) -> SuiteResult {
    let mut s = Suite::new("nested space");
    let xs = &c.nested_paths;
    let zero = NestedPath::zero();
    for x in xs {
        let norm = x.super_norm();
        s.exact(d_d(x, &zero).value, norm, "d_D(x,0) = |x|_D");
        s.exact(rho_d(x, &zero), norm, "rho_D(x,0) = |x|_D");
        s.exact(d_d(x, x).value, 0.0, "d_D(x,x) = 0");
        for d in DELTAS {
            let wp = x.w_d_prime(d).unwrap();
            let ws = x.w_d_second(d).unwrap();
            s.le(ws, wp, "w_D'' <= w_D'");
            s.le(ws, x.w_u_second(d).unwrap(), "w_D'' <= w_u''");
            let b0 = d_j1_0(x.eval_t(d).unwrap(), x.eval_t(0.0).unwrap()).value;
            let b1 = d_j1_0(x.left_limit_t(1.0).unwrap(), x.eval_t(1.0 - d).unwrap()).value;
            s.le(
                ws.max(b0).max(b1),
                x.w_d_prime(2.0 * d).unwrap(),
                "bound on w_D'(2d)",
            );
            s.le(
                x.w_d_prime(d / 2.0).unwrap(),
                12.0 * (ws + b0 + b1),
                "w_D'(d/2) <= 12(...)",
            );
            let k = (1.0 / d).ceil() as usize;
            let sigma = Grid::uniform(k).unwrap();
            s.le(
                d_d(&x.discretize(&sigma), x).value,
                d.max(wp),
                "discretization bound",
            );
            s.le(
                wp,
                x.continuity_modulus(2.0 * d).unwrap(),
                "w_D'(d) <= w_D(2d)",
            );
            s.le(
                x.continuity_modulus(d).unwrap(),
                2.0 * wp + x.max_jump(),
                "w_D(d) <= 2 w_D'(d) + j",
            );
            let bps = x.t_breakpoints();
            let gap = bps
                .windows(2)
                .map(|w| w[1] - w[0])
                .chain(bps.first().copied())
                .chain(bps.last().map(|&b| 1.0 - b))
                .fold(f64::INFINITY, f64::min);
            if d < gap {
                s.exact(wp, 0.0, "w_D' vanishes below the switch gap");
            }
        }
    }
    for x in xs {
        for y in xs {
            let dd = d_d(x, y).value;
            let rho = rho_d(x, y);
            s.le(dd, rho, "d_D <= rho_D");
            s.le(rho, x.sup_distance(y), "rho_D <= |x - y|_D");
            s.le(dd, d_d0(x, y).value.exp() - 1.0, "d_D <= exp(d_D0) - 1");
            let sum = x.add(y);
            for d in DELTAS {
                s.le(
                    sum.w_d_second(d).unwrap(),
                    x.w_d_second(d).unwrap() + 2.0 * y.super_norm(),
                    "w_D''(x+y) <= w_D''(x) + 2|y|_D",
                );
            }
        }
    }
    s.res
}

fn suite_diagnostics(c: &Corpus) -> SuiteResult {
    let mut s = Suite::new("diagnostics");
    for x in &c.nested_paths {
        for d in DELTAS {
            s.exact(
                l_max(x, d, Increment::J1).unwrap(),
                x.w_d_second(d).unwrap(),
                "L(X, d) = w_D''(X, d)",
            );
        }
        s.exact(
            l_max(x, 1.0, Increment::J1).unwrap(),
            x.w_d_second(1.0 - 1e-12).unwrap(),
            "L(X, 1) = w_D''(X, 1-)",
        );
        let bps = x.t_breakpoints();
        let reps: Vec<f64> = std::iter::once(0.0).chain(bps.iter().copied()).collect();
        for (i, &r) in reps.iter().enumerate() {
            for (j, &m) in reps.iter().enumerate().skip(i) {
                for &t in reps.iter().skip(j) {
                    s.le(
                        m_rst(x, r, m, t, Increment::J1).unwrap(),
                        m_rst(x, r, m, t, Increment::Uniform).unwrap(),
                        "m_rst j1 <= uniform",
                    );
                }
            }
        }
    }
    for x in &c.nested_paths {
        for x0 in &c.nested_paths {
            let gap = 2.0 * x.sup_distance(x0);
            let ts: Vec<f64> = std::iter::once(0.0)
                .chain(x.t_breakpoints().iter().copied())
                .chain(x0.t_breakpoints().iter().copied())
                .collect();
            for &t in &ts {
                let (a, b) = (x.eval_t(t).unwrap(), x0.eval_t(t).unwrap());
                for d in DELTAS {
                    s.le(
                        a.modulus_wsecond(d).unwrap(),
                        b.modulus_wsecond(d).unwrap() + gap,
                        "w''(X(t)) <= w''(X0(t)) + 2|X - X0|_D",
                    );
                    let start = |f: &StepFunction| (f.eval(d).unwrap() - f.values()[0]).abs();
                    let end = |f: &StepFunction| {
                        (f.left_limit(1.0).unwrap() - f.eval(1.0 - d).unwrap()).abs()
                    };
                    s.le(start(a), start(b) + gap, "start increment comparison");
                    s.le(end(a), end(b) + gap, "end increment comparison");
                }
            }
        }
    }
    let inc = &c.step_functions;
    let mut sums = vec![StepFunction::zero()];
    for x in inc {
        let next = sums.last().unwrap().add(x);
        sums.push(next);
    }
    let mut brute = 0.0f64;
    for i in 0..sums.len() {
        for j in i..sums.len() {
            for k in j..sums.len() {
                let v = sums[j]
                    .sup_distance(&sums[i])
                    .min(sums[k].sup_distance(&sums[j]));
                brute = brute.max(v);
            }
        }
    }
    if inc.len() <= crate::diagnostics::DISCRETE_MAX_CAP {
        s.exact(discrete_max_m(inc).unwrap(), brute, "M_n = brute force");
    }
    s.res
}

/// Runs every suite on the corpus.
pub fn run_all(c: &Corpus) -> Vec<SuiteResult> {
    vec![
        suite_roundtrip(c),
        suite_cadlag(c),
        suite_metric(c),
        suite_nested(c),
        suite_diagnostics(c),
    ]
}
