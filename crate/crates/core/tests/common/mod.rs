#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skorohod::{Grid, NestedPath, StepFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random step function with at most `max_jumps` jumps on the dyadic grid k/64.
pub fn random_step(rng: &mut impl Rng, max_jumps: usize) -> StepFunction {
    let k = rng.random_range(0..=max_jumps);
    let mut grid: Vec<u32> = rand::seq::index::sample(rng, 64, k)
        .into_iter()
        .map(|i| i as u32 + 1)
        .collect();
    grid.sort_unstable();
    let bps: Vec<f64> = grid.iter().map(|&g| g as f64 / 64.0).collect();
    let vals: Vec<f64> = (0..=k)
        .map(|_| rng.random_range(-16i32..=16) as f64 / 8.0)
        .collect();
    StepFunction::new(bps, vals).unwrap()
}

/// Random nested path with at most `max_switches` t-switches on the grid k/32,
/// occasionally placing a switch at t = 1.
pub fn random_nested(rng: &mut impl Rng, max_switches: usize, max_jumps: usize) -> NestedPath {
    let k = rng.random_range(0..=max_switches);
    let mut grid: Vec<u32> = rand::seq::index::sample(rng, 32, k)
        .into_iter()
        .map(|i| i as u32 + 1)
        .collect();
    grid.sort_unstable();
    let bps: Vec<f64> = grid.iter().map(|&g| g as f64 / 32.0).collect();
    let segs: Vec<StepFunction> = (0..=k).map(|_| random_step(rng, max_jumps)).collect();
    NestedPath::new(bps, segs).unwrap()
}

/// Random grid on the multiples of 1/64 with mesh at most `mesh`.
pub fn random_grid(rng: &mut impl Rng, mesh: f64) -> Grid {
    let step = (mesh * 64.0).floor().max(1.0) as u32;
    let mut pts = vec![0u32];
    while *pts.last().unwrap() < 64 {
        let last = *pts.last().unwrap();
        let next = (last + rng.random_range(1..=step)).min(64);
        pts.push(next);
    }
    Grid::new(pts.into_iter().map(|p| p as f64 / 64.0).collect()).unwrap()
}

/// `sup min(|v(s) - v(s1)|, |v(s2) - v(s)|)` over grid indices `s1 ≤ s ≤ s2`
/// with `s2 - s1 ≤ window`, where `dist(a, b)` compares grid values.
pub fn grid_three_point(len: usize, window: usize, dist: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = 0.0f64;
    for s in 0..len {
        // reach[r] = max_{s ≤ s2 ≤ s + r} dist(s, s2)
        let mut reach = Vec::with_capacity(window + 1);
        let mut run = 0.0f64;
        for r in 0..=window {
            if s + r < len {
                run = run.max(dist(s, s + r));
            }
            reach.push(run);
        }
        for back in 0..=window.min(s) {
            let left = dist(s, s - back);
            best = best.max(left.min(reach[window - back]));
        }
    }
    best
}

/// Minimum over partitions of the grid `0, 1/n, …, 1` with every gap above
/// `delta` of the largest oscillation `osc(i, j)` on a cell `[i/n, j/n)`.
pub fn grid_sparse_min(n: usize, delta: f64, osc: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = vec![f64::INFINITY; n + 1];
    best[0] = 0.0;
    for j in 1..=n {
        for i in 0..j {
            if (j - i) as f64 / n as f64 > delta && best[i].is_finite() {
                best[j] = best[j].min(best[i].max(osc(i, j)));
            }
        }
    }
    best[n]
}

pub fn scalar_grid(x: &StepFunction, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| x.eval(i as f64 / n as f64).unwrap())
        .collect()
}

/// Index of the piece containing each grid point `i/n`.
pub fn grid_pieces(bps: &[f64], n: usize) -> Vec<usize> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            bps.iter().take_while(|&&b| b <= t).count()
        })
        .collect()
}
