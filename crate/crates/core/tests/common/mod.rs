#![allow(dead_code)]

use aalen_core::dictionary::{DictionaryKind, DictionaryMatrix};
use aalen_core::survival::{StepFunction, SurvivalDataset, SurvivalRecord};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dataset with `n` records and `d` Gaussian-ish covariates. Times are
/// drawn from a coarse grid so ties occur.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> SurvivalDataset {
    let records = (0..n)
        .map(|_| {
            let time = if rng.random_bool(0.3) {
                rng.random_range(1..=20) as f64 / 20.0
            } else {
                rng.random_range(1e-3..=1.0)
            };
            let covariates = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            SurvivalRecord::new(time, rng.random_bool(0.7), covariates)
        })
        .collect();
    SurvivalDataset::new(records).unwrap()
}

/// Dictionary mixing raw covariates with a few nonlinear transforms.
pub fn random_dictionary(rng: &mut ChaCha8Rng, data: &SurvivalDataset, m: usize) -> DictionaryMatrix {
    let d = data.dim();
    let picks: Vec<(usize, u8)> = (0..m).map(|_| (rng.random_range(0..d), rng.random_range(0..3))).collect();
    let phi = DMatrix::from_fn(data.len(), m, |i, j| {
        let (c, kind) = picks[j];
        let v = data.records()[i].covariates[c];
        match kind {
            0 => v,
            1 => v * v - 1.0,
            _ => (v > 0.0) as u8 as f64,
        }
    });
    let labels = (0..m).map(|j| format!("f{j}")).collect();
    DictionaryMatrix::new(phi, labels, DictionaryKind::UserSupplied).unwrap()
}

pub fn random_step(rng: &mut ChaCha8Rng) -> StepFunction {
    let pieces = rng.random_range(1..12);
    let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut b = vec![0.0];
    b.extend(cuts.into_iter().filter(|c| *c > 0.0));
    b.push(1.0);
    let values = (0..b.len() - 1).map(|_| rng.random_range(-3.0..3.0)).collect();
    StepFunction::new(b, values).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Grid search followed by compass refinement of the penalised objective;
/// `box_radius` bounds every coordinate of the minimiser.
pub fn brute_force_minimiser(objective: impl Fn(&[f64]) -> f64, m: usize, box_radius: f64, nonneg: bool) -> (Vec<f64>, f64) {
    let lo = if nonneg { 0.0 } else { -box_radius };
    let points = 41usize;
    let step0 = (box_radius - lo) / (points - 1) as f64;
    let mut best = vec![0.0; m];
    let mut best_f = objective(&best);
    let mut idx = vec![0usize; m];
    'grid: loop {
        let b: Vec<f64> = idx.iter().map(|&k| lo + k as f64 * step0).collect();
        let f = objective(&b);
        if f < best_f {
            best_f = f;
            best = b;
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < points {
                continue 'grid;
            }
            *slot = 0;
        }
        break;
    }
    let mut step = step0;
    while step > 1e-12 * box_radius.max(1.0) {
        let mut improved = false;
        for j in 0..m {
            for dir in [1.0, -1.0] {
                let mut t = best.clone();
                t[j] += dir * step;
                if nonneg && t[j] < 0.0 {
                    t[j] = 0.0;
                }
                let f = objective(&t);
                if f < best_f {
                    best_f = f;
                    best = t;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_f)
}
