//! Cyclic coordinate descent for `bᵀHb − 2bᵀh + κ Σ ŵ_j |b_j|` over `ℝ^M`
//! or the nonnegative orthant, with a KKT certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramSystem;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    #[default]
    Unconstrained,
    Nonnegative,
}

/// Penalty multiplier: `Single` minimizes `R_n + pen`, `Double` minimizes
/// `R_n + 2 pen`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Multiplier {
    #[default]
    Single,
    Double,
}

impl Multiplier {
    pub fn value(self) -> f64 {
        match self {
            Multiplier::Single => 1.0,
            Multiplier::Double => 2.0,
        }
    }

    pub fn from_int(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Multiplier::Single),
            2 => Ok(Multiplier::Double),
            _ => Err(Error::param(format!("kappa must be 1 or 2, got {k}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub multiplier: Multiplier,
    pub constraint: Constraint,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            multiplier: Multiplier::Single,
            constraint: Constraint::Unconstrained,
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub active_set: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub kkt_max_violation: f64,
    pub multiplier: Multiplier,
    pub constraint: Constraint,
    pub converged: bool,
    pub sweeps: usize,
    /// Coordinates pinned at zero because `H_jj = 0`.
    pub pinned: Vec<usize>,
    /// Pinned coordinates whose zero-gradient condition does not hold.
    pub pinned_violations: Vec<usize>,
}

impl LassoFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

/// Penalized objective value.
pub fn penalized_objective(system: &GramSystem, weights: &WeightVector, multiplier: Multiplier, beta: &[f64]) -> f64 {
    system.objective(beta) + multiplier.value() * weights.penalty(beta)
}

fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Largest violation of the first-order conditions at `beta`.
pub fn kkt_check(
    system: &GramSystem,
    weights: &WeightVector,
    beta: &[f64],
    multiplier: Multiplier,
    constraint: Constraint,
) -> f64 {
    let dead = system.dead_columns();
    kkt_violations(system, weights, beta, multiplier, constraint, &dead)
        .into_iter()
        .fold(0.0, f64::max)
}

fn kkt_violations(
    system: &GramSystem,
    weights: &WeightVector,
    beta: &[f64],
    multiplier: Multiplier,
    constraint: Constraint,
    dead: &[usize],
) -> Vec<f64> {
    let h = system.h();
    let hvec = system.hvec();
    let kappa = multiplier.value();
    (0..beta.len())
        .map(|j| {
            let hb: f64 = (0..beta.len()).map(|k| h[(j, k)] * beta[k]).sum();
            let grad = 2.0 * (hb - hvec[j]);
            let pen = kappa * weights.w[j];
            if dead.contains(&j) && beta[j] == 0.0 {
                // Pinned: the objective does not depend on b_j through H.
                return (grad.abs() - pen).max(0.0);
            }
            match (constraint, beta[j]) {
                (Constraint::Unconstrained, b) if b == 0.0 => (grad.abs() - pen).max(0.0),
                (Constraint::Nonnegative, b) if b == 0.0 => (-(grad + pen)).max(0.0),
                (_, b) => (grad + pen * b.signum()).abs(),
            }
        })
        .collect()
}

pub fn fit(system: &GramSystem, weights: &WeightVector, options: &SolverOptions) -> Result<LassoFit> {
    fit_from(system, weights, options, &vec![0.0; system.size()])
}

/// Coordinate descent started at `start` (warm start).
pub fn fit_from(
    system: &GramSystem,
    weights: &WeightVector,
    options: &SolverOptions,
    start: &[f64],
) -> Result<LassoFit> {
    let m = system.size();
    if weights.len() != m || start.len() != m {
        return Err(Error::Dimension(format!(
            "system has {m} coordinates, weights {} and start {}",
            weights.len(),
            start.len()
        )));
    }
    if !(options.tol > 0.0) {
        return Err(Error::param("tol must be positive"));
    }
    if let Some(j) = weights.w.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::param(format!("weight {j} is negative or not finite")));
    }
    let h = system.h();
    let hvec = system.hvec();
    let kappa = options.multiplier.value();
    let dead = system.dead_columns();

    let mut beta = start.to_vec();
    for &j in &dead {
        beta[j] = 0.0;
    }
    if options.constraint == Constraint::Nonnegative {
        beta.iter_mut().for_each(|b| *b = b.max(0.0));
    }
    // hb = H β, maintained incrementally and refreshed every sweep.
    let mut hb: Vec<f64> = (0..m).map(|j| (0..m).map(|k| h[(j, k)] * beta[k]).sum()).collect();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut kkt = f64::INFINITY;
    while sweeps < options.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            if dead.contains(&j) {
                continue;
            }
            let hjj = h[(j, j)];
            let partial = hvec[j] - (hb[j] - hjj * beta[j]);
            let mut next = soft_threshold(partial, kappa * weights.w[j] / 2.0) / hjj;
            if options.constraint == Constraint::Nonnegative {
                next = next.max(0.0);
            }
            let change = next - beta[j];
            if change != 0.0 {
                for (k, v) in hb.iter_mut().enumerate() {
                    *v += h[(k, j)] * change;
                }
                beta[j] = next;
                max_change = max_change.max(change.abs());
            }
        }
        for (j, v) in hb.iter_mut().enumerate() {
            *v = (0..m).map(|k| h[(j, k)] * beta[k]).sum();
        }
        trace.push(penalized_objective(system, weights, options.multiplier, &beta));
        kkt = kkt_violations(system, weights, &beta, options.multiplier, options.constraint, &dead)
            .iter()
            .enumerate()
            .filter(|(j, _)| !dead.contains(j))
            .fold(0.0, |a, (_, &v)| a.max(v));
        let scale = 1.0 + beta.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
        if max_change < options.tol * scale && kkt < options.tol {
            converged = true;
            break;
        }
    }

    let all = kkt_violations(system, weights, &beta, options.multiplier, options.constraint, &dead);
    let pinned_violations: Vec<usize> = dead.iter().copied().filter(|&j| all[j] > options.tol).collect();
    Ok(LassoFit {
        active_set: (0..m).filter(|&j| beta[j] != 0.0).collect(),
        beta,
        objective_trace: trace,
        kkt_max_violation: kkt,
        multiplier: options.multiplier,
        constraint: options.constraint,
        converged,
        sweeps,
        pinned: dead,
        pinned_violations,
    })
}

/// Warm-started fits along a descending grid of multipliers applied to `ŵ`.
pub fn fit_path(
    system: &GramSystem,
    weights: &WeightVector,
    scales: &[f64],
    options: &SolverOptions,
) -> Result<Vec<LassoFit>> {
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::param("path scales must be positive and finite"));
    }
    if scales.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param("path scales must be sorted in descending order"));
    }
    let mut fits = Vec::with_capacity(scales.len());
    let mut start = vec![0.0; system.size()];
    for &s in scales {
        let f = fit_from(system, &weights.scaled(s), options, &start)?;
        start = f.beta.clone();
        fits.push(f);
    }
    Ok(fits)
}
