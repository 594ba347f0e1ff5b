//! Both sides of the slow and fast oracle inequalities on simulated data,
//! plus searches for the cone constant `μ₃(β)` and the restricted-eigenvalue
//! constant `κ(s, 3)`.
//!
//! The infimum over `β` on the right-hand sides is witnessed at the true
//! coefficient vector, which can only make a check harder to pass. The cone
//! searches return feasible points, so `μ₃` is bounded from below and `κ`
//! from above.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dictionary::DictionaryMatrix;
use crate::error::{Error, Result};
use crate::gram::{empirical_norm_sq_fn, GramSystem};
use crate::par::{map_indices, Execution};
use crate::rng::{substream, Purpose};
use crate::simulate::{noise_vector, SimulatedTruth, SimulationConfig, Simulator};
use crate::solver::{fit, LassoFit, Multiplier, SolverOptions};
use crate::stats::{wilson, Proportion};
use crate::survival::RiskSetTimeline;
use crate::weights::{compute_weights, WeightVector};

/// Cone aperture used throughout.
pub const C0: f64 = 3.0;
/// Constant in the `1 − 29 e^{−x}` probability guarantee.
pub const GUARANTEE_CONSTANT: f64 = 29.0;

/// `1 − 29 e^{−x}`
pub fn guarantee(x: f64) -> f64 {
    1.0 - GUARANTEE_CONSTANT * (-x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl OracleCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-12,
        }
    }
}

fn residual_norm(truth: &SimulatedTruth, dict: &DictionaryMatrix, timeline: &RiskSetTimeline, beta: &[f64]) -> f64 {
    let diff: Vec<f64> = dict.evaluate(beta).iter().zip(&truth.h0).map(|(a, b)| a - b).collect();
    empirical_norm_sq_fn(timeline, &diff)
}

fn check_fit(fit: &LassoFit, multiplier: Multiplier, dict: &DictionaryMatrix, weights: &WeightVector, beta_ref: &[f64]) -> Result<()> {
    if fit.multiplier != multiplier {
        return Err(Error::param(format!(
            "this check needs a fit with kappa = {}",
            multiplier.value()
        )));
    }
    if fit.beta.len() != dict.size() || weights.len() != dict.size() || beta_ref.len() != dict.size() {
        return Err(Error::Dimension("fit, weights and reference must match the dictionary size".into()));
    }
    Ok(())
}

/// `‖h_β̂ − h₀‖²_n ≤ ‖h_{β_ref} − h₀‖²_n + 2 pen(β_ref)` for a fit with
/// multiplier 1.
pub fn slow_oracle_check(
    truth: &SimulatedTruth,
    dict: &DictionaryMatrix,
    timeline: &RiskSetTimeline,
    weights: &WeightVector,
    fit: &LassoFit,
    beta_ref: &[f64],
) -> Result<OracleCheck> {
    check_fit(fit, Multiplier::Single, dict, weights, beta_ref)?;
    let lhs = residual_norm(truth, dict, timeline, &fit.beta);
    let rhs = residual_norm(truth, dict, timeline, beta_ref) + 2.0 * weights.penalty(beta_ref);
    Ok(OracleCheck::new(lhs, rhs))
}

/// `‖h_β̂ − h₀‖²_n ≤ ‖h_{β_ref} − h₀‖²_n + 9/4 μ₃² |ŵ_J|²` for a fit with
/// multiplier 2.
pub fn fast_oracle_check(
    truth: &SimulatedTruth,
    dict: &DictionaryMatrix,
    timeline: &RiskSetTimeline,
    weights: &WeightVector,
    fit: &LassoFit,
    beta_ref: &[f64],
    mu3: f64,
) -> Result<OracleCheck> {
    check_fit(fit, Multiplier::Double, dict, weights, beta_ref)?;
    let lhs = residual_norm(truth, dict, timeline, &fit.beta);
    let rhs = residual_norm(truth, dict, timeline, beta_ref) + fast_penalty_term(weights, beta_ref, mu3);
    Ok(OracleCheck::new(lhs, rhs))
}

/// `9/4 μ² Σ_{j ∈ J(β)} ŵ_j²`; 0 for an empty support.
pub fn fast_penalty_term(weights: &WeightVector, beta: &[f64], mu: f64) -> f64 {
    let s: f64 = support(beta).iter().map(|&j| weights.w[j] * weights.w[j]).sum();
    if s == 0.0 {
        0.0
    } else {
        2.25 * mu * mu * s
    }
}

pub fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeSearchOptions {
    /// Random starting directions on the support.
    pub budget: usize,
    pub seed: u64,
    /// Also refine every sign pattern of the support by coordinate search.
    pub refine: bool,
}

impl Default for ConeSearchOptions {
    fn default() -> Self {
        Self {
            budget: 32,
            seed: 0,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    RandomConeSampling,
    CoordinateRefinement,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeSearchResult {
    pub beta_ref: Vec<f64>,
    /// Largest ratio `|b_J|₂ / ‖h_b‖_n` found over the cone — a lower bound on
    /// `μ₃(β_ref)`; `+∞` when the restricted eigenvalue vanishes.
    pub mu3_lower: f64,
    pub infinite: bool,
    pub candidates: usize,
    pub method: SearchMethod,
    /// `M ≤ 12` and every sign pattern of the support was refined.
    pub exhaustive: bool,
    /// Cone point attaining `mu3_lower`.
    pub witness: Vec<f64>,
}

/// Searches the cone `|b_{J^c}|_{1,ŵ} ≤ 3 |b_J|_{1,ŵ}` around the support of
/// `beta_ref`.
pub fn mu3_search(
    system: &GramSystem,
    weights: &WeightVector,
    beta_ref: &[f64],
    options: &ConeSearchOptions,
) -> Result<ConeSearchResult> {
    if beta_ref.len() != system.size() || weights.len() != system.size() {
        return Err(Error::Dimension("reference and weights must match the Gram size".into()));
    }
    let mut out = mu3_search_gram(system.h(), &weights.w, &support(beta_ref), options)?;
    out.beta_ref = beta_ref.to_vec();
    Ok(out)
}

/// [`mu3_search`] on an explicit Gram matrix and support.
pub fn mu3_search_gram(
    h: &DMatrix<f64>,
    w: &[f64],
    support: &[usize],
    options: &ConeSearchOptions,
) -> Result<ConeSearchResult> {
    let m = h.nrows();
    if support.is_empty() {
        return Err(Error::param("reference vector has empty support"));
    }
    if support.iter().any(|&j| j >= m) || w.len() != m {
        return Err(Error::Dimension("support or weights do not match the Gram size".into()));
    }
    let problem = ConeProblem::new(h, w, support);
    let exhaustive_possible = m <= 12 && support.len() <= 12;
    let mut best = Candidate {
        ratio: 0.0,
        b: vec![0.0; m],
    };
    let mut method = SearchMethod::RandomConeSampling;
    let mut candidates = 0;

    let diag_max = (0..m).map(|j| h[(j, j)]).fold(0.0, f64::max);
    if support.iter().any(|&j| h[(j, j)] <= 1e-13 * diag_max) {
        let mut b = vec![0.0; m];
        if let Some(&j) = support.iter().find(|&&j| h[(j, j)] <= 1e-13 * diag_max) {
            b[j] = 1.0;
        }
        return Ok(ConeSearchResult {
            beta_ref: Vec::new(),
            mu3_lower: f64::INFINITY,
            infinite: true,
            candidates: 1,
            method,
            exhaustive: exhaustive_possible,
            witness: b,
        });
    }

    let consider = |c: Candidate, from: SearchMethod, best: &mut Candidate, method: &mut SearchMethod| {
        if c.ratio > best.ratio {
            *best = c;
            *method = from;
        }
    };

    if options.refine {
        let k = support.len();
        let patterns: Vec<Vec<f64>> = if k <= 12 {
            (0..1usize << (k - 1))
                .map(|mask| (0..k).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
                .collect()
        } else {
            vec![vec![1.0; k]]
        };
        for p in patterns {
            let (c, evals) = problem.refine(p);
            candidates += evals;
            consider(c, SearchMethod::CoordinateRefinement, &mut best, &mut method);
        }
    }
    for r in 0..options.budget {
        let mut rng = substream(options.seed, Purpose::ConeSearch, r as u64);
        let bj: Vec<f64> = (0..support.len()).map(|_| rng.sample(StandardNormal)).collect();
        let c = problem.evaluate(&bj);
        candidates += 1;
        consider(c, SearchMethod::RandomConeSampling, &mut best, &mut method);
    }
    let infinite = best.ratio.is_infinite();
    Ok(ConeSearchResult {
        beta_ref: Vec::new(),
        mu3_lower: best.ratio,
        infinite,
        candidates,
        method,
        exhaustive: exhaustive_possible && options.refine,
        witness: best.b,
    })
}

#[derive(Debug, Clone)]
struct Candidate {
    ratio: f64,
    b: Vec<f64>,
}

/// For fixed `b_J`, minimises `bᵀHb` over the off-support block of the cone
/// by accelerated projected gradient; the ratio `|b_J|₂ / √(bᵀHb)` at the
/// minimiser is the best the cone offers for that `b_J`.
struct ConeProblem<'a> {
    h: &'a DMatrix<f64>,
    w: &'a [f64],
    on: Vec<usize>,
    off: Vec<usize>,
    /// Lipschitz bound for the off-support gradient.
    lipschitz: f64,
    scale: f64,
}

impl<'a> ConeProblem<'a> {
    fn new(h: &'a DMatrix<f64>, w: &'a [f64], support: &[usize]) -> Self {
        let m = h.nrows();
        let mut in_support = vec![false; m];
        support.iter().for_each(|&j| in_support[j] = true);
        let off: Vec<usize> = (0..m).filter(|&j| !in_support[j]).collect();
        let gersh = off
            .iter()
            .map(|&a| off.iter().map(|&b| h[(a, b)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let scale = (0..m).map(|j| h[(j, j)]).fold(0.0, f64::max);
        Self {
            h,
            w,
            on: support.to_vec(),
            off,
            lipschitz: 2.0 * gersh,
            scale,
        }
    }

    fn quad(&self, b: &[f64]) -> f64 {
        let m = b.len();
        let mut q = 0.0;
        for a in 0..m {
            if b[a] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for c in 0..m {
                row += self.h[(a, c)] * b[c];
            }
            q += b[a] * row;
        }
        q
    }

    fn evaluate(&self, bj: &[f64]) -> Candidate {
        let m = self.h.nrows();
        let mut b = vec![0.0; m];
        for (&j, &v) in self.on.iter().zip(bj) {
            b[j] = v;
        }
        let norm_j = bj.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_j == 0.0 {
            return Candidate { ratio: 0.0, b };
        }
        let radius = C0 * self.on.iter().zip(bj).map(|(&j, v)| self.w[j] * v.abs()).sum::<f64>();
        if !self.off.is_empty() && self.lipschitz > 0.0 {
            let c = self.minimise_off(&b, radius);
            for (&k, &v) in self.off.iter().zip(&c) {
                b[k] = v;
            }
        }
        let q = self.quad(&b);
        let b2: f64 = b.iter().map(|v| v * v).sum();
        let ratio = if q <= 1e-14 * self.scale * b2 {
            f64::INFINITY
        } else {
            norm_j / q.sqrt()
        };
        Candidate { ratio, b }
    }

    fn minimise_off(&self, b: &[f64], radius: f64) -> Vec<f64> {
        let p = self.off.len();
        // linear term H_{off,J} b_J
        let lin: Vec<f64> = self
            .off
            .iter()
            .map(|&a| self.on.iter().map(|&j| self.h[(a, j)] * b[j]).sum())
            .collect();
        let w_off: Vec<f64> = self.off.iter().map(|&k| self.w[k]).collect();
        let objective = |c: &[f64]| -> f64 {
            let mut v = 0.0;
            for (ia, &a) in self.off.iter().enumerate() {
                if c[ia] == 0.0 {
                    continue;
                }
                let mut row = 0.0;
                for (ib, &bb) in self.off.iter().enumerate() {
                    row += self.h[(a, bb)] * c[ib];
                }
                v += c[ia] * (row + 2.0 * lin[ia]);
            }
            v
        };
        let gradient = |c: &[f64], g: &mut [f64]| {
            for (ia, &a) in self.off.iter().enumerate() {
                let mut row = lin[ia];
                for (ib, &bb) in self.off.iter().enumerate() {
                    row += self.h[(a, bb)] * c[ib];
                }
                g[ia] = 2.0 * row;
            }
        };
        let step = 1.0 / self.lipschitz;
        let mut x = vec![0.0; p];
        let mut y = x.clone();
        let mut g = vec![0.0; p];
        let mut t = 1.0f64;
        let mut best = x.clone();
        let mut best_f = 0.0;
        let mut prev_f = 0.0;
        for _ in 0..2000 {
            gradient(&y, &mut g);
            let mut next: Vec<f64> = y.iter().zip(&g).map(|(v, gv)| v - step * gv).collect();
            project_weighted_l1(&mut next, &w_off, radius);
            let f = objective(&next);
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            if f > prev_f {
                // adaptive restart
                t = 1.0;
                y.clone_from(&next);
            } else {
                let mom = (t - 1.0) / t_next;
                y = next.iter().zip(&x).map(|(n, o)| n + mom * (n - o)).collect();
                t = t_next;
            }
            if f < best_f {
                best_f = f;
                best.clone_from(&next);
            }
            let done = (prev_f - f).abs() <= 1e-14 * (1.0 + f.abs());
            prev_f = f;
            x = next;
            if done {
                break;
            }
        }
        best
    }

    /// Pattern search on `b_J` from `start`, halving the step on failure.
    fn refine(&self, start: Vec<f64>) -> (Candidate, usize) {
        let mut bj = start;
        let mut cur = self.evaluate(&bj);
        let mut evals = 1;
        let mut step = 0.5;
        while step > 1e-3 && evals < 200 && cur.ratio.is_finite() {
            let mut improved = false;
            for i in 0..bj.len() {
                for dir in [1.0, -1.0] {
                    let mut trial = bj.clone();
                    trial[i] += dir * step;
                    let c = self.evaluate(&trial);
                    evals += 1;
                    if c.ratio > cur.ratio * (1.0 + 1e-12) {
                        cur = c;
                        bj = trial;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            let top = bj.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            if top > 0.0 {
                bj.iter_mut().for_each(|v| *v /= top);
            }
        }
        (cur, evals)
    }
}

/// Euclidean projection onto `{z : Σ w_k |z_k| ≤ r}`; coordinates with zero
/// weight are unconstrained.
pub fn project_weighted_l1(z: &mut [f64], w: &[f64], r: f64) {
    let size = |theta: f64, z: &[f64]| -> f64 {
        z.iter()
            .zip(w)
            .filter(|(_, &wk)| wk > 0.0)
            .map(|(v, &wk)| wk * (v.abs() - theta * wk).max(0.0))
            .sum()
    };
    if size(0.0, z) <= r {
        return;
    }
    let mut lo = 0.0;
    let mut hi = z
        .iter()
        .zip(w)
        .filter(|(_, &wk)| wk > 0.0)
        .map(|(v, &wk)| v.abs() / wk)
        .fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if size(mid, z) > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    for (v, &wk) in z.iter_mut().zip(w) {
        if wk > 0.0 {
            *v = v.signum() * (v.abs() - hi * wk).max(0.0);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReEstimate {
    /// Upper bound on `κ(s, 3)`.
    pub kappa_upper: f64,
    pub s: usize,
    pub supports_examined: usize,
    /// Every support of size at most `s` was examined.
    pub exhaustive: bool,
}

/// `min_J 1/μ₃(J)` over supports of size `1..=s`: all of them when `M ≤ 12`,
/// otherwise every singleton plus `support_budget` random supports.
pub fn re_constant(
    system: &GramSystem,
    weights: &WeightVector,
    s: usize,
    support_budget: usize,
    options: &ConeSearchOptions,
) -> Result<ReEstimate> {
    re_constant_gram(system.h(), &weights.w, s, support_budget, options)
}

pub fn re_constant_gram(
    h: &DMatrix<f64>,
    w: &[f64],
    s: usize,
    support_budget: usize,
    options: &ConeSearchOptions,
) -> Result<ReEstimate> {
    let m = h.nrows();
    if s == 0 || s > m {
        return Err(Error::param(format!("sparsity s must lie in 1..={m}, got {s}")));
    }
    let exhaustive = m <= 12;
    let supports: Vec<Vec<usize>> = if exhaustive {
        (1usize..1 << m)
            .filter(|mask| mask.count_ones() as usize <= s)
            .map(|mask| (0..m).filter(|j| mask >> j & 1 == 1).collect())
            .collect()
    } else {
        let mut out: Vec<Vec<usize>> = (0..m).map(|j| vec![j]).collect();
        let mut rng = substream(options.seed, Purpose::SupportSampling, s as u64);
        for _ in 0..support_budget {
            let size = rng.random_range(1..=s);
            let mut picked = rand::seq::index::sample(&mut rng, m, size).into_vec();
            picked.sort_unstable();
            out.push(picked);
        }
        out
    };
    let mut kappa = f64::INFINITY;
    for sup in &supports {
        // seed tied to the support so results do not depend on enumeration order
        let key = sup.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &j| {
            (h ^ j as u64).wrapping_mul(0x0100_0000_01b3)
        });
        let opts = ConeSearchOptions {
            seed: options.seed ^ key,
            ..*options
        };
        let mu = mu3_search_gram(h, w, sup, &opts)?.mu3_lower;
        kappa = kappa.min(1.0 / mu);
    }
    Ok(ReEstimate {
        kappa_upper: kappa,
        s,
        supports_examined: supports.len(),
        exhaustive,
    })
}

/// A dictionary re-expressed so that its Gram matrix is the identity:
/// `φ' = φ L^{−T}` where `H = L Lᵀ`. Coefficients map as `β' = Lᵀ β`, so
/// `φ'β' = φβ`.
#[derive(Debug, Clone)]
pub struct WhitenedDesign {
    pub dict: DictionaryMatrix,
    pub l_transpose: DMatrix<f64>,
}

impl WhitenedDesign {
    pub fn map_coefficients(&self, beta: &[f64]) -> Vec<f64> {
        (&self.l_transpose * nalgebra::DVector::from_column_slice(beta))
            .iter()
            .copied()
            .collect()
    }
}

pub fn whiten(dict: &DictionaryMatrix, system: &GramSystem) -> Result<WhitenedDesign> {
    let chol = system
        .h()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Dimension("Gram matrix is not positive definite; cannot whiten".into()))?;
    let l = chol.l();
    let lt = l.transpose();
    let inv_lt = lt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Dimension("Cholesky factor is singular".into()))?;
    let labels = (0..dict.size()).map(|j| format!("w{}", j + 1)).collect();
    Ok(WhitenedDesign {
        dict: dict.transformed(&inv_lt, labels)?,
        l_transpose: lt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// The covariates themselves.
    #[default]
    Linear,
    /// The covariates whitened per replication, so `μ₃ = 1` exactly.
    Whitened,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleMcConfig {
    pub simulation: SimulationConfig,
    pub x: f64,
    pub replications: usize,
    pub design: Design,
    /// Cone search used for the fast check on the linear design; without it
    /// only the slow check runs there.
    pub search: Option<ConeSearchOptions>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FastRow {
    #[serde(flatten)]
    pub check: OracleCheck,
    pub mu3: f64,
    /// `inf_β` of the right-hand side, available in closed form on the
    /// whitened design.
    pub rhs_infimum: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub replication: usize,
    pub events: usize,
    /// All `2|Z_j| ≤ ŵ_j`: the event on which both inequalities are
    /// guaranteed.
    pub noise_event: bool,
    pub slow: OracleCheck,
    pub slow_converged: bool,
    pub fast: Option<FastRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub slow: Proportion,
    pub fast: Option<Proportion>,
    pub fast_infimum: Option<Proportion>,
    pub noise_event: Proportion,
    /// Replications inside the noise event where an inequality failed.
    pub failures_on_event: usize,
    pub non_converged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub schema: &'static str,
    pub x: f64,
    pub design: Design,
    pub seed: u64,
    pub replications: usize,
    pub guarantee: f64,
    /// `exact` when `μ₃` is known in closed form, `indicative` when it comes
    /// from a search (a lower bound, so the fast right-hand side is too).
    pub fast_label: Option<&'static str>,
    pub summary: OracleSummary,
    pub rows: Vec<OracleRow>,
}

fn replicate_oracle(sim: &Simulator, config: &OracleMcConfig, r: usize) -> Result<(OracleRow, bool)> {
    let truth = sim.replicate(r as u64)?;
    let tl = RiskSetTimeline::build(&truth.dataset);
    let linear = DictionaryMatrix::linear(&truth.dataset);
    let (dict, beta_ref) = match config.design {
        Design::Linear => (linear, truth.beta0.clone()),
        Design::Whitened => {
            let g = GramSystem::build(&linear, &tl)?;
            let wd = whiten(&linear, &g)?;
            let b = wd.map_coefficients(&truth.beta0);
            (wd.dict, b)
        }
    };
    let system = GramSystem::build(&dict, &tl)?;
    let weights = compute_weights(&dict, &system, config.x)?;
    let z = noise_vector(&truth, &dict, &tl);
    let noise_event = z.iter().zip(&weights.w).all(|(zj, wj)| 2.0 * zj.abs() <= *wj);

    let slow_fit = fit(&system, &weights, &SolverOptions::default())?;
    let slow = slow_oracle_check(&truth, &dict, &tl, &weights, &slow_fit, &beta_ref)?;

    let mut exhaustive = false;
    let fast = match (config.design, &config.search) {
        (Design::Linear, None) => None,
        (design, search) => {
            let opts = SolverOptions {
                multiplier: Multiplier::Double,
                ..SolverOptions::default()
            };
            let fast_fit = fit(&system, &weights, &opts)?;
            let (mu3, rhs_infimum) = if design == Design::Whitened {
                let inf = beta_ref
                    .iter()
                    .zip(&weights.w)
                    .map(|(b, w)| (b * b).min(2.25 * w * w))
                    .sum::<f64>();
                exhaustive = true;
                (1.0, Some(inf))
            } else if support(&beta_ref).is_empty() {
                (0.0, None)
            } else {
                let mut o = search.expect("search options");
                o.seed ^= r as u64;
                let res = mu3_search(&system, &weights, &beta_ref, &o)?;
                exhaustive = res.exhaustive;
                (res.mu3_lower, None)
            };
            let check = fast_oracle_check(&truth, &dict, &tl, &weights, &fast_fit, &beta_ref, mu3)?;
            Some(FastRow {
                check,
                mu3,
                rhs_infimum,
                converged: fast_fit.converged,
            })
        }
    };
    Ok((
        OracleRow {
            replication: r,
            events: truth.event_count,
            noise_event,
            slow,
            slow_converged: slow_fit.converged,
            fast,
        },
        exhaustive,
    ))
}

pub fn run_mc(config: &OracleMcConfig, exec: Execution) -> Result<OracleReport> {
    if !(config.x > 0.0) {
        return Err(Error::param("x must be positive"));
    }
    if config.replications == 0 {
        return Err(Error::param("replications must be positive"));
    }
    let sim = Simulator::new(&config.simulation)?;
    let results: Vec<Result<(OracleRow, bool)>> =
        map_indices(exec, config.replications, |r| replicate_oracle(&sim, config, r));
    let mut rows = Vec::with_capacity(config.replications);
    let mut all_exhaustive = true;
    for res in results {
        let (row, ex) = res?;
        all_exhaustive &= ex;
        rows.push(row);
    }
    let n = rows.len();
    let count = |f: &dyn Fn(&OracleRow) -> bool| rows.iter().filter(|r| f(r)).count();
    let has_fast = rows.iter().all(|r| r.fast.is_some());
    let summary = OracleSummary {
        slow: wilson(count(&|r| r.slow.holds), n),
        fast: has_fast.then(|| wilson(count(&|r| r.fast.as_ref().is_some_and(|f| f.check.holds)), n)),
        fast_infimum: (has_fast && config.design == Design::Whitened).then(|| {
            wilson(
                count(&|r| {
                    r.fast
                        .as_ref()
                        .is_some_and(|f| f.check.lhs <= f.rhs_infimum.unwrap_or(f64::NAN) + 1e-12)
                }),
                n,
            )
        }),
        noise_event: wilson(count(&|r| r.noise_event), n),
        failures_on_event: count(&|r| {
            r.noise_event && (!r.slow.holds || r.fast.as_ref().is_some_and(|f| !f.check.holds))
        }),
        non_converged: count(&|r| !r.slow_converged || r.fast.as_ref().is_some_and(|f| !f.converged)),
    };
    let fast_label = has_fast.then_some(if all_exhaustive { "exact" } else { "indicative" });
    Ok(OracleReport {
        schema: crate::REPORT_SCHEMA,
        x: config.x,
        design: config.design,
        seed: config.simulation.seed,
        replications: n,
        guarantee: guarantee(config.x),
        fast_label,
        summary,
        rows,
    })
}
