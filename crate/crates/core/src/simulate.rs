//! Ground-truth generator for the additive hazards model
//! `α₀(t, x) = λ₀(t) + xᵀβ₀` with right censoring.
//!
//! The baseline is a step function, so each cumulative hazard is piecewise
//! linear and event times are drawn by exact inversion. Because the truth is
//! known, the unobservable quantities (compensators, predictable variation,
//! the martingale noise) can be evaluated exactly.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dictionary::DictionaryMatrix;
use crate::error::{Error, Result};
use crate::gram::event_centered_mean_fn;
use crate::rng::{substream, Purpose};
use crate::survival::{RiskSetTimeline, StepFunction, SurvivalDataset, SurvivalRecord};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Baseline {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl Baseline {
    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![value],
        }
    }

    pub fn to_step(&self) -> Result<StepFunction> {
        StepFunction::new(self.breakpoints.clone(), self.values.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovariateModel {
    /// Standard normal marginals with correlation `rho^|j-k|`, clipped to
    /// `[-clip, clip]` when a clip is given.
    Gaussian { rho: f64, clip: Option<f64> },
    Rademacher,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Censoring {
    Uniform { c_max: f64 },
    Exponential { rate: f64 },
    /// Only the end of study at `t = 1`.
    Administrative,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub d: usize,
    pub beta0: Vec<f64>,
    pub baseline: Baseline,
    pub covariates: CovariateModel,
    pub censoring: Censoring,
    #[serde(default)]
    pub seed: u64,
    /// Largest tolerated probability that a covariate draw gives a negative
    /// hazard somewhere on `[0, 1]`; such draws are redrawn.
    #[serde(default = "default_max_negative_rate")]
    pub max_negative_rate: f64,
}

fn default_max_negative_rate() -> f64 {
    0.25
}

/// Uniform censoring bound giving about 30% censored records under
/// [`SimulationConfig::default`].
pub const DEFAULT_CENSORING_CMAX: f64 = 2.5;

impl Default for SimulationConfig {
    fn default() -> Self {
        let d = 50;
        let mut beta0 = vec![0.0; d];
        beta0[0] = 1.0;
        beta0[1] = 1.0;
        beta0[2] = -0.5;
        Self {
            n: 200,
            d,
            beta0,
            baseline: Baseline::constant(2.0),
            covariates: CovariateModel::Gaussian {
                rho: 0.3,
                clip: Some(3.0),
            },
            censoring: Censoring::Uniform {
                c_max: DEFAULT_CENSORING_CMAX,
            },
            seed: 0,
            max_negative_rate: default_max_negative_rate(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<StepFunction> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Config("n and d must be positive".into()));
        }
        if self.beta0.len() != self.d {
            return Err(Error::Config(format!("beta0 has {} entries, d = {}", self.beta0.len(), self.d)));
        }
        if self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("beta0 must be finite".into()));
        }
        let baseline = self.baseline.to_step().map_err(|e| Error::Config(format!("baseline: {e}")))?;
        if baseline.min_value() < 0.0 {
            return Err(Error::Config("baseline hazard must be nonnegative".into()));
        }
        match &self.covariates {
            CovariateModel::Gaussian { rho, clip } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::Config(format!("correlation {rho} outside (-1, 1)")));
                }
                if clip.is_some_and(|c| !(c > 0.0)) {
                    return Err(Error::Config("clip must be positive".into()));
                }
            }
            CovariateModel::Rademacher => {}
        }
        match self.censoring {
            Censoring::Uniform { c_max } if !(c_max > 0.0) => {
                return Err(Error::Config("c_max must be positive".into()))
            }
            Censoring::Exponential { rate } if !(rate > 0.0) => {
                return Err(Error::Config("censoring rate must be positive".into()))
            }
            _ => {}
        }
        Ok(baseline)
    }

    fn draw_covariates<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.covariates {
            CovariateModel::Gaussian { rho, clip } => {
                let s = (1.0 - rho * rho).sqrt();
                let mut x = Vec::with_capacity(self.d);
                let mut prev = 0.0;
                for j in 0..self.d {
                    let z: f64 = StandardNormal.sample(rng);
                    let v = if j == 0 { z } else { rho * prev + s * z };
                    prev = v;
                    x.push(v);
                }
                if let Some(c) = clip {
                    x.iter_mut().for_each(|v| *v = v.clamp(-c, *c));
                }
                x
            }
            CovariateModel::Rademacher => (0..self.d)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        }
    }

    fn draw_censoring<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.censoring {
            Censoring::Uniform { c_max } => (1.0 - rng.random::<f64>()) * c_max,
            Censoring::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Censoring::Administrative => f64::INFINITY,
        }
    }

    fn linear_predictor(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.beta0).map(|(a, b)| a * b).sum()
    }

    /// Fraction of covariate draws (out of 10,000 from a fixed substream)
    /// whose hazard would be negative somewhere on `[0, 1]`.
    pub fn negative_hazard_rate(&self) -> Result<f64> {
        let floor = self.validate()?.min_value();
        let mut rng = substream(self.seed, Purpose::HazardPilot, 0);
        let draws = 10_000;
        let bad = (0..draws)
            .filter(|_| floor + self.linear_predictor(&self.draw_covariates(&mut rng)) < 0.0)
            .count();
        Ok(bad as f64 / draws as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedTruth {
    pub dataset: SurvivalDataset,
    pub baseline: StepFunction,
    /// `h₀(X_i) = X_iᵀβ₀`.
    pub h0: Vec<f64>,
    pub beta0: Vec<f64>,
    /// Latent event times; `+∞` when the cumulative hazard stays below the
    /// exponential draw on `[0, 1]`.
    pub latent_times: Vec<f64>,
    pub event_count: usize,
    /// Covariate draws discarded because they produced a negative hazard.
    pub rejections: usize,
}

impl SimulatedTruth {
    /// `t ↦ α₀(t, X_i)`.
    pub fn alpha0(&self, i: usize) -> StepFunction {
        let b = &self.baseline;
        StepFunction::new(
            b.breakpoints().to_vec(),
            b.values().iter().map(|v| v + self.h0[i]).collect(),
        )
        .expect("shifted baseline")
    }
}

/// Time at which the piecewise-linear cumulative hazard reaches `target`.
fn invert_cumulative_hazard(baseline: &StepFunction, shift: f64, target: f64) -> f64 {
    let b = baseline.breakpoints();
    let mut remaining = target;
    for (k, v) in baseline.values().iter().enumerate() {
        let rate = v + shift;
        let len = b[k + 1] - b[k];
        if rate > 0.0 {
            if rate * len >= remaining {
                return b[k] + remaining / rate;
            }
            remaining -= rate * len;
        }
    }
    f64::INFINITY
}

/// A validated configuration, ready to draw replications.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimulationConfig,
    baseline: StepFunction,
    negative_rate: f64,
}

impl Simulator {
    /// Validates the config and rejects it when too many covariate draws
    /// would give a negative hazard.
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        let baseline = config.validate()?;
        let negative_rate = config.negative_hazard_rate()?;
        if negative_rate > config.max_negative_rate {
            return Err(Error::Config(format!(
                "hazard is negative for {:.1}% of covariate draws (limit {:.1}%); raise the baseline or shrink beta0",
                100.0 * negative_rate,
                100.0 * config.max_negative_rate
            )));
        }
        Ok(Self {
            config: config.clone(),
            baseline,
            negative_rate,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// Estimated probability that a covariate draw is redrawn.
    pub fn negative_rate(&self) -> f64 {
        self.negative_rate
    }

    /// One dataset drawn from the substream of replication `replication`.
    pub fn replicate(&self, replication: u64) -> Result<SimulatedTruth> {
        let config = &self.config;
        let mut rng = substream(config.seed, Purpose::Simulation, replication);
        let floor = self.baseline.min_value();
        let mut records = Vec::with_capacity(config.n);
        let mut h0 = Vec::with_capacity(config.n);
        let mut latent = Vec::with_capacity(config.n);
        let mut rejections = 0;
        for _ in 0..config.n {
            let (x, lp) = loop {
                let x = config.draw_covariates(&mut rng);
                let lp = config.linear_predictor(&x);
                if floor + lp >= 0.0 {
                    break (x, lp);
                }
                rejections += 1;
            };
            let e: f64 = Exp1.sample(&mut rng);
            let t = invert_cumulative_hazard(&self.baseline, lp, e);
            let c = config.draw_censoring(&mut rng);
            let end = c.min(1.0);
            let event = t <= end;
            let z = t.min(end).max(f64::MIN_POSITIVE);
            records.push(SurvivalRecord::new(z, event, x));
            h0.push(lp);
            latent.push(t);
        }
        let dataset = SurvivalDataset::new(records)?;
        let event_count = dataset.event_count();
        Ok(SimulatedTruth {
            dataset,
            baseline: self.baseline.clone(),
            h0,
            beta0: config.beta0.clone(),
            latent_times: latent,
            event_count,
            rejections,
        })
    }
}

pub fn simulate(config: &SimulationConfig) -> Result<SimulatedTruth> {
    Simulator::new(config)?.replicate(0)
}

/// `Σ_i ∫ (v_i − v̄_Y) α₀(t, X_i) Y^i_t dt / n`: the compensator of the
/// event sum of a covariate function.
pub fn compensator_fn(truth: &SimulatedTruth, timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    let means = timeline.interval_means(values);
    let b = timeline.breakpoints();
    let mut total = 0.0;
    for k in 0..timeline.n_intervals() {
        let base = truth.baseline.integral_between(b[k], b[k + 1]);
        let len = timeline.interval_len(k);
        total += timeline
            .risk_set(k)
            .iter()
            .map(|&i| (values[i] - means[k]) * (base + truth.h0[i] * len))
            .sum::<f64>();
    }
    total / timeline.n_records() as f64
}

/// `V(h) = (1/n) Σ_i ∫ (v_i − v̄_Y)² α₀(t, X_i) Y^i_t dt` at `t = 1`.
pub fn predictable_variation(truth: &SimulatedTruth, timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    let means = timeline.interval_means(values);
    let b = timeline.breakpoints();
    let mut total = 0.0;
    for k in 0..timeline.n_intervals() {
        let base = truth.baseline.integral_between(b[k], b[k + 1]);
        let len = timeline.interval_len(k);
        total += timeline
            .risk_set(k)
            .iter()
            .map(|&i| (values[i] - means[k]).powi(2) * (base + truth.h0[i] * len))
            .sum::<f64>();
    }
    total / timeline.n_records() as f64
}

/// Terminal value of the martingale noise `(1/n) Σ_i ∫ (v_i − v̄_Y) dM^i`,
/// computed as event sum minus compensator.
pub fn noise_fn(truth: &SimulatedTruth, timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    event_centered_mean_fn(timeline, values) - compensator_fn(truth, timeline, values)
}

/// `Z_n`, one martingale noise term per dictionary element.
pub fn noise_vector(truth: &SimulatedTruth, dict: &DictionaryMatrix, timeline: &RiskSetTimeline) -> Vec<f64> {
    (0..dict.size()).map(|j| noise_fn(truth, timeline, dict.column(j))).collect()
}
