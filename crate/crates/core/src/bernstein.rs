//! Monte-Carlo harness for the data-driven Bernstein inequality
//!
//! ```text
//! P[ |Z(h)| ≥ c₁ √((x + ℓ̂)/n · V̂(h)) + c₂ (x + 1 + ℓ̂)/n · ‖h‖_{n,∞} ] ≤ c₃ e^{−x}
//! ```
//!
//! where `Z(h)` is the terminal martingale noise of a covariate function and
//! `V̂(h)` its optional variation. The classical version with the
//! predictable variation `V(h)` in place of `V̂(h)` can be checked alongside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{empirical_inner_fn, event_centered_mean_fn, optional_variation_fn};
use crate::par::{map_indices, Execution};
use crate::simulate::{noise_fn, predictable_variation, SimulatedTruth, SimulationConfig, Simulator};
use crate::stats::{wilson, Proportion};
use crate::survival::RiskSetTimeline;

const E: f64 = std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinConstants {
    pub c_ell: f64,
    pub epsilon: f64,
    pub c0: f64,
}

impl BernsteinConstants {
    pub fn new(c_ell: f64, epsilon: f64, c0: f64) -> Result<Self> {
        let c = Self { c_ell, epsilon, c0 };
        c.validate()?;
        Ok(c)
    }

    /// `c_ℓ = 2`, `ε = 1`, `c₀ = 56 / (3e)`.
    pub fn paper_numeric() -> Self {
        Self {
            c_ell: 2.0,
            epsilon: 1.0,
            c0: 56.0 / (3.0 * E),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_ell > 1.0 && self.c_ell.is_finite()) {
            return Err(Error::param(format!("c_ell must exceed 1, got {}", self.c_ell)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::param(format!("c0 must be positive, got {}", self.c0)));
        }
        if !(E * self.c0 > self.slack() * self.c_ell) {
            return Err(Error::param(format!(
                "constants need e·c0 > 2(4/3 + ε)c_ell ({} <= {})",
                E * self.c0,
                self.slack() * self.c_ell
            )));
        }
        Ok(())
    }

    /// `2 (4/3 + ε)`
    fn slack(&self) -> f64 {
        2.0 * (4.0 / 3.0 + self.epsilon)
    }

    pub fn c1(&self) -> f64 {
        2.0 * (1.0 + self.epsilon).sqrt()
    }

    pub fn c2(&self) -> f64 {
        let inner = self.c0.max(2.0 * (1.0 + self.epsilon) * (4.0 / 3.0 + self.epsilon));
        2.0 * (2.0 * inner).sqrt() + 2.0 / 3.0
    }

    /// `8 + 6 (log(1+ε))^{−c_ℓ} ζ(c_ℓ)`.
    pub fn c3(&self) -> f64 {
        8.0 + 6.0 * (1.0 + self.epsilon).ln().powf(-self.c_ell) * zeta(self.c_ell)
    }

    /// The closed form printed next to the numerical preset,
    /// `8 + (log 2)^{−2} π² + 4`. It does not agree with [`Self::c3`] and is
    /// reported for comparison only.
    pub fn c3_paper_expression() -> f64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        8.0 + pi2 / std::f64::consts::LN_2.powi(2) + 4.0
    }

    /// `ℓ̂ = c_ℓ log log( (2enV̂ + 8e(4/3+ε) x s²) / (4(e c₀ − 2(4/3+ε) c_ℓ) s²) ∨ e )`.
    pub fn loglog(&self, vhat: f64, sup: f64, x: f64, n: usize) -> f64 {
        if sup == 0.0 {
            return 0.0;
        }
        let s2 = sup * sup;
        let a = 4.0 / 3.0 + self.epsilon;
        let num = 2.0 * E * n as f64 * vhat + 8.0 * E * a * x * s2;
        let den = 4.0 * (E * self.c0 - 2.0 * a * self.c_ell) * s2;
        let arg = num / den;
        if arg <= E {
            0.0
        } else {
            self.c_ell * arg.ln().ln()
        }
    }
}

/// `ζ(s)` for `s > 1`: exact at 2, otherwise a partial sum to 10⁶ terms plus
/// the Euler–Maclaurin tail `N^{1−s}/(s−1) − N^{−s}/2`.
pub fn zeta(s: f64) -> f64 {
    if s == 2.0 {
        return std::f64::consts::PI.powi(2) / 6.0;
    }
    let n = 1_000_000u32;
    let head: f64 = (1..n).rev().map(|j| (j as f64).powf(-s)).sum();
    let nf = n as f64;
    head + nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s)
}

/// The observable upper bound on `|Z(h)|`; 0 for a column that vanishes on
/// the sample.
pub fn bound_empirical(vhat: f64, sup: f64, x: f64, n: usize, constants: &BernsteinConstants) -> Result<f64> {
    constants.validate()?;
    if !(x > 0.0) {
        return Err(Error::param("x must be positive"));
    }
    if !(sup >= 0.0) || !(vhat >= 0.0) {
        return Err(Error::param("sup norm and variance must be nonnegative"));
    }
    if sup == 0.0 {
        return Ok(0.0);
    }
    let l = constants.loglog(vhat, sup, x, n);
    let nf = n as f64;
    Ok(constants.c1() * ((x + l) / nf * vhat).sqrt() + constants.c2() * (x + 1.0 + l) / nf * sup)
}

/// Classical bound `√(2 v x / n) + x / (3n)` on the event `V ≤ v`.
pub fn bound_classical(v: f64, x: f64, n: usize) -> f64 {
    let nf = n as f64;
    (2.0 * v * x / nf).sqrt() + x / (3.0 * nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseTerminal {
    /// `Z_1(h)` as event sum minus compensator.
    pub z: f64,
    /// `Z_1(h)` as `(h_n)_h − ⟨h, h₀⟩_n`.
    pub z_via_inner: f64,
    pub vhat: f64,
    pub v: f64,
}

pub fn noise_process_terminal(truth: &SimulatedTruth, timeline: &RiskSetTimeline, values: &[f64]) -> NoiseTerminal {
    NoiseTerminal {
        z: noise_fn(truth, timeline, values),
        z_via_inner: event_centered_mean_fn(timeline, values) - empirical_inner_fn(timeline, values, &truth.h0),
        vhat: optional_variation_fn(timeline, values),
        v: predictable_variation(truth, timeline, values),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BernsteinMcConfig {
    pub simulation: SimulationConfig,
    /// Covariate columns whose noise process is tested.
    pub columns: Vec<usize>,
    pub x_grid: Vec<f64>,
    pub replications: usize,
    pub constants: BernsteinConstants,
    pub preset: Option<String>,
    pub classical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalRow {
    pub violations: Proportion,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinRow {
    pub x: f64,
    pub column: usize,
    pub violations: Proportion,
    /// `c₃ e^{−x}`
    pub theoretical: f64,
    pub pass: bool,
    /// Replications where the column vanished on the sample.
    pub degenerate: usize,
    pub ratio_min: f64,
    pub ratio_p01: f64,
    pub ratio_median: f64,
    pub classical: Option<ClassicalRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub c_ell: f64,
    pub epsilon: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c3_paper_expression: f64,
}

impl From<&BernsteinConstants> for ConstantsReport {
    fn from(c: &BernsteinConstants) -> Self {
        Self {
            c_ell: c.c_ell,
            epsilon: c.epsilon,
            c0: c.c0,
            c1: c.c1(),
            c2: c.c2(),
            c3: c.c3(),
            c3_paper_expression: BernsteinConstants::c3_paper_expression(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    pub schema: &'static str,
    pub preset: Option<String>,
    pub constants: ConstantsReport,
    pub seed: u64,
    pub n: usize,
    pub replications: usize,
    pub rows: Vec<BernsteinRow>,
    pub pass: bool,
}

struct ColumnDraw {
    z: f64,
    vhat: f64,
    v: f64,
    sup: f64,
    n: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[pos]
}

pub fn run_mc(config: &BernsteinMcConfig, exec: Execution) -> Result<BernsteinReport> {
    config.constants.validate()?;
    if config.replications == 0 {
        return Err(Error::param("replications must be positive"));
    }
    if config.x_grid.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::param("x grid values must be positive"));
    }
    let d = config.simulation.d;
    if let Some(&j) = config.columns.iter().find(|&&j| j >= d) {
        return Err(Error::param(format!("column {j} out of range for d = {d}")));
    }
    let sim = Simulator::new(&config.simulation)?;

    let draws: Vec<Result<Vec<ColumnDraw>>> = map_indices(exec, config.replications, |r| {
        let truth = sim.replicate(r as u64)?;
        let tl = RiskSetTimeline::build(&truth.dataset);
        let n = truth.dataset.len();
        Ok(config
            .columns
            .iter()
            .map(|&j| {
                let values: Vec<f64> = truth.dataset.records().iter().map(|rec| rec.covariates[j]).collect();
                let sup = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                let t = noise_process_terminal(&truth, &tl, &values);
                ColumnDraw {
                    z: t.z,
                    vhat: t.vhat,
                    v: t.v,
                    sup,
                    n,
                }
            })
            .collect())
    });
    let draws: Vec<Vec<ColumnDraw>> = draws.into_iter().collect::<Result<_>>()?;

    let c3 = config.constants.c3();
    let mut rows = Vec::new();
    for &x in &config.x_grid {
        let theoretical = c3 * (-x).exp();
        for (ci, &column) in config.columns.iter().enumerate() {
            let mut violations = 0;
            let mut trials = 0;
            let mut degenerate = 0;
            let mut ratios = Vec::with_capacity(draws.len());
            let mut classical_violations = 0;
            for rep in &draws {
                let c = &rep[ci];
                if c.sup == 0.0 {
                    degenerate += 1;
                    continue;
                }
                trials += 1;
                let bound = bound_empirical(c.vhat, c.sup, x, c.n, &config.constants)?;
                if c.z.abs() >= bound {
                    violations += 1;
                }
                ratios.push(if c.z == 0.0 { f64::INFINITY } else { bound / c.z.abs() });
                if c.z.abs() >= bound_classical(c.v, x, c.n) {
                    classical_violations += 1;
                }
            }
            if trials == 0 {
                return Err(Error::param(format!("column {column} vanished in every replication")));
            }
            ratios.sort_by(f64::total_cmp);
            let prop = wilson(violations, trials);
            let classical = config.classical.then(|| {
                let p = wilson(classical_violations, trials);
                let bound = 2.0 * (-x).exp();
                ClassicalRow {
                    violations: p,
                    bound,
                    pass: bound >= 1.0 || p.upper <= bound,
                }
            });
            rows.push(BernsteinRow {
                x,
                column,
                violations: prop,
                theoretical,
                pass: theoretical >= 1.0 || prop.upper <= theoretical,
                degenerate,
                ratio_min: ratios.first().copied().unwrap_or(f64::NAN),
                ratio_p01: quantile(&ratios, 0.01),
                ratio_median: quantile(&ratios, 0.5),
                classical,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(BernsteinReport {
        schema: crate::REPORT_SCHEMA,
        preset: config.preset.clone(),
        constants: (&config.constants).into(),
        seed: config.simulation.seed,
        n: config.simulation.n,
        replications: config.replications,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_constants() {
        let c = BernsteinConstants::paper_numeric();
        c.validate().unwrap();
        assert_eq!(c.c1(), 2.0 * std::f64::consts::SQRT_2);
        assert!((c.c2() - crate::weights::c2()).abs() < 1e-12);
        // 8 + π²/(ln 2)², independent 30-digit evaluation
        assert!((c.c3() - 28.542_288_455_223_82).abs() < 1e-10);
        assert!((BernsteinConstants::c3_paper_expression() - 32.542_288_455_223_82).abs() < 1e-10);
    }

    #[test]
    fn zeta_series_matches_known_values() {
        // ζ(3) (Apéry), ζ(4) = π⁴/90
        assert!((zeta(3.0) - 1.202_056_903_159_594_3).abs() < 1e-10);
        assert!((zeta(4.0 + 1e-15) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_constants_rejected() {
        assert!(BernsteinConstants::new(1.0, 1.0, 10.0).is_err());
        assert!(BernsteinConstants::new(2.0, 0.0, 10.0).is_err());
        // e·c0 must exceed 2(4/3+ε)c_ell = 28/3
        assert!(BernsteinConstants::new(2.0, 1.0, 3.0).is_err());
        assert!(BernsteinConstants::new(2.0, 1.0, 4.0).is_ok());
    }

    #[test]
    fn bound_examples() {
        let c = BernsteinConstants::paper_numeric();
        assert_eq!(bound_empirical(0.0, 0.0, 1.0, 100, &c).unwrap(), 0.0);
        // argument e/2 < e, so ℓ̂ = 0; independent 30-digit evaluation
        let b = bound_empirical(0.0, 1.0, 1.0, 100, &c).unwrap();
        assert!((b - 0.186_153_085_290_876_27).abs() < 1e-12, "{b}");
        let mut prev = 0.0;
        for k in 1..400 {
            let b = bound_empirical(0.37, 1.3, k as f64 * 0.05, 200, &c).unwrap();
            assert!(b >= prev);
            prev = b;
        }
        assert!(bound_empirical(0.1, 1.0, 0.0, 100, &c).is_err());
    }
}
