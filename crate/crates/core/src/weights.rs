//! Data-driven ℓ1 weights built from the observable variance and the sup-norm
//! of each dictionary element.

use serde::Serialize;

use crate::dictionary::DictionaryMatrix;
use crate::error::{Error, Result};
use crate::gram::GramSystem;

/// `2√2`
pub const C1: f64 = 2.0 * std::f64::consts::SQRT_2;

/// `4√(14/3) + 2/3`
pub fn c2() -> f64 {
    4.0 * (14.0f64 / 3.0).sqrt() + 2.0 / 3.0
}

/// Confidence level used when none is given: `log(1/0.05)`.
pub fn default_x() -> f64 {
    (1.0f64 / 0.05).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightVector {
    pub x: f64,
    pub c1: f64,
    pub c2: f64,
    pub vhat: Vec<f64>,
    pub sup: Vec<f64>,
    pub loglog: Vec<f64>,
    pub w: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Weighted ℓ1 norm `Σ ŵ_j |b_j|`.
    pub fn penalty(&self, beta: &[f64]) -> f64 {
        self.w.iter().zip(beta).map(|(w, b)| w * b.abs()).sum()
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.w.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// Weights given directly, without the data-driven construction.
    pub fn from_raw(w: Vec<f64>) -> Self {
        let m = w.len();
        Self {
            x: f64::NAN,
            c1: f64::NAN,
            c2: f64::NAN,
            vhat: vec![f64::NAN; m],
            sup: vec![f64::NAN; m],
            loglog: vec![f64::NAN; m],
            w,
        }
    }
}

/// `V̂(h_j) = (1/n) Σ_{i: δ_i = 1} (h_j(X_i) − h̄_{j,Y}(Z_i))²`, using the
/// risk-set means cached in the Gram system.
pub fn empirical_variance(dict: &DictionaryMatrix, system: &GramSystem) -> Vec<f64> {
    let tl = system.timeline();
    let n = tl.n_records() as f64;
    (0..dict.size())
        .map(|j| {
            let col = dict.column(j);
            tl.events()
                .iter()
                .map(|e| (col[e.record] - system.mean_on_interval(e.interval, j)).powi(2))
                .sum::<f64>()
                / n
        })
        .collect()
}

/// `ℓ̂ = 2 log log( (6 e n V̂ + 56 x s²) / (24 x s²) ∨ e )`, and 0 when `s = 0`.
pub fn loglog_term(vhat: f64, sup: f64, x: f64, n: usize) -> f64 {
    if sup == 0.0 {
        return 0.0;
    }
    let s2 = sup * sup;
    let arg = (6.0 * std::f64::consts::E * n as f64 * vhat + 56.0 * x * s2) / (24.0 * x * s2);
    if arg <= std::f64::consts::E {
        0.0
    } else {
        2.0 * arg.ln().ln()
    }
}

pub fn compute_weights(dict: &DictionaryMatrix, system: &GramSystem, x: f64) -> Result<WeightVector> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::param("x must be positive"));
    }
    let n = system.n();
    let nf = n as f64;
    let log_m = (dict.size() as f64).ln();
    let c2 = c2();
    let vhat = empirical_variance(dict, system);
    let sup = dict.sup_norms();
    let mut loglog = Vec::with_capacity(vhat.len());
    let mut w = Vec::with_capacity(vhat.len());
    for (&v, &s) in vhat.iter().zip(&sup) {
        let l = loglog_term(v, s, x, n);
        let wj = if s == 0.0 {
            0.0
        } else {
            C1 * ((x + log_m + l) / nf * v).sqrt() + c2 * (x + 1.0 + log_m + l) / nf * s
        };
        loglog.push(l);
        w.push(wj);
    }
    Ok(WeightVector {
        x,
        c1: C1,
        c2,
        vhat,
        sup,
        loglog,
        w,
    })
}
