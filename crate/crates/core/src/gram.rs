//! Partial least-squares geometry: the Gram matrix `H_n`, the vector `h_n`,
//! and the empirical inner product `⟨·,·⟩_n` of covariate functions.
//!
//! `H_n` is accumulated in one backward sweep over the timeline. Walking from
//! `t = 1` towards 0 the risk set only grows, so each interval's centered
//! co-moment matrix is maintained by stable one-pass (Welford) updates and
//! added with the interval length as weight. The `*_fn` helpers evaluate the
//! same integrals directly from per-interval risk sets and serve as the
//! second evaluation path.

use nalgebra::{DMatrix, DVector};

use crate::dictionary::DictionaryMatrix;
use crate::error::{Error, Result};
use crate::survival::{integrate_refined, RiskSetTimeline, StepFunction};

#[derive(Debug, Clone)]
pub struct GramSystem {
    h: DMatrix<f64>,
    hvec: DVector<f64>,
    /// Risk-set means, one row per timeline interval, one column per
    /// dictionary element.
    means: DMatrix<f64>,
    timeline: RiskSetTimeline,
}

impl GramSystem {
    pub fn build(dict: &DictionaryMatrix, timeline: &RiskSetTimeline) -> Result<Self> {
        let n = timeline.n_records();
        if dict.n_rows() != n {
            return Err(Error::Dimension(format!(
                "dictionary has {} rows but the dataset has {n} records",
                dict.n_rows()
            )));
        }
        let m = dict.size();
        let k_count = timeline.n_intervals();
        let phi = dict.phi();

        let mut h = DMatrix::<f64>::zeros(m, m);
        let mut hvec = DVector::<f64>::zeros(m);
        let mut means = DMatrix::<f64>::zeros(k_count, m);

        let mut mean = vec![0.0; m];
        let mut comoment = vec![0.0; m * m]; // upper triangle, row-major
        let mut delta = vec![0.0; m];
        let mut count = 0usize;
        let mut event_here = vec![false; n];
        for e in timeline.events() {
            event_here[e.record] = true;
        }

        for k in (0..k_count).rev() {
            let entering = timeline.exits(k);
            for &i in entering {
                count += 1;
                let r = count as f64;
                for j in 0..m {
                    delta[j] = phi[(i, j)] - mean[j];
                    mean[j] += delta[j] / r;
                }
                let f = (r - 1.0) / r;
                for a in 0..m {
                    let da = delta[a] * f;
                    if da == 0.0 {
                        continue;
                    }
                    let row = &mut comoment[a * m..(a + 1) * m];
                    for b in a..m {
                        row[b] += da * delta[b];
                    }
                }
            }
            for j in 0..m {
                means[(k, j)] = mean[j];
            }
            let len = timeline.interval_len(k);
            if count > 1 {
                for a in 0..m {
                    for b in a..m {
                        h[(a, b)] += len * comoment[a * m + b];
                    }
                }
            }
            for &i in entering {
                if event_here[i] {
                    for j in 0..m {
                        hvec[j] += phi[(i, j)] - mean[j];
                    }
                }
            }
        }

        let inv_n = 1.0 / n as f64;
        for a in 0..m {
            for b in a..m {
                let v = h[(a, b)] * inv_n;
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        hvec *= inv_n;
        Ok(Self {
            h,
            hvec,
            means,
            timeline: timeline.clone(),
        })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn hvec(&self) -> &DVector<f64> {
        &self.hvec
    }

    pub fn size(&self) -> usize {
        self.hvec.len()
    }

    pub fn n(&self) -> usize {
        self.timeline.n_records()
    }

    pub fn timeline(&self) -> &RiskSetTimeline {
        &self.timeline
    }

    /// `h̄_{j,Y}` on timeline interval `k`.
    pub fn mean_on_interval(&self, k: usize, j: usize) -> f64 {
        self.means[(k, j)]
    }

    pub fn centered_mean(&self, j: usize) -> StepFunction {
        StepFunction::new(
            self.timeline.breakpoints().to_vec(),
            self.means.column(j).iter().copied().collect(),
        )
        .expect("timeline breakpoints form a valid partition")
    }

    /// Coordinates whose diagonal entry vanishes (relative to the largest one).
    pub fn dead_columns(&self) -> Vec<usize> {
        let scale = self.h.diagonal().iter().fold(0.0, |a: f64, &b| a.max(b));
        (0..self.size())
            .filter(|&j| self.h[(j, j)] <= 1e-13 * scale || self.h[(j, j)] == 0.0)
            .collect()
    }

    /// `βᵀ H_n β = ‖h_β‖²_n`.
    pub fn empirical_norm_sq(&self, beta: &[f64]) -> f64 {
        self.inner(beta, beta)
    }

    /// `βᵀ H_n β' = ⟨h_β, h_β'⟩_n`.
    pub fn inner(&self, beta: &[f64], other: &[f64]) -> f64 {
        let b = DVector::from_column_slice(beta);
        let o = DVector::from_column_slice(other);
        b.dot(&(&self.h * o))
    }

    /// `R_n(β) = βᵀ H_n β − 2 βᵀ h_n`.
    pub fn objective(&self, beta: &[f64]) -> f64 {
        let b = DVector::from_column_slice(beta);
        b.dot(&(&self.h * &b)) - 2.0 * b.dot(&self.hvec)
    }

    /// Writes `H_n` followed by a final row holding `h_n`.
    pub fn dump_csv(&self, labels: &[String], path: &std::path::Path) -> Result<()> {
        let mut out = String::from("row");
        for l in labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (a, label) in labels.iter().enumerate() {
            out.push_str(&format!("H:{label}"));
            for b in 0..self.size() {
                out.push_str(&format!(",{:?}", self.h[(a, b)]));
            }
            out.push('\n');
        }
        out.push_str("h_n");
        for v in self.hvec.iter() {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// `⟨u, v⟩_n` for two functions given by their evaluations, integrated
/// directly over each interval's risk set.
pub fn empirical_inner_fn(timeline: &RiskSetTimeline, u: &[f64], v: &[f64]) -> f64 {
    let n = timeline.n_records();
    assert!(u.len() == n && v.len() == n, "one value per record");
    let mu = timeline.interval_means(u);
    let mv = timeline.interval_means(v);
    let mut total = 0.0;
    for k in 0..timeline.n_intervals() {
        let s: f64 = timeline
            .risk_set(k)
            .iter()
            .map(|&i| (u[i] - mu[k]) * (v[i] - mv[k]))
            .sum();
        total += timeline.interval_len(k) * s;
    }
    total / n as f64
}

/// `‖v‖²_n = (1/n) Σ_i ∫ (v_i − v̄_Y(t))² Y^i_t dt`.
pub fn empirical_norm_sq_fn(timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    empirical_inner_fn(timeline, values, values)
}

/// `(1/n) Σ_{events} (v_i − v̄_Y(Z_i))`, the `h_n`-coordinate of an
/// arbitrary function.
pub fn event_centered_mean_fn(timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    let means = timeline.interval_means(values);
    let s: f64 = timeline
        .events()
        .iter()
        .map(|e| values[e.record] - means[e.interval])
        .sum();
    s / timeline.n_records() as f64
}

/// Optional variation `(1/n) Σ_{events} (v_i − v̄_Y(Z_i))²`.
pub fn optional_variation_fn(timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    let means = timeline.interval_means(values);
    let s: f64 = timeline
        .events()
        .iter()
        .map(|e| (values[e.record] - means[e.interval]).powi(2))
        .sum();
    s / timeline.n_records() as f64
}

/// Partial least-squares criterion of a covariate function:
/// `‖v‖²_n − (2/n) Σ_i ∫ (v_i − v̄_Y) dN^i`.
pub fn partial_least_squares_fn(timeline: &RiskSetTimeline, values: &[f64]) -> f64 {
    empirical_norm_sq_fn(timeline, values) - 2.0 * event_centered_mean_fn(timeline, values)
}

/// `Σ_i ∫_0^1 φ(t) (v_i − v̄_Y(t)) Y^i_t dt`, which vanishes identically.
/// Evaluated on the common refinement of the timeline and `φ`.
pub fn check_orthogonality(timeline: &RiskSetTimeline, values: &[f64], phi: &StepFunction) -> f64 {
    let means = timeline.interval_means(values);
    let centered_sums: Vec<f64> = (0..timeline.n_intervals())
        .map(|k| timeline.risk_set(k).iter().map(|&i| values[i] - means[k]).sum())
        .collect();
    let step = StepFunction::new(timeline.breakpoints().to_vec(), centered_sums)
        .expect("timeline breakpoints form a valid partition");
    integrate_refined(&[&step, phi])
}

/// Natural magnitude of the terms summed by [`check_orthogonality`].
pub fn orthogonality_scale(timeline: &RiskSetTimeline, values: &[f64], phi: &StepFunction) -> f64 {
    let means = timeline.interval_means(values);
    let abs_sums: Vec<f64> = (0..timeline.n_intervals())
        .map(|k| timeline.risk_set(k).iter().map(|&i| (values[i] - means[k]).abs() + values[i].abs()).sum())
        .collect();
    let step = StepFunction::new(timeline.breakpoints().to_vec(), abs_sums)
        .expect("timeline breakpoints form a valid partition");
    let abs_phi = StepFunction::new(
        phi.breakpoints().to_vec(),
        phi.values().iter().map(|v| v.abs()).collect(),
    )
    .expect("same partition");
    integrate_refined(&[&step, &abs_phi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::DictionaryKind;
    use crate::survival::{SurvivalDataset, SurvivalRecord};
    use proptest::prelude::*;

    fn micro() -> (SurvivalDataset, DictionaryMatrix, RiskSetTimeline) {
        let data = SurvivalDataset::new(vec![
            SurvivalRecord::new(0.5, true, vec![0.0]),
            SurvivalRecord::new(1.0, true, vec![1.0]),
        ])
        .unwrap();
        let dict = DictionaryMatrix::linear(&data);
        let tl = RiskSetTimeline::build(&data);
        (data, dict, tl)
    }

    #[test]
    fn micro_instance() {
        let (_, dict, tl) = micro();
        let g = GramSystem::build(&dict, &tl).unwrap();
        assert!((g.h()[(0, 0)] - 0.125).abs() < 1e-15);
        assert!((g.hvec()[0] + 0.25).abs() < 1e-15);
        assert!((g.empirical_norm_sq(&[1.0]) - 0.125).abs() < 1e-15);
        assert!((empirical_norm_sq_fn(&tl, &[0.0, 1.0]) - 0.125).abs() < 1e-15);
        assert!((g.objective(&[1.0]) - 0.625).abs() < 1e-15);
        assert!((g.objective(&[-2.0]) + 0.5).abs() < 1e-15);
        assert_eq!(g.objective(&[0.0]), 0.0);
        assert_eq!(g.centered_mean(0).eval(0.3), 0.5);
    }

    #[test]
    fn single_record_is_self_centered() {
        let data = SurvivalDataset::new(vec![SurvivalRecord::new(0.7, true, vec![2.5, -1.0])]).unwrap();
        let tl = RiskSetTimeline::build(&data);
        let g = GramSystem::build(&DictionaryMatrix::linear(&data), &tl).unwrap();
        assert!(g.h().iter().all(|&v| v == 0.0));
        assert!(g.hvec().iter().all(|&v| v == 0.0));
        assert_eq!(check_orthogonality(&tl, &[3.0], &StepFunction::constant(2.0)), 0.0);
    }

    #[test]
    fn duplicate_columns_share_entries() {
        let data = SurvivalDataset::new(vec![
            SurvivalRecord::new(0.2, true, vec![1.0]),
            SurvivalRecord::new(0.6, false, vec![-2.0]),
            SurvivalRecord::new(0.9, true, vec![0.5]),
        ])
        .unwrap();
        let tl = RiskSetTimeline::build(&data);
        let col = [1.0, -2.0, 0.5];
        let phi = DMatrix::from_fn(3, 2, |i, _| col[i]);
        let dict = DictionaryMatrix::new(phi, vec!["a".into(), "b".into()], DictionaryKind::UserSupplied).unwrap();
        let g = GramSystem::build(&dict, &tl).unwrap();
        assert!((g.h()[(0, 0)] - g.h()[(0, 1)]).abs() < 1e-15);
        assert!((g.h()[(1, 1)] - g.h()[(0, 1)]).abs() < 1e-15);
        assert_eq!(g.hvec()[0], g.hvec()[1]);
    }

    #[test]
    fn constant_values_have_zero_norm() {
        let (_, _, tl) = micro();
        assert_eq!(empirical_norm_sq_fn(&tl, &[4.0, 4.0]), 0.0);
    }

    #[test]
    fn dead_column_detected() {
        let data = SurvivalDataset::new(vec![
            SurvivalRecord::new(0.3, true, vec![0.0, 1.0]),
            SurvivalRecord::new(0.8, true, vec![0.0, 2.0]),
        ])
        .unwrap();
        let tl = RiskSetTimeline::build(&data);
        let g = GramSystem::build(&DictionaryMatrix::linear(&data), &tl).unwrap();
        assert_eq!(g.dead_columns(), vec![0]);
    }

    fn random_instance() -> impl Strategy<Value = (Vec<(u32, bool)>, Vec<f64>, Vec<f64>)> {
        (3usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec((1u32..=40, any::<bool>()), n),
                prop::collection::vec(-3.0f64..3.0, 2 * n),
                prop::collection::vec(-2.0f64..2.0, 2),
            )
        })
    }

    proptest! {
        #[test]
        fn quadratic_form_matches_direct_integration((rows, x, beta) in random_instance()) {
            let n = rows.len();
            let data = SurvivalDataset::new(rows.iter().enumerate().map(|(i, (t, e))| {
                SurvivalRecord::new(*t as f64 / 40.0, *e, vec![x[2 * i], x[2 * i + 1]])
            }).collect()).unwrap();
            let tl = RiskSetTimeline::build(&data);
            let dict = DictionaryMatrix::linear(&data);
            let g = GramSystem::build(&dict, &tl).unwrap();
            let q = g.empirical_norm_sq(&beta);
            let direct = empirical_norm_sq_fn(&tl, &dict.evaluate(&beta));
            prop_assert!((q - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
            prop_assert!(q >= -1e-12);
            let hn = event_centered_mean_fn(&tl, &dict.evaluate(&beta));
            let lin = beta[0] * g.hvec()[0] + beta[1] * g.hvec()[1];
            prop_assert!((hn - lin).abs() <= 1e-10 * (1.0 + hn.abs()));
            prop_assert_eq!(g.n(), n);
        }

        #[test]
        fn h_and_hvec_permutation_invariant((rows, x, _b) in random_instance(), rot in 0usize..30) {
            let n = rows.len();
            let recs: Vec<SurvivalRecord> = rows.iter().enumerate().map(|(i, (t, e))| {
                SurvivalRecord::new(*t as f64 / 40.0, *e, vec![x[2 * i], x[2 * i + 1]])
            }).collect();
            let mut rotated = recs.clone();
            rotated.rotate_left(rot % n);
            let build = |r: Vec<SurvivalRecord>| {
                let d = SurvivalDataset::new(r).unwrap();
                GramSystem::build(&DictionaryMatrix::linear(&d), &RiskSetTimeline::build(&d)).unwrap()
            };
            let a = build(recs);
            let b = build(rotated);
            for (u, v) in a.h().iter().zip(b.h().iter()) {
                prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
            }
            for (u, v) in a.hvec().iter().zip(b.hvec().iter()) {
                prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
            }
        }
    }
}
