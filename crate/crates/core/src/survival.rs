//! Right-censored observations, the at-risk timeline, and exact integration of
//! piecewise-constant functions of study time on `[0, 1]`.
//!
//! Intervals are left-open: interval `k` is `(t_k, t_{k+1}]`, so the risk set
//! of the interval ending at an observed time `Z_i` is `{j : Z_j >= Z_i}`. This
//! is the closed at-risk convention `Y^i(t) = 1{Z_i >= t}`, and the value of a
//! risk-set average at an event time is the value on the interval that ends
//! there.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord {
    /// Follow-up time in `(0, 1]`.
    pub time: f64,
    /// `true` when the event was observed.
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl SurvivalRecord {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Self {
            time,
            event,
            covariates,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurvivalDataset {
    records: Vec<SurvivalRecord>,
    dim: usize,
    labels: Vec<String>,
    time_scale: f64,
}

impl SurvivalDataset {
    /// Validates and wraps records whose times already lie in `(0, 1]`.
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        let dim = records.first().map(|r| r.covariates.len()).ok_or_else(|| {
            Error::param("a dataset needs at least one record")
        })?;
        for (index, r) in records.iter().enumerate() {
            if !(r.time > 0.0 && r.time <= 1.0) {
                return Err(Error::InvalidRecord {
                    index,
                    message: format!("time {} outside (0, 1]", r.time),
                });
            }
            if r.covariates.len() != dim {
                return Err(Error::InvalidRecord {
                    index,
                    message: format!("{} covariates, expected {dim}", r.covariates.len()),
                });
            }
            if let Some(j) = r.covariates.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidRecord {
                    index,
                    message: format!("covariate x{} is not finite", j + 1),
                });
            }
        }
        let labels = (1..=dim).map(|j| format!("x{j}")).collect();
        Ok(Self {
            records,
            dim,
            labels,
            time_scale: 1.0,
        })
    }

    /// Builds a dataset from raw positive times, dividing every time by the
    /// largest one so the study horizon becomes 1.
    pub fn from_raw_times(mut records: Vec<SurvivalRecord>) -> Result<Self> {
        for (index, r) in records.iter().enumerate() {
            if !(r.time.is_finite() && r.time > 0.0) {
                return Err(Error::InvalidRecord {
                    index,
                    message: format!("time {} must be positive and finite", r.time),
                });
            }
        }
        let scale = records.iter().map(|r| r.time).fold(0.0, f64::max);
        for r in &mut records {
            r.time = if r.time == scale { 1.0 } else { r.time / scale };
        }
        let mut data = Self::new(records)?;
        data.time_scale = scale;
        Ok(data)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::Dimension(format!(
                "{} covariate labels for dimension {}",
                labels.len(),
                self.dim
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Factor the raw times were divided by (1 when times were given on `(0, 1]`).
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn event_count(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    /// Reads `time,status,x1,...,xd`. Times are rescaled by their maximum.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let file_err = |message: String| Error::File {
            path: path.to_path_buf(),
            message,
        };
        let header = reader
            .headers()
            .map_err(|e| file_err(format!("unreadable header: {e}")))?
            .clone();
        if header.len() < 3 || &header[0] != "time" || &header[1] != "status" {
            return Err(file_err(
                "header must be `time,status,x1,...,xd` with at least one covariate".into(),
            ));
        }
        let labels: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut records = Vec::new();
        for (k, row) in reader.records().enumerate() {
            let row_no = k + 1;
            let row_err = |message: String| Error::Row {
                path: path.to_path_buf(),
                row: row_no,
                message,
            };
            let row = row.map_err(|e| row_err(e.to_string()))?;
            if row.len() != header.len() {
                return Err(row_err(format!(
                    "{} fields, expected {}",
                    row.len(),
                    header.len()
                )));
            }
            let time: f64 = row[0]
                .parse()
                .map_err(|_| row_err(format!("time `{}` is not a number", &row[0])))?;
            if !(time.is_finite() && time > 0.0) {
                return Err(row_err(format!("time {time} must be positive and finite")));
            }
            let event = match &row[1] {
                "0" => false,
                "1" => true,
                other => return Err(row_err(format!("status `{other}` must be 0 or 1"))),
            };
            let mut covariates = Vec::with_capacity(labels.len());
            for (j, field) in row.iter().skip(2).enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| row_err(format!("{} `{field}` is not a number", labels[j])))?;
                if !v.is_finite() {
                    return Err(row_err(format!("{} is not finite", labels[j])));
                }
                covariates.push(v);
            }
            records.push(SurvivalRecord::new(time, event, covariates));
        }
        if records.is_empty() {
            return Err(file_err("no data rows".into()));
        }
        Self::from_raw_times(records)?.with_labels(labels)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("time,status");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{:?},{}", r.time, u8::from(r.event)));
            for v in &r.covariates {
                out.push_str(&format!(",{v:?}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Piecewise-constant function on `[0, 1]`; `values[k]` holds on
/// `(breakpoints[k], breakpoints[k + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::param(format!(
                "step function needs k+1 breakpoints for k values (got {} and {})",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::param("step function breakpoints must start at 0 and end at 1"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("step function breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("step function values must be finite"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![value],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.values[interval_index(&self.breakpoints, t)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫_a^b f(t) dt` for `0 <= a <= b <= 1`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let lo = self.breakpoints[k].max(a);
            let hi = self.breakpoints[k + 1].min(b);
            if hi > lo {
                total += v * (hi - lo);
            }
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.integral_between(0.0, 1.0)
    }
}

/// Index `k` of the interval `(b_k, b_{k+1}]` containing `t`; `t <= b_0` maps
/// to the first interval and `t > b_last` to the last.
fn interval_index(breakpoints: &[f64], t: f64) -> usize {
    let k = breakpoints.partition_point(|&b| b < t);
    k.saturating_sub(1).min(breakpoints.len() - 2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRef {
    pub record: usize,
    pub time: f64,
    /// Interval whose right endpoint is the event time.
    pub interval: usize,
}

/// At-risk structure of a dataset: the distinct observed times plus 0 and 1,
/// with the risk set of every interval stored as a prefix of `order`.
#[derive(Debug, Clone)]
pub struct RiskSetTimeline {
    breakpoints: Vec<f64>,
    at_risk: Vec<usize>,
    order: Vec<usize>,
    record_interval: Vec<usize>,
    events: Vec<EventRef>,
}

impl RiskSetTimeline {
    pub fn build(data: &SurvivalDataset) -> Self {
        let times: Vec<f64> = data.records().iter().map(|r| r.time).collect();
        let mut timeline = Self::from_times(&times);
        timeline.events = data
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.event)
            .map(|(i, r)| EventRef {
                record: i,
                time: r.time,
                interval: timeline.record_interval[i],
            })
            .collect();
        timeline
    }

    fn from_times(times: &[f64]) -> Self {
        let n = times.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));

        let mut breakpoints = vec![0.0];
        let mut ascending: Vec<f64> = order.iter().rev().map(|&i| times[i]).collect();
        ascending.dedup();
        breakpoints.extend(ascending);
        if *breakpoints.last().unwrap() < 1.0 {
            breakpoints.push(1.0);
        }

        let k_count = breakpoints.len() - 1;
        let mut at_risk = vec![0; k_count];
        let mut pos = 0;
        // Walk intervals from the last one backwards, growing the risk set.
        for k in (0..k_count).rev() {
            let right = breakpoints[k + 1];
            while pos < n && times[order[pos]] >= right {
                pos += 1;
            }
            at_risk[k] = pos;
        }

        let mut record_interval = vec![0; n];
        for (i, &t) in times.iter().enumerate() {
            record_interval[i] = breakpoints.partition_point(|&b| b < t) - 1;
        }

        Self {
            breakpoints,
            at_risk,
            order,
            record_interval,
            events: Vec::new(),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_intervals(&self) -> usize {
        self.at_risk.len()
    }

    pub fn n_records(&self) -> usize {
        self.order.len()
    }

    pub fn interval_len(&self, k: usize) -> f64 {
        self.breakpoints[k + 1] - self.breakpoints[k]
    }

    pub fn at_risk_counts(&self) -> &[usize] {
        &self.at_risk
    }

    /// Number of records with `Z_i >= t`.
    pub fn at_risk_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return self.n_records();
        }
        if t > 1.0 {
            return 0;
        }
        self.at_risk[interval_index(&self.breakpoints, t)]
    }

    /// Records at risk on interval `k`.
    pub fn risk_set(&self, k: usize) -> &[usize] {
        &self.order[..self.at_risk[k]]
    }

    /// Records whose time is the right endpoint of interval `k`, i.e. the
    /// records that leave the risk set after interval `k`.
    pub fn exits(&self, k: usize) -> &[usize] {
        let next = self.at_risk.get(k + 1).copied().unwrap_or(0);
        &self.order[next..self.at_risk[k]]
    }

    /// Interval whose right endpoint is the time of record `i`.
    pub fn record_interval(&self, i: usize) -> usize {
        self.record_interval[i]
    }

    pub fn events(&self) -> &[EventRef] {
        &self.events
    }

    /// At-risk count as a step function of time.
    pub fn at_risk_step(&self) -> StepFunction {
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.at_risk.iter().map(|&c| c as f64).collect(),
        }
    }

    /// Mean of `values` over the risk set of each interval (0 where empty).
    pub fn interval_means(&self, values: &[f64]) -> Vec<f64> {
        // Backward sweep: the risk set only grows as time decreases.
        let mut means = vec![0.0; self.n_intervals()];
        let mut sum = 0.0;
        for k in (0..self.n_intervals()).rev() {
            for &i in self.exits(k) {
                sum += values[i];
            }
            let count = self.at_risk[k];
            if count > 0 {
                means[k] = sum / count as f64;
            }
        }
        means
    }
}

/// Risk-set average `t ↦ Σ v_i Y^i_t / Σ Y^i_t`, set to 0 where nobody is at risk.
pub fn risk_set_mean(timeline: &RiskSetTimeline, values: &[f64]) -> StepFunction {
    assert_eq!(values.len(), timeline.n_records(), "one value per record");
    StepFunction {
        breakpoints: timeline.breakpoints.clone(),
        values: timeline.interval_means(values),
    }
}

/// Exact `∫_0^1 f(t) g(t) w(t) dt`, where `w` is the at-risk count when a
/// timeline is given and 1 otherwise.
pub fn integrate_product(
    f: &StepFunction,
    g: &StepFunction,
    at_risk: Option<&RiskSetTimeline>,
) -> f64 {
    let weight = at_risk.map(RiskSetTimeline::at_risk_step);
    let mut parts: Vec<&StepFunction> = vec![f, g];
    if let Some(w) = weight.as_ref() {
        parts.push(w);
    }
    integrate_refined(&parts)
}

/// Integral of the pointwise product of several step functions over the
/// common refinement of their partitions.
pub(crate) fn integrate_refined(parts: &[&StepFunction]) -> f64 {
    let mut idx = vec![0usize; parts.len()];
    let mut left = 0.0;
    let mut total = 0.0;
    while left < 1.0 {
        let right = parts
            .iter()
            .zip(&idx)
            .map(|(p, &k)| p.breakpoints[k + 1])
            .fold(f64::INFINITY, f64::min);
        let prod: f64 = parts.iter().zip(&idx).map(|(p, &k)| p.values[k]).product();
        total += prod * (right - left);
        for (p, k) in parts.iter().zip(idx.iter_mut()) {
            if p.breakpoints[*k + 1] == right && *k + 2 < p.breakpoints.len() {
                *k += 1;
            }
        }
        left = right;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(times: &[f64], events: &[bool], x: &[f64]) -> SurvivalDataset {
        let records = times
            .iter()
            .zip(events)
            .zip(x)
            .map(|((&t, &e), &v)| SurvivalRecord::new(t, e, vec![v]))
            .collect();
        SurvivalDataset::new(records).unwrap()
    }

    #[test]
    fn single_record_timeline() {
        let d = data(&[0.5], &[true], &[0.0]);
        let tl = RiskSetTimeline::build(&d);
        assert_eq!(tl.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(tl.at_risk_counts(), &[1, 0]);
        assert_eq!(tl.at_risk_at(0.5), 1);
        assert_eq!(tl.at_risk_at(0.5000001), 0);
    }

    #[test]
    fn two_record_counts() {
        let d = data(&[0.5, 1.0], &[true, true], &[0.0, 1.0]);
        let tl = RiskSetTimeline::build(&d);
        assert_eq!(tl.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(tl.at_risk_counts(), &[2, 1]);
        assert_eq!(tl.events().len(), 2);
        assert_eq!(tl.events()[0].interval, 0);
        assert_eq!(tl.events()[1].interval, 1);
    }

    #[test]
    fn tied_times_share_a_breakpoint() {
        let d = data(&[0.4, 0.4, 0.9], &[true, false, true], &[0.0; 3]);
        let tl = RiskSetTimeline::build(&d);
        assert_eq!(tl.breakpoints(), &[0.0, 0.4, 0.9, 1.0]);
        assert_eq!(tl.at_risk_counts(), &[3, 1, 0]);
        assert_eq!(tl.record_interval(0), tl.record_interval(1));
        assert_eq!(tl.events().len(), 2);
    }

    #[test]
    fn risk_set_mean_examples() {
        let d = data(&[0.5], &[true], &[3.0]);
        let tl = RiskSetTimeline::build(&d);
        let m = risk_set_mean(&tl, &[3.0]);
        assert_eq!(m.eval(0.2), 3.0);
        assert_eq!(m.eval(0.5), 3.0);
        assert_eq!(m.eval(0.7), 0.0);

        let d = data(&[0.5, 1.0], &[true, true], &[0.0, 1.0]);
        let tl = RiskSetTimeline::build(&d);
        let m = risk_set_mean(&tl, &[0.0, 1.0]);
        assert_eq!(m.eval(0.0), 0.5);
        assert_eq!(m.eval(0.5), 0.5);
        assert_eq!(m.eval(0.75), 1.0);
        assert_eq!(m.eval(1.0), 1.0);
    }

    #[test]
    fn integrate_product_examples() {
        let one = StepFunction::constant(1.0);
        assert_eq!(integrate_product(&one, &one, None), 1.0);

        let half = StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.0]).unwrap();
        let two = StepFunction::constant(2.0);
        assert_eq!(integrate_product(&half, &two, None), 1.0);

        let f = StepFunction::new(vec![0.0, 0.3, 1.0], vec![1.0, 2.0]).unwrap();
        let g = StepFunction::new(vec![0.0, 0.6, 1.0], vec![3.0, 4.0]).unwrap();
        assert!((integrate_product(&f, &g, None) - 5.9).abs() < 1e-14);
    }

    #[test]
    fn integrate_with_at_risk_weight() {
        let d = data(&[0.5, 1.0], &[true, true], &[0.0, 1.0]);
        let tl = RiskSetTimeline::build(&d);
        let one = StepFunction::constant(1.0);
        // ∫ (#at risk) dt = 2·0.5 + 1·0.5
        assert!((integrate_product(&one, &one, Some(&tl)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_records() {
        let bad = SurvivalDataset::new(vec![SurvivalRecord::new(1.5, true, vec![0.0])]);
        assert!(matches!(bad, Err(Error::InvalidRecord { index: 0, .. })));
        let bad = SurvivalDataset::new(vec![
            SurvivalRecord::new(0.5, true, vec![0.0]),
            SurvivalRecord::new(0.5, true, vec![f64::NAN]),
        ]);
        assert!(matches!(bad, Err(Error::InvalidRecord { index: 1, .. })));
        assert!(SurvivalDataset::new(vec![]).is_err());
    }

    #[test]
    fn raw_times_are_rescaled() {
        let d = SurvivalDataset::from_raw_times(vec![
            SurvivalRecord::new(5.0, true, vec![0.0]),
            SurvivalRecord::new(10.0, false, vec![1.0]),
        ])
        .unwrap();
        assert_eq!(d.time_scale(), 10.0);
        assert_eq!(d.records()[0].time, 0.5);
        assert_eq!(d.records()[1].time, 1.0);
    }

    fn step_strategy() -> impl Strategy<Value = StepFunction> {
        (prop::collection::vec(0.01f64..0.99, 0..6), prop::collection::vec(-5.0f64..5.0, 7))
            .prop_map(|(mut cuts, vals)| {
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut b = vec![0.0];
                b.extend(cuts);
                b.push(1.0);
                let v = vals[..b.len() - 1].to_vec();
                StepFunction::new(b, v).unwrap()
            })
    }

    proptest! {
        #[test]
        fn at_risk_matches_indicator_sums(
            times in prop::collection::vec(1u32..=20, 1..40),
            probes in prop::collection::vec(0.0f64..=1.0, 20),
        ) {
            let times: Vec<f64> = times.iter().map(|&t| t as f64 / 20.0).collect();
            let d = data(&times, &vec![true; times.len()], &vec![0.0; times.len()]);
            let tl = RiskSetTimeline::build(&d);
            let mut grid = probes;
            grid.extend(times.iter().copied());
            for t in grid {
                let brute = times.iter().filter(|&&z| z >= t).count();
                prop_assert_eq!(tl.at_risk_at(t), brute);
            }
            let counts = tl.at_risk_counts();
            prop_assert_eq!(counts[0], times.len());
            prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn risk_set_mean_is_permutation_invariant(
            pairs in prop::collection::vec((1u32..=10, -3.0f64..3.0), 1..25),
            rot in 0usize..25,
        ) {
            let times: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 10.0).collect();
            let vals: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let d = data(&times, &vec![false; times.len()], &vals);
            let m1 = risk_set_mean(&RiskSetTimeline::build(&d), &vals);
            let r = rot % pairs.len();
            let (mut t2, mut v2) = (times.clone(), vals.clone());
            t2.rotate_left(r);
            v2.rotate_left(r);
            let d2 = data(&t2, &vec![false; t2.len()], &v2);
            let m2 = risk_set_mean(&RiskSetTimeline::build(&d2), &v2);
            prop_assert_eq!(m1.breakpoints(), m2.breakpoints());
            for (a, b) in m1.values().iter().zip(m2.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn constant_values_give_constant_mean(
            times in prop::collection::vec(1u32..=10, 1..25),
            c in -10.0f64..10.0,
        ) {
            let times: Vec<f64> = times.iter().map(|&t| t as f64 / 10.0).collect();
            let vals = vec![c; times.len()];
            let d = data(&times, &vec![true; times.len()], &vals);
            let tl = RiskSetTimeline::build(&d);
            let m = risk_set_mean(&tl, &vals);
            for (k, v) in m.values().iter().enumerate() {
                if tl.at_risk_counts()[k] > 0 {
                    prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
                }
            }
        }

        #[test]
        fn integration_is_bilinear_and_refinement_exact(
            f in step_strategy(), g in step_strategy(), h in step_strategy(),
            a in -3.0f64..3.0, extra in 0.01f64..0.99,
        ) {
            let fg = integrate_product(&f, &g, None);
            let hg = integrate_product(&h, &g, None);
            // a·f + h on the joint partition
            let mut b: Vec<f64> = f.breakpoints().iter().chain(h.breakpoints()).copied().collect();
            b.push(extra);
            b.sort_by(f64::total_cmp);
            b.dedup();
            let mids: Vec<f64> = b.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            let comb = StepFunction::new(b.clone(), mids.iter().map(|&t| a * f.eval(t) + h.eval(t)).collect()).unwrap();
            let lhs = integrate_product(&comb, &g, None);
            let rhs = a * fg + hg;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
            // refining f's partition changes nothing
            let refined = StepFunction::new(b.clone(), mids.iter().map(|&t| f.eval(t)).collect()).unwrap();
            let r = integrate_product(&refined, &g, None);
            prop_assert!((r - fg).abs() <= 1e-14 * (1.0 + fg.abs()) * 10.0);
        }
    }
}
