//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use aalen_core::bernstein::{self, BernsteinConstants, BernsteinMcConfig};
use aalen_core::dictionary::DictionaryMatrix;
use aalen_core::gram::{check_orthogonality, empirical_inner_fn, empirical_norm_sq_fn, orthogonality_scale, GramSystem};
use aalen_core::oracle::{self, Design, OracleMcConfig};
use aalen_core::par::Execution;
use aalen_core::simulate::{noise_vector, Baseline, Censoring, SimulationConfig, Simulator};
use aalen_core::solver::{fit, penalized_objective, Constraint, Multiplier, SolverOptions};
use aalen_core::stats::{ks_pvalue, ks_statistic, mean_se};
use aalen_core::survival::{RiskSetTimeline, SurvivalDataset, SurvivalRecord};
use aalen_core::weights::{self, empirical_variance, WeightVector};
use common::*;
use rand::Rng;

type Outcome = Result<String, String>;

fn micro_instance() -> Outcome {
    let data = SurvivalDataset::new(vec![
        SurvivalRecord::new(0.5, true, vec![0.0]),
        SurvivalRecord::new(1.0, true, vec![1.0]),
    ])
    .unwrap();
    let dict = DictionaryMatrix::linear(&data);
    let g = GramSystem::build(&dict, &RiskSetTimeline::build(&data)).unwrap();
    let (h, hv, v) = (g.h()[(0, 0)], g.hvec()[0], empirical_variance(&dict, &g)[0]);
    let ok = (h - 0.125).abs() <= 1e-12 && (hv + 0.25).abs() <= 1e-12 && (v - 0.125).abs() <= 1e-12;
    let msg = format!("H11 = {h}, h1 = {hv}, V1 = {v}");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn orthogonality() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let n = r.random_range(1..=200);
        let data = random_dataset(&mut r, n, 2);
        let tl = RiskSetTimeline::build(&data);
        let values: Vec<f64> = data.records().iter().map(|rec| rec.covariates[0].powi(3) - rec.covariates[1]).collect();
        let phi = random_step(&mut r);
        let scale = orthogonality_scale(&tl, &values, &phi);
        let rel = if scale == 0.0 { 0.0 } else { check_orthogonality(&tl, &values, &phi).abs() / scale };
        worst = worst.max(rel);
    }
    let msg = format!("100 datasets, worst relative residual {worst:.2e}");
    if worst <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gram_consistency() -> Outcome {
    let (mut worst_q, mut worst_sym, mut worst_eig): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for seed in 0..50 {
        let mut r = rng(2000 + seed);
        let n = r.random_range(2..=150);
        let m = r.random_range(1..=10);
        let data = random_dataset(&mut r, n, 4);
        let dict = random_dictionary(&mut r, &data, m);
        let tl = RiskSetTimeline::build(&data);
        let g = GramSystem::build(&dict, &tl).unwrap();
        let beta: Vec<f64> = (0..m).map(|_| r.random_range(-2.0..2.0)).collect();
        let quad = g.empirical_norm_sq(&beta);
        let direct = empirical_norm_sq_fn(&tl, &dict.evaluate(&beta));
        let scale = quad.abs().max(direct.abs()).max(1e-300);
        worst_q = worst_q.max((quad - direct).abs() / scale);
        let h = g.h();
        let norm = h.norm().max(1e-300);
        worst_sym = worst_sym.max((h - h.transpose()).abs().max());
        let min_eig = h.clone().symmetric_eigen().eigenvalues.min();
        worst_eig = worst_eig.min(min_eig / norm);
    }
    let msg = format!(
        "50 instances, quadratic form rel err {worst_q:.2e}, asymmetry {worst_sym:.2e}, min eig/‖H‖ {worst_eig:.2e}"
    );
    if worst_q <= 1e-10 && worst_sym <= 1e-12 && worst_eig >= -1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn solver_equivalence() -> Outcome {
    let (mut worst_b, mut worst_f): (f64, f64) = (0.0, 0.0);
    let mut problems = Vec::new();
    let mut done = 0;
    let mut seed = 3000;
    while done < 30 {
        seed += 1;
        let mut r = rng(seed);
        let n = r.random_range(30..=80);
        let m = r.random_range(1..=3);
        let data = random_dataset(&mut r, n, 3);
        let dict = random_dictionary(&mut r, &data, m);
        let g = GramSystem::build(&dict, &RiskSetTimeline::build(&data)).unwrap();
        let eig = g.h().clone().symmetric_eigen().eigenvalues;
        if eig.min() < 1e-3 * eig.max().max(1e-300) || eig.max() <= 0.0 {
            continue;
        }
        done += 1;
        let w = WeightVector::from_raw((0..m).map(|j| r.random_range(0.0..2.0) * g.hvec()[j].abs()).collect());
        let options = SolverOptions {
            multiplier: if r.random_bool(0.5) { Multiplier::Single } else { Multiplier::Double },
            constraint: if r.random_bool(0.3) { Constraint::Nonnegative } else { Constraint::Unconstrained },
            ..Default::default()
        };
        let f = fit(&g, &w, &options).unwrap();
        let radius = 1.05 * 2.0 * g.hvec().norm() / eig.min() + 1e-9;
        let (bb, fb) = brute_force_minimiser(
            |b| penalized_objective(&g, &w, options.multiplier, b),
            m,
            radius,
            options.constraint == Constraint::Nonnegative,
        );
        let db = f.beta.iter().zip(&bb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let df = (f.objective() - fb).abs();
        worst_b = worst_b.max(db);
        worst_f = worst_f.max(df);
        let monotone = f.objective_trace.windows(2).all(|p| p[1] <= p[0] + 1e-12 * p[0].abs().max(1.0));
        if !f.converged || f.kkt_max_violation > 1e-8 || !monotone || db > 1e-3 || df > 1e-6 {
            problems.push(seed);
        }
    }
    let msg = format!("30 instances, max |Δβ| {worst_b:.2e}, max |ΔF| {worst_f:.2e}");
    if problems.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; failing seeds {problems:?}"))
    }
}

fn noise_decomposition() -> Outcome {
    let sim = Simulator::new(&SimulationConfig {
        seed: 55,
        ..Default::default()
    })
    .unwrap();
    let mut worst: f64 = 0.0;
    for rep in 0..50 {
        let truth = sim.replicate(rep).unwrap();
        let tl = RiskSetTimeline::build(&truth.dataset);
        let dict = DictionaryMatrix::linear(&truth.dataset);
        let g = GramSystem::build(&dict, &tl).unwrap();
        let z = noise_vector(&truth, &dict, &tl);
        for (j, zj) in z.iter().enumerate() {
            let hp = empirical_inner_fn(&tl, dict.column(j), &truth.h0);
            let h = g.hvec()[j];
            let scale = h.abs().max(hp.abs() + zj.abs());
            worst = worst.max((h - hp - zj).abs() / scale);
        }
    }
    let msg = format!("50 replications × 50 columns, worst relative error {worst:.2e}");
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bernstein_mc() -> Outcome {
    let config = BernsteinMcConfig {
        simulation: SimulationConfig {
            seed: 2024,
            ..Default::default()
        },
        columns: vec![0, 3],
        x_grid: vec![4.0, 5.0, 6.0],
        replications: 10_000,
        constants: BernsteinConstants::paper_numeric(),
        preset: Some("paper-numeric".into()),
        classical: false,
    };
    let report = bernstein::run_mc(&config, Execution::Parallel).map_err(|e| e.to_string())?;
    let parts: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "x={} col {}: {}/{} upper {:.4} ≤ {:.4}",
                r.x, r.column, r.violations.successes, r.violations.trials, r.violations.upper, r.theoretical
            )
        })
        .collect();
    let msg = parts.join("; ");
    if report.pass {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_frequency(design: Design, fast: bool) -> Outcome {
    let config = OracleMcConfig {
        simulation: SimulationConfig {
            seed: 77,
            ..Default::default()
        },
        x: 5.0,
        replications: 500,
        design,
        search: None,
    };
    let report = oracle::run_mc(&config, Execution::Parallel).map_err(|e| e.to_string())?;
    let p = if fast {
        report.summary.fast.ok_or("fast check missing")?
    } else {
        report.summary.slow
    };
    let msg = format!(
        "{}/{} hold ({:.3}, Wilson [{:.3}, {:.3}]), guarantee {:.3}, failures on noise event {}",
        p.successes, p.trials, p.estimate, p.lower, p.upper, report.guarantee, report.summary.failures_on_event
    );
    if p.estimate >= 0.80 && (!fast || report.fast_label == Some("exact")) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn constants() -> Outcome {
    let c = BernsteinConstants::paper_numeric();
    let c1_ok = weights::C1 == 2.0 * std::f64::consts::SQRT_2 && c.c1() == weights::C1;
    let c2 = weights::c2();
    let c2_ok = (c2 - 9.31).abs() <= 0.01 && c2 <= 9.31 && (c.c2() - c2).abs() < 1e-12;
    let c3_ok = c.c3() <= 28.55;
    let msg = format!("c1 = {}, c2 = {c2}, c3 = {}", weights::C1, c.c3());
    if c1_ok && c2_ok && c3_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn simulator_distribution() -> Outcome {
    let config = SimulationConfig {
        n: 10_000,
        d: 1,
        beta0: vec![0.0],
        baseline: Baseline::constant(1.0),
        censoring: Censoring::Administrative,
        seed: 10,
        ..Default::default()
    };
    let truth = Simulator::new(&config).and_then(|s| s.replicate(0)).map_err(|e| e.to_string())?;
    // event times below 1 follow Exp(1) truncated to [0, 1]
    let cut = 1.0 - (-1.0f64).exp();
    let events: Vec<f64> = truth.latent_times.iter().copied().filter(|t| *t <= 1.0).collect();
    let d = ks_statistic(&events, |t| (1.0 - (-t).exp()) / cut);
    let p = ks_pvalue(d, events.len());
    let observed: Vec<f64> = truth.dataset.records().iter().map(|r| r.time).collect();
    let (mean, se) = mean_se(&observed);
    let z = (mean - cut).abs() / se;
    let msg = format!("KS D = {d:.4} (p = {p:.3}, {} events), mean min(T,1) = {mean:.4} vs {cut:.4} ({z:.2} SE)", events.len());
    if p > 0.01 && z <= 3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("micro-instance reproduction", micro_instance),
        ("risk-set orthogonality", orthogonality),
        ("Gram consistency", gram_consistency),
        ("solver vs brute force", solver_equivalence),
        ("noise decomposition", noise_decomposition),
        ("Bernstein Monte-Carlo", bernstein_mc),
        ("slow oracle frequency", || oracle_frequency(Design::Linear, false)),
        ("fast oracle frequency (whitened design)", || oracle_frequency(Design::Whitened, true)),
        ("constant reproduction", constants),
        ("simulator distribution", simulator_distribution),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {msg}", i + 1)
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
