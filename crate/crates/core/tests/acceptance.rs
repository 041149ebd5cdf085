//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one `criterion N: PASS|FAIL` line each; exits nonzero if any fail.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fuzz_run, tiny_libsvm, tiny_sparse_coding, worst_fd_error};
use prunadag::baselines::{fw_lmo, fw_step};
use prunadag::harness::{
    load_config, run_experiment, starting_point, ExperimentConfig, OptimizerEntry, OptimizerKind,
};
use prunadag::problems::rng::SeededRng;
use prunadag::problems::{gen_separable_classification, gen_sparse_recovery};
use prunadag::pruning::PruneTarget;
use prunadag::theory::{
    check_descent_lemma, check_gradient_bound, check_series_lemma, lambert_w_minus1,
    GradientBoundOutcome, TraceSetup, NEG_INV_E,
};
use prunadag::vector::norm;
use prunadag::{
    gen_least_squares, run, Adagrad, FrankWolfe, FwConfig, FwRate, LogisticProblem, LsKind,
    Optimizer, Problem, PrunAdag, PrunAdagConfig, RunOptions, StopCriteria, Variant,
};

type Outcome = Result<String, String>;

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn keep(cfg: &mut ExperimentConfig, labels: &[&str]) {
    cfg.optimizers
        .retain(|o| labels.contains(&o.label.as_str()));
    assert_eq!(
        cfg.optimizers.len(),
        labels.len(),
        "missing optimizer in config"
    );
}

const ALL_VARIANTS: [Variant; 5] = [
    Variant::V1,
    Variant::V2,
    Variant::V3,
    Variant::V4,
    Variant::RelevantOnly,
];

/// Criteria 1 and 2 share the same runs.
fn bound_and_descent() -> (Outcome, Outcome) {
    let (n, t, varsigma) = (200, 20, 0.01);
    let stop = StopCriteria {
        grad_tol: 1e-12,
        max_iters: 2000,
    };
    let mut bound_fail = vec![];
    let mut descent_fail = vec![];
    let mut control_hits = 0;
    let mut slowest = Duration::ZERO;
    let mut runs = 0;
    for (gi, kind) in LsKind::ALL.into_iter().enumerate() {
        let p = gen_least_squares(kind, 20, n, 100 + gi as u64).unwrap();
        let l = p.lipschitz().unwrap();
        for v in ALL_VARIANTS {
            let started = Instant::now();
            let cfg = PrunAdagConfig {
                relevant: t,
                varsigma,
                variant: v,
            };
            let mut opt = PrunAdag::new(starting_point(n, t, gi as u64), cfg).unwrap();
            let rec = run(&mut opt, &p, stop, &RunOptions::default()).unwrap();
            let setup = TraceSetup {
                n,
                relevant: t,
                varsigma,
                lipschitz: l,
                f_low: 0.0,
            };
            match check_gradient_bound(&rec, &setup).unwrap() {
                GradientBoundOutcome::Checked(c) if c.passed() => {}
                GradientBoundOutcome::Checked(c) => {
                    bound_fail.push(format!("{kind}/{v} at k={}", c.violations[0]))
                }
                GradientBoundOutcome::Skipped(why) => {
                    bound_fail.push(format!("{kind}/{v} skipped: {why}"))
                }
            }
            let d = check_descent_lemma(&rec, l).unwrap();
            if !d.passed() {
                descent_fail.push(format!("{kind}/{v} at k={}", d.violations[0]));
            }
            if !check_descent_lemma(&rec, l / 100.0).unwrap().passed() {
                control_hits += 1;
            }
            slowest = slowest.max(started.elapsed());
            runs += 1;
        }
    }
    let c1 = if bound_fail.is_empty() && slowest < Duration::from_secs(60) {
        Ok(format!(
            "{runs} runs, slowest {:.2}s",
            slowest.as_secs_f64()
        ))
    } else {
        Err(format!(
            "{bound_fail:?}, slowest {:.2}s",
            slowest.as_secs_f64()
        ))
    };
    let c2 = if descent_fail.is_empty() && control_hits > 0 {
        Ok(format!(
            "{runs} runs clean, L/100 control violated in {control_hits}"
        ))
    } else {
        Err(format!(
            "violations {descent_fail:?}, control hits {control_hits}"
        ))
    };
    (c1, c2)
}

fn invariants() -> Outcome {
    let mut total = 0;
    for seed in 0..1000 {
        total += fuzz_run(seed, 100)?;
    }
    Ok(format!("{total} fuzzed iterations"))
}

fn adagrad_equivalence() -> Outcome {
    let n = 200;
    let p = gen_least_squares(LsKind::A1, 20, n, 4).unwrap();
    let x0 = starting_point(n, 20, 4);
    let cfg = PrunAdagConfig {
        relevant: n,
        varsigma: 0.01,
        variant: Variant::V3,
    };
    let mut pa = PrunAdag::new(x0.clone(), cfg).unwrap();
    let mut ad = Adagrad::new(x0, 0.01).unwrap();
    for k in 0..1000 {
        let g = p.gradient(pa.x());
        pa.step(&g);
        ad.step(&g);
        if pa.x() != ad.x() {
            return Err(format!("iterates differ at k={k}"));
        }
    }
    Ok("1000 iterations bitwise identical".into())
}

fn convergence() -> Outcome {
    let mut cfg = config("a2_desk.toml");
    keep(&mut cfg, &["prunAdag-V3"]);
    cfg.stop = StopCriteria {
        grad_tol: 1e-6,
        max_iters: 10_000,
    };
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let ok = res
        .runs
        .iter()
        .filter(|r| r.diverged.is_none() && r.record.final_grad_norm <= 1e-6)
        .count();
    let worst = res
        .runs
        .iter()
        .map(|r| r.record.iterations())
        .max()
        .unwrap_or(0);
    let msg = format!(
        "{ok}/{} seeds reach 1e-6, max {worst} iterations",
        res.runs.len()
    );
    if ok >= 18 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rho_at(res: &prunadag::harness::ExperimentResult, label: &str, sigma: f64) -> Vec<Option<f64>> {
    res.runs_for(label)
        .map(|r| {
            if r.diverged.is_some() {
                return None;
            }
            r.prune
                .iter()
                .find(|e| e.row.target == PruneTarget::Sparsity(sigma))
                .map(|e| e.row.rho)
        })
        .collect()
}

fn mean(v: &[Option<f64>]) -> f64 {
    let ok: Vec<f64> = v.iter().flatten().copied().collect();
    ok.iter().sum::<f64>() / ok.len() as f64
}

/// Criteria 6 and 7 share one A3 experiment.
fn a3_robustness_and_ablation() -> (Outcome, Outcome) {
    let started = Instant::now();
    let mut cfg = config("a3_desk.toml");
    keep(&mut cfg, &["prunAdag-V1", "prunAdag-V3", "Adagrad"]);
    let v3 = cfg
        .optimizers
        .iter()
        .find(|o| o.label == "prunAdag-V3")
        .unwrap();
    let OptimizerKind::PrunAdag(v3cfg) = v3.kind else {
        unreachable!()
    };
    cfg.optimizers.push(OptimizerEntry {
        label: "prunAdag-RelevantOnly".into(),
        kind: OptimizerKind::PrunAdag(PrunAdagConfig {
            variant: Variant::RelevantOnly,
            ..v3cfg
        }),
    });
    cfg.sigmas = vec![0.3, 0.4];
    let res = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };

    let (v3_30, ad_30) = (
        rho_at(&res, "prunAdag-V3", 0.3),
        rho_at(&res, "Adagrad", 0.3),
    );
    let (m3, ma) = (mean(&v3_30), mean(&ad_30));
    let v1_40 = rho_at(&res, "prunAdag-V1", 0.4);
    let v3_40 = rho_at(&res, "prunAdag-V3", 0.4);
    let wins = v3_40
        .iter()
        .zip(&v1_40)
        .filter(|(a, b)| matches!((a, b), (Some(a), Some(b)) if a <= b))
        .count();
    let elapsed = started.elapsed().as_secs_f64();
    let msg = format!(
        "mean rho at 30%: V3 {m3:.2e}, Adagrad {ma:.2e} (ratio {:.1e}); V3 <= V1 at 40% on {wins}/{} seeds; {elapsed:.0}s",
        ma / m3,
        v3_40.len()
    );
    let c6 = if ma >= 100.0 * m3 && 2 * wins > v3_40.len() && elapsed < 600.0 {
        Ok(msg)
    } else {
        Err(msg)
    };

    let below = |label: &str| -> Vec<usize> {
        res.runs_for(label)
            .map(|r| r.record.final_x.iter().filter(|v| v.abs() < 1e-3).count())
            .collect()
    };
    let (ro, v3b) = (below("prunAdag-RelevantOnly"), below("prunAdag-V3"));
    let fewer = ro.iter().zip(&v3b).filter(|(a, b)| a < b).count();
    let msg = format!(
        "RelevantOnly below 1e-3 fewer than V3 on {fewer}/{} seeds (mean {:.1} vs {:.1})",
        ro.len(),
        ro.iter().sum::<usize>() as f64 / ro.len() as f64,
        v3b.iter().sum::<usize>() as f64 / v3b.len() as f64
    );
    let c7 = if fewer >= 15 { Ok(msg) } else { Err(msg) };
    (c6, c7)
}

fn frank_wolfe() -> Outcome {
    let mut rng = SeededRng::new(2024);
    let mut calls = 0;
    for _ in 0..5000 {
        let n = 1 + (rng.uniform() * 60.0) as usize;
        let relevant = 1 + (rng.uniform() * n as f64) as usize % n;
        let tau = 10f64.powf(-2.0 + 4.0 * rng.uniform());
        let g: Vec<f64> = (0..n)
            .map(|_| {
                if rng.bernoulli(0.2) {
                    0.0
                } else {
                    rng.normal() * 10f64.powf(3.0 * rng.normal())
                }
            })
            .collect();
        let cfg = FwConfig {
            relevant,
            tau,
            rate: FwRate::Linear,
        };
        let v = fw_lmo(&g, &cfg).map_err(|e| e.to_string())?;
        let nnz = v.iter().filter(|x| **x != 0.0).count();
        let nv = norm(&v);
        if nnz > relevant || !(nv == 0.0 || (nv - tau).abs() <= 1e-12 * tau) {
            return Err(format!(
                "lmo output has {nnz} nonzeros (T={relevant}) and norm {nv} (tau={tau})"
            ));
        }
        calls += 1;
    }
    for seed in 0..100 {
        let mut rng = SeededRng::new(seed);
        let n = 40;
        let relevant = 1 + seed as usize % 8;
        let tau = 10f64.powf(-1.0 + 3.0 * rng.uniform());
        let rate = if seed % 2 == 0 {
            FwRate::Linear
        } else {
            FwRate::Rescaled {
                beta: rng.uniform(),
            }
        };
        let cfg = FwConfig {
            relevant,
            tau,
            rate,
        };
        let mut x0 = vec![0.0; n];
        x0[..relevant].iter_mut().for_each(|v| *v = rng.normal());
        let s = tau * rng.uniform() / norm(&x0);
        x0.iter_mut().for_each(|v| *v *= s);
        let p = gen_least_squares(LsKind::ALL[seed as usize % 6], 10, n, seed).unwrap();
        let mut fw = FrankWolfe::new(x0, cfg).map_err(|e| e.to_string())?;
        for k in 0..50 {
            let g = p.gradient(fw.x());
            let expect = fw_step(fw.x(), &g, k, &cfg).map_err(|e| e.to_string())?;
            fw.step(&g);
            if fw.x() != expect.as_slice() || norm(fw.x()) > tau + 1e-10 {
                return Err(format!(
                    "seed {seed}, k {k}: iterate left the ball or mismatched fw_step"
                ));
            }
            calls += 1;
        }
    }
    Ok(format!("{calls} fuzzed calls"))
}

fn lambert() -> Outcome {
    let (lo, hi) = (NEG_INV_E + 1e-9, -1e-9);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for i in 0..1000 {
        let u = i as f64 / 999.0;
        // Half evenly spaced, half geometric towards zero.
        let y = if i % 2 == 0 {
            lo + u * (hi - lo)
        } else {
            lo * (hi / lo).powf(u)
        };
        let w = lambert_w_minus1(y).map_err(|e| format!("y={y}: {e}"))?;
        worst = worst.max((w * w.exp() - y).abs() / y.abs());
        points += 1;
    }
    let at_branch = lambert_w_minus1(NEG_INV_E).map_err(|e| e.to_string())?;
    let msg = format!("worst residual {worst:.1e} over {points} points, W(-1/e) = {at_branch}");
    if worst < 1e-12 && (at_branch + 1.0).abs() <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn classification() -> Outcome {
    let mut cfg = config("separable.toml");
    let variants = ["prunAdag-V1", "prunAdag-V2", "prunAdag-V3", "prunAdag-V4"];
    keep(
        &mut cfg,
        &[
            "prunAdag-V1",
            "prunAdag-V2",
            "prunAdag-V3",
            "prunAdag-V4",
            "Adagrad",
        ],
    );
    cfg.sigmas = vec![0.8];
    cfg.deltas.clear();
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    // Accuracy drop in percentage points at 80% sparsity, per seed.
    let drops = |label: &str| -> Vec<f64> {
        res.runs_for(label)
            .filter(|r| r.diverged.is_none())
            .map(|r| {
                let pruned = r
                    .prune
                    .iter()
                    .find(|e| e.row.target == PruneTarget::Sparsity(0.8))
                    .unwrap();
                100.0 * (r.accuracy.unwrap() - pruned.accuracy.unwrap())
            })
            .collect()
    };
    let seeds = cfg.seeds.len();
    let mut parts = vec![];
    let mut ok = true;
    for v in variants {
        let kept = drops(v).iter().filter(|d| d.abs() <= 2.0 + 1e-9).count();
        ok &= 2 * kept > seeds;
        parts.push(format!("{} {kept}", &v[9..]));
    }
    let degraded = drops("Adagrad").iter().filter(|d| **d > 5.0).count();
    ok &= 2 * degraded > seeds;
    let msg = format!(
        "within 2 points: {}; Adagrad drops > 5 points on {degraded}/{seeds}",
        parts.join(", ")
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn series() -> Outcome {
    let mut rng = SeededRng::new(77);
    let mut checks = 0;
    for s in 0..1000 {
        let len = (rng.uniform() * 1001.0) as usize;
        let scale = 10f64.powf(-6.0 + 12.0 * rng.uniform());
        let a: Vec<f64> = (0..len)
            .map(|_| match s % 4 {
                0 => scale * rng.uniform(),
                1 => scale * rng.normal().abs() * (3.0 * rng.normal()).exp(),
                2 if rng.bernoulli(0.5) => 0.0,
                _ => scale * rng.uniform().powi(8),
            })
            .collect();
        for xi in [1e-2, 1.0, 1e2] {
            let c = check_series_lemma(&a, xi).map_err(|e| e.to_string())?;
            if !c.passed() {
                return Err(format!(
                    "sequence {s} (len {len}) fails at xi={xi}, index {}",
                    c.violations[0]
                ));
            }
            checks += 1;
        }
    }
    Ok(format!("{checks} sequence/xi pairs"))
}

fn gradients() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut results: Vec<(String, f64)> = vec![];
    for (i, kind) in LsKind::ALL.into_iter().enumerate() {
        let p = gen_least_squares(kind, 20, 200, i as u64).unwrap();
        results.push((kind.to_string(), worst_fd_error(&p, i as u64, 1.0)));
    }
    let p = gen_sparse_recovery(20, 200, 10, 0.01, 1).unwrap();
    results.push(("sparse_recovery".into(), worst_fd_error(&p, 11, 1.0)));
    let (data, _) = gen_separable_classification(200, 50, 1000, 0.0, 2).unwrap();
    let p = LogisticProblem::new(data).unwrap();
    results.push(("separable_logistic".into(), worst_fd_error(&p, 12, 1.0)));
    let (train, _) = tiny_libsvm(dir.path(), 3);
    let p = LogisticProblem::new(train).unwrap();
    results.push(("libsvm_logistic".into(), worst_fd_error(&p, 13, 2.0)));
    let p = tiny_sparse_coding(dir.path(), 4, 1);
    results.push(("sparse_coding".into(), worst_fd_error(&p, 14, 1.0)));

    let bad: Vec<_> = results
        .iter()
        .filter(|(_, e)| e.is_nan() || *e >= 1e-5)
        .collect();
    let worst = results.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    if bad.is_empty() {
        Ok(format!(
            "{} generators, worst relative error {worst:.1e}",
            results.len()
        ))
    } else {
        Err(format!("{bad:?}"))
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, Outcome, f64)> = vec![];
    let mut timed = |ids: &[u32], f: &mut dyn FnMut() -> Vec<Outcome>| {
        let t = Instant::now();
        let outs = f();
        let secs = t.elapsed().as_secs_f64();
        for (id, o) in ids.iter().zip(outs) {
            results.push((*id, o, secs));
        }
    };
    timed(&[1, 2], &mut || {
        let (a, b) = bound_and_descent();
        vec![a, b]
    });
    timed(&[3], &mut || vec![invariants()]);
    timed(&[4], &mut || vec![adagrad_equivalence()]);
    timed(&[5], &mut || vec![convergence()]);
    timed(&[6, 7], &mut || {
        let (a, b) = a3_robustness_and_ablation();
        vec![a, b]
    });
    timed(&[8], &mut || vec![frank_wolfe()]);
    timed(&[9], &mut || vec![lambert()]);
    timed(&[10], &mut || vec![classification()]);
    timed(&[11], &mut || vec![series()]);
    timed(&[12], &mut || vec![gradients()]);

    let mut failed = 0;
    for (id, outcome, secs) in &results {
        match outcome {
            Ok(m) => println!("criterion {id}: PASS ({m}) [{secs:.1}s]"),
            Err(m) => {
                failed += 1;
                println!("criterion {id}: FAIL ({m}) [{secs:.1}s]");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
