//! Acceptance battery. One test runs all seven criteria in order,
//! prints one PASS/FAIL line per criterion, and fails if any criterion
//! fails.

use gasflow::ann::{
    backward, dummy_mean_predictor, evaluate_mae, forward, rmsprop_step, Dataset, Mlp,
    Predictor, TrainConfig,
};
use gasflow::ccp::{cold_start, run_ccp, warm_start_from_pressures, CcpConfig, CcpStatus};
use gasflow::model::{
    build_quasi_dynamic, build_steady_state, evaluate_solution, ProblemInstance, VarKind,
};
use gasflow::network::{sample_scenarios, GasNetwork, Scenario};
use gasflow::pipeline::netgen::{network_t1, network_t2, seven_node_like, twenty_node_like};
use gasflow::pipeline::training::{pressure_targets, restart_seed};
use gasflow::pipeline::{
    brute_force_oracle, build_training_set, run_benchmark,
    train_artifact, BenchConfig, Method, ModelArtifact, PresolveConfig,
};
use gasflow::socp::{assemble_subproblem, solve, ConeMembership, ConicProgram, SolveStatus};
use gasflow::model::LinRow;

type Check = Result<String, String>;

/// Everything the per-network criteria share: a presolved dataset and a
/// predictor trained on its 80% split.
struct NetCtx {
    net: GasNetwork,
    data: Dataset,
    artifact: ModelArtifact,
}

fn make_ctx(net: GasNetwork, n_scenarios: usize, sample_seed: u64) -> NetCtx {
    let scenarios = sample_scenarios(&net, n_scenarios, 0.1, 1, sample_seed).unwrap();
    let presolve = PresolveConfig {
        restarts: 2,
        ..PresolveConfig::default()
    };
    let (mut data, dropped) = build_training_set(&net, &scenarios, &presolve).unwrap();
    assert_eq!(dropped, 0, "presolve dropped scenarios");
    data.split(0.2, 7).unwrap();
    let (artifact, _) = train_artifact(&net, &data, 1, &[], &TrainConfig::default()).unwrap();
    NetCtx { net, data, artifact }
}

/// One cold and one warm CCP run per scenario, with independently
/// recomputed feasibility numbers.
struct RunRecord {
    warm: bool,
    converged: bool,
    iterations: usize,
    xi: f64,
    linear_residual: f64,
}

fn run_methods(ctx: &NetCtx, scenarios: &[Scenario]) -> Vec<RunRecord> {
    let cfg = CcpConfig::default();
    let mut out = Vec::new();
    for sc in scenarios {
        let instance = build_steady_state(&ctx.net, sc).unwrap();
        for warm in [false, true] {
            let start = if warm {
                let predicted = ctx
                    .artifact
                    .predict_pressures(&sc.feature_vector(&ctx.net))
                    .unwrap();
                warm_start_from_pressures(&instance, &predicted).unwrap()
            } else {
                cold_start(&instance, restart_seed(1, sc.id, 0))
            };
            // A subproblem failure counts as a non-converged run at the
            // iteration cap; it only hurts the failing method's mean.
            let record = match run_ccp(&instance, &start, &cfg) {
                Ok(res) => {
                    let report =
                        evaluate_solution(&instance, &res.solution, cfg.flow_floor).unwrap();
                    RunRecord {
                        warm,
                        converged: res.status == CcpStatus::Converged,
                        iterations: res.iterations,
                        xi: report.max_weymouth_violation,
                        linear_residual: report.max_linear_residual,
                    }
                }
                Err(_) => RunRecord {
                    warm,
                    converged: false,
                    iterations: cfg.max_iterations,
                    xi: f64::INFINITY,
                    linear_residual: f64::INFINITY,
                },
            };
            out.push(record);
        }
    }
    out
}

/// Criterion 1: every converged run satisfies the original model:
/// recomputed xi < 1e-3 and linear residuals < 1e-6, over >= 200 runs.
fn criterion_1(runs: &[&RunRecord]) -> Check {
    if runs.len() < 200 {
        return Err(format!("only {} runs, need >= 200", runs.len()));
    }
    let converged: Vec<&&RunRecord> = runs.iter().filter(|r| r.converged).collect();
    if converged.is_empty() {
        return Err("no run converged".into());
    }
    let max_xi = converged.iter().map(|r| r.xi).fold(0.0f64, f64::max);
    let max_res = converged
        .iter()
        .map(|r| r.linear_residual)
        .fold(0.0f64, f64::max);
    if max_xi >= 1e-3 {
        return Err(format!("worst recomputed xi {max_xi:.3e} >= 1e-3"));
    }
    if max_res >= 1e-6 {
        return Err(format!("worst linear residual {max_res:.3e} >= 1e-6"));
    }
    Ok(format!(
        "{} runs, {} converged, worst xi {max_xi:.2e}, worst residual {max_res:.2e}",
        runs.len(),
        converged.len()
    ))
}

/// Criterion 2: on T1 and T2, warm and cold CCP objectives within 0.5%
/// of the grid oracle (resolution 1e-3), 20 scenarios each.
fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for (name, net) in [("T1", network_t1()), ("T2", network_t2())] {
        let ctx = make_ctx(net, 60, 11);
        let scenarios = sample_scenarios(&ctx.net, 20, 0.1, 1, 33).unwrap();
        let cfg = CcpConfig::default();
        for sc in &scenarios {
            let oracle = brute_force_oracle(&ctx.net, sc, 1e-3)
                .map_err(|e| format!("{name}: oracle failed: {e}"))?;
            let instance = build_steady_state(&ctx.net, sc).unwrap();
            for warm in [false, true] {
                let start = if warm {
                    let predicted = ctx
                        .artifact
                        .predict_pressures(&sc.feature_vector(&ctx.net))
                        .unwrap();
                    warm_start_from_pressures(&instance, &predicted).unwrap()
                } else {
                    cold_start(&instance, restart_seed(2, sc.id, 0))
                };
                let res = run_ccp(&instance, &start, &cfg)
                    .map_err(|e| format!("{name} scenario {}: {e}", sc.id))?;
                if res.status != CcpStatus::Converged {
                    return Err(format!("{name} scenario {}: {:?}", sc.id, res.status));
                }
                let rel = (res.solution.objective - oracle.best_objective).abs()
                    / oracle.best_objective.abs();
                worst = worst.max(rel);
                if rel > 5e-3 {
                    return Err(format!(
                        "{name} scenario {} ({}): gap {rel:.4e} > 0.5%",
                        sc.id,
                        if warm { "warm" } else { "cold" }
                    ));
                }
            }
        }
    }
    Ok(format!("80 runs vs oracle, worst relative gap {worst:.2e}"))
}

/// Criterion 3: warm starts need fewer iterations — mean warm <= 3.0
/// and warm < cold on the 20-node network; mean warm <= 1.5 on the
/// 7-node network.
fn criterion_3(seven: &[&RunRecord], twenty: &[&RunRecord]) -> Check {
    let mean = |runs: &[&RunRecord], warm: bool| {
        let of: Vec<f64> = runs
            .iter()
            .filter(|r| r.warm == warm)
            .map(|r| r.iterations as f64)
            .collect();
        of.iter().sum::<f64>() / of.len() as f64
    };
    let (w7, c7) = (mean(seven, true), mean(seven, false));
    let (w20, c20) = (mean(twenty, true), mean(twenty, false));
    if w20 > 3.0 {
        return Err(format!("20-node warm mean iterations {w20:.2} > 3.0"));
    }
    if w20 >= c20 {
        return Err(format!("20-node warm {w20:.2} not below cold {c20:.2}"));
    }
    if w7 > 1.5 {
        return Err(format!("7-node warm mean iterations {w7:.2} > 1.5"));
    }
    Ok(format!(
        "mean iterations 7-node {c7:.2} -> {w7:.2}, 20-node {c20:.2} -> {w20:.2}"
    ))
}

/// Criterion 4: trained test-set MAE <= half the dummy mean predictor's
/// MAE on both synthetic networks.
fn criterion_4(ctxs: &[&NetCtx]) -> Check {
    let mut detail = Vec::new();
    for ctx in ctxs {
        let n = ctx.data.inputs.len();
        if n < 500 {
            return Err(format!("only {n} presolved scenarios, need >= 500"));
        }
        let slot0: &dyn Predictor = &ctx.artifact.models[0];
        let trained = evaluate_mae(slot0, &ctx.data).unwrap();
        let dummy = evaluate_mae(&dummy_mean_predictor(&ctx.net), &ctx.data).unwrap();
        let ratio = trained.average / dummy.average;
        if ratio > 0.5 {
            return Err(format!(
                "{}-node network: trained MAE {:.4} vs dummy {:.4}, ratio {ratio:.2} > 0.5",
                ctx.net.nodes.len(),
                trained.average,
                dummy.average
            ));
        }
        detail.push(format!(
            "{}-node ratio {:.3}",
            ctx.net.nodes.len(),
            ratio
        ));
    }
    Ok(format!("MAE vs dummy: {}", detail.join(", ")))
}

/// Criterion 5: six-slot run on the 20-node network conserves line
/// pack: aggregate terminal equality to 1e-6 relative, per-pipeline
/// telescoping to 1e-8, and the constant-load optimum matches the
/// replicated steady-state optimum to 1e-4 relative.
fn criterion_5() -> Check {
    let net = twenty_node_like(0);
    // Tighter stop threshold than the benchmark default so the
    // objective comparison at 1e-4 has headroom. Not tighter than 1e-4:
    // one pipeline carries near-zero flow, and its relative violation
    // metric stalls around 1e-5 while the absolute mismatch is already
    // negligible.
    let cfg = CcpConfig {
        zeta0: 1e-4,
        solve_tol: 1e-10,
        ..CcpConfig::default()
    };
    let horizon = 6;

    let solve_tight = |instance: &ProblemInstance,
                       extra: Option<&[f64]>|
     -> Result<(f64, Vec<f64>), String> {
        let mut runs: Vec<(_, CcpConfig)> = (0..4)
            .map(|r| (cold_start(instance, restart_seed(5, 0, r)), cfg.clone()))
            .collect();
        if let Some(predicted) = extra {
            // A weak initial penalty lets the first iterate escape the
            // basin of the already-tight warm point, so start the warm
            // attempt with the penalty at its cap.
            let anchored = CcpConfig { tau1: cfg.tau_max, ..cfg.clone() };
            let start =
                warm_start_from_pressures(instance, predicted).map_err(|e| e.to_string())?;
            runs.push((start, anchored));
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (start, run_cfg) in &runs {
            if let Ok(res) = run_ccp(instance, start, run_cfg) {
                if res.status == CcpStatus::Converged
                    && best
                        .as_ref()
                        .map_or(true, |(b, _)| res.solution.objective < *b)
                {
                    best = Some((res.solution.objective, res.solution.values));
                }
            }
        }
        best.ok_or_else(|| "no restart converged".into())
    };

    // Steady state first; its pressures seed the multi-slot search,
    // and its line pack anchors the initial condition so the
    // replicated steady state is feasible for the multi-slot model.
    let ss = build_steady_state(&net, &Scenario::unit(&net, 1)).unwrap();
    let (ss_obj, ss_values) = solve_tight(&ss, None)?;
    let ss_pressures: Vec<f64> = (0..net.nodes.len())
        .map(|n| ss_values[ss.pressure_var(n, 0)])
        .collect();
    let m0: std::collections::BTreeMap<u32, f64> = net
        .pipelines
        .iter()
        .map(|p| {
            let (m, n) = (net.node_index(p.from_node).unwrap(), net.node_index(p.to_node).unwrap());
            (p.id, p.linepack_coefficient * 0.5 * (ss_pressures[m] + ss_pressures[n]))
        })
        .collect();
    let mut sc = Scenario::unit(&net, horizon);
    sc.initial_linepack = m0.clone();
    let instance = build_quasi_dynamic(&net, &sc).unwrap();
    let replicated: Vec<f64> = ss_pressures
        .iter()
        .cycle()
        .take(net.nodes.len() * horizon)
        .copied()
        .collect();
    let (qd_obj, x) = solve_tight(&instance, Some(&replicated))?;
    let x = &x;

    // Aggregate terminal equality.
    let total_m0: f64 = m0.values().sum();
    let total_mt: f64 = (0..net.pipelines.len())
        .map(|p| x[instance.var_index(VarKind::Linepack { pipe: p }, horizon - 1).unwrap()])
        .sum();
    let agg = (total_mt - total_m0).abs() / total_m0.abs();
    if agg > 1e-6 {
        return Err(format!("aggregate line-pack mismatch {agg:.3e} > 1e-6"));
    }

    // Telescoped dynamics per pipeline.
    let mut worst_tel: f64 = 0.0;
    for (p, pipe) in net.pipelines.iter().enumerate() {
        let m_start = m0[&pipe.id];
        let m_end = x[instance.var_index(VarKind::Linepack { pipe: p }, horizon - 1).unwrap()];
        let net_in: f64 = (0..horizon)
            .map(|t| {
                x[instance.var_index(VarKind::FlowIn { pipe: p }, t).unwrap()]
                    - x[instance.var_index(VarKind::FlowOut { pipe: p }, t).unwrap()]
            })
            .sum();
        worst_tel = worst_tel.max((m_end - m_start - net_in).abs());
    }
    if worst_tel > 1e-8 {
        return Err(format!("telescoped dynamics residual {worst_tel:.3e} > 1e-8"));
    }

    // Constant-load multi-slot optimum vs replicated steady state.
    let rel = (qd_obj - horizon as f64 * ss_obj).abs() / (horizon as f64 * ss_obj);
    if rel > 1e-4 {
        return Err(format!(
            "multi-slot {qd_obj:.6} vs {horizon}x steady {:.6}: gap {rel:.3e} > 1e-4",
            horizon as f64 * ss_obj
        ));
    }
    Ok(format!(
        "aggregate {agg:.1e}, telescoping {worst_tel:.1e}, objective gap {rel:.1e}"
    ))
}

/// Central-difference loss gradient for one parameter slot.
fn loss(m: &Mlp, input: &[f64], target: &[f64]) -> f64 {
    let y = forward(m, input).unwrap();
    0.5 * y
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
}

/// Criterion 6: numerical kernels — gradient check, optimizer update
/// identity, linearization tangency, and a 20-program solver battery
/// with known answers and KKT residuals <= 1e-8.
fn criterion_6() -> Check {
    // Gradient check against central differences, off the ReLU kink.
    let mlp = Mlp::new(&[3, 5, 2], 12).unwrap();
    let input = [0.4, -0.9, 1.3];
    let target = [0.5, -0.25];
    let grads = backward(&mlp, &input, &target).unwrap();
    let h = 1e-5;
    let mut worst_grad: f64 = 0.0;
    for l in 0..mlp.weights.len() {
        for i in 0..mlp.weights[l].len() {
            let mut plus = mlp.clone();
            plus.weights[l][i] += h;
            let mut minus = mlp.clone();
            minus.weights[l][i] -= h;
            let fd = (loss(&plus, &input, &target) - loss(&minus, &input, &target)) / (2.0 * h);
            let g = grads.weights[l][i];
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
            worst_grad = worst_grad.max(rel);
        }
    }
    if worst_grad > 1e-4 {
        return Err(format!("gradient check relative error {worst_grad:.3e} > 1e-4"));
    }

    // Optimizer update against hand-computed values:
    // v = 0.9*v + 0.1*g^2, p -= eta*g/sqrt(v + eps).
    let cfg = TrainConfig::default();
    let mut params = [1.0, -2.0];
    let grads_v = [0.5, -1.5];
    let mut state = [0.04, 0.16];
    rmsprop_step(&mut params, &grads_v, &mut state, &cfg);
    let mut worst_step: f64 = 0.0;
    for i in 0..2 {
        let v = 0.9 * [0.04, 0.16][i] + 0.1 * grads_v[i] * grads_v[i];
        let p = [1.0, -2.0][i] - cfg.eta * grads_v[i] / (v + cfg.epsilon).sqrt();
        worst_step = worst_step.max((params[i] - p).abs().max((state[i] - v).abs()));
    }
    if worst_step > 1e-10 {
        return Err(format!("optimizer update off by {worst_step:.3e} > 1e-10"));
    }

    // Tangency: the convexified reverse inequality is tight at its own
    // linearization point.
    let net = network_t1();
    let instance = build_steady_state(&net, &Scenario::unit(&net, 1)).unwrap();
    let predicted = [3.0, 2.0];
    let point = warm_start_from_pressures(&instance, &predicted).unwrap();
    let program = assemble_subproblem(&instance, &point, 1.0).unwrap();
    let mut x = vec![0.0; program.num_vars];
    let e = point.entry(0, 0);
    for (i, v) in instance.vars.iter().enumerate() {
        x[i] = match v.kind {
            VarKind::NodePressure { node } => predicted[node],
            VarKind::PipelineFlow { .. } => e.flow,
            _ => 0.0,
        };
    }
    // The epigraph variable has no defining equality (only the cone and
    // the reverse row touch it), so pin it to the squared high pressure
    // first; the remaining auxiliaries then follow from their equalities.
    let mut hi_by_tag = std::collections::HashMap::new();
    for row in &program.eq_rows {
        if let Some(tag) = row.label.strip_prefix("aux_p[") {
            let hi = row.terms.iter().find(|&&(_, c)| c == -2.0).unwrap().0;
            hi_by_tag.insert(tag, hi);
        }
    }
    for row in &program.eq_rows {
        if let Some(tag) = row.label.strip_prefix("aux_q[") {
            let u = row.terms.iter().find(|&&(_, c)| c == -1.0).unwrap().0;
            x[u] = x[hi_by_tag[tag]] * x[hi_by_tag[tag]];
        }
    }
    // Fill the epigraph auxiliaries from their defining equalities.
    for row in &program.eq_rows {
        if let Some(&(aux, coeff)) = row
            .terms
            .iter()
            .find(|(i, _)| *i >= program.num_instance_vars)
        {
            let partial: f64 = row
                .terms
                .iter()
                .filter(|(i, _)| *i != aux)
                .map(|&(i, c)| c * x[i])
                .sum();
            x[aux] = (row.rhs - partial) / coeff;
        }
    }
    let mut worst_tan: f64 = 0.0;
    for row in &program.ineq_rows {
        if row.label.starts_with("reverse") {
            worst_tan = worst_tan.max((row.eval(&x) - row.rhs).abs());
        }
    }
    if worst_tan > 1e-10 {
        return Err(format!("tangency residual {worst_tan:.3e} > 1e-10"));
    }

    // Solver battery: 10 LPs and 10 cone programs with known optima.
    let mut worst_obj: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    for k in 0..10 {
        let c = 1.0 + 0.5 * k as f64;
        // min x0 + 2 x1  s.t. x0 + x1 = c, 0 <= x <= 10  =>  obj = c.
        let lp = ConicProgram {
            num_vars: 2,
            num_instance_vars: 2,
            objective: vec![1.0, 2.0],
            eq_rows: vec![LinRow {
                label: "sum".into(),
                terms: vec![(0, 1.0), (1, 1.0)],
                rhs: c,
            }],
            ineq_rows: vec![],
            cones: vec![],
            bounds: vec![(0.0, 10.0), (0.0, 10.0)],
            slack_vars: vec![],
        };
        let sol = solve(&lp, 1e-9).map_err(|e| format!("LP {k}: {e}"))?;
        if sol.status != SolveStatus::Optimal {
            return Err(format!("LP {k}: {:?}", sol.status));
        }
        worst_obj = worst_obj.max((sol.objective - c).abs());
        worst_kkt = worst_kkt.max(sol.achieved_tol);

        let (a, b) = (0.3 + 0.2 * k as f64, 1.0 - 0.1 * k as f64);
        // min t  s.t. x = a, y = b, ||(x, y)|| <= t  =>  obj = hypot(a, b).
        let socp = ConicProgram {
            num_vars: 3,
            num_instance_vars: 3,
            objective: vec![1.0, 0.0, 0.0],
            eq_rows: vec![
                LinRow {
                    label: "x".into(),
                    terms: vec![(1, 1.0)],
                    rhs: a,
                },
                LinRow {
                    label: "y".into(),
                    terms: vec![(2, 1.0)],
                    rhs: b,
                },
            ],
            ineq_rows: vec![],
            cones: vec![ConeMembership {
                head: 0,
                tail: vec![1, 2],
            }],
            bounds: vec![
                (f64::NEG_INFINITY, f64::INFINITY),
                (f64::NEG_INFINITY, f64::INFINITY),
                (f64::NEG_INFINITY, f64::INFINITY),
            ],
            slack_vars: vec![],
        };
        let sol = solve(&socp, 1e-9).map_err(|e| format!("cone program {k}: {e}"))?;
        if sol.status != SolveStatus::Optimal {
            return Err(format!("cone program {k}: {:?}", sol.status));
        }
        worst_obj = worst_obj.max((sol.objective - a.hypot(b)).abs());
        worst_kkt = worst_kkt.max(sol.achieved_tol);
    }
    if worst_kkt > 1e-8 {
        return Err(format!("solver KKT residual {worst_kkt:.3e} > 1e-8"));
    }
    if worst_obj > 1e-6 {
        return Err(format!("solver objective error {worst_obj:.3e}"));
    }
    Ok(format!(
        "gradients {worst_grad:.1e}, optimizer {worst_step:.1e}, tangency {worst_tan:.1e}, \
         battery KKT {worst_kkt:.1e}"
    ))
}

/// Criterion 7: sampling, training, solving, and benchmarking are
/// reproducible across consecutive runs and worker-pool sizes 1 and 4.
fn criterion_7(ctx7: &NetCtx) -> Check {
    let net = &ctx7.net;

    // sample
    let s1 = sample_scenarios(net, 10, 0.1, 1, 77).unwrap();
    let s2 = sample_scenarios(net, 10, 0.1, 1, 77).unwrap();
    if s1 != s2 {
        return Err("scenario sampling differs between runs".into());
    }

    // train
    let cfg = TrainConfig {
        epochs: 60,
        ..TrainConfig::default()
    };
    let a1 = train_artifact(net, &ctx7.data, 1, &[], &cfg).unwrap().0;
    let a2 = train_artifact(net, &ctx7.data, 1, &[], &cfg).unwrap().0;
    if a1.to_text() != a2.to_text() {
        return Err("training produced different model files".into());
    }

    // solve
    let instance = build_steady_state(net, &s1[0]).unwrap();
    let ccp = CcpConfig::default();
    let r1 = run_ccp(&instance, &cold_start(&instance, 5), &ccp).unwrap();
    let r2 = run_ccp(&instance, &cold_start(&instance, 5), &ccp).unwrap();
    if serde_json::to_string(&r1.solution.values).unwrap()
        != serde_json::to_string(&r2.solution.values).unwrap()
        || r1.iterations != r2.iterations
    {
        return Err("solving differs between runs".into());
    }

    // bench across pool sizes {1, 4} and across two runs
    let mut reports = Vec::new();
    for threads in [1, 4, 1] {
        let cfg = BenchConfig {
            threads,
            ..BenchConfig::default()
        };
        let rep = run_benchmark(
            net,
            &s1,
            &[Method::ColdCcp, Method::WarmCcp],
            &cfg,
            Some(&ctx7.artifact),
        )
        .unwrap();
        reports.push(serde_json::to_string(&rep.without_timing()).unwrap());
    }
    if reports[0] != reports[1] || reports[0] != reports[2] {
        return Err("benchmark differs across pool sizes or runs".into());
    }
    Ok("sample, train, solve, bench identical across runs and pool sizes {1, 4}".into())
}

#[test]
fn acceptance() {
    let seven = make_ctx(seven_node_like(0), 520, 101);
    let twenty = make_ctx(twenty_node_like(0), 520, 202);

    let eval_scenarios = |ctx: &NetCtx, seed: u64| {
        let scenarios = sample_scenarios(&ctx.net, 50, 0.1, 1, seed).unwrap();
        run_methods(ctx, &scenarios)
    };
    let runs7 = eval_scenarios(&seven, 301);
    let runs20 = eval_scenarios(&twenty, 302);
    let all: Vec<&RunRecord> = runs7.iter().chain(runs20.iter()).collect();
    let r7: Vec<&RunRecord> = runs7.iter().collect();
    let r20: Vec<&RunRecord> = runs20.iter().collect();

    let results: Vec<(usize, Check)> = vec![
        (1, criterion_1(&all)),
        (2, criterion_2()),
        (3, criterion_3(&r7, &r20)),
        (4, criterion_4(&[&seven, &twenty])),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7(&seven)),
    ];

    let mut failed = 0;
    for (n, res) in &results {
        match res {
            Ok(detail) => println!("criterion {n}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL ({detail})");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}

// Target layout sanity for the shared context: every presolved target
// row is itself feasible for the original model.
#[test]
fn presolved_targets_are_feasible() {
    let net = network_t1();
    let scenarios = sample_scenarios(&net, 5, 0.1, 1, 404).unwrap();
    let (data, _) = build_training_set(&net, &scenarios, &PresolveConfig::default()).unwrap();
    for (sc, target) in scenarios.iter().zip(&data.targets) {
        let instance = build_steady_state(&net, sc).unwrap();
        let start = warm_start_from_pressures(&instance, target).unwrap();
        let res = run_ccp(&instance, &start, &CcpConfig::default()).unwrap();
        assert_eq!(res.status, CcpStatus::Converged);
        assert_eq!(
            pressure_targets(&instance, &res.solution.values).len(),
            target.len()
        );
    }
}
