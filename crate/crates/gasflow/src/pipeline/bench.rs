//! Cold-start vs warm-start benchmark harness.
//!
//! Every scenario is solved by each requested method; violations are
//! recomputed from the returned point rather than trusted from the
//! solver. Gaps are relative to the grid oracle when it runs, otherwise
//! to the best objective any method found for that scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::ccp::{cold_start, run_ccp, warm_start_from_pressures, CcpConfig, CcpStatus};
use crate::error::{Error, Result};
use crate::model::{build_quasi_dynamic, build_steady_state, evaluate_solution, ProblemInstance};
use crate::network::{GasNetwork, Scenario};
use crate::pipeline::artifact::ModelArtifact;
use crate::pipeline::oracle::brute_force_oracle;
use crate::pipeline::training::{default_initial_linepack, restart_seed, PresolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ColdCcp,
    WarmCcp,
    Oracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ColdCcp => "cold",
            Method::WarmCcp => "warm",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub ccp: CcpConfig,
    pub seed: u64,
    pub oracle_resolution: f64,
    /// Worker threads; 0 leaves the pool at its default size.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> BenchConfig {
        BenchConfig {
            ccp: CcpConfig::default(),
            seed: 0,
            oracle_resolution: 1e-3,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario_id: usize,
    pub method: Method,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub objective: Option<f64>,
    /// Worst relaxation violation, recomputed from the returned point.
    pub xi: Option<f64>,
    pub status: String,
    /// Relative objective gap against the report's gap baseline.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub converged: usize,
    pub mean_wall_time_s: f64,
    pub mean_iterations: f64,
    pub mean_xi: f64,
    pub max_xi: f64,
    pub mean_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    /// "oracle" when the grid oracle ran, otherwise "best-of-methods".
    pub gap_baseline: String,
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<MethodSummary>,
}

impl BenchmarkReport {
    /// Copy with wall times and the pool size zeroed, so reports from
    /// runs that differ only in parallelism compare equal.
    pub fn without_timing(&self) -> BenchmarkReport {
        let mut out = self.clone();
        out.config.threads = 0;
        for r in &mut out.rows {
            r.wall_time_s = 0.0;
        }
        for s in &mut out.summaries {
            s.mean_wall_time_s = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from(
            "scenario_id,method,wall_time_s,iterations,objective,xi,status,gap\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.scenario_id,
                r.method.label(),
                r.wall_time_s,
                r.iterations,
                opt(r.objective),
                opt(r.xi),
                r.status,
                opt(r.gap),
            ));
        }
        out
    }
}

struct RawRow {
    scenario_id: usize,
    method: Method,
    wall_time_s: f64,
    iterations: usize,
    objective: Option<f64>,
    xi: Option<f64>,
    status: String,
}

fn run_one(
    instance: &ProblemInstance,
    method: Method,
    config: &BenchConfig,
    artifact: Option<&ModelArtifact>,
) -> Result<RawRow> {
    let sc = &instance.scenario;
    let started = Instant::now();
    match method {
        Method::Oracle => {
            let res = brute_force_oracle(&instance.network, sc, config.oracle_resolution)?;
            let report = evaluate_solution(instance, &res.best_point, config.ccp.flow_floor)?;
            Ok(RawRow {
                scenario_id: sc.id,
                method,
                wall_time_s: started.elapsed().as_secs_f64(),
                iterations: 0,
                objective: Some(res.best_objective),
                xi: Some(report.max_weymouth_violation),
                status: "optimal-grid".into(),
            })
        }
        Method::ColdCcp | Method::WarmCcp => {
            let start = match method {
                Method::ColdCcp => cold_start(instance, restart_seed(config.seed, sc.id, 0)),
                _ => {
                    let artifact = artifact.ok_or_else(|| {
                        Error::Missing("warm-start benchmark needs a trained model".into())
                    })?;
                    let predicted =
                        artifact.predict_pressures(&sc.feature_vector(&instance.network))?;
                    warm_start_from_pressures(instance, &predicted)?
                }
            };
            match run_ccp(instance, &start, &config.ccp) {
                Ok(res) => {
                    let report =
                        evaluate_solution(instance, &res.solution, config.ccp.flow_floor)?;
                    Ok(RawRow {
                        scenario_id: sc.id,
                        method,
                        wall_time_s: started.elapsed().as_secs_f64(),
                        iterations: res.iterations,
                        objective: Some(res.solution.objective),
                        xi: Some(report.max_weymouth_violation),
                        status: match res.status {
                            CcpStatus::Converged => "converged".into(),
                            CcpStatus::IterationLimit => "iteration-limit".into(),
                            CcpStatus::SubproblemFailed => "subproblem-failed".into(),
                        },
                    })
                }
                Err(Error::SubproblemFailed { iteration, reason }) => Ok(RawRow {
                    scenario_id: sc.id,
                    method,
                    wall_time_s: started.elapsed().as_secs_f64(),
                    iterations: iteration,
                    objective: None,
                    xi: None,
                    status: format!("subproblem-failed: {reason}"),
                }),
                Err(e) => Err(e),
            }
        }
    }
}

/// Runs every method on every scenario. Multi-slot scenarios missing an
/// initial line pack get the nominal steady-state fill before the runs.
pub fn run_benchmark(
    network: &GasNetwork,
    scenarios: &[Scenario],
    methods: &[Method],
    config: &BenchConfig,
    artifact: Option<&ModelArtifact>,
) -> Result<BenchmarkReport> {
    config.ccp.validate()?;
    if scenarios.is_empty() {
        return Err(Error::Missing("no scenarios to benchmark".into()));
    }
    if methods.is_empty() {
        return Err(Error::Missing("no methods requested".into()));
    }
    if methods.contains(&Method::Oracle) && scenarios.iter().any(|s| s.horizon != 1) {
        return Err(Error::Oracle(
            "grid oracle only covers single-slot scenarios".into(),
        ));
    }

    // Fill missing initial line pack once, outside the worker pool.
    let mut scenarios = scenarios.to_vec();
    if scenarios
        .iter()
        .any(|s| s.horizon > 1 && s.initial_linepack.len() < network.pipelines.len())
    {
        let presolve = PresolveConfig {
            ccp: config.ccp.clone(),
            seed: config.seed,
            ..PresolveConfig::default()
        };
        let fill = default_initial_linepack(network, &presolve)?;
        for s in &mut scenarios {
            if s.horizon > 1 && s.initial_linepack.len() < network.pipelines.len() {
                s.initial_linepack = fill.clone();
            }
        }
    }

    let work = |sc: &Scenario| -> Result<Vec<RawRow>> {
        let instance = if sc.horizon == 1 {
            build_steady_state(network, sc)?
        } else {
            build_quasi_dynamic(network, sc)?
        };
        methods
            .iter()
            .map(|&m| run_one(&instance, m, config, artifact))
            .collect()
    };
    let raw: Result<Vec<Vec<RawRow>>> = if config.threads == 0 {
        scenarios.par_iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| scenarios.par_iter().map(work).collect())
    };
    let raw: Vec<RawRow> = raw?.into_iter().flatten().collect();

    // Gap baseline per scenario.
    let use_oracle = methods.contains(&Method::Oracle);
    let baseline = |sid: usize| -> Option<f64> {
        if use_oracle {
            raw.iter()
                .find(|r| r.scenario_id == sid && r.method == Method::Oracle)
                .and_then(|r| r.objective)
        } else {
            raw.iter()
                .filter(|r| r.scenario_id == sid)
                .filter_map(|r| r.objective)
                .min_by(f64::total_cmp)
        }
    };
    let rows: Vec<BenchRow> = raw
        .iter()
        .map(|r| BenchRow {
            scenario_id: r.scenario_id,
            method: r.method,
            wall_time_s: r.wall_time_s,
            iterations: r.iterations,
            objective: r.objective,
            xi: r.xi,
            status: r.status.clone(),
            gap: match (r.objective, baseline(r.scenario_id)) {
                (Some(o), Some(b)) => Some((o - b) / b.abs().max(1e-12)),
                _ => None,
            },
        })
        .collect();

    let summaries = methods
        .iter()
        .map(|&m| {
            let of_m: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m).collect();
            let n = of_m.len().max(1) as f64;
            let mean = |f: &dyn Fn(&BenchRow) -> f64| of_m.iter().map(|r| f(r)).sum::<f64>() / n;
            let gaps: Vec<f64> = of_m.iter().filter_map(|r| r.gap).collect();
            MethodSummary {
                method: m,
                runs: of_m.len(),
                converged: of_m
                    .iter()
                    .filter(|r| r.status == "converged" || r.status == "optimal-grid")
                    .count(),
                mean_wall_time_s: mean(&|r| r.wall_time_s),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_xi: mean(&|r| r.xi.unwrap_or(f64::INFINITY)),
                max_xi: of_m
                    .iter()
                    .map(|r| r.xi.unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max),
                mean_gap: if gaps.is_empty() {
                    None
                } else {
                    Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
                },
            }
        })
        .collect();

    Ok(BenchmarkReport {
        config: config.clone(),
        gap_baseline: if use_oracle {
            "oracle".into()
        } else {
            "best-of-methods".into()
        },
        rows,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::TrainConfig;
    use crate::network::sample_scenarios;
    use crate::pipeline::netgen::network_t1;
    use crate::pipeline::training::{build_training_set, train_artifact};

    fn t1_artifact(net: &GasNetwork) -> ModelArtifact {
        let scenarios = sample_scenarios(net, 30, 0.1, 1, 11).unwrap();
        let (mut data, _) =
            build_training_set(net, &scenarios, &PresolveConfig::default()).unwrap();
        data.split(0.2, 0).unwrap();
        let cfg = TrainConfig {
            epochs: 120,
            ..TrainConfig::default()
        };
        train_artifact(net, &data, 1, &[], &cfg).unwrap().0
    }

    #[test]
    fn cold_and_oracle_agree_on_t1() {
        let net = network_t1();
        let scenarios = sample_scenarios(&net, 3, 0.1, 1, 5).unwrap();
        let cfg = BenchConfig {
            oracle_resolution: 5e-3,
            ..BenchConfig::default()
        };
        let report =
            run_benchmark(&net, &scenarios, &[Method::ColdCcp, Method::Oracle], &cfg, None)
                .unwrap();
        assert_eq!(report.gap_baseline, "oracle");
        assert_eq!(report.rows.len(), 6);
        for r in &report.rows {
            if r.method == Method::ColdCcp {
                assert_eq!(r.status, "converged");
                assert!(r.gap.unwrap().abs() < 5e-3, "gap {:?}", r.gap);
                assert!(r.xi.unwrap() < 1e-3);
            }
        }
        let cold = &report.summaries[0];
        assert_eq!(cold.converged, 3);
        assert!(cold.mean_iterations >= 1.0);
    }

    #[test]
    fn warm_runs_use_the_artifact() {
        let net = network_t1();
        let artifact = t1_artifact(&net);
        let scenarios = sample_scenarios(&net, 4, 0.1, 1, 6).unwrap();
        let cfg = BenchConfig::default();
        let report = run_benchmark(
            &net,
            &scenarios,
            &[Method::ColdCcp, Method::WarmCcp],
            &cfg,
            Some(&artifact),
        )
        .unwrap();
        assert_eq!(report.gap_baseline, "best-of-methods");
        for r in &report.rows {
            assert_eq!(r.status, "converged", "{:?}", r);
        }
        let warm = report
            .summaries
            .iter()
            .find(|s| s.method == Method::WarmCcp)
            .unwrap();
        assert_eq!(warm.converged, 4);
    }

    #[test]
    fn warm_without_artifact_is_an_error() {
        let net = network_t1();
        let scenarios = sample_scenarios(&net, 1, 0.1, 1, 7).unwrap();
        let err = run_benchmark(
            &net,
            &scenarios,
            &[Method::WarmCcp],
            &BenchConfig::default(),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("trained model"), "{err}");
    }

    #[test]
    fn report_is_deterministic_across_pool_sizes() {
        let net = network_t1();
        let scenarios = sample_scenarios(&net, 6, 0.1, 1, 8).unwrap();
        let mk = |threads| BenchConfig {
            threads,
            ..BenchConfig::default()
        };
        let a = run_benchmark(&net, &scenarios, &[Method::ColdCcp], &mk(1), None).unwrap();
        let b = run_benchmark(&net, &scenarios, &[Method::ColdCcp], &mk(4), None).unwrap();
        assert_eq!(
            serde_json::to_string(&a.without_timing()).unwrap(),
            serde_json::to_string(&b.without_timing()).unwrap()
        );
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let net = network_t1();
        let scenarios = sample_scenarios(&net, 2, 0.1, 1, 9).unwrap();
        let report =
            run_benchmark(&net, &scenarios, &[Method::ColdCcp], &BenchConfig::default(), None)
                .unwrap();
        let csv = report.rows_csv();
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        assert!(csv.starts_with("scenario_id,method,"));
    }
}
