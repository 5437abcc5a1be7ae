//! Training-set construction: pre-solve each demand scenario with
//! multi-start cold CCP, keep the best converged optimum, and pair the
//! demand features with the optimal nodal pressures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::ann::{fit_predictor, Dataset, TrainConfig};
use crate::ccp::{cold_start, run_ccp, CcpConfig, CcpResult, CcpStatus};
use crate::error::{Error, Result};
use crate::model::{build_quasi_dynamic, build_steady_state, ProblemInstance};
use crate::network::{GasNetwork, Scenario};
use crate::pipeline::artifact::ModelArtifact;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PresolveConfig {
    /// Cold restarts per scenario; the best converged run wins.
    pub restarts: usize,
    pub ccp: CcpConfig,
    pub seed: u64,
}

impl Default for PresolveConfig {
    fn default() -> PresolveConfig {
        PresolveConfig {
            restarts: 3,
            ccp: CcpConfig::default(),
            seed: 0,
        }
    }
}

/// Deterministic per-restart seed. Adding restarts extends the seed
/// sequence without changing earlier entries, so restarts = 5 reuses
/// the runs of restarts = 1.
pub fn restart_seed(base: u64, scenario_id: usize, restart: usize) -> u64 {
    let mut x = base
        .wrapping_add((scenario_id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((restart as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn build_instance(network: &GasNetwork, scenario: &Scenario) -> Result<ProblemInstance> {
    if scenario.horizon == 1 {
        build_steady_state(network, scenario)
    } else {
        build_quasi_dynamic(network, scenario)
    }
}

/// Best converged cold-start CCP result over `restarts` seeds, or None
/// when every restart fails or hits the iteration limit.
///
/// The start sequence is shared by every scenario (it does not depend
/// on the scenario id): the iteration is local, so per-scenario starts
/// would scatter neighboring scenarios across different solution
/// basins and turn the pressure targets into noise.
fn presolve_one(instance: &ProblemInstance, cfg: &PresolveConfig) -> Option<CcpResult> {
    let mut best: Option<CcpResult> = None;
    for r in 0..cfg.restarts {
        let start = cold_start(instance, restart_seed(cfg.seed, 0, r));
        let res = match run_ccp(instance, &start, &cfg.ccp) {
            Ok(res) => res,
            Err(_) => continue,
        };
        if res.status != CcpStatus::Converged {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => res.solution.objective < b.solution.objective,
        };
        if better {
            best = Some(res);
        }
    }
    best
}

/// Extracts the nodal pressures of a solution, slot-major in network
/// node order — the predictor's target layout.
pub fn pressure_targets(instance: &ProblemInstance, values: &[f64]) -> Vec<f64> {
    let n_nodes = instance.network.nodes.len();
    let mut out = Vec::with_capacity(n_nodes * instance.horizon);
    for t in 0..instance.horizon {
        for node in 0..n_nodes {
            out.push(values[instance.pressure_var(node, t)]);
        }
    }
    out
}

/// Pre-solves every scenario and assembles the supervised dataset.
/// Scenarios where no restart converges are dropped; the second return
/// value counts them. Fails when nothing converges at all.
pub fn build_training_set(
    network: &GasNetwork,
    scenarios: &[Scenario],
    cfg: &PresolveConfig,
) -> Result<(Dataset, usize)> {
    cfg.ccp.validate()?;
    if cfg.restarts == 0 {
        return Err(Error::Config("restarts must be >= 1".into()));
    }
    if scenarios.is_empty() {
        return Err(Error::Missing("no scenarios to pre-solve".into()));
    }
    let rows: Vec<Option<(Vec<f64>, Vec<f64>)>> = scenarios
        .par_iter()
        .map(|sc| {
            let instance = build_instance(network, sc).ok()?;
            let res = presolve_one(&instance, cfg)?;
            Some((
                sc.feature_vector(network),
                pressure_targets(&instance, &res.solution.values),
            ))
        })
        .collect();
    let dropped = rows.iter().filter(|r| r.is_none()).count();
    let (inputs, targets): (Vec<_>, Vec<_>) = rows.into_iter().flatten().unzip();
    if inputs.is_empty() {
        return Err(Error::Divergence(
            "no scenario converged during pre-solve".into(),
        ));
    }
    Ok((Dataset::new(inputs, targets)?, dropped))
}

/// Initial line pack for multi-slot runs: solve the nominal steady
/// state cold and fill M = H * (pi_m + pi_n) / 2 per pipeline.
pub fn default_initial_linepack(
    network: &GasNetwork,
    cfg: &PresolveConfig,
) -> Result<BTreeMap<u32, f64>> {
    let scenario = Scenario::unit(network, 1);
    let instance = build_steady_state(network, &scenario)?;
    let res = presolve_one(&instance, cfg).ok_or_else(|| {
        Error::Divergence("nominal steady state did not converge; cannot derive line pack".into())
    })?;
    let mut out = BTreeMap::new();
    for p in &network.pipelines {
        let mi = network.node_index(p.from_node).unwrap();
        let ni = network.node_index(p.to_node).unwrap();
        let pm = res.solution.values[instance.pressure_var(mi, 0)];
        let pn = res.solution.values[instance.pressure_var(ni, 0)];
        out.insert(p.id, p.linepack_coefficient * 0.5 * (pm + pn));
    }
    Ok(out)
}

/// Trains one predictor per time slot on shared features. `hidden`
/// empty means one hidden layer of twice the node count. Returns the
/// artifact plus per-slot loss histories.
pub fn train_artifact(
    network: &GasNetwork,
    data: &Dataset,
    horizon: usize,
    hidden: &[usize],
    config: &TrainConfig,
) -> Result<(ModelArtifact, Vec<Vec<f64>>)> {
    let n_nodes = network.nodes.len();
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    if data.targets[0].len() != n_nodes * horizon {
        return Err(Error::Dimension(format!(
            "target rows hold {} values, expected {} nodes x {} slots",
            data.targets[0].len(),
            n_nodes,
            horizon
        )));
    }
    let default_hidden = [2 * n_nodes];
    let hidden = if hidden.is_empty() { &default_hidden[..] } else { hidden };
    let mut models = Vec::with_capacity(horizon);
    let mut histories = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let slot_targets: Vec<Vec<f64>> = data
            .targets
            .iter()
            .map(|row| row[t * n_nodes..(t + 1) * n_nodes].to_vec())
            .collect();
        let slot_data = Dataset {
            inputs: data.inputs.clone(),
            targets: slot_targets,
            train_idx: data.train_idx.clone(),
            test_idx: data.test_idx.clone(),
        };
        let mut slot_cfg = config.clone();
        slot_cfg.seed = config.seed.wrapping_add(t as u64);
        let (model, history) = fit_predictor(&slot_data, hidden, &slot_cfg)?;
        models.push(model);
        histories.push(history);
    }
    Ok((
        ModelArtifact {
            horizon,
            node_count: n_nodes,
            models,
        },
        histories,
    ))
}

/// Dataset CSV: header `in_0,...,tg_0,...`, one row per sample. The
/// train/test split is not stored; re-split after reading.
pub fn write_dataset_csv(data: &Dataset) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..data.inputs[0].len())
        .map(|i| format!("in_{i}"))
        .chain((0..data.targets[0].len()).map(|i| format!("tg_{i}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (inp, tgt) in data.inputs.iter().zip(&data.targets) {
        let row: Vec<String> = inp.iter().chain(tgt.iter()).map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
    let n_in = header.split(',').filter(|c| c.starts_with("in_")).count();
    let n_tg = header.split(',').filter(|c| c.starts_with("tg_")).count();
    if n_in == 0 || n_tg == 0 {
        return Err(Error::Parse("dataset header must list in_* and tg_* columns".into()));
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("dataset line {}: {e}", lineno + 2)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != n_in + n_tg {
            return Err(Error::Parse(format!(
                "dataset line {}: {} columns, expected {}",
                lineno + 2,
                vals.len(),
                n_in + n_tg
            )));
        }
        inputs.push(vals[..n_in].to_vec());
        targets.push(vals[n_in..].to_vec());
    }
    Dataset::new(inputs, targets)
}
