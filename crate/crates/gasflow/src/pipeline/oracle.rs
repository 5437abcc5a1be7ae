//! Brute-force optimality reference for tiny steady-state networks.
//!
//! Pressures of every pipeline-coupled node are enumerated on a uniform
//! grid; pipeline flows follow from the Weymouth relation, source
//! outputs and compressor flows from a least-squares solve of the nodal
//! balance. A grid point is feasible when the balance residual stays
//! within one grid step and every bound holds; the cheapest feasible
//! point wins. Nodes touched only by compressors are not gridded; they
//! only need a nonempty pressure interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_steady_state, SolutionVector, VarKind};
use crate::network::{GasNetwork, Scenario};

/// Hard cap on grid evaluations; beyond this the network does not
/// qualify as tiny.
const MAX_EVALUATIONS: u128 = 400_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_objective: f64,
    /// Best point mapped onto the steady-state instance's variables.
    pub best_point: SolutionVector,
    pub resolution: f64,
    pub evaluations: u64,
}

struct Static {
    /// Coupled node index -> network node index.
    coupled: Vec<usize>,
    /// Pipelines as (from coupled slot, to coupled slot, C, f_max).
    pipes: Vec<(usize, usize, f64, f64)>,
    /// Balance matrix over unknowns (sources then compressors),
    /// row-major n_nodes x n_unknowns.
    a: Vec<f64>,
    n_nodes: usize,
    n_unknowns: usize,
    /// (A^T A)^{-1} A^T, row-major n_unknowns x n_nodes.
    pinv: Vec<f64>,
    /// Per-node load lambda * L.
    load: Vec<f64>,
    costs: Vec<f64>,
    g_bounds: Vec<(f64, f64)>,
    fc_bounds: Vec<f64>,
}

fn invert(mat: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let mut inv: Vec<f64> = (0..n * n)
        .map(|i| if i / n == i % n { 1.0 } else { 0.0 })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| mat[a * n + col].abs().total_cmp(&mat[b * n + col].abs()))?;
        if mat[pivot * n + col].abs() < 1e-12 {
            return None;
        }
        for j in 0..n {
            mat.swap(col * n + j, pivot * n + j);
            inv.swap(col * n + j, pivot * n + j);
        }
        let d = mat[col * n + col];
        for j in 0..n {
            mat[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = mat[r * n + col];
                for j in 0..n {
                    mat[r * n + j] -= f * mat[col * n + j];
                    inv[r * n + j] -= f * inv[col * n + j];
                }
            }
        }
    }
    Some(inv)
}

/// Exhaustive grid search over the coupled pressures.
pub fn brute_force_oracle(
    network: &GasNetwork,
    scenario: &Scenario,
    resolution: f64,
) -> Result<OracleResult> {
    if scenario.horizon != 1 {
        return Err(Error::Oracle("oracle handles steady state only".into()));
    }
    if !(resolution > 0.0) {
        return Err(Error::Oracle("resolution must be > 0".into()));
    }
    let coupled: Vec<usize> = (0..network.nodes.len())
        .filter(|&i| {
            let id = network.nodes[i].id;
            network
                .pipelines
                .iter()
                .any(|p| p.from_node == id || p.to_node == id)
        })
        .collect();
    if coupled.len() > 3 {
        return Err(Error::Oracle(format!(
            "network too large: {} pipeline-coupled pressure degrees of freedom (max 3)",
            coupled.len()
        )));
    }
    // Free nodes may touch at most one compressor each, and that
    // compressor's other end must be coupled; otherwise the interval
    // reasoning below does not apply.
    let free: Vec<usize> = (0..network.nodes.len())
        .filter(|i| !coupled.contains(i))
        .collect();
    for &fi in &free {
        let id = network.nodes[fi].id;
        let touching = network
            .compressors
            .iter()
            .filter(|c| c.from_node == id || c.to_node == id)
            .count();
        if touching != 1 {
            return Err(Error::Oracle(format!(
                "network too large: free node {id} touches {touching} compressors"
            )));
        }
        for c in &network.compressors {
            let other = if c.from_node == id {
                c.to_node
            } else if c.to_node == id {
                c.from_node
            } else {
                continue;
            };
            if free.iter().any(|&fj| network.nodes[fj].id == other) {
                return Err(Error::Oracle(
                    "network too large: compressor joins two free nodes".into(),
                ));
            }
        }
    }

    let slot = |id: u32| {
        coupled
            .iter()
            .position(|&i| network.nodes[i].id == id)
    };
    let pipes: Vec<(usize, usize, f64, f64)> = network
        .pipelines
        .iter()
        .map(|p| {
            (
                slot(p.from_node).unwrap(),
                slot(p.to_node).unwrap(),
                p.weymouth_coefficient,
                p.f_max,
            )
        })
        .collect();

    let n_nodes = network.nodes.len();
    let n_unknowns = network.sources.len() + network.compressors.len();
    let mut a = vec![0.0; n_nodes * n_unknowns];
    for (si, s) in network.sources.iter().enumerate() {
        a[network.node_index(s.node).unwrap() * n_unknowns + si] = 1.0;
    }
    for (ci, c) in network.compressors.iter().enumerate() {
        let col = network.sources.len() + ci;
        a[network.node_index(c.from_node).unwrap() * n_unknowns + col] = -(1.0 + c.gamma);
        a[network.node_index(c.to_node).unwrap() * n_unknowns + col] = 1.0;
    }
    let mut ata = vec![0.0; n_unknowns * n_unknowns];
    for i in 0..n_unknowns {
        for j in 0..n_unknowns {
            ata[i * n_unknowns + j] = (0..n_nodes)
                .map(|r| a[r * n_unknowns + i] * a[r * n_unknowns + j])
                .sum();
        }
    }
    let ata_inv = invert(&mut ata, n_unknowns)
        .ok_or_else(|| Error::Oracle("balance system is rank deficient".into()))?;
    let mut pinv = vec![0.0; n_unknowns * n_nodes];
    for i in 0..n_unknowns {
        for r in 0..n_nodes {
            pinv[i * n_nodes + r] = (0..n_unknowns)
                .map(|k| ata_inv[i * n_unknowns + k] * a[r * n_unknowns + k])
                .sum();
        }
    }

    let st = Static {
        pipes,
        a,
        n_nodes,
        n_unknowns,
        pinv,
        load: network
            .nodes
            .iter()
            .map(|n| scenario.lambda(n.id, 0) * n.base_load)
            .collect(),
        costs: network.sources.iter().map(|s| s.unit_cost).collect(),
        g_bounds: network.sources.iter().map(|s| (s.g_min, s.g_max)).collect(),
        fc_bounds: network.compressors.iter().map(|c| c.fc_max).collect(),
        coupled: coupled.clone(),
    };

    // Grid axes.
    let axes: Vec<Vec<f64>> = coupled
        .iter()
        .map(|&i| {
            let n = &network.nodes[i];
            let steps = ((n.pi_max - n.pi_min) / resolution).floor() as usize;
            let mut v: Vec<f64> = (0..=steps).map(|k| n.pi_min + k as f64 * resolution).collect();
            if *v.last().unwrap() < n.pi_max - 1e-12 {
                v.push(n.pi_max);
            }
            v
        })
        .collect();
    let total: u128 = axes.iter().map(|a| a.len() as u128).product();
    if total > MAX_EVALUATIONS {
        return Err(Error::Oracle(format!(
            "network too large: {total} grid evaluations exceed the cap"
        )));
    }
    // Balance residual tolerance: one grid step in flow units.
    let feas_tol = resolution;

    // Best = (objective, outer index, inner rank, pressures, unknowns, flows).
    type Best = Option<(f64, usize, usize, Vec<f64>, Vec<f64>, Vec<f64>)>;
    let scan_slice = |outer: usize| -> Best {
        let mut best: Best = None;
        let mut pressures = vec![0.0; coupled.len()];
        pressures[0] = axes[0][outer];
        let mut flows = vec![0.0; st.pipes.len()];
        let mut unknowns = vec![0.0; st.n_unknowns];
        let mut b = vec![0.0; st.n_nodes];
        let mut inner = 0usize;
        let mut idx = vec![0usize; coupled.len()];
        loop {
            for d in 1..coupled.len() {
                pressures[d] = axes[d][idx[d]];
            }
            inner += 1;
            if let Some(obj) = evaluate_point(&st, &pressures, &mut flows, &mut unknowns, &mut b, feas_tol)
            {
                let better = match &best {
                    None => true,
                    Some((bo, ..)) => obj < *bo,
                };
                if better {
                    best = Some((
                        obj,
                        outer,
                        inner,
                        pressures.clone(),
                        unknowns.clone(),
                        flows.clone(),
                    ));
                }
            }
            // Odometer over the inner axes.
            let mut d = coupled.len();
            loop {
                if d == 1 {
                    return best;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    };

    let slices: Vec<Best> = (0..axes[0].len())
        .into_par_iter()
        .map(scan_slice)
        .collect();
    let mut best: Best = None;
    for s in slices.into_iter().flatten() {
        let take = match &best {
            None => true,
            Some((bo, bout, binn, ..)) => {
                s.0 < *bo || (s.0 == *bo && (s.1, s.2) < (*bout, *binn))
            }
        };
        if take {
            best = Some(s);
        }
    }
    let inner: u128 = axes.iter().skip(1).map(|a| a.len() as u128).product();
    let evaluations = (axes[0].len() as u128 * inner) as u64;

    let (obj, _, _, pressures, unknowns, flows) = best.ok_or_else(|| {
        Error::Oracle("no feasible grid point".into())
    })?;

    // Map back onto the instance's variable space. Free node pressures
    // take the midpoint of their feasible interval.
    let instance = build_steady_state(network, scenario)?;
    let mut values = vec![0.0; instance.num_vars()];
    for (vi, v) in instance.vars.iter().enumerate() {
        values[vi] = match v.kind {
            VarKind::SourceOutput { source } => unknowns[source],
            VarKind::PipelineFlow { pipe } => flows[pipe],
            VarKind::CompressorFlow { comp } => unknowns[network.sources.len() + comp],
            VarKind::CompressorConsumption { comp } => {
                network.compressors[comp].gamma * unknowns[network.sources.len() + comp]
            }
            VarKind::NodePressure { node } => {
                if let Some(sl) = st.coupled.iter().position(|&i| i == node) {
                    pressures[sl]
                } else {
                    let spec = &network.nodes[node];
                    let mut lo = spec.pi_min;
                    let mut hi = spec.pi_max;
                    for c in &network.compressors {
                        if c.to_node == spec.id {
                            if let Some(s) = slot(c.from_node) {
                                lo = lo.max(pressures[s]);
                                hi = hi.min(c.r_max * pressures[s]);
                            }
                        }
                        if c.from_node == spec.id {
                            if let Some(s) = slot(c.to_node) {
                                lo = lo.max(pressures[s] / c.r_max);
                                hi = hi.min(pressures[s]);
                            }
                        }
                    }
                    0.5 * (lo + hi)
                }
            }
            _ => 0.0,
        };
    }
    let best_point = SolutionVector {
        objective: instance.objective_value(&values),
        values,
    };
    Ok(OracleResult {
        best_objective: obj,
        best_point,
        resolution,
        evaluations,
    })
}

/// Objective at one grid point, or None when infeasible.
#[inline]
fn evaluate_point(
    st: &Static,
    pressures: &[f64],
    flows: &mut [f64],
    unknowns: &mut [f64],
    b: &mut [f64],
    feas_tol: f64,
) -> Option<f64> {
    for (k, &(m, n, c, f_max)) in st.pipes.iter().enumerate() {
        let d = pressures[m] * pressures[m] - pressures[n] * pressures[n];
        let f = d.abs().sqrt() * c;
        let f = if d >= 0.0 { f } else { -f };
        if f.abs() > f_max {
            return None;
        }
        flows[k] = f;
    }
    b.copy_from_slice(&st.load);
    for (k, &(m, n, ..)) in st.pipes.iter().enumerate() {
        // b[g] = load + outgoing - incoming pipeline flow.
        b[st.coupled_node(m)] += flows[k];
        b[st.coupled_node(n)] -= flows[k];
    }
    for i in 0..st.n_unknowns {
        let mut x = 0.0;
        for r in 0..st.n_nodes {
            x += st.pinv[i * st.n_nodes + r] * b[r];
        }
        unknowns[i] = x;
    }
    // Residual and bounds.
    for r in 0..st.n_nodes {
        let mut ax = 0.0;
        for i in 0..st.n_unknowns {
            ax += st.a[r * st.n_unknowns + i] * unknowns[i];
        }
        if (ax - b[r]).abs() > feas_tol {
            return None;
        }
    }
    let n_sources = st.costs.len();
    let mut obj = 0.0;
    for s in 0..n_sources {
        let g = unknowns[s];
        let (lo, hi) = st.g_bounds[s];
        if g < lo - 1e-9 || g > hi + 1e-9 {
            return None;
        }
        obj += st.costs[s] * g;
    }
    for (c, &fc_max) in unknowns[n_sources..].iter().zip(&st.fc_bounds) {
        if *c < -1e-9 || *c > fc_max + 1e-9 {
            return None;
        }
    }
    Some(obj)
}

impl Static {
    /// Network node index of a coupled slot.
    #[inline]
    fn coupled_node(&self, slot: usize) -> usize {
        self.coupled[slot]
    }
}
