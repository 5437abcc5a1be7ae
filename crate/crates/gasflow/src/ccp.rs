//! The penalty convex-concave iteration: warm-start construction from
//! predicted pressures (with flow-direction inference), the cold-start
//! baseline, and the iteration loop with the growing penalty schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    evaluate_solution, ProblemInstance, SolutionVector, DEFAULT_FLOW_FLOOR,
};
use crate::socp::{
    assemble_subproblem, solve, LinearizationPoint, Orientation, PipelinePoint, SolveStatus,
    DEFAULT_SOLVE_TOL,
};

/// Iteration parameters. Defaults follow the published parameter table:
/// stop threshold 1e-3, initial penalty 1, cap 1000, growth factor 2.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CcpConfig {
    /// Stop threshold on the maximum Weymouth violation.
    pub zeta0: f64,
    /// Initial penalty weight.
    pub tau1: f64,
    /// Penalty cap.
    pub tau_max: f64,
    /// Penalty growth factor, > 1.
    pub kappa: f64,
    pub max_iterations: usize,
    /// Near-zero-flow guard for the violation metric.
    pub flow_floor: f64,
    /// Conic solver tolerance.
    pub solve_tol: f64,
}

impl Default for CcpConfig {
    fn default() -> Self {
        CcpConfig {
            zeta0: 1e-3,
            tau1: 1.0,
            tau_max: 1000.0,
            kappa: 2.0,
            max_iterations: 50,
            flow_floor: DEFAULT_FLOW_FLOOR,
            solve_tol: DEFAULT_SOLVE_TOL,
        }
    }
}

impl CcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta0 > 0.0) {
            return Err(Error::Config("zeta0 must be > 0".into()));
        }
        if !(self.tau1 > 0.0) {
            return Err(Error::Config("tau1 must be > 0".into()));
        }
        if !(self.kappa > 1.0) {
            return Err(Error::Config("kappa must be > 1".into()));
        }
        if !(self.tau_max >= self.tau1) {
            return Err(Error::Config("tau_max must be >= tau1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CcpStatus {
    Converged,
    IterationLimit,
    SubproblemFailed,
}

/// One iteration of the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub tau: f64,
    pub xi: f64,
    pub objective: f64,
    pub max_slack: f64,
}

/// Outcome of one CCP run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcpResult {
    pub solution: SolutionVector,
    pub iterations: usize,
    pub final_xi: f64,
    pub trace: Vec<IterationRecord>,
    pub status: CcpStatus,
    /// Per pipeline x slot (`t * n_pipelines + pipe`): converged at zero
    /// flow with an active pressure gap, so the frozen orientation is
    /// questionable.
    pub direction_suspect: Vec<bool>,
}

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Builds a linearization point from predicted nodal pressures: clamp
/// into bounds, orient each pipeline toward its lower predicted pressure,
/// and derive the starting flow from the Weymouth relation.
///
/// `predicted` holds one pressure per node (network order) per slot,
/// slot-major, matching the predictor output layout.
pub fn warm_start_from_pressures(
    instance: &ProblemInstance,
    predicted: &[f64],
) -> Result<LinearizationPoint> {
    let net = &instance.network;
    let n_nodes = net.nodes.len();
    if predicted.len() != n_nodes * instance.horizon {
        return Err(Error::Missing(format!(
            "prediction covers {} values, need {} nodes x {} slots",
            predicted.len(),
            n_nodes,
            instance.horizon
        )));
    }
    let n_pipes = net.pipelines.len();
    let mut entries = Vec::with_capacity(n_pipes * instance.horizon);
    for t in 0..instance.horizon {
        for p in &net.pipelines {
            let mi = net.node_index(p.from_node).unwrap();
            let ni = net.node_index(p.to_node).unwrap();
            let pm = clamp(
                predicted[t * n_nodes + mi],
                net.nodes[mi].pi_min,
                net.nodes[mi].pi_max,
            );
            let pn = clamp(
                predicted[t * n_nodes + ni],
                net.nodes[ni].pi_min,
                net.nodes[ni].pi_max,
            );
            let tie = pm == pn;
            let (orientation, hi, lo) = if pm >= pn {
                (Orientation::Forward, pm, pn)
            } else {
                (Orientation::Reverse, pn, pm)
            };
            let flow = p.weymouth_coefficient * (hi * hi - lo * lo).max(0.0).sqrt();
            entries.push(PipelinePoint {
                orientation,
                pressure_high: hi,
                pressure_low: lo,
                flow,
                low_confidence: tie,
            });
        }
    }
    Ok(LinearizationPoint {
        horizon: instance.horizon,
        num_pipelines: n_pipes,
        entries,
    })
}

/// Cold-start baseline: pressures uniform within their bounds, flow
/// directions fixed by the network file's pipeline ordering regardless of
/// the sampled pressures, and the starting flow from the Weymouth
/// relation with a negative discriminant clamped to zero.
pub fn cold_start(instance: &ProblemInstance, seed: u64) -> LinearizationPoint {
    let net = &instance.network;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pipes = net.pipelines.len();
    let mut entries = Vec::with_capacity(n_pipes * instance.horizon);
    for _t in 0..instance.horizon {
        let pressures: Vec<f64> = net
            .nodes
            .iter()
            .map(|n| rng.gen_range(n.pi_min..=n.pi_max))
            .collect();
        for p in &net.pipelines {
            let mi = net.node_index(p.from_node).unwrap();
            let ni = net.node_index(p.to_node).unwrap();
            let (pm, pn) = (pressures[mi], pressures[ni]);
            let flow = p.weymouth_coefficient * (pm * pm - pn * pn).max(0.0).sqrt();
            entries.push(PipelinePoint {
                orientation: Orientation::Forward,
                pressure_high: pm,
                pressure_low: pn,
                flow,
                low_confidence: false,
            });
        }
    }
    LinearizationPoint {
        horizon: instance.horizon,
        num_pipelines: n_pipes,
        entries,
    }
}

/// Runs the penalty CCP loop: solve the convexified subproblem, measure
/// the Weymouth violation, and either stop or relinearize at the new
/// point with the penalty grown by `kappa` (capped at `tau_max`).
pub fn run_ccp(
    instance: &ProblemInstance,
    start: &LinearizationPoint,
    config: &CcpConfig,
) -> Result<CcpResult> {
    config.validate()?;
    let net = &instance.network;
    let mut point = start.clone();
    let mut tau = config.tau1;
    let mut trace = Vec::new();

    for iter in 1..=config.max_iterations {
        let program = assemble_subproblem(instance, &point, tau)?;
        let conic = solve(&program, config.solve_tol)?;
        if conic.status != SolveStatus::Optimal {
            return Err(Error::SubproblemFailed {
                iteration: iter,
                reason: format!("solver status {:?}", conic.status),
            });
        }
        let values: Vec<f64> = conic.primal[..program.num_instance_vars].to_vec();
        let objective = instance.objective_value(&values);
        let solution = SolutionVector { values, objective };
        let report = evaluate_solution(instance, &solution, config.flow_floor)?;
        let xi = report.max_weymouth_violation;
        let max_slack = program
            .slack_vars
            .iter()
            .map(|&s| conic.primal[s])
            .fold(0.0f64, f64::max);
        trace.push(IterationRecord {
            tau,
            xi,
            objective,
            max_slack,
        });

        let finish = |solution: SolutionVector, status: CcpStatus| {
            let mut suspect = vec![false; point.entries.len()];
            for rec in &instance.weymouth {
                let f = solution.values[rec.flow_var];
                let idx = rec.t * point.num_pipelines + rec.pipe;
                let pp = &point.entries[idx];
                let (hi_var, lo_var) = match pp.orientation {
                    Orientation::Forward => (rec.pressure_from_var, rec.pressure_to_var),
                    Orientation::Reverse => (rec.pressure_to_var, rec.pressure_from_var),
                };
                let gap = solution.values[hi_var] - solution.values[lo_var];
                if f.abs() < config.flow_floor && gap > 1e-6 {
                    suspect[idx] = true;
                }
            }
            CcpResult {
                final_xi: xi,
                solution,
                iterations: iter,
                trace: trace.clone(),
                status,
                direction_suspect: suspect,
            }
        };

        if xi < config.zeta0 {
            return Ok(finish(solution, CcpStatus::Converged));
        }
        if iter == config.max_iterations {
            return Ok(finish(solution, CcpStatus::IterationLimit));
        }

        // Relinearize at the subproblem's pressures; the flow is
        // recomputed from the Weymouth relation, not copied.
        for rec in &instance.weymouth {
            let idx = rec.t * point.num_pipelines + rec.pipe;
            let p = &net.pipelines[rec.pipe];
            let mi = net.node_index(p.from_node).unwrap();
            let ni = net.node_index(p.to_node).unwrap();
            let pm = clamp(
                solution.values[rec.pressure_from_var],
                net.nodes[mi].pi_min,
                net.nodes[mi].pi_max,
            );
            let pn = clamp(
                solution.values[rec.pressure_to_var],
                net.nodes[ni].pi_min,
                net.nodes[ni].pi_max,
            );
            let entry = &mut point.entries[idx];
            let (hi, lo) = match entry.orientation {
                Orientation::Forward => (pm, pn),
                Orientation::Reverse => (pn, pm),
            };
            entry.pressure_high = hi;
            entry.pressure_low = lo;
            entry.flow = p.weymouth_coefficient * (hi * hi - lo * lo).max(0.0).sqrt();
        }
        tau = (config.kappa * tau).min(config.tau_max);
    }
    unreachable!("loop returns on the final iteration");
}
