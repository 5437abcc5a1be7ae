//! Assembly of the steady-state and quasi-dynamic optimal gas flow
//! problems into an explicit variable/constraint description, and
//! evaluation of candidate points against the original nonconvex model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{GasNetwork, Scenario};

/// Default guard below which the relative Weymouth metric switches to a
/// normalized absolute residual (the ratio is singular at zero flow).
pub const DEFAULT_FLOW_FLOOR: f64 = 1e-6;

/// What a variable stands for. Index fields refer to positions in the
/// network's element lists, not element ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    /// Source output G_s.
    SourceOutput { source: usize },
    /// Pipeline flow F_mn (positive from `from_node` to `to_node`).
    PipelineFlow { pipe: usize },
    /// Quasi-dynamic inflow into the pipeline at the start node.
    FlowIn { pipe: usize },
    /// Quasi-dynamic outflow out of the pipeline at the end node.
    FlowOut { pipe: usize },
    /// Stored gas mass in the pipeline.
    Linepack { pipe: usize },
    /// Nodal pressure.
    NodePressure { node: usize },
    /// Transported flow through a compressor.
    CompressorFlow { comp: usize },
    /// Compressor gas consumption W = gamma * F_C.
    CompressorConsumption { comp: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarInfo {
    pub kind: VarKind,
    /// Time slot (0-based); always 0 for steady state.
    pub t: usize,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// A sparse linear row, meaning `sum(terms) = rhs` (equality) or
/// `sum(terms) <= rhs` (inequality), depending on which list holds it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinRow {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinRow {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// One nonconvex Weymouth record `F |F| = C^2 (pi_m^2 - pi_n^2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeymouthRecord {
    pub pipe: usize,
    pub t: usize,
    pub flow_var: usize,
    pub pressure_from_var: usize,
    pub pressure_to_var: usize,
    pub coefficient: f64,
    /// Upper pressure bound of the start node, used to normalize the
    /// near-zero-flow residual.
    pub pi_max_from: f64,
}

/// Assembled variable index space and constraint set for one OGF problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub network: GasNetwork,
    pub scenario: Scenario,
    pub horizon: usize,
    pub vars: Vec<VarInfo>,
    pub objective: Vec<f64>,
    pub eq_rows: Vec<LinRow>,
    pub ineq_rows: Vec<LinRow>,
    pub weymouth: Vec<WeymouthRecord>,
}

/// Candidate values for every variable of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionVector {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl SolutionVector {
    /// CSV emitter: one `name,value` line per variable.
    pub fn to_csv(&self, instance: &ProblemInstance) -> String {
        let mut s = String::from("variable,value\n");
        for (v, &x) in instance.vars.iter().zip(&self.values) {
            s.push_str(&format!("{},{}\n", v.name, x));
        }
        s
    }
}

/// Feasibility of a candidate point against the original nonconvex model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// xi: maximum relative Weymouth violation over pipelines and slots.
    pub max_weymouth_violation: f64,
    pub max_linear_residual: f64,
    pub residuals: Vec<(String, f64)>,
}

struct Builder {
    vars: Vec<VarInfo>,
    objective: Vec<f64>,
    eq_rows: Vec<LinRow>,
    ineq_rows: Vec<LinRow>,
    weymouth: Vec<WeymouthRecord>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vars: Vec::new(),
            objective: Vec::new(),
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            weymouth: Vec::new(),
        }
    }

    fn var(&mut self, kind: VarKind, t: usize, name: String, lower: f64, upper: f64) -> usize {
        self.vars.push(VarInfo {
            kind,
            t,
            name,
            lower,
            upper,
        });
        self.objective.push(0.0);
        self.vars.len() - 1
    }
}

/// Per-slot variable indices, in network element order.
struct SlotVars {
    source: Vec<usize>,
    flow: Vec<usize>,
    flow_in: Vec<usize>,
    flow_out: Vec<usize>,
    linepack: Vec<usize>,
    pressure: Vec<usize>,
    comp_flow: Vec<usize>,
    comp_cons: Vec<usize>,
}

fn add_slot_vars(b: &mut Builder, net: &GasNetwork, t: usize, quasi_dynamic: bool) -> SlotVars {
    let tag = |base: String| if quasi_dynamic {
        format!("{}@{}", base, t + 1)
    } else {
        base
    };
    let source = net
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            b.var(
                VarKind::SourceOutput { source: i },
                t,
                tag(format!("G[{}]", s.id)),
                s.g_min,
                s.g_max,
            )
        })
        .collect();
    let flow = net
        .pipelines
        .iter()
        .enumerate()
        .map(|(i, p)| {
            b.var(
                VarKind::PipelineFlow { pipe: i },
                t,
                tag(format!("F[{}]", p.id)),
                -p.f_max,
                p.f_max,
            )
        })
        .collect();
    let (flow_in, flow_out, linepack) = if quasi_dynamic {
        let fi = net
            .pipelines
            .iter()
            .enumerate()
            .map(|(i, p)| {
                b.var(
                    VarKind::FlowIn { pipe: i },
                    t,
                    tag(format!("qin[{}]", p.id)),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                )
            })
            .collect();
        let fo = net
            .pipelines
            .iter()
            .enumerate()
            .map(|(i, p)| {
                b.var(
                    VarKind::FlowOut { pipe: i },
                    t,
                    tag(format!("qout[{}]", p.id)),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                )
            })
            .collect();
        let m = net
            .pipelines
            .iter()
            .enumerate()
            .map(|(i, p)| {
                b.var(
                    VarKind::Linepack { pipe: i },
                    t,
                    tag(format!("M[{}]", p.id)),
                    0.0,
                    f64::INFINITY,
                )
            })
            .collect();
        (fi, fo, m)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let pressure = net
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            b.var(
                VarKind::NodePressure { node: i },
                t,
                tag(format!("pi[{}]", n.id)),
                n.pi_min,
                n.pi_max,
            )
        })
        .collect();
    let comp_flow = net
        .compressors
        .iter()
        .enumerate()
        .map(|(i, c)| {
            b.var(
                VarKind::CompressorFlow { comp: i },
                t,
                tag(format!("Fc[{}]", c.id)),
                0.0,
                c.fc_max,
            )
        })
        .collect();
    let comp_cons = net
        .compressors
        .iter()
        .enumerate()
        .map(|(i, c)| {
            b.var(
                VarKind::CompressorConsumption { comp: i },
                t,
                tag(format!("W[{}]", c.id)),
                0.0,
                c.gamma * c.fc_max,
            )
        })
        .collect();
    SlotVars {
        source,
        flow,
        flow_in,
        flow_out,
        linepack,
        pressure,
        comp_flow,
        comp_cons,
    }
}

/// Shared per-slot constraints: compressor consumption equality,
/// compression ratio bounds, nodal balance, Weymouth records.
/// `balance_flow`/`balance_return` name the variables carrying gas out of
/// the start node and into the end node of each pipeline (F for steady
/// state, q_in/q_out for quasi-dynamic).
#[allow(clippy::too_many_arguments)]
fn add_slot_constraints(
    b: &mut Builder,
    net: &GasNetwork,
    scenario: &Scenario,
    t: usize,
    sv: &SlotVars,
    balance_flow: &[usize],
    balance_return: &[usize],
    quasi_dynamic: bool,
) {
    let tag = |base: String| if quasi_dynamic {
        format!("{}@{}", base, t + 1)
    } else {
        base
    };
    for (i, c) in net.compressors.iter().enumerate() {
        // W = gamma * F_C
        b.eq_rows.push(LinRow {
            label: tag(format!("consumption[{}]", c.id)),
            terms: vec![(sv.comp_cons[i], 1.0), (sv.comp_flow[i], -c.gamma)],
            rhs: 0.0,
        });
        // pi_i <= pi_j <= R * pi_i
        let pi_i = sv.pressure[net.node_index(c.from_node).unwrap()];
        let pi_j = sv.pressure[net.node_index(c.to_node).unwrap()];
        b.ineq_rows.push(LinRow {
            label: tag(format!("ratio_lo[{}]", c.id)),
            terms: vec![(pi_i, 1.0), (pi_j, -1.0)],
            rhs: 0.0,
        });
        b.ineq_rows.push(LinRow {
            label: tag(format!("ratio_hi[{}]", c.id)),
            terms: vec![(pi_j, 1.0), (pi_i, -c.r_max)],
            rhs: 0.0,
        });
    }
    for (gi, node) in net.nodes.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (si, s) in net.sources.iter().enumerate() {
            if s.node == node.id {
                terms.push((sv.source[si], 1.0));
            }
        }
        for (pi, p) in net.pipelines.iter().enumerate() {
            if p.from_node == node.id {
                terms.push((balance_flow[pi], -1.0));
            }
            if p.to_node == node.id {
                terms.push((balance_return[pi], 1.0));
            }
        }
        for (ci, c) in net.compressors.iter().enumerate() {
            if c.from_node == node.id {
                terms.push((sv.comp_flow[ci], -1.0));
                terms.push((sv.comp_cons[ci], -1.0));
            }
            if c.to_node == node.id {
                terms.push((sv.comp_flow[ci], 1.0));
            }
        }
        b.eq_rows.push(LinRow {
            label: tag(format!("balance[{}]", node.id)),
            terms,
            rhs: scenario.lambda(node.id, t) * node.base_load,
        });
        let _ = gi;
    }
    for (pi, p) in net.pipelines.iter().enumerate() {
        let m = net.node_index(p.from_node).unwrap();
        let n = net.node_index(p.to_node).unwrap();
        b.weymouth.push(WeymouthRecord {
            pipe: pi,
            t,
            flow_var: sv.flow[pi],
            pressure_from_var: sv.pressure[m],
            pressure_to_var: sv.pressure[n],
            coefficient: p.weymouth_coefficient,
            pi_max_from: net.nodes[m].pi_max,
        });
    }
}

/// Builds the single-slot steady-state problem: minimize total source
/// cost subject to bounds, compressor coupling, nodal balance, and one
/// Weymouth record per pipeline.
pub fn build_steady_state(network: &GasNetwork, scenario: &Scenario) -> Result<ProblemInstance> {
    if scenario.horizon != 1 {
        return Err(Error::Dimension(format!(
            "steady state requires horizon 1 (got {})",
            scenario.horizon
        )));
    }
    let mut b = Builder::new();
    let sv = add_slot_vars(&mut b, network, 0, false);
    for (si, s) in network.sources.iter().enumerate() {
        b.objective[sv.source[si]] = s.unit_cost;
    }
    add_slot_constraints(&mut b, network, scenario, 0, &sv, &sv.flow, &sv.flow, false);
    Ok(ProblemInstance {
        network: network.clone(),
        scenario: scenario.clone(),
        horizon: 1,
        vars: b.vars,
        objective: b.objective,
        eq_rows: b.eq_rows,
        ineq_rows: b.ineq_rows,
        weymouth: b.weymouth,
    })
}

/// Builds the multi-slot quasi-dynamic problem with linepack dynamics:
/// per-slot bounds and balance with separate in/out flows, average-flow
/// coupling, linepack-pressure coupling, mass dynamics anchored at the
/// scenario's initial linepack, and the aggregate terminal equality.
pub fn build_quasi_dynamic(network: &GasNetwork, scenario: &Scenario) -> Result<ProblemInstance> {
    if scenario.horizon < 2 {
        return Err(Error::Dimension(format!(
            "quasi-dynamic requires horizon >= 2 (got {})",
            scenario.horizon
        )));
    }
    for p in &network.pipelines {
        if !scenario.initial_linepack.contains_key(&p.id) {
            return Err(Error::Missing(format!(
                "initial linepack missing for pipeline {}",
                p.id
            )));
        }
    }
    let horizon = scenario.horizon;
    let mut b = Builder::new();
    let mut slots = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let sv = add_slot_vars(&mut b, network, t, true);
        for (si, s) in network.sources.iter().enumerate() {
            b.objective[sv.source[si]] = s.unit_cost;
        }
        slots.push(sv);
    }
    for t in 0..horizon {
        let sv = &slots[t];
        add_slot_constraints(
            &mut b,
            network,
            scenario,
            t,
            sv,
            &sv.flow_in,
            &sv.flow_out,
            true,
        );
        for (pi, p) in network.pipelines.iter().enumerate() {
            // F = (q_in + q_out) / 2
            b.eq_rows.push(LinRow {
                label: format!("avgflow[{}]@{}", p.id, t + 1),
                terms: vec![
                    (sv.flow[pi], 1.0),
                    (sv.flow_in[pi], -0.5),
                    (sv.flow_out[pi], -0.5),
                ],
                rhs: 0.0,
            });
            // M = H/2 (pi_m + pi_n)
            let m = network.node_index(p.from_node).unwrap();
            let n = network.node_index(p.to_node).unwrap();
            b.eq_rows.push(LinRow {
                label: format!("linepack[{}]@{}", p.id, t + 1),
                terms: vec![
                    (sv.linepack[pi], 1.0),
                    (sv.pressure[m], -0.5 * p.linepack_coefficient),
                    (sv.pressure[n], -0.5 * p.linepack_coefficient),
                ],
                rhs: 0.0,
            });
            // M_t = M_{t-1} + q_in - q_out
            let mut terms = vec![
                (sv.linepack[pi], 1.0),
                (sv.flow_in[pi], -1.0),
                (sv.flow_out[pi], 1.0),
            ];
            let rhs = if t == 0 {
                scenario.initial_linepack[&p.id]
            } else {
                terms.push((slots[t - 1].linepack[pi], -1.0));
                0.0
            };
            b.eq_rows.push(LinRow {
                label: format!("dynamics[{}]@{}", p.id, t + 1),
                terms,
                rhs,
            });
        }
    }
    // Aggregate terminal equality: sum_p M[p, T] = sum_p M[p, 0].
    let last = &slots[horizon - 1];
    let total0: f64 = network
        .pipelines
        .iter()
        .map(|p| scenario.initial_linepack[&p.id])
        .sum();
    b.eq_rows.push(LinRow {
        label: "terminal_linepack".into(),
        terms: network
            .pipelines
            .iter()
            .enumerate()
            .map(|(pi, _)| (last.linepack[pi], 1.0))
            .collect(),
        rhs: total0,
    });
    Ok(ProblemInstance {
        network: network.clone(),
        scenario: scenario.clone(),
        horizon,
        vars: b.vars,
        objective: b.objective,
        eq_rows: b.eq_rows,
        ineq_rows: b.ineq_rows,
        weymouth: b.weymouth,
    })
}

impl ProblemInstance {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Index of the variable with the given kind and slot.
    pub fn var_index(&self, kind: VarKind, t: usize) -> Option<usize> {
        self.vars.iter().position(|v| v.kind == kind && v.t == t)
    }

    pub fn pressure_var(&self, node: usize, t: usize) -> usize {
        self.var_index(VarKind::NodePressure { node }, t)
            .expect("pressure variable exists")
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Relative Weymouth violation of one record at a candidate point.
pub fn weymouth_violation(rec: &WeymouthRecord, x: &[f64], flow_floor: f64) -> f64 {
    let f = x[rec.flow_var];
    let pm = x[rec.pressure_from_var];
    let pn = x[rec.pressure_to_var];
    let c = rec.coefficient;
    if f.abs() >= flow_floor {
        // Orient so the square-root argument matches the flow sign.
        let d = if f >= 0.0 { pm * pm - pn * pn } else { pn * pn - pm * pm };
        (c * d.max(0.0).sqrt() / f.abs() - 1.0).abs()
    } else {
        let resid = (f * f.abs() - c * c * (pm * pm - pn * pn)).abs();
        resid / (c * c * rec.pi_max_from * rec.pi_max_from)
    }
}

/// Evaluates a candidate point against the original nonconvex model:
/// the maximum relative Weymouth violation, plus absolute residuals of
/// every linear row and bound.
pub fn evaluate_solution(
    instance: &ProblemInstance,
    x: &SolutionVector,
    flow_floor: f64,
) -> Result<FeasibilityReport> {
    if x.values.len() != instance.num_vars() {
        return Err(Error::Dimension(format!(
            "solution has {} values, instance has {} variables",
            x.values.len(),
            instance.num_vars()
        )));
    }
    let v = &x.values;
    let mut residuals = Vec::new();
    let mut max_linear: f64 = 0.0;
    for row in &instance.eq_rows {
        let r = (row.eval(v) - row.rhs).abs();
        max_linear = max_linear.max(r);
        residuals.push((row.label.clone(), r));
    }
    for row in &instance.ineq_rows {
        let r = (row.eval(v) - row.rhs).max(0.0);
        max_linear = max_linear.max(r);
        residuals.push((row.label.clone(), r));
    }
    for (i, info) in instance.vars.iter().enumerate() {
        let r = (info.lower - v[i]).max(v[i] - info.upper).max(0.0);
        if r > 0.0 {
            max_linear = max_linear.max(r);
            residuals.push((format!("bound[{}]", info.name), r));
        }
    }
    let mut xi: f64 = 0.0;
    for rec in &instance.weymouth {
        let viol = weymouth_violation(rec, v, flow_floor);
        xi = xi.max(viol);
        let label = if instance.horizon > 1 {
            format!("weymouth[{}]@{}", instance.network.pipelines[rec.pipe].id, rec.t + 1)
        } else {
            format!("weymouth[{}]", instance.network.pipelines[rec.pipe].id)
        };
        residuals.push((label, viol));
    }
    Ok(FeasibilityReport {
        max_weymouth_violation: xi,
        max_linear_residual: max_linear,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Scenario;
    use crate::pipeline::netgen::{network_t1, network_t2};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn t1_steady(lambda2: f64) -> ProblemInstance {
        let net = network_t1();
        let mut sc = Scenario::unit(&net, 1);
        sc.lambda.insert((2, 0), lambda2);
        build_steady_state(&net, &sc).unwrap()
    }

    #[test]
    fn steady_state_t1_structure() {
        let inst = t1_steady(1.0);
        // G_1, F_12, pi_1, pi_2
        assert_eq!(inst.num_vars(), 4);
        assert_eq!(inst.weymouth.len(), 1);
        let names: Vec<&str> = inst.vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["G[1]", "F[1]", "pi[1]", "pi[2]"]);
        // balance at node 1: G - F = 0; node 2: F = 3
        let b1 = inst.eq_rows.iter().find(|r| r.label == "balance[1]").unwrap();
        assert_eq!(b1.rhs, 0.0);
        let b2 = inst.eq_rows.iter().find(|r| r.label == "balance[2]").unwrap();
        assert_eq!(b2.rhs, 3.0);
        assert_eq!(b2.terms, vec![(1, 1.0)]);
    }

    #[test]
    fn steady_state_scales_load_by_lambda() {
        let inst = t1_steady(1.1);
        let b2 = inst.eq_rows.iter().find(|r| r.label == "balance[2]").unwrap();
        assert!((b2.rhs - 3.3).abs() < 1e-12);
    }

    #[test]
    fn compressor_terms_enter_balance_with_consumption() {
        let net = network_t2();
        let sc = Scenario::unit(&net, 1);
        let inst = build_steady_state(&net, &sc).unwrap();
        let fc = inst.var_index(VarKind::CompressorFlow { comp: 0 }, 0).unwrap();
        let w = inst
            .var_index(VarKind::CompressorConsumption { comp: 0 }, 0)
            .unwrap();
        // Start node 2 loses F_C + W; end node 3 gains F_C.
        let b2 = inst.eq_rows.iter().find(|r| r.label == "balance[2]").unwrap();
        assert!(b2.terms.contains(&(fc, -1.0)));
        assert!(b2.terms.contains(&(w, -1.0)));
        let b3 = inst.eq_rows.iter().find(|r| r.label == "balance[3]").unwrap();
        assert!(b3.terms.contains(&(fc, 1.0)));
        assert!(!b3.terms.iter().any(|&(i, _)| i == w));
        // W = gamma F_C kept as an explicit equality.
        let cons = inst
            .eq_rows
            .iter()
            .find(|r| r.label == "consumption[1]")
            .unwrap();
        assert_eq!(cons.terms, vec![(w, 1.0), (fc, -0.01)]);
    }

    #[test]
    fn steady_state_rejects_multi_slot_scenario() {
        let net = network_t1();
        let sc = Scenario::unit(&net, 2);
        assert!(build_steady_state(&net, &sc).is_err());
    }

    fn t1_quasi(horizon: usize) -> ProblemInstance {
        let net = network_t1();
        let mut sc = Scenario::unit(&net, horizon);
        sc.initial_linepack = BTreeMap::from([(1u32, 4.0)]);
        build_quasi_dynamic(&net, &sc).unwrap()
    }

    #[test]
    fn quasi_dynamic_variable_count() {
        let inst = t1_quasi(2);
        // Per slot: 1 G + 1 F + 1 qin + 1 qout + 1 M + 2 pi = 7.
        assert_eq!(inst.num_vars(), 14);
        assert_eq!(inst.weymouth.len(), 2);
    }

    #[test]
    fn quasi_dynamic_requires_initial_linepack_and_horizon() {
        let net = network_t1();
        let sc = Scenario::unit(&net, 2);
        assert!(matches!(
            build_quasi_dynamic(&net, &sc),
            Err(Error::Missing(_))
        ));
        let mut sc1 = Scenario::unit(&net, 1);
        sc1.initial_linepack.insert(1, 4.0);
        assert!(build_quasi_dynamic(&net, &sc1).is_err());
    }

    #[test]
    fn terminal_row_sums_final_linepacks_against_initial_total() {
        let inst = t1_quasi(3);
        let row = inst
            .eq_rows
            .iter()
            .find(|r| r.label == "terminal_linepack")
            .unwrap();
        assert_eq!(row.rhs, 4.0);
        assert_eq!(row.terms.len(), 1);
        let (idx, coeff) = row.terms[0];
        assert_eq!(coeff, 1.0);
        assert_eq!(inst.vars[idx].t, 2);
        assert!(matches!(inst.vars[idx].kind, VarKind::Linepack { pipe: 0 }));
    }

    #[test]
    fn dynamics_rows_telescope() {
        // Summing the dynamics rows over t must reduce to
        // M_T - sum_t (q_in - q_out) = M_0 per pipeline.
        let inst = t1_quasi(4);
        let mut acc: Vec<f64> = vec![0.0; inst.num_vars()];
        let mut rhs = 0.0;
        for row in inst.eq_rows.iter().filter(|r| r.label.starts_with("dynamics[")) {
            for &(i, c) in &row.terms {
                acc[i] += c;
            }
            rhs += row.rhs;
        }
        assert!((rhs - 4.0).abs() < 1e-12);
        for (i, &c) in acc.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match inst.vars[i].kind {
                VarKind::Linepack { .. } => {
                    assert_eq!(inst.vars[i].t, 3, "only the terminal linepack survives");
                    assert!((c - 1.0).abs() < 1e-12);
                }
                VarKind::FlowIn { .. } => assert!((c + 1.0).abs() < 1e-12),
                VarKind::FlowOut { .. } => assert!((c - 1.0).abs() < 1e-12),
                ref other => panic!("unexpected variable in telescoped sum: {other:?}"),
            }
        }
    }

    #[test]
    fn constant_load_admits_replicated_steady_state() {
        // Steady-state point of T1 replicated per slot with q_in = q_out = F
        // and M constant satisfies all linear rows exactly.
        let net = network_t1();
        let mut sc = Scenario::unit(&net, 3);
        let pi1: f64 = 10.0f64.sqrt();
        let m0 = 1.0 * 0.5 * (pi1 + 1.0); // H = 1 on T1
        sc.initial_linepack.insert(1, m0);
        let inst = build_quasi_dynamic(&net, &sc).unwrap();
        let mut x = vec![0.0; inst.num_vars()];
        for (i, v) in inst.vars.iter().enumerate() {
            x[i] = match v.kind {
                VarKind::SourceOutput { .. } => 3.0,
                VarKind::PipelineFlow { .. }
                | VarKind::FlowIn { .. }
                | VarKind::FlowOut { .. } => 3.0,
                VarKind::Linepack { .. } => m0,
                VarKind::NodePressure { node } => if node == 0 { pi1 } else { 1.0 },
                _ => unreachable!(),
            };
        }
        let sol = SolutionVector {
            objective: inst.objective_value(&x),
            values: x,
        };
        let rep = evaluate_solution(&inst, &sol, DEFAULT_FLOW_FLOOR).unwrap();
        assert!(rep.max_linear_residual < 1e-9, "{}", rep.max_linear_residual);
        assert!(rep.max_weymouth_violation < 1e-9);
    }

    #[test]
    fn xi_zero_at_exact_weymouth_point() {
        let inst = t1_steady(1.0);
        let x = SolutionVector {
            values: vec![3.0, 3.0, 10.0f64.sqrt(), 1.0],
            objective: 3.0,
        };
        let rep = evaluate_solution(&inst, &x, DEFAULT_FLOW_FLOOR).unwrap();
        assert!(rep.max_weymouth_violation < 1e-12);
        assert!(rep.max_linear_residual < 1e-12);
    }

    #[test]
    fn xi_relative_deviation_for_short_flow() {
        let inst = t1_steady(1.0);
        // F = 2 against pressures implying F = 3: xi = |3/2 - 1| = 0.5.
        let x = SolutionVector {
            values: vec![3.0, 2.0, 10.0f64.sqrt(), 1.0],
            objective: 3.0,
        };
        let rep = evaluate_solution(&inst, &x, DEFAULT_FLOW_FLOOR).unwrap();
        assert!((rep.max_weymouth_violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn near_zero_flow_with_equal_pressures_has_no_violation() {
        let inst = t1_steady(1.0);
        let x = SolutionVector {
            values: vec![3.0, 0.0, 2.0, 2.0],
            objective: 3.0,
        };
        let rep = evaluate_solution(&inst, &x, DEFAULT_FLOW_FLOOR).unwrap();
        assert_eq!(rep.max_weymouth_violation, 0.0);
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let inst = t1_steady(1.0);
        let x = SolutionVector {
            values: vec![0.0; 3],
            objective: 0.0,
        };
        assert!(evaluate_solution(&inst, &x, DEFAULT_FLOW_FLOOR).is_err());
    }

    #[test]
    fn balance_residuals_sum_to_global_conservation() {
        // Summing nodal balance residuals equals total production minus
        // total consumption, load, and (quasi-dynamic) net accumulation.
        let inst = t1_quasi(2);
        let x: Vec<f64> = (0..inst.num_vars()).map(|i| 0.3 * i as f64).collect();
        let sum_resid: f64 = inst
            .eq_rows
            .iter()
            .filter(|r| r.label.starts_with("balance["))
            .map(|r| r.eval(&x) - r.rhs)
            .sum();
        let mut expected = 0.0;
        for (i, v) in inst.vars.iter().enumerate() {
            match v.kind {
                VarKind::SourceOutput { .. } => expected += x[i],
                VarKind::FlowIn { .. } => expected -= x[i],
                VarKind::FlowOut { .. } => expected += x[i],
                VarKind::CompressorConsumption { .. } => expected -= x[i],
                _ => {}
            }
        }
        for node in &inst.network.nodes {
            for t in 0..inst.horizon {
                expected -= inst.scenario.lambda(node.id, t) * node.base_load;
            }
        }
        assert!((sum_resid - expected).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn xi_invariant_under_joint_scaling(
            pm in 1.5f64..9.0, dn in 0.1f64..1.4, f in 0.1f64..8.0, a in 0.2f64..4.0
        ) {
            let inst = t1_steady(1.0);
            let rec = &inst.weymouth[0];
            let x1 = vec![0.0, f, pm, pm - dn];
            let x2 = vec![0.0, a * f, a * pm, a * (pm - dn)];
            let v1 = weymouth_violation(rec, &x1, DEFAULT_FLOW_FLOOR);
            let v2 = weymouth_violation(rec, &x2, DEFAULT_FLOW_FLOOR);
            prop_assert!((v1 - v2).abs() < 1e-9 * (1.0 + v1.abs()));
        }
    }
}
