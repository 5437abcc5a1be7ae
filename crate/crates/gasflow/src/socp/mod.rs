//! Standard-form convex conic subproblem: linear objective, linear
//! equalities and inequalities, variable bounds, and second-order cone
//! memberships over variables. Each CCP iteration assembles one of these
//! from a problem instance and a linearization point.

mod solver;

pub use solver::{solve, SolveStatus};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinRow, ProblemInstance, VarKind};

/// Default relative tolerance for the conic solver.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-8;

/// Weight of the low-pressure preference added to every subproblem.
/// The generation cost leaves the overall pressure level free, so
/// without a tie-break each run lands on an arbitrary point of the
/// optimal set and presolved pressure targets become unlearnable noise.
/// The weight is small enough to leave the reported objective untouched
/// at solver tolerance.
pub const PRESSURE_TIEBREAK: f64 = 1e-6;

/// Membership `||x[tail]|| <= x[head]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeMembership {
    pub head: usize,
    pub tail: Vec<usize>,
}

/// A conic program in standard form. The first `num_instance_vars`
/// variables coincide with the originating instance's variable space;
/// the rest are pipeline slacks and epigraph auxiliaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub num_instance_vars: usize,
    pub objective: Vec<f64>,
    pub eq_rows: Vec<LinRow>,
    /// Rows meaning `terms <= rhs`.
    pub ineq_rows: Vec<LinRow>,
    pub cones: Vec<ConeMembership>,
    /// (lower, upper) per variable; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
    /// Indices of the penalized slack variables, one per pipeline and slot.
    pub slack_vars: Vec<usize>,
}

impl ConicProgram {
    /// Plain-text debug dump, one line per row/cone.
    pub fn dump(&self) -> String {
        let term = |terms: &[(usize, f64)]| {
            terms
                .iter()
                .map(|&(i, c)| format!("{c:+}*x{i}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        s.push_str(&format!(
            "vars {} (instance {})\nmin {}\n",
            self.num_vars,
            self.num_instance_vars,
            term(&self
                .objective
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(i, &c)| (i, c))
                .collect::<Vec<_>>())
        ));
        for r in &self.eq_rows {
            s.push_str(&format!("eq   {}: {} = {}\n", r.label, term(&r.terms), r.rhs));
        }
        for r in &self.ineq_rows {
            s.push_str(&format!("ineq {}: {} <= {}\n", r.label, term(&r.terms), r.rhs));
        }
        for c in &self.cones {
            let tail = c
                .tail
                .iter()
                .map(|i| format!("x{i}"))
                .collect::<Vec<_>>()
                .join(", ");
            s.push_str(&format!("cone ||({tail})|| <= x{}\n", c.head));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_finite() || hi.is_finite() {
                s.push_str(&format!("bnd  {lo} <= x{i} <= {hi}\n"));
            }
        }
        s
    }
}

/// Solution of a conic program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicSolution {
    pub primal: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Worst of the primal/dual residuals reported by the backend.
    pub achieved_tol: f64,
}

/// Which file endpoint is treated as the high-pressure side of a pipeline
/// for one CCP run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Flow from `from_node` to `to_node` (file order).
    Forward,
    /// Flow from `to_node` to `from_node`.
    Reverse,
}

/// Linearization data for one pipeline at one slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelinePoint {
    pub orientation: Orientation,
    /// Pressure at the high side, clamped into its node bounds.
    pub pressure_high: f64,
    /// Pressure at the low side, clamped into its node bounds.
    pub pressure_low: f64,
    /// Nonnegative flow magnitude consistent with the orientation.
    pub flow: f64,
    /// Set when the orientation was a tie-break rather than a prediction.
    pub low_confidence: bool,
}

/// A full linearization point: one entry per pipeline per slot,
/// indexed `t * n_pipelines + pipe`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearizationPoint {
    pub horizon: usize,
    pub num_pipelines: usize,
    pub entries: Vec<PipelinePoint>,
}

impl LinearizationPoint {
    pub fn entry(&self, pipe: usize, t: usize) -> &PipelinePoint {
        &self.entries[t * self.num_pipelines + pipe]
    }

    pub fn entry_mut(&mut self, pipe: usize, t: usize) -> &mut PipelinePoint {
        &mut self.entries[t * self.num_pipelines + pipe]
    }
}

/// Assembles the penalized convex subproblem for one CCP iteration.
///
/// Per pipeline and slot, with the high-pressure side `h` and low side `l`
/// fixed by the point's orientation and `phi = |F|`:
///  - relaxation cone `||(pi_l, phi / C)|| <= pi_h`
///  - convexified reverse inequality
///    `pi_h^2 - (2 pi_l0 pi_l - pi_l0^2) - (2 F0 phi - F0^2) / C^2 <= s`
///    with `pi_h^2` held by an epigraph variable `u >= pi_h^2`
///    (second-order cone `||(2 pi_h, u - 1)|| <= u + 1`)
///  - the flow sign pinned to the orientation
/// and the slack `s >= 0` enters the objective with weight `tau`.
pub fn assemble_subproblem(
    instance: &ProblemInstance,
    point: &LinearizationPoint,
    tau: f64,
) -> Result<ConicProgram> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("penalty weight must be > 0 (got {tau})")));
    }
    let n_pipes = instance.network.pipelines.len();
    if point.horizon != instance.horizon || point.num_pipelines != n_pipes {
        return Err(Error::Missing(format!(
            "linearization point covers {} pipelines x {} slots, instance needs {} x {}",
            point.num_pipelines, point.horizon, n_pipes, instance.horizon
        )));
    }

    let n0 = instance.num_vars();
    let mut objective = instance.objective.clone();
    for (i, v) in instance.vars.iter().enumerate() {
        if matches!(v.kind, VarKind::NodePressure { .. }) {
            objective[i] += PRESSURE_TIEBREAK;
        }
    }
    let mut bounds: Vec<(f64, f64)> = instance.vars.iter().map(|v| (v.lower, v.upper)).collect();
    let mut eq_rows = instance.eq_rows.clone();
    let mut ineq_rows = instance.ineq_rows.clone();
    let mut cones = Vec::new();
    let mut slack_vars = Vec::new();
    let mut num_vars = n0;

    let push_var = |objective: &mut Vec<f64>,
                        bounds: &mut Vec<(f64, f64)>,
                        num_vars: &mut usize,
                        obj: f64,
                        lo: f64,
                        hi: f64|
     -> usize {
        objective.push(obj);
        bounds.push((lo, hi));
        *num_vars += 1;
        *num_vars - 1
    };

    for rec in &instance.weymouth {
        let pp = point.entry(rec.pipe, rec.t);
        let c = rec.coefficient;
        let (hi_var, lo_var, sigma) = match pp.orientation {
            Orientation::Forward => (rec.pressure_from_var, rec.pressure_to_var, 1.0),
            Orientation::Reverse => (rec.pressure_to_var, rec.pressure_from_var, -1.0),
        };
        let tag = if instance.horizon > 1 {
            format!("{}@{}", instance.network.pipelines[rec.pipe].id, rec.t + 1)
        } else {
            format!("{}", instance.network.pipelines[rec.pipe].id)
        };

        // Pin the flow sign to the orientation.
        let fb = &mut bounds[rec.flow_var];
        if sigma > 0.0 {
            fb.0 = fb.0.max(0.0);
        } else {
            fb.1 = fb.1.min(0.0);
        }

        let inf = f64::INFINITY;
        let s = push_var(&mut objective, &mut bounds, &mut num_vars, tau, 0.0, inf);
        slack_vars.push(s);
        let w = push_var(&mut objective, &mut bounds, &mut num_vars, 0.0, 0.0, inf);
        let u = push_var(&mut objective, &mut bounds, &mut num_vars, 0.0, 0.0, inf);
        let p2 = push_var(&mut objective, &mut bounds, &mut num_vars, 0.0, 0.0, inf);
        let qv = push_var(&mut objective, &mut bounds, &mut num_vars, 0.0, -inf, inf);
        let r = push_var(&mut objective, &mut bounds, &mut num_vars, 0.0, 0.0, inf);

        // w = sigma * F / C  (= |F| / C under the pinned sign)
        eq_rows.push(LinRow {
            label: format!("aux_w[{tag}]"),
            terms: vec![(w, 1.0), (rec.flow_var, -sigma / c)],
            rhs: 0.0,
        });
        // p2 = 2 pi_h ; qv = u - 1 ; r = u + 1
        eq_rows.push(LinRow {
            label: format!("aux_p[{tag}]"),
            terms: vec![(p2, 1.0), (hi_var, -2.0)],
            rhs: 0.0,
        });
        eq_rows.push(LinRow {
            label: format!("aux_q[{tag}]"),
            terms: vec![(qv, 1.0), (u, -1.0)],
            rhs: -1.0,
        });
        eq_rows.push(LinRow {
            label: format!("aux_r[{tag}]"),
            terms: vec![(r, 1.0), (u, -1.0)],
            rhs: 1.0,
        });
        // Relaxation cone ||(pi_l, w)|| <= pi_h.
        cones.push(ConeMembership {
            head: hi_var,
            tail: vec![lo_var, w],
        });
        // Epigraph cone ||(p2, qv)|| <= r encodes u >= pi_h^2.
        cones.push(ConeMembership {
            head: r,
            tail: vec![p2, qv],
        });
        // Linearized reverse inequality:
        // u - 2 pi_l0 pi_l - (2 F0 / C^2) sigma F - s <= -(pi_l0^2 + F0^2 / C^2)
        let pl0 = pp.pressure_low;
        let f0 = pp.flow;
        ineq_rows.push(LinRow {
            label: format!("reverse[{tag}]"),
            terms: vec![
                (u, 1.0),
                (lo_var, -2.0 * pl0),
                (rec.flow_var, -2.0 * f0 * sigma / (c * c)),
                (s, -1.0),
            ],
            rhs: -(pl0 * pl0 + f0 * f0 / (c * c)),
        });
    }

    Ok(ConicProgram {
        num_vars,
        num_instance_vars: n0,
        objective,
        eq_rows,
        ineq_rows,
        cones,
        bounds,
        slack_vars,
    })
}
