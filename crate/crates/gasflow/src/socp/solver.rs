//! Conic solver contract, backed by the Clarabel interior-point method.
//!
//! The contract is what matters to the rest of the crate: `solve` is
//! deterministic for fixed inputs, reports optimality only when the
//! backend's primal/dual residuals meet the requested tolerance, and
//! distinguishes infeasibility from numerical failure.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::socp::{ConicProgram, ConicSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Builds a CSC matrix from triplets, rows already grouped by cone block.
fn csc_from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(r, c, v) in triplets {
        by_col[c].push((r, v));
    }
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for col in &mut by_col {
        col.sort_by_key(|&(r, _)| r);
        for &(r, v) in col.iter() {
            rowval.push(r);
            nzval.push(v);
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Solves a conic program to the given tolerance.
///
/// `status == Optimal` implies the backend's primal and dual residuals
/// are at most `tol`; `Infeasible` carries a certificate-backed
/// detection; anything else maps to a numerical failure.
pub fn solve(program: &ConicProgram, tol: f64) -> Result<ConicSolution> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("solver tolerance must be > 0 (got {tol})")));
    }
    let n = program.num_vars;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let mut row = 0usize;

    // Zero cone: equality rows a.x = rhs  ->  s = rhs - a.x = 0.
    for r in &program.eq_rows {
        for &(i, c) in &r.terms {
            triplets.push((row, i, c));
        }
        b.push(r.rhs);
        row += 1;
    }
    if !program.eq_rows.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(program.eq_rows.len()));
    }

    // Nonnegative cone: a.x <= rhs and finite variable bounds.
    let nonneg_start = row;
    for r in &program.ineq_rows {
        for &(i, c) in &r.terms {
            triplets.push((row, i, c));
        }
        b.push(r.rhs);
        row += 1;
    }
    for (i, &(lo, hi)) in program.bounds.iter().enumerate() {
        if hi.is_finite() {
            triplets.push((row, i, 1.0));
            b.push(hi);
            row += 1;
        }
        if lo.is_finite() {
            triplets.push((row, i, -1.0));
            b.push(-lo);
            row += 1;
        }
    }
    if row > nonneg_start {
        cones.push(SupportedConeT::NonnegativeConeT(row - nonneg_start));
    }

    // Second-order cones: s = (x_head, x_tail...) with b = 0.
    for cone in &program.cones {
        triplets.push((row, cone.head, -1.0));
        b.push(0.0);
        row += 1;
        for &i in &cone.tail {
            triplets.push((row, i, -1.0));
            b.push(0.0);
            row += 1;
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.tail.len() + 1));
    }

    let a = csc_from_triplets(row, n, &triplets);
    let p = CscMatrix::<f64>::zeros((n, n));
    let settings = DefaultSettings {
        verbose: false,
        max_iter: 500,
        tol_gap_abs: tol,
        tol_gap_rel: tol,
        tol_feas: tol,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &program.objective, &a, &b, &cones, settings)
        .map_err(|e| Error::Numerical(format!("solver setup: {e}")))?;
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            SolveStatus::Infeasible
        }
        _ => SolveStatus::NumericalFailure,
    };
    Ok(ConicSolution {
        primal: sol.x.clone(),
        objective: sol.obj_val,
        status,
        achieved_tol: sol.r_prim.max(sol.r_dual),
    })
}
