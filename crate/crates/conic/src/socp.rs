use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use crate::{dot, SocpSpec, SolveResult, SolveStatus, SolverTolerances};

/// Column-major triplet accumulator for the Clarabel constraint matrix.
struct Builder {
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            n,
            cols: vec![Vec::new(); n],
            b: Vec::new(),
        }
    }

    fn push_row(&mut self, coeffs: &[f64], rhs: f64) {
        let r = self.b.len();
        for (j, &v) in coeffs.iter().enumerate() {
            if v != 0.0 {
                self.cols[j].push((r, v));
            }
        }
        self.b.push(rhs);
    }

    fn push_unit(&mut self, j: usize, coeff: f64, rhs: f64) {
        let r = self.b.len();
        self.cols[j].push((r, coeff));
        self.b.push(rhs);
    }

    fn matrix(&self) -> CscMatrix<f64> {
        let mut colptr = Vec::with_capacity(self.n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &self.cols {
            for &(r, v) in col {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        CscMatrix::new(self.b.len(), self.n, colptr, rowval, nzval)
    }

    /// `Aᵀz` from the stored columns.
    fn at_times(&self, z: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v * z[r]).sum())
            .collect()
    }
}

/// Solves `spec` with Clarabel.
///
/// Fixed variables (`lower == upper`) become zero-cone rows. Linear rows and
/// finite bounds are nonnegative-cone rows. Each block is one second-order
/// cone. Residuals in the result are recomputed from the returned iterates.
pub fn solve_socp(spec: &SocpSpec, tol: &SolverTolerances) -> SolveResult {
    if spec.validate().is_err() {
        return SolveResult::without_point(SolveStatus::NumericalError, 0);
    }
    let lp = &spec.linear;
    let n = lp.num_vars();
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return SolveResult::without_point(SolveStatus::Infeasible, 0);
    }

    let mut bld = Builder::new(n);
    let mut cones = Vec::new();

    let fixed: Vec<usize> = (0..n).filter(|&j| lp.lower[j] == lp.upper[j]).collect();
    for &j in &fixed {
        bld.push_unit(j, 1.0, lp.lower[j]);
    }
    if !fixed.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(fixed.len()));
    }

    let nonneg_start = bld.b.len();
    for (row, &rhs) in lp.rows.iter().zip(&lp.rhs) {
        bld.push_row(row, rhs);
    }
    for j in 0..n {
        if lp.lower[j] == lp.upper[j] {
            continue;
        }
        if lp.lower[j].is_finite() {
            bld.push_unit(j, -1.0, -lp.lower[j]);
        }
        if lp.upper[j].is_finite() {
            bld.push_unit(j, 1.0, lp.upper[j]);
        }
    }
    let nonneg = bld.b.len() - nonneg_start;
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    for block in &spec.cones {
        let neg_g: Vec<f64> = block.g.iter().map(|v| -v).collect();
        bld.push_row(&neg_g, block.h);
        for (row, &f) in block.f_rows.iter().zip(&block.f_const) {
            let neg: Vec<f64> = row.iter().map(|v| -v).collect();
            bld.push_row(&neg, f);
        }
        cones.push(SupportedConeT::SecondOrderConeT(block.f_rows.len() + 1));
    }

    let a = bld.matrix();
    let p = CscMatrix::zeros((n, n));
    let settings = DefaultSettings {
        verbose: false,
        max_iter: tol.max_iter.unwrap_or(200) as u32,
        tol_gap_abs: 1e-10,
        tol_gap_rel: 1e-10,
        tol_feas: 1e-10,
        tol_ktratio: 1e-8,
        ..DefaultSettings::default()
    };
    let Ok(mut solver) = DefaultSolver::new(&p, &lp.objective, &a, &bld.b, &cones, settings) else {
        return SolveResult::without_point(SolveStatus::NumericalError, 0);
    };
    solver.solve();
    let sol = &solver.solution;
    let iterations = sol.iterations as usize;

    match sol.status {
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            let status = if primal_certificate_holds(&bld, &sol.z) {
                SolveStatus::Infeasible
            } else {
                SolveStatus::NumericalError
            };
            return SolveResult::without_point(status, iterations);
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return SolveResult::without_point(SolveStatus::Unbounded, iterations);
        }
        _ => {}
    }
    if sol.x.iter().any(|v| !v.is_finite()) {
        return SolveResult::without_point(SolveStatus::NumericalError, iterations);
    }

    let point = sol.x.clone();
    let objective = dot(&lp.objective, &point);
    let dual_objective = -dot(&bld.b, &sol.z);
    let primal_residual = spec.max_violation(&point).max(0.0);
    let atz = bld.at_times(&sol.z);
    let qnorm = lp.objective.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let dual_residual = lp
        .objective
        .iter()
        .zip(&atz)
        .fold(0.0_f64, |m, (q, v)| m.max((q + v).abs()))
        / (1.0 + qnorm);
    let row_duals = sol.z[nonneg_start..nonneg_start + lp.num_rows()]
        .iter()
        .map(|v| v.max(0.0))
        .collect();

    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved if primal_residual <= tol.feas_tol => {
            SolveStatus::Optimal
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalError,
    };
    SolveResult {
        status,
        point,
        objective,
        dual_objective,
        row_duals,
        primal_residual,
        dual_residual,
        iterations,
    }
}

/// `Aᵀz ≈ 0` and `bᵀz < 0` for the returned dual ray.
fn primal_certificate_holds(bld: &Builder, z: &[f64]) -> bool {
    let zmax = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if zmax == 0.0 || !zmax.is_finite() {
        return false;
    }
    let atz = bld.at_times(z);
    let amax = bld
        .cols
        .iter()
        .flat_map(|c| c.iter())
        .fold(1.0_f64, |m, &(_, v)| m.max(v.abs()));
    let bz = dot(&bld.b, z);
    atz.iter().all(|v| v.abs() <= 1e-6 * zmax * amax) && bz < -1e-9 * zmax
}
