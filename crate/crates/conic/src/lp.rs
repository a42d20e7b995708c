use nalgebra::{DMatrix, DVector};

use crate::{dot, LinearProgramSpec, SolveResult, SolveStatus, SolverTolerances};

/// Smallest pivot element accepted by the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs above `-DUAL_TOL·scale` count as nonnegative.
const DUAL_TOL: f64 = 1e-10;
/// Step lengths below this make a pivot degenerate.
const DEGENERATE_STEP: f64 = 1e-12;

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `z = anchor + y`
    Shift { anchor: f64, col: usize },
    /// `z = anchor - y`
    Flip { anchor: f64, col: usize },
    /// `z = y⁺ - y⁻`
    Split { pos: usize, neg: usize },
}

/// `min cᵀy  s.t.  A y ≤ b, y ≥ 0`, up to a constant.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    maps: Vec<VarMap>,
    user_rows: usize,
}

impl StandardForm {
    /// `None` when some variable has `lower > upper`.
    fn build(spec: &LinearProgramSpec) -> Option<Self> {
        let mut maps = Vec::with_capacity(spec.num_vars());
        let mut ny = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for (&lo, &hi) in spec.lower.iter().zip(&spec.upper) {
            if lo > hi {
                return None;
            }
            let map = match (lo.is_finite(), hi.is_finite()) {
                (false, false) => {
                    ny += 2;
                    VarMap::Split {
                        pos: ny - 2,
                        neg: ny - 1,
                    }
                }
                (true, false) => VarMap::Shift {
                    anchor: lo,
                    col: ny,
                },
                (false, true) => VarMap::Flip {
                    anchor: hi,
                    col: ny,
                },
                (true, true) => {
                    // Anchor at the smaller bound in magnitude so that a wide
                    // box such as [-1e9, 0] does not shift every row by 1e9.
                    bound_rows.push((ny, hi - lo));
                    if lo.abs() <= hi.abs() {
                        VarMap::Shift {
                            anchor: lo,
                            col: ny,
                        }
                    } else {
                        VarMap::Flip {
                            anchor: hi,
                            col: ny,
                        }
                    }
                }
            };
            if !matches!(map, VarMap::Split { .. }) {
                ny += 1;
            }
            maps.push(map);
        }

        let mut c = vec![0.0; ny];
        for (&cj, map) in spec.objective.iter().zip(&maps) {
            match *map {
                VarMap::Shift { col, .. } => {
                    c[col] += cj;
                }
                VarMap::Flip { col, .. } => {
                    c[col] -= cj;
                }
                VarMap::Split { pos, neg } => {
                    c[pos] += cj;
                    c[neg] -= cj;
                }
            }
        }

        let mut a = Vec::with_capacity(spec.num_rows() + bound_rows.len());
        let mut b = Vec::with_capacity(a.capacity());
        for (row, &rhs) in spec.rows.iter().zip(&spec.rhs) {
            let mut out = vec![0.0; ny];
            let mut shift = 0.0;
            for (&aij, map) in row.iter().zip(&maps) {
                if aij == 0.0 {
                    continue;
                }
                match *map {
                    VarMap::Shift { anchor, col } => {
                        out[col] += aij;
                        shift += aij * anchor;
                    }
                    VarMap::Flip { anchor, col } => {
                        out[col] -= aij;
                        shift += aij * anchor;
                    }
                    VarMap::Split { pos, neg } => {
                        out[pos] += aij;
                        out[neg] -= aij;
                    }
                }
            }
            a.push(out);
            b.push(rhs - shift);
        }
        let user_rows = a.len();
        for (col, width) in bound_rows {
            let mut out = vec![0.0; ny];
            out[col] = 1.0;
            a.push(out);
            b.push(width);
        }
        Some(Self {
            a,
            b,
            c,
            maps,
            user_rows,
        })
    }

    fn ny(&self) -> usize {
        self.c.len()
    }

    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift { anchor, col } => anchor + y[col],
                VarMap::Flip { anchor, col } => anchor - y[col],
                VarMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Dense tableau over columns `[structural | slacks | artificials | rhs]`.
struct Tableau {
    m: usize,
    ny: usize,
    width: usize,
    t: Vec<f64>,
    /// Reduced costs, with `-objective` in the rhs slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// +1, or -1 when the row was negated to make its rhs nonnegative.
    sign: Vec<f64>,
    iterations: usize,
    max_iter: usize,
}

impl Tableau {
    fn new(sf: &StandardForm, max_iter: Option<usize>) -> Self {
        let m = sf.a.len();
        let ny = sf.ny();
        let sign: Vec<f64> =
            sf.b.iter()
                .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
                .collect();
        let n_art = sign.iter().filter(|&&s| s < 0.0).count();
        let width = ny + m + n_art + 1;
        let mut t = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = ny + m;
        for r in 0..m {
            let row = &mut t[r * width..(r + 1) * width];
            let s = sign[r];
            for (dst, &src) in row[..ny].iter_mut().zip(&sf.a[r]) {
                *dst = s * src;
            }
            row[ny + r] = s;
            row[width - 1] = s * sf.b[r];
            if s < 0.0 {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(ny + r);
            }
        }
        let cols = width - 1;
        let max_iter = max_iter.unwrap_or(50 * (m + cols) + 1000);
        Self {
            m,
            ny,
            width,
            t,
            obj: vec![0.0; width],
            basis,
            sign,
            iterations: 0,
            max_iter,
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.width..(r + 1) * self.width]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * self.width + self.width - 1]
    }

    fn first_artificial(&self) -> usize {
        self.ny + self.m
    }

    /// Loads reduced costs for the column costs `cost` (length `width - 1`).
    fn load_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        self.obj.iter_mut().for_each(|v| *v = 0.0);
        self.obj[..w - 1].copy_from_slice(cost);
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * w..(r + 1) * w];
                for (o, &v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let inv = 1.0 / prow[e];
        prow.iter_mut().for_each(|v| *v *= inv);
        prow[e] = 1.0;
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for (a, &p) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
                row[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (a, &p) in self.obj.iter_mut().zip(prow.iter()) {
                *a -= f * p;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Primal simplex over entering candidates `0..allowed`.
    fn run(&mut self, allowed: usize, dual_scale: f64) -> PhaseOutcome {
        let dtol = DUAL_TOL * dual_scale;
        let bland_after = 10 * (self.m + self.width - 1);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] < -dtol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..allowed {
                    let d = self.obj[j];
                    if d < -dtol && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(e) = entering else {
                return PhaseOutcome::Optimal;
            };
            if self.iterations >= self.max_iter {
                return PhaseOutcome::IterationLimit;
            }

            let mut leave: Option<(usize, f64, f64)> = None;
            for r in 0..self.m {
                let a = self.t[r * self.width + e];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio, la)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio);
                        if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > la
                            }
                        } else {
                            ratio < lratio
                        }
                    }
                };
                if better {
                    leave = Some((r, ratio, a));
                }
            }
            let Some((r, ratio, _)) = leave else {
                return PhaseOutcome::Unbounded;
            };
            if ratio <= DEGENERATE_STEP {
                degenerate_run += 1;
                if degenerate_run > bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e);
            self.iterations += 1;
        }
    }

    /// Multiplier of row `r` in `≤` form: the reduced cost of its slack.
    fn slack_dual(&self, r: usize) -> f64 {
        self.obj[self.ny + r]
    }

    /// Column `col` of the stored (sign-adjusted) constraint matrix.
    fn original_column(&self, sf: &StandardForm, col: usize) -> Vec<f64> {
        if col < self.ny {
            (0..self.m).map(|r| self.sign[r] * sf.a[r][col]).collect()
        } else if col < self.ny + self.m {
            let mut v = vec![0.0; self.m];
            v[col - self.ny] = self.sign[col - self.ny];
            v
        } else {
            // Artificials are unit columns on the row they were created for.
            let r = (0..self.m)
                .filter(|&r| self.sign[r] < 0.0)
                .nth(col - self.ny - self.m)
                .unwrap_or(0);
            let mut v = vec![0.0; self.m];
            v[r] = 1.0;
            v
        }
    }
}

/// Re-solves the optimal basis with LU: `B x_B = b`, `Bᵀy = c_B`.
/// Returns standard-form `y` values and the row multipliers.
///
/// A row whose own slack is basic only fixes that slack, so it is left out of
/// the factorization; its multiplier is zero. Otherwise a wide bound row such
/// as `β ≥ -1e9` puts 1e9 into the right-hand side and the LU error on every
/// other basic value scales with it.
fn refine(sf: &StandardForm, tab: &Tableau, cost: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = tab.m;
    let own_slack = |r: usize| tab.basis.iter().any(|&c| c == tab.ny + r);
    let rows: Vec<usize> = (0..m).filter(|&r| !own_slack(r)).collect();
    let cols: Vec<usize> = tab
        .basis
        .iter()
        .copied()
        .filter(|&c| !(c >= tab.ny && c < tab.ny + m && !rows.contains(&(c - tab.ny))))
        .collect();
    let k = rows.len();
    if cols.len() != k {
        return None;
    }
    let mut xb_vals = vec![0.0; cols.len()];
    let mut yr = vec![0.0; m];
    if k > 0 {
        let mut bmat = DMatrix::<f64>::zeros(k, k);
        for (jk, &col) in cols.iter().enumerate() {
            let v = tab.original_column(sf, col);
            for (ik, &r) in rows.iter().enumerate() {
                bmat[(ik, jk)] = v[r];
            }
        }
        let rhs = DVector::from_iterator(k, rows.iter().map(|&r| tab.sign[r] * sf.b[r]));
        let cb = DVector::from_iterator(k, cols.iter().map(|&c| cost[c]));
        let xb = bmat.clone().lu().solve(&rhs)?;
        let y = bmat.transpose().lu().solve(&cb)?;
        if xb.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        xb_vals.copy_from_slice(xb.as_slice());
        for (ik, &r) in rows.iter().enumerate() {
            yr[r] = y[ik];
        }
    }
    let mut ystd = vec![0.0; tab.ny];
    for (jk, &col) in cols.iter().enumerate() {
        if col < tab.ny {
            ystd[col] = xb_vals[jk].max(0.0);
        }
    }
    // Slack reduced cost is 0 - sign_r·y_r.
    let duals = (0..m).map(|r| -tab.sign[r] * yr[r]).collect();
    Some((ystd, duals))
}

/// Solves `spec` with a two-phase dense simplex.
///
/// Infeasibility is only reported after the phase-one Farkas multipliers are
/// checked against the data; otherwise the status is `NumericalError`.
pub fn solve_lp(spec: &LinearProgramSpec, tol: &SolverTolerances) -> SolveResult {
    if spec.validate().is_err() {
        return SolveResult::without_point(SolveStatus::NumericalError, 0);
    }
    let Some(sf) = StandardForm::build(spec) else {
        return SolveResult::without_point(SolveStatus::Infeasible, 0);
    };
    let mut tab = Tableau::new(&sf, tol.max_iter);
    let cols = tab.width - 1;
    let first_art = tab.first_artificial();

    if cols > first_art {
        let mut cost1 = vec![0.0; cols];
        cost1[first_art..].iter_mut().for_each(|v| *v = 1.0);
        tab.load_objective(&cost1);
        match tab.run(cols, 1.0) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::IterationLimit => {
                return SolveResult::without_point(SolveStatus::IterationLimit, tab.iterations)
            }
            // Phase one is bounded below by zero.
            PhaseOutcome::Unbounded => {
                return SolveResult::without_point(SolveStatus::NumericalError, tab.iterations)
            }
        }
        let infeasibility = -tab.obj[tab.width - 1];
        if infeasibility > tol.feas_tol {
            let status = if farkas_holds(&sf, &tab, tol) {
                SolveStatus::Infeasible
            } else {
                SolveStatus::NumericalError
            };
            return SolveResult::without_point(status, tab.iterations);
        }
        drive_out_artificials(&mut tab);
    }

    let mut cost2 = vec![0.0; cols];
    cost2[..tab.ny].copy_from_slice(&sf.c);
    let cscale = 1.0 + sf.c.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    tab.load_objective(&cost2);
    let outcome = tab.run(first_art, cscale);
    let iterations = tab.iterations;
    match outcome {
        PhaseOutcome::Unbounded => {
            return SolveResult::without_point(SolveStatus::Unbounded, iterations)
        }
        PhaseOutcome::IterationLimit | PhaseOutcome::Optimal => {}
    }

    let (ystd, duals) = refine(&sf, &tab, &cost2).unwrap_or_else(|| {
        let mut y = vec![0.0; tab.ny];
        for r in 0..tab.m {
            if tab.basis[r] < tab.ny {
                y[tab.basis[r]] = tab.rhs(r).max(0.0);
            }
        }
        (y, (0..tab.m).map(|r| tab.slack_dual(r)).collect())
    });
    let point = sf.recover(&ystd);
    let objective = spec.objective_value(&point);
    let primal_residual = spec.max_violation(&point).max(0.0);
    let row_duals: Vec<f64> = duals[..sf.user_rows].iter().map(|v| v.max(0.0)).collect();
    let (dual_objective, dual_residual) = lagrangian_dual(spec, &row_duals, &duals[..sf.user_rows]);

    let status = match outcome {
        PhaseOutcome::IterationLimit => SolveStatus::IterationLimit,
        _ if primal_residual > tol.feas_tol => SolveStatus::NumericalError,
        _ => SolveStatus::Optimal,
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

/// Dual value `min_{l≤z≤u} cᵀz + λᵀ(Az − b)` and the dual infeasibility of
/// `λ` (negative entries, or reduced costs pushing toward an infinite bound).
fn lagrangian_dual(spec: &LinearProgramSpec, lambda: &[f64], raw: &[f64]) -> (f64, f64) {
    let mut residual = raw.iter().fold(0.0_f64, |a, &v| a.max(-v));
    let mut value = -dot(lambda, &spec.rhs);
    for j in 0..spec.num_vars() {
        let (mut r, mut mag) = (spec.objective[j], spec.objective[j].abs());
        for (row, l) in spec.rows.iter().zip(lambda) {
            r += row[j] * l;
            mag += (row[j] * l).abs();
        }
        // Rounding noise times a bound like 1e9 would swamp the value.
        if r.abs() <= 1e-12 * mag {
            r = 0.0;
        }
        if r > 0.0 {
            if spec.lower[j].is_finite() {
                value += r * spec.lower[j];
            } else {
                residual = residual.max(r);
            }
        } else if r < 0.0 {
            if spec.upper[j].is_finite() {
                value += r * spec.upper[j];
            } else {
                residual = residual.max(-r);
            }
        }
    }
    (value, residual)
}

/// Checks `λ ≥ 0, Aᵀλ ≥ 0, bᵀλ < 0` for the phase-one multipliers.
fn farkas_holds(sf: &StandardForm, tab: &Tableau, tol: &SolverTolerances) -> bool {
    let lambda: Vec<f64> = (0..tab.m).map(|r| tab.slack_dual(r)).collect();
    let lmax = lambda.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if lmax == 0.0 {
        return false;
    }
    let amax =
        sf.a.iter()
            .flat_map(|r| r.iter())
            .fold(1.0_f64, |a, v| a.max(v.abs()));
    let slack = 1e-9 * lmax * amax;
    if lambda.iter().any(|&l| l < -1e-9 * lmax) {
        return false;
    }
    for j in 0..tab.ny {
        let s: f64 = sf.a.iter().zip(&lambda).map(|(row, l)| row[j] * l).sum();
        if s < -slack {
            return false;
        }
    }
    dot(&sf.b, &lambda) < -0.5 * tol.feas_tol
}

fn drive_out_artificials(tab: &mut Tableau) {
    let first_art = tab.first_artificial();
    for r in 0..tab.m {
        if tab.basis[r] < first_art {
            continue;
        }
        let row = tab.row(r);
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in row[..first_art].iter().enumerate() {
            if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b) {
                best = Some((j, v.abs()));
            }
        }
        // A row with no eligible entry is redundant; its artificial stays
        // basic at zero and can never re-enter.
        if let Some((j, _)) = best {
            tab.pivot(r, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> SolverTolerances {
        SolverTolerances::default()
    }

    #[test]
    fn single_lower_bound() {
        // min x s.t. x ≥ 3
        let mut lp = LinearProgramSpec::new(vec![1.0]);
        lp.add_row(vec![-1.0], -3.0);
        let res = solve_lp(&lp, &tol());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.point[0] - 3.0).abs() < 1e-12);
        assert!((res.objective - 3.0).abs() < 1e-12);
        assert!(res.gap() < 1e-12);
    }

    #[test]
    fn textbook_simplex() {
        // min -x1 - x2 s.t. x1 + x2 ≤ 1, x ≥ 0
        let mut lp = LinearProgramSpec::new(vec![-1.0, -1.0]);
        lp.add_row(vec![1.0, 1.0], 1.0);
        lp.set_bounds(0, 0.0, f64::INFINITY);
        lp.set_bounds(1, 0.0, f64::INFINITY);
        let res = solve_lp(&lp, &tol());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective + 1.0).abs() < 1e-12);
        assert!((res.row_duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_rows_are_certified() {
        // x ≤ 1 and x ≥ 2
        let mut lp = LinearProgramSpec::new(vec![0.0]);
        lp.add_row(vec![1.0], 1.0);
        lp.add_row(vec![-1.0], -2.0);
        assert_eq!(solve_lp(&lp, &tol()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let mut lp = LinearProgramSpec::new(vec![1.0]);
        lp.set_bounds(0, 1.0, 0.0);
        assert_eq!(solve_lp(&lp, &tol()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgramSpec::new(vec![-1.0, 0.0]);
        lp.add_row(vec![1.0, -1.0], 1.0);
        lp.set_bounds(0, 0.0, f64::INFINITY);
        lp.set_bounds(1, 0.0, f64::INFINITY);
        assert_eq!(solve_lp(&lp, &tol()).status, SolveStatus::Unbounded);
    }

    #[test]
    fn free_and_flipped_variables() {
        // min x - y with x free, y ≤ 2, x ≥ y - 5, x ≥ -1 - y
        let mut lp = LinearProgramSpec::new(vec![1.0, -1.0]);
        lp.set_bounds(1, f64::NEG_INFINITY, 2.0);
        lp.add_row(vec![-1.0, 1.0], 5.0);
        lp.add_row(vec![-1.0, -1.0], 1.0);
        let res = solve_lp(&lp, &tol());
        assert_eq!(res.status, SolveStatus::Optimal);
        // x - y ≥ -5 is tight; any y ≤ 2 with x = y - 5 ≥ -1 - y works.
        assert!((res.objective + 5.0).abs() < 1e-10);
        assert!(res.gap() < 1e-10);
    }

    #[test]
    fn wide_box_bounds_keep_rows_unshifted() {
        // min b s.t. b ≥ -3 with b in [-1e9, 0]
        let mut lp = LinearProgramSpec::new(vec![1.0]);
        lp.set_bounds(0, -1e9, 0.0);
        lp.add_row(vec![-1.0], 3.0);
        let res = solve_lp(&lp, &tol());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.point[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling LP for Dantzig's rule.
        let mut lp = LinearProgramSpec::new(vec![-0.75, 150.0, -0.02, 6.0]);
        for j in 0..4 {
            lp.set_bounds(j, 0.0, f64::INFINITY);
        }
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let res = solve_lp(&lp, &tol());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective + 0.05).abs() < 1e-10);
    }
}
