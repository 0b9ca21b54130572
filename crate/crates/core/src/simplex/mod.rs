//! Bounded-variable primal simplex.
//!
//! Every row `i` gets a logical variable `r_i = a_i x` carrying the row's
//! bounds, so the working system is `A x - r = 0` with all variables boxed
//! (possibly by infinite bounds). Infeasible starting bases are repaired by
//! minimising the sum of bound violations before the real objective is
//! taken up, which also makes warm starts after bound changes work.

mod lu;

use log::trace;

use crate::error::{Error, Result};
use crate::milp::{MilpProblem, Sense};
use crate::scalar::LpFloat;
use lu::{BasisFactor, SparseCol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic without an active bound.
    Free,
}

/// Status of every structural variable followed by every row logical.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    pub status: Vec<BasisStatus>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<F> {
    pub status: LpStatus,
    pub x: Vec<F>,
    pub row_activity: Vec<F>,
    pub objective: F,
    /// Row duals; `reduced_costs = c - A' duals`.
    pub duals: Vec<F>,
    pub reduced_costs: Vec<F>,
    pub basis: Basis,
    pub iterations: usize,
    /// Sum of bound violations left when infeasibility was proven.
    pub infeasibility: F,
}

#[derive(Debug, Clone)]
pub struct LpOptions<F> {
    pub feasibility_tol: F,
    pub optimality_tol: F,
    pub pivot_tol: F,
    pub max_iterations: Option<usize>,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
    pub scale: bool,
}

impl<F: LpFloat> Default for LpOptions<F> {
    fn default() -> Self {
        let tol = F::epsilon().sqrt().max(F::lit(1e-7));
        LpOptions {
            feasibility_tol: tol,
            optimality_tol: tol,
            pivot_tol: F::epsilon().sqrt().powi(2).max(F::lit(1e-9)) * F::lit(1.0),
            max_iterations: None,
            refactor_interval: 50,
            degenerate_streak: 50,
            scale: true,
        }
    }
}

/// Scaled, column-major copy of an LP, reusable across bound changes.
#[derive(Debug, Clone)]
pub struct LpSolver<F> {
    n: usize,
    m: usize,
    a_start: Vec<usize>,
    a_row: Vec<usize>,
    a_val: Vec<F>,
    row_scale: Vec<F>,
    col_scale: Vec<F>,
    cost: Vec<F>,
    row_lo: Vec<F>,
    row_hi: Vec<F>,
    col_lo: Vec<F>,
    col_hi: Vec<F>,
    opts: LpOptions<F>,
}

fn pow2_round<F: LpFloat>(v: F) -> F {
    if !v.is_finite() || v <= F::zero() {
        return F::one();
    }
    F::lit(2.0).powf(v.log2().round())
}

impl<F: LpFloat> LpSolver<F> {
    pub fn new(problem: &MilpProblem<F>, opts: LpOptions<F>) -> Self {
        let n = problem.vars.len();
        let m = problem.rows.len();
        let rows: Vec<Vec<(usize, F)>> = problem
            .rows
            .iter()
            .map(|r| {
                let mut c: Vec<(usize, F)> = r.coeffs.iter().copied().filter(|&(_, v)| v != F::zero()).collect();
                c.sort_by_key(|e| e.0);
                // merge repeated entries
                let mut merged: Vec<(usize, F)> = Vec::with_capacity(c.len());
                for (j, v) in c {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 = last.1 + v,
                        _ => merged.push((j, v)),
                    }
                }
                merged.retain(|e| e.1 != F::zero());
                merged
            })
            .collect();

        let mut row_scale = vec![F::one(); m];
        let mut col_scale = vec![F::one(); n];
        if opts.scale {
            for _ in 0..4 {
                let mut cmin = vec![F::infinity(); n];
                let mut cmax = vec![F::zero(); n];
                for (i, r) in rows.iter().enumerate() {
                    let (mut lo, mut hi) = (F::infinity(), F::zero());
                    for &(j, v) in r {
                        let a = v.abs() * col_scale[j];
                        lo = lo.min(a);
                        hi = hi.max(a);
                    }
                    if !r.is_empty() {
                        row_scale[i] = F::one() / (lo * hi).sqrt();
                    }
                    for &(j, v) in r {
                        let a = v.abs() * row_scale[i];
                        cmin[j] = cmin[j].min(a);
                        cmax[j] = cmax[j].max(a);
                    }
                }
                for j in 0..n {
                    if cmax[j] > F::zero() {
                        col_scale[j] = F::one() / (cmin[j] * cmax[j]).sqrt();
                    }
                }
            }
            row_scale.iter_mut().for_each(|s| *s = pow2_round(*s));
            col_scale.iter_mut().for_each(|s| *s = pow2_round(*s));
        }

        let mut counts = vec![0usize; n + 1];
        for r in &rows {
            for &(j, _) in r {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let a_start = counts.clone();
        let nnz = a_start[n];
        let mut fill = counts;
        let mut a_row = vec![0; nnz];
        let mut a_val = vec![F::zero(); nnz];
        for (i, r) in rows.iter().enumerate() {
            for &(j, v) in r {
                let k = fill[j];
                a_row[k] = i;
                a_val[k] = v * row_scale[i] * col_scale[j];
                fill[j] += 1;
            }
        }

        let mut cost = vec![F::zero(); n];
        for &(j, c) in &problem.objective {
            cost[j] = cost[j] + c * col_scale[j];
        }
        let mut row_lo = vec![F::neg_infinity(); m];
        let mut row_hi = vec![F::infinity(); m];
        for (i, r) in problem.rows.iter().enumerate() {
            let v = r.rhs * row_scale[i];
            match r.sense {
                Sense::Le => row_hi[i] = v,
                Sense::Ge => row_lo[i] = v,
                Sense::Eq => {
                    row_lo[i] = v;
                    row_hi[i] = v;
                }
            }
        }
        LpSolver {
            n,
            m,
            a_start,
            a_row,
            a_val,
            row_scale,
            col_scale,
            cost,
            row_lo,
            row_hi,
            col_lo: problem.vars.iter().map(|v| v.lower).collect(),
            col_hi: problem.vars.iter().map(|v| v.upper).collect(),
            opts,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn default_bounds(&self) -> (&[F], &[F]) {
        (&self.col_lo, &self.col_hi)
    }

    /// Solves with the problem's own variable bounds.
    pub fn solve_default(&self, hint: Option<&Basis>) -> Result<LpSolution<F>> {
        self.solve(&self.col_lo, &self.col_hi, hint)
    }

    /// Solves with structural bounds overridden by `lower`/`upper`.
    pub fn solve(&self, lower: &[F], upper: &[F], hint: Option<&Basis>) -> Result<LpSolution<F>> {
        let mut w = Work::new(self, lower, upper, hint)?;
        let status = w.run(false)?;
        Ok(w.solution(status))
    }

    /// Runs only until a point within the bounds and rows is found.
    pub fn find_feasible(&self, lower: &[F], upper: &[F]) -> Result<LpSolution<F>> {
        let mut w = Work::new(self, lower, upper, None)?;
        let status = w.run(true)?;
        Ok(w.solution(status))
    }
}

pub fn solve_lp<F: LpFloat>(problem: &MilpProblem<F>, hint: Option<&Basis>) -> Result<LpSolution<F>> {
    LpSolver::new(problem, LpOptions::default()).solve_default(hint)
}

#[derive(Debug, Clone)]
pub enum Phase1Outcome<F> {
    Feasible { basis: Basis, x: Vec<F> },
    /// The minimal sum of bound violations is positive.
    Infeasible { infeasibility: F },
}

pub fn phase1_feasibility<F: LpFloat>(problem: &MilpProblem<F>) -> Result<Phase1Outcome<F>> {
    let solver = LpSolver::new(problem, LpOptions::default());
    let sol = solver.find_feasible(&solver.col_lo, &solver.col_hi)?;
    match sol.status {
        LpStatus::Infeasible => Ok(Phase1Outcome::Infeasible {
            infeasibility: sol.infeasibility,
        }),
        LpStatus::IterationLimit => Err(Error::Numerical("iteration limit during feasibility search".into())),
        _ => Ok(Phase1Outcome::Feasible {
            basis: sol.basis,
            x: sol.x,
        }),
    }
}

struct Work<'a, F> {
    s: &'a LpSolver<F>,
    lb: Vec<F>,
    ub: Vec<F>,
    x: Vec<F>,
    status: Vec<BasisStatus>,
    head: Vec<usize>,
    factor: BasisFactor<F>,
    y: Vec<F>,
    alpha: Vec<F>,
    scratch: Vec<F>,
    d: Vec<F>,
    iterations: usize,
    infeasibility: F,
    refactors_without_progress: usize,
}

impl<'a, F: LpFloat> Work<'a, F> {
    fn new(s: &'a LpSolver<F>, lower: &[F], upper: &[F], hint: Option<&Basis>) -> Result<Self> {
        let (n, m) = (s.n, s.m);
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lower.len().min(upper.len()),
            });
        }
        let mut lb = Vec::with_capacity(n + m);
        let mut ub = Vec::with_capacity(n + m);
        for j in 0..n {
            lb.push(lower[j] / s.col_scale[j]);
            ub.push(upper[j] / s.col_scale[j]);
        }
        lb.extend_from_slice(&s.row_lo);
        ub.extend_from_slice(&s.row_hi);

        let usable = hint.filter(|h| {
            h.status.len() == n + m && h.status.iter().filter(|&&st| st == BasisStatus::Basic).count() == m
        });
        let mut status: Vec<BasisStatus> = match usable {
            Some(h) => h.status.clone(),
            None => (0..n + m)
                .map(|j| if j >= n { BasisStatus::Basic } else { BasisStatus::AtLower })
                .collect(),
        };
        let mut x = vec![F::zero(); n + m];
        for j in 0..n + m {
            if status[j] == BasisStatus::Basic {
                continue;
            }
            status[j] = nonbasic_status(status[j], lb[j], ub[j]);
            x[j] = match status[j] {
                BasisStatus::AtLower => lb[j],
                BasisStatus::AtUpper => ub[j],
                _ => F::zero(),
            };
        }
        let head: Vec<usize> = (0..n + m).filter(|&j| status[j] == BasisStatus::Basic).collect();
        let mut w = Work {
            s,
            lb,
            ub,
            x,
            status,
            head,
            factor: BasisFactor::factorize(0, &[], F::zero()).0,
            y: vec![F::zero(); m],
            alpha: vec![F::zero(); m],
            scratch: vec![F::zero(); m],
            d: vec![F::zero(); n + m],
            iterations: 0,
            infeasibility: F::zero(),
            refactors_without_progress: 0,
        };
        w.refactor();
        Ok(w)
    }

    fn column(&self, j: usize) -> SparseCol<F> {
        if j < self.s.n {
            (self.s.a_start[j]..self.s.a_start[j + 1])
                .map(|k| (self.s.a_row[k], self.s.a_val[k]))
                .collect()
        } else {
            vec![(j - self.s.n, -F::one())]
        }
    }

    fn refactor(&mut self) {
        let cols: Vec<SparseCol<F>> = self.head.iter().map(|&j| self.column(j)).collect();
        let (factor, repairs) = BasisFactor::factorize(self.s.m, &cols, self.s.opts.pivot_tol);
        self.factor = factor;
        for (p, r) in repairs.replaced {
            let old = self.head[p];
            let st = nonbasic_status(BasisStatus::AtLower, self.lb[old], self.ub[old]);
            self.status[old] = st;
            self.x[old] = match st {
                BasisStatus::AtLower => self.lb[old],
                BasisStatus::AtUpper => self.ub[old],
                _ => self.x[old],
            };
            let logical = self.s.n + r;
            self.head[p] = logical;
            self.status[logical] = BasisStatus::Basic;
        }
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        let n = self.s.n;
        let mut rhs = vec![F::zero(); self.s.m];
        for j in 0..n + self.s.m {
            if self.status[j] == BasisStatus::Basic || self.x[j] == F::zero() {
                continue;
            }
            if j < n {
                for k in self.s.a_start[j]..self.s.a_start[j + 1] {
                    rhs[self.s.a_row[k]] = rhs[self.s.a_row[k]] - self.s.a_val[k] * self.x[j];
                }
            } else {
                rhs[j - n] = rhs[j - n] + self.x[j];
            }
        }
        self.factor.ftran(&mut rhs, &mut self.scratch);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn violation(&self, j: usize) -> F {
        (self.lb[j] - self.x[j]).max(self.x[j] - self.ub[j]).max(F::zero())
    }

    /// Computes row duals for the given basic costs into `self.y`.
    fn compute_duals(&mut self, phase1: bool) {
        let tol = self.s.opts.feasibility_tol;
        for (p, &j) in self.head.iter().enumerate() {
            self.y[p] = if phase1 {
                if self.x[j] < self.lb[j] - tol {
                    -F::one()
                } else if self.x[j] > self.ub[j] + tol {
                    F::one()
                } else {
                    F::zero()
                }
            } else if j < self.s.n {
                self.s.cost[j]
            } else {
                F::zero()
            };
        }
        self.factor.btran(&mut self.y, &mut self.scratch);
    }

    fn reduced_cost(&self, j: usize, phase1: bool) -> F {
        let n = self.s.n;
        if j >= n {
            return self.y[j - n];
        }
        let mut d = if phase1 { F::zero() } else { self.s.cost[j] };
        for k in self.s.a_start[j]..self.s.a_start[j + 1] {
            d = d - self.y[self.s.a_row[k]] * self.s.a_val[k];
        }
        d
    }

    fn price(&mut self, phase1: bool, bland: bool) -> Option<(usize, F)> {
        let tol = self.s.opts.optimality_tol;
        let mut best: Option<(usize, F)> = None;
        for j in 0..self.s.n + self.s.m {
            let st = self.status[j];
            if st == BasisStatus::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let d = self.reduced_cost(j, phase1);
            self.d[j] = d;
            let eligible = match st {
                BasisStatus::AtLower => d < -tol,
                BasisStatus::AtUpper => d > tol,
                BasisStatus::Free => d.abs() > tol,
                BasisStatus::Basic => false,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            let score = d.abs();
            if best.map_or(true, |(_, bd)| score > bd.abs()) {
                best = Some((j, d));
            }
        }
        best
    }

    fn run(&mut self, stop_when_feasible: bool) -> Result<LpStatus> {
        let opts = &self.s.opts;
        let (n, m) = (self.s.n, self.s.m);
        let max_iter = opts.max_iterations.unwrap_or(20 * (n + m) + 10_000);
        let ftol = opts.feasibility_tol;
        let mut fresh = true;
        let mut degenerate = 0usize;
        loop {
            if self.factor.eta_count() >= opts.refactor_interval {
                self.refactor();
                fresh = true;
            }
            let mut sum_inf = F::zero();
            let mut max_inf = F::zero();
            for &j in &self.head {
                let v = self.violation(j);
                sum_inf = sum_inf + v;
                max_inf = max_inf.max(v);
            }
            let phase1 = max_inf > ftol;
            self.infeasibility = sum_inf;
            if stop_when_feasible && !phase1 {
                if !fresh {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                return Ok(LpStatus::Optimal);
            }
            if self.iterations >= max_iter {
                return Ok(LpStatus::IterationLimit);
            }
            self.compute_duals(phase1);
            let bland = degenerate >= opts.degenerate_streak;
            let Some((q, dq)) = self.price(phase1, bland) else {
                if !fresh {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                return Ok(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
            };

            for v in self.alpha.iter_mut() {
                *v = F::zero();
            }
            for (i, v) in self.column(q) {
                self.alpha[i] = v;
            }
            self.factor.ftran(&mut self.alpha, &mut self.scratch);
            let dir = if dq < F::zero() { F::one() } else { -F::one() };

            // Harris two-pass ratio test.
            let limits = |w: &Self, j: usize| -> (F, F) {
                let (lb, ub, x) = (w.lb[j], w.ub[j], w.x[j]);
                if phase1 && x < lb - ftol {
                    (F::neg_infinity(), lb)
                } else if phase1 && x > ub + ftol {
                    (ub, F::infinity())
                } else {
                    (lb, ub)
                }
            };
            let ptol = opts.pivot_tol.max(F::lit(1e-9));
            let mut theta_max = F::infinity();
            for p in 0..m {
                let a = self.alpha[p];
                if a.abs() <= ptol {
                    continue;
                }
                let delta = -dir * a;
                let j = self.head[p];
                let (lo, hi) = limits(self, j);
                let t = if delta > F::zero() {
                    (hi - self.x[j] + ftol) / delta
                } else {
                    (self.x[j] - lo + ftol) / -delta
                };
                if t < theta_max {
                    theta_max = t;
                }
            }
            let mut leave: Option<(usize, F, F)> = None;
            let mut leave_mag = F::zero();
            if theta_max.is_finite() {
                for p in 0..m {
                    let a = self.alpha[p];
                    if a.abs() <= ptol {
                        continue;
                    }
                    let delta = -dir * a;
                    let j = self.head[p];
                    let (lo, hi) = limits(self, j);
                    let (t, target) = if delta > F::zero() {
                        ((hi - self.x[j]) / delta, hi)
                    } else {
                        ((self.x[j] - lo) / -delta, lo)
                    };
                    if t > theta_max {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some((lp, _, _)) if bland => j < self.head[lp],
                        Some(_) => a.abs() > leave_mag,
                    };
                    if better {
                        leave = Some((p, t.max(F::zero()), target));
                        leave_mag = a.abs();
                    }
                }
            }
            let range = self.ub[q] - self.lb[q];
            let flip = range.is_finite() && leave.map_or(true, |(_, t, _)| range <= t);
            if !flip && leave.is_none() {
                if !fresh {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                if phase1 {
                    return Err(Error::Numerical("unbounded ray while minimising infeasibility".into()));
                }
                return Ok(LpStatus::Unbounded);
            }
            let theta = if flip { range } else { leave.unwrap().1 };
            if theta > F::lit(1e-12) {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            if theta != F::zero() {
                for p in 0..m {
                    let a = self.alpha[p];
                    if a != F::zero() {
                        let j = self.head[p];
                        self.x[j] = self.x[j] - dir * a * theta;
                    }
                }
                self.x[q] = self.x[q] + dir * theta;
            }
            self.iterations += 1;
            fresh = false;
            if flip {
                self.status[q] = if dir > F::zero() { BasisStatus::AtUpper } else { BasisStatus::AtLower };
                self.x[q] = if dir > F::zero() { self.ub[q] } else { self.lb[q] };
                continue;
            }
            let (p, _, target) = leave.unwrap();
            let out = self.head[p];
            self.x[out] = target;
            self.status[out] = if target == self.ub[out] && self.lb[out] != self.ub[out] {
                BasisStatus::AtUpper
            } else {
                BasisStatus::AtLower
            };
            self.head[p] = q;
            self.status[q] = BasisStatus::Basic;
            if self.alpha[p].abs() < F::lit(1e-7) {
                trace!("small pivot {:e}; refactoring", self.alpha[p]);
                self.factor.push_eta(p, &self.alpha);
                self.refactor();
                fresh = true;
                self.refactors_without_progress += 1;
            } else {
                self.factor.push_eta(p, &self.alpha);
            }
        }
    }

    fn solution(mut self, status: LpStatus) -> LpSolution<F> {
        let s = self.s;
        let (n, m) = (s.n, s.m);
        self.compute_duals(false);
        let mut reduced = vec![F::zero(); n];
        for (j, r) in reduced.iter_mut().enumerate() {
            *r = self.reduced_cost(j, false) / s.col_scale[j];
        }
        let x: Vec<F> = (0..n).map(|j| self.x[j] * s.col_scale[j]).collect();
        let row_activity = (0..m).map(|i| self.x[n + i] / s.row_scale[i]).collect();
        let duals = (0..m).map(|i| self.y[i] * s.row_scale[i]).collect();
        let objective = (0..n).fold(F::zero(), |acc, j| acc + s.cost[j] * self.x[j]);
        LpSolution {
            status,
            x,
            row_activity,
            objective,
            duals,
            reduced_costs: reduced,
            basis: Basis { status: self.status },
            iterations: self.iterations,
            infeasibility: self.infeasibility,
        }
    }
}

fn nonbasic_status<F: LpFloat>(wanted: BasisStatus, lb: F, ub: F) -> BasisStatus {
    match wanted {
        BasisStatus::AtUpper if ub.is_finite() => BasisStatus::AtUpper,
        BasisStatus::AtLower | BasisStatus::Free | BasisStatus::Basic if lb.is_finite() => BasisStatus::AtLower,
        _ if ub.is_finite() => BasisStatus::AtUpper,
        _ if lb.is_finite() => BasisStatus::AtLower,
        _ => BasisStatus::Free,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarType;

    fn lp(vars: &[(f64, f64)], obj: &[f64], rows: &[(&[f64], Sense, f64)]) -> MilpProblem<f64> {
        let mut p = MilpProblem::new("lp");
        for (k, &(lo, hi)) in vars.iter().enumerate() {
            p.add_var(format!("x{k}"), lo, hi, VarType::Continuous);
        }
        p.objective = obj.iter().copied().enumerate().collect();
        for (k, (c, s, r)) in rows.iter().enumerate() {
            p.add_row(format!("r{k}"), *s, c.iter().copied().enumerate().collect(), *r);
        }
        p
    }

    #[test]
    fn small_maximisation() {
        let inf = f64::INFINITY;
        let p = lp(
            &[(0.0, inf), (0.0, inf)],
            &[-3.0, -2.0],
            &[(&[1.0, 1.0], Sense::Le, 4.0), (&[1.0, 0.0], Sense::Le, 2.0), (&[0.0, 1.0], Sense::Le, 3.0)],
        );
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 10.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let inf = f64::INFINITY;
        let p = lp(&[(0.0, inf)], &[1.0], &[(&[1.0], Sense::Le, 1.0), (&[1.0], Sense::Ge, 2.0)]);
        assert_eq!(solve_lp(&p, None).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let p = lp(&[(0.0, f64::INFINITY)], &[-1.0], &[]);
        assert_eq!(solve_lp(&p, None).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn phase1_outcomes() {
        let p = lp(&[(0.0, 1.0), (0.0, 1.0)], &[1.0, 1.0], &[(&[1.0, 1.0], Sense::Le, 1.5)]);
        match phase1_feasibility(&p).unwrap() {
            Phase1Outcome::Feasible { x, .. } => assert!(p.is_feasible(&x, 1e-9)),
            other => panic!("{other:?}"),
        }
        let p = lp(&[(0.0, f64::INFINITY)], &[0.0], &[(&[1.0], Sense::Le, -1.0)]);
        match phase1_feasibility(&p).unwrap() {
            Phase1Outcome::Infeasible { infeasibility } => assert!(infeasibility > 0.5),
            other => panic!("{other:?}"),
        }
        let p = lp(&[(0.0, 5.0)], &[0.0], &[(&[0.0], Sense::Eq, 1.0)]);
        assert!(matches!(phase1_feasibility(&p).unwrap(), Phase1Outcome::Infeasible { .. }));
    }

    #[test]
    fn free_variables_and_equalities() {
        let inf = f64::INFINITY;
        // min x + y, x - y = 1, x + y >= 3, both free
        let p = lp(
            &[(-inf, inf), (-inf, inf)],
            &[1.0, 1.0],
            &[(&[1.0, -1.0], Sense::Eq, 1.0), (&[1.0, 1.0], Sense::Ge, 3.0)],
        );
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_keeps_the_optimum() {
        let inf = f64::INFINITY;
        let p = lp(
            &[(0.0, inf), (0.0, inf), (0.0, 4.0)],
            &[-1.0, -2.0, 1.0],
            &[(&[1.0, 1.0, 1.0], Sense::Le, 10.0), (&[1.0, 3.0, -1.0], Sense::Le, 12.0)],
        );
        let solver = LpSolver::new(&p, LpOptions::default());
        let cold = solver.solve_default(None).unwrap();
        let warm = solver.solve_default(Some(&cold.basis)).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-9);
        assert_eq!(warm.iterations, 0);
        // Tightened bound, warm start from the old basis.
        let (lo, mut hi) = (solver.default_bounds().0.to_vec(), solver.default_bounds().1.to_vec());
        hi[0] = 1.0;
        let a = solver.solve(&lo, &hi, Some(&cold.basis)).unwrap();
        let b = solver.solve(&lo, &hi, None).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let inf = f32::INFINITY;
        let mut p = MilpProblem::<f32>::new("f32");
        let x = p.add_var("x", 0.0, inf, VarType::Continuous);
        let y = p.add_var("y", 0.0, inf, VarType::Continuous);
        p.objective = vec![(x, -3.0), (y, -2.0)];
        p.add_row("a", Sense::Le, vec![(x, 1.0), (y, 1.0)], 4.0);
        p.add_row("b", Sense::Le, vec![(x, 1.0)], 2.0);
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 10.0).abs() < 1e-4);
    }
}
