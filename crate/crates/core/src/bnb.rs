//! Best-bound branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use log::debug;

use crate::error::{Error, Result};
use crate::milp::{MilpProblem, VarType};
use crate::scalar::LpFloat;
use crate::simplex::{Basis, LpOptions, LpSolution, LpSolver, LpStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct BnbConfig {
    /// Relative gap at which the search stops.
    pub gap_tol: f64,
    pub time_limit_s: f64,
    pub node_limit: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    pub int_tol: f64,
    /// Absolute row tolerance for accepting incumbents.
    pub feas_tol: f64,
    /// Run a diving heuristic at the root and every this many nodes.
    pub dive_interval: Option<usize>,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            gap_tol: 1e-4,
            time_limit_s: 3600.0,
            node_limit: None,
            seed: 0,
            workers: 1,
            int_tol: 1e-6,
            feas_tol: 1e-6,
            dive_interval: Some(200),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Search tree exhausted.
    Optimal,
    /// Stopped early with the gap within tolerance.
    GapReached,
    TimeLimit,
    NodeLimit,
    Infeasible,
    Unbounded,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Optimal => "optimal",
            Termination::GapReached => "gap-reached",
            Termination::TimeLimit => "time-limit",
            Termination::NodeLimit => "node-limit",
            Termination::Infeasible => "infeasible",
            Termination::Unbounded => "unbounded",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    /// Upper bound; `None` without an incumbent.
    pub incumbent: Option<f64>,
    /// Lower bound; `-inf` when unknown.
    pub best_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    /// Integral points turned down by the incumbent checker.
    pub rejected_incumbents: usize,
}

impl SolveStats {
    /// `(UB - LB) / (1e-10 + |UB|)`, or `None` without an incumbent.
    pub fn gap(&self) -> Option<f64> {
        self.incumbent.map(|ub| relative_gap(ub, self.best_bound))
    }

    /// Gap as a percentage with two decimals, `0 %` when closed and `-`
    /// without an incumbent.
    pub fn gap_label(&self) -> String {
        format_gap(self.gap())
    }

    /// Everything except wall time, for reproducibility checks.
    pub fn same_search(&self, other: &SolveStats) -> bool {
        SolveStats {
            wall_seconds: 0.0,
            ..self.clone()
        } == SolveStats {
            wall_seconds: 0.0,
            ..other.clone()
        }
    }
}

fn prune_margin(ub: f64) -> f64 {
    if !ub.is_finite() {
        return 0.0;
    }
    1e-9 * (1.0 + ub.abs())
}

pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    ((ub - lb) / (1e-10 + ub.abs())).max(0.0)
}

pub fn format_gap(gap: Option<f64>) -> String {
    match gap {
        None => "-".to_string(),
        Some(g) if g == 0.0 => "0 %".to_string(),
        Some(g) if g.is_infinite() => "inf".to_string(),
        Some(g) => format!("{:.2} %", g * 100.0),
    }
}

/// Final check on integral points before they become incumbents. The
/// checker may overwrite continuous components (for instance to snap
/// auxiliary variables to their defining values).
pub trait IncumbentChecker<F>: Sync {
    fn check(&self, x: &mut [F]) -> bool;
}

#[derive(Debug, Clone)]
pub struct MilpSolution<F> {
    pub x: Option<Vec<F>>,
    pub stats: SolveStats,
    /// Every accepted incumbent in the order found, the last being `x`.
    pub incumbents: Vec<(f64, Vec<F>)>,
}

struct Node<F> {
    id: u64,
    bound: f64,
    depth: usize,
    changes: Arc<Vec<(usize, F, F)>>,
    basis: Option<Arc<Basis>>,
}

impl<F> PartialEq for Node<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<F> Eq for Node<F> {}
impl<F> PartialOrd for Node<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F> Ord for Node<F> {
    // Max-heap: smallest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

const MAX_DIVE_SKIPS: usize = 10;

struct Pool<F> {
    heap: BinaryHeap<Node<F>>,
    in_flight: BTreeMap<u64, f64>,
    next_id: u64,
    incumbent: Option<(f64, Vec<F>)>,
    history: Vec<(f64, Vec<F>)>,
    nodes: usize,
    lp_iterations: usize,
    rejected: usize,
    stop: Option<Termination>,
    unbounded: bool,
    error: Option<Error>,
}

impl<F> Pool<F> {
    fn lower_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::INFINITY, |n| n.bound);
        self.in_flight.values().fold(open, |a, &b| a.min(b))
    }

    fn upper_bound(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v)
    }
}

struct Search<'a, F: LpFloat> {
    problem: &'a MilpProblem<F>,
    solver: LpSolver<F>,
    config: &'a BnbConfig,
    checker: Option<&'a dyn IncumbentChecker<F>>,
    integer: Vec<usize>,
    integral_objective: bool,
    costly: Vec<bool>,
    start: Instant,
}

enum Outcome<F> {
    Pruned,
    Infeasible,
    Unbounded,
    Branch(Vec<Node<F>>),
}

pub fn solve_milp<F: LpFloat>(problem: &MilpProblem<F>, config: &BnbConfig) -> Result<MilpSolution<F>> {
    solve_milp_with(problem, config, None)
}

pub fn solve_milp_with<F: LpFloat>(
    problem: &MilpProblem<F>,
    config: &BnbConfig,
    checker: Option<&dyn IncumbentChecker<F>>,
) -> Result<MilpSolution<F>> {
    let start = Instant::now();
    problem.check_invariants().map_err(Error::Config)?;
    if config.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    if !(config.gap_tol >= 0.0) {
        return Err(Error::Config("gap tolerance must be nonnegative".into()));
    }
    let integer: Vec<usize> = problem.integer_vars().collect();
    let integral_objective = problem.objective.iter().all(|&(j, c)| {
        let c = c.to_f64().unwrap_or(f64::NAN);
        problem.vars[j].kind.is_integral() && c.fract() == 0.0
    });
    let mut costly = vec![false; problem.vars.len()];
    for &(j, c) in &problem.objective {
        costly[j] = costly[j] || c != F::zero();
    }
    let search = Search {
        problem,
        solver: LpSolver::new(problem, LpOptions::default()),
        config,
        checker,
        integer,
        integral_objective,
        costly,
        start,
    };
    let pool = Mutex::new(Pool {
        heap: BinaryHeap::new(),
        in_flight: BTreeMap::new(),
        next_id: 1,
        incumbent: None,
        history: Vec::new(),
        nodes: 0,
        lp_iterations: 0,
        rejected: 0,
        stop: None,
        unbounded: false,
        error: None,
    });
    pool.lock().unwrap().heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        depth: 0,
        changes: Arc::new(Vec::new()),
        basis: None,
    });
    let wake = Condvar::new();
    if config.workers == 1 {
        search.worker(&pool, &wake);
    } else {
        std::thread::scope(|s| {
            for _ in 0..config.workers {
                s.spawn(|| search.worker(&pool, &wake));
            }
        });
    }
    let pool = pool.into_inner().unwrap();
    if let Some(e) = pool.error {
        return Err(e);
    }
    let ub = pool.upper_bound();
    let exhausted = pool.heap.is_empty() && pool.in_flight.is_empty();
    let (termination, lb) = if pool.unbounded {
        (Termination::Unbounded, f64::NEG_INFINITY)
    } else if let Some(t) = pool.stop {
        (t, pool.lower_bound().min(ub))
    } else if exhausted && pool.incumbent.is_none() {
        (Termination::Infeasible, f64::INFINITY)
    } else {
        (Termination::Optimal, ub)
    };
    let (incumbent, x) = match pool.incumbent {
        Some((v, x)) => (Some(v), Some(x)),
        None => (None, None),
    };
    Ok(MilpSolution {
        x,
        incumbents: pool.history,
        stats: SolveStats {
            incumbent,
            best_bound: lb,
            nodes: pool.nodes,
            lp_iterations: pool.lp_iterations,
            wall_seconds: start.elapsed().as_secs_f64(),
            termination,
            rejected_incumbents: pool.rejected,
        },
    })
}

impl<'a, F: LpFloat> Search<'a, F> {
    fn worker(&self, pool: &Mutex<Pool<F>>, wake: &Condvar) {
        loop {
            let node = {
                let mut p = pool.lock().unwrap();
                loop {
                    if p.stop.is_some() || p.error.is_some() || p.unbounded {
                        wake.notify_all();
                        return;
                    }
                    if self.start.elapsed().as_secs_f64() >= self.config.time_limit_s {
                        p.stop = Some(Termination::TimeLimit);
                        continue;
                    }
                    if self.config.node_limit.is_some_and(|l| p.nodes >= l) && !p.heap.is_empty() {
                        p.stop = Some(Termination::NodeLimit);
                        continue;
                    }
                    let ub = p.upper_bound();
                    if p.heap.peek().is_some_and(|n| n.bound >= ub - prune_margin(ub)) {
                        p.heap.clear();
                    }
                    if ub.is_finite() && !p.heap.is_empty() {
                        let lb = p.lower_bound();
                        if relative_gap(ub, lb) <= self.config.gap_tol {
                            p.stop = Some(Termination::GapReached);
                            continue;
                        }
                    }
                    match p.heap.pop() {
                        Some(n) => {
                            p.in_flight.insert(n.id, n.bound);
                            p.nodes += 1;
                            break n;
                        }
                        None if p.in_flight.is_empty() => {
                            wake.notify_all();
                            return;
                        }
                        None => p = wake.wait(p).unwrap(),
                    }
                }
            };
            let ub = pool.lock().unwrap().upper_bound();
            let result = self.process(&node, ub);
            let mut p = pool.lock().unwrap();
            p.in_flight.remove(&node.id);
            match result {
                Err(e) => p.error = Some(e),
                Ok((iters, found, outcome)) => {
                    p.lp_iterations += iters;
                    for cand in found {
                        match cand {
                            Some((v, x)) => {
                                if v < p.upper_bound() {
                                    debug!("incumbent {v} at node {}", node.id);
                                    p.history.push((v, x.clone()));
                                    p.incumbent = Some((v, x));
                                }
                            }
                            None => p.rejected += 1,
                        }
                    }
                    match outcome {
                        Outcome::Unbounded => p.unbounded = true,
                        Outcome::Pruned | Outcome::Infeasible => {}
                        Outcome::Branch(children) => {
                            for mut c in children {
                                c.id = p.next_id;
                                p.next_id += 1;
                                p.heap.push(c);
                            }
                        }
                    }
                }
            }
            wake.notify_all();
        }
    }

    fn node_bounds(&self, node: &Node<F>) -> (Vec<F>, Vec<F>) {
        let (lo, hi) = self.solver.default_bounds();
        let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
        for &(j, l, u) in node.changes.iter() {
            lo[j] = l;
            hi[j] = u;
        }
        (lo, hi)
    }

    /// Candidate incumbents: `Some((objective, x))`, or `None` for a rejected
    /// integral point.
    #[allow(clippy::type_complexity)]
    fn process(&self, node: &Node<F>, ub: f64) -> Result<(usize, Vec<Option<(f64, Vec<F>)>>, Outcome<F>)> {
        let (lo, hi) = self.node_bounds(node);
        let sol = self.solver.solve(&lo, &hi, node.basis.as_deref())?;
        let mut iters = sol.iterations;
        match sol.status {
            LpStatus::Infeasible => return Ok((iters, vec![], Outcome::Infeasible)),
            LpStatus::Unbounded => return Ok((iters, vec![], Outcome::Unbounded)),
            LpStatus::IterationLimit => {
                return Err(Error::Numerical(format!("iteration limit in relaxation of node {}", node.id)))
            }
            LpStatus::Optimal => {}
        }
        let mut bound = self.problem.objective_value(&sol.x).to_f64().unwrap_or(f64::NAN);
        if self.integral_objective {
            bound = (bound - 1e-6).ceil();
        }
        bound = bound.max(node.bound);
        let mut found = Vec::new();

        let int_tol = F::lit(self.config.int_tol);
        let mut branch: Option<(usize, F)> = None;
        let mut best_frac = F::zero();
        for &j in &self.integer {
            let v = sol.x[j];
            let f = v - v.floor();
            let dist = f.min(F::one() - f);
            if dist > int_tol && dist > best_frac {
                best_frac = dist;
                branch = Some((j, v));
            }
        }

        let mut rounded = sol.x.clone();
        for &j in &self.integer {
            rounded[j] = rounded[j].round().max(lo[j]).min(hi[j]);
        }
        let integral = branch.is_none();
        if let Some(c) = self.candidate(rounded) {
            found.push(c);
        }
        let mut ub = found.iter().flatten().fold(ub, |a, (v, _)| a.min(*v));
        let dive_due = self.config.dive_interval.is_some_and(|k| node.id % k as u64 == 0);
        if !integral && found.is_empty() && dive_due {
            let (it, cand) = self.dive(lo.clone(), hi.clone(), &sol, ub)?;
            iters += it;
            if let Some((v, x)) = cand {
                ub = ub.min(v);
                found.push(Some((v, x)));
            }
        }
        if integral || bound >= ub - prune_margin(ub) {
            return Ok((iters, found, Outcome::Pruned));
        }

        let (j, v) = branch.expect("fractional variable");
        let basis = Some(Arc::new(sol.basis));
        let child = |l: F, u: F| {
            let mut changes = (*node.changes).clone();
            changes.push((j, l, u));
            Node {
                id: 0,
                bound,
                depth: node.depth + 1,
                changes: Arc::new(changes),
                basis: basis.clone(),
            }
        };
        let down = child(lo[j], v.floor());
        let up = child(v.ceil(), hi[j]);
        Ok((iters, found, Outcome::Branch(vec![down, up])))
    }

    /// Fixes the least fractional integer variable to its nearest value and
    /// re-solves until the rounded relaxation passes as an incumbent.
    #[allow(clippy::type_complexity)]
    fn dive(&self, mut lo: Vec<F>, mut hi: Vec<F>, start: &LpSolution<F>, ub: f64) -> Result<(usize, Option<(f64, Vec<F>)>)> {
        let mut iters = 0;
        let mut x = start.x.clone();
        let mut basis = start.basis.clone();
        let int_tol = F::lit(self.config.int_tol);
        // Variables whose two roundings both failed; passed over afterwards.
        let mut skipped: Vec<usize> = Vec::new();
        for _ in 0..self.integer.len() + 1 {
            if self.start.elapsed().as_secs_f64() >= self.config.time_limit_s {
                break;
            }
            let mut rounded = x.clone();
            for &j in &self.integer {
                rounded[j] = rounded[j].round().max(lo[j]).min(hi[j]);
            }
            if let Some(Some((v, cand))) = self.candidate(rounded) {
                return Ok((iters, (v < ub).then_some((v, cand))));
            }
            // Cost-carrying variables first, then general integers, then
            // binaries; within a class the largest fraction, rounded up.
            let mut pick: Option<(usize, u8, F)> = None;
            for &j in &self.integer {
                let f = x[j] - x[j].floor();
                if f.min(F::one() - f) <= int_tol || skipped.contains(&j) {
                    continue;
                }
                let rank = if self.costly[j] {
                    2
                } else {
                    u8::from(self.problem.vars[j].kind == VarType::Integer)
                };
                let better = match pick {
                    None => true,
                    Some((_, r, g)) => rank > r || (rank == r && f > g),
                };
                if better {
                    pick = Some((j, rank, f));
                }
            }
            let Some((j, _, _)) = pick else {
                debug!("dive: integral point rejected");
                return Ok((iters, None));
            };
            let near = x[j].ceil();
            let far = x[j].floor();
            let (old_lo, old_hi) = (lo[j], hi[j]);
            let mut next = None;
            for target in [near, far] {
                lo[j] = target;
                hi[j] = target;
                let sol = self.solver.solve(&lo, &hi, Some(&basis))?;
                iters += sol.iterations;
                let obj = self.problem.objective_value(&sol.x).to_f64().unwrap_or(f64::INFINITY);
                if sol.status == LpStatus::Optimal && obj < ub - prune_margin(ub) {
                    next = Some(sol);
                    break;
                }
            }
            let Some(sol) = next else {
                debug!("dive: both roundings of {} fail", self.problem.vars[j].name);
                lo[j] = old_lo;
                hi[j] = old_hi;
                if skipped.len() >= MAX_DIVE_SKIPS {
                    return Ok((iters, None));
                }
                skipped.push(j);
                continue;
            };
            x = sol.x;
            basis = sol.basis;
        }
        Ok((iters, None))
    }

    fn candidate(&self, mut x: Vec<F>) -> Option<Option<(f64, Vec<F>)>> {
        let tol = F::lit(self.config.feas_tol);
        let accepted = self.checker.map_or(true, |ch| ch.check(&mut x));
        if !self.problem.is_feasible(&x, tol) {
            return None;
        }
        if !accepted {
            return Some(None);
        }
        let v = self.problem.objective_value(&x).to_f64()?;
        Some(Some((v, x)))
    }
}
