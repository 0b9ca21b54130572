//! Instance in, validated plan out.

use crate::bnb::{solve_milp_with, BnbConfig, IncumbentChecker, MilpSolution, SolveStats};
use crate::error::Result;
use crate::formulation::{
    assign_earliest_times, build_mibp, check_plan, summarize, EvacuationPlan, MibpModel, PlanSummary,
    DEFAULT_TOLERANCE,
};
use crate::linearize::{linearize_model, LinearizationMode};
use crate::milp::MilpProblem;
use crate::model::{index_variables, EvacuationInstance, Network, VarKind, VarSpace};
use crate::scalar::{cast, LpFloat, Scalar};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveOptions {
    pub mode: LinearizationMode,
    pub bnb: BnbConfig,
}

/// Accepts MILP points whose arc and load part is a valid plan of the
/// bilinear model. In exact mode visit times are first moved to their
/// earliest values and digits and products are rebuilt from the loads; in
/// paper-verbatim mode the point is judged as is.
pub struct PlanChecker<'a, S> {
    model: &'a MibpModel<S>,
    full: VarSpace,
    mode: LinearizationMode,
}

impl<'a, S: Scalar> PlanChecker<'a, S> {
    pub fn new(model: &'a MibpModel<S>, mode: LinearizationMode) -> Self {
        PlanChecker {
            model,
            full: index_variables(&model.network, true),
            mode,
        }
    }

    pub fn plan_of<F: LpFloat>(&self, x: &[F]) -> Result<EvacuationPlan<S>> {
        let values: Vec<S> = x.iter().map(cast).collect();
        EvacuationPlan::from_values(&self.full, &self.model.vars, &values)
    }

    /// Rewrites times, digits and products of `x` from its arcs and loads.
    pub fn repair<F: LpFloat>(&self, x: &mut [F]) -> Result<EvacuationPlan<S>> {
        let net = &self.model.network;
        let plain = &self.model.vars;
        let mut plan = self.plan_of(x)?;
        assign_earliest_times(net, plain, &mut plan);
        for p in 0..self.full.len() {
            let key = self.full.key(p);
            match key.kind {
                VarKind::T => x[p] = cast(&plan.values[plain.position(&key)]),
                VarKind::Y | VarKind::V => {
                    let load = x[self.full.load(key.subject, key.bus, key.trip)].round();
                    let load = load.to_i64().unwrap_or(0);
                    let digit = (load >> key.bit) & 1;
                    if key.kind == VarKind::Y {
                        x[p] = F::from_i64(digit).unwrap();
                    } else {
                        let time = &plan.values[plain.time(key.subject, key.bus, key.trip)];
                        let v = S::from_i64_exact(digit << key.bit) * time.clone();
                        x[p] = cast(&v);
                    }
                }
                _ => {}
            }
        }
        Ok(plan)
    }
}

impl<'a, S: Scalar, F: LpFloat> IncumbentChecker<F> for PlanChecker<'a, S> {
    fn check(&self, x: &mut [F]) -> bool {
        let plan = match self.mode {
            LinearizationMode::Exact => self.repair(x),
            LinearizationMode::PaperVerbatim => return true,
        };
        let tol = S::from_f64(DEFAULT_TOLERANCE).unwrap_or_else(S::zero);
        match plan.and_then(|p| check_plan(self.model, &p, tol)) {
            Ok(report) => report.is_feasible(),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvacuationOutcome<S, F> {
    pub model: MibpModel<S>,
    pub milp: MilpProblem<F>,
    pub solution: MilpSolution<F>,
    /// Projection of the incumbent onto arcs, times and loads.
    pub plan: Option<EvacuationPlan<S>>,
    pub summary: Option<PlanSummary<S>>,
}

impl<S, F> EvacuationOutcome<S, F> {
    pub fn stats(&self) -> &SolveStats {
        &self.solution.stats
    }
}

/// Builds the bilinear model and its MILP.
pub fn build_milp<S: Scalar, F: LpFloat>(
    inst: &EvacuationInstance<S>,
    mode: LinearizationMode,
) -> Result<(MibpModel<S>, MilpProblem<F>)> {
    let net = Network::new(inst)?;
    let model = build_mibp(&net)?;
    let milp = linearize_model(&model, mode)?;
    Ok((model, milp))
}

pub fn solve_instance<S: Scalar, F: LpFloat>(
    inst: &EvacuationInstance<S>,
    options: &SolveOptions,
) -> Result<EvacuationOutcome<S, F>> {
    let (model, milp) = build_milp::<S, F>(inst, options.mode)?;
    let checker = PlanChecker::new(&model, options.mode);
    let solution = solve_milp_with(&milp, &options.bnb, Some(&checker))?;
    let plan = solution.x.as_deref().map(|x| checker.plan_of(x)).transpose()?;
    let summary = plan.as_ref().map(|p| summarize(&model, p)).transpose()?;
    Ok(EvacuationOutcome {
        model,
        milp,
        solution,
        plan,
        summary,
    })
}
