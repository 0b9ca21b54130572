//! The mixed-integer bilinear evacuation model, plan evaluation against the
//! original (bilinear) constraints, and route/dose extraction.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{index_variables, Network, NodeKind, VarKind, VarSpace};
use crate::scalar::Scalar;

/// Constraint family identifier, numbered after the model's equations:
/// 1 dose, 2 visit times, 3-4 flow balance, 5 one arc per trip, 6-8 depot
/// and terminal rules, 9-10 capacity, 11-12 demand and delivery, 13-15
/// variable domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EqId(u8);

impl EqId {
    pub const DOSE: EqId = EqId(1);
    pub const TIME: EqId = EqId(2);
    pub const FLOW_PICKUP: EqId = EqId(3);
    pub const FLOW_SHELTER: EqId = EqId(4);
    pub const ONE_ARC: EqId = EqId(5);
    pub const FIRST_DEPARTURE: EqId = EqId(6);
    pub const NO_LATE_DEPARTURE: EqId = EqId(7);
    pub const NO_FINAL_PICKUP: EqId = EqId(8);
    pub const VISIT_LOAD: EqId = EqId(9);
    pub const ONBOARD: EqId = EqId(10);
    pub const DEMAND: EqId = EqId(11);
    pub const DELIVERY: EqId = EqId(12);
    pub const X_DOMAIN: EqId = EqId(13);
    pub const B_DOMAIN: EqId = EqId(14);
    pub const T_DOMAIN: EqId = EqId(15);

    pub fn all() -> impl Iterator<Item = EqId> {
        (1..=15).map(EqId)
    }

    pub fn number(self) -> u8 {
        self.0
    }
}

impl fmt::Display for EqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EQ{}", self.0)
    }
}

/// One member of a constraint family: `lower <= linear + bilinear <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRecord<S> {
    pub eq: EqId,
    /// Quantifier instance, e.g. `i=p1,m=3,t=2`.
    pub label: String,
    pub linear: Vec<(usize, S)>,
    /// `(a, b, c)` contributes `c * value[a] * value[b]`.
    pub bilinear: Vec<(usize, usize, S)>,
    pub lower: Option<S>,
    pub upper: Option<S>,
    /// Domain records additionally require an integral value.
    pub integral: bool,
}

impl<S: Scalar> ConstraintRecord<S> {
    fn new(eq: EqId, label: String) -> Self {
        ConstraintRecord {
            eq,
            label,
            linear: Vec::new(),
            bilinear: Vec::new(),
            lower: None,
            upper: None,
            integral: false,
        }
    }

    fn term(mut self, var: usize, coef: S) -> Self {
        self.linear.push((var, coef));
        self
    }

    fn lo(mut self, v: S) -> Self {
        self.lower = Some(v);
        self
    }

    fn up(mut self, v: S) -> Self {
        self.upper = Some(v);
        self
    }

    fn eq_to(self, v: S) -> Self {
        self.lo(v.clone()).up(v)
    }

    pub fn is_linear(&self) -> bool {
        self.bilinear.is_empty()
    }

    pub fn evaluate(&self, values: &[S]) -> S {
        let lin = self
            .linear
            .iter()
            .fold(S::zero(), |acc, (v, c)| acc + c.clone() * values[*v].clone());
        self.bilinear.iter().fold(lin, |acc, (a, b, c)| {
            acc + c.clone() * values[*a].clone() * values[*b].clone()
        })
    }
}

/// The evacuation model with bilinear dose rows, as explicit records.
#[derive(Debug, Clone)]
pub struct MibpModel<S> {
    pub network: Network<S>,
    pub vars: VarSpace,
    /// Total travel time, over arc indicators.
    pub objective: Vec<(usize, S)>,
    pub constraints: Vec<ConstraintRecord<S>>,
}

impl<S: Scalar> MibpModel<S> {
    pub fn family(&self, eq: EqId) -> impl Iterator<Item = &ConstraintRecord<S>> {
        self.constraints.iter().filter(move |c| c.eq == eq)
    }

    pub fn family_len(&self, eq: EqId) -> usize {
        self.family(eq).count()
    }

    pub fn objective_value(&self, values: &[S]) -> S {
        self.objective
            .iter()
            .fold(S::zero(), |acc, (v, c)| acc + c.clone() * values[*v].clone())
    }
}

/// Rejects instances whose total demand exceeds `|V| * T * Q`.
pub fn check_transport_volume<S: Scalar>(net: &Network<S>) -> Result<()> {
    let volume = net.bus_count() as i64 * net.trips() as i64 * net.capacity();
    let demand = net.total_demand();
    if demand > volume {
        return Err(Error::InsufficientVolume { demand, volume });
    }
    Ok(())
}

/// Sum of `tau_ij * travel_ij` over all shelters `j`, for pickup `i`.
pub fn escape_factor<S: Scalar>(net: &Network<S>, pickup: usize) -> S {
    net.shelters()
        .filter_map(|j| net.arc_index(pickup, j))
        .fold(S::zero(), |acc, a| {
            acc + net.arc_radiation(a).clone() * net.travel_time(a).clone()
        })
}

pub fn build_mibp<S: Scalar>(net: &Network<S>) -> Result<MibpModel<S>> {
    check_transport_volume(net)?;
    let vars = index_variables(net, false);
    let buses = net.bus_count();
    let trips = net.trips();
    let q = S::from_i64_exact(net.capacity());
    let one = S::one;
    let mut rows: Vec<ConstraintRecord<S>> = Vec::new();
    let bus = |m: usize| net.bus_id(m);
    let node = |i: usize| net.node_id(i);

    let objective = (0..net.arc_count())
        .flat_map(|a| {
            (0..buses).flat_map(move |m| (1..=trips).map(move |t| (a, m, t)))
        })
        .map(|(a, m, t)| (vars.x(a, m, t), net.travel_time(a).clone()))
        .collect();

    if let Some(limit) = net.dose_limit() {
        for i in net.pickups() {
            let escape = escape_factor(net, i);
            for m in 0..buses {
                let mut rec = ConstraintRecord::new(EqId::DOSE, format!("i={},m={}", node(i), bus(m)));
                for t in 1..=trips {
                    rec.linear.push((vars.load(i, m, t), escape.clone()));
                    rec.bilinear.push((vars.time(i, m, t), vars.load(i, m, t), net.node_radiation(i).clone()));
                }
                rows.push(rec.up(limit.clone()));
            }
        }
    }

    for i in 0..net.node_count() {
        for j in 0..net.node_count() {
            for m in 0..buses {
                for t in 1..trips {
                    let mut rec = ConstraintRecord::new(
                        EqId::TIME,
                        format!("i={},j={},m={},t={t}", node(i), node(j), bus(m)),
                    )
                    .term(vars.time(j, m, t + 1), one())
                    .term(vars.time(i, m, t), -one());
                    if let Some(a) = net.arc_index(i, j) {
                        rec = rec.term(vars.x(a, m, t), -net.travel_time(a).clone());
                    }
                    rows.push(rec.lo(S::zero()));
                }
            }
        }
    }

    for (eq, range) in [(EqId::FLOW_PICKUP, net.pickups()), (EqId::FLOW_SHELTER, net.shelters())] {
        for j in range {
            for m in 0..buses {
                for t in 1..trips {
                    let mut rec = ConstraintRecord::new(eq, format!("j={},m={},t={t}", node(j), bus(m)));
                    for &a in net.in_arcs(j) {
                        rec = rec.term(vars.x(a, m, t), one());
                    }
                    for &a in net.out_arcs(j) {
                        rec = rec.term(vars.x(a, m, t + 1), -one());
                    }
                    rows.push(if eq == EqId::FLOW_PICKUP {
                        rec.eq_to(S::zero())
                    } else {
                        rec.lo(S::zero())
                    });
                }
            }
        }
    }

    for m in 0..buses {
        for t in 1..=trips {
            let mut rec = ConstraintRecord::new(EqId::ONE_ARC, format!("m={},t={t}", bus(m)));
            for a in 0..net.arc_count() {
                rec = rec.term(vars.x(a, m, t), one());
            }
            rows.push(rec.up(one()));
        }
    }

    for i in net.depots() {
        for m in (0..buses).filter(|&m| net.bus_depot(m) == i) {
            let mut rec = ConstraintRecord::new(EqId::FIRST_DEPARTURE, format!("i={},m={}", node(i), bus(m)));
            for &a in net.out_arcs(i) {
                rec = rec.term(vars.x(a, m, 1), one());
            }
            rows.push(rec.eq_to(one()));
        }
    }

    for i in net.depots() {
        for &a in net.out_arcs(i) {
            let j = net.arc(a).1;
            for m in 0..buses {
                for t in 2..=trips {
                    rows.push(
                        ConstraintRecord::new(
                            EqId::NO_LATE_DEPARTURE,
                            format!("i={},j={},m={},t={t}", node(i), node(j), bus(m)),
                        )
                        .term(vars.x(a, m, t), one())
                        .eq_to(S::zero()),
                    );
                }
            }
        }
    }

    for i in net.shelters() {
        for &a in net.out_arcs(i) {
            let j = net.arc(a).1;
            debug_assert_eq!(net.kind(j), NodeKind::Pickup);
            for m in 0..buses {
                rows.push(
                    ConstraintRecord::new(EqId::NO_FINAL_PICKUP, format!("i={},j={},m={}", node(i), node(j), bus(m)))
                        .term(vars.x(a, m, trips), one())
                        .eq_to(S::zero()),
                );
            }
        }
    }

    for j in net.load_nodes() {
        for m in 0..buses {
            for t in 1..=trips {
                let mut rec = ConstraintRecord::new(EqId::VISIT_LOAD, format!("j={},m={},t={t}", node(j), bus(m)))
                    .term(vars.load(j, m, t), one());
                for &a in net.in_arcs(j) {
                    rec = rec.term(vars.x(a, m, t), -q.clone());
                }
                rows.push(rec.up(S::zero()));
            }
        }
    }

    for m in 0..buses {
        for t in 1..=trips {
            let mut rec = ConstraintRecord::new(EqId::ONBOARD, format!("m={},t={t}", bus(m)));
            for l in 1..=t {
                for j in net.pickups() {
                    rec = rec.term(vars.load(j, m, l), one());
                }
                for k in net.shelters() {
                    rec = rec.term(vars.load(k, m, l), -one());
                }
            }
            rows.push(rec.lo(S::zero()).up(q.clone()));
        }
    }

    for j in net.pickups() {
        let mut rec = ConstraintRecord::new(EqId::DEMAND, format!("j={}", node(j)));
        for m in 0..buses {
            for t in 1..=trips {
                rec = rec.term(vars.load(j, m, t), one());
            }
        }
        rows.push(rec.eq_to(S::from_i64_exact(net.demand(j))));
    }

    for m in 0..buses {
        let mut rec = ConstraintRecord::new(EqId::DELIVERY, format!("m={}", bus(m)));
        for t in 1..=trips {
            for j in net.pickups() {
                rec = rec.term(vars.load(j, m, t), one());
            }
            for k in net.shelters() {
                rec = rec.term(vars.load(k, m, t), -one());
            }
        }
        rows.push(rec.eq_to(S::zero()));
    }

    for (eq, kind) in [
        (EqId::X_DOMAIN, VarKind::X),
        (EqId::B_DOMAIN, VarKind::B),
        (EqId::T_DOMAIN, VarKind::T),
    ] {
        for p in (0..vars.len()).filter(|&p| vars.key(p).kind == kind) {
            let mut rec = ConstraintRecord::new(eq, vars.name(net, p)).term(p, one()).lo(S::zero());
            match kind {
                VarKind::X => {
                    rec = rec.up(one());
                    rec.integral = true;
                }
                VarKind::B => rec.integral = true,
                _ => {}
            }
            rows.push(rec);
        }
    }

    Ok(MibpModel {
        network: net.clone(),
        vars,
        objective,
        constraints: rows,
    })
}

/// Values for the arc, time and load variables of a [`MibpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvacuationPlan<S> {
    pub values: Vec<S>,
}

impl<S: Scalar> EvacuationPlan<S> {
    pub fn zeros(vars: &VarSpace) -> Self {
        EvacuationPlan {
            values: vec![S::zero(); vars.len()],
        }
    }

    /// Projects a vector over a (possibly larger) space with digit and
    /// product variables onto the arc/time/load space.
    pub fn from_values(full: &VarSpace, plain: &VarSpace, values: &[S]) -> Result<Self> {
        if values.len() != full.len() {
            return Err(Error::DimensionMismatch {
                expected: full.len(),
                found: values.len(),
            });
        }
        let mut plan = Self::zeros(plain);
        for (p, v) in values.iter().enumerate() {
            let key = full.key(p);
            if matches!(key.kind, VarKind::X | VarKind::T | VarKind::B) {
                plan.values[plain.position(&key)] = v.clone();
            }
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanViolation<S> {
    pub eq: EqId,
    pub label: String,
    pub lhs: S,
    pub lower: Option<S>,
    pub upper: Option<S>,
    /// Set when the violation is a non-integral value in an integer domain.
    pub integrality: bool,
}

impl<S: Scalar> fmt::Display for PlanViolation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: value {:?}", self.eq, self.label, self.lhs)?;
        if self.integrality {
            return write!(f, " is not integral");
        }
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) if l == u => write!(f, " != {l:?}"),
            (Some(l), Some(u)) => write!(f, " outside [{l:?}, {u:?}]"),
            (Some(l), None) => write!(f, " < {l:?}"),
            (None, Some(u)) => write!(f, " > {u:?}"),
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<S> {
    pub violations: Vec<PlanViolation<S>>,
}

impl<S> FeasibilityReport<S> {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Default absolute feasibility tolerance for continuous rows.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

fn is_integral<S: Scalar>(v: &S) -> bool {
    v.to_f64().map(|f| f.fract() == 0.0).unwrap_or(false)
}

/// Evaluates every record of the model, bilinear dose rows included, and
/// lists the violated ones. Integrality is checked exactly; row bounds with
/// absolute tolerance `tol`.
pub fn check_plan<S: Scalar>(model: &MibpModel<S>, plan: &EvacuationPlan<S>, tol: S) -> Result<FeasibilityReport<S>> {
    if plan.values.len() != model.vars.len() {
        return Err(Error::DimensionMismatch {
            expected: model.vars.len(),
            found: plan.values.len(),
        });
    }
    let mut violations = Vec::new();
    for rec in &model.constraints {
        let lhs = rec.evaluate(&plan.values);
        let low = rec.lower.as_ref().is_some_and(|l| lhs < l.clone() - tol.clone());
        let high = rec.upper.as_ref().is_some_and(|u| lhs > u.clone() + tol.clone());
        let frac = rec.integral && !is_integral(&lhs);
        if low || high || frac {
            violations.push(PlanViolation {
                eq: rec.eq,
                label: rec.label.clone(),
                lhs,
                lower: rec.lower.clone(),
                upper: rec.upper.clone(),
                integrality: frac && !(low || high),
            });
        }
    }
    Ok(FeasibilityReport { violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoseEntry<S> {
    pub pickup: usize,
    pub bus: usize,
    /// mSv.
    pub dose: S,
}

/// Escape plus waiting dose for every (pickup, bus) pair. The escape term
/// charges each picked-up evacuee with the radiation of every shelter arc
/// out of the pickup.
pub fn compute_doses<S: Scalar>(net: &Network<S>, vars: &VarSpace, plan: &EvacuationPlan<S>) -> Vec<DoseEntry<S>> {
    let mut out = Vec::new();
    for i in net.pickups() {
        let escape = escape_factor(net, i);
        for m in 0..net.bus_count() {
            let mut dose = S::zero();
            for t in 1..=net.trips() {
                let b = plan.values[vars.load(i, m, t)].clone();
                let wait = net.node_radiation(i).clone() * plan.values[vars.time(i, m, t)].clone();
                dose = dose + (escape.clone() + wait) * b;
            }
            out.push(DoseEntry { pickup: i, bus: m, dose });
        }
    }
    out
}

/// Arc chosen by bus `m` on trip `t`, if any. Errors when the indicators
/// are not 0/1 or more than one arc is set.
pub fn trip_arc<S: Scalar>(net: &Network<S>, vars: &VarSpace, plan: &EvacuationPlan<S>, m: usize, t: usize) -> Result<Option<usize>> {
    let mut chosen = None;
    for a in 0..net.arc_count() {
        let v = &plan.values[vars.x(a, m, t)];
        if v.is_zero() {
            continue;
        }
        if !v.is_one() {
            return Err(Error::MalformedPlan(format!(
                "arc indicator {} = {v:?} is not binary",
                vars.name(net, vars.x(a, m, t))
            )));
        }
        if let Some(prev) = chosen.replace(a) {
            return Err(Error::MalformedPlan(format!(
                "bus {} uses two arcs ({} and {}) on trip {t}",
                net.bus_id(m),
                vars.name(net, vars.x(prev, m, t)),
                vars.name(net, vars.x(a, m, t)),
            )));
        }
    }
    Ok(chosen)
}

/// Least visit times satisfying the time rows for the plan's arc choices:
/// zero on the first trip, then `T[j][t+1] = max_i (T[i][t] + x_ij * travel_ij)`.
pub fn assign_earliest_times<S: Scalar>(net: &Network<S>, vars: &VarSpace, plan: &mut EvacuationPlan<S>) {
    let n = net.node_count();
    for m in 0..net.bus_count() {
        for i in 0..n {
            plan.values[vars.time(i, m, 1)] = S::zero();
        }
        for t in 1..net.trips() {
            let floor = (0..n)
                .map(|i| plan.values[vars.time(i, m, t)].clone())
                .fold(S::zero(), S::max_of);
            for j in 0..n {
                let mut best = floor.clone();
                for &a in net.in_arcs(j) {
                    let x = plan.values[vars.x(a, m, t)].clone();
                    if !x.is_zero() {
                        let i = net.arc(a).0;
                        let cand = plan.values[vars.time(i, m, t)].clone() + x * net.travel_time(a).clone();
                        best = S::max_of(best, cand);
                    }
                }
                plan.values[vars.time(j, m, t + 1)] = best;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteLeg<S> {
    pub trip: usize,
    /// `None` for an idle trip.
    pub arc: Option<usize>,
    pub depart: S,
    pub arrive: S,
    pub onboard_before: i64,
    pub onboard_after: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusRoute<S> {
    pub bus: usize,
    pub legs: Vec<RouteLeg<S>>,
}

impl<S: Scalar> BusRoute<S> {
    /// Arrival time of the last non-idle trip.
    pub fn completion_time(&self) -> S {
        self.legs
            .iter()
            .rev()
            .find(|l| l.arc.is_some())
            .map(|l| l.arrive.clone())
            .unwrap_or_else(S::zero)
    }

    pub fn travel_time(&self) -> S {
        self.legs
            .iter()
            .fold(S::zero(), |acc, l| acc + l.arrive.clone() - l.depart.clone())
    }
}

fn as_count<S: Scalar>(v: &S) -> i64 {
    v.to_f64().map(|f| f.round() as i64).unwrap_or(0)
}

/// Per-bus trip sequence; times accumulate arc travel times from zero and
/// the onboard count follows the cumulative pickups minus releases.
pub fn extract_routes<S: Scalar>(net: &Network<S>, vars: &VarSpace, plan: &EvacuationPlan<S>) -> Result<Vec<BusRoute<S>>> {
    if plan.values.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            found: plan.values.len(),
        });
    }
    let mut routes = Vec::with_capacity(net.bus_count());
    for m in 0..net.bus_count() {
        let mut clock = S::zero();
        let mut onboard = 0i64;
        let mut legs = Vec::with_capacity(net.trips());
        for t in 1..=net.trips() {
            let arc = trip_arc(net, vars, plan, m, t)?;
            let depart = clock.clone();
            if let Some(a) = arc {
                clock = clock + net.travel_time(a).clone();
            }
            let before = onboard;
            for j in net.pickups() {
                onboard += as_count(&plan.values[vars.load(j, m, t)]);
            }
            for k in net.shelters() {
                onboard -= as_count(&plan.values[vars.load(k, m, t)]);
            }
            legs.push(RouteLeg {
                trip: t,
                arc,
                depart,
                arrive: clock.clone(),
                onboard_before: before,
                onboard_after: onboard,
            });
        }
        routes.push(BusRoute { bus: m, legs });
    }
    Ok(routes)
}

/// Derived figures reported for a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSummary<S> {
    pub routes: Vec<BusRoute<S>>,
    pub doses: Vec<DoseEntry<S>>,
    /// Longest bus completion time, seconds.
    pub t_evac: S,
    /// Total travel time of all buses, seconds.
    pub cost: S,
}

pub fn summarize<S: Scalar>(model: &MibpModel<S>, plan: &EvacuationPlan<S>) -> Result<PlanSummary<S>> {
    let routes = extract_routes(&model.network, &model.vars, plan)?;
    let doses = compute_doses(&model.network, &model.vars, plan);
    let t_evac = routes.iter().map(BusRoute::completion_time).fold(S::zero(), S::max_of);
    let cost = model.objective_value(&plan.values);
    Ok(PlanSummary {
        routes,
        doses,
        t_evac,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::t1;
    use crate::model::EvacuationInstance;

    fn net(inst: &EvacuationInstance<f64>) -> Network<f64> {
        Network::new(inst).unwrap()
    }

    /// d->p, p->s, s->p, p->s picking 2 then 1.
    pub(crate) fn t1_plan(model: &MibpModel<f64>) -> EvacuationPlan<f64> {
        let net = &model.network;
        let v = &model.vars;
        let (d, p, s) = (0, 1, 2);
        let mut plan = EvacuationPlan::zeros(v);
        let route = [(d, p), (p, s), (s, p), (p, s)];
        for (t, (i, j)) in route.iter().enumerate() {
            plan.values[v.x(net.arc_index(*i, *j).unwrap(), 0, t + 1)] = 1.0;
        }
        plan.values[v.load(p, 0, 1)] = 2.0;
        plan.values[v.load(s, 0, 2)] = 2.0;
        plan.values[v.load(p, 0, 3)] = 1.0;
        plan.values[v.load(s, 0, 4)] = 1.0;
        assign_earliest_times(net, v, &mut plan);
        plan
    }

    #[test]
    fn family_sizes_follow_quantifiers() {
        let model = build_mibp(&net(&t1())).unwrap();
        assert_eq!(model.family_len(EqId::DEMAND), 1);
        let rec = model.family(EqId::DEMAND).next().unwrap();
        assert_eq!(rec.lower, Some(3.0));
        assert_eq!(model.family_len(EqId::ONE_ARC), 4);
        assert_eq!(model.family_len(EqId::DOSE), 1);
        assert_eq!(model.family_len(EqId::TIME), 9 * 3);
        for eq in EqId::all() {
            let bilinear = model.family(eq).any(|c| !c.is_linear());
            assert_eq!(bilinear, eq == EqId::DOSE, "{eq}");
        }
    }

    #[test]
    fn insufficient_volume_is_rejected() {
        let mut inst = t1();
        inst.demand.insert("p".into(), 100);
        let err = build_mibp(&net(&inst)).unwrap_err();
        assert!(err.to_string().contains("insufficient transport volume"));
    }

    #[test]
    fn optimal_t1_plan_is_feasible() {
        let model = build_mibp(&net(&t1())).unwrap();
        let plan = t1_plan(&model);
        let report = check_plan(&model, &plan, 1e-6).unwrap();
        assert!(report.is_feasible(), "{:?}", report.violations);
        assert_eq!(model.objective_value(&plan.values), 26.0);
    }

    #[test]
    fn over_capacity_pickup_violates_onboard_rows() {
        let model = build_mibp(&net(&t1())).unwrap();
        let mut plan = t1_plan(&model);
        let v = &model.vars;
        plan.values[v.load(1, 0, 1)] = 3.0;
        plan.values[v.load(2, 0, 2)] = 3.0;
        plan.values[v.load(1, 0, 3)] = 0.0;
        plan.values[v.load(2, 0, 4)] = 0.0;
        let report = check_plan(&model, &plan, 1e-6).unwrap();
        assert!(report.violations.iter().any(|v| v.eq == EqId::ONBOARD), "{:?}", report.violations);
    }

    #[test]
    fn empty_fleet_with_zero_demand_is_vacuously_feasible() {
        let mut inst = t1();
        inst.buses.clear();
        inst.demand.insert("p".into(), 0);
        let model = build_mibp(&net(&inst)).unwrap();
        let plan = EvacuationPlan::zeros(&model.vars);
        assert!(check_plan(&model, &plan, 1e-6).unwrap().is_feasible());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = build_mibp(&net(&t1())).unwrap();
        let plan = EvacuationPlan { values: vec![0.0; 3] };
        assert!(matches!(check_plan(&model, &plan, 1e-6), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn time_rows_are_unconditional() {
        // A later trip may not start before any visit time of the previous one.
        let model = build_mibp(&net(&t1())).unwrap();
        let mut plan = t1_plan(&model);
        let v = &model.vars;
        plan.values[v.time(0, 0, 2)] = 1000.0;
        let report = check_plan(&model, &plan, 1e-6).unwrap();
        assert!(report.violations.iter().all(|x| x.eq == EqId::TIME));
        assert!(!report.is_feasible());
    }

    #[test]
    fn single_trip_dose() {
        let mut inst = t1();
        inst.arcs[1].radiation = 0.001;
        inst.arcs[1].travel_time = 100.0;
        inst.node_radiation.insert("p".into(), 0.0005);
        let n = net(&inst);
        let vars = index_variables(&n, false);
        let mut plan = EvacuationPlan::zeros(&vars);
        plan.values[vars.load(1, 0, 1)] = 10.0;
        plan.values[vars.time(1, 0, 1)] = 200.0;
        let doses = compute_doses(&n, &vars, &plan);
        assert_eq!(doses.len(), 1);
        assert!((doses[0].dose - 2.0).abs() < 1e-12);
        let zero = compute_doses(&n, &vars, &EvacuationPlan::zeros(&vars));
        assert!(zero.iter().all(|d| d.dose == 0.0));
    }

    #[test]
    fn t1_dose_with_arrival_times() {
        let mut inst = t1();
        inst.arcs[1].radiation = 0.01;
        inst.node_radiation.insert("p".into(), 0.002);
        let model = build_mibp(&net(&inst)).unwrap();
        let mut plan = t1_plan(&model);
        plan.values[model.vars.time(1, 0, 1)] = 5.0;
        plan.values[model.vars.time(1, 0, 3)] = 19.0;
        let doses = compute_doses(&model.network, &model.vars, &plan);
        assert!((doses[0].dose - 0.268).abs() < 1e-12, "{}", doses[0].dose);
    }

    #[test]
    fn exact_rational_evaluation() {
        use num_rational::Rational64;
        let inst = t1();
        let exact: EvacuationInstance<Rational64> = crate::scenario::convert_instance(&inst);
        let model = build_mibp(&Network::new(&exact).unwrap()).unwrap();
        let float_model = build_mibp(&net(&inst)).unwrap();
        let float_plan = t1_plan(&float_model);
        let plan = EvacuationPlan {
            values: float_plan.values.iter().map(crate::scalar::cast).collect(),
        };
        assert!(check_plan(&model, &plan, Rational64::from_integer(0)).unwrap().is_feasible());
        assert_eq!(model.objective_value(&plan.values), Rational64::from_integer(26));
    }

    #[test]
    fn routes_of_optimal_t1_plan() {
        let model = build_mibp(&net(&t1())).unwrap();
        let plan = t1_plan(&model);
        let routes = extract_routes(&model.network, &model.vars, &plan).unwrap();
        let legs: Vec<_> = routes[0]
            .legs
            .iter()
            .map(|l| (l.trip, l.arc.map(|a| model.network.arc(a)), l.arrive, l.onboard_before, l.onboard_after))
            .collect();
        assert_eq!(
            legs,
            vec![
                (1, Some((0, 1)), 5.0, 0, 2),
                (2, Some((1, 2)), 12.0, 2, 0),
                (3, Some((2, 1)), 19.0, 0, 1),
                (4, Some((1, 2)), 26.0, 1, 0),
            ]
        );
        let summary = summarize(&model, &plan).unwrap();
        assert_eq!(summary.t_evac, 26.0);
        assert_eq!(summary.cost, 26.0);
    }

    #[test]
    fn idle_trip_and_double_arc() {
        let mut inst = t1();
        inst.demand.insert("p".into(), 0);
        let model = build_mibp(&net(&inst)).unwrap();
        let v = &model.vars;
        let mut plan = EvacuationPlan::zeros(v);
        plan.values[v.x(0, 0, 1)] = 1.0;
        plan.values[v.x(1, 0, 2)] = 1.0;
        let routes = extract_routes(&model.network, v, &plan).unwrap();
        assert_eq!(routes[0].legs[2].arc, None);
        assert_eq!(routes[0].completion_time(), 12.0);
        plan.values[v.x(2, 0, 2)] = 1.0;
        assert!(matches!(extract_routes(&model.network, v, &plan), Err(Error::MalformedPlan(_))));
    }
}
