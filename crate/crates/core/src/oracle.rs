//! Exhaustive search over tiny instances, used to cross-check the MILP path.
//!
//! Every bus independently picks one arc (or none) per trip. Routes that
//! break a per-bus arc rule are dropped early; for each surviving fleet
//! assignment the visit times are set to their earliest values, which never
//! hurts feasibility since times only enter the dose rows with nonnegative
//! weight, and loads are enumerated trip by trip with partial checks. The
//! winning plan is confirmed with [`check_plan`].

use crate::error::{Error, Result};
use crate::formulation::{assign_earliest_times, build_mibp, check_plan, EvacuationPlan, MibpModel};
use crate::model::{EvacuationInstance, Network, VarKind};
use crate::scalar::Scalar;

pub const MAX_SEARCH_SPACE: f64 = 1e7;
pub const MAX_CAPACITY: i64 = 4;
pub const MAX_DEMAND: i64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome<S> {
    Optimal { objective: S, plan: EvacuationPlan<S> },
    Infeasible,
}

impl<S: Clone> OracleOutcome<S> {
    pub fn objective(&self) -> Option<S> {
        match self {
            OracleOutcome::Optimal { objective, .. } => Some(objective.clone()),
            OracleOutcome::Infeasible => None,
        }
    }
}

pub fn brute_force_oracle<S: Scalar>(inst: &EvacuationInstance<S>) -> Result<OracleOutcome<S>> {
    let net = Network::new(inst)?;
    let arcs = net.arc_count() as f64;
    let space = (arcs + 1.0).powf((net.bus_count() * net.trips()) as f64);
    if space > MAX_SEARCH_SPACE {
        return Err(Error::SearchSpaceTooLarge(format!(
            "(|A|+1)^(|V|T) = {space:.3e} exceeds {MAX_SEARCH_SPACE:e}"
        )));
    }
    if net.capacity() > MAX_CAPACITY {
        return Err(Error::SearchSpaceTooLarge(format!("capacity {} exceeds {MAX_CAPACITY}", net.capacity())));
    }
    if let Some(j) = net.pickups().find(|&j| net.demand(j) > MAX_DEMAND) {
        return Err(Error::SearchSpaceTooLarge(format!(
            "demand {} at {} exceeds {MAX_DEMAND}",
            net.demand(j),
            net.node_id(j)
        )));
    }
    let model = match build_mibp(&net) {
        Ok(m) => m,
        Err(Error::InsufficientVolume { .. }) => return Ok(OracleOutcome::Infeasible),
        Err(e) => return Err(e),
    };
    Search::new(&model).run()
}

struct Search<'a, S> {
    model: &'a MibpModel<S>,
    /// Candidate routes per bus: arc (or `None`) per trip, with their cost.
    routes: Vec<Vec<(Vec<Option<usize>>, S)>>,
    /// Records without load variables.
    fixed_records: Vec<usize>,
    /// Records with load variables, by their largest load position.
    load_records: Vec<(usize, Vec<usize>)>,
    best: Option<(S, EvacuationPlan<S>)>,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn new(model: &'a MibpModel<S>) -> Self {
        let net = &model.network;
        let vars = &model.vars;
        let uses_load = |r: &crate::formulation::ConstraintRecord<S>| {
            r.linear.iter().any(|(p, _)| vars.key(*p).kind == VarKind::B) || !r.bilinear.is_empty()
        };
        let fixed_records = (0..model.constraints.len())
            .filter(|&k| !uses_load(&model.constraints[k]))
            .collect();
        let mut loaded: Vec<(usize, Vec<usize>)> = Vec::new();
        for (k, r) in model.constraints.iter().enumerate() {
            if uses_load(r) {
                let last = r
                    .linear
                    .iter()
                    .map(|(p, _)| *p)
                    .chain(r.bilinear.iter().map(|(_, b, _)| *b))
                    .filter(|p| vars.key(*p).kind == VarKind::B)
                    .max()
                    .unwrap();
                match loaded.iter_mut().find(|(p, _)| *p == last) {
                    Some((_, v)) => v.push(k),
                    None => loaded.push((last, vec![k])),
                }
            }
        }

        let per_bus_records: Vec<Vec<usize>> = (0..net.bus_count())
            .map(|m| {
                (0..model.constraints.len())
                    .filter(|&k| {
                        let r = &model.constraints[k];
                        r.bilinear.is_empty()
                            && !r.linear.is_empty()
                            && r.linear.iter().all(|(p, _)| {
                                let key = vars.key(*p);
                                key.kind == VarKind::X && key.bus == m
                            })
                    })
                    .collect()
            })
            .collect();

        let trips = net.trips();
        let choices = net.arc_count() + 1;
        let mut routes = Vec::with_capacity(net.bus_count());
        for (m, records) in per_bus_records.iter().enumerate() {
            let mut list = Vec::new();
            let mut digits = vec![0usize; trips];
            let mut values = vec![S::zero(); vars.len()];
            loop {
                let route: Vec<Option<usize>> = digits.iter().map(|&d| d.checked_sub(1)).collect();
                for (t, a) in route.iter().enumerate() {
                    if let Some(a) = a {
                        values[vars.x(*a, m, t + 1)] = S::one();
                    }
                }
                let ok = records.iter().all(|&k| satisfied(&model.constraints[k], &values));
                if ok {
                    let cost = route
                        .iter()
                        .flatten()
                        .fold(S::zero(), |acc, &a| acc + net.travel_time(a).clone());
                    list.push((route.clone(), cost));
                }
                for (t, a) in route.iter().enumerate() {
                    if let Some(a) = a {
                        values[vars.x(*a, m, t + 1)] = S::zero();
                    }
                }
                let mut k = 0;
                while k < trips {
                    digits[k] += 1;
                    if digits[k] < choices {
                        break;
                    }
                    digits[k] = 0;
                    k += 1;
                }
                if k == trips {
                    break;
                }
            }
            routes.push(list);
        }
        loaded.sort_by_key(|(p, _)| *p);
        Search {
            model,
            routes,
            fixed_records,
            load_records: loaded,
            best: None,
        }
    }

    fn run(mut self) -> Result<OracleOutcome<S>> {
        let mut chosen = Vec::with_capacity(self.routes.len());
        self.fleet(&mut chosen, S::zero());
        Ok(match self.best {
            Some((objective, plan)) => {
                let report = check_plan(self.model, &plan, S::zero())?;
                debug_assert!(report.is_feasible(), "{:?}", report.violations);
                if !report.is_feasible() {
                    return Err(Error::Numerical("oracle plan failed its own check".into()));
                }
                OracleOutcome::Optimal { objective, plan }
            }
            None => OracleOutcome::Infeasible,
        })
    }

    fn fleet(&mut self, chosen: &mut Vec<usize>, cost: S) {
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        let m = chosen.len();
        if m == self.routes.len() {
            self.evaluate(chosen, cost);
            return;
        }
        for r in 0..self.routes[m].len() {
            let c = cost.clone() + self.routes[m][r].1.clone();
            chosen.push(r);
            self.fleet(chosen, c);
            chosen.pop();
        }
    }

    fn evaluate(&mut self, chosen: &[usize], cost: S) {
        let net = &self.model.network;
        let vars = &self.model.vars;
        let mut plan = EvacuationPlan::zeros(vars);
        for (m, &r) in chosen.iter().enumerate() {
            for (t, a) in self.routes[m][r].0.iter().enumerate() {
                if let Some(a) = a {
                    plan.values[vars.x(*a, m, t + 1)] = S::one();
                }
            }
        }
        assign_earliest_times(net, vars, &mut plan);
        if !self
            .fixed_records
            .iter()
            .all(|&k| satisfied(&self.model.constraints[k], &plan.values))
        {
            return;
        }
        // Loads only where the bus arrives.
        let mut slots = Vec::new();
        for p in 0..vars.len() {
            let key = vars.key(p);
            if key.kind != VarKind::B {
                continue;
            }
            let visited = net
                .in_arcs(key.subject)
                .iter()
                .any(|&a| !plan.values[vars.x(a, key.bus, key.trip)].is_zero());
            if visited {
                slots.push(p);
            }
        }
        // A record is checked once its last load slot is assigned.
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); slots.len() + 1];
        for (last, recs) in &self.load_records {
            let g = slots.iter().rposition(|&s| s <= *last).map_or(0, |k| k + 1);
            groups[g].extend(recs.iter().copied());
        }
        if !groups[0].iter().all(|&k| satisfied(&self.model.constraints[k], &plan.values)) {
            return;
        }
        if self.loads(&slots, &groups, 0, &mut plan) {
            self.best = Some((cost, plan));
        }
    }

    fn loads(&self, slots: &[usize], groups: &[Vec<usize>], k: usize, plan: &mut EvacuationPlan<S>) -> bool {
        if k == slots.len() {
            return true;
        }
        let q = self.model.network.capacity();
        for v in 0..=q {
            plan.values[slots[k]] = S::from_i64_exact(v);
            if groups[k + 1]
                .iter()
                .all(|&r| satisfied(&self.model.constraints[r], &plan.values))
                && self.loads(slots, groups, k + 1, plan)
            {
                return true;
            }
        }
        plan.values[slots[k]] = S::zero();
        false
    }
}

fn satisfied<S: Scalar>(r: &crate::formulation::ConstraintRecord<S>, values: &[S]) -> bool {
    let v = r.evaluate(values);
    r.lower.as_ref().map_or(true, |l| v >= *l) && r.upper.as_ref().map_or(true, |u| v <= *u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::t1;
    use num_rational::Rational64;

    #[test]
    fn t1_optimum() {
        let out = brute_force_oracle(&t1()).unwrap();
        assert_eq!(out.objective(), Some(26.0));
    }

    #[test]
    fn t1_without_demand_still_moves() {
        let mut inst = t1();
        inst.demand.insert("p".into(), 0);
        assert_eq!(brute_force_oracle(&inst).unwrap().objective(), Some(12.0));
    }

    #[test]
    fn volume_failure_is_infeasible() {
        let mut inst = t1();
        inst.trips = 1;
        assert_eq!(brute_force_oracle(&inst).unwrap(), OracleOutcome::Infeasible);
    }

    #[test]
    fn tight_dose_makes_t1_infeasible() {
        let mut inst = t1();
        inst.node_radiation.insert("p".into(), 1.0);
        inst.dose_limit = Some(1.0);
        assert_eq!(brute_force_oracle(&inst).unwrap(), OracleOutcome::Infeasible);
    }

    #[test]
    fn exact_arithmetic() {
        let inst: EvacuationInstance<Rational64> = crate::scenario::convert_instance(&t1());
        assert_eq!(brute_force_oracle(&inst).unwrap().objective(), Some(Rational64::from_integer(26)));
    }

    #[test]
    fn refuses_large_searches() {
        let mut inst = t1();
        inst.trips = 20;
        assert!(matches!(brute_force_oracle(&inst), Err(Error::SearchSpaceTooLarge(_))));
        let mut inst = t1();
        inst.demand.insert("p".into(), 5);
        assert!(matches!(brute_force_oracle(&inst), Err(Error::SearchSpaceTooLarge(_))));
    }
}
