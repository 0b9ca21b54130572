//! Evacuation network, parameters, and the decision-variable index space.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Depot,
    Pickup,
    Shelter,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Depot => "depot",
            NodeKind::Pickup => "pickup",
            NodeKind::Shelter => "shelter",
        }
    }

    fn letter(self) -> char {
        match self {
            NodeKind::Depot => 'D',
            NodeKind::Pickup => 'P',
            NodeKind::Shelter => 'S',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcData<S> {
    pub from: String,
    pub to: String,
    /// Seconds.
    pub travel_time: S,
    /// mSv per second while traversing the arc.
    pub radiation: S,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bus {
    pub id: String,
    pub depot: String,
}

/// Raw evacuation scenario as loaded or generated. May be invalid; see
/// [`validate_instance`] and [`Network::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvacuationInstance<S> {
    pub name: String,
    pub depots: Vec<String>,
    pub pickups: Vec<String>,
    pub shelters: Vec<String>,
    pub arcs: Vec<ArcData<S>>,
    /// Waiting radiation rate at each pickup, mSv/s.
    pub node_radiation: BTreeMap<String, S>,
    /// Per (pickup, bus) dose bound in mSv; `None` means unlimited.
    pub dose_limit: Option<S>,
    pub capacity: i64,
    pub demand: BTreeMap<String, i64>,
    pub buses: Vec<Bus>,
    pub trips: usize,
}

/// One failed instance rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn violation(field: impl Into<String>, rule: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        rule: rule.into(),
    }
}

/// Lists every broken instance invariant. An empty list means the instance
/// can be turned into a [`Network`].
pub fn validate_instance<S: Scalar>(inst: &EvacuationInstance<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut kinds: HashMap<&str, NodeKind> = HashMap::new();
    for (list, kind, field) in [
        (&inst.depots, NodeKind::Depot, "depots"),
        (&inst.pickups, NodeKind::Pickup, "pickups"),
        (&inst.shelters, NodeKind::Shelter, "shelters"),
    ] {
        for id in list.iter() {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                out.push(violation(format!("{field}[{id}]"), "node id must be non-empty without whitespace"));
            }
            if kinds.insert(id.as_str(), kind).is_some() {
                out.push(violation(format!("{field}[{id}]"), "duplicate node id"));
            }
        }
    }

    let mut seen_arcs = BTreeSet::new();
    for arc in &inst.arcs {
        let field = format!("arcs[{}->{}]", arc.from, arc.to);
        let (Some(&a), Some(&b)) = (kinds.get(arc.from.as_str()), kinds.get(arc.to.as_str())) else {
            out.push(violation(field, "arc references an undeclared node"));
            continue;
        };
        let allowed = matches!(
            (a, b),
            (NodeKind::Depot, NodeKind::Pickup)
                | (NodeKind::Pickup, NodeKind::Shelter)
                | (NodeKind::Shelter, NodeKind::Pickup)
        );
        if !allowed {
            out.push(violation(
                field.clone(),
                format!("arc kind {}->{} not allowed", a.letter(), b.letter()),
            ));
        }
        if !seen_arcs.insert((arc.from.clone(), arc.to.clone())) {
            out.push(violation(field.clone(), "duplicate arc"));
        }
        if arc.travel_time <= S::zero() {
            out.push(violation(format!("{field}.travel_time"), "travel time must be positive"));
        }
        if arc.radiation < S::zero() {
            out.push(violation(format!("{field}.radiation"), "radiation rate must be nonnegative"));
        }
    }
    let required = inst
        .depots
        .iter()
        .flat_map(|d| inst.pickups.iter().map(move |p| (d, p)))
        .chain(inst.pickups.iter().flat_map(|p| inst.shelters.iter().map(move |s| (p, s))))
        .chain(inst.shelters.iter().flat_map(|s| inst.pickups.iter().map(move |p| (s, p))));
    for (i, j) in required {
        if !seen_arcs.contains(&(i.clone(), j.clone())) {
            out.push(violation(format!("arcs[{i}->{j}]"), "missing arc"));
        }
    }

    for p in &inst.pickups {
        match inst.node_radiation.get(p) {
            None => out.push(violation(format!("node_radiation[{p}]"), "missing waiting radiation rate")),
            Some(r) if *r < S::zero() => {
                out.push(violation(format!("node_radiation[{p}]"), "radiation rate must be nonnegative"))
            }
            _ => {}
        }
        match inst.demand.get(p) {
            None => out.push(violation(format!("demand[{p}]"), "missing demand")),
            Some(d) if *d < 0 => out.push(violation(format!("demand[{p}]"), "demand nonnegative")),
            _ => {}
        }
    }
    for k in inst.node_radiation.keys() {
        if kinds.get(k.as_str()) != Some(&NodeKind::Pickup) {
            out.push(violation(format!("node_radiation[{k}]"), "rate given for a non-pickup node"));
        }
    }
    for k in inst.demand.keys() {
        if kinds.get(k.as_str()) != Some(&NodeKind::Pickup) {
            out.push(violation(format!("demand[{k}]"), "demand given for a non-pickup node"));
        }
    }

    if let Some(limit) = &inst.dose_limit {
        if *limit < S::zero() {
            out.push(violation("dose_limit", "dose limit nonnegative"));
        }
    }
    if inst.capacity < 1 {
        out.push(violation("capacity", "capacity must be a positive integer"));
    }
    if inst.trips < 1 {
        out.push(violation("trips", "trip horizon must be at least 1"));
    }

    let mut bus_ids = BTreeSet::new();
    for bus in &inst.buses {
        if bus.id.is_empty() || bus.id.chars().any(char::is_whitespace) {
            out.push(violation(format!("buses[{}]", bus.id), "bus id must be non-empty without whitespace"));
        }
        if !bus_ids.insert(bus.id.as_str()) {
            out.push(violation(format!("buses[{}]", bus.id), "duplicate bus id"));
        }
        if kinds.get(bus.depot.as_str()) != Some(&NodeKind::Depot) {
            out.push(violation(format!("buses[{}].depot", bus.id), "home depot is not a declared depot"));
        }
    }
    out
}

/// Validated, index-based view of an instance. Node order is depots,
/// pickups, shelters, each sorted lexicographically; arcs are sorted by
/// (tail, head) node position. Buses keep their declared order.
#[derive(Debug, Clone)]
pub struct Network<S> {
    name: String,
    nodes: Vec<String>,
    kinds: Vec<NodeKind>,
    n_depots: usize,
    n_pickups: usize,
    arcs: Vec<(usize, usize)>,
    travel: Vec<S>,
    tau: Vec<S>,
    arc_lookup: HashMap<(usize, usize), usize>,
    in_arcs: Vec<Vec<usize>>,
    out_arcs: Vec<Vec<usize>>,
    eta: Vec<S>,
    demand: Vec<i64>,
    bus_ids: Vec<String>,
    bus_depot: Vec<usize>,
    capacity: i64,
    trips: usize,
    dose_limit: Option<S>,
}

impl<S: Scalar> Network<S> {
    pub fn new(inst: &EvacuationInstance<S>) -> Result<Self> {
        let violations = validate_instance(inst);
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let sorted = |v: &[String]| {
            let mut v = v.to_vec();
            v.sort();
            v
        };
        let depots = sorted(&inst.depots);
        let pickups = sorted(&inst.pickups);
        let shelters = sorted(&inst.shelters);
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        for (list, kind) in [
            (&depots, NodeKind::Depot),
            (&pickups, NodeKind::Pickup),
            (&shelters, NodeKind::Shelter),
        ] {
            for id in list {
                nodes.push(id.clone());
                kinds.push(kind);
            }
        }
        let pos: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

        let mut arc_rows: Vec<(usize, usize, &ArcData<S>)> =
            inst.arcs.iter().map(|a| (pos[a.from.as_str()], pos[a.to.as_str()], a)).collect();
        arc_rows.sort_by_key(|&(i, j, _)| (i, j));
        let n = nodes.len();
        let mut arcs = Vec::with_capacity(arc_rows.len());
        let mut travel = Vec::with_capacity(arc_rows.len());
        let mut tau = Vec::with_capacity(arc_rows.len());
        let mut arc_lookup = HashMap::new();
        let mut in_arcs = vec![Vec::new(); n];
        let mut out_arcs = vec![Vec::new(); n];
        for (k, (i, j, a)) in arc_rows.into_iter().enumerate() {
            arcs.push((i, j));
            travel.push(a.travel_time.clone());
            tau.push(a.radiation.clone());
            arc_lookup.insert((i, j), k);
            out_arcs[i].push(k);
            in_arcs[j].push(k);
        }
        let eta = nodes
            .iter()
            .map(|id| inst.node_radiation.get(id).cloned().unwrap_or_else(S::zero))
            .collect();
        let demand = nodes.iter().map(|id| inst.demand.get(id).copied().unwrap_or(0)).collect();
        Ok(Network {
            name: inst.name.clone(),
            n_depots: depots.len(),
            n_pickups: pickups.len(),
            nodes,
            kinds,
            arcs,
            travel,
            tau,
            arc_lookup,
            in_arcs,
            out_arcs,
            eta,
            demand,
            bus_ids: inst.buses.iter().map(|b| b.id.clone()).collect(),
            bus_depot: inst.buses.iter().map(|b| pos[b.depot.as_str()]).collect(),
            capacity: inst.capacity,
            trips: inst.trips,
            dose_limit: inst.dose_limit.clone(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
    pub fn node_id(&self, i: usize) -> &str {
        &self.nodes[i]
    }
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }
    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }
    pub fn depots(&self) -> std::ops::Range<usize> {
        0..self.n_depots
    }
    pub fn pickups(&self) -> std::ops::Range<usize> {
        self.n_depots..self.n_depots + self.n_pickups
    }
    pub fn shelters(&self) -> std::ops::Range<usize> {
        self.n_depots + self.n_pickups..self.nodes.len()
    }
    /// Pickups followed by shelters: the nodes that carry a load variable.
    pub fn load_nodes(&self) -> std::ops::Range<usize> {
        self.n_depots..self.nodes.len()
    }
    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }
    pub fn arc(&self, a: usize) -> (usize, usize) {
        self.arcs[a]
    }
    pub fn arc_index(&self, i: usize, j: usize) -> Option<usize> {
        self.arc_lookup.get(&(i, j)).copied()
    }
    pub fn in_arcs(&self, j: usize) -> &[usize] {
        &self.in_arcs[j]
    }
    pub fn out_arcs(&self, i: usize) -> &[usize] {
        &self.out_arcs[i]
    }
    pub fn travel_time(&self, a: usize) -> &S {
        &self.travel[a]
    }
    pub fn arc_radiation(&self, a: usize) -> &S {
        &self.tau[a]
    }
    pub fn node_radiation(&self, i: usize) -> &S {
        &self.eta[i]
    }
    pub fn demand(&self, i: usize) -> i64 {
        self.demand[i]
    }
    pub fn total_demand(&self) -> i64 {
        self.pickups().map(|p| self.demand[p]).sum()
    }
    pub fn bus_count(&self) -> usize {
        self.bus_ids.len()
    }
    pub fn bus_id(&self, m: usize) -> &str {
        &self.bus_ids[m]
    }
    pub fn bus_depot(&self, m: usize) -> usize {
        self.bus_depot[m]
    }
    pub fn capacity(&self) -> i64 {
        self.capacity
    }
    pub fn trips(&self) -> usize {
        self.trips
    }
    pub fn dose_limit(&self) -> Option<&S> {
        self.dose_limit.as_ref()
    }

    pub fn max_travel_time(&self) -> S {
        self.travel.iter().cloned().fold(S::zero(), S::max_of)
    }
}

/// Upper bound on visit times: trip `t` of any bus ends no later than
/// `t` times the longest arc, since a bus crosses at most one arc per trip.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeUpperBound<S> {
    max_travel: S,
}

impl<S: Scalar> TimeUpperBound<S> {
    /// Bound for (node, bus, trip); only the trip matters.
    pub fn get(&self, _node: usize, _bus: usize, trip: usize) -> S {
        S::from_i64_exact(trip as i64) * self.max_travel.clone()
    }

    pub fn max_travel_time(&self) -> &S {
        &self.max_travel
    }
}

pub fn time_upper_bound<S: Scalar>(net: &Network<S>) -> TimeUpperBound<S> {
    TimeUpperBound {
        max_travel: net.max_travel_time(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Arc traversal indicator.
    X,
    /// Visit time.
    T,
    /// Evacuees picked up (pickups) or released (shelters).
    B,
    /// Binary digit of a load.
    Y,
    /// Scaled product of a visit time and a load digit.
    V,
}

/// Structured subscripts of one decision variable. `subject` is an arc
/// position for `X` and a node position otherwise; trips are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarKey {
    pub kind: VarKind,
    pub subject: usize,
    pub bus: usize,
    pub trip: usize,
    pub bit: usize,
}

/// Flat index space over all decision variables, ordered by kind, then
/// arc/node, then bus, then trip, then bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSpace {
    n_arcs: usize,
    n_nodes: usize,
    n_depots: usize,
    n_load: usize,
    n_buses: usize,
    trips: usize,
    bits: usize,
    offsets: [usize; 6],
}

impl VarSpace {
    fn block_len(&self, kind: VarKind) -> usize {
        let per = self.n_buses * self.trips;
        match kind {
            VarKind::X => self.n_arcs * per,
            VarKind::T => self.n_nodes * per,
            VarKind::B => self.n_load * per,
            VarKind::Y | VarKind::V => self.n_load * per * self.bits,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets[5]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, kind: VarKind) -> usize {
        self.block_len(kind)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn has_bits(&self) -> bool {
        self.bits > 0
    }

    pub fn trips(&self) -> usize {
        self.trips
    }

    pub fn buses(&self) -> usize {
        self.n_buses
    }

    fn slot(&self, subject: usize, bus: usize, trip: usize) -> usize {
        debug_assert!(trip >= 1 && trip <= self.trips && bus < self.n_buses);
        (subject * self.n_buses + bus) * self.trips + (trip - 1)
    }

    pub fn x(&self, arc: usize, bus: usize, trip: usize) -> usize {
        self.offsets[0] + self.slot(arc, bus, trip)
    }

    pub fn time(&self, node: usize, bus: usize, trip: usize) -> usize {
        self.offsets[1] + self.slot(node, bus, trip)
    }

    /// Load variable; `node` must be a pickup or shelter.
    pub fn load(&self, node: usize, bus: usize, trip: usize) -> usize {
        debug_assert!(node >= self.n_depots);
        self.offsets[2] + self.slot(node - self.n_depots, bus, trip)
    }

    pub fn bit(&self, node: usize, bus: usize, trip: usize, n: usize) -> usize {
        debug_assert!(n < self.bits);
        self.offsets[3] + self.slot(node - self.n_depots, bus, trip) * self.bits + n
    }

    pub fn product(&self, node: usize, bus: usize, trip: usize, n: usize) -> usize {
        debug_assert!(n < self.bits);
        self.offsets[4] + self.slot(node - self.n_depots, bus, trip) * self.bits + n
    }

    pub fn position(&self, key: &VarKey) -> usize {
        match key.kind {
            VarKind::X => self.x(key.subject, key.bus, key.trip),
            VarKind::T => self.time(key.subject, key.bus, key.trip),
            VarKind::B => self.load(key.subject, key.bus, key.trip),
            VarKind::Y => self.bit(key.subject, key.bus, key.trip, key.bit),
            VarKind::V => self.product(key.subject, key.bus, key.trip, key.bit),
        }
    }

    pub fn key(&self, pos: usize) -> VarKey {
        assert!(pos < self.len(), "variable position {pos} out of range");
        let kinds = [VarKind::X, VarKind::T, VarKind::B, VarKind::Y, VarKind::V];
        let k = (0..5).rev().find(|&k| pos >= self.offsets[k]).unwrap();
        let kind = kinds[k];
        let mut rel = pos - self.offsets[k];
        let bit = if matches!(kind, VarKind::Y | VarKind::V) {
            let b = rel % self.bits;
            rel /= self.bits;
            b
        } else {
            0
        };
        let trip = rel % self.trips + 1;
        rel /= self.trips;
        let bus = rel % self.n_buses;
        let mut subject = rel / self.n_buses;
        if matches!(kind, VarKind::B | VarKind::Y | VarKind::V) {
            subject += self.n_depots;
        }
        VarKey {
            kind,
            subject,
            bus,
            trip,
            bit,
        }
    }

    /// Export name following `x_<i>_<j>_m<m>_t<t>`, `Tv_<i>_m<m>_t<t>`,
    /// `b_<i>_m<m>_t<t>`, `y<n>_<i>_m<m>_t<t>`, `v<n>_<i>_m<m>_t<t>`.
    pub fn name<S: Scalar>(&self, net: &Network<S>, pos: usize) -> String {
        let k = self.key(pos);
        let m = net.bus_id(k.bus);
        let t = k.trip;
        match k.kind {
            VarKind::X => {
                let (i, j) = net.arc(k.subject);
                format!("x_{}_{}_m{m}_t{t}", net.node_id(i), net.node_id(j))
            }
            VarKind::T => format!("Tv_{}_m{m}_t{t}", net.node_id(k.subject)),
            VarKind::B => format!("b_{}_m{m}_t{t}", net.node_id(k.subject)),
            VarKind::Y => format!("y{}_{}_m{m}_t{t}", k.bit, net.node_id(k.subject)),
            VarKind::V => format!("v{}_{}_m{m}_t{t}", k.bit, net.node_id(k.subject)),
        }
    }
}

/// Builds the index space; `with_bits` adds digit and product families of
/// width `bit_width(Q)`.
pub fn index_variables<S: Scalar>(net: &Network<S>, with_bits: bool) -> VarSpace {
    let bits = if with_bits {
        crate::linearize::bit_width(net.capacity()).expect("validated capacity is positive")
    } else {
        0
    };
    let mut space = VarSpace {
        n_arcs: net.arc_count(),
        n_nodes: net.node_count(),
        n_depots: net.depots().len(),
        n_load: net.load_nodes().len(),
        n_buses: net.bus_count(),
        trips: net.trips(),
        bits,
        offsets: [0; 6],
    };
    let kinds = [VarKind::X, VarKind::T, VarKind::B, VarKind::Y, VarKind::V];
    for (k, kind) in kinds.iter().enumerate() {
        space.offsets[k + 1] = space.offsets[k] + space.block_len(*kind);
    }
    space
}
