//! Random scenario generation and the `.evac` instance file format.
//!
//! ```text
//! # comment
//! NAME  demo
//! NODES
//! D1  depot
//! P1  pickup  0.00005      # waiting radiation, mSv/s
//! S1  shelter
//! ARCS
//! D1  P1  120  0.00002     # from, to, travel seconds, mSv/s
//! PARAMS
//! Q           10
//! T           4
//! dose_limit  50           # or `inf`
//! DEMAND
//! P1  25
//! BUSES
//! 1   D1
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::{Display, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_instance, ArcData, Bus, EvacuationInstance, NodeKind};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub name: Option<String>,
    pub depots: usize,
    pub pickups: usize,
    pub shelters: usize,
    pub buses: usize,
    pub capacity: i64,
    pub trips: usize,
    pub demand: [i64; 2],
    /// Seconds; sampled as whole seconds.
    pub travel_time: [f64; 2],
    pub arc_radiation: [f64; 2],
    pub node_radiation: [f64; 2],
    /// `None` leaves the dose unconstrained.
    pub dose_limit: Option<f64>,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            name: None,
            depots: 1,
            pickups: 5,
            shelters: 2,
            buses: 8,
            capacity: 10,
            trips: 4,
            demand: [10, 40],
            travel_time: [60.0, 600.0],
            arc_radiation: [1e-5, 1e-4],
            node_radiation: [1e-5, 1e-4],
            dose_limit: Some(50.0),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.depots == 0 || self.pickups == 0 || self.shelters == 0 || self.buses == 0 {
            return bad("node and bus counts must be at least 1");
        }
        if self.capacity < 1 || self.trips < 1 {
            return bad("capacity and trips must be at least 1");
        }
        if self.demand[0] < 0 || self.demand[0] > self.demand[1] {
            return bad("demand range must be nonempty and nonnegative");
        }
        for (name, r) in [
            ("travel_time", self.travel_time),
            ("arc_radiation", self.arc_radiation),
            ("node_radiation", self.node_radiation),
        ] {
            if !(r[0] >= 0.0 && r[0] <= r[1] && r[1].is_finite()) {
                return bad(&format!("{name} range must be nonempty and nonnegative"));
            }
        }
        if self.travel_time[1] < 1.0 || self.travel_time[0].ceil() > self.travel_time[1].floor() {
            return bad("travel_time range must contain a positive whole number of seconds");
        }
        if matches!(self.dose_limit, Some(d) if !(d >= 0.0)) {
            return bad("dose_limit must be nonnegative");
        }
        Ok(())
    }
}

fn ids(prefix: char, count: usize) -> Vec<String> {
    let width = count.to_string().len();
    (1..=count).map(|k| format!("{prefix}{k:0width$}")).collect()
}

fn sample(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

/// Draws a complete network (every depot-pickup, pickup-shelter and
/// shelter-pickup arc) with uniformly sampled parameters.
pub fn generate(config: &GeneratorConfig) -> Result<EvacuationInstance<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let depots = ids('D', config.depots);
    let pickups = ids('P', config.pickups);
    let shelters = ids('S', config.shelters);

    let mut demand = BTreeMap::new();
    let mut node_radiation = BTreeMap::new();
    for p in &pickups {
        demand.insert(p.clone(), rng.gen_range(config.demand[0]..=config.demand[1]));
        node_radiation.insert(p.clone(), sample(&mut rng, config.node_radiation));
    }
    let (tlo, thi) = (config.travel_time[0].ceil().max(1.0) as i64, config.travel_time[1].floor() as i64);
    let mut arcs = Vec::new();
    let pairs = depots
        .iter()
        .flat_map(|d| pickups.iter().map(move |p| (d, p)))
        .chain(pickups.iter().flat_map(|p| shelters.iter().map(move |s| (p, s))))
        .chain(shelters.iter().flat_map(|s| pickups.iter().map(move |p| (s, p))));
    for (from, to) in pairs {
        let travel_time = rng.gen_range(tlo..=thi) as f64;
        let radiation = sample(&mut rng, config.arc_radiation);
        arcs.push(ArcData {
            from: from.clone(),
            to: to.clone(),
            travel_time,
            radiation,
        });
    }
    let buses = ids('B', config.buses)
        .into_iter()
        .enumerate()
        .map(|(k, id)| Bus {
            id: id[1..].to_string(),
            depot: depots[k % depots.len()].clone(),
        })
        .collect();

    let total: i64 = demand.values().sum();
    let volume = config.buses as i64 * config.trips as i64 * config.capacity;
    if total > volume {
        return Err(Error::InsufficientVolume { demand: total, volume });
    }
    let inst = EvacuationInstance {
        name: config.name.clone().unwrap_or_else(|| format!("gen-{}", config.seed)),
        depots,
        pickups,
        shelters,
        arcs,
        node_radiation,
        dose_limit: config.dose_limit,
        capacity: config.capacity,
        demand,
        buses,
        trips: config.trips,
    };
    debug_assert!(validate_instance(&inst).is_empty());
    Ok(inst)
}

/// Converts instance data between scalar types through `f64`.
pub fn convert_instance<A: Scalar, B: Scalar>(inst: &EvacuationInstance<A>) -> EvacuationInstance<B> {
    EvacuationInstance {
        name: inst.name.clone(),
        depots: inst.depots.clone(),
        pickups: inst.pickups.clone(),
        shelters: inst.shelters.clone(),
        arcs: inst
            .arcs
            .iter()
            .map(|a| ArcData {
                from: a.from.clone(),
                to: a.to.clone(),
                travel_time: cast(&a.travel_time),
                radiation: cast(&a.radiation),
            })
            .collect(),
        node_radiation: inst.node_radiation.iter().map(|(k, v)| (k.clone(), cast(v))).collect(),
        dose_limit: inst.dose_limit.as_ref().map(cast),
        capacity: inst.capacity,
        demand: inst.demand.clone(),
        buses: inst.buses.clone(),
        trips: inst.trips,
    }
}

pub fn save_instance<S: Scalar + Display>(inst: &EvacuationInstance<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", inst.name);
    out.push_str("NODES\n");
    for d in &inst.depots {
        let _ = writeln!(out, "{d} depot");
    }
    for p in &inst.pickups {
        match inst.node_radiation.get(p) {
            Some(eta) => {
                let _ = writeln!(out, "{p} pickup {eta}");
            }
            None => {
                let _ = writeln!(out, "{p} pickup");
            }
        }
    }
    for s in &inst.shelters {
        let _ = writeln!(out, "{s} shelter");
    }
    out.push_str("ARCS\n");
    for a in &inst.arcs {
        let _ = writeln!(out, "{} {} {} {}", a.from, a.to, a.travel_time, a.radiation);
    }
    out.push_str("PARAMS\n");
    let _ = writeln!(out, "Q {}", inst.capacity);
    let _ = writeln!(out, "T {}", inst.trips);
    match &inst.dose_limit {
        Some(d) => {
            let _ = writeln!(out, "dose_limit {d}");
        }
        None => out.push_str("dose_limit inf\n"),
    }
    out.push_str("DEMAND\n");
    for (p, d) in &inst.demand {
        let _ = writeln!(out, "{p} {d}");
    }
    out.push_str("BUSES\n");
    for b in &inst.buses {
        let _ = writeln!(out, "{} {}", b.id, b.depot);
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Nodes,
    Arcs,
    Params,
    Demand,
    Buses,
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

fn parse_num<T: FromStr>(tok: &str, path: &str) -> Result<T> {
    tok.parse().map_err(|_| schema(path, format!("cannot parse number `{tok}`")))
}

/// Parses a `.evac` document and validates the resulting instance.
pub fn load_instance<S: Scalar + FromStr>(text: &str) -> Result<EvacuationInstance<S>> {
    let mut section = Section::Header;
    let mut name: Option<String> = None;
    let mut depots = Vec::new();
    let mut pickups = Vec::new();
    let mut shelters = Vec::new();
    let mut kinds: HashMap<String, NodeKind> = HashMap::new();
    let mut node_radiation = BTreeMap::new();
    let mut arcs = Vec::new();
    let mut params: HashMap<&'static str, String> = HashMap::new();
    let mut demand = BTreeMap::new();
    let mut buses = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let at = |s: &str| format!("{s}, line {}", k + 1);
        let next = match toks[0] {
            "NODES" => Some(Section::Nodes),
            "ARCS" => Some(Section::Arcs),
            "PARAMS" => Some(Section::Params),
            "DEMAND" => Some(Section::Demand),
            "BUSES" => Some(Section::Buses),
            _ => None,
        };
        if let Some(s) = next {
            if toks.len() != 1 {
                return Err(schema(at(toks[0]), "section keyword must stand alone"));
            }
            section = s;
            continue;
        }
        match section {
            Section::Header => {
                if toks[0] != "NAME" || toks.len() != 2 {
                    return Err(schema(at("NAME"), "expected `NAME <id>` before the first section"));
                }
                name = Some(toks[1].to_string());
            }
            Section::Nodes => {
                let path = at("NODES");
                let (id, kind) = match toks.as_slice() {
                    [id, "depot"] => (*id, NodeKind::Depot),
                    [id, "shelter"] => (*id, NodeKind::Shelter),
                    [id, "pickup", eta] => {
                        node_radiation.insert(id.to_string(), parse_num::<S>(eta, &path)?);
                        (*id, NodeKind::Pickup)
                    }
                    [_, "pickup"] => return Err(schema(path, "pickup needs a waiting radiation rate")),
                    _ => return Err(schema(path, "expected `<id> depot|pickup <eta>|shelter`")),
                };
                match kind {
                    NodeKind::Depot => depots.push(id.to_string()),
                    NodeKind::Pickup => pickups.push(id.to_string()),
                    NodeKind::Shelter => shelters.push(id.to_string()),
                }
                kinds.insert(id.to_string(), kind);
            }
            Section::Arcs => {
                let path = at("ARCS");
                let [from, to, travel, tau] = toks.as_slice() else {
                    return Err(schema(path, "expected `<from> <to> <travel_s> <tau>`"));
                };
                for end in [from, to] {
                    if !kinds.contains_key(*end) {
                        return Err(schema(path, format!("arc references undeclared node `{end}`")));
                    }
                }
                arcs.push(ArcData {
                    from: from.to_string(),
                    to: to.to_string(),
                    travel_time: parse_num(travel, &path)?,
                    radiation: parse_num(tau, &path)?,
                });
            }
            Section::Params => {
                let [key, value] = toks.as_slice() else {
                    return Err(schema(at("PARAMS"), "expected `<key> <value>`"));
                };
                let key = match *key {
                    "Q" => "Q",
                    "T" => "T",
                    "dose_limit" => "dose_limit",
                    other => return Err(schema(at("PARAMS"), format!("unknown parameter `{other}`"))),
                };
                if params.insert(key, value.to_string()).is_some() {
                    return Err(schema(at(&format!("PARAMS.{key}")), "repeated parameter"));
                }
            }
            Section::Demand => {
                let path = at("DEMAND");
                let [node, count] = toks.as_slice() else {
                    return Err(schema(path, "expected `<pickup> <count>`"));
                };
                if !kinds.contains_key(*node) {
                    return Err(schema(path, format!("demand for undeclared node `{node}`")));
                }
                if demand.insert(node.to_string(), parse_num(count, &path)?).is_some() {
                    return Err(schema(path, format!("repeated demand for `{node}`")));
                }
            }
            Section::Buses => {
                let [id, depot] = toks.as_slice() else {
                    return Err(schema(at("BUSES"), "expected `<id> <depot>`"));
                };
                buses.push(Bus {
                    id: id.to_string(),
                    depot: depot.to_string(),
                });
            }
        }
    }

    let param = |key: &str| {
        params
            .get(key)
            .ok_or_else(|| schema(format!("PARAMS.{key}"), "missing required field"))
    };
    let capacity = parse_num(param("Q")?, "PARAMS.Q")?;
    let trips = parse_num(param("T")?, "PARAMS.T")?;
    let dose = param("dose_limit")?;
    let dose_limit = match dose.as_str() {
        "inf" => None,
        d => Some(parse_num(d, "PARAMS.dose_limit")?),
    };
    let inst = EvacuationInstance {
        name: name.ok_or_else(|| schema("NAME", "missing required field"))?,
        depots,
        pickups,
        shelters,
        arcs,
        node_radiation,
        dose_limit,
        capacity,
        demand,
        buses,
        trips,
    };
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::t1;

    #[test]
    fn generated_arc_counts() {
        let cfg = GeneratorConfig {
            pickups: 5,
            shelters: 2,
            buses: 20,
            capacity: 25,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap().arcs.len(), 25);
        let cfg = GeneratorConfig {
            pickups: 6,
            shelters: 3,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap().arcs.len(), 42);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig {
            seed: 7,
            ..Default::default()
        };
        let a = save_instance(&generate(&cfg).unwrap());
        let b = save_instance(&generate(&cfg).unwrap());
        assert_eq!(a, b);
        let other = save_instance(&generate(&GeneratorConfig { seed: 8, ..cfg }).unwrap());
        assert_ne!(a, other);
    }

    #[test]
    fn generated_instances_are_valid() {
        for seed in 0..20 {
            let inst = generate(&GeneratorConfig {
                seed,
                depots: 2,
                pickups: 12,
                ..Default::default()
            });
            match inst {
                Ok(inst) => assert!(validate_instance(&inst).is_empty()),
                Err(Error::InsufficientVolume { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn save_load_fixpoint() {
        let text = save_instance(&t1());
        let back: EvacuationInstance<f64> = load_instance(&text).unwrap();
        assert_eq!(back, t1());
        assert_eq!(save_instance(&back), text);
        let gen = save_instance(&generate(&GeneratorConfig::default()).unwrap());
        assert_eq!(save_instance(&load_instance::<f64>(&gen).unwrap()), gen);
    }

    #[test]
    fn missing_dose_limit_is_named() {
        let text = save_instance(&t1()).replace("dose_limit 50\n", "");
        let err = load_instance::<f64>(&text).unwrap_err();
        assert!(err.to_string().contains("PARAMS.dose_limit"), "{err}");
    }

    #[test]
    fn undeclared_arc_endpoint() {
        let text = save_instance(&t1()).replace("s p 7 0", "s q 7 0");
        let err = load_instance::<f64>(&text).unwrap_err();
        assert!(err.to_string().contains("undeclared node `q`"), "{err}");
    }

    #[test]
    fn unlimited_dose_and_comments() {
        let text = save_instance(&t1()).replace("dose_limit 50", "dose_limit inf   # no bound");
        let inst = load_instance::<f64>(&format!("# header\n{text}")).unwrap();
        assert_eq!(inst.dose_limit, None);
    }

    #[test]
    fn validation_errors_surface() {
        let text = save_instance(&t1()).replace("Q 2", "Q 0");
        assert!(matches!(load_instance::<f64>(&text), Err(Error::InvalidInstance(_))));
    }
}
