//! Plain-text plan files: a short header followed by `name value` lines for
//! every nonzero arc, time and load variable.

use std::collections::HashMap;
use std::fmt::{Display, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formulation::{EvacuationPlan, MibpModel};
use crate::linearize::LinearizationMode;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanHeader {
    pub instance: String,
    pub mode: LinearizationMode,
}

pub fn write_plan<S: Scalar + Display>(model: &MibpModel<S>, plan: &EvacuationPlan<S>, mode: LinearizationMode) -> String {
    let net = &model.network;
    let mut out = String::from("# evacuation plan\n");
    let _ = writeln!(out, "instance {}", net.name());
    let _ = writeln!(out, "mode {mode}");
    for (p, v) in plan.values.iter().enumerate() {
        if !v.is_zero() {
            let _ = writeln!(out, "{} {}", model.vars.name(net, p), v);
        }
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::PlanFile { line, msg: msg.into() }
}

/// Reads a plan for `model`; the header must name the model's instance.
pub fn read_plan<S: Scalar + FromStr>(model: &MibpModel<S>, text: &str) -> Result<(PlanHeader, EvacuationPlan<S>)> {
    let net = &model.network;
    let index: HashMap<String, usize> = (0..model.vars.len()).map(|p| (model.vars.name(net, p), p)).collect();
    let mut plan = EvacuationPlan::zeros(&model.vars);
    let mut seen = vec![false; model.vars.len()];
    let mut instance = None;
    let mut mode = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let n = k + 1;
        let [key, value] = line.split_whitespace().collect::<Vec<_>>()[..] else {
            return Err(err(n, "expected `<name> <value>`"));
        };
        match key {
            "instance" => instance = Some(value.to_string()),
            "mode" => mode = Some(value.parse::<LinearizationMode>().map_err(|e| err(n, e.to_string()))?),
            name => {
                let &p = index.get(name).ok_or_else(|| err(n, format!("unknown variable `{name}`")))?;
                if std::mem::replace(&mut seen[p], true) {
                    return Err(err(n, format!("variable `{name}` given twice")));
                }
                plan.values[p] = value
                    .parse()
                    .map_err(|_| err(n, format!("cannot parse value `{value}`")))?;
            }
        }
    }
    let instance = instance.ok_or_else(|| err(0, "missing `instance` header"))?;
    if instance != net.name() {
        return Err(err(0, format!("plan is for instance `{instance}`, not `{}`", net.name())));
    }
    let mode = mode.ok_or_else(|| err(0, "missing `mode` header"))?;
    Ok((PlanHeader { instance, mode }, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::build_mibp;
    use crate::model::tests::t1;
    use crate::model::Network;

    #[test]
    fn roundtrip() {
        let model = build_mibp(&Network::new(&t1()).unwrap()).unwrap();
        let mut plan = EvacuationPlan::zeros(&model.vars);
        plan.values[model.vars.x(0, 0, 1)] = 1.0;
        plan.values[model.vars.time(1, 0, 2)] = 5.5;
        let text = write_plan(&model, &plan, LinearizationMode::Exact);
        assert!(text.contains("instance T1\nmode exact\nx_d_p_m1_t1 1\n"), "{text}");
        let (header, back) = read_plan::<f64>(&model, &text).unwrap();
        assert_eq!(header.mode, LinearizationMode::Exact);
        assert_eq!(back, plan);
        assert_eq!(write_plan(&model, &back, header.mode), text);
    }

    #[test]
    fn rejects_bad_lines() {
        let model = build_mibp(&Network::new(&t1()).unwrap()).unwrap();
        let base = "instance T1\nmode exact\n";
        assert!(read_plan::<f64>(&model, &format!("{base}zz 1\n")).is_err());
        assert!(read_plan::<f64>(&model, &format!("{base}x_d_p_m1_t1 one\n")).is_err());
        assert!(read_plan::<f64>(&model, "instance other\nmode exact\n").is_err());
        assert!(read_plan::<f64>(&model, "mode exact\n").is_err());
    }
}
