//! Exact MILP reformulation of the bilinear model: loads are written in
//! binary, and each product of a visit time with a load digit is replaced by
//! a bounded continuous variable tied down by linear rows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{ConstraintRecord, EqId, MibpModel};
use crate::milp::{Metadata, MilpProblem, Sense, VarType};
use crate::model::{index_variables, time_upper_bound, VarKind, VarSpace};
use crate::scalar::{cast, LpFloat, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum LinearizationMode {
    /// Full envelope of a binary times a bounded continuous factor.
    #[default]
    #[serde(rename = "exact")]
    Exact,
    /// Only `y - 1 <= w <= U y` and `0 <= w <= U`; does not force the product.
    #[serde(rename = "paper-verbatim")]
    PaperVerbatim,
}

impl fmt::Display for LinearizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearizationMode::Exact => "exact",
            LinearizationMode::PaperVerbatim => "paper-verbatim",
        })
    }
}

impl FromStr for LinearizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(LinearizationMode::Exact),
            "paper-verbatim" => Ok(LinearizationMode::PaperVerbatim),
            other => Err(Error::Config(format!(
                "unknown linearization mode {other:?} (expected exact or paper-verbatim)"
            ))),
        }
    }
}

/// Smallest `B` with `2^B - 1 >= q`.
pub fn bit_width(q: i64) -> Result<usize> {
    if q < 1 {
        return Err(Error::InvalidCapacity(q));
    }
    Ok(64 - (q as u64).leading_zeros() as usize)
}

/// Little-endian binary digits of `k`.
pub fn encode_bits(k: i64, width: usize) -> Result<Vec<u8>> {
    if k < 0 || (width < 63 && k > (1i64 << width) - 1) {
        return Err(Error::BitOutOfRange { value: k, width });
    }
    Ok((0..width).map(|n| ((k >> n) & 1) as u8).collect())
}

pub fn decode_bits(bits: &[u8]) -> i64 {
    bits.iter().enumerate().map(|(n, &b)| (b as i64) << n).sum()
}

/// Local variable slots of a product envelope.
pub const FACTOR: usize = 0;
pub const DIGIT: usize = 1;
pub const PRODUCT: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow<S> {
    pub coeffs: Vec<(usize, S)>,
    pub lower: Option<S>,
    pub upper: Option<S>,
}

impl<S: Scalar> EnvelopeRow<S> {
    fn holds(&self, point: &[S; 3]) -> bool {
        let lhs = self
            .coeffs
            .iter()
            .fold(S::zero(), |acc, (k, c)| acc + c.clone() * point[*k].clone());
        self.lower.as_ref().map_or(true, |l| lhs >= *l) && self.upper.as_ref().map_or(true, |u| lhs <= *u)
    }
}

/// Rows over `(factor, digit, product)` replacing `product = factor * digit`
/// for a factor in `[0, U]` and a binary digit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductEnvelope<S> {
    pub rows: Vec<EnvelopeRow<S>>,
}

impl<S: Scalar> ProductEnvelope<S> {
    pub fn contains(&self, factor: S, digit: S, product: S) -> bool {
        let point = [factor, digit, product];
        self.rows.iter().all(|r| r.holds(&point))
    }
}

pub fn linearize_product<S: Scalar>(upper: S, mode: LinearizationMode) -> Result<ProductEnvelope<S>> {
    if upper <= S::zero() {
        return Err(Error::NonPositiveBound);
    }
    let one = S::one;
    let row = |coeffs: Vec<(usize, S)>, lower: Option<S>, upper: Option<S>| EnvelopeRow { coeffs, lower, upper };
    let rows = match mode {
        LinearizationMode::Exact => vec![
            // w <= U y
            row(vec![(PRODUCT, one()), (DIGIT, -upper.clone())], None, Some(S::zero())),
            // w <= x
            row(vec![(PRODUCT, one()), (FACTOR, -one())], None, Some(S::zero())),
            // w >= x - U (1 - y)
            row(
                vec![(PRODUCT, one()), (FACTOR, -one()), (DIGIT, -upper.clone())],
                Some(-upper.clone()),
                None,
            ),
            // w >= 0
            row(vec![(PRODUCT, one())], Some(S::zero()), None),
        ],
        LinearizationMode::PaperVerbatim => vec![
            // y - 1 <= w
            row(vec![(PRODUCT, one()), (DIGIT, -one())], Some(-one()), None),
            // w <= y U
            row(vec![(PRODUCT, one()), (DIGIT, -upper.clone())], None, Some(S::zero())),
            // 0 <= w <= U
            row(vec![(PRODUCT, one())], Some(S::zero()), Some(upper)),
        ],
    };
    Ok(ProductEnvelope { rows })
}

/// Row name built from a record label: `i=p,m=1,t=2` becomes `p_m1_t2`.
fn row_name(eq: EqId, label: &str) -> String {
    let parts: Vec<String> = label
        .split(',')
        .map(|kv| match kv.split_once('=') {
            Some(("m", v)) => format!("m{v}"),
            Some(("t", v)) => format!("t{v}"),
            Some((_, v)) => v.to_string(),
            None => kv.to_string(),
        })
        .collect();
    format!("eq{}_{}", eq.number(), parts.join("_"))
}

fn push_record<F: LpFloat>(milp: &mut MilpProblem<F>, name: String, coeffs: Vec<(usize, F)>, lower: Option<F>, upper: Option<F>) {
    match (lower, upper) {
        (Some(l), Some(u)) if l == u => {
            milp.add_row(name, Sense::Eq, coeffs, l);
        }
        (Some(l), Some(u)) => {
            milp.add_row(format!("{name}_lo"), Sense::Ge, coeffs.clone(), l);
            milp.add_row(format!("{name}_up"), Sense::Le, coeffs, u);
        }
        (Some(l), None) => {
            milp.add_row(name, Sense::Ge, coeffs, l);
        }
        (None, Some(u)) => {
            milp.add_row(name, Sense::Le, coeffs, u);
        }
        (None, None) => {}
    }
}

fn convert<S: Scalar, F: LpFloat>(v: &S) -> F {
    cast::<S, F>(v)
}

/// Builds the MILP: bilinear dose rows are rewritten over product
/// variables, loads are linked to their digits, every product gets its
/// envelope, and all other records are copied as linear rows. Domain
/// records become variable bounds and integrality.
pub fn linearize_model<S: Scalar, F: LpFloat>(mibp: &MibpModel<S>, mode: LinearizationMode) -> Result<MilpProblem<F>> {
    let net = &mibp.network;
    let bits = bit_width(net.capacity())?;
    let space: VarSpace = index_variables(net, true);
    let plain = &mibp.vars;
    let tbar = time_upper_bound(net);
    let q: F = cast(&net.capacity());

    let mut milp = MilpProblem::new(net.name());
    milp.metadata = Metadata {
        instance_id: Some(net.name().to_string()),
        mode: Some(mode),
    };
    for p in 0..space.len() {
        let key = space.key(p);
        let name = space.name(net, p);
        let (lo, up, kind) = match key.kind {
            VarKind::X | VarKind::Y => (F::zero(), F::one(), VarType::Binary),
            VarKind::T => (F::zero(), convert(&tbar.get(key.subject, key.bus, key.trip)), VarType::Continuous),
            VarKind::B => (F::zero(), q, VarType::Integer),
            VarKind::V => {
                let u = S::from_i64_exact(1 << key.bit) * tbar.get(key.subject, key.bus, key.trip);
                (F::zero(), convert(&u), VarType::Continuous)
            }
        };
        milp.add_var(name, lo, up, kind);
    }
    let lift = |pos: usize| space.position(&plain.key(pos));
    milp.objective = mibp.objective.iter().map(|(p, c)| (lift(*p), convert(c))).collect();

    for rec in &mibp.constraints {
        if matches!(rec.eq, EqId::X_DOMAIN | EqId::B_DOMAIN | EqId::T_DOMAIN) {
            continue;
        }
        let coeffs = record_coeffs(rec, &space, plain);
        push_record(
            &mut milp,
            row_name(rec.eq, &rec.label),
            coeffs,
            rec.lower.as_ref().map(convert),
            rec.upper.as_ref().map(convert),
        );
    }

    for i in net.load_nodes() {
        for m in 0..net.bus_count() {
            for t in 1..=net.trips() {
                let tag = format!("{}_m{}_t{t}", net.node_id(i), net.bus_id(m));
                let mut link = vec![(space.load(i, m, t), F::one())];
                for n in 0..bits {
                    link.push((space.bit(i, m, t, n), -F::lit((1u64 << n) as f64)));
                }
                milp.add_row(format!("link_{tag}"), Sense::Eq, link, F::zero());

                for n in 0..bits {
                    let scale = S::from_i64_exact(1 << n);
                    let upper = scale.clone() * tbar.get(i, m, t);
                    let envelope = linearize_product(upper, mode)?;
                    let slots = [space.time(i, m, t), space.bit(i, m, t, n), space.product(i, m, t, n)];
                    let mut k = 0;
                    for row in &envelope.rows {
                        // Single-variable rows on the product are its bounds.
                        if row.coeffs.len() == 1 && row.coeffs[0].0 == PRODUCT {
                            continue;
                        }
                        let coeffs = row
                            .coeffs
                            .iter()
                            .map(|(slot, c)| {
                                let c = if *slot == FACTOR { c.clone() * scale.clone() } else { c.clone() };
                                (slots[*slot], convert::<S, F>(&c))
                            })
                            .collect();
                        push_record(
                            &mut milp,
                            format!("env{k}_{n}_{tag}"),
                            coeffs,
                            row.lower.as_ref().map(convert),
                            row.upper.as_ref().map(convert),
                        );
                        k += 1;
                    }
                }
            }
        }
    }
    Ok(milp)
}

/// Linear coefficients over the extended space; a bilinear `c * T * b`
/// becomes `c * sum_n v_n` for the load's digit products.
fn record_coeffs<S: Scalar, F: LpFloat>(rec: &ConstraintRecord<S>, space: &VarSpace, plain: &VarSpace) -> Vec<(usize, F)> {
    let mut coeffs: Vec<(usize, F)> = rec
        .linear
        .iter()
        .map(|(p, c)| (space.position(&plain.key(*p)), convert(c)))
        .collect();
    for (_time, load, c) in &rec.bilinear {
        let key = plain.key(*load);
        for n in 0..space.bits() {
            coeffs.push((space.product(key.subject, key.bus, key.trip, n), convert(c)));
        }
    }
    coeffs
}

/// Checks `b = sum 2^n y_n` and `v_n = 2^n T y_n` on a MILP point.
/// Returns the largest absolute residual.
pub fn product_residual<S: Scalar>(mibp: &MibpModel<S>, values: &[f64]) -> f64 {
    let net = &mibp.network;
    let space = index_variables(net, true);
    let mut worst = 0.0f64;
    for i in net.load_nodes() {
        for m in 0..net.bus_count() {
            for t in 1..=net.trips() {
                let time = values[space.time(i, m, t)];
                let mut sum = 0.0;
                for n in 0..space.bits() {
                    let y = values[space.bit(i, m, t, n)];
                    let scale = (1u64 << n) as f64;
                    sum += scale * y;
                    worst = worst.max((values[space.product(i, m, t, n)] - scale * time * y).abs());
                }
                worst = worst.max((values[space.load(i, m, t)] - sum).abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::build_mibp;
    use crate::model::tests::t1;
    use crate::model::Network;
    use proptest::prelude::*;

    #[test]
    fn widths() {
        assert_eq!(bit_width(1).unwrap(), 1);
        assert_eq!(bit_width(30).unwrap(), 5);
        assert_eq!(bit_width(25).unwrap(), 5);
        assert_eq!(bit_width(31).unwrap(), 5);
        assert_eq!(bit_width(32).unwrap(), 6);
        assert!(bit_width(0).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_bits(13, 5).unwrap(), vec![1, 0, 1, 1, 0]);
        assert_eq!(encode_bits(0, 5).unwrap(), vec![0; 5]);
        assert_eq!(decode_bits(&[1, 1, 1, 1, 1]), 31);
        assert!(encode_bits(32, 5).is_err());
        assert!(encode_bits(-1, 5).is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(q in 1i64..5000, k in 0i64..8192) {
            let w = bit_width(q).unwrap();
            prop_assert!((1i64 << w) - 1 >= q);
            prop_assert!(w == 1 || (1i64 << (w - 1)) - 1 < q);
            let k = k % (1i64 << w);
            prop_assert_eq!(decode_bits(&encode_bits(k, w).unwrap()), k);
        }

        #[test]
        fn exact_envelope_is_the_product_on_binaries(u in 0.5f64..1e4, frac in 0.0f64..1.0, y in 0u8..2) {
            let env = linearize_product(u, LinearizationMode::Exact).unwrap();
            let x = u * frac;
            let y = y as f64;
            prop_assert!(env.contains(x, y, x * y));
            // Anything else is cut off.
            prop_assert!(!env.contains(x, y, x * y + 1e-3 * u.max(1.0)));
        }
    }

    #[test]
    fn exact_envelope_examples() {
        let env = linearize_product(10.0, LinearizationMode::Exact).unwrap();
        assert_eq!(env.rows.len(), 4);
        assert!(env.contains(7.0, 1.0, 7.0));
        assert!(!env.contains(7.0, 1.0, 3.0));
        for x in [0.0, 2.5, 10.0] {
            assert!(env.contains(x, 0.0, 0.0));
            assert!(!env.contains(x, 0.0, 0.5));
        }
    }

    #[test]
    fn verbatim_envelope_admits_non_products() {
        let env = linearize_product(10.0, LinearizationMode::PaperVerbatim).unwrap();
        assert!(env.contains(7.0, 1.0, 3.0));
        assert!(env.contains(7.0, 1.0, 7.0));
        assert!(!env.contains(7.0, 0.0, 3.0));
    }

    #[test]
    fn nonpositive_bound_rejected() {
        assert!(matches!(
            linearize_product(0.0, LinearizationMode::Exact),
            Err(Error::NonPositiveBound)
        ));
    }

    #[test]
    fn t1_variable_growth() {
        let net = Network::new(&t1()).unwrap();
        let mibp = build_mibp(&net).unwrap();
        let milp: MilpProblem<f64> = linearize_model(&mibp, LinearizationMode::Exact).unwrap();
        assert_eq!(milp.vars.len() - mibp.vars.len(), 2 * 2 * 2 * 4);
        milp.check_invariants().unwrap();
        let ys = milp.vars.iter().filter(|v| v.name.starts_with('y')).count();
        assert_eq!(ys, 16);
    }

    #[test]
    fn unlimited_dose_drops_only_the_dose_rows() {
        let limited = {
            let net = Network::new(&t1()).unwrap();
            linearize_model::<f64, f64>(&build_mibp(&net).unwrap(), LinearizationMode::Exact).unwrap()
        };
        let mut inst = t1();
        inst.dose_limit = None;
        let net = Network::new(&inst).unwrap();
        let free: MilpProblem<f64> = linearize_model(&build_mibp(&net).unwrap(), LinearizationMode::Exact).unwrap();
        assert_eq!(free.vars, limited.vars);
        let kept: Vec<_> = limited.rows.iter().filter(|r| !r.name.starts_with("eq1_")).cloned().collect();
        assert_eq!(free.rows, kept);
        assert_eq!(limited.rows.len() - kept.len(), 1);
    }

    #[test]
    fn onboard_rows_are_split() {
        let net = Network::new(&t1()).unwrap();
        let milp: MilpProblem<f64> = linearize_model(&build_mibp(&net).unwrap(), LinearizationMode::Exact).unwrap();
        assert!(milp.rows.iter().any(|r| r.name == "eq10_m1_t2_lo" && r.sense == Sense::Ge));
        assert!(milp.rows.iter().any(|r| r.name == "eq10_m1_t2_up" && r.sense == Sense::Le && r.rhs == 2.0));
    }
}
