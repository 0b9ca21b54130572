#![allow(dead_code)]

use evac_core::milp::{MilpProblem, Sense, VarType};
use evac_core::model::{ArcData, Bus};
use evac_core::scenario::{generate, GeneratorConfig};
use evac_core::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One depot, one pickup with three evacuees, one shelter, one bus of
/// capacity two and four trips. Optimal cost is 26.
pub fn t1() -> Instance {
    let arc = |a: &str, b: &str, t: f64| ArcData {
        from: a.into(),
        to: b.into(),
        travel_time: t,
        radiation: 0.0,
    };
    Instance {
        name: "T1".into(),
        depots: vec!["d".into()],
        pickups: vec!["p".into()],
        shelters: vec!["s".into()],
        arcs: vec![arc("d", "p", 5.0), arc("p", "s", 7.0), arc("s", "p", 7.0)],
        node_radiation: [("p".to_string(), 0.0)].into(),
        dose_limit: Some(50.0),
        capacity: 2,
        demand: [("p".to_string(), 3)].into(),
        buses: vec![Bus {
            id: "1".into(),
            depot: "d".into(),
        }],
        trips: 4,
    }
}

pub fn add_bus(inst: &Instance) -> Instance {
    let mut out = inst.clone();
    let depot = out.buses[0].depot.clone();
    let id = (1..).map(|k| format!("x{k}")).find(|id| out.buses.iter().all(|b| b.id != *id)).unwrap();
    out.buses.push(Bus { id, depot });
    out.name = format!("{}+bus", inst.name);
    out
}

/// Small random instance within the oracle's reach, or `None` when the
/// draw cannot carry its demand.
pub fn tiny_instance(seed: u64) -> Option<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let dose_limit = match rng.gen_range(0..4) {
        0 => None,
        _ => Some(rng.gen_range(2..=40) as f64 / 4.0),
    };
    let config = GeneratorConfig {
        name: Some(format!("tiny-{seed}")),
        depots: 1,
        pickups: rng.gen_range(1..=2),
        shelters: rng.gen_range(1..=2),
        buses: rng.gen_range(1..=2),
        capacity: rng.gen_range(1..=3),
        trips: rng.gen_range(2..=3),
        demand: [0, 4],
        travel_time: [1.0, 20.0],
        arc_radiation: [0.0, 0.05],
        node_radiation: [0.0, 0.05],
        dose_limit,
        seed,
    };
    generate(&config).ok()
}

pub fn tiny_suite(count: usize) -> Vec<Instance> {
    (0u64..).filter_map(tiny_instance).take(count).collect()
}

/// Random LP with small integer data: box-bounded variables and rows built
/// around an integer point, so it is feasible and bounded.
pub fn random_lp(seed: u64, max_vars: usize, max_rows: usize) -> MilpProblem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut lp = MilpProblem::new(format!("lp{seed}"));
    let mut point = Vec::with_capacity(n);
    for j in 0..n {
        let lo = rng.gen_range(-3..=0) as f64;
        let up = lo + rng.gen_range(1..=6) as f64;
        lp.add_var(format!("x{j}"), lo, up, VarType::Continuous);
        point.push(rng.gen_range(lo as i64..=up as i64) as f64);
    }
    lp.objective = (0..n).map(|j| (j, rng.gen_range(-5..=5) as f64)).collect();
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            let c = rng.gen_range(-4..=4) as f64;
            if c != 0.0 && rng.gen_bool(0.7) {
                coeffs.push((j, c));
            }
        }
        let act: f64 = coeffs.iter().map(|(j, c)| c * point[*j]).sum();
        let (sense, rhs) = match rng.gen_range(0..5) {
            0 => (Sense::Eq, act),
            1 | 2 => (Sense::Le, act + rng.gen_range(0..=3) as f64),
            _ => (Sense::Ge, act - rng.gen_range(0..=3) as f64),
        };
        lp.add_row(format!("r{i}"), sense, coeffs, rhs);
    }
    lp
}

/// Minimum of a bounded LP over all basic solutions, or `None` when no
/// vertex is feasible. Every vertex makes `n` linearly independent
/// constraints tight: some rows plus variables held at a bound.
pub fn vertex_minimum(lp: &MilpProblem<f64>) -> Option<f64> {
    let n = lp.vars.len();
    let m = lp.rows.len();
    let dense: Vec<Vec<f64>> = lp
        .rows
        .iter()
        .map(|r| {
            let mut a = vec![0.0; n];
            for &(j, c) in &r.coeffs {
                a[j] += c;
            }
            a
        })
        .collect();
    let mut c = vec![0.0; n];
    for &(j, v) in &lp.objective {
        c[j] += v;
    }
    let feasible = |x: &[f64]| {
        lp.vars
            .iter()
            .zip(x)
            .all(|(v, &xj)| xj >= v.lower - 1e-9 && xj <= v.upper + 1e-9)
            && lp.rows.iter().all(|r| r.violation(x) <= 1e-9)
    };
    let mut best: Option<f64> = None;
    for rows in 0usize..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| rows >> i & 1 == 1).collect();
        if active.len() > n {
            continue;
        }
        let k = n - active.len();
        for fixed in subsets(n, k) {
            for sides in 0usize..(1 << k) {
                let mut system: Vec<(Vec<f64>, f64)> =
                    active.iter().map(|&i| (dense[i].clone(), lp.rows[i].rhs)).collect();
                for (s, &j) in fixed.iter().enumerate() {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    let v = if sides >> s & 1 == 0 { lp.vars[j].lower } else { lp.vars[j].upper };
                    system.push((e, v));
                }
                if let Some(x) = solve_square(system) {
                    if feasible(&x) {
                        let obj: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                    }
                }
            }
        }
    }
    best
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            if n - j < k - cur.len() {
                break;
            }
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_square(mut sys: Vec<(Vec<f64>, f64)>) -> Option<Vec<f64>> {
    let n = sys.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| sys[a].0[col].abs().total_cmp(&sys[b].0[col].abs()))?;
        if sys[piv].0[col].abs() < 1e-9 {
            return None;
        }
        sys.swap(col, piv);
        let (head, tail) = sys.split_at_mut(col + 1);
        let (prow, prhs) = &head[col];
        for (row, rhs) in tail.iter_mut() {
            let f = row[col] / prow[col];
            if f != 0.0 {
                for k in col..n {
                    row[k] -= f * prow[k];
                }
                *rhs -= f * prhs;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let (row, rhs) = &sys[i];
        let s: f64 = (i + 1..n).map(|k| row[k] * x[k]).sum();
        x[i] = (rhs - s) / row[i];
    }
    Some(x)
}
