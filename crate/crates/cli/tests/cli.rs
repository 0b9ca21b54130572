use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const T1: &str = "\
NAME T1
NODES
d depot
p pickup 0
s shelter
ARCS
d p 5 0
p s 7 0
s p 7 0
PARAMS
Q 2
T 4
dose_limit 50
DEMAND
p 3
BUSES
1 d
";

fn evac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evac")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_t1(dir: &TempDir) -> String {
    let path = dir.path().join("t1.evac");
    fs::write(&path, T1).unwrap();
    path.to_str().unwrap().to_string()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn solve_t1_reports_optimum_and_writes_valid_plan() {
    let dir = TempDir::new().unwrap();
    let inst = write_t1(&dir);
    let plan = path(&dir, "plan.txt");
    let mps = path(&dir, "t1.mps");
    let out = evac(&["solve", &inst, "--gap", "0", "--out", &plan, "--mps", &mps]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    let row = text.lines().find(|l| l.starts_with("T1")).unwrap();
    let cells: Vec<&str> = row.split('|').map(str::trim).collect();
    assert_eq!(cells[1], "0 %");
    assert_eq!(cells[3], "26.00");
    assert_eq!(cells[4], "26.00");
    assert!(fs::read_to_string(&mps).unwrap().starts_with("NAME"));

    let check = evac(&["validate", &inst, &plan]);
    assert_eq!(check.status.code(), Some(0), "{check:?}");
}

#[test]
fn tampered_plan_names_the_capacity_rows() {
    let dir = TempDir::new().unwrap();
    let inst = write_t1(&dir);
    let plan = path(&dir, "plan.txt");
    assert_eq!(evac(&["solve", &inst, "--gap", "0", "--out", &plan]).status.code(), Some(0));
    let text = fs::read_to_string(&plan).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("b_p_m1_t1 ") { "b_p_m1_t1 3".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    assert_ne!(tampered.trim(), text.trim());
    let bad = path(&dir, "bad.txt");
    fs::write(&bad, tampered).unwrap();
    let out = evac(&["validate", &inst, &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("EQ10"), "{}", stdout(&out));
}

#[test]
fn zero_time_limit_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let inst = write_t1(&dir);
    let out = evac(&["solve", &inst, "--time-limit", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("time limit") && text.contains("time-limit"), "{text}");
}

#[test]
fn infeasible_instance_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "tight.evac");
    fs::write(&inst, T1.replace("p pickup 0", "p pickup 1").replace("dose_limit 50", "dose_limit 1")).unwrap();
    assert_eq!(evac(&["solve", &inst]).status.code(), Some(2));
    assert_eq!(evac(&["oracle", &inst]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(evac(&["solve"]).status.code(), Some(1));
    assert_eq!(evac(&["solve", "x.evac", "--mode", "fuzzy"]).status.code(), Some(1));
    assert_eq!(evac(&["solve", "/nonexistent/x.evac"]).status.code(), Some(1));
}

#[test]
fn report_cost_matches_route_files() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "gen.evac");
    let cfg = path(&dir, "gen.toml");
    fs::write(&cfg, "pickups = 2\nshelters = 2\nbuses = 2\ncapacity = 3\ntrips = 3\ndemand = [1, 4]\ntravel_time = [1, 30]\n").unwrap();
    assert_eq!(evac(&["generate", "--config", &cfg, "--seed", "6", "--out", &inst]).status.code(), Some(0));
    let plan = path(&dir, "plan.txt");
    let solved = evac(&["solve", &inst, "--gap", "0", "--out", &plan]);
    assert_eq!(solved.status.code(), Some(0), "{solved:?}");
    let table = stdout(&solved);
    let row = table.lines().nth(2).unwrap();
    let cost: f64 = row.split('|').nth(4).unwrap().trim().parse().unwrap();

    let routes = dir.path().join("routes");
    let rep = evac(&["report", &inst, &plan, "--routes-out", routes.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(0), "{rep:?}");
    let mut total = 0.0;
    let mut files = 0;
    for entry in fs::read_dir(&routes).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap().to_str().unwrap().starts_with("bus_") {
            files += 1;
            total += route_time(&p);
        }
    }
    assert_eq!(files, 2);
    assert!((total - cost).abs() < 1e-6, "{total} vs {cost}");
    assert!(routes.join("doses.csv").exists());
}

fn route_time(p: &Path) -> f64 {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[4].parse::<f64>().unwrap() - f[3].parse::<f64>().unwrap()
        })
        .sum()
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.evac");
    let b = path(&dir, "b.evac");
    assert_eq!(evac(&["generate", "--seed", "9", "--out", &a]).status.code(), Some(0));
    assert_eq!(evac(&["generate", "--seed", "9", "--out", &b]).status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let cfg = path(&dir, "bad.toml");
    fs::write(&cfg, "pickupz = 3\n").unwrap();
    assert_eq!(evac(&["generate", "--config", &cfg, "--out", &a]).status.code(), Some(1));
}

#[test]
fn oracle_agrees_on_t1() {
    let dir = TempDir::new().unwrap();
    let inst = write_t1(&dir);
    let out = evac(&["oracle", &inst]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("optimal cost 26"));
}
