use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use log::LevelFilter;

use evac_core::bnb::{BnbConfig, Termination};
use evac_core::formulation::{build_mibp, check_plan, summarize, PlanSummary, DEFAULT_TOLERANCE};
use evac_core::mps::export_mps;
use evac_core::oracle::{brute_force_oracle, OracleOutcome};
use evac_core::pipeline::{build_milp, solve_instance, EvacuationOutcome, SolveOptions};
use evac_core::planfile::{read_plan, write_plan};
use evac_core::scenario::{generate, load_instance, save_instance, GeneratorConfig};
use evac_core::{Error, Instance, LinearizationMode, MibpModel, Network};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NO_INCUMBENT: u8 = 3;

#[derive(Parser)]
#[command(name = "evac", version, about = "Bus evacuation planning under radiation-dose limits")]
struct Cli {
    /// More log output; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance.
    Generate {
        /// TOML generator settings; unset keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the MILP for an instance and solve it.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: LinearizationMode,
        /// Relative gap at which to stop.
        #[arg(long, default_value_t = 1e-4)]
        gap: f64,
        /// Seconds.
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plan file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export the MILP in MPS format.
        #[arg(long)]
        mps: Option<PathBuf>,
    },
    /// Check a plan against the bilinear model.
    Validate { file: PathBuf, plan: PathBuf },
    /// Write per-bus routes and the dose table of a plan.
    Report {
        file: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        routes_out: PathBuf,
    },
    /// Exhaustive search; tiny instances only.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = matches!(e.downcast_ref::<Error>(), Some(Error::InsufficientVolume { .. }));
            ExitCode::from(if infeasible { EXIT_INFEASIBLE } else { EXIT_USAGE })
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Generate { config, seed, out } => cmd_generate(config.as_deref(), seed, &out),
        Command::Solve {
            file,
            mode,
            gap,
            time_limit,
            workers,
            seed,
            out,
            mps,
        } => {
            if !(gap >= 0.0) || !(time_limit >= 0.0) || workers == 0 {
                bail!("--gap and --time-limit must be nonnegative and --workers at least 1");
            }
            let options = SolveOptions {
                mode,
                bnb: BnbConfig {
                    gap_tol: gap,
                    time_limit_s: time_limit,
                    workers,
                    seed,
                    ..Default::default()
                },
            };
            cmd_solve(&file, &options, out.as_deref(), mps.as_deref())
        }
        Command::Validate { file, plan } => cmd_validate(&file, &plan),
        Command::Report { file, plan, routes_out } => cmd_report(&file, &plan, &routes_out),
        Command::Oracle { file, out } => cmd_oracle(&file, out.as_deref()),
    }
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_instance(&text).with_context(|| format!("loading {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_generate(config: Option<&Path>, seed: Option<u64>, out: &Path) -> anyhow::Result<u8> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<GeneratorConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let inst = generate(&cfg)?;
    write_file(out, &save_instance(&inst))?;
    println!(
        "wrote {} ({} pickups, {} shelters, {} buses, {} evacuees)",
        out.display(),
        inst.pickups.len(),
        inst.shelters.len(),
        inst.buses.len(),
        inst.demand.values().sum::<i64>()
    );
    Ok(0)
}

fn result_table(rows: &[[String; 5]]) -> String {
    let header = ["Instance", "Optimality Gap", "Elapsed Time (s)", "T_evac", "Cost"];
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: [&str; 5]| {
        let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
    };
    line(header);
    let rule = widths.map(|w| "-".repeat(w));
    line([&rule[0], &rule[1], &rule[2], &rule[3], &rule[4]]);
    for row in rows {
        line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}

fn cmd_solve(file: &Path, options: &SolveOptions, out: Option<&Path>, mps: Option<&Path>) -> anyhow::Result<u8> {
    let inst = read_instance(file)?;
    if let Some(path) = mps {
        let (_, milp) = build_milp::<f64, f64>(&inst, options.mode)?;
        let export = export_mps(&milp)?;
        write_file(path, &export.text)?;
        log::info!("MPS written with {} shortened names", export.renamed.len());
    }
    let outcome: EvacuationOutcome<f64, f64> = solve_instance(&inst, options)?;
    let stats = outcome.stats();
    let elapsed = if stats.termination == Termination::TimeLimit {
        "time limit".to_string()
    } else {
        format!("{:.2}", stats.wall_seconds)
    };
    let (t_evac, cost) = match &outcome.summary {
        Some(s) => (format!("{:.2}", s.t_evac), format!("{:.2}", s.cost)),
        None => ("-".into(), "-".into()),
    };
    print!(
        "{}",
        result_table(&[[inst.name.clone(), stats.gap_label(), elapsed, t_evac, cost]])
    );
    println!(
        "termination: {}, {} nodes, {} LP iterations",
        stats.termination, stats.nodes, stats.lp_iterations
    );
    if let (Some(path), Some(plan)) = (out, &outcome.plan) {
        write_file(path, &write_plan(&outcome.model, plan, options.mode))?;
        println!("plan written to {}", path.display());
    }
    Ok(match (stats.termination, &outcome.plan) {
        (Termination::Infeasible, _) => {
            eprintln!("instance is infeasible");
            EXIT_INFEASIBLE
        }
        (Termination::Unbounded, _) => {
            eprintln!("MILP relaxation is unbounded");
            EXIT_USAGE
        }
        (_, None) => {
            eprintln!("stopped ({}) without an incumbent", stats.termination);
            EXIT_NO_INCUMBENT
        }
        _ => 0,
    })
}

fn load_model(file: &Path) -> anyhow::Result<MibpModel<f64>> {
    let inst = read_instance(file)?;
    Ok(build_mibp(&Network::new(&inst)?)?)
}

fn cmd_validate(file: &Path, plan_path: &Path) -> anyhow::Result<u8> {
    let model = load_model(file)?;
    let text = fs::read_to_string(plan_path).with_context(|| format!("reading {}", plan_path.display()))?;
    let (_, plan) = read_plan(&model, &text)?;
    let report = check_plan(&model, &plan, DEFAULT_TOLERANCE)?;
    if report.is_feasible() {
        println!("feasible: all {} constraints hold", model.constraints.len());
        return Ok(0);
    }
    for v in &report.violations {
        println!("violated {v}");
    }
    println!("infeasible: {} violated constraints", report.violations.len());
    Ok(EXIT_INFEASIBLE)
}

fn routes_csv(model: &MibpModel<f64>, summary: &PlanSummary<f64>, bus: usize) -> String {
    let net = &model.network;
    let mut out = String::from("trip,from,to,depart,arrive,onboard_before,onboard_after\n");
    for leg in &summary.routes[bus].legs {
        let (from, to) = match leg.arc {
            Some(a) => {
                let (i, j) = net.arc(a);
                (net.node_id(i), net.node_id(j))
            }
            None => ("", ""),
        };
        let _ = writeln!(
            out,
            "{},{from},{to},{},{},{},{}",
            leg.trip, leg.depart, leg.arrive, leg.onboard_before, leg.onboard_after
        );
    }
    out
}

fn cmd_report(file: &Path, plan_path: &Path, dir: &Path) -> anyhow::Result<u8> {
    let model = load_model(file)?;
    let text = fs::read_to_string(plan_path).with_context(|| format!("reading {}", plan_path.display()))?;
    let (_, plan) = read_plan(&model, &text)?;
    let summary = summarize(&model, &plan)?;
    let net = &model.network;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for m in 0..net.bus_count() {
        let path = dir.join(format!("bus_{}.csv", net.bus_id(m)));
        write_file(&path, &routes_csv(&model, &summary, m))?;
    }
    let limit = net.dose_limit().map_or("inf".to_string(), ToString::to_string);
    let mut doses = String::from("pickup,bus,dose,limit\n");
    for d in &summary.doses {
        let _ = writeln!(doses, "{},{},{},{limit}", net.node_id(d.pickup), net.bus_id(d.bus), d.dose);
    }
    write_file(&dir.join("doses.csv"), &doses)?;
    println!(
        "{} route files and doses.csv written to {}; cost {:.2}, T_evac {:.2}",
        net.bus_count(),
        dir.display(),
        summary.cost,
        summary.t_evac
    );
    Ok(0)
}

fn cmd_oracle(file: &Path, out: Option<&Path>) -> anyhow::Result<u8> {
    let inst = read_instance(file)?;
    match brute_force_oracle(&inst)? {
        OracleOutcome::Optimal { objective, plan } => {
            println!("optimal cost {objective}");
            if let Some(path) = out {
                let model = build_mibp(&Network::new(&inst)?)?;
                write_file(path, &write_plan(&model, &plan, LinearizationMode::Exact))?;
                println!("plan written to {}", path.display());
            }
            Ok(0)
        }
        OracleOutcome::Infeasible => {
            println!("infeasible");
            Ok(EXIT_INFEASIBLE)
        }
    }
}
