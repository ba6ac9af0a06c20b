//! Command-line front end. Exit status 0 on success, 1 on domain errors,
//! 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mtsr_core::config::{parse_toml, ScenarioConfig};
use mtsr_core::report::ResultDocument;
use mtsr_core::simulator::{average_deltas, ComparisonReport};
use mtsr_core::travel::Policy;

use crate::http::{self, ServiceOptions};
use crate::ops::{self, OpError};

#[derive(Debug, Parser)]
#[command(
    name = "mtsr",
    version,
    about = "Robot warehouse performance model: analytical solver, simulator and planner"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical steady-state solve.
    Solve(CommonArgs),
    /// Discrete-event simulation with replications.
    Simulate(CommonArgs),
    /// Analytical solve plus simulation and relative errors.
    Validate(ValidateArgs),
    /// Travel-time tables for every tote count and workstation.
    Traveltime(CommonArgs),
    /// Minimum robots (and chargers, workers) under the utilization target.
    Optimize(OptimizeArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Write the result document here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Override the retrieval policy (random | cr).
    #[arg(long)]
    pub policy: Option<Policy>,
    /// Override the simulation master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the travel-time sampling seed.
    #[arg(long)]
    pub travel_seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<u32>,
    #[arg(long)]
    pub horizon_hours: Option<f64>,
    /// Record the wall-clock time in the document (breaks byte-for-byte reproducibility).
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sweep one parameter, e.g. `robots:16,18,20` or `buffer:1,2,3,4,5`.
    #[arg(long)]
    pub vary: Option<String>,
    /// Policies to run, e.g. `random,cr`.
    #[arg(long, value_delimiter = ',')]
    pub policies: Vec<Policy>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Total arrival rates in orders/min, e.g. `1,2,3,4,5`.
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub policies: Vec<Policy>,
    /// Also simulate each plan and report relative errors.
    #[arg(long)]
    pub simulate: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address; defaults to $MTSR_LISTEN or 127.0.0.1:8080.
    #[arg(long)]
    pub listen: Option<String>,
    /// Simulation jobs running at once.
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    #[arg(long, default_value_t = 64)]
    pub queue_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    Robots,
    Buffer,
}

pub fn parse_vary(spec: &str) -> Result<(Vary, Vec<u32>), String> {
    let (name, values) = spec.split_once(':').ok_or("expected NAME:V1,V2,...")?;
    let vary = match name {
        "robots" => Vary::Robots,
        "buffer" => Vary::Buffer,
        other => return Err(format!("cannot vary {other:?}; use robots or buffer")),
    };
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((vary, values))
}

fn load(args: &CommonArgs) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut cfg = parse_toml(&text).map_err(|e| format!("{}: {e}", args.config.display()))?;
    if let Some(p) = args.policy {
        cfg.policy.retrieval = p;
    }
    if let Some(s) = args.seed {
        cfg.seeds.simulation = s;
    }
    if let Some(s) = args.travel_seed {
        cfg.seeds.travel = s;
    }
    if let Some(r) = args.replications {
        cfg.simulation.replications = r;
    }
    if let Some(h) = args.horizon_hours {
        cfg.simulation.horizon_h = h;
        cfg.simulation.warmup_h = None;
    }
    cfg.validate()
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    Ok(cfg)
}

fn stamp(mut doc: ResultDocument, on: bool) -> ResultDocument {
    if on {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .ok();
        doc.provenance.generated_at_unix = now;
    }
    doc
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_many(output: &Option<PathBuf>, docs: &[ResultDocument]) -> Result<(), String> {
    if let Some(p) = output {
        let mut s = serde_json::to_string_pretty(docs).expect("documents serialize");
        s.push('\n');
        std::fs::write(p, s).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(())
}

/// Sets the total arrival rate, keeping the class mix.
pub fn with_rate(cfg: &ScenarioConfig, per_min: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    match (
        &mut c.orders.rates_per_min,
        &mut c.orders.total_rate_per_min,
    ) {
        (Some(rates), _) => {
            let total: f64 = rates.iter().sum();
            rates.iter_mut().for_each(|r| *r *= per_min / total);
        }
        (None, Some(t)) => *t = per_min,
        _ => {}
    }
    c
}

fn pct(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |d| format!("{d:.1}"))
}

fn comparison_cells(c: &ComparisonReport, metrics: &[&str]) -> String {
    metrics
        .iter()
        .map(|m| {
            let r = c
                .rows
                .iter()
                .find(|r| r.metric == *m)
                .expect("metric present");
            format!(
                "{:>8.1} {:>8.1} {:>6}",
                r.analytical,
                r.simulated,
                pct(r.delta_pct)
            )
        })
        .collect::<Vec<_>>()
        .join(" |")
}

fn average_line(label_width: usize, reports: &[ComparisonReport], metrics: &[&str]) -> String {
    let avg = average_deltas(reports);
    let cells: Vec<String> = metrics
        .iter()
        .map(|m| {
            let d = avg.iter().find(|(k, _)| k == m).map(|x| x.1);
            format!("{:>8} {:>8} {:>6}", "", "", pct(d))
        })
        .collect();
    format!("{:<label_width$} |{}", "Average", cells.join(" |"))
}

fn validate_cmd(args: &ValidateArgs) -> Result<bool, String> {
    let base = load(&args.common)?;
    let Some(spec) = &args.vary else {
        let doc = match ops::run_validate(&base) {
            Ok(d) => d,
            Err(e @ OpError::Unstable { .. }) => return Err(e.to_string()),
            Err(e) => return Err(e.to_string()),
        };
        emit(
            &args.common.output,
            &stamp(doc, args.common.timestamp).to_json(),
        )?;
        return Ok(true);
    };
    let (vary, values) = parse_vary(spec)?;
    let policies = if args.policies.is_empty() {
        vec![base.policy.retrieval]
    } else {
        args.policies.clone()
    };
    let metrics = ["rho_r", "rho_w", "rho_c", "tht"];
    let label = match vary {
        Vary::Robots => "N_r",
        Vary::Buffer => "C",
    };
    println!(
        "{:<4} {:<7}|{:^25}|{:^25}|{:^25}|{:^25}",
        label,
        "policy",
        "rho_r (%) A S d%",
        "rho_w (%) A S d%",
        "rho_c (%) A S d%",
        "THT (s) A S d%"
    );
    let mut reports = Vec::new();
    let mut docs = Vec::new();
    let mut all_stable = true;
    for &v in &values {
        for &p in &policies {
            let mut cfg = base.clone();
            cfg.policy.retrieval = p;
            match vary {
                Vary::Robots => cfg.robots.count = v,
                Vary::Buffer => cfg.robots.buffer_positions = v,
            }
            match ops::run_validate(&cfg) {
                Ok(doc) => {
                    let c = doc
                        .comparison
                        .clone()
                        .expect("validate fills the comparison");
                    println!(
                        "{:<4} {:<7}|{}",
                        v,
                        p.name(),
                        comparison_cells(&c, &metrics)
                    );
                    reports.push(c);
                    docs.push(stamp(doc, args.common.timestamp));
                }
                Err(e @ OpError::Unstable { .. }) => {
                    all_stable = false;
                    println!("{:<4} {:<7}| {e}", v, p.name());
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    println!("{}", average_line(12, &reports, &metrics));
    emit_many(&args.common.output, &docs)?;
    if !all_stable {
        eprintln!("error: some configurations are unstable");
    }
    Ok(all_stable)
}

fn optimize_cmd(args: &OptimizeArgs) -> Result<bool, String> {
    let base = load(&args.common)?;
    if args.rates.is_empty() && args.policies.is_empty() && !args.simulate {
        let mut docs = ops::run_optimize(&base, &[]).map_err(|e| e.to_string())?;
        emit(
            &args.common.output,
            &stamp(docs.remove(0), args.common.timestamp).to_json(),
        )?;
        return Ok(true);
    }
    let policies = if args.policies.is_empty() {
        vec![base.policy.retrieval]
    } else {
        args.policies.clone()
    };
    let rates = if args.rates.is_empty() {
        vec![base.class_rates().iter().map(|r| r.1).sum::<f64>() * 60.0]
    } else {
        args.rates.clone()
    };
    let metrics = ["tht", "rho_r", "rho_c", "rho_w"];
    if args.simulate {
        println!(
            "{:<6} {:<7} {:>4} {:>4} {:>4} |{:^25}|{:^25}|{:^25}|{:^25}",
            "lambda",
            "policy",
            "N_r",
            "N_c",
            "N_w",
            "THT (s) A S d%",
            "rho_r (%) A S d%",
            "rho_c (%) A S d%",
            "rho_w (%) A S d%"
        );
    } else {
        println!(
            "{:<6} {:<7} {:>4} {:>4} {:>4} | {:>8} {:>8} {:>8} {:>8}",
            "lambda", "policy", "N_r", "N_c", "N_w", "THT (s)", "rho_r", "rho_c", "rho_w"
        );
    }
    let mut docs = Vec::new();
    let mut reports = Vec::new();
    let mut totals: Vec<(Policy, u32)> = Vec::new();
    for &p in &policies {
        let mut cfg = base.clone();
        cfg.policy.retrieval = p;
        let plans = ops::run_optimize(&cfg, &rates).map_err(|e| e.to_string())?;
        totals.push((
            p,
            plans.iter().map(|d| d.plan.as_ref().unwrap().robots).sum(),
        ));
        for (rate, doc) in rates.iter().zip(plans) {
            let plan = doc.plan.as_ref().expect("optimize fills the plan");
            let m = plan.result.metrics.as_ref().expect("plans are stable");
            let workers: u32 = plan.workers.iter().sum();
            let head = format!(
                "{:<6} {:<7} {:>4} {:>4} {:>4}",
                rate,
                p.name(),
                plan.robots,
                plan.chargers,
                workers
            );
            if args.simulate {
                let mut planned = with_rate(&cfg, *rate);
                planned.robots.count = plan.robots;
                planned.layout.charger.chargers = plan.chargers;
                for (w, n) in planned.layout.workstations.iter_mut().zip(&plan.workers) {
                    w.workers = *n;
                }
                let v = ops::run_validate(&planned).map_err(|e| e.to_string())?;
                let c = v.comparison.clone().expect("validate fills the comparison");
                println!("{head} |{}", comparison_cells(&c, &metrics));
                reports.push(c);
            } else {
                println!(
                    "{head} | {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
                    m.tht, m.rho_r, m.rho_c, m.rho_w
                );
            }
            docs.push(stamp(doc, args.common.timestamp));
        }
    }
    if args.simulate {
        println!("{}", average_line(29, &reports, &metrics));
    }
    let random = totals.iter().find(|t| t.0 == Policy::Random).map(|t| t.1);
    let cr = totals
        .iter()
        .find(|t| t.0 == Policy::ClosestRetrieval)
        .map(|t| t.1);
    if let (Some(r), Some(c)) = (random, cr) {
        println!(
            "robots summed over rates: random {r}, cr {c} ({:.1}% fewer with cr)",
            (r as f64 - c as f64) / r as f64 * 100.0
        );
    }
    emit_many(&args.common.output, &docs)?;
    Ok(true)
}

fn listen_address(flag: &Option<String>) -> String {
    flag.clone()
        .or_else(|| std::env::var("MTSR_LISTEN").ok())
        .unwrap_or_else(|| "127.0.0.1:8080".to_string())
}

fn run(cli: Cli) -> Result<bool, String> {
    match &cli.command {
        Command::Solve(a) => {
            let cfg = load(a)?;
            let doc = ops::run_solve(&cfg).map_err(|e| e.to_string())?;
            let unstable = ops::unstable_error(&doc);
            emit(&a.output, &stamp(doc, a.timestamp).to_json())?;
            if let Some(e) = unstable {
                eprintln!("error: {e}");
                return Ok(false);
            }
            Ok(true)
        }
        Command::Simulate(a) => {
            let doc = ops::run_simulate(&load(a)?).map_err(|e| e.to_string())?;
            for w in doc.simulation.iter().flat_map(|s| &s.warnings) {
                eprintln!("warning: {w}");
            }
            emit(&a.output, &stamp(doc, a.timestamp).to_json())?;
            Ok(true)
        }
        Command::Validate(a) => validate_cmd(a),
        Command::Traveltime(a) => {
            let doc = ops::run_traveltime(&load(a)?).map_err(|e| e.to_string())?;
            emit(&a.output, &stamp(doc, a.timestamp).to_json())?;
            Ok(true)
        }
        Command::Optimize(a) => optimize_cmd(a),
        Command::Serve(a) => {
            let addr = listen_address(&a.listen);
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            let opts = ServiceOptions {
                job_workers: a.workers,
                queue_limit: a.queue_limit,
            };
            rt.block_on(http::serve(&addr, opts))
                .map_err(|e| format!("{addr}: {e}"))?;
            Ok(true)
        }
    }
}

pub fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
