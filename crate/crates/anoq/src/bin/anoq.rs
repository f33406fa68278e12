//! Command-line driver: run a scenario, sweep an axis, generate a trace, or
//! verify a trace file against its embedded reference policy.
//!
//! Exit code 0 means every run completed and every runtime invariant held.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anoq::adversary::{
    generate_trace, parse_trace, serialize_trace, trace_content_hash, VerifyOutcome,
};
use anoq::harness::{run_scenario, sweep, sweep_table_to_csv, trace_rng, SweepAxis};
use anoq::metrics::format_sig12;
use anoq::scenario::Scenario;

#[derive(Parser)]
#[command(name = "anoq", about = "Adversarial multi-hop queueing network scheduling testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to the scenario's [output] dir or ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repeatable key=value overrides, e.g. --override scheduler.v=20.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario; writes rounds.csv and manifest.json.
    Run(ScenarioArgs),
    /// Run the scenario once per axis value (crossed with seeds); writes a
    /// summary CSV.
    Sweep {
        #[command(flatten)]
        common: ScenarioArgs,
        /// Axis to vary: V | T | seed | scheduler.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Comma-separated seeds crossed with the values (axis != seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Generate the scenario's adversary trace and certified reference
    /// policy into a trace file.
    GenTrace {
        #[command(flatten)]
        common: ScenarioArgs,
    },
    /// Re-verify a trace file's reference policy; prints accept/reject.
    VerifyTrace {
        /// Trace file produced by gen-trace.
        #[arg(long)]
        trace: PathBuf,
    },
}

fn load_scenario(args: &ScenarioArgs) -> anoq::error::Result<Scenario> {
    let text = std::fs::read_to_string(&args.scenario)?;
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("scenario.seed={seed}"));
    }
    Scenario::from_toml_with_overrides(&text, &overrides)
}

fn out_dir(args: &ScenarioArgs, scn: &Scenario) -> PathBuf {
    args.out
        .clone()
        .or_else(|| scn.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: run finished but invariants or verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anoq::error::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let scn = load_scenario(&args)?;
            let dir = out_dir(&args, &scn);
            std::fs::create_dir_all(&dir)?;
            let out = run_scenario(&scn)?;
            let csv_path = dir.join("rounds.csv");
            std::fs::write(&csv_path, &out.csv)?;
            let manifest_path = dir.join("manifest.json");
            std::fs::write(
                &manifest_path,
                serde_json::to_string_pretty(&out.manifest).expect("manifest serializes") + "\n",
            )?;
            println!(
                "run complete: T={} avg_queue={} {}-> {}",
                out.records.len(),
                format_sig12(out.summary.avg_queue),
                out.summary
                    .avg_utility_gap
                    .map(|g| format!("avg_utility_gap={} ", format_sig12(g)))
                    .unwrap_or_default(),
                csv_path.display()
            );
            Ok(out.summary.invariants_ok)
        }
        Command::Sweep { common, axis, values, seeds } => {
            let scn = load_scenario(&common)?;
            let dir = out_dir(&common, &scn);
            std::fs::create_dir_all(&dir)?;
            let table = sweep(&scn, axis, &values, &seeds)?;
            let csv = sweep_table_to_csv(&table);
            let path = dir.join("sweep_summary.csv");
            std::fs::write(&path, &csv)?;
            println!("sweep complete: {} rows -> {}", table.rows.len(), path.display());
            Ok(table.rows.iter().all(|r| r.summary.invariants_ok))
        }
        Command::GenTrace { common } => {
            let scn = load_scenario(&common)?;
            let dir = out_dir(&common, &scn);
            std::fs::create_dir_all(&dir)?;
            let topo = scn.build_topology()?;
            let params = scn.trace_params()?;
            let mut rng = trace_rng(scn.scenario.seed);
            let (trace, reference) = generate_trace(&topo, &params, scn.scenario.mode, &mut rng)?;
            let text = serialize_trace(&trace, &reference);
            let path = dir.join("trace.anoq");
            std::fs::write(&path, &text)?;
            println!(
                "trace written: rounds={} slack={} hash={} -> {}",
                trace.rounds(),
                format_sig12(reference.slack),
                trace_content_hash(&text),
                path.display()
            );
            Ok(true)
        }
        Command::VerifyTrace { trace } => {
            let text = std::fs::read_to_string(&trace)?;
            let (parsed, reference) = parse_trace(&text)?;
            let outcome =
                anoq::adversary::verify_piecewise_stability(&parsed, &reference, &parsed.topology)?;
            match outcome {
                VerifyOutcome::Accept { slack } => {
                    println!("accept: slack={}", format_sig12(slack));
                    Ok(true)
                }
                VerifyOutcome::Reject { window, server, commodity, deficit } => {
                    println!(
                        "reject: window={} server={} commodity={} deficit={}",
                        window + 1,
                        server + 1,
                        commodity + 1,
                        format_sig12(deficit)
                    );
                    Ok(false)
                }
            }
        }
    }
}
