use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use treesense::db::TreeDatabase;
use treesense::metrics::diameter_metrics;
use treesense::replay::{replay, ReplayParams};
use treesense::runner::run_scenario;
use treesense::scenario::{Scenario, SearchKind};

#[derive(Parser)]
#[command(
    name = "treesense",
    version,
    about = "Tree detection, mapping and orbit navigation in a simulated forest"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a mission and write its logs to a directory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the search method (narrow or deep).
        #[arg(long)]
        search: Option<SearchKind>,
        /// Overrides the step limit.
        #[arg(long)]
        steps: Option<usize>,
        /// Also write scans.log.
        #[arg(long)]
        record_scans: bool,
    },
    /// Rebuild detections and the tree database from a scan log.
    Replay {
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Take filter, discrimination and gate parameters from this scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Compare a tree database with the ground truth of a scenario.
    Metrics {
        #[arg(long)]
        db: PathBuf,
        /// Scenario file whose world holds the ground truth.
        #[arg(long)]
        world: PathBuf,
        /// Minimum votes for a tree to count; defaults to the scenario's.
        #[arg(long)]
        min_votes: Option<u32>,
        /// Center distance gate for matching; defaults to the scenario's thre_dist.
        #[arg(long)]
        gate: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            search,
            steps,
            record_scans,
        } => {
            let mut sc = Scenario::load(&scenario)?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            if let Some(kind) = search {
                sc.search_kind = kind;
            }
            if let Some(steps) = steps {
                sc.steps = steps;
            }
            sc.record_scans |= record_scans;
            let report = run_scenario(&sc)?;
            report.artifacts.write_to(&out)?;
            let s = &report.summary;
            println!(
                "phase={:?} steps={} time={:.2}s visited={:?} trees={} confirmed={}",
                s.phase, s.steps, s.time, s.visited, s.trees_in_db, s.confirmed_trees
            );
            if let (Some(mean), Some(max)) = (s.mean_diameter_error, s.max_diameter_error) {
                println!("diameter error: mean={mean:.4} m max={max:.4} m");
            }
        }
        Command::Replay { scans, out, scenario } => {
            let params = match scenario {
                Some(path) => {
                    let sc = Scenario::load(&path)?;
                    ReplayParams {
                        filters: sc.filters,
                        discrimination: sc.discrimination,
                        thre_dist: sc.thre_dist,
                    }
                }
                None => ReplayParams::default(),
            };
            let text = std::fs::read_to_string(&scans).with_context(|| format!("reading {}", scans.display()))?;
            let output = replay(&text, &params).with_context(|| format!("parsing {}", scans.display()))?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (name, body) in [
                ("detections.jsonl", output.detections_jsonl.clone()),
                ("db.json", output.db.to_json()),
                ("db.csv", output.db.to_csv()),
            ] {
                let path = out.join(name);
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            }
            println!(
                "scans={} observations={} trees={}",
                output.stats.scans, output.stats.observations, output.stats.trees
            );
        }
        Command::Metrics {
            db,
            world,
            min_votes,
            gate,
        } => {
            let sc = Scenario::load(&world)?;
            let json = std::fs::read_to_string(&db).with_context(|| format!("reading {}", db.display()))?;
            let gate = gate.unwrap_or(sc.thre_dist);
            let database =
                TreeDatabase::from_json(&json, sc.thre_dist).with_context(|| format!("loading {}", db.display()))?;
            let report = diameter_metrics(&database, &sc.world, min_votes.unwrap_or(sc.min_votes), gate);
            print!("{}", report.to_csv());
            match (report.mean_error, report.max_error) {
                (Some(mean), Some(max)) => eprintln!("mean_error={mean:.6} max_error={max:.6}"),
                _ => eprintln!("no matched trees"),
            }
            eprintln!(
                "unmatched_truth={} spurious={}",
                report.unmatched_truth, report.spurious
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
