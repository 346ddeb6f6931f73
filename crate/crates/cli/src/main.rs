use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opinion_games::oracle::{asymptotic_consensus, integrate_means, MeanSystemParams};
use opinion_games::output::{write_density_table, write_run, write_timeseries};
use opinion_games::scenario::PRESET_NAMES;
use opinion_games::stationary::{effective_follower_variance, normalize, tabulate};
use opinion_games::{load_scenario, preset, Error, Scenario, Simulation};

#[derive(Parser)]
#[command(
    name = "opgame",
    version,
    about = "Monte Carlo simulation of leader-follower opinion games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write moments, histograms and grids.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        exec: Exec,
        /// Output directory (defaults to the scenario's `output_dir`, then `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario against every constraint without running it.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Inspect the built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Run a scenario and report the sup-norm gap between the Monte Carlo
    /// follower mean and the mean-field prediction.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        exec: Exec,
        /// Directory for `timeseries.csv` and `oracle.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a normalized stationary density.
    Stationary {
        /// Center of the density; defaults to the scenario's consensus value.
        #[arg(long)]
        center: Option<f64>,
        /// Variance parameter; defaults to the scenario's follower variance.
        #[arg(long)]
        variance: Option<f64>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as a scenario file.
    Show { name: String },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct Exec {
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output is identical for every count.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the number of followers.
    #[arg(long)]
    followers: Option<usize>,
}

fn resolve(scenario: Option<&Path>, name: Option<&str>) -> Result<Scenario, Error> {
    let s = match (scenario, name) {
        (Some(path), _) => load_scenario(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(Error::Config {
                field: "scenario".into(),
                constraint: "give --scenario or --preset".into(),
            })
        }
    };
    s.validate()?;
    Ok(s)
}

fn prepare(source: &Source, exec: &Exec) -> Result<Scenario, Error> {
    let mut s = resolve(source.scenario.as_deref(), source.preset.as_deref())?;
    if let Some(seed) = exec.seed {
        s.seed = seed;
    }
    if let Some(n) = exec.followers {
        s.followers = n;
    }
    s.validate()?;
    Ok(s)
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { source, exec, out } => {
            let s = prepare(&source, &exec)?;
            let dir = out
                .or_else(|| s.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let record = Simulation::new(&s)?.with_threads(exec.threads)?.run()?;
            let files = write_run(&record, &s, &dir)?;
            let last = record.moments.last().expect("at least the initial state");
            println!(
                "{}: {} steps, final m_F = {:.6}",
                s.name,
                record.moments.len() - 1,
                last.m_f
            );
            println!("wrote {} files to {}", files.len(), dir.display());
        }
        Command::Validate { source } => {
            let s = resolve(source.scenario.as_deref(), source.preset.as_deref())?;
            println!(
                "ok: {} ({} leader groups, {} steps)",
                s.name,
                s.leaders.len(),
                s.steps()
            );
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in PRESET_NAMES {
                    println!("{name}");
                }
            }
            PresetAction::Show { name } => print!("{}", preset(&name)?.to_toml_string()),
        },
        Command::Compare { source, exec, out } => {
            let s = prepare(&source, &exec)?;
            let params = MeanSystemParams::from_scenario(&s)?;
            let record = Simulation::new(&s)?.with_threads(exec.threads)?.run()?;
            let start = &record.moments[0];
            let oracle = integrate_means(start.m_f, &start.m_l, &params, s.horizon, s.epsilon, 10);
            let gap = record
                .moments
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a.m_f - b.m_f).abs())
                .fold(0.0, f64::max);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                write_timeseries(&record.moments, &dir.join("timeseries.csv"))?;
                write_timeseries(&oracle, &dir.join("oracle.csv"))?;
            }
            println!("sup |m_F(MC) - m_F(oracle)| = {gap:.6e}");
            let end = oracle.last().expect("non-empty trajectory");
            println!(
                "oracle final m_F = {:.6}, Monte Carlo final m_F = {:.6}",
                end.m_f,
                record.moments.last().unwrap().m_f
            );
        }
        Command::Stationary {
            center,
            variance,
            scenario,
            preset: name,
            points,
            out,
        } => {
            let from = if scenario.is_some() || name.is_some() {
                Some(resolve(scenario.as_deref(), name.as_deref())?)
            } else {
                None
            };
            let center = match (center, &from) {
                (Some(c), _) => c,
                (None, Some(s)) => asymptotic_consensus(&s.strategies())?,
                (None, None) => return Err(missing("center")),
            };
            let variance = match (variance, &from) {
                (Some(v), _) => v,
                (None, Some(s)) => {
                    let leaders: Vec<(f64, f64)> = s
                        .leaders
                        .iter()
                        .map(|l| (l.c_fl, l.follower_noise_std.powi(2)))
                        .collect();
                    effective_follower_variance(s.follower.noise_std.powi(2), &leaders)
                }
                (None, None) => return Err(missing("variance")),
            };
            let density = normalize(center, variance)?;
            write_density_table(&tabulate(&density, points), &out)?;
            println!(
                "center = {center}, variance = {variance:e}, ln gamma = {:.12}",
                density.log_gamma
            );
        }
    }
    Ok(())
}

fn missing(field: &str) -> Error {
    Error::Config {
        field: field.into(),
        constraint: "give it explicitly or through --scenario/--preset".into(),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 3,
        "parse" => 4,
        "io" => 5,
        "invariant" => 6,
        "numerics" => 7,
        _ => 8,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
