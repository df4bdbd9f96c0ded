use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quadest::filters::FilterKind;
use quadest::harness::output::{fmt_f64, write_csv, write_file};
use quadest::harness::{compare, run_comparison, write_comparison, write_outputs, ExperimentConfig};
use quadest::tuner::{tune_filter, CostVariant};
use quadest::{Error, Result};

/// Quadrotor state estimation under wind turbulence.
#[derive(Parser, Debug)]
#[command(name = "quadest", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one scenario and run the selected filters on it.
    Simulate {
        /// Experiment configuration (JSON). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario preset: hover or disturbed.
        #[arg(long)]
        scenario: Option<String>,
        /// Comma-separated filters, e.g. `ekf,ukf,pf`.
        #[arg(long, value_delimiter = ',')]
        filters: Option<Vec<FilterKind>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Step size (s).
        #[arg(long)]
        dt: Option<f64>,
        /// Run length (s).
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tune one filter's noise parameters with the genetic algorithm.
    Tune {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        filter: FilterKind,
        /// Cost function: ls or smooth.
        #[arg(long)]
        cost: CostVariant,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Repeat the experiment over several seeds and tabulate metrics.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: Option<&Path>) -> Result<ExperimentConfig> {
    match config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            scenario,
            filters,
            seed,
            dt,
            duration,
            out,
        } => {
            let mut exp = load(config.as_deref())?;
            if let Some(name) = scenario {
                exp.scenario.apply_preset(&name)?;
            }
            if let Some(f) = filters {
                exp.filters.enabled = f;
            }
            if let Some(s) = seed {
                exp.scenario.seed = s;
            }
            if let Some(dt) = dt {
                exp.scenario.dt = dt;
            }
            if let Some(d) = duration {
                exp.scenario.duration = d;
            }
            let kinds = exp.filters.enabled.clone();
            let (result, metrics) = run_comparison(&exp, &kinds)?;
            write_outputs(&exp, &result, &metrics, &out)?;
            println!("source       rmse_pos(m)    tv(m)          step(s)");
            println!(
                "measurement  {:<14.6e} {:<14.6e} -",
                metrics.measurement.rmse_position,
                metrics.measurement.tv()
            );
            for (kind, m) in &metrics.filters {
                println!("{:<12} {:<14.6e} {:<14.6e} {:.3e}", kind.name(), m.rmse_position, m.tv(), m.step_seconds);
            }
            println!("wrote {}", out.display());
        }
        Command::Tune {
            config,
            filter,
            cost,
            out,
        } => {
            let exp = load(config.as_deref())?;
            let spec = cost.spec(exp.tuning.smooth_weights);
            let res = tune_filter(&exp, filter, spec)?;
            let json = serde_json::to_string_pretty(&res)?;
            write_file(&out.join("tuned.json"), format!("{json}\n").as_bytes())?;
            write_csv(
                &out.join("cost_history.csv"),
                &["generation", "best_cost"],
                res.history.iter().enumerate().map(|(g, c)| vec![g.to_string(), fmt_f64(*c)]),
            )?;
            println!(
                "{filter} {cost}: best {:.6e} (baseline {:.6e}) after {} generations",
                res.best_cost, res.baseline_cost, res.generations
            );
            println!("wrote {}", out.display());
        }
        Command::Compare { config, out } => {
            let exp = load(config.as_deref())?;
            let cmp = compare(&exp)?;
            write_comparison(&exp, &cmp, &out)?;
            for kind in &cmp.filters {
                let beats = cmp.count(|m| m.filter(*kind).is_some_and(|f| f.rmse_position < m.measurement.rmse_position));
                println!("{kind}: beats sensor in {beats}/{} runs", cmp.runs.len());
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(Error::kind(&e), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
