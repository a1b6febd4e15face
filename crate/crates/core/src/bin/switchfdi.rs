use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use switchfdi::scenario::{plot_trace, Overrides, Scenario, ScenarioError};
use switchfdi::time::TimeValue;
use switchfdi::Priority;

#[derive(Parser)]
#[command(
    name = "switchfdi",
    version,
    about = "Priority switch simulator with delay-bound fault detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    High,
    Mean,
    Low,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write deliveries/faults/decisions CSVs.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        ftc: Option<OnOff>,
        /// Horizon in time units.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Print per-flow delay bounds.
    Bound { file: PathBuf },
    /// List scenario problems; exit 0 when there are none.
    Validate { file: PathBuf },
    /// Scatter plot of one class's delays as SVG.
    Plot {
        trace_dir: PathBuf,
        #[arg(long, value_enum)]
        class: Class,
        #[arg(long)]
        out: PathBuf,
        /// Omit points above this delay, e.g. 80 or "80 tu".
        #[arg(long)]
        cap: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                ScenarioError::Parse(d) => eprintln!("error: {d}"),
                ScenarioError::Invalid(ds) => {
                    for d in ds {
                        eprintln!("error: {d}");
                    }
                }
                ScenarioError::Unstable(list) => {
                    for (flow, err) in list {
                        eprintln!("Unstable: {flow}: {err}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command) -> Result<u8, ScenarioError> {
    match cmd {
        Command::Run {
            file,
            out,
            ftc,
            horizon,
        } => {
            let mut s = Scenario::load(&file)?;
            s.apply(Overrides {
                ftc: ftc.map(|f| matches!(f, OnOff::On)),
                horizon,
            });
            let report = s.run(&out)?;
            print!("{}", report.summary_text());
            Ok(0)
        }
        Command::Bound { file } => {
            print!("{}", Scenario::load(&file)?.bound_report()?);
            Ok(0)
        }
        Command::Validate { file } => {
            let diags = match Scenario::load(&file) {
                Ok(s) => s.validate(),
                Err(ScenarioError::Parse(d)) => vec![d],
                Err(e) => return Err(e),
            };
            for d in &diags {
                println!("{d}");
            }
            Ok(if diags.is_empty() { 0 } else { 2 })
        }
        Command::Plot {
            trace_dir,
            class,
            out,
            cap,
        } => {
            let class = match class {
                Class::High => Priority::HIGH,
                Class::Mean => Priority::MEAN,
                Class::Low => Priority::LOW,
            };
            let cap = cap.map(|raw| raw.parse::<u64>().map(TimeValue::Units).unwrap_or(TimeValue::Text(raw)));
            plot_trace(&trace_dir, class, &out, cap.as_ref())?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}
