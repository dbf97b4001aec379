use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use twistflow::runner::{self, ExitStatus, VerifyLevel};

#[derive(Parser)]
#[command(name = "twistflow", version, about = "Twisted equivariant Ericksen-Leslie simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter grid and aggregate fitted rates into rates.csv.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
    /// Fit an exponential rate to one column of a time series.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "sigma")]
        column: String,
        /// `t0:t1`
        #[arg(long)]
        window: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

fn execute(cli: Cli) -> anyhow::Result<ExitStatus> {
    match cli.command {
        Command::Run { config, out } => {
            let o = runner::run_command(&config, &out)?;
            let t = &o.trajectory;
            println!("status: {:?}", t.status);
            println!("records: {}  steps: {} accepted, {} rejected", t.records.len(), t.accepted_steps, t.rejected_steps);
            if let Some(f) = o.fit {
                let p = t.params.predicted_rate();
                println!("sigma rate: {:.6} (predicted {:.6}, rel err {:.3e})", f.rate, p, (f.rate / p - 1.0).abs());
            }
            println!("outputs in {}", out.display());
            Ok(o.exit_status())
        }
        Command::Sweep { spec, out, parallel } => {
            let o = runner::sweep_command(&spec, &out, parallel)?;
            println!("{:>3} {:>6} {:>12} {:>12} {:>10}  status", "m", "mu", "predicted", "fitted", "rel_err");
            for r in &o.rows {
                println!(
                    "{:>3} {:>6} {:>12.6} {:>12.6} {:>10.3e}  {}",
                    r.m, r.mu, r.predicted_rate, r.fitted_rate, r.rel_err, r.status
                );
            }
            Ok(o.exit)
        }
        Command::Verify { level } => {
            let level = match level {
                Level::Quick => VerifyLevel::Quick,
                Level::Full => VerifyLevel::Full,
            };
            let rep = runner::verify(level);
            print!("{rep}");
            Ok(if rep.all_pass() { ExitStatus::Success } else { ExitStatus::Error })
        }
        Command::Fit { input, column, window } => {
            let f = runner::fit_command(&input, &column, runner::parse_window(&window)?)?;
            println!("rate {:.10e}", f.rate);
            println!("intercept {:.10e}", f.intercept);
            println!("r_squared {:.10}", f.r_squared);
            println!("samples {}", f.samples);
            Ok(ExitStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(s) => ExitCode::from(s.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ExitStatus::Error.code() as u8)
        }
    }
}
