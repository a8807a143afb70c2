use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dimerlab_core::lab::{self, RunRequest};

#[derive(Parser)]
#[command(name = "dimerlab", version, about = "Dissipative Bose-Hubbard dimer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config file.
    Run {
        /// evolve, spectrum, reduced, pde, collapse, fig1, fig2, fig4 or regimes
        scenario: String,
        config: PathBuf,
        /// Output directory (overrides [output] dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        #[arg(long, default_value = "info")]
        log_level: log::LevelFilter,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { scenario, config, out, plots, log_level } = cli.command;
    env_logger::Builder::new().filter_level(log_level).format_timestamp(None).init();

    let req = RunRequest { scenario, config, out, plots };
    match lab::run(&req) {
        Ok(summary) => {
            for (k, v) in &summary.results {
                println!("{k} = {v:.6e}");
            }
            println!(
                "wrote {} files to {} in {:.2} s",
                summary.files.len(),
                summary.out_dir.display(),
                summary.wall_time
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(lab::exit_code(&e) as u8)
        }
    }
}
