use std::process::ExitCode;

use clap::Parser;

use ritzlab::cli::{resolve, Cli, Command};
use ritzlab::error::Result;
use ritzlab::experiments::{
    run_check_gradients, run_delta_demo, run_fd_vs_ad, run_init_at_solution, run_landscape,
    run_provocation, run_regress, run_relu2_fix,
};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let (cfg, warnings) = resolve(cli)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("running {} -> {}", cfg.name, cfg.out_dir.display());

    let lines = match &cli.command {
        Command::Provocation(_) | Command::ProvocationHf(_) => {
            run_provocation(&cfg)?.summary_lines()
        }
        Command::DeltaDemo(_) => run_delta_demo(&cfg)?.summary_lines(),
        Command::Relu2Fix(_) => run_relu2_fix(&cfg)?.summary_lines(),
        Command::InitAtSolution(_) => run_init_at_solution(&cfg)?.summary_lines(),
        Command::FdVsAd(_) => run_fd_vs_ad(&cfg)?.summary_lines(),
        Command::Landscape(_) => run_landscape(&cfg)?.summary_lines(),
        Command::Regress(_) => run_regress(&cfg)?.summary_lines(),
        Command::CheckGradients(_) => {
            let report = run_check_gradients(&cfg)?;
            for line in report.summary_lines() {
                println!("{line}");
            }
            return Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
    };
    for line in lines {
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}
