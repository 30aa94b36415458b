use std::process::ExitCode;

use clap::Parser;
use drs::cli::{Cli, Command};
use drs::commands::{self, RunReport};
use drs::CliError;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.3}"))
}

fn print_run(r: &RunReport) {
    println!(
        "{} steps, {} episodes, mean episode reward {}, mean RIS path loss {} dB, {} violations",
        r.steps,
        r.episodes,
        opt(r.mean_cumulative_reward),
        opt(r.mean_ris_pl_db),
        r.violations
    );
    println!("manifest: {}", r.manifest.display());
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => print_run(&commands::train(&a.common)?),
        Command::Eval(a) => print_run(&commands::eval(&a)?),
        Command::Surface(a) => {
            let r = commands::surface(&a)?;
            println!(
                "path loss {:.2}..{:.2} dB (far-field range {:.2} dB), minimum at cell {:?}",
                r.min_db, r.max_db, r.range_db, r.argmin
            );
            println!("surface: {}", r.csv.display());
        }
        Command::Sweep(a) => {
            let r = commands::sweep(&a)?;
            println!("{} replicas ok", r.rows.len());
            println!("summary: {}", r.summary.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
