use std::process::ExitCode;

use clap::Parser;
use coordfit_cli::args::Cli;
use coordfit_cli::commands;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { coordfit_cli::EXIT_INPUT as u8 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(summary) => {
            if let Some(r) = &summary.result {
                println!(
                    "{}: loss {:e}, psnr {:.2} dB after {} iterations ({})",
                    summary.command, r.final_loss, r.final_psnr, r.iterations, r.termination
                );
            } else {
                println!("{}: done", summary.command);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
