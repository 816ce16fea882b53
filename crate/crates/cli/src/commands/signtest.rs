use clap::Args;

use f3a_core::harness::sign_test;

use super::CliError;

#[derive(Args)]
pub struct SignTestArgs {
    /// Number of won comparisons.
    #[arg(long)]
    wins: u64,
    /// Total paired comparisons.
    #[arg(long)]
    trials: u64,
}

fn format_p(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.4e}")
    } else {
        let fixed = format!("{p:.4}");
        let trimmed = fixed.trim_end_matches('0');
        if trimmed.ends_with('.') {
            format!("{trimmed}0")
        } else {
            trimmed.to_string()
        }
    }
}

pub fn run(args: SignTestArgs) -> Result<(), CliError> {
    if args.trials == 0 || args.wins > args.trials {
        return Err(CliError::input(format!(
            "need 0 <= wins <= trials with trials >= 1, got wins {} trials {}",
            args.wins, args.trials
        )));
    }
    let p = sign_test(args.wins, args.trials)?;
    println!("{}", format_p(p));
    Ok(())
}
