use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;

use f3a_core::harness::token_demand;
use f3a_core::io::report::{demand_csv, read_retention_curves, DemandRow};

use super::CliError;

#[derive(Args)]
pub struct DemandArgs {
    /// Retention-curve table: model,method,rho,accuracy.
    #[arg(long)]
    curves: PathBuf,
    /// Fidelity targets in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.97")]
    tau: Vec<f64>,
}

pub fn run(args: DemandArgs) -> Result<(), CliError> {
    if args.tau.is_empty() {
        return Err(CliError::input("at least one --tau value is required"));
    }
    for &tau in &args.tau {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(CliError::input(format!("tau {tau} outside (0, 1]")));
        }
    }
    let file = File::open(&args.curves)
        .map_err(|e| CliError::input(format!("{}: {e}", args.curves.display())))?;
    let curves = read_retention_curves(BufReader::new(file))?;
    let mut rows = Vec::with_capacity(curves.len() * args.tau.len());
    for curve in &curves {
        for &tau in &args.tau {
            rows.push(DemandRow {
                model: curve.model.clone(),
                method: curve.method.clone(),
                tau,
                retention_percent: token_demand(curve, tau)?,
            });
        }
    }
    print!("{}", demand_csv(&rows));
    Ok(())
}
