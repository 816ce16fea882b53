use std::path::PathBuf;

use clap::Args;

use f3a_core::harness::{run_battery, run_sweeps, summarize, BatteryConfig};
use f3a_core::io::report::{metrics_csv, summary_csv, sweeps_csv};

use super::{read_input, write_output, CliError};

#[derive(Args)]
pub struct BenchArgs {
    /// Battery configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the emitted CSV/JSON reports.
    #[arg(long, default_value = "bench_out")]
    out_dir: PathBuf,
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let config: BatteryConfig = match &args.config {
        Some(path) => serde_json::from_str(&read_input(path)?)
            .map_err(|e| CliError::input(format!("config: {e}")))?,
        None => BatteryConfig::default(),
    };
    config
        .validate()
        .map_err(|e| CliError::input(e.to_string()))?;

    let report = run_battery(&config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_output(&args.out_dir.join("metrics.csv"), &metrics_csv(&report))?;
    let summary = summarize(&report);
    write_output(&args.out_dir.join("summary.csv"), &summary_csv(&summary))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::input(format!("report serialization: {e}")))?;
    write_output(&args.out_dir.join("metrics.json"), &json)?;
    println!(
        "battery: {} rows over {} summary cells -> {}",
        report.rows.len(),
        summary.len(),
        args.out_dir.display()
    );

    if config.sweeps {
        let rows = run_sweeps(&config)?;
        write_output(&args.out_dir.join("sweeps.csv"), &sweeps_csv(&rows))?;
        for row in &rows {
            println!(
                "sweep {:>13} = {:>7}: mean recall {:.4} (delta {:+.4})",
                row.group, row.setting, row.mean_recall, row.delta
            );
        }
    }
    Ok(())
}
