use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use djrsp_cli::{run, to_csv, to_json, CliError, RunRequest};

/// Qudit remote state preparation harness: enumerate measurement branches,
/// sample trajectories, sweep parameter grids, and evaluate claims.
#[derive(Debug, Parser)]
#[command(name = "djrsp", version)]
struct Cli {
    /// enumerate | sample | sweep | claims
    mode: String,

    /// Register dimension; inferred from --channel when omitted, validated
    /// against it when given.
    #[arg(long)]
    d: Option<usize>,

    /// Channel coefficients, e.g. "0.6,0.8". Repeat for a sweep grid.
    #[arg(long = "channel", required = true)]
    channels: Vec<String>,

    /// Target magnitudes with optional "@" phase list in radians, e.g.
    /// "0.6,0.8@0,1.0472". Repeat for a sweep grid.
    #[arg(long = "target", required = true)]
    targets: Vec<String>,

    /// Seed for the sample mode generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of samples in sample mode.
    #[arg(long, default_value_t = 1)]
    shots: usize,

    /// Explicit Controlled-U level pairing, e.g. "0:2,1:3"; defaults to the
    /// pairing derived from --shift.
    #[arg(long)]
    pairing: Option<String>,

    /// Protocol shift s.
    #[arg(long, default_value_t = 1)]
    shift: usize,

    /// auto | exact-d2 | general-d
    #[arg(long, default_value = "auto")]
    engine: String,

    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,

    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<String>,

    /// Success-fidelity tolerance override.
    #[arg(long)]
    tol: Option<f64>,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(d) = cli.d {
        for ch in &cli.channels {
            let n = ch.split(',').count();
            if n != d {
                return Err(CliError::Invalid(format!(
                    "--d {d} but channel `{ch}` has {n} coefficients"
                )));
            }
        }
    }
    let out = cli.out;
    let request = RunRequest {
        mode: cli.mode,
        channels: cli.channels,
        targets: cli.targets,
        shift: cli.shift,
        engine: cli.engine,
        pairing: cli.pairing,
        seed: cli.seed,
        shots: cli.shots,
        format: cli.format,
        tol: cli.tol,
    };
    let report = run(&request)?;
    let body = match request.format.as_str() {
        "json" => {
            let mut s = to_json(&report)?;
            s.push('\n');
            s
        }
        "csv" => to_csv(&report),
        other => return Err(CliError::Invalid(format!("unknown format `{other}`"))),
    };
    match out.as_deref() {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Io(e.to_string()))?,
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("djrsp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
