use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fourier_moments_cli::{run, CliError, Format, Output, Task, TaskConfig};

/// Moments, metrics and heat-equation checks computed from characteristic functions.
#[derive(Parser)]
#[command(name = "fmoments", version)]
struct Args {
    /// Task to run; overrides `task` in the config.
    #[arg(value_enum)]
    task: Task,
    /// JSON task config; `-` reads stdin.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn load(args: &Args) -> Result<TaskConfig, CliError> {
    let mut cfg = match args.config.as_deref() {
        None => TaskConfig::default(),
        Some(p) if p.as_os_str() == "-" => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| CliError::Io(e.to_string()))?;
            TaskConfig::from_json(&s, "<stdin>")?
        }
        Some(p) => TaskConfig::load(p)?,
    };
    cfg.task = Some(args.task);
    cfg.seed = args.seed.or(cfg.seed);
    cfg.tol = args.tol.or(cfg.tol);
    cfg.out = args.out.clone().or(cfg.out);
    cfg.format = args.format.or(cfg.format);
    Ok(cfg)
}

fn emit(cfg: &TaskConfig, out: &Output) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(
            File::create(p).map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    let format = cfg.format.unwrap_or_default();
    match (out, format) {
        (Output::Samples(s, _), Format::Csv) => s.write_csv(&mut sink)?,
        _ => out.report().write(&mut sink, format)?,
    }
    sink.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load(&args).and_then(|cfg| {
        let out = run(&cfg)?;
        emit(&cfg, &out)?;
        match out.failures() {
            0 => Ok(()),
            n => Err(CliError::Verify(n)),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
