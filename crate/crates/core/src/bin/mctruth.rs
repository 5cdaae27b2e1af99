use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use mctruth::config::{parse_config, Format};
use mctruth::report::{execute, Command};
use mctruth::Error;

/// Compute true estimand values for simulation studies by Monte Carlo integration.
#[derive(Debug, Parser)]
#[command(name = "mctruth", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Report destination; stdout when absent and the config names none.
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Worker threads. Affects speed only, never results.
    #[arg(long)]
    threads: Option<usize>,

    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

const THREADS_ENV: &str = "MCTRUTH_THREADS";

fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Error> {
    let threads = cli.threads.or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok());
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Error::domain(format!("cannot start thread pool: {e}")))?;
    }

    let mut cfg = parse_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed.master_seed = seed;
    }
    let report = execute(cli.command, &cfg)?;
    let format = cli.format.or(cfg.output.format).unwrap_or(Format::Json);
    let text = report.render(format)?;
    match cli.output.or_else(|| cfg.output.path.clone()) {
        Some(path) => write_atomic(&path, &text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    if let mctruth::report::Report::Validate(v) = &report {
        for x in &v.violations {
            eprintln!("violation: {x}");
        }
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
