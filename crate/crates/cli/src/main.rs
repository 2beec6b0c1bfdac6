use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod error;
mod output;

use args::{Cli, Command, OutputArgs};
use error::CliError;
use output::Format;

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("STEKLOV_THREADS") else {
        return Ok(());
    };
    let n: usize =
        value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Validation(format!("STEKLOV_THREADS must be a positive integer, got '{value}'"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("cannot start thread pool: {e}")))
}

fn dispatch(command: &Command, base: Option<&Path>) -> Result<(commands::Report, OutputArgs), CliError> {
    Ok(match command {
        Command::BallSpectrum(a) => (commands::ball_spectrum(a)?, a.output.clone()),
        Command::Solve(a) => (commands::solve(a, base)?, a.output.clone()),
        Command::ShapeDerivative(a) => (commands::shape_derivative(a, base)?, a.output.clone()),
        Command::Criticality(a) => (commands::criticality(a, base)?, a.output.clone()),
        Command::Concentration(a) => (commands::concentration(a)?, a.output.clone()),
        Command::IsoScan(a) => (commands::iso(a)?, a.output.clone()),
        Command::InverseSum(a) => (commands::inverse_sum(a, base)?, a.output.clone()),
        Command::RunConfig(a) => {
            let loaded = config::load(&a.config)?;
            let base = a.config.parent().unwrap_or(Path::new("."));
            let (report, mut output) = dispatch(&loaded, Some(base))?;
            if let Some(p) = output.output.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
            if a.output.format.is_some() {
                output.format = a.output.format;
            }
            if a.output.output.is_some() {
                output.output = a.output.output.clone();
            }
            (report, output)
        }
    })
}

fn emit(report: &commands::Report, output: &OutputArgs) -> Result<(), CliError> {
    let mut out: Box<dyn Write> = match &output.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match output.format.unwrap_or(report.default_format) {
        Format::Csv => report.table.write_csv(&mut out)?,
        Format::Json => output::write_json(&mut out, &report.json)?,
    }
    out.flush()?;
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    configure_threads()?;
    let (report, output) = dispatch(&cli.command, None)?;
    emit(&report, &output)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
