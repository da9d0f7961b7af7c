use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cumulant_cli::config::{parse_config, RunConfig};
use cumulant_cli::output::{combined_csv, csv_path, table_csv, write_file};
use cumulant_cli::run::{build, check_comparable, run};
use cumulant_cli::CliError;

/// Open-system dynamics from regularized cumulant and Davies generators.
#[derive(Parser)]
#[command(name = "cumulant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one configuration and write CSV series plus a JSON report.
    Simulate {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report path; overrides `output.report`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run several configurations on a shared grid and stack them in one CSV.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PictureArg::Schrodinger)]
        picture: PictureArg,
    },
    /// Validate a configuration without propagating.
    Check { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum PictureArg {
    Schrodinger,
    Interaction,
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn failure_report(path: &Path, err: &CliError) {
    let doc = serde_json::json!({
        "status": "failed",
        "category": err.category(),
        "exit_code": err.exit_code(),
        "error": err.to_string(),
    });
    let _ = write_file(path, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()));
}

fn simulate(config_path: &Path, out: Option<PathBuf>, report: Option<PathBuf>) -> Result<(), CliError> {
    let config = load(config_path)?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let report_path = report
        .or_else(|| config.output.report.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| dir.join(format!("{}_report.json", config.output.prefix)));
    let result = run(&config);
    let mut output = match result {
        Ok(o) => o,
        Err(e) => {
            failure_report(&report_path, &e);
            return Err(e);
        }
    };
    let prefix = &config.output.prefix;
    for (picture, table) in [("schrodinger", &output.schrodinger), ("interaction", &output.interaction)] {
        let path = csv_path(&dir, prefix, picture);
        write_file(&path, &table_csv(table))?;
        output.report.outputs.push(path.display().to_string());
    }
    output.report.outputs.push(report_path.display().to_string());
    let json = serde_json::to_string_pretty(&output.report).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&report_path, &format!("{json}\n"))?;
    println!(
        "{} {} on {} points: max trace defect {:.2e}, min eigenvalue {:.2e}; wrote {}",
        output.report.model,
        output.report.method,
        output.report.diagnostics.len(),
        output.report.max_trace_defect,
        output.report.min_eigenvalue,
        output.report.outputs.join(", ")
    );
    if let Some(w) = &output.report.witness {
        println!("witness: total increase {:.3e} (monotone: {})", w.total_increase, w.monotone);
    }
    Ok(())
}

fn compare(paths: &[PathBuf], out: Option<PathBuf>, picture: PictureArg) -> Result<(), CliError> {
    let configs = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    check_comparable(&configs)?;
    let outputs = configs.iter().map(run).collect::<Result<Vec<_>, _>>()?;
    let mut labels: Vec<String> = Vec::new();
    for c in &configs {
        let base = c.method.name().to_string();
        let n = labels.iter().filter(|l| l.split('#').next() == Some(&base)).count();
        labels.push(if n == 0 { base } else { format!("{base}#{n}") });
    }
    let tables: Vec<(String, _)> = labels
        .into_iter()
        .zip(&outputs)
        .map(|(l, o)| {
            let t = match picture {
                PictureArg::Schrodinger => &o.schrodinger,
                PictureArg::Interaction => &o.interaction,
            };
            (l, t)
        })
        .collect();
    let csv = combined_csv(&tables);
    match out {
        Some(path) => write_file(&path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn check(path: &Path) -> Result<(), CliError> {
    let config = load(path)?;
    let setup = build(&config)?;
    println!(
        "ok: {} with {} on {} time points, Bohr frequencies {:?}",
        setup.model.name,
        config.method.name(),
        setup.times.len(),
        setup.propagator.decomposition().frequencies()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, report } => simulate(&config, out, report),
        Command::Compare { configs, out, picture } => compare(&configs, out, picture),
        Command::Check { config } => check(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
