use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use msgr::catalog::{self, BUILTIN_NAMES};
use msgr::fieldspace::{eh, ep, JetPoint};
use msgr::report::{self, CheckConfig, Format, Model};
use msgr::Error;

#[derive(Parser)]
#[command(name = "msgr", version, about = "Multisymplectic gravity model checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a metric and run every check family of a model.
    Check {
        #[arg(long, value_parser = parse_model)]
        model: Model,
        /// Builtin name (optionally `name:key=value,...`) or metric file path.
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override a family tolerance, e.g. `--tol field-equation=1e-6`.
        #[arg(long = "tol", value_name = "FAMILY=VALUE")]
        tol: Vec<String>,
        #[arg(long, default_value = "json", value_parser = parse_format)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in metrics.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Print the jet coordinates of a metric at a point.
    Jets {
        #[arg(long)]
        metric: String,
        /// Comma separated `x0,x1,x2,x3`.
        #[arg(long)]
        at: String,
        #[arg(long, default_value = "eh", value_parser = parse_model)]
        model: Model,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_point(s: &str) -> msgr::Result<[f64; 4]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Usage(format!("`{s}` is not a list of numbers")))?;
    v.try_into().map_err(|_| Error::Usage("--at needs exactly four coordinates".into()))
}

fn write_out(out: Option<&PathBuf>, text: &str) -> msgr::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn run(cli: Cli) -> msgr::Result<bool> {
    match cli.command {
        Command::Check { model, metric, points, seed, tol, format, out } => {
            let spec = catalog::resolve(&metric)?;
            let mut cfg = CheckConfig::new(model, spec, &metric);
            cfg.points = points;
            cfg.seed = seed;
            for t in &tol {
                cfg.set_tolerance(t)?;
            }
            cfg.threads = report::threads_from_env()?;
            let r = report::run_check(&cfg)?;
            write_out(out.as_ref(), &report::emit(&r, format))?;
            Ok(r.pass)
        }
        Command::Catalog { action: CatalogAction::List } => {
            let mut text = String::new();
            for name in BUILTIN_NAMES {
                let spec = catalog::builtin(name, &[])?;
                let summary = catalog::builtin_summary(name).unwrap_or("");
                text.push_str(&format!("{name:<16} vacuum={:<8} {summary}\n", spec.vacuum.to_string()));
            }
            write_out(None, &text)?;
            Ok(true)
        }
        Command::Jets { metric, at, model } => {
            let spec = catalog::resolve(&metric)?;
            let x = parse_point(&at)?;
            let mut text = String::new();
            match model {
                Model::Eh => {
                    let p = spec.eh_point_at(x)?;
                    for (id, v) in p.coords().iter().enumerate() {
                        text.push_str(&format!("{} {v:.16e}\n", eh::name(id)));
                    }
                }
                Model::Ep => {
                    let p = spec.ep_point_at(x)?;
                    for (id, v) in p.coords().iter().enumerate() {
                        text.push_str(&format!("{} {v:.16e}\n", ep::name(id)));
                    }
                }
            }
            write_out(None, &text)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("msgr: {e}");
            ExitCode::from(report::exit_code(&e) as u8)
        }
    }
}
