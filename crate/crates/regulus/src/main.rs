use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regulus::bundle::ORIGINAL;
use regulus::export::{export, ExportOptions, Format, What};
use regulus::{load_table, AnalysisBundle, AnalysisConfig, TableOptions};
use regulus_core::tree::ReduceFilter;
use regulus_core::FitKind;

#[derive(Parser)]
#[command(
    name = "regulus",
    version,
    about = "Partition hierarchies and local regression over sampled functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an analysis file from a CSV table.
    Analyze {
        csv: PathBuf,
        /// Analysis file to write.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Ridge penalty; 0 fits ordinary least squares.
        #[arg(long, default_value_t = 1.0)]
        ridge_lambda: f64,
        /// Measures to evaluate on every node.
        #[arg(long, value_delimiter = ',', default_value = "fitness")]
        measures: Vec<String>,
        /// Output column names, instead of a "|" marker column.
        #[arg(long, value_delimiter = ',')]
        outputs: Option<Vec<String>>,
        /// Output driving the topology.
        #[arg(long)]
        target: Option<String>,
    },
    /// Add a reduced tree to an analysis file.
    Reduce {
        analysis: PathBuf,
        #[arg(long)]
        min_points: Option<u32>,
        #[arg(long)]
        min_lifespan: Option<f64>,
        /// Output value range `lo:hi` in original units.
        #[arg(long, value_parser = parse_range)]
        value_range: Option<(f64, f64)>,
        /// Tree to reduce.
        #[arg(long, default_value = ORIGINAL)]
        from: String,
        /// Write here instead of updating the file in place.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a layout, measures or a projection.
    Export {
        analysis: PathBuf,
        #[arg(long)]
        what: What,
        #[arg(long, default_value = "json")]
        format: Format,
        #[arg(long, default_value = ORIGINAL)]
        handle: String,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "fitness,parent_fitness,child_fitness"
        )]
        measures: Vec<String>,
        #[arg(long, default_value = "star")]
        preset: String,
        /// Persistence level of the projected selection.
        #[arg(long, default_value_t = 0.0)]
        level: f64,
        /// Include projected inverse curves.
        #[arg(long)]
        curves: bool,
    },
    /// Serve the HTTP API.
    Serve {
        analysis: PathBuf,
        #[arg(long, default_value_t = 8472)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

type BoxError = Box<dyn std::error::Error>;

fn read_bundle(path: &Path) -> Result<AnalysisBundle, BoxError> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    AnalysisBundle::from_bytes(&bytes).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_bundle(bundle: &AnalysisBundle, path: &Path) -> Result<(), BoxError> {
    fs::write(path, bundle.to_bytes()?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn run(cli: Cli) -> Result<(), BoxError> {
    match cli.command {
        Command::Analyze {
            csv,
            output,
            k,
            ridge_lambda,
            measures,
            outputs,
            target,
        } => {
            let file = fs::File::open(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
            let raw = load_table(file, &TableOptions { outputs, target })
                .map_err(|e| format!("{}: {e}", csv.display()))?;
            if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
                return Err(format!(
                    "--ridge-lambda must be finite and non-negative, got {ridge_lambda}"
                )
                .into());
            }
            let fit = if ridge_lambda == 0.0 {
                FitKind::Ols
            } else {
                FitKind::Ridge {
                    lambda: ridge_lambda,
                }
            };
            let config = AnalysisConfig {
                k: k as usize,
                fit,
                ..Default::default()
            };
            let bundle = AnalysisBundle::analyze(raw, config)?;
            bundle.evaluate(ORIGINAL, &measures)?;
            write_bundle(&bundle, &output)?;
            let e = bundle.original();
            let root_fitness = e.store.scalar("fitness", e.tree.root())?;
            println!(
                "n={} d={} leaves={} nodes={} root_fitness={}",
                bundle.data.len(),
                bundle.data.dims(),
                e.tree.leaves().count(),
                e.tree.len(),
                root_fitness.map_or("undefined".into(), |v| format!("{v:.6}"))
            );
        }
        Command::Reduce {
            analysis,
            min_points,
            min_lifespan,
            value_range,
            from,
            output,
        } => {
            let mut bundle = read_bundle(&analysis)?;
            let handle = bundle.reduce(
                &from,
                ReduceFilter {
                    min_points,
                    min_lifespan,
                    value_range,
                },
            )?;
            write_bundle(&bundle, output.as_deref().unwrap_or(&analysis))?;
            let tree = &bundle.entry(&handle)?.tree;
            println!(
                "{handle} nodes={} leaves={}",
                tree.len(),
                tree.leaves().count()
            );
        }
        Command::Export {
            analysis,
            what,
            format,
            handle,
            measures,
            preset,
            level,
            curves,
        } => {
            let bundle = read_bundle(&analysis)?;
            let opts = ExportOptions {
                what,
                format,
                handle,
                measures,
                preset,
                level,
                curves,
            };
            print!("{}", export(&bundle, &opts)?);
        }
        Command::Serve {
            analysis,
            port,
            host,
        } => {
            let bundle = read_bundle(&analysis)?;
            let addr = SocketAddr::new(host, port);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("serving {} on http://{addr}", analysis.display());
            rt.block_on(regulus::service::serve(bundle, addr))
                .map_err(|e| format!("{addr}: {e}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
