use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use levy_fpe::solver::io::{read_snapshot, write_snapshot_csv, Snapshot};
use levy_fpe_cli::presets::{preset, presets, Variant};
use levy_fpe_cli::{parse_config, run_experiment, to_toml, workers_from_env, RunConfig, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "levy-fpe", version, about = "Nonlocal Fokker-Planck experiments for the MeKS circuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a preset.
    Run {
        /// TOML config file.
        config: Option<PathBuf>,
        #[command(flatten)]
        preset: PresetArgs,
        /// Override the output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a config file and print the fully resolved version.
    Validate { config: PathBuf },
    /// Figure presets.
    Presets {
        #[command(subcommand)]
        command: PresetCommand,
    },
    /// Convert a binary snapshot.
    Export {
        snapshot: PathBuf,
        /// Write CSV (`i,j,v,w,k,s,P`).
        #[arg(long, required = true)]
        csv: bool,
        /// Destination file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List the available presets.
    List,
    /// Print a preset as a config file.
    Show {
        name: String,
        #[command(flatten)]
        variant: VariantArgs,
    },
}

#[derive(Args)]
struct PresetArgs {
    /// Use a named preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[command(flatten)]
    variant: VariantArgs,
}

#[derive(Args)]
struct VariantArgs {
    /// Desk-scale variant (default).
    #[arg(long, conflicts_with = "paper")]
    coarse: bool,
    /// Full-resolution variant.
    #[arg(long)]
    paper: bool,
}

impl VariantArgs {
    fn variant(&self) -> Variant {
        if self.paper {
            Variant::Paper
        } else {
            Variant::Coarse
        }
    }
}

fn load(path: &PathBuf) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn named(name: &str, v: &VariantArgs) -> Result<RunConfig> {
    match preset(name) {
        Some(p) => Ok(p.config(v.variant())),
        None => bail!("unknown preset `{name}`; see `levy-fpe presets list`"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, preset, output } => {
            let mut cfg = match (config, &preset.preset) {
                (Some(path), _) => load(&path)?,
                (None, Some(name)) => named(name, &preset.variant)?,
                (None, None) => bail!("give a config file or --preset NAME"),
            };
            if let Some(out) = output {
                cfg.output = out;
            }
            if let Some(n) = workers_from_env()? {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .with_context(|| format!("configuring {n} workers from {WORKERS_ENV}"))?;
            }
            let outcome = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            eprintln!(
                "wrote {} ({} cell(s) computed, {} reused)",
                outcome.output.display(),
                outcome.computed_cells,
                outcome.reused_cells
            );
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            print!("{}", to_toml(&cfg));
            eprintln!("{}: ok ({})", config.display(), cfg.kind);
        }
        Command::Presets { command: PresetCommand::List } => {
            for p in presets() {
                println!("{:<6} {}", p.name, p.description);
            }
        }
        Command::Presets { command: PresetCommand::Show { name, variant } } => {
            print!("{}", to_toml(&named(&name, &variant)?));
        }
        Command::Export { snapshot, csv: _, output } => {
            let f = File::open(&snapshot).with_context(|| format!("opening {}", snapshot.display()))?;
            let snap: Snapshot<f64> = read_snapshot(BufReader::new(f))?;
            match output {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                    write_snapshot_csv(&mut w, &snap)?;
                    w.flush()?;
                }
                None => {
                    let mut w = BufWriter::new(io::stdout().lock());
                    write_snapshot_csv(&mut w, &snap)?;
                    w.flush()?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
