use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rsc_saga::datagen;
use rsc_saga_cli::config::SyntheticConfig;
use rsc_saga_cli::experiment::{self, build_problem, cached_reference, RunOptions};
use rsc_saga_cli::{preset, preset_names, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rsc-saga", version, about = "SAGA and baseline solvers for sparse regularized estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path),
            (None, Some(name)) => preset(name),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Libsvm,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Tune, run and write trace CSVs plus summary.csv.
    Run {
        #[command(flatten)]
        source: Source,
        /// Write 0 in the seconds column.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the built-in preset names.
    ListPresets,
    /// Generate a synthetic dataset.
    GenData {
        /// TOML file with the fields of `[problem.synthetic]`.
        #[arg(long, conflicts_with = "preset")]
        spec: Option<PathBuf>,
        /// Use the synthetic problem of a preset.
        #[arg(long, required_unless_present = "spec")]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "libsvm")]
        format: DataFormat,
    },
    /// Compute (or load) the cached reference solution.
    Reference {
        #[command(flatten)]
        source: Source,
    },
}

fn synthetic_spec(spec: Option<PathBuf>, preset_name: Option<String>) -> Result<SyntheticConfig, CliError> {
    if let Some(path) = spec {
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let s: SyntheticConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        s.spec().validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return Ok(s);
    }
    let name = preset_name.expect("clap requires --spec or --preset");
    preset(&name)?
        .problem
        .synthetic
        .ok_or_else(|| CliError::Config(format!("preset '{name}' uses file data")))
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { source, no_timing, output_dir } => {
            let cfg = source.load()?;
            let opts = RunOptions { no_timing, output_dir, ..RunOptions::default() };
            let summary = experiment::run_experiment(&cfg, &opts)?;
            for row in &summary.rows {
                println!(
                    "{} seed {}: {}={:e} final gap {:e} ({})",
                    row.algorithm,
                    row.seed,
                    row.parameter,
                    row.value,
                    row.final_gap,
                    row.status.name()
                );
            }
            if let Some(path) = summary.files.last() {
                println!("wrote {}", path.display());
            }
        }
        Command::ListPresets => {
            for name in preset_names() {
                println!("{name}");
            }
        }
        Command::GenData { spec, preset, out, format } => {
            let s = synthetic_spec(spec, preset)?;
            let syn = datagen::generate(&s.spec())?;
            let ds = if s.normalize { datagen::normalize_columns(&syn.dataset)? } else { syn.dataset };
            match format {
                DataFormat::Libsvm => datagen::write_libsvm(&ds, &out)?,
                DataFormat::Csv => datagen::write_csv_dump(&ds, &out)?,
            }
            println!("wrote {} ({} x {})", out.display(), ds.n(), ds.p());
        }
        Command::Reference { source } => {
            let cfg = source.load()?;
            let problem = build_problem(&cfg)?;
            let cache_dir = experiment::cache_dir_from_env();
            let r = cached_reference(&cfg, &problem, &cache_dir)?;
            println!("key {}", experiment::reference_key(&cfg)?);
            println!("objective {:.16e}", r.objective);
            println!("residual {:e}", r.residual);
            println!("status {}", r.status.name());
            println!("passes {}", r.passes);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rsc-saga: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
