use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evonet_core::config::{self, RunConfig, Setting};
use evonet_core::pipeline;
use evonet_core::Error;

#[derive(Parser)]
#[command(name = "evonet", version, about = "Genetic-evolutionary network training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write embeddings (or predictions), history,
    /// metrics and the resolved config.
    Run(Common),
    /// Build the sub-network pool only and write it to pool.tsv.
    Sample(Common),
    /// Score an embeddings file against an edge list.
    Evaluate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PS1|PS2")]
    preset: Option<String>,
    /// `key=value` overrides, applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
            None => String::new(),
        };
        let mut overrides = self
            .overrides
            .iter()
            .map(|o| config::parse_override(o))
            .collect::<Result<Vec<Setting>, Error>>()?;
        let flag = |key: &str, value: String| config::parse_override(&format!("{key}={value}"));
        if let Some(p) = &self.preset {
            overrides.push(flag("preset", p.clone())?);
        }
        if let Some(s) = self.seed {
            overrides.push(flag("seed", s.to_string())?);
        }
        if let Some(o) = &self.out {
            overrides.push(flag("output", o.display().to_string())?);
        }
        config::parse_config(&text, &overrides)
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let summary = pipeline::run_pipeline(&cfg)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", summary.metrics.to_text());
            println!("wrote {}", summary.artifacts.output.display());
        }
        Command::Sample(common) => {
            let cfg = common.resolve()?;
            let (path, metrics) = pipeline::sample_only(&cfg)?;
            print!("{}", metrics.to_text());
            println!("wrote {}", path.display());
        }
        Command::Evaluate {
            embeddings,
            edges,
            common,
        } => {
            let cfg = common.resolve()?;
            let metrics = pipeline::evaluate_files(&embeddings, &edges, &cfg)?;
            print!("{}", metrics.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { 1 } else { 2 })
        }
    }
}
