use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use objnav::world::GenerateParams;
use objnav_cli::evaluate::{cmd_eval, format_table};
use objnav_cli::generate::cmd_generate;
use objnav_cli::run::cmd_run;
use objnav_cli::serve::{bind, local_addr, serve, ServeOptions, Server};
use objnav_cli::RunConfig;

#[derive(Parser)]
#[command(name = "objnav", version, about = "Object-goal navigation simulator and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scene files.
    Generate {
        /// TOML file with generation parameters; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        floors: Option<usize>,
    },
    /// Run the episodes of a config and write trajectory logs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Overwrite an existing run in the output directory.
        #[arg(long)]
        force: bool,
    },
    /// Aggregate trajectory logs into a metrics report.
    Eval {
        /// Glob of log files, e.g. 'runs/demo/*.jsonl'.
        logs: String,
        /// Also write the report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        success_radius: f64,
    },
    /// Serve interactive sessions for human operators.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Number of test episodes offered, stratified by goal category.
        #[arg(long, default_value_t = 50)]
        subset: usize,
        /// Practice episodes required before test episodes unlock.
        #[arg(long, default_value_t = 1)]
        practice: usize,
        /// Where human logs go; defaults to `<config out>/human`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { config, out, seed, count, floors } => {
            let mut params: GenerateParams = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => GenerateParams::default(),
            };
            if let Some(s) = seed {
                params.rng_seed = s;
            }
            if let Some(f) = floors {
                params.floors = f;
            }
            for path in cmd_generate(&params, count, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Run { config, out, workers, force } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.out.clone());
            let runs = cmd_run(&cfg, &out, workers.unwrap_or(cfg.workers), force)?;
            let ok = runs.iter().filter(|r| r.fixed.success).count();
            println!("{} episodes, {ok} successful; logs in {} (digest {})", runs.len(), out.display(), cfg.digest());
        }
        Command::Eval { logs, out, success_radius } => {
            let ev = cmd_eval(&logs, success_radius)?;
            print!("{}", format_table(&ev.report));
            let json = serde_json::to_string_pretty(&ev.report)?;
            match out {
                Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
        }
        Command::Serve { config, port, subset, practice, out } => {
            let cfg = RunConfig::load(&config)?;
            let options = ServeOptions {
                port,
                subset,
                practice_required: practice,
                out: out.unwrap_or_else(|| cfg.out.join("human")),
                ..Default::default()
            };
            let listener = bind(port)?;
            let server = Arc::new(Server::new(&cfg, options)?);
            println!("listening on {}", local_addr(&listener)?);
            serve(server, listener)?;
        }
    }
    Ok(())
}
