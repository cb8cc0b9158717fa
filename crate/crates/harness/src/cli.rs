//! `hybs` argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use hybs_core::agents::TrainConfig;
use hybs_core::RuleConfig;

use crate::commands;
use crate::config::{ChefSpec, ExperimentConfig, BIND_ENV, DEFAULT_BIND};
use crate::metrics::summary_table;
use crate::runner::ChefFactory;
use crate::session::{ServiceConfig, SessionManager};
use crate::HarnessError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hybs", version, about = "Kitchen simulator experiments, analysis and waiter sessions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags every subcommand accepts.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Scenario or training seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play a batch of seeded games and write logs and metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// heuristic:tomato, heuristic:onion, apprentice:<artifact>[#user=..|#cluster=..] or replay:<dir>
        #[arg(long)]
        chef: Option<String>,
        /// greedy or random
        #[arg(long)]
        waiter: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Explicit comma-separated scenario seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        layout: Option<PathBuf>,
        /// A second chef to play the same seeds, for a paired comparison.
        #[arg(long)]
        compare: Option<String>,
    },
    /// Run the waiter session service.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Address to listen on; the environment override wins over the default.
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        chef: Option<String>,
        #[arg(long)]
        layout: Option<PathBuf>,
    },
    /// Train an apprentice from demonstration logs, one subdirectory per user.
    TrainApprentice {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        logs: PathBuf,
        /// JSON map from user to cluster; computed from the logs when absent.
        #[arg(long)]
        clusters: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        step_size: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Embed and cluster demonstration logs.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        logs: PathBuf,
        /// Candidate cluster counts.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
    },
    /// Compare conditions given as NAME=metrics.json (or a batch directory).
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(required = true, num_args = 2..)]
        conditions: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Check that a layout file loads.
    ValidateLayout {
        #[command(flatten)]
        common: Common,
        path: PathBuf,
    },
    /// Dump the render frames of a logged game as JSON lines.
    Replay {
        #[command(flatten)]
        common: Common,
        log: PathBuf,
    },
}

fn base_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.seeds = None;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> Result<PathBuf, HarnessError> {
    Ok(base_config(common)?.out)
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Simulate { common, chef, waiter, n, seeds, layout, compare } => {
            let mut cfg = base_config(&common)?;
            if let Some(c) = chef {
                cfg.chef = c;
            }
            if let Some(w) = waiter {
                cfg.waiter = w;
            }
            if let Some(n) = n {
                cfg.n = n;
                cfg.seeds = None;
            }
            if seeds.is_some() {
                cfg.seeds = seeds;
            }
            if layout.is_some() {
                cfg.layout = layout;
            }
            let exp = cfg.validate()?;
            let compare: Option<ChefSpec> = compare.map(|c| c.parse()).transpose()?;
            let batches = commands::simulate(&exp, compare.as_ref())?;
            for b in &batches {
                stdout(&summary_table(&b.summaries(), b.aggregate.as_ref()));
                for f in &b.failures {
                    eprintln!("seed {} failed: {}", f.seed, f.error);
                }
            }
            Ok(())
        }
        Command::Serve { common, bind, chef, layout } => {
            let mut cfg = base_config(&common)?;
            if let Some(c) = chef {
                cfg.chef = c;
            }
            if layout.is_some() {
                cfg.layout = layout;
            }
            let exp = cfg.validate()?;
            let addr = bind.or_else(|| std::env::var(BIND_ENV).ok()).unwrap_or_else(|| DEFAULT_BIND.to_string());
            let manager = SessionManager::new(ServiceConfig {
                layout: exp.layout.clone(),
                chef: ChefFactory::new(&exp.chef, exp.config.planning)?,
                rules: RuleConfig::default(),
                default_seed: exp.config.seed,
                log_dir: Some(exp.config.out.join("sessions")),
            });
            let listener = crate::server::bind(addr.as_str())?;
            eprintln!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or(addr));
            crate::server::serve(listener, Arc::new(manager))
        }
        Command::TrainApprentice { common, logs, clusters, epochs, hidden, step_size, batch_size } => {
            let out = out_dir(&common)?;
            let d = TrainConfig::default();
            let cfg = TrainConfig {
                epochs: epochs.unwrap_or(d.epochs),
                hidden: hidden.unwrap_or(d.hidden),
                step_size: step_size.unwrap_or(d.step_size),
                batch_size: batch_size.unwrap_or(d.batch_size),
                seed: common.seed.unwrap_or(d.seed),
                ..d
            };
            let artifact = out.join("apprentice.json");
            let model = commands::train(&logs, clusters.as_deref(), &cfg, &artifact)?;
            stdout(&format!(
                "trained on {} users, final cross-entropy {:.4}, wrote {}\n",
                model.user_embeddings.len(),
                model.final_cross_entropy,
                artifact.display()
            ));
            Ok(())
        }
        Command::Cluster { common, logs, k } => {
            let out = out_dir(&common)?;
            let users = commands::load_user_logs(&logs)?;
            let n = users.values().map(Vec::len).sum();
            let ks = k.unwrap_or_else(|| commands::default_ks(n));
            let report = commands::cluster_logs(&logs, &ks, common.seed.unwrap_or(0))?;
            commands::write_cluster_outputs(&report, &out)?;
            stdout(&report.to_text());
            Ok(())
        }
        Command::Stats { common, conditions, alpha } => {
            let parsed: Vec<_> = conditions.iter().map(|c| commands::parse_condition(c)).collect();
            let (reports, text) = commands::stats(&parsed, alpha)?;
            if let Some(out) = &common.out {
                std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
                let json = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
                std::fs::write(out.join("stats.json"), json).map_err(|e| HarnessError::io(out, e))?;
                std::fs::write(out.join("stats.txt"), &text).map_err(|e| HarnessError::io(out, e))?;
            }
            stdout(&text);
            Ok(())
        }
        Command::ValidateLayout { path, .. } => {
            stdout(&commands::validate_layout(&path)?);
            Ok(())
        }
        Command::Replay { common, log } => {
            let (dump, tips) = commands::replay_dump(&commands::read_log(&log)?)?;
            match &common.out {
                Some(out) => {
                    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
                    let path = out.join("frames.jsonl");
                    std::fs::write(&path, dump).map_err(|e| HarnessError::io(&path, e))?;
                    stdout(&format!("tips_total {tips}, frames written to {}\n", path.display()));
                }
                None => stdout(&dump),
            }
            Ok(())
        }
    }
}
