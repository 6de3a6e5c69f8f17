use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lrprop_core::checks::{BatteryConfig, CheckHooks};

use crate::commands::{cmd_align, cmd_check, cmd_eval, cmd_generate, cmd_train, AlignArgs, TrainArgs};
use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};
use crate::report;

#[derive(Parser, Debug)]
#[command(name = "lrprop", version, about = "Learn frame embeddings for video alignment on synthetic sequences")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override any configuration key, e.g. --set epochs=2
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset
    Generate,
    /// Train the encoder and write a checkpoint and training curve
    Train {
        /// Continue from the checkpoint
        #[arg(long)]
        resume: bool,
        /// Stop after this many total steps
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Evaluate the checkpoint on the test split
    Eval {
        /// Evaluate the random initialization instead of a checkpoint
        #[arg(long)]
        untrained: bool,
    },
    /// Align two videos with DTW on their embeddings
    Align {
        /// Take videos from the training split instead of the test split
        #[arg(long)]
        train_split: bool,
        #[arg(long, default_value_t = 0)]
        a: usize,
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long)]
        untrained: bool,
    },
    /// Run the oracle and gradient check battery
    Check {
        /// Smaller case counts
        #[arg(long)]
        quick: bool,
    },
}

pub fn resolve_config(common: &Common) -> AppResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| AppError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(d) = &common.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(c) = &common.checkpoint {
        cfg.checkpoint = Some(c.clone());
    }
    cfg.finalize()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> AppResult<i32> {
    let cfg = resolve_config(&cli.common)?;
    match cli.command {
        Command::Generate => {
            let (_, summary) = cmd_generate(&cfg)?;
            println!("{summary}");
        }
        Command::Train { resume, stop_after } => {
            let out = cmd_train(&cfg, &TrainArgs { resume, stop_after })?;
            let last = out.curve.last().map_or(f64::NAN, |p| p.combined);
            println!(
                "trained {} steps (step {} of {}), last combined loss {last:.6} -> {}",
                out.curve.len(),
                out.opt_state.step,
                out.total_steps,
                cfg.checkpoint_path().display()
            );
        }
        Command::Eval { untrained } => {
            let r = cmd_eval(&cfg, untrained)?;
            println!("{}", serde_json::to_string_pretty(&report::eval_json(&r)).expect("plain data"));
        }
        Command::Align { train_split, a, b, untrained } => {
            let doc = cmd_align(&cfg, &AlignArgs { test_split: !train_split, a, b, untrained })?;
            println!(
                "path of {} steps, cost {} -> {}",
                doc["path"].as_array().map_or(0, Vec::len),
                doc["cost"],
                cfg.out_dir.join("alignment.json").display()
            );
        }
        Command::Check { quick } => {
            let battery = if quick {
                BatteryConfig {
                    dtw_cases: 40,
                    softdtw_cases: 20,
                    fd_seeds: 4,
                    end_to_end_seeds: 2,
                    ..BatteryConfig::default()
                }
            } else {
                BatteryConfig::default()
            };
            let results = cmd_check(&cfg, &battery, &CheckHooks::default())?;
            print!("{}", report::check_table(&results));
            if results.iter().any(|r| !r.passed) {
                eprintln!("error: {} check(s) failed", results.iter().filter(|r| !r.passed).count());
                return Ok(2);
            }
        }
    }
    Ok(0)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
