use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tightmip::pipeline::{self, read_json, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "tightmip",
    version,
    about = "Learn big-M cuts from solved scheduling instances and benchmark them"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    /// Event points of the scheduling model.
    #[arg(long, global = true)]
    events: Option<usize>,
    /// Perturbation level.
    #[arg(long, global = true, value_parser = parse_epsilon)]
    epsilon: Option<f64>,
    /// Number of training instances.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Relative gap at which solves stop.
    #[arg(long, global = true)]
    gap: Option<f64>,
    /// Worker threads for independent solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Processing-time rows with the variable term not scaled by batch size.
    #[arg(long, global = true)]
    literal_a8: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve perturbed instances and store their optimal binary vectors.
    Gen {
        /// Number of test instances.
        #[arg(long)]
        n_test: Option<usize>,
        /// Write the three-vertex cube instead.
        #[arg(long)]
        toy: bool,
    },
    /// Train the autoencoder and derive the cut set.
    Train {
        /// Defaults to <out>/dataset.json.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Hamming loss and PPO of trained weights on a dataset.
    Eval {
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Without it, big-M is re-estimated from the dataset.
        #[arg(long)]
        cutset: Option<PathBuf>,
        /// Defaults to <out>/test_dataset.json, falling back to dataset.json.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Solve each test instance with and without the cuts.
    Bench {
        #[arg(long)]
        cutset: Option<PathBuf>,
        #[arg(long)]
        test_dataset: Option<PathBuf>,
    },
    /// Rebuild summary.md from the CSV files in the run directory.
    Report,
}

fn parse_epsilon(s: &str) -> std::result::Result<f64, String> {
    match s {
        "0.05" | "0.10" | "0.1" | "0.20" | "0.2" => Ok(s.parse().expect("literal")),
        _ => Err(format!("epsilon must be one of 0.05, 0.10, 0.20 (got {s})")),
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            read_json::<PipelineConfig>(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.net.seed = s;
    }
    if let Some(e) = common.events {
        cfg.events = e;
    }
    if let Some(e) = common.epsilon {
        cfg.epsilon = e;
    }
    if let Some(n) = common.n {
        cfg.n_train = n;
    }
    if let Some(g) = common.gap {
        cfg.solve.gap_limit = g;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    cfg.literal_a8 |= common.literal_a8;
    cfg.validate()?;
    Ok(cfg)
}

fn or_default(path: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| out.join(name))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    let out = &cli.common.out;
    match cli.command {
        Command::Gen { n_test, toy } => {
            if toy {
                let file = pipeline::cmd_generate_toy(&cfg, out)?;
                println!("wrote {} toy vectors to {}", file.dataset.len(), out.display());
                return Ok(());
            }
            if let Some(n) = n_test {
                cfg.n_test = n;
            }
            let (train, test) = pipeline::cmd_generate(&cfg, out)?;
            println!(
                "train: {} of {} instances solved; test: {} of {}; p = {}",
                train.dataset.len(),
                train.instances.len(),
                test.dataset.len(),
                test.instances.len(),
                train.layout.as_ref().map_or(0, |l| l.len())
            );
        }
        Command::Train { dataset } => {
            let trained = pipeline::cmd_train(&cfg, &or_default(&dataset, out, pipeline::DATASET), out)?;
            println!("big-M = {}", trained.cutset.big_m);
            for r in &trained.metrics {
                println!(
                    "{} ({} samples): HL {:.3}%  PPO {:.1}%",
                    r.split, r.samples, r.hl_percent, r.ppo_percent
                );
            }
        }
        Command::Eval {
            weights,
            cutset,
            dataset,
        } => {
            let dataset = dataset.unwrap_or_else(|| {
                let test = out.join(pipeline::TEST_DATASET);
                if test.exists() {
                    test
                } else {
                    out.join(pipeline::DATASET)
                }
            });
            let row = pipeline::cmd_evaluate(
                &or_default(&weights, out, pipeline::WEIGHTS),
                cutset.as_deref(),
                &dataset,
                out,
            )?;
            println!("N,epsilon,HL_percent,PPO_percent");
            println!(
                "{}, {}, {:.1}, {:.1}",
                row.n, row.epsilon, row.hl_percent, row.ppo_percent
            );
        }
        Command::Bench { cutset, test_dataset } => {
            let records = pipeline::cmd_benchmark(
                &cfg,
                &or_default(&cutset, out, pipeline::CUTSET),
                &or_default(&test_dataset, out, pipeline::TEST_DATASET),
                out,
            )?;
            if records.is_empty() {
                bail!("no test instances to benchmark");
            }
            print!("{}", std::fs::read_to_string(out.join(pipeline::SUMMARY))?);
        }
        Command::Report => print!("{}", pipeline::cmd_report(out)?),
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
