//! Experiment harness binding the simulator together: fairness study,
//! attack evaluation, break-even search, orphan-bound table, direct runs,
//! and a line-delimited JSON episode server for external policy search.

mod episode_server;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use powsim::experiments::{
    attack_eval, break_even, fairness, fnv1a64, orphan_table, orphan_table_csv, AttackEvalConfig,
    BreakEvenConfig, FairnessConfig,
};
use powsim::metrics::{accumulate_rewards, measured_orphan_rate, winning_chain};
use powsim::sim::{run, SimConfig};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "powsim", about = "Proof-of-work consensus simulator and analysis toolkit")]
struct Cli {
    /// Base seed for all derived run seeds.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for batch runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the full published experiment sizes instead of desk-scale
    /// defaults.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-miner (1%/99%) reward fairness across summary intervals.
    Fairness {
        /// bitcoin | tailstorm
        #[arg(long, default_value = "bitcoin")]
        protocol: String,
        /// Summary intervals in seconds.
        #[arg(long = "T", value_delimiter = ',', default_values_t = vec![600.0, 300.0, 150.0, 75.0])]
        intervals: Vec<f64>,
        /// Subblocks per summary (one value per interval, or a single
        /// value reused; bitcoin fixes k = 1).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32])]
        k: Vec<u32>,
        /// Uniform message delay in seconds.
        #[arg(long, default_value_t = 6.0)]
        delay: f64,
        /// Day observations per configuration (overrides the PoW budget).
        #[arg(long)]
        observations: Option<u32>,
        /// Emit aggregate JSON here in addition to the per-run CSV.
        #[arg(long)]
        aggregate_out: Option<PathBuf>,
    },
    /// Normalized attacker reward per (protocol, policy, alpha, gamma).
    AttackEval {
        #[arg(long, value_delimiter = ',', default_values_t = vec!["tailstorm".to_string()])]
        protocol: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec!["honest".to_string()])]
        policy: Vec<String>,
        /// Either a comma list (0.2,0.3) or a range 0.20..0.45 stepped by
        /// 0.05.
        #[arg(long, default_value = "0.20..0.45")]
        alpha: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.5, 0.95])]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long, default_value_t = 2048)]
        stop_blocks: u64,
        #[arg(long)]
        aggregate_out: Option<PathBuf>,
        /// Emit aggregates even for groups with fewer than 10 runs.
        #[arg(long)]
        force_small_aggregates: bool,
    },
    /// Minimal alpha where a dishonest policy beats honest mining.
    BreakEven {
        #[arg(long, default_value = "bitcoin")]
        protocol: String,
        #[arg(long, default_value = "sm1")]
        policy: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.5, 0.95])]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long)]
        runs_per_probe: Option<u32>,
        #[arg(long, default_value_t = 2048)]
        stop_blocks: u64,
    },
    /// Analytic orphan-rate bounds over an (interval, k) grid.
    OrphanTable {
        #[arg(long, default_value_t = 5.0)]
        tau0: f64,
        /// Full-block transmission time in seconds.
        #[arg(long, default_value_t = 2.56)]
        transmit: f64,
        #[arg(long = "T", value_delimiter = ',', default_values_t = vec![75.0, 150.0, 300.0, 600.0])]
        intervals: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 5, 10, 15])]
        k: Vec<u32>,
    },
    /// One simulation run from a JSON config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Write the block DAG as JSON lines.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Line-delimited JSON episode protocol on stdin/stdout.
    EpisodeServer,
}

fn parse_alpha_spec(spec: &str) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: f64 = lo.parse().context("alpha range start")?;
        let hi: f64 = hi.parse().context("alpha range end")?;
        if hi < lo {
            bail!("empty alpha range {spec:?}");
        }
        let mut out = Vec::new();
        let mut a = lo;
        while a <= hi + 1e-9 {
            out.push((a * 100.0).round() / 100.0);
            a += 0.05;
        }
        Ok(out)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().context("alpha value"))
            .collect()
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {path:?}")),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .ok();
    }
    match cli.command {
        Command::Fairness {
            protocol,
            intervals,
            k,
            delay,
            observations,
            aggregate_out,
        } => {
            let ks: Vec<u32> = if k.len() == 1 {
                vec![k[0]; intervals.len()]
            } else if k.len() == intervals.len() {
                k
            } else {
                bail!("--k must list one value total or one per interval");
            };
            let grid: Vec<(f64, u32)> = intervals.iter().copied().zip(ks).collect();
            let observations = observations.unwrap_or_else(|| {
                // desk scale targets 1e5 PoWs per configuration, paper
                // scale 1e6, at least 200 observations either way
                let budget = if cli.paper_scale { 1_000_000.0 } else { 100_000.0 };
                grid.iter()
                    .map(|&(t, kk)| {
                        let per_obs = FairnessConfig::day_pows(t, kk) as f64;
                        (budget / per_obs).ceil() as u32
                    })
                    .max()
                    .unwrap_or(200)
                    .max(200)
            });
            let cfg = FairnessConfig { protocol, grid, delay, observations, seed: cli.seed };
            let out = fairness(&cfg)?;
            if let Some(path) = aggregate_out {
                fs::write(&path, out.aggregates_json())?;
            }
            write_output(&cli.out, &out.csv())?;
        }
        Command::AttackEval {
            protocol,
            policy,
            alpha,
            gamma,
            k,
            n,
            runs,
            stop_blocks,
            aggregate_out,
            force_small_aggregates,
        } => {
            let cfg = AttackEvalConfig {
                protocols: protocol,
                policies: policy,
                alphas: parse_alpha_spec(&alpha)?,
                gammas: gamma,
                k,
                c: 1.0,
                n,
                lambda: 1.0,
                runs: runs.unwrap_or(if cli.paper_scale { 100 } else { 30 }),
                stop_blocks,
                seed: cli.seed,
            };
            let out = attack_eval(&cfg)?;
            if let Some(path) = aggregate_out {
                fs::write(&path, out.aggregates_json(10, force_small_aggregates))?;
            }
            write_output(&cli.out, &out.csv())?;
        }
        Command::BreakEven { protocol, policy, gamma, k, n, runs_per_probe, stop_blocks } => {
            let mut table = String::from("protocol,policy,gamma,break_even_pct\n");
            for g in gamma {
                let cfg = BreakEvenConfig {
                    protocol: protocol.clone(),
                    policy: policy.clone(),
                    gamma: g,
                    k,
                    n,
                    runs_per_probe: runs_per_probe
                        .unwrap_or(if cli.paper_scale { 100 } else { 30 }),
                    stop_blocks,
                    seed: cli.seed,
                    ..Default::default()
                };
                let res = break_even(&cfg)?;
                table.push_str(&format!(
                    "{},{},{:.2},{}\n",
                    res.protocol, res.policy, res.gamma, res.outcome_label()
                ));
            }
            write_output(&cli.out, &table)?;
        }
        Command::OrphanTable { tau0, transmit, intervals, k } => {
            let rows = orphan_table(tau0, transmit, &intervals, &k);
            write_output(&cli.out, &orphan_table_csv(&rows))?;
        }
        Command::Simulate { config, dump } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {config:?}"))?;
            let cfg: SimConfig = serde_json::from_str(&text).context("parsing config")?;
            let res = run(&cfg)?;
            let proto = cfg.protocol_instance()?;
            let tip = winning_chain(proto.as_ref(), &res.store);
            let ledger = accumulate_rewards(proto.as_ref(), &res.store, tip);
            let summary = serde_json::json!({
                "config_hash": format!("{:016x}", fnv1a64(&cfg.canonical_string())),
                "blocks": res.store.block_count(),
                "pows": res.pows,
                "deliveries": res.deliveries,
                "updates": res.updates,
                "elapsed_seconds": res.elapsed,
                "winning_tip": tip.0,
                "winning_height": res.store.block(tip).fields.height,
                "progress": ledger.progress,
                "rewards": ledger.per_miner,
                "orphan_rate": measured_orphan_rate(&res.store, tip).ok(),
            });
            if let Some(path) = dump {
                fs::write(&path, res.store.dump_jsonl())?;
            }
            write_output(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
        }
        Command::EpisodeServer => {
            episode_server::serve(std::io::stdin().lock(), std::io::stdout().lock())?;
        }
    }
    Ok(())
}
