use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prunadag::harness::{self, build_instance, load_config, ExperimentConfig};
use prunadag::problems::read_vector;
use prunadag::pruning::{achieved_sparsity, robustness, PruneTarget};
use prunadag::Result;

#[derive(Parser)]
#[command(
    name = "prunadag",
    version,
    about = "Pruning-aware adaptive gradient experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    master_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured optimizer on every seed.
    Run { config: PathBuf },
    /// Run prunAdag V1-V4 alongside the relevant-only ablation.
    Ablation { config: PathBuf },
    /// Check the descent inequality and complexity bound on stored runs.
    Verify { trace_dir: PathBuf },
    /// Prune a stored solution and report sparsity (and rho/omega with --config).
    Prune {
        solution: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            conflicts_with = "delta",
            required_unless_present = "delta"
        )]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        /// Experiment config describing the problem the solution belongs to.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Which seed of that config to rebuild.
        #[arg(long, default_value_t = 0)]
        seed_index: usize,
    },
}

fn apply_overrides(cfg: &mut ExperimentConfig, g: &Global) {
    if let Some(j) = g.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = g.master_seed {
        cfg.master_seed = s;
    }
}

fn run_and_write(cfg: &ExperimentConfig, ablation: bool) -> Result<()> {
    let res = if ablation {
        harness::ablation_relevant_only(cfg)?
    } else {
        harness::run_experiment(cfg)?
    };
    let diverged = res.runs.iter().filter(|r| r.diverged.is_some()).count();
    let written = harness::write_results(&res, &cfg.out_dir)?;
    println!(
        "{} runs ({} diverged), {} files written to {}",
        res.runs.len(),
        diverged,
        written.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn verify(dir: &Path) -> Result<bool> {
    let rows = harness::verify_dir(dir)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    eprintln!("{} runs checked, {failed} with violations", rows.len());
    Ok(failed == 0)
}

fn prune(
    solution: &Path,
    sigma: &[f64],
    delta: &[f64],
    config: Option<&PathBuf>,
    seed_index: usize,
    g: &Global,
) -> Result<()> {
    let x = read_vector(solution)?;
    let instance = match config {
        Some(p) => {
            let mut cfg = load_config(p)?;
            apply_overrides(&mut cfg, g);
            let seed = *cfg
                .seeds
                .get(seed_index)
                .ok_or_else(|| prunadag::Error::Config {
                    key: "seed_index".into(),
                    msg: format!("config has {} seeds", cfg.seeds.len()),
                })?;
            Some(build_instance(
                &cfg.problem,
                cfg.master_seed,
                seed,
                seed_index,
            )?)
        }
        None => None,
    };
    let targets: Vec<PruneTarget> = sigma
        .iter()
        .map(|&s| PruneTarget::Sparsity(s))
        .chain(delta.iter().map(|&d| PruneTarget::Threshold(d)))
        .collect();
    let mut out = std::io::stdout().lock();
    writeln!(out, "target_kind,target_value,achieved_sparsity,rho,omega")?;
    for t in targets {
        let pruned = t.apply(&x)?;
        let (rho, omega) = match &instance {
            Some(inst) => {
                let (r, o) = robustness(&x, &pruned, &inst.problem)?;
                (r.to_string(), o.to_string())
            }
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{rho},{omega}",
            t.kind(),
            t.value(),
            achieved_sparsity(&pruned)
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } | Command::Ablation { config } => {
            load_config(config).and_then(|mut cfg| {
                apply_overrides(&mut cfg, &cli.global);
                run_and_write(&cfg, matches!(cli.command, Command::Ablation { .. }))
            })
        }
        Command::Verify { trace_dir } => match verify(trace_dir) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::Prune {
            solution,
            sigma,
            delta,
            config,
            seed_index,
        } => prune(
            solution,
            sigma,
            delta,
            config.as_ref(),
            *seed_index,
            &cli.global,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
