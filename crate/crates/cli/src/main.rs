//! `ffbm` command-line interface.

mod artifacts;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ffbm::analysis::{reduce_dimension, summarize_weights};
use ffbm::datagen::{generate, GeneratorSpec};
use ffbm::io::{load_network, write_edge_list, write_features, GroundTruth};
use ffbm::pipeline::{aggregate, evaluate, fit_weights, infer_blocks, run_repetition, split, BlockStage};
use ffbm::rng::{derive_seed, Stream};
use ffbm::{estimate_responsibilities, Error, LabelledNetwork, RunConfig};
use rayon::prelude::*;

use artifacts::RepDir;

#[derive(Debug, Parser)]
#[command(name = "ffbm", version, about = "Feature-first block model inference on labelled networks")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Configuration file: JSON object or `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Configuration override, e.g. `--set B=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic assortative instance with its ground truth.
    Generate(GenerateArgs),
    /// Run the block chain and estimate responsibilities.
    SampleBlocks(RepArg),
    /// Run the weight chain on the training vertices.
    SampleTheta {
        #[command(flatten)]
        rep: RepArg,
        /// Use only the features kept by `reduce`.
        #[arg(long)]
        reduced: bool,
    },
    /// Screen features using the retained weights.
    Reduce(RepArg),
    /// Evaluate every repetition with saved chains and summarise them.
    Report,
    /// Full pipeline over all repetitions.
    Run {
        /// Repetitions to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Args)]
struct RepArg {
    #[arg(long, default_value_t = 0)]
    repetition: usize,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 300)]
    vertices: usize,
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    /// Fair-coin features carrying no block information.
    #[arg(long, default_value_t = 3)]
    noise_features: usize,
    /// Weight of each block's own indicator feature.
    #[arg(long, default_value_t = 5.0)]
    strength: f64,
    #[arg(long, default_value_t = 0.1)]
    omega_in: f64,
    #[arg(long, default_value_t = 0.01)]
    omega_out: f64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::NumericFailure(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn resolve_config(g: &GlobalArgs) -> ffbm::Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for o in &g.overrides {
        cfg = cfg.with_override(o)?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load(cfg: &RunConfig) -> ffbm::Result<LabelledNetwork> {
    let edges = cfg
        .edges
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("no edge list configured (set `edges`)".into()))?;
    load_network(edges, cfg.features.as_deref(), cfg.categorical.as_deref())
}

fn execute(cli: Cli) -> ffbm::Result<()> {
    let g = &cli.global;
    let cfg = resolve_config(g)?;
    let out = &g.out_dir;
    std::fs::create_dir_all(out)?;
    match cli.command {
        Command::Generate(args) => generate_instance(&cfg, out, &args),
        Command::SampleBlocks(r) => {
            let net = load(&cfg)?;
            check_repetition(&cfg, r.repetition)?;
            let blocks = infer_blocks(&net, &cfg, r.repetition as u64)?;
            let dir = RepDir::create(out, r.repetition)?;
            dir.write_blocks(&blocks)?;
            eprintln!(
                "repetition {}: block acceptance {:.3}, {} partitions retained",
                r.repetition,
                blocks.chain.acceptance_rate,
                blocks.chain.samples.len()
            );
            Ok(())
        }
        Command::SampleTheta { rep, reduced } => {
            let net = load(&cfg)?;
            check_repetition(&cfg, rep.repetition)?;
            let dir = RepDir::open(out, rep.repetition)?;
            let blocks = dir.read_blocks(cfg.num_blocks)?;
            let split = split(&net, &cfg, rep.repetition as u64)?;
            let chain = if reduced {
                let set = dir.read_reduction()?;
                let chain_cfg = cfg
                    .reduced_theta_chain(rep.repetition as u64)
                    .ok_or_else(|| Error::InvalidArgument("`--reduced` needs k and D_prime".into()))?;
                let chain = fit_weights(&net, &blocks.responsibilities.matrix, &split, Some(&set.kept), &chain_cfg)?;
                let names: Vec<String> = set.kept.iter().map(|&d| net.features().names()[d].clone()).collect();
                dir.write_theta(&chain, &names, true)?;
                chain
            } else {
                let chain = fit_weights(&net, &blocks.responsibilities.matrix, &split, None, &cfg.theta_chain(rep.repetition as u64))?;
                dir.write_theta(&chain, net.features().names(), false)?;
                chain
            };
            eprintln!("repetition {}: acceptance ratio {:.3}", rep.repetition, chain.acceptance_rate());
            Ok(())
        }
        Command::Reduce(r) => {
            let (k, target) = match (cfg.k, cfg.reduced_dim) {
                (Some(k), Some(t)) => (k, t),
                _ => return Err(Error::InvalidArgument("reduce needs k and D_prime".into())),
            };
            let net = load(&cfg)?;
            let dir = RepDir::open(out, r.repetition)?;
            let theta = dir.read_theta(false)?;
            let set = reduce_dimension(&summarize_weights(&theta.samples)?, k, target)?;
            dir.write_reduction(&set, net.features().names())?;
            eprintln!("repetition {}: kept {:?} at cutoff {}", r.repetition, set.kept, set.cutoff);
            Ok(())
        }
        Command::Report => {
            let net = load(&cfg)?;
            let mut reports = Vec::new();
            for rep in 0..cfg.n {
                let dir = RepDir::path(out, rep);
                if !dir.join(artifacts::THETA_CHAIN).exists() {
                    continue;
                }
                let dir = RepDir::open(out, rep)?;
                let blocks = dir.read_blocks(cfg.num_blocks)?;
                let theta = dir.read_theta(false)?;
                let reduced = if dir.has_reduced_theta() {
                    Some((dir.read_reduction()?, dir.read_theta(true)?))
                } else {
                    None
                };
                let split = split(&net, &cfg, rep as u64)?;
                let report = evaluate(&net, rep, &blocks, &split, &theta, reduced.as_ref())?;
                dir.write_report(&report)?;
                reports.push(report);
            }
            if reports.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "no repetition under {} has a weight chain; run sample-blocks and sample-theta first",
                    out.display()
                )));
            }
            finish(&net, &cfg, out, reports)
        }
        Command::Run { jobs } => {
            let net = load(&cfg)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let results = pool.install(|| {
                (0..cfg.n)
                    .into_par_iter()
                    .map(|rep| run_repetition(&net, &cfg, rep))
                    .collect::<ffbm::Result<Vec<_>>>()
            })?;
            let mut reports = Vec::with_capacity(results.len());
            for (rep, res) in results.into_iter().enumerate() {
                let dir = RepDir::create(out, rep)?;
                dir.write_blocks(&res.blocks)?;
                dir.write_theta(&res.theta, net.features().names(), false)?;
                if let Some((set, chain)) = &res.reduced {
                    dir.write_reduction(set, net.features().names())?;
                    let names: Vec<String> = set.kept.iter().map(|&d| net.features().names()[d].clone()).collect();
                    dir.write_theta(chain, &names, true)?;
                }
                dir.write_report(&res.report)?;
                reports.push(res.report);
            }
            finish(&net, &cfg, out, reports)
        }
    }
}

fn check_repetition(cfg: &RunConfig, rep: usize) -> ffbm::Result<()> {
    if rep >= cfg.n {
        return Err(Error::InvalidArgument(format!("repetition {rep} is outside 0..{}", cfg.n)));
    }
    Ok(())
}

fn finish(net: &LabelledNetwork, cfg: &RunConfig, out: &Path, reports: Vec<ffbm::analysis::EvaluationReport>) -> ffbm::Result<()> {
    let summary = aggregate(net, cfg.num_blocks, reports)?;
    artifacts::write_json(&out.join("summary.json"), &summary)?;
    artifacts::write_json(&out.join("config.json"), cfg)?;
    let ms = |m: &ffbm::pipeline::MeanStd| format!("{:.3} ± {:.3}", m.mean, m.std);
    println!("repetitions      {}", summary.repetitions.len());
    println!("S_e              {}", ms(&summary.mean_description_length));
    println!("L0 (train)       {}", ms(&summary.train_loss));
    println!("L1 (test)        {}", ms(&summary.test_loss));
    if let (Some(c), Some(l0), Some(l1)) = (&summary.cutoff, &summary.reduced_train_loss, &summary.reduced_test_loss) {
        println!("c*               {}", ms(c));
        println!("L0 (reduced)     {}", ms(l0));
        println!("L1 (reduced)     {}", ms(l1));
    }
    Ok(())
}

fn generate_instance(cfg: &RunConfig, out: &Path, a: &GenerateArgs) -> ffbm::Result<()> {
    if a.blocks == 0 || a.vertices == 0 {
        return Err(Error::InvalidArgument("need at least one vertex and one block".into()));
    }
    let seed = derive_seed(cfg.seed, Stream::Generator, 0);
    let spec = GeneratorSpec::assortative(a.vertices, a.blocks, a.noise_features, a.strength, a.omega_in, a.omega_out, seed);
    let inst = generate(&spec)?;
    let net = &inst.network;
    write_edge_list(net, std::fs::File::create(out.join("edges.txt"))?)?;
    write_features(net.features(), std::fs::File::create(out.join("features.csv"))?)?;
    artifacts::write_json(&out.join("truth.json"), &GroundTruth::new(&inst.labels, &inst.weights, net.features().names()))?;
    std::fs::write(
        out.join("run.cfg"),
        format!("edges = edges.txt\nfeatures = features.csv\nB = {}\n", a.blocks),
    )?;
    eprintln!(
        "wrote {} vertices, {} edges, {} features to {}",
        net.num_vertices(),
        net.num_edges(),
        net.features().num_cols(),
        out.display()
    );
    Ok(())
}

/// Responsibilities are recomputed from the saved chain rather than trusted
/// from the CSV, so staged and one-shot runs agree bit for bit.
fn block_stage(chain: ffbm::BChainOutput, num_blocks: usize) -> ffbm::Result<BlockStage> {
    let responsibilities = estimate_responsibilities(&chain.samples, &chain.initial, num_blocks)?;
    Ok(BlockStage { chain, responsibilities })
}
