//! `ktree`: grow, prune and measure k-ary growing trees, run experiments
//! and verify identities.
//!
//! Exit status: 0 on success, 1 when a verification suite fails, 2 on
//! usage errors and invalid parameters.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ktree::crp::{crp_run, trajectory_csv};
use ktree::harness::checks::{
    crp_suite, dirichlet_suite, mark_pushforward_suite, mark_suite, martingale_suite, mb_suite, metric_suite, qn_suite,
    Suite,
};
use ktree::harness::{run_experiment, ExperimentKind, ExperimentSpec};
use ktree::marginals::marginal_tree;
use ktree::rng::replicate;
use ktree::treegrow::GrowingTree;

#[derive(Parser)]
#[command(name = "ktree", version, about = "Growing k-ary trees and their scaling limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow T_n(k) and print it as JSON.
    Grow {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print the marginal tree T^p_n as JSON.
    Marginal {
        #[command(flatten)]
        source: TreeSource,
        #[arg(long)]
        p: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Prune labels above k' and print the pruned tree with I_n.
    Prune {
        #[command(flatten)]
        source: TreeSource,
        #[arg(long)]
        kp: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run an (alpha, theta) restaurant and print its trajectory as CSV.
    Crp {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        steps: u64,
        /// Initial table sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        init: Vec<u64>,
        #[arg(long)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run an identity suite; exits 1 when a check fails.
    Verify(VerifyArgs),
    /// Run a harness experiment and write its CSV and summary JSON.
    Experiment(ExperimentArgs),
}

/// A tree read from `--input`, or grown from `--k`, `--n` and `--seed`.
#[derive(Args)]
struct TreeSource {
    #[arg(long, conflicts_with_all = ["k", "n", "seed"])]
    input: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteName {
    Qn,
    Dirichlet,
    Mark,
    Metric,
    Martingale,
    Mb,
    Crp,
}

#[derive(Args)]
struct VerifyArgs {
    suite: SuiteName,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Largest n for qn; steps for martingale and mb.
    #[arg(long)]
    nmax: Option<u64>,
    /// Monte Carlo samples, draws, pairs or transitions, by suite.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// spine, subtree_ratio, leaf_height, height_scaling, split_convergence,
    /// mark_pushforward, markov_branching or martingale.
    kind: String,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    kp: Option<usize>,
    /// Size or comma-separated grid of sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    test_function: Option<String>,
    #[arg(long)]
    quad_samples: Option<u64>,
    /// Per-replicate CSV destination.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Summary JSON destination; stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<ktree::Error> for Failure {
    fn from(e: ktree::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn load_tree(source: &TreeSource) -> Result<GrowingTree, Failure> {
    if let Some(path) = &source.input {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        return Ok(GrowingTree::from_json(&text)?);
    }
    match (source.k, source.n, source.seed) {
        (Some(k), Some(n), Some(seed)) => Ok(GrowingTree::grown(k, n, &mut replicate(seed, 0))?),
        _ => Err(Failure::Usage("give --input, or all of --k, --n and --seed".into())),
    }
}

fn verify(args: &VerifyArgs) -> Result<Vec<Suite>, Failure> {
    let k = args.k;
    let samples = |d: u64| args.samples.unwrap_or(d);
    let steps = |d: u64| args.nmax.unwrap_or(d);
    Ok(match args.suite {
        SuiteName::Qn => vec![qn_suite(k, steps(4))?],
        SuiteName::Dirichlet => {
            let n = samples(1_000_000);
            vec![dirichlet_suite(n, args.seed)?, mark_pushforward_suite(&[(3, 2), (4, 2), (4, 3)], n, args.seed)?]
        }
        SuiteName::Mark => vec![mark_suite(samples(100_000), args.seed)?],
        SuiteName::Metric => vec![metric_suite(samples(500), args.seed)?],
        SuiteName::Martingale => vec![martingale_suite(k, steps(4), samples(200), args.seed)?],
        SuiteName::Mb => vec![mb_suite(k, steps(3))?],
        SuiteName::Crp => vec![crp_suite(k, 2, samples(100_000), args.seed)?],
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Grow { k, n, seed, output } => {
            let tree = GrowingTree::grown(k, n, &mut replicate(seed, 0))?;
            emit(output.as_deref(), &tree.to_json())
        }
        Command::Marginal { source, p, output } => {
            let tree = load_tree(&source)?;
            emit(output.as_deref(), &marginal_tree(&tree, p)?.to_json())
        }
        Command::Prune { source, kp, output } => {
            let tree = load_tree(&source)?;
            let pruned = tree.prune_labels(kp)?;
            let doc = serde_json::json!({
                "retained_internal": pruned.retained_internal,
                "tree": pruned.tree.to_json_value(),
            });
            emit(output.as_deref(), &doc.to_string())
        }
        Command::Crp { alpha, theta, steps, init, seed, output } => {
            let (_, rows) = crp_run(alpha, theta, steps, &init, &mut replicate(seed, 0))?;
            emit(output.as_deref(), &trajectory_csv(&rows))
        }
        Command::Verify(args) => {
            let suites = verify(&args)?;
            for s in &suites {
                for c in &s.checks {
                    println!("{} {}: {} ({})", if c.passed { "ok  " } else { "FAIL" }, s.name, c.name, c.detail);
                }
            }
            let failed: Vec<String> = suites.iter().flat_map(|s| s.failures()).map(|c| c.name.clone()).collect();
            match failed.first() {
                Some(name) => Err(Failure::Verification(format!("invariant failed: {name}"))),
                None => Ok(()),
            }
        }
        Command::Experiment(args) => {
            let mut spec = ExperimentSpec::new(ExperimentKind::parse(&args.kind)?, args.k, args.n, args.reps, args.seed);
            spec.kp = args.kp;
            spec.test_function = args.test_function;
            if let Some(q) = args.quad_samples {
                spec.quadrature_samples = q;
            }
            let out = run_experiment(&spec)?;
            if let Some(path) = &args.csv {
                emit(Some(path), &out.csv)?;
            }
            emit(args.json.as_deref(), &out.summary_json())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("ktree: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("ktree: {msg}");
            eprintln!("run `ktree --help` for usage");
            ExitCode::from(2)
        }
    }
}
