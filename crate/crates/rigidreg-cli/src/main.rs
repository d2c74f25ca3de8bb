//! Command line front end: register a correspondence file, generate
//! synthetic instances, or run a benchmark grid.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags), 1 on runtime
//! failures; the failure message goes to stderr and carries the library's
//! stable `Signal*` token when the pipeline itself refused the input.

mod bench;
mod io;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rigidreg::eval::{inlier_metrics, rotation_error, translation_error};
use rigidreg::synth::{generate, generate_from, SynthConfig};
use rigidreg::{register, PipelineConfig, RegistrationReport, SamplingStrategy};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rigidreg", version, about = "Robust rigid 3D registration from putative correspondences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a rigid motion from a correspondence file.
    Register(RegisterArgs),
    /// Generate a synthetic correspondence file plus a ground-truth sidecar.
    Synth(SynthArgs),
    /// Run a Monte Carlo benchmark grid and emit per-trial CSV rows.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RegisterArgs {
    /// Correspondence file: one "x1 x2 x3 y1 y2 y3" line per pair.
    #[arg(long)]
    corr: PathBuf,
    /// Inlier threshold on the residual.
    #[arg(long)]
    xi: f64,
    /// Samples drawn for the translation stage.
    #[arg(long, default_value_t = 15)]
    kt: usize,
    /// Spheres each translation shell is discretized into.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Samples drawn for the axis stage.
    #[arg(long, default_value_t = 8)]
    kr: usize,
    /// Circles each axis band is discretized into.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Minimal branch width of the translation search.
    #[arg(long, default_value_t = 1e-3)]
    psi: f64,
    /// Seed for the randomized sampling strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip compatibility verification of stabbing candidates.
    #[arg(long)]
    no_verify: bool,
    /// How the guided stages pick their samples.
    #[arg(long, value_enum, default_value_t = SamplingArg::Valid)]
    sampling: SamplingArg,
    /// Score the estimate against this ground-truth sidecar and include
    /// the error metrics in the summary.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the pose JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    /// Compatibility priority order (the default).
    Valid,
    /// Uniform random samples.
    Random,
    /// Raw compatibility score order.
    Score,
}

impl From<SamplingArg> for SamplingStrategy {
    fn from(arg: SamplingArg) -> Self {
        match arg {
            SamplingArg::Valid => SamplingStrategy::Valid,
            SamplingArg::Random => SamplingStrategy::Random,
            SamplingArg::Score => SamplingStrategy::ScoreOnly,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Number of correspondences (ignored when --source is given).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Outlier ratio in [0, 1).
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    /// Noise ball radius applied to inlier targets.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Ball radius the replaced outlier targets are drawn from.
    #[arg(long, default_value_t = 5.0)]
    outlier_radius: f64,
    /// Ball radius the true translation is drawn from.
    #[arg(long, default_value_t = 1.0)]
    tmax: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Move this source cloud (one "x1 x2 x3" line per point) instead of
    /// drawing unit-cube points.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Correspondence file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth sidecar path; defaults to OUT with ".truth.json" appended.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated correspondence counts.
    #[arg(long = "grid-n", value_delimiter = ',', default_value = "1000")]
    grid_n: Vec<usize>,
    /// Comma-separated outlier ratios.
    #[arg(long = "grid-rho", value_delimiter = ',', default_value = "0.5,0.7,0.9")]
    grid_rho: Vec<f64>,
    /// Monte Carlo trials per grid cell.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated method tokens: "staged" or "ransac-<count>[k]".
    #[arg(long, value_delimiter = ',', default_value = "staged,ransac-1k")]
    methods: Vec<String>,
    /// Inlier threshold handed to every method.
    #[arg(long, default_value_t = 0.05)]
    xi: f64,
    /// Noise ball radius of the synthetic instances.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Success bound on the rotation error, degrees.
    #[arg(long = "success-er", default_value_t = 5.0)]
    success_er: f64,
    /// Success bound on the translation error.
    #[arg(long = "success-et", default_value_t = 0.1)]
    success_et: f64,
    /// Base seed; trial seeds count up from it within each grid cell.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Register(args) => cmd_register(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_register(args: RegisterArgs) -> Result<()> {
    let set = io::read_correspondences(&args.corr)?;
    let mut cfg = PipelineConfig::new(args.xi);
    cfg.k_t = args.kt;
    cfg.m = args.m;
    cfg.k_r = args.kr;
    cfg.n = args.n;
    cfg.psi = args.psi;
    cfg.seed = args.seed;
    cfg.use_verification = !args.no_verify;
    cfg.sampling = args.sampling.into();

    let report = register(&set, &cfg)?;
    let pose = io::PoseFile::new(&report.transform, report.consensus.as_slice());
    let mut summary = describe(&report, set.len());
    if let Some(truth_path) = &args.truth {
        summary.push('\n');
        summary.push_str(&score_against_truth(&report, set.len(), truth_path)?);
    }
    match &args.out {
        Some(path) => {
            io::write_json(path, &pose)?;
            println!("{summary}");
            println!("pose written to {}", path.display());
        }
        None => {
            // Keep stdout machine-readable; the summary goes to stderr.
            println!("{}", serde_json::to_string_pretty(&pose)?);
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn score_against_truth(
    report: &RegistrationReport,
    total: usize,
    truth_path: &std::path::Path,
) -> Result<String> {
    let truth: io::TruthFile = io::read_json(truth_path)?;
    if truth.inlier_mask.len() != total {
        anyhow::bail!(
            "{}: inlier mask covers {} correspondences, the input has {}",
            truth_path.display(),
            truth.inlier_mask.len(),
            total
        );
    }
    let tf = truth.transform();
    let er = rotation_error(&report.transform.rotation, &tf.rotation);
    let et = translation_error(&report.transform.translation, &tf.translation);
    let m = inlier_metrics(report.consensus.as_slice(), &truth.mask());
    Ok(format!(
        "E_R {er:.4} deg | E_t {et:.6} | IP {:.4} | IR {:.4} | F1 {:.4}",
        m.precision, m.recall, m.f1
    ))
}

fn describe(report: &RegistrationReport, total: usize) -> String {
    let [s1, s2, s3] = report.stage_sizes;
    let ms = |i: usize| report.stage_times[i].as_secs_f64() * 1e3;
    format!(
        "consensus {} of {} | stage sizes {} -> {} -> {} | stage times {:.2} + {:.2} + {:.2} ms",
        report.consensus.len(),
        total,
        s1,
        s2,
        s3,
        ms(0),
        ms(1),
        ms(2)
    )
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(args.n, args.rho, args.seed);
    cfg.noise_radius = args.noise;
    cfg.outlier_radius = args.outlier_radius;
    cfg.t_max = args.tmax;

    let inst = match &args.source {
        Some(path) => {
            let cloud = io::read_source_cloud(path)?;
            let eff = SynthConfig {
                n: cloud.len(),
                ..cfg
            };
            eff.validate()?;
            generate_from(&cfg, &cloud)
        }
        None => {
            cfg.validate()?;
            generate(&cfg)
        }
    };

    io::write_correspondences(&args.out, &inst.set)?;
    let truth_path = args
        .truth
        .unwrap_or_else(|| PathBuf::from(format!("{}.truth.json", args.out.display())));
    io::write_json(&truth_path, &io::TruthFile::new(&inst))?;
    eprintln!(
        "wrote {} pairs ({} true inliers) to {}, truth to {}",
        inst.set.len(),
        inst.true_inliers(),
        args.out.display(),
        truth_path.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let methods = args
        .methods
        .iter()
        .map(|tok| bench::Method::parse(tok))
        .collect::<Result<Vec<_>>>()?;
    let spec = bench::BenchSpec {
        grid_n: args.grid_n,
        grid_rho: args.grid_rho,
        trials: args.trials,
        methods,
        xi: args.xi,
        noise: args.noise,
        success_er: args.success_er,
        success_et: args.success_et,
        seed: args.seed,
    };

    let rows = bench::run_grid(&spec);
    let summary = bench::summarize(&rows, spec.success_er, spec.success_et);
    match &args.out {
        Some(path) => {
            let mut buf = Vec::new();
            bench::write_csv(&mut buf, &rows)?;
            std::fs::write(path, buf)
                .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
            bench::write_summary(std::io::stdout().lock(), &summary)?;
            println!("csv written to {}", path.display());
        }
        None => {
            bench::write_csv(std::io::stdout().lock(), &rows)?;
            bench::write_summary(std::io::stderr().lock(), &summary)?;
        }
    }
    Ok(())
}
