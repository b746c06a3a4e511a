mod config;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, Reference};
use exact_diffusion::bridge::set_p1_mutation;
use exact_diffusion::exact::{write_csv, ExactSimulator};
use exact_diffusion::validation::euler::euler_maruyama;
use exact_diffusion::validation::kde::{kde_at, silverman_bandwidth, uniform_grid};
use exact_diffusion::validation::stats::ks_two_sample;
use exact_diffusion::validation::{run_suite, SuiteConfig};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Seeds of the Euler samples are offset so they never share streams with the
/// exact sample drawn from the same config seed.
const EULER_SEED_SALT: u64 = 0x5eed_e01e_0000_0001;
const REFERENCE_SEED_SALT: u64 = 0x5eed_e01e_0000_0002;

#[derive(Parser)]
#[command(
    name = "exact-diffusion",
    version,
    about = "Exact simulation of diffusions with a discontinuous drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate skeletons and write them as CSV.
    Sample(Common),
    /// Compare X_T from the exact algorithm with an Euler–Maruyama sample.
    Compare(Common),
    /// Run the oracle test suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "EXACT_DIFFUSION_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "EXACT_DIFFUSION_THREADS")]
    threads: Option<usize>,
    /// Only run checks whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Draws per statistical comparison.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, hide = true)]
    mutate: Option<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) | Failure::Validation(m) => m,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Files are written to temporaries next to their targets and only renamed
/// into place once every output of the command has been produced.
#[derive(Default)]
struct Staged {
    files: Vec<(tempfile::NamedTempFile, PathBuf)>,
}

impl Staged {
    fn add(&mut self, target: &Path, contents: &[u8]) -> Result<(), Failure> {
        let dir = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(|e| runtime_err(format!("{}: {e}", dir.display())))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .map_err(|e| runtime_err(format!("{}: {e}", dir.display())))?;
        tmp.write_all(contents).map_err(runtime_err)?;
        self.files.push((tmp, target.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> Result<(), Failure> {
        for (tmp, target) in self.files {
            tmp.persist(&target)
                .map_err(|e| runtime_err(format!("{}: {e}", target.display())))?;
        }
        Ok(())
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&common.config).map_err(Failure::Config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn simulator(cfg: &ExperimentConfig) -> Result<ExactSimulator, Failure> {
    let drift = cfg.drift().map_err(Failure::Config)?;
    ExactSimulator::new(drift, cfg.x, cfg.t).map_err(config_err)
}

fn cmd_sample(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let sim = simulator(&cfg)?;
    let started = Instant::now();
    let paths = sim
        .sample_paths(&cfg.times, cfg.n_paths, cfg.seed, None)
        .map_err(runtime_err)?;
    let rounds: u64 = paths.iter().map(|p| p.rounds).sum();
    log::info!(
        "{} paths in {:.2}s, {:.3} rounds per path",
        paths.len(),
        started.elapsed().as_secs_f64(),
        rounds as f64 / paths.len() as f64
    );
    let mut csv = Vec::new();
    write_csv(&mut csv, &paths).map_err(runtime_err)?;
    match &cfg.output.csv {
        Some(target) => {
            let mut staged = Staged::default();
            staged.add(target, &csv)?;
            staged.commit()
        }
        None => std::io::stdout().write_all(&csv).map_err(runtime_err),
    }
}

fn cmd_compare(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let cmp = cfg
        .comparison
        .clone()
        .ok_or_else(|| Failure::Config("compare needs a comparison block".into()))?;
    let csv_target = cfg
        .output
        .csv
        .clone()
        .ok_or_else(|| Failure::Config("compare needs output.csv".into()))?;
    let json_target = cfg
        .output
        .json
        .clone()
        .unwrap_or_else(|| csv_target.with_extension("json"));
    let svg_target = cfg
        .output
        .svg
        .clone()
        .unwrap_or_else(|| csv_target.with_extension("svg"));
    let drift = cfg.drift().map_err(Failure::Config)?;

    let started = Instant::now();
    let (reference, mean_rounds) = match cmp.reference {
        Reference::Exact => {
            let sim = simulator(&cfg)?;
            let paths = sim
                .sample_paths(&[], cfg.n_paths, cfg.seed, None)
                .map_err(runtime_err)?;
            let rounds = paths.iter().map(|p| p.rounds).sum::<u64>() as f64 / paths.len() as f64;
            (
                paths.iter().map(|p| p.terminal().x).collect::<Vec<_>>(),
                Some(rounds),
            )
        }
        Reference::Euler => (
            euler_maruyama(
                &drift,
                cfg.x,
                cfg.t,
                cmp.dt,
                cfg.n_paths,
                cfg.seed ^ REFERENCE_SEED_SALT,
            )
            .map_err(runtime_err)?,
            None,
        ),
    };
    let reference_seconds = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let euler = euler_maruyama(
        &drift,
        cfg.x,
        cfg.t,
        cmp.dt,
        cmp.n,
        cfg.seed ^ EULER_SEED_SALT,
    )
    .map_err(runtime_err)?;
    let euler_seconds = started.elapsed().as_secs_f64();

    let ks = ks_two_sample(&reference, &euler);
    let (h_ref, h_euler) = (silverman_bandwidth(&reference), silverman_bandwidth(&euler));
    let lo = reference
        .iter()
        .chain(&euler)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = reference
        .iter()
        .chain(&euler)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 3.0 * h_ref.max(h_euler);
    let grid = uniform_grid(lo - pad, hi + pad);
    let k_ref = kde_at(&reference, h_ref, &grid);
    let k_euler = kde_at(&euler, h_euler, &grid);
    let mut csv = String::from("grid,kde_exact,kde_euler\n");
    for ((g, a), b) in grid.iter().zip(&k_ref).zip(&k_euler) {
        csv.push_str(&format!("{g:?},{a:?},{b:?}\n"));
    }
    let svg = svg::render(&csv).map_err(runtime_err)?;
    let report = json!({
        "config": cfg,
        "reference": cmp.reference,
        "n_exact": reference.len(),
        "n_euler": euler.len(),
        "dt": cmp.dt,
        "ks_statistic": ks.statistic,
        "p_value": ks.p_value,
        "bandwidth_exact": h_ref,
        "bandwidth_euler": h_euler,
        "mean_rounds": mean_rounds,
        "timing": {
            "exact_total_seconds": reference_seconds,
            "euler_total_seconds": euler_seconds,
        },
    });
    log::info!("KS D = {:.5}, p = {:.4}", ks.statistic, ks.p_value);
    let mut staged = Staged::default();
    staged.add(&csv_target, csv.as_bytes())?;
    staged.add(&svg_target, svg.as_bytes())?;
    let text = serde_json::to_string_pretty(&report).map_err(runtime_err)?;
    staged.add(&json_target, text.as_bytes())?;
    staged.commit()
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(p) => Some(ExperimentConfig::load(p).map_err(Failure::Config)?),
        None => None,
    };
    let settings = cfg.as_ref().and_then(|c| c.validate.clone());
    let mut suite = SuiteConfig::default();
    if let Some(seed) = args.seed.or(cfg.as_ref().map(|c| c.seed)) {
        suite.seed = seed;
    }
    if let Some(n) = args.n.or(settings.as_ref().and_then(|s| s.n)) {
        if n < 100 {
            return Err(Failure::Config("n must be at least 100".into()));
        }
        suite.n = n;
    }
    if let Some(k) = settings.as_ref().and_then(|s| s.param_sets) {
        suite.param_sets = k.max(1);
    }
    let filter = args.filter.clone().or(settings.and_then(|s| s.filter));
    match args.mutate.as_deref() {
        None => {}
        Some("p1") => set_p1_mutation(1.05),
        Some(other) => return Err(Failure::Config(format!("unknown mutation {other}"))),
    }

    let report = run_suite(filter.as_deref(), &suite);
    for r in &report.reports {
        eprintln!(
            "{} {} {:.6} {} {:.6} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.statistic,
            r.direction,
            r.threshold,
            r.detail
        );
    }
    let text = serde_json::to_string_pretty(&report).map_err(runtime_err)?;
    match cfg.as_ref().and_then(|c| c.output.json.clone()) {
        Some(target) => {
            let mut staged = Staged::default();
            staged.add(&target, text.as_bytes())?;
            staged.commit()?;
        }
        None => println!("{text}"),
    }
    if report.reports.is_empty() {
        return Err(Failure::Config(format!(
            "no check matches filter {filter:?}"
        )));
    }
    if report.pass {
        Ok(())
    } else {
        let failed = report.reports.iter().filter(|r| !r.pass).count();
        Err(Failure::Validation(format!(
            "{failed} of {} checks failed, uncovered samplers: {:?}",
            report.reports.len(),
            report.uncovered
        )))
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure> {
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(runtime_err)?
            .install(f),
        None => f(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Sample(c) => with_threads(c.threads, || cmd_sample(c)),
        Command::Compare(c) => with_threads(c.threads, || cmd_compare(c)),
        Command::Validate(v) => with_threads(v.threads, || cmd_validate(v)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
