//! `sp`: command-line front end for sparsest-permutation learning, the SGS
//! and PC baselines, assumption checks and the simulation harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sp_core::assumptions::{self, Assumption};
use sp_core::baselines::{self, Method, DEFAULT_SGS_MAX_P};
use sp_core::graph::{format_dag, parse_dag, Dag, LabelBase};
use sp_core::harness::{run_grid, ExperimentConfig};
use sp_core::oracle::io::{parse_ci_file, read_covariance_csv, read_sample_csv, write_matrix_csv, write_sample_csv};
use sp_core::oracle::{
    CiBackend, CovarianceMatrix, DsepBackend, ExplicitBackend, FisherZBackend, GaussianExactBackend, LambdaBackend,
    TestConfig,
};
use sp_core::sem::{self, GenConfig, LinearSem};
use sp_core::sp::{self, ScanMode, SpConfig, DEFAULT_CHOL_TOL, DEFAULT_MAX_P};

#[derive(Parser)]
#[command(name = "sp", version, about = "Sparsest-permutation causal structure learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the SP search.
    Learn(LearnArgs),
    /// Run SGS or PC.
    Baseline(BaselineArgs),
    /// Check an assumption for a DAG against a backend.
    Check(CheckArgs),
    /// Run a simulation grid.
    Simulate(SimulateArgs),
    /// Draw a random linear Gaussian SEM and write its graph, covariance and a sample.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    /// d-separation in the DAG file given as input.
    Dsep,
    /// CI statements listed in a file.
    Explicit,
    /// Exact zero partial correlations of a covariance matrix.
    Gaussian,
    /// Fisher-z tests on a sample.
    Fisher,
    /// |partial correlation| at most lambda.
    Lambda,
    /// Cholesky factorization of the permuted precision matrix (learn only).
    Cholesky,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Pruned,
    Lookahead,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sgs,
    Pc,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum)]
    backend: BackendKind,
    /// DAG file (dsep), CI file (explicit), covariance CSV or SEM JSON
    /// (gaussian, lambda, cholesky), sample CSV (fisher).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Start the explicit backend from the d-separations of this DAG.
    #[arg(long, value_name = "DAG")]
    dsep_of: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    lambda: Option<f64>,
    /// Zero threshold: on partial correlations (gaussian, default 1e-9) or on
    /// scaled Cholesky entries (cholesky, default 1e-7).
    #[arg(long)]
    tol: Option<f64>,
    /// Mean-center samples before estimating the covariance.
    #[arg(long)]
    center: bool,
    /// Label base for output: 0 or 1. Defaults to the input's labels.
    #[arg(long, value_parser = parse_base)]
    base: Option<LabelBase>,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_P)]
    max_p: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value = "lookahead")]
    mode: ModeArg,
    /// Seed the pruned scan with a greedy ordering.
    #[arg(long)]
    greedy_seed: bool,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = DEFAULT_SGS_MAX_P)]
    max_p: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_parser = |s: &str| s.parse::<Assumption>())]
    assumption: Assumption,
    /// DAG to check.
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// key=value or JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the configuration's thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    p: usize,
    /// Expected neighborhood size.
    #[arg(long, default_value_t = 1.0)]
    nbhd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample size; 0 skips the sample.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "0", value_parser = parse_base)]
    base: LabelBase,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_base(s: &str) -> Result<LabelBase, String> {
    match s {
        "0" => Ok(LabelBase::Zero),
        "1" => Ok(LabelBase::One),
        _ => Err(format!("base must be 0 or 1, got `{s}`")),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_dag(path: &Path) -> Result<(Dag, LabelBase)> {
    let f = parse_dag(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok((f.dag, f.base))
}

/// Covariance from a CSV matrix or, for `.json` inputs, the exact covariance of a SEM.
fn read_sigma(path: &Path) -> Result<(CovarianceMatrix, Option<LabelBase>)> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let (model, base) = LinearSem::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok((sem::covariance_of(&model)?, Some(base)));
    }
    let sigma = read_covariance_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((sigma, None))
}

struct Loaded {
    ci: Option<Box<dyn CiBackend>>,
    sigma: Option<CovarianceMatrix>,
    base: LabelBase,
    names: Option<Vec<String>>,
    warnings: usize,
}

impl BackendArgs {
    fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .with_context(|| "--input is required for this backend".to_string())
    }

    fn lambda(&self) -> Result<f64> {
        self.lambda.context("--lambda is required for the lambda backend")
    }

    fn load(&self) -> Result<Loaded> {
        let mut out = Loaded {
            ci: None,
            sigma: None,
            base: LabelBase::Zero,
            names: None,
            warnings: 0,
        };
        let mut base = None;
        match self.backend {
            BackendKind::Dsep => {
                let (dag, b) = read_dag(self.input()?)?;
                base = Some(b);
                out.ci = Some(Box::new(DsepBackend::new(dag)));
            }
            BackendKind::Explicit => {
                let start = self.dsep_of.as_deref().map(read_dag).transpose()?;
                let (p_hint, base_hint) = match &start {
                    Some((d, b)) => (Some(d.p()), Some(*b)),
                    None => (None, None),
                };
                let file = match &self.input {
                    Some(path) => parse_ci_file(&read(path)?, p_hint, base_hint)
                        .with_context(|| format!("parsing {}", path.display()))?,
                    None => parse_ci_file("", p_hint, base_hint)
                        .context("the explicit backend needs --input or --dsep-of")?,
                };
                let mut ci = match &start {
                    Some((d, _)) => ExplicitBackend::from_dag(d),
                    None => ExplicitBackend::new(file.p, [])?,
                };
                for t in &file.removed {
                    ci.remove(t.j, t.k, t.s)?;
                }
                for t in &file.added {
                    ci.add(t.j, t.k, t.s)?;
                }
                base = Some(file.base);
                out.ci = Some(Box::new(ci));
            }
            BackendKind::Gaussian | BackendKind::Lambda | BackendKind::Cholesky => {
                let (sigma, b) = read_sigma(self.input()?)?;
                base = b;
                match self.backend {
                    BackendKind::Gaussian => {
                        let zero_tol = self.tol.unwrap_or(TestConfig::default().zero_tol);
                        let cfg = TestConfig::new(self.alpha, zero_tol)?;
                        out.ci = Some(Box::new(GaussianExactBackend::new(sigma.clone(), cfg)?));
                    }
                    BackendKind::Lambda => {
                        out.ci = Some(Box::new(LambdaBackend::new(sigma.clone(), self.lambda()?)?));
                    }
                    _ => {}
                }
                out.sigma = Some(sigma);
            }
            BackendKind::Fisher => {
                let path = self.input()?;
                let data = read_sample_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
                let ci = FisherZBackend::with_centering(&data, TestConfig::with_alpha(self.alpha)?, self.center)?;
                out.names = Some(data.names().to_vec());
                out.warnings = ci.warnings();
                out.ci = Some(Box::new(ci));
            }
        }
        out.base = self.base.or(base).unwrap_or_default();
        Ok(out)
    }

    fn describe(&self, loaded: &Loaded) -> Value {
        let name = match self.backend {
            BackendKind::Dsep => "dsep",
            BackendKind::Explicit => "explicit",
            BackendKind::Gaussian => "gaussian",
            BackendKind::Fisher => "fisher",
            BackendKind::Lambda => "lambda",
            BackendKind::Cholesky => "cholesky",
        };
        let mut v = json!({ "backend": name, "base": loaded.base.offset() });
        match self.backend {
            BackendKind::Fisher => {
                v["alpha"] = json!(self.alpha);
                v["singular_warnings"] = json!(loaded.warnings);
            }
            BackendKind::Lambda => v["lambda"] = json!(self.lambda),
            BackendKind::Gaussian => v["tol"] = json!(self.tol.unwrap_or(TestConfig::default().zero_tol)),
            BackendKind::Cholesky => v["tol"] = json!(self.tol.unwrap_or(DEFAULT_CHOL_TOL)),
            _ => {}
        }
        if let Some(names) = &loaded.names {
            v["names"] = json!(names);
        }
        v
    }
}

fn merge(mut into: Value, extra: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (into.as_object_mut(), extra) {
        a.extend(b);
    }
    into
}

fn learn(args: LearnArgs) -> Result<()> {
    let loaded = args.backend.load()?;
    let cfg = SpConfig {
        max_p: args.max_p,
        threads: args.threads,
        mode: match args.mode {
            ModeArg::Exhaustive => ScanMode::Exhaustive,
            ModeArg::Pruned => ScanMode::Pruned,
            ModeArg::Lookahead => ScanMode::Lookahead,
        },
        greedy_seed: args.greedy_seed,
        vertex_order: None,
    };
    let start = Instant::now();
    let result = match (&loaded.ci, &loaded.sigma) {
        (Some(ci), _) => sp::sp_search_with(ci.as_ref(), &cfg)?,
        (None, Some(sigma)) => sp::sp_search_cholesky_with(sigma, args.backend.tol.unwrap_or(DEFAULT_CHOL_TOL), &cfg)?,
        (None, None) => unreachable!("every backend loads a CI oracle or a covariance"),
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let mut v = merge(result.to_json(loaded.base), args.backend.describe(&loaded));
    v["p"] = json!(result.winners.first().map_or(0, Dag::p));
    v["wall_time_ms"] = json!(ms);
    emit(&v, args.out.as_deref())
}

fn baseline(args: BaselineArgs) -> Result<()> {
    if args.backend.backend == BackendKind::Cholesky {
        bail!("the cholesky backend only applies to `sp learn`");
    }
    let loaded = args.backend.load()?;
    let ci = loaded.ci.as_deref().expect("non-cholesky backends load a CI oracle");
    let method = match args.method {
        MethodArg::Sgs => Method::Sgs,
        MethodArg::Pc => Method::Pc,
    };
    let start = Instant::now();
    let result = baselines::run_baseline(method, ci, args.max_p)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let mut v = merge(result.to_json(loaded.base), args.backend.describe(&loaded));
    v["p"] = json!(ci.p());
    v["wall_time_ms"] = json!(ms);
    emit(&v, args.out.as_deref())
}

fn check(args: CheckArgs) -> Result<()> {
    if args.backend.backend == BackendKind::Cholesky {
        bail!("the cholesky backend only applies to `sp learn`");
    }
    if args.assumption == Assumption::LambdaSmr && args.backend.backend != BackendKind::Lambda {
        bail!("lambda-smr needs --backend lambda with --lambda");
    }
    let (g, graph_base) = read_dag(&args.graph)?;
    let mut loaded = args.backend.load()?;
    if args.backend.base.is_none() && !matches!(args.backend.backend, BackendKind::Dsep | BackendKind::Explicit) {
        loaded.base = graph_base;
    }
    let ci = loaded.ci.as_deref().expect("non-cholesky backends load a CI oracle");
    let report = assumptions::check(args.assumption, &g, ci)?;
    let v = merge(report.to_json(loaded.base), args.backend.describe(&loaded));
    emit(&v, args.out.as_deref())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg =
        ExperimentConfig::parse(&read(&args.config)?).with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    let grid = run_grid(&cfg)?;
    let files = grid.write_outputs(&args.out_dir)?;
    eprintln!(
        "{} records in {} cells written to {}: {}",
        grid.records.len(),
        grid.cells.len(),
        args.out_dir.display(),
        files.join(", ")
    );
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let cfg = GenConfig::new(args.p, args.nbhd, args.seed, args.n.max(1))?;
    let mut rng = sem::rng_from_seed(cfg.seed);
    let model = sem::random_sem(&cfg, &mut rng);
    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| {
        fs::write(dir.join(name), body).with_context(|| format!("writing {}", dir.join(name).display()))
    };
    write("sem.json", model.to_json(args.base) + "\n")?;
    write("dag.txt", format_dag(model.dag(), args.base))?;
    write(
        "covariance.csv",
        write_matrix_csv(sem::covariance_of(&model)?.as_matrix()),
    )?;
    if args.n > 0 {
        let data = sem::sample(&model, args.n, &mut rng);
        write("sample.csv", write_sample_csv(&data))?;
    }
    eprintln!(
        "{} edges on {} vertices written to {}",
        model.dag().edge_count(),
        args.p,
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let run = match Cli::parse().command {
        Command::Learn(a) => learn(a),
        Command::Baseline(a) => baseline(a),
        Command::Check(a) => check(a),
        Command::Simulate(a) => simulate(a),
        Command::Generate(a) => generate(a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
