use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsejl::diagnostics::{self, PairMode};
use sparsejl::io::{self as dataio, DataFormat};
use sparsejl::params::{self, Scenario};
use sparsejl::{hardness, rng, subspace, Constants, Dataset, SparseJlMatrix};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (matrix format_version 1)");

#[derive(Parser, Debug)]
#[command(name = "sparsejl", version = VERSION, about = "Sparse Johnson-Lindenstrauss embeddings and their diagnostics")]
struct Cli {
    /// Root seed; every random choice is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads. Output does not depend on this.
    #[arg(long, global = true, env = "SPARSEJL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print target dimension, sparsity and head size for a scenario.
    Plan(PlanArgs),
    /// Sample an embedding matrix and write it.
    Sample(SampleArgs),
    /// Embed a dataset; writes one CSV row per point.
    Embed(EmbedArgs),
    /// Pairwise distortion report of a matrix on a dataset.
    Distortion(DistortionArgs),
    /// Search the constant grid for a success target.
    Calibrate(CalibrateArgs),
    /// Gram-spectrum distortion on a subspace.
    SubspaceEval(SubspaceArgs),
    /// Sketch-and-solve least squares.
    Regress(RegressArgs),
    /// Write the subset-indicator hard instance.
    HardInstance(HardInstanceArgs),
    /// Brute-force check of the heavy-subset count bound.
    VerifyLemma7(HeavyCountArgs),
    /// Success frequency on the hard instance across sparsities (CSV).
    LbSweep(SweepArgs),
    /// Head/tail diagnostic battery on a dataset.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct ConstantArgs {
    /// Dimension constant.
    #[arg(long = "cm", default_value_t = 1.0)]
    c_m: f64,
    /// Sparsity constant.
    #[arg(long = "cs", default_value_t = 1.0)]
    c_s: f64,
}

impl ConstantArgs {
    fn get(self) -> sparsejl::Result<Constants> {
        Constants::new(self.c_m, self.c_s)
    }
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<u64>,
    /// Plan a subspace embedding of this dimension instead.
    #[arg(long, conflicts_with_all = ["n", "d"])]
    k: Option<usize>,
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    constants: ConstantArgs,
    #[arg(long)]
    pretty: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every column's rows and signs instead of the header only.
    #[arg(long)]
    explicit: bool,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// `sparse` or `csv`; guessed from the extension when absent.
    #[arg(long)]
    format: Option<DataFormat>,
    /// Sparse indices start at 1.
    #[arg(long)]
    one_based: bool,
}

impl DataArgs {
    fn load(&self, dim: usize) -> Result<Dataset, Failure> {
        dataio::read_dataset(&self.data, self.format, Some(dim), self.one_based).map_err(|e| at(&self.data, e))
    }
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
enum Pairs {
    All,
    Sample(usize),
}

fn parse_pairs(s: &str) -> Result<Pairs, String> {
    if s == "all" {
        return Ok(Pairs::All);
    }
    s.parse().map(Pairs::Sample).map_err(|_| format!("expected `all` or a pair count, got {s:?}"))
}

#[derive(Args, Debug)]
struct DistortionArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    eps: f64,
    /// `all` or a number of uniformly sampled pairs.
    #[arg(long, default_value = "all", value_parser = parse_pairs)]
    pairs: Pairs,
    /// Also write every evaluated pair as CSV.
    #[arg(long)]
    dump_pairs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    d: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.95)]
    target: f64,
    /// Trials per grid point.
    #[arg(long, default_value_t = 200)]
    budget: usize,
}

#[derive(Args, Debug)]
struct SubspaceArgs {
    /// CSV whose rows span the subspace.
    #[arg(long, required_unless_present = "random_k", conflicts_with = "random_k")]
    basis: Option<PathBuf>,
    /// Use a random k-dimensional subspace of R^d.
    #[arg(long, requires = "d")]
    random_k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    constants: ConstantArgs,
    /// Independent matrices to evaluate.
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Args, Debug)]
struct RegressArgs {
    /// Design matrix X as CSV, one observation per row.
    #[arg(long)]
    design: PathBuf,
    /// Response y as a CSV column or row.
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    constants: ConstantArgs,
    /// Also solve the unsketched problem and compare residuals.
    #[arg(long)]
    exact_compare: bool,
    /// Ridge penalty added to the sketched problem.
    #[arg(long)]
    ridge: Option<f64>,
}

#[derive(Args, Debug)]
struct HardInstanceArgs {
    #[arg(long)]
    d: usize,
    /// Target point count used to solve for the subset size.
    #[arg(long)]
    n: u64,
    /// Maximum number of points.
    #[arg(long, default_value_t = 100_000)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeavyCountArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// With --d and --n, print the suggested subset size t.
    #[arg(long, requires_all = ["d", "n"])]
    eps: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    eps: f64,
    /// Comma-separated sparsities; `plan` stands for the planned sparsity.
    #[arg(long, value_delimiter = ',', default_value = "1,plan")]
    s_values: Vec<String>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[command(flatten)]
    constants: ConstantArgs,
    #[arg(long, default_value_t = 10_000)]
    cap: usize,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    eps: f64,
    /// Point count used in the thresholds; defaults to the dataset size.
    #[arg(long)]
    n: Option<u64>,
    /// Head size; defaults to the planned value.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Also write per-point results as CSV.
    #[arg(long)]
    details: Option<PathBuf>,
}

/// A message and the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<sparsejl::Error> for Failure {
    fn from(e: sparsejl::Error) -> Self {
        Self { code: if e.is_io() { 2 } else { 1 }, message: e.to_string() }
    }
}

fn at(path: &Path, e: sparsejl::Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { code: 2, message: format!("{}: {e}", path.display()) }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn load_matrix(path: &Path) -> Result<SparseJlMatrix, Failure> {
    SparseJlMatrix::parse(&read_text(path)?).map_err(|e| at(path, e))
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure { code: 2, message: format!("stdout: {e}") }),
    }
}

fn csv_line(values: &[f64]) -> String {
    let mut line = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            line.push(',');
        }
        let _ = write!(line, "{v}");
    }
    line
}

fn plan(args: PlanArgs) -> Result<(), Failure> {
    let constants = args.constants.get()?;
    let text = match (args.k, args.n, args.d) {
        (Some(k), _, _) => {
            let p = params::plan_subspace(k, args.eps, constants)?;
            if args.pretty { p.to_string() } else { p.record() }
        }
        (None, Some(n), Some(d)) => {
            let p = params::plan_jl(n, d, args.eps, constants)?;
            if args.pretty { p.to_string() } else { p.record() }
        }
        _ => return Err(Failure::validation("plan needs --k, or both --n and --d")),
    };
    emit(None, &(text + "\n"))
}

fn sample(args: SampleArgs, seed: u64) -> Result<(), Failure> {
    let a = SparseJlMatrix::sample(args.m, args.d, args.s, seed)?;
    let text = if args.explicit { a.to_explicit() } else { a.to_canonical() };
    emit(args.out.as_deref(), &text)
}

fn embed(args: EmbedArgs) -> Result<(), Failure> {
    let a = load_matrix(&args.matrix)?;
    let data = args.data.load(a.d())?;
    let rows = a.apply_dataset(&data)?;
    let mut text = String::new();
    for row in &rows {
        text += &csv_line(row);
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)
}

fn distortion(args: DistortionArgs, seed: u64) -> Result<(), Failure> {
    let a = load_matrix(&args.matrix)?;
    let data = args.data.load(a.d())?;
    let mode = match args.pairs {
        Pairs::All => PairMode::All,
        Pairs::Sample(pairs) => PairMode::Sampled { pairs, seed },
    };
    let report = match &args.dump_pairs {
        Some(path) => {
            let (report, pairs) = diagnostics::distortion_pairs(&a, &data, args.eps, mode)?;
            let mut csv = String::from("i,j,original_sq,embedded_sq,rel\n");
            for p in &pairs {
                let _ = writeln!(csv, "{},{},{},{},{}", p.i, p.j, p.original_sq, p.embedded_sq, p.rel);
            }
            emit(Some(path), &csv)?;
            report
        }
        None => diagnostics::distortion(&a, &data, args.eps, mode)?,
    };
    emit(None, &format!("{}passes={}\n", report.to_records(), report.passes()))
}

fn calibrate(args: CalibrateArgs, seed: u64) -> Result<(), Failure> {
    let scenario = Scenario { n: args.n, d: args.d, eps: args.eps };
    let cal = params::calibrate_constants(args.target, args.budget, scenario, seed)?;
    let plan = params::plan_jl(args.n, args.d, args.eps, cal.constants)?;
    emit(
        None,
        &format!(
            "c_m={}\nc_s={}\nsuccess={}\ngrid_points_evaluated={}\ntrials={}\nm={}\ns={}\n",
            cal.constants.c_m, cal.constants.c_s, cal.success, cal.evaluated, args.budget, plan.m, plan.s
        ),
    )
}

fn subspace_eval(args: SubspaceArgs, seed: u64) -> Result<(), Failure> {
    let basis = match (&args.basis, args.random_k, args.d) {
        (Some(path), _, _) => {
            let raw = dataio::read_dense_matrix(path).map_err(|e| at(path, e))?;
            subspace::orthonormalize(&raw, 1e-10)?
        }
        (None, Some(k), Some(d)) => subspace::random_basis(k, d, rng::derive_seed(seed, 0))?,
        _ => return Err(Failure::validation("subspace-eval needs --basis, or --random-k with --d")),
    };
    if args.trials == 0 {
        return Err(Failure::validation("trials: must be at least 1"));
    }
    let plan = params::plan_subspace(basis.k(), args.eps, args.constants.get()?)?;
    let mut successes = 0;
    let mut worst = 0.0f64;
    let mut first = None;
    for t in 0..args.trials {
        let a = SparseJlMatrix::sample(plan.m, basis.d(), plan.s, rng::derive_seed(seed, 1 + t as u64))?;
        let dist = subspace::subspace_distortion(&a, &basis)?;
        first.get_or_insert(dist);
        worst = worst.max(dist);
        if dist <= args.eps {
            successes += 1;
        }
    }
    let heavy = subspace::heavy_coordinates(&basis, plan.ell)?;
    let mut text = format!("{}\n", plan.record().replace(' ', "\n"));
    let _ = write!(
        text,
        "d={}\nheavy_coordinates={}\ntrials={}\nsuccesses={}\nsuccess_rate={}\ndistortion={}\nmax_distortion={}\n",
        basis.d(),
        heavy.len(),
        args.trials,
        successes,
        successes as f64 / args.trials as f64,
        first.unwrap_or(0.0),
        worst
    );
    emit(None, &text)
}

fn regress(args: RegressArgs, seed: u64) -> Result<(), Failure> {
    let x = dataio::read_dense_matrix(&args.design).map_err(|e| at(&args.design, e))?;
    let y = dataio::read_vector(&args.target).map_err(|e| at(&args.target, e))?;
    let sol = subspace::sketch_solve(&x, &y, args.eps, seed, args.constants.get()?, args.ridge)?;
    let sketched = subspace::residual_sq(&x, &sol.beta, &y)?;
    let mut text = format!(
        "m={}\ns={}\nrank={}\nbeta={}\nresidual_sq={}\n",
        sol.plan.m,
        sol.plan.s,
        sol.rank,
        csv_line(&sol.beta),
        sketched
    );
    if args.exact_compare {
        let exact = subspace::exact_least_squares(&x, &y)?;
        let best = subspace::residual_sq(&x, &exact, &y)?;
        let bound = (1.0 + 2.0 * args.eps) * best;
        let ratio = if best > 0.0 { sketched / best } else { f64::NAN };
        let _ = write!(
            text,
            "exact_beta={}\nexact_residual_sq={}\nresidual_ratio={}\nwithin_bound={}\n",
            csv_line(&exact),
            best,
            ratio,
            sketched <= bound
        );
    }
    emit(None, &text)
}

fn hard_instance(args: HardInstanceArgs, seed: u64) -> Result<(), Failure> {
    let inst = hardness::generate(args.n, args.d, args.cap, seed)?;
    let data = inst.to_dataset();
    eprintln!("ell={} points={} sampled={}", inst.ell, data.len(), inst.sampled);
    emit(args.out.as_deref(), &dataio::format_sparse(&data))
}

fn verify_lemma7(args: HeavyCountArgs, seed: u64) -> Result<(), Failure> {
    if 8 * args.t > args.s {
        eprintln!("note: t = {} exceeds s/8; the bound is checked outside its proven range", args.t);
    }
    let results = hardness::heavy_subset_trials(args.m, args.s, args.t, args.trials, seed)?;
    let mut text = String::new();
    for (k, r) in results.iter().enumerate() {
        let _ = writeln!(text, "trial={k} count={} bound={}", r.count, r.bound);
    }
    let violations = results.iter().filter(|r| !r.holds()).count();
    let _ = write!(
        text,
        "trials={}\nviolations={violations}\nresult={}\n",
        results.len(),
        if violations == 0 { "PASS" } else { "FAIL" }
    );
    if let (Some(eps), Some(d), Some(n)) = (args.eps, args.d, args.n) {
        let ell = hardness::solve_ell(n, d as u64)?;
        let _ = writeln!(text, "suggested_t={}", hardness::suggested_t(eps, d, ell, args.m, args.s));
    }
    emit(None, &text)
}

fn lb_sweep(args: SweepArgs, seed: u64) -> Result<(), Failure> {
    let constants = args.constants.get()?;
    let s_values = args
        .s_values
        .iter()
        .map(|v| match v.trim() {
            "plan" => Ok(params::plan_jl(args.n, args.d as u64, args.eps, constants)?.s),
            other => other.parse().map_err(|_| Failure::validation(format!("s-values: bad entry {other:?}"))),
        })
        .collect::<Result<Vec<usize>, Failure>>()?;
    let cfg = hardness::LowerBoundSweep {
        d: args.d,
        n_target: args.n,
        eps: args.eps,
        s_values,
        trials: args.trials,
        seed,
        c_m: constants.c_m,
        cap: args.cap,
    };
    let mut text = String::from("s,m,success\n");
    for row in hardness::empirical_lower_bound(&cfg)? {
        let _ = writeln!(text, "{},{},{}", row.s, row.m, row.success);
    }
    emit(None, &text)
}

fn diagnose(args: DiagnoseArgs) -> Result<(), Failure> {
    let a = load_matrix(&args.matrix)?;
    let data = args.data.load(a.d())?;
    let n = args.n.unwrap_or(data.len().max(2) as u64);
    let ell = match args.ell {
        Some(l) => l,
        None => params::plan_jl(n, a.d() as u64, args.eps, Constants::default())?.ell,
    };
    let summary = diagnostics::diagnose(&a, &data, n, args.eps, ell, args.delta)?;
    if let Some(path) = &args.details {
        let mut csv = String::from("index,norm_ok,head_ok,tail_ok,cross_ok,well_behaved,head_profile_ok,tail_admissible,cross_term\n");
        for p in &summary.details {
            let profile = p.head_profile_ok.map_or("na".to_string(), |b| b.to_string());
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                p.index, p.norm_ok, p.head_ok, p.tail_ok, p.cross_ok, p.well_behaved, profile, p.tail_admissible, p.cross_term
            );
        }
        emit(Some(path), &csv)?;
    }
    emit(None, &summary.to_records())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::validation("threads: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::validation(format!("threads: {e}")))?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Plan(a) => plan(a),
        Command::Sample(a) => sample(a, seed),
        Command::Embed(a) => embed(a),
        Command::Distortion(a) => distortion(a, seed),
        Command::Calibrate(a) => calibrate(a, seed),
        Command::SubspaceEval(a) => subspace_eval(a, seed),
        Command::Regress(a) => regress(a, seed),
        Command::HardInstance(a) => hard_instance(a, seed),
        Command::VerifyLemma7(a) => verify_lemma7(a, seed),
        Command::LbSweep(a) => lb_sweep(a, seed),
        Command::Diagnose(a) => diagnose(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
