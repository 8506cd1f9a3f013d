mod config;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liefield::field::evaluate_from_query;
use liefield::io::{load_curve, parse_group, CurveFile};
use liefield::sim::{laps, run, SimulationConfig};
use liefield::{bench, ec_distance, generate, properties};
use liefield::{DiscretizedCurve, Error, FieldOptions, GainLaw, Group, GroupElement, GroupKind, Twist};

use crate::config::{matrix_from, CliConfig, GenerateConfig};

#[derive(Parser)]
#[command(name = "liefield", version, about = "Curve-following vector fields on matrix Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the closed loop from a config and write a CSV trace.
    Simulate(SimulateArgs),
    /// Run the randomized property suite for a group.
    Check(CheckArgs),
    /// Write a sample curve as JSON.
    GenCurve(GenCurveArgs),
    /// Evaluate the field on a planar grid of states.
    FieldGrid(FieldGridArgs),
    /// Time field evaluation and the distance kernels.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the nearest-point search.
    #[arg(long, env = "FIELD_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    parallel: Option<OnOff>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    /// SE3, SO3, T(m) or Tm.
    group: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    #[value(name = "circle_T2")]
    CircleT2,
    #[value(name = "screw_SE3")]
    ScrewSe3,
    #[value(name = "composed_SE3")]
    ComposedSe3,
}

#[derive(Args)]
struct GenCurveArgs {
    #[arg(long, value_enum)]
    kind: Option<CurveKind>,
    /// Number of samples.
    #[arg(long)]
    n: Option<usize>,
    /// Circle radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Screw twist as six comma-separated numbers `v1,v2,v3,w1,w2,w3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    zeta: Option<Vec<f64>>,
    /// Sample an open curve instead of a closed loop.
    #[arg(long)]
    open: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FieldGridArgs {
    /// `min,max,count` along x.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// `min,max,count` along y.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    /// Samples of the benchmark curve.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    /// Timed field evaluations.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = bench::MIN_WARMUP)]
    warmup: usize,
    /// Pairs for the distance kernel comparison.
    #[arg(long, default_value_t = 10_000)]
    kernel_trials: usize,
    #[command(flatten)]
    common: Common,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ManifoldDrift { .. } => 2,
        Error::InvalidConfig(_)
        | Error::Io(_)
        | Error::DimensionMismatch { .. }
        | Error::OffGroup { .. }
        | Error::OffGroupSample { .. }
        | Error::TooFewSamples(_)
        | Error::UndefinedForGroup => 3,
        Error::ImproperParametrization { .. } => 4,
        _ => 1,
    }
}

enum Failure {
    Lib(Error),
    SelfIntersecting(f64),
    PropertiesFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Check(a) => check(a),
        Command::GenCurve(a) => gen_curve(a),
        Command::FieldGrid(a) => field_grid(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::SelfIntersecting(d)) => {
            eprintln!("error: curve self-intersects (closest non-adjacent samples at distance {d:.3e})");
            ExitCode::from(4)
        }
        Err(Failure::PropertiesFailed) => ExitCode::from(1),
    }
}

fn load_config(common: &Common) -> Result<Option<CliConfig>, Error> {
    match &common.config {
        Some(p) => Ok(Some(CliConfig::load(p)?.0)),
        None => Ok(None),
    }
}

fn require_config(common: &Common) -> Result<CliConfig, Error> {
    load_config(common)?.ok_or_else(|| Error::InvalidConfig("--config is required".into()))
}

/// Installs the global search pool and returns whether the search runs in
/// parallel.
fn setup_parallelism(common: &Common, cfg: Option<&CliConfig>) -> Result<bool, Error> {
    let workers = common.workers.or(cfg.and_then(|c| c.workers));
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(match common.parallel {
        Some(p) => p == OnOff::On,
        None => cfg.and_then(|c| c.parallel).unwrap_or(true),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn read_curve(path: &Path) -> Result<DiscretizedCurve, Error> {
    load_curve(path).map_err(|e| match e {
        Error::Io(msg) => Error::Io(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn field_options(cfg: &CliConfig, parallel: bool) -> FieldOptions {
    let mut opts = FieldOptions { on_curve_tolerance: cfg.on_curve_tolerance, ..FieldOptions::default() };
    opts.search.parallel = parallel;
    opts
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let cfg = require_config(&a.common)?;
    let parallel = setup_parallelism(&a.common, Some(&cfg))?;
    let curve = read_curve(cfg.curve_path()?)?;
    let g = curve.group().clone();
    let initial = match &cfg.initial_state {
        Some(entries) => g.element(matrix_from(entries, g.order())?)?,
        None => *curve.sample(0),
    };
    if !(cfg.on_curve_tolerance >= 0.0 && cfg.on_curve_tolerance.is_finite()) {
        return Err(Error::InvalidConfig("on_curve_tolerance must be non-negative".into()).into());
    }
    let sim = SimulationConfig {
        dt: cfg.dt,
        duration: cfg.duration,
        initial_state: initial,
        gains: cfg.gains,
        seed: a.common.seed.unwrap_or(cfg.seed),
        escape_magnitude: cfg.escape_magnitude,
        field: field_options(&cfg, parallel),
    };
    let trace = run(&curve, &sim)?;
    let mut out = output(a.common.out.as_deref())?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    eprintln!(
        "{} rows, final D {:.3e}, {:.2} laps, {} escapes",
        trace.rows.len(),
        trace.final_distance(),
        laps(&curve, &trace),
        trace.escape_count()
    );
    Ok(())
}

fn parse_group_arg(name: &str) -> Result<Group, Error> {
    let name = name.trim();
    match name {
        "SE3" | "SO3" => parse_group(name, None),
        _ => {
            let rest = name.strip_prefix('T').ok_or_else(|| Error::InvalidConfig(format!("unknown group {name:?}")))?;
            let digits = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
            let m = digits.parse::<usize>().map_err(|_| Error::InvalidConfig(format!("unknown group {name:?}")))?;
            parse_group("T", Some(m))
        }
    }
}

fn check(a: CheckArgs) -> CmdResult {
    let cfg = load_config(&a.common)?;
    setup_parallelism(&a.common, cfg.as_ref())?;
    let section = cfg.as_ref().and_then(|c| c.check.clone()).unwrap_or_default();
    let name = a.group.or(section.group).ok_or_else(|| Error::InvalidConfig("no group given".into()))?;
    let g = parse_group_arg(&name)?;
    let trials = a.trials.or(section.trials).unwrap_or(1000);
    let seed = a.common.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    if trials == 0 {
        eprintln!("warning: 0 trials, every property passes vacuously");
    }
    let report = properties::run_suite(&g, trials, seed)?;

    let mut table = format!("property suite for {}, {} trials, seed {}\n", report.group, trials, seed);
    for r in &report.results {
        let _ = writeln!(
            table,
            "  {:<20} {:>5}/{:<5} max {:.3e}  tol {:.1e}  {}",
            r.name,
            r.passed_trials,
            r.trials,
            r.max_residual,
            r.tolerance,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    match &a.common.out {
        Some(p) => {
            std::fs::write(p, serde_json::to_string_pretty(&report).expect("report serializes"))?;
            print!("{table}");
        }
        None => print!("{table}"),
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::PropertiesFailed)
    }
}

fn twist_from(v: &[f64]) -> Result<Twist, Error> {
    if v.len() != 6 {
        return Err(Error::DimensionMismatch { expected: 6, got: v.len() });
    }
    Ok(Twist::from_slice(v))
}

fn gen_curve(a: GenCurveArgs) -> CmdResult {
    let cfg = load_config(&a.common)?;
    setup_parallelism(&a.common, cfg.as_ref())?;
    let section: GenerateConfig = cfg.as_ref().and_then(|c| c.generate.clone()).unwrap_or_default();
    let kind = match (a.kind, section.kind.as_deref()) {
        (Some(k), _) => k,
        (None, Some(name)) => CurveKind::from_str(name, false).map_err(|_| Error::InvalidConfig(format!("unknown curve kind {name:?}")))?,
        (None, None) => CurveKind::CircleT2,
    };
    let n = a.n.or(section.n);
    let closed = if a.open { false } else { section.closed.unwrap_or(true) };
    let curve = match kind {
        CurveKind::CircleT2 => {
            let radius = a.radius.or(section.radius).unwrap_or(1.0);
            generate::circle_t2(n.unwrap_or(360), radius, section.center.unwrap_or([0.0, 0.0]))?
        }
        CurveKind::ScrewSe3 => {
            let zeta = match a.zeta.as_deref().or(section.zeta.as_deref()) {
                Some(v) => twist_from(v)?,
                None => Twist::from_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, TAU]),
            };
            let g = Group::se3();
            let h0 = match &section.h0 {
                Some(entries) => g.element(matrix_from(entries, 4)?)?,
                None => GroupElement::se3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [0.15, 0.0, 0.3]),
            };
            generate::screw_se3(zeta, h0, n.unwrap_or(5000), closed)?
        }
        CurveKind::ComposedSe3 => generate::composed_se3(n.unwrap_or(5000))?,
    };
    check_self_intersection(&curve)?;
    let text = serde_json::to_string(&CurveFile::from_curve(&curve)).expect("curve serializes");
    let mut out = output(a.common.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    eprintln!("{} samples, {}", curve.len(), if curve.is_closed() { "closed" } else { "open" });
    Ok(())
}

/// Flags a curve whose non-adjacent samples come closer than the smallest
/// step between neighbours.
fn check_self_intersection(curve: &DiscretizedCurve) -> CmdResult {
    let g = curve.group();
    let n = curve.len();
    let pairs = if curve.is_closed() { n } else { n - 1 };
    let step =
        (0..pairs).map(|i| liefield::distance::ee_distance(g, curve.sample(i), curve.sample((i + 1) % n))).fold(f64::INFINITY, f64::min);
    let closest = curve.min_nonadjacent_distance();
    if closest < step {
        return Err(Failure::SelfIntersecting(closest));
    }
    Ok(())
}

fn axis_values(flag: Option<&[f64]>, section: Option<(f64, f64, usize)>, name: &str) -> Result<Vec<f64>, Error> {
    let (lo, hi, count) = match (flag, section) {
        (Some([lo, hi, c]), _) => {
            if !(c.fract() == 0.0 && *c >= 1.0) {
                return Err(Error::InvalidConfig(format!("--{name} count must be a positive integer")));
            }
            (*lo, *hi, *c as usize)
        }
        (Some(_), _) => return Err(Error::InvalidConfig(format!("--{name} takes min,max,count"))),
        (None, Some(s)) => s,
        (None, None) => (-2.0, 2.0, 41),
    };
    if count == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("invalid {name} range")));
    }
    Ok((0..count).map(|i| if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 }).collect())
}

fn field_grid(a: FieldGridArgs) -> CmdResult {
    let cfg = require_config(&a.common)?;
    let parallel = setup_parallelism(&a.common, Some(&cfg))?;
    cfg.gains.validate()?;
    let curve = read_curve(cfg.curve_path()?)?;
    let g = curve.group().clone();
    let grid = cfg.grid.as_ref();
    let xs = axis_values(a.x.as_deref(), grid.map(|s| s.x), "x")?;
    let ys = axis_values(a.y.as_deref(), grid.map(|s| s.y), "y")?;
    let base = match (g.kind(), grid.and_then(|s| s.base.as_ref())) {
        (GroupKind::SE3, Some(entries)) => g.element(matrix_from(entries, 4)?)?,
        (GroupKind::SE3, None) => g.identity(),
        (GroupKind::Translation(m), _) if m >= 2 => g.identity(),
        _ => return Err(Error::UndefinedForGroup.into()),
    };
    let opts = field_options(&cfg, parallel);
    let dim = g.dim();
    let order = g.order();
    // translation entries live in the last column
    let (ix, iy) = (order - 1, 2 * order - 1);

    let mut out = output(a.common.out.as_deref())?;
    let mut header = String::from("x,y");
    for i in 0..order {
        for j in 0..order {
            let _ = write!(header, ",h{i}{j}");
        }
    }
    for prefix in ["psi", "xi_n", "xi_t"] {
        for k in 0..dim {
            let _ = write!(header, ",{prefix}{k}");
        }
    }
    header.push_str(",D,kN,kT,near_tie");
    writeln!(out, "{header}")?;

    for &y in &ys {
        for &x in &xs {
            let mut m = *base.matrix();
            m.as_mut_slice()[ix] = x;
            m.as_mut_slice()[iy] = y;
            let h = g.element(m)?;
            let query = ec_distance(&curve, &h, &opts.search);
            let mut line = format!("{x:.16e},{y:.16e}");
            for v in m.as_slice() {
                let _ = write!(line, ",{v:.16e}");
            }
            let nan = Twist::from_slice(&vec![f64::NAN; dim]);
            let (psi, xi_n, xi_t) = if query.near_tie {
                (nan, nan, nan)
            } else {
                let e = evaluate_from_query(&curve, &h, &query, &cfg.gains, &opts)?;
                (e.xi, e.xi_n, e.xi_t)
            };
            for t in [&psi, &xi_n, &xi_t] {
                for v in t.as_slice() {
                    let _ = write!(line, ",{v:.16e}");
                }
            }
            let d = query.distance;
            let _ = write!(line, ",{d:.16e},{:.16e},{:.16e},{}", cfg.gains.kn(d), cfg.gains.kt(d), u8::from(query.near_tie));
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run_bench(a: BenchArgs) -> CmdResult {
    let cfg = load_config(&a.common)?;
    let seed = a.common.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let workers = a.common.workers.or(cfg.as_ref().and_then(|c| c.workers)).unwrap_or(4);
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()).into());
    }
    let curve = match cfg.as_ref().and_then(|c| c.curve.as_deref()) {
        Some(p) => read_curve(p)?,
        None => generate::composed_se3(a.n)?,
    };
    let trials = a.trials.unwrap_or(200);
    let field = bench::bench_field_eval(&curve, trials, workers, a.warmup, seed)?;
    let kernels = bench::bench_distance_kernels(a.kernel_trials, seed);
    let json = serde_json::json!({ "field_evaluation": field, "distance_kernels": kernels });
    let mut out = output(a.common.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&json).expect("report serializes"))?;
    out.flush()?;
    eprint!("{}", field.to_table());
    if !kernels.is_empty() {
        eprint!("{}", kernels.to_table());
    }
    Ok(())
}
