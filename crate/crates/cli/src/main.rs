//! `cuspflow`: check triangulations, evaluate curvature, run curvature flows
//! and solve for zero-curvature metrics.
//!
//! Exit codes: 0 success or convergence, 2 invalid input, 3 divergence or no
//! minimizer, 4 undetermined or iteration cap, 5 integrator failure.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cuspflow::complex::{build_complex, parse_complex, Complex, ComplexError};
use cuspflow::curvature::{evaluate, project_quotient};
use cuspflow::flows::{
    self, Classification, FailureReason, FlowConfig, FlowError, FlowKind, Sample,
};
use cuspflow::solver::{self, SolveStatus, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use report::{fmt_num, Report, Section};

const EXIT_INVALID: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;
const EXIT_UNDETERMINED: u8 = 4;
const EXIT_INTEGRATOR: u8 = 5;

/// Directory for trace files when `--trace` is not given.
const TRACE_DIR_ENV: &str = "CUSPFLOW_TRACE_DIR";

#[derive(Parser)]
#[command(
    name = "cuspflow",
    version,
    about = "Curvature flows on ideal triangulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print the report as a JSON document.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a triangulation and summarize its edge valences.
    Check { file: PathBuf },
    /// Evaluate curvature, energy and volume at one metric.
    Curvature {
        file: PathBuf,
        /// Comma-separated edge lengths; defaults to the file's metric, else 0.
        #[arg(long, allow_hyphen_values = true)]
        metric: Option<String>,
    },
    /// Run a curvature flow.
    Flow(FlowArgs),
    /// Minimize the energy by projected Newton descent.
    Solve(SolveArgs),
}

#[derive(Args)]
struct StartArgs {
    file: PathBuf,
    /// Comma-separated initial edge lengths; defaults to the file's metric, else 0.
    #[arg(long, allow_hyphen_values = true)]
    metric: Option<String>,
    /// Target curvature file (one value per edge, comma or whitespace separated).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Number of starts. Starts are the initial metric plus a uniform
    /// perturbation in [-1, 1] seeded by `seed + i`.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    /// Seed of the first perturbed start. Without it a single start is
    /// unperturbed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for multi-start runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, default_value = "ricci", value_parser = parse_kind)]
    kind: FlowKind,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Use the adaptive Dormand–Prince pair instead of fixed RK4 steps.
    #[arg(long)]
    adaptive: bool,
    #[arg(long, default_value_t = 1e-10)]
    adaptive_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    max_step: f64,
    #[arg(long, default_value_t = 1000.0)]
    t_max: f64,
    /// Convergence threshold on the curvature residual (sup norm).
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1e3)]
    l_max: f64,
    /// Trailing window for the divergence test, in time units.
    #[arg(long, default_value_t = 10.0)]
    window: f64,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Trace CSV path; `-i` is appended to the stem for multi-start runs.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = -1e8, allow_hyphen_values = true)]
    energy_floor: f64,
    #[arg(long, default_value_t = 1e6)]
    norm_limit: f64,
}

fn parse_kind(s: &str) -> Result<FlowKind, String> {
    s.parse()
}

/// Input the command cannot work with. Reported on stderr with exit code 2.
struct Invalid(Vec<String>);

impl Invalid {
    fn one(msg: impl Into<String>) -> Self {
        Invalid(vec![msg.into()])
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Check { file } => cmd_check(file),
        Command::Curvature { file, metric } => cmd_curvature(file, metric.as_deref()),
        Command::Flow(args) => cmd_flow(args),
        Command::Solve(args) => cmd_solve(args),
    };
    match outcome {
        Ok((mut report, code)) => {
            report.header.prepend("command", command_echo());
            report.wall_clock_s = started.elapsed().as_secs_f64();
            print!("{}", report.render(cli.json));
            ExitCode::from(code)
        }
        Err(Invalid(lines)) => {
            for line in lines {
                eprintln!("cuspflow: {line}");
            }
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn command_echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn load(path: &Path) -> Result<Complex, Invalid> {
    let text =
        fs::read_to_string(path).map_err(|e| Invalid::one(format!("{}: {e}", path.display())))?;
    let spec =
        parse_complex(&text).map_err(|e| Invalid::one(format!("{}: {e}", path.display())))?;
    build_complex(&spec).map_err(|e| match e {
        ComplexError::Invalid(violations) => Invalid(
            violations
                .iter()
                .map(|v| format!("{}: {v}", path.display()))
                .collect(),
        ),
        other => Invalid::one(format!("{}: {other}", path.display())),
    })
}

fn parse_values(text: &str, what: &str, expected: usize) -> Result<Vec<f64>, Invalid> {
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Invalid::one(format!("{what}: `{t}` is not a finite number")))
        })
        .collect::<Result<Vec<f64>, Invalid>>()?;
    if values.len() != expected {
        return Err(Invalid::one(format!(
            "{what} has {} values, expected one per edge ({expected})",
            values.len()
        )));
    }
    Ok(values)
}

fn initial_metric(c: &Complex, metric: Option<&str>) -> Result<Vec<f64>, Invalid> {
    match metric {
        Some(text) => parse_values(text, "--metric", c.edge_count()),
        None => match c.spec().initial_metric() {
            Some(m) if m.len() == c.edge_count() => Ok(m.to_vec()),
            Some(m) => Err(Invalid::one(format!(
                "metric record has {} values, expected {}",
                m.len(),
                c.edge_count()
            ))),
            None => Ok(vec![0.0; c.edge_count()]),
        },
    }
}

fn load_target(c: &Complex, path: Option<&Path>) -> Result<Option<Vec<f64>>, Invalid> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text =
        fs::read_to_string(path).map_err(|e| Invalid::one(format!("{}: {e}", path.display())))?;
    parse_values(&text, &path.display().to_string(), c.edge_count()).map(Some)
}

fn summarize(c: &Complex, file: &Path) -> Section {
    let histogram = c
        .valence_histogram()
        .iter()
        .map(|(d, count)| format!("{d}:{count}"))
        .collect::<Vec<_>>()
        .join(",");
    let mut s = Section::new();
    s.set("file", file.display().to_string())
        .set("tets", c.tet_count())
        .set("m", c.edge_count())
        .set("n", c.vertex_count())
        .set("valences", format!("{{{histogram}}}"))
        .set(
            "constant_valence",
            c.constant_valence()
                .map_or_else(|| "none".to_string(), |d| d.to_string()),
        );
    s
}

fn cmd_check(file: &Path) -> Result<(Report, u8), Invalid> {
    let c = load(file)?;
    let mut header = summarize(&c, file);
    if let Some(d) = c.constant_valence().filter(|&d| d != 6) {
        header.set(
            "advisory",
            format!(
                "constant valence {d} != 6: an edge-transitive complex of this kind has no \
                 zero-curvature metric (edge-transitivity is not checked)"
            ),
        );
    }
    Ok((
        Report {
            header,
            ..Report::default()
        },
        0,
    ))
}

fn cmd_curvature(file: &Path, metric: Option<&str>) -> Result<(Report, u8), Invalid> {
    let c = load(file)?;
    let l = initial_metric(&c, metric)?;
    let ev = evaluate(&c, &l);
    let mut run = Section::new();
    run.set("metric", l.as_slice())
        .set("curvature", ev.curvature.values.clone())
        .set("cone_angles", ev.curvature.cone_angles.clone())
        .set("curvature_norm", ev.curvature.sup_norm())
        .set("energy", ev.energy)
        .set("covolume", ev.covolume)
        .set("volume", ev.volume)
        .set("in_decorated", ev.in_decorated);
    Ok((
        Report {
            header: summarize(&c, file),
            runs: vec![run],
            wall_clock_s: 0.0,
        },
        0,
    ))
}

/// One start of a multi-start run.
struct Start {
    index: usize,
    seed: Option<u64>,
    l0: Vec<f64>,
}

fn starts(base: &[f64], args: &StartArgs) -> Result<Vec<Start>, Invalid> {
    if args.starts == 0 || args.jobs == 0 {
        return Err(Invalid::one("--starts and --jobs must be at least 1"));
    }
    if args.seed.is_none() && args.starts == 1 {
        return Ok(vec![Start {
            index: 0,
            seed: None,
            l0: base.to_vec(),
        }]);
    }
    let first = args.seed.unwrap_or(0);
    Ok((0..args.starts)
        .map(|i| {
            let seed = first.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l0 = base.iter().map(|x| x + rng.gen_range(-1.0..=1.0)).collect();
            Start {
                index: i,
                seed: Some(seed),
                l0,
            }
        })
        .collect())
}

/// Applies `f` to every item on `jobs` threads; results keep item order.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                *slots[i]
                    .lock()
                    .expect("no worker panics while holding a slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every item was processed"))
        .collect()
}

fn start_section(start: &Start) -> Section {
    let mut s = Section::new();
    s.set("start", start.index);
    if let Some(seed) = start.seed {
        s.set("seed", seed);
    }
    s.set("initial", start.l0.as_slice());
    s
}

/// Limit or final-state fields shared by flow and solve reports. Volume is
/// only reported inside the decorated region.
fn state_fields(s: &mut Section, c: &Complex, key: &str, l: &[f64], target: Option<&[f64]>) {
    let ev = evaluate(c, l);
    let residual: Vec<f64> = match target {
        Some(t) => ev
            .curvature
            .values
            .iter()
            .zip(t)
            .map(|(k, b)| k - b)
            .collect(),
        None => ev.curvature.values.clone(),
    };
    let norm = residual.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    s.set(key, l)
        .set(&format!("{key}_quotient"), project_quotient(c, l))
        .set("curvature_norm", norm)
        .set("energy", ev.energy)
        .set("in_decorated", ev.in_decorated);
    if ev.in_decorated {
        s.set("volume", ev.volume);
    }
}

fn reason_token(r: FailureReason) -> &'static str {
    match r {
        FailureReason::LeftDecoratedRegion => "left_decorated_region",
        FailureReason::NonFinite => "non_finite",
        FailureReason::StepUnderflow => "step_underflow",
    }
}

fn trace_path(args: &FlowArgs, start: &Start, total: usize) -> Option<PathBuf> {
    if let Some(path) = &args.trace {
        if total == 1 {
            return Some(path.clone());
        }
        let stem = path
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let name = match path.extension() {
            Some(ext) => format!("{stem}-{}.{}", start.index, ext.to_string_lossy()),
            None => format!("{stem}-{}", start.index),
        };
        return Some(path.with_file_name(name));
    }
    let dir = std::env::var_os(TRACE_DIR_ENV)?;
    let stem = args
        .start
        .file
        .file_stem()
        .map_or_else(|| "trace".to_string(), |s| s.to_string_lossy().into_owned());
    Some(Path::new(&dir).join(format!("{stem}-{}-{}.csv", args.kind.name(), start.index)))
}

fn write_trace(path: &Path, m: usize, samples: &[Sample], footer: &str) -> std::io::Result<()> {
    let mut out = String::from("t");
    for i in 0..m {
        out.push_str(&format!(",l_{i}"));
    }
    for i in 0..m {
        out.push_str(&format!(",K_{i}"));
    }
    out.push_str(",H,vol\n");
    for s in samples {
        let row: Vec<String> = std::iter::once(s.t)
            .chain(s.l.iter().copied())
            .chain(s.curvature.iter().copied())
            .chain([s.energy, s.volume])
            .map(fmt_num)
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.push_str(&format!("# {footer}\n"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, out)
}

fn cmd_flow(args: &FlowArgs) -> Result<(Report, u8), Invalid> {
    let c = load(&args.start.file)?;
    let base = initial_metric(&c, args.start.metric.as_deref())?;
    let target = load_target(&c, args.start.target.as_deref())?;
    if target.is_some() && args.kind != FlowKind::Prescribed {
        return Err(Invalid::one("--target requires --kind prescribed"));
    }
    let cfg = FlowConfig {
        kind: args.kind,
        target_curvature: target.clone(),
        step: args.step,
        adaptive: args.adaptive,
        adaptive_tol: args.adaptive_tol,
        max_step: args.max_step,
        t_max: args.t_max,
        tol_converge: args.tol,
        window: args.window,
        l_max: args.l_max,
        record_every: args.record_every,
    };
    cfg.validate(&c).map_err(|e| Invalid::one(e.to_string()))?;
    let starts = starts(&base, &args.start)?;

    let results = par_map(&starts, args.start.jobs, |start| {
        let mut s = start_section(start);
        let (code, samples, footer) = match flows::run(&c, &start.l0, &cfg) {
            Ok(trace) => {
                let last = trace.last().clone();
                let code = match &trace.classification {
                    Classification::Converged { .. } => 0,
                    Classification::Diverging => EXIT_NO_SOLUTION,
                    Classification::Undetermined => EXIT_UNDETERMINED,
                };
                let rate = trace
                    .rate
                    .map_or_else(|| "none".to_string(), |r| fmt_num(r.lambda));
                s.set("classification", trace.classification.name())
                    .set("steps", trace.steps)
                    .set("t", last.t);
                let key = if code == 0 { "limit" } else { "final" };
                state_fields(&mut s, &c, key, &last.l, target.as_deref());
                s.set("rate", rate.clone());
                if let Some(fit) = trace.rate {
                    s.set("rate_fit_residual", fit.residual)
                        .set("rate_fit_samples", fit.samples);
                }
                let footer = format!("classification={} rate={rate}", trace.classification.name());
                (code, trace.samples, footer)
            }
            Err(FlowError::Failed(failure)) => {
                let good = failure.last_good().clone();
                let reason = reason_token(failure.reason);
                s.set("classification", "failed")
                    .set("reason", reason)
                    .set("t", good.t);
                state_fields(&mut s, &c, "last_good", &good.l, target.as_deref());
                let footer = format!("classification=failed reason={reason}");
                (EXIT_INTEGRATOR, failure.samples, footer)
            }
            Err(e) => unreachable!("configuration was validated up front: {e}"),
        };
        if let Some(path) = trace_path(args, start, starts.len()) {
            match write_trace(&path, c.edge_count(), &samples, &footer) {
                Ok(()) => s.set("trace", path.display().to_string()),
                Err(e) => s.set("trace_error", format!("{}: {e}", path.display())),
            };
        }
        (s, code)
    });

    let code = results.iter().map(|r| r.1).max().unwrap_or(0);
    let mut header = summarize(&c, &args.start.file);
    header.set("kind", args.kind.name());
    Ok((
        Report {
            header,
            runs: results.into_iter().map(|r| r.0).collect(),
            wall_clock_s: 0.0,
        },
        code,
    ))
}

fn cmd_solve(args: &SolveArgs) -> Result<(Report, u8), Invalid> {
    let c = load(&args.start.file)?;
    let base = initial_metric(&c, args.start.metric.as_deref())?;
    let target = load_target(&c, args.start.target.as_deref())?;
    if !(args.tol > 0.0) || args.max_iter == 0 {
        return Err(Invalid::one(
            "--tol must be positive and --max-iter at least 1",
        ));
    }
    let cfg = SolverConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        energy_floor: args.energy_floor,
        norm_limit: args.norm_limit,
    };
    let starts = starts(&base, &args.start)?;
    let results = par_map(&starts, args.start.jobs, |start| {
        let mut s = start_section(start);
        let res = solver::minimize(&c, &start.l0, target.as_deref(), &cfg)
            .expect("lengths were checked when parsing");
        s.set("status", res.status.name())
            .set("iterations", res.iterations)
            .set("newton_steps", res.newton_steps);
        let code = match &res.status {
            SolveStatus::Found { limit, .. } => {
                state_fields(&mut s, &c, "limit", limit, target.as_deref());
                0
            }
            SolveStatus::NoMinimizer(ev) => {
                state_fields(&mut s, &c, "final", &res.last, target.as_deref());
                s.set("gradient_floor", ev.gradient_floor)
                    .set("orbit_slope", ev.orbit_slope)
                    .set("final_norm", ev.norms.last().copied().unwrap_or(0.0));
                EXIT_NO_SOLUTION
            }
            SolveStatus::MaxIter => {
                state_fields(&mut s, &c, "final", &res.last, target.as_deref());
                EXIT_UNDETERMINED
            }
        };
        (s, code)
    });
    let code = results.iter().map(|r| r.1).max().unwrap_or(0);
    let mut header = summarize(&c, &args.start.file);
    header.set("prescribed", target.is_some());
    Ok((
        Report {
            header,
            runs: results.into_iter().map(|r| r.0).collect(),
            wall_clock_s: 0.0,
        },
        code,
    ))
}
