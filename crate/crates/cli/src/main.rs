use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stabledt::builder::build_stabilizing_dt_with;
use stabledt::sqestimate::{hoeffding_radius, parity_separation_demo, DemoConfig, SqScorer};
use stabledt::verify::{run_suite, Suite, VerifyConfig};
use stabledt::{
    build_impurity_dt, build_stabilizing_dt, make_target, preset_params, spectrum, BoolFn, BuildParams, BuildReport,
    ImpurityKind, Preset, SqBackend, SqOracle, TargetSpec, TieBreak,
};

#[derive(Parser)]
#[command(name = "stabledt", version, about = "Noise-stabilizing decision tree induction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a tree with the noisy-influence criterion.
    Build(RunArgs),
    /// Grow a tree with an impurity criterion.
    Baseline(RunArgs),
    /// Both builders over a grid of size budgets.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated size budgets.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        sizes: Vec<usize>,
    },
    /// Run a property suite.
    Verify(VerifyArgs),
    /// Dump the nonzero Fourier coefficients.
    Spectrum(SpectrumArgs),
    /// Impurity baselines against the query-backed noisy builder on a random parity.
    SqDemo(DemoArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    n: usize,
    /// Size budget; defaults to `s` under a preset.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// `general:<s>` or `monotone:<s>`.
    #[arg(long)]
    preset: Option<String>,
    /// `exact`, `sample:<m>` or `sq:<tau>`.
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value = "gini")]
    impurity: ImpurityKind,
    #[arg(long, default_value = "lowvar")]
    tiebreak: TieBreak,
    /// Stop once the best score is at most θ.
    #[arg(long)]
    early_stop: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    nmax: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the reports as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, requires = "delta")]
    d: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    t: usize,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input: exit 2. Anything else: exit 1.
enum Failure {
    Config(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<stabledt::Error> for Failure {
    fn from(e: stabledt::Error) -> Self {
        Failure::Internal(e.into())
    }
}

fn config<T>(r: Result<T, impl Into<anyhow::Error>>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(e.into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Mode {
    Exact,
    Sample(usize),
    Sq(f64),
}

fn parse_mode(s: &str) -> anyhow::Result<Mode> {
    let bad = || anyhow::anyhow!("mode must be exact, sample:<m> or sq:<tau>, got `{s}`");
    match s.split_once(':') {
        None if s == "exact" => Ok(Mode::Exact),
        Some(("sample", m)) => match m.parse() {
            Ok(m) if m > 0 => Ok(Mode::Sample(m)),
            _ => Err(bad()),
        },
        Some(("sq", tau)) => match tau.parse::<f64>() {
            Ok(tau) if tau > 0.0 && tau <= 1.0 => Ok(Mode::Sq(tau)),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

impl Mode {
    /// Backend and per-query tolerance; sampling reports its 99% Hoeffding radius.
    fn backend(self, seed: u64) -> Option<(SqBackend, f64)> {
        match self {
            Mode::Exact => None,
            Mode::Sample(m) => Some((SqBackend::Sampling { m, seed }, hoeffding_radius(m, 0.01).min(1.0))),
            Mode::Sq(tau) => Some((SqBackend::Adversarial { seed }, tau)),
        }
    }
}

/// Everything a run needs, validated before any work starts.
struct Prepared {
    f: BoolFn,
    spec: TargetSpec,
    params: BuildParams,
    mode: Mode,
    preset: Option<String>,
}

fn prepare(a: &RunArgs, need_params: bool, default_t: Option<usize>) -> Result<Prepared, Failure> {
    let spec: TargetSpec = config(a.target.parse())?;
    let f = config(make_target(&spec, a.n))?;
    let mode = config(parse_mode(&a.mode))?;
    let mut params = match &a.preset {
        Some(text) => {
            let (kind, s) = config(text.split_once(':').ok_or_else(|| anyhow::anyhow!("preset must look like general:<s>")))?;
            let kind: Preset = config(kind.parse())?;
            let s: usize = config(s.parse::<usize>().context("preset size"))?;
            if a.delta.is_some() {
                return Err(Failure::Config(anyhow::anyhow!("--delta is set by the preset; drop one of them")));
            }
            let eps = config(a.eps.ok_or_else(|| anyhow::anyhow!("--preset needs --eps")))?;
            config(preset_params(s, eps, kind))?
        }
        None => {
            let (delta, eps) = match (a.delta, a.eps) {
                (Some(delta), Some(eps)) => (delta, eps),
                _ if !need_params => (a.delta.unwrap_or(0.1), a.eps.unwrap_or(0.1)),
                _ => return Err(Failure::Config(anyhow::anyhow!("--delta and --eps are required without --preset"))),
            };
            let t = config(a.t.or(default_t).ok_or_else(|| anyhow::anyhow!("--t is required without --preset")))?;
            config(BuildParams::new(t, delta, eps))?
        }
    };
    if let Some(t) = a.t {
        params.t = t;
    }
    if let Some(d) = a.d {
        params.d = d;
    }
    if a.early_stop.is_some() {
        params.early_stop = a.early_stop;
    }
    params.tiebreak = a.tiebreak;
    config(params.validate())?;
    if a.n < usize::BITS as usize - 1 && params.t > 1 << a.n {
        return Err(Failure::Config(stabledt::Error::SizeExceedsDomain { size: params.t, n: a.n }.into()));
    }
    Ok(Prepared {
        f,
        spec,
        params,
        mode,
        preset: a.preset.clone(),
    })
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

struct RunOutput {
    report: BuildReport,
    wall_ms: u128,
    queries: Option<u64>,
    ledger: Option<String>,
}

fn run_noisy(p: &Prepared, seed: u64) -> Result<RunOutput, Failure> {
    let start = Instant::now();
    let (report, queries, ledger) = match p.mode.backend(seed) {
        None => (build_stabilizing_dt(&p.f, &p.params)?, None, None),
        Some((backend, tau)) => {
            let mut scorer = SqScorer::new(SqOracle::new(&p.f, backend), tau);
            let report = build_stabilizing_dt_with(&p.f, &p.params, &mut scorer)?;
            (report, Some(scorer.oracle.queries_used()), Some(scorer.oracle.ledger_jsonl()))
        }
    };
    Ok(RunOutput {
        report,
        wall_ms: start.elapsed().as_millis(),
        queries,
        ledger,
    })
}

fn write_run(a: &RunArgs, p: &Prepared, run: &RunOutput, extra: serde_json::Value) -> anyhow::Result<()> {
    let r = &run.report;
    let mut summary = json!({
        "n": p.f.n(),
        "target": p.spec.to_string(),
        "t": p.params.t,
        "delta": p.params.delta,
        "eps": p.params.eps,
        "d": r.d,
        "ns_initial": r.kappa,
        "error_initial": r.initial_error,
        "error_final": r.error,
        "size_final": r.tree.size(),
        "depth_final": r.tree.depth(),
        "stop": r.stop,
        "seed": a.seed,
        "wall_ms": run.wall_ms,
    });
    let obj = summary.as_object_mut().expect("summary is an object");
    if let Some(extra) = extra.as_object() {
        obj.extend(extra.clone());
    }
    write_atomic(&a.out.join("tree.sexp"), &(r.tree.to_sexpr() + "\n"))?;
    write_atomic(&a.out.join("tree.json"), &pretty(&r.tree.to_json())?)?;
    write_atomic(&a.out.join("trace.csv"), &stabledt::tree::trace_to_csv(&r.trace))?;
    write_atomic(&a.out.join("summary.json"), &pretty(&summary)?)?;
    if let Some(ledger) = &run.ledger {
        write_atomic(&a.out.join("queries.jsonl"), ledger)?;
    }
    Ok(())
}

fn cmd_build(a: &RunArgs) -> Result<(), Failure> {
    let p = prepare(a, true, None)?;
    let run = run_noisy(&p, a.seed)?;
    let extra = json!({
        "method": "noisy",
        "mode": a.mode,
        "preset": p.preset,
        "tiebreak": p.params.tiebreak.to_string(),
        "early_stop": p.params.early_stop,
        "queries": run.queries,
    });
    write_run(a, &p, &run, extra)?;
    println!(
        "size {} depth {} error {} (ns {:.6})",
        run.report.tree.size(),
        run.report.tree.depth(),
        run.report.error,
        run.report.kappa
    );
    Ok(())
}

fn cmd_baseline(a: &RunArgs) -> Result<(), Failure> {
    let p = prepare(a, false, None)?;
    let start = Instant::now();
    let report = build_impurity_dt(&p.f, a.impurity, p.params.t, p.params.tiebreak, p.params.delta)?;
    let run = RunOutput {
        report,
        wall_ms: start.elapsed().as_millis(),
        queries: None,
        ledger: None,
    };
    let extra = json!({
        "method": a.impurity.to_string(),
        "tiebreak": p.params.tiebreak.to_string(),
    });
    write_run(a, &p, &run, extra)?;
    println!("size {} depth {} error {}", run.report.tree.size(), run.report.tree.depth(), run.report.error);
    Ok(())
}

fn final_potential(r: &BuildReport) -> f64 {
    r.trace.last().map_or(r.kappa, |row| row.potential)
}

fn cmd_compare(a: &RunArgs, sizes: &[usize]) -> Result<(), Failure> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Failure::Config(anyhow::anyhow!("--sizes needs positive budgets")));
    }
    let base = prepare(a, false, sizes.iter().max().copied())?;
    if let Some(&big) = sizes.iter().find(|&&t| a.n < usize::BITS as usize - 1 && t > 1 << a.n) {
        return Err(Failure::Config(stabledt::Error::SizeExceedsDomain { size: big, n: a.n }.into()));
    }
    let mut csv = String::from("method,size,error,potential\n");
    for &t in sizes {
        let mut params = base.params.clone();
        params.t = t;
        let p = Prepared { params, ..clone_prepared(&base) };
        let noisy = run_noisy(&p, a.seed)?.report;
        let _ = writeln!(csv, "noisy,{t},{},{}", noisy.error, final_potential(&noisy));
    }
    for &t in sizes {
        let r = build_impurity_dt(&base.f, a.impurity, t, base.params.tiebreak, base.params.delta)?;
        let _ = writeln!(csv, "{},{t},{},{}", a.impurity, r.error, final_potential(&r));
    }
    write_atomic(&a.out.join("compare.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn clone_prepared(p: &Prepared) -> Prepared {
    Prepared {
        f: p.f.clone(),
        spec: p.spec.clone(),
        params: p.params.clone(),
        mode: p.mode,
        preset: p.preset.clone(),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool, Failure> {
    let cfg = VerifyConfig {
        trials: a.trials,
        nmax: a.nmax,
        seed: a.seed,
    };
    if a.trials == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--trials must be positive")));
    }
    let reports = config(run_suite(a.suite, &cfg))?;
    for r in &reports {
        println!("{r}");
    }
    if let Some(out) = &a.out {
        write_atomic(out, &pretty(&reports)?)?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} properties, {failed} failed", reports.len());
    Ok(failed == 0)
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<(), Failure> {
    let spec: TargetSpec = config(a.target.parse())?;
    let f = config(make_target(&spec, a.n))?;
    let mut sp = spectrum(&f);
    if let Some(delta) = a.delta {
        sp = config(sp.attenuate_truncate(delta, a.d))?;
    }
    write_atomic(&a.out, &pretty(&sp.to_json())?)?;
    Ok(())
}

fn cmd_sq_demo(a: &DemoArgs) -> Result<(), Failure> {
    let mode = config(parse_mode(&a.mode))?;
    let (backend, tau) = mode.backend(a.seed).unwrap_or((SqBackend::Exact, 0.01));
    let cfg = DemoConfig {
        n: a.n,
        k: a.k,
        delta: a.delta,
        eps: a.eps,
        t: a.t,
        d: a.d,
        tau,
        backend,
        seed: a.seed,
    };
    let report = config(parity_separation_demo(&cfg))?;
    let text = pretty(&report)?;
    match &a.out {
        Some(out) => write_atomic(out, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Build(a) => cmd_build(a).map(|_| true),
        Command::Baseline(a) => cmd_baseline(a).map(|_| true),
        Command::Compare { run, sizes } => cmd_compare(run, sizes).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
        Command::Spectrum(a) => cmd_spectrum(a).map(|_| true),
        Command::SqDemo(a) => cmd_sq_demo(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}
