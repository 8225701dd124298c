//! Command-line front end. Exit codes: 0 on success, 1 when a check fails or
//! the search backstop trips, 2 on configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{alpha_general, beta_general, BoundSet, SpectralBounds};
use crate::error::Error;
use crate::hermitian::DEFAULT_ORDER_TOL;
use crate::instances::{equality_witness, MAX_DIM};
use crate::means::MeanSpec;
use crate::search::{falsify, ratio_grid, sweep, sweep_csv, Target};
use crate::verify::{
    check_ando, check_dm, check_dm_squared, check_gruss, check_polya_szego, check_squared_ps, default_means,
    run_verify, summarize, CheckKind, InequalityReport, Summary, VerifyConfig,
};

pub const TOL_ENV: &str = "SHARPBOUND_TOL";
pub const DEMO_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "sharpbound", version, about = "Certify squared Pólya–Szegő and Diaz–Metcalf operator inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every bound constant for one set of spectral bounds.
    Constants(ConstantsArgs),
    /// Check the inequalities on seeded random instances.
    Verify(VerifyArgs),
    /// Search for a counterexample to a sharper squared constant.
    Falsify(FalsifyArgs),
    /// Run `falsify` for both targets over a grid of condition numbers.
    Sweep(SweepArgs),
    /// Equality witnesses and a short bulk pass, as a table.
    Demo,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub m1: Option<f64>,
    #[arg(long = "M1")]
    pub big_m1: Option<f64>,
    #[arg(long)]
    pub m2: Option<f64>,
    #[arg(long = "M2")]
    pub big_m2: Option<f64>,
}

impl BoundArgs {
    /// `None` when no flag is given; all four are needed otherwise.
    fn resolve(&self) -> Result<Option<SpectralBounds>, CliError> {
        let fields = [("--m1", self.m1), ("--M1", self.big_m1), ("--m2", self.m2), ("--M2", self.big_m2)];
        if fields.iter().all(|(_, v)| v.is_none()) {
            return Ok(None);
        }
        if let Some((name, _)) = fields.iter().find(|(_, v)| v.is_none()) {
            return Err(CliError::Config(format!("{name}: missing (give all of --m1 --M1 --m2 --M2)")));
        }
        let b = SpectralBounds::new(fields[0].1.unwrap(), fields[1].1.unwrap(), fields[2].1.unwrap(), fields[3].1.unwrap())
            .map_err(|e| CliError::Config(format!("bounds: {e}")))?;
        Ok(Some(b))
    }

    fn require(&self) -> Result<SpectralBounds, CliError> {
        self.resolve()?
            .ok_or_else(|| CliError::Config("--m1 --M1 --m2 --M2: required".into()))
    }
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub bounds: BoundArgs,
    /// Also report the constants of a Kubo–Ando mean (repeatable).
    #[arg(long)]
    pub mean: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Comma-separated checker names, or `all`.
    #[arg(long, default_value = "all")]
    pub checks: String,
    /// Means for the mean-dependent checks (repeatable); defaults to
    /// weighted(0.25), weighted(0.5), weighted(0.75).
    #[arg(long)]
    pub mean: Vec<String>,
    /// Fixed spectral bounds; random per instance when omitted.
    #[command(flatten)]
    pub bounds: BoundArgs,
    /// Relative Loewner tolerance; overrides SHARPBOUND_TOL.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Per-instance reports as JSON lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the run summary JSON here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FalsifyArgs {
    #[arg(long)]
    pub target: String,
    #[command(flatten)]
    pub bounds: BoundArgs,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Condition numbers `M²/m²` of A and B; every ordered pair is a cell.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Evaluations per cell and target.
    #[arg(long, default_value_t = 1_000)]
    pub budget: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(Error::Io(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

/// Flag, then `SHARPBOUND_TOL`, then the default.
pub fn resolve_tolerance(flag: Option<f64>, env: Option<&str>) -> Result<f64, CliError> {
    let valid = |t: f64| t.is_finite() && t > 0.0;
    if let Some(t) = flag {
        return if valid(t) { Ok(t) } else { Err(CliError::Config(format!("--tol: must be positive, got {t}"))) };
    }
    if let Some(raw) = env {
        return match raw.trim().parse::<f64>() {
            Ok(t) if valid(t) => Ok(t),
            _ => Err(CliError::Config(format!("{TOL_ENV}: expected a positive number, got {raw:?}"))),
        };
    }
    Ok(DEFAULT_ORDER_TOL)
}

fn parse_means(raw: &[String]) -> Result<Vec<MeanSpec>, CliError> {
    raw.iter()
        .map(|s| s.parse::<MeanSpec>().map_err(|e| CliError::Config(format!("--mean {s:?}: {e}"))))
        .collect()
}

fn check_dim(flag: &str, n: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_DIM {
        return Err(CliError::Config(format!("{flag}: dimension must be in 1..={MAX_DIM}, got {n}")));
    }
    Ok(())
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if jobs == Some(0) {
        return Err(CliError::Config("--jobs: must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    Ok(pool.install(f))
}

fn emit(path: Option<&Path>, content: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content)?,
        None => stdout.write_all(content.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn main_with(args: Vec<OsString>, env_tol: Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(cli, env_tol.as_deref(), stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "sharpbound: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, env_tol: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Constants(args) => constants(&args, stdout),
        Command::Verify(args) => verify(&args, env_tol, stdout, stderr),
        Command::Falsify(args) => falsify_cmd(&args, stdout),
        Command::Sweep(args) => sweep_cmd(&args, stdout),
        Command::Demo => demo(env_tol, stdout),
    }
}

fn constants(args: &ConstantsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let b = args.bounds.require()?;
    let means = parse_means(&args.mean)?;
    let set = BoundSet::new(&b);
    let mut general = Vec::new();
    for m in &means {
        let f = m.representing_function();
        let alpha = alpha_general(&f, &b)?;
        let beta = beta_general(&f, &b, alpha)?;
        general.push(json!({ "mean": m.to_json(), "label": m.label(), "alpha": alpha, "beta": beta }));
    }
    let mut out = json!({
        "bounds": b,
        "alpha": set.alpha,
        "beta": set.beta,
        "dm": set.dm,
        "K": set.dm_squared,
        "gruss": set.gruss,
        "kantorovich": set.kantorovich,
        "alpha_sq": set.alpha * set.alpha,
        "dm_sq": set.dm * set.dm,
        "K_sq": set.dm_squared * set.dm_squared,
    });
    if !general.is_empty() {
        out["general"] = json!(general);
    }
    emit(None, &pretty(&out), stdout)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    command: &'static str,
    seed: u64,
    dims: &'a [usize],
    count: usize,
    checks: Vec<&'static str>,
    means: Vec<String>,
    bounds: Option<SpectralBounds>,
    tolerance: f64,
    reports: usize,
    failures: usize,
    passed: bool,
    summaries: Vec<Summary>,
}

fn verify(args: &VerifyArgs, env_tol: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let checks = CheckKind::parse_list(&args.checks).map_err(|e| CliError::Config(format!("--checks: {e}")))?;
    let means = if args.mean.is_empty() { default_means() } else { parse_means(&args.mean)? };
    let bounds = args.bounds.resolve()?;
    let tol_rel = resolve_tolerance(args.tol, env_tol)?;
    if args.dims.is_empty() {
        return Err(CliError::Config("--dims: empty".into()));
    }
    for &n in &args.dims {
        check_dim("--dims", n)?;
    }
    if args.count == 0 {
        return Err(CliError::Config("--count: must be at least 1".into()));
    }

    let cfg = VerifyConfig {
        dims: args.dims.clone(),
        count: args.count,
        seed: args.seed,
        checks: checks.clone(),
        means: means.clone(),
        bounds,
        tol_rel,
    };
    let reports = in_pool(args.jobs, || run_verify(&cfg))??;
    let failing: Vec<&InequalityReport> = reports.iter().filter(|r| !r.passed()).collect();

    if let Some(path) = &args.out {
        let mut lines = String::new();
        for r in &reports {
            lines.push_str(&serde_json::to_string(r).expect("serializable"));
            lines.push('\n');
        }
        fs::write(path, lines)?;
    }
    let summary = VerifySummary {
        command: "verify",
        seed: args.seed,
        dims: &args.dims,
        count: args.count,
        checks: checks.iter().map(|c| c.name()).collect(),
        means: means.iter().map(MeanSpec::label).collect(),
        bounds,
        tolerance: tol_rel,
        reports: reports.len(),
        failures: failing.len(),
        passed: failing.is_empty(),
        summaries: summarize(&reports),
    };
    let text = pretty(&summary);
    if let Some(path) = &args.summary {
        fs::write(path, &text)?;
    }
    emit(None, &text, stdout)?;
    for r in &failing {
        writeln!(stderr, "{}", serde_json::to_string(r).expect("serializable"))?;
    }
    Ok(if failing.is_empty() { 0 } else { 1 })
}

fn falsify_cmd(args: &FalsifyArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let target: Target = args.target.parse().map_err(|e| CliError::Config(format!("--target: {e}")))?;
    let b = args.bounds.require()?;
    check_dim("--dim", args.dim)?;
    if args.budget == 0 {
        return Err(CliError::Config("--budget: must be at least 1".into()));
    }
    let report = in_pool(args.jobs, || falsify(target, &b, args.dim, args.budget, args.seed))??;
    emit(args.out.as_deref(), &pretty(&report.to_json()), stdout)?;
    Ok(if report.backstop_tripped { 1 } else { 0 })
}

fn sweep_cmd(args: &SweepArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if args.ratios.is_empty() {
        return Err(CliError::Config("--ratios: empty".into()));
    }
    if let Some(r) = args.ratios.iter().find(|r| !(r.is_finite() && **r >= 1.0)) {
        return Err(CliError::Config(format!("--ratios: each ratio must be at least 1, got {r}")));
    }
    check_dim("--dim", args.dim)?;
    if args.budget == 0 {
        return Err(CliError::Config("--budget: must be at least 1".into()));
    }
    let grid = ratio_grid(&args.ratios);
    let rows = in_pool(args.jobs, || sweep(&grid, args.dim, args.budget, args.seed))??;
    emit(args.out.as_deref(), &sweep_csv(&rows), stdout)?;
    Ok(if rows.iter().any(|r| r.backstop_tripped) { 1 } else { 0 })
}

fn demo(env_tol: Option<&str>, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let tol_rel = resolve_tolerance(None, env_tol)?;
    let b = SpectralBounds::new(1.0, 2.0, 1.0, 2.0)?;
    let w = equality_witness(&b);
    let witness = vec![
        check_polya_szego(&w, tol_rel)?,
        check_squared_ps(&w, tol_rel)?,
        check_dm(&w, tol_rel)?,
        check_dm_squared(&w, tol_rel)?,
        check_gruss(&w, tol_rel)?,
        check_ando(&w, &MeanSpec::Geometric, tol_rel)?,
    ];

    let mut cfg = VerifyConfig::new(DEMO_SEED);
    cfg.dims = vec![4];
    cfg.count = 40;
    cfg.bounds = Some(b);
    cfg.tol_rel = tol_rel;
    let bulk = run_verify(&cfg)?;

    let mut out = String::new();
    let header = format!("{:<32} {:>14} {:>14} {:>12}\n", "check", "constant", "optimal", "slack");
    out.push_str(&format!("equality witness at (m1, M1, m2, M2) = (1, 2, 1, 2)\n{header}"));
    for r in &witness {
        out.push_str(&format!(
            "{:<32} {:>14.8} {:>14.8} {:>12.3e}\n",
            r.check_name, r.theorem_constant, r.optimal_constant, r.slack
        ));
    }
    out.push_str(&format!("\nbulk pass: n = 4, {} instances, seed {DEMO_SEED}\n{header}", cfg.count));
    let flat: Vec<&InequalityReport> = bulk.iter().flat_map(InequalityReport::flatten).collect();
    for name in unique_names(&flat) {
        let rows: Vec<&InequalityReport> = flat.iter().copied().filter(|r| r.check_name == name).collect();
        if name == "sandwich" {
            continue;
        }
        let constant = rows[0].theorem_constant;
        let optimal = rows.iter().map(|r| r.optimal_constant).fold(f64::NEG_INFINITY, f64::max);
        let slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        out.push_str(&format!("{name:<32} {constant:>14.8} {optimal:>14.8} {slack:>12.3e}\n"));
    }
    let failures = witness.iter().chain(&bulk).filter(|r| !r.passed()).count();
    out.push_str(&format!("\nfailures: {failures}\n"));
    emit(None, &out, stdout)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

fn unique_names(reports: &[&InequalityReport]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in reports {
        if !names.contains(&r.check_name) {
            names.push(r.check_name.clone());
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str], env: Option<&str>) -> (i32, String, String) {
        let mut argv: Vec<OsString> = vec!["sharpbound".into()];
        argv.extend(args.iter().map(OsString::from));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(argv, env.map(String::from), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn tolerance_precedence() {
        assert_eq!(resolve_tolerance(Some(1e-6), Some("1e-7")).unwrap(), 1e-6);
        assert_eq!(resolve_tolerance(None, Some("1e-7")).unwrap(), 1e-7);
        assert_eq!(resolve_tolerance(None, None).unwrap(), DEFAULT_ORDER_TOL);
        assert_eq!(resolve_tolerance(None, Some("abc")).unwrap_err().exit_code(), 2);
        assert_eq!(resolve_tolerance(Some(-1.0), None).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_errors_exit_two() {
        let (code, _, err) = run_args(&["verify", "--seed", "1", "--checks", "no_such_check"], None);
        assert_eq!(code, 2);
        assert!(err.contains("--checks"));
        let (code, _, err) = run_args(&["constants", "--m1", "1", "--M1", "2", "--m2", "1"], None);
        assert_eq!(code, 2);
        assert!(err.contains("--M2"));
        let (code, _, _) = run_args(&["verify", "--count", "3"], None);
        assert_eq!(code, 2);
        let (code, _, err) = run_args(&["verify", "--seed", "1", "--count", "1", "--dims", "1"], Some("x"));
        assert_eq!(code, 2);
        assert!(err.contains(TOL_ENV));
        let (code, _, _) = run_args(&["falsify", "--target", "nope", "--m1", "1", "--M1", "2", "--m2", "1", "--M2", "2", "--seed", "1"], None);
        assert_eq!(code, 2);
        let (code, _, _) = run_args(&["sweep", "--ratios", "0.5", "--seed", "1"], None);
        assert_eq!(code, 2);
    }

    #[test]
    fn constants_with_means() {
        let (code, out, _) = run_args(
            &["constants", "--m1", "1", "--M1", "2", "--m2", "1", "--M2", "2", "--mean", "geometric", "--mean", "harmonic"],
            None,
        );
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["general"].as_array().unwrap().len(), 2);
        let ga = v["general"][0]["alpha"].as_f64().unwrap();
        assert!((ga - 1.25).abs() < 1e-10);
    }
}
