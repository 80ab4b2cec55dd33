//! Command implementations. Each command writes its outputs and a
//! [`RunManifest`] into the output directory.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use llns::diffusivity::{
    d2_effective_d, d_rep, d_rep_d2, d_truncated_from, d_truncated_solution, f1_closed, f1_lattice, f1_quadrature,
    f2_monte_carlo, nu_eff, richardson, F2Config,
};
use llns::divfree::{FrameRule, WaveVector};
use llns::fock::{read_snapshot, write_snapshot, GmresConfig};
use llns::params::check_cutoff;
use llns::report::{ConstantsReport, Method, Uncertainty};
use llns::spde::{self, Observed, SimConfig};
use llns::{ModelParams, Norm};

use crate::checks::{run_check, CheckOptions, CheckResult, ALL_CHECKS};
use crate::manifest::{digests, RunManifest, MANIFEST_FILE};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: m.into(),
        }
    }

    pub fn compute(m: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: m.into(),
        }
    }
}

impl From<llns::Error> for CliError {
    fn from(e: llns::Error) -> Self {
        CliError {
            code: if e.is_usage() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::compute(format!("i/o: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "llns", version, about = "Diffusivity constants, operator checks and simulations for the LLNS model")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "LLNS_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate diffusivity constants.
    Coeff(CoeffArgs),
    /// Run the operator and constants check suite.
    Verify(VerifyArgs),
    /// Simulate the Galerkin-truncated dynamics and estimate D.
    Simulate(SimulateArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Euclidean,
    Sup,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Norm {
        match n {
            NormArg::Euclidean => Norm::Euclidean,
            NormArg::Sup => Norm::Sup,
        }
    }
}

/// Accepts integers written as `4000000` or `4e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v < 1e18) {
        return Err(format!("`{s}` is not a positive integer"));
    }
    Ok(v as u64)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoeffArgs {
    /// Dimension (2 or 3).
    #[arg(long)]
    pub d: usize,
    /// Coupling λ for the λ-dependent rows.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// First-order coefficient by every route (d = 3).
    #[arg(long)]
    pub f1: bool,
    /// Second-order coefficient by Monte Carlo (d = 3).
    #[arg(long)]
    pub f2: bool,
    #[arg(long = "mc-samples", value_parser = parse_count, default_value = "4000000")]
    pub mc_samples: u64,
    #[arg(long = "mc-batches", default_value_t = 64)]
    pub mc_batches: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Mollifier scales for the lattice and resolvent rows.
    #[arg(long = "N", value_delimiter = ',')]
    pub cutoffs: Vec<f64>,
    /// Fock truncation degree; adds the truncated diffusivity Dⁿ rows.
    #[arg(long = "n")]
    pub degree: Option<usize>,
    /// Wave vector k for the lattice and resolvent rows.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<i32>,
    /// Mollifier norm for the finite-N and Monte Carlo routes.
    #[arg(long, value_enum, default_value_t = NormArg::Euclidean)]
    pub norm: NormArg,
    /// Directory caching resolvent solutions as kernel snapshots.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Comma-separated subset of checks.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Dimension the `--N` list refers to (2: replacement, 3: decoupling).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "N", value_delimiter = ',')]
    pub cutoffs: Vec<f64>,
    #[arg(long = "mc-samples", value_parser = parse_count, default_value = "2000000")]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    GreenKubo,
    Autocorr,
    Drift,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; replaces the model flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long = "N", default_value_t = 4.5)]
    pub cutoff: f64,
    /// Time horizon.
    #[arg(long = "T", default_value_t = 0.5)]
    pub horizon: f64,
    #[arg(long, default_value_t = 64)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record every `stride` steps (default: about 500 records).
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub estimate: Vec<EstimateKind>,
}

/// Resolved simulation request, as stored in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateRun {
    pub config: SimConfig,
    pub estimate: Vec<EstimateKind>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs one parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads.unwrap_or_else(default_threads);
    if threads == 0 {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    match cli.command {
        Command::Coeff(a) => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("llns-out"));
            execute("coeff", to_value(&a), threads, &out).map(|_| ())
        }
        Command::Verify(a) => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("llns-out"));
            execute("verify", to_value(&a), threads, &out).map(|_| ())
        }
        Command::Simulate(a) => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("llns-out"));
            let run = resolve_simulation(&a)?;
            execute("simulate", to_value(&run), threads, &out).map(|_| ())
        }
        Command::Replay(a) => {
            let out = cli.out.unwrap_or_else(|| {
                a.manifest.parent().unwrap_or(Path::new(".")).join("replay")
            });
            replay(&a.manifest, cli.threads, &out)
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("arguments serialize")
}

fn from_value<T: for<'de> Deserialize<'de>>(v: serde_json::Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::usage(format!("manifest parameters: {e}")))
}

/// Runs `command` with resolved `params` on a pool of `threads` workers and
/// writes the manifest.
pub fn execute(command: &str, params: serde_json::Value, threads: usize, out: &Path) -> CliResult<RunManifest> {
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::compute(e.to_string()))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let (files, seed) = pool.install(|| -> CliResult<(Vec<String>, Option<u64>)> {
        match command {
            "coeff" => {
                let a: CoeffArgs = from_value(params.clone())?;
                Ok((cmd_coeff(&a, out)?, Some(a.seed)))
            }
            "verify" => {
                let a: VerifyArgs = from_value(params.clone())?;
                Ok((cmd_verify(&a, out)?, Some(a.seed)))
            }
            "simulate" => {
                let r: SimulateRun = from_value(params.clone())?;
                Ok((cmd_simulate(&r, out)?, Some(r.config.seed)))
            }
            other => Err(CliError::usage(format!("unknown command `{other}`"))),
        }
    })?;
    let manifest = RunManifest {
        manifest_version: 1,
        command: command.into(),
        params,
        seed,
        code_version: crate::manifest::code_version(),
        threads,
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        outputs: digests(out, &files)?,
    };
    manifest.write(out)?;
    Ok(manifest)
}

fn replay(path: &Path, threads: Option<usize>, out: &Path) -> CliResult<()> {
    let m = RunManifest::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let threads = threads.unwrap_or(m.threads);
    let again = execute(&m.command, m.params.clone(), threads, out)?;
    let mut bad = Vec::new();
    for (file, digest) in &m.outputs {
        match again.outputs.get(file) {
            Some(d) if d == digest => println!("match     {file}"),
            _ => {
                println!("MISMATCH  {file}");
                bad.push(file.clone());
            }
        }
    }
    if bad.is_empty() {
        println!("replay of {} reproduced {} outputs in {}", m.command, m.outputs.len(), out.join(MANIFEST_FILE).display());
        Ok(())
    } else {
        Err(CliError::compute(format!("replay differs in {}", bad.join(", "))))
    }
}

fn write_text(out: &Path, name: &str, text: &str) -> CliResult<String> {
    fs::write(out.join(name), text)?;
    Ok(name.to_string())
}

fn write_json<T: Serialize>(out: &Path, name: &str, v: &T) -> CliResult<String> {
    let s = serde_json::to_string_pretty(v).expect("output serializes") + "\n";
    write_text(out, name, &s)
}

// ---------------------------------------------------------------- coeff

fn validate_coeff(a: &CoeffArgs) -> CliResult<()> {
    if !(a.d == 2 || a.d == 3) {
        return Err(CliError::usage(format!("--d {} (supported: 2, 3)", a.d)));
    }
    if !(a.lambda >= 0.0 && a.lambda.is_finite()) {
        return Err(CliError::usage("--lambda must be finite and ≥ 0"));
    }
    for &n in &a.cutoffs {
        check_cutoff(a.d, n)?;
    }
    if let Some(n) = a.degree {
        if n < 2 {
            return Err(CliError::usage("--n must be at least 2"));
        }
    }
    if !a.k.is_empty() {
        if a.k.len() != a.d {
            return Err(CliError::usage(format!("--k needs {} components", a.d)));
        }
        if a.k.iter().all(|&c| c == 0) {
            return Err(CliError::usage("--k must be nonzero"));
        }
    }
    if a.mc_batches == 0 || a.mc_samples < a.mc_batches {
        return Err(CliError::usage("--mc-samples must be at least --mc-batches ≥ 1"));
    }
    Ok(())
}

fn wave<const D: usize>(k: &[i32]) -> CliResult<WaveVector<D>> {
    let mut c = [0; D];
    if k.is_empty() {
        c[0] = 1;
    } else {
        c.copy_from_slice(k);
    }
    Ok(WaveVector::new(c)?)
}

pub fn cmd_coeff(a: &CoeffArgs, out: &Path) -> CliResult<Vec<String>> {
    validate_coeff(a)?;
    let mut r = ConstantsReport::new();
    let l = a.lambda;
    let norm: Norm = a.norm.into();
    if a.d == 2 {
        r.push("D", d2_effective_d(l), 0.0, Uncertainty::Tolerance, Method::ClosedForm, 0, "d=2 effective diffusivity");
        r.push(
            "D_rep",
            d_rep_d2(1.0 / (16.0 * std::f64::consts::PI), l),
            0.0,
            Uncertainty::Tolerance,
            Method::ClosedForm,
            0,
            "replacement diffusivity, d=2",
        );
        r.push("nu_eff_minus_1", nu_eff(l) - 1.0, 0.0, Uncertainty::Tolerance, Method::ClosedForm, 0, "conjectured effective viscosity");
        if let Some(n) = a.degree {
            dn_rows::<2>(a, n, norm, &mut r)?;
        }
    } else {
        let all = !a.f1 && !a.f2 && a.degree.is_none();
        let k = wave::<3>(&a.k)?;
        if a.f1 || all {
            r.push("f1", f1_closed(), 0.0, Uncertainty::Tolerance, Method::ClosedForm, 2, "first expansion coefficient");
            let (q, e) = f1_quadrature(&k, 1e-10)?;
            r.push("f1_quadrature", q, e, Uncertainty::Tolerance, Method::Quadrature, 2, "first expansion coefficient");
            let cutoffs = if a.cutoffs.is_empty() { vec![24.5, 48.5] } else { a.cutoffs.clone() };
            let mut vals = Vec::new();
            for &n in &cutoffs {
                let p = ModelParams::new(3, 1.0, n, 2)?.with_norm(norm);
                let v = f1_lattice(&p, &k, 0)?;
                r.push(format!("f1_lattice_N={n}"), v, 0.0, Uncertainty::Tolerance, Method::Lattice, 2, "first expansion coefficient at finite N");
                vals.push((n, v));
            }
            if vals.len() >= 2 {
                let (n1, v1) = vals[vals.len() - 2];
                let (n2, v2) = vals[vals.len() - 1];
                let x = richardson(n1, v1, n2, v2);
                r.push("f1_lattice_extrapolated", x, (x - v2).abs(), Uncertainty::Tolerance, Method::Lattice, 2, "first expansion coefficient");
            }
        }
        if a.f2 || all {
            let mc = f2_monte_carlo(&F2Config {
                samples: a.mc_samples,
                batches: a.mc_batches,
                seed: a.seed,
                norm,
            })?;
            r.push("f2", mc.value, mc.stderr, Uncertainty::Stderr, Method::MonteCarlo, 4, "second expansion coefficient");
        }
        r.push("D_rep", d_rep(f1_closed(), l), 0.0, Uncertainty::Tolerance, Method::ClosedForm, 0, "replacement diffusivity, d=3");
        r.push("nu_eff_minus_1", nu_eff(l) - 1.0, 0.0, Uncertainty::Tolerance, Method::ClosedForm, 0, "conjectured effective viscosity");
        if let Some(n) = a.degree {
            dn_rows::<3>(a, n, norm, &mut r)?;
        }
    }
    print!("{}", r.to_table());
    Ok(vec![write_text(out, "coeff.json", &(r.to_json() + "\n"))?, write_text(out, "coeff.txt", &r.to_table())?])
}

fn dn_rows<const D: usize>(a: &CoeffArgs, n: usize, norm: Norm, r: &mut ConstantsReport) -> CliResult<()> {
    let k = wave::<D>(&a.k)?;
    let default = if D == 2 { 4.0 } else { 4.5 };
    let cutoffs = if a.cutoffs.is_empty() { vec![default] } else { a.cutoffs.clone() };
    let tol = GmresConfig::default().tol;
    for &cut in &cutoffs {
        let p = ModelParams::new(D, a.lambda, cut, n)?.with_norm(norm);
        let v = cached_dn::<D>(&p, &k, a.cache.as_deref())?;
        r.push(format!("Dn_N={cut}_n={n}"), v, (v * tol).abs(), Uncertainty::Tolerance, Method::Resolvent, 0, "truncated resolvent diffusivity");
        if a.lambda > 0.0 {
            let s = v / (a.lambda * a.lambda);
            r.push(
                format!("Dn_over_lambda2_N={cut}_n={n}"),
                s,
                (s * tol).abs(),
                Uncertainty::Tolerance,
                Method::Resolvent,
                0,
                "truncated resolvent diffusivity over λ²",
            );
        }
    }
    Ok(())
}

fn cache_name<const D: usize>(p: &ModelParams, k: &WaveVector<D>) -> String {
    let ks: Vec<String> = k.components().iter().map(|c| c.to_string()).collect();
    format!(
        "dn-d{}-cutoff{}-deg{}-lambda{}-{:?}-k{}.csv",
        D,
        p.cutoff,
        p.degree,
        p.lambda,
        p.norm,
        ks.join("_")
    )
    .to_lowercase()
}

/// Dⁿ, reusing the stored degree-2 resolvent solution when the cache has it.
fn cached_dn<const D: usize>(p: &ModelParams, k: &WaveVector<D>, cache: Option<&Path>) -> CliResult<f64> {
    let rule = FrameRule::FirstCanonical;
    let Some(dir) = cache else {
        return Ok(d_truncated_solution(p, k, rule)?.0.value);
    };
    let path = dir.join(cache_name(p, k));
    if let Ok(f) = fs::File::open(&path) {
        if let Ok((h, v)) = read_snapshot::<D, _>(BufReader::new(f)) {
            if h.cutoff == p.cutoff && h.lambda == p.lambda && h.n == 2 {
                return Ok(d_truncated_from(p, k, rule, &v));
            }
        }
    }
    let (d, v) = d_truncated_solution(p, k, rule)?;
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(&path)?);
    write_snapshot(&v, p.cutoff, p.lambda, &mut w)?;
    w.flush()?;
    Ok(d.value)
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    version: u32,
    passed: bool,
    checks: &'a [CheckResult],
}

pub fn cmd_verify(a: &VerifyArgs, out: &Path) -> CliResult<Vec<String>> {
    let names: Vec<String> = if a.only.is_empty() {
        ALL_CHECKS.iter().map(|s| s.to_string()).collect()
    } else {
        a.only.clone()
    };
    if let Some(bad) = names.iter().find(|n| !ALL_CHECKS.contains(&n.as_str())) {
        return Err(CliError::usage(format!("unknown check `{bad}` (available: {})", ALL_CHECKS.join(", "))));
    }
    let mut opts = CheckOptions {
        mc_samples: a.mc_samples,
        seed: a.seed,
        ..CheckOptions::default()
    };
    if !a.cutoffs.is_empty() {
        let d = match a.d {
            Some(d) => d,
            None if a.cutoffs.iter().all(|n| n.fract() == 0.0) => 2,
            None => 3,
        };
        for &n in &a.cutoffs {
            check_cutoff(d, n)?;
        }
        match d {
            2 => opts.replacement_cutoffs = a.cutoffs.clone(),
            3 => opts.decoupling_cutoffs = a.cutoffs.clone(),
            _ => return Err(CliError::usage(format!("--d {d} (supported: 2, 3)"))),
        }
    }
    let mut results = Vec::new();
    for n in &names {
        let r = run_check(n, &opts).expect("known check");
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed);
    let file = write_json(
        out,
        "verify.json",
        &VerifyReport {
            version: 1,
            passed,
            checks: &results,
        },
    )?;
    if !passed {
        let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        // outputs are still recorded before reporting the failure
        let m = RunManifest {
            manifest_version: 1,
            command: "verify".into(),
            params: to_value(a),
            seed: Some(a.seed),
            code_version: crate::manifest::code_version(),
            threads: rayon::current_num_threads(),
            started_unix: 0.0,
            wall_clock_seconds: 0.0,
            outputs: digests(out, &[file])?,
        };
        m.write(out)?;
        return Err(CliError::compute(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(vec![file])
}

// ---------------------------------------------------------------- simulate

fn default_observe(d: usize) -> Vec<Observed> {
    (0..d)
        .flat_map(|i| {
            let mut k = vec![0; d];
            k[i] = 1;
            (0..d - 1).map(move |alpha| Observed { k: k.clone(), alpha })
        })
        .collect()
}

pub fn resolve_simulation(a: &SimulateArgs) -> CliResult<SimulateRun> {
    let config = match &a.config {
        Some(path) => {
            let s = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            SimConfig::from_json(&s)?
        }
        None => {
            if !(a.d == 2 || a.d == 3) {
                return Err(CliError::usage(format!("--d {} (supported: 2, 3)", a.d)));
            }
            check_cutoff(a.d, a.cutoff)?;
            let mut c = SimConfig {
                d: a.d,
                lambda: a.lambda,
                cutoff: a.cutoff,
                norm: a.norm.map(Norm::from),
                dt: a.dt,
                horizon: a.horizon,
                ensemble: a.ensemble,
                seed: a.seed,
                stride: 1,
                observe: default_observe(a.d),
            };
            c.stride = a.stride.unwrap_or_else(|| (c.steps() / 500).max(1));
            c.validate()?;
            c
        }
    };
    let estimate = if a.estimate.is_empty() && config.ensemble >= 8 {
        vec![EstimateKind::GreenKubo, EstimateKind::Drift]
    } else {
        a.estimate.clone()
    };
    Ok(SimulateRun { config, estimate })
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    name: String,
    value: f64,
    stderr: f64,
    samples: usize,
    method: &'static str,
}

#[derive(Debug, Serialize)]
struct EstimatorReport {
    version: u32,
    lambda: f64,
    cutoff: f64,
    entries: Vec<EstimateRow>,
}

pub fn cmd_simulate(r: &SimulateRun, out: &Path) -> CliResult<Vec<String>> {
    let cfg = &r.config;
    let ens = spde::run(cfg)?;
    let obs: Vec<usize> = (0..cfg.observe.len()).collect();
    let l2 = cfg.lambda * cfg.lambda;
    let mut entries = Vec::new();
    let mut push = |name: &str, e: spde::Estimate, method: &'static str, scaled: bool| {
        entries.push(EstimateRow {
            name: name.into(),
            value: e.value,
            stderr: e.stderr,
            samples: e.samples,
            method,
        });
        if scaled && l2 > 0.0 {
            entries.push(EstimateRow {
                name: format!("{name}_over_lambda2"),
                value: e.value / l2,
                stderr: e.stderr / l2,
                samples: e.samples,
                method,
            });
        }
    };
    for kind in &r.estimate {
        match kind {
            EstimateKind::GreenKubo => push("D_green_kubo", spde::green_kubo(&ens, &obs)?, "green-kubo", true),
            EstimateKind::Autocorr => {
                let e = spde::mode_autocorr(&ens, &obs, 200, 0.1)?;
                push("D_autocorr", e, "mode-autocorrelation", true)
            }
            EstimateKind::Drift => {
                let (s, se) = spde::energy_drift(&ens);
                push(
                    "energy_drift",
                    spde::Estimate {
                        value: s,
                        stderr: se,
                        samples: ens.members.len(),
                    },
                    "energy-slope",
                    false,
                )
            }
        }
    }
    for e in &entries {
        println!("{:<28} {:>14.6e} ± {:.2e}  ({})", e.name, e.value, e.stderr, e.method);
    }
    let mut w = BufWriter::new(fs::File::create(out.join("trajectory.csv"))?);
    spde::write_csv(&ens, &mut w)?;
    w.flush()?;
    let rep = EstimatorReport {
        version: 1,
        lambda: cfg.lambda,
        cutoff: cfg.cutoff,
        entries,
    };
    Ok(vec![
        "trajectory.csv".into(),
        write_json(out, "estimates.json", &rep)?,
        write_json(out, "config.json", cfg)?,
    ])
}
