//! `minmod`: profiles, criterion searches, orbits, band constructions and
//! invariant suites for products with negative real zeros.

mod bundle;
mod output;
mod spec;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use minmod_core::{
    beurling_verify, brute_force_extrema, criterion_witness, escape_threshold, iterate_modulus, lower_order_half_bands,
    m_tilde_profile, minimal_type_bands, profile_at, sample_grid, sandwich_check, trap_check, DeltaSpec, DensityRule,
    EntireProductFunction, Error, EvalSettings, GrowthProfile, LogRadius, MapKind, QuadSettings, ScanSettings,
    SearchSettings,
};

use bundle::{cache_key, Cache, ResultBundle};
use spec::{settle, Family, FunctionSpec};

const LN_10: f64 = std::f64::consts::LN_10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergent(_) | Error::UnboundedTail(_) => CliError::Numeric(e.to_string()),
            other => CliError::Spec(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "minmod", version, about = "Growth and minimum-modulus workbench for entire functions")]
struct Cli {
    /// Cache directory (overrides MINMOD_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Ignore any configured cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Relative tolerance for evaluations (overrides the spec).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the result bundle here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate log M, log m, eps, k on a log grid (CSV).
    Profile {
        /// Function spec file (TOML, schema 1).
        spec: PathBuf,
        /// log10 of the smallest radius.
        #[arg(long)]
        from: f64,
        /// log10 of the largest radius.
        #[arg(long)]
        to: f64,
        /// Total number of radii (overrides --points-per-decade).
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 16)]
        points_per_decade: u32,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// SVG plot destination.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Search for s < r with M(s) >= r^2 satisfying the growth criterion.
    Criterion {
        /// Function spec file (TOML, schema 1).
        spec: PathBuf,
        /// log10 radii, comma separated.
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        points_per_decade: u32,
    },
    /// Iterate m or M from the given starts.
    Orbit {
        /// Function spec file (TOML, schema 1).
        spec: PathBuf,
        /// log10 start radii, comma separated.
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        start: Vec<f64>,
        #[arg(long, value_enum, default_value = "min")]
        map: MapArg,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        /// log10 escape radius; default 12, capped by the evaluable range.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Build a band sequence and the matching spec.
    Construct {
        #[arg(value_enum)]
        kind: ConstructKind,
        #[arg(long, allow_hyphen_values = true)]
        seed_log_a0: f64,
        #[arg(long)]
        seed_log_b0: f64,
        #[arg(long, default_value_t = 4)]
        n_bands: usize,
        #[arg(long, default_value_t = 10.0)]
        moderation: f64,
        /// delta(r) = scale / (log r)^power.
        #[arg(long, default_value_t = 1.0)]
        delta_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_power: f64,
        #[arg(long, value_enum)]
        density: Option<DensityArg>,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// Also write the function spec (TOML) here.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Run an invariant suite; exit status 4 if any invariant fails.
    Verify {
        /// Function spec file (TOML, schema 1).
        spec: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long, default_value_t = 6.0)]
        to: f64,
        /// Check a previously emitted profile CSV against fresh evaluations.
        #[arg(long)]
        profile_csv: Option<PathBuf>,
    },
    /// Running maximum of the minimum modulus on a log grid.
    Mtilde {
        /// Function spec file (TOML, schema 1).
        spec: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 8)]
        points_per_decade: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructKind {
    MinimalType,
    LowerHalf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Balanced,
    GrowthCap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Full,
    Sandwich,
    Beurling,
    Angular,
    Trap,
}

struct Ctx {
    cache: Option<Cache>,
    tolerance: Option<f64>,
}

fn load_spec(path: &Path) -> Result<FunctionSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    FunctionSpec::parse(&text).map_err(|e| match e {
        CliError::Spec(m) => CliError::Spec(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Returns the bundle text, from the cache when present.
fn cached(
    ctx: &Ctx,
    digest: Option<String>,
    command: String,
    compute: impl FnOnce() -> Result<serde_json::Value, CliError>,
) -> Result<String, CliError> {
    let key = cache_key(digest.as_deref(), &command);
    if let Some(hit) = ctx.cache.as_ref().and_then(|c| c.get(&key)) {
        return Ok(hit);
    }
    let text = ResultBundle::new(digest, command, compute()?).to_json();
    if let Some(c) = &ctx.cache {
        c.put(&key, &text)?;
    }
    Ok(text)
}

fn outputs_of(text: &str) -> Result<serde_json::Value, CliError> {
    let b: ResultBundle = serde_json::from_str(text).map_err(|e| CliError::Io(format!("bundle: {e}")))?;
    Ok(b.outputs)
}

fn check_range(f: &EntireProductFunction, settings: &EvalSettings, top_lr: f64) -> Result<(), CliError> {
    let limit = f.max_evaluable_lr(settings);
    if top_lr > limit {
        return Err(CliError::Spec(format!(
            "log10 radius {:.4} beyond the evaluable range (log10 r <= {:.4})",
            top_lr / LN_10,
            limit / LN_10
        )));
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => write_file(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        cache: if cli.no_cache { None } else { Cache::locate(cli.cache_dir.as_deref()) },
        tolerance: cli.tolerance,
    };
    let out = cli.output.as_deref();
    match cli.command {
        Command::Profile { spec, from, to, points, points_per_decade, csv, plot } => {
            let spec = load_spec(&spec)?;
            if !(from < to) {
                return Err(CliError::Spec("--from must be below --to".into()));
            }
            let settings = spec.settings(ctx.tolerance)?;
            let lrs: Vec<f64> = match points {
                Some(n) if n >= 2 => (0..n).map(|i| LN_10 * (from + (to - from) * i as f64 / (n - 1) as f64)).collect(),
                Some(n) => return Err(CliError::Spec(format!("--points {n}: need at least 2"))),
                None => sample_grid(from * LN_10, to * LN_10, points_per_decade),
            };
            let command = format!("profile lr={:?} tol={:?}", (from, to, lrs.len()), settings.rel_tolerance);
            let text = cached(&ctx, Some(spec.digest()), command, || {
                let built = spec.build()?;
                let f = built.function;
                check_range(&f, &settings, *lrs.last().unwrap())?;
                let profile = profile_at(&f, &lrs, &settings)?;
                Ok(json!({
                    "csv_schema": output::CSV_SCHEMA,
                    "profile": profile,
                    "valid_up_to": f.valid_up_to,
                    "bands": built.bands,
                    "horizon_after_bands": built.horizon,
                }))
            })?;
            let profile: GrowthProfile = serde_json::from_value(outputs_of(&text)?["profile"].clone())
                .map_err(|e| CliError::Io(format!("bundle: {e}")))?;
            match &csv {
                Some(p) => {
                    let file = fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                    output::write_profile_csv(&profile, file)?;
                }
                None => output::write_profile_csv(&profile, std::io::stdout())?,
            }
            if let Some(p) = plot {
                write_file(&p, &output::profile_svg(&profile))?;
            }
            if out.is_some() || csv.is_some() {
                emit(out, &text)?;
            }
            Ok(())
        }
        Command::Criterion { spec, at, points_per_decade } => {
            let spec = load_spec(&spec)?;
            let settings = spec.settings(ctx.tolerance)?;
            let command = format!("criterion at={at:?} ppd={points_per_decade} tol={:?}", settings.rel_tolerance);
            let text = cached(&ctx, Some(spec.digest()), command, || {
                let f = spec.build()?.function;
                let search = SearchSettings { points_per_decade, ..Default::default() };
                let mut reports = Vec::new();
                for &x in &at {
                    check_range(&f, &settings, x * LN_10)?;
                    reports.push(criterion_witness(&f, LogRadius::new(x * LN_10)?, &search, &settings)?);
                }
                Ok(json!({ "reports": reports }))
            })?;
            emit(out, &text)
        }
        Command::Orbit { spec, start, map, budget, threshold } => {
            let spec = load_spec(&spec)?;
            let settings = spec.settings(ctx.tolerance)?;
            let command =
                format!("orbit start={start:?} map={} budget={budget} threshold={threshold:?} tol={:?}", match map {
                    MapArg::Min => "min",
                    MapArg::Max => "max",
                }, settings.rel_tolerance);
            let text = cached(&ctx, Some(spec.digest()), command, || {
                let f = spec.build()?.function;
                let th = match threshold {
                    Some(t) => t * LN_10,
                    None => escape_threshold(&f, &settings),
                };
                let kind = match map {
                    MapArg::Min => MapKind::Min,
                    MapArg::Max => MapKind::Max,
                };
                let scan = ScanSettings::default();
                let mut records = Vec::new();
                for &s in &start {
                    records.push(iterate_modulus(&f, LogRadius::new(s * LN_10)?, kind, budget, th, &scan, &settings)?);
                }
                Ok(json!({ "escape_log_threshold": th, "orbits": records }))
            })?;
            emit(out, &text)
        }
        Command::Construct {
            kind,
            seed_log_a0,
            seed_log_b0,
            n_bands,
            moderation,
            delta_scale,
            delta_power,
            density,
            budget,
            spec_out,
        } => {
            let delta = if delta_power == 1.0 {
                DeltaSpec::InverseLog { scale: delta_scale }
            } else {
                DeltaSpec::InversePowerLog { scale: delta_scale, power: delta_power }
            };
            let density = density.map(|d| match d {
                DensityArg::Balanced => DensityRule::Balanced,
                DensityArg::GrowthCap => DensityRule::GrowthCap { delta: delta.clone() },
            });
            let family = match kind {
                ConstructKind::MinimalType => Family::BandsMinimalType {
                    delta: delta.clone(),
                    seed_log_a0,
                    seed_log_b0,
                    n_bands,
                    moderation_exponent: moderation,
                    density,
                    budget,
                    drop_first: 0,
                },
                ConstructKind::LowerHalf => {
                    Family::BandsLowerHalf { seed_log_a0, seed_log_b0, n_bands, density, budget, drop_first: 0 }
                }
            };
            let fspec = FunctionSpec { schema: spec::SCHEMA, log_c: 0.0, family, eval: Default::default() };
            let command = "construct".to_string();
            let text = cached(&ctx, Some(fspec.digest()), command, || {
                let (seq, horizon) = match kind {
                    ConstructKind::MinimalType => {
                        settle(minimal_type_bands(&delta, seed_log_a0, seed_log_b0, n_bands, moderation))?
                    }
                    ConstructKind::LowerHalf => settle(lower_order_half_bands(seed_log_a0, seed_log_b0, n_bands))?,
                };
                let checks = match kind {
                    ConstructKind::MinimalType => seq.verify_minimal_type()?,
                    ConstructKind::LowerHalf => seq.verify_lower_order_half(),
                };
                Ok(json!({
                    "spec": fspec,
                    "spec_toml": fspec.to_toml(),
                    "bands": seq,
                    "representable_bands": seq.bands.len(),
                    "stopped_at_horizon": horizon.is_some(),
                    "moderation_exponent": moderation,
                    "recurrence_checks": checks,
                }))
            })?;
            if let Some(p) = spec_out {
                write_file(&p, &fspec.to_toml())?;
            }
            emit(out, &text)
        }
        Command::Verify { spec, suite, from, to, profile_csv } => {
            let spec = load_spec(&spec)?;
            let settings = spec.settings(ctx.tolerance)?;
            if !(from < to) {
                return Err(CliError::Spec("--from must be below --to".into()));
            }
            let csv_text = match &profile_csv {
                Some(p) => Some(fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
                None => None,
            };
            let f = spec.build()?.function;
            check_range(&f, &settings, to * LN_10)?;
            // no caching: verification is meant to re-run
            let results = verify_suite(&f, suite, from * LN_10, to * LN_10, csv_text.as_deref(), &settings)?;
            let all = results.iter().all(|r| r.pass);
            let command = format!("verify suite={} range={:?}", suite_name(suite), (from, to));
            let text = ResultBundle::new(Some(spec.digest()), command, json!({ "all_pass": all, "invariants": results }))
                .to_json();
            emit(out, &text)?;
            if all {
                Ok(())
            } else {
                let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
                Err(CliError::Invariant(format!("invariant failure: {}", failed.join(", "))))
            }
        }
        Command::Mtilde { spec, from, to, points_per_decade } => {
            let spec = load_spec(&spec)?;
            let settings = spec.settings(ctx.tolerance)?;
            if !(from < to) {
                return Err(CliError::Spec("--from must be below --to".into()));
            }
            let command = format!("mtilde range={:?} ppd={points_per_decade} tol={:?}", (from, to), settings.rel_tolerance);
            let text = cached(&ctx, Some(spec.digest()), command, || {
                let f = spec.build()?.function;
                check_range(&f, &settings, to * LN_10)?;
                let lrs: Vec<LogRadius> = sample_grid(from * LN_10, to * LN_10, points_per_decade)
                    .into_iter()
                    .map(LogRadius::new)
                    .collect::<Result<_, _>>()?;
                let prof = m_tilde_profile(&f, &lrs, &ScanSettings::default(), &settings)?;
                Ok(json!({ "mtilde": prof }))
            })?;
            emit(out, &text)
        }
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Full => "full",
        Suite::Sandwich => "sandwich",
        Suite::Beurling => "beurling",
        Suite::Angular => "angular",
        Suite::Trap => "trap",
    }
}

#[derive(serde::Serialize)]
struct InvariantResult {
    name: String,
    pass: bool,
    detail: String,
}

fn verify_suite(
    f: &EntireProductFunction,
    suite: Suite,
    lo: f64,
    hi: f64,
    csv: Option<&str>,
    settings: &EvalSettings,
) -> Result<Vec<InvariantResult>, CliError> {
    let want = |s: Suite| suite == Suite::Full || suite == s;
    let grid: Vec<f64> = (0..24).map(|i| lo + (hi - lo) * i as f64 / 23.0).collect();
    let mut out = Vec::new();
    if want(Suite::Sandwich) {
        let mut bad = 0;
        for &x in &grid {
            if !sandwich_check(f, LogRadius::new(x)?, settings, &QuadSettings::default())?.holds {
                bad += 1;
            }
        }
        out.push(InvariantResult {
            name: "sandwich".into(),
            pass: bad == 0,
            detail: format!("N <= log M - log c <= N + Q failed at {bad}/{} radii", grid.len()),
        });
    }
    if want(Suite::Angular) {
        let mut worst: f64 = 0.0;
        for &x in grid.iter().step_by(3) {
            let lr = LogRadius::new(x)?;
            let (lo_v, hi_v) = brute_force_extrema(f, lr, 1024, settings)?;
            let m = f.log_min_modulus(lr, settings)?.as_f64();
            let big = f.log_max_modulus(lr, settings)?.as_f64();
            if m.is_finite() {
                worst = worst.max((lo_v.as_f64() - m).abs() / (1.0 + m.abs()));
            }
            worst = worst.max((hi_v.as_f64() - big).abs() / (1.0 + big.abs()));
        }
        out.push(InvariantResult {
            name: "angular-monotonicity".into(),
            pass: worst <= 1e-10,
            detail: format!("worst gap between 1024-angle extrema and theta = 0, pi: {worst:.2e}"),
        });
    }
    if want(Suite::Beurling) {
        let mut bad = 0;
        let mut n = 0;
        for w in grid.windows(3).step_by(2) {
            let (a, b) = (LogRadius::new(w[0])?, LogRadius::new(w[2])?);
            let log_max = f.log_max_modulus(a, settings)?.as_f64();
            for log_c in [f.log_c, log_max - 1.0] {
                if log_c >= log_max {
                    continue;
                }
                n += 1;
                if !beurling_verify(f, a, b, log_c, settings)?.holds {
                    bad += 1;
                }
            }
        }
        out.push(InvariantResult {
            name: "beurling".into(),
            pass: bad == 0,
            detail: format!("inequality failed on {bad}/{n} (r1, r2, c) triples"),
        });
    }
    if want(Suite::Trap) {
        let scan = ScanSettings::default();
        let mut trap = None;
        for &x in grid.iter().rev() {
            if trap_check(f, LogRadius::new(x)?, &scan, settings)? {
                trap = Some(x);
                break;
            }
        }
        let (pass, detail) = match trap {
            None => (true, "no radius in range with m~(r) <= r; nothing to check".to_string()),
            Some(x) => {
                let mut bad = 0;
                let th = escape_threshold(f, settings).max(x + 1.0).min(f.max_evaluable_lr(settings));
                for i in 0..16 {
                    let s = x - 3.0 * LN_10 * i as f64 / 15.0;
                    let rec = iterate_modulus(f, LogRadius::new(s)?, MapKind::Min, 50, th, &scan, settings)?;
                    if rec.steps.iter().any(|v| v.as_f64() > x) {
                        bad += 1;
                    }
                }
                (bad == 0, format!("trap at log r = {x:.4}; {bad}/16 orbits from below it crossed it"))
            }
        };
        out.push(InvariantResult { name: "trap-soundness".into(), pass, detail });
    }
    if let Some(text) = csv {
        let rows = output::read_profile_csv(text)?;
        let mut bad = 0;
        for &(x, v) in &rows {
            let fresh = f.log_max_modulus(LogRadius::new(x)?, settings)?.as_f64();
            if !((fresh - v).abs() <= 1e-9 * (1.0 + fresh.abs())) {
                bad += 1;
            }
        }
        out.push(InvariantResult {
            name: "profile-consistency".into(),
            pass: bad == 0,
            detail: format!("{bad}/{} rows disagree with fresh log M evaluations", rows.len()),
        });
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("minmod: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
