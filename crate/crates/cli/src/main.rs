//! `fcs`: validate scenario configs, run invariant suites, and emit
//! counting-statistics tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fcs_core::config::{parse_config, Loaded};
use fcs_core::dynamics::{balance_check, delta_q_direct, expect_evolved};
use fcs_core::fcs::{
    default_gamma_grid, limit_sweep, mean_identity_check, reservoir_fcs, system_char_limit, system_fcs, SweepOptions,
};
use fcs_core::output::{char_table, measure_table, sweep_table, write_json, Format};
use fcs_core::{run_suite, Error, Suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "fcs", version, about = "Energy full counting statistics and modular-theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Seed for the reservoir disorder and sampled checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a configuration.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run invariant suites and print a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// operator, states, dynamics, modular, fcs or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        /// Also write the report to `<out-dir>/verify.json`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write system and reservoir counting statistics at one time.
    Fcs {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        out_dir: PathBuf,
        /// `a,b,c` or `start:stop:count`.
        #[arg(long, allow_hyphen_values = true)]
        gamma_grid: Option<String>,
    },
    /// Sweep over coupling and time grids.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        t_grid: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda_grid: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma_grid: Option<String>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum Failure {
    Checks,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Prints pretty JSON to stdout; a closed pipe is not an error.
fn emit(value: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("json");
    let _ = writeln!(std::io::stdout().lock(), "{}", text);
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
fn parse_grid(flag: &str, s: &str) -> Result<Vec<f64>, Failure> {
    let bad = |m: &str| Failure::Usage(format!("--{}: {}", flag, m));
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range must be start:stop:count"));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad("invalid start"))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad("invalid stop"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad("invalid count"))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("invalid number"))?
    };
    if grid.is_empty() {
        return Err(bad("grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("grid values must be finite"));
    }
    Ok(grid)
}

fn load(common: &Common) -> Result<Loaded<f64>, Failure> {
    let loaded = match common.seed {
        Some(seed) => {
            let text = std::fs::read_to_string(&common.config).map_err(|e| Failure::Usage(format!("{}: {}", common.config.display(), e)))?;
            fcs_core::config::ScenarioConfig::from_json(&text)?.with_seed(seed).build()?
        }
        None => parse_config(&common.config)?,
    };
    for w in &loaded.warnings {
        eprintln!("warning: {}", w);
    }
    Ok(loaded)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {}", dir.display(), e)))
}

fn validate(common: &Common) -> Result<(), Failure> {
    let l = load(common)?;
    let s = &l.scenario;
    let summary = json!({
        "valid": true,
        "dim_s": s.dim_s(),
        "dim_r": s.dim_r(),
        "lambda": s.lambda(),
        "beta": s.beta(),
        "tolerances": {"cluster_tol": l.config.tolerances.cluster_tol, "quad_tol": l.config.tolerances.quad_tol},
        "warnings": l.warnings,
    });
    emit(&summary);
    Ok(())
}

fn verify(common: &Common, suite: &str, t: f64, out_dir: Option<&Path>) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    if !t.is_finite() {
        return Err(Failure::Usage("--t must be finite".into()));
    }
    let l = load(common)?;
    let options = VerifyOptions {
        t,
        seed: common.seed.unwrap_or(0),
        quad_tol: l.config.tolerances.quad_tol,
        cluster_tol: l.config.tolerances.cluster_tol,
        ..Default::default()
    };
    let report = run_suite(&l.scenario, suite, &options);
    let value = serde_json::to_value(&report).expect("report serializes");
    emit(&value);
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_json(&dir.join("verify.json"), &value)?;
    }
    if report.passed {
        Ok(())
    } else {
        for c in report.failures() {
            eprintln!("FAIL {}: residual {:e} > tolerance {:e}", c.check_name, c.residual, c.tolerance);
        }
        Err(Failure::Checks)
    }
}

fn gamma_grid(spec: Option<&str>, l: &Loaded<f64>) -> Result<Vec<f64>, Failure> {
    match spec {
        Some(s) => parse_grid("gamma-grid", s),
        None => Ok(default_gamma_grid(&l.scenario)),
    }
}

fn fcs(common: &Common, t: f64, out_dir: &Path, gammas: Option<&str>) -> Result<(), Failure> {
    if !t.is_finite() {
        return Err(Failure::Usage("--t must be finite".into()));
    }
    let l = load(common)?;
    let gammas = gamma_grid(gammas, &l)?;
    let scn = &l.scenario;
    let tol = l.config.tolerances;
    let sys = system_fcs(scn, t, tol.cluster_tol, &gammas)?;
    let res = reservoir_fcs(scn, t, tol.cluster_tol, &gammas)?;
    let limit: Vec<_> = gammas.iter().map(|&g| (g, system_char_limit(scn, g))).collect();

    ensure_dir(out_dir)?;
    measure_table(&sys, &res).write(&out_dir.join("measures.csv"), Format::Csv)?;
    char_table(&[("system", &sys.char_samples), ("reservoir", &res.char_samples), ("limit", &limit)])
        .write(&out_dir.join("char.csv"), Format::Csv)?;

    let dq = delta_q_direct(scn, t);
    let offset = scn.lambda() * (expect_evolved(scn, scn.v(), t) - scn.omega().expect(scn.v()).re);
    let summary = json!({
        "t": t,
        "lambda": scn.lambda(),
        "beta": scn.beta(),
        "system": {"mean": sys.mean, "moments": sys.moments, "atoms": sys.measure.len()},
        "reservoir": {"mean": res.mean, "moments": res.moments, "atoms": res.measure.len()},
        "delta_q": {"system": dq.dq_s, "reservoir": dq.dq_r},
        "balance": {
            "coupling_offset": offset,
            "heat_balance_residual": balance_check(scn, t),
            "reservoir_mean_residual": mean_identity_check(scn, t, tol.quad_tol)?,
        },
        "warnings": l.warnings,
    });
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(())
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

fn sweep(common: &Common, t_grid: &str, lambda_grid: &str, gammas: Option<&str>, workers: usize, out_dir: &Path) -> Result<(), Failure> {
    if workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let ts = parse_grid("t-grid", t_grid)?;
    let lambdas = parse_grid("lambda-grid", lambda_grid)?;
    let l = load(common)?;
    let gammas = gamma_grid(gammas, &l)?;
    let options = SweepOptions { cluster_tol: l.config.tolerances.cluster_tol, workers, ..Default::default() };
    let result = limit_sweep(&l.scenario, &ts, &lambdas, &gammas, &options)?;
    ensure_dir(out_dir)?;
    sweep_table(&result.rows).write(&out_dir.join("sweep.csv"), Format::Csv)?;
    let verdicts: Vec<Value> = result
        .verdicts
        .iter()
        .map(|v| json!({"lambda": v.lambda, "baseline": v.baseline, "plateau": opt(v.plateau), "converging": v.converging}))
        .collect();
    let value = json!({
        "plateau_window": [options.plateau.0, options.plateau.1],
        "verdicts": verdicts,
    });
    write_json(&out_dir.join("verdict.json"), &value)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { common } => validate(common),
        Command::Verify { common, suite, t, out_dir } => verify(common, suite, *t, out_dir.as_deref()),
        Command::Fcs { common, t, out_dir, gamma_grid } => fcs(common, *t, out_dir, gamma_grid.as_deref()),
        Command::Sweep { common, t_grid, lambda_grid, gamma_grid, workers, out_dir } => {
            sweep(common, t_grid, lambda_grid, gamma_grid.as_deref(), *workers, out_dir)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
