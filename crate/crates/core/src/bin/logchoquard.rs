//! Command-line front end. Exit codes: 0 all checks pass, 1 some check fails
//! or a computation errors, 2 configuration error.
//!
//! `LOGCHOQUARD_THREADS` sets the worker-pool size (default: all cores) and
//! `RUST_LOG` the log level.

use clap::{Parser, Subcommand, ValueEnum};
use logchoquard::config::{parse_config, RunConfig};
use logchoquard::constants::{constants_bundle, MuForm, ProblemParams};
use logchoquard::error::Error;
use logchoquard::montecarlo::mc_gagliardo;
use logchoquard::mountain_pass::{find_endpoint, level_and_norm_audit, saddle_search, ContinuationResult};
use logchoquard::nonlinearity::{default_audit_grid, verify_assumptions};
use logchoquard::pipeline::{
    build_model, build_nonlinearity, poisson_checks, run_verify_all, solver_checks, write_continuation, write_potential, write_run_dir,
};
use logchoquard::radial::RadialField;
use logchoquard::report::{Anchor, Check, VerificationReport};
use logchoquard::seminorm::SeminormOperator;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const THREADS_VAR: &str = "LOGCHOQUARD_THREADS";

#[derive(Parser)]
#[command(name = "logchoquard", version, about = "Approximation scheme and verification suite for the logarithmic fractional Choquard equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MuFormArg {
    Literal,
    Difference,
}

#[derive(Subcommand)]
enum Command {
    /// Explicit constants for (N, s, tau, R) as a flat JSON object.
    Constants {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long = "R", default_value_t = 1.0 / 3.0)]
        r: f64,
        #[arg(long, value_enum, default_value = "difference")]
        mu_form: MuFormArg,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Audit the growth assumptions of the configured nonlinearity.
    CheckF {
        #[arg(long)]
        config: PathBuf,
    },
    /// Seminorm [u]^(N/s) of a field CSV, optionally against Monte Carlo.
    Seminorm {
        #[arg(long)]
        field: PathBuf,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 8)]
        quad_order: usize,
        /// Monte-Carlo sample count; 0 skips the comparison.
        #[arg(long, default_value_t = 0)]
        mc_samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// One saddle search at a single mu.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Warm-started continuation along the configured mu schedule.
    Continue {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Potential of the limit field stored in a run directory.
    Poisson {
        #[arg(long)]
        run: PathBuf,
    },
    /// Every enabled check group; writes the full run directory.
    VerifyAll {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
}

enum Failure {
    Config(Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigParse(_) | Error::ConfigValidation(_) => Failure::Config(e),
            e => Failure::Run(e),
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn load(path: &Path) -> std::result::Result<RunConfig, Failure> {
    parse_config(path).map_err(Failure::Config)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn finish(report: &VerificationReport) -> bool {
    eprintln!("{}", report.summary());
    report.all_passed()
}

fn constants(n: usize, s: f64, tau: f64, r: f64, form: MuFormArg, tol: f64) -> Outcome {
    let params = ProblemParams::new(n, s, tau).map_err(Failure::Config)?;
    let form = match form {
        MuFormArg::Literal => MuForm::Literal,
        MuFormArg::Difference => MuForm::Difference,
    };
    let b = constants_bundle(&params, r, form, tol)?;
    let mut v = serde_json::to_value(&b).expect("serializable");
    let prov = [
        ("C_N", Anchor::RieszConstant),
        ("alpha_star", Anchor::MoserTrudingerExponent),
        ("J_frak", Anchor::TestFunctionNorm),
        ("K_frak", Anchor::TestFunctionSeminorm),
        ("T_N", Anchor::LevelThreshold),
        ("beta_0", Anchor::LevelThreshold),
        ("mu_N", Anchor::GrowthWindow),
        ("norm_cap", Anchor::UniformNormBound),
        ("decay_a", Anchor::DecayEstimate),
    ];
    if let Value::Object(m) = &mut v {
        for (k, a) in prov {
            m.insert(format!("{k}_provenance"), json!(a.as_str()));
        }
    }
    print_json(&v);
    Ok(true)
}

fn check_f(path: &Path) -> Outcome {
    let cfg = load(path)?;
    let nl = build_nonlinearity(&cfg)?;
    let grid = default_audit_grid(&nl, cfg.nonlinearity.audit_points);
    let a = verify_assumptions(&nl, &cfg.problem, &grid, cfg.nonlinearity.mu_form)?;
    print_json(&json!({ "lambda": nl.lambda, "report": a }));
    Ok(a.checks.iter().all(|c| c.passed) && a.beta_measured >= a.beta_0)
}

fn seminorm(field: &Path, n: usize, s: f64, order: usize, samples: usize, seed: u64, tol: f64) -> Outcome {
    let u = RadialField::read_csv(field, order)?;
    let grid = u.grid().clone();
    let q = SeminormOperator::new(grid.clone(), n, s)?.value(&u)?;
    let mut out = json!({ "N": n, "s": s, "nodes": grid.len(), "seminorm_pow": q });
    let mut ok = true;
    if samples > 0 {
        let support = grid.nodes().iter().zip(u.values()).filter(|(_, v)| **v != 0.0).map(|(r, _)| *r).fold(0.0, f64::max);
        let support = grid.nodes()[grid.locate(support).min(grid.len() - 2) + 1];
        let mc = mc_gagliardo(&u, support, n, s, samples, seed);
        let rel = (q - mc.value).abs() / mc.value;
        ok = rel <= tol;
        out["monte_carlo"] = json!(mc);
        out["relative_difference"] = json!(rel);
    }
    print_json(&out);
    Ok(ok)
}

fn solve(path: &Path, mu: f64, out: &Path) -> Outcome {
    let cfg = load(path)?;
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Failure::Config(Error::ConfigValidation(format!("mu = {mu} must lie in (0, 1]"))));
    }
    let nl = build_nonlinearity(&cfg)?;
    let model = build_model(&cfg, &nl)?;
    let e = find_endpoint(&model, mu)?;
    let r = saddle_search(&model, mu, &e, &cfg.solver)?;
    let mut report = VerificationReport::new();
    for c in level_and_norm_audit(&r, &cfg.problem) {
        report.push(c);
    }
    report.push(Check::upper(&format!("residual-mu-{mu}"), Anchor::CriticalPoint, r.residual, cfg.solver.tol_residual, format!("{} iterations", r.iterations)));
    std::fs::create_dir_all(out.join("fields")).map_err(Error::from)?;
    std::fs::write(out.join("config.echo"), cfg.to_toml()).map_err(Error::from)?;
    report.write(&out.join("report.json"))?;
    r.u_mu.write_csv(&out.join("fields").join("u_mu_0.csv"))?;
    std::fs::write(out.join("levels.csv"), format!("mu,c_mu,norm_pow,residual,iterations\n{},{},{},{},{}\n", r.mu, r.c_mu, r.norm_pow, r.residual, r.iterations))
        .map_err(Error::from)?;
    std::fs::write(out.join("saddle_results.json"), serde_json::to_string_pretty(&[&r]).expect("serializable")).map_err(Error::from)?;
    print_json(&r);
    Ok(finish(&report))
}

fn continue_run(path: &Path, out: &Path) -> Outcome {
    let cfg = load(path)?;
    let nl = build_nonlinearity(&cfg)?;
    let model = build_model(&cfg, &nl)?;
    let grid = default_audit_grid(&nl, cfg.nonlinearity.audit_points);
    let a = verify_assumptions(&nl, &cfg.problem, &grid, cfg.nonlinearity.mu_form)?;
    let (report, cont) = solver_checks(&cfg, &model, a.ratio_sup)?;
    std::fs::create_dir_all(out).map_err(Error::from)?;
    std::fs::write(out.join("config.echo"), cfg.to_toml()).map_err(Error::from)?;
    report.write(&out.join("report.json"))?;
    write_continuation(out, &cont)?;
    print_levels(&cont);
    Ok(finish(&report))
}

fn print_levels(cont: &ContinuationResult) {
    for r in &cont.results {
        println!("mu = {:<10} c_mu = {:.6e}  ||u||^(N/s) = {:.6e}  residual = {:.2e}", r.mu, r.c_mu, r.norm_pow, r.residual);
    }
    for w in &cont.warnings {
        eprintln!("warning: {w}");
    }
}

fn poisson(run: &Path) -> Outcome {
    let cfg = load(&run.join("config.echo"))?;
    let nl = build_nonlinearity(&cfg)?;
    let model = build_model(&cfg, &nl)?;
    let stored = RadialField::read_csv(&run.join("fields").join("u0.csv"), cfg.grid.quad_order)?;
    let u0 = RadialField::new(model.grid().clone(), stored.into_values())?;
    let (report, rep) = poisson_checks(&cfg, &model, &u0)?;
    write_potential(run, &rep)?;
    report.write(&run.join("poisson_report.json"))?;
    print_json(&rep);
    Ok(finish(&report))
}

fn verify_all(path: &Path, out: &Path) -> Outcome {
    let cfg = load(path)?;
    let outcome = run_verify_all(&cfg);
    write_run_dir(out, &cfg, &outcome)?;
    if let Some(c) = &outcome.continuation {
        print_levels(c);
    }
    for c in outcome.report.failures() {
        eprintln!("FAIL {} (measured {:e}, bound {:e}): {}", c.id, c.measured, c.bound, c.witness);
    }
    Ok(finish(&outcome.report))
}

fn init_pool() -> std::result::Result<(), String> {
    let Some(v) = std::env::var_os(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.to_string_lossy().parse().map_err(|_| format!("{THREADS_VAR} must be a positive integer"))?;
    if n == 0 {
        return Err(format!("{THREADS_VAR} must be a positive integer"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(m) = init_pool() {
        eprintln!("error: {m}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Constants { n, s, tau, r, mu_form, tol } => constants(n, s, tau, r, mu_form, tol),
        Command::CheckF { config } => check_f(&config),
        Command::Seminorm { field, n, s, quad_order, mc_samples, seed, tol } => seminorm(&field, n, s, quad_order, mc_samples, seed, tol),
        Command::Solve { config, mu, out } => solve(&config, mu, &out),
        Command::Continue { config, out } => continue_run(&config, &out),
        Command::Poisson { run } => poisson(&run),
        Command::VerifyAll { config, out } => verify_all(&config, &out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
