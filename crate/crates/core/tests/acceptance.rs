//! Acceptance criteria 1-10 on the default configuration (N = 2, s = 1/2,
//! tau = 1/4, default grid and schedule). Prints one PASS/FAIL line per
//! criterion with its runtime and exits nonzero if any criterion failed.

use logchoquard::config::RunConfig;
use logchoquard::constants::{alpha_star_upper, k_frak, riesz_constant, ProblemParams};
use logchoquard::kernels::{check_kernel_inequalities, log_grid};
use logchoquard::pipeline::{
    alpha_star_planar_closed_form, build_model, build_nonlinearity, gradient_checks, kernel_convergence, run_verify_all, seminorm_oracle_checks,
    write_run_dir, RunOutcome,
};
use logchoquard::radial::Potential;
use logchoquard::report::{Check, VerificationReport};
use logchoquard::seminorm::test_function_bound;
use std::sync::Arc;
use std::time::{Duration, Instant};

struct Criterion {
    number: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    runtime: Duration,
    budget: Option<Duration>,
}

impl Criterion {
    fn ok(&self) -> bool {
        self.passed && self.budget.is_none_or(|b| self.runtime <= b)
    }

    fn line(&self) -> String {
        let budget = self.budget.map(|b| format!(" (budget {b:?})")).unwrap_or_default();
        format!(
            "{} criterion {:>2}: {:<28} {:>10.3?}{budget}  {}",
            if self.ok() { "PASS" } else { "FAIL" },
            self.number,
            self.name,
            self.runtime,
            self.detail
        )
    }
}

fn default_config() -> RunConfig {
    RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25).unwrap())
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn report_detail(entries: &[&Check]) -> String {
    let failed: Vec<&str> = entries.iter().filter(|c| !c.passed()).map(|c| c.id.as_str()).collect();
    if failed.is_empty() {
        format!("{} checks", entries.len())
    } else {
        format!("{} checks, failing: {}", entries.len(), failed.join(", "))
    }
}

fn from_report(number: usize, name: &'static str, report: &VerificationReport, pred: impl Fn(&str) -> bool, expected: usize, runtime: Duration, budget: Option<Duration>) -> Criterion {
    let entries: Vec<&Check> = report.entries.iter().filter(|c| pred(&c.id)).collect();
    let passed = entries.len() >= expected && entries.iter().all(|c| c.passed());
    let mut detail = report_detail(&entries);
    if entries.len() < expected {
        detail.push_str(&format!(" (expected at least {expected})"));
    }
    Criterion { number, name, passed, detail, runtime, budget }
}

fn constant_reproduction() -> Criterion {
    let t = Instant::now();
    let c2 = (riesz_constant(2).unwrap() - 0.5 / std::f64::consts::PI).abs();
    let a = (alpha_star_upper(2, 0.5, 1e-12).unwrap().value - alpha_star_planar_closed_form()).abs();
    let target = 9.5 * std::f64::consts::PI.powi(2);
    let k = ((k_frak(2, 0.5) - target) / target).abs();
    Criterion {
        number: 1,
        name: "constant reproduction",
        passed: c2 <= 1e-12 && a <= 1e-8 && k <= 1e-12,
        detail: format!("|C_2 - 1/2pi| = {c2:.2e}, alpha* error {a:.2e}, K_2(1/2) rel. error {k:.2e}"),
        runtime: t.elapsed(),
        budget: secs(1),
    }
}

fn test_function_bounds() -> Criterion {
    let t = Instant::now();
    let grid = Arc::new(default_config().grid.build().unwrap());
    let mut min_margin = f64::INFINITY;
    for n in [2usize, 3] {
        for s in [0.3, 0.5, 0.7] {
            let b = test_function_bound(grid.clone(), n, s, 1.0 / 3.0, &Potential::default(), 1.0).unwrap();
            min_margin = min_margin.min(b.rel_margin);
        }
    }
    Criterion {
        number: 2,
        name: "test-function bound",
        passed: min_margin >= 0.01,
        detail: format!("smallest relative margin {min_margin:.4} over N in {{2,3}}, s in {{0.3,0.5,0.7}}"),
        runtime: t.elapsed(),
        budget: secs(30),
    }
}

fn oracle_equivalence() -> Criterion {
    let t = Instant::now();
    let cfg = default_config();
    assert_eq!(cfg.verify.mc_samples, 10_000_000);
    let r = seminorm_oracle_checks(&cfg).unwrap();
    from_report(3, "oracle equivalence", &r, |_| true, 3, t.elapsed(), secs(120))
}

fn gradient_correctness() -> Criterion {
    let t = Instant::now();
    let cfg = default_config();
    let nl = build_nonlinearity(&cfg).unwrap();
    let model = build_model(&cfg, &nl).unwrap();
    let r = gradient_checks(&model).unwrap();
    from_report(4, "gradient correctness", &r, |_| true, 4, t.elapsed(), secs(60))
}

fn kernel_convergence_criterion() -> Criterion {
    let t = Instant::now();
    let (_, order) = kernel_convergence();
    let grid = log_grid(1e-8, 1.0, 10_000);
    let mut min_margin = f64::INFINITY;
    let mut nodes = 0;
    for mu in default_config().schedule.values() {
        let c = check_kernel_inequalities(mu, 2.0 * mu, &grid).unwrap();
        min_margin = min_margin.min(c.min_margin);
        nodes = c.nodes_checked;
    }
    Criterion {
        number: 5,
        name: "kernel convergence",
        passed: order >= 0.9 && min_margin >= 0.0 && nodes == 10_000,
        detail: format!("order {order:.4}, min(G_mu - log) = {min_margin:.2e} on {nodes} nodes"),
        runtime: t.elapsed(),
        budget: secs(1),
    }
}

fn timing(out: &RunOutcome, group: &str) -> Duration {
    out.timings.iter().filter(|(g, _)| g == group).map(|(_, d)| *d).sum()
}

fn pipeline_criteria(out: &RunOutcome) -> Vec<Criterion> {
    let r = &out.report;
    let schedule = default_config().schedule.values().len();
    let solver = timing(out, "solver");
    vec![
        from_report(
            6,
            "mountain-pass level",
            r,
            |id| id.starts_with("level-below-threshold-mu-") || id.starts_with("norm-cap-mu-"),
            2 * schedule,
            solver,
            secs(600),
        ),
        from_report(
            7,
            "continuation limit",
            r,
            |id| matches!(id, "limit-log-residual" | "limit-log-energy" | "limit-nontrivial"),
            3,
            solver,
            secs(1200),
        ),
        from_report(
            8,
            "Poisson audits",
            r,
            |id| {
                matches!(id, "uniform-ball-potential" | "potential-asymptotics" | "five-point-order") || id.starts_with("lgamma-norm-")
            },
            6,
            timing(out, "poisson"),
            secs(300),
        ),
        from_report(
            9,
            "transform inequalities",
            r,
            |id| id.starts_with("transform-") || id.starts_with("aux-transform-"),
            4 * schedule,
            solver,
            None,
        ),
    ]
}

fn main() {
    let mut results = vec![constant_reproduction(), test_function_bounds(), oracle_equivalence(), gradient_correctness(), kernel_convergence_criterion()];
    for c in &results {
        println!("{}", c.line());
    }

    let cfg = default_config();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let t = Instant::now();
    let first = run_verify_all(&cfg);
    write_run_dir(dirs[0].path(), &cfg, &first).unwrap();
    let first_time = t.elapsed();
    for c in pipeline_criteria(&first) {
        println!("{}", c.line());
        results.push(c);
    }

    let t = Instant::now();
    let second = run_verify_all(&cfg);
    write_run_dir(dirs[1].path(), &cfg, &second).unwrap();
    let a = std::fs::read(dirs[0].path().join("report.json")).unwrap();
    let b = std::fs::read(dirs[1].path().join("report.json")).unwrap();
    let determinism = Criterion {
        number: 10,
        name: "determinism",
        passed: a == b,
        detail: format!("report.json {} bytes, identical: {}, runs took {first_time:.1?} and {:.1?}", a.len(), a == b, t.elapsed()),
        runtime: first_time + t.elapsed(),
        budget: None,
    };
    println!("{}", determinism.line());
    results.push(determinism);

    let failures: Vec<String> = first.report.failures().map(|c| format!("{} ({:e} vs {:e})", c.id, c.measured, c.bound)).collect();
    println!("verify-all: {} entries, failures: {:?}", first.report.entries.len(), failures);
    let failed: Vec<usize> = results.iter().filter(|c| !c.ok()).map(|c| c.number).collect();
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
