//! Calibrate the model nonlinearity and audit every growth assumption.

use logchoquard::config::RunConfig;
use logchoquard::constants::ProblemParams;
use logchoquard::nonlinearity::{default_audit_grid, verify_assumptions};
use logchoquard::pipeline::build_nonlinearity;

fn main() -> logchoquard::Result<()> {
    let cfg = RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25)?);
    let nl = build_nonlinearity(&cfg)?;
    println!("f(t) = lambda t^{} exp({} t^2), lambda = {:.6e}", cfg.nonlinearity.q, cfg.nonlinearity.alpha, nl.lambda);
    let grid = default_audit_grid(&nl, cfg.nonlinearity.audit_points);
    let a = verify_assumptions(&nl, &cfg.problem, &grid, cfg.nonlinearity.mu_form)?;
    for c in &a.checks {
        println!("{:<16} {} margin {:>11.4e}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.margin, c.detail);
    }
    println!("F f'/f^2 ranges over [{:.6}, {:.6}]", a.ratio_inf, a.ratio_sup);
    println!("beta measured {:.6e} vs beta_0 {:.6e}", a.beta_measured, a.beta_0);
    Ok(())
}
