//! Continuation mu = 2^-k -> 0 and the limit candidate for the log kernel.
//! Pass k_max as the first argument (default 6).

use logchoquard::config::RunConfig;
use logchoquard::constants::ProblemParams;
use logchoquard::mountain_pass::continuation;
use logchoquard::pipeline::{build_model, build_nonlinearity};
use std::time::Instant;

fn main() -> logchoquard::Result<()> {
    let mut cfg = RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25)?);
    cfg.schedule.k_max = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let nl = build_nonlinearity(&cfg)?;
    let model = build_model(&cfg, &nl)?;
    let t = Instant::now();
    let c = continuation(&model, &cfg.schedule.values(), &cfg.solver)?;
    for r in &c.results {
        println!("mu = {:<10} c_mu = {:.6e}  ||u||^(N/s) = {:.4e}  iterations {}", r.mu, r.c_mu, r.norm_pow, r.iterations);
    }
    println!("log residual {:.3e}, log energy {:.6e}, ||u0|| = {:.4}", c.log_residual, c.log_energy.breakdown.total, c.u0_norm);
    for w in &c.warnings {
        println!("warning: {w}");
    }
    println!("elapsed {:?}", t.elapsed());
    Ok(())
}
