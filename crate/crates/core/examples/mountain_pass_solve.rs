//! A single saddle search for J_mu on the default grid.

use logchoquard::config::RunConfig;
use logchoquard::constants::ProblemParams;
use logchoquard::mountain_pass::{find_endpoint, level_and_norm_audit, rim_minimum, saddle_search};
use logchoquard::pipeline::{build_model, build_nonlinearity};
use std::time::Instant;

fn main() -> logchoquard::Result<()> {
    let mu: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let cfg = RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25)?);
    let nl = build_nonlinearity(&cfg)?;
    let t0 = Instant::now();
    let model = build_model(&cfg, &nl)?;
    println!("model assembled in {:?}", t0.elapsed());
    let e = find_endpoint(&model, mu)?;
    let t = Instant::now();
    let r = saddle_search(&model, mu, &e, &cfg.solver)?;
    println!("mu = {mu}: c_mu = {:.6e}, ||u||^(N/s) = {:.4e}, residual {:.2e}, {} iterations ({:?})", r.c_mu, r.norm_pow, r.residual, r.iterations, t.elapsed());
    let rim = rim_minimum(&model, mu, cfg.rim.rho, cfg.rim.samples, cfg.seed)?;
    println!("rim minimum at rho = {}: {:.4e}", cfg.rim.rho, rim.min);
    for c in level_and_norm_audit(&r, &cfg.problem) {
        println!("{:<28} {:?} {:.4e} vs {:.4e}", c.id, c.status, c.measured, c.bound);
    }
    Ok(())
}
