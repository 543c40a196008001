//! Logarithmic potential of F(u): the uniform-ball closed form, then the
//! audits on a solved field at mu = 1/4.

use logchoquard::config::RunConfig;
use logchoquard::constants::ProblemParams;
use logchoquard::mountain_pass::continuation;
use logchoquard::pipeline::{build_model, build_nonlinearity, poisson_checks};
use logchoquard::poisson::uniform_ball_deviation;

fn main() -> logchoquard::Result<()> {
    let mut cfg = RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25)?);
    cfg.schedule.k_max = 2;
    let nl = build_nonlinearity(&cfg)?;
    let model = build_model(&cfg, &nl)?;
    let dev = uniform_ball_deviation(model.grid(), &[0.0, 0.5, 1.0, 4.0, 40.0])?;
    println!("uniform ball: max deviation from the closed form {dev:.3e}");
    let c = continuation(&model, &cfg.schedule.values(), &cfg.solver)?;
    let (report, rep) = poisson_checks(&cfg, &model, &c.u0)?;
    println!("mass of F(u) {:.6e}", rep.f_mass);
    for (r, v) in rep.audit_radii.iter().zip(&rep.audit_phi) {
        println!("phi({r}) = {v:.6e}");
    }
    for c in &report.entries {
        println!("{:<34} {:?} {:.4e}", c.id, c.status, c.measured);
    }
    Ok(())
}
