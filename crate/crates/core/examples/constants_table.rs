//! Explicit constants over a small (N, s) sweep, plus the planar oracles.

use logchoquard::constants::{constants_bundle, MuForm, ProblemParams};
use logchoquard::pipeline::alpha_star_planar_closed_form;
use logchoquard::seminorm::test_function_bound;
use logchoquard::radial::{GridSpec, Potential};
use std::sync::Arc;

fn main() -> logchoquard::Result<()> {
    println!("{:>2} {:>4} {:>6} {:>12} {:>12} {:>12} {:>12} {:>10} {:>8}", "N", "s", "tau", "C_N", "alpha*", "J+K", "beta_0", "mu_N", "a");
    for n in [2usize, 3] {
        for s in [0.3, 0.5, 0.7] {
            let p = ProblemParams::new(n, s, 0.5 * ((1.0 - 2.0 / n as f64) * s + s))?;
            let b = constants_bundle(&p, 1.0 / 3.0, MuForm::Difference, 1e-12)?;
            println!(
                "{n:>2} {s:>4} {:>6.3} {:>12.6e} {:>12.6} {:>12.4} {:>12.4e} {:>10.3e} {:>8.4}",
                p.tau,
                b.c_n,
                b.alpha_star,
                b.j_frak + b.k_frak,
                b.beta_0,
                b.mu_n,
                b.decay_a
            );
        }
    }
    let a = constants_bundle(&ProblemParams::new(2, 0.5, 0.25)?, 1.0 / 3.0, MuForm::Difference, 1e-12)?;
    println!("\nalpha*_(2,1/2) = {:.15}, closed form {:.15}", a.alpha_star, alpha_star_planar_closed_form());
    println!("K_2(1/2) = {:.15}, 9.5 pi^2 = {:.15}", a.k_frak, 9.5 * std::f64::consts::PI.powi(2));

    let grid = Arc::new(GridSpec::default().build()?);
    println!("\ntest function w on B_(1/3): quadrature norm vs bound");
    for n in [2usize, 3] {
        for s in [0.3, 0.5, 0.7] {
            let t = test_function_bound(grid.clone(), n, s, 1.0 / 3.0, &Potential::default(), 1.0)?;
            println!("N = {n}, s = {s}: {:.6} <= {:.6} (margin {:.1}%)", t.norm_pow, t.bound, 100.0 * t.rel_margin);
        }
    }
    Ok(())
}
