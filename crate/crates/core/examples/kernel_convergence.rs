//! The approximating kernels G_mu against log(1/t): domination on (0,1] and
//! convergence as mu -> 0.

use logchoquard::kernels::{check_kernel_inequalities, log_grid};
use logchoquard::pipeline::kernel_convergence;

fn main() -> logchoquard::Result<()> {
    let (errs, order) = kernel_convergence();
    for (k, e) in errs.iter().enumerate() {
        println!("mu = 2^-{k}: sup over [0.1, 10] of |G_mu - log(1/t)| = {e:.6e}");
    }
    println!("empirical order {order:.4}");
    let t = log_grid(1e-8, 1.0, 10_000);
    for mu in [1.0, 0.25, 1.0 / 64.0] {
        let c = check_kernel_inequalities(mu, 2.0 * mu, &t)?;
        println!("mu = {mu}: min(G_mu - log) over {} nodes = {:.3e}, power majorant C = {:.4e}", c.nodes_checked, c.min_margin, c.c_nu);
    }
    Ok(())
}
