//! Radial-reduction seminorm against the ambient Monte-Carlo oracle.

use logchoquard::montecarlo::mc_gagliardo;
use logchoquard::radial::{plateau_test_function, RadialField, RadialGrid};
use logchoquard::seminorm::SeminormOperator;
use std::sync::Arc;
use std::time::Instant;

fn main() -> logchoquard::Result<()> {
    let samples: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000_000);
    let grid = Arc::new(RadialGrid::default_grid());
    let t0 = Instant::now();
    let op = SeminormOperator::new(grid.clone(), 2, 0.5)?;
    println!("operator: {} points, built in {:?}", op.point_count(), t0.elapsed());
    let fields = [
        ("hat r<1/2", RadialField::from_fn(grid.clone(), |r| (1.0 - 2.0 * r).max(0.0)), 0.5),
        ("plateau R=1/3", plateau_test_function(1.0 / 3.0, grid.clone())?, 1.0 / 3.0),
        (
            "cosine bump r<3/4",
            RadialField::from_fn(grid.clone(), |r| if r < 0.75 { 0.5 * (1.0 + (std::f64::consts::PI * r / 0.75).cos()) } else { 0.0 }),
            0.75,
        ),
    ];
    for (name, u, support) in fields {
        let t = Instant::now();
        let q = op.value(&u)?;
        let tq = t.elapsed();
        let mc = mc_gagliardo(&u, support, 2, 0.5, samples, 2024);
        println!(
            "{name:>18}: quadrature {q:.6} ({tq:?})  MC {:.6} +- {:.6}  rel.diff {:.3e}",
            mc.value,
            mc.std_err,
            (q - mc.value).abs() / mc.value
        );
    }
    Ok(())
}
