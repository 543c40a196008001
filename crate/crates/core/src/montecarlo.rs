//! Ambient-space Monte-Carlo oracles. They sample points of R^N directly and
//! never use the radial reduction, so they serve as independent checks.

use crate::radial::RadialField;
use crate::special::ball_volume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
    pub seed: u64,
}

const BLOCK: usize = 1 << 15;

fn in_unit_ball(rng: &mut ChaCha8Rng, n: usize, out: &mut [f64]) {
    loop {
        let mut r2 = 0.0;
        for x in out.iter_mut().take(n) {
            *x = rng.gen_range(-1.0..1.0);
            r2 += *x * *x;
        }
        if r2 <= 1.0 && r2 > 0.0 {
            return;
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Mean and standard error of `sample` over `count` draws, in fixed blocks
/// seeded from `seed`, so the result is independent of the thread schedule.
fn blocked_mean<F>(count: usize, seed: u64, stream: u64, sample: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = count.div_ceil(BLOCK);
    let sums: Vec<(f64, f64, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream * 1_000_003 + b as u64);
            let len = BLOCK.min(count - b * BLOCK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let v = sample(&mut rng);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2, len)
        })
        .collect();
    let (s1, s2, k) = sums.iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = s1 / k as f64;
    let var = (s2 / k as f64 - mean * mean).max(0.0);
    (mean, (var / k as f64).sqrt())
}

/// Ambient estimate of [u]^{N/s} = int int |u(x)-u(y)|^{N/s} |x-y|^{-2N} dx dy
/// for a radial field vanishing outside B_support.
pub fn mc_gagliardo(u: &RadialField, support: f64, n: usize, s: f64, samples: usize, seed: u64) -> McEstimate {
    let p = n as f64 / s;
    let vol = ball_volume(n) * support.powi(n as i32);
    let half = samples / 2;
    // both points in the ball
    let (m_in, e_in) = blocked_mean(half, seed, 0, |rng| {
        let mut x = [0.0; 8];
        let mut y = [0.0; 8];
        in_unit_ball(rng, n, &mut x);
        in_unit_ball(rng, n, &mut y);
        x.iter_mut().chain(y.iter_mut()).for_each(|v| *v *= support);
        let d = dist(&x[..n], &y[..n]);
        (u.eval(norm(&x[..n])) - u.eval(norm(&y[..n]))).abs().powf(p) / d.powi(2 * n as i32)
    });
    // x in the ball, y outside with density proportional to |y|^{-2N}
    let mass_out = ball_volume(n) * support.powi(-(n as i32));
    let (m_out, e_out) = blocked_mean(samples - half, seed, 1, |rng| {
        let mut x = [0.0; 8];
        let mut dir = [0.0; 8];
        in_unit_ball(rng, n, &mut x);
        in_unit_ball(rng, n, &mut dir);
        x.iter_mut().for_each(|v| *v *= support);
        let dn = norm(&dir[..n]);
        let uu: f64 = rng.gen_range(f64::EPSILON..1.0);
        let ry = support * uu.powf(-1.0 / n as f64);
        let mut y = [0.0; 8];
        for k in 0..n {
            y[k] = dir[k] / dn * ry;
        }
        let d = dist(&x[..n], &y[..n]);
        u.eval(norm(&x[..n])).abs().powf(p) * (ry / d).powi(2 * n as i32)
    });
    let value = vol * vol * m_in + 2.0 * vol * mass_out * m_out;
    let std_err = ((vol * vol * e_in).powi(2) + (2.0 * vol * mass_out * e_out).powi(2)).sqrt();
    McEstimate { value, std_err, samples, seed }
}

/// Ambient estimate of int int k(|x-y|) g(|x|) g(|y|) dx dy for g vanishing outside B_support.
pub fn mc_convolution<K>(g: &RadialField, support: f64, n: usize, kernel: K, samples: usize, seed: u64) -> McEstimate
where
    K: Fn(f64) -> f64 + Sync,
{
    let vol = ball_volume(n) * support.powi(n as i32);
    let (m, e) = blocked_mean(samples, seed, 2, |rng| {
        let mut x = [0.0; 8];
        let mut y = [0.0; 8];
        in_unit_ball(rng, n, &mut x);
        in_unit_ball(rng, n, &mut y);
        x.iter_mut().chain(y.iter_mut()).for_each(|v| *v *= support);
        kernel(dist(&x[..n], &y[..n])) * g.eval(norm(&x[..n])) * g.eval(norm(&y[..n]))
    });
    McEstimate { value: vol * vol * m, std_err: vol * vol * e, samples, seed }
}

/// Ambient estimate of int int k(|x-y|) g(|x|) h(|y|) dx dy (both supported in B_support).
pub fn mc_pairing<K>(g: &RadialField, h: &RadialField, support: f64, n: usize, kernel: K, samples: usize, seed: u64) -> McEstimate
where
    K: Fn(f64) -> f64 + Sync,
{
    let vol = ball_volume(n) * support.powi(n as i32);
    let (m, e) = blocked_mean(samples, seed, 3, |rng| {
        let mut x = [0.0; 8];
        let mut y = [0.0; 8];
        in_unit_ball(rng, n, &mut x);
        in_unit_ball(rng, n, &mut y);
        x.iter_mut().chain(y.iter_mut()).for_each(|v| *v *= support);
        kernel(dist(&x[..n], &y[..n])) * g.eval(norm(&x[..n])) * h.eval(norm(&y[..n]))
    });
    McEstimate { value: vol * vol * m, std_err: vol * vol * e, samples, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;
    use std::sync::Arc;

    #[test]
    fn uniform_ball_mean_distance_kernel() {
        // int_B int_B 1 = |B|^2 for the constant kernel
        let g = Arc::new(RadialGrid::uniform_geometric(32, 2.0, 1.2, 8).unwrap());
        let ind = RadialField::from_fn(g, |r| if r <= 1.0 { 1.0 } else { 0.0 });
        let e = mc_convolution(&ind, 0.5, 2, |_| 1.0, 100_000, 7);
        let exact = (std::f64::consts::PI * 0.25).powi(2);
        assert!((e.value - exact).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = Arc::new(RadialGrid::uniform_geometric(32, 2.0, 1.2, 8).unwrap());
        let u = RadialField::from_fn(g, |r| (1.0 - 2.0 * r).max(0.0));
        let a = mc_gagliardo(&u, 0.5, 2, 0.5, 200_000, 11);
        let b = mc_gagliardo(&u, 0.5, 2, 0.5, 200_000, 11);
        assert_eq!(a, b);
    }
}
