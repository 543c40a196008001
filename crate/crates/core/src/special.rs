//! Ball volumes, the strict-floor factorial and the Moser-Trudinger function.

use crate::error::{Error, Result};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Volume of the unit ball in R^k.
pub fn ball_volume(k: usize) -> f64 {
    let kf = k as f64;
    (0.5 * kf * PI.ln() - ln_gamma(0.5 * kf + 1.0)).exp()
}

/// Surface measure of the unit sphere in R^N, N * omega_N.
pub fn sphere_measure(n: usize) -> f64 {
    n as f64 * ball_volume(n)
}

/// Largest integer strictly less than `q`.
pub fn strict_floor(q: f64) -> f64 {
    let f = q.floor();
    if f == q {
        f - 1.0
    } else {
        f
    }
}

/// q! = q (q-1) ... (q - strict_floor(q)).
pub fn strict_factorial(q: f64) -> f64 {
    let m = strict_floor(q).max(0.0) as usize;
    (0..=m).map(|j| q - j as f64).product()
}

/// Smallest integer j with j >= q.
pub fn ceil_index(q: f64) -> usize {
    q.ceil() as usize
}

/// Gamma function (re-exported for convenience).
pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

/// Phi_{N,s}(t) = e^t - sum_{j=0}^{j_{N/s}-2} t^j / j!, for t >= 0.
pub fn mt_phi(n: usize, s: f64, t: f64) -> Result<f64> {
    if t > 700.0 {
        return Err(Error::Overflow(t));
    }
    let t = t.max(0.0);
    let first = ceil_index(n as f64 / s).saturating_sub(1);
    if t < 2.0 {
        // Remaining Taylor tail; all terms positive, so no cancellation.
        let mut term = 1.0;
        for j in 1..=first {
            term *= t / j as f64;
        }
        let mut sum = 0.0;
        let mut j = first;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            j += 1;
            term *= t / j as f64;
            if term == 0.0 {
                break;
            }
        }
        Ok(sum)
    } else {
        let mut partial = 0.0;
        let mut term = 1.0;
        for j in 0..first {
            partial += term;
            term *= t / (j + 1) as f64;
        }
        Ok(t.exp() - partial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((ball_volume(2) - PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn strict_floor_convention() {
        assert_eq!(strict_floor(4.0), 3.0);
        assert_eq!(strict_floor(4.5), 4.0);
        assert_eq!(strict_factorial(4.0), 24.0);
        let q = 2.5;
        assert!((strict_factorial(q) - 2.5 * 1.5 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi_at_one() {
        let v = mt_phi(2, 0.5, 1.0).unwrap();
        assert!((v - (E - 2.5)).abs() < 1e-15, "{v}");
        assert_eq!(mt_phi(2, 0.5, 0.0).unwrap(), 0.0);
        assert!(mt_phi(2, 0.5, 701.0).is_err());
        // continuity across the series/direct switch
        let a = mt_phi(2, 0.5, 2.0 - 1e-12).unwrap();
        let b = mt_phi(2, 0.5, 2.0).unwrap();
        assert!((a - b).abs() < 1e-10);
        let direct = 2f64.exp() - 1.0 - 2.0 - 2.0;
        assert!((b - direct).abs() < 1e-14);
    }

    #[test]
    fn phi_small_argument_leading_term() {
        let t = 1e-3;
        let v = mt_phi(2, 0.5, t).unwrap();
        assert!((v / (t * t * t / 6.0) - 1.0).abs() < 1e-3);
    }
}
