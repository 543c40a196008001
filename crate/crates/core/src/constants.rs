//! Explicit constants: the Riesz constant, the Moser-Trudinger exponent bound,
//! the test-function bounds, the level threshold and the (f3) window width.

use crate::error::{Error, Result};
use crate::special::{ball_volume, sphere_measure, strict_factorial, strict_floor};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Dimension, fractional order, growth exponent and potential bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub dim: usize,
    pub s: f64,
    pub tau: f64,
    #[serde(rename = "V_lower", default = "one")]
    pub v_lower: f64,
    #[serde(rename = "V_upper", default = "one")]
    pub v_upper: f64,
}

fn one() -> f64 {
    1.0
}

impl ProblemParams {
    pub fn new(dim: usize, s: f64, tau: f64) -> Result<Self> {
        let p = ProblemParams { dim, s, tau, v_lower: 1.0, v_upper: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {} must lie in (0,1)", self.s)));
        }
        let lo = self.tau_lower();
        if !(self.tau > lo && self.tau < self.s) {
            return Err(Error::InvalidParameter(format!(
                "tau = {} outside the (f3) window ((1-2/N)s, s) = ({lo}, {})",
                self.tau, self.s
            )));
        }
        if !(self.v_lower > 0.0 && self.v_lower <= self.v_upper && self.v_upper.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "potential bounds need 0 < V_lower <= V_upper, got ({}, {})",
                self.v_lower, self.v_upper
            )));
        }
        Ok(())
    }

    /// Critical exponent N/s.
    pub fn p(&self) -> f64 {
        self.dim as f64 / self.s
    }

    /// Left end (1-2/N)s of the admissible tau window.
    pub fn tau_lower(&self) -> f64 {
        (1.0 - 2.0 / self.dim as f64) * self.s
    }

    /// Exponent N/(N-s) of the critical exponential growth.
    pub fn gamma_exp(&self) -> f64 {
        let n = self.dim as f64;
        n / (n - self.s)
    }
}

/// Reading of the second entry of the mu_N minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MuForm {
    /// tau * (1-2/N) * s, as printed.
    Literal,
    /// tau - (1-2/N) * s.
    #[default]
    Difference,
}

impl std::str::FromStr for MuForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(MuForm::Literal),
            "difference" => Ok(MuForm::Difference),
            other => Err(Error::InvalidParameter(format!("unknown mu-form `{other}`"))),
        }
    }
}

/// Summation order for the alpha* series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    Forward,
    Kahan,
}

/// C_N = 1 / (2^{N-1} pi^{N/2} Gamma(N/2)).
pub fn riesz_constant(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let nf = n as f64;
    Ok(1.0 / (2f64.powf(nf - 1.0) * PI.powf(0.5 * nf) * gamma(0.5 * nf)))
}

/// Value of alpha*_{s,N} with a certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaStar {
    pub value: f64,
    /// Half-width of the certified bracket around `value`.
    pub remainder: f64,
    /// Value obtained from the certified upper bound of the series.
    pub upper: f64,
    pub lower: f64,
    pub terms: usize,
}

fn alpha_term(n: usize, p: f64, k: usize) -> f64 {
    let kf = k as f64;
    let rising: f64 = (1..n).map(|j| kf + j as f64).product();
    rising / (n as f64 + 2.0 * kf).powf(p)
}

/// Exact integral of (x+1)...(x+N-1) (N+2x)^{-p} over [k, inf).
fn alpha_tail_integral(n: usize, p: f64, k: f64) -> f64 {
    // Expand prod_j (x+j) with x + j = (y - N + 2j)/2 as a polynomial in y = N + 2x.
    let mut coeffs = vec![1.0];
    for j in 1..n {
        let shift = (2.0 * j as f64 - n as f64) / 2.0;
        let mut next = vec![0.0; coeffs.len() + 1];
        for (m, c) in coeffs.iter().enumerate() {
            next[m + 1] += 0.5 * c;
            next[m] += shift * c;
        }
        coeffs = next;
    }
    let y = n as f64 + 2.0 * k;
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| c * y.powf(m as f64 + 1.0 - p) / (2.0 * (p - m as f64 - 1.0)))
        .sum()
}

fn alpha_prefactor(n: usize, s: f64) -> f64 {
    let p = n as f64 / s;
    let sn = sphere_measure(n);
    (2.0f64.ln() + 2.0 * sn.ln() + ln_gamma(1.0 + p) - ln_gamma(n as f64 + 1.0)).exp()
}

fn alpha_from_sum(n: usize, s: f64, sum: f64) -> f64 {
    let nf = n as f64;
    nf * (alpha_prefactor(n, s) * sum).powf(s / (nf - s))
}

/// alpha* from the first `cap + 1` terms plus the exact integral bracket of the tail.
pub fn alpha_star_truncated(n: usize, s: f64, cap: usize, order: Summation) -> Result<AlphaStar> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0,1)")));
    }
    let p = n as f64 / s;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 0..=cap {
        let a = alpha_term(n, p, k);
        match order {
            Summation::Forward => sum += a,
            Summation::Kahan => {
                let y = a - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
        }
    }
    // The summand is decreasing beyond k = N^2, so the tail lies between the
    // integrals over [K+1, inf) and [K, inf).
    let rounding = match order {
        Summation::Forward => (cap + 1) as f64,
        Summation::Kahan => 2.0,
    } * f64::EPSILON
        * sum;
    let hi = alpha_tail_integral(n, p, cap as f64) + rounding;
    let lo = alpha_tail_integral(n, p, cap as f64 + 1.0) - rounding;
    let upper = alpha_from_sum(n, s, sum + hi);
    let lower = alpha_from_sum(n, s, sum + lo);
    let value = alpha_from_sum(n, s, sum + 0.5 * (hi + lo));
    let remainder = (upper - value).max(value - lower);
    Ok(AlphaStar { value, remainder, upper, lower, terms: cap + 1 })
}

/// alpha*_{s,N} with certified remainder below `tol`.
pub fn alpha_star_upper(n: usize, s: f64, tol: f64) -> Result<AlphaStar> {
    alpha_star_with(n, s, tol, Summation::Kahan)
}

pub fn alpha_star_with(n: usize, s: f64, tol: f64, order: Summation) -> Result<AlphaStar> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    const CAP: usize = 1 << 24;
    let mut k = (n * n).max(64);
    loop {
        let a = alpha_star_truncated(n, s, k, order)?;
        if a.remainder < tol {
            return Ok(a);
        }
        if k >= CAP {
            return Err(Error::ToleranceNotReached { tol, terms: a.terms, remainder: a.remainder });
        }
        k *= 2;
    }
}

/// Literal V-norm bound of the plateau test function (uses omega_{N-1}).
pub fn j_frak(n: usize, s: f64, r: f64, v_upper: f64) -> f64 {
    let nf = n as f64;
    v_upper * (ball_volume(n) * (r / 2.0).powf(nf) + ball_volume(n - 1) * j_frak_shell(n, s, r))
}

/// Same bound with the sphere measure N omega_N in place of N omega_{N-1}.
pub fn j_frak_sphere(n: usize, s: f64, r: f64, v_upper: f64) -> f64 {
    let nf = n as f64;
    v_upper * (ball_volume(n) * (r / 2.0).powf(nf) + ball_volume(n) * j_frak_shell(n, s, r))
}

fn j_frak_shell(n: usize, s: f64, r: f64) -> f64 {
    let nf = n as f64;
    nf * s * (nf + 3.0 * s) * r * r / (4.0 * (nf + s) * (nf + 2.0 * s))
}

/// Literal seminorm bound of the plateau test function, prefactor N omega_N^2.
pub fn k_frak(n: usize, s: f64) -> f64 {
    let w = ball_volume(n);
    n as f64 * w * w * k_frak_bracket(n, s)
}

/// Seminorm bound with the prefactor (N omega_N)^2.
pub fn k_frak_squared(n: usize, s: f64) -> f64 {
    let w = sphere_measure(n);
    w * w * k_frak_bracket(n, s)
}

fn k_frak_bracket(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let d = nf / s - nf + 1.0;
    let two_n = 2f64.powf(nf);
    (3.0 / two_n + (two_n - 2.0) * d / (two_n * (nf - 1.0)) + two_n * (1.0 + nf / (2.0 * s))) / d
}

/// Sum of the individual pair-region bounds 2(N omega_N)^2 (I1+I2+I3) + (N omega_N)^2 (A1+A2).
pub fn k_frak_from_parts(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let d = nf / s - nf + 1.0;
    let h = 2f64.powf(nf - 1.0);
    let i1 = 1.0 / (nf * h * d);
    let i2 = (h - 1.0) / (h * (nf - 1.0) * nf);
    let i3 = h / (nf * d);
    let a1 = 1.0 / (nf * h * d);
    let a2 = h / (s * d);
    let w = sphere_measure(n);
    w * w * (2.0 * (i1 + i2 + i3) + a1 + a2)
}

/// T_N(s,R) = (2^{s/N} (J + K))^{-s/N}.
pub fn threshold_t(n: usize, s: f64, r: f64, v_upper: f64) -> f64 {
    let e = s / n as f64;
    (2f64.powf(e) * (j_frak(n, s, r, v_upper) + k_frak(n, s))).powf(-e)
}

/// beta_0 at R = 1/3.
pub fn beta_0(n: usize, s: f64, v_upper: f64) -> Result<f64> {
    let nf = n as f64;
    let w = ball_volume(n);
    let c = riesz_constant(n)?;
    let jk = j_frak(n, s, 1.0 / 3.0, v_upper) + k_frak(n, s);
    Ok(2f64.powf(nf / s + nf) * 3f64.powf(nf) / (w * w * c * 3f64.ln()) * jk.powf(s / nf + 1.0))
}

/// mu_N(s,tau) under the chosen reading.
pub fn mu_n(n: usize, s: f64, tau: f64, form: MuForm) -> f64 {
    let nf = n as f64;
    let q = nf / s;
    let x = match form {
        MuForm::Literal => tau * (1.0 - 2.0 / nf) * s,
        MuForm::Difference => tau - (1.0 - 2.0 / nf) * s,
    };
    let second = (q - strict_floor(q)) / (q * strict_factorial(q)) * x / (2.0 * s);
    (s / nf).min(second)
}

/// s / (tau - (1-2/N)s).
pub fn norm_cap(n: usize, s: f64, tau: f64) -> f64 {
    s / (tau - (1.0 - 2.0 / n as f64) * s)
}

/// a = s(2N+3) / (2(N-s)).
pub fn decay_exponent(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    s * (2.0 * nf + 3.0) / (2.0 * (nf - s))
}

/// Every explicit constant for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    #[serde(rename = "N")]
    pub dim: usize,
    pub s: f64,
    pub tau: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub mu_form: MuForm,
    #[serde(rename = "omega_N")]
    pub omega_n: f64,
    #[serde(rename = "C_N")]
    pub c_n: f64,
    pub alpha_star: f64,
    pub alpha_star_remainder: f64,
    pub alpha_star_terms: usize,
    #[serde(rename = "J_frak")]
    pub j_frak: f64,
    #[serde(rename = "K_frak")]
    pub k_frak: f64,
    #[serde(rename = "T_N")]
    pub t_n: f64,
    pub beta_0: f64,
    #[serde(rename = "mu_N")]
    pub mu_n: f64,
    pub norm_cap: f64,
    pub decay_a: f64,
    /// J_frak with N omega_N in the shell term.
    #[serde(rename = "J_frak_sphere")]
    pub j_frak_sphere: f64,
    /// K_frak with prefactor (N omega_N)^2.
    #[serde(rename = "K_frak_squared")]
    pub k_frak_squared: f64,
    /// Sum of the pair-region bounds.
    #[serde(rename = "K_frak_parts")]
    pub k_frak_parts: f64,
    #[serde(rename = "mu_N_literal")]
    pub mu_n_literal: f64,
    #[serde(rename = "mu_N_difference")]
    pub mu_n_difference: f64,
}

impl ConstantsReport {
    /// All primary fields strictly positive, remainder below `tol`, mu_N <= s/N.
    pub fn invariants_hold(&self, tol: f64) -> bool {
        let pos = [
            self.omega_n, self.c_n, self.alpha_star, self.j_frak, self.k_frak, self.t_n, self.beta_0, self.mu_n,
            self.norm_cap, self.decay_a,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        pos && self.alpha_star_remainder < tol && self.mu_n <= self.s / self.dim as f64
    }
}

/// Formula strings accompanying each reported constant.
pub const PROVENANCE: &[(&str, &str)] = &[
    ("omega_N", "pi^{N/2} / Gamma(N/2 + 1)"),
    ("C_N", "1 / (2^{N-1} pi^{N/2} Gamma(N/2))"),
    ("alpha_star", "N (2 (N omega_N)^2 Gamma(1+N/s) / N! * sum_k (N-1+k)! / (k! (N+2k)^{N/s}))^{s/(N-s)}"),
    ("J_frak", "V_upper (omega_N (R/2)^N + omega_{N-1} N s (N+3s) R^2 / (4 (N+s)(N+2s)))"),
    ("K_frak", "N omega_N^2 / (N/s-N+1) * (3/2^N + (2^N-2)(N/s-N+1)/(2^N (N-1)) + 2^N (1 + N/(2s)))"),
    ("T_N", "(2^{s/N} (J_frak(1/3) + K_frak))^{-s/N}"),
    ("beta_0", "2^{N/s+N} 3^N / (omega_N^2 C_N log 3) * (J_frak(1/3) + K_frak)^{s/N+1}"),
    ("mu_N", "min{s/N, (N/s - floor(N/s)) / ((N/s) (N/s)!) * X / (2s)}"),
    ("norm_cap", "s / (tau - (1-2/N) s)"),
    ("decay_a", "s (2N+3) / (2 (N-s))"),
];

/// Evaluate every constant; T_N and beta_0 always use R = 1/3.
pub fn constants_bundle(params: &ProblemParams, r: f64, form: MuForm, tol: f64) -> Result<ConstantsReport> {
    params.validate()?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!("R = {r} must lie in (0,1]")));
    }
    let (n, s, tau, v) = (params.dim, params.s, params.tau, params.v_upper);
    let alpha = alpha_star_upper(n, s, tol)?;
    Ok(ConstantsReport {
        dim: n,
        s,
        tau,
        r,
        mu_form: form,
        omega_n: ball_volume(n),
        c_n: riesz_constant(n)?,
        alpha_star: alpha.value,
        alpha_star_remainder: alpha.remainder,
        alpha_star_terms: alpha.terms,
        j_frak: j_frak(n, s, r, v),
        k_frak: k_frak(n, s),
        t_n: threshold_t(n, s, 1.0 / 3.0, v),
        beta_0: beta_0(n, s, v)?,
        mu_n: mu_n(n, s, tau, form),
        norm_cap: norm_cap(n, s, tau),
        decay_a: decay_exponent(n, s),
        j_frak_sphere: j_frak_sphere(n, s, r, v),
        k_frak_squared: k_frak_squared(n, s),
        k_frak_parts: k_frak_from_parts(n, s),
        mu_n_literal: mu_n(n, s, tau, MuForm::Literal),
        mu_n_difference: mu_n(n, s, tau, MuForm::Difference),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Apery-type series, independent of the alpha* machinery.
    fn zeta3() -> f64 {
        let mut sum = 0.0;
        let mut binom = 1.0f64;
        for k in 1..40 {
            let kf = k as f64;
            binom *= (2.0 * kf) * (2.0 * kf - 1.0) / (kf * kf);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign / (kf * kf * kf * binom);
        }
        2.5 * sum
    }

    #[test]
    fn riesz_values() {
        assert!((riesz_constant(2).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((riesz_constant(3).unwrap() - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((riesz_constant(4).unwrap() - 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
        assert_eq!(riesz_constant(1), Err(Error::InvalidDimension(1)));
    }

    #[test]
    fn zeta_oracle_sane() {
        assert!((zeta3() - 1.202_056_903_159_594_2).abs() < 1e-15);
    }

    #[test]
    fn alpha_star_planar_closed_form() {
        let a = alpha_star_upper(2, 0.5, 1e-10).unwrap();
        let exact = 2.0 * (6.0 * PI * PI * zeta3()).cbrt();
        assert!((a.value - exact).abs() < 1e-8, "{} vs {}", a.value, exact);
        assert!(a.remainder < 1e-10);
        assert!((a.value - 8.289).abs() < 1e-3);
    }

    #[test]
    fn alpha_star_summation_orders_agree() {
        let f = alpha_star_with(3, 0.5, 1e-10, Summation::Forward).unwrap();
        let k = alpha_star_with(3, 0.5, 1e-10, Summation::Kahan).unwrap();
        assert!((f.value - k.value).abs() < 1e-8);
    }

    #[test]
    fn alpha_star_slow_series_certified() {
        let a = alpha_star_upper(2, 0.7, 1e-10).unwrap();
        assert!(a.remainder < 1e-10 && a.lower <= a.value && a.value <= a.upper);
    }

    #[test]
    fn alpha_star_upper_monotone_in_cap() {
        let mut prev = f64::INFINITY;
        for cap in [16usize, 32, 64, 128, 256, 1024] {
            let a = alpha_star_truncated(2, 0.6, cap, Summation::Kahan).unwrap();
            assert!(a.upper <= prev + 1e-15);
            prev = a.upper;
        }
    }

    #[test]
    fn tolerance_cap_reported() {
        let e = alpha_star_upper(2, 0.5, 1e-300).unwrap_err();
        assert!(matches!(e, Error::ToleranceNotReached { .. }));
    }

    #[test]
    fn planar_constants() {
        assert!((k_frak(2, 0.5) - 9.5 * PI * PI).abs() < 1e-12);
        assert!((k_frak_from_parts(2, 0.5) - 11.0 * PI * PI).abs() < 1e-12);
        assert!((norm_cap(2, 0.5, 0.25) - 2.0).abs() < 1e-15);
        assert!((decay_exponent(2, 0.5) - 7.0 / 6.0).abs() < 1e-15);
        let t = threshold_t(2, 0.5, 1.0 / 3.0, 1.0);
        assert!((t - 0.308).abs() < 2e-3, "{t}");
        let b = beta_0(2, 0.5, 1.0).unwrap();
        assert!((b / 9.75e4 - 1.0).abs() < 0.01, "{b}");
        // literal mu form vanishes in the plane
        assert_eq!(mu_n(2, 0.5, 0.25, MuForm::Literal), 0.0);
        let m = mu_n(2, 0.5, 0.25, MuForm::Difference);
        assert!((m - 0.25 / 96.0).abs() < 1e-15, "{m}");
    }

    #[test]
    fn j_frak_direct() {
        let r = 1.0 / 3.0;
        let expect = PI / 36.0 + 2.0 * 2.0 * 0.5 * 3.5 * r * r / (4.0 * 2.5 * 3.0);
        assert!((j_frak(2, 0.5, r, 1.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn bundle_invariants() {
        let p = ProblemParams::new(2, 0.5, 0.25).unwrap();
        let c = constants_bundle(&p, 1.0 / 3.0, MuForm::Difference, 1e-10).unwrap();
        assert!(c.invariants_hold(1e-10));
        assert!(ProblemParams::new(2, 0.5, 0.6).is_err());
        assert!(ProblemParams::new(3, 0.5, 0.1).is_err());
    }

    #[test]
    fn k_frak_diverges_towards_critical_order() {
        // N/s - N + 1 -> 0 as s -> N/(N-1), only reachable for the formula itself
        let mut prev = 0.0;
        for k in 0..20 {
            let s = 0.5 + k as f64 * 0.0749;
            let v = k_frak(2, s);
            assert!(v > prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn decay_exponent_exceeds_ratio(n in 2usize..8, s in 0.01f64..0.99) {
            let nf = n as f64;
            prop_assert!(decay_exponent(n, s) > nf * s / (nf - s));
        }

        #[test]
        fn mu_n_below_s_over_n(n in 2usize..6, s in 0.05f64..0.95, frac in 0.01f64..0.99) {
            let nf = n as f64;
            let lo = (1.0 - 2.0 / nf) * s;
            let tau = lo + frac * (s - lo);
            for form in [MuForm::Literal, MuForm::Difference] {
                prop_assert!(mu_n(n, s, tau, form) <= s / nf);
            }
        }
    }
}
