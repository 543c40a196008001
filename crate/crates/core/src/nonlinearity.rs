//! The model nonlinearity f(t) = lambda t^q exp(alpha t^gamma) and a grid-based
//! checker for the growth assumptions (f1)-(f5) and their consequences.
//!
//! With z = alpha t^gamma the primitive is F(t) = lambda t^{q+1} e^z Psi(z),
//! Psi(z) = int_0^1 x^q exp(z (x^gamma - 1)) dx, so F/f = t Psi(z) and
//! F f'/f^2 = Psi(z) (q + gamma z) stay finite where f itself overflows.

use crate::constants::{alpha_star_upper, beta_0, mu_n, threshold_t, MuForm, ProblemParams};
use crate::error::{Error, Result};
use crate::quadrature::adaptive;
use crate::special::mt_phi;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Evaluator interface used by the energy; the model family implements it,
/// and other nonlinearities can be plugged in the same way.
pub trait NonlinearEval: Send + Sync + std::fmt::Debug {
    fn f(&self, t: f64) -> f64;
    fn df(&self, t: f64) -> f64;
    /// F(t) = int_0^t f.
    fn big_f(&self, t: f64) -> f64;
    /// F(t)/f(t) for t > 0.
    fn f_ratio(&self, t: f64) -> f64 {
        self.big_f(t) / self.f(t)
    }
    /// F(t) f'(t) / f(t)^2 for t > 0.
    fn ff_ratio(&self, t: f64) -> f64 {
        self.f_ratio(t) * self.df(t) / self.f(t)
    }
    /// ln(f(t) F(t)) for t > 0.
    fn ln_f_big_f(&self, t: f64) -> f64 {
        (self.f(t) * self.big_f(t)).ln()
    }
    /// ln f(t) for t > 0.
    fn ln_f(&self, t: f64) -> f64 {
        self.f(t).ln()
    }
    /// Largest exponent argument reached at amplitude t (overflow guard).
    fn exponent_arg(&self, _t: f64) -> f64 {
        0.0
    }
}

/// Piecewise Chebyshev interpolant of Psi on [0, Z_MAX].
#[derive(Debug)]
struct PsiTable {
    q: f64,
    gamma: f64,
    /// (lo, hi, coefficients) per panel.
    panels: Vec<(f64, f64, Vec<f64>)>,
}

const Z_MAX: f64 = 1024.0;
const CHEB_DEGREE: usize = 28;

fn psi_direct(q: f64, gamma: f64, z: f64) -> f64 {
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (q * x.ln() + z * (x.powf(gamma) - 1.0)).exp() };
    // split near x = 1 where the integrand concentrates for large z
    let split = (1.0 - 8.0 / (gamma * z.max(1.0))).max(0.0);
    let (a, _) = adaptive(f, 0.0, split.max(1e-300), 1e-300, 1e-14);
    let (b, _) = adaptive(f, split, 1.0, 1e-300, 1e-14);
    if split > 0.0 {
        a + b
    } else {
        b
    }
}

impl PsiTable {
    fn new(q: f64, gamma: f64) -> Self {
        let mut edges = vec![0.0, 0.25, 0.5, 1.0];
        while *edges.last().unwrap() < Z_MAX {
            let last = *edges.last().unwrap();
            edges.push(2.0 * last);
        }
        let n = CHEB_DEGREE;
        let panels = edges
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let xs: Vec<f64> = (0..n).map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos()).collect();
                let vals: Vec<f64> = xs.iter().map(|x| psi_direct(q, gamma, lo + 0.5 * (x + 1.0) * (hi - lo))).collect();
                let coeffs = (0..n)
                    .map(|j| {
                        let s: f64 = (0..n)
                            .map(|k| vals[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                            .sum();
                        2.0 * s / n as f64
                    })
                    .collect();
                (lo, hi, coeffs)
            })
            .collect();
        PsiTable { q, gamma, panels }
    }

    fn eval(&self, z: f64) -> f64 {
        if z >= Z_MAX {
            return psi_direct(self.q, self.gamma, z);
        }
        let z = z.max(0.0);
        let idx = self.panels.partition_point(|p| p.1 <= z).min(self.panels.len() - 1);
        let (lo, hi, c) = &self.panels[idx];
        let x = (2.0 * z - lo - hi) / (hi - lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for cj in c.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + cj;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * c[0]
    }
}

/// Parameters of the model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityParams {
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
}

/// f(t) = lambda t^q exp(alpha t^{N/(N-s)}) for t > 0, 0 otherwise.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma_exp: f64,
    psi: Arc<PsiTable>,
}

/// Build the model family; F is tabulated once per (q, gamma).
pub fn make_model_nonlinearity(n: usize, s: f64, lambda: f64, alpha: f64, q: f64) -> Result<Nonlinearity> {
    let min = n as f64 / s - 1.0;
    if !(q > min) {
        return Err(Error::InvalidExponent { q, min });
    }
    if !(lambda > 0.0 && alpha > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("need lambda, alpha > 0, got ({lambda}, {alpha})")));
    }
    let gamma = n as f64 / (n as f64 - s);
    Ok(Nonlinearity { q, lambda, alpha, gamma_exp: gamma, psi: Arc::new(PsiTable::new(q, gamma)) })
}

impl Nonlinearity {
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Nonlinearity { lambda, ..self.clone() }
    }

    pub fn params(&self) -> NonlinearityParams {
        NonlinearityParams { q: self.q, lambda: self.lambda, alpha: self.alpha }
    }

    fn z(&self, t: f64) -> f64 {
        self.alpha * t.powf(self.gamma_exp)
    }

    /// Psi(z) from the cached interpolant.
    pub fn psi(&self, z: f64) -> f64 {
        self.psi.eval(z)
    }
}

impl NonlinearEval for Nonlinearity {
    fn f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.lambda * (self.q * t.ln() + self.z(t)).exp()
    }

    fn df(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let z = self.z(t);
        self.f(t) * (self.q + self.gamma_exp * z) / t
    }

    fn big_f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let z = self.z(t);
        self.lambda * ((self.q + 1.0) * t.ln() + z).exp() * self.psi(z)
    }

    fn f_ratio(&self, t: f64) -> f64 {
        t * self.psi(self.z(t))
    }

    fn ff_ratio(&self, t: f64) -> f64 {
        let z = self.z(t);
        self.psi(z) * (self.q + self.gamma_exp * z)
    }

    fn ln_f_big_f(&self, t: f64) -> f64 {
        let z = self.z(t);
        2.0 * self.lambda.ln() + (2.0 * self.q + 1.0) * t.ln() + 2.0 * z + self.psi(z).ln()
    }

    fn ln_f(&self, t: f64) -> f64 {
        self.lambda.ln() + self.q * t.ln() + self.z(t)
    }

    fn exponent_arg(&self, t: f64) -> f64 {
        self.z(t.max(0.0))
    }
}

/// One assumption check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// Signed margin, nonnegative when the check passes.
    pub margin: f64,
    /// Grid point where the margin is attained.
    pub witness_t: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub ratio_inf: f64,
    pub ratio_inf_t: f64,
    pub ratio_sup: f64,
    pub ratio_sup_t: f64,
    /// inf over grid points above T_N of f F / t^{N/s}.
    pub beta_measured: f64,
    pub beta_0: f64,
    pub t_n: f64,
    pub mu_n: f64,
    pub alpha_star: f64,
    /// (f2) constants: b1 = sup_{t<=1} f, minimal b2 on the grid.
    pub b1: f64,
    pub b2: f64,
    /// F <= M0 f for t >= s0.
    pub m0: f64,
    pub s0: f64,
    /// F <= eps t f for t >= M_eps, eps = 0.1.
    pub m_eps: f64,
    /// f <= eps t^{N/s-1} + C_eps t^{N/s-1} Phi(alpha* t^gamma), eps = 0.1.
    pub c_eps: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// ln Phi_{N,s}(x), stable for large x.
fn ln_mt_phi(n: usize, s: f64, x: f64) -> f64 {
    if x < 600.0 {
        mt_phi(n, s, x).unwrap().ln()
    } else {
        x
    }
}

/// Audit grid: log-spaced on [1e-4, t_max] with alpha t_max^gamma = 300.
pub fn default_audit_grid(nl: &Nonlinearity, count: usize) -> Vec<f64> {
    let t_max = (300.0 / nl.alpha).powf(1.0 / nl.gamma_exp);
    crate::kernels::log_grid(1e-4, t_max, count)
}

/// Evaluate (f1)-(f5) and the derived bounds at every grid point.
pub fn verify_assumptions(nl: &dyn NonlinearEval, params: &ProblemParams, grid: &[f64], form: MuForm) -> Result<AssumptionReport> {
    verify_assumptions_with(nl, params, grid, form, 0.05)
}

pub fn verify_assumptions_with(
    nl: &dyn NonlinearEval,
    params: &ProblemParams,
    grid: &[f64],
    form: MuForm,
    f4_threshold: f64,
) -> Result<AssumptionReport> {
    params.validate()?;
    let (n, s, tau) = (params.dim, params.s, params.tau);
    let p = params.p();
    let gamma = params.gamma_exp();
    let t_n = threshold_t(n, s, 1.0 / 3.0, params.v_upper);
    let b0 = beta_0(n, s, params.v_upper)?;
    let mu = mu_n(n, s, tau, form);
    let a_star = alpha_star_upper(n, s, 1e-10)?.value;
    let t_min = grid.first().copied().unwrap_or(f64::NAN);
    let t_max = grid.last().copied().unwrap_or(f64::NAN);
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_min > 0.0) {
        return Err(Error::InvalidParameter("audit grid must be positive and increasing".into()));
    }
    if t_min > 1e-4 * (1.0 + 1e-9) || t_max < 10.0 * t_n {
        return Err(Error::InvalidParameter(format!(
            "audit grid [{t_min}, {t_max}] must cover [1e-4, 10 T_N = {}]",
            10.0 * t_n
        )));
    }
    let mut checks = Vec::new();

    // (f1)
    let neg_zero = [-1.0, -1e-3, 0.0].iter().all(|t| nl.f(*t) == 0.0);
    let positive = grid.iter().all(|t| nl.f(*t) > 0.0);
    let small = |t: f64| (nl.ln_f(t) - (p - 1.0) * t.ln()).exp();
    let (r0, r1) = (small(t_min), small(10.0 * t_min));
    let vanishing = r0 < r1 && r0 < 1e-3 * r1.max(1e-300) * 1e3;
    checks.push(AssumptionCheck {
        name: "f1".into(),
        passed: neg_zero && positive && vanishing,
        margin: r1 - r0,
        witness_t: t_min,
        detail: format!("f = 0 on t <= 0: {neg_zero}; f > 0 on grid: {positive}; f/t^(N/s-1) at t_min = {r0:e}, at 10 t_min = {r1:e}"),
    });

    // (f2): minimal b2 with b1 = sup_{t<=1} f.
    let b1 = grid.iter().filter(|t| **t <= 1.0).map(|t| nl.f(*t)).fold(nl.f(1.0), f64::max);
    let (mut b2, mut b2_t) = (0.0f64, f64::NAN);
    for &t in grid.iter().filter(|t| **t > 1.0) {
        let lnf = nl.ln_f(t);
        let lnphi = ln_mt_phi(n, s, a_star * t.powf(gamma));
        // (f - b1)/Phi <= f/Phi
        let ratio = if lnf < 700.0 { (nl.f(t) - b1).max(0.0) / lnphi.exp() } else { (lnf - lnphi).exp() };
        if ratio > b2 {
            b2 = ratio;
            b2_t = t;
        }
    }
    checks.push(AssumptionCheck {
        name: "f2".into(),
        passed: b2.is_finite(),
        margin: if b2.is_finite() { 1.0 } else { -1.0 },
        witness_t: b2_t,
        detail: format!("b1 = {b1:e}, minimal b2 = {b2:e} against alpha* = {a_star}"),
    });

    // (f3) both sides and (f4) on the top decade.
    let (mut inf, mut inf_t, mut sup, mut sup_t) = (f64::INFINITY, f64::NAN, f64::NEG_INFINITY, f64::NAN);
    let (mut f4_dev, mut f4_t) = (0.0f64, f64::NAN);
    for &t in grid {
        let r = nl.ff_ratio(t);
        if r < inf {
            inf = r;
            inf_t = t;
        }
        if r > sup {
            sup = r;
            sup_t = t;
        }
        if t >= t_max / 10.0 && (r - 1.0).abs() > f4_dev {
            f4_dev = (r - 1.0).abs();
            f4_t = t;
        }
    }
    let lower = 1.0 - s + tau;
    checks.push(AssumptionCheck {
        name: "f3-lower".into(),
        passed: inf >= lower,
        margin: inf - lower,
        witness_t: inf_t,
        detail: format!("inf F f'/f^2 = {inf} vs 1 - s + tau = {lower}"),
    });
    checks.push(AssumptionCheck {
        name: "f3-upper".into(),
        passed: sup < 1.0 + mu,
        margin: 1.0 + mu - sup,
        witness_t: sup_t,
        detail: format!("sup F f'/f^2 = {sup} vs 1 + mu_N = {}", 1.0 + mu),
    });
    checks.push(AssumptionCheck {
        name: "f4".into(),
        passed: f4_dev < f4_threshold,
        margin: f4_threshold - f4_dev,
        witness_t: f4_t,
        detail: format!("max |F f'/f^2 - 1| on [{}, {t_max}] = {f4_dev}", t_max / 10.0),
    });

    // (f5) on grid points above T_N.
    let (mut beta, mut beta_t) = (f64::INFINITY, f64::NAN);
    for &t in grid.iter().filter(|t| **t > t_n) {
        let v = (nl.ln_f_big_f(t) - p * t.ln()).exp();
        if v < beta {
            beta = v;
            beta_t = t;
        }
    }
    checks.push(AssumptionCheck {
        name: "f5".into(),
        passed: beta > b0,
        margin: beta - b0,
        witness_t: beta_t,
        detail: format!("inf_(t > T_N = {t_n}) f F / t^(N/s) = {beta:e} vs beta_0 = {b0:e}"),
    });

    // F <= (s - tau) t f.
    let (mut m2, mut m2_t) = (f64::INFINITY, f64::NAN);
    for &t in grid {
        let margin = (s - tau) - nl.f_ratio(t) / t;
        if margin < m2 {
            m2 = margin;
            m2_t = t;
        }
    }
    checks.push(AssumptionCheck {
        name: "primitive-below-tf".into(),
        passed: m2 >= 0.0,
        margin: m2,
        witness_t: m2_t,
        detail: "F(t) <= (s - tau) t f(t) at every node".into(),
    });

    // M0, s0 and M_eps witnesses for F against f and t f.
    let s0 = 1.0f64.max(t_min);
    let m0 = grid.iter().filter(|t| **t >= s0).map(|t| nl.f_ratio(*t)).fold(0.0, f64::max);
    let eps = 0.1;
    let m_eps = grid
        .iter()
        .rev()
        .take_while(|t| nl.f_ratio(**t) <= eps * **t)
        .last()
        .copied()
        .unwrap_or(f64::INFINITY);
    checks.push(AssumptionCheck {
        name: "primitive-ratio-bounds".into(),
        passed: m0.is_finite() && m_eps.is_finite(),
        margin: if m0.is_finite() { 1.0 } else { -1.0 },
        witness_t: m_eps,
        detail: format!("F <= {m0:e} f for t >= {s0}; F <= {eps} t f for t >= {m_eps}"),
    });

    // Smallest C_eps splitting f into a power part and a Phi part.
    let mut c_eps = 0.0f64;
    for &t in grid {
        let lnphi = ln_mt_phi(n, s, a_star * t.powf(gamma));
        let base = (p - 1.0) * t.ln();
        let excess = nl.f(t) - eps * base.exp();
        if excess > 0.0 {
            c_eps = c_eps.max((excess.ln() - base - lnphi).exp());
        }
    }
    checks.push(AssumptionCheck {
        name: "growth-splitting".into(),
        passed: c_eps.is_finite(),
        margin: if c_eps.is_finite() { 1.0 } else { -1.0 },
        witness_t: f64::NAN,
        detail: format!("f <= {eps} t^(N/s-1) + C t^(N/s-1) Phi(alpha* t^gamma) with C = {c_eps:e}"),
    });

    Ok(AssumptionReport {
        checks,
        ratio_inf: inf,
        ratio_inf_t: inf_t,
        ratio_sup: sup,
        ratio_sup_t: sup_t,
        beta_measured: beta,
        beta_0: b0,
        t_n,
        mu_n: mu,
        alpha_star: a_star,
        b1,
        b2,
        m0,
        s0,
        m_eps,
        c_eps,
        grid_min: t_min,
        grid_max: t_max,
        grid_points: grid.len(),
    })
}

/// inf over the audit grid above T_N of f F / t^{N/s}.
pub fn beta_on_grid(nl: &dyn NonlinearEval, p: f64, grid: &[f64]) -> f64 {
    grid.iter().map(|t| (nl.ln_f_big_f(*t) - p * t.ln()).exp()).fold(f64::INFINITY, f64::min)
}

/// 10^4-point log grid on (T_N, t_max].
pub fn beta_audit_grid(nl: &Nonlinearity, t_n: f64) -> Vec<f64> {
    let t_max = (300.0 / nl.alpha).powf(1.0 / nl.gamma_exp).max(10.0 * t_n);
    crate::kernels::log_grid(t_n * (1.0 + 1e-9), t_max, 10_000)
}

/// Smallest amplitude (bisection, 1e-6 relative) reaching `target_beta`.
pub fn calibrate_amplitude(nl: &Nonlinearity, params: &ProblemParams, target_beta: f64) -> Result<f64> {
    const CAP: f64 = 1e12;
    let t_n = threshold_t(params.dim, params.s, 1.0 / 3.0, params.v_upper);
    let grid = beta_audit_grid(nl, t_n);
    let p = params.p();
    let ok = |lambda: f64| beta_on_grid(&nl.with_lambda(lambda), p, &grid) >= target_beta;
    if ok(nl.lambda) {
        return Ok(nl.lambda);
    }
    let mut lo = nl.lambda;
    let mut hi = nl.lambda;
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > CAP {
            return Err(Error::UnreachableTarget { target: target_beta, cap: CAP });
        }
    }
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn model(q: f64) -> Nonlinearity {
        make_model_nonlinearity(2, 0.5, 1.0, 1.0, q).unwrap()
    }

    #[test]
    fn values_at_zero_and_one() {
        let nl = model(4.0);
        assert_eq!(nl.f(0.0), 0.0);
        assert_eq!(nl.big_f(0.0), 0.0);
        assert!((nl.f(1.0) - E).abs() < 1e-15);
    }

    #[test]
    fn primitive_matches_midpoint_oracle() {
        let nl = model(4.0);
        let m = 200_000;
        let h = 1.0 / m as f64;
        let mid: f64 = (0..m).map(|k| nl.f((k as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((nl.big_f(1.0) - mid).abs() < 1e-8 * mid, "{} vs {mid}", nl.big_f(1.0));
    }

    #[test]
    fn psi_table_relative_accuracy() {
        let nl = model(10.0);
        for k in 0..200 {
            let z = 1e-3 * (1.05f64).powi(k);
            if z > 1000.0 {
                break;
            }
            let d = psi_direct(10.0, nl.gamma_exp, z);
            assert!((nl.psi(z) - d).abs() < 1e-11 * d, "z={z}");
        }
    }

    #[test]
    fn derivative_matches_differences() {
        let nl = model(4.0);
        for k in 0..40 {
            let t = 1e-3 * (10f64).powf(4.0 * k as f64 / 39.0);
            let h = 1e-6 * t;
            let fd = (nl.f(t + h) - nl.f(t - h)) / (2.0 * h);
            assert!((fd - nl.df(t)).abs() < 1e-6 * nl.df(t).abs(), "t={t}");
        }
    }

    #[test]
    fn ratio_limits() {
        let nl = model(4.0);
        assert!((nl.ff_ratio(1e-6) - 0.8).abs() < 1e-6);
        let big = 60.0;
        assert!((nl.ff_ratio(big) - 1.0).abs() < 0.01);
    }

    #[test]
    fn invalid_exponent() {
        assert!(matches!(make_model_nonlinearity(2, 0.5, 1.0, 1.0, 3.0), Err(Error::InvalidExponent { .. })));
    }

    #[test]
    fn calibration_scales_quadratically() {
        let p = ProblemParams::new(2, 0.5, 0.25).unwrap();
        let nl = model(10.0);
        let b0 = beta_0(2, 0.5, 1.0).unwrap();
        let lam = calibrate_amplitude(&nl, &p, 1.01 * b0).unwrap();
        let cal = nl.with_lambda(lam);
        let t_n = threshold_t(2, 0.5, 1.0 / 3.0, 1.0);
        let grid = beta_audit_grid(&cal, t_n);
        let b = beta_on_grid(&cal, 4.0, &grid);
        assert!(b >= 1.01 * b0 && b < 1.01 * b0 * (1.0 + 1e-5));
        let b2 = beta_on_grid(&cal.with_lambda(2.0 * lam), 4.0, &grid);
        assert!((b2 / b - 4.0).abs() < 1e-10);
        // target below the current value returns the current amplitude
        assert_eq!(calibrate_amplitude(&cal, &p, 1.0).unwrap(), lam);
    }

    #[test]
    fn audit_of_calibrated_model() {
        let p = ProblemParams::new(2, 0.5, 0.25).unwrap();
        let b0 = beta_0(2, 0.5, 1.0).unwrap();
        for (q, f3_ok) in [(4.0, false), (10.0, true)] {
            let nl = model(q);
            let nl = nl.with_lambda(calibrate_amplitude(&nl, &p, 1.01 * b0).unwrap());
            let rep = verify_assumptions(&nl, &p, &default_audit_grid(&nl, 4000), MuForm::Difference).unwrap();
            for c in &rep.checks {
                if c.name == "f3-upper" {
                    assert_eq!(c.passed, f3_ok, "q={q}: {c:?}");
                } else {
                    assert!(c.passed, "q={q}: {c:?}");
                }
            }
            assert!((rep.ratio_inf - q / (q + 1.0)).abs() < 1e-3);
        }
    }
}
