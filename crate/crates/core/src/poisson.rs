//! The Poisson potential phi = C_N log(1/|.|) * F(u) of a solution, its
//! asymptotics, weighted integrability, decay of u, the convolution bound for
//! G_mu, the planar five-point residual and the local Holder bound.

use crate::constants::{decay_exponent, riesz_constant};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::kernels::{ConvolutionOperator, KernelSpec};
use crate::quadrature::{adaptive, gauss};
use crate::radial::{log_log_slope, radial_integral, RadialField, RadialGrid};
use crate::report::{Anchor, Check};
use crate::special::sphere_measure;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Weights gamma of the sampled L_gamma norms.
pub const LGAMMA_WEIGHTS: [f64; 3] = [0.5, 1.0, 2.0];

/// Default audit radii; values beyond 0.8 R_max are dropped.
pub const AUDIT_RADII: [f64; 3] = [10.0, 20.0, 40.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LgammaNorm {
    pub gamma: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialReport {
    #[serde(skip)]
    pub phi: RadialField,
    /// Nodal values of F(u).
    #[serde(skip)]
    pub source: RadialField,
    pub dim: usize,
    pub riesz: f64,
    pub f_mass: f64,
    pub audit_radii: Vec<f64>,
    pub audit_phi: Vec<f64>,
    /// sup over audit radii of |phi(r) + C_N |F|_1 log r|.
    pub asymptotic_deviation: f64,
    /// |phi / (-C_N |F|_1 log r) - 1| at each audit radius.
    pub relative_deviation: Vec<f64>,
    /// Estimated relative mass of F(u) beyond R_max.
    pub truncation_band: f64,
    pub lgamma_norms: Vec<LgammaNorm>,
    pub log_f_integral: f64,
    pub f_tail_decay: Option<f64>,
}

/// Potential of the nodal source `g` at radius r, including C_N.
fn phi_at(op: &ConvolutionOperator, c_n: f64, g: &RadialField, r: f64) -> f64 {
    c_n * op.potential_at(g, r)
}

/// phi = C_N log(1/|.|) * F(u) with audits of its far field.
pub fn poisson_potential(model: &EnergyModel, u: &RadialField, audit_radii: &[f64]) -> Result<PotentialReport> {
    let n = model.params().dim;
    let g = u.with_values(model.primitive(u.values())?);
    let f_tail_decay = model.f_tail_decay(g.values())?;
    source_potential(&g, n, audit_radii, f_tail_decay)
}

/// Potential report for a nodal source field (F(u) already evaluated).
pub fn source_potential(g: &RadialField, n: usize, audit_radii: &[f64], f_tail_decay: Option<f64>) -> Result<PotentialReport> {
    if g.values().iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter("source F(u) must be nonnegative".into()));
    }
    let grid = g.grid().clone();
    let c_n = riesz_constant(n)?;
    let op = ConvolutionOperator::new(grid.clone(), n, KernelSpec::Log)?;
    let phi_vals: Vec<f64> = grid.nodes().par_iter().map(|&r| phi_at(&op, c_n, g, r)).collect();
    let phi = g.with_values(phi_vals);
    let f_mass = radial_integral(g, n, grid.quad_order(), |_, v| v.abs());
    let cap = 0.8 * grid.r_max();
    let radii: Vec<f64> = audit_radii.iter().copied().filter(|r| *r > 1.0 && *r <= cap).collect();
    let audit_phi: Vec<f64> = radii.par_iter().map(|&r| phi_at(&op, c_n, g, r)).collect();
    let asymptotic_deviation = radii.iter().zip(&audit_phi).map(|(r, p)| (p + c_n * f_mass * r.ln()).abs()).fold(0.0, f64::max);
    let relative_deviation = radii
        .iter()
        .zip(&audit_phi)
        .map(|(r, p)| if f_mass > 0.0 { (p / (-c_n * f_mass * r.ln()) - 1.0).abs() } else { f64::NAN })
        .collect();
    let truncation_band = truncation_band(g, n, f_mass, f_tail_decay);
    let lgamma_norms = LGAMMA_WEIGHTS
        .iter()
        .map(|&gamma| LgammaNorm { gamma, value: lgamma_norm(&op, c_n, g, &phi, f_mass, gamma) })
        .collect();
    let log_f_integral = radial_integral(g, n, grid.quad_order(), |r, v| (1.0 + r).ln() * v.abs());
    if !log_f_integral.is_finite() {
        return Err(Error::NonIntegrable("log-weighted integral of F(u)".into()));
    }
    Ok(PotentialReport {
        phi,
        source: g.clone(),
        dim: n,
        riesz: c_n,
        f_mass,
        audit_radii: radii,
        audit_phi,
        asymptotic_deviation,
        relative_deviation,
        truncation_band,
        lgamma_norms,
        log_f_integral,
        f_tail_decay,
    })
}

/// Mass of F beyond R_max relative to |F|_1, extrapolating F ~ r^{-d} from 0.8 R_max.
fn truncation_band(g: &RadialField, n: usize, f_mass: f64, decay: Option<f64>) -> f64 {
    let (Some(d), true) = (decay, f_mass > 0.0) else { return 0.0 };
    let nf = n as f64;
    let r_ref = 0.8 * g.grid().r_max();
    let r_max = g.grid().r_max();
    let f_ref = g.eval(r_ref).abs();
    sphere_measure(n) * f_ref * r_ref.powf(d) * r_max.powf(nf - d) / (d - nf) / f_mass
}

/// int |phi| / (1 + |x|^{N + 2 gamma}) over R^N: grid part by quadrature of
/// the nodal interpolant, then exact potential values on geometric panels and
/// the logarithmic far-field tail.
fn lgamma_norm(op: &ConvolutionOperator, c_n: f64, g: &RadialField, phi: &RadialField, f_mass: f64, gamma: f64) -> f64 {
    let n = op.dim();
    let nf = n as f64;
    let grid = op.grid();
    let weight = |r: f64| 1.0 / (1.0 + r.powf(nf + 2.0 * gamma));
    let inner = radial_integral(phi, n, grid.quad_order(), |r, v| v.abs() * weight(r));
    let sm = sphere_measure(n);
    let mut a = grid.r_max();
    let mut outer = 0.0;
    for _ in 0..14 {
        let b = 2.0 * a;
        outer += gauss(|r| phi_at(op, c_n, g, r).abs() * weight(r) * sm * r.powf(nf - 1.0), a, b, 8);
        a = b;
    }
    // |phi| ~ C_N |F|_1 log r and weight ~ r^{-N-2 gamma} beyond the last panel
    let tail = sm * c_n * f_mass * a.powf(-2.0 * gamma) * (2.0 * gamma * a.ln() + 1.0) / (4.0 * gamma * gamma);
    inner + outer + tail
}

/// Relative far-field check at the largest audit radius, truncation band included.
pub fn asymptotic_check(report: &PotentialReport, tol: f64) -> Check {
    let id = "potential-asymptotics";
    if report.f_mass == 0.0 {
        return Check::skip(id, Anchor::PotentialAsymptotics, "F(u) has zero mass");
    }
    let Some((r, dev)) = report.audit_radii.last().zip(report.relative_deviation.last()) else {
        return Check::skip(id, Anchor::PotentialAsymptotics, "no audit radius inside 0.8 R_max");
    };
    Check::upper(
        id,
        Anchor::PotentialAsymptotics,
        dev + report.truncation_band,
        tol,
        format!("r = {r}, deviation {dev:.3e}, truncation band {:.3e}", report.truncation_band),
    )
}

/// Finiteness records for the L_gamma norms and the log-weighted mass.
pub fn integrability_checks(report: &PotentialReport) -> Vec<Check> {
    let mut out: Vec<Check> = report
        .lgamma_norms
        .iter()
        .map(|l| Check::finite(&format!("lgamma-norm-{}", l.gamma), Anchor::PotentialIntegrability, l.value, format!("gamma = {}", l.gamma)))
        .collect();
    out.push(Check::finite("log-weighted-source", Anchor::LogEnergyFinite, report.log_f_integral, "int log(1+|x|) F(u)"));
    out
}

/// The planar potential of the indicator of the unit ball (C_2 = 1/(2 pi)).
pub fn uniform_ball_exact(r: f64) -> f64 {
    if r <= 1.0 {
        0.25 * (1.0 - r * r)
    } else {
        -0.5 * r.ln()
    }
}

/// Largest deviation of the computed planar ball potential from the closed
/// form at `radii`; the jump of the indicator sits at the grid node r = 1.
pub fn uniform_ball_deviation(grid: &Arc<RadialGrid>, radii: &[f64]) -> Result<f64> {
    if grid.node_index(1.0).is_none() {
        return Err(Error::GridMisaligned(1.0));
    }
    let op = ConvolutionOperator::new(grid.clone(), 2, KernelSpec::Log)?;
    let c_n = riesz_constant(2)?;
    let ball = |rho: f64| if rho <= 1.0 { 1.0 } else { 0.0 };
    Ok(radii
        .par_iter()
        .map(|&r| (c_n * op.potential_at_fn(ball, r) - uniform_ball_exact(r)).abs())
        .reduce(|| 0.0, f64::max))
}

/// Decay of u on a tail window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub nodes: usize,
    /// Least-squares slope of ln u against ln r; -inf for a vanishing tail.
    pub slope: f64,
    pub fitted_exponent: f64,
    /// a = s(2N+3)/(2(N-s)).
    pub expected_exponent: f64,
    pub super_polynomial: bool,
    /// sup over the window of u(r) r^a.
    pub weighted_sup: f64,
    /// u r^a at the window start.
    pub weighted_start: f64,
}

impl DecayFit {
    pub fn check(&self) -> Check {
        Check::upper(
            "decay-weighted-sup",
            Anchor::DecayEstimate,
            self.weighted_sup,
            10.0 * self.weighted_start,
            format!("window [{}, {}], fitted exponent {:.4}, a = {:.4}", self.window.0, self.window.1, self.fitted_exponent, self.expected_exponent),
        )
    }
}

/// Fit u ~ r^{-exponent} on `window` (at least 1.5 decades inside the grid).
pub fn decay_fit(u: &RadialField, n: usize, s: f64, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let grid = u.grid();
    if !(lo > 0.0 && hi <= grid.r_max() && hi / lo >= 10f64.powf(1.5)) {
        return Err(Error::InvalidParameter(format!("decay window [{lo}, {hi}] must span 1.5 decades inside (0, R_max]")));
    }
    let a = decay_exponent(n, s);
    let pts: Vec<(f64, f64)> = grid.nodes().iter().zip(u.values()).filter(|(r, _)| **r >= lo && **r <= hi).map(|(r, v)| (*r, *v)).collect();
    if pts.len() < 2 || pts.iter().any(|p| p.1 < 0.0) || !(pts[0].1 > 0.0) {
        return Err(Error::NonPositiveField);
    }
    let weighted_start = pts[0].1 * pts[0].0.powf(a);
    let weighted_sup = pts.iter().map(|(r, v)| v * r.powf(a)).fold(0.0, f64::max);
    let super_polynomial = pts.iter().any(|p| p.1 == 0.0);
    let slope = if super_polynomial {
        f64::NEG_INFINITY
    } else {
        let (r, v): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        log_log_slope(&r, &v, lo, hi).ok_or(Error::NonPositiveField)?.0
    };
    Ok(DecayFit {
        window,
        nodes: pts.len(),
        slope,
        fitted_exponent: -slope,
        expected_exponent: a,
        super_polynomial,
        weighted_sup,
        weighted_start,
    })
}

/// (G_mu * F(u))(x) against (C/mu)((|x|/2)^{-mu} - 1) + C_0 with C = |F|_1
/// and C_0 = sup F(u) int_{B_1} G_mu.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmuBound {
    pub mu: f64,
    pub radii: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub c_mass: f64,
    pub c0: f64,
}

/// Right-hand side of the G_mu convolution bound.
pub fn gmu_bound_rhs(mu: f64, x: f64, c_mass: f64, c0: f64) -> f64 {
    c_mass / mu * ((0.5 * x).powf(-mu) - 1.0) + c0
}

/// int_{B_1} G_mu = |S^{N-1}| / (N (N - mu)).
pub fn gmu_ball_integral(n: usize, mu: f64) -> f64 {
    let nf = n as f64;
    sphere_measure(n) / (nf * (nf - mu))
}

pub fn gmu_convolution_bound(model: &EnergyModel, u: &RadialField, mu: f64, radii: &[f64]) -> Result<GmuBound> {
    let kernel = EnergyModel::kernel_mu(mu)?;
    let n = model.params().dim;
    let g = u.with_values(model.primitive(u.values())?);
    let op = model.conv_op(kernel)?;
    let c_mass = radial_integral(&g, n, g.grid().quad_order(), |_, v| v.abs());
    let c0 = g.sup_abs() * gmu_ball_integral(n, mu);
    let lhs: Vec<f64> = radii.par_iter().map(|&r| op.potential_at(&g, r)).collect();
    let rhs = radii.iter().map(|&r| gmu_bound_rhs(mu, r, c_mass, c0)).collect();
    Ok(GmuBound { mu, radii: radii.to_vec(), lhs, rhs, c_mass, c0 })
}

impl GmuBound {
    /// Worst margin over the sample radii.
    pub fn check(&self) -> Check {
        let (mut k, mut worst) = (0, f64::INFINITY);
        for (i, (l, r)) in self.lhs.iter().zip(&self.rhs).enumerate() {
            if r - l < worst {
                worst = r - l;
                k = i;
            }
        }
        Check::upper(
            &format!("gmu-convolution-bound-mu-{}", self.mu),
            Anchor::ApproximatePotentialBound,
            self.lhs[k],
            self.rhs[k],
            format!("|x| = {}", self.radii[k]),
        )
    }
}

/// Five-point residual of -Delta phi = F on an annulus of the plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceResidual {
    pub samples: usize,
    /// Stencil widths as fractions of the local cell length.
    pub h_fractions: (f64, f64),
    pub residual_coarse: f64,
    pub residual_fine: f64,
    pub order: f64,
}

/// -Delta_h phi(x0) - F(x0) at x0 = (r0, 0); the four neighbours stay in the
/// cell of r0 so that phi is smooth on the stencil.
fn five_point(op: &ConvolutionOperator, c_n: f64, f: &(dyn Fn(f64) -> f64 + Sync), r0: f64, h: f64) -> f64 {
    let phi = |r: f64| c_n * op.potential_at_fn(f, r);
    let side = (r0 * r0 + h * h).sqrt();
    let lap = (phi(r0 + h) + phi(r0 - h) + 2.0 * phi(side) - 4.0 * phi(r0)) / (h * h);
    -lap - f(r0)
}

/// Max relative five-point residual over cells with midpoints in `annulus`,
/// at stencil widths cell/4 and cell/8, and the observed order.
pub fn laplace_residual_2d(grid: &Arc<RadialGrid>, n: usize, f: &(dyn Fn(f64) -> f64 + Sync), annulus: (f64, f64), max_samples: usize) -> Result<LaplaceResidual> {
    if n != 2 {
        return Err(Error::WrongDimension(n));
    }
    let op = ConvolutionOperator::new(grid.clone(), 2, KernelSpec::Log)?;
    let c_n = riesz_constant(2)?;
    let cells: Vec<usize> = (0..grid.segments())
        .filter(|&c| {
            let mid = grid.nodes()[c] + 0.5 * grid.h(c);
            mid >= annulus.0 && mid <= annulus.1
        })
        .collect();
    if cells.is_empty() || max_samples == 0 {
        return Err(Error::InvalidParameter(format!("no grid cell inside the annulus {annulus:?}")));
    }
    let stride = cells.len().div_ceil(max_samples);
    let picked: Vec<usize> = cells.iter().copied().step_by(stride).collect();
    let scale = picked.iter().map(|&c| f(grid.nodes()[c] + 0.5 * grid.h(c)).abs()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let (fc, ff) = (0.25, 0.125);
    let res: Vec<(f64, f64)> = picked
        .par_iter()
        .map(|&c| {
            let r0 = grid.nodes()[c] + 0.5 * grid.h(c);
            let h = grid.h(c);
            (five_point(&op, c_n, f, r0, fc * h).abs(), five_point(&op, c_n, f, r0, ff * h).abs())
        })
        .collect();
    let residual_coarse = res.iter().map(|x| x.0).fold(0.0, f64::max) / scale;
    let residual_fine = res.iter().map(|x| x.1).fold(0.0, f64::max) / scale;
    Ok(LaplaceResidual {
        samples: picked.len(),
        h_fractions: (fc, ff),
        residual_coarse,
        residual_fine,
        order: (residual_coarse / residual_fine).log2(),
    })
}

/// (K R^N)^{s/(N-s)} + |u|_{L^inf(B_2R(x0))}
///   + R^N (int_{B_2R(x0)^c} |u|^{N/s-1} |x0 - y|^{-2N} dy)^{s/(N-s)}
/// for the radial field u and a center at distance `x0_radius` from the origin.
pub fn holder_bound_rhs(u: &RadialField, k: f64, radius: f64, x0_radius: f64, n: usize, s: f64) -> Result<f64> {
    if !(radius > 0.0) || !(k >= 0.0) || !(x0_radius >= 0.0) {
        return Err(Error::InvalidParameter("need R > 0, K >= 0 and |x0| >= 0".into()));
    }
    let nf = n as f64;
    let expo = s / (nf - s);
    let p1 = nf / s - 1.0;
    let grid = u.grid();
    let (lo, hi) = ((x0_radius - 2.0 * radius).max(0.0), x0_radius + 2.0 * radius);
    let mut sup = u.eval(lo).abs().max(u.eval(hi).abs());
    for (r, v) in grid.nodes().iter().zip(u.values()) {
        if *r >= lo && *r <= hi {
            sup = sup.max(v.abs());
        }
    }
    let cut = 2.0 * radius;
    // angular integral of |x0 - y|^{-2N} over directions with |x0 - y| > 2R
    let angular = |rho: f64| -> f64 {
        let r = x0_radius;
        let weight = |th: f64| if n == 2 { 1.0 } else { th.sin().powi(n as i32 - 2) };
        let d2 = |th: f64| r * r + rho * rho - 2.0 * r * rho * th.cos();
        let start = if r * rho == 0.0 {
            if (r - rho).abs() > cut {
                0.0
            } else {
                return 0.0;
            }
        } else {
            let c = (r * r + rho * rho - cut * cut) / (2.0 * r * rho);
            if c >= 1.0 {
                0.0
            } else if c <= -1.0 {
                return 0.0;
            } else {
                c.acos()
            }
        };
        let (v, _) = adaptive(|th| d2(th).powf(-nf) * weight(th), start, std::f64::consts::PI, 1e-300, 1e-10);
        sphere_measure(n - 1) * v
    };
    let tail = radial_integral(u, n, grid.quad_order(), |rho, v| {
        if v == 0.0 {
            0.0
        } else {
            // radial_integral carries |S^{N-1}|; the angular factor replaces it
            v.abs().powf(p1) * angular(rho) / sphere_measure(n)
        }
    });
    let value = (k * radius.powf(nf)).powf(expo) + sup + radius.powf(nf) * tail.powf(expo);
    if !value.is_finite() {
        return Err(Error::NonIntegrable("Holder bound".into()));
    }
    Ok(value)
}

/// sup over nodes of |phi f(u) - V u^{N/s-1}|, the right-hand side scale of
/// the equation satisfied by u.
pub fn equation_rhs_sup(model: &EnergyModel, u: &RadialField, report: &PotentialReport) -> f64 {
    let nl = model.nonlinearity();
    let p1 = model.params().p() - 1.0;
    let v = model.potential();
    model
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .zip(report.phi.values())
        .map(|((r, x), phi)| (phi * nl.f(*x) - v.eval(*r) * x.abs().powf(p1) * x.signum()).abs())
        .fold(0.0, f64::max)
}
