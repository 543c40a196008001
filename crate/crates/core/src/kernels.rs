//! The logarithmic kernel, its power approximations G_mu, their elementary
//! inequalities, and radial convolution against angular-averaged kernels.

use crate::error::{Error, Result};
use crate::quadrature::{gauss, gauss_graded, gauss_legendre};
use crate::radial::{RadialField, RadialGrid};
use crate::special::{mt_phi, sphere_measure};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Convolution kernel as a function of the distance t = |x - y|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// log(1/t).
    Log,
    /// G_mu(t) = (t^{-mu} - 1) / mu.
    PowerApprox { mu: f64 },
    /// t^{-exponent}, used for Hardy-Littlewood-Sobolev ratios.
    Power { exponent: f64 },
}

impl KernelSpec {
    pub fn power_approx(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::InvalidParameter(format!("mu = {mu} must lie in (0,1]")));
        }
        Ok(KernelSpec::PowerApprox { mu })
    }

    /// Kernel value at distance t > 0 (no domain check).
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            KernelSpec::Log => -t.ln(),
            KernelSpec::PowerApprox { mu } => (-mu * t.ln()).exp_m1() / mu,
            KernelSpec::Power { exponent } => t.powf(-exponent),
        }
    }
}

/// Kernel value with the domain check at t = 0.
pub fn kernel_eval(k: &KernelSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::KernelDomain);
    }
    Ok(k.at(t))
}

/// Normalization of the polar-angle measure sin^{N-2} on [0, pi].
fn angular_mass(n: usize) -> f64 {
    let nf = n as f64;
    (0.5 * PI.ln() + ln_gamma(0.5 * (nf - 1.0)) - ln_gamma(0.5 * nf)).exp()
}

/// Average of k(|x - y|) over |x| = r, |y| = rho.
pub fn angular_average(k: &KernelSpec, n: usize, r: f64, rho: f64) -> f64 {
    let (big, small) = if r >= rho { (r, rho) } else { (rho, r) };
    if small == 0.0 {
        return k.at(big);
    }
    match (k, n) {
        (KernelSpec::Log, 2) => -big.ln(),
        (KernelSpec::Log, 3) => {
            let (a, b) = ((r + rho).powi(2), (r - rho).powi(2));
            let g = |w: f64| if w > 0.0 { w * w.ln() - w } else { 0.0 };
            -(g(a) - g(b)) / (8.0 * r * rho)
        }
        (KernelSpec::Power { exponent }, 3) => {
            let e = 2.0 - exponent;
            ((r + rho).powf(e) - (r - rho).abs().powf(e)) / (2.0 * r * rho * e)
        }
        (KernelSpec::PowerApprox { mu }, 3) => {
            let e = 2.0 - mu;
            let avg = ((r + rho).powf(e) - (r - rho).abs().powf(e)) / (2.0 * r * rho * e);
            (avg - 1.0) / mu
        }
        _ => numeric_average(k, n, r, rho),
    }
}

fn numeric_average(k: &KernelSpec, n: usize, r: f64, rho: f64) -> f64 {
    let delta = (r - rho).abs();
    let prod = r * rho;
    let dist = |th: f64| (delta * delta + 4.0 * prod * (0.5 * th).sin().powi(2)).sqrt();
    let weight = |th: f64| if n == 2 { 1.0 } else { th.sin().powi(n as i32 - 2) };
    let f = |th: f64| k.at(dist(th)) * weight(th);
    let theta_s = delta / prod.sqrt();
    let mut total = 0.0;
    if theta_s >= 0.5 {
        for q in 0..4 {
            let a = PI * q as f64 / 4.0;
            total += gauss(f, a, a + PI / 4.0, 10);
        }
    } else {
        // Geometric panels resolving the near-singularity at angle ~ theta_s.
        let first = theta_s.max(1e-14);
        total += gauss_graded(f, 0.0, first, 10, 3.0);
        let mut a = first;
        while a < PI {
            let b = (2.0 * a).min(PI);
            let b = if PI - b < 0.5 * (b - a) { PI } else { b };
            total += gauss(f, a, b, 10);
            a = b;
        }
    }
    total / angular_mass(n)
}

/// Kernel domination and power-majorant checks on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelInequalityCheck {
    pub mu: f64,
    pub nu: f64,
    /// min over grid points in (0,1] of G_mu(t) - log(1/t).
    pub min_margin: f64,
    pub witness_t: f64,
    pub lower_bound_holds: bool,
    /// Smallest C with G_mu(t) <= C t^{-nu} on the grid.
    pub c_nu: f64,
    pub c_nu_witness: f64,
    pub c_nu_finite: bool,
    pub nodes_checked: usize,
}

/// expm1(x) - x, accurate near 0.
fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = 0.0f64;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() && k < 60.0 {
            sum += term;
            k += 1.0;
            term *= x / k;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

pub fn check_kernel_inequalities(mu: f64, nu: f64, t_grid: &[f64]) -> Result<KernelInequalityCheck> {
    if !(mu > 0.0 && mu <= 1.0) || !(nu > mu) {
        return Err(Error::InvalidParameter(format!("need 0 < mu <= 1 < and nu > mu, got ({mu}, {nu})")));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("grid must lie in (0, inf)".into()));
    }
    let k = KernelSpec::PowerApprox { mu };
    let (mut min_margin, mut witness, mut count) = (f64::INFINITY, f64::NAN, 0usize);
    let (mut c, mut cw) = (0.0f64, f64::NAN);
    for &t in t_grid {
        if t <= 1.0 {
            // G_mu(t) - log(1/t) = (expm1(x) - x)/mu with x = mu log(1/t) >= 0.
            let x = -mu * t.ln();
            let margin = expm1_minus_x(x) / mu;
            count += 1;
            if margin < min_margin {
                min_margin = margin;
                witness = t;
            }
        }
        let ratio = k.at(t) * t.powf(nu);
        if ratio > c {
            c = ratio;
            cw = t;
        }
    }
    Ok(KernelInequalityCheck {
        mu,
        nu,
        min_margin,
        witness_t: witness,
        lower_bound_holds: min_margin >= 0.0,
        c_nu: c,
        c_nu_witness: cw,
        c_nu_finite: c.is_finite(),
        nodes_checked: count,
    })
}

/// sup over [0.1, 10] of |G_mu - log(1/.)| on a fine grid.
pub fn kernel_sup_error(mu: f64) -> f64 {
    let k = KernelSpec::PowerApprox { mu };
    (0..=4000)
        .map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 4000.0))
        .map(|t| (k.at(t) + t.ln()).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiPowerCheck {
    pub c_beta: f64,
    pub witness_t: f64,
    pub c_beta_refined: f64,
    pub refinement_change: f64,
    pub finite: bool,
}

fn phi_power_ratio_sup(alpha: f64, r_pow: f64, beta: f64, grid: &[f64], n: usize, s: f64) -> (f64, f64) {
    let g = n as f64 / (n as f64 - s);
    let mut best = (0.0f64, f64::NAN);
    for &t in grid {
        let x = alpha * t.powf(g);
        if alpha * beta * t.powf(g) > 700.0 {
            continue;
        }
        let lhs = mt_phi(n, s, x).unwrap().powf(r_pow);
        let rhs = mt_phi(n, s, alpha * beta * t.powf(g)).unwrap();
        if rhs > 0.0 {
            let q = lhs / rhs;
            if q > best.0 {
                best = (q, t);
            }
        }
    }
    best
}

/// Minimal C with Phi(alpha t^{N/(N-s)})^r <= C Phi(alpha beta t^{N/(N-s)}) on the grid,
/// and its change under grid doubling.
pub fn phi_power_bound_check(alpha: f64, r_pow: f64, beta: f64, t_grid: &[f64], n: usize, s: f64) -> Result<PhiPowerCheck> {
    if !(r_pow > 1.0) || !(beta > r_pow) {
        return Err(Error::InvalidParameter(format!("need r > 1 and beta > r, got r = {r_pow}, beta = {beta}")));
    }
    let (c, w) = phi_power_ratio_sup(alpha, r_pow, beta, t_grid, n, s);
    let mut fine = Vec::with_capacity(2 * t_grid.len());
    for win in t_grid.windows(2) {
        fine.push(win[0]);
        fine.push((win[0] * win[1]).sqrt());
    }
    fine.extend(t_grid.last());
    let (cf, _) = phi_power_ratio_sup(alpha, r_pow, beta, &fine, n, s);
    Ok(PhiPowerCheck {
        c_beta: c,
        witness_t: w,
        c_beta_refined: cf,
        refinement_change: (cf - c).abs() / c,
        finite: c.is_finite() && cf.is_finite(),
    })
}

/// Log-spaced grid of `count` points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Visit quadrature points of the product of cells `ca` x `cb`, covering
/// the kernel singularity on the diagonal. The callback receives
/// (xi, eta, weight) with r = x_ca + h_ca xi, rho = x_cb + h_cb eta and the
/// weight including both cell lengths (not the radial measure).
fn cell_pair_points(grid: &RadialGrid, ca: usize, cb: usize, mut visit: impl FnMut(f64, f64, f64)) {
    let x = grid.nodes();
    let (ha, hb) = (grid.h(ca), grid.h(cb));
    if ca == cb {
        // r > rho half, then mirrored: rho = r - d, d = (r - lo) v^2
        let gr = gauss_legendre(10);
        let gd = gauss_legendre(10);
        for (xr, wr) in gr.nodes.iter().zip(&gr.weights) {
            for (v, wv) in gd.nodes.iter().zip(&gd.weights) {
                let d_rel = xr * v * v;
                let w = wr * wv * ha * ha * xr * 2.0 * v;
                visit(*xr, xr - d_rel, w);
                visit(xr - d_rel, *xr, w);
            }
        }
    } else if ca.abs_diff(cb) == 1 {
        // Duffy split at the shared node.
        let (hi_c, lo_c, swap) = if ca > cb { (ca, cb, false) } else { (cb, ca, true) };
        let (hh, hl) = (grid.h(hi_c), grid.h(lo_c));
        let gr = gauss_legendre(10);
        let gs = gauss_legendre(8);
        for (v, wv) in gr.nodes.iter().zip(&gr.weights) {
            let rho = v * v;
            for (sg, ws) in gs.nodes.iter().zip(&gs.weights) {
                for tri in 0..2 {
                    let (a, b) = if tri == 0 { (hl * rho, hh * rho * sg) } else { (hl * rho * sg, hh * rho) };
                    let w = wv * ws * 2.0 * v * hh * hl * rho;
                    let (xi_hi, xi_lo) = (b / hh, 1.0 - a / hl);
                    if swap {
                        visit(xi_lo, xi_hi, w);
                    } else {
                        visit(xi_hi, xi_lo, w);
                    }
                }
            }
        }
    } else {
        let (hi_c, lo_c) = if ca > cb { (ca, cb) } else { (cb, ca) };
        let gap = x[hi_c] - x[lo_c + 1];
        let sep = gap / ha.max(hb);
        let m = if sep >= 20.0 {
            3
        } else if sep >= 6.0 {
            4
        } else if sep >= 2.0 {
            6
        } else {
            8
        };
        let g = gauss_legendre(m);
        for (xa, wa) in g.nodes.iter().zip(&g.weights) {
            for (xb, wb) in g.nodes.iter().zip(&g.weights) {
                visit(*xa, *xb, wa * wb * ha * hb);
            }
        }
    }
}

/// Quadrature of int A(r, rho) g(rho) dm(rho) over one cell, for an arbitrary r.
fn cell_potential(k: &KernelSpec, n: usize, grid: &RadialGrid, cell: usize, r: f64, mut acc: impl FnMut(f64, f64)) {
    let (a, b) = (grid.nodes()[cell], grid.nodes()[cell + 1]);
    let h = b - a;
    let sm = sphere_measure(n);
    let mut push = |rho: f64, w: f64| {
        let xi = ((rho - a) / h).clamp(0.0, 1.0);
        acc(xi, w * angular_average(k, n, r, rho) * sm * rho.powi(n as i32 - 1));
    };
    let rule = gauss_legendre(10);
    let graded = |lo: f64, hi: f64, toward_lo: bool, push: &mut dyn FnMut(f64, f64)| {
        let len = hi - lo;
        for (v, wv) in rule.nodes.iter().zip(&rule.weights) {
            let off = len * v * v;
            let rho = if toward_lo { lo + off } else { hi - off };
            push(rho, wv * 2.0 * v * len);
        }
    };
    if r > a && r < b {
        graded(a, r, false, &mut push);
        graded(r, b, true, &mut push);
        return;
    }
    if r == a || r == b {
        graded(a, b, r == a, &mut push);
        return;
    }
    let dist = if r < a { a - r } else { r - b };
    if dist >= h {
        let m = if dist >= 6.0 * h { 4 } else { 8 };
        let g = gauss_legendre(m);
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            push(a + h * x, w * h);
        }
        return;
    }
    // Geometric subdivision away from the near end.
    let near_lo = r < a;
    let mut lo = 0.0;
    let mut len = dist;
    while lo < h {
        let hi = (lo + len).min(h);
        let hi = if h - hi < 0.5 * (hi - lo) { h } else { hi };
        let g = gauss_legendre(8);
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            let off = lo + (hi - lo) * x;
            let rho = if near_lo { a + off } else { b - off };
            push(rho, w * (hi - lo));
        }
        lo = hi;
        len *= 2.0;
    }
}

/// Radial convolution machinery for one (grid, dimension, kernel).
#[derive(Debug)]
pub struct ConvolutionOperator {
    grid: Arc<RadialGrid>,
    dim: usize,
    kernel: KernelSpec,
    galerkin: OnceLock<Vec<f64>>,
    nodal: OnceLock<Vec<f64>>,
}

impl ConvolutionOperator {
    pub fn new(grid: Arc<RadialGrid>, dim: usize, kernel: KernelSpec) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(ConvolutionOperator { grid, dim, kernel, galerkin: OnceLock::new(), nodal: OnceLock::new() })
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// S_ij = int int A(r, rho) phi_i(r) phi_j(rho) dm(r) dm(rho).
    pub fn galerkin(&self) -> &[f64] {
        self.galerkin.get_or_init(|| self.assemble_galerkin())
    }

    fn assemble_galerkin(&self) -> Vec<f64> {
        use rayon::prelude::*;
        let grid = &*self.grid;
        let m = grid.segments();
        let nn = grid.len();
        let sm = sphere_measure(self.dim);
        let ni = self.dim as i32;
        let x = grid.nodes();
        let blocks: Vec<Vec<(usize, usize, [[f64; 2]; 2])>> = (0..m)
            .into_par_iter()
            .map(|ca| {
                let mut out = Vec::with_capacity(ca + 1);
                for cb in 0..=ca {
                    let mut local = [[0.0; 2]; 2];
                    cell_pair_points(grid, ca, cb, |xi, eta, w| {
                        let r = x[ca] + grid.h(ca) * xi;
                        let rho = x[cb] + grid.h(cb) * eta;
                        let val = w * angular_average(&self.kernel, self.dim, r, rho) * sm * sm * (r * rho).powi(ni - 1);
                        let pa = [1.0 - xi, xi];
                        let pb = [1.0 - eta, eta];
                        for a in 0..2 {
                            for b in 0..2 {
                                local[a][b] += val * pa[a] * pb[b];
                            }
                        }
                    });
                    out.push((ca, cb, local));
                }
                out
            })
            .collect();
        let mut s = vec![0.0; nn * nn];
        for block in &blocks {
            for &(ca, cb, local) in block {
                for a in 0..2 {
                    for b in 0..2 {
                        let (i, j) = (ca + a, cb + b);
                        s[i * nn + j] += local[a][b];
                        if ca != cb {
                            s[j * nn + i] += local[a][b];
                        }
                    }
                }
            }
        }
        s
    }

    /// B_ij = int A(r_i, rho) phi_j(rho) dm(rho).
    pub fn nodal(&self) -> &[f64] {
        self.nodal.get_or_init(|| {
            use rayon::prelude::*;
            let nn = self.grid.len();
            let rows: Vec<Vec<f64>> = self.grid.nodes().par_iter().map(|&r| self.potential_row(r)).collect();
            let mut b = Vec::with_capacity(nn * nn);
            for row in rows {
                b.extend(row);
            }
            b
        })
    }

    /// Row of weights w_j with h(r) = sum_j w_j g_j.
    pub fn potential_row(&self, r: f64) -> Vec<f64> {
        let grid = &*self.grid;
        let mut row = vec![0.0; grid.len()];
        for cell in 0..grid.segments() {
            cell_potential(&self.kernel, self.dim, grid, cell, r, |xi, w| {
                row[cell] += w * (1.0 - xi);
                row[cell + 1] += w * xi;
            });
        }
        row
    }

    /// int int k(|x-y|) g(x) g(y) for the nodal interpolant of g.
    pub fn pairing(&self, g: &[f64]) -> f64 {
        let s = self.galerkin();
        let n = g.len();
        let mut total = 0.0;
        for i in 0..n {
            if g[i] == 0.0 {
                continue;
            }
            let row = &s[i * n..(i + 1) * n];
            total += g[i] * row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    /// S g (the gradient of the pairing with respect to g is 2 S g).
    pub fn apply_galerkin(&self, g: &[f64]) -> Vec<f64> {
        let s = self.galerkin();
        let n = g.len();
        (0..n).map(|i| s[i * n..(i + 1) * n].iter().zip(g).map(|(a, b)| a * b).sum()).collect()
    }

    /// Potential at the grid nodes.
    pub fn potential(&self, g: &RadialField) -> RadialField {
        let b = self.nodal();
        let n = g.values().len();
        let vals = (0..n).map(|i| b[i * n..(i + 1) * n].iter().zip(g.values()).map(|(a, v)| a * v).sum()).collect();
        g.with_values(vals)
    }

    /// Potential at an arbitrary radius (exact for the zero extension of g).
    pub fn potential_at(&self, g: &RadialField, r: f64) -> f64 {
        self.potential_row(r).iter().zip(g.values()).map(|(a, b)| a * b).sum()
    }

    /// Potential at radius r of a source given pointwise on [0, R_max]; jumps
    /// of `f` are resolved exactly when they sit at grid nodes.
    pub fn potential_at_fn(&self, f: impl Fn(f64) -> f64, r: f64) -> f64 {
        let grid = &*self.grid;
        let mut total = 0.0;
        for cell in 0..grid.segments() {
            let (a, h) = (grid.nodes()[cell], grid.h(cell));
            cell_potential(&self.kernel, self.dim, grid, cell, r, |xi, w| total += w * f(a + h * xi));
        }
        total
    }
}

/// h(r) = int A_k(r, rho) g(rho) N omega_N rho^{N-1} d rho at the grid nodes.
pub fn radial_convolution(k: &KernelSpec, g: &RadialField, n: usize) -> Result<RadialField> {
    if let Some(v) = g.values().iter().find(|v| !v.is_finite()) {
        return Err(Error::NonIntegrable(format!("non-finite input value {v}")));
    }
    Ok(ConvolutionOperator::new(g.grid().clone(), n, *k)?.potential(g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HlsRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Empirical Hardy-Littlewood-Sobolev constant int (|.|^{-mu} * f) h / (|f|_q |h|_r).
pub fn hls_ratio(f: &RadialField, h: &RadialField, mu_exp: f64, q: f64, r: f64, n: usize) -> Result<HlsRatio> {
    let rel = 1.0 / q + mu_exp / n as f64 + 1.0 / r;
    if (rel - 2.0).abs() > 1e-12 {
        return Err(Error::ExponentMismatch(rel));
    }
    if !(q > 1.0 && r > 1.0) {
        return Err(Error::InvalidParameter(format!("need q, r > 1, got ({q}, {r})")));
    }
    use crate::radial::{lp_norm, Potential};
    let one = Potential::Constant { value: 1.0 };
    let nf = lp_norm(f, q, &one, n)?;
    let nh = lp_norm(h, r, &one, n)?;
    if nf == 0.0 || nh == 0.0 {
        return Ok(HlsRatio { lhs: 0.0, rhs: nf * nh, ratio: 0.0 });
    }
    let op = ConvolutionOperator::new(f.grid().clone(), n, KernelSpec::Power { exponent: mu_exp })?;
    let sf = op.apply_galerkin(f.values());
    let lhs: f64 = sf.iter().zip(h.values()).map(|(a, b)| a * b).sum();
    Ok(HlsRatio { lhs, rhs: nf * nh, ratio: lhs / (nf * nh) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_values() {
        for mu in [0.1, 0.5, 1.0] {
            assert_eq!(KernelSpec::PowerApprox { mu }.at(1.0), 0.0);
        }
        assert!((KernelSpec::PowerApprox { mu: 1.0 }.at(0.5) - 1.0).abs() < 1e-15);
        assert!(2f64.ln() <= 1.0);
        let g = KernelSpec::PowerApprox { mu: 0.001 }.at(2.0);
        assert!((g - (0.5f64).ln()).abs() < 5e-4);
        assert_eq!(kernel_eval(&KernelSpec::Log, 0.0), Err(Error::KernelDomain));
    }

    #[test]
    fn inequality_at_unit_distance_is_equality() {
        let c = check_kernel_inequalities(1.0, 1.5, &[1.0]).unwrap();
        assert_eq!(c.min_margin, 0.0);
    }

    #[test]
    fn numeric_average_matches_closed_forms() {
        for (r, rho) in [(0.3, 0.7), (1.0, 1.0 + 1e-6), (2.0, 0.01), (0.5, 0.5)] {
            let exact = -(r as f64).max(rho).ln();
            let num = numeric_average(&KernelSpec::Log, 2, r, rho);
            assert!((num - exact).abs() < 1e-9, "{r} {rho} {num} {exact}");
            for k in [KernelSpec::Log, KernelSpec::PowerApprox { mu: 0.5 }, KernelSpec::Power { exponent: 1.0 }] {
                let closed = angular_average(&k, 3, r, rho);
                let num = numeric_average(&k, 3, r, rho);
                assert!((closed - num).abs() < 1e-8 * closed.abs().max(1.0), "{k:?} {r} {rho}: {closed} vs {num}");
            }
        }
    }

    #[test]
    fn planar_log_potential_of_uniform_ball() {
        let g = Arc::new(RadialGrid::uniform_geometric(64, 6.0, 1.1, 8).unwrap());
        let ind = RadialField::from_fn(g.clone(), |r| if r <= 1.0 { 1.0 } else { 0.0 });
        let op = ConvolutionOperator::new(g, 2, KernelSpec::Log).unwrap();
        // mass of the interpolant
        let mass = crate::radial::radial_integral(&ind, 2, 8, |_, v| v);
        for r in [2.0, 3.5, 5.0, 40.0] {
            let h = op.potential_at(&ind, r);
            assert!((h + mass * r.ln()).abs() < 1e-10 * mass * r.ln(), "{r}: {h}");
        }
    }

    #[test]
    fn galerkin_is_symmetric_and_consistent() {
        let g = Arc::new(RadialGrid::uniform_geometric(16, 3.0, 1.2, 8).unwrap());
        let n = g.len();
        let op = ConvolutionOperator::new(g.clone(), 2, KernelSpec::PowerApprox { mu: 0.5 }).unwrap();
        let s = op.galerkin();
        for i in 0..n {
            for j in 0..n {
                assert!((s[i * n + j] - s[j * n + i]).abs() <= 1e-14 * s[i * n + i].abs().max(1.0));
            }
        }
        // pairing vs nodal potential integrated against g
        let f = RadialField::from_fn(g.clone(), |r| (-(r * r)).exp() * (3.0 - r));
        let pot = op.potential(&f);
        let alt = crate::radial::radial_integral(&f.with_values(pot.values().iter().zip(f.values()).map(|(a, b)| a * b).collect()), 2, 8, |_, v| v);
        let direct = op.pairing(f.values());
        assert!((alt - direct).abs() < 2e-2 * direct.abs(), "{alt} {direct}");
    }

    #[test]
    fn convolution_is_linear() {
        let g = Arc::new(RadialGrid::uniform_geometric(16, 3.0, 1.2, 8).unwrap());
        let op = ConvolutionOperator::new(g.clone(), 3, KernelSpec::PowerApprox { mu: 0.25 }).unwrap();
        let a = RadialField::from_fn(g.clone(), |r| (1.0 - r / 3.0).max(0.0));
        let b = RadialField::from_fn(g.clone(), |r| (-(r)).exp() * (1.0 - r / 3.0));
        let sum = a.with_values(a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect());
        let (ha, hb, hs) = (op.potential(&a), op.potential(&b), op.potential(&sum));
        for i in 0..g.len() {
            let lin = ha.values()[i] + hb.values()[i];
            assert!((hs.values()[i] - lin).abs() <= 1e-10 * lin.abs().max(1.0));
        }
    }

    #[test]
    fn hls_exponent_mismatch() {
        let g = Arc::new(RadialGrid::uniform_geometric(8, 2.0, 1.2, 8).unwrap());
        let f = RadialField::from_fn(g, |r| (1.0 - r / 2.0).max(0.0));
        assert!(matches!(hls_ratio(&f, &f, 1.0, 2.0, 2.0, 2), Err(Error::ExponentMismatch(_))));
        let zero = f.scaled(0.0);
        assert_eq!(hls_ratio(&zero, &f, 1.0, 4.0 / 3.0, 4.0 / 3.0, 2).unwrap().ratio, 0.0);
    }
}
