//! The approximating energies J_mu, the logarithmic energy J and their
//! derivatives on radial piecewise-linear fields, plus the transform checks
//! used in the boundedness arguments for critical sequences.
//!
//! Discretization: the seminorm and the V-term are integrated exactly as in
//! the radial core; the convolution term pairs the nodal interpolant of F(u)
//! with itself through the Galerkin matrix of the kernel. Gradients are exact
//! derivatives of these discrete sums.

use crate::constants::{riesz_constant, ProblemParams};
use crate::error::{Error, Result};
use crate::kernels::{ConvolutionOperator, KernelSpec};
use crate::nonlinearity::NonlinearEval;
use crate::quadrature::gauss_legendre;
use crate::radial::{log_log_slope, power_order, Potential, RadialField, RadialGrid};
use crate::report::{Anchor, Check};
use crate::seminorm::SeminormOperator;
use crate::special::{sphere_measure, strict_factorial, strict_floor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, Mutex, OnceLock};

/// Largest exponent argument alpha u^gamma accepted before F(u) overflows.
pub const EXPONENT_GUARD: f64 = 700.0;

/// The three terms of an energy and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub seminorm_term: f64,
    pub v_term: f64,
    pub conv_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn assemble(p: f64, c_n: f64, seminorm_term: f64, v_term: f64, conv_term: f64) -> Self {
        let total = (seminorm_term + v_term) / p - 0.5 * c_n * conv_term;
        EnergyBreakdown { seminorm_term, v_term, conv_term, total }
    }

    /// ||u||_V^{N/s}.
    pub fn norm_pow(&self) -> f64 {
        self.seminorm_term + self.v_term
    }
}

/// Energy with the logarithmic kernel and its finiteness record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEnergy {
    pub breakdown: EnergyBreakdown,
    /// |int (log(1/|.|) * F(u)) F(u)|.
    pub conv_abs: f64,
    /// Fitted decay exponent of F(u) on the grid tail; None if F(u) vanishes there.
    pub f_tail_decay: Option<f64>,
}

/// max_i |J'(u)[phi_i]| / ||phi_i||_V and the node attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub node: usize,
}

/// Quadrature point of the V-term: w |(1-a) u_i + a u_{i+1}|^p.
#[derive(Debug, Clone, Copy)]
struct VPoint {
    i: usize,
    a: f64,
    w: f64,
}

/// Everything needed to evaluate J_mu, J and their derivatives on one grid.
pub struct EnergyModel {
    params: ProblemParams,
    grid: Arc<RadialGrid>,
    nl: Arc<dyn NonlinearEval>,
    potential: Potential,
    seminorm: SeminormOperator,
    vpoints: Vec<VPoint>,
    c_n: f64,
    convs: Mutex<Vec<(KernelSpec, Arc<ConvolutionOperator>)>>,
    hat_norms: OnceLock<Vec<f64>>,
}

impl std::fmt::Debug for EnergyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergyModel")
            .field("params", &self.params)
            .field("nodes", &self.grid.len())
            .field("potential", &self.potential)
            .finish()
    }
}

impl EnergyModel {
    pub fn new(grid: Arc<RadialGrid>, params: ProblemParams, nl: Arc<dyn NonlinearEval>, potential: Potential) -> Result<Self> {
        params.validate()?;
        let (lo, hi) = potential.bounds();
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::InvalidParameter(format!("potential bounds ({lo}, {hi}) must satisfy 0 < lower <= upper")));
        }
        let n = params.dim;
        let p = params.p();
        let seminorm = SeminormOperator::new(grid.clone(), n, params.s)?;
        let rule = gauss_legendre(power_order(&grid, p, n));
        let sm = sphere_measure(n);
        let mut vpoints = Vec::with_capacity(grid.segments() * rule.nodes.len());
        for i in 0..grid.segments() {
            let (a, h) = (grid.nodes()[i], grid.h(i));
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let r = a + h * x;
                vpoints.push(VPoint { i, a: *x, w: sm * w * h * potential.eval(r) * r.powi(n as i32 - 1) });
            }
        }
        Ok(EnergyModel {
            c_n: riesz_constant(n)?,
            params,
            grid,
            nl,
            potential,
            seminorm,
            vpoints,
            convs: Mutex::new(Vec::new()),
            hat_norms: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn nonlinearity(&self) -> &Arc<dyn NonlinearEval> {
        &self.nl
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn seminorm(&self) -> &SeminormOperator {
        &self.seminorm
    }

    pub fn riesz(&self) -> f64 {
        self.c_n
    }

    /// Convolution operator for `kernel`, assembled once and cached.
    pub fn conv_op(&self, kernel: KernelSpec) -> Result<Arc<ConvolutionOperator>> {
        let mut cache = self.convs.lock().unwrap();
        if let Some((_, op)) = cache.iter().find(|(k, _)| *k == kernel) {
            return Ok(op.clone());
        }
        let op = Arc::new(ConvolutionOperator::new(self.grid.clone(), self.params.dim, kernel)?);
        op.galerkin();
        cache.push((kernel, op.clone()));
        Ok(op)
    }

    /// Kernel G_mu for mu in (0,1].
    pub fn kernel_mu(mu: f64) -> Result<KernelSpec> {
        KernelSpec::power_approx(mu)
    }

    fn guard(&self, u: &[f64]) -> Result<()> {
        let top = u.iter().fold(0.0f64, |m, v| m.max(*v));
        let arg = self.nl.exponent_arg(top);
        if arg > EXPONENT_GUARD || !top.is_finite() {
            return Err(Error::Overflow(arg));
        }
        Ok(())
    }

    /// Nodal values of F(u).
    pub fn primitive(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.guard(u)?;
        let g: Vec<f64> = u.iter().map(|v| self.nl.big_f(*v)).collect();
        if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
            return Err(Error::Overflow(*bad));
        }
        Ok(g)
    }

    /// int V |u|^{N/s}.
    pub fn v_term(&self, u: &[f64]) -> f64 {
        let p = self.params.p();
        self.vpoints.iter().map(|q| q.w * ((1.0 - q.a) * u[q.i] + q.a * u[q.i + 1]).abs().powf(p)).sum()
    }

    fn v_gradient(&self, u: &[f64]) -> Vec<f64> {
        let p = self.params.p();
        let mut g = vec![0.0; u.len()];
        for q in &self.vpoints {
            let v = (1.0 - q.a) * u[q.i] + q.a * u[q.i + 1];
            let c = q.w * p * v.abs().powf(p - 2.0) * v;
            g[q.i] += c * (1.0 - q.a);
            g[q.i + 1] += c * q.a;
        }
        g
    }

    /// ||u||_V^{N/s} = [u]^{N/s} + int V |u|^{N/s}.
    pub fn norm_pow(&self, u: &[f64]) -> Result<f64> {
        Ok(self.seminorm.value_nodal(u)? + self.v_term(u))
    }

    pub fn energy(&self, u: &[f64], kernel: KernelSpec) -> Result<EnergyBreakdown> {
        let g = self.primitive(u)?;
        let sem = self.seminorm.value_nodal(u)?;
        let vt = self.v_term(u);
        let conv = if g.iter().all(|x| *x == 0.0) { 0.0 } else { self.conv_op(kernel)?.pairing(&g) };
        Ok(EnergyBreakdown::assemble(self.params.p(), self.c_n, sem, vt, conv))
    }

    /// J'(u)[phi_i] for every nodal hat function phi_i.
    pub fn gradient(&self, u: &[f64], kernel: KernelSpec) -> Result<Vec<f64>> {
        let g = self.primitive(u)?;
        let p = self.params.p();
        let mut grad = self.seminorm.gradient_nodal(u)?;
        for (a, b) in grad.iter_mut().zip(self.v_gradient(u)) {
            *a = (*a + b) / p;
        }
        if g.iter().any(|x| *x != 0.0) {
            let sg = self.conv_op(kernel)?.apply_galerkin(&g);
            for (i, a) in grad.iter_mut().enumerate() {
                *a -= self.c_n * sg[i] * self.nl.f(u[i]);
            }
        }
        Ok(grad)
    }

    /// ||phi_i||_V for every hat function (the last node is pinned, its
    /// entry is left infinite).
    pub fn hat_norms(&self) -> &[f64] {
        self.hat_norms.get_or_init(|| {
            let n = self.grid.len();
            let p = self.params.p();
            (0..n)
                .into_par_iter()
                .map(|i| {
                    if i + 1 == n {
                        return f64::INFINITY;
                    }
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    (self.seminorm.value_nodal(&e).unwrap() + self.v_term(&e)).powf(1.0 / p)
                })
                .collect()
        })
    }

    /// Discrete dual-norm surrogate of J'(u).
    pub fn weak_residual(&self, u: &[f64], kernel: KernelSpec) -> Result<Residual> {
        let g = self.gradient(u, kernel)?;
        Ok(self.residual_from_gradient(&g))
    }

    pub fn residual_from_gradient(&self, g: &[f64]) -> Residual {
        let norms = self.hat_norms();
        let mut best = Residual { value: 0.0, node: 0 };
        for (i, (gi, ni)) in g.iter().zip(norms).enumerate() {
            let v = gi.abs() / ni;
            if v > best.value {
                best = Residual { value: v, node: i };
            }
        }
        best
    }

    /// Hessian of (1/p)([u]^p + int V|u|^p) plus `shift` times a fixed
    /// quadratic form, dense row-major (a Sobolev-type metric).
    pub fn metric(&self, u: &[f64], shift: f64) -> Result<Vec<f64>> {
        let n = u.len();
        let p = self.params.p();
        let mut h = self.seminorm.hessian_nodal(u, shift)?;
        for q in &self.vpoints {
            let v = (1.0 - q.a) * u[q.i] + q.a * u[q.i + 1];
            let c = q.w * (p * (p - 1.0) * v.abs().powf(p - 2.0) + 2.0 * shift);
            let (c0, c1) = (1.0 - q.a, q.a);
            h[q.i * n + q.i] += c * c0 * c0;
            h[q.i * n + q.i + 1] += c * c0 * c1;
            h[(q.i + 1) * n + q.i] += c * c0 * c1;
            h[(q.i + 1) * n + q.i + 1] += c * c1 * c1;
        }
        for x in h.iter_mut() {
            *x /= p;
        }
        Ok(h)
    }

    /// Energy with the logarithmic kernel; F(u) must decay faster than r^{-N}
    /// on the grid tail.
    pub fn energy_log(&self, u: &[f64]) -> Result<LogEnergy> {
        let g = self.primitive(u)?;
        let decay = self.f_tail_decay(&g)?;
        let b = self.energy(u, KernelSpec::Log)?;
        Ok(LogEnergy { breakdown: b, conv_abs: b.conv_term.abs(), f_tail_decay: decay })
    }

    /// Fitted tail decay of nodal values on [1, 0.8 R_max].
    pub fn f_tail_decay(&self, g: &[f64]) -> Result<Option<f64>> {
        let r_max = self.grid.r_max();
        let Some((slope, _)) = log_log_slope(self.grid.nodes(), g, 1.0, 0.8 * r_max) else {
            return Ok(None);
        };
        let decay = -slope;
        if decay <= self.params.dim as f64 {
            return Err(Error::TailDivergence { decay, n: self.params.dim });
        }
        Ok(Some(decay))
    }

    /// v = F(u)/f(u) on u > 0 and (s - tau) u elsewhere; checks
    /// |v| <= (s - tau)|u| nodewise and the mixed pairing bound.
    pub fn ff_ratio_check(&self, u: &[f64]) -> Result<Vec<Check>> {
        let k = self.params.s - self.params.tau;
        let mut guarded = 0usize;
        let v: Vec<f64> = u
            .iter()
            .map(|&t| {
                if t > 0.0 {
                    if self.nl.f(t) < 1e-300 {
                        guarded += 1;
                    }
                    let r = self.nl.f_ratio(t);
                    if r.is_finite() {
                        r
                    } else {
                        0.0
                    }
                } else {
                    k * t
                }
            })
            .collect();
        let (mut worst, mut worst_i) = (f64::INFINITY, 0);
        for (i, (vi, ui)) in v.iter().zip(u).enumerate() {
            let m = k * ui.abs() - vi.abs();
            if m < worst {
                worst = m;
                worst_i = i;
            }
        }
        let nodewise = Check::lower(
            "transform-nodewise",
            Anchor::PrimitiveTransform,
            worst,
            0.0,
            format!("min (s-tau)|u| - |v| at r = {:.4e}; {guarded} nodes with f(u) < 1e-300", self.grid.nodes()[worst_i]),
        );
        let p = self.params.p();
        let pairing = dot(&self.seminorm.gradient_nodal(u)?, &v) / p;
        let rhs = k * self.seminorm.value_nodal(u)?;
        let mixed = Check::upper("transform-mixed-pairing", Anchor::PrimitiveTransform, pairing, rhs, "mixed pairing vs (s-tau)[u]^(N/s)");
        Ok(vec![nodewise, mixed])
    }

    /// Norm of H_N(u) = u - (N/2s) F(u)/f(u) against the reconstructed bound
    /// 2s (N/s)! ||W|| / ((N/s - floor(N/s)) (tau - (1-2/N)s)) + (N/s) c, with
    /// ||W|| = (N/2s) sup (F f'/f^2 - 1)^+ from the nonlinearity audit.
    pub fn h_transform_check(&self, u: &[f64], c_level: f64, ratio_sup: f64) -> Result<Vec<Check>> {
        let bound = gamma_bound(&self.params, ratio_sup, c_level);
        let nf = self.params.dim as f64;
        let s = self.params.s;
        let v: Vec<f64> = u
            .iter()
            .map(|&t| if t > 0.0 { t - nf / (2.0 * s) * self.nl.f_ratio(t) } else { t })
            .collect();
        let norm = self.norm_pow(&v)?;
        let w = w_sup(&self.params, ratio_sup);
        Ok(vec![
            Check::upper(
                "aux-transform-norm",
                Anchor::AuxiliaryTransform,
                norm,
                bound,
                format!("||H_N(u)||^(N/s) vs reconstructed bound, ||W|| = {w:.4e}, c = {c_level:.6e}"),
            ),
            Check::strict_upper("aux-transform-bound-below-one", Anchor::AuxiliaryTransform, bound, 1.0, "reconstructed gamma bound < 1"),
        ])
    }
}

/// ||W||_inf = (N/2s) sup (F f'/f^2 - 1)^+.
pub fn w_sup(params: &ProblemParams, ratio_sup: f64) -> f64 {
    params.dim as f64 / (2.0 * params.s) * (ratio_sup - 1.0).max(0.0)
}

/// Reconstructed gamma_N(s,tau) bound for a level c.
pub fn gamma_bound(params: &ProblemParams, ratio_sup: f64, c_level: f64) -> f64 {
    let p = params.p();
    let frac = p - strict_floor(p);
    let gap = params.tau - params.tau_lower();
    2.0 * params.s * strict_factorial(p) * w_sup(params, ratio_sup) / (frac * gap) + p * c_level
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// J_mu(u).
pub fn energy_mu(model: &EnergyModel, u: &RadialField, mu: f64) -> Result<EnergyBreakdown> {
    model.energy(u.values(), EnergyModel::kernel_mu(mu)?)
}

/// J'_mu(u)[phi_i] for all nodes.
pub fn gateaux_mu(model: &EnergyModel, u: &RadialField, mu: f64) -> Result<Vec<f64>> {
    model.gradient(u.values(), EnergyModel::kernel_mu(mu)?)
}

/// Discrete dual-norm surrogate of J'_mu(u).
pub fn weak_residual(model: &EnergyModel, u: &RadialField, mu: f64) -> Result<Residual> {
    model.weak_residual(u.values(), EnergyModel::kernel_mu(mu)?)
}

/// J(u) with the logarithmic kernel.
pub fn energy_log(model: &EnergyModel, u: &RadialField) -> Result<LogEnergy> {
    model.energy_log(u.values())
}

/// Gateaux derivative against central differences at sampled nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub worst_node: usize,
    pub nodes: usize,
}

/// Central differences with step 1e-5 ||u||_V at every `stride`-th node where
/// the gradient is not negligible (above 1e-6 of its sup).
pub fn gradient_fd_check(model: &EnergyModel, u: &[f64], kernel: KernelSpec, stride: usize) -> Result<GradientCheck> {
    let g = model.gradient(u, kernel)?;
    let gmax = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let eps = 1e-5 * model.norm_pow(u)?.powf(1.0 / model.params().p()).max(1e-12);
    let picked: Vec<usize> = (0..u.len() - 1).step_by(stride.max(1)).filter(|&i| g[i].abs() > 1e-6 * gmax).collect();
    let errs: Vec<(usize, f64)> = picked
        .par_iter()
        .map(|&i| {
            let (mut up, mut dn) = (u.to_vec(), u.to_vec());
            up[i] += eps;
            dn[i] -= eps;
            let fd = (model.energy(&up, kernel)?.total - model.energy(&dn, kernel)?.total) / (2.0 * eps);
            Ok((i, (fd - g[i]).abs() / g[i].abs()))
        })
        .collect::<Result<_>>()?;
    let (worst_node, max_rel_error) = errs.iter().copied().fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(GradientCheck { max_rel_error, worst_node, nodes: errs.len() })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::constants::beta_0;
    use crate::nonlinearity::{calibrate_amplitude, make_model_nonlinearity, Nonlinearity};
    use crate::radial::plateau_test_function;

    pub(crate) fn calibrated() -> Nonlinearity {
        let p = ProblemParams::new(2, 0.5, 0.25).unwrap();
        let nl = make_model_nonlinearity(2, 0.5, 1.0, 1.0, 10.0).unwrap();
        nl.with_lambda(calibrate_amplitude(&nl, &p, 1.01 * beta_0(2, 0.5, 1.0).unwrap()).unwrap())
    }

    pub(crate) fn coarse_model() -> EnergyModel {
        let grid = Arc::new(RadialGrid::uniform_geometric(48, 10.0, 1.2, 8).unwrap());
        let p = ProblemParams::new(2, 0.5, 0.25).unwrap();
        EnergyModel::new(grid, p, Arc::new(calibrated()), Potential::default()).unwrap()
    }

    fn bump(model: &EnergyModel, amp: f64) -> Vec<f64> {
        model.grid().nodes().iter().map(|r| if *r < 0.75 { amp * (1.0 - (r / 0.75).powi(2)).powi(2) } else { 0.0 }).collect()
    }

    #[test]
    fn zero_field() {
        let m = coarse_model();
        let z = vec![0.0; m.grid().len()];
        let b = m.energy(&z, KernelSpec::Log).unwrap();
        assert_eq!((b.seminorm_term, b.v_term, b.conv_term, b.total), (0.0, 0.0, 0.0, 0.0));
        assert!(m.gradient(&z, KernelSpec::power_approx(1.0).unwrap()).unwrap().iter().all(|x| *x == 0.0));
        assert_eq!(m.weak_residual(&z, KernelSpec::Log).unwrap().value, 0.0);
    }

    #[test]
    fn breakdown_consistency() {
        let m = coarse_model();
        let b = m.energy(&bump(&m, 0.4), KernelSpec::power_approx(0.5).unwrap()).unwrap();
        let again = (b.seminorm_term + b.v_term) / 4.0 - 0.5 * m.riesz() * b.conv_term;
        assert!((b.total - again).abs() <= 1e-12 * b.total.abs().max(1e-300));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = coarse_model();
        for mu in [1.0, 0.25] {
            let k = KernelSpec::power_approx(mu).unwrap();
            for amp in [0.3, 0.45] {
                let c = gradient_fd_check(&m, &bump(&m, amp), k, 8).unwrap();
                assert!(c.nodes >= 3 && c.max_rel_error < 1e-4, "mu={mu} amp={amp}: {c:?}");
            }
        }
    }

    #[test]
    fn large_multiple_of_plateau_has_negative_energy() {
        let m = coarse_model();
        let grid = Arc::new(RadialGrid::uniform_geometric(48, 10.0, 1.2, 8).unwrap());
        let w = plateau_test_function(0.25, grid).unwrap();
        let k = KernelSpec::power_approx(1.0).unwrap();
        let e = m.energy(&w.scaled(2.0).into_values(), k).unwrap();
        assert!(e.total < 0.0);
        // pair distances are at most 1/2, so the kernel is at least log 2
        let g = m.primitive(&w.scaled(0.5).into_values()).unwrap();
        let mass = crate::radial::radial_integral(&w.with_values(g), 2, 8, |_, x| x);
        let conv = m.energy(&w.scaled(0.5).into_values(), KernelSpec::Log).unwrap().conv_term;
        assert!(conv >= 2f64.ln() * mass * mass * (1.0 - 1e-9));
    }

    #[test]
    fn overflow_guard() {
        let m = coarse_model();
        let u = bump(&m, 200.0);
        assert!(matches!(m.energy(&u, KernelSpec::Log), Err(Error::Overflow(_))));
    }

    #[test]
    fn gamma_bound_arithmetic() {
        let p = ProblemParams::new(2, 0.5, 0.25).unwrap();
        assert!((gamma_bound(&p, 1.0, 0.12) - 0.48).abs() < 1e-15);
        assert!((gamma_bound(&p, 0.9, 0.12) - 0.48).abs() < 1e-15);
        // W-term 96 ||W|| for N/s = 4
        assert!((gamma_bound(&p, 1.001, 0.0) - 96.0 * 0.002).abs() < 1e-12);
    }

    #[test]
    fn transform_checks_on_bump() {
        let m = coarse_model();
        let u = bump(&m, 0.4);
        for c in m.ff_ratio_check(&u).unwrap() {
            assert!(c.passed(), "{c:?}");
        }
        let zero = vec![0.0; u.len()];
        let cs = m.ff_ratio_check(&zero).unwrap();
        assert_eq!(cs[1].measured, 0.0);
    }
}
