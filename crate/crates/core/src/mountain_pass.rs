//! Mountain-pass geometry, a discrete path-deformation saddle search for J_mu
//! and the continuation mu -> 0 towards a critical point of the logarithmic
//! energy.
//!
//! The iterate u is kept on the ridge: t -> J_mu(t u) is maximized along its
//! ray, so the path 0 -> u -> T u -> e crosses the mountain at J_mu(u). Each
//! step moves u along the gradient preconditioned by the Hessian of the
//! (N/s)-homogeneous part, inside a trust region in ||.||_V, with Armijo
//! acceptance on the ridge level and projection onto nonnegative fields.

use crate::constants::{norm_cap, ProblemParams};
use crate::energy::{EnergyModel, LogEnergy};
use crate::error::{Error, Result};
use crate::kernels::{ConvolutionOperator, KernelSpec};
use crate::radial::{plateau_test_function, RadialField};
use crate::report::{Anchor, Check};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleOptions {
    pub path_points: usize,
    pub tol_residual: f64,
    pub tol_level: f64,
    pub max_iterations: usize,
    /// Arc-length reparametrization period in iterations.
    pub reparam_every: usize,
    pub armijo_c: f64,
    /// Metric shift relative to sup(u)^2.
    pub metric_shift: f64,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            path_points: 41,
            tol_residual: 1e-4,
            tol_level: 1e-6,
            max_iterations: 400,
            reparam_every: 10,
            armijo_c: 1e-4,
            metric_shift: 0.05,
        }
    }
}

impl SaddleOptions {
    pub fn validate(&self) -> Result<()> {
        if self.path_points < 3 {
            return Err(Error::InvalidParameter(format!("path_points = {} must be >= 3", self.path_points)));
        }
        if !(self.tol_residual > 0.0 && self.tol_level > 0.0 && self.metric_shift > 0.0) {
            return Err(Error::InvalidParameter("tolerances and metric_shift must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) || self.reparam_every == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter("armijo_c in (0,1), reparam_every and max_iterations >= 1".into()));
        }
        Ok(())
    }
}

/// Output of one saddle search.
#[derive(Debug, Clone, Serialize)]
pub struct SaddleResult {
    pub mu: f64,
    pub c_mu: f64,
    #[serde(skip)]
    pub u_mu: RadialField,
    pub residual: f64,
    pub residual_node: usize,
    pub iterations: usize,
    pub path_points: usize,
    /// ||u_mu||_V^{N/s}.
    pub norm_pow: f64,
    pub level_history: Vec<f64>,
    pub residual_history: Vec<f64>,
}

fn energy_or_neg_inf(model: &EnergyModel, u: &[f64], kernel: KernelSpec) -> Result<f64> {
    match model.energy(u, kernel) {
        Ok(b) => Ok(b.total),
        Err(Error::Overflow(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn dist(model: &EnergyModel, a: &[f64], b: &[f64]) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(model.norm_pow(&d)?.powf(1.0 / model.params().p()))
}

/// First t = 2^k (k >= 0) with J_mu(t e0) < 0, e0 the plateau on B_{1/4}.
pub fn find_endpoint(model: &EnergyModel, mu: f64) -> Result<RadialField> {
    let e0 = plateau_test_function(0.25, model.grid().clone())?;
    endpoint_along(model, EnergyModel::kernel_mu(mu)?, &e0, 1.0)
}

/// Doubling search along the ray through `base` starting from `t0`.
pub fn endpoint_along(model: &EnergyModel, kernel: KernelSpec, base: &RadialField, t0: f64) -> Result<RadialField> {
    let mut t = t0;
    while t <= 2f64.powi(40) {
        let e = base.scaled(t);
        if energy_or_neg_inf(model, e.values(), kernel)? < 0.0 {
            return Ok(e);
        }
        t *= 2.0;
    }
    Err(Error::NoDescent(t))
}

/// Sampled lower estimate of J_mu on the sphere ||u||_V = rho.
#[derive(Debug, Clone, Serialize)]
pub struct RimEstimate {
    pub rho: f64,
    pub rho_cap: f64,
    pub constraint_ok: bool,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    pub seed: u64,
}

/// ((2N-1)/(2N))^{(N-s)/N}.
pub fn rim_radius_cap(params: &ProblemParams) -> f64 {
    let n = params.dim as f64;
    ((2.0 * n - 1.0) / (2.0 * n)).powf((n - params.s) / n)
}

/// Random nonnegative profile: a sum of smooth bumps in [0, 2].
fn random_profile(model: &EnergyModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bumps: Vec<(f64, f64, f64)> = (0..4).map(|_| (rng.gen_range(0.0..1.5), rng.gen_range(0.05..0.5), rng.gen_range(0.1..1.0))).collect();
    let nodes = model.grid().nodes();
    let mut u: Vec<f64> = nodes
        .iter()
        .map(|r| bumps.iter().map(|(c, w, a)| a * (-((r - c) / w).powi(2)).exp()).sum::<f64>())
        .collect();
    *u.last_mut().unwrap() = 0.0;
    u
}

pub fn rim_minimum(model: &EnergyModel, mu: f64, rho: f64, sample_count: usize, seed: u64) -> Result<RimEstimate> {
    if !(rho > 0.0) || sample_count == 0 {
        return Err(Error::InvalidParameter("rho > 0 and at least one sample required".into()));
    }
    let kernel = EnergyModel::kernel_mu(mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<f64>> = (0..sample_count).map(|_| random_profile(model, &mut rng)).collect();
    let values: Vec<f64> = fields
        .par_iter()
        .map(|u| {
            let norm = model.norm_pow(u)?.powf(1.0 / model.params().p());
            let v: Vec<f64> = u.iter().map(|x| x * rho / norm).collect();
            energy_or_neg_inf(model, &v, kernel)
        })
        .collect::<Result<_>>()?;
    let cap = rim_radius_cap(model.params());
    Ok(RimEstimate {
        rho,
        rho_cap: cap,
        constraint_ok: rho < cap,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        samples: sample_count,
        seed,
    })
}

/// Fibering profile t -> J(t u): the homogeneous part scales like t^{N/s},
/// only the convolution term needs re-evaluation.
struct Ray<'a> {
    model: &'a EnergyModel,
    op: Arc<ConvolutionOperator>,
    u: &'a [f64],
    a: f64,
}

impl<'a> Ray<'a> {
    fn new(model: &'a EnergyModel, kernel: KernelSpec, u: &'a [f64]) -> Result<Self> {
        Ok(Ray { model, op: model.conv_op(kernel)?, u, a: model.norm_pow(u)? })
    }

    fn at_log(&self, lt: f64) -> Result<f64> {
        let t = lt.exp();
        let p = self.model.params().p();
        let v: Vec<f64> = self.u.iter().map(|x| t * x).collect();
        match self.model.primitive(&v) {
            Ok(g) => Ok(t.powf(p) * self.a / p - 0.5 * self.model.riesz() * self.op.pairing(&g)),
            Err(Error::Overflow(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    /// (t*, J(t* u)) maximizing the profile; None if the maximum escapes to t -> 0.
    fn maximize(&self) -> Result<Option<(f64, f64)>> {
        let h = 0.25f64;
        let mut c = 0.0f64;
        let mut fc = self.at_log(c)?;
        let mut steps = 0;
        loop {
            let (fl, fr) = (self.at_log(c - h)?, self.at_log(c + h)?);
            if fr > fc && fr >= fl {
                c += h;
                fc = fr;
            } else if fl > fc {
                c -= h;
                fc = fl;
            } else {
                break;
            }
            steps += 1;
            if steps > 200 || c < -40.0 {
                return Ok(None);
            }
        }
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (c - h, c + h);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = self.at_log(x1)?;
        let mut f2 = self.at_log(x2)?;
        for _ in 0..48 {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = self.at_log(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = self.at_log(x2)?;
            }
        }
        let (lt, f) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        let (lt, f) = if fc > f { (c, fc) } else { (lt, f) };
        Ok(Some((lt.exp(), f)))
    }
}

/// Ray maximum of the nonnegative field `v`, rescaled, with its energy.
fn on_ridge(model: &EnergyModel, kernel: KernelSpec, v: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
    let ray = Ray::new(model, kernel, v)?;
    let Some((t, _)) = ray.maximize()? else { return Ok(None) };
    let w: Vec<f64> = v.iter().map(|x| t * x).collect();
    let j = model.energy(&w, kernel)?.total;
    Ok(Some((w, j)))
}

/// Discrete path 0 -> u* -> T u* -> e with P nodes, u* a node.
struct Path {
    points: Vec<Vec<f64>>,
    energies: Vec<f64>,
    top: usize,
}

impl Path {
    /// Nodes spaced by arc length in ||.||_V along the three segments; T is
    /// doubled until every node past u* has negative energy.
    fn through(model: &EnergyModel, kernel: KernelSpec, top: &[f64], e: &[f64], count: usize) -> Result<Self> {
        let norm_top = dist(model, top, &vec![0.0; top.len()])?;
        let mut t = 2.0;
        loop {
            let far: Vec<f64> = top.iter().map(|x| t * x).collect();
            let l1 = norm_top;
            let l2 = (t - 1.0) * norm_top;
            let l3 = dist(model, &far, e)?;
            let total = l1 + l2 + l3;
            let k = (((count - 1) as f64 * l1 / total).round() as usize).clamp(1, count - 3);
            let mut points = Vec::with_capacity(count);
            for j in 0..=k {
                points.push(top.iter().map(|x| x * j as f64 / k as f64).collect::<Vec<f64>>());
            }
            let rest = count - 1 - k;
            for j in 1..=rest {
                let arc = (l2 + l3) * j as f64 / rest as f64;
                points.push(if arc <= l2 { lerp(top, &far, arc / l2) } else { lerp(&far, e, ((arc - l2) / l3).min(1.0)) });
            }
            *points.last_mut().unwrap() = e.to_vec();
            let energies: Vec<f64> = points.par_iter().map(|u| energy_or_neg_inf(model, u, kernel)).collect::<Result<_>>()?;
            if energies[k + 1..].iter().all(|x| *x < 0.0) {
                return Ok(Path { points, energies, top: k });
            }
            t *= 2.0;
            if t > 2f64.powi(20) {
                return Err(Error::PathCollapse(count - 1));
            }
        }
    }

    fn argmax(&self) -> usize {
        let mut k = 0;
        for (j, e) in self.energies.iter().enumerate() {
            if *e > self.energies[k] {
                k = j;
            }
        }
        k
    }
}

/// d = -M^{-1} g on all nodes but the pinned last one.
fn preconditioned_direction(model: &EnergyModel, u: &[f64], g: &[f64], rel_shift: f64) -> Result<Vec<f64>> {
    let n = u.len();
    let m = n - 1;
    let sup = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut shift = rel_shift * sup.max(1e-3).powi(2);
    for _ in 0..8 {
        let h = model.metric(u, shift)?;
        let mat = DMatrix::from_fn(m, m, |i, j| h[i * n + j]);
        if let Some(ch) = mat.cholesky() {
            let rhs = DVector::from_iterator(m, g[..m].iter().map(|x| -x));
            let sol = ch.solve(&rhs);
            let mut d: Vec<f64> = sol.iter().copied().collect();
            d.push(0.0);
            return Ok(d);
        }
        shift *= 10.0;
    }
    Err(Error::SingularMetric(shift))
}

fn project(mut u: Vec<f64>) -> Vec<f64> {
    for x in u.iter_mut() {
        *x = x.max(0.0);
    }
    *u.last_mut().unwrap() = 0.0;
    u
}

/// Saddle search on paths 0 -> e for the kernel G_mu.
pub fn saddle_search(model: &EnergyModel, mu: f64, e: &RadialField, opts: &SaddleOptions) -> Result<SaddleResult> {
    saddle_search_kernel(model, EnergyModel::kernel_mu(mu)?, mu, e, opts)
}

/// Largest step relative to ||u||_V.
const TRUST: f64 = 0.25;

pub fn saddle_search_kernel(model: &EnergyModel, kernel: KernelSpec, mu: f64, e: &RadialField, opts: &SaddleOptions) -> Result<SaddleResult> {
    opts.validate()?;
    let je = energy_or_neg_inf(model, e.values(), kernel)?;
    if !(je < 0.0) {
        return Err(Error::InvalidParameter(format!("endpoint energy {je} must be negative")));
    }
    let ev = e.values();
    // initial maximizer: the maximum along the straight path 0 -> e
    let (mut u, mut level) = on_ridge(model, kernel, ev)?.ok_or(Error::PathCollapse(0))?;
    let mut path = Path::through(model, kernel, &u, ev, opts.path_points)?;
    let mut levels = Vec::new();
    let mut residuals = Vec::new();
    let mut failed_descents = 0;
    for it in 0..opts.max_iterations {
        if it > 0 && it % opts.reparam_every == 0 {
            path = Path::through(model, kernel, &u, ev, opts.path_points)?;
            let k = path.argmax();
            if k == 0 || k + 1 == path.points.len() {
                return Err(Error::PathCollapse(k));
            }
            if k != path.top {
                // another node is higher: continue from its ray maximum
                let (v, j) = on_ridge(model, kernel, &path.points[k])?.ok_or(Error::PathCollapse(0))?;
                u = v;
                level = j;
            }
        }
        let g = model.gradient(&u, kernel)?;
        let res = model.residual_from_gradient(&g);
        let stalled = levels.last().map_or(false, |prev: &f64| (prev - level).abs() <= opts.tol_level * level.abs());
        levels.push(level);
        residuals.push(res.value);
        if res.value <= opts.tol_residual && stalled {
            let norm_pow = model.norm_pow(&u)?;
            return Ok(SaddleResult {
                mu,
                c_mu: level,
                u_mu: e.with_values(u),
                residual: res.value,
                residual_node: res.node,
                iterations: it + 1,
                path_points: path.points.len(),
                norm_pow,
                level_history: levels,
                residual_history: residuals,
            });
        }
        let mut d = preconditioned_direction(model, &u, &g, opts.metric_shift)?;
        let zero = vec![0.0; d.len()];
        let (dn, un) = (dist(model, &d, &zero)?, dist(model, &u, &zero)?);
        if dn > TRUST * un {
            let c = TRUST * un / dn;
            d.iter_mut().for_each(|x| *x *= c);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = project(u.iter().zip(&d).map(|(x, y)| x + step * y).collect());
            let decrease: f64 = g.iter().zip(trial.iter().zip(&u)).map(|(gi, (t, x))| gi * (t - x)).sum();
            if decrease < 0.0 {
                if let Some((v, j)) = on_ridge(model, kernel, &trial)? {
                    if j <= level + opts.armijo_c * decrease {
                        accepted = Some((v, j));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        log::trace!("mu {mu} it {it} level {level:.9e} residual {:.3e} at node {} step {step}", res.value, res.node);
        match accepted {
            Some((v, j)) => {
                u = v;
                level = j;
                failed_descents = 0;
            }
            None => {
                failed_descents += 1;
                if failed_descents >= 3 {
                    return Err(Error::StepRejected(res.value));
                }
            }
        }
    }
    Err(Error::MaxIterations(opts.max_iterations))
}

/// Level below s/(2N) and ||u_mu||_V^{N/s} below the uniform cap.
pub fn level_and_norm_audit(result: &SaddleResult, params: &ProblemParams) -> Vec<Check> {
    let thr = params.s / (2.0 * params.dim as f64);
    let cap = norm_cap(params.dim, params.s, params.tau);
    vec![
        Check::strict_upper(
            &format!("level-below-threshold-mu-{}", result.mu),
            Anchor::MountainPassLevel,
            result.c_mu,
            thr,
            format!("c_mu at mu = {}", result.mu),
        ),
        Check::strict_lower(&format!("level-positive-mu-{}", result.mu), Anchor::MountainPassGeometry, result.c_mu, 0.0, "c_mu > 0"),
        Check::strict_upper(
            &format!("norm-cap-mu-{}", result.mu),
            Anchor::UniformNormBound,
            result.norm_pow,
            cap,
            format!("||u_mu||_V^(N/s) at mu = {}", result.mu),
        ),
    ]
}

/// Continuation output.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationResult {
    pub results: Vec<SaddleResult>,
    #[serde(skip)]
    pub u0: RadialField,
    pub log_residual: f64,
    pub log_energy: LogEnergy,
    pub u0_norm: f64,
    pub max_norm_pow: f64,
    pub warnings: Vec<String>,
}

/// mu_k = 2^{-k}, k = 0..=k_max.
pub fn default_schedule(k_max: u32) -> Vec<f64> {
    (0..=k_max).map(|k| 2f64.powi(-(k as i32))).collect()
}

/// Solve along a decreasing schedule, each solve warm-started on the ray
/// through the previous critical point.
pub fn continuation(model: &EnergyModel, schedule: &[f64], opts: &SaddleOptions) -> Result<ContinuationResult> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) {
        return Err(Error::InvalidParameter("schedule must be decreasing in (0,1]".into()));
    }
    let mut results: Vec<SaddleResult> = Vec::new();
    let mut warnings = Vec::new();
    for &mu in schedule {
        let kernel = EnergyModel::kernel_mu(mu)?;
        let e = match results.last() {
            None => find_endpoint(model, mu)?,
            Some(prev) => endpoint_along(model, kernel, &prev.u_mu, 2.0)?,
        };
        let r = saddle_search(model, mu, &e, opts)?;
        log::info!("mu = {mu}: c_mu = {:.6e} after {} iterations, residual {:.2e}", r.c_mu, r.iterations, r.residual);
        if let Some(prev) = results.last() {
            if (r.c_mu - prev.c_mu).abs() > 0.2 * prev.c_mu.abs() {
                warnings.push(format!("level moved by more than 20% between mu = {} and mu = {mu}", prev.mu));
            }
        }
        results.push(r);
    }
    let last = results.last().unwrap();
    let u0 = last.u_mu.clone();
    let log_residual = model.weak_residual(u0.values(), KernelSpec::Log)?.value;
    let log_energy = model.energy_log(u0.values())?;
    let u0_norm = model.norm_pow(u0.values())?.powf(1.0 / model.params().p());
    let max_norm_pow = results.iter().map(|r| r.norm_pow).fold(0.0, f64::max);
    Ok(ContinuationResult { results, u0, log_residual, log_energy, u0_norm, max_norm_pow, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::tests::coarse_model;

    #[test]
    fn endpoint_contract() {
        let m = coarse_model();
        let e = find_endpoint(&m, 1.0).unwrap();
        let k = EnergyModel::kernel_mu(1.0).unwrap();
        assert!(m.energy(e.values(), k).unwrap().total < 0.0);
        assert!(m.norm_pow(e.values()).unwrap().powf(0.25) > 0.5);
        // the same endpoint works for mu/2
        assert!(m.energy(e.values(), EnergyModel::kernel_mu(0.5).unwrap()).unwrap().total < 0.0);
        let j1 = m.energy(e.values(), k).unwrap().total;
        let j2 = m.energy(e.scaled(2.0).values(), k).unwrap().total;
        assert!(j2 < j1);
    }

    #[test]
    fn rim_values_positive_and_scale() {
        let m = coarse_model();
        let a = rim_minimum(&m, 1.0, 0.2, 16, 7).unwrap();
        let b = rim_minimum(&m, 1.0, 0.1, 16, 7).unwrap();
        assert!(a.constraint_ok && a.min > 0.0 && b.min > 0.0);
        // leading term rho^{N/s}/(N/s)
        let ratio = a.min / b.min;
        assert!((ratio / 16.0 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn saddle_on_coarse_grid() {
        let m = coarse_model();
        let e = find_endpoint(&m, 1.0).unwrap();
        let r = saddle_search(&m, 1.0, &e, &SaddleOptions::default()).unwrap();
        assert!(r.residual <= 1e-4);
        assert!(r.c_mu > 0.0 && r.c_mu < 0.125);
        assert!(r.u_mu.values().iter().all(|x| *x >= 0.0));
        // the rim below the saddle lies under the level
        let rho = 0.5 * r.norm_pow.powf(0.25);
        let rim = rim_minimum(&m, 1.0, rho, 16, 1).unwrap();
        assert!(rim.min > 0.0 && rim.min <= r.c_mu, "{} {}", rim.min, r.c_mu);
    }
}
