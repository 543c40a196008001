//! Orchestration: builds the calibrated model from a configuration, runs the
//! enabled check groups in a fixed order and writes the run directory.

use crate::config::RunConfig;
use crate::constants::{alpha_star_upper, constants_bundle, k_frak, norm_cap, riesz_constant, ProblemParams};
use crate::energy::{gradient_fd_check, EnergyModel};
use crate::error::{Error, Result};
use crate::kernels::{check_kernel_inequalities, hls_ratio, kernel_sup_error, log_grid, phi_power_bound_check};
use crate::montecarlo::mc_gagliardo;
use crate::mountain_pass::{
    continuation, find_endpoint, level_and_norm_audit, rim_minimum, saddle_search, ContinuationResult, SaddleResult,
};
use crate::nonlinearity::{calibrate_amplitude, default_audit_grid, make_model_nonlinearity, verify_assumptions, AssumptionReport, Nonlinearity};
use crate::poisson::{
    asymptotic_check, decay_fit, equation_rhs_sup, gmu_convolution_bound, holder_bound_rhs, integrability_checks, laplace_residual_2d,
    poisson_potential, uniform_ball_deviation, PotentialReport, AUDIT_RADII,
};
use crate::radial::{plateau_test_function, RadialField, RadialGrid};
use crate::report::{Anchor, Check, VerificationReport};
use crate::seminorm::{test_function_bound, SeminormOperator};
use serde::Serialize;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

/// 2 (6 pi^2 zeta(3))^{1/3}, the planar half-order exponent bound.
pub fn alpha_star_planar_closed_form() -> f64 {
    const ZETA3: f64 = 1.202_056_903_159_594_2;
    2.0 * (6.0 * std::f64::consts::PI.powi(2) * ZETA3).cbrt()
}

/// Model nonlinearity with lambda fixed or calibrated to beta_factor * beta_0.
pub fn build_nonlinearity(cfg: &RunConfig) -> Result<Nonlinearity> {
    let p = &cfg.problem;
    let c = &cfg.nonlinearity;
    let nl = make_model_nonlinearity(p.dim, p.s, c.lambda.unwrap_or(1.0), c.alpha, c.q)?;
    if c.lambda.is_some() {
        return Ok(nl);
    }
    let beta0 = crate::constants::beta_0(p.dim, p.s, p.v_upper)?;
    let lambda = calibrate_amplitude(&nl, p, c.beta_factor * beta0)?;
    Ok(nl.with_lambda(lambda))
}

pub fn build_model(cfg: &RunConfig, nl: &Nonlinearity) -> Result<EnergyModel> {
    let grid = Arc::new(cfg.grid.build()?);
    EnergyModel::new(grid, cfg.problem, Arc::new(nl.clone()), cfg.potential)
}

/// Everything a verify-all run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: VerificationReport,
    pub lambda: Option<f64>,
    pub assumptions: Option<AssumptionReport>,
    pub continuation: Option<ContinuationResult>,
    pub potential: Option<PotentialReport>,
    /// Wall time per group, kept out of the report so reports stay reproducible.
    pub timings: Vec<(String, Duration)>,
}

/// Record a failed group instead of aborting the run.
fn group<T>(report: &mut VerificationReport, name: &str, anchor: Anchor, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            report.push(Check::lower(&format!("{name}-completed"), anchor, 0.0, 1.0, e.to_string()));
            None
        }
    }
}

pub fn constants_checks(p: &ProblemParams, cfg: &RunConfig) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    let c2 = riesz_constant(2)?;
    r.push(Check::upper(
        "riesz-constant-planar",
        Anchor::RieszConstant,
        (c2 - 0.5 / std::f64::consts::PI).abs(),
        1e-12,
        format!("C_2 = {c2:.17e}"),
    ));
    let a = alpha_star_upper(2, 0.5, 1e-12)?;
    let closed = alpha_star_planar_closed_form();
    r.push(Check::upper(
        "alpha-star-planar-closed-form",
        Anchor::MoserTrudingerExponent,
        (a.value - closed).abs(),
        1e-8,
        format!("series {:.15} ({} terms) vs closed form {closed:.15}", a.value, a.terms),
    ));
    let k = k_frak(2, 0.5);
    let target = 9.5 * std::f64::consts::PI.powi(2);
    r.push(Check::upper(
        "seminorm-bound-planar-half",
        Anchor::TestFunctionSeminorm,
        ((k - target) / target).abs(),
        1e-12,
        format!("K_2(1/2) = {k:.15}, 9.5 pi^2 = {target:.15}"),
    ));
    let b = constants_bundle(p, 1.0 / 3.0, cfg.nonlinearity.mu_form, 1e-12)?;
    r.push(Check::upper("alpha-star-remainder", Anchor::MoserTrudingerExponent, b.alpha_star_remainder, 1e-12, format!("{} terms", b.alpha_star_terms)));
    r.push(Check::upper("growth-window-below-s-over-n", Anchor::GrowthWindow, b.mu_n, p.s / p.dim as f64, format!("mu_N = {:.6e}", b.mu_n)));
    r.push(Check::strict_lower("growth-window-positive", Anchor::GrowthWindow, b.mu_n, 0.0, format!("{:?} reading", b.mu_form)));
    let grid = Arc::new(cfg.grid.build()?);
    if grid.node_index(1.0 / 3.0).is_some() && grid.node_index(1.0 / 6.0).is_some() {
        let t = test_function_bound(grid, p.dim, p.s, 1.0 / 3.0, &cfg.potential, p.v_upper)?;
        r.push(Check::lower(
            &format!("test-function-bound-n{}-s{}", p.dim, p.s),
            Anchor::TestFunctionNorm,
            t.rel_margin,
            0.01,
            format!("||w||^(N/s) = {:.6} vs J + K = {:.6}", t.norm_pow, t.bound),
        ));
    } else {
        r.push(Check::skip("test-function-bound", Anchor::TestFunctionNorm, "grid lacks the nodes 1/6 and 1/3"));
    }
    Ok(r)
}

/// Sup errors of G_mu against log on [0.1, 10] for mu = 2^{-k}, k = 0..=8,
/// and the least-squares order of their decay in mu.
pub fn kernel_convergence() -> (Vec<f64>, f64) {
    let errs: Vec<f64> = (0..=8).map(|k| kernel_sup_error(2f64.powi(-k))).collect();
    let xs: Vec<f64> = (0..=8).map(|k| -(k as f64)).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (errs, sxy / sxx)
}

pub fn kernel_checks(cfg: &RunConfig) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    let t_grid = log_grid(1e-8, 1.0, 10_000);
    for mu in cfg.schedule.values() {
        let k = check_kernel_inequalities(mu, 2.0 * mu, &t_grid)?;
        r.push(Check::lower(
            &format!("kernel-above-log-mu-{mu}"),
            Anchor::KernelInequality,
            k.min_margin,
            0.0,
            format!("{} nodes in (0,1], witness t = {:.3e}", k.nodes_checked, k.witness_t),
        ));
    }
    let mu = cfg.schedule.values()[0];
    let k = check_kernel_inequalities(mu, 2.0 * mu, &log_grid(1e-8, 1e4, 4000))?;
    r.push(Check::finite(&format!("kernel-power-majorant-mu-{mu}"), Anchor::KernelInequality, k.c_nu, format!("G_mu <= C t^(-{})", 2.0 * mu)));
    let (errs, order) = kernel_convergence();
    r.push(Check::lower(
        "kernel-convergence-order",
        Anchor::KernelConvergence,
        order,
        0.9,
        format!("sup errors {:.3e} .. {:.3e}", errs[0], errs[8]),
    ));
    let p = &cfg.problem;
    let phi = phi_power_bound_check(cfg.nonlinearity.alpha, 2.0, 3.0, &log_grid(1e-3, 10.0, 400), p.dim, p.s)?;
    r.push(Check::finite("phi-power-bound", Anchor::PhiPowerBound, phi.c_beta, format!("refinement change {:.2e}", phi.refinement_change)));
    let g = Arc::new(RadialGrid::uniform_geometric(48, 10.0, 1.2, 8)?);
    let f = RadialField::from_fn(g, |x| (-(x * x)).exp());
    // 1/q + mu/N + 1/r = 2 with mu = N/2 and q = r
    let q = 4.0 / 3.0;
    let h = hls_ratio(&f, &f, p.dim as f64 / 2.0, q, q, p.dim)?;
    r.push(Check::finite("hls-ratio", Anchor::HardyLittlewoodSobolev, h.ratio, format!("lhs {:.6e}, rhs {:.6e}", h.lhs, h.rhs)));
    Ok(r)
}

fn assumption_anchor(name: &str) -> Anchor {
    match name {
        "f1" => Anchor::AssumptionF1,
        "f2" => Anchor::AssumptionF2,
        "f3-lower" | "f3-upper" => Anchor::AssumptionF3,
        "f4" => Anchor::AssumptionF4,
        "f5" => Anchor::AssumptionF5,
        _ => Anchor::AssumptionConsequences,
    }
}

pub fn nonlinearity_checks(cfg: &RunConfig, nl: &Nonlinearity) -> Result<(VerificationReport, AssumptionReport)> {
    let grid = default_audit_grid(nl, cfg.nonlinearity.audit_points);
    let a = verify_assumptions(nl, &cfg.problem, &grid, cfg.nonlinearity.mu_form)?;
    let mut r = VerificationReport::new();
    for c in &a.checks {
        let mut check = Check::lower(&format!("assumption-{}", c.name), assumption_anchor(&c.name), c.margin, 0.0, format!("t = {:.4e}: {}", c.witness_t, c.detail));
        if !c.passed {
            check.status = crate::report::Status::Fail;
        }
        r.push(check);
    }
    r.push(Check::lower("beta-above-threshold", Anchor::LevelThreshold, a.beta_measured, a.beta_0, format!("lambda = {:.6e}", nl.lambda)));
    Ok((r, a))
}

/// Three compactly supported planar fields: (name, field, support radius).
pub fn oracle_fields(grid: &Arc<RadialGrid>) -> Result<Vec<(&'static str, RadialField, f64)>> {
    let pi = std::f64::consts::PI;
    Ok(vec![
        ("hat", RadialField::from_fn(grid.clone(), |r| (1.0 - 2.0 * r).max(0.0)), 0.5),
        ("plateau", plateau_test_function(1.0 / 3.0, grid.clone())?, 1.0 / 3.0),
        ("cosine-bump", RadialField::from_fn(grid.clone(), |r| if r < 0.75 { 0.5 * (1.0 + (pi * r / 0.75).cos()) } else { 0.0 }), 0.75),
    ])
}

pub fn seminorm_oracle_checks(cfg: &RunConfig) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    let p = &cfg.problem;
    let grid = Arc::new(cfg.grid.build()?);
    let op = SeminormOperator::new(grid.clone(), p.dim, p.s)?;
    for (name, u, support) in oracle_fields(&grid)? {
        let q = op.value(&u)?;
        let mc = mc_gagliardo(&u, support, p.dim, p.s, cfg.verify.mc_samples, cfg.seed);
        r.push(Check::upper(
            &format!("seminorm-oracle-{name}"),
            Anchor::RadialSeminorm,
            (q - mc.value).abs() / mc.value,
            0.02,
            format!("quadrature {q:.6}, Monte Carlo {:.6} +- {:.6} ({} samples)", mc.value, mc.std_err, mc.samples),
        ));
    }
    Ok(r)
}

/// Smooth compactly supported bump of height `amp` on B_{3/4}.
pub fn gradient_test_field(model: &EnergyModel, amp: f64) -> Vec<f64> {
    model.grid().nodes().iter().map(|r| if *r < 0.75 { amp * (1.0 - (r / 0.75).powi(2)).powi(2) } else { 0.0 }).collect()
}

pub fn gradient_checks(model: &EnergyModel) -> Result<VerificationReport> {
    let mut r = VerificationReport::new();
    for mu in [1.0, 0.25] {
        let k = EnergyModel::kernel_mu(mu)?;
        for amp in [0.3, 0.45] {
            let c = gradient_fd_check(model, &gradient_test_field(model, amp), k, 8)?;
            r.push(Check::upper(
                &format!("gradient-fd-mu-{mu}-amp-{amp}"),
                Anchor::EnergyDerivative,
                c.max_rel_error,
                1e-4,
                format!("{} nodes, worst node {}", c.nodes, c.worst_node),
            ));
        }
    }
    Ok(r)
}

/// Solve along the schedule and audit every level, norm, rim and transform.
pub fn solver_checks(cfg: &RunConfig, model: &EnergyModel, ratio_sup: f64) -> Result<(VerificationReport, ContinuationResult)> {
    let mut r = VerificationReport::new();
    let p = &cfg.problem;
    let schedule = cfg.schedule.values();
    let rho = cfg.rim.rho;
    let e = find_endpoint(model, schedule[0])?;
    let je = model.energy(e.values(), EnergyModel::kernel_mu(schedule[0])?)?.total;
    let ne = model.norm_pow(e.values())?.powf(1.0 / p.p());
    r.push(Check::strict_upper("endpoint-negative-energy", Anchor::MountainPassGeometry, je, 0.0, format!("J(e) at mu = {}", schedule[0])));
    r.push(Check::strict_lower("endpoint-beyond-rim", Anchor::MountainPassGeometry, ne, rho, "||e||_V > rho"));
    let cont = continuation(model, &schedule, &cfg.solver)?;
    for (k, res) in cont.results.iter().enumerate() {
        for c in level_and_norm_audit(res, p) {
            r.push(c);
        }
        let rim = rim_minimum(model, res.mu, rho, cfg.rim.samples, cfg.seed + k as u64)?;
        if k == 0 {
            r.push(Check::strict_upper("rim-radius-constraint", Anchor::MountainPassGeometry, rho, rim.rho_cap, "rho below the smallness cap"));
        }
        r.push(Check::strict_lower(&format!("rim-positive-mu-{}", res.mu), Anchor::MountainPassGeometry, rim.min, 0.0, format!("{} samples at rho = {rho}", rim.samples)));
        r.push(Check::upper(&format!("rim-below-level-mu-{}", res.mu), Anchor::MountainPassLevel, rim.min, res.c_mu, "sampled rim minimum vs c_mu"));
        for mut c in model.ff_ratio_check(res.u_mu.values())? {
            c.id = format!("{}-mu-{}", c.id, res.mu);
            r.push(c);
        }
        for mut c in model.h_transform_check(res.u_mu.values(), res.c_mu, ratio_sup)? {
            c.id = format!("{}-mu-{}", c.id, res.mu);
            r.push(c);
        }
    }
    let tol = cfg.solver.tol_residual;
    r.push(Check::upper("limit-log-residual", Anchor::CriticalPoint, cont.log_residual, 10.0 * tol, "weak residual of u0 for the log kernel"));
    r.push(Check::finite("limit-log-energy", Anchor::LogEnergyFinite, cont.log_energy.conv_abs, format!("log energy {:.6e}", cont.log_energy.breakdown.total)));
    r.push(Check::strict_lower("limit-nontrivial", Anchor::ApproximationLimit, cont.u0_norm, 0.5 * rho, "||u0||_V > rho/2"));
    r.push(Check::strict_upper(
        "norm-uniform-in-mu",
        Anchor::UniformNormBound,
        cont.max_norm_pow,
        norm_cap(p.dim, p.s, p.tau),
        "max over the schedule of ||u_mu||_V^(N/s)",
    ));
    let last = cont.results.last().unwrap();
    let cold = cold_start(model, last.mu, cfg)?;
    r.push(Check::upper(
        "warm-cold-consistency",
        Anchor::ApproximationLimit,
        (cold.c_mu - last.c_mu).abs() / last.c_mu,
        cfg.verify.warm_cold_tol,
        format!("mu = {}: warm {:.6e}, cold {:.6e}", last.mu, last.c_mu, cold.c_mu),
    ));
    Ok((r, cont))
}

/// Saddle search from the plateau endpoint, without warm start.
pub fn cold_start(model: &EnergyModel, mu: f64, cfg: &RunConfig) -> Result<SaddleResult> {
    let e = find_endpoint(model, mu)?;
    saddle_search(model, mu, &e, &cfg.solver)
}

pub fn poisson_checks(cfg: &RunConfig, model: &EnergyModel, u0: &RadialField) -> Result<(VerificationReport, PotentialReport)> {
    let mut r = VerificationReport::new();
    let p = &cfg.problem;
    let grid = model.grid().clone();
    if p.dim == 2 && grid.node_index(1.0).is_some() {
        let radii = [0.0, 0.25, 0.5, 0.9, 1.0, 2.0, 10.0, 40.0];
        let dev = uniform_ball_deviation(&grid, &radii)?;
        r.push(Check::upper("uniform-ball-potential", Anchor::PoissonEquation, dev, 1e-6, "closed form -log(r)/2 outside, (1-r^2)/4 inside"));
        let ball = |x: f64| if x <= 1.0 { 1.0 } else { 0.0 };
        let lr = laplace_residual_2d(&grid, 2, &ball, (0.05, 0.95), 12)?;
        r.push(Check::upper("uniform-ball-five-point", Anchor::PoissonEquation, lr.residual_fine.max(lr.residual_coarse), 1e-3, "interior of the unit ball"));
    } else {
        r.push(Check::skip("uniform-ball-potential", Anchor::PoissonEquation, "planar check only"));
    }
    let rep = poisson_potential(model, u0, &AUDIT_RADII)?;
    r.push(asymptotic_check(&rep, cfg.verify.asymptotic_tol));
    for c in integrability_checks(&rep) {
        r.push(c);
    }
    if p.dim == 2 {
        let src = rep.source.clone();
        let f = move |x: f64| src.eval(x);
        let lr = laplace_residual_2d(&grid, 2, &f, (0.02, 1.0), 12)?;
        r.push(Check::lower(
            "five-point-order",
            Anchor::PoissonEquation,
            lr.order,
            1.8,
            format!("relative residual {:.3e} -> {:.3e}", lr.residual_coarse, lr.residual_fine),
        ));
    } else {
        r.push(Check::skip("five-point-order", Anchor::PoissonEquation, "planar check only"));
    }
    let hi = 0.8 * grid.r_max();
    match decay_fit(u0, p.dim, p.s, (1.0, hi)) {
        Ok(fit) => r.push(fit.check()),
        Err(e @ Error::InvalidParameter(_)) => r.push(Check::skip("decay-weighted-sup", Anchor::DecayEstimate, e.to_string())),
        Err(e) => return Err(e),
    }
    let schedule = cfg.schedule.values();
    for mu in [schedule[0], *schedule.last().unwrap()] {
        r.push(gmu_convolution_bound(model, u0, mu, &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0])?.check());
    }
    let k = equation_rhs_sup(model, u0, &rep);
    for x0 in [0.0, 1.0, 3.0] {
        let v = holder_bound_rhs(u0, k, 1.0, x0, p.dim, p.s)?;
        r.push(Check::finite(&format!("holder-bound-center-{x0}"), Anchor::HolderBound, v, format!("R = 1, K = {k:.4e}")));
    }
    Ok((r, rep))
}

/// Run every enabled group in a fixed order; failures become report entries.
pub fn run_verify_all(cfg: &RunConfig) -> RunOutcome {
    let mut report = VerificationReport::new();
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str| {
        timings.push((name.to_string(), clock.elapsed()));
        clock = Instant::now();
    };
    let v = cfg.verify;
    if v.constants {
        if let Some(r) = group(&mut report, "constants", Anchor::RieszConstant, constants_checks(&cfg.problem, cfg)) {
            report.extend(r);
        }
        lap("constants");
    }
    if v.kernels {
        if let Some(r) = group(&mut report, "kernels", Anchor::KernelInequality, kernel_checks(cfg)) {
            report.extend(r);
        }
        lap("kernels");
    }
    let nl = group(&mut report, "calibration", Anchor::LevelThreshold, build_nonlinearity(cfg));
    let mut assumptions = None;
    if let Some(nl) = &nl {
        if v.nonlinearity || v.solver {
            if let Some((r, a)) = group(&mut report, "nonlinearity", Anchor::AssumptionConsequences, nonlinearity_checks(cfg, nl)) {
                if v.nonlinearity {
                    report.extend(r);
                }
                assumptions = Some(a);
            }
        }
    }
    lap("nonlinearity");
    if v.seminorm_oracle {
        if let Some(r) = group(&mut report, "seminorm-oracle", Anchor::RadialSeminorm, seminorm_oracle_checks(cfg)) {
            report.extend(r);
        }
        lap("seminorm-oracle");
    }
    let needs_model = v.gradient || v.solver;
    let model = match (&nl, needs_model) {
        (Some(nl), true) => group(&mut report, "model", Anchor::RadialSeminorm, build_model(cfg, nl)),
        _ => None,
    };
    if let (Some(m), true) = (&model, v.gradient) {
        if let Some(r) = group(&mut report, "gradient", Anchor::EnergyDerivative, gradient_checks(m)) {
            report.extend(r);
        }
        lap("gradient");
    }
    let mut cont = None;
    let mut potential = None;
    if let (Some(m), Some(a), true) = (&model, &assumptions, v.solver) {
        if let Some((r, c)) = group(&mut report, "solver", Anchor::MountainPassLevel, solver_checks(cfg, m, a.ratio_sup)) {
            report.extend(r);
            lap("solver");
            if v.poisson {
                if let Some((r, p)) = group(&mut report, "poisson", Anchor::PotentialAsymptotics, poisson_checks(cfg, m, &c.u0)) {
                    report.extend(r);
                    potential = Some(p);
                }
                lap("poisson");
            }
            cont = Some(c);
        }
    }
    RunOutcome { report, lambda: nl.map(|n| n.lambda), assumptions, continuation: cont, potential, timings }
}

#[derive(Serialize)]
struct LevelRow {
    mu: f64,
    c_mu: f64,
    norm_pow: f64,
    residual: f64,
    iterations: usize,
}

/// Write `levels.csv`, the saddle results and the fields of a continuation.
pub fn write_continuation(dir: &Path, cont: &ContinuationResult) -> Result<()> {
    let fields = dir.join("fields");
    std::fs::create_dir_all(&fields)?;
    let mut w = csv::Writer::from_path(dir.join("levels.csv")).map_err(|e| Error::Io(e.to_string()))?;
    for (k, r) in cont.results.iter().enumerate() {
        w.serialize(LevelRow { mu: r.mu, c_mu: r.c_mu, norm_pow: r.norm_pow, residual: r.residual, iterations: r.iterations })
            .map_err(|e| Error::Io(e.to_string()))?;
        r.u_mu.write_csv(&fields.join(format!("u_mu_{k}.csv")))?;
    }
    w.flush()?;
    cont.u0.write_csv(&fields.join("u0.csv"))?;
    std::fs::write(dir.join("saddle_results.json"), serde_json::to_string_pretty(cont).map_err(|e| Error::Io(e.to_string()))?)?;
    Ok(())
}

pub fn write_potential(dir: &Path, rep: &PotentialReport) -> Result<()> {
    let fields = dir.join("fields");
    std::fs::create_dir_all(&fields)?;
    rep.phi.write_csv(&fields.join("phi.csv"))?;
    std::fs::write(dir.join("potential.json"), serde_json::to_string_pretty(rep).map_err(|e| Error::Io(e.to_string()))?)?;
    Ok(())
}

/// Echo the configuration and write every artifact of a verify-all run.
pub fn write_run_dir(dir: &Path, cfg: &RunConfig, out: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.echo"), cfg.to_toml())?;
    out.report.write(&dir.join("report.json"))?;
    if let Some(c) = &out.continuation {
        write_continuation(dir, c)?;
    }
    if let Some(p) = &out.potential {
        write_potential(dir, p)?;
    }
    if let Some(a) = &out.assumptions {
        std::fs::write(dir.join("assumptions.json"), serde_json::to_string_pretty(a).map_err(|e| Error::Io(e.to_string()))?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::GridSpec;

    fn quick_config() -> RunConfig {
        let mut c = RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25).unwrap());
        c.grid = GridSpec { uniform_segments: 48, r_max: 10.0, ratio: 1.2, quad_order: 8 };
        c.verify.mc_samples = 20_000;
        c
    }

    #[test]
    fn closed_form_value() {
        assert!((alpha_star_planar_closed_form() - 2.0 * (6.0 * std::f64::consts::PI.powi(2) * 1.2020569031595942f64).powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn solver_disabled_gives_static_groups_only() {
        let mut c = quick_config();
        c.verify.solver = false;
        c.verify.gradient = false;
        c.verify.seminorm_oracle = false;
        let out = run_verify_all(&c);
        assert!(out.continuation.is_none() && out.potential.is_none());
        assert!(out.report.entries.len() >= 20, "{}", out.report.entries.len());
        for e in &out.report.entries {
            assert!(!e.id.contains("level") && !e.id.contains("potential"), "{}", e.id);
        }
        assert!(out.report.all_passed(), "{}", out.report.summary());
    }

    #[test]
    fn kernel_order_reaches_one() {
        let (errs, order) = kernel_convergence();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(order >= 0.9, "{order}");
    }
}
