//! Run configuration: a strict TOML schema with defaults, validation of every
//! precondition that can be checked before any computation, and echo-back.

use crate::constants::{MuForm, ProblemParams};
use crate::error::{Error, Result};
use crate::mountain_pass::{default_schedule, rim_radius_cap, SaddleOptions};
use crate::radial::{GridSpec, Potential};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Model nonlinearity f(t) = lambda t^q exp(alpha t^{N/(N-s)}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub q: f64,
    pub alpha: f64,
    /// Fixed amplitude; when absent lambda is calibrated to `beta_factor` beta_0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub beta_factor: f64,
    pub mu_form: MuForm,
    pub audit_points: usize,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig { q: 10.0, alpha: 1.0, lambda: None, beta_factor: 1.01, mu_form: MuForm::default(), audit_points: 2000 }
    }
}

/// mu_k = 2^{-k}, k = 0..=k_max, unless an explicit decreasing list is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub k_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { k_max: 6, mu: None }
    }
}

impl ScheduleConfig {
    pub fn values(&self) -> Vec<f64> {
        self.mu.clone().unwrap_or_else(|| default_schedule(self.k_max))
    }
}

/// Sphere ||u||_V = rho sampled for the mountain-pass rim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RimConfig {
    pub rho: f64,
    pub samples: usize,
}

impl Default for RimConfig {
    fn default() -> Self {
        RimConfig { rho: 0.15, samples: 16 }
    }
}

/// Which check groups `verify-all` runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub constants: bool,
    pub kernels: bool,
    pub nonlinearity: bool,
    pub seminorm_oracle: bool,
    pub gradient: bool,
    pub solver: bool,
    pub poisson: bool,
    pub mc_samples: usize,
    /// Relative tolerance of the far-field audit.
    pub asymptotic_tol: f64,
    /// Relative tolerance of the warm/cold start comparison.
    pub warm_cold_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            constants: true,
            kernels: true,
            nonlinearity: true,
            seminorm_oracle: true,
            gradient: true,
            solver: true,
            poisson: true,
            mc_samples: 10_000_000,
            asymptotic_tol: 0.05,
            warm_cold_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemParams,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub solver: SaddleOptions,
    #[serde(default)]
    pub rim: RimConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    2024
}

impl RunConfig {
    /// Defaults around the given problem parameters.
    pub fn with_problem(problem: ProblemParams) -> Self {
        RunConfig {
            problem,
            nonlinearity: NonlinearityConfig::default(),
            potential: Potential::default(),
            grid: GridSpec::default(),
            schedule: ScheduleConfig::default(),
            solver: SaddleOptions::default(),
            rim: RimConfig::default(),
            verify: VerifyConfig::default(),
            seed: default_seed(),
        }
    }

    /// Parse and validate TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The full configuration, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigValidation(m));
        self.problem.validate().map_err(|e| Error::ConfigValidation(e.to_string()))?;
        let p = &self.problem;
        let nl = &self.nonlinearity;
        let q_min = p.p() - 1.0;
        if !(nl.q > q_min) {
            return bad(format!("nonlinearity.q = {} must exceed N/s - 1 = {q_min}", nl.q));
        }
        if !(nl.alpha > 0.0) || nl.lambda.is_some_and(|l| !(l > 0.0 && l.is_finite())) {
            return bad("nonlinearity.alpha and nonlinearity.lambda must be positive".into());
        }
        if !(nl.beta_factor > 1.0) {
            return bad(format!("nonlinearity.beta_factor = {} must exceed 1 (beta > beta_0)", nl.beta_factor));
        }
        if nl.audit_points < 10 {
            return bad("nonlinearity.audit_points must be at least 10".into());
        }
        let (lo, hi) = self.potential.bounds();
        if lo < p.v_lower - 1e-12 || hi > p.v_upper + 1e-12 {
            return bad(format!("potential range [{lo}, {hi}] outside [V_lower, V_upper] = [{}, {}]", p.v_lower, p.v_upper));
        }
        self.grid.build().map_err(|e| Error::ConfigValidation(format!("grid: {e}")))?;
        let mu = self.schedule.values();
        if mu.is_empty() || mu.windows(2).any(|w| !(w[1] < w[0])) || mu.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) {
            return bad("schedule must be a nonempty decreasing list in (0, 1]".into());
        }
        self.solver.validate().map_err(|e| Error::ConfigValidation(format!("solver: {e}")))?;
        let cap = rim_radius_cap(p);
        if !(self.rim.rho > 0.0 && self.rim.rho < cap) || self.rim.samples == 0 {
            return bad(format!("rim.rho = {} must lie in (0, {cap}) with at least one sample", self.rim.rho));
        }
        if self.verify.mc_samples < 2 || !(self.verify.asymptotic_tol > 0.0) || !(self.verify.warm_cold_tol > 0.0) {
            return bad("verify.mc_samples >= 2 and positive tolerances required".into());
        }
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed = {} exceeds the TOML integer range", self.seed));
        }
        Ok(())
    }
}

/// Read, parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\nN = 2\ns = 0.5\ntau = 0.25\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.nonlinearity.q, 10.0);
        assert_eq!(c.schedule.values().len(), 7);
        assert_eq!(c.solver, SaddleOptions::default());
        // the echo parses back to the same configuration
        let echo = c.to_toml();
        assert!(echo.contains("beta_factor"));
        assert_eq!(RunConfig::from_toml(&echo).unwrap(), c);
    }

    #[test]
    fn tau_outside_window_names_it() {
        let e = RunConfig::from_toml("[problem]\nN = 2\ns = 0.5\ntau = 0.6\n").unwrap_err();
        match e {
            Error::ConfigValidation(m) => assert!(m.contains("(f3) window"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let e = RunConfig::from_toml(&format!("{MINIMAL}foo = 1\n")).unwrap_err();
        match e {
            Error::ConfigParse(m) => assert!(m.contains("foo") && m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::from_toml(&format!("{MINIMAL}[solver]\nbar = 2\n")), Err(Error::ConfigParse(_))));
    }

    #[test]
    fn other_preconditions() {
        let cases = [
            "[nonlinearity]\nq = 2.0\n",
            "[schedule]\nmu = [0.5, 1.0]\n",
            "[rim]\nrho = 0.9\n",
            "[grid]\nratio = 1.5\n",
            "[potential]\nkind = \"constant\"\nvalue = 2.0\n",
        ];
        for c in cases {
            assert!(matches!(RunConfig::from_toml(&format!("{MINIMAL}{c}")), Err(Error::ConfigValidation(_))), "{c}");
        }
    }
}
