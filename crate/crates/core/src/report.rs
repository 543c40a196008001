//! Verification records: every check carries an anchor from a closed
//! vocabulary, its measured value, the bound it is compared with and the
//! signed margin. Reports serialize to JSON losslessly, non-finite values
//! included.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::Path;

/// Closed vocabulary of result anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anchor {
    #[serde(rename = "Riesz kernel constant C_N")]
    RieszConstant,
    #[serde(rename = "Moser-Trudinger exponent series alpha*")]
    MoserTrudingerExponent,
    #[serde(rename = "test function norm bound J_N(s,R)")]
    TestFunctionNorm,
    #[serde(rename = "test function seminorm bound K_N(s)")]
    TestFunctionSeminorm,
    #[serde(rename = "threshold T_N(s) and beta_0")]
    LevelThreshold,
    #[serde(rename = "growth window mu_N(s,tau)")]
    GrowthWindow,
    #[serde(rename = "uniform norm bound for critical points")]
    UniformNormBound,
    #[serde(rename = "approximating kernel dominates log kernel")]
    KernelInequality,
    #[serde(rename = "approximating kernel converges to log kernel")]
    KernelConvergence,
    #[serde(rename = "power bound for Phi_{N,s}")]
    PhiPowerBound,
    #[serde(rename = "Hardy-Littlewood-Sobolev inequality")]
    HardyLittlewoodSobolev,
    #[serde(rename = "(f1) vanishing at zero")]
    AssumptionF1,
    #[serde(rename = "(f2) exponential growth bound")]
    AssumptionF2,
    #[serde(rename = "(f3) ratio window for F f'/f^2")]
    AssumptionF3,
    #[serde(rename = "(f4) ratio limit at infinity")]
    AssumptionF4,
    #[serde(rename = "(f5) middle-range growth beta")]
    AssumptionF5,
    #[serde(rename = "consequences of the growth assumptions")]
    AssumptionConsequences,
    #[serde(rename = "radial reduction of the Gagliardo seminorm")]
    RadialSeminorm,
    #[serde(rename = "derivative of the approximating energy")]
    EnergyDerivative,
    #[serde(rename = "mountain pass geometry")]
    MountainPassGeometry,
    #[serde(rename = "mountain pass level below s/(2N)")]
    MountainPassLevel,
    #[serde(rename = "critical point of the approximating energy")]
    CriticalPoint,
    #[serde(rename = "transform F(u)/f(u) and mixed seminorm pairing")]
    PrimitiveTransform,
    #[serde(rename = "auxiliary function H_N and gamma_N(s,tau)")]
    AuxiliaryTransform,
    #[serde(rename = "limit of the approximating scheme")]
    ApproximationLimit,
    #[serde(rename = "finiteness of the logarithmic energy")]
    LogEnergyFinite,
    #[serde(rename = "logarithmic asymptotics of the potential")]
    PotentialAsymptotics,
    #[serde(rename = "weighted integrability of the potential")]
    PotentialIntegrability,
    #[serde(rename = "Poisson equation for the potential")]
    PoissonEquation,
    #[serde(rename = "decay estimate for u")]
    DecayEstimate,
    #[serde(rename = "bound for the approximating potential")]
    ApproximatePotentialBound,
    #[serde(rename = "local Hoelder bound right-hand side")]
    HolderBound,
}

impl Anchor {
    pub const ALL: [Anchor; 32] = [
        Anchor::RieszConstant,
        Anchor::MoserTrudingerExponent,
        Anchor::TestFunctionNorm,
        Anchor::TestFunctionSeminorm,
        Anchor::LevelThreshold,
        Anchor::GrowthWindow,
        Anchor::UniformNormBound,
        Anchor::KernelInequality,
        Anchor::KernelConvergence,
        Anchor::PhiPowerBound,
        Anchor::HardyLittlewoodSobolev,
        Anchor::AssumptionF1,
        Anchor::AssumptionF2,
        Anchor::AssumptionF3,
        Anchor::AssumptionF4,
        Anchor::AssumptionF5,
        Anchor::AssumptionConsequences,
        Anchor::RadialSeminorm,
        Anchor::EnergyDerivative,
        Anchor::MountainPassGeometry,
        Anchor::MountainPassLevel,
        Anchor::CriticalPoint,
        Anchor::PrimitiveTransform,
        Anchor::AuxiliaryTransform,
        Anchor::ApproximationLimit,
        Anchor::LogEnergyFinite,
        Anchor::PotentialAsymptotics,
        Anchor::PotentialIntegrability,
        Anchor::PoissonEquation,
        Anchor::DecayEstimate,
        Anchor::ApproximatePotentialBound,
        Anchor::HolderBound,
    ];

    pub fn as_str(&self) -> String {
        serde_json::to_value(self).unwrap().as_str().unwrap().to_string()
    }
}

/// f64 that survives JSON with infinities and NaN encoded as strings.
mod lossless {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad number {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

/// One named check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub anchor: Anchor,
    #[serde(with = "lossless")]
    pub measured: f64,
    #[serde(with = "lossless")]
    pub bound: f64,
    /// Signed distance to the bound, nonnegative on pass.
    #[serde(with = "lossless")]
    pub margin: f64,
    pub status: Status,
    pub witness: String,
}

impl Check {
    /// Pass iff measured <= bound.
    pub fn upper(id: &str, anchor: Anchor, measured: f64, bound: f64, witness: impl Into<String>) -> Self {
        let margin = bound - measured;
        Self::from_margin(id, anchor, measured, bound, margin, witness)
    }

    /// Pass iff measured < bound (strict).
    pub fn strict_upper(id: &str, anchor: Anchor, measured: f64, bound: f64, witness: impl Into<String>) -> Self {
        let mut c = Self::upper(id, anchor, measured, bound, witness);
        if !(measured < bound) {
            c.status = Status::Fail;
        }
        c
    }

    /// Pass iff measured >= bound.
    pub fn lower(id: &str, anchor: Anchor, measured: f64, bound: f64, witness: impl Into<String>) -> Self {
        let margin = measured - bound;
        Self::from_margin(id, anchor, measured, bound, margin, witness)
    }

    /// Pass iff measured > bound (strict).
    pub fn strict_lower(id: &str, anchor: Anchor, measured: f64, bound: f64, witness: impl Into<String>) -> Self {
        let mut c = Self::lower(id, anchor, measured, bound, witness);
        if !(measured > bound) {
            c.status = Status::Fail;
        }
        c
    }

    /// Pass iff the value is finite; bound is reported as +inf.
    pub fn finite(id: &str, anchor: Anchor, measured: f64, witness: impl Into<String>) -> Self {
        let ok = measured.is_finite();
        Check {
            id: id.into(),
            anchor,
            measured,
            bound: f64::INFINITY,
            margin: if ok { 1.0 } else { -1.0 },
            status: if ok { Status::Pass } else { Status::Fail },
            witness: witness.into(),
        }
    }

    pub fn skip(id: &str, anchor: Anchor, reason: impl Into<String>) -> Self {
        Check {
            id: id.into(),
            anchor,
            measured: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            status: Status::Skip,
            witness: reason.into(),
        }
    }

    fn from_margin(id: &str, anchor: Anchor, measured: f64, bound: f64, margin: f64, witness: impl Into<String>) -> Self {
        Check {
            id: id.into(),
            anchor,
            measured,
            bound,
            margin,
            status: if margin >= 0.0 { Status::Pass } else { Status::Fail },
            witness: witness.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Ordered list of checks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<Check>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Check) {
        self.entries.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.entries.extend(other.entries);
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.entries.iter().filter(|c| !c.passed())
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.entries.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// One line per check: status, id, measured, bound.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.entries {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            out.push_str(&format!("{tag} {:<32} measured={:<14.6e} bound={:<14.6e} {}\n", c.id, c.measured, c.bound, c.witness));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_are_distinct() {
        let names: std::collections::BTreeSet<String> = Anchor::ALL.iter().map(Anchor::as_str).collect();
        assert_eq!(names.len(), Anchor::ALL.len());
    }

    #[test]
    fn round_trip_with_non_finite_values() {
        let mut r = VerificationReport::new();
        r.push(Check::upper("a", Anchor::RieszConstant, 1.0, 2.0, "x"));
        r.push(Check::finite("b", Anchor::LogEnergyFinite, f64::INFINITY, ""));
        r.push(Check::skip("c", Anchor::PotentialAsymptotics, "zero mass"));
        r.push(Check::lower("d", Anchor::AssumptionF5, 0.1 + 0.2, f64::NEG_INFINITY, ""));
        let s = r.to_json();
        let back = VerificationReport::from_json(&s).unwrap();
        assert_eq!(back.to_json(), s);
        assert_eq!(back.entries[3].measured.to_bits(), (0.1f64 + 0.2).to_bits());
        assert!(!r.all_passed());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn strict_comparisons() {
        assert!(!Check::strict_upper("x", Anchor::MountainPassLevel, 1.0, 1.0, "").passed());
        assert!(Check::upper("x", Anchor::MountainPassLevel, 1.0, 1.0, "").passed());
        assert!(!Check::upper("x", Anchor::MountainPassLevel, f64::NAN, 1.0, "").passed());
    }
}
