//! Complete-damage fragility curves: recorded PGA to per-branch failure
//! probability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FragilityError {
    #[error("median PGA must be positive and finite, got {0}")]
    BadMedian(f64),
    #[error("dispersion must be positive and finite, got {0}")]
    BadDispersion(f64),
    #[error("PGA must be a finite non-negative acceleration, got {0}")]
    BadPga(f64),
    #[error("failure probability for branch {branch} must lie in [0, 1], got {value}")]
    BadProbability { branch: usize, value: f64 },
    #[error("branch {0} has no PGA: no direct value, station or default")]
    UnresolvedPga(usize),
    #[error("branch {branch} refers to unknown station `{station}`")]
    UnknownStation { branch: usize, station: String },
    #[error("duplicate station id `{0}`")]
    DuplicateStation(String),
    #[error("branch {0} has neither a fragility curve nor a failure-probability override")]
    MissingCurve(usize),
    #[error("entry for branch {index} is out of range for {count} branches")]
    BranchOutOfRange { index: usize, count: usize },
    #[error("failure profile has {got} entries, expected {expected}")]
    Length { expected: usize, got: usize },
}

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Lognormal fragility curve for the complete-damage state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityCurve {
    /// PGA (g) at which exceedance probability is one half.
    pub median_pga: f64,
    #[serde(rename = "beta")]
    pub dispersion_beta: f64,
}

impl FragilityCurve {
    pub fn new(median_pga: f64, dispersion_beta: f64) -> Result<Self, FragilityError> {
        let curve = Self {
            median_pga,
            dispersion_beta,
        };
        curve.validate()?;
        Ok(curve)
    }

    fn validate(&self) -> Result<(), FragilityError> {
        if !(self.median_pga.is_finite() && self.median_pga > 0.0) {
            return Err(FragilityError::BadMedian(self.median_pga));
        }
        if !(self.dispersion_beta.is_finite() && self.dispersion_beta > 0.0) {
            return Err(FragilityError::BadDispersion(self.dispersion_beta));
        }
        Ok(())
    }

    /// Probability that the complete-damage state is reached at `pga`.
    pub fn evaluate(&self, pga: f64) -> Result<f64, FragilityError> {
        evaluate_fragility(self, pga)
    }
}

/// `Φ(ln(pga / median) / β)`, with the `pga = 0` limit mapped to 0.
pub fn evaluate_fragility(curve: &FragilityCurve, pga: f64) -> Result<f64, FragilityError> {
    curve.validate()?;
    if !(pga.is_finite() && pga >= 0.0) {
        return Err(FragilityError::BadPga(pga));
    }
    if pga == 0.0 {
        return Ok(0.0);
    }
    let z = (pga / curve.median_pga).ln() / curve.dispersion_beta;
    Ok(standard_normal_cdf(z).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgaRecord {
    pub station_id: String,
    pub pga: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<(f64, f64)>,
}

/// How each branch gets its PGA: a direct value, a named station, or a
/// network-wide default, in that order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PgaMapping {
    #[serde(default)]
    pub direct: BTreeMap<usize, f64>,
    #[serde(default)]
    pub stations: Vec<PgaRecord>,
    #[serde(default)]
    pub branch_station: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<f64>,
}

impl PgaMapping {
    fn pga_for(&self, records: &[PgaRecord], branch: usize) -> Result<f64, FragilityError> {
        let pga = if let Some(&value) = self.direct.get(&branch) {
            value
        } else if let Some(station) = self.branch_station.get(&branch) {
            records
                .iter()
                .find(|r| &r.station_id == station)
                .map(|r| r.pga)
                .ok_or_else(|| FragilityError::UnknownStation {
                    branch,
                    station: station.clone(),
                })?
        } else {
            self.default.ok_or(FragilityError::UnresolvedPga(branch))?
        };
        if pga.is_finite() && pga >= 0.0 {
            Ok(pga)
        } else {
            Err(FragilityError::BadPga(pga))
        }
    }

    fn check(&self, records: &[PgaRecord], branch_count: usize) -> Result<(), FragilityError> {
        for (i, r) in records.iter().enumerate() {
            if records[..i].iter().any(|o| o.station_id == r.station_id) {
                return Err(FragilityError::DuplicateStation(r.station_id.clone()));
            }
            if !(r.pga.is_finite() && r.pga >= 0.0) {
                return Err(FragilityError::BadPga(r.pga));
            }
        }
        let keys = self.direct.keys().chain(self.branch_station.keys());
        check_keys(keys, branch_count)
    }
}

fn check_keys<'a>(
    keys: impl Iterator<Item = &'a usize>,
    branch_count: usize,
) -> Result<(), FragilityError> {
    for &index in keys {
        if index >= branch_count {
            return Err(FragilityError::BranchOutOfRange {
                index,
                count: branch_count,
            });
        }
    }
    Ok(())
}

/// Resolves a PGA for every branch. Station records passed in `records`
/// take part alongside any listed in `mapping.stations`.
pub fn assign_pga(
    records: &[PgaRecord],
    branch_count: usize,
    mapping: &PgaMapping,
) -> Result<Vec<f64>, FragilityError> {
    let all: Vec<PgaRecord> = records.iter().chain(&mapping.stations).cloned().collect();
    mapping.check(&all, branch_count)?;
    (0..branch_count)
        .map(|j| mapping.pga_for(&all, j))
        .collect()
}

/// Per-branch failure probabilities, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FailureProfile(Vec<f64>);

impl FailureProfile {
    pub fn new(p_f: Vec<f64>) -> Result<Self, FragilityError> {
        if let Some((branch, &value)) = p_f
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(FragilityError::BadProbability { branch, value });
        }
        Ok(Self(p_f))
    }

    pub fn uniform(branch_count: usize, p: f64) -> Result<Self, FragilityError> {
        Self::new(vec![p; branch_count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, branch: usize) -> f64 {
        self.0[branch]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FailureProfile {
    type Error = FragilityError;

    fn try_from(p_f: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(p_f)
    }
}

impl From<FailureProfile> for Vec<f64> {
    fn from(profile: FailureProfile) -> Self {
        profile.0
    }
}

/// Combines curves, PGA values and direct overrides into a profile.
/// `pga[j]` may be `None` only for overridden branches.
pub fn failure_profile(
    curves: &BTreeMap<usize, FragilityCurve>,
    pga: &[Option<f64>],
    overrides: &BTreeMap<usize, f64>,
) -> Result<FailureProfile, FragilityError> {
    let count = pga.len();
    check_keys(curves.keys().chain(overrides.keys()), count)?;
    let p_f = (0..count)
        .map(|j| match overrides.get(&j) {
            Some(&p) => Ok(p),
            None => {
                let curve = curves.get(&j).ok_or(FragilityError::MissingCurve(j))?;
                let value = pga[j].ok_or(FragilityError::UnresolvedPga(j))?;
                evaluate_fragility(curve, value)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    FailureProfile::new(p_f)
}

/// Fragility input block of a scenario document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FragilityDocument {
    #[serde(default)]
    pub curves: BTreeMap<usize, FragilityCurve>,
    #[serde(default)]
    pub overrides: BTreeMap<usize, f64>,
    #[serde(default)]
    pub pga: PgaMapping,
}

impl FragilityDocument {
    pub fn resolve(&self, branch_count: usize) -> Result<FailureProfile, FragilityError> {
        self.pga.check(&self.pga.stations, branch_count)?;
        let pga = (0..branch_count)
            .map(|j| {
                if self.overrides.contains_key(&j) {
                    Ok(None)
                } else {
                    self.pga.pga_for(&self.pga.stations, j).map(Some)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        failure_profile(&self.curves, &pga, &self.overrides)
    }
}
