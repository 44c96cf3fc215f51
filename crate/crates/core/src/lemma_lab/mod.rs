//! Checkers for the σ_k inequalities and identities. Each checker samples a
//! stratum of Γ_k, pushes the worst samples further with
//! [`adversarial_refine`](crate::cones::adversarial_refine), and summarizes
//! the outcome in a [`LemmaReport`].

mod drivers;
pub mod point;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::{CurvatureVector, DirectionVector};
use crate::tolerances::{rel_residual, CONCAVITY_REL, IDENTITY_REL, INEQUALITY_REL, PARTIAL_ORDER_REL};

pub use drivers::{escalation_sup, EscalationKind, EscalationRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    #[serde(rename = "f11k12")]
    F11k12,
    #[serde(rename = "partial_ordering")]
    PartialOrdering,
    #[serde(rename = "fk1")]
    Fk1,
    #[serde(rename = "quotient_concavity")]
    QuotientConcavity,
    #[serde(rename = "k1_product_bound")]
    K1ProductBound,
    #[serde(rename = "lemn")]
    Lemn,
    #[serde(rename = "semiconvex_from_sigma")]
    SemiconvexFromSigma,
    #[serde(rename = "upper_kappak")]
    UpperKappak,
    #[serde(rename = "lu")]
    Lu,
    #[serde(rename = "prop_lN")]
    PropLN,
    #[serde(rename = "hs_recursion")]
    HsRecursion,
    #[serde(rename = "lemHG")]
    LemHG,
    #[serde(rename = "maclaurin")]
    Maclaurin,
    #[serde(rename = "hs_q2")]
    HsQ2,
}

impl LemmaId {
    /// The twelve checks run by `--all`.
    pub const ALL: [LemmaId; 12] = [
        LemmaId::F11k12,
        LemmaId::PartialOrdering,
        LemmaId::Fk1,
        LemmaId::QuotientConcavity,
        LemmaId::K1ProductBound,
        LemmaId::Lemn,
        LemmaId::SemiconvexFromSigma,
        LemmaId::UpperKappak,
        LemmaId::Lu,
        LemmaId::PropLN,
        LemmaId::HsRecursion,
        LemmaId::LemHG,
    ];

    pub const EXTRA: [LemmaId; 2] = [LemmaId::Maclaurin, LemmaId::HsQ2];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::F11k12 => "f11k12",
            LemmaId::PartialOrdering => "partial_ordering",
            LemmaId::Fk1 => "fk1",
            LemmaId::QuotientConcavity => "quotient_concavity",
            LemmaId::K1ProductBound => "k1_product_bound",
            LemmaId::Lemn => "lemn",
            LemmaId::SemiconvexFromSigma => "semiconvex_from_sigma",
            LemmaId::UpperKappak => "upper_kappak",
            LemmaId::Lu => "lu",
            LemmaId::PropLN => "prop_lN",
            LemmaId::HsRecursion => "hs_recursion",
            LemmaId::LemHG => "lemHG",
            LemmaId::Maclaurin => "maclaurin",
            LemmaId::HsQ2 => "hs_q2",
        }
    }

    /// Threshold on `worst_violation` above which the verdict is `violated`.
    pub fn tolerance(self) -> f64 {
        match self {
            LemmaId::F11k12 | LemmaId::HsQ2 => IDENTITY_REL,
            LemmaId::PartialOrdering => PARTIAL_ORDER_REL,
            LemmaId::QuotientConcavity => CONCAVITY_REL,
            LemmaId::PropLN => 0.0,
            _ => INEQUALITY_REL,
        }
    }

    /// Whether the checked quantity depends on a direction ξ.
    pub fn uses_direction(self) -> bool {
        matches!(
            self,
            LemmaId::QuotientConcavity | LemmaId::Lu | LemmaId::HsRecursion | LemmaId::LemHG | LemmaId::HsQ2
        )
    }

    /// Smallest order the check makes sense for.
    pub fn min_order(self) -> usize {
        match self {
            LemmaId::K1ProductBound | LemmaId::UpperKappak | LemmaId::Lu | LemmaId::PropLN | LemmaId::LemHG => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .iter()
            .chain(LemmaId::EXTRA.iter())
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown lemma `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

/// Parameters a pointwise functional needs besides (κ, ξ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointParams {
    /// Order the functional is evaluated at (may differ from the run's k).
    pub k: usize,
    pub a: f64,
    pub epsilon: f64,
    pub big_n: f64,
}

impl PointParams {
    fn to_map(self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("k".to_string(), self.k as f64),
            ("A".to_string(), self.a),
            ("epsilon".to_string(), self.epsilon),
            ("N".to_string(), self.big_n),
        ])
    }

    fn from_map(m: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| {
            m.get(key)
                .copied()
                .ok_or_else(|| Error::invalid(format!("witness params lack `{key}`")))
        };
        Ok(PointParams {
            k: get("k")? as usize,
            a: get("A")?,
            epsilon: get("epsilon")?,
            big_n: get("N")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kappa: Vec<f64>,
    /// Empty for functionals of κ alone.
    pub xi: Vec<f64>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "A")]
    pub a: f64,
    pub seed: u64,
    pub trials: usize,
    pub verdict: Verdict,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Witness,
    pub empirical_constant: Option<f64>,
    pub wall_ms: u64,
    pub skipped: usize,
    pub details: serde_json::Value,
}

/// Search effort for the adversarial phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Refinement rounds spent on every sample.
    pub rounds: usize,
    /// Number of worst samples refined further.
    pub top: usize,
    pub polish_rounds: usize,
    pub step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rounds: 16,
            top: 16,
            polish_rounds: 400,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub n: usize,
    pub k: usize,
    /// Semi-convexity bound κ_i ≥ -A.
    #[serde(rename = "A")]
    pub a: f64,
    /// Upper end of the sampling box [-A, B].
    #[serde(rename = "B")]
    pub b: f64,
    pub seed: u64,
    pub trials: usize,
    pub epsilon: f64,
    /// N for the gap-index check.
    pub big_n: f64,
    /// Range of σ_k for the checks whose constants depend on it.
    pub sigma_range: (f64, f64),
    pub search: SearchConfig,
    /// Random directions tried per sample, on top of the structured ones.
    pub directions: usize,
    /// Candidate values of N(ε), increasing.
    pub ladder: Vec<f64>,
    /// Gap index for the orthogonal variant of the lemHG check; defaults to k-2.
    pub gap_l: Option<usize>,
    /// M of the gap stratum used by that variant.
    pub gap_m: f64,
    /// κ_1 values of the escalation runs.
    pub escalation: Vec<f64>,
}

pub fn default_ladder() -> Vec<f64> {
    vec![2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0]
}

impl LabConfig {
    pub fn new(n: usize, k: usize) -> Self {
        LabConfig {
            n,
            k,
            a: 1.0,
            b: 2.0,
            seed: 42,
            trials: 10_000,
            epsilon: 0.1,
            big_n: 3.0,
            sigma_range: (1.0, 2.0),
            search: SearchConfig::default(),
            directions: 4,
            ladder: default_ladder(),
            gap_l: None,
            gap_m: 10.0,
            escalation: vec![1e1, 1e2, 1e3, 1e4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n = {} < 2", self.n)));
        }
        if self.k < 1 || self.k > self.n {
            return Err(Error::invalid(format!("k = {} outside 1..={}", self.k, self.n)));
        }
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("A and B must be positive and finite"));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        if !(self.big_n > 1.0 && self.big_n.is_finite()) {
            return Err(Error::invalid(format!("N = {} must exceed 1", self.big_n)));
        }
        let (lo, hi) = self.sigma_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::invalid("sigma range must satisfy 0 < lo <= hi"));
        }
        if self.ladder.is_empty() || self.ladder.windows(2).any(|w| w[1] <= w[0]) || self.ladder[0] <= 1.0 {
            return Err(Error::invalid("ladder must be increasing and start above 1"));
        }
        if self.escalation.len() < 2 || self.escalation.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("escalation needs at least two increasing values"));
        }
        if !(self.gap_m > 1.0) {
            return Err(Error::invalid("gap M must exceed 1"));
        }
        Ok(())
    }

    fn params(&self, k: usize, big_n: f64) -> PointParams {
        PointParams {
            k,
            a: self.a,
            epsilon: self.epsilon,
            big_n,
        }
    }
}

/// Violation of lemma `id` at `(κ, ξ)`; ξ is ignored by functionals of κ alone.
pub fn point_violation(id: LemmaId, kappa: &CurvatureVector, xi: &DirectionVector, p: &PointParams) -> Result<f64> {
    let k = p.k;
    match id {
        LemmaId::F11k12 => point::f11k12_violation(kappa, k),
        LemmaId::PartialOrdering => point::partial_ordering_violation(kappa, k),
        LemmaId::Fk1 => point::fk1_violation(kappa, k),
        LemmaId::QuotientConcavity => point::concavity_directional(kappa, k, xi),
        LemmaId::K1ProductBound => point::k1_violation(kappa, k),
        LemmaId::Lemn => point::lemn_violation(kappa, k),
        LemmaId::SemiconvexFromSigma => point::semiconvex_chain_violation(kappa, k),
        LemmaId::UpperKappak => point::upper_kappak_violation(kappa, k, p.a),
        LemmaId::Lu => point::lu_violation(kappa, k, xi, p.epsilon),
        LemmaId::PropLN => point::prop_ln_margin(kappa, k, p.big_n),
        LemmaId::HsRecursion => point::hs_recursion_violation(kappa, k, xi),
        LemmaId::LemHG => point::lem_hg_sign_violation(kappa, k, xi),
        LemmaId::Maclaurin => point::maclaurin_violation(kappa, k),
        LemmaId::HsQ2 => point::hs_q2_violation(kappa, xi),
    }
}

/// Exact maximizer over ξ, for the functionals that are quadratic forms in ξ.
pub fn worst_direction(id: LemmaId, kappa: &CurvatureVector, p: &PointParams) -> Result<Option<DirectionVector>> {
    Ok(match id {
        LemmaId::QuotientConcavity => Some(point::concavity_violation(kappa, p.k)?.1),
        LemmaId::Lu => Some(point::lu_worst_direction(kappa, p.k, p.epsilon)?),
        LemmaId::HsRecursion => Some(point::hs_recursion_worst_direction(kappa, p.k)?),
        LemmaId::LemHG => Some(point::lem_hg_worst_direction(kappa, p.k)?),
        _ => None,
    })
}

/// Recomputes the report's worst violation from its witness alone.
pub fn reevaluate(report: &LemmaReport) -> Result<f64> {
    let w = &report.witness;
    let kappa = CurvatureVector::new(w.kappa.clone())?;
    let xi = if w.xi.is_empty() {
        DirectionVector::coordinate(kappa.n(), 0)
    } else {
        DirectionVector::new(w.xi.clone())?
    };
    let p = PointParams::from_map(&w.params)?;
    point_violation(report.lemma, &kappa, &xi, &p)
}

/// Whether the witness reproduces the reported worst violation.
pub fn witness_reproduces(report: &LemmaReport) -> Result<bool> {
    let v = reevaluate(report)?;
    Ok(rel_residual(v, report.worst_violation) <= crate::tolerances::WITNESS_REL)
}

/// Runs the checker for `id`.
pub fn check(id: LemmaId, cfg: &LabConfig) -> Result<LemmaReport> {
    cfg.validate()?;
    if cfg.k < id.min_order() {
        return Err(Error::invalid(format!("{id} needs k >= {}", id.min_order())));
    }
    let start = std::time::Instant::now();
    let mut report = drivers::run(id, cfg)?;
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

pub fn check_identities_f11k12(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::F11k12, cfg)
}

pub fn check_partial_ordering(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::PartialOrdering, cfg)
}

pub fn check_fk1(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::Fk1, cfg)
}

pub fn check_quotient_concavity(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::QuotientConcavity, cfg)
}

pub fn check_k1_product_bound(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::K1ProductBound, cfg)
}

pub fn check_lemn(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::Lemn, cfg)
}

pub fn check_semiconvex_from_sigma(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::SemiconvexFromSigma, cfg)
}

pub fn check_upper_kappak(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::UpperKappak, cfg)
}

pub fn check_lu_inequality(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::Lu, cfg)
}

pub fn check_prop_ln(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::PropLN, cfg)
}

pub fn check_hs_recursion(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::HsRecursion, cfg)
}

pub fn check_lem_hg(cfg: &LabConfig) -> Result<LemmaReport> {
    check(LemmaId::LemHG, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in LemmaId::ALL.iter().chain(LemmaId::EXTRA.iter()) {
            assert_eq!(id.name().parse::<LemmaId>().unwrap(), *id);
            let json = serde_json::to_string(id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.name()));
        }
        assert!("nope".parse::<LemmaId>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LabConfig::new(6, 3).validate().is_ok());
        assert!(LabConfig::new(6, 9).validate().is_err());
        let mut c = LabConfig::new(6, 3);
        c.epsilon = 1.5;
        assert!(c.validate().is_err());
        assert!(check(LemmaId::Lu, &LabConfig::new(4, 1)).is_err());
    }
}
