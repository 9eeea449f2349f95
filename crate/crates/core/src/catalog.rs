//! Bundled example measures with their known verdicts, and a one-shot run
//! that recomputes every verdict and compares.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::exponent::ExponentEvaluator;
use crate::kato::{classify, ClassifyConfig, Verdict};
use crate::lab::{harnack_test, HarnackConfig, HarnackVerdict};
use crate::model::StableModel;
use crate::potential::{check_continuity, profile_directions, ContinuityVerdict, PotentialProfile, ProfileConfig};
use crate::simulator::SimulatorConfig;

const HARNACK_RULE: &str = "Harnack's inequality holds exactly when the relative Kato condition does";
const CONTINUITY_RULE: &str = "V is continuous on the sphere when γ > d − 2α";
const ATOM_GAMMA: &str = "an atom ξ gives ν(B(x, r)) ≍ r for x on the ray through ξ, so γ = 1 and the bound is two-sided";
const ATOM_RK: &str = "with an atom the relative Kato condition holds exactly when d − 1 < α";

/// A value a verdict is expected to take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    Gamma(f64),
    Strict(bool),
    Rk(Verdict),
    Harnack(HarnackVerdict),
    Continuity(ContinuityVerdict),
}

/// An expected verdict together with the known result it rests on.
#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub value: Expected,
    pub basis: &'static str,
}

#[derive(Debug, Clone)]
pub struct ExampleModel {
    pub name: &'static str,
    pub json: &'static str,
    pub expectations: Vec<Expectation>,
}

impl ExampleModel {
    pub fn model(&self) -> StableModel {
        StableModel::from_json(self.json).expect("bundled model is valid")
    }
}

fn expect(value: Expected, basis: &'static str) -> Expectation {
    Expectation { value, basis }
}

fn atomic(name: &'static str, json: &'static str, rk: Verdict) -> ExampleModel {
    let harnack = match rk {
        Verdict::Holds => HarnackVerdict::HarnackConsistent,
        _ => HarnackVerdict::HarnackViolating,
    };
    ExampleModel {
        name,
        json,
        expectations: vec![
            expect(Expected::Gamma(1.0), ATOM_GAMMA),
            expect(Expected::Strict(true), ATOM_GAMMA),
            expect(Expected::Rk(rk), ATOM_RK),
            expect(Expected::Harnack(harnack), HARNACK_RULE),
            expect(Expected::Continuity(ContinuityVerdict::Continuous), CONTINUITY_RULE),
        ],
    }
}

/// The bundled examples, in table order.
pub fn examples() -> Vec<ExampleModel> {
    vec![
        ExampleModel {
            name: "nu1",
            json: r#"{"d": 2, "alpha": 1.0, "spectral": {"uniform_mass": 1.0}}"#,
            expectations: vec![
                expect(Expected::Gamma(2.0), "uniform μ: ν has a bounded density, a strict γ-measure with γ = d"),
                expect(Expected::Strict(true), "uniform μ: ν has a bounded density, a strict γ-measure with γ = d"),
                expect(Expected::Rk(Verdict::Holds), "uniform μ satisfies the relative Kato condition"),
                expect(Expected::Harnack(HarnackVerdict::HarnackConsistent), HARNACK_RULE),
                expect(Expected::Continuity(ContinuityVerdict::Continuous), CONTINUITY_RULE),
            ],
        },
        ExampleModel {
            name: "nu2",
            json: r#"{"d": 3, "alpha": 0.5, "spectral": {"caps": [{"center": [1, 0, 0], "radius": 0.3, "density": 1.0}]}}"#,
            expectations: vec![
                expect(Expected::Gamma(3.0), "surface measure on a cap: bounded density on its support, γ = d"),
                expect(Expected::Strict(true), "surface measure on a cap: bounded density on its support, γ = d"),
                expect(Expected::Rk(Verdict::Holds), "a cap with constant density satisfies the relative Kato condition"),
                expect(Expected::Harnack(HarnackVerdict::HarnackConsistent), HARNACK_RULE),
                expect(Expected::Continuity(ContinuityVerdict::Continuous), CONTINUITY_RULE),
            ],
        },
        ExampleModel {
            name: "nu3",
            json: r#"{"d": 3, "alpha": 0.5, "spectral": {"shrinking_balls": {"base": [1, 0, 0], "toward": [0, 1, 0], "start": 2, "count": 6, "density": 1.0}}}"#,
            expectations: vec![
                expect(
                    Expected::Strict(false),
                    "caps of radius 4^-n with 2^-n separation: ν(B(x, r))/r^γ is unbounded in ratio along the caps",
                ),
                expect(
                    Expected::Rk(Verdict::Fails),
                    "around the n-th cap the Riesz-weighted mass outgrows the plain mass of B(y, 1/2) as n grows",
                ),
                expect(Expected::Harnack(HarnackVerdict::HarnackViolating), HARNACK_RULE),
            ],
        },
        atomic(
            "atomic_a10",
            r#"{"d": 2, "alpha": 1.0, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#,
            Verdict::Fails,
        ),
        atomic(
            "atomic_a075",
            r#"{"d": 2, "alpha": 0.75, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#,
            Verdict::Fails,
        ),
        atomic(
            "atomic_a15",
            r#"{"d": 2, "alpha": 1.5, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#,
            Verdict::Holds,
        ),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Quick,
    Full,
}

impl Budget {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quick" => Some(Budget::Quick),
            "full" => Some(Budget::Full),
            _ => None,
        }
    }
    fn classify(self) -> ClassifyConfig {
        match self {
            Budget::Quick => ClassifyConfig::quick(),
            Budget::Full => ClassifyConfig::default(),
        }
    }
    fn paths(self) -> usize {
        match self {
            Budget::Quick => 10_000,
            Budget::Full => 200_000,
        }
    }
    fn profile_directions(self) -> usize {
        match self {
            Budget::Quick => 32,
            Budget::Full => 256,
        }
    }
}

/// How the continuity column was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuitySource {
    /// Potential profile on a grid, modulus compared under refinement.
    Computed,
    /// The γ > d − 2α rule applied to the measured γ̂.
    FromGamma,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub expected: Expected,
    pub observed: String,
    pub basis: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogRow {
    pub name: &'static str,
    pub checksum: String,
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub strict: bool,
    pub rk_nu: Verdict,
    pub rk_spectral: Verdict,
    /// Harnack verdict implied by the relative Kato condition.
    pub harnack: HarnackVerdict,
    /// Monte Carlo Harnack test (planar models only).
    pub harnack_mc: Option<HarnackVerdict>,
    pub harnack_mc_sups: Vec<f64>,
    pub continuity: ContinuityVerdict,
    pub continuity_source: ContinuitySource,
    pub checks: Vec<Check>,
    /// Wall time; left out of the JSON so tables compare bit for bit.
    #[serde(skip)]
    pub seconds: f64,
}

impl CatalogRow {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogTable {
    pub budget: Budget,
    pub seed: u64,
    pub rows: Vec<CatalogRow>,
}

impl CatalogTable {
    /// Names of entries with at least one failed expectation.
    pub fn mismatches(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.passed()).map(|r| r.name).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        s.push_str("| model | d | α | γ̂ | strict | RK (ν) | RK (spectral) | Harnack | Harnack (MC) | V continuity | checks |\n");
        s.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let mc = r.harnack_mc.map_or("-", |v| v.as_str());
            let src = match r.continuity_source {
                ContinuitySource::Computed => "",
                ContinuitySource::FromGamma => " (from γ̂)",
            };
            let failed: Vec<String> = r
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{:?} ≠ {}", c.expected, c.observed))
                .collect();
            let checks = if failed.is_empty() {
                format!("{}/{} pass", r.checks.len(), r.checks.len())
            } else {
                format!("FAIL: {}", failed.join("; "))
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.2} | {} | {} | {} | {} | {} | {:?}{} | {} |",
                r.name,
                r.d,
                r.alpha,
                r.gamma,
                r.strict,
                r.rk_nu.as_str(),
                r.rk_spectral.as_str(),
                r.harnack.as_str(),
                mc,
                r.continuity,
                src,
                checks
            );
        }
        s
    }
}

const GAMMA_TOL: f64 = 0.15;

fn continuity_from_gamma(gamma: f64, dim: usize, alpha: f64) -> ContinuityVerdict {
    let threshold = dim as f64 - 2.0 * alpha;
    if gamma > threshold + 0.1 {
        ContinuityVerdict::Continuous
    } else if gamma < threshold - 0.1 {
        ContinuityVerdict::NotContinuous
    } else {
        ContinuityVerdict::Inconclusive
    }
}

/// Runs one example and checks it against its expectations.
pub fn run_example(ex: &ExampleModel, budget: Budget, seed: u64) -> Result<CatalogRow> {
    let start = Instant::now();
    let model = ex.model();
    let report = classify(&model, &budget.classify())?;
    let gamma = report.gamma.gamma;
    let harnack = match report.harnack_expected {
        Verdict::Holds => HarnackVerdict::HarnackConsistent,
        Verdict::Fails => HarnackVerdict::HarnackViolating,
        Verdict::Inconclusive => HarnackVerdict::Inconclusive,
    };
    let (continuity, continuity_source) = if model.dim() == 2 {
        let eval = ExponentEvaluator::new(&model)?;
        let dirs = profile_directions(2, budget.profile_directions());
        let profile = PotentialProfile::compute(&eval, dirs, ProfileConfig::default())?;
        let rep = check_continuity(&profile, &profile, gamma);
        (rep.verdict, ContinuitySource::Computed)
    } else {
        (continuity_from_gamma(gamma, model.dim(), model.alpha()), ContinuitySource::FromGamma)
    };
    let (harnack_mc, harnack_mc_sups) = if model.dim() == 2 {
        let cfg = HarnackConfig {
            sim: SimulatorConfig {
                paths: budget.paths(),
                seed,
                ..HarnackConfig::default().sim
            },
            ..HarnackConfig::default()
        };
        let rep = harnack_test(&model, &cfg)?;
        (Some(rep.verdict), rep.sups())
    } else {
        (None, Vec::new())
    };
    let checks = ex
        .expectations
        .iter()
        .map(|e| {
            let (observed, pass) = match e.value {
                Expected::Gamma(g) => (format!("{gamma:.3}"), (gamma - g).abs() <= GAMMA_TOL),
                Expected::Strict(b) => (report.strict.strict.to_string(), report.strict.strict == b),
                Expected::Rk(v) => {
                    let spectral_ok = report.spectral.verdict == Verdict::Inconclusive || report.spectral.verdict == v;
                    (
                        format!("{} / {}", report.rk.verdict.as_str(), report.spectral.verdict.as_str()),
                        report.rk.verdict == v && spectral_ok,
                    )
                }
                Expected::Harnack(v) => (harnack.as_str().to_string(), harnack == v),
                Expected::Continuity(v) => (format!("{continuity:?}"), continuity == v),
            };
            Check {
                expected: e.value,
                observed,
                basis: e.basis,
                pass,
            }
        })
        .collect();
    Ok(CatalogRow {
        name: ex.name,
        checksum: model.checksum(),
        d: model.dim(),
        alpha: model.alpha(),
        gamma,
        strict: report.strict.strict,
        rk_nu: report.rk.verdict,
        rk_spectral: report.spectral.verdict,
        harnack,
        harnack_mc,
        harnack_mc_sups,
        continuity,
        continuity_source,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every bundled example. Entries are independent and run in parallel;
/// each gets the seed `seed + index`.
pub fn run_catalog(budget: Budget, seed: u64) -> Result<CatalogTable> {
    let rows = examples()
        .par_iter()
        .enumerate()
        .map(|(i, ex)| run_example(ex, budget, seed + i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(CatalogTable { budget, seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_expectation_has_a_basis() {
        for ex in examples() {
            assert!(!ex.expectations.is_empty(), "{}", ex.name);
            for e in &ex.expectations {
                assert!(!e.basis.is_empty(), "{}", ex.name);
            }
            ex.model();
        }
    }

    #[test]
    fn bundled_files_match_the_catalog() {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../ex");
        for ex in examples() {
            let file = StableModel::load(root.join(format!("{}.json", ex.name))).unwrap();
            assert_eq!(file.checksum(), ex.model().checksum(), "{}", ex.name);
        }
    }

    #[test]
    fn gamma_rule_for_continuity() {
        assert_eq!(continuity_from_gamma(3.0, 3, 0.5), ContinuityVerdict::Continuous);
        assert_eq!(continuity_from_gamma(1.0, 2, 0.4), ContinuityVerdict::NotContinuous);
        assert_eq!(continuity_from_gamma(1.0, 2, 0.5), ContinuityVerdict::Inconclusive);
    }
}
