//! Classification of a model: γ-measure exponent, strict γ-measure
//! constant, the relative Kato ratio `R(y) = ∫_{B(y,1/2)} |y−v|^{α−d} ν(dv)
//! / ν(B(y,1/2))`, and the spectral-measure forms of the same condition.
//!
//! No finite scan proves a supremum, so verdicts are trends: a ratio that is
//! infinite or grows along a sequence of support features fails, a ratio
//! whose supremum is stable across scales holds.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{angle_between, neg, orthonormal_frame, polar2, scale, Point};
use crate::measure::{Endpoints, SpectralMeasure};
use crate::model::{LevyMeasureView, StableModel};
use crate::potential::profile_directions;
use crate::quad::QuadConfig;
use crate::stats::ls_fit;

/// Radii `2^{-3} … 2^{-9}` of the γ fit.
pub const GAMMA_RADII: [f64; 7] = [
    0.125,
    0.0625,
    0.03125,
    0.015625,
    0.0078125,
    0.00390625,
    0.001953125,
];

/// Largest `max/min` of `ν(B(x,r))/r^γ` accepted as a strict γ-measure.
pub const STRICT_LIMIT: f64 = 100.0;

/// Stability band for "holds": later suprema may exceed earlier ones by 20%.
pub const STABLE_GROWTH: f64 = 1.2;

/// Growth along a feature sequence that counts as failure.
pub const FAIL_GROWTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

fn rotate_towards(dim: usize, center: &Point, angle: f64, which: usize) -> Point {
    match dim {
        1 => *center,
        2 => {
            let t = center[1].atan2(center[0]);
            polar2(t + if which == 0 { angle } else { -angle })
        }
        _ => {
            let (u, v) = orthonormal_frame(center);
            let w = if which == 0 { u } else { v };
            let (s, c) = angle.sin_cos();
            [
                c * center[0] + s * w[0],
                c * center[1] + s * w[1],
                c * center[2] + s * w[2],
            ]
        }
    }
}

/// Points of `supp μ`: atoms, cap centers and cap interior points at half
/// the radius, plus a uniform grid when μ has a uniform part.
pub fn support_grid(measure: &SpectralMeasure, n_uniform: usize) -> Vec<Point> {
    let dim = measure.dim();
    let mut out: Vec<Point> = measure.atoms().iter().map(|a| a.direction).collect();
    for c in measure.caps() {
        out.push(c.center);
        if dim >= 2 {
            for which in 0..2 {
                out.push(rotate_towards(dim, &c.center, 0.5 * c.radius, which));
                out.push(rotate_towards(dim, &c.center, -0.5 * c.radius, which));
            }
        }
    }
    if measure.uniform_mass() > 0.0 {
        out.extend(profile_directions(dim, n_uniform));
    }
    out
}

/// Drops points whose antipode is already present; `ν` is symmetric.
fn half(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        let q = neg(&p);
        if !out.iter().any(|o| angle_between(o, &q) < 1e-9 || angle_between(o, &p) < 1e-9) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub fit_error: f64,
    /// Support point attaining the minimal slope.
    pub argmin: Point,
    pub slopes: Vec<(Point, f64)>,
}

/// Minimum over support points `x` of the least-squares slope of
/// `log ν(B(x,r))` against `log r` over [`GAMMA_RADII`].
pub fn gamma_estimate(levy: &LevyMeasureView) -> Result<GammaEstimate> {
    let grid = half(support_grid(levy.model().measure(), 32));
    let fits: Vec<(Point, f64, f64)> = grid
        .par_iter()
        .filter_map(|x| {
            let pts: Vec<(f64, f64)> = GAMMA_RADII
                .iter()
                .map(|&r| (r, levy.nu_ball_mass(x, r)))
                .filter(|(_, m)| *m > 0.0 && m.is_finite())
                .map(|(r, m)| (r.ln(), m.ln()))
                .collect();
            if pts.len() < 3 {
                return None;
            }
            ls_fit(&pts).map(|(s, _, se)| (*x, s, se))
        })
        .collect();
    let best = fits
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidModel("support grid carries no ν-mass".into()))?;
    Ok(GammaEstimate {
        gamma: best.1,
        fit_error: best.2,
        argmin: best.0,
        slopes: fits.iter().map(|f| (f.0, f.1)).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StrictGamma {
    pub gamma: f64,
    pub strict: bool,
    /// `max/min` of `ν(B(x,r))/r^γ` over the scan.
    pub constant: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided check `ν(B(x,r)) ≍ r^γ` over support points and
/// `r = 2^{-1} … 2^{-9}`.
pub fn strict_gamma_check(levy: &LevyMeasureView, gamma: f64) -> StrictGamma {
    let grid = half(support_grid(levy.model().measure(), 32));
    let radii: Vec<f64> = (1..=9).map(|k| 0.5f64.powi(k)).collect();
    let q: Vec<f64> = grid
        .par_iter()
        .flat_map_iter(|x| {
            radii
                .iter()
                .map(|&r| levy.nu_ball_mass(x, r) / r.powf(gamma))
                .collect::<Vec<_>>()
        })
        .collect();
    let lower = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = q.iter().cloned().fold(0.0, f64::max);
    let constant = if lower > 0.0 { upper / lower } else { f64::INFINITY };
    StrictGamma {
        gamma,
        strict: constant <= STRICT_LIMIT,
        constant,
        lower,
        upper,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Witness {
    pub y: Point,
    pub ratio: f64,
}

/// Ratios along a sequence of features expected to get sharper, e.g. the
/// shrinking-ball centers taken at the matching scale.
#[derive(Debug, Clone, Serialize)]
pub struct FeatureSequence {
    pub label: String,
    pub points: Vec<Witness>,
    pub increasing: bool,
    pub growth: f64,
}

impl FeatureSequence {
    fn new(label: String, points: Vec<Witness>) -> Self {
        let r: Vec<f64> = points.iter().map(|w| w.ratio).collect();
        let increasing = r.len() >= 2 && r.windows(2).all(|w| w[1] > w[0]);
        let growth = match (r.first(), r.last()) {
            (Some(a), Some(b)) if *a > 0.0 => b / a,
            _ => f64::NAN,
        };
        FeatureSequence {
            label,
            points,
            increasing,
            growth,
        }
    }

    fn fails(&self) -> bool {
        self.increasing && self.growth >= FAIL_GROWTH
    }
}

fn trend_verdict(scale_sups: &[f64], sequences: &[FeatureSequence]) -> Verdict {
    if scale_sups.iter().any(|s| !s.is_finite()) || sequences.iter().any(|s| s.fails()) {
        return Verdict::Fails;
    }
    if scale_sups.is_empty() {
        return Verdict::Inconclusive;
    }
    let mid = scale_sups.len().div_ceil(2);
    let early = scale_sups[..mid].iter().cloned().fold(0.0, f64::max);
    let late = scale_sups[mid..].iter().cloned().fold(0.0, f64::max);
    if late <= STABLE_GROWTH * early {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RkScanConfig {
    /// Values of `|y|`.
    pub radii: Vec<f64>,
    pub rho: f64,
    /// Base direction grid size.
    pub directions: usize,
    /// Grid refinement factor near features.
    pub enrichment: usize,
    pub rel_tol: f64,
}

impl Default for RkScanConfig {
    fn default() -> Self {
        RkScanConfig {
            radii: vec![1.0, 2.0, 4.0, 8.0],
            rho: 0.5,
            directions: 32,
            enrichment: 5,
            rel_tol: 1e-6,
        }
    }
}

impl RkScanConfig {
    pub fn quick() -> Self {
        RkScanConfig {
            directions: 16,
            enrichment: 3,
            ..Self::default()
        }
    }
}

/// Base grid plus `enrichment`-times denser directions within two angular
/// radii (at least two grid spacings) of every feature of μ.
pub fn scan_directions(measure: &SpectralMeasure, n: usize, enrichment: usize) -> Vec<Point> {
    let dim = measure.dim();
    let mut dirs = profile_directions(dim, n);
    if dim == 1 {
        return dirs;
    }
    let spacing = match dim {
        2 => 2.0 * PI / n as f64,
        _ => (4.0 * PI / n as f64).sqrt(),
    };
    let mut features: Vec<(Point, f64)> = measure.atoms().iter().map(|a| (a.direction, 0.0)).collect();
    for c in measure.caps() {
        features.push((c.center, c.radius));
        for which in 0..2 {
            features.push((rotate_towards(dim, &c.center, c.radius, which), 0.0));
            features.push((rotate_towards(dim, &c.center, -c.radius, which), 0.0));
        }
    }
    let step = spacing / enrichment.max(1) as f64;
    for (f, radius) in features {
        let window = 2.0 * radius.max(spacing);
        let k = (window / step).ceil() as i64;
        dirs.push(f);
        for i in 1..=k {
            let t = i as f64 * step;
            for which in 0..(dim - 1).min(2) {
                dirs.push(rotate_towards(dim, &f, t, which));
                dirs.push(rotate_towards(dim, &f, -t, which));
            }
        }
    }
    half(dirs)
}

#[derive(Debug, Clone, Serialize)]
pub struct RkScan {
    pub rho: f64,
    pub sup: f64,
    pub min: f64,
    /// `(|y|, sup over directions)`.
    pub shell_sups: Vec<(f64, f64)>,
    /// Largest ratios found, descending.
    pub witnesses: Vec<Witness>,
    pub sequences: Vec<FeatureSequence>,
    pub points_scanned: usize,
    pub verdict: Verdict,
}

/// `R(y)` over `|y| ∈ radii` and the enriched direction grid, plus the
/// shrinking-ball centers `c_n` taken at `|y| = 2^{n-1}`, where
/// `B(y, 1/2)` rescales to the `2^{-n}` neighbourhood of `c_n`.
pub fn rk_scan(levy: &LevyMeasureView, cfg: &RkScanConfig) -> RkScan {
    let levy = &levy.with_tolerance(cfg.rel_tol);
    let measure = levy.model().measure();
    let dirs = scan_directions(measure, cfg.directions, cfg.enrichment);
    let ys: Vec<(usize, Point)> = cfg
        .radii
        .iter()
        .enumerate()
        .flat_map(|(k, &r)| dirs.iter().map(move |d| (k, scale(d, r))))
        .collect();
    let ratios: Vec<(usize, Witness)> = ys
        .par_iter()
        .filter_map(|(k, y)| levy.rk_ratio(y, cfg.rho).map(|ratio| (*k, Witness { y: *y, ratio })))
        .collect();
    let mut shell_sups = Vec::with_capacity(cfg.radii.len());
    for (k, &r) in cfg.radii.iter().enumerate() {
        let s = ratios
            .iter()
            .filter(|(i, _)| *i == k)
            .map(|(_, w)| w.ratio)
            .fold(0.0, f64::max);
        shell_sups.push((r, s));
    }
    let mut sequences = Vec::new();
    let shrinking = measure.shrinking_caps();
    if !shrinking.is_empty() {
        let pts: Vec<Witness> = shrinking
            .par_iter()
            .filter_map(|c| {
                let y = scale(&c.center, 2f64.powi(c.level as i32 - 1));
                levy.rk_ratio(&y, cfg.rho).map(|ratio| Witness { y, ratio })
            })
            .collect();
        sequences.push(FeatureSequence::new("shrinking-ball centers".into(), pts));
    }
    let mut all: Vec<Witness> = ratios.iter().map(|(_, w)| *w).collect();
    for s in &sequences {
        all.extend(s.points.iter().copied());
    }
    let sup = all.iter().map(|w| w.ratio).fold(0.0, f64::max);
    let min = all.iter().map(|w| w.ratio).fold(f64::INFINITY, f64::min);
    all.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    all.truncate(10);
    let sups: Vec<f64> = shell_sups.iter().map(|s| s.1).collect();
    let verdict = trend_verdict(&sups, &sequences);
    RkScan {
        rho: cfg.rho,
        sup,
        min,
        shell_sups,
        witnesses: all,
        points_scanned: ratios.len(),
        sequences,
        verdict,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralCriterion {
    /// `d − 1 < α`: the condition always holds.
    Automatic,
    /// `d − α > 1`: kernel `(|η−ξ|/r)^{α−(d−1)}`.
    PowerKernel,
    /// `d = 2, α = 1`: kernel `log(2r/|η−ξ|)`.
    LogKernel,
    /// No spectral criterion for this `(d, α)`.
    NotAvailable,
}

impl SpectralCriterion {
    pub fn for_regime(dim: usize, alpha: f64) -> Self {
        let d = dim as f64;
        if d - 1.0 < alpha {
            SpectralCriterion::Automatic
        } else if dim == 2 && (alpha - 1.0).abs() < 1e-12 {
            SpectralCriterion::LogKernel
        } else if d - alpha > 1.0 {
            SpectralCriterion::PowerKernel
        } else {
            SpectralCriterion::NotAvailable
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralEntry {
    pub xi: Point,
    pub r: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralCheck {
    pub criterion: SpectralCriterion,
    /// `(r, sup over ξ)`, `r` decreasing.
    pub level_sups: Vec<(f64, f64)>,
    pub table: Vec<SpectralEntry>,
    pub sequences: Vec<FeatureSequence>,
    pub verdict: Verdict,
}

/// `∫_{B_{ξ,r}} k(|η−ξ|/r) μ(dη) / μ(B_{ξ,r})` with `B_{ξ,r}` the trace on
/// the sphere of the Euclidean ball `B(ξ, r)`; `None` when the cap carries
/// no mass.
pub fn spectral_ratio(measure: &SpectralMeasure, alpha: f64, criterion: SpectralCriterion, xi: &Point, r: f64) -> Option<f64> {
    let d = measure.dim() as f64;
    let psi_max = 2.0 * (0.5 * r).min(1.0).asin();
    let cfg = QuadConfig::new(1e-300, 1e-8);
    let chord = |psi: f64| 2.0 * (0.5 * psi).sin();
    let mass = measure.axial_integral(xi, |_| 1.0, 0.0, psi_max, &[], Endpoints::Plain, &cfg);
    if mass <= 0.0 {
        return None;
    }
    let kernel = |psi: f64| -> f64 {
        let t = chord(psi) / r;
        match criterion {
            SpectralCriterion::LogKernel => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    (2.0 / t).ln()
                }
            }
            _ => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    t.powf(alpha - (d - 1.0))
                }
            }
        }
    };
    let num = measure.axial_integral(xi, kernel, 0.0, psi_max, &[], Endpoints::Lo, &cfg);
    Some(num / mass)
}

/// Spectral form of the condition over support points and
/// `r = 2^{-1} … 2^{-9}`, plus the shrinking-ball centers `c_n` at
/// `r = 2^{-n}`.
pub fn rk_spectral_check(measure: &SpectralMeasure, alpha: f64) -> SpectralCheck {
    let criterion = SpectralCriterion::for_regime(measure.dim(), alpha);
    if matches!(criterion, SpectralCriterion::Automatic | SpectralCriterion::NotAvailable) {
        return SpectralCheck {
            criterion,
            level_sups: vec![],
            table: vec![],
            sequences: vec![],
            verdict: if criterion == SpectralCriterion::Automatic {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            },
        };
    }
    let mut grid = support_grid(measure, 32);
    grid.extend(measure.features());
    let grid = half(grid);
    let radii: Vec<f64> = (1..=9).map(|k| 0.5f64.powi(k)).collect();
    let cells: Vec<(Point, f64)> = radii
        .iter()
        .flat_map(|&r| grid.iter().map(move |x| (*x, r)))
        .collect();
    let table: Vec<SpectralEntry> = cells
        .par_iter()
        .filter_map(|(xi, r)| {
            spectral_ratio(measure, alpha, criterion, xi, *r).map(|ratio| SpectralEntry { xi: *xi, r: *r, ratio })
        })
        .collect();
    let level_sups: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let s = table
                .iter()
                .filter(|e| e.r == r)
                .map(|e| e.ratio)
                .fold(0.0, f64::max);
            (r, s)
        })
        .collect();
    let mut sequences = Vec::new();
    let shrinking = measure.shrinking_caps();
    if !shrinking.is_empty() {
        let pts: Vec<Witness> = shrinking
            .iter()
            .filter_map(|c| {
                let r = 0.5f64.powi(c.level as i32);
                spectral_ratio(measure, alpha, criterion, &c.center, r).map(|ratio| Witness { y: c.center, ratio })
            })
            .collect();
        sequences.push(FeatureSequence::new("shrinking-ball centers".into(), pts));
    }
    let sups: Vec<f64> = level_sups.iter().map(|s| s.1).collect();
    let verdict = trend_verdict(&sups, &sequences);
    SpectralCheck {
        criterion,
        level_sups,
        table,
        sequences,
        verdict,
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClassifyConfig {
    pub rk: RkScanConfig,
}

impl ClassifyConfig {
    pub fn quick() -> Self {
        ClassifyConfig { rk: RkScanConfig::quick() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub checksum: String,
    pub d: usize,
    pub alpha: f64,
    pub gamma: GammaEstimate,
    pub strict: StrictGamma,
    pub rk: RkScan,
    pub spectral: SpectralCheck,
    /// ν-form and spectral-form verdicts agree (or the spectral form does
    /// not apply).
    pub forms_agree: bool,
    /// When the condition holds, `γ ≥ d − α − 0.1`.
    pub gamma_consistent: bool,
    /// Harnack's inequality is expected exactly when the condition holds.
    pub harnack_expected: Verdict,
    pub constants: Vec<(String, f64)>,
}

impl ConditionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn classify(model: &StableModel, cfg: &ClassifyConfig) -> Result<ConditionReport> {
    let levy = model.levy();
    let gamma = gamma_estimate(&levy)?;
    let strict = strict_gamma_check(&levy, gamma.gamma);
    let rk = rk_scan(&levy, &cfg.rk);
    let spectral = rk_spectral_check(model.measure(), model.alpha());
    let applicable = !matches!(spectral.verdict, Verdict::Inconclusive) && !matches!(rk.verdict, Verdict::Inconclusive);
    let forms_agree = !applicable || rk.verdict == spectral.verdict;
    let d = model.dim() as f64;
    let gamma_consistent = rk.verdict != Verdict::Holds || gamma.gamma >= d - model.alpha() - 0.1;
    let harnack_expected = match (rk.verdict, spectral.verdict) {
        (Verdict::Inconclusive, v) => v,
        (v, _) => v,
    };
    let constants = vec![
        ("phi_constant".into(), model.phi_constant()),
        ("total_mass".into(), model.total_mass()),
        ("strict_constant".into(), strict.constant),
        ("rk_sup".into(), rk.sup),
    ];
    Ok(ConditionReport {
        checksum: model.checksum(),
        d: model.dim(),
        alpha: model.alpha(),
        gamma,
        strict,
        rk,
        spectral,
        forms_agree,
        gamma_consistent,
        harnack_expected,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    fn model(json: &str) -> StableModel {
        StableModel::from_json(json).unwrap()
    }

    const CROSS: &str = r#"{"d": 2, "alpha": 1.0, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#;
    const ISO2: &str = r#"{"d": 2, "alpha": 1.0, "spectral": {"uniform_mass": 1.0}}"#;
    const CAP3: &str = r#"{"d": 3, "alpha": 0.5, "spectral": {"caps": [{"center": [1, 0, 0], "radius": 0.3, "density": 1.0}]}}"#;
    const NU3: &str = r#"{"d": 3, "alpha": 0.5, "spectral": {"shrinking_balls": {"base": [1, 0, 0], "toward": [0, 1, 0], "start": 2, "count": 6}}}"#;

    #[test]
    fn atomic_gamma_is_one_and_strict() {
        let m = model(CROSS);
        let g = gamma_estimate(&m.levy()).unwrap();
        assert!((g.gamma - 1.0).abs() < 0.05, "{}", g.gamma);
        let s = strict_gamma_check(&m.levy(), g.gamma);
        assert!(s.strict && s.constant < 2.0, "{:?}", s);
    }

    #[test]
    fn uniform_planar_gamma_is_two() {
        let m = model(ISO2);
        let g = gamma_estimate(&m.levy()).unwrap();
        assert!((g.gamma - 2.0).abs() < 0.05, "{}", g.gamma);
        let s = strict_gamma_check(&m.levy(), 2.0);
        assert!(s.strict && s.constant < 1.5, "{:?}", s);
    }

    #[test]
    fn cap_gamma_is_three() {
        let m = model(CAP3);
        let g = gamma_estimate(&m.levy()).unwrap();
        assert!((g.gamma - 3.0).abs() < 0.1, "{}", g.gamma);
    }

    #[test]
    fn one_dimensional_ratio_is_exactly_one() {
        let m = model(r#"{"d": 1, "alpha": 1.0, "spectral": {"atoms": [[[1], 1.0]]}}"#);
        let scan = rk_scan(&m.levy(), &RkScanConfig::default());
        assert!((scan.sup - 1.0).abs() < 1e-12 && (scan.min - 1.0).abs() < 1e-12);
        assert_eq!(scan.verdict, Verdict::Holds);
    }

    #[test]
    fn isotropic_ratio_is_rotation_invariant_and_holds() {
        let m = model(ISO2);
        let v = m.levy();
        let a = v.rk_ratio(&point(&[2.0, 0.0]), 0.5).unwrap();
        let b = v.rk_ratio(&[2.0 * 0.3f64.cos(), 2.0 * 0.3f64.sin(), 0.0], 0.5).unwrap();
        assert!((a - b).abs() < 1e-6 * a);
        let scan = rk_scan(&v, &RkScanConfig::quick());
        assert!(scan.min >= 1.0 - 1e-9);
        assert_eq!(scan.verdict, Verdict::Holds);
        assert_eq!(rk_spectral_check(m.measure(), 1.0).criterion, SpectralCriterion::LogKernel);
        assert_eq!(rk_spectral_check(m.measure(), 1.0).verdict, Verdict::Holds);
    }

    #[test]
    fn atoms_fail_at_alpha_one() {
        let m = model(CROSS);
        let scan = rk_scan(&m.levy(), &RkScanConfig::quick());
        assert_eq!(scan.verdict, Verdict::Fails);
        assert!(scan.sup.is_infinite());
        let spec = rk_spectral_check(m.measure(), 1.0);
        assert_eq!(spec.verdict, Verdict::Fails);
    }

    #[test]
    fn planar_alpha_above_one_is_automatic() {
        let m = model(CROSS);
        let spec = rk_spectral_check(m.measure(), 1.5);
        assert_eq!(spec.criterion, SpectralCriterion::Automatic);
        assert_eq!(spec.verdict, Verdict::Holds);
    }

    #[test]
    fn cap_spectral_ratio_bounded() {
        let m = model(CAP3);
        let spec = rk_spectral_check(m.measure(), 0.5);
        assert_eq!(spec.criterion, SpectralCriterion::PowerKernel);
        assert_eq!(spec.verdict, Verdict::Holds);
        // interior point, small r: ∫_{disk r}(ρ/r)^{-3/2} dA / (π r²) = 4
        let q = spectral_ratio(m.measure(), 0.5, SpectralCriterion::PowerKernel, &point(&[1.0, 0.0, 0.0]), 1e-3).unwrap();
        assert!((q - 4.0).abs() < 1e-3, "{q}");
    }

    #[test]
    fn shrinking_balls_break_the_condition() {
        let m = model(NU3);
        let v = m.levy();
        let scan = rk_scan(&v, &RkScanConfig::quick());
        let seq = &scan.sequences[0];
        assert!(seq.increasing && seq.growth >= FAIL_GROWTH);
        assert_eq!(scan.verdict, Verdict::Fails);
        let spec = rk_spectral_check(m.measure(), 0.5);
        assert_eq!(spec.verdict, Verdict::Fails);
        // cap of radius a at its center with r = 2^{-n}: 4 (r/a)^{3/2} = 4·2^{3n/2}
        for (w, c) in spec.sequences[0].points.iter().zip(m.measure().shrinking_caps()) {
            let exact = 4.0 * 2f64.powf(1.5 * c.level as f64);
            assert!((w.ratio / exact - 1.0).abs() < 1e-3, "{} vs {exact}", w.ratio);
        }
        let g = gamma_estimate(&v).unwrap();
        assert!(!strict_gamma_check(&v, g.gamma).strict);
    }
}
