//! Harnack ratios `ω̂^{x₁}(A) / ω̂^{x₂}(A)` of simulated harmonic measure
//! over refining partitions of the complement of the ball.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::ExponentEvaluator;
use crate::geometry::{norm, Point};
use crate::model::StableModel;
use crate::simulator::{ExitBatch, Partition, Simulator, SimulatorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnackVerdict {
    HarnackConsistent,
    HarnackViolating,
    Inconclusive,
}

impl HarnackVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            HarnackVerdict::HarnackConsistent => "Harnack-consistent",
            HarnackVerdict::HarnackViolating => "Harnack-violating",
            HarnackVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnackConfig {
    pub x1: Point,
    pub x2: Point,
    pub levels: Vec<Partition>,
    pub sim: SimulatorConfig,
    /// Minimum exit count per cell and point for a ratio to enter the sup.
    pub count_floor: u64,
    /// Confidence intervals are at level `1 − ci_alpha`.
    pub ci_alpha: f64,
    /// Rescale μ so that `min Φ = 1` on the sphere before simulating. This
    /// is a time change and leaves harmonic measure unchanged.
    pub normalize: bool,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        HarnackConfig {
            x1: [0.0; 3],
            x2: [0.5, 0.0, 0.0],
            levels: default_levels(),
            sim: SimulatorConfig {
                paths: 200_000,
                ..Default::default()
            },
            count_floor: 50,
            ci_alpha: 0.05,
            normalize: true,
        }
    }
}

/// Annuli refining towards the sphere, with the angular resolution doubled
/// at each level.
pub fn default_levels() -> Vec<Partition> {
    (0..3)
        .map(|k| {
            let mut radii = vec![1.0];
            for j in (0..=k).rev() {
                radii.push(1.0 + 0.5 / 2f64.powi(j as i32 + 1));
            }
            radii.extend_from_slice(&[1.5, 2.0, 4.0, f64::INFINITY]);
            radii.dedup();
            Partition::new(radii, 8 << k)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackLevel {
    pub radii: Vec<f64>,
    pub sectors: usize,
    pub cells_used: usize,
    /// No cell reached the count floor.
    pub skipped: bool,
    pub sup: Option<f64>,
    pub cell: Option<usize>,
    /// `(r_lo, r_hi, sector)` of the maximizing cell.
    pub bounds: Option<(f64, f64, usize)>,
    pub counts: (u64, u64),
    /// Ratio interval from the two Wilson intervals.
    pub ci: (f64, f64),
    /// Largest lower end of the ratio intervals over the included cells.
    pub sup_lower: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub checksum: String,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub paths: usize,
    pub count_floor: u64,
    pub censored: (f64, f64),
    pub mean_exit_time: (f64, f64),
    pub levels: Vec<HarnackLevel>,
    pub verdict: HarnackVerdict,
}

impl HarnackReport {
    /// Sup ratios of the levels that were not skipped.
    pub fn sups(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.sup).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "level,sectors,cells_used,sup,ci_lo,ci_hi,count1,count2,r_lo,r_hi,sector")?;
        for (k, l) in self.levels.iter().enumerate() {
            let (r_lo, r_hi, s) = l.bounds.unwrap_or((f64::NAN, f64::NAN, 0));
            writeln!(
                w,
                "{k},{},{},{},{},{},{},{},{r_lo},{r_hi},{s}",
                l.sectors,
                l.cells_used,
                l.sup.unwrap_or(f64::NAN),
                l.ci.0,
                l.ci.1,
                l.counts.0,
                l.counts.1
            )?;
        }
        Ok(())
    }
}

fn level_sup(b1: &ExitBatch, b2: &ExitBatch, partition: &Partition, floor: u64, ci_alpha: f64) -> HarnackLevel {
    let h1 = b1.harmonic_measure(partition, ci_alpha);
    let h2 = b2.harmonic_measure(partition, ci_alpha);
    let mut level = HarnackLevel {
        radii: partition.radii.clone(),
        sectors: partition.sectors,
        cells_used: 0,
        skipped: true,
        sup: None,
        cell: None,
        bounds: None,
        counts: (0, 0),
        ci: (f64::NAN, f64::NAN),
        sup_lower: None,
    };
    for (c1, c2) in h1.cells.iter().zip(&h2.cells) {
        if c1.count < floor || c2.count < floor {
            continue;
        }
        level.cells_used += 1;
        let r = c1.freq / c2.freq;
        let lower = c1.lo / c2.hi;
        if level.sup_lower.is_none_or(|s| lower > s) {
            level.sup_lower = Some(lower);
        }
        if level.sup.is_none_or(|s| r > s) {
            level.sup = Some(r);
            level.cell = Some(c1.cell);
            level.bounds = Some(partition.cell_bounds(b1.dim, c1.cell));
            level.counts = (c1.count, c2.count);
            level.ci = (c1.lo / c2.hi, c1.hi / c2.lo);
        }
    }
    level.skipped = level.sup.is_none();
    level
}

/// Rise of the point sups over the last two steps above which a run
/// without significant growth is still not called a plateau.
const PLATEAU_RISE: f64 = 1.25;

/// A level grows when its largest interval lower end exceeds the previous
/// level's sup. Two growing steps in a row read as a violation; two
/// non-growing steps with the sups rising by less than [`PLATEAU_RISE`]
/// read as a plateau.
fn trend(levels: &[HarnackLevel]) -> HarnackVerdict {
    let used: Vec<(f64, f64)> = levels
        .iter()
        .filter_map(|l| Some((l.sup?, l.sup_lower?)))
        .collect();
    if used.len() < 3 {
        return HarnackVerdict::Inconclusive;
    }
    let grows: Vec<bool> = used.windows(2).map(|w| w[1].1 > w[0].0).collect();
    let last = &grows[grows.len() - 2..];
    if last.iter().all(|&g| g) {
        HarnackVerdict::HarnackViolating
    } else if last.iter().all(|&g| !g) && used[used.len() - 1].0 < PLATEAU_RISE * used[used.len() - 3].0 {
        HarnackVerdict::HarnackConsistent
    } else {
        HarnackVerdict::Inconclusive
    }
}

/// Harnack report from two finished batches.
pub fn harnack_from_batches(
    b1: &ExitBatch,
    b2: &ExitBatch,
    levels: &[Partition],
    count_floor: u64,
    ci_alpha: f64,
) -> HarnackReport {
    let levels: Vec<HarnackLevel> = levels
        .iter()
        .map(|p| level_sup(b1, b2, p, count_floor, ci_alpha))
        .collect();
    HarnackReport {
        checksum: b1.checksum.clone(),
        x1: b1.x0[..b1.dim].to_vec(),
        x2: b2.x0[..b2.dim].to_vec(),
        paths: b1.paths.len().min(b2.paths.len()),
        count_floor,
        censored: (b1.censored_fraction(), b2.censored_fraction()),
        mean_exit_time: (b1.mean_exit_time().0, b2.mean_exit_time().0),
        verdict: trend(&levels),
        levels,
    }
}

/// Simulates exits from `x1` and `x2` with the same seed and compares
/// harmonic measure cell by cell on every partition level.
pub fn harnack_test(model: &StableModel, cfg: &HarnackConfig) -> Result<HarnackReport> {
    for x in [&cfg.x1, &cfg.x2] {
        if norm(x) > 0.5 * cfg.sim.radius {
            return Err(Error::OutOfRange(x[..model.dim()].to_vec()));
        }
    }
    let scaled;
    let model = if cfg.normalize {
        let phi_min = ExponentEvaluator::new(model)?.phi_extremes().0;
        if !(phi_min > 0.0) {
            return Err(Error::InvalidModel("Φ vanishes on the sphere; the process is degenerate".into()));
        }
        scaled = model.with_scaled_measure(1.0 / phi_min);
        &scaled
    } else {
        model
    };
    let sim = Simulator::new(model, SimulatorConfig { lattice: 0, ..cfg.sim.clone() })?;
    let b1 = sim.run(&cfg.x1);
    let b2 = if cfg.x2 == cfg.x1 { b1.clone() } else { sim.run(&cfg.x2) };
    Ok(harnack_from_batches(&b1, &b2, &cfg.levels, cfg.count_floor, cfg.ci_alpha))
}

/// Sup of the cell ratio over ordered pairs of start points with
/// `|x| < max_norm`.
pub fn pairwise_sup(batches: &[&ExitBatch], partition: &Partition, count_floor: u64, max_norm: f64) -> Option<f64> {
    let inside: Vec<&ExitBatch> = batches.iter().copied().filter(|b| norm(&b.x0) < max_norm).collect();
    let mut sup: Option<f64> = None;
    for (i, a) in inside.iter().enumerate() {
        for (j, b) in inside.iter().enumerate() {
            if i != j {
                if let Some(s) = level_sup(a, b, partition, count_floor, 0.05).sup {
                    sup = Some(sup.map_or(s, |t: f64| t.max(s)));
                }
            }
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::isotropic_model;

    fn levels(v: &[(f64, f64)]) -> Vec<HarnackLevel> {
        v.iter()
            .map(|&(sup, lower)| HarnackLevel {
                radii: vec![],
                sectors: 0,
                cells_used: 1,
                skipped: false,
                sup: Some(sup),
                cell: None,
                bounds: None,
                counts: (0, 0),
                ci: (lower, sup),
                sup_lower: Some(lower),
            })
            .collect()
    }

    #[test]
    fn trend_rules() {
        let t = |v: &[(f64, f64)]| trend(&levels(v));
        assert_eq!(t(&[(2.3, 2.2), (2.5, 2.2), (2.7, 2.3)]), HarnackVerdict::HarnackConsistent);
        assert_eq!(t(&[(4.0, 3.5), (5.0, 4.4), (6.2, 5.5)]), HarnackVerdict::HarnackViolating);
        assert_eq!(t(&[(4.0, 3.5), (5.0, 4.4), (5.1, 4.0)]), HarnackVerdict::Inconclusive);
        assert_eq!(t(&[(4.0, 3.5), (5.0, 4.4)]), HarnackVerdict::Inconclusive);
        // sups climbing within their intervals
        assert_eq!(t(&[(8.8, 7.5), (11.0, 8.7), (11.6, 8.4)]), HarnackVerdict::Inconclusive);
    }

    #[test]
    fn equal_points_give_unit_ratio() {
        let model = isotropic_model(2, 1.0).unwrap();
        let cfg = HarnackConfig {
            x2: [0.0; 3],
            sim: SimulatorConfig { paths: 4000, ..Default::default() },
            levels: vec![Partition::new(vec![1.0, 2.0, f64::INFINITY], 4)],
            ..Default::default()
        };
        let rep = harnack_test(&model, &cfg).unwrap();
        let l = &rep.levels[0];
        assert_eq!(l.sup, Some(1.0));
        assert!(l.ci.0 <= 1.0 && l.ci.1 >= 1.0);
    }

    #[test]
    fn larger_point_sets_never_lower_the_sup() {
        let model = isotropic_model(2, 1.0).unwrap();
        let sim = Simulator::new(&model, SimulatorConfig { paths: 3000, ..Default::default() }).unwrap();
        let starts = [[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [0.0, -0.15, 0.0], [0.4, 0.0, 0.0], [-0.3, 0.3, 0.0]];
        let batches: Vec<ExitBatch> = starts.iter().map(|x| sim.run(x)).collect();
        let refs: Vec<&ExitBatch> = batches.iter().collect();
        let part = Partition::new(vec![1.0, 1.5, f64::INFINITY], 8);
        let small = pairwise_sup(&refs, &part, 50, 0.25).unwrap();
        let large = pairwise_sup(&refs, &part, 50, 0.5).unwrap();
        assert!(large >= small && small >= 1.0, "{small} {large}");
    }

    #[test]
    fn out_of_range_start_is_refused() {
        let model = isotropic_model(2, 1.0).unwrap();
        let cfg = HarnackConfig { x2: [0.6, 0.0, 0.0], ..Default::default() };
        assert!(harnack_test(&model, &cfg).is_err());
    }
}
