//! Simulated Green function against `s(v) |v − x|^{α−d}`, with `s` the
//! mean exit time interpolated from runs started on a radial grid.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, Point};
use crate::lab::oracle::{ball_green, time_scale};
use crate::model::StableModel;
use crate::potential::profile_directions;
use crate::simulator::{GreenField, Simulator, SimulatorConfig};

/// Mean exit times on a grid of radii along a few directions.
#[derive(Debug, Clone, Serialize)]
pub struct ExitTimeProfile {
    pub radius: f64,
    pub radii: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// `mean[direction][radius]`.
    pub mean: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
}

impl ExitTimeProfile {
    /// Linear interpolation in `|v|` along the nearest grid direction, with
    /// `s = 0` on the sphere.
    pub fn value(&self, v: &Point) -> f64 {
        let r = norm(v);
        if r >= self.radius {
            return 0.0;
        }
        let k = (0..self.directions.len())
            .max_by(|&a, &b| {
                let da = dot(v, &crate::geometry::point(&self.directions[a]));
                let db = dot(v, &crate::geometry::point(&self.directions[b]));
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        let mut xs = self.radii.clone();
        let mut ys = self.mean[k].clone();
        xs.push(self.radius);
        ys.push(0.0);
        let j = xs.windows(2).position(|w| r >= w[0] && r <= w[1]).unwrap_or(0);
        let t = (r - xs[j]) / (xs[j + 1] - xs[j]);
        ys[j] + t * (ys[j + 1] - ys[j])
    }
}

/// Runs one batch per grid point; `radii` must start at 0 and increase.
pub fn exit_time_profile(
    model: &StableModel,
    radii: &[f64],
    directions: usize,
    sim: &SimulatorConfig,
) -> Result<ExitTimeProfile> {
    if radii.first() != Some(&0.0) || radii.windows(2).any(|w| w[1] <= w[0]) || radii.last() >= Some(&sim.radius) {
        return Err(Error::InvalidModel("profile radii must increase from 0 inside the ball".into()));
    }
    let dirs = if model.dim() == 1 {
        vec![[1.0, 0.0, 0.0]]
    } else {
        profile_directions(model.dim(), directions.max(1))
    };
    let simulator = Simulator::new(model, SimulatorConfig { lattice: 0, ..sim.clone() })?;
    let mut mean = Vec::new();
    let mut std_err = Vec::new();
    let origin = simulator.run(&[0.0; 3]).mean_exit_time();
    for dir in &dirs {
        let (mut m, mut e) = (vec![origin.0], vec![origin.1]);
        for &r in &radii[1..] {
            let (a, b) = simulator.run(&crate::geometry::scale(dir, r)).mean_exit_time();
            m.push(a);
            e.push(b);
        }
        mean.push(m);
        std_err.push(e);
    }
    Ok(ExitTimeProfile {
        radius: sim.radius,
        radii: radii.to_vec(),
        directions: dirs.iter().map(|d| d[..model.dim()].to_vec()).collect(),
        mean,
        std_err,
    })
}

#[derive(Debug, Clone)]
pub struct GreenConfig {
    pub x: Point,
    /// Simulation of the Green field; `lattice` sets its resolution.
    pub sim: SimulatorConfig,
    pub profile_radii: Vec<f64>,
    pub profile_directions: usize,
    pub profile_paths: usize,
    /// Cells with centres beyond this radius are left out of the band.
    pub max_radius: f64,
    /// Radius of the closed-form comparison for isotropic models.
    pub classical_radius: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            x: [0.0; 3],
            sim: SimulatorConfig {
                lattice: 40,
                ..Default::default()
            },
            profile_radii: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
            profile_directions: 1,
            profile_paths: 20_000,
            max_radius: 0.95,
            classical_radius: 0.8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenCell {
    pub cell: usize,
    pub v: Vec<f64>,
    pub g: f64,
    pub g_se: f64,
    pub visits: u64,
    pub s: f64,
    /// `ŝ(v) |v − x|^{α−d}`.
    pub reference: f64,
    pub ratio: f64,
    /// `Ĝ / ((1 − |v|²)^{α/2} |v − x|^{α−d})`.
    pub refined_ratio: f64,
    /// Cell average of the closed-form Green function (isotropic models).
    pub classical: Option<f64>,
    pub confident: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenComparison {
    pub checksum: String,
    pub dim: usize,
    pub alpha: f64,
    pub x: Vec<f64>,
    pub side: usize,
    pub max_radius: f64,
    pub mean_exit_time: (f64, f64),
    pub profile: ExitTimeProfile,
    pub cells: Vec<GreenCell>,
    pub band_lo: f64,
    pub band_hi: f64,
    /// Smallest `c` with every confident ratio in `[1/c, c]`.
    pub band: f64,
    pub refined_band: (f64, f64),
    /// Largest relative deviation from the closed form within
    /// `classical_radius`, over confident cells.
    pub classical_max_rel_err: Option<f64>,
}

impl GreenComparison {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let coords: Vec<String> = (1..=self.dim).map(|i| format!("v{i}")).collect();
        writeln!(w, "cell,{},g,g_se,visits,s,reference,ratio,refined_ratio,classical,confident", coords.join(","))?;
        for c in &self.cells {
            let v: Vec<String> = c.v.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(
                w,
                "{},{},{:.6e},{:.3e},{},{:.6e},{:.6e},{:.6},{:.6},{},{}",
                c.cell,
                v.join(","),
                c.g,
                c.g_se,
                c.visits,
                c.s,
                c.reference,
                c.ratio,
                c.refined_ratio,
                c.classical.map_or(String::new(), |g| format!("{g:.6e}")),
                c.confident as u8
            )?;
        }
        Ok(())
    }
}

/// Average of the closed-form Green function over a lattice cell, with
/// zero outside the ball.
fn classical_cell_average(field: &GreenField, cell: usize, alpha: f64, x: &Point, speed: f64) -> f64 {
    let q: usize = 6;
    let c = field.cell_center(cell);
    let w = 2.0 * field.radius / field.side as f64;
    let d = field.dim;
    let n = q.pow(d as u32);
    let mut total = 0.0;
    for k in 0..n {
        let mut p = c;
        let mut idx = k;
        for coord in p.iter_mut().take(d) {
            *coord += w * (((idx % q) as f64 + 0.5) / q as f64 - 0.5);
            idx /= q;
        }
        total += ball_green(d, alpha, x, &p);
    }
    total / n as f64 / speed
}

/// Compares the simulated Green field from `x` with `ŝ(v)|v − x|^{α−d}`.
pub fn green_ratio_test(model: &StableModel, cfg: &GreenConfig) -> Result<GreenComparison> {
    if norm(&cfg.x) >= 0.5 * cfg.sim.radius {
        return Err(Error::OutOfRange(cfg.x[..model.dim()].to_vec()));
    }
    if cfg.sim.lattice == 0 {
        return Err(Error::InvalidModel("the Green field needs a lattice".into()));
    }
    let (d, alpha) = (model.dim(), model.alpha());
    let batch = Simulator::new(model, cfg.sim.clone())?.run(&cfg.x);
    let field = batch.green_estimate().expect("lattice requested");
    let profile = exit_time_profile(
        model,
        &cfg.profile_radii,
        cfg.profile_directions,
        &SimulatorConfig {
            paths: cfg.profile_paths,
            ..cfg.sim.clone()
        },
    )?;
    let speed = if cfg.sim.radius == 1.0 { time_scale(model).ok() } else { None };
    let cells: Vec<GreenCell> = (0..field.values.len())
        .filter(|&c| field.visits[c] > 0)
        .map(|c| {
            let v = field.cell_center(c);
            let dist = norm(&sub(&v, &cfg.x));
            let s = profile.value(&v);
            let reference = s * dist.powf(alpha - d as f64);
            let g = field.values[c];
            let refined = (1.0 - dot(&v, &v)).max(0.0).powf(alpha / 2.0) * dist.powf(alpha - d as f64);
            GreenCell {
                cell: c,
                v: v[..d].to_vec(),
                g,
                g_se: field.std_err[c],
                visits: field.visits[c],
                s,
                reference,
                ratio: g / reference,
                refined_ratio: g / refined,
                classical: speed.map(|sp| classical_cell_average(&field, c, alpha, &cfg.x, sp)),
                confident: !field.low_confidence(c) && norm(&v) <= cfg.max_radius && reference > 0.0,
            }
        })
        .collect();
    let confident: Vec<&GreenCell> = cells.iter().filter(|c| c.confident).collect();
    let fold = |f: fn(&GreenCell) -> f64| {
        confident
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(f(c)), hi.max(f(c))))
    };
    let (band_lo, band_hi) = fold(|c| c.ratio);
    let refined_band = fold(|c| c.refined_ratio);
    let classical_max_rel_err = speed.map(|_| {
        confident
            .iter()
            .filter(|c| norm(&crate::geometry::point(&c.v)) <= cfg.classical_radius)
            .filter_map(|c| c.classical.map(|g0| (c.g / g0 - 1.0).abs()))
            .fold(0.0, f64::max)
    });
    Ok(GreenComparison {
        checksum: model.checksum(),
        dim: d,
        alpha,
        x: cfg.x[..d].to_vec(),
        side: field.side,
        max_radius: cfg.max_radius,
        mean_exit_time: batch.mean_exit_time(),
        profile,
        cells,
        band_lo,
        band_hi,
        band: band_hi.max(1.0 / band_lo),
        refined_band,
        classical_max_rel_err,
    })
}

/// Ratios of the confident cells whose centre angle lies in
/// `[phi_lo, phi_hi)` (d ≥ 2).
pub fn window_ratios(cmp: &GreenComparison, phi_lo: f64, phi_hi: f64) -> Vec<f64> {
    cmp.cells
        .iter()
        .filter(|c| c.confident && c.v.len() >= 2)
        .filter(|c| {
            let phi = c.v[1].atan2(c.v[0]).rem_euclid(2.0 * std::f64::consts::PI);
            phi >= phi_lo && phi < phi_hi
        })
        .map(|c| c.ratio)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::isotropic_model;
    use crate::stats::ks_two_sample;

    fn quick(model: &StableModel) -> GreenComparison {
        let cfg = GreenConfig {
            sim: SimulatorConfig { paths: 20_000, lattice: 20, ..Default::default() },
            profile_radii: vec![0.0, 0.3, 0.6, 0.8, 0.9],
            profile_paths: 4000,
            ..Default::default()
        };
        green_ratio_test(model, &cfg).unwrap()
    }

    #[test]
    fn cauchy_ball_green_and_rotation_symmetry() {
        let model = isotropic_model(2, 1.0).unwrap();
        let cmp = quick(&model);
        for c in cmp.cells.iter().filter(|c| c.confident && norm(&crate::geometry::point(&c.v)) <= 0.8) {
            let g0 = c.classical.unwrap();
            assert!((c.g - g0).abs() <= 4.0 * c.g_se + 0.05 * g0, "{:?}: {} vs {g0}", c.v, c.g);
        }
        assert!(cmp.band_lo > 0.0 && cmp.band.is_finite());
        let (a, b) = (window_ratios(&cmp, 0.0, 1.5), window_ratios(&cmp, 3.2, 4.7));
        let (_, p) = ks_two_sample(&a, &b);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn profile_interpolates_to_zero_on_the_sphere() {
        let p = ExitTimeProfile {
            radius: 1.0,
            radii: vec![0.0, 0.5],
            directions: vec![vec![1.0, 0.0]],
            mean: vec![vec![0.6, 0.5]],
            std_err: vec![vec![0.0, 0.0]],
        };
        assert!((p.value(&[0.25, 0.0, 0.0]) - 0.55).abs() < 1e-12);
        assert!((p.value(&[0.0, 0.75, 0.0]) - 0.25).abs() < 1e-12);
        assert_eq!(p.value(&[1.0, 0.0, 0.0]), 0.0);
    }
}
