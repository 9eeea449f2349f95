//! Potential kernel `V(x) = ∫₀^∞ p_t(x) dt` on the sphere and the potential
//! measure of balls.
//!
//! By scaling, `V(sθ) = s^{α−d} V(θ)` and
//! `V(θ) = α ∫₀^∞ s^{d−α−1} p₁(sθ) ds`. The radial integral is split into
//! dyadic panels up to `S_max`, measured in units of the spread
//! `L = (max_S Φ)^{1/α}` of `p₁`; the remainder is extrapolated from the
//! decay rate of the last two panels. When that rate says the integrand
//! decays no faster than `s^{-1}`, the direction is marked divergent.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::ExponentEvaluator;
use crate::geometry::{angle_between, dot, fibonacci_sphere, norm, orthonormal_frame, polar2, scale, sphere_area, Point};
use crate::model::{LevyMeasureView, StableModel};
use crate::quad::{gauss_legendre, integrate, integrate_power_endpoint, QuadConfig};

/// Rejects `d ≤ α`, where `V ≡ ∞`.
pub fn require_transient(model: &StableModel) -> Result<()> {
    if (model.dim() as f64) <= model.alpha() {
        return Err(Error::NotDefined(format!(
            "V is identically infinite for d = {} <= alpha = {} (recurrent case)",
            model.dim(),
            model.alpha()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileConfig {
    /// Number of dyadic panels beyond `[0, L]`; `S_max = 2^panels · L`.
    pub panels: u32,
    pub rel_tol: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            panels: 8,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialProfile {
    pub dim: usize,
    pub alpha: f64,
    pub directions: Vec<Point>,
    /// `V(θ)`; `f64::INFINITY` marks a divergent direction.
    pub values: Vec<f64>,
    /// Extrapolated contribution of `s > S_max` (infinite when divergent).
    pub tail: Vec<f64>,
    /// Decay exponent `κ` of the radial integrand `s^{d−α−1}p₁(sθ) ≈ s^{-κ}`
    /// fitted on the last two panels.
    pub tail_exponent: Vec<f64>,
    /// Truncated integrals `α∫₀^S` for `S = L, 2L, 4L, …, S_max`.
    pub partial: Vec<Vec<f64>>,
    pub config: ProfileConfig,
}

/// Sphere directions: equispaced angles for `d = 2`, a Fibonacci lattice for
/// `d = 3`, `±1` for `d = 1`.
pub fn profile_directions(dim: usize, n: usize) -> Vec<Point> {
    match dim {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..n).map(|i| polar2(2.0 * PI * i as f64 / n as f64)).collect(),
        _ => fibonacci_sphere(n),
    }
}

fn radial(eval: &ExponentEvaluator, theta: &Point, length: f64, cfg: &ProfileConfig) -> (f64, f64, f64, Vec<f64>) {
    let m = eval.model();
    let d = m.dim() as f64;
    let alpha = m.alpha();
    let p0 = eval.density(&[0.0; 3]);
    let density = |s: f64| {
        // absolute accuracy scaled to the slowest possible decay
        let floor = 1e-10 * p0 * (1.0 + s / length).powf(-d - alpha);
        eval.density_with(
            &scale(theta, s),
            &QuadConfig {
                abs_tol: floor,
                rel_tol: 1e-7,
                max_intervals: 4000,
            },
        )
    };
    let qc = QuadConfig {
        abs_tol: 1e-14 * p0,
        rel_tol: cfg.rel_tol,
        max_intervals: 200,
    };
    let expo = d - alpha - 1.0;
    let first = integrate_power_endpoint(&density, expo, length, &qc)
        .expect("d > α keeps the origin integrable")
        .value;
    let mut panels = vec![first];
    let mut lo = length;
    for _ in 0..cfg.panels {
        let hi = 2.0 * lo;
        panels.push(integrate(|s| s.powf(expo) * density(s), lo, hi, &[], &qc).value);
        lo = hi;
    }
    let mut partial = Vec::with_capacity(panels.len());
    let mut acc = 0.0;
    for p in &panels {
        acc += alpha * p;
        partial.push(acc);
    }
    let n = panels.len();
    let ratio = panels[n - 1] / panels[n - 2];
    let kappa = 1.0 - ratio.log2();
    let tail = if ratio >= 1.0 || !ratio.is_finite() {
        f64::INFINITY
    } else {
        alpha * panels[n - 1] * ratio / (1.0 - ratio)
    };
    (acc + tail, tail, kappa, partial)
}

impl PotentialProfile {
    pub fn compute(eval: &ExponentEvaluator, directions: Vec<Point>, cfg: ProfileConfig) -> Result<Self> {
        let m = eval.model();
        require_transient(m)?;
        let d = m.dim();
        let n = directions.len();
        // antipodal pairs in the planar grid share one value
        let mirrored = d == 2 && n % 2 == 0 && directions.iter().enumerate().take(n / 2).all(|(i, t)| {
            let o = &directions[i + n / 2];
            (t[0] + o[0]).abs() < 1e-12 && (t[1] + o[1]).abs() < 1e-12
        });
        let count = if mirrored { n / 2 } else { n };
        let length = eval.phi_extremes().1.powf(1.0 / m.alpha());
        let rows: Vec<(f64, f64, f64, Vec<f64>)> = directions[..count]
            .par_iter()
            .map(|t| radial(eval, t, length, &cfg))
            .collect();
        let mut values = Vec::with_capacity(n);
        let mut tail = Vec::with_capacity(n);
        let mut tail_exponent = Vec::with_capacity(n);
        let mut partial = Vec::with_capacity(n);
        for i in 0..n {
            let r = &rows[i % count];
            values.push(r.0);
            tail.push(r.1);
            tail_exponent.push(r.2);
            partial.push(r.3.clone());
        }
        Ok(Self {
            dim: d,
            alpha: m.alpha(),
            directions,
            values,
            tail,
            tail_exponent,
            partial,
            config: cfg,
        })
    }

    pub fn uniform(eval: &ExponentEvaluator, n: usize) -> Result<Self> {
        Self::compute(eval, profile_directions(eval.model().dim(), n), ProfileConfig::default())
    }

    pub fn divergent(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i].is_infinite()).collect()
    }

    /// `min V` over the finite entries (the lower-bound constant `c₀`).
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    }

    /// `V(θ)` for a unit `θ`: periodic linear interpolation in angle for
    /// `d = 2`, inverse-distance weighting of the 6 nearest directions for
    /// `d = 3`.
    pub fn at(&self, theta: &Point) -> f64 {
        match self.dim {
            1 => {
                if theta[0] >= 0.0 {
                    self.values[0]
                } else {
                    self.values[1 % self.values.len()]
                }
            }
            2 => {
                let n = self.directions.len();
                let t0 = self.directions[0][1].atan2(self.directions[0][0]);
                let u = (theta[1].atan2(theta[0]) - t0).rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
                let i = (u.floor() as usize) % n;
                let f = u - u.floor();
                let (a, b) = (self.values[i], self.values[(i + 1) % n]);
                if f == 0.0 {
                    a
                } else if f == 1.0 {
                    b
                } else {
                    (1.0 - f) * a + f * b
                }
            }
            _ => {
                let mut best: Vec<(f64, usize)> = self
                    .directions
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (angle_between(d, theta), i))
                    .collect();
                best.select_nth_unstable_by(5, |a, b| a.0.partial_cmp(&b.0).unwrap());
                let mut num = 0.0;
                let mut den = 0.0;
                for &(a, i) in &best[..6] {
                    if a < 1e-12 {
                        return self.values[i];
                    }
                    let w = 1.0 / (a * a);
                    num += w * self.values[i];
                    den += w;
                }
                num / den
            }
        }
    }

    /// `V(x) = |x|^{α−d} V(x/|x|)`.
    pub fn kernel(&self, x: &Point) -> f64 {
        let r = norm(x);
        r.powf(self.alpha - self.dim as f64) * self.at(&scale(x, 1.0 / r))
    }

    /// `𝕍(B(x, ρ)) = ∫_S V(θ) (s₊^α − s₋^α)/α dθ` with `(s₋, s₊)` the chord
    /// of the ray through `θ` in the ball.
    pub fn vmass_ball(&self, x: &Point, rho: f64) -> f64 {
        let alpha = self.alpha;
        let r = norm(x);
        let chord = |psi: f64| -> f64 {
            let (sp, cp) = psi.sin_cos();
            let disc = rho * rho - r * r * sp * sp;
            if disc <= 0.0 {
                return 0.0;
            }
            let root = disc.sqrt();
            let hi = r * cp + root;
            if hi <= 0.0 {
                return 0.0;
            }
            let lo = (r * cp - root).max(0.0);
            (hi.powf(alpha) - lo.powf(alpha)) / alpha
        };
        let axis = if r > 0.0 { scale(x, 1.0 / r) } else { [1.0, 0.0, 0.0] };
        let psi_max = if r > rho { (rho / r).asin() } else { PI };
        let cfg = QuadConfig::new(1e-14, 1e-9);
        match self.dim {
            1 => {
                let mut acc = 0.0;
                for (i, t) in self.directions.iter().enumerate() {
                    let psi = if dot(t, &axis) > 0.0 { 0.0 } else { PI };
                    acc += self.values[i] * chord(psi);
                }
                acc
            }
            2 => {
                let tx = axis[1].atan2(axis[0]);
                let n = self.directions.len();
                let t0 = self.directions[0][1].atan2(self.directions[0][0]);
                let step = 2.0 * PI / n as f64;
                let mut breaks = Vec::new();
                let k0 = ((tx - psi_max - t0) / step).floor() as i64;
                let k1 = ((tx + psi_max - t0) / step).ceil() as i64;
                for k in k0..=k1 {
                    breaks.push(t0 + k as f64 * step);
                }
                let (a, b) = (tx - psi_max, tx + psi_max);
                let inside: Vec<usize> = (0..n)
                    .filter(|&i| {
                        let t = self.directions[i][1].atan2(self.directions[i][0]);
                        let dpsi = (t - tx + PI).rem_euclid(2.0 * PI) - PI;
                        dpsi.abs() <= psi_max + step
                    })
                    .collect();
                if inside.iter().any(|&i| self.values[i].is_infinite()) {
                    return f64::INFINITY;
                }
                integrate(|t| self.at(&polar2(t)) * chord((t - tx).abs()), a, b, &breaks, &cfg).value
            }
            _ => {
                let (e1, e2) = orthonormal_frame(&axis);
                let (xs, ws) = gauss_legendre(64);
                let na = 128;
                let c_lo = psi_max.cos();
                let mut acc = 0.0;
                for (xg, wg) in xs.iter().zip(&ws) {
                    let c = c_lo + (1.0 - c_lo) * 0.5 * (xg + 1.0);
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    let f = chord(c.acos());
                    if f == 0.0 {
                        continue;
                    }
                    let mut ring = 0.0;
                    for j in 0..na {
                        let az = 2.0 * PI * (j as f64 + 0.5) / na as f64;
                        let mut t = scale(&axis, c);
                        for k in 0..3 {
                            t[k] += s * (az.cos() * e1[k] + az.sin() * e2[k]);
                        }
                        ring += self.at(&t);
                    }
                    acc += wg * 0.5 * (1.0 - c_lo) * f * ring * 2.0 * PI / na as f64;
                }
                acc
            }
        }
    }

    /// `𝕍(B(0, 1)) = (1/α) ∫_S V`, from the grid average.
    pub fn vmass_unit_ball_by_average(&self) -> f64 {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        let area = if self.dim == 1 { 2.0 } else { sphere_area(self.dim) };
        area * mean / self.alpha
    }

    /// Largest difference between neighbouring grid values; for `d = 2`
    /// neighbours are consecutive angles (every `stride`-th entry).
    pub fn modulus(&self, stride: usize) -> f64 {
        match self.dim {
            2 => {
                let n = self.directions.len();
                (0..n)
                    .step_by(stride)
                    .map(|i| (self.values[i] - self.values[(i + stride) % n]).abs())
                    .fold(0.0, f64::max)
            }
            _ => {
                let n = self.directions.len();
                let spacing = (sphere_area(3) / n as f64).sqrt() * 1.5;
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in i + 1..n {
                        if angle_between(&self.directions[i], &self.directions[j]) < spacing {
                            worst = worst.max((self.values[i] - self.values[j]).abs());
                        }
                    }
                }
                worst
            }
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let names = ["theta1", "theta2", "theta3"];
        writeln!(out, "{},V,tail_bound,divergent", names[..self.dim.max(1)].join(","))?;
        for (i, t) in self.directions.iter().enumerate() {
            for c in &t[..self.dim.max(1)] {
                write!(out, "{c},")?;
            }
            writeln!(out, "{},{},{}", self.values[i], self.tail[i], self.values[i].is_infinite() as u8)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityVerdict {
    Continuous,
    NotContinuous,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub gamma: f64,
    pub threshold: f64,
    pub gamma_above_threshold: bool,
    pub modulus_coarse: f64,
    pub modulus_fine: f64,
    pub modulus_ratio: f64,
    pub divergent_directions: Vec<Vec<f64>>,
    pub min_value: f64,
    pub verdict: ContinuityVerdict,
}

/// Continuity check of `V` on the sphere. `coarse` and `fine` must be the
/// same kind of grid with the fine one at half the spacing; for `d = 2` pass
/// the same fine profile twice and the coarse modulus is taken on every
/// second node.
pub fn check_continuity(coarse: &PotentialProfile, fine: &PotentialProfile, gamma: f64) -> ContinuityReport {
    let same = std::ptr::eq(coarse, fine);
    let modulus_fine = fine.modulus(1);
    let modulus_coarse = if same { fine.modulus(2) } else { coarse.modulus(1) };
    let mut div: Vec<Vec<f64>> = fine
        .divergent()
        .into_iter()
        .map(|i| fine.directions[i][..fine.dim].to_vec())
        .collect();
    if !same {
        div.extend(coarse.divergent().into_iter().map(|i| coarse.directions[i][..coarse.dim].to_vec()));
    }
    let finite_max = fine.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let ratio = modulus_fine / modulus_coarse;
    let verdict = if !div.is_empty() {
        ContinuityVerdict::NotContinuous
    } else if modulus_fine <= 1e-6 * finite_max || ratio <= 0.85 {
        // a Hölder modulus of exponent κ shrinks by 2^{-κ} per halving;
        // near an atom κ = γ − (d − 2α) can be well below 1
        ContinuityVerdict::Continuous
    } else if ratio > 0.95 {
        ContinuityVerdict::NotContinuous
    } else {
        ContinuityVerdict::Inconclusive
    };
    ContinuityReport {
        gamma,
        threshold: fine.dim as f64 - 2.0 * fine.alpha,
        gamma_above_threshold: gamma > fine.dim as f64 - 2.0 * fine.alpha,
        modulus_coarse,
        modulus_fine,
        modulus_ratio: ratio,
        divergent_directions: div,
        min_value: fine.min_value(),
        verdict,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BallMassReport {
    pub radii: Vec<f64>,
    /// `sup_x ν(B(x,r/12)) / (r^{−2α} 𝕍(B(x,r/2)))` per radius.
    pub sup_ratios: Vec<f64>,
    pub witnesses: Vec<Vec<f64>>,
    pub bounded: bool,
}

/// Scans `x` over unit directions and `r ∈ {1/2, 1/4, 1/8, 1/16}`.
pub fn check_ball_mass_bound(profile: &PotentialProfile, levy: &LevyMeasureView<'_>, scan: &[Point]) -> BallMassReport {
    let radii = vec![0.5, 0.25, 0.125, 0.0625];
    let alpha = profile.alpha;
    let mut sup_ratios = Vec::new();
    let mut witnesses = Vec::new();
    for &r in &radii {
        let vals: Vec<(f64, Point)> = scan
            .par_iter()
            .map(|x| {
                let num = levy.nu_ball_mass(x, r / 12.0);
                let den = r.powf(-2.0 * alpha) * profile.vmass_ball(x, r / 2.0);
                (if num == 0.0 { 0.0 } else { num / den }, *x)
            })
            .collect();
        let (best, at) = vals
            .into_iter()
            .fold((0.0, [0.0; 3]), |acc, v| if v.0 > acc.0 { v } else { acc });
        sup_ratios.push(best);
        witnesses.push(at[..profile.dim].to_vec());
    }
    let bounded = sup_ratios.iter().all(|v| v.is_finite())
        && sup_ratios.windows(2).all(|w| w[1] <= 1.2 * w[0]);
    BallMassReport {
        radii,
        sup_ratios,
        witnesses,
        bounded,
    }
}
