//! The stable model (dimension, index, spectral measure) and the polar view
//! of its Lévy measure `ν(dr dθ) = r^{-1-α} dr μ(dθ)`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{norm, scale, Point};
use crate::measure::{Endpoints, SpectralMeasure, SpectralSpec};
use crate::quad::{integrate, integrate_power_endpoint, QuadConfig};

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub alpha: f64,
    pub spectral: SpectralSpec,
}

#[derive(Debug, Clone)]
pub struct StableModel {
    spec: ModelSpec,
    alpha: f64,
    measure: SpectralMeasure,
    phi_constant: f64,
    second_moment: [[f64; 3]; 3],
}

/// `π / (2 sin(πα/2) Γ(1+α))`.
pub fn phi_constant(alpha: f64) -> f64 {
    std::f64::consts::PI
        / (2.0 * (std::f64::consts::FRAC_PI_2 * alpha).sin() * statrs::function::gamma::gamma(1.0 + alpha))
}

impl StableModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let alpha = spec.alpha;
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidModel(format!(
                "alpha = {alpha} outside the stable range (0, 2)"
            )));
        }
        let measure = SpectralMeasure::from_spec(spec.d, &spec.spectral)?;
        let second_moment = measure.second_moment();
        Ok(Self {
            spec,
            alpha,
            measure,
            phi_constant: phi_constant(alpha),
            second_moment,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.measure.dim()
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }
    pub fn total_mass(&self) -> f64 {
        self.measure.total_mass()
    }
    pub fn phi_constant(&self) -> f64 {
        self.phi_constant
    }
    pub fn second_moment(&self) -> &[[f64; 3]; 3] {
        &self.second_moment
    }

    /// Covariance per unit time of the jumps shorter than `eps`:
    /// `∫_S θθᵀ μ(dθ) · ε^{2−α}/(2−α)`.
    pub fn small_jump_covariance(&self, eps: f64) -> [[f64; 3]; 3] {
        let f = eps.powf(2.0 - self.alpha) / (2.0 - self.alpha);
        let mut c = self.second_moment;
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v *= f;
            }
        }
        c
    }

    /// The same model with `μ` multiplied by `factor`. This is a deterministic
    /// time change: exit positions are unchanged, times and Green functions
    /// scale by `1/factor`.
    pub fn with_scaled_measure(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.measure = self.measure.scaled(factor);
        m.second_moment = m.measure.second_moment();
        let s = &mut m.spec.spectral;
        for a in &mut s.atoms {
            a.1 *= factor;
        }
        for c in &mut s.caps {
            match c {
                crate::measure::CapSpec::Object { density, .. } => *density *= factor,
                crate::measure::CapSpec::Tuple(_, _, density) => *density *= factor,
            }
        }
        s.uniform_mass *= factor;
        if let Some(sb) = &mut s.shrinking_balls {
            sb.density *= factor;
        }
        m
    }

    /// Hex SHA-256 of the canonical JSON form of the model description.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(&self.spec).expect("model spec serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn levy(&self) -> LevyMeasureView<'_> {
        LevyMeasureView {
            model: self,
            cfg: QuadConfig {
                abs_tol: 1e-300,
                rel_tol: 1e-8,
                max_intervals: 4000,
            },
        }
    }
}

/// Integrals of `ν` over balls, reduced to one radial integral per
/// direction. Holds no data of its own.
#[derive(Debug, Clone, Copy)]
pub struct LevyMeasureView<'a> {
    model: &'a StableModel,
    cfg: QuadConfig,
}

/// Radial interval `{s > 0 : |sθ − x| < ρ}` for `θ` at angle `psi` from `x`.
fn chord(r: f64, rho: f64, psi: f64) -> Option<(f64, f64)> {
    let (sp, cp) = psi.sin_cos();
    let disc = rho * rho - r * r * sp * sp;
    if disc <= 0.0 || cp <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let c = r * cp;
    // s₋ s₊ = r² − ρ², avoids cancellation in s₋
    let s_plus = c + root;
    let s_minus = (r * r - rho * rho) / s_plus;
    Some((s_minus, s_plus))
}

impl<'a> LevyMeasureView<'a> {
    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.cfg.rel_tol = rel_tol;
        self
    }

    pub fn model(&self) -> &StableModel {
        self.model
    }

    /// `ν(B(x, ρ))`; `f64::INFINITY` when the ball reaches the origin.
    pub fn nu_ball_mass(&self, x: &Point, rho: f64) -> f64 {
        let r = norm(x);
        if rho >= r {
            return f64::INFINITY;
        }
        let alpha = self.model.alpha;
        let axis = scale(x, 1.0 / r);
        let psi_max = (rho / r).asin();
        self.model.measure.axial_integral(
            &axis,
            |psi| match chord(r, rho, psi) {
                Some((sm, sp)) => (sm.powf(-alpha) - sp.powf(-alpha)) / alpha,
                None => 0.0,
            },
            0.0,
            psi_max,
            &[],
            Endpoints::Hi,
            &self.cfg,
        )
    }

    /// `∫_{B(y,ρ)} |y − v|^{α−d} ν(dv)`; `f64::INFINITY` when the kernel is
    /// not integrable against `ν` (an atom on the ray through `y` with
    /// `d − α ≥ 1`) or the ball reaches the origin.
    pub fn riesz_ball_integral(&self, y: &Point, rho: f64) -> f64 {
        let r = norm(y);
        if rho >= r {
            return f64::INFINITY;
        }
        let alpha = self.model.alpha;
        let d = self.model.dim() as f64;
        if alpha == d {
            return self.nu_ball_mass(y, rho);
        }
        let axis = scale(y, 1.0 / r);
        let psi_max = (rho / r).asin();
        let p = alpha - d;
        let inner_cfg = QuadConfig {
            abs_tol: 1e-300,
            rel_tol: self.cfg.rel_tol * 0.1,
            max_intervals: 2000,
        };
        let inner = |psi: f64| -> f64 {
            let Some((sm, sp)) = chord(r, rho, psi) else {
                return 0.0;
            };
            let c = r * psi.cos();
            let e = r * psi.sin();
            if e == 0.0 {
                // kernel |s − r|^p with the singularity at s = r
                let left = integrate_power_endpoint(
                    |t| (r - t).powf(-1.0 - alpha),
                    p,
                    r - sm,
                    &inner_cfg,
                );
                let right = integrate_power_endpoint(
                    |t| (r + t).powf(-1.0 - alpha),
                    p,
                    sp - r,
                    &inner_cfg,
                );
                return match (left, right) {
                    (Some(a), Some(b)) => a.value + b.value,
                    _ => f64::INFINITY,
                };
            }
            // s = c + e sinh t keeps the peak of width e resolved for any e > 0
            let f = |t: f64| t.cosh().powf(p + 1.0) * (c + e * t.sinh()).powf(-1.0 - alpha);
            let (t_lo, t_hi) = (((sm - c) / e).asinh(), ((sp - c) / e).asinh());
            let breaks = [0.0, -(c / e).asinh(), (c / e).asinh()];
            e.powf(p + 1.0) * integrate(f, t_lo, t_hi, &breaks, &inner_cfg).value
        };
        self.model
            .measure
            .axial_integral(&axis, inner, 0.0, psi_max, &[], Endpoints::Both, &self.cfg)
    }

    /// `R(y) = riesz_ball_integral(y, ρ) / nu_ball_mass(y, ρ)`; `None` when
    /// the ball carries no ν-mass.
    pub fn rk_ratio(&self, y: &Point, rho: f64) -> Option<f64> {
        let m = self.nu_ball_mass(y, rho);
        if m <= 0.0 {
            return None;
        }
        Some(self.riesz_ball_integral(y, rho) / m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{neg, point};
    use std::f64::consts::PI;

    fn model(json: &str) -> StableModel {
        StableModel::from_json(json).unwrap()
    }

    #[test]
    fn one_dimensional_closed_forms() {
        let m = model(r#"{"d": 1, "alpha": 1.0, "spectral": {"atoms": [[[1], 1.0]]}}"#);
        let v = m.levy();
        assert!((v.nu_ball_mass(&point(&[2.0]), 1.0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((v.nu_ball_mass(&point(&[4.0]), 2.0) - 1.0 / 3.0).abs() < 1e-14);
        assert!((v.riesz_ball_integral(&point(&[2.0]), 0.5) - 4.0 / 15.0).abs() < 1e-14);
        assert!(v.nu_ball_mass(&point(&[1.0]), 1.0).is_infinite());
    }

    #[test]
    fn phi_constant_cauchy() {
        assert!((phi_constant(1.0) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_ball_mass_matches_area_integral() {
        // ν has density |v|^{-2-α}·(m/2π) for uniform μ of mass m in d = 2.
        let m = model(r#"{"d": 2, "alpha": 1.0, "spectral": {"uniform_mass": 1.0}}"#);
        let x = point(&[2.0, 0.0]);
        let got = m.levy().nu_ball_mass(&x, 0.5);
        let cfg = QuadConfig::new(1e-14, 1e-12);
        // polar coordinates around x
        let reference = integrate(
            |rr| {
                integrate(
                    |t| {
                        let v = [2.0 + rr * t.cos(), rr * t.sin()];
                        rr * (v[0] * v[0] + v[1] * v[1]).powf(-1.5) / (2.0 * PI)
                    },
                    0.0,
                    2.0 * PI,
                    &[],
                    &cfg,
                )
                .value
            },
            0.0,
            0.5,
            &[],
            &cfg,
        )
        .value;
        assert!((got - reference).abs() < 1e-8 * reference, "{got} {reference}");
    }

    #[test]
    fn riesz_matches_area_integral_in_plane() {
        let m = model(r#"{"d": 2, "alpha": 0.6, "spectral": {"uniform_mass": 1.0, "caps": [{"center": [1, 0.3], "radius": 0.4, "density": 2.0}]}}"#);
        let y = point(&[1.5, 0.4]);
        let got = m.levy().riesz_ball_integral(&y, 0.5);
        // integrate in polar coordinates around y; the Riesz kernel r^{α−2}
        // times the area element r dr is integrable at r = 0
        let alpha: f64 = 0.6;
        let cfg = QuadConfig::new(1e-14, 1e-10);
        let measure = m.measure();
        let density = |v: [f64; 2]| {
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let th = point(&[v[0] / n, v[1] / n]);
            let mut dens = 1.0 / (2.0 * PI);
            for c in measure.caps() {
                if crate::geometry::angle_between(&c.center, &th) <= c.radius {
                    dens += c.density;
                }
            }
            dens * n.powf(-2.0 - alpha)
        };
        let reference = integrate(
            |rr| {
                integrate(
                    |t| {
                        let v = [y[0] + rr * t.cos(), y[1] + rr * t.sin()];
                        rr.powf(alpha - 2.0) * rr * density(v)
                    },
                    0.0,
                    2.0 * PI,
                    &[],
                    &QuadConfig { max_intervals: 20000, ..cfg },
                )
                .value
            },
            0.0,
            0.5,
            &[],
            &QuadConfig { max_intervals: 400, ..cfg },
        )
        .value;
        assert!((got - reference).abs() < 1e-4 * reference, "{got} {reference}");
    }

    #[test]
    fn atom_on_ray_makes_riesz_infinite_in_plane() {
        let m = model(r#"{"d": 2, "alpha": 1.0, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#);
        assert!(m.levy().riesz_ball_integral(&point(&[2.0, 0.0]), 0.5).is_infinite());
        let off = m.levy().riesz_ball_integral(&point(&[2.0, 0.1]), 0.5);
        assert!(off.is_finite() && off > 0.0);
        // the α < d − 1 boundary case: |s−r|^{-1} is not integrable
        let m3 = model(r#"{"d": 2, "alpha": 1.5, "spectral": {"atoms": [[[1, 0], 1.0], [[0, 1], 1.0]]}}"#);
        assert!(m3.levy().riesz_ball_integral(&point(&[2.0, 0.0]), 0.5).is_finite());
    }

    #[test]
    fn homogeneity_and_symmetry_cap_model_3d() {
        let m = model(r#"{"d": 3, "alpha": 0.5, "spectral": {"caps": [{"center": [0, 0, 1], "radius": 0.3, "density": 1.0}], "uniform_mass": 0.5}}"#);
        let v = m.levy();
        let x = point(&[0.3, 0.2, 1.0]);
        let base = v.nu_ball_mass(&x, 0.4);
        for r in [0.5, 2.0, 5.0] {
            let scaled = v.nu_ball_mass(&scale(&x, r), 0.4 * r);
            assert!((scaled - r.powf(-0.5) * base).abs() < 1e-7 * base);
        }
        assert!((v.nu_ball_mass(&neg(&x), 0.4) - base).abs() < 1e-8 * base);
    }

    #[test]
    fn checksum_is_stable_hex() {
        let m = model(r#"{"d": 2, "alpha": 1.0, "spectral": {"uniform_mass": 1.0}}"#);
        let c = m.checksum();
        assert_eq!(c.len(), 64);
        assert_eq!(c, m.clone().checksum());
    }
}
