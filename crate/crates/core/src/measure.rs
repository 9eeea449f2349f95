//! Spectral measures on the unit sphere.
//!
//! A measure is a finite sum of four generator families: atoms, caps of
//! constant surface density, a rotation-invariant component, and a
//! "shrinking balls" family of ever smaller caps along a great circle.
//! Every atom and cap is stored together with its antipode, so symmetry
//! holds by construction.
//!
//! Most integrals against the measure that the crate needs depend on the
//! direction only through its angle `ψ` to some axis. [`SpectralMeasure::axial_integral`]
//! evaluates those exactly for atoms and with adaptive quadrature against the
//! closed-form angular weight of each cap.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    angle_between, dot, neg, normalize, orthonormal_frame, point, polar2, scale, sphere_area,
    Point,
};
use crate::quad::{integrate, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub direction: Point,
    pub mass: f64,
}

/// Constant surface density on the spherical cap of angular radius `radius`
/// around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cap {
    pub center: Point,
    pub radius: f64,
    pub density: f64,
}

/// Caps of angular radius `4^{-n}`, `n = start..start+count`, with centers
/// on a great circle through `base` towards `toward`, spaced so that the
/// `2^{-n}` neighbourhoods are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingBallsSpec {
    pub base: Vec<f64>,
    #[serde(default)]
    pub toward: Option<Vec<f64>>,
    #[serde(default = "default_start")]
    pub start: u32,
    #[serde(default = "default_count")]
    pub count: u32,
    #[serde(default = "default_density")]
    pub density: f64,
}

fn default_start() -> u32 {
    2
}
fn default_count() -> u32 {
    6
}
fn default_density() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapSpec {
    Object {
        center: Vec<f64>,
        radius: f64,
        density: f64,
    },
    Tuple(Vec<f64>, f64, f64),
}

/// On-disk form of a spectral measure. Directions need not be normalized;
/// antipodes are added on load.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralSpec {
    #[serde(default)]
    pub atoms: Vec<(Vec<f64>, f64)>,
    #[serde(default)]
    pub caps: Vec<CapSpec>,
    #[serde(default)]
    pub uniform_mass: f64,
    #[serde(default)]
    pub shrinking_balls: Option<ShrinkingBallsSpec>,
}

/// One shrinking-ball cap together with its level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShrinkingCap {
    pub level: u32,
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    caps: Vec<Cap>,
    uniform_mass: f64,
    shrinking: Vec<ShrinkingCap>,
    #[serde(skip)]
    sampler: Vec<(f64, Piece)>,
    total_mass: f64,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Atom(usize),
    Cap(usize),
    Uniform,
}

/// Area of a cap of angular radius `a` on S^{d-1}.
pub fn cap_area(dim: usize, a: f64) -> f64 {
    match dim {
        2 => 2.0 * a,
        3 => 2.0 * PI * (1.0 - a.cos()),
        _ => 0.0,
    }
}

fn unit(v: &[f64], dim: usize, what: &str) -> Result<Point> {
    if v.len() != dim {
        return Err(Error::InvalidModel(format!(
            "{what} has {} coordinates, expected {dim}",
            v.len()
        )));
    }
    normalize(&point(v)).ok_or_else(|| Error::InvalidModel(format!("{what} is the zero vector")))
}

impl SpectralMeasure {
    pub fn from_spec(dim: usize, spec: &SpectralSpec) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Unsupported(format!(
                "dimension {dim}; only d = 1, 2, 3 are supported"
            )));
        }
        let mut atoms = Vec::new();
        let mut caps = Vec::new();
        let mut uniform_mass = spec.uniform_mass;
        if !(uniform_mass >= 0.0 && uniform_mass.is_finite()) {
            return Err(Error::InvalidModel("uniform_mass must be finite and >= 0".into()));
        }
        for (dir, mass) in &spec.atoms {
            let u = unit(dir, dim, "atom direction")?;
            if !(*mass > 0.0 && mass.is_finite()) {
                return Err(Error::InvalidModel("atom mass must be positive".into()));
            }
            atoms.push(Atom { direction: u, mass: *mass });
            atoms.push(Atom { direction: neg(&u), mass: *mass });
        }
        let mut push_cap = |center: Point, radius: f64, density: f64| -> Result<()> {
            if !(radius > 0.0 && radius < PI) {
                return Err(Error::InvalidModel("cap radius must lie in (0, π)".into()));
            }
            if !(density > 0.0 && density.is_finite()) {
                return Err(Error::InvalidModel("cap density must be positive".into()));
            }
            if dim == 1 {
                // S^0 is two points; a cap is the point itself with its density as mass.
                atoms.push(Atom { direction: center, mass: density });
                atoms.push(Atom { direction: neg(&center), mass: density });
            } else {
                caps.push(Cap { center, radius, density });
                caps.push(Cap { center: neg(&center), radius, density });
            }
            Ok(())
        };
        for cap in &spec.caps {
            let (c, r, rho) = match cap {
                CapSpec::Object { center, radius, density } => (center, *radius, *density),
                CapSpec::Tuple(center, radius, density) => (center, *radius, *density),
            };
            push_cap(unit(c, dim, "cap center")?, r, rho)?;
        }
        let mut shrinking = Vec::new();
        if let Some(sb) = &spec.shrinking_balls {
            if dim < 2 {
                return Err(Error::InvalidModel("shrinking balls need d >= 2".into()));
            }
            let base = unit(&sb.base, dim, "shrinking_balls.base")?;
            let toward = match &sb.toward {
                Some(t) => unit(t, dim, "shrinking_balls.toward")?,
                None => {
                    if dim == 2 {
                        [-base[1], base[0], 0.0]
                    } else {
                        orthonormal_frame(&base).0
                    }
                }
            };
            // Gram–Schmidt so the centers stay on a great circle.
            let t = normalize(&crate::geometry::sub(&toward, &scale(&base, dot(&toward, &base))))
                .ok_or_else(|| Error::InvalidModel("shrinking_balls.toward parallel to base".into()))?;
            let mut angle: f64 = 0.0;
            for k in 0..sb.count {
                let n = sb.start + k;
                let center = crate::geometry::add(&scale(&base, angle.cos()), &scale(&t, angle.sin()));
                let radius = 4f64.powi(-(n as i32));
                shrinking.push(ShrinkingCap { level: n, center, radius });
                push_cap(center, radius, sb.density)?;
                // neighbourhoods of radius 2^-n and 2^-(n+1) stay disjoint
                angle += 1.1 * (2f64.powi(-(n as i32)) + 2f64.powi(-(n as i32) - 1));
            }
        }
        if dim == 1 && uniform_mass > 0.0 {
            atoms.push(Atom { direction: [1.0, 0.0, 0.0], mass: uniform_mass / 2.0 });
            atoms.push(Atom { direction: [-1.0, 0.0, 0.0], mass: uniform_mass / 2.0 });
            uniform_mass = 0.0;
        }
        let mut m = Self {
            dim,
            atoms,
            caps,
            uniform_mass,
            shrinking,
            sampler: Vec::new(),
            total_mass: 0.0,
        };
        m.build_sampler();
        if !(m.total_mass > 0.0) {
            return Err(Error::InvalidModel("spectral measure has zero mass".into()));
        }
        m.check_nondegenerate()?;
        Ok(m)
    }

    fn build_sampler(&mut self) {
        let mut acc = 0.0;
        let mut table = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            acc += a.mass;
            table.push((acc, Piece::Atom(i)));
        }
        for (i, c) in self.caps.iter().enumerate() {
            acc += c.density * cap_area(self.dim, c.radius);
            table.push((acc, Piece::Cap(i)));
        }
        if self.uniform_mass > 0.0 {
            acc += self.uniform_mass;
            table.push((acc, Piece::Uniform));
        }
        self.total_mass = acc;
        self.sampler = table;
    }

    fn check_nondegenerate(&self) -> Result<()> {
        let g = self.second_moment();
        let d = self.dim;
        let trace: f64 = (0..d).map(|i| g[i][i]).sum();
        let det = match d {
            1 => g[0][0],
            2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
            _ => {
                g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                    - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                    + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
            }
        };
        let ratio = det / (trace / d as f64).powi(d as i32);
        if ratio > 1e-12 {
            Ok(())
        } else {
            Err(Error::Degenerate { dim: d, ratio })
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }
    pub fn uniform_mass(&self) -> f64 {
        self.uniform_mass
    }
    pub fn shrinking_caps(&self) -> &[ShrinkingCap] {
        &self.shrinking
    }
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
    pub fn has_continuous_part(&self) -> bool {
        !self.caps.is_empty() || self.uniform_mass > 0.0
    }
    pub fn is_isotropic(&self) -> bool {
        self.atoms.is_empty() && self.caps.is_empty() && self.uniform_mass > 0.0
            || (self.dim == 1)
    }

    /// Same measure multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.mass *= factor;
        }
        for c in &mut m.caps {
            c.density *= factor;
        }
        m.uniform_mass *= factor;
        m.build_sampler();
        m
    }

    /// The measure with its rotation-invariant component removed.
    pub fn without_uniform(&self) -> Self {
        let mut m = self.clone();
        m.uniform_mass = 0.0;
        m.build_sampler();
        m
    }

    /// A single cap of unit density and angular radius `radius` centred at
    /// the last coordinate axis.
    pub(crate) fn lone_cap(dim: usize, radius: f64) -> Self {
        let mut center = [0.0; 3];
        center[dim - 1] = 1.0;
        let mut m = Self {
            dim,
            atoms: Vec::new(),
            caps: vec![Cap {
                center,
                radius,
                density: 1.0,
            }],
            uniform_mass: 0.0,
            shrinking: Vec::new(),
            sampler: Vec::new(),
            total_mass: 0.0,
        };
        m.build_sampler();
        m
    }

    /// `∫ θ θᵀ μ(dθ)` in closed form.
    pub fn second_moment(&self) -> [[f64; 3]; 3] {
        let d = self.dim;
        let mut g = [[0.0; 3]; 3];
        let add_outer = |g: &mut [[f64; 3]; 3], v: &Point, w: f64| {
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += w * v[i] * v[j];
                }
            }
        };
        for a in &self.atoms {
            add_outer(&mut g, &a.direction, a.mass);
        }
        for c in &self.caps {
            let a = c.radius;
            let (along, across) = match d {
                2 => (a + (2.0 * a).sin() / 2.0, a - (2.0 * a).sin() / 2.0),
                _ => {
                    let ca = a.cos();
                    let along = 2.0 * PI * (1.0 - ca.powi(3)) / 3.0;
                    let across = PI * (2.0 / 3.0 - ca + ca.powi(3) / 3.0);
                    (along, across)
                }
            };
            // along·ccᵀ + across·(I_d − ccᵀ)
            add_outer(&mut g, &c.center, c.density * (along - across));
            for i in 0..d {
                g[i][i] += c.density * across;
            }
        }
        for i in 0..d {
            g[i][i] += self.uniform_mass / d as f64;
        }
        g
    }

    /// Feature directions: atoms, cap centers and (for d = 2) cap edges.
    pub fn features(&self) -> Vec<Point> {
        let mut out: Vec<Point> = self.atoms.iter().map(|a| a.direction).collect();
        for c in &self.caps {
            out.push(c.center);
            if self.dim == 2 {
                let t = c.center[1].atan2(c.center[0]);
                out.push(polar2(t + c.radius));
                out.push(polar2(t - c.radius));
            }
        }
        out
    }

    /// Whether `theta` (unit) lies in the support of μ.
    pub fn in_support(&self, theta: &Point) -> bool {
        if self.uniform_mass > 0.0 {
            return true;
        }
        self.atoms
            .iter()
            .any(|a| angle_between(&a.direction, theta) < 1e-12)
            || self
                .caps
                .iter()
                .any(|c| angle_between(&c.center, theta) <= c.radius + 1e-12)
    }

    /// Surface density of μ at the unit vector `theta`; `None` when μ has
    /// atoms and so no density.
    pub fn surface_density(&self, theta: &Point) -> Option<f64> {
        if !self.atoms.is_empty() {
            return None;
        }
        let mut v = self.uniform_mass / sphere_area(self.dim);
        for c in &self.caps {
            if angle_between(&c.center, theta) <= c.radius {
                v += c.density;
            }
        }
        Some(v)
    }

    /// Draws a direction distributed as μ/|μ|.
    pub fn sample_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.random::<f64>() * self.total_mass;
        let idx = self
            .sampler
            .partition_point(|(c, _)| *c <= u)
            .min(self.sampler.len() - 1);
        match self.sampler[idx].1 {
            Piece::Atom(i) => self.atoms[i].direction,
            Piece::Cap(i) => sample_cap(self.dim, &self.caps[i], rng),
            Piece::Uniform => sample_isotropic(self.dim, rng),
        }
    }

    /// `∫_S f(ψ(θ)) μ(dθ)` where `ψ(θ)` is the angle between `θ` and the unit
    /// vector `axis`, restricted to `ψ ∈ [lo, hi]`.
    ///
    /// `ends` selects a change of variables for the continuous part that
    /// flattens integrable singularities of `f` at either end of `[lo, hi]`.
    #[allow(clippy::too_many_arguments)]
    pub fn axial_integral<F: FnMut(f64) -> f64>(
        &self,
        axis: &Point,
        mut f: F,
        lo: f64,
        hi: f64,
        extra_breaks: &[f64],
        ends: Endpoints,
        cfg: &QuadConfig,
    ) -> f64 {
        let mut total = 0.0;
        for a in &self.atoms {
            let psi = angle_between(axis, &a.direction);
            if psi >= lo && psi <= hi {
                total += a.mass * f(psi);
            }
        }
        if !self.has_continuous_part() || hi <= lo {
            return total;
        }
        // support of the continuous part in ψ
        let (mut s_lo, mut s_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut breaks: Vec<f64> = extra_breaks.to_vec();
        let mut caps_info = Vec::with_capacity(self.caps.len());
        for c in &self.caps {
            let delta = angle_between(axis, &c.center);
            let a = c.radius;
            let r_lo = (delta - a).max(0.0);
            let r_hi = (delta + a).min(PI);
            if r_hi < lo || r_lo > hi {
                continue;
            }
            s_lo = s_lo.min(r_lo);
            s_hi = s_hi.max(r_hi);
            breaks.extend_from_slice(&[delta - a, delta + a, a - delta, 2.0 * PI - a - delta]);
            caps_info.push((delta, c));
        }
        if self.uniform_mass > 0.0 {
            s_lo = 0.0;
            s_hi = PI;
        }
        let a0 = lo.max(s_lo);
        let b0 = hi.min(s_hi);
        if !(b0 > a0) {
            return total;
        }
        let dim = self.dim;
        let uniform_density = self.uniform_mass / sphere_area(dim);
        let weight = |psi: f64| -> f64 {
            let mut w = 0.0;
            if uniform_density > 0.0 {
                w += uniform_density * shell_measure(dim, psi);
            }
            for (delta, c) in &caps_info {
                w += c.density * cap_shell_weight(dim, psi, *delta, c.radius);
            }
            w
        };
        let span = hi - lo;
        let to_u = |psi: f64| ends.inverse((psi - lo) / span);
        let ub: Vec<f64> = breaks
            .iter()
            .filter(|&&p| p > a0 && p < b0)
            .map(|&p| to_u(p))
            .collect();
        let cont = integrate(
            |u| {
                let (t, dt) = ends.map(u);
                let psi = lo + span * t;
                let w = weight(psi);
                if w == 0.0 || dt == 0.0 {
                    0.0
                } else {
                    span * dt * w * f(psi)
                }
            },
            to_u(a0),
            to_u(b0),
            &ub,
            cfg,
        );
        total + cont.value
    }
}

/// Change of variables `t = g(u)` on `[0, 1]` used by
/// [`SpectralMeasure::axial_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoints {
    Plain,
    /// `t = u²`: square-root-type singularity at the lower end.
    Lo,
    /// `t = 1 − (1 − u)²`.
    Hi,
    /// `t = 3u² − 2u³`, flat at both ends.
    Both,
}

impl Endpoints {
    fn map(self, u: f64) -> (f64, f64) {
        match self {
            Endpoints::Plain => (u, 1.0),
            Endpoints::Lo => (u * u, 2.0 * u),
            Endpoints::Hi => (1.0 - (1.0 - u) * (1.0 - u), 2.0 * (1.0 - u)),
            Endpoints::Both => (u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u)),
        }
    }

    fn inverse(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Endpoints::Plain => t,
            Endpoints::Lo => t.sqrt(),
            Endpoints::Hi => 1.0 - (1.0 - t).sqrt(),
            Endpoints::Both => {
                let (mut a, mut b) = (0.0, 1.0);
                for _ in 0..64 {
                    let m = 0.5 * (a + b);
                    if self.map(m).0 < t {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            }
        }
    }
}

/// Surface measure density of `{θ : angle(θ, axis) = ψ}` on S^{d-1}.
fn shell_measure(dim: usize, psi: f64) -> f64 {
    match dim {
        2 => 2.0,
        3 => 2.0 * PI * psi.sin(),
        _ => 0.0,
    }
}

/// Density in ψ of the part of the shell `{angle(θ, axis) = ψ}` inside a cap
/// whose center sits at angle `delta` from the axis.
fn cap_shell_weight(dim: usize, psi: f64, delta: f64, a: f64) -> f64 {
    match dim {
        2 => {
            let near = ((psi - delta).abs() <= a) as u8;
            let far_dist = (psi + delta).min(2.0 * PI - psi - delta);
            let far = (far_dist <= a) as u8;
            (near + far) as f64
        }
        3 => {
            let (sp, cp) = psi.sin_cos();
            let (sd, cd) = delta.sin_cos();
            let b = sp * sd;
            let a0 = cp * cd;
            let arc = if b <= 1e-300 {
                if a0 >= a.cos() {
                    2.0 * PI
                } else {
                    0.0
                }
            } else {
                let k = (a.cos() - a0) / b;
                if k <= -1.0 {
                    2.0 * PI
                } else if k >= 1.0 {
                    0.0
                } else {
                    2.0 * k.acos()
                }
            };
            sp * arc
        }
        _ => 0.0,
    }
}

fn sample_cap<R: Rng + ?Sized>(dim: usize, cap: &Cap, rng: &mut R) -> Point {
    match dim {
        2 => {
            let t = cap.center[1].atan2(cap.center[0]);
            polar2(t + cap.radius * (2.0 * rng.random::<f64>() - 1.0))
        }
        _ => {
            let cz = 1.0 - rng.random::<f64>() * (1.0 - cap.radius.cos());
            let sz = (1.0 - cz * cz).max(0.0).sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            let (e1, e2) = orthonormal_frame(&cap.center);
            let mut out = scale(&cap.center, cz);
            for i in 0..3 {
                out[i] += sz * (phi.cos() * e1[i] + phi.sin() * e2[i]);
            }
            out
        }
    }
}

fn sample_isotropic<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.sample(StandardNormal);
        }
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn measure(dim: usize, json: &str) -> SpectralMeasure {
        let spec: SpectralSpec = serde_json::from_str(json).unwrap();
        SpectralMeasure::from_spec(dim, &spec).unwrap()
    }

    #[test]
    fn antipodes_are_added() {
        let m = measure(
            2,
            r#"{"atoms": [[[3, 4], 0.5]], "caps": [{"center": [0, 1], "radius": 0.2, "density": 1.0}]}"#,
        );
        assert_eq!(m.atoms().len(), 2);
        assert!((m.atoms()[0].direction[0] - 0.6).abs() < 1e-15);
        assert_eq!(m.atoms()[1].direction, neg(&m.atoms()[0].direction));
        assert_eq!(m.caps().len(), 2);
        assert!((m.total_mass() - (1.0 + 2.0 * 0.4)).abs() < 1e-14);
    }

    #[test]
    fn degenerate_rejected() {
        let spec: SpectralSpec = serde_json::from_str(r#"{"atoms": [[[1, 0], 1.0]]}"#).unwrap();
        assert!(matches!(
            SpectralMeasure::from_spec(2, &spec),
            Err(Error::Degenerate { .. })
        ));
        let spec: SpectralSpec = serde_json::from_str(r#"{}"#).unwrap();
        assert!(SpectralMeasure::from_spec(2, &spec).is_err());
    }

    #[test]
    fn tuple_cap_form_accepted() {
        let m = measure(3, r#"{"caps": [[[0, 0, 1], 0.3, 2.0]], "uniform_mass": 1.0}"#);
        assert_eq!(m.caps().len(), 2);
    }

    #[test]
    fn axial_integral_recovers_cap_mass() {
        for (dim, json) in [
            (2, r#"{"caps": [{"center": [1, 0], "radius": 0.3, "density": 1.5}], "uniform_mass": 0.7}"#),
            (3, r#"{"caps": [{"center": [0.2, 0.5, 1], "radius": 0.4, "density": 1.5}], "uniform_mass": 0.7}"#),
        ] {
            let m = measure(dim, json);
            let cfg = QuadConfig::new(1e-13, 1e-12);
            for axis in [[1.0, 0.0, 0.0], normalize(&[0.3, -0.8, 0.0]).unwrap()] {
                let mass = m.axial_integral(&axis, |_| 1.0, 0.0, PI, &[], Endpoints::Plain, &cfg);
                assert!((mass - m.total_mass()).abs() < 1e-9, "{dim}: {mass} vs {}", m.total_mass());
            }
        }
    }

    #[test]
    fn second_moment_matches_quadrature() {
        let m = measure(3, r#"{"caps": [{"center": [0.2, 0.5, 1], "radius": 0.4, "density": 1.5}], "uniform_mass": 0.7}"#);
        let g = m.second_moment();
        let cfg = QuadConfig::new(1e-13, 1e-12);
        // v·G·v = ∫ (v·θ)² μ(dθ) = ∫ cos²ψ μ(dθ) around axis v
        for v in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], normalize(&[1.0, 1.0, 1.0]).unwrap()] {
            let direct = m.axial_integral(&v, |p| p.cos().powi(2), 0.0, PI, &[], Endpoints::Plain, &cfg);
            let mut quad = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    quad += v[i] * g[i][j] * v[j];
                }
            }
            assert!((direct - quad).abs() < 1e-9, "{direct} {quad}");
        }
    }

    #[test]
    fn shrinking_balls_disjoint() {
        let m = measure(
            3,
            r#"{"uniform_mass": 0.0, "caps": [{"center": [0,0,1], "radius": 0.5, "density": 1.0}],
                "shrinking_balls": {"base": [1, 0, 0], "toward": [0, 1, 0], "start": 2, "count": 6}}"#,
        );
        let sc = m.shrinking_caps();
        assert_eq!(sc.len(), 6);
        for i in 0..sc.len() {
            assert!((sc[i].radius - 4f64.powi(-(sc[i].level as i32))).abs() < 1e-15);
            for j in i + 1..sc.len() {
                let gap = angle_between(&sc[i].center, &sc[j].center);
                let need = 2f64.powi(-(sc[i].level as i32)) + 2f64.powi(-(sc[j].level as i32));
                assert!(gap > need, "{i} {j}");
            }
        }
    }

    #[test]
    fn two_point_sampling_frequency() {
        let m = measure(1, r#"{"atoms": [[[1], 1.0]]}"#);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let plus = (0..n).filter(|_| m.sample_direction(&mut rng)[0] > 0.0).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((plus - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn cap_samples_stay_in_cap() {
        let m = measure(2, r#"{"caps": [{"center": [1, 0], "radius": 0.3, "density": 1.0}]}"#);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5000 {
            let t = m.sample_direction(&mut rng);
            let e = [1.0, 0.0, 0.0];
            assert!(angle_between(&t, &e).min(angle_between(&t, &neg(&e))) <= 0.3 + 1e-12);
        }
        let m3 = measure(3, r#"{"caps": [{"center": [0, 1, 1], "radius": 0.3, "density": 1.0}]}"#);
        let c = normalize(&[0.0, 1.0, 1.0]).unwrap();
        for _ in 0..5000 {
            let t = m3.sample_direction(&mut rng);
            assert!(angle_between(&t, &c).min(angle_between(&t, &neg(&c))) <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn isotropic_angles_uniform_chi_square() {
        let m = measure(2, r#"{"uniform_mass": 1.0}"#);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bins = 16;
        let n = 16_000;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let t = m.sample_direction(&mut rng);
            let a = t[1].atan2(t[0]) + PI;
            counts[((a / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // χ²_{15} 99th percentile
        assert!(chi2 < 30.58, "chi2 = {chi2}");
    }
}
