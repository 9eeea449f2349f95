//! Characteristic exponent `Φ(u) = C_α ∫ |u·ξ|^α μ(dξ)` and transition
//! densities by Fourier inversion.
//!
//! In polar frequency coordinates `u = wθ` the inversion integral factorizes:
//!
//! `p₁(x) = (2π)^{-d} ∫_S φ(θ)^{-d/α} K_d(θ·x φ(θ)^{-1/α}) dθ`,
//!
//! with `φ = Φ|_S` and the universal profile
//! `K_d(z) = ∫₀^∞ cos(zw) e^{-w^α} w^{d-1} dw`. `K_d` is tabulated once per
//! `(d, α)` using a rotated integration contour, which turns the oscillatory
//! integral into an exponentially damped one.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, scale, Point};
use crate::measure::Endpoints;
use crate::model::StableModel;
use crate::quad::{integrate, QuadConfig};

const Z_MAX: f64 = 1e5;
const ZETA_STEPS_PER_UNIT: f64 = 256.0;

/// Tabulated `K_d(z)` for one `(d, α)`, cubic Hermite in `ζ = ln(1 + z/z₀)`
/// where `z₀ = (Γ(d/α)/Γ((d+2)/α))^{1/2}` is the curvature scale of `K_d`
/// at the origin (small for small `α`).
#[derive(Debug)]
pub struct KTable {
    dim: usize,
    alpha: f64,
    z0: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    step: f64,
}

impl KTable {
    /// Shared table for `(dim, alpha)`; built on first use.
    pub fn shared(dim: usize, alpha: f64) -> Arc<KTable> {
        static TABLES: OnceLock<Mutex<HashMap<(usize, u64), Arc<KTable>>>> = OnceLock::new();
        let map = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (dim, alpha.to_bits());
        if let Some(t) = map.lock().unwrap().get(&key) {
            return t.clone();
        }
        let t = Arc::new(KTable::build(dim, alpha));
        map.lock().unwrap().entry(key).or_insert(t).clone()
    }

    fn build(dim: usize, alpha: f64) -> Self {
        let step = 1.0 / ZETA_STEPS_PER_UNIT;
        let d = dim as f64;
        let z0 = (statrs::function::gamma::ln_gamma(d / alpha)
            - statrs::function::gamma::ln_gamma((d + 2.0) / alpha))
        .mul_add(0.5, 0.0)
        .exp()
        .min(1.0);
        let n = ((1.0 + Z_MAX / z0).ln() / step).ceil() as usize + 1;
        let nodes: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let z = z0 * (i as f64 * step).exp_m1();
                let (k, dk) = k_direct(dim, alpha, z);
                (k, dk * (z0 + z))
            })
            .collect();
        let (values, slopes) = nodes.into_iter().unzip();
        Self {
            dim,
            alpha,
            z0,
            values,
            slopes,
            step,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let z = z.abs();
        if z >= Z_MAX {
            return k_direct(self.dim, self.alpha, z).0;
        }
        let zeta = (z / self.z0).ln_1p() / self.step;
        let i = (zeta as usize).min(self.values.len() - 2);
        let t = zeta - i as f64;
        let h = self.step;
        let (p0, p1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1
    }
}

/// `(K_d(z), K_d'(z))` on the contour `w = τ e^{iφ}`, `φ = π / (2(1+α))`.
pub fn k_direct(dim: usize, alpha: f64, z: f64) -> (f64, f64) {
    let phi = PI / (2.0 * (1.0 + alpha));
    let (sp, cp) = phi.sin_cos();
    let (sa, ca) = (alpha * phi).sin_cos();
    let d = dim as f64;
    let budget = 46.0;
    let mut upper = (budget / ca).powf(1.0 / alpha);
    if z > 0.0 {
        upper = upper.min(budget / (z * sp));
    }
    let mut breaks = Vec::new();
    let mut b = upper;
    for _ in 0..12 {
        b *= 0.25;
        breaks.push(b);
    }
    let scale_k = (1.0 + z).powf(-d);
    let cfg = QuadConfig {
        abs_tol: 1e-13 * scale_k,
        rel_tol: 1e-12,
        max_intervals: 400,
    };
    let k = integrate(
        |tau| {
            let ta = tau.powf(alpha);
            let re = -z * tau * sp - ta * ca;
            let im = z * tau * cp - ta * sa;
            re.exp() * (phi * d + im).cos() * tau.powf(d - 1.0)
        },
        0.0,
        upper,
        &breaks,
        &cfg,
    )
    .value;
    let dk = integrate(
        |tau| {
            let ta = tau.powf(alpha);
            let re = -z * tau * sp - ta * ca;
            let im = z * tau * cp - ta * sa;
            -re.exp() * (phi * (d + 1.0) + im).sin() * tau.powf(d)
        },
        0.0,
        upper,
        &breaks,
        &QuadConfig {
            abs_tol: cfg.abs_tol / (1.0 + z),
            max_intervals: 400,
            ..cfg
        },
    )
    .value;
    (k, dk)
}

/// `G(u) = ∫₀^u |cos t|^α dt` for any real `u`.
#[derive(Debug, Clone)]
struct CosPowerPrimitive {
    values: Vec<f64>,
    step: f64,
    alpha: f64,
    quarter: f64,
}

impl CosPowerPrimitive {
    fn new(alpha: f64) -> Self {
        let n = 8192;
        let step = PI / 2.0 / n as f64;
        let cfg = QuadConfig::new(1e-17, 1e-14);
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..n {
            let a = i as f64 * step;
            let b = if i + 1 == n { PI / 2.0 } else { a + step };
            acc += integrate(|t| t.cos().abs().powf(alpha), a, b, &[], &cfg).value;
            values.push(acc);
        }
        let quarter = acc;
        Self {
            values,
            step,
            alpha,
            quarter,
        }
    }

    fn eval(&self, u: f64) -> f64 {
        if u < 0.0 {
            return -self.eval(-u);
        }
        let periods = (u / PI).floor();
        let r = u - periods * PI;
        let base = periods * 2.0 * self.quarter;
        if r <= PI / 2.0 {
            base + self.first_quarter(r)
        } else {
            base + 2.0 * self.quarter - self.first_quarter(PI - r)
        }
    }

    fn first_quarter(&self, v: f64) -> f64 {
        let x = v / self.step;
        let i = (x as usize).min(self.values.len() - 2);
        let t = x - i as f64;
        let h = self.step;
        let a = i as f64 * h;
        let m0 = a.cos().abs().powf(self.alpha) * h;
        let m1 = (a + h).cos().abs().powf(self.alpha) * h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * m1
    }
}

/// `∫ |θ·ξ|^α μ(dξ)` on S² for fast repeated evaluation. Each cap
/// contributes a function of `|θ·c|` alone, tabulated once per radius.
#[derive(Debug, Clone)]
struct SpherePhi {
    alpha: f64,
    uniform: f64,
    atoms: Vec<(Point, f64)>,
    /// center, density, index into `tables`
    caps: Vec<(Point, f64, usize)>,
    /// values and slopes on `|θ·c| = i / CAP_TABLE`, `i = 0..=CAP_TABLE`
    tables: Vec<(Vec<f64>, Vec<f64>)>,
}

const CAP_TABLE: usize = 2048;

impl SpherePhi {
    fn new(model: &StableModel) -> Self {
        let alpha = model.alpha();
        let mu = model.measure();
        let mut radii: Vec<f64> = Vec::new();
        let mut caps = Vec::new();
        for c in mu.caps() {
            let idx = match radii.iter().position(|&r| r == c.radius) {
                Some(i) => i,
                None => {
                    radii.push(c.radius);
                    radii.len() - 1
                }
            };
            caps.push((c.center, c.density, idx));
        }
        let tables = radii
            .iter()
            .map(|&a| {
                let lone = crate::measure::SpectralMeasure::lone_cap(3, a);
                let values: Vec<f64> = (0..=CAP_TABLE)
                    .into_par_iter()
                    .map(|i| {
                        let t = i as f64 / CAP_TABLE as f64;
                        let axis = [(1.0 - t * t).max(0.0).sqrt(), 0.0, t];
                        lone.axial_integral(
                            &axis,
                            |psi| psi.cos().abs().powf(alpha),
                            0.0,
                            PI,
                            &[PI / 2.0],
                            Endpoints::Plain,
                            &QuadConfig::new(1e-15, 1e-12),
                        )
                    })
                    .collect();
                // even in θ·c, so the slope vanishes at 0
                let n = CAP_TABLE;
                let mut slopes = vec![0.0; n + 1];
                for i in 1..n {
                    slopes[i] = 0.5 * (values[i + 1] - values[i - 1]);
                }
                slopes[n] = 1.5 * values[n] - 2.0 * values[n - 1] + 0.5 * values[n - 2];
                (values, slopes)
            })
            .collect();
        Self {
            alpha,
            // the rotation-invariant part: |μ|·∫|cos ψ|^α dσ / 4π
            uniform: mu.uniform_mass() / (alpha + 1.0),
            atoms: mu.atoms().iter().map(|a| (a.direction, a.mass)).collect(),
            caps,
            tables,
        }
    }

    fn eval(&self, theta: &Point) -> f64 {
        let mut s = self.uniform;
        for (dir, m) in &self.atoms {
            s += m * dot(theta, dir).abs().powf(self.alpha);
        }
        for (c, rho, idx) in &self.caps {
            let x = dot(theta, c).abs().min(1.0) * CAP_TABLE as f64;
            let i = (x as usize).min(CAP_TABLE - 1);
            let f = x - i as f64;
            let (v, m) = &self.tables[*idx];
            let (f2, f3) = (f * f, f * f * f);
            s += rho
                * ((2.0 * f3 - 3.0 * f2 + 1.0) * v[i]
                    + (f3 - 2.0 * f2 + f) * m[i]
                    + (-2.0 * f3 + 3.0 * f2) * v[i + 1]
                    + (f3 - f2) * m[i + 1]);
        }
        s
    }
}

#[derive(Debug, Clone)]
enum Restricted {
    Line { phi: f64 },
    Plane {
        atoms: Vec<(f64, f64)>,
        caps: Vec<(f64, f64, f64)>,
        uniform: f64,
        primitive: CosPowerPrimitive,
        kinks: Vec<f64>,
    },
    Space {
        phi: SpherePhi,
        /// `(min φ)^{-1/α}`
        max_stretch: f64,
    },
}

/// Evaluates `Φ` and the densities `p_t` of one model.
#[derive(Debug, Clone)]
pub struct ExponentEvaluator {
    model: StableModel,
    phi_constant: f64,
    restricted: Restricted,
    table: Arc<KTable>,
    density_cfg: QuadConfig,
}

impl ExponentEvaluator {
    pub fn new(model: &StableModel) -> Result<Self> {
        let d = model.dim();
        let alpha = model.alpha();
        let c = model.phi_constant();
        let mu = model.measure();
        let restricted = match d {
            1 => Restricted::Line {
                phi: c * mu.total_mass(),
            },
            2 => {
                let primitive = CosPowerPrimitive::new(alpha);
                let atoms: Vec<(f64, f64)> = mu
                    .atoms()
                    .iter()
                    .map(|a| (a.direction[1].atan2(a.direction[0]), a.mass))
                    .collect();
                let caps: Vec<(f64, f64, f64)> = mu
                    .caps()
                    .iter()
                    .map(|k| (k.center[1].atan2(k.center[0]), k.radius, k.density))
                    .collect();
                let uniform = mu.uniform_mass() / (2.0 * PI) * 4.0 * primitive.quarter;
                let mut kinks = Vec::new();
                for &(t, _) in &atoms {
                    kinks.push((t + PI / 2.0).rem_euclid(PI));
                }
                for &(t, a, _) in &caps {
                    kinks.push((t + a + PI / 2.0).rem_euclid(PI));
                    kinks.push((t - a + PI / 2.0).rem_euclid(PI));
                }
                kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
                kinks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                Restricted::Plane {
                    atoms,
                    caps,
                    uniform,
                    primitive,
                    kinks,
                }
            }
            3 => {
                let phi = SpherePhi::new(model);
                let min = crate::geometry::fibonacci_sphere(4000)
                    .iter()
                    .map(|t| phi.eval(t))
                    .fold(f64::INFINITY, f64::min);
                Restricted::Space {
                    phi,
                    max_stretch: (c * min).powf(-1.0 / alpha),
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "density inversion in dimension {d}"
                )))
            }
        };
        Ok(Self {
            model: model.clone(),
            phi_constant: c,
            restricted,
            table: KTable::shared(d, alpha),
            density_cfg: QuadConfig {
                abs_tol: 1e-15,
                rel_tol: 1e-10,
                max_intervals: 4000,
            },
        })
    }

    pub fn model(&self) -> &StableModel {
        &self.model
    }

    pub fn phi_constant(&self) -> f64 {
        self.phi_constant
    }

    pub fn with_density_tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.density_cfg.abs_tol = abs_tol;
        self.density_cfg.rel_tol = rel_tol;
        self
    }

    /// `Φ(u)`.
    pub fn phi_eval(&self, u: &Point) -> f64 {
        let r = norm(u);
        if r == 0.0 {
            return 0.0;
        }
        r.powf(self.model.alpha()) * self.phi_dir(&scale(u, 1.0 / r))
    }

    /// `Φ(θ)` for a unit vector `θ`.
    pub fn phi_dir(&self, theta: &Point) -> f64 {
        match &self.restricted {
            Restricted::Line { phi } => *phi,
            Restricted::Plane { .. } => self.phi_angle(theta[1].atan2(theta[0])),
            Restricted::Space { phi, .. } => self.phi_constant * phi.eval(theta),
        }
    }

    fn phi_angle(&self, t: f64) -> f64 {
        let Restricted::Plane {
            atoms,
            caps,
            uniform,
            primitive,
            ..
        } = &self.restricted
        else {
            unreachable!("planar evaluator")
        };
        let alpha = self.model.alpha();
        let mut s = *uniform;
        for &(ta, m) in atoms {
            s += m * (t - ta).cos().abs().powf(alpha);
        }
        for &(tc, a, rho) in caps {
            s += rho * (primitive.eval(t - tc + a) - primitive.eval(t - tc - a));
        }
        self.phi_constant * s
    }

    /// Minimum and maximum of `Φ` on the unit sphere over a fine grid.
    pub fn phi_extremes(&self) -> (f64, f64) {
        let dirs: Vec<Point> = match self.model.dim() {
            1 => vec![[1.0, 0.0, 0.0]],
            2 => (0..4096)
                .map(|i| crate::geometry::polar2(PI * i as f64 / 4096.0))
                .collect(),
            _ => crate::geometry::fibonacci_sphere(2000),
        };
        let vals: Vec<f64> = dirs.par_iter().map(|t| self.phi_dir(t)).collect();
        vals.iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// `p₁(x)` by polar Fourier inversion.
    pub fn density(&self, x: &Point) -> f64 {
        self.density_with(x, &self.density_cfg)
    }

    pub fn density_with(&self, x: &Point, cfg: &QuadConfig) -> f64 {
        let alpha = self.model.alpha();
        match &self.restricted {
            Restricted::Line { phi } => {
                let s = phi.powf(-1.0 / alpha);
                s * self.table.eval(x[0] * s) / PI
            }
            Restricted::Plane { kinks, .. } => {
                let r = norm(x);
                let tx = x[1].atan2(x[0]);
                let mut breaks = kinks.clone();
                let normal = (tx + PI / 2.0).rem_euclid(PI);
                breaks.push(normal);
                if r > 0.0 {
                    // |θ·x| grows linearly away from the normal; K varies on scale 1/r
                    let mut w = 0.25 / r;
                    while w < PI / 2.0 {
                        breaks.push((normal + w).rem_euclid(PI));
                        breaks.push((normal - w).rem_euclid(PI));
                        w *= 4.0;
                    }
                }
                let inv = -1.0 / alpha;
                let val = integrate(
                    |t| {
                        let phi = self.phi_angle(t);
                        let s = phi.powf(inv);
                        s * s * self.table.eval(r * (t - tx).cos() * s)
                    },
                    0.0,
                    PI,
                    &breaks,
                    cfg,
                )
                .value;
                val / (2.0 * PI * PI)
            }
            Restricted::Space { phi, max_stretch } => {
                self.density_space(phi, *max_stretch, x, cfg)
            }
        }
    }

    /// Sphere integral in a frame aligned with `x`:
    /// `θ = t x̂ + √(1−t²)(cos β a + sin β b)`, `β ∈ [0, π]`, `t ∈ [−1, 1]`
    /// covers half the sphere and the integrand is even under `θ → −θ`.
    /// The points `±t` are summed before integrating over `t ∈ [0, 1]`, which
    /// cancels the part odd in `t` exactly; far from the origin that part is
    /// larger than the result.
    fn density_space(&self, phi: &SpherePhi, max_stretch: f64, x: &Point, cfg: &QuadConfig) -> f64 {
        let alpha = self.model.alpha();
        let r = norm(x);
        let axis = if r > 0.0 { scale(x, 1.0 / r) } else { [0.0, 0.0, 1.0] };
        let (ea, eb) = crate::geometry::orthonormal_frame(&axis);
        let mut t_breaks = Vec::new();
        if r > 0.0 {
            // K varies on scale 1 in z = r t φ^{-1/α}
            let mut w = 0.25 / (r * max_stretch);
            while w < 1.0 {
                t_breaks.push(w);
                w *= 4.0;
            }
        }
        let b_breaks: Vec<f64> = (1..4).map(|k| PI * k as f64 / 4.0).collect();
        let c = self.phi_constant;
        let ray = |beta: f64, inner: &QuadConfig| {
            let (sb, cb) = beta.sin_cos();
            let dir = [
                cb * ea[0] + sb * eb[0],
                cb * ea[1] + sb * eb[1],
                cb * ea[2] + sb * eb[2],
            ];
            let f = |t: f64| {
                let q = (1.0 - t * t).max(0.0).sqrt();
                let mut acc = 0.0;
                for tt in [t, -t] {
                    let theta = [
                        tt * axis[0] + q * dir[0],
                        tt * axis[1] + q * dir[1],
                        tt * axis[2] + q * dir[2],
                    ];
                    let st = (c * phi.eval(&theta)).powf(-1.0 / alpha);
                    acc += st * st * st * self.table.eval(r * t * st);
                }
                acc
            };
            integrate(f, 0.0, 1.0, &t_breaks, inner).value
        };
        let pass = |outer: &QuadConfig, inner: &QuadConfig| {
            integrate(|beta| ray(beta, inner), 0.0, PI, &b_breaks, outer).value
        };
        // The inner integrals are much larger than their β-integral, so both
        // levels work to an absolute target set by a coarse first pass.
        let coarse = QuadConfig {
            abs_tol: cfg.abs_tol,
            rel_tol: 1e-3,
            max_intervals: 200,
        };
        let guess = pass(&coarse, &QuadConfig { rel_tol: 1e-4, ..coarse });
        let target = cfg.abs_tol.max(cfg.rel_tol * guess.abs());
        let fine = |abs_tol| QuadConfig {
            abs_tol,
            rel_tol: 0.0,
            max_intervals: cfg.max_intervals,
        };
        let val = pass(&fine(target), &fine(target / (10.0 * PI)));
        2.0 * val / (8.0 * PI * PI * PI)
    }

    /// `p_t(x) = t^{-d/α} p₁(t^{-1/α} x)`.
    pub fn density_t(&self, t: f64, x: &Point) -> f64 {
        let a = self.model.alpha();
        let d = self.model.dim() as f64;
        t.powf(-d / a) * self.density(&scale(x, t.powf(-1.0 / a)))
    }
}

/// `p₁` tabulated on the lattice `hℤ^d ∩ [−R, R]^d`.
#[derive(Debug, Clone, Serialize)]
pub struct DensityGrid {
    pub dim: usize,
    pub alpha: f64,
    pub spacing: f64,
    pub extent: f64,
    pub side: usize,
    pub checksum: String,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub gamma: f64,
    pub sup: f64,
    pub argmax: Vec<f64>,
    /// `(inner radius, outer radius, shell max of p₁(y)(1+|y|)^{γ+α})`
    pub shells: Vec<(f64, f64, f64)>,
    pub slope: f64,
    pub bounded: bool,
}

const MAGIC: &[u8; 8] = b"ANISODG1";

impl DensityGrid {
    pub fn build(eval: &ExponentEvaluator, extent: f64, spacing: f64) -> Result<Self> {
        let d = eval.model.dim();
        let half = (extent / spacing).round() as usize;
        let side = 2 * half + 1;
        let total = side.pow(d as u32);
        if total > 50_000_000 {
            return Err(Error::Unsupported(format!(
                "density grid with {total} points exceeds the memory budget"
            )));
        }
        let mut grid = Self {
            dim: d,
            alpha: eval.model.alpha(),
            spacing,
            extent: half as f64 * spacing,
            side,
            checksum: eval.model.checksum(),
            values: Vec::new(),
        };
        // x ↦ −x maps index i to total − 1 − i
        let lower: Vec<f64> = (0..total.div_ceil(2))
            .into_par_iter()
            .map(|i| eval.density(&grid.position(i)))
            .collect();
        let mut values = vec![0.0; total];
        for (i, v) in lower.iter().enumerate() {
            values[i] = *v;
            values[total - 1 - i] = *v;
        }
        if let Some(i) = values.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Numerical(format!(
                "density not positive ({:e}) at {:?}; refine the inversion quadrature",
                values[i],
                &grid.position(i)[..d]
            )));
        }
        grid.values = values;
        Ok(grid)
    }

    /// Loads from `$ANISOSTABLE_CACHE` when a matching file exists, otherwise
    /// builds and stores it there.
    pub fn build_cached(eval: &ExponentEvaluator, extent: f64, spacing: f64) -> Result<Self> {
        let Some(dir) = std::env::var_os("ANISOSTABLE_CACHE") else {
            return Self::build(eval, extent, spacing);
        };
        let sum = eval.model.checksum();
        let path = PathBuf::from(dir).join(format!("p1_{}_{}_{}.bin", &sum[..16], spacing, extent));
        if let Ok(g) = Self::load_binary(&path) {
            if g.checksum == sum && g.spacing == spacing && g.alpha == eval.model.alpha() {
                return Ok(g);
            }
        }
        let g = Self::build(eval, extent, spacing)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        g.save_binary(&path)?;
        Ok(g)
    }

    pub fn position(&self, index: usize) -> Point {
        let mut x = [0.0; 3];
        let mut rest = index;
        for c in x.iter_mut().take(self.dim) {
            let k = rest % self.side;
            rest /= self.side;
            *c = -self.extent + k as f64 * self.spacing;
        }
        x
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multilinear interpolation of `p₁`; `None` outside `[−R, R]^d`.
    pub fn interpolate(&self, y: &Point) -> Option<f64> {
        let d = self.dim;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..d {
            let u = (y[i] + self.extent) / self.spacing;
            if !(u >= 0.0 && u <= (self.side - 1) as f64) {
                return None;
            }
            let k = (u.floor() as usize).min(self.side - 2);
            base[i] = k;
            frac[i] = u - k as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for i in 0..d {
                let bit = (corner >> i) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                idx += (base[i] + bit) * stride;
                stride *= self.side;
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        Some(acc)
    }

    /// `p_t(x)` through the scaling law and interpolation of `p₁`.
    pub fn density_at(&self, t: f64, x: &Point) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidModel("time must be positive".into()));
        }
        let y = scale(x, t.powf(-1.0 / self.alpha));
        self.interpolate(&y)
            .map(|v| t.powf(-(self.dim as f64) / self.alpha) * v)
            .ok_or_else(|| Error::OutOfRange(x[..self.dim].to_vec()))
    }

    /// Lattice Riemann sum of `p₁`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing.powi(self.dim as i32)
    }

    /// Total mass as `(ball, tail)`: the lattice sum over `|y| ≤ R` (`R` the
    /// extent) and `P(|X₁| > R) ≈ ν(B(0,R)^c) = |μ| R^{-α}/α`, which is
    /// accurate up to `O(R^{-2α})`.
    pub fn normalization(&self, total_mass: f64) -> (f64, f64) {
        let r = self.extent;
        let ball: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| norm(&self.position(*i)) <= r)
            .map(|(_, v)| v)
            .sum::<f64>()
            * self.spacing.powi(self.dim as i32);
        (ball, total_mass * r.powf(-self.alpha) / self.alpha)
    }

    /// `sup p₁(y)(1+|y|)^{γ+α}` with per-shell maxima over dyadic shells. The
    /// trend is the log-log slope of the maxima over the three outermost
    /// shells; the bound counts as holding when that slope is at most 0.2.
    pub fn check_decay_bound(&self, gamma: f64) -> DecayReport {
        let mut sup = 0.0;
        let mut argmax = self.position(0);
        let mut edges = vec![0.0, 1.0];
        while *edges.last().unwrap() < self.extent {
            let next = edges.last().unwrap() * 2.0;
            edges.push(next);
        }
        let mut shells = vec![0.0f64; edges.len() - 1];
        for (i, &v) in self.values.iter().enumerate() {
            let x = self.position(i);
            let r = norm(&x);
            if r > self.extent {
                continue;
            }
            let s = v * (1.0 + r).powf(gamma + self.alpha);
            if s > sup {
                sup = s;
                argmax = x;
            }
            let k = edges.partition_point(|&e| e <= r).saturating_sub(1).min(shells.len() - 1);
            shells[k] = shells[k].max(s);
        }
        let pts: Vec<(f64, f64)> = edges
            .windows(2)
            .zip(&shells)
            .filter(|(e, m)| e[0] >= 1.0 && **m > 0.0)
            .map(|(e, m)| ((e[0] * e[1]).sqrt().ln(), m.ln()))
            .collect();
        let pts = &pts[pts.len().saturating_sub(3)..];
        let slope = crate::stats::ls_slope(pts).unwrap_or(0.0);
        DecayReport {
            gamma,
            sup,
            argmax: argmax[..self.dim].to_vec(),
            shells: edges
                .windows(2)
                .zip(&shells)
                .map(|(e, m)| (e[0], e[1], *m))
                .collect(),
            slope,
            bounded: slope <= 0.2,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let names = ["x1", "x2", "x3"];
        writeln!(out, "{},p1", names[..self.dim].join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let x = self.position(i);
            for c in &x[..self.dim] {
                write!(out, "{c},")?;
            }
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&self.alpha.to_le_bytes())?;
        out.write_all(&self.spacing.to_le_bytes())?;
        out.write_all(&self.extent.to_le_bytes())?;
        out.write_all(&(self.side as u64).to_le_bytes())?;
        let mut sum = [0u8; 64];
        let bytes = self.checksum.as_bytes();
        sum[..bytes.len().min(64)].copy_from_slice(&bytes[..bytes.len().min(64)]);
        out.write_all(&sum)?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let bad = || Error::Numerical("malformed density cache file".into());
        if buf.len() < 108 || &buf[..8] != MAGIC {
            return Err(bad());
        }
        let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let dim = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        let alpha = f(12);
        let spacing = f(20);
        let extent = f(28);
        let side = u64::from_le_bytes(buf[36..44].try_into().unwrap()) as usize;
        let checksum = String::from_utf8(buf[44..108].to_vec())
            .map_err(|_| bad())?
            .trim_end_matches('\0')
            .to_string();
        let n = side.checked_pow(dim as u32).ok_or_else(bad)?;
        if buf.len() != 108 + 8 * n {
            return Err(bad());
        }
        let values = (0..n).map(|i| f(108 + 8 * i)).collect();
        Ok(Self {
            dim,
            alpha,
            spacing,
            extent,
            side,
            checksum,
            values,
        })
    }
}

/// Exact `p₁` of the isotropic Cauchy process with `Φ(u) = |u|` in `d ≤ 3`.
pub fn cauchy_density(dim: usize, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let k = (dim as f64 + 1.0) / 2.0;
    gamma(k) / PI.powf(k) * (1.0 + r2).powf(-k)
}
