//! Closed forms for the rotation-invariant process with `Φ(u) = |u|^α` in
//! the unit ball: Poisson kernel, Green function and mean exit time.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::{norm, polar2, scale, sphere_area, sub, Point};
use crate::measure::SpectralSpec;
use crate::model::{phi_constant, ModelSpec, StableModel};
use crate::quad::{integrate, integrate_power_endpoint, QuadConfig};

/// Uniform spectral mass that makes `Φ(u) = |u|^α`.
pub fn isotropic_uniform_mass(dim: usize, alpha: f64) -> f64 {
    let d = dim as f64;
    let moment = 2.0 * PI.powf((d - 1.0) / 2.0) * gamma((alpha + 1.0) / 2.0) / gamma((d + alpha) / 2.0);
    sphere_area(dim) / (phi_constant(alpha) * moment)
}

pub fn isotropic_model(dim: usize, alpha: f64) -> Result<StableModel> {
    StableModel::new(ModelSpec {
        d: dim,
        alpha,
        spectral: SpectralSpec {
            uniform_mass: isotropic_uniform_mass(dim, alpha),
            ..Default::default()
        },
    })
}

/// Speed of an isotropic model relative to the `|u|^α` calibration.
pub(crate) fn time_scale(model: &StableModel) -> Result<f64> {
    if !model.measure().is_isotropic() {
        return Err(Error::Unsupported("closed forms need a rotation-invariant model".into()));
    }
    let m = model.total_mass();
    Ok(m / isotropic_uniform_mass(model.dim(), model.alpha()))
}

/// Mean exit time from the unit ball,
/// `Γ(d/2) / (2^α Γ(1+α/2) Γ((d+α)/2)) (1 − |x|²)^{α/2}`.
pub fn ball_exit_time(dim: usize, alpha: f64, x: &Point) -> f64 {
    let d = dim as f64;
    let r2 = crate::geometry::dot(x, x);
    if r2 >= 1.0 {
        return 0.0;
    }
    gamma(d / 2.0) / (2f64.powf(alpha) * gamma(1.0 + alpha / 2.0) * gamma((d + alpha) / 2.0))
        * (1.0 - r2).powf(alpha / 2.0)
}

/// Green function of the unit ball for `d > α`:
/// `κ |x−y|^{α−d} ∫_0^w r^{α/2−1} (1+r)^{−d/2} dr`,
/// `w = (1−|x|²)(1−|y|²)/|x−y|²`, `κ = Γ(d/2) / (2^α π^{d/2} Γ(α/2)²)`.
pub fn ball_green(dim: usize, alpha: f64, x: &Point, y: &Point) -> f64 {
    let d = dim as f64;
    let (ax, ay) = (crate::geometry::dot(x, x), crate::geometry::dot(y, y));
    if ax >= 1.0 || ay >= 1.0 {
        return 0.0;
    }
    let dist = norm(&sub(x, y));
    if dist == 0.0 {
        return f64::INFINITY;
    }
    let w = (1.0 - ax) * (1.0 - ay) / (dist * dist);
    let kappa = gamma(d / 2.0) / (2f64.powf(alpha) * PI.powf(d / 2.0) * gamma(alpha / 2.0).powi(2));
    let cfg = QuadConfig::new(1e-14, 1e-10);
    let head = w.min(1.0);
    let mut s = integrate_power_endpoint(|r| (1.0 + r).powf(-d / 2.0), alpha / 2.0 - 1.0, head, &cfg)
        .expect("α/2 − 1 > −1")
        .value;
    if w > 1.0 {
        // r = 1/u on [1, w]; the integrand becomes u^{(d−α)/2 − 1} (1+u)^{−d/2}
        let p = (d - alpha) / 2.0 - 1.0;
        let tail = |u: f64| (1.0 + u).powf(-d / 2.0);
        let full = integrate_power_endpoint(tail, p, 1.0, &cfg).expect("d > α").value;
        let cut = integrate_power_endpoint(tail, p, 1.0 / w, &cfg).expect("d > α").value;
        s += full - cut;
    }
    kappa * dist.powf(alpha - d) * s
}

/// The Poisson kernel of the unit ball,
/// `C ((1−|x|²)/(|y|²−1))^{α/2} |x−y|^{−d}`, with `C` fixed by numerical
/// normalization of the total mass.
#[derive(Debug, Clone, Copy)]
pub struct IsotropicPoisson {
    dim: usize,
    alpha: f64,
    constant: f64,
}

const TIGHT: QuadConfig = QuadConfig {
    abs_tol: 1e-15,
    rel_tol: 1e-10,
    max_intervals: 4000,
};

impl IsotropicPoisson {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) || !(1..=3).contains(&dim) {
            return Err(Error::InvalidModel(format!("no Poisson kernel for d = {dim}, α = {alpha}")));
        }
        // ∫_{|y|>1} (|y|²−1)^{−α/2} |y|^{−d} dy = |S^{d−1}| ∫_1^∞ (r²−1)^{−α/2} r^{−1} dr
        let radial = radial_integral(alpha, 1.0, f64::INFINITY, |r| (r + 1.0).powf(-alpha / 2.0) / r);
        Ok(IsotropicPoisson {
            dim,
            alpha,
            constant: 1.0 / (sphere_area(dim) * radial),
        })
    }

    pub fn for_model(model: &StableModel) -> Result<Self> {
        time_scale(model)?;
        Self::new(model.dim(), model.alpha())
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Kernel without the `(|y| − 1)^{−α/2}` factor.
    fn regular(&self, x: &Point, y: &Point) -> f64 {
        let ax = crate::geometry::dot(x, x);
        let r = norm(y);
        self.constant * ((1.0 - ax) / (r + 1.0)).powf(self.alpha / 2.0)
            * norm(&sub(x, y)).powi(-(self.dim as i32))
    }

    pub fn kernel(&self, x: &Point, y: &Point) -> f64 {
        let r = norm(y);
        if norm(x) >= 1.0 || r <= 1.0 {
            return 0.0;
        }
        self.regular(x, y) * (r - 1.0).powf(-self.alpha / 2.0)
    }

    /// Mass of `{r_lo ≤ |y| < r_hi}` within the sector `[phi_lo, phi_hi]`
    /// (d = 2) or on the half-line of sign `phi_lo` (d = 1).
    pub fn cell_mass(&self, x: &Point, r_lo: f64, r_hi: f64, phi_lo: f64, phi_hi: f64) -> Result<f64> {
        match self.dim {
            1 => {
                let sign = if phi_lo < 0.0 { -1.0 } else { 1.0 };
                Ok(radial_integral(self.alpha, r_lo, r_hi, |r| self.regular(x, &[sign * r, 0.0, 0.0])))
            }
            2 => {
                let peak = x[1].atan2(x[0]);
                let breaks: Vec<f64> = [peak - 2.0 * PI, peak, peak + 2.0 * PI, peak + PI, peak - PI]
                    .into_iter()
                    .filter(|b| *b > phi_lo && *b < phi_hi)
                    .collect();
                let inner = |r: f64| {
                    r * integrate(|p| self.regular(x, &scale(&polar2(p), r)), phi_lo, phi_hi, &breaks, &TIGHT)
                        .value
                };
                Ok(radial_integral(self.alpha, r_lo, r_hi, inner))
            }
            _ => Err(Error::Unsupported("cell masses of the closed-form kernel need d ≤ 2".into())),
        }
    }

    /// Masses of every cell of `partition` (sector `k` of `n` spans
    /// `[2πk/n, 2π(k+1)/n)`; in d = 1 sector 0 is the positive half-line).
    pub fn partition_masses(&self, x: &Point, partition: &crate::simulator::Partition) -> Result<Vec<f64>> {
        let n = partition.sector_count(self.dim);
        (0..partition.len(self.dim))
            .map(|cell| {
                let (lo, hi, s) = partition.cell_bounds(self.dim, cell);
                let (a, b) = match self.dim {
                    1 => (if s == 0 { 1.0 } else { -1.0 }, 0.0),
                    _ => (2.0 * PI * s as f64 / n as f64, 2.0 * PI * (s + 1) as f64 / n as f64),
                };
                self.cell_mass(x, lo, hi, a, b)
            })
            .collect()
    }
}

/// `∫_a^b (r − 1)^{−α/2} g(r) dr` for `1 ≤ a < b ≤ ∞`.
fn radial_integral<G: FnMut(f64) -> f64>(alpha: f64, a: f64, b: f64, mut g: G) -> f64 {
    let p = -alpha / 2.0;
    let mid = if a == 1.0 { 2.0f64.min(b) } else { a };
    let mut total = 0.0;
    if a == 1.0 {
        total += integrate_power_endpoint(|t| g(1.0 + t), p, mid - 1.0, &TIGHT)
            .expect("α < 2")
            .value;
    }
    if b > mid {
        let f = |r: f64| (r - 1.0).powf(p) * g(r);
        if b.is_finite() {
            total += integrate(f, mid, b, &[], &TIGHT).value;
        } else {
            // r = mid/u
            total += integrate(
                |u: f64| if u <= 0.0 { 0.0 } else { mid / (u * u) * (mid / u - 1.0).powf(p) * g(mid / u) },
                0.0,
                1.0,
                &[],
                &TIGHT,
            )
            .value;
        }
    }
    total
}
