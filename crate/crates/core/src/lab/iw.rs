//! Exit distribution from a simulated Green field through the
//! Ikeda–Watanabe formula `P(x, y) = ∫ G(x, v) ν(y − v) dv`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, normalize, polar2, scale, sub, Point};
use crate::measure::{Endpoints, SpectralMeasure};
use crate::model::StableModel;
use crate::quad::{gauss_legendre, QuadConfig};
use crate::simulator::{GreenField, Partition};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IwEstimate {
    pub value: f64,
    /// Monte Carlo error, bounded by the sum of per-cell errors since the
    /// cells share paths.
    pub std_err: f64,
    /// Change when the lattice subsampling is halved.
    pub quad_err: f64,
    /// Share of the value contributed by low-confidence Green cells.
    pub low_confidence_share: f64,
    pub flagged: bool,
}

impl IwEstimate {
    pub fn combined_err(&self) -> f64 {
        self.std_err + self.quad_err
    }
}

/// Occupation mass of a lattice cell split over a `q^d` grid of points,
/// keeping only the points inside the ball.
fn subsample(green: &GreenField, cell: usize, q: usize) -> Vec<Point> {
    let c = green.cell_center(cell);
    let w = 2.0 * green.radius / green.side as f64;
    let d = green.dim;
    let n = q.pow(d as u32);
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let mut p = c;
        let mut idx = k;
        for coord in p.iter_mut().take(d) {
            let j = idx % q;
            idx /= q;
            *coord += w * ((j as f64 + 0.5) / q as f64 - 0.5);
        }
        if norm(&p) < green.radius {
            pts.push(p);
        }
    }
    pts
}

struct Accum {
    value: f64,
    err: f64,
    low: f64,
}

/// `Σ_cells Ĝ_c |cell| f(v)` averaged over the subsample points of each cell.
fn lattice_sum<F>(green: &GreenField, q: usize, f: F) -> (Accum, f64)
where
    F: Fn(&Point) -> f64 + Sync,
{
    let vol = (2.0 * green.radius / green.side as f64).powi(green.dim as i32);
    let cells: Vec<usize> = (0..green.values.len()).filter(|&c| green.values[c] > 0.0).collect();
    let parts: Vec<(f64, f64, f64, f64)> = cells
        .par_iter()
        .map(|&c| {
            let avg = |q: usize| {
                let pts = subsample(green, c, q);
                if pts.is_empty() {
                    // the cell only touches the ball; fall back to its nearest inside point
                    let p = green.cell_center(c);
                    return f(&scale(&p, 0.999 * green.radius / norm(&p)));
                }
                pts.iter().map(&f).sum::<f64>() / pts.len() as f64
            };
            let fine = avg(q);
            let coarse = avg((q / 2).max(1));
            let mass = green.values[c] * vol;
            let low = if green.low_confidence(c) { mass * fine } else { 0.0 };
            (mass * fine, green.std_err[c] * vol * fine, low, mass * coarse)
        })
        .collect();
    let mut acc = Accum { value: 0.0, err: 0.0, low: 0.0 };
    let mut coarse = 0.0;
    for (v, e, l, c) in parts {
        acc.value += v;
        acc.err += e;
        acc.low += l;
        coarse += c;
    }
    (acc, coarse)
}

fn finish(acc: Accum, coarse: f64) -> IwEstimate {
    let share = if acc.value > 0.0 { acc.low / acc.value } else { 0.0 };
    IwEstimate {
        value: acc.value,
        std_err: acc.err,
        quad_err: (acc.value - coarse).abs(),
        low_confidence_share: share,
        flagged: share > 0.5,
    }
}

/// Pointwise Poisson kernel `∫ Ĝ(x, v) ν(y − v) dv` for a measure with a
/// surface density; `q` is the per-axis subsampling of each lattice cell.
pub fn poisson_kernel_iw(model: &StableModel, green: &GreenField, y: &Point, q: usize, min_jump: f64) -> Result<IwEstimate> {
    let m = model.measure();
    if m.surface_density(&[1.0, 0.0, 0.0]).is_none() {
        return Err(Error::Unsupported(
            "pointwise Poisson kernel needs a Lévy density; use cell masses for atoms".into(),
        ));
    }
    if norm(y) <= green.radius {
        return Err(Error::OutOfRange(y[..model.dim()].to_vec()));
    }
    let (d, alpha) = (model.dim() as i32, model.alpha());
    let kernel = |v: &Point| {
        let z = sub(y, v);
        let r = norm(&z);
        if r < min_jump {
            return 0.0;
        }
        let theta = scale(&z, 1.0 / r);
        m.surface_density(&theta).unwrap_or(0.0) * r.powf(-(d as f64) - alpha)
    };
    let (acc, coarse) = lattice_sum(green, q.max(1), kernel);
    Ok(finish(acc, coarse))
}

/// Directions and weights integrating a function on the circle against μ:
/// atoms exactly, the continuous part by composite Gauss–Legendre with
/// panel breaks at cap edges.
fn circle_rule(measure: &SpectralMeasure, panels: usize) -> Vec<(Point, f64)> {
    let mut rule: Vec<(Point, f64)> = measure.atoms().iter().map(|a| (a.direction, a.mass)).collect();
    if !measure.has_continuous_part() {
        return rule;
    }
    let mut breaks: Vec<f64> = (0..=panels).map(|i| 2.0 * PI * i as f64 / panels as f64).collect();
    for c in measure.caps() {
        let phi = c.center[1].atan2(c.center[0]);
        for b in [phi - c.radius, phi + c.radius] {
            breaks.push(b.rem_euclid(2.0 * PI));
        }
    }
    breaks.sort_by(f64::total_cmp);
    let (x, w) = gauss_legendre(8);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 1e-15 {
            continue;
        }
        for (xi, wi) in x.iter().zip(&w) {
            let phi = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let theta = polar2(phi);
            let dens = measure.surface_density(&theta).unwrap_or_else(|| continuous_density(measure, &theta));
            if dens > 0.0 {
                rule.push((theta, 0.5 * (b - a) * wi * dens));
            }
        }
    }
    rule
}

/// Surface density of the non-atomic part.
fn continuous_density(measure: &SpectralMeasure, theta: &Point) -> f64 {
    let mut v = measure.uniform_mass() / (2.0 * PI);
    for c in measure.caps() {
        if crate::geometry::angle_between(&c.center, theta) <= c.radius {
            v += c.density;
        }
    }
    v
}

#[inline]
fn cross2(a: &Point, b: &Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Distance along the ray `v + sθ` to the circle of radius `a > |v|`.
#[inline]
fn exit_distance(v: &Point, theta: &Point, a: f64) -> f64 {
    if a.is_infinite() {
        return f64::INFINITY;
    }
    let b = dot(v, theta);
    -b + (b * b + a * a - dot(v, v)).sqrt()
}

/// `∫ s^{−1−α} ds` over the part of the ray `v + sθ` inside the annulus
/// `a ≤ |p| < b` and the sector `[phi_lo, phi_hi]` (width at most π).
#[allow(clippy::too_many_arguments)]
fn ray_mass(v: &Point, theta: &Point, alpha: f64, min_jump: f64, a: f64, b: f64, b1: &Point, b2: &Point) -> f64 {
    let (mut lo, mut hi) = (exit_distance(v, theta, a).max(min_jump), exit_distance(v, theta, b));
    // cross(b1, p) ≥ 0 and cross(p, b2) ≥ 0 with p = v + sθ
    for (c, k) in [(cross2(b1, v), cross2(b1, theta)), (cross2(v, b2), cross2(theta, b2))] {
        if k > 0.0 {
            lo = lo.max(-c / k);
        } else if k < 0.0 {
            hi = hi.min(-c / k);
        } else if c < 0.0 {
            return 0.0;
        }
    }
    if hi <= lo {
        return 0.0;
    }
    let tail = if hi.is_finite() { hi.powf(-alpha) } else { 0.0 };
    (lo.powf(-alpha) - tail) / alpha
}

/// Sectors of width at most π/2 covering `[phi_lo, phi_hi]`.
fn split_sector(phi_lo: f64, phi_hi: f64) -> Vec<(Point, Point)> {
    let pieces = ((phi_hi - phi_lo) / (PI / 2.0)).ceil().max(1.0) as usize;
    let step = (phi_hi - phi_lo) / pieces as f64;
    (0..pieces)
        .map(|i| (polar2(phi_lo + step * i as f64), polar2(phi_lo + step * (i + 1) as f64)))
        .collect()
}

/// `ν({z : |z| ≥ min_jump, v + z ∈ A})` for the plane cell
/// `A = {a ≤ |p| < b} ∩ sector`.
#[allow(clippy::too_many_arguments)]
pub fn nu_sector_mass(
    model: &StableModel,
    v: &Point,
    min_jump: f64,
    a: f64,
    b: f64,
    phi_lo: f64,
    phi_hi: f64,
) -> Result<f64> {
    if model.dim() != 2 {
        return Err(Error::Unsupported("sector masses are implemented for d = 2".into()));
    }
    let rule = circle_rule(model.measure(), 256);
    let sectors = split_sector(phi_lo, phi_hi);
    Ok(rule
        .iter()
        .map(|(t, w)| w * sectors.iter().map(|(b1, b2)| ray_mass(v, t, model.alpha(), min_jump, a, b, b1, b2)).sum::<f64>())
        .sum())
}

/// Exit probabilities of the cells of `partition` from the Green field,
/// `Σ_v Ĝ(x, v) ν(A − v)`. Implemented for d = 1, 2.
///
/// Jumps shorter than `min_jump` are left out. A field simulated with
/// [`SmallJumps::Drop`](crate::simulator::SmallJumps::Drop) at cutoff `ε`
/// satisfies the identity exactly with `min_jump = ε`; the Gaussian
/// surrogate also exits by creeping, which no jump integral captures.
pub fn iw_cell_masses(
    model: &StableModel,
    green: &GreenField,
    partition: &Partition,
    q: usize,
    min_jump: f64,
) -> Result<Vec<IwEstimate>> {
    let d = model.dim();
    let alpha = model.alpha();
    let n_cells = partition.len(d);
    let ns = partition.sector_count(d);
    match d {
        1 => {
            let m = model.measure();
            let mut rule: Vec<(f64, f64)> = m.atoms().iter().map(|a| (a.direction[0], a.mass)).collect();
            if m.uniform_mass() > 0.0 {
                rule.push((1.0, m.uniform_mass() / 2.0));
                rule.push((-1.0, m.uniform_mass() / 2.0));
            }
            (0..n_cells)
                .map(|cell| {
                    let (a, b, s) = partition.cell_bounds(d, cell);
                    let sign = if s == 0 { 1.0 } else { -1.0 };
                    let f = |v: &Point| {
                        rule.iter()
                            .filter(|(t, _)| *t == sign)
                            .map(|(_, w)| {
                                let lo = (a - sign * v[0]).max(min_jump);
                                let hi = b - sign * v[0];
                                if hi <= lo {
                                    return 0.0;
                                }
                                let tail = if hi.is_finite() { hi.powf(-alpha) } else { 0.0 };
                                w * (lo.powf(-alpha) - tail) / alpha
                            })
                            .sum()
                    };
                    let (acc, coarse) = lattice_sum(green, q.max(1), f);
                    Ok(finish(acc, coarse))
                })
                .collect()
        }
        2 => {
            let rule = circle_rule(model.measure(), 256);
            (0..n_cells)
                .map(|cell| {
                    let (a, b, s) = partition.cell_bounds(d, cell);
                    let step = 2.0 * PI / ns as f64;
                    let sectors = split_sector(step * s as f64, step * (s + 1) as f64);
                    let f = |v: &Point| {
                        rule.iter()
                            .map(|(t, w)| {
                                w * sectors.iter().map(|(b1, b2)| ray_mass(v, t, alpha, min_jump, a, b, b1, b2)).sum::<f64>()
                            })
                            .sum()
                    };
                    let (acc, coarse) = lattice_sum(green, q.max(1), f);
                    Ok(finish(acc, coarse))
                })
                .collect()
        }
        _ => Err(Error::Unsupported("cell masses are implemented for d ≤ 2".into())),
    }
}

/// Total exit mass `Σ_v Ĝ(x, v) ν(B^c − v)` over jumps of length at least
/// `min_jump`; equals `1` minus the censored share up to lattice and Monte
/// Carlo error.
pub fn iw_total_mass(model: &StableModel, green: &GreenField, q: usize, min_jump: f64) -> IwEstimate {
    let m = model.measure();
    let alpha = model.alpha();
    let r = green.radius;
    let cfg = QuadConfig::new(1e-14, 1e-8);
    let f = |v: &Point| {
        let rv = norm(v);
        let axis = normalize(v).unwrap_or([1.0, 0.0, 0.0]);
        let jump = |psi: f64| {
            let s = -rv * psi.cos() + (r * r - rv * rv * psi.sin().powi(2)).sqrt();
            s.max(min_jump).powf(-alpha) / alpha
        };
        m.axial_integral(&axis, jump, 0.0, PI, &[], Endpoints::Plain, &cfg)
    };
    let (acc, coarse) = lattice_sum(green, q.max(1), f);
    finish(acc, coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::lab::isotropic_model;

    #[test]
    fn sector_masses_add_up_to_the_complement() {
        let model = isotropic_model(2, 1.0).unwrap();
        let v = point(&[0.3, -0.2]);
        let mut total = 0.0;
        for (a, b) in [(1.0, 1.5), (1.5, 3.0), (3.0, f64::INFINITY)] {
            for k in 0..4 {
                let s = PI / 2.0 * k as f64;
                total += nu_sector_mass(&model, &v, 0.0, a, b, s, s + PI / 2.0).unwrap();
            }
        }
        // uniform mass 1 spread over the circle: ν(B^c − v) = (1/2π)∫ s*(φ)^{−1} dφ
        let n = 20000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let t = polar2(2.0 * PI * (i as f64 + 0.5) / n as f64);
                1.0 / exit_distance(&v, &t, 1.0) / n as f64
            })
            .sum();
        assert!((total / oracle - 1.0).abs() < 1e-6, "{total} vs {oracle}");
    }

    #[test]
    fn atom_rays_hit_only_their_quadrants() {
        let model = StableModel::from_json(r#"{"d":2,"alpha":1.0,"spectral":{"atoms":[[[1,0],1.0],[[0,1],1.0]]}}"#)
            .unwrap();
        let v = point(&[0.2, 0.5]);
        // exit distances along ±e1, ±e2 from (0.2, 0.5)
        let (r1, r2) = (0.75f64.sqrt(), 0.96f64.sqrt());
        let expected = [1.0 / (r1 - 0.2) + 1.0 / (r2 - 0.5), 1.0 / (r1 + 0.2), 0.0, 1.0 / (r2 + 0.5)];
        for (k, e) in expected.iter().enumerate() {
            let lo = PI / 2.0 * k as f64;
            let m = nu_sector_mass(&model, &v, 0.0, 1.0, f64::INFINITY, lo, lo + PI / 2.0).unwrap();
            assert!((m - e).abs() < 1e-12, "quadrant {k}: {m} vs {e}");
        }
    }
}
