//! Monte Carlo paths of the process killed on leaving a ball.
//!
//! An increment over time `t` is a compound Poisson sum of the jumps longer
//! than `ε` (rate `|μ| ε^{-α}/α`, length `ε U^{-1/α}`, direction `~ μ/|μ|`)
//! plus a centred Gaussian with the covariance of the jumps shorter than
//! `ε`, or nothing in [`SmallJumps::Drop`] mode. Paths are Euler walks with
//! step `h`; the exit position is the first point outside the ball, so the
//! overshoot of the exiting jump is kept.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, Point};
use crate::model::StableModel;
use crate::stats::{mean_se, wilson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumps {
    GaussianSurrogate,
    Drop,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub eps: f64,
    pub h: f64,
    pub t_max: f64,
    pub paths: usize,
    pub seed: u64,
    pub small_jumps: SmallJumps,
    /// Radius of the ball centred at the origin.
    pub radius: f64,
    /// Occupation lattice cells per axis over `[-radius, radius]^d`; 0 turns
    /// occupation off.
    pub lattice: usize,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            eps: 0.02,
            h: 1e-3,
            t_max: 50.0,
            paths: 100_000,
            seed: 1,
            small_jumps: SmallJumps::GaussianSurrogate,
            radius: 1.0,
            lattice: 0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eps > 0.0
            && self.h > 0.0
            && self.t_max > 0.0
            && self.paths > 0
            && self.radius > 0.0
            && [self.eps, self.h, self.t_max, self.radius].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("invalid simulator configuration {self:?}")))
        }
    }
}

/// Paths per work unit; results are merged in unit order, which keeps the
/// batch bit-identical for any thread count.
const BLOCK: usize = 256;
const WAVE: usize = 64;

pub struct Simulator<'a> {
    model: &'a StableModel,
    cfg: SimulatorConfig,
    rate: f64,
    chol: [[f64; 3]; 3],
    /// CDF of the jump count over one step.
    step_cdf: Vec<f64>,
}

fn cholesky(a: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mut l = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathResult {
    pub tau: f64,
    pub exit: Point,
    pub censored: bool,
}

/// Occupation time of the killed paths, summed over paths per lattice cell.
#[derive(Debug, Clone, Serialize)]
pub struct Occupation {
    pub dim: usize,
    pub side: usize,
    pub radius: f64,
    pub paths: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub visits: Vec<u64>,
}

impl Occupation {
    fn new(dim: usize, side: usize, radius: f64) -> Self {
        let n = side.pow(dim as u32);
        Occupation {
            dim,
            side,
            radius,
            paths: 0,
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            visits: vec![0; n],
        }
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.radius / self.side as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.dim as i32)
    }

    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        let w = self.cell_width();
        let mut idx = 0;
        for i in (0..self.dim).rev() {
            let k = ((x[i] + self.radius) / w).floor();
            if k < 0.0 || k >= self.side as f64 {
                return None;
            }
            idx = idx * self.side + k as usize;
        }
        Some(idx)
    }

    pub fn cell_center(&self, mut idx: usize) -> Point {
        let w = self.cell_width();
        let mut p = [0.0; 3];
        for c in p.iter_mut().take(self.dim) {
            *c = -self.radius + w * ((idx % self.side) as f64 + 0.5);
            idx /= self.side;
        }
        p
    }

    fn merge(&mut self, other: &Occupation) {
        self.paths += other.paths;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.visits[i] += other.visits[i];
        }
    }
}

/// Per-path occupation scratch: time per cell for the current path.
struct PathTally<'o> {
    occ: &'o mut Occupation,
    current: Vec<f64>,
    touched: Vec<usize>,
}

impl PathTally<'_> {
    fn record(&mut self, x: &Point, h: f64) {
        if let Some(i) = self.occ.cell_of(x) {
            if self.current[i] == 0.0 {
                self.touched.push(i);
            }
            self.current[i] += h;
            self.occ.visits[i] += 1;
        }
    }

    fn finish(&mut self) {
        for &i in &self.touched {
            let v = self.current[i];
            self.occ.sum[i] += v;
            self.occ.sum_sq[i] += v * v;
            self.current[i] = 0.0;
        }
        self.touched.clear();
        self.occ.paths += 1;
    }
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a StableModel, cfg: SimulatorConfig) -> Result<Self> {
        cfg.validate()?;
        let alpha = model.alpha();
        let rate = model.total_mass() * cfg.eps.powf(-alpha) / alpha;
        let chol = match cfg.small_jumps {
            SmallJumps::GaussianSurrogate => cholesky(&model.small_jump_covariance(cfg.eps), model.dim()),
            SmallJumps::Drop => [[0.0; 3]; 3],
        };
        let lam = rate * cfg.h;
        let mut step_cdf = Vec::new();
        let (mut p, mut acc) = ((-lam).exp(), 0.0);
        let mut k = 0u32;
        while acc < 1.0 - 1e-16 && k < 10_000 {
            acc += p;
            step_cdf.push(acc);
            k += 1;
            p *= lam / k as f64;
            if p == 0.0 {
                break;
            }
        }
        Ok(Simulator {
            model,
            cfg,
            rate,
            chol,
            step_cdf,
        })
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.cfg
    }

    pub fn model(&self) -> &StableModel {
        self.model
    }

    /// Rate `|μ| ε^{-α}/α` of jumps longer than `ε`.
    pub fn large_jump_rate(&self) -> f64 {
        self.rate
    }

    /// Generator for path `index`: one ChaCha stream per path.
    pub fn path_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index);
        rng
    }

    fn add_jumps<R: Rng + ?Sized>(&self, count: u64, x: &mut Point, rng: &mut R) {
        let alpha = self.model.alpha();
        for _ in 0..count {
            let u: f64 = 1.0 - rng.random::<f64>();
            let r = self.cfg.eps * u.powf(-1.0 / alpha);
            let theta = self.model.measure().sample_direction(rng);
            for i in 0..3 {
                x[i] += r * theta[i];
            }
        }
    }

    fn add_gaussian<R: Rng + ?Sized>(&self, t: f64, x: &mut Point, rng: &mut R) {
        if self.cfg.small_jumps == SmallJumps::Drop {
            return;
        }
        let d = self.model.dim();
        let s = t.sqrt();
        let mut z = [0.0; 3];
        for zi in z.iter_mut().take(d) {
            *zi = StandardNormal.sample(rng);
        }
        for i in 0..d {
            let mut v = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                v += self.chol[i][k] * zk;
            }
            x[i] += s * v;
        }
    }

    /// Displacement over time `t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Point {
        let mut x = [0.0; 3];
        let lam = self.rate * t;
        let count = if lam > 0.0 {
            Poisson::new(lam).map(|p| p.sample(rng) as u64).unwrap_or(0)
        } else {
            0
        };
        self.add_jumps(count, &mut x, rng);
        self.add_gaussian(t, &mut x, rng);
        x
    }

    /// Number of large jumps in one step of length `h`.
    fn step_count<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        match self.step_cdf.iter().position(|&c| u < c) {
            Some(k) => k as u64,
            None => Poisson::new(self.rate * self.cfg.h)
                .map(|p| p.sample(rng) as u64)
                .unwrap_or(0),
        }
    }

    fn walk<R: Rng + ?Sized>(&self, x0: &Point, rng: &mut R, mut tally: Option<&mut PathTally>) -> PathResult {
        let r2 = self.cfg.radius * self.cfg.radius;
        let h = self.cfg.h;
        let max_steps = (self.cfg.t_max / h).ceil() as u64;
        let mut x = *x0;
        if dot(&x, &x) >= r2 {
            return PathResult {
                tau: 0.0,
                exit: x,
                censored: false,
            };
        }
        let mut steps = 0u64;
        loop {
            if let Some(t) = tally.as_deref_mut() {
                t.record(&x, h);
            }
            let count = self.step_count(rng);
            self.add_jumps(count, &mut x, rng);
            self.add_gaussian(h, &mut x, rng);
            steps += 1;
            if dot(&x, &x) >= r2 {
                return PathResult {
                    tau: steps as f64 * h,
                    exit: x,
                    censored: false,
                };
            }
            if steps >= max_steps {
                return PathResult {
                    tau: steps as f64 * h,
                    exit: x,
                    censored: true,
                };
            }
        }
    }

    /// One path from `x0` with the generator of path `index`.
    pub fn simulate_exit(&self, x0: &Point, index: u64) -> PathResult {
        let mut rng = self.path_rng(index);
        self.walk(x0, &mut rng, None)
    }

    fn run_block(&self, x0: &Point, block: usize) -> (Vec<PathResult>, Option<Occupation>) {
        let lo = block * BLOCK;
        let hi = ((block + 1) * BLOCK).min(self.cfg.paths);
        let d = self.model.dim();
        let mut occ = (self.cfg.lattice > 0).then(|| Occupation::new(d, self.cfg.lattice, self.cfg.radius));
        let mut current = vec![0.0; occ.as_ref().map_or(0, |o| o.sum.len())];
        let mut out = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let mut rng = self.path_rng(i as u64);
            match occ.as_mut() {
                Some(o) => {
                    let mut tally = PathTally {
                        occ: o,
                        current: std::mem::take(&mut current),
                        touched: Vec::new(),
                    };
                    out.push(self.walk(x0, &mut rng, Some(&mut tally)));
                    tally.finish();
                    current = tally.current;
                }
                None => out.push(self.walk(x0, &mut rng, None)),
            }
        }
        (out, occ)
    }

    /// All configured paths from `x0`.
    pub fn run(&self, x0: &Point) -> ExitBatch {
        let blocks = self.cfg.paths.div_ceil(BLOCK);
        let d = self.model.dim();
        let mut paths = Vec::with_capacity(self.cfg.paths);
        let mut occ = (self.cfg.lattice > 0).then(|| Occupation::new(d, self.cfg.lattice, self.cfg.radius));
        let ids: Vec<usize> = (0..blocks).collect();
        for wave in ids.chunks(WAVE) {
            let parts: Vec<_> = wave.par_iter().map(|&b| self.run_block(x0, b)).collect();
            for (p, o) in parts {
                paths.extend(p);
                if let (Some(total), Some(o)) = (occ.as_mut(), o) {
                    total.merge(&o);
                }
            }
        }
        ExitBatch {
            config: self.cfg.clone(),
            checksum: self.model.checksum(),
            dim: d,
            x0: *x0,
            paths,
            occupation: occ,
        }
    }
}

/// Cells `annulus × sector` of the complement of the ball.
#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    /// Increasing radii; the first is the ball radius, the last may be ∞.
    pub radii: Vec<f64>,
    /// Angular resolution: sectors in d = 2, polar bands in d = 3 (with
    /// twice as many azimuthal sectors); ignored in d = 1.
    pub sectors: usize,
}

impl Partition {
    pub fn new(radii: Vec<f64>, sectors: usize) -> Self {
        Partition { radii, sectors }
    }

    pub fn sector_count(&self, dim: usize) -> usize {
        match dim {
            1 => 2,
            2 => self.sectors,
            _ => 2 * self.sectors * self.sectors,
        }
    }

    pub fn len(&self, dim: usize) -> usize {
        (self.radii.len() - 1) * self.sector_count(dim)
    }

    pub fn is_empty(&self) -> bool {
        self.radii.len() < 2 || self.sectors == 0
    }

    pub fn sector_of(&self, dim: usize, y: &Point) -> usize {
        use std::f64::consts::PI;
        match dim {
            1 => (y[0] < 0.0) as usize,
            2 => {
                let a = y[1].atan2(y[0]).rem_euclid(2.0 * PI);
                ((a / (2.0 * PI) * self.sectors as f64) as usize).min(self.sectors - 1)
            }
            _ => {
                let s = self.sectors;
                let z = (y[2] / norm(y)).clamp(-1.0, 1.0);
                let band = (((z + 1.0) / 2.0 * s as f64) as usize).min(s - 1);
                let a = y[1].atan2(y[0]).rem_euclid(2.0 * PI);
                let az = ((a / (2.0 * PI) * (2 * s) as f64) as usize).min(2 * s - 1);
                band * 2 * s + az
            }
        }
    }

    /// Cell index of `y`, or `None` when `|y|` is outside the radii.
    pub fn cell_of(&self, dim: usize, y: &Point) -> Option<usize> {
        let r = norm(y);
        let k = self.radii.windows(2).position(|w| r >= w[0] && r < w[1])?;
        Some(k * self.sector_count(dim) + self.sector_of(dim, y))
    }

    /// `(r_lo, r_hi, sector)` of a cell.
    pub fn cell_bounds(&self, dim: usize, cell: usize) -> (f64, f64, usize) {
        let n = self.sector_count(dim);
        (self.radii[cell / n], self.radii[cell / n + 1], cell % n)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellEstimate {
    pub cell: usize,
    pub count: u64,
    pub freq: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicEstimate {
    pub paths: usize,
    pub censored: f64,
    /// Exits landing exactly on the sphere.
    pub boundary: u64,
    pub cells: Vec<CellEstimate>,
}

impl HarmonicEstimate {
    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.freq).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenField {
    pub dim: usize,
    pub side: usize,
    pub radius: f64,
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    pub visits: Vec<u64>,
}

impl GreenField {
    /// Cells visited fewer than 10 times.
    pub fn low_confidence(&self, cell: usize) -> bool {
        self.visits[cell] < 10
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        Occupation::new(self.dim, self.side, self.radius).cell_center(idx)
    }

    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        Occupation {
            dim: self.dim,
            side: self.side,
            radius: self.radius,
            paths: 0,
            sum: vec![],
            sum_sq: vec![],
            visits: vec![],
        }
        .cell_of(x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExitBatch {
    pub config: SimulatorConfig,
    pub checksum: String,
    pub dim: usize,
    pub x0: Point,
    pub paths: Vec<PathResult>,
    pub occupation: Option<Occupation>,
}

impl ExitBatch {
    pub fn censored_fraction(&self) -> f64 {
        self.paths.iter().filter(|p| p.censored).count() as f64 / self.paths.len() as f64
    }

    /// Mean and standard error of `min(τ, T_max)`.
    pub fn mean_exit_time(&self) -> (f64, f64) {
        let t: Vec<f64> = self.paths.iter().map(|p| p.tau).collect();
        mean_se(&t)
    }

    /// Exit frequencies per cell with Wilson intervals at level `1 − alpha`.
    pub fn harmonic_measure(&self, partition: &Partition, alpha: f64) -> HarmonicEstimate {
        let n = partition.len(self.dim);
        let mut counts = vec![0u64; n];
        let mut boundary = 0;
        let r = self.config.radius;
        for p in self.paths.iter().filter(|p| !p.censored) {
            if (norm(&p.exit) - r).abs() == 0.0 {
                boundary += 1;
            }
            if let Some(c) = partition.cell_of(self.dim, &p.exit) {
                counts[c] += 1;
            }
        }
        let total = self.paths.len() as u64;
        let cells = counts
            .iter()
            .enumerate()
            .map(|(cell, &count)| {
                let (lo, hi) = wilson(count, total, alpha);
                CellEstimate {
                    cell,
                    count,
                    freq: count as f64 / total as f64,
                    lo,
                    hi,
                }
            })
            .collect();
        HarmonicEstimate {
            paths: self.paths.len(),
            censored: self.censored_fraction(),
            boundary,
            cells,
        }
    }

    /// Occupation density per unit volume: `Ĝ(x0, cell)`.
    pub fn green_estimate(&self) -> Option<GreenField> {
        let o = self.occupation.as_ref()?;
        let n = o.paths as f64;
        let vol = o.cell_volume();
        let values = o.sum.iter().map(|s| s / n / vol).collect();
        let std_err = o
            .sum
            .iter()
            .zip(&o.sum_sq)
            .map(|(s, q)| {
                let m = s / n;
                ((q / n - m * m).max(0.0) / n).sqrt() / vol
            })
            .collect();
        Some(GreenField {
            dim: o.dim,
            side: o.side,
            radius: o.radius,
            values,
            std_err,
            visits: o.visits.clone(),
        })
    }

    /// One line per path: `tau,x1,..,xd,censored`, after a `#` line with the
    /// configuration as JSON.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# {}", serde_json::to_string(&self.config)?)?;
        let coords: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "tau,{},censored", coords.join(","))?;
        for p in &self.paths {
            let xs: Vec<String> = p.exit[..self.dim].iter().map(|v| format!("{v:.9e}")).collect();
            writeln!(w, "{:.6},{},{}", p.tau, xs.join(","), p.censored as u8)?;
        }
        Ok(())
    }

    /// `cell,mass,visits` for every visited lattice cell.
    pub fn write_occupation(&self, path: impl AsRef<Path>) -> Result<()> {
        let o = self
            .occupation
            .as_ref()
            .ok_or_else(|| Error::Unsupported("batch was run without an occupation lattice".into()))?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# {}", serde_json::to_string(&self.config)?)?;
        writeln!(w, "cell,mass,visits")?;
        for (i, (s, v)) in o.sum.iter().zip(&o.visits).enumerate() {
            if *v > 0 {
                writeln!(w, "{i},{:.9e},{v}", s / o.paths as f64)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentEvaluator;
    use crate::stats::ks_two_sample;

    fn cauchy() -> StableModel {
        StableModel::from_json(r#"{"d": 2, "alpha": 1.0, "spectral": {"uniform_mass": 1.0}}"#).unwrap()
    }

    fn cfg(paths: usize) -> SimulatorConfig {
        SimulatorConfig {
            paths,
            ..SimulatorConfig::default()
        }
    }

    #[test]
    fn start_outside_exits_immediately() {
        let m = cauchy();
        let s = Simulator::new(&m, cfg(1)).unwrap();
        let p = s.simulate_exit(&[2.0, 0.0, 0.0], 0);
        assert_eq!(p.tau, 0.0);
        assert_eq!(p.exit, [2.0, 0.0, 0.0]);
    }

    #[test]
    fn increments_match_characteristic_function() {
        let m = cauchy();
        let s = Simulator::new(&m, SimulatorConfig { eps: 0.01, ..cfg(1) }).unwrap();
        let phi = ExponentEvaluator::new(&m).unwrap().phi_eval(&[1.0, 0.0, 0.0]);
        let mut rng = s.path_rng(7);
        let n = 100_000;
        let (mut re, mut mx) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let x = s.sample_increment(1.0, &mut rng);
            re.push(x[0].cos());
            mx.push(x[0].clamp(-50.0, 50.0));
        }
        let (m_re, se_re) = mean_se(&re);
        assert!((m_re - (-phi).exp()).abs() < 3.0 * se_re + 2e-3, "{m_re} vs {}", (-phi).exp());
        let (m_x, se_x) = mean_se(&mx);
        assert!(m_x.abs() < 3.0 * se_x);
    }

    #[test]
    fn jump_count_has_poisson_mean() {
        let m = cauchy();
        let s = Simulator::new(&m, cfg(1)).unwrap();
        let mut rng = s.path_rng(3);
        let n = 10_000;
        let counts: Vec<f64> = (0..n).map(|_| (0..1000).map(|_| s.step_count(&mut rng)).sum::<u64>() as f64).collect();
        let (mean, se) = mean_se(&counts);
        assert!((s.large_jump_rate() - 50.0).abs() < 1e-9);
        assert!((mean - 50.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn batches_are_reproducible_across_thread_counts() {
        let m = cauchy();
        let s = Simulator::new(&m, SimulatorConfig { lattice: 8, ..cfg(700) }).unwrap();
        let a = s.run(&[0.2, 0.0, 0.0]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| s.run(&[0.2, 0.0, 0.0]));
        assert_eq!(a.paths, b.paths);
        assert_eq!(a.occupation.as_ref().unwrap().sum, b.occupation.as_ref().unwrap().sum);
    }

    #[test]
    fn occupation_mass_equals_exit_time() {
        let m = cauchy();
        let s = Simulator::new(&m, SimulatorConfig { lattice: 16, ..cfg(2000) }).unwrap();
        let b = s.run(&[0.0; 3]);
        let o = b.occupation.as_ref().unwrap();
        let total: f64 = o.sum.iter().sum::<f64>() / o.paths as f64;
        assert!((total - b.mean_exit_time().0).abs() < 1e-9);
        let g = b.green_estimate().unwrap();
        for (i, v) in g.values.iter().enumerate() {
            if norm(&g.cell_center(i)) > 1.0 + g.radius / 8.0 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn harmonic_measure_is_a_partition_of_mass() {
        let m = cauchy();
        let s = Simulator::new(&m, cfg(4000)).unwrap();
        let b = s.run(&[0.0; 3]);
        let part = Partition::new(vec![1.0, 1.5, 2.0, 4.0, f64::INFINITY], 8);
        let h = b.harmonic_measure(&part, 0.05);
        assert!((h.total() - (1.0 - h.censored)).abs() < 1e-12);
        assert_eq!(h.boundary, 0);
        assert!(b.paths.iter().all(|p| p.censored || norm(&p.exit) >= 1.0));
    }

    #[test]
    fn exit_positions_scale_with_the_ball() {
        let m = cauchy();
        let unit = Simulator::new(&m, cfg(3000)).unwrap().run(&[0.3, 0.0, 0.0]);
        let big = Simulator::new(
            &m,
            SimulatorConfig {
                radius: 2.0,
                h: 2e-3,
                eps: 0.04,
                seed: 99,
                ..cfg(3000)
            },
        )
        .unwrap()
        .run(&[0.6, 0.0, 0.0]);
        let a: Vec<f64> = unit.paths.iter().map(|p| p.exit[0]).collect();
        let b: Vec<f64> = big.paths.iter().map(|p| p.exit[0] / 2.0).collect();
        assert!(ks_two_sample(&a, &b).1 > 0.01);
    }
}
