//! Three routes to the exit distribution of the unit ball on a coarse
//! partition: direct simulation, the Ikeda–Watanabe integral of the
//! simulated Green field, and the closed-form Poisson kernel (isotropic
//! models only).

use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;
use crate::geometry::Point;
use crate::lab::iw::iw_cell_masses;
use crate::lab::oracle::IsotropicPoisson;
use crate::model::StableModel;
use crate::simulator::{Partition, Simulator, SimulatorConfig, SmallJumps};

#[derive(Debug, Clone, Serialize)]
pub struct ClosureConfig {
    pub x: Point,
    pub partition: Partition,
    /// Run in [`SmallJumps::Drop`] mode with occupation on; the jump integral
    /// uses `min_jump = eps`, for which the identity is exact.
    pub sim: SimulatorConfig,
    /// Subsampling per lattice cell and axis for the jump integral.
    pub q: usize,
    /// Confidence level of the simulated frequencies is `1 − ci_alpha`.
    pub ci_alpha: f64,
}

impl Default for ClosureConfig {
    fn default() -> Self {
        ClosureConfig {
            x: [0.0; 3],
            partition: Partition::new(vec![1.0, 1.5, f64::INFINITY], 4),
            sim: SimulatorConfig {
                eps: 0.005,
                h: 2.5e-4,
                paths: 100_000,
                small_jumps: SmallJumps::Drop,
                lattice: 80,
                ..Default::default()
            },
            q: 4,
            ci_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureCell {
    pub cell: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub sector: usize,
    pub simulated: f64,
    /// Standard error of the simulated frequency (Wilson half-width / z).
    pub simulated_err: f64,
    pub iw: f64,
    pub iw_err: f64,
    pub closed_form: Option<f64>,
    pub sim_vs_iw: bool,
    pub sim_vs_closed: Option<bool>,
    pub iw_vs_closed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub checksum: String,
    pub x: Point,
    pub paths: usize,
    pub censored: f64,
    pub cells: Vec<ClosureCell>,
    pub all_agree: bool,
}

impl ClosureReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("cell,r_lo,r_hi,sector,simulated,simulated_err,iw,iw_err,closed_form\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.cell,
                c.r_lo,
                c.r_hi,
                c.sector,
                c.simulated,
                c.simulated_err,
                c.iw,
                c.iw_err,
                c.closed_form.map_or(String::new(), |v| v.to_string())
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Two estimates agree when they differ by at most twice the sum of their
/// errors.
fn agree(a: f64, ea: f64, b: f64, eb: f64) -> bool {
    (a - b).abs() <= 2.0 * (ea + eb)
}

pub fn oracle_closure(model: &StableModel, cfg: &ClosureConfig) -> Result<ClosureReport> {
    let d = model.dim();
    let sim_cfg = SimulatorConfig {
        small_jumps: SmallJumps::Drop,
        lattice: cfg.sim.lattice.max(1),
        ..cfg.sim.clone()
    };
    let sim = Simulator::new(model, sim_cfg.clone())?;
    let batch = sim.run(&cfg.x);
    let hm = batch.harmonic_measure(&cfg.partition, cfg.ci_alpha);
    let z = Normal::standard().inverse_cdf(1.0 - cfg.ci_alpha / 2.0);
    let green = batch.green_estimate().expect("occupation is on");
    let iw = iw_cell_masses(model, &green, &cfg.partition, cfg.q, sim_cfg.eps)?;
    let closed = if model.measure().is_isotropic() {
        Some(IsotropicPoisson::for_model(model)?.partition_masses(&cfg.x, &cfg.partition)?)
    } else {
        None
    };
    let cells: Vec<ClosureCell> = hm
        .cells
        .iter()
        .map(|c| {
            let (r_lo, r_hi, sector) = cfg.partition.cell_bounds(d, c.cell);
            let se = 0.5 * (c.hi - c.lo) / z;
            let w = iw[c.cell];
            let cf = closed.as_ref().map(|v| v[c.cell]);
            ClosureCell {
                cell: c.cell,
                r_lo,
                r_hi,
                sector,
                simulated: c.freq,
                simulated_err: se,
                iw: w.value,
                iw_err: w.combined_err(),
                closed_form: cf,
                sim_vs_iw: agree(c.freq, se, w.value, w.combined_err()),
                sim_vs_closed: cf.map(|v| agree(c.freq, se, v, 0.0)),
                iw_vs_closed: cf.map(|v| agree(w.value, w.combined_err(), v, 0.0)),
            }
        })
        .collect();
    let all_agree = cells
        .iter()
        .all(|c| c.sim_vs_iw && c.sim_vs_closed != Some(false) && c.iw_vs_closed != Some(false));
    Ok(ClosureReport {
        checksum: model.checksum(),
        x: cfg.x,
        paths: hm.paths,
        censored: hm.censored,
        cells,
        all_agree,
    })
}
