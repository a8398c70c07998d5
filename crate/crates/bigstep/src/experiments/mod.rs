//! Seeded parameter sweeps over step sizes and dimensions, plus the
//! stable-phase rate experiment.
//!
//! Cells of a sweep are independent work items: each dataset's seed is
//! derived from the master seed and the cell coordinates, so any worker
//! count (and any scheduling) produces byte-identical aggregated output.

pub mod svg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::dataset::generate_random;
use crate::diagnostics::{eta0, transition_time};
use crate::engine::{run, RunConfig, StopRule};
use crate::math::fmt_f64;
use crate::{Error, Result};

/// How the dataset size is chosen per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NRule {
    /// `n = d` for each cell.
    EqualToD,
    /// Fixed `n` for every cell.
    Fixed(usize),
}

/// Which transition threshold a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// `1/(8 eta)`.
    Eighth,
    /// `2/eta`.
    Two,
}

impl ThresholdKind {
    pub fn value(self, eta: f64) -> f64 {
        match self {
            ThresholdKind::Eighth => 1.0 / (8.0 * eta),
            ThresholdKind::Two => 2.0 / eta,
        }
    }
}

/// Grid description for a transition-time sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub etas: Vec<f64>,
    pub gamma: f64,
    pub datasets_per_cell: usize,
    pub n_rule: NRule,
    pub seed: u64,
    pub threshold: ThresholdKind,
    pub t_max: usize,
}

impl Default for SweepConfig {
    /// Desk-scale defaults: `d` in {2, 4, 8}, `eta` in {4, ..., 512},
    /// 256 datasets per cell. The full-scale grid (`d` up to 128, 4096
    /// datasets per cell) is a config change, not a code change.
    fn default() -> Self {
        SweepConfig {
            dims: vec![2, 4, 8],
            etas: (2..=9).map(|k| f64::from(1u32 << k)).collect(),
            gamma: 0.2,
            datasets_per_cell: 256,
            n_rule: NRule::EqualToD,
            seed: 0,
            threshold: ThresholdKind::Two,
            t_max: 20_000,
        }
    }
}

impl SweepConfig {
    pub fn n_for(&self, d: usize) -> usize {
        match self.n_rule {
            NRule::EqualToD => d,
            NRule::Fixed(n) => n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.etas.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one dimension and one step size".into(),
            ));
        }
        if self.etas.iter().any(|e| *e <= 0.0) {
            return Err(Error::InvalidParameter("step sizes must be positive".into()));
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(Error::InvalidParameter("gamma must be in (0, 1)".into()));
        }
        if self.datasets_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "datasets_per_cell must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregated result of one `(d, eta)` cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub eta: f64,
    /// Largest transition time over the cell's datasets; absent when any
    /// dataset failed to transition within the budget.
    pub worst_tau: Option<usize>,
    /// Mean over the datasets that transitioned; NaN when none did.
    pub mean_tau: f64,
    pub not_transitioned: usize,
    /// Wall-clock seconds for the cell (not serialized to CSV).
    pub wall_time: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for dataset `index` of cell `(d, eta)`: the master seed xor a mix of
/// the cell coordinates. Stable across platforms and worker counts.
pub fn cell_seed(master: u64, d: usize, eta: f64, index: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(d as u64) ^ eta.to_bits()) ^ index as u64);
    master ^ h
}

/// Transition time of one derived dataset, measured with the engine's exact
/// arithmetic. Re-runnable in isolation for spot checks.
pub fn measure_cell_tau(
    config: &SweepConfig,
    d: usize,
    eta: f64,
    index: usize,
) -> Result<Option<usize>> {
    let n = config.n_for(d);
    let seed = cell_seed(config.seed, d, eta, index);
    let (data, cert) = generate_random(d, n, config.gamma, seed)?;
    let threshold = config.threshold.value(eta);
    let cfg = RunConfig {
        eta,
        t_max: config.t_max,
        record_margins: false,
        stop: StopRule::AfterTransition {
            threshold,
            grace: 0,
        },
        w0: None,
    };
    let traj = run(&data, &cert, &cfg)?;
    Ok(transition_time(&traj, threshold))
}

fn run_cell(config: &SweepConfig, d: usize, eta: f64) -> Result<SweepRow> {
    let start = Instant::now();
    let mut worst: Option<usize> = None;
    let mut sum = 0usize;
    let mut transitioned = 0usize;
    let mut not_transitioned = 0usize;
    for index in 0..config.datasets_per_cell {
        match measure_cell_tau(config, d, eta, index)? {
            Some(tau) => {
                worst = Some(worst.map_or(tau, |w| w.max(tau)));
                sum += tau;
                transitioned += 1;
            }
            None => not_transitioned += 1,
        }
    }
    Ok(SweepRow {
        d,
        eta,
        worst_tau: if not_transitioned == 0 { worst } else { None },
        mean_tau: if transitioned > 0 {
            sum as f64 / transitioned as f64
        } else {
            f64::NAN
        },
        not_transitioned,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs the full sweep with the given worker count. Rows are sorted by
/// `(d, eta)` and identical for any worker count.
pub fn sweep_tau_vs_eta(config: &SweepConfig, workers: usize) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut cells: Vec<(usize, f64)> = Vec::new();
    for &d in &config.dims {
        for &eta in &config.etas {
            cells.push((d, eta));
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, eta)| run_cell(config, d, eta))
            .collect()
    })
}

/// CSV with columns `d,eta,worst_tau,mean_tau,not_transitioned`; absent
/// values serialize as empty fields. Wall time is intentionally excluded so
/// repeated runs are byte-identical.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("d,eta,worst_tau,mean_tau,not_transitioned\n");
    for r in rows {
        let worst = r.worst_tau.map(|t| t.to_string()).unwrap_or_default();
        let mean = if r.mean_tau.is_nan() {
            String::new()
        } else {
            fmt_f64(r.mean_tau)
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.d,
            fmt_f64(r.eta),
            worst,
            mean,
            r.not_transitioned
        ));
    }
    out
}

/// One step size of the stable-phase rate experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub eta: f64,
    /// Transition step at threshold `1/(8 eta)`; absent when the budget ran
    /// out first (the row is then flagged, not an error).
    pub tau: Option<usize>,
    /// `max_{t > tau} F(w_t) * eta * gamma^2 * (t - tau)`; at most 8 when
    /// the stable-phase guarantee holds.
    pub max_normalized: f64,
    /// Loss at the final recorded step.
    pub final_loss: f64,
}

/// Measures the stable-phase constant on one dataset across step sizes.
/// Requires `d = 2` and every step size at or above the regime threshold.
pub fn rate_experiment(
    data: &crate::dataset::Dataset,
    cert: &crate::dataset::MarginCertificate,
    etas: &[f64],
    t_budget: usize,
) -> Result<Vec<RateRow>> {
    if data.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: data.dim(),
        });
    }
    let floor = eta0(cert.gamma, data.len());
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        if eta < floor {
            return Err(Error::InvalidParameter(format!(
                "eta {eta} below the regime threshold {floor}"
            )));
        }
        let traj = run(data, cert, &RunConfig::horizon(eta, t_budget))?;
        let threshold = 1.0 / (8.0 * eta);
        let tau = transition_time(&traj, threshold);
        let mut max_normalized = f64::NAN;
        if let Some(tau) = tau {
            max_normalized = traj.records[tau + 1..]
                .iter()
                .map(|r| r.loss * eta * cert.gamma * cert.gamma * (r.t - tau) as f64)
                .fold(0.0, f64::max);
        }
        rows.push(RateRow {
            eta,
            tau,
            max_normalized,
            final_loss: traj.records.last().expect("nonempty").loss,
        });
    }
    Ok(rows)
}

/// CSV with columns `eta,tau,max_normalized,final_loss`.
pub fn rate_to_csv(rows: &[RateRow]) -> String {
    let mut out = String::from("eta,tau,max_normalized,final_loss\n");
    for r in rows {
        let tau = r.tau.map(|t| t.to_string()).unwrap_or_default();
        let norm = if r.max_normalized.is_nan() {
            String::new()
        } else {
            fmt_f64(r.max_normalized)
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(r.eta),
            tau,
            norm,
            fmt_f64(r.final_loss)
        ));
    }
    out
}
