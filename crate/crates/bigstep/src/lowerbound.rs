//! Worst-case dataset constructions that keep the loss above the transition
//! threshold for provably many steps, and direct-simulation verifiers for
//! the resulting floor on the transition time.
//!
//! Both constructions are two-dimensional with margin direction `e1`:
//! - the *classification-hard* dataset keeps one point misclassified for at
//!   least `n/(16 gamma)` steps;
//! - the *stability-hard* dataset classifies everything quickly but keeps
//!   `F > 2/eta` for at least `1 + 1/(59 gamma^2)` steps, by tuning the
//!   orthogonal coordinate `delta_star` so the first step lands exactly one
//!   unit below the low-loss threshold height `lambda_lb`.

use serde::Serialize;

use crate::dataset::{CertificateKind, Dataset, MarginCertificate};
use crate::diagnostics::eta1;
use crate::engine::{run, RunConfig, Trajectory};
use crate::math::dot;
use crate::{Error, Result};

/// Largest admissible margin for the hard constructions.
pub const GAMMA_MAX: f64 = 1.0 / 6.0;

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0 < gamma && gamma <= GAMMA_MAX) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be in (0, 1/6], got {gamma}"
        )));
    }
    Ok(())
}

fn check_eta(n: usize, gamma: f64, eta: f64) -> Result<()> {
    let floor = eta1(gamma, n);
    if eta < floor {
        return Err(Error::InvalidParameter(format!(
            "eta {eta} below the lower-bound regime threshold {floor}"
        )));
    }
    Ok(())
}

/// Certificate for the hard datasets: margin `gamma` along `e1` holds by
/// construction.
fn axis_certificate(gamma: f64) -> MarginCertificate {
    MarginCertificate {
        gamma,
        w_star: vec![1.0, 0.0],
        v_star: Some(vec![-0.0, 1.0]),
        kind: CertificateKind::Nominal,
        support: Vec::new(),
    }
}

/// Dataset that resists classification: one point at `(gamma, -gamma)`
/// pulling against `n - 1` aligned points at `(gamma, sqrt(1 - gamma^2))`.
pub fn hard_dataset_classify(n: usize, gamma: f64) -> Result<Dataset> {
    if n < 6 {
        return Err(Error::InvalidParameter(format!(
            "classification-hard dataset needs n >= 6, got {n}"
        )));
    }
    check_gamma(gamma)?;
    let up = (1.0 - gamma * gamma).sqrt();
    let mut rows = vec![vec![gamma, -gamma]];
    rows.extend(std::iter::repeat_n(vec![gamma, up], n - 1));
    Dataset::from_rows(&rows)
}

/// Parameters of the stability-hard construction.
#[derive(Debug, Clone, Serialize)]
pub struct StableHardParams {
    pub n: usize,
    /// Number of copies of the tuned point, `ceil(n/2)`.
    pub k: usize,
    pub gamma: f64,
    pub eta: f64,
    /// Tuned orthogonal coordinate, the smaller root of the placement
    /// quadratic; always within `[(4/3) gamma^2, 7 gamma^2]`.
    pub delta_star: f64,
    /// Height along the tuned point above which its loss drops below
    /// `2n/(k eta)`: `log(1/(exp(2n/(k eta)) - 1))`, greater than 1 in this
    /// regime.
    pub lambda_lb: f64,
}

impl StableHardParams {
    /// Coefficients `(b, c)` of the placement quadratic
    /// `delta^2 - b delta + c = 0`.
    fn quadratic_coefficients(&self) -> (f64, f64) {
        let ratio = self.n as f64 / self.k as f64;
        let b = (ratio - 1.0) * (1.0 - self.gamma * self.gamma).sqrt();
        let c = ratio * self.gamma * self.gamma
            - (2.0 * ratio / self.eta) * (self.lambda_lb - 1.0);
        (b, c)
    }

    /// Residual of the placement quadratic at `delta_star`; near zero when
    /// the root was computed accurately.
    pub fn quadratic_residual(&self) -> f64 {
        let (b, c) = self.quadratic_coefficients();
        self.delta_star * self.delta_star - b * self.delta_star + c
    }

    /// The tuned point `(gamma, -delta_star)`.
    pub fn v1(&self) -> [f64; 2] {
        [self.gamma, -self.delta_star]
    }

    /// The aligned point `(gamma, sqrt(1 - gamma^2))`.
    pub fn v2(&self) -> [f64; 2] {
        [self.gamma, (1.0 - self.gamma * self.gamma).sqrt()]
    }
}

/// Solves the placement quadratic for the stability-hard dataset.
///
/// Uses the rationalized form `2c / (b + sqrt(b^2 - 4c))` for the smaller
/// root: for large `eta` the naive `(b - sqrt(disc))/2` cancels
/// catastrophically.
pub fn delta_star(n: usize, gamma: f64, eta: f64) -> Result<StableHardParams> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "stability-hard dataset needs n >= 2, got {n}"
        )));
    }
    check_gamma(gamma)?;
    check_eta(n, gamma, eta)?;
    let k = n.div_ceil(2);
    let lambda_lb = -((2.0 * n as f64) / (k as f64 * eta)).exp_m1().ln();
    let mut params = StableHardParams {
        n,
        k,
        gamma,
        eta,
        delta_star: 0.0,
        lambda_lb,
    };
    let (b, c) = params.quadratic_coefficients();
    let disc = b * b - 4.0 * c;
    if disc <= 0.0 {
        return Err(Error::NegativeDiscriminant { value: disc });
    }
    params.delta_star = 2.0 * c / (b + disc.sqrt());
    Ok(params)
}

/// Builds the stability-hard dataset: `k` copies of `(gamma, -delta_star)`
/// and `n - k` copies of `(gamma, sqrt(1 - gamma^2))`.
pub fn hard_dataset_stable(n: usize, gamma: f64, eta: f64) -> Result<(Dataset, StableHardParams)> {
    let params = delta_star(n, gamma, eta)?;
    let v1 = params.v1().to_vec();
    let v2 = params.v2().to_vec();
    let mut rows = Vec::with_capacity(n);
    rows.extend(std::iter::repeat_n(v1, params.k));
    rows.extend(std::iter::repeat_n(v2, n - params.k));
    let data = Dataset::from_rows(&rows)?;
    Ok((data, params))
}

/// Floor on the worst-case transition time over the two hard datasets:
/// `(n/gamma + 1/gamma^2) / 118`.
pub fn worst_case_transition_floor(n: usize, gamma: f64) -> f64 {
    (n as f64 / gamma + 1.0 / (gamma * gamma)) / 118.0
}

/// Outcome of the classification-time verifier.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub n: usize,
    pub gamma: f64,
    pub eta: f64,
    /// First step `t >= 1` with every margin nonnegative, if observed.
    /// `t = 0` is excluded: the zero start makes every margin exactly zero.
    pub t_c: Option<usize>,
    /// `n / (16 gamma)`.
    pub bound: f64,
    /// Some margin is negative at every step `1 <= t <= bound`.
    pub negative_through_bound: bool,
    /// `t_c >= 1 + bound` (holds vacuously if `t_c` is beyond the horizon).
    pub strict_floor: bool,
    /// Margin of the adversarial point after one step.
    pub first_margin: f64,
    /// `first_margin <= -eta * gamma / 8`.
    pub first_margin_ok: bool,
    /// The adversarial point is the only misclassified one before `t_c`.
    pub misclassified_only_first: bool,
    pub passed: bool,
}

/// Runs GD on the classification-hard dataset and verifies the time floor.
///
/// The horizon is ten times the bound; a `t_c` beyond it is reported absent,
/// which still certifies the floor.
pub fn verify_classify_bound(n: usize, gamma: f64, eta: f64) -> Result<(ClassifyReport, Trajectory)> {
    check_eta(n, gamma, eta)?;
    let data = hard_dataset_classify(n, gamma)?;
    let cert = axis_certificate(gamma);
    let bound = n as f64 / (16.0 * gamma);
    let horizon = (10.0 * bound).ceil() as usize + 2;
    let mut cfg = RunConfig::horizon(eta, horizon);
    cfg.record_margins = true;
    let traj = run(&data, &cert, &cfg)?;

    let t_c = traj.records[1..]
        .iter()
        .find(|r| r.min_margin >= 0.0)
        .map(|r| r.t);
    let bound_int = bound.floor() as usize;
    let negative_through_bound = traj.records[1..=bound_int.min(traj.num_records() - 1)]
        .iter()
        .all(|r| r.min_margin < 0.0);
    let strict_floor = t_c.is_none_or(|t| t as f64 >= 1.0 + bound);
    let first_margin = traj.margins_at(1).expect("margins recorded")[0];
    let first_margin_ok = first_margin <= -eta * gamma / 8.0;
    let t_c_eff = t_c.unwrap_or(traj.num_records());
    let misclassified_only_first = traj.records[1..]
        .iter()
        .take_while(|r| r.t < t_c_eff)
        .all(|r| {
            let m = traj.margins_at(r.t).expect("margins recorded");
            m[0] < 0.0 && m[1..].iter().all(|v| *v >= 0.0)
        });

    let passed = negative_through_bound && strict_floor && first_margin_ok;
    Ok((
        ClassifyReport {
            n,
            gamma,
            eta,
            t_c,
            bound,
            negative_through_bound,
            strict_floor,
            first_margin,
            first_margin_ok,
            misclassified_only_first,
            passed,
        },
        traj,
    ))
}

/// Outcome of the stability-time verifier.
#[derive(Debug, Clone, Serialize)]
pub struct StableReport {
    pub params: StableHardParams,
    /// First step with `F <= 2/eta`, if observed within the horizon.
    pub t_s: Option<usize>,
    /// `1 + 1/(59 gamma^2)`.
    pub bound: f64,
    /// `F > 2/eta` at every step `t <= bound`.
    pub above_loose_through_bound: bool,
    /// `<w_1, v1> = lambda_lb - 1` within 1e-9.
    pub first_step_height_ok: bool,
    /// `<w_1, v2> >= eta / 24`.
    pub first_step_aligned_ok: bool,
    /// `<w_t, v1>` increases for `1 <= t < t_s`.
    pub height_increasing: bool,
    /// Per-step growth of `<w_t, v1>` stays at most `59 gamma^2` before `t_s`.
    pub growth_bounded: bool,
    pub passed: bool,
}

/// Runs GD on the stability-hard dataset and verifies the loss floor.
pub fn verify_stable_bound(n: usize, gamma: f64, eta: f64) -> Result<(StableReport, Trajectory)> {
    let (data, params) = hard_dataset_stable(n, gamma, eta)?;
    let cert = axis_certificate(gamma);
    let bound = 1.0 + 1.0 / (59.0 * gamma * gamma);
    let horizon = (10.0 * bound).ceil() as usize + 2;
    let cfg = RunConfig::horizon(eta, horizon);
    let traj = run(&data, &cert, &cfg)?;

    let loose = 2.0 / eta;
    let t_s = traj
        .records
        .iter()
        .find(|r| r.loss <= loose)
        .map(|r| r.t);
    let bound_int = bound.floor() as usize;
    let above_loose_through_bound = traj.records[..=bound_int.min(traj.num_records() - 1)]
        .iter()
        .all(|r| r.loss > loose);

    let v1 = params.v1();
    let v2 = params.v2();
    let height = |t: usize| dot(&traj.records[t].w, &v1);
    let first_height = height(1);
    let first_step_height_ok = (first_height - (params.lambda_lb - 1.0)).abs() <= 1e-9;
    let first_step_aligned_ok = dot(&traj.records[1].w, &v2) >= eta / 24.0;

    let t_s_eff = t_s.unwrap_or(traj.num_records() - 1);
    let mut height_increasing = true;
    let mut growth_bounded = true;
    let growth_cap = 59.0 * gamma * gamma;
    for t in 1..t_s_eff {
        let step = height(t + 1) - height(t);
        if step <= 0.0 {
            height_increasing = false;
        }
        if step > growth_cap * (1.0 + 1e-9) {
            growth_bounded = false;
        }
    }

    let passed = above_loose_through_bound
        && first_step_height_ok
        && first_step_aligned_ok
        && height_increasing
        && growth_bounded;
    Ok((
        StableReport {
            params,
            t_s,
            bound,
            above_loose_through_bound,
            first_step_height_ok,
            first_step_aligned_ok,
            height_increasing,
            growth_bounded,
            passed,
        },
        traj,
    ))
}
