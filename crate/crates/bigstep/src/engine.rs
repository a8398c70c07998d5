//! Logistic loss, gradient, gradient potential, and the GD iteration loop.
//!
//! All sums run left-to-right in index order so results are reproducible
//! bit-for-bit on the same platform. Per-example margins can exceed 709 in
//! magnitude at large step sizes; everything routes through the stable
//! branches in [`crate::math`].

use crate::dataset::{Dataset, MarginCertificate};
use crate::diagnostics::DerivedConstants;
use crate::math::{dot, fmt_f64, l2_norm, loss_and_weight};
use crate::{Error, Result};

/// One-pass evaluation of the objective at a point.
#[derive(Debug, Clone)]
pub struct PointEval {
    /// `F(w) = (1/n) sum_i log(1 + exp(-<w, x_i>))`.
    pub loss: f64,
    /// Gradient potential `G(w) = (1/n) sum_i 1/(exp(<w, x_i>) + 1)`.
    pub potential: f64,
    /// `grad F(w) = -(1/n) sum_i x_i / (exp(<w, x_i>) + 1)`.
    pub grad: Vec<f64>,
    /// Smallest per-example margin `min_i <w, x_i>`.
    pub min_margin: f64,
}

/// Evaluates loss, potential, gradient, and min margin in a single pass.
/// When `margins_out` is given, the per-example margins are appended to it.
pub fn evaluate(w: &[f64], data: &Dataset, mut margins_out: Option<&mut Vec<f64>>) -> PointEval {
    let n = data.len();
    let d = data.dim();
    debug_assert_eq!(w.len(), d);
    let mut loss_sum = 0.0;
    let mut weight_sum = 0.0;
    let mut grad_acc = vec![0.0; d];
    let mut min_margin = f64::INFINITY;
    for x in data.iter_points() {
        let a = dot(w, x);
        let (l, wgt) = loss_and_weight(a);
        loss_sum += l;
        weight_sum += wgt;
        for (g, xj) in grad_acc.iter_mut().zip(x) {
            *g += wgt * xj;
        }
        min_margin = min_margin.min(a);
        if let Some(out) = margins_out.as_deref_mut() {
            out.push(a);
        }
    }
    let inv_n = 1.0 / n as f64;
    for g in grad_acc.iter_mut() {
        *g *= -inv_n;
    }
    PointEval {
        loss: loss_sum * inv_n,
        potential: weight_sum * inv_n,
        grad: grad_acc,
        min_margin,
    }
}

/// `F(w)`.
pub fn loss(w: &[f64], data: &Dataset) -> f64 {
    evaluate(w, data, None).loss
}

/// `grad F(w)`.
pub fn gradient(w: &[f64], data: &Dataset) -> Vec<f64> {
    evaluate(w, data, None).grad
}

/// Gradient potential `G(w)`, always in `[0, 1]`.
pub fn potential(w: &[f64], data: &Dataset) -> f64 {
    evaluate(w, data, None).potential
}

/// One GD step: `w - eta * grad F(w)`.
pub fn gd_step(w: &[f64], eta: f64, data: &Dataset) -> Vec<f64> {
    let grad = gradient(w, data);
    w.iter().zip(&grad).map(|(wi, gi)| wi - eta * gi).collect()
}

/// When to stop a run before the step budget is exhausted.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// Run exactly `t_max` steps.
    Horizon,
    /// Keep stepping until `F <= threshold`, then take `grace` extra steps
    /// (still bounded by `t_max`).
    AfterTransition { threshold: f64, grace: usize },
}

/// Configuration for a GD run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub eta: f64,
    /// Maximum number of steps (the trajectory has `t_max + 1` records when
    /// no stop rule fires earlier).
    pub t_max: usize,
    /// Record per-example margins at every step. Off by default: the margins
    /// table is `n` doubles per step.
    pub record_margins: bool,
    pub stop: StopRule,
    /// Start point override; the default start is the origin and all
    /// trajectory-conditional checks assume it.
    pub w0: Option<Vec<f64>>,
}

impl RunConfig {
    /// Fixed-horizon run.
    pub fn horizon(eta: f64, t_max: usize) -> Self {
        RunConfig {
            eta,
            t_max,
            record_margins: false,
            stop: StopRule::Horizon,
            w0: None,
        }
    }

    /// Run until `F <= threshold`, then `grace` more steps, capped at `t_max`.
    pub fn until_transition(eta: f64, threshold: f64, grace: usize, t_max: usize) -> Self {
        RunConfig {
            eta,
            t_max,
            record_margins: false,
            stop: StopRule::AfterTransition { threshold, grace },
            w0: None,
        }
    }
}

/// Per-step record of a trajectory.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: usize,
    pub w: Vec<f64>,
    /// `F(w_t)`.
    pub loss: f64,
    /// `G(w_t)`.
    pub potential: f64,
    pub grad_norm: f64,
    pub min_margin: f64,
    /// Component along the certified margin direction.
    pub w_hat: f64,
    /// Signed component along `v_star` for `d = 2`; norm of the orthogonal
    /// projection for `d > 2`.
    pub w_tilde: f64,
}

/// An immutable GD trajectory with per-step metrics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub eta: f64,
    pub d: usize,
    pub n: usize,
    pub constants: DerivedConstants,
    pub records: Vec<StepRecord>,
    margins: Option<Vec<f64>>,
    /// Human-readable anomalies observed during the run (e.g. transition not
    /// reached within the horizon although the step size is in the regime
    /// that guarantees it).
    pub notes: Vec<String>,
}

impl Trajectory {
    /// Assembles a trajectory from prebuilt records, validating the margins
    /// table shape. Used by tests and tools that reload trajectories.
    pub fn from_parts(
        eta: f64,
        d: usize,
        n: usize,
        constants: DerivedConstants,
        records: Vec<StepRecord>,
        margins: Option<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(m) = &margins {
            if m.len() != records.len() * n {
                return Err(Error::DimensionMismatch {
                    expected: records.len() * n,
                    got: m.len(),
                });
            }
        }
        Ok(Trajectory {
            eta,
            d,
            n,
            constants,
            records,
            margins,
            notes: Vec::new(),
        })
    }

    /// Number of recorded iterates (final `t` is `num_records() - 1`).
    pub fn num_records(&self) -> usize {
        self.records.len()
    }

    pub fn has_margins(&self) -> bool {
        self.margins.is_some()
    }

    /// Per-example margins at step `t`, if recorded.
    pub fn margins_at(&self, t: usize) -> Option<&[f64]> {
        self.margins
            .as_ref()
            .map(|m| &m[t * self.n..(t + 1) * self.n])
    }

    /// CSV with columns `t,F,G,grad_norm,w_hat,w_tilde,min_margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,F,G,grad_norm,w_hat,w_tilde,min_margin\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t,
                fmt_f64(r.loss),
                fmt_f64(r.potential),
                fmt_f64(r.grad_norm),
                fmt_f64(r.w_hat),
                fmt_f64(r.w_tilde),
                fmt_f64(r.min_margin),
            ));
        }
        out
    }
}

fn orth_components(w: &[f64], cert: &MarginCertificate) -> (f64, f64) {
    let (w_hat, orth) = crate::diagnostics::decompose(w, cert);
    (w_hat, orth.as_scalar())
}

/// Runs GD from the origin (or `cfg.w0`) and records metrics every step.
///
/// The trajectory is deterministic given its inputs. Non-finite iterates or
/// metrics abort with the offending step index.
pub fn run(data: &Dataset, cert: &MarginCertificate, cfg: &RunConfig) -> Result<Trajectory> {
    if cfg.eta <= 0.0 || !cfg.eta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive and finite, got {}",
            cfg.eta
        )));
    }
    let d = data.dim();
    if cert.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cert.dim(),
        });
    }
    let mut w = match &cfg.w0 {
        Some(w0) => {
            if w0.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: w0.len(),
                });
            }
            w0.clone()
        }
        None => vec![0.0; d],
    };

    let constants = DerivedConstants::new(cfg.eta, cert.gamma, data.len());
    let mut records = Vec::new();
    let mut margins = cfg.record_margins.then(Vec::new);
    let mut notes = Vec::new();
    let mut transitioned_at: Option<usize> = None;

    for t in 0..=cfg.t_max {
        let eval = evaluate(&w, data, margins.as_mut());
        if !eval.loss.is_finite()
            || !eval.potential.is_finite()
            || eval.grad.iter().any(|g| !g.is_finite())
            || w.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Numerical { step: t });
        }
        let (w_hat, w_tilde) = orth_components(&w, cert);
        records.push(StepRecord {
            t,
            w: w.clone(),
            loss: eval.loss,
            potential: eval.potential,
            grad_norm: l2_norm(&eval.grad),
            min_margin: eval.min_margin,
            w_hat,
            w_tilde,
        });

        if let StopRule::AfterTransition { threshold, grace } = cfg.stop {
            if transitioned_at.is_none() && eval.loss <= threshold {
                transitioned_at = Some(t);
            }
            if let Some(t0) = transitioned_at {
                if t >= t0 + grace {
                    break;
                }
            }
        }
        if t == cfg.t_max {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&eval.grad) {
            *wi -= cfg.eta * gi;
        }
    }

    if let StopRule::AfterTransition { threshold, .. } = cfg.stop {
        if transitioned_at.is_none() && cfg.eta >= constants.eta0 {
            notes.push(format!(
                "theory violation: F never reached {threshold:.3e} within {} steps \
                 although eta {:.3e} >= eta0 {:.3e}",
                cfg.t_max, cfg.eta, constants.eta0
            ));
        }
    }

    Ok(Trajectory {
        eta: cfg.eta,
        d,
        n: data.len(),
        constants,
        records,
        margins,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_random, max_margin_2d, Dataset};

    const LN2: f64 = std::f64::consts::LN_2;

    fn pair_dataset() -> (Dataset, MarginCertificate) {
        let ds = Dataset::from_rows(&[vec![0.3, 0.9], vec![0.3, -0.9]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        (ds, cert)
    }

    #[test]
    fn loss_at_origin_is_log_two() {
        let (ds, _) = pair_dataset();
        assert_eq!(loss(&[0.0, 0.0], &ds), LN2);
    }

    #[test]
    fn loss_is_stable_at_huge_margins() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(loss(&[800.0, 0.0], &ds), 0.0);
        assert!((loss(&[-800.0, 0.0], &ds) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_at_origin_is_half_mean_point() {
        let (ds, _) = pair_dataset();
        let g = gradient(&[0.0, 0.0], &ds);
        // -(1/2n) * sum x_i = -(1/4) * (0.6, 0.0)
        assert!((g[0] + 0.15).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        // Independent oracle: central differences of the loss.
        let fd_grad = |w: &[f64], ds: &Dataset, h: f64| -> Vec<f64> {
            (0..w.len())
                .map(|j| {
                    let mut wp = w.to_vec();
                    let mut wm = w.to_vec();
                    wp[j] += h;
                    wm[j] -= h;
                    (loss(&wp, ds) - loss(&wm, ds)) / (2.0 * h)
                })
                .collect()
        };
        for seed in 0..10u64 {
            let (ds, _) = generate_random(3, 6, 0.3, seed).unwrap();
            let w: Vec<f64> = (0..3)
                .map(|j| ((seed as f64) * 0.37 + j as f64 * 0.61).sin() * 2.0)
                .collect();
            let g = gradient(&w, &ds);
            let fd = fd_grad(&w, &ds, 1e-6);
            let scale = l2_norm(&g).max(1e-12);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() / scale <= 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn grad_norm_is_bounded_by_loss_on_probes() {
        for seed in 0..20u64 {
            let (ds, _) = generate_random(2, 5, 0.2, seed).unwrap();
            let w = [
                ((seed as f64) * 0.7).sin() * 10.0,
                ((seed as f64) * 1.3).cos() * 10.0,
            ];
            let eval = evaluate(&w, &ds, None);
            assert!(l2_norm(&eval.grad) <= eval.loss + 1e-12);
        }
    }

    #[test]
    fn potential_at_origin_is_half() {
        let (ds, _) = pair_dataset();
        assert_eq!(potential(&[0.0, 0.0], &ds), 0.5);
    }

    #[test]
    fn potential_vanishes_along_margin_direction() {
        let (ds, cert) = pair_dataset();
        let mut prev = 1.0;
        for c in [1.0, 5.0, 25.0, 125.0, 625.0] {
            let w: Vec<f64> = cert.w_star.iter().map(|v| v * c).collect();
            let g = potential(&w, &ds);
            assert!(g < prev, "potential must decrease along w_star");
            prev = g;
        }
        assert!(prev < 1e-50);
    }

    #[test]
    fn loss_at_most_twice_potential_when_classified() {
        let (ds, cert) = pair_dataset();
        let w: Vec<f64> = cert.w_star.iter().map(|v| v * 3.0).collect();
        let eval = evaluate(&w, &ds, None);
        assert!(eval.min_margin >= 0.0);
        assert!(eval.loss <= 2.0 * eval.potential);
    }

    #[test]
    fn first_step_from_origin_is_scaled_mean() {
        let (ds, _) = pair_dataset();
        let eta = 64.0;
        let w1 = gd_step(&[0.0, 0.0], eta, &ds);
        // w1 = (eta/2n) * sum x_i
        assert!((w1[0] - eta / 4.0 * 0.6).abs() < 1e-12);
        assert_eq!(w1[1], 0.0);
    }

    #[test]
    fn step_displacement_is_at_most_eta() {
        for seed in 0..10u64 {
            let (ds, cert) = generate_random(2, 4, 0.25, seed).unwrap();
            let traj = run(&ds, &cert, &RunConfig::horizon(50.0, 30)).unwrap();
            for pair in traj.records.windows(2) {
                let dx: Vec<f64> = pair[1]
                    .w
                    .iter()
                    .zip(&pair[0].w)
                    .map(|(a, b)| a - b)
                    .collect();
                assert!(l2_norm(&dx) <= 50.0 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn zero_budget_run_records_origin_only() {
        let (ds, cert) = pair_dataset();
        let traj = run(&ds, &cert, &RunConfig::horizon(10.0, 0)).unwrap();
        assert_eq!(traj.num_records(), 1);
        assert_eq!(traj.records[0].loss, LN2);
        assert_eq!(traj.records[0].w_hat, 0.0);
    }

    #[test]
    fn single_point_transitions_in_one_step() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        let eta = 100.0;
        let traj = run(&ds, &cert, &RunConfig::horizon(eta, 1)).unwrap();
        let f1 = traj.records[1].loss;
        let expected = (-50.0f64).exp().ln_1p();
        assert_eq!(f1, expected);
        assert!(f1 <= 1.0 / (8.0 * eta));
    }

    #[test]
    fn runs_are_bit_identical() {
        let (ds, cert) = generate_random(2, 6, 0.2, 123).unwrap();
        let mut cfg = RunConfig::horizon(300.0, 200);
        cfg.record_margins = true;
        let a = run(&ds, &cert, &cfg).unwrap();
        let b = run(&ds, &cert, &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for t in 0..a.num_records() {
            assert_eq!(a.margins_at(t), b.margins_at(t));
        }
    }

    #[test]
    fn decomposition_identity_holds_in_2d() {
        let (ds, cert) = generate_random(2, 5, 0.3, 9).unwrap();
        let traj = run(&ds, &cert, &RunConfig::horizon(100.0, 50)).unwrap();
        for r in &traj.records {
            let lhs = r.w_hat * r.w_hat + r.w_tilde * r.w_tilde;
            let rhs = dot(&r.w, &r.w);
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
        }
    }

    #[test]
    fn stop_rule_halts_after_grace() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        let cfg = RunConfig::until_transition(100.0, 1.0 / 800.0, 3, 1000);
        let traj = run(&ds, &cert, &cfg).unwrap();
        // Transition at t = 1, grace 3 -> records t = 0..=4.
        assert_eq!(traj.num_records(), 5);
        assert!(traj.notes.is_empty());
    }

    #[test]
    fn start_point_override_is_honored() {
        let (ds, cert) = pair_dataset();
        let mut cfg = RunConfig::horizon(10.0, 3);
        cfg.w0 = Some(vec![2.0, 0.0]);
        let traj = run(&ds, &cert, &cfg).unwrap();
        assert_eq!(traj.records[0].w, vec![2.0, 0.0]);
        assert!((traj.records[0].w_hat - 2.0).abs() < 1e-12);
        cfg.w0 = Some(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            run(&ds, &cert, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn missed_transition_in_regime_is_flagged() {
        let (ds, cert) = generate_random(2, 4, 0.25, 2).unwrap();
        let eta = crate::diagnostics::eta0(0.25, 4);
        // A two-step budget cannot reach the transition here, and eta is in
        // the regime that guarantees it within the proper horizon.
        let cfg = RunConfig::until_transition(eta, 1.0 / (8.0 * eta), 0, 2);
        let traj = run(&ds, &cert, &cfg).unwrap();
        assert!(crate::diagnostics::transition_time(&traj, 1.0 / (8.0 * eta)).is_none());
        assert_eq!(traj.notes.len(), 1);
        assert!(traj.notes[0].contains("theory violation"));
    }

    mod metric_ranges {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn loss_potential_and_gradient_stay_in_range(
                seed in 0u64..500,
                gamma in 0.05f64..0.9,
                n in 1usize..9,
                wx in -50.0f64..50.0,
                wy in -50.0f64..50.0,
            ) {
                let (ds, _) = generate_random(2, n, gamma, seed).unwrap();
                let eval = evaluate(&[wx, wy], &ds, None);
                prop_assert!(eval.loss >= 0.0);
                prop_assert!((0.0..=1.0).contains(&eval.potential));
                prop_assert!(l2_norm(&eval.grad) <= eval.loss + 1e-12);
            }
        }
    }
}
