//! Trajectory decomposition along the margin direction, oscillation
//! detection, transition-time measurement, and stable-phase rate checks.

use crate::dataset::MarginCertificate;
use crate::engine::Trajectory;
use crate::math::{dot, fmt_f64, l2_norm};
use crate::theory::{LemmaId, LemmaReport, SlackTracker};

/// Step-size thresholds and decomposition constants derived from
/// `(eta, gamma, n)`.
///
/// `lambda` is the height along the margin direction above which the loss of
/// `lambda * w_star` is at most `1/(8 eta)`; `lambda_tilde` is the slightly
/// larger, closed-form convenient version. `eta0` and `eta1` are the minimal
/// step sizes of the upper-bound and lower-bound regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub eta: f64,
    pub gamma: f64,
    pub n: usize,
    /// `log(1/(exp(1/(8 eta)) - 1)) / gamma`, via `expm1` so large `eta`
    /// does not cancel catastrophically.
    pub lambda: f64,
    /// `log(8 eta) / gamma`.
    pub lambda_tilde: f64,
    /// `max(n, 32/gamma^2 * log(256/gamma^2))`.
    pub eta0: f64,
    /// `max(n, 32/gamma^2 * log(3/gamma))`.
    pub eta1: f64,
    /// Transition threshold `1/(8 eta)`.
    pub tau_threshold: f64,
    /// Loose threshold `2/eta`.
    pub loose_threshold: f64,
}

impl DerivedConstants {
    pub fn new(eta: f64, gamma: f64, n: usize) -> Self {
        let lambda = -(1.0 / (8.0 * eta)).exp_m1().ln() / gamma;
        let lambda_tilde = (8.0 * eta).ln() / gamma;
        DerivedConstants {
            eta,
            gamma,
            n,
            lambda,
            lambda_tilde,
            eta0: eta0(gamma, n),
            eta1: eta1(gamma, n),
            tau_threshold: 1.0 / (8.0 * eta),
            loose_threshold: 2.0 / eta,
        }
    }
}

/// Minimal step size of the upper-bound regime.
pub fn eta0(gamma: f64, n: usize) -> f64 {
    (n as f64).max(32.0 / (gamma * gamma) * (256.0 / (gamma * gamma)).ln())
}

/// Minimal step size of the lower-bound regime.
pub fn eta1(gamma: f64, n: usize) -> f64 {
    (n as f64).max(32.0 / (gamma * gamma) * (3.0 / gamma).ln())
}

/// Default step budget: four times the closed-form transition-time bound for
/// the upper-bound regime, so a run that honors the theory always reaches
/// the transition well inside the horizon.
pub fn default_horizon(n: usize, gamma: f64) -> usize {
    let bound = transition_time_bound(n, gamma);
    (4.0 * bound).ceil() as usize
}

/// Closed-form bound `2 + 4n/gamma + 142 log(2/gamma^2)/gamma^2`.
pub fn transition_time_bound(n: usize, gamma: f64) -> f64 {
    2.0 + 4.0 * n as f64 / gamma + 142.0 * (2.0 / (gamma * gamma)).ln() / (gamma * gamma)
}

/// Component of an iterate orthogonal to the margin direction.
#[derive(Debug, Clone, PartialEq)]
pub enum OrthPart {
    /// Signed coefficient along `v_star` (`d = 2`).
    Signed(f64),
    /// Orthogonal projection vector (`d > 2`).
    Projected(Vec<f64>),
}

impl OrthPart {
    /// Magnitude of the orthogonal component.
    pub fn norm(&self) -> f64 {
        match self {
            OrthPart::Signed(s) => s.abs(),
            OrthPart::Projected(v) => l2_norm(v),
        }
    }

    /// Scalar stored in trajectory records: signed for `d = 2`, the norm
    /// otherwise.
    pub fn as_scalar(&self) -> f64 {
        match self {
            OrthPart::Signed(s) => *s,
            OrthPart::Projected(v) => l2_norm(v),
        }
    }
}

/// Splits `w` into its component along `w_star` and the orthogonal part.
pub fn decompose(w: &[f64], cert: &MarginCertificate) -> (f64, OrthPart) {
    let w_hat = dot(w, &cert.w_star);
    let orth = match &cert.v_star {
        Some(v) => OrthPart::Signed(dot(w, v)),
        None => OrthPart::Projected(
            w.iter()
                .zip(&cert.w_star)
                .map(|(wi, si)| wi - w_hat * si)
                .collect(),
        ),
    };
    (w_hat, orth)
}

/// An iteration where the trajectory jumped across the low-loss sublevel
/// set: the orthogonal component changed sign while the loss stayed above
/// the transition threshold on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationEvent {
    pub t: usize,
    pub w_hat_before: f64,
    pub w_hat_after: f64,
    /// For `d = 2`: signed orthogonal components. For `d > 2`: the norm
    /// before, and the signed projection of the next orthogonal component
    /// onto the current one after (negative by definition of the event).
    pub w_tilde_before: f64,
    pub w_tilde_after: f64,
    pub growth_ratio: f64,
}

fn growth_ratio(before: f64, after: f64) -> f64 {
    if before != 0.0 {
        after / before
    } else {
        f64::INFINITY
    }
}

/// Detects oscillations on a 2-D trajectory.
///
/// An event fires at `t` iff (1) `w_hat_t >= lambda`, (2) both `F(w_t)` and
/// `F(w_{t+1})` exceed `1/(8 eta)`, and (3) `w_tilde_{t+1} * w_tilde_t < 0`
/// strictly. An exact zero of the orthogonal component breaks any event.
pub fn detect_oscillations(
    traj: &Trajectory,
    constants: &DerivedConstants,
) -> Vec<OscillationEvent> {
    assert_eq!(traj.d, 2, "scalar oscillation detection requires d = 2");
    let mut events = Vec::new();
    for pair in traj.records.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        if cur.w_hat >= constants.lambda
            && cur.loss > constants.tau_threshold
            && next.loss > constants.tau_threshold
            && cur.w_tilde * next.w_tilde < 0.0
        {
            events.push(OscillationEvent {
                t: cur.t,
                w_hat_before: cur.w_hat,
                w_hat_after: next.w_hat,
                w_tilde_before: cur.w_tilde,
                w_tilde_after: next.w_tilde,
                growth_ratio: growth_ratio(cur.w_hat, next.w_hat),
            });
        }
    }
    events
}

/// Dimension-free oscillation detector: the sign-change condition becomes
/// `<w_tilde_{t+1}, w_tilde_t> < 0` on orthogonal projection vectors.
/// Reduces to [`detect_oscillations`] when `d = 2`. For `d > 2` the events
/// are descriptive only; no inequality checks attach to them.
pub fn detect_oscillations_general(
    traj: &Trajectory,
    cert: &MarginCertificate,
    constants: &DerivedConstants,
) -> Vec<OscillationEvent> {
    if traj.d == 2 {
        return detect_oscillations(traj, constants);
    }
    let mut events = Vec::new();
    for pair in traj.records.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        if !(cur.w_hat >= constants.lambda
            && cur.loss > constants.tau_threshold
            && next.loss > constants.tau_threshold)
        {
            continue;
        }
        let proj = |rec: &crate::engine::StepRecord| -> Vec<f64> {
            rec.w
                .iter()
                .zip(&cert.w_star)
                .map(|(wi, si)| wi - rec.w_hat * si)
                .collect()
        };
        let p_cur = proj(cur);
        let p_next = proj(next);
        let inner = dot(&p_next, &p_cur);
        if inner < 0.0 {
            let norm_before = l2_norm(&p_cur);
            events.push(OscillationEvent {
                t: cur.t,
                w_hat_before: cur.w_hat,
                w_hat_after: next.w_hat,
                w_tilde_before: norm_before,
                w_tilde_after: inner / norm_before,
                growth_ratio: growth_ratio(cur.w_hat, next.w_hat),
            });
        }
    }
    events
}

/// CSV with columns
/// `t,w_hat_before,w_hat_after,w_tilde_before,w_tilde_after,growth_ratio`.
pub fn oscillations_to_csv(events: &[OscillationEvent]) -> String {
    let mut out =
        String::from("t,w_hat_before,w_hat_after,w_tilde_before,w_tilde_after,growth_ratio\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.t,
            fmt_f64(e.w_hat_before),
            fmt_f64(e.w_hat_after),
            fmt_f64(e.w_tilde_before),
            fmt_f64(e.w_tilde_after),
            fmt_f64(e.growth_ratio),
        ));
    }
    out
}

/// First step `t` with `F(w_t) <= threshold`, if any within the recorded
/// horizon.
pub fn transition_time(traj: &Trajectory, threshold: f64) -> Option<usize> {
    traj.records
        .iter()
        .find(|r| r.loss <= threshold)
        .map(|r| r.t)
}

/// Scans `F(w_t) <= 8/(eta gamma^2 (t - tau))` for `t > tau`. The `t = tau`
/// row is excluded (the bound is undefined there).
pub(crate) fn scan_stable_rate(
    traj: &Trajectory,
    tau: usize,
    gamma: f64,
    eta: f64,
    tracker: &mut SlackTracker,
) {
    for r in &traj.records {
        if r.t > tau {
            let bound = 8.0 / (eta * gamma * gamma * (r.t - tau) as f64);
            tracker.observe_le(r.t, r.loss, bound);
        }
    }
}

/// Scans `F(w_{t+1}) <= F(w_t)` for `t >= tau`.
pub(crate) fn scan_monotone_after(traj: &Trajectory, tau: usize, tracker: &mut SlackTracker) {
    for pair in traj.records.windows(2) {
        if pair[0].t >= tau {
            tracker.observe_le(pair[1].t, pair[1].loss, pair[0].loss);
        }
    }
}

/// Verifies the stable-phase guarantees after a measured transition step:
/// the `8/(eta gamma^2 (t - tau))` rate for `t > tau` and monotone loss from
/// `tau` on. Both families are in loss units, so a single worst slack is
/// reported.
pub fn stable_rate_check(
    traj: &Trajectory,
    tau: usize,
    cert: &MarginCertificate,
    eta: f64,
) -> LemmaReport {
    let mut tracker = SlackTracker::for_sums(traj.n);
    scan_stable_rate(traj, tau, cert.gamma, eta, &mut tracker);
    scan_monotone_after(traj, tau, &mut tracker);
    tracker.into_report(LemmaId::StableRate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_random, max_margin_2d, CertificateKind, Dataset};
    use crate::engine::{run, RunConfig, StepRecord};

    fn synthetic_trajectory(
        eta: f64,
        gamma: f64,
        rows: &[(f64, f64, f64)], // (loss, w_hat, w_tilde)
    ) -> Trajectory {
        let records: Vec<StepRecord> = rows
            .iter()
            .enumerate()
            .map(|(t, &(loss, w_hat, w_tilde))| StepRecord {
                t,
                w: vec![w_hat, w_tilde],
                loss,
                potential: loss.min(1.0),
                grad_norm: 0.0,
                min_margin: 0.0,
                w_hat,
                w_tilde,
            })
            .collect();
        Trajectory::from_parts(eta, 2, 1, DerivedConstants::new(eta, gamma, 1), records, None)
            .unwrap()
    }

    #[test]
    fn constants_satisfy_order_relations() {
        for gamma in [0.05, 1.0 / 6.0, 0.2, 0.5] {
            for eta in [1.0, 100.0, 1e4, 1e9] {
                for n in [1usize, 8, 100] {
                    let c = DerivedConstants::new(eta, gamma, n);
                    assert!(c.lambda <= c.lambda_tilde, "lambda ordering violated");
                    assert!(c.eta0 >= c.eta1, "regime thresholds out of order");
                    assert!(c.tau_threshold < c.loose_threshold);
                }
            }
        }
    }

    #[test]
    fn lambda_survives_extreme_step_sizes() {
        let c = DerivedConstants::new(1e12, 0.25, 4);
        // Naive exp(1/(8 eta)) - 1 would lose all precision here.
        let direct = -(1.0f64 / (8.0 * 1e12)).exp_m1().ln() / 0.25;
        assert_eq!(c.lambda, direct);
        assert!(c.lambda.is_finite() && c.lambda > 0.0);
    }

    #[test]
    fn decompose_recovers_coordinates_in_orthonormal_basis() {
        let ds = Dataset::from_rows(&[vec![0.3, 0.9], vec![0.3, -0.9]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        let v = cert.v_star.clone().unwrap();
        let w: Vec<f64> = (0..2)
            .map(|j| 2.0 * cert.w_star[j] + 3.0 * v[j])
            .collect();
        let (w_hat, orth) = decompose(&w, &cert);
        assert!((w_hat - 2.0).abs() < 1e-12);
        assert!((orth.as_scalar() - 3.0).abs() < 1e-12);
        let (zero_hat, zero_orth) = decompose(&[0.0, 0.0], &cert);
        assert_eq!(zero_hat, 0.0);
        assert_eq!(zero_orth.as_scalar(), 0.0);
    }

    #[test]
    fn decompose_projects_in_higher_dimensions() {
        let cert = MarginCertificate {
            gamma: 0.5,
            w_star: vec![1.0, 0.0, 0.0],
            v_star: None,
            kind: CertificateKind::Nominal,
            support: vec![],
        };
        let (w_hat, orth) = decompose(&[2.0, 3.0, 4.0], &cert);
        assert_eq!(w_hat, 2.0);
        match orth {
            OrthPart::Projected(v) => assert_eq!(v, vec![0.0, 3.0, 4.0]),
            OrthPart::Signed(_) => panic!("expected projection for d = 3"),
        }
    }

    #[test]
    fn detector_fires_on_a_synthetic_flip() {
        let eta = 100.0;
        let gamma = 0.25;
        let c = DerivedConstants::new(eta, gamma, 1);
        let big = 2.0 * c.lambda;
        let traj = synthetic_trajectory(
            eta,
            gamma,
            &[(1.0 / eta, big, 1.0), (1.0 / eta, big * 1.5, -1.0)],
        );
        let events = detect_oscillations(&traj, &c);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].t, 0);
        assert!((events[0].growth_ratio - 1.5).abs() < 1e-12);
    }

    #[test]
    fn detector_requires_loss_above_threshold() {
        let eta = 100.0;
        let gamma = 0.25;
        let c = DerivedConstants::new(eta, gamma, 1);
        let big = 2.0 * c.lambda;
        let tiny = c.tau_threshold / 2.0;
        let traj = synthetic_trajectory(
            eta,
            gamma,
            &[(tiny, big, 1.0), (tiny, big, -1.0), (tiny, big, 1.0)],
        );
        assert!(detect_oscillations(&traj, &c).is_empty());
    }

    #[test]
    fn detector_requires_strict_sign_change() {
        let eta = 100.0;
        let gamma = 0.25;
        let c = DerivedConstants::new(eta, gamma, 1);
        let big = 2.0 * c.lambda;
        // An exact zero in the middle breaks both neighboring candidates.
        let traj = synthetic_trajectory(
            eta,
            gamma,
            &[(1.0, big, 1.0), (1.0, big, 0.0), (1.0, big, -1.0)],
        );
        assert!(detect_oscillations(&traj, &c).is_empty());
    }

    #[test]
    fn general_detector_reduces_to_scalar_in_2d() {
        let (ds, cert) = generate_random(2, 4, 0.25, 5).unwrap();
        let c = DerivedConstants::new(2.0 * eta0(0.25, 4), 0.25, 4);
        let traj = run(&ds, &cert, &RunConfig::horizon(c.eta, 400)).unwrap();
        let scalar = detect_oscillations(&traj, &c);
        let general = detect_oscillations_general(&traj, &cert, &c);
        assert_eq!(scalar, general);
    }

    #[test]
    fn general_detector_matches_projection_signs_in_4d() {
        let (ds, cert) = generate_random(4, 4, 0.25, 11).unwrap();
        let eta = 2.0 * eta0(0.25, 4);
        let c = DerivedConstants::new(eta, 0.25, 4);
        let traj = run(&ds, &cert, &RunConfig::horizon(eta, 300)).unwrap();
        let events = detect_oscillations_general(&traj, &cert, &c);
        for e in &events {
            assert!(e.w_tilde_before > 0.0);
            assert!(e.w_tilde_after < 0.0, "projection must flip half-space");
        }
    }

    #[test]
    fn projections_that_stay_in_one_halfspace_yield_no_events() {
        let eta = 100.0;
        let gamma = 0.25;
        let c = DerivedConstants::new(eta, gamma, 1);
        let big = 2.0 * c.lambda;
        let traj = synthetic_trajectory(
            eta,
            gamma,
            &[(1.0, big, 1.0), (1.0, big, 0.5), (1.0, big, 2.0)],
        );
        assert!(detect_oscillations(&traj, &c).is_empty());
    }

    #[test]
    fn transition_requires_at_least_one_step() {
        let (ds, cert) = generate_random(2, 4, 0.2, 1).unwrap();
        let traj = run(&ds, &cert, &RunConfig::horizon(50.0, 100)).unwrap();
        let tau = transition_time(&traj, 1.0 / (8.0 * 50.0));
        assert!(tau.is_none_or(|t| t >= 1), "F(w_0) = log 2 > 1/(8 eta)");
    }

    #[test]
    fn single_point_transition_at_step_one() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let cert = max_margin_2d(&ds).unwrap();
        let traj = run(&ds, &cert, &RunConfig::horizon(100.0, 5)).unwrap();
        assert_eq!(transition_time(&traj, 1.0 / 800.0), Some(1));
    }

    #[test]
    fn stable_rate_passes_in_the_guaranteed_regime() {
        let gamma = 0.25;
        let n = 4;
        let eta = 10.0 * eta0(gamma, n);
        for seed in 0..5u64 {
            let (ds, cert) = generate_random(2, n, gamma, seed).unwrap();
            let cfg = RunConfig::until_transition(
                eta,
                1.0 / (8.0 * eta),
                150,
                default_horizon(n, gamma),
            );
            let traj = run(&ds, &cert, &cfg).unwrap();
            let tau = transition_time(&traj, 1.0 / (8.0 * eta)).expect("must transition");
            let report = stable_rate_check(&traj, tau, &cert, eta);
            assert!(report.passed(), "stable rate failed: {report:?}");
            assert!(report.checked_count > 0);
        }
    }

    #[test]
    fn orthogonal_sign_is_constant_between_events() {
        let gamma = 0.25;
        let n = 4;
        let eta = eta0(gamma, n);
        for seed in 0..5u64 {
            let (ds, cert) = generate_random(2, n, gamma, seed).unwrap();
            let c = DerivedConstants::new(eta, gamma, n);
            let cfg =
                RunConfig::until_transition(eta, c.tau_threshold, 0, default_horizon(n, gamma));
            let traj = run(&ds, &cert, &cfg).unwrap();
            let tau = transition_time(&traj, c.tau_threshold).expect("must transition");
            let events = detect_oscillations(&traj, &c);
            let mut boundaries: Vec<usize> = events.iter().map(|e| e.t).collect();
            boundaries.push(tau);
            let mut start = 1usize;
            for &b in &boundaries {
                let signs: Vec<f64> = traj.records[start..=b.min(tau)]
                    .iter()
                    .filter(|r| r.t < tau)
                    .map(|r| r.w_tilde.signum())
                    .collect();
                assert!(
                    signs.windows(2).all(|p| p[0] == p[1]),
                    "sign flip without an event (seed {seed})"
                );
                start = b + 1;
            }
        }
    }
}
