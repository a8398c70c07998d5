//! Report and slack-tracking types shared by all inequality checkers.

use serde::Serialize;

/// Relative slack budget: an inequality passes when its signed slack is at
/// least `-REL_TOL * max(1, |lhs|, |rhs|)` (plus an absolute allowance for
/// n-term sums).
pub const REL_TOL: f64 = 1e-9;

/// Identifiers for every checkable inequality, in fixed report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    /// `G(w) >= (1 - exp(-n F(w))) / n`.
    PotentialLowerBound,
    /// `|grad F(w)| <= F(w)`.
    GradNormUpper,
    /// `|grad F(w)| >= (gamma/2) F(w)` when every margin is nonnegative.
    GradNormLower,
    /// `F(w) <= 2 G(w)` when every margin is nonnegative.
    LossPotentialUpper,
    /// `F(w') <= F(w) + <grad F(w), w'-w> + 4 F(w) |w-w'|^2` for `|w-w'| <= 1`.
    StableDescent,
    /// `w_hat_{t+1} - w_hat_t >= eta * gamma * G(w_t)`.
    MarginPotentialStep,
    /// `w_hat_t >= gamma*eta/2 + gamma*(t-1)/16` for `1 <= t <= tau`, plus
    /// strict increase of `w_hat`.
    MaxMarginGrowth,
    /// Contrapositive: `F(w_t) > 1/(8 eta)` and `t >= 1` imply
    /// `|w_tilde_t| > gamma * w_hat_t / 2`.
    SmallComplement,
    /// `(1 - 16/eta^3) G(w_t) <= (1/n) sum_{i in B_t} weight_i <= G(w_t)`.
    ActivePotentialSandwich,
    /// `w_hat_{t+1} >= (1 + gamma^2) w_hat_t` at oscillation steps.
    OscillationGrowth,
    /// `w_hat_t <= eta / gamma` at oscillation steps.
    OscillationMarginBound,
    /// Per-example margin recursion for points misaligned with the
    /// orthogonal component.
    MarginRecursion,
    /// `|w_tilde_t| <= eta` before the transition.
    OrthogonalComponentBound,
    /// Max gap between consecutive oscillations (or the transition) is at
    /// most `1 + 4n/gamma + 96/gamma^2`.
    OscillationGap,
    /// `w_hat_{t+1} >= (1 + gamma^2/2) w_hat_t` before the last oscillation.
    InBetweenGrowth,
    /// `tau <= 2 + 4n/gamma + 142 log(2/gamma^2)/gamma^2`.
    TransitionTimeBound,
    /// `F(w_t) <= 8 / (eta gamma^2 (t - tau))` after the transition.
    StableRate,
    /// `F` non-increasing from the transition on.
    MonotoneAfterTransition,
}

impl LemmaId {
    /// All ids in deterministic report order.
    pub const ALL: [LemmaId; 18] = [
        LemmaId::PotentialLowerBound,
        LemmaId::GradNormUpper,
        LemmaId::GradNormLower,
        LemmaId::LossPotentialUpper,
        LemmaId::StableDescent,
        LemmaId::MarginPotentialStep,
        LemmaId::MaxMarginGrowth,
        LemmaId::SmallComplement,
        LemmaId::ActivePotentialSandwich,
        LemmaId::OscillationGrowth,
        LemmaId::OscillationMarginBound,
        LemmaId::MarginRecursion,
        LemmaId::OrthogonalComponentBound,
        LemmaId::OscillationGap,
        LemmaId::InBetweenGrowth,
        LemmaId::TransitionTimeBound,
        LemmaId::StableRate,
        LemmaId::MonotoneAfterTransition,
    ];

    /// Stable kebab-case name used for CLI selection.
    pub fn name(self) -> &'static str {
        match self {
            LemmaId::PotentialLowerBound => "potential-lower-bound",
            LemmaId::GradNormUpper => "grad-norm-upper",
            LemmaId::GradNormLower => "grad-norm-lower",
            LemmaId::LossPotentialUpper => "loss-potential-upper",
            LemmaId::StableDescent => "stable-descent",
            LemmaId::MarginPotentialStep => "margin-potential-step",
            LemmaId::MaxMarginGrowth => "max-margin-growth",
            LemmaId::SmallComplement => "small-complement",
            LemmaId::ActivePotentialSandwich => "active-potential-sandwich",
            LemmaId::OscillationGrowth => "oscillation-growth",
            LemmaId::OscillationMarginBound => "oscillation-margin-bound",
            LemmaId::MarginRecursion => "margin-recursion",
            LemmaId::OrthogonalComponentBound => "orthogonal-component-bound",
            LemmaId::OscillationGap => "oscillation-gap",
            LemmaId::InBetweenGrowth => "in-between-growth",
            LemmaId::TransitionTimeBound => "transition-time-bound",
            LemmaId::StableRate => "stable-rate",
            LemmaId::MonotoneAfterTransition => "monotone-after-transition",
        }
    }

    pub fn from_name(name: &str) -> Option<LemmaId> {
        LemmaId::ALL.into_iter().find(|id| id.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaStatus {
    Passed,
    Failed,
    /// Preconditions unmet (e.g. step size below the regime threshold, or
    /// per-example margins not recorded); distinct from a failed check.
    Skipped,
}

/// Outcome of one inequality checker over a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub id: LemmaId,
    pub status: LemmaStatus,
    /// Signed slack at the tightest observation, oriented so that
    /// nonnegative means the inequality held strictly.
    pub worst_slack: Option<f64>,
    /// Step where the tightest observation occurred.
    pub worst_t: Option<usize>,
    pub checked_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl LemmaReport {
    pub fn skipped(id: LemmaId, reason: impl Into<String>) -> Self {
        LemmaReport {
            id,
            status: LemmaStatus::Skipped,
            worst_slack: None,
            worst_t: None,
            checked_count: 0,
            note: Some(reason.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != LemmaStatus::Failed
    }
}

/// Accumulates signed slacks of an inequality family over a trajectory.
///
/// Every observation is normalized to the `lhs >= rhs` orientation; the
/// tracker keeps the observation closest to (or furthest past) its own
/// tolerance.
#[derive(Debug, Clone)]
pub struct SlackTracker {
    /// Extra absolute allowance, e.g. `n * EPSILON` for n-term sums.
    extra_abs: f64,
    worst_adjusted: f64,
    worst_slack: f64,
    worst_t: Option<usize>,
    checked: usize,
}

impl SlackTracker {
    pub fn new(extra_abs: f64) -> Self {
        SlackTracker {
            extra_abs,
            worst_adjusted: f64::INFINITY,
            worst_slack: f64::INFINITY,
            worst_t: None,
            checked: 0,
        }
    }

    /// Allowance sized for sums of `n` terms.
    pub fn for_sums(n: usize) -> Self {
        SlackTracker::new(n as f64 * f64::EPSILON)
    }

    /// Observes `lhs >= rhs` at step `t`.
    pub fn observe_ge(&mut self, t: usize, lhs: f64, rhs: f64) {
        let slack = lhs - rhs;
        let tol = REL_TOL * lhs.abs().max(rhs.abs()).max(1.0) + self.extra_abs;
        let adjusted = slack + tol;
        if adjusted < self.worst_adjusted {
            self.worst_adjusted = adjusted;
            self.worst_slack = slack;
            self.worst_t = Some(t);
        }
        self.checked += 1;
    }

    /// Observes `lhs <= rhs` at step `t`.
    pub fn observe_le(&mut self, t: usize, lhs: f64, rhs: f64) {
        self.observe_ge(t, rhs, lhs);
    }

    pub fn checked(&self) -> usize {
        self.checked
    }

    pub fn is_failed(&self) -> bool {
        self.checked > 0 && self.worst_adjusted < 0.0
    }

    /// Merges another tracker tracking the same units.
    pub fn merge(&mut self, other: &SlackTracker) {
        if other.worst_adjusted < self.worst_adjusted {
            self.worst_adjusted = other.worst_adjusted;
            self.worst_slack = other.worst_slack;
            self.worst_t = other.worst_t;
        }
        self.checked += other.checked;
    }

    pub fn into_report(self, id: LemmaId) -> LemmaReport {
        let failed = self.is_failed();
        let vacuous = self.checked == 0;
        LemmaReport {
            id,
            status: if failed {
                LemmaStatus::Failed
            } else {
                LemmaStatus::Passed
            },
            worst_slack: (!vacuous).then_some(self.worst_slack),
            worst_t: self.worst_t,
            checked_count: self.checked,
            note: vacuous.then(|| "no qualifying steps".to_string()),
        }
    }
}
