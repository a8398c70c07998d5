//! Executable verification of the trajectory inequalities.
//!
//! Every inequality is a strategy behind the [`LemmaCheck`] trait, registered
//! in a fixed order and selectable by name at runtime. Checkers never abort
//! on a violated inequality: a genuine violation is a first-class
//! experimental outcome, reported as a failed [`LemmaReport`] with the worst
//! signed slack and the step where it occurred.
//!
//! Six checkers are unconditional; the rest apply only in the large-step
//! regime `eta >= eta0` and are reported as skipped below it. Checkers that
//! need per-example margins skip when the trajectory did not record them.

mod checks;
mod report;

pub use report::{LemmaId, LemmaReport, LemmaStatus, SlackTracker, REL_TOL};

use crate::dataset::{Dataset, MarginCertificate};
use crate::diagnostics::{detect_oscillations, transition_time, DerivedConstants, OscillationEvent};
use crate::engine::Trajectory;
use crate::{Error, Result};

/// Everything a checker may look at: the trajectory, its dataset and
/// certificate, derived constants, measured transition step, and the
/// detected oscillation events.
pub struct CheckContext<'a> {
    pub dataset: &'a Dataset,
    pub trajectory: &'a Trajectory,
    pub certificate: &'a MarginCertificate,
    pub constants: DerivedConstants,
    pub tau: Option<usize>,
    pub events: Vec<OscillationEvent>,
}

impl<'a> CheckContext<'a> {
    pub fn new(
        dataset: &'a Dataset,
        trajectory: &'a Trajectory,
        certificate: &'a MarginCertificate,
        constants: DerivedConstants,
    ) -> Result<Self> {
        if trajectory.d != 2 {
            return Err(Error::PreconditionUnmet(format!(
                "inequality checks require d = 2, got d = {}",
                trajectory.d
            )));
        }
        if certificate.dim() != trajectory.d || dataset.dim() != trajectory.d {
            return Err(Error::DimensionMismatch {
                expected: trajectory.d,
                got: certificate.dim(),
            });
        }
        if dataset.len() != trajectory.n {
            return Err(Error::DimensionMismatch {
                expected: trajectory.n,
                got: dataset.len(),
            });
        }
        let tau = transition_time(trajectory, constants.tau_threshold);
        let events = detect_oscillations(trajectory, &constants);
        Ok(CheckContext {
            dataset,
            trajectory,
            certificate,
            constants,
            tau,
            events,
        })
    }

    /// Context reusing the constants computed when the trajectory was run.
    pub fn from_run(
        dataset: &'a Dataset,
        trajectory: &'a Trajectory,
        certificate: &'a MarginCertificate,
    ) -> Result<Self> {
        let constants = trajectory.constants.clone();
        CheckContext::new(dataset, trajectory, certificate, constants)
    }
}

/// One verifiable inequality over a trajectory.
pub trait LemmaCheck: Sync {
    fn id(&self) -> LemmaId;

    /// Stable name for runtime selection.
    fn name(&self) -> &'static str {
        self.id().name()
    }

    /// Evaluates the inequality at every qualifying step.
    ///
    /// Returns `Err(PreconditionUnmet)` when the checker does not apply to
    /// this trajectory at all; a violated inequality is a `Failed` report,
    /// not an error.
    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport>;
}

/// All checkers in deterministic report order.
pub fn registry() -> Vec<Box<dyn LemmaCheck>> {
    checks::registry()
}

/// Looks up a checker by its stable name.
pub fn find(name: &str) -> Option<Box<dyn LemmaCheck>> {
    registry().into_iter().find(|c| c.name() == name)
}

/// Runs a single checker.
pub fn verify_lemma(id: LemmaId, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
    let checker = registry()
        .into_iter()
        .find(|c| c.id() == id)
        .expect("registry covers every LemmaId");
    checker.check(ctx)
}

/// Runs every registered checker; checkers whose preconditions fail are
/// reported as skipped, never as failed.
pub fn verify_all(ctx: &CheckContext<'_>) -> Vec<LemmaReport> {
    registry()
        .into_iter()
        .map(|checker| {
            let id = checker.id();
            match checker.check(ctx) {
                Ok(report) => report,
                Err(Error::PreconditionUnmet(msg)) => LemmaReport::skipped(id, msg),
                Err(other) => LemmaReport::skipped(id, other.to_string()),
            }
        })
        .collect()
}

/// Lower bound on the gradient potential given a loss level `c`:
/// `(1 - exp(-n c)) / n`, computed via `expm1`.
pub fn potential_lower_bound(c: f64, n: usize) -> f64 {
    -(-(n as f64) * c).exp_m1() / n as f64
}

/// Serializes reports as a JSON array of
/// `{id, status, worst_slack, worst_t, checked_count}` objects.
pub fn reports_to_json(reports: &[LemmaReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}
