//! The inequality checkers behind the registry.
//!
//! Conventions shared by every checker:
//! - slack is oriented so that nonnegative means the inequality held;
//! - per-observation tolerance is `REL_TOL * max(1, |lhs|, |rhs|)` plus an
//!   `n * EPSILON` allowance when the quantities are n-term sums;
//! - ranges follow the step index stored in the records, with `t = 0` the
//!   origin; trajectory-conditional checks start at `t = 1`.

use super::{potential_lower_bound, CheckContext, LemmaCheck};
use crate::diagnostics::{scan_monotone_after, scan_stable_rate, transition_time_bound};
use crate::engine::gradient;
use crate::math::{dot, grad_weight, l2_norm};
use crate::theory::{LemmaId, LemmaReport, SlackTracker};
use crate::{Error, Result};

pub(super) fn registry() -> Vec<Box<dyn LemmaCheck>> {
    vec![
        Box::new(PotentialLowerBoundCheck),
        Box::new(GradNormUpperCheck),
        Box::new(GradNormLowerCheck),
        Box::new(LossPotentialUpperCheck),
        Box::new(StableDescentCheck),
        Box::new(MarginPotentialStepCheck),
        Box::new(MaxMarginGrowthCheck),
        Box::new(SmallComplementCheck),
        Box::new(ActivePotentialSandwichCheck),
        Box::new(OscillationGrowthCheck),
        Box::new(OscillationMarginBoundCheck),
        Box::new(MarginRecursionCheck),
        Box::new(OrthogonalComponentBoundCheck),
        Box::new(OscillationGapCheck),
        Box::new(InBetweenGrowthCheck),
        Box::new(TransitionTimeBoundCheck),
        Box::new(StableRateCheck),
        Box::new(MonotoneAfterTransitionCheck),
    ]
}

/// Gate for the trajectory-conditional checkers.
fn require_regime(ctx: &CheckContext<'_>) -> Result<()> {
    let c = &ctx.constants;
    if c.eta < c.eta0 {
        return Err(Error::PreconditionUnmet(format!(
            "eta {:.6e} below the regime threshold eta0 {:.6e}",
            c.eta, c.eta0
        )));
    }
    Ok(())
}

fn require_margins(ctx: &CheckContext<'_>) -> Result<()> {
    if !ctx.trajectory.has_margins() {
        return Err(Error::PreconditionUnmet(
            "per-example margins were not recorded".into(),
        ));
    }
    Ok(())
}

fn v_star<'a>(ctx: &'a CheckContext<'_>) -> Result<&'a [f64]> {
    ctx.certificate
        .v_star
        .as_deref()
        .ok_or_else(|| Error::PreconditionUnmet("certificate lacks v_star".into()))
}

/// Exclusive upper limit for ranges of the form `t < tau`: the measured
/// transition if present, otherwise every recorded step (all of which
/// precede the unreached transition).
fn before_tau_limit(ctx: &CheckContext<'_>) -> usize {
    ctx.tau.unwrap_or(ctx.trajectory.num_records())
}

struct PotentialLowerBoundCheck;

impl LemmaCheck for PotentialLowerBoundCheck {
    fn id(&self) -> LemmaId {
        LemmaId::PotentialLowerBound
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        let n = ctx.trajectory.n;
        let mut tr = SlackTracker::for_sums(n);
        for r in &ctx.trajectory.records {
            tr.observe_ge(r.t, r.potential, potential_lower_bound(r.loss, n));
        }
        Ok(tr.into_report(self.id()))
    }
}

struct GradNormUpperCheck;

impl LemmaCheck for GradNormUpperCheck {
    fn id(&self) -> LemmaId {
        LemmaId::GradNormUpper
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        for r in &ctx.trajectory.records {
            tr.observe_le(r.t, r.grad_norm, r.loss);
        }
        Ok(tr.into_report(self.id()))
    }
}

struct GradNormLowerCheck;

impl LemmaCheck for GradNormLowerCheck {
    fn id(&self) -> LemmaId {
        LemmaId::GradNormLower
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        let gamma = ctx.constants.gamma;
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        for r in &ctx.trajectory.records {
            if r.min_margin >= 0.0 {
                tr.observe_ge(r.t, r.grad_norm, 0.5 * gamma * r.loss);
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct LossPotentialUpperCheck;

impl LemmaCheck for LossPotentialUpperCheck {
    fn id(&self) -> LemmaId {
        LemmaId::LossPotentialUpper
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        for r in &ctx.trajectory.records {
            if r.min_margin >= 0.0 {
                tr.observe_le(r.t, r.loss, 2.0 * r.potential);
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct StableDescentCheck;

impl LemmaCheck for StableDescentCheck {
    fn id(&self) -> LemmaId {
        LemmaId::StableDescent
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        for pair in ctx.trajectory.records.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            let diff: Vec<f64> = next.w.iter().zip(&cur.w).map(|(a, b)| a - b).collect();
            let dist = l2_norm(&diff);
            if dist > 1.0 {
                continue;
            }
            let g = gradient(&cur.w, ctx.dataset);
            let rhs = cur.loss + dot(&g, &diff) + 4.0 * cur.loss * dist * dist;
            tr.observe_le(next.t, next.loss, rhs);
        }
        Ok(tr.into_report(self.id()))
    }
}

struct MarginPotentialStepCheck;

impl LemmaCheck for MarginPotentialStepCheck {
    fn id(&self) -> LemmaId {
        LemmaId::MarginPotentialStep
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        let c = &ctx.constants;
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        for pair in ctx.trajectory.records.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            tr.observe_ge(
                cur.t,
                next.w_hat - cur.w_hat,
                c.eta * c.gamma * cur.potential,
            );
        }
        Ok(tr.into_report(self.id()))
    }
}

struct MaxMarginGrowthCheck;

impl LemmaCheck for MaxMarginGrowthCheck {
    fn id(&self) -> LemmaId {
        LemmaId::MaxMarginGrowth
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let c = &ctx.constants;
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        // Strict increase at every step.
        for pair in ctx.trajectory.records.windows(2) {
            tr.observe_ge(pair[1].t, pair[1].w_hat, pair[0].w_hat);
        }
        // Linear growth floor up to the transition.
        let last = ctx.trajectory.num_records() - 1;
        let t_end = ctx.tau.unwrap_or(last).min(last);
        for r in &ctx.trajectory.records[1..=t_end] {
            let floor = c.gamma * c.eta / 2.0 + c.gamma * (r.t as f64 - 1.0) / 16.0;
            tr.observe_ge(r.t, r.w_hat, floor);
        }
        Ok(tr.into_report(self.id()))
    }
}

struct SmallComplementCheck;

impl LemmaCheck for SmallComplementCheck {
    fn id(&self) -> LemmaId {
        LemmaId::SmallComplement
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let c = &ctx.constants;
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        // Contrapositive form: above-threshold loss forces a large
        // orthogonal component. The implication's hypothesis side is never
        // asserted.
        for r in &ctx.trajectory.records {
            if r.t >= 1 && r.loss > c.tau_threshold {
                tr.observe_ge(r.t, r.w_tilde.abs(), 0.5 * c.gamma * r.w_hat);
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct ActivePotentialSandwichCheck;

impl LemmaCheck for ActivePotentialSandwichCheck {
    fn id(&self) -> LemmaId {
        LemmaId::ActivePotentialSandwich
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        require_margins(ctx)?;
        let v = v_star(ctx)?;
        let c = &ctx.constants;
        let n = ctx.trajectory.n;
        let x_tilde: Vec<f64> = ctx.dataset.iter_points().map(|x| dot(x, v)).collect();
        let damp = 1.0 - 16.0 / (c.eta * c.eta * c.eta);
        let mut tr = SlackTracker::for_sums(n);
        let limit = before_tau_limit(ctx);
        for r in &ctx.trajectory.records {
            if r.t < 1 || r.t >= limit {
                continue;
            }
            let margins = ctx.trajectory.margins_at(r.t).expect("margins recorded");
            let cut = -0.5 * c.gamma * r.w_hat;
            let mut active_sum = 0.0;
            for (xt, a) in x_tilde.iter().zip(margins) {
                if xt * r.w_tilde <= cut {
                    active_sum += grad_weight(*a);
                }
            }
            let active = active_sum / n as f64;
            tr.observe_ge(r.t, active, damp * r.potential);
            tr.observe_le(r.t, active, r.potential);
        }
        Ok(tr.into_report(self.id()))
    }
}

struct OscillationGrowthCheck;

impl LemmaCheck for OscillationGrowthCheck {
    fn id(&self) -> LemmaId {
        LemmaId::OscillationGrowth
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let g2 = ctx.constants.gamma * ctx.constants.gamma;
        let mut tr = SlackTracker::new(0.0);
        for e in &ctx.events {
            tr.observe_ge(e.t, e.w_hat_after, (1.0 + g2) * e.w_hat_before);
        }
        Ok(tr.into_report(self.id()))
    }
}

struct OscillationMarginBoundCheck;

impl LemmaCheck for OscillationMarginBoundCheck {
    fn id(&self) -> LemmaId {
        LemmaId::OscillationMarginBound
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let c = &ctx.constants;
        let mut tr = SlackTracker::new(0.0);
        for e in &ctx.events {
            tr.observe_le(e.t, e.w_hat_before, c.eta / c.gamma);
        }
        Ok(tr.into_report(self.id()))
    }
}

struct MarginRecursionCheck;

impl LemmaCheck for MarginRecursionCheck {
    fn id(&self) -> LemmaId {
        LemmaId::MarginRecursion
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        require_margins(ctx)?;
        let v = v_star(ctx)?;
        let c = &ctx.constants;
        let n = ctx.trajectory.n as f64;
        let x_tilde: Vec<f64> = ctx.dataset.iter_points().map(|x| dot(x, v)).collect();
        let norm_sq: Vec<f64> = ctx
            .dataset
            .iter_points()
            .map(|x| {
                let nx = l2_norm(x);
                nx * nx
            })
            .collect();
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        let limit = before_tau_limit(ctx);
        for pair in ctx.trajectory.records.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            if cur.t < 1 || cur.t >= limit {
                continue;
            }
            // Steps adjacent to an oscillation boundary (or an exact zero of
            // the orthogonal component) are outside the lemma's standing
            // hypothesis.
            if cur.w_tilde * next.w_tilde <= 0.0 {
                continue;
            }
            let cur_margins = ctx.trajectory.margins_at(cur.t).expect("margins recorded");
            let next_margins = ctx.trajectory.margins_at(next.t).expect("margins recorded");
            for (i, xt) in x_tilde.iter().enumerate() {
                if xt * cur.w_tilde < 0.0 {
                    let a_cur = cur_margins[i];
                    let per_point = c.eta * norm_sq[i] / (2.0 * n) * grad_weight(a_cur);
                    let pooled = 0.5 * c.eta * c.gamma * c.gamma * cur.potential;
                    tr.observe_ge(cur.t, next_margins[i] - a_cur, per_point.max(pooled));
                }
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct OrthogonalComponentBoundCheck;

impl LemmaCheck for OrthogonalComponentBoundCheck {
    fn id(&self) -> LemmaId {
        LemmaId::OrthogonalComponentBound
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let mut tr = SlackTracker::new(0.0);
        let limit = before_tau_limit(ctx);
        for r in &ctx.trajectory.records {
            if r.t < limit {
                tr.observe_le(r.t, r.w_tilde.abs(), ctx.constants.eta);
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct OscillationGapCheck;

impl LemmaCheck for OscillationGapCheck {
    fn id(&self) -> LemmaId {
        LemmaId::OscillationGap
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let tau = ctx.tau.ok_or_else(|| {
            Error::PreconditionUnmet("transition not reached within the horizon".into())
        })?;
        let c = &ctx.constants;
        let bound = 1.0 + 4.0 * ctx.trajectory.n as f64 / c.gamma + 96.0 / (c.gamma * c.gamma);
        let mut tr = SlackTracker::new(0.0);
        let mut prev = 0usize;
        let specials = ctx
            .events
            .iter()
            .map(|e| e.t)
            .filter(|&t| t < tau)
            .chain(std::iter::once(tau));
        for s in specials {
            tr.observe_le(s, (s - prev) as f64, bound);
            prev = s;
        }
        Ok(tr.into_report(self.id()))
    }
}

struct InBetweenGrowthCheck;

impl LemmaCheck for InBetweenGrowthCheck {
    fn id(&self) -> LemmaId {
        LemmaId::InBetweenGrowth
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let factor = 1.0 + 0.5 * ctx.constants.gamma * ctx.constants.gamma;
        let mut tr = SlackTracker::new(0.0);
        if let Some(last_osc) = ctx.events.last().map(|e| e.t) {
            for pair in ctx.trajectory.records.windows(2) {
                let (cur, next) = (&pair[0], &pair[1]);
                if cur.t < last_osc {
                    tr.observe_ge(cur.t, next.w_hat, factor * cur.w_hat);
                }
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct TransitionTimeBoundCheck;

impl LemmaCheck for TransitionTimeBoundCheck {
    fn id(&self) -> LemmaId {
        LemmaId::TransitionTimeBound
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let bound = transition_time_bound(ctx.trajectory.n, ctx.constants.gamma);
        let mut tr = SlackTracker::new(0.0);
        match ctx.tau {
            Some(tau) => tr.observe_le(tau, tau as f64, bound),
            None => {
                let last = ctx.trajectory.num_records() - 1;
                if (last as f64) < bound {
                    return Err(Error::PreconditionUnmet(
                        "horizon ends before the closed-form bound; transition not reached"
                            .into(),
                    ));
                }
                // The transition is provably later than every recorded step.
                tr.observe_le(last, (last + 1) as f64, bound);
            }
        }
        Ok(tr.into_report(self.id()))
    }
}

struct StableRateCheck;

impl LemmaCheck for StableRateCheck {
    fn id(&self) -> LemmaId {
        LemmaId::StableRate
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let tau = ctx.tau.ok_or_else(|| {
            Error::PreconditionUnmet("transition not reached within the horizon".into())
        })?;
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        scan_stable_rate(
            ctx.trajectory,
            tau,
            ctx.constants.gamma,
            ctx.constants.eta,
            &mut tr,
        );
        Ok(tr.into_report(self.id()))
    }
}

struct MonotoneAfterTransitionCheck;

impl LemmaCheck for MonotoneAfterTransitionCheck {
    fn id(&self) -> LemmaId {
        LemmaId::MonotoneAfterTransition
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<LemmaReport> {
        require_regime(ctx)?;
        let tau = ctx.tau.ok_or_else(|| {
            Error::PreconditionUnmet("transition not reached within the horizon".into())
        })?;
        let mut tr = SlackTracker::for_sums(ctx.trajectory.n);
        scan_monotone_after(ctx.trajectory, tau, &mut tr);
        Ok(tr.into_report(self.id()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_random, Dataset};
    use crate::diagnostics::{default_horizon, eta0, DerivedConstants};
    use crate::engine::{evaluate, run, RunConfig};
    use crate::theory::{verify_all, verify_lemma, CheckContext, LemmaStatus};

    fn run_context_inputs(
        gamma: f64,
        n: usize,
        eta: f64,
        seed: u64,
        margins: bool,
    ) -> (Dataset, crate::dataset::MarginCertificate, crate::engine::Trajectory) {
        let (ds, cert) = generate_random(2, n, gamma, seed).unwrap();
        let mut cfg = RunConfig::until_transition(
            eta,
            1.0 / (8.0 * eta),
            100,
            default_horizon(n, gamma),
        );
        cfg.record_margins = margins;
        let traj = run(&ds, &cert, &cfg).unwrap();
        (ds, cert, traj)
    }

    #[test]
    fn registry_covers_every_id_in_order() {
        let reg = registry();
        assert_eq!(reg.len(), LemmaId::ALL.len());
        for (checker, id) in reg.iter().zip(LemmaId::ALL) {
            assert_eq!(checker.id(), id);
        }
    }

    #[test]
    fn full_suite_passes_in_the_large_step_regime() {
        let gamma = 0.25;
        let n = 4;
        let eta = eta0(gamma, n);
        let (ds, cert, traj) = run_context_inputs(gamma, n, eta, 3, true);
        let ctx = CheckContext::from_run(&ds, &traj, &cert).unwrap();
        let reports = verify_all(&ctx);
        assert_eq!(reports.len(), 18);
        for r in &reports {
            assert_ne!(
                r.status,
                LemmaStatus::Failed,
                "{} failed: {r:?}",
                r.id.name()
            );
        }
    }

    #[test]
    fn small_step_trajectories_skip_conditional_checkers() {
        let gamma = 0.25;
        let n = 4;
        let (ds, cert, traj) = run_context_inputs(gamma, n, 8.0, 1, true);
        let ctx = CheckContext::from_run(&ds, &traj, &cert).unwrap();
        let reports = verify_all(&ctx);
        assert_eq!(reports.len(), 18);
        let unconditional = [
            LemmaId::PotentialLowerBound,
            LemmaId::GradNormUpper,
            LemmaId::GradNormLower,
            LemmaId::LossPotentialUpper,
            LemmaId::StableDescent,
            LemmaId::MarginPotentialStep,
        ];
        for r in &reports {
            if unconditional.contains(&r.id) {
                assert_eq!(r.status, LemmaStatus::Passed, "{:?}", r);
            } else {
                assert_eq!(r.status, LemmaStatus::Skipped, "{:?}", r);
            }
        }
    }

    #[test]
    fn margin_dependent_checkers_skip_without_margins() {
        let gamma = 0.25;
        let n = 4;
        let eta = eta0(gamma, n);
        let (ds, cert, traj) = run_context_inputs(gamma, n, eta, 5, false);
        let ctx = CheckContext::from_run(&ds, &traj, &cert).unwrap();
        for id in [LemmaId::ActivePotentialSandwich, LemmaId::MarginRecursion] {
            let err = verify_lemma(id, &ctx);
            assert!(matches!(err, Err(Error::PreconditionUnmet(_))));
        }
        // verify_all converts the precondition error into a skip.
        let reports = verify_all(&ctx);
        let rec = reports
            .iter()
            .find(|r| r.id == LemmaId::MarginRecursion)
            .unwrap();
        assert_eq!(rec.status, LemmaStatus::Skipped);
    }

    #[test]
    fn potential_bound_extremal_case_is_tight() {
        // One point carries the whole loss budget (margin solves
        // loss(a) = n*c), the rest sit at margin 800 with exactly zero loss.
        let n = 4usize;
        let c = 0.05f64;
        let a1 = -((n as f64 * c).exp_m1()).ln();
        let ds = Dataset::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let w = [a1, 800.0];
        let eval = evaluate(&w, &ds, None);
        assert!((eval.loss - c).abs() <= 1e-12);
        let bound = potential_lower_bound(eval.loss, n);
        assert!((eval.potential - bound).abs() <= 1e-12, "extremal slack");
    }

    #[test]
    fn grad_norm_bounds_hold_on_random_probes() {
        for seed in 0..200u64 {
            let (ds, _) = generate_random(2, 3 + (seed % 4) as usize, 0.3, seed).unwrap();
            let w = [
                ((seed as f64) * 0.31).sin() * 20.0,
                ((seed as f64) * 0.77).cos() * 20.0,
            ];
            let eval = evaluate(&w, &ds, None);
            assert!(l2_norm(&eval.grad) <= eval.loss * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn transition_bound_fails_honestly_when_horizon_proves_it() {
        // A synthetic context where the loss never drops: the bound checker
        // must fail rather than skip once the horizon passes the bound.
        let gamma = 0.25;
        let n = 4;
        let eta = eta0(gamma, n);
        let (ds, cert, _) = run_context_inputs(gamma, n, eta, 2, false);
        let constants = DerivedConstants::new(eta, gamma, n);
        let bound = transition_time_bound(n, gamma).ceil() as usize + 2;
        let records: Vec<crate::engine::StepRecord> = (0..=bound)
            .map(|t| crate::engine::StepRecord {
                t,
                w: vec![0.0, 0.0],
                loss: 1.0,
                potential: 0.5,
                grad_norm: 0.1,
                min_margin: 0.0,
                w_hat: t as f64,
                w_tilde: 1.0,
            })
            .collect();
        let traj = crate::engine::Trajectory::from_parts(
            eta,
            2,
            n,
            constants.clone(),
            records,
            None,
        )
        .unwrap();
        let ctx = CheckContext::new(&ds, &traj, &cert, constants).unwrap();
        let rep = verify_lemma(LemmaId::TransitionTimeBound, &ctx).unwrap();
        assert_eq!(rep.status, LemmaStatus::Failed);
    }
}
