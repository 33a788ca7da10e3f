//! Combining two workers: whole-level swaps, per-subskill best-mean
//! assignment, and assignment under a misestimated (trust-scaled) partner.

use crate::ability::{AbilityProfile, ProfileFamily};
use crate::error::{Error, Result};
use crate::job::{ErrorModel, JobSpec};
use crate::simulate::{estimate_success_probability, LevelProfile, Selection, Side, SimConfig, SimEstimate, Worker};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Uniform,
    PerSubskill,
    TrustScaled(f64),
}

/// Which source supplies each (skill, level).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergePlan {
    pub decision_assignment: Vec<Side>,
    pub action_assignment: Vec<Side>,
    pub strategy: Strategy,
}

impl MergePlan {
    pub fn count(&self, level: usize, side: Side) -> usize {
        let v = if level == 1 { &self.decision_assignment } else { &self.action_assignment };
        v.iter().filter(|&&s| s == side).count()
    }
}

fn pick(side: Side, a: &LevelProfile, b: &LevelProfile) -> LevelProfile {
    match side {
        Side::A => a.clone(),
        Side::B => b.clone(),
    }
}

/// Decision level from `pick.0`, action level from `pick.1`; `p` is the larger of the two.
pub fn merge_uniform(a: &Worker, b: &Worker, pick_from: (Side, Side)) -> Worker {
    Worker::new(
        pick(pick_from.0, a.alpha1(), b.alpha1()),
        pick(pick_from.1, a.alpha2(), b.alpha2()),
        a.p().max(b.p()),
    )
    .expect("p of a source worker is valid")
}

/// Upper envelope of two affine means as knots, when it is itself a valid profile.
fn envelope(a: &AbilityProfile, b: &AbilityProfile) -> Option<AbilityProfile> {
    if a.noise() != b.noise() {
        return None;
    }
    let sel = Selection {
        a: a.clone().into(),
        b: b.clone().into(),
        b_scale: 1.0,
    };
    let mut xs = vec![0.0];
    xs.extend(sel.breakpoints()?);
    xs.push(1.0);
    let knots: Vec<(f64, f64)> = xs.iter().map(|&s| (s, a.mean_ability(s).max(b.mean_ability(s)))).collect();
    AbilityProfile::new(ProfileFamily::PiecewiseLinear { knots }, a.noise()).ok()
}

fn merge_level(a: &LevelProfile, b: &LevelProfile, b_scale: f64) -> LevelProfile {
    let sel = Selection {
        a: a.clone(),
        b: b.clone(),
        b_scale,
    };
    if let Some(bps) = sel.breakpoints() {
        if bps.is_empty() {
            // One side wins (or ties) everywhere on [0, 1].
            return match sel.side(0.5) {
                Side::A => a.clone(),
                Side::B => b.clone(),
            };
        }
        if b_scale == 1.0 {
            if let (Some(pa), Some(pb)) = (a.as_single(), b.as_single()) {
                if let Some(env) = envelope(pa, pb) {
                    return env.into();
                }
            }
        }
    }
    LevelProfile::Selected(Box::new(sel))
}

fn plan_for(a: &Worker, b: &Worker, spec: &JobSpec, action_scale: f64, strategy: Strategy) -> MergePlan {
    let assign = |la: &LevelProfile, lb: &LevelProfile, scale: f64, s: &[f64]| -> Vec<Side> {
        let sel = Selection {
            a: la.clone(),
            b: lb.clone(),
            b_scale: scale,
        };
        s.iter().map(|&x| sel.side(x)).collect()
    };
    MergePlan {
        decision_assignment: assign(a.alpha1(), b.alpha1(), 1.0, spec.s1()),
        action_assignment: assign(a.alpha2(), b.alpha2(), action_scale, spec.s2()),
        strategy,
    }
}

/// Each (skill, level) goes to the worker with the larger mean ability there; ties go to `a`.
pub fn merge_per_subskill(a: &Worker, b: &Worker, spec: &JobSpec) -> (Worker, MergePlan) {
    let w = Worker::new(
        merge_level(a.alpha1(), b.alpha1(), 1.0),
        merge_level(a.alpha2(), b.alpha2(), 1.0),
        a.p().max(b.p()),
    )
    .expect("p of a source worker is valid");
    (w, plan_for(a, b, spec, 1.0, Strategy::PerSubskill))
}

/// As [`merge_per_subskill`], but action-level assignment compares `a`'s mean
/// with `trust · mean_b`; execution still uses `b`'s true profile.
pub fn merge_with_trust(a: &Worker, b: &Worker, spec: &JobSpec, trust: f64) -> Result<(Worker, MergePlan)> {
    if !(trust.is_finite() && trust >= 0.0) {
        return Err(Error::param(format!("trust must be finite and >= 0, got {trust}")));
    }
    let w = Worker::new(
        merge_level(a.alpha1(), b.alpha1(), 1.0),
        merge_level(a.alpha2(), b.alpha2(), trust),
        a.p().max(b.p()),
    )?;
    let strategy = if trust == 1.0 { Strategy::PerSubskill } else { Strategy::TrustScaled(trust) };
    Ok((w, plan_for(a, b, spec, trust, strategy)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeGain {
    pub base: Vec<SimEstimate>,
    pub candidates: Vec<SimEstimate>,
    /// `max(candidates) − max(base)`; negative when every merge hurts.
    pub gain: f64,
    /// `max(base ∪ candidates) − max(base)`.
    pub gain_with_bases: f64,
}

/// Success probabilities of base workers and merge candidates on shared random streams.
pub fn evaluate_merge_gain(base: &[Worker], candidates: &[Worker], spec: &JobSpec, model: ErrorModel, config: &SimConfig) -> Result<MergeGain> {
    if base.is_empty() || candidates.is_empty() {
        return Err(Error::param("need at least one base worker and one candidate"));
    }
    let est = |ws: &[Worker]| -> Result<Vec<SimEstimate>> { ws.iter().map(|w| estimate_success_probability(w, spec, model, config)).collect() };
    let base = est(base)?;
    let candidates = est(candidates)?;
    let best = |v: &[SimEstimate]| v.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let (bb, bc) = (best(&base), best(&candidates));
    Ok(MergeGain {
        gain: bc - bb,
        gain_with_bases: bc.max(bb) - bb,
        base,
        candidates,
    })
}
