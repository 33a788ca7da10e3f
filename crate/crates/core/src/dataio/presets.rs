//! Worker profiles from the benchmark fits, rounded as published.
//!
//! Each fitted skill profile `TrunN(1 − (1 − a)s, σ²)` is split into two
//! subskill profiles with variance σ²/2, to be used with `h = Sum`.

use crate::ability::{AbilityProfile, NoiseModel};
use crate::job::ErrorModel;
use crate::simulate::{Worker, WorkerTemplate};

pub const HUMAN_A: f64 = 0.22;
pub const HUMAN_VARIANCE: f64 = 0.013;
pub const GENAI_A: f64 = 0.08;
pub const GENAI_VARIANCE: f64 = 0.029;

/// Sum over the two subskills, importance-weighted over tasks and skills.
pub const CASE_STUDY_MODEL: ErrorModel = ErrorModel::weighted_sum();

pub fn human_noise() -> NoiseModel {
    NoiseModel::trunc_normal_var(HUMAN_VARIANCE / 2.0)
}

pub fn genai_noise() -> NoiseModel {
    NoiseModel::trunc_normal_var(GENAI_VARIANCE / 2.0)
}

fn lin(a: f64, noise: NoiseModel) -> AbilityProfile {
    AbilityProfile::linear(a, noise).expect("preset slope in [0,1]")
}

/// Human with decision-level slope `a1` and action-level slope `a2`.
pub fn human_template(a1: f64, a2: f64) -> WorkerTemplate {
    WorkerTemplate::new(lin(a1, human_noise()), lin(a2, human_noise()))
}

pub fn human() -> WorkerTemplate {
    human_template(HUMAN_A, HUMAN_A)
}

pub fn genai() -> WorkerTemplate {
    WorkerTemplate::new(lin(GENAI_A, genai_noise()), lin(GENAI_A, genai_noise()))
}

/// GenAI tool with a linear decision level and a constant action level `c`.
pub fn genai_assistant(a: f64, c: f64) -> WorkerTemplate {
    let noise = genai_noise();
    WorkerTemplate::new(lin(a, noise), AbilityProfile::constant(c, noise).expect("preset constant in [0,1]"))
}

/// The human profile applied to whole skills: a perfect decision level and
/// the unsplit variance at the action level. Pair with an undivided job.
pub fn human_undivided() -> WorkerTemplate {
    WorkerTemplate::new(AbilityProfile::perfect(), lin(HUMAN_A, NoiseModel::trunc_normal_var(HUMAN_VARIANCE)))
}

pub fn genai_undivided() -> WorkerTemplate {
    WorkerTemplate::new(AbilityProfile::perfect(), lin(GENAI_A, NoiseModel::trunc_normal_var(GENAI_VARIANCE)))
}

pub fn worker(template: &WorkerTemplate) -> Worker {
    template.base_worker().expect("preset is valid")
}
