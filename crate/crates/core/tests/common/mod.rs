#![allow(dead_code)]

use workfit::job::{balanced_random_job, JobSpec};
use workfit::simulate::SweepPoint;

/// Published vectors for the Computer Programmers job.
pub const TASK_IMPORTANCE: [f64; 17] = [0.86, 0.85, 0.84, 0.79, 0.76, 0.74, 0.65, 0.64, 0.63, 0.57, 0.57, 0.57, 0.56, 0.63, 0.56, 0.49, 0.46];
pub const SKILL_IMPORTANCE: [f64; 18] = [0.5, 0.53, 0.53, 0.53, 0.5, 0.6, 0.56, 0.56, 0.56, 0.53, 0.63, 0.6, 0.53, 0.53, 0.69, 0.69, 0.69, 0.94];
pub const SKILL_PROFICIENCY: [f64; 18] = [0.41, 0.43, 0.45, 0.45, 0.45, 0.46, 0.46, 0.46, 0.46, 0.48, 0.5, 0.5, 0.52, 0.54, 0.55, 0.55, 0.57, 0.7];
pub const DECISION_DEGREE: [f64; 18] = [0.0, 0.0, 1.0, 1.0, 1.0, 0.6, 0.7, 0.4, 0.4, 0.0, 0.3, 1.0, 1.0, 0.6, 0.7, 0.6, 0.0, 0.4];
pub const SUBSKILL_DECISION: [f64; 18] = [0.0, 0.0, 0.45, 0.45, 0.45, 0.27, 0.322, 0.184, 0.184, 0.0, 0.15, 0.5, 0.52, 0.324, 0.385, 0.33, 0.0, 0.28];
pub const SUBSKILL_ACTION: [f64; 18] = [0.41, 0.43, 0.0, 0.0, 0.0, 0.18, 0.138, 0.276, 0.276, 0.48, 0.35, 0.0, 0.0, 0.216, 0.165, 0.22, 0.57, 0.42];
/// Published per-skill coefficients of the job error (0 where a skill is absent).
pub const ERR_COEFFICIENTS: [f64; 18] = [0.04, 0.04, 0.0, 0.03, 0.03, 0.05, 0.07, 0.06, 0.05, 0.06, 0.05, 0.0, 0.05, 0.04, 0.0, 0.11, 0.06, 0.26];
/// Skill whose published proficiency disagrees with its own subskill split (0-based).
pub const PROFICIENCY_ERRATUM: usize = 5;

/// Published benchmark proficiencies, oriented as ease; the bundled table stores 1 − value.
pub const BENCHMARK_EASE: [f64; 24] = [
    0.0, 0.87, 0.65, 1.0, 0.33, 0.98, 0.6, 0.8, 0.91, 0.27, 0.0, 0.2, 0.2, 0.75, 0.71, 0.25, 0.0, 0.73, 0.07, 0.91, 0.64, 0.0, 0.64, 0.5,
];

/// The n = m = 20, k = 5 balanced job used for the phase and merging figures.
///
/// The instance seed is picked structurally: mean decision and action
/// difficulties closest to 0.4545, the level at which a₁ = 0.5, a₂ = 0.4
/// puts the average error exactly at τ = 0.25.
pub fn figure_job() -> JobSpec {
    let target = 0.25 / 0.55;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let seed = (0..2000u64)
        .min_by(|&a, &b| {
            let d = |s| {
                let j = balanced_random_job(20, 20, 5, 0.25, s).unwrap();
                (mean(j.s1()) - target).abs() + (mean(j.s2()) - target).abs()
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    balanced_random_job(20, 20, 5, 0.25, seed).unwrap()
}

/// Knob value where a non-decreasing curve first reaches `level` (linear
/// interpolation); the first grid value if the curve starts above it.
pub fn crossing(points: &[SweepPoint], level: f64) -> Option<f64> {
    let i = points.iter().position(|p| p.estimate.value >= level)?;
    if i == 0 {
        return Some(points[0].value);
    }
    let (a, b) = (&points[i - 1], &points[i]);
    let (pa, pb) = (a.estimate.value, b.estimate.value);
    Some(a.value + (b.value - a.value) * (level - pa) / (pb - pa))
}

pub fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
}
