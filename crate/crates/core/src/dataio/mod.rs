//! Job documents, benchmark accuracy tables, subskill division, and the
//! bundled fixtures.

mod benchmark;
pub mod fixtures;
pub mod presets;

pub use benchmark::{BenchmarkRow, BenchmarkTable, ColumnFit};

use crate::ability::{AbilityProfile, NoiseKind};
use crate::error::{Error, Result};
use crate::job::{JobParts, JobSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Monotone map of decision-level degree to decision-level share.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    #[default]
    Identity,
    Square,
    /// λ / (λ + 1 − (1 − λ)e^{−λ})
    Exponential,
}

impl Psi {
    pub fn apply(&self, lambda: f64) -> f64 {
        match self {
            Psi::Identity => lambda,
            Psi::Square => lambda * lambda,
            Psi::Exponential => {
                let d = lambda + 1.0 - (1.0 - lambda) * (-lambda).exp();
                if d == 0.0 {
                    // limit as λ → 0
                    1.0 / 3.0
                } else {
                    lambda / d
                }
            }
        }
    }

    /// Requires psi(0) = 0 and psi(1) = 1.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.apply(0.0), self.apply(1.0));
        if lo.abs() > 1e-12 || (hi - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("psi {self:?} maps 0 -> {lo} and 1 -> {hi}; need 0 -> 0 and 1 -> 1")));
        }
        Ok(())
    }
}

impl std::str::FromStr for Psi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Psi::Identity),
            "square" => Ok(Psi::Square),
            "exponential" => Ok(Psi::Exponential),
            _ => Err(Error::param(format!("unknown psi `{s}` (identity, square, exponential)"))),
        }
    }
}

/// `(s_{j1}, s_{j2}) = (psi(λ)·s, (1 − psi(λ))·s)`.
pub fn divide_subskills(proficiency: f64, degree: f64, psi: Psi) -> Result<(f64, f64)> {
    psi.validate()?;
    if !(0.0..=1.0).contains(&proficiency) || !(0.0..=1.0).contains(&degree) {
        return Err(Error::param(format!("proficiency {proficiency} and degree {degree} must be in [0,1]")));
    }
    let share = psi.apply(degree).clamp(0.0, 1.0);
    let s1 = share * proficiency;
    Ok((s1, proficiency - s1))
}

/// Halves the variance of a truncated-normal skill profile to get two
/// identical subskill profiles (to be summed with `h = Sum`).
pub fn split_skill_profile(profile: &AbilityProfile) -> Result<(AbilityProfile, AbilityProfile)> {
    let noise = profile.noise();
    if noise.kind != NoiseKind::TruncNormal {
        return Err(Error::UnsupportedSplit(format!("{:?} noise cannot be split", noise.kind)));
    }
    let half = profile.with_noise(crate::ability::NoiseModel::trunc_normal_var(noise.variance() / 2.0))?;
    Ok((half.clone(), half))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillRecord {
    pub name: String,
    /// Overall difficulty s_j; used with `decision_degree`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proficiency: Option<f64>,
    pub importance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_degree: Option<f64>,
    /// Explicit (decision, action) difficulties; overrides the division.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subskills: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub name: String,
    pub importance: f64,
    /// 1-based skill indices.
    pub skills: Vec<usize>,
}

/// The on-disk job document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawJobRecord {
    pub schema_version: u32,
    pub job: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub provenance: serde_json::Value,
    pub tau: f64,
    #[serde(default)]
    pub allow_isolated_skills: bool,
    #[serde(default)]
    pub psi: Psi,
    pub skills: Vec<SkillRecord>,
    pub tasks: Vec<TaskRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errata: Vec<String>,
}

pub const SCHEMA_VERSION: u32 = 1;

fn unit(field: String, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::load(field, format!("{v} is outside [0,1]")))
    }
}

impl RawJobRecord {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::load("document", e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Same job with every skill treated as fully action-level (λ = 0).
    pub fn undivided(&self) -> Result<Self> {
        let mut out = self.clone();
        for (j, s) in out.skills.iter_mut().enumerate() {
            let p = match (s.proficiency, s.subskills) {
                (Some(p), _) => p,
                (None, Some([a, b])) => a + b,
                (None, None) => return Err(Error::load(format!("skills[{j}]"), "needs proficiency or subskills")),
            };
            s.proficiency = Some(p);
            s.decision_degree = Some(0.0);
            s.subskills = None;
        }
        Ok(out)
    }

    /// Document with explicit subskills, reproducing `spec` exactly.
    pub fn from_spec(spec: &JobSpec, job: &str) -> Self {
        RawJobRecord {
            schema_version: SCHEMA_VERSION,
            job: job.to_string(),
            provenance: serde_json::Value::Null,
            tau: spec.tau(),
            allow_isolated_skills: spec.allows_isolated_skills(),
            psi: Psi::Identity,
            skills: (0..spec.n())
                .map(|j| SkillRecord {
                    name: spec.skill_names()[j].clone(),
                    proficiency: None,
                    importance: spec.w()[j],
                    decision_degree: None,
                    subskills: Some([spec.s1()[j], spec.s2()[j]]),
                })
                .collect(),
            tasks: (0..spec.m())
                .map(|i| TaskRecord {
                    name: spec.task_names()[i].clone(),
                    importance: spec.v()[i],
                    skills: spec.tasks()[i].iter().map(|j| j + 1).collect(),
                })
                .collect(),
            errata: Vec::new(),
        }
    }
}

/// Builds a [`JobSpec`], dividing each skill into subskills with the document's psi.
pub fn load_job_spec(doc: &RawJobRecord) -> Result<JobSpec> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::load("schema_version", format!("expected {SCHEMA_VERSION}, got {}", doc.schema_version)));
    }
    let n = doc.skills.len();
    if n == 0 {
        return Err(Error::load("skills", "no skills"));
    }
    if doc.tasks.is_empty() {
        return Err(Error::load("tasks", "no tasks"));
    }
    let tau = unit("tau".into(), doc.tau)?;
    let (mut s1, mut s2, mut w, mut names) = (vec![], vec![], vec![], vec![]);
    for (j, sk) in doc.skills.iter().enumerate() {
        let at = |f: &str| format!("skills[{j}].{f}");
        w.push(unit(at("importance"), sk.importance)?);
        let (a, b) = match (sk.subskills, sk.proficiency, sk.decision_degree) {
            (Some([a, b]), _, _) => (unit(at("subskills[0]"), a)?, unit(at("subskills[1]"), b)?),
            (None, Some(p), Some(d)) => {
                let p = unit(at("proficiency"), p)?;
                let d = unit(at("decision_degree"), d)?;
                divide_subskills(p, d, doc.psi).map_err(|e| Error::load(at("decision_degree"), e.to_string()))?
            }
            _ => return Err(Error::load(format!("skills[{j}]"), "needs subskills, or proficiency and decision_degree")),
        };
        s1.push(a);
        s2.push(b);
        names.push(sk.name.clone());
    }
    let (mut tasks, mut v, mut task_names) = (vec![], vec![], vec![]);
    let mut used = vec![false; n];
    for (i, t) in doc.tasks.iter().enumerate() {
        v.push(unit(format!("tasks[{i}].importance"), t.importance)?);
        if t.skills.is_empty() {
            return Err(Error::load(format!("tasks[{i}].skills"), "empty dependency set"));
        }
        let mut set = Vec::with_capacity(t.skills.len());
        for &k in &t.skills {
            if k == 0 || k > n {
                return Err(Error::load(format!("tasks[{i}].skills"), format!("index {k} is outside 1..={n}")));
            }
            used[k - 1] = true;
            set.push(k - 1);
        }
        tasks.push(set);
        task_names.push(t.name.clone());
    }
    if !doc.allow_isolated_skills {
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(Error::load(format!("skills[{j}]"), format!("skill `{}` belongs to no task", doc.skills[j].name)));
        }
    }
    JobSpec::new(JobParts {
        s1,
        s2,
        tasks,
        w,
        v,
        tau,
        skill_names: names,
        task_names,
        allow_isolated_skills: doc.allow_isolated_skills,
    })
}

/// Reads and loads a job document from disk.
pub fn load_job_file(path: impl AsRef<Path>) -> Result<JobSpec> {
    load_job_spec(&RawJobRecord::read(path)?)
}
