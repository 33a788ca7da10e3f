//! Jobs as skills, tasks and a task-skill dependency graph, and the
//! `f ∘ g ∘ h` error aggregation over subskill error rates.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Everything needed to build a [`JobSpec`]. Task sets use 0-based skill indices.
#[derive(Clone, Debug, Default)]
pub struct JobParts {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub tasks: Vec<Vec<usize>>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub tau: f64,
    pub skill_names: Vec<String>,
    pub task_names: Vec<String>,
    /// Accept skills that belong to no task (they get zero weight).
    pub allow_isolated_skills: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobSpec {
    s1: Vec<f64>,
    s2: Vec<f64>,
    tasks: Vec<Vec<usize>>,
    w: Vec<f64>,
    v: Vec<f64>,
    tau: f64,
    skill_names: Vec<String>,
    task_names: Vec<String>,
    allow_isolated_skills: bool,
}

fn check_unit(field: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::param(format!("{field}[{i}] = {x} is outside [0,1]")));
        }
    }
    Ok(())
}

impl JobSpec {
    pub fn new(parts: JobParts) -> Result<Self> {
        let JobParts {
            s1,
            s2,
            tasks,
            w,
            v,
            tau,
            mut skill_names,
            mut task_names,
            allow_isolated_skills,
        } = parts;
        let n = s1.len();
        let m = tasks.len();
        if n == 0 {
            return Err(Error::param("job needs at least one skill"));
        }
        if m == 0 {
            return Err(Error::param("job needs at least one task"));
        }
        if s2.len() != n || w.len() != n {
            return Err(Error::Shape(format!(
                "skill vectors disagree: s1 {}, s2 {}, w {}",
                n,
                s2.len(),
                w.len()
            )));
        }
        if v.len() != m {
            return Err(Error::Shape(format!("{} tasks but {} task weights", m, v.len())));
        }
        check_unit("s1", &s1)?;
        check_unit("s2", &s2)?;
        check_unit("w", &w)?;
        check_unit("v", &v)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::param(format!("tau = {tau} is outside [0,1]")));
        }
        let mut used = vec![false; n];
        for (i, t) in tasks.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::param(format!("task {i} has no skills")));
            }
            for &j in t {
                if j >= n {
                    return Err(Error::param(format!("task {i} references skill {j}, but n = {n}")));
                }
                used[j] = true;
            }
        }
        if !allow_isolated_skills {
            if let Some(j) = used.iter().position(|u| !u) {
                return Err(Error::param(format!("skill {j} belongs to no task")));
            }
        }
        if skill_names.is_empty() {
            skill_names = (1..=n).map(|j| format!("skill {j}")).collect();
        }
        if task_names.is_empty() {
            task_names = (1..=m).map(|i| format!("task {i}")).collect();
        }
        if skill_names.len() != n || task_names.len() != m {
            return Err(Error::Shape("name lists do not match skill/task counts".into()));
        }
        Ok(JobSpec {
            s1,
            s2,
            tasks,
            w,
            v,
            tau,
            skill_names,
            task_names,
            allow_isolated_skills,
        })
    }

    pub fn n(&self) -> usize {
        self.s1.len()
    }

    pub fn m(&self) -> usize {
        self.tasks.len()
    }

    pub fn s1(&self) -> &[f64] {
        &self.s1
    }

    pub fn s2(&self) -> &[f64] {
        &self.s2
    }

    /// Difficulties of level 1 (decision) or 2 (action).
    pub fn s(&self, level: usize) -> &[f64] {
        match level {
            1 => &self.s1,
            2 => &self.s2,
            _ => panic!("subskill level must be 1 or 2"),
        }
    }

    pub fn tasks(&self) -> &[Vec<usize>] {
        &self.tasks
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn skill_names(&self) -> &[String] {
        &self.skill_names
    }

    pub fn task_names(&self) -> &[String] {
        &self.task_names
    }

    pub fn allows_isolated_skills(&self) -> bool {
        self.allow_isolated_skills
    }

    pub fn to_parts(&self) -> JobParts {
        JobParts {
            s1: self.s1.clone(),
            s2: self.s2.clone(),
            tasks: self.tasks.clone(),
            w: self.w.clone(),
            v: self.v.clone(),
            tau: self.tau,
            skill_names: self.skill_names.clone(),
            task_names: self.task_names.clone(),
            allow_isolated_skills: self.allow_isolated_skills,
        }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        JobSpec::new(JobParts { tau, ..self.to_parts() })
    }

    pub fn with_difficulties(&self, s1: Vec<f64>, s2: Vec<f64>) -> Result<Self> {
        JobSpec::new(JobParts { s1, s2, ..self.to_parts() })
    }
}

/// A job with uniform weights where every task covers `k` cyclically
/// consecutive skills of a random relabeling, so each skill sits in exactly
/// `k·m/n` tasks. Difficulties are i.i.d. Unif[0, 1]. Requires `n | m`.
pub fn balanced_random_job(n: usize, m: usize, k: usize, tau: f64, seed: u64) -> Result<JobSpec> {
    if n == 0 || m == 0 || k == 0 || k > n {
        return Err(Error::param(format!("need 1 <= k <= n and m >= 1 (n={n}, m={m}, k={k})")));
    }
    if !m.is_multiple_of(n) {
        return Err(Error::param(format!("balanced layout needs n | m (n={n}, m={m})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let s2: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng);
    let tasks = (0..m)
        .map(|i| (0..k).map(|t| label[(i + t) % n]).collect())
        .collect();
    JobSpec::new(JobParts {
        s1,
        s2,
        tasks,
        w: vec![1.0; n],
        v: vec![1.0; m],
        tau,
        ..Default::default()
    })
}

/// Skill-level aggregator `h(ζ_{j1}, ζ_{j2})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillAgg {
    Average,
    Max,
    Sum,
}

/// Task-level (`g`) or job-level (`f`) aggregator. `WeightedAverage` uses the
/// job's skill weights `w` for `g` and task weights `v` for `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolAgg {
    Average,
    WeightedAverage,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorModel {
    pub h: SkillAgg,
    pub g: PoolAgg,
    pub f: PoolAgg,
}

impl ErrorModel {
    pub const fn new(h: SkillAgg, g: PoolAgg, f: PoolAgg) -> Self {
        ErrorModel { h, g, f }
    }

    /// Plain averages at every level.
    pub const fn average() -> Self {
        Self::new(SkillAgg::Average, PoolAgg::Average, PoolAgg::Average)
    }

    /// Summed subskills with importance-weighted task and job averages.
    pub const fn weighted_sum() -> Self {
        Self::new(SkillAgg::Sum, PoolAgg::WeightedAverage, PoolAgg::WeightedAverage)
    }

    pub const fn max() -> Self {
        Self::new(SkillAgg::Max, PoolAgg::Max, PoolAgg::Max)
    }

    pub fn is_linear(&self) -> bool {
        self.h != SkillAgg::Max && self.g != PoolAgg::Max && self.f != PoolAgg::Max
    }

    /// Factor multiplying `ζ_{j1} + ζ_{j2}` in the skill term of a linear model.
    pub fn h_scale(&self) -> f64 {
        match self.h {
            SkillAgg::Sum => 1.0,
            _ => 0.5,
        }
    }
}

/// Subskill error rates `ζ_{jℓ} = 1 − X`, one row per skill.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMatrix {
    pub zeta: Vec<[f64; 2]>,
}

impl ErrorMatrix {
    pub fn new(zeta: Vec<[f64; 2]>) -> Result<Self> {
        for (j, row) in zeta.iter().enumerate() {
            for &z in row {
                if !(0.0..=1.0).contains(&z) {
                    return Err(Error::param(format!("zeta[{j}] = {z} is outside [0,1]")));
                }
            }
        }
        Ok(ErrorMatrix { zeta })
    }

    pub fn zeros(n: usize) -> Self {
        ErrorMatrix { zeta: vec![[0.0; 2]; n] }
    }

    pub fn n(&self) -> usize {
        self.zeta.len()
    }
}

/// An error model bound to a job, with all normalizations precomputed.
#[derive(Clone, Debug)]
pub struct Aggregator {
    model: ErrorModel,
    tasks: Vec<Vec<(usize, f64)>>,
    task_weights: Vec<f64>,
    n: usize,
}

fn normalized(weights: impl Iterator<Item = f64>, what: &str) -> Result<Vec<f64>> {
    let ws: Vec<f64> = weights.collect();
    let total: f64 = ws.iter().sum();
    if !(total > 0.0) {
        return Err(Error::param(format!("{what} weights sum to zero")));
    }
    Ok(ws.into_iter().map(|x| x / total).collect())
}

impl Aggregator {
    pub fn new(spec: &JobSpec, model: ErrorModel) -> Result<Self> {
        let mut tasks = Vec::with_capacity(spec.m());
        for (i, t) in spec.tasks().iter().enumerate() {
            let raw = t.iter().map(|&j| match model.g {
                PoolAgg::WeightedAverage => spec.w()[j],
                _ => 1.0,
            });
            let ws = normalized(raw, &format!("task {i} skill"))?;
            tasks.push(t.iter().copied().zip(ws).collect());
        }
        let task_weights = match model.f {
            PoolAgg::WeightedAverage => normalized(spec.v().iter().copied(), "task")?,
            _ => vec![1.0 / spec.m() as f64; spec.m()],
        };
        Ok(Aggregator {
            model,
            tasks,
            task_weights,
            n: spec.n(),
        })
    }

    pub fn model(&self) -> ErrorModel {
        self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn skill_term(&self, z: [f64; 2]) -> f64 {
        match self.model.h {
            SkillAgg::Average => 0.5 * (z[0] + z[1]),
            SkillAgg::Max => z[0].max(z[1]),
            SkillAgg::Sum => z[0] + z[1],
        }
    }

    /// `Err(ζ)` for rows of a full error matrix. Panics if too short.
    #[inline]
    pub fn eval(&self, zeta: &[[f64; 2]]) -> f64 {
        let mut job = 0.0f64;
        for (t, &vi) in self.tasks.iter().zip(&self.task_weights) {
            let task = match self.model.g {
                PoolAgg::Max => t.iter().fold(0.0f64, |acc, &(j, _)| acc.max(self.skill_term(zeta[j]))),
                _ => t.iter().map(|&(j, wj)| wj * self.skill_term(zeta[j])).sum(),
            };
            job = match self.model.f {
                PoolAgg::Max => job.max(task),
                _ => job + vi * task,
            };
        }
        job
    }

    pub fn eval_matrix(&self, zeta: &ErrorMatrix) -> Result<f64> {
        if zeta.n() != self.n {
            return Err(Error::Shape(format!("error matrix has {} rows, job has {} skills", zeta.n(), self.n)));
        }
        Ok(self.eval(&zeta.zeta))
    }
}

/// `Err(ζ) = f(g({h(ζ_{j1}, ζ_{j2})}_{j∈T_1}), …, g(…_{j∈T_m}))`.
pub fn job_error(spec: &JobSpec, model: ErrorModel, zeta: &ErrorMatrix) -> Result<f64> {
    Aggregator::new(spec, model)?.eval_matrix(zeta)
}

/// Per-skill weights `c_j` with `Err = Σ_j c_j·h_scale·(ζ_{j1} + ζ_{j2})`.
pub fn effective_coefficients(spec: &JobSpec, model: ErrorModel) -> Result<Vec<f64>> {
    if !model.is_linear() {
        return Err(Error::NotLinear(format!("{model:?} has a max component")));
    }
    let agg = Aggregator::new(spec, model)?;
    let mut c = vec![0.0; spec.n()];
    for (t, &vi) in agg.tasks.iter().zip(&agg.task_weights) {
        for &(j, wj) in t {
            c[j] += vi * wj;
        }
    }
    Ok(c)
}

/// ℓ1-Lipschitz constant of `Err`.
pub fn lipschitz_bound(spec: &JobSpec, model: ErrorModel) -> Result<f64> {
    if !model.is_linear() {
        return Ok(1.0);
    }
    let c = effective_coefficients(spec, model)?;
    Ok(model.h_scale() * c.iter().fold(0.0f64, |a, &b| a.max(b)))
}
