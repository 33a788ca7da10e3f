use super::engine::{estimate_success_probability, SimConfig, SimEstimate};
use super::worker::{Side, Worker};
use crate::ability::{AbilityProfile, ProfileFamily};
use crate::error::{Error, Result};
use crate::job::{ErrorModel, JobSpec};
use crate::merging;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

/// How a template's primary worker is combined with its partner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "strategy")]
pub enum MergeStrategy {
    /// Whole levels: decision level from `decision`, action level from `action`.
    Uniform { decision: Side, action: Side },
    PerSubskill,
    /// Per-subskill, with the partner's action-level mean scaled by `lambda` when planning.
    Trust { lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeSpec {
    pub partner: WorkerTemplate,
    #[serde(flatten)]
    pub strategy: MergeStrategy,
}

/// A parametric worker whose parameters can be varied by [`Knob`]s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerTemplate {
    pub alpha1: AbilityProfile,
    pub alpha2: AbilityProfile,
    #[serde(default)]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge: Option<Box<MergeSpec>>,
}

impl WorkerTemplate {
    pub fn new(alpha1: AbilityProfile, alpha2: AbilityProfile) -> Self {
        WorkerTemplate {
            alpha1,
            alpha2,
            p: 0.0,
            merge: None,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn merged_with(mut self, partner: WorkerTemplate, strategy: MergeStrategy) -> Self {
        self.merge = Some(Box::new(MergeSpec { partner, strategy }));
        self
    }

    /// The worker itself, ignoring any merge.
    pub fn base_worker(&self) -> Result<Worker> {
        Worker::new(self.alpha1.clone(), self.alpha2.clone(), self.p)
    }

    /// The worker this template describes (merged when a partner is set).
    pub fn resolve(&self, spec: &JobSpec) -> Result<Worker> {
        let me = self.base_worker()?;
        let Some(m) = &self.merge else {
            return Ok(me);
        };
        if m.partner.merge.is_some() {
            return Err(Error::param("nested merges are not supported"));
        }
        let other = m.partner.base_worker()?;
        Ok(match m.strategy {
            MergeStrategy::Uniform { decision, action } => merging::merge_uniform(&me, &other, (decision, action)),
            MergeStrategy::PerSubskill => merging::merge_per_subskill(&me, &other, spec).0,
            MergeStrategy::Trust { lambda } => merging::merge_with_trust(&me, &other, spec, lambda)?.0,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    /// Slope parameter `a` of the decision-level profile.
    A1,
    A2,
    /// Constant / intercept `c`.
    C1,
    C2,
    /// Noise σ on both levels.
    Sigma,
    Sigma1,
    Sigma2,
    Beta1,
    Beta2,
    P,
    Tau,
    /// Trust λ of a trust-scaled merge.
    Lambda,
}

/// A named parameter of a template, optionally on the merge partner (`b.` prefix).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Knob {
    pub param: Param,
    pub partner: bool,
}

impl Knob {
    pub const fn primary(param: Param) -> Self {
        Knob { param, partner: false }
    }

    pub const fn partner(param: Param) -> Self {
        Knob { param, partner: true }
    }

    /// Closed interval of admissible values.
    pub fn domain(&self) -> (f64, f64) {
        match self.param {
            Param::A1 | Param::A2 | Param::C1 | Param::C2 | Param::P | Param::Tau => (0.0, 1.0),
            Param::Sigma | Param::Sigma1 | Param::Sigma2 | Param::Beta1 | Param::Beta2 | Param::Lambda => (0.0, f64::INFINITY),
        }
    }

    /// Whether the knob moves a mean ability (as opposed to noise or job settings).
    pub fn is_ability(&self) -> bool {
        matches!(self.param, Param::A1 | Param::A2 | Param::C1 | Param::C2 | Param::Beta1 | Param::Beta2)
    }

    /// Subskill level an ability knob acts on.
    pub fn level(&self) -> Option<usize> {
        match self.param {
            Param::A1 | Param::C1 | Param::Beta1 | Param::Sigma1 => Some(1),
            Param::A2 | Param::C2 | Param::Beta2 | Param::Sigma2 => Some(2),
            _ => None,
        }
    }

    /// Current value of the knob in a template/job.
    pub fn get(&self, template: &WorkerTemplate, spec: &JobSpec) -> Result<f64> {
        if self.param == Param::Tau {
            return Ok(spec.tau());
        }
        if self.param == Param::Lambda {
            return match template.merge.as_deref().map(|m| m.strategy) {
                Some(MergeStrategy::Trust { lambda }) => Ok(lambda),
                _ => Err(Error::param("knob lambda needs a trust-scaled merge")),
            };
        }
        let t = self.target(template)?;
        let fam = |p: &AbilityProfile| p.family().clone();
        let v = match self.param {
            Param::A1 | Param::A2 => match fam(self.profile(t)) {
                ProfileFamily::Linear { a, .. } => a,
                f => return Err(Error::param(format!("knob {self} needs a linear profile, found {}", f.tag()))),
            },
            Param::C1 | Param::C2 => match fam(self.profile(t)) {
                ProfileFamily::Linear { c, .. } | ProfileFamily::Constant { c } => c,
                f => return Err(Error::param(format!("knob {self} needs a linear or constant profile, found {}", f.tag()))),
            },
            Param::Beta1 | Param::Beta2 => match fam(self.profile(t)) {
                ProfileFamily::Polynomial { beta } => beta,
                f => return Err(Error::param(format!("knob {self} needs a polynomial profile, found {}", f.tag()))),
            },
            Param::Sigma | Param::Sigma1 => t.alpha1.noise().sigma,
            Param::Sigma2 => t.alpha2.noise().sigma,
            Param::P => t.p,
            Param::Tau | Param::Lambda => unreachable!(),
        };
        Ok(v)
    }

    fn target<'a>(&self, template: &'a WorkerTemplate) -> Result<&'a WorkerTemplate> {
        if self.partner {
            template
                .merge
                .as_deref()
                .map(|m| &m.partner)
                .ok_or_else(|| Error::param(format!("knob {self} needs a merge partner")))
        } else {
            Ok(template)
        }
    }

    fn profile<'a>(&self, t: &'a WorkerTemplate) -> &'a AbilityProfile {
        if self.level() == Some(2) {
            &t.alpha2
        } else {
            &t.alpha1
        }
    }

    /// Returns the template and job with the knob set to `value`.
    pub fn apply(&self, template: &WorkerTemplate, spec: &JobSpec, value: f64) -> Result<(WorkerTemplate, JobSpec)> {
        let (lo, hi) = self.domain();
        if !(value >= lo && value <= hi) {
            return Err(Error::param(format!("knob {self} = {value} is outside [{lo}, {hi}]")));
        }
        let mut out = template.clone();
        match self.param {
            Param::Tau => return Ok((out, spec.with_tau(value)?)),
            Param::Lambda => {
                match out.merge.as_deref_mut() {
                    Some(MergeSpec {
                        strategy: MergeStrategy::Trust { lambda },
                        ..
                    }) => *lambda = value,
                    _ => return Err(Error::param("knob lambda needs a trust-scaled merge")),
                }
                return Ok((out, spec.clone()));
            }
            _ => {}
        }
        let t: &mut WorkerTemplate = if self.partner {
            &mut out
                .merge
                .as_deref_mut()
                .ok_or_else(|| Error::param(format!("knob {self} needs a merge partner")))?
                .partner
        } else {
            &mut out
        };
        match self.param {
            Param::P => t.p = value,
            Param::Sigma => {
                t.alpha1 = t.alpha1.with_noise(crate::ability::NoiseModel { sigma: value, ..t.alpha1.noise() })?;
                t.alpha2 = t.alpha2.with_noise(crate::ability::NoiseModel { sigma: value, ..t.alpha2.noise() })?;
            }
            Param::Sigma1 => t.alpha1 = t.alpha1.with_noise(crate::ability::NoiseModel { sigma: value, ..t.alpha1.noise() })?,
            Param::Sigma2 => t.alpha2 = t.alpha2.with_noise(crate::ability::NoiseModel { sigma: value, ..t.alpha2.noise() })?,
            _ => {
                let prof = if self.level() == Some(2) { &mut t.alpha2 } else { &mut t.alpha1 };
                let fam = match (self.param, prof.family().clone()) {
                    (Param::A1 | Param::A2, ProfileFamily::Linear { c, .. }) => ProfileFamily::Linear { a: value, c },
                    (Param::C1 | Param::C2, ProfileFamily::Linear { a, .. }) => ProfileFamily::Linear { a, c: value },
                    (Param::C1 | Param::C2, ProfileFamily::Constant { .. }) => ProfileFamily::Constant { c: value },
                    (Param::Beta1 | Param::Beta2, ProfileFamily::Polynomial { .. }) => ProfileFamily::Polynomial { beta: value },
                    (_, f) => return Err(Error::param(format!("knob {self} does not apply to a {} profile", f.tag()))),
                };
                *prof = prof.with_family(fam)?;
            }
        }
        Ok((out, spec.clone()))
    }
}

impl fmt::Display for Knob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.param {
            Param::A1 => "a1",
            Param::A2 => "a2",
            Param::C1 => "c1",
            Param::C2 => "c2",
            Param::Sigma => "sigma",
            Param::Sigma1 => "sigma1",
            Param::Sigma2 => "sigma2",
            Param::Beta1 => "beta1",
            Param::Beta2 => "beta2",
            Param::P => "p",
            Param::Tau => "tau",
            Param::Lambda => "lambda",
        };
        if self.partner {
            write!(f, "b.{name}")
        } else {
            f.write_str(name)
        }
    }
}

impl FromStr for Knob {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (partner, name) = match s.strip_prefix("b.") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let param = match name {
            "a" | "a1" => Param::A1,
            "a2" => Param::A2,
            "c1" => Param::C1,
            "c" | "c2" => Param::C2,
            "sigma" => Param::Sigma,
            "sigma1" => Param::Sigma1,
            "sigma2" => Param::Sigma2,
            "beta" | "beta1" => Param::Beta1,
            "beta2" => Param::Beta2,
            "p" => Param::P,
            "tau" => Param::Tau,
            "lambda" | "lambda-trust" | "trust" => Param::Lambda,
            _ => return Err(Error::param(format!("unknown knob `{s}`"))),
        };
        if partner && matches!(param, Param::Tau | Param::Lambda) {
            return Err(Error::param(format!("knob `{name}` has no partner form")));
        }
        Ok(Knob { param, partner })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: String,
    pub value: f64,
    pub estimate: SimEstimate,
}

/// Independent per-point seeds when common random numbers are off.
pub(crate) fn point_seed(seed: u64, index: usize, crn: bool) -> u64 {
    if crn {
        return seed;
    }
    let mut z = seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Success probability of a template at one knob setting.
pub fn estimate_at(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, value: f64, config: &SimConfig) -> Result<SimEstimate> {
    let (t, s) = knob.apply(template, spec, value)?;
    estimate_success_probability(&t.resolve(&s)?, &s, model, config)
}

/// One estimate of P per grid value. With `crn`, every point reuses the same
/// per-trial random streams.
pub fn sweep(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, grid: &[f64], config: &SimConfig, crn: bool) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    grid.iter()
        .enumerate()
        .map(|(i, &v)| {
            let cfg = config.with_seed(point_seed(config.seed, i, crn));
            Ok(SweepPoint {
                param: knob.to_string(),
                value: v,
                estimate: estimate_at(template, spec, model, knob, v, &cfg)?,
            })
        })
        .collect()
}

/// Two-knob grid of P; `values[iy * x_values.len() + ix]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Heatmap {
    pub x_param: String,
    pub x_values: Vec<f64>,
    pub y_param: String,
    pub y_values: Vec<f64>,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Heatmap {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.x_values.len() + ix]
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sweep2(
    template: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    x: (Knob, &[f64]),
    y: (Knob, &[f64]),
    config: &SimConfig,
    crn: bool,
) -> Result<Heatmap> {
    grid2(x, y, config, |kx, vx, ky, vy, cfg| {
        let (t, s) = kx.apply(template, spec, vx)?;
        let (t, s) = ky.apply(&t, &s, vy)?;
        Ok(estimate_success_probability(&t.resolve(&s)?, &s, model, cfg)?.value)
    }, crn)
}

/// Evaluates `f` over a two-knob grid in row-major order.
pub fn grid2<F>(x: (Knob, &[f64]), y: (Knob, &[f64]), config: &SimConfig, f: F, crn: bool) -> Result<Heatmap>
where
    F: Fn(Knob, f64, Knob, f64, &SimConfig) -> Result<f64>,
{
    if x.1.is_empty() || y.1.is_empty() {
        return Err(Error::param("heatmap grids must be nonempty"));
    }
    let mut values = Vec::with_capacity(x.1.len() * y.1.len());
    for (iy, &vy) in y.1.iter().enumerate() {
        for (ix, &vx) in x.1.iter().enumerate() {
            let cfg = config.with_seed(point_seed(config.seed, iy * x.1.len() + ix, crn));
            values.push(f(x.0, vx, y.0, vy, &cfg)?);
        }
    }
    Ok(Heatmap {
        x_param: x.0.to_string(),
        x_values: x.1.to_vec(),
        y_param: y.0.to_string(),
        y_values: y.1.to_vec(),
        values,
        trials: config.trials,
        seed: config.seed,
    })
}

/// Central difference `|P(at+step) − P(at−step)| / (2·step)` with common random numbers.
pub fn finite_diff_derivative(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, at: f64, step: f64, config: &SimConfig) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::param(format!("step must be > 0, got {step}")));
    }
    let (lo, hi) = knob.domain();
    if at - step < lo || at + step > hi {
        return Err(Error::param(format!("{knob} = {at} ± {step} leaves the domain [{lo}, {hi}]")));
    }
    let up = estimate_at(template, spec, model, knob, at + step, config)?;
    let down = estimate_at(template, spec, model, knob, at - step, config)?;
    Ok((up.value - down.value).abs() / (2.0 * step))
}

/// Default finite-difference step for a knob.
pub fn default_step(knob: Knob) -> f64 {
    match knob.param {
        Param::Sigma | Param::Sigma1 | Param::Sigma2 => 0.005,
        _ => 0.01,
    }
}

/// Writes sweep rows as `param,value,p_hat,stderr,ci_lo,ci_hi,trials,seed`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value", "p_hat", "stderr", "ci_lo", "ci_hi", "trials", "seed"])?;
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.param.clone(),
            r.value.to_string(),
            e.value.to_string(),
            e.stderr.to_string(),
            e.ci.0.to_string(),
            e.ci.1.to_string(),
            e.trials.to_string(),
            e.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ability::NoiseModel;
    use crate::job::balanced_random_job;

    fn template(sigma: f64) -> WorkerTemplate {
        let n = NoiseModel::uniform(sigma);
        WorkerTemplate::new(AbilityProfile::linear(0.5, n).unwrap(), AbilityProfile::linear(0.4, n).unwrap())
    }

    #[test]
    fn knob_names_round_trip() {
        for name in ["a1", "a2", "c1", "c2", "sigma", "sigma1", "sigma2", "beta1", "beta2", "p", "tau", "lambda", "b.a1", "b.c2"] {
            let k: Knob = name.parse().unwrap();
            assert_eq!(k.to_string(), name);
        }
        assert_eq!("a".parse::<Knob>().unwrap(), Knob::primary(Param::A1));
        assert_eq!("c".parse::<Knob>().unwrap(), Knob::primary(Param::C2));
        assert!("zeta".parse::<Knob>().is_err());
        assert!("b.tau".parse::<Knob>().is_err());
    }

    #[test]
    fn knob_apply_and_get() {
        let spec = balanced_random_job(4, 4, 2, 0.3, 1).unwrap();
        let t = template(0.2);
        let (t2, _) = Knob::primary(Param::A1).apply(&t, &spec, 0.7).unwrap();
        assert_eq!(Knob::primary(Param::A1).get(&t2, &spec).unwrap(), 0.7);
        let (t3, _) = Knob::primary(Param::Sigma).apply(&t, &spec, 0.05).unwrap();
        assert_eq!(t3.alpha1.noise().sigma, 0.05);
        assert_eq!(t3.alpha2.noise().sigma, 0.05);
        let (_, s2) = Knob::primary(Param::Tau).apply(&t, &spec, 0.6).unwrap();
        assert_eq!(s2.tau(), 0.6);
        assert!(Knob::primary(Param::Beta1).apply(&t, &spec, 2.0).is_err());
        assert!(Knob::primary(Param::A1).apply(&t, &spec, 1.5).is_err());
        assert!(Knob::partner(Param::A1).apply(&t, &spec, 0.5).is_err());
        assert!(Knob::primary(Param::Lambda).apply(&t, &spec, 1.0).is_err());
    }

    #[test]
    fn one_point_sweep_is_single_estimate() {
        let spec = balanced_random_job(6, 6, 2, 0.3, 1).unwrap();
        let t = template(0.3);
        let cfg = SimConfig::new(400, 5);
        let rows = sweep(&t, &spec, ErrorModel::average(), Knob::primary(Param::A1), &[0.5], &cfg, true).unwrap();
        assert_eq!(rows.len(), 1);
        let direct = estimate_success_probability(&t.resolve(&spec).unwrap(), &spec, ErrorModel::average(), &cfg).unwrap();
        assert_eq!(rows[0].estimate, direct);
        assert!(sweep(&t, &spec, ErrorModel::average(), Knob::primary(Param::A1), &[], &cfg, true).is_err());
    }

    #[test]
    fn tau_sweep_is_exactly_monotone() {
        let spec = balanced_random_job(8, 8, 3, 0.3, 2).unwrap();
        let t = template(0.5);
        let grid: Vec<f64> = (0..21).map(|i| 0.2 + 0.01 * i as f64).collect();
        let rows = sweep(&t, &spec, ErrorModel::average(), Knob::primary(Param::Tau), &grid, &SimConfig::new(2000, 3), true).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].estimate.value >= w[0].estimate.value);
        }
    }

    #[test]
    fn derivative_is_zero_where_p_is_flat_and_errors_off_domain() {
        let spec = balanced_random_job(6, 6, 2, 0.9, 1).unwrap();
        let t = template(0.1);
        let d = finite_diff_derivative(&t, &spec, ErrorModel::average(), Knob::primary(Param::A1), 0.5, 0.01, &SimConfig::new(300, 1)).unwrap();
        assert_eq!(d, 0.0);
        assert!(finite_diff_derivative(&t, &spec, ErrorModel::average(), Knob::primary(Param::A1), 0.005, 0.01, &SimConfig::new(10, 1)).is_err());
    }

    #[test]
    fn csv_header_is_fixed() {
        let spec = balanced_random_job(4, 4, 2, 0.3, 1).unwrap();
        let rows = sweep(&template(0.2), &spec, ErrorModel::average(), Knob::primary(Param::A1), &[0.3, 0.6], &SimConfig::new(50, 1), false).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("param,value,p_hat,stderr,ci_lo,ci_hi,trials,seed\n"));
        assert_eq!(text.lines().count(), 3);
        assert_ne!(rows[0].estimate.seed, rows[1].estimate.seed);
    }
}
