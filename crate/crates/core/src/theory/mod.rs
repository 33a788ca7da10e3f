//! Critical abilities, transition widths and the sufficient conditions for
//! merging and compression, each paired with a simulated check.

mod bias;

pub use bias::{bias_misclassification_rate, bias_report, AbilityDensity, BiasReport};

use crate::ability::{NoiseKind, NoiseModel, ProfileFamily};
use crate::error::{Error, Result};
use crate::job::{effective_coefficients, lipschitz_bound, ErrorModel, JobSpec};
use crate::merging::merge_per_subskill;
use crate::simulate::{
    estimate_at, estimate_err_avg, estimate_success_probability, exact_err_avg, Knob, MergeStrategy, Param, SimConfig, SimEstimate, WorkerTemplate, DEFAULT_SEED,
};
use serde::Serialize;

/// How the dispersion bound is assembled from per-level noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionConvention {
    /// `n(σ₁² + σ₂²)` whatever the noise kind.
    #[default]
    Variance,
    /// Per-subskill subgaussian constants: σ²/4 for uniform-scaled noise
    /// (range at most σ), σ² for truncated normal.
    Subgaussian,
}

impl std::str::FromStr for DispersionConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(DispersionConvention::Variance),
            "subgaussian" => Ok(DispersionConvention::Subgaussian),
            _ => Err(Error::param(format!("unknown dispersion convention `{s}` (variance, subgaussian)"))),
        }
    }
}

fn subskill_dispersion(noise: NoiseModel, convention: DispersionConvention) -> f64 {
    let s2 = noise.sigma * noise.sigma;
    match (convention, noise.kind) {
        (DispersionConvention::Variance, _) | (_, NoiseKind::TruncNormal) => s2,
        (DispersionConvention::Subgaussian, NoiseKind::UniformScaled) => s2 / 4.0,
    }
}

/// Upper bound on the total dispersion of the 2n subskill distributions.
pub fn max_dispersion(noise1: NoiseModel, noise2: NoiseModel, n: usize, convention: DispersionConvention) -> f64 {
    n as f64 * (subskill_dispersion(noise1, convention) + subskill_dispersion(noise2, convention))
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 0.5 {
        Ok(())
    } else {
        Err(Error::param(format!("theta must be in (0, 0.5), got {theta}")))
    }
}

fn check_width_inputs(l: f64, max_disp: f64, min_der: f64, theta: f64) -> Result<()> {
    check_theta(theta)?;
    if !(l >= 0.0 && max_disp >= 0.0 && min_der >= 0.0) {
        return Err(Error::param(format!("L, MaxDisp and MinDer must be >= 0 (got {l}, {max_disp}, {min_der})")));
    }
    if min_der == 0.0 {
        return Err(Error::InfiniteWidth);
    }
    Ok(())
}

/// `γ = L·√(MaxDisp·ln(1/θ)) / MinDer`.
pub fn transition_width(l: f64, max_disp: f64, min_der: f64, theta: f64) -> Result<f64> {
    check_width_inputs(l, max_disp, min_der, theta)?;
    Ok(l * (max_disp * (1.0 / theta).ln()).sqrt() / min_der)
}

/// Width under the shared-status dependency model:
/// `γ = L·√MaxDisp·max{√ln(2(1−p)/θ), √(n·ln(2p/θ))} / MinDer`,
/// where a log term whose argument is at most 1 contributes nothing.
pub fn dependent_transition_width(l: f64, max_disp: f64, min_der: f64, theta: f64, p: f64, n: usize) -> Result<f64> {
    check_width_inputs(l, max_disp, min_der, theta)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("p must be in [0,1], got {p}")));
    }
    let branch = |arg: f64, scale: f64| if arg > 1.0 { (scale * arg.ln()).sqrt() } else { 0.0 };
    let indep = branch(2.0 * (1.0 - p) / theta, 1.0);
    let dep = branch(2.0 * p / theta, n as f64);
    Ok(l * max_disp.sqrt() * indep.max(dep) / min_der)
}

/// Settings for evaluating `Err_avg` when no closed form exists.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootOptions {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            trials: 100_000,
            seed: DEFAULT_SEED,
            tol: 1e-6,
            max_iter: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrAvgMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrAvgValue {
    pub value: f64,
    /// Zero for the closed form.
    pub stderr: f64,
    pub method: ErrAvgMethod,
}

/// `Err_avg` with the knob set to `value`: closed form when available,
/// otherwise Monte Carlo on fixed streams (so repeated calls share noise).
pub fn err_avg_at(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, value: f64, opts: &RootOptions) -> Result<ErrAvgValue> {
    let (t, s) = knob.apply(template, spec, value)?;
    let w = t.resolve(&s)?;
    if let Some(v) = exact_err_avg(&w, &s, model)? {
        return Ok(ErrAvgValue {
            value: v,
            stderr: 0.0,
            method: ErrAvgMethod::ClosedForm,
        });
    }
    let est = estimate_err_avg(&w, &s, model, &SimConfig::new(opts.trials, opts.seed))?.monte_carlo;
    Ok(ErrAvgValue {
        value: est.value,
        stderr: est.stderr,
        method: ErrAvgMethod::MonteCarlo,
    })
}

fn bracket(knob: Knob, domain: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let (lo, hi) = match domain {
        Some(d) => d,
        None => match knob.domain() {
            (lo, hi) if hi.is_finite() => (lo, hi),
            // polynomial exponents: 1 − s^β is already within 1e-9 of 1 for s ≤ 0.7 at β = 64
            (lo, _) => (lo, 64.0),
        },
    };
    let (dlo, dhi) = knob.domain();
    if !(lo < hi && lo >= dlo && hi <= dhi) {
        return Err(Error::param(format!("bracket [{lo}, {hi}] is not inside the domain of {knob}")));
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalAbility {
    pub knob: String,
    pub value: f64,
    /// `Err_avg` at the returned value.
    pub err_avg: ErrAvgValue,
    pub iterations: usize,
}

/// Root of `Err_avg(μ) = τ` by bisection; `Err_avg` is non-increasing in every
/// ability knob.
pub fn critical_ability(
    template: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    knob: Knob,
    domain: Option<(f64, f64)>,
    opts: &RootOptions,
) -> Result<CriticalAbility> {
    if !knob.is_ability() {
        return Err(Error::param(format!("{knob} is not an ability parameter")));
    }
    let (mut lo, mut hi) = bracket(knob, domain)?;
    let tau = spec.tau();
    let f = |x: f64| err_avg_at(template, spec, model, knob, x, opts);
    let done = |value: f64, err_avg: ErrAvgValue, iterations: usize| CriticalAbility {
        knob: knob.to_string(),
        value,
        err_avg,
        iterations,
    };
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    const EDGE: f64 = 1e-12;
    if (f_hi.value - tau).abs() <= EDGE {
        return Ok(done(hi, f_hi, 0));
    }
    if (f_lo.value - tau).abs() <= EDGE {
        return Ok(done(lo, f_lo, 0));
    }
    if tau > f_lo.value || tau < f_hi.value {
        return Err(Error::NoRoot(format!(
            "tau = {tau} is outside the attainable Err_avg range [{}, {}] over {knob} in [{lo}, {hi}]",
            f_hi.value, f_lo.value
        )));
    }
    let mut iterations = 0;
    while hi - lo > opts.tol && iterations < opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if f(mid)?.value > tau {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let root = 0.5 * (lo + hi);
    Ok(done(root, f(root)?, iterations))
}

/// Default exponent interval for polynomial MinDer.
pub const POLYNOMIAL_DOMAIN: (f64, f64) = (0.5, 2.0);

/// Lower bound on `|∂Err_avg/∂μ|` from the mean-ability formulas, for a
/// linear error model: `h·Σ_j c_j·∂E(s_{jℓ})/∂μ`.
///
/// Slope `a`: `∂E/∂a = s`. Constant or intercept `c`: 1. Exponent β:
/// `s^β·ln(1/s)`, decreasing in β, so the infimum sits at the top of `domain`.
pub fn min_derivative(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, domain: Option<(f64, f64)>) -> Result<f64> {
    if !model.is_linear() {
        return Err(Error::NotLinear("closed-form MinDer needs average/sum aggregation; use numeric_min_derivative".into()));
    }
    if template.merge.is_some() {
        return Err(Error::param("closed-form MinDer needs an unmerged worker; use numeric_min_derivative"));
    }
    let level = knob.level().filter(|_| knob.is_ability() && !knob.partner).ok_or_else(|| Error::param(format!("{knob} is not an ability parameter of the worker")))?;
    let profile = if level == 1 { &template.alpha1 } else { &template.alpha2 };
    let c = effective_coefficients(spec, model)?;
    let s = spec.s(level);
    let per_skill: Box<dyn Fn(f64) -> f64> = match (knob.param, profile.family()) {
        (Param::A1 | Param::A2, ProfileFamily::Linear { .. }) => Box::new(|s| s),
        (Param::C1 | Param::C2, ProfileFamily::Linear { .. } | ProfileFamily::Constant { .. }) => Box::new(|_| 1.0),
        (Param::Beta1 | Param::Beta2, ProfileFamily::Polynomial { .. }) => {
            let (lo, hi) = domain.unwrap_or(POLYNOMIAL_DOMAIN);
            if !(lo >= 0.0 && lo <= hi) {
                return Err(Error::param(format!("invalid exponent domain [{lo}, {hi}]")));
            }
            Box::new(move |s: f64| if s <= 0.0 || s >= 1.0 || hi.is_infinite() { 0.0 } else { s.powf(hi) * (1.0 / s).ln() })
        }
        (_, fam) => return Err(Error::param(format!("knob {knob} does not apply to a {} profile", fam.tag()))),
    };
    Ok(model.h_scale() * c.iter().zip(s).map(|(cj, &sj)| cj * per_skill(sj)).sum::<f64>())
}

/// `min over grid of |Err_avg(x+h) − Err_avg(x−h)| / 2h`, with shared noise.
pub fn numeric_min_derivative(
    template: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    knob: Knob,
    grid: &[f64],
    step: f64,
    opts: &RootOptions,
) -> Result<f64> {
    if grid.is_empty() || !(step > 0.0) {
        return Err(Error::param("numeric MinDer needs a nonempty grid and a positive step"));
    }
    let (dlo, dhi) = knob.domain();
    let mut best = f64::INFINITY;
    for &x in grid {
        let (a, b) = ((x - step).max(dlo), (x + step).min(dhi));
        let fa = err_avg_at(template, spec, model, knob, a, opts)?.value;
        let fb = err_avg_at(template, spec, model, knob, b, opts)?.value;
        best = best.min((fa - fb).abs() / (b - a));
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryOptions {
    pub theta: f64,
    pub convention: DispersionConvention,
    /// Bisection bracket / MinDer domain for the varied parameter.
    pub domain: Option<(f64, f64)>,
    /// Caller-supplied MinDer, required for non-linear error models.
    pub min_der: Option<f64>,
    pub root: RootOptions,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        TheoryOptions {
            theta: 0.1,
            convention: DispersionConvention::Variance,
            domain: None,
            min_der: None,
            root: RootOptions::default(),
        }
    }
}

impl TheoryOptions {
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

/// Noise of one level, taking the more dispersed source when merged.
fn level_noise(template: &WorkerTemplate, level: usize, convention: DispersionConvention) -> NoiseModel {
    let own = if level == 1 { template.alpha1.noise() } else { template.alpha2.noise() };
    match &template.merge {
        None => own,
        Some(m) => {
            let other = if level == 1 { m.partner.alpha1.noise() } else { m.partner.alpha2.noise() };
            if subskill_dispersion(other, convention) > subskill_dispersion(own, convention) {
                other
            } else {
                own
            }
        }
    }
}

/// Ingredients of a transition width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WidthParts {
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub min_der: f64,
    pub max_disp: f64,
    /// `None` when MinDer is zero.
    pub gamma: Option<f64>,
}

/// γ for varying `knob` on `template`, with the dependency form when `p > 0`.
pub fn width_for(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, opts: &TheoryOptions) -> Result<WidthParts> {
    let lipschitz = lipschitz_bound(spec, model)?;
    let min_der = match opts.min_der {
        Some(m) => m,
        None => min_derivative(template, spec, model, knob, opts.domain)?,
    };
    let conv = opts.convention;
    let max_disp = max_dispersion(level_noise(template, 1, conv), level_noise(template, 2, conv), spec.n(), conv);
    let w = if template.p > 0.0 {
        dependent_transition_width(lipschitz, max_disp, min_der, opts.theta, template.p, spec.n())
    } else {
        transition_width(lipschitz, max_disp, min_der, opts.theta)
    };
    let gamma = match w {
        Ok(g) => Some(g),
        Err(Error::InfiniteWidth) => None,
        Err(e) => return Err(e),
    };
    Ok(WidthParts {
        lipschitz,
        min_der,
        max_disp,
        gamma,
    })
}

/// Simulated success probability at the window edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseCheck {
    pub low_at: f64,
    /// `None` when the low edge lies outside the parameter domain (vacuous).
    pub p_low: Option<SimEstimate>,
    pub high_at: f64,
    pub p_high: Option<SimEstimate>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub knob: String,
    pub mu1_c: f64,
    pub gamma1: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub min_der: f64,
    pub max_disp: f64,
    pub theta: f64,
    pub p: f64,
    pub convention: DispersionConvention,
    pub root_method: ErrAvgMethod,
    pub verified: PhaseCheck,
}

/// Critical ability, width, and the simulated check
/// `P(μᶜ−γ) ≤ θ + 3·se` and `P(μᶜ+γ) ≥ 1 − θ − 3·se`.
pub fn verify_phase_transition(
    template: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    knob: Knob,
    opts: &TheoryOptions,
    config: &SimConfig,
) -> Result<PhaseReport> {
    check_theta(opts.theta)?;
    let root = critical_ability(template, spec, model, knob, opts.domain, &opts.root)?;
    let parts = width_for(template, spec, model, knob, opts)?;
    let gamma = parts.gamma.ok_or(Error::InfiniteWidth)?;
    let (dlo, dhi) = knob.domain();
    let at = |x: f64| -> Result<Option<SimEstimate>> {
        if x < dlo || x > dhi {
            Ok(None)
        } else {
            estimate_at(template, spec, model, knob, x, config).map(Some)
        }
    };
    let (low_at, high_at) = (root.value - gamma, root.value + gamma);
    let p_low = at(low_at)?;
    let p_high = at(high_at)?;
    let low_ok = p_low.is_none_or(|e| e.value <= opts.theta + 3.0 * e.stderr);
    let high_ok = p_high.is_none_or(|e| e.value >= 1.0 - opts.theta - 3.0 * e.stderr);
    Ok(PhaseReport {
        knob: knob.to_string(),
        mu1_c: root.value,
        gamma1: gamma,
        lipschitz: parts.lipschitz,
        min_der: parts.min_der,
        max_disp: parts.max_disp,
        theta: opts.theta,
        p: template.p,
        convention: opts.convention,
        root_method: root.err_avg.method,
        verified: PhaseCheck {
            low_at,
            p_low,
            high_at,
            p_high,
            holds: low_ok && high_ok,
        },
    })
}

/// The knob moving the mean of a level's profile.
pub fn ability_knob(template: &WorkerTemplate, level: usize) -> Result<Knob> {
    let profile = if level == 1 { &template.alpha1 } else { &template.alpha2 };
    let param = match (profile.family(), level) {
        (ProfileFamily::Linear { .. }, 1) => Param::A1,
        (ProfileFamily::Linear { .. }, _) => Param::A2,
        (ProfileFamily::Constant { .. }, 1) => Param::C1,
        (ProfileFamily::Constant { .. }, _) => Param::C2,
        (ProfileFamily::Polynomial { .. }, 1) => Param::Beta1,
        (ProfileFamily::Polynomial { .. }, _) => Param::Beta2,
        (f, _) => return Err(Error::param(format!("a {} profile has no scalar ability parameter", f.tag()))),
    };
    Ok(Knob::primary(param))
}

/// `Err_avg` after shifting the knob by `delta`; `None` if that leaves the domain.
fn shifted_err_avg(template: &WorkerTemplate, spec: &JobSpec, model: ErrorModel, knob: Knob, delta: f64, opts: &RootOptions) -> Result<Option<f64>> {
    let x = knob.get(template, spec)? + delta;
    let (lo, hi) = knob.domain();
    if x < lo || x > hi {
        return Ok(None);
    }
    match err_avg_at(template, spec, model, knob, x, opts) {
        Ok(v) => Ok(Some(v.value)),
        // e.g. a shifted linear slope breaking a + c >= 1
        Err(Error::Parameter(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn same_families(a: &WorkerTemplate, b: &WorkerTemplate) -> bool {
    a.alpha1.family().tag() == b.alpha1.family().tag() && a.alpha2.family().tag() == b.alpha2.family().tag()
}

fn combine(decision: &WorkerTemplate, action: &WorkerTemplate) -> WorkerTemplate {
    WorkerTemplate::new(decision.alpha1.clone(), action.alpha2.clone()).with_p(decision.p.max(action.p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeReport {
    pub worker1: WorkerTemplate,
    pub worker2: WorkerTemplate,
    pub theta: f64,
    /// γ₁ for the merged worker (W₁'s decision level, W₂'s action level).
    pub gamma1_w1: Option<f64>,
    /// γ₁ for W₂.
    pub gamma1_w2: Option<f64>,
    /// `Err_avg` of the merged worker with its decision parameter lowered by `gamma1_w1`.
    pub err_low: Option<f64>,
    /// `Err_avg` of W₂ with its decision parameter raised by `gamma1_w2`.
    pub err_high: Option<f64>,
    pub condition_holds: bool,
    /// `1 − 2θ` when the condition holds.
    pub guaranteed_gain: Option<f64>,
    pub note: Option<String>,
    pub p1: SimEstimate,
    pub p2: SimEstimate,
    pub p12: SimEstimate,
    pub p21: SimEstimate,
    /// `max{P₁, P₂, P₁₂, P₂₁} − max{P₁, P₂}`.
    pub delta: f64,
}

/// Sufficient condition for `P₁₂ − P₂ ≥ 1 − 2θ` when W₁ supplies the
/// decision level and W₂ the action level, plus the simulated table.
pub fn merging_condition(
    w1: &WorkerTemplate,
    w2: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    opts: &TheoryOptions,
    config: &SimConfig,
) -> Result<MergeReport> {
    check_theta(opts.theta)?;
    if w1.merge.is_some() || w2.merge.is_some() {
        return Err(Error::param("merging_condition takes unmerged workers"));
    }
    if !same_families(w1, w2) {
        return Err(Error::Hypothesis(
            "workers must share a profile family on each level; for mixed families use merging::merge_per_subskill".into(),
        ));
    }
    let merged = combine(w1, w2);
    let mut note = None;
    let (mut gamma1_w1, mut gamma1_w2, mut err_low, mut err_high) = (None, None, None, None);
    if model.is_linear() || opts.min_der.is_some() {
        let knob = ability_knob(w1, 1)?;
        gamma1_w1 = width_for(&merged, spec, model, knob, opts)?.gamma;
        gamma1_w2 = width_for(w2, spec, model, knob, opts)?.gamma;
        if let (Some(g1), Some(g2)) = (gamma1_w1, gamma1_w2) {
            err_low = shifted_err_avg(&merged, spec, model, knob, -g1, &opts.root)?;
            err_high = shifted_err_avg(w2, spec, model, knob, g2, &opts.root)?;
            if err_low.is_none() || err_high.is_none() {
                note = Some("a shifted decision parameter leaves its domain".into());
            }
        } else {
            note = Some("MinDer is zero; the widths are infinite".into());
        }
    } else {
        note = Some("analytic condition needs a linear error model or a supplied MinDer".into());
    }
    let tau = spec.tau();
    let condition_holds = matches!((err_low, err_high), (Some(lo), Some(hi)) if lo <= tau && tau <= hi);

    let p = |t: &WorkerTemplate| estimate_success_probability(&t.base_worker()?, spec, model, config);
    let (p1, p2) = (p(w1)?, p(w2)?);
    let p12 = p(&merged)?;
    let p21 = p(&combine(w2, w1))?;
    let base = p1.value.max(p2.value);
    let delta = base.max(p12.value).max(p21.value) - base;
    Ok(MergeReport {
        worker1: w1.clone(),
        worker2: w2.clone(),
        theta: opts.theta,
        gamma1_w1,
        gamma1_w2,
        err_low,
        err_high,
        condition_holds,
        guaranteed_gain: condition_holds.then_some(1.0 - 2.0 * opts.theta),
        note,
        p1,
        p2,
        p12,
        p21,
        delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompressionReport {
    pub p1: SimEstimate,
    pub p2: SimEstimate,
    pub p1_merged: SimEstimate,
    pub p2_merged: SimEstimate,
    /// `|P₂ − P₁| − |P′₂ − P′₁|`.
    pub pc: f64,
    pub condition_holds: bool,
    /// `1 − 2θ` when the condition holds.
    pub guaranteed_pc: Option<f64>,
    pub gamma2: Option<[f64; 3]>,
    pub note: Option<String>,
}

/// Productivity compression of two humans each merged (per subskill) with the
/// same AI, and the sufficient condition for `PC ≥ 1 − 2θ`.
#[allow(clippy::too_many_arguments)]
pub fn compression_bound(
    low: &WorkerTemplate,
    high: &WorkerTemplate,
    ai: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    opts: &TheoryOptions,
    config: &SimConfig,
) -> Result<CompressionReport> {
    check_theta(opts.theta)?;
    if low.merge.is_some() || high.merge.is_some() || ai.merge.is_some() {
        return Err(Error::param("compression_bound takes unmerged workers"));
    }
    let est = |t: &WorkerTemplate| -> Result<SimEstimate> {
        let w = t.resolve(spec)?;
        estimate_success_probability(&w, spec, model, config)
    };
    let merged = |h: &WorkerTemplate| h.clone().merged_with(ai.clone(), MergeStrategy::PerSubskill);
    let (p1, p2) = (est(low)?, est(high)?);
    let (p1_merged, p2_merged) = (est(&merged(low))?, est(&merged(high))?);
    let pc = (p2.value - p1.value).abs() - (p2_merged.value - p1_merged.value).abs();

    let analytic = compression_condition(low, high, ai, spec, model, opts);
    let (condition_holds, gamma2, note) = match analytic {
        Ok((holds, g)) => (holds, Some(g), None),
        Err(e) => (false, None, Some(e.to_string())),
    };
    Ok(CompressionReport {
        p1,
        p2,
        p1_merged,
        p2_merged,
        pc,
        condition_holds,
        guaranteed_pc: condition_holds.then_some(1.0 - 2.0 * opts.theta),
        gamma2,
        note,
    })
}

fn compression_condition(
    low: &WorkerTemplate,
    high: &WorkerTemplate,
    ai: &WorkerTemplate,
    spec: &JobSpec,
    model: ErrorModel,
    opts: &TheoryOptions,
) -> Result<(bool, [f64; 3])> {
    if low.alpha1 != high.alpha1 {
        return Err(Error::Hypothesis("the two humans need the same decision-level profile".into()));
    }
    if low.alpha1.noise() != ai.alpha1.noise() {
        return Err(Error::Hypothesis("the AI's decision-level noise must match the humans'".into()));
    }
    if spec.s1().iter().any(|&s| ai.alpha1.mean_ability(s) >= low.alpha1.mean_ability(s)) && spec.s1().iter().any(|&s| s > 0.0) {
        return Err(Error::Hypothesis("the humans' decision level must exceed the AI's".into()));
    }
    // Every worker is evaluated with the humans' decision level.
    let with_star = |t: &WorkerTemplate| combine(low, t);
    let mut g = [0.0; 3];
    let mut errs = [0.0; 3];
    for (k, (t, sign)) in [(low, 1.0), (high, -1.0), (ai, -1.0)].into_iter().enumerate() {
        let tw = with_star(t);
        let knob = ability_knob(&tw, 2)?;
        let gamma = width_for(&tw, spec, model, knob, opts)?.gamma.ok_or(Error::InfiniteWidth)?;
        g[k] = gamma;
        errs[k] = shifted_err_avg(&tw, spec, model, knob, sign * gamma, &opts.root)?
            .ok_or_else(|| Error::Hypothesis("a shifted action parameter leaves its domain".into()))?;
    }
    let tau = spec.tau();
    Ok((errs[1].max(errs[2]) <= tau && tau <= errs[0], g))
}

/// Per-subskill merge of two templates, for reports that need the plan.
pub fn merge_plan(a: &WorkerTemplate, b: &WorkerTemplate, spec: &JobSpec) -> Result<crate::merging::MergePlan> {
    Ok(merge_per_subskill(&a.base_worker()?, &b.base_worker()?, spec).1)
}
