//! Ability profiles: maps from subskill difficulty to a distribution of
//! realized ability on [0, 1].

mod fit;
mod marginal;
pub mod normal;

pub use fit::{fit_linear_profile, LinearFit};
pub use marginal::{Marginal, TruncNormal};

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `min{E, 1−E}·σ·Unif[−1, 1]` added to the mean.
    UniformScaled,
    /// Normal(E, σ²) truncated to [0, 1]; `sigma` is the standard deviation.
    TruncNormal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        kind: NoiseKind::UniformScaled,
        sigma: 0.0,
    };

    pub fn uniform(sigma: f64) -> Self {
        NoiseModel {
            kind: NoiseKind::UniformScaled,
            sigma,
        }
    }

    pub fn trunc_normal(sigma: f64) -> Self {
        NoiseModel {
            kind: NoiseKind::TruncNormal,
            sigma,
        }
    }

    /// Truncated normal given by its parent variance σ².
    pub fn trunc_normal_var(variance: f64) -> Self {
        Self::trunc_normal(variance.max(0.0).sqrt())
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::param(format!("noise sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.kind == NoiseKind::UniformScaled && self.sigma > 1.0 {
            return Err(Error::param(format!("scaled-uniform sigma must be in [0,1], got {}", self.sigma)));
        }
        Ok(())
    }

    /// Distribution of realized ability around a mean `e`.
    pub fn marginal(&self, e: f64) -> Marginal {
        match self.kind {
            NoiseKind::UniformScaled => Marginal::uniform_scaled(e, self.sigma),
            NoiseKind::TruncNormal => Marginal::trunc_normal(e, self.sigma),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileFamily {
    Constant { c: f64 },
    /// E(s) = c − (1 − a)s
    Linear { a: f64, c: f64 },
    /// E(s) = 1 − s^β
    Polynomial { beta: f64 },
    /// Interpolated (s, mean) knots, held constant beyond the end knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl ProfileFamily {
    fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be in [0,1], got {v}")))
            }
        };
        match self {
            ProfileFamily::Constant { c } => unit("c", *c),
            ProfileFamily::Linear { a, c } => {
                unit("a", *a)?;
                unit("c", *c)?;
                if a + c < 1.0 - 1e-12 {
                    return Err(Error::param(format!("linear profile needs a + c >= 1, got a={a}, c={c}")));
                }
                Ok(())
            }
            ProfileFamily::Polynomial { beta } => {
                if beta.is_finite() && *beta >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!("beta must be finite and >= 0, got {beta}")))
                }
            }
            ProfileFamily::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(Error::param("piecewise-linear profile needs at least one knot"));
                }
                for &(s, e) in knots {
                    unit("knot abscissa", s)?;
                    unit("knot ordinate", e)?;
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::param("knot abscissae must be strictly increasing"));
                    }
                    if w[1].1 > w[0].1 + 1e-12 {
                        return Err(Error::param("knot ordinates must be non-increasing"));
                    }
                }
                Ok(())
            }
        }
    }

    fn mean(&self, s: f64) -> f64 {
        match self {
            ProfileFamily::Constant { c } => *c,
            ProfileFamily::Linear { a, c } => c - (1.0 - a) * s,
            ProfileFamily::Polynomial { beta } => 1.0 - s.powf(*beta),
            ProfileFamily::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if s <= first.0 {
                    return first.1;
                }
                if s >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= s);
                let (s0, e0) = knots[i - 1];
                let (s1, e1) = knots[i];
                e0 + (e1 - e0) * (s - s0) / (s1 - s0)
            }
        }
    }

    /// True for families whose mean is affine in s (constant or linear).
    pub fn is_affine(&self) -> bool {
        matches!(self, ProfileFamily::Constant { .. } | ProfileFamily::Linear { .. })
    }

    /// (intercept, slope) of an affine mean.
    pub fn affine_coefficients(&self) -> Option<(f64, f64)> {
        match self {
            ProfileFamily::Constant { c } => Some((*c, 0.0)),
            ProfileFamily::Linear { a, c } => Some((*c, -(1.0 - a))),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ProfileFamily::Constant { .. } => "constant",
            ProfileFamily::Linear { .. } => "linear",
            ProfileFamily::Polynomial { .. } => "polynomial",
            ProfileFamily::PiecewiseLinear { .. } => "piecewise_linear",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ProfileRepr {
    #[serde(flatten)]
    family: ProfileFamily,
    noise: NoiseModel,
}

/// A validated (family, noise) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct AbilityProfile {
    family: ProfileFamily,
    noise: NoiseModel,
}

impl TryFrom<ProfileRepr> for AbilityProfile {
    type Error = Error;
    fn try_from(r: ProfileRepr) -> Result<Self> {
        AbilityProfile::new(r.family, r.noise)
    }
}

impl From<AbilityProfile> for ProfileRepr {
    fn from(p: AbilityProfile) -> Self {
        ProfileRepr {
            family: p.family,
            noise: p.noise,
        }
    }
}

impl AbilityProfile {
    pub fn new(family: ProfileFamily, noise: NoiseModel) -> Result<Self> {
        family.validate()?;
        noise.validate()?;
        Ok(AbilityProfile { family, noise })
    }

    pub fn constant(c: f64, noise: NoiseModel) -> Result<Self> {
        Self::new(ProfileFamily::Constant { c }, noise)
    }

    /// E(s) = 1 − (1 − a)s, the c = 1 linear profile.
    pub fn linear(a: f64, noise: NoiseModel) -> Result<Self> {
        Self::new(ProfileFamily::Linear { a, c: 1.0 }, noise)
    }

    pub fn linear_with_intercept(a: f64, c: f64, noise: NoiseModel) -> Result<Self> {
        Self::new(ProfileFamily::Linear { a, c }, noise)
    }

    pub fn polynomial(beta: f64, noise: NoiseModel) -> Result<Self> {
        Self::new(ProfileFamily::Polynomial { beta }, noise)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>, noise: NoiseModel) -> Result<Self> {
        Self::new(ProfileFamily::PiecewiseLinear { knots }, noise)
    }

    /// Perfect ability: E ≡ 1 with no noise.
    pub fn perfect() -> Self {
        AbilityProfile {
            family: ProfileFamily::Constant { c: 1.0 },
            noise: NoiseModel::NONE,
        }
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn with_noise(&self, noise: NoiseModel) -> Result<Self> {
        Self::new(self.family.clone(), noise)
    }

    pub fn with_family(&self, family: ProfileFamily) -> Result<Self> {
        Self::new(family, self.noise)
    }

    /// E(s), clamped to [0, 1]. `s` is clamped to [0, 1] as well.
    pub fn mean_ability(&self, s: f64) -> f64 {
        self.family.mean(s.clamp(0.0, 1.0)).clamp(0.0, 1.0)
    }

    /// The prepared distribution at difficulty `s`.
    pub fn marginal(&self, s: f64) -> Marginal {
        self.noise.marginal(self.mean_ability(s))
    }

    pub fn sample_ability<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> f64 {
        self.marginal(s).sample(rng)
    }

    pub fn cdf(&self, s: f64, x: f64) -> f64 {
        self.marginal(s).cdf(x)
    }

    pub fn quantile(&self, s: f64, q: f64) -> f64 {
        self.marginal(s).quantile(q)
    }
}

/// Outcome of a grid check of first-order stochastic dominance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dominance {
    pub holds: bool,
    /// Largest `cdf_strong − cdf_weak` seen (0 when dominance holds everywhere).
    pub worst_violation: f64,
    pub worst_at: Option<(f64, f64)>,
}

/// Checks `Pr[X_strong ≥ x] ≥ Pr[X_weak ≥ x]` on every grid pair using exact cdfs.
pub fn check_dominance(strong: &AbilityProfile, weak: &AbilityProfile, s_grid: &[f64], x_grid: &[f64]) -> Dominance {
    const TOL: f64 = 1e-12;
    let mut worst = 0.0;
    let mut at = None;
    for &s in s_grid {
        let (ms, mw) = (strong.marginal(s), weak.marginal(s));
        for &x in x_grid {
            // Survival at x is 1 − Pr[X < x]; compare left limits so point
            // masses sitting exactly on x count as "≥ x".
            let v = left_cdf(&ms, x) - left_cdf(&mw, x);
            if v > worst {
                worst = v;
                at = Some((s, x));
            }
        }
    }
    Dominance {
        holds: worst <= TOL,
        worst_violation: worst,
        worst_at: at,
    }
}

fn left_cdf(m: &Marginal, x: f64) -> f64 {
    match *m {
        Marginal::Point(p) => {
            if p < x {
                1.0
            } else {
                0.0
            }
        }
        _ => m.cdf(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn means_of_each_family() {
        let lin = AbilityProfile::linear(0.22, NoiseModel::NONE).unwrap();
        assert!((lin.mean_ability(0.5) - 0.61).abs() < 1e-15);
        let poly = AbilityProfile::polynomial(1.0, NoiseModel::NONE).unwrap();
        assert!((poly.mean_ability(0.3) - 0.7).abs() < 1e-15);
        let c = AbilityProfile::constant(0.8, NoiseModel::NONE).unwrap();
        assert_eq!(c.mean_ability(0.1), 0.8);
        assert_eq!(c.mean_ability(0.9), 0.8);
        let pw = AbilityProfile::piecewise_linear(vec![(0.0, 1.0), (0.5, 0.8), (1.0, 0.2)], NoiseModel::NONE).unwrap();
        assert!((pw.mean_ability(0.25) - 0.9).abs() < 1e-15);
        assert!((pw.mean_ability(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(AbilityProfile::linear_with_intercept(0.2, 0.5, NoiseModel::NONE).is_err());
        assert!(AbilityProfile::linear(1.2, NoiseModel::NONE).is_err());
        assert!(AbilityProfile::constant(-0.1, NoiseModel::NONE).is_err());
        assert!(AbilityProfile::polynomial(-1.0, NoiseModel::NONE).is_err());
        assert!(AbilityProfile::linear(0.5, NoiseModel::uniform(1.5)).is_err());
        assert!(AbilityProfile::linear(0.5, NoiseModel::trunc_normal(-0.1)).is_err());
        assert!(AbilityProfile::piecewise_linear(vec![(0.5, 0.4), (0.2, 0.3)], NoiseModel::NONE).is_err());
        assert!(AbilityProfile::piecewise_linear(vec![(0.1, 0.4), (0.2, 0.5)], NoiseModel::NONE).is_err());
    }

    #[test]
    fn zero_noise_sample_is_mean() {
        let p = AbilityProfile::linear(0.22, NoiseModel::uniform(0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(p.sample_ability(0.4, &mut rng), 1.0 - 0.78 * 0.4);
        let t = AbilityProfile::linear(0.22, NoiseModel::trunc_normal(0.0)).unwrap();
        assert_eq!(t.sample_ability(0.4, &mut rng), 1.0 - 0.78 * 0.4);
    }

    #[test]
    fn scaled_uniform_is_unbiased() {
        let p = AbilityProfile::linear(0.5, NoiseModel::uniform(0.1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean = (0..n).map(|_| p.sample_ability(0.5, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.75).abs() < 0.001, "mean={mean}");
    }

    #[test]
    fn cdf_and_quantile_examples() {
        let p = AbilityProfile::linear_with_intercept(0.5, 0.75, NoiseModel::uniform(1.0)).unwrap();
        // mean 0.5 at s = 0.5
        assert!((p.mean_ability(0.5) - 0.5).abs() < 1e-15);
        assert!((p.cdf(0.5, 0.5) - 0.5).abs() < 1e-15);
        assert!((p.quantile(0.5, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(p.cdf(0.5, 1.0), 1.0);
        assert_eq!(p.quantile(0.5, 0.0), 0.0);
        let t = AbilityProfile::linear(0.22, NoiseModel::trunc_normal(0.0806)).unwrap();
        assert_eq!(t.cdf(0.5, 1.0), 1.0);
        assert_eq!(t.quantile(0.5, 0.0), 0.0);
    }

    #[test]
    fn dominance_linear_constant_polynomial() {
        let (sg, xg) = (grid(20), grid(20));
        let n = NoiseModel::uniform(0.3);
        let strong = AbilityProfile::linear(0.6, n).unwrap();
        let weak = AbilityProfile::linear(0.4, n).unwrap();
        assert!(check_dominance(&strong, &weak, &sg, &xg).holds);
        assert!(!check_dominance(&weak, &strong, &sg, &xg).holds);

        let same = check_dominance(&strong, &strong, &sg, &xg);
        assert!(same.holds);
        assert_eq!(same.worst_violation, 0.0);

        let lo = AbilityProfile::constant(0.3, n).unwrap();
        let hi = AbilityProfile::constant(0.7, n).unwrap();
        let d = check_dominance(&lo, &hi, &sg, &[0.5]);
        assert!(!d.holds);
        // Pr[X ≥ 0.5]: 0 for c = 0.3 (support [0.21, 0.39]); 1 for c = 0.7.
        assert!((d.worst_violation - 1.0).abs() < 1e-12);

        let p_hi = AbilityProfile::polynomial(2.0, n).unwrap();
        let p_lo = AbilityProfile::polynomial(1.0, n).unwrap();
        assert!(check_dominance(&p_hi, &p_lo, &sg, &xg).holds);
    }

    #[test]
    fn profile_json_round_trip() {
        let p = AbilityProfile::linear(0.22, NoiseModel::trunc_normal_var(0.0065)).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"family\":\"linear\""));
        let back: AbilityProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        let bad = r#"{"family":"linear","a":0.1,"c":0.5,"noise":{"kind":"uniform_scaled","sigma":0.1}}"#;
        assert!(serde_json::from_str::<AbilityProfile>(bad).is_err());
    }
}
