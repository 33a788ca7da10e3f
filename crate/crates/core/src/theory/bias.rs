use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Distribution of the ability parameter over the workforce.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbilityDensity {
    /// Uniform on [0, 1].
    #[default]
    Uniform,
    /// Piecewise-linear density through `(a, density)` knots, zero outside them.
    Tabulated(Vec<(f64, f64)>),
}

impl AbilityDensity {
    pub fn validate(&self) -> Result<()> {
        if let AbilityDensity::Tabulated(k) = self {
            if k.len() < 2 {
                return Err(Error::param("tabulated density needs at least 2 knots"));
            }
            for w in k.windows(2) {
                if w[1].0 <= w[0].0 {
                    return Err(Error::param("density abscissae must be strictly increasing"));
                }
            }
            if k.iter().any(|&(a, d)| !(0.0..=1.0).contains(&a) || !(d >= 0.0 && d.is_finite())) {
                return Err(Error::param("density knots need a in [0,1] and a finite density >= 0"));
            }
        }
        Ok(())
    }

    /// Unnormalized mass of [lo, hi].
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        if hi <= lo {
            return 0.0;
        }
        match self {
            AbilityDensity::Uniform => hi - lo,
            AbilityDensity::Tabulated(k) => {
                let at = |x: f64, i: usize| {
                    let ((x0, d0), (x1, d1)) = (k[i], k[i + 1]);
                    d0 + (d1 - d0) * (x - x0) / (x1 - x0)
                };
                (0..k.len() - 1)
                    .map(|i| {
                        let (a, b) = (lo.max(k[i].0), hi.min(k[i + 1].0));
                        if b <= a {
                            0.0
                        } else {
                            0.5 * (at(a, i) + at(b, i)) * (b - a)
                        }
                    })
                    .sum()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasReport {
    pub beta: f64,
    pub qualify_p: f64,
    pub reject_p: f64,
    /// Smallest ability whose success probability reaches `qualify_p`.
    pub a_qualify: f64,
    /// Largest ability whose success probability stays at or below `reject_p`.
    pub a_reject: f64,
    pub rate: f64,
}

fn check_curve(curve: &[(f64, f64)]) -> Result<()> {
    if curve.len() < 2 {
        return Err(Error::param("success curve needs at least 2 points"));
    }
    for w in curve.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::param("curve abscissae must be strictly increasing"));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::param(format!("success curve decreases between a = {} and a = {}", w[0].0, w[1].0)));
        }
    }
    Ok(())
}

fn cross(p: (f64, f64), q: (f64, f64), level: f64) -> f64 {
    if q.1 == p.1 {
        return p.0;
    }
    p.0 + (q.0 - p.0) * (level - p.1) / (q.1 - p.1)
}

/// Share of qualified workers (`P(a) ≥ qualify_p`) whose biased evaluation
/// `P(β·a) ≤ reject_p` rejects them. Thresholds come from linear
/// interpolation of the tabulated, non-decreasing curve `(a, P(a))`.
pub fn bias_report(beta: f64, curve: &[(f64, f64)], qualify_p: f64, reject_p: f64, density: &AbilityDensity) -> Result<BiasReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("beta must be in (0, 1], got {beta}")));
    }
    if !(qualify_p > reject_p) {
        return Err(Error::param("qualify_p must exceed reject_p"));
    }
    check_curve(curve)?;
    density.validate()?;

    let i = curve
        .iter()
        .position(|&(_, p)| p >= qualify_p)
        .ok_or_else(|| Error::UndefinedThreshold(format!("the curve never reaches P = {qualify_p}")))?;
    let a_qualify = if i == 0 { curve[0].0 } else { cross(curve[i - 1], curve[i], qualify_p) };
    let k = curve
        .iter()
        .rposition(|&(_, p)| p <= reject_p)
        .ok_or_else(|| Error::UndefinedThreshold(format!("the curve never falls to P = {reject_p}")))?;
    let a_reject = if k + 1 == curve.len() { curve[k].0 } else { cross(curve[k], curve[k + 1], reject_p) };

    let qualified = density.mass(a_qualify, 1.0);
    if qualified <= 0.0 {
        return Err(Error::UndefinedThreshold("no density mass above the qualification threshold".into()));
    }
    let rate = (density.mass(a_qualify, a_reject / beta) / qualified).clamp(0.0, 1.0);
    Ok(BiasReport {
        beta,
        qualify_p,
        reject_p,
        a_qualify,
        a_reject,
        rate,
    })
}

pub fn bias_misclassification_rate(beta: f64, curve: &[(f64, f64)], qualify_p: f64, reject_p: f64, density: &AbilityDensity) -> Result<f64> {
    Ok(bias_report(beta, curve, qualify_p, reject_p, density)?.rate)
}
