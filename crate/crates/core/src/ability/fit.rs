use crate::error::{Error, Result};
use serde::Serialize;

/// Least-squares fit of `accuracy ≈ 1 − (1 − a)·s` with the intercept pinned at 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub a: f64,
    /// Mean squared residual, used as the fitted noise variance.
    pub sigma_sq: f64,
    pub points: usize,
}

pub fn fit_linear_profile(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
    }
    for &(s, y) in points {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&y) {
            return Err(Error::param(format!("point ({s}, {y}) outside [0,1]^2")));
        }
    }
    let first = points[0].0;
    if points.iter().all(|p| p.0 == first) {
        return Err(Error::DegenerateFit("all difficulties are identical".into()));
    }
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * (1.0 - p.1)).sum();
    let slope = sxy / sxx;
    let a = (1.0 - slope).clamp(0.0, 1.0);
    let sse: f64 = points
        .iter()
        .map(|&(s, y)| {
            let r = y - (1.0 - (1.0 - a) * s);
            r * r
        })
        .sum();
    Ok(LinearFit {
        a,
        sigma_sq: sse / points.len() as f64,
        points: points.len(),
    })
}
