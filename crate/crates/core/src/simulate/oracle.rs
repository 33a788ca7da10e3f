use super::engine::{Prepared, TAU_SLACK};
use super::worker::Worker;
use crate::ability::Marginal;
use crate::error::{Error, Result};
use crate::job::{Aggregator, ErrorModel, JobSpec};

const MAX_DIMS: usize = 6;
const MAX_CELLS: f64 = 5e8;

/// Deterministic quadrature for `P` on tiny instances.
///
/// Works on the uniform variates behind each subskill (ζ = 1 − F⁻¹(u)). `Err`
/// is non-increasing in every u, so the last non-degenerate coordinate is
/// integrated exactly: the success set is `u ≥ u*`, with `u*` found by
/// bisection. The remaining coordinates use the midpoint rule with
/// `resolution` points each. For `p = 1` all subskills share u = β and the
/// answer is `1 − β*`.
pub fn brute_force_success_probability(worker: &Worker, spec: &JobSpec, model: ErrorModel, resolution: usize) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::param("resolution must be >= 1"));
    }
    if 2 * spec.n() > MAX_DIMS {
        return Err(Error::Capacity(format!("{} subskills exceed the limit of {MAX_DIMS}", 2 * spec.n())));
    }
    let p = worker.p();
    if p != 0.0 && p != 1.0 {
        return Err(Error::param(format!("quadrature needs p in {{0, 1}}, got {p}")));
    }
    let agg = Aggregator::new(spec, model)?;
    let prepared = Prepared::new(worker, spec);
    let marg: Vec<Marginal> = prepared.marginals().iter().flatten().copied().collect();
    let tau = spec.tau() + TAU_SLACK;
    let n = spec.n();

    let mut zeta = vec![[0.0; 2]; n];
    let fill = |zeta: &mut [[f64; 2]], us: &[f64]| {
        for (k, m) in marg.iter().enumerate() {
            zeta[k / 2][k % 2] = 1.0 - m.quantile(us[k]);
        }
    };

    // Success probability over the last free coordinate given the others.
    let tail = |zeta: &mut [[f64; 2]], us: &mut [f64], free: &[usize]| -> f64 {
        let set = |us: &mut [f64], u: f64| {
            for &k in free {
                us[k] = u;
            }
        };
        set(us, 1.0);
        fill(zeta, us);
        if agg.eval(zeta) > tau {
            return 0.0;
        }
        set(us, 0.0);
        fill(zeta, us);
        if agg.eval(zeta) <= tau {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..52 {
            let mid = 0.5 * (lo + hi);
            set(us, mid);
            fill(zeta, us);
            if agg.eval(zeta) <= tau {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        1.0 - 0.5 * (lo + hi)
    };

    let mut us = vec![0.5; marg.len()];
    if p == 1.0 {
        let all: Vec<usize> = (0..marg.len()).collect();
        return Ok(tail(&mut zeta, &mut us, &all));
    }

    let free: Vec<usize> = (0..marg.len()).filter(|&k| !matches!(marg[k], Marginal::Point(_))).collect();
    let Some((&last, grid_dims)) = free.split_last() else {
        fill(&mut zeta, &us);
        return Ok(if agg.eval(&zeta) <= tau { 1.0 } else { 0.0 });
    };
    let cells = (resolution as f64).powi(grid_dims.len() as i32);
    if cells > MAX_CELLS {
        return Err(Error::Capacity(format!("{cells:.0} quadrature cells exceed the limit")));
    }
    let cells = cells as usize;
    let h = 1.0 / resolution as f64;
    let mut acc = 0.0;
    for cell in 0..cells {
        let mut idx = cell;
        for &k in grid_dims {
            us[k] = (idx % resolution) as f64 * h + 0.5 * h;
            idx /= resolution;
        }
        acc += tail(&mut zeta, &mut us, &[last]);
    }
    Ok(acc / cells as f64)
}
