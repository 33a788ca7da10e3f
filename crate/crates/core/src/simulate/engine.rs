use super::worker::Worker;
use crate::ability::{normal, Marginal};
use crate::error::{Error, Result};
use crate::job::{effective_coefficients, Aggregator, ErrorMatrix, ErrorModel, JobSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 7919;

/// Slack when comparing an error against τ, so that exact ties are not lost
/// to rounding in the aggregation.
pub(crate) const TAU_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
    pub ci_level: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trials: 10_000,
            seed: DEFAULT_SEED,
            ci_level: 0.95,
        }
    }
}

impl SimConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        SimConfig {
            trials,
            seed,
            ..Default::default()
        }
    }

    pub fn with_trials(self, trials: usize) -> Self {
        SimConfig { trials, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SimConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials must be >= 1"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::param(format!("ci_level must be in (0,1), got {}", self.ci_level)));
        }
        Ok(())
    }

    fn z(&self) -> f64 {
        normal::inv_cdf(0.5 + 0.5 * self.ci_level)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci: (f64, f64),
    pub trials: usize,
    pub seed: u64,
}

impl SimEstimate {
    /// Binomial proportion with a Wilson score interval.
    pub fn proportion(hits: usize, config: &SimConfig) -> Self {
        let n = config.trials as f64;
        let p = hits as f64 / n;
        let z = config.z();
        let z2n = z * z / n;
        let center = (p + 0.5 * z2n) / (1.0 + z2n);
        let half = z / (1.0 + z2n) * (p * (1.0 - p) / n + z2n / (4.0 * n)).sqrt();
        SimEstimate {
            value: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            ci: ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0)),
            trials: config.trials,
            seed: config.seed,
        }
    }

    /// Sample mean with a normal interval.
    pub fn mean(values: &[f64], config: &SimConfig) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let se = (var / n).sqrt();
        let half = config.z() * se;
        SimEstimate {
            value: mean,
            stderr: se,
            ci: (mean - half, mean + half),
            trials: values.len(),
            seed: config.seed,
        }
    }
}

/// A worker's subskill distributions laid out for one job.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    marg: Vec<[Marginal; 2]>,
    p: f64,
}

impl Prepared {
    pub(crate) fn new(worker: &Worker, spec: &JobSpec) -> Self {
        let marg = spec
            .s1()
            .iter()
            .zip(spec.s2())
            .map(|(&a, &b)| [worker.alpha1().marginal(a), worker.alpha2().marginal(b)])
            .collect();
        Prepared { marg, p: worker.p() }
    }

    pub(crate) fn marginals(&self) -> &[[Marginal; 2]] {
        &self.marg
    }

    /// One job realization. The draw order is fixed (β, then a selector and a
    /// noise uniform per subskill, all always consumed) so that the same
    /// stream yields common random numbers across parameter values.
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [[f64; 2]]) {
        let status: f64 = rng.random();
        for (row, m) in out.iter_mut().zip(&self.marg) {
            for l in 0..2 {
                let sel: f64 = rng.random();
                let u: f64 = rng.random();
                let q = if sel < self.p { status } else { u };
                row[l] = 1.0 - m[l].quantile(q);
            }
        }
    }
}

fn trial_stream(base: &ChaCha8Rng, trial: usize) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial as u64);
    rng
}

/// `Err` for every trial, in trial order.
pub(crate) fn simulate_errors(prepared: &Prepared, agg: &Aggregator, config: &SimConfig) -> Vec<f64> {
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let n = prepared.marg.len();
    (0..config.trials)
        .into_par_iter()
        .map_init(
            || vec![[0.0; 2]; n],
            |zeta, t| {
                let mut rng = trial_stream(&base, t);
                prepared.draw(&mut rng, zeta);
                agg.eval(zeta)
            },
        )
        .collect()
}

pub(crate) fn count_successes(errors: &[f64], tau: f64) -> usize {
    errors.iter().filter(|&&e| e <= tau + TAU_SLACK).count()
}

/// One realization of the error matrix from the given stream.
pub fn draw_error_matrix<R: Rng + ?Sized>(worker: &Worker, spec: &JobSpec, rng: &mut R) -> ErrorMatrix {
    let prepared = Prepared::new(worker, spec);
    let mut zeta = vec![[0.0; 2]; spec.n()];
    prepared.draw(rng, &mut zeta);
    ErrorMatrix { zeta }
}

/// Monte Carlo estimate of `P = Pr[Err(ζ) ≤ τ]`.
pub fn estimate_success_probability(worker: &Worker, spec: &JobSpec, model: ErrorModel, config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let agg = Aggregator::new(spec, model)?;
    let errors = simulate_errors(&Prepared::new(worker, spec), &agg, config);
    Ok(SimEstimate::proportion(count_successes(&errors, spec.tau()), config))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrAvgEstimate {
    pub monte_carlo: SimEstimate,
    /// Closed form, when the model is linear and every subskill distribution
    /// has its mean at the profile's mean ability.
    pub exact: Option<f64>,
}

/// Monte Carlo estimate of `Err_avg = E[Err(ζ)]`, plus the closed form when available.
pub fn estimate_err_avg(worker: &Worker, spec: &JobSpec, model: ErrorModel, config: &SimConfig) -> Result<ErrAvgEstimate> {
    config.validate()?;
    let agg = Aggregator::new(spec, model)?;
    let prepared = Prepared::new(worker, spec);
    let errors = simulate_errors(&prepared, &agg, config);
    Ok(ErrAvgEstimate {
        monte_carlo: SimEstimate::mean(&errors, config),
        exact: exact_err_avg_prepared(&prepared, spec, model)?,
    })
}

/// Closed-form `Err_avg` (see [`ErrAvgEstimate::exact`]).
pub fn exact_err_avg(worker: &Worker, spec: &JobSpec, model: ErrorModel) -> Result<Option<f64>> {
    exact_err_avg_prepared(&Prepared::new(worker, spec), spec, model)
}

fn exact_err_avg_prepared(prepared: &Prepared, spec: &JobSpec, model: ErrorModel) -> Result<Option<f64>> {
    if !model.is_linear() {
        return Ok(None);
    }
    let unbiased = prepared
        .marg
        .iter()
        .flatten()
        .all(|m| matches!(m, Marginal::Point(_) | Marginal::Uniform { .. }));
    if !unbiased {
        return Ok(None);
    }
    let c = effective_coefficients(spec, model)?;
    let total = c
        .iter()
        .zip(&prepared.marg)
        .map(|(cj, m)| cj * ((1.0 - m[0].mean()) + (1.0 - m[1].mean())))
        .sum::<f64>();
    Ok(Some(model.h_scale() * total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ability::{AbilityProfile, NoiseModel};
    use crate::job::{balanced_random_job, JobParts};

    fn lin(a: f64, noise: NoiseModel) -> AbilityProfile {
        AbilityProfile::linear(a, noise).unwrap()
    }

    #[test]
    fn zero_noise_matrix_is_deterministic() {
        let spec = balanced_random_job(4, 4, 2, 0.3, 1).unwrap();
        let w = Worker::new(lin(0.3, NoiseModel::uniform(0.0)), lin(0.6, NoiseModel::trunc_normal(0.0)), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = draw_error_matrix(&w, &spec, &mut rng);
        for j in 0..4 {
            assert_eq!(z.zeta[j][0], 1.0 - (1.0 - 0.7 * spec.s1()[j]));
            assert_eq!(z.zeta[j][1], 1.0 - (1.0 - 0.4 * spec.s2()[j]));
        }
    }

    #[test]
    fn full_dependence_uses_one_status() {
        let spec = balanced_random_job(5, 5, 2, 0.3, 2).unwrap();
        let n = NoiseModel::uniform(0.4);
        let w = Worker::new(lin(0.5, n), lin(0.5, n), 1.0).unwrap();
        let prepared = Prepared::new(&w, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut zeta = vec![[0.0; 2]; 5];
        prepared.draw(&mut rng, &mut zeta);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let beta: f64 = rng.random();
        for (j, row) in zeta.iter().enumerate() {
            assert!((row[0] - (1.0 - prepared.marg[j][0].quantile(beta))).abs() < 1e-15);
            assert!((row[1] - (1.0 - prepared.marg[j][1].quantile(beta))).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_noise_below_tau_succeeds_surely() {
        let spec = balanced_random_job(6, 6, 3, 0.9, 4).unwrap();
        let w = Worker::independent(lin(0.5, NoiseModel::NONE), lin(0.5, NoiseModel::NONE));
        let est = estimate_success_probability(&w, &spec, ErrorModel::average(), &SimConfig::new(500, 1)).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn single_trial_is_zero_or_one() {
        let spec = balanced_random_job(6, 6, 3, 0.3, 4).unwrap();
        let n = NoiseModel::uniform(0.5);
        let w = Worker::independent(lin(0.5, n), lin(0.5, n));
        let est = estimate_success_probability(&w, &spec, ErrorModel::average(), &SimConfig::new(1, 1)).unwrap();
        assert!(est.value == 0.0 || est.value == 1.0);
        assert!(est.ci.0 <= est.value && est.value <= est.ci.1);
    }

    #[test]
    fn err_avg_closed_form_examples() {
        let spec = JobSpec::new(JobParts {
            s1: vec![0.5; 4],
            s2: vec![0.5; 4],
            tasks: vec![vec![0, 1], vec![2, 3], vec![1, 2], vec![3, 0]],
            w: vec![1.0; 4],
            v: vec![1.0; 4],
            tau: 0.3,
            ..Default::default()
        })
        .unwrap();
        let half = Worker::independent(lin(0.5, NoiseModel::uniform(0.3)), lin(0.5, NoiseModel::uniform(0.3)));
        let est = estimate_err_avg(&half, &spec, ErrorModel::average(), &SimConfig::new(20_000, 2)).unwrap();
        assert!((est.exact.unwrap() - 0.25).abs() < 1e-15);
        assert!((est.monte_carlo.value - 0.25).abs() < 3.0 * est.monte_carlo.stderr);

        let perfect = Worker::independent(lin(1.0, NoiseModel::NONE), lin(1.0, NoiseModel::NONE));
        let est = estimate_err_avg(&perfect, &spec, ErrorModel::average(), &SimConfig::new(10, 2)).unwrap();
        assert_eq!(est.exact, Some(0.0));
        assert_eq!(est.monte_carlo.value, 0.0);

        let tn = Worker::independent(lin(0.5, NoiseModel::trunc_normal(0.1)), lin(0.5, NoiseModel::NONE));
        assert_eq!(exact_err_avg(&tn, &spec, ErrorModel::average()).unwrap(), None);
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let spec = balanced_random_job(10, 10, 3, 0.3, 8).unwrap();
        let n = NoiseModel::trunc_normal(0.2);
        let w = Worker::new(lin(0.4, n), lin(0.6, n), 0.3).unwrap();
        let cfg = SimConfig::new(3000, 99);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| estimate_err_avg(&w, &spec, ErrorModel::average(), &cfg).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.monte_carlo.value.to_bits(), four.monte_carlo.value.to_bits());
        assert_eq!(one.monte_carlo.stderr.to_bits(), four.monte_carlo.stderr.to_bits());
    }
}
