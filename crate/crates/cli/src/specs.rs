//! Parsing of the compact worker, job, model and grid notations used on the command line.

use crate::CliError;
use std::path::Path;
use workfit::ability::{AbilityProfile, NoiseModel};
use workfit::dataio::{fixtures, presets, RawJobRecord};
use workfit::job::{ErrorModel, JobSpec, PoolAgg, SkillAgg};
use workfit::simulate::WorkerTemplate;

pub const BUILTIN_JOB: &str = "computer-programmers";

fn num(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::usage(format!("{what}: `{s}` is not a number")))
}

fn nums<const N: usize>(s: &str, what: &str) -> Result<[f64; N], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(CliError::usage(format!("{what}: expected {N} comma-separated values, got `{s}`")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = num(p, what)?;
    }
    Ok(out)
}

/// `uniform:SIGMA` or `trunc:SIGMA` (σ is the standard deviation for truncated normal).
pub fn parse_noise(s: &str) -> Result<NoiseModel, CliError> {
    let (kind, sigma) = s.split_once(':').ok_or_else(|| CliError::usage(format!("noise `{s}`: expected KIND:SIGMA")))?;
    let sigma = num(sigma, "noise sigma")?;
    match kind {
        "uniform" => Ok(NoiseModel::uniform(sigma)),
        "trunc" | "trunc-normal" => Ok(NoiseModel::trunc_normal(sigma)),
        _ => Err(CliError::usage(format!("noise kind `{kind}` (uniform, trunc)"))),
    }
}

/// Worker notation:
///
/// - `human`, `ai` (alias `genai`), `human-undivided`, `ai-undivided`
/// - `human:A1,A2` human noise with the given slopes
/// - `assistant:A,C` AI noise, linear decision level, constant action level
/// - `linear:A1,A2:KIND:SIGMA` linear on both levels with explicit noise
/// - `@FILE` a JSON worker template
pub fn parse_worker(s: &str) -> Result<WorkerTemplate, CliError> {
    if let Some(path) = s.strip_prefix('@') {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("worker file {path}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| CliError::usage(format!("worker file {path}: {e}")));
    }
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    let t = match (name, rest) {
        ("human", "") => presets::human(),
        ("ai" | "genai", "") => presets::genai(),
        ("human-undivided", "") => presets::human_undivided(),
        ("ai-undivided" | "genai-undivided", "") => presets::genai_undivided(),
        ("human", r) => {
            let [a1, a2] = nums(r, "human slopes")?;
            profiles(a1, a2, presets::human_noise())?
        }
        ("assistant", r) => {
            let [a, c] = nums(r, "assistant")?;
            let n = presets::genai_noise();
            WorkerTemplate::new(AbilityProfile::linear(a, n)?, AbilityProfile::constant(c, n)?)
        }
        ("linear", r) => {
            let (slopes, noise) = r.split_once(':').ok_or_else(|| CliError::usage(format!("worker `{s}`: expected linear:A1,A2:KIND:SIGMA")))?;
            let [a1, a2] = nums(slopes, "linear slopes")?;
            profiles(a1, a2, parse_noise(noise)?)?
        }
        _ => return Err(CliError::usage(format!("unknown worker `{s}`"))),
    };
    Ok(t)
}

fn profiles(a1: f64, a2: f64, n: NoiseModel) -> Result<WorkerTemplate, CliError> {
    Ok(WorkerTemplate::new(AbilityProfile::linear(a1, n)?, AbilityProfile::linear(a2, n)?))
}

/// `weighted-sum`, `average`, `max`, or `H/G/F` with H in {avg,sum,max} and G, F in {avg,wavg,max}.
pub fn parse_model(s: &str) -> Result<ErrorModel, CliError> {
    match s {
        "weighted-sum" => return Ok(ErrorModel::weighted_sum()),
        "average" => return Ok(ErrorModel::average()),
        "max" => return Ok(ErrorModel::max()),
        _ => {}
    }
    let parts: Vec<&str> = s.split('/').collect();
    let [h, g, f] = parts[..] else {
        return Err(CliError::usage(format!("model `{s}`: expected weighted-sum, average, max or H/G/F")));
    };
    let h = match h {
        "avg" => SkillAgg::Average,
        "sum" => SkillAgg::Sum,
        "max" => SkillAgg::Max,
        _ => return Err(CliError::usage(format!("skill aggregator `{h}` (avg, sum, max)"))),
    };
    let pool = |p: &str| match p {
        "avg" => Ok(PoolAgg::Average),
        "wavg" => Ok(PoolAgg::WeightedAverage),
        "max" => Ok(PoolAgg::Max),
        _ => Err(CliError::usage(format!("pool aggregator `{p}` (avg, wavg, max)"))),
    };
    Ok(ErrorModel::new(h, pool(g)?, pool(f)?))
}

/// `LO:HI:STEPS`, inclusive of both ends; one step yields `LO` alone.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(CliError::usage(format!("grid `{s}`: expected LO:HI:STEPS")));
    };
    let (lo, hi) = (num(lo, "grid")?, num(hi, "grid")?);
    let steps: usize = steps.parse().map_err(|_| CliError::usage(format!("grid `{s}`: STEPS must be a positive integer")))?;
    if steps == 0 || hi.partial_cmp(&lo).is_none_or(|o| o.is_lt()) {
        return Err(CliError::usage(format!("grid `{s}`: need STEPS >= 1 and HI >= LO")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

pub fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| CliError::usage(format!("range `{s}`: expected LO:HI")))?;
    Ok((num(lo, "range")?, num(hi, "range")?))
}

/// The bundled job, its undivided variant, or a JSON job document.
pub fn load_job(source: &str, undivided: bool) -> Result<JobSpec, CliError> {
    let rec = if source == BUILTIN_JOB {
        fixtures::computer_programmers_record()
    } else {
        RawJobRecord::read(Path::new(source)).map_err(|e| match e {
            workfit::Error::Io(io) => CliError::usage(format!("job {source}: {io}")),
            e => e.into(),
        })?
    };
    let rec = if undivided { rec.undivided()? } else { rec };
    Ok(workfit::dataio::load_job_spec(&rec)?)
}
