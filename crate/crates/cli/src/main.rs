mod output;
mod specs;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{emit, Format, Payload, RunManifest};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use workfit::ability::{AbilityProfile, NoiseModel};
use workfit::dataio::{divide_subskills, fixtures, BenchmarkTable, Psi, RawJobRecord};
use workfit::job::{ErrorModel, JobSpec};
use workfit::merging::{evaluate_merge_gain, merge_per_subskill, merge_uniform, merge_with_trust};
use workfit::simulate::{estimate_err_avg, estimate_success_probability, exact_err_avg, sweep, sweep2, Knob, Side, SimConfig, WorkerTemplate, DEFAULT_SEED};
use workfit::theory::{self, AbilityDensity, DispersionConvention, TheoryOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] workfit::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "workfit", version, about = "Simulate and analyse how well workers fit a job")]
struct Cli {
    /// Job document (JSON) or the bundled `computer-programmers` job.
    #[arg(long, global = true, default_value = specs::BUILTIN_JOB)]
    job: String,
    /// Treat every skill as fully action-level.
    #[arg(long, global = true)]
    undivided: bool,
    /// Override the job's success threshold.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Error aggregation: weighted-sum, average, max, or H/G/F.
    #[arg(long, global = true, default_value = "weighted-sum")]
    model: String,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    trials: usize,
    /// Output file; a `<file>.manifest.json` is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Rerun the command recorded in a manifest.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args, Debug, Clone)]
struct WorkerArgs {
    /// human, ai, human-undivided, ai-undivided, human:A1,A2, assistant:A,C,
    /// linear:A1,A2:KIND:SIGMA or @template.json
    #[arg(long, default_value = "human")]
    worker: String,
    /// Linear decision-level slope.
    #[arg(long)]
    a1: Option<f64>,
    /// Linear action-level slope.
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long, value_parser = ["uniform", "trunc"])]
    noise: Option<String>,
    /// Noise parameter on both levels (standard deviation for trunc).
    #[arg(long, conflicts_with = "sigma2")]
    sigma: Option<f64>,
    /// Squared noise parameter on both levels.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Dependency between subskill noises.
    #[arg(long)]
    p: Option<f64>,
}

impl WorkerArgs {
    fn template(&self) -> Result<WorkerTemplate, CliError> {
        let mut t = specs::parse_worker(&self.worker)?;
        if let Some(a) = self.a1 {
            t.alpha1 = AbilityProfile::linear(a, t.alpha1.noise())?;
        }
        if let Some(a) = self.a2 {
            t.alpha2 = AbilityProfile::linear(a, t.alpha2.noise())?;
        }
        let sigma = self.sigma.or(self.sigma2.map(|v| v.max(0.0).sqrt()));
        if self.noise.is_some() || sigma.is_some() {
            let base = t.alpha2.noise();
            let sigma = sigma.unwrap_or(base.sigma);
            let n = match self.noise.as_deref() {
                Some("uniform") => NoiseModel::uniform(sigma),
                Some(_) => NoiseModel::trunc_normal(sigma),
                None => NoiseModel { sigma, ..base },
            };
            t.alpha1 = t.alpha1.with_noise(n)?;
            t.alpha2 = t.alpha2.with_noise(n)?;
        }
        if let Some(p) = self.p {
            t = t.with_p(p);
        }
        t.base_worker()?;
        Ok(t)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MergeMode {
    /// Each subskill to the worker with the higher mean ability.
    PerSubskill,
    /// Per subskill, with the partner's action level judged at `lambda` times its mean.
    Trust,
    /// All four whole-level combinations.
    Uniform,
    /// The sufficient condition for a guaranteed gain, plus the simulated table.
    Condition,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convention {
    Variance,
    Subgaussian,
}

impl From<Convention> for DispersionConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Variance => DispersionConvention::Variance,
            Convention::Subgaussian => DispersionConvention::Subgaussian,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Success probability of one worker.
    Estimate {
        #[command(flatten)]
        worker: WorkerArgs,
    },
    /// Success probability along a knob, or over two knobs as a heatmap.
    Sweep {
        #[command(flatten)]
        worker: WorkerArgs,
        /// a1, a2, c1, c2, sigma, sigma1, sigma2, beta1, beta2, p, tau, lambda
        #[arg(long, default_value = "a1")]
        knob: String,
        /// LO:HI:STEPS
        #[arg(long, default_value = "0:1:101")]
        grid: String,
        #[arg(long, requires = "grid2")]
        knob2: Option<String>,
        #[arg(long, requires = "knob2")]
        grid2: Option<String>,
        /// Independent random streams per grid point.
        #[arg(long)]
        no_crn: bool,
        /// Merge partner, making `b.`-prefixed knobs available.
        #[arg(long)]
        partner: Option<String>,
        #[arg(long, value_enum, default_value = "per-subskill", requires = "partner")]
        strategy: MergeMode,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Critical ability, transition width and a simulated check of the window.
    Phase {
        #[command(flatten)]
        worker: WorkerArgs,
        #[arg(long, default_value = "a1")]
        knob: String,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long, value_enum, default_value = "variance")]
        convention: Convention,
        /// Supply MinDer directly (needed for non-linear models).
        #[arg(long)]
        min_der: Option<f64>,
        /// Bracket for the critical value, LO:HI.
        #[arg(long)]
        domain: Option<String>,
    },
    /// Combine a worker with a partner.
    Merge {
        #[command(flatten)]
        worker: WorkerArgs,
        #[arg(long, default_value = "ai")]
        partner: String,
        #[arg(long, value_enum, default_value = "per-subskill")]
        strategy: MergeMode,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
    },
    /// Productivity compression of two workers sharing one AI.
    Compress {
        #[arg(long, default_value = "human:0.22,0.1")]
        low: String,
        #[arg(long, default_value = "human:0.22,0.8")]
        high: String,
        #[arg(long, default_value = "assistant:0.08,0.8")]
        ai: String,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
    },
    /// Share of qualified workers rejected under a scaled-down evaluation.
    Bias {
        #[command(flatten)]
        worker: WorkerArgs,
        /// Scaling factors, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 0.8)]
        qualify: f64,
        #[arg(long, default_value_t = 0.6)]
        reject: f64,
        #[arg(long, default_value = "a1")]
        knob: String,
        #[arg(long, default_value = "0:1:101")]
        grid: String,
        /// CSV with columns `a,density`; uniform when absent.
        #[arg(long)]
        density: Option<PathBuf>,
    },
    /// Split skill proficiencies into decision and action subskills.
    Divide {
        /// Proficiency of a single skill; without it every skill of the job is divided.
        #[arg(long, requires = "lambda")]
        s: Option<f64>,
        /// Decision-level degree.
        #[arg(long, requires = "s")]
        lambda: Option<f64>,
        #[arg(long, default_value = "identity")]
        psi: String,
    },
    /// Fit linear ability profiles to a benchmark accuracy table.
    Fit {
        /// `skill,proficiency,<worker>...` table; the bundled benchmark when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        column: Option<String>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Estimate { .. } => "estimate",
            Cmd::Sweep { .. } => "sweep",
            Cmd::Phase { .. } => "phase",
            Cmd::Merge { .. } => "merge",
            Cmd::Compress { .. } => "compress",
            Cmd::Bias { .. } => "bias",
            Cmd::Divide { .. } => "divide",
            Cmd::Fit { .. } => "fit",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Cmd::Sweep { knob2: None, .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    model: ErrorModel,
    config: SimConfig,
}

impl Ctx<'_> {
    fn job(&self) -> Result<JobSpec, CliError> {
        let spec = specs::load_job(&self.cli.job, self.cli.undivided)?;
        Ok(match self.cli.tau {
            Some(t) => spec.with_tau(t)?,
            None => spec,
        })
    }

    fn theory(&self, theta: f64) -> TheoryOptions {
        let mut o = TheoryOptions::default().with_theta(theta);
        o.root.seed = self.config.seed;
        o
    }
}

fn knob(s: &str) -> Result<Knob, CliError> {
    Ok(s.parse::<Knob>()?)
}

fn f(x: f64) -> String {
    x.to_string()
}

fn with_partner(t: WorkerTemplate, partner: &str, mode: MergeMode, lambda: f64) -> Result<WorkerTemplate, CliError> {
    use workfit::simulate::MergeStrategy as S;
    let strategy = match mode {
        MergeMode::PerSubskill => S::PerSubskill,
        MergeMode::Trust => S::Trust { lambda },
        MergeMode::Uniform => S::Uniform {
            decision: Side::A,
            action: Side::B,
        },
        MergeMode::Condition => return Err(CliError::usage("strategy `condition` only applies to the merge subcommand")),
    };
    Ok(t.merged_with(specs::parse_worker(partner)?, strategy))
}

fn run(cli: &Cli, cmd: &Cmd) -> Result<(Payload, serde_json::Value), CliError> {
    let ctx = Ctx {
        cli,
        model: specs::parse_model(&cli.model)?,
        config: SimConfig::new(cli.trials, cli.seed),
    };
    ctx.config.validate()?;
    let mut cfg = json!({ "job": cli.job, "undivided": cli.undivided, "tau": cli.tau, "model": ctx.model });
    let payload = match cmd {
        Cmd::Estimate { worker } => {
            let spec = ctx.job()?;
            let t = worker.template()?;
            cfg["worker"] = serde_json::to_value(&t)?;
            let w = t.resolve(&spec)?;
            let e = estimate_success_probability(&w, &spec, ctx.model, &ctx.config)?;
            let (err_avg, err_method) = match exact_err_avg(&w, &spec, ctx.model)? {
                Some(v) => (v, "closed_form"),
                None => (estimate_err_avg(&w, &spec, ctx.model, &ctx.config)?.monte_carlo.value, "monte_carlo"),
            };
            let row = vec![f(spec.tau()), f(e.value), f(e.stderr), f(e.ci.0), f(e.ci.1), e.trials.to_string(), e.seed.to_string(), f(err_avg)];
            Payload::document(json!({
                "tau": spec.tau(),
                "p_hat": e.value,
                "stderr": e.stderr,
                "ci": [e.ci.0, e.ci.1],
                "trials": e.trials,
                "seed": e.seed,
                "err_avg": err_avg,
                "err_avg_method": err_method,
            }))?
            .with_table(&["tau", "p_hat", "stderr", "ci_lo", "ci_hi", "trials", "seed", "err_avg"], vec![row])
        }
        Cmd::Sweep {
            worker,
            knob: k,
            grid,
            knob2,
            grid2,
            no_crn,
            partner,
            strategy,
            lambda,
        } => {
            let spec = ctx.job()?;
            let mut t = worker.template()?;
            if let Some(p) = partner {
                t = with_partner(t, p, *strategy, *lambda)?;
            }
            let (kx, gx) = (knob(k)?, specs::parse_grid(grid)?);
            cfg["worker"] = serde_json::to_value(&t)?;
            cfg["grid"] = json!({ "knob": kx.to_string(), "values": gx, "crn": !no_crn });
            match (knob2, grid2) {
                (Some(k2), Some(g2)) => {
                    let (ky, gy) = (knob(k2)?, specs::parse_grid(g2)?);
                    cfg["grid2"] = json!({ "knob": ky.to_string(), "values": gy });
                    let h = sweep2(&t, &spec, ctx.model, (kx, &gx), (ky, &gy), &ctx.config, !no_crn)?;
                    let mut rows = Vec::new();
                    for (iy, y) in h.y_values.iter().enumerate() {
                        for (ix, x) in h.x_values.iter().enumerate() {
                            rows.push(vec![f(*x), f(*y), f(h.at(ix, iy))]);
                        }
                    }
                    let header = [h.x_param.as_str(), h.y_param.as_str(), "p_hat"];
                    Payload::document(&h)?.with_table(&header, rows)
                }
                _ => {
                    let pts = sweep(&t, &spec, ctx.model, kx, &gx, &ctx.config, !no_crn)?;
                    let rows = pts
                        .iter()
                        .map(|p| {
                            let e = &p.estimate;
                            vec![p.param.clone(), f(p.value), f(e.value), f(e.stderr), f(e.ci.0), f(e.ci.1), e.trials.to_string(), e.seed.to_string()]
                        })
                        .collect();
                    Payload::document(&pts)?.with_table(&["param", "value", "p_hat", "stderr", "ci_lo", "ci_hi", "trials", "seed"], rows)
                }
            }
        }
        Cmd::Phase {
            worker,
            knob: k,
            theta,
            convention,
            min_der,
            domain,
        } => {
            let spec = ctx.job()?;
            let t = worker.template()?;
            let mut opts = ctx.theory(*theta);
            opts.convention = (*convention).into();
            opts.min_der = *min_der;
            opts.domain = domain.as_deref().map(specs::parse_range).transpose()?;
            cfg["worker"] = serde_json::to_value(&t)?;
            cfg["theory"] = serde_json::to_value(&opts)?;
            Payload::document(theory::verify_phase_transition(&t, &spec, ctx.model, knob(k)?, &opts, &ctx.config)?)?
        }
        Cmd::Merge {
            worker,
            partner,
            strategy,
            lambda,
            theta,
        } => {
            let spec = ctx.job()?;
            let (t1, t2) = (worker.template()?, specs::parse_worker(partner)?);
            cfg["worker"] = serde_json::to_value(&t1)?;
            cfg["partner"] = serde_json::to_value(&t2)?;
            let (w1, w2) = (t1.base_worker()?, t2.base_worker()?);
            let base = [w1.clone(), w2.clone()];
            match strategy {
                MergeMode::Condition => Payload::document(theory::merging_condition(&t1, &t2, &spec, ctx.model, &ctx.theory(*theta), &ctx.config)?)?,
                MergeMode::Uniform => {
                    let combos = [(Side::A, Side::B), (Side::B, Side::A)];
                    let cands: Vec<_> = combos.iter().map(|&c| merge_uniform(&w1, &w2, c)).collect();
                    let g = evaluate_merge_gain(&base, &cands, &spec, ctx.model, &ctx.config)?;
                    Payload::document(json!({
                        "p1": g.base[0], "p2": g.base[1],
                        "p12": g.candidates[0], "p21": g.candidates[1],
                        "gain": g.gain, "gain_with_bases": g.gain_with_bases,
                    }))?
                }
                MergeMode::PerSubskill | MergeMode::Trust => {
                    let (merged, plan) = match strategy {
                        MergeMode::Trust => merge_with_trust(&w1, &w2, &spec, *lambda)?,
                        _ => merge_per_subskill(&w1, &w2, &spec),
                    };
                    let g = evaluate_merge_gain(&base, &[merged], &spec, ctx.model, &ctx.config)?;
                    Payload::document(json!({
                        "p1": g.base[0], "p2": g.base[1], "p_merge": g.candidates[0],
                        "gain": g.gain, "gain_with_bases": g.gain_with_bases, "plan": plan,
                    }))?
                }
            }
        }
        Cmd::Compress { low, high, ai, theta } => {
            let spec = ctx.job()?;
            let (l, h, a) = (specs::parse_worker(low)?, specs::parse_worker(high)?, specs::parse_worker(ai)?);
            cfg["workers"] = json!({ "low": l, "high": h, "ai": a });
            Payload::document(theory::compression_bound(&l, &h, &a, &spec, ctx.model, &ctx.theory(*theta), &ctx.config)?)?
        }
        Cmd::Bias {
            worker,
            beta,
            qualify,
            reject,
            knob: k,
            grid,
            density,
        } => {
            let spec = ctx.job()?;
            let t = worker.template()?;
            let kx = knob(k)?;
            let g = specs::parse_grid(grid)?;
            let density = match density {
                Some(p) => read_density(p)?,
                None => AbilityDensity::Uniform,
            };
            cfg["worker"] = serde_json::to_value(&t)?;
            cfg["grid"] = json!({ "knob": kx.to_string(), "values": g });
            cfg["density"] = serde_json::to_value(&density)?;
            let curve: Vec<(f64, f64)> = sweep(&t, &spec, ctx.model, kx, &g, &ctx.config, true)?.iter().map(|p| (p.value, p.estimate.value)).collect();
            let reports = beta
                .iter()
                .map(|&b| theory::bias_report(b, &curve, *qualify, *reject, &density))
                .collect::<workfit::Result<Vec<_>>>()?;
            let rows = reports.iter().map(|r| vec![f(r.beta), f(r.a_qualify), f(r.a_reject), f(r.rate)]).collect();
            Payload::document(json!({ "curve": curve, "reports": reports }))?.with_table(&["beta", "a_qualify", "a_reject", "rate"], rows)
        }
        Cmd::Divide { s, lambda, psi } => {
            let psi: Psi = psi.parse()?;
            let items: Vec<(String, f64, f64)> = match (s, lambda) {
                (Some(s), Some(l)) => vec![("skill".into(), *s, *l)],
                _ => job_divisions(&cli.job)?,
            };
            cfg["psi"] = serde_json::to_value(psi)?;
            let mut rows = Vec::new();
            let mut docs = Vec::new();
            for (name, s, l) in items {
                let (s1, s2) = divide_subskills(s, l, psi)?;
                rows.push(vec![name.clone(), f(s), f(l), f(s1), f(s2)]);
                docs.push(json!({ "skill": name, "s": s, "lambda": l, "s1": s1, "s2": s2 }));
            }
            let doc = if docs.len() == 1 { docs.pop().unwrap() } else { json!(docs) };
            Payload::document(doc)?.with_table(&["skill", "s", "lambda", "s1", "s2"], rows)
        }
        Cmd::Fit { csv, column } => {
            let table = match csv {
                Some(p) => BenchmarkTable::from_reader(std::fs::File::open(p)?)?,
                None => fixtures::benchmark_table(),
            };
            cfg["csv"] = json!(csv);
            let fits = match column {
                Some(c) => vec![workfit::dataio::ColumnFit {
                    column: c.clone(),
                    fit: table.fit(c)?,
                }],
                None => table.fit_all()?,
            };
            let rows = fits.iter().map(|c| vec![c.column.clone(), f(c.fit.a), f(c.fit.sigma_sq), c.fit.points.to_string()]).collect();
            Payload::document(&fits)?.with_table(&["column", "a", "sigma_sq", "points"], rows)
        }
    };
    Ok((payload, cfg))
}

/// Proficiency and degree of every skill of a job document.
fn job_divisions(source: &str) -> Result<Vec<(String, f64, f64)>, CliError> {
    let rec = if source == specs::BUILTIN_JOB {
        fixtures::computer_programmers_record()
    } else {
        RawJobRecord::read(source)?
    };
    rec.skills
        .iter()
        .enumerate()
        .map(|(j, s)| match (s.proficiency, s.decision_degree) {
            (Some(p), Some(l)) => Ok((s.name.clone(), p, l)),
            _ => Err(CliError::usage(format!("skills[{j}] has no proficiency and decision degree to divide"))),
        })
        .collect()
}

fn read_density(path: &Path) -> Result<AbilityDensity, CliError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut knots = Vec::new();
    for rec in rdr.deserialize() {
        let (a, d): (f64, f64) = rec?;
        knots.push((a, d));
    }
    let d = AbilityDensity::Tabulated(knots);
    d.validate()?;
    Ok(d)
}

/// Drops `--out VALUE` / `--out=VALUE` from an argument list.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn execute(args: Vec<String>) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(std::iter::once("workfit".to_string()).chain(args.iter().cloned())).map_err(|e| {
        // Help and version are not failures.
        if !e.use_stderr() {
            let _ = e.print();
            std::process::exit(0);
        }
        CliError::usage(e.to_string())
    })?;
    if let Some(path) = &cli.replay {
        if cli.command.is_some() {
            return Err(CliError::usage("--replay takes no subcommand"));
        }
        let m = RunManifest::read(path)?;
        let mut replayed = m.args.clone();
        if let Some(out) = &cli.out {
            replayed = strip_out(&replayed);
            replayed.push("--out".into());
            replayed.push(out.display().to_string());
        }
        if replayed.iter().any(|a| a == "--replay" || a.starts_with("--replay=")) {
            return Err(CliError::usage("manifest arguments may not contain --replay"));
        }
        return execute(replayed);
    }
    let Some(cmd) = &cli.command else {
        return Err(CliError::usage("a subcommand or --replay is required (see --help)"));
    };
    let format = cli.format.unwrap_or(cmd.default_format());
    let (payload, config) = run(&cli, cmd)?;
    let bytes = payload.render(format)?;
    let manifest = RunManifest {
        tool: "workfit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cmd.name().into(),
        args,
        seed: cli.seed,
        trials: cli.trials,
        format,
        config,
        outputs: cli.out.iter().cloned().collect(),
    };
    emit(&bytes, cli.out.as_deref(), &manifest)
}

fn main() -> ExitCode {
    match execute(std::env::args().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
