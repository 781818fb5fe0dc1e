//! Declarative experiment runs: a JSON spec in, CSV tables and a
//! `summary.json` out.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::discriminate::{self, DiscriminationPair, Hypothesis, SuccessCurve};
use crate::qubit::{helstrom_bound, state_from_angle};
use crate::stats::{self, derive_seed, RngStream, PRNG_ID};
use crate::tsvf::{self, TsvfSetup};
use crate::walk::{self, CollapseLabel, EnsembleSpec, PointerModel, WalkBoundaries};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 20_150_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    TsvfReport,
    TsvfSeparation,
    HelstromTable,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Fig2,
        ExperimentKind::Fig3,
        ExperimentKind::Fig4,
        ExperimentKind::Fig5,
        ExperimentKind::Fig6,
        ExperimentKind::TsvfReport,
        ExperimentKind::TsvfSeparation,
        ExperimentKind::HelstromTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::Fig6 => "fig6",
            ExperimentKind::TsvfReport => "tsvf-report",
            ExperimentKind::TsvfSeparation => "tsvf-separation",
            ExperimentKind::HelstromTable => "helstrom-table",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Experiment parameters. Unset fields take the defaults listed per experiment
/// in [`Resolved`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_sets: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Hypothesis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dump_trajectories: bool,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentSpec {
            experiment,
            parameters: Parameters::default(),
            master_seed: DEFAULT_SEED,
            output_dir: default_output_dir(),
            dump_trajectories: false,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Invalid(vec![format!("config: {e}")]))
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid experiment spec: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Machine-readable form for the command line.
    pub fn to_json(&self) -> Value {
        match self {
            RunError::Invalid(errs) => json!({"error": "invalid_spec", "details": errs}),
            RunError::Core(e) => json!({"error": "computation", "details": [e.to_string()]}),
            RunError::Io { path, source } => {
                json!({"error": "io", "details": [format!("{}: {source}", path.display())]})
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: ExperimentKind,
    pub parameters: Value,
    pub master_seed: u64,
    pub prng: String,
    pub headline: Value,
    pub version: String,
    pub wall_seconds: f64,
    pub files: Vec<String>,
}

/// Parameters after defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub sigma: f64,
    pub sigmas: Vec<f64>,
    pub boundaries: [f64; 2],
    pub boundary_sets: Vec<[f64; 2]>,
    pub start_angle: f64,
    pub theta: f64,
    pub theta_grid: Vec<f64>,
    pub m_list: Vec<u32>,
    pub truth: Hypothesis,
    pub etas: Vec<f64>,
    pub gs: Vec<f64>,
    pub g: f64,
    pub eta1: Option<f64>,
    pub eta2: f64,
    pub trials: u64,
    pub max_steps: Option<u64>,
    pub dump_limit: u64,
}

fn step_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

impl Resolved {
    /// Defaults reproduce the reference setup of each experiment.
    pub fn from_spec(kind: ExperimentKind, p: &Parameters) -> Self {
        use ExperimentKind::*;
        let sigma = p.sigma.unwrap_or(match kind {
            Fig2 => 20.0,
            Fig4 => 5.0,
            Fig5 | Fig6 => 3.0,
            TsvfSeparation => 2.0,
            _ => 1.0,
        });
        let boundaries = p.boundaries.unwrap_or(match kind {
            Fig4 => [1.0, 89.0],
            _ => [10.0, 80.0],
        });
        let theta_grid = p.theta_grid.clone().unwrap_or_else(|| match kind {
            Fig4 => step_grid(30.0, 80.0, 10.0),
            HelstromTable => step_grid(0.0, 90.0, 10.0),
            _ => step_grid(10.0, 90.0, 10.0),
        });
        let trials = p.trials.unwrap_or(match kind {
            Fig2 | Fig3 => 10_000,
            Fig4 => 1000,
            Fig5 | Fig6 => 5000,
            TsvfSeparation => 1_000_000,
            _ => 1,
        });
        Resolved {
            sigma,
            sigmas: p.sigmas.clone().unwrap_or_else(|| vec![5.0, 10.0, 15.0, 20.0, 25.0]),
            boundaries,
            boundary_sets: p
                .boundary_sets
                .clone()
                .unwrap_or_else(|| vec![[10.0, 80.0], [5.0, 85.0], [1.0, 89.0]]),
            start_angle: p.start_angle.unwrap_or(45.0),
            theta: p.theta.unwrap_or(50.0),
            theta_grid,
            m_list: p.m_list.clone().unwrap_or_else(|| vec![5, 10, 20]),
            truth: p.truth.unwrap_or(Hypothesis::Psi2),
            etas: p.etas.clone().unwrap_or_else(|| vec![0.05, 0.2, PI / 4.0, PI / 2.0, 2.5]),
            gs: p.gs.clone().unwrap_or_else(|| vec![0.01, 0.05, 0.1, 0.5]),
            g: p.g.unwrap_or(0.05),
            eta1: p.eta1,
            eta2: p.eta2.unwrap_or(2.0),
            trials,
            max_steps: p.max_steps,
            dump_limit: p.dump_limit.unwrap_or(100),
        }
    }

    fn max_steps_for(&self, pm: &PointerModel) -> u64 {
        self.max_steps.unwrap_or_else(|| pm.default_max_steps())
    }
}

/// Checks a spec without running it; returns every problem found.
pub fn validate(spec: &ExperimentSpec) -> Vec<String> {
    use ExperimentKind::*;
    let r = Resolved::from_spec(spec.experiment, &spec.parameters);
    let mut errs = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            errs.push(msg);
        }
    };
    let positive = |v: f64| v > 0.0 && v.is_finite();
    let angle_ok = |a: f64| (0.0..=90.0).contains(&a);
    let theta_ok = |t: f64| t > 0.0 && t <= 90.0;
    let boundary_ok = |b: [f64; 2]| WalkBoundaries::new(b[0], b[1]).is_ok();

    check(r.trials >= 1, "trials must be at least 1".into());
    if let Some(m) = r.max_steps {
        check(m >= 1, "max_steps must be at least 1".into());
    }
    check(
        !spec.dump_trajectories || matches!(spec.experiment, Fig2 | Fig3),
        "--dump-trajectories applies to fig2 and fig3 only".into(),
    );

    match spec.experiment {
        Fig2 => {
            check(positive(r.sigma), format!("sigma must be positive, got {}", r.sigma));
            check(boundary_ok(r.boundaries), format!("boundaries must satisfy 0 <= a0 < a1 <= 90, got {:?}", r.boundaries));
            check(angle_ok(r.start_angle), format!("start_angle must lie in [0, 90], got {}", r.start_angle));
            check(r.trials >= 30, "fig2 needs at least 30 trials for the log-normal fit".into());
        }
        Fig3 => {
            check(r.sigmas.len() >= 4, "fig3 needs at least 4 sigmas".into());
            check(r.sigmas.iter().all(|s| positive(*s)), "sigmas must be positive".into());
            check(boundary_ok(r.boundaries), format!("boundaries must satisfy 0 <= a0 < a1 <= 90, got {:?}", r.boundaries));
            check(angle_ok(r.start_angle), format!("start_angle must lie in [0, 90], got {}", r.start_angle));
        }
        Fig4 => {
            check(positive(r.sigma), format!("sigma must be positive, got {}", r.sigma));
            check(boundary_ok(r.boundaries), format!("boundaries must satisfy 0 <= a0 < a1 <= 90, got {:?}", r.boundaries));
            for b in &r.boundary_sets {
                check(boundary_ok(*b), format!("boundary set {b:?} must satisfy 0 <= a0 < a1 <= 90"));
            }
            check(!r.theta_grid.is_empty() && r.theta_grid.iter().all(|t| theta_ok(*t)), "theta_grid values must lie in (0, 90]".into());
        }
        Fig5 => {
            check(positive(r.sigma), format!("sigma must be positive, got {}", r.sigma));
            check(!r.m_list.is_empty() && r.m_list.iter().all(|m| *m >= 1), "m_list values must be at least 1".into());
            check(!r.theta_grid.is_empty() && r.theta_grid.iter().all(|t| theta_ok(*t)), "theta_grid values must lie in (0, 90]".into());
            check(r.trials >= 100, "fig5 needs at least 100 trials per point".into());
        }
        Fig6 => {
            check(positive(r.sigma), format!("sigma must be positive, got {}", r.sigma));
            check(!r.m_list.is_empty() && r.m_list.iter().all(|m| *m >= 1), "m_list values must be at least 1".into());
            check(theta_ok(r.theta), format!("theta must lie in (0, 90], got {}", r.theta));
            check(r.trials >= 1000, "fig6 needs at least 1000 trials".into());
        }
        TsvfReport => {
            check(!r.etas.is_empty(), "etas must not be empty".into());
            for &eta in &r.etas {
                check(eta > 0.0 && eta <= PI, format!("eta = {eta} outside (0, pi]; eta = 0 has zero post-selection probability"));
            }
            check(r.gs.iter().all(|g| *g >= 0.0 && g.is_finite()), "gs must be non-negative".into());
            let sigmas = spec.parameters.sigmas.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0]);
            check(sigmas.iter().all(|s| positive(*s)), "sigmas must be positive".into());
        }
        TsvfSeparation => {
            check(positive(r.sigma), format!("sigma must be positive, got {}", r.sigma));
            check(positive(r.g), format!("g must be positive, got {}", r.g));
            if let Some(e) = r.eta1 {
                check(e > 0.0 && e <= PI, format!("eta1 = {e} outside (0, pi]"));
            }
            check(r.eta2 > 0.0 && r.eta2 <= PI, format!("eta2 = {} outside (0, pi]", r.eta2));
        }
        HelstromTable => {
            check(r.theta_grid.iter().all(|t| (0.0..=90.0).contains(t)), "theta_grid values must lie in [0, 90]".into());
        }
    }
    errs
}

/// An in-memory output file.
struct Output {
    name: String,
    contents: String,
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn curve_csv(c: &SuccessCurve) -> String {
    csv(
        "theta_deg,success,stderr,helstrom",
        (0..c.len()).map(|k| format!("{},{},{},{}", c.theta_grid[k], c.success[k], c.stderr[k], c.helstrom[k])),
    )
}

/// Validates, runs and writes outputs into `spec.output_dir`.
pub fn run(spec: &ExperimentSpec) -> std::result::Result<RunSummary, RunError> {
    let errs = validate(spec);
    if !errs.is_empty() {
        return Err(RunError::Invalid(errs));
    }
    let started = Instant::now();
    let resolved = Resolved::from_spec(spec.experiment, &spec.parameters);
    let (outputs, headline) = compute(spec, &resolved)?;
    let files: Vec<String> = outputs.iter().map(|o| o.name.clone()).chain(["summary.json".to_string()]).collect();

    let mut parameters = serde_json::to_value(&resolved).expect("serializable");
    if spec.experiment == ExperimentKind::TsvfReport {
        parameters["sigmas"] = json!(tsvf_report_sigmas(&spec.parameters));
    }
    let summary = RunSummary {
        experiment: spec.experiment,
        parameters,
        master_seed: spec.master_seed,
        prng: PRNG_ID.to_string(),
        headline,
        version: VERSION.to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    let mut all = outputs;
    all.push(Output {
        name: "summary.json".into(),
        contents: serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    });
    write_outputs(&spec.output_dir, &all)?;
    Ok(summary)
}

/// Writes every file into a staging directory first and moves them into
/// place only once all writes succeeded.
fn write_outputs(dir: &Path, outputs: &[Output]) -> std::result::Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let staging = dir.join(format!(".staging-{}", std::process::id()));
    let result = (|| {
        fs::create_dir_all(&staging).map_err(io(&staging))?;
        for o in outputs {
            let p = staging.join(&o.name);
            fs::write(&p, &o.contents).map_err(io(&p))?;
        }
        for o in outputs {
            let from = staging.join(&o.name);
            fs::rename(&from, dir.join(&o.name)).map_err(io(&from))?;
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&staging);
    if result.is_err() {
        for o in outputs {
            let _ = fs::remove_file(dir.join(&o.name));
        }
    }
    result
}

fn tsvf_report_sigmas(p: &Parameters) -> Vec<f64> {
    p.sigmas.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0])
}

fn compute(spec: &ExperimentSpec, r: &Resolved) -> std::result::Result<(Vec<Output>, Value), RunError> {
    use ExperimentKind::*;
    let seed = spec.master_seed;
    Ok(match spec.experiment {
        Fig2 => fig2(spec, r, seed)?,
        Fig3 => fig3(spec, r, seed)?,
        Fig4 => fig4(r, seed)?,
        Fig5 => fig5(r, seed)?,
        Fig6 => fig6(r, seed)?,
        TsvfReport => tsvf_report(&spec.parameters, r)?,
        TsvfSeparation => tsvf_separation(r, seed)?,
        HelstromTable => {
            let rows = r.theta_grid.iter().map(|t| format!("{},{}", t, helstrom_bound(*t)));
            (
                vec![Output { name: "helstrom.csv".into(), contents: csv("theta_deg,helstrom", rows) }],
                json!({"points": r.theta_grid.len()}),
            )
        }
    })
}

fn ensemble_spec(r: &Resolved, sigma: f64) -> crate::Result<EnsembleSpec> {
    let pointer = PointerModel::new(sigma)?;
    Ok(EnsembleSpec {
        start: state_from_angle(r.start_angle),
        pointer,
        boundaries: WalkBoundaries::new(r.boundaries[0], r.boundaries[1])?,
        max_steps: r.max_steps_for(&pointer),
    })
}

fn trajectory_csv(spec: &EnsembleSpec, trials: u64, seed: u64, limit: u64) -> crate::Result<String> {
    let mut s = String::from("trial,step,reading,alpha,beta\n");
    for t in 0..trials.min(limit) {
        for row in walk::replay_trajectory(spec, t, seed)? {
            let _ = writeln!(s, "{},{},{},{},{}", row.trial, row.step, row.reading, row.alpha, row.beta);
        }
    }
    Ok(s)
}

fn label_name(l: CollapseLabel) -> &'static str {
    match l {
        CollapseLabel::Zero => "zero",
        CollapseLabel::One => "one",
        CollapseLabel::MaxedOut => "maxed_out",
    }
}

fn fig2(spec: &ExperimentSpec, r: &Resolved, seed: u64) -> crate::Result<(Vec<Output>, Value)> {
    let es = ensemble_spec(r, r.sigma)?;
    let runs = walk::run_ensemble(&es, r.trials, seed)?;
    let collapsed: Vec<f64> = runs
        .iter()
        .filter(|w| w.label != CollapseLabel::MaxedOut && w.steps > 0)
        .map(|w| w.steps as f64)
        .collect();
    let maxed = runs.iter().filter(|w| w.label == CollapseLabel::MaxedOut).count();
    let fit = stats::fit_lognormal(&collapsed)?;
    let sensitivity: BTreeMap<String, f64> = [fit.bins / 2, fit.bins, fit.bins * 2]
        .into_iter()
        .filter(|b| *b > 0)
        .map(|b| Ok((b.to_string(), stats::fit_lognormal_with_bins(&collapsed, b)?.r_squared)))
        .collect::<crate::Result<_>>()?;
    let hist = stats::density_histogram(&collapsed, fit.bins);

    let mut out = vec![
        Output {
            name: "fig2_steps.csv".into(),
            contents: csv("trial,steps,label", runs.iter().map(|w| format!("{},{},{}", w.trial, w.steps, label_name(w.label)))),
        },
        Output {
            name: "fig2_histogram.csv".into(),
            contents: csv(
                "bin_center,density,fitted_density",
                hist.iter().map(|(c, d)| format!("{},{},{}", c, d, stats::lognormal_pdf(*c, fit.mu_tilde, fit.sigma_tilde))),
            ),
        },
    ];
    if spec.dump_trajectories {
        out.push(Output { name: "fig2_trajectories.csv".into(), contents: trajectory_csv(&es, r.trials, seed, r.dump_limit)? });
    }
    let steps: Vec<f64> = collapsed.clone();
    let headline = json!({
        "mu_tilde": fit.mu_tilde,
        "sigma_tilde": fit.sigma_tilde,
        "r_squared": fit.r_squared,
        "bins": fit.bins,
        "r_squared_by_bins": sensitivity,
        "median_steps": stats::quantile(&steps, 0.5),
        "mean_steps": stats::mean_and_stderr(&steps).0,
        "maxed_out": maxed,
        "assumption": "collapse-time sample starts at the 45 degree state",
    });
    Ok((out, headline))
}

fn fig3(spec: &ExperimentSpec, r: &Resolved, seed: u64) -> crate::Result<(Vec<Output>, Value)> {
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    let mut means = Vec::new();
    let mut dumps = String::new();
    for (k, &sigma) in r.sigmas.iter().enumerate() {
        let es = ensemble_spec(r, sigma)?;
        let s = derive_seed(seed, k as u64);
        let runs = walk::run_ensemble(&es, r.trials, s)?;
        let steps: Vec<f64> = runs.iter().map(|w| w.steps as f64).collect();
        let maxed = runs.iter().filter(|w| w.label == CollapseLabel::MaxedOut).count();
        let median = stats::quantile(&steps, 0.5);
        let mean = stats::mean_and_stderr(&steps).0;
        rows.push(format!("{sigma},{median},{mean},{maxed}"));
        medians.push(median);
        means.push(mean);
        if spec.dump_trajectories {
            let t = trajectory_csv(&es, r.trials, s, r.dump_limit)?;
            // prefix sigma so rows from different ensembles stay distinct
            for (i, line) in t.lines().enumerate() {
                if i == 0 && dumps.is_empty() {
                    let _ = writeln!(dumps, "sigma,{line}");
                } else if i > 0 {
                    let _ = writeln!(dumps, "{sigma},{line}");
                }
            }
        }
    }
    let fit = stats::quadratic_scaling_fit(&r.sigmas, &medians)?;
    let mean_fit = stats::quadratic_scaling_fit(&r.sigmas, &means)?;
    let mut out = vec![Output {
        name: "fig3_scaling.csv".into(),
        contents: csv("sigma,median_steps,mean_steps,maxed_out", rows),
    }];
    if spec.dump_trajectories {
        out.push(Output { name: "fig3_trajectories.csv".into(), contents: dumps });
    }
    let headline = json!({
        "coefficient": fit.coefficient,
        "r_squared": fit.r_squared,
        "mean_coefficient": mean_fit.coefficient,
        "mean_r_squared": mean_fit.r_squared,
        "medians": medians,
        "means": means,
    });
    Ok((out, headline))
}

fn fig4(r: &Resolved, seed: u64) -> crate::Result<(Vec<Output>, Value)> {
    let pm = PointerModel::new(r.sigma)?;
    let max_steps = r.max_steps_for(&pm);
    let wb = WalkBoundaries::new(r.boundaries[0], r.boundaries[1])?;
    let curve = discriminate::weak_process_curve(&r.theta_grid, &wb, &pm, max_steps, r.trials, seed)?;

    // gap to the optimum for successively tighter boundaries
    let mut gap_rows = Vec::new();
    let mut gaps = Vec::new();
    for (k, b) in r.boundary_sets.iter().enumerate() {
        let wb = WalkBoundaries::new(b[0], b[1])?;
        let c = discriminate::weak_process_curve(&r.theta_grid, &wb, &pm, max_steps, r.trials, derive_seed(seed, 1000 + k as u64))?;
        let mut g = Vec::new();
        for i in 0..c.len() {
            gap_rows.push(format!("{},{},{},{},{}", b[0], b[1], c.theta_grid[i], c.success[i] - c.helstrom[i], c.stderr[i]));
            g.push(c.success[i] - c.helstrom[i]);
        }
        gaps.push(json!({"boundaries": b, "mean_gap": g.iter().sum::<f64>() / g.len() as f64}));
    }
    let min_margin = (0..curve.len())
        .map(|i| (curve.success[i] - curve.helstrom[i]) / curve.stderr[i].max(1e-12))
        .fold(f64::INFINITY, f64::min);
    Ok((
        vec![
            Output { name: "fig4_success.csv".into(), contents: curve_csv(&curve) },
            Output {
                name: "fig4_boundary_gaps.csv".into(),
                contents: csv("a0_tilde,a1_tilde,theta_deg,gap,stderr", gap_rows),
            },
        ],
        json!({
            "success": curve.success,
            "helstrom": curve.helstrom,
            "min_margin_in_stderr": min_margin,
            "gaps_by_boundaries": gaps,
        }),
    ))
}

fn fig5(r: &Resolved, seed: u64) -> crate::Result<(Vec<Output>, Value)> {
    let pm = PointerModel::new(r.sigma)?;
    let mut out = Vec::new();
    let mut head = serde_json::Map::new();
    for (k, &m) in r.m_list.iter().enumerate() {
        let c = discriminate::hypothesis_success_curve(&r.theta_grid, m, &pm, r.trials, derive_seed(seed, k as u64))?;
        head.insert(format!("m{m}"), json!({"success": c.success, "stderr": c.stderr}));
        out.push(Output { name: format!("fig5_m{m}.csv"), contents: curve_csv(&c) });
    }
    head.insert("helstrom".into(), json!(r.theta_grid.iter().map(|t| helstrom_bound(*t)).collect::<Vec<_>>()));
    Ok((out, Value::Object(head)))
}

fn fig6(r: &Resolved, seed: u64) -> crate::Result<(Vec<Output>, Value)> {
    let pm = PointerModel::new(r.sigma)?;
    let pair = DiscriminationPair::new(r.theta)?;
    let start = pair.state(r.truth);
    let mut out = Vec::new();
    let mut medians = serde_json::Map::new();
    for (k, &m) in r.m_list.iter().enumerate() {
        let cdf = discriminate::average_cdf(&start, m, &pm, r.trials, derive_seed(seed, k as u64))?;
        medians.insert(
            format!("m{m}"),
            json!({"median": cdf.median(), "median_stderr": stats::median_stderr(&cdf.values)}),
        );
        out.push(Output {
            name: format!("fig6_cdf_m{m}.csv"),
            contents: csv("mean_reading,cdf", cdf.pairs().map(|(v, l)| format!("{v},{l}"))),
        });
    }
    Ok((out, json!({"medians": medians, "truth": r.truth})))
}

fn tsvf_report(p: &Parameters, r: &Resolved) -> crate::Result<(Vec<Output>, Value)> {
    let sigmas = tsvf_report_sigmas(p);
    let mut setups = Vec::new();
    for &g in &r.gs {
        for &sigma in &sigmas {
            for &eta in &r.etas {
                setups.push(TsvfSetup::new(eta, g, sigma)?);
            }
        }
    }
    let rows: Vec<tsvf::TsvfReportRow> = setups.par_iter().map(tsvf::report_row).collect::<crate::Result<_>>()?;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let worst_mean = rows.iter().map(|x| rel(x.mean_analytic, x.mean_quadrature)).fold(0.0, f64::max);
    let worst_m2 = rows
        .iter()
        .map(|x| rel(x.second_moment_analytic, x.second_moment_quadrature))
        .fold(0.0, f64::max);
    let body = csv(
        "eta,g,sigma,mean_analytic,mean_quadrature,second_moment_analytic,second_moment_quadrature,postselect_prob",
        rows.iter().map(|x| {
            format!(
                "{},{},{},{},{},{},{},{}",
                x.eta, x.g, x.sigma, x.mean_analytic, x.mean_quadrature, x.second_moment_analytic, x.second_moment_quadrature, x.postselect_prob
            )
        }),
    );
    Ok((
        vec![Output { name: "tsvf_report.csv".into(), contents: body }],
        json!({"points": rows.len(), "max_rel_err_mean": worst_mean, "max_rel_err_second_moment": worst_m2}),
    ))
}

fn tsvf_separation(r: &Resolved, seed: u64) -> crate::Result<(Vec<Output>, Value)> {
    let eta1 = match r.eta1 {
        Some(e) => e,
        None => tsvf::optimal_eta(r.g, r.sigma)?.0,
    };
    let rep = tsvf::separation_report(eta1, r.eta2, r.g, r.sigma)?;

    // Monte Carlo check of both arms with the rejection sampler
    let mut mc = Vec::new();
    for (k, eta) in [eta1, r.eta2].into_iter().enumerate() {
        let setup = TsvfSetup::new(eta, r.g, r.sigma)?;
        let s = derive_seed(seed, k as u64);
        let chunk = 10_000u64;
        let n_chunks = r.trials.div_ceil(chunk);
        let accepted: Vec<f64> = (0..n_chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = RngStream::new(s, c);
                let n = chunk.min(r.trials - c * chunk);
                (0..n).filter_map(move |_| tsvf::rejection_sample_run(&setup, &mut rng)).collect::<Vec<_>>()
            })
            .collect();
        let (mean, se) = if accepted.len() > 1 { stats::mean_and_stderr(&accepted) } else { (f64::NAN, f64::NAN) };
        mc.push(json!({
            "eta": eta,
            "draws": r.trials,
            "accepted": accepted.len(),
            "acceptance_rate": accepted.len() as f64 / r.trials as f64,
            "sample_mean": mean,
            "sample_mean_stderr": se,
        }));
    }

    let row = |eta: f64, m: &tsvf::MomentReport| {
        format!("{},{},{},{},{},{}", eta, m.mean, m.second_moment, m.variance, m.postselect_prob, m.acceptance_prob)
    };
    let body = csv(
        "eta,mean,second_moment,variance,postselect_prob,acceptance_prob",
        [row(eta1, &rep.first), row(r.eta2, &rep.second)],
    );
    Ok((
        vec![Output { name: "tsvf_separation.csv".into(), contents: body }],
        json!({
            "g": r.g,
            "sigma": r.sigma,
            "eta1": eta1,
            "eta2": r.eta2,
            "mean_gap": rep.mean_gap,
            "mean_gap_over_sigma": rep.mean_gap / r.sigma,
            "variance1_over_sigma2": rep.first.variance / r.sigma.powi(2),
            "variance2_over_sigma2": rep.second.variance / r.sigma.powi(2),
            "second_moment1_over_sigma2": rep.first.second_moment / r.sigma.powi(2),
            "postselect_prob1": rep.first.postselect_prob,
            "postselect_prob2": rep.second.postselect_prob,
            "acceptance_prob1": rep.first.acceptance_prob,
            "acceptance_prob2": rep.second.acceptance_prob,
            "bayes_error": rep.bayes_error,
            "sampler": mc,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::parse(k.name()), Some(k));
            let v = serde_json::to_value(k).unwrap();
            assert_eq!(v, json!(k.name()));
        }
    }

    #[test]
    fn validation_catches_listed_errors() {
        let mut s = ExperimentSpec::new(ExperimentKind::Fig2);
        s.parameters.trials = Some(0);
        assert!(validate(&s).iter().any(|e| e.contains("trials")));

        let mut s = ExperimentSpec::new(ExperimentKind::Fig3);
        s.parameters.boundaries = Some([80.0, 10.0]);
        assert!(validate(&s).iter().any(|e| e.contains("boundaries")));

        let mut s = ExperimentSpec::new(ExperimentKind::TsvfReport);
        s.parameters.etas = Some(vec![0.0, 1.0]);
        assert!(validate(&s).iter().any(|e| e.contains("eta = 0")));

        let mut s = ExperimentSpec::new(ExperimentKind::Fig5);
        s.dump_trajectories = true;
        assert!(!validate(&s).is_empty());
    }

    #[test]
    fn defaults_are_valid() {
        for k in ExperimentKind::ALL {
            assert!(validate(&ExperimentSpec::new(k)).is_empty(), "{k:?}");
        }
    }

    #[test]
    fn reference_defaults() {
        let r = Resolved::from_spec(ExperimentKind::Fig5, &Parameters::default());
        assert_eq!((r.m_list.clone(), r.sigma, r.trials), (vec![5, 10, 20], 3.0, 5000));
        let r = Resolved::from_spec(ExperimentKind::Fig2, &Parameters::default());
        assert_eq!((r.sigma, r.boundaries, r.start_angle), (20.0, [10.0, 80.0], 45.0));
        let r = Resolved::from_spec(ExperimentKind::Fig4, &Parameters::default());
        assert_eq!(r.boundaries, [1.0, 89.0]);
        assert_eq!(r.theta_grid, vec![30.0, 40.0, 50.0, 60.0, 70.0, 80.0]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentSpec::from_json(r#"{"experiment": "fig2", "parameters": {"sigmaa": 3}}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"experiment": "fig9"}"#).is_err());
        let s = ExperimentSpec::from_json(r#"{"experiment": "tsvf-report"}"#).unwrap();
        assert_eq!(s.master_seed, DEFAULT_SEED);
    }
}
