//! Experiment runner: builds a learner and an environment from a config,
//! plays the rounds, and records traces and regret summaries.

use crate::adversaries::{make_environment, AdversaryKind, Environment};
use crate::baselines::{CentroidLearner, EllipsoidLearner};
use crate::geom::{dot, SimRng};
use crate::learner::{Learner, LearnerError, Side};
use crate::projected_volume::{DeltaPolicy, ProjectedVolume, PvConfig, DEFAULT_SAMPLE_MULTIPLIER};
use crate::sampling::SamplerConfig;
use serde::{Deserialize, Serialize};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Rounds of agreement required after the learner reports convergence.
pub const CONFIRMATION_ROUNDS: usize = 100;

pub const CSV_HEADER: &str = "t,u,x,side,mistake,n_small,n_t_flag,min_width,phi_mc";

pub const JSON_SCHEMA: &str = "v1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("need at least {needed} points to fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    ProjectedVolume,
    Ellipsoid,
    Centroid,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::ProjectedVolume, LearnerKind::Ellipsoid, LearnerKind::Centroid];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::ProjectedVolume => "projected_volume",
            LearnerKind::Ellipsoid => "ellipsoid",
            LearnerKind::Centroid => "centroid",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown learner '{s}'"))
    }
}

fn delta_name(p: &DeltaPolicy) -> String {
    match p {
        DeltaPolicy::Practical => "practical".into(),
        DeltaPolicy::PaperMain => "paper_main".into(),
        DeltaPolicy::PaperAppendix => "paper_appendix".into(),
        DeltaPolicy::Explicit(v) => format!("{v}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub epsilon: f64,
    pub delta: DeltaPolicy,
    pub learner: LearnerKind,
    pub adversary: AdversaryKind,
    pub max_rounds: usize,
    pub seed: u64,
    pub replicas: usize,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub n_samples: Option<usize>,
    pub rounding: Option<bool>,
    pub sample_multiplier: usize,
    pub phi_estimate: bool,
    pub phi_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            epsilon: 0.01,
            delta: DeltaPolicy::Practical,
            learner: LearnerKind::ProjectedVolume,
            adversary: AdversaryKind::FixedRandom,
            max_rounds: 2000,
            seed: 0,
            replicas: 1,
            burn_in: None,
            thinning: None,
            n_samples: None,
            rounding: None,
            sample_multiplier: DEFAULT_SAMPLE_MULTIPLIER,
            phi_estimate: false,
            phi_samples: 20_000,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value '{value}' for {key}")))
}

impl ExperimentConfig {
    /// Sets one `key=value` setting; keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let key = key.trim();
        match key {
            "d" => self.d = parse_value(key, value)?,
            "epsilon" => self.epsilon = parse_value(key, value)?,
            "delta" => {
                self.delta = DeltaPolicy::parse(value)
                    .ok_or_else(|| HarnessError::Config(format!("bad delta policy '{value}'")))?
            }
            "learner" => self.learner = value.parse().map_err(HarnessError::Config)?,
            "adversary" => self.adversary = value.parse().map_err(HarnessError::Config)?,
            "rounds" | "max_rounds" => self.max_rounds = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "replicas" => self.replicas = parse_value(key, value)?,
            "burn_in" => self.burn_in = Some(parse_value(key, value)?),
            "thinning" => self.thinning = Some(parse_value(key, value)?),
            "n_samples" => self.n_samples = Some(parse_value(key, value)?),
            "rounding" => self.rounding = Some(parse_value(key, value)?),
            "sample_multiplier" => self.sample_multiplier = parse_value(key, value)?,
            "phi_estimate" => self.phi_estimate = parse_value(key, value)?,
            "phi_samples" => self.phi_samples = parse_value(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies flat `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), HarnessError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if !(1..=16).contains(&self.d) {
            return fail("d must be in 1..=16");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail("epsilon must be in (0, 1)");
        }
        if self.max_rounds < 1 {
            return fail("rounds must be at least 1");
        }
        if self.replicas < 1 {
            return fail("replicas must be at least 1");
        }
        if self.sample_multiplier < 1 {
            return fail("sample_multiplier must be at least 1");
        }
        if let DeltaPolicy::Explicit(v) = self.delta {
            if !(v > 0.0 && v.is_finite()) {
                return fail("delta must be positive");
            }
        }
        self.sampler()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn sampler(&self) -> SamplerConfig {
        let mut s = SamplerConfig::default_for(self.d);
        if let Some(v) = self.burn_in {
            s.burn_in = v;
        }
        if let Some(v) = self.thinning {
            s.thinning = v;
        }
        if let Some(v) = self.n_samples {
            s.n_samples = v;
        }
        if let Some(v) = self.rounding {
            s.rounding = v;
        }
        s
    }

    /// Seed of replica `r`.
    pub fn replica_seed(&self, r: usize) -> u64 {
        SimRng::for_stream(self.seed, r as u64).fork().seed()
    }

    pub fn build_learner(&self, rng: SimRng) -> Result<Box<dyn Learner>, LearnerError> {
        let initial = self.adversary.initial_body();
        Ok(match self.learner {
            LearnerKind::ProjectedVolume => {
                let mut pv = PvConfig::new(self.d, self.epsilon);
                pv.delta = self.delta;
                pv.sampler = self.sampler();
                pv.max_sample_multiplier = self.sample_multiplier;
                pv.phi_samples = self.phi_estimate.then_some(self.phi_samples);
                pv.initial = initial;
                Box::new(ProjectedVolume::new(self.d, pv, rng)?)
            }
            LearnerKind::Ellipsoid => Box::new(EllipsoidLearner::new(self.d, self.epsilon, &initial)?),
            LearnerKind::Centroid => {
                Box::new(CentroidLearner::new(self.d, self.epsilon, &initial, self.sampler(), rng)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedReason {
    Converged,
    MaxRounds,
    AdversaryExhausted,
    Degenerate,
    Inconsistent,
}

impl TerminatedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminatedReason::Converged => "converged",
            TerminatedReason::MaxRounds => "max_rounds",
            TerminatedReason::AdversaryExhausted => "adversary_exhausted",
            TerminatedReason::Degenerate => "degenerate",
            TerminatedReason::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRow {
    pub t: usize,
    pub u: Vec<f64>,
    pub x: f64,
    pub side: Side,
    /// `None` while deferred.
    pub mistake: Option<bool>,
    pub n_small: usize,
    pub n_t_flag: bool,
    pub min_width: Option<f64>,
    pub phi_mc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub d: usize,
    pub epsilon: f64,
    pub delta: String,
    pub learner: LearnerKind,
    pub adversary: AdversaryKind,
    pub seed: u64,
    pub replica: usize,
    pub rounds: usize,
    pub total_regret: usize,
    pub terminated_reason: TerminatedReason,
    /// Why a run ended abnormally.
    pub diagnostic: Option<String>,
    /// Rounds where the hidden `θ` was outside the knowledge set.
    pub soundness_violations: usize,
    /// The hidden point (fixed runs) or the committed `θ*` (adaptive runs).
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RoundRow>,
    pub summary: RunSummary,
}

impl RunRecord {
    pub fn mistakes(&self) -> usize {
        self.rows.iter().filter(|r| r.mistake == Some(true)).count()
    }
}

/// Plays one replica of `cfg`.
pub fn run_replica(cfg: &ExperimentConfig, replica: usize) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let seed = cfg.replica_seed(replica);
    let mut root = SimRng::new(seed);
    let env_rng = root.fork();
    let learner_rng = root.fork();
    let env = make_environment(cfg.adversary, cfg.d, cfg.epsilon, env_rng);
    let mut summary = RunSummary {
        schema: JSON_SCHEMA.to_string(),
        d: cfg.d,
        epsilon: cfg.epsilon,
        delta: delta_name(&cfg.delta),
        learner: cfg.learner,
        adversary: cfg.adversary,
        seed,
        replica,
        rounds: 0,
        total_regret: 0,
        terminated_reason: TerminatedReason::MaxRounds,
        diagnostic: None,
        soundness_violations: 0,
        theta: None,
    };
    let learner = match cfg.build_learner(learner_rng) {
        Ok(l) => l,
        Err(e) => {
            summary.terminated_reason = TerminatedReason::Degenerate;
            summary.diagnostic = Some(e.to_string());
            return Ok(RunRecord { rows: Vec::new(), summary });
        }
    };
    Ok(play(cfg, learner, env, summary))
}

/// Plays every replica of `cfg` in index order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    (0..cfg.replicas).map(|r| run_replica(cfg, r)).collect()
}

fn play(
    cfg: &ExperimentConfig,
    mut learner: Box<dyn Learner>,
    mut env: Box<dyn Environment>,
    mut summary: RunSummary,
) -> RunRecord {
    let mut rows = Vec::new();
    let mut confirmed = 0usize;
    let mut reason = TerminatedReason::MaxRounds;
    let fail = |r: TerminatedReason, msg: String, summary: &mut RunSummary| {
        log::warn!("run ended early: {msg}");
        summary.diagnostic = Some(msg);
        r
    };
    for t in 0..cfg.max_rounds {
        let u = match env.next_direction(t, learner.knowledge()) {
            Ok(Some(u)) => u,
            Ok(None) => {
                reason = TerminatedReason::AdversaryExhausted;
                break;
            }
            Err(e) => {
                reason = fail(TerminatedReason::Inconsistent, e.to_string(), &mut summary);
                break;
            }
        };
        let pred = match learner.predict(&u) {
            Ok(p) => p,
            Err(e) => {
                reason = fail(TerminatedReason::Degenerate, e.to_string(), &mut summary);
                break;
            }
        };
        let outcome = match env.respond(&u, pred.x) {
            Ok(o) => o,
            Err(e) => {
                reason = fail(TerminatedReason::Inconsistent, e.to_string(), &mut summary);
                break;
            }
        };
        let observed = learner.observe(&u, pred.x, outcome.side);
        let tel = learner.telemetry();
        rows.push(RoundRow {
            t,
            u,
            x: pred.x,
            side: outcome.side,
            mistake: outcome.mistake,
            n_small: tel.n_small,
            n_t_flag: pred.n_t_flag,
            min_width: tel.min_width,
            phi_mc: tel.phi,
        });
        if let Err(e) = observed {
            reason = fail(TerminatedReason::Degenerate, e.to_string(), &mut summary);
            break;
        }
        if let Some(theta) = env.theta() {
            if !learner.contains(theta) {
                summary.soundness_violations += 1;
            }
        }
        if learner.converged() && !pred.n_t_flag {
            confirmed += 1;
            if confirmed >= CONFIRMATION_ROUNDS {
                reason = TerminatedReason::Converged;
                break;
            }
        } else {
            confirmed = 0;
        }
    }
    summary.theta = env.theta().map(<[f64]>::to_vec);
    if cfg.adversary.is_adaptive() {
        match env.finalize() {
            Ok(Some(theta)) => {
                for row in &mut rows {
                    row.mistake = Some((row.x - dot(&row.u, &theta)).abs() > cfg.epsilon);
                }
                summary.theta = Some(theta);
            }
            Ok(None) => {}
            Err(e) => {
                reason = fail(TerminatedReason::Inconsistent, e.to_string(), &mut summary);
            }
        }
    }
    summary.rounds = rows.len();
    summary.terminated_reason = reason;
    summary.total_regret = rows.iter().filter(|r| r.mistake == Some(true)).count();
    RunRecord { rows, summary }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn csv_string(record: &RunRecord) -> String {
    let mut out = String::with_capacity(64 * (record.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &record.rows {
        let u: Vec<String> = r.u.iter().map(|v| format!("{v}")).collect();
        let mistake = match r.mistake {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            u.join(";"),
            r.x,
            r.side.as_str(),
            mistake,
            r.n_small,
            u8::from(r.n_t_flag),
            opt(r.min_width),
            opt(r.phi_mc)
        );
    }
    out
}

pub fn json_string(record: &RunRecord) -> String {
    serde_json::to_string_pretty(&record.summary).expect("summary serializes")
}

pub fn emit_csv(record: &RunRecord, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, csv_string(record)).map_err(io_err(path))
}

pub fn emit_json(record: &RunRecord, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, json_string(record) + "\n").map_err(io_err(path))
}

/// Base file name for one run inside a sweep directory.
pub fn run_stem(s: &RunSummary) -> String {
    format!("{}_{}_d{}_eps{}_r{}", s.learner, s.adversary, s.d, s.epsilon, s.replica)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretModel {
    /// `C·d·ln(d/ε)`
    DLog,
    /// `C·d²·ln(1/(ε√d))`
    D2Log,
}

impl RegretModel {
    pub fn feature(self, d: usize, epsilon: f64) -> f64 {
        let df = d as f64;
        match self {
            RegretModel::DLog => df * (df / epsilon).ln(),
            RegretModel::D2Log => df * df * (1.0 / (epsilon * df.sqrt())).ln(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegretModel::DLog => "d_log",
            RegretModel::D2Log => "d2_log",
        }
    }
}

impl FromStr for RegretModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "d_log" => Ok(RegretModel::DLog),
            "d2_log" => Ok(RegretModel::D2Log),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretPoint {
    pub d: usize,
    pub epsilon: f64,
    pub regret: f64,
}

impl From<&RunSummary> for RegretPoint {
    fn from(s: &RunSummary) -> Self {
        RegretPoint {
            d: s.d,
            epsilon: s.epsilon,
            regret: s.total_regret as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub c: f64,
    /// Root-mean-square residual in regret units.
    pub residual: f64,
}

/// Least-squares `C` for `regret ≈ C·feature(d, ε)` (no intercept).
pub fn fit_regret_constant(points: &[RegretPoint], model: RegretModel) -> Result<Fit, HarnessError> {
    if points.len() < 4 {
        return Err(HarnessError::InsufficientPoints {
            needed: 4,
            got: points.len(),
        });
    }
    let f: Vec<f64> = points.iter().map(|p| model.feature(p.d, p.epsilon)).collect();
    let sff: f64 = f.iter().map(|v| v * v).sum();
    let sfy: f64 = f.iter().zip(points).map(|(v, p)| v * p.regret).sum();
    let c = sfy / sff;
    let ss: f64 = f.iter().zip(points).map(|(v, p)| (p.regret - c * v).powi(2)).sum();
    Ok(Fit {
        c,
        residual: (ss / points.len() as f64).sqrt(),
    })
}

/// A grid of experiments sharing every setting except the swept ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub base: ExperimentConfig,
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub learners: Vec<LearnerKind>,
    pub adversaries: Vec<AdversaryKind>,
}

impl SweepGrid {
    pub fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &learner in &self.learners {
            for &adversary in &self.adversaries {
                for &d in &self.dims {
                    for &epsilon in &self.epsilons {
                        out.push(ExperimentConfig {
                            d,
                            epsilon,
                            learner,
                            adversary,
                            ..self.base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

pub const SUMMARY_HEADER: &str = "learner,adversary,d,epsilon,replica,seed,rounds,regret,terminated_reason,soundness_violations";

fn summary_line(s: &RunSummary) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        s.learner,
        s.adversary,
        s.d,
        s.epsilon,
        s.replica,
        s.seed,
        s.rounds,
        s.total_regret,
        s.terminated_reason.as_str(),
        s.soundness_violations
    )
}

/// Runs every grid point and writes per-run CSV/JSON plus `summary.csv` into
/// `out` when given.
pub fn sweep(grid: &SweepGrid, out: Option<&Path>) -> Result<Vec<RunSummary>, HarnessError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut summaries = Vec::new();
    for cfg in grid.configs() {
        for record in run_experiment(&cfg)? {
            log::info!(
                "{} d={} eps={} replica={}: regret {} in {} rounds ({})",
                record.summary.learner,
                record.summary.d,
                record.summary.epsilon,
                record.summary.replica,
                record.summary.total_regret,
                record.summary.rounds,
                record.summary.terminated_reason.as_str()
            );
            if let Some(dir) = out {
                let stem = run_stem(&record.summary);
                emit_csv(&record, &dir.join(format!("{stem}.csv")))?;
                emit_json(&record, &dir.join(format!("{stem}.json")))?;
            }
            summaries.push(record.summary);
        }
    }
    if let Some(dir) = out {
        let mut text = String::from(SUMMARY_HEADER);
        text.push('\n');
        for s in &summaries {
            text.push_str(&summary_line(s));
            text.push('\n');
        }
        let path = dir.join("summary.csv");
        std::fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(summaries)
}

/// Reads the regret points of a sweep directory, optionally restricted to
/// one learner.
pub fn read_sweep_points(dir: &Path, learner: Option<LearnerKind>) -> Result<Vec<RegretPoint>, HarnessError> {
    let path = dir.join("summary.csv");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let parse_err = |msg: String| HarnessError::Parse {
        path: path.clone(),
        msg,
    };
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(parse_err("unexpected header".into()));
    }
    let mut points = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(parse_err(format!("line {}: expected 10 fields", n + 2)));
        }
        let kind: LearnerKind = f[0].parse().map_err(parse_err)?;
        if learner.is_some_and(|l| l != kind) {
            continue;
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("line {}: {e}", n + 2)));
        points.push(RegretPoint {
            d: num(f[2])? as usize,
            epsilon: num(f[3])?,
            regret: num(f[7])?,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::FixedTheta;

    fn fixed_run(learner: LearnerKind, theta: Vec<f64>, epsilon: f64, max_rounds: usize) -> RunRecord {
        let d = theta.len();
        let cfg = ExperimentConfig {
            d,
            epsilon,
            learner,
            max_rounds,
            ..ExperimentConfig::default()
        };
        let l = cfg.build_learner(SimRng::new(1)).unwrap();
        let env = Box::new(FixedTheta::with_theta(AdversaryKind::FixedRandom, theta, epsilon, SimRng::new(2)));
        let summary = RunSummary {
            schema: JSON_SCHEMA.into(),
            d,
            epsilon,
            delta: "practical".into(),
            learner,
            adversary: AdversaryKind::FixedRandom,
            seed: 0,
            replica: 0,
            rounds: 0,
            total_regret: 0,
            terminated_reason: TerminatedReason::MaxRounds,
            diagnostic: None,
            soundness_violations: 0,
            theta: None,
        };
        play(&cfg, l, env, summary)
    }

    #[test]
    fn one_dimensional_halving() {
        // K₀ = [−1, 1]; halving reaches width 0.5 after two cuts
        let rec = fixed_run(LearnerKind::ProjectedVolume, vec![0.6], 0.25, 500);
        assert!(rec.summary.total_regret <= 3, "{}", rec.summary.total_regret);
        assert_eq!(rec.summary.soundness_violations, 0);
        // every confirmation round halves the interval, which collapses
        // before 100 rounds have passed
        match rec.summary.terminated_reason {
            TerminatedReason::Converged => {}
            TerminatedReason::Degenerate => assert_eq!(rec.rows.last().unwrap().n_small, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn regret_counts_strict_mistakes() {
        for learner in LearnerKind::ALL {
            let rec = fixed_run(learner, vec![0.1, -0.2], 0.05, 300);
            let theta = [0.1, -0.2];
            for r in &rec.rows {
                assert_eq!(r.mistake, Some((r.x - dot(&r.u, &theta)).abs() > 0.05));
            }
            assert_eq!(rec.summary.total_regret, rec.mistakes());
            assert_eq!(rec.summary.soundness_violations, 0, "{learner}");
            assert!(rec.rows.windows(2).all(|w| w[0].t + 1 == w[1].t));
        }
    }

    #[test]
    fn csv_and_json_agree() {
        let rec = fixed_run(LearnerKind::Ellipsoid, vec![0.3, 0.1], 0.1, 3);
        let csv = csv_string(&rec);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        let mistakes = lines[1..].iter().filter(|l| l.split(',').nth(4) == Some("1")).count();
        let json: serde_json::Value = serde_json::from_str(&json_string(&rec)).unwrap();
        assert_eq!(json["total_regret"].as_u64().unwrap() as usize, mistakes);
        assert_eq!(json["schema"], "v1");

        let empty = RunRecord {
            rows: Vec::new(),
            summary: rec.summary.clone(),
        };
        assert_eq!(csv_string(&empty), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn replicas_are_deterministic() {
        let cfg = ExperimentConfig {
            d: 2,
            epsilon: 0.05,
            max_rounds: 200,
            seed: 9,
            ..ExperimentConfig::default()
        };
        let a = run_replica(&cfg, 0).unwrap();
        let b = run_replica(&cfg, 0).unwrap();
        assert_eq!(csv_string(&a), csv_string(&b));
        assert_eq!(json_string(&a), json_string(&b));
        let c = run_replica(&cfg, 1).unwrap();
        assert_ne!(a.summary.seed, c.summary.seed);
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_kv("# comment\nd=3\nepsilon = 0.05\ndelta=paper_main\nlearner=centroid\nadversary=greedy_width\nrounds=10\n").unwrap();
        assert_eq!(cfg.d, 3);
        assert_eq!(cfg.delta, DeltaPolicy::PaperMain);
        assert_eq!(cfg.learner, LearnerKind::Centroid);
        assert_eq!(cfg.adversary, AdversaryKind::GreedyWidth);
        assert_eq!(cfg.max_rounds, 10);
        assert!(ExperimentConfig::from_kv("d=0").is_err());
        assert!(ExperimentConfig::from_kv("d=17").is_err());
        assert!(ExperimentConfig::from_kv("epsilon=1").is_err());
        assert!(ExperimentConfig::from_kv("rounds=0").is_err());
        assert!(ExperimentConfig::from_kv("colour=blue").is_err());
        assert!(ExperimentConfig::from_kv("delta=-1").is_err());
        assert!(ExperimentConfig::from_kv("just text").is_err());
    }

    #[test]
    fn fit_examples() {
        let mut pts = Vec::new();
        for d in 2..=5 {
            for eps in [0.05, 0.01] {
                pts.push(RegretPoint {
                    d,
                    epsilon: eps,
                    regret: 7.0 * RegretModel::DLog.feature(d, eps),
                });
            }
        }
        let fit = fit_regret_constant(&pts, RegretModel::DLog).unwrap();
        assert!((fit.c - 7.0).abs() < 1e-12 && fit.residual < 1e-9);
        let other = fit_regret_constant(&pts, RegretModel::D2Log).unwrap();
        assert!(other.residual > 1.0);

        let quad: Vec<RegretPoint> = pts
            .iter()
            .map(|p| RegretPoint {
                regret: 2.0 * RegretModel::D2Log.feature(p.d, p.epsilon),
                ..*p
            })
            .collect();
        let wrong = fit_regret_constant(&quad, RegretModel::DLog).unwrap();
        assert!(wrong.residual > 0.05 * quad.iter().map(|p| p.regret).sum::<f64>() / quad.len() as f64);

        assert!(matches!(
            fit_regret_constant(&pts[..3], RegretModel::DLog),
            Err(HarnessError::InsufficientPoints { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn adaptive_runs_recount_against_theta_star() {
        let cfg = ExperimentConfig {
            d: 2,
            epsilon: 1.0 / 32.0,
            learner: LearnerKind::Ellipsoid,
            adversary: AdversaryKind::RoundRobinAdaptive,
            max_rounds: 400,
            ..ExperimentConfig::default()
        };
        let rec = run_replica(&cfg, 0).unwrap();
        let theta = rec.summary.theta.clone().unwrap();
        assert!(rec.rows.iter().all(|r| r.mistake.is_some()));
        for r in &rec.rows {
            assert_eq!(r.mistake, Some((r.x - dot(&r.u, &theta)).abs() > cfg.epsilon));
        }
    }
}
