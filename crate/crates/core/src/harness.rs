//! Seeded simulation experiments: random linear SEMs, CI backends built from
//! them, and skeleton-recovery scores for SP, SGS and PC.
//!
//! Every (cell, trial) pair draws its model from a seed derived from the
//! master seed, the vertex count, the neighborhood size and the trial index,
//! so all sample sizes and test levels of a trial see the same model, and
//! all test levels of a trial see the same data. Results do not depend on
//! the number of worker threads.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::baselines::{run_baseline, Method, DEFAULT_SGS_MAX_P};
use crate::graph::{skeleton, Pair};
use crate::oracle::{CachedBackend, CiBackend, DsepBackend, FisherZBackend, GaussianExactBackend, TestConfig};
use crate::par::map_jobs;
use crate::sem::{covariance_of, derive_seed, random_sem, rng_from_seed, sample, GenConfig};
use crate::sp::{sp_search_with, SpConfig, DEFAULT_MAX_P};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid experiment configuration: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Fisher-z tests on `n` simulated draws.
    Sample,
    /// d-separation in the generating DAG.
    Oracle,
    /// Exact partial correlations of the model covariance.
    GaussianExact,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sample => "sample",
            Mode::Oracle => "oracle",
            Mode::GaussianExact => "gaussian-exact",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sample" => Ok(Mode::Sample),
            "oracle" => Ok(Mode::Oracle),
            "gaussian-exact" | "gaussian" => Ok(Mode::GaussianExact),
            _ => Err(format!("unknown mode `{s}`; expected sample, oracle or gaussian-exact")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    Sp,
    Sgs,
    Pc,
}

impl Learner {
    pub const ALL: [Learner; 3] = [Learner::Sp, Learner::Sgs, Learner::Pc];

    pub fn name(self) -> &'static str {
        match self {
            Learner::Sp => "sp",
            Learner::Sgs => "sgs",
            Learner::Pc => "pc",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Learner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sp" => Ok(Learner::Sp),
            "sgs" => Ok(Learner::Sgs),
            "pc" => Ok(Learner::Pc),
            _ => Err(format!("unknown method `{s}`; expected sp, sgs or pc")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub alpha_list: Vec<f64>,
    /// `None` selects [`default_nbhd_grid`] for each `p`.
    pub nbhd_list: Option<Vec<f64>>,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Learner>,
    pub mode: Mode,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    pub sp_max_p: usize,
    /// Subtract column means before forming the sample covariance.
    pub center: bool,
    pub zero_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p_list: vec![5],
            n_list: vec![10_000],
            alpha_list: vec![0.01, 0.001, 0.0001],
            nbhd_list: None,
            trials: 100,
            master_seed: 0,
            methods: Learner::ALL.to_vec(),
            mode: Mode::Sample,
            threads: 0,
            sp_max_p: DEFAULT_MAX_P,
            center: false,
            zero_tol: TestConfig::default().zero_tol,
        }
    }
}

/// `{0.2, 0.5, 1, 1.5, 2, 3, ..., p-1}` truncated at `p - 1`.
pub fn default_nbhd_grid(p: usize) -> Vec<f64> {
    let max = p.saturating_sub(1) as f64;
    let mut grid: Vec<f64> = [0.2, 0.5, 1.0, 1.5, 2.0].into_iter().filter(|&x| x <= max).collect();
    grid.extend((3..p).map(|x| x as f64));
    grid
}

fn parse_list<T: FromStr>(key: &str, values: &[String]) -> Result<Vec<T>, String> {
    values
        .iter()
        .map(|v| v.parse::<T>().map_err(|_| format!("{key}: cannot parse `{v}`")))
        .collect()
}

fn single<T: FromStr>(key: &str, values: &[String]) -> Result<T, String> {
    match values {
        [v] => v.parse().map_err(|_| format!("{key}: cannot parse `{v}`")),
        _ => Err(format!("{key} takes a single value")),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines (lists comma-separated, `#` comments) or a
    /// JSON object with the same keys. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        if text.trim_start().starts_with('{') {
            let obj: serde_json::Map<String, Value> = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
            for (key, v) in obj {
                let items: Vec<String> = match v {
                    Value::Array(xs) => xs.iter().map(json_scalar).collect(),
                    other => vec![json_scalar(&other)],
                };
                cfg.apply(&key, &items)
                    .map_err(|message| HarnessError::Parse { line: 0, message })?;
            }
        } else {
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let err = |message: String| HarnessError::Parse { line: i + 1, message };
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
                let items: Vec<String> = value
                    .split(',')
                    .map(|s| s.trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect();
                cfg.apply(key.trim(), &items).map_err(err)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, v: &[String]) -> Result<(), String> {
        match key {
            "p" | "p_list" => self.p_list = parse_list(key, v)?,
            "n" | "n_list" => self.n_list = parse_list(key, v)?,
            "alpha" | "alpha_list" => self.alpha_list = parse_list(key, v)?,
            "nbhd" | "nbhd_list" => {
                self.nbhd_list = match v {
                    [] => None,
                    [d] if d == "default" || d == "null" => None,
                    _ => Some(parse_list(key, v)?),
                }
            }
            "trials" => self.trials = single(key, v)?,
            "seed" | "master_seed" => self.master_seed = single(key, v)?,
            "methods" => self.methods = parse_list(key, v)?,
            "mode" => self.mode = single(key, v)?,
            "threads" => self.threads = single(key, v)?,
            "max_p" | "sp_max_p" => self.sp_max_p = single(key, v)?,
            "center" => self.center = single(key, v)?,
            "zero_tol" => self.zero_tol = single(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.p_list.is_empty() || self.n_list.is_empty() || self.alpha_list.is_empty() {
            return bad("p, n and alpha lists must be non-empty".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| p < 2) {
            return bad(format!("p must be at least 2, got {p}"));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0) {
            return bad(format!("n must be positive, got {n}"));
        }
        if let Some(a) = self.alpha_list.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha must lie in (0,1), got {a}"));
        }
        if self.zero_tol.is_nan() || self.zero_tol <= 0.0 {
            return bad(format!("zero_tol must be positive, got {}", self.zero_tol));
        }
        if let Some(list) = &self.nbhd_list {
            for &p in &self.p_list {
                if let Some(x) = list.iter().find(|&&x| !(x > 0.0 && x <= (p - 1) as f64)) {
                    return bad(format!("nbhd {x} outside (0, {}] for p = {p}", p - 1));
                }
            }
        }
        Ok(())
    }

    pub fn nbhd_grid(&self, p: usize) -> Vec<f64> {
        self.nbhd_list.clone().unwrap_or_else(|| default_nbhd_grid(p))
    }

    /// Grid points in output order. Outside sample mode `n` and `alpha` do
    /// not affect the CI answers, so only the first entry of each is used.
    pub fn points(&self) -> Vec<TrialPoint> {
        let (ns, alphas) = match self.mode {
            Mode::Sample => (&self.n_list[..], &self.alpha_list[..]),
            _ => (&self.n_list[..1], &self.alpha_list[..1]),
        };
        let mut out = Vec::new();
        for &p in &self.p_list {
            for &n in ns {
                for &alpha in alphas {
                    for nbhd in self.nbhd_grid(p) {
                        out.push(TrialPoint { p, n, alpha, nbhd });
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p_list,
            "n": self.n_list,
            "alpha": self.alpha_list,
            "nbhd": match &self.nbhd_list {
                Some(l) => json!(l),
                None => json!("default {0.2, 0.5, 1, 1.5, 2, 3, ..., p-1}"),
            },
            "trials": self.trials,
            "seed": self.master_seed,
            "methods": self.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "mode": self.mode.name(),
            "max_p": self.sp_max_p,
            "center": self.center,
            "zero_tol": self.zero_tol,
        })
    }
}

fn json_scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialPoint {
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub nbhd: f64,
}

/// One learner on one simulated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub nbhd: f64,
    pub trial: usize,
    pub seed: u64,
    pub method: Learner,
    /// `ok`, or `skipped` with the reason in `detail`.
    pub status: &'static str,
    pub true_edges: usize,
    pub skeleton_recovered: bool,
    pub extra_edges: usize,
    pub missing_edges: usize,
    pub sp_unique_class: Option<bool>,
    pub sp_classes: Option<usize>,
    pub detail: String,
    /// Kept out of `trials.csv` so that file stays reproducible.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl TrialRecord {
    pub fn is_skipped(&self) -> bool {
        self.status == "skipped"
    }
}

/// Extra and missing edges of a set of output skeletons against the truth.
///
/// Extra edges are those in any output but not in the truth; missing edges
/// are those of the truth absent from some output. With several distinct
/// skeletons at least one of the two is positive.
pub fn score_skeletons(truth: &BTreeSet<Pair>, outputs: &[BTreeSet<Pair>]) -> (usize, usize) {
    let union: BTreeSet<Pair> = outputs.iter().flatten().copied().collect();
    let extra = union.difference(truth).count();
    let missing = truth.iter().filter(|e| outputs.iter().any(|s| !s.contains(e))).count();
    (extra, missing)
}

/// Generates the model for `(point, trial)`, builds the backend for the
/// configured mode and runs every configured method on it.
pub fn run_trial(cfg: &ExperimentConfig, point: &TrialPoint, trial: usize) -> Vec<TrialRecord> {
    let model_seed = derive_seed(cfg.master_seed, &[point.p as u64, point.nbhd.to_bits(), trial as u64]);
    let gen = GenConfig {
        p: point.p,
        expected_nbhd: point.nbhd,
        seed: model_seed,
        n: point.n,
        noise_var: 1.0,
    };
    let sem = random_sem(&gen, &mut rng_from_seed(model_seed));
    let truth = skeleton(sem.dag());
    let base = TrialRecord {
        p: point.p,
        n: point.n,
        alpha: point.alpha,
        nbhd: point.nbhd,
        trial,
        seed: model_seed,
        method: Learner::Sp,
        status: "ok",
        true_edges: truth.len(),
        skeleton_recovered: false,
        extra_edges: 0,
        missing_edges: 0,
        sp_unique_class: None,
        sp_classes: None,
        detail: String::new(),
        wall_time_ms: 0.0,
    };
    let skipped = |method: Learner, why: String| TrialRecord {
        method,
        status: "skipped",
        detail: why,
        ..base.clone()
    };

    let backend: Result<Box<dyn CiBackend>, String> = match cfg.mode {
        Mode::Oracle => Ok(Box::new(DsepBackend::new(sem.dag().clone()))),
        Mode::GaussianExact => covariance_of(&sem)
            .map_err(|e| e.to_string())
            .and_then(|sigma| {
                let tc = TestConfig::new(point.alpha, cfg.zero_tol).map_err(|e| e.to_string())?;
                GaussianExactBackend::new(sigma, tc).map_err(|e| e.to_string())
            })
            .map(|b| Box::new(b) as Box<dyn CiBackend>),
        Mode::Sample => {
            let data_seed = derive_seed(model_seed, &[point.n as u64]);
            let data = sample(&sem, point.n, &mut rng_from_seed(data_seed));
            TestConfig::new(point.alpha, cfg.zero_tol)
                .and_then(|tc| FisherZBackend::with_centering(&data, tc, cfg.center))
                .map(|b| Box::new(b) as Box<dyn CiBackend>)
                .map_err(|e| e.to_string())
        }
    };
    let backend = match backend {
        Ok(b) => CachedBackend::new(b),
        Err(why) => return cfg.methods.iter().map(|&m| skipped(m, why.clone())).collect(),
    };

    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome: Result<(Vec<BTreeSet<Pair>>, Option<usize>), String> = match method {
                Learner::Sp => {
                    let sp_cfg = SpConfig {
                        max_p: cfg.sp_max_p,
                        threads: 1,
                        ..SpConfig::default()
                    };
                    sp_search_with(&backend, &sp_cfg)
                        .map(|r| {
                            let skels: BTreeSet<BTreeSet<Pair>> =
                                r.classes.iter().map(|c| c.skeleton.clone()).collect();
                            (skels.into_iter().collect(), Some(r.classes.len()))
                        })
                        .map_err(|e| e.to_string())
                }
                Learner::Sgs | Learner::Pc => {
                    let m = if method == Learner::Sgs {
                        Method::Sgs
                    } else {
                        Method::Pc
                    };
                    run_baseline(m, &backend, DEFAULT_SGS_MAX_P)
                        .map(|r| (vec![r.pattern.skeleton], None))
                        .map_err(|e| e.to_string())
                }
            };
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Err(why) => skipped(method, why),
                Ok((skels, classes)) => {
                    let (extra, missing) = score_skeletons(&truth, &skels);
                    TrialRecord {
                        method,
                        skeleton_recovered: extra == 0 && missing == 0,
                        extra_edges: extra,
                        missing_edges: missing,
                        sp_unique_class: classes.map(|c| c == 1),
                        sp_classes: classes,
                        wall_time_ms: elapsed,
                        ..base.clone()
                    }
                }
            }
        })
        .collect()
}

/// Aggregate of one (grid point, method) cell over its non-skipped trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub nbhd: f64,
    pub method: Learner,
    pub trials: usize,
    pub skipped: usize,
    pub recovered: usize,
    pub with_extra: usize,
    pub with_missing: usize,
    pub failed: usize,
    pub mean_extra: f64,
    pub mean_missing: f64,
}

impl CellSummary {
    fn proportion(&self, count: usize) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            count as f64 / self.trials as f64
        }
    }

    pub fn recovery_rate(&self) -> f64 {
        self.proportion(self.recovered)
    }

    pub fn extra_rate(&self) -> f64 {
        self.proportion(self.with_extra)
    }

    pub fn missing_rate(&self) -> f64 {
        self.proportion(self.with_missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

/// Runs every (grid point, trial) pair in parallel and folds the records in
/// grid order.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridResult, HarnessError> {
    cfg.validate()?;
    let points = cfg.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..cfg.trials).map(move |t| (i, t)))
        .collect();
    let per_job = map_jobs(cfg.threads, jobs, |(i, t)| run_trial(cfg, &points[i], t));
    let records: Vec<TrialRecord> = per_job.into_iter().flatten().collect();

    let mut cells = Vec::new();
    for (i, point) in points.iter().enumerate() {
        let block = &records[i * cfg.trials * cfg.methods.len()..(i + 1) * cfg.trials * cfg.methods.len()];
        for &method in &cfg.methods {
            let rs: Vec<&TrialRecord> = block.iter().filter(|r| r.method == method && !r.is_skipped()).collect();
            let trials = rs.len();
            let mean = |f: fn(&TrialRecord) -> usize| {
                if trials == 0 {
                    0.0
                } else {
                    rs.iter().map(|r| f(r)).sum::<usize>() as f64 / trials as f64
                }
            };
            cells.push(CellSummary {
                p: point.p,
                n: point.n,
                alpha: point.alpha,
                nbhd: point.nbhd,
                method,
                trials,
                skipped: cfg.trials - trials,
                recovered: rs.iter().filter(|r| r.skeleton_recovered).count(),
                with_extra: rs.iter().filter(|r| r.extra_edges > 0).count(),
                with_missing: rs.iter().filter(|r| r.missing_edges > 0).count(),
                failed: rs.iter().filter(|r| r.extra_edges > 0 || r.missing_edges > 0).count(),
                mean_extra: mean(|r| r.extra_edges),
                mean_missing: mean(|r| r.missing_edges),
            });
        }
    }
    Ok(GridResult {
        config: cfg.clone(),
        records,
        cells,
    })
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

#[derive(Serialize)]
struct MetricRow {
    p: usize,
    n: usize,
    alpha: f64,
    nbhd: f64,
    method: Learner,
    metric: &'static str,
    count: usize,
    trials: usize,
    proportion: f64,
}

#[derive(Serialize)]
struct PlotRow {
    nbhd: f64,
    method: Learner,
    metric: &'static str,
    proportion: f64,
}

impl GridResult {
    /// Full per-trial records, one row per (grid point, trial, method).
    pub fn trials_csv(&self) -> Result<String, HarnessError> {
        csv_string(&self.records)
    }

    /// Long format: one row per cell, method and metric.
    pub fn cells_csv(&self) -> Result<String, HarnessError> {
        csv_string(self.cells.iter().flat_map(|c| {
            [
                ("recovered", c.recovered),
                ("extra", c.with_extra),
                ("missing", c.with_missing),
            ]
            .map(|(metric, count)| MetricRow {
                p: c.p,
                n: c.n,
                alpha: c.alpha,
                nbhd: c.nbhd,
                method: c.method,
                metric,
                count,
                trials: c.trials,
                proportion: c.proportion(count),
            })
        }))
    }

    pub fn timings_csv(&self) -> Result<String, HarnessError> {
        #[derive(Serialize)]
        struct Row {
            p: usize,
            n: usize,
            alpha: f64,
            nbhd: f64,
            trial: usize,
            method: Learner,
            wall_time_ms: f64,
        }
        csv_string(self.records.iter().map(|r| Row {
            p: r.p,
            n: r.n,
            alpha: r.alpha,
            nbhd: r.nbhd,
            trial: r.trial,
            method: r.method,
            wall_time_ms: r.wall_time_ms,
        }))
    }

    pub fn summary_json(&self) -> Value {
        let skipped = self.records.iter().filter(|r| r.is_skipped()).count();
        json!({
            "config": self.config.to_json(),
            "records": self.records.len(),
            "skipped_records": skipped,
            "cells": self.cells,
        })
    }

    /// Figure panels keyed by `(p, n, alpha)`: file name and CSV text with
    /// columns `nbhd, method, metric, proportion`.
    pub fn plot_data(&self) -> Result<Vec<(String, String)>, HarnessError> {
        let mut panels: Vec<(TrialPoint, Vec<&CellSummary>)> = Vec::new();
        for c in &self.cells {
            match panels
                .iter_mut()
                .find(|(k, _)| k.p == c.p && k.n == c.n && k.alpha == c.alpha)
            {
                Some((_, v)) => v.push(c),
                None => panels.push((
                    TrialPoint {
                        p: c.p,
                        n: c.n,
                        alpha: c.alpha,
                        nbhd: 0.0,
                    },
                    vec![c],
                )),
            }
        }
        panels
            .into_iter()
            .map(|(k, cells)| {
                let rows = cells.into_iter().flat_map(|c| {
                    [
                        ("recovered", c.recovery_rate()),
                        ("extra", c.extra_rate()),
                        ("missing", c.missing_rate()),
                    ]
                    .map(|(metric, proportion)| PlotRow {
                        nbhd: c.nbhd,
                        method: c.method,
                        metric,
                        proportion,
                    })
                });
                Ok((format!("fig_{}_{}_{}.csv", k.p, k.n, k.alpha), csv_string(rows)?))
            })
            .collect()
    }

    /// Writes `trials.csv`, `cells.csv`, `summary.json`, `timings.csv` and
    /// one `fig_<p>_<n>_<alpha>.csv` per panel.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<String>, HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let mut files = vec![
            ("trials.csv".to_owned(), self.trials_csv()?),
            ("cells.csv".to_owned(), self.cells_csv()?),
            (
                "summary.json".to_owned(),
                serde_json::to_string_pretty(&self.summary_json()).expect("plain data") + "\n",
            ),
            ("timings.csv".to_owned(), self.timings_csv()?),
        ];
        files.extend(self.plot_data()?);
        for (name, body) in &files {
            fs::write(dir.join(name), body).map_err(io)?;
        }
        Ok(files.into_iter().map(|(n, _)| n).collect())
    }
}
