//! Nearest-neighbour motion recognition across reference contexts, with a
//! grid search for the measure parameters on a training split.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::TrajectoryRecord;
use crate::descriptor::{isa_sequence, DescriptorParams, IsaInvariants};
use crate::error::{BiltsError, Result};
use crate::reparam::{self, ProgressType, ReparamConfig};
use crate::similarity::{self, PreparedSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Bilts,
    BiltsPlus,
    Isa,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::Bilts => "bilts",
            Measure::BiltsPlus => "bilts+",
            Measure::Isa => "isa",
        }
    }

    fn regularize(&self) -> bool {
        matches!(self, Measure::BiltsPlus)
    }
}

/// Progress variable used before comparison; the screw path takes its length
/// scale from the measure parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressKind {
    Arclength,
    Angle,
    ScrewPath,
}

impl ProgressKind {
    pub fn with_scale(&self, l: f64) -> ProgressType {
        match self {
            ProgressKind::Arclength => ProgressType::Arclength,
            ProgressKind::Angle => ProgressType::Angle,
            ProgressKind::ScrewPath => ProgressType::ScrewPath { l },
        }
    }
}

/// One point of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    pub l: f64,
    pub xi: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionConfig {
    pub measure: Measure,
    pub progress: ProgressKind,
    pub n_out: usize,
    pub sigma: f64,
    pub band: Option<usize>,
    pub reference_context: String,
    /// Leading trials per non-reference context used for tuning.
    pub train_trials: usize,
    pub l_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Progress window used to estimate invariants for the screw-axis measure.
    pub isa_xi: f64,
}

pub const DEFAULT_L_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const DEFAULT_XI_GRID_LENGTH: [f64; 4] = [0.03, 0.06, 0.12, 0.15];
pub const DEFAULT_XI_GRID_ANGLE_DEG: [f64; 3] = [10.0, 20.0, 30.0];
pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

impl RecognitionConfig {
    pub fn new(measure: Measure, progress: ProgressKind, reference_context: impl Into<String>) -> Self {
        let xi_grid = match progress {
            ProgressKind::Angle => DEFAULT_XI_GRID_ANGLE_DEG.iter().map(|d| d.to_radians()).collect(),
            _ => DEFAULT_XI_GRID_LENGTH.to_vec(),
        };
        RecognitionConfig {
            measure,
            progress,
            n_out: reparam::DEFAULT_N_OUT,
            sigma: reparam::DEFAULT_SIGMA,
            band: None,
            reference_context: reference_context.into(),
            train_trials: 2,
            l_grid: DEFAULT_L_GRID.to_vec(),
            isa_xi: xi_grid[0],
            xi_grid,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
        }
    }

    /// Grid points in tie-break order: ascending `l`, then ascending window
    /// (or `lambda` for the screw-axis measure).
    pub fn grid(&self) -> Vec<MeasureParams> {
        let mut ls = self.l_grid.clone();
        ls.sort_by(f64::total_cmp);
        let mut second = if self.measure == Measure::Isa { self.lambda_grid.clone() } else { self.xi_grid.clone() };
        second.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for &l in &ls {
            for &v in &second {
                out.push(match self.measure {
                    Measure::Isa => MeasureParams { l, xi: self.isa_xi, lambda: v },
                    _ => MeasureParams { l, xi: v, lambda: 0.0 },
                });
            }
        }
        out
    }

    pub fn default_params(&self) -> MeasureParams {
        let l = self.l_grid.get(self.l_grid.len() / 2).copied().unwrap_or(0.5);
        match self.measure {
            Measure::Isa => MeasureParams { l, xi: self.isa_xi, lambda: 1.0 },
            _ => MeasureParams { l, xi: self.xi_grid.first().copied().unwrap_or(0.06), lambda: 0.0 },
        }
    }
}

/// Records divided into references, a tuning split and a test split.
#[derive(Debug, Clone)]
pub struct Split<'a> {
    pub references: Vec<&'a TrajectoryRecord>,
    pub train: Vec<&'a TrajectoryRecord>,
    pub test: Vec<&'a TrajectoryRecord>,
}

pub fn split_dataset<'a>(records: &'a [TrajectoryRecord], reference_context: &str, train_trials: usize) -> Result<Split<'a>> {
    let references: Vec<_> = records.iter().filter(|r| r.context == reference_context).collect();
    if references.is_empty() {
        let mut known: Vec<&str> = records.iter().map(|r| r.context.as_str()).collect();
        known.sort_unstable();
        known.dedup();
        return Err(BiltsError::Protocol(format!(
            "reference context {reference_context:?} not found; available: {}",
            known.join(", ")
        )));
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&TrajectoryRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.context != reference_context) {
        groups.entry((r.class.as_str(), r.context.as_str())).or_default().push(r);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut g) in groups {
        g.sort_by_key(|r| r.trial);
        for (i, r) in g.into_iter().enumerate() {
            if i < train_trials { train.push(r) } else { test.push(r) }
        }
    }
    Ok(Split { references, train, test })
}

/// Comparable form of one record for a given parameter point.
struct Prepared {
    seq: PreparedSequence,
    isa: Option<Vec<IsaInvariants>>,
}

fn prepare(record: &TrajectoryRecord, cfg: &RecognitionConfig, p: &MeasureParams) -> Result<Prepared> {
    let rc = ReparamConfig {
        progress: cfg.progress.with_scale(p.l),
        n_out: cfg.n_out,
        sigma: cfg.sigma,
    };
    let geo = reparam::preprocess(&record.temporal()?, &rc)?;
    let dp = DescriptorParams { l: p.l, xi: p.xi, regularize: cfg.measure.regularize() };
    let seq = PreparedSequence::from_trajectory(&geo, &dp)?;
    let isa = match cfg.measure {
        Measure::Isa => Some(isa_sequence(&seq.sequence)?),
        _ => None,
    };
    Ok(Prepared { seq, isa })
}

fn prepare_all(records: &[&TrajectoryRecord], cfg: &RecognitionConfig, p: &MeasureParams) -> Vec<Result<Prepared>> {
    records.par_iter().map(|r| prepare(r, cfg, p)).collect()
}

fn pair_distance(a: &Prepared, b: &Prepared, cfg: &RecognitionConfig, p: &MeasureParams) -> Result<f64> {
    match cfg.measure {
        Measure::Bilts => similarity::prepared_distance(&a.seq, &b.seq, p.l, false, cfg.band),
        Measure::BiltsPlus => similarity::prepared_distance(&a.seq, &b.seq, p.l, true, cfg.band),
        Measure::Isa => similarity::isa_distance(
            &a.seq,
            a.isa.as_deref().unwrap_or_default(),
            &b.seq,
            b.isa.as_deref().unwrap_or_default(),
            p.l,
            p.lambda,
            cfg.band,
        ),
    }
}

/// Index and distance of the nearest reference. Failed comparisons count as
/// infinitely far; ties go to the lowest index.
fn nearest(query: &Result<Prepared>, refs: &[Result<Prepared>], cfg: &RecognitionConfig, p: &MeasureParams, label: &str) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, r) in refs.iter().enumerate() {
        let d = match (query, r) {
            (Ok(q), Ok(r)) => pair_distance(q, r, cfg, p),
            (Err(e), _) | (_, Err(e)) => Err(BiltsError::invalid(e.to_string())),
        };
        let d = match d {
            Ok(d) if d.is_finite() => d,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                log::warn!("{label} vs reference {i}: {e}; treated as infinitely distant");
                f64::INFINITY
            }
        };
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Outcome of one test trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub id: String,
    pub class: String,
    pub context: String,
    pub trial: usize,
    pub predicted: String,
    pub nearest_reference: String,
    /// `None` when every comparison failed.
    pub distance: Option<f64>,
}

/// Recognition rate of one grid point on the tuning split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: MeasureParams,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub library_version: String,
    pub measure: Measure,
    pub progress: ProgressKind,
    pub reference_context: String,
    pub params: MeasureParams,
    pub rate: f64,
    /// Class labels indexing the confusion matrix.
    pub labels: Vec<String>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub trials: Vec<TrialResult>,
    pub grid: Vec<GridPoint>,
    pub seed: Option<u64>,
}

impl RecognitionReport {
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(l);
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn classify(
    queries: &[&TrajectoryRecord],
    references: &[&TrajectoryRecord],
    cfg: &RecognitionConfig,
    p: &MeasureParams,
) -> Vec<TrialResult> {
    let refs = prepare_all(references, cfg, p);
    let qs = prepare_all(queries, cfg, p);
    queries
        .par_iter()
        .zip(qs.par_iter())
        .map(|(rec, q)| {
            let (i, d) = nearest(q, &refs, cfg, p, &rec.id());
            TrialResult {
                id: rec.id(),
                class: rec.class.clone(),
                context: rec.context.clone(),
                trial: rec.trial,
                predicted: references[i].class.clone(),
                nearest_reference: references[i].id(),
                distance: d.is_finite().then_some(d),
            }
        })
        .collect()
}

fn rate(results: &[TrialResult]) -> f64 {
    let ok = results.iter().filter(|r| r.class == r.predicted).count();
    ok as f64 / results.len() as f64
}

/// Recognition rate for every grid point and the best one, preferring the
/// earliest point in [`RecognitionConfig::grid`] order on ties.
pub fn grid_search(
    train: &[&TrajectoryRecord],
    references: &[&TrajectoryRecord],
    cfg: &RecognitionConfig,
) -> Result<(MeasureParams, Vec<GridPoint>)> {
    if train.is_empty() {
        return Err(BiltsError::Protocol("empty training split".into()));
    }
    let grid = cfg.grid();
    if grid.is_empty() {
        return Err(BiltsError::invalid("empty parameter grid"));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut best: Option<GridPoint> = None;
    for p in grid {
        let gp = GridPoint { params: p, rate: rate(&classify(train, references, cfg, &p)) };
        log::info!("grid l = {} xi = {} lambda = {}: rate {:.4}", p.l, p.xi, p.lambda, gp.rate);
        if best.is_none_or(|b| gp.rate > b.rate) {
            best = Some(gp);
        }
        points.push(gp);
    }
    Ok((best.unwrap().params, points))
}

/// Classifies the test records against the references.
pub fn evaluate(
    test: &[&TrajectoryRecord],
    references: &[&TrajectoryRecord],
    cfg: &RecognitionConfig,
    params: &MeasureParams,
) -> Result<RecognitionReport> {
    if test.is_empty() {
        return Err(BiltsError::Protocol("empty test split".into()));
    }
    if references.is_empty() {
        return Err(BiltsError::Protocol("no reference trajectories".into()));
    }
    let trials = classify(test, references, cfg, params);
    let mut labels: Vec<String> = references.iter().chain(test).map(|r| r.class.clone()).collect();
    labels.sort();
    labels.dedup();
    let pos = |l: &str| labels.iter().position(|x| x == l).unwrap();
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for t in &trials {
        confusion[pos(&t.class)][pos(&t.predicted)] += 1;
    }
    Ok(RecognitionReport {
        library_version: crate::VERSION.into(),
        measure: cfg.measure,
        progress: cfg.progress,
        reference_context: cfg.reference_context.clone(),
        params: *params,
        rate: rate(&trials),
        labels,
        confusion,
        trials,
        grid: Vec::new(),
        seed: None,
    })
}

/// Full protocol: split, optional tuning, evaluation.
pub fn run(records: &[TrajectoryRecord], cfg: &RecognitionConfig, tune: bool, params: Option<MeasureParams>) -> Result<RecognitionReport> {
    let split = split_dataset(records, &cfg.reference_context, cfg.train_trials)?;
    if split.test.is_empty() {
        return Err(BiltsError::Protocol("empty test split".into()));
    }
    let (params, grid) = if tune {
        grid_search(&split.train, &split.references, cfg)?
    } else {
        (params.unwrap_or_else(|| cfg.default_params()), Vec::new())
    };
    let mut report = evaluate(&split.test, &split.references, cfg, &params)?;
    report.grid = grid;
    let seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    if seeds.windows(2).all(|w| w[0] == w[1]) {
        report.seed = seeds.first().copied();
    }
    Ok(report)
}
