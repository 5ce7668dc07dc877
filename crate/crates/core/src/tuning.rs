//! Pair-verifier families, threshold calibration and grid search.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elm::{concat, concat_pair, elm_train, ElmModel, ElmParams};
use crate::error::{Error, Result};
use crate::eval::{accuracy, cohort_report, eer_threshold, finite_threshold, roc_auc, EerPoint, EvalReport, ScoredPairs};
use crate::kernels::{euclidean_similarity, Kernel};
use crate::selm::{selm_train, SelmModel, SelmParams, SiameseCondition};
use crate::types::{Label, PairRecord, PairSample};
use crate::welm::{welm_train, WelmModel, WelmParams, Weighting};

/// A way of scoring a pair of embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method", content = "condition")]
pub enum Method {
    /// Negative Euclidean distance; only the threshold is learned.
    Distance,
    /// ELM on the concatenation `a‖b`.
    Elm,
    /// WELM on the concatenation `a‖b`.
    WelmConcat,
    Selm(SiameseCondition),
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Distance => "distance".into(),
            Method::Elm => "elm".into(),
            Method::WelmConcat => "welm-concat".into(),
            Method::Selm(c) => format!("selm-{c}"),
        }
    }

    /// Whether hidden-node count and C matter for this method.
    pub fn is_trainable(self) -> bool {
        self != Method::Distance
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(Method::Distance),
            "elm" => Ok(Method::Elm),
            "welm-concat" | "welm" => Ok(Method::WelmConcat),
            _ => match s.strip_prefix("selm-") {
                Some(c) => Ok(Method::Selm(c.parse()?)),
                None => Err(Error::InvalidArgument(format!("unknown method '{s}'"))),
            },
        }
    }
}

/// A trained pair verifier with its decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PairModel {
    Distance { threshold: f64 },
    Elm(ElmModel),
    WelmConcat(WelmModel),
    Selm(SelmModel),
}

impl PairModel {
    pub fn score(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            PairModel::Distance { .. } => euclidean_similarity(a, b),
            PairModel::Elm(m) => m.predict_pair(a, b),
            PairModel::WelmConcat(m) => m.predict(&concat(a, b)),
            PairModel::Selm(m) => m.predict(a, b),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            PairModel::Distance { threshold } => *threshold,
            PairModel::Elm(m) => m.threshold,
            PairModel::WelmConcat(m) => m.threshold,
            PairModel::Selm(m) => m.backbone.threshold,
        }
    }

    pub fn set_threshold(&mut self, theta: f64) {
        match self {
            PairModel::Distance { threshold } => *threshold = theta,
            PairModel::Elm(m) => m.threshold = theta,
            PairModel::WelmConcat(m) => m.threshold = theta,
            PairModel::Selm(m) => m.backbone.threshold = theta,
        }
    }

    pub fn decide(&self, a: &[f64], b: &[f64]) -> Result<Label> {
        Ok(Label::from_decision(self.score(a, b)? >= self.threshold()))
    }

    pub fn method(&self) -> Method {
        match self {
            PairModel::Distance { .. } => Method::Distance,
            PairModel::Elm(_) => Method::Elm,
            PairModel::WelmConcat(_) => Method::WelmConcat,
            PairModel::Selm(m) => Method::Selm(m.condition),
        }
    }
}

/// One hyperparameter setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub hidden_pct: f64,
    pub kernel: Kernel,
}

/// Cartesian hyperparameter grid. `rbf_gamma` only expands the grid when the
/// base kernel is RBF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c: Vec<f64>,
    pub hidden_pct: Vec<f64>,
    pub rbf_gamma: Vec<f64>,
}

/// `10^lo, 10^(lo+1), …, 10^hi`.
pub fn decades(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c: decades(-6, 6),
            hidden_pct: (1..=10).map(|i| 10.0 * i as f64).collect(),
            rbf_gamma: decades(-6, 6),
        }
    }
}

impl GridSpec {
    pub fn single(c: f64, hidden_pct: f64) -> Self {
        Self { c: vec![c], hidden_pct: vec![hidden_pct], rbf_gamma: vec![1.0] }
    }

    /// Points in C-major, then hidden, then gamma order.
    pub fn points(&self, kernel: Kernel) -> Vec<GridPoint> {
        let kernels: Vec<Kernel> = match kernel {
            Kernel::Rbf { .. } => self.rbf_gamma.iter().map(|&gamma| Kernel::Rbf { gamma }).collect(),
            k => vec![k],
        };
        let mut out = Vec::new();
        for &c in &self.c {
            for &hidden_pct in &self.hidden_pct {
                for &kernel in &kernels {
                    out.push(GridPoint { c, hidden_pct, kernel });
                }
            }
        }
        out
    }
}

pub fn train_pair_model(
    method: Method,
    pairs: &[PairSample],
    point: &GridPoint,
    seed: u64,
    weighting: Weighting,
) -> Result<PairModel> {
    let labels: Vec<Label> = pairs.iter().map(|p| p.label).collect();
    Ok(match method {
        Method::Distance => PairModel::Distance { threshold: 0.0 },
        Method::Elm => {
            let x: Vec<Vec<f64>> = pairs.iter().map(concat_pair).collect();
            let p = ElmParams { hidden_pct: point.hidden_pct, c: point.c, kernel: point.kernel, seed };
            PairModel::Elm(elm_train(&x, &labels, &p)?)
        }
        Method::WelmConcat => {
            let x: Vec<Vec<f64>> = pairs.iter().map(concat_pair).collect();
            let p = WelmParams { hidden_pct: point.hidden_pct, c: point.c, kernel: point.kernel, seed, weighting };
            PairModel::WelmConcat(welm_train(&x, &labels, &p)?)
        }
        Method::Selm(condition) => {
            let p = SelmParams {
                hidden_pct: point.hidden_pct,
                c: point.c,
                condition,
                kernel: point.kernel,
                seed,
                weighting,
            };
            PairModel::Selm(selm_train(pairs, &p)?)
        }
    })
}

pub fn score_pairs(model: &PairModel, pairs: &[PairSample]) -> Result<ScoredPairs> {
    let scores = pairs.iter().map(|p| model.score(&p.a, &p.b)).collect::<Result<Vec<_>>>()?;
    ScoredPairs::new(scores, pairs.iter().map(|p| p.label).collect())
}

/// Per-cohort test metrics of a calibrated model at its own threshold.
pub fn report_pairs(model: &PairModel, pairs: &[PairRecord]) -> Result<EvalReport> {
    let scores = pairs.iter().map(|p| model.score(&p.sample.a, &p.sample.b)).collect::<Result<Vec<_>>>()?;
    cohort_report(pairs, &scores, model.threshold())
}

/// Finite EER threshold of a score set.
pub fn eer_calibrated_threshold(sp: &ScoredPairs) -> Result<(f64, EerPoint)> {
    let point = eer_threshold(sp)?;
    Ok((finite_threshold(sp, point.theta), point))
}

/// Sets the model threshold to the EER point of its scores on `validation`.
pub fn calibrate(model: &mut PairModel, validation: &[PairSample]) -> Result<EerPoint> {
    let sp = score_pairs(model, validation)?;
    let (theta, point) = eer_calibrated_threshold(&sp)?;
    model.set_threshold(theta);
    Ok(point)
}

/// Validation metrics of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub point: GridPoint,
    pub accuracy: f64,
    pub auc: f64,
    pub eer: f64,
    pub theta: f64,
}

impl TuningRow {
    pub const CSV_HEADER: &'static str = "c,hidden_pct,kernel,gamma,accuracy,auc,eer,theta";

    pub fn to_csv(&self) -> String {
        let gamma = match self.point.kernel {
            Kernel::Rbf { gamma } => gamma.to_string(),
            _ => String::new(),
        };
        format!(
            "{},{},{},{gamma},{},{},{},{}",
            self.point.c,
            self.point.hidden_pct,
            self.point.kernel.name(),
            self.accuracy,
            self.auc,
            self.eer,
            self.theta
        )
    }
}

#[derive(Debug, Clone)]
pub struct TuningOutcome {
    pub best: PairModel,
    pub best_index: usize,
    pub rows: Vec<TuningRow>,
}

impl TuningOutcome {
    pub fn log_csv(&self) -> String {
        let mut s = format!("{}\n", TuningRow::CSV_HEADER);
        for r in &self.rows {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }
}

/// Trains one model per grid point, calibrates each at its validation EER and
/// keeps the most accurate; ties go to the earliest grid point.
pub fn tune(
    method: Method,
    kernel: Kernel,
    train: &[PairSample],
    validation: &[PairSample],
    grid: &GridSpec,
    seed: u64,
    weighting: Weighting,
) -> Result<TuningOutcome> {
    let points = if method.is_trainable() {
        grid.points(kernel)
    } else {
        vec![GridPoint { c: 1.0, hidden_pct: 100.0, kernel }]
    };
    if points.is_empty() {
        return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
    }
    let results: Vec<(PairModel, TuningRow)> = points
        .par_iter()
        .map(|point| {
            let mut model = train_pair_model(method, train, point, seed, weighting)?;
            let eer = calibrate(&mut model, validation)?;
            let sp = score_pairs(&model, validation)?;
            let row = TuningRow {
                point: *point,
                accuracy: accuracy(&sp, model.threshold())?,
                auc: roc_auc(&sp)?,
                eer: eer.eer,
                theta: model.threshold(),
            };
            Ok((model, row))
        })
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, (_, r)) in results.iter().enumerate() {
        if r.accuracy > results[best_index].1.accuracy {
            best_index = i;
        }
    }
    let rows = results.iter().map(|(_, r)| *r).collect();
    let best = results.into_iter().nth(best_index).map(|(m, _)| m).expect("non-empty grid");
    Ok(TuningOutcome { best, best_index, rows })
}
