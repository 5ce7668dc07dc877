//! Weighted similarity ELM.
//!
//! Hidden nodes are training samples ("anchors") and the hidden activation is
//! a similarity `s(x, anchor)`. Rows of the hidden matrix and their targets
//! are scaled by per-sample class weights so both classes carry the same
//! total weight in the least-squares fit.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::elm::{check_both_classes, check_hidden_pct, hidden_count};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{similarity, Kernel};
use crate::rng;
use crate::solver;
use crate::types::Label;

/// Per-sample imbalance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub gamma: Vec<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// `γᵢ = sqrt(max(n_pos, n_neg) / |class of yᵢ|)`; majority-class entries are 1.
pub fn class_weights(y: &[Label]) -> Result<ClassWeights> {
    let (n_pos, n_neg) = check_both_classes(y)?;
    let majority = n_pos.max(n_neg) as f64;
    let gp = (majority / n_pos as f64).sqrt();
    let gn = (majority / n_neg as f64).sqrt();
    let gamma = y
        .iter()
        .map(|l| match l {
            Label::Genuine => gp,
            Label::Impostor => gn,
        })
        .collect();
    Ok(ClassWeights { gamma, n_pos, n_neg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Class-imbalance weights γ.
    #[default]
    Balanced,
    /// All weights forced to 1.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelmParams {
    pub hidden_pct: f64,
    pub c: f64,
    pub kernel: Kernel,
    pub seed: u64,
    #[serde(default)]
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelmModel {
    /// Hidden-node vectors; each is a verbatim training row.
    pub anchors: Vec<Vec<f64>>,
    pub kernel: Kernel,
    pub beta: Vec<f64>,
    pub c: f64,
    pub threshold: f64,
    pub seed: u64,
    /// Requested hidden-node count when it exceeded the training-set size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped_from: Option<usize>,
}

pub fn welm_train<R: AsRef<[f64]>>(x: &[R], y: &[Label], params: &WelmParams) -> Result<WelmModel> {
    fit(x, y, params, false)
}

/// Shared trainer; `zero_norm_as_zero` selects the Siamese degenerate-cosine rule.
pub(crate) fn fit<R: AsRef<[f64]>>(
    x: &[R],
    y: &[Label],
    params: &WelmParams,
    zero_norm_as_zero: bool,
) -> Result<WelmModel> {
    check_dim(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::InsufficientData("WELM needs at least 2 training rows".into()));
    }
    check_hidden_pct(params.hidden_pct)?;
    if !params.kernel.is_similarity() {
        return Err(Error::InvalidArgument("WELM requires a cosine or euclidean similarity".into()));
    }
    let weights = class_weights(y)?;
    let n = x.len();
    let d = x[0].as_ref().len();
    for row in x {
        check_dim(d, row.as_ref().len())?;
    }

    let requested = hidden_count(params.hidden_pct, n);
    let (l, clamped_from) = if requested > n {
        log::info!("hidden nodes clamped from {requested} to {n} (anchors are training rows)");
        (n, Some(requested))
    } else {
        (requested, None)
    };

    let mut r = rng::substream(params.seed, rng::ANCHORS);
    let anchors: Vec<Vec<f64>> = index::sample(&mut r, n, l).into_iter().map(|i| x[i].as_ref().to_vec()).collect();

    let gamma = match params.weighting {
        Weighting::Balanced => weights.gamma,
        Weighting::Uniform => vec![1.0; n],
    };
    let mut h = DMatrix::<f64>::zeros(n, l);
    for (i, row) in x.iter().enumerate() {
        for (j, w) in anchors.iter().enumerate() {
            h[(i, j)] = gamma[i] * similarity(params.kernel, row.as_ref(), w, zero_norm_as_zero)?;
        }
    }
    let t = DVector::from_iterator(n, y.iter().zip(&gamma).map(|(l, g)| g * l.target()));
    let beta = solver::ridge(&h, &t, params.c)?;

    Ok(WelmModel {
        anchors,
        kernel: params.kernel,
        beta: beta.iter().copied().collect(),
        c: params.c,
        threshold: 0.0,
        seed: params.seed,
        clamped_from,
    })
}

impl WelmModel {
    pub fn hidden(&self) -> usize {
        self.anchors.len()
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.first().map_or(0, Vec::len)
    }

    /// `Σⱼ βⱼ · s(x, anchorⱼ)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.score(x, false)
    }

    pub(crate) fn score(&self, x: &[f64], zero_norm_as_zero: bool) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        let mut s = 0.0;
        for (w, b) in self.anchors.iter().zip(&self.beta) {
            s += b * similarity(self.kernel, x, w, zero_norm_as_zero)?;
        }
        Ok(s)
    }
}
