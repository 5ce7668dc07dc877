//! Standard single-hidden-layer ELM with random projections.
//!
//! Used as the non-Siamese baseline: a pair is fed as the concatenation of
//! its two embeddings, so the model sees `a‖b` and `b‖a` as different inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{generate_projection, Kernel, RandomProjection};
use crate::solver;
use crate::types::{Label, PairSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElmParams {
    /// Hidden nodes as a percentage of the training-set size, in (0, 100].
    pub hidden_pct: f64,
    pub c: f64,
    pub kernel: Kernel,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    pub projection: RandomProjection,
    pub kernel: Kernel,
    pub beta: Vec<f64>,
    pub c: f64,
    pub threshold: f64,
}

/// `max(1, round(pct/100 · n))`.
pub fn hidden_count(hidden_pct: f64, n: usize) -> usize {
    ((hidden_pct / 100.0 * n as f64).round() as usize).max(1)
}

pub(crate) fn check_hidden_pct(hidden_pct: f64) -> Result<()> {
    if hidden_pct > 0.0 && hidden_pct.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("hidden percentage must be positive, got {hidden_pct}")))
    }
}

pub(crate) fn check_both_classes(y: &[Label]) -> Result<(usize, usize)> {
    let pos = y.iter().filter(|&&l| l == Label::Genuine).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        Err(Error::SingleClass)
    } else {
        Ok((pos, neg))
    }
}

/// Trains an ELM on rows `x` with ±1 targets from `y`.
pub fn elm_train<R: AsRef<[f64]>>(x: &[R], y: &[Label], params: &ElmParams) -> Result<ElmModel> {
    check_dim(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::InsufficientData("ELM needs at least 2 training rows".into()));
    }
    check_both_classes(y)?;
    check_hidden_pct(params.hidden_pct)?;
    if params.kernel.is_similarity() {
        return Err(Error::InvalidArgument("ELM requires a sigmoid or rbf activation".into()));
    }
    let d = x[0].as_ref().len();
    let n = x.len();
    let l = hidden_count(params.hidden_pct, n);
    let projection = generate_projection(l, d, params.seed)?;

    let mut h = DMatrix::<f64>::zeros(n, l);
    for (i, row) in x.iter().enumerate() {
        let act = projection.activations(params.kernel, row.as_ref())?;
        for (j, v) in act.into_iter().enumerate() {
            h[(i, j)] = v;
        }
    }
    let t = DVector::from_iterator(n, y.iter().map(|l| l.target()));
    let beta = solver::ridge(&h, &t, params.c)?;

    Ok(ElmModel {
        projection,
        kernel: params.kernel,
        beta: beta.iter().copied().collect(),
        c: params.c,
        threshold: 0.0,
    })
}

impl ElmModel {
    pub fn input_dim(&self) -> usize {
        self.projection.input_dim()
    }

    /// `h(x)ᵀβ`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let h = self.projection.activations(self.kernel, x)?;
        Ok(h.iter().zip(&self.beta).map(|(a, b)| a * b).sum())
    }

    /// Scores the concatenated pair `a‖b`.
    pub fn predict_pair(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.predict(&concat(a, b))
    }
}

/// `a` followed by `b`.
pub fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

pub fn concat_pair(p: &PairSample) -> Vec<f64> {
    concat(&p.a, &p.b)
}
