//! Hidden-node activations and similarity functions, plus seeded random
//! projections for ELM hidden layers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;

/// Which function maps an input (and a hidden-node parameter) to an
/// activation.
///
/// `Sigmoid` and `Rbf` are ELM activations over random projections;
/// `Cosine` and `Euclidean` are WELM similarities against anchor samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Sigmoid,
    Rbf { gamma: f64 },
    Cosine,
    Euclidean,
}

impl Kernel {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Kernel::Rbf { gamma })
        } else {
            Err(Error::InvalidArgument(format!("rbf gamma must be positive, got {gamma}")))
        }
    }

    pub fn is_similarity(self) -> bool {
        matches!(self, Kernel::Cosine | Kernel::Euclidean)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Sigmoid => "sigmoid",
            Kernel::Rbf { .. } => "rbf",
            Kernel::Cosine => "cosine",
            Kernel::Euclidean => "euclidean",
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `aᵀb / (‖a‖‖b‖)`; undefined (error) when either norm is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Negated Euclidean distance, so larger means more similar.
pub fn euclidean_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(-squared_distance(a, b).sqrt())
}

/// `exp(−γ‖a − b‖²)`.
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok((-gamma * squared_distance(a, b)).exp())
}

/// Logistic activation of one random hidden node.
pub fn sigmoid_node(w: &[f64], bias: f64, x: &[f64]) -> Result<f64> {
    check_dim(w.len(), x.len())?;
    Ok(sigmoid(dot(w, x) + bias))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Similarity of `x` to anchor `w` under a similarity kernel.
///
/// With `zero_norm_as_zero`, a zero-norm operand under the cosine kernel
/// yields 0 instead of an error.
pub(crate) fn similarity(kernel: Kernel, x: &[f64], w: &[f64], zero_norm_as_zero: bool) -> Result<f64> {
    match kernel {
        Kernel::Cosine => match cosine_similarity(x, w) {
            Err(Error::ZeroNorm) if zero_norm_as_zero => Ok(0.0),
            other => other,
        },
        Kernel::Euclidean => euclidean_similarity(x, w),
        Kernel::Sigmoid | Kernel::Rbf { .. } => Err(Error::InvalidArgument(format!(
            "{} is an activation, not a similarity kernel",
            kernel.name()
        ))),
    }
}

/// Random input weights (one row per hidden node) and biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomProjection {
    /// `l` rows of length `d`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub seed: u64,
}

impl RandomProjection {
    pub fn hidden(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Hidden-layer row `h(x)` under the given activation.
    pub fn activations(&self, kernel: Kernel, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| match kernel {
                Kernel::Sigmoid => sigmoid_node(w, b, x),
                Kernel::Rbf { gamma } => rbf(w, x, gamma),
                _ => Err(Error::InvalidArgument(format!(
                    "{} is a similarity kernel, not an ELM activation",
                    kernel.name()
                ))),
            })
            .collect()
    }
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let v = rng.random::<f64>() * 2.0 - 1.0;
        if v > -1.0 {
            return v;
        }
    }
}

/// Draws `l × d` weights and `l` biases independently from uniform(−1, 1).
pub fn generate_projection(l: usize, d: usize, seed: u64) -> Result<RandomProjection> {
    if l == 0 || d == 0 {
        return Err(Error::InvalidArgument("projection needs l ≥ 1 and d ≥ 1".into()));
    }
    let mut r = rng::substream(seed, rng::PROJECTION);
    let weights = (0..l).map(|_| (0..d).map(|_| open_unit(&mut r)).collect()).collect();
    let biases = (0..l).map(|_| open_unit(&mut r)).collect();
    Ok(RandomProjection { weights, biases, seed })
}
