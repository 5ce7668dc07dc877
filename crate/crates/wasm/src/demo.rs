//! The computations behind the page, free of any JS types so they can be
//! tested natively.

use rand::Rng;
use wasm_bindgen::prelude::*;

use selm_core::data::{generate_synthetic_cohorts, make_pairs, samples, split_by_identity, PairOptions, SplitSpec, SyntheticConfig};
use selm_core::elm::{concat, elm_train, ElmParams};
use selm_core::eval::{accuracy, eer_threshold, roc_auc, roc_curve, ScoredPairs};
use selm_core::kernels::Kernel;
use selm_core::rng;
use selm_core::selm::{selm_train, SelmParams, SiameseCondition};
use selm_core::tuning::{calibrate, score_pairs, PairModel};
use selm_core::types::{Embedding, Label, PairSample};
use selm_core::welm::Weighting;
use selm_core::{Error, Result};

/// Scores of two models over a square grid of 1-D pairs `(a, b)`, row-major
/// with `a` along rows.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Surface {
    resolution: usize,
    selm: Vec<f64>,
    elm: Vec<f64>,
}

#[wasm_bindgen]
impl Surface {
    #[wasm_bindgen(getter)]
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[wasm_bindgen(getter)]
    pub fn selm(&self) -> Vec<f64> {
        self.selm.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn elm(&self) -> Vec<f64> {
        self.elm.clone()
    }

    /// Largest |s(a,b) − s(b,a)| of the Siamese model.
    #[wasm_bindgen(getter)]
    pub fn selm_asymmetry(&self) -> f64 {
        asymmetry(&self.selm, self.resolution)
    }

    #[wasm_bindgen(getter)]
    pub fn elm_asymmetry(&self) -> f64 {
        asymmetry(&self.elm, self.resolution)
    }
}

fn asymmetry(grid: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((grid[i * n + j] - grid[j * n + i]).abs());
        }
    }
    worst
}

pub const SURFACE_RANGE: f64 = 1.0;

pub fn parse_kernel(name: &str) -> Result<Kernel> {
    match name {
        "cosine" => Ok(Kernel::Cosine),
        "euclidean" => Ok(Kernel::Euclidean),
        _ => Err(Error::InvalidArgument(format!("unknown similarity kernel '{name}'"))),
    }
}

/// Scalar "identities" on [−1, 1]: genuine pairs are a point and a small
/// perturbation of it, impostors two independent points.
fn line_pairs(n: usize, seed: u64) -> Result<Vec<PairSample>> {
    let mut r = rng::substream(seed, rng::PAIRS);
    (0..n)
        .map(|i| {
            let a = r.random_range(-SURFACE_RANGE..SURFACE_RANGE);
            let (b, label) = if i % 2 == 0 {
                ((a + r.random_range(-0.1..0.1)).clamp(-SURFACE_RANGE, SURFACE_RANGE), Label::Genuine)
            } else {
                (r.random_range(-SURFACE_RANGE..SURFACE_RANGE), Label::Impostor)
            };
            PairSample::new(Embedding::new(vec![a])?, Embedding::new(vec![b])?, label)
        })
        .collect()
}

/// Trains a SELM and an ELM on concatenated pairs from the same 1-D data and
/// evaluates both on a `resolution × resolution` grid.
pub fn pair_surface(condition: SiameseCondition, kernel: Kernel, resolution: usize, seed: u64) -> Result<Surface> {
    if !(2..=256).contains(&resolution) {
        return Err(Error::InvalidArgument(format!("resolution must lie in 2..=256, got {resolution}")));
    }
    let pairs = line_pairs(200, seed)?;
    let selm = selm_train(
        &pairs,
        &SelmParams { hidden_pct: 30.0, c: 10.0, condition, kernel, seed, weighting: Weighting::Balanced },
    )?;
    let x: Vec<Vec<f64>> = pairs.iter().map(|p| concat(&p.a, &p.b)).collect();
    let y: Vec<Label> = pairs.iter().map(|p| p.label).collect();
    let elm = elm_train(&x, &y, &ElmParams { hidden_pct: 30.0, c: 10.0, kernel: Kernel::Sigmoid, seed })?;

    let at = |k: usize| -SURFACE_RANGE + 2.0 * SURFACE_RANGE * k as f64 / (resolution - 1) as f64;
    let mut out = Surface { resolution, selm: Vec::new(), elm: Vec::new() };
    for i in 0..resolution {
        for j in 0..resolution {
            let (a, b) = ([at(i)], [at(j)]);
            out.selm.push(selm.predict(&a, &b)?);
            out.elm.push(elm.predict_pair(&a, &b)?);
        }
    }
    Ok(out)
}

/// ROC curve of one verifier on held-out synthetic pairs.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Roc {
    far: Vec<f64>,
    tpr: Vec<f64>,
    auc: f64,
    eer: f64,
    theta: f64,
    accuracy: f64,
}

#[wasm_bindgen]
impl Roc {
    #[wasm_bindgen(getter)]
    pub fn far(&self) -> Vec<f64> {
        self.far.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn tpr(&self) -> Vec<f64> {
        self.tpr.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn auc(&self) -> f64 {
        self.auc
    }

    #[wasm_bindgen(getter)]
    pub fn eer(&self) -> f64 {
        self.eer
    }

    /// Threshold calibrated on validation pairs.
    #[wasm_bindgen(getter)]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Test accuracy at `theta`.
    #[wasm_bindgen(getter)]
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
}

fn roc_of(sp: &ScoredPairs, theta: f64) -> Result<Roc> {
    let (far, tpr) = roc_curve(sp)?.into_iter().unzip();
    Ok(Roc { far, tpr, auc: roc_auc(sp)?, eer: eer_threshold(sp)?.eer, theta, accuracy: accuracy(sp, theta)? })
}

/// Test ROC of a SELM (`condition` given) or, with `condition = None`, of the
/// plain distance baseline, on a six-cohort synthetic population whose pose
/// noise is `noise` (identity spread is 1).
pub fn roc_demo(noise: f64, condition: Option<SiameseCondition>, hidden_pct: f64, seed: u64) -> Result<Roc> {
    let data = generate_synthetic_cohorts(&SyntheticConfig { pose_noise: noise, seed, ..SyntheticConfig::default() })?;
    let split = split_by_identity(&data, &SplitSpec { seed, ..SplitSpec::default() })?;
    let pairs = |part, name: &str| -> Result<Vec<PairSample>> {
        let opts = PairOptions { seed: rng::derive_seed(seed, name), ..PairOptions::default() };
        Ok(samples(&make_pairs(part, &opts)?))
    };
    let (train, val, test) = (pairs(&split.train, "train")?, pairs(&split.validation, "validation")?, pairs(&split.test, "test")?);
    let mut model = match condition {
        Some(condition) => PairModel::Selm(selm_train(
            &train,
            &SelmParams { hidden_pct, c: 1.0, condition, kernel: Kernel::Euclidean, seed, weighting: Weighting::Balanced },
        )?),
        None => PairModel::Distance { threshold: 0.0 },
    };
    calibrate(&mut model, &val)?;
    roc_of(&score_pairs(&model, &test)?, model.threshold())
}
