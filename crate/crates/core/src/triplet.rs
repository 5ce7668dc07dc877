//! Shared-weight triplet embedder trained with the hinge loss
//! `[d_p − d_n + α]₊`, and cohort-scoped registries of such embedders.
//!
//! The backbone is a small tanh feed-forward net: hidden layers use `tanh`,
//! the output layer is linear. Inputs are standardised with per-feature
//! statistics of the training slice before the first layer.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::types::{Cohort, Gender, IdentityRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletNet {
    pub layers: Vec<Layer>,
    /// Input standardisation: `(x − shift) / scale`.
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl TripletNet {
    /// Randomly initialised net with the given layer sizes
    /// `[d_in, hidden…, d_out]`; weights uniform(±1/√fan_in), biases zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer sizes {sizes:?}")));
        }
        let mut r = rng::substream(seed, rng::INIT);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| r.random_range(-bound..bound)).collect(),
                    biases: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(Self { layers, shift: vec![0.0; sizes[0]], scale: vec![1.0; sizes[0]] })
    }

    /// Linear identity map on `d` features.
    pub fn identity(d: usize) -> Self {
        let mut weights = vec![0.0; d * d];
        for i in 0..d {
            weights[i * d + i] = 1.0;
        }
        Self {
            layers: vec![Layer { inputs: d, outputs: d, weights, biases: vec![0.0; d] }],
            shift: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.shift.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    /// Activations of every layer, starting with the standardised input.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.iter().zip(&self.shift).zip(&self.scale).map(|((v, s), c)| (v - s) / c).collect::<Vec<_>>());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.apply(&acts[k], &mut out);
            if k != last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        acts
    }

    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.trace(x).pop().unwrap_or_default())
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Flat parameter vector: per layer, weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_parameters());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        check_dim(self.num_parameters(), p.len())?;
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Accumulates `∂(upstreamᵀ·out)/∂θ` into `grad` given a forward trace.
    fn backward(&self, acts: &[Vec<f64>], upstream: &[f64], grad: &mut [f64]) {
        let offsets = self.layer_offsets();
        let last = self.layers.len() - 1;
        let mut delta = upstream.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if k != last {
                for (d, a) in delta.iter_mut().zip(&acts[k + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let input = &acts[k];
            let off = offsets[k];
            for o in 0..layer.outputs {
                let row = &mut grad[off + o * layer.inputs..off + (o + 1) * layer.inputs];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += delta[o] * v;
                }
                grad[off + layer.weights.len() + o] += delta[o];
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * delta[o];
                    }
                }
                delta = prev;
            }
        }
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.layers
            .iter()
            .map(|l| {
                let here = off;
                off += l.weights.len() + l.biases.len();
                here
            })
            .collect()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared embedding distances `(‖f(x) − f(x⁺)‖², ‖f(x) − f(x⁻)‖²)`,
/// computed through one shared net.
pub fn triplet_distances(net: &TripletNet, x: &[f64], x_pos: &[f64], x_neg: &[f64]) -> Result<(f64, f64)> {
    let e = net.embed(x)?;
    let ep = net.embed(x_pos)?;
    let en = net.embed(x_neg)?;
    Ok((squared_distance(&e, &ep), squared_distance(&e, &en)))
}

/// `max(0, d_p − d_n + α)`.
pub fn triplet_loss(d_p: f64, d_n: f64, alpha: f64) -> f64 {
    (d_p - d_n + alpha).max(0.0)
}

/// Anchor, positive and negative inputs.
#[derive(Debug, Clone, Copy)]
pub struct Triplet<'a> {
    pub anchor: &'a [f64],
    pub positive: &'a [f64],
    pub negative: &'a [f64],
}

pub fn mean_triplet_loss(net: &TripletNet, batch: &[Triplet<'_>], alpha: f64) -> Result<f64> {
    let mut total = 0.0;
    for t in batch {
        let (dp, dn) = triplet_distances(net, t.anchor, t.positive, t.negative)?;
        total += triplet_loss(dp, dn, alpha);
    }
    Ok(total / batch.len().max(1) as f64)
}

/// Mean loss over `batch` and its gradient w.r.t. [`TripletNet::parameters`].
/// The hinge is treated as inactive exactly at the kink.
pub fn loss_and_gradient(net: &TripletNet, batch: &[Triplet<'_>], alpha: f64) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; net.num_parameters()];
    let mut total = 0.0;
    for t in batch {
        for v in [t.anchor, t.positive, t.negative] {
            check_dim(net.input_dim(), v.len())?;
        }
        let ta = net.trace(t.anchor);
        let tp = net.trace(t.positive);
        let tn = net.trace(t.negative);
        let (ea, ep, en) = (ta.last().unwrap(), tp.last().unwrap(), tn.last().unwrap());
        let loss = squared_distance(ea, ep) - squared_distance(ea, en) + alpha;
        if loss <= 0.0 {
            continue;
        }
        total += loss;
        let ga: Vec<f64> = ep.iter().zip(en).map(|(p, n)| 2.0 * (n - p)).collect();
        let gp: Vec<f64> = ea.iter().zip(ep).map(|(a, p)| -2.0 * (a - p)).collect();
        let gn: Vec<f64> = ea.iter().zip(en).map(|(a, n)| 2.0 * (a - n)).collect();
        net.backward(&ta, &ga, &mut grad);
        net.backward(&tp, &gp, &mut grad);
        net.backward(&tn, &gn, &mut grad);
    }
    let n = batch.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletConfig {
    /// Soft margin α ≥ 0.
    pub alpha: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub out_dim: usize,
    pub seed: u64,
}

impl Default for TripletConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 200,
            batch_size: 16,
            hidden: vec![32, 32],
            out_dim: 8,
            seed: 0,
        }
    }
}

impl TripletConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidArgument("triplet margin must be ≥ 0".into()));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.out_dim == 0 {
            return Err(Error::InvalidArgument("learning rate, batch size and output dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

fn eligible(dataset: &[IdentityRecord]) -> Result<Vec<&IdentityRecord>> {
    let ids: Vec<&IdentityRecord> = dataset.iter().filter(|r| r.poses.len() >= 2).collect();
    if ids.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "triplet training needs ≥2 identities with ≥2 poses, found {}",
            ids.len()
        )));
    }
    Ok(ids)
}

/// Trains an embedder on the identities accepted by `scope_filter`.
pub fn train_embedder(
    dataset: &[IdentityRecord],
    scope_filter: impl Fn(&Cohort) -> bool,
    config: &TripletConfig,
) -> Result<TripletNet> {
    train_embedder_traced(dataset, scope_filter, config).map(|(net, _)| net)
}

/// As [`train_embedder`], also returning the mean training loss of every epoch.
pub fn train_embedder_traced(
    dataset: &[IdentityRecord],
    scope_filter: impl Fn(&Cohort) -> bool,
    config: &TripletConfig,
) -> Result<(TripletNet, Vec<f64>)> {
    config.validate()?;
    let slice: Vec<IdentityRecord> = dataset.iter().filter(|r| scope_filter(&r.cohort)).cloned().collect();
    let ids = eligible(&slice)?;
    let d = ids[0].poses[0].dim();
    for r in &slice {
        for p in &r.poses {
            check_dim(d, p.dim())?;
        }
    }

    let mut sizes = vec![d];
    sizes.extend(&config.hidden);
    sizes.push(config.out_dim);
    let mut net = TripletNet::new(&sizes, config.seed)?;
    standardise(&mut net, &slice);

    let anchors: Vec<(usize, usize)> =
        ids.iter().enumerate().flat_map(|(i, r)| (0..r.poses.len()).map(move |p| (i, p))).collect();
    let mut r = rng::substream(config.seed, rng::TRIPLETS);
    let mut velocity = vec![0.0; net.num_parameters()];
    let mut history = Vec::with_capacity(config.epochs);
    let mut order = anchors.clone();

    for _ in 0..config.epochs {
        order.shuffle(&mut r);
        let triplets: Vec<Triplet<'_>> = order
            .iter()
            .map(|&(i, p)| {
                let rec = ids[i];
                let mut q = r.random_range(0..rec.poses.len() - 1);
                if q >= p {
                    q += 1;
                }
                let mut j = r.random_range(0..ids.len() - 1);
                if j >= i {
                    j += 1;
                }
                let neg = &ids[j].poses[r.random_range(0..ids[j].poses.len())];
                Triplet { anchor: &rec.poses[p], positive: &rec.poses[q], negative: neg }
            })
            .collect();
        let mut epoch_loss = 0.0;
        for batch in triplets.chunks(config.batch_size) {
            let (loss, grad) = loss_and_gradient(&net, batch, config.alpha)?;
            epoch_loss += loss * batch.len() as f64;
            let mut params = net.parameters();
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
            net.set_parameters(&params)?;
        }
        history.push(epoch_loss / triplets.len() as f64);
    }
    Ok((net, history))
}

/// Centres every coordinate and divides all of them by one common scale (the
/// root mean variance), so relative coordinate variances are preserved.
fn standardise(net: &mut TripletNet, slice: &[IdentityRecord]) {
    let rows: Vec<&[f64]> = slice.iter().flat_map(|r| r.poses.iter().map(|p| p.as_slice())).collect();
    let d = net.input_dim();
    let n = rows.len() as f64;
    let mut total_var = 0.0;
    for k in 0..d {
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
        total_var += rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
        net.shift[k] = mean;
    }
    let rms = (total_var / d as f64).sqrt();
    let scale = if rms > 1e-12 { rms } else { 1.0 };
    net.scale.iter_mut().for_each(|s| *s = scale);
}

/// Every (anchor, positive, negative) triplet of a dataset, with positives
/// from the same identity and negatives from any other identity.
pub fn all_triplets(dataset: &[IdentityRecord]) -> Vec<Triplet<'_>> {
    let mut out = Vec::new();
    for (i, rec) in dataset.iter().enumerate() {
        for (p, a) in rec.poses.iter().enumerate() {
            for (q, pos) in rec.poses.iter().enumerate() {
                if p == q {
                    continue;
                }
                for (j, other) in dataset.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    for neg in &other.poses {
                        out.push(Triplet { anchor: a, positive: pos, negative: neg });
                    }
                }
            }
        }
    }
    out
}

/// Fraction of triplets with `d_n ≥ d_p + α`.
pub fn satisfaction_rate(net: &TripletNet, triplets: &[Triplet<'_>], alpha: f64) -> Result<f64> {
    if triplets.is_empty() {
        return Err(Error::InsufficientData("no triplets to evaluate".into()));
    }
    let mut ok = 0usize;
    for t in triplets {
        let (dp, dn) = triplet_distances(net, t.anchor, t.positive, t.negative)?;
        if dn >= dp + alpha {
            ok += 1;
        }
    }
    Ok(ok as f64 / triplets.len() as f64)
}

/// Which demographic partition embedders are trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    /// Subject-independent: one model for everyone.
    SI,
    /// Gender-dependent: one model per gender.
    GD,
    /// Gender-ethnicity-dependent: one model per cohort.
    GED,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::SI, Scope::GD, Scope::GED];

    pub fn keys(self) -> Vec<ScopeKey> {
        match self {
            Scope::SI => vec![ScopeKey::All],
            Scope::GD => Gender::ALL.iter().map(|&g| ScopeKey::Gender(g)).collect(),
            Scope::GED => Cohort::ALL.iter().map(|&c| ScopeKey::Cohort(c)).collect(),
        }
    }

    pub fn key_for(self, cohort: Cohort) -> ScopeKey {
        match self {
            Scope::SI => ScopeKey::All,
            Scope::GD => ScopeKey::Gender(cohort.gender),
            Scope::GED => ScopeKey::Cohort(cohort),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scope::SI => "SI",
            Scope::GD => "GD",
            Scope::GED => "GED",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SI" => Ok(Scope::SI),
            "GD" => Ok(Scope::GD),
            "GED" => Ok(Scope::GED),
            _ => Err(Error::InvalidArgument(format!("unknown scope '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKey {
    All,
    Gender(Gender),
    Cohort(Cohort),
}

impl ScopeKey {
    pub fn matches(self, cohort: &Cohort) -> bool {
        match self {
            ScopeKey::All => true,
            ScopeKey::Gender(g) => cohort.gender == g,
            ScopeKey::Cohort(c) => *cohort == c,
        }
    }
}

impl fmt::Display for ScopeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopeKey::All => f.write_str("all"),
            ScopeKey::Gender(g) => f.write_str(g.tag()),
            ScopeKey::Cohort(c) => write!(f, "{c}"),
        }
    }
}

/// Embedders keyed by scope partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderRegistry {
    pub scope: Scope,
    pub models: Vec<(ScopeKey, TripletNet)>,
}

impl EmbedderRegistry {
    pub fn get(&self, key: ScopeKey) -> Option<&TripletNet> {
        self.models.iter().find(|(k, _)| *k == key).map(|(_, n)| n)
    }

    pub fn for_cohort(&self, cohort: Cohort) -> Option<&TripletNet> {
        self.get(self.scope.key_for(cohort))
    }
}

/// Keeps the first `m` identities of every cohort, `m` being the smallest
/// cohort size, so every cohort contributes equally.
pub fn equalise_cohorts(dataset: &[IdentityRecord]) -> Vec<IdentityRecord> {
    let mut counts: BTreeMap<Cohort, usize> = BTreeMap::new();
    for r in dataset {
        *counts.entry(r.cohort).or_default() += 1;
    }
    let m = counts.values().copied().min().unwrap_or(0);
    let mut taken: BTreeMap<Cohort, usize> = BTreeMap::new();
    dataset
        .iter()
        .filter(|r| {
            let t = taken.entry(r.cohort).or_default();
            *t += 1;
            *t <= m
        })
        .cloned()
        .collect()
}

/// One embedder per scope key, each trained on its (cohort-equalised) slice.
pub fn build_registry(dataset: &[IdentityRecord], scope: Scope, config: &TripletConfig) -> Result<EmbedderRegistry> {
    let required: Vec<Cohort> = match scope {
        Scope::GED => Cohort::ALL.to_vec(),
        _ => Vec::new(),
    };
    for c in &required {
        if !dataset.iter().any(|r| r.cohort == *c) {
            return Err(Error::MissingCohort(c.to_string()));
        }
    }
    if scope == Scope::GD {
        for g in Gender::ALL {
            if !dataset.iter().any(|r| r.cohort.gender == g) {
                return Err(Error::MissingCohort(format!("{} (any ethnicity)", g.tag())));
            }
        }
    }
    let balanced = equalise_cohorts(dataset);
    let models = scope
        .keys()
        .into_par_iter()
        .map(|key| {
            let cfg = TripletConfig { seed: rng::derive_seed(config.seed, &key.to_string()), ..config.clone() };
            train_embedder(&balanced, |c| key.matches(c), &cfg).map(|net| (key, net))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbedderRegistry { scope, models })
}
