//! End-to-end verification: cohort prediction, scope routing, the
//! cross-cohort impostor shortcut and the routed pair verifier.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_pairs, PairOptions, Split};
use crate::error::{check_dim, Error, Result};
use crate::eval::{cohort_report, EvalReport};
use crate::kernels::{euclidean_similarity, Kernel};
use crate::rng;
use crate::triplet::{build_registry, EmbedderRegistry, Scope, ScopeKey, TripletConfig, TripletNet};
use crate::tuning::{calibrate, train_pair_model, GridPoint, GridSpec, Method, PairModel};
use crate::types::{Cohort, Embedding, Ethnicity, Gender, IdentityRecord, Label, PairRecord, PairSample};
use crate::welm::{welm_train, WelmModel, WelmParams, Weighting};

/// Score reported for shortcut impostors.
pub const SHORTCUT_SCORE: f64 = f64::MIN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub grid: GridSpec,
    pub kernel: Kernel,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec { c: vec![1e-2, 1.0, 1e2, 1e4], hidden_pct: vec![10.0, 50.0, 100.0], rbf_gamma: vec![] },
            kernel: Kernel::Euclidean,
            seed: 0,
        }
    }
}

/// Gender machine (female = +1) and three one-vs-rest ethnicity machines,
/// all on raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortClassifier {
    pub gender: WelmModel,
    /// Indexed in [`Ethnicity::ALL`] order.
    pub ethnicity: Vec<WelmModel>,
}

impl CohortClassifier {
    pub fn input_dim(&self) -> usize {
        self.gender.input_dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Cohort> {
        let gender = if self.gender.predict(x)? >= self.gender.threshold { Gender::Female } else { Gender::Male };
        let mut best = (Ethnicity::ALL[0], f64::NEG_INFINITY);
        for (e, m) in Ethnicity::ALL.into_iter().zip(&self.ethnicity) {
            let s = m.predict(x)?;
            // strict comparison keeps the earlier ethnicity on ties
            if s > best.1 {
                best = (e, s);
            }
        }
        Ok(Cohort::new(gender, best.0))
    }

    /// Fraction of poses whose cohort is predicted correctly.
    pub fn accuracy(&self, dataset: &[IdentityRecord]) -> Result<f64> {
        let mut n = 0usize;
        let mut ok = 0usize;
        for r in dataset {
            for p in &r.poses {
                n += 1;
                ok += usize::from(self.predict(p)? == r.cohort);
            }
        }
        if n == 0 {
            return Err(Error::InsufficientData("no poses to classify".into()));
        }
        Ok(ok as f64 / n as f64)
    }
}

fn require_all_cohorts(dataset: &[IdentityRecord]) -> Result<()> {
    for c in Cohort::ALL {
        if !dataset.iter().any(|r| r.cohort == c) {
            return Err(Error::MissingCohort(c.to_string()));
        }
    }
    Ok(())
}

fn fit_classifier(x: &[&Embedding], cohorts: &[Cohort], point: &GridPoint, seed: u64) -> Result<CohortClassifier> {
    let params = |name: &str| WelmParams {
        hidden_pct: point.hidden_pct,
        c: point.c,
        kernel: point.kernel,
        seed: rng::derive_seed(seed, name),
        weighting: Weighting::Balanced,
    };
    let y: Vec<Label> = cohorts.iter().map(|c| Label::from_decision(c.gender == Gender::Female)).collect();
    let gender = welm_train(x, &y, &params("gender"))?;
    let ethnicity = Ethnicity::ALL
        .into_iter()
        .map(|e| {
            let y: Vec<Label> = cohorts.iter().map(|c| Label::from_decision(c.ethnicity == e)).collect();
            welm_train(x, &y, &params(e.tag()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CohortClassifier { gender, ethnicity })
}

/// Picks the grid point with the best validation cohort accuracy (earliest on
/// ties).
pub fn train_cohort_classifier(
    train: &[IdentityRecord],
    validation: &[IdentityRecord],
    config: &ClassifierConfig,
) -> Result<CohortClassifier> {
    require_all_cohorts(train)?;
    let mut x = Vec::new();
    let mut cohorts = Vec::new();
    for r in train {
        for p in &r.poses {
            x.push(p);
            cohorts.push(r.cohort);
        }
    }
    let points = config.grid.points(config.kernel);
    if points.is_empty() {
        return Err(Error::InvalidArgument("classifier grid is empty".into()));
    }
    let fitted: Vec<(CohortClassifier, f64)> = points
        .par_iter()
        .map(|pt| {
            let clf = fit_classifier(&x, &cohorts, pt, config.seed)?;
            let acc = if validation.is_empty() { clf.accuracy(train)? } else { clf.accuracy(validation)? };
            Ok((clf, acc))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (_, acc)) in fitted.iter().enumerate() {
        if *acc > fitted[best].1 {
            best = i;
        }
    }
    log::debug!("cohort classifier: grid point {best} with validation accuracy {}", fitted[best].1);
    Ok(fitted.into_iter().nth(best).expect("non-empty grid").0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub decision: Label,
    pub score: f64,
    /// Threshold of the verifier that produced `score` (0 for shortcuts).
    pub threshold: f64,
    pub cohort_a: Cohort,
    pub cohort_b: Cohort,
    pub shortcut: bool,
}

impl VerificationResult {
    /// `score − threshold`, so that 0 is the decision boundary for every route.
    pub fn margin(&self) -> f64 {
        if self.shortcut {
            SHORTCUT_SCORE
        } else {
            self.score - self.threshold
        }
    }
}

/// Distance-threshold baseline on two embeddings.
pub fn distance_baseline(a: &[f64], b: &[f64], threshold: f64) -> Result<(Label, f64)> {
    let score = euclidean_similarity(a, b)?;
    Ok((Label::from_decision(score >= threshold), score))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkConfig {
    pub scope: Scope,
    pub method: Method,
    pub verifier: GridPoint,
    pub triplet: TripletConfig,
    pub classifier: ClassifierConfig,
    pub negatives_per_positive: f64,
    pub seed: u64,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        Self {
            scope: Scope::GED,
            method: Method::Selm(crate::selm::SiameseCondition::Dist),
            verifier: GridPoint { c: 1.0, hidden_pct: 20.0, kernel: Kernel::Euclidean },
            triplet: TripletConfig::default(),
            classifier: ClassifierConfig::default(),
            negatives_per_positive: 1.0,
            seed: 0,
        }
    }
}

/// Classifier, embedder registry and one verifier per scope key.
#[derive(Debug, Serialize, Deserialize)]
pub struct VerificationFramework {
    pub classifier: CohortClassifier,
    pub registry: EmbedderRegistry,
    pub verifiers: Vec<(ScopeKey, PairModel)>,
    #[serde(skip)]
    calls: AtomicUsize,
}

impl Clone for VerificationFramework {
    fn clone(&self) -> Self {
        Self {
            classifier: self.classifier.clone(),
            registry: self.registry.clone(),
            verifiers: self.verifiers.clone(),
            calls: AtomicUsize::new(0),
        }
    }
}

impl PartialEq for VerificationFramework {
    fn eq(&self, other: &Self) -> bool {
        self.classifier == other.classifier && self.registry == other.registry && self.verifiers == other.verifiers
    }
}

fn embed_pairs(net: &TripletNet, pairs: &[PairRecord]) -> Result<Vec<PairSample>> {
    pairs
        .iter()
        .map(|p| {
            let a = Embedding::new(net.embed(&p.sample.a)?)?;
            let b = Embedding::new(net.embed(&p.sample.b)?)?;
            PairSample::new(a, b, p.sample.label)
        })
        .collect()
}

impl VerificationFramework {
    /// Assembles a framework from trained parts, checking that every scope key
    /// has exactly one verifier.
    pub fn new(
        classifier: CohortClassifier,
        registry: EmbedderRegistry,
        verifiers: Vec<(ScopeKey, PairModel)>,
    ) -> Result<Self> {
        let keys = registry.scope.keys();
        if verifiers.len() != keys.len() || keys.iter().any(|k| !verifiers.iter().any(|(v, _)| v == k)) {
            return Err(Error::InvalidArgument(format!(
                "verifier keys do not match the {} registry",
                registry.scope
            )));
        }
        for k in &keys {
            let net = registry.get(*k).ok_or_else(|| Error::MissingCohort(k.to_string()))?;
            check_dim(classifier.input_dim(), net.input_dim())?;
        }
        Ok(Self { classifier, registry, verifiers, calls: AtomicUsize::new(0) })
    }

    pub fn scope(&self) -> Scope {
        self.registry.scope
    }

    pub fn input_dim(&self) -> usize {
        self.classifier.input_dim()
    }

    /// How many times a verifier has scored a pair.
    pub fn verifier_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn verifier(&self, key: ScopeKey) -> Option<&PairModel> {
        self.verifiers.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn verify(&self, a: &[f64], b: &[f64]) -> Result<VerificationResult> {
        check_dim(self.input_dim(), a.len())?;
        check_dim(self.input_dim(), b.len())?;
        let cohort_a = self.classifier.predict(a)?;
        let cohort_b = self.classifier.predict(b)?;
        let scope = self.scope();
        let (key_a, key_b) = (scope.key_for(cohort_a), scope.key_for(cohort_b));
        if scope != Scope::SI && key_a != key_b {
            return Ok(VerificationResult {
                decision: Label::Impostor,
                score: SHORTCUT_SCORE,
                threshold: 0.0,
                cohort_a,
                cohort_b,
                shortcut: true,
            });
        }
        let net = self.registry.get(key_a).ok_or_else(|| Error::MissingCohort(key_a.to_string()))?;
        let verifier = self.verifier(key_a).ok_or_else(|| Error::MissingCohort(key_a.to_string()))?;
        let (ea, eb) = (net.embed(a)?, net.embed(b)?);
        self.calls.fetch_add(1, Ordering::Relaxed);
        let score = verifier.score(&ea, &eb)?;
        let threshold = verifier.threshold();
        Ok(VerificationResult {
            decision: Label::from_decision(score >= threshold),
            score,
            threshold,
            cohort_a,
            cohort_b,
            shortcut: false,
        })
    }

    pub fn verify_all(&self, pairs: &[PairRecord]) -> Result<Vec<VerificationResult>> {
        pairs.par_iter().map(|p| self.verify(&p.sample.a, &p.sample.b)).collect()
    }

    /// Per-cohort metrics on margins (decision boundary at 0). Pairs are
    /// grouped by the true cohort of their first member; cohorts lacking one
    /// of the two classes are skipped with a warning.
    pub fn report(&self, pairs: &[PairRecord]) -> Result<EvalReport> {
        let margins: Vec<f64> = self.verify_all(pairs)?.iter().map(VerificationResult::margin).collect();
        cohort_report(pairs, &margins, 0.0)
    }
}

/// Fraction of pairs whose decision matches the label.
pub fn decision_accuracy(pairs: &[PairRecord], results: &[VerificationResult]) -> f64 {
    let ok = pairs.iter().zip(results).filter(|(p, r)| p.sample.label == r.decision).count();
    ok as f64 / pairs.len().max(1) as f64
}

/// Trains every stage on `split.train`, tunes the classifier and calibrates
/// each verifier's threshold on `split.validation`.
///
/// Calibration pairs for a scope key come from that key's validation
/// identities only, so each key needs at least two validation identities.
pub fn train_framework(split: &Split, config: &FrameworkConfig) -> Result<VerificationFramework> {
    let seed = config.seed;
    let mut clf_cfg = config.classifier.clone();
    clf_cfg.seed = rng::derive_seed(seed, "classifier");
    let classifier = train_cohort_classifier(&split.train, &split.validation, &clf_cfg)?;
    let mut triplet = config.triplet.clone();
    triplet.seed = rng::derive_seed(seed, rng::TRIPLETS);
    let registry = build_registry(&split.train, config.scope, &triplet)?;

    let subset = |data: &[IdentityRecord], key: ScopeKey| -> Vec<IdentityRecord> {
        data.iter().filter(|r| key.matches(&r.cohort)).cloned().collect()
    };
    let verifiers = config
        .scope
        .keys()
        .into_par_iter()
        .map(|key| {
            let net = registry.get(key).ok_or_else(|| Error::MissingCohort(key.to_string()))?;
            let opts = |name: &str| PairOptions {
                negatives_per_positive: config.negatives_per_positive,
                same_cohort_negatives: false,
                seed: rng::derive_seed(seed, &format!("{name}/{key}")),
            };
            let val_ids = subset(&split.validation, key);
            if val_ids.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "scope key {key} has {} validation identities; calibration needs at least 2",
                    val_ids.len()
                )));
            }
            let train_pairs = embed_pairs(net, &make_pairs(&subset(&split.train, key), &opts("train"))?)?;
            let val_pairs = embed_pairs(net, &make_pairs(&val_ids, &opts("validation"))?)?;
            let mut model = train_pair_model(
                config.method,
                &train_pairs,
                &config.verifier,
                rng::derive_seed(seed, &format!("verifier/{key}")),
                Weighting::Balanced,
            )?;
            calibrate(&mut model, &val_pairs)?;
            Ok((key, model))
        })
        .collect::<Result<Vec<_>>>()?;
    VerificationFramework::new(classifier, registry, verifiers)
}
