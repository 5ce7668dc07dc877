use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{Cohort, IdentityRecord};

/// Identity-level split fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train: 0.60, validation: 0.10, test: 0.30, seed: 0 }
    }
}

/// Minimum identities per cohort for every split to be nonempty.
pub const MIN_IDENTITIES_PER_COHORT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<IdentityRecord>,
    pub validation: Vec<IdentityRecord>,
    pub test: Vec<IdentityRecord>,
}

/// Shuffles identities within each cohort and cuts by fraction; validation and
/// test sizes are rounded, train takes the remainder.
pub fn split_by_identity(dataset: &[IdentityRecord], spec: &SplitSpec) -> Result<Split> {
    let total = spec.train + spec.validation + spec.test;
    if (total - 1.0).abs() > 1e-9 || spec.train < 0.0 || spec.validation < 0.0 || spec.test < 0.0 {
        return Err(Error::InvalidArgument("split fractions must be non-negative and sum to 1".into()));
    }
    let mut by_cohort: BTreeMap<Cohort, Vec<&IdentityRecord>> = BTreeMap::new();
    for r in dataset {
        by_cohort.entry(r.cohort).or_default().push(r);
    }
    if by_cohort.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    let mut out = Split { train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    for (cohort, mut ids) in by_cohort {
        if ids.len() < MIN_IDENTITIES_PER_COHORT {
            return Err(Error::InsufficientData(format!(
                "cohort {cohort} has {} identities; splitting needs at least {MIN_IDENTITIES_PER_COHORT}",
                ids.len()
            )));
        }
        let mut r = rng::substream(rng::derive_seed(spec.seed, &cohort.to_string()), rng::SPLITS);
        ids.shuffle(&mut r);
        let n = ids.len() as f64;
        let n_val = (spec.validation * n).round() as usize;
        let n_test = (spec.test * n).round() as usize;
        let n_train = ids.len() - n_val - n_test;
        let mut it = ids.into_iter().cloned();
        out.train.extend(it.by_ref().take(n_train));
        out.validation.extend(it.by_ref().take(n_val));
        out.test.extend(it);
    }
    Ok(out)
}
