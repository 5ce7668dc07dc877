use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{IdentityRecord, Label, PairRecord, PairSample, PoseRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    /// Impostor pairs per genuine pair (1.0 gives balanced classes).
    pub negatives_per_positive: f64,
    /// Draw impostor partners only from the first identity's cohort.
    pub same_cohort_negatives: bool,
    pub seed: u64,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self { negatives_per_positive: 1.0, same_cohort_negatives: false, seed: 0 }
    }
}

fn pose_ref(r: &IdentityRecord, pose_index: usize) -> PoseRef {
    PoseRef { identity_id: r.identity_id.clone(), cohort: r.cohort, pose_index }
}

/// Genuine pairs are every unordered pose pair within each identity; impostor
/// pairs are seeded random poses of two different identities.
pub fn make_pairs(dataset: &[IdentityRecord], opts: &PairOptions) -> Result<Vec<PairRecord>> {
    if let Some(r) = dataset.iter().find(|r| r.poses.len() < 2) {
        return Err(Error::InsufficientData(format!("identity '{}' has fewer than 2 poses", r.identity_id)));
    }
    if !(opts.negatives_per_positive >= 0.0) {
        return Err(Error::InvalidArgument("negative ratio must be ≥ 0".into()));
    }
    let mut out = Vec::new();
    for rec in dataset {
        for i in 0..rec.poses.len() {
            for j in (i + 1)..rec.poses.len() {
                out.push(PairRecord {
                    sample: PairSample::new(rec.poses[i].clone(), rec.poses[j].clone(), Label::Genuine)?,
                    a_ref: pose_ref(rec, i),
                    b_ref: pose_ref(rec, j),
                });
            }
        }
    }
    let n_neg = (opts.negatives_per_positive * out.len() as f64).round() as usize;
    if n_neg == 0 {
        return Ok(out);
    }
    let partners: Vec<Vec<usize>> = dataset
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (0..dataset.len())
                .filter(|&j| j != i && (!opts.same_cohort_negatives || dataset[j].cohort == a.cohort))
                .collect()
        })
        .collect();
    let firsts: Vec<usize> = (0..dataset.len()).filter(|&i| !partners[i].is_empty()).collect();
    if firsts.is_empty() {
        return Err(Error::InsufficientData("no two distinct identities to form impostor pairs".into()));
    }
    let mut r = rng::substream(opts.seed, rng::PAIRS);
    for _ in 0..n_neg {
        let i = firsts[r.random_range(0..firsts.len())];
        let j = partners[i][r.random_range(0..partners[i].len())];
        let (a, b) = (&dataset[i], &dataset[j]);
        let (pa, pb) = (r.random_range(0..a.poses.len()), r.random_range(0..b.poses.len()));
        out.push(PairRecord {
            sample: PairSample::new(a.poses[pa].clone(), b.poses[pb].clone(), Label::Impostor)?,
            a_ref: pose_ref(a, pa),
            b_ref: pose_ref(b, pb),
        });
    }
    Ok(out)
}

/// Just the samples of a list of pair records.
pub fn samples(pairs: &[PairRecord]) -> Vec<PairSample> {
    pairs.iter().map(|p| p.sample.clone()).collect()
}
