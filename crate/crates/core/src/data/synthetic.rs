use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{Cohort, Embedding, IdentityRecord};

/// Where identity-discriminative variation lives.
///
/// With both counts zero, identity centres vary isotropically. Otherwise each
/// gender owns `gender_dims` coordinates and each cohort owns `cohort_dims`
/// further coordinates; identities of a cohort vary only along their gender's
/// and their cohort's coordinates, while pose noise touches every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InformativeLayout {
    pub gender_dims: usize,
    pub cohort_dims: usize,
}

impl InformativeLayout {
    pub fn is_isotropic(&self) -> bool {
        self.gender_dims == 0 && self.cohort_dims == 0
    }

    pub fn required_dim(&self) -> usize {
        2 * self.gender_dims + 6 * self.cohort_dims
    }

    /// Coordinates carrying identity variation for `cohort`.
    pub fn dims_for(&self, cohort: Cohort, d: usize) -> Vec<usize> {
        if self.is_isotropic() {
            return (0..d).collect();
        }
        let g = match cohort.gender {
            crate::types::Gender::Female => 0,
            crate::types::Gender::Male => 1,
        };
        let gender = (g * self.gender_dims)..((g + 1) * self.gender_dims);
        let base = 2 * self.gender_dims + cohort.index() * self.cohort_dims;
        gender.chain(base..base + self.cohort_dims).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub identities_per_cohort: usize,
    pub poses_per_identity: usize,
    pub dim: usize,
    /// Minimum distance between cohort centres.
    pub cohort_separation: f64,
    /// Standard deviation of identity centres around their cohort centre.
    pub identity_spread: f64,
    /// Standard deviation of poses around their identity centre.
    pub pose_noise: f64,
    #[serde(default)]
    pub layout: InformativeLayout,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            identities_per_cohort: 10,
            poses_per_identity: 3,
            dim: 8,
            cohort_separation: 10.0,
            identity_spread: 1.0,
            pose_noise: 0.1,
            layout: InformativeLayout::default(),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.identities_per_cohort == 0 || self.poses_per_identity == 0 || self.dim == 0 {
            return Err(Error::InvalidArgument("counts and dimension must be positive".into()));
        }
        if !(self.pose_noise > 0.0 && self.pose_noise < self.identity_spread && self.identity_spread < self.cohort_separation) {
            return Err(Error::InvalidArgument(
                "need 0 < pose noise < identity spread < cohort separation".into(),
            ));
        }
        if self.layout.required_dim() > self.dim {
            return Err(Error::InvalidArgument(format!(
                "layout needs {} dimensions, config has {}",
                self.layout.required_dim(),
                self.dim
            )));
        }
        Ok(())
    }
}

fn gaussian(r: &mut impl Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Six cohort centres at pairwise distance ≥ `separation`: random Gaussian
/// directions rescaled so the closest pair sits exactly at `separation`.
fn cohort_centres(dim: usize, separation: f64, r: &mut impl Rng) -> Vec<Vec<f64>> {
    loop {
        let c: Vec<Vec<f64>> = (0..6).map(|_| (0..dim).map(|_| gaussian(r)).collect()).collect();
        let mut min = f64::INFINITY;
        for i in 0..6 {
            for j in (i + 1)..6 {
                let d: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                min = min.min(d);
            }
        }
        if min > 1e-9 {
            let s = separation / min;
            return c.into_iter().map(|v| v.into_iter().map(|x| x * s).collect()).collect();
        }
    }
}

/// Deterministic cohort-structured embeddings: cohort centres, identity
/// centres around them, poses around identities.
pub fn generate_synthetic_cohorts(cfg: &SyntheticConfig) -> Result<Vec<IdentityRecord>> {
    cfg.validate()?;
    let mut r = rng::substream(cfg.seed, rng::SYNTHETIC);
    let centres = cohort_centres(cfg.dim, cfg.cohort_separation, &mut r);
    let mut out = Vec::with_capacity(6 * cfg.identities_per_cohort);
    for cohort in Cohort::ALL {
        let mut cr = rng::substream(rng::derive_seed(cfg.seed, &cohort.to_string()), rng::SYNTHETIC);
        let dims = cfg.layout.dims_for(cohort, cfg.dim);
        for i in 0..cfg.identities_per_cohort {
            let mut centre = centres[cohort.index()].clone();
            for &k in &dims {
                centre[k] += cfg.identity_spread * gaussian(&mut cr);
            }
            let poses = (0..cfg.poses_per_identity)
                .map(|_| Embedding::new(centre.iter().map(|c| c + cfg.pose_noise * gaussian(&mut cr)).collect()))
                .collect::<Result<Vec<_>>>()?;
            out.push(IdentityRecord { identity_id: format!("{cohort}-{i:03}"), cohort, poses });
        }
    }
    Ok(out)
}
