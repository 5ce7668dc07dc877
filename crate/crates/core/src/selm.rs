//! Siamese ELM: a symmetric merge of two inputs followed by a WELM backbone.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::Kernel;
use crate::types::{Cohort, Label, PairSample};
use crate::welm::{self, WelmModel, WelmParams, Weighting};

/// Element-wise merge applied in the Siamese layer. All four are symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiameseCondition {
    /// `a + b`
    Sum,
    /// `|a − b|`
    Dist,
    /// `a ⊙ b`
    Mult,
    /// `(a + b) / 2`
    Mean,
}

impl SiameseCondition {
    pub const ALL: [SiameseCondition; 4] =
        [SiameseCondition::Sum, SiameseCondition::Dist, SiameseCondition::Mult, SiameseCondition::Mean];

    pub fn name(self) -> &'static str {
        match self {
            SiameseCondition::Sum => "sum",
            SiameseCondition::Dist => "dist",
            SiameseCondition::Mult => "mult",
            SiameseCondition::Mean => "mean",
        }
    }
}

impl fmt::Display for SiameseCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SiameseCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SiameseCondition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown siamese condition '{s}'")))
    }
}

pub fn siamese_combine(condition: SiameseCondition, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.len(), b.len())?;
    let out = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| match condition {
            SiameseCondition::Sum => x + y,
            SiameseCondition::Dist => (x - y).abs(),
            SiameseCondition::Mult => x * y,
            SiameseCondition::Mean => (x + y) / 2.0,
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelmParams {
    pub hidden_pct: f64,
    pub c: f64,
    pub condition: SiameseCondition,
    pub kernel: Kernel,
    pub seed: u64,
    #[serde(default)]
    pub weighting: Weighting,
}

impl SelmParams {
    /// WELM parameters of the backbone trained on combined vectors.
    pub fn backbone(&self) -> WelmParams {
        WelmParams {
            hidden_pct: self.hidden_pct,
            c: self.c,
            kernel: self.kernel,
            seed: self.seed,
            weighting: self.weighting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelmModel {
    pub condition: SiameseCondition,
    /// Anchors live in merged-vector space (dimension `d`).
    pub backbone: WelmModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort_scope: Option<Cohort>,
}

pub fn selm_train(pairs: &[PairSample], params: &SelmParams) -> Result<SelmModel> {
    let combined = pairs
        .iter()
        .map(|p| siamese_combine(params.condition, &p.a, &p.b))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = pairs.iter().map(|p| p.label).collect();
    let backbone = welm::fit(&combined, &labels, &params.backbone(), true)?;
    Ok(SelmModel { condition: params.condition, backbone, cohort_scope: None })
}

impl SelmModel {
    pub fn threshold(&self) -> f64 {
        self.backbone.threshold
    }

    pub fn input_dim(&self) -> usize {
        self.backbone.input_dim()
    }

    /// Backbone score of the merged pair. Identical for `(a, b)` and `(b, a)`.
    ///
    /// Under the cosine kernel a zero merged vector (e.g. `Dist` with `a = b`)
    /// gets similarity 0 to every anchor.
    pub fn predict(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let x = siamese_combine(self.condition, a, b)?;
        if self.backbone.kernel == Kernel::Cosine && x.iter().all(|&v| v == 0.0) {
            log::debug!("zero merged vector under cosine kernel scored as similarity 0");
        }
        self.backbone.score(&x, true)
    }
}
