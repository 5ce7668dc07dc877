//! Shared domain vocabulary: embeddings, cohorts, identities and pairs.

use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-dimension feature vector for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Rejects empty vectors and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("embedding must have dimension > 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding"));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Embedding {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn tag(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

/// Ethnicity groups, treated as opaque labels. Declaration order is the
/// tie-break order used by the cohort classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ethnicity {
    Asian,
    Black,
    Caucasian,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 3] = [Ethnicity::Asian, Ethnicity::Black, Ethnicity::Caucasian];

    pub fn tag(self) -> &'static str {
        match self {
            Ethnicity::Asian => "asian",
            Ethnicity::Black => "black",
            Ethnicity::Caucasian => "caucasian",
        }
    }
}

impl FromStr for Gender {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            _ => Err(Error::InvalidArgument(format!("unknown gender tag '{s}'"))),
        }
    }
}

impl FromStr for Ethnicity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asian" => Ok(Ethnicity::Asian),
            "black" => Ok(Ethnicity::Black),
            "caucasian" => Ok(Ethnicity::Caucasian),
            _ => Err(Error::InvalidArgument(format!("unknown ethnicity tag '{s}'"))),
        }
    }
}

/// One of the six gender × ethnicity groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cohort {
    pub gender: Gender,
    pub ethnicity: Ethnicity,
}

impl Cohort {
    pub const ALL: [Cohort; 6] = [
        Cohort::new(Gender::Female, Ethnicity::Asian),
        Cohort::new(Gender::Female, Ethnicity::Black),
        Cohort::new(Gender::Female, Ethnicity::Caucasian),
        Cohort::new(Gender::Male, Ethnicity::Asian),
        Cohort::new(Gender::Male, Ethnicity::Black),
        Cohort::new(Gender::Male, Ethnicity::Caucasian),
    ];

    pub const fn new(gender: Gender, ethnicity: Ethnicity) -> Self {
        Self { gender, ethnicity }
    }

    /// Position in [`Cohort::ALL`].
    pub fn index(self) -> usize {
        let g = match self.gender {
            Gender::Female => 0,
            Gender::Male => 1,
        };
        let e = match self.ethnicity {
            Ethnicity::Asian => 0,
            Ethnicity::Black => 1,
            Ethnicity::Caucasian => 2,
        };
        g * 3 + e
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.gender.tag(), self.ethnicity.tag())
    }
}

impl FromStr for Cohort {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (g, e) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("cohort '{s}' is not gender-ethnicity")))?;
        Ok(Cohort::new(g.parse()?, e.parse()?))
    }
}

/// Genuine (same identity) or impostor (different identities).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Impostor,
}

impl Label {
    /// Regression target: +1 genuine, −1 impostor.
    pub fn target(self) -> f64 {
        match self {
            Label::Genuine => 1.0,
            Label::Impostor => -1.0,
        }
    }

    pub fn from_decision(genuine: bool) -> Self {
        if genuine {
            Label::Genuine
        } else {
            Label::Impostor
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::Impostor => "impostor",
        }
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genuine" | "+1" | "1" => Ok(Label::Genuine),
            "impostor" | "-1" => Ok(Label::Impostor),
            _ => Err(Error::InvalidArgument(format!("unknown label '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub identity_id: String,
    pub cohort: Cohort,
    pub poses: Vec<Embedding>,
}

/// Two embeddings and whether they belong to the same identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub a: Embedding,
    pub b: Embedding,
    pub label: Label,
}

impl PairSample {
    pub fn new(a: Embedding, b: Embedding, label: Label) -> Result<Self> {
        crate::error::check_dim(a.dim(), b.dim())?;
        Ok(Self { a, b, label })
    }
}

/// Where one side of a pair came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoseRef {
    pub identity_id: String,
    pub cohort: Cohort,
    pub pose_index: usize,
}

/// A pair together with its provenance, as produced by pair construction
/// and stored in pair files.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub sample: PairSample,
    pub a_ref: PoseRef,
    pub b_ref: PoseRef,
}

impl PairRecord {
    /// Cohort a pair is reported under: the cohort of its first member.
    pub fn cohort(&self) -> Cohort {
        self.a_ref.cohort
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyDataset,
    DuplicateId { identity_id: String },
    EmptyPoses { identity_id: String },
    DimensionMismatch { identity_id: String, pose_index: usize, expected: usize, actual: usize },
    NonFinite { identity_id: String, pose_index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDataset => write!(f, "dataset is empty"),
            Violation::DuplicateId { identity_id } => write!(f, "duplicate id '{identity_id}'"),
            Violation::EmptyPoses { identity_id } => write!(f, "identity '{identity_id}' has no poses"),
            Violation::DimensionMismatch { identity_id, pose_index, expected, actual } => write!(
                f,
                "dimension mismatch at '{identity_id}' pose {pose_index}: expected {expected}, got {actual}"
            ),
            Violation::NonFinite { identity_id, pose_index } => {
                write!(f, "non-finite value at '{identity_id}' pose {pose_index}")
            }
        }
    }
}

/// Lists everything that would stop downstream operations from consuming
/// `dataset`. Empty iff the dataset is well-formed.
pub fn validate_dataset(dataset: &[IdentityRecord]) -> Vec<Violation> {
    let mut out = Vec::new();
    if dataset.is_empty() {
        out.push(Violation::EmptyDataset);
        return out;
    }
    let mut seen = HashSet::new();
    let mut dim: Option<usize> = None;
    for rec in dataset {
        if !seen.insert(rec.identity_id.as_str()) {
            out.push(Violation::DuplicateId { identity_id: rec.identity_id.clone() });
        }
        if rec.poses.is_empty() {
            out.push(Violation::EmptyPoses { identity_id: rec.identity_id.clone() });
        }
        for (i, pose) in rec.poses.iter().enumerate() {
            match dim {
                None => dim = Some(pose.dim()),
                Some(d) if d != pose.dim() => out.push(Violation::DimensionMismatch {
                    identity_id: rec.identity_id.clone(),
                    pose_index: i,
                    expected: d,
                    actual: pose.dim(),
                }),
                _ => {}
            }
            if pose.iter().any(|v| !v.is_finite()) {
                out.push(Violation::NonFinite { identity_id: rec.identity_id.clone(), pose_index: i });
            }
        }
    }
    out
}

/// Dimension of a validated dataset.
pub fn dataset_dim(dataset: &[IdentityRecord]) -> Option<usize> {
    dataset.iter().flat_map(|r| r.poses.first()).map(Embedding::dim).next()
}
