//! Line-oriented text formats for embeddings and pairs.
//!
//! Values are written with 17 significant digits so a save/load cycle
//! reproduces every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Cohort, Embedding, Ethnicity, Gender, IdentityRecord, Label, PairRecord, PairSample, PoseRef};

pub const EMBEDDINGS_MAGIC: &str = "selm-embeddings";
pub const PAIRS_MAGIC: &str = "selm-pairs";
pub const TEXT_VERSION: u64 = 1;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn write_values(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        write!(w, ",{v:.16e}")?;
    }
    Ok(())
}

/// Parses `<magic> v<version> dim=<d>`.
fn parse_header(line: Option<(usize, String)>, magic: &str) -> Result<usize> {
    let Some((no, line)) = line else {
        return Err(parse_err(1, "missing header"));
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(parse_err(no, format!("expected header starting with '{magic}'")));
    }
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u64>().ok())
        .ok_or_else(|| parse_err(no, "malformed version tag"))?;
    if version != TEXT_VERSION {
        return Err(Error::Version { found: version, supported: TEXT_VERSION });
    }
    let dim = parts
        .next()
        .and_then(|d| d.strip_prefix("dim="))
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| parse_err(no, "malformed dim field"))?;
    if parts.next().is_some() {
        return Err(parse_err(no, "trailing header fields"));
    }
    Ok(dim)
}

/// Numbered non-blank lines, 1-based.
fn numbered_lines(r: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|l| !matches!(l, Ok((_, s)) if s.trim().is_empty()))
}

fn parse_values(no: usize, fields: &[&str]) -> Result<Embedding> {
    let v = fields
        .iter()
        .map(|f| f.trim().parse::<f64>().map_err(|_| parse_err(no, format!("bad number '{f}'"))))
        .collect::<Result<Vec<_>>>()?;
    Embedding::new(v).map_err(|e| parse_err(no, e.to_string()))
}

fn parse_cohort(no: usize, g: &str, e: &str) -> Result<Cohort> {
    let gender: Gender = g.parse().map_err(|err: Error| parse_err(no, err.to_string()))?;
    let ethnicity: Ethnicity = e.parse().map_err(|err: Error| parse_err(no, err.to_string()))?;
    Ok(Cohort::new(gender, ethnicity))
}

fn parse_index(no: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| parse_err(no, format!("bad pose index '{s}'")))
}

pub fn write_embeddings(dataset: &[IdentityRecord], mut w: impl Write) -> Result<()> {
    let dim = crate::types::dataset_dim(dataset)
        .ok_or_else(|| Error::InsufficientData("cannot save an empty dataset".into()))?;
    writeln!(w, "{EMBEDDINGS_MAGIC} v{TEXT_VERSION} dim={dim}")?;
    for rec in dataset {
        if rec.identity_id.contains([',', '\n']) || rec.identity_id.is_empty() {
            return Err(Error::InvalidArgument(format!("identity id '{}' is not writable", rec.identity_id)));
        }
        for (i, p) in rec.poses.iter().enumerate() {
            crate::error::check_dim(dim, p.dim())?;
            write!(w, "{},{},{},{i}", rec.identity_id, rec.cohort.gender.tag(), rec.cohort.ethnicity.tag())?;
            write_values(&mut w, p)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows of one identity need not be adjacent, but their pose indices must
/// count up from 0 and their cohort tags must agree.
pub fn read_embeddings(r: impl BufRead) -> Result<Vec<IdentityRecord>> {
    let mut lines = numbered_lines(r);
    let dim = parse_header(lines.next().transpose()?, EMBEDDINGS_MAGIC)?;
    let mut out: Vec<IdentityRecord> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for line in lines {
        let (no, line) = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + dim {
            return Err(parse_err(
                no,
                format!("expected {} fields (4 + dim {dim}), found {}", 4 + dim, fields.len()),
            ));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(parse_err(no, "empty identity id"));
        }
        let cohort = parse_cohort(no, fields[1].trim(), fields[2].trim())?;
        let pose = parse_index(no, fields[3].trim())?;
        let values = parse_values(no, &fields[4..])?;
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            out.push(IdentityRecord { identity_id: id.to_string(), cohort, poses: Vec::new() });
            out.len() - 1
        });
        let rec = &mut out[slot];
        if rec.cohort != cohort {
            return Err(parse_err(no, format!("identity '{id}' changes cohort from {} to {cohort}", rec.cohort)));
        }
        if pose != rec.poses.len() {
            return Err(parse_err(no, format!("identity '{id}' expected pose {} but found {pose}", rec.poses.len())));
        }
        rec.poses.push(values);
    }
    Ok(out)
}

pub fn save_embeddings(dataset: &[IdentityRecord], path: impl AsRef<Path>) -> Result<()> {
    write_embeddings(dataset, BufWriter::new(File::create(path)?))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Vec<IdentityRecord>> {
    read_embeddings(BufReader::new(File::open(path)?))
}

fn write_ref(w: &mut impl Write, r: &PoseRef) -> std::io::Result<()> {
    write!(w, ",{},{},{},{}", r.identity_id, r.cohort.gender.tag(), r.cohort.ethnicity.tag(), r.pose_index)
}

/// One record per line: `label,idA,genderA,ethnicityA,poseA,idB,genderB,ethnicityB,poseB,a1..ad,b1..bd`.
pub fn write_pairs(pairs: &[PairRecord], mut w: impl Write) -> Result<()> {
    let dim = pairs
        .first()
        .map(|p| p.sample.a.dim())
        .ok_or_else(|| Error::InsufficientData("cannot save an empty pair list".into()))?;
    writeln!(w, "{PAIRS_MAGIC} v{TEXT_VERSION} dim={dim}")?;
    for p in pairs {
        crate::error::check_dim(dim, p.sample.a.dim())?;
        crate::error::check_dim(dim, p.sample.b.dim())?;
        write!(w, "{}", p.sample.label.tag())?;
        write_ref(&mut w, &p.a_ref)?;
        write_ref(&mut w, &p.b_ref)?;
        write_values(&mut w, &p.sample.a)?;
        write_values(&mut w, &p.sample.b)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs(r: impl BufRead) -> Result<Vec<PairRecord>> {
    let mut lines = numbered_lines(r);
    let dim = parse_header(lines.next().transpose()?, PAIRS_MAGIC)?;
    let mut out = Vec::new();
    for line in lines {
        let (no, line) = line?;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 + 2 * dim {
            return Err(parse_err(no, format!("expected {} fields, found {}", 9 + 2 * dim, f.len())));
        }
        let label: Label = f[0].parse().map_err(|e: Error| parse_err(no, e.to_string()))?;
        let pose_ref = |o: usize| -> Result<PoseRef> {
            Ok(PoseRef {
                identity_id: f[o].to_string(),
                cohort: parse_cohort(no, f[o + 1], f[o + 2])?,
                pose_index: parse_index(no, f[o + 3])?,
            })
        };
        let (a_ref, b_ref) = (pose_ref(1)?, pose_ref(5)?);
        let a = parse_values(no, &f[9..9 + dim])?;
        let b = parse_values(no, &f[9 + dim..])?;
        out.push(PairRecord { sample: PairSample::new(a, b, label)?, a_ref, b_ref });
    }
    Ok(out)
}

pub fn save_pairs(pairs: &[PairRecord], path: impl AsRef<Path>) -> Result<()> {
    write_pairs(pairs, BufWriter::new(File::create(path)?))
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<PairRecord>> {
    read_pairs(BufReader::new(File::open(path)?))
}
