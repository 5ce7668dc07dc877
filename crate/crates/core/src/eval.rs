//! Verification metrics and the rank/variance statistics used to compare
//! methods across runs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::types::{Cohort, Label, PairRecord};

/// Scores paired with ground-truth labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredPairs {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl ScoredPairs {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        check_dim(scores.len(), labels.len())?;
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::NonFinite("scores"));
        }
        Ok(Self { scores, labels })
    }

    pub fn push(&mut self, score: f64, label: Label) {
        self.scores.push(score);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `(genuine, impostor)` counts; errors when either is zero.
    pub fn class_counts(&self) -> Result<(usize, usize)> {
        let pos = self.labels.iter().filter(|&&l| l == Label::Genuine).count();
        let neg = self.labels.len() - pos;
        if pos == 0 || neg == 0 {
            Err(Error::SingleClass)
        } else {
            Ok((pos, neg))
        }
    }
}

/// Probability that a random genuine score beats a random impostor score,
/// ties counting ½ (Mann-Whitney U / (n_pos · n_neg)).
pub fn roc_auc(sp: &ScoredPairs) -> Result<f64> {
    let (pos, neg) = sp.class_counts()?;
    let mut idx: Vec<usize> = (0..sp.len()).collect();
    idx.sort_by(|&a, &b| sp.scores[a].total_cmp(&sp.scores[b]));
    let mut u = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0usize, 0usize);
        while j < idx.len() && sp.scores[idx[j]] == sp.scores[idx[i]] {
            match sp.labels[idx[j]] {
                Label::Genuine => gp += 1,
                Label::Impostor => gn += 1,
            }
            j += 1;
        }
        u += (gp * neg_below) as f64 + 0.5 * (gp * gn) as f64;
        neg_below += gn;
        i = j;
    }
    Ok(u / (pos as f64 * neg as f64))
}

/// ROC vertices `(far, tpr)` from `(0, 0)` to `(1, 1)`, one per distinct
/// score taken as the acceptance threshold, highest first.
pub fn roc_curve(sp: &ScoredPairs) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = sp.class_counts()?;
    let mut idx: Vec<usize> = (0..sp.len()).collect();
    idx.sort_by(|&a, &b| sp.scores[b].total_cmp(&sp.scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && sp.scores[idx[j]] == sp.scores[idx[i]] {
            match sp.labels[idx[j]] {
                Label::Genuine => tp += 1,
                Label::Impostor => fp += 1,
            }
            j += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        i = j;
    }
    Ok(points)
}

/// FAR = impostors with score ≥ θ; FRR = genuines with score < θ.
pub fn far_frr(sp: &ScoredPairs, theta: f64) -> Result<(f64, f64)> {
    let (pos, neg) = sp.class_counts()?;
    let mut fa = 0usize;
    let mut fr = 0usize;
    for (&s, &l) in sp.scores.iter().zip(&sp.labels) {
        match l {
            Label::Impostor if s >= theta => fa += 1,
            Label::Genuine if s < theta => fr += 1,
            _ => {}
        }
    }
    Ok((fa as f64 / neg as f64, fr as f64 / pos as f64))
}

/// Operating point where FAR and FRR are closest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    pub theta: f64,
    pub eer: f64,
    pub far: f64,
    pub frr: f64,
}

/// Sweeps midpoints between adjacent distinct scores plus the ±∞ guards and
/// keeps the candidate minimising |FAR − FRR|, then FAR + FRR, then θ.
pub fn eer_threshold(sp: &ScoredPairs) -> Result<EerPoint> {
    let (pos, neg) = sp.class_counts()?;
    let mut order: Vec<usize> = (0..sp.len()).collect();
    order.sort_by(|&a, &b| sp.scores[a].total_cmp(&sp.scores[b]));

    // θ = −∞ accepts everything
    let mut fa = neg;
    let mut fr = 0usize;
    let rate = |fa: usize, fr: usize| (fa as f64 / neg as f64, fr as f64 / pos as f64);
    let (far, frr) = rate(fa, fr);
    let mut best = EerPoint { theta: f64::NEG_INFINITY, eer: (far + frr) / 2.0, far, frr };

    let mut i = 0;
    while i < order.len() {
        let s = sp.scores[order[i]];
        while i < order.len() && sp.scores[order[i]] == s {
            match sp.labels[order[i]] {
                Label::Genuine => fr += 1,
                Label::Impostor => fa -= 1,
            }
            i += 1;
        }
        let theta = if i < order.len() { midpoint(s, sp.scores[order[i]]) } else { f64::INFINITY };
        let (far, frr) = rate(fa, fr);
        let cand = EerPoint { theta, eer: (far + frr) / 2.0, far, frr };
        if better(&cand, &best) {
            best = cand;
        }
    }
    Ok(best)
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m.is_finite() {
        m
    } else {
        b
    }
}

fn better(c: &EerPoint, b: &EerPoint) -> bool {
    let (dc, db) = ((c.far - c.frr).abs(), (b.far - b.frr).abs());
    if dc != db {
        return dc < db;
    }
    let (sc, sb) = (c.far + c.frr, b.far + b.frr);
    if sc != sb {
        return sc < sb;
    }
    c.theta < b.theta
}

/// Finite version of an EER threshold: the −∞ guard becomes the lowest score
/// and the +∞ guard a value just above the highest score.
pub fn finite_threshold(sp: &ScoredPairs, theta: f64) -> f64 {
    if theta.is_finite() {
        return theta;
    }
    let lo = sp.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sp.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if theta < 0.0 {
        lo
    } else {
        hi + hi.abs().max(1.0) * 1e-9
    }
}

/// Fraction of pairs where `score ≥ θ` agrees with the label.
pub fn accuracy(sp: &ScoredPairs, theta: f64) -> Result<f64> {
    if sp.is_empty() {
        return Err(Error::InsufficientData("accuracy of an empty score set".into()));
    }
    let ok = sp
        .scores
        .iter()
        .zip(&sp.labels)
        .filter(|(&s, &l)| Label::from_decision(s >= theta) == l)
        .count();
    Ok(ok as f64 / sp.len() as f64)
}

/// `k` judges ranking `N` candidates (rank 1 = best, ties averaged).
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    pub ranks: Vec<Vec<f64>>,
}

impl RankMatrix {
    pub fn new(ranks: Vec<Vec<f64>>) -> Result<Self> {
        let n = ranks.first().map_or(0, Vec::len);
        for row in &ranks {
            check_dim(n, row.len())?;
        }
        Ok(Self { ranks })
    }

    pub fn judges(&self) -> usize {
        self.ranks.len()
    }

    pub fn candidates(&self) -> usize {
        self.ranks.first().map_or(0, Vec::len)
    }

    /// Column sums of ranks.
    pub fn rank_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.candidates()];
        for row in &self.ranks {
            for (s, r) in sums.iter_mut().zip(row) {
                *s += r;
            }
        }
        sums
    }
}

/// Ranks values with 1 = largest; tied values share their average rank.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Kendall's coefficient of concordance in average-rank form:
/// `W = (12 Σ R̄ᵢ² − 3N(N+1)²) / (N(N² − 1))`.
pub fn kendalls_w(rm: &RankMatrix) -> Result<f64> {
    let n = rm.candidates();
    let k = rm.judges();
    if n < 2 {
        return Err(Error::InvalidArgument("Kendall's W needs at least 2 candidates".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("Kendall's W needs at least 1 judge".into()));
    }
    let nf = n as f64;
    let sum_sq: f64 = rm.rank_sums().iter().map(|s| (s / k as f64).powi(2)).sum();
    Ok((12.0 * sum_sq - 3.0 * nf * (nf + 1.0).powi(2)) / (nf * (nf * nf - 1.0)))
}

/// `χ² = k(N − 1)W`.
pub fn chi_square_from_w(w: f64, k: usize, n: usize) -> f64 {
    k as f64 * (n as f64 - 1.0) * w
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One-way ANOVA F statistic.
pub fn anova_f(groups: &[Vec<f64>]) -> Result<f64> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("ANOVA needs at least 2 groups".into()));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidArgument("every ANOVA group needs at least 2 observations".into()));
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    if !(ss_within > 0.0) {
        return Err(Error::InvalidArgument("zero within-group variance; F is undefined".into()));
    }
    let df_between = (groups.len() - 1) as f64;
    let df_within = (total - groups.len()) as f64;
    Ok((ss_between / df_between) / (ss_within / df_within))
}

/// Pooled-variance two-sample t statistic.
pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("t-test needs at least 2 observations per sample".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let ssa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let ssb: f64 = b.iter().map(|x| (x - mb).powi(2)).sum();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (ssa + ssb) / (na + nb - 2.0);
    if !(pooled > 0.0) {
        return Err(Error::InvalidArgument("zero pooled variance; t is undefined".into()));
    }
    Ok((ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt())
}

/// Sample mean and (n − 1) standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    // shifting by the first value keeps identical runs at exactly zero spread
    let x0 = v[0];
    let shifted: Vec<f64> = v.iter().map(|x| x - x0).collect();
    let ms = mean(&shifted);
    let m = x0 + ms;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = shifted.iter().map(|x| (x - ms).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

/// Metrics for one group of scored pairs at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub auc: f64,
    pub far: f64,
    pub frr: f64,
    /// EER of the scores themselves (independent of `theta`).
    pub eer: f64,
    pub theta: f64,
}

impl Metrics {
    pub fn compute(sp: &ScoredPairs, theta: f64) -> Result<Self> {
        let (far, frr) = far_frr(sp, theta)?;
        Ok(Self {
            accuracy: accuracy(sp, theta)?,
            auc: roc_auc(sp)?,
            far,
            frr,
            eer: eer_threshold(sp)?.eer,
            theta,
        })
    }

    const FIELDS: [&'static str; 6] = ["accuracy", "auc", "far", "frr", "eer", "theta"];

    fn values(&self) -> [f64; 6] {
        [self.accuracy, self.auc, self.far, self.frr, self.eer, self.theta]
    }

    fn mean_of(rows: &[Metrics]) -> Metrics {
        let m = |f: fn(&Metrics) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
        Metrics {
            accuracy: m(|r| r.accuracy),
            auc: m(|r| r.auc),
            far: m(|r| r.far),
            frr: m(|r| r.frr),
            eer: m(|r| r.eer),
            theta: m(|r| r.theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMetrics {
    pub cohort: Cohort,
    pub metrics: Metrics,
}

/// Per-cohort metrics plus their average over the cohorts present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<CohortMetrics>,
    pub average: Metrics,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<CohortMetrics>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("no cohort could be evaluated".into()));
        }
        let metrics: Vec<Metrics> = rows.iter().map(|r| r.metrics).collect();
        Ok(Self { average: Metrics::mean_of(&metrics), rows })
    }

    /// Flat `key=value` lines, e.g. `female-asian.auc=0.98`.
    pub fn to_kv(&self) -> String {
        let mut out = String::from("format=selm-eval-report v1\n");
        let mut emit = |name: &str, m: &Metrics| {
            for (k, v) in Metrics::FIELDS.iter().zip(m.values()) {
                let _ = writeln!(out, "{name}.{k}={v}");
            }
        };
        for r in &self.rows {
            emit(&r.cohort.to_string(), &r.metrics);
        }
        emit("average", &self.average);
        out
    }

    /// One row per cohort plus `average`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("cohort,{}\n", Metrics::FIELDS.join(","));
        let mut row = |name: &str, m: &Metrics| {
            let vals: Vec<String> = m.values().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{name},{}", vals.join(","));
        };
        for r in &self.rows {
            row(&r.cohort.to_string(), &r.metrics);
        }
        row("average", &self.average);
        out
    }
}

/// Per-cohort metrics of `scores` at `theta`, grouping pairs by the true
/// cohort of their first member. Cohorts lacking one of the two classes are
/// skipped with a warning.
pub fn cohort_report(pairs: &[PairRecord], scores: &[f64], theta: f64) -> Result<EvalReport> {
    check_dim(pairs.len(), scores.len())?;
    let mut rows = Vec::new();
    for c in Cohort::ALL {
        let mut sp = ScoredPairs::default();
        for (p, &s) in pairs.iter().zip(scores) {
            if p.cohort() == c {
                sp.push(s, p.sample.label);
            }
        }
        let has_both = sp.labels.contains(&Label::Genuine) && sp.labels.contains(&Label::Impostor);
        if !has_both {
            if !sp.is_empty() {
                log::warn!("cohort {c} has only one class among test pairs; omitted");
            } else {
                log::warn!("cohort {c} is absent from the test pairs; omitted");
            }
            continue;
        }
        rows.push(CohortMetrics { cohort: c, metrics: Metrics::compute(&sp, theta)? });
    }
    EvalReport::from_rows(rows)
}

/// Several runs of the same evaluation, summarised as mean ± std.
pub fn repeated_runs_csv(runs: &[EvalReport]) -> String {
    let mut out = format!("run,cohort,{}\n", Metrics::FIELDS.join(","));
    for (i, r) in runs.iter().enumerate() {
        for line in r.to_csv().lines().skip(1) {
            let _ = writeln!(out, "{i},{line}");
        }
    }
    if runs.is_empty() {
        return out;
    }
    let names: Vec<String> = runs[0]
        .rows
        .iter()
        .map(|r| r.cohort.to_string())
        .chain(std::iter::once("average".to_string()))
        .collect();
    for (stat, pick) in [("mean", 0usize), ("std", 1usize)] {
        for name in &names {
            let series: Vec<[f64; 6]> = runs
                .iter()
                .filter_map(|r| {
                    if name == "average" {
                        Some(r.average.values())
                    } else {
                        r.rows.iter().find(|c| &c.cohort.to_string() == name).map(|c| c.metrics.values())
                    }
                })
                .collect();
            let vals: Vec<String> = (0..6)
                .map(|f| {
                    let col: Vec<f64> = series.iter().map(|v| v[f]).collect();
                    let ms = mean_std(&col);
                    (if pick == 0 { ms.0 } else { ms.1 }).to_string()
                })
                .collect();
            let _ = writeln!(out, "{stat},{name},{}", vals.join(","));
        }
    }
    out
}
