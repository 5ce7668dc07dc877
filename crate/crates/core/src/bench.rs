//! Desk-scale comparison protocol: feature scopes, pair verifiers, rank
//! concordance and a hidden-node sweep, all on seeded synthetic cohorts.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic_cohorts, make_pairs, split_by_identity, InformativeLayout, PairOptions, Split, SplitSpec, SyntheticConfig};
use crate::error::{Error, Result};
use crate::eval::{anova_f, chi_square_from_w, kendalls_w, mean_std, rank_descending, two_sample_t, CohortMetrics, EvalReport, Metrics, RankMatrix};
use crate::kernels::Kernel;
use crate::rng;
use crate::selm::SiameseCondition;
use crate::triplet::{build_registry, EmbedderRegistry, Scope, TripletConfig};
use crate::tuning::{eer_calibrated_threshold, score_pairs, tune, GridSpec, Method};
use crate::types::{Cohort, Embedding, IdentityRecord, PairSample};
use crate::welm::Weighting;

/// The synthetic population used by the protocol: identity variation lives in
/// a few gender- and cohort-specific coordinates, pose noise everywhere.
pub fn benchmark_synthetic(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        identities_per_cohort: 20,
        poses_per_identity: 3,
        dim: 24,
        cohort_separation: 10.0,
        identity_spread: 1.0,
        pose_noise: 0.4,
        layout: InformativeLayout { gender_dims: 2, cohort_dims: 2 },
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub synthetic: SyntheticConfig,
    pub split: SplitSpec,
    pub triplet: TripletConfig,
    pub runs: usize,
    pub seed: u64,
    /// Hidden percentage for the method comparison.
    pub hidden_pct: f64,
    pub c_grid: Vec<f64>,
    pub kernel: Kernel,
    pub sweep_hidden: Vec<f64>,
    /// Condition compared against WELM in the sweep.
    pub sweep_condition: SiameseCondition,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            synthetic: benchmark_synthetic(0),
            split: SplitSpec::default(),
            triplet: TripletConfig::default(),
            runs: 10,
            seed: 0,
            hidden_pct: 20.0,
            c_grid: crate::tuning::decades(-6, 6),
            kernel: Kernel::Euclidean,
            sweep_hidden: (1..=10).map(|i| 10.0 * i as f64).collect(),
            sweep_condition: SiameseCondition::Dist,
        }
    }
}

/// The six verifiers compared by the protocol.
pub fn protocol_methods() -> Vec<Method> {
    let mut m = vec![Method::Distance, Method::Elm];
    m.extend(SiameseCondition::ALL.map(Method::Selm));
    m
}

/// Dataset and split for one repetition.
#[derive(Debug, Clone)]
pub struct RunData {
    pub seed: u64,
    pub split: Split,
}

impl BenchConfig {
    pub fn run_seed(&self, run: usize) -> u64 {
        rng::derive_seed(self.seed, &format!("run/{run}"))
    }

    pub fn prepare_run(&self, run: usize) -> Result<RunData> {
        let seed = self.run_seed(run);
        let data = generate_synthetic_cohorts(&SyntheticConfig { seed, ..self.synthetic.clone() })?;
        let split = split_by_identity(&data, &SplitSpec { seed, ..self.split })?;
        Ok(RunData { seed, split })
    }

    pub fn registry(&self, run: &RunData, scope: Scope) -> Result<EmbedderRegistry> {
        let triplet = TripletConfig { seed: rng::derive_seed(run.seed, rng::TRIPLETS), ..self.triplet.clone() };
        build_registry(&run.split.train, scope, &triplet)
    }

    fn kernel_for(&self, method: Method) -> Kernel {
        match method {
            Method::Elm => Kernel::Sigmoid,
            _ => self.kernel,
        }
    }
}

/// Train/validation/test pairs of one cohort, embedded by the registry model
/// that serves it. Impostors are drawn within the cohort.
pub fn cohort_pair_sets(
    registry: &EmbedderRegistry,
    split: &Split,
    cohort: Cohort,
    seed: u64,
) -> Result<[Vec<PairSample>; 3]> {
    let net = registry.for_cohort(cohort).ok_or_else(|| Error::MissingCohort(cohort.to_string()))?;
    let make = |part: &[IdentityRecord], name: &str| -> Result<Vec<PairSample>> {
        let ids: Vec<IdentityRecord> = part.iter().filter(|r| r.cohort == cohort).cloned().collect();
        let opts = PairOptions {
            negatives_per_positive: 1.0,
            same_cohort_negatives: true,
            seed: rng::derive_seed(seed, &format!("{name}/{cohort}")),
        };
        make_pairs(&ids, &opts)?
            .into_iter()
            .map(|p| {
                let a = Embedding::new(net.embed(&p.sample.a)?)?;
                let b = Embedding::new(net.embed(&p.sample.b)?)?;
                PairSample::new(a, b, p.sample.label)
            })
            .collect()
    };
    Ok([make(&split.train, "train")?, make(&split.validation, "validation")?, make(&split.test, "test")?])
}

/// Tunes C on validation at the given hidden percentage, then reports test
/// metrics at the validation EER threshold, per cohort.
pub fn evaluate_method(
    cfg: &BenchConfig,
    run: &RunData,
    registry: &EmbedderRegistry,
    method: Method,
    hidden_pct: f64,
) -> Result<EvalReport> {
    let grid = GridSpec { c: cfg.c_grid.clone(), hidden_pct: vec![hidden_pct], rbf_gamma: vec![1.0] };
    let rows = Cohort::ALL
        .into_par_iter()
        .map(|cohort| {
            let [train, val, test] = cohort_pair_sets(registry, &run.split, cohort, run.seed)?;
            let seed = rng::derive_seed(run.seed, &format!("{method}/{cohort}"));
            let out = tune(method, cfg.kernel_for(method), &train, &val, &grid, seed, Weighting::Balanced)?;
            let sp = score_pairs(&out.best, &test)?;
            Ok(CohortMetrics { cohort, metrics: Metrics::compute(&sp, out.best.threshold())? })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_rows(rows)
}

/// Distance-baseline quality of one scope's embeddings.
pub fn evaluate_scope(cfg: &BenchConfig, run: &RunData, scope: Scope) -> Result<EvalReport> {
    let registry = cfg.registry(run, scope)?;
    let rows = Cohort::ALL
        .into_iter()
        .map(|cohort| {
            let [_, val, test] = cohort_pair_sets(&registry, &run.split, cohort, run.seed)?;
            let m = crate::tuning::PairModel::Distance { threshold: 0.0 };
            let (theta, _) = eer_calibrated_threshold(&score_pairs(&m, &val)?)?;
            Ok(CohortMetrics { cohort, metrics: Metrics::compute(&score_pairs(&m, &test)?, theta)? })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// `[run][scope]`, scopes in [`Scope::ALL`] order.
    pub features: Vec<Vec<EvalReport>>,
    pub feature_anova_f: f64,
    pub methods: Vec<Method>,
    /// `[run][method]` on GED features.
    pub method_reports: Vec<Vec<EvalReport>>,
    /// One row per (run, cohort) judge, ranking the methods by accuracy.
    pub ranks: Vec<Vec<f64>>,
    pub rank_sums: Vec<f64>,
    pub kendalls_w: f64,
    pub chi_square: f64,
    pub sweep_hidden: Vec<f64>,
    /// Mean test accuracy over runs and cohorts, `[hidden]`.
    pub sweep_welm: Vec<f64>,
    pub sweep_selm: Vec<f64>,
    pub sweep_t: f64,
}

/// Runs the full protocol; repetitions run in parallel and are assembled in
/// run order.
pub fn run_protocol(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("benchmark needs at least one run".into()));
    }
    let methods = protocol_methods();
    let sweep_methods = [Method::WelmConcat, Method::Selm(cfg.sweep_condition)];
    type RunOut = (Vec<EvalReport>, Vec<EvalReport>, Vec<[f64; 2]>);
    let per_run: Vec<RunOut> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let run = cfg.prepare_run(r)?;
            let features =
                Scope::ALL.into_iter().map(|s| evaluate_scope(cfg, &run, s)).collect::<Result<Vec<_>>>()?;
            let ged = cfg.registry(&run, Scope::GED)?;
            let reports = methods
                .iter()
                .map(|&m| evaluate_method(cfg, &run, &ged, m, cfg.hidden_pct))
                .collect::<Result<Vec<_>>>()?;
            let sweep = cfg
                .sweep_hidden
                .iter()
                .map(|&h| {
                    let w = evaluate_method(cfg, &run, &ged, sweep_methods[0], h)?.average.accuracy;
                    let s = evaluate_method(cfg, &run, &ged, sweep_methods[1], h)?.average.accuracy;
                    Ok([w, s])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((features, reports, sweep))
        })
        .collect::<Result<_>>()?;

    let mut groups = vec![Vec::new(); Scope::ALL.len()];
    for (features, _, _) in &per_run {
        for (g, rep) in groups.iter_mut().zip(features) {
            g.extend(rep.rows.iter().map(|r| r.metrics.auc));
        }
    }
    let feature_anova_f = anova_f(&groups)?;

    let mut ranks = Vec::new();
    for (_, reports, _) in &per_run {
        for (ci, _) in reports[0].rows.iter().enumerate() {
            let acc: Vec<f64> = reports.iter().map(|rep| rep.rows[ci].metrics.accuracy).collect();
            ranks.push(rank_descending(&acc));
        }
    }
    let rm = RankMatrix::new(ranks.clone())?;
    let w = kendalls_w(&rm)?;
    let chi_square = chi_square_from_w(w, rm.judges(), rm.candidates());

    let n = cfg.sweep_hidden.len();
    let col = |k: usize| -> Vec<f64> {
        (0..n).map(|h| per_run.iter().map(|(_, _, s)| s[h][k]).sum::<f64>() / per_run.len() as f64).collect()
    };
    let (sweep_welm, sweep_selm) = (col(0), col(1));
    let sweep_t = if n >= 2 { two_sample_t(&sweep_selm, &sweep_welm)? } else { f64::NAN };

    Ok(BenchReport {
        features: per_run.iter().map(|(f, _, _)| f.clone()).collect(),
        feature_anova_f,
        methods,
        method_reports: per_run.iter().map(|(_, m, _)| m.clone()).collect(),
        rank_sums: rm.rank_sums(),
        ranks,
        kendalls_w: w,
        chi_square,
        sweep_hidden: cfg.sweep_hidden.clone(),
        sweep_welm,
        sweep_selm,
        sweep_t,
    })
}

fn mean_over_runs(reports: &[&EvalReport]) -> (Vec<(String, f64, f64)>, f64, f64) {
    let mut cols = Vec::new();
    for (ci, row) in reports[0].rows.iter().enumerate() {
        let acc: Vec<f64> = reports.iter().map(|r| r.rows[ci].metrics.accuracy).collect();
        let (m, s) = mean_std(&acc);
        cols.push((row.cohort.to_string(), m, s));
    }
    let avg: Vec<f64> = reports.iter().map(|r| r.average.accuracy).collect();
    let (m, s) = mean_std(&avg);
    (cols, m, s)
}

impl BenchReport {
    /// Mean AUC per scope over runs, in [`Scope::ALL`] order.
    pub fn scope_mean_auc(&self) -> Vec<f64> {
        (0..Scope::ALL.len())
            .map(|s| self.features.iter().map(|f| f[s].average.auc).sum::<f64>() / self.features.len() as f64)
            .collect()
    }

    /// Plain-text tables: accuracy (mean ± std over runs) per cohort, ranks,
    /// concordance, ANOVA and the hidden-node sweep.
    pub fn to_text(&self) -> String {
        let mut out = String::from("format=selm-bench-report v1\n\n");
        let header = |out: &mut String, first: &str| {
            let names: Vec<String> = Cohort::ALL.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{first},{},average", names.join(","));
        };
        let cell = |m: f64, s: f64| format!("{m:.4}±{s:.4}");

        let _ = writeln!(out, "[feature accuracy, distance baseline]");
        header(&mut out, "scope");
        for (si, scope) in Scope::ALL.iter().enumerate() {
            let reps: Vec<&EvalReport> = self.features.iter().map(|f| &f[si]).collect();
            let (cols, m, s) = mean_over_runs(&reps);
            let cells: Vec<String> = cols.iter().map(|(_, m, s)| cell(*m, *s)).collect();
            let _ = writeln!(out, "{scope},{},{}", cells.join(","), cell(m, s));
        }
        let auc = self.scope_mean_auc();
        for (scope, a) in Scope::ALL.iter().zip(&auc) {
            let _ = writeln!(out, "mean_auc.{scope}={a}");
        }
        let _ = writeln!(out, "anova_f={}\n", self.feature_anova_f);

        let _ = writeln!(out, "[method accuracy, GED features]");
        header(&mut out, "method");
        for (mi, method) in self.methods.iter().enumerate() {
            let reps: Vec<&EvalReport> = self.method_reports.iter().map(|r| &r[mi]).collect();
            let (cols, m, s) = mean_over_runs(&reps);
            let cells: Vec<String> = cols.iter().map(|(_, m, s)| cell(*m, *s)).collect();
            let _ = writeln!(out, "{method},{},{}", cells.join(","), cell(m, s));
        }
        out.push('\n');

        let _ = writeln!(out, "[rank sums]");
        for (method, r) in self.methods.iter().zip(&self.rank_sums) {
            let _ = writeln!(out, "{method}={r}");
        }
        let _ = writeln!(out, "judges={}", self.ranks.len());
        let _ = writeln!(out, "kendalls_w={}", self.kendalls_w);
        let _ = writeln!(out, "chi_square={}\n", self.chi_square);

        let _ = writeln!(out, "[hidden sweep]");
        let _ = writeln!(out, "hidden_pct,welm_concat,selm");
        for ((h, w), s) in self.sweep_hidden.iter().zip(&self.sweep_welm).zip(&self.sweep_selm) {
            let _ = writeln!(out, "{h},{w},{s}");
        }
        let _ = writeln!(out, "t={}", self.sweep_t);
        out
    }
}
