use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};

use selm_core::bench::{benchmark_synthetic, run_protocol, BenchConfig};
use selm_core::data::{
    generate_synthetic_cohorts, load_embeddings, load_model, load_pairs, make_pairs, samples, save_embeddings,
    save_model, save_pairs, split_by_identity, Model, PairOptions, SplitSpec, SyntheticConfig,
};
use selm_core::eval::{repeated_runs_csv, EvalReport};
use selm_core::pipeline::{train_framework, FrameworkConfig};
use selm_core::rng;
use selm_core::tuning::{decades, report_pairs, tune, GridPoint, GridSpec, PairModel};
use selm_core::types::{IdentityRecord, Label};
use selm_core::welm::Weighting;

use crate::{
    BenchArgs, Command, EvalArgs, FrameworkArgs, GenerateArgs, PairsArgs, ReportFormat, SplitArgs, TrainArgs,
    VerifyArgs, WeightingArg,
};

pub(crate) fn run(command: Command, seed: u64) -> Result<ExitCode> {
    match command {
        Command::Generate(a) => generate(a, seed),
        Command::Split(a) => split(a, seed),
        Command::Pairs(a) => pairs(a, seed),
        Command::Train(a) => train(a, seed),
        Command::Framework(a) => framework(a, seed),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a, seed),
        Command::Verify(a) => return verify(a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn embeddings(path: &Path) -> Result<Vec<IdentityRecord>> {
    load_embeddings(path).with_context(|| format!("reading embeddings from {}", path.display()))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(a: GenerateArgs, seed: u64) -> Result<()> {
    let cfg = SyntheticConfig {
        identities_per_cohort: a.identities,
        poses_per_identity: a.poses,
        dim: a.dim,
        cohort_separation: a.separation,
        identity_spread: a.spread,
        pose_noise: a.noise,
        seed,
        ..SyntheticConfig::default()
    };
    let data = generate_synthetic_cohorts(&cfg)?;
    save_embeddings(&data, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    log::info!("wrote {} identities to {}", data.len(), a.out.display());
    Ok(())
}

fn split(a: SplitArgs, seed: u64) -> Result<()> {
    let data = embeddings(&a.input)?;
    let spec = SplitSpec { train: a.train, validation: a.validation, test: a.test, seed };
    let s = split_by_identity(&data, &spec).with_context(|| format!("splitting {}", a.input.display()))?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, part) in [("train", &s.train), ("validation", &s.validation), ("test", &s.test)] {
        let path = a.out_dir.join(format!("{name}.txt"));
        save_embeddings(part, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn pairs(a: PairsArgs, seed: u64) -> Result<()> {
    let data = embeddings(&a.input)?;
    let opts = PairOptions {
        negatives_per_positive: a.negatives_per_positive,
        same_cohort_negatives: a.same_cohort_negatives,
        seed,
    };
    let p = make_pairs(&data, &opts)?;
    save_pairs(&p, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn or_default(given: Vec<f64>, default: Vec<f64>) -> Vec<f64> {
    if given.is_empty() {
        default
    } else {
        given
    }
}

fn train(a: TrainArgs, seed: u64) -> Result<()> {
    let train = load_pairs(&a.train).with_context(|| format!("reading pairs from {}", a.train.display()))?;
    let val = load_pairs(&a.validation).with_context(|| format!("reading pairs from {}", a.validation.display()))?;
    let defaults = GridSpec::default();
    let grid = GridSpec {
        c: or_default(a.c, defaults.c),
        hidden_pct: or_default(a.hidden, defaults.hidden_pct),
        rbf_gamma: or_default(a.gamma, decades(-6, 6)),
    };
    let weighting = match a.weighting {
        WeightingArg::Balanced => Weighting::Balanced,
        WeightingArg::Uniform => Weighting::Uniform,
    };
    let kernel = a.kernel.kernel(grid.rbf_gamma[0]);
    let out = tune(a.method, kernel, &samples(&train), &samples(&val), &grid, seed, weighting)?;
    let best = &out.rows[out.best_index];
    log::info!("best grid point C={} hidden={}% accuracy={}", best.point.c, best.point.hidden_pct, best.accuracy);
    save_model(&Model::Pair(out.best.clone()), &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let log_path = a.log.unwrap_or_else(|| with_suffix(&a.out, ".tuning.csv"));
    fs::write(&log_path, out.log_csv()).with_context(|| format!("writing {}", log_path.display()))?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn framework(a: FrameworkArgs, seed: u64) -> Result<()> {
    let data = embeddings(&a.input)?;
    let s = split_by_identity(&data, &SplitSpec { seed, ..SplitSpec::default() })?;
    let cfg = FrameworkConfig {
        scope: a.scope,
        method: a.method,
        verifier: GridPoint { c: a.c, hidden_pct: a.hidden, kernel: a.kernel.kernel(1.0) },
        negatives_per_positive: a.negatives_per_positive,
        seed,
        ..FrameworkConfig::default()
    };
    let fw = train_framework(&s, &cfg)?;
    save_model(&Model::Framework(fw), &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = a.test_pairs {
        let opts = PairOptions { seed: rng::derive_seed(seed, "test"), ..PairOptions::default() };
        save_pairs(&make_pairs(&s.test, &opts)?, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

enum Verifier {
    Pair(PairModel),
    Framework(Box<selm_core::pipeline::VerificationFramework>),
}

fn load_verifier(path: &Path) -> Result<Verifier> {
    let model = load_model(path).with_context(|| format!("reading model {}", path.display()))?;
    Ok(match model {
        Model::Pair(m) => Verifier::Pair(m),
        Model::Selm(m) => Verifier::Pair(PairModel::Selm(m)),
        Model::Framework(f) => Verifier::Framework(Box::new(f)),
        other => bail!("{} holds a {} model, which cannot verify pairs", path.display(), other.kind()),
    })
}

fn eval(a: EvalArgs) -> Result<()> {
    let test = load_pairs(&a.pairs).with_context(|| format!("reading pairs from {}", a.pairs.display()))?;
    let reports = a
        .models
        .iter()
        .map(|path| {
            let report = match load_verifier(path)? {
                Verifier::Pair(m) => report_pairs(&m, &test),
                Verifier::Framework(f) => f.report(&test),
            };
            report.with_context(|| format!("evaluating {}", path.display()))
        })
        .collect::<Result<Vec<EvalReport>>>()?;
    let text = match (reports.as_slice(), a.format) {
        ([one], ReportFormat::Csv) => one.to_csv(),
        ([one], ReportFormat::Kv) => one.to_kv(),
        (_, ReportFormat::Csv) => repeated_runs_csv(&reports),
        (_, ReportFormat::Kv) => bail!("key=value output takes a single model"),
    };
    write_text(a.out.as_deref(), &text)
}

fn bench(a: BenchArgs, seed: u64) -> Result<()> {
    let mut cfg = BenchConfig { runs: a.runs, seed, ..BenchConfig::default() };
    cfg.synthetic = SyntheticConfig { identities_per_cohort: a.identities, ..benchmark_synthetic(seed) };
    if let Some(e) = a.epochs {
        cfg.triplet.epochs = e;
    }
    let report = run_protocol(&cfg)?;
    write_text(a.out.as_deref(), &report.to_text())
}

/// `identity` or `identity:pose`.
fn find_row<'a>(data: &'a [IdentityRecord], spec: &str) -> Result<(&'a IdentityRecord, usize)> {
    let (id, pose) = match spec.rsplit_once(':') {
        Some((id, p)) => (id, p.parse::<usize>().with_context(|| format!("bad pose index in '{spec}'"))?),
        None => (spec, 0),
    };
    let rec = data.iter().find(|r| r.identity_id == id).ok_or_else(|| anyhow!("no identity '{id}'"))?;
    if pose >= rec.poses.len() {
        bail!("identity '{id}' has {} poses, asked for pose {pose}", rec.poses.len());
    }
    Ok((rec, pose))
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let verifier = load_verifier(&a.model)?;
    let data = embeddings(&a.embeddings)?;
    let (ra, pa) = find_row(&data, &a.a)?;
    let (rb, pb) = find_row(&data, &a.b)?;
    let (x, y) = (&ra.poses[pa], &rb.poses[pb]);
    let (decision, score, shortcut, ca, cb) = match verifier {
        Verifier::Pair(m) => {
            let score = m.score(x, y)?;
            (Label::from_decision(score >= m.threshold()), score, false, ra.cohort, rb.cohort)
        }
        Verifier::Framework(f) => {
            let r = f.verify(x, y)?;
            (r.decision, r.score, r.shortcut, r.cohort_a, r.cohort_b)
        }
    };
    let word = if decision == Label::Genuine { "GENUINE" } else { "IMPOSTOR" };
    println!("{word} score={score} shortcut={shortcut} cohortA={ca} cohortB={cb}");
    Ok(if decision == Label::Genuine { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
