//! Randomised checks of the invariants every component must keep.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selm_core::data::{
    generate_synthetic_cohorts, make_pairs, model_to_string, read_embeddings, samples, split_by_identity,
    write_embeddings, Model, PairOptions, SplitSpec, SyntheticConfig,
};
use selm_core::elm::{concat_pair, elm_train, ElmParams};
use selm_core::kernels::Kernel;
use selm_core::pipeline::{train_framework, FrameworkConfig, VerificationFramework};
use selm_core::selm::{selm_train, siamese_combine, SelmParams, SiameseCondition};
use selm_core::solver::{ridge_solve, RidgeProblem};
use selm_core::triplet::{
    loss_and_gradient, mean_triplet_loss, triplet_distances, Triplet, TripletConfig, TripletNet,
};
use selm_core::tuning::PairModel;
use selm_core::types::{dataset_dim, validate_dataset, Cohort, Embedding, IdentityRecord, Label, PairSample};
use selm_core::welm::{welm_train, WelmParams, Weighting};

fn u(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

fn matrix(r: &mut ChaCha8Rng, n: usize, l: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..l).map(|_| u(r, -1.0, 1.0)).collect()).collect()
}

fn alternating(n: usize) -> Vec<Label> {
    (0..n).map(|i| Label::from_decision(i % 2 == 0)).collect()
}

fn random_pairs(r: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<PairSample> {
    alternating(n)
        .into_iter()
        .map(|label| {
            let mut v = || Embedding::new((0..d).map(|_| u(r, -2.0, 2.0)).collect()).unwrap();
            PairSample::new(v(), v(), label).unwrap()
        })
        .collect()
}

fn kernel_of(cosine: bool) -> Kernel {
    if cosine {
        Kernel::Cosine
    } else {
        Kernel::Euclidean
    }
}

/// Independent oracle: accelerated gradient descent on the ridge objective.
fn descend(h: &[Vec<f64>], t: &[f64], c: f64) -> Vec<f64> {
    let l = h[0].len();
    let grad = |b: &[f64]| -> Vec<f64> {
        let mut g: Vec<f64> = b.iter().map(|v| v / c).collect();
        for (row, ti) in h.iter().zip(t) {
            let res: f64 = row.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() - ti;
            for (gk, xk) in g.iter_mut().zip(row) {
                *gk += res * xk;
            }
        }
        g
    };
    let big_l: f64 = h.iter().flatten().map(|x| x * x).sum::<f64>() + 1.0 / c;
    let q = (1.0 / c / big_l).sqrt();
    let momentum = (1.0 - q) / (1.0 + q);
    let (mut x, mut prev) = (vec![0.0; l], vec![0.0; l]);
    for _ in 0..1_000_000 {
        let y: Vec<f64> = x.iter().zip(&prev).map(|(a, b)| a + momentum * (a - b)).collect();
        let g = grad(&y);
        prev = x;
        x = y.iter().zip(&g).map(|(a, b)| a - b / big_l).collect();
        if grad(&x).iter().all(|v| v.abs() < 1e-13) {
            break;
        }
    }
    x
}

fn solve(h: &[Vec<f64>], t: &[f64], c: f64) -> (DVector<f64>, f64, f64) {
    let hm = DMatrix::from_fn(h.len(), h[0].len(), |i, j| h[i][j]);
    let tv = DVector::from_column_slice(t);
    let problem = RidgeProblem::new(&hm, &tv, c).unwrap();
    let beta = ridge_solve(&problem).unwrap();
    let (res, rhs) = problem.residual(&beta);
    (beta, res, rhs)
}

/// A structurally valid dataset of arbitrary values.
fn random_dataset(seed: u64, d: usize, per_cohort: usize, poses: usize) -> Vec<IdentityRecord> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for cohort in Cohort::ALL {
        for k in 0..per_cohort {
            let poses = (0..poses).map(|_| Embedding::new((0..d).map(|_| u(&mut r, -5.0, 5.0)).collect()).unwrap());
            out.push(IdentityRecord { identity_id: format!("{cohort}-{k}"), cohort, poses: poses.collect() });
        }
    }
    out
}

fn framework() -> &'static VerificationFramework {
    static FW: OnceLock<VerificationFramework> = OnceLock::new();
    FW.get_or_init(|| {
        let data = generate_synthetic_cohorts(&SyntheticConfig { identities_per_cohort: 20, seed: 21, ..Default::default() })
            .unwrap();
        let split = split_by_identity(&data, &SplitSpec { seed: 21, ..Default::default() }).unwrap();
        let cfg = FrameworkConfig {
            triplet: TripletConfig { epochs: 30, hidden: vec![16], ..Default::default() },
            seed: 21,
            ..Default::default()
        };
        train_framework(&split, &cfg).unwrap()
    })
}

fn probe_dataset() -> &'static Vec<IdentityRecord> {
    static DS: OnceLock<Vec<IdentityRecord>> = OnceLock::new();
    DS.get_or_init(|| {
        generate_synthetic_cohorts(&SyntheticConfig { identities_per_cohort: 20, seed: 21, ..Default::default() }).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn valid_datasets_flow_through_every_stage(
        seed in any::<u64>(), d in 1usize..6, per_cohort in 2usize..4, poses in 2usize..4,
    ) {
        let ds = random_dataset(seed, d, per_cohort, poses);
        prop_assert!(validate_dataset(&ds).is_empty());
        prop_assert_eq!(dataset_dim(&ds), Some(d));

        let mut text = Vec::new();
        write_embeddings(&ds, &mut text).unwrap();
        prop_assert_eq!(&read_embeddings(text.as_slice()).unwrap(), &ds);

        let pairs = make_pairs(&ds, &PairOptions { seed, ..Default::default() }).unwrap();
        let sp = samples(&pairs);
        prop_assert!(sp.iter().all(|p| p.a.dim() == d && p.b.dim() == d));
        let selm = selm_train(&sp, &SelmParams {
            hidden_pct: 50.0, c: 1.0, condition: SiameseCondition::Dist, kernel: Kernel::Euclidean,
            seed, weighting: Weighting::Balanced,
        }).unwrap();
        prop_assert!(selm.predict(&sp[0].a, &sp[0].b).unwrap().is_finite());
        let x: Vec<Vec<f64>> = sp.iter().map(concat_pair).collect();
        let labels: Vec<Label> = sp.iter().map(|p| p.label).collect();
        let elm = elm_train(&x, &labels, &ElmParams { hidden_pct: 50.0, c: 1.0, kernel: Kernel::Sigmoid, seed }).unwrap();
        prop_assert!(elm.predict(&x[0]).unwrap().is_finite());
        let net = TripletNet::new(&[d, 4, 2], seed).unwrap();
        prop_assert_eq!(net.embed(&ds[0].poses[0]).unwrap().len(), 2);
    }

    #[test]
    fn ridge_residual_is_tiny(seed in any::<u64>(), n in 1usize..=50, l in 1usize..=10, log_c in -3.0..3.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h = matrix(&mut r, n, l);
        let t: Vec<f64> = (0..n).map(|_| u(&mut r, -1.0, 1.0)).collect();
        let (_, res, rhs) = solve(&h, &t, 10f64.powf(log_c));
        prop_assert!(res <= 1e-8 * (1.0 + rhs), "residual {} vs rhs {}", res, rhs);
    }

    #[test]
    fn ridge_agrees_with_gradient_descent(seed in any::<u64>(), n in 1usize..=50, l in 1usize..=10, log_c in -1.0..1.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h = matrix(&mut r, n, l);
        let t: Vec<f64> = (0..n).map(|_| u(&mut r, -1.0, 1.0)).collect();
        let c = 10f64.powf(log_c);
        let (beta, _, _) = solve(&h, &t, c);
        for (a, b) in beta.iter().zip(descend(&h, &t, c)) {
            prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn ridge_shrinks_monotonically(seed in any::<u64>(), n in 1usize..=50, l in 1usize..=10,
                                   log_c in -3.0..3.0f64, step in 0.0..3.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h = matrix(&mut r, n, l);
        let t: Vec<f64> = (0..n).map(|_| u(&mut r, -1.0, 1.0)).collect();
        let (small, _, _) = solve(&h, &t, 10f64.powf(log_c));
        let (large, _, _) = solve(&h, &t, 10f64.powf(log_c + step));
        prop_assert!(small.norm() <= large.norm() * (1.0 + 1e-10) + 1e-14, "{} > {}", small.norm(), large.norm());
    }

    // Ridge leaves a residual of λ/(σ²+λ) along each singular direction of H
    // (λ = 1/C), so the fit is only guaranteed once σ_min² ≥ 99λ; cases
    // below that are discarded rather than asserted.
    #[test]
    fn elm_interpolates_with_every_sample_as_a_hidden_node(
        seed in any::<u64>(), n in 2usize..=50, log_c in 6.0..10.0f64,
    ) {
        let ds = generate_synthetic_cohorts(&SyntheticConfig { seed, ..Default::default() }).unwrap();
        let mut rows: Vec<Vec<f64>> = ds.iter().flat_map(|r| r.poses.iter().map(|p| p.to_vec())).collect();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(rows.as_mut_slice(), &mut r);
        rows.truncate(n);
        let y: Vec<Label> = (0..n).map(|i| Label::from_decision(i == 0 || (i > 1 && r.random_bool(0.5)))).collect();
        let c = 10f64.powf(log_c);
        let m = elm_train(&rows, &y, &ElmParams { hidden_pct: 100.0, c, kernel: Kernel::Sigmoid, seed }).unwrap();

        let h: Vec<Vec<f64>> = rows.iter().map(|x| m.projection.activations(Kernel::Sigmoid, x).unwrap()).collect();
        let hm = DMatrix::from_fn(n, h[0].len(), |i, j| h[i][j]);
        let sigma_min = hm.singular_values().min();
        prop_assume!(sigma_min * sigma_min >= 99.0 / c);

        let mse = rows.iter().zip(&y).map(|(row, l)| (m.predict(row).unwrap() - l.target()).powi(2)).sum::<f64>() / n as f64;
        prop_assert!(mse <= 1e-4, "mse {}", mse);
    }

    #[test]
    fn welm_balanced_weights_change_nothing(
        seed in any::<u64>(), half in 2usize..15, d in 1usize..6, cosine in any::<bool>(),
        hidden_pct in 10.0..100.0f64, log_c in -2.0..4.0f64,
    ) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = matrix(&mut r, 2 * half, d);
        let y = alternating(2 * half);
        let p = WelmParams { hidden_pct, c: 10f64.powf(log_c), kernel: kernel_of(cosine), seed, weighting: Weighting::Balanced };
        let weighted = welm_train(&x, &y, &p).unwrap();
        let uniform = welm_train(&x, &y, &WelmParams { weighting: Weighting::Uniform, ..p }).unwrap();
        prop_assert_eq!(&weighted, &uniform);
        for anchor in &weighted.anchors {
            let bits: Vec<u64> = anchor.iter().map(|v| v.to_bits()).collect();
            prop_assert!(x.iter().any(|row| row.iter().map(|v| v.to_bits()).collect::<Vec<_>>() == bits));
        }
    }

    #[test]
    fn selm_is_swap_invariant_and_commutes_with_preprocessing(
        seed in any::<u64>(), n in 4usize..30, d in 1usize..6, cond in 0usize..4, cosine in any::<bool>(),
        hidden_pct in 10.0..100.0f64,
    ) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let pairs = random_pairs(&mut r, n, d);
        let condition = SiameseCondition::ALL[cond];
        let p = SelmParams { hidden_pct, c: 10.0, condition, kernel: kernel_of(cosine), seed, weighting: Weighting::Balanced };
        let m = selm_train(&pairs, &p).unwrap();
        for probe in random_pairs(&mut r, 10, d) {
            let ab = m.predict(&probe.a, &probe.b).unwrap();
            let ba = m.predict(&probe.b, &probe.a).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
        }
        let rows: Vec<Vec<f64>> = pairs.iter().map(|q| siamese_combine(condition, &q.a, &q.b).unwrap()).collect();
        prop_assert!(rows.iter().all(|row| row.len() == d));
        let labels: Vec<Label> = pairs.iter().map(|q| q.label).collect();
        prop_assert_eq!(&m.backbone, &welm_train(&rows, &labels, &p.backbone()).unwrap());
    }

    #[test]
    fn triplet_gradient_matches_central_differences(seed in any::<u64>(), alpha in 0.0..2.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut net = TripletNet::new(&[3, 5, 4, 2], seed).unwrap();
        let xs = matrix(&mut r, 9, 3);
        let batch: Vec<Triplet<'_>> = xs
            .chunks(3)
            .map(|c| Triplet { anchor: &c[0], positive: &c[1], negative: &c[2] })
            .collect();
        for t in &batch {
            let (dp, dn) = triplet_distances(&net, t.anchor, t.positive, t.negative).unwrap();
            prop_assume!((dp - dn + alpha).abs() > 1e-6);
        }
        let (_, grad) = loss_and_gradient(&net, &batch, alpha).unwrap();
        let base = net.parameters();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            net.set_parameters(&p).unwrap();
            let up = mean_triplet_loss(&net, &batch, alpha).unwrap();
            p[i] -= 2.0 * h;
            net.set_parameters(&p).unwrap();
            let down = mean_triplet_loss(&net, &batch, alpha).unwrap();
            let fd = (up - down) / (2.0 * h);
            let err = (grad[i] - fd).abs();
            prop_assert!(err / fd.abs().max(grad[i].abs()).max(1e-8) < 1e-4 || err < 1e-9,
                "param {}: analytic {} fd {}", i, grad[i], fd);
        }
    }

    #[test]
    fn one_net_embeds_both_sides_identically(seed in any::<u64>(), d in 1usize..6, out in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let net = TripletNet::new(&[d, 6, out], seed).unwrap();
        let x: Vec<f64> = (0..d).map(|_| u(&mut r, -3.0, 3.0)).collect();
        let neg: Vec<f64> = (0..d).map(|_| u(&mut r, -3.0, 3.0)).collect();
        let (dp, _) = triplet_distances(&net, &x, &x, &neg).unwrap();
        prop_assert_eq!(dp, 0.0);
        prop_assert_eq!(net.embed(&x).unwrap(), net.embed(&x).unwrap());
    }

    #[test]
    fn generation_split_and_pairing_depend_only_on_the_seed(seed in any::<u64>()) {
        let cfg = SyntheticConfig { identities_per_cohort: 10, seed, ..Default::default() };
        let a = generate_synthetic_cohorts(&cfg).unwrap();
        prop_assert_eq!(&a, &generate_synthetic_cohorts(&cfg).unwrap());
        let spec = SplitSpec { seed, ..Default::default() };
        prop_assert_eq!(split_by_identity(&a, &spec).unwrap(), split_by_identity(&a, &spec).unwrap());
        let opts = PairOptions { seed, ..Default::default() };
        prop_assert_eq!(make_pairs(&a, &opts).unwrap(), make_pairs(&a, &opts).unwrap());
    }

    #[test]
    fn saved_models_declare_their_version_first(threshold in -1e6..1e6f64, seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let selm = selm_train(&random_pairs(&mut r, 6, 3), &SelmParams {
            hidden_pct: 50.0, c: 1.0, condition: SiameseCondition::Sum, kernel: Kernel::Cosine,
            seed, weighting: Weighting::Balanced,
        }).unwrap();
        for model in [Model::Pair(PairModel::Distance { threshold }), Model::Selm(selm)] {
            let text = model_to_string(&model).unwrap();
            prop_assert!(text.starts_with("{\n  \"format_version\": 1,"), "{}", text);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn framework_routing_shortcut_and_symmetry(
        i in 0usize..120, j in 0usize..120, pi in 0usize..3, pj in 0usize..3, jitter in 0.0..1.5f64, seed in any::<u64>(),
    ) {
        let ds = probe_dataset();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut shake = |v: &[f64]| v.iter().map(|x| x + u(&mut r, -jitter, jitter + 1e-12)).collect::<Vec<f64>>();
        let a = shake(&ds[i].poses[pi]);
        let b = shake(&ds[j].poses[pj]);

        let fw = framework().clone();
        let before = fw.verifier_calls();
        let ab = fw.verify(&a, &b).unwrap();
        let invoked = fw.verifier_calls() - before;
        if ab.shortcut {
            prop_assert_eq!(invoked, 0);
            prop_assert_eq!(ab.decision, Label::Impostor);
        } else {
            prop_assert_eq!(invoked, 1);
            let key = fw.scope().key_for(ab.cohort_a);
            prop_assert_eq!(key, fw.scope().key_for(ab.cohort_b));
            let net = fw.registry.get(key).unwrap();
            let direct = fw.verifier(key).unwrap().score(&net.embed(&a).unwrap(), &net.embed(&b).unwrap()).unwrap();
            prop_assert_eq!(ab.score.to_bits(), direct.to_bits());
        }

        let ba = fw.verify(&b, &a).unwrap();
        prop_assert_eq!(ab.decision, ba.decision);
        prop_assert_eq!(ab.score.to_bits(), ba.score.to_bits());
        prop_assert_eq!(ab.shortcut, ba.shortcut);
    }
}
