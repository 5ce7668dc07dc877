use selm_core::triplet::*;
use selm_core::types::Embedding;
use approx::assert_abs_diff_eq;
use selm_core::Error;
use selm_core::types::{Cohort, IdentityRecord};

#[test]
fn identity_net_distances() {
    let net = TripletNet::identity(2);
    assert_eq!(triplet_distances(&net, &[0., 0.], &[3., 4.], &[6., 8.]).unwrap(), (25.0, 100.0));
    assert_eq!(triplet_distances(&net, &[1., 2.], &[1., 2.], &[6., 8.]).unwrap().0, 0.0);
    assert_eq!(net.embed(&[0.25, -7.0]).unwrap(), vec![0.25, -7.0]);
}

#[test]
fn loss_examples() {
    assert_eq!(triplet_loss(1.0, 3.0, 1.0), 0.0);
    assert_eq!(triplet_loss(2.0, 2.0, 0.5), 0.5);
    assert_eq!(triplet_loss(2.0, 2.0, 0.0), 0.0);
}

#[test]
fn random_net_is_deterministic_and_finite() {
    let net = TripletNet::new(&[3, 5, 4, 2], 11).unwrap();
    assert_eq!(net, TripletNet::new(&[3, 5, 4, 2], 11).unwrap());
    let x = [1e6, -3.0, 0.5];
    let a = net.embed(&x).unwrap();
    assert_eq!(a, net.embed(&x).unwrap());
    assert!(a.iter().all(|v| v.is_finite()));
    let (dp, dn) = triplet_distances(&net, &x, &[0.1, 0.2, 0.3], &[-1.0, 2.0, 9.0]).unwrap();
    assert!(dp >= 0.0 && dn >= 0.0);
    assert!(net.embed(&[1.0]).is_err());
}

#[test]
fn gradient_matches_central_differences() {
    let mut net = TripletNet::new(&[3, 5, 4, 2], 3).unwrap();
    let xs: Vec<[f64; 3]> = vec![
        [0.2, -0.4, 0.9],
        [0.1, -0.5, 1.0],
        [-0.8, 0.3, 0.1],
        [0.5, 0.5, -0.5],
        [0.45, 0.55, -0.4],
        [0.0, -1.0, 0.3],
        [1.0, 0.2, 0.2],
        [0.9, 0.1, 0.25],
        [-0.3, -0.3, -0.9],
    ];
    let batch: Vec<Triplet<'_>> = xs
        .chunks(3)
        .map(|c| Triplet { anchor: &c[0], positive: &c[1], negative: &c[2] })
        .collect();
    // large margin keeps every hinge active, away from the kink
    let alpha = 2.0;
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
        let rel = (grad[i] - fd).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
        assert!(rel < 1e-4 || (grad[i] - fd).abs() < 1e-9, "param {i}: analytic {} fd {fd}", grad[i]);
    }
    net.set_parameters(&base).unwrap();
}

fn toy(ids: usize, poses: usize) -> Vec<IdentityRecord> {
    (0..ids)
        .map(|i| IdentityRecord {
            identity_id: format!("id{i}"),
            cohort: Cohort::ALL[i % 6],
            poses: (0..poses)
                .map(|p| Embedding::new(vec![i as f64, (i * 3 % 5) as f64, 0.1 * p as f64]).unwrap())
                .collect(),
        })
        .collect()
}

#[test]
fn zero_epochs_returns_initial_net() {
    let ds = toy(4, 3);
    let cfg = TripletConfig { epochs: 0, hidden: vec![4], out_dim: 2, seed: 8, ..Default::default() };
    let net = train_embedder(&ds, |_| true, &cfg).unwrap();
    let init = TripletNet::new(&[3, 4, 2], 8).unwrap();
    assert_eq!(net.layers, init.layers);
}

#[test]
fn training_is_deterministic() {
    let ds = toy(6, 3);
    let cfg = TripletConfig { epochs: 5, hidden: vec![4], out_dim: 2, seed: 8, ..Default::default() };
    let a = train_embedder(&ds, |_| true, &cfg).unwrap();
    assert_eq!(a, train_embedder(&ds, |_| true, &cfg).unwrap());
}

#[test]
fn too_few_identities_is_an_error() {
    let ds = toy(1, 3);
    assert!(matches!(
        train_embedder(&ds, |_| true, &TripletConfig::default()),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn registry_cardinality_and_missing_cohort() {
    let ds = toy(12, 2);
    let cfg = TripletConfig { epochs: 1, hidden: vec![3], out_dim: 2, ..Default::default() };
    assert_eq!(build_registry(&ds, Scope::GED, &cfg).unwrap().models.len(), 6);
    assert_eq!(build_registry(&ds, Scope::GD, &cfg).unwrap().models.len(), 2);
    assert_eq!(build_registry(&ds, Scope::SI, &cfg).unwrap().models.len(), 1);
    let missing: Vec<_> = ds.into_iter().filter(|r| r.cohort != Cohort::ALL[4]).collect();
    match build_registry(&missing, Scope::GED, &cfg) {
        Err(Error::MissingCohort(name)) => assert_eq!(name, "male-black"),
        other => panic!("expected missing cohort, got {other:?}"),
    }
}

#[test]
fn equalise_truncates_to_smallest_cohort() {
    let mut ds = toy(12, 2);
    ds.retain(|r| r.identity_id != "id0");
    let eq = equalise_cohorts(&ds);
    assert_eq!(eq.len(), 6);
}

#[test]
fn shared_weights_give_identical_embeddings() {
    let net = TripletNet::new(&[2, 3, 2], 1).unwrap();
    let x = [0.3, 0.7];
    let t = Triplet { anchor: &x, positive: &x, negative: &[1.0, 1.0] };
    let (dp, _) = triplet_distances(&net, t.anchor, t.positive, t.negative).unwrap();
    assert_eq!(dp, 0.0);
    assert_abs_diff_eq!(mean_triplet_loss(&net, &[t], 0.0).unwrap(), 0.0);
}
