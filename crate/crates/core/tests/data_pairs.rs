use selm_core::data::*;
use selm_core::data::{generate_synthetic_cohorts, SyntheticConfig};
use selm_core::Error;
use selm_core::types::Label;

#[test]
fn two_identities_three_poses_give_six_genuine() {
    let ds: Vec<_> = generate_synthetic_cohorts(&SyntheticConfig { identities_per_cohort: 1, ..Default::default() })
        .unwrap()
        .into_iter()
        .take(2)
        .collect();
    let pairs = make_pairs(&ds, &PairOptions::default()).unwrap();
    let pos = pairs.iter().filter(|p| p.sample.label == Label::Genuine).count();
    let neg = pairs.len() - pos;
    assert_eq!(pos, 6);
    assert_eq!(neg, 6);
    for p in &pairs {
        let same = p.a_ref.identity_id == p.b_ref.identity_id;
        assert_eq!(same, p.sample.label == Label::Genuine);
    }
}

#[test]
fn imbalanced_and_same_cohort_options() {
    let ds = generate_synthetic_cohorts(&SyntheticConfig { identities_per_cohort: 3, ..Default::default() }).unwrap();
    let opts = PairOptions { negatives_per_positive: 9.0, same_cohort_negatives: true, seed: 2 };
    let pairs = make_pairs(&ds, &opts).unwrap();
    let pos = pairs.iter().filter(|p| p.sample.label == Label::Genuine).count();
    assert_eq!(pairs.len() - pos, 9 * pos);
    assert!(pairs.iter().all(|p| p.a_ref.cohort == p.b_ref.cohort));
    assert_eq!(pairs, make_pairs(&ds, &opts).unwrap());
}

#[test]
fn single_pose_identity_is_named() {
    let mut ds = generate_synthetic_cohorts(&SyntheticConfig { identities_per_cohort: 1, ..Default::default() }).unwrap();
    ds[2].poses.truncate(1);
    match make_pairs(&ds, &PairOptions::default()) {
        Err(Error::InsufficientData(m)) => assert!(m.contains(&ds[2].identity_id)),
        other => panic!("{other:?}"),
    }
}
