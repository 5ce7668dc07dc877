use selm_core::pipeline::*;
use selm_core::data::{generate_synthetic_cohorts, split_by_identity, SplitSpec, SyntheticConfig};
use selm_core::Error;
use selm_core::triplet::{Scope, TripletConfig};
use selm_core::types::{IdentityRecord, Label};

fn dataset(seed: u64) -> Vec<IdentityRecord> {
    generate_synthetic_cohorts(&SyntheticConfig { identities_per_cohort: 20, seed, ..Default::default() }).unwrap()
}

fn small_config() -> FrameworkConfig {
    FrameworkConfig {
        triplet: TripletConfig { epochs: 30, hidden: vec![16], ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn classifier_separates_well_spread_cohorts() {
    let split = split_by_identity(&dataset(1), &SplitSpec { seed: 1, ..Default::default() }).unwrap();
    let clf = train_cohort_classifier(&split.train, &split.validation, &ClassifierConfig::default()).unwrap();
    assert!(clf.accuracy(&split.validation).unwrap() >= 0.99);
    let again = train_cohort_classifier(&split.train, &split.validation, &ClassifierConfig::default()).unwrap();
    assert_eq!(clf, again);
}

#[test]
fn classifier_requires_every_cohort() {
    let ds: Vec<_> = dataset(1).into_iter().filter(|r| r.cohort.to_string() != "male-black").collect();
    match train_cohort_classifier(&ds, &[], &ClassifierConfig::default()) {
        Err(Error::MissingCohort(c)) => assert_eq!(c, "male-black"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn distance_baseline_cases() {
    let (l, s) = distance_baseline(&[1.0, 2.0], &[1.0, 2.0], 0.0).unwrap();
    assert_eq!((l, s), (Label::Genuine, 0.0));
    let (l, _) = distance_baseline(&[0.0, 0.0], &[30.0, 40.0], -1.0).unwrap();
    assert_eq!(l, Label::Impostor);
    let a = [0.3, -1.2, 4.0];
    let b = [2.0, 0.5, -0.1];
    assert_eq!(distance_baseline(&a, &b, 0.0).unwrap().1, distance_baseline(&b, &a, 0.0).unwrap().1);
}

#[test]
fn self_match_genuine_and_cross_cohort_shortcut() {
    let ds = dataset(2);
    let split = split_by_identity(&ds, &SplitSpec { seed: 2, ..Default::default() }).unwrap();
    let fw = train_framework(&split, &small_config()).unwrap();
    let a = &split.test[0].poses[0];
    let r = fw.verify(a, a).unwrap();
    assert!(!r.shortcut);
    assert_eq!(r.decision, Label::Genuine);

    let other = split.test.iter().find(|r| r.cohort != split.test[0].cohort).unwrap();
    let calls = fw.verifier_calls();
    let r = fw.verify(a, &other.poses[0]).unwrap();
    assert!(r.shortcut);
    assert_eq!(r.decision, Label::Impostor);
    assert_eq!(r.score, SHORTCUT_SCORE);
    assert_eq!(fw.verifier_calls(), calls);
}

#[test]
fn mismatched_verifier_keys_rejected() {
    let ds = dataset(3);
    let split = split_by_identity(&ds, &SplitSpec::default()).unwrap();
    let fw = train_framework(&split, &FrameworkConfig { scope: Scope::SI, ..small_config() }).unwrap();
    let mut verifiers = fw.verifiers.clone();
    verifiers.push(verifiers[0].clone());
    assert!(VerificationFramework::new(fw.classifier.clone(), fw.registry.clone(), verifiers).is_err());
}
