use std::collections::HashSet;

use selm_core::types::*;

fn rec(id: &str, poses: &[&[f64]]) -> IdentityRecord {
    IdentityRecord {
        identity_id: id.into(),
        cohort: Cohort::ALL[0],
        poses: poses.iter().map(|p| Embedding::new(p.to_vec()).unwrap()).collect(),
    }
}

#[test]
fn well_formed_dataset_has_no_violations() {
    let ds = vec![rec("a", &[&[1.0, 2.0], &[1.5, 2.5]]), rec("b", &[&[0.0, 1.0]])];
    assert!(validate_dataset(&ds).is_empty());
}

#[test]
fn duplicate_id_is_reported_once() {
    let ds = vec![rec("a", &[&[1.0]]), rec("a", &[&[2.0]])];
    let v = validate_dataset(&ds);
    assert_eq!(v, vec![Violation::DuplicateId { identity_id: "a".into() }]);
}

#[test]
fn mixed_dimensions_are_reported_once() {
    let ds = vec![rec("a", &[&[0.0; 4]]), rec("b", &[&[0.0; 5]])];
    let v = validate_dataset(&ds);
    assert_eq!(v.len(), 1);
    assert!(matches!(v[0], Violation::DimensionMismatch { expected: 4, actual: 5, .. }));
}

#[test]
fn empty_poses_reported() {
    let ds = vec![rec("a", &[])];
    assert_eq!(validate_dataset(&ds), vec![Violation::EmptyPoses { identity_id: "a".into() }]);
}

#[test]
fn embedding_rejects_nan_and_empty() {
    assert!(Embedding::new(vec![]).is_err());
    assert!(Embedding::new(vec![1.0, f64::NAN]).is_err());
}

#[test]
fn six_distinct_cohorts_round_trip_through_tags() {
    let set: HashSet<_> = Cohort::ALL.iter().collect();
    assert_eq!(set.len(), 6);
    for (i, c) in Cohort::ALL.iter().enumerate() {
        assert_eq!(c.index(), i);
        assert_eq!(c.to_string().parse::<Cohort>().unwrap(), *c);
    }
}
