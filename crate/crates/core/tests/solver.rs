use selm_core::solver::*;
use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use selm_core::Error;

#[test]
fn identity_with_negligible_regularisation() {
    let h = DMatrix::identity(2, 2);
    let t = DVector::from_vec(vec![1.0, 0.0]);
    let beta = ridge(&h, &t, 1e12).unwrap();
    assert_abs_diff_eq!(beta[0], 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(beta[1], 0.0, epsilon = 1e-6);
}

#[test]
fn zero_targets_give_exact_zero() {
    let h = DMatrix::from_row_slice(3, 2, &[0.3, -1.2, 2.0, 0.5, 0.1, 0.9]);
    let t = DVector::zeros(3);
    let beta = ridge(&h, &t, 3.0).unwrap();
    assert!(beta.iter().all(|&b| b == 0.0));
}

#[test]
fn matches_hand_elimination_on_small_system() {
    // (I + HᵀH) = [[3,1],[1,3]], Hᵀt = (3,3)  →  β = (3/4, 3/4)
    let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    let t = DVector::from_vec(vec![1.0, 2.0, 1.0]);
    let beta = ridge(&h, &t, 1.0).unwrap();
    assert_abs_diff_eq!(beta[0], 0.75, epsilon = 1e-14);
    assert_abs_diff_eq!(beta[1], 0.75, epsilon = 1e-14);
}

#[test]
fn rejects_non_finite_and_bad_c() {
    let mut h = DMatrix::identity(2, 2);
    let t = DVector::from_vec(vec![1.0, 0.0]);
    assert!(matches!(ridge(&h, &t, 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(ridge(&h, &t, -1.0), Err(Error::InvalidArgument(_))));
    h[(0, 1)] = f64::NAN;
    assert!(matches!(ridge(&h, &t, 1.0), Err(Error::NonFinite(_))));
}

#[test]
fn pinv_square_is_exact_inverse() {
    let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
    let t = DVector::from_vec(vec![3.0, 5.0]);
    let beta = pinv_solve(&h, &t).unwrap();
    // H⁻¹t = (4/5, 7/5)
    assert_abs_diff_eq!(beta[0], 0.8, epsilon = 1e-12);
    assert_abs_diff_eq!(beta[1], 1.4, epsilon = 1e-12);
}

#[test]
fn pinv_duplicated_columns_are_singular() {
    let h = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -0.5, -0.5]);
    let t = DVector::from_vec(vec![1.0, 0.0, 2.0]);
    assert!(matches!(pinv_solve(&h, &t), Err(Error::Singular { .. })));
    // the loaded system stays solvable
    assert!(ridge(&h, &t, 1.0).is_ok());
}
