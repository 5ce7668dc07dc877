use selm_core::welm::*;
use approx::assert_abs_diff_eq;
use selm_core::Error;
use selm_core::kernels::Kernel;
use selm_core::types::Label;

fn params(kernel: Kernel) -> WelmParams {
    WelmParams { hidden_pct: 100.0, c: 100.0, kernel, seed: 5, weighting: Weighting::Balanced }
}

#[test]
fn weights_for_three_to_one() {
    use Label::*;
    let w = class_weights(&[Genuine, Genuine, Genuine, Impostor]).unwrap();
    assert_eq!(&w.gamma[..3], &[1.0, 1.0, 1.0]);
    assert_abs_diff_eq!(w.gamma[3], 3f64.sqrt(), epsilon = 1e-15);
    assert_eq!((w.n_pos, w.n_neg), (3, 1));
    let bal = class_weights(&[Genuine, Impostor, Genuine, Impostor]).unwrap();
    assert_eq!(bal.gamma, vec![1.0; 4]);
    assert!(matches!(class_weights(&[Genuine, Genuine]), Err(Error::SingleClass)));
}

/// Four points, two per class, on either side of the origin.
fn four_points() -> (Vec<Vec<f64>>, Vec<Label>) {
    use Label::*;
    (
        vec![vec![1.0, 0.2], vec![0.9, -0.1], vec![-1.0, 0.1], vec![-0.8, -0.3]],
        vec![Genuine, Genuine, Impostor, Impostor],
    )
}

#[test]
fn four_point_cosine_fit_matches_closed_form() {
    let (x, y) = four_points();
    let m = welm_train(&x, &y, &params(Kernel::Cosine)).unwrap();
    assert_eq!(m.hidden(), 4);
    // independent oracle: explicit H over the chosen anchors, Gaussian
    // elimination on (I/C + HᵀH)β = Hᵀy
    let mut h = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = (&x[i], &m.anchors[j]);
            let dot = a[0] * b[0] + a[1] * b[1];
            h[i][j] = dot / ((a[0] * a[0] + a[1] * a[1]).sqrt() * (b[0] * b[0] + b[1] * b[1]).sqrt());
        }
    }
    let mut aug = vec![vec![0.0; 5]; 4];
    for r in 0..4 {
        for c in 0..4 {
            aug[r][c] = (0..4).map(|k| h[k][r] * h[k][c]).sum::<f64>() + if r == c { 0.01 } else { 0.0 };
        }
        aug[r][4] = (0..4).map(|k| h[k][r] * y[k].target()).sum();
    }
    for p in 0..4 {
        let piv = (p..4).max_by(|&a, &b| aug[a][p].abs().total_cmp(&aug[b][p].abs())).unwrap();
        aug.swap(p, piv);
        for r in 0..4 {
            if r != p {
                let f = aug[r][p] / aug[p][p];
                for c in p..5 {
                    aug[r][c] -= f * aug[p][c];
                }
            }
        }
    }
    for j in 0..4 {
        assert_abs_diff_eq!(m.beta[j], aug[j][4] / aug[j][j], epsilon = 1e-8);
    }
    for (row, label) in x.iter().zip(&y) {
        assert_eq!(Label::from_decision(m.predict(row).unwrap() >= 0.0), *label);
    }
}

#[test]
fn deterministic_and_anchors_are_training_rows() {
    let (x, y) = four_points();
    let p = WelmParams { hidden_pct: 50.0, ..params(Kernel::Euclidean) };
    let a = welm_train(&x, &y, &p).unwrap();
    assert_eq!(a, welm_train(&x, &y, &p).unwrap());
    assert_eq!(a.hidden(), 2);
    for anchor in &a.anchors {
        assert!(x.iter().any(|r| r.iter().zip(anchor).all(|(u, v)| u.to_bits() == v.to_bits())));
    }
}

#[test]
fn oversized_hidden_layer_is_clamped() {
    let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
    let y: Vec<Label> = (0..10).map(|i| Label::from_decision(i < 5)).collect();
    let m = welm_train(&x, &y, &WelmParams { hidden_pct: 150.0, ..params(Kernel::Euclidean) }).unwrap();
    assert_eq!(m.hidden(), 10);
    assert_eq!(m.clamped_from, Some(15));
}

#[test]
fn prediction_edge_cases() {
    let m = WelmModel {
        anchors: vec![vec![0.3, 0.4]],
        kernel: Kernel::Cosine,
        beta: vec![1.0],
        c: 1.0,
        threshold: 0.0,
        seed: 0,
        clamped_from: None,
    };
    assert_abs_diff_eq!(m.predict(&[0.3, 0.4]).unwrap(), 1.0, epsilon = 1e-15);
    assert!(matches!(m.predict(&[0.0, 0.0]), Err(Error::ZeroNorm)));
    let zero = WelmModel { beta: vec![0.0], ..m };
    assert_eq!(zero.predict(&[2.0, -1.0]).unwrap(), 0.0);
}

#[test]
fn balanced_weighting_is_bit_identical_to_uniform() {
    let (x, y) = four_points();
    let a = welm_train(&x, &y, &params(Kernel::Euclidean)).unwrap();
    let b = welm_train(&x, &y, &WelmParams { weighting: Weighting::Uniform, ..params(Kernel::Euclidean) }).unwrap();
    assert_eq!(a, b);
}
