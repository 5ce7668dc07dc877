//! Closed-form output-weight solves.
//!
//! Every trainer ends in the same linear system: the diagonally loaded normal
//! equations `((1/C)·I + HᵀH) β = Hᵀt`. The loaded matrix is symmetric
//! positive definite for any `C > 0`, so a Cholesky factorisation is the fast
//! path; a column-pivoted QR is kept as a fallback for the rare case where
//! rounding breaks positive definiteness.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual bound every ridge solve must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Cholesky pivots below this multiple of the largest diagonal entry mark the
/// unregularised normal equations as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Hidden activations, weighted targets and regularisation strength.
#[derive(Debug, Clone, Copy)]
pub struct RidgeProblem<'a> {
    h: &'a DMatrix<f64>,
    t: &'a DVector<f64>,
    c: f64,
}

impl<'a> RidgeProblem<'a> {
    pub fn new(h: &'a DMatrix<f64>, t: &'a DVector<f64>, c: f64) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::InvalidArgument("H must be at least 1×1".into()));
        }
        crate::error::check_dim(h.nrows(), t.len())?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("C must be positive and finite, got {c}")));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("H"));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        Ok(Self { h, t, c })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        self.h
    }

    pub fn t(&self) -> &DVector<f64> {
        self.t
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn loaded_system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = self.h.tr_mul(self.h);
        let load = 1.0 / self.c;
        for i in 0..a.nrows() {
            a[(i, i)] += load;
        }
        (a, self.h.tr_mul(self.t))
    }

    /// `‖((1/C)I + HᵀH)β − Hᵀt‖` and `‖Hᵀt‖`.
    pub fn residual(&self, beta: &DVector<f64>) -> (f64, f64) {
        let (a, rhs) = self.loaded_system();
        ((&a * beta - &rhs).norm(), rhs.norm())
    }
}

/// Solves `((1/C)·I + HᵀH) β = Hᵀt`.
pub fn ridge_solve(problem: &RidgeProblem<'_>) -> Result<DVector<f64>> {
    let (a, rhs) = problem.loaded_system();
    match cholesky(&a, 0.0) {
        Ok(l) => {
            let mut beta = cholesky_solve(&l, &rhs);
            // one step of iterative refinement
            let r = &rhs - &a * &beta;
            beta += cholesky_solve(&l, &r);
            Ok(beta)
        }
        Err(_) => {
            log::debug!("cholesky failed on loaded normal equations, using pivoted QR");
            a.col_piv_qr()
                .solve(&rhs)
                .ok_or_else(|| Error::SolveFailed("pivoted QR could not solve loaded system".into()))
        }
    }
}

/// Convenience wrapper building the [`RidgeProblem`] in place.
pub fn ridge(h: &DMatrix<f64>, t: &DVector<f64>, c: f64) -> Result<DVector<f64>> {
    ridge_solve(&RidgeProblem::new(h, t, c)?)
}

/// Unregularised least squares `β = (HᵀH)⁻¹Hᵀt`.
///
/// Fails with [`Error::Singular`] when `HᵀH` is numerically rank deficient.
pub fn pinv_solve(h: &DMatrix<f64>, t: &DVector<f64>) -> Result<DVector<f64>> {
    // validate shape and finiteness with a dummy C
    RidgeProblem::new(h, t, 1.0)?;
    let g = h.tr_mul(h);
    let rhs = h.tr_mul(t);
    let max_diag = (0..g.nrows()).map(|i| g[(i, i)]).fold(0.0_f64, f64::max);
    let tolerance = PIVOT_TOLERANCE * max_diag;
    let l = cholesky(&g, tolerance).map_err(|pivot| Error::Singular { pivot, tolerance })?;
    let mut beta = cholesky_solve(&l, &rhs);
    let r = &rhs - &g * &beta;
    beta += cholesky_solve(&l, &r);
    Ok(beta)
}

/// Lower Cholesky factor; returns the offending pivot if one falls to or
/// below `tolerance`.
fn cholesky(a: &DMatrix<f64>, tolerance: f64) -> std::result::Result<DMatrix<f64>, f64> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tolerance) {
            return Err(d);
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = DVector::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = DVector::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
