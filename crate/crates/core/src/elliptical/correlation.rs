use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::KendallMatrix;

fn check_unit(v: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(v));
    }
    Ok(())
}

/// Pearson correlation of an elliptical pair with Kendall's tau `tau`:
/// sin(pi tau / 2).
pub fn tau_to_rho(tau: f64) -> Result<f64> {
    check_unit(tau)?;
    Ok((std::f64::consts::FRAC_PI_2 * tau).sin())
}

/// Kendall's tau of an elliptical pair with correlation `rho`:
/// (2 / pi) arcsin(rho).
pub fn rho_to_tau(rho: f64) -> Result<f64> {
    check_unit(rho)?;
    Ok(std::f64::consts::FRAC_2_PI * rho.asin())
}

/// Result of [`block_pd_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdCheck {
    pub positive_definite: bool,
    /// ((b1 b2 - b1 - b2 + 1) rho2 + b1 - 1) rho1 - b1 b2 rho3^2 + (b2 - 1) rho2 + 1
    pub constraint_value: f64,
}

/// Positive definiteness of the two-block matrix with within-block
/// correlations rho1 (size b1), rho2 (size b2) and cross correlation rho3.
///
/// The constraint value is the determinant of the 2 x 2 matrix acting on
/// block-constant vectors. It is positive exactly when that matrix is
/// definite, either positive or negative; the matrix is positive definite
/// when additionally 1 + (b1 - 1) rho1 > 0.
pub fn block_pd_check(b1: usize, b2: usize, rho1: f64, rho2: f64, rho3: f64) -> Result<PdCheck> {
    if b1 < 2 || b2 < 2 {
        return Err(Error::InvalidBlockSize { b1, b2 });
    }
    for r in [rho1, rho2, rho3] {
        if !(r > -1.0 && r < 1.0) {
            return Err(Error::OutOfRange(r));
        }
    }
    let (f1, f2) = (b1 as f64, b2 as f64);
    let constraint_value =
        ((f2 * f1 - f1 - f2 + 1.0) * rho2 + f1 - 1.0) * rho1 - f1 * f2 * rho3 * rho3 + (f2 - 1.0) * rho2 + 1.0;
    let positive_definite = constraint_value > 0.0 && 1.0 + (f1 - 1.0) * rho1 > 0.0;
    Ok(PdCheck {
        positive_definite,
        constraint_value,
    })
}

/// The explicit (b1 + b2) x (b1 + b2) matrix checked by [`block_pd_check`].
pub fn two_block_matrix(b1: usize, b2: usize, rho1: f64, rho2: f64, rho3: f64) -> DMatrix<f64> {
    let p = b1 + b2;
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if i < b1 && j < b1 {
            rho1
        } else if i >= b1 && j >= b1 {
            rho2
        } else {
            rho3
        }
    })
}

/// Infimum of an equal intergroup correlation over K groups: -1/(K - 1).
pub fn min_intergroup_rho(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    Ok(-1.0 / (k as f64 - 1.0))
}

/// A correlation matrix derived from a Kendall's tau matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub matrix: DMatrix<f64>,
    /// Smallest eigenvalue before any repair.
    pub min_eigenvalue: f64,
    /// Whether eigenvalue clipping was applied.
    pub repaired: bool,
}

const EIGEN_FLOOR: f64 = 1e-10;

/// Entrywise sin(pi tau / 2), optionally repaired to positive
/// definiteness by clipping eigenvalues at 1e-10 and rescaling to a unit
/// diagonal.
pub fn correlation_from_kendall(tau: &KendallMatrix, repair: bool) -> Result<CorrelationEstimate> {
    let p = tau.p();
    let mut r = DMatrix::identity(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = tau_to_rho(tau.get(i, j).clamp(-1.0, 1.0))?;
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(r.clone());
    let min_eigenvalue = eig.eigenvalues.min();
    if !repair || min_eigenvalue >= EIGEN_FLOOR {
        return Ok(CorrelationEstimate {
            matrix: r,
            min_eigenvalue,
            repaired: false,
        });
    }
    let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let mut m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: DVector<f64> = m.diagonal();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotRepairable("non-positive diagonal after clipping".into()));
    }
    let scale = d.map(|v| 1.0 / v.sqrt());
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] *= scale[i] * scale[j];
        }
    }
    m = 0.5 * (&m + m.transpose());
    m.fill_diagonal(1.0);
    Ok(CorrelationEstimate {
        matrix: m,
        min_eigenvalue,
        repaired: true,
    })
}

/// Sigma = D R D with D = diag(std_devs).
pub fn covariance_from_correlation(corr: &DMatrix<f64>, std_devs: &[f64]) -> Result<DMatrix<f64>> {
    if corr.nrows() != std_devs.len() || corr.ncols() != std_devs.len() {
        return Err(Error::LengthMismatch {
            expected: corr.nrows(),
            actual: std_devs.len(),
        });
    }
    Ok(DMatrix::from_fn(corr.nrows(), corr.ncols(), |i, j| {
        std_devs[i] * corr[(i, j)] * std_devs[j]
    }))
}
