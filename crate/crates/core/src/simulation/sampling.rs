use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::block::Partition;
use crate::data::ObservationMatrix;
use crate::elliptical::tau_to_rho;
use crate::error::{Error, Result};

/// Smallest eigenvalue tolerated when factoring a correlation matrix.
const PSD_TOL: f64 = 1e-10;

/// Elliptical family of the simulated rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EllipticalFamily {
    Gaussian,
    /// Multivariate t with scatter matrix R; nu = 1 is the Cauchy case.
    StudentT { nu: f64 },
}

impl EllipticalFamily {
    fn validate(self) -> Result<()> {
        match self {
            EllipticalFamily::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => {
                Err(Error::Config(format!("degrees of freedom {nu} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Tau matrix with `tau_diag` inside groups, `tau_off` across groups and a
/// unit diagonal.
pub fn block_tau_matrix(partition: &Partition, tau_diag: f64, tau_off: f64) -> Result<DMatrix<f64>> {
    for t in [tau_diag, tau_off] {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(t));
        }
    }
    let p = partition.p();
    Ok(DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if partition.group_of(i) == partition.group_of(j) {
            tau_diag
        } else {
            tau_off
        }
    }))
}

/// Entrywise sin(pi tau / 2) of [`block_tau_matrix`].
pub fn block_correlation(partition: &Partition, tau_diag: f64, tau_off: f64) -> Result<DMatrix<f64>> {
    let (rho_diag, rho_off) = (tau_to_rho(tau_diag)?, tau_to_rho(tau_off)?);
    let mut r = block_tau_matrix(partition, rho_diag, rho_off)?;
    r.fill_diagonal(1.0);
    Ok(r)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A factor A with A A' = R, from Cholesky when R is definite and from the
/// eigen decomposition when it is only semi-definite.
#[derive(Debug, Clone)]
pub struct CorrelationFactor {
    factor: DMatrix<f64>,
}

impl CorrelationFactor {
    pub fn new(r: &DMatrix<f64>) -> Result<Self> {
        if let Some(chol) = r.clone().cholesky() {
            return Ok(Self { factor: chol.l() });
        }
        let eigen = SymmetricEigen::new(r.clone());
        if eigen.eigenvalues.iter().any(|&l| l < -PSD_TOL) {
            return Err(Error::NotPositiveDefinite);
        }
        let mut factor = eigen.eigenvectors;
        for (mut col, &l) in factor.column_iter_mut().zip(eigen.eigenvalues.iter()) {
            col *= l.max(0.0).sqrt();
        }
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// One draw A e with e standard normal, written into `out`.
    fn correlated_normal<R: Rng>(&self, rng: &mut R, e: &mut [f64], out: &mut [f64]) {
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..e.len()).map(|j| self.factor[(i, j)] * e[j]).sum();
        }
    }
}

/// Elliptical rows with zero location and scatter R built from a block tau
/// matrix.
#[derive(Debug, Clone)]
pub struct BlockModel {
    factor: CorrelationFactor,
    family: EllipticalFamily,
}

impl BlockModel {
    pub fn new(partition: &Partition, tau_diag: f64, tau_off: f64, family: EllipticalFamily) -> Result<Self> {
        family.validate()?;
        let r = block_correlation(partition, tau_diag, tau_off)?;
        Ok(Self {
            factor: CorrelationFactor::new(&r)?,
            family,
        })
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<ObservationMatrix> {
        let p = self.factor.dim();
        let chi = match self.family {
            EllipticalFamily::StudentT { nu } => Some((nu, ChiSquared::new(nu).map_err(|e| Error::Config(e.to_string()))?)),
            EllipticalFamily::Gaussian => None,
        };
        let mut columns = vec![Vec::with_capacity(n); p];
        let (mut e, mut x) = (vec![0.0; p], vec![0.0; p]);
        for _ in 0..n {
            self.factor.correlated_normal(rng, &mut e, &mut x);
            let scale = match &chi {
                Some((nu, dist)) => (nu / dist.sample(rng)).sqrt(),
                None => 1.0,
            };
            for (col, v) in columns.iter_mut().zip(&x) {
                col.push(v * scale);
            }
        }
        ObservationMatrix::from_columns(columns)
    }
}

/// n rows of a zero-mean elliptical law whose Kendall's tau matrix is
/// block-constant with `tau_diag` within and `tau_off` across groups.
pub fn sample_block_elliptical(
    partition: &Partition,
    tau_diag: f64,
    tau_off: f64,
    family: EllipticalFamily,
    n: usize,
    seed: u64,
) -> Result<ObservationMatrix> {
    let model = BlockModel::new(partition, tau_diag, tau_off, family)?;
    model.sample(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Off-diagonal conditional tau as a function of the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum TauCurve {
    Constant { value: f64 },
    /// intercept + slope z
    Linear { intercept: f64, slope: f64 },
    /// amplitude (cos(pi omega z / 2) + 1)
    Cosine { amplitude: f64, omega: f64 },
}

impl TauCurve {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            TauCurve::Constant { value } => value,
            TauCurve::Linear { intercept, slope } => intercept + slope * z,
            TauCurve::Cosine { amplitude, omega } => {
                amplitude * ((std::f64::consts::FRAC_PI_2 * omega * z).cos() + 1.0)
            }
        }
    }
}

/// intercept + slope z
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFn {
    pub intercept: f64,
    pub slope: f64,
}

impl Default for AffineFn {
    fn default() -> Self {
        Self {
            intercept: 0.0,
            slope: 1.0,
        }
    }
}

impl AffineFn {
    pub fn eval(&self, z: f64) -> f64 {
        self.intercept + self.slope * z
    }
}

/// c0 + c1 z + c2 z^2
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFn {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for QuadraticFn {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 0.0,
            c2: 1.0,
        }
    }
}

impl QuadraticFn {
    pub fn eval(&self, z: f64) -> f64 {
        self.c0 + z * (self.c1 + z * self.c2)
    }
}

/// Gaussian rows given a uniform covariate Z on [0, 1]: every margin has
/// mean `mean(z)` and variance `variance(z)`, and the conditional tau
/// matrix is block-constant with a fixed within-group value and the
/// cross-group curve `tau_off(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalModel {
    partition: Partition,
    tau_diag: f64,
    tau_off: TauCurve,
    mean: AffineFn,
    variance: QuadraticFn,
}

/// Points of [0, 1] at which a conditional model is checked.
const CHECK_POINTS: usize = 101;

impl ConditionalModel {
    pub fn new(
        partition: Partition,
        tau_diag: f64,
        tau_off: TauCurve,
        mean: AffineFn,
        variance: QuadraticFn,
    ) -> Result<Self> {
        for i in 0..CHECK_POINTS {
            let z = i as f64 / (CHECK_POINTS - 1) as f64;
            if !(variance.eval(z) > 0.0) {
                return Err(Error::Config(format!("variance function not positive at z = {z}")));
            }
            let r = block_correlation(&partition, tau_diag, tau_off.eval(z))?;
            if min_eigenvalue(&r) < -PSD_TOL {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(Self {
            partition,
            tau_diag,
            tau_off,
            mean,
            variance,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn tau_off(&self, z: f64) -> f64 {
        self.tau_off.eval(z)
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(ObservationMatrix, ObservationMatrix)> {
        let p = self.partition.p();
        let mut z_col = Vec::with_capacity(n);
        let mut columns = vec![Vec::with_capacity(n); p];
        let (mut e, mut x) = (vec![0.0; p], vec![0.0; p]);
        for _ in 0..n {
            let z: f64 = rng.random();
            let r = block_correlation(&self.partition, self.tau_diag, self.tau_off.eval(z))?;
            let factor = CorrelationFactor::new(&r)?;
            factor.correlated_normal(rng, &mut e, &mut x);
            let (m, s) = (self.mean.eval(z), self.variance.eval(z).sqrt());
            for (col, v) in columns.iter_mut().zip(&x) {
                col.push(m + s * v);
            }
            z_col.push(z);
        }
        Ok((
            ObservationMatrix::from_columns(vec![z_col])?,
            ObservationMatrix::from_columns(columns)?,
        ))
    }
}

/// Draws (Z, X) with n rows from `model`.
pub fn sample_conditional_model(
    model: &ConditionalModel,
    n: usize,
    seed: u64,
) -> Result<(ObservationMatrix, ObservationMatrix)> {
    model.sample(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concordance::{kendall_matrix, pairwise_kendall};

    fn two_groups(b: usize) -> Partition {
        Partition::contiguous(&[b, b]).unwrap()
    }

    #[test]
    fn correlation_targets() {
        let r = block_correlation(&two_groups(2), 0.3, 0.1).unwrap();
        let (rd, ro) = ((0.15 * std::f64::consts::PI).sin(), (0.05 * std::f64::consts::PI).sin());
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(0, 1)], rd);
        assert_eq!(r[(2, 3)], rd);
        assert_eq!(r[(1, 2)], ro);
    }

    #[test]
    fn rejects_indefinite() {
        assert_eq!(
            BlockModel::new(&two_groups(3), 0.1, -0.9, EllipticalFamily::Gaussian).unwrap_err(),
            Error::NotPositiveDefinite
        );
        assert!(matches!(
            BlockModel::new(&two_groups(3), 0.1, 0.1, EllipticalFamily::StudentT { nu: 0.0 }),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn comonotone_is_accepted() {
        let x = sample_block_elliptical(&two_groups(2), 1.0, 1.0, EllipticalFamily::Gaussian, 20, 3).unwrap();
        let m = kendall_matrix(&x).unwrap();
        assert!(m.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn independence_gives_identity() {
        let x = sample_block_elliptical(&two_groups(2), 0.0, 0.0, EllipticalFamily::Gaussian, 4000, 5).unwrap();
        let m = kendall_matrix(&x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((m.get(i, j) - target).abs() < 0.05);
            }
        }
    }

    fn mean_cross_tau(x: &ObservationMatrix, b: usize) -> f64 {
        let mut s = 0.0;
        for a in 0..b {
            for c in b..2 * b {
                s += pairwise_kendall(x.column(a), x.column(c)).unwrap();
            }
        }
        s / (b * b) as f64
    }

    #[test]
    fn tau_targets_hold_for_both_families() {
        let p = two_groups(2);
        for family in [EllipticalFamily::Gaussian, EllipticalFamily::StudentT { nu: 1.0 }] {
            let x = sample_block_elliptical(&p, 0.3, 0.1, family, 100_000, 11).unwrap();
            let off = mean_cross_tau(&x, 2);
            assert!((off - 0.1).abs() < 0.005, "{family:?}: {off}");
            let within = pairwise_kendall(x.column(0), x.column(1)).unwrap();
            assert!((within - 0.3).abs() < 0.01, "{family:?}: {within}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = two_groups(3);
        let a = sample_block_elliptical(&p, 0.3, 0.1, EllipticalFamily::Gaussian, 50, 9).unwrap();
        let b = sample_block_elliptical(&p, 0.3, 0.1, EllipticalFamily::Gaussian, 50, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conditional_model_moments() {
        let model = ConditionalModel::new(
            two_groups(2),
            0.3,
            TauCurve::Linear {
                intercept: 0.0,
                slope: 0.1,
            },
            AffineFn::default(),
            QuadraticFn::default(),
        )
        .unwrap();
        assert_eq!(model.tau_off(0.0), 0.0);
        let (z, x) = sample_conditional_model(&model, 50_000, 2).unwrap();
        assert_eq!((z.p(), x.p()), (1, 4));
        // E[X] = E[Z] = 1/2 and Var[X] = E[1 + Z^2] + Var[Z] = 4/3 + 1/12
        let col = x.column(0);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
        assert!((var - (4.0 / 3.0 + 1.0 / 12.0)).abs() < 0.05, "{var}");
        assert!(z.column(0).iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn cosine_curve() {
        let c = TauCurve::Cosine {
            amplitude: 0.1,
            omega: 2.0,
        };
        assert!((c.eval(0.0) - 0.2).abs() < 1e-15);
        assert!(c.eval(1.0).abs() < 1e-15);
        let flat = TauCurve::Cosine {
            amplitude: 0.1,
            omega: 0.0,
        };
        assert_eq!(flat.eval(0.37), 0.2);
    }
}
