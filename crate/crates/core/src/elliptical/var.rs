use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::generator::GeneratorSpec;
use super::quantile::elliptical_quantile;
use crate::data::ObservationMatrix;
use crate::error::{Error, Result};

/// Elliptical law of asset returns.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalModel {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub generator: GeneratorSpec,
}

impl EllipticalModel {
    /// Requires matching dimensions, a symmetric `sigma` and eigenvalues
    /// no lower than -1e-10.
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, generator: GeneratorSpec) -> Result<Self> {
        let p = mu.len();
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: sigma.nrows(),
            });
        }
        if generator.dim != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: generator.dim,
            });
        }
        if sigma.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("model contains non-finite values".into()));
        }
        let scale = sigma.amax().max(1.0);
        if (&sigma - sigma.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        if SymmetricEigen::new(sigma.clone()).eigenvalues.min() < -1e-10 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            mu,
            sigma,
            generator,
        })
    }
}

/// -delta' mu + q sqrt(delta' Sigma delta) for a given quantile q.
pub fn var_from_quantile(mu: &DVector<f64>, sigma: &DMatrix<f64>, delta: &DVector<f64>, q: f64) -> Result<f64> {
    if delta.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            actual: delta.len(),
        });
    }
    let spread = (delta.transpose() * sigma * delta)[(0, 0)];
    if !(spread > 0.0) {
        return Err(Error::SingularPortfolio(spread));
    }
    Ok(-delta.dot(mu) + q * spread.sqrt())
}

/// Value-at-Risk at level alpha of the linear portfolio `delta`.
pub fn delta_elliptic_var(model: &EllipticalModel, delta: &DVector<f64>, alpha: f64) -> Result<f64> {
    let q = elliptical_quantile(&model.generator, alpha)?;
    var_from_quantile(&model.mu, &model.sigma, delta, q)
}

/// Exponent of n inside Silverman's rule h = 1.06 sqrt(Var n^e).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SilvermanExponent {
    /// e = +1/5.
    #[default]
    Positive,
    /// e = -1/5, the usual shrinking bandwidth.
    Negative,
}

impl SilvermanExponent {
    pub fn value(self) -> f64 {
        match self {
            SilvermanExponent::Positive => 0.2,
            SilvermanExponent::Negative => -0.2,
        }
    }
}

impl std::str::FromStr for SilvermanExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1/5" | "1/5" | "0.2" | "positive" => Ok(SilvermanExponent::Positive),
            "-1/5" | "-0.2" | "negative" => Ok(SilvermanExponent::Negative),
            other => Err(Error::Config(format!("unknown exponent '{other}'"))),
        }
    }
}

/// 1.06 sqrt(variance n^e).
pub fn silverman_rule(variance: f64, n: usize, exponent: SilvermanExponent) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(1.06 * (variance * (n as f64).powf(exponent.value())).sqrt())
}

/// Bandwidth and the transformed radii behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilvermanBandwidth {
    pub h: f64,
    pub xi: Vec<f64>,
    pub variance: f64,
}

/// Silverman bandwidth for the radii xi_i = -1 + (1 + d_i^{p/2})^{2/p},
/// where d_i is the squared Mahalanobis distance of row i.
pub fn silverman_xi_bandwidth(
    data: &ObservationMatrix,
    mu: &DVector<f64>,
    sigma_hat: &DMatrix<f64>,
    exponent: SilvermanExponent,
) -> Result<SilvermanBandwidth> {
    let p = data.p();
    if mu.len() != p || sigma_hat.nrows() != p || sigma_hat.ncols() != p {
        return Err(Error::LengthMismatch {
            expected: p,
            actual: mu.len(),
        });
    }
    let chol = sigma_hat.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let half_p = 0.5 * p as f64;
    let xi: Vec<f64> = (0..data.n())
        .map(|i| {
            let centred = DVector::from_iterator(p, (0..p).map(|j| data.get(i, j) - mu[j]));
            let d = centred.dot(&chol.solve(&centred)).max(0.0);
            // (1 + d^{p/2})^{2/p} through logs to survive large p
            let log_a = half_p * d.ln();
            let softplus = if log_a > 30.0 {
                log_a + (-log_a).exp().ln_1p()
            } else {
                log_a.exp().ln_1p()
            };
            (softplus / half_p).exp_m1()
        })
        .collect();
    let n = xi.len();
    let mean = xi.iter().sum::<f64>() / n as f64;
    let variance = xi.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let h = silverman_rule(variance, n, exponent)?;
    Ok(SilvermanBandwidth { h, xi, variance })
}

/// Exceedance counts of a P&L series against a VaR level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Backtest {
    pub exceedances: usize,
    pub observed_rate: f64,
    pub expected: f64,
    pub length: usize,
}

/// Counts periods whose P&L falls below -VaR.
pub fn backtest_var(pnl: &[f64], var_level: f64, alpha: f64) -> Result<Backtest> {
    if pnl.is_empty() {
        return Err(Error::EmptySeries);
    }
    let exceedances = pnl.iter().filter(|&&x| x < -var_level).count();
    Ok(Backtest {
        exceedances,
        observed_rate: exceedances as f64 / pnl.len() as f64,
        expected: alpha * pnl.len() as f64,
        length: pnl.len(),
    })
}
