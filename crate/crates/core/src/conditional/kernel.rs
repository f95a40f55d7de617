use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symmetric kernel given by its values on a grid over [0, support].
///
/// Evaluated by linear interpolation of |u| and zero beyond the last grid
/// point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelTable")]
pub struct TabulatedKernel {
    u: Vec<f64>,
    k: Vec<f64>,
}

#[derive(Deserialize)]
struct KernelTable {
    u: Vec<f64>,
    k: Vec<f64>,
}

impl TryFrom<KernelTable> for TabulatedKernel {
    type Error = Error;

    fn try_from(t: KernelTable) -> Result<Self> {
        Self::new(t.u, t.k)
    }
}

impl TabulatedKernel {
    /// `u` must start at 0 and increase strictly; values must be finite and
    /// nonnegative, vanish at the last point, and integrate to 1 over the
    /// symmetric support within 1e-8.
    pub fn new(u: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        if u.len() != k.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: k.len(),
            });
        }
        if u.len() < 2 || u[0] != 0.0 {
            return Err(Error::InvalidKernel("grid must start at 0 with two or more points".into()));
        }
        if u.windows(2).any(|w| !(w[1] > w[0])) || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel("grid must be finite and strictly increasing".into()));
        }
        if k.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidKernel("values must be finite and nonnegative".into()));
        }
        if *k.last().unwrap() != 0.0 {
            return Err(Error::InvalidKernel("kernel must vanish at the end of its support".into()));
        }
        // the interpolant is piecewise linear, so the trapezoid rule is exact
        let half: f64 = u
            .windows(2)
            .zip(k.windows(2))
            .map(|(du, dk)| 0.5 * (du[1] - du[0]) * (dk[0] + dk[1]))
            .sum();
        if (2.0 * half - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidKernel(format!(
                "kernel integrates to {} instead of 1",
                2.0 * half
            )));
        }
        Ok(Self { u, k })
    }

    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        let last = *self.u.last().unwrap();
        if a >= last {
            return 0.0;
        }
        let i = self.u.partition_point(|&g| g <= a) - 1;
        let t = (a - self.u[i]) / (self.u[i + 1] - self.u[i]);
        self.k[i] + t * (self.k[i + 1] - self.k[i])
    }

    pub fn support(&self) -> f64 {
        *self.u.last().unwrap()
    }
}

/// Univariate kernel shapes, all compactly supported and symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// 0.75 (1 - u^2) on |u| <= 1.
    Epanechnikov,
    /// 1 - |u| on |u| <= 1.
    Triangular,
    /// 1/2 on |u| <= 1.
    Uniform,
    Custom(TabulatedKernel),
}

impl KernelFamily {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelFamily::Triangular => (1.0 - u.abs()).max(0.0),
            KernelFamily::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelFamily::Custom(t) => t.eval(u),
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(KernelFamily::Epanechnikov),
            "triangular" | "tri" => Ok(KernelFamily::Triangular),
            "uniform" | "box" => Ok(KernelFamily::Uniform),
            other => Err(Error::InvalidKernel(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Product kernel with one scalar bandwidth for every covariate dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidKernel(format!("bandwidth {bandwidth} must be positive")));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn epanechnikov(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Epanechnikov, bandwidth)
    }

    /// K_h(diff) = h^-d prod_j K(diff_j / h).
    pub fn eval(&self, diff: &[f64]) -> f64 {
        let h = self.bandwidth;
        diff.iter()
            .map(|&d| self.family.eval(d / h) / h)
            .product()
    }
}
