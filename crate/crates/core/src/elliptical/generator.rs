use statrs::function::gamma::ln_gamma;

use super::quadrature::log_integral_to_infinity;
use crate::error::{Error, Result};

/// A density generator tabulated on a grid, interpolated by a monotone
/// cubic (Fritsch-Carlson) and continued past the last point by an
/// exponential tail through the final two points.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedGenerator {
    u: Vec<f64>,
    g: Vec<f64>,
    slopes: Vec<f64>,
    tail_rate: f64,
}

impl TabulatedGenerator {
    pub fn new(u: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if u.len() != g.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: g.len(),
            });
        }
        if u.len() < 2 || u[0] != 0.0 {
            return Err(Error::InvalidGenerator(
                "grid must start at u = 0 and hold two or more points".into(),
            ));
        }
        if u.iter().any(|v| !v.is_finite()) || u.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGenerator("u must be finite and strictly increasing".into()));
        }
        if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGenerator("g values must be finite and nonnegative".into()));
        }
        let n = u.len();
        let (g_prev, g_last) = (g[n - 2], g[n - 1]);
        let tail_rate = if g_last == 0.0 {
            f64::INFINITY
        } else if g_prev > g_last {
            (g_prev / g_last).ln() / (u[n - 1] - u[n - 2])
        } else {
            return Err(Error::InvalidGenerator(
                "the last two values must decrease to fit a decaying tail".into(),
            ));
        };
        let slopes = fritsch_carlson(&u, &g);
        Ok(Self {
            u,
            g,
            slopes,
            tail_rate,
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        let n = self.u.len();
        if u < 0.0 {
            return 0.0;
        }
        if u >= self.u[n - 1] {
            if self.tail_rate.is_infinite() {
                return 0.0;
            }
            return self.g[n - 1] * (-self.tail_rate * (u - self.u[n - 1])).exp();
        }
        let i = self.u.partition_point(|&x| x <= u) - 1;
        let h = self.u[i + 1] - self.u[i];
        let t = (u - self.u[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (h00 * self.g[i] + h10 * h * self.slopes[i] + h01 * self.g[i + 1] + h11 * h * self.slopes[i + 1])
            .max(0.0)
    }

    pub fn points(&self) -> (&[f64], &[f64]) {
        (&self.u, &self.g)
    }
}

fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for k in 1..n - 1 {
        m[k] = if d[k - 1] * d[k] > 0.0 {
            0.5 * (d[k - 1] + d[k])
        } else {
            0.0
        };
    }
    for k in 0..n - 1 {
        if d[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let (a, b) = (m[k] / d[k], m[k + 1] / d[k]);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * d[k];
            m[k + 1] = tau * b * d[k];
        }
    }
    m
}

/// Shape of the density generator.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorFamily {
    Gaussian,
    StudentT { nu: f64 },
    Tabulated(TabulatedGenerator),
}

/// A density generator g in dimension p, so that the density of X is
/// |Sigma|^{-1/2} g((x - mu)' Sigma^{-1} (x - mu)).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: GeneratorFamily,
    pub dim: usize,
}

impl GeneratorSpec {
    pub fn new(family: GeneratorFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGenerator("dimension must be at least 1".into()));
        }
        if let GeneratorFamily::StudentT { nu } = family {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::InvalidGenerator(format!("degrees of freedom {nu} must be positive")));
            }
        }
        Ok(Self { family, dim })
    }

    /// (2 pi)^{-p/2} exp(-u/2).
    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::Gaussian, dim)
    }

    /// Multivariate Student t with scatter matrix Sigma.
    pub fn student_t(nu: f64, dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::StudentT { nu }, dim)
    }

    pub fn tabulated(table: TabulatedGenerator, dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::Tabulated(table), dim)
    }

    /// ln g(u); -inf where g vanishes.
    pub fn log_g(&self, u: f64) -> f64 {
        let p = self.dim as f64;
        match &self.family {
            GeneratorFamily::Gaussian => -0.5 * p * (2.0 * std::f64::consts::PI).ln() - 0.5 * u,
            GeneratorFamily::StudentT { nu } => {
                let nu = *nu;
                ln_gamma(0.5 * (nu + p)) - ln_gamma(0.5 * nu)
                    - 0.5 * p * (nu * std::f64::consts::PI).ln()
                    - 0.5 * (nu + p) * (u / nu).ln_1p()
            }
            GeneratorFamily::Tabulated(t) => t.eval(u).ln(),
        }
    }

    pub fn g(&self, u: f64) -> f64 {
        self.log_g(u).exp()
    }

    /// Total probability mass implied by g:
    /// pi^{p/2} / Gamma(p/2) * int_0^inf u^{p/2 - 1} g(u) du.
    pub fn radial_mass(&self) -> Result<f64> {
        let p = self.dim as f64;
        let pm1 = p - 1.0;
        // u = r^2 removes the u^{-1/2} singularity at p = 1
        let log_int = log_integral_to_infinity(
            |r| {
                let power = if self.dim == 1 { 0.0 } else { pm1 * r.ln() };
                std::f64::consts::LN_2 + power + self.log_g(r * r)
            },
            0.0,
            1e-12,
        )?;
        Ok((0.5 * p * std::f64::consts::PI.ln() - ln_gamma(0.5 * p) + log_int).exp())
    }

    /// Fails unless the implied density integrates to 1 within 1e-4.
    pub fn check_normalized(&self) -> Result<()> {
        let mass = self.radial_mass()?;
        if !((mass - 1.0).abs() <= 1e-4) {
            return Err(Error::NonNormalizedGenerator { integral: mass });
        }
        Ok(())
    }
}
