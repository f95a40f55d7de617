use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use super::generator::GeneratorSpec;
use super::quadrature::log_integral_to_infinity;
use crate::error::{Error, Result};

const INNER_TOL: f64 = 1e-13;
const OUTER_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-8;

/// ln of the density of one standardized coordinate,
/// m(z) = 2 pi^{(p-1)/2} / Gamma((p-1)/2) int_0^inf t^{p-2} g(z^2 + t^2) dt,
/// which is g(z^2) when p = 1.
pub fn marginal_log_density(generator: &GeneratorSpec, z: f64) -> Result<f64> {
    let p = generator.dim;
    if p == 1 {
        return Ok(generator.log_g(z * z));
    }
    let half = 0.5 * (p as f64 - 1.0);
    let log_c = std::f64::consts::LN_2 + half * std::f64::consts::PI.ln() - ln_gamma(half);
    let power = p as f64 - 2.0;
    let z2 = z * z;
    let inner = log_integral_to_infinity(
        |t| {
            let lt = if p == 2 { 0.0 } else { power * t.ln() };
            lt + generator.log_g(z2 + t * t)
        },
        0.0,
        INNER_TOL,
    )?;
    Ok(log_c + inner)
}

/// G(s), the probability that a standardized coordinate exceeds s >= 0.
pub fn tail_probability(generator: &GeneratorSpec, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Ok(1.0 - tail_probability(generator, -s)?);
    }
    let log_tail = log_integral_to_infinity(
        |z| marginal_log_density(generator, z).unwrap_or(f64::NAN),
        s,
        OUTER_TOL,
    )?;
    let v = log_tail.exp();
    if !v.is_finite() {
        return Err(Error::InvalidGenerator("tail integral is not finite".into()));
    }
    Ok(v)
}

/// The quantile q with G(q) = alpha for alpha in (0, 0.5].
///
/// Bisection from a bracket grown geometrically around the normal
/// quantile; stops once |G(q) - alpha| <= 1e-8. The generator must be
/// normalized, and G must decrease strictly over the bracket.
pub fn elliptical_quantile(generator: &GeneratorSpec, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::OutOfRange(alpha));
    }
    generator.check_normalized()?;
    if alpha == 0.5 {
        return Ok(0.0);
    }
    let g = |s: f64| tail_probability(generator, s);
    let seed = Normal::standard().inverse_cdf(1.0 - alpha);

    let (mut lo, mut hi) = (0.0, seed);
    let mut g_hi = g(hi)?;
    let mut grown = 0;
    while g_hi > alpha {
        lo = hi;
        hi *= 2.0;
        g_hi = g(hi)?;
        grown += 1;
        if grown > 60 {
            return Err(Error::BracketingFailure(format!("G stays above {alpha}")));
        }
    }
    if lo == 0.0 {
        let mut candidate = seed;
        for _ in 0..40 {
            candidate *= 0.5;
            if g(candidate)? >= alpha {
                lo = candidate;
                break;
            }
        }
    }
    let g_lo = g(lo)?;
    if !(g_lo >= alpha && g_hi <= alpha) {
        return Err(Error::BracketingFailure(format!(
            "G({lo}) = {g_lo}, G({hi}) = {g_hi} do not straddle {alpha}"
        )));
    }

    let mut previous = g_lo;
    for i in 1..=8 {
        let v = g(lo + (hi - lo) * i as f64 / 8.0)?;
        if !(v < previous) {
            return Err(Error::BracketingFailure(
                "G is not strictly decreasing on the bracket".into(),
            ));
        }
        previous = v;
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = g(mid)?;
        if (v - alpha).abs() <= ROOT_TOL || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if v > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
