//! Elliptical models: tau/correlation conversion, positive definiteness of
//! block correlation matrices, the quantile of a standardized linear
//! combination and the resulting Value-at-Risk.

mod correlation;
mod generator;
pub mod quadrature;
mod quantile;
mod var;

pub use correlation::{
    block_pd_check, correlation_from_kendall, covariance_from_correlation, min_intergroup_rho,
    rho_to_tau, tau_to_rho, two_block_matrix, CorrelationEstimate, PdCheck,
};
pub use generator::{GeneratorFamily, GeneratorSpec, TabulatedGenerator};
pub use quantile::{elliptical_quantile, marginal_log_density, tail_probability};
pub use var::{
    backtest_var, delta_elliptic_var, silverman_rule, silverman_xi_bandwidth, var_from_quantile,
    Backtest, EllipticalModel, SilvermanBandwidth, SilvermanExponent,
};
