//! Exact finite-sample and asymptotic variances of the off-diagonal block
//! estimators, expressed through the concordance probabilities P..U.
//!
//! Each formula consumes the quantities averaged over the pair set that
//! the estimator uses: Block and Random read the whole-block averages, Row
//! the first-line averages and Diagonal the diagonal averages.

use serde::Serialize;

use crate::block::{block_pair_set, EstimatorScheme, Partition, SchemeKind};
use crate::concordance::{averaged_quantities, AveragingSet, ConcordanceQuantities, QuantityOptions};
use crate::data::ObservationMatrix;
use crate::error::{Error, Result};

/// Everything a variance formula needs for one off-diagonal block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceInput {
    pub quantities: ConcordanceQuantities,
    /// Sample size.
    pub n: usize,
    /// |G_k1|.
    pub g1: usize,
    /// |G_k2|.
    pub g2: usize,
    /// Averaging count N (ignored by Naive and Block).
    pub n_avg: usize,
    pub kind: SchemeKind,
}

/// A variance value; `clamped` is set when plug-in quantities made the
/// expression negative and it was replaced by 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceValue {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

impl VarianceValue {
    fn from_raw(raw: f64) -> Self {
        if raw < 0.0 {
            Self {
                value: 0.0,
                raw,
                clamped: true,
            }
        } else {
            Self {
                value: raw,
                raw,
                clamped: false,
            }
        }
    }
}

/// Which asymptotic constant to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMode {
    /// n Var -> V at the given group sizes and N.
    FiniteBlock,
    /// The limit of V as group sizes and N grow as well.
    LargeBlock,
}

/// Coefficients shared by the finite and asymptotic formulas: the variance
/// is `scale * (pair_part + 2(n-2) triple_part)` where the pair part holds
/// P - P^2 and the R/T terms and the triple part holds Q - P^2 and S/U.
struct Terms {
    combos: f64,
    pair_extra: f64,
    triple: f64,
}

fn present(value: Option<f64>, name: &'static str, coefficient: f64) -> Result<f64> {
    if coefficient == 0.0 {
        return Ok(value.unwrap_or(0.0));
    }
    value.ok_or(Error::MissingQuantity(name))
}

fn check_probability(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(v));
    }
    Ok(())
}

fn validate(input: &VarianceInput) -> Result<()> {
    if input.n < 3 {
        return Err(Error::DegenerateSample {
            required: 3,
            actual: input.n,
        });
    }
    if input.g1 == 0 || input.g2 == 0 {
        return Err(Error::Config("group sizes must be at least 1".into()));
    }
    let q = &input.quantities;
    for v in [Some(q.p), Some(q.q), q.r, q.s, q.t, q.u].into_iter().flatten() {
        check_probability(v)?;
    }
    if input.kind.uses_count() {
        let max = EstimatorScheme::new(input.kind).max_count(input.g1, input.g2);
        if input.n_avg == 0 || input.n_avg > max {
            return Err(Error::Config(format!(
                "averaging count {} outside [1, {max}] for the {} scheme",
                input.n_avg,
                input.kind.name()
            )));
        }
    }
    Ok(())
}

fn terms(input: &VarianceInput) -> Result<Terms> {
    validate(input)?;
    let q = &input.quantities;
    let p2 = q.p * q.p;
    let (g1, g2) = (input.g1 as f64, input.g2 as f64);
    let cross = (g1 - 1.0) * (g2 - 1.0);
    let line = g1 + g2 - 2.0;
    let n_avg = input.n_avg as f64;
    let block = g1 * g2;

    let t = match input.kind {
        SchemeKind::Naive => Terms {
            combos: 1.0,
            pair_extra: 0.0,
            triple: q.q - p2,
        },
        SchemeKind::Block | SchemeKind::Random => {
            let weight = if input.kind == SchemeKind::Random {
                if block > 1.0 {
                    (n_avg - 1.0) / (block - 1.0)
                } else {
                    0.0
                }
            } else {
                1.0
            };
            let (cw, lw) = (weight * cross, weight * line);
            let r = present(q.r, "R", lw)?;
            let s = present(q.s, "S", lw)?;
            let tt = present(q.t, "T", cw)?;
            let u = present(q.u, "U", cw)?;
            Terms {
                combos: if input.kind == SchemeKind::Random { n_avg } else { block },
                pair_extra: cw * (tt - p2) + lw * (r - p2),
                triple: q.q - p2 + cw * (u - p2) + lw * (s - p2),
            }
        }
        SchemeKind::Row => {
            let w = n_avg - 1.0;
            let r = present(q.r, "R", w)?;
            let s = present(q.s, "S", w)?;
            Terms {
                combos: n_avg,
                pair_extra: w * (r - p2),
                triple: q.q - p2 + w * (s - p2),
            }
        }
        SchemeKind::Diagonal => {
            let w = n_avg - 1.0;
            let tt = present(q.t, "T", w)?;
            let u = present(q.u, "U", w)?;
            Terms {
                combos: n_avg,
                pair_extra: w * (tt - p2),
                triple: q.q - p2 + w * (u - p2),
            }
        }
    };
    Ok(t)
}

/// Exact variance of the estimator of one off-diagonal block entry at
/// sample size `n`.
pub fn finite_sample_variance(input: &VarianceInput) -> Result<VarianceValue> {
    let t = terms(input)?;
    let q = &input.quantities;
    let n = input.n as f64;
    let pair_part = q.p - q.p * q.p + t.pair_extra;
    let raw = 8.0 / (t.combos * n * (n - 1.0)) * (pair_part + 2.0 * (n - 2.0) * t.triple);
    Ok(VarianceValue::from_raw(raw))
}

/// The constant V with n Var -> V.
pub fn asymptotic_variance(input: &VarianceInput, mode: LimitMode) -> Result<VarianceValue> {
    let t = terms(input)?;
    let q = &input.quantities;
    let p2 = q.p * q.p;
    let raw = match mode {
        LimitMode::FiniteBlock => 16.0 / t.combos * t.triple,
        LimitMode::LargeBlock => {
            let limit = match input.kind {
                SchemeKind::Naive => Some(q.q),
                SchemeKind::Row => q.s,
                SchemeKind::Block | SchemeKind::Diagonal | SchemeKind::Random => q.u,
            };
            let name = if input.kind == SchemeKind::Row { "S" } else { "U" };
            16.0 * (limit.ok_or(Error::MissingQuantity(name))? - p2)
        }
    };
    Ok(VarianceValue::from_raw(raw))
}

/// Averages of P..U over the pair set that the variance formula of
/// `scheme.kind` reads for the block (k1, k2).
///
/// Naive reads the single pair formed by the first column of each group;
/// Block and Random read the whole block.
pub fn scheme_quantities(
    data: &ObservationMatrix,
    partition: &Partition,
    k1: usize,
    k2: usize,
    scheme: &EstimatorScheme,
    options: QuantityOptions,
) -> Result<ConcordanceQuantities> {
    let (pairs, set) = match scheme.kind {
        SchemeKind::Naive => {
            let all = block_pair_set(partition, k1, k2, &EstimatorScheme::block())?;
            (vec![all[0]], AveragingSet::Pair)
        }
        SchemeKind::Block | SchemeKind::Random => (
            block_pair_set(partition, k1, k2, &EstimatorScheme::block())?,
            AveragingSet::Block,
        ),
        SchemeKind::Row => (block_pair_set(partition, k1, k2, scheme)?, AveragingSet::Row),
        SchemeKind::Diagonal => (
            block_pair_set(partition, k1, k2, scheme)?,
            AveragingSet::Diagonal,
        ),
    };
    averaged_quantities(data, &pairs, set, options)
}

/// Quantities averaged over the three sets used by the ordering results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantitySet {
    pub block: ConcordanceQuantities,
    pub row: ConcordanceQuantities,
    pub diagonal: ConcordanceQuantities,
}

/// One line of the ordering report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedVariance {
    pub scheme: SchemeKind,
    pub variance: f64,
    pub clamped: bool,
}

/// Outcome of checking the ordering preconditions and the empirical
/// `U <= S <= Q` probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    /// U < S < (Q + U) / 2 on the block averages.
    pub su_condition: bool,
    /// T < R < (P + T) / 2 on the block averages.
    pub rt_condition: bool,
    /// Both conditions hold, so the ordering result applies.
    pub applicable: bool,
    /// Var[Block] < Var[Diagonal] < Var[Random] at N = min(g1, g2).
    pub ordering_holds: bool,
    /// Finite-sample variances, smallest first.
    pub ranked: Vec<RankedVariance>,
    /// U <= S <= Q on block averages and on diagonal/row averages.
    pub usq_holds: bool,
    pub usq_violations: Vec<String>,
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingQuantity(name))
}

/// Checks the conditions of the natural ordering between the averaging
/// estimators and evaluates their finite-sample variances.
///
/// Row is evaluated at `n_avg`; Diagonal and Random at N = min(g1, g2).
pub fn ordering_report(
    quantities: &QuantitySet,
    n: usize,
    g1: usize,
    g2: usize,
    n_avg: usize,
) -> Result<OrderingReport> {
    let b = &quantities.block;
    let (q, r, s, t, u) = (b.q, need(b.r, "R")?, need(b.s, "S")?, need(b.t, "T")?, need(b.u, "U")?);
    let su_condition = u < s && s < 0.5 * (q + u);
    let rt_condition = t < r && r < 0.5 * (b.p + t);

    let n_min = g1.min(g2);
    let input = |quantities: ConcordanceQuantities, kind: SchemeKind, n_avg: usize| VarianceInput {
        quantities,
        n,
        g1,
        g2,
        n_avg,
        kind,
    };
    let mut ranked = Vec::new();
    for (kind, qs, count) in [
        (SchemeKind::Block, *b, n_min),
        (SchemeKind::Diagonal, quantities.diagonal, n_min),
        (SchemeKind::Random, *b, n_min),
        (SchemeKind::Row, quantities.row, n_avg.min(g1.max(g2))),
    ] {
        let v = finite_sample_variance(&input(qs, kind, count))?;
        ranked.push(RankedVariance {
            scheme: kind,
            variance: v.value,
            clamped: v.clamped,
        });
    }
    let var_of = |k: SchemeKind| ranked.iter().find(|r| r.scheme == k).unwrap().variance;
    let ordering_holds = var_of(SchemeKind::Block) < var_of(SchemeKind::Diagonal)
        && var_of(SchemeKind::Diagonal) < var_of(SchemeKind::Random);
    ranked.sort_by(|a, b| a.variance.total_cmp(&b.variance));

    let mut usq_violations = Vec::new();
    let mut probe = |label: &str, u: f64, s: f64, q: f64| {
        if u > s {
            usq_violations.push(format!("{label}: U = {u:.6} > S = {s:.6}"));
        }
        if s > q {
            usq_violations.push(format!("{label}: S = {s:.6} > Q = {q:.6}"));
        }
    };
    probe("block", u, s, q);
    if let (Some(ud), Some(sr)) = (quantities.diagonal.u, quantities.row.s) {
        probe("diagonal/row", ud, sr, quantities.row.q);
    }

    Ok(OrderingReport {
        su_condition,
        rt_condition,
        applicable: su_condition && rt_condition,
        ordering_holds,
        ranked,
        usq_holds: usq_violations.is_empty(),
        usq_violations,
    })
}
