use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::sampling::BlockModel;
use crate::block::{block_pair_set, Partition, SchemeKind};
use crate::concordance::pairwise_kendall;
use crate::conditional::{conditional_pair_values, KernelSpec};
use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Replications evaluated in parallel before folding into the totals.
const CHUNK: usize = 256;

/// Monte Carlo summary of one estimator at one sweep point.
///
/// For the naive scheme every entry of the block is an estimate of the
/// same value; bias, variance and MSE are averaged over the entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub replications: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub variance_ci_low: f64,
    pub variance_ci_high: f64,
    pub mse: f64,
    pub mse_ci_low: f64,
    pub mse_ci_high: f64,
}

/// Power sums of the errors y = estimate - truth.
#[derive(Debug, Clone)]
struct Accumulator {
    count: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
    s4: Vec<f64>,
    /// sums of the per-replication squared error e, of e^2 and of e e_ref
    e1: f64,
    e2: f64,
    cross: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            count: 0,
            s1: Vec::new(),
            s2: Vec::new(),
            s3: Vec::new(),
            s4: Vec::new(),
            e1: 0.0,
            e2: 0.0,
            cross: 0.0,
        }
    }

    /// Adds one replication and returns its squared error.
    fn push(&mut self, estimates: &[f64], truth: f64) -> f64 {
        if self.s1.is_empty() {
            let j = estimates.len();
            self.s1 = vec![0.0; j];
            self.s2 = vec![0.0; j];
            self.s3 = vec![0.0; j];
            self.s4 = vec![0.0; j];
        }
        let mut e = 0.0;
        for (j, &est) in estimates.iter().enumerate() {
            let y = est - truth;
            let y2 = y * y;
            self.s1[j] += y;
            self.s2[j] += y2;
            self.s3[j] += y2 * y;
            self.s4[j] += y2 * y2;
            e += y2;
        }
        e /= estimates.len() as f64;
        self.count += 1;
        self.e1 += e;
        self.e2 += e * e;
        e
    }

    fn summary(&self, truth: f64) -> EstimateSummary {
        let m = self.count as f64;
        let entries = self.s1.len().max(1) as f64;
        let (mut bias, mut variance, mut var_se) = (0.0, 0.0, 0.0);
        for j in 0..self.s1.len() {
            let mean = self.s1[j] / m;
            let (r2, r3, r4) = (self.s2[j] / m, self.s3[j] / m, self.s4[j] / m);
            let c2 = (r2 - mean * mean).max(0.0);
            let c4 = r4 - 4.0 * mean * r3 + 6.0 * mean * mean * r2 - 3.0 * mean.powi(4);
            bias += mean;
            variance += c2 * m / (m - 1.0);
            var_se += ((c4 - c2 * c2).max(0.0) / m).sqrt();
        }
        bias /= entries;
        variance /= entries;
        // mean of the entry-wise standard errors bounds that of the average
        var_se /= entries;
        let mse = self.e1 / m;
        let mse_se = mse_standard_error(self.e1, self.e2, self.count);
        EstimateSummary {
            replications: self.count,
            mean: truth + bias,
            bias,
            variance,
            variance_ci_low: variance - Z95 * var_se,
            variance_ci_high: variance + Z95 * var_se,
            mse,
            mse_ci_low: mse - Z95 * mse_se,
            mse_ci_high: mse + Z95 * mse_se,
        }
    }
}

fn mse_standard_error(e1: f64, e2: f64, count: usize) -> f64 {
    let m = count as f64;
    let mean = e1 / m;
    ((e2 - m * mean * mean).max(0.0) / (m - 1.0) / m).sqrt()
}

/// MSE ratio of a scheme against the block estimator with a paired
/// delta-method interval.
fn paired_ratio(a: &Accumulator, b: &Accumulator) -> (f64, f64) {
    let m = a.count as f64;
    let (ma, mb) = (a.e1 / m, b.e1 / m);
    let ratio = ma / mb;
    let var_a = (a.e2 - m * ma * ma) / (m - 1.0);
    let var_b = (b.e2 - m * mb * mb) / (m - 1.0);
    let cov = (a.cross - m * ma * mb) / (m - 1.0);
    let v = (var_a - 2.0 * ratio * cov + ratio * ratio * var_b) / (m * mb * mb);
    (ratio, v.max(0.0).sqrt())
}

/// Evaluates `f` for every replication index in parallel chunks and feeds
/// the results to `sink` in index order, so the totals do not depend on the
/// thread schedule.
fn run_replications<T, F, S>(m: usize, f: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
    S: FnMut(T),
{
    let mut start = 0;
    while start < m {
        let end = (start + CHUNK).min(m);
        let out = (start..end).into_par_iter().map(&f).collect::<Result<Vec<T>>>()?;
        out.into_iter().for_each(&mut sink);
        start = end;
    }
    Ok(())
}

/// Per-scheme pair sets of the block between the first two groups.
struct BlockPlan {
    partition: Partition,
    kinds: Vec<SchemeKind>,
    fixed: Vec<Option<Vec<(usize, usize)>>>,
}

impl BlockPlan {
    fn new(cfg: &ExperimentConfig, block_size: usize) -> Result<Self> {
        let partition = cfg.partition(block_size)?;
        let mut fixed = Vec::new();
        for &kind in &cfg.schemes {
            fixed.push(match kind {
                SchemeKind::Random => None,
                _ => Some(block_pair_set(&partition, 0, 1, &cfg.scheme(kind, 0))?),
            });
        }
        Ok(Self {
            partition,
            kinds: cfg.schemes.clone(),
            fixed,
        })
    }

    fn sets(&self, cfg: &ExperimentConfig, random_seed: u64) -> Result<Vec<Vec<(usize, usize)>>> {
        self.kinds
            .iter()
            .zip(&self.fixed)
            .map(|(&kind, set)| match set {
                Some(s) => Ok(s.clone()),
                None => block_pair_set(&self.partition, 0, 1, &cfg.scheme(kind, random_seed)),
            })
            .collect()
    }

    /// Position of a pair inside the b x b block.
    fn slot(&self, (a, b): (usize, usize)) -> usize {
        let (g1, g2) = (self.partition.group(0), self.partition.group(1));
        (a - g1[0]) * g2.len() + (b - g2[0])
    }

    fn block_len(&self) -> usize {
        self.partition.group(0).len() * self.partition.group(1).len()
    }

    /// Scheme estimates from the pairwise values: every entry for the
    /// naive scheme, the pair-set mean otherwise.
    fn estimates(&self, sets: &[Vec<(usize, usize)>], value: &[f64]) -> Vec<Vec<f64>> {
        self.kinds
            .iter()
            .zip(sets)
            .map(|(&kind, set)| {
                let vals = set.iter().map(|&pair| value[self.slot(pair)]);
                if kind == SchemeKind::Naive {
                    vals.collect()
                } else {
                    vec![vals.sum::<f64>() / set.len() as f64]
                }
            })
            .collect()
    }
}

fn union_pairs(plan: &BlockPlan, sets: &[Vec<(usize, usize)>]) -> Vec<(usize, usize)> {
    let mut seen = vec![false; plan.block_len()];
    let mut out = Vec::new();
    for &pair in sets.iter().flatten() {
        let s = plan.slot(pair);
        if !seen[s] {
            seen[s] = true;
            out.push(pair);
        }
    }
    out
}

fn replication_seed(cfg: &ExperimentConfig, n: usize, block_size: usize, rep: usize) -> u64 {
    derive_seed(cfg.seed, &[n as u64, block_size as u64, rep as u64])
}

/// One row of the MSE table.
#[derive(Debug, Clone, Serialize)]
pub struct MseRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub block_size: usize,
    pub truth: f64,
    #[serde(flatten)]
    pub summary: EstimateSummary,
}

/// MSE(scheme) / MSE(block) at one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub block_size: usize,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MseTable {
    pub rows: Vec<MseRow>,
    /// Empty when the block scheme is not among the compared schemes.
    pub ratios: Vec<RatioRow>,
}

impl MseTable {
    pub fn row(&self, scheme: SchemeKind, n: usize, block_size: usize) -> Option<&MseRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.n == n && r.block_size == block_size)
    }

    pub fn ratio(&self, scheme: SchemeKind, n: usize, block_size: usize) -> Option<&RatioRow> {
        self.ratios
            .iter()
            .find(|r| r.scheme == scheme && r.n == n && r.block_size == block_size)
    }
}

/// MSE of the off-diagonal block estimates of an unconditional block model
/// over every sweep point. All schemes see the same simulated samples.
pub fn mse_experiment(cfg: &ExperimentConfig) -> Result<MseTable> {
    cfg.validate()?;
    if cfg.model.is_conditional() {
        return Err(Error::Config("mse_experiment needs an unconditional model".into()));
    }
    let block_idx = cfg.schemes.iter().position(|&k| k == SchemeKind::Block);
    let mut table = MseTable {
        rows: Vec::new(),
        ratios: Vec::new(),
    };
    for &b in &cfg.block_sizes {
        let plan = BlockPlan::new(cfg, b)?;
        let model = BlockModel::new(&plan.partition, cfg.tau_diag, cfg.tau_off, cfg.model.family())?;
        for &n in &cfg.sample_sizes {
            let mut acc = vec![Accumulator::new(); cfg.schemes.len()];
            let rep = |r: usize| -> Result<Vec<Vec<f64>>> {
                let seed = replication_seed(cfg, n, b, r);
                let data = model.sample(n, &mut ChaCha8Rng::seed_from_u64(seed))?;
                let sets = plan.sets(cfg, derive_seed(seed, &[1]))?;
                let mut value = vec![f64::NAN; plan.block_len()];
                for pair in union_pairs(&plan, &sets) {
                    value[plan.slot(pair)] = pairwise_kendall(data.column(pair.0), data.column(pair.1))?;
                }
                Ok(plan.estimates(&sets, &value))
            };
            run_replications(cfg.replications, rep, |est| {
                let errors: Vec<f64> = acc.iter_mut().zip(&est).map(|(a, e)| a.push(e, cfg.tau_off)).collect();
                if let Some(bi) = block_idx {
                    for (a, e) in acc.iter_mut().zip(&errors) {
                        a.cross += e * errors[bi];
                    }
                }
            })?;
            for (i, &kind) in cfg.schemes.iter().enumerate() {
                table.rows.push(MseRow {
                    scheme: kind,
                    n,
                    block_size: b,
                    truth: cfg.tau_off,
                    summary: acc[i].summary(cfg.tau_off),
                });
                if let Some(bi) = block_idx {
                    let (ratio, se) = paired_ratio(&acc[i], &acc[bi]);
                    table.ratios.push(RatioRow {
                        scheme: kind,
                        n,
                        block_size: b,
                        ratio,
                        ci_low: ratio - Z95 * se,
                        ci_high: ratio + Z95 * se,
                    });
                }
            }
        }
    }
    Ok(table)
}

/// Summary of one scheme at one conditioning point.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub block_size: usize,
    pub bandwidth: f64,
    pub z: f64,
    pub truth: f64,
    #[serde(flatten)]
    pub summary: EstimateSummary,
}

/// Mean integrated squared error over the grid for one scheme.
#[derive(Debug, Clone, Serialize)]
pub struct MiseRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub block_size: usize,
    pub bandwidth: f64,
    pub mise: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replications with at least one usable grid point.
    pub replications: usize,
}

/// How many replications produced an estimate at a grid point.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub n: usize,
    pub block_size: usize,
    pub bandwidth: f64,
    pub z: f64,
    pub valid: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalReport {
    pub points: Vec<ConditionalRow>,
    pub mise: Vec<MiseRow>,
    pub coverage: Vec<CoverageRow>,
}

impl ConditionalReport {
    pub fn point(&self, scheme: SchemeKind, n: usize, block_size: usize, bandwidth: f64, z: f64) -> Option<&ConditionalRow> {
        self.points.iter().find(|r| {
            r.scheme == scheme && r.n == n && r.block_size == block_size && r.bandwidth == bandwidth && (r.z - z).abs() < 1e-9
        })
    }

    /// Bandwidth with the smallest MISE for one scheme and setting.
    pub fn optimal_bandwidth(&self, scheme: SchemeKind, n: usize, block_size: usize) -> Option<f64> {
        self.mise
            .iter()
            .filter(|r| r.scheme == scheme && r.n == n && r.block_size == block_size && r.mise.is_finite())
            .min_by(|a, b| a.mise.total_cmp(&b.mise))
            .map(|r| r.bandwidth)
    }
}

/// Scheme estimates per bandwidth and grid point of one replication;
/// `None` marks a grid point without usable local data.
type ConditionalRep = Vec<Vec<Option<Vec<Vec<f64>>>>>;

/// Conditional estimates of the off-diagonal block on the grid for every
/// bandwidth, with per-point variance and MSE and the MISE over the grid.
///
/// Every bandwidth is applied to the same simulated samples. Grid points
/// without local data in a replication are left out of that replication
/// and counted in the coverage table.
pub fn mise_experiment(cfg: &ExperimentConfig) -> Result<ConditionalReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let zs: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
    let kernels = cfg
        .bandwidths
        .iter()
        .map(|&h| KernelSpec::new(cfg.kernel.clone(), h))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ConditionalReport {
        points: Vec::new(),
        mise: Vec::new(),
        coverage: Vec::new(),
    };
    let s = cfg.schemes.len();
    for &b in &cfg.block_sizes {
        let model = cfg.conditional_model(b)?;
        let plan = BlockPlan::new(cfg, b)?;
        let truth: Vec<f64> = zs.iter().map(|&z| model.tau_off(z)).collect();
        for &n in &cfg.sample_sizes {
            let rep = |r: usize| -> Result<ConditionalRep> {
                let seed = replication_seed(cfg, n, b, r);
                let (z_samples, data): (ObservationMatrix, ObservationMatrix) =
                    model.sample(n, &mut ChaCha8Rng::seed_from_u64(seed))?;
                let sets = plan.sets(cfg, derive_seed(seed, &[1]))?;
                let pairs = union_pairs(&plan, &sets);
                let mut out = Vec::with_capacity(kernels.len());
                for kernel in &kernels {
                    let per_point = conditional_pair_values(&data, &pairs, &z_samples, &grid, kernel)?;
                    out.push(
                        per_point
                            .into_iter()
                            .map(|vals| {
                                vals.ok().map(|vals| {
                                    let mut value = vec![f64::NAN; plan.block_len()];
                                    for (&pair, v) in pairs.iter().zip(vals) {
                                        value[plan.slot(pair)] = v;
                                    }
                                    plan.estimates(&sets, &value)
                                })
                            })
                            .collect(),
                    );
                }
                Ok(out)
            };
            let mut acc = vec![vec![vec![Accumulator::new(); s]; zs.len()]; kernels.len()];
            let mut ise = vec![vec![(0usize, 0.0f64, 0.0f64); s]; kernels.len()];
            run_replications(cfg.replications, rep, |out| {
                for (hi, points) in out.iter().enumerate() {
                    let mut sums = vec![0.0; s];
                    let mut valid = 0;
                    for (zi, point) in points.iter().enumerate() {
                        if let Some(est) = point {
                            valid += 1;
                            for (si, e) in est.iter().enumerate() {
                                sums[si] += acc[hi][zi][si].push(e, truth[zi]);
                            }
                        }
                    }
                    if valid > 0 {
                        for (slot, sum) in ise[hi].iter_mut().zip(sums) {
                            let v = sum / valid as f64;
                            slot.0 += 1;
                            slot.1 += v;
                            slot.2 += v * v;
                        }
                    }
                }
            })?;
            for (hi, &h) in cfg.bandwidths.iter().enumerate() {
                for (zi, &z) in zs.iter().enumerate() {
                    let valid = acc[hi][zi][0].count;
                    report.coverage.push(CoverageRow {
                        n,
                        block_size: b,
                        bandwidth: h,
                        z,
                        valid,
                        excluded: cfg.replications - valid,
                    });
                    if valid < 2 {
                        continue;
                    }
                    for (si, &kind) in cfg.schemes.iter().enumerate() {
                        report.points.push(ConditionalRow {
                            scheme: kind,
                            n,
                            block_size: b,
                            bandwidth: h,
                            z,
                            truth: truth[zi],
                            summary: acc[hi][zi][si].summary(truth[zi]),
                        });
                    }
                }
                for (si, &kind) in cfg.schemes.iter().enumerate() {
                    let (count, e1, e2) = ise[hi][si];
                    let (mise, se) = if count >= 2 {
                        (e1 / count as f64, mse_standard_error(e1, e2, count))
                    } else {
                        (f64::NAN, f64::NAN)
                    };
                    report.mise.push(MiseRow {
                        scheme: kind,
                        n,
                        block_size: b,
                        bandwidth: h,
                        mise,
                        ci_low: mise - Z95 * se,
                        ci_high: mise + Z95 * se,
                        replications: count,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
