use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use blocktau::block::{averaged_kendall_matrix, AveragingCount, EstimatorScheme, Partition, SchemeKind};
use blocktau::concordance::{concordance_quantities, kendall_matrix, QuantityOptions};
use blocktau::conditional::{conditional_kendall_matrix, KernelFamily, KernelSpec};
use blocktau::elliptical::{
    backtest_var, block_pd_check, correlation_from_kendall, covariance_from_correlation, elliptical_quantile,
    silverman_xi_bandwidth, var_from_quantile, EllipticalModel, GeneratorSpec, SilvermanExponent,
};
use blocktau::io::{
    column_names, load_group_file, load_observations, parse_grid, parse_number_list, parse_variance_request,
    read_matrix_csv, read_tabulated_generator, read_tabulated_kernel, write_matrix_csv, LoadOptions,
};
use blocktau::simulation::{run_experiment, summary_json, write_long_csv, ExperimentConfig};
use blocktau::variance::{asymptotic_variance, finite_sample_variance, scheme_quantities, LimitMode, VarianceInput};
use blocktau::{Error, KendallMatrix, ObservationMatrix, Result};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use crate::args::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ktmatrix(a) => ktmatrix(a),
        Command::Cktmatrix(a) => cktmatrix(a),
        Command::Variance(a) => variance(a),
        Command::Quantities(a) => quantities(a),
        Command::Pdcheck(a) => pdcheck(a),
        Command::Var(a) => var(a),
        Command::Backtest(a) => backtest(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn load(path: &Path, no_header: bool, strict: bool) -> Result<ObservationMatrix> {
    let options = LoadOptions {
        header: !no_header,
        strict,
        ..LoadOptions::default()
    };
    let report = load_observations(path, options)?;
    if report.dropped() > 0 {
        eprintln!(
            "warning: dropped {} row(s) with missing or non-finite values (lines {:?})",
            report.dropped(),
            report.dropped_lines
        );
    }
    Ok(report.data)
}

fn load_data(a: &DataArgs) -> Result<ObservationMatrix> {
    load(&a.data, a.no_header, a.strict)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn scheme_kind(s: Scheme) -> SchemeKind {
    match s {
        Scheme::Naive => SchemeKind::Naive,
        Scheme::Block => SchemeKind::Block,
        Scheme::Row => SchemeKind::Row,
        Scheme::Diag => SchemeKind::Diagonal,
        Scheme::Random => SchemeKind::Random,
    }
}

fn estimator(a: &SchemeArgs) -> EstimatorScheme {
    let count = match a.n_avg {
        Some(n) => AveragingCount::Fixed(n),
        None => AveragingCount::MinGroupSize,
    };
    EstimatorScheme::new(scheme_kind(a.scheme)).with_count(count).with_seed(a.seed)
}

/// The partition from `--groups`, or a single group when the scheme does
/// not need one.
fn partition(a: &SchemeArgs, names: &[String]) -> Result<Partition> {
    match &a.groups {
        Some(path) => load_group_file(path, Some(names), names.len()),
        None if a.scheme == Scheme::Naive => Partition::new(vec![0; names.len()]),
        None => Err(Error::Config(format!(
            "--groups is required for the {} scheme",
            scheme_kind(a.scheme).name()
        ))),
    }
}

fn resolve(field: &str, names: &[String]) -> Result<usize> {
    let field = field.trim();
    if let Some(j) = names.iter().position(|n| n == field) {
        return Ok(j);
    }
    match field.parse::<usize>() {
        Ok(i) if (1..=names.len()).contains(&i) => Ok(i - 1),
        Ok(i) => Err(Error::ColumnOutOfRange {
            index: i,
            p: names.len(),
        }),
        Err(_) => Err(Error::Config(format!("unknown column '{field}'"))),
    }
}

fn resolve_pair(text: &str, names: &[String]) -> Result<(usize, usize)> {
    match text.split(',').collect::<Vec<_>>()[..] {
        [a, b] => Ok((resolve(a, names)?, resolve(b, names)?)),
        _ => Err(Error::Config(format!("pair '{text}' is not 'a,b'"))),
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn kendall(data: &ObservationMatrix, a: &SchemeArgs) -> Result<KendallMatrix> {
    if a.groups.is_none() && a.scheme == Scheme::Naive {
        return kendall_matrix(data);
    }
    let partition = partition(a, &column_names(data))?;
    averaged_kendall_matrix(data, &partition, &estimator(a))
}

fn ktmatrix(a: KtArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let names = column_names(&data);
    let m = kendall(&data, &a.scheme)?;
    match a.format {
        Format::Csv => {
            let mut w = sink(a.out.as_deref())?;
            write_matrix_csv(m.values(), &names, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(
            &json!({
                "names": names,
                "scheme": m.scheme().kind,
                "matrix": matrix_rows(m.values()),
            }),
            a.out.as_deref(),
        ),
    }
}

fn kernel_family(text: &str) -> Result<KernelFamily> {
    match text.parse::<KernelFamily>() {
        Ok(k) => Ok(k),
        Err(_) if Path::new(text).is_file() => Ok(KernelFamily::Custom(read_tabulated_kernel(File::open(text)?)?)),
        Err(e) => Err(e),
    }
}

fn cktmatrix(a: CktArgs) -> Result<()> {
    let full = load_data(&a.data)?;
    let all_names = column_names(&full);
    let z_cols = a
        .z_cols
        .split(',')
        .map(|f| resolve(f, &all_names))
        .collect::<Result<Vec<_>>>()?;
    let x_cols: Vec<usize> = (0..full.p()).filter(|j| !z_cols.contains(j)).collect();
    if x_cols.is_empty() {
        return Err(Error::Config("every column is a covariate".into()));
    }
    let z_samples = full.select_columns(&z_cols)?;
    let data = full.select_columns(&x_cols)?;
    let names = column_names(&data);
    let partition = partition(&a.scheme, &names)?;
    let grid = parse_grid(&a.grid)?;
    let kernel = KernelSpec::new(kernel_family(&a.kernel)?, a.bandwidth)?;
    let results = conditional_kendall_matrix(&data, &partition, &estimator(&a.scheme), &z_samples, &grid, &kernel)?;
    match a.format {
        Format::Json => {
            let points: Vec<serde_json::Value> = grid
                .points()
                .iter()
                .zip(&results)
                .map(|(z, r)| match r {
                    Ok(m) => json!({ "z": z, "matrix": matrix_rows(m.values()) }),
                    Err(e) => json!({ "z": z, "error": e.kind(), "message": e.to_string() }),
                })
                .collect();
            write_json(&json!({ "names": names, "points": points }), a.out.as_deref())
        }
        Format::Csv => {
            let mut w = sink(a.out.as_deref())?;
            for (z, r) in grid.points().iter().zip(&results) {
                let label: Vec<String> = z.iter().map(|v| blocktau::io::format_value(*v)).collect();
                match r {
                    Ok(m) => {
                        writeln!(w, "# z = {}", label.join(";"))?;
                        write_matrix_csv(m.values(), &names, &mut w)?;
                    }
                    Err(e) => {
                        writeln!(w, "# z = {}: {}", label.join(";"), e)?;
                        eprintln!("warning: z = {}: {}", label.join(";"), e);
                    }
                }
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn limit(l: Limit) -> LimitMode {
    match l {
        Limit::Finite => LimitMode::FiniteBlock,
        Limit::Large => LimitMode::LargeBlock,
    }
}

fn variance(a: VarianceArgs) -> Result<()> {
    let input = if let Some(path) = &a.quantities {
        parse_variance_request(&std::fs::read_to_string(path)?)?.input()
    } else {
        let path = a
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("give a data file or --quantities".into()))?;
        let data = load(path, a.no_header, a.strict)?;
        let names = column_names(&data);
        let partition = match &a.scheme.groups {
            Some(g) => load_group_file(g, Some(&names), names.len())?,
            None => return Err(Error::Config("--groups is required with a data file".into())),
        };
        let (k1, k2) = match parse_number_list(&a.block)?[..] {
            [k1, k2] if k1 >= 1.0 && k2 >= 1.0 && k1.fract() == 0.0 && k2.fract() == 0.0 => {
                (k1 as usize - 1, k2 as usize - 1)
            }
            _ => return Err(Error::Config(format!("block '{}' is not 'k1,k2'", a.block))),
        };
        if k1 >= partition.k() || k2 >= partition.k() {
            return Err(Error::InvalidPartition(format!("block ({},{}) outside {} groups", k1 + 1, k2 + 1, partition.k())));
        }
        let scheme = estimator(&a.scheme);
        let options = QuantityOptions { pair_rows: a.pair_rows };
        let quantities = scheme_quantities(&data, &partition, k1, k2, &scheme, options)?;
        VarianceInput {
            quantities,
            n: data.n(),
            g1: partition.group(k1).len(),
            g2: partition.group(k2).len(),
            n_avg: scheme.count_for(&partition, k1, k2)?,
            kind: scheme.kind,
        }
    };
    let value = finite_sample_variance(&input)?;
    let asymptotic = a.asymptotic.map(|l| asymptotic_variance(&input, limit(l))).transpose()?;
    if value.clamped {
        eprintln!("warning: variance estimate {} was negative and clamped to 0", value.raw);
    }
    write_json(
        &json!({
            "scheme": input.kind,
            "n": input.n,
            "g1": input.g1,
            "g2": input.g2,
            "N": input.n_avg,
            "quantities": input.quantities,
            "variance": value,
            "asymptotic": asymptotic,
        }),
        None,
    )
}

fn quantities(a: QuantitiesArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let names = column_names(&data);
    let pair1 = resolve_pair(&a.pair, &names)?;
    let pair2 = a.pair2.as_deref().map(|p| resolve_pair(p, &names)).transpose()?;
    let q = concordance_quantities(&data, pair1, pair2)?;
    write_json(&serde_json::to_value(q).map_err(|e| Error::Io(e.to_string()))?, None)
}

fn pdcheck(a: PdArgs) -> Result<()> {
    let check = block_pd_check(a.b1, a.b2, a.rho1, a.rho2, a.rho3)?;
    write_json(&serde_json::to_value(check).map_err(|e| Error::Io(e.to_string()))?, None)
}

fn generator(text: &str, dim: usize) -> Result<GeneratorSpec> {
    let lower = text.to_ascii_lowercase();
    if lower == "gaussian" || lower == "normal" {
        return GeneratorSpec::gaussian(dim);
    }
    if let Some(nu) = lower.strip_prefix("t:") {
        let nu = nu
            .parse::<f64>()
            .map_err(|_| Error::InvalidGenerator(format!("invalid degrees of freedom '{nu}'")))?;
        return GeneratorSpec::student_t(nu, dim);
    }
    if Path::new(text).is_file() {
        return GeneratorSpec::tabulated(read_tabulated_generator(File::open(text)?)?, dim);
    }
    Err(Error::InvalidGenerator(format!("unknown generator '{text}'")))
}

fn var(a: VarArgs) -> Result<()> {
    let mut silverman = None;
    let mut repaired = None;
    let (mu, sigma) = if let Some(path) = &a.sigma {
        let sigma = read_matrix_csv(File::open(path)?)?.values;
        let mu = match &a.mu {
            Some(text) => DVector::from_vec(parse_number_list(text)?),
            None => DVector::zeros(sigma.nrows()),
        };
        (mu, sigma)
    } else {
        let path = a
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("give a returns file or --sigma".into()))?;
        let data = load(path, a.no_header, a.strict)?;
        let tau = kendall(&data, &a.scheme)?;
        let corr = correlation_from_kendall(&tau, a.repair)?;
        repaired = Some(corr.repaired);
        let sigma = covariance_from_correlation(&corr.matrix, &data.column_std_devs())?;
        let mu = DVector::from_vec(data.column_means());
        let exponent = match a.silverman_exponent {
            Exponent::Positive => SilvermanExponent::Positive,
            Exponent::Negative => SilvermanExponent::Negative,
        };
        silverman = Some(silverman_xi_bandwidth(&data, &mu, &sigma, exponent)?);
        (mu, sigma)
    };
    let delta = DVector::from_vec(parse_number_list(&a.weights)?);
    let model = EllipticalModel::new(mu, sigma, generator(&a.generator, delta.len())?)?;
    let q = elliptical_quantile(&model.generator, a.alpha)?;
    let value = var_from_quantile(&model.mu, &model.sigma, &delta, q)?;
    write_json(
        &json!({
            "alpha": a.alpha,
            "quantile": q,
            "var": value,
            "portfolio_mean": delta.dot(&model.mu),
            "portfolio_sd": (delta.transpose() * &model.sigma * &delta)[(0, 0)].sqrt(),
            "correlation_repaired": repaired,
            "silverman": silverman.map(|s| json!({ "h": s.h, "variance": s.variance })),
        }),
        None,
    )
}

fn backtest(a: BacktestArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let col = resolve(&a.column, &column_names(&data))?;
    let result = backtest_var(data.column(col), a.var_level, a.alpha)?;
    write_json(&serde_json::to_value(result).map_err(|e| Error::Io(e.to_string()))?, None)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = ExperimentConfig::from_json(&std::fs::read_to_string(&a.config)?)?;
    let tables = run_experiment(&config)?;
    let mut w = sink(a.csv.as_deref())?;
    write_long_csv(&tables.long_rows(), &mut w)?;
    w.flush()?;
    if let Some(path) = &a.json {
        std::fs::write(path, summary_json(&config, &tables)?)?;
    }
    Ok(())
}
