//! CSV ingestion, table rendering, and the command-line surface.

use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand};

use crate::core_stats::{pairwise_alpha_distances, ResponseMatrix};
use crate::error::{DiscoError, Result};
use crate::factorial::{multiway_disco, parse_formula, DiscoTable, Factor, ModelFormula};
use crate::inference::{cell_mean_residuals, conservative_critical_value, disco_test};
use crate::simulation::{estimate_power, Alternative, PowerConfig};

/// Typed view of a CSV file: the declared numeric response block plus
/// interned categorical factor columns.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub n: usize,
    pub response_names: Vec<String>,
    pub response: ResponseMatrix,
    pub factors: Vec<Factor>,
}

/// Loads a header-first CSV, typing `response_columns` as finite reals and
/// `factor_columns` as categorical with first-appearance level order.
pub fn load_csv(
    path: &Path,
    response_columns: &[String],
    factor_columns: &[String],
) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let column_index = |name: &String| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DiscoError::UnknownColumn(name.clone()))
    };
    let response_idx: Vec<usize> = response_columns
        .iter()
        .map(column_index)
        .collect::<Result<_>>()?;
    let factor_idx: Vec<usize> = factor_columns
        .iter()
        .map(column_index)
        .collect::<Result<_>>()?;

    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); response_idx.len()];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); factor_idx.len()];
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        for (c, &idx) in response_idx.iter().enumerate() {
            let cell = record.get(idx).unwrap_or("");
            if cell.is_empty() {
                return Err(DiscoError::MissingValue {
                    row: row_no + 1,
                    col: response_columns[c].clone(),
                });
            }
            let value: f64 = cell.parse().map_err(|_| DiscoError::BadNumericCell {
                value: cell.to_string(),
                row: row_no + 1,
                col: response_columns[c].clone(),
            })?;
            if !value.is_finite() {
                return Err(DiscoError::BadNumericCell {
                    value: cell.to_string(),
                    row: row_no + 1,
                    col: response_columns[c].clone(),
                });
            }
            numeric[c].push(value);
        }
        for (c, &idx) in factor_idx.iter().enumerate() {
            let cell = record.get(idx).unwrap_or("");
            if cell.is_empty() {
                return Err(DiscoError::MissingValue {
                    row: row_no + 1,
                    col: factor_columns[c].clone(),
                });
            }
            labels[c].push(cell.to_string());
        }
    }
    let n = numeric.first().map(|c| c.len()).unwrap_or(0);
    if n == 0 {
        return Err(DiscoError::NoObservations);
    }
    let response = ResponseMatrix::from_columns(&numeric)?;
    let factors: Vec<Factor> = factor_columns
        .iter()
        .zip(&labels)
        .map(|(name, column)| {
            let f = Factor::from_labels(name, column)?;
            if f.level_count() < 2 {
                return Err(DiscoError::SingleLevelFactor(name.clone()));
            }
            Ok(f)
        })
        .collect::<Result<_>>()?;
    Ok(DataSet {
        n,
        response_names: response_columns.to_vec(),
        response,
        factors,
    })
}

/// Renders a DISCO table in the fixed-width layout: dispersions with five
/// decimals, F ratios and p-values with three. Locale independent and byte
/// stable for identical inputs.
pub fn render_disco_table(table: &DiscoTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("Distance Components: index {:.2}\n", table.alpha));
    out.push_str(&format!(
        "{:<16}{:>4}{:>12}{:>11}{:>11}{:>11}\n",
        "Source", "Df", "Sum Dist", "Mean Dist", "F-ratio", "p-value"
    ));
    out.push_str("Between:\n");
    for row in &table.rows {
        let label = format!("  {}", row.label);
        out.push_str(&format!(
            "{:<16}{:>4}{:>12.5}{:>11.5}{:>11.3}",
            label, row.df, row.sum_dispersion, row.mean_dispersion, row.f_ratio
        ));
        if let Some(p) = row.p_value {
            out.push_str(&format!("{:>11.3}", p));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "{:<16}{:>4}{:>12.5}{:>11.5}\n",
        "Within", table.within_df, table.within, table.within_mean
    ));
    out
}

#[derive(Parser)]
#[command(
    name = "disco",
    about = "Distance components (DISCO) decomposition and K-sample equal-distributions tests",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Permutation test of equal distributions with the DISCO F-ratio
    Test(TestArgs),
    /// DISCO decomposition table without permutation p-values
    Decompose(DecomposeArgs),
    /// Monte Carlo power estimate, emitted as CSV
    Power(PowerArgs),
}

#[derive(Args)]
struct TestArgs {
    /// CSV data file (header row required)
    #[arg(long)]
    data: std::path::PathBuf,
    /// Model formula, e.g. "g ~ series" or "SL,SW,PL,PW ~ Species"
    #[arg(long)]
    formula: String,
    /// Distance exponent alpha in (0, 2]
    #[arg(long = "index", default_value_t = 1.0)]
    index: f64,
    /// Number of permutation replicates
    #[arg(long, default_value_t = 999)]
    replicates: usize,
    /// RNG seed for the permutation streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decompose the cell-mean residuals of the first factor instead of
    /// the raw response
    #[arg(long)]
    residuals: bool,
    /// Also print the conservative asymptotic critical values
    #[arg(long)]
    conservative: bool,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    data: std::path::PathBuf,
    #[arg(long)]
    formula: String,
    #[arg(long = "index", default_value_t = 1.0)]
    index: f64,
}

#[derive(Args)]
struct PowerArgs {
    /// Alternative family: "t" (noncentral t(4)) or "gamma"
    /// (gamma with lognormal multiplicative error)
    #[arg(long)]
    alternative: String,
    /// Family parameter: noncentrality delta for t, sigma for gamma
    #[arg(long)]
    param: f64,
    /// Response dimension p
    #[arg(long)]
    dim: usize,
    /// Number of groups K
    #[arg(long, default_value_t = 4)]
    groups: usize,
    /// Observations per group
    #[arg(long, default_value_t = 30)]
    n: usize,
    /// Monte Carlo trials
    #[arg(long)]
    trials: usize,
    /// Test significance level
    #[arg(long, default_value_t = 0.10)]
    level: f64,
    /// Permutation replicates per test decision
    #[arg(long, default_value_t = 199)]
    replicates: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("DISCO_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            if threads >= 1 {
                // ignore the error if a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn load_for_formula(path: &Path, formula: &ModelFormula) -> Result<DataSet> {
    let factor_names: Vec<String> = formula
        .factor_names()
        .into_iter()
        .map(|s| s.to_string())
        .collect();
    load_csv(path, formula.response_columns(), &factor_names)
}

fn run_test(args: &TestArgs) -> Result<String> {
    let formula = parse_formula(&args.formula)?;
    let data = load_for_formula(&args.data, &formula)?;
    if args.replicates < 99 {
        eprintln!(
            "warning: {} permutation replicates is below the recommended minimum of 99",
            args.replicates
        );
    }
    let response = if args.residuals {
        let first_term = formula
            .terms()
            .first()
            .ok_or_else(|| DiscoError::FormulaSyntax {
                position: 0,
                message: "formula has no terms".into(),
            })?;
        let factor_name = &first_term.factors()[0];
        let factor = data
            .factors
            .iter()
            .find(|f| &f.name == factor_name)
            .ok_or_else(|| DiscoError::UnknownColumn(factor_name.clone()))?;
        cell_mean_residuals(&data.response, factor)?
    } else {
        data.response.clone()
    };
    let (table, result) = disco_test(
        &response,
        &data.factors,
        &formula,
        args.index,
        args.replicates,
        args.seed,
    )?;
    let mut out = render_disco_table(&table);
    out.push_str(&format!(
        "Permutation test: R = {}, seed = {} (unrestricted permutation)\n",
        result.replicates, result.seed
    ));
    if args.conservative {
        for level in [0.05, 0.10] {
            out.push_str(&format!(
                "Conservative critical value (level {:.2}): {:.6}\n",
                level,
                conservative_critical_value(level)?
            ));
        }
    }
    Ok(out)
}

fn run_decompose(args: &DecomposeArgs) -> Result<String> {
    let formula = parse_formula(&args.formula)?;
    let data = load_for_formula(&args.data, &formula)?;
    let d = pairwise_alpha_distances(&data.response, args.index)?;
    let table = multiway_disco(&d, &data.factors, &formula)?;
    Ok(render_disco_table(&table))
}

fn run_power(args: &PowerArgs) -> Result<String> {
    let alternative = match args.alternative.as_str() {
        "t" => Alternative::NoncentralT { delta: args.param },
        "gamma" => Alternative::GammaLognormal { sigma: args.param },
        other => {
            return Err(DiscoError::FormulaSyntax {
                position: 0,
                message: format!("unknown alternative '{other}' (expected 't' or 'gamma')"),
            });
        }
    };
    let config = PowerConfig {
        groups: args.groups,
        per_group_n: args.n,
        dim: args.dim,
        alternative,
        level: args.level,
        test_replicates: args.replicates,
        trials: args.trials,
        seed: args.seed,
    };
    let result = estimate_power(&config)?;
    Ok(format!(
        "{}\n{}\n",
        crate::simulation::PowerResult::csv_header(),
        result.csv_row()
    ))
}

/// Runs the CLI against the given argument vector. Results go to stdout,
/// diagnostics to stderr. Exit codes: 0 success, 1 usage error, 2 data
/// error, 3 model or design error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    configure_threads();
    let outcome = match &cli.command {
        Command::Test(args) => run_test(args),
        Command::Decompose(args) => run_decompose(args),
        Command::Power(args) => run_power(args),
    };
    match outcome {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
