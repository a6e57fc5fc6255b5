//! Monte Carlo level and power studies for the DISCO permutation test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, LogNormal, StandardNormal};
use rayon::prelude::*;

use crate::core_stats::ResponseMatrix;
use crate::error::{DiscoError, Result};
use crate::factorial::{parse_formula, Factor};
use crate::inference::disco_test;

/// The alternative-hypothesis member that group 1 is drawn from; the null
/// member of each family (delta = 0, sigma = 0) supplies groups 2..K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alternative {
    /// Noncentral t with 4 degrees of freedom and noncentrality `delta`.
    NoncentralT { delta: f64 },
    /// Gamma(shape 2, rate 0.1) with multiplicative Lognormal(0, sigma)
    /// errors.
    GammaLognormal { sigma: f64 },
}

impl Alternative {
    /// The null member of the same family.
    pub fn null(&self) -> Alternative {
        match self {
            Alternative::NoncentralT { .. } => Alternative::NoncentralT { delta: 0.0 },
            Alternative::GammaLognormal { .. } => Alternative::GammaLognormal { sigma: 0.0 },
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Alternative::NoncentralT { .. } => "t",
            Alternative::GammaLognormal { .. } => "gamma",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Alternative::NoncentralT { delta } => delta,
            Alternative::GammaLognormal { sigma } => sigma,
        }
    }

    fn sample(&self, n: usize, p: usize, rng: &mut impl Rng) -> Result<ResponseMatrix> {
        match *self {
            Alternative::NoncentralT { delta } => Ok(sample_noncentral_t(n, p, delta, rng)),
            Alternative::GammaLognormal { sigma } => sample_gamma_lognormal(n, p, sigma, rng),
        }
    }
}

/// Each entry is (Z + delta) / sqrt(V / 4) with Z standard normal and V
/// chi-squared(4), independently across the n x p matrix; delta = 0 gives
/// central t(4).
pub fn sample_noncentral_t(n: usize, p: usize, delta: f64, rng: &mut impl Rng) -> ResponseMatrix {
    let chi = ChiSquared::new(4.0).expect("df 4");
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    let v: f64 = chi.sample(rng);
                    (z + delta) / (v / 4.0).sqrt()
                })
                .collect()
        })
        .collect();
    ResponseMatrix::from_rows(&rows).expect("finite draws")
}

/// Each entry is G * L with G ~ Gamma(shape 2, rate 0.1) and
/// L ~ Lognormal(0, sigma); sigma = 0 reduces to the pure Gamma.
pub fn sample_gamma_lognormal(
    n: usize,
    p: usize,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<ResponseMatrix> {
    if sigma < 0.0 {
        return Err(DiscoError::NegativeSigma(sigma));
    }
    // rand_distr parameterizes Gamma by shape and scale; rate 0.1 = scale 10
    let gamma = Gamma::new(2.0, 10.0).expect("valid gamma");
    let lognormal = LogNormal::new(0.0, sigma).expect("nonnegative sigma");
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|_| gamma.sample(rng) * lognormal.sample(rng))
                .collect()
        })
        .collect();
    ResponseMatrix::from_rows(&rows)
}

/// Configuration of one Monte Carlo power estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub groups: usize,
    pub per_group_n: usize,
    pub dim: usize,
    pub alternative: Alternative,
    pub level: f64,
    pub test_replicates: usize,
    pub trials: usize,
    pub seed: u64,
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.groups < 2 {
            return Err(DiscoError::TooFewGroups(self.groups));
        }
        if self.per_group_n < 2 || self.dim < 1 || self.trials < 1 {
            return Err(DiscoError::EmptyData);
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(DiscoError::InvalidLevel(self.level));
        }
        if self.test_replicates < 1 {
            return Err(DiscoError::NoReplicates);
        }
        Ok(())
    }
}

/// Rejection fraction over the Monte Carlo trials, with its binomial
/// standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub rejection_rate: f64,
    pub mc_std_error: f64,
    pub trials: usize,
    pub config: PowerConfig,
}

impl PowerResult {
    pub fn csv_header() -> &'static str {
        "alternative,param,dim,groups,n,level,replicates,trials,seed,rejection_rate,std_error"
    }

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
            c.alternative.family_name(),
            c.alternative.parameter(),
            c.dim,
            c.groups,
            c.per_group_n,
            c.level,
            c.test_replicates,
            c.trials,
            c.seed,
            self.rejection_rate,
            self.mc_std_error
        )
    }
}

/// Runs `trials` independent experiments. Each trial draws group 1 from the
/// configured alternative and groups 2..K from the family's null member,
/// runs the DISCO permutation test with index 1, and rejects when the
/// empirical p-value is at most `level`. Trials use counter-indexed RNG
/// streams, so the estimate is reproducible for a fixed seed regardless of
/// scheduling.
pub fn estimate_power(config: &PowerConfig) -> Result<PowerResult> {
    config.validate()?;
    let formula = parse_formula("y ~ group").expect("static formula");
    let null = config.alternative.null();
    let n = config.per_group_n;
    let codes: Vec<String> = (0..config.groups)
        .flat_map(|g| std::iter::repeat_n(format!("g{g}"), n))
        .collect();
    let factor = Factor::from_labels("group", &codes)?;

    let rejections: usize = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(config.groups * n);
            let first = config.alternative.sample(n, config.dim, &mut rng)?;
            for i in 0..n {
                rows.push(first.row(i).to_vec());
            }
            for _ in 1..config.groups {
                let draw = null.sample(n, config.dim, &mut rng)?;
                for i in 0..n {
                    rows.push(draw.row(i).to_vec());
                }
            }
            let response = ResponseMatrix::from_rows(&rows)?;
            let perm_seed: u64 = rng.gen();
            let (_, result) = disco_test(
                &response,
                std::slice::from_ref(&factor),
                &formula,
                1.0,
                config.test_replicates,
                perm_seed,
            )?;
            Ok(usize::from(result.p_values[0] <= config.level))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let rate = rejections as f64 / config.trials as f64;
    Ok(PowerResult {
        rejection_rate: rate,
        mc_std_error: (rate * (1.0 - rate) / config.trials as f64).sqrt(),
        trials: config.trials,
        config: config.clone(),
    })
}
