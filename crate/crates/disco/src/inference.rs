//! Permutation test for the equal-distributions hypothesis, the conservative
//! asymptotic critical value, and cell-means residuals.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::core_stats::{pairwise_alpha_distances, KahanSum, ResponseMatrix};
use crate::error::{DiscoError, Result};
use crate::factorial::{bind_model, DiscoTable, Factor, ModelFormula};

/// Outcome of the permutation test: per-term observed F ratios, empirical
/// p-values, and the retained replicate statistics.
#[derive(Debug, Clone)]
pub struct PermutationResult {
    pub observed: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub p_values: Vec<f64>,
    /// R x (term count); retained so callers can inspect the null
    /// distribution.
    pub replicate_stats: Option<Vec<Vec<f64>>>,
}

/// Empirical p-value (1 + #{replicate >= observed}) / (R + 1); ties count
/// as exceedances.
pub fn permutation_pvalue(observed: f64, replicate_values: &[f64]) -> Result<f64> {
    if replicate_values.is_empty() {
        return Err(DiscoError::NoReplicates);
    }
    let exceed = replicate_values.iter().filter(|&&v| v >= observed).count();
    Ok((1 + exceed) as f64 / (replicate_values.len() + 1) as f64)
}

/// Runs the DISCO permutation test: computes the observed decomposition,
/// then for each replicate applies a uniform random permutation of the
/// pooled observation indices and recomputes every term's F ratio against
/// the permuted factor alignment. The distance matrix is computed once and
/// shared. Replicate r draws from its own counter-indexed RNG stream, so
/// results are identical regardless of how replicates are scheduled across
/// threads.
pub fn disco_test(
    response: &ResponseMatrix,
    factors: &[Factor],
    formula: &ModelFormula,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<(DiscoTable, PermutationResult)> {
    if replicates < 1 {
        return Err(DiscoError::NoReplicates);
    }
    let d = pairwise_alpha_distances(response, alpha)?;
    let model = bind_model(factors, formula, d.n())?;
    let mut table = model.decompose(&d)?;
    let total = table.total;
    let observed: Vec<f64> = table.rows.iter().map(|r| r.f_ratio).collect();

    let n = d.n();
    let stats: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            model.f_values_permuted(&d, total, &perm)
        })
        .collect::<Result<Vec<_>>>()?;

    let p_values: Vec<f64> = observed
        .iter()
        .enumerate()
        .map(|(t, &obs)| {
            let exceed = stats.iter().filter(|row| row[t] >= obs).count();
            (1 + exceed) as f64 / (replicates + 1) as f64
        })
        .collect();
    for (row, &p) in table.rows.iter_mut().zip(&p_values) {
        row.p_value = Some(p);
    }
    let result = PermutationResult {
        observed,
        replicates,
        seed,
        p_values,
        replicate_stats: Some(stats),
    };
    Ok((table, result))
}

/// Conservative asymptotic rejection threshold (Phi^-1(1 - alpha0/2))^2 for
/// the normalized quadratic-form limit; valid for alpha0 in (0, 0.215].
pub fn conservative_critical_value(alpha0: f64) -> Result<f64> {
    if !(alpha0 > 0.0 && alpha0 <= 0.215) {
        return Err(DiscoError::InvalidLevel(alpha0));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let q = normal.inverse_cdf(1.0 - alpha0 / 2.0);
    Ok(q * q)
}

/// Subtracts each group's mean vector from its observations; the residual
/// block of every group has zero column means.
pub fn cell_mean_residuals(response: &ResponseMatrix, factor: &Factor) -> Result<ResponseMatrix> {
    if factor.len() != response.n() {
        return Err(DiscoError::SizeMismatch {
            expected: response.n(),
            actual: factor.len(),
        });
    }
    if factor.level_count() < 2 {
        return Err(DiscoError::SingleLevelFactor(factor.name.clone()));
    }
    let k = factor.level_count();
    let p = response.p();
    let mut sums = vec![KahanSum::new(); k * p];
    let mut counts = vec![0usize; k];
    for i in 0..response.n() {
        let g = factor.codes[i];
        counts[g] += 1;
        for (c, &v) in response.row(i).iter().enumerate() {
            sums[g * p + c].add(v);
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(idx, s)| s.value() / counts[idx / p] as f64)
        .collect();
    let rows: Vec<Vec<f64>> = (0..response.n())
        .map(|i| {
            let g = factor.codes[i];
            response
                .row(i)
                .iter()
                .enumerate()
                .map(|(c, &v)| v - means[g * p + c])
                .collect()
        })
        .collect();
    ResponseMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorial::parse_formula;
    use approx::assert_relative_eq;

    #[test]
    fn pvalue_examples() {
        let reps: Vec<f64> = (0..199).map(|i| 4.0 * i as f64 / 199.0).collect();
        assert_relative_eq!(permutation_pvalue(5.0, &reps).unwrap(), 0.005);
        let reps = vec![1.0; 99];
        assert_relative_eq!(permutation_pvalue(1.0, &reps).unwrap(), 1.0);
        assert_relative_eq!(
            permutation_pvalue(2.0, &[1.0, 2.0, 3.0]).unwrap(),
            0.75
        );
        assert!(matches!(
            permutation_pvalue(1.0, &[]),
            Err(DiscoError::NoReplicates)
        ));
    }

    #[test]
    fn conservative_threshold_values() {
        // oracle: high-precision standard normal quantiles
        assert_relative_eq!(
            conservative_critical_value(0.05).unwrap(),
            3.8414588206941254,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            conservative_critical_value(0.215).unwrap(),
            1.5374350295942207,
            max_relative = 1e-8
        );
        assert!(
            conservative_critical_value(0.01).unwrap()
                > conservative_critical_value(0.05).unwrap()
        );
        assert!(conservative_critical_value(0.3).is_err());
        assert!(conservative_critical_value(0.0).is_err());
    }

    #[test]
    fn residuals_zero_group_means() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, (i * i) as f64 * 0.1])
            .collect();
        let response = ResponseMatrix::from_rows(&rows).unwrap();
        let labels: Vec<String> = (0..10).map(|i| format!("g{}", i % 2)).collect();
        let factor = Factor::from_labels("g", &labels).unwrap();
        let res = cell_mean_residuals(&response, &factor).unwrap();
        for g in 0..2 {
            for c in 0..2 {
                let mut sum = 0.0;
                let mut count = 0;
                for i in 0..10 {
                    if factor.codes[i] == g {
                        sum += res.row(i)[c];
                        count += 1;
                    }
                }
                assert!((sum / count as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residuals_of_constant_data_are_zero() {
        let response =
            ResponseMatrix::from_rows(&vec![vec![2.5]; 8]).unwrap();
        let labels: Vec<String> = (0..8).map(|i| format!("g{}", i % 2)).collect();
        let factor = Factor::from_labels("g", &labels).unwrap();
        let res = cell_mean_residuals(&response, &factor).unwrap();
        for i in 0..8 {
            assert_eq!(res.row(i)[0], 0.0);
        }
    }

    #[test]
    fn disco_test_deterministic_and_valid_pvalues() {
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| vec![((i * 13) % 7) as f64 + 0.01 * i as f64])
            .collect();
        let response = ResponseMatrix::from_rows(&rows).unwrap();
        let labels: Vec<String> = (0..24).map(|i| format!("g{}", i % 3)).collect();
        let factor = Factor::from_labels("A", &labels).unwrap();
        let formula = parse_formula("y ~ A").unwrap();
        let (t1, r1) = disco_test(&response, std::slice::from_ref(&factor), &formula, 1.0, 99, 42).unwrap();
        let (_, r2) = disco_test(&response, &[factor], &formula, 1.0, 99, 42).unwrap();
        assert_eq!(r1.p_values, r2.p_values);
        assert_eq!(r1.replicate_stats, r2.replicate_stats);
        // p in {k/(R+1)}
        let p = r1.p_values[0];
        let k = (p * 100.0).round();
        assert!((p - k / 100.0).abs() < 1e-12 && (1.0..=100.0).contains(&k));
        assert_eq!(t1.rows[0].p_value, Some(p));
    }

    #[test]
    fn disco_test_rejects_zero_replicates() {
        let response = ResponseMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let factor = Factor::from_labels("A", &["a", "b", "b"]).unwrap();
        let formula = parse_formula("y ~ A").unwrap();
        assert!(matches!(
            disco_test(&response, &[factor], &formula, 1.0, 0, 1),
            Err(DiscoError::NoReplicates)
        ));
    }
}
