//! One-way DISCO decomposition T = S + W, the F-ratio, Gini sum matrices,
//! and a classical one-way ANOVA used as the alpha = 2 cross-check.

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::core_stats::{
    linearized_within_sums, DistanceMatrix, IndexGroups, KahanSum, ResponseMatrix,
};
use crate::error::{DiscoError, Result};

/// N threshold above which the univariate alpha = 1 path switches to the
/// sorted linearization instead of materializing the distance matrix.
pub const DEFAULT_LINEARIZE_THRESHOLD: usize = 2048;

/// a x a matrix with G_jk = n_j n_k g_alpha(A_j, A_k), i.e. the raw sum of
/// distance entries over the (j, k) block (M^T D M for the indicator design
/// matrix M).
#[derive(Debug, Clone)]
pub struct GiniSumMatrix {
    group_count: usize,
    sizes: Vec<usize>,
    g: Vec<f64>,
}

impl GiniSumMatrix {
    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.g[j * self.group_count + k]
    }

    /// Sum over all entries; by the partition identity this equals the sum
    /// of all entries of the underlying distance matrix.
    pub fn total_sum(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &v in &self.g {
            acc.add(v);
        }
        acc.value()
    }
}

/// Accumulates the Gini sums in a single pass over the distance matrix.
pub fn gini_sum_matrix(d: &DistanceMatrix, groups: &IndexGroups) -> Result<GiniSumMatrix> {
    if groups.len() != d.n() {
        return Err(DiscoError::SizeMismatch {
            expected: d.n(),
            actual: groups.len(),
        });
    }
    let k = groups.group_count();
    let assignment = groups.assignment();
    let mut cells = vec![KahanSum::new(); k * k];
    for i in 0..d.n() {
        let gi = assignment[i];
        let row = d.row(i);
        for (m, &v) in row.iter().enumerate() {
            cells[gi * k + assignment[m]].add(v);
        }
    }
    Ok(GiniSumMatrix {
        group_count: k,
        sizes: groups.sizes().to_vec(),
        g: cells.iter().map(|c| c.value()).collect(),
    })
}

/// The one-way decomposition: total, between, and within dispersion with
/// degrees of freedom and the F-ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoComponents {
    pub alpha: f64,
    pub total: f64,
    pub between: f64,
    pub within: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub f_ratio: f64,
}

fn validate_design(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(DiscoError::TooFewGroups(k));
    }
    if n < k + 1 {
        return Err(DiscoError::TooFewObservations {
            required: k + 1,
            groups: k,
            n,
        });
    }
    Ok(())
}

fn components_from_parts(
    alpha: f64,
    total: f64,
    within: f64,
    n: usize,
    k: usize,
) -> Result<DiscoComponents> {
    let between = total - within;
    if within == 0.0 {
        return if between > 0.0 {
            Err(DiscoError::DegenerateWithin)
        } else {
            Err(DiscoError::AllIdentical)
        };
    }
    let df_between = k - 1;
    let df_within = n - k;
    let f_ratio = (between / df_between as f64) / (within / df_within as f64);
    Ok(DiscoComponents {
        alpha,
        total,
        between,
        within,
        df_between,
        df_within,
        f_ratio,
    })
}

/// One-way DISCO decomposition from a precomputed distance matrix:
/// T = (sum of all entries)/(2N), W = sum_j G_jj/(2 n_j), S = T - W.
pub fn oneway_disco(d: &DistanceMatrix, groups: &IndexGroups) -> Result<DiscoComponents> {
    validate_design(d.n(), groups.group_count())?;
    let g = gini_sum_matrix(d, groups)?;
    let (total, within) = total_and_within(&g, d.n());
    components_from_parts(d.alpha(), total, within, d.n(), groups.group_count())
}

/// (T, W) from a Gini sum matrix.
pub(crate) fn total_and_within(g: &GiniSumMatrix, n: usize) -> (f64, f64) {
    let total = g.total_sum() / (2.0 * n as f64);
    let mut within = KahanSum::new();
    for j in 0..g.group_count() {
        within.add(g.entry(j, j) / (2.0 * g.sizes()[j] as f64));
    }
    (total, within.value())
}

/// Between-sample dispersion by the explicit pairwise form
/// sum_{j<k} (n_j n_k / 2N) (2 g_jk - g_jj - g_kk); the independent route
/// that must agree with T - W.
pub fn between_via_pairs(d: &DistanceMatrix, groups: &IndexGroups) -> Result<f64> {
    validate_design(d.n(), groups.group_count())?;
    let g = gini_sum_matrix(d, groups)?;
    let sizes = g.sizes();
    let n = d.n() as f64;
    let mut acc = KahanSum::new();
    for j in 0..g.group_count() {
        for k in (j + 1)..g.group_count() {
            let (nj, nk) = (sizes[j] as f64, sizes[k] as f64);
            let g_jk = g.entry(j, k) / (nj * nk);
            let g_jj = g.entry(j, j) / (nj * nj);
            let g_kk = g.entry(k, k) / (nk * nk);
            acc.add(nj * nk / (2.0 * n) * (2.0 * g_jk - g_jj - g_kk));
        }
    }
    Ok(acc.value())
}

/// One-way decomposition for a univariate response with alpha = 1 using the
/// sorted O(N log N) linearization; no distance matrix is formed.
pub fn oneway_disco_linearized(values: &[f64], groups: &IndexGroups) -> Result<DiscoComponents> {
    if groups.len() != values.len() {
        return Err(DiscoError::SizeMismatch {
            expected: values.len(),
            actual: groups.len(),
        });
    }
    let n = values.len();
    let k = groups.group_count();
    validate_design(n, k)?;
    let total = linearized_within_sums(values)? / n as f64;
    let mut within = KahanSum::new();
    for j in 0..k {
        let members = groups.members(j);
        let group_values: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        within.add(linearized_within_sums(&group_values)? / group_values.len() as f64);
    }
    components_from_parts(1.0, total, within.value(), n, k)
}

/// Dispatches between the matrix route and the univariate alpha = 1
/// linearization; the fast path kicks in when p = 1, alpha = 1, and N
/// exceeds `linearize_threshold` (default 2048).
pub fn oneway_disco_from_data(
    data: &ResponseMatrix,
    groups: &IndexGroups,
    alpha: f64,
    linearize_threshold: Option<usize>,
) -> Result<DiscoComponents> {
    crate::core_stats::validate_alpha(alpha)?;
    let threshold = linearize_threshold.unwrap_or(DEFAULT_LINEARIZE_THRESHOLD);
    if alpha == 1.0 && data.p() == 1 && data.n() > threshold {
        let values = data.as_univariate().expect("p == 1");
        return oneway_disco_linearized(values, groups);
    }
    let d = crate::core_stats::pairwise_alpha_distances(data, alpha)?;
    oneway_disco(&d, groups)
}

/// Classical one-way ANOVA sums of squares, the oracle for the alpha = 2
/// equivalence S_2 = SST, W_2 = SSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaResult {
    pub sst: f64,
    pub sse: f64,
    pub f_ratio: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
}

pub fn classical_anova(data: &[f64], groups: &IndexGroups) -> Result<AnovaResult> {
    if groups.len() != data.len() {
        return Err(DiscoError::SizeMismatch {
            expected: data.len(),
            actual: groups.len(),
        });
    }
    let n = data.len();
    let k = groups.group_count();
    validate_design(n, k)?;

    let mut group_sums = vec![KahanSum::new(); k];
    let mut grand = KahanSum::new();
    for (i, &v) in data.iter().enumerate() {
        group_sums[groups.assignment()[i]].add(v);
        grand.add(v);
    }
    let grand_mean = grand.value() / n as f64;
    let means: Vec<f64> = group_sums
        .iter()
        .zip(groups.sizes())
        .map(|(s, &nj)| s.value() / nj as f64)
        .collect();

    let mut sst = KahanSum::new();
    for (j, &nj) in groups.sizes().iter().enumerate() {
        let d = means[j] - grand_mean;
        sst.add(nj as f64 * d * d);
    }
    let mut sse = KahanSum::new();
    for (i, &v) in data.iter().enumerate() {
        let d = v - means[groups.assignment()[i]];
        sse.add(d * d);
    }
    let (sst, sse) = (sst.value(), sse.value());
    if sse == 0.0 {
        return if sst > 0.0 {
            Err(DiscoError::DegenerateWithin)
        } else {
            Err(DiscoError::AllIdentical)
        };
    }
    let df_between = k - 1;
    let df_within = n - k;
    let f_ratio = (sst / df_between as f64) / (sse / df_within as f64);
    let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
        .expect("valid degrees of freedom");
    let p_value = 1.0 - dist.cdf(f_ratio);
    Ok(AnovaResult {
        sst,
        sse,
        f_ratio,
        df_between,
        df_within,
        p_value,
    })
}
