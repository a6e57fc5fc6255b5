//! Pairwise alpha-power Euclidean distances and the elementary two-sample
//! statistics: Gini mean distances, the d_alpha two-sample distance, and the
//! sorted O(n log n) linearization of absolute-difference sums.

use rayon::prelude::*;

use crate::error::{DiscoError, Result};

/// Neumaier-compensated accumulator. The decomposition identities are checked
/// at 1e-9 relative over N^2 terms of mixed magnitude, so plain summation is
/// not good enough.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Row-major N x p numeric response block.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl ResponseMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(DiscoError::EmptyData);
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(DiscoError::EmptyData);
        }
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(DiscoError::SizeMismatch {
                    expected: p,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DiscoError::NonFiniteInput { row: i, col: j });
                }
                values.push(v);
            }
        }
        Ok(Self {
            n: rows.len(),
            p,
            values,
        })
    }

    /// Builds from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        if columns.is_empty() || columns[0].is_empty() {
            return Err(DiscoError::EmptyData);
        }
        let n = columns[0].len();
        for c in columns {
            if c.len() != n {
                return Err(DiscoError::SizeMismatch {
                    expected: n,
                    actual: c.len(),
                });
            }
        }
        let p = columns.len();
        let mut values = Vec::with_capacity(n * p);
        for i in 0..n {
            for (j, c) in columns.iter().enumerate() {
                if !c[i].is_finite() {
                    return Err(DiscoError::NonFiniteInput { row: i, col: j });
                }
                values.push(c[i]);
            }
        }
        Ok(Self { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    /// The single column of a univariate response.
    pub fn as_univariate(&self) -> Option<&[f64]> {
        (self.p == 1).then_some(self.values.as_slice())
    }
}

/// Symmetric N x N matrix of alpha-power Euclidean distances
/// ||x_i - x_m||^alpha, zero diagonal, tagged with its index alpha.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    alpha: f64,
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, m: usize) -> f64 {
        self.entries[i * self.n + m]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Sum of all N^2 entries, compensated.
    pub fn total_sum(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &v in &self.entries {
            acc.add(v);
        }
        acc.value()
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) || !alpha.is_finite() {
        return Err(DiscoError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Computes the matrix of alpha-power Euclidean distances. Each unordered
/// pair is computed once and mirrored, so the matrix is exactly symmetric;
/// rows are processed in parallel but every entry is written by exactly one
/// task with a fixed column order, keeping results thread-count independent.
#[allow(clippy::needless_range_loop)]
pub fn pairwise_alpha_distances(data: &ResponseMatrix, alpha: f64) -> Result<DistanceMatrix> {
    validate_alpha(alpha)?;
    let n = data.n();
    let mut entries = vec![0.0f64; n * n];

    // alpha/2 applied to the squared norm; alpha == 2 short-circuits the
    // power entirely, alpha == 1 is a sqrt.
    let half_alpha = alpha / 2.0;
    entries
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let xi = data.row(i);
            for m in (i + 1)..n {
                let xm = data.row(m);
                let mut sq = 0.0f64;
                for c in 0..data.p() {
                    let d = xi[c] - xm[c];
                    sq += d * d;
                }
                row[m] = if alpha == 2.0 {
                    sq
                } else if alpha == 1.0 {
                    sq.sqrt()
                } else {
                    sq.powf(half_alpha)
                };
            }
        });
    // Mirror the upper triangle.
    for i in 0..n {
        for m in (i + 1)..n {
            entries[m * n + i] = entries[i * n + m];
        }
    }
    Ok(DistanceMatrix { alpha, n, entries })
}

/// Group labels for N observations split into K nonempty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexGroups {
    group_count: usize,
    assignment: Vec<usize>,
    sizes: Vec<usize>,
}

impl IndexGroups {
    /// Builds from 0-based labels in `0..group_count`; every group must be
    /// nonempty.
    pub fn new(assignment: Vec<usize>, group_count: usize) -> Result<Self> {
        if assignment.is_empty() {
            return Err(DiscoError::EmptyData);
        }
        let mut sizes = vec![0usize; group_count];
        for &label in &assignment {
            if label >= group_count {
                return Err(DiscoError::IndexOutOfRange {
                    index: label,
                    n: group_count,
                });
            }
            sizes[label] += 1;
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(DiscoError::IndexOutOfRange {
                index: j,
                n: group_count,
            });
        }
        Ok(Self {
            group_count,
            assignment,
            sizes,
        })
    }

    /// Interns arbitrary labels in first-appearance order.
    pub fn from_labels<T: Eq + std::hash::Hash>(labels: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut seen: std::collections::HashMap<T, usize> = std::collections::HashMap::new();
        let mut assignment = Vec::new();
        for label in labels {
            let next = seen.len();
            let code = *seen.entry(label).or_insert(next);
            assignment.push(code);
        }
        let k = seen.len();
        Self::new(assignment, k)
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Observation indices belonging to group `j`.
    pub fn members(&self, j: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| (g == j).then_some(i))
            .collect()
    }
}

fn validate_index_set(idx: &[usize], n: usize) -> Result<()> {
    if idx.is_empty() {
        return Err(DiscoError::EmptyIndexSet);
    }
    for &i in idx {
        if i >= n {
            return Err(DiscoError::IndexOutOfRange { index: i, n });
        }
    }
    Ok(())
}

/// Gini mean distance g_alpha(A, B): the average of D over all cross pairs
/// of the two index sets. The sets may overlap or coincide (within-sample
/// use). Arguments are canonicalized before summing so the result is exactly
/// symmetric in (A, B).
pub fn gini_mean(d: &DistanceMatrix, idx_a: &[usize], idx_b: &[usize]) -> Result<f64> {
    validate_index_set(idx_a, d.n())?;
    validate_index_set(idx_b, d.n())?;
    let (a, b) = if idx_b < idx_a {
        (idx_b, idx_a)
    } else {
        (idx_a, idx_b)
    };
    let mut acc = KahanSum::new();
    for &i in a {
        let row = d.row(i);
        for &m in b {
            acc.add(row[m]);
        }
    }
    Ok(acc.value() / (idx_a.len() as f64 * idx_b.len() as f64))
}

/// Two-sample d_alpha-distance between disjoint samples A and B:
/// (n1 n2 / (n1 + n2)) * [2 g(A,B) - g(A,A) - g(B,B)].
pub fn d_alpha(d: &DistanceMatrix, idx_a: &[usize], idx_b: &[usize]) -> Result<f64> {
    validate_index_set(idx_a, d.n())?;
    validate_index_set(idx_b, d.n())?;
    let mut in_a = vec![false; d.n()];
    for &i in idx_a {
        in_a[i] = true;
    }
    if idx_b.iter().any(|&i| in_a[i]) {
        return Err(DiscoError::OverlappingIndexSets);
    }
    let g_ab = gini_mean(d, idx_a, idx_b)?;
    let g_aa = gini_mean(d, idx_a, idx_a)?;
    let g_bb = gini_mean(d, idx_b, idx_b)?;
    let n1 = idx_a.len() as f64;
    let n2 = idx_b.len() as f64;
    Ok(n1 * n2 / (n1 + n2) * (2.0 * g_ab - g_aa - g_bb))
}

/// Sum of |x_i - x_m| over all unordered pairs, computed in O(n log n) by
/// sorting: with order statistics x_(1) <= ... <= x_(n) the sum equals
/// sum_i (2i - n - 1) x_(i).
pub fn linearized_within_sums(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(DiscoError::EmptyData);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    let mut acc = KahanSum::new();
    for (k, &x) in sorted.iter().enumerate() {
        let coeff = (2 * (k + 1)) as f64 - (n as f64) - 1.0;
        acc.add(coeff * x);
    }
    Ok(acc.value())
}
