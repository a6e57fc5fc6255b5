//! Model formulas and the multi-factor DISCO decomposition.
//!
//! A formula like `y1,y2 ~ A*B + C` is expanded to cell-means style terms
//! (`A`, `B`, `C`, `A:B`), each term is decomposed on its crossed-cells
//! grouping, and interaction components are obtained by subtracting the
//! components of all lower-order terms contained in them.

use crate::core_stats::{DistanceMatrix, IndexGroups, KahanSum};
use crate::error::{DiscoError, Result};

/// A categorical column: per-observation level codes plus level names in
/// first-appearance order.
#[derive(Debug, Clone)]
pub struct Factor {
    pub name: String,
    pub codes: Vec<usize>,
    pub level_names: Vec<String>,
}

impl Factor {
    pub fn from_labels<S: AsRef<str>>(name: &str, labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(DiscoError::EmptyData);
        }
        let mut level_names: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            let code = match level_names.iter().position(|l| l == label) {
                Some(c) => c,
                None => {
                    level_names.push(label.to_string());
                    level_names.len() - 1
                }
            };
            codes.push(code);
        }
        Ok(Self {
            name: name.to_string(),
            codes,
            level_names,
        })
    }

    pub fn level_count(&self) -> usize {
        self.level_names.len()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// A model term: a nonempty set of factor names, kept in formula-appearance
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    factors: Vec<String>,
}

impl Term {
    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn label(&self) -> String {
        self.factors.join(":")
    }

    fn same_set(&self, other: &Term) -> bool {
        self.factors.len() == other.factors.len()
            && self.factors.iter().all(|f| other.factors.contains(f))
    }

    fn is_proper_subset_of(&self, other: &Term) -> bool {
        self.factors.len() < other.factors.len()
            && self.factors.iter().all(|f| other.factors.contains(f))
    }
}

/// Parsed and expanded model formula: response columns and subset-ordered
/// terms with `*` products expanded and duplicates collapsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFormula {
    response: Vec<String>,
    terms: Vec<Term>,
}

impl ModelFormula {
    pub fn response_columns(&self) -> &[String] {
        &self.response
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// All distinct factor names, in appearance order.
    pub fn factor_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for t in &self.terms {
            for f in t.factors() {
                if !names.contains(&f.as_str()) {
                    names.push(f);
                }
            }
        }
        names
    }
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Tilde,
    Comma,
    Plus,
    Colon,
    Star,
    End,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<(usize, Token)> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.text[self.pos..].chars().next() else {
            return Ok((start, Token::End));
        };
        let tok = match c {
            '~' => Token::Tilde,
            ',' => Token::Comma,
            '+' => Token::Plus,
            ':' => Token::Colon,
            '*' => Token::Star,
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let rest = &self.text[self.pos..];
                let end = rest
                    .char_indices()
                    .find(|&(_, c)| !(c.is_alphanumeric() || c == '_' || c == '.'))
                    .map(|(i, _)| i)
                    .unwrap_or(rest.len());
                let ident = rest[..end].to_string();
                self.pos += end;
                return Ok((start, Token::Ident(ident)));
            }
            other => {
                return Err(DiscoError::FormulaSyntax {
                    position: start,
                    message: format!("unexpected character '{other}'"),
                });
            }
        };
        self.pos += c.len_utf8();
        Ok((start, tok))
    }
}

/// Parses `RESPONSE ~ TERMS` where RESPONSE is a comma-separated identifier
/// list and TERMS is a `+`-separated list of `:`/`*` factor chains.
pub fn parse_formula(text: &str) -> Result<ModelFormula> {
    let mut lex = Lexer::new(text);

    // response list
    let mut response: Vec<String> = Vec::new();
    loop {
        let (pos, tok) = lex.next()?;
        let Token::Ident(name) = tok else {
            return Err(DiscoError::FormulaSyntax {
                position: pos,
                message: "expected response column name".into(),
            });
        };
        if response.contains(&name) {
            return Err(DiscoError::DuplicateResponse(name));
        }
        response.push(name);
        let (pos, tok) = lex.next()?;
        match tok {
            Token::Comma => continue,
            Token::Tilde => break,
            _ => {
                return Err(DiscoError::FormulaSyntax {
                    position: pos,
                    message: "expected ',' or '~' after response column".into(),
                });
            }
        }
    }

    // term chains: units joined by ':' inside a unit, '*' crossing units,
    // '+' separating chains
    let mut raw_terms: Vec<Term> = Vec::new();
    'chains: loop {
        // one chain: unit ( (':'|'*') unit )* where each unit is one ident;
        // consecutive ':' merge into the current unit group, '*' starts a
        // new unit
        let mut units: Vec<Vec<String>> = Vec::new();
        let mut current: Vec<String> = Vec::new();
        loop {
            let (pos, tok) = lex.next()?;
            let Token::Ident(name) = tok else {
                return Err(DiscoError::FormulaSyntax {
                    position: pos,
                    message: "expected factor name".into(),
                });
            };
            if !current.contains(&name) {
                current.push(name);
            }
            let (pos, tok) = lex.next()?;
            match tok {
                Token::Colon => continue,
                Token::Star => {
                    units.push(std::mem::take(&mut current));
                    continue;
                }
                Token::Plus | Token::End => {
                    units.push(std::mem::take(&mut current));
                    // expand '*' over all nonempty subsets of units
                    let count = 1usize << units.len();
                    for mask in 1..count {
                        let mut factors: Vec<String> = Vec::new();
                        for (u, unit) in units.iter().enumerate() {
                            if mask & (1 << u) != 0 {
                                for f in unit {
                                    if !factors.contains(f) {
                                        factors.push(f.clone());
                                    }
                                }
                            }
                        }
                        raw_terms.push(Term { factors });
                    }
                    if tok == Token::End {
                        break 'chains;
                    }
                    break;
                }
                _ => {
                    return Err(DiscoError::FormulaSyntax {
                        position: pos,
                        message: "expected ':', '*', '+' or end of formula".into(),
                    });
                }
            }
        }
    }

    // dedupe (set semantics) keeping first appearance, then order by
    // interaction order so every term follows all of its subsets
    let mut terms: Vec<Term> = Vec::new();
    for t in raw_terms {
        if !terms.iter().any(|u| u.same_set(&t)) {
            terms.push(t);
        }
    }
    terms.sort_by_key(|t| t.order());
    Ok(ModelFormula { response, terms })
}

/// Grouping by the distinct observed level tuples of the given factors;
/// empty (unobserved) cells are simply absent.
pub fn cross_levels(factors: &[&Factor]) -> Result<IndexGroups> {
    let n = factors
        .first()
        .map(|f| f.len())
        .ok_or(DiscoError::EmptyData)?;
    for f in factors {
        if f.len() != n {
            return Err(DiscoError::SizeMismatch {
                expected: n,
                actual: f.len(),
            });
        }
    }
    IndexGroups::from_labels((0..n).map(|i| {
        factors
            .iter()
            .map(|f| f.codes[i])
            .collect::<Vec<usize>>()
    }))
}

/// One row of a DISCO table.
#[derive(Debug, Clone)]
pub struct DiscoRow {
    pub label: String,
    pub df: usize,
    pub sum_dispersion: f64,
    pub mean_dispersion: f64,
    pub f_ratio: f64,
    pub p_value: Option<f64>,
}

/// Per-term dispersion decomposition with within and total rows.
#[derive(Debug, Clone)]
pub struct DiscoTable {
    pub alpha: f64,
    pub rows: Vec<DiscoRow>,
    pub within_df: usize,
    pub within: f64,
    pub within_mean: f64,
    pub total_df: usize,
    pub total: f64,
}

struct BoundTerm {
    label: String,
    cells: IndexGroups,
    df: usize,
    /// indices of earlier terms that are proper subsets of this one
    contained: Vec<usize>,
}

/// A formula bound to concrete factor columns: per-term cell groupings and
/// degrees of freedom, ready for repeated evaluation against a shared
/// distance matrix (the permutation replicates reuse this).
pub struct BoundModel {
    terms: Vec<BoundTerm>,
    df_within: usize,
    n: usize,
}

pub fn bind_model(factors: &[Factor], formula: &ModelFormula, n: usize) -> Result<BoundModel> {
    let mut bound: Vec<BoundTerm> = Vec::new();
    let mut df_total_terms = 0usize;
    for (t_idx, term) in formula.terms().iter().enumerate() {
        let mut cols: Vec<&Factor> = Vec::new();
        for name in term.factors() {
            let f = factors
                .iter()
                .find(|f| &f.name == name)
                .ok_or_else(|| DiscoError::UnknownColumn(name.clone()))?;
            if f.len() != n {
                return Err(DiscoError::SizeMismatch {
                    expected: n,
                    actual: f.len(),
                });
            }
            if f.level_count() < 2 {
                return Err(DiscoError::SingleLevelFactor(f.name.clone()));
            }
            cols.push(f);
        }
        let cells = cross_levels(&cols)?;
        if cells.group_count() < 2 {
            return Err(DiscoError::SingleLevelFactor(term.label()));
        }
        if term.order() >= 2 {
            let expected: usize = cols.iter().map(|f| f.level_count()).product();
            if cells.group_count() < expected {
                return Err(DiscoError::IncompleteInteraction {
                    term: term.label(),
                    observed: cells.group_count(),
                });
            }
        }
        let contained: Vec<usize> = formula.terms()[..t_idx]
            .iter()
            .enumerate()
            .filter_map(|(s_idx, s)| s.is_proper_subset_of(term).then_some(s_idx))
            .collect();
        let df_subsets: usize = contained.iter().map(|&s| bound[s].df).sum();
        let df = (cells.group_count() - 1)
            .checked_sub(df_subsets)
            .ok_or(DiscoError::NoResidualDf(0))?;
        df_total_terms += df;
        bound.push(BoundTerm {
            label: term.label(),
            cells,
            df,
            contained,
        });
    }
    let df_within = (n as i64 - 1) - df_total_terms as i64;
    if df_within < 1 {
        return Err(DiscoError::NoResidualDf(df_within));
    }
    Ok(BoundModel {
        terms: bound,
        df_within: df_within as usize,
        n,
    })
}

/// Within-cell dispersion sum_j (block sum of D over cell j) / (2 n_j),
/// with cell labels read through an optional permutation of observation
/// indices.
fn within_dispersion(
    d: &DistanceMatrix,
    cells: &IndexGroups,
    perm: Option<&[usize]>,
) -> f64 {
    let n = d.n();
    let base = cells.assignment();
    let labels: Vec<usize> = match perm {
        Some(p) => (0..n).map(|i| base[p[i]]).collect(),
        None => base.to_vec(),
    };
    let k = cells.group_count();
    let mut block = vec![KahanSum::new(); k];
    for i in 0..n {
        let row = d.row(i);
        let gi = labels[i];
        for (m, &v) in row.iter().enumerate() {
            if labels[m] == gi {
                block[gi].add(v);
            }
        }
    }
    let mut within = KahanSum::new();
    for (j, acc) in block.iter().enumerate() {
        within.add(acc.value() / (2.0 * cells.sizes()[j] as f64));
    }
    within.value()
}

impl BoundModel {
    pub fn df_within(&self) -> usize {
        self.df_within
    }

    pub fn term_labels(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.label.as_str()).collect()
    }

    pub fn term_dfs(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.df).collect()
    }

    /// Term components and the residual W for an optionally permuted
    /// alignment of factor labels to observations.
    fn components(
        &self,
        d: &DistanceMatrix,
        total: f64,
        perm: Option<&[usize]>,
    ) -> Result<(Vec<f64>, f64)> {
        if total == 0.0 {
            return Err(DiscoError::AllIdentical);
        }
        let mut components = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let w_cells = within_dispersion(d, &term.cells, perm);
            let s_cells = total - w_cells;
            let lower: f64 = term.contained.iter().map(|&s| components[s]).sum();
            let component: f64 = s_cells - lower;
            if component < -1e-9 * total {
                return Err(DiscoError::NegativeComponent {
                    term: term.label.clone(),
                    value: component,
                });
            }
            components.push(component);
        }
        let w = total - components.iter().sum::<f64>();
        if w <= 0.0 {
            return Err(DiscoError::DegenerateWithin);
        }
        Ok((components, w))
    }

    /// Per-term F ratios under a permuted alignment; `total` is the
    /// (permutation-invariant) total dispersion.
    pub fn f_values_permuted(
        &self,
        d: &DistanceMatrix,
        total: f64,
        perm: &[usize],
    ) -> Result<Vec<f64>> {
        let (components, w) = self.components(d, total, Some(perm))?;
        let w_mean = w / self.df_within as f64;
        Ok(self
            .terms
            .iter()
            .zip(&components)
            .map(|(t, &c)| (c / t.df as f64) / w_mean)
            .collect())
    }

    /// Observed DISCO table (no p-values).
    pub fn decompose(&self, d: &DistanceMatrix) -> Result<DiscoTable> {
        let total = d.total_sum() / (2.0 * self.n as f64);
        let (components, w) = self.components(d, total, None)?;
        let w_mean = w / self.df_within as f64;
        let rows = self
            .terms
            .iter()
            .zip(&components)
            .map(|(t, &c)| DiscoRow {
                label: t.label.clone(),
                df: t.df,
                sum_dispersion: c,
                mean_dispersion: c / t.df as f64,
                f_ratio: (c / t.df as f64) / w_mean,
                p_value: None,
            })
            .collect();
        Ok(DiscoTable {
            alpha: d.alpha(),
            rows,
            within_df: self.df_within,
            within: w,
            within_mean: w_mean,
            total_df: self.n - 1,
            total,
        })
    }
}

/// Multi-factor DISCO decomposition of a distance matrix under a model
/// formula.
pub fn multiway_disco(
    d: &DistanceMatrix,
    factors: &[Factor],
    formula: &ModelFormula,
) -> Result<DiscoTable> {
    bind_model(factors, formula, d.n())?.decompose(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_stats::{pairwise_alpha_distances, ResponseMatrix};
    use crate::decomposition::oneway_disco;
    use approx::assert_relative_eq;

    fn term_sets(f: &ModelFormula) -> Vec<Vec<String>> {
        f.terms().iter().map(|t| t.factors().to_vec()).collect()
    }

    #[test]
    fn parse_single_factor() {
        let f = parse_formula("y ~ A").unwrap();
        assert_eq!(f.response_columns(), &["y".to_string()]);
        assert_eq!(term_sets(&f), vec![vec!["A".to_string()]]);
    }

    #[test]
    fn parse_star_expansion() {
        let f = parse_formula("y1,y2 ~ A*B").unwrap();
        assert_eq!(f.response_columns(), &["y1".to_string(), "y2".to_string()]);
        assert_eq!(
            term_sets(&f),
            vec![
                vec!["A".to_string()],
                vec!["B".to_string()],
                vec!["A".to_string(), "B".to_string()],
            ]
        );
    }

    #[test]
    fn parse_duplicate_interaction_collapsed() {
        let f = parse_formula("y ~ A + B + A:B + B:A").unwrap();
        assert_eq!(
            term_sets(&f),
            vec![
                vec!["A".to_string()],
                vec!["B".to_string()],
                vec!["A".to_string(), "B".to_string()],
            ]
        );
    }

    #[test]
    fn parse_three_way_star() {
        let f = parse_formula("y ~ A*B*C").unwrap();
        let sets = term_sets(&f);
        assert_eq!(sets.len(), 7);
        assert_eq!(sets[0], vec!["A".to_string()]);
        assert_eq!(sets[6], vec!["A".to_string(), "B".to_string(), "C".to_string()]);
        // every term appears after all its subsets
        for (i, t) in f.terms().iter().enumerate() {
            for s in &f.terms()[i + 1..] {
                assert!(!s.is_proper_subset_of(t));
            }
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_formula("y ~ A ++ B") {
            Err(DiscoError::FormulaSyntax { position, .. }) => assert_eq!(position, 7),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse_formula("y,y ~ A"),
            Err(DiscoError::DuplicateResponse(_))
        ));
        assert!(matches!(
            parse_formula("~ A"),
            Err(DiscoError::FormulaSyntax { .. })
        ));
    }

    fn factor(name: &str, codes: &[usize]) -> Factor {
        let labels: Vec<String> = codes.iter().map(|c| format!("l{c}")).collect();
        Factor::from_labels(name, &labels).unwrap()
    }

    #[test]
    fn cross_levels_cases() {
        let a = factor("A", &[0, 0, 1, 1]);
        let b = factor("B", &[0, 1, 0, 1]);
        let g = cross_levels(&[&a, &b]).unwrap();
        assert_eq!(g.group_count(), 4);
        assert!(g.sizes().iter().all(|&s| s == 1));

        let b2 = factor("B", &[0, 0, 1, 1]);
        let g = cross_levels(&[&a, &b2]).unwrap();
        assert_eq!(g.group_count(), 2);
        assert_eq!(g.sizes(), &[2, 2]);

        let short = factor("B", &[0, 1]);
        assert!(matches!(
            cross_levels(&[&a, &short]),
            Err(DiscoError::SizeMismatch { .. })
        ));
    }

    fn uni(values: &[f64]) -> ResponseMatrix {
        ResponseMatrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn one_factor_matches_oneway() {
        let values: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 + 0.25 * i as f64).collect();
        let codes: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A").unwrap();
        let table = multiway_disco(&d, &[factor("A", &codes)], &formula).unwrap();
        let one = oneway_disco(&d, &IndexGroups::new(codes, 3).unwrap()).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_relative_eq!(table.rows[0].sum_dispersion, one.between, max_relative = 1e-12);
        assert_relative_eq!(table.within, one.within, max_relative = 1e-12);
        assert_relative_eq!(table.rows[0].f_ratio, one.f_ratio, max_relative = 1e-12);
        assert_eq!(table.rows[0].df, one.df_between);
        assert_eq!(table.within_df, one.df_within);
    }

    #[test]
    fn confounded_factors_additive() {
        // A = B: S(A) = S(B) and W = W(A) + W(B) - T
        let values: Vec<f64> = vec![1.0, 4.0, 2.0, 7.0, 3.0, 5.0, 8.0, 6.0];
        let codes = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A + B").unwrap();
        let a = factor("A", &codes);
        let mut b = factor("B", &codes);
        b.name = "B".to_string();
        let table = multiway_disco(&d, &[a, b], &formula).unwrap();
        let one = oneway_disco(&d, &IndexGroups::new(codes, 2).unwrap()).unwrap();
        assert_relative_eq!(table.rows[0].sum_dispersion, one.between, max_relative = 1e-12);
        assert_relative_eq!(table.rows[1].sum_dispersion, one.between, max_relative = 1e-12);
        // W(A) + W(B) - T = 2W(A) - (S(A) + W(A)) = W(A) - S(A)
        assert_relative_eq!(
            table.within,
            one.within - one.between,
            max_relative = 1e-9
        );
    }

    #[test]
    fn balanced_two_by_three_identity() {
        // 2x3 with 5 replicates, y ~ A*B
        let mut values = Vec::new();
        let mut a_codes = Vec::new();
        let mut b_codes = Vec::new();
        let mut state = 11u64;
        for ai in 0..2usize {
            for bi in 0..3usize {
                for _ in 0..5 {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    values.push((state >> 40) as f64 / 1e4 + (ai * 3 + bi) as f64);
                    a_codes.push(ai);
                    b_codes.push(bi);
                }
            }
        }
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A*B").unwrap();
        let table =
            multiway_disco(&d, &[factor("A", &a_codes), factor("B", &b_codes)], &formula).unwrap();
        let dfs: Vec<usize> = table.rows.iter().map(|r| r.df).collect();
        assert_eq!(dfs, vec![1, 2, 2]);
        assert_eq!(table.within_df, 24);
        assert_eq!(table.total_df, 29);
        let sum: f64 = table.rows.iter().map(|r| r.sum_dispersion).sum::<f64>() + table.within;
        assert_relative_eq!(sum, table.total, max_relative = 1e-9);
        for r in &table.rows {
            assert!(r.sum_dispersion >= -1e-9 * table.total);
        }
    }

    #[test]
    fn interaction_only_model() {
        let values: Vec<f64> = (0..12).map(|i| (i as f64).sin() + i as f64 * 0.1).collect();
        let a_codes: Vec<usize> = (0..12).map(|i| i / 6).collect();
        let b_codes: Vec<usize> = (0..12).map(|i| (i / 3) % 2).collect();
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A:B").unwrap();
        let table =
            multiway_disco(&d, &[factor("A", &a_codes), factor("B", &b_codes)], &formula).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].label, "A:B");
        assert_eq!(table.rows[0].df, 3); // 4 cells - 1
        assert_eq!(table.within_df, 8);
    }

    #[test]
    fn single_level_factor_rejected() {
        let values: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A").unwrap();
        let a = factor("A", &[0, 0, 0, 0, 0, 0]);
        assert!(matches!(
            multiway_disco(&d, &[a], &formula),
            Err(DiscoError::SingleLevelFactor(_))
        ));
    }

    #[test]
    fn unknown_factor_rejected() {
        let values: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ Z").unwrap();
        assert!(matches!(
            multiway_disco(&d, &[factor("A", &[0, 1, 0, 1, 0, 1])], &formula),
            Err(DiscoError::UnknownColumn(_))
        ));
    }

    #[test]
    fn no_residual_df_rejected() {
        // 4 singleton cells, N = 4: within df would be 0
        let values: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A*B").unwrap();
        let a = factor("A", &[0, 0, 1, 1]);
        let b = factor("B", &[0, 1, 0, 1]);
        assert!(matches!(
            multiway_disco(&d, &[a, b], &formula),
            Err(DiscoError::NoResidualDf(_))
        ));
    }

    #[test]
    fn incomplete_interaction_rejected() {
        // cell (1,1) unobserved
        let values: Vec<f64> = (0..9).map(|i| i as f64 * 1.3).collect();
        let a = factor("A", &[0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let b = factor("B", &[0, 0, 1, 1, 0, 0, 0, 0, 0]);
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let formula = parse_formula("y ~ A*B").unwrap();
        assert!(matches!(
            multiway_disco(&d, &[a.clone(), b.clone()], &formula),
            Err(DiscoError::IncompleteInteraction { .. })
        ));
        // additive model on the same design is fine
        let formula = parse_formula("y ~ A + B").unwrap();
        assert!(multiway_disco(&d, &[a, b], &formula).is_ok());
    }

    #[test]
    fn dropping_interaction_folds_into_within() {
        // integer-valued data keeps the sums exact
        let values: Vec<f64> = vec![
            3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0, 8.0,
        ];
        let a_codes: Vec<usize> = vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let b_codes: Vec<usize> = vec![0, 0, 1, 1, 2, 2, 0, 0, 1, 1, 2, 2];
        let d = pairwise_alpha_distances(&uni(&values), 1.0).unwrap();
        let fa = factor("A", &a_codes);
        let fb = factor("B", &b_codes);
        let full = multiway_disco(
            &d,
            &[fa.clone(), fb.clone()],
            &parse_formula("y ~ A*B").unwrap(),
        )
        .unwrap();
        let additive =
            multiway_disco(&d, &[fa, fb], &parse_formula("y ~ A + B").unwrap()).unwrap();
        assert_eq!(full.rows[0].sum_dispersion, additive.rows[0].sum_dispersion);
        assert_eq!(full.rows[1].sum_dispersion, additive.rows[1].sum_dispersion);
        assert_relative_eq!(
            additive.within,
            full.within + full.rows[2].sum_dispersion,
            max_relative = 1e-12
        );
    }
}
