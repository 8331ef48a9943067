//! Count tables, sample metadata, filtering, winsorization and the
//! fixed-effect design matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{dot, Matrix, Qr};

/// Name given to the intercept column of every design.
pub const INTERCEPT: &str = "(Intercept)";

/// Taxa x samples matrix of read counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    taxa_ids: Vec<String>,
    sample_ids: Vec<String>,
    /// Row-major, `taxa_ids.len() x sample_ids.len()`.
    counts: Vec<u64>,
}

impl CountTable {
    pub fn new(taxa_ids: Vec<String>, sample_ids: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if taxa_ids.is_empty() {
            return Err(Error::Validation("no taxa rows".into()));
        }
        if sample_ids.is_empty() {
            return Err(Error::Validation("no sample columns".into()));
        }
        if counts.len() != taxa_ids.len() * sample_ids.len() {
            return Err(Error::Dimension(format!(
                "{} counts for {} taxa x {} samples",
                counts.len(),
                taxa_ids.len(),
                sample_ids.len()
            )));
        }
        check_unique(&taxa_ids, "taxon")?;
        check_unique(&sample_ids, "sample")?;
        Ok(Self { taxa_ids, sample_ids, counts })
    }

    pub fn n_taxa(&self) -> usize {
        self.taxa_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn taxa_ids(&self) -> &[String] {
        &self.taxa_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    pub fn get(&self, taxon: usize, sample: usize) -> u64 {
        self.counts[taxon * self.n_samples() + sample]
    }

    pub fn row(&self, taxon: usize) -> &[u64] {
        let n = self.n_samples();
        &self.counts[taxon * n..(taxon + 1) * n]
    }

    /// Column sums over the current taxa.
    pub fn column_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n_samples()];
        for i in 0..self.n_taxa() {
            for (t, c) in totals.iter_mut().zip(self.row(i)) {
                *t += c;
            }
        }
        totals
    }

    /// Keeps the listed taxa and samples, in the given order.
    pub fn subset(&self, taxa: &[usize], samples: &[usize]) -> CountTable {
        let mut counts = Vec::with_capacity(taxa.len() * samples.len());
        for &i in taxa {
            let row = self.row(i);
            counts.extend(samples.iter().map(|&s| row[s]));
        }
        CountTable {
            taxa_ids: taxa.iter().map(|&i| self.taxa_ids[i].clone()).collect(),
            sample_ids: samples.iter().map(|&s| self.sample_ids[s].clone()).collect(),
            counts,
        }
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Validation(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    Continuous,
    Binary,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Numeric(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

/// One metadata column.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    name: String,
    kind: VariableKind,
    values: Values,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self { name: name.into(), kind: VariableKind::Continuous, values: Values::Numeric(values) }
    }

    /// A text-valued factor; binary when it has exactly two observed levels.
    pub fn factor(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        let levels: BTreeSet<&str> = values.iter().flatten().map(String::as_str).collect();
        let kind = if levels.len() == 2 {
            VariableKind::Binary
        } else {
            VariableKind::Categorical
        };
        Self { name: name.into(), kind, values: Values::Text(values) }
    }

    /// Numeric when every present cell parses as a finite number, a factor
    /// otherwise.
    pub fn infer(name: impl Into<String>, cells: Vec<Option<String>>) -> Self {
        let parsed: Option<Vec<Option<f64>>> = cells
            .iter()
            .map(|c| match c {
                None => Some(None),
                Some(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
            })
            .collect();
        match parsed {
            Some(v) if v.iter().any(Option::is_some) => Self::continuous(name, v),
            _ => Self::factor(name, cells),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn len(&self) -> usize {
        match &self.values {
            Values::Numeric(v) => v.len(),
            Values::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_missing(&self, i: usize) -> bool {
        match &self.values {
            Values::Numeric(v) => v[i].is_none(),
            Values::Text(v) => v[i].is_none(),
        }
    }

    /// String label of sample `i` (numbers use their shortest form).
    pub fn label(&self, i: usize) -> Option<String> {
        match &self.values {
            Values::Numeric(v) => v[i].map(|x| format!("{x}")),
            Values::Text(v) => v[i].clone(),
        }
    }

    fn select(&self, idx: &[usize]) -> Variable {
        let values = match &self.values {
            Values::Numeric(v) => Values::Numeric(idx.iter().map(|&i| v[i]).collect()),
            Values::Text(v) => Values::Text(idx.iter().map(|&i| v[i].clone()).collect()),
        };
        Variable { name: self.name.clone(), kind: self.kind, values }
    }
}

/// Per-sample covariates, rows aligned to a [`CountTable`]'s samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataTable {
    sample_ids: Vec<String>,
    variables: Vec<Variable>,
}

impl MetadataTable {
    pub fn new(sample_ids: Vec<String>, variables: Vec<Variable>) -> Result<Self> {
        check_unique(&sample_ids, "sample")?;
        let mut names = BTreeSet::new();
        for v in &variables {
            if v.len() != sample_ids.len() {
                return Err(Error::Dimension(format!(
                    "variable `{}` has {} values for {} samples",
                    v.name,
                    v.len(),
                    sample_ids.len()
                )));
            }
            if !names.insert(v.name.as_str()) {
                return Err(Error::Validation(format!("duplicate variable `{}`", v.name)));
            }
        }
        Ok(Self { sample_ids, variables })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Reorders rows to follow `sample_ids`; both sides must hold the same set.
    pub fn aligned_to(&self, sample_ids: &[String]) -> Result<MetadataTable> {
        if sample_ids == self.sample_ids.as_slice() {
            return Ok(self.clone());
        }
        let pos: BTreeMap<&str, usize> =
            self.sample_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut idx = Vec::with_capacity(sample_ids.len());
        for s in sample_ids {
            match pos.get(s.as_str()) {
                Some(&i) => idx.push(i),
                None => {
                    return Err(Error::Validation(format!("sample `{s}` missing from metadata")))
                }
            }
        }
        if idx.len() != self.sample_ids.len() {
            let wanted: BTreeSet<&str> = sample_ids.iter().map(String::as_str).collect();
            let extra = self.sample_ids.iter().find(|s| !wanted.contains(s.as_str()));
            return Err(Error::Validation(format!(
                "metadata sample `{}` not present in count table",
                extra.map_or("?", |s| s.as_str())
            )));
        }
        Ok(self.select(&idx))
    }

    pub fn select(&self, idx: &[usize]) -> MetadataTable {
        MetadataTable {
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            variables: self.variables.iter().map(|v| v.select(idx)).collect(),
        }
    }
}

/// Which metadata columns enter the model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DesignSpec {
    pub covariate: String,
    pub adjustments: Vec<String>,
    pub random_group: Option<String>,
}

impl DesignSpec {
    pub fn new(covariate: impl Into<String>) -> Self {
        Self { covariate: covariate.into(), ..Default::default() }
    }

    pub fn adjust(mut self, name: impl Into<String>) -> Self {
        self.adjustments.push(name.into());
        self
    }

    pub fn group(mut self, name: impl Into<String>) -> Self {
        self.random_group = Some(name.into());
        self
    }

    /// Every metadata column the spec references.
    pub fn referenced(&self) -> Vec<&str> {
        let mut v = vec![self.covariate.as_str()];
        v.extend(self.adjustments.iter().map(String::as_str));
        if let Some(g) = &self.random_group {
            v.push(g);
        }
        v
    }
}

/// Random-intercept grouping of samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    labels: Vec<String>,
    index: Vec<usize>,
}

impl Grouping {
    /// Groups samples by label; group order is lexicographic.
    pub fn from_labels(labels: &[String]) -> Self {
        let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
        let names: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();
        let pos: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let index = labels.iter().map(|l| pos[l.as_str()]).collect();
        Self { labels: names, index }
    }

    pub fn from_indices(index: Vec<usize>) -> Self {
        let g = index.iter().copied().max().map_or(0, |m| m + 1);
        let labels = (0..g).map(|i| format!("g{i}")).collect();
        Self { labels, index }
    }

    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Group of each sample.
    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_groups()];
        for &g in &self.index {
            s[g] += 1;
        }
        s
    }
}

/// Fixed-effect design `z_s = (u_s, 1, c_s)` with an optional grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    z: Matrix,
    column_names: Vec<String>,
    groups: Option<Grouping>,
}

impl DesignMatrix {
    /// Checks the column layout and full column rank.
    pub fn new(z: Matrix, column_names: Vec<String>, groups: Option<Grouping>) -> Result<Self> {
        if z.cols() < 2 {
            return Err(Error::Dimension("design needs a covariate and an intercept".into()));
        }
        if column_names.len() != z.cols() {
            return Err(Error::Dimension("one name per design column".into()));
        }
        if (0..z.rows()).any(|s| z[(s, 1)] != 1.0) {
            return Err(Error::Validation("design column 2 must be the intercept".into()));
        }
        if z.rows() <= z.cols() {
            return Err(Error::Validation(format!(
                "need more samples ({}) than design columns ({})",
                z.rows(),
                z.cols()
            )));
        }
        if let Some(g) = &groups {
            if g.index().len() != z.rows() {
                return Err(Error::Dimension("grouping length differs from sample count".into()));
            }
        }
        check_full_rank(&z, &column_names)?;
        Ok(Self { z, column_names, groups })
    }

    /// Design for a covariate and adjustment columns given as plain vectors.
    pub fn from_covariates(u: &[f64], adjustments: &[Vec<f64>]) -> Result<Self> {
        let mut cols = vec![u.to_vec(), vec![1.0; u.len()]];
        cols.extend(adjustments.iter().cloned());
        let mut names = vec!["u".to_string(), INTERCEPT.to_string()];
        names.extend((0..adjustments.len()).map(|k| format!("c{}", k + 1)));
        Self::new(Matrix::from_columns(&cols), names, None)
    }

    pub fn with_groups(mut self, groups: Grouping) -> Result<Self> {
        if groups.index().len() != self.n_samples() {
            return Err(Error::Dimension("grouping length differs from sample count".into()));
        }
        self.groups = Some(groups);
        Ok(self)
    }

    pub fn without_groups(&self) -> Self {
        Self { groups: None, ..self.clone() }
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn n_samples(&self) -> usize {
        self.z.rows()
    }

    /// Number of columns, `d + 2`.
    pub fn n_columns(&self) -> usize {
        self.z.cols()
    }

    /// Number of adjustment columns.
    pub fn d(&self) -> usize {
        self.z.cols() - 2
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn covariate(&self) -> Vec<f64> {
        self.z.column(0)
    }

    pub fn groups(&self) -> Option<&Grouping> {
        self.groups.as_ref()
    }

    /// Keeps the listed samples (rank is re-checked).
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let p = self.z.cols();
        let mut data = Vec::with_capacity(idx.len() * p);
        for &s in idx {
            data.extend_from_slice(self.z.row(s));
        }
        let groups = self.groups.as_ref().map(|g| {
            let labels: Vec<String> =
                idx.iter().map(|&s| g.labels[g.index[s]].clone()).collect();
            Grouping::from_labels(&labels)
        });
        Self::new(Matrix::from_vec(idx.len(), p, data), self.column_names.clone(), groups)
    }
}

/// Incremental Gram-Schmidt over the columns (intercept first); the first
/// column that adds no new direction is reported with the columns that span it.
fn check_full_rank(z: &Matrix, names: &[String]) -> Result<()> {
    const TOL: f64 = 1e-9;
    let n = z.rows();
    let mut order: Vec<usize> = vec![1, 0];
    order.extend(2..z.cols());
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut accepted: Vec<usize> = Vec::new();
    for &j in &order {
        let col = z.column(j);
        let norm = math::sqrt(dot(&col, &col));
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                for (x, qi) in v.iter_mut().zip(q) {
                    *x -= c * qi;
                }
            }
        }
        let rnorm = math::sqrt(dot(&v, &v));
        if norm == 0.0 || rnorm <= TOL * norm {
            let others = if norm == 0.0 || accepted.is_empty() {
                Vec::new()
            } else {
                let prev = Matrix::from_columns(
                    &accepted.iter().map(|&k| z.column(k)).collect::<Vec<_>>(),
                );
                let coef = Qr::new(&prev).solve(&col);
                accepted
                    .iter()
                    .zip(&coef)
                    .filter(|(&k, c)| {
                        let cn = math::sqrt(z.column(k).iter().map(|x| x * x).sum());
                        c.abs() * cn > 1e-8 * norm
                    })
                    .map(|(&k, _)| names[k].clone())
                    .collect()
            };
            return Err(Error::RankDeficient { column: names[j].clone(), others });
        }
        for x in &mut v {
            *x /= rnorm;
        }
        basis.push(v);
        accepted.push(j);
    }
    debug_assert!(n >= basis.len());
    Ok(())
}

/// Builds `Z` from metadata. Binary variables are coded 0/1 with the
/// lexicographically smaller level as 0; categorical adjustments get one
/// dummy per non-reference level (reference = smallest level).
pub fn build_design(meta: &MetadataTable, spec: &DesignSpec) -> Result<DesignMatrix> {
    if spec.adjustments.iter().any(|a| *a == spec.covariate) {
        return Err(Error::Validation(format!(
            "covariate of interest `{}` also listed as an adjustment",
            spec.covariate
        )));
    }
    let lookup = |name: &str| -> Result<&Variable> {
        meta.variable(name)
            .ok_or_else(|| Error::Validation(format!("unknown metadata column `{name}`")))
    };
    for name in spec.referenced() {
        let v = lookup(name)?;
        if let Some(i) = (0..v.len()).find(|&i| v.is_missing(i)) {
            return Err(Error::Validation(format!(
                "missing value for `{name}` in sample `{}`",
                meta.sample_ids()[i]
            )));
        }
    }

    let n = meta.sample_ids().len();
    let u = lookup(&spec.covariate)?;
    let u_col = match (u.kind(), u.values()) {
        (VariableKind::Continuous, Values::Numeric(v)) => v.iter().map(|x| x.unwrap()).collect(),
        (VariableKind::Binary, _) => binary_codes(u),
        _ => {
            return Err(Error::Unsupported(format!(
                "covariate of interest `{}` is categorical with more than two levels",
                u.name()
            )))
        }
    };

    let mut cols: Vec<Vec<f64>> = vec![u_col, vec![1.0; n]];
    let mut names = vec![spec.covariate.clone(), INTERCEPT.to_string()];
    for name in &spec.adjustments {
        let v = lookup(name)?;
        match (v.kind(), v.values()) {
            (VariableKind::Continuous, Values::Numeric(x)) => {
                cols.push(x.iter().map(|x| x.unwrap()).collect());
                names.push(name.clone());
            }
            (VariableKind::Binary, _) => {
                let levels = observed_levels(v);
                cols.push(binary_codes(v));
                names.push(format!("{name}[{}]", levels[1]));
            }
            _ => {
                let levels = observed_levels(v);
                for level in levels.iter().skip(1) {
                    cols.push(
                        (0..n)
                            .map(|i| if v.label(i).as_deref() == Some(level) { 1.0 } else { 0.0 })
                            .collect(),
                    );
                    names.push(format!("{name}[{level}]"));
                }
            }
        }
    }

    let groups = match &spec.random_group {
        None => None,
        Some(g) => {
            let v = lookup(g)?;
            let labels: Vec<String> = (0..n).map(|i| v.label(i).unwrap()).collect();
            Some(Grouping::from_labels(&labels))
        }
    };
    DesignMatrix::new(Matrix::from_columns(&cols), names, groups)
}

fn observed_levels(v: &Variable) -> Vec<String> {
    let set: BTreeSet<String> = (0..v.len()).filter_map(|i| v.label(i)).collect();
    set.into_iter().collect()
}

fn binary_codes(v: &Variable) -> Vec<f64> {
    let levels = observed_levels(v);
    let one = levels.get(1);
    (0..v.len())
        .map(|i| match (v.label(i), one) {
            (Some(l), Some(o)) if &l == o => 1.0,
            _ => 0.0,
        })
        .collect()
}

/// Drops shallow samples and rare taxa.
///
/// Samples with library size below `min_libsize` go first; then taxa present
/// in fewer than `ceil(min_prevalence * n_retained)` samples. The two passes
/// repeat until nothing changes, so the result is a fixed point.
pub fn filter_dataset(
    counts: &CountTable,
    meta: &MetadataTable,
    min_libsize: u64,
    min_prevalence: f64,
) -> Result<(CountTable, MetadataTable)> {
    if !(0.0..=1.0).contains(&min_prevalence) {
        return Err(Error::Validation(format!(
            "min_prevalence must lie in [0, 1], got {min_prevalence}"
        )));
    }
    let meta = meta.aligned_to(counts.sample_ids())?;
    let mut taxa: Vec<usize> = (0..counts.n_taxa()).collect();
    let mut samples: Vec<usize> = (0..counts.n_samples()).collect();
    loop {
        let kept_samples: Vec<usize> = samples
            .iter()
            .copied()
            .filter(|&s| taxa.iter().map(|&i| counts.get(i, s)).sum::<u64>() >= min_libsize)
            .collect();
        if kept_samples.is_empty() {
            return Err(Error::EmptyAfterFilter);
        }
        let need = prevalence_threshold(min_prevalence, kept_samples.len());
        let kept_taxa: Vec<usize> = taxa
            .iter()
            .copied()
            .filter(|&i| kept_samples.iter().filter(|&&s| counts.get(i, s) > 0).count() >= need)
            .collect();
        if kept_taxa.is_empty() {
            return Err(Error::EmptyAfterFilter);
        }
        let stable = kept_samples.len() == samples.len() && kept_taxa.len() == taxa.len();
        samples = kept_samples;
        taxa = kept_taxa;
        if stable {
            break;
        }
    }
    Ok((counts.subset(&taxa, &samples), meta.select(&samples)))
}

/// `ceil(fraction * n)`, ignoring representation error in the product.
fn prevalence_threshold(fraction: f64, n: usize) -> usize {
    math::ceil(fraction * n as f64 - 1e-9).max(0.0) as usize
}

/// Caps each taxon's counts at `ceil(q_i)`, where `q_i` is the type-7
/// `quantile` of that taxon's counts.
pub fn winsorize(counts: &CountTable, quantile: f64) -> Result<CountTable> {
    if !(quantile > 0.5 && quantile <= 1.0) {
        return Err(Error::Validation(format!(
            "winsorization quantile must lie in (0.5, 1], got {quantile}"
        )));
    }
    let n = counts.n_samples();
    let mut out = Vec::with_capacity(counts.counts.len());
    let mut buf = vec![0.0; n];
    for i in 0..counts.n_taxa() {
        let row = counts.row(i);
        for (b, &c) in buf.iter_mut().zip(row) {
            *b = c as f64;
        }
        buf.sort_by(f64::total_cmp);
        let q = math::quantile_sorted(&buf, quantile);
        let cap = math::ceil(q) as u64;
        out.extend(row.iter().map(|&c| if (c as f64) > q { cap } else { c }));
    }
    Ok(CountTable { taxa_ids: counts.taxa_ids.clone(), sample_ids: counts.sample_ids.clone(), counts: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn text(vals: &[&str]) -> Vec<Option<String>> {
        vals.iter().map(|s| Some(s.to_string())).collect()
    }

    #[test]
    fn count_table_validation() {
        let t = CountTable::new(ids("t", 2), ids("s", 2), vec![3, 0, 1, 7]).unwrap();
        assert_eq!((t.n_taxa(), t.n_samples()), (2, 2));
        assert_eq!(t.column_totals(), vec![4, 7]);
        let dup = CountTable::new(vec!["a".into(), "a".into()], ids("s", 1), vec![1, 2]);
        assert!(matches!(dup, Err(Error::Validation(m)) if m.contains("duplicate taxon")));
        let empty = CountTable::new(vec![], ids("s", 2), vec![]);
        assert!(matches!(empty, Err(Error::Validation(m)) if m == "no taxa rows"));
    }

    #[test]
    fn filter_drops_shallow_sample() {
        // s0 has 999 reads, below the default 1000.
        let counts = CountTable::new(ids("t", 2), ids("s", 3), vec![500, 600, 700, 499, 600, 700])
            .unwrap();
        let meta = MetadataTable::new(ids("s", 3), vec![]).unwrap();
        let (c, m) = filter_dataset(&counts, &meta, 1000, 0.1).unwrap();
        assert_eq!(c.sample_ids(), &["s1".to_string(), "s2".to_string()]);
        assert_eq!(m.sample_ids(), c.sample_ids());
    }

    #[test]
    fn filter_noop_thresholds_is_identity() {
        let counts = CountTable::new(ids("t", 3), ids("s", 2), vec![0, 0, 1, 0, 5, 2]).unwrap();
        let meta = MetadataTable::new(ids("s", 2), vec![]).unwrap();
        let (c, _) = filter_dataset(&counts, &meta, 0, 0.0).unwrap();
        assert_eq!(c, counts);
    }

    #[test]
    fn filter_prevalence_boundary() {
        // m=10, n=20; taxon 0 nonzero in exactly 2 samples: ceil(0.1 * 20) = 2, kept.
        let (m, n) = (10, 20);
        let mut counts = vec![5u64; m * n];
        for s in 2..n {
            counts[s] = 0;
        }
        // taxon 1 nonzero in a single sample: dropped.
        for s in 1..n {
            counts[n + s] = 0;
        }
        let t = CountTable::new(ids("t", m), ids("s", n), counts).unwrap();
        let meta = MetadataTable::new(ids("s", n), vec![]).unwrap();
        let (c, _) = filter_dataset(&t, &meta, 0, 0.10).unwrap();
        assert!(c.taxa_ids().contains(&"t0".to_string()));
        assert!(!c.taxa_ids().contains(&"t1".to_string()));
        assert_eq!(c.n_taxa(), 9);
    }

    #[test]
    fn filter_everything_is_an_error() {
        let counts = CountTable::new(ids("t", 1), ids("s", 2), vec![3, 4]).unwrap();
        let meta = MetadataTable::new(ids("s", 2), vec![]).unwrap();
        assert_eq!(filter_dataset(&counts, &meta, 1000, 0.1), Err(Error::EmptyAfterFilter));
    }

    #[test]
    fn winsorize_examples() {
        let t = CountTable::new(ids("t", 2), ids("s", 4), vec![0, 1, 2, 100, 5, 5, 5, 5]).unwrap();
        let w = winsorize(&t, 0.75).unwrap();
        // Type-7 0.75 quantile of (0, 1, 2, 100) is 26.5, capped at 27.
        assert_eq!(w.row(0), &[0, 1, 2, 27]);
        assert_eq!(w.row(1), &[5, 5, 5, 5]);
        assert_eq!(winsorize(&t, 1.0).unwrap(), t);
        assert!(winsorize(&t, 0.5).is_err());
    }

    #[test]
    fn design_binary_minimal() {
        let meta = MetadataTable::new(
            ids("s", 4),
            vec![Variable::factor("grp", text(&["ctrl", "case", "ctrl", "case"]))],
        )
        .unwrap();
        let z = build_design(&meta, &DesignSpec::new("grp")).unwrap();
        assert_eq!((z.n_samples(), z.n_columns(), z.d()), (4, 2, 0));
        // "case" < "ctrl" lexicographically, so case = 0.
        assert_eq!(z.covariate(), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn design_categorical_dummies() {
        let meta = MetadataTable::new(
            ids("s", 6),
            vec![
                Variable::continuous("u", vec![Some(0.1), Some(1.2), Some(-0.3), Some(0.8), Some(2.0), Some(-1.0)]),
                Variable::factor("site", text(&["a", "b", "c", "a", "b", "c"])),
            ],
        )
        .unwrap();
        let z = build_design(&meta, &DesignSpec::new("u").adjust("site")).unwrap();
        assert_eq!(z.d(), 2);
        assert_eq!(z.column_names()[2..], ["site[b]".to_string(), "site[c]".to_string()]);
    }

    #[test]
    fn design_collinear_adjustment() {
        let u = vec![Some(0.0), Some(1.0), Some(0.0), Some(1.0), Some(1.0)];
        let meta = MetadataTable::new(
            ids("s", 5),
            vec![Variable::continuous("u", u.clone()), Variable::continuous("dup", u)],
        )
        .unwrap();
        let err = build_design(&meta, &DesignSpec::new("u").adjust("dup")).unwrap_err();
        match err {
            Error::RankDeficient { column, others } => {
                assert_eq!(column, "dup");
                assert_eq!(others, vec!["u".to_string()]);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn design_rejects_constant_and_multilevel_covariate() {
        let meta = MetadataTable::new(
            ids("s", 4),
            vec![
                Variable::continuous("k", vec![Some(2.0); 4]),
                Variable::factor("tri", text(&["a", "b", "c", "a"])),
            ],
        )
        .unwrap();
        assert!(matches!(
            build_design(&meta, &DesignSpec::new("k")),
            Err(Error::RankDeficient { ref column, .. }) if column == "k"
        ));
        assert!(matches!(build_design(&meta, &DesignSpec::new("tri")), Err(Error::Unsupported(_))));
        assert!(build_design(&meta, &DesignSpec::new("missing")).is_err());
    }

    #[test]
    fn metadata_alignment() {
        let meta = MetadataTable::new(
            vec!["b".into(), "a".into()],
            vec![Variable::continuous("x", vec![Some(2.0), Some(1.0)])],
        )
        .unwrap();
        let aligned = meta.aligned_to(&["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(aligned.variable("x").unwrap().label(0).unwrap(), "1");
        assert!(meta.aligned_to(&["a".to_string(), "c".to_string()]).is_err());
        assert!(meta.aligned_to(&["a".to_string()]).is_err());
    }

    #[test]
    fn infer_variable_kinds() {
        let v = Variable::infer("x", text(&["1", "2.5", "3"]));
        assert_eq!(v.kind(), VariableKind::Continuous);
        let v = Variable::infer("x", text(&["F", "M", "F"]));
        assert_eq!(v.kind(), VariableKind::Binary);
        let v = Variable::infer("x", vec![Some("1".into()), None]);
        assert_eq!(v.kind(), VariableKind::Continuous);
    }
}
