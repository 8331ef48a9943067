//! Zero handling and the centered log-ratio transform.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{CountTable, DesignMatrix};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{dot, Matrix, Qr};
use crate::par;
use crate::special;

/// Requested zero-handling strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroStrategy {
    /// Add 0.5 to every count.
    Pseudo,
    /// Replace zeros by `N_s / max_{k: Y_ik = 0} N_k`.
    Imputation,
    /// Imputation when log library size is associated with the design at
    /// p < `threshold`, pseudo-count otherwise.
    Adaptive { threshold: f64 },
}

impl ZeroStrategy {
    pub const DEFAULT_ADAPTIVE_THRESHOLD: f64 = 0.1;

    pub fn adaptive() -> Self {
        ZeroStrategy::Adaptive { threshold: Self::DEFAULT_ADAPTIVE_THRESHOLD }
    }
}

impl Default for ZeroStrategy {
    fn default() -> Self {
        Self::adaptive()
    }
}

/// Strategy actually applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroHandling {
    Pseudo,
    Imputation,
}

impl ZeroHandling {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroHandling::Pseudo => "pseudo",
            ZeroHandling::Imputation => "imputation",
        }
    }
}

/// Strictly positive abundances ready for the log transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveAbundanceMatrix {
    values: Matrix,
    strategy: ZeroHandling,
    libsize_test_p: Option<f64>,
}

impl PositiveAbundanceMatrix {
    /// Wraps an arbitrary taxa x samples matrix; every entry must be > 0.
    pub fn new(values: Matrix, strategy: ZeroHandling) -> Result<Self> {
        check_positive(&values)?;
        Ok(Self { values, strategy, libsize_test_p: None })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn strategy(&self) -> ZeroHandling {
        self.strategy
    }

    /// p-value of the library-size association test, when one was run.
    pub fn libsize_test_p(&self) -> Option<f64> {
        self.libsize_test_p
    }
}

fn check_positive(values: &Matrix) -> Result<()> {
    let n = values.cols();
    match values.as_slice().iter().position(|&v| !(v > 0.0)) {
        Some(k) => Err(Error::NonPositive { taxon: k / n, sample: k % n, value: values.as_slice()[k] }),
        None => Ok(()),
    }
}

/// CLR-transformed abundances; every column sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClrMatrix {
    values: Matrix,
}

impl ClrMatrix {
    /// Centers each column of a log-abundance matrix.
    pub fn from_logs(mut logs: Matrix) -> Self {
        center_columns(&mut logs);
        Self { values: logs }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn n_taxa(&self) -> usize {
        self.values.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, taxon: usize) -> &[f64] {
        self.values.row(taxon)
    }
}

/// `N_s = Σ_i Y_is`; every sample must have at least one read.
pub fn library_sizes(counts: &CountTable) -> Result<Vec<u64>> {
    let totals = counts.column_totals();
    if let Some(s) = totals.iter().position(|&t| t == 0) {
        return Err(Error::ZeroLibrarySize(counts.sample_ids()[s].clone()));
    }
    Ok(totals)
}

/// Overall F-test p-value for regressing `log N_s` on the full design
/// (non-intercept columns tested jointly).
pub fn libsize_association_test(libsizes: &[u64], design: &DesignMatrix) -> Result<f64> {
    let n = design.n_samples();
    let p = design.n_columns();
    if libsizes.len() != n {
        return Err(Error::Dimension(format!("{} library sizes for {n} samples", libsizes.len())));
    }
    if n <= p {
        return Err(Error::Validation("library-size test needs n > d + 2".into()));
    }
    let y: Vec<f64> = libsizes.iter().map(|&v| math::ln(v as f64)).collect();
    let ybar = math::mean(&y);
    let rss0: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let scale = dot(&y, &y).max(1.0);
    if rss0 <= 1e-28 * scale {
        return Ok(1.0);
    }
    let theta = Qr::new(design.z()).solve(&y);
    let rss1: f64 = (0..n)
        .map(|s| {
            let r = y[s] - dot(design.z().row(s), &theta);
            r * r
        })
        .sum();
    if rss1 <= 1e-24 * rss0 {
        return Ok(0.0);
    }
    let df1 = (p - 1) as f64;
    let df2 = (n - p) as f64;
    let f = ((rss0 - rss1).max(0.0) / df1) / (rss1 / df2);
    Ok(special::f_sf(f, df1, df2))
}

/// Replaces zeros so every entry is strictly positive.
///
/// `design` is only consulted by [`ZeroStrategy::Adaptive`].
pub fn handle_zeros(
    counts: &CountTable,
    strategy: ZeroStrategy,
    design: Option<&DesignMatrix>,
) -> Result<PositiveAbundanceMatrix> {
    let (m, n) = (counts.n_taxa(), counts.n_samples());
    let (used, test_p) = match strategy {
        ZeroStrategy::Pseudo => (ZeroHandling::Pseudo, None),
        ZeroStrategy::Imputation => (ZeroHandling::Imputation, None),
        ZeroStrategy::Adaptive { threshold } => {
            let design = design.ok_or_else(|| {
                Error::Validation("adaptive zero handling needs the design matrix".into())
            })?;
            let p = libsize_association_test(&library_sizes(counts)?, design)?;
            let used = if p < threshold { ZeroHandling::Imputation } else { ZeroHandling::Pseudo };
            (used, Some(p))
        }
    };

    let mut values = Matrix::zeros(m, n);
    match used {
        ZeroHandling::Pseudo => {
            for (v, &c) in values.as_mut_slice().iter_mut().zip(counts.counts()) {
                *v = c as f64 + 0.5;
            }
        }
        ZeroHandling::Imputation => {
            let libs = library_sizes(counts)?;
            for i in 0..m {
                let row = counts.row(i);
                let max_zero = row
                    .iter()
                    .zip(&libs)
                    .filter(|(&c, _)| c == 0)
                    .map(|(_, &l)| l)
                    .max()
                    .unwrap_or(1);
                for (s, (v, &c)) in values.row_mut(i).iter_mut().zip(row).enumerate() {
                    *v = if c == 0 { libs[s] as f64 / max_zero as f64 } else { c as f64 };
                }
            }
        }
    }
    Ok(PositiveAbundanceMatrix { values, strategy: used, libsize_test_p: test_p })
}

/// `W_is = log(X_is) - (1/m) Σ_j log(X_js)`.
///
/// Each column is divided by its maximum before taking logs, which keeps the
/// logs bounded and makes the result bit-for-bit invariant to an exact
/// rescaling of the column.
pub fn clr_transform(x: PositiveAbundanceMatrix) -> Result<ClrMatrix> {
    check_positive(&x.values)?;
    let mut values = x.values;
    let (m, n) = (values.rows(), values.cols());
    let mut col_max = vec![0.0f64; n];
    for i in 0..m {
        for (mx, &v) in col_max.iter_mut().zip(values.row(i)) {
            if v > *mx {
                *mx = v;
            }
        }
    }
    par::for_each_chunk(values.as_mut_slice(), n, |_, row| {
        for (v, mx) in row.iter_mut().zip(&col_max) {
            *v = math::ln(*v / mx);
        }
    });
    center_columns(&mut values);
    Ok(ClrMatrix { values })
}

fn center_columns(values: &mut Matrix) {
    let (m, n) = (values.rows(), values.cols());
    let mut means = vec![0.0f64; n];
    for i in 0..m {
        for (acc, v) in means.iter_mut().zip(values.row(i)) {
            *acc += v;
        }
    }
    for v in &mut means {
        *v /= m as f64;
    }
    par::for_each_chunk(values.as_mut_slice(), n, |_, row| {
        for (v, mu) in row.iter_mut().zip(&means) {
            *v -= mu;
        }
    });
}
