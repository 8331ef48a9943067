//! Studentized statistics, t-based p-values and Benjamini-Hochberg control.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::bias::BiasEstimate;
use crate::math;
use crate::ols::TaxonFit;
use crate::pipeline::Method;
use crate::preprocess::ZeroHandling;
use crate::special;

/// Per-taxon outcome of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonResult {
    pub taxon_id: String,
    /// Bias-corrected coefficient, natural-log scale.
    pub alpha_hat: f64,
    pub stderr: Option<f64>,
    pub t_stat: Option<f64>,
    pub df: f64,
    pub p: Option<f64>,
    pub p_adj: Option<f64>,
    pub reject: bool,
    pub degenerate: bool,
    /// Free-form markers such as `degenerate` or `nonconverged`.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub n: usize,
    pub m: usize,
    /// Number of adjustment covariates.
    pub d: usize,
    /// Residual degrees of freedom of the OLS fit, or the mixed-model rule.
    pub df: f64,
    pub method: Method,
    /// `ρ̂`; only defined for the OLS path.
    pub rho_hat: Option<f64>,
    pub zero_handling: ZeroHandling,
    pub libsize_test_p: Option<f64>,
    /// `None` when bias correction was switched off.
    pub bias: Option<BiasEstimate>,
    pub target_fdr: f64,
    pub n_groups: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindaResult {
    pub taxa: Vec<TaxonResult>,
    pub meta: RunMetadata,
}

impl LindaResult {
    /// Indices of rejected taxa, in input order.
    pub fn rejected(&self) -> Vec<usize> {
        self.taxa.iter().enumerate().filter(|(_, t)| t.reject).map(|(i, _)| i).collect()
    }
}

/// `T_i = √n α̂_i / √(ρ̂ σ̂_i²)`; `None` for degenerate fits.
pub fn t_statistics(alpha_hat: &[f64], fits: &[TaxonFit], rho_hat: f64, n: usize) -> Vec<Option<f64>> {
    let root_n = math::sqrt(n as f64);
    alpha_hat
        .iter()
        .zip(fits)
        .map(|(&a, f)| {
            if f.degenerate || !a.is_finite() {
                None
            } else {
                Some(root_n * a / math::sqrt(rho_hat * f.sigma2_hat))
            }
        })
        .collect()
}

/// Two-sided p-values `2 F_df(-|T|)`.
pub fn p_values(t: &[Option<f64>], df: f64) -> Vec<Option<f64>> {
    t.iter().map(|t| t.map(|t| special::t_two_sided_p(t, df))).collect()
}

/// `m p / k`, evaluated as `p` itself at `k = m` so that rounding can never
/// push it below `p`.
#[inline]
fn bh_ratio(m: usize, p: f64, k: usize) -> f64 {
    if k == m {
        p
    } else {
        m as f64 * p / k as f64
    }
}

/// The comparison shared by both FDR formulations so that they agree bit
/// for bit.
#[inline]
fn passes(m: usize, p: f64, k: usize, q: f64) -> bool {
    bh_ratio(m, p, k) <= q
}

/// Benjamini-Hochberg step-up over the defined entries of `p`.
///
/// Returns adjusted p-values (undefined where `p` is) and the rejection
/// indicator `p_adj <= q`. Ties are ordered by index.
pub fn bh_adjust(p: &[Option<f64>], q: f64) -> (Vec<Option<f64>>, Vec<bool>) {
    let mut order: Vec<(usize, f64)> =
        p.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    let m = order.len();
    let mut adj = vec![None; p.len()];
    let mut reject = vec![false; p.len()];
    // Largest rank k with m p_(k) / k <= q; everything up to it is rejected.
    let cutoff = (1..=m).rev().find(|&k| passes(m, order[k - 1].1, k, q)).unwrap_or(0);
    let mut running = 1.0f64;
    for k in (1..=m).rev() {
        let (i, pv) = order[k - 1];
        running = running.min(bh_ratio(m, pv, k)).min(1.0);
        adj[i] = Some(running);
        reject[i] = k <= cutoff;
    }
    (adj, reject)
}

/// Smallest `t` with `FDP̂(t) = 2m F_df(-t) / #{|T_j| >= t} <= q`, scanning
/// `t ∈ {|T_i|}`. Taxa with `|T_i| >= t*` are rejected.
pub fn fdp_threshold(t: &[Option<f64>], df: f64, q: f64) -> Option<f64> {
    let mut abs: Vec<f64> = t.iter().filter_map(|v| v.map(f64::abs)).collect();
    abs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let m = abs.len();
    let mut best = None;
    for k in 1..=m {
        // Only the last member of a tie group has the full count.
        if k < m && abs[k] == abs[k - 1] {
            continue;
        }
        let p = special::t_two_sided_p(abs[k - 1], df);
        if passes(m, p, k, q) {
            best = Some(abs[k - 1]);
        }
    }
    best
}

/// Rejection indicator for a threshold from [`fdp_threshold`].
pub fn fdp_reject(t: &[Option<f64>], threshold: Option<f64>) -> Vec<bool> {
    t.iter()
        .map(|v| match (v, threshold) {
            (Some(v), Some(th)) => v.abs() >= th,
            _ => false,
        })
        .collect()
}

/// Assembles per-taxon records from studentized statistics.
pub fn assemble(
    taxa_ids: &[String],
    alpha_hat: &[f64],
    stderr: &[Option<f64>],
    t: &[Option<f64>],
    df: &[f64],
    q: f64,
    flags: Vec<Vec<String>>,
) -> Vec<TaxonResult> {
    let p: Vec<Option<f64>> =
        t.iter().zip(df).map(|(t, &df)| t.map(|t| special::t_two_sided_p(t, df))).collect();
    let (p_adj, reject) = bh_adjust(&p, q);
    flags
        .into_iter()
        .enumerate()
        .map(|(i, flags)| TaxonResult {
            taxon_id: taxa_ids[i].clone(),
            alpha_hat: alpha_hat[i],
            stderr: stderr[i],
            t_stat: t[i],
            df: df[i],
            p: p[i],
            p_adj: p_adj[i],
            reject: reject[i],
            degenerate: t[i].is_none(),
            flags,
        })
        .collect()
}
