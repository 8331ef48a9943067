//! Per-taxon least squares on the CLR data.
//!
//! The design is factored once (`Z = Q R`); every taxon then costs one `Qᵀw`
//! product, a triangular solve and a residual pass.

use alloc::format;
use alloc::vec::Vec;

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::matrix::{self, dot, Matrix, Qr};
use crate::par;
use crate::preprocess::ClrMatrix;

/// Condition number of `Z` above which the design is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// OLS output for one taxon.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonFit {
    /// Coefficient on the covariate of interest.
    pub alpha_tilde: f64,
    /// Intercept followed by the adjustment coefficients.
    pub beta_tilde: Vec<f64>,
    /// `RSS / (n - d - 2)`.
    pub sigma2_hat: f64,
    pub df: usize,
    /// Residual variance is numerically zero; the taxon gets no p-value.
    pub degenerate: bool,
}

/// `(n⁻¹ Σ z_s z_sᵀ)⁻¹` and its (1,1) element `ρ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSummary {
    pub gram_inverse: Matrix,
    pub rho_hat: f64,
    pub condition_number: f64,
}

pub fn compute_design_summary(design: &DesignMatrix) -> Result<DesignSummary> {
    let qr = Qr::new(design.z());
    summary_from_qr(&qr, design.n_samples())
}

fn summary_from_qr(qr: &Qr, n: usize) -> Result<DesignSummary> {
    let sv = matrix::singular_values(qr.r());
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if !(smin > 0.0) {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let cond = smax / smin;
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    // (ZᵀZ / n)⁻¹ = n R⁻¹ R⁻ᵀ
    let rinv = matrix::upper_triangular_inverse(qr.r());
    let p = rinv.rows();
    let mut g = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] = n as f64 * dot(rinv.row(i), rinv.row(j));
        }
    }
    Ok(DesignSummary { rho_hat: g[(0, 0)], gram_inverse: g, condition_number: cond })
}

/// Shared factorization of the design, reusable across taxa.
#[derive(Debug, Clone)]
pub struct OlsEngine {
    z: Matrix,
    qr: Qr,
    summary: DesignSummary,
}

impl OlsEngine {
    pub fn new(design: &DesignMatrix) -> Result<Self> {
        let qr = Qr::new(design.z());
        let summary = summary_from_qr(&qr, design.n_samples())?;
        Ok(Self { z: design.z().clone(), qr, summary })
    }

    pub fn summary(&self) -> &DesignSummary {
        &self.summary
    }

    pub fn design(&self) -> &Matrix {
        &self.z
    }

    pub fn df(&self) -> usize {
        self.z.rows() - self.z.cols()
    }

    /// Coefficients `(α̃, β̃)` for one response vector.
    pub fn coefficients(&self, w: &[f64]) -> Vec<f64> {
        self.qr.solve(w)
    }

    /// Residuals `w - Z θ`.
    pub fn residuals(&self, w: &[f64], theta: &[f64]) -> Vec<f64> {
        (0..self.z.rows()).map(|s| w[s] - dot(self.z.row(s), theta)).collect()
    }

    pub fn fit(&self, w: &[f64]) -> TaxonFit {
        let theta = self.coefficients(w);
        let rss: f64 = self.residuals(w, &theta).iter().map(|r| r * r).sum();
        let df = self.df();
        let sigma2_hat = rss / df as f64;
        let mean_sq = dot(w, w) / w.len() as f64;
        TaxonFit {
            alpha_tilde: theta[0],
            beta_tilde: theta[1..].to_vec(),
            sigma2_hat,
            df,
            degenerate: sigma2_hat < 1e-12 * mean_sq + 1e-300,
        }
    }
}

/// Fits every taxon (row of `w`) against the shared design.
pub fn fit_ols_all(w: &ClrMatrix, design: &DesignMatrix) -> Result<Vec<TaxonFit>> {
    let engine = OlsEngine::new(design)?;
    fit_with(&engine, w)
}

pub(crate) fn fit_with(engine: &OlsEngine, w: &ClrMatrix) -> Result<Vec<TaxonFit>> {
    if w.n_samples() != engine.z.rows() {
        return Err(Error::Dimension(format!(
            "CLR matrix has {} samples, design has {}",
            w.n_samples(),
            engine.z.rows()
        )));
    }
    Ok(par::map_indexed(w.n_taxa(), |i| engine.fit(w.row(i))))
}
