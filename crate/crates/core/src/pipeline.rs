//! End-to-end analysis: zeros, CLR, per-taxon regression, bias correction,
//! studentization and FDR control.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::bias::{self, KdeConfig};
use crate::data::{CountTable, DesignMatrix};
use crate::error::{Error, Result};
use crate::inference::{self, LindaResult, RunMetadata};
use crate::lmm::{self, LmmEngine};
use crate::math;
use crate::ols::{self, OlsEngine};
use crate::preprocess::{self, ClrMatrix, ZeroHandling, ZeroStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ols,
    Lmm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Lmm => "lmm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindaConfig {
    pub zero: ZeroStrategy,
    /// Switches the mode-based bias correction; off reproduces plain CLR
    /// regression.
    pub bias_correction: bool,
    pub kde: KdeConfig,
    /// Target FDR level.
    pub q: f64,
}

impl Default for LindaConfig {
    fn default() -> Self {
        Self { zero: ZeroStrategy::default(), bias_correction: true, kde: KdeConfig::default(), q: 0.05 }
    }
}

impl LindaConfig {
    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Validation(alloc::format!("target FDR must lie in (0, 1), got {}", self.q)));
        }
        if self.kde.grid_points < 2 {
            return Err(Error::Validation("KDE grid needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// CLR data plus a record of how zeros were handled.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub taxa_ids: Vec<String>,
    pub clr: ClrMatrix,
    pub zero_handling: ZeroHandling,
    pub libsize_test_p: Option<f64>,
}

pub fn prepare(counts: &CountTable, design: &DesignMatrix, config: &LindaConfig) -> Result<Prepared> {
    if counts.n_samples() != design.n_samples() {
        return Err(Error::Dimension(alloc::format!(
            "count table has {} samples, design has {}",
            counts.n_samples(),
            design.n_samples()
        )));
    }
    let x = preprocess::handle_zeros(counts, config.zero, Some(design))?;
    let zero_handling = x.strategy();
    let libsize_test_p = x.libsize_test_p();
    Ok(Prepared {
        taxa_ids: counts.taxa_ids().to_vec(),
        clr: preprocess::clr_transform(x)?,
        zero_handling,
        libsize_test_p,
    })
}

/// Runs the full analysis. A design with a grouping uses the mixed model
/// (falling back to OLS when no group has two samples).
pub fn run(counts: &CountTable, design: &DesignMatrix, config: &LindaConfig) -> Result<LindaResult> {
    config.validate()?;
    let data = prepare(counts, design, config)?;
    if design.groups().is_some() {
        lmm_pipeline(&data, design, config)
    } else {
        ols_pipeline(&data, design, config)
    }
}

fn correct(alpha_tilde: &[f64], n: usize, config: &LindaConfig) -> Result<(Vec<f64>, Option<bias::BiasEstimate>)> {
    if config.bias_correction {
        let (hat, est) = bias::debias(alpha_tilde, n, &config.kde)?;
        Ok((hat, Some(est)))
    } else {
        Ok((alpha_tilde.to_vec(), None))
    }
}

fn metadata(data: &Prepared, design: &DesignMatrix, config: &LindaConfig, method: Method) -> RunMetadata {
    RunMetadata {
        n: design.n_samples(),
        m: data.clr.n_taxa(),
        d: design.d(),
        df: (design.n_samples() - design.n_columns()) as f64,
        method,
        rho_hat: None,
        zero_handling: data.zero_handling,
        libsize_test_p: data.libsize_test_p,
        bias: None,
        target_fdr: config.q,
        n_groups: design.groups().map(|g| g.n_groups()),
        warnings: Vec::new(),
    }
}

pub fn ols_pipeline(data: &Prepared, design: &DesignMatrix, config: &LindaConfig) -> Result<LindaResult> {
    config.validate()?;
    let engine = OlsEngine::new(design)?;
    let fits = ols::fit_with(&engine, &data.clr)?;
    let n = design.n_samples();
    let rho = engine.summary().rho_hat;
    let alpha_tilde: Vec<f64> = fits.iter().map(|f| f.alpha_tilde).collect();
    let (alpha_hat, bias) = correct(&alpha_tilde, n, config)?;

    let t = inference::t_statistics(&alpha_hat, &fits, rho, n);
    let stderr: Vec<Option<f64>> = fits
        .iter()
        .map(|f| (!f.degenerate).then(|| math::sqrt(rho * f.sigma2_hat / n as f64)))
        .collect();
    let df = vec![engine.df() as f64; fits.len()];
    let flags = fits
        .iter()
        .map(|f| if f.degenerate { vec!["degenerate".to_string()] } else { Vec::new() })
        .collect();
    let taxa = inference::assemble(&data.taxa_ids, &alpha_hat, &stderr, &t, &df, config.q, flags);

    let mut meta = metadata(data, design, config, Method::Ols);
    meta.rho_hat = Some(rho);
    meta.bias = bias;
    if design.groups().is_some() {
        meta.warnings.push("no group has two or more samples; fitted by OLS".to_string());
    }
    Ok(LindaResult { taxa, meta })
}

pub fn lmm_pipeline(data: &Prepared, design: &DesignMatrix, config: &LindaConfig) -> Result<LindaResult> {
    config.validate()?;
    if lmm::needs_ols_fallback(design) {
        return ols_pipeline(data, design, config);
    }
    let fits = lmm::fit_lmm_all(&data.clr, design)?;
    let engine = LmmEngine::new(design)?;
    let n = design.n_samples();
    let alpha_tilde: Vec<f64> = fits.iter().map(|f| f.alpha_tilde).collect();
    let (alpha_hat, bias) = correct(&alpha_tilde, n, config)?;

    let stderr: Vec<Option<f64>> =
        fits.iter().map(|f| (!f.degenerate).then_some(f.se_alpha)).collect();
    let t: Vec<Option<f64>> = alpha_hat
        .iter()
        .zip(&stderr)
        .map(|(a, se)| se.and_then(|se| a.is_finite().then(|| a / se)))
        .collect();
    let df: Vec<f64> = fits.iter().map(|f| f.df).collect();
    let flags = fits
        .iter()
        .map(|f| {
            let mut v = Vec::new();
            if f.degenerate {
                v.push("degenerate".to_string());
            }
            if !f.converged {
                v.push("nonconverged".to_string());
            }
            if f.lambda == 0.0 {
                v.push("boundary".to_string());
            }
            v
        })
        .collect();
    let taxa = inference::assemble(&data.taxa_ids, &alpha_hat, &stderr, &t, &df, config.q, flags);

    let mut meta = metadata(data, design, config, Method::Lmm);
    meta.df = engine.df();
    meta.bias = bias;
    Ok(LindaResult { taxa, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn toy() -> (CountTable, DesignMatrix) {
        let (m, n) = (12, 10);
        let mut counts = Vec::new();
        for i in 0..m {
            for s in 0..n {
                let base = 20 + 7 * i as u64 + (s as u64 * 13 + i as u64 * 5) % 11;
                // Taxon 0 is strongly enriched in the u = 1 group.
                let boost = if i == 0 && s % 2 == 1 { 30 } else { 1 };
                counts.push(base * boost);
            }
        }
        let taxa = (0..m).map(|i| format!("t{i}")).collect();
        let samples = (0..n).map(|s| format!("s{s}")).collect();
        let u: Vec<f64> = (0..n).map(|s| (s % 2) as f64).collect();
        (
            CountTable::new(taxa, samples, counts).unwrap(),
            DesignMatrix::from_covariates(&u, &[]).unwrap(),
        )
    }

    #[test]
    fn ols_run_flags_planted_taxon() {
        let (counts, design) = toy();
        let res = run(&counts, &design, &LindaConfig::default()).unwrap();
        assert_eq!(res.meta.method, Method::Ols);
        assert_eq!(res.rejected(), vec![0]);
        assert!(res.taxa[0].alpha_hat > 3.0);
        for t in &res.taxa {
            if let (Some(p), Some(a)) = (t.p, t.p_adj) {
                assert!(a >= p);
            }
        }
    }

    #[test]
    fn bias_off_keeps_raw_coefficients() {
        let (counts, design) = toy();
        let cfg = LindaConfig { bias_correction: false, ..LindaConfig::default() };
        let on = run(&counts, &design, &LindaConfig::default()).unwrap();
        let off = run(&counts, &design, &cfg).unwrap();
        assert!(off.meta.bias.is_none());
        let shift = on.meta.bias.as_ref().unwrap().alpha_tilde_shift;
        for (a, b) in on.taxa.iter().zip(&off.taxa) {
            assert!((a.alpha_hat - b.alpha_hat - shift).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_q_rejected() {
        let (counts, design) = toy();
        let cfg = LindaConfig { q: 1.5, ..LindaConfig::default() };
        assert!(matches!(run(&counts, &design, &cfg), Err(Error::Validation(_))));
    }
}
