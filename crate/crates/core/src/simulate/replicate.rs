use alloc::format;
use alloc::vec::Vec;

use super::generate::{generate_replicate, resolve_params};
use super::{SimConfig, SimTruth};
use crate::error::{Error, Result};
use crate::inference::LindaResult;
use crate::math;
use crate::par;
use crate::pipeline::{self, LindaConfig, Method};
use crate::preprocess::ZeroHandling;

/// How each simulated dataset is analyzed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimAnalysis {
    pub method: Method,
    pub config: LindaConfig,
}

impl Default for SimAnalysis {
    fn default() -> Self {
        Self { method: Method::Ols, config: LindaConfig::default() }
    }
}

/// Aggregated scores over the replicates that completed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub fdr_mean: f64,
    pub tpr_mean: f64,
    /// Normal-approximation 95% half-width for `fdr_mean`.
    pub fdr_ci_halfwidth: f64,
    pub fdp: Vec<f64>,
    pub tpp: Vec<f64>,
    pub rejections: Vec<usize>,
    /// Zero handling actually applied in each completed replicate.
    pub zero_handling: Vec<ZeroHandling>,
    /// Replicates whose generation or analysis failed.
    pub failures: usize,
}

impl SimMetrics {
    pub fn completed(&self) -> usize {
        self.fdp.len()
    }

    /// Fraction of completed replicates with at least one rejection.
    pub fn any_rejection_rate(&self) -> f64 {
        self.rejections.iter().filter(|&&r| r > 0).count() as f64 / self.completed().max(1) as f64
    }
}

/// `(FDP, TPP)` with `1 ∨ ·` denominators.
pub fn score(result: &LindaResult, truth: &SimTruth) -> (f64, f64) {
    let rejected = result.rejected();
    let false_pos = rejected.iter().filter(|&&i| !truth.h[i]).count();
    let true_pos = rejected.len() - false_pos;
    let fdp = false_pos as f64 / rejected.len().max(1) as f64;
    let tpp = true_pos as f64 / truth.n_true().max(1) as f64;
    (fdp, tpp)
}

struct Outcome {
    fdp: f64,
    tpp: f64,
    rejections: usize,
    zero: ZeroHandling,
}

fn one(config: &SimConfig, analysis: &SimAnalysis, params: &super::TaxonParams, index: u64) -> Result<Outcome> {
    let rep = generate_replicate(config, params, index)?;
    let design = match analysis.method {
        Method::Ols => rep.design.without_groups(),
        Method::Lmm => rep.design,
    };
    let result = pipeline::run(&rep.counts, &design, &analysis.config)?;
    let (fdp, tpp) = score(&result, &rep.truth);
    Ok(Outcome { fdp, tpp, rejections: result.rejected().len(), zero: result.meta.zero_handling })
}

/// Generates and analyzes `config.replicates` datasets.
///
/// Per-replicate failures are counted rather than propagated; invalid
/// configurations are errors.
pub fn run_replications(config: &SimConfig, analysis: &SimAnalysis) -> Result<SimMetrics> {
    config.validate()?;
    if analysis.method == Method::Lmm && !config.setting.is_grouped() {
        return Err(Error::Validation(format!(
            "the mixed model needs a grouped setting, got {}",
            config.setting
        )));
    }
    let params = resolve_params(config);
    let outcomes = par::map_indexed(config.replicates, |r| one(config, analysis, &params, r as u64).ok());

    let mut metrics = SimMetrics {
        fdr_mean: 0.0,
        tpr_mean: 0.0,
        fdr_ci_halfwidth: 0.0,
        fdp: Vec::new(),
        tpp: Vec::new(),
        rejections: Vec::new(),
        zero_handling: Vec::new(),
        failures: 0,
    };
    for o in outcomes {
        match o {
            Some(o) => {
                metrics.fdp.push(o.fdp);
                metrics.tpp.push(o.tpp);
                metrics.rejections.push(o.rejections);
                metrics.zero_handling.push(o.zero);
            }
            None => metrics.failures += 1,
        }
    }
    let k = metrics.completed();
    if k > 0 {
        metrics.fdr_mean = math::mean(&metrics.fdp);
        metrics.tpr_mean = math::mean(&metrics.tpp);
    }
    if k > 1 {
        metrics.fdr_ci_halfwidth = 1.96 * math::sd(&metrics.fdp) / math::sqrt(k as f64);
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{CovariateDesign, Setting};

    #[test]
    fn global_null_reports_zero_tpr() {
        let mut cfg = SimConfig::new(Setting::S0, CovariateDesign::C0, 60, 20);
        cfg.gamma = 0.0;
        cfg.replicates = 4;
        let m = run_replications(&cfg, &SimAnalysis::default()).unwrap();
        assert_eq!(m.completed() + m.failures, 4);
        assert!(m.tpp.iter().all(|t| *t == 0.0));
        assert!(m.fdp.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn lmm_requires_grouping() {
        let cfg = SimConfig::new(Setting::S0, CovariateDesign::C0, 20, 10);
        let analysis = SimAnalysis { method: Method::Lmm, ..SimAnalysis::default() };
        assert!(run_replications(&cfg, &analysis).is_err());
    }
}
