use std::path::PathBuf;

use linda_core::simulate::{
    mu_from_index, run_replications, CovariateDesign, ParamSource, Setting, SimAnalysis, SimConfig,
};
use linda_core::{LindaConfig, Method};
use serde_json::json;

use crate::error::Result;
use crate::io::{self, MetricsRow};
use crate::manifest::{manifest_path, write_manifest, Recorder};

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub setting: Setting,
    pub design: CovariateDesign,
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub effect_indices: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub method: Method,
    pub config: LindaConfig,
    pub mixed_signs: bool,
    pub params: Option<PathBuf>,
    pub params_delimiter: Option<u8>,
    pub out: PathBuf,
    pub write_manifest: bool,
}

/// Runs one batch of replicates per effect-size index.
pub fn simulate(opts: &SimulateOptions) -> Result<Vec<MetricsRow>> {
    let params = match &opts.params {
        Some(p) => ParamSource::Provided(io::read_params_path(p, opts.params_delimiter)?),
        None => ParamSource::Synthetic,
    };
    let analysis = SimAnalysis { method: opts.method, config: opts.config };
    let mut rows = Vec::with_capacity(opts.effect_indices.len());
    for &k in &opts.effect_indices {
        let mut cfg = SimConfig::new(opts.setting, opts.design, opts.m, opts.n);
        cfg.gamma = opts.gamma;
        cfg.mu_index = k;
        cfg.replicates = opts.replicates;
        cfg.seed = opts.seed;
        cfg.params = params.clone();
        cfg.mixed_signs = opts.mixed_signs;
        let metrics = run_replications(&cfg, &analysis)?;
        rows.push(MetricsRow {
            setting: opts.setting.as_str().into(),
            design: opts.design.as_str().into(),
            m: opts.m,
            n: opts.n,
            gamma: opts.gamma,
            effect_index: k,
            mu: mu_from_index(k)?,
            method: opts.method.as_str().into(),
            zero_handling: zero_label(&opts.config),
            bias: opts.config.bias_correction,
            q: opts.config.q,
            replicates: opts.replicates,
            completed: metrics.completed(),
            failures: metrics.failures,
            fdr: metrics.fdr_mean,
            tpr: metrics.tpr_mean,
            fdr_ci: metrics.fdr_ci_halfwidth,
        });
    }
    Ok(rows)
}

pub fn zero_label(config: &LindaConfig) -> String {
    use linda_core::ZeroStrategy::*;
    match config.zero {
        Pseudo => "pseudo".into(),
        Imputation => "imputation".into(),
        Adaptive { .. } => "adaptive".into(),
    }
}

pub fn run(opts: &SimulateOptions, command: Vec<String>) -> Result<Vec<MetricsRow>> {
    let recorder = Recorder::start(command);
    let rows = simulate(opts)?;
    let mut w = io::create(&opts.out)?;
    io::write_metrics(&mut w, &rows)
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(|e| crate::Error::io(&opts.out, e))?;
    drop(w);
    if opts.write_manifest {
        let config = json!({
            "command": "simulate",
            "setting": opts.setting.as_str(),
            "design": opts.design.as_str(),
            "m": opts.m,
            "n": opts.n,
            "gamma": opts.gamma,
            "effect_indices": opts.effect_indices,
            "replicates": opts.replicates,
            "method": opts.method.as_str(),
            "zero_handling": format!("{:?}", opts.config.zero),
            "bias_correction": opts.config.bias_correction,
            "q": opts.config.q,
            "mixed_signs": opts.mixed_signs,
            "params": opts.params,
        });
        let inputs: Vec<PathBuf> = opts.params.iter().cloned().collect();
        let manifest = recorder.finish(config, &inputs, &[opts.out.clone()], vec![opts.seed])?;
        write_manifest(&manifest_path(&opts.out), &manifest)?;
    }
    Ok(rows)
}
