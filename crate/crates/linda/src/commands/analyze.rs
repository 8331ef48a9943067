use std::path::PathBuf;

use linda_core::data::{build_design, filter_dataset, winsorize};
use linda_core::{pipeline, CountTable, DesignSpec, LindaConfig, LindaResult, MetadataTable};
use serde_json::json;

use crate::error::Result;
use crate::formula::parse_formula;
use crate::io;
use crate::manifest::{manifest_path, write_manifest, Recorder};
use crate::number::format_f64;

/// Preprocessing applied before the model is fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Filters {
    pub min_libsize: u64,
    pub min_prevalence: f64,
    /// Per-taxon winsorization quantile; `None` disables it.
    pub winsor: Option<f64>,
}

impl Default for Filters {
    fn default() -> Self {
        Self { min_libsize: 1000, min_prevalence: 0.1, winsor: Some(0.97) }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub result: LindaResult,
    pub samples_dropped: usize,
    pub taxa_dropped: usize,
}

/// Filters, winsorizes, builds the design and runs the model.
pub fn analyze_tables(
    counts: &CountTable,
    meta: &MetadataTable,
    spec: &DesignSpec,
    filters: &Filters,
    config: &LindaConfig,
) -> Result<Analysis> {
    let (kept, meta) = filter_dataset(counts, meta, filters.min_libsize, filters.min_prevalence)?;
    let kept = match filters.winsor {
        Some(q) => winsorize(&kept, q)?,
        None => kept,
    };
    let design = build_design(&meta, spec)?;
    let result = pipeline::run(&kept, &design, config)?;
    Ok(Analysis {
        result,
        samples_dropped: counts.n_samples() - kept.n_samples(),
        taxa_dropped: counts.n_taxa() - kept.n_taxa(),
    })
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub counts: PathBuf,
    pub metadata: PathBuf,
    pub formula: String,
    pub random_intercept: Option<String>,
    pub out: PathBuf,
    pub counts_delimiter: Option<u8>,
    pub metadata_delimiter: Option<u8>,
    pub filters: Filters,
    pub config: LindaConfig,
    pub write_manifest: bool,
}

pub fn spec_for(formula: &str, random_intercept: Option<&str>) -> Result<DesignSpec> {
    let mut spec = parse_formula(formula)?;
    if let Some(g) = random_intercept {
        if spec.random_group.as_deref().is_some_and(|h| h != g) {
            return Err(crate::Error::Usage(format!(
                "--random-intercept {g} conflicts with the formula's grouping `{}`",
                spec.random_group.as_deref().unwrap_or_default()
            )));
        }
        spec = spec.group(g);
    }
    Ok(spec)
}

pub fn run(opts: &AnalyzeOptions, command: Vec<String>) -> Result<Analysis> {
    let recorder = Recorder::start(command);
    let spec = spec_for(&opts.formula, opts.random_intercept.as_deref())?;
    let counts = io::read_count_table_path(&opts.counts, opts.counts_delimiter)?;
    let meta = io::read_metadata_path(&opts.metadata, opts.metadata_delimiter)?;
    let analysis = analyze_tables(&counts, &meta, &spec, &opts.filters, &opts.config)?;

    let extra = vec![
        ("formula".to_string(), opts.formula.clone()),
        ("random_intercept".to_string(), spec.random_group.clone().unwrap_or_else(|| "NA".into())),
        ("min_libsize".to_string(), opts.filters.min_libsize.to_string()),
        ("min_prevalence".to_string(), format_f64(opts.filters.min_prevalence)),
        ("winsorize".to_string(), opts.filters.winsor.map_or("off".into(), format_f64)),
        ("samples_dropped".to_string(), analysis.samples_dropped.to_string()),
        ("taxa_dropped".to_string(), analysis.taxa_dropped.to_string()),
    ];
    let mut w = io::create(&opts.out)?;
    io::write_results(&mut w, &analysis.result, &extra)
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(|e| crate::Error::io(&opts.out, e))?;
    drop(w);

    if opts.write_manifest {
        let c = &opts.config;
        let config = json!({
            "command": "analyze",
            "formula": opts.formula,
            "random_intercept": spec.random_group,
            "zero_handling": format!("{:?}", c.zero),
            "bias_correction": c.bias_correction,
            "kde_bandwidth": format!("{:?}", c.kde.bandwidth),
            "kde_grid": c.kde.grid_points,
            "fdr": c.q,
            "min_libsize": opts.filters.min_libsize,
            "min_prevalence": opts.filters.min_prevalence,
            "winsorize": opts.filters.winsor,
        });
        let manifest = recorder.finish(
            config,
            &[opts.counts.clone(), opts.metadata.clone()],
            &[opts.out.clone()],
            Vec::new(),
        )?;
        write_manifest(&manifest_path(&opts.out), &manifest)?;
    }
    Ok(analysis)
}
