//! Synthetic count data with planted differential taxa, and a replication
//! harness that scores the pipeline by empirical FDR and power.
//!
//! Every replicate draws from its own ChaCha8 stream derived from
//! `(seed, replicate index)`, so results do not depend on scheduling.

mod generate;
mod params;
mod replicate;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use generate::{
    draw_library_sizes, effect_size, gen_abundances, gen_covariates, gen_truth, generate_replicate,
    sample_counts, Covariates, Replicate,
};
pub use params::{make_default_params, TaxonParams};
pub use replicate::{run_replications, score, SimAnalysis, SimMetrics};

use crate::error::{Error, Result};

/// Data-generating scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Log-normal abundances, multinomial sequencing.
    S0,
    /// S0 with 30% of abundances forced to zero.
    S1,
    /// S0 with block-correlated taxa.
    S2,
    /// Gamma abundances.
    S3,
    /// Shallow sequencing, taxa subsampled from a larger pool.
    S4,
    /// Small sample size (same effect sizes as n = 50).
    S5,
    /// Library size confounded with the covariate.
    S6,
    /// Negative binomial counts drawn directly.
    S7,
    /// Paired pre/post samples per subject.
    S8_1,
    /// Replicate samples per subject.
    S8_2,
}

impl Setting {
    pub const ALL: [Setting; 10] = [
        Setting::S0,
        Setting::S1,
        Setting::S2,
        Setting::S3,
        Setting::S4,
        Setting::S5,
        Setting::S6,
        Setting::S7,
        Setting::S8_1,
        Setting::S8_2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::S0 => "S0",
            Setting::S1 => "S1",
            Setting::S2 => "S2",
            Setting::S3 => "S3",
            Setting::S4 => "S4",
            Setting::S5 => "S5",
            Setting::S6 => "S6",
            Setting::S7 => "S7",
            Setting::S8_1 => "S8.1",
            Setting::S8_2 => "S8.2",
        }
    }

    /// Settings whose samples come in subject groups.
    pub fn is_grouped(self) -> bool {
        matches!(self, Setting::S8_1 | Setting::S8_2)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown setting `{s}`")))
    }
}

/// How the covariate of interest (and confounders) are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateDesign {
    /// `u ~ Bernoulli(1/2)`.
    C0,
    /// `u ~ N(0, 1)`.
    C1,
    /// `c1` Rademacher, `c2 ~ N(0, 1)`, `u ~ Bernoulli(logistic(0.5 c1 + 0.5 c2))`.
    C2,
}

impl CovariateDesign {
    pub fn as_str(self) -> &'static str {
        match self {
            CovariateDesign::C0 => "C0",
            CovariateDesign::C1 => "C1",
            CovariateDesign::C2 => "C2",
        }
    }
}

impl fmt::Display for CovariateDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CovariateDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C0" => Ok(CovariateDesign::C0),
            "C1" => Ok(CovariateDesign::C1),
            "C2" => Ok(CovariateDesign::C2),
            _ => Err(Error::Validation(format!("unknown covariate design `{s}`"))),
        }
    }
}

/// Where the per-taxon baseline parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    /// [`make_default_params`] seeded from the run seed.
    Synthetic,
    Provided(TaxonParams),
}

/// `μ_k` for effect index `k = 1..=6`, equally spaced on `[1.05, 2]`.
pub fn mu_from_index(k: usize) -> Result<f64> {
    if !(1..=6).contains(&k) {
        return Err(Error::Validation(format!("effect index must be 1..6, got {k}")));
    }
    Ok(1.05 + (k - 1) as f64 * 0.19)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub setting: Setting,
    pub design: CovariateDesign,
    pub m: usize,
    pub n: usize,
    /// Fraction of differential taxa.
    pub gamma: f64,
    /// Effect-size index `1..=6`; see [`mu_from_index`].
    pub mu_index: usize,
    pub replicates: usize,
    pub seed: u64,
    pub params: ParamSource,
    /// Draw the sign of each effect at random instead of all positive.
    pub mixed_signs: bool,
}

impl SimConfig {
    pub fn new(setting: Setting, design: CovariateDesign, m: usize, n: usize) -> Self {
        Self {
            setting,
            design,
            m,
            n,
            gamma: 0.05,
            mu_index: 6,
            replicates: 100,
            seed: 1,
            params: ParamSource::Synthetic,
            mixed_signs: false,
        }
    }

    pub fn mu(&self) -> Result<f64> {
        mu_from_index(self.mu_index)
    }

    pub fn validate(&self) -> Result<()> {
        self.mu()?;
        if self.m < 2 {
            return Err(Error::Validation(format!("need at least 2 taxa, got {}", self.m)));
        }
        if self.n < 4 {
            return Err(Error::Validation(format!("need at least 4 samples, got {}", self.n)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Validation(format!("signal density must lie in [0, 1], got {}", self.gamma)));
        }
        if self.setting.is_grouped() {
            if self.design == CovariateDesign::C2 {
                return Err(Error::Unsupported(format!("{} does not take confounders", self.setting)));
            }
            let per = generate::samples_per_subject(self.setting, self.n);
            if self.n % per != 0 {
                return Err(Error::Validation(format!(
                    "{} needs n divisible by {per}, got {}",
                    self.setting, self.n
                )));
            }
        }
        if let ParamSource::Provided(p) = &self.params {
            let pool = generate::pool_size(self.setting, self.m);
            if p.m() < pool {
                return Err(Error::Validation(format!(
                    "parameter file has {} taxa, setting needs {pool}",
                    p.m()
                )));
            }
            if self.design == CovariateDesign::C2 && p.confounder_coefs().is_none() {
                return Err(Error::Validation("design C2 needs confounder coefficients".into()));
            }
        }
        Ok(())
    }
}

/// Planted truth for one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    /// `true` marks a differential taxon.
    pub h: Vec<bool>,
    pub alpha: Vec<f64>,
}

impl SimTruth {
    pub fn n_true(&self) -> usize {
        self.h.iter().filter(|h| **h).count()
    }
}
