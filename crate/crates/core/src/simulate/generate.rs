use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson, StandardNormal};

use super::{CovariateDesign, ParamSource, Setting, SimConfig, SimTruth, TaxonParams};
use crate::data::{CountTable, DesignMatrix, Grouping};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Default mean library size and NB size parameter.
pub(crate) const LIBSIZE_MEAN: f64 = 7645.0;
pub(crate) const LIBSIZE_SIZE: f64 = 5.3;
const LIBSIZE_FLOOR: u64 = 50;
const S4_POOL: usize = 500;
const ZERO_FRACTION_S1: f64 = 0.3;
const N_BLOCKS_S2: usize = 25;
/// Dirichlet-style concentration for the gamma setting: `η_i = π_i (1/φ - 1)`.
const PHI_S3: f64 = 0.003;

/// Covariates of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub u: Vec<f64>,
    /// Confounder columns (empty unless C2).
    pub confounders: Vec<Vec<f64>>,
    /// Subject of each sample, for grouped settings.
    pub groups: Option<Vec<usize>>,
}

pub(crate) fn samples_per_subject(setting: Setting, n: usize) -> usize {
    match setting {
        Setting::S8_1 => 2,
        Setting::S8_2 if n >= 200 => 4,
        Setting::S8_2 => 2,
        _ => 1,
    }
}

pub(crate) fn pool_size(setting: Setting, m: usize) -> usize {
    if setting == Setting::S4 {
        m.max(S4_POOL)
    } else {
        m
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `(u, C)` for `n` samples.
pub fn gen_covariates<R: Rng + ?Sized>(design: CovariateDesign, n: usize, rng: &mut R) -> Covariates {
    let (u, confounders) = match design {
        CovariateDesign::C0 => ((0..n).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect(), Vec::new()),
        CovariateDesign::C1 => ((0..n).map(|_| normal(rng)).collect(), Vec::new()),
        CovariateDesign::C2 => {
            let c1: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let c2: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
            let u = (0..n)
                .map(|s| {
                    let p = 1.0 / (1.0 + math::exp(-0.5 * c1[s] - 0.5 * c2[s]));
                    f64::from((rng.random::<f64>() < p) as u8)
                })
                .collect();
            (u, vec![c1, c2])
        }
    };
    Covariates { u, confounders, groups: None }
}

/// Subject structure for the grouped settings.
fn grouped_covariates<R: Rng + ?Sized>(setting: Setting, design: CovariateDesign, n: usize, rng: &mut R) -> Covariates {
    let per = samples_per_subject(setting, n);
    let subjects = n / per;
    let groups: Vec<usize> = (0..n).map(|s| s / per).collect();
    let u = match setting {
        // Pre/post pairs: u is 0 then 1 within each subject.
        Setting::S8_1 => (0..n).map(|s| (s % 2) as f64).collect(),
        _ => {
            let subject_u = gen_covariates(design, subjects, rng).u;
            groups.iter().map(|&g| subject_u[g]).collect()
        }
    };
    Covariates { u, confounders: Vec::new(), groups: Some(groups) }
}

/// `log(2μ)` for common taxa and `log(2μ (0.005/π̄)^{1/3})` for rare ones,
/// with `μ` in place of `2μ` at `n = 200`.
pub fn effect_size(mu: f64, pi_bar: f64, n: usize) -> f64 {
    let factor = if n == 200 { mu } else { 2.0 * mu };
    if pi_bar > 0.005 {
        math::ln(factor)
    } else {
        math::ln(factor * math::powf(0.005 / pi_bar, 1.0 / 3.0))
    }
}

/// Mean proportion of each taxon over an independent baseline sample of
/// `n` log-normal abundance vectors.
fn baseline_proportions<R: Rng + ?Sized>(params: &TaxonParams, n: usize, rng: &mut R) -> Vec<f64> {
    let m = params.m();
    let mut x = Matrix::zeros(m, n);
    for i in 0..m {
        let sd = math::sqrt(params.sigma2()[i]);
        for s in 0..n {
            x[(i, s)] = params.beta0()[i] + sd * normal(rng);
        }
    }
    let mut pi_bar = vec![0.0; m];
    for s in 0..n {
        let col: Vec<f64> = (0..m).map(|i| x[(i, s)]).collect();
        let top = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = col.iter().map(|v| math::exp(v - top)).collect();
        let total: f64 = w.iter().sum();
        for i in 0..m {
            pi_bar[i] += w[i] / total / n as f64;
        }
    }
    pi_bar
}

/// Differential indicators `H_i ~ Bernoulli(γ)` and effects from
/// [`effect_size`].
pub fn gen_truth<R: Rng + ?Sized>(
    pi_bar: &[f64],
    gamma: f64,
    mu: f64,
    n: usize,
    mixed_signs: bool,
    rng: &mut R,
) -> SimTruth {
    let h: Vec<bool> = pi_bar.iter().map(|_| rng.random_bool(gamma)).collect();
    let alpha = h
        .iter()
        .zip(pi_bar)
        .map(|(&h, &p)| {
            if !h {
                return 0.0;
            }
            let sign = if mixed_signs && rng.random_bool(0.5) { -1.0 } else { 1.0 };
            sign * effect_size(mu, p, n)
        })
        .collect();
    SimTruth { h, alpha }
}

/// Fixed-effect part of the log mean: `u α + cᵀβ`.
fn linear_predictor(params: &TaxonParams, truth: &SimTruth, cov: &Covariates, i: usize, s: usize) -> f64 {
    let mut eta = cov.u[s] * truth.alpha[i];
    if let Some(b) = params.confounder_coefs() {
        for (k, c) in cov.confounders.iter().enumerate() {
            eta += c[s] * b[(i, k)];
        }
    }
    eta
}

/// Normalized `exp(β⁰ + σ²/2)`, the mean composition under the log-normal
/// model.
fn mean_composition(params: &TaxonParams) -> Vec<f64> {
    let logs: Vec<f64> = params.beta0().iter().zip(params.sigma2()).map(|(b, s)| b + 0.5 * s).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|v| math::exp(v - top)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// True abundances (`m x n`) for every setting except S7, which draws counts
/// directly.
pub fn gen_abundances<R: Rng + ?Sized>(
    setting: Setting,
    params: &TaxonParams,
    truth: &SimTruth,
    cov: &Covariates,
    rng: &mut R,
) -> Result<Matrix> {
    let (m, n) = (params.m(), cov.u.len());
    let mut x = Matrix::zeros(m, n);
    match setting {
        Setting::S7 => {
            return Err(Error::Unsupported("S7 draws counts directly; use generate_replicate".into()))
        }
        Setting::S3 => {
            let pi = mean_composition(params);
            for i in 0..m {
                let eta = pi[i] * (1.0 / PHI_S3 - 1.0);
                for s in 0..n {
                    let shape = eta * math::exp(linear_predictor(params, truth, cov, i, s));
                    x[(i, s)] = if shape > 0.0 && shape.is_finite() {
                        Gamma::new(shape, 1.0).map_err(|e| Error::Numeric(format!("{e}")))?.sample(rng)
                    } else {
                        0.0
                    };
                }
            }
        }
        _ => {
            let mut noise = Matrix::zeros(m, n);
            if setting == Setting::S2 {
                let z: Vec<f64> = (0..N_BLOCKS_S2 * n).map(|_| normal(rng)).collect();
                let half = math::sqrt(0.5);
                for i in 0..m {
                    let block = i * N_BLOCKS_S2 / m;
                    let sign = if (i * 2 * N_BLOCKS_S2 / m) % 2 == 0 { 1.0 } else { -1.0 };
                    for s in 0..n {
                        noise[(i, s)] = half * normal(rng) + sign * half * z[block * n + s];
                    }
                }
            } else {
                for v in noise.as_mut_slice() {
                    *v = normal(rng);
                }
            }

            let mut intercepts = Matrix::zeros(m, n);
            if let Some(groups) = &cov.groups {
                let subjects = groups.iter().copied().max().map_or(0, |g| g + 1);
                for i in 0..m {
                    let a: f64 = rng.random();
                    let tau = math::sqrt(a * params.sigma2()[i]);
                    let gamma: Vec<f64> = (0..subjects).map(|_| tau * normal(rng)).collect();
                    for s in 0..n {
                        intercepts[(i, s)] = gamma[groups[s]];
                    }
                }
            }

            for i in 0..m {
                let sd = math::sqrt(params.sigma2()[i]);
                for s in 0..n {
                    let log_x = params.beta0()[i]
                        + linear_predictor(params, truth, cov, i, s)
                        + intercepts[(i, s)]
                        + sd * noise[(i, s)];
                    x[(i, s)] = math::exp(log_x);
                }
            }
            if setting == Setting::S1 {
                for v in x.as_mut_slice() {
                    if rng.random::<f64>() < ZERO_FRACTION_S1 {
                        *v = 0.0;
                    }
                }
            }
        }
    }
    Ok(x)
}

/// `NB(mean, size)` as a gamma-Poisson mixture.
fn negative_binomial<R: Rng + ?Sized>(mean: f64, size: f64, rng: &mut R) -> Result<u64> {
    if !(mean > 0.0) {
        return Ok(0);
    }
    let rate = Gamma::new(size, mean / size).map_err(|e| Error::Numeric(format!("{e}")))?.sample(rng);
    poisson(rate, rng)
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if !(lambda > 0.0) {
        return Ok(0);
    }
    let d = Poisson::new(lambda.min(1e15)).map_err(|e| Error::Numeric(format!("{e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Library sizes `N_s ~ NB(mean, 5.3)`, floored at 50. The mean depends on
/// the setting (and on `u` for S6).
pub fn draw_library_sizes<R: Rng + ?Sized>(setting: Setting, u: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    u.iter()
        .map(|&us| {
            let mean = match setting {
                Setting::S4 => 1500.0,
                Setting::S6 if us > 0.0 => 50_000.0,
                Setting::S6 => 5000.0,
                _ => LIBSIZE_MEAN,
            };
            Ok(negative_binomial(mean, LIBSIZE_SIZE, rng)?.max(LIBSIZE_FLOOR))
        })
        .collect()
}

/// Multinomial sequencing of each column of `x` with totals `libsizes`, by
/// sequential conditional binomials. Returns row-major `m x n` counts.
pub fn sample_counts<R: Rng + ?Sized>(x: &Matrix, libsizes: &[u64], rng: &mut R) -> Result<Vec<u64>> {
    let (m, n) = (x.rows(), x.cols());
    if libsizes.len() != n {
        return Err(Error::Dimension(format!("{} library sizes for {n} samples", libsizes.len())));
    }
    let mut counts = vec![0u64; m * n];
    let mut tail = vec![0.0; m + 1];
    for s in 0..n {
        for i in (0..m).rev() {
            tail[i] = tail[i + 1] + x[(i, s)];
        }
        if !(tail[0] > 0.0) || !tail[0].is_finite() {
            return Err(Error::Numeric(format!("sample {} has no positive abundance", s + 1)));
        }
        let mut left = libsizes[s];
        for i in 0..m {
            if left == 0 {
                break;
            }
            let xi = x[(i, s)];
            if xi <= 0.0 {
                continue;
            }
            let p = xi / tail[i];
            let c = if p >= 1.0 || tail[i + 1] <= 0.0 {
                left
            } else {
                Binomial::new(left, p).map_err(|e| Error::Numeric(format!("{e}")))?.sample(rng)
            };
            counts[i * n + s] = c;
            left -= c;
        }
    }
    Ok(counts)
}

/// Counts for S7: `Y_is ~ NB(exp(κ_i log N_s + log π_i + u α + cᵀβ), 1/(e^{σ²} - 1))`
/// with `κ_i ~ N(1, 0.01)`.
fn nb_direct_counts<R: Rng + ?Sized>(
    params: &TaxonParams,
    truth: &SimTruth,
    cov: &Covariates,
    libsizes: &[u64],
    rng: &mut R,
) -> Result<Vec<u64>> {
    let (m, n) = (params.m(), cov.u.len());
    let pi = mean_composition(params);
    let kappa_dist = Normal::new(1.0, 0.1).unwrap();
    let mut counts = vec![0u64; m * n];
    for i in 0..m {
        let kappa = kappa_dist.sample(rng);
        let size = 1.0 / (math::exp(params.sigma2()[i]) - 1.0);
        for s in 0..n {
            let log_mean = kappa * math::ln(libsizes[s] as f64)
                + math::ln(pi[i])
                + linear_predictor(params, truth, cov, i, s);
            counts[i * n + s] = negative_binomial(math::exp(log_mean.min(34.0)), size, rng)?;
        }
    }
    Ok(counts)
}

/// One simulated dataset together with its truth.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub counts: CountTable,
    pub design: DesignMatrix,
    pub truth: SimTruth,
    pub covariates: Covariates,
}

/// Generates replicate `index` of `config` using `params` (the pool for
/// S4).
pub fn generate_replicate(config: &SimConfig, params: &TaxonParams, index: u64) -> Result<Replicate> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index + 1);
    let (m, n) = (config.m, config.n);

    let params = if config.setting == Setting::S4 || params.m() > m {
        let mut idx = index::sample(&mut rng, params.m(), m).into_vec();
        idx.sort_unstable();
        params.subset(&idx)
    } else {
        params.clone()
    };

    let pi_bar = baseline_proportions(&params, n, &mut rng);
    // Smaller-n settings keep the n = 50 effect sizes.
    let effect_n = if config.setting == Setting::S5 { 50 } else { n };
    let truth = gen_truth(&pi_bar, config.gamma, config.mu()?, effect_n, config.mixed_signs, &mut rng);
    let cov = if config.setting.is_grouped() {
        grouped_covariates(config.setting, config.design, n, &mut rng)
    } else {
        gen_covariates(config.design, n, &mut rng)
    };

    let libsizes = draw_library_sizes(config.setting, &cov.u, &mut rng)?;
    let counts = if config.setting == Setting::S7 {
        nb_direct_counts(&params, &truth, &cov, &libsizes, &mut rng)?
    } else {
        let x = gen_abundances(config.setting, &params, &truth, &cov, &mut rng)?;
        sample_counts(&x, &libsizes, &mut rng)?
    };

    let taxa: Vec<String> = (1..=m).map(|i| format!("taxon{i}")).collect();
    let samples: Vec<String> = (1..=n).map(|s| format!("sample{s}")).collect();
    let counts = CountTable::new(taxa, samples, counts)?;
    let mut design = DesignMatrix::from_covariates(&cov.u, &cov.confounders)?;
    if let Some(g) = &cov.groups {
        design = design.with_groups(Grouping::from_indices(g.clone()))?;
    }
    Ok(Replicate { counts, design, truth, covariates: cov })
}

/// Parameters for a run: provided ones, or synthetic ones seeded by the run
/// seed and sized for the setting's taxon pool.
pub(crate) fn resolve_params(config: &SimConfig) -> TaxonParams {
    match &config.params {
        ParamSource::Provided(p) => p.clone(),
        ParamSource::Synthetic => {
            super::make_default_params(pool_size(config.setting, config.m), config.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn effect_size_examples() {
        assert!((effect_size(2.0, 0.01, 50) - math::ln(4.0)).abs() < 1e-12);
        assert!((effect_size(2.0, 0.005 / 8.0, 50) - math::ln(8.0)).abs() < 1e-12);
        assert_eq!(effect_size(1.0, 0.01, 200), 0.0);
    }

    #[test]
    fn multinomial_totals_are_exact() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0, 3.0], vec![2.0, 5.0, 0.0], vec![0.5, 1.0, 1e-9]]);
        let libs = [1000, 77, 5];
        let counts = sample_counts(&x, &libs, &mut rng(3)).unwrap();
        for s in 0..3 {
            let total: u64 = (0..3).map(|i| counts[i * 3 + s]).sum();
            assert_eq!(total, libs[s]);
        }
        // Zero abundance means zero counts.
        assert_eq!(counts[1], 0);
        assert_eq!(counts[5], 0);
    }

    #[test]
    fn all_zero_column_is_an_error() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert!(sample_counts(&x, &[10, 10], &mut rng(1)).is_err());
    }

    #[test]
    fn grouped_layout() {
        let cov = grouped_covariates(Setting::S8_1, CovariateDesign::C0, 8, &mut rng(5));
        assert_eq!(cov.u, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(cov.groups.unwrap(), vec![0, 0, 1, 1, 2, 2, 3, 3]);
        let cov = grouped_covariates(Setting::S8_2, CovariateDesign::C0, 200, &mut rng(5));
        let g = cov.groups.unwrap();
        assert_eq!(g[199], 49);
        for s in 0..200 {
            assert_eq!(cov.u[s], cov.u[(s / 4) * 4]);
        }
    }

    #[test]
    fn replicate_is_deterministic() {
        let mut cfg = SimConfig::new(Setting::S0, CovariateDesign::C0, 30, 12);
        cfg.gamma = 0.2;
        let params = resolve_params(&cfg);
        let a = generate_replicate(&cfg, &params, 4).unwrap();
        let b = generate_replicate(&cfg, &params, 4).unwrap();
        let c = generate_replicate(&cfg, &params, 5).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_ne!(a.counts, c.counts);
    }
}
