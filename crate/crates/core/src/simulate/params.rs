use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-taxon baseline parameters of the log-normal abundance model.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonParams {
    beta0: Vec<f64>,
    sigma2: Vec<f64>,
    confounder_coefs: Option<Matrix>,
}

impl TaxonParams {
    pub fn new(beta0: Vec<f64>, sigma2: Vec<f64>, confounder_coefs: Option<Matrix>) -> Result<Self> {
        if beta0.len() != sigma2.len() {
            return Err(Error::Dimension(format!(
                "{} baseline means but {} variances",
                beta0.len(),
                sigma2.len()
            )));
        }
        if beta0.len() < 2 {
            return Err(Error::Validation("need parameters for at least 2 taxa".into()));
        }
        if let Some(i) = sigma2.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Validation(format!("variance of taxon {} must be positive, got {}", i + 1, sigma2[i])));
        }
        if let Some(i) = beta0.iter().position(|b| !b.is_finite()) {
            return Err(Error::Validation(format!("baseline mean of taxon {} is not finite", i + 1)));
        }
        if let Some(c) = &confounder_coefs {
            if c.rows() != beta0.len() || c.cols() != 2 {
                return Err(Error::Dimension("confounder coefficients must be m x 2".into()));
            }
        }
        Ok(Self { beta0, sigma2, confounder_coefs })
    }

    pub fn m(&self) -> usize {
        self.beta0.len()
    }

    pub fn beta0(&self) -> &[f64] {
        &self.beta0
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn confounder_coefs(&self) -> Option<&Matrix> {
        self.confounder_coefs.as_ref()
    }

    /// Parameters of the listed taxa, in the given order.
    pub fn subset(&self, idx: &[usize]) -> TaxonParams {
        let conf = self.confounder_coefs.as_ref().map(|c| {
            let mut data = Vec::with_capacity(idx.len() * 2);
            for &i in idx {
                data.extend_from_slice(c.row(i));
            }
            Matrix::from_vec(idx.len(), 2, data)
        });
        TaxonParams {
            beta0: idx.iter().map(|&i| self.beta0[i]).collect(),
            sigma2: idx.iter().map(|&i| self.sigma2[i]).collect(),
            confounder_coefs: conf,
        }
    }
}

const SIGMA2_RANGE: (f64, f64) = (0.1, 20.0);

/// Synthetic stand-in for parameters estimated from a real study:
/// `β⁰ ~ N(0, 9)`, `σ² ~ InvGamma(3, 4)` truncated to `[0.1, 20]`, and
/// confounder coefficients `~ N(0, 1)`.
pub fn make_default_params(m: usize, seed: u64) -> TaxonParams {
    assert!(m >= 2, "need at least 2 taxa");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 3.0).unwrap();
    let beta0: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();
    // 1 / Gamma(shape 3, rate 4) is InvGamma(3, 4).
    let gamma = Gamma::new(3.0, 0.25).unwrap();
    let sigma2: Vec<f64> = (0..m)
        .map(|_| loop {
            let s = 1.0 / gamma.sample(&mut rng);
            if (SIGMA2_RANGE.0..=SIGMA2_RANGE.1).contains(&s) {
                break s;
            }
        })
        .collect();
    let std = Normal::new(0.0, 1.0).unwrap();
    let conf: Vec<f64> = (0..2 * m).map(|_| std.sample(&mut rng)).collect();
    TaxonParams { beta0, sigma2, confounder_coefs: Some(Matrix::from_vec(m, 2, conf)) }
}
