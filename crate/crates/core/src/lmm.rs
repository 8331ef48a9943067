//! Random-intercept mixed model, fitted per taxon by profiled REML.
//!
//! Model: `w_s = z_sᵀθ + γ_{g(s)} + ε_s` with `γ ~ N(0, τ²)`, `ε ~ N(0, σ²)`.
//! With `λ = τ²/σ²` the covariance is `σ² H(λ)` where `H` is block diagonal,
//! `H_j = I + λ 1 1ᵀ`. Everything needed to evaluate the restricted
//! likelihood at a given `λ` reduces to within-group cross products (which do
//! not depend on `λ`) plus group means weighted by `n_j / (1 + λ n_j)`:
//!
//! `Xᵀ H⁻¹ X = W_xx + Σ_j n_j/(1 + λ n_j) x̄_j x̄_jᵀ`.
//!
//! The GLS fit is computed for the OLS residuals rather than the raw
//! response, which keeps the quadratic forms small and free of cancellation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{self, dot, Matrix};
use crate::ols::OlsEngine;
use crate::par;
use crate::preprocess::ClrMatrix;

/// Search range for `ln λ`.
pub const LOG_LAMBDA_RANGE: (f64, f64) = (-12.0, 12.0);
const BRENT_TOL: f64 = 1e-8;
const BRENT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LmmFit {
    pub alpha_tilde: f64,
    pub beta_tilde: Vec<f64>,
    pub sigma2_resid: f64,
    pub tau2_group: f64,
    /// `τ̂² / σ̂²`; exactly 0 when the optimum is on the boundary.
    pub lambda: f64,
    pub se_alpha: f64,
    pub df: f64,
    pub groups: usize,
    pub converged: bool,
    /// No usable fit: residual variance numerically zero or the optimizer
    /// failed. Such taxa get no p-value.
    pub degenerate: bool,
}

/// Restricted likelihood and GLS quantities at one value of `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub lambda: f64,
    /// Restricted log-likelihood with `σ²` profiled out, constants included.
    pub loglik: f64,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    /// `(Xᵀ H⁻¹ X)⁻¹`, to be scaled by `σ²`.
    pub xthx_inverse: Matrix,
}

/// True when no group holds two or more samples, so the variance
/// components are not identifiable.
pub fn needs_ols_fallback(design: &DesignMatrix) -> bool {
    match design.groups() {
        Some(g) => g.sizes().iter().all(|&s| s < 2),
        None => true,
    }
}

/// Design-level quantities shared by every taxon.
#[derive(Debug, Clone)]
pub struct LmmEngine {
    ols: OlsEngine,
    group: Vec<usize>,
    sizes: Vec<usize>,
    /// Group means of the design rows, `g x p`.
    xbar: Matrix,
    /// Within-group cross products of the design.
    wxx: Matrix,
    df_within: f64,
    df_ols: f64,
}

impl LmmEngine {
    pub fn new(design: &DesignMatrix) -> Result<Self> {
        let grouping = design
            .groups()
            .ok_or_else(|| Error::Validation("mixed model needs a grouping variable".into()))?;
        let g = grouping.n_groups();
        if g < 2 {
            return Err(Error::Validation(format!("mixed model needs at least 2 groups, got {g}")));
        }
        if needs_ols_fallback(design) {
            return Err(Error::Validation("no group has two or more samples".into()));
        }
        let ols = OlsEngine::new(design)?;
        let z = design.z();
        let (n, p) = (z.rows(), z.cols());
        let group = grouping.index().to_vec();
        let sizes = grouping.sizes();

        let mut xbar = Matrix::zeros(g, p);
        for s in 0..n {
            for k in 0..p {
                xbar[(group[s], k)] += z[(s, k)];
            }
        }
        for j in 0..g {
            for k in 0..p {
                xbar[(j, k)] /= sizes[j] as f64;
            }
        }
        let mut wxx = Matrix::zeros(p, p);
        for s in 0..n {
            let c: Vec<f64> = (0..p).map(|k| z[(s, k)] - xbar[(group[s], k)]).collect();
            for a in 0..p {
                for b in 0..p {
                    wxx[(a, b)] += c[a] * c[b];
                }
            }
        }

        // Containment rule: the covariate is estimated within groups when it
        // varies inside at least one of them, otherwise between groups.
        let within = (0..n).any(|s| z[(s, 0)] != xbar[(group[s], 0)]);
        let df_within = if within { n as f64 - g as f64 - p as f64 + 1.0 } else { g as f64 - p as f64 };
        if !(df_within >= 1.0) {
            return Err(Error::Validation(format!(
                "mixed model has no residual degrees of freedom ({n} samples, {g} groups, {p} fixed effects)"
            )));
        }
        Ok(Self { ols, group, sizes, xbar, wxx, df_within, df_ols: (n - p) as f64 })
    }

    /// Degrees of freedom used when `τ̂² > 0`.
    pub fn df(&self) -> f64 {
        self.df_within
    }

    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    fn stats(&self, y: &[f64]) -> TaxonStats {
        let theta_ols = self.ols.coefficients(y);
        let e = self.ols.residuals(y, &theta_ols);
        let (g, p) = (self.sizes.len(), theta_ols.len());
        let mut ebar = vec![0.0; g];
        for (s, &v) in e.iter().enumerate() {
            ebar[self.group[s]] += v;
        }
        for (v, &nj) in ebar.iter_mut().zip(&self.sizes) {
            *v /= nj as f64;
        }
        let mut wxe = vec![0.0; p];
        let mut wee = 0.0;
        let z = self.ols_design();
        for s in 0..e.len() {
            let j = self.group[s];
            let ec = e[s] - ebar[j];
            wee += ec * ec;
            for k in 0..p {
                wxe[k] += (z[(s, k)] - self.xbar[(j, k)]) * ec;
            }
        }
        let mean_sq = dot(y, y) / y.len() as f64;
        TaxonStats { theta_ols, ebar, wxe, wee, mean_sq }
    }

    fn ols_design(&self) -> &Matrix {
        self.ols.design()
    }

    fn evaluate(&self, st: &TaxonStats, lambda: f64) -> Option<ProfilePoint> {
        let p = self.wxx.rows();
        let n = self.group.len();
        let mut a = self.wxx.clone();
        let mut b = st.wxe.clone();
        let mut ee = st.wee;
        let mut ln_det_h = 0.0;
        for (j, &nj) in self.sizes.iter().enumerate() {
            let nj = nj as f64;
            let w = nj / (1.0 + lambda * nj);
            let xb = self.xbar.row(j);
            for r in 0..p {
                for c in 0..p {
                    a[(r, c)] += w * xb[r] * xb[c];
                }
                b[r] += w * xb[r] * st.ebar[j];
            }
            ee += w * st.ebar[j] * st.ebar[j];
            ln_det_h += math::ln_1p(lambda * nj);
        }
        let l = matrix::cholesky(&a)?;
        let delta = matrix::cholesky_solve(&l, &b);
        let rss = (ee - dot(&b, &delta)).max(0.0);
        let dof = (n - p) as f64;
        let sigma2 = rss / dof;
        if !(sigma2 > 0.0) {
            return None;
        }
        let loglik = -0.5
            * (dof * (1.0 + math::ln(2.0 * math::PI * sigma2)) + ln_det_h + matrix::cholesky_log_det(&l));
        let theta = st.theta_ols.iter().zip(&delta).map(|(t, d)| t + d).collect();
        Some(ProfilePoint { lambda, loglik, theta, sigma2, xthx_inverse: matrix::cholesky_inverse(&l) })
    }

    /// Restricted likelihood profile of response `y` at `λ`.
    pub fn profile(&self, y: &[f64], lambda: f64) -> Option<ProfilePoint> {
        self.evaluate(&self.stats(y), lambda)
    }

    /// Fits one taxon.
    pub fn fit(&self, y: &[f64]) -> LmmFit {
        let st = self.stats(y);
        let neg = |x: f64| match self.evaluate(&st, math::exp(x)) {
            Some(pp) => -pp.loglik,
            None => f64::INFINITY,
        };
        let (lo, hi) = LOG_LAMBDA_RANGE;
        let grid: Vec<f64> = (0..=(hi - lo) as usize).map(|k| lo + k as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| neg(x)).collect();
        let mut best = 0;
        for k in 1..grid.len() {
            if values[k] < values[best] {
                best = k;
            }
        }

        let mut lambda = 0.0;
        let converged = if values[best].is_finite() {
            let a = grid[best.saturating_sub(1)];
            let b = grid[(best + 1).min(grid.len() - 1)];
            let (x, fx, ok) = brent_min(&neg, a, b, grid[best], values[best]);
            lambda = math::exp(x);
            if best == 0 {
                let at_zero = self.evaluate(&st, 0.0).map_or(f64::INFINITY, |p| -p.loglik);
                if at_zero <= fx {
                    lambda = 0.0;
                }
            }
            ok
        } else {
            false
        };

        let point = self.evaluate(&st, lambda);
        let groups = self.sizes.len();
        match point {
            Some(pp) if converged => {
                let degenerate = pp.sigma2 < 1e-12 * st.mean_sq + 1e-300;
                LmmFit {
                    alpha_tilde: pp.theta[0],
                    beta_tilde: pp.theta[1..].to_vec(),
                    sigma2_resid: pp.sigma2,
                    tau2_group: lambda * pp.sigma2,
                    lambda,
                    se_alpha: math::sqrt(pp.sigma2 * pp.xthx_inverse[(0, 0)]),
                    // At τ̂² = 0 the model is the OLS model.
                    df: if lambda == 0.0 { self.df_ols } else { self.df_within },
                    groups,
                    converged,
                    degenerate,
                }
            }
            _ => LmmFit {
                alpha_tilde: st.theta_ols[0],
                beta_tilde: st.theta_ols[1..].to_vec(),
                sigma2_resid: 0.0,
                tau2_group: 0.0,
                lambda,
                se_alpha: f64::NAN,
                df: self.df_within,
                groups,
                converged,
                degenerate: true,
            },
        }
    }
}

struct TaxonStats {
    theta_ols: Vec<f64>,
    ebar: Vec<f64>,
    wxe: Vec<f64>,
    wee: f64,
    mean_sq: f64,
}

/// Brent's minimizer on `[a, b]` started from `x0` (with `f(x0) = f0`).
/// Returns `(x, f(x), converged)`.
fn brent_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, x0: f64, f0: f64) -> (f64, f64, bool) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..BRENT_MAX_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = BRENT_TOL * x.abs() + 1e-10;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return (x, fx, true);
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else if d > 0.0 { x + tol1 } else { x - tol1 };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx, false)
}

/// Fits the random-intercept model to every taxon.
pub fn fit_lmm_all(w: &ClrMatrix, design: &DesignMatrix) -> Result<Vec<LmmFit>> {
    let engine = LmmEngine::new(design)?;
    if w.n_samples() != design.n_samples() {
        return Err(Error::Dimension(format!(
            "CLR matrix has {} samples, design has {}",
            w.n_samples(),
            design.n_samples()
        )));
    }
    Ok(par::map_indexed(w.n_taxa(), |i| engine.fit(w.row(i))))
}
