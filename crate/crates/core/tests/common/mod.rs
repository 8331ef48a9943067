//! Brute-force dense linear algebra used as an independent oracle.
#![allow(dead_code)]

pub type Dense = Vec<Vec<f64>>;

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let bt = transpose(b);
    a.iter().map(|r| bt.iter().map(|c| r.iter().zip(c).map(|(x, y)| x * y).sum()).collect()).collect()
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// LU with partial pivoting; returns `(lu, perm, sign)` or `None` if singular.
fn lu(a: &Dense) -> Option<(Dense, Vec<usize>, f64)> {
    let n = a.len();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[piv][k] == 0.0 {
            return None;
        }
        if piv != k {
            m.swap(piv, k);
            perm.swap(piv, k);
            sign = -sign;
        }
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            m[i][k] = f;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    Some((m, perm, sign))
}

fn lu_solve(lu: &(Dense, Vec<usize>, f64), b: &[f64]) -> Vec<f64> {
    let (m, perm, _) = lu;
    let n = m.len();
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            y[i] -= m[i][j] * y[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            y[i] -= m[i][j] * y[j];
        }
        y[i] /= m[i][i];
    }
    y
}

pub fn solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    lu_solve(&lu(a).expect("singular system"), b)
}

pub fn inverse(a: &Dense) -> Dense {
    let f = lu(a).expect("singular matrix");
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            lu_solve(&f, &e)
        })
        .collect();
    transpose(&cols)
}

pub fn log_det(a: &Dense) -> f64 {
    let (m, _, sign) = lu(a).expect("singular matrix");
    assert!(sign * m.iter().enumerate().map(|(i, r)| r[i].signum()).product::<f64>() > 0.0);
    (0..a.len()).map(|i| m[i][i].abs().ln()).sum()
}

/// `(ZᵀZ)⁻¹ Zᵀ w` from explicitly accumulated normal equations.
pub fn normal_equations(z: &Dense, w: &[f64]) -> Vec<f64> {
    let zt = transpose(z);
    solve(&matmul(&zt, z), &matvec(&zt, w))
}

/// Restricted log-likelihood of `y ~ N(Zθ, σ² (I + λ B))` with `B` the
/// same-group indicator, `σ²` profiled out, built from dense `n x n`
/// matrices.
pub fn reml_loglik(z: &Dense, groups: &[usize], y: &[f64], lambda: f64) -> f64 {
    let n = y.len();
    let p = z[0].len();
    let v: Dense = (0..n)
        .map(|i| (0..n).map(|j| (if i == j { 1.0 } else { 0.0 }) + if groups[i] == groups[j] { lambda } else { 0.0 }).collect())
        .collect();
    let vinv = inverse(&v);
    let zt = transpose(z);
    let a = matmul(&matmul(&zt, &vinv), z);
    let theta = solve(&a, &matvec(&zt, &matvec(&vinv, y)));
    let r: Vec<f64> = y.iter().zip(matvec(z, &theta)).map(|(y, f)| y - f).collect();
    let rss: f64 = r.iter().zip(matvec(&vinv, &r)).map(|(a, b)| a * b).sum();
    let dof = (n - p) as f64;
    let sigma2 = rss / dof;
    -0.5 * (dof * (1.0 + (2.0 * std::f64::consts::PI * sigma2).ln()) + log_det(&v) + log_det(&a))
}

/// Small deterministic generator so oracle inputs do not depend on the
/// crate's own RNG plumbing.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
