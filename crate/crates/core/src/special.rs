//! Special functions: the regularized incomplete beta function and the
//! Student t / Fisher F distributions built on it.

use crate::math;

const MAX_CF_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    math::ln_gamma(a) + math::ln_gamma(b) - math::ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    inc_beta_xy(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with the complement `y = 1 - x` supplied by the caller, which
/// is often able to compute it without cancellation.
pub fn inc_beta_xy(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * math::ln(x) + b * math::ln(y) - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        math::exp(ln_front) * beta_cf(a, b, x, y) / a
    } else {
        1.0 - math::exp(ln_front) * beta_cf(b, a, y, x) / b
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64, _y: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_CF_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `(x, 1 - x)` with `x = df / (df + t²)`, computed without cancellation.
fn t_beta_args(t: f64, df: f64) -> (f64, f64) {
    if t.abs() > 1.0 {
        let r = df / (t * t);
        (r / (1.0 + r), 1.0 / (1.0 + r))
    } else {
        let s = t * t / df;
        (1.0 / (1.0 + s), s / (1.0 + s))
    }
}

/// Two-sided tail probability `P(|T| >= |t|) = 2 F_df(-|t|)`.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let (x, y) = t_beta_args(t, df);
    inc_beta_xy(df / 2.0, 0.5, x, y).clamp(0.0, 1.0)
}

/// Student t cumulative distribution function.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student t density.
pub fn t_pdf(t: f64, df: f64) -> f64 {
    let ln_norm = math::ln_gamma((df + 1.0) / 2.0)
        - math::ln_gamma(df / 2.0)
        - 0.5 * math::ln(df * math::PI);
    math::exp(ln_norm - (df + 1.0) / 2.0 * math::ln_1p(t * t / df))
}

/// Quantile of the Student t distribution, `F_df^{-1}(p)`.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p <= 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -t_quantile(1.0 - p, df);
    }
    // Upper-tail target computed from the small side to keep precision.
    let tail = 1.0 - p;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while 0.5 * t_two_sided_p(hi, df) > tail {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if 0.5 * t_two_sided_p(mid, df) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    // Polish with Newton steps on the upper tail.
    for _ in 0..3 {
        let f = 0.5 * t_two_sided_p(t, df) - tail;
        let dens = t_pdf(t, df);
        if dens <= 0.0 {
            break;
        }
        let next = t + f / dens;
        if !(next > lo && next < hi) {
            break;
        }
        t = next;
    }
    t
}

/// Survival function of the F distribution, `P(F_{d1,d2} > f)`.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let denom = d2 + d1 * f;
    inc_beta_xy(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * f / denom).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn cauchy_closed_form() {
        // df = 1 is the Cauchy distribution: F(t) = 1/2 + atan(t)/pi.
        for &t in &[-30.0, -2.5, -0.3, 0.0, 0.7, 4.0, 1e3] {
            let exact = 0.5 + libm::atan(t) / math::PI;
            assert!(close(t_cdf(t, 1.0), exact, 1e-12), "t={t}");
        }
    }

    #[test]
    fn df2_closed_form() {
        // df = 2: F(t) = 1/2 + t / (2 sqrt(2 + t²)).
        for &t in &[-8.0, -1.0, 0.25, 3.0, 40.0] {
            let exact = 0.5 + t / (2.0 * libm::sqrt(2.0 + t * t));
            assert!(close(t_cdf(t, 2.0), exact, 1e-12), "t={t}");
        }
    }

    #[test]
    fn center_and_symmetry() {
        for &df in &[1.0, 3.0, 10.0, 48.0, 9998.0] {
            assert_eq!(t_two_sided_p(0.0, df), 1.0);
            for &t in &[0.1, 1.7, 5.0, 25.0] {
                assert_eq!(t_two_sided_p(t, df), t_two_sided_p(-t, df));
            }
        }
    }

    #[test]
    fn extreme_tail_is_positive_and_tiny() {
        let p = t_two_sided_p(40.0, 48.0);
        assert!(p > 0.0 && p < 1e-35);
        assert_eq!(t_two_sided_p(f64::INFINITY, 5.0), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &df in &[1.0, 4.0, 23.0, 200.0] {
            for &p in &[0.001, 0.2, 0.5, 0.975, 0.9999] {
                let t = t_quantile(p, df);
                assert!((t_cdf(t, df) - p).abs() < 1e-12, "df={df} p={p}");
            }
        }
        // Known critical value.
        assert!((t_quantile(0.975, 10.0) - 2.228_138_851_986_273_5).abs() < 1e-10);
    }

    #[test]
    fn f_matches_t_squared() {
        // F(1, d) is the square of t(d).
        for &t in &[0.5, 2.0, 3.3] {
            let d = 17.0;
            assert!(close(f_sf(t * t, 1.0, d), t_two_sided_p(t, d), 1e-12));
        }
        assert_eq!(f_sf(0.0, 2.0, 10.0), 1.0);
    }

    #[test]
    fn inc_beta_uniform_case() {
        // I_x(1, 1) = x.
        for &x in &[0.0, 0.1, 0.5, 0.93, 1.0] {
            assert!((inc_beta(1.0, 1.0, x) - x).abs() < 1e-15);
        }
    }
}
