//! Properties of filtering, zero handling, CLR and the OLS engine.

mod common;

use common::{normal_equations, Dense, Lcg};
use linda_core::data::{build_design, filter_dataset, winsorize};
use linda_core::ols::{fit_ols_all, OlsEngine};
use linda_core::preprocess::{clr_transform, handle_zeros, library_sizes};
use linda_core::{CountTable, DesignMatrix, DesignSpec, MetadataTable, Variable, ZeroStrategy};
use proptest::prelude::*;

fn table(m: usize, n: usize, counts: Vec<u64>) -> CountTable {
    CountTable::new((0..m).map(|i| format!("t{i}")).collect(), (0..n).map(|s| format!("s{s}")).collect(), counts)
        .unwrap()
}

fn counts_strategy(zero_free: bool) -> impl Strategy<Value = (usize, usize, Vec<u64>)> {
    (3usize..12, 4usize..12).prop_flat_map(move |(m, n)| {
        let lo = if zero_free { 1u64 } else { 0 };
        (Just(m), Just(n), prop::collection::vec(lo..5000u64, m * n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn clr_columns_sum_to_zero((m, n, c) in counts_strategy(false), pseudo in any::<bool>()) {
        let t = table(m, n, c);
        prop_assume!(library_sizes(&t).is_ok());
        let strategy = if pseudo { ZeroStrategy::Pseudo } else { ZeroStrategy::Imputation };
        let w = clr_transform(handle_zeros(&t, strategy, None).unwrap()).unwrap();
        for s in 0..n {
            let sum: f64 = (0..m).map(|i| w.values()[(i, s)]).sum();
            prop_assert!(sum.abs() <= 1e-10 * m as f64, "column {s} sums to {sum}");
        }
    }

    #[test]
    fn clr_is_scale_invariant((m, n, c) in counts_strategy(true), col in 0usize..12, k in 2u64..1000) {
        let col = col % n;
        let t = table(m, n, c.clone());
        let mut scaled = c;
        for i in 0..m {
            scaled[i * n + col] *= k;
        }
        let a = clr_transform(handle_zeros(&t, ZeroStrategy::Imputation, None).unwrap()).unwrap();
        let b = clr_transform(handle_zeros(&table(m, n, scaled), ZeroStrategy::Imputation, None).unwrap()).unwrap();
        for i in 0..m {
            prop_assert_eq!(a.values()[(i, col)].to_bits(), b.values()[(i, col)].to_bits());
        }
    }

    #[test]
    fn imputation_rule((m, n, c) in counts_strategy(false)) {
        let t = table(m, n, c);
        prop_assume!(library_sizes(&t).is_ok());
        let libs = library_sizes(&t).unwrap();
        let x = handle_zeros(&t, ZeroStrategy::Imputation, None).unwrap();
        for i in 0..m {
            let zero_libs: Vec<u64> = (0..n).filter(|&s| t.get(i, s) == 0).map(|s| libs[s]).collect();
            for s in 0..n {
                let v = x.values()[(i, s)];
                if t.get(i, s) > 0 {
                    prop_assert_eq!(v, t.get(i, s) as f64);
                } else if libs[s] == *zero_libs.iter().max().unwrap() {
                    prop_assert_eq!(v, 1.0);
                } else {
                    prop_assert!(v > 0.0 && v < 1.0);
                }
            }
        }
    }

    #[test]
    fn filtering_is_idempotent((m, n, c) in counts_strategy(false), min_lib in 0u64..20000, prev in 0.0..0.9f64) {
        let t = table(m, n, c);
        let meta = MetadataTable::new(
            t.sample_ids().to_vec(),
            vec![Variable::continuous("x", (0..n).map(|s| Some(s as f64)).collect())],
        ).unwrap();
        if let Ok((t1, m1)) = filter_dataset(&t, &meta, min_lib, prev) {
            let (t2, m2) = filter_dataset(&t1, &m1, min_lib, prev).unwrap();
            prop_assert_eq!(t1, t2);
            prop_assert_eq!(m1, m2);
        }
    }

    #[test]
    fn winsorize_only_lowers_large_entries((m, n, c) in counts_strategy(false), q in 0.51..1.0f64) {
        let t = table(m, n, c);
        let w = winsorize(&t, q).unwrap();
        prop_assert_eq!((w.n_taxa(), w.n_samples()), (m, n));
        for i in 0..m {
            let mut row: Vec<f64> = t.row(i).iter().map(|&v| v as f64).collect();
            row.sort_by(f64::total_cmp);
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let qi = row[lo] + (h - lo as f64) * (row[(lo + 1).min(n - 1)] - row[lo]);
            for s in 0..n {
                prop_assert!(w.get(i, s) <= t.get(i, s));
                if t.get(i, s) as f64 <= qi {
                    prop_assert_eq!(w.get(i, s), t.get(i, s));
                }
            }
        }
    }
}

fn random_design(rng: &mut Lcg, n: usize, d: usize) -> (DesignMatrix, Dense) {
    let u: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let adj: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
    let design = DesignMatrix::from_covariates(&u, &adj).unwrap();
    let z: Dense = (0..n).map(|s| design.z().row(s).to_vec()).collect();
    (design, z)
}

#[test]
fn ols_matches_normal_equations() {
    let mut rng = Lcg(11);
    for inst in 0..30 {
        let (n, d) = (25 + inst % 10, inst % 3);
        let (design, z) = random_design(&mut rng, n, d);
        let engine = OlsEngine::new(&design).unwrap();
        for _ in 0..5 {
            let w: Vec<f64> = (0..n).map(|_| 3.0 * rng.normal() + 1.0).collect();
            let fit = engine.fit(&w);
            let want = normal_equations(&z, &w);
            let got: Vec<f64> = std::iter::once(fit.alpha_tilde).chain(fit.beta_tilde.iter().copied()).collect();
            for (g, e) in got.iter().zip(&want) {
                assert!((g - e).abs() <= 1e-10 * e.abs().max(1.0), "{g} vs {e}");
            }
            // Residuals are orthogonal to every design column.
            let theta = engine.coefficients(&w);
            let r = engine.residuals(&w, &theta);
            for k in 0..z[0].len() {
                let ip: f64 = (0..n).map(|s| z[s][k] * r[s]).sum();
                assert!(ip.abs() < 1e-8, "column {k}: {ip}");
            }
        }
    }
}

#[test]
fn negating_covariate_negates_alpha() {
    let mut rng = Lcg(5);
    let n = 30;
    let u: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    let a = OlsEngine::new(&DesignMatrix::from_covariates(&u, &[c.clone()]).unwrap()).unwrap();
    let b = OlsEngine::new(&DesignMatrix::from_covariates(&neg, &[c]).unwrap()).unwrap();
    for _ in 0..20 {
        let w: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let (fa, fb) = (a.fit(&w), b.fit(&w));
        assert!((fa.alpha_tilde + fb.alpha_tilde).abs() <= 1e-12 * fa.alpha_tilde.abs().max(1.0));
        assert!((fa.sigma2_hat - fb.sigma2_hat).abs() <= 1e-12 * fa.sigma2_hat);
    }
}

#[test]
fn clr_coefficients_sum_to_zero() {
    let mut rng = Lcg(9);
    let (m, n) = (40, 24);
    let counts: Vec<u64> = (0..m * n).map(|_| (rng.next_f64() * 300.0) as u64).collect();
    let t = table(m, n, counts);
    let (design, _) = random_design(&mut rng, n, 1);
    let w = clr_transform(handle_zeros(&t, ZeroStrategy::Pseudo, None).unwrap()).unwrap();
    let fits = fit_ols_all(&w, &design).unwrap();
    let sum: f64 = fits.iter().map(|f| f.alpha_tilde).sum();
    assert!(sum.abs() <= 1e-8 * m as f64);
}

#[test]
fn built_designs_have_intercept_and_full_rank() {
    let n = 12;
    let meta = MetadataTable::new(
        (0..n).map(|s| format!("s{s}")).collect(),
        vec![
            Variable::infer("u", (0..n).map(|s| Some(if s % 3 == 0 { "b" } else { "a" }.to_string())).collect()),
            Variable::continuous("x", (0..n).map(|s| Some((s * s) as f64)).collect()),
            Variable::infer("site", (0..n).map(|s| Some(["p", "q", "r"][(s / 2) % 3].to_string())).collect()),
            Variable::infer("batch", (0..n).map(|s| Some(["p", "q", "r"][s % 3].to_string())).collect()),
        ],
    )
    .unwrap();
    let d = build_design(&meta, &DesignSpec::new("u").adjust("x").adjust("site")).unwrap();
    let z = d.z();
    assert!((0..n).all(|s| z[(s, 1)] == 1.0));
    assert_eq!(d.n_columns(), d.d() + 2);
    assert!(OlsEngine::new(&d).is_ok());
    // `batch` level p coincides with u = b, so its dummies are collinear with u.
    let bad = build_design(&meta, &DesignSpec::new("u").adjust("batch"));
    assert!(matches!(bad, Err(linda_core::Error::RankDeficient { .. })));
}
