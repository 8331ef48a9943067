//! Moment and structure checks for the data generator.

use linda_core::math;
use linda_core::simulate::{
    draw_library_sizes, gen_covariates, generate_replicate, make_default_params, run_replications, CovariateDesign,
    SimAnalysis, SimConfig, Setting,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sparsity(counts: &[u64]) -> f64 {
    counts.iter().filter(|&&c| c == 0).count() as f64 / counts.len() as f64
}

#[test]
fn s0_sparsity_in_calibrated_range() {
    let cfg = SimConfig::new(Setting::S0, CovariateDesign::C0, 500, 50);
    let params = make_default_params(500, cfg.seed);
    for r in 0..5 {
        let rep = generate_replicate(&cfg, &params, r).unwrap();
        let s = sparsity(rep.counts.counts());
        assert!((0.55..=0.80).contains(&s), "replicate {r}: sparsity {s}");
    }
}

#[test]
fn default_params_moments() {
    let p = make_default_params(20000, 3);
    let b = p.beta0();
    assert!(math::mean(b).abs() < 0.1);
    assert!((math::sd(b) - 3.0).abs() < 0.1);
    // Truncated InvGamma(3, 4) on [0.1, 20] has mean 1.967.
    let s = p.sigma2();
    assert!(s.iter().all(|v| (0.1..=20.0).contains(v)));
    assert!((math::mean(s) - 1.967).abs() < 0.08, "{}", math::mean(s));
    let c = p.confounder_coefs().unwrap();
    assert!((math::sd(c.as_slice()) - 1.0).abs() < 0.03);
}

#[test]
fn library_size_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 40000;
    let libs = draw_library_sizes(Setting::S0, &vec![0.0; n], &mut rng).unwrap();
    let x: Vec<f64> = libs.iter().map(|&v| v as f64).collect();
    let (mu, size) = (7645.0, 5.3);
    let sd = (mu + mu * mu / size as f64).sqrt();
    assert!(libs.iter().all(|&v| v >= 50));
    assert!((math::mean(&x) - mu).abs() < 4.0 * sd / (n as f64).sqrt());
    assert!((math::sd(&x) / sd - 1.0).abs() < 0.03);

    let u: Vec<f64> = (0..n).map(|s| (s % 2) as f64).collect();
    let libs = draw_library_sizes(Setting::S6, &u, &mut rng).unwrap();
    // Even indices have u = 0.
    let ctrl: Vec<f64> = libs.iter().step_by(2).map(|&v| v as f64).collect();
    let case: Vec<f64> = libs.iter().skip(1).step_by(2).map(|&v| v as f64).collect();
    assert!((math::mean(&ctrl) / 5000.0 - 1.0).abs() < 0.03);
    assert!((math::mean(&case) / 50000.0 - 1.0).abs() < 0.03);
}

#[test]
fn covariate_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20000;
    let c0 = gen_covariates(CovariateDesign::C0, n, &mut rng);
    assert!((math::mean(&c0.u) - 0.5).abs() < 0.02);
    let c1 = gen_covariates(CovariateDesign::C1, n, &mut rng);
    assert!(math::mean(&c1.u).abs() < 0.03 && (math::sd(&c1.u) - 1.0).abs() < 0.03);
    let c2 = gen_covariates(CovariateDesign::C2, n, &mut rng);
    assert_eq!(c2.confounders.len(), 2);
    // u is more likely when c1 = 1 than when c1 = -1.
    let rate = |sign: f64| {
        let sel: Vec<f64> = (0..n).filter(|&s| c2.confounders[0][s] == sign).map(|s| c2.u[s]).collect();
        math::mean(&sel)
    };
    assert!(rate(1.0) > rate(-1.0) + 0.1);
}

#[test]
fn grouped_settings_structure() {
    let mut cfg = SimConfig::new(Setting::S8_1, CovariateDesign::C0, 50, 20);
    let params = make_default_params(50, 1);
    let rep = generate_replicate(&cfg, &params, 0).unwrap();
    let g = rep.covariates.groups.clone().unwrap();
    assert_eq!(g, (0..20).map(|s| s / 2).collect::<Vec<_>>());
    assert!((0..20).all(|s| rep.covariates.u[s] == (s % 2) as f64));

    cfg.setting = Setting::S8_2;
    let rep = generate_replicate(&cfg, &params, 0).unwrap();
    let g = rep.covariates.groups.clone().unwrap();
    assert!((0..20).all(|s| rep.covariates.u[s] == rep.covariates.u[2 * g[s]]));

    cfg.n = 200;
    let rep = generate_replicate(&cfg, &params, 0).unwrap();
    assert_eq!(rep.covariates.groups.unwrap()[7], 1);
}

#[test]
fn every_setting_generates_and_is_deterministic() {
    for setting in Setting::ALL {
        let mut cfg = SimConfig::new(setting, CovariateDesign::C0, 80, 20);
        cfg.gamma = 0.2;
        let params = make_default_params(if setting == Setting::S4 { 500 } else { 80 }, 9);
        let a = generate_replicate(&cfg, &params, 4).unwrap();
        let b = generate_replicate(&cfg, &params, 4).unwrap();
        assert_eq!(a.counts, b.counts, "{setting}");
        assert_eq!(a.truth, b.truth);
        let c = generate_replicate(&cfg, &params, 5).unwrap();
        assert_ne!(a.counts, c.counts, "{setting}: replicates share a stream");
        for (h, al) in a.truth.h.iter().zip(&a.truth.alpha) {
            assert_eq!(*h, *al != 0.0);
        }
    }
}

#[test]
fn metrics_are_proportions() {
    let mut cfg = SimConfig::new(Setting::S1, CovariateDesign::C1, 100, 30);
    cfg.replicates = 8;
    cfg.mu_index = 4;
    let m = run_replications(&cfg, &SimAnalysis::default()).unwrap();
    assert_eq!(m.completed() + m.failures, 8);
    assert!(m.fdp.iter().chain(&m.tpp).all(|v| (0.0..=1.0).contains(v)));
    assert!((m.fdr_mean - math::mean(&m.fdp)).abs() < 1e-15);
    let again = run_replications(&cfg, &SimAnalysis::default()).unwrap();
    assert_eq!(m, again);
}
