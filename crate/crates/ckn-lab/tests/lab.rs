mod common;

use ckn_lab::calculus;
use ckn_lab::exec::{self, Parallelism};
use ckn_lab::stability_lab::{self as lab, presets, Column, CorrectionLevel, ExampleSpec, Regime, Resolution};
use ckn_lab::FsParameters;
use common::*;
use proptest::prelude::*;

fn xi11_l1(params: FsParameters, r: f64) -> f64 {
    let spec = ExampleSpec::new(r, 0.1).unwrap();
    let g = lab::example_grid(params, &spec, &Resolution::default()).unwrap();
    let xi = lab::build_xi_terms(&g, &spec);
    xi.xi11.mode(0).iter().map(|v| v.abs()).sum::<f64>() * g.h() * g.mode_weight(0)
}

fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

#[test]
fn spec_validation() {
    assert!(ExampleSpec::new(0.0, 0.1).is_err());
    assert!(ExampleSpec::new(10.0, -0.1).is_err());
    let s = ExampleSpec::new(10.0, 0.0).unwrap();
    assert_eq!(s.level, CorrectionLevel::Full);
    assert!(!s.positive_part);
    assert_eq!("first".parse::<CorrectionLevel>().unwrap(), CorrectionLevel::FirstOrder);
    assert!("half".parse::<CorrectionLevel>().is_err());
    assert!(lab::interaction_q(&params32(), -1.0).is_err());
}

#[test]
fn exact_power_data() {
    let xs = lab::spaced(1e-6, 1.0, 8, true);
    let ys: Vec<f64> = xs.iter().map(|x| x.powf(1.0 / 3.0)).collect();
    let fit = lab::fit_exponent(&xs, &ys).unwrap();
    assert!((fit.slope - 1.0 / 3.0).abs() < 1e-14);
    assert!(fit.stderr < 1e-14);
    assert!(lab::fit_exponent(&xs[..3], &ys[..3]).is_err());
    assert!(lab::fit_exponent(&[1.0, 2.0, 2.0, 3.0], &[1.0; 4]).is_err());
    assert!(lab::fit_exponent(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 1.0, 1.0]).is_err());
}

#[test]
fn spacing_and_schedules() {
    assert_eq!(lab::spaced(8.0, 18.0, 6, false), vec![8.0, 10.0, 12.0, 14.0, 16.0, 18.0]);
    let g = lab::spaced(0.02, 0.2, 6, true);
    assert!(rel(g[5], 0.2) < 1e-15 && rel(g[1] / g[0], g[5] / g[4]) < 1e-12);
    let s = lab::schedule(&[0.1, 0.2], &[8.0, 9.0], CorrectionLevel::None, true).unwrap();
    let pairs: Vec<(f64, f64)> = s.iter().map(|e| (e.beta, e.r)).collect();
    assert_eq!(pairs, vec![(0.1, 8.0), (0.2, 8.0), (0.1, 9.0), (0.2, 9.0)]);
    assert!(s.iter().all(|e| e.positive_part && e.level == CorrectionLevel::None));
    for name in ["kernel", "beta0-p3", "beta0-p2", "beta0-p1.5", "grid"] {
        let p = presets::by_name(name).unwrap();
        assert!(p.params().is_ok() && !p.schedule().unwrap().is_empty());
    }
    assert!(presets::by_name("nope").is_err());
    assert_eq!(presets::law_grid().schedule().unwrap().len(), 36);
    assert_eq!("R".parse::<Column>().unwrap(), Column::R);
}

#[test]
fn regimes() {
    let p = params32();
    let q16 = lab::interaction_q(&p, 16.0).unwrap();
    for b in presets::kernel_dominated().betas {
        assert_eq!(lab::classify(&p, b, q16), Regime::KernelDominated);
    }
    assert_eq!(lab::classify(&p, 0.0, q16), Regime::InteractionDominated);
    assert_eq!(lab::classify(&p, 0.05, lab::interaction_q(&p, 6.0).unwrap()), Regime::Mixed);
    assert_eq!(Regime::KernelDominated.to_string(), "kernel_dominated");
}

#[test]
fn first_error_term_decays_with_the_interaction() {
    // p > 2: |Xi_11|_1 ~ Q_R.
    let p3 = FsParameters::new(2, 3.0).unwrap();
    let rs = [8.0, 10.0, 12.0, 14.0, 16.0];
    let ys: Vec<f64> = rs.iter().map(|&r| xi11_l1(p3, r).ln()).collect();
    let slope = linear_slope(&rs, &ys);
    assert!(rel(slope, -p3.sqrt_lambda()) <= 0.02, "{slope}");
    // p = 2: the overlap integral picks up a factor R, |Xi_11|_1 ~ R Q_R.
    let p2 = params32();
    let ys: Vec<f64> = rs.iter().map(|&r| (xi11_l1(p2, r) / r).ln()).collect();
    let slope = linear_slope(&rs, &ys);
    assert!(rel(slope, -p2.sqrt_lambda()) <= 0.02, "{slope}");
    // Independent of beta.
    let g = lab::example_grid(p2, &ExampleSpec::new(12.0, 0.0).unwrap(), &Resolution::default()).unwrap();
    let a = lab::build_xi_terms(&g, &ExampleSpec::new(12.0, 0.0).unwrap()).xi11;
    let b = lab::build_xi_terms(&g, &ExampleSpec::new(12.0, 0.3).unwrap()).xi11;
    assert_eq!((&a - &b).max_abs(), 0.0);
}

#[test]
fn xi_terms_live_in_their_modes() {
    let p = params32();
    let spec = ExampleSpec::new(12.0, 0.1).unwrap();
    let g = lab::example_grid(p, &spec, &Resolution::default()).unwrap();
    let xi = lab::build_xi_terms(&g, &spec);
    assert!((1..g.n_modes()).all(|j| xi.xi11.mode(j).iter().all(|v| *v == 0.0)));
    assert!(xi.xi12.mode(0).iter().all(|v| *v == 0.0));
    // Xi_21 is symmetric about R/2 under t -> R - t.
    let i = g.nearest(3.0);
    let k = g.nearest(9.0);
    let even = |f: &ckn_lab::Field| (0..g.n_modes()).map(|j| f.mode(j)[i] - f.mode(j)[k]).collect::<Vec<_>>();
    assert!(even(&xi.xi21)[0].abs() < 1e-12 * xi.xi21.max_abs());
}

#[test]
fn corrections_reduce_the_residual() {
    let p = params32();
    let mut last = f64::INFINITY;
    for level in [CorrectionLevel::None, CorrectionLevel::FirstOrder, CorrectionLevel::Full] {
        let spec = ExampleSpec::new(14.0, 0.05).unwrap().with_level(level);
        let g = lab::example_grid(p, &spec, &Resolution::default()).unwrap();
        let ex = lab::assemble_example(&g, &spec).unwrap();
        let f = calculus::dual_norm(&ex.residual().unwrap());
        assert!(f < last, "{level:?}: {f} >= {last}");
        last = f;
        if level == CorrectionLevel::None {
            assert!(ex.correction.is_zero());
        }
    }
}

#[test]
fn correction_size_law() {
    // |rho| / (beta^2 + Q |ln Q|) stays in a bounded band across R.
    let p = params32();
    for beta in [0.05, 0.1] {
        let ratios: Vec<f64> = [8.0, 10.0, 12.0, 14.0, 16.0]
            .iter()
            .map(|&r| {
                let spec = ExampleSpec::new(r, beta).unwrap();
                let g = lab::example_grid(p, &spec, &Resolution::default()).unwrap();
                let ex = lab::assemble_example(&g, &spec).unwrap();
                let q = lab::interaction_q(&p, r).unwrap();
                calculus::norm(&ex.correction) / (beta * beta + q * q.ln().abs())
            })
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo <= 2.0, "beta={beta}: {ratios:?}");
    }
}

#[test]
fn sweep_records() {
    let p = params32();
    assert!(lab::run_sweep(p, &Resolution::default(), &[], 1).is_err());
    let sched = lab::schedule(&[0.05, 0.1], &[14.0], CorrectionLevel::Full, false).unwrap();
    let recs = lab::run_sweep(p, &Resolution::default(), &sched, 3).unwrap();
    assert_eq!(recs.len(), 2);
    for r in &recs {
        assert!(r.ok(), "{:?}", r.error);
        assert!(r.q_r > 0.0 && r.q_r < 1.0);
        for v in [r.f_dual, r.dist, r.alpha1, r.alpha2, r.s1, r.s2, r.beta1, r.beta2] {
            assert!(v.is_finite());
        }
        assert!(r.s1 < r.s2 && r.nu_ok);
        assert_eq!(r.dist, r.dist_signed);
    }
    assert!(recs[0].f_dual < recs[1].f_dual);
}

#[test]
fn positive_part_changes_little() {
    let p = params32();
    let spec = ExampleSpec::new(14.0, 0.1).unwrap().with_positive_part(true);
    let r = lab::run_record(p, &Resolution::default(), &spec, 5).unwrap();
    // beta Psi^{(p+1)/2} < Psi here, so the negative part comes from the corrections only.
    assert!(r.negative_part_norm2 <= 1e-6 * r.dist_signed.powi(2), "{}", r.negative_part_norm2);
    assert!(rel(r.dist, r.dist_signed) < 1e-3, "{} vs {}", r.dist, r.dist_signed);
}

#[test]
fn sweeps_are_deterministic_across_policies() {
    let p = params32();
    let sched = lab::schedule(&[0.05, 0.1, 0.2], &[12.0], CorrectionLevel::Full, false).unwrap();
    exec::set_policy(Parallelism::Sequential);
    let a = lab::run_sweep(p, &Resolution::default(), &sched, 17).unwrap();
    exec::set_policy(Parallelism::Rayon);
    let b = lab::run_sweep(p, &Resolution::default(), &sched, 17).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.f_dual.to_bits(), y.f_dual.to_bits());
        assert_eq!(x.dist.to_bits(), y.dist.to_bits());
        assert_eq!(x.beta1.to_bits(), y.beta1.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seeds_are_distinct(seed in any::<u64>(), i in 0usize..1000) {
        prop_assert_ne!(lab::derive_seed(seed, i), lab::derive_seed(seed, i + 1));
    }

    #[test]
    fn fit_recovers_power_laws(k in -3.0f64..3.0, c in 0.01f64..100.0) {
        let xs = lab::spaced(0.1, 10.0, 6, true);
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(k)).collect();
        let fit = lab::fit_exponent(&xs, &ys).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-12);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-11);
    }
}
