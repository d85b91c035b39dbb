mod common;

use ckn_lab::bubbles::{self, BubbleSpec};
use ckn_lab::calculus;
use ckn_lab::decompose::{self, STATIONARITY_TOL};
use ckn_lab::stability_lab::Resolution;
use ckn_lab::{Error, Field};
use common::*;
use proptest::prelude::*;

fn two_bubble_grid(r: f64) -> std::sync::Arc<ckn_lab::Grid> {
    Resolution::default().grid(params32(), &[0.0, r]).unwrap()
}

fn objective(v: &Field, specs: &[BubbleSpec]) -> f64 {
    calculus::norm(&(v - &bubbles::bubble_sum(v.grid(), specs).unwrap())).powi(2)
}

#[test]
fn exact_bubble_is_a_fixed_point() {
    let g = two_bubble_grid(0.0);
    let v = bubbles::psi_profile(&g, 0.0);
    let dec = decompose::decompose(&v, 1).unwrap();
    assert!((dec.specs[0].alpha - 1.0).abs() <= 1e-12);
    assert!(dec.specs[0].center.abs() <= 1e-12);
    assert!(dec.dist <= 1e-12 * calculus::norm(&v));
    assert!(dec.nu_in_window && dec.orthogonality_ok());
    assert_eq!(dec.q, 0.0);
}

#[test]
fn planted_bubbles() {
    let g = Resolution::default().grid(params32(), &[0.2, 7.3]).unwrap();
    let v = bubbles::bubble_sum(&g, &[BubbleSpec::new(1.03, 0.2).unwrap(), BubbleSpec::new(0.97, 7.3).unwrap()])
        .unwrap();
    let dec = decompose::decompose(&v, 2).unwrap();
    let got = [dec.specs[0].alpha, dec.specs[0].center, dec.specs[1].alpha, dec.specs[1].center];
    for (a, b) in got.iter().zip([1.03, 0.2, 0.97, 7.3]) {
        assert!((a - b).abs() <= 1e-8, "{got:?}");
    }
    assert!(dec.betas.iter().all(|b| b.abs() <= 1e-8));
    assert!(dec.stationarity <= STATIONARITY_TOL);
    assert!(rel(dec.q, (-params32().sqrt_lambda() * 7.1).exp()) < 1e-6);
}

#[test]
fn kernel_component_is_invisible_to_the_fit() {
    let g = two_bubble_grid(0.0);
    let mut v = bubbles::psi_profile(&g, 0.0);
    v.axpy(0.1, &bubbles::kernel_profile(&g, 0.0, 3).unwrap());
    let dec = decompose::decompose(&v, 1).unwrap();
    assert!((dec.specs[0].alpha - 1.0).abs() <= 1e-10);
    assert!(dec.specs[0].center.abs() <= 1e-10);
    assert!((dec.betas[0] - 0.1).abs() <= 1e-10);
    assert!(dec.rho_star_norm <= 1e-10);
    assert!((dec.equivalence_ratio - 1.0).abs() < 1e-8);
}

#[test]
fn multi_start_agrees_with_single_start() {
    let g = two_bubble_grid(14.0);
    let v = bubbles::bubble_sum(&g, &[BubbleSpec::unit(0.0), BubbleSpec::unit(14.0)]).unwrap();
    let single = decompose::decompose(&v, 2).unwrap();
    let multi = decompose::manifold_distance(&v, 2, 99).unwrap();
    assert_eq!(multi.starts.len(), decompose::RESTARTS + 1);
    assert!((multi.dist - single.dist).abs() <= 1e-6);
    let again = decompose::manifold_distance(&v, 2, 99).unwrap();
    assert_eq!(again.dist.to_bits(), multi.dist.to_bits());
}

#[test]
fn scaled_bubble_matches_amplitude_scan() {
    let g = two_bubble_grid(0.0);
    let psi = bubbles::psi_profile(&g, 0.0);
    let mut v = psi.scaled(2.0);
    v.axpy(0.01, &bubbles::psi_profile(&g, 0.5));
    let dec = decompose::decompose(&v, 1).unwrap();
    // Brute force over amplitude and center.
    let mut best = f64::INFINITY;
    for ia in 0..=400 {
        let alpha = 1.9 + 0.0005 * ia as f64;
        for is in 0..=40 {
            let s = -0.05 + 0.0025 * is as f64;
            best = best.min(objective(&v, &[BubbleSpec::new(alpha, s).unwrap()]));
        }
    }
    let fitted = dec.dist.powi(2);
    assert!(fitted <= best * (1.0 + 1e-9) + 1e-24, "{fitted} vs scan {best}");
    assert!(rel(objective(&v, &dec.specs), fitted) < 1e-8);
}

#[test]
fn distance_is_continuous_in_scale() {
    let g = two_bubble_grid(12.0);
    let mut v = bubbles::bubble_sum(&g, &[BubbleSpec::unit(0.0), BubbleSpec::unit(12.0)]).unwrap();
    v.axpy(0.05, &bubbles::kernel_profile(&g, 0.0, 3).unwrap());
    v.axpy(1e-3, &random_field(&g, &mut rng(4)));
    let base = decompose::decompose(&v, 2).unwrap().dist;
    for c in [1.0 - 1e-4, 1.0 + 1e-4] {
        let d = decompose::decompose(&v.scaled(c), 2).unwrap().dist / c;
        assert!(rel(d, base) < 1e-3, "c={c}: {d} vs {base}");
    }
}

#[test]
fn first_order_optimality() {
    let g = two_bubble_grid(10.0);
    let mut v = bubbles::bubble_sum(&g, &[BubbleSpec::new(1.1, 0.0).unwrap(), BubbleSpec::new(0.9, 10.0).unwrap()])
        .unwrap();
    v.axpy(0.02, &random_field(&g, &mut rng(21)));
    let dec = decompose::decompose(&v, 2).unwrap();
    let v2 = calculus::norm(&v).powi(2);
    let h = 1e-5;
    for k in 0..4 {
        let shifted = |e: f64| {
            let mut s = dec.specs.clone();
            let b = &mut s[k / 2];
            if k % 2 == 0 {
                b.alpha += e;
            } else {
                b.center += e;
            }
            objective(&v, &s)
        };
        let deriv = (shifted(h) - shifted(-h)) / (2.0 * h);
        assert!(deriv.abs() <= 1e-8 * v2, "direction {k}: {deriv}");
    }
}

#[test]
fn idempotent() {
    let g = two_bubble_grid(9.0);
    let mut v = bubbles::bubble_sum(&g, &[BubbleSpec::unit(0.0), BubbleSpec::unit(9.0)]).unwrap();
    v.axpy(0.01, &random_field(&g, &mut rng(8)));
    let dec = decompose::decompose(&v, 2).unwrap();
    let proj = bubbles::bubble_sum(&g, &dec.specs).unwrap();
    let again = decompose::decompose(&proj, 2).unwrap();
    for (a, b) in dec.specs.iter().zip(&again.specs) {
        assert!((a.alpha - b.alpha).abs() <= 1e-10 && (a.center - b.center).abs() <= 1e-10);
    }
    assert!(again.dist <= 1e-10 * calculus::norm(&proj));
}

#[test]
fn orthogonality_residuals_are_reported() {
    let g = two_bubble_grid(11.0);
    let mut v = bubbles::bubble_sum(&g, &[BubbleSpec::unit(0.0), BubbleSpec::unit(11.0)]).unwrap();
    v.axpy(0.03, &bubbles::kernel_profile(&g, 11.0, 3).unwrap());
    v.axpy(0.01, &random_field(&g, &mut rng(2)));
    let dec = decompose::decompose(&v, 2).unwrap();
    assert_eq!(dec.ortho_residuals.len(), 6);
    assert!(dec.ortho_residuals.contains_key("w_2"));
    assert!(dec.orthogonality_ok(), "{:?}", dec.ortho_residuals);
    assert!((0.25..=4.0).contains(&dec.equivalence_ratio));
}

#[test]
fn failures() {
    let g = two_bubble_grid(0.0);
    let v = bubbles::psi_profile(&g, 0.0);
    assert!(decompose::decompose(&v, 0).is_err());
    assert!(decompose::seed_bubbles(&v, 2).is_err());
    let init = [BubbleSpec::unit(-0.2), BubbleSpec::unit(0.2)];
    assert!(matches!(decompose::fit_bubbles(&v, 2, Some(&init)), Err(Error::CollapsedCenters { .. })));
    assert!(decompose::fit_bubbles(&v, 2, Some(&init[..1])).is_err());
}

#[test]
fn out_of_window_input_is_flagged_not_rejected() {
    let g = two_bubble_grid(0.0);
    let v = bubbles::psi_profile(&g, 0.0).scaled(0.6);
    let dec = decompose::decompose(&v, 1).unwrap();
    assert!(!dec.nu_in_window);
    assert!((dec.specs[0].alpha - 0.6).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn recovers_random_planted_pairs(a1 in 0.8f64..1.2, a2 in 0.8f64..1.2, s in -1.0f64..1.0, gap in 8.0f64..16.0) {
        let g = Resolution::default().grid(params32(), &[s, s + gap]).unwrap();
        let specs = [BubbleSpec::new(a1, s).unwrap(), BubbleSpec::new(a2, s + gap).unwrap()];
        let v = bubbles::bubble_sum(&g, &specs).unwrap();
        let dec = decompose::decompose(&v, 2).unwrap();
        for (a, b) in dec.specs.iter().zip(&specs) {
            prop_assert!((a.alpha - b.alpha).abs() <= 1e-8 && (a.center - b.center).abs() <= 1e-8);
        }
    }
}
