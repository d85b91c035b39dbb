mod common;

use ckn_lab::bubbles::{self, BubbleSpec};
use ckn_lab::calculus::{self, BubbleCount};
use ckn_lab::stability_lab::Resolution;
use ckn_lab::Field;
use common::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn euler_lagrange_identity() {
    let p = params32();
    let g = Resolution::default().grid(p, &[0.0]).unwrap();
    let psi = bubbles::psi_profile(&g, 0.0);
    let lhs = calculus::norm(&psi).powi(2);
    let rhs = calculus::lp_norm(&psi, 3.0).unwrap().powi(3);
    assert!(rel(lhs, rhs) <= 1e-8, "{lhs} vs {rhs}");
}

#[test]
fn sobolev_constant_variants_agree() {
    let g = Resolution::default().grid(params32(), &[0.0]).unwrap();
    let a = calculus::sobolev_constant(&g);
    let b = calculus::sobolev_constant_quadrature(&g);
    assert!(rel(a, b) < 1e-7);
    assert_eq!(g.params_with_s_inv().s_inv, Some(a));
    assert!(calculus::deficit(&bubbles::psi_profile(&g, 0.0)).unwrap().abs() < 1e-9);
}

#[test]
fn sobolev_constant_refines() {
    let p = params32();
    let a = calculus::sobolev_constant(&Resolution::default().grid(p, &[0.0]).unwrap());
    let res = Resolution { n_t: 8193, ..Default::default() };
    let b = calculus::sobolev_constant(&res.grid(p, &[0.0]).unwrap());
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn bubble_window() {
    let g = Resolution::default().grid(params32(), &[0.0, 10.0]).unwrap();
    let one = bubbles::psi_profile(&g, 0.0);
    assert_eq!(calculus::bubble_count(&one), BubbleCount::Within(1));
    let two = bubbles::bubble_sum(&g, &[BubbleSpec::unit(0.0), BubbleSpec::unit(10.0)]).unwrap();
    assert_eq!(calculus::bubble_count(&two).count(), Some(2));
    assert_eq!(calculus::bubble_count(&Field::zeros(&g)), BubbleCount::OutOfWindow);
    assert_eq!(calculus::bubble_count(&one.scaled(0.5)), BubbleCount::OutOfWindow);
}

#[test]
fn errors() {
    let g = small_grid(params32(), 65, 1);
    assert!(calculus::deficit(&Field::zeros(&g)).is_err());
    assert!(calculus::lp_norm(&Field::zeros(&g), 0.5).is_err());
    assert_eq!(calculus::dual_norm(&Field::zeros(&g)), 0.0);
}

#[test]
fn duality_consistency() {
    let g = small_grid(params32(), 513, 4);
    let mut r = rng(11);
    for _ in 0..50 {
        let f = random_field(&g, &mut r);
        let dual = calculus::riesz_solve(&f);
        let (v2, fg, gg) = dual.evaluations(&f);
        assert!(rel(v2, fg) <= 1e-8 && rel(v2, gg) <= 1e-8);
        for _ in 0..20 {
            let phi = random_field(&g, &mut r);
            let pairing = calculus::l2_inner(&f, &phi).unwrap() / calculus::norm(&phi);
            assert!(pairing.abs() <= dual.value * (1.0 + 1e-8));
        }
        let at_riesz = calculus::l2_inner(&f, &dual.riesz).unwrap() / calculus::norm(&dual.riesz);
        assert!(rel(at_riesz, dual.value) <= 1e-8);
    }
}

#[test]
fn ckn_inequality_on_random_fields() {
    let g = small_grid(params32(), 513, 4);
    let mut r = rng(12);
    let psi = bubbles::psi_profile(&g, 0.0);
    for k in 0..100 {
        // Half the samples sit near the bubble, where the deficit is smallest.
        let mut u = random_field(&g, &mut r);
        if k % 2 == 0 {
            u.scale(r.random_range(1e-3..1e-1));
            u.axpy(r.random_range(0.5..2.0), &psi);
        }
        let def = calculus::deficit(&u).unwrap();
        assert!(def >= -1e-8 * calculus::norm(&u).powi(2), "sample {k}: {def}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn h1_is_symmetric_positive(seed in any::<u64>()) {
        let g = small_grid(params32(), 257, 3);
        let mut r = rng(seed);
        let (u, v) = (random_field(&g, &mut r), random_field(&g, &mut r));
        let uv = calculus::h1_inner(&u, &v).unwrap();
        let vu = calculus::h1_inner(&v, &u).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-12 * calculus::norm(&u) * calculus::norm(&v));
        prop_assert!(calculus::h1_inner(&u, &u).unwrap() >= 0.0);
        prop_assert!(uv.abs() <= calculus::norm(&u) * calculus::norm(&v) * (1.0 + 1e-12));
    }

    #[test]
    fn dual_norm_is_homogeneous(seed in any::<u64>(), c in -5.0f64..5.0) {
        let g = small_grid(params32(), 257, 3);
        let f = random_field(&g, &mut rng(seed));
        let a = calculus::dual_norm(&f.scaled(c));
        prop_assert!((a - c.abs() * calculus::dual_norm(&f)).abs() <= 1e-12 * a.max(1e-300));
    }
}
