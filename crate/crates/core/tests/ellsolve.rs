mod common;

use common::*;
use elab_core::ellsolve::*;
use elab_core::fields::{gerstner_w, identity, unit_square};
use elab_core::symflow::derive_rotation_system;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn nondegenerate_dw() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-3.0f64..3.0).prop_filter("det(dw) away from 0", |d| {
        (d[0] * d[3] - d[1] * d[2]).abs() > 1e-2
    })
}

#[test]
fn symbol_matrix_matches_displayed_determinant() {
    // The rotation system's symbol determinant is minus the displayed form;
    // reflections only change signs.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for r in [[false, false], [true, false], [false, true], [true, true]] {
        let sys = derive_rotation_system(r[0], r[1]).unwrap();
        for _ in 0..50 {
            let dw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let m = SymbolMatrix::new(&sys, &dw, xi).unwrap();
            assert!((m.det().abs() - symbol_det(&dw, xi)).abs() < 1e-12);
        }
    }
    let sys = derive_rotation_system(false, false).unwrap();
    let m = SymbolMatrix::new(&sys, &[0.3f64, -1.0, 2.0, 0.5], [0.7, 1.1]).unwrap();
    assert!((m.det() + symbol_det(&[0.3, -1.0, 2.0, 0.5], [0.7, 1.1])).abs() < 1e-12);
}

proptest! {
    #[test]
    fn elliptic_when_dw_invertible(dw in nondegenerate_dw(), th in 0.0f64..std::f64::consts::TAU, r in 0.01f64..10.0) {
        prop_assert!(symbol_det(&dw, [r * th.cos(), r * th.sin()]) > 0.0);
        prop_assert!(min_symbol_on_circle(&dw, 360) > 0.0);
    }

    #[test]
    fn factorization_reproduces_determinant(dw in nondegenerate_dw(), xi in prop::array::uniform2(-3.0f64..3.0)) {
        let prod = factorized_symbol_det(&dw, xi);
        let direct = symbol_det(&dw, xi);
        prop_assert!((prod.re - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!(prod.im.abs() <= 1e-12 * (1.0 + direct));
    }
}

#[test]
fn degenerate_dw_has_real_null_direction() {
    let dw = [1.0, 2.0, 2.0, 4.0];
    assert!(min_symbol_on_circle(&dw, 3600) < 1e-5);
}

#[test]
fn recovers_manufactured_solution_at_second_order() {
    let c = [
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.3),
        Complex::new(0.2, -0.1),
        Complex::new(0.05, 0.02),
    ];
    let (r32, e32) = manufactured_elliptic(&c, 32);
    let (r64, e64) = manufactured_elliptic(&c, 64);
    assert!((3.0..=5.0).contains(&(r32 / r64)), "{r32} {r64}");
    assert!((3.0..=5.0).contains(&(e32 / e64)), "{e32} {e64}");
}

#[test]
fn gentle_manufactured_solution_meets_absolute_bound() {
    let (r, e) = manufactured_elliptic(&gentle_exponential(10.0), 64);
    assert!(r <= 1e-6, "{r}");
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn quadratic_data_is_solved_exactly() {
    // Second-order stencils are exact on quadratics, so the discrete system is consistent.
    let c = [
        Complex::new(0.1, 0.0),
        Complex::new(1.0, -0.5),
        Complex::new(0.3, 0.2),
    ];
    let (r, e) = manufactured_elliptic(&c, 20);
    assert!(r < 1e-11 && e < 1e-11, "{r} {e}");
}

#[test]
fn gerstner_recovers_identity_labels() {
    let w = gerstner_w(1.0).unwrap();
    let v = identity(w.domain());
    let d = w.domain();
    let opts = EllipticOptions {
        gauge: d.min[1],
        ..EllipticOptions::default()
    };
    let s = solve_for_v(&w, [24, 24], |a| v.value(a).unwrap()[0], &opts).unwrap();
    assert!(s.residual < 1e-10);
    for j in 0..24 {
        for i in 0..24 {
            let a = s.v.node(i, j);
            let x = s.v.at(i, j);
            assert!((x[0] - a[0]).abs() < 1e-9 && (x[1] - a[1]).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let c = [
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.2),
        Complex::new(0.1, 0.1),
    ];
    let (_, w) = elab_core::fields::cr_pair_from_polynomial(&c, unit_square()).unwrap();
    let s = solve_for_v(&w, [16, 16], |_| 0.0f64, &EllipticOptions::default()).unwrap();
    assert!(s
        .v
        .values
        .iter()
        .all(|x| x[0].abs() < 1e-12 && x[1].abs() < 1e-12));
}

#[test]
fn boundary_condition_on_second_component() {
    let c = [
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.3),
        Complex::new(0.2, -0.1),
    ];
    let (v, w) = elab_core::fields::cr_pair_from_polynomial(&c, unit_square()).unwrap();
    let opts = EllipticOptions {
        component: BoundaryComponent::V2,
        gauge: v.value([-1.0, -1.0]).unwrap()[0],
        ..EllipticOptions::default()
    };
    let s = solve_for_v(&w, [16, 16], |a| v.value(a).unwrap()[1], &opts).unwrap();
    let x = s.v.at(7, 9);
    let e = v.value(s.v.node(7, 9)).unwrap();
    assert!((x[0] - e[0]).abs() < 1e-10 && (x[1] - e[1]).abs() < 1e-10);
}

#[test]
fn rejects_small_grids_and_degenerate_w() {
    let w = identity::<f64>(unit_square());
    assert!(matches!(
        solve_for_v(&w, [8, 16], |_| 0.0, &EllipticOptions::default()),
        Err(EllError::Invalid(_))
    ));
    let flat = elab_core::fields::linear(
        elab_core::sl2::Mat2::new(1.0, 2.0, 2.0, 4.0),
        [0.0; 2],
        unit_square(),
    );
    assert!(matches!(
        solve_for_v(&flat, [16, 16], |_| 0.0, &EllipticOptions::default()),
        Err(EllError::DegenerateW { .. })
    ));
}
