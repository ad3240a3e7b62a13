#![allow(dead_code)]

use std::sync::Arc;

use elab_core::fields::{FieldFn, JacobianFn, LabelField};
use elab_core::flows::{family3, FlowOptions, FlowSolution, InitialData};
use elab_core::scalar::Rect;
use elab_core::sl2::{integrate_geodesic, GeodesicState, SL2Path, ScalarCurve};

pub fn scalar_field(
    name: &str,
    domain: Rect<f64>,
    f: impl Fn(f64, f64) -> (f64, [f64; 2]) + Send + Sync + Clone + 'static,
) -> LabelField<f64> {
    let g = f.clone();
    let eval: FieldFn<f64> = Arc::new(move |a| [f(a[0], a[1]).0, 0.0, 0.0, 0.0]);
    let jac: JacobianFn<f64> = Arc::new(move |a| [g(a[0], a[1]).1, [0.0; 2], [0.0; 2], [0.0; 2]]);
    LabelField::from_closure(name, 2, domain, eval, Some(jac)).unwrap()
}

pub fn geodesic(t1: f64) -> SL2Path<f64> {
    integrate_geodesic(GeodesicState::new(0.5, 0.0, 0.0, 0.3, 1.0, 0.7), t1, 1e-3).unwrap()
}

pub fn transport_inputs() -> (LabelField<f64>, LabelField<f64>, InitialData<f64>) {
    let d = Rect::new([0.0, 0.0], [1.0, 1.0]);
    let u1 = scalar_field("u1", d, |x, y| (y + 0.3 * x.sin(), [0.3 * x.cos(), 1.0]));
    let u3 = scalar_field("u3", d, |x, y| {
        let e = (-0.3 * y).exp();
        (x * e, [e, -0.3 * x * e])
    });
    let u2: ScalarCurve<f64> = Arc::new(|s| [0.5 * s + 0.2, 0.5, 0.0]);
    let u4: ScalarCurve<f64> = Arc::new(|s| [1.0 + s * s, 2.0 * s, 2.0]);
    (u1, u3, InitialData::bottom_edge(&d, u2, u4))
}

pub fn family3_flow(grid: usize) -> FlowSolution<f64> {
    let (u1, u3, init) = transport_inputs();
    let opts = FlowOptions {
        grid: [grid, grid],
        ..FlowOptions::default()
    };
    let zero: ScalarCurve<f64> = Arc::new(|_| [0.0; 3]);
    family3(geodesic(2.0), zero, u1, u3, init, &opts).unwrap()
}

/// Taylor polynomial of degree 5 of `l (e^{z/l} − 1)`.
pub fn gentle_exponential(l: f64) -> Vec<num_complex::Complex<f64>> {
    let mut c = vec![num_complex::Complex::new(0.0, 0.0)];
    let mut fact = 1.0;
    for k in 1..=5 {
        fact *= k as f64;
        c.push(num_complex::Complex::new(l.powi(1 - k) / fact, 0.0));
    }
    c
}

/// Manufactured elliptic problem: returns the residual and max error of the
/// solve on an `n × n` grid.
pub fn manufactured_elliptic(coeffs: &[num_complex::Complex<f64>], n: usize) -> (f64, f64) {
    use elab_core::ellsolve::{solve_for_v, EllipticOptions};
    let (v, w) =
        elab_core::fields::cr_pair_from_polynomial(coeffs, elab_core::fields::unit_square())
            .unwrap();
    let d = w.domain();
    let opts = EllipticOptions {
        gauge: v.value(d.min).unwrap()[1],
        ..EllipticOptions::default()
    };
    let s = solve_for_v(&w, [n, n], |a| v.value(a).unwrap()[0], &opts).unwrap();
    let mut err: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let e = v.value(s.v.node(i, j)).unwrap();
            let x = s.v.at(i, j);
            err = err.max((e[0] - x[0]).abs()).max((e[1] - x[1]).abs());
        }
    }
    (s.residual, err)
}
