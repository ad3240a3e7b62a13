mod common;

use std::sync::Arc;

use common::*;
use elab_core::fields::{gerstner_domain, identity, linear, unit_square};
use elab_core::flows::*;
use elab_core::scalar::Rect;
use elab_core::sl2::{psi, Mat2, SL2Path, ScalarCurve};

fn det(m: &Mat2<f64>) -> f64 {
    m.det()
}

#[test]
fn kirchhoff_satisfies_lagrangian_euler() {
    let v = linear(Mat2::new(1.0f64, 0.2, -0.1, 0.8), [0.1, 0.0], unit_square());
    let f = kirchhoff(0.4, 1.3, v, (0.0, 5.0), &FlowOptions::default()).unwrap();
    for &t in &[0.0, 1.1, 4.7] {
        for &a in &[[0.1, 0.2], [-0.7, 0.9], [0.5, -0.5]] {
            let acc = f.acceleration_term(t, a).unwrap();
            let gp = f.pressure_gradient(t, a).unwrap().unwrap();
            assert!((acc[0] + gp[0]).abs() < 1e-12 && (acc[1] + gp[1]).abs() < 1e-12);
        }
        let u = f.eulerian_velocity_matrix(t).unwrap();
        assert!(u.trace().abs() < 1e-12);
    }
}

#[test]
fn kirchhoff_positions_follow_psi() {
    let v = identity(unit_square::<f64>());
    let f = kirchhoff(0.3, 2.0, v, (0.0, 1.0), &FlowOptions::default()).unwrap();
    let x = f.position(0.5, [0.2, -0.4]).unwrap();
    let y = psi(0.3, 1.0, 0.0).apply([0.2, -0.4]);
    assert!((x[0] - y[0]).abs() < 1e-15 && (x[1] - y[1]).abs() < 1e-15);
}

#[test]
fn family1_rejects_non_geodesic_time_data() {
    let q: elab_core::sl2::ChartCurve<f64> =
        Arc::new(|t| [[0.0, t * t, 0.0], [0.0, 2.0 * t, 0.0], [0.0, 2.0, 0.0]]);
    let a = SL2Path::analytic(0.0, 1.0, q);
    let v = identity(unit_square::<f64>());
    assert!(matches!(
        family1(a, v, &FlowOptions::default()),
        Err(FlowError::SymmetryViolated { .. })
    ));
}

#[test]
fn family1_rejects_degenerate_labels() {
    let v = linear(Mat2::new(1.0, 2.0, 0.5, 1.0), [0.0, 0.0], unit_square());
    let a = SL2Path::kirchhoff(0.2, 1.0, 0.0, 1.0);
    assert!(matches!(
        family1(a, v, &FlowOptions::default()),
        Err(FlowError::DegenerateLabelField { .. })
    ));
}

#[test]
fn gerstner_has_time_independent_jacobian() {
    let f = gerstner(
        1.0,
        (0.0, 2.0 * std::f64::consts::PI),
        &FlowOptions::default(),
    )
    .unwrap();
    let d = gerstner_domain(1.0);
    let a = [0.3 * d.max[0], 0.5 * (d.min[1] + d.max[1])];
    let j0 = det(&f.jacobian(0.0, a).unwrap());
    for i in 1..20 {
        let t = 0.3 * i as f64;
        assert!((det(&f.jacobian(t, a).unwrap()) - j0).abs() < 1e-13);
    }
    assert!(f.pressure(0.0, a).is_none());
}

#[test]
fn family2_rejects_equal_speeds_and_non_solutions() {
    let v = identity(unit_square::<f64>());
    let w = linear(Mat2::new(1.0, 0.0, 0.0, 2.0), [0.0, 0.0], unit_square());
    let o = FlowOptions::default();
    assert!(matches!(
        family2(1.0, 1.0, v.clone(), w.clone(), false, false, (0.0, 1.0), &o),
        Err(FlowError::EqualSpeeds)
    ));
    assert!(matches!(
        family2(0.0, 1.0, v, w, false, false, (0.0, 1.0), &o),
        Err(FlowError::SystemResidualTooLarge { .. })
    ));
}

#[test]
fn transport_with_horizontal_characteristics() {
    // u3 = α2: level curves are horizontal, so u1 + u2 and u2 + u4 depend on α2 only.
    let d = unit_square::<f64>();
    let u1 = scalar_field("u1", d, |x, y| (x * x + y, [2.0 * x, 1.0]));
    let u3 = scalar_field("u3", d, |_, y| (y, [0.0, 1.0]));
    let init = InitialData {
        line: InitialLine::Vertical(-1.0),
        u2: Arc::new(|s: f64| [s.sin(), s.cos(), -s.sin()]) as ScalarCurve<f64>,
        u4: Arc::new(|s: f64| [3.0 * s, 3.0, 0.0]) as ScalarCurve<f64>,
    };
    let (sol, grid) = transport_solve(u1, u3, init, [9, 9], &FlowOptions::default()).unwrap();
    assert!(grid.invalid.is_empty());
    for &a in &[[0.3, 0.4], [-0.9, -0.2], [1.0, 1.0]] {
        let (u, du) = sol.jet(a).unwrap();
        let (x, y) = (a[0], a[1]);
        let u2 = 1.0 + y + y.sin() - x * x - y;
        let u4 = 3.0 * y + y.sin() - u2;
        assert!((u[1] - u2).abs() < 1e-14 && (u[3] - u4).abs() < 1e-14);
        // u2_10 = -u1_10 along horizontal characteristics.
        assert!((du[1][0] + du[0][0]).abs() < 1e-14);
    }
    let (i, j) = (4, 6);
    let a = grid.u2.node(i, j);
    assert!((grid.u2.at(i, j)[0] - sol.jet(a).unwrap().0[1]).abs() < 1e-15);
}

#[test]
fn transport_solution_satisfies_system_pointwise() {
    let (u1, u3, init) = transport_inputs();
    let (sol, grid) = transport_solve(u1, u3, init, [17, 17], &FlowOptions::default()).unwrap();
    assert!(grid.invalid.is_empty());
    let g = |du: &[[f64; 2]; 4], l: usize, k: usize| du[l][0] * du[k][1] - du[l][1] * du[k][0];
    for j in 0..17 {
        for i in 0..17 {
            let (_, du) = sol.jet(grid.u2.node(i, j)).unwrap();
            // g4 + g5 and g1 - g4 in the minor numbering.
            let e1 = g(&du, 1, 2) + g(&du, 0, 2);
            let e2 = g(&du, 2, 3) - g(&du, 1, 2);
            assert!(e1.abs() < 1e-12 && e2.abs() < 1e-12, "{e1} {e2}");
        }
    }
}

#[test]
fn transport_jacobian_matches_differences() {
    let (u1, u3, init) = transport_inputs();
    let sol = TransportSolution::new(u1, u3, init, &FlowOptions::default()).unwrap();
    let h = 1e-5;
    for &a in &[[0.4, 0.5], [0.9, 0.9], [0.1, 0.7]] {
        let (_, du) = sol.jet(a).unwrap();
        for d in 0..2 {
            let mut p = a;
            let mut m = a;
            p[d] += h;
            m[d] -= h;
            let (up, um) = (sol.jet(p).unwrap().0, sol.jet(m).unwrap().0);
            for c in 0..4 {
                assert!(((up[c] - um[c]) / (2.0 * h) - du[c][d]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn transport_reports_tangency_and_exit() {
    let d = unit_square::<f64>();
    let u1 = scalar_field("u1", d, |x, _| (x, [1.0, 0.0]));
    let zero: ScalarCurve<f64> = Arc::new(|_| [0.0; 3]);
    let init = InitialData::bottom_edge(&d, zero.clone(), zero.clone());
    let flat = scalar_field("u3", d, |_, y| (y, [0.0, 1.0]));
    let r = transport_solve(
        u1.clone(),
        flat,
        init.clone(),
        [5, 5],
        &FlowOptions::default(),
    );
    assert!(matches!(r, Err(FlowError::CharacteristicTangency { .. })));
    let slanted = scalar_field("u3", d, |x, y| (x - 0.5 * y, [1.0, -0.5]));
    let (_, grid) = transport_solve(
        u1.clone(),
        slanted,
        init.clone(),
        [5, 5],
        &FlowOptions::default(),
    )
    .unwrap();
    assert!(!grid.invalid.is_empty() && grid.invalid.iter().all(|&(i, _)| i < 3));
    let stagnant = scalar_field("u3", d, |x, y| (x * x + y * y, [2.0 * x, 2.0 * y]));
    let r = transport_solve(u1, stagnant, init, [5, 5], &FlowOptions::default());
    assert!(matches!(r, Err(FlowError::StagnationPoint { .. })));
}

#[test]
fn family3_jacobian_has_rank_one() {
    // Column 4 of A is column 2 minus column 1, and the transport invariants
    // make u1 + u2 and u4 - u1 functions of u3, so φ depends on α through u3 only.
    let f = family3_flow(9);
    let dom: Rect<f64> = f.domain();
    for &a in &[[0.2, 0.3], [0.8, 0.6], [dom.max[0], dom.max[1]]] {
        for i in 0..=20 {
            let j = f.jacobian(0.1 * i as f64, a).unwrap();
            assert!(det(&j).abs() < 1e-12 * (1.0 + j.frobenius().powi(2)));
            assert!(j.frobenius() > 1e-3);
        }
    }
}

#[test]
fn family3_constrained_matrix_satisfies_constraints() {
    let f = family3_flow(5);
    for &t in &[0.0, 0.7, 1.9] {
        let [a, _, app] = f.time_matrix(t).unwrap();
        let m = a.m;
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() < 1e-10);
        assert!((m[0][2] * m[1][3] - m[0][3] * m[1][2] - 1.0).abs() < 1e-10);
        assert!((m[0][3] - m[0][1] + m[0][0]).abs() < 1e-14);
        assert!((app.m[1][3] - app.m[1][1] + app.m[1][0]).abs() < 1e-14);
    }
    // a13'' against differences of a13.
    let h = 1e-4;
    let a13 = |t: f64| f.time_matrix(t).unwrap()[0].m[0][2];
    let fd = (a13(1.0 + h) - 2.0 * a13(1.0) + a13(1.0 - h)) / (h * h);
    assert!((fd - f.time_matrix(1.0).unwrap()[2].m[0][2]).abs() < 1e-5);
}

#[test]
fn trajectory_csv_layout() {
    let v = identity(unit_square::<f64>());
    let f = kirchhoff(0.3, 1.0, v, (0.0, 1.0), &FlowOptions::default()).unwrap();
    let mut out = Vec::new();
    f.write_trajectories(&mut out, &[[0.1, 0.2], [0.3, 0.4]], &[0.0, 0.5])
        .unwrap();
    let s = String::from_utf8(out).unwrap();
    let lines: Vec<_> = s.lines().collect();
    assert_eq!(lines[0], "t,alpha1,alpha2,x1,x2,p");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1].split(',').count(), 6);
}
