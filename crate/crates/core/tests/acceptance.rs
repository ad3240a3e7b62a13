//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use elab_core::flows::{gerstner, transport_grid_residual, transport_solve, FlowOptions};
use elab_core::jetlab::{killing_solution_dimension, prove_affine_rigidity, JetSpace, JetVariable};
use elab_core::ratpoly::{buchberger, normal_form, BaseOrder, MonomialOrder, Ring};
use elab_core::sl2::*;
use elab_core::symflow::*;
use elab_core::verify::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Result<Outcome, Box<dyn std::error::Error>>;

fn rigidity() -> Result<Outcome, Box<dyn std::error::Error>> {
    let rep = prove_affine_rigidity(BaseOrder::DegRevLex)?;
    let low = Ring::new(
        JetSpace::new(2, 2)?
            .variables()
            .iter()
            .map(JetVariable::name)
            .collect::<Vec<_>>(),
    );
    let basis: Vec<_> = rep
        .eliminated_basis
        .iter()
        .map(|s| low.parse(s))
        .collect::<Result<_, _>>()?;
    // y¹ = u1, y² = u2; reduced bases are monic, so g1 may appear negated.
    let g = [
        "u1_11*u2_20 - u2_11*u1_20",
        "u1_11^2 + u1_20^2",
        "u2_11*u1_11 + u2_20*u1_20",
        "u2_11^2 + u2_20^2",
    ];
    let mut found = Vec::new();
    for (i, s) in g.iter().enumerate() {
        let p = low.parse(s)?;
        let exact = basis.contains(&p);
        let negated = basis.iter().any(|b| b.is_negative_of(&p));
        found.push(match (exact, negated) {
            (true, _) => format!("g{}", i + 1),
            (false, true) => format!("-g{}", i + 1),
            _ => format!("g{} missing", i + 1),
        });
    }
    let all_found = found.iter().all(|s| !s.contains("missing"));
    let mut zero = rep.vanishing_jets.clone();
    zero.sort();
    let jets_ok = zero == ["u1_02", "u1_11", "u1_20", "u2_02", "u2_11", "u2_20"];
    let dims = (rep.dimensions.complex, rep.dimensions.real);
    Ok(outcome(
        all_found && jets_ok && dims == (6, 5),
        format!(
            "basis has {}; second jets vanish: {jets_ok}; dimensions {dims:?}",
            found.join(", ")
        ),
    ))
}

fn killing() -> Result<Outcome, Box<dyn std::error::Error>> {
    let d = killing_solution_dimension(2)?;
    Ok(outcome(d == 3, format!("solution space dimension {d}")))
}

fn rotation_identity() -> Result<Outcome, Box<dyn std::error::Error>> {
    let m = SymbolicBlockMatrix::rotation([false, false]);
    let ring = m.ring().clone();
    let n12 = n12_expand(&m)?.target;
    let q1 = "(u3_10*u2_01 - u3_01*u2_10 - u4_10*u1_01 + u4_01*u1_10)";
    let q2 = "(u4_10*u2_01 - u4_01*u2_10 + u3_10*u1_01 - u3_01*u1_10)";
    let display = ring.parse(&format!(
        "(mu^2 - theta^2)*((s2*c1 - c2*s1)*{q1} + (c1*c2 + s1*s2)*{q2})"
    ))?;
    let trig = buchberger(
        &[
            ring.parse("c1^2 + s1^2 - 1")?,
            ring.parse("c2^2 + s2^2 - 1")?,
        ],
        &MonomialOrder::DegRevLex,
    )?;
    let rem = normal_form(&(&n12 - &display), &trig)?;
    Ok(outcome(
        rem.is_zero(),
        format!(
            "N12 − (μ²−θ²)((s2c1−c2s1)q1 + (c1c2+s1s2)q2) reduces to {rem} modulo the trig ideal"
        ),
    ))
}

fn normal_form_chain() -> Result<Outcome, Box<dyn std::error::Error>> {
    let rep = verify_thm56()?;
    let ring = SymbolicBlockMatrix::general().ring().clone();
    let common = ring.parse(&rep.common_normal_form)? == ring.parse(SECOND_ORDER_CONSTRAINT)?;
    let relation = rep.relation_residual == "0";
    Ok(outcome(
        common && relation && rep.det_formula_holds,
        format!(
            "NF(f2)=NF(f3)=NF(f6)={}; f̂1+f̂4−f̂5 = {}; N12 = f̂1(g1−g4) mod g4+g5",
            rep.common_normal_form, rep.relation_residual
        ),
    ))
}

fn geodesic() -> Result<Outcome, Box<dyn std::error::Error>> {
    let x0 = GeodesicState::<f64>::new(0.5, 0.0, 0.0, 0.3, 1.0, 0.7);
    let p = integrate_geodesic(x0, 10.0, 1e-3)?;
    let c0 = conserved_quantity(x0.s, x0.dmu, x0.dtheta);
    let (mut det, mut cons) = (0.0f64, 0.0f64);
    for (_, n) in p.nodes().ok_or("expected a sampled path")? {
        det = det.max((psi(n[0][0], n[0][1], n[0][2]).det() - 1.0).abs());
        cons = cons.max((conserved_quantity(n[0][0], n[1][1], n[1][2]) - c0).abs());
    }
    let reference = geodesic_endpoint(x0, 10.0, 0.0025)?;
    let err = |h: f64| -> Result<f64, Sl2Error> {
        let e = geodesic_endpoint(x0, 10.0, h)?;
        Ok(((e.s - reference.s).powi(2)
            + (e.mu - reference.mu).powi(2)
            + (e.theta - reference.theta).powi(2))
        .sqrt())
    };
    let ratio = err(0.1)? / err(0.05)?;
    let mut fifth = 0.0f64;
    for i in 0..=1000 {
        fifth = fifth.max(geodesic_residual(&p, 0.01 * i as f64)?);
    }
    Ok(outcome(
        det <= 1e-10 && cons <= 1e-8 && (12.0..=20.0).contains(&ratio) && fifth <= 1e-8,
        format!("det drift {det:.1e}, conserved drift {cons:.1e}, convergence ratio {ratio:.2}, symmetry residual {fifth:.1e}"),
    ))
}

fn kirchhoff_family() -> Result<Outcome, Box<dyn std::error::Error>> {
    use elab_core::fields::{linear, unit_square};
    let v = linear(Mat2::new(1.0, 0.3, -0.2, 0.9), [0.1, -0.1], unit_square());
    let f = elab_core::flows::kirchhoff(0.6, 1.4, v, (0.0, 5.0), &FlowOptions::default())?;
    let times = time_samples((0.0, 5.0), 5);
    let r = euler_residual(&f, [100, 100], &times, PressureSource::Analytic, 1e-10)?;
    let mut div = 0.0f64;
    for t in time_samples((0.0, 5.0), 10_000) {
        div = div.max(eulerian_divergence(&f, t)?);
    }
    Ok(outcome(
        r.pass && div <= 1e-10,
        format!(
            "Euler residual {:.1e} over {} samples, divergence {div:.1e}",
            r.max_abs,
            100 * 100 * times.len()
        ),
    ))
}

fn gerstner_wave() -> Result<Outcome, Box<dyn std::error::Error>> {
    let period = std::f64::consts::TAU;
    let g = gerstner(1.0, (0.0, period), &FlowOptions::default())?;
    let sys = derive_rotation_system(false, false)?;
    let u = g.label_field();
    let mut q = 0.0f64;
    for a in elab_core::fields::GridField::<f64>::nodes_of(g.domain(), 64, 64)? {
        let j = u.jacobian(a)?;
        let x: [f64; 8] = std::array::from_fn(|i| j[i / 2][i % 2]);
        let r = sys.eval(&x);
        q = q.max(r[0].abs()).max(r[1].abs());
    }
    let drift = det_drift(&g, [64, 64], &time_samples((0.0, period), 33), 1e-10)?;
    let curl = n12_report(&g, [64, 64], &[0.0, 1.0, 3.0], 1e-8)?;
    let euler = euler_residual(
        &g,
        [64, 64],
        &[0.0],
        PressureSource::Recover(RecoveryOptions::default()),
        1e-6,
    )?;
    Ok(outcome(
        q <= 1e-12 && drift.pass && curl.pass && euler.pass,
        format!(
            "q residual {q:.1e}, det drift {:.1e}, curl {:.1e}, Euler with recovered p {:.1e}",
            drift.max_abs, curl.max_abs, euler.max_abs
        ),
    ))
}

fn elliptic() -> Result<Outcome, Box<dyn std::error::Error>> {
    let c = gentle_exponential(10.0);
    let (r32, _) = manufactured_elliptic(&c, 32);
    let (r64, _) = manufactured_elliptic(&c, 64);
    let ratio = r32 / r64;
    Ok(outcome(
        r64 <= 1e-6 && (3.0..=5.0).contains(&ratio),
        format!("residual {r64:.2e} on 64×64, refinement ratio {ratio:.2}"),
    ))
}

fn transport() -> Result<Outcome, Box<dyn std::error::Error>> {
    let (u1, u3, init) = transport_inputs();
    let o = FlowOptions::default();
    let res = |n: usize| -> Result<f64, Box<dyn std::error::Error>> {
        let (_, g) = transport_solve(u1.clone(), u3.clone(), init.clone(), [n, n], &o)?;
        Ok(transport_grid_residual(&u1, &u3, &g)?)
    };
    let ratio = res(32)? / res(64)?;
    let f = family3_flow(64);
    let times = time_samples((0.0, 2.0), 9);
    let drift = det_drift(&f, [64, 64], &times, 1e-6)?;
    let n12 = n12_report(&f, [64, 64], &times, 1e-6)?;
    let min_det = drift.metrics["min_abs_det0"];
    Ok(outcome(
        (3.0..=5.0).contains(&ratio) && drift.pass && n12.pass,
        format!(
            "transport ratio {ratio:.2}, det drift {:.1e}, N12 {:.1e} (min |det dφ⁰| = {min_det:.1e}: the flow map has rank one)",
            drift.max_abs, n12.max_abs
        ),
    ))
}

fn printed_typo() -> Result<Outcome, Box<dyn std::error::Error>> {
    let cmp = compare_printed_rotation_system()?;
    let r = jet_ring();
    let differs = !r.parse(&cmp.difference[1])?.is_zero();
    let d = derive_rotation_system(false, false)?;
    let printed = printed_rotation_system();
    let mut derived_max = 0.0f64;
    let dom = elab_core::fields::gerstner_domain(1.0f64);
    for a in elab_core::fields::GridField::<f64>::nodes_of(dom, 16, 16)? {
        let e = a[1].exp();
        let (c, s) = (a[0].cos(), a[0].sin());
        let x = [1.0, 0.0, 0.0, 1.0, e * c, e * s, e * s, -e * c];
        derived_max = derived_max.max(d.eval(&x)[1].abs());
    }
    // At α = (0, −0.1) the printed equation leaves w1_10 = e^{−0.1}.
    let e = (-0.1f64).exp();
    let printed_max = printed[1]
        .eval_f64(&[1.0, 0.0, 0.0, 1.0, e, 0.0, 0.0, -e])
        .abs();
    Ok(outcome(
        differs && derived_max <= 1e-14 && printed_max > 1e-3,
        format!("printed − derived q2 = {}; derived on Gerstner {derived_max:.1e}, printed {printed_max:.2}", cmp.difference[1]),
    ))
}

fn main() {
    let checks: [(&str, Check, Option<Duration>); 10] = [
        ("rigidity", rigidity, Some(Duration::from_secs(60))),
        ("killing", killing, Some(Duration::from_secs(1))),
        (
            "rotation identity",
            rotation_identity,
            Some(Duration::from_secs(10)),
        ),
        (
            "normal-form chain",
            normal_form_chain,
            Some(Duration::from_secs(30)),
        ),
        ("geodesic integrator", geodesic, None),
        ("kirchhoff / family1", kirchhoff_family, None),
        ("gerstner", gerstner_wave, None),
        ("elliptic inverse", elliptic, None),
        ("transport / family3", transport, None),
        ("printed typo", printed_typo, None),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = budget.is_none_or(|b| took <= b);
        let pass = pass && in_time;
        if !pass {
            failures += 1;
        }
        let limit = budget
            .map(|b| format!(" (limit {}s)", b.as_secs()))
            .unwrap_or_default();
        println!(
            "criterion {:>2} {:<20} {} [{:.2}s{limit}] {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        checks.len() - failures,
        checks.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
