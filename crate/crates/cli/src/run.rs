//! The `flow` subcommand: build a flow, check it, export it.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use elab_core::ellsolve::{solve_for_v, EllError, EllipticOptions};
use elab_core::fields::{self, FieldFn, JacobianFn, LabelField};
use elab_core::flows::{
    self, transport_grid_residual, transport_solve, FlowError, FlowOptions, FlowSolution,
    InitialData, Pressure,
};
use elab_core::scalar::Rect;
use elab_core::sl2::{integrate_geodesic, GeodesicState, ScalarCurve};
use elab_core::verify::{
    self, Location, PressureSource, RecoveryOptions, ResidualReport, VerifyError,
};
use num_complex::Complex;
use serde::Serialize;

use crate::config::{Preset, RunConfig};

/// Step of the geodesic integrator behind family1 and family3.
const GEODESIC_STEP: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The configuration cannot produce a flow at all.
    #[error("{0}")]
    Rejected(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything written to `report.json`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub preset: String,
    pub description: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Vec<ResidualReport>,
}

fn failed(preset: &str, err: impl ToString) -> RunReport {
    RunReport {
        preset: preset.to_string(),
        description: String::new(),
        pass: false,
        error: Some(err.to_string()),
        reports: Vec::new(),
    }
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Gerstner => "gerstner",
        Preset::Kirchhoff => "kirchhoff",
        Preset::Family1 => "family1",
        Preset::Family2 => "family2",
        Preset::Family3 => "family3",
        Preset::EllipticInverse => "elliptic-inverse",
    }
}

/// Constructor errors that say the input is malformed, as opposed to a
/// flow that fails its own validation.
fn is_usage_error(e: &FlowError) -> bool {
    matches!(e, FlowError::EqualSpeeds | FlowError::Invalid(_))
}

/// Evenly spread subset of `times`, always keeping both ends.
fn pick(times: &[f64], n: usize) -> Vec<f64> {
    if times.len() <= n {
        return times.to_vec();
    }
    if n == 1 {
        return vec![times[0]];
    }
    (0..n)
        .map(|i| times[i * (times.len() - 1) / (n - 1)])
        .collect()
}

fn default_span(c: &RunConfig) -> (f64, f64, f64) {
    match c.preset {
        Preset::Gerstner => {
            let period = std::f64::consts::TAU / c.k.abs().max(f64::MIN_POSITIVE);
            (0.0, period / 64.0, period)
        }
        Preset::Family2 => {
            let period = std::f64::consts::TAU / (c.mu - c.theta).abs().max(1e-3);
            (0.0, period / 64.0, period)
        }
        Preset::Family3 => (0.0, 0.05, 2.0),
        _ => (0.0, 0.05, 5.0),
    }
}

fn build(c: &RunConfig, times: &[f64]) -> Result<FlowSolution<f64>, FlowError> {
    let span = (times[0], *times.last().expect("non-empty times"));
    let opts = FlowOptions {
        grid: c.grid,
        ..FlowOptions::default()
    };
    let x0 = GeodesicState::new(c.x0[0], c.x0[1], c.x0[2], c.x0[3], c.x0[4], c.x0[5]);
    match c.preset {
        Preset::Gerstner => flows::gerstner(c.k, span, &opts),
        Preset::Kirchhoff => flows::kirchhoff(
            c.s0,
            c.mu0,
            fields::identity(fields::unit_square()),
            span,
            &opts,
        ),
        Preset::Family1 => {
            if span.0 != 0.0 {
                return Err(FlowError::Invalid("family1 runs start at t = 0".into()));
            }
            let path = integrate_geodesic(x0, span.1, GEODESIC_STEP)?;
            flows::family1(path, fields::identity(fields::unit_square()), &opts)
        }
        Preset::Family2 => {
            let poly = c.poly.clone().unwrap_or_else(default_poly);
            let (v, w) = fields::cr_pair_from_polynomial(&poly, fields::unit_square())?;
            flows::family2(c.mu, c.theta, v, w, c.reflect[0], c.reflect[1], span, &opts)
        }
        Preset::Family3 => {
            if span.0 != 0.0 {
                return Err(FlowError::Invalid("family3 runs start at t = 0".into()));
            }
            let (u1, u3, init) = transport_example();
            let path = integrate_geodesic(x0, span.1, GEODESIC_STEP)?;
            let zero: ScalarCurve<f64> = Arc::new(|_| [0.0; 3]);
            flows::family3(path, zero, u1, u3, init, &opts)
        }
        Preset::EllipticInverse => unreachable!("handled separately"),
    }
}

fn default_poly() -> Vec<Complex<f64>> {
    vec![
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.3),
        Complex::new(0.2, -0.1),
    ]
}

/// Taylor polynomial of `10 (e^{z/10} − 1)` up to degree five.
fn gentle_exponential() -> Vec<Complex<f64>> {
    let mut c = vec![Complex::new(0.0, 0.0)];
    let mut fact = 1.0;
    for k in 1..=5 {
        fact *= k as f64;
        c.push(Complex::new(10f64.powi(1 - k) / fact, 0.0));
    }
    c
}

fn scalar_field(
    name: &str,
    domain: Rect<f64>,
    f: impl Fn(f64, f64) -> (f64, [f64; 2]) + Send + Sync + Clone + 'static,
) -> LabelField<f64> {
    let g = f.clone();
    let eval: FieldFn<f64> = Arc::new(move |a| [f(a[0], a[1]).0, 0.0, 0.0, 0.0]);
    let jac: JacobianFn<f64> = Arc::new(move |a| [g(a[0], a[1]).1, [0.0; 2], [0.0; 2], [0.0; 2]]);
    LabelField::from_closure(name, 2, domain, eval, Some(jac)).expect("valid scalar field")
}

/// `u1 = α2 + 0.3 sin α1`, `u3 = α1 e^{−0.3 α2}` on the unit square, with
/// `u2`, `u4` prescribed on the bottom edge.
fn transport_example() -> (LabelField<f64>, LabelField<f64>, InitialData<f64>) {
    let d = fields::unit_square();
    let u1 = scalar_field("u1", d, |x, y| (y + 0.3 * x.sin(), [0.3 * x.cos(), 1.0]));
    let u3 = scalar_field("u3", d, |x, y| {
        let e = (-0.3 * y).exp();
        (x * e, [e, -0.3 * x * e])
    });
    let u2: ScalarCurve<f64> = Arc::new(|s| [0.5 * s + 0.2, 0.5, 0.0]);
    let u4: ScalarCurve<f64> = Arc::new(|s| [1.0 + s * s, 2.0 * s, 2.0]);
    (u1, u3, InitialData::bottom_edge(&d, u2, u4))
}

fn checks(
    f: &FlowSolution<f64>,
    c: &RunConfig,
    times: &[f64],
) -> Result<Vec<ResidualReport>, VerifyError> {
    let sparse = pick(times, c.check_times);
    let mut out = vec![verify::det_drift(f, c.grid, times, c.tol_det)?];
    out.push(verify::n12_report(f, c.grid, &sparse, c.tol_curl)?);
    match c.preset {
        Preset::Family3 => {}
        _ if matches!(f.pressure_model(), Pressure::Analytic(_)) => {
            out.push(verify::euler_residual(
                f,
                c.grid,
                &sparse,
                PressureSource::Analytic,
                c.tol_euler,
            )?);
        }
        _ => {
            // Path-integrated pressure is costly; check the two ends only.
            let ends = pick(times, 2);
            let o = RecoveryOptions {
                curl_tol: c.tol_curl,
                ..RecoveryOptions::default()
            };
            out.push(
                match verify::euler_residual(
                    f,
                    c.grid,
                    &ends,
                    PressureSource::Recover(o),
                    c.tol_euler,
                ) {
                    Ok(r) => r,
                    Err(VerifyError::CurlTooLarge { curl, t, .. }) => ResidualReport::new(
                        "pressure_curl",
                        curl,
                        Location { t, alpha: [0.0; 2] },
                        c.tol_curl,
                    ),
                    Err(e) => return Err(e),
                },
            );
        }
    }
    if matches!(c.preset, Preset::Kirchhoff | Preset::Family1) {
        let (mut worst, mut at) = (0.0f64, times[0]);
        for &t in times {
            let d = verify::eulerian_divergence(f, t)?;
            if !(d <= worst) {
                (worst, at) = (d, t);
            }
        }
        out.push(ResidualReport::new(
            "eulerian_divergence",
            worst,
            Location {
                t: at,
                alpha: [0.0; 2],
            },
            c.tol_det,
        ));
    }
    Ok(out)
}

fn write_flow(
    f: &FlowSolution<f64>,
    c: &RunConfig,
    times: &[f64],
    dir: &Path,
) -> Result<(), RunError> {
    let d = f.domain();
    let labels = fields::GridField::<f64>::nodes_of(d, c.labels[0], c.labels[1])
        .map_err(|e| RunError::Rejected(e.to_string()))?;
    let mut buf = Vec::new();
    f.write_trajectories(&mut buf, &labels, times)
        .map_err(|e| RunError::Rejected(e.to_string()))?;
    fs::write(dir.join("trajectories.csv"), buf)?;
    let grid = f
        .label_field()
        .sample(c.grid[0], c.grid[1])
        .map_err(|e| RunError::Rejected(e.to_string()))?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)
        .map_err(|e| RunError::Rejected(e.to_string()))?;
    fs::write(dir.join("field.csv"), buf)?;
    Ok(())
}

fn run_elliptic(c: &RunConfig) -> Result<(RunReport, Option<fields::GridField<f64>>), RunError> {
    let poly = c.poly.clone().unwrap_or_else(gentle_exponential);
    let (v, w) = fields::cr_pair_from_polynomial(&poly, fields::unit_square())
        .map_err(|e| RunError::Rejected(e.to_string()))?;
    let d = w.domain();
    let gauge = v
        .value(d.min)
        .map_err(|e| RunError::Rejected(e.to_string()))?[1];
    let opts = EllipticOptions {
        gauge,
        reflections: c.reflect,
        ..EllipticOptions::default()
    };
    let name = "elliptic-inverse";
    let bc = {
        let v = v.clone();
        move |a: [f64; 2]| v.value(a).map(|x| x[0]).unwrap_or(f64::NAN)
    };
    match solve_for_v(&w, c.grid, bc, &opts) {
        Ok(s) => {
            let mut err = 0.0f64;
            for j in 0..c.grid[1] {
                for i in 0..c.grid[0] {
                    let exact = v
                        .value(s.v.node(i, j))
                        .map_err(|e| RunError::Rejected(e.to_string()))?;
                    let got = s.v.at(i, j);
                    err = err
                        .max((exact[0] - got[0]).abs())
                        .max((exact[1] - got[1]).abs());
                }
            }
            let mut r = ResidualReport::new(
                "elliptic_residual",
                s.residual,
                Location {
                    t: 0.0,
                    alpha: d.min,
                },
                c.tol_residual.unwrap_or(1e-6),
            );
            r.grid = Some(c.grid);
            r.metrics.insert("max_error".into(), err);
            r.metrics
                .insert("solver_residual".into(), s.solver_residual);
            let report = RunReport {
                preset: name.into(),
                description: format!(
                    "least-squares recovery of v from w on a {}x{} grid",
                    c.grid[0], c.grid[1]
                ),
                pass: r.pass,
                error: None,
                reports: vec![r],
            };
            Ok((report, Some(s.v)))
        }
        Err(e @ (EllError::Invalid(_) | EllError::Field(_))) => {
            Err(RunError::Rejected(e.to_string()))
        }
        Err(e) => Ok((failed(name, e), None)),
    }
}

/// Runs the configured preset. Writes outputs when `c.out` is set and
/// returns the report; `Err` means the configuration itself was unusable.
pub fn run(c: &RunConfig) -> Result<RunReport, RunError> {
    let name = preset_name(c.preset);
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)?;
    }
    let report = if c.preset == Preset::EllipticInverse {
        let (report, v) = run_elliptic(c)?;
        if let (Some(dir), Some(v)) = (&c.out, v) {
            let mut buf = Vec::new();
            v.write_csv(&mut buf)
                .map_err(|e| RunError::Rejected(e.to_string()))?;
            fs::write(dir.join("field.csv"), buf)?;
        }
        report
    } else {
        if c.preset == Preset::Gerstner && c.k == 0.0 {
            return Err(RunError::Rejected("wave number k must be nonzero".into()));
        }
        let times = c.times(default_span(c));
        if times.len() < 2 {
            return Err(RunError::Rejected("need at least two sample times".into()));
        }
        match build(c, &times) {
            Err(e) if is_usage_error(&e) => return Err(RunError::Rejected(e.to_string())),
            Err(e) => failed(name, e),
            Ok(f) => {
                let mut report = match checks(&f, c, &times) {
                    Ok(reports) => RunReport {
                        preset: name.into(),
                        description: f.description.clone(),
                        pass: reports.iter().all(|r| r.pass),
                        error: None,
                        reports,
                    },
                    Err(e) => failed(name, e),
                };
                report.description = f.description.clone();
                if c.preset == Preset::Family3 {
                    transport_check(c, &mut report);
                }
                if let Some(dir) = &c.out {
                    write_flow(&f, c, &times, dir)?;
                }
                report
            }
        }
    };
    if let Some(dir) = &c.out {
        let mut file = fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut file, &report).map_err(std::io::Error::other)?;
        writeln!(file)?;
    }
    Ok(report)
}

/// Discrete residual of the transport equations on the flow grid.
fn transport_check(c: &RunConfig, report: &mut RunReport) {
    let (u1, u3, init) = transport_example();
    let opts = FlowOptions {
        grid: c.grid,
        ..FlowOptions::default()
    };
    let r = transport_solve(u1.clone(), u3.clone(), init, c.grid, &opts)
        .and_then(|(_, g)| transport_grid_residual(&u1, &u3, &g));
    match r {
        Ok(x) => {
            let mut r = ResidualReport::new(
                "transport_residual",
                x,
                Location {
                    t: 0.0,
                    alpha: [0.0; 2],
                },
                c.tol_residual.unwrap_or(1e-3),
            );
            r.grid = Some(c.grid);
            report.pass &= r.pass;
            report.reports.push(r);
        }
        Err(e) => {
            report.pass = false;
            report.error = Some(e.to_string());
        }
    }
}
