//! Numerical checks of the Lagrangian Euler equations for a [`FlowSolution`]:
//! momentum residual, determinant drift, the curl `N12` of `(dφ)ᵀφ''`,
//! pressure recovery by path integration and Eulerian divergence.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, FieldFn, GridField, LabelField};
use crate::flows::{FlowError, FlowKind, FlowSolution};
use crate::scalar::{Rect, Scalar};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no pressure available for this flow; recover it first")]
    MissingPressure,
    #[error("curl certificate {curl:e} exceeds {tol:e} at t = {t}")]
    CurlTooLarge { t: f64, curl: f64, tol: f64 },
    #[error("check needs a {expected:?} flow")]
    WrongKind { expected: FlowKind },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub t: f64,
    pub alpha: [f64; 2],
}

/// Outcome of one check: worst residual, where it occurred, and whether it
/// is within tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    pub max_abs: f64,
    pub at: Location,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default)]
    pub times: usize,
    /// Extra diagnostics, e.g. `min_abs_det0` for the determinant check.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl ResidualReport {
    pub fn new(check: &str, max_abs: f64, at: Location, tol: f64) -> Self {
        ResidualReport {
            check: check.to_string(),
            max_abs,
            at,
            tol,
            pass: max_abs <= tol,
            grid: None,
            times: 0,
            metrics: BTreeMap::new(),
        }
    }

    fn with_grid(mut self, grid: [usize; 2], times: usize) -> Self {
        self.grid = Some(grid);
        self.times = times;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

impl std::fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<22} {} max {:.3e} (tol {:.1e}) at t = {:.4}, α = ({:.4}, {:.4})",
            self.check,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_abs,
            self.tol,
            self.at.t,
            self.at.alpha[0],
            self.at.alpha[1]
        )
    }
}

/// Worst sample of `values`, NaN counting as worst.
fn worst<T: Scalar>(samples: Vec<(T, [T; 2], f64)>) -> (f64, Location) {
    let mut best = (
        f64::NEG_INFINITY,
        Location {
            t: 0.0,
            alpha: [0.0; 2],
        },
    );
    for (t, a, r) in samples {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > best.0 {
            best = (
                r,
                Location {
                    t: t.as_f64(),
                    alpha: [a[0].as_f64(), a[1].as_f64()],
                },
            );
        }
    }
    if best.0 == f64::NEG_INFINITY {
        best.0 = 0.0;
    }
    best
}

fn nodes<T: Scalar>(f: &FlowSolution<T>, grid: [usize; 2]) -> Result<Vec<[T; 2]>, VerifyError> {
    Ok(GridField::<T>::nodes_of(f.domain(), grid[0], grid[1])?)
}

/// `α`-step for differenced checks: `1e−3` of the domain diameter.
pub fn default_alpha_step<T: Scalar>(d: &Rect<T>) -> T {
    T::lit(1e-3) * d.diameter()
}

/// Where the pressure gradient comes from.
pub enum PressureSource<'a, T> {
    /// The flow's closed-form pressure.
    Analytic,
    /// Recovered by path integration at every requested time.
    Recover(RecoveryOptions),
    /// Caller-supplied `∇_α p(t, α)`.
    Gradient(&'a (dyn Fn(T, [T; 2]) -> [T; 2] + Sync)),
}

/// `max ‖(dφ)ᵀφ'' + ∇p‖` over grid nodes and times.
pub fn euler_residual<T: Scalar>(
    f: &FlowSolution<T>,
    grid: [usize; 2],
    times: &[T],
    source: PressureSource<'_, T>,
    tol: f64,
) -> Result<ResidualReport, VerifyError> {
    let pts = nodes(f, grid)?;
    let mut samples = Vec::with_capacity(pts.len() * times.len());
    for &t in times {
        let recovered = match &source {
            PressureSource::Recover(o) => Some(RecoveredPressure::new(f, t, o)?),
            _ => None,
        };
        let res: Vec<Result<(T, [T; 2], f64), VerifyError>> = pts
            .par_iter()
            .map(|&a| {
                let y = f.acceleration_term(t, a)?;
                let g = match (&source, &recovered) {
                    (PressureSource::Analytic, _) => match f.pressure_gradient(t, a) {
                        Some(g) => g?,
                        None => return Err(VerifyError::MissingPressure),
                    },
                    (PressureSource::Gradient(gf), _) => gf(t, a),
                    (PressureSource::Recover(_), Some(p)) => p.gradient(a)?,
                    (PressureSource::Recover(_), None) => unreachable!(),
                };
                let r = (y[0] + g[0]).hypot(y[1] + g[1]);
                Ok((t, a, r.as_f64()))
            })
            .collect();
        for r in res {
            samples.push(r?);
        }
    }
    let (m, at) = worst(samples);
    Ok(ResidualReport::new("euler_residual", m, at, tol).with_grid(grid, times.len()))
}

/// `max |det dφ^t − det dφ⁰|` over grid nodes and times; `min_abs_det0` in
/// the metrics flags degenerate flows.
pub fn det_drift<T: Scalar>(
    f: &FlowSolution<T>,
    grid: [usize; 2],
    times: &[T],
    tol: f64,
) -> Result<ResidualReport, VerifyError> {
    let t0 = times.first().copied().unwrap_or(f.time_span().0);
    let pts = nodes(f, grid)?;
    let per_node: Vec<Result<(Vec<(T, [T; 2], f64)>, f64), VerifyError>> = pts
        .par_iter()
        .map(|&a| {
            let d0 = f.jacobian(t0, a)?.det();
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                let d = f.jacobian(t, a)?.det();
                out.push((t, a, (d - d0).abs().as_f64()));
            }
            Ok((out, d0.abs().as_f64()))
        })
        .collect();
    let mut samples = Vec::new();
    let mut min_det = f64::INFINITY;
    for r in per_node {
        let (s, d0) = r?;
        samples.extend(s);
        min_det = min_det.min(d0);
    }
    let (m, at) = worst(samples);
    let mut rep = ResidualReport::new("det_drift", m, at, tol).with_grid(grid, times.len());
    rep.metrics.insert("min_abs_det0".into(), min_det);
    Ok(rep)
}

/// The covector field `α ↦ (dφ)ᵀφ''` at time `t` as a planar field whose
/// Jacobian is differenced at step `h`.
pub fn acceleration_field<T: Scalar>(
    f: &FlowSolution<T>,
    t: T,
    h: T,
) -> Result<LabelField<T>, VerifyError> {
    let g = f.clone();
    let eval: FieldFn<T> = Arc::new(move |a| match g.acceleration_term(t, a) {
        Ok(y) => [y[0], y[1], T::zero(), T::zero()],
        Err(_) => [T::nan(); 4],
    });
    Ok(
        LabelField::from_closure("acceleration", 2, f.domain(), eval, None)?
            .with_finite_differences(h),
    )
}

/// Discrete curl `∂1 y2 − ∂2 y1` at each grid node (fourth-order differences
/// at step `h`, one-sided near edges).
pub fn n12_field<T: Scalar>(
    f: &FlowSolution<T>,
    grid: [usize; 2],
    t: T,
    h: T,
) -> Result<Vec<([T; 2], T)>, VerifyError> {
    let y = acceleration_field(f, t, h)?;
    let pts = nodes(f, grid)?;
    let res: Vec<Result<([T; 2], T), VerifyError>> = pts
        .par_iter()
        .map(|&a| {
            let j = y.jacobian(a)?;
            Ok((a, j[1][0] - j[0][1]))
        })
        .collect();
    res.into_iter().collect()
}

/// `max |N12|` over the grid at time `t`, with the default `α`-step.
pub fn n12_numeric<T: Scalar>(
    f: &FlowSolution<T>,
    grid: [usize; 2],
    t: T,
) -> Result<T, VerifyError> {
    Ok(T::lit(n12_report(f, grid, &[t], f64::INFINITY)?.max_abs))
}

/// [`n12_numeric`] over several times as a report.
pub fn n12_report<T: Scalar>(
    f: &FlowSolution<T>,
    grid: [usize; 2],
    times: &[T],
    tol: f64,
) -> Result<ResidualReport, VerifyError> {
    let h = default_alpha_step(&f.domain());
    let mut samples = Vec::new();
    for &t in times {
        for (a, c) in n12_field(f, grid, t, h)? {
            samples.push((t, a, c.abs().as_f64()));
        }
    }
    let (m, at) = worst(samples);
    Ok(ResidualReport::new("n12_numeric", m, at, tol).with_grid(grid, times.len()))
}

/// Settings for pressure recovery.
#[derive(Clone, Copy, Debug)]
pub struct RecoveryOptions {
    /// Gauss–Legendre panels per path leg.
    pub panels: usize,
    /// Grid used for the curl certificate.
    pub certificate_grid: [usize; 2],
    /// Largest admissible curl.
    pub curl_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            panels: 8,
            certificate_grid: [33, 33],
            curl_tol: 1e-6,
        }
    }
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Pressure at time `t` defined by integrating `−(dφ)ᵀφ''` from the
/// lower-left corner, first along `α1` and then along `α2`.
#[derive(Clone)]
pub struct RecoveredPressure<T> {
    flow: FlowSolution<T>,
    pub t: T,
    panels: usize,
    /// Curl certificate (max `|N12|`) that licenses path independence.
    pub certificate: ResidualReport,
}

impl<T: Scalar> RecoveredPressure<T> {
    pub fn new(f: &FlowSolution<T>, t: T, o: &RecoveryOptions) -> Result<Self, VerifyError> {
        let certificate = n12_report(f, o.certificate_grid, &[t], o.curl_tol)?;
        if !certificate.pass {
            return Err(VerifyError::CurlTooLarge {
                t: t.as_f64(),
                curl: certificate.max_abs,
                tol: o.curl_tol,
            });
        }
        Ok(RecoveredPressure {
            flow: f.clone(),
            t,
            panels: o.panels.max(1),
            certificate,
        })
    }

    fn leg(&self, from: [T; 2], axis: usize, to: T) -> Result<T, VerifyError> {
        let len = to - from[axis];
        if len == T::zero() {
            return Ok(T::zero());
        }
        let w = len / T::of_usize(self.panels);
        let half = T::lit(0.5);
        let mut sum = T::zero();
        for k in 0..self.panels {
            let mid = from[axis] + w * (T::of_usize(k) + half);
            for &(x, wt) in &GL8 {
                let mut p = from;
                p[axis] = mid + half * w * T::lit(x);
                sum = sum + T::lit(wt) * self.flow.acceleration_term(self.t, p)?[axis];
            }
        }
        Ok(-sum * half * w)
    }

    pub fn value(&self, a: [T; 2]) -> Result<T, VerifyError> {
        let o = self.flow.domain().min;
        let p1 = self.leg(o, 0, a[0])?;
        let p2 = self.leg([a[0], o[1]], 1, a[1])?;
        Ok(p1 + p2)
    }

    /// Fourth-order differenced gradient at the default `α`-step.
    pub fn gradient(&self, a: [T; 2]) -> Result<[T; 2], VerifyError> {
        let me = self.clone();
        let eval: FieldFn<T> = Arc::new(move |x| {
            [
                me.value(x).unwrap_or(T::nan()),
                T::zero(),
                T::zero(),
                T::zero(),
            ]
        });
        let d = self.flow.domain();
        let field = LabelField::from_closure("pressure", 2, d, eval, None)?
            .with_finite_differences(default_alpha_step(&d));
        Ok(field.jacobian(a)?[0])
    }

    /// Values on an `n1 × n2` grid over the flow domain.
    pub fn sample(&self, grid: [usize; 2]) -> Result<GridField<T>, VerifyError> {
        let d = self.flow.domain();
        let pts = GridField::<T>::nodes_of(d, grid[0], grid[1])?;
        let vals: Vec<Result<[T; 4], VerifyError>> = pts
            .par_iter()
            .map(|&a| Ok([self.value(a)?, T::zero(), T::zero(), T::zero()]))
            .collect();
        let vals: Result<Vec<_>, _> = vals.into_iter().collect();
        Ok(GridField::new(d, grid, 2, vals?)?)
    }
}

/// Pressure on the grid at time `t`, zero at the lower-left corner.
pub fn pressure_recover<T: Scalar>(
    f: &FlowSolution<T>,
    grid: [usize; 2],
    t: T,
) -> Result<GridField<T>, VerifyError> {
    RecoveredPressure::new(f, t, &RecoveryOptions::default())?.sample(grid)
}

/// `|trace(A'A⁻¹)|` for an affine flow.
pub fn eulerian_divergence<T: Scalar>(f: &FlowSolution<T>, t: T) -> Result<T, VerifyError> {
    if f.kind != FlowKind::Family1 {
        return Err(VerifyError::WrongKind {
            expected: FlowKind::Family1,
        });
    }
    Ok(f.eulerian_velocity_matrix(t)?.trace().abs())
}

/// `n` equally spaced times covering `[t0, t1]`.
pub fn time_samples<T: Scalar>(span: (T, T), n: usize) -> Vec<T> {
    let n = n.max(2);
    (0..n)
        .map(|i| span.0 + (span.1 - span.0) * T::of_usize(i) / T::of_usize(n - 1))
        .collect()
}
