//! The three solution families `φ(t, α) = A(t) u(α)` and classical instances.
//!
//! Every family is stored uniformly as a 2×4 time matrix acting on a
//! four-component label field; the affine family pads `A` with a zero block
//! and `u = (v | 0)`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::fields::{FieldError, FieldFn, GridField, JacobianFn, LabelField};
use crate::scalar::{Rect, Scalar};
use crate::sl2::{
    geodesic_residual, psi_derivatives, reflection, rotation, symmetry_residual, Mat2, Mat24,
    SL2Path, ScalarCurve, SecondDerivative, Sl2Error,
};
use crate::symflow::{derive_rotation_system, DerivedSystem, SymflowError};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("AᵀA'' not symmetric at t = {t}: residual {residual:e}")]
    SymmetryViolated { t: f64, residual: f64 },
    #[error("label field degenerate at {alpha:?}: det = {det:e}")]
    DegenerateLabelField { alpha: [f64; 2], det: f64 },
    #[error("derived system residual {residual:e} > {tol:e} at {alpha:?}")]
    SystemResidualTooLarge {
        alpha: [f64; 2],
        residual: f64,
        tol: f64,
    },
    #[error("det(dv) + det(dw) = {value:e} at {alpha:?}")]
    DegeneratePair { alpha: [f64; 2], value: f64 },
    #[error("the two rotation speeds coincide")]
    EqualSpeeds,
    #[error("a24 = a22 - a21 vanishes near t = {t}")]
    A24Vanishes { t: f64 },
    #[error("geodesic residual {residual:e} at t = {t}")]
    GeodesicResidualTooLarge { t: f64, residual: f64 },
    #[error("grad u3 vanishes at {alpha:?}")]
    StagnationPoint { alpha: [f64; 2] },
    #[error("level curve of u3 tangent to the initial line near {alpha:?}")]
    CharacteristicTangency { alpha: [f64; 2] },
    #[error(
        "{count} characteristics leave the domain before the initial line, first from {first:?}"
    )]
    CharacteristicExitsDomain { count: usize, first: [f64; 2] },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sl2(#[from] Sl2Error),
    #[error(transparent)]
    Symflow(#[from] SymflowError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn pt<T: Scalar>(a: [T; 2]) -> [f64; 2] {
    [a[0].as_f64(), a[1].as_f64()]
}

/// `A(t), A'(t), A''(t)` for a 2×4 time matrix.
pub trait TimeMatrix<T: Scalar>: Send + Sync {
    fn eval(&self, t: T) -> Result<[Mat24<T>; 3], FlowError>;
}

/// `(Â | 0)` from an SL(2) path.
struct Embedded<T>(SL2Path<T>);

impl<T: Scalar> TimeMatrix<T> for Embedded<T> {
    fn eval(&self, t: T) -> Result<[Mat24<T>; 3], FlowError> {
        let d = self.0.derivatives(t)?;
        let z = Mat2::zero();
        Ok([
            Mat24::from_blocks(&d[0], &z),
            Mat24::from_blocks(&d[1], &z),
            Mat24::from_blocks(&d[2], &z),
        ])
    }
}

/// Rotation (or reflection) of angle `ω t` with its exact time derivatives.
pub fn rotating_block<T: Scalar>(omega: T, reflect: bool, t: T) -> [Mat2<T>; 3] {
    let ang = omega * t;
    let m = if reflect {
        reflection(ang)
    } else {
        rotation(ang)
    };
    let (s, c) = ang.sin_cos();
    let dm = if reflect {
        Mat2::new(-s, c, c, s)
    } else {
        Mat2::new(-s, -c, c, -s)
    };
    [m, dm.scale(omega), m.scale(-omega * omega)]
}

struct RotationPair<T> {
    speeds: [T; 2],
    reflect: [bool; 2],
}

impl<T: Scalar> TimeMatrix<T> for RotationPair<T> {
    fn eval(&self, t: T) -> Result<[Mat24<T>; 3], FlowError> {
        let a = rotating_block(self.speeds[0], self.reflect[0], t);
        let b = rotating_block(self.speeds[1], self.reflect[1], t);
        Ok(std::array::from_fn(|i| Mat24::from_blocks(&a[i], &b[i])))
    }
}

/// The constrained general matrix: `Â` in the first block,
/// `a14 = a12 − a11`, `a24 = a22 − a21`, caller-chosen `a23` and
/// `a13 = (1 + a14 a23) / a24`.
pub struct ConstrainedMatrix<T> {
    pub ahat: SL2Path<T>,
    pub a23: ScalarCurve<T>,
}

impl<T: Scalar> TimeMatrix<T> for ConstrainedMatrix<T> {
    fn eval(&self, t: T) -> Result<[Mat24<T>; 3], FlowError> {
        let d = self.ahat.derivatives(t)?;
        let e = |k: usize, i: usize, j: usize| d[k].m[i][j];
        let a14: [T; 3] = std::array::from_fn(|k| e(k, 0, 1) - e(k, 0, 0));
        let a24: [T; 3] = std::array::from_fn(|k| e(k, 1, 1) - e(k, 1, 0));
        let a23 = (self.a23)(t);
        let two = T::lit(2.0);
        let n = [
            T::one() + a14[0] * a23[0],
            a14[1] * a23[0] + a14[0] * a23[1],
            a14[2] * a23[0] + two * a14[1] * a23[1] + a14[0] * a23[2],
        ];
        let dd = a24;
        if dd[0].abs() < T::lit(1e-10) {
            return Err(FlowError::A24Vanishes { t: t.as_f64() });
        }
        let a13 = [
            n[0] / dd[0],
            (n[1] * dd[0] - n[0] * dd[1]) / (dd[0] * dd[0]),
            n[2] / dd[0] - two * n[1] * dd[1] / (dd[0] * dd[0]) - n[0] * dd[2] / (dd[0] * dd[0])
                + two * n[0] * dd[1] * dd[1] / (dd[0] * dd[0] * dd[0]),
        ];
        Ok(std::array::from_fn(|k| Mat24 {
            m: [
                [e(k, 0, 0), e(k, 0, 1), a13[k], a14[k]],
                [e(k, 1, 0), e(k, 1, 1), a23[k], a24[k]],
            ],
        }))
    }
}

/// Which construction produced a flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Family1,
    Family2,
    Family3,
}

/// Closed-form pressure with its label gradient.
#[derive(Clone)]
pub struct AnalyticPressure<T> {
    pub value: Arc<dyn Fn(T, [T; 2]) -> Result<T, FlowError> + Send + Sync>,
    pub gradient: Arc<dyn Fn(T, [T; 2]) -> Result<[T; 2], FlowError> + Send + Sync>,
}

#[derive(Clone)]
pub enum Pressure<T> {
    Analytic(AnalyticPressure<T>),
    /// Exists but must be recovered numerically.
    Recoverable,
}

/// Knobs for the validation done by the constructors.
#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    /// Label grid used for the pointwise checks.
    pub grid: [usize; 2],
    /// Number of time samples for checks of the time data.
    pub time_samples: usize,
    /// Relative tolerance on the derived-system residual (scaled by the jets).
    pub system_tol: f64,
    /// Minimum `|sin|` between level curves of `u3` and the initial line.
    pub transversality: f64,
    /// Fixed number of RK4 steps per characteristic.
    pub trace_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            grid: [33, 33],
            time_samples: 101,
            system_tol: 1e-8,
            transversality: 0.05,
            trace_steps: 16,
        }
    }
}

/// `φ(t, α) = A(t) u(α)` with its pressure.
#[derive(Clone)]
pub struct FlowSolution<T> {
    pub kind: FlowKind,
    time: Arc<dyn TimeMatrix<T>>,
    u: LabelField<T>,
    pressure: Pressure<T>,
    span: (T, T),
    pub description: String,
    transport: Option<Arc<TransportSolution<T>>>,
}

impl<T: Scalar> std::fmt::Debug for FlowSolution<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FlowSolution[{:?}: {}]", self.kind, self.description)
    }
}

impl<T: Scalar> FlowSolution<T> {
    /// Assembles a flow from parts without any validation; `u` must have
    /// four components.
    pub fn custom(
        kind: FlowKind,
        time: Arc<dyn TimeMatrix<T>>,
        u: LabelField<T>,
        pressure: Pressure<T>,
        span: (T, T),
        description: &str,
    ) -> Result<Self, FlowError> {
        let u = if u.dim() == 2 { pad_planar(&u)? } else { u };
        Ok(FlowSolution {
            kind,
            time,
            u,
            pressure,
            span,
            description: description.to_string(),
            transport: None,
        })
    }

    pub fn domain(&self) -> Rect<T> {
        self.u.domain()
    }

    pub fn time_span(&self) -> (T, T) {
        self.span
    }

    /// Label field `u` (four components).
    pub fn label_field(&self) -> &LabelField<T> {
        &self.u
    }

    pub fn pressure_model(&self) -> &Pressure<T> {
        &self.pressure
    }

    pub fn transport(&self) -> Option<&TransportSolution<T>> {
        self.transport.as_deref()
    }

    pub fn time_matrix(&self, t: T) -> Result<[Mat24<T>; 3], FlowError> {
        self.time.eval(t)
    }

    pub fn position(&self, t: T, a: [T; 2]) -> Result<[T; 2], FlowError> {
        Ok(self.time.eval(t)?[0].apply(self.u.value(a)?))
    }

    /// `φ, φ', φ''` at `(t, α)`.
    pub fn kinematics(&self, t: T, a: [T; 2]) -> Result<[[T; 2]; 3], FlowError> {
        let m = self.time.eval(t)?;
        let u = self.u.value(a)?;
        Ok([m[0].apply(u), m[1].apply(u), m[2].apply(u)])
    }

    /// `dφ = A du`.
    pub fn jacobian(&self, t: T, a: [T; 2]) -> Result<Mat2<T>, FlowError> {
        let m = self.time.eval(t)?[0];
        Ok(apply_to_jacobian(&m, &self.u.jacobian(a)?))
    }

    /// `(dφ)ᵀ φ''`, the acceleration term of the Lagrangian Euler equations.
    pub fn acceleration_term(&self, t: T, a: [T; 2]) -> Result<[T; 2], FlowError> {
        let m = self.time.eval(t)?;
        let u = self.u.value(a)?;
        let du = self.u.jacobian(a)?;
        let dphi = apply_to_jacobian(&m[0], &du);
        let acc = m[2].apply(u);
        Ok(dphi.transpose().apply(acc))
    }

    pub fn pressure(&self, t: T, a: [T; 2]) -> Option<Result<T, FlowError>> {
        match &self.pressure {
            Pressure::Analytic(p) => Some((p.value)(t, a)),
            Pressure::Recoverable => None,
        }
    }

    pub fn pressure_gradient(&self, t: T, a: [T; 2]) -> Option<Result<[T; 2], FlowError>> {
        match &self.pressure {
            Pressure::Analytic(p) => Some((p.gradient)(t, a)),
            Pressure::Recoverable => None,
        }
    }

    /// Eulerian velocity matrix `A'A⁻¹` of the affine family.
    pub fn eulerian_velocity_matrix(&self, t: T) -> Result<Mat2<T>, FlowError> {
        if self.kind != FlowKind::Family1 {
            return Err(FlowError::Invalid(
                "Eulerian velocity is linear only for family1".into(),
            ));
        }
        let m = self.time.eval(t)?;
        let a = m[0].block(0);
        let inv = a
            .inverse()
            .ok_or_else(|| FlowError::Invalid("singular A".into()))?;
        Ok(m[1].block(0).mul(&inv))
    }

    /// Writes `t,alpha1,alpha2,x1,x2[,p]` for every label and time.
    pub fn write_trajectories<W: Write>(
        &self,
        w: &mut W,
        labels: &[[T; 2]],
        times: &[T],
    ) -> Result<(), FlowError> {
        let with_p = matches!(self.pressure, Pressure::Analytic(_));
        writeln!(w, "t,alpha1,alpha2,x1,x2{}", if with_p { ",p" } else { "" })?;
        for &t in times {
            for &a in labels {
                let x = self.position(t, a)?;
                write!(w, "{},{},{},{},{}", t, a[0], a[1], x[0], x[1])?;
                if let Some(p) = self.pressure(t, a) {
                    write!(w, ",{}", p?)?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// `A du` as a 2×2 matrix.
pub fn apply_to_jacobian<T: Scalar>(a: &Mat24<T>, du: &[[T; 2]; 4]) -> Mat2<T> {
    let e = |i: usize, d: usize| (0..4).fold(T::zero(), |acc, j| acc + a.m[i][j] * du[j][d]);
    Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
}

fn pad_planar<T: Scalar>(v: &LabelField<T>) -> Result<LabelField<T>, FlowError> {
    if v.dim() != 2 {
        return Err(FlowError::Invalid("expected a planar label field".into()));
    }
    let z = crate::fields::linear(Mat2::zero(), [T::zero(); 2], v.domain());
    Ok(v.concat(&z)?)
}

fn time_grid<T: Scalar>(span: (T, T), n: usize) -> Vec<T> {
    let n = n.max(2);
    (0..n)
        .map(|i| span.0 + (span.1 - span.0) * T::of_usize(i) / T::of_usize(n - 1))
        .collect()
}

fn label_grid<T: Scalar>(d: Rect<T>, n: [usize; 2]) -> Result<Vec<[T; 2]>, FlowError> {
    Ok(GridField::<T>::nodes_of(d, n[0], n[1])?)
}

fn jet_scale<T: Scalar>(du: &[[T; 2]; 4]) -> T {
    du.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Affine family `φ = A(t) v(α)` with `AᵀA''` symmetric; pressure
/// `p = −½⟨v, AᵀA'' v⟩`.
pub fn family1<T: Scalar>(
    a: SL2Path<T>,
    v: LabelField<T>,
    opts: &FlowOptions,
) -> Result<FlowSolution<T>, FlowError> {
    let span = a.domain();
    for t in time_grid(span, opts.time_samples) {
        let r = symmetry_residual(&a, t, SecondDerivative::Analytic)?;
        if r.as_f64() > 1e-8 {
            return Err(FlowError::SymmetryViolated {
                t: t.as_f64(),
                residual: r.as_f64(),
            });
        }
    }
    for x in label_grid(v.domain(), opts.grid)? {
        let j = v.jacobian(x)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs().as_f64() <= 1e-12 * (1.0 + jet_scale(&j).as_f64()).powi(2) {
            return Err(FlowError::DegenerateLabelField {
                alpha: pt(x),
                det: det.as_f64(),
            });
        }
    }
    let path = a.clone();
    let vf = v.clone();
    let sym = move |t: T| -> Result<Mat2<T>, FlowError> {
        let d = path.derivatives(t)?;
        let s = d[0].transpose().mul(&d[2]);
        let half = T::lit(0.5);
        Ok(s.add(&s.transpose()).scale(half))
    };
    let sym = Arc::new(sym);
    let (s1, v1) = (sym.clone(), vf.clone());
    let value = Arc::new(move |t: T, x: [T; 2]| -> Result<T, FlowError> {
        let s = s1(t)?;
        let y = v1.value(x)?;
        let sy = s.apply([y[0], y[1]]);
        Ok(-T::lit(0.5) * (y[0] * sy[0] + y[1] * sy[1]))
    });
    let (s2, v2) = (sym, vf);
    let gradient = Arc::new(move |t: T, x: [T; 2]| -> Result<[T; 2], FlowError> {
        let s = s2(t)?;
        let y = v2.value(x)?;
        let j = v2.jacobian(x)?;
        let sy = s.apply([y[0], y[1]]);
        let dv = Mat2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
        let g = dv.transpose().apply(sy);
        Ok([-g[0], -g[1]])
    });
    Ok(FlowSolution {
        kind: FlowKind::Family1,
        u: pad_planar(&v)?,
        time: Arc::new(Embedded(a)),
        pressure: Pressure::Analytic(AnalyticPressure { value, gradient }),
        span,
        description: format!("affine family, v = {}", v.name()),
        transport: None,
    })
}

/// Kirchhoff's elliptical vortex family: `A = ψ(s0, μ0 t, 0)`.
pub fn kirchhoff<T: Scalar>(
    s0: T,
    mu0: T,
    v: LabelField<T>,
    span: (T, T),
    opts: &FlowOptions,
) -> Result<FlowSolution<T>, FlowError> {
    if mu0 == T::zero() {
        return Err(FlowError::Invalid("μ0 must be nonzero".into()));
    }
    let mut f = family1(SL2Path::kirchhoff(s0, mu0, span.0, span.1), v, opts)?;
    f.description = format!("Kirchhoff s0 = {s0}, μ0 = {mu0}");
    Ok(f)
}

/// `φ = M1(t) v + M2(t) w` with blocks rotating (or reflecting) at speeds
/// `μ ≠ θ`; `(v, w)` must solve the derived system from symflow.
#[allow(clippy::too_many_arguments)]
pub fn family2<T: Scalar>(
    mu: T,
    theta: T,
    v: LabelField<T>,
    w: LabelField<T>,
    reflect1: bool,
    reflect2: bool,
    span: (T, T),
    opts: &FlowOptions,
) -> Result<FlowSolution<T>, FlowError> {
    if mu == theta {
        return Err(FlowError::EqualSpeeds);
    }
    let sys = derive_rotation_system(reflect1, reflect2)?;
    let u = v.concat(&w)?;
    check_pair(&sys, &u, opts)?;
    Ok(FlowSolution {
        kind: FlowKind::Family2,
        u,
        time: Arc::new(RotationPair {
            speeds: [mu, theta],
            reflect: [reflect1, reflect2],
        }),
        pressure: Pressure::Recoverable,
        span,
        description: format!(
            "rotation pair μ = {mu}, θ = {theta}, v = {}, w = {}",
            v.name(),
            w.name()
        ),
        transport: None,
    })
}

fn check_pair<T: Scalar>(
    sys: &DerivedSystem,
    u: &LabelField<T>,
    opts: &FlowOptions,
) -> Result<(), FlowError> {
    for x in label_grid(u.domain(), opts.grid)? {
        let j = u.jacobian(x)?;
        let jets: [T; 8] = std::array::from_fn(|i| j[i / 2][i % 2]);
        let scale = (T::one() + jet_scale(&j)).powi(2).as_f64();
        let q = sys.eval(&jets);
        let r = q[0].abs().max(q[1].abs()).as_f64();
        let tol = opts.system_tol * scale;
        if r > tol {
            return Err(FlowError::SystemResidualTooLarge {
                alpha: pt(x),
                residual: r,
                tol,
            });
        }
        let dets =
            (j[0][0] * j[1][1] - j[0][1] * j[1][0]) + (j[2][0] * j[3][1] - j[2][1] * j[3][0]);
        if dets.abs().as_f64() <= 1e-12 * scale {
            return Err(FlowError::DegeneratePair {
                alpha: pt(x),
                value: dets.as_f64(),
            });
        }
    }
    Ok(())
}

/// Where the transport data is prescribed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialLine<T> {
    /// `α2 = c`.
    Horizontal(T),
    /// `α1 = c`.
    Vertical(T),
}

impl<T: Scalar> InitialLine<T> {
    /// `(fixed axis, free axis, value)`.
    fn axes(&self) -> (usize, usize, T) {
        match *self {
            InitialLine::Horizontal(c) => (1, 0, c),
            InitialLine::Vertical(c) => (0, 1, c),
        }
    }
}

/// Values of `u2`, `u4` (and their derivatives along the line) on the
/// initial line, as functions of the free coordinate.
#[derive(Clone)]
pub struct InitialData<T> {
    pub line: InitialLine<T>,
    pub u2: ScalarCurve<T>,
    pub u4: ScalarCurve<T>,
}

impl<T: Scalar> InitialData<T> {
    /// Data on the bottom edge `α2 = min` of the domain.
    pub fn bottom_edge(domain: &Rect<T>, u2: ScalarCurve<T>, u4: ScalarCurve<T>) -> Self {
        InitialData {
            line: InitialLine::Horizontal(domain.min[1]),
            u2,
            u4,
        }
    }
}

/// Solution of the transport pair by characteristics, evaluable anywhere
/// in the domain.
///
/// Both equations say that `u1 + u2` and `u2 + u4` are constant along level
/// curves of `u3`. A node is traced back to the initial line along its level
/// curve with a fixed number of RK4 steps (so the computed foot depends
/// smoothly on the node), the foot is then polished by Newton's method on
/// `u3(foot) = u3(α)`, and the invariants are carried over.
#[derive(Clone)]
pub struct TransportSolution<T> {
    pub u1: LabelField<T>,
    pub u3: LabelField<T>,
    pub initial: InitialData<T>,
    steps: usize,
    transversality: T,
}

/// Values of `(u1, u2, u3, u4)` and their Jacobian at one point.
pub type Jet<T> = ([T; 4], [[T; 2]; 4]);

impl<T: Scalar> TransportSolution<T> {
    /// `u1` and `u3` are read from the first component of their fields.
    pub fn new(
        u1: LabelField<T>,
        u3: LabelField<T>,
        initial: InitialData<T>,
        opts: &FlowOptions,
    ) -> Result<Self, FlowError> {
        if opts.trace_steps == 0 {
            return Err(FlowError::Invalid("trace_steps must be positive".into()));
        }
        Ok(TransportSolution {
            u1,
            u3,
            initial,
            steps: opts.trace_steps,
            transversality: T::lit(opts.transversality),
        })
    }

    pub fn domain(&self) -> Rect<T> {
        let (a, b) = (self.u1.domain(), self.u3.domain());
        Rect::new(
            [a.min[0].max(b.min[0]), a.min[1].max(b.min[1])],
            [a.max[0].min(b.max[0]), a.max[1].min(b.max[1])],
        )
    }

    fn grad3(&self, x: [T; 2], start: [T; 2]) -> Result<[T; 2], FlowError> {
        match self.u3.jacobian(x) {
            Ok(j) => Ok(j[0]),
            Err(FieldError::OutOfDomain { .. }) => Err(FlowError::CharacteristicExitsDomain {
                count: 1,
                first: pt(start),
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn transversal(&self, g: [T; 2], free: usize, at: [T; 2]) -> Result<(), FlowError> {
        let norm = g[0].hypot(g[1]);
        if norm <= T::lit(1e-12) {
            return Err(FlowError::StagnationPoint { alpha: pt(at) });
        }
        if g[free].abs() < self.transversality * norm {
            return Err(FlowError::CharacteristicTangency { alpha: pt(at) });
        }
        Ok(())
    }

    /// Free coordinate of the point where the level curve of `u3` through
    /// `α` meets the initial line.
    pub fn foot(&self, a: [T; 2]) -> Result<T, FlowError> {
        let (fixed, free, c) = self.initial.line.axes();
        let slope = |x: [T; 2]| -> Result<T, FlowError> {
            let g = self.grad3(x, a)?;
            self.transversal(g, free, x)?;
            Ok(-g[fixed] / g[free])
        };
        let at = |z: T, y: T| {
            let mut p = [T::zero(); 2];
            p[fixed] = z;
            p[free] = y;
            p
        };
        let n = T::of_usize(self.steps);
        let h = (c - a[fixed]) / n;
        let (mut z, mut y) = (a[fixed], a[free]);
        let half = T::lit(0.5);
        for _ in 0..self.steps {
            let k1 = slope(at(z, y))?;
            let k2 = slope(at(z + half * h, y + half * h * k1))?;
            let k3 = slope(at(z + half * h, y + half * h * k2))?;
            let k4 = slope(at(z + h, y + h * k3))?;
            y = y + h / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4);
            z = z + h;
        }
        // Newton on the line: u3(ξ) = u3(α).
        let target = self.u3.value(a)?[0];
        let mut xi = y;
        for _ in 0..20 {
            let p = at(c, xi);
            let val = match self.u3.value(p) {
                Ok(v) => v[0],
                Err(_) => {
                    return Err(FlowError::CharacteristicExitsDomain {
                        count: 1,
                        first: pt(a),
                    })
                }
            };
            let g = self.grad3(p, a)?;
            self.transversal(g, free, p)?;
            let step = (val - target) / g[free];
            xi = xi - step;
            if step.abs() <= T::epsilon() * T::lit(4.0) * (T::one() + xi.abs()) {
                break;
            }
        }
        let p = at(c, xi);
        self.u3
            .value(p)
            .map_err(|_| FlowError::CharacteristicExitsDomain {
                count: 1,
                first: pt(a),
            })?;
        Ok(xi)
    }

    /// `(u1, u2, u3, u4)` and Jacobian at `α`.
    pub fn jet(&self, a: [T; 2]) -> Result<Jet<T>, FlowError> {
        let (_, free, c) = self.initial.line.axes();
        let xi = self.foot(a)?;
        let mut p = [T::zero(); 2];
        p[free] = xi;
        p[1 - free] = c;
        let u1 = self.u1.value(a)?[0];
        let u3 = self.u3.value(a)?[0];
        let du1 = self.u1.jacobian(a)?[0];
        let du3 = self.u3.jacobian(a)?[0];
        let g_foot = self.u3.jacobian(p)?[0];
        let u1f = self.u1.value(p)?[0];
        let du1f = self.u1.jacobian(p)?[0][free];
        let i2 = (self.initial.u2)(xi);
        let i4 = (self.initial.u4)(xi);
        // Invariants along level curves and their derivatives in ξ.
        let c1 = u1f + i2[0];
        let dc1 = du1f + i2[1];
        let c2 = i2[0] + i4[0];
        let dc2 = i2[1] + i4[1];
        let dxi = [du3[0] / g_foot[free], du3[1] / g_foot[free]];
        let u2 = c1 - u1;
        let u4 = c2 - u2;
        let du2 = [dc1 * dxi[0] - du1[0], dc1 * dxi[1] - du1[1]];
        let du4 = [dc2 * dxi[0] - du2[0], dc2 * dxi[1] - du2[1]];
        Ok(([u1, u2, u3, u4], [du1, du2, du3, du4]))
    }

    /// The solution as a four-component label field (NaN where the
    /// characteristic fails; callers validate nodes first).
    pub fn as_field(self: &Arc<Self>) -> Result<LabelField<T>, FlowError> {
        let (s1, s2) = (self.clone(), self.clone());
        let eval: FieldFn<T> = Arc::new(move |a| s1.jet(a).map(|j| j.0).unwrap_or([T::nan(); 4]));
        let jac: JacobianFn<T> =
            Arc::new(move |a| s2.jet(a).map(|j| j.1).unwrap_or([[T::nan(); 2]; 4]));
        Ok(LabelField::from_closure(
            "transport",
            4,
            self.domain(),
            eval,
            Some(jac),
        )?)
    }
}

/// Grid output of [`transport_solve`].
#[derive(Clone, Debug)]
pub struct TransportGrid<T> {
    pub u2: GridField<T>,
    pub u4: GridField<T>,
    /// Nodes `(i, j)` whose characteristic failed; their values are NaN.
    pub invalid: Vec<(usize, usize)>,
}

/// Solves the transport pair for `u2`, `u4` on an `n1 × n2` grid.
pub fn transport_solve<T: Scalar>(
    u1: LabelField<T>,
    u3: LabelField<T>,
    initial: InitialData<T>,
    n: [usize; 2],
    opts: &FlowOptions,
) -> Result<(Arc<TransportSolution<T>>, TransportGrid<T>), FlowError> {
    let sol = Arc::new(TransportSolution::new(u1, u3, initial, opts)?);
    let d = sol.domain();
    let nodes = label_grid(d, n)?;
    for &a in &nodes {
        let g = sol.u3.jacobian(a)?[0];
        if g[0].hypot(g[1]) <= T::lit(1e-12) {
            return Err(FlowError::StagnationPoint { alpha: pt(a) });
        }
    }
    let results: Vec<Result<Jet<T>, FlowError>> = nodes.par_iter().map(|&a| sol.jet(a)).collect();
    let mut u2 = Vec::with_capacity(nodes.len());
    let mut u4 = Vec::with_capacity(nodes.len());
    let mut invalid = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok((v, _)) => {
                u2.push([v[1], T::zero(), T::zero(), T::zero()]);
                u4.push([v[3], T::zero(), T::zero(), T::zero()]);
            }
            Err(FlowError::CharacteristicExitsDomain { .. }) => {
                invalid.push((k % n[0], k / n[0]));
                u2.push([T::nan(); 4]);
                u4.push([T::nan(); 4]);
            }
            Err(e) => return Err(e),
        }
    }
    let grid = TransportGrid {
        u2: GridField::new(d, n, 2, u2)?,
        u4: GridField::new(d, n, 2, u4)?,
        invalid,
    };
    Ok((sol, grid))
}

/// Max over grid nodes of both transport equations with every jet
/// differenced on the grid (second order).
pub fn transport_grid_residual<T: Scalar>(
    u1: &LabelField<T>,
    u3: &LabelField<T>,
    out: &TransportGrid<T>,
) -> Result<T, FlowError> {
    let n = out.u2.n;
    let s1 = u1.sample(n[0], n[1])?;
    let s3 = u3.sample(n[0], n[1])?;
    let mut worst = T::zero();
    for j in 0..n[1] {
        for i in 0..n[0] {
            let du = [
                s1.jacobian_at(i, j)[0],
                out.u2.jacobian_at(i, j)[0],
                s3.jacobian_at(i, j)[0],
                out.u4.jacobian_at(i, j)[0],
            ];
            let g = |l: usize, k: usize| du[l][0] * du[k][1] - du[l][1] * du[k][0];
            let e1 = g(1, 2) + g(0, 2);
            let e2 = g(2, 3) - g(1, 2);
            if e1.is_nan() || e2.is_nan() {
                return Ok(T::nan());
            }
            worst = worst.max(e1.abs()).max(e2.abs());
        }
    }
    Ok(worst)
}

/// Family built from a geodesic `Â`, a caller-chosen `a23(t)`, given `u1`,
/// `u3`, and `u2`, `u4` transported from initial data.
pub fn family3<T: Scalar>(
    ahat: SL2Path<T>,
    a23: ScalarCurve<T>,
    u1: LabelField<T>,
    u3: LabelField<T>,
    initial: InitialData<T>,
    opts: &FlowOptions,
) -> Result<FlowSolution<T>, FlowError> {
    let span = ahat.domain();
    for t in time_grid(span, opts.time_samples) {
        let r = geodesic_residual(&ahat, t)?;
        if r.as_f64() > 1e-8 {
            return Err(FlowError::GeodesicResidualTooLarge {
                t: t.as_f64(),
                residual: r.as_f64(),
            });
        }
    }
    let time = ConstrainedMatrix { ahat, a23 };
    for t in time_grid(span, opts.time_samples) {
        time.eval(t)?;
    }
    let (sol, grid) = transport_solve(u1, u3, initial, opts.grid, opts)?;
    if let Some(&(i, j)) = grid.invalid.first() {
        return Err(FlowError::CharacteristicExitsDomain {
            count: grid.invalid.len(),
            first: pt(grid.u2.node(i, j)),
        });
    }
    let u = sol.as_field()?;
    let desc = format!(
        "constrained matrix, u1 = {}, u3 = {}",
        sol.u1.name(),
        sol.u3.name()
    );
    Ok(FlowSolution {
        kind: FlowKind::Family3,
        u,
        time: Arc::new(time),
        pressure: Pressure::Recoverable,
        span,
        description: desc,
        transport: Some(sol),
    })
}

/// Gerstner's wave: `M1 = I`, `v = α`, `M2` rotating at speed `k`,
/// `w` the wave field, on the default wave domain.
pub fn gerstner<T: Scalar>(
    k: T,
    span: (T, T),
    opts: &FlowOptions,
) -> Result<FlowSolution<T>, FlowError> {
    let w = crate::fields::gerstner_w(k)?;
    let v = crate::fields::identity(w.domain());
    let mut f = family2(T::zero(), k, v, w, false, false, span, opts)?;
    f.description = format!("Gerstner wave k = {k}");
    Ok(f)
}

/// `A(t), A', A''` of a chart path, exposed for callers assembling their own
/// time data.
pub fn chart_matrices<T: Scalar>(q: [[T; 3]; 3]) -> [Mat2<T>; 3] {
    psi_derivatives(q[0], q[1], q[2])
}
