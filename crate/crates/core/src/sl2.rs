//! SL(2) curves: the (s, μ, θ) parametrization, geodesics of the embedded
//! metric, curve completion from the conserved quantity and small matrix
//! utilities shared by the flow constructions.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum Sl2Error {
    #[error("det = {det} is not 1 within 1e-12")]
    NotUnimodular { det: f64 },
    #[error("θ chart is singular at t = {t}: sinh(s) ≈ 0 with θ' = {dtheta}; fold θ' into μ' and restart")]
    SingularChart { t: f64, dtheta: f64 },
    #[error("time {t} outside [{t0}, {t1}]")]
    OutOfDomain { t: f64, t0: f64, t1: f64 },
    #[error("finite differences at t = {t} need samples beyond the path boundary")]
    BoundaryPoint { t: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 2×2 real matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Mat2 {
            m: [[a11, a12], [a21, a22]],
        }
    }

    /// Checked constructor for elements of SL(2).
    pub fn sl2(a11: T, a12: T, a21: T, a22: T) -> Result<Self, Sl2Error> {
        let a = Self::new(a11, a12, a21, a22);
        let det = a.det().as_f64();
        if (det - 1.0).abs() > 1e-12 {
            return Err(Sl2Error::NotUnimodular { det });
        }
        Ok(a)
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    /// Inverse via the adjugate; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() {
            return None;
        }
        Some(Self::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn apply(&self, x: [T; 2]) -> [T; 2] {
        [
            self.m[0][0] * x[0] + self.m[0][1] * x[1],
            self.m[1][0] * x[0] + self.m[1][1] * x[1],
        ]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-T::one()))
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(
            self.m[0][0] * c,
            self.m[0][1] * c,
            self.m[1][0] * c,
            self.m[1][1] * c,
        )
    }

    pub fn frobenius(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    /// `|M12 − M21|`.
    pub fn skew_part(&self) -> T {
        (self.m[0][1] - self.m[1][0]).abs()
    }
}

/// 2×4 real matrix `(M1 | M2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat24<T> {
    pub m: [[T; 4]; 2],
}

impl<T: Scalar> Mat24<T> {
    pub fn from_blocks(a: &Mat2<T>, b: &Mat2<T>) -> Self {
        Mat24 {
            m: [
                [a.m[0][0], a.m[0][1], b.m[0][0], b.m[0][1]],
                [a.m[1][0], a.m[1][1], b.m[1][0], b.m[1][1]],
            ],
        }
    }

    pub fn block(&self, j: usize) -> Mat2<T> {
        let c = 2 * j;
        Mat2::new(
            self.m[0][c],
            self.m[0][c + 1],
            self.m[1][c],
            self.m[1][c + 1],
        )
    }

    pub fn apply(&self, u: [T; 4]) -> [T; 2] {
        let row = |i: usize| (0..4).fold(T::zero(), |acc, j| acc + self.m[i][j] * u[j]);
        [row(0), row(1)]
    }

    /// `AᵀB` for two 2×4 matrices (4×4 result).
    pub fn transpose_mul(&self, b: &Self) -> [[T; 4]; 4] {
        let mut out = [[T::zero(); 4]; 4];
        for (l, row) in out.iter_mut().enumerate() {
            for (k, x) in row.iter_mut().enumerate() {
                *x = self.m[0][l] * b.m[0][k] + self.m[1][l] * b.m[1][k];
            }
        }
        out
    }
}

/// `[[cos μ, −sin μ], [sin μ, cos μ]]`.
pub fn rotation<T: Scalar>(mu: T) -> Mat2<T> {
    let (s, c) = mu.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// `[[cos θ, sin θ], [sin θ, −cos θ]]`.
pub fn reflection<T: Scalar>(theta: T) -> Mat2<T> {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, s, s, -c)
}

/// `ψ(s, μ, θ) = cosh(s) R1(μ) + sinh(s) R2(θ)`; determinant one.
pub fn psi<T: Scalar>(s: T, mu: T, theta: T) -> Mat2<T> {
    rotation(mu)
        .scale(s.cosh())
        .add(&reflection(theta).scale(s.sinh()))
}

/// `ψ(q(t))` and its first two time derivatives from `q = (s, μ, θ)` and its
/// derivatives.
pub fn psi_derivatives<T: Scalar>(q: [T; 3], dq: [T; 3], ddq: [T; 3]) -> [Mat2<T>; 3] {
    let [s, mu, th] = q;
    let [ds, dmu, dth] = dq;
    let [dds, ddmu, ddth] = ddq;
    let (sh, ch) = (s.sinh(), s.cosh());
    let r1 = rotation(mu);
    let r2 = reflection(th);
    let (sm, cm) = mu.sin_cos();
    let (st, ct) = th.sin_cos();
    let r1m = Mat2::new(-sm, -cm, cm, -sm);
    let r2t = Mat2::new(-st, ct, ct, st);
    let a = r1.scale(ch).add(&r2.scale(sh));
    let da = r1
        .scale(sh * ds)
        .add(&r2.scale(ch * ds))
        .add(&r1m.scale(ch * dmu))
        .add(&r2t.scale(sh * dth));
    let two = T::lit(2.0);
    let dda = r1
        .scale(sh * dds)
        .add(&r2.scale(ch * dds))
        .add(&r1.scale(ch * ds * ds))
        .add(&r2.scale(sh * ds * ds))
        .add(&r1m.scale(two * sh * ds * dmu + ch * ddmu))
        .add(&r1.scale(-ch * dmu * dmu))
        .add(&r2t.scale(two * ch * ds * dth + sh * ddth))
        .add(&r2.scale(-sh * dth * dth));
    [a, da, dda]
}

/// `cosh²(s) μ' − sinh²(s) θ'`, constant along curves with `AᵀA''` symmetric.
pub fn conserved_quantity<T: Scalar>(s: T, dmu: T, dtheta: T) -> T {
    let (sh, ch) = (s.sinh(), s.cosh());
    ch * ch * dmu - sh * sh * dtheta
}

/// Position and velocity in the (s, μ, θ) chart.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeodesicState<T> {
    pub s: T,
    pub mu: T,
    pub theta: T,
    pub ds: T,
    pub dmu: T,
    pub dtheta: T,
}

impl<T: Scalar> GeodesicState<T> {
    pub fn new(s: T, mu: T, theta: T, ds: T, dmu: T, dtheta: T) -> Self {
        GeodesicState {
            s,
            mu,
            theta,
            ds,
            dmu,
            dtheta,
        }
    }

    pub fn position(&self) -> [T; 3] {
        [self.s, self.mu, self.theta]
    }

    pub fn velocity(&self) -> [T; 3] {
        [self.ds, self.dmu, self.dtheta]
    }

    fn to_array(self) -> [T; 6] {
        [self.s, self.mu, self.theta, self.ds, self.dmu, self.dtheta]
    }

    fn from_array(a: [T; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Accelerations `(s'', μ'', θ'')` of the geodesic equations in the chart.
pub fn geodesic_acceleration<T: Scalar>(x: &GeodesicState<T>, t: T) -> Result<[T; 3], Sl2Error> {
    let two = T::lit(2.0);
    let (sh, ch) = (x.s.sinh(), x.s.cosh());
    let dds = -(two * x.s).sinh() * (two * x.ds * x.ds - x.dtheta * x.dtheta - x.dmu * x.dmu)
        / (two * (two * x.s).cosh());
    let ddmu = -two * sh * x.ds * x.dmu / ch;
    let ddth = if x.dtheta == T::zero() {
        T::zero()
    } else if sh.abs() < T::lit(1e-12) {
        return Err(Sl2Error::SingularChart {
            t: t.as_f64(),
            dtheta: x.dtheta.as_f64(),
        });
    } else {
        -two * ch * x.ds * x.dtheta / sh
    };
    Ok([dds, ddmu, ddth])
}

fn rk4_step<T: Scalar>(x: &GeodesicState<T>, t: T, h: T) -> Result<GeodesicState<T>, Sl2Error> {
    let f = |y: [T; 6], t: T| -> Result<[T; 6], Sl2Error> {
        let a = geodesic_acceleration(&GeodesicState::from_array(y), t)?;
        Ok([y[3], y[4], y[5], a[0], a[1], a[2]])
    };
    let y0 = x.to_array();
    let add = |y: [T; 6], k: [T; 6], c: T| {
        let mut o = y;
        for i in 0..6 {
            o[i] = o[i] + c * k[i];
        }
        o
    };
    let half = T::lit(0.5);
    let k1 = f(y0, t)?;
    let k2 = f(add(y0, k1, half * h), t + half * h)?;
    let k3 = f(add(y0, k2, half * h), t + half * h)?;
    let k4 = f(add(y0, k3, h), t + h)?;
    let mut y = y0;
    let sixth = h / T::lit(6.0);
    for i in 0..6 {
        y[i] = y[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
    Ok(GeodesicState::from_array(y))
}

/// `(value, first, second)` derivatives of a scalar function of time.
pub type ScalarCurve<T> = Arc<dyn Fn(T) -> [T; 3] + Send + Sync>;

/// Closure returning `(q, q', q'')` for `q = (s, μ, θ)`.
pub type ChartCurve<T> = Arc<dyn Fn(T) -> [[T; 3]; 3] + Send + Sync>;

#[derive(Clone)]
enum PathRepr<T> {
    Analytic(ChartCurve<T>),
    Sampled {
        h: T,
        /// `(q, q', q'')` per node.
        nodes: Vec<[[T; 3]; 3]>,
    },
}

/// A curve `A(t) = ψ(s(t), μ(t), θ(t))` on `[t0, t1]`.
#[derive(Clone)]
pub struct SL2Path<T> {
    t0: T,
    t1: T,
    repr: PathRepr<T>,
}

impl<T: Scalar> std::fmt::Debug for SL2Path<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.repr {
            PathRepr::Analytic(_) => "analytic".to_string(),
            PathRepr::Sampled { nodes, .. } => format!("sampled({} nodes)", nodes.len()),
        };
        write!(f, "SL2Path[{}, {}] {kind}", self.t0, self.t1)
    }
}

/// Value and first two derivatives of the quintic Hermite interpolant on
/// `[0, h]` at `x = τh`.
fn hermite5<T: Scalar>(tau: T, h: T, a: [T; 3], b: [T; 3]) -> [T; 3] {
    let l = T::lit;
    let t = tau;
    let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
    // Basis polynomials and their τ-derivatives.
    let h0 = [
        T::one() - l(10.0) * t3 + l(15.0) * t4 - l(6.0) * t5,
        -l(30.0) * t2 + l(60.0) * t3 - l(30.0) * t4,
        -l(60.0) * t + l(180.0) * t2 - l(120.0) * t3,
    ];
    let h1 = [
        t - l(6.0) * t3 + l(8.0) * t4 - l(3.0) * t5,
        T::one() - l(18.0) * t2 + l(32.0) * t3 - l(15.0) * t4,
        -l(36.0) * t + l(96.0) * t2 - l(60.0) * t3,
    ];
    let h2 = [
        l(0.5) * t2 - l(1.5) * t3 + l(1.5) * t4 - l(0.5) * t5,
        t - l(4.5) * t2 + l(6.0) * t3 - l(2.5) * t4,
        T::one() - l(9.0) * t + l(18.0) * t2 - l(10.0) * t3,
    ];
    let h3 = [
        l(0.5) * t3 - t4 + l(0.5) * t5,
        l(1.5) * t2 - l(4.0) * t3 + l(2.5) * t4,
        l(3.0) * t - l(12.0) * t2 + l(10.0) * t3,
    ];
    let h4 = [
        -l(4.0) * t3 + l(7.0) * t4 - l(3.0) * t5,
        -l(12.0) * t2 + l(28.0) * t3 - l(15.0) * t4,
        -l(24.0) * t + l(84.0) * t2 - l(60.0) * t3,
    ];
    let h5 = [
        l(10.0) * t3 - l(15.0) * t4 + l(6.0) * t5,
        l(30.0) * t2 - l(60.0) * t3 + l(30.0) * t4,
        l(60.0) * t - l(180.0) * t2 + l(120.0) * t3,
    ];
    let mut out = [T::zero(); 3];
    let scale = [T::one(), T::one() / h, T::one() / (h * h)];
    for d in 0..3 {
        let v = h0[d] * a[0]
            + h * h1[d] * a[1]
            + h * h * h2[d] * a[2]
            + h * h * h3[d] * b[2]
            + h * h4[d] * b[1]
            + h5[d] * b[0];
        out[d] = v * scale[d];
    }
    out
}

impl<T: Scalar> SL2Path<T> {
    /// Path given by closures for `(q, q', q'')`.
    pub fn analytic(t0: T, t1: T, q: ChartCurve<T>) -> Self {
        SL2Path {
            t0,
            t1,
            repr: PathRepr::Analytic(q),
        }
    }

    /// Path from samples of `(q, q', q'')` on a uniform grid starting at `t0`.
    pub fn sampled(t0: T, h: T, nodes: Vec<[[T; 3]; 3]>) -> Result<Self, Sl2Error> {
        if nodes.len() < 2 || !(h > T::zero()) {
            return Err(Sl2Error::Invalid(
                "need at least two samples and h > 0".into(),
            ));
        }
        let t1 = t0 + h * T::of_usize(nodes.len() - 1);
        Ok(SL2Path {
            t0,
            t1,
            repr: PathRepr::Sampled { h, nodes },
        })
    }

    /// `A(t) = ψ(s0, μ0 t, 0)`, the rigid-rotation-with-strain family.
    pub fn kirchhoff(s0: T, mu0: T, t0: T, t1: T) -> Self {
        Self::analytic(
            t0,
            t1,
            Arc::new(move |t| {
                [
                    [s0, mu0 * t, T::zero()],
                    [T::zero(), mu0, T::zero()],
                    [T::zero(); 3],
                ]
            }),
        )
    }

    pub fn domain(&self) -> (T, T) {
        (self.t0, self.t1)
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.repr, PathRepr::Sampled { .. })
    }

    /// Grid spacing of a sampled path.
    pub fn spacing(&self) -> Option<T> {
        match &self.repr {
            PathRepr::Sampled { h, .. } => Some(*h),
            PathRepr::Analytic(_) => None,
        }
    }

    /// Node times and chart data of a sampled path.
    pub fn nodes(&self) -> Option<Vec<(T, [[T; 3]; 3])>> {
        match &self.repr {
            PathRepr::Sampled { h, nodes } => Some(
                nodes
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (self.t0 + *h * T::of_usize(i), *n))
                    .collect(),
            ),
            PathRepr::Analytic(_) => None,
        }
    }

    fn check(&self, t: T) -> Result<(), Sl2Error> {
        let tol = (self.t1 - self.t0).abs() * T::lit(1e-12);
        if t < self.t0 - tol || t > self.t1 + tol {
            return Err(Sl2Error::OutOfDomain {
                t: t.as_f64(),
                t0: self.t0.as_f64(),
                t1: self.t1.as_f64(),
            });
        }
        Ok(())
    }

    /// `(q, q', q'')` at time `t`.
    pub fn chart(&self, t: T) -> Result<[[T; 3]; 3], Sl2Error> {
        self.check(t)?;
        match &self.repr {
            PathRepr::Analytic(f) => Ok(f(t)),
            PathRepr::Sampled { h, nodes } => {
                let x = (t - self.t0) / *h;
                let last = nodes.len() - 2;
                let i = x.floor().to_usize().unwrap_or(0).min(last);
                let tau = x - T::of_usize(i);
                let mut out = [[T::zero(); 3]; 3];
                for c in 0..3 {
                    let a = [nodes[i][0][c], nodes[i][1][c], nodes[i][2][c]];
                    let b = [nodes[i + 1][0][c], nodes[i + 1][1][c], nodes[i + 1][2][c]];
                    let v = hermite5(tau, *h, a, b);
                    for d in 0..3 {
                        out[d][c] = v[d];
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn matrix(&self, t: T) -> Result<Mat2<T>, Sl2Error> {
        let q = self.chart(t)?;
        Ok(psi(q[0][0], q[0][1], q[0][2]))
    }

    /// `A, A', A''` at `t` from the chart derivatives.
    pub fn derivatives(&self, t: T) -> Result<[Mat2<T>; 3], Sl2Error> {
        let q = self.chart(t)?;
        Ok(psi_derivatives(q[0], q[1], q[2]))
    }

    /// Writes `t,s,mu,theta,a11,a12,a21,a22` at the nodes (sampled paths) or
    /// at `samples` uniform times (analytic paths).
    pub fn write_csv<W: Write>(&self, w: &mut W, samples: usize) -> Result<(), Sl2Error> {
        writeln!(w, "t,s,mu,theta,a11,a12,a21,a22")?;
        let times: Vec<T> = match self.nodes() {
            Some(n) => n.into_iter().map(|(t, _)| t).collect(),
            None => {
                let n = samples.max(2);
                (0..n)
                    .map(|i| self.t0 + (self.t1 - self.t0) * T::of_usize(i) / T::of_usize(n - 1))
                    .collect()
            }
        };
        for t in times {
            let q = self.chart(t)?[0];
            let a = psi(q[0], q[1], q[2]);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                t, q[0], q[1], q[2], a.m[0][0], a.m[0][1], a.m[1][0], a.m[1][1]
            )?;
        }
        Ok(())
    }
}

/// Integrates the geodesic equations from `x0` at `t = 0` to `t1` with the
/// classical fourth-order Runge–Kutta method. The step is shrunk so that it
/// divides `t1` exactly.
pub fn integrate_geodesic<T: Scalar>(
    x0: GeodesicState<T>,
    t1: T,
    h: T,
) -> Result<SL2Path<T>, Sl2Error> {
    if !(h > T::zero()) || !(t1 > T::zero()) {
        return Err(Sl2Error::Invalid("need h > 0 and t1 > 0".into()));
    }
    let n = (t1 / h).ceil().to_usize().unwrap_or(1).max(1);
    let h = t1 / T::of_usize(n);
    let mut x = x0;
    let mut nodes = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = h * T::of_usize(i);
        if !x.is_finite() {
            return Err(Sl2Error::Invalid(format!("state blew up at t = {t}")));
        }
        let acc = geodesic_acceleration(&x, t)?;
        nodes.push([x.position(), x.velocity(), acc]);
        if i < n {
            x = rk4_step(&x, t, h)?;
        }
    }
    SL2Path::sampled(T::zero(), h, nodes)
}

/// Final state only, without storing the path.
pub fn geodesic_endpoint<T: Scalar>(
    x0: GeodesicState<T>,
    t1: T,
    h: T,
) -> Result<GeodesicState<T>, Sl2Error> {
    let n = (t1 / h).ceil().to_usize().unwrap_or(1).max(1);
    let h = t1 / T::of_usize(n);
    let mut x = x0;
    for i in 0..n {
        x = rk4_step(&x, h * T::of_usize(i), h)?;
    }
    Ok(x)
}

/// Builds `A = ψ(s, μ, θ)` on `[t0, t1]` from given `s`, `θ` and the constant
/// `c` of the conserved quantity: `μ' = (c + sinh²(s) θ') / cosh²(s)`,
/// `μ(t0) = 0`, integrated by Simpson's rule on each of the `n` grid intervals.
pub fn complete_curve<T: Scalar>(
    s: ScalarCurve<T>,
    theta: ScalarCurve<T>,
    c: T,
    t0: T,
    t1: T,
    n: usize,
) -> Result<SL2Path<T>, Sl2Error> {
    if n == 0 || !(t1 > t0) {
        return Err(Sl2Error::Invalid("need n >= 1 and t1 > t0".into()));
    }
    let h = (t1 - t0) / T::of_usize(n);
    let mu_rates = |t: T| -> (T, T) {
        let [sv, ds, _] = s(t);
        let [_, dth, ddth] = theta(t);
        let (sh, ch) = (sv.sinh(), sv.cosh());
        let dmu = (c + sh * sh * dth) / (ch * ch);
        // derivative of the quotient
        let two = T::lit(2.0);
        let num_d = two * sh * ch * ds * dth + sh * sh * ddth;
        let ddmu = (num_d - two * sh * ch * ds * dmu) / (ch * ch);
        (dmu, ddmu)
    };
    let mut mu = T::zero();
    let mut nodes = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = t0 + h * T::of_usize(i);
        if i > 0 {
            let a = t - h;
            let m = a + h / T::lit(2.0);
            mu = mu
                + h / T::lit(6.0) * (mu_rates(a).0 + T::lit(4.0) * mu_rates(m).0 + mu_rates(t).0);
        }
        let sv = s(t);
        let th = theta(t);
        let (dmu, ddmu) = mu_rates(t);
        nodes.push([
            [sv[0], mu, th[0]],
            [sv[1], dmu, th[1]],
            [sv[2], ddmu, th[2]],
        ]);
    }
    SL2Path::sampled(t0, h, nodes)
}

/// How `A''` is obtained in [`symmetry_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SecondDerivative<T> {
    /// From the chart derivatives of the path.
    Analytic,
    /// Fourth-order central differences of `A` with the given step.
    FiniteDifference(T),
}

/// Fourth-order central second difference of `A` at `t`.
pub fn fd_second_derivative<T: Scalar>(
    path: &SL2Path<T>,
    t: T,
    step: T,
) -> Result<Mat2<T>, Sl2Error> {
    let (t0, t1) = path.domain();
    if t - T::lit(2.0) * step < t0 || t + T::lit(2.0) * step > t1 {
        return Err(Sl2Error::BoundaryPoint { t: t.as_f64() });
    }
    let a = |k: f64| path.matrix(t + T::lit(k) * step);
    let c = a(0.0)?.scale(T::lit(-30.0));
    let s1 = a(1.0)?.add(&a(-1.0)?).scale(T::lit(16.0));
    let s2 = a(2.0)?.add(&a(-2.0)?).scale(T::lit(-1.0));
    Ok(c.add(&s1)
        .add(&s2)
        .scale(T::one() / (T::lit(12.0) * step * step)))
}

/// `|(AᵀA'')12 − (AᵀA'')21|` at `t`.
pub fn symmetry_residual<T: Scalar>(
    path: &SL2Path<T>,
    t: T,
    mode: SecondDerivative<T>,
) -> Result<T, Sl2Error> {
    let [a, _, dda] = path.derivatives(t)?;
    let dda = match mode {
        SecondDerivative::Analytic => dda,
        SecondDerivative::FiniteDifference(step) => fd_second_derivative(path, t, step)?,
    };
    Ok(a.transpose().mul(&dda).skew_part())
}

/// Largest residual of the three geodesic equations at `t`, in their
/// polynomial-in-(sinh, cosh) form.
pub fn geodesic_residual<T: Scalar>(path: &SL2Path<T>, t: T) -> Result<T, Sl2Error> {
    let [q, dq, ddq] = path.chart(t)?;
    let two = T::lit(2.0);
    let (s, ds, dmu, dth) = (q[0], dq[0], dq[1], dq[2]);
    let (sh, ch) = (s.sinh(), s.cosh());
    let r1 = two * (two * s).cosh() * ddq[0]
        + (two * s).sinh() * (two * ds * ds - dth * dth - dmu * dmu);
    let r2 = ch * ddq[1] + two * sh * ds * dmu;
    let r3 = sh * ddq[2] + two * ch * ds * dth;
    Ok(r1.abs().max(r2.abs()).max(r3.abs()))
}

/// Something that yields `A(t), A'(t), A''(t)` for a 2×2 time matrix.
pub trait MatrixCurve<T: Scalar>: Send + Sync {
    fn derivatives(&self, t: T) -> Result<[Mat2<T>; 3], Sl2Error>;
    fn domain(&self) -> (T, T);
}

impl<T: Scalar> MatrixCurve<T> for SL2Path<T> {
    fn derivatives(&self, t: T) -> Result<[Mat2<T>; 3], Sl2Error> {
        SL2Path::derivatives(self, t)
    }

    fn domain(&self) -> (T, T) {
        SL2Path::domain(self)
    }
}
