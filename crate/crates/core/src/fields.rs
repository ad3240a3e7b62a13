//! Vector fields on a rectangular label domain, with Jacobians.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{Rect, Scalar};
use crate::sl2::Mat2;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("point ({a1}, {a2}) outside the label domain")]
    OutOfDomain { a1: f64, a2: f64 },
    #[error("invalid field: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Values padded to four components; unused entries are zero.
pub type FieldFn<T> = Arc<dyn Fn([T; 2]) -> [T; 4] + Send + Sync>;
/// Rows `∂f^i/∂α_j`, padded to four rows.
pub type JacobianFn<T> = Arc<dyn Fn([T; 2]) -> [[T; 2]; 4] + Send + Sync>;

#[derive(Clone)]
pub enum JacobianMode<T> {
    Analytic(JacobianFn<T>),
    /// Fourth-order differences with step `h` (one-sided near the edges).
    FiniteDifference(T),
}

/// A map `D → R^m`, `m ∈ {2, 4}`, on a rectangle `D`.
#[derive(Clone)]
pub struct LabelField<T> {
    dim: usize,
    domain: Rect<T>,
    eval: FieldFn<T>,
    jac: JacobianMode<T>,
    name: String,
}

impl<T: Scalar> std::fmt::Debug for LabelField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mode = match self.jac {
            JacobianMode::Analytic(_) => "analytic".to_string(),
            JacobianMode::FiniteDifference(h) => format!("fd(h={h})"),
        };
        write!(f, "LabelField[{}; m={}; {mode}]", self.name, self.dim)
    }
}

/// Default finite-difference step for a domain.
pub fn default_fd_step<T: Scalar>(domain: &Rect<T>) -> T {
    T::lit(1e-4) * domain.diameter()
}

impl<T: Scalar> LabelField<T> {
    /// Field from closures; without `jac` the Jacobian is differenced with
    /// the default step.
    pub fn from_closure(
        name: &str,
        dim: usize,
        domain: Rect<T>,
        eval: FieldFn<T>,
        jac: Option<JacobianFn<T>>,
    ) -> Result<Self, FieldError> {
        if dim != 2 && dim != 4 {
            return Err(FieldError::Invalid(format!(
                "output dimension {dim} not in {{2, 4}}"
            )));
        }
        if !(domain.width() > T::zero() && domain.height() > T::zero()) {
            return Err(FieldError::Invalid("empty domain".into()));
        }
        let jac = match jac {
            Some(j) => JacobianMode::Analytic(j),
            None => JacobianMode::FiniteDifference(default_fd_step(&domain)),
        };
        Ok(LabelField {
            dim,
            domain,
            eval,
            jac,
            name: name.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Rect<T> {
        self.domain
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        matches!(self.jac, JacobianMode::Analytic(_))
    }

    /// Same field, restricted or extended to another rectangle.
    pub fn with_domain(mut self, domain: Rect<T>) -> Self {
        self.domain = domain;
        self
    }

    /// Same field with differenced Jacobians at step `h`.
    pub fn with_finite_differences(mut self, h: T) -> Self {
        self.jac = JacobianMode::FiniteDifference(h);
        self
    }

    fn check(&self, a: [T; 2]) -> Result<(), FieldError> {
        let tol = T::lit(1e-12) * (T::one() + self.domain.diameter());
        let inside =
            (0..2).all(|i| a[i] >= self.domain.min[i] - tol && a[i] <= self.domain.max[i] + tol);
        if inside {
            Ok(())
        } else {
            Err(FieldError::OutOfDomain {
                a1: a[0].as_f64(),
                a2: a[1].as_f64(),
            })
        }
    }

    pub fn value(&self, a: [T; 2]) -> Result<[T; 4], FieldError> {
        self.check(a)?;
        Ok((self.eval)(a))
    }

    /// `m × 2` Jacobian (rows padded to four).
    pub fn jacobian(&self, a: [T; 2]) -> Result<[[T; 2]; 4], FieldError> {
        self.check(a)?;
        match &self.jac {
            JacobianMode::Analytic(j) => Ok(j(a)),
            JacobianMode::FiniteDifference(h) => Ok(self.jacobian_fd(a, *h)),
        }
    }

    /// Fourth-order differenced Jacobian; the stencil stays inside the
    /// domain, switching to one-sided formulas near an edge.
    pub fn jacobian_fd(&self, a: [T; 2], h: T) -> [[T; 2]; 4] {
        let mut out = [[T::zero(); 2]; 4];
        let l = T::lit;
        for d in 0..2 {
            let at = |k: T| {
                let mut p = a;
                p[d] = p[d] + k * h;
                (self.eval)(p)
            };
            let lo = a[d] - l(2.0) * h >= self.domain.min[d];
            let hi = a[d] + l(2.0) * h <= self.domain.max[d];
            let col: [T; 4] = if lo && hi {
                let (p2, p1, m1, m2) = (at(l(2.0)), at(l(1.0)), at(l(-1.0)), at(l(-2.0)));
                std::array::from_fn(|i| {
                    (-p2[i] + l(8.0) * p1[i] - l(8.0) * m1[i] + m2[i]) / (l(12.0) * h)
                })
            } else {
                let s = if hi { T::one() } else { -T::one() };
                let f: Vec<[T; 4]> = (0..5).map(|k| at(s * T::of_usize(k))).collect();
                std::array::from_fn(|i| {
                    s * (-l(25.0) * f[0][i] + l(48.0) * f[1][i] - l(36.0) * f[2][i]
                        + l(16.0) * f[3][i]
                        - l(3.0) * f[4][i])
                        / (l(12.0) * h)
                })
            };
            for i in 0..4 {
                out[i][d] = col[i];
            }
        }
        out
    }

    /// `u = (self | other)`: a four-component field from two planar ones on
    /// the intersection of their domains.
    pub fn concat(&self, other: &LabelField<T>) -> Result<LabelField<T>, FieldError> {
        if self.dim != 2 || other.dim != 2 {
            return Err(FieldError::Invalid("concat needs two planar fields".into()));
        }
        let domain = Rect::new(
            [
                self.domain.min[0].max(other.domain.min[0]),
                self.domain.min[1].max(other.domain.min[1]),
            ],
            [
                self.domain.max[0].min(other.domain.max[0]),
                self.domain.max[1].min(other.domain.max[1]),
            ],
        );
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let eval: FieldFn<T> = Arc::new(move |a| {
            let (x, y) = (f(a), g(a));
            [x[0], x[1], y[0], y[1]]
        });
        let jac: Option<JacobianFn<T>> = match (&self.jac, &other.jac) {
            (JacobianMode::Analytic(j1), JacobianMode::Analytic(j2)) => {
                let (j1, j2) = (j1.clone(), j2.clone());
                Some(Arc::new(move |a| {
                    let (x, y) = (j1(a), j2(a));
                    [x[0], x[1], y[0], y[1]]
                }))
            }
            _ => None,
        };
        LabelField::from_closure(
            &format!("({}|{})", self.name, other.name),
            4,
            domain,
            eval,
            jac,
        )
    }

    /// Evaluates the field on a uniform `n1 × n2` grid over its domain.
    pub fn sample(&self, n1: usize, n2: usize) -> Result<GridField<T>, FieldError> {
        let grid = GridField::<T>::nodes_of(self.domain, n1, n2)?;
        let values: Vec<[T; 4]> = grid.par_iter().map(|&a| (self.eval)(a)).collect();
        GridField::new(self.domain, [n1, n2], self.dim, values)
    }
}

fn square_domain<T: Scalar>() -> Rect<T> {
    Rect::new([-T::one(), -T::one()], [T::one(), T::one()])
}

/// `v(α) = α`.
pub fn identity<T: Scalar>(domain: Rect<T>) -> LabelField<T> {
    linear(Mat2::identity(), [T::zero(); 2], domain)
}

/// `v(α) = Mα + b`.
pub fn linear<T: Scalar>(m: Mat2<T>, b: [T; 2], domain: Rect<T>) -> LabelField<T> {
    let eval: FieldFn<T> = Arc::new(move |a| {
        let y = m.apply(a);
        [y[0] + b[0], y[1] + b[1], T::zero(), T::zero()]
    });
    let z = [T::zero(); 2];
    let jac: JacobianFn<T> = Arc::new(move |_| [m.m[0], m.m[1], z, z]);
    LabelField::from_closure("linear", 2, domain, eval, Some(jac)).expect("valid linear field")
}

/// Default label rectangle for the wave field: one wavelength in `α1`,
/// `kα2 ∈ [−3, −0.1]`.
pub fn gerstner_domain<T: Scalar>(k: T) -> Rect<T> {
    let ka = k.abs();
    Rect::new(
        [T::zero(), T::lit(-3.0) / ka],
        [T::lit(2.0) * T::PI() / ka, T::lit(-0.1) / ka],
    )
}

/// `w(α) = (e^{kα2}/k) (sin kα1, −cos kα1)` on [`gerstner_domain`].
pub fn gerstner_w<T: Scalar>(k: T) -> Result<LabelField<T>, FieldError> {
    if k == T::zero() || !k.is_finite() {
        return Err(FieldError::Invalid(
            "wave number must be finite and nonzero".into(),
        ));
    }
    let eval: FieldFn<T> = Arc::new(move |a| {
        let e = (k * a[1]).exp() / k;
        let (s, c) = (k * a[0]).sin_cos();
        [e * s, -e * c, T::zero(), T::zero()]
    });
    let jac: JacobianFn<T> = Arc::new(move |a| {
        let e = (k * a[1]).exp();
        let (s, c) = (k * a[0]).sin_cos();
        let z = [T::zero(); 2];
        [[e * c, e * s], [e * s, -e * c], z, z]
    });
    LabelField::from_closure("gerstner_w", 2, gerstner_domain(k), eval, Some(jac))
}

fn horner<T: Scalar>(c: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut f = Complex::new(T::zero(), T::zero());
    let mut df = f;
    for cj in c.iter().rev() {
        df = df * z + f;
        f = f * z + cj;
    }
    (f, df)
}

fn holomorphic<T: Scalar>(
    coeffs: Vec<Complex<T>>,
    conjugate: bool,
    scale: T,
) -> (FieldFn<T>, JacobianFn<T>) {
    let c1 = coeffs.clone();
    let sgn = if conjugate { -T::one() } else { T::one() };
    let eval: FieldFn<T> = Arc::new(move |a| {
        let (f, _) = horner(&c1, Complex::new(a[0], a[1]));
        [scale * f.re, sgn * scale * f.im, T::zero(), T::zero()]
    });
    let jac: JacobianFn<T> = Arc::new(move |a| {
        let (_, d) = horner(&coeffs, Complex::new(a[0], a[1]));
        let (p, q) = (scale * d.re, scale * d.im);
        let z = [T::zero(); 2];
        // F = (Re, Im): [[p, −q], [q, p]]; conj(F) flips the second row.
        [[p, -q], [sgn * q, sgn * p], z, z]
    });
    (eval, jac)
}

/// `v = conj(F)` and `w = G` for holomorphic polynomials `F = Σ f_j z^j`,
/// `G = Σ g_j z^j`. `dv` is symmetric and trace-free; `w` satisfies
/// `w1_10 = w2_01`, `w1_01 = −w2_10`.
pub fn cr_pair_from_polynomials<T: Scalar>(
    f: &[Complex<T>],
    g: &[Complex<T>],
    domain: Rect<T>,
) -> Result<(LabelField<T>, LabelField<T>), FieldError> {
    if f.is_empty() || g.is_empty() {
        return Err(FieldError::Invalid("empty coefficient list".into()));
    }
    let (ve, vj) = holomorphic(f.to_vec(), true, T::one());
    let (we, wj) = holomorphic(g.to_vec(), false, T::one());
    Ok((
        LabelField::from_closure("cr_v", 2, domain, ve, Some(vj))?,
        LabelField::from_closure("cr_w", 2, domain, we, Some(wj))?,
    ))
}

/// Pair from one polynomial: `v = conj(F)`, `w = F/2`. Taking `w = F` would
/// make `det(dv) + det(dw)` vanish identically.
pub fn cr_pair_from_polynomial<T: Scalar>(
    coeffs: &[Complex<T>],
    domain: Rect<T>,
) -> Result<(LabelField<T>, LabelField<T>), FieldError> {
    let half: Vec<Complex<T>> = coeffs.iter().map(|c| c * T::lit(0.5)).collect();
    cr_pair_from_polynomials(coeffs, &half, domain)
}

/// Unit square `[-1, 1]²`, a convenient default for polynomial fields.
pub fn unit_square<T: Scalar>() -> Rect<T> {
    square_domain()
}

/// Values of a field on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    pub domain: Rect<T>,
    pub n: [usize; 2],
    pub dim: usize,
    /// Node `(i, j)` (`i` along α1) at index `j * n1 + i`.
    pub values: Vec<[T; 4]>,
}

impl<T: Scalar> GridField<T> {
    pub fn new(
        domain: Rect<T>,
        n: [usize; 2],
        dim: usize,
        values: Vec<[T; 4]>,
    ) -> Result<Self, FieldError> {
        if n[0] < 3 || n[1] < 3 {
            return Err(FieldError::Invalid(
                "grid needs at least 3 nodes per axis".into(),
            ));
        }
        if values.len() != n[0] * n[1] {
            return Err(FieldError::Invalid(
                "value count does not match grid".into(),
            ));
        }
        if !(domain.width() > T::zero() && domain.height() > T::zero()) {
            return Err(FieldError::Invalid("grid spacing must be positive".into()));
        }
        Ok(GridField {
            domain,
            n,
            dim,
            values,
        })
    }

    /// Node coordinates in storage order.
    pub fn nodes_of(domain: Rect<T>, n1: usize, n2: usize) -> Result<Vec<[T; 2]>, FieldError> {
        if n1 < 3 || n2 < 3 {
            return Err(FieldError::Invalid(
                "grid needs at least 3 nodes per axis".into(),
            ));
        }
        let h = [
            domain.width() / T::of_usize(n1 - 1),
            domain.height() / T::of_usize(n2 - 1),
        ];
        let mut out = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            for i in 0..n1 {
                out.push([
                    domain.min[0] + h[0] * T::of_usize(i),
                    domain.min[1] + h[1] * T::of_usize(j),
                ]);
            }
        }
        Ok(out)
    }

    pub fn spacing(&self) -> [T; 2] {
        [
            self.domain.width() / T::of_usize(self.n[0] - 1),
            self.domain.height() / T::of_usize(self.n[1] - 1),
        ]
    }

    pub fn node(&self, i: usize, j: usize) -> [T; 2] {
        let h = self.spacing();
        [
            self.domain.min[0] + h[0] * T::of_usize(i),
            self.domain.min[1] + h[1] * T::of_usize(j),
        ]
    }

    pub fn at(&self, i: usize, j: usize) -> [T; 4] {
        self.values[j * self.n[0] + i]
    }

    /// Second-order differenced Jacobian at a node (one-sided at edges).
    pub fn jacobian_at(&self, i: usize, j: usize) -> [[T; 2]; 4] {
        let h = self.spacing();
        let l = T::lit;
        let diff = |idx: [usize; 3],
                    hd: T,
                    forward: Option<bool>,
                    get: &dyn Fn(usize) -> [T; 4]|
         -> [T; 4] {
            let (a, b, c) = (get(idx[0]), get(idx[1]), get(idx[2]));
            std::array::from_fn(|k| match forward {
                None => (c[k] - a[k]) / (l(2.0) * hd),
                Some(true) => (-l(3.0) * a[k] + l(4.0) * b[k] - c[k]) / (l(2.0) * hd),
                Some(false) => (l(3.0) * c[k] - l(4.0) * b[k] + a[k]) / (l(2.0) * hd),
            })
        };
        let stencil = |p: usize, n: usize| -> ([usize; 3], Option<bool>) {
            if p == 0 {
                ([0, 1, 2], Some(true))
            } else if p == n - 1 {
                ([n - 3, n - 2, n - 1], Some(false))
            } else {
                ([p - 1, p, p + 1], None)
            }
        };
        let (s1, f1) = stencil(i, self.n[0]);
        let d1 = diff(s1, h[0], f1, &|p| self.at(p, j));
        let (s2, f2) = stencil(j, self.n[1]);
        let d2 = diff(s2, h[1], f2, &|p| self.at(i, p));
        std::array::from_fn(|k| [d1[k], d2[k]])
    }

    /// `alpha1,alpha2,f1,f2[,f3,f4]`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<(), FieldError> {
        let cols = if self.dim == 4 { ",f3,f4" } else { "" };
        writeln!(w, "alpha1,alpha2,f1,f2{cols}")?;
        for j in 0..self.n[1] {
            for i in 0..self.n[0] {
                let a = self.node(i, j);
                let v = self.at(i, j);
                write!(w, "{},{},{},{}", a[0], a[1], v[0], v[1])?;
                if self.dim == 4 {
                    write!(w, ",{},{}", v[2], v[3])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gerstner_value_at_origin() {
        let w = gerstner_w(1.0f64).unwrap().with_domain(unit_square());
        let v = w.value([0.0, 0.0]).unwrap();
        assert!((v[0] - 0.0).abs() < 1e-15 && (v[1] + 1.0).abs() < 1e-15);
        let j = w.jacobian([0.0, 0.0]).unwrap();
        assert_eq!([j[0], j[1]], [[1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn zero_wave_number_rejected() {
        assert!(gerstner_w(0.0f64).is_err());
    }

    #[test]
    fn out_of_domain_rejected() {
        let f = identity::<f64>(unit_square());
        assert!(matches!(
            f.value([2.0, 0.0]),
            Err(FieldError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn linear_cr_pair() {
        let (v, w) = cr_pair_from_polynomial(
            &[Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
            unit_square(),
        )
        .unwrap();
        let a = [0.3, -0.4];
        assert_eq!(&v.value(a).unwrap()[..2], &[0.3, 0.4]);
        assert_eq!(&w.value(a).unwrap()[..2], &[0.15, -0.2]);
    }
}
