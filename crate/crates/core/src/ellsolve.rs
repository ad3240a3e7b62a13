//! The linear system `L v = 0` obtained by freezing `w` in the rotation
//! system: principal symbol, its factorization, and a least-squares grid
//! solver.

use nalgebra::DMatrix;
use nalgebra_sparse::{factorization::CscCholesky, CooMatrix, CscMatrix};
use num_complex::Complex;
use thiserror::Error;

use crate::fields::{FieldError, GridField, LabelField};
use crate::scalar::Scalar;
use crate::symflow::{derive_rotation_system, DerivedSystem, SymflowError};

#[derive(Debug, Error)]
pub enum EllError {
    #[error("det(dw) = {det:e} at {alpha:?}")]
    DegenerateW { alpha: [f64; 2], det: f64 },
    #[error("least-squares solve did not converge: relative residual {residual:e}")]
    SolverDidNotConverge { residual: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Symflow(#[from] SymflowError),
}

/// Jacobian of `w` in the order `[w1_10, w1_01, w2_10, w2_01]`.
pub type WJets<T> = [T; 4];

/// First-order symbol `σ(ξ)`: row `e` is equation `q_e`, column `c` the
/// unknown `v^c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolMatrix<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> SymbolMatrix<T> {
    /// From the derived system with `w` frozen.
    pub fn new(sys: &DerivedSystem, dw: &WJets<T>, xi: [T; 2]) -> Result<Self, EllError> {
        let l = sys.linear_in_first_block(dw)?;
        Ok(SymbolMatrix {
            m: std::array::from_fn(|e| {
                std::array::from_fn(|c| l[e][2 * c] * xi[0] + l[e][2 * c + 1] * xi[1])
            }),
        })
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// `(w1_01 ξ1 − w1_10 ξ2)² + (w2_01 ξ1 − w2_10 ξ2)²`.
pub fn symbol_det<T: Scalar>(dw: &WJets<T>, xi: [T; 2]) -> T {
    let a = dw[1] * xi[0] - dw[0] * xi[1];
    let b = dw[3] * xi[0] - dw[2] * xi[1];
    a * a + b * b
}

/// The two complex linear factors `|w10|² ξ2 − (⟨w10, w01⟩ ± i det dw) ξ1`;
/// their product divided by `|w10|²` is [`symbol_det`].
pub fn symbol_factors<T: Scalar>(dw: &WJets<T>, xi: [T; 2]) -> [Complex<T>; 2] {
    let n10 = dw[0] * dw[0] + dw[2] * dw[2];
    let dot = dw[0] * dw[1] + dw[2] * dw[3];
    let det = dw[0] * dw[3] - dw[1] * dw[2];
    [
        Complex::new(n10 * xi[1] - dot * xi[0], -det * xi[0]),
        Complex::new(n10 * xi[1] - dot * xi[0], det * xi[0]),
    ]
}

/// `symbol_det` through the factorization.
pub fn factorized_symbol_det<T: Scalar>(dw: &WJets<T>, xi: [T; 2]) -> Complex<T> {
    let [p, q] = symbol_factors(dw, xi);
    let n10 = dw[0] * dw[0] + dw[2] * dw[2];
    p * q / n10
}

/// Minimum of `symbol_det` over `samples` points of the unit circle.
pub fn min_symbol_on_circle<T: Scalar>(dw: &WJets<T>, samples: usize) -> T {
    (0..samples.max(1))
        .map(|k| {
            let th = T::lit(std::f64::consts::TAU) * T::of_usize(k) / T::of_usize(samples.max(1));
            symbol_det(dw, [th.cos(), th.sin()])
        })
        .fold(T::infinity(), |m, x| m.min(x))
}

/// Which component of `v` carries the Dirichlet condition. The other one is
/// fixed at the lower-left node only, removing the constant kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryComponent {
    #[default]
    V1,
    V2,
}

#[derive(Clone, Copy, Debug)]
pub struct EllipticOptions {
    pub component: BoundaryComponent,
    /// Value of the other component at the lower-left node.
    pub gauge: f64,
    /// Reflection flags selecting the derived system.
    pub reflections: [bool; 2],
    /// Bound on the relative optimality residual `‖Aᵀ(Ax − b)‖ / ‖Aᵀb‖`.
    pub tolerance: f64,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        EllipticOptions {
            component: BoundaryComponent::V1,
            gauge: 0.0,
            reflections: [false, false],
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EllipticSolution<T> {
    pub v: GridField<T>,
    /// Max over nodes of `max(|q1|, |q2|)` with differenced `v`-jets.
    pub residual: T,
    /// Relative optimality residual of the least-squares solve.
    pub solver_residual: f64,
}

/// Second-order derivative stencil at index `p` of `n` points, weights in
/// units of `1/h` (one-sided at the ends).
pub fn stencil(p: usize, n: usize) -> [(usize, f64); 3] {
    if p == 0 {
        [(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if p == n - 1 {
        [(n - 3, 0.5), (n - 2, -2.0), (n - 1, 1.5)]
    } else {
        [(p - 1, -0.5), (p, 0.0), (p + 1, 0.5)]
    }
}

fn w_jets<T: Scalar>(w: &LabelField<T>, a: [T; 2]) -> Result<[f64; 4], EllError> {
    let j = w.jacobian(a)?;
    Ok([j[0][0], j[0][1], j[1][0], j[1][1]].map(|x| x.as_f64()))
}

/// Max over grid nodes of the derived-system residual with `v`-jets
/// differenced on the grid and `w`-jets from the field.
pub fn discrete_residual<T: Scalar>(
    sys: &DerivedSystem,
    v: &GridField<T>,
    w: &LabelField<T>,
) -> Result<T, EllError> {
    let mut worst = T::zero();
    for j in 0..v.n[1] {
        for i in 0..v.n[0] {
            let dv = v.jacobian_at(i, j);
            let dw = w.jacobian(v.node(i, j))?;
            let x = [
                dv[0][0], dv[0][1], dv[1][0], dv[1][1], dw[0][0], dw[0][1], dw[1][0], dw[1][1],
            ];
            let q = sys.eval(&x);
            worst = worst.max(q[0].abs()).max(q[1].abs());
        }
    }
    Ok(worst)
}

/// Solves `L v = 0` for `v` given `w`, the boundary values `bc` of one
/// component of `v`, and a gauge for the other, by linear least squares
/// over all `2 n1 n2` collocation equations.
pub fn solve_for_v<T: Scalar>(
    w: &LabelField<T>,
    n: [usize; 2],
    bc: impl Fn([T; 2]) -> T,
    opts: &EllipticOptions,
) -> Result<EllipticSolution<T>, EllError> {
    if n[0] < 16 || n[1] < 16 {
        return Err(EllError::Invalid("grid must be at least 16×16".into()));
    }
    let sys = derive_rotation_system(opts.reflections[0], opts.reflections[1])?;
    let domain = w.domain();
    let nodes = GridField::<T>::nodes_of(domain, n[0], n[1])?;
    let h = [
        domain.width().as_f64() / (n[0] - 1) as f64,
        domain.height().as_f64() / (n[1] - 1) as f64,
    ];
    let mut coeffs = Vec::with_capacity(nodes.len());
    for &a in &nodes {
        let dw = w_jets(w, a)?;
        let det = dw[0] * dw[3] - dw[1] * dw[2];
        let scale = 1.0 + dw.iter().map(|x| x * x).sum::<f64>();
        if det.abs() <= 1e-12 * scale {
            return Err(EllError::DegenerateW {
                alpha: [a[0].as_f64(), a[1].as_f64()],
                det,
            });
        }
        coeffs.push(sys.linear_in_first_block(&dw)?);
    }

    // Dof (k, c) = component c at node k; known dofs get value Some.
    let (bcomp, other) = match opts.component {
        BoundaryComponent::V1 => (0, 1),
        BoundaryComponent::V2 => (1, 0),
    };
    let nn = nodes.len();
    let mut known: Vec<Option<f64>> = vec![None; 2 * nn];
    for j in 0..n[1] {
        for i in 0..n[0] {
            if i == 0 || j == 0 || i == n[0] - 1 || j == n[1] - 1 {
                let k = j * n[0] + i;
                known[2 * k + bcomp] = Some(bc(nodes[k]).as_f64());
            }
        }
    }
    known[other] = Some(opts.gauge);
    let mut col = vec![usize::MAX; 2 * nn];
    let mut nu = 0;
    for (d, kv) in known.iter().enumerate() {
        if kv.is_none() {
            col[d] = nu;
            nu += 1;
        }
    }

    let mut coo = CooMatrix::new(2 * nn, nu);
    let mut b = vec![0.0; 2 * nn];
    for j in 0..n[1] {
        for i in 0..n[0] {
            let k = j * n[0] + i;
            let l = &coeffs[k];
            // Jet index 2c + d is derivative d of component c.
            for (d, (sten, hd)) in [(stencil(i, n[0]), h[0]), (stencil(j, n[1]), h[1])]
                .into_iter()
                .enumerate()
            {
                for (p, wgt) in sten {
                    if wgt == 0.0 {
                        continue;
                    }
                    let kk = if d == 0 { j * n[0] + p } else { p * n[0] + i };
                    for c in 0..2 {
                        let dof = 2 * kk + c;
                        for (e, row) in l.iter().enumerate() {
                            let a = row[2 * c + d] * wgt / hd;
                            if a == 0.0 {
                                continue;
                            }
                            match known[dof] {
                                Some(x) => b[2 * k + e] -= a * x,
                                None => coo.push(2 * k + e, col[dof], a),
                            }
                        }
                    }
                }
            }
        }
    }
    let a = CscMatrix::from(&coo);
    let at = a.transpose();
    let ata = &at * &a;
    let bm = DMatrix::from_column_slice(2 * nn, 1, &b);
    let atb = &at * &bm;
    // A failed factorization means the normal matrix is not positive definite.
    let chol = CscCholesky::factor(&ata).map_err(|_| EllError::SolverDidNotConverge {
        residual: f64::INFINITY,
    })?;
    let mut x = chol.solve(&atb);
    // One step of iterative refinement on the normal equations.
    let r = &atb - &ata * &x;
    x += chol.solve(&r);
    let opt = (&atb - &ata * &x).norm() / atb.norm().max(f64::MIN_POSITIVE);
    if !(opt <= opts.tolerance) {
        return Err(EllError::SolverDidNotConverge { residual: opt });
    }

    let values: Vec<[T; 4]> = (0..nn)
        .map(|k| {
            let get = |d: usize| known[d].unwrap_or_else(|| x[(col[d], 0)]);
            [
                T::lit(get(2 * k)),
                T::lit(get(2 * k + 1)),
                T::zero(),
                T::zero(),
            ]
        })
        .collect();
    let v = GridField::new(domain, n, 2, values)?;
    let residual = discrete_residual(&sys, &v, w)?;
    Ok(EllipticSolution {
        v,
        residual,
        solver_residual: opt,
    })
}
