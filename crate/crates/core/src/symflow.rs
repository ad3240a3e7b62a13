//! Symbolic derivation of the PDE systems for maps `φ(t, α) = A(t) u(α)` with
//! a 2×4 time matrix `A` and `u = (v | w): R² → R⁴`.
//!
//! The numeric modules consume [`DerivedSystem`] values produced here instead
//! of hard-coding the equations.

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratpoly::{
    buchberger, normal_form, AlgebraError, GroebnerBasis, Monomial, MonomialOrder, MultiPoly,
    Rational, Ring,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SymflowError {
    #[error("identity `{identity}` failed; residual {residual}")]
    IdentityFailed {
        identity: &'static str,
        residual: String,
    },
    #[error("matrix carries no second-derivative entries")]
    MissingSecondDerivatives,
    #[error("ring lacks jet variable {0}")]
    MissingJet(String),
    #[error("unexpected shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// First-order jets of `u = (u1, u2, u3, u4)` in the fixed layout used by
/// every numeric consumer.
pub const JET_NAMES: [&str; 8] = [
    "u1_10", "u1_01", "u2_10", "u2_01", "u3_10", "u3_01", "u4_10", "u4_01",
];

/// Component pairs `(ℓ, k)` of the six minors `g1..g6`.
pub const MINOR_PAIRS: [(usize, usize); 6] = [(2, 3), (1, 3), (0, 3), (1, 2), (0, 2), (0, 1)];

/// Index into [`JET_NAMES`] of `∂_dir u^{comp+1}` (`dir` 0 for α1).
pub fn jet_index(comp: usize, dir: usize) -> usize {
    2 * comp + dir
}

fn jet(ring: &Ring, comp: usize, dir: usize) -> MultiPoly {
    ring.var(JET_NAMES[jet_index(comp, dir)])
}

/// `g = u^ℓ_{10} u^k_{01} − u^ℓ_{01} u^k_{10}`.
pub fn jet_minor(ring: &Ring, l: usize, k: usize) -> MultiPoly {
    &(&jet(ring, l, 0) * &jet(ring, k, 1)) - &(&jet(ring, l, 1) * &jet(ring, k, 0))
}

/// The ring of the eight first-order jets alone.
pub fn jet_ring() -> Ring {
    Ring::new(JET_NAMES)
}

type Block = [[MultiPoly; 4]; 2];

/// A 2×4 matrix of polynomials in time-side variables, optionally with its
/// second time derivative, over a ring that also holds the jets of `u`.
#[derive(Clone, Debug)]
pub struct SymbolicBlockMatrix {
    ring: Ring,
    a: Block,
    app: Option<Block>,
}

fn block_from(ring: &Ring, f: impl Fn(usize, usize) -> MultiPoly) -> Block {
    let row = |i: usize| [f(i, 0), f(i, 1), f(i, 2), f(i, 3)];
    let _ = ring;
    [row(0), row(1)]
}

/// Variable order for the general-entry ring. The linear constraints then
/// eliminate `a14, a24` (and their second derivatives) and the normal forms
/// come out in the first block's entries.
const GENERAL_VARS: [&str; 16] = [
    "a14", "a24", "a14pp", "a24pp", "a13", "a23", "a13pp", "a23pp", "a12", "a22", "a12pp", "a22pp",
    "a11", "a21", "a11pp", "a21pp",
];

impl SymbolicBlockMatrix {
    pub fn new(ring: &Ring, a: Block, app: Option<Block>) -> Result<Self, SymflowError> {
        for n in JET_NAMES {
            if ring.index_of(n).is_none() {
                return Err(SymflowError::MissingJet(n.into()));
            }
        }
        Ok(SymbolicBlockMatrix {
            ring: ring.clone(),
            a,
            app,
        })
    }

    /// `(M1 | M2)` with `M_j` a rotation `[[c, −s], [s, c]]`, or a reflection
    /// `[[c, s], [s, −c]]` when `reflect[j]`, at angles `μt`, `θt`; the second
    /// derivative is `(−μ² M1 | −θ² M2)`.
    pub fn rotation(reflect: [bool; 2]) -> Self {
        let mut names: Vec<&str> = vec!["c1", "s1", "c2", "s2", "mu", "theta"];
        names.extend(JET_NAMES);
        let ring = Ring::new(names);
        let blocks = [("c1", "s1", "mu"), ("c2", "s2", "theta")];
        let entry = |i: usize, j: usize| -> MultiPoly {
            let (c, s, _) = blocks[j / 2];
            let (c, s) = (ring.var(c), ring.var(s));
            let refl = reflect[j / 2];
            match (i, j % 2, refl) {
                (0, 0, _) => c,
                (0, 1, false) => -&s,
                (0, 1, true) => s,
                (1, 0, _) => s,
                (1, 1, false) => c,
                (1, 1, true) => -&c,
                _ => unreachable!(),
            }
        };
        let a = block_from(&ring, entry);
        let app = block_from(&ring, |i, j| {
            let w = ring.var(blocks[j / 2].2);
            -&(&(&w * &w) * &entry(i, j))
        });
        SymbolicBlockMatrix {
            ring,
            a,
            app: Some(app),
        }
    }

    /// Independent entries `a_ij` with second derivatives `a_ij''` (named `aijpp`).
    pub fn general() -> Self {
        let mut names: Vec<&str> = GENERAL_VARS.to_vec();
        names.extend(JET_NAMES);
        let ring = Ring::new(names);
        let a = block_from(&ring, |i, j| ring.var(&format!("a{}{}", i + 1, j + 1)));
        let app = block_from(&ring, |i, j| ring.var(&format!("a{}{}pp", i + 1, j + 1)));
        SymbolicBlockMatrix {
            ring,
            a,
            app: Some(app),
        }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn entry(&self, i: usize, j: usize) -> &MultiPoly {
        &self.a[i][j]
    }

    pub fn second_derivative(&self, i: usize, j: usize) -> Option<&MultiPoly> {
        self.app.as_ref().map(|b| &b[i][j])
    }

    /// Time-side minor `a_{1ℓ} a_{2k} − a_{1k} a_{2ℓ}`.
    fn minor(&self, l: usize, k: usize) -> MultiPoly {
        &(&self.a[0][l] * &self.a[1][k]) - &(&self.a[0][k] * &self.a[1][l])
    }

    /// `B = AᵀA''`.
    fn b_matrix(&self) -> Result<Vec<Vec<MultiPoly>>, SymflowError> {
        let app = self
            .app
            .as_ref()
            .ok_or(SymflowError::MissingSecondDerivatives)?;
        Ok((0..4)
            .map(|l| {
                (0..4)
                    .map(|k| &(&self.a[0][l] * &app[0][k]) + &(&self.a[1][l] * &app[1][k]))
                    .collect()
            })
            .collect())
    }
}

/// `target = Σ p_i g_i` with time-side coefficients `p_i` and jet minors `g_i`
/// in the order of [`MINOR_PAIRS`].
#[derive(Clone, Debug)]
pub struct MinorExpansion {
    pub p: Vec<MultiPoly>,
    pub g: Vec<MultiPoly>,
    pub target: MultiPoly,
}

impl MinorExpansion {
    pub fn sum(&self) -> MultiPoly {
        let mut s = self.target.ring().zero();
        for (p, g) in self.p.iter().zip(&self.g) {
            s = &s + &(p * g);
        }
        s
    }

    fn checked(self, identity: &'static str) -> Result<Self, SymflowError> {
        let r = &self.sum() - &self.target;
        if r.is_zero() {
            Ok(self)
        } else {
            Err(SymflowError::IdentityFailed {
                identity,
                residual: r.to_string(),
            })
        }
    }
}

/// `det(dφ) = Σ p_i g_i` with `p_i` the 2×2 minors of `A`; checked against the
/// determinant of `A·du` expanded directly.
pub fn cauchy_binet_expand(m: &SymbolicBlockMatrix) -> Result<MinorExpansion, SymflowError> {
    let r = &m.ring;
    let dphi = |i: usize, d: usize| -> MultiPoly {
        let mut s = r.zero();
        for j in 0..4 {
            s = &s + &(&m.a[i][j] * &jet(r, j, d));
        }
        s
    };
    let target = &(&dphi(0, 0) * &dphi(1, 1)) - &(&dphi(0, 1) * &dphi(1, 0));
    let p = MINOR_PAIRS.iter().map(|&(l, k)| m.minor(l, k)).collect();
    let g = MINOR_PAIRS
        .iter()
        .map(|&(l, k)| jet_minor(r, l, k))
        .collect();
    MinorExpansion { p, g, target }.checked("cauchy-binet")
}

/// `N12 = Σ_{ℓ,k} B_ℓk (u^ℓ_{;2} u^k_{;1} − u^ℓ_{;1} u^k_{;2}) = Σ f_i g_i`, the
/// curl of `y_i = u^ℓ_{;i} B_ℓk u^k`, with `f = B_kℓ − B_ℓk` per minor pair.
#[allow(clippy::needless_range_loop)]
pub fn n12_expand(m: &SymbolicBlockMatrix) -> Result<MinorExpansion, SymflowError> {
    let r = &m.ring;
    let b = m.b_matrix()?;
    let mut target = r.zero();
    for l in 0..4 {
        for k in 0..4 {
            let w = &(&jet(r, l, 1) * &jet(r, k, 0)) - &(&jet(r, l, 0) * &jet(r, k, 1));
            target = &target + &(&b[l][k] * &w);
        }
    }
    let p = MINOR_PAIRS
        .iter()
        .map(|&(l, k)| &b[k][l] - &b[l][k])
        .collect();
    let g = MINOR_PAIRS
        .iter()
        .map(|&(l, k)| jet_minor(r, l, k))
        .collect();
    MinorExpansion { p, g, target }.checked("n12-expansion")
}

/// Which family a [`DerivedSystem`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Two rotation/reflection blocks at different constant speeds.
    Rotation { reflections: [bool; 2] },
    /// The constrained general matrix; the equations are transport equations.
    Transport,
}

/// Two quadratic equations in the eight first-order jets of `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedSystem {
    pub kind: SystemKind,
    pub jets: Vec<String>,
    pub equations: [String; 2],
    /// `coefficients[e][a][b]` multiplies `x_a x_b` (`a <= b`) in equation `e`.
    pub coefficients: [[[i64; 8]; 8]; 2],
    /// For rotation systems, `N12 = n12_factors[0]·q1 + n12_factors[1]·q2`
    /// modulo the trigonometric relations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n12_factors: Option<[String; 2]>,
}

fn quadratic_coefficients(p: &MultiPoly) -> Result<[[i64; 8]; 8], SymflowError> {
    let mut out = [[0i64; 8]; 8];
    for (m, c) in p.terms() {
        let support: Vec<(usize, u32)> = m.support().collect();
        let (a, b) = match support.as_slice() {
            [(a, 2)] => (*a, *a),
            [(a, 1), (b, 1)] => (*a, *b),
            _ => return Err(SymflowError::Shape(format!("{p} is not a quadratic form"))),
        };
        if !c.is_integer() {
            return Err(SymflowError::Shape(format!(
                "non-integer coefficient in {p}"
            )));
        }
        out[a.min(b)][a.max(b)] = c.to_integer().to_i64().unwrap_or(0);
    }
    Ok(out)
}

impl DerivedSystem {
    fn from_polys(
        kind: SystemKind,
        q: [MultiPoly; 2],
        n12_factors: Option<[String; 2]>,
    ) -> Result<Self, SymflowError> {
        let jr = jet_ring();
        let q = [q[0].to_ring(&jr)?, q[1].to_ring(&jr)?];
        Ok(DerivedSystem {
            kind,
            jets: JET_NAMES.iter().map(|s| s.to_string()).collect(),
            equations: [q[0].to_string(), q[1].to_string()],
            coefficients: [
                quadratic_coefficients(&q[0])?,
                quadratic_coefficients(&q[1])?,
            ],
            n12_factors,
        })
    }

    /// The equations as polynomials over [`jet_ring`].
    pub fn polys(&self) -> Result<[MultiPoly; 2], SymflowError> {
        let r = jet_ring();
        Ok([r.parse(&self.equations[0])?, r.parse(&self.equations[1])?])
    }

    /// Evaluates both equations at jets laid out as [`JET_NAMES`].
    pub fn eval<T: Scalar>(&self, x: &[T; 8]) -> [T; 2] {
        let mut out = [T::zero(); 2];
        for (e, c) in self.coefficients.iter().enumerate() {
            for a in 0..8 {
                for b in a..8 {
                    if c[a][b] != 0 {
                        out[e] = out[e] + T::lit(c[a][b] as f64) * x[a] * x[b];
                    }
                }
            }
        }
        out
    }

    /// Largest absolute coefficient sum, a natural scale for residual tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| {
                c.iter()
                    .flatten()
                    .map(|v| v.unsigned_abs() as f64)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Linear operator in the jets of `u1, u2` once the jets of `u3, u4` are
    /// fixed: `q_e = Σ_j L[e][j] x_j`, `j` over the first four jets.
    /// Fails if some equation is not bilinear in the two blocks.
    pub fn linear_in_first_block<T: Scalar>(
        &self,
        w: &[T; 4],
    ) -> Result<[[T; 4]; 2], SymflowError> {
        let mut out = [[T::zero(); 4]; 2];
        for (e, c) in self.coefficients.iter().enumerate() {
            for a in 0..8 {
                for b in a..8 {
                    if c[a][b] == 0 {
                        continue;
                    }
                    if !(a < 4 && b >= 4) {
                        return Err(SymflowError::Shape(format!(
                            "equation {e} couples {} and {}",
                            JET_NAMES[a], JET_NAMES[b]
                        )));
                    }
                    out[e][a] = out[e][a] + T::lit(c[a][b] as f64) * w[b - 4];
                }
            }
        }
        Ok(out)
    }

    /// Same system with the roles of the two blocks exchanged
    /// (`u1 ↔ u3`, `u2 ↔ u4`).
    pub fn swap_blocks(&self) -> Result<DerivedSystem, SymflowError> {
        let r = jet_ring();
        let map: Vec<(usize, MultiPoly)> = (0..8).map(|i| (i, r.var_at((i + 4) % 8))).collect();
        let [q1, q2] = self.polys()?;
        let kind = match self.kind {
            SystemKind::Rotation {
                reflections: [a, b],
            } => SystemKind::Rotation {
                reflections: [b, a],
            },
            k => k,
        };
        DerivedSystem::from_polys(
            kind,
            [q1.substitute_many(&map), q2.substitute_many(&map)],
            None,
        )
    }
}

fn trig_basis(ring: &Ring) -> Result<GroebnerBasis, SymflowError> {
    let gens = [
        ring.parse("c1^2 + s1^2 - 1")?,
        ring.parse("c2^2 + s2^2 - 1")?,
    ];
    Ok(buchberger(&gens, &MonomialOrder::DegRevLex)?)
}

/// Coefficient vectors (one entry per minor) of each trigonometric monomial
/// after reducing the time-side coefficients modulo the trig ideal.
fn trig_components(
    coeffs: &[MultiPoly],
    gb: &GroebnerBasis,
) -> Result<std::collections::BTreeMap<Monomial, Vec<MultiPoly>>, SymflowError> {
    let ring = gb.ring().clone();
    let trig = [0usize, 1, 2, 3];
    let mut out: std::collections::BTreeMap<Monomial, Vec<MultiPoly>> = Default::default();
    for (i, c) in coeffs.iter().enumerate() {
        let nf = normal_form(c, gb)?;
        for (m, part) in nf.collect_in(&trig) {
            out.entry(m)
                .or_insert_with(|| vec![ring.zero(); coeffs.len()])[i] = part;
        }
    }
    Ok(out)
}

fn trig_monomial(ring: &Ring, text: &str) -> Monomial {
    let p = ring.parse(text).expect("fixed monomial text");
    let m = p.terms().next().expect("nonzero").0.clone();
    m
}

fn dot(v: &[MultiPoly], g: &[MultiPoly]) -> MultiPoly {
    let mut s = g[0].ring().zero();
    for (a, b) in v.iter().zip(g) {
        s = &s + &(a * b);
    }
    s
}

fn rational_vector(v: &[MultiPoly]) -> Option<Vec<Rational>> {
    v.iter()
        .map(|p| {
            if p.is_constant() {
                Some(p.constant_term())
            } else {
                None
            }
        })
        .collect()
}

/// Writes `h = a·q1 + b·q2` for vectors over the minors, with `q1`, `q2`
/// rational and of disjoint support.
fn decompose(h: &[MultiPoly], q1: &[Rational], q2: &[Rational]) -> Option<(MultiPoly, MultiPoly)> {
    let i1 = (0..6).find(|&i| !q1[i].is_zero() && q2[i].is_zero())?;
    let i2 = (0..6).find(|&i| !q2[i].is_zero() && q1[i].is_zero())?;
    let a = h[i1].scale(&(Rational::one() / &q1[i1]));
    let b = h[i2].scale(&(Rational::one() / &q2[i2]));
    let ok = (0..6).all(|i| h[i] == &a.scale(&q1[i]) + &b.scale(&q2[i]));
    ok.then_some((a, b))
}

/// `(q1, q2)` for two rotation/reflection blocks, read off from the
/// Cauchy–Binet expansion of `det(dφ)` and checked against the `N12` expansion:
/// `q1 = q2 = 0` makes `det(dφ)` constant in time and `N12` vanish.
pub fn derive_rotation_system(
    reflect1: bool,
    reflect2: bool,
) -> Result<DerivedSystem, SymflowError> {
    let m = SymbolicBlockMatrix::rotation([reflect1, reflect2]);
    let ring = m.ring().clone();
    let gb = trig_basis(&ring)?;
    let det = cauchy_binet_expand(&m)?;
    let comps = trig_components(&det.p, &gb)?;

    let one = Monomial::one();
    let mixed: Vec<Monomial> = ["c1*c2", "s1*s2", "s1*c2", "c1*s2"]
        .iter()
        .map(|t| trig_monomial(&ring, t))
        .collect();
    if let Some(extra) = comps.keys().find(|k| **k != one && !mixed.contains(k)) {
        return Err(SymflowError::Shape(format!(
            "unexpected time dependence {}",
            MultiPoly::monomial(&ring, extra.clone(), Rational::one())
        )));
    }
    let zero_vec = vec![ring.zero(); 6];
    let get = |m: &Monomial| comps.get(m).cloned().unwrap_or_else(|| zero_vec.clone());
    let v: Vec<Vec<Rational>> = mixed
        .iter()
        .map(|m| {
            rational_vector(&get(m))
                .ok_or_else(|| SymflowError::Shape("speed-dependent minor".into()))
        })
        .collect::<Result<_, _>>()?;
    // The four mixed products pair up: (c1c2, s1s2) and (s1c2, c1s2) share a
    // coefficient vector up to sign.
    let same_up_to_sign =
        |a: &[Rational], b: &[Rational]| a == b || a.iter().zip(b).all(|(x, y)| *x == -y.clone());
    if !same_up_to_sign(&v[0], &v[1]) || !same_up_to_sign(&v[2], &v[3]) {
        return Err(SymflowError::Shape(
            "mixed trig coefficients do not pair".into(),
        ));
    }
    let qv1 = v[0].clone();
    let qv2 = v[2].clone();
    let as_poly = |v: &[Rational]| -> Vec<MultiPoly> {
        v.iter()
            .map(|c| MultiPoly::constant(&ring, c.clone()))
            .collect()
    };
    let q1 = dot(&as_poly(&qv1), &det.g);
    let q2 = dot(&as_poly(&qv2), &det.g);
    if q1.is_zero() || q2.is_zero() {
        return Err(SymflowError::Shape("degenerate derived system".into()));
    }

    // det(dφ) = const + Σ τ q-combination: re-expand and compare.
    let mut rebuilt = dot(&get(&one), &det.g);
    for (t, m) in mixed.iter().enumerate() {
        let q = if t < 2 { &q1 } else { &q2 };
        let sign = if v[t] == if t < 2 { qv1.clone() } else { qv2.clone() } {
            Rational::one()
        } else {
            -Rational::one()
        };
        rebuilt = &rebuilt + &q.mul_monomial(m, &sign);
    }
    let residual = normal_form(&(&rebuilt - &det.target), &gb)?;
    if !residual.is_zero() {
        return Err(SymflowError::IdentityFailed {
            identity: "det-rebuild",
            residual: residual.to_string(),
        });
    }

    // N12 must lie in the span of q1, q2 over the time-side ring.
    let n12 = n12_expand(&m)?;
    let ncomps = trig_components(&n12.p, &gb)?;
    let mut fa = ring.zero();
    let mut fb = ring.zero();
    for (mono, h) in &ncomps {
        let (a, b) = decompose(h, &qv1, &qv2).ok_or_else(|| SymflowError::IdentityFailed {
            identity: "n12-in-span",
            residual: dot(h, &n12.g).to_string(),
        })?;
        fa = &fa + &a.mul_monomial(mono, &Rational::one());
        fb = &fb + &b.mul_monomial(mono, &Rational::one());
    }
    let check = normal_form(&(&(&(&fa * &q1) + &(&fb * &q2)) - &n12.target), &gb)?;
    if !check.is_zero() {
        return Err(SymflowError::IdentityFailed {
            identity: "n12-factorization",
            residual: check.to_string(),
        });
    }
    DerivedSystem::from_polys(
        SystemKind::Rotation {
            reflections: [reflect1, reflect2],
        },
        [q1, q2],
        Some([fa.to_string(), fb.to_string()]),
    )
}

/// The rotation system in its published form, written in `u`
/// jets (`v = (u1, u2)`, `w = (u3, u4)`).
pub fn printed_rotation_system() -> [MultiPoly; 2] {
    let r = jet_ring();
    [
        r.parse("u3_10*u2_01 - u3_01*u2_10 - u4_10*u1_01 + u4_01*u1_10")
            .expect("fixed text"),
        r.parse("u4_10*u2_01 - u4_01*u2_10 + u3_10*u1_10 - u3_01*u1_10")
            .expect("fixed text"),
    ]
}

/// Comparison between the printed statement and the derived system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrintedComparison {
    pub printed: [String; 2],
    pub derived: [String; 2],
    /// `printed − derived` per equation.
    pub difference: [String; 2],
}

pub fn compare_printed_rotation_system() -> Result<PrintedComparison, SymflowError> {
    let d = derive_rotation_system(false, false)?.polys()?;
    let p = printed_rotation_system();
    Ok(PrintedComparison {
        printed: [p[0].to_string(), p[1].to_string()],
        derived: [d[0].to_string(), d[1].to_string()],
        difference: [(&p[0] - &d[0]).to_string(), (&p[1] - &d[1]).to_string()],
    })
}

/// Results of the normal-form chain for the constrained general matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Thm56Report {
    /// Normal forms of the six `p_i` modulo the algebraic constraints.
    pub p_normal_forms: Vec<String>,
    /// `det(dφ) = g1 + g2 + g3 − g4 + p5 (g4 + g5) + g6` holds.
    pub det_formula_holds: bool,
    /// `NF(f2) = NF(f3) = NF(f6)` modulo `I1`, with this common value.
    pub common_normal_form: String,
    /// `NF(f_i, I2)`.
    pub reduced_f: Vec<String>,
    /// `f̂1 + f̂4 − f̂5` (zero when the chain holds).
    pub relation_residual: String,
    /// `f̂1`, the factor in `N12 = f̂1 (g1 − g4)` modulo `g4 + g5`.
    pub n12_factor: String,
    /// The transport system `g4 + g5 = 0`, `g1 − g4 = 0`.
    pub transport: DerivedSystem,
    /// The two transport equations as printed, and `derived − printed`.
    pub printed_transport: [String; 2],
    pub printed_discrepancy: [String; 2],
}

/// Time-side constraints on the general matrix.
pub fn constraint_ideal(ring: &Ring) -> Result<Vec<MultiPoly>, SymflowError> {
    Ok(vec![
        ring.parse("a11*a22 - a12*a21 - 1")?,
        ring.parse("a13*a24 - a14*a23 - 1")?,
        ring.parse("a14 - a12 + a11")?,
        ring.parse("a24 - a22 + a21")?,
    ])
}

/// The extra constraint `a21''a22 − a22''a21 + a11''a12 − a12''a11` on `A''`.
pub const SECOND_ORDER_CONSTRAINT: &str = "a21pp*a22 - a22pp*a21 + a11pp*a12 - a12pp*a11";

fn fail(identity: &'static str, residual: &MultiPoly) -> SymflowError {
    SymflowError::IdentityFailed {
        identity,
        residual: residual.to_string(),
    }
}

/// Runs the normal-form chain that reduces `det(dφ)` and `N12` for the
/// constrained general matrix to the transport system. Every identity is
/// checked exactly; the first failure aborts with its residual.
pub fn verify_thm56() -> Result<Thm56Report, SymflowError> {
    let m = SymbolicBlockMatrix::general();
    let ring = m.ring().clone();
    let order = MonomialOrder::DegRevLex;
    let i0 = constraint_ideal(&ring)?;
    let gb0 = buchberger(&i0, &order)?;

    let det = cauchy_binet_expand(&m)?;
    let pn: Vec<MultiPoly> = det
        .p
        .iter()
        .map(|p| normal_form(p, &gb0))
        .collect::<Result<_, _>>()?;
    let g = &det.g;
    let one = ring.one();
    let expected_det =
        &(&(&(&g[0] + &g[1]) + &g[2]) - &g[3]) + &(&(&pn[4] * &(&g[3] + &g[4])) + &g[5]);
    let det_res = &dot(&pn, g) - &expected_det;
    if !det_res.is_zero() {
        return Err(fail("det-formula", &det_res));
    }
    for i in [0, 1, 2, 5] {
        if pn[i] != one {
            return Err(fail("det-formula", &pn[i]));
        }
    }

    let mut i1 = i0.clone();
    i1.push(ring.parse("a14pp - a12pp + a11pp")?);
    i1.push(ring.parse("a24pp - a22pp + a21pp")?);
    let gb1 = buchberger(&i1, &order)?;
    let n12 = n12_expand(&m)?;
    let nf1: Vec<MultiPoly> = n12
        .p
        .iter()
        .map(|f| normal_form(f, &gb1))
        .collect::<Result<_, _>>()?;
    let target = ring.parse(SECOND_ORDER_CONSTRAINT)?;
    for i in [1, 2, 5] {
        if nf1[i] != target {
            return Err(fail("nf-f2-f3-f6", &(&nf1[i] - &target)));
        }
    }

    let mut i2 = i1.clone();
    i2.push(target.clone());
    let gb2 = buchberger(&i2, &order)?;
    let fh: Vec<MultiPoly> = n12
        .p
        .iter()
        .map(|f| normal_form(f, &gb2))
        .collect::<Result<_, _>>()?;
    for i in [1, 2, 5] {
        if !fh[i].is_zero() {
            return Err(fail("n12-support", &fh[i]));
        }
    }
    let relation = &(&fh[0] + &fh[3]) - &fh[4];
    if !relation.is_zero() {
        return Err(fail("fhat-relation", &relation));
    }
    // N12 − f̂1 (g1 − g4) is a multiple of g4 + g5.
    let n12_red = dot(&fh, g);
    let t1 = &g[3] + &g[4];
    let t2 = &g[0] - &g[3];
    let rest = &(&n12_red - &(&fh[0] * &t2)) - &(&(&fh[0] + &fh[3]) * &t1);
    if !rest.is_zero() {
        return Err(fail("n12-factorization", &rest));
    }
    let full = normal_form(&(&n12.target - &n12_red), &gb2)?;
    if !full.is_zero() {
        return Err(fail("n12-reduction", &full));
    }

    let transport =
        DerivedSystem::from_polys(SystemKind::Transport, [t1.clone(), t2.clone()], None)?;
    let jr = jet_ring();
    let printed = [
        jr.parse("-u3_10*u2_01 + u3_01*u2_10 - u3_10*u1_01 + u3_01*u1_10")?,
        jr.parse("-u4_10*u3_01 + u4_01*u3_10 - u3_10*u1_01 + u3_01*u1_10")?,
    ];
    let derived = transport.polys()?;
    Ok(Thm56Report {
        p_normal_forms: pn.iter().map(|p| p.to_string()).collect(),
        det_formula_holds: true,
        common_normal_form: target.to_string(),
        reduced_f: fh.iter().map(|p| p.to_string()).collect(),
        relation_residual: relation.to_string(),
        n12_factor: fh[0].to_string(),
        printed_transport: [printed[0].to_string(), printed[1].to_string()],
        printed_discrepancy: [
            (&derived[0] - &printed[0]).to_string(),
            (&derived[1] - &printed[1]).to_string(),
        ],
        transport,
    })
}

/// `true` when every coefficient of `p` is an integer of absolute value one.
pub fn has_unit_coefficients(p: &MultiPoly) -> bool {
    p.terms().all(|(_, c)| c.is_integer() && c.abs().is_one())
}
