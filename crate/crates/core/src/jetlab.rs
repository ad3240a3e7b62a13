//! Polynomial PDE systems in jet coordinates for two independent variables:
//! total derivatives, prolongation, the affine-rigidity computation for
//! harmonic area-preserving maps and the Killing-equation example.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratpoly::{
    elimination_ideal, ideal_dimension, normal_form, sos_split, AlgebraError, BaseOrder, Ideal,
    MonomialOrder, MultiPoly, Ring,
};

#[derive(Debug, Error)]
pub enum JetError {
    #[error("total derivative would need order {needed} jets, space stops at {max}")]
    OrderExceeded { needed: u32, max: u32 },
    #[error("jet space supports 1 or 2 functions, got {0}")]
    UnsupportedFunctions(usize),
    #[error("Killing system implemented for n = 2 only, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("rigidity pipeline failed at stage `{stage}`: {detail}")]
    Stage { stage: &'static str, detail: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `u^k_ν`: the ν-th partial derivative of component `k` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JetVariable {
    pub function: usize,
    pub nu: [u32; 2],
}

impl JetVariable {
    pub fn new(function: usize, nu1: u32, nu2: u32) -> Self {
        JetVariable {
            function,
            nu: [nu1, nu2],
        }
    }

    pub fn order(&self) -> u32 {
        self.nu[0] + self.nu[1]
    }

    /// Canonical name `u{k}_{ν1}{ν2}`.
    pub fn name(&self) -> String {
        format!("u{}_{}{}", self.function, self.nu[0], self.nu[1])
    }

    pub fn shifted(&self, direction: usize) -> JetVariable {
        let mut nu = self.nu;
        nu[direction] += 1;
        JetVariable { nu, ..*self }
    }
}

/// Jet coordinates `u^k_ν`, `|ν| <= max_order`, as a polynomial ring.
///
/// Variables are laid out by decreasing order; within one order by function,
/// then by increasing `ν1`. Highest-order jets come first, which is the layout
/// elimination orders want, and pure `x2` derivatives lead within an order so
/// that the Laplacian eliminates them in favour of the `x1` ones.
#[derive(Clone, Debug)]
pub struct JetSpace {
    functions: usize,
    max_order: u32,
    vars: Vec<JetVariable>,
    ring: Ring,
}

impl JetSpace {
    pub fn new(functions: usize, max_order: u32) -> Result<Self, JetError> {
        if !(1..=2).contains(&functions) {
            return Err(JetError::UnsupportedFunctions(functions));
        }
        let mut vars = Vec::new();
        for q in (0..=max_order).rev() {
            for k in 1..=functions {
                for nu1 in 0..=q {
                    vars.push(JetVariable::new(k, nu1, q - nu1));
                }
            }
        }
        let ring = Ring::new(vars.iter().map(JetVariable::name));
        Ok(JetSpace {
            functions,
            max_order,
            vars,
            ring,
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn functions(&self) -> usize {
        self.functions
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn variables(&self) -> &[JetVariable] {
        &self.vars
    }

    pub fn index(&self, v: JetVariable) -> Option<usize> {
        self.ring.index_of(&v.name())
    }

    /// The jet variable as a polynomial. Panics outside the space.
    pub fn jet(&self, function: usize, nu1: u32, nu2: u32) -> MultiPoly {
        self.ring.var(&JetVariable::new(function, nu1, nu2).name())
    }

    /// Ids of the jets of exactly order `q`.
    pub fn ids_of_order(&self, q: u32) -> Vec<usize> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].order() == q)
            .collect()
    }

    /// Ids of the jets of order at most `q`.
    pub fn ids_up_to(&self, q: u32) -> Vec<usize> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].order() <= q)
            .collect()
    }

    /// Highest jet order occurring in `f` (0 for constants).
    pub fn order_of(&self, f: &MultiPoly) -> u32 {
        f.variables()
            .iter()
            .map(|&i| self.vars[i].order())
            .max()
            .unwrap_or(0)
    }

    /// Formal total derivative in direction `direction` (0 for `x1`, 1 for `x2`):
    /// every `u^k_ν` goes to `u^k_{ν+e}`, extended by the product rule.
    pub fn total_derivative(&self, f: &MultiPoly, direction: usize) -> Result<MultiPoly, JetError> {
        assert!(direction < 2, "direction must be 0 or 1");
        let mut out = self.ring.zero();
        for i in f.variables() {
            let next = self.vars[i].shifted(direction);
            let j = self.index(next).ok_or(JetError::OrderExceeded {
                needed: next.order(),
                max: self.max_order,
            })?;
            out = &out + &(&f.derivative(i) * &self.ring.var_at(j));
        }
        Ok(out)
    }
}

/// A system of polynomial equations `F = 0` on a jet space.
#[derive(Clone, Debug)]
pub struct JetSystem {
    pub space: JetSpace,
    pub equations: Vec<MultiPoly>,
}

impl JetSystem {
    pub fn new(space: JetSpace, equations: Vec<MultiPoly>) -> Self {
        JetSystem { space, equations }
    }

    pub fn order(&self) -> u32 {
        self.equations
            .iter()
            .map(|e| self.space.order_of(e))
            .max()
            .unwrap_or(0)
    }

    /// Appends total derivatives of every equation up to order `order() + times`.
    /// Derivatives that coincide (up to a constant factor) with an equation
    /// already present are not repeated.
    pub fn prolong(&self, times: u32) -> Result<JetSystem, JetError> {
        let target = self.order() + times;
        let key_order = MonomialOrder::DegRevLex;
        let mut eqs = self.equations.clone();
        let mut keys: Vec<MultiPoly> = eqs.iter().map(|e| e.monic(&key_order)).collect();
        let mut frontier = eqs.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for e in &frontier {
                if e.is_constant() || self.space.order_of(e) >= target {
                    continue;
                }
                for dir in 0..2 {
                    let d = self.space.total_derivative(e, dir)?;
                    if d.is_zero() {
                        continue;
                    }
                    let k = d.monic(&key_order);
                    if !keys.contains(&k) {
                        keys.push(k);
                        eqs.push(d.clone());
                        next.push(d);
                    }
                }
            }
            frontier = next;
        }
        Ok(JetSystem {
            space: self.space.clone(),
            equations: eqs,
        })
    }
}

/// Dimension pair for the rigidity computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// `dim V(I_{3,8})` over the complex numbers.
    pub complex: usize,
    /// Dimension after adjoining the square roots extracted from the
    /// sums of squares (the real radical).
    pub real: usize,
}

/// Outcome of [`prove_affine_rigidity`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RigidityReport {
    /// Reduced basis of the projection of the prolonged system to order two.
    pub eliminated_basis: Vec<String>,
    /// Basis elements recognised as positive sums of squares.
    pub sums_of_squares: Vec<String>,
    /// Square roots extracted from them; these vanish on the real variety.
    pub sos_generators: Vec<String>,
    /// Second-order jets forced to zero.
    pub vanishing_jets: Vec<String>,
    /// What remains of the real radical besides the vanishing jets.
    pub residual_constraints: Vec<String>,
    pub dimensions: Dimensions,
    /// Number of equations after one prolongation.
    pub prolonged_equations: usize,
    pub order: BaseOrder,
    pub notes: Vec<String>,
}

/// Harmonic area-preserving maps `y: R^2 -> R^2`: `{det dy - 1, its first
/// total derivatives, Δy^1, Δy^2}` on the jet space of order three.
pub fn rigidity_system() -> Result<JetSystem, JetError> {
    let space = JetSpace::new(2, 3)?;
    let r = space.ring().clone();
    let f1 = r.parse("u1_10*u2_01 - u1_01*u2_10 - 1")?;
    let f2 = space.total_derivative(&f1, 0)?;
    let f3 = space.total_derivative(&f1, 1)?;
    let f4 = r.parse("u1_20 + u1_02")?;
    let f5 = r.parse("u2_20 + u2_02")?;
    Ok(JetSystem::new(space, vec![f1, f2, f3, f4, f5]))
}

fn stage(stage: &'static str, detail: impl Into<String>) -> JetError {
    JetError::Stage {
        stage,
        detail: detail.into(),
    }
}

/// Shows that harmonic area-preserving maps of the plane are affine.
///
/// Prolongs the second-order system once, projects back to order two by an
/// elimination ideal, extracts the sums of squares from the projected basis
/// and checks that their square roots kill every second-order jet. Each stage
/// checks the shape it expects and fails with the stage name otherwise.
pub fn prove_affine_rigidity(within: BaseOrder) -> Result<RigidityReport, JetError> {
    let sys = rigidity_system()?;
    let space = sys.space.clone();
    let ring = space.ring().clone();
    let mut notes = vec!["f2, f3 are generated as the first total derivatives of f1".to_string()];

    let prolonged = sys.prolong(1)?;
    let added = prolonged.equations.len() - sys.equations.len();
    if added != 7 || prolonged.order() != 3 {
        return Err(stage(
            "prolong",
            format!("expected 7 new third-order equations, got {added}"),
        ));
    }

    let keep = space.ids_up_to(2);
    let ideal = Ideal::new(&ring, prolonged.equations.iter().cloned())?;
    let elim = elimination_ideal(&ideal, &keep, &MonomialOrder::base(within))?;
    if elim.basis.is_empty() {
        return Err(stage("eliminate", "empty elimination ideal"));
    }

    // The projected ideal lives in Q[y, y_1, y_2].
    let low = Ring::new(keep.iter().map(|&i| ring.name(i).to_string()));
    let low_order = MonomialOrder::base(within);
    let basis_low: Vec<MultiPoly> = elim
        .basis
        .iter()
        .map(|g| g.to_ring(&low))
        .collect::<Result<_, _>>()?;
    let gb_low = Ideal::new(&low, basis_low.iter().cloned())?.groebner(&low_order)?;

    // Sums of squares are a property of the ideal, not of the basis; a lex
    // basis can hide some of them, so the degrevlex basis is searched too.
    let mut candidates = gb_low.elements().to_vec();
    if within != BaseOrder::DegRevLex {
        let alt = MonomialOrder::base(BaseOrder::DegRevLex);
        for g in Ideal::new(&low, basis_low.iter().cloned())?
            .groebner(&alt)?
            .elements()
        {
            if !candidates.contains(g) {
                candidates.push(g.clone());
            }
        }
        notes.push(
            "sums of squares were also sought in a degrevlex basis of the same ideal".to_string(),
        );
    }
    let mut sums_of_squares = Vec::new();
    let mut roots: Vec<MultiPoly> = Vec::new();
    for g in &candidates {
        if g.is_constant() {
            continue;
        }
        if let Ok(parts) = sos_split(g) {
            sums_of_squares.push(g.clone());
            for p in parts {
                if !roots.contains(&p) {
                    roots.push(p);
                }
            }
        }
    }
    if sums_of_squares.is_empty() {
        return Err(stage("sos", "no sum of squares in the eliminated basis"));
    }

    let real_ideal = Ideal::new(
        &low,
        gb_low
            .elements()
            .iter()
            .cloned()
            .chain(roots.iter().cloned()),
    )?;
    let gb_real = real_ideal.groebner(&low_order)?;
    let second: Vec<MultiPoly> = space
        .ids_of_order(2)
        .into_iter()
        .map(|i| low.var(ring.name(i)))
        .collect();
    let mut vanishing = Vec::new();
    for j in &second {
        if !normal_form(j, &gb_real)?.is_zero() {
            return Err(stage("real-radical", format!("{j} does not vanish")));
        }
        vanishing.push(j.to_string());
    }
    let f1_low = sys.equations[0].to_ring(&low)?;
    let residual: Vec<MultiPoly> = gb_real
        .elements()
        .iter()
        .filter(|g| !second.contains(g))
        .cloned()
        .collect();
    if residual.len() != 1 || residual[0] != f1_low.monic(&low_order) {
        return Err(stage(
            "real-radical",
            format!(
                "expected det(dy) - 1 to remain, got [{}]",
                residual
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ));
    }

    let complex = ideal_dimension(&gb_low)?.ok_or_else(|| stage("dimension", "empty variety"))?;
    let real =
        ideal_dimension(&gb_real)?.ok_or_else(|| stage("dimension", "empty real variety"))?;
    notes.push(format!(
        "ring Q[y,y1,y2] has {} variables; elimination used a two-block {:?} order",
        low.len(),
        within
    ));

    Ok(RigidityReport {
        eliminated_basis: gb_low.elements().iter().map(|p| p.to_string()).collect(),
        sums_of_squares: sums_of_squares.iter().map(|p| p.to_string()).collect(),
        sos_generators: roots.iter().map(|p| p.to_string()).collect(),
        vanishing_jets: vanishing,
        residual_constraints: residual.iter().map(|p| p.to_string()).collect(),
        dimensions: Dimensions { complex, real },
        prolonged_equations: prolonged.equations.len(),
        order: within,
        notes,
    })
}

/// Killing equations `∂_j u^i + ∂_i u^j = 0` in the plane.
pub fn killing_system(n: usize) -> Result<JetSystem, JetError> {
    if n != 2 {
        return Err(JetError::UnsupportedDimension(n));
    }
    let space = JetSpace::new(2, 2)?;
    let r = space.ring().clone();
    let eqs = vec![
        r.parse("2*u1_10")?,
        r.parse("u1_01 + u2_10")?,
        r.parse("2*u2_01")?,
    ];
    Ok(JetSystem::new(space, eqs))
}

/// Number of free jet parameters of the Killing equations at a point,
/// after checking that one prolongation forces every second-order jet to zero.
pub fn killing_solution_dimension(n: usize) -> Result<usize, JetError> {
    let sys = killing_system(n)?;
    let prolonged = sys.prolong(1)?;
    let ring = sys.space.ring().clone();
    let gb = Ideal::new(&ring, prolonged.equations.iter().cloned())?
        .groebner(&MonomialOrder::DegRevLex)?;
    for i in sys.space.ids_of_order(2) {
        if !normal_form(&ring.var_at(i), &gb)?.is_zero() {
            return Err(stage(
                "killing",
                format!("{} is not forced to zero", ring.name(i)),
            ));
        }
    }
    ideal_dimension(&gb)?.ok_or_else(|| stage("killing", "inconsistent system"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_names() {
        assert_eq!(JetVariable::new(2, 1, 0).name(), "u2_10");
        assert_eq!(JetVariable::new(1, 0, 3).order(), 3);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let s = JetSpace::new(1, 2).unwrap();
        assert!(s.total_derivative(&s.ring().int(5), 0).unwrap().is_zero());
    }

    #[test]
    fn product_rule_example() {
        let s = JetSpace::new(1, 2).unwrap();
        let r = s.ring();
        let f = r.parse("u1_10*u1_01").unwrap();
        let d = s.total_derivative(&f, 0).unwrap();
        assert_eq!(d, r.parse("u1_20*u1_01 + u1_10*u1_11").unwrap());
    }

    #[test]
    fn order_overflow_is_an_error() {
        let s = JetSpace::new(1, 1).unwrap();
        let f = s.jet(1, 1, 0);
        assert!(matches!(
            s.total_derivative(&f, 1),
            Err(JetError::OrderExceeded { needed: 2, max: 1 })
        ));
    }

    #[test]
    fn prolonging_empty_system() {
        let s = JetSystem::new(JetSpace::new(2, 3).unwrap(), vec![]);
        assert!(s.prolong(1).unwrap().equations.is_empty());
    }

    #[test]
    fn killing_dimension_is_three() {
        assert_eq!(killing_solution_dimension(2).unwrap(), 3);
        assert!(matches!(
            killing_solution_dimension(3),
            Err(JetError::UnsupportedDimension(3))
        ));
    }
}
