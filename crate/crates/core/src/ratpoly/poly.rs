use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{AlgebraError, Monomial, MonomialOrder, Rational, Ring};

/// Sparse polynomial with rational coefficients.
///
/// Zero coefficients are never stored, so structural equality is polynomial
/// equality. Arithmetic operators panic when the operands belong to different
/// rings; use [`MultiPoly::to_ring`] to move a polynomial between rings.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    ring: Ring,
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn zero(ring: &Ring) -> Self {
        MultiPoly {
            ring: ring.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: &Ring, c: Rational) -> Self {
        Self::monomial(ring, Monomial::one(), c)
    }

    pub fn var(ring: &Ring, i: usize) -> Self {
        assert!(i < ring.len(), "variable index {i} out of range");
        Self::monomial(ring, Monomial::var(i), Rational::one())
    }

    pub fn monomial(ring: &Ring, m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero(ring);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Builds from `(monomial, coefficient)` pairs, summing repeats.
    pub fn from_terms(ring: &Ring, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(ring);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (lex) key order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one())
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Terms sorted from largest to smallest monomial under `order`.
    pub fn sorted_terms(&self, order: &MonomialOrder) -> Vec<(Monomial, Rational)> {
        let mut v: Vec<_> = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        v.sort_by(|a, b| order.cmp(&b.0, &a.0));
        v
    }

    pub fn leading_term(&self, order: &MonomialOrder) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().max_by(|a, b| order.cmp(a.0, b.0))
    }

    pub fn leading_monomial(&self, order: &MonomialOrder) -> Option<&Monomial> {
        self.leading_term(order).map(|(m, _)| m)
    }

    /// Scaled so the leading coefficient is one (zero stays zero).
    pub fn monic(&self, order: &MonomialOrder) -> MultiPoly {
        match self.leading_term(order) {
            None => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest power of variable `i` present.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(i)).max().unwrap_or(0)
    }

    /// Ids of the variables that occur.
    pub fn variables(&self) -> Vec<usize> {
        let mut seen = vec![false; self.ring.len()];
        for m in self.terms.keys() {
            for (i, _) in m.support() {
                seen[i] = true;
            }
        }
        (0..seen.len()).filter(|&i| seen[i]).collect()
    }

    pub fn involves(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.exp(i) > 0)
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        MultiPoly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        MultiPoly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(k, a)| (k.mul(m), a * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = self.ring.one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> MultiPoly {
        let mut out = Self::zero(&self.ring);
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[i] -= 1;
            out.add_term(
                Monomial::from_exponents(exps),
                c * Rational::from_integer(e.into()),
            );
        }
        out
    }

    /// Replaces variable `i` by `value`.
    pub fn substitute(&self, i: usize, value: &MultiPoly) -> MultiPoly {
        self.ring
            .check_same(value.ring())
            .expect("substitute: ring mismatch");
        let mut out = Self::zero(&self.ring);
        let mut powers: Vec<MultiPoly> = vec![self.ring.one()];
        for (m, c) in &self.terms {
            let e = m.exp(i) as usize;
            while powers.len() <= e {
                let next = powers.last().unwrap() * value;
                powers.push(next);
            }
            let mut exps = m.exponents().to_vec();
            if e > 0 {
                exps[i] = 0;
            }
            let rest = Monomial::from_exponents(exps);
            out = &out + &powers[e].mul_monomial(&rest, c);
        }
        out
    }

    /// Substitutes several variables at once (`(variable id, value)` pairs).
    pub fn substitute_many(&self, subs: &[(usize, MultiPoly)]) -> MultiPoly {
        let mut out = Self::zero(&self.ring);
        for (m, c) in &self.terms {
            let mut term = self.ring.one();
            let mut exps = m.exponents().to_vec();
            for (i, val) in subs {
                let e = m.exp(*i);
                if e > 0 {
                    exps[*i] = 0;
                    term = &term * &val.pow(e);
                }
            }
            out = &out + &term.mul_monomial(&Monomial::from_exponents(exps), c);
        }
        out
    }

    /// Exact evaluation at a point given for every ring variable.
    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.ring.len(), "point dimension");
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.support() {
                t *= num_traits::pow(point[i].clone(), e as usize);
            }
            acc += t;
        }
        acc
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.ring.len(), "point dimension");
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (i, e) in m.support() {
                    t *= point[i].powi(e as i32);
                }
                t
            })
            .sum()
    }

    /// The same polynomial in another ring, matching variables by name.
    pub fn to_ring(&self, target: &Ring) -> Result<MultiPoly, AlgebraError> {
        let mut map = vec![usize::MAX; self.ring.len()];
        for i in self.variables() {
            map[i] = target.require(self.ring.name(i))?;
        }
        Ok(MultiPoly {
            ring: target.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.remap(&map), c.clone()))
                .collect(),
        })
    }

    /// Coefficient polynomials with respect to the variables in `vars`:
    /// `self = sum_k  m_k * coeff_k` where `m_k` are monomials in `vars` only.
    pub fn collect_in(&self, vars: &[usize]) -> BTreeMap<Monomial, MultiPoly> {
        let mut out: BTreeMap<Monomial, MultiPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut outer = vec![0u32; self.ring.len()];
            let mut inner = m.exponents().to_vec();
            for &v in vars {
                if v < inner.len() {
                    outer[v] = inner[v];
                    inner[v] = 0;
                }
            }
            out.entry(Monomial::from_exponents(outer))
                .or_insert_with(|| Self::zero(&self.ring))
                .add_term(Monomial::from_exponents(inner), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub fn is_negative_of(&self, other: &MultiPoly) -> bool {
        (self + other).is_zero()
    }

    pub fn abs_max_coeff(&self) -> Rational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

impl std::fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

fn combine(a: &MultiPoly, b: &MultiPoly, negate_b: bool) -> MultiPoly {
    assert!(
        a.ring.same_as(&b.ring),
        "polynomial ring mismatch: {} vs {}",
        a.ring,
        b.ring
    );
    let mut out = a.clone();
    for (m, c) in &b.terms {
        let c = if negate_b { -c.clone() } else { c.clone() };
        out.add_term(m.clone(), c);
    }
    out
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        combine(self, rhs, false)
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        combine(self, rhs, true)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert!(
            self.ring.same_as(&rhs.ring),
            "polynomial ring mismatch: {} vs {}",
            self.ring,
            rhs.ring
        );
        let mut out = MultiPoly::zero(&self.ring);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: &MultiPoly) -> MultiPoly {
                (&self).$f(rhs)
            }
        }
        impl $tr<MultiPoly> for &MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: MultiPoly) -> MultiPoly {
                self.$f(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratpoly::rat;

    fn ring() -> Ring {
        Ring::new(["x", "y", "z"])
    }

    #[test]
    fn arithmetic_cancels_to_canonical_zero() {
        let r = ring();
        let (x, y) = (r.var("x"), r.var("y"));
        let p = &(&x + &y) * &(&x - &y);
        let q = &(&x * &x) - &(&y * &y);
        assert_eq!(p, q);
        assert!((&p - &q).is_zero());
    }

    #[test]
    fn derivative_and_substitution() {
        let r = ring();
        let p = r.parse("x^3*y + 2*x - 5").unwrap();
        assert_eq!(p.derivative(0), r.parse("3*x^2*y + 2").unwrap());
        let s = p.substitute(0, &r.parse("y + 1").unwrap());
        let direct = r.parse("(y+1)^3*y + 2*(y+1) - 5").unwrap();
        assert_eq!(s, direct);
    }

    #[test]
    fn eval_exact() {
        let r = ring();
        let p = r.parse("x^2 - 1/2*y*z").unwrap();
        assert_eq!(p.eval(&[rat(1, 2), rat(3, 1), rat(1, 3)]), rat(-1, 4));
    }

    #[test]
    fn to_ring_matches_names() {
        let r = ring();
        let other = Ring::new(["z", "x"]);
        let p = r.parse("x*z^2").unwrap();
        let q = p.to_ring(&other).unwrap();
        assert_eq!(q, other.parse("z^2*x").unwrap());
        assert!(r.parse("y").unwrap().to_ring(&other).is_err());
    }

    #[test]
    fn collect_in_splits_coefficients() {
        let r = ring();
        let p = r.parse("x*y + x*z + 3*y").unwrap();
        let parts = p.collect_in(&[0]);
        assert_eq!(parts[&Monomial::var(0)], r.parse("y+z").unwrap());
        assert_eq!(parts[&Monomial::one()], r.parse("3*y").unwrap());
    }
}
