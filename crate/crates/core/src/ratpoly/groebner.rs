//! Normal forms, Buchberger completion and the ideal-theoretic operations
//! built on it.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Signed, Zero};

use super::{AlgebraError, Monomial, MonomialOrder, MultiPoly, Rational, Ring};

/// Terms sorted ascending under the working order, so the leading term is last.
type Sorted = Vec<(Monomial, Rational)>;

fn to_sorted(p: &MultiPoly, order: &MonomialOrder) -> Sorted {
    let mut v = p.sorted_terms(order);
    v.reverse();
    v
}

fn from_sorted(ring: &Ring, s: Sorted) -> MultiPoly {
    MultiPoly::from_terms(ring, s)
}

/// `a - c * m * b`, both operands ascending.
fn sub_scaled(order: &MonomialOrder, a: &Sorted, c: &Rational, m: &Monomial, b: &Sorted) -> Sorted {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut j = 0;
    let mut bj: Option<(Monomial, Rational)> = None;
    loop {
        if bj.is_none() && j < b.len() {
            bj = Some((b[j].0.mul(m), &b[j].1 * c));
        }
        match (a.get(i), bj.as_ref()) {
            (None, None) => break,
            (Some(t), None) => {
                out.push(t.clone());
                i += 1;
            }
            (None, Some(_)) => {
                let (mm, cc) = bj.take().unwrap();
                out.push((mm, -cc));
                j += 1;
            }
            (Some(t), Some((mm, _))) => match order.cmp(&t.0, mm) {
                Ordering::Less => {
                    out.push(t.clone());
                    i += 1;
                }
                Ordering::Greater => {
                    let (mm, cc) = bj.take().unwrap();
                    out.push((mm, -cc));
                    j += 1;
                }
                Ordering::Equal => {
                    let (mm, cc) = bj.take().unwrap();
                    let v = &t.1 - cc;
                    if !v.is_zero() {
                        out.push((mm, v));
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
    out
}

fn make_monic(mut s: Sorted) -> Sorted {
    if let Some((_, lc)) = s.last() {
        if !lc.is_one() {
            let inv = lc.recip();
            for t in s.iter_mut() {
                t.1 *= &inv;
            }
        }
    }
    s
}

/// Full reduction of `f` by `divisors` (each given with its leading monomial).
/// Returns the remainder, ascending.
fn reduce_sorted(order: &MonomialOrder, f: Sorted, divisors: &[&Sorted]) -> Sorted {
    let mut p = f;
    let mut rem_desc: Vec<(Monomial, Rational)> = Vec::new();
    while let Some((m, c)) = p.last().cloned() {
        let hit = divisors.iter().find_map(|g| {
            let (lm, lc) = g.last()?;
            lm.quotient_of(&m).map(|q| (q, lc, *g))
        });
        match hit {
            Some((q, lc, g)) => {
                let factor = &c / lc;
                p = sub_scaled(order, &p, &factor, &q, g);
            }
            None => {
                p.pop();
                rem_desc.push((m, c));
            }
        }
    }
    rem_desc.reverse();
    rem_desc
}

fn s_poly_sorted(order: &MonomialOrder, f: &Sorted, g: &Sorted) -> Sorted {
    let (lf, cf) = f.last().expect("nonzero");
    let (lg, cg) = g.last().expect("nonzero");
    let l = lf.lcm(lg);
    let mf = lf.quotient_of(&l).unwrap();
    let mg = lg.quotient_of(&l).unwrap();
    // (l/lf)/cf * f - (l/lg)/cg * g
    let a = sub_scaled(order, &Vec::new(), &(-cf.recip()), &mf, f);
    sub_scaled(order, &a, &cg.recip(), &mg, g)
}

/// Reduced Gröbner basis: monic, auto-reduced, sorted by ascending leading monomial.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    ring: Ring,
    order: MonomialOrder,
    elements: Vec<MultiPoly>,
    sorted: Vec<Sorted>,
}

impl GroebnerBasis {
    fn from_sorted(ring: &Ring, order: MonomialOrder, mut sorted: Vec<Sorted>) -> Self {
        sorted.sort_by(|a, b| order.cmp(&a.last().unwrap().0, &b.last().unwrap().0));
        let elements = sorted
            .iter()
            .map(|s| from_sorted(ring, s.clone()))
            .collect();
        GroebnerBasis {
            ring: ring.clone(),
            order,
            elements,
            sorted,
        }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn order(&self) -> &MonomialOrder {
        &self.order
    }

    pub fn elements(&self) -> &[MultiPoly] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.sorted
            .iter()
            .map(|s| s.last().unwrap().0.clone())
            .collect()
    }

    /// True when the basis is `{1}`.
    pub fn is_unit(&self) -> bool {
        self.sorted.len() == 1 && self.sorted[0].last().unwrap().0.is_one()
    }

    pub fn contains(&self, f: &MultiPoly) -> Result<bool, AlgebraError> {
        Ok(normal_form(f, self)?.is_zero())
    }
}

impl PartialEq for GroebnerBasis {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.order == other.order && self.elements == other.elements
    }
}

/// The unique remainder of `f` modulo the ideal spanned by `basis`.
pub fn normal_form(f: &MultiPoly, basis: &GroebnerBasis) -> Result<MultiPoly, AlgebraError> {
    f.ring().check_same(&basis.ring)?;
    let divs: Vec<&Sorted> = basis.sorted.iter().collect();
    let r = reduce_sorted(&basis.order, to_sorted(f, &basis.order), &divs);
    Ok(from_sorted(&basis.ring, r))
}

/// Remainder of the multivariate division of `f` by an arbitrary list.
/// Not unique unless `divisors` is a Gröbner basis for `order`.
pub fn reduce_by(
    f: &MultiPoly,
    divisors: &[MultiPoly],
    order: &MonomialOrder,
) -> Result<MultiPoly, AlgebraError> {
    for d in divisors {
        f.ring().check_same(d.ring())?;
    }
    let ds: Vec<Sorted> = divisors
        .iter()
        .filter(|d| !d.is_zero())
        .map(|d| to_sorted(d, order))
        .collect();
    let refs: Vec<&Sorted> = ds.iter().collect();
    Ok(from_sorted(
        f.ring(),
        reduce_sorted(order, to_sorted(f, order), &refs),
    ))
}

/// S-polynomial of two nonzero polynomials.
pub fn s_polynomial(f: &MultiPoly, g: &MultiPoly, order: &MonomialOrder) -> MultiPoly {
    from_sorted(
        f.ring(),
        s_poly_sorted(order, &to_sorted(f, order), &to_sorted(g, order)),
    )
}

#[derive(Clone, Debug)]
pub struct BuchbergerOptions {
    /// Abort once this many S-pairs have been reduced.
    pub max_pairs: usize,
}

impl Default for BuchbergerOptions {
    fn default() -> Self {
        BuchbergerOptions { max_pairs: 200_000 }
    }
}

/// Reduced Gröbner basis of `<gens>` with default resource limits.
pub fn buchberger(
    gens: &[MultiPoly],
    order: &MonomialOrder,
) -> Result<GroebnerBasis, AlgebraError> {
    buchberger_with(gens, order, &BuchbergerOptions::default())
}

/// Buchberger's algorithm.
///
/// Pairs are processed by ascending total degree of the lcm of their leading
/// monomials, ties broken by generator indices. Pairs with coprime leading
/// monomials are skipped, as are pairs covered by the chain criterion.
pub fn buchberger_with(
    gens: &[MultiPoly],
    order: &MonomialOrder,
    opts: &BuchbergerOptions,
) -> Result<GroebnerBasis, AlgebraError> {
    let ring = match gens.first() {
        Some(g) => g.ring().clone(),
        None => {
            return Ok(GroebnerBasis::from_sorted(
                &Ring::new::<&str>([]),
                order.clone(),
                vec![],
            ))
        }
    };
    for g in gens {
        ring.check_same(g.ring())?;
    }
    order.validate(ring.len())?;

    let mut basis: Vec<Sorted> = Vec::new();
    let mut lms: Vec<Monomial> = Vec::new();
    let mut queue: BTreeSet<(u32, usize, usize)> = BTreeSet::new();
    let mut pending: HashSet<(usize, usize)> = HashSet::new();

    let push = |s: Sorted,
                basis: &mut Vec<Sorted>,
                lms: &mut Vec<Monomial>,
                queue: &mut BTreeSet<(u32, usize, usize)>,
                pending: &mut HashSet<(usize, usize)>| {
        let s = make_monic(s);
        let lm = s.last().unwrap().0.clone();
        let k = basis.len();
        for (i, other) in lms.iter().enumerate() {
            let d = other.lcm(&lm).degree();
            queue.insert((d, i, k));
            pending.insert((i, k));
        }
        basis.push(s);
        lms.push(lm);
    };

    for g in gens {
        if g.is_zero() {
            continue;
        }
        let refs: Vec<&Sorted> = basis.iter().collect();
        let r = reduce_sorted(order, to_sorted(g, order), &refs);
        if !r.is_empty() {
            push(r, &mut basis, &mut lms, &mut queue, &mut pending);
        }
    }

    let mut processed = 0usize;
    while let Some(&(d, i, j)) = queue.iter().next() {
        queue.remove(&(d, i, j));
        pending.remove(&(i, j));
        if lms[i].coprime(&lms[j]) {
            continue;
        }
        let l = lms[i].lcm(&lms[j]);
        let chain = (0..lms.len()).any(|k| {
            k != i
                && k != j
                && lms[k].divides(&l)
                && !pending.contains(&(i.min(k), i.max(k)))
                && !pending.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            continue;
        }
        processed += 1;
        if processed > opts.max_pairs {
            return Err(AlgebraError::ResourceExhausted {
                processed: processed - 1,
                pending: queue.len() + 1,
            });
        }
        let s = s_poly_sorted(order, &basis[i], &basis[j]);
        let refs: Vec<&Sorted> = basis.iter().collect();
        let r = reduce_sorted(order, s, &refs);
        if !r.is_empty() {
            push(r, &mut basis, &mut lms, &mut queue, &mut pending);
        }
    }

    Ok(GroebnerBasis::from_sorted(
        &ring,
        order.clone(),
        interreduce(order, basis),
    ))
}

/// Minimalize and fully auto-reduce a Gröbner basis.
fn interreduce(order: &MonomialOrder, basis: Vec<Sorted>) -> Vec<Sorted> {
    let mut keep: Vec<Sorted> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let lm = &g.last().unwrap().0;
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            let lh = &h.last().unwrap().0;
            j != i && lh.divides(lm) && (lh != lm || j < i)
        });
        if !redundant {
            keep.push(g.clone());
        }
    }
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let (lm, _) = keep[i].last().unwrap().clone();
        let mut tail = keep[i].clone();
        tail.pop();
        let others: Vec<&Sorted> = keep
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, s)| s)
            .collect();
        let mut r = reduce_sorted(order, tail, &others);
        r.push((lm, Rational::one()));
        out.push(make_monic(r));
    }
    out
}

/// An ideal given by generators.
#[derive(Clone, Debug)]
pub struct Ideal {
    ring: Ring,
    generators: Vec<MultiPoly>,
}

impl Ideal {
    /// Zero generators are dropped.
    pub fn new(
        ring: &Ring,
        generators: impl IntoIterator<Item = MultiPoly>,
    ) -> Result<Self, AlgebraError> {
        let mut gens = Vec::new();
        for g in generators {
            ring.check_same(g.ring())?;
            if !g.is_zero() {
                gens.push(g);
            }
        }
        Ok(Ideal {
            ring: ring.clone(),
            generators: gens,
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn generators(&self) -> &[MultiPoly] {
        &self.generators
    }

    pub fn groebner(&self, order: &MonomialOrder) -> Result<GroebnerBasis, AlgebraError> {
        if self.generators.is_empty() {
            return Ok(GroebnerBasis::from_sorted(
                &self.ring,
                order.clone(),
                vec![],
            ));
        }
        buchberger(&self.generators, order)
    }

    pub fn with(&self, more: impl IntoIterator<Item = MultiPoly>) -> Result<Ideal, AlgebraError> {
        Ideal::new(&self.ring, self.generators.iter().cloned().chain(more))
    }
}

/// Result of [`elimination_ideal`].
#[derive(Clone, Debug)]
pub struct Elimination {
    /// Elements of the reduced basis free of eliminated variables.
    pub basis: Vec<MultiPoly>,
    /// The full reduced basis under the block order.
    pub groebner: GroebnerBasis,
}

/// Generators of `I ∩ Q[keep]`, from a reduced basis under the block order
/// that puts every other variable in the high block.
pub fn elimination_ideal(
    ideal: &Ideal,
    keep: &[usize],
    order_hint: &MonomialOrder,
) -> Result<Elimination, AlgebraError> {
    let n = ideal.ring().len();
    if let Some(&bad) = keep.iter().find(|&&k| k >= n) {
        return Err(AlgebraError::InvalidOrder(format!(
            "variable id {bad} out of range"
        )));
    }
    let high: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let order = if high.is_empty() {
        MonomialOrder::base(order_hint.within())
    } else {
        MonomialOrder::elimination(n, &high, order_hint.within())
    };
    let gb = ideal.groebner(&order)?;
    let basis = gb
        .elements()
        .iter()
        .filter(|g| high.iter().all(|&h| !g.involves(h)))
        .cloned()
        .collect();
    Ok(Elimination {
        basis,
        groebner: gb,
    })
}

/// Krull dimension of `V(I)` read off the leading monomials of a Gröbner basis:
/// the size of a largest variable set containing the support of no leading
/// monomial. `None` for the unit ideal (empty variety).
pub fn ideal_dimension(basis: &GroebnerBasis) -> Result<Option<usize>, AlgebraError> {
    let n = basis.ring().len();
    if n > 128 {
        return Err(AlgebraError::TooManyVariables(n));
    }
    if basis.is_unit() {
        return Ok(None);
    }
    let masks: Vec<u128> = basis
        .leading_monomials()
        .iter()
        .map(|m| m.support().fold(0u128, |acc, (i, _)| acc | (1u128 << i)))
        .collect();
    let mut best = 0usize;
    search_independent(&masks, n, 0, 0, 0, &mut best);
    Ok(Some(best))
}

fn search_independent(
    masks: &[u128],
    n: usize,
    next: usize,
    set: u128,
    size: usize,
    best: &mut usize,
) {
    if size > *best {
        *best = size;
    }
    if next == n || size + (n - next) <= *best {
        return;
    }
    let with = set | (1u128 << next);
    if masks.iter().all(|&m| m & !with != 0) {
        search_independent(masks, n, next + 1, with, size + 1, best);
    }
    search_independent(masks, n, next + 1, set, size, best);
}

/// Splits `f = sum c_i m_i^2` with rational `c_i > 0` and monomials `m_i`,
/// returning the `m_i`. Every `m_i` lies in the real radical of any ideal
/// containing `f`.
pub fn sos_split(f: &MultiPoly) -> Result<Vec<MultiPoly>, AlgebraError> {
    let mut out = Vec::with_capacity(f.len());
    for (m, c) in f.terms() {
        let root = match (c.is_positive(), m.sqrt()) {
            (true, Some(r)) => r,
            _ => return Err(AlgebraError::NotSumOfSquares(f.to_string())),
        };
        out.push(MultiPoly::monomial(f.ring(), root, Rational::one()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratpoly::BaseOrder;

    #[test]
    fn normal_form_one_step_division() {
        let r = Ring::new(["x"]);
        let gb = buchberger(&[r.parse("x^2 - 1").unwrap()], &MonomialOrder::Lex).unwrap();
        assert_eq!(
            normal_form(&r.parse("x^3").unwrap(), &gb).unwrap(),
            r.var("x")
        );
    }

    #[test]
    fn generator_reduces_to_zero() {
        let r = Ring::new(["c1", "s1"]);
        let f = r.parse("c1^2 + s1^2 - 1").unwrap();
        let gb = buchberger(std::slice::from_ref(&f), &MonomialOrder::DegRevLex).unwrap();
        assert!(normal_form(&f, &gb).unwrap().is_zero());
    }

    #[test]
    fn coprime_generators_are_already_a_basis() {
        let r = Ring::new(["x", "y"]);
        let gens = [r.parse("x^2").unwrap(), r.parse("y").unwrap()];
        let gb = buchberger(&gens, &MonomialOrder::Lex).unwrap();
        assert_eq!(
            gb.elements(),
            &[r.parse("y").unwrap(), r.parse("x^2").unwrap()]
        );
    }

    #[test]
    fn ring_mismatch_is_reported() {
        let r = Ring::new(["x"]);
        let s = Ring::new(["y"]);
        let gb = buchberger(&[r.var("x")], &MonomialOrder::Lex).unwrap();
        assert!(matches!(
            normal_form(&s.var("y"), &gb),
            Err(AlgebraError::RingMismatch { .. })
        ));
    }

    #[test]
    fn resource_limit_reports_queue() {
        let r = Ring::new(["x", "y", "z"]);
        let gens = [
            r.parse("x^2 + y*z - 1").unwrap(),
            r.parse("x*y - z^2").unwrap(),
            r.parse("y^3 - x*z").unwrap(),
        ];
        let err = buchberger_with(
            &gens,
            &MonomialOrder::Lex,
            &BuchbergerOptions { max_pairs: 1 },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            AlgebraError::ResourceExhausted { processed: 1, .. }
        ));
    }

    #[test]
    fn dimension_extremes() {
        let r = Ring::new(["a", "b", "c"]);
        let empty = Ideal::new(&r, [])
            .unwrap()
            .groebner(&MonomialOrder::DegRevLex)
            .unwrap();
        assert_eq!(ideal_dimension(&empty).unwrap(), Some(3));
        let origin = buchberger(
            &[r.var("a"), r.var("b"), r.var("c")],
            &MonomialOrder::DegRevLex,
        )
        .unwrap();
        assert_eq!(ideal_dimension(&origin).unwrap(), Some(0));
        let unit = buchberger(&[r.var("a"), &r.var("a") - &r.one()], &MonomialOrder::Lex).unwrap();
        assert_eq!(ideal_dimension(&unit).unwrap(), None);
    }

    #[test]
    fn sos_split_cases() {
        let r = Ring::new(["x", "y"]);
        assert_eq!(
            sos_split(&r.parse("x^2").unwrap()).unwrap(),
            vec![r.var("x")]
        );
        let two = sos_split(&r.parse("x^2 + 3*y^4").unwrap()).unwrap();
        assert_eq!(two.len(), 2);
        assert!(two.contains(&r.parse("y^2").unwrap()));
        assert!(matches!(
            sos_split(&r.parse("x^2 - y^2").unwrap()),
            Err(AlgebraError::NotSumOfSquares(_))
        ));
        assert!(sos_split(&r.parse("x*y").unwrap()).is_err());
    }

    #[test]
    fn elimination_without_high_block_is_plain_basis() {
        let r = Ring::new(["x", "y"]);
        let i = Ideal::new(
            &r,
            [
                r.parse("x^2 + y^2 - 1").unwrap(),
                r.parse("x*y - 1").unwrap(),
            ],
        )
        .unwrap();
        let e = elimination_ideal(&i, &[0, 1], &MonomialOrder::DegRevLex).unwrap();
        assert_eq!(
            e.basis,
            i.groebner(&MonomialOrder::DegRevLex).unwrap().elements()
        );
        let _ = BaseOrder::Lex;
    }
}
