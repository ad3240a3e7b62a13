use elab_core::ratpoly::*;
use proptest::prelude::*;

fn xy() -> Ring {
    Ring::new(["x", "y"])
}

/// Resultant of `x^2 + y^2 - 1` and `xy - 1` in `x`, by the Sylvester matrix
/// computed with plain integer arithmetic on coefficient vectors in `y`.
fn sylvester_resultant_oracle() -> MultiPoly {
    // As polynomials in x: a = x^2 + 0 x + (y^2 - 1), b = y x - 1.
    // Sylvester 3x3: [1, 0, y^2-1; y, -1, 0; 0, y, -1].
    let r = xy();
    let y = r.var("y");
    let one = r.one();
    let zero = r.zero();
    let m = [
        [one.clone(), zero.clone(), &(&y * &y) - &one],
        [y.clone(), -&one, zero.clone()],
        [zero, y.clone(), -&one],
    ];
    let det2 = |a: &MultiPoly, b: &MultiPoly, c: &MultiPoly, d: &MultiPoly| &(a * d) - &(b * c);
    let t0 = &m[0][0] * &det2(&m[1][1], &m[1][2], &m[2][1], &m[2][2]);
    let t1 = &m[0][1] * &det2(&m[1][0], &m[1][2], &m[2][0], &m[2][2]);
    let t2 = &m[0][2] * &det2(&m[1][0], &m[1][1], &m[2][0], &m[2][1]);
    &(&t0 - &t1) + &t2
}

#[test]
fn lex_basis_contains_the_resultant() {
    let r = xy();
    let gens = [
        r.parse("x^2 + y^2 - 1").unwrap(),
        r.parse("x*y - 1").unwrap(),
    ];
    let gb = buchberger(&gens, &MonomialOrder::Lex).unwrap();
    let res = sylvester_resultant_oracle().monic(&MonomialOrder::Lex);
    assert_eq!(res, r.parse("y^4 - y^2 + 1").unwrap());
    assert!(gb.elements().contains(&res));
}

#[test]
fn twisted_cubic_projection() {
    let r = Ring::new(["t", "x", "y"]);
    let ideal = Ideal::new(
        &r,
        [r.parse("x - t^2").unwrap(), r.parse("y - t^3").unwrap()],
    )
    .unwrap();
    let e = elimination_ideal(&ideal, &[1, 2], &MonomialOrder::DegRevLex).unwrap();
    assert_eq!(e.basis.len(), 1);
    let expected = r.parse("y^2 - x^3").unwrap();
    assert!(e.basis[0] == expected || e.basis[0] == -&expected);
}

#[test]
fn eliminating_nothing_gives_the_basis() {
    let r = xy();
    let ideal = Ideal::new(
        &r,
        [r.parse("x^2 - y").unwrap(), r.parse("x*y - 1").unwrap()],
    )
    .unwrap();
    let e = elimination_ideal(&ideal, &[0, 1], &MonomialOrder::DegRevLex).unwrap();
    let gb = ideal.groebner(&MonomialOrder::DegRevLex).unwrap();
    assert_eq!(e.basis, gb.elements());
}

#[test]
fn sos_split_examples() {
    let r = xy();
    assert_eq!(
        sos_split(&r.parse("x^2").unwrap()).unwrap(),
        vec![r.var("x")]
    );
    assert!(matches!(
        sos_split(&r.parse("x^2 - y^2").unwrap()),
        Err(AlgebraError::NotSumOfSquares(_))
    ));
    let parts = sos_split(&r.parse("3*x^2 + 1/2*y^4").unwrap()).unwrap();
    assert_eq!(parts.len(), 2);
    assert!(parts.contains(&r.parse("y^2").unwrap()));
}

#[test]
fn dimension_extremes() {
    let r = Ring::new(["a", "b", "c"]);
    let gb = Ideal::new(&r, [])
        .unwrap()
        .groebner(&MonomialOrder::DegRevLex)
        .unwrap();
    assert_eq!(ideal_dimension(&gb).unwrap(), Some(3));
    let gb = Ideal::new(&r, [r.var("a"), r.var("b"), r.var("c")])
        .unwrap()
        .groebner(&MonomialOrder::DegRevLex)
        .unwrap();
    assert_eq!(ideal_dimension(&gb).unwrap(), Some(0));
    let gb = Ideal::new(&r, [r.one()])
        .unwrap()
        .groebner(&MonomialOrder::DegRevLex)
        .unwrap();
    assert_eq!(ideal_dimension(&gb).unwrap(), None);
}

#[test]
fn text_round_trip() {
    let r = Ring::new(["u1_10", "u2_01", "mu"]);
    let p = r.parse("-3/4*u1_10^2*mu + u2_01 - 7").unwrap();
    assert_eq!(r.parse(&p.to_string()).unwrap(), p);
}

fn ring3() -> Ring {
    Ring::new(["x", "y", "z"])
}

prop_compose! {
    fn small_poly()(terms in prop::collection::vec(((0u32..3, 0u32..3, 0u32..2), -3i64..=3), 1..4)) -> MultiPoly {
        let r = ring3();
        let mut p = r.zero();
        for ((a, b, c), k) in terms {
            p.add_term(Monomial::from_exponents(vec![a, b, c]), rat(k, 1));
        }
        p
    }
}

fn nonzero(ps: Vec<MultiPoly>) -> Vec<MultiPoly> {
    ps.into_iter().filter(|p| !p.is_zero()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn combinations_reduce_to_zero(gens in prop::collection::vec(small_poly(), 1..3),
                                   hs in prop::collection::vec(small_poly(), 2)) {
        let gens = nonzero(gens);
        prop_assume!(!gens.is_empty());
        let gb = buchberger(&gens, &MonomialOrder::DegRevLex).unwrap();
        let mut f = ring3().zero();
        for (g, h) in gens.iter().zip(hs.iter()) {
            f = &f + &(g * h);
        }
        prop_assert!(normal_form(&f, &gb).unwrap().is_zero());
    }

    #[test]
    fn basis_is_idempotent_and_closed(gens in prop::collection::vec(small_poly(), 1..4)) {
        let gens = nonzero(gens);
        prop_assume!(!gens.is_empty());
        let order = MonomialOrder::DegRevLex;
        let gb = buchberger(&gens, &order).unwrap();
        let again = buchberger(gb.elements(), &order).unwrap();
        prop_assert_eq!(gb.elements(), again.elements());
        let el = gb.elements();
        for i in 0..el.len() {
            for j in i + 1..el.len() {
                let s = s_polynomial(&el[i], &el[j], &order);
                prop_assert!(normal_form(&s, &gb).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn basis_ignores_generator_order(gens in prop::collection::vec(small_poly(), 2..4)) {
        let gens = nonzero(gens);
        prop_assume!(gens.len() >= 2);
        let order = MonomialOrder::DegRevLex;
        let a = buchberger(&gens, &order).unwrap();
        let mut rev = gens.clone();
        rev.reverse();
        let b = buchberger(&rev, &order).unwrap();
        prop_assert_eq!(a.elements(), b.elements());
    }

    #[test]
    fn normal_form_is_a_remainder(f in small_poly(), gens in prop::collection::vec(small_poly(), 1..3)) {
        let gens = nonzero(gens);
        prop_assume!(!gens.is_empty());
        let gb = buchberger(&gens, &MonomialOrder::DegRevLex).unwrap();
        let r = normal_form(&f, &gb).unwrap();
        // f - r lies in the ideal
        prop_assert!(normal_form(&(&f - &r), &gb).unwrap().is_zero());
        // no term of r is divisible by a leading monomial
        for (m, _) in r.terms() {
            for lm in gb.leading_monomials() {
                prop_assert!(!lm.divides(m));
            }
        }
    }

    #[test]
    fn elimination_vanishes_on_parametrised_points(a in -4i64..=4, b in -4i64..=4, t in -5i64..=5) {
        // I = <x - t^2 - a, y - t^3 + b t>: every point with rational t lies on V(I).
        let r = ring3();
        let ideal = Ideal::new(&r, [
            r.parse(&format!("x - z^2 - {}", a)).unwrap(),
            r.parse(&format!("y - z^3 + {}*z", b)).unwrap(),
        ]).unwrap();
        let e = elimination_ideal(&ideal, &[0, 1], &MonomialOrder::DegRevLex).unwrap();
        prop_assert!(!e.basis.is_empty());
        let (tr, ar, br) = (rat(t, 1), rat(a, 1), rat(b, 1));
        let x = &tr * &tr + &ar;
        let y = &tr * &tr * &tr - &br * &tr;
        for g in &e.basis {
            prop_assert_eq!(g.eval(&[x.clone(), y.clone(), tr.clone()]), rat(0, 1));
        }
    }

    #[test]
    fn sos_split_reconstructs(cs in prop::collection::vec((1i64..6, 1i64..4), 1..4),
                              ms in prop::collection::vec((0u32..3, 0u32..3, 0u32..3), 1..4)) {
        let r = ring3();
        let mut f = r.zero();
        for ((c, d), e) in cs.iter().zip(ms.iter()) {
            let m = Monomial::from_exponents(vec![e.0, e.1, e.2]);
            f.add_term(m.pow(2), rat(*c, *d));
        }
        let parts = sos_split(&f).unwrap();
        let mut back = r.zero();
        for m in &parts {
            let sq = m * m;
            let (mono, _) = sq.terms().next().unwrap();
            back = &back + &sq.scale(&f.coeff(mono));
        }
        prop_assert_eq!(back, f);
    }
}
