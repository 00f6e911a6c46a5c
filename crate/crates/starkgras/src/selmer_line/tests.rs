use super::*;
use crate::class_unit::{unit_chi_lattice, unit_group, Coordinatizer};
use crate::cyclotomic_fields::DirichletCharacter;
use rug::ops::Pow;
use rug::Integer;

fn quad(d: i64) -> AbelianField {
    AbelianField::real_quadratic(d).unwrap()
}

fn all(field: &AbelianField) -> Vec<usize> {
    (0..field.degree()).collect()
}

/// log_7 of the golden ratio in Z_7[sqrt 5] with pairs a + b sqrt 5,
/// returning v_7 of the sqrt 5 coordinate.
fn oracle_golden_log_valuation(p: u64) -> u32 {
    let k = 14u32;
    let q = Integer::from(p).pow(k);
    let md = |x: Integer| -> Integer { x.modulo(&q) };
    let mul = |a: &(Integer, Integer), b: &(Integer, Integer)| -> (Integer, Integer) {
        (
            md(Integer::from(&a.0 * &b.0) + Integer::from(&a.1 * &b.1) * 5),
            md(Integer::from(&a.0 * &b.1) + Integer::from(&a.1 * &b.0)),
        )
    };
    let half = Integer::from(2).invert(&q).unwrap();
    let phi = (half.clone(), half);
    // residue field F_49 for p = 7 (5 is not a square mod 7)
    let n = p * p - 1;
    let mut x = (Integer::from(1), Integer::new());
    for _ in 0..n {
        x = mul(&x, &phi);
    }
    let y = (md(x.0 - 1u32), x.1);
    let mut term = (Integer::from(1), Integer::new());
    let mut acc = (Integer::new(), Integer::new());
    for j in 1..40u64 {
        term = mul(&term, &y);
        let a = crate::exact_algebra::arith::vp_u64(j, p);
        let pa = Integer::from(p).pow(a);
        let unit = Integer::from(j / p.pow(a)).invert(&q).unwrap();
        let sign = if j % 2 == 1 { 1 } else { -1 };
        for (c, t) in [(&mut acc.0, &term.0), (&mut acc.1, &term.1)] {
            assert!(t.is_divisible(&pa));
            let v = md(Integer::from(t.div_exact_ref(&pa)) * &unit * sign);
            *c = md(Integer::from(&*c + v));
        }
    }
    // digits lost to the divisions stay below p^(k-3)
    let b = acc.1.clone();
    assert!(b != 0);
    crate::exact_algebra::arith::vp(&b, p) - 1
}

#[test]
fn golden_ratio_local_index() {
    let k = quad(5);
    let v = local_units(&k, &all(&k), 7, 4).unwrap();
    assert!(v.verify_free());
    assert_eq!(v.rank(), 1);
    let eps = crate::class_unit::units::quadratic_fundamental_unit(&k).unwrap();
    let a = v.log_coords(&eps).unwrap();
    let b = v.log_coords_iterated(&eps, 2).unwrap();
    assert_eq!(a, b, "two routes to log_7 agree");
    let chi = FieldCharacter::over_rationals(&k, &DirichletCharacter::quadratic(5)).unwrap();
    let iota = v.iota(&chi, &eps).unwrap();
    let oracle = oracle_golden_log_valuation(7);
    let line = choose_line(&v, &chi, LineStrategy::Natural).unwrap();
    let phi = build_phi0(&line, 7, 4).unwrap();
    let cmp = selmer_index_comparison(&[iota], &line, &phi).unwrap();
    assert_eq!(cmp.numerator, oracle);
    assert_eq!(cmp.denominator, cmp.numerator);
    assert_eq!(cmp.direct_quotient, 0);
    assert!(cmp.identity_holds());
}

#[test]
fn log_routes_agree_on_many_units() {
    for d in [2i64, 13, 29, 41] {
        let k = quad(d);
        let eps = crate::class_unit::units::quadratic_fundamental_unit(&k).unwrap();
        for p in [3u64, 5, 7, 11] {
            if k.discriminant().is_divisible_u(p as u32) {
                continue;
            }
            let v = local_units(&k, &all(&k), p, 5).unwrap();
            let a = v.log_coords(&eps).unwrap();
            for j in 1..3 {
                assert_eq!(a, v.log_coords_iterated(&eps, j).unwrap(), "d = {d}, p = {p}, j = {j}");
            }
            // log is a homomorphism
            let e2 = k.mul(&eps, &eps);
            let doubled: Vec<u64> = a.iter().map(|c| 2 * c % v.modulus()).collect();
            assert_eq!(v.log_coords(&e2).unwrap(), doubled);
        }
    }
}

#[test]
fn freeness_certificates() {
    let l = quad(5).tensor(&quad(13)).unwrap();
    let cases: Vec<(AbelianField, Vec<usize>, u64)> = vec![
        (quad(5), all(&quad(5)), 3),
        (quad(5), all(&quad(5)), 11),
        (quad(13), all(&quad(13)), 3),
        (AbelianField::real_cyclotomic(7).unwrap(), all(&AbelianField::real_cyclotomic(7).unwrap()), 5),
        (AbelianField::real_cyclotomic(7).unwrap(), all(&AbelianField::real_cyclotomic(7).unwrap()), 13),
        (l.clone(), all(&l), 3),
        (l.clone(), all(&l), 7),
        (l.clone(), vec![0], 7),
    ];
    for (field, delta, p) in cases {
        let v = local_units(&field, &delta, p, 4).unwrap();
        assert!(v.verify_free(), "{field:?} at {p}");
        assert_eq!(v.rank() * delta.len(), field.degree());
    }
    assert!(matches!(local_units(&quad(5), &[0, 1], 5, 3), Err(Error::RamifiedP { p: 5 })));
    assert!(matches!(local_units(&quad(5), &[0, 1], 2, 3), Err(Error::PEqualsTwo)));
}

struct RankTwo {
    units: UnitGroup,
    lattice: UnitChiLattice,
}

/// L = Q(sqrt a, sqrt b), k = Q(sqrt b), chi the character of sqrt a.
fn rank_two(a: i64, b: i64, p: u64) -> RankTwo {
    let l = quad(a).tensor(&quad(b)).unwrap();
    let co = Coordinatizer::new(&l);
    let units = unit_group(&co).unwrap();
    let chi = FieldCharacter::over_subfield(&l, &DirichletCharacter::quadratic(a), &[DirichletCharacter::quadratic(b)]).unwrap();
    let lattice = unit_chi_lattice(&co, &units, &chi, p, 4).unwrap();
    RankTwo { units, lattice }
}

#[test]
fn rank_two_lines_and_index_identity() {
    // 3 splits in Q(sqrt 13)
    let rt = rank_two(5, 13, 3);
    for strategy in [LineStrategy::Natural, LineStrategy::FirstBasis] {
        let res = compare_adaptive(&rt.units, &rt.lattice, strategy, 4).unwrap();
        assert!(res.comparison.identity_holds(), "{strategy:?}: {:?}", res.comparison);
        assert_eq!(res.line.strategy, strategy);
    }
    // 3 is inert in Q(sqrt 5)
    let rt = rank_two(13, 5, 3);
    let chi = &rt.lattice.chi;
    let v = local_units(chi.field(), chi.delta(), 3, 4).unwrap();
    assert!(matches!(choose_line(&v, chi, LineStrategy::Natural), Err(Error::NoDegreeOnePlace { p: 3 })));
    let line = choose_line(&v, chi, LineStrategy::FirstBasis).unwrap();
    let phi = build_phi0(&line, 3, 4).unwrap();
    let iota = v.iota_lattice(&rt.units, &rt.lattice).unwrap();
    assert!(selmer_index_comparison(&iota, &line, &phi).unwrap().identity_holds());
}

#[test]
fn natural_line_is_a_place_block() {
    let rt = rank_two(5, 13, 3);
    let chi = &rt.lattice.chi;
    let v = local_units(chi.field(), chi.delta(), 3, 3).unwrap();
    let line = choose_line(&v, chi, LineStrategy::Natural).unwrap();
    assert!(line.place.is_some());
    let phi = build_phi0(&line, 3, 3).unwrap();
    // kernel of psi equals the line, checked over all of (Z/27)^2
    let pm = 27u64;
    let inv = invmod(line.generator[line.pivot], pm).unwrap();
    for x0 in 0..pm {
        for x1 in 0..pm {
            let x = [x0, x1];
            let in_kernel = phi.apply(&x) == vec![0];
            let lambda = mulmod(x[line.pivot], inv, pm);
            let on_line = line.generator.iter().zip(&x).all(|(&g, &c)| mulmod(g, lambda, pm) == c);
            assert_eq!(in_kernel, on_line, "{x:?}");
        }
    }
}

#[test]
fn corrupted_psi_is_rejected() {
    let line = SelmerLine {
        strategy: LineStrategy::FirstBasis,
        generator: vec![1, 0],
        pivot: 0,
        place: None,
    };
    let phi = build_phi0(&line, 5, 3).unwrap();
    let mut bad = phi.clone();
    bad.psis[0][0] = (bad.psis[0][0] + 1) % 125;
    assert!(matches!(verify_phi(&line, &bad), Err(Error::HLFailure(_))));
    let mut flat = phi.clone();
    flat.psis[0] = flat.psis[0].iter().map(|c| c * 5 % 125).collect();
    assert!(matches!(verify_phi(&line, &flat), Err(Error::HLFailure(_))));
    assert!(verify_phi(&line, &phi).is_ok());
}

#[test]
fn low_precision_is_reported() {
    let line = SelmerLine {
        strategy: LineStrategy::FirstBasis,
        generator: vec![1],
        pivot: 0,
        place: None,
    };
    let phi = build_phi0(&line, 3, 4).unwrap();
    // index 9 needs m >= 5
    assert!(matches!(selmer_index_comparison(&[vec![9]], &line, &phi), Err(Error::PrecisionTooLow(_))));
    let phi = build_phi0(&line, 3, 5).unwrap();
    assert_eq!(selmer_index_comparison(&[vec![9]], &line, &phi).unwrap().numerator, 2);
}
