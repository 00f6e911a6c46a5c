use super::*;
use crate::class_unit::ClassGroupOptions;
use proptest::prelude::*;

fn context(d: i64, p: u64, m: u32) -> KolyvaginContext {
    let l = AbelianField::real_quadratic(d).unwrap();
    let arith = FieldArithmetic::compute(&l, &ClassGroupOptions::default()).unwrap();
    let psi = l.characters().into_iter().find(|c| !c.is_trivial()).unwrap();
    let chi = FieldCharacter::over_rationals(&l, &psi).unwrap();
    KolyvaginContext::new(arith, &chi, p, m, KolyvaginCaps::default()).unwrap()
}

fn qs(primes: &[KolyvaginPrime]) -> Vec<u64> {
    primes.iter().map(|q| q.q).collect()
}

/// Brute-force list: q prime, q = 1 mod p^m, (d/q) = 1 by Euler's criterion.
fn oracle_primes(d: u64, pm: u64, bound: u64) -> Vec<u64> {
    (2..=bound)
        .filter(|&q| (2..q).take_while(|k| k * k <= q).all(|k| q % k != 0))
        .filter(|&q| q % pm == 1 && d % q != 0 && q != 2)
        .filter(|&q| {
            let mut r = 1u64;
            for _ in 0..(q - 1) / 2 {
                r = r * (d % q) % q;
            }
            r == 1
        })
        .collect()
}

#[test]
fn prime_lists() {
    let cases: [(i64, u32, &[u64]); 4] = [
        (2, 1, &[7, 31, 73, 79, 97, 103, 127, 151, 193, 199]),
        (2, 2, &[73, 127, 199]),
        (5, 1, &[19, 31, 61, 79, 109, 139, 151, 181, 199]),
        (79, 2, &[73, 127, 181, 199]),
    ];
    for (d, m, want) in cases {
        let k = context(d, 3, m);
        let got = qs(&k.primes(200).unwrap());
        assert_eq!(got, want, "d = {d}, m = {m}");
        assert_eq!(got, oracle_primes(d as u64, 3u64.pow(m), 200));
        assert!(got.iter().all(|q| !k.t_primes.contains(q)));
    }
    let k = context(2, 3, 1);
    assert!(k.primes(6).unwrap().is_empty());
    assert!(matches!(k.primes(201), Err(Error::BoundExceeded { .. })));
}

#[test]
fn levels_respect_caps() {
    let k = context(2, 3, 1);
    let levels = k.levels(200).unwrap();
    let pairs: Vec<Vec<u64>> = levels.iter().filter(|t| t.len() == 2).map(|t| qs(t)).collect();
    let want: Vec<Vec<u64>> = [31u64, 73, 79, 97, 103, 127].iter().map(|&b| vec![7, b]).collect();
    assert_eq!(pairs, want);
    assert_eq!(levels.len(), 1 + 10 + 6);
    let k2 = context(2, 3, 2);
    assert!(k2.levels(200).unwrap().iter().all(|t| t.len() <= 1));
    let q7 = k.primes(10).unwrap();
    let three = vec![q7[0].clone(), q7[0].clone(), q7[0].clone()];
    assert!(matches!(k.level(&three), Err(Error::BoundExceeded { .. })));
    let mut bad = q7[0].clone();
    bad.q = 13;
    assert!(matches!(k.level(&[bad]), Err(Error::BadLevelPrime { q: 13, .. })));
}

#[test]
fn derivative_order_three() {
    let d = LevelDerivative::new(&[3]);
    assert_eq!(d.coeffs, vec![0, 1, 2]);
    assert!(d.telescoping_holds());
    // (sigma - 1)(sigma + 2 sigma^2) = 3 - N
    let k = context(2, 3, 1);
    let q = &k.primes(10).unwrap()[0];
    let dq = derivative_operator(q);
    let group = FiniteAbelianGroup::cyclic(3);
    let ring = CoeffRing::integers(3, 1);
    let sigma = GroupRingElement::basis(&group, &ring, &[1]);
    let lhs = sigma.sub(&GroupRingElement::one(&group, &ring)).mul(&dq);
    assert!(lhs.add(&GroupRingElement::norm_element(&group, &ring)).is_zero());
    assert_eq!(dq, d.to_group_ring(3, 1));
}

#[test]
fn telescoping_small_levels() {
    for orders in [vec![], vec![9], vec![27], vec![3, 3], vec![9, 9], vec![3, 3, 3]] {
        assert!(LevelDerivative::new(&orders).telescoping_holds(), "{orders:?}");
    }
    // a perturbed coefficient breaks it
    let mut d = LevelDerivative::new(&[3, 3]);
    d.coeffs[4] += 1;
    assert!(!d.telescoping_holds());
}

#[test]
fn level_one_is_stark_unit() {
    for d in [2i64, 5] {
        let k = context(d, 3, 1);
        let kappa = k.derived_class(&[], 1).unwrap();
        assert_eq!(kappa.representative, k.stark_unit().unwrap());
        assert!(kappa.chi_twisted_fixed);
        assert_eq!(kappa.certificate_bits, 0);
    }
}

/// x = (a + b sqrt 2) / den exactly, through the real embeddings of the
/// basis (whose coordinates in 1, sqrt 2 are half-integers).
fn sqrt2_coords(l: &AbelianField, x: &FieldElement) -> (Integer, Integer, Integer) {
    let emb = l.embedding_matrix_f64();
    let s = 2f64.sqrt();
    let mut a = Integer::new();
    let mut b = Integer::new();
    for (i, c) in x.numerator().iter().enumerate() {
        let (u, v) = (emb[0][i], emb[1][i]);
        let ai = ((u + v) / 2.0 * 2.0).round() as i64;
        let bi = ((u - v) / (2.0 * s) * 2.0).round() as i64;
        a += Integer::from(c * ai);
        b += Integer::from(c * bi);
    }
    // a, b carry a factor 2
    (a, b, Integer::from(x.denominator() * 2u32))
}

/// (valuation, dlog base 3 of the unit part mod 3) of (a + b r)/den in Z_7,
/// r^2 = 2 lifted 7-adically.
fn oracle_place(a: &Integer, b: &Integer, den: &Integer, r0: u64) -> (i64, u64) {
    let k = 60u32;
    let md = Integer::from(7).pow(k);
    let mut r = Integer::from(r0);
    for _ in 0..8 {
        // Newton for r^2 - 2
        let f = Integer::from(&r * &r) - 2;
        let inv = Integer::from(&r * 2).invert(&md).unwrap();
        let step = Integer::from(&f * &inv);
        r = Integer::from(&r - &step).modulo(&md);
    }
    let mut t = Integer::from(a + Integer::from(b * &r)).modulo(&md);
    assert!(t != 0);
    let mut v = 0i64;
    while t.is_divisible_u(7) {
        t /= 7;
        v += 1;
    }
    let mut dd = den.clone();
    while dd.is_divisible_u(7) {
        dd /= 7;
        v -= 1;
    }
    let u = Integer::from(&t * dd.invert(&Integer::from(7)).unwrap()).modulo(&Integer::from(7));
    let u = u.to_u64().unwrap();
    // u^2 = 3^{2k} mod 7
    let k = (0..3u64).find(|&k| u * u % 7 == 9u64.pow(k as u32) % 7).unwrap();
    (v, k)
}

#[test]
fn level_seven_on_sqrt2() {
    let k = context(2, 3, 1);
    let l = k.field().clone();
    let q7 = k.primes(10).unwrap();
    let kappa1 = k.derived_class(&[], 1).unwrap();
    let kappa7 = k.derived_class(&q7, 1).unwrap();
    assert!(kappa7.chi_twisted_fixed);
    assert!(kappa7.certificate_bits > 0);
    let report = k.check_local_conditions(&kappa7, &[kappa1.clone()]).unwrap();
    assert!(report.all_hold(), "{report:?}");
    assert_eq!(report.finite_singular.len(), 2);
    let sqrt2 = (-3i64..=3)
        .flat_map(|c0| (-3i64..=3).map(move |c1| FieldElement::from_integers(vec![Integer::from(c0), Integer::from(c1)])))
        .find(|s| l.mul(s, s) == l.from_integer(&Integer::from(2)))
        .expect("sqrt 2 in the basis span");
    // sign of sqrt2 at the first embedding
    let (_, b, _) = sqrt2_coords(&l, &sqrt2);
    let flip = b < 0;
    let primes = primes_above(&l, 7);
    for (place, lam) in primes.iter().enumerate() {
        let r0 = [3u64, 4]
            .into_iter()
            .find(|&r| lam.valuation(&l, &l.sub(&sqrt2, &l.from_integer(&Integer::from(r)))) > 0)
            .unwrap();
        let r0 = if flip { 7 - r0 } else { r0 };
        let (a7, b7, d7) = sqrt2_coords(&l, &kappa7.representative);
        let (a1, b1, d1) = sqrt2_coords(&l, &kappa1.representative);
        let (v7, k7) = oracle_place(&a7, &b7, &d7, r0);
        let (v1, k1) = oracle_place(&a1, &b1, &d1, r0);
        assert_eq!(v1, 0);
        let pd7 = k.place_data(&kappa7.representative, 7, place).unwrap();
        let pd1 = k.place_data(&kappa1.representative, 7, place).unwrap();
        assert_eq!((pd7.valuation, pd7.unit_dlog), (v7, k7));
        assert_eq!((pd1.valuation, pd1.unit_dlog), (v1, k1));
        assert_eq!((v7 + k1 as i64).rem_euclid(3), 0, "place {place}");
    }
}

#[test]
fn corrupted_derived_element_is_not_fixed() {
    let k = context(2, 3, 1);
    let q7 = k.primes(10).unwrap();
    let level = k.level(&q7).unwrap();
    // D eps times eps itself is not fixed by G_7 modulo cubes
    let z = level.derived_element(1).mul(&level.euler);
    assert!(matches!(k.descend(&level, &z), Err(Error::NotGFixed(_))));
}

#[test]
fn wrong_valuation_breaks_finite_singular() {
    let k = context(2, 3, 1);
    let q7 = k.primes(10).unwrap();
    let kappa1 = k.derived_class(&[], 1).unwrap();
    let kappa7 = k.derived_class(&q7, 1).unwrap();
    let l = k.field();
    let shifted = l.mul(&kappa7.representative, &l.from_integer(&Integer::from(7)));
    let bad = k.class_from_representative(&[7], &shifted, 0, 0).unwrap();
    let report = k.check_local_conditions(&bad, &[kappa1.clone()]).unwrap();
    assert!(report.finite_singular.iter().all(|f| !f.holds));
    // a stray prime breaks (a)
    let stray = l.mul(&kappa7.representative, &l.from_integer(&Integer::from(11)));
    let bad = k.class_from_representative(&[7], &stray, 0, 0).unwrap();
    let report = k.check_local_conditions(&bad, &[kappa1]).unwrap();
    assert!(!report.unramified_outside_tau);
    // missing lower level
    let report = k.check_local_conditions(&kappa7, &[]).unwrap();
    assert!(!report.all_hold());
}

#[test]
fn bound_checks() {
    let b5 = context(5, 3, 1).bound_check().unwrap();
    assert_eq!((b5.lhs, b5.rhs, b5.equality, b5.hs), (0, 0, true, true));
    let b79 = context(79, 3, 1).bound_check().unwrap();
    assert_eq!((b79.lhs, b79.rhs), (1, 1));
    assert!(b79.holds && b79.equality);
}

#[test]
fn pair_level_on_sqrt2() {
    let k = context(2, 3, 1);
    let qs31 = k.primes(31).unwrap();
    let (q7, q31) = (qs31[0].clone(), qs31[1].clone());
    let kappa1 = k.derived_class(&[], 1).unwrap();
    let kappa7 = k.derived_class(&[q7.clone()], 1).unwrap();
    let kappa31 = k.derived_class(&[q31.clone()], 1).unwrap();
    let pair = k.derived_class(&[q7, q31], 1).unwrap();
    for kappa in [&kappa7, &kappa31] {
        assert!(k.check_local_conditions(kappa, &[kappa1.clone()]).unwrap().all_hold());
    }
    let report = k.check_local_conditions(&pair, &[kappa7, kappa31]).unwrap();
    assert!(report.all_hold(), "{report:?}");
    assert_eq!(report.finite_singular.len(), 4);
}

#[test]
fn sequential_and_parallel_agree() {
    let k = context(5, 3, 1);
    let levels = k.levels(40).unwrap();
    let a = k.derived_classes(&levels, ExecMode::Sequential);
    let b = k.derived_classes(&levels, ExecMode::default());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.as_ref().unwrap().representative, y.as_ref().unwrap().representative);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dlog_is_a_homomorphism(i in 0u64..1000, j in 0u64..1000, qi in 0usize..4) {
        let q = [7u64, 13, 19, 37][qi];
        let g = primitive_root(q);
        let (u, v) = (powmod(g, i, q), powmod(g, j, q));
        let a = dlog_mod(u, q, g, 3);
        let b = dlog_mod(v, q, g, 3);
        prop_assert_eq!(a, i % 3);
        prop_assert_eq!(dlog_mod(mulmod(u, v, q), q, g, 3), (a + b) % 3);
    }

    #[test]
    fn telescoping_for_prime_power_orders(k1 in 1u32..4, k2 in 0u32..3) {
        let mut orders = vec![3u64.pow(k1)];
        if k2 > 0 && 3u64.pow(k1 + k2) <= 243 {
            orders.push(3u64.pow(k2));
        }
        prop_assert!(LevelDerivative::new(&orders).telescoping_holds());
    }
}

#[test]
fn distribution_relation_at_levels() {
    let k = context(2, 3, 1);
    let qs31 = k.primes(31).unwrap();
    assert!(k.distribution_relation(&qs31[..1], 7).unwrap());
    assert!(k.distribution_relation(&qs31, 7).unwrap());
    assert!(k.distribution_relation(&qs31, 31).unwrap());
    assert!(matches!(k.distribution_relation(&qs31[..1], 31), Err(Error::LevelMismatch(_))));
    // Fr_7 is trivial on L, so only the pair level gives a nontrivial
    // right-hand side; squaring the top element breaks it there
    let top = k.level(&qs31).unwrap();
    let bottom = k.level(&qs31[1..]).unwrap();
    let x = top.euler_element().unwrap();
    let x2 = top.field.mul(&x, &x);
    assert!(!verify_distribution_relation(&top.field, 7, &x2, &bottom.field, &bottom.euler_element().unwrap()).unwrap());
}
