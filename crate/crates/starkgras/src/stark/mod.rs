//! Stark elements and both sides of the index formula.
//!
//! Regulator convention: for a character chi of Delta = Gal(L/k) of order
//! at most 2 and places w_1..w_r of L above the r real places of k (coset
//! representatives of G/Delta in index order, starting from the identity),
//!
//!   R_chi(u_1 ^ .. ^ u_r) = det( -1/(2|Delta|) sum_{d in Delta} chi(d) log|d u_i|_{w_j} ).
//!
//! For r = 1 the materialized element is the unit
//! u = eta^{(1 - sigma) prod_S (1 - Fr_q^{-1}) prod_T (1 - l Fr_l^{-1})}, which is
//! 2 e_chi applied to the modified cyclotomic unit; 2 is a p-unit, and with
//! the convention above R_chi(u) equals the leading term exactly.

use crate::class_unit::chi::FieldCharacter;
use crate::class_unit::classgroup::{chi_part_order, class_group_with_units, ClassGroupData, ClassGroupOptions};
use crate::class_unit::units::{log_abs_embeddings, p_saturate, unit_chi_lattice, unit_group, Coordinatizer, UnitGroup};
use crate::cyclotomic_fields::{AbelianField, CycloProduct, DirichletCharacter, FieldElement, ProductContext};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{is_prime, mult_order, prime_divisors, vp, vp_rational};
use crate::lfunctions::{modified_leading_term, LSeriesSpec, LeadingTerm};
use crate::numeric::{bits_for_digits, det_float, recognize_rational};
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

/// Class group, units and coordinatizer of one field, computed once.
pub struct FieldArithmetic {
    pub co: Coordinatizer,
    pub units: UnitGroup,
    pub classes: ClassGroupData,
}

impl FieldArithmetic {
    pub fn compute(field: &AbelianField, opts: &ClassGroupOptions) -> Result<Self> {
        let co = Coordinatizer::new(field);
        let units = unit_group(&co)?;
        let classes = class_group_with_units(&co, &units, opts)?;
        Ok(FieldArithmetic { co, units, classes })
    }

    pub fn field(&self) -> &AbelianField {
        self.co.field()
    }
}

/// Is 1 - psi(l) l a p-adic unit? For psi(l) a root of unity of order n
/// prime to p it vanishes mod some prime above p iff l has order n mod p.
pub fn t_factor_is_p_unit(psi: &DirichletCharacter, l: u64, p: u64) -> bool {
    if l % p == 0 {
        return true;
    }
    let chi = psi.primitive();
    let n = match chi.exponent(l as i64) {
        None => return true,
        Some(k) => chi.order() / crate::exact_algebra::arith::gcd(chi.order(), k),
    };
    mult_order(l % p, p) != n
}

/// T = {l0}: the smallest odd prime l0 not dividing p * modulus with every
/// T-factor a p-adic unit.
pub fn default_t(components: &[DirichletCharacter], p: u64, modulus: u64) -> Vec<u64> {
    let mut l = 3u64;
    loop {
        if is_prime(l) && l != p && modulus % l != 0 && components.iter().all(|c| t_factor_is_p_unit(c, l, p)) {
            return vec![l];
        }
        l += 2;
    }
}

/// Finite primes where every component ramifies: the primes of k below
/// which L/k is ramified.
pub fn default_s(components: &[DirichletCharacter]) -> Vec<u64> {
    let mut s: Vec<u64> = prime_divisors(components[0].conductor())
        .into_iter()
        .filter(|&q| components.iter().all(|c| c.conductor() % q == 0))
        .collect();
    s.sort_unstable();
    s
}

/// The Dirichlet characters of L whose restriction to Delta is chi.
pub fn induced_components(chi: &FieldCharacter) -> Result<Vec<DirichletCharacter>> {
    if chi.order() > 2 {
        return Err(Error::Unsupported("characters of order > 2".into()));
    }
    let field = chi.field();
    let out: Vec<DirichletCharacter> = field
        .characters()
        .into_iter()
        .filter(|psi| {
            chi.delta().iter().all(|&g| {
                let a = field.galois_residue(g) as i64;
                Some(psi.primitive().real_value(a)) == chi.real_value(g)
            })
        })
        .map(|psi| psi.primitive())
        .collect();
    for psi in &out {
        if !psi.is_even() {
            return Err(Error::OddInducedCharacter(format!("{psi:?}")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum StarkPayload {
    /// r = 1: a global unit.
    Unit(FieldElement),
    /// r = 2: the coordinate of the element in b_1 ^ b_2.
    WedgeCoordinate(Rational),
}

#[derive(Clone, Debug)]
pub struct StarkElement {
    pub field: AbelianField,
    pub chi: FieldCharacter,
    pub r: usize,
    pub payload: StarkPayload,
    pub components: Vec<DirichletCharacter>,
    pub s_primes: Vec<u64>,
    pub t_primes: Vec<u64>,
    pub leading: LeadingTerm,
}

#[derive(Clone, Debug)]
pub struct RegulatorCheck {
    pub ratio: Rational,
    /// |R / L* - ratio|.
    pub residual: Float,
    pub digits: u32,
    pub p_valuation: i64,
}

impl RegulatorCheck {
    pub fn is_p_unit(&self) -> bool {
        self.p_valuation == 0
    }
}

/// Places w_1..w_r: coset representatives of G / Delta.
fn places(chi: &FieldCharacter) -> Result<Vec<usize>> {
    let field = chi.field();
    let mut reps: Vec<usize> = Vec::new();
    let mut covered = vec![false; field.degree()];
    let id = field.galois_index(1)?;
    for g in std::iter::once(id).chain(0..field.degree()) {
        if covered[g] {
            continue;
        }
        reps.push(g);
        for &d in chi.delta() {
            covered[field.compose(g, d)] = true;
        }
    }
    Ok(reps)
}

/// R_chi(u_1 ^ .. ^ u_r) at `prec` bits.
pub fn regulator_chi(co: &Coordinatizer, chi: &FieldCharacter, units: &[FieldElement], prec: u32) -> Result<Float> {
    let field = co.field();
    let ws = places(chi)?;
    if ws.len() != units.len() {
        return Err(Error::RankMismatch {
            expected: ws.len(),
            found: units.len(),
        });
    }
    let scale = Float::with_val(prec, -1) / (2 * chi.delta().len() as u32);
    let rows = units
        .iter()
        .map(|u| {
            let logs = log_abs_embeddings(co, u, prec);
            ws.iter()
                .map(|&w| {
                    let mut s = Float::new(prec);
                    for &d in chi.delta() {
                        let c = chi.real_value(d).unwrap();
                        s += Float::with_val(prec, &logs[field.compose(w, d)] * c);
                    }
                    s * &scale
                })
                .collect()
        })
        .collect();
    Ok(det_float(rows))
}

fn check_ratio(ratio: &Float, p: u64, digits: u32) -> Result<RegulatorCheck> {
    let q = recognize_rational(ratio, &Integer::from(10u64.pow(12)), digits, 10)
        .ok_or_else(|| Error::NotRational(format!("regulator ratio {}", ratio.to_f64())))?;
    let residual = Float::with_val(ratio.prec(), ratio - &q).abs();
    let p_valuation = vp_rational(&q, p);
    Ok(RegulatorCheck {
        ratio: q,
        residual,
        digits,
        p_valuation,
    })
}

/// Checks R_chi(eps) against the leading term and recognizes the ratio.
pub fn verify_regulator_identity(co: &Coordinatizer, eps: &StarkElement, p: u64, digits: u32) -> Result<RegulatorCheck> {
    let prec = bits_for_digits(digits + 20);
    let StarkPayload::Unit(u) = &eps.payload else {
        return Err(Error::Unsupported("ratio check of a wedge coordinate".into()));
    };
    let r = regulator_chi(co, &eps.chi, std::slice::from_ref(u), prec)?;
    let ratio = Float::with_val(prec, &r / &eps.leading.coefficient.re);
    check_ratio(&ratio, p, digits)
}

#[derive(Clone, Debug)]
pub struct StarkParams {
    pub s_primes: Option<Vec<u64>>,
    pub t_primes: Option<Vec<u64>>,
    pub p: u64,
    pub m: u32,
    pub digits: u32,
}

impl StarkParams {
    pub fn new(p: u64, m: u32, digits: u32) -> Self {
        StarkParams {
            s_primes: None,
            t_primes: None,
            p,
            m,
            digits,
        }
    }
}

fn resolve_st(params: &StarkParams, components: &[DirichletCharacter], modulus: u64) -> (Vec<u64>, Vec<u64>) {
    let s = params.s_primes.clone().unwrap_or_else(|| default_s(components));
    let t = params
        .t_primes
        .clone()
        .unwrap_or_else(|| default_t(components, params.p, modulus));
    (s, t)
}

/// The r = 1 Stark unit of a real quadratic field, verified against the
/// leading term before it is returned.
pub fn stark_unit_rank1(co: &Coordinatizer, chi: &FieldCharacter, params: &StarkParams) -> Result<StarkElement> {
    let field = co.field();
    if chi.is_trivial() {
        return Err(Error::Unsupported("chi must be nontrivial".into()));
    }
    if params.p == 2 {
        return Err(Error::PEqualsTwo);
    }
    if chi.rank() != 1 || field.degree() != 2 {
        return Err(Error::Unsupported("rank-one elements are built for real quadratic fields".into()));
    }
    let components = induced_components(chi)?;
    let (s, t) = resolve_st(params, &components, field.modulus());
    let spec = LSeriesSpec {
        components: components.clone(),
        s_primes: s.clone(),
        t_primes: t.clone(),
        digits: params.digits,
    };
    let leading = modified_leading_term(&spec)?;
    let ctx = ProductContext::new(field, &[vec![0]])?;
    let sigma = (0..2).find(|&g| chi.real_value(g) == Some(-1)).unwrap();
    let eta = CycloProduct::eta(&[0]);
    let mut x = eta.mul(&eta.act(&ctx, sigma).pow(-1));
    for &q in s.iter().filter(|&&q| field.modulus() % q != 0) {
        let fr = field.galois_inverse(field.galois_index(q as i64)?);
        x = x.mul(&x.act(&ctx, fr).pow(-1));
    }
    for &l in &t {
        let fr = field.galois_inverse(field.galois_index(l as i64)?);
        x = x.mul(&x.act(&ctx, fr).pow(-(l as i64)));
    }
    let u = ctx.reconstruct(&x)?;
    if !field.is_unit(&u) {
        return Err(Error::RegulatorMismatch("the modified cyclotomic element is not a unit".into()));
    }
    let eps = StarkElement {
        field: field.clone(),
        chi: chi.clone(),
        r: 1,
        payload: StarkPayload::Unit(u),
        components,
        s_primes: s,
        t_primes: t,
        leading,
    };
    let check = verify_regulator_identity(co, &eps, params.p, params.digits)?;
    if check.ratio != 1 {
        return Err(Error::RegulatorMismatch(format!("R_chi / L* = {}", check.ratio)));
    }
    Ok(eps)
}

#[derive(Clone, Debug)]
pub struct Rank2Index {
    pub element: StarkElement,
    /// R_chi(b_1 ^ b_2) / L*, recognized.
    pub check: RegulatorCheck,
    /// v_p of the index of Z_p eps in the wedge square.
    pub valuation: i64,
}

/// v_p [wedge^2 (O_L^x)^chi : Z_p eps] from the ratio of the regulator of a
/// lattice basis to the leading term; eps itself is never built.
pub fn rank2_index(arith: &FieldArithmetic, chi: &FieldCharacter, params: &StarkParams) -> Result<Rank2Index> {
    let co = &arith.co;
    let field = co.field();
    if chi.rank() != 2 {
        return Err(Error::RankMismatch {
            expected: 2,
            found: chi.rank(),
        });
    }
    let components = induced_components(chi)?;
    let (s, t) = resolve_st(params, &components, field.modulus());
    let spec = LSeriesSpec {
        components: components.clone(),
        s_primes: s.clone(),
        t_primes: t.clone(),
        digits: params.digits,
    };
    let leading = modified_leading_term(&spec)?;
    if leading.order != 2 {
        return Err(Error::RankMismatch {
            expected: 2,
            found: leading.order,
        });
    }
    let lat = unit_chi_lattice(co, &arith.units, chi, params.p, params.m)?;
    let prec = bits_for_digits(params.digits + 20);
    let r = regulator_chi(co, chi, &lat.basis, prec)?;
    let ratio = Float::with_val(prec, &r / &leading.coefficient.re).abs();
    let check = check_ratio(&ratio, params.p, params.digits)?;
    let coord = Rational::from(check.ratio.recip_ref());
    Ok(Rank2Index {
        valuation: -check.p_valuation,
        check,
        element: StarkElement {
            field: field.clone(),
            chi: chi.clone(),
            r: 2,
            payload: StarkPayload::WedgeCoordinate(coord),
            components,
            s_primes: s,
            t_primes: t,
            leading,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Equal,
    LhsLess,
    Violation,
}

impl Verdict {
    pub fn of(lhs: u32, rhs: i64) -> Verdict {
        match (lhs as i64).cmp(&rhs) {
            std::cmp::Ordering::Equal => Verdict::Equal,
            std::cmp::Ordering::Less => Verdict::LhsLess,
            std::cmp::Ordering::Greater => Verdict::Violation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexReport {
    pub conductor: u64,
    pub degree: usize,
    pub chi: String,
    pub r: usize,
    pub p: u64,
    /// v_p |A_L^chi|.
    pub lhs: u32,
    /// v_p of the index of the Stark element.
    pub rhs: i64,
    /// For r = 1: p-saturation exponent of the Stark unit in the chi-lattice.
    pub rhs_saturation: Option<u32>,
    pub verdict: Verdict,
}

/// c with u = +-b^c, certified exactly.
pub fn unit_exponent(field: &AbelianField, co: &Coordinatizer, u: &FieldElement, b: &FieldElement) -> Result<i64> {
    let lu = log_abs_embeddings(co, u, 128);
    let lb = log_abs_embeddings(co, b, 128);
    let c = Float::with_val(128, &lu[0] / &lb[0]).round().to_f64() as i64;
    let bc = field.pow(b, c).ok_or_else(|| Error::DependentInput("zero base".into()))?;
    if bc == *u || field.neg(&bc) == *u {
        Ok(c)
    } else {
        Err(Error::DependentInput("unit is not a power of the lattice generator".into()))
    }
}

/// Both sides of the index formula for (L, chi, p).
pub fn theorem_ab_report(arith: &FieldArithmetic, chi: &FieldCharacter, params: &StarkParams) -> Result<IndexReport> {
    let field = arith.field();
    let p = params.p;
    let a_chi = chi_part_order(&arith.classes, chi, p)?;
    let lhs = vp(&a_chi, p);
    let (rhs, rhs_saturation) = match chi.rank() {
        1 => {
            let eps = stark_unit_rank1(&arith.co, chi, params)?;
            let StarkPayload::Unit(u) = &eps.payload else { unreachable!() };
            let lat = unit_chi_lattice(&arith.co, &arith.units, chi, p, params.m)?;
            let c = unit_exponent(field, &arith.co, u, &lat.basis[0])?;
            let v = vp(&Integer::from(c), p) as i64;
            let sat = p_saturate(&arith.co, std::slice::from_ref(u), p)?;
            if sat.exponent as i64 != v {
                return Err(Error::RegulatorMismatch(format!(
                    "lattice index gives v_p = {v}, saturation gives {}",
                    sat.exponent
                )));
            }
            (v, Some(sat.exponent))
        }
        2 => (rank2_index(arith, chi, params)?.valuation, None),
        r => {
            return Err(Error::Unsupported(format!("rank {r}")));
        }
    };
    Ok(IndexReport {
        conductor: field.conductor(),
        degree: field.degree(),
        chi: format!("{:?}", chi.psi()),
        r: chi.rank(),
        p,
        lhs,
        rhs,
        rhs_saturation,
        verdict: Verdict::of(lhs, rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(d: i64) -> (FieldArithmetic, FieldCharacter) {
        let l = AbelianField::real_quadratic(d).unwrap();
        let arith = FieldArithmetic::compute(&l, &ClassGroupOptions::default()).unwrap();
        let psi = l.characters().into_iter().find(|c| !c.is_trivial()).unwrap();
        let chi = FieldCharacter::over_rationals(&l, &psi).unwrap();
        (arith, chi)
    }

    #[test]
    fn golden_ratio_stark_unit() {
        let (arith, chi) = quad(5);
        let mut params = StarkParams::new(7, 2, 60);
        params.t_primes = Some(vec![3]);
        let eps = stark_unit_rank1(&arith.co, &chi, &params).unwrap();
        let StarkPayload::Unit(u) = &eps.payload else { panic!() };
        // 1 - chi(3) 3 = 4 and 2 e_chi doubles: u = phi^{+-8}
        let phi = &arith.units.basis[0];
        assert_eq!(unit_exponent(&arith.co.field().clone(), &arith.co, u, phi).unwrap().abs(), 8);
        let check = verify_regulator_identity(&arith.co, &eps, 7, 60).unwrap();
        assert_eq!(check.ratio, 1);
        // eps^7 picks up one factor of 7
        let l = arith.field().clone();
        let scaled = StarkElement {
            payload: StarkPayload::Unit(l.pow(u, 7).unwrap()),
            ..eps.clone()
        };
        let c7 = verify_regulator_identity(&arith.co, &scaled, 7, 60).unwrap();
        assert_eq!(c7.ratio, 7);
        assert!(!c7.is_p_unit());
    }

    #[test]
    fn trivial_character_rejected() {
        let (arith, _) = quad(2);
        let l = arith.field().clone();
        let triv = FieldCharacter::over_rationals(&l, &DirichletCharacter::trivial(1)).unwrap();
        assert!(stark_unit_rank1(&arith.co, &triv, &StarkParams::new(5, 1, 40)).is_err());
    }

    #[test]
    fn reports_rank_one() {
        for (d, p, lhs) in [(5i64, 3u64, 0u32), (5, 7, 0), (79, 3, 1), (2, 5, 0)] {
            let (arith, chi) = quad(d);
            let rep = theorem_ab_report(&arith, &chi, &StarkParams::new(p, 2, 40)).unwrap();
            assert_eq!((rep.lhs, rep.rhs, rep.verdict), (lhs, lhs as i64, Verdict::Equal), "d = {d}, p = {p}");
        }
    }

    #[test]
    fn t_unit_criterion() {
        let chi5 = DirichletCharacter::quadratic(5);
        // chi(3) = -1: 1 + 3 = 4
        assert!(t_factor_is_p_unit(&chi5, 3, 7));
        // chi(19) = 1: 1 - 19 = -18 vanishes at 3
        assert!(!t_factor_is_p_unit(&chi5, 19, 3));
        // chi(11) = 1: 1 - 11 = -10 vanishes at 5
        assert!(!t_factor_is_p_unit(&chi5, 11, 5));
        // 3 = p and 5 | f are skipped; chi(7) = -1 gives 8
        assert_eq!(default_t(&[chi5], 3, 5), vec![7]);
    }

    #[test]
    fn rank_two_index() {
        let l = AbelianField::real_quadratic(5)
            .unwrap()
            .tensor(&AbelianField::real_quadratic(13).unwrap())
            .unwrap();
        let arith = FieldArithmetic::compute(&l, &ClassGroupOptions::default()).unwrap();
        let chi = FieldCharacter::over_subfield(&l, &DirichletCharacter::quadratic(13), &[DirichletCharacter::quadratic(5)]).unwrap();
        for p in [3u64, 7] {
            let rep = theorem_ab_report(&arith, &chi, &StarkParams::new(p, 2, 40)).unwrap();
            assert_eq!((rep.lhs, rep.rhs), (0, 0), "p = {p}");
        }
    }
}
