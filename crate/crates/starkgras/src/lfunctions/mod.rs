//! Dirichlet L-values at s = 0: exact L(0, psi) for odd psi, high-precision
//! L'(0, psi) for even psi, S/T-modified leading terms and the analytic
//! class number formula.

use crate::cyclotomic_fields::field::cyclotomic_polynomial;
use crate::cyclotomic_fields::{AbelianField, DirichletCharacter};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{gcd, prime_divisors};
use crate::numeric::{agreeing_digits, bits_for_digits, pi, Complex};
use rug::{Float, Integer, Rational};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// sum_k c_k zeta_order^k with rational c_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclotomicRational {
    pub order: u64,
    pub coeffs: Vec<Rational>,
}

impl CyclotomicRational {
    /// Coefficients reduced modulo the cyclotomic polynomial.
    pub fn reduced(&self) -> Vec<Rational> {
        let phi = cyclotomic_polynomial(self.order.max(1));
        let d = phi.len() - 1;
        let mut v = self.coeffs.clone();
        for k in (d..v.len()).rev() {
            if v[k] != 0 {
                let c = std::mem::take(&mut v[k]);
                for (j, &pj) in phi[..d].iter().enumerate() {
                    if pj != 0 {
                        v[k - d + j] -= Rational::from(&c * pj);
                    }
                }
            }
        }
        v.truncate(d);
        v
    }

    pub fn as_rational(&self) -> Option<Rational> {
        let r = self.reduced();
        r[1..].iter().all(|c| *c == 0).then(|| r[0].clone())
    }

    pub fn to_complex(&self, prec: u32) -> Complex {
        let mut s = Complex::zero(prec);
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c != 0 {
                let z = Complex::root_of_unity(prec, k as i64, self.order.max(1));
                s = s.add(&z.scale(&Float::with_val(prec, c)));
            }
        }
        s
    }
}

/// L(0, psi) = -(1/N) sum_{a=1}^{N} psi(a) a for odd psi mod N.
pub fn l_at_zero_exact(psi: &DirichletCharacter) -> Result<CyclotomicRational> {
    if psi.is_even() {
        return Err(Error::EvenCharacter);
    }
    let n = psi.modulus();
    let mut coeffs = vec![Rational::new(); psi.order() as usize];
    for a in 1..=n {
        if let Some(k) = psi.exponent(a as i64) {
            coeffs[k as usize] -= Rational::from((a, n));
        }
    }
    Ok(CyclotomicRational {
        order: psi.order(),
        coeffs,
    })
}

fn euler_correction(psi: &DirichletCharacter, chi: &DirichletCharacter, prec: u32) -> Complex {
    // L(s, psi) = L(s, chi) prod_{q | N, q not | f} (1 - chi(q) q^{-s}); at s = 0
    let mut c = Complex::real(Float::with_val(prec, 1));
    for q in prime_divisors(psi.modulus()) {
        if chi.modulus() % q != 0 {
            let one = Complex::real(Float::with_val(prec, 1));
            c = c.mul(&one.sub(&chi.complex_value(q as i64, prec)));
        }
    }
    c
}

fn series_primitive(chi: &DirichletCharacter, prec: u32) -> Complex {
    let f = chi.modulus();
    let fl = Float::with_val(prec, f);
    let sqrt_f = fl.clone().sqrt();
    let w = chi.gauss_sum(prec).scale(&Float::with_val(prec, sqrt_f.recip_ref()));
    let pi_f = Float::with_val(prec, pi(prec) / &fl);
    let sqrt_pi_f = pi_f.clone().sqrt();
    // terms decay like exp(-pi n^2 / f)
    let digits = prec as f64 / std::f64::consts::LOG2_10;
    let nmax = ((digits + 5.0) * std::f64::consts::LN_10 * f as f64 / std::f64::consts::PI).sqrt() as u64 + 2;
    let mut a = Complex::zero(prec);
    let mut b = Complex::zero(prec);
    for n in 1..=nmax {
        let Some(_) = chi.exponent(n as i64) else { continue };
        let x = Float::with_val(prec, &pi_f * (n * n));
        let e1 = -Float::with_val(prec, -x).eint();
        a = a.add(&chi.complex_value(n as i64, prec).scale(&e1));
        let y = Float::with_val(prec, &sqrt_pi_f * n).erfc() * &sqrt_f / n;
        b = b.add(&chi.conj().complex_value(n as i64, prec).scale(&y));
    }
    let half = Float::with_val(prec, 0.5);
    a.add(&w.mul(&b)).scale(&half)
}

type DerivativeKey = (DirichletCharacter, u32);

/// Certified values already computed in this process, keyed by character
/// and requested digits.
fn derivative_memo() -> &'static Mutex<HashMap<DerivativeKey, Complex>> {
    static MEMO: OnceLock<Mutex<HashMap<DerivativeKey, Complex>>> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// L'(0, psi) for even nontrivial psi, from the theta-series form of the
/// functional equation, certified by agreement of two working precisions.
pub fn l_derivative_at_zero(psi: &DirichletCharacter, digits: u32) -> Result<Complex> {
    if !psi.is_even() {
        return Err(Error::ChiOdd);
    }
    if psi.is_trivial() {
        return Err(Error::Unsupported("L'(0) of the trivial character".into()));
    }
    let key = (psi.clone(), digits);
    if let Some(v) = derivative_memo().lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = certified_derivative(psi, digits)?;
    derivative_memo().lock().unwrap().insert(key, v.clone());
    Ok(v)
}

fn certified_derivative(psi: &DirichletCharacter, digits: u32) -> Result<Complex> {
    let chi = psi.primitive();
    let lo = bits_for_digits(digits + 10);
    let hi = bits_for_digits(digits + 30);
    let v1 = series_primitive(&chi, lo).mul(&euler_correction(psi, &chi, lo));
    let v2 = series_primitive(&chi, hi).mul(&euler_correction(psi, &chi, hi));
    let scale = v2.abs();
    let diff = v2.sub(&v1).abs();
    if !scale.is_zero() {
        let agree = -(Float::with_val(hi, &diff / &scale)).to_f64().log10();
        if agree < digits as f64 {
            return Err(Error::PrecisionUnreached(format!(
                "L'(0) agrees to {agree:.1} digits, wanted {digits}"
            )));
        }
    }
    Ok(v2)
}

/// L'(0, psi) = -(1/2) sum_a chi(a) log|1 - zeta_f^a| for the primitive chi
/// behind psi, times the Euler factors at the extra primes.
pub fn l_derivative_finite(psi: &DirichletCharacter, prec: u32) -> Complex {
    let chi = psi.primitive();
    let f = chi.modulus();
    let mut s = Complex::zero(prec);
    for a in 1..f {
        if gcd(a, f) != 1 {
            continue;
        }
        let ang = Float::with_val(prec, pi(prec) * a) / f;
        let l = (Float::with_val(prec, ang.sin()).abs() * 2u32).ln();
        s = s.add(&chi.complex_value(a as i64, prec).scale(&l));
    }
    s.scale(&Float::with_val(prec, -0.5)).mul(&euler_correction(psi, &chi, prec))
}

/// Characters of an L-function over Q: the inducing Dirichlet characters
/// plus the finite S- and T-sets.
#[derive(Clone, Debug)]
pub struct LSeriesSpec {
    pub components: Vec<DirichletCharacter>,
    pub s_primes: Vec<u64>,
    pub t_primes: Vec<u64>,
    pub digits: u32,
}

#[derive(Clone, Debug)]
pub struct LeadingTerm {
    pub order: usize,
    pub coefficient: Complex,
    pub digits: u32,
}

/// Leading coefficient at s = 0 of prod_i L_{S,T}(s, psi_i).
pub fn modified_leading_term(spec: &LSeriesSpec) -> Result<LeadingTerm> {
    let prec = bits_for_digits(spec.digits + 30);
    for psi in &spec.components {
        if !psi.is_even() {
            return Err(Error::OddInducedCharacter(format!("{psi:?}")));
        }
    }
    for &q in &spec.s_primes {
        if spec.t_primes.contains(&q) {
            return Err(Error::InvalidConfig(format!("{q} lies in both S and T")));
        }
    }
    let one = Complex::real(Float::with_val(prec, 1));
    let mut c = one.clone();
    let mut order = 0;
    for psi in &spec.components {
        let chi = psi.primitive();
        if chi.is_trivial() {
            // zeta(0) = -1/2 with one zero per finite prime in S
            c = c.scale(&Float::with_val(prec, -0.5));
            for &q in &spec.s_primes {
                c = c.scale(&Float::with_val(prec, q).ln());
                order += 1;
            }
        } else {
            c = c.mul(&l_derivative_at_zero(&chi, spec.digits + 10)?);
            order += 1;
            for &q in &spec.s_primes {
                let v = chi.complex_value(q as i64, prec);
                let factor = one.sub(&v);
                if factor.abs() < Float::with_val(prec, 1e-30) {
                    return Err(Error::SplitPrimeInS { q });
                }
                c = c.mul(&factor);
            }
        }
        for &l in &spec.t_primes {
            let v = chi.complex_value(l as i64, prec).scale(&Float::with_val(prec, l));
            c = c.mul(&one.sub(&v));
        }
    }
    Ok(LeadingTerm {
        order,
        coefficient: c,
        digits: spec.digits,
    })
}

/// h R of a totally real abelian field from prod_{psi != 1} L'(0, psi).
pub fn analytic_hr(l: &AbelianField, digits: u32) -> Result<Float> {
    let prec = bits_for_digits(digits + 30);
    let mut c = Complex::real(Float::with_val(prec, 1));
    for psi in l.characters() {
        if !psi.is_trivial() {
            c = c.mul(&l_derivative_at_zero(&psi.primitive(), digits + 10)?);
        }
    }
    Ok(c.re)
}

/// Relative residual between -h R / 2 (algebraic side) and the leading
/// term of zeta_L at s = 0 (analytic side).
pub fn class_number_formula_check(l: &AbelianField, h: &Integer, regulator: &Float, digits: u32) -> Result<Float> {
    let prec = bits_for_digits(digits + 30);
    let analytic = Float::with_val(prec, -0.5) * analytic_hr(l, digits)?;
    let algebraic = Float::with_val(prec, regulator * h) / -2i32;
    Ok(crate::numeric::relative_residual(&analytic, &algebraic))
}

/// Digits of agreement between the series and the finite formula.
pub fn cross_check_digits(psi: &DirichletCharacter, digits: u32) -> Result<f64> {
    let a = l_derivative_at_zero(psi, digits)?;
    let b = l_derivative_finite(psi, bits_for_digits(digits + 30));
    Ok(agreeing_digits(&a.abs(), &b.abs()).min(agreeing_digits(&a.re, &b.re)))
}
