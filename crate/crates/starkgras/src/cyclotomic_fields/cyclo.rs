//! Cyclotomic numbers in the group ring Z[C_N] = Z[x]/(x^N - 1), reduced
//! to Z[zeta_N] only when compared or converted.

use super::field::{cyclotomic_polynomial, AbelianField, FieldElement};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{gcd, invmod};
use rug::Integer;
use std::collections::BTreeMap;

/// Element of Z[C_N]; its image in Z[zeta_N] is the cyclotomic integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloElement {
    modulus: u64,
    coeffs: Vec<Integer>,
}

impl CycloElement {
    pub fn zero(modulus: u64) -> Self {
        CycloElement {
            modulus,
            coeffs: vec![Integer::new(); modulus as usize],
        }
    }

    pub fn one(modulus: u64) -> Self {
        Self::monomial(modulus, 0, 1)
    }

    /// c * zeta^k
    pub fn monomial(modulus: u64, k: i64, c: i64) -> Self {
        let mut z = Self::zero(modulus);
        z.coeffs[k.rem_euclid(modulus as i64) as usize] = Integer::from(c);
        z
    }

    /// 1 - zeta^k
    pub fn one_minus_zeta(modulus: u64, k: i64) -> Self {
        Self::one(modulus).sub(&Self::monomial(modulus, k, 1))
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.modulus, o.modulus);
        CycloElement {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Integer::from(a + b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.modulus, o.modulus);
        CycloElement {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Integer::from(a - b)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.modulus, o.modulus);
        let n = self.modulus as usize;
        let mut out = vec![Integer::new(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if *b != 0 {
                    out[(i + j) % n] += Integer::from(a * b);
                }
            }
        }
        CycloElement {
            modulus: self.modulus,
            coeffs: out,
        }
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut acc = Self::one(self.modulus);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// zeta -> zeta^a
    pub fn galois(&self, a: i64) -> Self {
        let n = self.modulus as i64;
        let mut out = Self::zero(self.modulus);
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c != 0 {
                out.coeffs[(k as i64 * a).rem_euclid(n) as usize] += c;
            }
        }
        out
    }

    /// Image under Z[C_d] -> Z[C_N], zeta_d -> zeta_N^{N/d}.
    pub fn inflate(&self, modulus: u64) -> Self {
        assert_eq!(modulus % self.modulus, 0);
        let s = modulus / self.modulus;
        let mut out = Self::zero(modulus);
        for (k, c) in self.coeffs.iter().enumerate() {
            out.coeffs[k * s as usize] = c.clone();
        }
        out
    }

    /// Coefficients in the power basis 1, zeta, ..., zeta^{phi(N)-1}.
    pub fn reduced(&self) -> Vec<Integer> {
        let phi = cyclotomic_polynomial(self.modulus);
        let d = phi.len() - 1;
        let mut v = self.coeffs.clone();
        for k in (d..v.len()).rev() {
            if v[k] != 0 {
                let c = std::mem::take(&mut v[k]);
                for (j, &pj) in phi[..d].iter().enumerate() {
                    if pj != 0 {
                        v[k - d + j] -= Integer::from(&c * pj);
                    }
                }
            }
        }
        v.truncate(d);
        v
    }

    /// Equality in Z[zeta_N].
    pub fn equals(&self, o: &Self) -> bool {
        self.sub(o).reduced().iter().all(|c| *c == 0)
    }

    /// Product of the conjugates by every unit a = 1 mod `sub_modulus`:
    /// the norm from Q(zeta_N) to Q(zeta_sub).
    pub fn norm_to(&self, sub_modulus: u64) -> Self {
        let n = self.modulus;
        let mut acc = Self::one(n);
        for a in 0..n {
            if gcd(a, n) == 1 && a % sub_modulus == 1 % sub_modulus {
                acc = acc.mul(&self.galois(a as i64));
            }
        }
        acc
    }

    /// The element of a single-factor field of the same modulus.
    pub fn to_field(&self, k: &AbelianField) -> Result<FieldElement> {
        if k.factor_count() != 1 || k.modulus() != self.modulus {
            return Err(Error::LevelMismatch(format!(
                "element of Q(zeta_{}) cannot be read in a field of modulus {}",
                self.modulus,
                k.modulus()
            )));
        }
        k.from_power_basis(&self.coeffs)
            .ok_or_else(|| Error::LevelMismatch("element does not lie in the field".into()))
    }
}

fn half_exponent(f: u64, a: u64) -> i64 {
    let t = 1 - a as i64;
    if t % 2 == 0 {
        t / 2
    } else {
        let inv2 = invmod(2, f).expect("f odd") as i64;
        (t * inv2).rem_euclid(f as i64)
    }
}

/// xi_a = zeta^{(1-a)/2} (1 - zeta^a)/(1 - zeta) and its inverse.
fn cyclotomic_number(f: u64, a: u64) -> (CycloElement, CycloElement) {
    let h = half_exponent(f, a);
    let mut geo = CycloElement::zero(f);
    for j in 0..a {
        geo.coeffs[(j % f) as usize] += 1;
    }
    let xi = CycloElement::monomial(f, h, 1).mul(&geo);
    // (1 - zeta)/(1 - zeta^a) = sum_{j<k} zeta^{aj} with a k = 1 mod f
    let k = invmod(a % f, f).unwrap();
    let mut inv = CycloElement::zero(f);
    for j in 0..k {
        inv.coeffs[((a * j) % f) as usize] += 1;
    }
    let inv = CycloElement::monomial(f, -h, 1).mul(&inv);
    (xi, inv)
}

/// The real cyclotomic unit xi_a raised to prod_{l in T} (1 - l Fr_l^{-1}),
/// as an element of `k`, a single-factor field of modulus f containing it.
pub fn cyclotomic_unit(k: &AbelianField, a: i64, t: &[u64]) -> Result<FieldElement> {
    let f = k.modulus();
    let ar = a.rem_euclid(f.max(1) as i64) as u64;
    if f <= 2 || gcd(ar, f) != 1 {
        return Err(Error::BadResidue { a, f });
    }
    if ar == 1 || ar == f - 1 {
        return Err(Error::DegenerateResidue { f });
    }
    let mut exps: BTreeMap<u64, i64> = BTreeMap::from([(1, 1)]);
    for &l in t {
        if gcd(l, f) != 1 {
            return Err(Error::BadLevelPrime {
                q: l,
                reason: format!("T prime divides the conductor {f}"),
            });
        }
        let linv = invmod(l % f, f).unwrap();
        let mut next = exps.clone();
        for (&b, &c) in &exps {
            *next.entry(b * linv % f).or_insert(0) -= l as i64 * c;
        }
        next.retain(|_, c| *c != 0);
        exps = next;
    }
    let (xi, xi_inv) = cyclotomic_number(f, ar);
    let mut acc = CycloElement::one(f);
    for (&b, &c) in &exps {
        let base = if c > 0 { xi.galois(b as i64) } else { xi_inv.galois(b as i64) };
        acc = acc.mul(&base.pow(c.unsigned_abs()));
    }
    debug_assert!(acc.equals(&acc.galois(-1)));
    acc.to_field(k)
}

/// Exact check of N_{Q(zeta_fq)/Q(zeta_f)}(x) = y^{1 - Fr_q^{-1}} (or = y when
/// q | f) in Z[zeta_fq], with y inflated from Q(zeta_f).
pub fn power_basis_norm_relation(q: u64, top: &CycloElement, bottom: &CycloElement) -> Result<bool> {
    let f = bottom.modulus();
    if top.modulus() != f * q {
        return Err(Error::LevelMismatch(format!(
            "top modulus {} is not {} * {}",
            top.modulus(),
            f,
            q
        )));
    }
    let lhs = top.norm_to(f);
    let y = bottom.inflate(f * q);
    if f % q == 0 {
        return Ok(lhs.equals(&y));
    }
    let qinv = invmod(q % f, f).unwrap() as i64;
    let y_fr = bottom.galois(qinv).inflate(f * q);
    Ok(lhs.mul(&y_fr).equals(&y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    #[test]
    fn golden_ratio_unit() {
        let k = AbelianField::real_quadratic(5).unwrap();
        let u = cyclotomic_unit(&k, 2, &[]).unwrap();
        let mp = k.minimal_polynomial(&u);
        let a = mp[1].clone();
        assert_eq!(mp[2], 1);
        assert!(a == 1 || a == -1);
        assert_eq!(mp[0], -1);
    }

    #[test]
    fn relation_eleven_over_five() {
        let top = CycloElement::one_minus_zeta(55, 1);
        let bottom = CycloElement::one_minus_zeta(5, 1);
        assert!(power_basis_norm_relation(11, &top, &bottom).unwrap());
        let bad = top.mul(&CycloElement::monomial(55, 0, 2));
        assert!(!power_basis_norm_relation(11, &bad, &bottom).unwrap());
        // roots of unity in Q(zeta_55) all have norm 1 here; use q = 3 instead
        let top = CycloElement::one_minus_zeta(15, 1);
        assert!(power_basis_norm_relation(3, &top, &bottom).unwrap());
        let bad = top.mul(&CycloElement::monomial(15, 1, 1));
        assert!(!power_basis_norm_relation(3, &bad, &bottom).unwrap());
    }

    #[test]
    fn t_modified_norms() {
        let k = AbelianField::real_quadratic(2).unwrap();
        assert_eq!(k.modulus(), 8);
        let u = cyclotomic_unit(&k, 3, &[]).unwrap();
        let n = k.norm(&u);
        assert!(n == 1 || n == -1);
        let ut = cyclotomic_unit(&k, 3, &[3]).unwrap();
        assert!(k.is_unit(&ut));
        assert!(matches!(cyclotomic_unit(&k, 7, &[]), Err(Error::DegenerateResidue { .. })));
        let k12 = AbelianField::real_quadratic(3).unwrap();
        let v = cyclotomic_unit(&k12, 5, &[]).unwrap();
        assert_eq!(k12.norm(&v).clone().abs(), Rational::from(1));
    }
}
