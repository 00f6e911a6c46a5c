//! Dirichlet characters stored as exponent tables: chi(a) = exp(2 pi i k(a)/order).

use crate::exact_algebra::arith::{divisors, gcd, kronecker, lcm, primitive_root};
use crate::numeric::Complex;
use std::fmt;
use std::sync::Arc;

const NONUNIT: u32 = u32::MAX;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u64,
    table: Arc<Vec<u32>>,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi(mod {}, order {}, conductor {})", self.modulus, self.order, self.conductor())
    }
}

impl DirichletCharacter {
    /// Build from a function giving the exponent (mod `order`) on units.
    pub fn from_fn(modulus: u64, order: u64, f: impl Fn(u64) -> u64) -> Self {
        let table = (0..modulus.max(1))
            .map(|a| {
                if gcd(a, modulus) == 1 || modulus == 1 {
                    (f(a) % order) as u32
                } else {
                    NONUNIT
                }
            })
            .collect();
        DirichletCharacter {
            modulus: modulus.max(1),
            order,
            table: Arc::new(table),
        }
        .normalized()
    }

    pub fn trivial(modulus: u64) -> Self {
        Self::from_fn(modulus, 1, |_| 0)
    }

    /// Kronecker character (D / .) of a fundamental discriminant D.
    pub fn quadratic(d: i64) -> Self {
        let m = d.unsigned_abs();
        Self::from_fn(m, 2, |a| if kronecker(d, a) == -1 { 1 } else { 0 })
    }

    /// chi(g^j) = zeta_order^{j k} for the smallest primitive root g mod prime q.
    pub fn cyclic_prime(q: u64, order: u64, k: u64) -> Self {
        assert!((q - 1) % order == 0);
        let g = primitive_root(q);
        let mut log = vec![0u64; q as usize];
        let mut x = 1u64;
        for j in 0..q - 1 {
            log[x as usize] = j;
            x = x * g % q;
        }
        Self::from_fn(q, order, |a| log[(a % q) as usize] * k)
    }

    fn normalized(mut self) -> Self {
        let mut g = self.order;
        for &k in self.table.iter() {
            if k != NONUNIT {
                g = gcd(g, k as u64);
            }
        }
        if g > 1 {
            let t: Vec<u32> = self
                .table
                .iter()
                .map(|&k| if k == NONUNIT { k } else { (k as u64 / g) as u32 })
                .collect();
            self.order /= g;
            self.table = Arc::new(t);
        }
        self
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Exponent k with chi(a) = zeta_order^k, or None when gcd(a, modulus) > 1.
    pub fn exponent(&self, a: i64) -> Option<u64> {
        let r = a.rem_euclid(self.modulus as i64) as usize;
        let k = self.table[r];
        (k != NONUNIT).then_some(k as u64)
    }

    /// Real value for characters of order <= 2 (0 off the units).
    pub fn real_value(&self, a: i64) -> i64 {
        assert!(self.order <= 2, "character is not real");
        match self.exponent(a) {
            None => 0,
            Some(0) => 1,
            Some(_) => -1,
        }
    }

    pub fn complex_value(&self, a: i64, prec: u32) -> Complex {
        match self.exponent(a) {
            None => Complex::zero(prec),
            Some(k) => Complex::root_of_unity(prec, k as i64, self.order),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn is_real(&self) -> bool {
        self.order <= 2
    }

    pub fn is_even(&self) -> bool {
        self.modulus <= 2 || self.exponent(-1) == Some(0)
    }

    /// Same character viewed modulo a multiple of the modulus.
    pub fn lift(&self, modulus: u64) -> Self {
        assert!(modulus % self.modulus == 0);
        let t = self.clone();
        Self::from_fn(modulus, self.order, move |a| t.exponent(a as i64).unwrap())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = lcm(self.modulus, other.modulus);
        let o = lcm(self.order, other.order);
        let (s1, s2) = (o / self.order, o / other.order);
        let (a, b) = (self.clone(), other.clone());
        Self::from_fn(m, o, move |x| a.exponent(x as i64).unwrap() * s1 + b.exponent(x as i64).unwrap() * s2)
    }

    pub fn pow(&self, k: u64) -> Self {
        let a = self.clone();
        Self::from_fn(self.modulus, self.order, move |x| a.exponent(x as i64).unwrap() * k)
    }

    pub fn conj(&self) -> Self {
        self.pow(self.order - 1)
    }

    /// Smallest d | modulus such that chi is trivial on units = 1 mod d.
    pub fn conductor(&self) -> u64 {
        for d in divisors(self.modulus) {
            let mut ok = true;
            let mut a = 1 + d;
            while a < self.modulus + 1 {
                if let Some(k) = self.exponent(a as i64) {
                    if k != 0 {
                        ok = false;
                        break;
                    }
                }
                a += d;
            }
            if ok {
                return d;
            }
        }
        self.modulus
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> Self {
        let c = self.conductor();
        if c == self.modulus {
            return self.clone();
        }
        let t = self.clone();
        let m = self.modulus;
        Self::from_fn(c, self.order, move |b| {
            let mut a = b;
            while gcd(a, m) != 1 {
                a += c;
            }
            t.exponent(a as i64).unwrap()
        })
    }

    /// Equality as primitive characters.
    pub fn same_primitive(&self, other: &Self) -> bool {
        let (a, b) = (self.primitive(), other.primitive());
        a.modulus == b.modulus && a.order == b.order && a.table == b.table
    }

    /// Residues a mod modulus with chi(a) = 1.
    pub fn kernel(&self) -> Vec<u64> {
        (0..self.modulus)
            .filter(|&a| self.exponent(a as i64) == Some(0))
            .collect()
    }

    /// Gauss sum as a complex number.
    pub fn gauss_sum(&self, prec: u32) -> Complex {
        let mut s = Complex::zero(prec);
        for a in 1..self.modulus {
            if let Some(k) = self.exponent(a as i64) {
                let z = Complex::root_of_unity(prec, a as i64, self.modulus);
                let c = Complex::root_of_unity(prec, k as i64, self.order);
                s = s.add(&z.mul(&c));
            }
        }
        s
    }
}

/// Character of (Z/q)^× sending the chosen primitive root to zeta_order.
pub fn generator_character(q: u64, order: u64) -> DirichletCharacter {
    DirichletCharacter::cyclic_prime(q, order, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_characters() {
        let chi = DirichletCharacter::quadratic(5);
        assert!(chi.is_even());
        assert_eq!(chi.conductor(), 5);
        assert_eq!(chi.real_value(2), -1);
        assert_eq!(chi.real_value(4), 1);
        let chi = DirichletCharacter::quadratic(-4);
        assert!(!chi.is_even());
        let prod = DirichletCharacter::quadratic(5).mul(&DirichletCharacter::quadratic(13));
        assert_eq!(prod.conductor(), 65);
        assert!(prod.same_primitive(&DirichletCharacter::quadratic(65)));
        let lifted = DirichletCharacter::quadratic(5).lift(15);
        assert_eq!(lifted.conductor(), 5);
        assert!(lifted.primitive().same_primitive(&DirichletCharacter::quadratic(5)));
    }
}
