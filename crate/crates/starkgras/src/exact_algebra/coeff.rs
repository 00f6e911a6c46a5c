//! Coefficient rings Z/p^m and their unramified extensions
//! (Z/p^m)[x]/(h) (Galois rings), with Teichmüller roots of unity.

use super::arith::{invmod, mult_order, mulmod, prime_divisors};
use crate::error::{Error, Result};
use rug::ops::Pow;
use rug::Integer;

/// Polynomials over F_p, low degree first, no trailing zeros.
fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let b = trim(b.to_vec());
    let mut r = trim(a.iter().map(|x| x % p).collect());
    let db = b.len() - 1;
    let lead_inv = invmod(b[db], p).expect("nonzero leading coefficient");
    while r.len() > db {
        let dr = r.len() - 1;
        let f = mulmod(r[dr], lead_inv, p);
        for i in 0..=db {
            let t = mulmod(f, b[i], p);
            r[dr - db + i] = (r[dr - db + i] + p - t) % p;
        }
        r = trim(r);
    }
    r
}

fn poly_mul_mod(a: &[u64], b: &[u64], h: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mulmod(*x, *y, p)) % p;
        }
    }
    poly_rem(&out, h, p)
}

fn poly_pow_mod(a: &[u64], mut e: u64, h: &[u64], p: u64) -> Vec<u64> {
    let mut base = poly_rem(a, h, p);
    let mut r = vec![1u64];
    while e > 0 {
        if e & 1 == 1 {
            r = poly_mul_mod(&r, &base, h, p);
        }
        base = poly_mul_mod(&base, &base, h, p);
        e >>= 1;
    }
    r
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Extended Euclid: returns s with s*a = gcd (mod b); None if gcd != const.
fn poly_inverse(a: &[u64], h: &[u64], p: u64) -> Option<Vec<u64>> {
    let (mut r0, mut r1) = (trim(h.to_vec()), poly_rem(a, h, p));
    let (mut s0, mut s1): (Vec<u64>, Vec<u64>) = (Vec::new(), vec![1]);
    while !r1.is_empty() {
        // q = r0 / r1
        let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
        let mut r = r0.clone();
        let d1 = r1.len() - 1;
        let li = invmod(r1[d1], p)?;
        while r.len() > d1 {
            let dr = r.len() - 1;
            let f = mulmod(r[dr], li, p);
            q[dr - d1] = f;
            for i in 0..=d1 {
                let t = mulmod(f, r1[i], p);
                r[dr - d1 + i] = (r[dr - d1 + i] + p - t) % p;
            }
            r = trim(r);
        }
        let qs1 = {
            let mut out = vec![0u64; q.len() + s1.len()];
            for (i, x) in q.iter().enumerate() {
                for (j, y) in s1.iter().enumerate() {
                    out[i + j] = (out[i + j] + mulmod(*x, *y, p)) % p;
                }
            }
            trim(out)
        };
        let mut s2 = vec![0u64; s0.len().max(qs1.len())];
        for (i, x) in s0.iter().enumerate() {
            s2[i] = *x;
        }
        for (i, x) in qs1.iter().enumerate() {
            s2[i] = (s2[i] + p - x) % p;
        }
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = trim(s2);
    }
    if r0.len() != 1 {
        return None;
    }
    let c = invmod(r0[0], p)?;
    Some(s0.iter().map(|x| mulmod(*x, c, p)).collect())
}

/// Rabin's irreducibility test for a monic polynomial of degree d over F_p.
pub fn is_irreducible_mod_p(h: &[u64], p: u64) -> bool {
    let d = h.len() - 1;
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let frob_iter = |k: usize| {
        let mut t = x.clone();
        for _ in 0..k {
            t = poly_pow_mod(&t, p, h, p);
        }
        t
    };
    let full = frob_iter(d);
    if trim(full) != x {
        return false;
    }
    for r in prime_divisors(d as u64) {
        let mut t = frob_iter(d / r as usize);
        t.resize(t.len().max(2), 0);
        t[1] = (t[1] + p - 1) % p;
        let g = poly_gcd(h, &trim(t), p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

/// The ring (Z/p^m)[x]/(h) with h monic of degree d, irreducible mod p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffRing {
    p: u64,
    m: u32,
    modulus: u64,
    h: Vec<u64>,
}

pub type Coeff = Vec<u64>;

impl CoeffRing {
    pub fn integers(p: u64, m: u32) -> Self {
        CoeffRing {
            p,
            m,
            modulus: p.pow(m),
            h: vec![0, 1],
        }
    }

    /// Galois ring of residue degree d (first irreducible monic polynomial in
    /// lexicographic order).
    pub fn galois(p: u64, m: u32, d: usize) -> Self {
        if d == 1 {
            return Self::integers(p, m);
        }
        // codes enumerate monic polynomials by their base-p digits
        for code in 0u64.. {
            let mut h = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                h.push(c % p);
                c /= p;
            }
            h.push(1);
            if h[0] != 0 && is_irreducible_mod_p(&h, p) {
                return CoeffRing {
                    p,
                    m,
                    modulus: p.pow(m),
                    h,
                };
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    /// Smallest coefficient ring containing a primitive n-th root of unity,
    /// together with that root (a Teichmüller lift).
    pub fn with_root_of_unity(p: u64, m: u32, n: u64) -> Result<(Self, Coeff)> {
        if n % p == 0 {
            return Err(Error::UnrealizableCharacter { order: n, p });
        }
        let d = if n == 1 { 1 } else { mult_order(p % n, n) as usize };
        let ring = Self::galois(p, m, d);
        let root = ring.primitive_root_of_unity(n);
        Ok((ring, root))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn degree(&self) -> usize {
        self.h.len() - 1
    }

    pub fn zero(&self) -> Coeff {
        vec![0; self.degree()]
    }

    pub fn one(&self) -> Coeff {
        self.from_int(1)
    }

    pub fn from_int(&self, a: i64) -> Coeff {
        let mut c = self.zero();
        c[0] = super::arith::reduce_i64(a, self.modulus);
        c
    }

    pub fn add(&self, a: &Coeff, b: &Coeff) -> Coeff {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.modulus).collect()
    }

    pub fn sub(&self, a: &Coeff, b: &Coeff) -> Coeff {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x + self.modulus - y) % self.modulus)
            .collect()
    }

    pub fn neg(&self, a: &Coeff) -> Coeff {
        a.iter().map(|x| (self.modulus - x) % self.modulus).collect()
    }

    pub fn scale(&self, a: &Coeff, k: u64) -> Coeff {
        a.iter().map(|x| mulmod(*x, k % self.modulus, self.modulus)).collect()
    }

    pub fn mul(&self, a: &Coeff, b: &Coeff) -> Coeff {
        let d = self.degree();
        let md = self.modulus;
        if d == 1 {
            return vec![mulmod(a[0], b[0], md)];
        }
        if md <= 1 << 32 {
            return self.mul_lazy(a, b);
        }
        let mut prod = vec![0u128; 2 * d - 1];
        for i in 0..d {
            if a[i] == 0 {
                continue;
            }
            for j in 0..d {
                prod[i + j] = (prod[i + j] + a[i] as u128 * b[j] as u128) % md as u128;
            }
        }
        // reduce by monic h: x^d = -sum h_i x^i
        for k in (d..2 * d - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..d {
                let t = c * self.h[i] as u128 % md as u128;
                prod[k - d + i] = (prod[k - d + i] + md as u128 - t) % md as u128;
            }
        }
        prod[..d].iter().map(|&x| x as u64).collect()
    }

    /// `mul` for moduli below 2^32: every product and every reduction term is
    /// below 2^64, so at most 2d of them fit in a u128 before reducing.
    fn mul_lazy(&self, a: &Coeff, b: &Coeff) -> Coeff {
        let d = self.degree();
        let md = self.modulus as u128;
        let mut prod = vec![0u128; 2 * d - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] += x as u128 * y as u128;
            }
        }
        for k in (d..2 * d - 1).rev() {
            let c = prod[k] % md;
            if c == 0 {
                continue;
            }
            for i in 0..d {
                prod[k - d + i] += c * (md - self.h[i] as u128 % md);
            }
        }
        prod[..d].iter().map(|&x| (x % md) as u64).collect()
    }

    pub fn pow(&self, a: &Coeff, mut e: u64) -> Coeff {
        let mut base = a.clone();
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        r
    }

    pub fn is_zero(&self, a: &Coeff) -> bool {
        a.iter().all(|&x| x % self.modulus == 0)
    }

    pub fn is_unit(&self, a: &Coeff) -> bool {
        a.iter().any(|&x| x % self.p != 0)
    }

    pub fn inv(&self, a: &Coeff) -> Option<Coeff> {
        let p = self.p;
        let amod: Vec<u64> = a.iter().map(|x| x % p).collect();
        let s = poly_inverse(&amod, &self.h, p)?;
        let mut x = self.zero();
        for (i, c) in s.iter().enumerate() {
            x[i] = *c;
        }
        // Newton: x <- x (2 - a x)
        let two = self.from_int(2);
        let mut prec = 1;
        while prec < self.m {
            let ax = self.mul(a, &x);
            x = self.mul(&x, &self.sub(&two, &ax));
            prec *= 2;
        }
        Some(x)
    }

    fn frobenius_power(&self, a: &Coeff, times: usize) -> Coeff {
        let mut t = a.clone();
        for _ in 0..times {
            t = self.pow(&t, self.p);
        }
        t
    }

    /// Deterministic primitive n-th root of unity (n | p^d - 1).
    pub fn primitive_root_of_unity(&self, n: u64) -> Coeff {
        let d = self.degree();
        if n == 1 {
            return self.one();
        }
        let q_minus_1 = Integer::from(self.p).pow(d as u32) - 1u32;
        assert!(q_minus_1.is_divisible(&Integer::from(n)), "n must divide p^d - 1");
        let cofactor = q_minus_1 / n;
        let primes = prime_divisors(n);
        let mut code = 1u64;
        loop {
            // candidate a from the base-p digits of code
            let mut a = self.zero();
            let mut c = code;
            for slot in a.iter_mut() {
                *slot = c % self.p;
                c /= self.p;
            }
            code += 1;
            if !self.is_unit(&a) {
                continue;
            }
            // Teichmüller lift: a^{q^{m-1}} has order dividing q - 1.
            let t = self.frobenius_power(&a, d * (self.m as usize - 1));
            let zeta = pow_big(self, &t, &cofactor);
            let ok = primes.iter().all(|&r| {
                let z = self.pow(&zeta, n / r);
                let mut diff = self.sub(&z, &self.one());
                for x in diff.iter_mut() {
                    *x %= self.p;
                }
                !diff.iter().all(|&x| x == 0)
            });
            if ok {
                return zeta;
            }
        }
    }
}

fn pow_big(r: &CoeffRing, a: &Coeff, e: &Integer) -> Coeff {
    let mut base = a.clone();
    let mut out = r.one();
    for i in 0..e.significant_bits() {
        if e.get_bit(i) {
            out = r.mul(&out, &base);
        }
        base = r.mul(&base, &base);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teichmuller_roots() {
        let (r, z) = CoeffRing::with_root_of_unity(5, 3, 4).unwrap();
        assert_eq!(r.degree(), 1);
        assert_eq!(r.pow(&z, 4), r.one());
        assert_ne!(r.pow(&z, 2), r.one());
        let (r, z) = CoeffRing::with_root_of_unity(3, 2, 4).unwrap();
        assert_eq!(r.degree(), 2);
        assert_eq!(r.pow(&z, 4), r.one());
        assert_ne!(r.pow(&z, 2), r.one());
        let a = r.add(&z, &r.from_int(1));
        let ai = r.inv(&a).unwrap();
        assert_eq!(r.mul(&a, &ai), r.one());
    }

    #[test]
    fn roots_beyond_u128() {
        // 11 has order 46 mod 47, so the ring has 11^46 > 2^128 residues
        let (r, z) = CoeffRing::with_root_of_unity(11, 2, 47).unwrap();
        assert_eq!(r.degree(), 46);
        assert_eq!(r.pow(&z, 47), r.one());
        assert_ne!(z, r.one());
    }
}
