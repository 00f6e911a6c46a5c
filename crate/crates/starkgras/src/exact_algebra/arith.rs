//! Machine-word and big-integer number theory helpers.

use rug::{Assign, Integer};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Reduce a signed value into `[0, m)`.
pub fn reduce_i64(a: i64, m: u64) -> u64 {
    (a as i128).rem_euclid(m as i128) as u64
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Prime factorization by trial division followed by Pollard rho for the
/// rare large cofactor.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    let mut p = 2u64;
    while p * p <= n && p < 1 << 20 {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut big = Vec::new();
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime(m) {
                big.push(m);
            } else {
                let d = pollard_rho(m);
                stack.push(d);
                stack.push(m / d);
            }
        }
        big.sort_unstable();
        for q in big {
            match out.last_mut() {
                Some((r, e)) if *r == q => *e += 1,
                _ => out.push((q, 1)),
            }
        }
    }
    out
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

pub fn euler_phi(n: u64) -> u64 {
    let mut r = n;
    for (p, _) in factor(n) {
        r = r / p * (p - 1);
    }
    r
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factor(n) {
        let cur = ds.clone();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            ds.extend(cur.iter().map(|d| d * pk));
        }
    }
    ds.sort_unstable();
    ds
}

/// Smallest primitive root modulo the prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let qs = prime_divisors(p - 1);
    (2..p)
        .find(|&g| qs.iter().all(|&q| powmod(g, (p - 1) / q, p) != 1))
        .expect("prime modulus has a primitive root")
}

/// Multiplicative order of `a` modulo `m` (gcd(a, m) = 1).
pub fn mult_order(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let lam = carmichael(m);
    let mut ord = lam;
    for (q, _) in factor(lam) {
        while ord % q == 0 && powmod(a, ord / q, m) == 1 {
            ord /= q;
        }
    }
    ord
}

pub fn carmichael(m: u64) -> u64 {
    let mut l = 1;
    for (p, e) in factor(m) {
        let v = if p == 2 {
            match e {
                1 => 1,
                2 => 2,
                _ => 1 << (e - 2),
            }
        } else {
            (p - 1) * p.pow(e - 1)
        };
        l = lcm(l, v);
    }
    l
}

pub fn vp_u64(mut n: u64, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// p-adic valuation of a nonzero integer; `u32::MAX` for zero.
pub fn vp(n: &Integer, p: u64) -> u32 {
    if *n == 0 {
        return u32::MAX;
    }
    let pz = Integer::from(p);
    let mut m = n.clone().abs();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem_ref(&pz).into();
        let (q, r): (Integer, Integer) = (q, r);
        if r != 0 {
            break;
        }
        m = q;
        v += 1;
    }
    v
}

pub fn vp_rational(x: &rug::Rational, p: u64) -> i64 {
    vp(x.numer(), p) as i64 - vp(x.denom(), p) as i64
}

/// Symmetric residue of `x` modulo `m` in `(-m/2, m/2]`.
/// x mod m in [0, m).
pub fn mod_integer(x: &Integer, m: u64) -> u64 {
    Integer::from(x.modulo_ref(&Integer::from(m))).to_u64().expect("residue fits u64")
}

pub fn symmetric_mod(x: &Integer, m: &Integer) -> Integer {
    let mut r = Integer::from(x % m);
    if r < 0 {
        r += m;
    }
    let half = Integer::from(m >> 1);
    if r > half {
        r -= m;
    }
    r
}

/// Chinese remainder for (r1 mod m1, r2 mod m2) with coprime moduli.
pub fn crt_pair(r1: &Integer, m1: &Integer, r2: u64, m2: u64) -> Integer {
    let m1_mod = Integer::from(m1 % m2).to_u64().unwrap();
    let r1_mod = {
        let mut t = Integer::from(r1 % m2);
        if t < 0 {
            t += m2;
        }
        t.to_u64().unwrap()
    };
    let inv = invmod(m1_mod, m2).expect("coprime moduli");
    let diff = (r2 + m2 - r1_mod) % m2;
    let k = mulmod(diff, inv, m2);
    let mut out = Integer::new();
    out.assign(m1 * Integer::from(k));
    out += r1;
    out
}

/// All primes up to `n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
}

pub fn is_squarefree(n: u64) -> bool {
    factor(n).iter().all(|&(_, e)| e == 1)
}

/// Kronecker symbol (d / n) for n > 0.
pub fn kronecker(d: i64, n: u64) -> i32 {
    if n == 0 {
        return if d.abs() == 1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    let mut n = n;
    let a = d;
    let v2 = n.trailing_zeros();
    if v2 > 0 {
        if a % 2 == 0 {
            return 0;
        }
        let r = a.rem_euclid(8);
        if v2 % 2 == 1 && (r == 3 || r == 5) {
            result = -result;
        }
        n >>= v2;
    }
    // Jacobi (a / n) for odd n
    let mut a = a.rem_euclid(n as i64) as u64;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Fundamental discriminant of Q(sqrt(d)) for squarefree d.
pub fn fundamental_discriminant(d: i64) -> i64 {
    if d.rem_euclid(4) == 1 {
        d
    } else {
        4 * d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_number_theory() {
        assert_eq!(factor(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(euler_phi(1580), 624);
        assert_eq!(primitive_root(7), 3);
        assert_eq!(mult_order(2, 7), 3);
        assert_eq!(invmod(2, 25), Some(13));
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
        assert_eq!(kronecker(5, 3), -1);
        assert_eq!(kronecker(8, 7), 1);
        assert_eq!(kronecker(316, 3), 1);
        assert_eq!(factor(4_611_686_014_132_420_609), vec![(2_147_483_647, 2)]);
    }

    #[test]
    fn crt_combines() {
        let r = crt_pair(&Integer::from(2), &Integer::from(5), 3, 7);
        assert_eq!(r, 17);
    }
}
