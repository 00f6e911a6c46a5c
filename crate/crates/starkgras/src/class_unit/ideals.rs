//! Prime ideals of the maximal order, found by splitting the finite algebra
//! O_L / q O_L. Works for ramified q and for q dividing the index of any
//! monogenic order, since no defining polynomial is involved.

use crate::cyclotomic_fields::{AbelianField, FieldElement};
use crate::exact_algebra::arith::{mod_integer, vp};
use crate::exact_algebra::modp::{kernel_mod, rref_mod, ModMatrix};
use rug::ops::Pow;
use rug::Integer;

/// O_L / q O_L with structure constants in the integral basis.
struct ResidueAlgebra {
    q: u64,
    n: usize,
    table: Vec<Vec<u64>>,
    one: Vec<u64>,
}

impl ResidueAlgebra {
    fn new(field: &AbelianField, q: u64) -> Self {
        let n = field.degree();
        let mut table = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut v = vec![0u64; n];
                for &(k, c) in field.basis_product(i, j) {
                    v[k as usize] = (v[k as usize] + c.rem_euclid(q as i64) as u64) % q;
                }
                table.push(v);
            }
        }
        let mut alg = ResidueAlgebra {
            q,
            n,
            table,
            one: Vec::new(),
        };
        alg.one = alg.identity();
        alg
    }

    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let (q, n) = (self.q, self.n);
        let mut out = vec![0u64; n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let xy = x * y % q;
                for (k, &c) in self.table[i * n + j].iter().enumerate() {
                    if c != 0 {
                        out[k] = (out[k] + xy * c) % q;
                    }
                }
            }
        }
        out
    }

    fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut acc = self.one.clone();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        acc
    }

    fn unit(&self, i: usize) -> Vec<u64> {
        let mut v = vec![0u64; self.n];
        v[i] = 1;
        v
    }

    /// The identity: solve e * w_j = w_j for every basis vector.
    fn identity(&self) -> Vec<u64> {
        let n = self.n;
        // rows: for each basis j and coordinate k, sum_i e_i (w_i w_j)_k = delta_jk
        let mut a: ModMatrix = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let mut row: Vec<u64> = (0..n).map(|i| self.table[i * n + j][k]).collect();
                row.push(if j == k { 1 } else { 0 });
                a.push(row);
            }
        }
        let piv = rref_mod(&mut a, self.q);
        let mut e = vec![0u64; n];
        for (r, &c) in piv.iter().enumerate() {
            assert!(c < n, "residue algebra has no identity");
            e[c] = a[r][n];
        }
        e
    }

    /// Matrix of x -> x^q with rows the images of the basis.
    fn frobenius(&self) -> ModMatrix {
        (0..self.n).map(|i| self.pow(&self.unit(i), self.q)).collect()
    }

    /// Ideal generated by the rows of `gens`: span of gens * w_j.
    fn ideal(&self, gens: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let mut rows = Vec::new();
        for g in gens {
            for j in 0..self.n {
                rows.push(self.mul(g, &self.unit(j)));
            }
        }
        span(rows, self.n, self.q)
    }
}

/// Reduced row echelon basis of the span.
fn span(mut rows: Vec<Vec<u64>>, n: usize, q: u64) -> Vec<Vec<u64>> {
    if rows.is_empty() {
        return rows;
    }
    let piv = rref_mod(&mut rows, q);
    rows.truncate(piv.len());
    rows.iter_mut().for_each(|r| r.truncate(n));
    rows
}

fn reduce(basis: &[Vec<u64>], v: &[u64], q: u64) -> Vec<u64> {
    let mut v = v.to_vec();
    for row in basis {
        let c = row.iter().position(|&x| x != 0).unwrap();
        let f = v[c];
        if f != 0 {
            for (x, &r) in v.iter_mut().zip(row) {
                *x = (*x + q - f * r % q) % q;
            }
        }
    }
    v
}

fn left_kernel(rows: &ModMatrix, cols: usize, q: u64) -> Vec<Vec<u64>> {
    // {x : x M = 0} = {x : M^T x = 0}
    let k = rows.len();
    let t: ModMatrix = (0..cols).map(|j| (0..k).map(|i| rows[i][j]).collect()).collect();
    kernel_mod(&t, k, q)
}

fn mat_mul(a: &ModMatrix, b: &ModMatrix, q: u64) -> ModMatrix {
    crate::exact_algebra::modp::mat_mul_mod(a, b, q)
}

/// A prime ideal P above q, stored as the F_q-subspace P / qO_L of
/// O_L / qO_L together with an element beta with v_P(beta / q) = -1 and
/// v_P'(beta / q) >= 0 at the other primes above q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeIdeal {
    pub q: u64,
    pub residue_degree: u32,
    pub ramification: u32,
    subspace: Vec<Vec<u64>>,
    beta: FieldElement,
}

impl PrimeIdeal {
    /// Absolute norm q^f.
    pub fn norm(&self) -> Integer {
        Integer::from(self.q).pow(self.residue_degree)
    }

    pub fn subspace(&self) -> &[Vec<u64>] {
        &self.subspace
    }

    /// Membership of an integral element.
    pub fn contains(&self, x: &FieldElement) -> bool {
        assert!(x.is_integral());
        let v: Vec<u64> = x.numerator().iter().map(|c| mod_integer(c, self.q)).collect();
        reduce(&self.subspace, &v, self.q).iter().all(|&c| c == 0)
    }

    /// v_P(x) for nonzero x.
    pub fn valuation(&self, field: &AbelianField, x: &FieldElement) -> i64 {
        assert!(!x.is_zero());
        let den_part = self.ramification as i64 * vp(x.denominator(), self.q) as i64;
        let mut y = FieldElement::from_integers(x.numerator().to_vec());
        let mut v = 0i64;
        while self.contains(&y) {
            let z = field.mul(&y, &self.beta);
            let q = Integer::from(self.q);
            let num: Vec<Integer> = z
                .numerator()
                .iter()
                .map(|c| {
                    debug_assert!(c.is_divisible(&q));
                    Integer::from(c.div_exact_ref(&q))
                })
                .collect();
            y = FieldElement::from_integers(num);
            v += 1;
        }
        v - den_part
    }

    /// sigma_g(P).
    pub fn conjugate_subspace(&self, field: &AbelianField, g: usize) -> Vec<Vec<u64>> {
        let rows = self
            .subspace
            .iter()
            .map(|r| {
                let x = FieldElement::from_integers(r.iter().map(|&c| Integer::from(c)).collect());
                field
                    .act(g, &x)
                    .numerator()
                    .iter()
                    .map(|c| mod_integer(c, self.q))
                    .collect()
            })
            .collect();
        span(rows, field.degree(), self.q)
    }
}

/// All primes of L above q, in a deterministic order.
pub fn primes_above(field: &AbelianField, q: u64) -> Vec<PrimeIdeal> {
    let n = field.degree();
    let alg = ResidueAlgebra::new(field, q);
    let frob = alg.frobenius();
    let mut k = 1u32;
    let mut qk = q;
    while (qk as usize) < n {
        qk *= q;
        k += 1;
    }
    let mut fk = frob.clone();
    for _ in 1..k {
        fk = mat_mul(&fk, &frob, q);
    }
    let radical = span(left_kernel(&fk, n, q), n, q);
    // Berlekamp space: x^q - x in the radical
    let mut fm1 = frob.clone();
    for (i, row) in fm1.iter_mut().enumerate() {
        row[i] = (row[i] + q - 1) % q;
    }
    let berlekamp = left_kernel(&mat_mul(&fm1, &fk, q), n, q);
    let one = alg.one.clone();
    let mut ideals: Vec<Vec<Vec<u64>>> = vec![radical.clone()];
    for x in &berlekamp {
        let mut next = Vec::new();
        for j in &ideals {
            for c in 0..q {
                let mut y = x.clone();
                for (yi, oi) in y.iter_mut().zip(&one) {
                    *yi = (*yi + q - c * oi % q) % q;
                }
                let mut gens = j.clone();
                gens.extend(alg.ideal(&[y]));
                let jj = span(gens, n, q);
                if jj.len() < n {
                    next.push(jj);
                }
            }
        }
        ideals = next;
    }
    let g = ideals.len();
    ideals
        .into_iter()
        .map(|sub| {
            let f = (n - sub.len()) as u32;
            // beta annihilates P / qO_L
            let mut cols: ModMatrix = vec![Vec::new(); n];
            for y in &sub {
                for (i, col) in cols.iter_mut().enumerate() {
                    col.extend(alg.mul(&alg.unit(i), y));
                }
            }
            let ker = left_kernel(&cols, cols[0].len(), q);
            let b = ker
                .into_iter()
                .find(|v| v.iter().any(|&c| c != 0))
                .expect("annihilator of a prime is nonzero");
            PrimeIdeal {
                q,
                residue_degree: f,
                ramification: (n / (f as usize * g)) as u32,
                subspace: sub,
                beta: FieldElement::from_integers(b.iter().map(|&c| Integer::from(c)).collect()),
            }
        })
        .collect()
}

/// Index of sigma_g(P) in `primes` (all primes above P's q).
pub fn conjugate_index(field: &AbelianField, primes: &[PrimeIdeal], i: usize, g: usize) -> usize {
    let s = primes[i].conjugate_subspace(field, g);
    primes
        .iter()
        .position(|p| p.q == primes[i].q && p.subspace == s)
        .expect("Galois permutes the primes above q")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(field: &AbelianField, q: u64) -> Vec<PrimeIdeal> {
        let ps = primes_above(field, q);
        let n = field.degree() as u32;
        let total: u32 = ps.iter().map(|p| p.ramification * p.residue_degree).sum();
        assert_eq!(total, n, "sum e f = n for q = {q}");
        // v_P(q) = e
        let qq = field.from_integer(&Integer::from(q));
        for p in &ps {
            assert_eq!(p.valuation(field, &qq), p.ramification as i64);
        }
        ps
    }

    #[test]
    fn quadratic_splitting_types() {
        let k = AbelianField::real_quadratic(5).unwrap();
        assert_eq!(check_decomposition(&k, 11).len(), 2);
        assert_eq!(check_decomposition(&k, 7).len(), 1);
        let r = check_decomposition(&k, 5);
        assert_eq!(r[0].ramification, 2);
        // 2 is inert in Q(sqrt 5) even though Z[sqrt 5] has index 2
        let t = check_decomposition(&k, 2);
        assert_eq!((t.len(), t[0].residue_degree), (1, 2));
    }

    #[test]
    fn biquadratic_index_divisor() {
        let l = AbelianField::real_quadratic(5)
            .unwrap()
            .tensor(&AbelianField::real_quadratic(13).unwrap())
            .unwrap();
        // 2 is inert in both quadratic subfields, so f = 2, g = 2
        let ps = check_decomposition(&l, 2);
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].residue_degree, 2);
        let ps = check_decomposition(&l, 3);
        assert_eq!(ps.len(), 2);
        assert_eq!(conjugate_index(&l, &ps, 0, 0), 0);
        check_decomposition(&l, 5);
        check_decomposition(&l, 13);
        assert_eq!(check_decomposition(&l, 29).len(), 4);
    }
}
