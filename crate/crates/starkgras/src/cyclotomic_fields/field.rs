//! Real abelian fields as tensor products of fixed fields of subgroups
//! H ⊂ (Z/M)^× inside Q(zeta_M), one factor per coprime modulus M.
//!
//! Each factor carries an integral basis written in the zeta_M power basis
//! (the saturation of the trace lattice, so it spans the maximal order).
//! Elements are coordinate vectors over the tensor basis with a common
//! denominator.

use super::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{divisors, euler_phi, gcd, invmod, mod_integer, mulmod, powmod, primitive_root};
use crate::exact_algebra::matrix::{inverse_rational, solve_rational, IntMatrix};
use crate::exact_algebra::modp::{inverse_mod, rref_mod};
use crate::exact_algebra::snf::saturate_rows;
use rug::ops::Pow;
use rug::{Assign, Float, Integer, Rational};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

const RANK_PRIME: u64 = (1 << 61) - 1;

fn exact_div(p: &[i64], q: &[i64]) -> Vec<i64> {
    let mut r = p.to_vec();
    let dq = q.len() - 1;
    let mut out = vec![0i64; p.len() - dq];
    for k in (0..out.len()).rev() {
        let c = r[k + dq];
        out[k] = c;
        if c != 0 {
            for (j, &qj) in q.iter().enumerate() {
                r[k + j] -= c * qj;
            }
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    out
}

fn cyclotomic_memo(m: u64, memo: &mut HashMap<u64, Vec<i64>>) -> Vec<i64> {
    if let Some(p) = memo.get(&m) {
        return p.clone();
    }
    let mut p = vec![0i64; m as usize + 1];
    p[0] = -1;
    p[m as usize] = 1;
    for d in divisors(m) {
        if d != m {
            let q = cyclotomic_memo(d, memo);
            p = exact_div(&p, &q);
        }
    }
    memo.insert(m, p.clone());
    p
}

/// Coefficients (low degree first) of the m-th cyclotomic polynomial.
pub fn cyclotomic_polynomial(m: u64) -> Vec<i64> {
    cyclotomic_memo(m, &mut HashMap::new())
}

/// Reduce a polynomial in zeta_M (any length) to the power basis of length phi(M).
fn reduce_mod_phi(mut v: Vec<i128>, phi_poly: &[i64]) -> Vec<i128> {
    let d = phi_poly.len() - 1;
    let nz: Vec<(usize, i128)> = phi_poly[..d]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(j, &c)| (j, c as i128))
        .collect();
    for k in (d..v.len()).rev() {
        let c = v[k];
        if c != 0 {
            for &(j, pj) in &nz {
                v[k - d + j] -= c * pj;
            }
            v[k] = 0;
        }
    }
    v.resize(d, 0);
    v
}

fn reduce_integers_mod_phi(mut v: Vec<Integer>, phi_poly: &[i64]) -> Vec<Integer> {
    let d = phi_poly.len() - 1;
    let nz: Vec<(usize, i64)> = phi_poly[..d]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(j, &c)| (j, c))
        .collect();
    for k in (d..v.len()).rev() {
        if v[k] != 0 {
            let c = std::mem::take(&mut v[k]);
            for &(j, pj) in &nz {
                v[k - d + j] -= Integer::from(&c * pj);
            }
        }
    }
    v.resize(d, Integer::new());
    v
}

/// Fixed field of H inside Q(zeta_M).
#[derive(Clone)]
pub(crate) struct CycloFactor {
    modulus: u64,
    subgroup: Vec<u64>,
    reps: Vec<u64>,
    coset: Vec<u32>,
    phi_poly: Vec<i64>,
    basis: Vec<Vec<i64>>,
    pivots: Vec<usize>,
    pinv: IntMatrix,
    pden: Integer,
    mult: Vec<Vec<Vec<i64>>>,
    galois: Vec<Vec<Vec<i64>>>,
    one: Vec<i64>,
}

impl fmt::Debug for CycloFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycloFactor(M={}, |H|={}, n={})", self.modulus, self.subgroup.len(), self.reps.len())
    }
}

impl CycloFactor {
    pub(crate) fn new(modulus: u64, subgroup: &[u64]) -> Result<Self> {
        let m = modulus.max(1);
        let units: Vec<u64> = (0..m).filter(|&a| gcd(a, m) == 1 || m == 1).collect();
        let mut h: Vec<u64> = subgroup.iter().map(|&a| a % m).collect();
        h.sort_unstable();
        h.dedup();
        if m == 1 {
            h = vec![0];
        }
        let in_h = |a: u64| h.binary_search(&(a % m)).is_ok();
        if m > 1 && (!in_h(1) || h.iter().any(|&a| gcd(a, m) != 1)) {
            return Err(Error::NotAGroup(format!("subset of (Z/{m})^x is not a subgroup")));
        }
        for &a in &h {
            for &b in &h {
                if m > 1 && !in_h(a * b % m) {
                    return Err(Error::NotAGroup(format!("subset of (Z/{m})^x is not closed")));
                }
            }
        }
        let mut coset = vec![u32::MAX; m as usize];
        let mut reps = Vec::new();
        for &a in &units {
            if coset[a as usize] != u32::MAX {
                continue;
            }
            let c = reps.len() as u32;
            reps.push(a);
            for &x in &h {
                coset[(a * x % m) as usize] = c;
            }
        }
        if m == 1 {
            reps = vec![0];
            coset = vec![0];
        }
        let n = reps.len();
        let phi_poly = if m == 1 { vec![-1, 1] } else { cyclotomic_polynomial(m) };
        let phi = phi_poly.len() - 1;

        // trace vectors of zeta^k, kept while they raise the rank
        let trace_vec = |k: u64| -> Vec<i128> {
            let mut v = vec![0i128; m as usize];
            for &x in &h {
                v[(k * x % m) as usize] += 1;
            }
            reduce_mod_phi(v, &phi_poly)
        };
        let mut echelon: Vec<(usize, Vec<u64>)> = Vec::new();
        let mut rows: Vec<Vec<Integer>> = Vec::new();
        let candidates = reps.iter().copied().chain(0..m);
        for k in candidates {
            if rows.len() == n {
                break;
            }
            let v = trace_vec(k);
            let mut r: Vec<u64> = v.iter().map(|&x| x.rem_euclid(RANK_PRIME as i128) as u64).collect();
            for (pc, e) in &echelon {
                let c = r[*pc];
                if c != 0 {
                    for (x, y) in r.iter_mut().zip(e) {
                        *x = (*x + RANK_PRIME - mulmod(c, *y, RANK_PRIME)) % RANK_PRIME;
                    }
                }
            }
            if let Some(pc) = r.iter().position(|&x| x != 0) {
                let inv = invmod(r[pc], RANK_PRIME).unwrap();
                for x in r.iter_mut() {
                    *x = mulmod(*x, inv, RANK_PRIME);
                }
                echelon.push((pc, r));
                rows.push(v.iter().map(|&x| Integer::from(x)).collect());
            }
        }
        assert_eq!(rows.len(), n, "trace vectors span the fixed field");
        let sat = saturate_rows(&rows);
        let basis: Vec<Vec<i64>> = sat
            .iter()
            .map(|r| r.iter().map(|x| x.to_i64().expect("basis entry fits i64")).collect())
            .collect();

        let mut red: Vec<Vec<u64>> = basis
            .iter()
            .map(|r| r.iter().map(|&x| x.rem_euclid(RANK_PRIME as i64) as u64).collect())
            .collect();
        let pivots = rref_mod(&mut red, RANK_PRIME);
        assert_eq!(pivots.len(), n);
        let sub: Vec<Vec<Integer>> = (0..n)
            .map(|i| pivots.iter().map(|&c| Integer::from(basis[i][c])).collect())
            .collect();
        let (pinv, pden) = inverse_rational(&IntMatrix::from_rows(&sub)).expect("pivot minor is nonsingular");

        let mut f = CycloFactor {
            modulus: m,
            subgroup: h,
            reps,
            coset,
            phi_poly,
            basis,
            pivots,
            pinv,
            pden,
            mult: Vec::new(),
            galois: Vec::new(),
            one: Vec::new(),
        };
        let mut e0 = vec![Integer::new(); phi];
        e0[0] = Integer::from(1);
        f.one = f.integral_coords(&e0);

        let mut mult = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut prod = vec![0i128; m as usize];
                for (a, &x) in f.basis[i].iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (b, &y) in f.basis[j].iter().enumerate() {
                        if y != 0 {
                            prod[(a + b) % m as usize] += x as i128 * y as i128;
                        }
                    }
                }
                let v = reduce_mod_phi(prod, &f.phi_poly);
                let c = f.integral_coords(&v.iter().map(|&x| Integer::from(x)).collect::<Vec<_>>());
                mult[i][j] = c.clone();
                mult[j][i] = c;
            }
        }
        f.mult = mult;

        let mut galois = Vec::with_capacity(n);
        for c in 0..n {
            let g = f.reps[c];
            let mut mat = vec![vec![0i64; n]; n];
            for j in 0..n {
                let mut v = vec![0i128; m as usize];
                for (k, &x) in f.basis[j].iter().enumerate() {
                    v[(g * k as u64 % m) as usize] += x as i128;
                }
                let v = reduce_mod_phi(v, &f.phi_poly);
                let col = f.integral_coords(&v.iter().map(|&x| Integer::from(x)).collect::<Vec<_>>());
                for i in 0..n {
                    mat[i][j] = col[i];
                }
            }
            galois.push(mat);
        }
        f.galois = galois;
        Ok(f)
    }

    fn degree(&self) -> usize {
        self.reps.len()
    }

    /// Rational coordinates of a power-basis vector, if it lies in the factor.
    fn coords(&self, v: &[Integer]) -> Option<(Vec<Integer>, Integer)> {
        let n = self.degree();
        let vp: Vec<Integer> = self.pivots.iter().map(|&c| v[c].clone()).collect();
        let c = self.pinv.vec_mul(&vp);
        // check c * W == pden * v
        for (k, vk) in v.iter().enumerate() {
            let mut s = Integer::new();
            for i in 0..n {
                if self.basis[i][k] != 0 {
                    s += Integer::from(&c[i] * self.basis[i][k]);
                }
            }
            if s != Integer::from(vk * &self.pden) {
                return None;
            }
        }
        Some((c, self.pden.clone()))
    }

    fn integral_coords(&self, v: &[Integer]) -> Vec<i64> {
        let (c, d) = self.coords(v).expect("element of the factor");
        c.iter()
            .map(|x| {
                let (q, r) = x.clone().div_rem(d.clone());
                assert!(r == 0, "non-integral structure constant");
                q.to_i64().expect("structure constant fits i64")
            })
            .collect()
    }

    fn coset_of(&self, a: i64) -> Option<usize> {
        let r = a.rem_euclid(self.modulus as i64) as usize;
        let c = self.coset[r];
        (c != u32::MAX).then_some(c as usize)
    }

    /// Characters of (Z/M)^×/H, by extending over coset generators.
    fn characters(&self) -> Vec<DirichletCharacter> {
        let n = self.degree();
        let m = self.modulus;
        if n == 1 {
            return vec![DirichletCharacter::trivial(m)];
        }
        let mul = |a: usize, b: usize| self.coset[(self.reps[a] * self.reps[b] % m) as usize] as usize;
        let order_of = |a: usize| {
            let (mut x, mut k) = (a, 1u64);
            while x != 0 {
                x = mul(x, a);
                k += 1;
            }
            k
        };
        let e = (0..n).map(order_of).fold(1, crate::exact_algebra::arith::lcm);
        // subgroup elements as (coset, exponent vector index) with chars as maps
        let mut sub: Vec<usize> = vec![0];
        let mut chars: Vec<HashMap<usize, u64>> = vec![HashMap::from([(0usize, 0u64)])];
        for g in 0..n {
            if sub.contains(&g) {
                continue;
            }
            let (mut d, mut gd) = (1u64, g);
            while !sub.contains(&gd) {
                gd = mul(gd, g);
                d += 1;
            }
            let mut pows = vec![0usize];
            for j in 1..d as usize {
                pows.push(mul(pows[j - 1], g));
            }
            let mut next_chars = Vec::new();
            for psi in &chars {
                let ev = psi[&gd];
                assert!(ev % d == 0);
                for t in 0..d {
                    let x = (ev / d + t * (e / d)) % e;
                    let mut map = HashMap::new();
                    for &s in &sub {
                        for (j, &gj) in pows.iter().enumerate() {
                            map.insert(mul(s, gj), (psi[&s] + j as u64 * x) % e);
                        }
                    }
                    next_chars.push(map);
                }
            }
            let mut next_sub = Vec::new();
            for &s in &sub {
                for &gj in &pows {
                    next_sub.push(mul(s, gj));
                }
            }
            sub = next_sub;
            chars = next_chars;
        }
        chars
            .into_iter()
            .map(|map| DirichletCharacter::from_fn(m, e, |a| map[&(self.coset[a as usize] as usize)]))
            .collect()
    }
}

struct FieldData {
    factors: Vec<CycloFactor>,
    modulus: u64,
    degree: usize,
    strides: Vec<usize>,
    mult: Vec<Vec<(u32, i64)>>,
    galois: Vec<Vec<Vec<i64>>>,
    one: Vec<Integer>,
    traces: Vec<Integer>,
}

/// A real abelian number field with a fixed integral basis.
#[derive(Clone)]
pub struct AbelianField {
    data: Arc<FieldData>,
}

impl fmt::Debug for AbelianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AbelianField(degree {}, factors {:?})", self.degree(), self.data.factors)
    }
}

impl PartialEq for AbelianField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
            || (self.data.factors.len() == other.data.factors.len()
                && self
                    .data
                    .factors
                    .iter()
                    .zip(&other.data.factors)
                    .all(|(a, b)| a.modulus == b.modulus && a.subgroup == b.subgroup))
    }
}

impl Eq for AbelianField {}

/// Exact element of an `AbelianField`: coordinates `num / den`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    num: Vec<Integer>,
    den: Integer,
}

impl FieldElement {
    pub fn new(mut num: Vec<Integer>, mut den: Integer) -> Self {
        assert!(den != 0, "zero denominator");
        if den < 0 {
            den = -den;
            for x in num.iter_mut() {
                *x = -std::mem::take(x);
            }
        }
        let mut g = den.clone();
        for x in &num {
            if g == 1 {
                break;
            }
            g.gcd_mut(x);
        }
        if g != 1 {
            for x in num.iter_mut() {
                x.div_exact_mut(&g);
            }
            den.div_exact_mut(&g);
        }
        FieldElement { num, den }
    }

    pub fn from_integers(num: Vec<Integer>) -> Self {
        FieldElement {
            num,
            den: Integer::from(1),
        }
    }

    pub fn numerator(&self) -> &[Integer] {
        &self.num
    }

    pub fn denominator(&self) -> &Integer {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|x| *x == 0)
    }

    pub fn is_integral(&self) -> bool {
        self.den == 1
    }

    /// Bit size of the largest coordinate.
    pub fn height_bits(&self) -> u32 {
        self.num
            .iter()
            .map(|x| x.significant_bits())
            .max()
            .unwrap_or(0)
            .max(self.den.significant_bits())
    }
}

/// Real embeddings of the basis at a fixed precision.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    prec: u32,
    values: Vec<Vec<Float>>,
}

impl EmbeddingTable {
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Value of basis element `i` at embedding `g`.
    pub fn basis_value(&self, g: usize, i: usize) -> &Float {
        &self.values[g][i]
    }

    pub fn eval(&self, g: usize, x: &FieldElement) -> Float {
        let mut s = Float::new(self.prec);
        for (c, v) in x.num.iter().zip(&self.values[g]) {
            if *c != 0 {
                s += Float::with_val(self.prec, v * c);
            }
        }
        s / &x.den
    }

    pub fn eval_all(&self, x: &FieldElement) -> Vec<Float> {
        (0..self.values.len()).map(|g| self.eval(g, x)).collect()
    }
}

/// Embeddings into F_P for a prime P = 1 mod the field modulus, one per
/// Galois element, with the inverse evaluation matrix.
#[derive(Clone, Debug)]
pub struct ModEmbedding {
    p: u64,
    values: Vec<Vec<u64>>,
    inverse: Vec<Vec<u64>>,
}

impl ModEmbedding {
    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn basis_value(&self, g: usize, i: usize) -> u64 {
        self.values[g][i]
    }

    /// x at embedding g; None when P divides the denominator.
    pub fn eval(&self, g: usize, x: &FieldElement) -> Option<u64> {
        let p = self.p;
        let dinv = invmod(mod_integer(&x.den, p), p)?;
        let mut s = 0u64;
        for (c, v) in x.num.iter().zip(&self.values[g]) {
            if *c != 0 {
                s = (s + mulmod(mod_integer(c, p), *v, p)) % p;
            }
        }
        Some(mulmod(s, dinv, p))
    }

    pub fn eval_all(&self, x: &FieldElement) -> Option<Vec<u64>> {
        (0..self.values.len()).map(|g| self.eval(g, x)).collect()
    }

    /// Integral coordinates mod P of the element with the given values.
    pub fn coords_from_values(&self, vals: &[u64]) -> Vec<u64> {
        let n = self.inverse.len();
        (0..n)
            .map(|i| {
                let mut s = 0u64;
                for (a, v) in self.inverse[i].iter().zip(vals) {
                    s = (s + mulmod(*a, *v, self.p)) % self.p;
                }
                s
            })
            .collect()
    }
}

impl AbelianField {
    fn from_factor_list(factors: Vec<CycloFactor>) -> Result<Self> {
        for i in 0..factors.len() {
            for j in 0..i {
                if gcd(factors[i].modulus, factors[j].modulus) != 1 {
                    return Err(Error::NotAGroup(format!(
                        "tensor factors with moduli {} and {} are not coprime",
                        factors[i].modulus, factors[j].modulus
                    )));
                }
            }
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.degree()).collect();
        let degree: usize = dims.iter().product();
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let modulus = factors.iter().map(|f| f.modulus).product();
        let split = |mut idx: usize| -> Vec<usize> {
            let mut out = vec![0; dims.len()];
            for (k, s) in strides.iter().enumerate() {
                out[k] = idx / s;
                idx %= s;
            }
            out
        };
        let mut mult = vec![Vec::new(); degree * degree];
        for a in 0..degree {
            let ia = split(a);
            for b in a..degree {
                let ib = split(b);
                let mut acc: Vec<(usize, i64)> = vec![(0, 1)];
                for (k, f) in factors.iter().enumerate() {
                    let c = &f.mult[ia[k]][ib[k]];
                    let mut next = Vec::new();
                    for &(idx, v) in &acc {
                        for (t, &ct) in c.iter().enumerate() {
                            if ct != 0 {
                                next.push((idx + t * strides[k], v.checked_mul(ct).expect("structure constant overflow")));
                            }
                        }
                    }
                    acc = next;
                }
                let sparse: Vec<(u32, i64)> = acc.into_iter().map(|(i, v)| (i as u32, v)).collect();
                mult[a * degree + b] = sparse.clone();
                mult[b * degree + a] = sparse;
            }
        }
        let mut galois = Vec::with_capacity(degree);
        for g in 0..degree {
            let ig = split(g);
            let mut mat = vec![vec![0i64; degree]; degree];
            for (i, row) in mat.iter_mut().enumerate() {
                let ii = split(i);
                for (j, x) in row.iter_mut().enumerate() {
                    let ij = split(j);
                    let mut v = 1i64;
                    for (k, f) in factors.iter().enumerate() {
                        v *= f.galois[ig[k]][ii[k]][ij[k]];
                        if v == 0 {
                            break;
                        }
                    }
                    *x = v;
                }
            }
            galois.push(mat);
        }
        let one: Vec<Integer> = (0..degree)
            .map(|i| {
                let ii = split(i);
                Integer::from(factors.iter().enumerate().map(|(k, f)| f.one[ii[k]]).product::<i64>())
            })
            .collect();
        let mut data = FieldData {
            factors,
            modulus,
            degree,
            strides,
            mult,
            galois,
            one,
            traces: Vec::new(),
        };
        data.traces = (0..degree)
            .map(|i| {
                let mut t = Integer::new();
                for j in 0..degree {
                    for &(k, v) in &data.mult[i * degree + j] {
                        if k as usize == j {
                            t += v;
                        }
                    }
                }
                t
            })
            .collect();
        Ok(AbelianField { data: Arc::new(data) })
    }

    /// Fixed field of H inside Q(zeta_M).
    pub fn from_subgroup(modulus: u64, subgroup: &[u64]) -> Result<Self> {
        Self::from_factor_list(vec![CycloFactor::new(modulus, subgroup)?])
    }

    pub fn rationals() -> Self {
        Self::from_subgroup(1, &[0]).expect("Q")
    }

    /// Q(sqrt d) for a positive discriminant or squarefree d > 1.
    pub fn real_quadratic(d: i64) -> Result<Self> {
        let disc = crate::exact_algebra::arith::fundamental_discriminant(d);
        if disc <= 1 {
            return Err(Error::OddCharacter(format!("Q(sqrt {d}) is not real quadratic")));
        }
        let chi = DirichletCharacter::quadratic(disc);
        field_from_characters(&[DirichletCharacter::trivial(1), chi])
    }

    /// Maximal real subfield of Q(zeta_M).
    pub fn real_cyclotomic(modulus: u64) -> Result<Self> {
        let h: Vec<u64> = if modulus <= 2 { vec![1] } else { vec![1, modulus - 1] };
        Self::from_subgroup(modulus, &h)
    }

    /// Compositum with a field of coprime modulus.
    pub fn tensor(&self, other: &AbelianField) -> Result<Self> {
        let mut f: Vec<CycloFactor> = self.data.factors.clone();
        f.extend(other.data.factors.iter().cloned());
        f.retain(|x| x.modulus > 1);
        if f.is_empty() {
            return Ok(Self::rationals());
        }
        Self::from_factor_list(f)
    }

    /// The subfield generated by the listed tensor factors.
    pub fn subfield(&self, keep: &[usize]) -> Self {
        let f: Vec<CycloFactor> = keep.iter().map(|&k| self.data.factors[k].clone()).collect();
        if f.is_empty() {
            return Self::rationals();
        }
        Self::from_factor_list(f).expect("subfield of a valid field")
    }

    pub fn factor_count(&self) -> usize {
        self.data.factors.len()
    }

    pub fn factor_modulus(&self, k: usize) -> u64 {
        self.data.factors[k].modulus
    }

    pub fn factor_degree(&self, k: usize) -> usize {
        self.data.factors[k].degree()
    }

    /// Subgroup H of the k-th factor.
    pub fn factor_subgroup(&self, k: usize) -> &[u64] {
        &self.data.factors[k].subgroup
    }

    pub fn degree(&self) -> usize {
        self.data.degree
    }

    /// Product of the factor moduli: the field lies in Q(zeta_modulus).
    pub fn modulus(&self) -> u64 {
        self.data.modulus
    }

    /// lcm of the character conductors.
    pub fn conductor(&self) -> u64 {
        self.characters().iter().map(|c| c.conductor()).fold(1, crate::exact_algebra::arith::lcm)
    }

    pub fn characters(&self) -> Vec<DirichletCharacter> {
        let mut out = vec![DirichletCharacter::trivial(1)];
        for f in &self.data.factors {
            let cs = f.characters();
            let mut next = Vec::new();
            for a in &out {
                for c in &cs {
                    next.push(a.mul(c));
                }
            }
            out = next;
        }
        out
    }

    /// Sparse coordinates of w_i * w_j.
    pub fn basis_product(&self, i: usize, j: usize) -> &[(u32, i64)] {
        &self.data.mult[i * self.degree() + j]
    }

    /// Tr(w_i) for the integral basis.
    pub fn basis_traces(&self) -> &[Integer] {
        &self.data.traces
    }

    /// Discriminant of the maximal order, det(Tr(w_i w_j)).
    pub fn discriminant(&self) -> Integer {
        let n = self.degree();
        let mut rows = vec![vec![Integer::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut t = Integer::new();
                for &(k, v) in &self.data.mult[i * n + j] {
                    t += Integer::from(&self.data.traces[k as usize] * v);
                }
                rows[i][j] = t;
            }
        }
        IntMatrix::from_rows(&rows).det()
    }

    // ---- elements ----

    pub fn zero(&self) -> FieldElement {
        FieldElement::from_integers(vec![Integer::new(); self.degree()])
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::from_integers(self.data.one.clone())
    }

    pub fn from_integer(&self, a: &Integer) -> FieldElement {
        FieldElement::from_integers(self.data.one.iter().map(|x| Integer::from(x * a)).collect())
    }

    pub fn from_rational(&self, a: &Rational) -> FieldElement {
        let num = self.data.one.iter().map(|x| Integer::from(x * a.numer())).collect();
        FieldElement::new(num, a.denom().clone())
    }

    pub fn basis_element(&self, i: usize) -> FieldElement {
        let mut v = vec![Integer::new(); self.degree()];
        v[i] = Integer::from(1);
        FieldElement::from_integers(v)
    }

    /// Element given by coordinates in zeta powers of a single-factor field.
    pub fn from_power_basis(&self, v: &[Integer]) -> Option<FieldElement> {
        assert_eq!(self.data.factors.len(), 1, "power basis input needs a single factor");
        let f = &self.data.factors[0];
        let m = f.modulus as usize;
        let mut full = vec![Integer::new(); m.max(v.len())];
        for (k, x) in v.iter().enumerate() {
            full[k % m.max(1)] += x;
        }
        let red = reduce_integers_mod_phi(full, &f.phi_poly);
        let (c, d) = f.coords(&red)?;
        Some(FieldElement::new(c, d))
    }

    /// Power-basis coefficients (length phi(M)) of an element of a
    /// single-factor field.
    pub fn to_power_basis(&self, x: &FieldElement) -> (Vec<Integer>, Integer) {
        assert_eq!(self.data.factors.len(), 1);
        let f = &self.data.factors[0];
        let phi = f.phi_poly.len() - 1;
        let mut out = vec![Integer::new(); phi];
        for (i, c) in x.num.iter().enumerate() {
            if *c != 0 {
                for (k, &w) in f.basis[i].iter().enumerate() {
                    if w != 0 {
                        out[k] += Integer::from(c * w);
                    }
                }
            }
        }
        (out, x.den.clone())
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        if a.den == b.den {
            let num = a.num.iter().zip(&b.num).map(|(x, y)| Integer::from(x + y)).collect();
            return FieldElement::new(num, a.den.clone());
        }
        let num = a
            .num
            .iter()
            .zip(&b.num)
            .map(|(x, y)| Integer::from(x * &b.den) + Integer::from(y * &a.den))
            .collect();
        FieldElement::new(num, Integer::from(&a.den * &b.den))
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        FieldElement {
            num: a.num.iter().map(|x| Integer::from(-x)).collect(),
            den: a.den.clone(),
        }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, a: &FieldElement, c: &Rational) -> FieldElement {
        let num = a.num.iter().map(|x| Integer::from(x * c.numer())).collect();
        FieldElement::new(num, Integer::from(&a.den * c.denom()))
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let n = self.degree();
        let mut out = vec![Integer::new(); n];
        let mut t = Integer::new();
        for (i, x) in a.num.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in b.num.iter().enumerate() {
                if *y == 0 {
                    continue;
                }
                t.assign(x * y);
                for &(k, v) in &self.data.mult[i * n + j] {
                    out[k as usize] += Integer::from(&t * v);
                }
            }
        }
        FieldElement::new(out, Integer::from(&a.den * &b.den))
    }

    /// Matrix of multiplication by the numerator of x: column j holds the
    /// coordinates of num(x) * w_j.
    pub fn mult_matrix(&self, x: &FieldElement) -> IntMatrix {
        let n = self.degree();
        let mut m = IntMatrix::zero(n, n);
        for (i, c) in x.num.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            for j in 0..n {
                for &(k, v) in &self.data.mult[i * n + j] {
                    *m.get_mut(k as usize, j) += Integer::from(c * v);
                }
            }
        }
        m
    }

    pub fn inv(&self, x: &FieldElement) -> Option<FieldElement> {
        if x.is_zero() {
            return None;
        }
        let m = self.mult_matrix(x);
        let rhs: Vec<Rational> = self.data.one.iter().map(|c| Rational::from(c * &x.den)).collect();
        let sol = solve_rational(&m, &rhs)?;
        let den = sol.iter().fold(Integer::from(1), |acc, r| acc.lcm(r.denom()));
        let num = sol
            .iter()
            .map(|r| Integer::from(r.numer() * Integer::from(&den / r.denom())))
            .collect();
        Some(FieldElement::new(num, den))
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Option<FieldElement> {
        Some(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, x: &FieldElement, e: i64) -> Option<FieldElement> {
        let base = if e < 0 { self.inv(x)? } else { x.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = self.one();
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            k >>= 1;
            if k > 0 {
                b = self.mul(&b, &b);
            }
        }
        Some(acc)
    }

    /// Some(r) when x = r * 1.
    pub fn as_rational(&self, x: &FieldElement) -> Option<Rational> {
        let i = self.data.one.iter().position(|c| *c != 0)?;
        let r = Rational::from((x.num[i].clone(), Integer::from(&x.den * &self.data.one[i])));
        (self.from_rational(&r) == *x).then_some(r)
    }

    pub fn is_one(&self, x: &FieldElement) -> bool {
        *x == self.one()
    }

    pub fn trace(&self, x: &FieldElement) -> Rational {
        let mut t = Integer::new();
        for (c, tr) in x.num.iter().zip(&self.data.traces) {
            t += Integer::from(c * tr);
        }
        Rational::from((t, x.den.clone()))
    }

    pub fn norm(&self, x: &FieldElement) -> Rational {
        let d = self.mult_matrix(x).det();
        let n = self.degree() as u32;
        Rational::from((d, x.den.clone().pow(n)))
    }

    pub fn is_unit(&self, x: &FieldElement) -> bool {
        if !x.is_integral() || x.is_zero() {
            return false;
        }
        let n = self.norm(x);
        n == 1 || n == -1
    }

    /// Characteristic polynomial of multiplication by x, low degree first.
    pub fn charpoly(&self, x: &FieldElement) -> Vec<Rational> {
        let cp = berkowitz(&self.mult_matrix(x));
        let n = cp.len() - 1;
        let mut dpow = Integer::from(1);
        let mut out = vec![Rational::new(); n + 1];
        // det(t - A/d) = d^{-n} det(d t - A): coefficient of t^k is c_k d^{k-n}
        for k in (0..=n).rev() {
            out[k] = Rational::from((cp[k].clone(), dpow.clone()));
            dpow *= &x.den;
        }
        out
    }

    /// Minimal polynomial over Q, monic, low degree first.
    pub fn minimal_polynomial(&self, x: &FieldElement) -> Vec<Rational> {
        let mut conj: Vec<FieldElement> = Vec::new();
        for g in 0..self.degree() {
            let y = self.act(g, x);
            if !conj.contains(&y) {
                conj.push(y);
            }
        }
        let mut poly = vec![self.one()];
        for c in &conj {
            let mut next = vec![self.zero(); poly.len() + 1];
            for (k, a) in poly.iter().enumerate() {
                next[k + 1] = self.add(&next[k + 1], a);
                next[k] = self.sub(&next[k], &self.mul(a, c));
            }
            poly = next;
        }
        poly.iter()
            .map(|a| self.as_rational(a).expect("symmetric functions are rational"))
            .collect()
    }

    // ---- Galois action ----

    /// Index of the automorphism zeta -> zeta^a.
    pub fn galois_index(&self, a: i64) -> Result<usize> {
        let mut idx = 0;
        for (k, f) in self.data.factors.iter().enumerate() {
            let c = f.coset_of(a).ok_or(Error::BadResidue { a, f: self.data.modulus })?;
            idx += c * self.data.strides[k];
        }
        Ok(idx)
    }

    /// A residue mod `modulus()` representing automorphism g.
    pub fn galois_residue(&self, g: usize) -> u64 {
        let mut r = Integer::new();
        let mut m = Integer::from(1);
        let mut idx = g;
        for (k, f) in self.data.factors.iter().enumerate() {
            let c = idx / self.data.strides[k];
            idx %= self.data.strides[k];
            r = crate::exact_algebra::arith::crt_pair(&r, &m, f.reps[c] % f.modulus.max(1), f.modulus.max(1));
            m *= f.modulus.max(1);
        }
        let r = r.to_u64().unwrap();
        if self.data.modulus == 1 {
            1
        } else {
            r
        }
    }

    pub fn compose(&self, g: usize, h: usize) -> usize {
        let a = self.galois_residue(g) as i64;
        let b = self.galois_residue(h) as i64;
        let m = self.data.modulus.max(1) as i64;
        self.galois_index((a * b).rem_euclid(m).max(if m == 1 { 1 } else { 0 })).unwrap()
    }

    pub fn galois_inverse(&self, g: usize) -> usize {
        let m = self.data.modulus.max(1);
        if m == 1 {
            return 0;
        }
        let a = invmod(self.galois_residue(g), m).unwrap();
        self.galois_index(a as i64).unwrap()
    }

    /// g^k in the Galois group.
    pub fn galois_pow(&self, g: usize, k: u64) -> usize {
        let m = self.data.modulus.max(1);
        if m == 1 {
            return 0;
        }
        self.galois_index(powmod(self.galois_residue(g), k, m) as i64).unwrap()
    }

    pub fn act(&self, g: usize, x: &FieldElement) -> FieldElement {
        if g == 0 {
            return x.clone();
        }
        let mat = &self.data.galois[g];
        let n = self.degree();
        let mut out = vec![Integer::new(); n];
        for (j, c) in x.num.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            for i in 0..n {
                let v = mat[i][j];
                if v != 0 {
                    out[i] += Integer::from(c * v);
                }
            }
        }
        FieldElement {
            num: out,
            den: x.den.clone(),
        }
    }

    /// The automorphism zeta -> zeta^a applied to x.
    pub fn galois_act(&self, a: i64, x: &FieldElement) -> Result<FieldElement> {
        Ok(self.act(self.galois_index(a)?, x))
    }

    /// Galois elements fixing the listed factors (the group of the field over
    /// that subfield).
    pub fn relative_group(&self, keep: &[usize]) -> Vec<usize> {
        (0..self.degree())
            .filter(|&g| {
                keep.iter()
                    .all(|&k| (g / self.data.strides[k]) % self.data.factors[k].degree() == 0)
            })
            .collect()
    }

    /// Norm from this field down to the subfield of the listed factors,
    /// returned as an element of this field.
    pub fn relative_norm(&self, keep: &[usize], x: &FieldElement) -> FieldElement {
        let mut acc = self.one();
        for g in self.relative_group(keep) {
            acc = self.mul(&acc, &self.act(g, x));
        }
        acc
    }

    /// Image of an element of `self.subfield(keep)`.
    pub fn embed_subfield(&self, keep: &[usize], y: &FieldElement) -> FieldElement {
        let n = self.degree();
        let sub_dims: Vec<usize> = keep.iter().map(|&k| self.data.factors[k].degree()).collect();
        let mut num = vec![Integer::new(); n];
        for (i, slot) in num.iter_mut().enumerate() {
            let mut sub_idx = 0;
            let mut w = 1i64;
            for (k, f) in self.data.factors.iter().enumerate() {
                let ik = (i / self.data.strides[k]) % f.degree();
                if let Some(pos) = keep.iter().position(|&x| x == k) {
                    let stride: usize = sub_dims[pos + 1..].iter().product();
                    sub_idx += ik * stride;
                } else {
                    w *= f.one[ik];
                }
            }
            if w != 0 {
                *slot = Integer::from(&y.num[sub_idx] * w);
            }
        }
        FieldElement::new(num, y.den.clone())
    }

    /// Inverse of `embed_subfield`, if x lies in the subfield.
    pub fn restrict_to_subfield(&self, keep: &[usize], x: &FieldElement) -> Option<FieldElement> {
        let sub_dims: Vec<usize> = keep.iter().map(|&k| self.data.factors[k].degree()).collect();
        let sub_n: usize = sub_dims.iter().product();
        // fixed nonzero positions of 1 in the other factors
        let mut base = 0usize;
        let mut w = Integer::from(1);
        for (k, f) in self.data.factors.iter().enumerate() {
            if !keep.contains(&k) {
                let j = f.one.iter().position(|&c| c != 0)?;
                base += j * self.data.strides[k];
                w *= f.one[j];
            }
        }
        let mut num = Vec::with_capacity(sub_n);
        for s in 0..sub_n {
            let mut idx = base;
            let mut rem = s;
            for (pos, &k) in keep.iter().enumerate() {
                let stride: usize = sub_dims[pos + 1..].iter().product();
                idx += (rem / stride) * self.data.strides[k];
                rem %= stride;
            }
            num.push(x.num[idx].clone());
        }
        let y = FieldElement::new(num, Integer::from(&x.den * &w));
        (self.embed_subfield(keep, &y) == *x).then_some(y)
    }

    // ---- embeddings ----

    pub fn embedding_table(&self, prec: u32) -> EmbeddingTable {
        let n = self.degree();
        // per factor: value of basis element i at coset c
        let per_factor: Vec<Vec<Vec<Float>>> = self
            .data
            .factors
            .iter()
            .map(|f| {
                let m = f.modulus;
                let cos: Vec<Float> = (0..m)
                    .map(|t| {
                        let a = Float::with_val(prec, 2 * t) * crate::numeric::pi(prec) / m;
                        a.cos()
                    })
                    .collect();
                (0..f.degree())
                    .map(|c| {
                        (0..f.degree())
                            .map(|i| {
                                let mut s = Float::new(prec);
                                for (k, &w) in f.basis[i].iter().enumerate() {
                                    if w != 0 {
                                        s += Float::with_val(prec, &cos[(f.reps[c] * k as u64 % m) as usize] * w);
                                    }
                                }
                                s
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let values = (0..n)
            .map(|g| {
                (0..n)
                    .map(|i| {
                        let mut v = Float::with_val(prec, 1);
                        for (k, f) in self.data.factors.iter().enumerate() {
                            let gk = (g / self.data.strides[k]) % f.degree();
                            let ik = (i / self.data.strides[k]) % f.degree();
                            v *= &per_factor[k][gk][ik];
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        EmbeddingTable { prec, values }
    }

    /// Real embedding matrix in double precision, rows indexed by embedding.
    pub fn embedding_matrix_f64(&self) -> Vec<Vec<f64>> {
        let n = self.degree();
        let per_factor: Vec<Vec<Vec<f64>>> = self
            .data
            .factors
            .iter()
            .map(|f| {
                let m = f.modulus;
                (0..f.degree())
                    .map(|c| {
                        (0..f.degree())
                            .map(|i| {
                                f.basis[i]
                                    .iter()
                                    .enumerate()
                                    .filter(|(_, &w)| w != 0)
                                    .map(|(k, &w)| {
                                        let t = (f.reps[c] * k as u64 % m) as f64 / m as f64;
                                        w as f64 * (2.0 * std::f64::consts::PI * t).cos()
                                    })
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        (0..n)
            .map(|g| {
                (0..n)
                    .map(|i| {
                        let mut v = 1.0;
                        for (k, f) in self.data.factors.iter().enumerate() {
                            let gk = (g / self.data.strides[k]) % f.degree();
                            let ik = (i / self.data.strides[k]) % f.degree();
                            v *= per_factor[k][gk][ik];
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    /// Embeddings into F_P; requires P prime with P = 1 mod modulus().
    pub fn mod_embedding(&self, p: u64) -> ModEmbedding {
        let n = self.degree();
        let big_m = self.data.modulus.max(1);
        assert!((p - 1) % big_m == 0, "P must be 1 mod the modulus");
        let g = primitive_root(p);
        let per_factor: Vec<Vec<Vec<u64>>> = self
            .data
            .factors
            .iter()
            .map(|f| {
                let m = f.modulus;
                let r = powmod(g, (p - 1) / m, p);
                let pw: Vec<u64> = (0..m).map(|t| powmod(r, t, p)).collect();
                (0..f.degree())
                    .map(|c| {
                        (0..f.degree())
                            .map(|i| {
                                let mut s = 0u64;
                                for (k, &w) in f.basis[i].iter().enumerate() {
                                    if w != 0 {
                                        let wm = w.rem_euclid(p as i64) as u64;
                                        s = (s + mulmod(wm, pw[(f.reps[c] * k as u64 % m) as usize], p)) % p;
                                    }
                                }
                                s
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let values: Vec<Vec<u64>> = (0..n)
            .map(|gi| {
                (0..n)
                    .map(|i| {
                        let mut v = 1u64;
                        for (k, f) in self.data.factors.iter().enumerate() {
                            let gk = (gi / self.data.strides[k]) % f.degree();
                            let ik = (i / self.data.strides[k]) % f.degree();
                            v = mulmod(v, per_factor[k][gk][ik], p);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let inverse = inverse_mod(&values, p).expect("embedding matrix is invertible mod P");
        ModEmbedding { p, values, inverse }
    }
}

/// Characteristic polynomial det(tI - A) by Berkowitz, low degree first.
pub fn berkowitz(a: &IntMatrix) -> Vec<Integer> {
    let n = a.rows();
    // coefficients highest degree first
    let mut p: Vec<Integer> = vec![Integer::from(1)];
    for r in 0..n {
        // first column of the Toeplitz matrix: 1, -a_rr, -R C, -R A C, ...
        let mut col = vec![Integer::from(1), Integer::from(-a.get(r, r))];
        let mut v: Vec<Integer> = (0..r).map(|i| a.get(i, r).clone()).collect();
        for _ in 0..r {
            let mut s = Integer::new();
            for (j, vj) in v.iter().enumerate() {
                s += Integer::from(a.get(r, j) * vj);
            }
            col.push(-s);
            let next: Vec<Integer> = (0..r)
                .map(|i| {
                    let mut t = Integer::new();
                    for (j, vj) in v.iter().enumerate() {
                        t += Integer::from(a.get(i, j) * vj);
                    }
                    t
                })
                .collect();
            v = next;
        }
        let mut q = vec![Integer::new(); r + 2];
        for (i, qi) in q.iter_mut().enumerate() {
            for (j, pj) in p.iter().enumerate() {
                if i >= j && i - j < col.len() {
                    *qi += Integer::from(&col[i - j] * pj);
                }
            }
        }
        p = q;
    }
    p.reverse();
    p
}

/// The field cut out by a group of even Dirichlet characters.
pub fn field_from_characters(chars: &[DirichletCharacter]) -> Result<AbelianField> {
    if chars.is_empty() {
        return Err(Error::NotAGroup("empty character set".into()));
    }
    for c in chars {
        if !c.is_even() {
            return Err(Error::OddCharacter(format!("{c:?}")));
        }
    }
    let prims: Vec<DirichletCharacter> = chars.iter().map(|c| c.primitive()).collect();
    let contains = |x: &DirichletCharacter| prims.iter().any(|c| c.same_primitive(x));
    if !prims.iter().any(|c| c.is_trivial()) {
        return Err(Error::NotAGroup("missing trivial character".into()));
    }
    for a in &prims {
        if !contains(&a.conj()) {
            return Err(Error::NotAGroup(format!("inverse of {a:?} missing")));
        }
        for b in &prims {
            if !contains(&a.mul(b)) {
                return Err(Error::NotAGroup(format!("{a:?} * {b:?} missing")));
            }
        }
    }
    let mut distinct: Vec<DirichletCharacter> = Vec::new();
    for c in &prims {
        if !distinct.iter().any(|d| d.same_primitive(c)) {
            distinct.push(c.clone());
        }
    }
    let f = distinct.iter().map(|c| c.modulus()).fold(1, crate::exact_algebra::arith::lcm);
    let lifted: Vec<DirichletCharacter> = distinct.iter().map(|c| c.lift(f)).collect();
    let h: Vec<u64> = (0..f.max(1))
        .filter(|&a| f == 1 || (gcd(a, f) == 1 && lifted.iter().all(|c| c.exponent(a as i64) == Some(0))))
        .collect();
    let field = AbelianField::from_subgroup(f, &h)?;
    debug_assert_eq!(field.degree(), distinct.len());
    if f > 1 {
        debug_assert_eq!(euler_phi(f) as usize / h.len(), distinct.len());
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(cyclotomic_polynomial(5), vec![1, 1, 1, 1, 1]);
        assert_eq!(cyclotomic_polynomial(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic_polynomial(105).len(), 49);
    }

    #[test]
    fn quadratic_field_basics() {
        let k = AbelianField::real_quadratic(5).unwrap();
        assert_eq!(k.degree(), 2);
        assert_eq!(k.conductor(), 5);
        assert_eq!(k.discriminant(), 5);
        for i in 0..2 {
            let w = k.basis_element(i);
            let mp = k.minimal_polynomial(&w);
            assert_eq!(mp.len(), 3);
        }
        let k8 = AbelianField::real_quadratic(2).unwrap();
        assert_eq!(k8.discriminant(), 8);
        let k12 = AbelianField::real_quadratic(3).unwrap();
        assert_eq!(k12.discriminant(), 12);
    }

    #[test]
    fn arithmetic_round_trip() {
        let k = AbelianField::real_cyclotomic(13).unwrap();
        assert_eq!(k.degree(), 6);
        assert_eq!(k.discriminant(), Integer::from(13).pow(5));
        let x = k.add(&k.basis_element(0), &k.from_integer(&Integer::from(3)));
        let y = k.inv(&x).unwrap();
        assert!(k.is_one(&k.mul(&x, &y)));
        let cp = k.charpoly(&x);
        assert_eq!(cp[0].clone() * Rational::from(1), k.norm(&x));
        let g = k.galois_index(2).unwrap();
        let lhs = k.act(g, &k.mul(&x, &y));
        assert!(k.is_one(&lhs));
        let emb = k.embedding_table(128);
        let prod: Float = emb.eval_all(&x).into_iter().fold(Float::with_val(128, 1), |a, b| a * b);
        let n = k.norm(&x);
        assert!((prod - Float::with_val(128, &n)).abs() < 1e-30);
    }

    #[test]
    fn tensor_and_subfields() {
        let a = AbelianField::real_quadratic(5).unwrap();
        let b = AbelianField::real_quadratic(13).unwrap();
        let l = a.tensor(&b).unwrap();
        assert_eq!(l.degree(), 4);
        assert_eq!(l.discriminant(), Integer::from(5 * 5 * 13 * 13));
        let y = b.basis_element(1);
        let x = l.embed_subfield(&[1], &y);
        assert_eq!(l.restrict_to_subfield(&[1], &x), Some(y.clone()));
        assert!(l.restrict_to_subfield(&[0], &x).is_none());
        let nrm = l.relative_norm(&[1], &l.embed_subfield(&[0], &a.basis_element(0)));
        assert!(l.as_rational(&nrm).is_some());
        let p = 131; // 1 mod 65
        let e = l.mod_embedding(p);
        let w = l.mul(&x, &x);
        let vals = e.eval_all(&w).unwrap();
        let coords = e.coords_from_values(&vals);
        let expect: Vec<u64> = w.numerator().iter().map(|c| mod_integer(c, p)).collect();
        assert_eq!(coords, expect);
    }
}
