//! Level fields L(tau) and exact Euler-system elements.
//!
//! For a set S of tensor factors of a field F, eta_S is the norm of
//! 1 - zeta_{M_S} from Q(zeta_{M_S}) down to the subfield generated by S.
//! Products of Galois conjugates of the eta_S are evaluated at every
//! embedding into F_P for primes P = 1 mod the modulus, and exact
//! coordinates are recovered by CRT against a height bound taken from the
//! archimedean logarithms.

use super::field::{AbelianField, FieldElement};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{gcd, invmod, is_prime, mulmod, powmod, primitive_root, vp_u64};
use rug::Integer;
use std::collections::{BTreeMap, HashMap};

/// Order of the level group at q: the p-part of (Z/q)^× cut down to p^m.
pub fn level_group_order(q: u64, p: u64, m: u32) -> u64 {
    p.pow(vp_u64(q - 1, p).min(m))
}

/// L(tau): L tensored with the degree-|G_q| subfield of Q(zeta_q) for each
/// q | tau. The new factors follow the factors of L, in the order given.
pub fn level_field(tau: &[u64], p: u64, m: u32, l: &AbelianField) -> Result<AbelianField> {
    let mut field = l.clone();
    let f = l.conductor();
    for (i, &q) in tau.iter().enumerate() {
        if !is_prime(q) {
            return Err(Error::BadLevelPrime {
                q,
                reason: "not prime".into(),
            });
        }
        if tau[..i].contains(&q) {
            return Err(Error::BadLevelPrime {
                q,
                reason: "repeated prime".into(),
            });
        }
        if q == p || f % q == 0 {
            return Err(Error::BadLevelPrime {
                q,
                reason: format!("divides p * f = {p} * {f}"),
            });
        }
        if (q - 1) % p != 0 {
            return Err(Error::BadLevelPrime {
                q,
                reason: format!("{p} does not divide q - 1"),
            });
        }
        let order = level_group_order(q, p, m);
        let g = primitive_root(q);
        let h: Vec<u64> = (0..(q - 1) / order).map(|j| powmod(g, j * order, q)).collect();
        let kq = AbelianField::from_subgroup(q, &h)?;
        field = field.tensor(&kq)?;
    }
    Ok(field)
}

/// A finite product of conjugates sigma_g(eta_S)^c inside a fixed field.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CycloProduct {
    terms: BTreeMap<(Vec<usize>, usize), i64>,
}

impl CycloProduct {
    pub fn one() -> Self {
        Self::default()
    }

    /// eta_S for the subfield of the listed factors.
    pub fn eta(subset: &[usize]) -> Self {
        let mut s = subset.to_vec();
        s.sort_unstable();
        CycloProduct {
            terms: BTreeMap::from([((s, 0), 1)]),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], usize, i64)> {
        self.terms.iter().map(|((s, g), c)| (s.as_slice(), *g, *c))
    }

    pub fn is_one(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut t = self.terms.clone();
        for (k, c) in &o.terms {
            *t.entry(k.clone()).or_insert(0) += c;
        }
        t.retain(|_, c| *c != 0);
        CycloProduct { terms: t }
    }

    pub fn pow(&self, e: i64) -> Self {
        let mut t = self.terms.clone();
        for c in t.values_mut() {
            *c *= e;
        }
        t.retain(|_, c| *c != 0);
        CycloProduct { terms: t }
    }

    pub fn act(&self, ctx: &ProductContext, g: usize) -> Self {
        let mut t = BTreeMap::new();
        for ((s, h), c) in &self.terms {
            *t.entry((s.clone(), ctx.compose(g, *h))).or_insert(0) += c;
        }
        CycloProduct { terms: t }
    }

    /// prod_g sigma_g(self)^{c_g} for a group-ring element given by Galois
    /// indices and integer coefficients.
    pub fn apply(&self, ctx: &ProductContext, rho: &[(usize, i64)]) -> Self {
        let mut acc = Self::one();
        for &(g, c) in rho {
            acc = acc.mul(&self.act(ctx, g).pow(c));
        }
        acc
    }

    fn subsets(&self) -> Vec<Vec<usize>> {
        let mut s: Vec<Vec<usize>> = self.terms.keys().map(|(s, _)| s.clone()).collect();
        s.dedup();
        s
    }
}

struct SubsetData {
    modulus: u64,
    subgroup: Vec<u64>,
    residues: Vec<u64>,
    logs: Vec<f64>,
}

/// Precomputed data for evaluating `CycloProduct`s in one field.
pub struct ProductContext {
    field: AbelianField,
    compose: Vec<Vec<usize>>,
    subsets: HashMap<Vec<usize>, SubsetData>,
}

/// Values of every registered eta_S at every embedding into F_P.
pub struct ModTables {
    p: u64,
    eta: HashMap<Vec<usize>, Vec<u64>>,
}

impl ModTables {
    pub fn prime(&self) -> u64 {
        self.p
    }
}

fn subset_modulus(field: &AbelianField, s: &[usize]) -> u64 {
    s.iter().map(|&k| field.factor_modulus(k)).product()
}

/// H_S as residues mod M_S via CRT of the factor subgroups.
fn subset_subgroup(field: &AbelianField, s: &[usize]) -> Vec<u64> {
    let mut acc = vec![0u64];
    let mut m = 1u64;
    for &k in s {
        let mk = field.factor_modulus(k);
        let mut next = Vec::new();
        for &a in &acc {
            for &h in field.factor_subgroup(k) {
                let r = crate::exact_algebra::arith::crt_pair(&Integer::from(a), &Integer::from(m), h, mk);
                next.push(r.to_u64().unwrap());
            }
        }
        acc = next;
        m *= mk;
    }
    acc
}

impl ProductContext {
    pub fn new(field: &AbelianField, subsets: &[Vec<usize>]) -> Result<Self> {
        let n = field.degree();
        let residues: Vec<u64> = (0..n).map(|g| field.galois_residue(g)).collect();
        let compose = (0..n)
            .map(|g| (0..n).map(|h| field.compose(g, h)).collect())
            .collect();
        let mut map = HashMap::new();
        for s in subsets {
            let mut s = s.clone();
            s.sort_unstable();
            let ms = subset_modulus(field, &s);
            if ms <= 1 {
                return Err(Error::DependentInput("eta of the trivial subfield vanishes".into()));
            }
            let subgroup = subset_subgroup(field, &s);
            let res: Vec<u64> = residues.iter().map(|&a| a % ms).collect();
            let logs = res
                .iter()
                .map(|&a| {
                    subgroup
                        .iter()
                        .map(|&t| {
                            let x = (a * t % ms) as f64 / ms as f64;
                            (2.0 * (std::f64::consts::PI * x).sin().abs()).ln()
                        })
                        .sum()
                })
                .collect();
            map.insert(
                s,
                SubsetData {
                    modulus: ms,
                    subgroup,
                    residues: res,
                    logs,
                },
            );
        }
        Ok(ProductContext {
            field: field.clone(),
            compose,
            subsets: map,
        })
    }

    pub fn field(&self) -> &AbelianField {
        &self.field
    }

    pub fn compose(&self, g: usize, h: usize) -> usize {
        self.compose[g][h]
    }

    fn data(&self, s: &[usize]) -> &SubsetData {
        self.subsets
            .get(s)
            .unwrap_or_else(|| panic!("subset {s:?} was not registered"))
    }

    /// log|x| at every real embedding.
    pub fn log_abs(&self, x: &CycloProduct) -> Vec<f64> {
        let n = self.field.degree();
        (0..n)
            .map(|h| {
                x.terms()
                    .map(|(s, g, c)| c as f64 * self.data(s).logs[self.compose(h, g)])
                    .sum()
            })
            .collect()
    }

    pub fn mod_tables(&self, p: u64) -> ModTables {
        let g = primitive_root(p);
        let mut eta = HashMap::new();
        for (s, d) in &self.subsets {
            let r = powmod(g, (p - 1) / d.modulus, p);
            let mut pw = Vec::with_capacity(d.modulus as usize);
            let mut x = 1u64;
            for _ in 0..d.modulus {
                pw.push(x);
                x = mulmod(x, r, p);
            }
            let vals = d
                .residues
                .iter()
                .map(|&a| {
                    d.subgroup.iter().fold(1u64, |acc, &t| {
                        let z = pw[(a * t % d.modulus) as usize];
                        mulmod(acc, (1 + p - z) % p, p)
                    })
                })
                .collect();
            eta.insert(s.clone(), vals);
        }
        ModTables { p, eta }
    }

    /// x at every embedding into F_P.
    pub fn values_mod(&self, x: &CycloProduct, t: &ModTables) -> Vec<u64> {
        let p = t.p;
        let n = self.field.degree();
        (0..n)
            .map(|h| {
                let mut v = 1u64;
                for (s, g, c) in x.terms() {
                    let base = t.eta[s][self.compose(h, g)];
                    let b = if c < 0 { invmod(base, p).expect("eta is a P-unit") } else { base };
                    v = mulmod(v, powmod(b, c.unsigned_abs(), p), p);
                }
                v
            })
            .collect()
    }

    /// Exact coordinates of x, assumed integral.
    pub fn reconstruct(&self, x: &CycloProduct) -> Result<FieldElement> {
        for s in x.subsets() {
            self.data(&s);
        }
        let bits = coordinate_bound_bits(&self.field, &self.log_abs(x));
        reconstruct(&self.field, self.field.modulus(), bits, |p| {
            let t = self.mod_tables(p);
            Some(self.values_mod(x, &t))
        })
    }
}

/// Upper bound (bits) on the coordinates of an integral element whose real
/// embeddings have the given logarithmic sizes, with a safety margin.
pub fn coordinate_bound_bits(field: &AbelianField, logs: &[f64]) -> u64 {
    let e = field.embedding_matrix_f64();
    let inv = invert_f64(&e);
    let n = field.degree();
    let mut best = f64::NEG_INFINITY;
    for row in inv.iter().take(n) {
        let terms: Vec<f64> = row
            .iter()
            .zip(logs)
            .filter(|(a, _)| **a != 0.0)
            .map(|(a, l)| a.abs().ln() + l)
            .collect();
        let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if mx.is_finite() {
            let s: f64 = terms.iter().map(|t| (t - mx).exp()).sum();
            best = best.max(mx + s.ln());
        }
    }
    let bits = (best / std::f64::consts::LN_2).max(0.0);
    bits.ceil() as u64 + 64
}

fn invert_f64(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for x in m[c].iter_mut() {
            *x /= d;
        }
        for i in 0..n {
            if i != c {
                let f = m[i][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[i][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Primes P = 1 mod `modulus`, descending from just below 2^62.
pub fn crt_primes(modulus: u64) -> impl Iterator<Item = u64> {
    let start = (1u64 << 62) / modulus;
    (1..start).rev().map(move |k| k * modulus + 1).filter(|&p| is_prime(p))
}

/// Recover an integral element from its values mod many primes. `values`
/// returns the element at every embedding of `target` into F_P (or None
/// to skip P). Stops once the CRT modulus exceeds the bound and one extra
/// prime confirms the lift.
pub fn reconstruct(
    target: &AbelianField,
    prime_modulus: u64,
    bound_bits: u64,
    mut values: impl FnMut(u64) -> Option<Vec<u64>>,
) -> Result<FieldElement> {
    let n = target.degree();
    let mut residues = vec![Integer::new(); n];
    let mut modulus = Integer::from(1);
    let cap_bits = bound_bits + 4096;
    for p in crt_primes(prime_modulus) {
        let Some(vals) = values(p) else { continue };
        let emb = target.mod_embedding(p);
        let coords = emb.coords_from_values(&vals);
        if modulus.significant_bits() as u64 > bound_bits + 1 {
            let cand = lift(&residues, &modulus);
            let check: Vec<u64> = cand
                .iter()
                .map(|c| crate::exact_algebra::arith::mod_integer(c, p))
                .collect();
            if check == coords {
                return Ok(FieldElement::from_integers(cand));
            }
        }
        for (r, &c) in residues.iter_mut().zip(&coords) {
            *r = crate::exact_algebra::arith::crt_pair(r, &modulus, c, p);
        }
        modulus *= p;
        if modulus.significant_bits() as u64 > cap_bits {
            return Err(Error::PrecisionUnreached(format!(
                "CRT reconstruction did not stabilize within {cap_bits} bits"
            )));
        }
    }
    Err(Error::PrecisionUnreached("ran out of CRT primes".into()))
}

fn lift(residues: &[Integer], modulus: &Integer) -> Vec<Integer> {
    residues
        .iter()
        .map(|r| crate::exact_algebra::arith::symmetric_mod(r, modulus))
        .collect()
}

/// Galois indices and coefficients of a group-ring element given by
/// residues mod the field modulus.
pub fn group_ring_by_residues(field: &AbelianField, rho: &[(i64, i64)]) -> Result<Vec<(usize, i64)>> {
    let mut out: BTreeMap<usize, i64> = BTreeMap::new();
    for &(a, c) in rho {
        *out.entry(field.galois_index(a)?).or_insert(0) += c;
    }
    Ok(out.into_iter().filter(|(_, c)| *c != 0).collect())
}

/// Exact check of N_{top/bottom}(x_top) = x_bottom^{1 - Fr_q^{-1}}, where
/// `bottom` is `top` with the factor of modulus q removed.
pub fn verify_distribution_relation(
    top: &AbelianField,
    q: u64,
    x_top: &FieldElement,
    bottom: &AbelianField,
    x_bottom: &FieldElement,
) -> Result<bool> {
    let iq = (0..top.factor_count())
        .find(|&k| top.factor_modulus(k) == q)
        .ok_or_else(|| Error::LevelMismatch(format!("no factor of modulus {q} at the top level")))?;
    let keep: Vec<usize> = (0..top.factor_count()).filter(|&k| k != iq).collect();
    if top.subfield(&keep) != *bottom {
        return Err(Error::LevelMismatch("bottom field is not the top field without q".into()));
    }
    if x_top.numerator().len() != top.degree() || x_bottom.numerator().len() != bottom.degree() {
        return Err(Error::LevelMismatch("element does not belong to its level".into()));
    }
    if gcd(q, bottom.modulus()) != 1 {
        return Err(Error::LevelMismatch(format!("q = {q} divides the lower modulus")));
    }
    let nrm = top.relative_norm(&keep, x_top);
    let nrm = top
        .restrict_to_subfield(&keep, &nrm)
        .ok_or_else(|| Error::LevelMismatch("norm left the lower level".into()))?;
    let fr_inv = bottom.galois_inverse(bottom.galois_index(q as i64)?);
    let rhs = bottom.mul(&nrm, &bottom.act(fr_inv, x_bottom));
    Ok(rhs == *x_bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic_fields::cyclo::CycloElement;

    #[test]
    fn level_field_degrees() {
        let l = AbelianField::real_quadratic(2).unwrap();
        assert_eq!(level_field(&[], 3, 1, &l).unwrap().degree(), 2);
        let l7 = level_field(&[7], 3, 1, &l).unwrap();
        assert_eq!(l7.degree(), 6);
        let l713 = level_field(&[7, 13], 3, 1, &l).unwrap();
        assert_eq!(l713.degree(), 18);
        assert!(matches!(level_field(&[5], 3, 1, &l), Err(Error::BadLevelPrime { .. })));
        assert!(matches!(level_field(&[3], 3, 1, &l), Err(Error::BadLevelPrime { .. })));
        assert_eq!(level_group_order(19, 3, 1), 3);
        assert_eq!(level_group_order(19, 3, 2), 9);
    }

    #[test]
    fn multimodular_matches_direct() {
        let k = AbelianField::real_quadratic(13).unwrap();
        let ctx = ProductContext::new(&k, &[vec![0]]).unwrap();
        let eta = CycloProduct::eta(&[0]);
        let s = k.galois_index(2).unwrap();
        let u = eta.mul(&eta.act(&ctx, s).pow(-1));
        let x = ctx.reconstruct(&u).unwrap();
        assert!(k.is_unit(&x));
        // direct: the same product in the power basis
        let f = 13u64;
        let mut num = CycloElement::one(f);
        let mut den = CycloElement::one(f);
        for a in 1..f {
            if crate::cyclotomic_fields::DirichletCharacter::quadratic(13).real_value(a as i64) == 1 {
                num = num.mul(&CycloElement::one_minus_zeta(f, a as i64));
            } else {
                den = den.mul(&CycloElement::one_minus_zeta(f, a as i64));
            }
        }
        let num = num.to_field(&k).unwrap();
        let den = den.to_field(&k).unwrap();
        assert_eq!(k.div(&num, &den).unwrap(), x);
    }

    #[test]
    fn distribution_at_level_seven() {
        let l = AbelianField::real_quadratic(2).unwrap();
        let top = level_field(&[7], 3, 1, &l).unwrap();
        let ctx_top = ProductContext::new(&top, &[vec![0, 1]]).unwrap();
        let ctx_bot = ProductContext::new(&l, &[vec![0]]).unwrap();
        let x_top = ctx_top.reconstruct(&CycloProduct::eta(&[0, 1])).unwrap();
        let x_bot = ctx_bot.reconstruct(&CycloProduct::eta(&[0])).unwrap();
        assert!(verify_distribution_relation(&top, 7, &x_top, &l, &x_bot).unwrap());
        let bad = top.mul(&x_top, &top.from_integer(&Integer::from(-1)));
        let bad = top.mul(&bad, &x_top);
        assert!(!verify_distribution_relation(&top, 7, &bad, &l, &x_bot).unwrap());
    }
}
