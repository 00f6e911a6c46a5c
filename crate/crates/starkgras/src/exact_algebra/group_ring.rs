//! Group rings R[G] over the coefficient rings of `coeff`, character
//! idempotents and isotypic components.

use super::arith::invmod;
use super::coeff::{Coeff, CoeffRing};
use super::groups::{Character, FiniteAbelianGroup};
use super::modp::{rref_mod, ModMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingElement {
    group: FiniteAbelianGroup,
    ring: CoeffRing,
    coeffs: Vec<Coeff>,
}

impl GroupRingElement {
    pub fn zero(group: &FiniteAbelianGroup, ring: &CoeffRing) -> Self {
        GroupRingElement {
            group: group.clone(),
            ring: ring.clone(),
            coeffs: vec![ring.zero(); group.order() as usize],
        }
    }

    pub fn one(group: &FiniteAbelianGroup, ring: &CoeffRing) -> Self {
        Self::basis(group, ring, &group.identity())
    }

    pub fn basis(group: &FiniteAbelianGroup, ring: &CoeffRing, g: &[u64]) -> Self {
        let mut e = Self::zero(group, ring);
        e.coeffs[group.index_of(g)] = ring.one();
        e
    }

    /// Sum of all group elements.
    pub fn norm_element(group: &FiniteAbelianGroup, ring: &CoeffRing) -> Self {
        GroupRingElement {
            group: group.clone(),
            ring: ring.clone(),
            coeffs: vec![ring.one(); group.order() as usize],
        }
    }

    pub fn from_integer_coeffs(group: &FiniteAbelianGroup, ring: &CoeffRing, coeffs: &[(Vec<u64>, i64)]) -> Self {
        let mut e = Self::zero(group, ring);
        for (g, c) in coeffs {
            let i = group.index_of(g);
            e.coeffs[i] = ring.add(&e.coeffs[i], &ring.from_int(*c));
        }
        e
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn coeff(&self, g: &[u64]) -> &Coeff {
        &self.coeffs[self.group.index_of(g)]
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| self.ring.add(a, b))
            .collect();
        GroupRingElement {
            coeffs,
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| self.ring.sub(a, b))
            .collect();
        GroupRingElement {
            coeffs,
            ..self.clone()
        }
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let coeffs = self.coeffs.iter().map(|a| self.ring.mul(a, c)).collect();
        GroupRingElement {
            coeffs,
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.group, other.group);
        let n = self.coeffs.len();
        let mut out = vec![self.ring.zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if self.ring.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if self.ring.is_zero(b) {
                    continue;
                }
                let k = self.group.add_indices(i, j);
                out[k] = self.ring.add(&out[k], &self.ring.mul(a, b));
            }
        }
        GroupRingElement {
            coeffs: out,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| self.ring.is_zero(c))
    }
}

/// Value of a character in a coefficient ring that contains a primitive
/// E-th root of unity `zeta_e`, E the group exponent.
pub fn character_value(ring: &CoeffRing, zeta_e: &Coeff, chi: &Character, g: &[u64]) -> Coeff {
    ring.pow(zeta_e, chi.value_exponent(g))
}

/// e_chi = |G|^{-1} sum_g chi(g)^{-1} g in a given ring with a primitive
/// E-th root of unity.
pub fn idempotent_in(chi: &Character, ring: &CoeffRing, zeta_e: &Coeff) -> Result<GroupRingElement> {
    let group = chi.group();
    let order = group.order();
    let p = ring.p();
    if order % p == 0 {
        return Err(Error::NonInvertibleOrder { p, order });
    }
    let inv_order = invmod(order % ring.modulus(), ring.modulus()).expect("order prime to p");
    let e = group.exponent();
    let mut out = GroupRingElement::zero(group, ring);
    for (i, g) in group.elements().iter().enumerate() {
        let k = chi.value_exponent(g);
        let v = ring.pow(zeta_e, (e - k) % e);
        out.coeffs[i] = ring.scale(&v, inv_order);
    }
    Ok(out)
}

/// The idempotent of chi over the smallest coefficient ring realizing it.
pub fn idempotent(chi: &Character, p: u64, m: u32) -> Result<GroupRingElement> {
    let group = chi.group();
    if group.order() % p == 0 {
        return Err(Error::NonInvertibleOrder { p, order: group.order() });
    }
    let (ring, zeta) = CoeffRing::with_root_of_unity(p, m, group.exponent())?;
    idempotent_in(chi, &ring, &zeta)
}

fn mat_mul(a: &ModMatrix, b: &ModMatrix, md: u64) -> ModMatrix {
    super::modp::mat_mul_mod(a, b, md)
}

fn mat_pow_action(group: &FiniteAbelianGroup, gens: &[ModMatrix], g: &[u64], md: u64) -> ModMatrix {
    let k = gens.first().map_or(0, |m| m.len());
    let mut acc: ModMatrix = (0..k).map(|i| (0..k).map(|j| (i == j) as u64).collect()).collect();
    for (i, e) in g.iter().enumerate() {
        for _ in 0..*e {
            acc = mat_mul(&acc, &gens[i], md);
        }
    }
    let _ = group;
    acc
}

/// Matrix of e_chi acting on (Z/p^m)^k, where `gens[i]` is the matrix of the
/// i-th group generator (column-vector convention).
pub fn idempotent_matrix(gens: &[ModMatrix], chi: &Character, p: u64, m: u32) -> Result<ModMatrix> {
    let group = chi.group();
    let order = group.order();
    if order % p == 0 {
        return Err(Error::NonInvertibleOrder { p, order });
    }
    let (ring, zeta) = CoeffRing::with_root_of_unity(p, m, group.exponent())?;
    if ring.degree() != 1 {
        return Err(Error::UnrealizableCharacter { order: chi.order(), p });
    }
    let md = ring.modulus();
    let k = gens.first().map_or(0, |x| x.len());
    let e = idempotent_in(chi, &ring, &zeta)?;
    let mut out = vec![vec![0u64; k]; k];
    for g in group.elements() {
        let c = e.coeff(&g)[0];
        if c == 0 {
            continue;
        }
        let a = mat_pow_action(group, gens, &g, md);
        for i in 0..k {
            for j in 0..k {
                out[i][j] = (out[i][j] + super::arith::mulmod(c, a[i][j], md)) % md;
            }
        }
    }
    Ok(out)
}

/// Basis of e_chi M for M = (Z/p^m)^k with the given generator action.
/// The component is a direct summand, hence free; columns of the idempotent
/// matrix that are independent mod p form a basis.
pub fn chi_component(gens: &[ModMatrix], chi: &Character, p: u64, m: u32) -> Result<Vec<Vec<u64>>> {
    let e = idempotent_matrix(gens, chi, p, m)?;
    let mut red: ModMatrix = e.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let pivots = if red.is_empty() { Vec::new() } else { rref_mod(&mut red, p) };
    Ok(pivots
        .iter()
        .map(|&c| e.iter().map(|row| row[c]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_algebra::groups::all_characters;

    #[test]
    fn quadratic_idempotent() {
        let g = FiniteAbelianGroup::cyclic(2);
        let chi = Character::new(&g, vec![1]);
        let e = idempotent(&chi, 5, 2).unwrap();
        assert_eq!(e.coeff(&[0]), &vec![13]);
        assert_eq!(e.coeff(&[1]), &vec![25 - 13]);
        assert_eq!(e.mul(&e), e);
    }

    #[test]
    fn regular_representation_components() {
        let g = FiniteAbelianGroup::from_cyclic_orders(&[2, 2]);
        // regular representation on (Z/27)[G]
        let n = 4;
        let gens: Vec<ModMatrix> = (0..2)
            .map(|i| {
                let s = g.generator(i);
                let mut a = vec![vec![0u64; n]; n];
                for (j, h) in g.elements().iter().enumerate() {
                    a[g.index_of(&g.add(&s, h))][j] = 1;
                }
                a
            })
            .collect();
        let mut total = 0;
        for chi in all_characters(&g) {
            total += chi_component(&gens, &chi, 3, 3).unwrap().len();
        }
        assert_eq!(total, 4);
    }
}
