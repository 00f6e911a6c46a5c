//! Characters of Delta = Gal(L/k) for a subfield k of L, given as the
//! restriction of an even Dirichlet character of L.

use crate::cyclotomic_fields::{AbelianField, DirichletCharacter};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{gcd, invmod, mulmod};
use crate::exact_algebra::coeff::CoeffRing;

#[derive(Clone, Debug)]
pub struct FieldCharacter {
    field: AbelianField,
    psi: DirichletCharacter,
    delta: Vec<usize>,
    exps: Vec<u64>,
    order: u64,
}

impl FieldCharacter {
    /// chi on the subgroup `delta` of Gal(L/Q), from psi.
    pub fn new(field: &AbelianField, psi: &DirichletCharacter, delta: Vec<usize>) -> Result<Self> {
        if !psi.is_even() {
            return Err(Error::ChiOdd);
        }
        if !field.characters().iter().any(|c| c.same_primitive(psi)) {
            return Err(Error::LevelMismatch(format!("{psi:?} is not a character of the field")));
        }
        let prim = psi.primitive();
        let raw: Vec<u64> = delta
            .iter()
            .map(|&g| prim.exponent(field.galois_residue(g) as i64).expect("unit residue"))
            .collect();
        let g = raw.iter().fold(prim.order(), |a, &e| gcd(a, e));
        let order = prim.order() / g;
        let exps = raw.iter().map(|e| e / g).collect();
        Ok(FieldCharacter {
            field: field.clone(),
            psi: prim,
            delta,
            exps,
            order,
        })
    }

    /// k = Q: Delta is the whole Galois group.
    pub fn over_rationals(field: &AbelianField, psi: &DirichletCharacter) -> Result<Self> {
        Self::new(field, psi, (0..field.degree()).collect())
    }

    /// k = the subfield cut out by `base`: Delta = common kernel.
    pub fn over_subfield(field: &AbelianField, psi: &DirichletCharacter, base: &[DirichletCharacter]) -> Result<Self> {
        let delta = (0..field.degree())
            .filter(|&g| {
                let a = field.galois_residue(g) as i64;
                base.iter().all(|c| c.primitive().exponent(a) == Some(0))
            })
            .collect();
        Self::new(field, psi, delta)
    }

    pub fn field(&self) -> &AbelianField {
        &self.field
    }

    pub fn psi(&self) -> &DirichletCharacter {
        &self.psi
    }

    pub fn delta(&self) -> &[usize] {
        &self.delta
    }

    /// r = [k : Q].
    pub fn rank(&self) -> usize {
        self.field.degree() / self.delta.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// chi(g) = zeta_order^k for g in Delta.
    pub fn exponent_at(&self, g: usize) -> Option<u64> {
        self.delta.iter().position(|&d| d == g).map(|i| self.exps[i])
    }

    /// +-1 for characters of order <= 2.
    pub fn real_value(&self, g: usize) -> Option<i64> {
        assert!(self.order <= 2, "character is not real");
        self.exponent_at(g).map(|k| if k == 0 { 1 } else { -1 })
    }

    /// Teichmüller root of unity of order `order` in Z/p^m.
    pub fn root_mod(&self, p: u64, m: u32) -> Result<u64> {
        if (p - 1) % self.order != 0 {
            return Err(Error::UnrealizableCharacter { order: self.order, p });
        }
        Ok(CoeffRing::integers(p, m).primitive_root_of_unity(self.order)[0])
    }

    pub fn value_mod(&self, g: usize, p: u64, m: u32) -> Result<Option<u64>> {
        let z = self.root_mod(p, m)?;
        let pm = p.pow(m);
        Ok(self
            .exponent_at(g)
            .map(|k| crate::exact_algebra::arith::powmod(z, k, pm)))
    }

    /// e_chi = |Delta|^{-1} sum_delta chi(delta) delta^{-1} over Z/p^m, as
    /// (Galois index, coefficient) pairs.
    pub fn idempotent(&self, p: u64, m: u32) -> Result<Vec<(usize, u64)>> {
        let d = self.delta.len() as u64;
        if d % p == 0 {
            return Err(Error::NonInvertibleOrder { p, order: d });
        }
        let pm = p.pow(m);
        let inv = invmod(d % pm, pm).unwrap();
        let z = self.root_mod(p, m)?;
        Ok(self
            .delta
            .iter()
            .zip(&self.exps)
            .map(|(&g, &k)| {
                let v = crate::exact_algebra::arith::powmod(z, k, pm);
                (self.field.galois_inverse(g), mulmod(v, inv, pm))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_quadratic_character() {
        let l = AbelianField::real_quadratic(5)
            .unwrap()
            .tensor(&AbelianField::real_quadratic(13).unwrap())
            .unwrap();
        let k_char = DirichletCharacter::quadratic(5);
        let chi = FieldCharacter::over_subfield(&l, &DirichletCharacter::quadratic(13), &[k_char]).unwrap();
        assert_eq!(chi.rank(), 2);
        assert_eq!(chi.order(), 2);
        let chi65 = FieldCharacter::over_subfield(&l, &DirichletCharacter::quadratic(65), &[DirichletCharacter::quadratic(5)]).unwrap();
        // chi_13 and chi_65 agree on Gal(L/Q(sqrt 5))
        for &g in chi.delta() {
            assert_eq!(chi.real_value(g), chi65.real_value(g));
        }
        let e = chi.idempotent(3, 2).unwrap();
        assert_eq!(e.len(), 2);
        assert!(FieldCharacter::over_rationals(&l, &DirichletCharacter::quadratic(-4)).is_err());
    }
}
