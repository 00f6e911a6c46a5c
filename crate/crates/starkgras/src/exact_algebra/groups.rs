//! Finite abelian groups in invariant-factor form and their characters.

use super::arith::{gcd, lcm};
use super::matrix::IntMatrix;
use super::snf::snf_invariants;
use rug::Integer;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    invariants: Vec<u64>,
}

impl FiniteAbelianGroup {
    /// Group with the given invariant factors; they must satisfy d_i | d_{i+1}
    /// and be > 1.
    pub fn from_invariants(invariants: Vec<u64>) -> Self {
        for w in invariants.windows(2) {
            assert!(w[1] % w[0] == 0, "invariant factors must divide successively");
        }
        assert!(invariants.iter().all(|&d| d > 1));
        FiniteAbelianGroup { invariants }
    }

    /// Product of cyclic groups of the given orders, normalized by SNF.
    pub fn from_cyclic_orders(orders: &[u64]) -> Self {
        let diag: Vec<Integer> = orders.iter().map(|&o| Integer::from(o)).collect();
        if diag.is_empty() {
            return Self::trivial();
        }
        let inv = snf_invariants(&IntMatrix::diagonal(&diag));
        let invariants = inv
            .into_iter()
            .map(|d| d.to_u64().expect("small order"))
            .filter(|&d| d > 1)
            .collect();
        FiniteAbelianGroup { invariants }
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup { invariants: vec![] }
    }

    pub fn cyclic(n: u64) -> Self {
        if n == 1 {
            Self::trivial()
        } else {
            FiniteAbelianGroup { invariants: vec![n] }
        }
    }

    pub fn invariants(&self) -> &[u64] {
        &self.invariants
    }

    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    pub fn order(&self) -> u64 {
        self.invariants.iter().product()
    }

    pub fn exponent(&self) -> u64 {
        self.invariants.last().copied().unwrap_or(1)
    }

    pub fn identity(&self) -> Vec<u64> {
        vec![0; self.rank()]
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.invariants)
            .map(|((x, y), d)| (x + y) % d)
            .collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().zip(&self.invariants).map(|(x, d)| (d - x % d) % d).collect()
    }

    pub fn scale(&self, a: &[u64], k: u64) -> Vec<u64> {
        a.iter()
            .zip(&self.invariants)
            .map(|(x, d)| ((*x as u128 * k as u128) % *d as u128) as u64)
            .collect()
    }

    pub fn element_order(&self, a: &[u64]) -> u64 {
        a.iter()
            .zip(&self.invariants)
            .fold(1, |acc, (x, d)| lcm(acc, d / gcd(*x, *d)))
    }

    /// Mixed-radix index of an element in `0..order()`.
    pub fn index_of(&self, a: &[u64]) -> usize {
        let mut idx = 0usize;
        for (x, d) in a.iter().zip(&self.invariants) {
            idx = idx * (*d as usize) + (*x % d) as usize;
        }
        idx
    }

    /// index_of(element_at(i) + element_at(j)) without building the elements.
    pub fn add_indices(&self, mut i: usize, mut j: usize) -> usize {
        let mut out = 0usize;
        let mut scale = 1usize;
        for &d in self.invariants.iter().rev() {
            let d = d as usize;
            out += (i % d + j % d) % d * scale;
            scale *= d;
            i /= d;
            j /= d;
        }
        out
    }

    pub fn element_at(&self, mut idx: usize) -> Vec<u64> {
        let mut out = vec![0; self.rank()];
        for i in (0..self.rank()).rev() {
            let d = self.invariants[i] as usize;
            out[i] = (idx % d) as u64;
            idx /= d;
        }
        out
    }

    pub fn elements(&self) -> Vec<Vec<u64>> {
        (0..self.order() as usize).map(|i| self.element_at(i)).collect()
    }

    pub fn generator(&self, i: usize) -> Vec<u64> {
        let mut g = self.identity();
        g[i] = 1;
        g
    }
}

/// A character of a finite abelian group, valued in the exponent-th roots of
/// unity: chi(e_i) = zeta_{d_i}^{a_i}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Character {
    group: FiniteAbelianGroup,
    exps: Vec<u64>,
}

/// A root of unity zeta_n^a stored exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    pub order: u64,
    pub exponent: u64,
}

impl RootOfUnity {
    pub fn new(order: u64, exponent: u64) -> Self {
        let e = exponent % order;
        let g = gcd(e, order);
        let g = if e == 0 { order } else { g };
        RootOfUnity {
            order: order / g,
            exponent: e / g,
        }
    }

    pub fn is_one(&self) -> bool {
        self.order == 1
    }
}

impl Character {
    pub fn new(group: &FiniteAbelianGroup, exps: Vec<u64>) -> Self {
        assert_eq!(exps.len(), group.rank());
        let exps = exps.iter().zip(group.invariants()).map(|(a, d)| a % d).collect();
        Character {
            group: group.clone(),
            exps,
        }
    }

    pub fn trivial(group: &FiniteAbelianGroup) -> Self {
        Self::new(group, group.identity())
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn exps(&self) -> &[u64] {
        &self.exps
    }

    /// chi(x) as zeta_E^k with E the group exponent.
    pub fn value_exponent(&self, x: &[u64]) -> u64 {
        let e = self.group.exponent();
        let mut k = 0u128;
        for ((a, xi), d) in self.exps.iter().zip(x).zip(self.group.invariants()) {
            k += *a as u128 * *xi as u128 * (e / d) as u128;
        }
        (k % e as u128) as u64
    }

    pub fn value(&self, x: &[u64]) -> RootOfUnity {
        RootOfUnity::new(self.group.exponent(), self.value_exponent(x))
    }

    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(self.group.invariants())
            .fold(1, |acc, (a, d)| lcm(acc, d / gcd(*a, *d)))
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&a| a == 0)
    }

    pub fn mul(&self, other: &Character) -> Character {
        assert_eq!(self.group, other.group);
        Character::new(&self.group, self.group.add(&self.exps, &other.exps))
    }

    pub fn inverse(&self) -> Character {
        Character::new(&self.group, self.group.neg(&self.exps))
    }
}

pub fn all_characters(group: &FiniteAbelianGroup) -> Vec<Character> {
    group
        .elements()
        .into_iter()
        .map(|e| Character::new(group, e))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_cyclic_products() {
        let g = FiniteAbelianGroup::from_cyclic_orders(&[4, 6]);
        assert_eq!(g.invariants(), &[2, 12]);
        assert_eq!(g.order(), 24);
        let chars = all_characters(&g);
        assert_eq!(chars.len(), 24);
        for chi in &chars {
            for i in 0..g.rank() {
                let gen = g.generator(i);
                let v = chi.value(&g.scale(&gen, g.element_order(&gen)));
                assert!(v.is_one());
            }
            assert_eq!(g.exponent() % chi.order(), 0);
        }
    }
}
