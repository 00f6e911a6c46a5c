//! Kolyvagin primes, derivative operators and derived classes on the
//! rank-one track: L real quadratic and chi its nontrivial character.
//!
//! At a level tau = q_1 .. q_k the Euler-system element is
//!
//!   eps_tau = eta^{(1 - sigma~) prod_T (1 - l Fr_l^{-1})}  in L(tau),
//!
//! with sigma~ acting as sigma on L and trivially on the q-parts, so that
//! eps_1 is the Stark unit. The derived element D_tau eps_tau is G_tau-fixed
//! modulo p^m-th powers; it is descended to L by matching p^m-th power
//! residue symbols at auxiliary primes against S-units of L, and every
//! descent is certified by extracting the p^m-th root of the quotient in
//! L(tau) exactly.
//!
//! Sign convention for the finite-singular check: with sigma_q acting on
//! zeta_q as zeta_q -> zeta_q^g (g the least primitive root mod q) and
//! D_q = sum_i i sigma_q^i, every place lambda | q of L satisfies
//!
//!   v_lambda(kappa_tau) = -dlog_g(u) mod p^m,
//!
//! where u is the residue at lambda of the lambda-unit part of
//! kappa_{tau/q} and dlog_g(u) = k when u^{(q-1)/p^m} = g^{k(q-1)/p^m}.

#[cfg(test)]
mod tests;

use crate::class_unit::ideals::PrimeIdeal;
use crate::class_unit::primes_above;
use crate::class_unit::units::{pth_root, Coordinatizer};
use crate::class_unit::FieldCharacter;
use crate::cyclotomic_fields::euler::{crt_primes, level_field, verify_distribution_relation};
use crate::cyclotomic_fields::{AbelianField, CycloProduct, FieldElement, ProductContext};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{
    crt_pair, factor, invmod, is_prime, lcm, mod_integer, mulmod, powmod, primes_up_to, primitive_root, vp,
};
use crate::exact_algebra::modp::{rank_mod, solve_mod_pm, ModMatrix};
use crate::exact_algebra::snf::hnf_rows;
use crate::exact_algebra::{CoeffRing, FiniteAbelianGroup, GroupRingElement};
use crate::par::{self, ExecMode};
use crate::selmer_line::{lifted_idempotent, LocalRing};
use crate::stark::{
    default_s, default_t, induced_components, stark_unit_rank1, theorem_ab_report, FieldArithmetic, StarkParams,
    StarkPayload,
};
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KolyvaginCaps {
    /// Largest admissible prime bound in a search.
    pub prime_bound: u64,
    /// Largest product q_1 q_2 at a two-prime level.
    pub level_cap: u64,
    pub max_omega: usize,
    pub max_pm: u64,
    /// Largest [L(tau):Q].
    pub max_degree: usize,
    /// Auxiliary primes allowed for one descent.
    pub max_aux_primes: usize,
}

impl Default for KolyvaginCaps {
    fn default() -> Self {
        KolyvaginCaps {
            prime_bound: 200,
            level_cap: 1000,
            max_omega: 2,
            max_pm: 27,
            max_degree: 54,
            max_aux_primes: 96,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KolyvaginPrime {
    pub q: u64,
    pub p: u64,
    pub m: u32,
    /// |G_q| = p^m.
    pub order: u64,
    /// sigma_q sends zeta_q to zeta_q^generator.
    pub generator: u64,
    /// Galois index of Fr_q in L (the identity, since q splits).
    pub frobenius: usize,
}

/// All q <= bound with q = 1 mod p^m, q prime to p f_chi and split in L, in
/// increasing order.
pub fn find_kolyvagin_primes(l: &AbelianField, chi: &FieldCharacter, p: u64, m: u32, bound: u64) -> Vec<KolyvaginPrime> {
    let pm = p.pow(m);
    let f = chi.psi().conductor();
    primes_up_to(bound)
        .into_iter()
        .filter(|&q| q % pm == 1 && f % q != 0 && l.modulus() % q != 0)
        .filter_map(|q| {
            let frobenius = l.galois_index(q as i64).ok()?;
            (frobenius == 0).then(|| KolyvaginPrime {
                q,
                p,
                m,
                order: pm,
                generator: primitive_root(q),
                frobenius,
            })
        })
        .collect()
}

/// D_q = sum_{i=1}^{|G_q|-1} i sigma_q^i in Z/p^m[G_q], with G_q written
/// additively as Z/|G_q| and sigma_q = 1.
pub fn derivative_operator(q: &KolyvaginPrime) -> GroupRingElement {
    let group = FiniteAbelianGroup::cyclic(q.order);
    let ring = CoeffRing::integers(q.p, q.m);
    let coeffs: Vec<(Vec<u64>, i64)> = (1..q.order).map(|i| (vec![i], i as i64)).collect();
    GroupRingElement::from_integer_coeffs(&group, &ring, &coeffs)
}

/// D_tau = prod_q D_q with exact integer coefficients in Z[prod_q G_q].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelDerivative {
    pub orders: Vec<u64>,
    /// Dense coefficients, mixed radix with the first factor slowest.
    pub coeffs: Vec<i64>,
}

impl LevelDerivative {
    pub fn new(orders: &[u64]) -> Self {
        let mut coeffs = vec![1i64];
        for &n in orders {
            let mut next = Vec::with_capacity(coeffs.len() * n as usize);
            for &c in &coeffs {
                next.extend((0..n as i64).map(|i| c * i));
            }
            coeffs = next;
        }
        LevelDerivative {
            orders: orders.to_vec(),
            coeffs,
        }
    }

    fn stride(&self, j: usize) -> usize {
        self.orders[j + 1..].iter().product::<u64>() as usize
    }

    pub fn exponents(&self, idx: usize) -> Vec<u64> {
        let mut e = vec![0u64; self.orders.len()];
        let mut r = idx;
        for j in (0..self.orders.len()).rev() {
            e[j] = r as u64 % self.orders[j];
            r /= self.orders[j] as usize;
        }
        e
    }

    /// Nonzero terms as (exponent vector, coefficient).
    pub fn terms(&self) -> Vec<(Vec<u64>, i64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (self.exponents(i), c))
            .collect()
    }

    /// sigma_j^k x for a dense element x.
    fn shift(&self, x: &[i64], j: usize, k: u64) -> Vec<i64> {
        let n = self.orders[j];
        let st = self.stride(j);
        let mut out = vec![0i64; x.len()];
        for (i, &c) in x.iter().enumerate() {
            if c != 0 {
                let e = (i / st) as u64 % n;
                let t = i - e as usize * st + ((e + k) % n) as usize * st;
                out[t] += c;
            }
        }
        out
    }

    /// (sigma_j - 1) D_tau = (|G_j| - N_j) D_{tau/q_j} in Z[G_tau] for every j.
    pub fn telescoping_holds(&self) -> bool {
        (0..self.orders.len()).all(|j| {
            let n = self.orders[j];
            let lhs: Vec<i64> = self.shift(&self.coeffs, j, 1).iter().zip(&self.coeffs).map(|(a, b)| a - b).collect();
            let mut lower = self.orders.clone();
            lower.remove(j);
            let dl = LevelDerivative::new(&lower);
            // D_{tau/q_j} placed at exponent 0 in coordinate j
            let st = self.stride(j);
            let mut d = vec![0i64; self.coeffs.len()];
            for (i, &c) in dl.coeffs.iter().enumerate() {
                let outer = i / st;
                let inner = i % st;
                d[outer * st * n as usize + inner] = c;
            }
            let mut rhs: Vec<i64> = d.iter().map(|c| c * n as i64).collect();
            for k in 0..n {
                for (r, s) in rhs.iter_mut().zip(self.shift(&d, j, k)) {
                    *r -= s;
                }
            }
            lhs == rhs
        })
    }

    pub fn to_group_ring(&self, p: u64, m: u32) -> GroupRingElement {
        // equal orders p^m already form invariant factors, keeping coordinates
        let group = FiniteAbelianGroup::from_invariants(self.orders.clone());
        let ring = CoeffRing::integers(p, m);
        let coeffs: Vec<(Vec<u64>, i64)> = self.terms();
        GroupRingElement::from_integer_coeffs(&group, &ring, &coeffs)
    }
}

/// L(tau) with the Galois elements and Euler-system element used at tau.
pub struct Level {
    pub primes: Vec<KolyvaginPrime>,
    pub field: AbelianField,
    ctx: ProductContext,
    /// Galois index of sigma_q in L(tau), one per prime.
    pub sigma_q: Vec<usize>,
    /// Galois index of sigma~.
    pub sigma_lift: usize,
    pub euler: CycloProduct,
    pub derivative: LevelDerivative,
}

impl Level {
    pub fn tau(&self) -> Vec<u64> {
        self.primes.iter().map(|q| q.q).collect()
    }

    pub fn context(&self) -> &ProductContext {
        &self.ctx
    }

    /// D_tau as Galois indices of L(tau) with integer coefficients.
    pub fn derivative_rho(&self) -> Vec<(usize, i64)> {
        self.derivative
            .terms()
            .into_iter()
            .map(|(e, c)| {
                let g = e.iter().zip(&self.sigma_q).fold(0usize, |acc, (&k, &s)| {
                    self.field.compose(acc, self.field.galois_pow(s, k))
                });
                (g, c)
            })
            .collect()
    }

    /// eps_tau as an element of L(tau).
    pub fn euler_element(&self) -> Result<FieldElement> {
        self.ctx.reconstruct(&self.euler)
    }

    /// (D_tau eps_tau)^weight.
    pub fn derived_element(&self, weight: i64) -> CycloProduct {
        self.euler.apply(&self.ctx, &self.derivative_rho()).pow(weight)
    }
}

/// Valuation and residue data of an element of L at a place above q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceData {
    pub q: u64,
    /// Index into `primes_above(L, q)`.
    pub place: usize,
    pub valuation: i64,
    /// dlog_g of the residue of x q^{-valuation}, mod p^m.
    pub unit_dlog: u64,
}

#[derive(Clone, Debug)]
pub struct DerivedClass {
    pub tau: Vec<u64>,
    pub p: u64,
    pub m: u32,
    /// Well defined modulo (L^×)^{p^m}.
    pub representative: FieldElement,
    /// Data at every place of L above each q | tau.
    pub local: Vec<PlaceData>,
    /// Valuations at the places above p.
    pub p_valuations: Vec<i64>,
    /// sigma(x) x^{-chi(sigma)} is a p^m-th power.
    pub chi_twisted_fixed: bool,
    /// Height in bits of the certified p^m-th root at level tau (0 at tau = 1).
    pub certificate_bits: u32,
    /// Auxiliary primes used by the descent.
    pub aux_primes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSingular {
    pub q: u64,
    pub place: usize,
    /// v_lambda(kappa_tau) mod p^m.
    pub singular: u64,
    /// -dlog of the finite part of kappa_{tau/q}, mod p^m.
    pub finite: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalReport {
    pub tau: Vec<u64>,
    pub unramified_outside_tau: bool,
    pub finite_singular: Vec<FiniteSingular>,
    /// Always true on the rank-one track.
    pub loc_p: bool,
    pub failures: Vec<String>,
}

impl LocalReport {
    pub fn all_hold(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// v_p |A_L^chi|.
    pub lhs: u32,
    /// Saturation exponent of kappa_1 in (O_L^×)^chi.
    pub rhs: u32,
    pub holds: bool,
    pub equality: bool,
    /// No prime of S splits completely in L.
    pub hs: bool,
}

struct DescentBasis {
    gens: Vec<FieldElement>,
    /// Rows: generators; columns: primes of S'.
    vals: Vec<Vec<i64>>,
    tau_col: Vec<bool>,
}

pub struct KolyvaginContext {
    pub arith: FieldArithmetic,
    pub chi: FieldCharacter,
    pub p: u64,
    pub m: u32,
    pub s_primes: Vec<u64>,
    pub t_primes: Vec<u64>,
    pub caps: KolyvaginCaps,
    /// Digits for the Stark-unit regulator check.
    pub digits: u32,
    sigma: usize,
}

impl KolyvaginContext {
    pub fn new(arith: FieldArithmetic, chi: &FieldCharacter, p: u64, m: u32, caps: KolyvaginCaps) -> Result<Self> {
        let field = arith.field().clone();
        if field.degree() != 2 || chi.is_trivial() || chi.rank() != 1 {
            return Err(Error::Unsupported("derived classes are built for real quadratic fields".into()));
        }
        if p == 2 {
            return Err(Error::PEqualsTwo);
        }
        let pm = p.pow(m);
        if pm > caps.max_pm {
            return Err(Error::BoundExceeded {
                what: "p^m".into(),
                value: pm,
                cap: caps.max_pm,
            });
        }
        let components = induced_components(chi)?;
        let s_primes = default_s(&components);
        let t_primes = default_t(&components, p, field.modulus());
        let sigma = (0..2).find(|&g| chi.real_value(g) == Some(-1)).unwrap();
        Ok(KolyvaginContext {
            arith,
            chi: chi.clone(),
            p,
            m,
            s_primes,
            t_primes,
            caps,
            digits: 40,
            sigma,
        })
    }

    pub fn field(&self) -> &AbelianField {
        self.arith.field()
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.m)
    }

    fn stark_params(&self) -> StarkParams {
        let mut params = StarkParams::new(self.p, self.m.max(2), self.digits);
        params.s_primes = Some(self.s_primes.clone());
        params.t_primes = Some(self.t_primes.clone());
        params
    }

    /// The Stark unit of L with the same S and T.
    pub fn stark_unit(&self) -> Result<FieldElement> {
        let eps = stark_unit_rank1(&self.arith.co, &self.chi, &self.stark_params())?;
        match eps.payload {
            StarkPayload::Unit(u) => Ok(u),
            StarkPayload::WedgeCoordinate(_) => unreachable!("rank one"),
        }
    }

    pub fn primes(&self, bound: u64) -> Result<Vec<KolyvaginPrime>> {
        if bound > self.caps.prime_bound {
            return Err(Error::BoundExceeded {
                what: "Kolyvagin prime bound".into(),
                value: bound,
                cap: self.caps.prime_bound,
            });
        }
        let mut qs = find_kolyvagin_primes(self.field(), &self.chi, self.p, self.m, bound);
        qs.retain(|q| !self.t_primes.contains(&q.q));
        Ok(qs)
    }

    /// tau = 1, every single prime, and every admissible pair.
    pub fn levels(&self, bound: u64) -> Result<Vec<Vec<KolyvaginPrime>>> {
        let qs = self.primes(bound)?;
        let mut out = vec![Vec::new()];
        out.extend(qs.iter().map(|q| vec![q.clone()]));
        if self.caps.max_omega >= 2 && self.field().degree() as u64 * self.modulus().pow(2) <= self.caps.max_degree as u64 {
            for (i, a) in qs.iter().enumerate() {
                for b in &qs[i + 1..] {
                    if a.q * b.q <= self.caps.level_cap {
                        out.push(vec![a.clone(), b.clone()]);
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_prime(&self, q: &KolyvaginPrime) -> Result<()> {
        let bad = |reason: &str| Error::BadLevelPrime {
            q: q.q,
            reason: reason.into(),
        };
        if !is_prime(q.q) {
            return Err(bad("not prime"));
        }
        if q.p != self.p || q.m != self.m || q.order != self.modulus() {
            return Err(bad("precision does not match the context"));
        }
        if q.q % self.modulus() != 1 {
            return Err(bad("not 1 mod p^m"));
        }
        if self.t_primes.contains(&q.q) {
            return Err(bad("lies in T"));
        }
        if q.generator != primitive_root(q.q) {
            return Err(bad("generator is not the least primitive root"));
        }
        match self.field().galois_index(q.q as i64) {
            Ok(0) => Ok(()),
            _ => Err(bad("does not split in L")),
        }
    }

    pub fn level(&self, tau: &[KolyvaginPrime]) -> Result<Level> {
        if tau.len() > self.caps.max_omega {
            return Err(Error::BoundExceeded {
                what: "omega(tau)".into(),
                value: tau.len() as u64,
                cap: self.caps.max_omega as u64,
            });
        }
        for q in tau {
            self.check_prime(q)?;
        }
        let l = self.field();
        let qs: Vec<u64> = tau.iter().map(|q| q.q).collect();
        let degree = l.degree() as u64 * self.modulus().pow(tau.len() as u32);
        if degree > self.caps.max_degree as u64 {
            return Err(Error::BoundExceeded {
                what: "[L(tau):Q]".into(),
                value: degree,
                cap: self.caps.max_degree as u64,
            });
        }
        let top = level_field(&qs, self.p, self.m, l)?;
        let keep: Vec<usize> = (0..l.factor_count()).collect();
        if top.subfield(&keep) != *l {
            return Err(Error::LevelMismatch("L is not the first factor block of L(tau)".into()));
        }
        let big_m = top.modulus();
        // residue = a mod n and 1 mod big_m / n
        let lift = |a: u64, n: u64| -> Result<usize> {
            let r = crt_pair(&Integer::from(a % n), &Integer::from(n), 1, big_m / n);
            top.galois_index(r.to_i64().unwrap())
        };
        let sigma_q = tau.iter().map(|q| lift(q.generator, q.q)).collect::<Result<Vec<_>>>()?;
        let sigma_lift = lift(l.galois_residue(self.sigma), l.modulus())?;
        let all: Vec<usize> = (0..top.factor_count()).collect();
        let ctx = ProductContext::new(&top, &[all.clone()])?;
        let eta = CycloProduct::eta(&all);
        let mut x = eta.mul(&eta.act(&ctx, sigma_lift).pow(-1));
        for &s in self.s_primes.iter().filter(|&&s| big_m % s != 0) {
            let fr = top.galois_inverse(top.galois_index(s as i64)?);
            x = x.mul(&x.act(&ctx, fr).pow(-1));
        }
        for &t in &self.t_primes {
            let fr = top.galois_inverse(top.galois_index(t as i64)?);
            x = x.mul(&x.act(&ctx, fr).pow(-(t as i64)));
        }
        let orders: Vec<u64> = tau.iter().map(|q| q.order).collect();
        Ok(Level {
            primes: tau.to_vec(),
            field: top,
            ctx,
            sigma_q,
            sigma_lift,
            euler: x,
            derivative: LevelDerivative::new(&orders),
        })
    }

    /// N_{L(tau)/L(tau/q)} eps_tau = eps_{tau/q}^{1 - Fr_q^{-1}}, checked
    /// exactly on reconstructed elements.
    pub fn distribution_relation(&self, tau: &[KolyvaginPrime], q: u64) -> Result<bool> {
        let lower: Vec<KolyvaginPrime> = tau.iter().filter(|k| k.q != q).cloned().collect();
        if lower.len() + 1 != tau.len() {
            return Err(Error::LevelMismatch(format!("{q} does not divide the level")));
        }
        let top = self.level(tau)?;
        let bottom = self.level(&lower)?;
        verify_distribution_relation(&top.field, q, &top.euler_element()?, &bottom.field, &bottom.euler_element()?)
    }

    pub fn derived_class(&self, tau: &[KolyvaginPrime], weight: i64) -> Result<DerivedClass> {
        let level = self.level(tau)?;
        let z = level.derived_element(weight);
        self.descend(&level, &z)
    }

    /// Derived classes of several levels, in order.
    pub fn derived_classes(&self, levels: &[Vec<KolyvaginPrime>], mode: ExecMode) -> Vec<Result<DerivedClass>> {
        par::map(mode, levels, |tau| self.derived_class(tau, 1))
    }

    /// The class of L whose image in L(tau) is z modulo p^m-th powers.
    pub fn descend(&self, level: &Level, z: &CycloProduct) -> Result<DerivedClass> {
        let l = self.field();
        let (p, m, pm) = (self.p, self.m, self.modulus());
        let tau = level.tau();
        if tau.is_empty() {
            let x = level.ctx.reconstruct(z)?;
            return self.class_from_representative(&tau, &x, 0, 0);
        }
        let top = &level.field;
        let restrict: Vec<usize> = (0..top.degree())
            .map(|h| l.galois_index((top.galois_residue(h) % l.modulus()) as i64))
            .collect::<Result<_>>()?;
        let reps: Vec<usize> = (0..l.degree())
            .map(|e| restrict.iter().position(|&r| r == e).unwrap())
            .collect();
        let basis = self.descent_basis(&tau)?;
        let nj = basis.gens.len();
        let mut rows: ModMatrix = Vec::new();
        let mut rhs: Vec<u64> = Vec::new();
        for (c, is_tau) in basis.tau_col.iter().enumerate() {
            if !is_tau {
                rows.push(basis.vals.iter().map(|v| reduce(v[c], pm)).collect());
                rhs.push(0);
            }
        }
        let aux_modulus = lcm(top.modulus(), pm);
        let mut aux = crt_primes(aux_modulus);
        let mut used = 0usize;
        let mut last_rank = usize::MAX;
        let mut exact: Option<(Coordinatizer, FieldElement)> = None;
        loop {
            for _ in 0..4 {
                let big_p = aux
                    .next()
                    .ok_or_else(|| Error::DescentFailure("ran out of auxiliary primes".into()))?;
                used += 1;
                let symbol = ResidueSymbol::new(big_p, pm);
                let tables = level.ctx.mod_tables(big_p);
                let zv = level.ctx.values_mod(z, &tables);
                let psi_z: Vec<u64> = zv.iter().map(|&v| symbol.of(v)).collect::<Result<_>>()?;
                for (j, &s) in level.sigma_q.iter().enumerate() {
                    for h in 0..top.degree() {
                        if psi_z[level.ctx.compose(h, s)] != psi_z[h] {
                            return Err(Error::NotGFixed(format!(
                                "(sigma_{} - 1) z has a nontrivial p^m-th power residue symbol at P = {big_p}",
                                tau[j]
                            )));
                        }
                    }
                }
                let emb = l.mod_embedding(big_p);
                for (e, &h) in reps.iter().enumerate() {
                    let row = basis
                        .gens
                        .iter()
                        .map(|y| {
                            let v = emb
                                .eval(e, y)
                                .ok_or_else(|| Error::DescentFailure(format!("generator not integral at {big_p}")))?;
                            symbol.of(v)
                        })
                        .collect::<Result<Vec<u64>>>()?;
                    rows.push(row);
                    rhs.push(psi_z[h]);
                }
            }
            let rank = rank_mod(&rows, p);
            let stable = rank == last_rank;
            last_rank = rank;
            if stable && rows.len() >= nj {
                let c = solve_mod_pm(&rows, &rhs, p, m).ok_or_else(|| {
                    Error::DescentFailure("no S-unit of L matches the residue symbols of z".into())
                })?;
                let x = self.product(&basis.gens, &c)?;
                if exact.is_none() {
                    let co = Coordinatizer::new(top);
                    let ze = level.ctx.reconstruct(z)?;
                    exact = Some((co, ze));
                }
                let (co, ze) = exact.as_ref().unwrap();
                if let Some(root) = certify(l, co, ze, &x, p, m)? {
                    return self.class_from_representative(&tau, &x, root.height_bits(), used);
                }
            }
            if used >= self.caps.max_aux_primes {
                return Err(Error::DescentFailure(format!(
                    "no certified descent after {used} auxiliary primes"
                )));
            }
        }
    }

    /// prod y_j^{c_j} with symmetric exponents.
    fn product(&self, gens: &[FieldElement], c: &[u64]) -> Result<FieldElement> {
        let l = self.field();
        let pm = self.modulus();
        let mut x = l.one();
        for (y, &cj) in gens.iter().zip(c) {
            let e = if cj > pm / 2 { cj as i64 - pm as i64 } else { cj as i64 };
            if e != 0 {
                let ye = l.pow(y, e).ok_or_else(|| Error::DescentFailure("zero generator".into()))?;
                x = l.mul(&x, &ye);
            }
        }
        Ok(x)
    }

    /// Generators of the S'-units of L modulo p^m-th powers, S' = factor
    /// base plus the primes above tau, with their valuation matrix.
    fn descent_basis(&self, tau: &[u64]) -> Result<DescentBasis> {
        let l = self.field();
        let classes = &self.arith.classes;
        let mut columns: Vec<PrimeIdeal> = classes.generators.clone();
        let nfb = columns.len();
        for &q in tau {
            for lam in primes_above(l, q) {
                if !columns.contains(&lam) {
                    columns.push(lam);
                }
            }
        }
        let mut gens = vec![self.arith.units.basis[0].clone()];
        gens.extend(classes.relations.iter().map(|r| r.witness.clone()));
        for i in nfb..columns.len() {
            gens.push(self.short_generator(&columns, i)?);
        }
        let vals = gens
            .iter()
            .map(|y| columns.iter().map(|c| c.valuation(l, y)).collect())
            .collect();
        let tau_col = columns.iter().map(|c| tau.contains(&c.q)).collect();
        Ok(DescentBasis { gens, vals, tau_col })
    }

    /// An element with valuation 1 at columns[i], 0 at the other columns
    /// above the same prime, and norm supported on the columns.
    fn short_generator(&self, columns: &[PrimeIdeal], i: usize) -> Result<FieldElement> {
        let l = self.field();
        let n = l.degree();
        let lam = &columns[i];
        let q = lam.q;
        let mut gens: Vec<Vec<Integer>> = lam
            .subspace()
            .iter()
            .map(|r| r.iter().map(|&c| Integer::from(c)).collect())
            .collect();
        for k in 0..n {
            let mut e = vec![Integer::new(); n];
            e[k] = Integer::from(q);
            gens.push(e);
        }
        let basis = gauss_reduce(l, hnf_rows(&gens, n));
        let emb = l.embedding_matrix_f64();
        let t2 = |v: &[Integer]| -> f64 {
            emb.iter()
                .map(|row| row.iter().zip(v).map(|(a, c)| a * c.to_f64()).sum::<f64>().powi(2))
                .sum()
        };
        let mut col_primes: Vec<u64> = columns.iter().map(|c| c.q).collect();
        col_primes.sort_unstable();
        col_primes.dedup();
        let bound = 12i64;
        let mut cands: Vec<(f64, Vec<Integer>)> = Vec::new();
        let mut coef = vec![-bound; n];
        loop {
            if coef.iter().any(|&c| c != 0) {
                let v: Vec<Integer> = (0..n)
                    .map(|k| basis.iter().zip(&coef).map(|(b, &c)| Integer::from(&b[k] * c)).sum())
                    .collect();
                cands.push((t2(&v), v));
            }
            let mut k = 0;
            while k < n && coef[k] == bound {
                coef[k] = -bound;
                k += 1;
            }
            if k == n {
                break;
            }
            coef[k] += 1;
        }
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
        for (_, v) in cands {
            let x = FieldElement::from_integers(v);
            let mut nrm = Integer::from(l.norm(&x).numer().abs_ref());
            if !nrm.is_divisible_u(q as u32) {
                continue;
            }
            for &r in &col_primes {
                while nrm.is_divisible_u(r as u32) {
                    nrm /= r;
                }
            }
            if nrm != 1 {
                continue;
            }
            let vals: Vec<i64> = columns.iter().map(|c| c.valuation(l, &x)).collect();
            let ok_tau = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.q == q)
                .all(|(k, _)| vals[k] == i64::from(k == i));
            let covered: Integer = columns
                .iter()
                .zip(&vals)
                .map(|(c, &v)| c.norm().pow(v as u32))
                .product();
            if ok_tau && covered == Integer::from(l.norm(&x).numer().abs_ref()) {
                return Ok(x);
            }
        }
        Err(Error::DescentFailure(format!("no short S-generator for a prime above {q}")))
    }

    pub fn class_from_representative(
        &self,
        tau: &[u64],
        x: &FieldElement,
        certificate_bits: u32,
        aux_primes: usize,
    ) -> Result<DerivedClass> {
        let l = self.field();
        let mut local = Vec::new();
        for &q in tau {
            for place in 0..primes_above(l, q).len() {
                local.push(self.place_data(x, q, place)?);
            }
        }
        let p_valuations = primes_above(l, self.p).iter().map(|lam| lam.valuation(l, x)).collect();
        let chi_twisted_fixed = is_rational_power(&l.norm(x), self.modulus());
        Ok(DerivedClass {
            tau: tau.to_vec(),
            p: self.p,
            m: self.m,
            representative: x.clone(),
            local,
            p_valuations,
            chi_twisted_fixed,
            certificate_bits,
            aux_primes,
        })
    }

    /// Valuation and unit residue of x at the place-th prime above q, which
    /// must be of degree one.
    pub fn place_data(&self, x: &FieldElement, q: u64, place: usize) -> Result<PlaceData> {
        let l = self.field();
        let primes = primes_above(l, q);
        let lam = primes
            .get(place)
            .ok_or_else(|| Error::BadLevelPrime {
                q,
                reason: format!("no place {place}"),
            })?;
        if lam.residue_degree != 1 || lam.ramification != 1 {
            return Err(Error::NoDegreeOnePlace { p: q });
        }
        let num = FieldElement::from_integers(x.numerator().to_vec());
        let a = lam.valuation(l, &num);
        let b = vp(x.denominator(), q) as i64;
        let place_map = QAdicPlace::new(l, &primes, place)?;
        let modulus = Integer::from(q).pow((a + 1) as u32);
        let phi = place_map.eval(num.numerator(), &modulus);
        let qa = Integer::from(q).pow(a as u32);
        if phi == 0 || !phi.is_divisible(&qa) || Integer::from(phi.div_exact_ref(&qa)).is_divisible_u(q as u32) {
            return Err(Error::DescentFailure(format!(
                "q-adic residue map disagrees with the valuation at {q}"
            )));
        }
        let un = mod_integer(&Integer::from(phi.div_exact_ref(&qa)), q);
        let d = Integer::from(x.denominator() / Integer::from(q).pow(b as u32));
        let ud = invmod(mod_integer(&d, q), q).expect("unit denominator");
        let u = mulmod(un, ud, q);
        Ok(PlaceData {
            q,
            place,
            valuation: a - b,
            unit_dlog: dlog_mod(u, q, primitive_root(q), self.modulus()),
        })
    }

    /// (a) unramified outside tau p f, (b) finite-singular at each q | tau
    /// against the classes in `lower`, (c) the condition at p.
    pub fn check_local_conditions(&self, kappa: &DerivedClass, lower: &[DerivedClass]) -> Result<LocalReport> {
        let l = self.field();
        let pm = self.modulus();
        let mut failures = Vec::new();
        let x = &kappa.representative;
        let f = self.chi.psi().conductor();
        let mut unramified = true;
        for ell in support_primes(l, x) {
            if kappa.tau.contains(&ell) || ell == self.p || f % ell == 0 {
                continue;
            }
            for lam in primes_above(l, ell) {
                let v = lam.valuation(l, x);
                if v.rem_euclid(pm as i64) != 0 {
                    unramified = false;
                    failures.push(format!("v = {v} at a prime above {ell}"));
                }
            }
        }
        if !kappa.chi_twisted_fixed {
            failures.push("representative is not in the chi-part modulo p^m-th powers".into());
        }
        let mut finite_singular = Vec::new();
        for &q in &kappa.tau {
            let below: Vec<u64> = kappa.tau.iter().copied().filter(|&r| r != q).collect();
            let Some(prev) = lower.iter().find(|c| c.tau == below) else {
                failures.push(format!("no class at level {below:?} for q = {q}"));
                continue;
            };
            for d in kappa.local.iter().filter(|d| d.q == q) {
                let fin = self.place_data(&prev.representative, q, d.place)?;
                if fin.valuation.rem_euclid(pm as i64) != 0 {
                    failures.push(format!("kappa_{below:?} is ramified at a place above {q}"));
                }
                let singular = d.valuation.rem_euclid(pm as i64) as u64;
                let finite = (pm - fin.unit_dlog) % pm;
                let holds = singular == finite;
                if !holds {
                    failures.push(format!(
                        "finite-singular at q = {q}, place {}: {singular} != {finite}",
                        d.place
                    ));
                }
                finite_singular.push(FiniteSingular {
                    q,
                    place: d.place,
                    singular,
                    finite,
                    holds,
                });
            }
        }
        Ok(LocalReport {
            tau: kappa.tau.clone(),
            unramified_outside_tau: unramified,
            finite_singular,
            loc_p: true,
            failures,
        })
    }

    /// v_p |A^chi| against the saturation exponent of kappa_1.
    pub fn bound_check(&self) -> Result<BoundCheck> {
        let rep = theorem_ab_report(&self.arith, &self.chi, &self.stark_params())?;
        let rhs = rep
            .rhs_saturation
            .ok_or_else(|| Error::Unsupported("no saturation exponent on the rank-one track".into()))?;
        let l = self.field();
        let hs = self.s_primes.iter().all(|&s| !matches!(l.galois_index(s as i64), Ok(0)));
        Ok(BoundCheck {
            lhs: rep.lhs,
            rhs,
            holds: rep.lhs <= rhs,
            equality: rep.lhs == rhs,
            hs,
        })
    }
}

fn reduce(v: i64, pm: u64) -> u64 {
    v.rem_euclid(pm as i64) as u64
}

/// p^m-th power residue symbol mod P as an exponent of a fixed root of unity.
struct ResidueSymbol {
    big_p: u64,
    exp: u64,
    table: HashMap<u64, u64>,
}

impl ResidueSymbol {
    fn new(big_p: u64, pm: u64) -> Self {
        let exp = (big_p - 1) / pm;
        let zeta = powmod(primitive_root(big_p), exp, big_p);
        let mut table = HashMap::new();
        let mut z = 1u64;
        for k in 0..pm {
            table.insert(z, k);
            z = mulmod(z, zeta, big_p);
        }
        ResidueSymbol { big_p, exp, table }
    }

    fn of(&self, v: u64) -> Result<u64> {
        if v == 0 {
            return Err(Error::DescentFailure(format!("value vanishes mod {}", self.big_p)));
        }
        Ok(self.table[&powmod(v, self.exp, self.big_p)])
    }
}

/// k mod pm with u^{(q-1)/pm} = g^{k (q-1)/pm}.
fn dlog_mod(u: u64, q: u64, g: u64, pm: u64) -> u64 {
    let e = (q - 1) / pm;
    let target = powmod(u, e, q);
    let base = powmod(g, e, q);
    let mut z = 1u64;
    for k in 0..pm {
        if z == target {
            return k;
        }
        z = mulmod(z, base, q);
    }
    unreachable!("u^((q-1)/p^m) is a p^m-th root of unity")
}

/// Is a nonzero rational an n-th power of a rational, n odd?
fn is_rational_power(r: &Rational, n: u64) -> bool {
    let n = n as u32;
    let root = |a: &Integer| -> bool {
        let abs = Integer::from(a.abs_ref());
        let t = Integer::from(abs.root_ref(n));
        t.pow(n) == abs
    };
    *r != 0 && root(r.numer()) && root(r.denom())
}

/// Rational primes below the support of x.
fn support_primes(l: &AbelianField, x: &FieldElement) -> Vec<u64> {
    let num = FieldElement::from_integers(x.numerator().to_vec());
    let mut out = Vec::new();
    for n in [Integer::from(l.norm(&num).numer().abs_ref()), x.denominator().clone()] {
        let mut rest = n;
        for r in primes_up_to(10_000) {
            if rest.is_divisible_u(r as u32) {
                out.push(r);
                while rest.is_divisible_u(r as u32) {
                    rest /= r;
                }
            }
        }
        if rest != 1 {
            match rest.to_u64() {
                Some(v) => out.extend(factor(v).into_iter().map(|(r, _)| r)),
                // left unfactored: only primes below 10^4 can occur here
                None => unreachable!("S'-units have norms supported below 10^4"),
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Lagrange reduction of a rank-two lattice for the trace form; other
/// ranks are returned unchanged.
fn gauss_reduce(l: &AbelianField, mut b: Vec<Vec<Integer>>) -> Vec<Vec<Integer>> {
    if b.len() != 2 {
        return b;
    }
    let emb = l.embedding_matrix_f64();
    let dot = |u: &[Integer], v: &[Integer]| -> f64 {
        emb.iter()
            .map(|row| {
                let a: f64 = row.iter().zip(u).map(|(e, c)| e * c.to_f64()).sum();
                let c: f64 = row.iter().zip(v).map(|(e, c)| e * c.to_f64()).sum();
                a * c
            })
            .sum()
    };
    loop {
        if dot(&b[0], &b[0]) > dot(&b[1], &b[1]) {
            b.swap(0, 1);
        }
        let mu = (dot(&b[0], &b[1]) / dot(&b[0], &b[0])).round();
        if mu == 0.0 {
            return b;
        }
        let mu = Integer::from(mu as i64);
        let b0 = b[0].clone();
        for (x, y) in b[1].iter_mut().zip(&b0) {
            *x -= Integer::from(y * &mu);
        }
    }
}

/// y with y^p^m = z x^{-1} (after clearing the denominator of x^{-1} by a
/// p^m-th power), or None.
fn certify(
    l: &AbelianField,
    co: &Coordinatizer,
    z: &FieldElement,
    x: &FieldElement,
    p: u64,
    m: u32,
) -> Result<Option<FieldElement>> {
    let top = co.field();
    let keep: Vec<usize> = (0..l.factor_count()).collect();
    let xi = l.inv(x).ok_or_else(|| Error::DescentFailure("zero representative".into()))?;
    let a = FieldElement::from_integers(xi.numerator().to_vec());
    let d = Integer::from(xi.denominator().pow((p.pow(m) - 1) as u32));
    let y = top.mul(&top.mul(z, &top.embed_subfield(&keep, &a)), &top.from_integer(&d));
    let mut w = y;
    for _ in 0..m {
        match pth_root(co, &w, p) {
            Some(r) => w = r,
            None => return Ok(None),
        }
    }
    Ok(Some(w))
}

/// The ring map O_L -> Z/q^k at a degree-one prime, through a lifted
/// idempotent e: e x = phi(x) e.
struct QAdicPlace<'a> {
    field: &'a AbelianField,
    q: u64,
    e1: Vec<u64>,
}

impl<'a> QAdicPlace<'a> {
    fn new(field: &'a AbelianField, primes: &[PrimeIdeal], place: usize) -> Result<Self> {
        let q = primes[place].q;
        let ring = LocalRing::new(field, q);
        let e1 = lifted_idempotent(field, primes, &[place], &ring, 1)?;
        Ok(QAdicPlace { field, q, e1 })
    }

    fn mul(&self, a: &[Integer], b: &[Integer], md: &Integer) -> Vec<Integer> {
        let n = a.len();
        let mut out = vec![Integer::new(); n];
        for i in 0..n {
            if a[i] == 0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0 {
                    continue;
                }
                let ab = Integer::from(&a[i] * &b[j]);
                for &(k, c) in self.field.basis_product(i, j) {
                    out[k as usize] += Integer::from(&ab * c);
                }
            }
        }
        out.into_iter().map(|c| c.modulo(md)).collect()
    }

    fn eval(&self, x: &[Integer], md: &Integer) -> Integer {
        let mut e: Vec<Integer> = self.e1.iter().map(|&c| Integer::from(c)).collect();
        let mut prec = Integer::from(self.q);
        while prec < *md {
            prec.square_mut();
            let e2 = self.mul(&e, &e, md);
            let e3 = self.mul(&e2, &e, md);
            e = e2
                .iter()
                .zip(&e3)
                .map(|(a, b)| (Integer::from(a * 3) - Integer::from(b * 2)).modulo(md))
                .collect();
        }
        let j = e.iter().position(|c| !c.is_divisible_u(self.q as u32)).expect("idempotent is nonzero mod q");
        let t = self.mul(&e, x, md);
        let inv = e[j].clone().invert(md).expect("unit coordinate");
        Integer::from(&t[j] * &inv).modulo(md)
    }
}
