//! Local units at p, the chi-line inside them, the homomorphism phi_0 cut
//! out by it, and the index comparison between global and local units.
//!
//! For p odd and unramified in L the p-adic logarithm identifies the
//! pro-p local units with p (O_L ⊗ Z_p); dividing by p gives coordinates in
//! O_L / p^m, on which Gal(L/Q) acts through the field's own matrices.

use crate::class_unit::ideals::conjugate_index;
use crate::class_unit::{primes_above, FieldCharacter, UnitChiLattice, UnitGroup};
use crate::cyclotomic_fields::{AbelianField, FieldElement};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{invmod, mod_integer, mulmod, vp, vp_u64};
use crate::exact_algebra::modp::{det_mod_pm, inverse_mod_pm, mat_mul_mod, ModMatrix};
use crate::exact_algebra::snf::lattice_index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};

/// O_L / q O_L for q = p^k, elements as integral-basis coordinates.
#[derive(Clone, Debug)]
pub(crate) struct LocalRing {
    pub(crate) q: u64,
    n: usize,
    table: Vec<Vec<u64>>,
    pub(crate) one: Vec<u64>,
}

impl LocalRing {
    pub(crate) fn new(field: &AbelianField, q: u64) -> Self {
        let n = field.degree();
        let mut table = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut v = vec![0u64; n];
                for &(k, c) in field.basis_product(i, j) {
                    let c = crate::exact_algebra::arith::reduce_i64(c, q);
                    v[k as usize] = ((v[k as usize] as u128 + c as u128) % q as u128) as u64;
                }
                table.push(v);
            }
        }
        let one = field.one().numerator().iter().map(|c| mod_integer(c, q)).collect();
        LocalRing { q, n, table, one }
    }

    pub(crate) fn reduce(&self, x: &FieldElement) -> Vec<u64> {
        assert!(x.is_integral(), "local coordinates need an integral element");
        x.numerator().iter().map(|c| mod_integer(c, self.q)).collect()
    }

    pub(crate) fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
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
                let xy = mulmod(x, y, q);
                for (k, &c) in self.table[i * n + j].iter().enumerate() {
                    if c != 0 {
                        out[k] = ((out[k] as u128 + mulmod(xy, c, q) as u128) % q as u128) as u64;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
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

    pub(crate) fn pow_big(&self, a: &[u64], e: &Integer) -> Vec<u64> {
        let mut acc = self.one.clone();
        for bit in (0..e.significant_bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.get_bit(bit) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }
}

pub(crate) fn lin(a: &[u64], ca: u64, b: &[u64], cb: u64, q: u64) -> Vec<u64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| ((mulmod(x, ca, q) as u128 + mulmod(y, cb, q) as u128) % q as u128) as u64)
        .collect()
}

/// Smallest K with s (k - 1) - log_p k >= m for every k >= K.
fn log_terms(p: u64, s: u32, m: u32) -> u64 {
    let mut k = 1u64;
    loop {
        let mut c = 0u32;
        let mut pk = 1u64;
        while pk < k {
            pk = pk.saturating_mul(p);
            c += 1;
        }
        if s as u64 * (k - 1) >= m as u64 + c as u64 {
            return k;
        }
        k += 1;
    }
}

/// log(x) / p^s mod p^m for x = 1 + p^s y, with x given mod p^(m+s).
fn log_scaled(ring: &LocalRing, x: &[u64], p: u64, s: u32, m: u32) -> Vec<u64> {
    let ps = p.pow(s);
    let pm = p.pow(m);
    let mut y: Vec<u64> = x.iter().zip(&ring.one).map(|(&a, &o)| (a + ring.q - o) % ring.q).collect();
    assert!(y.iter().all(|c| c % ps == 0), "log argument is not 1 mod p^s");
    y.iter_mut().for_each(|c| *c = (*c / ps) % pm);
    let small = LocalRing {
        q: pm,
        n: ring.n,
        table: ring.table.iter().map(|r| r.iter().map(|c| c % pm).collect()).collect(),
        one: ring.one.iter().map(|c| c % pm).collect(),
    };
    let kmax = log_terms(p, s, m);
    let mut out = vec![0u64; ring.n];
    let mut yk = small.one.clone();
    for k in 1..kmax {
        yk = small.mul(&yk, &y);
        let a = vp_u64(k, p);
        let e = s as u64 * (k - 1) - a as u64;
        if e >= m as u64 {
            continue;
        }
        let unit = invmod((k / p.pow(a)) % pm, pm).expect("prime-to-p part");
        let mut c = mulmod(p.pow(e as u32), unit, pm);
        if k % 2 == 0 {
            c = (pm - c) % pm;
        }
        out = lin(&out, 1, &yk, c, pm);
    }
    out
}

/// (O_L^× ⊗ Z_p)_loc / p^m as a (Z/p^m)[Delta]-module in log coordinates,
/// with an explicit free basis sigma_delta sigma_w theta.
#[derive(Clone, Debug)]
pub struct LocalUnitModule {
    field: AbelianField,
    p: u64,
    m: u32,
    delta: Vec<usize>,
    reps: Vec<usize>,
    residue_degree: u32,
    theta: FieldElement,
    basis: ModMatrix,
    inverse: ModMatrix,
    ring: LocalRing,
}

/// Coset representatives of G / Delta, starting from the identity.
pub fn coset_reps(field: &AbelianField, delta: &[usize]) -> Vec<usize> {
    let n = field.degree();
    let mut seen = vec![false; n];
    let mut reps = Vec::new();
    for g in 0..n {
        if seen[g] {
            continue;
        }
        reps.push(g);
        for &d in delta {
            seen[field.compose(d, g)] = true;
        }
    }
    reps
}

pub fn local_units(field: &AbelianField, delta: &[usize], p: u64, m: u32) -> Result<LocalUnitModule> {
    if p == 2 {
        return Err(Error::PEqualsTwo);
    }
    if field.discriminant().is_divisible_u(p as u32) {
        return Err(Error::RamifiedP { p });
    }
    if delta.len() as u64 % p == 0 {
        return Err(Error::NonInvertibleOrder {
            p,
            order: delta.len() as u64,
        });
    }
    let n = field.degree();
    let pm = p.pow(m);
    let reps = coset_reps(field, delta);
    let residue_degree = primes_above(field, p)[0].residue_degree;
    let ring = LocalRing::new(field, p.pow(m + 1));
    let order: Vec<usize> = reps
        .iter()
        .flat_map(|&w| delta.iter().map(move |&d| (w, d)))
        .map(|(w, d)| field.compose(d, w))
        .collect();
    let present = |theta: &FieldElement| -> ModMatrix {
        order
            .iter()
            .map(|&g| field.act(g, theta).numerator().iter().map(|c| mod_integer(c, pm)).collect())
            .collect()
    };
    // a normal basis generator of O_L / p lifts to one of O_L / p^m
    let mut rng = ChaCha8Rng::seed_from_u64(p ^ ((n as u64) << 8));
    let mut candidates: Vec<FieldElement> = (0..n).map(|i| field.basis_element(i)).collect();
    for _ in 0..200 {
        let v: Vec<Integer> = (0..n).map(|_| Integer::from(rng.gen_range(0..p))).collect();
        candidates.push(FieldElement::from_integers(v));
    }
    for theta in candidates {
        let basis = present(&theta);
        if let Some(inverse) = inverse_mod_pm(&basis, p, m) {
            return Ok(LocalUnitModule {
                field: field.clone(),
                p,
                m,
                delta: delta.to_vec(),
                reps,
                residue_degree,
                theta,
                basis,
                inverse,
                ring,
            });
        }
    }
    Err(Error::Unsupported(format!("no normal basis element found mod {p}")))
}

impl LocalUnitModule {
    pub fn field(&self) -> &AbelianField {
        &self.field
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.m)
    }

    pub fn delta(&self) -> &[usize] {
        &self.delta
    }

    pub fn coset_reps(&self) -> &[usize] {
        &self.reps
    }

    /// Free rank over (Z/p^m)[Delta].
    pub fn rank(&self) -> usize {
        self.reps.len()
    }

    pub fn theta(&self) -> &FieldElement {
        &self.theta
    }

    /// Freeness certificate: basis * inverse = I mod p^m.
    pub fn verify_free(&self) -> bool {
        let prod = mat_mul_mod(&self.basis, &self.inverse, self.modulus());
        prod.iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, &x)| x == u64::from(i == j)))
    }

    fn exponent(&self) -> u64 {
        self.p.pow(self.residue_degree) - 1
    }

    /// log_p(u) / p mod p^m, by the series for u^(p^f - 1).
    pub fn log_coords(&self, u: &FieldElement) -> Result<Vec<u64>> {
        let x = self.ring.pow(&self.ring.reduce(u), self.exponent());
        self.finish_log(&self.ring, &x, 1)
    }

    /// The same map computed through u^((p^f - 1) p^j), whose series
    /// converges faster but needs j more digits.
    pub fn log_coords_iterated(&self, u: &FieldElement, j: u32) -> Result<Vec<u64>> {
        let ring = LocalRing::new(&self.field, self.p.pow(self.m + j + 1));
        let e = Integer::from(self.exponent()) * Integer::from(self.p).pow(j);
        let x = ring.pow_big(&ring.reduce(u), &e);
        self.finish_log(&ring, &x, j + 1)
    }

    fn finish_log(&self, ring: &LocalRing, x: &[u64], s: u32) -> Result<Vec<u64>> {
        let ps = self.p.pow(s);
        if x.iter().zip(&ring.one).any(|(&a, &o)| (a + ring.q - o) % ring.q % ps != 0) {
            return Err(Error::Unsupported("element is not a p-adic unit".into()));
        }
        let l = log_scaled(ring, x, self.p, s, self.m);
        let pm = self.modulus();
        let inv = invmod(self.exponent() % pm, pm).unwrap();
        Ok(l.into_iter().map(|c| mulmod(c, inv, pm)).collect())
    }

    /// Coordinates a_{i,d} in the free basis (index i |Delta| + d).
    pub fn module_coords(&self, x: &[u64]) -> Vec<u64> {
        let pm = self.modulus();
        (0..x.len())
            .map(|j| {
                x.iter()
                    .zip(&self.inverse)
                    .fold(0u128, |acc, (&a, row)| (acc + mulmod(a, row[j], pm) as u128) % pm as u128) as u64
            })
            .collect()
    }

    /// Coordinates of e_chi x in the basis e_chi v_i of V^chi.
    pub fn chi_coords(&self, chi: &FieldCharacter, x: &[u64]) -> Result<Vec<u64>> {
        let pm = self.modulus();
        let a = self.module_coords(x);
        let dl = self.delta.len();
        let vals: Vec<u64> = self
            .delta
            .iter()
            .map(|&d| {
                chi.value_mod(d, self.p, self.m)?
                    .ok_or_else(|| Error::LevelMismatch("chi is not a character of Delta".into()))
            })
            .collect::<Result<_>>()?;
        Ok((0..self.rank())
            .map(|i| {
                (0..dl).fold(0u128, |acc, d| (acc + mulmod(vals[d], a[i * dl + d], pm) as u128) % pm as u128) as u64
            })
            .collect())
    }

    /// iota(u) in V^chi / p^m.
    pub fn iota(&self, chi: &FieldCharacter, u: &FieldElement) -> Result<Vec<u64>> {
        self.chi_coords(chi, &self.log_coords(u)?)
    }

    /// iota of a chi-lattice basis, through the unit basis coordinates.
    pub fn iota_lattice(&self, units: &UnitGroup, lattice: &UnitChiLattice) -> Result<Vec<Vec<u64>>> {
        let pm = self.modulus();
        let logs: Vec<Vec<u64>> = units.basis.iter().map(|u| self.log_coords(u)).collect::<Result<_>>()?;
        lattice
            .coords
            .iter()
            .map(|w| {
                let mut x = vec![0u64; self.field.degree()];
                for (c, l) in w.iter().zip(&logs) {
                    x = lin(&x, 1, l, mod_integer(c, pm), pm);
                }
                self.chi_coords(&lattice.chi, &x)
            })
            .collect()
    }

    fn check_delta(&self, chi: &FieldCharacter) -> Result<()> {
        let mut a = self.delta.clone();
        let mut b = chi.delta().to_vec();
        a.sort_unstable();
        b.sort_unstable();
        if a != b || chi.field() != &self.field {
            return Err(Error::LevelMismatch("chi and the local module use different Delta".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LineStrategy {
    Natural,
    FirstBasis,
}

/// A rank one direct summand of V^chi / p^m, given by a generator with a
/// unit entry at `pivot` (so V^chi / line is free of rank r - 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelmerLine {
    pub strategy: LineStrategy,
    pub generator: Vec<u64>,
    pub pivot: usize,
    /// Index of the prime of L above p whose Delta-orbit was used.
    pub place: Option<usize>,
}

fn line_from(strategy: LineStrategy, generator: Vec<u64>, p: u64, place: Option<usize>) -> Option<SelmerLine> {
    let pivot = generator.iter().position(|&c| c % p != 0)?;
    Some(SelmerLine {
        strategy,
        generator,
        pivot,
        place,
    })
}

/// The idempotent of O_L / p^m supported on the given set of primes above p.
fn orbit_idempotent(v: &LocalUnitModule, primes: &[crate::class_unit::PrimeIdeal], orbit: &[usize]) -> Result<Vec<u64>> {
    let e = lifted_idempotent(&v.field, primes, orbit, &v.ring, v.m + 1)?;
    let pm = v.modulus();
    Ok(e.into_iter().map(|c| c % pm).collect())
}

/// Idempotent of O_L / ring.q that is 1 at the primes in `orbit` and 0 at
/// the other primes above the same rational prime, correct mod that prime
/// to the power `k` (ring.q must divide its k-th power).
pub(crate) fn lifted_idempotent(
    field: &AbelianField,
    primes: &[crate::class_unit::PrimeIdeal],
    orbit: &[usize],
    ring: &LocalRing,
    k: u32,
) -> Result<Vec<u64>> {
    let p = primes[0].q;
    let n = field.degree();
    let ring_p = LocalRing::new(field, p);
    let to_elem = |x: &[u64]| FieldElement::from_integers(x.iter().map(|&c| Integer::from(c)).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1);
    let others: Vec<usize> = (0..primes.len()).filter(|i| !orbit.contains(i)).collect();
    let nf = p.pow(primes[0].residue_degree) - 1;
    for _ in 0..200 {
        let mut z = ring_p.one.clone();
        for &i in &others {
            let sub = primes[i].subspace();
            let mut w = vec![0u64; n];
            for row in sub {
                w = lin(&w, 1, row, rng.gen_range(0..p), p);
            }
            z = ring_p.mul(&z, &w);
        }
        let e = ring_p.pow(&z, nf);
        let e_el = to_elem(&e);
        let one_minus: Vec<u64> = e.iter().zip(&ring_p.one).map(|(&a, &o)| (o + p - a) % p).collect();
        let ok = others.iter().all(|&i| primes[i].contains(&e_el))
            && orbit.iter().all(|&i| primes[i].contains(&to_elem(&one_minus)));
        if !ok {
            continue;
        }
        // Newton lift e <- 3e^2 - 2e^3
        let q = ring.q;
        let mut e = e;
        let mut prec = 1u32;
        while prec < k {
            let e2 = ring.mul(&e, &e);
            let e3 = ring.mul(&e2, &e);
            e = lin(&e2, 3, &e3, q - 2, q);
            prec *= 2;
        }
        if ring.mul(&e, &e) != e {
            return Err(Error::HLFailure("idempotent lift failed".into()));
        }
        return Ok(e);
    }
    Err(Error::HLFailure("no idempotent found for the chosen place".into()))
}

pub fn choose_line(v: &LocalUnitModule, chi: &FieldCharacter, strategy: LineStrategy) -> Result<SelmerLine> {
    v.check_delta(chi)?;
    let r = v.rank();
    let p = v.p;
    if r == 1 {
        return Ok(line_from(strategy, vec![1], p, None).unwrap());
    }
    match strategy {
        LineStrategy::FirstBasis => {
            let mut g = vec![0u64; r];
            g[0] = 1;
            Ok(line_from(strategy, g, p, None).unwrap())
        }
        LineStrategy::Natural => {
            let field = &v.field;
            let primes = primes_above(field, p);
            let orbit_of = |i: usize| -> Vec<usize> {
                let mut o: Vec<usize> = v.delta.iter().map(|&d| conjugate_index(field, &primes, i, d)).collect();
                o.sort_unstable();
                o.dedup();
                o
            };
            let (place, orbit) = (0..primes.len())
                .map(|i| (i, orbit_of(i)))
                .find(|(i, o)| primes[*i].residue_degree as usize * o.len() == v.delta.len())
                .ok_or(Error::NoDegreeOnePlace { p })?;
            let e = orbit_idempotent(v, &primes, &orbit)?;
            let pm = v.modulus();
            let block: Vec<Vec<u64>> = v
                .reps
                .iter()
                .map(|&w| {
                    let vi = v.ring.reduce(&field.act(w, &v.theta));
                    let x: Vec<u64> = v.ring.mul(&e, &vi).into_iter().map(|c| c % pm).collect();
                    v.chi_coords(chi, &x)
                })
                .collect::<Result<_>>()?;
            let line = block
                .iter()
                .find_map(|g| line_from(strategy, g.clone(), p, Some(place)))
                .ok_or_else(|| Error::HLFailure("place block has no primitive vector".into()))?;
            let inv = invmod(line.generator[line.pivot], pm).unwrap();
            for g in &block {
                let lambda = mulmod(g[line.pivot], inv, pm);
                let expect: Vec<u64> = line.generator.iter().map(|&c| mulmod(c, lambda, pm)).collect();
                if &expect != g {
                    return Err(Error::HLFailure("place block is not a line".into()));
                }
            }
            Ok(line)
        }
    }
}

/// psi^(1), ..., psi^(r-1): (Z/p^m)^r -> Z/p^m with common kernel the line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhiHom {
    pub p: u64,
    pub m: u32,
    pub psis: Vec<Vec<u64>>,
}

impl PhiHom {
    pub fn apply(&self, x: &[u64]) -> Vec<u64> {
        let pm = self.p.pow(self.m);
        self.psis
            .iter()
            .map(|psi| psi.iter().zip(x).fold(0u128, |a, (&s, &c)| (a + mulmod(s, c, pm) as u128) % pm as u128) as u64)
            .collect()
    }

    /// phi(e_1 ∧ ... ∧ e_r) = sum_k (-1)^(k+1) det(psi^(i)(e_l))_{l != k} e_k.
    pub fn wedge_image(&self, r: usize) -> Vec<u64> {
        let pm = self.p.pow(self.m);
        if r == 1 {
            return vec![1];
        }
        (0..r)
            .map(|k| {
                let minor: ModMatrix = self
                    .psis
                    .iter()
                    .map(|psi| (0..r).filter(|&l| l != k).map(|l| psi[l]).collect())
                    .collect();
                let d = det_mod_pm(&minor, self.p, self.m);
                if k % 2 == 0 {
                    d
                } else {
                    (pm - d) % pm
                }
            })
            .collect()
    }
}

pub fn build_phi0(line: &SelmerLine, p: u64, m: u32) -> Result<PhiHom> {
    let r = line.generator.len();
    let pm = p.pow(m);
    let mut rows: ModMatrix = vec![line.generator.iter().map(|c| c % pm).collect()];
    for i in (0..r).filter(|&i| i != line.pivot) {
        let mut e = vec![0u64; r];
        e[i] = 1;
        rows.push(e);
    }
    let inv = inverse_mod_pm(&rows, p, m).ok_or_else(|| Error::HLFailure("line is not a direct summand".into()))?;
    let psis = (1..r).map(|i| (0..r).map(|k| inv[k][i]).collect()).collect();
    let phi = PhiHom { p, m, psis };
    verify_phi(line, &phi)?;
    Ok(phi)
}

/// Kernel of psi is exactly the line, psi is onto, and phi maps the top
/// wedge onto the line.
pub fn verify_phi(line: &SelmerLine, phi: &PhiHom) -> Result<()> {
    let (p, m) = (phi.p, phi.m);
    let pm = p.pow(m);
    let r = line.generator.len();
    if phi.psis.len() + 1 != r {
        return Err(Error::HLFailure(format!("expected {} functionals, found {}", r - 1, phi.psis.len())));
    }
    if phi.apply(&line.generator).iter().any(|&c| c != 0) {
        return Err(Error::HLFailure("psi does not vanish on the line".into()));
    }
    let others: Vec<usize> = (0..r).filter(|&i| i != line.pivot).collect();
    let restricted: ModMatrix = phi.psis.iter().map(|psi| others.iter().map(|&i| psi[i]).collect()).collect();
    if r > 1 && det_mod_pm(&restricted, p, 1) == 0 {
        return Err(Error::HLFailure("psi is not surjective".into()));
    }
    let w = phi.wedge_image(r);
    let a = mulmod(w[line.pivot], invmod(line.generator[line.pivot], pm).unwrap(), pm);
    let expect: Vec<u64> = line.generator.iter().map(|&c| mulmod(c, a, pm)).collect();
    if expect != w || a % p == 0 {
        return Err(Error::HLFailure("phi does not map onto the line".into()));
    }
    Ok(())
}

/// All indices as p-adic valuations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelmerComparison {
    pub p: u64,
    pub m: u32,
    /// [V^chi : iota(O^chi)]
    pub numerator: u32,
    /// [∧^r V^chi : ∧^r iota(O^chi)], from the determinant
    pub wedge: u32,
    /// [L^chi : iota(O^chi) ∩ L^chi]
    pub denominator: u32,
    /// [V^chi / L^chi : psi(iota(O^chi))]
    pub direct_quotient: u32,
}

impl SelmerComparison {
    pub fn ratio(&self) -> i64 {
        self.numerator as i64 - self.denominator as i64
    }

    pub fn identity_holds(&self) -> bool {
        self.ratio() == self.direct_quotient as i64 && self.wedge == self.numerator
    }
}

fn lift(v: &[u64]) -> Vec<Integer> {
    v.iter().map(|&c| Integer::from(c)).collect()
}

fn with_torsion(gens: &[Vec<u64>], dim: usize, pm: u64) -> Vec<Vec<Integer>> {
    let mut out: Vec<Vec<Integer>> = gens.iter().map(|g| lift(g)).collect();
    for i in 0..dim {
        let mut e = vec![Integer::new(); dim];
        e[i] = Integer::from(pm);
        out.push(e);
    }
    out
}

pub fn selmer_index_comparison(iota: &[Vec<u64>], line: &SelmerLine, phi: &PhiHom) -> Result<SelmerComparison> {
    let (p, m) = (phi.p, phi.m);
    let pm = p.pow(m);
    let r = line.generator.len();
    if iota.len() != r {
        return Err(Error::RankMismatch {
            expected: r,
            found: iota.len(),
        });
    }
    let too_low = |what: &str, v: u32| Error::PrecisionTooLow(format!("{what} index p^{v} not below p^{} at m = {m}", m.saturating_sub(2)));
    let lam = with_torsion(iota, r, pm);
    let idx = lattice_index(r, &lam).finite().cloned().expect("p^m I has full rank");
    let numerator = vp(&idx, p);
    if numerator + 3 > m {
        return Err(too_low("unit", numerator));
    }
    let det = det_mod_pm(&iota.to_vec(), p, m);
    if det == 0 {
        return Err(too_low("wedge", m));
    }
    let wedge = vp_u64(det, p);
    let mut denominator = m;
    for a in 0..=m {
        let g: Vec<u64> = line.generator.iter().map(|&c| mulmod(c, p.pow(a) % pm, pm)).collect();
        let mut gens = lam.clone();
        gens.push(lift(&g));
        if lattice_index(r, &gens).finite() == Some(&idx) {
            denominator = a;
            break;
        }
    }
    let direct_quotient = if r == 1 {
        0
    } else {
        let images: Vec<Vec<u64>> = iota.iter().map(|x| phi.apply(x)).collect();
        let q = lattice_index(r - 1, &with_torsion(&images, r - 1, pm)).finite().cloned().unwrap();
        vp(&q, p)
    };
    Ok(SelmerComparison {
        p,
        m,
        numerator,
        wedge,
        denominator,
        direct_quotient,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdaptiveComparison {
    pub comparison: SelmerComparison,
    pub line: SelmerLine,
    pub verified_at: u32,
}

/// Raise m until every index is certified below p^(m-2), then confirm the
/// same valuations at m + 2.
pub fn compare_adaptive(
    units: &UnitGroup,
    lattice: &UnitChiLattice,
    strategy: LineStrategy,
    m0: u32,
) -> Result<AdaptiveComparison> {
    let chi = &lattice.chi;
    let p = lattice.p;
    let run = |m: u32| -> Result<(SelmerComparison, SelmerLine)> {
        let v = local_units(chi.field(), chi.delta(), p, m)?;
        let line = choose_line(&v, chi, strategy)?;
        let phi = build_phi0(&line, p, m)?;
        let iota = v.iota_lattice(units, lattice)?;
        Ok((selmer_index_comparison(&iota, &line, &phi)?, line))
    };
    let fits = |m: u32| (p as u128).pow(m + 4) < (1u128 << 62);
    let mut m = m0.max(3);
    loop {
        match run(m) {
            Ok((c, line)) => {
                let check = m + 2;
                if fits(check) {
                    let (c2, _) = run(check)?;
                    let same = (c2.numerator, c2.denominator, c2.direct_quotient) == (c.numerator, c.denominator, c.direct_quotient);
                    if !same {
                        return Err(Error::PrecisionTooLow(format!("indices moved between m = {m} and m = {check}")));
                    }
                }
                return Ok(AdaptiveComparison {
                    comparison: c,
                    line,
                    verified_at: check,
                });
            }
            Err(Error::PrecisionTooLow(msg)) => {
                if !fits(m + 2) {
                    return Err(Error::PrecisionTooLow(msg));
                }
                m += 2;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests;
