//! Class groups from smooth principal ideals over a Minkowski factor base.
//! The search stops when the relation lattice reaches the class number
//! predicted by the analytic class number formula and the unit regulator;
//! an index below that target is reported as an error, never accepted.

use super::chi::FieldCharacter;
use super::ideals::{conjugate_index, primes_above, PrimeIdeal};
use super::units::{unit_group, Coordinatizer, UnitGroup};
use crate::cyclotomic_fields::{AbelianField, FieldElement};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{primes_up_to, vp};
use crate::exact_algebra::snf::{hnf_rows, lattice_index, snf_invariants, LatticeIndex};
use crate::lfunctions::analytic_hr;
use crate::par::{self, ExecMode};
use rug::ops::Pow;
use rug::{Float, Integer};

#[derive(Clone, Debug)]
pub struct ClassGroupOptions {
    /// Largest admissible Minkowski bound.
    pub minkowski_cap: u64,
    /// Largest sup-norm of coefficient vectors in the relation search.
    pub box_cap: i64,
    /// Digits for the analytic h R.
    pub digits: u32,
    pub mode: ExecMode,
}

impl Default for ClassGroupOptions {
    fn default() -> Self {
        ClassGroupOptions {
            minkowski_cap: 20_000,
            box_cap: 40,
            digits: 30,
            mode: ExecMode::default(),
        }
    }
}

/// (witness) = prod_i P_i^{exponents_i} over the generator primes.
#[derive(Clone, Debug)]
pub struct Relation {
    pub exponents: Vec<Integer>,
    pub witness: FieldElement,
}

#[derive(Clone, Debug)]
pub struct ClassGroupData {
    pub field: AbelianField,
    pub generators: Vec<PrimeIdeal>,
    pub relations: Vec<Relation>,
    /// Nontrivial invariant factors, each dividing the next.
    pub invariants: Vec<Integer>,
    /// galois_perm[g][i] = index of sigma_g(P_i).
    pub galois_perm: Vec<Vec<usize>>,
    pub minkowski_bound: u64,
}

impl ClassGroupData {
    pub fn order(&self) -> Integer {
        self.invariants.iter().product()
    }

    /// Permutation matrix of sigma_g on the generators (row i has a 1 in
    /// the column of sigma_g(P_i)).
    pub fn galois_matrix(&self, g: usize) -> Vec<Vec<i64>> {
        let n = self.generators.len();
        let mut m = vec![vec![0i64; n]; n];
        for (i, &j) in self.galois_perm[g].iter().enumerate() {
            m[i][j] = 1;
        }
        m
    }

    /// Re-factor every witness over the generators and compare.
    pub fn verify_relations(&self) -> bool {
        self.relations.iter().all(|r| {
            self.generators
                .iter()
                .zip(&r.exponents)
                .all(|(p, e)| p.valuation(&self.field, &r.witness) == *e)
                && Integer::from(self.field.norm(&r.witness).numer().abs_ref())
                    == self
                        .generators
                        .iter()
                        .zip(&r.exponents)
                        .map(|(p, e)| p.norm().pow(e.to_u32().unwrap()))
                        .product::<Integer>()
        })
    }
}

/// n!/n^n sqrt|D| for a totally real field, rounded down.
pub fn minkowski_bound(field: &AbelianField) -> u64 {
    let n = field.degree() as u32;
    let d = field.discriminant().abs();
    let mut b = Float::with_val(128, &d).sqrt();
    for k in 1..=n {
        b *= k;
        b /= n;
    }
    b.to_f64().floor() as u64
}

pub fn class_group(field: &AbelianField, opts: &ClassGroupOptions) -> Result<ClassGroupData> {
    let co = Coordinatizer::new(field);
    let units = unit_group(&co)?;
    class_group_with_units(&co, &units, opts)
}

/// Class number implied by the analytic h R and the regulator of `units`.
pub fn class_number_target(co: &Coordinatizer, units: &UnitGroup, digits: u32) -> Result<Integer> {
    let field = co.field();
    if field.degree() == 1 {
        return Ok(Integer::from(1));
    }
    let hr = analytic_hr(field, digits)?;
    let reg = units.regulator(co, hr.prec());
    let h = Float::with_val(hr.prec(), &hr / &reg);
    let r = h.clone().round();
    let err = Float::with_val(hr.prec(), &h - &r).abs().to_f64();
    if err > 1e-10 || r < 1 {
        return Err(Error::RegulatorMismatch(format!(
            "analytic h R / R = {} is not a positive integer",
            h.to_f64()
        )));
    }
    Ok(r.to_integer().unwrap())
}

fn smooth_relation(field: &AbelianField, fb: &[PrimeIdeal], fb_primes: &[u64], x: &FieldElement) -> Option<Vec<Integer>> {
    let mut n = Integer::from(field.norm(x).numer().abs_ref());
    if n == 0 {
        return None;
    }
    let mut touched = Vec::new();
    for &q in fb_primes {
        if n.is_divisible_u(q as u32) {
            while n.is_divisible_u(q as u32) {
                n /= q;
            }
            touched.push(q);
        }
    }
    if n != 1 {
        return None;
    }
    let mut v = vec![Integer::new(); fb.len()];
    for q in touched {
        let vq = vp(&Integer::from(field.norm(x).numer().abs_ref()), q) as i64;
        let mut got = 0i64;
        for (i, p) in fb.iter().enumerate().filter(|(_, p)| p.q == q) {
            let e = p.valuation(field, x);
            got += e * p.residue_degree as i64;
            v[i] = Integer::from(e);
        }
        // a prime above q outside the factor base divides x
        if got != vq {
            return None;
        }
    }
    Some(v)
}

/// Coefficient vectors with sup-norm exactly b, first nonzero entry
/// positive, primitive.
fn shell(n: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut c = vec![-b; n];
    loop {
        let sup = c.iter().map(|x| x.abs()).max().unwrap();
        let first = c.iter().find(|&&x| x != 0).copied().unwrap_or(0);
        let g = c.iter().fold(0u64, |a, &x| crate::exact_algebra::arith::gcd(a, x.unsigned_abs()));
        if sup == b && first > 0 && g == 1 {
            out.push(c.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if c[i] < b {
                c[i] += 1;
                break;
            }
            c[i] = -b;
            i += 1;
        }
    }
}

pub fn class_group_with_units(co: &Coordinatizer, units: &UnitGroup, opts: &ClassGroupOptions) -> Result<ClassGroupData> {
    let field = co.field().clone();
    let n = field.degree();
    let mb = minkowski_bound(&field);
    if mb > opts.minkowski_cap {
        return Err(Error::BoundExceeded {
            what: "Minkowski bound".into(),
            value: mb,
            cap: opts.minkowski_cap,
        });
    }
    let target = class_number_target(co, units, opts.digits)?;
    let mut fb: Vec<PrimeIdeal> = Vec::new();
    let mut fb_primes = Vec::new();
    for q in primes_up_to(mb) {
        let ps: Vec<PrimeIdeal> = primes_above(&field, q)
            .into_iter()
            .filter(|p| p.norm() <= mb)
            .collect();
        if !ps.is_empty() {
            fb_primes.push(q);
            fb.extend(ps);
        }
    }
    let galois_perm: Vec<Vec<usize>> = (0..n)
        .map(|g| (0..fb.len()).map(|i| conjugate_index(&field, &fb, i, g)).collect())
        .collect();
    let nfb = fb.len();
    let mut relations: Vec<Relation> = Vec::new();
    let mut hnf: Vec<Vec<Integer>> = Vec::new();
    let add = |rel: Relation, relations: &mut Vec<Relation>, hnf: &mut Vec<Vec<Integer>>| {
        let mut gens = hnf.clone();
        gens.push(rel.exponents.clone());
        let h = hnf_rows(&gens, nfb);
        if h != *hnf {
            *hnf = h;
            relations.push(rel);
        }
    };
    for &q in &fb_primes {
        let x = field.from_integer(&Integer::from(q));
        if let Some(v) = smooth_relation(&field, &fb, &fb_primes, &x) {
            add(Relation { exponents: v, witness: x }, &mut relations, &mut hnf);
        }
    }
    let basis: Vec<FieldElement> = (0..n).map(|i| field.basis_element(i)).collect();
    let index = |hnf: &Vec<Vec<Integer>>| match lattice_index(nfb, hnf) {
        LatticeIndex::Finite(i) => Some(i),
        LatticeIndex::Infinite => None,
    };
    let mut b = 1i64;
    loop {
        if let Some(i) = index(&hnf) {
            if i == target {
                break;
            }
            if i < target {
                return Err(Error::RegulatorMismatch(format!(
                    "relation index {i} is below the analytic class number {target}"
                )));
            }
        }
        if b > opts.box_cap {
            return Err(Error::BoundExceeded {
                what: "relation search box".into(),
                value: b as u64,
                cap: opts.box_cap as u64,
            });
        }
        let cands = shell(n, b);
        let found = par::map(opts.mode, &cands, |c| {
            let mut x = field.zero();
            for (w, &ci) in basis.iter().zip(c) {
                if ci != 0 {
                    x = field.add(&x, &field.scale(w, &rug::Rational::from(ci)));
                }
            }
            smooth_relation(&field, &fb, &fb_primes, &x).map(|v| (v, x))
        });
        for (v, x) in found.into_iter().flatten() {
            // conjugates come for free through the permutation action
            for g in 0..n {
                let mut w = vec![Integer::new(); nfb];
                for (i, e) in v.iter().enumerate() {
                    w[galois_perm[g][i]] = e.clone();
                }
                add(
                    Relation {
                        exponents: w,
                        witness: field.act(g, &x),
                    },
                    &mut relations,
                    &mut hnf,
                );
            }
        }
        b += 1;
    }
    let invariants = if nfb == 0 {
        Vec::new()
    } else {
        let rows: Vec<Vec<Integer>> = relations.iter().map(|r| r.exponents.clone()).collect();
        snf_invariants(&crate::exact_algebra::IntMatrix::from_rows(&rows))
            .into_iter()
            .filter(|d| *d != 1)
            .collect()
    };
    Ok(ClassGroupData {
        field,
        generators: fb,
        relations,
        invariants,
        galois_perm,
        minkowski_bound: mb,
    })
}

/// |(A_L ⊗ Z_p)^chi| as a power of p: with R' = relations + p^K Z^N,
/// |e_chi A_p| = [Z^N : R'] / [Z^N : e_chi Z^N + R'].
pub fn chi_part_order(cg: &ClassGroupData, chi: &FieldCharacter, p: u64) -> Result<Integer> {
    let h = cg.order();
    let k = vp(&h, p);
    if k == 0 {
        return Ok(Integer::from(1));
    }
    let nfb = cg.generators.len();
    let kk = k + 1;
    let e = chi.idempotent(p, kk)?;
    let pk = Integer::from(p).pow(kk);
    let mut base: Vec<Vec<Integer>> = cg.relations.iter().map(|r| r.exponents.clone()).collect();
    for i in 0..nfb {
        let mut row = vec![Integer::new(); nfb];
        row[i] = pk.clone();
        base.push(row);
    }
    let full = |gens: &[Vec<Integer>]| lattice_index(nfb, gens).finite().cloned().expect("p^K Z^N has full rank");
    let i_base = full(&base);
    let mut with_e = base.clone();
    for i in 0..nfb {
        let mut row = vec![Integer::new(); nfb];
        for &(g, c) in &e {
            row[cg.galois_perm[g][i]] += c;
        }
        with_e.push(row);
    }
    let i_e = full(&with_e);
    Ok(i_base / i_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic_fields::DirichletCharacter;

    /// Wide class number h(D) of a fundamental discriminant D > 0: cycles
    /// of reduced forms under rho give the narrow classes; identifying each
    /// cycle with its image under (a, b, c) -> (-a, b, -c) gives the wide ones.
    fn forms_class_number(disc: i64) -> usize {
        let s = (disc as f64).sqrt();
        let mut reduced = Vec::new();
        for b in 1..=(s as i64) {
            if (b - disc).rem_euclid(2) != 0 {
                continue;
            }
            for a in 1..=((s + b as f64) / 2.0) as i64 {
                if (s - 2.0 * a as f64).abs() < b as f64 && (b * b - disc) % (4 * a) == 0 {
                    let c = (b * b - disc) / (4 * a);
                    reduced.push((a, b, c));
                    reduced.push((-a, b, -c));
                }
            }
        }
        let rho = |(_, b, c): (i64, i64, i64)| {
            let two_c = 2 * c.abs();
            let r = (-b).rem_euclid(two_c);
            let bp = r + ((s - r as f64) / two_c as f64).floor() as i64 * two_c;
            (c, bp, (bp * bp - disc) / (4 * c))
        };
        let mut seen = std::collections::HashSet::new();
        let mut orbits = 0;
        for f in reduced {
            if seen.contains(&f) {
                continue;
            }
            orbits += 1;
            for start in [f, (-f.0, f.1, -f.2)] {
                let mut g = start;
                while seen.insert(g) {
                    g = rho(g);
                }
            }
        }
        orbits
    }

    fn quad(d: i64) -> ClassGroupData {
        class_group(&AbelianField::real_quadratic(d).unwrap(), &ClassGroupOptions::default()).unwrap()
    }

    #[test]
    fn quadratic_class_groups() {
        let cg = quad(2);
        assert!(cg.invariants.is_empty());
        let cg = quad(10);
        assert_eq!(cg.invariants, vec![Integer::from(2)]);
        assert!(cg.verify_relations());
        let cg = quad(79);
        assert_eq!(cg.invariants, vec![Integer::from(3)]);
        assert!(cg.verify_relations());
        assert_eq!(forms_class_number(316), 3);
        assert_eq!(forms_class_number(40), 2);
        assert_eq!(forms_class_number(8), 1);
    }

    #[test]
    fn forms_oracle_matches_over_a_range() {
        for d in 2..120i64 {
            if !crate::exact_algebra::arith::is_squarefree(d as u64) {
                continue;
            }
            let disc = if d % 4 == 1 { d } else { 4 * d };
            let cg = quad(d);
            assert_eq!(cg.order(), forms_class_number(disc) as u64, "d = {d}");
        }
    }

    #[test]
    fn chi_parts() {
        let cg = quad(79);
        let l = cg.field.clone();
        let chi = FieldCharacter::over_rationals(&l, &DirichletCharacter::quadratic(316)).unwrap();
        assert_eq!(chi_part_order(&cg, &chi, 3).unwrap(), 3);
        assert_eq!(chi_part_order(&cg, &chi, 5).unwrap(), 1);
        let triv = FieldCharacter::over_rationals(&l, &DirichletCharacter::trivial(1)).unwrap();
        assert_eq!(chi_part_order(&cg, &triv, 3).unwrap(), 1);
    }

    #[test]
    fn minkowski_cap_is_enforced() {
        let l = AbelianField::real_quadratic(79).unwrap();
        let opts = ClassGroupOptions {
            minkowski_cap: 3,
            ..Default::default()
        };
        assert!(matches!(class_group(&l, &opts), Err(Error::BoundExceeded { .. })));
    }
}

#[cfg(test)]
mod biquadratic_tests {
    use super::*;
    use crate::cyclotomic_fields::DirichletCharacter;

    /// v_p of the chi-parts over all characters of Gal(L/Q) add up to v_p(h).
    #[test]
    fn biquadratic_chi_parts_partition() {
        for (d, disc, h) in [(13i64, 13i64, 1u32), (79, 316, 3)] {
            let l = AbelianField::real_quadratic(5)
                .unwrap()
                .tensor(&AbelianField::real_quadratic(d).unwrap())
                .unwrap();
            let cg = class_group(&l, &ClassGroupOptions::default()).unwrap();
            assert_eq!(cg.order(), h);
            assert!(cg.verify_relations());
            let mut total = Integer::from(1);
            for psi in l.characters() {
                let chi = FieldCharacter::over_rationals(&l, &psi).unwrap();
                total *= chi_part_order(&cg, &chi, 3).unwrap();
            }
            assert_eq!(total, h);
            // relative character of L / Q(sqrt 5)
            let chi = FieldCharacter::over_subfield(&l, &DirichletCharacter::quadratic(disc), &[DirichletCharacter::quadratic(5)]).unwrap();
            assert_eq!(chi_part_order(&cg, &chi, 3).unwrap(), h);
        }
    }
}
