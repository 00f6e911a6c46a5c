//! Unit groups: exact root extraction from real embeddings, p-saturation
//! behind a power-residue sieve, fundamental units of multiquadratic fields,
//! regulators, and the chi-isotypic unit lattice.

use super::chi::FieldCharacter;
use crate::cyclotomic_fields::{AbelianField, CycloProduct, EmbeddingTable, FieldElement, ProductContext};
use crate::error::{Error, Result};
use crate::exact_algebra::arith::{is_prime, lcm, mulmod, powmod, primes_up_to, primitive_root};
use crate::exact_algebra::matrix::{inverse_rational, IntMatrix};
use crate::exact_algebra::modp::kernel_mod;
use crate::exact_algebra::snf::{left_kernel, saturate_rows};
use crate::numeric::{det_float, rank_f64, solve_f64};
use rug::{Float, Integer};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Recovers integral elements from approximate real embeddings through the
/// dual basis of the trace form.
pub struct Coordinatizer {
    field: AbelianField,
    tinv: IntMatrix,
    tden: Integer,
    table: Mutex<Option<Arc<EmbeddingTable>>>,
}

impl Coordinatizer {
    pub fn new(field: &AbelianField) -> Self {
        let n = field.degree();
        let tr = field.basis_traces();
        let mut rows = vec![vec![Integer::new(); n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                for &(k, c) in field.basis_product(i, j) {
                    *slot += Integer::from(&tr[k as usize] * c);
                }
            }
        }
        let (tinv, tden) = inverse_rational(&IntMatrix::from_rows(&rows)).expect("trace form is nondegenerate");
        Coordinatizer {
            field: field.clone(),
            tinv,
            tden,
            table: Mutex::new(None),
        }
    }

    pub fn field(&self) -> &AbelianField {
        &self.field
    }

    /// An embedding table with at least `prec` bits, cached.
    pub fn table(&self, prec: u32) -> Arc<EmbeddingTable> {
        let mut slot = self.table.lock().unwrap();
        if let Some(t) = slot.as_ref() {
            if t.prec() >= prec {
                return t.clone();
            }
        }
        let t = Arc::new(self.field.embedding_table(prec.max(256)));
        *slot = Some(t.clone());
        t
    }

    /// Precision that evaluates x without losing the small conjugates.
    pub fn prec_for(&self, x: &FieldElement) -> u32 {
        2 * x.height_bits() + 64 * self.field.degree() as u32 + 128
    }

    /// Nearest element of the integral basis lattice to the given values.
    pub fn round(&self, table: &EmbeddingTable, vals: &[Float]) -> FieldElement {
        let n = self.field.degree();
        let prec = table.prec();
        let s: Vec<Float> = (0..n)
            .map(|j| {
                let mut acc = Float::new(prec);
                for (g, v) in vals.iter().enumerate() {
                    acc += Float::with_val(prec, v * table.basis_value(g, j));
                }
                acc
            })
            .collect();
        let num = (0..n)
            .map(|i| {
                let mut acc = Float::new(prec);
                for (j, sj) in s.iter().enumerate() {
                    let c = self.tinv.get(i, j);
                    if *c != 0 {
                        acc += Float::with_val(prec, sj * c);
                    }
                }
                acc /= &self.tden;
                acc.to_integer_round(rug::float::Round::Nearest)
                    .map(|(z, _)| z)
                    .unwrap_or_default()
            })
            .collect();
        FieldElement::from_integers(num)
    }
}

/// y with y^p = x, when it exists in O_L. For p = 2 the sign pattern of
/// the square root is searched.
pub fn pth_root(co: &Coordinatizer, x: &FieldElement, p: u64) -> Option<FieldElement> {
    let field = co.field();
    if !x.is_integral() || x.is_zero() {
        return None;
    }
    let prec = co.prec_for(x);
    let table = co.table(prec);
    let vals = table.eval_all(x);
    if vals.iter().any(|v| v.is_zero()) {
        return None;
    }
    let pf = Float::with_val(table.prec(), p);
    let root = |v: &Float| -> Float {
        let a = Float::with_val(table.prec(), v.abs_ref());
        let r = (a.ln() / &pf).exp();
        if v.is_sign_negative() {
            -r
        } else {
            r
        }
    };
    let base: Vec<Float> = vals.iter().map(root).collect();
    let n = field.degree();
    let patterns: Vec<u64> = if p % 2 == 1 {
        vec![0]
    } else {
        if vals.iter().any(|v| v.is_sign_negative()) {
            return None;
        }
        (0..1u64 << (n - 1)).map(|s| s << 1).collect()
    };
    for s in patterns {
        let cand: Vec<Float> = base
            .iter()
            .enumerate()
            .map(|(g, v)| if s >> g & 1 == 1 { Float::with_val(v.prec(), -v) } else { v.clone() })
            .collect();
        let y = co.round(&table, &cand);
        if y.is_zero() {
            continue;
        }
        if field.pow(&y, p as i64).as_ref() == Some(x) {
            return Some(y);
        }
    }
    None
}

/// log|x| at every real embedding, double precision.
pub fn log_embeddings(co: &Coordinatizer, x: &FieldElement) -> Vec<f64> {
    let table = co.table(co.prec_for(x));
    table
        .eval_all(x)
        .iter()
        .map(|v| Float::with_val(table.prec(), v.abs_ref()).ln().to_f64())
        .collect()
}

/// log|x| at every real embedding with `prec` bits after cancellation.
pub fn log_abs_embeddings(co: &Coordinatizer, x: &FieldElement, prec: u32) -> Vec<Float> {
    let table = co.table(co.prec_for(x) + prec);
    table
        .eval_all(x)
        .iter()
        .map(|v| Float::with_val(prec, v.abs_ref()).ln())
        .collect()
}

fn check_independent(co: &Coordinatizer, units: &[FieldElement]) -> Result<()> {
    let rows: Vec<Vec<f64>> = units.iter().map(|u| log_embeddings(co, u)).collect();
    if rank_f64(&rows, 1e-9) < units.len() {
        return Err(Error::DependentInput(format!(
            "{} units span a lattice of smaller rank",
            units.len()
        )));
    }
    Ok(())
}

/// Linear functionals x -> log_omega(x^{(P-1)/p}) at degree-one primes,
/// one row per (P, embedding), accumulated in batches.
struct PowerSieve<'a> {
    field: &'a AbelianField,
    p: u64,
    step: u64,
    next: u64,
    rows: Vec<Vec<u64>>,
}

impl<'a> PowerSieve<'a> {
    fn new(field: &'a AbelianField, p: u64) -> Self {
        let step = lcm(field.modulus().max(1), p);
        PowerSieve {
            field,
            p,
            step,
            next: 1,
            rows: Vec::new(),
        }
    }

    fn add_batch(&mut self, units: &[FieldElement], sign: bool, primes: usize) {
        let mut added = 0;
        while added < primes {
            let big_p = self.next * self.step + 1;
            self.next += 1;
            if big_p < 50 || !is_prime(big_p) {
                continue;
            }
            let emb = self.field.mod_embedding(big_p);
            let e = (big_p - 1) / self.p;
            let omega = powmod(primitive_root(big_p), e, big_p);
            let mut logs = HashMap::new();
            let mut w = 1u64;
            for j in 0..self.p {
                logs.insert(w, j);
                w = mulmod(w, omega, big_p);
            }
            let vals: Vec<Vec<u64>> = units.iter().map(|u| emb.eval_all(u).expect("unit")).collect();
            for g in 0..self.field.degree() {
                let mut row: Vec<u64> = vals.iter().map(|v| logs[&powmod(v[g], e, big_p)]).collect();
                if sign {
                    row.push(logs[&powmod(big_p - 1, e, big_p)]);
                }
                self.rows.push(row);
            }
            added += 1;
        }
    }

    fn kernel(&self, cols: usize) -> Vec<Vec<u64>> {
        kernel_mod(&self.rows, cols, self.p)
    }
}

/// One step of a saturation: `root`^p = prod basis_i^{exponents_i} (times
/// -1 when `negate`), and `root` replaced basis element `replaced`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturationStep {
    pub exponents: Vec<u64>,
    pub negate: bool,
    pub replaced: usize,
}

#[derive(Clone, Debug)]
pub struct Saturation {
    pub basis: Vec<FieldElement>,
    pub exponent: u32,
    pub certificate: Vec<SaturationStep>,
}

const SIEVE_BATCH: usize = 6;
const SIEVE_ROUNDS: usize = 40;

/// p-saturation of the span of independent units inside O_L^×. Roots are
/// accepted only after exact extraction; the sieve only proposes them.
pub fn p_saturate(co: &Coordinatizer, units: &[FieldElement], p: u64) -> Result<Saturation> {
    let field = co.field();
    for u in units {
        if !field.is_unit(u) {
            return Err(Error::DependentInput("input is not a unit".into()));
        }
    }
    check_independent(co, units)?;
    let sign = p == 2;
    let k = units.len();
    let cols = k + sign as usize;
    let mut basis = units.to_vec();
    let mut certificate = Vec::new();
    'outer: loop {
        let mut sieve = PowerSieve::new(field, p);
        sieve.add_batch(&basis, sign, SIEVE_BATCH);
        let mut dims = vec![sieve.kernel(cols).len()];
        for _ in 0..SIEVE_ROUNDS {
            let ker = sieve.kernel(cols);
            // a kernel with no unit part only says -1 looks like a p-th power
            if ker.iter().all(|a| a[..k].iter().all(|&c| c == 0)) {
                break 'outer;
            }
            let stable = dims.len() >= 2 && dims[dims.len() - 2] == ker.len();
            if stable {
                for a in &ker {
                    let Some(j) = (0..k).find(|&i| a[i] != 0) else { continue };
                    let inv = crate::exact_algebra::arith::invmod(a[j], p).unwrap();
                    let exps: Vec<u64> = a[..k].iter().map(|&c| c * inv % p).collect();
                    let mut x = field.one();
                    for (b, &e) in basis.iter().zip(&exps) {
                        if e != 0 {
                            x = field.mul(&x, &field.pow(b, e as i64).unwrap());
                        }
                    }
                    // the sign column vanishes identically when every sieve
                    // prime is 1 mod 4, so both signs are tried
                    let signs: &[bool] = if sign { &[false, true] } else { &[false] };
                    for &negate in signs {
                        let z = if negate { field.neg(&x) } else { x.clone() };
                        if let Some(y) = pth_root(co, &z, p) {
                            basis[j] = y;
                            certificate.push(SaturationStep {
                                exponents: exps,
                                negate,
                                replaced: j,
                            });
                            continue 'outer;
                        }
                    }
                }
            }
            sieve.add_batch(&basis, sign, SIEVE_BATCH);
            dims.push(sieve.kernel(cols).len());
        }
        return Err(Error::PrecisionUnreached(format!(
            "{p}-power sieve did not settle after {SIEVE_ROUNDS} batches"
        )));
    }
    Ok(Saturation {
        basis,
        exponent: certificate.len() as u32,
        certificate,
    })
}

/// Image in `big` of an element of a subfield `small`, identified through
/// the real embeddings and certified by its minimal polynomial.
pub fn embed_from(small: &AbelianField, y: &FieldElement, big: &Coordinatizer) -> Result<FieldElement> {
    let field = big.field();
    if field.modulus() % small.modulus().max(1) != 0 {
        return Err(Error::LevelMismatch("subfield modulus does not divide the field modulus".into()));
    }
    let sco = Coordinatizer::new(small);
    let prec = sco.prec_for(y).max(big.prec_for(y));
    let st = sco.table(prec);
    let svals = st.eval_all(y);
    let bt = big.table(prec);
    let vals: Vec<Float> = (0..field.degree())
        .map(|g| {
            let a = field.galois_residue(g) % small.modulus().max(1);
            let h = if small.degree() == 1 { 0 } else { small.galois_index(a as i64).unwrap() };
            svals[h].clone()
        })
        .collect();
    let x = big.round(&bt, &vals);
    // minimal polynomial of y must vanish at x
    let mp = small.minimal_polynomial(y);
    let mut acc = field.zero();
    for c in mp.iter().rev() {
        acc = field.add(&field.mul(&acc, &x), &field.from_rational(c));
    }
    if !acc.is_zero() {
        return Err(Error::LevelMismatch("element is not in the subfield".into()));
    }
    Ok(x)
}

/// Fundamental unit of a real quadratic field, greater than 1 at the first
/// embedding: the cyclotomic unit eta^{1 - sigma} = +-eps^n with all
/// l-th roots extracted for primes l up to the bound on |n|.
pub fn quadratic_fundamental_unit(k: &AbelianField) -> Result<FieldElement> {
    if k.degree() != 2 {
        return Err(Error::Unsupported("not a quadratic field".into()));
    }
    let ctx = ProductContext::new(k, &[vec![0]])?;
    let eta = CycloProduct::eta(&[0]);
    let u = eta.mul(&eta.act(&ctx, 1).pow(-1));
    let mut x = ctx.reconstruct(&u)?;
    let co = Coordinatizer::new(k);
    let d = k.discriminant().to_f64();
    let min_log = ((1.0 + d.sqrt()) / 2.0).ln();
    let n_bound = (log_embeddings(&co, &x)[0].abs() / min_log).floor() as u64 + 1;
    for l in primes_up_to(n_bound) {
        loop {
            if let Some(y) = pth_root(&co, &x, l) {
                x = y;
            } else if l == 2 {
                match pth_root(&co, &k.neg(&x), 2) {
                    Some(y) => x = y,
                    None => break,
                }
            } else {
                break;
            }
        }
    }
    normalize_unit(&co, &x)
}

/// The representative of {+-x, +-1/x} that exceeds 1 at embedding 0.
fn normalize_unit(co: &Coordinatizer, x: &FieldElement) -> Result<FieldElement> {
    let field = co.field();
    let table = co.table(co.prec_for(x));
    let v = table.eval(0, x);
    let mut y = x.clone();
    if v.clone().abs() < 1 {
        y = field.inv(&y).ok_or_else(|| Error::DependentInput("zero unit".into()))?;
    }
    if v.is_sign_negative() {
        y = field.neg(&y);
    }
    Ok(y)
}

/// A basis of O_L^× modulo +-1.
#[derive(Clone, Debug)]
pub struct UnitGroup {
    pub field: AbelianField,
    pub basis: Vec<FieldElement>,
}

/// Unit group of a multiquadratic field (every character of order <= 2):
/// fundamental units of the quadratic subfields, then 2-saturation, which
/// is complete because the subfield units have 2-power index.
pub fn unit_group(co: &Coordinatizer) -> Result<UnitGroup> {
    let field = co.field().clone();
    let chars = field.characters();
    if chars.iter().any(|c| c.order() > 2) {
        return Err(Error::Unsupported(
            "unit groups are implemented for multiquadratic fields only".into(),
        ));
    }
    if field.degree() == 1 {
        return Ok(UnitGroup { field, basis: Vec::new() });
    }
    if field.degree() == 2 {
        let e = quadratic_fundamental_unit(&field)?;
        return Ok(UnitGroup { field, basis: vec![e] });
    }
    let mut basis = Vec::new();
    for c in chars.iter().filter(|c| !c.is_trivial()) {
        let k = AbelianField::real_quadratic(c.conductor() as i64)?;
        let e = quadratic_fundamental_unit(&k)?;
        basis.push(embed_from(&k, &e, co)?);
    }
    let sat = p_saturate(co, &basis, 2)?;
    let basis = sat
        .basis
        .iter()
        .map(|u| normalize_unit(co, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitGroup { field, basis })
}

impl UnitGroup {
    /// |det(log|u_i|_{g_j})| over the first n - 1 embeddings.
    pub fn regulator(&self, co: &Coordinatizer, prec: u32) -> Float {
        let k = self.basis.len();
        if k == 0 {
            return Float::with_val(prec, 1);
        }
        let rows: Vec<Vec<Float>> = self
            .basis
            .iter()
            .map(|u| {
                let t = co.table(co.prec_for(u).max(prec));
                (0..k)
                    .map(|g| Float::with_val(prec, t.eval(g, u).abs_ref()).ln())
                    .collect()
            })
            .collect();
        det_float(rows).abs()
    }

    /// Integer matrix A with sigma_g(u_i) = +- prod_j u_j^{A_ij}.
    pub fn galois_matrix(&self, co: &Coordinatizer, g: usize) -> Result<Vec<Vec<i64>>> {
        let k = self.basis.len();
        let logs: Vec<Vec<f64>> = self.basis.iter().map(|u| log_embeddings(co, u)[..k].to_vec()).collect();
        // columns of logs^T: solve a * logs = log(sigma u)
        let lt: Vec<Vec<f64>> = (0..k).map(|j| (0..k).map(|i| logs[i][j]).collect()).collect();
        let mut out = Vec::with_capacity(k);
        for u in &self.basis {
            let su = self.field.act(g, u);
            let target = log_embeddings(co, &su)[..k].to_vec();
            let a = solve_f64(&lt, &target).ok_or_else(|| Error::DependentInput("singular unit logs".into()))?;
            let row: Vec<i64> = a.iter().map(|x| x.round() as i64).collect();
            let mut prod = self.field.one();
            for (b, &e) in self.basis.iter().zip(&row) {
                prod = self.field.mul(&prod, &self.field.pow(b, e).unwrap());
            }
            let ok = prod == su || self.field.neg(&prod) == su;
            if !ok {
                return Err(Error::RegulatorMismatch("Galois action is not integral on the unit basis".into()));
            }
            out.push(row);
        }
        Ok(out)
    }

    pub fn element(&self, exps: &[Integer]) -> FieldElement {
        let mut x = self.field.one();
        for (b, e) in self.basis.iter().zip(exps) {
            if *e != 0 {
                x = self.field.mul(&x, &self.field.pow(b, e.to_i64().expect("small exponent")).unwrap());
            }
        }
        x
    }
}

/// A Z_p-basis of (O_L^× ⊗ Z_p)^chi, with coordinates in the full unit
/// basis and its saturation certificate.
#[derive(Clone, Debug)]
pub struct UnitChiLattice {
    pub chi: FieldCharacter,
    pub p: u64,
    pub m: u32,
    pub basis: Vec<FieldElement>,
    pub coords: Vec<Vec<Integer>>,
    pub certificate: Saturation,
}

pub fn unit_chi_lattice(
    co: &Coordinatizer,
    units: &UnitGroup,
    chi: &FieldCharacter,
    p: u64,
    m: u32,
) -> Result<UnitChiLattice> {
    if p == 2 {
        return Err(Error::PEqualsTwo);
    }
    if chi.is_trivial() {
        return Err(Error::Unsupported("chi must be nontrivial".into()));
    }
    let d = chi.delta().len() as u64;
    if d % p == 0 {
        return Err(Error::NonInvertibleOrder { p, order: d });
    }
    let k = units.basis.len();
    let mats: Vec<(usize, Vec<Vec<i64>>)> = chi
        .delta()
        .iter()
        .map(|&g| Ok((g, units.galois_matrix(co, g)?)))
        .collect::<Result<_>>()?;
    let pm = p.pow(m);
    let coords: Vec<Vec<Integer>> = if chi.order() <= 2 {
        // integral eigenlattice {w : w A_g = chi(g) w}
        let mut stacked = vec![vec![Integer::new(); k * mats.len()]; k];
        for (b, (g, a)) in mats.iter().enumerate() {
            let c = chi.real_value(*g).unwrap();
            for i in 0..k {
                for j in 0..k {
                    stacked[i][b * k + j] = Integer::from(a[i][j] - if i == j { c } else { 0 });
                }
            }
        }
        let ker = left_kernel(&IntMatrix::from_rows(&stacked));
        if ker.is_empty() {
            Vec::new()
        } else {
            saturate_rows(&ker)
        }
    } else {
        // rows of the idempotent matrix, independent mod p
        let e = chi.idempotent(p, m)?;
        let mut em = vec![vec![0u64; k]; k];
        for (g, c) in &e {
            let a = &mats.iter().find(|(h, _)| h == g).unwrap().1;
            for i in 0..k {
                for j in 0..k {
                    let v = crate::exact_algebra::arith::reduce_i64(a[i][j], pm);
                    em[i][j] = (em[i][j] + mulmod(*c, v, pm)) % pm;
                }
            }
        }
        let mut red: Vec<Vec<u64>> = em.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
        let t: Vec<Vec<u64>> = (0..k).map(|j| (0..k).map(|i| red[i][j]).collect()).collect();
        red = t;
        let piv = crate::exact_algebra::modp::rref_mod(&mut red, p);
        piv.iter()
            .map(|&i| em[i].iter().map(|&x| Integer::from(x)).collect())
            .collect()
    };
    if coords.len() != chi.rank() {
        return Err(Error::RankMismatch {
            expected: chi.rank(),
            found: coords.len(),
        });
    }
    // e_chi-invariance mod p^m
    for (g, a) in &mats {
        let cv = chi.value_mod(*g, p, m)?.unwrap();
        for w in &coords {
            for j in 0..k {
                let mut s = Integer::new();
                for i in 0..k {
                    s += Integer::from(&w[i] * a[i][j]);
                }
                let lhs = crate::exact_algebra::arith::mod_integer(&s, pm);
                let rhs = mulmod(crate::exact_algebra::arith::mod_integer(&w[j], pm), cv, pm);
                if lhs != rhs {
                    return Err(Error::RankMismatch {
                        expected: chi.rank(),
                        found: 0,
                    });
                }
            }
        }
    }
    let basis: Vec<FieldElement> = coords.iter().map(|w| units.element(w)).collect();
    let certificate = if chi.order() <= 2 {
        let s = p_saturate(co, &basis, p)?;
        if s.exponent != 0 {
            return Err(Error::RankMismatch {
                expected: chi.rank(),
                found: coords.len(),
            });
        }
        s
    } else {
        Saturation {
            basis: basis.clone(),
            exponent: 0,
            certificate: Vec::new(),
        }
    };
    Ok(UnitChiLattice {
        chi: chi.clone(),
        p,
        m,
        basis,
        coords,
        certificate,
    })
}
