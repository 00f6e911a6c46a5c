//! Smith and Hermite normal forms, integer kernels and lattice indices.

use super::matrix::IntMatrix;
use rug::Integer;

/// `u * a * v = d` with `d` diagonal and `d[i] | d[i+1]`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    pub fn invariants(&self) -> Vec<Integer> {
        let k = self.d.rows().min(self.d.cols());
        (0..k).map(|i| self.d.get(i, i).clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariants().iter().filter(|x| **x != 0).count()
    }
}

pub fn smith_normal_form(a: &IntMatrix) -> Snf {
    let (d, u, v) = snf_core(a, true, true);
    Snf {
        d,
        u: u.unwrap(),
        v: v.unwrap(),
    }
}

/// SNF keeping only the right transform: `rowspace(a) * v = rowspace(d)`.
pub fn snf_right(a: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let (d, _, v) = snf_core(a, false, true);
    (d, v.unwrap())
}

pub fn snf_invariants(a: &IntMatrix) -> Vec<Integer> {
    let (d, _, _) = snf_core(a, false, false);
    let k = d.rows().min(d.cols());
    (0..k).map(|i| d.get(i, i).clone()).collect()
}

fn min_abs_nonzero(d: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..d.rows() {
        for j in t..d.cols() {
            let x = d.get(i, j);
            if *x != 0 {
                match best {
                    None => best = Some((i, j)),
                    Some((bi, bj)) => {
                        if x.cmp_abs(d.get(bi, bj)).is_lt() {
                            best = Some((i, j));
                        }
                    }
                }
                if x.cmp_abs(&Integer::from(1)).is_eq() {
                    return best;
                }
            }
        }
    }
    best
}

fn round_quotient(a: &Integer, b: &Integer) -> Integer {
    let (q, _r) = a.clone().div_rem_round(b.clone());
    q
}

fn snf_core(a: &IntMatrix, track_u: bool, track_v: bool) -> (IntMatrix, Option<IntMatrix>, Option<IntMatrix>) {
    let (m, n) = (a.rows(), a.cols());
    let mut d = a.clone();
    let mut u = track_u.then(|| IntMatrix::identity(m));
    let mut v = track_v.then(|| IntMatrix::identity(n));
    let kmax = m.min(n);
    let mut t = 0;
    while t < kmax {
        let Some((pi, pj)) = min_abs_nonzero(&d, t) else {
            break;
        };
        d.swap_rows(t, pi);
        if let Some(u) = u.as_mut() {
            u.swap_rows(t, pi);
        }
        d.swap_cols(t, pj);
        if let Some(v) = v.as_mut() {
            v.swap_cols(t, pj);
        }
        loop {
            // Clear row t and column t by rounded division.
            loop {
                let piv = d.get(t, t).clone();
                for i in t + 1..m {
                    if *d.get(i, t) != 0 {
                        let q = round_quotient(d.get(i, t), &piv);
                        d.row_submul(i, t, &q);
                        if let Some(u) = u.as_mut() {
                            u.row_submul(i, t, &q);
                        }
                    }
                }
                for j in t + 1..n {
                    if *d.get(t, j) != 0 {
                        let q = round_quotient(d.get(t, j), &piv);
                        d.col_submul(j, t, &q);
                        if let Some(v) = v.as_mut() {
                            v.col_submul(j, t, &q);
                        }
                    }
                }
                let mut best: Option<(usize, usize)> = None;
                let consider = |i: usize, j: usize, best: &mut Option<(usize, usize)>| {
                    let x = d.get(i, j);
                    if *x != 0 {
                        match *best {
                            None => *best = Some((i, j)),
                            Some((bi, bj)) if x.cmp_abs(d.get(bi, bj)).is_lt() => *best = Some((i, j)),
                            _ => {}
                        }
                    }
                };
                for i in t + 1..m {
                    consider(i, t, &mut best);
                }
                for j in t + 1..n {
                    consider(t, j, &mut best);
                }
                match best {
                    None => break,
                    Some((i, j)) => {
                        if j == t {
                            d.swap_rows(t, i);
                            if let Some(u) = u.as_mut() {
                                u.swap_rows(t, i);
                            }
                        } else {
                            d.swap_cols(t, j);
                            if let Some(v) = v.as_mut() {
                                v.swap_cols(t, j);
                            }
                        }
                    }
                }
            }
            // Divisibility of the remaining block by the pivot.
            let piv = d.get(t, t).clone();
            let mut bad_row = None;
            'scan: for i in t + 1..m {
                for j in t + 1..n {
                    if !d.get(i, j).is_divisible(&piv) {
                        bad_row = Some(i);
                        break 'scan;
                    }
                }
            }
            match bad_row {
                None => break,
                Some(i) => {
                    let minus_one = Integer::from(-1);
                    d.row_submul(t, i, &minus_one);
                    if let Some(u) = u.as_mut() {
                        u.row_submul(t, i, &minus_one);
                    }
                }
            }
        }
        if *d.get(t, t) < 0 {
            d.negate_row(t);
            if let Some(u) = u.as_mut() {
                u.negate_row(t);
            }
        }
        t += 1;
    }
    (d, u, v)
}

/// Row-style Hermite normal form of the lattice spanned by `gens` in Z^n.
/// Returns the nonzero rows: upper echelon, positive pivots, entries above
/// each pivot reduced into `[0, pivot)`.
pub fn hnf_rows(gens: &[Vec<Integer>], n: usize) -> Vec<Vec<Integer>> {
    let (h, _) = hnf_with_transform(gens, n, false);
    h
}

/// HNF together with a basis of the left kernel (integer relations among the
/// generators) when `want_kernel` is set.
pub fn hnf_with_transform(gens: &[Vec<Integer>], n: usize, want_kernel: bool) -> (Vec<Vec<Integer>>, Vec<Vec<Integer>>) {
    let k = gens.len();
    let mut rows: Vec<Vec<Integer>> = gens.to_vec();
    let mut tr: Vec<Vec<Integer>> = if want_kernel {
        (0..k)
            .map(|i| (0..k).map(|j| Integer::from((i == j) as i32)).collect())
            .collect()
    } else {
        Vec::new()
    };
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..n {
        if r == k {
            break;
        }
        loop {
            // Find the smallest nonzero entry in column c among rows r..
            let mut best: Option<usize> = None;
            for i in r..k {
                if rows[i][c] != 0 {
                    match best {
                        None => best = Some(i),
                        Some(b) if rows[i][c].cmp_abs(&rows[b][c]).is_lt() => best = Some(i),
                        _ => {}
                    }
                }
            }
            let Some(b) = best else { break };
            rows.swap(r, b);
            if want_kernel {
                tr.swap(r, b);
            }
            let mut done = true;
            for i in r + 1..k {
                if rows[i][c] != 0 {
                    let (q, _) = rows[i][c].clone().div_rem_floor(rows[r][c].clone());
                    sub_scaled(&mut rows, i, r, &q);
                    if want_kernel {
                        sub_scaled(&mut tr, i, r, &q);
                    }
                    if rows[i][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if r < k && rows[r][c] != 0 {
            if rows[r][c] < 0 {
                for x in rows[r].iter_mut() {
                    *x = -std::mem::take(x);
                }
                if want_kernel {
                    for x in tr[r].iter_mut() {
                        *x = -std::mem::take(x);
                    }
                }
            }
            for i in 0..r {
                if rows[i][c] != 0 {
                    let (q, _) = rows[i][c].clone().div_rem_floor(rows[r][c].clone());
                    sub_scaled(&mut rows, i, r, &q);
                    if want_kernel {
                        sub_scaled(&mut tr, i, r, &q);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
    }
    let kernel = if want_kernel { tr[r..].to_vec() } else { Vec::new() };
    rows.truncate(r);
    (rows, kernel)
}

fn sub_scaled(rows: &mut [Vec<Integer>], dst: usize, src: usize, q: &Integer) {
    if *q == 0 {
        return;
    }
    let (a, b) = if dst < src {
        let (lo, hi) = rows.split_at_mut(src);
        (&mut lo[dst], &hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(dst);
        (&mut hi[0], &lo[src])
    };
    for (x, y) in a.iter_mut().zip(b.iter()) {
        if *y != 0 {
            *x -= q * y;
        }
    }
}

/// Basis of {x in Z^k : x * A = 0} for the k x n matrix `a`.
pub fn left_kernel(a: &IntMatrix) -> Vec<Vec<Integer>> {
    let (_, ker) = hnf_with_transform(&a.to_rows(), a.cols(), true);
    ker
}

/// Basis of {y in Z^n : A y = 0}.
pub fn right_kernel(a: &IntMatrix) -> Vec<Vec<Integer>> {
    left_kernel(&a.transpose())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeIndex {
    Finite(Integer),
    Infinite,
}

impl LatticeIndex {
    pub fn finite(&self) -> Option<&Integer> {
        match self {
            LatticeIndex::Finite(x) => Some(x),
            LatticeIndex::Infinite => None,
        }
    }
}

/// |Z^n / span(generators)|, or `Infinite` when the span has rank < n.
pub fn lattice_index(ambient_rank: usize, generators: &[Vec<Integer>]) -> LatticeIndex {
    if ambient_rank == 0 {
        return LatticeIndex::Finite(Integer::from(1));
    }
    if generators.is_empty() {
        return LatticeIndex::Infinite;
    }
    let h = hnf_rows(generators, ambient_rank);
    if h.len() < ambient_rank {
        return LatticeIndex::Infinite;
    }
    // Full rank: the HNF is square upper triangular.
    let mut prod = Integer::from(1);
    for (i, row) in h.iter().enumerate() {
        prod *= &row[i];
    }
    LatticeIndex::Finite(prod)
}

/// Saturation of the row lattice of `rows` inside Z^n: (Q-span) ∩ Z^n.
/// The rows must be linearly independent.
pub fn saturate_rows(rows: &[Vec<Integer>]) -> Vec<Vec<Integer>> {
    let k = rows.len();
    if k == 0 {
        return Vec::new();
    }
    let n = rows[0].len();
    let cols: Vec<Vec<Integer>> = (0..n).map(|j| (0..k).map(|i| rows[i][j].clone()).collect()).collect();
    let b = hnf_rows(&cols, k);
    assert_eq!(b.len(), k, "rows must be independent");
    // `b` lists a basis of the column lattice as rows; in column form the
    // basis matrix is its transpose, and the saturation is (B^T)^{-1} R.
    let bt = IntMatrix::from_rows(&b).transpose();
    let (inv, den) = super::matrix::inverse_rational(&bt).expect("nonsingular");
    let r = IntMatrix::from_rows(rows);
    let prod = inv.mul(&r);
    (0..k)
        .map(|i| prod.row(i).iter().map(|x| Integer::from(x.div_exact_ref(&den))).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &IntMatrix) -> Snf {
        let s = smith_normal_form(a);
        assert_eq!(s.u.mul(a).mul(&s.v), s.d);
        assert_eq!(s.u.det().abs(), 1);
        assert_eq!(s.v.det().abs(), 1);
        let inv = s.invariants();
        for w in inv.windows(2) {
            if w[1] != 0 {
                assert!(w[1].is_divisible(&w[0]));
            } else {
                assert!(w[1] == 0);
            }
        }
        s
    }

    #[test]
    fn coprime_diagonal() {
        let a = IntMatrix::from_i64(&[vec![2, 0], vec![0, 3]]);
        let s = check(&a);
        assert_eq!(s.invariants(), vec![Integer::from(1), Integer::from(6)]);
    }

    #[test]
    fn zero_matrix_identity_transforms() {
        let a = IntMatrix::zero(3, 2);
        let s = check(&a);
        assert!(s.d.is_zero());
        assert_eq!(s.u, IntMatrix::identity(3));
        assert_eq!(s.v, IntMatrix::identity(2));
    }

    #[test]
    fn index_examples() {
        let g = vec![
            vec![Integer::from(2), Integer::from(0)],
            vec![Integer::from(1), Integer::from(3)],
        ];
        assert_eq!(lattice_index(2, &g), LatticeIndex::Finite(Integer::from(6)));
        assert_eq!(lattice_index(2, &[vec![Integer::from(1), Integer::from(0)]]), LatticeIndex::Infinite);
    }

    #[test]
    fn kernel_and_saturation() {
        let a = IntMatrix::from_i64(&[vec![1, 2], vec![2, 4], vec![0, 1]]);
        let ker = left_kernel(&a);
        assert_eq!(ker.len(), 1);
        let prod = IntMatrix::from_rows(&ker).mul(&a);
        assert!(prod.is_zero());
        let sat = saturate_rows(&[vec![Integer::from(2), Integer::from(4), Integer::from(6)]]);
        assert_eq!(sat, vec![vec![Integer::from(1), Integer::from(2), Integer::from(3)]]);
        // span{(1,1,0),(1,-1,0)} saturates to span{e1, e2}
        let rows = vec![
            vec![Integer::from(1), Integer::from(1), Integer::from(0)],
            vec![Integer::from(1), Integer::from(-1), Integer::from(0)],
        ];
        let sat = saturate_rows(&rows);
        assert_eq!(lattice_index(2, &sat.iter().map(|r| r[..2].to_vec()).collect::<Vec<_>>()), LatticeIndex::Finite(Integer::from(1)));
    }
}
