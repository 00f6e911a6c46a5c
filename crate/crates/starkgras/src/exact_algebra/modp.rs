//! Linear algebra over Z/p and Z/p^m with machine-word entries.

use super::arith::{invmod, mulmod};

pub type ModMatrix = Vec<Vec<u64>>;

fn add(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

fn sub(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

/// Reduced row echelon form over F_p in place; returns pivot columns.
pub fn rref_mod(a: &mut ModMatrix, p: u64) -> Vec<usize> {
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| a[i][c] % p != 0) else {
            continue;
        };
        a.swap(r, piv);
        let inv = invmod(a[r][c] % p, p).expect("nonzero mod prime");
        for x in a[r].iter_mut() {
            *x = mulmod(*x % p, inv, p);
        }
        for i in 0..rows {
            if i != r && a[i][c] % p != 0 {
                let f = a[i][c] % p;
                for j in 0..cols {
                    let t = mulmod(f, a[r][j], p);
                    a[i][j] = sub(a[i][j] % p, t, p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_mod(a: &ModMatrix, p: u64) -> usize {
    let mut b = a.clone();
    rref_mod(&mut b, p).len()
}

/// Basis of {x : A x = 0} over F_p, for A with `cols` columns.
pub fn kernel_mod(a: &ModMatrix, cols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut b = a.clone();
    let pivots = if b.is_empty() { Vec::new() } else { rref_mod(&mut b, p) };
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; cols];
        v[free] = 1;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = (p - b[r][free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

/// Solve A x = b over F_p for square nonsingular A.
pub fn solve_mod(a: &ModMatrix, b: &[u64], p: u64) -> Option<Vec<u64>> {
    let n = a.len();
    let mut aug: ModMatrix = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r: Vec<u64> = row.iter().map(|x| x % p).collect();
            r.push(bi % p);
            r
        })
        .collect();
    let piv = rref_mod(&mut aug, p);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.iter().map(|r| r[n]).collect())
}

pub fn inverse_mod(a: &ModMatrix, p: u64) -> Option<ModMatrix> {
    let n = a.len();
    let mut aug: ModMatrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<u64> = row.iter().map(|x| x % p).collect();
            r.extend((0..n).map(|j| (i == j) as u64));
            r
        })
        .collect();
    let piv = rref_mod(&mut aug, p);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_mul_mod(a: &ModMatrix, b: &ModMatrix, m: u64) -> ModMatrix {
    let n = a.len();
    let k = b.len();
    let c = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![0u64; c]; n];
    for i in 0..n {
        for t in 0..k {
            let x = a[i][t] % m;
            if x == 0 {
                continue;
            }
            for j in 0..c {
                out[i][j] = add(out[i][j], mulmod(x, b[t][j], m), m);
            }
        }
    }
    out
}

pub fn mat_vec_mod(a: &ModMatrix, v: &[u64], m: u64) -> Vec<u64> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(0u64, |acc, (&x, &y)| add(acc, mulmod(x, y, m), m)))
        .collect()
}

/// Inverse modulo p^m by Newton lifting from the inverse mod p.
pub fn inverse_mod_pm(a: &ModMatrix, p: u64, m: u32) -> Option<ModMatrix> {
    let n = a.len();
    let modulus = p.pow(m);
    let mut x = inverse_mod(a, p)?;
    let mut prec = 1u32;
    while prec < m {
        prec = (2 * prec).min(m);
        let md = p.pow(prec);
        // X <- X (2I - A X)
        let ax = mat_mul_mod(a, &x, md);
        let mut t = vec![vec![0u64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let two_i = if i == j { 2 % md } else { 0 };
                t[i][j] = sub(two_i, ax[i][j] % md, md);
            }
        }
        x = mat_mul_mod(&x, &t, md);
    }
    Some(x.into_iter().map(|r| r.into_iter().map(|v| v % modulus).collect()).collect())
}

/// Determinant modulo p^m (Gaussian elimination with unit pivots, falling
/// back to zero-divisor aware elimination by valuation).
pub fn det_mod_pm(a: &ModMatrix, p: u64, m: u32) -> u64 {
    let modulus = p.pow(m);
    let n = a.len();
    let mut b: ModMatrix = a.iter().map(|r| r.iter().map(|x| x % modulus).collect()).collect();
    let mut det = 1u64;
    for c in 0..n {
        // pivot of minimal valuation
        let vals = |x: u64| -> u32 {
            if x == 0 {
                m
            } else {
                super::arith::vp_u64(x, p).min(m)
            }
        };
        let Some(piv) = (c..n).min_by_key(|&i| vals(b[i][c])) else {
            return 0;
        };
        if b[piv][c] == 0 {
            return 0;
        }
        if piv != c {
            b.swap(piv, c);
            det = (modulus - det) % modulus;
        }
        let v = vals(b[c][c]);
        if v > 0 {
            // all remaining entries in column divisible by p^v: the determinant
            // picks up p^v times the determinant of the scaled system
            let pv = p.pow(v);
            let unit = b[c][c] / pv;
            let inv = invmod(unit % modulus, modulus).expect("unit");
            det = mulmod(det, b[c][c], modulus);
            for i in c + 1..n {
                if b[i][c] != 0 {
                    let f = mulmod(b[i][c] / pv, inv, modulus);
                    for j in c..n {
                        let t = mulmod(f, b[c][j], modulus);
                        b[i][j] = sub(b[i][j], t, modulus);
                    }
                }
            }
            continue;
        }
        let inv = invmod(b[c][c], modulus).expect("unit pivot");
        det = mulmod(det, b[c][c], modulus);
        for i in c + 1..n {
            if b[i][c] != 0 {
                let f = mulmod(b[i][c], inv, modulus);
                for j in c..n {
                    let t = mulmod(f, b[c][j], modulus);
                    b[i][j] = sub(b[i][j], t, modulus);
                }
            }
        }
    }
    det
}

/// Some solution of A x = b over Z/p^m (any shape), by elimination with
/// pivots of minimal valuation; None when the system is inconsistent.
pub fn solve_mod_pm(a: &ModMatrix, b: &[u64], p: u64, m: u32) -> Option<Vec<u64>> {
    let md = p.pow(m);
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut aug: ModMatrix = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r: Vec<u64> = row.iter().map(|x| x % md).collect();
            r.push(bi % md);
            r
        })
        .collect();
    let val = |x: u64| if x == 0 { m } else { super::arith::vp_u64(x, p).min(m) };
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in rank..rows {
            for j in rank..cols {
                let v = val(aug[i][perm[j]]);
                if v < m && best.map_or(true, |(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
        }
        let Some((v, i, j)) = best else { break };
        aug.swap(rank, i);
        perm.swap(rank, j);
        let pc = perm[rank];
        let pv = p.pow(v);
        let unit_inv = invmod(aug[rank][pc] / pv % md, md).expect("unit part");
        for r in rank + 1..rows {
            let e = aug[r][pc];
            if e == 0 {
                continue;
            }
            // e is divisible by p^v since the pivot has minimal valuation
            let f = mulmod(e / pv, unit_inv, md);
            for c in 0..=cols {
                let t = mulmod(f, aug[rank][c], md);
                aug[r][c] = sub(aug[r][c], t, md);
            }
        }
        rank += 1;
    }
    for row in aug.iter().skip(rank) {
        if row[cols] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; cols];
    for r in (0..rank).rev() {
        let pc = perm[r];
        let mut rhs = aug[r][cols];
        for j in r + 1..cols {
            let c = perm[j];
            rhs = sub(rhs, mulmod(aug[r][c], x[c], md), md);
        }
        let v = val(aug[r][pc]);
        let pv = p.pow(v);
        if rhs % pv != 0 {
            return None;
        }
        let unit_inv = invmod(aug[r][pc] / pv % md, md).expect("unit part");
        x[pc] = mulmod(rhs / pv, unit_inv, md);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_and_inverse() {
        let a = vec![vec![1, 2, 3], vec![2, 4, 6]];
        let k = kernel_mod(&a, 3, 7);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(mat_vec_mod(&a, v, 7).iter().all(|&x| x == 0));
        }
        let b = vec![vec![2, 1], vec![1, 1]];
        let inv = inverse_mod_pm(&b, 5, 3).unwrap();
        let prod = mat_mul_mod(&b, &inv, 125);
        assert_eq!(prod, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(det_mod_pm(&b, 5, 3), 1);
        assert_eq!(det_mod_pm(&vec![vec![5, 0], vec![0, 3]], 5, 2), 15);
    }
    #[test]
    fn solve_mod_prime_power_matches_enumeration() {
        // all 2x2 and 3x2 systems over Z/9 from a fixed stream, against brute force
        let (p, m, md) = (3u64, 2u32, 9u64);
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % md
        };
        for rows in [2usize, 3] {
            for _ in 0..300 {
                let a: ModMatrix = (0..rows).map(|_| (0..2).map(|_| next() * if next() < 3 { 3 } else { 1 } % md).collect()).collect();
                let b: Vec<u64> = (0..rows).map(|_| next()).collect();
                let solvable = (0..md).any(|x| (0..md).any(|y| mat_vec_mod(&a, &[x, y], md) == b));
                match solve_mod_pm(&a, &b, p, m) {
                    Some(x) => assert_eq!(mat_vec_mod(&a, &x, md), b, "{a:?} {b:?}"),
                    None => assert!(!solvable, "{a:?} {b:?}"),
                }
            }
        }
        assert!(solve_mod_pm(&vec![vec![3, 0]], &[1], 3, 2).is_none());
        assert_eq!(solve_mod_pm(&vec![vec![3, 0]], &[6], 3, 2).map(|x| x[0] % 3), Some(2));
    }
}
