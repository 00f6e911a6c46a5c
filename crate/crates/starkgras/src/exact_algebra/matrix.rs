//! Dense exact integer and rational matrices.

use rug::{Integer, Rational};
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Integer>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![Integer::new(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.data[i * n + i] = Integer::from(1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Integer>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().cloned());
        }
        IntMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let conv: Vec<Vec<Integer>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Integer::from(x)).collect())
            .collect();
        if conv.is_empty() {
            return Self::zero(0, 0);
        }
        Self::from_rows(&conv)
    }

    pub fn diagonal(entries: &[Integer]) -> Self {
        let n = entries.len();
        let mut m = Self::zero(n, n);
        for (i, e) in entries.iter().enumerate() {
            m.data[i * n + i] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Integer {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Integer {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Integer) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Integer] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Integer> {
        self.row(i).to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vec<Integer> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Integer>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if *a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if *b != 0 {
                        let idx = i * other.cols + j;
                        out.data[idx] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Integer]) -> Vec<Integer> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Integer::new();
                for (a, b) in self.row(i).iter().zip(v) {
                    if *a != 0 && *b != 0 {
                        s += a * b;
                    }
                }
                s
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[Integer]) -> Vec<Integer> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![Integer::new(); self.cols];
        for (i, a) in v.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in self.row(i).iter().enumerate() {
                if *b != 0 {
                    out[j] += a * b;
                }
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] -= q * row[src]
    pub fn row_submul(&mut self, dst: usize, src: usize, q: &Integer) {
        if *q == 0 {
            return;
        }
        for j in 0..self.cols {
            let s = self.data[src * self.cols + j].clone();
            if s != 0 {
                self.data[dst * self.cols + j] -= q * s;
            }
        }
    }

    /// col[dst] -= q * col[src]
    pub fn col_submul(&mut self, dst: usize, src: usize, q: &Integer) {
        if *q == 0 {
            return;
        }
        for i in 0..self.rows {
            let s = self.data[i * self.cols + src].clone();
            if s != 0 {
                self.data[i * self.cols + dst] -= q * s;
            }
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let x = &mut self.data[i * self.cols + j];
            *x = -std::mem::take(x);
        }
    }

    pub fn push_row(&mut self, row: Vec<Integer>) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Integer {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Integer::from(1);
        }
        let mut a = self.clone();
        let mut sign = 1i32;
        let mut prev = Integer::from(1);
        for k in 0..n {
            if *a.get(k, k) == 0 {
                let Some(r) = (k + 1..n).find(|&r| *a.get(r, k) != 0) else {
                    return Integer::new();
                };
                a.swap_rows(k, r);
                sign = -sign;
            }
            let piv = a.get(k, k).clone();
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = Integer::from(&piv * a.get(i, j)) - Integer::from(a.get(i, k) * a.get(k, j));
                    a.set(i, j, v.div_exact(&prev));
                }
                a.set(i, k, Integer::new());
            }
            prev = piv;
        }
        let d = a.get(n - 1, n - 1).clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Rank over Q.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut r = 0;
        let mut prev = Integer::from(1);
        for c in 0..n {
            if r == m {
                break;
            }
            let Some(p) = (r..m).find(|&i| *a.get(i, c) != 0) else {
                continue;
            };
            a.swap_rows(r, p);
            let piv = a.get(r, c).clone();
            for i in r + 1..m {
                for j in c + 1..n {
                    let v = Integer::from(&piv * a.get(i, j)) - Integer::from(a.get(i, c) * a.get(r, j));
                    a.set(i, j, v.div_exact(&prev));
                }
                a.set(i, c, Integer::new());
            }
            prev = piv;
            r += 1;
        }
        r
    }
}

/// Solve `A x = b` over Q for square nonsingular `A`.
pub fn solve_rational(a: &IntMatrix, b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = a.row(i).iter().map(|x| Rational::from(x.clone())).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| m[i][c] != 0)?;
        m.swap(c, p);
        let inv = Rational::from(m[c][c].recip_ref());
        for j in c..=n {
            let v = Rational::from(&m[c][j] * &inv);
            m[c][j] = v;
        }
        for i in 0..n {
            if i != c && m[i][c] != 0 {
                let f = m[i][c].clone();
                for j in c..=n {
                    let v = Rational::from(&f * &m[c][j]);
                    m[i][j] -= v;
                }
            }
        }
    }
    Some(m.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

/// Inverse of a square integer matrix over Q, as (integer matrix, denominator).
pub fn inverse_rational(a: &IntMatrix) -> Option<(IntMatrix, Integer)> {
    let n = a.rows();
    let mut cols: Vec<Vec<Rational>> = Vec::with_capacity(n);
    // Solve column by column with a shared elimination.
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = a.row(i).iter().map(|x| Rational::from(x.clone())).collect();
            for j in 0..n {
                row.push(Rational::from(if i == j { 1 } else { 0 }));
            }
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| m[i][c] != 0)?;
        m.swap(c, p);
        let inv = Rational::from(m[c][c].recip_ref());
        for j in c..2 * n {
            let v = Rational::from(&m[c][j] * &inv);
            m[c][j] = v;
        }
        for i in 0..n {
            if i != c && m[i][c] != 0 {
                let f = m[i][c].clone();
                for j in c..2 * n {
                    let v = Rational::from(&f * &m[c][j]);
                    m[i][j] -= v;
                }
            }
        }
    }
    for j in 0..n {
        cols.push((0..n).map(|i| m[i][n + j].clone()).collect());
    }
    let mut den = Integer::from(1);
    for col in &cols {
        for x in col {
            den.lcm_mut(x.denom());
        }
    }
    let mut out = IntMatrix::zero(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            let v = Integer::from(x.numer() * Integer::from(&den / x.denom()));
            out.set(i, j, v);
        }
    }
    Some((out, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_rank() {
        let a = IntMatrix::from_i64(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 1]]);
        assert_eq!(a.det(), 2 * (3 - 2) - 0 + 1 * (1 - 3));
        assert_eq!(a.rank(), if a.det() == 0 { 2 } else { 3 });
        let b = IntMatrix::from_i64(&[vec![1, 2], vec![2, 4]]);
        assert_eq!(b.det(), 0);
        assert_eq!(b.rank(), 1);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = IntMatrix::from_i64(&[vec![2, 1], vec![1, 3]]);
        let (inv, den) = inverse_rational(&a).unwrap();
        let prod = a.mul(&inv);
        assert_eq!(prod, IntMatrix::diagonal(&[den.clone(), den]));
    }
}
