//! Multiprecision real and complex helpers on top of MPFR floats.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Working precision in bits for `digits` decimal digits plus guard bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 32
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn from_integer(prec: u32, x: &Integer) -> Float {
    Float::with_val(prec, x)
}

pub fn from_rational(prec: u32, x: &Rational) -> Float {
    Float::with_val(prec, x)
}

/// 10^(-k) at the given precision.
pub fn ten_pow_neg(prec: u32, k: i32) -> Float {
    Float::with_val(prec, 10).pow(-k)
}

/// |a - b| <= 10^(-digits) * max(1, |b|).
pub fn agree(a: &Float, b: &Float, digits: i32) -> bool {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    let scale = Float::with_val(prec, b.abs_ref()).max(&Float::with_val(prec, 1));
    diff <= ten_pow_neg(prec, digits) * scale
}

/// Relative residual |a - b| / |b|.
pub fn relative_residual(a: &Float, b: &Float) -> Float {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    diff / Float::with_val(prec, b.abs_ref())
}

/// Number of decimal digits to which a and b agree (relative), capped.
pub fn agreeing_digits(a: &Float, b: &Float) -> f64 {
    let r = relative_residual(a, b);
    if r.is_zero() {
        return f64::INFINITY;
    }
    -r.to_f64().log10()
}

/// Recognize a real number as a rational with denominator at most `max_den`
/// via continued fractions; the candidate must reproduce `x` to within
/// 10^-(digits - guard) relative.
pub fn recognize_rational(x: &Float, max_den: &Integer, digits: u32, guard: u32) -> Option<Rational> {
    let prec = x.prec();
    let tol_digits = digits as i32 - guard as i32;
    let mut y = x.clone();
    let (mut p0, mut q0) = (Integer::from(0), Integer::from(1));
    let (mut p1, mut q1) = (Integer::from(1), Integer::from(0));
    for _ in 0..200 {
        let a = y.to_integer_round(rug::float::Round::Down).map(|(i, _)| i)?;
        let p2 = Integer::from(&a * &p1) + &p0;
        let q2 = Integer::from(&a * &q1) + &q0;
        if q2 > *max_den {
            return None;
        }
        let cand = Rational::from((p2.clone(), q2.clone()));
        let val = from_rational(prec, &cand);
        if agree(&val, x, tol_digits) {
            return Some(cand);
        }
        let frac = Float::with_val(prec, &y - &a);
        if frac.is_zero() {
            return None;
        }
        y = Float::with_val(prec, frac.recip_ref());
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

/// Nearest integer, if `x` is within `tol` of it.
pub fn round_to_integer(x: &Float, tol: &Float) -> Option<Integer> {
    let (n, _) = x.to_integer_round(rug::float::Round::Nearest)?;
    let diff = Float::with_val(x.prec(), x - &n).abs();
    (diff <= *tol).then_some(n)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det_float(mut a: Vec<Vec<Float>>) -> Float {
    let n = a.len();
    let prec = a.first().and_then(|r| r.first()).map_or(64, |x| x.prec());
    let mut det = Float::with_val(prec, 1);
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].clone().abs().partial_cmp(&a[j][c].clone().abs()).unwrap())
            .unwrap();
        if a[piv][c].is_zero() {
            return Float::new(prec);
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= &a[c][c];
        for i in c + 1..n {
            let f = Float::with_val(prec, &a[i][c] / &a[c][c]);
            for j in c..n {
                let t = Float::with_val(prec, &f * &a[c][j]);
                a[i][j] -= t;
            }
        }
    }
    det
}

/// Solve A x = b in double precision; None when A is numerically singular.
pub fn solve_f64(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &x)| {
        let mut r = r.clone();
        r.push(x);
        r
    }).collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())?;
        if m[piv][c].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(piv, c);
        for i in 0..n {
            if i != c {
                let f = m[i][c] / m[c][c];
                for j in c..=n {
                    m[i][j] -= f * m[c][j];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Numerical rank of the rows, with a relative tolerance.
pub fn rank_f64(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut m = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let piv = (r..m.len()).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap()).unwrap();
        if m[piv][c].abs() <= tol * scale {
            continue;
        }
        m.swap(piv, r);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            for j in c..cols {
                m[i][j] -= f * m[r][j];
            }
        }
        r += 1;
    }
    r
}

/// A complex number as a pair of floats.
#[derive(Clone, Debug)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn zero(prec: u32) -> Self {
        Complex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn real(x: Float) -> Self {
        let prec = x.prec();
        Complex {
            re: x,
            im: Float::new(prec),
        }
    }

    /// exp(2 pi i * num / den)
    pub fn root_of_unity(prec: u32, num: i64, den: u64) -> Self {
        let angle = Float::with_val(prec, 2 * num) * pi(prec) / den;
        let (s, c) = angle.sin_cos(Float::new(prec));
        Complex { re: c, im: s }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex {
            re: Float::with_val(self.prec(), &self.re + &o.re),
            im: Float::with_val(self.prec(), &self.im + &o.im),
        }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex {
            re: Float::with_val(self.prec(), &self.re - &o.re),
            im: Float::with_val(self.prec(), &self.im - &o.im),
        }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        let prec = self.prec();
        let re = Float::with_val(prec, &self.re * &o.re) - Float::with_val(prec, &self.im * &o.im);
        let im = Float::with_val(prec, &self.re * &o.im) + Float::with_val(prec, &self.im * &o.re);
        Complex { re, im }
    }

    pub fn scale(&self, x: &Float) -> Complex {
        Complex {
            re: Float::with_val(self.prec(), &self.re * x),
            im: Float::with_val(self.prec(), &self.im * x),
        }
    }

    pub fn conj(&self) -> Complex {
        Complex {
            re: self.re.clone(),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }

    pub fn abs(&self) -> Float {
        let prec = self.prec();
        let s = Float::with_val(prec, self.re.square_ref()) + Float::with_val(prec, self.im.square_ref());
        s.sqrt()
    }

    pub fn div(&self, o: &Complex) -> Complex {
        let prec = self.prec();
        let den = Float::with_val(prec, o.re.square_ref()) + Float::with_val(prec, o.im.square_ref());
        let num = self.mul(&o.conj());
        Complex {
            re: num.re / &den,
            im: num.im / &den,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_simple_fractions() {
        let prec = bits_for_digits(60);
        let x = Float::with_val(prec, -22) / 7;
        let r = recognize_rational(&x, &Integer::from(10u64.pow(12)), 60, 10).unwrap();
        assert_eq!(r, Rational::from((-22, 7)));
        let sqrt2 = Float::with_val(prec, 2).sqrt();
        assert!(recognize_rational(&sqrt2, &Integer::from(10u64.pow(12)), 60, 10).is_none());
    }
}
