//! Exact rational scalars and the small amount of vector algebra the rest of
//! the crate needs.
//!
//! Every geometric predicate in this crate is decided over [`Scalar`]. Floats
//! only show up in samplers and in enumeration pruning, and never decide an
//! answer on their own.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision rational, always kept in lowest terms with a
/// positive denominator.
pub type Scalar = BigRational;

/// Integer as a [`Scalar`].
pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

/// `p/q` as a [`Scalar`]. Panics on `q == 0`.
pub fn ratio(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p"`, `"p/q"` or a plain decimal such as `"-0.25"`.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Scalar::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole = whole.trim_start_matches(['-', '+']);
        let whole: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mut value = Scalar::from_integer(whole) + Scalar::new(digits, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Scalar::from_integer(p))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_scalar(x: &Scalar) -> String {
    x.to_string()
}

/// Bits needed to encode an integer: `1 + ceil(log2(|z| + 1))`.
pub fn encoding_length_int(z: &BigInt) -> u64 {
    // ceil(log2(m)) for m = |z|+1 >= 1 equals bits(m - 1), i.e. bits(|z|).
    1 + z.magnitude().bits()
}

/// Bits needed to encode a rational `p/q`: `<p> + <q>`.
pub fn encoding_length_scalar(x: &Scalar) -> u64 {
    encoding_length_int(x.numer()) + encoding_length_int(x.denom())
}

/// Sum of entry encoding lengths over any collection of scalars.
pub fn encoding_length<'a>(entries: impl IntoIterator<Item = &'a Scalar>) -> u64 {
    entries.into_iter().map(encoding_length_scalar).sum()
}

/// Least common multiple of the denominators, 1 for an empty input.
pub fn denominator_lcm<'a>(entries: impl IntoIterator<Item = &'a Scalar>) -> BigInt {
    entries
        .into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Nearest integer, ties to even.
pub fn round_half_even(x: &Scalar) -> BigInt {
    let floor = x.floor().to_integer();
    let frac = x - Scalar::from_integer(floor.clone());
    let half = ratio(1, 2);
    if frac < half {
        floor
    } else if frac > half {
        floor + 1
    } else if floor.is_even() {
        floor
    } else {
        floor + 1
    }
}

/// Lossy conversion for reporting and float-side pruning.
pub fn to_f64(x: &Scalar) -> f64 {
    if let (Some(p), Some(q)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if p.is_finite() && q.is_finite() && q != 0.0 {
            return p / q;
        }
    }
    // Very large numerator or denominator: shift both into range first.
    let pb = x.numer().bits() as i64;
    let qb = x.denom().bits() as i64;
    let shift_p = (pb - 60).max(0) as usize;
    let shift_q = (qb - 60).max(0) as usize;
    let p = (x.numer() >> shift_p).to_f64().unwrap_or(0.0);
    let q = (x.denom() >> shift_q).to_f64().unwrap_or(1.0);
    p / q * 2f64.powi(shift_p as i32 - shift_q as i32)
}

/// Rounds `x` to the nearest multiple of `2^-bits` (ties to even).
pub fn to_dyadic(x: &Scalar, bits: u32) -> Scalar {
    let scale = BigInt::one() << bits as usize;
    let scaled = x * Scalar::from_integer(scale.clone());
    Scalar::new(round_half_even(&scaled), scale)
}

/// Exact dyadic value of a finite `f64`.
pub fn from_f64(x: f64) -> Scalar {
    Scalar::from_float(x).unwrap_or_else(Scalar::zero)
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Scalar::zero();
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        acc += x * y;
    }
    acc
}

pub fn norm_sq(a: &[Scalar]) -> Scalar {
    dot(a, a)
}

pub fn add(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(c: &Scalar, a: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|x| c * x).collect()
}

pub fn neg(a: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|x| -x).collect()
}

pub fn zeros(n: usize) -> Vec<Scalar> {
    vec![Scalar::zero(); n]
}

pub fn vec_to_f64(a: &[Scalar]) -> Vec<f64> {
    a.iter().map(to_f64).collect()
}

/// Compares `p1/q1` with `p2/q2` for positive `q1, q2` without dividing.
pub fn cmp_fractions(p1: &Scalar, q1: &Scalar, p2: &Scalar, q2: &Scalar) -> std::cmp::Ordering {
    debug_assert!(q1.is_positive() && q2.is_positive());
    (p1 * q2).cmp(&(p2 * q1))
}

/// Sign of a big integer as -1, 0 or 1.
pub fn sign_of(x: &BigInt) -> i8 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Dense rational matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Scalar>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|col| col.len() != r) {
            return Err(Error::Shape("columns of unequal length".into()));
        }
        let mut m = Matrix::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> impl Iterator<Item = &Scalar> {
        self.data.iter()
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self * v` for an integer vector.
    pub fn mul_int_vec(&self, v: &[i64]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Scalar::zero();
                for (x, &k) in self.row(i).iter().zip(v) {
                    if k != 0 && !x.is_zero() {
                        acc += x * Scalar::from_integer(BigInt::from(k));
                    }
                }
                acc
            })
            .collect()
    }

    /// Row-reduces a copy and returns the rank.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(pivot) = (rank..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(rank, pivot);
            for r in (rank + 1)..m.rows {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let f = &m[(r, col)] / &m[(rank, col)];
                for c in col..m.cols {
                    let delta = &f * &m[(rank, c)];
                    m[(r, c)] -= delta;
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    pub fn determinant(&self) -> Scalar {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Scalar::zero();
            };
            if pivot != col {
                m.swap_rows(col, pivot);
                det = -det;
            }
            det *= m[(col, col)].clone();
            for r in (col + 1)..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let f = &m[(r, col)] / &m[(col, col)];
                for c in col..n {
                    let delta = &f * &m[(col, c)];
                    m[(r, c)] -= delta;
                }
            }
        }
        det
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !m[(r, col)].is_zero())
                .ok_or(Error::Singular)?;
            m.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = m[(col, col)].clone();
            for c in 0..n {
                m[(col, c)] /= p.clone();
                inv[(col, c)] /= p.clone();
            }
            for r in 0..n {
                if r == col || m[(r, col)].is_zero() {
                    continue;
                }
                let f = m[(r, col)].clone();
                for c in 0..n {
                    let d1 = &f * &m[(col, c)];
                    m[(r, c)] -= d1;
                    let d2 = &f * &inv[(col, c)];
                    inv[(r, c)] -= d2;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Scalar;

    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_encoding_lengths() {
        assert_eq!(encoding_length_int(&BigInt::from(0)), 1);
        assert_eq!(encoding_length_int(&BigInt::from(3)), 3);
        assert_eq!(encoding_length_int(&BigInt::from(100)), 8);
        assert_eq!(encoding_length_int(&BigInt::from(-100)), 8);
        // Brute-force the closed form against floating log2 on small values.
        for z in 0i64..5000 {
            let expected = 1 + ((z as f64 + 1.0).log2().ceil() as u64);
            assert_eq!(encoding_length_int(&BigInt::from(z)), expected, "z = {z}");
        }
    }

    #[test]
    fn collection_encoding_lengths() {
        // 0/1 -> <0> + <1> = 1 + 2.
        assert_eq!(encoding_length(&[int(0)]), 3);
        // <1> + <2> + <3> + <1> = 2 + 3 + 3 + 2.
        assert_eq!(encoding_length(&[ratio(1, 2), int(3)]), 10);
        // Two entries 1/1 (4 bits each) and two entries 0/1 (3 bits each).
        let id = Matrix::identity(2);
        assert_eq!(encoding_length(id.entries()), 14);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_scalar("3").unwrap(), int(3));
        assert_eq!(parse_scalar("-6/4").unwrap(), ratio(-3, 2));
        assert_eq!(parse_scalar("0.3").unwrap(), ratio(3, 10));
        assert_eq!(parse_scalar("-0.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse_scalar("-.5").unwrap(), ratio(-1, 2));
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("abc").is_err());
        assert!(parse_scalar("").is_err());
        assert_eq!(format_scalar(&ratio(-3, 2)), "-3/2");
        assert_eq!(format_scalar(&int(7)), "7");
    }

    #[test]
    fn rounding_ties_go_to_even() {
        assert_eq!(round_half_even(&ratio(1, 2)), BigInt::from(0));
        assert_eq!(round_half_even(&ratio(3, 2)), BigInt::from(2));
        assert_eq!(round_half_even(&ratio(-1, 2)), BigInt::from(0));
        assert_eq!(round_half_even(&ratio(-3, 2)), BigInt::from(-2));
        assert_eq!(round_half_even(&ratio(7, 10)), BigInt::from(1));
        assert_eq!(round_half_even(&ratio(-7, 10)), BigInt::from(-1));
        assert_eq!(round_half_even(&ratio(3, 10)), BigInt::from(0));
    }

    #[test]
    fn inverse_and_rank() {
        let m = Matrix::from_rows(vec![vec![int(2), int(1)], vec![int(0), int(1)]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(inv[(0, 0)], ratio(1, 2));
        assert_eq!(inv[(0, 1)], ratio(-1, 2));
        assert_eq!(m.determinant(), int(2));
        assert_eq!(m.rank(), 2);
        let s = Matrix::from_rows(vec![vec![int(1), int(2)], vec![int(2), int(4)]]).unwrap();
        assert_eq!(s.rank(), 1);
        assert!(matches!(s.inverse(), Err(Error::Singular)));
    }

    #[test]
    fn dyadic_rounding_and_float_view() {
        let x = ratio(1, 3);
        let d = to_dyadic(&x, 8);
        assert_eq!(d.denom() % BigInt::from(2), BigInt::zero());
        assert!((to_f64(&d) - 1.0 / 3.0).abs() <= 1.0 / 512.0);
        assert_eq!(from_f64(0.5), ratio(1, 2));
        let huge = Scalar::new(BigInt::one() << 2000usize, (BigInt::one() << 1999usize) * 3);
        assert!((to_f64(&huge) - 2.0 / 3.0).abs() < 1e-12);
    }
}
