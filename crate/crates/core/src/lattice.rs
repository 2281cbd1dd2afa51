//! Rational lattice bases, lattice points and targets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::{self, Matrix, Scalar};

/// Default cap on `n` for anything that enumerates all `2^n` cosets.
pub const DEFAULT_DIM_CAP: usize = 14;

/// Default cap on the number of nodes visited by one enumeration.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// Size limits shared by the enumeration based routines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub dim_cap: usize,
    pub enum_cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            dim_cap: DEFAULT_DIM_CAP,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

/// Full-rank basis of a lattice in `Q^n`; column `j` is the basis vector `b_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    matrix: Matrix,
    inverse: Matrix,
    gram: Matrix,
    columns: Vec<Vec<Scalar>>,
}

impl LatticeBasis {
    /// Builds a basis from its columns. Fails on dependent columns.
    pub fn from_columns(columns: Vec<Vec<Scalar>>) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::Shape("a basis needs at least one vector".into()));
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Shape(format!("expected {n} vectors of length {n}")));
        }
        let matrix = Matrix::from_columns(&columns)?;
        let mut gram = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let g = rational::dot(&columns[i], &columns[j]);
                gram[(j, i)] = g.clone();
                gram[(i, j)] = g;
            }
        }
        if gram.determinant().is_zero() {
            return Err(Error::DependentBasis);
        }
        let inverse = matrix.inverse()?;
        Ok(LatticeBasis {
            matrix,
            inverse,
            gram,
            columns,
        })
    }

    /// Builds a basis from a row-major matrix whose columns are the basis vectors.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Shape("basis matrix must be square".into()));
        }
        let columns = (0..matrix.cols()).map(|j| matrix.column(j)).collect();
        Self::from_columns(columns)
    }

    /// The integer lattice `Z^n`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_matrix(Matrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn columns(&self) -> &[Vec<Scalar>] {
        &self.columns
    }

    /// Basis with every vector multiplied by `k`.
    pub fn scaled(&self, k: &Scalar) -> Result<LatticeBasis> {
        LatticeBasis::from_columns(self.columns.iter().map(|c| rational::scale(k, c)).collect())
    }

    /// Ambient coordinates `B a`.
    pub fn combine(&self, coeffs: &[i64]) -> Vec<Scalar> {
        self.matrix.mul_int_vec(coeffs)
    }

    pub fn point(&self, coeffs: Vec<i64>) -> LatticePoint {
        let coords = self.combine(&coeffs);
        LatticePoint { coeffs, coords }
    }

    pub fn origin(&self) -> LatticePoint {
        self.point(vec![0; self.dim()])
    }

    /// Coefficients of an ambient vector in this basis, `B^{-1} x`.
    pub fn coefficients(&self, x: &[Scalar]) -> Vec<Scalar> {
        self.inverse.mul_vec(x)
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    /// Returns the lattice point at `x`, or `None` when `x` is not in the lattice.
    pub fn lattice_point_at(&self, x: &[Scalar]) -> Result<Option<LatticePoint>> {
        let a = self.coefficients(x);
        if a.iter().any(|c| !c.is_integer()) {
            return Ok(None);
        }
        let coeffs = a
            .iter()
            .map(|c| i64::try_from(c.to_integer()).map_err(|_| Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(self.point(coeffs)))
    }

    /// Encoding length of the basis matrix.
    pub fn encoding_length(&self) -> u64 {
        rational::encoding_length(self.matrix.entries())
    }

    /// Least common multiple of the basis entry denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        rational::denominator_lcm(self.matrix.entries())
    }
}

/// A lattice vector, kept both as integer coefficients and ambient coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    coeffs: Vec<i64>,
    coords: Vec<Scalar>,
}

impl LatticePoint {
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.coords
    }

    /// `self + other` where `other` is given by coefficients and coordinates.
    pub fn offset(&self, coeffs: &[i64], coords: &[Scalar]) -> LatticePoint {
        LatticePoint {
            coeffs: self.coeffs.iter().zip(coeffs).map(|(a, b)| a + b).collect(),
            coords: rational::add(&self.coords, coords),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// A query point in `Q^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    pub coords: Vec<Scalar>,
}

impl Target {
    pub fn new(coords: Vec<Scalar>) -> Self {
        Target { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn encoding_length(&self) -> u64 {
        rational::encoding_length(&self.coords)
    }
}

/// Bit-size statistics for a (basis, target) instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingStats {
    pub bits_basis: u64,
    pub bits_target: u64,
    pub qbar: BigInt,
}

impl EncodingStats {
    pub fn new(basis: &LatticeBasis, target: &Target) -> Self {
        EncodingStats {
            bits_basis: basis.encoding_length(),
            bits_target: target.encoding_length(),
            qbar: qbar(basis, target),
        }
    }
}

/// Least `q` with `q L` and `q t` integral.
///
/// `q B` integral already forces `q L` integral, and the lcm of the reduced
/// entry denominators is the least such `q`.
pub fn qbar(basis: &LatticeBasis, target: &Target) -> BigInt {
    basis
        .denominator_lcm()
        .lcm(&rational::denominator_lcm(&target.coords))
}

/// The `2^n - 1` nonzero vectors of `{0,1}^n` in lexicographic order.
pub fn coset_reps_mod2(n: usize, dim_cap: usize) -> Result<Vec<Vec<i64>>> {
    if n > dim_cap || n >= 63 {
        return Err(Error::DimensionCap { n, cap: dim_cap });
    }
    Ok((1u64..(1u64 << n))
        .map(|mask| (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as i64).collect())
        .collect())
}

/// `sum ||v_i||^2` for linearly independent lattice vectors; the covering
/// radius satisfies `mu <= sqrt(sum) / 2`. Kept squared to stay rational.
pub fn covering_radius_upper(vectors: &[Vec<Scalar>]) -> Result<Scalar> {
    let n = vectors.first().map_or(0, Vec::len);
    if vectors.len() != n || n == 0 {
        return Err(Error::Shape("need n vectors of length n".into()));
    }
    if Matrix::from_columns(vectors)?.rank() < n {
        return Err(Error::DependentBasis);
    }
    Ok(vectors.iter().map(|v| rational::norm_sq(v)).sum())
}

/// Leading principal minors of the Gram matrix, all positive for a valid basis.
pub fn gram_minors(basis: &LatticeBasis) -> Vec<Scalar> {
    let n = basis.dim();
    (1..=n)
        .map(|k| {
            let rows = (0..k)
                .map(|i| (0..k).map(|j| basis.gram()[(i, j)].clone()).collect())
                .collect();
            Matrix::from_rows(rows).expect("square").determinant()
        })
        .collect()
}

/// `true` when `x` has only positive entries.
pub fn all_positive(xs: &[Scalar]) -> bool {
    xs.iter().all(Signed::is_positive)
}

/// Random rational in `[-num_bound, num_bound] / [1, den_bound]`.
pub fn random_scalar<R: Rng>(rng: &mut R, num_bound: i64, den_bound: i64) -> Scalar {
    let p = rng.random_range(-num_bound..=num_bound);
    let q = rng.random_range(1..=den_bound);
    rational::ratio(p, q)
}

/// Random full-rank basis with entries from [`random_scalar`]; dependent
/// draws are discarded.
pub fn random_rational_basis<R: Rng>(
    rng: &mut R,
    n: usize,
    num_bound: i64,
    den_bound: i64,
) -> Result<LatticeBasis> {
    if n == 0 || num_bound < 1 || den_bound < 1 {
        return Err(Error::Contract("need n >= 1 and positive bounds".into()));
    }
    loop {
        let cols = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| random_scalar(rng, num_bound, den_bound))
                    .collect()
            })
            .collect();
        match LatticeBasis::from_columns(cols) {
            Ok(b) => return Ok(b),
            Err(Error::DependentBasis) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Random target with entries from [`random_scalar`].
pub fn random_target<R: Rng>(rng: &mut R, n: usize, num_bound: i64, den_bound: i64) -> Target {
    Target::new(
        (0..n)
            .map(|_| random_scalar(rng, num_bound, den_bound))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn qbar_examples() {
        let z2 = LatticeBasis::identity(2).unwrap();
        assert_eq!(
            qbar(&z2, &Target::new(vec![ratio(1, 2), ratio(1, 3)])),
            BigInt::from(6)
        );
        assert_eq!(
            qbar(&z2, &Target::new(vec![int(4), int(-1)])),
            BigInt::from(1)
        );
        let b = LatticeBasis::from_matrix(
            Matrix::from_rows(vec![vec![int(1), ratio(1, 2)], vec![int(0), ratio(1, 2)]]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            qbar(&b, &Target::new(vec![ratio(1, 4), int(0)])),
            BigInt::from(4)
        );
    }

    #[test]
    fn coset_representatives() {
        assert_eq!(coset_reps_mod2(1, 14).unwrap(), vec![vec![1]]);
        assert_eq!(
            coset_reps_mod2(2, 14).unwrap(),
            vec![vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(coset_reps_mod2(3, 14).unwrap().len(), 7);
        assert!(matches!(
            coset_reps_mod2(15, 14),
            Err(Error::DimensionCap { n: 15, cap: 14 })
        ));
    }

    #[test]
    fn covering_radius_bound_examples() {
        let e = |n: usize| LatticeBasis::identity(n).unwrap().columns().to_vec();
        assert_eq!(covering_radius_upper(&e(4)).unwrap(), int(4));
        assert_eq!(
            covering_radius_upper(&[vec![ratio(5, 2)]]).unwrap(),
            ratio(25, 4)
        );
        let three = LatticeBasis::identity(2).unwrap().scaled(&int(3)).unwrap();
        assert_eq!(covering_radius_upper(three.columns()).unwrap(), int(18));
        let dep = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(matches!(
            covering_radius_upper(&dep),
            Err(Error::DependentBasis)
        ));
    }

    #[test]
    fn dependent_basis_rejected() {
        let r = LatticeBasis::from_columns(vec![vec![int(1), int(1)], vec![int(2), int(2)]]);
        assert!(matches!(r, Err(Error::DependentBasis)));
        assert!(LatticeBasis::from_columns(vec![]).is_err());
    }

    #[test]
    fn points_and_coefficients() {
        let b =
            LatticeBasis::from_columns(vec![vec![int(2), int(0)], vec![int(1), int(1)]]).unwrap();
        let p = b.point(vec![1, -1]);
        assert_eq!(p.coords(), &[int(1), int(-1)]);
        assert_eq!(b.lattice_point_at(&[int(1), int(-1)]).unwrap(), Some(p));
        assert_eq!(b.lattice_point_at(&[int(1), int(0)]).unwrap(), None);
        assert!(all_positive(&gram_minors(&b)));
    }

    #[test]
    fn random_bases_are_reproducible() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        let mut b = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        let x = random_rational_basis(&mut a, 4, 5, 3).unwrap();
        let y = random_rational_basis(&mut b, 4, 5, 3).unwrap();
        assert_eq!(x, y);
        assert!(x.denominator_lcm() <= BigInt::from(6));
        let t = random_target(&mut a, 4, 10, 64);
        assert_eq!(t.dim(), 4);
    }
}
