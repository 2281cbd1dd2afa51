//! Voronoi relevant vectors, the Voronoi norm and exact cell membership.

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{coset_reps_mod2, LatticeBasis, LatticePoint, Limits, Target};
use crate::oracle;
use crate::rational::{self, Scalar};

/// A lattice vector inducing a facet `{x : <x,v> = <v,v>/2}` of the cell.
#[derive(Clone, Debug)]
pub struct RelevantVector {
    coeffs: Vec<i64>,
    coords: Vec<Scalar>,
    half_norm_sq: Scalar,
    coords_f64: Vec<f64>,
    half_norm_sq_f64: f64,
}

impl RelevantVector {
    fn new(basis: &LatticeBasis, coeffs: Vec<i64>) -> Self {
        let coords = basis.combine(&coeffs);
        let half_norm_sq = rational::norm_sq(&coords) / rational::int(2);
        let coords_f64 = rational::vec_to_f64(&coords);
        let half_norm_sq_f64 = rational::to_f64(&half_norm_sq);
        RelevantVector {
            coeffs,
            coords,
            half_norm_sq,
            coords_f64,
            half_norm_sq_f64,
        }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.coords
    }

    /// `<v,v>/2`.
    pub fn half_norm_sq(&self) -> &Scalar {
        &self.half_norm_sq
    }

    pub fn norm_sq(&self) -> Scalar {
        &self.half_norm_sq * rational::int(2)
    }
}

impl PartialEq for RelevantVector {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && self.coords == other.coords
    }
}

impl Eq for RelevantVector {}

/// The preprocessing advice: the relevant vectors of a lattice plus the
/// sandwiching data derived from them.
#[derive(Clone, Debug)]
pub struct VoronoiCellData {
    basis: LatticeBasis,
    vr: Vec<RelevantVector>,
    lambda1_sq: Scalar,
    max_vr_norm_sq: Scalar,
}

/// Squared radii with `r B ⊆ V ⊆ R B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SandwichRadii {
    pub inner_sq: Scalar,
    pub outer_sq: Scalar,
}

/// Relevant vectors of `L` as unique-up-to-sign minimizers of the nonzero
/// cosets of `L / 2L`.
pub fn compute_relevant_vectors(basis: &LatticeBasis, limits: &Limits) -> Result<VoronoiCellData> {
    let n = basis.dim();
    let reps = coset_reps_mod2(n, limits.dim_cap)?;
    let doubled = basis.scaled(&rational::int(2))?;
    let per_coset: Vec<Result<Vec<Vec<i64>>>> = reps
        .par_iter()
        .map(|p| coset_minimizers(basis, &doubled, p, limits.enum_cap))
        .collect();
    let mut coeffs = Vec::with_capacity(2 * reps.len());
    for found in per_coset {
        let found = found?;
        if found.len() == 2 {
            let mut pair = found;
            pair.sort_by_key(|c| std::cmp::Reverse(first_nonzero_sign(c)));
            coeffs.extend(pair);
        }
    }
    VoronoiCellData::from_coeffs(basis.clone(), coeffs)
}

fn first_nonzero_sign(c: &[i64]) -> i64 {
    c.iter().find(|&&x| x != 0).map_or(0, |x| x.signum())
}

/// All shortest vectors of the coset `Bp + 2L`, as coefficient vectors.
fn coset_minimizers(
    basis: &LatticeBasis,
    doubled: &LatticeBasis,
    p: &[i64],
    cap: u64,
) -> Result<Vec<Vec<i64>>> {
    // min ||Bp + 2Bk|| is a closest-vector query for -Bp in 2L.
    let target = Target::new(rational::neg(&basis.combine(p)));
    let sols = oracle::cvp_bruteforce(doubled, &target, cap)?;
    Ok(sols
        .points
        .iter()
        .map(|k| p.iter().zip(k.coeffs()).map(|(a, b)| a + 2 * b).collect())
        .collect())
}

impl VoronoiCellData {
    /// Rebuilds cell data from relevant-vector coefficients.
    pub fn from_coeffs(basis: LatticeBasis, coeffs: Vec<Vec<i64>>) -> Result<Self> {
        let n = basis.dim();
        if coeffs.is_empty() {
            return Err(Error::Contract("empty relevant vector set".into()));
        }
        let mut vr = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            if c.len() != n || c.iter().all(|&x| x == 0) {
                return Err(Error::Contract(format!("invalid relevant vector {c:?}")));
            }
            vr.push(RelevantVector::new(&basis, c));
        }
        for v in &vr {
            let negated: Vec<i64> = v.coeffs.iter().map(|x| -x).collect();
            if !vr.iter().any(|w| w.coeffs == negated) {
                return Err(Error::Contract(
                    "relevant vectors not closed under negation".into(),
                ));
            }
        }
        let lambda1_sq = vr
            .iter()
            .map(RelevantVector::norm_sq)
            .min()
            .expect("nonempty");
        let max_vr_norm_sq = vr
            .iter()
            .map(RelevantVector::norm_sq)
            .max()
            .expect("nonempty");
        Ok(VoronoiCellData {
            basis,
            vr,
            lambda1_sq,
            max_vr_norm_sq,
        })
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn relevant(&self) -> &[RelevantVector] {
        &self.vr
    }

    pub fn len(&self) -> usize {
        self.vr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vr.is_empty()
    }

    pub fn lambda1_sq(&self) -> &Scalar {
        &self.lambda1_sq
    }

    pub fn max_vr_norm_sq(&self) -> &Scalar {
        &self.max_vr_norm_sq
    }

    /// Position of a relevant vector given by coefficients.
    pub fn index_of(&self, coeffs: &[i64]) -> Option<usize> {
        self.vr.iter().position(|v| v.coeffs == coeffs)
    }

    /// `||x||_V = max_v <v,x> / (<v,v>/2)`.
    pub fn voronoi_norm(&self, x: &[Scalar]) -> Scalar {
        let mut best = Scalar::zero();
        for v in &self.vr {
            let ip = rational::dot(&v.coords, x);
            if !ip.is_positive() {
                continue;
            }
            let r = ip / &v.half_norm_sq;
            if r > best {
                best = r;
            }
        }
        best
    }

    /// Exact test `x ∈ V`.
    pub fn membership(&self, x: &[Scalar]) -> bool {
        self.vr
            .iter()
            .all(|v| rational::dot(&v.coords, x) <= v.half_norm_sq)
    }

    /// Exact membership with a floating-point shortcut for clear cases.
    ///
    /// The shortcut only answers when every facet inequality holds or fails
    /// by a margin far above rounding error; otherwise it falls back to
    /// [`membership`](Self::membership).
    pub fn membership_fast(&self, x: &[Scalar]) -> bool {
        let xf = rational::vec_to_f64(x);
        let scale = xf.iter().map(|v| v.abs()).fold(0.0, f64::max) + 1.0;
        let mut ambiguous = false;
        for v in &self.vr {
            let ip: f64 = v.coords_f64.iter().zip(&xf).map(|(a, b)| a * b).sum();
            let vn = v.coords_f64.iter().map(|a| a.abs()).sum::<f64>();
            let tol = 1e-9 * (scale * vn + v.half_norm_sq_f64.abs() + 1.0);
            let gap = v.half_norm_sq_f64 - ip;
            if gap < -tol {
                return false;
            }
            if gap <= tol {
                ambiguous = true;
            }
        }
        if ambiguous {
            self.membership(x)
        } else {
            true
        }
    }

    /// Is `t` in the cell centered at `y`, i.e. is `y` a closest vector to `t`?
    pub fn contains_target(&self, y: &LatticePoint, t: &[Scalar]) -> bool {
        self.membership(&rational::sub(t, y.coords()))
    }

    /// `r^2 = lambda1^2 / 4` and `R^2 = (n/4) max ||v||^2`.
    pub fn sandwich_radii(&self) -> SandwichRadii {
        let n = self.dim() as i64;
        SandwichRadii {
            inner_sq: &self.lambda1_sq / rational::int(4),
            outer_sq: &self.max_vr_norm_sq * rational::ratio(n, 4),
        }
    }
}

/// Shorthand for [`VoronoiCellData::voronoi_norm`].
pub fn voronoi_norm(cell: &VoronoiCellData, x: &[Scalar]) -> Scalar {
    cell.voronoi_norm(x)
}

/// Shorthand for [`VoronoiCellData::membership`].
pub fn membership(cell: &VoronoiCellData, x: &[Scalar]) -> bool {
    cell.membership(x)
}

/// Shorthand for [`VoronoiCellData::sandwich_radii`].
pub fn sandwich_radii(cell: &VoronoiCellData) -> SandwichRadii {
    cell.sandwich_radii()
}

/// Re-checks the coset characterization of one relevant vector by enumerating
/// the ball of radius `||v||` around the origin: `v` and `-v` must be the only
/// points of their coset mod `2L` in that ball.
pub fn verify_relevant(basis: &LatticeBasis, v: &[i64], cap: u64) -> Result<bool> {
    let n = basis.dim();
    let coords = basis.combine(v);
    let r = rational::norm_sq(&coords);
    let ball = oracle::enumerate_ball(basis, &Target::new(rational::zeros(n)), &r, cap)?;
    let same_coset = |a: &[i64]| a.iter().zip(v).all(|(x, y)| (x - y).rem_euclid(2) == 0);
    let mut hits = ball.iter().filter(|p| same_coset(p.coeffs()));
    let mut count = 0;
    let neg: Vec<i64> = v.iter().map(|x| -x).collect();
    for p in hits.by_ref() {
        if p.coeffs() != v && p.coeffs() != neg.as_slice() {
            return Ok(false);
        }
        count += 1;
    }
    Ok(count == 2)
}
