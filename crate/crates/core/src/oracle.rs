//! Brute-force ground truth: bounded enumeration, shortest vectors, closest
//! vectors and Voronoi-graph distances.
//!
//! Enumeration walks the coefficient tree level by level. Floating-point
//! Gram-Schmidt data only decides which subtrees to visit, with a generous
//! margin, so it can add candidates but never drop one. Every candidate that
//! reaches a leaf is accepted or rejected by an exact integer norm.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBasis, LatticePoint, Target};
use crate::rational::{self, Scalar};
use crate::voronoi::VoronoiCellData;

/// All closest lattice vectors to a target.
#[derive(Clone, Debug)]
pub struct CvpSolutionSet {
    pub dist_sq: Scalar,
    pub points: Vec<LatticePoint>,
}

impl CvpSolutionSet {
    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.iter().any(|q| q.coeffs() == p.coeffs())
    }
}

/// Nonzero lattice vectors of minimal length.
#[derive(Clone, Debug)]
pub struct ShortestVectors {
    pub lambda1_sq: Scalar,
    pub minimizers: Vec<LatticePoint>,
}

const MARGIN: f64 = 1e-7;

/// Exact-leaf enumerator for one basis and one center.
struct Search {
    n: usize,
    /// Integer basis columns, scaled so that the center is integral too.
    cols: Vec<Vec<i128>>,
    center: Vec<i128>,
    /// Squared scale factor between integer norms and true norms.
    scale_sq: BigInt,
    mu: Vec<Vec<f64>>,
    bstar_sq: Vec<f64>,
    gamma: Vec<f64>,
    cap: u64,
    visited: u64,
}

impl Search {
    fn new(basis: &LatticeBasis, center: &[Scalar], cap: u64) -> Result<Self> {
        let n = basis.dim();
        if center.len() != n {
            return Err(Error::Shape(format!(
                "center has {} coordinates, lattice has dimension {n}",
                center.len()
            )));
        }
        let scale =
            num_integer::Integer::lcm(&basis.denominator_lcm(), &rational::denominator_lcm(center));
        let s = Scalar::from_integer(scale.clone());
        let to_i128 = |x: Scalar| -> Result<i128> {
            debug_assert!(x.is_integer());
            x.to_integer().to_i128().ok_or(Error::Overflow)
        };
        let cols = basis
            .columns()
            .iter()
            .map(|c| {
                c.iter()
                    .map(|x| to_i128(x * &s))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let center_int = center
            .iter()
            .map(|x| to_i128(x * &s))
            .collect::<Result<Vec<_>>>()?;

        // Gram-Schmidt of the integer columns in floating point.
        let colsf: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| c.iter().map(|&x| x as f64).collect())
            .collect();
        let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut bstar_sq = vec![0.0; n];
        let mut mu = vec![vec![0.0; n]; n];
        for k in 0..n {
            let mut v = colsf[k].clone();
            for j in 0..k {
                let m = dotf(&colsf[k], &bstar[j]) / bstar_sq[j];
                mu[k][j] = m;
                for (vi, bj) in v.iter_mut().zip(&bstar[j]) {
                    *vi -= m * bj;
                }
            }
            bstar_sq[k] = dotf(&v, &v);
            bstar.push(v);
        }
        let cf: Vec<f64> = center_int.iter().map(|&x| x as f64).collect();
        let gamma = (0..n).map(|j| dotf(&cf, &bstar[j]) / bstar_sq[j]).collect();
        Ok(Search {
            n,
            cols,
            center: center_int,
            scale_sq: &scale * &scale,
            mu,
            bstar_sq,
            gamma,
            cap,
            visited: 0,
        })
    }

    /// Integer bound equivalent to `||Ba - c||^2 <= radius_sq`.
    fn bound_for(&self, radius_sq: &Scalar) -> i128 {
        let scaled = (radius_sq * Scalar::from_integer(self.scale_sq.clone())).floor();
        scaled.to_integer().to_i128().unwrap_or(i128::MAX)
    }

    fn to_true_norm(&self, scaled: i128) -> Scalar {
        Scalar::new(BigInt::from(scaled), self.scale_sq.clone())
    }

    fn exact_norm(&self, a: &[i64]) -> Result<i128> {
        let mut total: i128 = 0;
        for i in 0..self.n {
            let mut y = -self.center[i];
            for (j, &aj) in a.iter().enumerate() {
                if aj == 0 {
                    continue;
                }
                let term = self.cols[j][i]
                    .checked_mul(aj as i128)
                    .ok_or(Error::Overflow)?;
                y = y.checked_add(term).ok_or(Error::Overflow)?;
            }
            let sq = y.checked_mul(y).ok_or(Error::Overflow)?;
            total = total.checked_add(sq).ok_or(Error::Overflow)?;
        }
        Ok(total)
    }

    /// Visits every `a` with `||Ba - c||^2 <= bound` (integer units). The
    /// visitor may return a smaller bound to shrink the search.
    fn run<F>(&mut self, bound: i128, visit: &mut F) -> Result<()>
    where
        F: FnMut(&[i64], i128) -> Option<i128>,
    {
        let mut a = vec![0i64; self.n];
        let mut bound = bound;
        self.descend(self.n, 0.0, &mut a, &mut bound, visit)
    }

    fn descend<F>(
        &mut self,
        level: usize,
        partial: f64,
        a: &mut [i64],
        bound: &mut i128,
        visit: &mut F,
    ) -> Result<()>
    where
        F: FnMut(&[i64], i128) -> Option<i128>,
    {
        self.visited += 1;
        if self.visited > self.cap {
            return Err(Error::EnumerationCap { cap: self.cap });
        }
        if level == 0 {
            let norm = self.exact_norm(a)?;
            if norm <= *bound {
                if let Some(b) = visit(a, norm) {
                    *bound = (*bound).min(b);
                }
            }
            return Ok(());
        }
        let j = level - 1;
        let mut center = self.gamma[j];
        for (mu, &ak) in self.mu[level..self.n].iter().zip(&a[level..self.n]) {
            center -= mu[j] * ak as f64;
        }
        let bf = *bound as f64;
        let slack = bf * (1.0 + MARGIN) + 1.0 - partial;
        if slack < 0.0 {
            return Ok(());
        }
        let half = (slack / self.bstar_sq[j]).sqrt();
        let pad = MARGIN * (1.0 + center.abs() + half) + 1e-9;
        let lo = (center - half - pad).ceil();
        let hi = (center + half + pad).floor();
        if !lo.is_finite() || !hi.is_finite() || lo.abs() > 9e15 || hi.abs() > 9e15 {
            return Err(Error::Overflow);
        }
        let (lo, hi) = (lo as i64, hi as i64);
        // Visit from the center outwards so shrinking bounds bite early.
        let mid = center.round() as i64;
        let mut order: Vec<i64> = Vec::new();
        if (lo..=hi).contains(&mid) {
            order.push(mid);
        }
        let mut step = 1;
        loop {
            let (l, r) = (mid - step, mid + step);
            let mut any = false;
            if r <= hi && r >= lo {
                order.push(r);
                any = true;
            }
            if l >= lo && l <= hi {
                order.push(l);
                any = true;
            }
            if !any && (r > hi && l < lo) {
                break;
            }
            step += 1;
        }
        for v in order {
            a[j] = v;
            let d = v as f64 - center;
            let p = partial + d * d * self.bstar_sq[j];
            if p > (*bound as f64) * (1.0 + MARGIN) + 1.0 {
                continue;
            }
            self.descend(j, p, a, bound, visit)?;
        }
        a[j] = 0;
        Ok(())
    }
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every lattice point `y` with `||y - center||^2 <= radius_sq`.
pub fn enumerate_ball(
    basis: &LatticeBasis,
    center: &Target,
    radius_sq: &Scalar,
    cap: u64,
) -> Result<Vec<LatticePoint>> {
    if radius_sq < &Scalar::zero() {
        return Err(Error::Contract("negative radius".into()));
    }
    let mut search = Search::new(basis, &center.coords, cap)?;
    let bound = search.bound_for(radius_sq);
    let mut found = Vec::new();
    search.run(bound, &mut |a, _| {
        found.push(a.to_vec());
        None
    })?;
    found.sort();
    Ok(found.into_iter().map(|a| basis.point(a)).collect())
}

/// First minimum (squared) and all its minimizers.
pub fn shortest_vector(basis: &LatticeBasis, cap: u64) -> Result<ShortestVectors> {
    let n = basis.dim();
    let start = basis
        .columns()
        .iter()
        .map(|c| rational::norm_sq(c))
        .min()
        .expect("nonempty basis");
    let mut search = Search::new(basis, &rational::zeros(n), cap)?;
    let bound = search.bound_for(&start);
    let mut best = i128::MAX;
    let mut mins: Vec<Vec<i64>> = Vec::new();
    search.run(bound, &mut |a, norm| {
        if norm == 0 {
            return None;
        }
        if norm < best {
            best = norm;
            mins.clear();
        }
        if norm == best {
            mins.push(a.to_vec());
        }
        Some(best)
    })?;
    mins.sort();
    Ok(ShortestVectors {
        lambda1_sq: search.to_true_norm(best),
        minimizers: mins.into_iter().map(|a| basis.point(a)).collect(),
    })
}

/// Rounds the coefficients of `t` in the basis, ties to even.
pub fn basis_rounding(basis: &LatticeBasis, t: &[Scalar]) -> Result<LatticePoint> {
    let coeffs = basis
        .coefficients(t)
        .iter()
        .map(|c| rational::round_half_even(c).to_i64().ok_or(Error::Overflow))
        .collect::<Result<Vec<_>>>()?;
    Ok(basis.point(coeffs))
}

/// The full set of closest lattice vectors to `t`.
pub fn cvp_bruteforce(basis: &LatticeBasis, t: &Target, cap: u64) -> Result<CvpSolutionSet> {
    let start = basis_rounding(basis, &t.coords)?;
    let r0 = rational::norm_sq(&rational::sub(start.coords(), &t.coords));
    let mut search = Search::new(basis, &t.coords, cap)?;
    let bound = search.bound_for(&r0);
    let mut best = i128::MAX;
    let mut mins: Vec<Vec<i64>> = Vec::new();
    search.run(bound, &mut |a, norm| {
        if norm < best {
            best = norm;
            mins.clear();
        }
        if norm == best {
            mins.push(a.to_vec());
        }
        Some(best)
    })?;
    debug_assert!(
        !mins.is_empty(),
        "rounded point always lies in the initial ball"
    );
    mins.sort();
    Ok(CvpSolutionSet {
        dist_sq: search.to_true_norm(best),
        points: mins.into_iter().map(|a| basis.point(a)).collect(),
    })
}

/// Breadth-first distances from the origin on the Voronoi graph, up to depth `cap`.
pub fn graph_ball(cell: &VoronoiCellData, cap: u32) -> HashMap<Vec<i64>, u32> {
    let n = cell.dim();
    let mut dist: HashMap<Vec<i64>, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(vec![0; n], 0);
    queue.push_back(vec![0i64; n]);
    while let Some(p) = queue.pop_front() {
        let d = dist[&p];
        if d == cap {
            continue;
        }
        for v in cell.relevant() {
            let q: Vec<i64> = p.iter().zip(v.coeffs()).map(|(a, b)| a + b).collect();
            if !dist.contains_key(&q) {
                dist.insert(q.clone(), d + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// Exact graph distance `d_G(x, y)`, or `None` when it exceeds `cap`.
pub fn graph_distance_bfs(
    cell: &VoronoiCellData,
    x: &LatticePoint,
    y: &LatticePoint,
    cap: u32,
) -> Option<u32> {
    let target: Vec<i64> = y
        .coeffs()
        .iter()
        .zip(x.coeffs())
        .map(|(a, b)| a - b)
        .collect();
    if target.iter().all(|&c| c == 0) {
        return Some(0);
    }
    let n = cell.dim();
    let mut seen: HashMap<Vec<i64>, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(vec![0; n], 0);
    queue.push_back(vec![0i64; n]);
    while let Some(p) = queue.pop_front() {
        let d = seen[&p];
        if d == cap {
            continue;
        }
        for v in cell.relevant() {
            let q: Vec<i64> = p.iter().zip(v.coeffs()).map(|(a, b)| a + b).collect();
            if q == target {
                return Some(d + 1);
            }
            if !seen.contains_key(&q) {
                seen.insert(q.clone(), d + 1);
                queue.push_back(q);
            }
        }
    }
    None
}
