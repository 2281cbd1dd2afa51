//! Closest vectors with the relevant vectors as preprocessing.
//!
//! A query rounds the target in a basis of relevant vectors, then runs the
//! randomized straight line with a uniform perturbation and truncation
//! parameter `α = 1/(4 q̄ μ)^2`. Walks that run past the edge threshold or
//! hit a degenerate crossing are restarted with a fresh perturbation. Every
//! returned answer is certified by exact membership of `t - y` in the cell.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{covering_radius_upper, LatticeBasis, LatticePoint, Limits, Target};
use crate::navigation::{randomized_straight_line, PathTrace, RslResult};
use crate::rational::{self, Matrix, Scalar};
use crate::sampling::{SamplerConfig, UniformSampler};
use crate::voronoi::{compute_relevant_vectors, VoronoiCellData};

/// Default restart-threshold constant `C` in `T = C n (n + <B> + <t>)`.
///
/// Eight times the expected walk length is
/// `4n^2 + 8K n (2 + 2 ln(8 q̄ μ))` with `K = e^2/(sqrt 2 - 1)`, and
/// `ln(8 q̄ μ) <= ln 8 + ln 2 (<B> + <t>)`. Each resulting term is covered
/// by `900 n (n + <B> + <t>)` for `n >= 1`.
pub const DEFAULT_RESTART_CONSTANT: f64 = 900.0;

/// Default number of restarts before a query gives up.
pub const DEFAULT_RESTART_CAP: u32 = 64;

/// `e^2 / (sqrt 2 - 1)`.
pub fn phase_c_constant() -> f64 {
    std::f64::consts::E.powi(2) / (std::f64::consts::SQRT_2 - 1.0)
}

/// Lattice plus the preprocessing advice used by queries.
#[derive(Clone, Debug)]
pub struct PreprocessedLattice {
    cell: VoronoiCellData,
    /// Indices into the relevant vectors of `v_1, ..., v_n`.
    selected: Vec<usize>,
    /// Inverse of the matrix with columns `v_1, ..., v_n`.
    selected_inverse: Matrix,
    /// `sum ||v_i||^2`, so `μ <= sqrt(sum)/2`.
    covering_sum: Scalar,
    bits_basis: u64,
}

impl PreprocessedLattice {
    /// Wraps an already computed cell.
    pub fn from_cell(cell: VoronoiCellData) -> Result<Self> {
        let n = cell.dim();
        let mut selected = Vec::with_capacity(n);
        let mut cols: Vec<Vec<Scalar>> = Vec::with_capacity(n);
        for (i, v) in cell.relevant().iter().enumerate() {
            cols.push(v.coords().to_vec());
            if Matrix::from_columns(&cols)?.rank() == cols.len() {
                selected.push(i);
                if cols.len() == n {
                    break;
                }
            } else {
                cols.pop();
            }
        }
        if cols.len() < n {
            return Err(Error::Contract(
                "relevant vectors do not span the space".into(),
            ));
        }
        let selected_inverse = Matrix::from_columns(&cols)?.inverse()?;
        let covering_sum = covering_radius_upper(&cols)?;
        let bits_basis = cell.basis().encoding_length();
        Ok(PreprocessedLattice {
            cell,
            selected,
            selected_inverse,
            covering_sum,
            bits_basis,
        })
    }

    pub fn cell(&self) -> &VoronoiCellData {
        &self.cell
    }

    pub fn basis(&self) -> &LatticeBasis {
        self.cell.basis()
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// `μ_upper^2 = sum ||v_i||^2 / 4`.
    pub fn mu_upper_sq(&self) -> Scalar {
        &self.covering_sum / rational::int(4)
    }

    pub fn bits_basis(&self) -> u64 {
        self.bits_basis
    }

    /// Lower bound on `||t - y||_V` for any `y` with `t ∉ y + V`:
    /// `1 + 1/(2 q̄ μ_upper)^2`.
    pub fn separation_bound(&self, t: &Target) -> Scalar {
        let q = Scalar::from_integer(crate::lattice::qbar(self.basis(), t));
        Scalar::one() + Scalar::one() / (&q * &q * &self.covering_sum)
    }
}

/// Computes the relevant vectors and picks `n` independent ones.
pub fn preprocess(basis: &LatticeBasis, limits: &Limits) -> Result<PreprocessedLattice> {
    PreprocessedLattice::from_cell(compute_relevant_vectors(basis, limits)?)
}

/// Per-query parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryParams {
    pub qbar: BigInt,
    /// `1/(4 q̄ μ_upper)^2 = 1/(4 q̄^2 sum ||v_i||^2)`.
    pub alpha: Scalar,
    pub bits_target: u64,
    /// Edge budget per attempt.
    pub threshold: usize,
}

impl QueryParams {
    pub fn new(pre: &PreprocessedLattice, t: &Target, restart_constant: f64) -> Result<Self> {
        if restart_constant.is_nan() || restart_constant < 1.0 {
            return Err(Error::Contract(format!(
                "restart constant must be at least 1, got {restart_constant}"
            )));
        }
        let qbar = crate::lattice::qbar(pre.basis(), t);
        let q = Scalar::from_integer(qbar.clone());
        let alpha = Scalar::one() / (rational::int(4) * &q * &q * &pre.covering_sum);
        let bits_target = t.encoding_length();
        let n = pre.dim() as f64;
        let t_edges =
            (restart_constant * n * (n + pre.bits_basis as f64 + bits_target as f64)).ceil();
        let threshold = if t_edges >= usize::MAX as f64 {
            usize::MAX
        } else {
            (t_edges as usize).max(1)
        };
        Ok(QueryParams {
            qbar,
            alpha,
            bits_target,
            threshold,
        })
    }
}

/// Tuning knobs of the restart loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub restart_constant: f64,
    pub restart_cap: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restart_constant: DEFAULT_RESTART_CONSTANT,
            restart_cap: DEFAULT_RESTART_CAP,
        }
    }
}

/// A certified closest vector and how it was found.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub point: LatticePoint,
    pub certified: bool,
    pub restarts: u32,
    /// Edges over all attempts.
    pub total_edges: usize,
    /// Phase counts of the successful attempt.
    pub phase_b: usize,
    pub phase_c: usize,
    pub seed: u64,
    pub stream: u64,
    pub start: LatticePoint,
    pub params: QueryParams,
    pub trace: PathTrace,
}

impl SolveResult {
    pub fn dist_sq(&self, t: &Target) -> Scalar {
        rational::norm_sq(&rational::sub(&t.coords, self.point.coords()))
    }
}

/// `x = sum round(a_i) v_i` where `t = sum a_i v_i`, ties to even.
pub fn round_to_start(pre: &PreprocessedLattice, t: &Target) -> Result<LatticePoint> {
    if t.dim() != pre.dim() {
        return Err(Error::Shape(format!(
            "target has dimension {}, lattice has {}",
            t.dim(),
            pre.dim()
        )));
    }
    let a = pre.selected_inverse.mul_vec(&t.coords);
    let mut coeffs = vec![0i64; pre.dim()];
    for (ai, &idx) in a.iter().zip(&pre.selected) {
        let k = rational::round_half_even(ai)
            .to_i64()
            .ok_or(Error::Overflow)?;
        for (c, &vc) in coeffs.iter_mut().zip(pre.cell.relevant()[idx].coeffs()) {
            *c = k
                .checked_mul(vc)
                .and_then(|m| c.checked_add(m))
                .ok_or(Error::Overflow)?;
        }
    }
    Ok(pre.basis().point(coeffs))
}

/// Exact check that `t ∈ y + V`, i.e. `y` is a closest lattice vector to `t`.
pub fn certify(pre: &PreprocessedLattice, t: &Target, y: &LatticePoint) -> bool {
    pre.cell.contains_target(y, &t.coords)
}

/// Query with stream 0 of `cfg.seed` and default options.
pub fn query(pre: &PreprocessedLattice, t: &Target, cfg: &SamplerConfig) -> Result<SolveResult> {
    query_stream(pre, t, cfg, 0, &SolverOptions::default())
}

/// Query drawing perturbations from stream `stream` of `cfg.seed`.
pub fn query_stream(
    pre: &PreprocessedLattice,
    t: &Target,
    cfg: &SamplerConfig,
    stream: u64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let sampler = UniformSampler::new(&pre.cell, cfg.clone())?;
    let mut rng = cfg.rng(stream);
    let mut result = query_with(pre, t, &sampler, &mut rng, opts)?;
    result.seed = cfg.seed;
    result.stream = stream;
    Ok(result)
}

/// The restart loop with a caller-supplied sampler and generator.
pub fn query_with<R: Rng>(
    pre: &PreprocessedLattice,
    t: &Target,
    sampler: &UniformSampler<'_>,
    rng: &mut R,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let params = QueryParams::new(pre, t, opts.restart_constant)?;
    let start = round_to_start(pre, t)?;
    let mut total_edges = 0;
    for restarts in 0..=opts.restart_cap {
        let z = sampler.sample(rng)?;
        let outcome = match randomized_straight_line(
            &pre.cell,
            &start,
            &t.coords,
            &z,
            &params.alpha,
            params.threshold,
        ) {
            Ok(o) => o,
            Err(Error::TieDetected { .. }) => continue,
            Err(e) => return Err(e),
        };
        total_edges += outcome.trace.len();
        let RslResult::Reached(y) = outcome.result else {
            continue;
        };
        if !certify(pre, t, &y) {
            // Only reachable with an approximate sampler far from uniform.
            continue;
        }
        return Ok(SolveResult {
            point: y,
            certified: true,
            restarts,
            total_edges,
            phase_b: outcome.trace.phase_b,
            phase_c: outcome.trace.phase_c,
            seed: sampler.config().seed,
            stream: 0,
            start,
            params,
            trace: outcome.trace,
        });
    }
    Err(Error::RestartCap {
        restarts: opts.restart_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::cvp_bruteforce;
    use crate::rational::{int, ratio};

    fn z(n: usize) -> PreprocessedLattice {
        preprocess(&LatticeBasis::identity(n).unwrap(), &Limits::default()).unwrap()
    }

    #[test]
    fn integer_lattice_selection() {
        for n in 1..=4 {
            let pre = z(n);
            assert_eq!(pre.mu_upper_sq(), ratio(n as i64, 4));
            let mut picked: Vec<Vec<i64>> = pre
                .selected()
                .iter()
                .map(|&i| {
                    pre.cell().relevant()[i]
                        .coeffs()
                        .iter()
                        .map(|c| c.abs())
                        .collect()
                })
                .collect();
            picked.sort();
            picked.dedup();
            assert_eq!(picked.len(), n);
            assert!(picked.iter().all(|v| v.iter().sum::<i64>() == 1));
        }
    }

    #[test]
    fn one_dimensional_selection() {
        let b = LatticeBasis::from_columns(vec![vec![ratio(7, 3)]]).unwrap();
        let pre = preprocess(&b, &Limits::default()).unwrap();
        assert_eq!(pre.selected().len(), 1);
        assert_eq!(pre.mu_upper_sq(), ratio(49, 36));
    }

    #[test]
    fn rounding_start_examples() {
        let pre = z(2);
        let t = Target::new(vec![ratio(3, 10), ratio(7, 10)]);
        assert_eq!(round_to_start(&pre, &t).unwrap().coeffs(), &[0, 1]);
        let t = Target::new(vec![int(4), int(-2)]);
        assert_eq!(round_to_start(&pre, &t).unwrap().coords(), &t.coords[..]);
        let t = Target::new(vec![ratio(1, 2), ratio(3, 2)]);
        assert_eq!(round_to_start(&pre, &t).unwrap().coeffs(), &[0, 2]);
        assert!(round_to_start(&pre, &Target::new(vec![int(1)])).is_err());
    }

    #[test]
    fn start_is_within_voronoi_distance_n() {
        let b =
            LatticeBasis::from_columns(vec![vec![int(2), int(0)], vec![int(1), int(2)]]).unwrap();
        let pre = preprocess(&b, &Limits::default()).unwrap();
        for (p, q) in [(7, 3), (-11, 5), (1, 2), (100, 7)] {
            let t = Target::new(vec![ratio(p, q), ratio(q, 3)]);
            let x = round_to_start(&pre, &t).unwrap();
            let d = pre
                .cell()
                .voronoi_norm(&rational::sub(&t.coords, x.coords()));
            assert!(d <= int(2));
        }
    }

    #[test]
    fn alpha_and_threshold() {
        let pre = z(2);
        let t = Target::new(vec![ratio(1, 2), ratio(1, 3)]);
        let p = QueryParams::new(&pre, &t, DEFAULT_RESTART_CONSTANT).unwrap();
        // q̄ = 6, sum = 2: α = 1/(4 * 36 * 2).
        assert_eq!(p.alpha, ratio(1, 288));
        assert!(p.threshold >= 1);
        assert!(QueryParams::new(&pre, &t, 0.5).is_err());
    }

    #[test]
    fn query_examples() {
        let pre = z(2);
        let cfg = SamplerConfig::new(1, 2);
        let t = Target::new(vec![ratio(3, 10), ratio(7, 10)]);
        let r = query(&pre, &t, &cfg).unwrap();
        assert!(r.certified);
        assert_eq!(r.point.coeffs(), &[0, 1]);

        let hole = Target::new(vec![ratio(1, 2), ratio(1, 2)]);
        let r = query(&pre, &hole, &cfg).unwrap();
        assert!(r.point.coeffs().iter().all(|&c| c == 0 || c == 1));
        assert_eq!(r.dist_sq(&hole), ratio(1, 2));
    }

    #[test]
    fn query_matches_oracle_on_skew_lattice() {
        let b = LatticeBasis::from_columns(vec![
            vec![ratio(3, 2), int(0), ratio(1, 3)],
            vec![int(1), int(2), int(0)],
            vec![ratio(-1, 2), int(1), ratio(5, 4)],
        ])
        .unwrap();
        let pre = preprocess(&b, &Limits::default()).unwrap();
        let cfg = SamplerConfig::new(9, 3);
        for (i, t) in [
            vec![ratio(7, 5), ratio(-3, 2), ratio(9, 4)],
            vec![int(10), ratio(1, 7), ratio(-8, 3)],
            vec![ratio(1, 64), ratio(63, 64), ratio(-5, 8)],
        ]
        .into_iter()
        .enumerate()
        {
            let t = Target::new(t);
            let r = query_stream(&pre, &t, &cfg, i as u64, &SolverOptions::default()).unwrap();
            let oracle = cvp_bruteforce(&b, &t, 1_000_000).unwrap();
            assert_eq!(r.dist_sq(&t), oracle.dist_sq);
        }
    }

    #[test]
    fn certify_examples() {
        let pre = z(2);
        let t = Target::new(vec![ratio(1, 5), ratio(2, 5)]);
        let y = pre.basis().origin();
        assert!(certify(&pre, &t, &y));
        for v in pre.cell().relevant() {
            assert!(!certify(&pre, &t, &y.offset(v.coeffs(), v.coords())));
        }
        let edge = Target::new(vec![ratio(1, 2), ratio(1, 5)]);
        assert!(certify(&pre, &edge, &pre.basis().point(vec![0, 0])));
        assert!(certify(&pre, &edge, &pre.basis().point(vec![1, 0])));
    }

    #[test]
    fn separation_bound_value() {
        let pre = z(2);
        let t = Target::new(vec![ratio(1, 2), int(0)]);
        // q̄ = 2, sum = 2: 1 + 1/8.
        assert_eq!(pre.separation_bound(&t), ratio(9, 8));
    }
}
