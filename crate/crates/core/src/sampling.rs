//! Random points of the Voronoi cell, Gamma variates and Laplace(V, θ) draws.
//!
//! Uniform samples are dyadic rationals on a grid of `2^-precision_bits`, so
//! navigation downstream stays in exact arithmetic. The generator is
//! ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded from a 64-bit seed; trial `i`
//! of an experiment uses stream `i` of that seed.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rational::{self, Matrix, Scalar};
use crate::voronoi::VoronoiCellData;

/// How uniform cell samples are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMethod {
    /// Exact rejection from a bounding parallelepiped.
    Rejection,
    /// Hit-and-run walk from the origin; approximate.
    HitAndRun,
}

impl SamplerMethod {
    /// Rejection up to dimension 6, hit-and-run above.
    pub fn default_for(n: usize) -> Self {
        if n <= 6 {
            SamplerMethod::Rejection
        } else {
            SamplerMethod::HitAndRun
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub precision_bits: u32,
    pub method: SamplerMethod,
    /// Hit-and-run steps per sample; `None` uses [`default_step_budget`].
    pub step_budget: Option<u64>,
    /// Target total-variation distance for hit-and-run.
    pub tv_epsilon: f64,
    /// Rejection attempts before giving up.
    pub max_attempts: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64, n: usize) -> Self {
        SamplerConfig {
            seed,
            precision_bits: 128,
            method: SamplerMethod::default_for(n),
            step_budget: None,
            tv_epsilon: 0.25,
            max_attempts: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_bits < 32 {
            return Err(Error::Contract(format!(
                "precision must be at least 32 bits, got {}",
                self.precision_bits
            )));
        }
        if !(self.tv_epsilon > 0.0 && self.tv_epsilon < 1.0) {
            return Err(Error::Contract(format!(
                "tv_epsilon must be in (0, 1), got {}",
                self.tv_epsilon
            )));
        }
        Ok(())
    }

    /// Generator for stream `stream` of this config's seed.
    pub fn rng(&self, stream: u64) -> ChaCha20Rng {
        stream_rng(self.seed, stream)
    }
}

/// ChaCha20 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `20 n^2 ceil(1 + log2(R/r)) ceil(1 + ln(1/eps))` hit-and-run steps.
pub fn default_step_budget(n: usize, inner_sq: f64, outer_sq: f64, eps: f64) -> u64 {
    let ratio = (outer_sq / inner_sq).sqrt().max(1.0);
    let a = (1.0 + ratio.log2()).ceil();
    let b = (1.0 + (1.0 / eps).ln()).ceil();
    (20.0 * (n * n) as f64 * a * b) as u64
}

/// Uniform integer in `[0, 2^bits)`.
fn random_bits<R: RngCore>(rng: &mut R, bits: u32) -> BigInt {
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
    let extra = words as u32 * 32 - bits;
    if extra > 0 {
        let last = digits.last_mut().expect("bits >= 1");
        *last >>= extra;
    }
    BigInt::from_slice(num_bigint::Sign::Plus, &digits)
}

/// Uniform dyadic in `[-1, 1)` with `bits` fractional bits.
fn random_symmetric_unit<R: RngCore>(rng: &mut R, bits: u32) -> Scalar {
    let k = random_bits(rng, bits + 1);
    let half = BigInt::one() << bits as usize;
    Scalar::new(k - &half, half)
}

/// Samples uniform points of a Voronoi cell.
pub struct UniformSampler<'a> {
    cell: &'a VoronoiCellData,
    cfg: SamplerConfig,
    /// Rows are `n` independent relevant vectors; `V ⊆ {x : |<v_j, x>| <= <v_j,v_j>/2}`.
    halves: Vec<Scalar>,
    inverse: Matrix,
    inverse_f64: Vec<Vec<f64>>,
    steps: u64,
}

impl<'a> UniformSampler<'a> {
    pub fn new(cell: &'a VoronoiCellData, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cell.dim();
        let mut order: Vec<usize> = (0..cell.len()).collect();
        order.sort_by(|&i, &j| {
            cell.relevant()[i]
                .half_norm_sq()
                .cmp(cell.relevant()[j].half_norm_sq())
                .then(i.cmp(&j))
        });
        let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(n);
        let mut halves = Vec::with_capacity(n);
        for i in order {
            let v = &cell.relevant()[i];
            rows.push(v.coords().to_vec());
            if Matrix::from_rows(rows.clone())?.rank() < rows.len() {
                rows.pop();
                continue;
            }
            halves.push(v.half_norm_sq().clone());
            if rows.len() == n {
                break;
            }
        }
        if rows.len() < n {
            return Err(Error::Contract(
                "relevant vectors do not span the space".into(),
            ));
        }
        let inverse = Matrix::from_rows(rows)?.inverse()?;
        let inverse_f64 = (0..n)
            .map(|i| inverse.row(i).iter().map(rational::to_f64).collect())
            .collect();
        let radii = cell.sandwich_radii();
        let steps = cfg.step_budget.unwrap_or_else(|| {
            default_step_budget(
                n,
                rational::to_f64(&radii.inner_sq),
                rational::to_f64(&radii.outer_sq),
                cfg.tv_epsilon,
            )
        });
        Ok(UniformSampler {
            cell,
            cfg,
            halves,
            inverse,
            inverse_f64,
            steps,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn step_budget(&self) -> u64 {
        self.steps
    }

    /// One sample with the configured method.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<Scalar>> {
        match self.cfg.method {
            SamplerMethod::Rejection => self.rejection(rng),
            SamplerMethod::HitAndRun => Ok(self.hit_and_run(rng)),
        }
    }

    /// Uniform over the cell, up to the dyadic grid.
    pub fn rejection<R: Rng>(&self, rng: &mut R) -> Result<Vec<Scalar>> {
        let n = self.cell.dim();
        let bits = self.cfg.precision_bits;
        for _ in 0..self.cfg.max_attempts {
            let y: Vec<Scalar> = self
                .halves
                .iter()
                .map(|h| h * random_symmetric_unit(rng, bits))
                .collect();
            // Cheap float rejection before any exact work.
            let yf = rational::vec_to_f64(&y);
            let xf: Vec<f64> = (0..n)
                .map(|i| {
                    self.inverse_f64[i]
                        .iter()
                        .zip(&yf)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            if self.clearly_outside(&xf) {
                continue;
            }
            let x: Vec<Scalar> = self
                .inverse
                .mul_vec(&y)
                .iter()
                .map(|c| rational::to_dyadic(c, bits))
                .collect();
            if self.cell.membership_fast(&x) {
                return Ok(x);
            }
        }
        Err(Error::SamplerAttempts {
            attempts: self.cfg.max_attempts,
        })
    }

    fn clearly_outside(&self, xf: &[f64]) -> bool {
        let scale = xf.iter().map(|v| v.abs()).fold(0.0, f64::max) + 1.0;
        self.cell.relevant().iter().any(|v| {
            let vf: Vec<f64> = v.coords().iter().map(rational::to_f64).collect();
            let ip: f64 = vf.iter().zip(xf).map(|(a, b)| a * b).sum();
            let h = rational::to_f64(v.half_norm_sq());
            let tol = 1e-6 * (scale * vf.iter().map(|a| a.abs()).sum::<f64>() + h + 1.0);
            ip - h > tol
        })
    }

    /// Hit-and-run from the origin for the configured number of steps.
    ///
    /// The chain runs in floating point with chord endpoints taken from the
    /// facet inequalities, pulled inward by a relative margin. The final
    /// point is rounded to the dyadic grid and checked exactly; if rounding
    /// pushed it out, it is scaled toward the origin until it is inside.
    pub fn hit_and_run<R: Rng>(&self, rng: &mut R) -> Vec<Scalar> {
        const MARGIN: f64 = 1e-9;
        let n = self.cell.dim();
        let bits = self.cfg.precision_bits;
        let facets: Vec<(Vec<f64>, f64)> = self
            .cell
            .relevant()
            .iter()
            .map(|v| {
                (
                    rational::vec_to_f64(v.coords()),
                    rational::to_f64(v.half_norm_sq()),
                )
            })
            .collect();
        let mut x = vec![0.0f64; n];
        for _ in 0..self.steps {
            let d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (vf, h) in &facets {
                let s: f64 = vf.iter().zip(&d).map(|(a, b)| a * b).sum();
                let g = h - vf.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                if s > 0.0 {
                    hi = hi.min(g / s);
                } else if s < 0.0 {
                    lo = lo.max(g / s);
                }
            }
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                continue;
            }
            let u: f64 = rng.random();
            let lambda = lo + (hi - lo) * (MARGIN + (1.0 - 2.0 * MARGIN) * u);
            let next: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + lambda * di).collect();
            if facets
                .iter()
                .all(|(vf, h)| vf.iter().zip(&next).map(|(a, b)| a * b).sum::<f64>() < *h)
            {
                x = next;
            }
        }
        let mut shrink = 0.0f64;
        loop {
            let scale = (1.0 - shrink).max(0.0);
            let candidate: Vec<Scalar> = x
                .iter()
                .map(|xi| rational::to_dyadic(&rational::from_f64(xi * scale), bits))
                .collect();
            if scale == 0.0 || self.cell.membership(&candidate) {
                return candidate;
            }
            shrink = if shrink == 0.0 { 1e-12 } else { shrink * 4.0 };
        }
    }
}

/// One exact-rejection sample using stream 0 of `cfg.seed`.
pub fn uniform_voronoi_rejection(
    cell: &VoronoiCellData,
    cfg: &SamplerConfig,
) -> Result<Vec<Scalar>> {
    let sampler = UniformSampler::new(cell, cfg.clone())?;
    sampler.rejection(&mut cfg.rng(0))
}

/// One hit-and-run sample using stream 0 of `cfg.seed`.
pub fn hit_and_run_uniform(cell: &VoronoiCellData, cfg: &SamplerConfig) -> Result<Vec<Scalar>> {
    let sampler = UniformSampler::new(cell, cfg.clone())?;
    Ok(sampler.hit_and_run(&mut cfg.rng(0)))
}

/// `Γ(k, θ)` as a sum of `k` exponentials of mean `θ`.
pub fn gamma_sample<R: Rng>(k: u32, theta: f64, rng: &mut R) -> f64 {
    assert!(
        k >= 1 && theta > 0.0,
        "gamma_sample needs k >= 1 and theta > 0"
    );
    let s: f64 = (0..k).map(|_| Exp1.sample(rng)).map(|e: f64| e).sum();
    theta * s
}

/// Scale parameter of a Laplace distribution over the cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceParams {
    pub theta: f64,
}

impl LaplaceParams {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 {
            Ok(LaplaceParams { theta })
        } else {
            Err(Error::Contract(format!(
                "theta must be positive, got {theta}"
            )))
        }
    }

    /// The dimension-tuned choice `θ_n`.
    pub fn tuned(n: usize) -> Result<Self> {
        Self::new(theta_n(n))
    }
}

/// `θ_n = 1 / ((n+1) - sqrt(2(n+1)))`.
pub fn theta_n(n: usize) -> f64 {
    let m = (n + 1) as f64;
    1.0 / (m - (2.0 * m).sqrt())
}

/// `γ_n = (1 + 2 sqrt(2) / (sqrt(n+1) - sqrt(2)))^-1`.
pub fn gamma_n(n: usize) -> f64 {
    let m = (n + 1) as f64;
    1.0 / (1.0 + 2.0 * 2f64.sqrt() / (m.sqrt() - 2f64.sqrt()))
}

/// A Laplace(V, θ) draw kept in its `r · U` form.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceSample {
    pub radius: f64,
    /// Uniform point of the cell.
    pub unit: Vec<Scalar>,
}

impl LaplaceSample {
    pub fn coords_f64(&self) -> Vec<f64> {
        self.unit
            .iter()
            .map(|u| self.radius * rational::to_f64(u))
            .collect()
    }

    /// `||r U||_V = r ||U||_V`.
    pub fn voronoi_norm(&self, cell: &VoronoiCellData) -> f64 {
        self.radius * rational::to_f64(&cell.voronoi_norm(&self.unit))
    }

    /// The point as a dyadic rational with `bits` fractional bits.
    pub fn coords_exact(&self, bits: u32) -> Vec<Scalar> {
        let r = rational::from_f64(self.radius);
        self.unit
            .iter()
            .map(|u| rational::to_dyadic(&(&r * u), bits))
            .collect()
    }
}

/// `r U` with `r ~ Γ(n+1, θ)` and `U` uniform on the cell, independent.
pub fn laplace_voronoi_sample<R: Rng>(
    sampler: &UniformSampler<'_>,
    params: LaplaceParams,
    rng: &mut R,
) -> Result<LaplaceSample> {
    let n = sampler.cell.dim() as u32;
    let radius = gamma_sample(n + 1, params.theta, rng);
    let unit = sampler.sample(rng)?;
    Ok(LaplaceSample { radius, unit })
}

/// Whether `[U+t, αU+t] ⊆ [rU+t, γαrU+t]` along the ray through `U`, i.e.
/// whether `γ α r <= α` and `1 <= r`.
pub fn coupling_holds(r: f64, alpha: f64, gamma: f64) -> bool {
    gamma * alpha * r <= alpha && 1.0 <= r
}

/// Checks that `x` is a valid dyadic sample point of the cell.
pub fn is_dyadic(x: &[Scalar], bits: u32) -> bool {
    let grid = BigInt::one() << bits as usize;
    x.iter().all(|c| (&grid % c.denom()).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeBasis, Limits};
    use crate::rational::int;
    use crate::voronoi::compute_relevant_vectors;

    fn cell(n: usize) -> VoronoiCellData {
        compute_relevant_vectors(&LatticeBasis::identity(n).unwrap(), &Limits::default()).unwrap()
    }

    #[test]
    fn tuned_constants() {
        for n in 2..20 {
            let t = theta_n(n);
            let g = gamma_n(n);
            assert!(t > 0.0);
            assert!(g > 0.0 && g < 1.0);
            assert!(n as f64 * t > 1.0);
            // 1/γ_n is the upper end of the concentration interval of Γ(n+1, θ_n).
            let m = (n + 1) as f64;
            assert!(((m + (2.0 * m).sqrt()) * t - 1.0 / g).abs() < 1e-12);
            assert!(((m - (2.0 * m).sqrt()) * t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_are_members_and_deterministic() {
        let c = cell(3);
        let cfg = SamplerConfig::new(11, 3);
        let s = UniformSampler::new(&c, cfg.clone()).unwrap();
        let mut r1 = cfg.rng(4);
        let mut r2 = cfg.rng(4);
        for _ in 0..50 {
            let a = s.sample(&mut r1).unwrap();
            let b = s.sample(&mut r2).unwrap();
            assert_eq!(a, b);
            assert!(c.membership(&a));
            assert!(is_dyadic(&a, 128));
        }
        let mut other = cfg.rng(5);
        assert_ne!(
            s.sample(&mut other).unwrap(),
            s.sample(&mut cfg.rng(4)).unwrap()
        );
    }

    #[test]
    fn hit_and_run_stays_inside() {
        let b =
            LatticeBasis::from_columns(vec![vec![int(2), int(0)], vec![int(1), int(2)]]).unwrap();
        let c = compute_relevant_vectors(&b, &Limits::default()).unwrap();
        let mut cfg = SamplerConfig::new(5, 2);
        cfg.method = SamplerMethod::HitAndRun;
        let s = UniformSampler::new(&c, cfg.clone()).unwrap();
        let mut rng = cfg.rng(0);
        for _ in 0..20 {
            let x = s.sample(&mut rng).unwrap();
            assert!(c.membership(&x));
        }
        assert!(hit_and_run_uniform(&c, &cfg).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SamplerConfig::new(0, 2);
        cfg.precision_bits = 16;
        assert!(cfg.validate().is_err());
        let mut cfg = SamplerConfig::new(0, 2);
        cfg.tv_epsilon = 1.0;
        assert!(cfg.validate().is_err());
        assert!(LaplaceParams::new(0.0).is_err());
        assert_eq!(SamplerMethod::default_for(6), SamplerMethod::Rejection);
        assert_eq!(SamplerMethod::default_for(7), SamplerMethod::HitAndRun);
    }

    #[test]
    fn gamma_moments_roughly_right() {
        let mut rng = stream_rng(3, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| gamma_sample(3, 0.5, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn coupling_condition() {
        let g = gamma_n(4);
        assert!(coupling_holds(1.0, 0.1, g));
        assert!(coupling_holds(0.999 / g, 0.1, g));
        assert!(!coupling_holds(0.9, 0.1, g));
        assert!(!coupling_holds(1.0 / g + 1e-6, 0.1, g));
    }
}
