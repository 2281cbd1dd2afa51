//! Hit-and-run against the rejection sampler in low dimension.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use vornav::lattice::{random_rational_basis, LatticeBasis, Limits};
use vornav::rational::{self, Scalar};
use vornav::sampling::{SamplerConfig, SamplerMethod, UniformSampler};
use vornav::voronoi::{compute_relevant_vectors, VoronoiCellData};

const DRAWS: u64 = 3000;

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn draws(cell: &VoronoiCellData, method: SamplerMethod, seed: u64) -> Vec<Vec<Scalar>> {
    let mut cfg = SamplerConfig::new(seed, cell.dim());
    cfg.method = method;
    let s = UniformSampler::new(cell, cfg.clone()).unwrap();
    (0..DRAWS)
        .into_par_iter()
        .map(|i| s.sample(&mut cfg.rng(i)).unwrap())
        .collect()
}

/// Statistics compared between samplers: the Voronoi norm and each coordinate.
fn features(cell: &VoronoiCellData, xs: &[Vec<Scalar>]) -> Vec<Vec<f64>> {
    let n = cell.dim();
    let mut out = vec![Vec::with_capacity(xs.len()); n + 1];
    for x in xs {
        out[0].push(rational::to_f64(&cell.voronoi_norm(x)));
        for k in 0..n {
            out[k + 1].push(rational::to_f64(&x[k]));
        }
    }
    out
}

fn compare(cell: &VoronoiCellData, seed: u64) -> Vec<f64> {
    let a = features(cell, &draws(cell, SamplerMethod::Rejection, seed));
    let b = features(cell, &draws(cell, SamplerMethod::HitAndRun, seed + 1));
    a.into_iter().zip(b).map(|(x, y)| ks(x, y)).collect()
}

#[test]
fn ks_statistic_basics() {
    assert_eq!(ks(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]), 0.0);
    assert_eq!(ks(vec![0.0, 0.0], vec![1.0, 1.0]), 1.0);
    assert!((ks(vec![0.0, 2.0], vec![1.0, 3.0]) - 0.5).abs() < 1e-12);
}

#[test]
fn hit_and_run_matches_rejection_in_low_dimension() {
    let mut rng = ChaCha20Rng::seed_from_u64(61);
    let lattices = [
        LatticeBasis::identity(2).unwrap(),
        random_rational_basis(&mut rng, 2, 4, 3).unwrap(),
        random_rational_basis(&mut rng, 3, 4, 3).unwrap(),
    ];
    for (li, b) in lattices.iter().enumerate() {
        let cell = compute_relevant_vectors(b, &Limits::default()).unwrap();
        let stats = compare(&cell, 100 * li as u64);
        // Each statistic is a lower bound on total variation distance.
        eprintln!("lattice {li}: KS {stats:.3?}");
        for (k, d) in stats.iter().enumerate() {
            assert!(*d <= 0.1, "lattice {li} feature {k}: KS {d}");
        }
    }
}
