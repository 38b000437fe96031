//! Hit-and-run sampling over convex bodies exposed through a chord oracle,
//! isotropic rounding from a sample cloud, and centroid estimation.

use crate::geom::{self, mean_and_covariance, symmetric_eigen, AffineMap, Matrix, SimRng};
use crate::polytope::{Polytope, PolytopeError, MEMBERSHIP_TOL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Eigenvalue floor for the rounding covariance (a spread of about 1e-13,
/// below the degeneracy radius).
pub const EIGEN_FLOOR: f64 = 1e-26;
/// Chords shorter than this (in walk units) leave the point unchanged.
const DEGENERATE_CHORD: f64 = 1e-15;
const MAX_ROUNDING_STAGES: usize = 8;
/// Batches used by the batch-means standard error.
const BATCHES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error(transparent)]
    Body(#[from] PolytopeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub n_samples: usize,
    pub rounding: bool,
}

impl SamplerConfig {
    /// Default budget for dimension `d`: burn-in `50d²`, thinning `d`,
    /// `max(1000, 100d)` samples, rounding on.
    pub fn default_for(d: usize) -> Self {
        let d = d.max(1);
        Self {
            burn_in: 50 * d * d,
            thinning: d,
            n_samples: (100 * d).max(1000),
            rounding: true,
        }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.thinning == 0 {
            return Err(SamplingError::InvalidConfig("thinning must be ≥ 1".into()));
        }
        if self.n_samples == 0 {
            return Err(SamplingError::InvalidConfig("n_samples must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Convex body reachable only through line queries.
pub trait ChordOracle {
    fn dim(&self) -> usize;
    /// `{t : x + t·dir ∈ body}`; `dir` need not be unit.
    fn chord(&self, x: &[f64], dir: &[f64]) -> Result<(f64, f64), PolytopeError>;
    fn contains(&self, x: &[f64]) -> bool;
    /// Some strictly interior point, used when no warm start is supplied.
    fn interior_point(&self) -> Result<Vec<f64>, PolytopeError>;
}

impl ChordOracle for Polytope {
    fn dim(&self) -> usize {
        Polytope::dim(self)
    }

    fn chord(&self, x: &[f64], dir: &[f64]) -> Result<(f64, f64), PolytopeError> {
        self.chord_unnormalized(x, dir)
    }

    fn contains(&self, x: &[f64]) -> bool {
        Polytope::contains(self, x, MEMBERSHIP_TOL)
    }

    fn interior_point(&self) -> Result<Vec<f64>, PolytopeError> {
        Ok(self.chebyshev_center()?.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStats {
    pub steps: u64,
    pub degenerate_chords: u64,
}

/// One step with the direction and chord position supplied by the caller.
pub fn hit_and_run_step_with<B: ChordOracle + ?Sized>(
    body: &B,
    x: &[f64],
    dir: &[f64],
    frac: f64,
    stats: &mut WalkStats,
) -> Result<Vec<f64>, PolytopeError> {
    stats.steps += 1;
    let (lo, hi) = body.chord(x, dir)?;
    if hi - lo <= DEGENERATE_CHORD {
        stats.degenerate_chords += 1;
        return Ok(x.to_vec());
    }
    let t = lo + frac * (hi - lo);
    let mut y = x.to_vec();
    geom::axpy(t, dir, &mut y);
    Ok(y)
}

/// One hit-and-run step; the direction is uniform in the coordinates of `t`.
pub fn hit_and_run_step<B: ChordOracle + ?Sized>(
    body: &B,
    x: &[f64],
    t: &AffineMap,
    rng: &mut SimRng,
    stats: &mut WalkStats,
) -> Result<Vec<f64>, PolytopeError> {
    let w = rng.unit_vector(body.dim());
    let dir = geom::normalized(&t.pull_direction(&w)).unwrap_or(w);
    let frac = rng.uniform();
    hit_and_run_step_with(body, x, &dir, frac, stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub stats: WalkStats,
    /// Rounding used for the main run.
    pub transform: AffineMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub map: AffineMap,
    /// Covariance fell below [`EIGEN_FLOOR`]; `map` is the identity.
    pub flagged: bool,
}

/// Uniform samples; with `cfg.rounding` a pilot run supplies the rounding.
pub fn sample_uniform<B: ChordOracle + ?Sized>(
    body: &B,
    cfg: &SamplerConfig,
    warm: Option<&[f64]>,
    rng: &mut SimRng,
) -> Result<SampleSet, SamplingError> {
    sample_uniform_with(body, cfg, warm, None, rng)
}

/// As [`sample_uniform`], walking in the coordinates of `transform` when
/// given (no pilot run is made in that case).
pub fn sample_uniform_with<B: ChordOracle + ?Sized>(
    body: &B,
    cfg: &SamplerConfig,
    warm: Option<&[f64]>,
    transform: Option<&AffineMap>,
    rng: &mut SimRng,
) -> Result<SampleSet, SamplingError> {
    cfg.validate()?;
    let d = body.dim();
    let mut x = match warm {
        Some(w) if body.contains(w) => w.to_vec(),
        _ => body.interior_point()?,
    };
    let mut stats = WalkStats::default();

    let map = match transform {
        Some(t) => t.clone(),
        None if cfg.rounding && d > 1 => {
            let pilot_n = (20 * d).max(100);
            let mut map = AffineMap::identity(d);
            for _ in 0..cfg.burn_in {
                x = hit_and_run_step(body, &x, &map, rng, &mut stats)?;
            }
            // Each stage whitens the cloud drawn under the previous map;
            // stop once that cloud was already close to isotropic.
            for _ in 0..MAX_ROUNDING_STAGES {
                let mut pilot = Vec::with_capacity(pilot_n);
                for _ in 0..pilot_n {
                    for _ in 0..cfg.thinning {
                        x = hit_and_run_step(body, &x, &map, rng, &mut stats)?;
                    }
                    pilot.push(x.clone());
                }
                let spread = eigen_spread(&pilot, &map);
                let next = rounding_transform(&pilot)?;
                if next.flagged {
                    break;
                }
                map = next.map;
                if spread <= 4.0 {
                    break;
                }
            }
            map
        }
        None => AffineMap::identity(d),
    };

    for _ in 0..cfg.burn_in {
        x = hit_and_run_step(body, &x, &map, rng, &mut stats)?;
    }
    let mut points = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        for _ in 0..cfg.thinning {
            x = hit_and_run_step(body, &x, &map, rng, &mut stats)?;
        }
        points.push(x.clone());
    }
    Ok(SampleSet {
        points,
        stats,
        transform: map,
    })
}

/// Largest over smallest covariance eigenvalue of `points` seen through `map`.
fn eigen_spread(points: &[Vec<f64>], map: &AffineMap) -> f64 {
    let mapped: Vec<Vec<f64>> = points.iter().map(|p| map.apply(p)).collect();
    let (_, cov) = mean_and_covariance(&mapped);
    match symmetric_eigen(&cov) {
        Ok((vals, _)) if vals[0] > 0.0 => vals[vals.len() - 1] / vals[0],
        _ => f64::INFINITY,
    }
}

/// Affine map whitening the sample cloud: mean to the origin, covariance to
/// the identity.
pub fn rounding_transform(samples: &[Vec<f64>]) -> Result<Rounding, SamplingError> {
    let d = samples.first().map_or(0, Vec::len);
    if samples.len() < 10 * d.max(1) {
        return Err(SamplingError::InsufficientSamples {
            needed: 10 * d.max(1),
            got: samples.len(),
        });
    }
    let (mean, cov) = mean_and_covariance(samples);
    let (vals, vecs) = match symmetric_eigen(&cov) {
        Ok(e) => e,
        Err(_) => {
            return Ok(Rounding {
                map: AffineMap::identity(d),
                flagged: true,
            })
        }
    };
    if vals.first().map_or(true, |&v| !(v > EIGEN_FLOOR)) {
        log::debug!("rounding covariance below floor: {:?}", vals.first());
        return Ok(Rounding {
            map: AffineMap::identity(d),
            flagged: true,
        });
    }
    let mut matrix = Matrix::zeros(d, d);
    let mut inverse = Matrix::zeros(d, d);
    for k in 0..d {
        let s = vals[k].sqrt();
        for i in 0..d {
            for j in 0..d {
                let vv = vecs[(i, k)] * vecs[(j, k)];
                matrix[(i, j)] += vv / s;
                inverse[(i, j)] += vv * s;
            }
        }
    }
    Ok(Rounding {
        map: AffineMap {
            matrix,
            inverse,
            offset: mean,
        },
        flagged: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidEstimate {
    pub z: Vec<f64>,
    pub n: usize,
    /// Largest per-coordinate standard error of the mean ([`mean_stderr`]).
    pub stderr_bound: f64,
}

/// Sample mean and its standard-error proxy, pulled back into the body along
/// the segment towards an interior point if rounding pushed it outside.
pub fn centroid_from_samples<B: ChordOracle + ?Sized>(
    body: &B,
    points: &[Vec<f64>],
) -> Result<CentroidEstimate, SamplingError> {
    if points.is_empty() {
        return Err(SamplingError::InsufficientSamples { needed: 1, got: 0 });
    }
    let (mut z, _) = mean_and_covariance(points);
    let n = points.len();
    let stderr_bound = (0..z.len())
        .map(|i| mean_stderr(points, i))
        .fold(0.0, f64::max);
    if !body.contains(&z) {
        let c = body.interior_point()?;
        let dir = geom::sub(&z, &c);
        let (_, hi) = body.chord(&c, &dir)?;
        let lambda = hi.min(1.0) * (1.0 - 1e-12);
        z = c;
        geom::axpy(lambda, &dir, &mut z);
    }
    Ok(CentroidEstimate { z, n, stderr_bound })
}

/// Standard error of the mean of coordinate `i` along a chain: the larger of
/// the independent-draw formula and the batch-means estimate, which also
/// absorbs the autocorrelation left after thinning.
pub fn mean_stderr(points: &[Vec<f64>], i: usize) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mean = points.iter().map(|p| p[i]).sum::<f64>() / n as f64;
    let var = points.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let iid = (var / n as f64).sqrt();
    if n < 2 * BATCHES {
        return iid;
    }
    let size = n / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|b| points[b * size..(b + 1) * size].iter().map(|p| p[i]).sum::<f64>() / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / BATCHES as f64;
    let bvar = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    iid.max((bvar / BATCHES as f64).sqrt())
}

pub fn estimate_centroid<B: ChordOracle + ?Sized>(
    body: &B,
    cfg: &SamplerConfig,
    rng: &mut SimRng,
) -> Result<CentroidEstimate, SamplingError> {
    let set = sample_uniform(body, cfg, None, rng)?;
    centroid_from_samples(body, &set.points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, burn: usize, thin: usize) -> SamplerConfig {
        SamplerConfig {
            burn_in: burn,
            thinning: thin,
            n_samples: n,
            rounding: true,
        }
    }

    fn stderr_of(points: &[Vec<f64>], i: usize) -> f64 {
        mean_stderr(points, i)
    }

    #[test]
    fn deterministic_step() {
        let p = Polytope::cube(1, -1.0, 1.0);
        let mut st = WalkStats::default();
        let y = hit_and_run_step_with(&p, &[0.0], &[1.0], 0.75, &mut st).unwrap();
        assert_eq!(y, vec![0.5]);
        assert_eq!(st, WalkStats { steps: 1, degenerate_chords: 0 });
    }

    #[test]
    fn degenerate_chord_keeps_point() {
        // segment {x ≤ 0, x ≥ 0} in 1-D
        let p = Polytope::cube(1, 0.0, 0.0);
        let mut st = WalkStats::default();
        let y = hit_and_run_step_with(&p, &[0.0], &[1.0], 0.3, &mut st).unwrap();
        assert_eq!(y, vec![0.0]);
        assert_eq!(st.degenerate_chords, 1);
    }

    #[test]
    fn cube_walk_is_centered() {
        let p = Polytope::cube(3, -1.0, 1.0);
        let mut rng = SimRng::new(5);
        let id = AffineMap::identity(3);
        let mut st = WalkStats::default();
        let mut x = vec![0.0; 3];
        let mut pts = Vec::new();
        for _ in 0..100_000 {
            x = hit_and_run_step(&p, &x, &id, &mut rng, &mut st).unwrap();
            assert!(p.contains(&x, 1e-9));
            pts.push(x.clone());
        }
        // Consecutive steps are correlated; thin before forming the error bar.
        let thinned: Vec<Vec<f64>> = pts.iter().step_by(10).cloned().collect();
        let (mean, _) = mean_and_covariance(&thinned);
        for i in 0..3 {
            assert!(mean[i].abs() <= 3.0 * stderr_of(&thinned, i), "coord {i}: {}", mean[i]);
        }
    }

    #[test]
    fn square_covariance() {
        let p = Polytope::cube(2, -1.0, 1.0);
        let mut rng = SimRng::new(1);
        let s = sample_uniform(&p, &cfg(2000, 500, 5), None, &mut rng).unwrap();
        assert_eq!(s.points.len(), 2000);
        let (_, cov) = mean_and_covariance(&s.points);
        // var of U[-1,1]^2 sample variance: (E x^4 − σ⁴)/n = (1/5 − 1/9)/n
        let se_var = ((0.2 - 1.0 / 9.0) / 2000.0f64).sqrt();
        // E[x²y²] = 1/9 for the off-diagonal
        let se_cov = (1.0 / 9.0 / 2000.0f64).sqrt();
        assert!((cov[(0, 0)] - 1.0 / 3.0).abs() <= 3.0 * se_var);
        assert!((cov[(1, 1)] - 1.0 / 3.0).abs() <= 3.0 * se_var);
        assert!(cov[(0, 1)].abs() <= 3.0 * se_cov);
    }

    #[test]
    fn triangle_and_rectangle_means() {
        let mut rng = SimRng::new(2);
        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let s = sample_uniform(&tri, &cfg(5000, 200, 2), None, &mut rng).unwrap();
        let (m, _) = mean_and_covariance(&s.points);
        for i in 0..2 {
            assert!((m[i] - 1.0 / 3.0).abs() <= 3.0 * stderr_of(&s.points, i));
        }
        let rect = Polytope::axis_box(&[0.0, 0.0], &[2.0, 1.0]);
        let s = sample_uniform(&rect, &cfg(5000, 200, 2), None, &mut rng).unwrap();
        let (m, _) = mean_and_covariance(&s.points);
        assert!((m[0] - 1.0).abs() <= 3.0 * stderr_of(&s.points, 0));
        assert!((m[1] - 0.5).abs() <= 3.0 * stderr_of(&s.points, 1));
    }

    #[test]
    fn sampling_is_deterministic() {
        let tri = Polytope::simplex(&[1.0, 2.0, 0.5]).unwrap();
        let c = cfg(200, 50, 3);
        let a = sample_uniform(&tri, &c, None, &mut SimRng::new(9)).unwrap();
        let b = sample_uniform(&tri, &c, None, &mut SimRng::new(9)).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn centroid_examples() {
        let mut rng = SimRng::new(3);
        for d in 1..=6 {
            let cube = Polytope::cube(d, -1.0, 1.0);
            let est = estimate_centroid(&cube, &SamplerConfig::default_for(d), &mut rng).unwrap();
            let inf = est.z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(inf <= 3.0 * est.stderr_bound, "d={d}: {inf} vs {}", est.stderr_bound);
            assert_eq!(est.n, SamplerConfig::default_for(d).n_samples);
        }
        let tri = Polytope::simplex(&[3.0, 6.0]).unwrap();
        let est = estimate_centroid(&tri, &SamplerConfig::default_for(2), &mut rng).unwrap();
        assert!((est.z[0] - 1.0).abs() <= 3.0 * est.stderr_bound);
        assert!((est.z[1] - 2.0).abs() <= 3.0 * est.stderr_bound);

        let tet = Polytope::simplex(&[1.0, 1.0, 1.0]).unwrap();
        let est = estimate_centroid(&tet, &SamplerConfig::default_for(3), &mut rng).unwrap();
        for i in 0..3 {
            assert!((est.z[i] - 0.25).abs() <= 3.0 * est.stderr_bound);
        }
    }

    #[test]
    fn centroid_consistency_rate() {
        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let c = cfg(1000, 100, 4);
        let mut ok = 0;
        for seed in 0..100 {
            let est = estimate_centroid(&tri, &c, &mut SimRng::new(seed)).unwrap();
            if est.z.iter().all(|&z| (z - 1.0 / 3.0).abs() <= 4.0 * est.stderr_bound) {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/100");
    }

    #[test]
    fn centroid_is_repaired_into_the_body() {
        // A cloud whose mean sits outside the triangle.
        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let pts = vec![vec![0.9, 0.9]; 4];
        let est = centroid_from_samples(&tri, &pts).unwrap();
        assert!(tri.contains(&est.z, 1e-9));
    }

    #[test]
    fn rounding_examples() {
        let mut rng = SimRng::new(4);
        let sq = Polytope::cube(2, -1.0, 1.0);
        let s = sample_uniform(&sq, &cfg(4000, 200, 2), None, &mut rng).unwrap();
        let r = rounding_transform(&s.points).unwrap();
        assert!(!r.flagged);
        let expect = 3.0f64.sqrt();
        assert!((r.map.matrix[(0, 0)] - expect).abs() < 0.1 * expect);
        assert!((r.map.matrix[(1, 1)] - expect).abs() < 0.1 * expect);
        assert!(r.map.matrix[(0, 1)].abs() < 0.1);

        let white: Vec<Vec<f64>> = s.points.iter().map(|p| r.map.apply(p)).collect();
        let again = rounding_transform(&white).unwrap();
        let dev = again.map.matrix.sub(&Matrix::identity(2)).frobenius();
        assert!(dev < 1e-8, "{dev}");

        let slab = Polytope::axis_box(&[0.0, 0.0], &[10.0, 0.1]);
        let s = sample_uniform(&slab, &cfg(4000, 200, 2), None, &mut rng).unwrap();
        let r = rounding_transform(&s.points).unwrap();
        let mapped: Vec<Vec<f64>> = s.points.iter().map(|p| r.map.apply(p)).collect();
        let (_, cov) = mean_and_covariance(&mapped);
        for i in 0..2 {
            assert!((cov[(i, i)] - 1.0).abs() < 0.1);
        }
        assert!(cov[(0, 1)].abs() < 0.1);

        assert!(matches!(
            rounding_transform(&s.points[..5]),
            Err(SamplingError::InsufficientSamples { .. })
        ));
        let flat = vec![vec![1.0, 2.0]; 40];
        assert!(rounding_transform(&flat).unwrap().flagged);
    }

    #[test]
    fn rounding_handles_skewed_boxes() {
        let mut rng = SimRng::new(8);
        for k in 0..5 {
            let aspect = 10f64.powi(k);
            let bx = Polytope::axis_box(&[0.0, 0.0, 0.0], &[aspect, 1.0, rng.uniform_in(0.5, 2.0)]);
            let s = sample_uniform(&bx, &cfg(2000, 300, 3), None, &mut rng).unwrap();
            let r = rounding_transform(&s.points).unwrap();
            let mapped: Vec<Vec<f64>> = s.points.iter().map(|p| r.map.apply(p)).collect();
            // resample in the rounded frame and check the spread of the spectrum
            let s2 = sample_uniform_with(&bx, &cfg(2000, 300, 3), None, Some(&r.map), &mut rng).unwrap();
            let mapped2: Vec<Vec<f64>> = s2.points.iter().map(|p| r.map.apply(p)).collect();
            for cloud in [mapped, mapped2] {
                let (_, cov) = mean_and_covariance(&cloud);
                let (vals, _) = symmetric_eigen(&cov).unwrap();
                assert!(vals[2] / vals[0] <= 4.0, "aspect {aspect}: {vals:?}");
            }
        }
    }

    #[test]
    fn samples_stay_inside() {
        let mut rng = SimRng::new(6);
        let tri = Polytope::simplex(&[1e-3, 1.0, 5.0]).unwrap();
        let s = sample_uniform(&tri, &cfg(500, 100, 3), None, &mut rng).unwrap();
        for p in &s.points {
            assert!(tri.contains(p, 1e-9));
        }
    }
}
