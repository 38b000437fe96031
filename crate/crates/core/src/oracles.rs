//! Property suites for the convex-geometry facts the learners rely on,
//! checked against exact planar oracles or Monte-Carlo volumes. Each suite
//! is deterministic given its seed and returns a [`SuiteReport`].

use crate::baselines::{ellipsoid_volume_factor, Ellipsoid};
use crate::geom::{self, dot, SimRng};
use crate::polytope::{mc_volume, BoundingBox, CutSense, Polytope, PolytopeError};
use crate::projected_volume::ProjectedBody;
use crate::sampling::{mean_stderr, sample_uniform, ChordOracle, SamplerConfig};
use serde::Serialize;
use std::f64::consts::{E, PI, TAU};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &'static str, checks: usize, failures: usize, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            checks,
            failures,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}/{} checks ok; {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.checks - self.failures,
            self.checks,
            self.detail
        )
    }
}

/// Bounded polygon with 3 to 8 edges tangent-ish to the unit circle.
pub fn random_polygon(rng: &mut SimRng) -> Polytope {
    let m = 3 + rng.index(6);
    loop {
        let mut angles: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.0, TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let bounded = angles
            .windows(2)
            .map(|w| w[1] - w[0])
            .chain(std::iter::once(angles[0] + TAU - angles[m - 1]))
            .all(|g| g < 0.95 * PI);
        if !bounded {
            continue;
        }
        let rows: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.3, 1.0)).collect();
        if let Ok(p) = Polytope::new(2, &rows, &b) {
            return p;
        }
    }
}

/// Random cuts of `[−1, 1]^d`, then an axis stretch by factors in `[0.1, 1]`.
pub fn random_body(d: usize, rng: &mut SimRng) -> Polytope {
    let stretch: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.1, 1.0)).collect();
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut r = vec![0.0; d];
            r[i] = sign / stretch[i];
            rows.push(r);
            b.push(1.0);
        }
    }
    for _ in 0..3 * d {
        let u = rng.unit_vector(d);
        rows.push(u.iter().zip(&stretch).map(|(v, s)| v / s).collect());
        b.push(rng.uniform_in(0.3, 1.0));
    }
    Polytope::new(d, &rows, &b).expect("finite rows")
}

fn area_of(p: &Polytope) -> f64 {
    p.exact_polygon().map(|g| g.area).unwrap_or(0.0)
}

fn polygon_width(p: &Polytope, v: &[f64]) -> f64 {
    match p.exact_polygon() {
        Ok(g) if !g.vertices.is_empty() => {
            let proj = g.vertices.iter().map(|q| q[0] * v[0] + q[1] * v[1]);
            let (lo, hi) = proj.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
            hi - lo
        }
        _ => 0.0,
    }
}

/// Sampled centroids of random `Δ(s)` against `s/(k+1)`, plus the exact
/// planar oracle.
pub fn simplex_centroid_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let trials = 50;
    let mut misses = 0;
    let mut worst_z = 0.0f64;
    for t in 0..trials {
        let k = 2 + t % 5;
        let s: Vec<f64> = (0..k).map(|_| rng.uniform_in(0.2, 2.0)).collect();
        let body = Polytope::simplex(&s).expect("positive sides");
        let cfg = SamplerConfig {
            n_samples: 4000,
            ..SamplerConfig::default_for(k)
        };
        let ok = match sample_uniform(&body, &cfg, None, &mut rng) {
            Ok(set) => {
                let (mean, _) = geom::mean_and_covariance(&set.points);
                (0..k).all(|i| {
                    let z = (mean[i] - s[i] / (k as f64 + 1.0)).abs() / mean_stderr(&set.points, i);
                    worst_z = worst_z.max(z);
                    z <= 4.0
                })
            }
            Err(_) => false,
        };
        if !ok {
            misses += 1;
        }
    }
    let rate = (trials - misses) as f64 / trials as f64;

    let mut exact_err = 0.0f64;
    for _ in 0..50 {
        let s = [rng.uniform_in(0.01, 3.0), rng.uniform_in(0.01, 3.0)];
        let g = Polytope::simplex(&s).and_then(|p| p.exact_polygon());
        let err = match g {
            Ok(g) => (g.centroid[0] - s[0] / 3.0).abs().max((g.centroid[1] - s[1] / 3.0).abs()),
            Err(_) => f64::INFINITY,
        };
        exact_err = exact_err.max(err);
    }
    let exact_ok = exact_err <= 1e-10;
    SuiteReport::new(
        "simplex_centroid",
        trials + 50,
        misses + if exact_ok { 0 } else { 1 },
        rate >= 0.95 && exact_ok,
        format!("sampled within 4 stderr in {:.0}% (worst {worst_z:.2}); exact 2D error {exact_err:.1e}", 100.0 * rate),
    )
}

/// Cuts through the exact centroid of random polygons keep an area fraction
/// in `[1/e, 1 − 1/e]`.
pub fn grunbaum_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let (lo, hi) = (1.0 / E - 0.01, 1.0 - 1.0 / E + 0.01);
    let mut failures = 0;
    let mut extreme = (1.0f64, 0.0f64);
    let n = 200;
    for _ in 0..n {
        let p = random_polygon(&mut rng);
        let g = p.exact_polygon().expect("planar body");
        let u = rng.unit_vector(2);
        let c = dot(&u, &g.centroid);
        let below = area_of(&p.with_halfspace_unchecked(&u, c, CutSense::Le)) / g.area;
        let above = area_of(&p.with_halfspace_unchecked(&u, c, CutSense::Ge)) / g.area;
        for f in [below, above] {
            extreme = (extreme.0.min(f), extreme.1.max(f));
            if !(lo..=hi).contains(&f) {
                failures += 1;
            }
        }
    }
    SuiteReport::new(
        "grunbaum",
        2 * n,
        failures,
        failures == 0,
        format!("area fractions in [{:.4}, {:.4}]", extreme.0, extreme.1),
    )
}

/// Both halves of a centroid cut keep at least a third of every width.
pub fn directional_grunbaum_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let mut failures = 0;
    let mut checks = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let p = random_polygon(&mut rng);
        let g = p.exact_polygon().expect("planar body");
        let u = rng.unit_vector(2);
        let c = dot(&u, &g.centroid);
        let halves = [
            p.with_halfspace_unchecked(&u, c, CutSense::Le),
            p.with_halfspace_unchecked(&u, c, CutSense::Ge),
        ];
        for _ in 0..50 {
            let v = rng.unit_vector(2);
            let w = polygon_width(&p, &v);
            for h in &halves {
                let wh = polygon_width(h, &v);
                checks += 1;
                worst = worst.min(wh / w);
                if wh < w / 3.0 - 1e-7 {
                    failures += 1;
                }
            }
        }
    }
    SuiteReport::new(
        "directional_grunbaum",
        checks,
        failures,
        failures == 0,
        format!("smallest width ratio {worst:.4} (bound 1/3)"),
    )
}

/// Shifting the centroid cut by up to `w/(d+1)²` still keeps `e⁻²` of the area.
pub fn approximate_grunbaum_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let mut failures = 0;
    let mut checks = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let p = random_polygon(&mut rng);
        let g = p.exact_polygon().expect("planar body");
        let u = rng.unit_vector(2);
        let w = polygon_width(&p, &u);
        for frac in [0.2, 0.6, 1.0] {
            let shift = frac * w / 9.0;
            let kept = p.with_halfspace_unchecked(&u, dot(&u, &g.centroid) + shift, CutSense::Ge);
            let f = area_of(&kept) / g.area;
            checks += 1;
            worst = worst.min(f);
            if area_of(&kept) < (-2.0f64).exp() * g.area - 1e-7 {
                failures += 1;
            }
        }
    }
    SuiteReport::new(
        "approximate_grunbaum",
        checks,
        failures,
        failures == 0,
        format!("smallest kept fraction {worst:.4} (bound {:.4})", (-2.0f64).exp()),
    )
}

fn min_probe_width(p: &Polytope, rng: &mut SimRng, probes: usize) -> Result<f64, PolytopeError> {
    let d = p.dim();
    let mut best = f64::INFINITY;
    for i in 0..d {
        best = best.min(p.width(&geom::unit(d, i))?);
    }
    for _ in 0..probes {
        best = best.min(p.width(&rng.unit_vector(d))?);
    }
    Ok(best)
}

/// `vol(Π_L K) ≤ d(d+1)/δ̂ · vol(K)` for random bodies in `d = 2, 3` and a
/// random hyperplane `L`, with Monte-Carlo volumes and a 3σ allowance.
pub fn cylindrification_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let n_mc = 20_000;
    let mut failures = 0;
    let mut errors = 0;
    let mut worst = 0.0f64;
    let bodies = 50;
    for t in 0..bodies {
        let d = 2 + t % 2;
        let body = random_body(d, &mut rng);
        let res = (|| -> Result<(f64, f64, f64), PolytopeError> {
            let delta_hat = min_probe_width(&body, &mut rng, 100)?;
            let vol_k = body.mc_volume(&body.bounding_box()?, n_mc, &mut rng)?;
            let s_dir = rng.unit_vector(d);
            let s = geom::gram_schmidt(&[s_dir], d).map_err(|e| PolytopeError::InvalidInput(e.to_string()))?;
            let l = s.complement();
            let proj = ProjectedBody::new(&body, &s, &l);
            let mut lo = Vec::with_capacity(d - 1);
            let mut hi = Vec::with_capacity(d - 1);
            for v in l.iter() {
                let (a, b) = body.range(v)?;
                lo.push(a);
                hi.push(b);
            }
            let vol_p = mc_volume(|y| proj.contains(y), &BoundingBox { lo, hi }, n_mc, &mut rng)?;
            let factor = (d * (d + 1)) as f64 / delta_hat;
            let rhs = factor * vol_k.estimate;
            let sigma = (vol_p.stderr.powi(2) + (factor * vol_k.stderr).powi(2)).sqrt();
            Ok((vol_p.estimate, rhs, sigma))
        })();
        match res {
            Ok((lhs, rhs, sigma)) => {
                worst = worst.max(lhs / rhs);
                if lhs > rhs + 3.0 * sigma {
                    failures += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    SuiteReport::new(
        "cylindrification",
        bodies,
        failures + errors,
        failures + errors == 0,
        format!("largest vol(Π_L K) / bound {worst:.4}; {errors} oracle errors"),
    )
}

/// A body whose probed widths are all at least `δ̂` holds a ball of radius
/// `δ̂/(2d)` (exact planar widths).
pub fn large_ball_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    let n = 100;
    for _ in 0..n {
        let p = random_polygon(&mut rng);
        let delta_hat = (0..100)
            .map(|_| polygon_width(&p, &rng.unit_vector(2)))
            .fold(f64::INFINITY, f64::min);
        match p.chebyshev_center() {
            Ok((_, r)) => {
                worst = worst.min(r / (delta_hat / 4.0));
                if r < delta_hat / 4.0 - 1e-9 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    SuiteReport::new(
        "large_ball",
        n,
        failures,
        failures == 0,
        format!("smallest radius / (δ̂/2d) {worst:.3}"),
    )
}

/// Central-cut ellipsoid updates: exact volume factor for `d = 2..8`, and
/// every step contains 500 sampled points of the kept half.
pub fn ellipsoid_suite(seed: u64) -> SuiteReport {
    let mut rng = SimRng::new(seed);
    let steps = 10;
    let mut checks = 0;
    let mut failures = 0;
    let mut worst_factor = 0.0f64;
    let mut classical_ok = true;
    for d in 2..=8 {
        let expect = ellipsoid_volume_factor(d);
        classical_ok &= expect <= (-1.0 / (2.0 * (d as f64 + 1.0))).exp();
        let mut e = Ellipsoid::ball(vec![0.0; d], 1.0);
        for _ in 0..steps {
            let u = rng.unit_vector(d);
            let kept = if rng.uniform() < 0.5 { CutSense::Le } else { CutSense::Ge };
            let next = e.update(&u, kept);
            let err = (e.volume_ratio_to(&next) - expect).abs();
            worst_factor = worst_factor.max(err);
            checks += 1;
            if err > 1e-10 {
                failures += 1;
            }
            let c = dot(&u, &e.center);
            let mut inside = 0;
            let mut contained = true;
            while inside < 500 {
                let x = e.sample(&mut rng);
                let keep = match kept {
                    CutSense::Le => dot(&u, &x) <= c,
                    CutSense::Ge => dot(&u, &x) >= c,
                };
                if keep {
                    inside += 1;
                    contained &= next.contains(&x, 1e-9);
                }
            }
            checks += 1;
            if !contained {
                failures += 1;
            }
            e = next;
        }
    }
    let f2 = ellipsoid_volume_factor(2);
    SuiteReport::new(
        "ellipsoid",
        checks,
        failures,
        failures == 0 && classical_ok,
        format!(
            "max factor error {worst_factor:.1e}; d=2 factor {f2:.4} vs e^(-1/4) = {:.4}, \
             below e^(-1/(2(d+1))) for all d: {classical_ok}",
            (-0.25f64).exp()
        ),
    )
}

pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    vec![
        simplex_centroid_suite(seed),
        grunbaum_suite(seed),
        directional_grunbaum_suite(seed),
        approximate_grunbaum_suite(seed),
        cylindrification_suite(seed),
        large_ball_suite(seed),
        ellipsoid_suite(seed),
    ]
}
