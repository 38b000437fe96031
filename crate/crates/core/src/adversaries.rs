//! Environments: a hidden fixed `θ` with random or greedy directions, and
//! adaptive adversaries that answer from a consistent set and commit to `θ*`
//! only after the run.

use crate::geom::{self, dot, symmetric_eigen, SimRng};
use crate::learner::{KnowledgeView, Side};
use crate::lp::Sense;
use crate::polytope::{InitialBody, Polytope, PolytopeError};
use crate::sampling::{sample_uniform, SamplerConfig};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("adversary only supports axis-aligned directions")]
    UnsupportedDirection,
    #[error("consistent set became empty: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Body(#[from] PolytopeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    FixedRandom,
    RoundRobinAdaptive,
    SimplexCounterexample,
    GreedyWidth,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] = [
        AdversaryKind::FixedRandom,
        AdversaryKind::RoundRobinAdaptive,
        AdversaryKind::SimplexCounterexample,
        AdversaryKind::GreedyWidth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdversaryKind::FixedRandom => "fixed_random",
            AdversaryKind::RoundRobinAdaptive => "round_robin_adaptive",
            AdversaryKind::SimplexCounterexample => "simplex_counterexample",
            AdversaryKind::GreedyWidth => "greedy_width",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, AdversaryKind::RoundRobinAdaptive | AdversaryKind::SimplexCounterexample)
    }

    /// Starting knowledge set the learners should use against this adversary.
    pub fn initial_body(self) -> InitialBody {
        if self.is_adaptive() {
            InitialBody::UnitBoxScaled
        } else {
            InitialBody::InscribedCube
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdversaryKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown adversary '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub side: Side,
    /// `None` while the hidden value is not yet fixed.
    pub mistake: Option<bool>,
}

pub trait Environment {
    fn kind(&self) -> AdversaryKind;
    fn dim(&self) -> usize;
    /// The next query direction, or `None` once the adversary has nothing
    /// left to ask.
    fn next_direction(&mut self, t: usize, view: KnowledgeView<'_>) -> Result<Option<Vec<f64>>, AdversaryError>;
    fn respond(&mut self, u: &[f64], x: f64) -> Result<RoundOutcome, AdversaryError>;
    /// The hidden point of a fixed-`θ` environment.
    fn theta(&self) -> Option<&[f64]>;
    /// Commits to `θ*` at the end of an adaptive run.
    fn finalize(&mut self) -> Result<Option<Vec<f64>>, AdversaryError>;
}

/// `x ≤ uᵀθ` reports `Below` (ties included); a mistake is `|x − uᵀθ| > ε`.
pub fn fixed_theta_feedback(theta: &[f64], u: &[f64], x: f64, epsilon: f64) -> RoundOutcome {
    let v = dot(u, theta);
    RoundOutcome {
        side: if x <= v { Side::Below } else { Side::Above },
        mistake: Some((x - v).abs() > epsilon),
    }
}

/// `e_{(t mod d) + 1}`
pub fn round_robin_directions(d: usize, t: usize) -> Vec<f64> {
    geom::unit(d, t % d)
}

/// Uniform point of `[−1/√d, 1/√d]^d`.
pub fn random_theta(d: usize, rng: &mut SimRng) -> Vec<f64> {
    let h = 1.0 / (d as f64).sqrt();
    (0..d).map(|_| rng.uniform_in(-h, h)).collect()
}

/// The unit direction of maximum width among `n_probe` random directions and
/// the principal axes of the knowledge set.
pub fn greedy_width_adversary(
    view: KnowledgeView<'_>,
    n_probe: usize,
    rng: &mut SimRng,
) -> Result<Vec<f64>, AdversaryError> {
    let d = match view {
        KnowledgeView::Polytope(p) => p.dim(),
        KnowledgeView::Ellipsoid(e) => e.dim(),
    };
    let mut probes: Vec<Vec<f64>> = (0..n_probe).map(|_| rng.unit_vector(d)).collect();
    let axes = match view {
        KnowledgeView::Polytope(p) => {
            let cfg = SamplerConfig {
                burn_in: 10 * d,
                thinning: 1,
                n_samples: (20 * d).max(40),
                rounding: false,
            };
            let set = sample_uniform(p, &cfg, None, rng).map_err(|e| match e {
                crate::sampling::SamplingError::Body(b) => AdversaryError::Body(b),
                other => AdversaryError::Inconsistent(other.to_string()),
            })?;
            let (_, cov) = geom::mean_and_covariance(&set.points);
            symmetric_eigen(&cov).ok().map(|(_, v)| v)
        }
        KnowledgeView::Ellipsoid(e) => symmetric_eigen(&e.shape).ok().map(|(_, v)| v),
    };
    if let Some(v) = axes {
        probes.extend((0..d).map(|j| v.column(j)));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for u in probes {
        let Some(u) = geom::normalized(&u) else { continue };
        let w = match view {
            KnowledgeView::Polytope(p) => p.width(&u)?,
            KnowledgeView::Ellipsoid(e) => e.width(&u),
        };
        if best.as_ref().map_or(true, |(bw, _)| w > *bw) {
            best = Some((w, u));
        }
    }
    Ok(best.map(|(_, u)| u).unwrap_or_else(|| geom::unit(d, 0)))
}

/// Hidden `θ` drawn once; directions are uniform or greedy.
pub struct FixedTheta {
    kind: AdversaryKind,
    theta: Vec<f64>,
    epsilon: f64,
    rng: SimRng,
    n_probe: usize,
}

impl FixedTheta {
    pub fn new(kind: AdversaryKind, d: usize, epsilon: f64, mut rng: SimRng) -> Self {
        let theta = random_theta(d, &mut rng);
        Self::with_theta(kind, theta, epsilon, rng)
    }

    pub fn with_theta(kind: AdversaryKind, theta: Vec<f64>, epsilon: f64, rng: SimRng) -> Self {
        let d = theta.len();
        Self {
            kind,
            theta,
            epsilon,
            rng,
            n_probe: 4 * d,
        }
    }
}

impl Environment for FixedTheta {
    fn kind(&self) -> AdversaryKind {
        self.kind
    }

    fn dim(&self) -> usize {
        self.theta.len()
    }

    fn next_direction(&mut self, _t: usize, view: KnowledgeView<'_>) -> Result<Option<Vec<f64>>, AdversaryError> {
        let d = self.theta.len();
        Ok(Some(match self.kind {
            AdversaryKind::GreedyWidth => greedy_width_adversary(view, self.n_probe, &mut self.rng)?,
            _ => self.rng.unit_vector(d),
        }))
    }

    fn respond(&mut self, u: &[f64], x: f64) -> Result<RoundOutcome, AdversaryError> {
        Ok(fixed_theta_feedback(&self.theta, u, x, self.epsilon))
    }

    fn theta(&self) -> Option<&[f64]> {
        Some(&self.theta)
    }

    fn finalize(&mut self) -> Result<Option<Vec<f64>>, AdversaryError> {
        Ok(None)
    }
}

/// Index and sign of an axis-aligned unit vector.
fn axis_of(u: &[f64]) -> Option<(usize, f64)> {
    let mut found = None;
    for (i, &v) in u.iter().enumerate() {
        if v.abs() > 1e-12 {
            if found.is_some() || (v.abs() - 1.0).abs() > 1e-12 {
                return None;
            }
            found = Some((i, v.signum()));
        }
    }
    found
}

/// Keeps whichever side of `x` leaves the longer interval on the probed
/// coordinate (ties go `Below`). Returns the side and the updated box.
pub fn adaptive_bisection_feedback(
    lo: &[f64],
    hi: &[f64],
    u: &[f64],
    x: f64,
) -> Result<(Side, Vec<f64>, Vec<f64>), AdversaryError> {
    let (i, sign) = axis_of(u).ok_or(AdversaryError::UnsupportedDirection)?;
    // uᵀθ = sign·θ_i; `Below` keeps sign·θ_i ≥ x.
    let (below, above) = if sign > 0.0 {
        ((lo[i].max(x), hi[i]), (lo[i], hi[i].min(x)))
    } else {
        ((lo[i], hi[i].min(-x)), (lo[i].max(-x), hi[i]))
    };
    let len = |r: (f64, f64)| (r.1 - r.0).max(0.0);
    let (side, keep) = if len(below) >= len(above) {
        (Side::Below, below)
    } else {
        (Side::Above, above)
    };
    let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
    lo[i] = keep.0;
    hi[i] = keep.1;
    Ok((side, lo, hi))
}

/// Round-robin axis queries answered by adaptive bisection over the box
/// `[0, 1/√d]^d`.
pub struct RoundRobinAdaptive {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl RoundRobinAdaptive {
    pub fn new(d: usize) -> Self {
        Self::with_box(vec![0.0; d], vec![1.0 / (d as f64).sqrt(); d])
    }

    pub fn with_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn consistent_set(&self) -> Polytope {
        Polytope::axis_box(&self.lo, &self.hi)
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }
}

impl Environment for RoundRobinAdaptive {
    fn kind(&self) -> AdversaryKind {
        AdversaryKind::RoundRobinAdaptive
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn next_direction(&mut self, t: usize, _view: KnowledgeView<'_>) -> Result<Option<Vec<f64>>, AdversaryError> {
        Ok(Some(round_robin_directions(self.lo.len(), t)))
    }

    fn respond(&mut self, u: &[f64], x: f64) -> Result<RoundOutcome, AdversaryError> {
        let (side, lo, hi) = adaptive_bisection_feedback(&self.lo, &self.hi, u, x)?;
        // below this resolution the box is kept as is; the answer is still
        // consistent with θ* up to 1e-12
        if lo.iter().zip(&hi).any(|(l, h)| h - l <= 2e-12) {
            return Ok(RoundOutcome { side, mistake: None });
        }
        self.lo = lo;
        self.hi = hi;
        Ok(RoundOutcome { side, mistake: None })
    }

    fn theta(&self) -> Option<&[f64]> {
        None
    }

    /// The box midpoint, which is its Chebyshev center.
    fn finalize(&mut self) -> Result<Option<Vec<f64>>, AdversaryError> {
        Ok(Some(self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()))
    }
}

/// Chebyshev center of a consistent set.
pub fn finalize_theta(consistent: &Polytope) -> Result<Vec<f64>, AdversaryError> {
    match consistent.chebyshev_center() {
        Ok((c, _)) => Ok(c),
        Err(e) => Err(AdversaryError::Inconsistent(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SimplexStep {
    /// Shrink the `k`-th simplex side along `e_k`.
    Squash,
    /// One bent cut carving a `(k+1)`-simplex.
    Carve,
    /// Cut along `e_{k+1}` until the part outside the new simplex is gone;
    /// `facet` holds `(oᵢ, ŝᵢ)` of the old simplex.
    Trim { facet: Vec<(f64, f64)> },
    Done,
}

/// Per-phase bookkeeping, reported for diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseLog {
    pub k: usize,
    pub squash_rounds: usize,
    pub carve_rounds: usize,
    pub trim_rounds: usize,
    /// Simplex side along `e_k` when squashing stopped.
    pub final_side: f64,
}

/// Stalled rounds tolerated before a step is abandoned.
const STALL_LIMIT: usize = 3;
/// Hard cap on rounds spent in one step.
const STEP_CAP: usize = 400;
/// Facet level below which the trimming step is complete.
const TRIM_LEVEL: f64 = 1.0 - 1e-7;
/// Default tilt of the carving cut. With margin `η` the cut through the exact
/// centroid meets the top of the box at `F = −η·k/(k+1)` instead of at the
/// apex, so a sampled centroid that lands slightly outward still leaves a
/// clean simplex instead of one with a truncated apex.
pub const APEX_MARGIN: f64 = 0.1;

/// Drives a centroid-style learner through a sequence of simplices of
/// growing dimension, starting from `[0, 1/√d]^d`, reading the learner's
/// knowledge set to place each query.
pub struct SimplexCounterexample {
    d: usize,
    epsilon: f64,
    consistent: Polytope,
    k: usize,
    step: SimplexStep,
    forced: Option<Side>,
    step_rounds: usize,
    stall: usize,
    last_progress: f64,
    apex_margin: f64,
    pub phases: Vec<PhaseLog>,
}

impl SimplexCounterexample {
    pub fn new(d: usize, epsilon: f64) -> Self {
        let h = 1.0 / (d as f64).sqrt();
        Self {
            d,
            epsilon,
            consistent: Polytope::cube(d, 0.0, h),
            k: 1,
            step: SimplexStep::Squash,
            forced: None,
            step_rounds: 0,
            stall: 0,
            last_progress: f64::INFINITY,
            apex_margin: APEX_MARGIN,
            phases: vec![PhaseLog {
                k: 1,
                ..PhaseLog::default()
            }],
        }
    }

    /// `0` gives the untilted cut `v ∝ ((k+1)/(2k)/ŝ₁, …, 1/w_{k+1})`.
    pub fn with_apex_margin(mut self, margin: f64) -> Self {
        self.apex_margin = margin.max(0.0);
        self
    }

    pub fn consistent_set(&self) -> &Polytope {
        &self.consistent
    }

    pub fn phase(&self) -> usize {
        self.k
    }

    /// `2εk/(k+1)`: squashing stops once the side is this small.
    fn squash_target(&self, k: usize) -> f64 {
        2.0 * self.epsilon * k as f64 / (k as f64 + 1.0)
    }

    fn enter(&mut self, step: SimplexStep) {
        self.step = step;
        self.step_rounds = 0;
        self.stall = 0;
        self.last_progress = f64::INFINITY;
    }

    /// Counts a round without progress on `value`; `true` when the step
    /// should be abandoned.
    fn stalled(&mut self, value: f64) -> bool {
        if value < self.last_progress * (1.0 - 1e-9) {
            self.stall = 0;
        } else {
            self.stall += 1;
        }
        self.last_progress = value;
        self.stall >= STALL_LIMIT || self.step_rounds >= STEP_CAP
    }

    fn log(&mut self) -> &mut PhaseLog {
        self.phases.last_mut().expect("one phase is always open")
    }

    fn facet_max(body: &Polytope, facet: &[(f64, f64)]) -> Result<f64, PolytopeError> {
        let d = body.dim();
        let mut c = vec![0.0; d];
        let mut offset = 0.0;
        for (i, &(o, s)) in facet.iter().enumerate() {
            c[i] = 1.0 / s;
            offset += o / s;
        }
        let r = body.lp_solve(&c, Sense::Max);
        if !r.is_optimal() {
            return Err(PolytopeError::Lp(r.status));
        }
        Ok(r.value - offset)
    }
}

impl Environment for SimplexCounterexample {
    fn kind(&self) -> AdversaryKind {
        AdversaryKind::SimplexCounterexample
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn next_direction(&mut self, _t: usize, view: KnowledgeView<'_>) -> Result<Option<Vec<f64>>, AdversaryError> {
        let body = match view {
            KnowledgeView::Polytope(p) => p.clone(),
            KnowledgeView::Ellipsoid(_) => self.consistent.clone(),
        };
        loop {
            match self.step.clone() {
                SimplexStep::Done => return Ok(None),
                SimplexStep::Squash => {
                    let k = self.k;
                    let s_k = body.width(&geom::unit(self.d, k - 1))?;
                    let stalled = self.step_rounds > 0 && self.stalled(s_k);
                    if s_k > self.squash_target(k) && !stalled {
                        self.step_rounds += 1;
                        self.log().squash_rounds += 1;
                        self.forced = Some(Side::Below);
                        return Ok(Some(geom::unit(self.d, k - 1)));
                    }
                    self.log().final_side = s_k;
                    if k == self.d {
                        self.enter(SimplexStep::Done);
                    } else {
                        self.enter(SimplexStep::Carve);
                    }
                }
                SimplexStep::Carve => {
                    let k = self.k;
                    let kf = k as f64;
                    let mut facet = Vec::with_capacity(k);
                    let mut v = vec![0.0; self.d];
                    for i in 0..k {
                        let (o, hi) = body.range(&geom::unit(self.d, i))?;
                        let s = (hi - o).max(1e-300);
                        facet.push((o, s));
                        v[i] = (kf + 1.0) / (2.0 * kf * (1.0 + self.apex_margin)) / s;
                    }
                    let w = body.width(&geom::unit(self.d, k))?.max(1e-300);
                    v[k] = 1.0 / w;
                    let v = geom::normalized(&v).ok_or_else(|| AdversaryError::Inconsistent("zero carve direction".into()))?;
                    self.log().carve_rounds += 1;
                    self.enter(SimplexStep::Trim { facet });
                    self.forced = Some(Side::Above);
                    return Ok(Some(v));
                }
                SimplexStep::Trim { facet } => {
                    let k = self.k;
                    let level = Self::facet_max(&body, &facet)?;
                    let w_next = body.width(&geom::unit(self.d, k))?;
                    let stalled = self.step_rounds > 0 && self.stalled(w_next);
                    if level >= TRIM_LEVEL && w_next > self.squash_target(k + 1) && !stalled {
                        self.step_rounds += 1;
                        self.log().trim_rounds += 1;
                        self.forced = Some(Side::Below);
                        return Ok(Some(geom::unit(self.d, k)));
                    }
                    self.k += 1;
                    self.phases.push(PhaseLog {
                        k: self.k,
                        ..PhaseLog::default()
                    });
                    self.enter(SimplexStep::Squash);
                }
            }
        }
    }

    /// Answers the side chosen for the current step, switching sides only if
    /// the forced one would leave no consistent `θ`.
    fn respond(&mut self, u: &[f64], x: f64) -> Result<RoundOutcome, AdversaryError> {
        let forced = self.forced.take().unwrap_or(Side::Below);
        for side in [forced, forced.opposite()] {
            match self.consistent.add_halfspace(u, x, side.kept()) {
                Ok(next) => {
                    self.consistent = next;
                    return Ok(RoundOutcome { side, mistake: None });
                }
                Err(PolytopeError::Degenerate { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(AdversaryError::Inconsistent("both sides of the cut are degenerate".into()))
    }

    fn theta(&self) -> Option<&[f64]> {
        None
    }

    fn finalize(&mut self) -> Result<Option<Vec<f64>>, AdversaryError> {
        finalize_theta(&self.consistent).map(Some)
    }
}

/// Builds the environment for `kind`.
pub fn make_environment(kind: AdversaryKind, d: usize, epsilon: f64, rng: SimRng) -> Box<dyn Environment> {
    match kind {
        AdversaryKind::FixedRandom | AdversaryKind::GreedyWidth => Box::new(FixedTheta::new(kind, d, epsilon, rng)),
        AdversaryKind::RoundRobinAdaptive => Box::new(RoundRobinAdaptive::new(d)),
        AdversaryKind::SimplexCounterexample => Box::new(SimplexCounterexample::new(d, epsilon)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::Ellipsoid;

    #[test]
    fn fixed_feedback_examples() {
        let theta = [0.3, 0.0];
        let r = fixed_theta_feedback(&theta, &[1.0, 0.0], 0.1, 0.1);
        assert_eq!(r.side, Side::Below);
        assert_eq!(r.mistake, Some(true));
        let r = fixed_theta_feedback(&theta, &[1.0, 0.0], 0.1, 0.25);
        assert_eq!(r.mistake, Some(false));

        let r = fixed_theta_feedback(&theta, &[1.0, 0.0], 0.3, 0.1);
        assert_eq!(r.side, Side::Below);

        let eps = 0.05;
        let r = fixed_theta_feedback(&[0.0, 0.0], &[0.6, 0.8], eps / 2.0, eps);
        assert_eq!(r, RoundOutcome { side: Side::Above, mistake: Some(false) });
    }

    #[test]
    fn round_robin_examples() {
        let seq: Vec<Vec<f64>> = (0..4).map(|t| round_robin_directions(3, t)).collect();
        assert_eq!(seq[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(seq[2], vec![0.0, 0.0, 1.0]);
        assert_eq!(seq[3], seq[0]);
        assert!((0..5).all(|t| round_robin_directions(1, t) == vec![1.0]));
        assert_eq!(round_robin_directions(2, 7), vec![0.0, 1.0]);
    }

    #[test]
    fn bisection_examples() {
        let h = 0.5;
        let (side, lo, hi) = adaptive_bisection_feedback(&[0.0, 0.0], &[h, h], &[1.0, 0.0], h / 2.0).unwrap();
        assert_eq!(side, Side::Below);
        assert_eq!((lo[0], hi[0]), (h / 2.0, h));

        let (side, lo, hi) = adaptive_bisection_feedback(&[0.0], &[h], &[1.0], -3.0).unwrap();
        assert_eq!(side, Side::Below);
        assert_eq!((lo[0], hi[0]), (0.0, h));
        let (side, lo, hi) = adaptive_bisection_feedback(&[0.0], &[h], &[1.0], 3.0).unwrap();
        assert_eq!(side, Side::Above);
        assert_eq!((lo[0], hi[0]), (0.0, h));

        let (side, lo, hi) = adaptive_bisection_feedback(&[0.0], &[h], &[-1.0], -0.1).unwrap();
        // −θ ≥ −0.1 keeps [0, 0.1]; −θ < −0.1 keeps (0.1, 0.5], the longer one
        assert_eq!(side, Side::Above);
        assert_eq!((lo[0], hi[0]), (0.1, h));

        let diag = geom::normalized(&[1.0, 1.0]).unwrap();
        assert_eq!(
            adaptive_bisection_feedback(&[0.0, 0.0], &[h, h], &diag, 0.0),
            Err(AdversaryError::UnsupportedDirection)
        );
    }

    #[test]
    fn one_dimensional_bisection_forces_mistakes() {
        // optimal bisection learner on [0, 1], ε = 1/64
        let eps = 1.0 / 64.0;
        let mut env = RoundRobinAdaptive::with_box(vec![0.0], vec![1.0]);
        let (mut a, mut b) = (0.0, 1.0);
        let mut rows = Vec::new();
        while b - a > 2.0 * eps {
            let x = 0.5 * (a + b);
            let r = env.respond(&[1.0], x).unwrap();
            match r.side {
                Side::Below => a = x,
                Side::Above => b = x,
            }
            rows.push((x, b - a));
        }
        let count = |theta: f64| rows.iter().filter(|(x, _)| (x - theta).abs() > eps).count();
        assert_eq!(rows.len(), 5);
        // θ* at the end of the final interval away from the last query
        let (last, _) = rows[rows.len() - 1];
        let far = if (last - a).abs() < (last - b).abs() { b } else { a };
        assert_eq!(count(far), 5);
        // the midpoint sits exactly ε from the last query
        let center = env.finalize().unwrap().unwrap()[0];
        assert_eq!(count(center), 4);
    }

    #[test]
    fn finalize_examples() {
        let seg = Polytope::axis_box(&[0.4], &[0.6]);
        assert!((finalize_theta(&seg).unwrap()[0] - 0.5).abs() < 1e-12);
        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let c = finalize_theta(&tri).unwrap();
        let r = (2.0 - std::f64::consts::SQRT_2) / 2.0;
        assert!((c[0] - r).abs() < 1e-12 && (c[1] - r).abs() < 1e-12);
    }

    #[test]
    fn greedy_width_examples() {
        let mut rng = SimRng::new(3);
        let bx = Polytope::axis_box(&[0.0, 0.0], &[2.0, 0.01]);
        let u = greedy_width_adversary(KnowledgeView::Polytope(&bx), 8, &mut rng).unwrap();
        assert!(u[0].abs() > 0.99);

        let ball = Ellipsoid::ball(vec![0.0; 3], 1.0);
        let u = greedy_width_adversary(KnowledgeView::Ellipsoid(&ball), 8, &mut rng).unwrap();
        assert!((geom::norm(&u) - 1.0).abs() < 1e-12);

        // long axis at 30°
        let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
        let along = [c, s];
        let across = [-s, c];
        let thin = Polytope::new(
            2,
            &[along.to_vec(), geom::scale(-1.0, &along), across.to_vec(), geom::scale(-1.0, &across)],
            &[1.0, 1.0, 0.02, 0.02],
        )
        .unwrap();
        let u = greedy_width_adversary(KnowledgeView::Polytope(&thin), 8, &mut rng).unwrap();
        let angle = dot(&u, &along).abs().min(1.0).acos().to_degrees();
        assert!(angle < 5.0, "{angle}");
    }

    #[test]
    fn simplex_first_phase_count() {
        let d = 2;
        let eps = 0.05;
        let mut env = SimplexCounterexample::new(d, eps);
        let mut cuts = 0;
        loop {
            let body = env.consistent_set().clone();
            let Some(u) = env.next_direction(cuts, KnowledgeView::Polytope(&body)).unwrap() else {
                break;
            };
            if env.phase() != 1 || u != geom::unit(d, 0) {
                break;
            }
            let poly = body.exact_polygon().unwrap();
            env.respond(&u, dot(&u, &poly.centroid.to_vec())).unwrap();
            cuts += 1;
        }
        // a 1-simplex is a segment, so each cut halves it down to 2ε·1/2
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(cuts, (h / eps).log2().ceil() as usize);
    }

    #[test]
    fn carve_direction_for_k2() {
        let eps = 0.01;
        let mut env = SimplexCounterexample::new(3, eps).with_apex_margin(0.0);
        // Δ((ε̂, ε̂)) × [0, 1/√3]
        let h = 1.0 / 3f64.sqrt();
        let body = Polytope::new(
            3,
            &[
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![1.0 / eps, 1.0 / eps, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 0.0, -1.0],
            ],
            &[0.0, 0.0, 1.0, h, 0.0],
        )
        .unwrap();
        env.k = 2;
        env.enter(SimplexStep::Carve);
        let v = env.next_direction(0, KnowledgeView::Polytope(&body)).unwrap().unwrap();
        let expect = geom::normalized(&[3.0 / (4.0 * eps), 3.0 / (4.0 * eps), 1.0 / h]).unwrap();
        for i in 0..3 {
            assert!((v[i] - expect[i]).abs() < 1e-9);
        }
        assert_eq!(env.respond(&v, dot(&v, &[eps / 3.0, eps / 3.0, h / 2.0])).unwrap().side, Side::Above);
    }

    #[test]
    fn carve_through_centroid_keeps_the_apex() {
        let eps = 0.01;
        let h = 1.0 / 2f64.sqrt();
        let body = Polytope::axis_box(&[0.0, 0.0], &[eps, h]);
        let centroid = [eps / 2.0, h / 2.0];
        let apex = [0.0, h];
        for (margin, inside) in [(0.0, false), (APEX_MARGIN, true)] {
            let mut env = SimplexCounterexample::new(2, eps).with_apex_margin(margin);
            env.enter(SimplexStep::Carve);
            let v = env.next_direction(0, KnowledgeView::Polytope(&body)).unwrap().unwrap();
            let slack = dot(&v, &apex) - dot(&v, &centroid);
            if inside {
                assert!(slack > 1e-4, "{slack}");
            } else {
                assert!(slack.abs() < 1e-12, "{slack}");
            }
        }
    }

    #[test]
    fn forced_side_never_empties_the_set() {
        let mut env = SimplexCounterexample::new(2, 0.05);
        let body = env.consistent_set().clone();
        let u = env.next_direction(0, KnowledgeView::Polytope(&body)).unwrap().unwrap();
        // a cut beyond the far end: Below would leave nothing
        let r = env.respond(&u, 5.0).unwrap();
        assert_eq!(r.side, Side::Above);
        assert!(env.consistent_set().chebyshev_center().unwrap().1 > 1e-12);
    }
}
