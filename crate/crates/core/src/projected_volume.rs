//! The Projected Volume learner.
//!
//! The knowledge set `K` is kept as a polytope together with an orthonormal
//! set `S` of directions along which `K` is already thinner than `δ`, and the
//! complement `L`. Predictions cut through the centroid of the cylinder
//! `Π_L K + Σ [minᵢ, maxᵢ]·sᵢ`: the `L` part comes from hit-and-run samples of
//! the projection `Π_L K`, the `S` part is the midpoint of each thin interval.

use crate::geom::{self, dot, symmetric_eigen, AffineMap, OrthoBasis, SimRng};
use crate::learner::{check_unit, KnowledgeView, Learner, LearnerError, Prediction, Side, Telemetry};
use crate::lp::{self, LpStatus};
use crate::polytope::{initial_body, mc_volume, BoundingBox, InitialBody, Polytope, PolytopeError};
use crate::sampling::{
    centroid_from_samples, mean_stderr, rounding_transform, sample_uniform_with, ChordOracle, SamplerConfig,
    WalkStats,
};
use serde::{Deserialize, Serialize};

/// Margin a warm start must keep from the boundary of `Π_L K`.
const WARM_MARGIN: f64 = 1e-9;

/// How the small-width threshold `δ` is derived from `ε` and `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeltaPolicy {
    /// `ε / (2d)`
    Practical,
    /// `ε² / (16 d (d+1)²)`
    PaperMain,
    /// `δ` as in `PaperMain`, with `ρ = δ_a² / (2(d+1))` for
    /// `δ_a = ε² / (16 d^1.5 (d+1)³)`.
    PaperAppendix,
    Explicit(f64),
}

impl DeltaPolicy {
    pub fn delta(&self, epsilon: f64, d: usize) -> f64 {
        let df = d as f64;
        match *self {
            DeltaPolicy::Practical => epsilon / (2.0 * df),
            DeltaPolicy::PaperMain | DeltaPolicy::PaperAppendix => {
                epsilon * epsilon / (16.0 * df * (df + 1.0).powi(2))
            }
            DeltaPolicy::Explicit(v) => v,
        }
    }

    /// Target accuracy of the sampled centroid.
    pub fn rho(&self, epsilon: f64, d: usize) -> f64 {
        let df = d as f64;
        match *self {
            DeltaPolicy::PaperAppendix => {
                let da = epsilon * epsilon / (16.0 * df.powf(1.5) * (df + 1.0).powi(3));
                da * da / (2.0 * (df + 1.0))
            }
            _ => epsilon / (8.0 * (df + 1.0).powi(2)),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "practical" => Some(DeltaPolicy::Practical),
            "paper_main" => Some(DeltaPolicy::PaperMain),
            "paper_appendix" => Some(DeltaPolicy::PaperAppendix),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .map(DeltaPolicy::Explicit),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvConfig {
    pub epsilon: f64,
    pub delta: DeltaPolicy,
    pub sampler: SamplerConfig,
    /// Cap on the sample doubling driven by the `ρ/3` standard-error target,
    /// as a multiple of `sampler.n_samples` (1 disables doubling).
    pub max_sample_multiplier: usize,
    /// Redundant rows are pruned after this many cuts.
    pub prune_every: usize,
    /// Monte-Carlo sample count for the `vol(Π_L K)` telemetry; off when `None`.
    pub phi_samples: Option<usize>,
    pub initial: InitialBody,
}

impl PvConfig {
    pub fn new(d: usize, epsilon: f64) -> Self {
        Self {
            epsilon,
            delta: DeltaPolicy::Practical,
            sampler: SamplerConfig::default_for(d),
            max_sample_multiplier: DEFAULT_SAMPLE_MULTIPLIER,
            prune_every: 50,
            phi_samples: None,
            initial: InitialBody::InscribedCube,
        }
    }
}

/// Default cap on `ρ`-driven sample doubling.
pub const DEFAULT_SAMPLE_MULTIPLIER: usize = 4;

/// `K`, the thin directions `S` with their support intervals, and `L = S^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeState {
    pub k: Polytope,
    pub s: OrthoBasis,
    pub l: OrthoBasis,
    pub delta: f64,
    pub widths_s: Vec<(f64, f64)>,
}

impl KnowledgeState {
    pub fn new(k: Polytope, delta: f64) -> Self {
        let d = k.dim();
        Self {
            k,
            s: OrthoBasis::empty(d),
            l: OrthoBasis::standard(d),
            delta,
            widths_s: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn projected(&self) -> ProjectedBody<'_> {
        ProjectedBody::new(&self.k, &self.s, &self.l)
    }

    /// `Σ mᵢ sᵢ` with `mᵢ` the midpoint of each thin interval.
    pub fn s_midpoint(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        for (s, &(lo, hi)) in self.s.iter().zip(&self.widths_s) {
            geom::axpy(0.5 * (lo + hi), s, &mut z);
        }
        z
    }

    /// Width of the cylinder along `u`: the width of `K` along `Π_L u` plus
    /// the thin intervals weighted by `|uᵀsᵢ|`.
    pub fn cylinder_width(&self, u: &[f64]) -> Result<f64, PolytopeError> {
        let ul = self.l.project_point(u);
        let mut w = if geom::norm(&ul) > 0.0 { self.k.width(&ul)? } else { 0.0 };
        for (s, &(lo, hi)) in self.s.iter().zip(&self.widths_s) {
            w += dot(u, s).abs() * (hi - lo);
        }
        Ok(w)
    }

    /// Adds a thin direction after LP-certifying its width.
    fn push_thin(&mut self, v: &[f64], range: (f64, f64)) -> bool {
        if range.1 - range.0 > self.delta || !self.s.try_push(v) {
            return false;
        }
        self.widths_s.push(range);
        self.l = self.s.complement();
        true
    }

    /// Re-reads the thin intervals after a cut; they may only shrink.
    pub fn refresh_widths(&mut self) -> Result<(), PolytopeError> {
        for (s, w) in self.s.vectors().iter().zip(self.widths_s.iter_mut()) {
            let (lo, hi) = self.k.range(s)?;
            let nlo = lo.max(w.0);
            let nhi = hi.min(w.1);
            // LP noise can cross the bounds on an interval that is already a point.
            let mid = 0.5 * (nlo + nhi);
            *w = if nlo <= nhi { (nlo, nhi) } else { (mid, mid) };
        }
        Ok(())
    }

    /// Structural invariants: `S ∪ L` orthonormal and complete, thin
    /// intervals no wider than `δ`.
    pub fn check(&self) -> Result<(), String> {
        let all = self.s.concat(&self.l);
        if all.len() != self.dim() {
            return Err(format!("|S| + |L| = {} in dimension {}", all.len(), self.dim()));
        }
        all.check().map_err(|e| e.to_string())?;
        for &(lo, hi) in &self.widths_s {
            if hi - lo > self.delta + 1e-9 {
                return Err(format!("thin interval of width {} exceeds δ = {}", hi - lo, self.delta));
            }
        }
        Ok(())
    }
}

/// `L` is empty: every direction is thin, so the cylinder has width at most
/// `|S|·δ` along any unit vector.
pub fn stopping_consistency(state: &KnowledgeState) -> bool {
    state.l.is_empty()
}

/// `Π_L K` in the coordinates of `L`, answering line and membership queries
/// with small LPs over the thin coordinates.
pub struct ProjectedBody<'a> {
    body: &'a Polytope,
    l: &'a OrthoBasis,
    m: usize,
    kl: usize,
    ks: usize,
    /// `A·L`, row-major `m × kl`.
    a_l: Vec<f64>,
    /// `A·S`, row-major `m × ks`.
    a_s: Vec<f64>,
}

impl<'a> ProjectedBody<'a> {
    pub fn new(body: &'a Polytope, s: &'a OrthoBasis, l: &'a OrthoBasis) -> Self {
        let m = body.num_constraints();
        let (kl, ks) = (l.len(), s.len());
        let mut a_l = Vec::with_capacity(m * kl);
        let mut a_s = Vec::with_capacity(m * ks);
        for i in 0..m {
            let row = body.row(i);
            a_l.extend(l.iter().map(|v| dot(row, v)));
            a_s.extend(s.iter().map(|v| dot(row, v)));
        }
        Self {
            body,
            l,
            m,
            kl,
            ks,
            a_l,
            a_s,
        }
    }

    fn rhs(&self, p: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| self.body.offset(i) - dot(&self.a_l[i * self.kl..(i + 1) * self.kl], p))
            .collect()
    }

    /// `p` lies in `Π_L K` with every constraint slack at least `margin`.
    pub fn contains_with_margin(&self, p: &[f64], margin: f64) -> bool {
        let rhs: Vec<f64> = self.rhs(p).iter().map(|r| r - margin).collect();
        if self.ks == 0 {
            return rhs.iter().all(|&r| r >= 0.0);
        }
        lp::maximize(&self.a_s, &rhs, &vec![0.0; self.ks]).is_optimal()
    }

    fn extreme_t(&self, g: &[f64], rhs: &[f64], sign: f64) -> Result<f64, PolytopeError> {
        let n = self.ks + 1;
        let mut a = Vec::with_capacity(self.m * n);
        for i in 0..self.m {
            a.push(g[i]);
            a.extend_from_slice(&self.a_s[i * self.ks..(i + 1) * self.ks]);
        }
        let mut c = vec![0.0; n];
        c[0] = sign;
        let r = lp::maximize(&a, rhs, &c);
        match r.status {
            LpStatus::Optimal => Ok(sign * r.value),
            LpStatus::Infeasible => Err(PolytopeError::OutsideBody { violation: f64::NAN }),
            LpStatus::Unbounded => Err(PolytopeError::Unbounded),
            s => Err(PolytopeError::Lp(s)),
        }
    }
}

impl ChordOracle for ProjectedBody<'_> {
    fn dim(&self) -> usize {
        self.kl
    }

    fn chord(&self, p: &[f64], dir: &[f64]) -> Result<(f64, f64), PolytopeError> {
        // A tiny allowance keeps points that sit on the boundary feasible.
        let rhs: Vec<f64> = self.rhs(p).iter().map(|r| r + 1e-12).collect();
        let g: Vec<f64> = (0..self.m)
            .map(|i| dot(&self.a_l[i * self.kl..(i + 1) * self.kl], dir))
            .collect();
        if self.ks == 0 {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for i in 0..self.m {
                if rhs[i] < -1e-9 {
                    return Err(PolytopeError::OutsideBody { violation: -rhs[i] });
                }
                let r = rhs[i].max(0.0);
                if g[i] > 0.0 {
                    hi = hi.min(r / g[i]);
                } else if g[i] < 0.0 {
                    lo = lo.max(r / g[i]);
                }
            }
            if !lo.is_finite() || !hi.is_finite() {
                return Err(PolytopeError::Unbounded);
            }
            return Ok((lo.min(0.0), hi.max(0.0)));
        }
        let hi = self.extreme_t(&g, &rhs, 1.0)?;
        let lo = self.extreme_t(&g, &rhs, -1.0)?;
        Ok((lo.min(0.0), hi.max(0.0)))
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.contains_with_margin(p, -1e-9)
    }

    fn interior_point(&self) -> Result<Vec<f64>, PolytopeError> {
        let (c, _) = self.body.chebyshev_center()?;
        Ok(self.l.coords(&c))
    }
}

/// Chord of `Π_L K` through `p ∈ L` along `u_l ∈ L` (both ambient vectors).
pub fn subspace_chord(
    k: &Polytope,
    s: &OrthoBasis,
    p: &[f64],
    u_l: &[f64],
) -> Result<(f64, f64), PolytopeError> {
    let l = s.complement();
    let body = ProjectedBody::new(k, s, &l);
    body.chord(&l.coords(p), &l.coords(u_l))
}

/// Centroid estimate of the cylinder, sampling `Π_L K` afresh.
pub fn cylindrified_centroid(
    state: &KnowledgeState,
    cfg: &SamplerConfig,
    rng: &mut SimRng,
) -> Result<Vec<f64>, LearnerError> {
    let mut z = state.s_midpoint();
    if state.l.is_empty() {
        return Ok(z);
    }
    let body = state.projected();
    let set = sample_uniform_with(&body, cfg, None, None, rng)?;
    let c = centroid_from_samples(&body, &set.points)?;
    geom::axpy(1.0, &state.l.lift(&c.z), &mut z);
    Ok(z)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThinSearch {
    pub added: usize,
    /// LP width of the candidate that stopped the search.
    pub min_width: Option<f64>,
}

/// Facet normals this close to the eigen-candidate are tried as well.
const NORMAL_ALIGNMENT: f64 = 0.95;
const MAX_NORMAL_CANDIDATES: usize = 8;

/// The sampled eigenvector is only approximately aligned with the thin
/// direction; facet normals of `K` (taken orthogonal to `S`) that nearly
/// agree with it are exact for slabs and boxes. Returns the candidate with
/// the smallest LP width.
fn refine_candidate(state: &KnowledgeState, v: Vec<f64>) -> Result<(Vec<f64>, (f64, f64)), PolytopeError> {
    let mut normals: Vec<(f64, Vec<f64>)> = Vec::new();
    for i in 0..state.k.num_constraints() {
        let Some(n) = geom::normalized(&state.s.residual(state.k.row(i))) else {
            continue;
        };
        let c = dot(&n, &v);
        if c.abs() < NORMAL_ALIGNMENT {
            continue;
        }
        let n = if c < 0.0 { geom::scale(-1.0, &n) } else { n };
        if normals.iter().any(|(_, m)| dot(m, &n) > 1.0 - 1e-12) {
            continue;
        }
        normals.push((c.abs(), n));
    }
    normals.sort_by(|a, b| b.0.total_cmp(&a.0));
    normals.truncate(MAX_NORMAL_CANDIDATES);

    let mut best_range = state.k.range(&v)?;
    let mut best = v;
    for (_, n) in normals {
        let r = state.k.range(&n)?;
        if r.1 - r.0 < best_range.1 - best_range.0 {
            best_range = r;
            best = n;
        }
    }
    Ok((best, best_range))
}

/// Moves small-eigenvalue directions of the sample cloud into `S` while
/// their LP width is at most `δ`. `samples` are ambient points of `Π_L K`.
pub fn find_thin_directions(state: &mut KnowledgeState, samples: &[Vec<f64>]) -> Result<ThinSearch, PolytopeError> {
    let mut out = ThinSearch::default();
    while !state.l.is_empty() {
        let v_l = if state.l.len() == 1 {
            vec![1.0]
        } else {
            if samples.len() < 2 {
                break;
            }
            let coords: Vec<Vec<f64>> = samples.iter().map(|p| state.l.coords(p)).collect();
            let (_, cov) = geom::mean_and_covariance(&coords);
            match symmetric_eigen(&cov) {
                Ok((_, vecs)) => vecs.column(0),
                Err(_) => break,
            }
        };
        let lifted = state.l.lift(&v_l);
        let Some(v) = geom::normalized(&state.s.residual(&lifted)) else {
            break;
        };
        let (v, range) = refine_candidate(state, v)?;
        let w = range.1 - range.0;
        if w <= state.delta && state.push_thin(&v, range) {
            out.added += 1;
        } else {
            out.min_width = Some(w);
            break;
        }
    }
    Ok(out)
}

/// Samples of `Π_L K` (stored as ambient points) valid while `S` has `s_len`
/// directions.
#[derive(Debug, Clone)]
struct SampleCache {
    s_len: usize,
    points: Vec<Vec<f64>>,
}

pub struct ProjectedVolume {
    state: KnowledgeState,
    cfg: PvConfig,
    rho: f64,
    rng: SimRng,
    cache: Option<SampleCache>,
    /// Previous cloud, kept for the rounding transform after `S` changes.
    previous: Option<Vec<Vec<f64>>>,
    last_z: Option<Vec<f64>>,
    cuts: usize,
    telemetry: Telemetry,
    pub walk: WalkStats,
    /// Largest number of samples used for a single centroid estimate.
    pub max_samples: usize,
}

impl ProjectedVolume {
    pub fn new(d: usize, cfg: PvConfig, rng: SimRng) -> Result<Self, LearnerError> {
        if !(cfg.epsilon > 0.0) {
            return Err(LearnerError::InvalidInput("ε must be positive".into()));
        }
        let k = initial_body(&cfg.initial, d)?;
        let delta = cfg.delta.delta(cfg.epsilon, d);
        let rho = cfg.delta.rho(cfg.epsilon, d);
        let mut pv = Self {
            state: KnowledgeState::new(k, delta),
            cfg,
            rho,
            rng,
            cache: None,
            previous: None,
            last_z: None,
            cuts: 0,
            telemetry: Telemetry::default(),
            walk: WalkStats::default(),
            max_samples: 0,
        };
        pv.refresh_samples()?;
        pv.search_thin()?;
        Ok(pv)
    }

    pub fn state(&self) -> &KnowledgeState {
        &self.state
    }

    pub fn delta(&self) -> f64 {
        self.state.delta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn refresh_samples(&mut self) -> Result<(), LearnerError> {
        let st = &self.state;
        let kl = st.l.len();
        if kl == 0 {
            self.cache = None;
            return Ok(());
        }
        let body = st.projected();
        let transform: Option<AffineMap> = if self.cfg.sampler.rounding {
            self.cache
                .as_ref()
                .map(|c| &c.points)
                .or(self.previous.as_ref())
                .and_then(|pts| {
                    let coords: Vec<Vec<f64>> = pts.iter().map(|p| st.l.coords(p)).collect();
                    rounding_transform(&coords).ok().filter(|r| !r.flagged).map(|r| r.map)
                })
        } else {
            None
        };
        let warm = self
            .last_z
            .as_ref()
            .map(|z| st.l.coords(z))
            .filter(|p| body.contains_with_margin(p, WARM_MARGIN));
        let cfg = self.cfg.sampler;
        let mut set = sample_uniform_with(&body, &cfg, warm.as_deref(), transform.as_ref(), &mut self.rng)?;
        let mut mult = 1;
        while mult < self.cfg.max_sample_multiplier {
            let err = (0..kl).map(|i| mean_stderr(&set.points, i)).fold(0.0, f64::max);
            if err <= self.rho / 3.0 {
                break;
            }
            let more = SamplerConfig {
                burn_in: 0,
                n_samples: set.points.len(),
                ..cfg
            };
            let last = set.points.last().cloned();
            let ext = sample_uniform_with(&body, &more, last.as_deref(), Some(&set.transform), &mut self.rng)?;
            set.points.extend(ext.points);
            set.stats.steps += ext.stats.steps;
            set.stats.degenerate_chords += ext.stats.degenerate_chords;
            mult *= 2;
        }
        self.walk.steps += set.stats.steps;
        self.walk.degenerate_chords += set.stats.degenerate_chords;
        self.max_samples = self.max_samples.max(set.points.len());
        let points = set.points.iter().map(|p| st.l.lift(p)).collect();
        if let Some(old) = self.cache.take() {
            self.previous = Some(old.points);
        }
        self.cache = Some(SampleCache {
            s_len: st.s.len(),
            points,
        });
        Ok(())
    }

    fn search_thin(&mut self) -> Result<(), LearnerError> {
        let samples = self.cache.as_ref().map(|c| c.points.clone()).unwrap_or_default();
        let found = find_thin_directions(&mut self.state, &samples)?;
        self.telemetry.min_width = found.min_width;
        self.telemetry.n_small = self.state.s.len();
        if found.added > 0 {
            log::debug!("|S| = {} after {} cuts", self.state.s.len(), self.cuts);
        }
        Ok(())
    }

    /// Monte-Carlo `vol(Π_L K)` in the coordinates of `L`.
    pub fn phi_estimate(&mut self, n: usize) -> Result<Option<f64>, LearnerError> {
        let st = &self.state;
        if st.l.is_empty() {
            return Ok(None);
        }
        let mut lo = Vec::with_capacity(st.l.len());
        let mut hi = Vec::with_capacity(st.l.len());
        for v in st.l.iter() {
            let (a, b) = st.k.range(v)?;
            lo.push(a);
            hi.push(b);
        }
        let body = st.projected();
        let est = mc_volume(|p| body.contains(p), &BoundingBox { lo, hi }, n.max(1000), &mut self.rng)?;
        Ok(Some(est.estimate))
    }
}

impl Learner for ProjectedVolume {
    fn name(&self) -> &'static str {
        "projected_volume"
    }

    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn predict(&mut self, u: &[f64]) -> Result<Prediction, LearnerError> {
        check_unit(u, self.dim())?;
        if !self.state.l.is_empty() && self.cache.as_ref().map(|c| c.s_len) != Some(self.state.s.len()) {
            self.refresh_samples()?;
        }
        let mut z = self.state.s_midpoint();
        if let Some(cache) = &self.cache {
            let body = self.state.projected();
            let coords: Vec<Vec<f64>> = cache.points.iter().map(|p| self.state.l.coords(p)).collect();
            let c = centroid_from_samples(&body, &coords)?;
            geom::axpy(1.0, &self.state.l.lift(&c.z), &mut z);
        }
        let n_t_flag = self.state.cylinder_width(u)? > self.cfg.epsilon;
        let x = dot(u, &z);
        self.last_z = Some(z.clone());
        Ok(Prediction { x, z, n_t_flag })
    }

    fn observe(&mut self, u: &[f64], x: f64, side: Side) -> Result<(), LearnerError> {
        check_unit(u, self.dim())?;
        self.state.k = match self.state.k.add_halfspace(u, x, side.kept()) {
            Ok(k) => k,
            // the cut is below numerical resolution; K already pins θ down
            Err(PolytopeError::Degenerate { radius }) => {
                log::debug!("skipping cut leaving radius {radius:e}");
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        self.cuts += 1;
        if self.cfg.prune_every > 0 && self.cuts % self.cfg.prune_every == 0 {
            self.state.k = self.state.k.prune_redundant();
        }
        self.state.refresh_widths()?;
        self.refresh_samples()?;
        self.search_thin()?;
        if let Some(n) = self.cfg.phi_samples {
            self.telemetry.phi = self.phi_estimate(n)?;
        }
        Ok(())
    }

    fn converged(&self) -> bool {
        stopping_consistency(&self.state)
    }

    fn contains(&self, theta: &[f64]) -> bool {
        self.state.k.contains(theta, 1e-9)
    }

    fn knowledge(&self) -> KnowledgeView<'_> {
        KnowledgeView::Polytope(&self.state.k)
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry.clone()
    }
}
