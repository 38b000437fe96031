//! Comparison learners: the plain centroid learner (cuts through the sampled
//! centroid of the whole knowledge set) and a central-cut ellipsoid learner.

use crate::geom::{self, dot, symmetric_eigen, AffineMap, Matrix, SimRng};
use crate::learner::{check_unit, KnowledgeView, Learner, LearnerError, Prediction, Side, Telemetry};
use crate::lp::solve_dense;
use crate::polytope::{initial_body, CutSense, InitialBody, Polytope, PolytopeError};
use crate::sampling::{centroid_from_samples, rounding_transform, sample_uniform_with, SamplerConfig, WalkStats};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipsoidError {
    #[error("shape matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("shape matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// `{x : (x − c)ᵀ M⁻¹ (x − c) ≤ 1}`
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: Matrix,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: Matrix) -> Result<Self, EllipsoidError> {
        if shape.rows() != center.len() || shape.cols() != center.len() {
            return Err(EllipsoidError::DimensionMismatch);
        }
        let asym = shape.max_asymmetry();
        if asym > 1e-10 {
            return Err(EllipsoidError::NotSymmetric(asym));
        }
        match symmetric_eigen(&shape) {
            Ok((vals, _)) if vals.first().map_or(false, |&v| v > 0.0) => Ok(Self { center, shape }),
            _ => Err(EllipsoidError::NotPositiveDefinite),
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let d = center.len();
        Self {
            center,
            shape: Matrix::identity(d).scaled(radius * radius),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `2√(uᵀMu)` for unit `u`.
    pub fn width(&self, u: &[f64]) -> f64 {
        2.0 * dot(u, &self.shape.mul_vec(u)).max(0.0).sqrt()
    }

    /// `(x − c)ᵀ M⁻¹ (x − c)`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let r = geom::sub(x, &self.center);
        let d = self.dim();
        let mut flat = Vec::with_capacity(d * d);
        for i in 0..d {
            flat.extend_from_slice(self.shape.row(i));
        }
        match solve_dense(d, flat, r.clone()) {
            Some(y) => dot(&r, &y),
            None => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.quadratic_form(x) <= 1.0 + tol
    }

    pub fn volume_ratio_to(&self, other: &Ellipsoid) -> f64 {
        (other.shape.determinant() / self.shape.determinant()).sqrt()
    }

    /// Minimum-volume ellipsoid containing the half kept by a central cut
    /// along `u`.
    pub fn update(&self, u: &[f64], kept: CutSense) -> Ellipsoid {
        let d = self.dim();
        let sign = match kept {
            CutSense::Le => -1.0,
            CutSense::Ge => 1.0,
        };
        let mu = self.shape.mul_vec(u);
        let q = dot(u, &mu);
        if d == 1 {
            let r = self.shape[(0, 0)].sqrt();
            return Ellipsoid {
                center: vec![self.center[0] + sign * u[0].signum() * r / 2.0],
                shape: self.shape.scaled(0.25),
            };
        }
        let df = d as f64;
        let root = q.sqrt();
        let mut center = self.center.clone();
        geom::axpy(sign / ((df + 1.0) * root), &mu, &mut center);
        let factor = df * df / (df * df - 1.0);
        let mut shape = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                shape[(i, j)] = factor * (self.shape[(i, j)] - 2.0 / (df + 1.0) * mu[i] * mu[j] / q);
            }
        }
        // keep exact symmetry
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (shape[(i, j)] + shape[(j, i)]);
                shape[(i, j)] = v;
                shape[(j, i)] = v;
            }
        }
        Ellipsoid { center, shape }
    }

    /// `x = c + M^{1/2} b` for `b` uniform in the unit ball.
    pub fn sample(&self, rng: &mut SimRng) -> Vec<f64> {
        let root = self.sqrt_shape();
        let b = rng.in_unit_ball(self.dim());
        geom::add(&self.center, &root.mul_vec(&b))
    }

    fn sqrt_shape(&self) -> Matrix {
        let d = self.dim();
        let (vals, vecs) = symmetric_eigen(&self.shape).expect("shape is symmetric");
        let mut root = Matrix::zeros(d, d);
        for k in 0..d {
            let s = vals[k].max(0.0).sqrt();
            for i in 0..d {
                for j in 0..d {
                    root[(i, j)] += vecs[(i, k)] * vecs[(j, k)] * s;
                }
            }
        }
        root
    }

    pub fn max_eigenvalue(&self) -> f64 {
        symmetric_eigen(&self.shape).map(|(v, _)| v[v.len() - 1]).unwrap_or(f64::INFINITY)
    }
}

/// `√(det M′ / det M)` for a central cut in dimension `d ≥ 2`.
pub fn ellipsoid_volume_factor(d: usize) -> f64 {
    let df = d as f64;
    df / (df + 1.0) * (df * df / (df * df - 1.0)).powf((df - 1.0) / 2.0)
}

/// Smallest ball around the bounding box of the initial body.
fn enclosing_ball(body: &Polytope) -> Result<Ellipsoid, LearnerError> {
    let bb = body.bounding_box()?;
    let center: Vec<f64> = bb.lo.iter().zip(&bb.hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let radius = 0.5 * geom::norm(&geom::sub(&bb.hi, &bb.lo));
    Ok(Ellipsoid::ball(center, radius))
}

pub struct EllipsoidLearner {
    e: Ellipsoid,
    epsilon: f64,
}

impl EllipsoidLearner {
    pub fn new(d: usize, epsilon: f64, initial: &InitialBody) -> Result<Self, LearnerError> {
        let body = initial_body(initial, d)?;
        Ok(Self {
            e: enclosing_ball(&body)?,
            epsilon,
        })
    }

    pub fn from_ellipsoid(e: Ellipsoid, epsilon: f64) -> Self {
        Self { e, epsilon }
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        &self.e
    }
}

impl Learner for EllipsoidLearner {
    fn name(&self) -> &'static str {
        "ellipsoid"
    }

    fn dim(&self) -> usize {
        self.e.dim()
    }

    fn predict(&mut self, u: &[f64]) -> Result<Prediction, LearnerError> {
        check_unit(u, self.dim())?;
        Ok(Prediction {
            x: dot(u, &self.e.center),
            z: self.e.center.clone(),
            n_t_flag: self.e.width(u) > self.epsilon,
        })
    }

    /// Cuts only while the width along `u` exceeds `ε`.
    fn observe(&mut self, u: &[f64], _x: f64, side: Side) -> Result<(), LearnerError> {
        check_unit(u, self.dim())?;
        if self.e.width(u) > self.epsilon {
            self.e = self.e.update(u, side.kept());
        }
        Ok(())
    }

    fn converged(&self) -> bool {
        2.0 * self.e.max_eigenvalue().sqrt() <= self.epsilon
    }

    fn contains(&self, theta: &[f64]) -> bool {
        self.e.contains(theta, 1e-7)
    }

    fn knowledge(&self) -> KnowledgeView<'_> {
        KnowledgeView::Ellipsoid(&self.e)
    }

    fn telemetry(&self) -> Telemetry {
        Telemetry::default()
    }
}

/// Cuts through the sampled centroid of the whole knowledge set.
pub struct CentroidLearner {
    k: Polytope,
    epsilon: f64,
    sampler: SamplerConfig,
    rng: SimRng,
    previous: Option<Vec<Vec<f64>>>,
    cuts: usize,
    prune_every: usize,
    pub walk: WalkStats,
}

impl CentroidLearner {
    pub fn new(
        d: usize,
        epsilon: f64,
        initial: &InitialBody,
        sampler: SamplerConfig,
        rng: SimRng,
    ) -> Result<Self, LearnerError> {
        Ok(Self {
            k: initial_body(initial, d)?,
            epsilon,
            sampler,
            rng,
            previous: None,
            cuts: 0,
            prune_every: 50,
            walk: WalkStats::default(),
        })
    }

    pub fn body(&self) -> &Polytope {
        &self.k
    }
}

impl Learner for CentroidLearner {
    fn name(&self) -> &'static str {
        "centroid"
    }

    fn dim(&self) -> usize {
        self.k.dim()
    }

    fn predict(&mut self, u: &[f64]) -> Result<Prediction, LearnerError> {
        check_unit(u, self.dim())?;
        let transform: Option<AffineMap> = if self.sampler.rounding {
            self.previous
                .as_ref()
                .and_then(|pts| rounding_transform(pts).ok())
                .filter(|r| !r.flagged)
                .map(|r| r.map)
        } else {
            None
        };
        let set = sample_uniform_with(&self.k, &self.sampler, None, transform.as_ref(), &mut self.rng)?;
        self.walk.steps += set.stats.steps;
        self.walk.degenerate_chords += set.stats.degenerate_chords;
        let c = centroid_from_samples(&self.k, &set.points)?;
        self.previous = Some(set.points);
        Ok(Prediction {
            x: dot(u, &c.z),
            n_t_flag: self.k.width(u)? > self.epsilon,
            z: c.z,
        })
    }

    fn observe(&mut self, u: &[f64], x: f64, side: Side) -> Result<(), LearnerError> {
        check_unit(u, self.dim())?;
        self.k = match self.k.add_halfspace(u, x, side.kept()) {
            Ok(k) => k,
            Err(PolytopeError::Degenerate { radius }) => {
                log::debug!("skipping cut leaving radius {radius:e}");
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        self.cuts += 1;
        if self.cuts % self.prune_every == 0 {
            self.k = self.k.prune_redundant();
        }
        Ok(())
    }

    /// Axis widths of at most `ε/√d` bound the width along every unit vector
    /// by `ε`.
    fn converged(&self) -> bool {
        let d = self.dim();
        let cap = self.epsilon / (d as f64).sqrt();
        (0..d).all(|i| self.k.width(&geom::unit(d, i)).map_or(false, |w| w <= cap))
    }

    fn contains(&self, theta: &[f64]) -> bool {
        self.k.contains(theta, 1e-9)
    }

    fn knowledge(&self) -> KnowledgeView<'_> {
        KnowledgeView::Polytope(&self.k)
    }

    fn telemetry(&self) -> Telemetry {
        Telemetry::default()
    }
}
