//! H-polytopes `{x : Ax ≤ b}` with unit-normalised rows, plus the LP-backed
//! queries the learners need (support, width, Chebyshev center), the chord
//! oracle used by hit-and-run, and exact/Monte-Carlo volume oracles.

use crate::geom::{self, dot, norm, SimRng};
use crate::lp::{self, LpResult, LpStatus, Sense};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Chebyshev radius below which a body is reported as degenerate.
pub const DEGENERATE_RADIUS: f64 = 1e-12;
/// Slack tolerance for membership and chord start points.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// A row whose certified slack over the rest of the body exceeds this is redundant.
pub const REDUNDANCY_SLACK: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("degenerate body: Chebyshev radius {radius:e}")]
    Degenerate { radius: f64 },
    #[error("point lies outside the body (violation {violation:e})")]
    OutsideBody { violation: f64 },
    #[error("linear program failed: {0:?}")]
    Lp(LpStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSense {
    /// keep `uᵀx ≤ c`
    Le,
    /// keep `uᵀx ≥ c`
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialBody {
    /// `[−1/√d, 1/√d]^d`, the largest axis cube inside the unit ball.
    InscribedCube,
    /// `[0, 1/√d]^d`, the starting set of the simplex counterexample.
    UnitBoxScaled,
    Custom(Polytope),
}

#[derive(Debug, Clone)]
pub struct Polytope {
    d: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    frame: Option<Frame>,
}

/// Diagonal change of variables `x = lo + scale ∘ y` under which LPs are
/// solved. Refreshed from the bounding box after every cut so that a body
/// which is thin along some axes stays well conditioned in `y`.
#[derive(Debug, Clone)]
struct Frame {
    lo: Vec<f64>,
    scale: Vec<f64>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.a == other.a && self.b == other.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).max(0.0)).product()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2D {
    /// Counter-clockwise.
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    pub centroid: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McVolume {
    pub estimate: f64,
    pub stderr: f64,
    pub hits: usize,
    pub n: usize,
    /// Set when no sample landed inside; `stderr` then holds an upper bound.
    pub zero_hits: bool,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    d: usize,
    rows: Vec<Vec<f64>>,
}

pub fn initial_body(kind: &InitialBody, d: usize) -> Result<Polytope, PolytopeError> {
    if d == 0 {
        return Err(PolytopeError::InvalidInput("dimension must be at least 1".into()));
    }
    let h = 1.0 / (d as f64).sqrt();
    match kind {
        InitialBody::InscribedCube => Ok(Polytope::cube(d, -h, h)),
        InitialBody::UnitBoxScaled => Ok(Polytope::cube(d, 0.0, h)),
        InitialBody::Custom(p) => {
            if p.dim() != d {
                return Err(PolytopeError::InvalidInput(format!(
                    "custom body has dimension {}, expected {d}",
                    p.dim()
                )));
            }
            p.validate()?;
            Ok(p.clone())
        }
    }
}

impl Polytope {
    /// Builds `{x : rows·x ≤ b}`, normalising every row to unit length.
    /// Zero rows are dropped when trivially satisfied.
    pub fn new(d: usize, rows: &[Vec<f64>], b: &[f64]) -> Result<Self, PolytopeError> {
        if rows.len() != b.len() {
            return Err(PolytopeError::InvalidInput("rows and offsets differ in length".into()));
        }
        let mut p = Polytope {
            d,
            a: Vec::with_capacity(rows.len() * d),
            b: Vec::with_capacity(rows.len()),
            frame: None,
        };
        for (row, &off) in rows.iter().zip(b) {
            if row.len() != d {
                return Err(PolytopeError::InvalidInput(format!(
                    "row of length {} in dimension {d}",
                    row.len()
                )));
            }
            if !geom::all_finite(row) || !off.is_finite() {
                return Err(PolytopeError::InvalidInput("non-finite constraint".into()));
            }
            let n = norm(row);
            if n == 0.0 {
                if off < 0.0 {
                    return Err(PolytopeError::Empty);
                }
                continue;
            }
            p.a.extend(row.iter().map(|v| v / n));
            p.b.push(off / n);
        }
        Ok(p)
    }

    pub fn cube(d: usize, lo: f64, hi: f64) -> Self {
        Self::axis_box(&vec![lo; d], &vec![hi; d])
    }

    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Self {
        let d = lo.len();
        let mut a = Vec::with_capacity(2 * d * d);
        let mut b = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            a.extend(&row);
            b.push(hi[i]);
            row[i] = -1.0;
            a.extend(&row);
            b.push(-lo[i]);
        }
        Polytope { d, a, b, frame: None }
    }

    /// `Δ(s) = {x ≥ 0 : Σ x_i / s_i ≤ 1}`.
    pub fn simplex(s: &[f64]) -> Result<Self, PolytopeError> {
        if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(PolytopeError::InvalidInput("simplex sides must be positive".into()));
        }
        let d = s.len();
        let mut rows: Vec<Vec<f64>> = (0..d).map(|i| geom::scale(-1.0, &geom::unit(d, i))).collect();
        let mut b = vec![0.0; d];
        rows.push(s.iter().map(|v| 1.0 / v).collect());
        b.push(1.0);
        Polytope::new(d, &rows, &b)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.d..(i + 1) * self.d]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.b[i]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    /// `min_i (b_i − a_iᵀx)`; negative when `x` is outside.
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        (0..self.b.len())
            .map(|i| self.b[i] - dot(self.row(i), x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.min_slack(x) >= -tol
    }

    /// Checks boundedness and a nonempty interior.
    pub fn validate(&self) -> Result<(), PolytopeError> {
        for i in 0..self.d {
            let e = geom::unit(self.d, i);
            self.support(&e)?;
            self.support(&geom::scale(-1.0, &e))?;
        }
        let (_, r) = self.chebyshev_center()?;
        if r < DEGENERATE_RADIUS {
            return Err(PolytopeError::Degenerate { radius: r });
        }
        Ok(())
    }

    pub fn lp_solve(&self, c: &[f64], sense: Sense) -> LpResult {
        let c = match sense {
            Sense::Max => c.to_vec(),
            Sense::Min => geom::scale(-1.0, c),
        };
        let mut r = self.framed_maximize(&c, None);
        if sense == Sense::Min {
            r.value = -r.value;
        }
        r
    }

    /// `max cᵀx` over the rows (each optionally extended by one extra column
    /// with coefficient `extra[i]`), solved in frame coordinates. With
    /// `extra`, `c` has length `d + 1` and the extra variable is scaled by the
    /// smallest frame scale.
    fn framed_maximize(&self, c: &[f64], extra: Option<(&[f64], f64)>) -> LpResult {
        let m = self.b.len();
        let n = self.d + extra.is_some() as usize;
        let (lo, mut scale) = match &self.frame {
            Some(f) => (f.lo.clone(), f.scale.clone()),
            None => (vec![0.0; self.d], vec![1.0; self.d]),
        };
        if extra.is_some() {
            scale.push(scale.iter().copied().fold(1.0, f64::min));
        }
        let mut a = Vec::with_capacity((m + 1) * n);
        let mut b = Vec::with_capacity(m + 1);
        for i in 0..m {
            let row = self.row(i);
            a.extend(row.iter().zip(&scale).map(|(v, s)| v * s));
            if let Some((col, _)) = extra {
                a.push(col[i] * scale[self.d]);
            }
            b.push(self.b[i] - dot(row, &lo));
        }
        if let Some((_, bound)) = extra {
            a.extend(std::iter::repeat(0.0).take(self.d));
            a.push(-scale[self.d]);
            b.push(bound);
        }
        let cy: Vec<f64> = c.iter().zip(&scale).map(|(v, s)| v * s).collect();
        let mut r = lp::maximize(&a, &b, &cy);
        if r.is_optimal() {
            for j in 0..n {
                let origin = if j < self.d { lo[j] } else { 0.0 };
                r.x[j] = origin + scale[j] * r.x[j];
            }
            r.value = dot(c, &r.x);
        }
        r
    }

    /// Resets the LP frame to the current bounding box; keeps the old frame
    /// if that fails.
    fn refresh_frame(&mut self) {
        if let Ok(bb) = self.bounding_box() {
            let scale = bb
                .lo
                .iter()
                .zip(&bb.hi)
                .map(|(l, h)| (h - l).max(DEGENERATE_RADIUS))
                .collect();
            self.frame = Some(Frame { lo: bb.lo, scale });
        }
    }

    fn lp_checked(&self, c: &[f64], sense: Sense) -> Result<LpResult, PolytopeError> {
        if c.len() != self.d {
            return Err(PolytopeError::InvalidInput("objective dimension mismatch".into()));
        }
        let r = self.lp_solve(c, sense);
        match r.status {
            LpStatus::Optimal => Ok(r),
            LpStatus::Infeasible => Err(PolytopeError::Empty),
            LpStatus::Unbounded => Err(PolytopeError::Unbounded),
            s => Err(PolytopeError::Lp(s)),
        }
    }

    /// `max_{x∈P} uᵀx` (u need not be unit).
    pub fn support(&self, u: &[f64]) -> Result<f64, PolytopeError> {
        Ok(self.lp_checked(u, Sense::Max)?.value)
    }

    /// Maximiser of `uᵀx` over the body.
    pub fn support_point(&self, u: &[f64]) -> Result<Vec<f64>, PolytopeError> {
        Ok(self.lp_checked(u, Sense::Max)?.x)
    }

    /// Directional width `max_{x,y∈P} uᵀ(x − y)`; linear in `u`.
    pub fn width(&self, u: &[f64]) -> Result<f64, PolytopeError> {
        let hi = self.support(u)?;
        let lo = -self.support(&geom::scale(-1.0, u))?;
        Ok((hi - lo).max(0.0))
    }

    /// `(min, max)` of `uᵀx` over the body.
    pub fn range(&self, u: &[f64]) -> Result<(f64, f64), PolytopeError> {
        let hi = self.support(u)?;
        let lo = -self.support(&geom::scale(-1.0, u))?;
        Ok((lo, hi))
    }

    /// Appends the normalised row without any degeneracy check.
    pub fn with_halfspace_unchecked(&self, u: &[f64], c: f64, sense: CutSense) -> Polytope {
        let n = norm(u);
        let mut out = self.clone();
        match sense {
            CutSense::Le => {
                out.a.extend(u.iter().map(|v| v / n));
                out.b.push(c / n);
            }
            CutSense::Ge => {
                out.a.extend(u.iter().map(|v| -v / n));
                out.b.push(-c / n);
            }
        }
        out
    }

    /// `P ∩ {uᵀx ≤ c}` or `P ∩ {uᵀx ≥ c}`; errors with
    /// [`PolytopeError::Degenerate`] when the result has no interior.
    pub fn add_halfspace(&self, u: &[f64], c: f64, sense: CutSense) -> Result<Polytope, PolytopeError> {
        if u.len() != self.d {
            return Err(PolytopeError::InvalidInput("cut normal dimension mismatch".into()));
        }
        if (norm(u) - 1.0).abs() > 1e-9 || !c.is_finite() {
            return Err(PolytopeError::InvalidInput("cut normal must be a unit vector".into()));
        }
        let mut out = self.with_halfspace_unchecked(u, c, sense);
        match out.chebyshev_center() {
            Ok((_, r)) if r >= DEGENERATE_RADIUS => {
                out.refresh_frame();
                Ok(out)
            }
            Ok((_, r)) => Err(PolytopeError::Degenerate { radius: r }),
            Err(PolytopeError::Empty) => Err(PolytopeError::Degenerate { radius: 0.0 }),
            Err(e) => Err(e),
        }
    }

    /// Center and radius of the largest inscribed ball (one LP).
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64), PolytopeError> {
        let m = self.b.len();
        // rows are unit length, so the radius column is all ones in any frame
        let norms = vec![1.0; m];
        let mut c = vec![0.0; self.d + 1];
        c[self.d] = 1.0;
        let r = self.framed_maximize(&c, Some((&norms, 0.0)));
        match r.status {
            LpStatus::Optimal => {
                let radius = r.x[self.d].max(0.0);
                let mut center = r.x;
                center.truncate(self.d);
                Ok((center, radius))
            }
            LpStatus::Infeasible => Err(PolytopeError::Empty),
            LpStatus::Unbounded => Err(PolytopeError::Unbounded),
            s => Err(PolytopeError::Lp(s)),
        }
    }

    /// Parameter interval `{t : x + t·dir ∈ P}` by ratio tests over the rows.
    pub fn chord(&self, x: &[f64], dir: &[f64]) -> Result<(f64, f64), PolytopeError> {
        if (norm(dir) - 1.0).abs() > 1e-9 {
            return Err(PolytopeError::InvalidInput("chord direction must be a unit vector".into()));
        }
        self.chord_unnormalized(x, dir)
    }

    /// As [`Polytope::chord`] without the unit-direction requirement.
    pub fn chord_unnormalized(&self, x: &[f64], dir: &[f64]) -> Result<(f64, f64), PolytopeError> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..self.b.len() {
            let row = self.row(i);
            let slack = self.b[i] - dot(row, x);
            if slack < -MEMBERSHIP_TOL {
                return Err(PolytopeError::OutsideBody { violation: -slack });
            }
            let slack = slack.max(0.0);
            let rate = dot(row, dir);
            if rate > 0.0 {
                hi = hi.min(slack / rate);
            } else if rate < 0.0 {
                lo = lo.max(slack / rate);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(PolytopeError::Unbounded);
        }
        Ok((lo, hi))
    }

    /// Axis-aligned bounding box from `2d` support LPs.
    pub fn bounding_box(&self) -> Result<BoundingBox, PolytopeError> {
        let mut lo = Vec::with_capacity(self.d);
        let mut hi = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let (l, h) = self.range(&geom::unit(self.d, i))?;
            lo.push(l);
            hi.push(h);
        }
        Ok(BoundingBox { lo, hi })
    }

    /// Drops every row whose LP-certified slack over the remaining rows
    /// exceeds [`REDUNDANCY_SLACK`]; the set itself is unchanged.
    pub fn prune_redundant(&self) -> Polytope {
        let mut keep: Vec<usize> = (0..self.b.len()).collect();
        let mut idx = 0;
        while idx < keep.len() {
            let i = keep[idx];
            let others: Vec<usize> = keep.iter().copied().filter(|&j| j != i).collect();
            let sub = self.select(&others);
            let redundant = match sub.lp_solve(self.row(i), Sense::Max) {
                r if r.is_optimal() => self.b[i] - r.value > REDUNDANCY_SLACK,
                _ => false,
            };
            if redundant {
                keep.remove(idx);
            } else {
                idx += 1;
            }
        }
        self.select(&keep)
    }

    fn select(&self, rows: &[usize]) -> Polytope {
        let mut a = Vec::with_capacity(rows.len() * self.d);
        let mut b = Vec::with_capacity(rows.len());
        for &i in rows {
            a.extend_from_slice(self.row(i));
            b.push(self.b[i]);
        }
        Polytope { d: self.d, a, b, frame: self.frame.clone() }
    }

    /// Exact vertex enumeration, area and centroid of a planar polytope.
    pub fn exact_polygon(&self) -> Result<Polygon2D, PolytopeError> {
        if self.d != 2 {
            return Err(PolytopeError::InvalidInput("exact polygon oracle needs d = 2".into()));
        }
        let m = self.b.len();
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                let (r1, r2) = (self.row(i), self.row(j));
                let det = r1[0] * r2[1] - r1[1] * r2[0];
                if det.abs() < 1e-14 {
                    continue;
                }
                let x = (self.b[i] * r2[1] - r1[1] * self.b[j]) / det;
                let y = (r1[0] * self.b[j] - self.b[i] * r2[0]) / det;
                let v = [x, y];
                if self.contains(&v, 1e-9) && !pts.iter().any(|p| (p[0] - x).abs() < 1e-10 && (p[1] - y).abs() < 1e-10) {
                    pts.push(v);
                }
            }
        }
        if pts.len() < 3 {
            return Err(PolytopeError::Degenerate { radius: 0.0 });
        }
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
        pts.sort_by(|p, q| {
            (p[1] - cy).atan2(p[0] - cx).total_cmp(&(q[1] - cy).atan2(q[0] - cx))
        });
        let mut area2 = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for k in 0..pts.len() {
            let p = pts[k];
            let q = pts[(k + 1) % pts.len()];
            let cross = p[0] * q[1] - q[0] * p[1];
            area2 += cross;
            gx += (p[0] + q[0]) * cross;
            gy += (p[1] + q[1]) * cross;
        }
        let area = 0.5 * area2;
        if area < 1e-14 {
            return Err(PolytopeError::Degenerate { radius: 0.0 });
        }
        Ok(Polygon2D {
            vertices: pts,
            area,
            centroid: [gx / (6.0 * area), gy / (6.0 * area)],
        })
    }

    pub fn to_json(&self) -> String {
        let rows = (0..self.b.len())
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.push(self.b[i]);
                r
            })
            .collect();
        serde_json::to_string(&PolytopeJson { d: self.d, rows }).expect("plain data serialises")
    }

    pub fn from_json(s: &str) -> Result<Polytope, PolytopeError> {
        let parsed: PolytopeJson =
            serde_json::from_str(s).map_err(|e| PolytopeError::InvalidInput(e.to_string()))?;
        let mut rows = Vec::with_capacity(parsed.rows.len());
        let mut b = Vec::with_capacity(parsed.rows.len());
        for mut r in parsed.rows {
            if r.len() != parsed.d + 1 {
                return Err(PolytopeError::InvalidInput("row length must be d + 1".into()));
            }
            b.push(r.pop().unwrap());
            rows.push(r);
        }
        Polytope::new(parsed.d, &rows, &b)
    }
}

/// Rejection-sampling volume estimate of `{x ∈ box : contains(x)}`.
pub fn mc_volume<F: FnMut(&[f64]) -> bool>(
    mut contains: F,
    bbox: &BoundingBox,
    n: usize,
    rng: &mut SimRng,
) -> Result<McVolume, PolytopeError> {
    if n < 1000 {
        return Err(PolytopeError::InvalidInput("Monte-Carlo volume needs n ≥ 1000".into()));
    }
    let d = bbox.dim();
    let mut x = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..n {
        for i in 0..d {
            x[i] = rng.uniform_in(bbox.lo[i], bbox.hi[i]);
        }
        if contains(&x) {
            hits += 1;
        }
    }
    let vol = bbox.volume();
    let p = hits as f64 / n as f64;
    if hits == 0 {
        log::warn!("mc_volume: zero hits in {n} samples");
        // One-sided 95% bound on the hit rate.
        return Ok(McVolume {
            estimate: 0.0,
            stderr: vol * 3.0 / n as f64,
            hits,
            n,
            zero_hits: true,
        });
    }
    Ok(McVolume {
        estimate: vol * p,
        stderr: vol * (p * (1.0 - p) / n as f64).sqrt(),
        hits,
        n,
        zero_hits: false,
    })
}

impl Polytope {
    pub fn mc_volume(&self, bbox: &BoundingBox, n: usize, rng: &mut SimRng) -> Result<McVolume, PolytopeError> {
        mc_volume(|x| self.contains(x, 0.0), bbox, n, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn square() -> Polytope {
        Polytope::cube(2, -1.0, 1.0)
    }

    #[test]
    fn initial_bodies() {
        let p = initial_body(&InitialBody::InscribedCube, 1).unwrap();
        assert_eq!(p.range(&[1.0]).unwrap(), (-1.0, 1.0));

        let p = initial_body(&InitialBody::InscribedCube, 4).unwrap();
        let bb = p.bounding_box().unwrap();
        assert!(bb.lo.iter().all(|&v| (v + 0.5).abs() < 1e-12));
        assert!(bb.hi.iter().all(|&v| (v - 0.5).abs() < 1e-12));
        // farthest vertex (±1/2, ..., ±1/2) has norm exactly 1
        assert!((norm(&[0.5; 4]) - 1.0).abs() < 1e-15);

        let p = initial_body(&InitialBody::UnitBoxScaled, 4).unwrap();
        let bb = p.bounding_box().unwrap();
        assert!(bb.lo.iter().all(|&v| v.abs() < 1e-12));
        assert!(bb.hi.iter().all(|&v| (v - 0.5).abs() < 1e-12));

        let halfplane = Polytope::new(2, &[vec![1.0, 0.0]], &[1.0]).unwrap();
        assert!(initial_body(&InitialBody::Custom(halfplane), 2).is_err());
        let empty = Polytope::new(1, &[vec![1.0], vec![-1.0]], &[0.0, -1.0]).unwrap();
        assert!(initial_body(&InitialBody::Custom(empty), 1).is_err());
        assert!(initial_body(&InitialBody::InscribedCube, 0).is_err());
    }

    #[test]
    fn lp_examples() {
        let r = square().lp_solve(&[1.0, 0.0], Sense::Max);
        assert!((r.value - 1.0).abs() < 1e-12 && (r.x[0] - 1.0).abs() < 1e-12);

        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        assert!((tri.support(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);

        let p = Polytope::new(
            2,
            &[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0], vec![1.0, 0.0]],
            &[0.0, 0.0, 4.0, 3.0],
        )
        .unwrap();
        let r = p.lp_solve(&[3.0, 2.0], Sense::Max);
        assert!((r.value - 11.0).abs() < 1e-10);
        assert!((r.x[0] - 3.0).abs() < 1e-10 && (r.x[1] - 1.0).abs() < 1e-10);
        // brute-force vertex enumeration agrees
        let brute = p
            .exact_polygon()
            .unwrap()
            .vertices
            .iter()
            .map(|v| 3.0 * v[0] + 2.0 * v[1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((brute - 11.0).abs() < 1e-12);

        let r = p.lp_solve(&[3.0, 2.0], Sense::Min);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn empty_body_is_infeasible() {
        let empty = Polytope::new(1, &[vec![1.0], vec![-1.0]], &[0.0, -1.0]).unwrap();
        assert_eq!(empty.lp_solve(&[1.0], Sense::Max).status, LpStatus::Infeasible);
        assert_eq!(empty.chebyshev_center(), Err(PolytopeError::Empty));
    }

    #[test]
    fn width_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((square().width(&[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((square().width(&[h, h]).unwrap() - 2.0 * SQRT2).abs() < 1e-12);
        let tri = Polytope::simplex(&[3.0, 6.0]).unwrap();
        assert!((tri.width(&[0.0, 1.0]).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn halfspace_examples() {
        let cut = square().add_halfspace(&[1.0, 0.0], 0.0, CutSense::Le).unwrap();
        let bb = cut.bounding_box().unwrap();
        assert_eq!((bb.lo.clone(), bb.hi.clone()), (vec![-1.0, -1.0], vec![0.0, 1.0]));

        let p = square();
        let u = [0.6, 0.8];
        let c = p.support(&u).unwrap() + 1.0;
        let q = p.add_halfspace(&u, c, CutSense::Le).unwrap();
        for v in [[1.0, 0.0], [0.3, -0.7], [-0.2, 0.9]] {
            let v = geom::normalized(&v).unwrap();
            assert!((q.width(&v).unwrap() - p.width(&v).unwrap()).abs() < 1e-12);
        }

        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let cut = tri.add_halfspace(&[1.0, 0.0], 1.0 / 3.0, CutSense::Ge).unwrap();
        let poly = cut.exact_polygon().unwrap();
        let expect = [[1.0 / 3.0, 0.0], [1.0, 0.0], [1.0 / 3.0, 2.0 / 3.0]];
        assert_eq!(poly.vertices.len(), 3);
        for e in expect {
            assert!(poly
                .vertices
                .iter()
                .any(|v| (v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12));
        }

        assert!(matches!(
            square().add_halfspace(&[1.0, 0.0], -1.0, CutSense::Le),
            Err(PolytopeError::Degenerate { .. })
        ));
        assert!(matches!(
            square().add_halfspace(&[1.0, 1.0], 0.0, CutSense::Le),
            Err(PolytopeError::InvalidInput(_))
        ));
    }

    #[test]
    fn chebyshev_examples() {
        let (c, r) = square().chebyshev_center().unwrap();
        assert!((r - 1.0).abs() < 1e-12 && norm(&c) < 1e-12);

        let slab = Polytope::axis_box(&[0.0, 0.0], &[2.0, 1.0]);
        let (c, r) = slab.chebyshev_center().unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert!((c[1] - 0.5).abs() < 1e-12);
        assert!(c[0] >= 0.5 - 1e-12 && c[0] <= 1.5 + 1e-12);

        // incircle of the right triangle with legs 1: r = (a + b − c)/2
        let (c, r) = Polytope::simplex(&[1.0, 1.0]).unwrap().chebyshev_center().unwrap();
        let expect = (2.0 - SQRT2) / 2.0;
        assert!((r - expect).abs() < 1e-12);
        assert!((c[0] - expect).abs() < 1e-12 && (c[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn chord_examples() {
        assert_eq!(square().chord(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), (-1.0, 1.0));
        assert_eq!(square().chord(&[0.5, 0.0], &[1.0, 0.0]).unwrap(), (-1.5, 0.5));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let (lo, hi) = tri.chord(&[0.25, 0.25], &[h, h]).unwrap();
        assert!((hi - 0.25 * SQRT2).abs() < 1e-12);
        assert!((lo + 0.25 * SQRT2).abs() < 1e-12);
        assert!(matches!(
            square().chord(&[2.0, 0.0], &[1.0, 0.0]),
            Err(PolytopeError::OutsideBody { .. })
        ));
    }

    #[test]
    fn polygon_examples() {
        let sq = Polytope::cube(2, 0.0, 1.0).exact_polygon().unwrap();
        assert!((sq.area - 1.0).abs() < 1e-14);
        assert!((sq.centroid[0] - 0.5).abs() < 1e-14 && (sq.centroid[1] - 0.5).abs() < 1e-14);

        let tri = Polytope::simplex(&[3.0, 6.0]).unwrap().exact_polygon().unwrap();
        assert!((tri.area - 9.0).abs() < 1e-12);
        assert!((tri.centroid[0] - 1.0).abs() < 1e-12 && (tri.centroid[1] - 2.0).abs() < 1e-12);

        let half = Polytope::cube(2, 0.0, 1.0)
            .add_halfspace(&[SQRT2 / 2.0, SQRT2 / 2.0], SQRT2 / 2.0, CutSense::Le)
            .unwrap()
            .exact_polygon()
            .unwrap();
        assert!((half.area - 0.5).abs() < 1e-12);
        assert!((half.centroid[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mc_volume_examples() {
        let mut rng = SimRng::new(11);
        let unit_sq = Polytope::cube(2, 0.0, 1.0);
        let bb = unit_sq.bounding_box().unwrap();
        let v = unit_sq.mc_volume(&bb, 1000, &mut rng).unwrap();
        assert_eq!((v.estimate, v.stderr), (1.0, 0.0));

        let tri = Polytope::simplex(&[1.0, 1.0]).unwrap();
        let v = tri.mc_volume(&bb, 100_000, &mut rng).unwrap();
        assert!((v.estimate - 0.5).abs() <= 3.0 * v.stderr);

        let cube = BoundingBox {
            lo: vec![-1.0; 3],
            hi: vec![1.0; 3],
        };
        let v = mc_volume(|x| norm(x) <= 1.0, &cube, 100_000, &mut rng).unwrap();
        assert!((v.estimate - 4.0 * std::f64::consts::PI / 3.0).abs() <= 3.0 * v.stderr);

        assert!(unit_sq.mc_volume(&bb, 10, &mut rng).is_err());
        let far = BoundingBox {
            lo: vec![5.0, 5.0],
            hi: vec![6.0, 6.0],
        };
        assert!(unit_sq.mc_volume(&far, 1000, &mut rng).unwrap().zero_hits);
    }

    #[test]
    fn json_round_trip() {
        let tri = Polytope::simplex(&[1.0, 2.0]).unwrap();
        let s = tri.to_json();
        assert!(s.starts_with("{\"d\":2,\"rows\":["));
        let back = Polytope::from_json(&s).unwrap();
        assert_eq!(back.num_constraints(), 3);
        for (x, y) in back.matrix().iter().zip(tri.matrix()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(Polytope::from_json("{\"d\":2,\"rows\":[[1,0]]}").is_err());
    }

    #[test]
    fn pruning_preserves_the_set() {
        let p = square()
            .with_halfspace_unchecked(&[1.0, 0.0], 5.0, CutSense::Le)
            .with_halfspace_unchecked(&[0.0, 1.0], 0.5, CutSense::Le);
        let q = p.prune_redundant();
        assert_eq!(q.num_constraints(), 4);
        assert!((q.support(&[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    /// Random bounded polygon: tangent halfplanes around the origin.
    fn random_polygon(seed: u64) -> Polytope {
        let mut rng = SimRng::new(seed);
        let m = 3 + rng.index(6);
        loop {
            let mut angles: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.0, std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let gaps_ok = angles
                .windows(2)
                .map(|w| w[1] - w[0])
                .chain(std::iter::once(angles[0] + std::f64::consts::TAU - angles[m - 1]))
                .all(|g| g < 0.95 * std::f64::consts::PI);
            if !gaps_ok {
                continue;
            }
            let rows: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.3, 1.0)).collect();
            return Polytope::new(2, &rows, &b).unwrap();
        }
    }

    #[test]
    fn thin_bodies_keep_accurate_supports() {
        // a corner cut with sides spanning nine orders of magnitude, then a
        // near-parallel second cut
        let s = [1e-9, 1e-6, 1e-3, 0.5];
        let mut p = Polytope::cube(4, 0.0, 1.0);
        for shrink in [1.0, 1.0 - 1e-7] {
            let v: Vec<f64> = s.iter().map(|x| 1.0 / (x * shrink)).collect();
            let n = norm(&v);
            let u: Vec<f64> = v.iter().map(|x| x / n).collect();
            p = p.add_halfspace(&u, 1.0 / n, CutSense::Le).unwrap();
        }
        for (i, si) in s.iter().enumerate() {
            let hi = p.support(&geom::unit(4, i)).unwrap();
            assert!((hi - si * (1.0 - 1e-7)).abs() < 1e-9 * si, "{i}: {hi:e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lp_matches_vertex_enumeration(seed in 0u64..10_000, phi in 0.0f64..6.3) {
            let p = random_polygon(seed);
            let c = [phi.cos(), phi.sin()];
            let lp = p.support(&c).unwrap();
            let brute = p.exact_polygon().unwrap().vertices.iter()
                .map(|v| c[0] * v[0] + c[1] * v[1])
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((lp - brute).abs() <= 1e-7);
        }

        #[test]
        fn cuts_never_increase_width(seed in 0u64..10_000, phi in 0.0f64..6.3, frac in 0.05f64..0.95) {
            let p = random_polygon(seed);
            let u = [phi.cos(), phi.sin()];
            let (lo, hi) = p.range(&u).unwrap();
            let q = p.add_halfspace(&u, lo + frac * (hi - lo), CutSense::Le).unwrap();
            for k in 0..12 {
                let a = k as f64 * 0.5236;
                let v = [a.cos(), a.sin()];
                prop_assert!(q.width(&v).unwrap() <= p.width(&v).unwrap() + 1e-9);
            }
        }

        #[test]
        fn chord_endpoints_are_on_the_boundary(seed in 0u64..10_000, phi in 0.0f64..6.3) {
            let p = random_polygon(seed);
            let (x, _) = p.chebyshev_center().unwrap();
            let dir = [phi.cos(), phi.sin()];
            let (lo, hi) = p.chord(&x, &dir).unwrap();
            prop_assert!(lo <= 0.0 && hi >= 0.0);
            for t in [lo, hi] {
                let y = [x[0] + t * dir[0], x[1] + t * dir[1]];
                prop_assert!(p.contains(&y, 1e-9));
                let binding = (0..p.num_constraints())
                    .map(|i| (dot(p.row(i), &y) - p.offset(i)).abs())
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(binding <= 1e-9);
            }
        }
    }
}
