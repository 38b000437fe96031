//! Dense vector/matrix primitives, orthonormal bases, affine maps and the
//! seeded random stream shared by every other module.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; the dimensions handled here are
//! small (d ≤ ~32), so nothing is blocked or vectorised.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Residual norm below which a Gram–Schmidt candidate counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;
/// Tolerance used by [`OrthoBasis::check`].
pub const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("basis is not orthonormal: {0}")]
    NotOrthonormal(String),
    #[error("matrix is singular or ill-conditioned")]
    Singular,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Returns `x / ‖x‖`, or `None` when the norm is zero or not finite.
pub fn normalized(x: &[f64]) -> Option<Vec<f64>> {
    let n = norm(x);
    if n > 0.0 && n.is_finite() {
        Some(scale(1.0 / n, x))
    } else {
        None
    }
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GeomError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(GeomError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>], nrows: usize) -> Self {
        let mut m = Self::zeros(nrows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            axpy(*xi, self.row(i), &mut out);
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: sub(&self.data, &other.data),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: scale(alpha, &self.data),
        }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))
                .unwrap();
            let p = a[pivot * n + col];
            if p == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            det *= p;
            for r in (col + 1)..n {
                let f = a[r * n + col] / p;
                if f != 0.0 {
                    for j in col..n {
                        a[r * n + j] -= f * a[col * n + j];
                    }
                }
            }
        }
        det
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Orthonormal set of vectors in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            dim,
            vectors: (0..dim).map(|i| unit(dim, i)).collect(),
        }
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.vectors.iter()
    }

    /// Checks pairwise orthogonality and unit norms within [`ORTHO_TOL`].
    pub fn check(&self) -> Result<(), GeomError> {
        if self.vectors.len() > self.dim {
            return Err(GeomError::NotOrthonormal(format!(
                "{} vectors in dimension {}",
                self.vectors.len(),
                self.dim
            )));
        }
        for (i, v) in self.vectors.iter().enumerate() {
            if v.len() != self.dim {
                return Err(GeomError::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
            if (norm(v) - 1.0).abs() > ORTHO_TOL {
                return Err(GeomError::NotOrthonormal(format!("vector {i} has norm {}", norm(v))));
            }
            for (j, w) in self.vectors.iter().enumerate().skip(i + 1) {
                let p = dot(v, w);
                if p.abs() > ORTHO_TOL {
                    return Err(GeomError::NotOrthonormal(format!("<v{i}, v{j}> = {p:e}")));
                }
            }
        }
        Ok(())
    }

    /// Orthogonalises `x` against the basis (two passes of modified
    /// Gram–Schmidt) and returns the residual.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = x.to_vec();
        for _ in 0..2 {
            for v in &self.vectors {
                let c = dot(v, &r);
                axpy(-c, v, &mut r);
            }
        }
        r
    }

    /// Appends `x` after orthogonalisation. Returns `false` (and leaves the
    /// basis unchanged) when `x` is numerically dependent on it.
    pub fn try_push(&mut self, x: &[f64]) -> bool {
        if self.vectors.len() >= self.dim {
            return false;
        }
        let r = self.residual(x);
        let n = norm(&r);
        if n < DEPENDENCE_TOL {
            return false;
        }
        self.vectors.push(scale(1.0 / n, &r));
        true
    }

    /// Coordinates `ℓ_iᵀ x`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| dot(v, x)).collect()
    }

    /// `Σ c_i ℓ_i`
    pub fn lift(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (ci, v) in c.iter().zip(&self.vectors) {
            axpy(*ci, v, &mut out);
        }
        out
    }

    /// Orthogonal projection onto the span: `Σ ℓ_i ℓ_iᵀ x`.
    pub fn project_point(&self, x: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(x))
    }

    pub fn concat(&self, other: &OrthoBasis) -> OrthoBasis {
        let mut vectors = self.vectors.clone();
        vectors.extend(other.vectors.iter().cloned());
        OrthoBasis {
            dim: self.dim,
            vectors,
        }
    }

    /// Orthonormal basis of the orthogonal complement of the span.
    pub fn complement(&self) -> OrthoBasis {
        let mut full = self.clone();
        let start = full.len();
        // Greedy: always add the standard vector with the largest residual.
        while full.len() < self.dim {
            let best = (0..self.dim)
                .map(|i| {
                    let r = full.residual(&unit(self.dim, i));
                    (norm(&r), r)
                })
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("dim > 0");
            if best.0 < DEPENDENCE_TOL {
                break;
            }
            full.vectors.push(scale(1.0 / best.0, &best.1));
        }
        OrthoBasis {
            dim: self.dim,
            vectors: full.vectors.split_off(start),
        }
    }

    /// Matrix whose columns are the basis vectors (`dim × len`).
    pub fn as_columns(&self) -> Matrix {
        Matrix::from_columns(&self.vectors, self.dim)
    }
}

/// Orthonormal basis of `span(vectors)` in `R^dim`; near-dependent inputs are
/// dropped.
pub fn gram_schmidt(vectors: &[Vec<f64>], dim: usize) -> Result<OrthoBasis, GeomError> {
    let mut basis = OrthoBasis::empty(dim);
    for v in vectors {
        if v.len() != dim {
            return Err(GeomError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if !all_finite(v) {
            return Err(GeomError::NonFinite);
        }
        basis.try_push(v);
    }
    Ok(basis)
}

/// Orthonormal basis of `{u : uᵀs = 0 ∀ s ∈ S}`.
pub fn complement_basis(s: &OrthoBasis, d: usize) -> Result<OrthoBasis, GeomError> {
    if s.dim_ambient() != d {
        return Err(GeomError::DimensionMismatch {
            expected: d,
            got: s.dim_ambient(),
        });
    }
    Ok(s.complement())
}

pub fn project_point(x: &[f64], l: &OrthoBasis) -> Result<Vec<f64>, GeomError> {
    if x.len() != l.dim_ambient() {
        return Err(GeomError::DimensionMismatch {
            expected: l.dim_ambient(),
            got: x.len(),
        });
    }
    Ok(l.project_point(x))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the matrix whose columns are
/// the matching orthonormal eigenvectors.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix), GeomError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(GeomError::DimensionMismatch {
            expected: n,
            got: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(GeomError::NonFinite);
    }
    let asym = m.max_asymmetry();
    if asym > 1e-10 * (1.0 + m.frobenius()) {
        return Err(GeomError::NotSymmetric(asym));
    }
    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let scale_ref = a.frobenius().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale_ref {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new_j)] = v[(k, old_j)];
        }
    }
    Ok((values, vectors))
}

/// Sample mean and (unbiased) covariance of a point cloud.
pub fn mean_and_covariance(points: &[Vec<f64>]) -> (Vec<f64>, Matrix) {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; d];
    for p in points {
        axpy(1.0, p, &mut mean);
    }
    if n > 0 {
        mean = scale(1.0 / n as f64, &mean);
    }
    let mut cov = Matrix::zeros(d, d);
    for p in points {
        let c = sub(p, &mean);
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Affine map `y = matrix · (x − offset)` with its cached inverse linear part.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub inverse: Matrix,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        Self {
            matrix: Matrix::identity(d),
            inverse: Matrix::identity(d),
            offset: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(&sub(x, &self.offset))
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        add(&self.inverse.mul_vec(y), &self.offset)
    }

    /// Maps a direction in the transformed space back to the original one.
    pub fn pull_direction(&self, w: &[f64]) -> Vec<f64> {
        self.inverse.mul_vec(w)
    }

    /// Ratio of the largest to smallest singular value of the linear part.
    pub fn condition_estimate(&self) -> f64 {
        let mtm = self.matrix.transpose().matmul(&self.matrix);
        match symmetric_eigen(&mtm) {
            Ok((vals, _)) => {
                let lo = vals.first().copied().unwrap_or(1.0).max(0.0).sqrt();
                let hi = vals.last().copied().unwrap_or(1.0).max(0.0).sqrt();
                if lo > 0.0 {
                    hi / lo
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    }
}

/// Seeded random stream. Replicas derive independent streams from
/// `(seed, replica)` so parallel runs reproduce exactly.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    /// Independent child stream; deterministic in the parent's state.
    pub fn fork(&mut self) -> SimRng {
        let seed = self.inner.next_u64();
        SimRng::new(seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform direction on the unit sphere in `R^d`.
    pub fn unit_vector(&mut self, d: usize) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..d).map(|_| self.normal()).collect();
            if let Some(u) = normalized(&g) {
                return u;
            }
        }
    }

    /// Uniform point in the unit ball of `R^d`.
    pub fn in_unit_ball(&mut self, d: usize) -> Vec<f64> {
        let u = self.unit_vector(d);
        let r = self.uniform().powf(1.0 / d as f64);
        scale(r, &u)
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn up_to_sign(a: &[f64], b: &[f64], tol: f64) -> bool {
        close(a, b, tol) || close(a, &scale(-1.0, b), tol)
    }

    #[test]
    fn gram_schmidt_examples() {
        let b = gram_schmidt(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        assert_eq!(b.vectors(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);

        let b = gram_schmidt(&[vec![2.0, 0.0], vec![1.0, 1.0]], 2).unwrap();
        assert!(close(&b.vectors()[0], &[1.0, 0.0], 1e-15));
        assert!(close(&b.vectors()[1], &[0.0, 1.0], 1e-15));

        let b = gram_schmidt(&[vec![1.0, 0.0], vec![2.0, 0.0]], 2).unwrap();
        assert_eq!(b.len(), 1);

        assert!(gram_schmidt(&[], 3).unwrap().is_empty());
        assert_eq!(
            gram_schmidt(&[vec![f64::NAN, 0.0]], 2),
            Err(GeomError::NonFinite)
        );
    }

    #[test]
    fn complement_examples() {
        let s = gram_schmidt(&[vec![1.0, 0.0]], 2).unwrap();
        let l = complement_basis(&s, 2).unwrap();
        assert_eq!(l.len(), 1);
        assert!(up_to_sign(&l.vectors()[0], &[0.0, 1.0], 1e-12));

        let l = complement_basis(&OrthoBasis::empty(3), 3).unwrap();
        assert_eq!(l.len(), 3);
        l.check().unwrap();

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = gram_schmidt(&[vec![1.0, 1.0]], 2).unwrap();
        let l = complement_basis(&s, 2).unwrap();
        assert!(up_to_sign(&l.vectors()[0], &[h, -h], 1e-12));

        let full = OrthoBasis::standard(2);
        assert!(complement_basis(&full, 2).unwrap().is_empty());
    }

    #[test]
    fn projection_examples() {
        let e1 = OrthoBasis::standard(2);
        let l = gram_schmidt(&[e1.vectors()[0].clone()], 2).unwrap();
        assert_eq!(project_point(&[3.0, 4.0], &l).unwrap(), vec![3.0, 0.0]);
        assert!(close(
            &project_point(&[0.3, -7.0], &e1).unwrap(),
            &[0.3, -7.0],
            1e-15
        ));
        let l = gram_schmidt(&[vec![1.0, -1.0]], 2).unwrap();
        assert!(close(&project_point(&[1.0, 1.0], &l).unwrap(), &[0.0, 0.0], 1e-15));
    }

    #[test]
    fn eigen_examples() {
        let (vals, vecs) = symmetric_eigen(&Matrix::diag(&[1.0, 4.0])).unwrap();
        assert!(close(&vals, &[1.0, 4.0], 1e-14));
        assert!(up_to_sign(&vecs.column(0), &[1.0, 0.0], 1e-14));

        let (vals, _) = symmetric_eigen(&Matrix::identity(3)).unwrap();
        assert!(close(&vals, &[1.0, 1.0, 1.0], 1e-14));

        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!(close(&vals, &[1.0, 3.0], 1e-12));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(up_to_sign(&vecs.column(0), &[h, -h], 1e-12));
        assert!(up_to_sign(&vecs.column(1), &[h, h], 1e-12));
        // direct multiplication check
        for j in 0..2 {
            let v = vecs.column(j);
            assert!(close(&m.mul_vec(&v), &scale(vals[j], &v), 1e-12));
        }

        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&bad), Err(GeomError::NotSymmetric(_))));
    }

    #[test]
    fn determinant_small() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((m.determinant() - 3.0).abs() < 1e-14);
        let p = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((p.determinant() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rng_is_reproducible() {
        let mut a = SimRng::for_stream(7, 3);
        let mut b = SimRng::for_stream(7, 3);
        let mut c = SimRng::for_stream(7, 4);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, d)
    }

    proptest! {
        #[test]
        fn gram_schmidt_output_is_orthonormal(vs in prop::collection::vec(vec_strategy(4), 0..6)) {
            let b = gram_schmidt(&vs, 4).unwrap();
            prop_assert!(b.check().is_ok());
            prop_assert!(b.len() <= 4);
        }

        #[test]
        fn projection_is_idempotent(vs in prop::collection::vec(vec_strategy(5), 1..4), x in vec_strategy(5)) {
            let l = gram_schmidt(&vs, 5).unwrap();
            let p = l.project_point(&x);
            let pp = l.project_point(&p);
            prop_assert!(close(&p, &pp, 1e-9));
        }

        #[test]
        fn complement_completes_basis(vs in prop::collection::vec(vec_strategy(5), 0..5)) {
            let s = gram_schmidt(&vs, 5).unwrap();
            let l = complement_basis(&s, 5).unwrap();
            let full = s.concat(&l);
            prop_assert_eq!(full.len(), 5);
            prop_assert!(full.check().is_ok());
        }

        #[test]
        fn eigen_reconstructs(entries in prop::collection::vec(-5.0f64..5.0, 21)) {
            let n = 6;
            let mut m = Matrix::zeros(n, n);
            let mut it = entries.iter();
            for i in 0..n {
                for j in i..n {
                    let v = *it.next().unwrap();
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let (vals, vecs) = symmetric_eigen(&m).unwrap();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let rebuilt = vecs.matmul(&Matrix::diag(&vals)).matmul(&vecs.transpose());
            prop_assert!(m.sub(&rebuilt).frobenius() <= 1e-6 * (1.0 + m.frobenius()));
            for j in 0..n {
                let v = vecs.column(j);
                let r = sub(&m.mul_vec(&v), &scale(vals[j], &v));
                prop_assert!(norm(&r) <= 1e-7 * (1.0 + m.frobenius()));
            }
        }
    }
}
