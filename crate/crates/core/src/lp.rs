//! Revised dual simplex for `max cᵀx s.t. Ax ≤ b` with a handful of free
//! variables and up to a few thousand rows.
//!
//! A basis is a set of `n` rows. Its vertex `x = A_B⁻¹ b_B` and multipliers
//! `A_Bᵀ λ = c` are re-solved from scratch every iteration, so no round-off
//! accumulates across pivots; this matters for the long, thin bodies built up
//! by repeated cuts, whose facets can differ in angle by less than 1e-6.
//! The start is an artificial box `|x_j| ≤ M`, which makes the basis of axis
//! rows dual feasible for any `c`. The box must not bind at the optimum of a
//! bounded problem, so the bodies passed in should lie well inside `|x| < M`.

use serde::{Deserialize, Serialize};

/// Row violation (in units of distance) tolerated at the optimum.
const FEAS_TOL: f64 = 1e-12;
/// Smallest usable ratio-test pivot, relative to the largest entry.
const PIVOT_TOL: f64 = 1e-11;
/// Non-improving iterations before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration budget exhausted; only reachable through floating-point cycling.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
}

impl LpResult {
    fn failed(status: LpStatus, n: usize) -> Self {
        Self {
            status,
            x: vec![f64::NAN; n],
            value: f64::NAN,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Real(usize),
    /// `sign·x_j ≤ M`
    Box(usize, f64),
}

/// Solves `max cᵀx s.t. A x ≤ b` with `A` given row-major (`m × n`), `x` free.
pub fn maximize(a: &[f64], b: &[f64], c: &[f64]) -> LpResult {
    let n = c.len();
    let m = b.len();
    assert_eq!(a.len(), m * n, "constraint matrix shape");

    // Normalized copies so that violations are distances.
    let mut rows = Vec::with_capacity(m * n);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let row = &a[i * n..(i + 1) * n];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            if b[i] < -FEAS_TOL {
                return LpResult::failed(LpStatus::Infeasible, n);
            }
            continue;
        }
        rows.extend(row.iter().map(|v| v / norm));
        rhs.push(b[i] / norm);
    }
    if n == 0 {
        return LpResult {
            status: LpStatus::Optimal,
            x: Vec::new(),
            value: 0.0,
        };
    }
    let mr = rhs.len();
    let big = 1e4 * (1.0 + rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    let row_of = |r: Row| -> (Vec<f64>, f64) {
        match r {
            Row::Real(i) => (rows[i * n..(i + 1) * n].to_vec(), rhs[i]),
            Row::Box(j, s) => {
                let mut e = vec![0.0; n];
                e[j] = s;
                (e, big)
            }
        }
    };

    let mut basis: Vec<Row> = (0..n)
        .map(|j| Row::Box(j, if c[j] < 0.0 { -1.0 } else { 1.0 }))
        .collect();
    let mut bland = false;
    let mut stall = 0usize;
    let mut last_value = f64::INFINITY;
    let max_iters = 50 * (mr + n) + 1000;

    for _ in 0..max_iters {
        let mut mat = Vec::with_capacity(n * n);
        let mut b_b = Vec::with_capacity(n);
        for &r in &basis {
            let (row, bv) = row_of(r);
            mat.extend(row);
            b_b.push(bv);
        }
        let Some(x) = solve_dense(n, mat.clone(), b_b) else {
            return LpResult::failed(LpStatus::IterationLimit, n);
        };
        let mut mat_t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                mat_t[j * n + i] = mat[i * n + j];
            }
        }
        let Some(lambda) = solve_dense(n, mat_t.clone(), c.to_vec()) else {
            return LpResult::failed(LpStatus::IterationLimit, n);
        };

        // Entering row: the most violated one, or the first under Bland.
        let mut entering: Option<(usize, f64)> = None;
        for i in 0..mr {
            if basis.contains(&Row::Real(i)) {
                continue;
            }
            let row = &rows[i * n..(i + 1) * n];
            let v = row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - rhs[i];
            if v > FEAS_TOL * (1.0 + rhs[i].abs()) {
                if bland {
                    entering = Some((i, v));
                    break;
                }
                if entering.map_or(true, |(_, best)| v > best) {
                    entering = Some((i, v));
                }
            }
        }
        let Some((r, _)) = entering else {
            let lam_scale = 1.0 + lambda.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let box_binds = basis
                .iter()
                .zip(&lambda)
                .any(|(row, l)| matches!(row, Row::Box(..)) && *l > 1e-9 * lam_scale);
            if box_binds {
                return LpResult::failed(LpStatus::Unbounded, n);
            }
            let value = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            return LpResult {
                status: LpStatus::Optimal,
                x,
                value,
            };
        };

        let value: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
        if value < last_value - 1e-15 * (1.0 + value.abs()) {
            stall = 0;
        } else {
            stall += 1;
            if stall >= STALL_LIMIT {
                bland = true;
            }
        }
        last_value = value;

        // a_r = A_Bᵀ w; the leaving row keeps λ − θw ≥ 0.
        let Some(w) = solve_dense(n, mat_t, rows[r * n..(r + 1) * n].to_vec()) else {
            return LpResult::failed(LpStatus::IterationLimit, n);
        };
        let w_scale = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let lam_tol = 1e-12 * (1.0 + lambda.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        let eligible: Vec<usize> = (0..n).filter(|&j| w[j] > PIVOT_TOL * w_scale).collect();
        if eligible.is_empty() {
            return LpResult::failed(LpStatus::Infeasible, n);
        }
        // Harris: any ratio up to the relaxed minimum is acceptable, and the
        // largest pivot among those keeps the next basis well conditioned.
        let relaxed = eligible
            .iter()
            .map(|&j| (lambda[j].max(0.0) + lam_tol) / w[j])
            .fold(f64::INFINITY, f64::min);
        let mut candidates: Vec<usize> = eligible
            .iter()
            .copied()
            .filter(|&j| lambda[j].max(0.0) / w[j] <= relaxed)
            .collect();
        if bland {
            candidates.sort_by_key(|&j| row_key(basis[j]));
        } else {
            candidates.sort_by(|&p, &q| w[q].total_cmp(&w[p]));
        }
        let mut pivoted = false;
        for j in candidates {
            let old = basis[j];
            basis[j] = Row::Real(r);
            if basis_is_regular(&basis, &row_of, n) {
                pivoted = true;
                break;
            }
            basis[j] = old;
        }
        if !pivoted {
            return LpResult::failed(LpStatus::IterationLimit, n);
        }
    }
    LpResult::failed(LpStatus::IterationLimit, n)
}

fn basis_is_regular(basis: &[Row], row_of: &impl Fn(Row) -> (Vec<f64>, f64), n: usize) -> bool {
    let mut mat = Vec::with_capacity(n * n);
    for &r in basis {
        mat.extend(row_of(r).0);
    }
    solve_dense(n, mat, vec![0.0; n]).is_some()
}

fn row_key(r: Row) -> usize {
    match r {
        Row::Real(i) => i,
        Row::Box(j, _) => usize::MAX - j,
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(n: usize, mut mat: Vec<f64>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let scale = mat.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| {
            mat[r1 * n + col].abs().total_cmp(&mat[r2 * n + col].abs())
        })?;
        let p = mat[pivot * n + col];
        if p.abs() <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                mat.swap(col * n + j, pivot * n + j);
            }
            rhs.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let f = mat[r * n + col] / p;
            if f != 0.0 {
                for j in col..n {
                    mat[r * n + j] -= f * mat[col * n + j];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for j in (r + 1)..n {
            s -= mat[r * n + j] * x[j];
        }
        x[r] = s / mat[r * n + r];
    }
    Some(x)
}
