//! Dense linear algebra for the small species-indexed matrices (`r ≤ 8`).
//!
//! Everything here is deterministic and allocation-light: cyclic Jacobi for
//! symmetric eigenproblems, power iteration for Perron data of nonnegative
//! matrices, and a partially pivoted solve for the bordered systems of the
//! tree-descending step.

/// Square matrix stored row-major with explicit dimension.
pub type Matrix = Vec<Vec<f64>>;

/// Matrix 1-norm (max absolute column sum).
pub fn one_norm(m: &Matrix) -> f64 {
    let n = m.len();
    (0..n)
        .map(|j| (0..n).map(|i| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with matching unit eigenvectors
/// (as rows of the second element). Off-diagonal mass is reduced below
/// `1e-13` relative to the matrix scale.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.clone();
    let mut vecs = identity(n);
    let scale = one_norm(a).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i][j].abs());
            }
        }
        if off <= 1e-13 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vpk, vqk) = (vecs[p][k], vecs[q][k]);
                    vecs[p][k] = c * vpk - s * vqk;
                    vecs[q][k] = s * vpk + c * vqk;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let rows = order.iter().map(|&i| vecs[i].clone()).collect();
    (vals, rows)
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Dominant eigenpair of an entrywise nonnegative matrix by power iteration.
///
/// Converges to relative tolerance `tol` in the eigenvalue; the returned
/// vector is nonnegative with unit infinity norm. The iteration starts from
/// the all-ones vector, which has positive overlap with the Perron vector.
pub fn perron(m: &Matrix, tol: f64, max_iter: usize) -> (f64, Vec<f64>) {
    let n = m.len();
    let mut v = vec![1.0; n];
    let mut lambda = 0.0f64;
    for _ in 0..max_iter {
        let w = mat_vec(m, &v);
        let norm = inf_norm(&w);
        if norm == 0.0 {
            return (0.0, v);
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        // Rayleigh-style estimate from the component ratios.
        let est = dot(&w, &v) / dot(&v, &v);
        let done = (est - lambda).abs() <= tol * est.abs().max(1e-300);
        lambda = est;
        v = next;
        if done {
            break;
        }
    }
    (lambda, v)
}

/// Collatz–Wielandt value `Λ(M) = sup_{v≻0} min_s (Mv)_s / v_s` of a
/// diagonally signed matrix (nonnegative diagonal, negative off-diagonal).
///
/// Writes `M = cI − P` with `P ⪰ 0`, so `Λ(M) = c − ρ(P)` with `ρ` the
/// Perron root of `P`.
pub fn collatz_wielandt(m: &Matrix) -> f64 {
    let n = m.len();
    let c = (0..n).map(|i| m[i][i]).fold(f64::MIN, f64::max).max(0.0);
    let p: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { c - m[i][j] } else { -m[i][j] })
                .collect()
        })
        .collect();
    let (rho, _) = perron(&p, 1e-13, 100_000);
    c - rho
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns the solution together with the relative residual
/// `‖Ax − b‖∞ / max(‖b‖∞, ‖A‖₁‖x‖∞)`.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            aug[i][col]
                .abs()
                .partial_cmp(&aug[j][col].abs())
                .unwrap()
        })?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        for row in (col + 1)..n {
            let f = aug[row][col] / aug[col][col];
            for k in col..=n {
                aug[row][k] -= f * aug[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = aug[row][n];
        for k in (row + 1)..n {
            s -= aug[row][k] * x[k];
        }
        x[row] = s / aug[row][row];
    }
    let ax = mat_vec(a, &x);
    let resid = ax
        .iter()
        .zip(b)
        .fold(0.0f64, |acc, (l, r)| acc.max((l - r).abs()));
    let scale = inf_norm(b).max(one_norm(a) * inf_norm(&x)).max(1e-300);
    Some((x, resid / scale))
}
