//! Point classification via the symmetric matrix `M*_sym` and location of
//! solvable endpoints along rays.
//!
//! A point `x ∈ (0,1]^r` is super-solvable, solvable, or strictly
//! sub-solvable according to the sign of the smallest eigenvalue of
//!
//! ```text
//! M*_sym(x) = diag((∂_{x_s}ξ(x) + λ_s h_s²)/x_s) − (∂²_{x_s x_{s'}} ξ(x)).
//! ```
//!
//! The origin is super-solvable by convention, and solvable when `h = 0`.

use serde::Serialize;

use crate::linalg::{self, Matrix};
use crate::mixture::MixtureModel;
use crate::numeric::bisect;
use crate::{Error, Result};

/// Relative tolerance on the smallest eigenvalue that separates solvable
/// from strictly super/sub-solvable, after normalization by the matrix
/// 1-norm.
pub const TOL_SOLVE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    SuperSolvable,
    Solvable,
    StrictlySubSolvable,
}

/// Output of [`classify`].
#[derive(Debug, Clone, Serialize)]
pub struct SolvabilityReport {
    pub point: Vec<f64>,
    pub m_sym: Matrix,
    pub lambda_min: f64,
    pub classification: Classification,
    /// Positive null direction with `⟨λ, v⟩ = 1`; present when the point is
    /// solvable (absent at the conventional origin).
    pub null_vector: Option<Vec<f64>>,
}

/// Build `M*_sym(x)` for `x ∈ (0,1]^r`.
pub fn build_msym(model: &MixtureModel, x: &[f64]) -> Result<Matrix> {
    let r = model.species();
    if x.len() != r {
        return Err(Error::InvalidInput(format!(
            "point length {} does not match species count {r}",
            x.len()
        )));
    }
    if x.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput(
            "all coordinates must be positive away from the origin".into(),
        ));
    }
    let grad = model.grad_xi(x);
    let hess = model.hess_xi(x);
    let lambda = model.lambda();
    let h = model.field();
    let mut m = vec![vec![0.0; r]; r];
    for s in 0..r {
        for s2 in 0..r {
            m[s][s2] = -hess[s][s2];
        }
        m[s][s] += (grad[s] + lambda[s] * h[s] * h[s]) / x[s];
    }
    Ok(m)
}

/// Classify a point of `(0,1]^r ∪ {0}`.
///
/// Mixed zero/nonzero coordinates are rejected; the exact origin follows
/// the convention above.
pub fn classify(model: &MixtureModel, x: &[f64]) -> Result<SolvabilityReport> {
    let r = model.species();
    if x.len() != r {
        return Err(Error::InvalidInput(format!(
            "point length {} does not match species count {r}",
            x.len()
        )));
    }
    let zeros = x.iter().filter(|&&v| v == 0.0).count();
    if zeros == r {
        let classification = if model.has_field() {
            Classification::SuperSolvable
        } else {
            Classification::Solvable
        };
        return Ok(SolvabilityReport {
            point: x.to_vec(),
            m_sym: vec![vec![0.0; r]; r],
            lambda_min: if model.has_field() { f64::INFINITY } else { 0.0 },
            classification,
            null_vector: None,
        });
    }
    if zeros > 0 {
        return Err(Error::InvalidInput(
            "mixed zero/nonzero coordinates are outside the classified domain".into(),
        ));
    }
    let m = build_msym(model, x)?;
    let (vals, vecs) = linalg::sym_eigen(&m);
    let lambda_min = vals[0];
    let tol = TOL_SOLVE * linalg::one_norm(&m).max(1.0);
    let classification = if lambda_min > tol {
        Classification::SuperSolvable
    } else if lambda_min < -tol {
        Classification::StrictlySubSolvable
    } else {
        Classification::Solvable
    };
    let null_vector = if classification == Classification::Solvable {
        Some(normalize_null(model, &vecs[0]))
    } else {
        None
    };
    Ok(SolvabilityReport { point: x.to_vec(), m_sym: m, lambda_min, classification, null_vector })
}

fn normalize_null(model: &MixtureModel, v: &[f64]) -> Vec<f64> {
    // The minimal eigenvector of a diagonally signed symmetric matrix has
    // entries of one sign; orient it positive and normalize ⟨λ, v⟩ = 1.
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign * linalg::dot(model.lambda(), v);
    v.iter().map(|&vi| (sign * vi / scale).max(0.0)).collect()
}

/// Largest solvable point along the ray `t ↦ t·u` for a simplex direction
/// `u` (`⟨λ,u⟩ = 1`, `u ≻ 0`), found by sign-scan plus bisection on the
/// smallest eigenvalue of `M*_sym`.
pub fn find_solvable(model: &MixtureModel, direction: &[f64]) -> Result<Vec<f64>> {
    let r = model.species();
    if !model.has_field() {
        return Err(Error::InvalidInput(
            "solvable-point search requires a nonzero external field".into(),
        ));
    }
    if direction.len() != r || direction.iter().any(|&u| u <= 0.0) {
        return Err(Error::InvalidInput("direction must be strictly positive".into()));
    }
    let ip = linalg::dot(model.lambda(), direction);
    if (ip - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "direction must satisfy ⟨λ,u⟩ = 1, got {ip}"
        )));
    }
    // Stay inside (0,1]^r and at total depth ⟨λ, t·u⟩ = t ≤ 1.
    let t_cap = direction
        .iter()
        .fold(1.0f64, |acc, &u| acc.min(1.0 / u));
    let lam_min_at = |t: f64| -> f64 {
        let x: Vec<f64> = direction.iter().map(|&u| t * u).collect();
        let m = build_msym(model, &x).expect("positive point");
        linalg::sym_eigen(&m).0[0]
    };
    const SCAN: usize = 512;
    let t_lo = t_cap * 1e-6;
    let mut bracket: Option<(f64, f64)> = None;
    let mut prev_t = t_lo;
    let mut prev_v = lam_min_at(prev_t);
    for i in 1..=SCAN {
        let t = t_lo + (t_cap - t_lo) * i as f64 / SCAN as f64;
        let v = lam_min_at(t);
        if prev_v > 0.0 && v <= 0.0 || prev_v >= 0.0 && v < 0.0 {
            bracket = Some((prev_t, t));
        }
        prev_t = t;
        prev_v = v;
    }
    let (lo, hi) = bracket.ok_or(Error::NoSolvablePoint)?;
    let root = bisect(lam_min_at, lo, hi, 1e-14);
    Ok(direction.iter().map(|&u| root * u).collect())
}

/// Start velocity of the tree-descending phase at a solvable point: the
/// positive solution of `M*_sym(x)·v = 0` with `⟨λ,v⟩ = 1`, computed as the
/// Perron eigenvector (at eigenvalue 1) of the nonnegative matrix
/// `x_s ∂_{x_{s'}}ξ^s(x) / (ξ^s(x) + h_s²)`.
pub fn perron_velocity(model: &MixtureModel, x: &[f64]) -> Result<Vec<f64>> {
    let report = classify(model, x)?;
    if report.classification != Classification::Solvable {
        return Err(Error::NotSolvable(format!("{:?}", report.classification)));
    }
    let r = model.species();
    let calc = model.xi_calculus(x);
    let h = model.field();
    let mut m = vec![vec![0.0; r]; r];
    for s in 0..r {
        let denom = calc.xi_s[s] + h[s] * h[s];
        for s2 in 0..r {
            m[s][s2] = x[s] * calc.d_xi_s[s][s2] / denom;
        }
    }
    let (_, v) = linalg::perron(&m, 1e-12, 200_000);
    let scale = linalg::dot(model.lambda(), &v);
    let v: Vec<f64> = v.iter().map(|&vi| (vi / scale).max(0.0)).collect();
    let resid = linalg::inf_norm(&linalg::mat_vec(&report.m_sym, &v));
    if resid > 1e-8 * linalg::one_norm(&report.m_sym).max(1.0) {
        return Err(Error::NotSolvable(format!(
            "null-vector residual {resid:e} too large"
        )));
    }
    Ok(v)
}

/// `Λ(M*(x))`, the Collatz–Wielandt value of the row-rescaled matrix
/// `M*(x) = diag(ξ^s(x)+h_s²) − (x_s ∂_{x_{s'}}ξ^s(x))`.
///
/// Its sign matches the sign of the smallest eigenvalue of `M*_sym(x)`;
/// kept public as an independent cross-check of [`classify`].
pub fn lambda_star(model: &MixtureModel, x: &[f64]) -> Result<f64> {
    let r = model.species();
    if x.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("point must be strictly positive".into()));
    }
    let calc = model.xi_calculus(x);
    let h = model.field();
    let mut m = vec![vec![0.0; r]; r];
    for s in 0..r {
        for s2 in 0..r {
            m[s][s2] = -x[s] * calc.d_xi_s[s][s2];
        }
        m[s][s] += calc.xi_s[s] + h[s] * h[s];
    }
    Ok(linalg::collatz_wielandt(&m))
}
