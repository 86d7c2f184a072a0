//! The mixture model `(ξ, λ, h)` and its polynomial calculus.
//!
//! The covariance polynomial `ξ` is stored as an explicit list of monomials
//! in the per-species overlap variables. Every quantity the solvers need —
//! the normalized partials `ξ^s = λ_s⁻¹ ∂_{x_s} ξ` and their first and
//! second derivatives — is evaluated exactly from this list. Sampling
//! tensors `Γ` are derived from the coefficients only when a finite-`N`
//! Hamiltonian is drawn.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{Error, Result};

/// Maximum number of species.
pub const MAX_SPECIES: usize = 8;
/// Maximum total degree of a monomial of `ξ`.
pub const MAX_DEGREE: u32 = 6;

/// One monomial `coeff · Π_s x_s^{exponents[s]}` of the mixture polynomial.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Serialized form of a model file.
///
/// Schema: `{"lambda":[...], "h":[...], "xi":[{"exponents":[...], "coeff":...}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    lambda: Vec<f64>,
    h: Vec<f64>,
    xi: Vec<Monomial>,
}

/// A multi-species mixture model: species weights `λ`, external field `h`,
/// and the covariance polynomial `ξ` with nonnegative coefficients.
///
/// Immutable after construction; all operations are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    r: usize,
    lambda: Vec<f64>,
    h: Vec<f64>,
    terms: Vec<Monomial>,
}

/// First, second, and third normalized partials of `ξ` at a point.
///
/// `xi_s[s] = λ_s⁻¹ ∂_{x_s} ξ`, `d_xi_s[s][s'] = ∂_{x_{s'}} ξ^s`,
/// `dd_xi_s[s][s'][s''] = ∂_{x_{s'}} ∂_{x_{s''}} ξ^s`.
#[derive(Debug, Clone)]
pub struct XiCalculus {
    pub xi_s: Vec<f64>,
    pub d_xi_s: Vec<Vec<f64>>,
    pub dd_xi_s: Vec<Vec<Vec<f64>>>,
}

impl MixtureModel {
    /// Validate and build a model. `λ` must be positive and sum to 1 within
    /// `1e-12`; coefficients must be nonnegative with total degree in
    /// `[2, MAX_DEGREE]`; the term list must be nonempty.
    pub fn new(lambda: Vec<f64>, h: Vec<f64>, terms: Vec<Monomial>) -> Result<Self> {
        let r = lambda.len();
        if r == 0 || r > MAX_SPECIES {
            return Err(Error::InvalidModel(format!(
                "species count {r} outside 1..={MAX_SPECIES}"
            )));
        }
        if h.len() != r {
            return Err(Error::InvalidModel(format!(
                "field length {} does not match species count {r}",
                h.len()
            )));
        }
        if lambda.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidModel("species weights must be positive".into()));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "species weights sum to {sum}, expected 1"
            )));
        }
        if h.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidModel("field entries must be finite and nonnegative".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidModel("mixture polynomial has no terms".into()));
        }
        for t in &terms {
            if t.exponents.len() != r {
                return Err(Error::InvalidModel(format!(
                    "monomial exponent vector length {} does not match species count {r}",
                    t.exponents.len()
                )));
            }
            if !(t.coeff >= 0.0 && t.coeff.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "monomial coefficient {} must be finite and nonnegative",
                    t.coeff
                )));
            }
            let deg = t.degree();
            if deg < 2 || deg > MAX_DEGREE {
                return Err(Error::InvalidModel(format!(
                    "monomial total degree {deg} outside 2..={MAX_DEGREE}"
                )));
            }
        }
        // Merge duplicate exponent vectors so coefficient lookups are unique.
        let mut merged: Vec<Monomial> = Vec::new();
        for t in terms {
            match merged.iter_mut().find(|m| m.exponents == t.exponents) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        Ok(Self { r, lambda, h, terms: merged })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        Self::new(file.lambda, file.h, file.xi)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            lambda: self.lambda.clone(),
            h: self.h.clone(),
            xi: self.terms.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn species(&self) -> usize {
        self.r
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn field(&self) -> &[f64] {
        &self.h
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn has_field(&self) -> bool {
        self.h.iter().any(|&x| x > 0.0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// True iff every quadratic `x_s x_{s'}` and every cubic
    /// `x_s x_{s'} x_{s''}` monomial has a strictly positive coefficient.
    ///
    /// Degenerate models are accepted everywhere (the threshold is continuous
    /// in the coefficients); callers may warn.
    pub fn is_non_degenerate(&self) -> bool {
        let coeff_at = |expts: &[u32]| {
            self.terms
                .iter()
                .find(|t| t.exponents == expts)
                .map_or(0.0, |t| t.coeff)
        };
        let mut e = vec![0u32; self.r];
        for s in 0..self.r {
            for s2 in s..self.r {
                e.iter_mut().for_each(|x| *x = 0);
                e[s] += 1;
                e[s2] += 1;
                if coeff_at(&e) <= 0.0 {
                    return false;
                }
                for s3 in s2..self.r {
                    let mut e3 = vec![0u32; self.r];
                    e3[s] += 1;
                    e3[s2] += 1;
                    e3[s3] += 1;
                    if coeff_at(&e3) <= 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Evaluate `ξ(x)`.
    pub fn xi(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.exponents
                        .iter()
                        .zip(x)
                        .map(|(&a, &xi)| xi.powi(a as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Plain gradient `(∂_{x_s} ξ(x))_s`.
    pub fn grad_xi(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.r];
        for t in &self.terms {
            for s in 0..self.r {
                if t.exponents[s] == 0 {
                    continue;
                }
                let mut v = t.coeff * t.exponents[s] as f64;
                for (s2, &a) in t.exponents.iter().enumerate() {
                    let e = if s2 == s { a - 1 } else { a };
                    v *= x[s2].powi(e as i32);
                }
                g[s] += v;
            }
        }
        g
    }

    /// Plain Hessian `(∂²_{x_s x_{s'}} ξ(x))_{s,s'}`.
    pub fn hess_xi(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut hmat = vec![vec![0.0; self.r]; self.r];
        for t in &self.terms {
            for s in 0..self.r {
                for s2 in 0..self.r {
                    let (a, b) = (t.exponents[s], t.exponents[s2]);
                    let factor = if s == s2 {
                        if a < 2 {
                            continue;
                        }
                        (a * (a - 1)) as f64
                    } else {
                        if a == 0 || b == 0 {
                            continue;
                        }
                        (a * b) as f64
                    };
                    let mut v = t.coeff * factor;
                    for (s3, &e0) in t.exponents.iter().enumerate() {
                        let mut e = e0;
                        if s3 == s {
                            e -= 1;
                        }
                        if s3 == s2 {
                            e -= 1;
                        }
                        v *= x[s3].powi(e as i32);
                    }
                    hmat[s][s2] += v;
                }
            }
        }
        hmat
    }

    /// The normalized partials `ξ^s(x) = λ_s⁻¹ ∂_{x_s} ξ(x)`.
    pub fn xi_s(&self, x: &[f64]) -> Vec<f64> {
        self.grad_xi(x)
            .into_iter()
            .zip(&self.lambda)
            .map(|(g, &l)| g / l)
            .collect()
    }

    /// `ξ^s` together with its first and second derivative arrays.
    pub fn xi_calculus(&self, x: &[f64]) -> XiCalculus {
        let r = self.r;
        let xi_s = self.xi_s(x);
        let hess = self.hess_xi(x);
        let d_xi_s: Vec<Vec<f64>> = (0..r)
            .map(|s| (0..r).map(|s2| hess[s][s2] / self.lambda[s]).collect())
            .collect();
        let mut dd = vec![vec![vec![0.0; r]; r]; r];
        for t in &self.terms {
            for s in 0..r {
                for s2 in 0..r {
                    for s3 in 0..r {
                        // Third partial ∂_s ∂_{s2} ∂_{s3} of the monomial.
                        let mut need = vec![0u32; r];
                        need[s] += 1;
                        need[s2] += 1;
                        need[s3] += 1;
                        let mut factor = 1.0f64;
                        let mut ok = true;
                        let mut rem = t.exponents.clone();
                        for (k, &n) in need.iter().enumerate() {
                            for step in 0..n {
                                if rem[k] <= step {
                                    ok = false;
                                    break;
                                }
                                factor *= (rem[k] - step) as f64;
                            }
                            if !ok {
                                break;
                            }
                            rem[k] -= n.min(rem[k]);
                        }
                        if !ok {
                            continue;
                        }
                        let mut v = t.coeff * factor;
                        for (k, &e) in rem.iter().enumerate() {
                            v *= x[k].powi(e as i32);
                        }
                        dd[s][s2][s3] += v / self.lambda[s];
                    }
                }
            }
        }
        XiCalculus { xi_s, d_xi_s, dd_xi_s: dd }
    }

    /// Convert the coefficient list to symmetric sampling tensors.
    ///
    /// For a monomial with exponent vector `α` of degree `k`, the value `γ`
    /// placed at each of the `k!/Πα_s!` symmetric index placements satisfies
    /// `γ² = coeff / (multinomial(α) · Π λ_s^{α_s})`.
    pub fn gamma_from_xi(&self) -> Result<CoefficientTensors> {
        let mut entries = Vec::new();
        for t in &self.terms {
            if t.coeff < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "negative coefficient {} cannot be a covariance",
                    t.coeff
                )));
            }
            if t.coeff == 0.0 {
                continue;
            }
            let placements = multinomial(&t.exponents);
            let lam_pow: f64 = t
                .exponents
                .iter()
                .zip(&self.lambda)
                .map(|(&a, &l)| l.powi(a as i32))
                .product();
            let gamma_sq = t.coeff / (placements as f64 * lam_pow);
            entries.push(TensorEntry {
                exponents: t.exponents.clone(),
                gamma: gamma_sq.sqrt(),
                placements,
            });
        }
        Ok(CoefficientTensors { r: self.r, entries })
    }
}

/// `k!/Πα_s!` for the exponent vector `α` of degree `k`.
pub fn multinomial(exponents: &[u32]) -> u64 {
    let k: u32 = exponents.iter().sum();
    let mut num = 1u64;
    for i in 1..=k as u64 {
        num *= i;
    }
    let mut den = 1u64;
    for &a in exponents {
        for i in 1..=a as u64 {
            den *= i;
        }
    }
    num / den
}

/// One symmetric-tensor block: the value `gamma` shared by all
/// `placements` index orderings of the species multiset `exponents`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub exponents: Vec<u32>,
    pub gamma: f64,
    pub placements: u64,
}

/// Per-degree symmetric nonnegative sampling tensors over species indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensors {
    r: usize,
    entries: Vec<TensorEntry>,
}

impl CoefficientTensors {
    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    /// Lookup `γ` for an unordered species multiset given as exponents.
    pub fn gamma_at(&self, exponents: &[u32]) -> f64 {
        self.entries
            .iter()
            .find(|e| e.exponents == exponents)
            .map_or(0.0, |e| e.gamma)
    }

    /// Reconstruct the coefficient list of `ξ` from the tensors; inverse of
    /// [`MixtureModel::gamma_from_xi`].
    pub fn xi_from_gamma(&self, lambda: &[f64]) -> Vec<Monomial> {
        self.entries
            .iter()
            .map(|e| {
                let lam_pow: f64 = e
                    .exponents
                    .iter()
                    .zip(lambda)
                    .map(|(&a, &l)| l.powi(a as i32))
                    .product();
                Monomial {
                    exponents: e.exponents.clone(),
                    coeff: e.gamma * e.gamma * e.placements as f64 * lam_pow,
                }
            })
            .collect()
    }
}

/// Convenience constructor used throughout the tests and examples.
pub fn model(lambda: &[f64], h: &[f64], terms: &[(&[u32], f64)]) -> MixtureModel {
    MixtureModel::new(
        lambda.to_vec(),
        h.to_vec(),
        terms
            .iter()
            .map(|(e, c)| Monomial { exponents: e.to_vec(), coeff: *c })
            .collect(),
    )
    .expect("valid literal model")
}
