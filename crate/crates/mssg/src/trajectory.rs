//! Fixed-step integrators for the two trajectory families.
//!
//! Type I (root-finding) runs backward from a super-solvable or solvable
//! endpoint `x`: at each point the slope `p'` of the information schedule is
//! the unique nonnegative value making the Perron eigenvalue of
//!
//! ```text
//! M(p, p', Φ)_{s,s'} = (p·∂_{x_{s'}}ξ^s(Φ) + λ_{s'}·p'·ξ^s(Φ)) / L_s,
//! L_s = (ξ^s(x) + h_s²) / x_s
//! ```
//!
//! equal to 1, with the radius slope `Φ'` the matching Perron eigenvector
//! normalized to `⟨λ, Φ'⟩ = 1`. Integration stops when `p` crosses 0.
//!
//! Type II (tree-descending) runs forward with `p ≡ 1`: the second
//! derivative `Φ''` and the common species quantity `Ψ` solve the bordered
//! linear system `(M − I)Φ'' + Ψ·w₂ = −w₁`, `⟨λ, Φ''⟩ = 0` built from
//!
//! ```text
//! B_s  = Σ_{s'} ∂_{x_{s'}}ξ^s(Φ) Φ'_{s'}
//! M_{s,s'} = Φ'_s ∂_{x_{s'}}ξ^s(Φ) / B_s
//! (w₁)_s = Φ'_s Σ_{s',s''} ∂²_{x_{s'}x_{s''}}ξ^s(Φ) Φ'_{s'} Φ'_{s''} / B_s
//! (w₂)_s = 2 √(Φ'_s³ B_s)
//! ```
//!
//! Integration stops when `max_s Φ_s` reaches 1. Both solvers use classical
//! RK4 with terminal-event bisection and re-project `⟨λ, Φ⟩ = q` after each
//! step.

use serde::Serialize;

use crate::linalg;
use crate::mixture::MixtureModel;
use crate::solvability::{classify, perron_velocity, Classification};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    RootFinding,
    TreeDescending,
}

/// A discretized trajectory piece on an increasing `q` grid.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySegment {
    pub kind: SegmentKind,
    pub q: Vec<f64>,
    /// Information schedule `p(q)`; identically 1 on tree-descending pieces.
    pub p: Vec<f64>,
    /// Slope `p'(q)`; identically 0 on tree-descending pieces.
    pub dp: Vec<f64>,
    /// Radius schedule `Φ(q)`, one `r`-vector per grid point.
    pub phi: Vec<Vec<f64>>,
    /// `Φ'(q)` per grid point.
    pub dphi: Vec<Vec<f64>>,
    /// Common species quantity `Ψ(q)`; tree-descending only (else empty).
    pub psi: Vec<f64>,
    /// Endpoint constants `L_s`; root-finding only (else empty).
    pub l_consts: Vec<f64>,
    pub q_start: f64,
    pub q_end: f64,
}

impl TrajectorySegment {
    pub fn first_phi(&self) -> &[f64] {
        &self.phi[0]
    }

    pub fn last_phi(&self) -> &[f64] {
        self.phi.last().expect("nonempty segment")
    }

    /// Linear interpolation of `Φ` at depth `q` inside the segment range.
    pub fn phi_at(&self, q: f64) -> Vec<f64> {
        let n = self.q.len();
        if q <= self.q[0] {
            return self.phi[0].clone();
        }
        if q >= self.q[n - 1] {
            return self.phi[n - 1].clone();
        }
        let idx = match self.q.binary_search_by(|probe| probe.partial_cmp(&q).unwrap()) {
            Ok(i) => return self.phi[i].clone(),
            Err(i) => i,
        };
        let (q0, q1) = (self.q[idx - 1], self.q[idx]);
        let w = (q - q0) / (q1 - q0);
        self.phi[idx - 1]
            .iter()
            .zip(&self.phi[idx])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

/// Integrator controls shared by both solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Base step in `q`.
    pub dq: f64,
    /// Offset from the exact origin when a tree starts at `Φ = 0`.
    pub eps_start: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { dq: 1e-3, eps_start: 1e-6 }
    }
}

const P_EVENT_TOL: f64 = 1e-10;
const TARGET_EVENT_TOL: f64 = 1e-9;
const ADMISSIBILITY_DRIFT: f64 = 1e-6;

/// One evaluation of the root-finding right-hand side: given `(p, Φ)` and
/// the endpoint constants `L`, return `(p', Φ')`.
///
/// `p'` is found by monotone bisection of the Perron eigenvalue of
/// `M(p, p', Φ)` to 1; the eigenvalue is strictly increasing in `p'`.
pub fn type1_rhs(model: &MixtureModel, p: f64, phi: &[f64], l: &[f64]) -> Result<(f64, Vec<f64>)> {
    let r = model.species();
    let pos: Vec<f64> = phi.iter().map(|&x| x.max(0.0)).collect();
    let calc = model.xi_calculus(&pos);
    let lambda = model.lambda();
    let build = |dp: f64| -> Vec<Vec<f64>> {
        (0..r)
            .map(|s| {
                (0..r)
                    .map(|s2| (p * calc.d_xi_s[s][s2] + lambda[s2] * dp * calc.xi_s[s]) / l[s])
                    .collect()
            })
            .collect()
    };
    let eig = |dp: f64| linalg::perron(&build(dp), 1e-13, 200_000).0;
    let lam0 = eig(0.0);
    if lam0 > 1.0 + 1e-9 {
        return Err(Error::BracketFailure(lam0));
    }
    let dp = if lam0 >= 1.0 {
        0.0
    } else {
        let mut hi = 1.0f64;
        while eig(hi) < 1.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::StepCollapse(
                    "slope bracket expansion exceeded 1e12".into(),
                ));
            }
        }
        crate::numeric::bisect(|x| eig(x) - 1.0, 0.0, hi, 1e-12)
    };
    let (_, v) = linalg::perron(&build(dp), 1e-13, 200_000);
    let scale = linalg::dot(lambda, &v);
    Ok((dp, v.iter().map(|&x| x / scale).collect()))
}

/// Solve the root-finding trajectory backward from a super-solvable or
/// solvable endpoint until the information schedule reaches zero.
pub fn type1_solve(
    model: &MixtureModel,
    endpoint: &[f64],
    opts: &SolverOptions,
) -> Result<TrajectorySegment> {
    let r = model.species();
    let report = classify(model, endpoint)?;
    if report.classification == Classification::StrictlySubSolvable {
        return Err(Error::InvalidInput(
            "root-finding endpoint must be super-solvable or solvable".into(),
        ));
    }
    if endpoint.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidInput("endpoint must be strictly positive".into()));
    }
    let h = model.field();
    let xi_s_end = model.xi_s(endpoint);
    let l: Vec<f64> = (0..r)
        .map(|s| (xi_s_end[s] + h[s] * h[s]) / endpoint[s])
        .collect();
    let q1 = linalg::dot(model.lambda(), endpoint);

    // Grid is built backward then reversed.
    let mut qs = vec![q1];
    let mut ps = vec![1.0];
    let mut dps = Vec::new();
    let mut phis = vec![endpoint.to_vec()];
    let mut dphis: Vec<Vec<f64>> = Vec::new();

    let rhs = |p: f64, phi: &[f64]| type1_rhs(model, p, phi, &l);
    let (dp1, dphi1) = rhs(1.0, endpoint)?;
    dps.push(dp1);
    dphis.push(dphi1);

    let mut q = q1;
    let mut p = 1.0;
    let mut phi = endpoint.to_vec();
    let max_steps = (2.0 / opts.dq) as usize + 16;
    for _ in 0..max_steps {
        if p <= P_EVENT_TOL {
            break;
        }
        let step = opts.dq.min(q); // never integrate past q = 0
        if step <= 1e-15 {
            break;
        }
        let (pn, phin) = rk4_backward(&rhs, p, &phi, step)?;
        if pn <= 0.0 {
            // Bisect the final step so |p(q₀)| ≤ 1e-10.
            let mut lo = 0.0f64; // fraction of step with p still positive
            let mut hi = 1.0f64;
            let mut best = (pn, phin.clone(), step);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (pm, phim) = rk4_backward(&rhs, p, &phi, step * mid)?;
                if pm > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                best = (pm, phim, step * mid);
                if pm.abs() <= P_EVENT_TOL {
                    break;
                }
            }
            let (pm, phim, used) = best;
            q -= used;
            p = pm.max(0.0);
            phi = reproject(model, phim, q);
            check_collapse(model, &phi, p)?;
            let (dpm, dphim) = rhs(p, &phi)?;
            qs.push(q);
            ps.push(p);
            dps.push(dpm);
            phis.push(phi.clone());
            dphis.push(dphim);
            break;
        }
        q -= step;
        p = pn;
        phi = reproject(model, phin, q);
        check_collapse(model, &phi, p)?;
        let (dpn, dphin) = rhs(p, &phi)?;
        qs.push(q);
        ps.push(p);
        dps.push(dpn);
        phis.push(phi.clone());
        dphis.push(dphin);
    }
    if *ps.last().unwrap() > P_EVENT_TOL {
        return Err(Error::StepCollapse(format!(
            "information schedule stalled at p = {} before reaching 0",
            ps.last().unwrap()
        )));
    }

    qs.reverse();
    ps.reverse();
    dps.reverse();
    phis.reverse();
    dphis.reverse();
    let q_start = qs[0];
    Ok(TrajectorySegment {
        kind: SegmentKind::RootFinding,
        q: qs,
        p: ps,
        dp: dps,
        phi: phis,
        dphi: dphis,
        psi: Vec::new(),
        l_consts: l,
        q_start,
        q_end: q1,
    })
}

fn rk4_backward<F>(rhs: &F, p: f64, phi: &[f64], step: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(f64, &[f64]) -> Result<(f64, Vec<f64>)>,
{
    let r = phi.len();
    let eval = |p: f64, phi: &[f64]| rhs(p, phi);
    let k1 = eval(p, phi)?;
    let shift = |k: &(f64, Vec<f64>), frac: f64| {
        let pp = p - frac * step * k.0;
        let pph: Vec<f64> = phi.iter().zip(&k.1).map(|(x, d)| x - frac * step * d).collect();
        (pp, pph)
    };
    let (p2, phi2) = shift(&k1, 0.5);
    let k2 = eval(p2, &phi2)?;
    let (p3, phi3) = shift(&k2, 0.5);
    let k3 = eval(p3, &phi3)?;
    let (p4, phi4) = shift(&k3, 1.0);
    let k4 = eval(p4, &phi4)?;
    let pn = p - step / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let phin: Vec<f64> = (0..r)
        .map(|s| phi[s] - step / 6.0 * (k1.1[s] + 2.0 * k2.1[s] + 2.0 * k3.1[s] + k4.1[s]))
        .collect();
    Ok((pn, phin))
}

/// Affine correction distributing the admissibility defect along `λ`.
fn reproject(model: &MixtureModel, mut phi: Vec<f64>, q: f64) -> Vec<f64> {
    let lambda = model.lambda();
    let defect = q - linalg::dot(lambda, &phi);
    let denom = linalg::dot(lambda, lambda);
    for (x, &l) in phi.iter_mut().zip(lambda) {
        *x += defect * l / denom;
    }
    phi
}

fn check_collapse(model: &MixtureModel, phi: &[f64], p: f64) -> Result<()> {
    for (s, &x) in phi.iter().enumerate() {
        if x < -1e-6 && model.field()[s] > 0.0 && p > P_EVENT_TOL {
            return Err(Error::StepCollapse(format!(
                "radius of species {s} went negative ({x:e}) while p = {p}"
            )));
        }
    }
    Ok(())
}

/// One evaluation of the tree-descending right-hand side: given `(Φ, Φ')`,
/// return `(Φ'', Ψ)` from the bordered linear system.
pub fn type2_rhs(model: &MixtureModel, phi: &[f64], dphi: &[f64]) -> Result<(Vec<f64>, f64)> {
    let r = model.species();
    let pos: Vec<f64> = phi.iter().map(|&x| x.max(0.0)).collect();
    let calc = model.xi_calculus(&pos);
    let lambda = model.lambda();
    let mut b = vec![0.0; r];
    for s in 0..r {
        b[s] = linalg::dot(&calc.d_xi_s[s], dphi);
        if !(b[s] > 0.0) {
            return Err(Error::StepCollapse(format!(
                "species derivative (ξ^{s}∘Φ)' = {} is not positive",
                b[s]
            )));
        }
    }
    // Bordered system rows: (M − I)·Φ'' + Ψ·w₂ = −w₁, then ⟨λ, Φ''⟩ = 0.
    let mut a = vec![vec![0.0; r + 1]; r + 1];
    let mut rhs = vec![0.0; r + 1];
    for s in 0..r {
        for s2 in 0..r {
            a[s][s2] = dphi[s] * calc.d_xi_s[s][s2] / b[s];
        }
        a[s][s] -= 1.0;
        let mut quad = 0.0;
        for s2 in 0..r {
            for s3 in 0..r {
                quad += calc.dd_xi_s[s][s2][s3] * dphi[s2] * dphi[s3];
            }
        }
        let w1 = dphi[s] * quad / b[s];
        let w2 = 2.0 * (dphi[s].max(0.0).powi(3) * b[s]).sqrt();
        a[s][r] = w2;
        rhs[s] = -w1;
    }
    for s2 in 0..r {
        a[r][s2] = lambda[s2];
    }
    let (sol, resid) = linalg::solve(&a, &rhs).ok_or(Error::SingularSystem(f64::INFINITY))?;
    if resid > 1e-9 {
        return Err(Error::SingularSystem(resid));
    }
    let ddphi = sol[..r].to_vec();
    let psi = sol[r];
    Ok((ddphi, psi))
}

/// Solve the tree-descending trajectory forward from a solvable point
/// `Φ₁` with start velocity `v` (or from the origin with any admissible
/// `v` when `Φ₁ = 0`), until some species radius reaches 1.
pub fn type2_solve(
    model: &MixtureModel,
    phi1: &[f64],
    v: &[f64],
    opts: &SolverOptions,
) -> Result<TrajectorySegment> {
    let r = model.species();
    let lambda = model.lambda();
    if v.len() != r || v.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput("start velocity must be nonnegative".into()));
    }
    if (linalg::dot(lambda, v) - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput("start velocity must satisfy ⟨λ,v⟩ = 1".into()));
    }
    let from_origin = phi1.iter().all(|&x| x == 0.0);
    let (mut q, mut phi) = if from_origin {
        let q0 = opts.eps_start;
        (q0, v.iter().map(|&x| q0 * x).collect::<Vec<f64>>())
    } else {
        (linalg::dot(lambda, phi1), phi1.to_vec())
    };
    let mut dphi = v.to_vec();

    let mut qs = vec![q];
    let mut phis = vec![phi.clone()];
    let mut dphis = vec![dphi.clone()];
    let mut psis = Vec::new();
    let (_, psi0) = type2_rhs(model, &phi, &dphi)?;
    psis.push(psi0);

    let max_steps = (2.0 / opts.dq) as usize + 8192;
    let mut done = false;
    for _ in 0..max_steps {
        if phi.iter().cloned().fold(f64::MIN, f64::max) >= 1.0 - TARGET_EVENT_TOL {
            done = true;
            break;
        }
        // Near a degenerate origin the curvature scales like 1/q; grow the
        // step with q there, and use the fixed base step elsewhere.
        let step = if q < 1e-2 {
            opts.dq.min((q / 32.0).max(opts.eps_start / 4.0))
        } else {
            opts.dq
        };
        let (phin, dphin) = rk4_forward(model, &phi, &dphi, step)?;
        if phin.iter().cloned().fold(f64::MIN, f64::max) >= 1.0 {
            // Bisect the final step so |max_s Φ_s(q₂) − 1| ≤ 1e-9.
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            let mut best = (phin.clone(), dphin.clone(), step);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (pm, dm) = rk4_forward(model, &phi, &dphi, step * mid)?;
                let peak = pm.iter().cloned().fold(f64::MIN, f64::max);
                if peak < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                best = (pm, dm, step * mid);
                if (peak - 1.0).abs() <= TARGET_EVENT_TOL {
                    break;
                }
            }
            let (pm, dm, used) = best;
            q += used;
            phi = reproject(model, pm, q);
            dphi = dm;
            let drift = (linalg::dot(lambda, &dphi) - 1.0).abs();
            if drift > ADMISSIBILITY_DRIFT {
                return Err(Error::StepCollapse(format!(
                    "velocity admissibility drifted by {drift:e}"
                )));
            }
            let (_, psim) = type2_rhs(model, &phi, &dphi)?;
            qs.push(q);
            phis.push(phi.clone());
            dphis.push(dphi.clone());
            psis.push(psim);
            done = true;
            break;
        }
        q += step;
        phi = reproject(model, phin, q);
        dphi = dphin;
        let drift = (linalg::dot(lambda, &dphi) - 1.0).abs();
        if drift > ADMISSIBILITY_DRIFT {
            return Err(Error::StepCollapse(format!(
                "velocity admissibility drifted by {drift:e}"
            )));
        }
        let (_, psin) = type2_rhs(model, &phi, &dphi)?;
        qs.push(q);
        phis.push(phi.clone());
        dphis.push(dphi.clone());
        psis.push(psin);
    }
    if !done {
        return Err(Error::StepCollapse(
            "tree-descending trajectory never reached radius 1".into(),
        ));
    }
    let n = qs.len();
    Ok(TrajectorySegment {
        kind: SegmentKind::TreeDescending,
        q: qs.clone(),
        p: vec![1.0; n],
        dp: vec![0.0; n],
        phi: phis,
        dphi: dphis,
        psi: psis,
        l_consts: Vec::new(),
        q_start: qs[0],
        q_end: qs[n - 1],
    })
}

fn rk4_forward(
    model: &MixtureModel,
    phi: &[f64],
    dphi: &[f64],
    step: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = phi.len();
    let eval = |phi: &[f64], dphi: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let (dd, _) = type2_rhs(model, phi, dphi)?;
        Ok((dphi.to_vec(), dd))
    };
    let k1 = eval(phi, dphi)?;
    let advance = |k: &(Vec<f64>, Vec<f64>), frac: f64| -> (Vec<f64>, Vec<f64>) {
        let p: Vec<f64> = (0..r).map(|s| phi[s] + frac * step * k.0[s]).collect();
        let d: Vec<f64> = (0..r).map(|s| (dphi[s] + frac * step * k.1[s]).max(0.0)).collect();
        (p, d)
    };
    let (p2, d2) = advance(&k1, 0.5);
    let k2 = eval(&p2, &d2)?;
    let (p3, d3) = advance(&k2, 0.5);
    let k3 = eval(&p3, &d3)?;
    let (p4, d4) = advance(&k3, 1.0);
    let k4 = eval(&p4, &d4)?;
    let phin: Vec<f64> = (0..r)
        .map(|s| phi[s] + step / 6.0 * (k1.0[s] + 2.0 * k2.0[s] + 2.0 * k3.0[s] + k4.0[s]))
        .collect();
    let dphin: Vec<f64> = (0..r)
        .map(|s| {
            (dphi[s] + step / 6.0 * (k1.1[s] + 2.0 * k2.1[s] + 2.0 * k3.1[s] + k4.1[s])).max(0.0)
        })
        .collect();
    Ok((phin, dphin))
}

/// Tree-descending solve that starts with the Perron velocity of a solvable
/// endpoint.
pub fn type2_solve_from_solvable(
    model: &MixtureModel,
    phi1: &[f64],
    opts: &SolverOptions,
) -> Result<TrajectorySegment> {
    let v = perron_velocity(model, phi1)?;
    type2_solve(model, phi1, &v, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::model;

    fn sk_field() -> MixtureModel {
        model(&[1.0], &[1.0], &[(&[2], 1.0)])
    }

    fn fig_asb(a: f64, h: f64) -> MixtureModel {
        let s = a * 0.5;
        model(
            &[0.5, 0.5],
            &[h, h],
            &[
                (&[2, 0], s * s),
                (&[1, 1], s * s),
                (&[0, 2], s * s),
                (&[4, 0], s.powi(4)),
                (&[0, 4], s.powi(4)),
            ],
        )
    }

    fn fig_ode_supersolvable() -> MixtureModel {
        model(
            &[1.0 / 3.0, 2.0 / 3.0],
            &[0.4, 1.4],
            &[
                (&[2, 0], 1.0 / 9.0),
                (&[1, 1], 2.0 / 9.0),
                (&[0, 2], 4.0 / 9.0),
                (&[4, 0], 1.0 / 81.0),
                (&[1, 3], 8.0 / 81.0),
            ],
        )
    }

    #[test]
    fn type1_rhs_sk_field_slope_closed_form() {
        // r=1, ξ=x², h=1, endpoint 1, L=3: p(q)=(3q−1)/(2q) so p'(1) = 1/2.
        let m = sk_field();
        let (dp, dphi) = type1_rhs(&m, 1.0, &[1.0], &[3.0]).unwrap();
        assert!((dp - 0.5).abs() < 1e-10, "dp = {dp}");
        assert!((dphi[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn type1_rhs_zero_slope_at_solvable_endpoint() {
        // r=1, ξ=x³+x², h=1 at its solvable point: p'(q₁)=0, Φ' = 1.
        let m = model(&[1.0], &[1.0], &[(&[3], 1.0), (&[2], 1.0)]);
        let x = crate::solvability::find_solvable(&m, &[1.0]).unwrap();
        let h = m.field()[0];
        let l = [(m.xi_s(&x)[0] + h * h) / x[0]];
        let (dp, _) = type1_rhs(&m, 1.0, &x, &l).unwrap();
        assert!(dp.abs() < 1e-6, "dp = {dp}");
    }

    #[test]
    fn type1_rhs_bracket_failure_on_sub_solvable_start() {
        // At a strictly sub-solvable endpoint the zero-slope eigenvalue
        // already exceeds 1.
        let m = fig_asb(3.0, 0.0);
        let x = [1.0, 1.0];
        let xi_s = m.xi_s(&x);
        let l: Vec<f64> = (0..2).map(|s| xi_s[s] / x[s]).collect();
        match type1_rhs(&m, 1.0, &x, &l) {
            Err(Error::BracketFailure(lam)) => assert!(lam > 1.0),
            other => panic!("expected bracket failure, got {other:?}"),
        }
    }

    #[test]
    fn type1_solve_sk_field_matches_closed_form() {
        // p(q) = (3q−1)/(2q) on the grid, q₀ = 1/3.
        let m = sk_field();
        let seg = type1_solve(&m, &[1.0], &SolverOptions::default()).unwrap();
        assert!((seg.q_start - 1.0 / 3.0).abs() < 1e-6, "q0 = {}", seg.q_start);
        assert!(seg.p[0].abs() <= 1e-10);
        for (i, &q) in seg.q.iter().enumerate() {
            let expect = (3.0 * q - 1.0) / (2.0 * q);
            assert!(
                (seg.p[i] - expect).abs() < 1e-6,
                "p({q}) = {} vs {expect}",
                seg.p[i]
            );
        }
        // p is increasing and concave on the grid.
        for i in 1..seg.p.len() {
            assert!(seg.p[i] >= seg.p[i - 1] - 1e-12);
            assert!(seg.dp[i] <= seg.dp[i - 1] + 1e-9);
        }
    }

    #[test]
    fn type1_first_integral_along_grid() {
        // p(q)·ξ^s(Φ(q)) − L_s(Φ_s(q) − Φ_s(q₀)) stays ≤ 1e-6; the endpoint
        // is the outermost solvable point on the diagonal ray.
        let m = fig_asb(3.0, 1.5);
        let x = crate::solvability::find_solvable(&m, &[1.0, 1.0]).unwrap();
        let seg = type1_solve(&m, &x, &SolverOptions::default()).unwrap();
        let phi0 = seg.first_phi().to_vec();
        for (i, &q) in seg.q.iter().enumerate() {
            let xi_s = m.xi_s(&seg.phi[i]);
            for s in 0..2 {
                let lhs = seg.p[i] * xi_s[s];
                let rhs = seg.l_consts[s] * (seg.phi[i][s] - phi0[s]);
                assert!(
                    (lhs - rhs).abs() <= 1e-6,
                    "first integral violated at q={q}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn type1_zero_field_species_hits_zero_radius() {
        // With h = (h₁, 0), the species without field ends at Φ_s(q₀) ≈ 0
        // and the endpoint relation Φ_s(q₀)(ξ^s(Φ(q₁))+h_s²) = h_s²Φ_s(q₁)
        // holds within 1e-5.
        let m = model(
            &[0.5, 0.5],
            &[1.2, 0.0],
            &[
                (&[2, 0], 0.7),
                (&[1, 1], 0.9),
                (&[0, 2], 0.7),
                (&[3, 0], 0.3),
                (&[2, 1], 0.3),
                (&[1, 2], 0.3),
                (&[0, 3], 0.3),
            ],
        );
        let x = [0.35, 0.35];
        assert_eq!(
            classify(&m, &x).unwrap().classification,
            Classification::SuperSolvable
        );
        let seg = type1_solve(&m, &x, &SolverOptions::default()).unwrap();
        let phi0 = seg.first_phi();
        let scale = linalg::inf_norm(phi0).max(linalg::inf_norm(&x));
        assert!(phi0[1].abs() <= 2e-3 * scale, "phi0 = {phi0:?}");
        let xi_end = m.xi_s(seg.last_phi());
        for s in 0..2 {
            let hs = m.field()[s];
            let lhs = phi0[s] * (xi_end[s] + hs * hs);
            let rhs = hs * hs * seg.last_phi()[s];
            assert!((lhs - rhs).abs() <= 1e-5, "species {s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn type1_admissibility_on_grid() {
        let m = fig_ode_supersolvable();
        let seg = type1_solve(&m, &[1.0, 1.0], &SolverOptions::default()).unwrap();
        for (i, &q) in seg.q.iter().enumerate() {
            let ip = linalg::dot(m.lambda(), &seg.phi[i]);
            assert!((ip - q).abs() <= 1e-7);
            let dip = linalg::dot(m.lambda(), &seg.dphi[i]);
            assert!((dip - 1.0).abs() <= 1e-7);
        }
    }

    #[test]
    fn type2_rhs_single_species_psi() {
        // ξ = x³ on Φ(q)=q: Ψ(q) = −(1/2)·6^{-1/2}·q^{-3/2}.
        let m = model(&[1.0], &[0.0], &[(&[3], 1.0)]);
        for &q in &[0.2, 0.5, 0.9] {
            let (dd, psi) = type2_rhs(&m, &[q], &[1.0]).unwrap();
            assert!(dd[0].abs() < 1e-12);
            let expect = -0.5 / 6.0f64.sqrt() * q.powf(-1.5);
            assert!((psi - expect).abs() < 1e-9 * expect.abs(), "psi({q}) = {psi} vs {expect}");
        }
    }

    #[test]
    fn type2_rhs_symmetric_diagonal() {
        let m = fig_asb(3.0, 0.0);
        let (dd, psi) = type2_rhs(&m, &[0.4, 0.4], &[1.0, 1.0]).unwrap();
        assert!(dd[0].abs() < 1e-10 && dd[1].abs() < 1e-10);
        assert!(psi < 0.0, "psi = {psi}");
    }

    #[test]
    fn type2_solve_symmetric_stays_diagonal() {
        let m = fig_asb(3.0, 0.0);
        let seg = type2_solve(&m, &[0.0, 0.0], &[1.0, 1.0], &SolverOptions::default()).unwrap();
        for phi in &seg.phi {
            assert!((phi[0] - phi[1]).abs() < 1e-10);
        }
        assert!((seg.q_end - 1.0).abs() < 1e-6);
        let last = seg.last_phi();
        assert!((last[0] - 1.0).abs() < 1e-6 && (last[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn type2_solve_single_species_linear() {
        let m = model(&[1.0], &[0.0], &[(&[3], 1.0)]);
        let seg = type2_solve(&m, &[0.0], &[1.0], &SolverOptions::default()).unwrap();
        for (i, &q) in seg.q.iter().enumerate() {
            assert!((seg.phi[i][0] - q).abs() < 1e-9);
        }
        assert!((seg.q_end - 1.0).abs() < 1e-8);
    }

    #[test]
    fn type2_from_solvable_point_conserved_ratio() {
        // Boundary matching at q₁: Φ'_s(q₁)/(ξ^s∘Φ)'(q₁) =
        // Φ_s(q₁)/((ξ^s∘Φ)(q₁)+h_s²) per species.
        let m = fig_asb(3.0, 1.5);
        let x = crate::solvability::find_solvable(&m, &[1.0, 1.0]).unwrap();
        let seg = type2_solve_from_solvable(&m, &x, &SolverOptions::default()).unwrap();
        let calc = m.xi_calculus(&x);
        let v = &seg.dphi[0];
        for s in 0..2 {
            let b = linalg::dot(&calc.d_xi_s[s], v);
            let lhs = v[s] / b;
            let rhs = x[s] / (calc.xi_s[s] + m.field()[s].powi(2));
            assert!((lhs - rhs).abs() <= 1e-6, "species {s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn type2_admissibility_on_grid() {
        let m = fig_asb(3.0, 0.0);
        let seg = type2_solve(&m, &[0.0, 0.0], &[1.3, 0.7], &SolverOptions::default()).unwrap();
        for (i, &q) in seg.q.iter().enumerate() {
            let ip = linalg::dot(m.lambda(), &seg.phi[i]);
            assert!((ip - q).abs() <= 1e-7);
            let dip = linalg::dot(m.lambda(), &seg.dphi[i]);
            assert!((dip - 1.0).abs() <= 1e-7);
            for s in 0..2 {
                assert!(seg.dphi[i][s] >= -1e-9);
            }
        }
    }

    #[test]
    fn psi_cross_species_finite_difference_oracle() {
        // Recompute Ψ_s per species via centered differences of
        // f_s = √(Φ'_s/(ξ^s∘Φ)') along the integrated path; all species
        // agree with the stored common value within 1e-4.
        let m = model(
            &[0.4, 0.3, 0.3],
            &[0.0, 0.0, 0.0],
            &[
                (&[2, 0, 0], 0.6),
                (&[0, 2, 0], 0.5),
                (&[0, 0, 2], 0.7),
                (&[1, 1, 0], 0.8),
                (&[1, 0, 1], 0.6),
                (&[0, 1, 1], 0.9),
                (&[1, 1, 1], 0.4),
                (&[3, 0, 0], 0.2),
                (&[0, 3, 0], 0.2),
                (&[0, 0, 3], 0.2),
                (&[2, 1, 0], 0.3),
                (&[1, 2, 0], 0.3),
                (&[2, 0, 1], 0.3),
                (&[1, 0, 2], 0.3),
                (&[0, 2, 1], 0.3),
                (&[0, 1, 2], 0.3),
            ],
        );
        let v = [1.1, 0.9, 0.29 / 0.3];
        let seg = type2_solve(&m, &[0.0, 0.0, 0.0], &v, &SolverOptions::default()).unwrap();
        let f = |i: usize, s: usize| -> f64 {
            let calc = m.xi_calculus(&seg.phi[i]);
            let b = linalg::dot(&calc.d_xi_s[s], &seg.dphi[i]);
            (seg.dphi[i][s] / b).sqrt()
        };
        let n = seg.q.len();
        let mut i = n / 4;
        while i < 3 * n / 4 {
            let dq = seg.q[i + 1] - seg.q[i - 1];
            for s in 0..3 {
                let fd = (f(i + 1, s) - f(i - 1, s)) / dq;
                let psi_s = fd / seg.dphi[i][s];
                assert!(
                    (psi_s - seg.psi[i]).abs() <= 1e-4 * seg.psi[i].abs().max(1.0),
                    "q={} s={s}: {psi_s} vs {}",
                    seg.q[i],
                    seg.psi[i]
                );
            }
            i += 16;
        }
    }

    #[test]
    fn rk4_step_halving_order() {
        // Halving δq changes the exit data like C·δq⁴ on a smooth model.
        // The asymmetric start keeps the free coordinate away from the
        // event tolerance floor.
        let m = fig_asb(3.0, 0.0);
        let run = |dq: f64| {
            let opts = SolverOptions { dq, ..Default::default() };
            let seg = type2_solve(&m, &[0.0, 0.0], &[1.3, 0.7], &opts).unwrap();
            (seg.q_end, seg.last_phi()[1])
        };
        let reference = run(1e-3);
        let steps = [6.4e-2, 3.2e-2, 1.6e-2];
        let errors: Vec<f64> = steps
            .iter()
            .map(|&dq| {
                let v = run(dq);
                (v.0 - reference.0)
                    .abs()
                    .max((v.1 - reference.1).abs())
                    .max(1e-12)
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "observed order {order} from errors {errors:?}");
        }
        // Errors sit on a C·δq⁴ curve: the fitted constant from the largest
        // step bounds the rest within a factor 2.
        let c = errors[0] / steps[0].powi(4);
        for (&dq, &err) in steps.iter().zip(&errors) {
            assert!(err <= 2.0 * c * dq.powi(4) + 1e-9, "err {err} at dq {dq}");
        }

        // The backward solver's exit point is event-limited and stays put
        // under halving.
        let m1 = fig_ode_supersolvable();
        let q0 = |dq: f64| {
            let opts = SolverOptions { dq, ..Default::default() };
            type1_solve(&m1, &[1.0, 1.0], &opts).unwrap().q_start
        };
        assert!((q0(1e-3) - q0(5e-4)).abs() < 1e-9);
    }
}
