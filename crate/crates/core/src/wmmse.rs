//! Weighted sum-rate beamforming for fixed orientations via the WMMSE
//! reformulation: closed-form receive filter, MSE weight and beamformer
//! updates, with the per-transmitter power multiplier found by bisection.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelTensor;
use crate::linear_bf::mrt;
use crate::metrics::{cross_gains, wsr, BeamformerSet};
use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmmseParams {
    /// Relative wsr change that ends the sweeps.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WmmseParams {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct WmmseState {
    pub u: Vec<C64>,
    pub v: Vec<f64>,
    pub w: BeamformerSet,
    /// Lagrange multipliers of the power constraints at the returned point.
    pub multipliers: Vec<f64>,
    /// wsr of the initial point followed by the wsr after every sweep.
    pub objective_trace: Vec<f64>,
    /// wsr of the returned beamformers.
    pub wsr: f64,
    pub sweeps: usize,
}

/// `u_k = h_{k,k}^H w_k / (sum_n |h_{n,k}^H w_n|^2 + delta_k^2)`.
pub fn update_u(ch: &ChannelTensor, w: &[CVector], noise: &[f64]) -> Vec<C64> {
    let kk = ch.pairs();
    let c = cross_gains(ch, w);
    (0..kk)
        .map(|k| {
            let total: f64 = (0..kk).map(|n| c[n * kk + k].norm_sqr()).sum::<f64>() + noise[k];
            c[k * kk + k] / total
        })
        .collect()
}

/// MSE `e_k` of the equalized symbol for given filters and beamformers.
pub fn mse(ch: &ChannelTensor, w: &[CVector], u: &[C64], noise: &[f64]) -> Vec<f64> {
    let kk = ch.pairs();
    let c = cross_gains(ch, w);
    (0..kk)
        .map(|k| {
            let uc = u[k].conj();
            let mut e = (uc * c[k * kk + k] - 1.0).norm_sqr() + u[k].norm_sqr() * noise[k];
            for n in (0..kk).filter(|&n| n != k) {
                e += (uc * c[n * kk + k]).norm_sqr();
            }
            e
        })
        .collect()
}

/// `v_k = 1 / e_k`.
pub fn update_v(e: &[f64]) -> Result<Vec<f64>> {
    e.iter()
        .enumerate()
        .map(|(pair, &value)| {
            if value > 0.0 {
                Ok(1.0 / value)
            } else {
                Err(Error::NonPositiveMse { pair, value })
            }
        })
        .collect()
}

/// Solution of `min ||w||` s.t. `(A + mu I) w = b`, `||w||^2 <= budget`,
/// `mu >= 0`, `mu (||w||^2 - budget) = 0`, for Hermitian PSD `A`.
#[derive(Clone, Debug)]
pub struct PowerConstrainedSolve {
    pub w: CVector,
    pub mu: f64,
}

const BISECTION_ITERS: usize = 200;

pub fn solve_power_constrained(a: CMatrix, b: &CVector, budget: f64) -> PowerConstrainedSolve {
    let m = b.len();
    let b_norm2 = b.norm_squared();
    if b_norm2 == 0.0 {
        return PowerConstrainedSolve { w: CVector::zeros(m), mu: 0.0 };
    }
    let eig = a.symmetric_eigen();
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let u = eig.eigenvectors;
    let c = u.adjoint() * b;
    let c2: Vec<f64> = c.iter().map(|x| x.norm_sqr()).collect();
    let lmax = lambda.iter().cloned().fold(0.0, f64::max);
    let null_tol = 1e-12 * lmax;

    let power = |mu: f64| -> f64 { c2.iter().zip(&lambda).map(|(c, l)| c / ((l + mu) * (l + mu))).sum() };
    let assemble = |mu: f64, skip_null: bool| -> CVector {
        let mut coef = CVector::zeros(m);
        for i in 0..m {
            if skip_null && lambda[i] <= null_tol {
                continue;
            }
            coef[i] = c[i] / (lambda[i] + mu);
        }
        &u * coef
    };

    // mu = 0: minimum-norm solution, finite only when b lies in range(A)
    let null_weight: f64 = (0..m).filter(|&i| lambda[i] <= null_tol).map(|i| c2[i]).sum();
    if lmax > 0.0 && null_weight <= 1e-20 * b_norm2 {
        let p0: f64 = (0..m)
            .filter(|&i| lambda[i] > null_tol)
            .map(|i| c2[i] / (lambda[i] * lambda[i]))
            .sum();
        if p0 <= budget {
            return PowerConstrainedSolve { w: assemble(0.0, true), mu: 0.0 };
        }
    }

    let mut hi = 1.0;
    while power(hi) >= budget {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if power(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = assemble(hi, false);
    let p = w.norm_squared();
    if p > budget {
        w *= C64::new((budget / p).sqrt(), 0.0);
    }
    PowerConstrainedSolve { w, mu: hi }
}

/// System matrix and right-hand side of the beamformer update for pair `k`.
pub fn beamformer_system(
    ch: &ChannelTensor,
    u: &[C64],
    v: &[f64],
    weights: &[f64],
    k: usize,
) -> (CMatrix, CVector) {
    let m = ch.elements();
    let mut a = CMatrix::zeros(m, m);
    for i in 0..ch.pairs() {
        let coef = weights[i] * v[i] * u[i].norm_sqr();
        if coef == 0.0 {
            continue;
        }
        let h = ch.h(k, i);
        a.gerc(C64::new(coef, 0.0), h, h, C64::new(1.0, 0.0));
    }
    let b = ch.h(k, k) * (u[k].conj() * (weights[k] * v[k]));
    (a, b)
}

/// Beamformer update for fixed filters and weights; returns the new
/// beamformers and their multipliers.
pub fn update_w(
    ch: &ChannelTensor,
    u: &[C64],
    v: &[f64],
    weights: &[f64],
    budgets: &[f64],
) -> Result<(BeamformerSet, Vec<f64>)> {
    if let Some((pair, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveMse { pair, value: 1.0 / value });
    }
    let mut w = Vec::with_capacity(ch.pairs());
    let mut mu = Vec::with_capacity(ch.pairs());
    for k in 0..ch.pairs() {
        let (a, b) = beamformer_system(ch, u, v, weights, k);
        let sol = solve_power_constrained(a, &b, budgets[k]);
        w.push(sol.w);
        mu.push(sol.mu);
    }
    Ok((BeamformerSet { w, budgets: budgets.to_vec() }, mu))
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(1e-300)
}

/// Runs WMMSE sweeps from `init` (full-power MRT when `None`) until the
/// relative wsr change drops below `params.tol` or `params.max_iter`
/// sweeps. Returns the best iterate seen.
pub fn solve(
    ch: &ChannelTensor,
    noise: &[f64],
    weights: &[f64],
    budgets: &[f64],
    params: &WmmseParams,
    init: Option<&BeamformerSet>,
) -> WmmseState {
    let kk = ch.pairs();
    let mut w = match init {
        Some(bf) => bf.clone(),
        None => mrt(ch, budgets).beamformers,
    };
    let mut current = wsr(ch, &w.w, noise, weights);
    let mut trace = vec![current];
    let mut best = (w.clone(), current, vec![0.0; kk]);
    let mut u = update_u(ch, &w.w, noise);
    let mut v: Vec<f64> = vec![1.0; kk];
    let mut sweeps = 0;
    for _ in 0..params.max_iter {
        u = update_u(ch, &w.w, noise);
        let e = mse(ch, &w.w, &u, noise);
        v = match update_v(&e) {
            Ok(v) => v,
            Err(_) => break,
        };
        let (next, mu) = match update_w(ch, &u, &v, weights, budgets) {
            Ok(x) => x,
            Err(_) => break,
        };
        w = next;
        sweeps += 1;
        let value = wsr(ch, &w.w, noise, weights);
        trace.push(value);
        if value > best.1 {
            best = (w.clone(), value, mu);
        }
        let done = relative_change(value, current) < params.tol;
        current = value;
        if done {
            break;
        }
    }
    let (w, value, multipliers) = best;
    WmmseState { u, v, w, multipliers, objective_trace: trace, wsr: value, sweeps }
}
