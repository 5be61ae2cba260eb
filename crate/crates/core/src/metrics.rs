//! Per-user SINR and rates, weighted sum-rate, and the analytic gradient of
//! the weighted sum-rate with respect to every boresight.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelTensor;
use crate::{CVector, Error, Result, Vec3, C64};

/// Transmit beamformers `w_k` with their power budgets (mW).
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CVector>,
    pub budgets: Vec<f64>,
}

impl BeamformerSet {
    pub fn zeros(elements: usize, budgets: Vec<f64>) -> Self {
        Self { w: vec![CVector::zeros(elements); budgets.len()], budgets }
    }

    pub fn pairs(&self) -> usize {
        self.w.len()
    }

    pub fn power(&self, k: usize) -> f64 {
        self.w[k].norm_squared()
    }

    /// Every `||w_k||^2 <= P_k + tol`.
    pub fn within_budget(&self, tol: f64) -> bool {
        self.w.iter().zip(&self.budgets).all(|(w, &p)| w.norm_squared() <= p + tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub signal: Vec<f64>,
    pub interference_plus_noise: Vec<f64>,
    /// bps/Hz
    pub rate: Vec<f64>,
    pub wsr: f64,
}

fn check_dims(ch: &ChannelTensor, bf: &BeamformerSet, noise: &[f64], weights: &[f64]) -> Result<()> {
    let k = ch.pairs();
    if bf.w.len() != k || noise.len() != k || weights.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{k} pairs but {} beamformers, {} noise powers, {} weights",
            bf.w.len(),
            noise.len(),
            weights.len()
        )));
    }
    if let Some(w) = bf.w.iter().find(|w| w.len() != ch.elements()) {
        return Err(Error::DimensionMismatch(format!(
            "beamformer of length {} for {} elements",
            w.len(),
            ch.elements()
        )));
    }
    Ok(())
}

/// Received amplitudes `c[k * K + n] = h_{k,n}^H w_k`.
pub(crate) fn cross_gains(ch: &ChannelTensor, w: &[CVector]) -> Vec<C64> {
    let kk = ch.pairs();
    let mut c = Vec::with_capacity(kk * kk);
    for k in 0..kk {
        for n in 0..kk {
            c.push(ch.h(k, n).dotc(&w[k]));
        }
    }
    c
}

/// Signal and interference-plus-noise powers from cross gains.
pub(crate) fn powers(kk: usize, c: &[C64], noise: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; kk];
    let mut i = noise.to_vec();
    for k in 0..kk {
        for n in 0..kk {
            let p = c[k * kk + n].norm_sqr();
            if k == n {
                s[n] = p;
            } else {
                i[n] += p;
            }
        }
    }
    (s, i)
}

pub fn rates(ch: &ChannelTensor, bf: &BeamformerSet, noise: &[f64], weights: &[f64]) -> Result<RateReport> {
    check_dims(ch, bf, noise, weights)?;
    if noise.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidConfig("noise powers must be positive".into()));
    }
    let kk = ch.pairs();
    let c = cross_gains(ch, &bf.w);
    let (signal, ipn) = powers(kk, &c, noise);
    let rate: Vec<f64> = signal.iter().zip(&ipn).map(|(s, i)| (1.0 + s / i).log2()).collect();
    let wsr = rate.iter().zip(weights).map(|(r, a)| a * r).sum();
    Ok(RateReport { signal, interference_plus_noise: ipn, rate, wsr })
}

/// Weighted sum-rate only; dimensions are assumed consistent.
pub fn wsr(ch: &ChannelTensor, w: &[CVector], noise: &[f64], weights: &[f64]) -> f64 {
    let kk = ch.pairs();
    let c = cross_gains(ch, w);
    let (s, i) = powers(kk, &c, noise);
    (0..kk).map(|k| weights[k] * (1.0 + s[k] / i[k]).log2()).sum()
}

/// Ambient gradient `g_{k,m}` of the weighted sum-rate with respect to
/// each boresight, returned as `g[k * M + m]`. Tangent projection is left
/// to the caller.
pub fn wsr_orientation_gradient(
    ch: &ChannelTensor,
    bf: &BeamformerSet,
    noise: &[f64],
    weights: &[f64],
) -> Result<Vec<Vec3>> {
    check_dims(ch, bf, noise, weights)?;
    if !ch.has_gradient() {
        return Err(Error::MissingGradient);
    }
    let kk = ch.pairs();
    let mm = ch.elements();
    let c = cross_gains(ch, &bf.w);
    let (s, i) = powers(kk, &c, noise);
    // interference sensitivity of each user
    let b: Vec<f64> = (0..kk)
        .map(|l| weights[l] * s[l] / (i[l] * (i[l] + s[l])))
        .collect();
    let scale = 2.0 / LN_2;
    let mut out = vec![Vec3::zeros(); kk * mm];
    for k in 0..kk {
        let a = c[k * kk + k] * (weights[k] / (i[k] + s[k]));
        for m in 0..mm {
            let wc = bf.w[k][m].conj();
            if wc == C64::new(0.0, 0.0) {
                continue;
            }
            let mut acc = ch.grad(k, m, k).unwrap() * a;
            for l in (0..kk).filter(|&l| l != k) {
                acc -= ch.grad(k, m, l).unwrap() * (c[k * kk + l] * b[l]);
            }
            out[k * mm + m] = Vec3::new((wc * acc.x).re, (wc * acc.y).re, (wc * acc.z).re) * scale;
        }
    }
    Ok(out)
}
