//! Closed-form maximum-ratio (MRT) and zero-forcing (ZF) beamformers at
//! full power.

use nalgebra::Cholesky;
use serde::Serialize;

use crate::channel::ChannelTensor;
use crate::metrics::BeamformerSet;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Gram matrices above this condition number get a small ridge before
/// inversion.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Diagnostic {
    /// `h_{k,k} = 0`: the pair gets a zero beamformer.
    ZeroDesiredChannel { pair: usize },
    /// `P_k h_{k,k} = 0`: the desired channel lies in the span of the
    /// cross links.
    ZeroProjectedChannel { pair: usize },
    /// Cross-link Gram matrix was ill-conditioned and regularized.
    RidgeRegularized { pair: usize, condition: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearBeamformers {
    pub beamformers: BeamformerSet,
    pub diagnostics: Vec<Diagnostic>,
}

fn scale_to_budget(v: &CVector, budget: f64) -> Option<CVector> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        None
    } else {
        Some(v * C64::new(budget.sqrt() / n, 0.0))
    }
}

/// `w_k = sqrt(P_k) h_{k,k} / ||h_{k,k}||`.
pub fn mrt(ch: &ChannelTensor, budgets: &[f64]) -> LinearBeamformers {
    let mut diagnostics = Vec::new();
    let w = (0..ch.pairs())
        .map(|k| {
            scale_to_budget(ch.h(k, k), budgets[k]).unwrap_or_else(|| {
                diagnostics.push(Diagnostic::ZeroDesiredChannel { pair: k });
                CVector::zeros(ch.elements())
            })
        })
        .collect();
    LinearBeamformers { beamformers: BeamformerSet { w, budgets: budgets.to_vec() }, diagnostics }
}

/// Cross links radiated by transmitter `k`, one column per other user.
fn cross_links(ch: &ChannelTensor, k: usize) -> CMatrix {
    let others: Vec<usize> = (0..ch.pairs()).filter(|&n| n != k).collect();
    CMatrix::from_fn(ch.elements(), others.len(), |i, j| ch.h(k, others[j])[i])
}

/// Orthogonal projection onto the complement of the column span of `h`.
struct NullProjector {
    h: CMatrix,
    gram: Option<Cholesky<C64, nalgebra::Dyn>>,
    ridge: Option<f64>,
}

impl NullProjector {
    fn new(h: CMatrix) -> Self {
        if h.ncols() == 0 {
            return Self { h, gram: None, ridge: None };
        }
        let mut g = h.adjoint() * &h;
        let eig = g.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        let mut ridge = None;
        if condition > GRAM_CONDITION_LIMIT {
            let trace: f64 = (0..g.nrows()).map(|i| g[(i, i)].re).sum();
            // ridge scaled by the Gram trace over the pair count (cols + 1)
            let mut r = 1e-12 * trace / (g.ncols() + 1) as f64;
            if !(r > 0.0) {
                r = f64::MIN_POSITIVE;
            }
            for i in 0..g.nrows() {
                g[(i, i)] += C64::new(r, 0.0);
            }
            ridge = Some(condition);
        }
        let gram = Cholesky::new(g);
        Self { h, gram, ridge }
    }

    fn remove_span(&self, x: &CVector) -> CVector {
        match &self.gram {
            None => x.clone(),
            Some(chol) => x - &self.h * chol.solve(&(self.h.adjoint() * x)),
        }
    }

    /// Projection with one re-orthogonalization pass.
    fn apply(&self, x: &CVector) -> CVector {
        let once = self.remove_span(x);
        self.remove_span(&once)
    }

    fn matrix(&self) -> CMatrix {
        let m = self.h.nrows();
        match &self.gram {
            None => CMatrix::identity(m, m),
            Some(chol) => {
                let hh = self.h.adjoint();
                CMatrix::identity(m, m) - &self.h * chol.solve(&hh)
            }
        }
    }
}

fn check_zf_dims(ch: &ChannelTensor) -> Result<()> {
    if ch.elements() < ch.pairs() {
        return Err(Error::ZfNeedsMoreElements { elements: ch.elements(), pairs: ch.pairs() });
    }
    Ok(())
}

/// Projector `I - H (H^H H)^{-1} H^H` onto the null space of the cross
/// links of transmitter `k`.
pub fn zf_projector(ch: &ChannelTensor, k: usize) -> Result<(CMatrix, Option<Diagnostic>)> {
    check_zf_dims(ch)?;
    let p = NullProjector::new(cross_links(ch, k));
    let diag = p.ridge.map(|condition| Diagnostic::RidgeRegularized { pair: k, condition });
    Ok((p.matrix(), diag))
}

/// `w_k = sqrt(P_k) P_k h_{k,k} / ||P_k h_{k,k}||`.
pub fn zf(ch: &ChannelTensor, budgets: &[f64]) -> Result<LinearBeamformers> {
    check_zf_dims(ch)?;
    let mut diagnostics = Vec::new();
    let mut w = Vec::with_capacity(ch.pairs());
    for k in 0..ch.pairs() {
        let p = NullProjector::new(cross_links(ch, k));
        if let Some(condition) = p.ridge {
            diagnostics.push(Diagnostic::RidgeRegularized { pair: k, condition });
        }
        let h = ch.h(k, k);
        let x = p.apply(h);
        let wk = if x.norm() <= 1e-14 * h.norm() { None } else { scale_to_budget(&x, budgets[k]) };
        w.push(wk.unwrap_or_else(|| {
            diagnostics.push(if h.norm() == 0.0 {
                Diagnostic::ZeroDesiredChannel { pair: k }
            } else {
                Diagnostic::ZeroProjectedChannel { pair: k }
            });
            CVector::zeros(ch.elements())
        }));
    }
    Ok(LinearBeamformers { beamformers: BeamformerSet { w, budgets: budgets.to_vec() }, diagnostics })
}

/// `||P_k h_{k,k}||^2` for every pair: the effective ZF channel gain.
pub fn zf_effective_gains(ch: &ChannelTensor) -> Result<Vec<f64>> {
    check_zf_dims(ch)?;
    Ok((0..ch.pairs())
        .map(|k| NullProjector::new(cross_links(ch, k)).apply(ch.h(k, k)).norm_squared())
        .collect())
}
