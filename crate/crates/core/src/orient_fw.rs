//! Frank-Wolfe orientation updates on a product of spherical caps, the
//! alternating WMMSE / Frank-Wolfe driver, and single-block orientation
//! optimization under MRT or ZF beamforming.
//!
//! One Frank-Wolfe step: ambient gradient `g`, tangent projection
//! `(I - f f^T) g`, closed-form linear oracle `s` over the cap, direction
//! `d = s - f`, gap `sigma = sum <T g, d>`, and an Armijo backtracked step
//! `f <- normalize(f + rho d)`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, OrientationSet};
use crate::linear_bf::{mrt, zf, Diagnostic};
use crate::metrics::{wsr, wsr_orientation_gradient, BeamformerSet};
use crate::scene::SceneConfig;
use crate::wmmse::{self, WmmseParams};
use crate::{Error, Result, Vec3};

/// Below this norm a tangent gradient counts as zero.
pub const STATIONARY_NORM: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmijoParams {
    pub c_a: f64,
    pub beta: f64,
    pub rho_min: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self { c_a: 0.1, beta: 0.5, rho_min: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FwParams {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: ArmijoParams,
}

impl Default for FwParams {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200, armijo: ArmijoParams::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoParams {
    pub tol: f64,
    pub max_iter: usize,
    pub wmmse: WmmseParams,
    pub fw: FwParams,
}

impl Default for AoParams {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 50, wmmse: WmmseParams::default(), fw: FwParams::default() }
    }
}

/// `(I - f f^T) g`.
pub fn tangent_project(f: &Vec3, g: &Vec3) -> Vec3 {
    g - f * f.dot(g)
}

/// Maximizer of `<tg, x>` over the cap `{x : |x| = 1, x_z >= cos theta_max}`.
pub fn cap_oracle(f: &Vec3, tg: &Vec3, theta_max: f64) -> Vec3 {
    let n = tg.norm();
    if n < STATIONARY_NORM {
        return *f;
    }
    let g = tg / n;
    let (sin_t, cos_t) = theta_max.sin_cos();
    if g.z >= cos_t {
        return g;
    }
    let xy = (g.x * g.x + g.y * g.y).sqrt();
    if xy > 0.0 {
        Vec3::new(sin_t * g.x / xy, sin_t * g.y / xy, cos_t)
    } else {
        // straight down: every rim point is optimal, take azimuth 0
        Vec3::new(sin_t, 0.0, cos_t)
    }
}

/// `sum <T g, d>` over all elements.
pub fn fw_gap(tangent_gradients: &[Vec3], directions: &[Vec3]) -> f64 {
    tangent_gradients.iter().zip(directions).map(|(g, d)| g.dot(d)).sum()
}

/// `normalize(f + rho d)`.
pub fn fw_update(f: &Vec3, d: &Vec3, rho: f64) -> Vec3 {
    (f + d * rho).normalize()
}

/// Objective over orientations, maximized by Frank-Wolfe.
pub trait OrientationObjective {
    fn value(&self, f: &OrientationSet) -> f64;
    /// Ambient gradient per element, `g[k * M + m]`.
    fn gradient(&self, f: &OrientationSet) -> Vec<Vec3>;
}

/// Weighted sum-rate with fixed beamformers and the analytic gradient.
pub struct FixedBeamformerWsr<'a> {
    pub model: &'a ChannelModel,
    pub beamformers: &'a BeamformerSet,
    pub noise: &'a [f64],
    pub weights: &'a [f64],
}

impl OrientationObjective for FixedBeamformerWsr<'_> {
    fn value(&self, f: &OrientationSet) -> f64 {
        wsr(&self.model.channels(f), &self.beamformers.w, self.noise, self.weights)
    }

    fn gradient(&self, f: &OrientationSet) -> Vec<Vec3> {
        let ch = self.model.channels_with_gradient(f);
        wsr_orientation_gradient(&ch, self.beamformers, self.noise, self.weights)
            .expect("dimensions checked at construction")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearScheme {
    Mrt,
    Zf,
}

/// Weighted sum-rate when beamformers are recomputed by MRT or ZF from the
/// current channels. Gradients come from tangent-space central differences.
pub struct LinearBeamformerWsr<'a> {
    pub model: &'a ChannelModel,
    pub scheme: LinearScheme,
    pub budgets: &'a [f64],
    pub noise: &'a [f64],
    pub weights: &'a [f64],
    pub fd_step: f64,
}

impl LinearBeamformerWsr<'_> {
    pub fn beamformers(&self, f: &OrientationSet) -> (BeamformerSet, Vec<Diagnostic>) {
        let ch = self.model.channels(f);
        let out = match self.scheme {
            LinearScheme::Mrt => mrt(&ch, self.budgets),
            LinearScheme::Zf => zf(&ch, self.budgets).expect("element count checked at construction"),
        };
        (out.beamformers, out.diagnostics)
    }
}

/// Orthonormal basis of the tangent plane at unit `f`.
pub fn tangent_basis(f: &Vec3) -> (Vec3, Vec3) {
    let a = if f.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = tangent_project(f, &a).normalize();
    (t1, f.cross(&t1))
}

impl OrientationObjective for LinearBeamformerWsr<'_> {
    fn value(&self, f: &OrientationSet) -> f64 {
        let ch = self.model.channels(f);
        let bf = match self.scheme {
            LinearScheme::Mrt => mrt(&ch, self.budgets),
            LinearScheme::Zf => zf(&ch, self.budgets).expect("element count checked at construction"),
        };
        wsr(&ch, &bf.beamformers.w, self.noise, self.weights)
    }

    fn gradient(&self, f: &OrientationSet) -> Vec<Vec3> {
        let h = self.fd_step;
        let mut probe = f.clone();
        let mut out = Vec::with_capacity(f.as_slice().len());
        for i in 0..f.as_slice().len() {
            let fi = f.as_slice()[i];
            let (t1, t2) = tangent_basis(&fi);
            let mut g = Vec3::zeros();
            for t in [t1, t2] {
                probe.as_mut_slice()[i] = (fi + t * h).normalize();
                let up = self.value(&probe);
                probe.as_mut_slice()[i] = (fi - t * h).normalize();
                let down = self.value(&probe);
                g += t * ((up - down) / (2.0 * h));
            }
            probe.as_mut_slice()[i] = fi;
            out.push(g);
        }
        out
    }
}

/// Result of one Frank-Wolfe step.
#[derive(Clone, Debug, PartialEq)]
pub struct FwIterate {
    pub orientations: OrientationSet,
    pub gap: f64,
    /// Accepted stepsize; 0 when the point is stationary or the search stalled.
    pub step: f64,
    pub wsr: f64,
    /// False when backtracking fell below `rho_min` without meeting the
    /// sufficient-increase condition.
    pub accepted: bool,
}

/// One Frank-Wolfe step with Armijo backtracking from `current`, whose
/// objective value is `value`.
pub fn armijo_fw_step<O: OrientationObjective + ?Sized>(
    objective: &O,
    current: &OrientationSet,
    value: f64,
    theta_max: f64,
    armijo: &ArmijoParams,
) -> FwIterate {
    let g = objective.gradient(current);
    let f = current.as_slice();
    let tg: Vec<Vec3> = f.iter().zip(&g).map(|(f, g)| tangent_project(f, g)).collect();
    let d: Vec<Vec3> = f
        .iter()
        .zip(&tg)
        .map(|(f, tg)| cap_oracle(f, tg, theta_max) - f)
        .collect();
    let gap = fw_gap(&tg, &d);
    let unchanged = |accepted| FwIterate { orientations: current.clone(), gap, step: 0.0, wsr: value, accepted };
    if !(gap > 0.0) {
        return unchanged(true);
    }
    let mut rho = 1.0;
    let mut candidate = current.clone();
    while rho >= armijo.rho_min {
        for ((c, f), d) in candidate.as_mut_slice().iter_mut().zip(f).zip(&d) {
            *c = fw_update(f, d, rho);
        }
        let next = objective.value(&candidate);
        if next >= value + armijo.c_a * rho * gap {
            return FwIterate { orientations: candidate, gap, step: rho, wsr: next, accepted: true };
        }
        rho *= armijo.beta;
    }
    unchanged(false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub wsr: f64,
    pub gap: f64,
    pub step: f64,
}

/// Worst feasibility violation seen along a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeasibilityRecord {
    /// max over iterates and elements of `| |f| - 1 |`
    pub max_norm_error: f64,
    /// max over iterates and elements of `cos theta_max - f_z`
    pub max_cap_violation: f64,
    /// max over iterates and pairs of `|w_k|^2 - P_k` (mW)
    pub max_power_excess: f64,
}

impl FeasibilityRecord {
    fn new() -> Self {
        Self { max_norm_error: 0.0, max_cap_violation: f64::NEG_INFINITY, max_power_excess: f64::NEG_INFINITY }
    }

    fn observe_orientations(&mut self, f: &OrientationSet, theta_max: f64) {
        let c = theta_max.cos();
        for v in f.as_slice() {
            self.max_norm_error = self.max_norm_error.max((v.norm() - 1.0).abs());
            self.max_cap_violation = self.max_cap_violation.max(c - v.z);
        }
    }

    fn observe_beamformers(&mut self, bf: &BeamformerSet) {
        for (k, p) in bf.budgets.iter().enumerate() {
            self.max_power_excess = self.max_power_excess.max(bf.power(k) - p);
        }
    }

    fn merge(&mut self, other: &Self) {
        self.max_norm_error = self.max_norm_error.max(other.max_norm_error);
        self.max_cap_violation = self.max_cap_violation.max(other.max_cap_violation);
        self.max_power_excess = self.max_power_excess.max(other.max_power_excess);
    }
}

#[derive(Clone, Debug)]
pub struct FwOutcome {
    pub orientations: OrientationSet,
    pub wsr: f64,
    pub initial_wsr: f64,
    /// One row per step taken (at most `max_iter`).
    pub trace: Vec<TraceRow>,
    pub stalled: bool,
    pub feasibility: FeasibilityRecord,
}

/// Frank-Wolfe with Armijo steps until the relative objective change drops
/// below `params.tol`, the point is stationary, backtracking stalls, or
/// `params.max_iter` steps.
pub fn optimize_orientations<O: OrientationObjective + ?Sized>(
    objective: &O,
    initial: &OrientationSet,
    theta_max: f64,
    params: &FwParams,
) -> FwOutcome {
    let mut f = initial.clone();
    let mut value = objective.value(&f);
    let initial_wsr = value;
    let mut trace = Vec::new();
    let mut stalled = false;
    let mut feasibility = FeasibilityRecord::new();
    feasibility.observe_orientations(&f, theta_max);
    for t in 0..params.max_iter {
        let it = armijo_fw_step(objective, &f, value, theta_max, &params.armijo);
        trace.push(TraceRow { iteration: t + 1, wsr: it.wsr, gap: it.gap, step: it.step });
        if !it.accepted {
            stalled = true;
            break;
        }
        if it.step == 0.0 {
            break;
        }
        feasibility.observe_orientations(&it.orientations, theta_max);
        let previous = value;
        f = it.orientations;
        value = it.wsr;
        if (value - previous).abs() <= params.tol * previous.abs() {
            break;
        }
    }
    FwOutcome { orientations: f, wsr: value, initial_wsr, trace, stalled, feasibility }
}

#[derive(Clone, Debug)]
pub struct AoOutcome {
    pub beamformers: BeamformerSet,
    pub orientations: OrientationSet,
    pub wsr: f64,
    /// wsr of the starting point (upright boresights, MRT).
    pub initial_wsr: f64,
    /// wsr after the first beamforming block, i.e. the fixed-orientation
    /// WMMSE baseline.
    pub baseline_wsr: f64,
    /// Per outer iteration: wsr after the orientation block, plus the gap
    /// and stepsize of its first Frank-Wolfe step.
    pub trace: Vec<TraceRow>,
    pub wmmse_traces: Vec<Vec<f64>>,
    pub fw_traces: Vec<FwOutcome>,
    pub feasibility: FeasibilityRecord,
}

/// Alternates WMMSE beamforming (warm-started) and Frank-Wolfe orientation
/// updates from upright boresights and full-power MRT. Stops on a small
/// relative wsr change, after `params.max_iter` outer iterations, or when
/// the orientation block leaves the boresights unchanged.
pub fn ao_solve(model: &ChannelModel, config: &SceneConfig, params: &AoParams) -> AoOutcome {
    ao_solve_from(model, config, params, OrientationSet::upright(config.pairs, config.elements()))
}

pub fn ao_solve_from(
    model: &ChannelModel,
    config: &SceneConfig,
    params: &AoParams,
    initial: OrientationSet,
) -> AoOutcome {
    let noise = config.noise_mw();
    let budgets = config.budgets_mw();
    let weights = &config.weights;
    let theta_max = config.theta_max;

    let mut f = initial;
    let ch = model.channels(&f);
    let mut w = mrt(&ch, &budgets).beamformers;
    let initial_wsr = wsr(&ch, &w.w, &noise, weights);
    let mut value = initial_wsr;
    let mut baseline_wsr = initial_wsr;
    let mut trace = Vec::new();
    let mut wmmse_traces = Vec::new();
    let mut fw_traces = Vec::new();
    let mut feasibility = FeasibilityRecord::new();
    feasibility.observe_orientations(&f, theta_max);
    feasibility.observe_beamformers(&w);

    for t in 0..params.max_iter {
        let ch = model.channels(&f);
        let st = wmmse::solve(&ch, &noise, weights, &budgets, &params.wmmse, Some(&w));
        w = st.w;
        feasibility.observe_beamformers(&w);
        wmmse_traces.push(st.objective_trace);
        if t == 0 {
            baseline_wsr = st.wsr;
        }
        let objective = FixedBeamformerWsr { model, beamformers: &w, noise: &noise, weights };
        let fw = optimize_orientations(&objective, &f, theta_max, &params.fw);
        feasibility.merge(&fw.feasibility);
        let first = fw.trace.first();
        trace.push(TraceRow {
            iteration: t + 1,
            wsr: fw.wsr,
            gap: first.map_or(0.0, |r| r.gap),
            step: first.map_or(0.0, |r| r.step),
        });
        let moved = fw.orientations != f;
        let previous = value;
        f = fw.orientations.clone();
        value = fw.wsr;
        fw_traces.push(fw);
        if !moved || (value - previous).abs() <= params.tol * previous.abs() {
            break;
        }
    }
    AoOutcome {
        beamformers: w,
        orientations: f,
        wsr: value,
        initial_wsr,
        baseline_wsr,
        trace,
        wmmse_traces,
        fw_traces,
        feasibility,
    }
}

#[derive(Clone, Debug)]
pub struct LinearRaOutcome {
    pub orientations: OrientationSet,
    pub beamformers: BeamformerSet,
    pub wsr: f64,
    pub fw: FwOutcome,
    pub diagnostics: Vec<Diagnostic>,
}

/// Finite-difference step for the MRT/ZF orientation gradients.
pub const FD_STEP: f64 = 1e-6;

/// Frank-Wolfe over orientations with beamformers recomputed in closed form
/// (MRT or ZF) at every evaluation, from upright boresights.
pub fn optimize_orientations_linear(
    model: &ChannelModel,
    config: &SceneConfig,
    scheme: LinearScheme,
    params: &FwParams,
) -> Result<LinearRaOutcome> {
    if scheme == LinearScheme::Zf && config.elements() < config.pairs {
        return Err(Error::ZfNeedsMoreElements { elements: config.elements(), pairs: config.pairs });
    }
    let noise = config.noise_mw();
    let budgets = config.budgets_mw();
    let objective = LinearBeamformerWsr {
        model,
        scheme,
        budgets: &budgets,
        noise: &noise,
        weights: &config.weights,
        fd_step: FD_STEP,
    };
    let initial = OrientationSet::upright(config.pairs, config.elements());
    let fw = optimize_orientations(&objective, &initial, config.theta_max, params);
    let (beamformers, diagnostics) = objective.beamformers(&fw.orientations);
    Ok(LinearRaOutcome { orientations: fw.orientations.clone(), beamformers, wsr: fw.wsr, fw, diagnostics })
}

pub fn optimize_orientations_mrt(model: &ChannelModel, config: &SceneConfig, params: &FwParams) -> Result<LinearRaOutcome> {
    optimize_orientations_linear(model, config, LinearScheme::Mrt, params)
}

pub fn optimize_orientations_zf(model: &ChannelModel, config: &SceneConfig, params: &FwParams) -> Result<LinearRaOutcome> {
    optimize_orientations_linear(model, config, LinearScheme::Zf, params)
}
