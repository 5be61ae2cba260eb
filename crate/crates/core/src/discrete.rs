//! Finite orientation codebooks, nearest-codeword quantization, and joint
//! discrete orientation / beamforming search by the cross-entropy method,
//! with an exhaustive search for tiny instances.

use std::f64::consts::PI;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{boresight_from_angles, ChannelModel, ChannelTensor, OrientationSet};
use crate::metrics::BeamformerSet;
use crate::scene::SceneConfig;
use crate::wmmse::{self, WmmseParams};
use crate::{Error, Result, Vec3, C64};

/// Codewords closer than this (radians) are treated as the same direction.
pub const DUPLICATE_ANGLE: f64 = 1e-9;

/// Upper bound on the number of assignments [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CodebookKind {
    UniformGrid { n_theta: usize, n_phi: usize },
    Fibonacci { n_dir: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub kind: CodebookKind,
    pub theta_max: f64,
    /// Distinct unit boresights inside the cap.
    pub directions: Vec<Vec3>,
    /// `(theta, phi)` of each direction.
    pub angles: Vec<(f64, f64)>,
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

impl Codebook {
    fn from_angles(kind: CodebookKind, theta_max: f64, raw: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut directions: Vec<Vec3> = Vec::new();
        let mut angles = Vec::new();
        for (theta, phi) in raw {
            let f = boresight_from_angles(theta, phi).expect("codebook angles are in range");
            if directions.iter().all(|d| angle_between(d, &f) > DUPLICATE_ANGLE) {
                directions.push(f);
                angles.push((theta, phi));
            }
        }
        let c = theta_max.cos();
        assert!(directions.iter().all(|f| f.z >= c), "codeword outside the cap");
        Self { kind, theta_max, directions, angles }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Writes `index,theta,phi,x,y,z` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "theta", "phi", "x", "y", "z"])?;
        for (i, (f, (theta, phi))) in self.directions.iter().zip(&self.angles).enumerate() {
            w.write_record([
                i.to_string(),
                fixed(*theta),
                fixed(*phi),
                fixed(f.x),
                fixed(f.y),
                fixed(f.z),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Angular distance from each codeword to its nearest neighbour.
    pub fn nearest_neighbor_angles(&self) -> Vec<f64> {
        self.directions
            .iter()
            .enumerate()
            .map(|(i, a)| {
                self.directions
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| angle_between(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Nine decimals, with negative zero printed as zero.
fn fixed(x: f64) -> String {
    format!("{:.9}", x + 0.0)
}

fn check_theta_max(theta_max: f64) -> Result<()> {
    if !(0.0..=PI / 2.0).contains(&theta_max) {
        return Err(Error::AngleOutOfRange(format!("theta_max = {theta_max} is outside [0, pi/2]")));
    }
    Ok(())
}

/// Zenith levels `0, theta_max/(N_theta-1), ..., theta_max` crossed with
/// azimuths `-pi + 2 pi i / N_phi`. Repeated pole directions are dropped.
pub fn uniform_grid_codebook(n_theta: usize, n_phi: usize, theta_max: f64) -> Result<Codebook> {
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::InvalidConfig("grid codebook needs N_theta >= 1 and N_phi >= 1".into()));
    }
    check_theta_max(theta_max)?;
    let raw = (0..n_theta).flat_map(|j| {
        // Fraction first, so the top ring sits exactly on theta_max.
        let theta = if n_theta == 1 { 0.0 } else { theta_max * (j as f64 / (n_theta - 1) as f64) };
        (0..n_phi).map(move |i| (theta, -PI + 2.0 * PI * i as f64 / n_phi as f64))
    });
    Ok(Codebook::from_angles(CodebookKind::UniformGrid { n_theta, n_phi }, theta_max, raw))
}

/// Spherical Fibonacci points on the cap: equally spaced `cos theta`, and
/// golden-angle azimuths wrapped into `[-pi, pi)`.
pub fn fibonacci_codebook(n_dir: usize, theta_max: f64) -> Result<Codebook> {
    if n_dir == 0 {
        return Err(Error::InvalidConfig("Fibonacci codebook needs N_dir >= 1".into()));
    }
    check_theta_max(theta_max)?;
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let one_minus_cos = 1.0 - theta_max.cos();
    let raw = (0..n_dir).map(|i| {
        let z = 1.0 - (i as f64 + 0.5) / n_dir as f64 * one_minus_cos;
        let x = i as f64 / (golden * golden);
        let mut phi = 2.0 * PI * (x - x.floor());
        if phi >= PI {
            phi -= 2.0 * PI;
        }
        (z.acos(), phi)
    });
    Ok(Codebook::from_angles(CodebookKind::Fibonacci { n_dir }, theta_max, raw))
}

/// Index of the codeword with the largest cosine to `f` (lowest index on ties).
pub fn nearest_index(f: &Vec3, codebook: &Codebook) -> usize {
    let mut best = 0;
    let mut best_cos = f64::NEG_INFINITY;
    for (i, c) in codebook.directions.iter().enumerate() {
        let cos = f.dot(c);
        if cos > best_cos {
            best = i;
            best_cos = cos;
        }
    }
    best
}

/// Replaces every boresight with its nearest codeword.
pub fn nearest_projection(orientations: &OrientationSet, codebook: &Codebook) -> OrientationSet {
    let mut out = orientations.clone();
    for f in out.as_mut_slice() {
        *f = codebook.directions[nearest_index(f, codebook)];
    }
    out
}

/// Element responses for every (element, codeword) pair so that channels of
/// any assignment are assembled by lookup.
pub struct ResponseTable {
    pairs: usize,
    elements: usize,
    codewords: usize,
    values: Vec<C64>,
}

impl ResponseTable {
    pub fn new(model: &ChannelModel, codebook: &Codebook) -> Self {
        let (kk, mm, nn) = (model.pairs(), model.elements(), codebook.len());
        let mut values = vec![C64::new(0.0, 0.0); kk * mm * nn * kk];
        for k in 0..kk {
            for m in 0..mm {
                for (c, f) in codebook.directions.iter().enumerate() {
                    let base = ((k * mm + m) * nn + c) * kk;
                    model.element_response(k, m, f, &mut values[base..base + kk]);
                }
            }
        }
        Self { pairs: kk, elements: mm, codewords: nn, values }
    }

    /// Channels for the assignment `indices[k * M + m]`.
    pub fn channels(&self, indices: &[usize]) -> ChannelTensor {
        let (kk, mm, nn) = (self.pairs, self.elements, self.codewords);
        let mut h = vec![crate::CVector::zeros(mm); kk * kk];
        for k in 0..kk {
            for m in 0..mm {
                let base = ((k * mm + m) * nn + indices[k * mm + m]) * kk;
                for n in 0..kk {
                    h[k * kk + n][m] = self.values[base + n];
                }
            }
        }
        ChannelTensor::from_vectors(kk, mm, h).expect("table dimensions are consistent")
    }
}

fn orientations_from(indices: &[usize], codebook: &Codebook, pairs: usize, elements: usize) -> OrientationSet {
    let f = indices.iter().map(|&i| codebook.directions[i]).collect();
    OrientationSet::new(pairs, elements, f).expect("one codeword per element")
}

/// WMMSE from full-power MRT on the channels of one assignment.
struct Evaluator<'a> {
    table: ResponseTable,
    noise: Vec<f64>,
    budgets: Vec<f64>,
    weights: &'a [f64],
}

impl Evaluator<'_> {
    fn solve(&self, indices: &[usize], params: &WmmseParams) -> (BeamformerSet, f64) {
        let ch = self.table.channels(indices);
        let st = wmmse::solve(&ch, &self.noise, self.weights, &self.budgets, params, None);
        (st.w, st.wsr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemParams {
    pub sample_size: usize,
    pub elite_fraction: f64,
    pub smoothing: f64,
    pub max_iter: usize,
    /// WMMSE budget for each sampled assignment.
    pub inner: WmmseParams,
    /// WMMSE budget for the final re-solve on the best assignment.
    pub polish: WmmseParams,
}

impl Default for CemParams {
    fn default() -> Self {
        Self {
            sample_size: 64,
            elite_fraction: 0.2,
            smoothing: 0.7,
            max_iter: 30,
            inner: WmmseParams { tol: 1e-5, max_iter: 100 },
            polish: WmmseParams::default(),
        }
    }
}

impl CemParams {
    pub fn elite_count(&self) -> usize {
        (self.elite_fraction * self.sample_size as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 1 {
            return Err(Error::InvalidSearch("CEM needs at least one sample per iteration".into()));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) || self.elite_fraction * (self.sample_size as f64) < 1.0 {
            return Err(Error::InvalidSearch(format!(
                "elite fraction {} of {} samples selects no elites",
                self.elite_fraction, self.sample_size
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::InvalidSearch(format!("smoothing {} is outside (0, 1]", self.smoothing)));
        }
        Ok(())
    }
}

/// Per-variable categorical distributions over the codebook.
#[derive(Clone, Debug, PartialEq)]
pub struct CemModel {
    pub pmfs: Vec<Vec<f64>>,
}

impl CemModel {
    pub fn uniform(variables: usize, codewords: usize) -> Self {
        Self { pmfs: vec![vec![1.0 / codewords as f64; codewords]; variables] }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        self.pmfs
            .iter()
            .map(|p| WeightedIndex::new(p).expect("pmf has positive mass").sample(rng))
            .collect()
    }

    /// `p <- (1 - tau) p + tau q` with `q` the elite frequencies.
    pub fn update(&mut self, elites: &[&[usize]], tau: f64) {
        let share = 1.0 / elites.len() as f64;
        for (j, p) in self.pmfs.iter_mut().enumerate() {
            let mut q = vec![0.0; p.len()];
            for e in elites {
                q[e[j]] += share;
            }
            for (p, q) in p.iter_mut().zip(q) {
                *p = (1.0 - tau) * *p + tau * q;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CemTraceRow {
    pub iteration: usize,
    /// Best-so-far wsr after this iteration.
    pub wsr: f64,
    /// Best wsr among this iteration's samples.
    pub sample_best: f64,
}

#[derive(Clone, Debug)]
pub struct CemOutcome {
    pub orientations: OrientationSet,
    pub indices: Vec<usize>,
    pub beamformers: BeamformerSet,
    /// wsr after the final full-tolerance WMMSE on the best assignment.
    pub wsr: f64,
    /// wsr of the initial sample.
    pub initial_wsr: f64,
    pub trace: Vec<CemTraceRow>,
    pub model: CemModel,
}

fn evaluate_batch(eval: &Evaluator<'_>, samples: &[Vec<usize>], params: &WmmseParams) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        samples.par_iter().map(|s| eval.solve(s, params).1).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        samples.iter().map(|s| eval.solve(s, params).1).collect()
    }
}

/// Cross-entropy search over codeword assignments. Randomness comes from a
/// ChaCha8 stream seeded with `seed` (stream 1, so it never overlaps the
/// topology draws made with the same seed).
pub fn cem_solve(
    model: &ChannelModel,
    config: &SceneConfig,
    codebook: &Codebook,
    params: &CemParams,
    seed: u64,
) -> Result<CemOutcome> {
    params.validate()?;
    if codebook.is_empty() {
        return Err(Error::InvalidSearch("empty codebook".into()));
    }
    let (kk, mm) = (config.pairs, config.elements());
    let eval = Evaluator {
        table: ResponseTable::new(model, codebook),
        noise: config.noise_mw(),
        budgets: config.budgets_mw(),
        weights: &config.weights,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut cem = CemModel::uniform(kk * mm, codebook.len());

    let mut best = cem.sample(&mut rng);
    let mut best_wsr = eval.solve(&best, &params.inner).1;
    let initial_wsr = best_wsr;
    let elites = params.elite_count();
    let mut trace = Vec::with_capacity(params.max_iter);
    for t in 0..params.max_iter {
        let samples: Vec<Vec<usize>> = (0..params.sample_size).map(|_| cem.sample(&mut rng)).collect();
        let scores = evaluate_batch(&eval, &samples, &params.inner);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        // stable: equal scores keep sample order
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let elite: Vec<&[usize]> = order[..elites].iter().map(|&s| samples[s].as_slice()).collect();
        cem.update(&elite, params.smoothing);
        let top = order[0];
        if scores[top] > best_wsr {
            best_wsr = scores[top];
            best = samples[top].clone();
        }
        trace.push(CemTraceRow { iteration: t + 1, wsr: best_wsr, sample_best: scores[top] });
        if codebook.len() == 1 {
            break;
        }
    }

    let (beamformers, wsr) = eval.solve(&best, &params.polish);
    Ok(CemOutcome {
        orientations: orientations_from(&best, codebook, kk, mm),
        indices: best,
        beamformers,
        wsr,
        initial_wsr,
        trace,
        model: cem,
    })
}

#[derive(Clone, Debug)]
pub struct BruteForceOutcome {
    pub orientations: OrientationSet,
    pub indices: Vec<usize>,
    pub beamformers: BeamformerSet,
    pub wsr: f64,
    pub evaluated: usize,
}

/// Exhaustive search over all `|F|^(K M)` assignments, each scored by
/// WMMSE with `params`. The first maximizer in enumeration order wins
/// (element 0 is the least significant digit).
pub fn brute_force(
    model: &ChannelModel,
    config: &SceneConfig,
    codebook: &Codebook,
    params: &WmmseParams,
) -> Result<BruteForceOutcome> {
    if codebook.is_empty() {
        return Err(Error::InvalidSearch("empty codebook".into()));
    }
    let (kk, mm) = (config.pairs, config.elements());
    let vars = kk * mm;
    let count = (codebook.len() as f64).powi(vars as i32);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchTooLarge(count));
    }
    let eval = Evaluator {
        table: ResponseTable::new(model, codebook),
        noise: config.noise_mw(),
        budgets: config.budgets_mw(),
        weights: &config.weights,
    };
    let mut digits = vec![0usize; vars];
    let mut best: Option<(Vec<usize>, BeamformerSet, f64)> = None;
    let mut evaluated = 0;
    loop {
        let (w, value) = eval.solve(&digits, params);
        evaluated += 1;
        if best.as_ref().is_none_or(|b| value > b.2) {
            best = Some((digits.clone(), w, value));
        }
        let mut j = 0;
        while j < vars {
            digits[j] += 1;
            if digits[j] < codebook.len() {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
        if j == vars {
            break;
        }
    }
    let (indices, beamformers, wsr) = best.expect("at least one assignment");
    Ok(BruteForceOutcome {
        orientations: orientations_from(&indices, codebook, kk, mm),
        indices,
        beamformers,
        wsr,
        evaluated,
    })
}
