//! Orientation-dependent channels for arrays of directional elements.
//!
//! Each element radiates with the cosine power pattern
//! `G(eps) = 2(2p+1) [cos eps]_+^{2p}` around its boresight. The channel
//! from element `m` of transmitter `k` to user `n` is the sum of a Friis
//! LoS term and bi-static scattering through every cluster. Only the
//! boresights of transmitter `k` enter `h_{k,n}`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::Serialize;

use crate::scene::{SceneConfig, Topology};
use crate::{CVector, Error, Result, Vec3, C64};

/// Maximum boresight gain `2(2p+1)`.
pub fn max_gain(p: u32) -> f64 {
    2.0 * (2.0 * p as f64 + 1.0)
}

/// Power gain of one element for a direction at angle `eps` off boresight.
pub fn element_gain(cos_eps: f64, p: u32) -> f64 {
    if cos_eps <= 0.0 {
        return 0.0;
    }
    max_gain(p) * cos_eps.powi(2 * p as i32)
}

/// Amplitude factor `[c]_+^p`. For `p = 0` this is the front-hemisphere
/// indicator.
#[inline]
fn pattern(c: f64, p: u32) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        c.powi(p as i32)
    }
}

/// Derivative of [`pattern`] in `c`; zero at and behind the visibility
/// boundary, and identically zero for `p = 0`.
#[inline]
fn pattern_slope(c: f64, p: u32) -> f64 {
    if p == 0 || c <= 0.0 {
        0.0
    } else {
        p as f64 * c.powi(p as i32 - 1)
    }
}

/// Boresight unit vector for zenith `theta` in `[0, pi/2]` and azimuth
/// `phi` in `[-pi, pi)`.
pub fn boresight_from_angles(theta: f64, phi: f64) -> Result<Vec3> {
    if !(0.0..=PI / 2.0).contains(&theta) {
        return Err(Error::AngleOutOfRange(format!("zenith {theta} outside [0, pi/2]")));
    }
    if !(-PI..PI).contains(&phi) {
        return Err(Error::AngleOutOfRange(format!("azimuth {phi} outside [-pi, pi)")));
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(Vec3::new(st * cp, st * sp, ct))
}

/// Boresights of all elements, `f[k * M + m]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationSet {
    pairs: usize,
    elements: usize,
    f: Vec<Vec3>,
}

impl OrientationSet {
    pub fn new(pairs: usize, elements: usize, f: Vec<Vec3>) -> Result<Self> {
        if f.len() != pairs * elements {
            return Err(Error::DimensionMismatch(format!(
                "{} boresights for {pairs} x {elements} elements",
                f.len()
            )));
        }
        Ok(Self { pairs, elements, f })
    }

    /// Every element pointing along `dir`.
    pub fn uniform(pairs: usize, elements: usize, dir: Vec3) -> Self {
        Self { pairs, elements, f: vec![dir; pairs * elements] }
    }

    /// Every element pointing along +z.
    pub fn upright(pairs: usize, elements: usize) -> Self {
        Self::uniform(pairs, elements, Vec3::z())
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn get(&self, k: usize, m: usize) -> Vec3 {
        self.f[k * self.elements + m]
    }

    pub fn set(&mut self, k: usize, m: usize, v: Vec3) {
        self.f[k * self.elements + m] = v;
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.f
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3] {
        &mut self.f
    }

    /// Unit norm and cap membership, each within `tol`.
    pub fn is_feasible(&self, theta_max: f64, tol: f64) -> bool {
        let c = theta_max.cos();
        self.f.iter().all(|f| (f.norm() - 1.0).abs() <= tol && f.z >= c - tol)
    }

    pub fn check_feasible(&self, theta_max: f64) -> Result<()> {
        let c = theta_max.cos();
        for (i, f) in self.f.iter().enumerate() {
            if (f.norm() - 1.0).abs() > 1e-9 || f.z < c - 1e-9 {
                return Err(Error::InfeasibleOrientation { pair: i / self.elements, element: i % self.elements });
            }
        }
        Ok(())
    }
}

/// Channels `h_{k,n}` (transmitter k to user n) and, optionally, the
/// per-element gradients `grad_{f_{k,m}} h_{k,m,n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor {
    pairs: usize,
    elements: usize,
    h: Vec<CVector>,
    grad: Option<Vec<Vector3<C64>>>,
}

#[derive(Serialize)]
struct ChannelDump<'a> {
    pairs: usize,
    elements: usize,
    /// `h[k * K + n][m] = [re, im]`
    h: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grad: Option<&'a [Vector3<C64>]>,
}

impl ChannelTensor {
    /// Builds a tensor from `h[k * K + n]`.
    pub fn from_vectors(pairs: usize, elements: usize, h: Vec<CVector>) -> Result<Self> {
        if h.len() != pairs * pairs || h.iter().any(|v| v.len() != elements) {
            return Err(Error::DimensionMismatch(format!(
                "expected {pairs} x {pairs} channel vectors of length {elements}"
            )));
        }
        Ok(Self { pairs, elements, h, grad: None })
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// Channel from transmitter `k` to user `n`.
    pub fn h(&self, k: usize, n: usize) -> &CVector {
        &self.h[k * self.pairs + n]
    }

    pub fn h_mut(&mut self, k: usize, n: usize) -> &mut CVector {
        &mut self.h[k * self.pairs + n]
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// `grad_{f_{k,m}} h_{k,m,n}`.
    pub fn grad(&self, k: usize, m: usize, n: usize) -> Option<&Vector3<C64>> {
        self.grad
            .as_ref()
            .map(|g| &g[(k * self.elements + m) * self.pairs + n])
    }

    pub fn to_json(&self) -> Result<String> {
        let dump = ChannelDump {
            pairs: self.pairs,
            elements: self.elements,
            h: self.h.iter().map(|v| v.iter().map(|c| [c.re, c.im]).collect()).collect(),
            grad: self.grad.as_deref(),
        };
        Ok(serde_json::to_string(&dump)?)
    }
}

#[derive(Clone, Debug)]
struct Ray {
    dir: Vec3,
    amp: f64,
    phase: C64,
}

/// Geometry-dependent factors of a scene, precomputed once so channels can
/// be re-evaluated cheaply for many orientation sets.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    pairs: usize,
    elements: usize,
    clusters: usize,
    p: u32,
    /// LoS rays, index `(k * M + m) * K + n`.
    los: Vec<Ray>,
    /// First scattering hop, index `(k * M + m) * Q + q`.
    hop1: Vec<Ray>,
    /// Second hop including RCS and cluster phase, index `q * K + n`.
    hop2: Vec<C64>,
}

fn phasor(distance: f64, wavelength: f64) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * distance / wavelength)
}

impl ChannelModel {
    pub fn new(config: &SceneConfig, topology: &Topology) -> Result<Self> {
        let pairs = config.pairs;
        let elements = config.elements();
        let clusters = topology.clusters.len();
        if topology.element_positions.len() != pairs
            || topology.users.len() != pairs
            || topology.element_positions.iter().any(|e| e.len() != elements)
            || topology.rcs.len() != clusters
            || topology.phases.len() != clusters
        {
            return Err(Error::DimensionMismatch("topology does not match scene config".into()));
        }
        let lambda = config.wavelength;
        let beta0 = (lambda / (4.0 * PI)).powi(2);
        let c0 = (beta0 * max_gain(config.directivity)).sqrt();

        let mut los = Vec::with_capacity(pairs * elements * pairs);
        let mut hop1 = Vec::with_capacity(pairs * elements * clusters);
        for k in 0..pairs {
            for m in 0..elements {
                let t = topology.element(k, m);
                for n in 0..pairs {
                    let d = topology.user(n) - t;
                    let r = d.norm();
                    if r < 1e-12 {
                        return Err(Error::CoincidentPositions(format!("element ({k}, {m}) and user {n}")));
                    }
                    los.push(Ray { dir: d / r, amp: c0 / r, phase: phasor(r, lambda) });
                }
                for q in 0..clusters {
                    let o = topology.cluster(q) - t;
                    let r = o.norm();
                    if r < 1e-12 {
                        return Err(Error::CoincidentPositions(format!("element ({k}, {m}) and cluster {q}")));
                    }
                    hop1.push(Ray { dir: o / r, amp: c0 / r, phase: phasor(r, lambda) });
                }
            }
        }
        let mut hop2 = Vec::with_capacity(clusters * pairs);
        for q in 0..clusters {
            for n in 0..pairs {
                let r = (topology.cluster(q) - topology.user(n)).norm();
                if r < 1e-12 {
                    return Err(Error::CoincidentPositions(format!("cluster {q} and user {n}")));
                }
                let amp = (topology.rcs[q] / (4.0 * PI)).sqrt() / r;
                hop2.push(phasor(r, lambda) * C64::from_polar(amp, topology.phases[q]));
            }
        }
        Ok(Self { pairs, elements, clusters, p: config.directivity, los, hop1, hop2 })
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn directivity(&self) -> u32 {
        self.p
    }

    fn check(&self, f: &OrientationSet) {
        assert!(
            f.pairs == self.pairs && f.elements == self.elements,
            "orientation set is {}x{}, model is {}x{}",
            f.pairs,
            f.elements,
            self.pairs,
            self.elements
        );
    }

    /// Writes `h_{k,m,n}` for all users `n` into `out` (length K).
    pub fn element_response(&self, k: usize, m: usize, f: &Vec3, out: &mut [C64]) {
        self.element_response_parts(k, m, f, true, true, out);
    }

    fn element_response_parts(&self, k: usize, m: usize, f: &Vec3, los: bool, nlos: bool, out: &mut [C64]) {
        let base = (k * self.elements + m) * self.pairs;
        for (n, o) in out.iter_mut().enumerate() {
            *o = if los {
                let ray = &self.los[base + n];
                ray.phase * (ray.amp * pattern(f.dot(&ray.dir), self.p))
            } else {
                C64::new(0.0, 0.0)
            };
        }
        if nlos {
            let hbase = (k * self.elements + m) * self.clusters;
            for q in 0..self.clusters {
                let ray = &self.hop1[hbase + q];
                let a = ray.amp * pattern(f.dot(&ray.dir), self.p);
                if a == 0.0 {
                    continue;
                }
                let first = ray.phase * a;
                for (n, o) in out.iter_mut().enumerate() {
                    *o += first * self.hop2[q * self.pairs + n];
                }
            }
        }
    }

    /// Writes `grad_f h_{k,m,n}` for all users `n` into `out` (length K).
    pub fn element_gradient(&self, k: usize, m: usize, f: &Vec3, out: &mut [Vector3<C64>]) {
        let zero = C64::new(0.0, 0.0);
        let base = (k * self.elements + m) * self.pairs;
        for (n, o) in out.iter_mut().enumerate() {
            let ray = &self.los[base + n];
            let s = ray.amp * pattern_slope(f.dot(&ray.dir), self.p);
            *o = if s == 0.0 { Vector3::from_element(zero) } else { scaled(&ray.dir, ray.phase * s) };
        }
        let hbase = (k * self.elements + m) * self.clusters;
        for q in 0..self.clusters {
            let ray = &self.hop1[hbase + q];
            let s = ray.amp * pattern_slope(f.dot(&ray.dir), self.p);
            if s == 0.0 {
                continue;
            }
            for (n, o) in out.iter_mut().enumerate() {
                *o += scaled(&ray.dir, ray.phase * s * self.hop2[q * self.pairs + n]);
            }
        }
    }

    fn evaluate(&self, f: &OrientationSet, los: bool, nlos: bool) -> ChannelTensor {
        self.check(f);
        let (kk, mm) = (self.pairs, self.elements);
        let mut h = vec![CVector::zeros(mm); kk * kk];
        let mut buf = vec![C64::new(0.0, 0.0); kk];
        for k in 0..kk {
            for m in 0..mm {
                self.element_response_parts(k, m, &f.get(k, m), los, nlos, &mut buf);
                for n in 0..kk {
                    h[k * kk + n][m] = buf[n];
                }
            }
        }
        ChannelTensor { pairs: kk, elements: mm, h, grad: None }
    }

    /// Full channels `h = h_LoS + h_NLoS`.
    pub fn channels(&self, f: &OrientationSet) -> ChannelTensor {
        self.evaluate(f, true, true)
    }

    pub fn los_channels(&self, f: &OrientationSet) -> ChannelTensor {
        self.evaluate(f, true, false)
    }

    pub fn nlos_channels(&self, f: &OrientationSet) -> ChannelTensor {
        self.evaluate(f, false, true)
    }

    /// Channels together with all per-element orientation gradients.
    pub fn channels_with_gradient(&self, f: &OrientationSet) -> ChannelTensor {
        let mut t = self.channels(f);
        let kk = self.pairs;
        let zero = Vector3::from_element(C64::new(0.0, 0.0));
        let mut grad = vec![zero; kk * self.elements * kk];
        for k in 0..kk {
            for m in 0..self.elements {
                let base = (k * self.elements + m) * kk;
                self.element_gradient(k, m, &f.get(k, m), &mut grad[base..base + kk]);
            }
        }
        t.grad = Some(grad);
        t
    }
}

fn scaled(v: &Vec3, c: C64) -> Vector3<C64> {
    Vector3::new(c * v.x, c * v.y, c * v.z)
}

fn model_for(topology: &Topology, orientations: &OrientationSet, config: &SceneConfig) -> Result<ChannelModel> {
    let model = ChannelModel::new(config, topology)?;
    if orientations.pairs != model.pairs || orientations.elements != model.elements {
        return Err(Error::DimensionMismatch("orientation set does not match scene".into()));
    }
    Ok(model)
}

/// LoS component of every channel.
pub fn los_channel(topology: &Topology, orientations: &OrientationSet, config: &SceneConfig) -> Result<ChannelTensor> {
    Ok(model_for(topology, orientations, config)?.los_channels(orientations))
}

/// Scattered (NLoS) component of every channel.
pub fn nlos_channel(topology: &Topology, orientations: &OrientationSet, config: &SceneConfig) -> Result<ChannelTensor> {
    Ok(model_for(topology, orientations, config)?.nlos_channels(orientations))
}

pub fn channel(topology: &Topology, orientations: &OrientationSet, config: &SceneConfig) -> Result<ChannelTensor> {
    Ok(model_for(topology, orientations, config)?.channels(orientations))
}

/// Channels with orientation gradients attached.
pub fn channel_gradient(
    topology: &Topology,
    orientations: &OrientationSet,
    config: &SceneConfig,
) -> Result<ChannelTensor> {
    Ok(model_for(topology, orientations, config)?.channels_with_gradient(orientations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::generate_topology;
    use approx::assert_relative_eq;

    fn single_link(user: [f64; 3], p: u32, clusters: Vec<[f64; 3]>) -> (SceneConfig, Topology) {
        let q = clusters.len();
        let config = SceneConfig {
            pairs: 1,
            clusters: q,
            mx: 1,
            my: 1,
            directivity: p,
            noise_dbm: vec![-80.0],
            p_max_dbm: vec![0.0],
            weights: vec![1.0],
            ..SceneConfig::default()
        };
        let topo = Topology {
            tx_centers: vec![[0.0; 3]],
            element_positions: vec![vec![[0.0; 3]]],
            users: vec![user],
            clusters,
            rcs: vec![0.5; q],
            phases: vec![0.3; q],
        };
        (config, topo)
    }

    #[test]
    fn boresight_examples() {
        assert_relative_eq!(boresight_from_angles(0.0, 1.0).unwrap(), Vec3::z(), epsilon = 1e-15);
        assert_relative_eq!(boresight_from_angles(PI / 2.0, 0.0).unwrap(), Vec3::x(), epsilon = 1e-15);
        assert_relative_eq!(
            boresight_from_angles(PI / 3.0, PI / 2.0).unwrap(),
            Vec3::new(0.0, 3f64.sqrt() / 2.0, 0.5),
            epsilon = 1e-15
        );
        assert!(boresight_from_angles(-0.1, 0.0).is_err());
        assert!(boresight_from_angles(0.1, PI).is_err());
    }

    #[test]
    fn gain_examples() {
        assert_eq!(element_gain(1.0, 4), 18.0);
        assert_eq!(element_gain(0.0, 3), 0.0);
        assert_eq!(element_gain(0.5, 1), 1.5);
        assert_eq!(element_gain(0.2, 0), 2.0);
        assert_eq!(element_gain(-0.2, 0), 0.0);
    }

    /// Composite Simpson integration of G over the sphere. The pattern is
    /// discontinuous at the horizon for p = 0, so the two hemispheres are
    /// integrated separately; the rear one must vanish pointwise.
    fn sphere_integral(p: u32) -> f64 {
        let n = 20_000;
        let h = PI / 2.0 / n as f64;
        let g = |eps: f64| element_gain(eps.cos(), p) * eps.sin();
        let mut s = g(0.0) + g(PI / 2.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        for i in 1..=n {
            assert_eq!(g(PI / 2.0 + i as f64 * h), 0.0);
        }
        2.0 * PI * s * h / 3.0
    }

    #[test]
    fn pattern_is_normalized() {
        for p in [0, 1, 2, 4, 6] {
            let i = sphere_integral(p);
            assert!((i - 4.0 * PI).abs() / (4.0 * PI) < 1e-6, "p={p}: {i}");
        }
    }

    #[test]
    fn aligned_los_magnitude() {
        let (config, topo) = single_link([0.0, 0.0, 100.0], 4, vec![]);
        let f = OrientationSet::upright(1, 1);
        let h = los_channel(&topo, &f, &config).unwrap();
        let expect = (0.125 / (4.0 * PI)) * 18f64.sqrt() / 100.0;
        assert_relative_eq!(h.h(0, 0)[0].norm(), expect, max_relative = 1e-12);
        assert_relative_eq!(expect, 4.221e-4, max_relative = 1e-3);
    }

    #[test]
    fn user_behind_is_dark() {
        let (config, topo) = single_link([0.0, 0.0, -50.0], 2, vec![]);
        let h = channel(&topo, &OrientationSet::upright(1, 1), &config).unwrap();
        assert_eq!(h.h(0, 0)[0], C64::new(0.0, 0.0));
        let g = channel_gradient(&topo, &OrientationSet::upright(1, 1), &config).unwrap();
        assert_eq!(g.grad(0, 0, 0).unwrap().map(|c| c.norm()), Vec3::zeros());
    }

    #[test]
    fn single_cluster_hand_value() {
        let s = [30.0, 0.0, 40.0];
        let (config, topo) = single_link([60.0, 0.0, 80.0], 2, vec![s]);
        let f = OrientationSet::upright(1, 1);
        let h = nlos_channel(&topo, &f, &config).unwrap();
        let lambda: f64 = 0.125;
        let beta0 = (lambda / (4.0 * PI)).powi(2);
        let r1: f64 = 50.0; // |(30, 0, 40)|
        let r2: f64 = 50.0; // |(30, 0, 40)|
        let cos = 40.0 / 50.0;
        let g = beta0 / (r1 * r1) * element_gain(cos, 2);
        let amp = (0.5 * g / (4.0 * PI * r2 * r2)).sqrt();
        assert_relative_eq!(h.h(0, 0)[0].norm(), amp, max_relative = 1e-12);
        let phase = -2.0 * PI * (r1 + r2) / lambda + 0.3;
        let expect = C64::from_polar(amp, phase);
        assert_relative_eq!((h.h(0, 0)[0] - expect).norm(), 0.0, epsilon = 1e-12 * amp);
        // boresight orthogonal to the cluster direction contributes nothing
        let orth = Vec3::new(-0.8, 0.0, 0.6);
        let f = OrientationSet::uniform(1, 1, orth);
        let h = nlos_channel(&topo, &f, &config).unwrap();
        assert!(h.h(0, 0)[0].norm() < 1e-20);
    }

    #[test]
    fn no_clusters_means_los_only() {
        let config = SceneConfig { clusters: 0, seed: 5, ..SceneConfig::default() };
        let topo = generate_topology(&config);
        let f = OrientationSet::upright(4, 4);
        assert_eq!(channel(&topo, &f, &config).unwrap(), los_channel(&topo, &f, &config).unwrap());
        let n = nlos_channel(&topo, &f, &config).unwrap();
        for k in 0..4 {
            for j in 0..4 {
                assert!(n.h(k, j).iter().all(|c| c.norm() == 0.0));
            }
        }
    }

    #[test]
    fn sum_of_components_and_locality() {
        let config = SceneConfig { seed: 11, ..SceneConfig::default() };
        let topo = generate_topology(&config);
        let model = ChannelModel::new(&config, &topo).unwrap();
        let mut f = OrientationSet::upright(4, 4);
        f.set(1, 2, boresight_from_angles(0.4, 1.0).unwrap());
        let full = model.channels(&f);
        let los = model.los_channels(&f);
        let nlos = model.nlos_channels(&f);
        for k in 0..4 {
            for n in 0..4 {
                let diff = full.h(k, n) - (los.h(k, n) + nlos.h(k, n));
                assert!(diff.norm() <= 1e-15 * full.h(k, n).norm());
            }
        }
        let mut g = f.clone();
        g.set(2, 0, boresight_from_angles(0.9, -2.0).unwrap());
        let moved = model.channels(&g);
        for k in [0, 1, 3] {
            for n in 0..4 {
                assert_eq!(moved.h(k, n), full.h(k, n));
            }
        }
        assert_ne!(moved.h(2, 0), full.h(2, 0));
    }

    #[test]
    fn p1_aligned_gradient_magnitude() {
        let (config, topo) = single_link([0.0, 0.0, 100.0], 1, vec![]);
        let g = channel_gradient(&topo, &OrientationSet::upright(1, 1), &config).unwrap();
        let grad = g.grad(0, 0, 0).unwrap();
        let c0 = ((0.125 / (4.0 * PI)).powi(2) * max_gain(1)).sqrt();
        assert_relative_eq!(grad.z.norm(), c0 / 100.0, max_relative = 1e-12);
        assert_eq!(grad.x.norm(), 0.0);
        let ph = C64::from_polar(1.0, -2.0 * PI * 100.0 / 0.125);
        assert!((grad.z / (c0 / 100.0) - ph).norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let config = SceneConfig { seed: 3, directivity: 3, ..SceneConfig::default() };
        let topo = generate_topology(&config);
        let model = ChannelModel::new(&config, &topo).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let kk = config.pairs;
        let mut checked = 0;
        for _ in 0..50 {
            let k = rng.gen_range(0..kk);
            let m = rng.gen_range(0..4);
            let f = boresight_from_angles(rng.gen_range(0.0..0.6), rng.gen_range(-PI..PI)).unwrap();
            // tangent direction
            let r = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let t = (r - f * f.dot(&r)).normalize();
            let mut grad = vec![Vector3::from_element(C64::new(0.0, 0.0)); kk];
            model.element_gradient(k, m, &f, &mut grad);
            let step = 1e-6;
            let mut hp = vec![C64::new(0.0, 0.0); kk];
            let mut hm = hp.clone();
            model.element_response(k, m, &(f + t * step).normalize(), &mut hp);
            model.element_response(k, m, &(f - t * step).normalize(), &mut hm);
            for n in 0..kk {
                let fd = (hp[n] - hm[n]) / (2.0 * step);
                let an = grad[n].x * t.x + grad[n].y * t.y + grad[n].z * t.z;
                let scale = grad[n].iter().map(|c| c.norm()).fold(0.0, f64::max);
                if scale == 0.0 {
                    continue;
                }
                assert!((fd - an).norm() / scale < 1e-5, "fd {fd} analytic {an}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }
}
