//! The analytic orientation gradient of the weighted sum-rate against
//! central finite differences along the tangent plane, on random scenes.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rotant_core::channel::{boresight_from_angles, ChannelModel, OrientationSet};
use rotant_core::metrics::{wsr, wsr_orientation_gradient, BeamformerSet};
use rotant_core::orient_fw::tangent_basis;
use rotant_core::scene::{generate_topology, SceneConfig, Topology};
use rotant_core::{CVector, Vec3, C64};

const STEP: f64 = 1e-6;

/// Smallest |f . d| over every LoS and scatterer direction seen by each
/// element; the pattern has a kink where this is zero.
fn min_clip_margin(topo: &Topology, config: &SceneConfig, f: &OrientationSet) -> f64 {
    let mut margin = f64::INFINITY;
    for k in 0..config.pairs {
        for m in 0..config.elements() {
            let t = topo.element(k, m);
            let fk = f.get(k, m);
            let targets = (0..config.pairs).map(|n| topo.user(n)).chain((0..config.clusters).map(|q| topo.cluster(q)));
            for p in targets {
                margin = margin.min(fk.dot(&(p - t).normalize()).abs());
            }
        }
    }
    margin
}

struct Case {
    config: SceneConfig,
    topo: Topology,
    f: OrientationSet,
    bf: BeamformerSet,
}

fn random_case(seed: u64, pairs: usize, mx: usize, my: usize, p: u32) -> Case {
    let config = SceneConfig {
        pairs,
        mx,
        my,
        directivity: p,
        seed,
        theta_max: std::f64::consts::FRAC_PI_2,
        noise_dbm: vec![-80.0],
        p_max_dbm: vec![0.0],
        weights: vec![1.0],
        ..SceneConfig::default()
    }
    .resolved()
    .unwrap();
    let topo = generate_topology(&config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let m = config.elements();
    let dirs = (0..pairs * m)
        .map(|_| boresight_from_angles(rng.gen_range(0.0..1.2), rng.gen_range(-PI..PI)).unwrap())
        .collect();
    let f = OrientationSet::new(pairs, m, dirs).unwrap();
    let w = (0..pairs)
        .map(|_| {
            let v = CVector::from_fn(m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let n = v.norm();
            v / C64::new(n, 0.0)
        })
        .collect();
    let alpha: Vec<f64> = (0..pairs).map(|_| rng.gen_range(0.5..2.0)).collect();
    let config = SceneConfig { weights: alpha, ..config };
    Case { bf: BeamformerSet { w, budgets: vec![1.0; pairs] }, config, topo, f }
}

/// Relative error between analytic and finite-difference tangent gradients
/// over all elements.
fn relative_error(case: &Case) -> f64 {
    let model = ChannelModel::new(&case.config, &case.topo).unwrap();
    let noise = case.config.noise_mw();
    let w = &case.config.weights;
    let ch = model.channels_with_gradient(&case.f);
    let g = wsr_orientation_gradient(&ch, &case.bf, &noise, w).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut probe = case.f.clone();
    for (i, gi) in g.iter().enumerate() {
        let fi = case.f.as_slice()[i];
        let (t1, t2) = tangent_basis(&fi);
        for t in [t1, t2] {
            probe.as_mut_slice()[i] = (fi + t * STEP).normalize();
            let up = wsr(&model.channels(&probe), &case.bf.w, &noise, w);
            probe.as_mut_slice()[i] = (fi - t * STEP).normalize();
            let down = wsr(&model.channels(&probe), &case.bf.w, &noise, w);
            let fd = (up - down) / (2.0 * STEP);
            let an = gi.dot(&t);
            num += (fd - an).powi(2);
            den += an.powi(2);
        }
        probe.as_mut_slice()[i] = fi;
    }
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn analytic_gradient_matches_differences(
        seed in 0u64..10_000,
        pairs in 1usize..=4,
        mx in 1usize..=3,
        my in 1usize..=2,
        p in prop::sample::select(vec![1u32, 2, 3, 4, 6]),
    ) {
        let case = random_case(seed, pairs, mx, my, p);
        prop_assume!(min_clip_margin(&case.topo, &case.config, &case.f) > 1e-3);
        let err = relative_error(&case);
        prop_assert!(err < 1e-5, "relative error {err}");
    }
}

#[test]
fn gradient_is_zero_for_isotropic_elements() {
    let case = random_case(3, 3, 2, 2, 0);
    let model = ChannelModel::new(&case.config, &case.topo).unwrap();
    let ch = model.channels_with_gradient(&case.f);
    let g = wsr_orientation_gradient(&ch, &case.bf, &case.config.noise_mw(), &case.config.weights).unwrap();
    assert!(g.iter().all(|v| *v == Vec3::zeros()));
}
