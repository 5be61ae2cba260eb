//! Invariants of codebooks, projections, the cap oracle, Frank-Wolfe
//! updates and the beamforming blocks under random inputs.

use std::f64::consts::PI;

use proptest::prelude::*;

use rotant_core::channel::{boresight_from_angles, ChannelModel, OrientationSet};
use rotant_core::discrete::{fibonacci_codebook, nearest_index, uniform_grid_codebook, CemModel};
use rotant_core::linear_bf::{mrt, zf};
use rotant_core::orient_fw::{cap_oracle, fw_gap, fw_update, tangent_project};
use rotant_core::scene::{generate_topology, SceneConfig};
use rotant_core::wmmse::{self, WmmseParams};
use rotant_core::Vec3;

fn cap_point() -> impl Strategy<Value = (f64, f64)> {
    (0.0..=1.0f64, -PI..PI)
}

fn unit(theta_frac: f64, phi: f64, theta_max: f64) -> Vec3 {
    boresight_from_angles(theta_frac * theta_max, phi).unwrap()
}

fn ambient() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #[test]
    fn codebooks_are_feasible_and_distinct(n_theta in 1usize..8, n_phi in 1usize..12, n_dir in 1usize..200, theta_max in 0.0..=PI / 2.0) {
        for cb in [uniform_grid_codebook(n_theta, n_phi, theta_max).unwrap(), fibonacci_codebook(n_dir, theta_max).unwrap()] {
            for (i, a) in cb.directions.iter().enumerate() {
                prop_assert!((a.norm() - 1.0).abs() < 1e-12);
                prop_assert!(a.z >= theta_max.cos() - 1e-12);
                for b in &cb.directions[..i] {
                    prop_assert!(a.cross(b).norm().atan2(a.dot(b)) > 1e-9);
                }
            }
        }
    }

    #[test]
    fn fibonacci_heights_are_equally_spaced(n in 1usize..300, theta_max in 0.01..=PI / 2.0) {
        let cb = fibonacci_codebook(n, theta_max).unwrap();
        prop_assert_eq!(cb.len(), n);
        let step = (1.0 - theta_max.cos()) / n as f64;
        for (i, f) in cb.directions.iter().enumerate() {
            prop_assert!((f.z - (1.0 - (i as f64 + 0.5) * step)).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_an_argmax((t, p) in cap_point(), n in 1usize..60) {
        let cb = fibonacci_codebook(n, PI / 3.0).unwrap();
        let f = unit(t, p, PI / 3.0);
        let i = nearest_index(&f, &cb);
        for (j, c) in cb.directions.iter().enumerate() {
            prop_assert!(f.dot(&cb.directions[i]) >= f.dot(c));
            if f.dot(c) == f.dot(&cb.directions[i]) {
                prop_assert!(i <= j);
            }
        }
    }

    #[test]
    fn oracle_beats_sampled_cap_points((t, p) in cap_point(), g in ambient(), theta_max in 0.0..=PI / 2.0,
                                       samples in prop::collection::vec(cap_point(), 200)) {
        let f = unit(t, p, theta_max);
        let tg = tangent_project(&f, &g);
        let s = cap_oracle(&f, &tg, theta_max);
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        prop_assert!(s.z >= theta_max.cos() - 1e-12);
        for (a, b) in samples {
            prop_assert!(tg.dot(&s) >= tg.dot(&unit(a, b, theta_max)) - 1e-12);
        }
        prop_assert!(fw_gap(&[tg], &[s - f]) >= -1e-12);
    }

    #[test]
    fn tangent_projection_is_orthogonal((t, p) in cap_point(), g in ambient()) {
        let f = unit(t, p, PI / 2.0);
        let tg = tangent_project(&f, &g);
        prop_assert!(tg.dot(&f).abs() < 1e-12);
        prop_assert!((tangent_project(&f, &tg) - tg).norm() < 1e-12);
    }

    #[test]
    fn updates_stay_on_the_cap((t, p) in cap_point(), (a, b) in cap_point(), rho in 0.0..=1.0f64, theta_max in 0.0..=PI / 2.0) {
        let f = unit(t, p, theta_max);
        let s = unit(a, b, theta_max);
        let next = fw_update(&f, &(s - f), rho);
        prop_assert!((next.norm() - 1.0).abs() < 1e-12);
        prop_assert!(next.z >= theta_max.cos() - 1e-12);
    }

    #[test]
    fn pmfs_stay_normalized(updates in prop::collection::vec(prop::collection::vec(prop::collection::vec(0usize..7, 3), 1..6), 1..20),
                            tau in 0.01..=1.0f64) {
        let mut m = CemModel::uniform(3, 7);
        for elites in &updates {
            let refs: Vec<&[usize]> = elites.iter().map(|e| e.as_slice()).collect();
            m.update(&refs, tau);
            for p in &m.pmfs {
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(p.iter().all(|&x| x >= 0.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beamformers_respect_budgets(seed in 0u64..1000, p_dbm in -10.0..10.0f64, my in 2usize..4) {
        let mut config = SceneConfig { seed, my, ..SceneConfig::default() };
        config.set_p_max_dbm(p_dbm);
        let model = ChannelModel::new(&config, &generate_topology(&config)).unwrap();
        let ch = model.channels(&OrientationSet::upright(config.pairs, config.elements()));
        let budgets = config.budgets_mw();
        let st = wmmse::solve(&ch, &config.noise_mw(), &config.weights, &budgets, &WmmseParams::default(), None);
        prop_assert!(st.w.within_budget(1e-9 * budgets[0]));
        prop_assert!(st.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        for bf in [mrt(&ch, &budgets).beamformers, zf(&ch, &budgets).unwrap().beamformers] {
            for k in 0..config.pairs {
                prop_assert!((bf.power(k) - budgets[k]).abs() <= 1e-12 * budgets[k]);
            }
        }
    }
}
