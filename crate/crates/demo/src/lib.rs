//! WebAssembly bindings for the static page in `www/`.
//!
//! Three operations are exposed: the element gain pattern, a codebook on
//! the spherical cap, and a fixed-versus-rotatable comparison on a random
//! scene. Each has a plain Rust function so it can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rotant_core::channel::{element_gain, ChannelModel, OrientationSet};
use rotant_core::discrete::{fibonacci_codebook, uniform_grid_codebook};
use rotant_core::orient_fw::{ao_solve, AoParams};
use rotant_core::scene::{generate_topology, SceneConfig, Topology};
use rotant_core::wmmse::{self, WmmseParams};
use rotant_core::Result;

/// `samples` values of the gain G over off-boresight angles evenly spaced
/// in `[0, pi]`.
pub fn gain_pattern_values(p: u32, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let eps = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            element_gain(eps.cos(), p)
        })
        .collect()
}

/// Flat `x, y, z` triples of a Fibonacci (`"fibonacci"`) or grid
/// (`"grid"`, `n` levels in each angle) codebook.
pub fn codebook_points(kind: &str, n: usize, theta_max: f64) -> Result<Vec<f64>> {
    let cb = match kind {
        "grid" => uniform_grid_codebook(n, n, theta_max)?,
        _ => fibonacci_codebook(n, theta_max)?,
    };
    Ok(cb.directions.iter().flat_map(|f| [f.x, f.y, f.z]).collect())
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub topology: Topology,
    pub fixed_wsr: f64,
    pub ra_wsr: f64,
    /// wsr after each alternating-optimization round.
    pub trace: Vec<f64>,
    /// Optimized boresights, `[x, y, z]` per element, pair-major.
    pub orientations: Vec<[f64; 3]>,
}

/// Fixed upright boresights with WMMSE versus joint optimization, on the
/// default scene with the given seed, directivity, cap and budget.
pub fn compare(seed: u32, directivity: u32, theta_max: f64, p_max_dbm: f64) -> Result<Comparison> {
    let mut config = SceneConfig { seed: seed.into(), directivity, theta_max, ..SceneConfig::default() };
    config.set_p_max_dbm(p_max_dbm);
    config.validate()?;
    let topology = generate_topology(&config);
    let model = ChannelModel::new(&config, &topology)?;
    let upright = OrientationSet::upright(config.pairs, config.elements());
    let fixed = wmmse::solve(
        &model.channels(&upright),
        &config.noise_mw(),
        &config.weights,
        &config.budgets_mw(),
        &WmmseParams::default(),
        None,
    );
    let ao = ao_solve(&model, &config, &AoParams::default());
    Ok(Comparison {
        topology,
        fixed_wsr: fixed.wsr,
        ra_wsr: ao.wsr,
        trace: ao.trace.iter().map(|r| r.wsr).collect(),
        orientations: ao.orientations.as_slice().iter().map(|f| [f.x, f.y, f.z]).collect(),
    })
}

fn js_error(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub fn gain_pattern(p: u32, samples: usize) -> Vec<f64> {
    gain_pattern_values(p, samples)
}

#[wasm_bindgen]
pub fn codebook(kind: &str, n: usize, theta_max: f64) -> std::result::Result<Vec<f64>, JsValue> {
    codebook_points(kind, n, theta_max).map_err(js_error)
}

/// JSON-encoded [`Comparison`].
#[wasm_bindgen]
pub fn optimize(seed: u32, directivity: u32, theta_max: f64, p_max_dbm: f64) -> std::result::Result<String, JsValue> {
    let c = compare(seed, directivity, theta_max, p_max_dbm).map_err(js_error)?;
    serde_json::to_string(&c).map_err(js_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_endpoints() {
        let g = gain_pattern_values(4, 181);
        assert_eq!(g.len(), 181);
        assert_eq!(g[0], 18.0);
        assert_eq!(g[180], 0.0);
        assert!(g.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(codebook_points("fibonacci", 16, 1.0).unwrap().len(), 48);
        assert_eq!(codebook_points("grid", 3, 1.0).unwrap().len(), 3 * 7);
        assert!(codebook_points("fibonacci", 0, 1.0).is_err());
    }

    #[test]
    fn comparison_improves_on_fixed() {
        let c = compare(2, 4, std::f64::consts::FRAC_PI_3, 0.0).unwrap();
        assert!(c.ra_wsr >= c.fixed_wsr);
        assert_eq!(c.orientations.len(), 16);
        let json = optimize(2, 4, std::f64::consts::FRAC_PI_3, 0.0).unwrap();
        assert!(json.contains("\"ra_wsr\""));
        assert!(compare(2, 4, 3.0, 0.0).is_err());
    }
}
