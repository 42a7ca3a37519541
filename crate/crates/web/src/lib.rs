//! Browser bindings: solve a layer, tabulate a hull, run particles.
//!
//! Each entry point has a plain Rust counterpart returning `Result<_, String>`
//! so it can be tested natively; the exported wrappers turn errors into
//! JavaScript exceptions.

use orowan_core::corrector::solve_corrector;
use orowan_core::hull::{Hull, HullParams};
use orowan_core::layer::{solve_layer, LayerConfig, LayerSolution};
use orowan_core::particles::{integrate, lattice_mean_velocity, ParticleState};
use orowan_core::potential::PotentialSpec;
use wasm_bindgen::prelude::*;


fn potential(label: &str) -> Result<PotentialSpec, String> {
    PotentialSpec::from_label(label).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub struct LayerView {
    layer: LayerSolution,
    potential: PotentialSpec,
}

impl LayerView {
    pub fn solve(label: &str) -> Result<LayerView, String> {
        let potential = potential(label)?;
        let layer = solve_layer(&potential, &LayerConfig::default()).map_err(|e| e.to_string())?;
        Ok(LayerView { layer, potential })
    }

    /// `(x, h − x, NL)` on one period and `sup |NL|`.
    pub fn hull_table(&self, delta: f64, l: f64) -> Result<HullView, String> {
        let corrector = solve_corrector(&self.layer, &self.potential, l, 1e-4).map_err(|e| e.to_string())?;
        let params =
            HullParams::new(delta, 1.0, l, 8, &self.layer, &corrector, &self.potential).map_err(|e| e.to_string())?;
        let hull = Hull::new(params, 1e-10).map_err(|e| e.to_string())?;
        Ok(HullView {
            nodes: hull.nodes().to_vec(),
            offsets: hull.offsets().to_vec(),
            nl: hull.nl_on_nodes(),
            nl_sup: hull.nl_sup(),
        })
    }
}

#[wasm_bindgen]
impl LayerView {
    #[wasm_bindgen(constructor)]
    pub fn new(label: &str) -> Result<LayerView, JsError> {
        Self::solve(label).map_err(|e| JsError::new(&e))
    }

    pub fn c0(&self) -> f64 {
        self.layer.c0
    }

    pub fn xs(&self) -> Vec<f64> {
        self.layer.xs.clone()
    }

    pub fn phi(&self) -> Vec<f64> {
        self.layer.phi.clone()
    }

    /// `φ − 1/2 − arctan(αx)/π`.
    pub fn deviation(&self) -> Vec<f64> {
        let a = self.layer.alpha;
        let pi = std::f64::consts::PI;
        self.layer.xs.iter().zip(&self.layer.phi).map(|(&x, &p)| p - 0.5 - (a * x).atan() / pi).collect()
    }

    pub fn hull(&self, delta: f64, l: f64) -> Result<HullView, JsError> {
        self.hull_table(delta, l).map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen]
pub struct HullView {
    nodes: Vec<f64>,
    offsets: Vec<f64>,
    nl: Vec<f64>,
    nl_sup: f64,
}

#[wasm_bindgen]
impl HullView {
    pub fn nodes(&self) -> Vec<f64> {
        self.nodes.clone()
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.offsets.clone()
    }

    pub fn nl(&self) -> Vec<f64> {
        self.nl.clone()
    }

    pub fn nl_sup(&self) -> f64 {
        self.nl_sup
    }
}

/// Positions of `n` lattice particles after `t`, flattened frame by frame
/// (`frames` snapshots plus the start), then the mean velocity.
pub fn particle_frames(
    n: usize,
    spacing: f64,
    c0: f64,
    l0: f64,
    wrapped: bool,
    t: f64,
    frames: usize,
) -> Result<Vec<f64>, String> {
    let state = ParticleState::lattice(n, spacing, 0.0, c0, l0, wrapped).map_err(|e| e.to_string())?;
    let dt = (t / 2000.0).min(1e-2);
    let traj = integrate(&state, dt, t).map_err(|e| e.to_string())?;
    let last = traj.states.len() - 1;
    let frames = frames.max(1);
    let mut out = Vec::with_capacity((frames + 1) * n + 1);
    for k in 0..=frames {
        out.extend_from_slice(&traj.states[k * last / frames].positions);
    }
    out.push(lattice_mean_velocity(&traj, None).map_err(|e| e.to_string())?);
    Ok(out)
}

#[wasm_bindgen]
pub fn particles(
    n: usize,
    spacing: f64,
    c0: f64,
    l0: f64,
    wrapped: bool,
    t: f64,
    frames: usize,
) -> Result<Vec<f64>, JsError> {
    particle_frames(n, spacing, c0, l0, wrapped, t, frames).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_layer_and_hull() {
        let view = LayerView::solve("standard").unwrap();
        assert!((view.c0() - 2.0 * std::f64::consts::PI).abs() < 1e-3);
        assert!(view.deviation().iter().all(|d| d.abs() < 1e-6));
        let hull = view.hull_table(0.1, 1.0).unwrap();
        assert_eq!(hull.nodes().len(), hull.nl().len());
        assert!(hull.nl_sup() < 0.1);
        assert!(view.hull_table(0.9, 1.0).is_err());
        assert!(LayerView::solve("nonsense").is_err());
        let skewed = LayerView::solve("skewed(0.3)").unwrap();
        assert!(skewed.hull_table(0.1, 1.0).unwrap().nl_sup() < 0.1);
    }

    #[test]
    fn wrapped_particles_move_at_c0_l0() {
        let out = particle_frames(6, 1.0, 2.0, 0.5, true, 1.0, 4).unwrap();
        assert_eq!(out.len(), 5 * 6 + 1);
        assert!((out[out.len() - 1] + 1.0).abs() < 1e-12);
        assert!(particle_frames(2, 1e-9, 1.0, 0.0, false, 1.0, 2).is_err());
    }
}
