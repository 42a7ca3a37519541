use orowan_core::corrector::solve_corrector;
use orowan_core::hull::{far_field_contribution, hull_value, HullParams};
use orowan_core::layer::{solve_layer, LayerConfig, LayerSolution};
use orowan_core::particles::{integrate, ParticleState};
use orowan_core::potential::PotentialSpec;
use orowan_core::Error;

fn small() -> LayerConfig {
    LayerConfig {
        half_width: 20.0,
        count: 1024,
        ..LayerConfig::default()
    }
}

#[test]
fn layer_rebuilds_from_its_samples() {
    let w = PotentialSpec::skewed(0.3).unwrap();
    let layer = solve_layer(&w, &small()).unwrap();
    let p = layer.profile();
    let derivs = [0, 1, 2, 3, 4].map(|k| p.samples(k).to_vec());
    let back = LayerSolution::from_parts(
        layer.xs.clone(),
        derivs.clone(),
        layer.alpha,
        layer.potential.clone(),
        (layer.box_half_width, layer.box_count),
        (layer.residual, layer.multiplier, layer.residual_history.clone(), layer.iterations),
    )
    .unwrap();
    assert_eq!(back, layer);

    let mut skewed_nodes = layer.xs.clone();
    skewed_nodes[3] += 1e-3;
    let bad = LayerSolution::from_parts(skewed_nodes, derivs, 1.0, "x".into(), (20.0, 1024), (0.0, 0.0, vec![], 0));
    assert!(matches!(bad, Err(Error::InvalidInput(_))));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let w = PotentialSpec::standard();
    let layer = solve_layer(&w, &small()).unwrap();
    let base = w.clone();
    let other = PotentialSpec::new("steep", 2.0, move |v, k| 2.0 * base.eval(v, k));
    assert!(solve_corrector(&layer, &other, 1.0, 1e-4).is_err());
    let corr = solve_corrector(&layer, &w, 1.0, 1e-4).unwrap();
    // Corrector solved at a different L than the hull.
    assert!(HullParams::new(0.1, 1.0, 0.5, 8, &layer, &corr, &w).is_err());
    let params = HullParams::new(0.1, 1.0, 1.0, 8, &layer, &corr, &w).unwrap();
    assert!(hull_value(&params, f64::NAN, 1e-10).is_err());
    assert!(far_field_contribution(&params, 0.3, 4.0, 5).is_err());
    assert!(far_field_contribution(&params, 0.3, 0.5, 64).is_err());
}

#[test]
fn hull_evaluation_fields_are_consistent() {
    let w = PotentialSpec::standard();
    let layer = solve_layer(&w, &small()).unwrap();
    let corr = solve_corrector(&layer, &w, 1.0, 1e-4).unwrap();
    let params = HullParams::new(0.1, -1.0, 1.0, 8, &layer, &corr, &w).unwrap();
    let e = hull_value(&params, 2.3, 1e-10).unwrap();
    assert_eq!(e.i0, 2);
    assert!((e.gamma - 0.3).abs() < 1e-12);
    assert!((e.lambda_bar - 0.01 * layer.c0).abs() < 1e-15);
    assert!((e.h - e.x).abs() <= e.band + 1e-9);
    assert!(e.h1 > 0.0);
}

#[test]
fn crossing_particles_stop_with_collision() {
    // Negative c0 makes the pair attract; the gap closes at t = πd₀²/|c0|.
    let s = ParticleState::new(vec![-0.05, 0.05], -1.0, 0.0, None).unwrap();
    match integrate(&s, 1e-4, 1.0) {
        Err(Error::Collision { left: 0, right: 1, t, .. }) => assert!(t > 0.0 && t < 0.02),
        other => panic!("expected a collision, got {other:?}"),
    }
}
