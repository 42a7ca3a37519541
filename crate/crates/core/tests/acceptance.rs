//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use orowan_core::cell::{estimate_lambda, evolve_cell, orowan_scan, CellProblemConfig};
use orowan_core::corrector::{solve_corrector, verify_corrector_decay, CorrectorSolution};
use orowan_core::hull::{ansatz_partial_sum, claim5_partial_sums, far_field_limit, Hull, HullParams};
use orowan_core::layer::{solve_layer, verify_layer_decay, LayerConfig, LayerSolution};
use orowan_core::operator::{half_laplacian_spectral, Grid1D, GridField, LevyQuadrature, LevyQuadratureConfig};
use orowan_core::particles::{integrate, lattice_mean_velocity, ParticleState};
use orowan_core::potential::PotentialSpec;
use orowan_core::series::claim1_reference_sums;

type Outcome = Result<(bool, String), String>;

/// Sup-norm tolerance of the discrete corrector equation. Its floor is the
/// discrete solvability defect, a few 1e-5 per unit L at the default layer box.
const CORRECTOR_TOL: f64 = 1e-4;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn standard() -> &'static PotentialSpec {
    static P: OnceLock<PotentialSpec> = OnceLock::new();
    P.get_or_init(PotentialSpec::standard)
}

fn skewed() -> &'static PotentialSpec {
    static P: OnceLock<PotentialSpec> = OnceLock::new();
    P.get_or_init(|| PotentialSpec::skewed(0.3).unwrap())
}

fn standard_layer() -> &'static LayerSolution {
    static L: OnceLock<LayerSolution> = OnceLock::new();
    L.get_or_init(|| solve_layer(standard(), &LayerConfig::default()).expect("standard layer"))
}

fn skewed_layer() -> &'static LayerSolution {
    static L: OnceLock<LayerSolution> = OnceLock::new();
    L.get_or_init(|| solve_layer(skewed(), &LayerConfig::default()).expect("skewed layer"))
}

fn standard_corrector() -> &'static CorrectorSolution {
    static C: OnceLock<CorrectorSolution> = OnceLock::new();
    C.get_or_init(|| solve_corrector(standard_layer(), standard(), 1.0, CORRECTOR_TOL).expect("standard corrector"))
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn operator_cross_validation() -> Outcome {
    let grid = Grid1D::new(1.0, 64).map_err(fail)?;
    let quad = LevyQuadrature::new(LevyQuadratureConfig::default()).map_err(fail)?;
    let mut worst = 0.0f64;
    for k in 1..=3 {
        let w = 2.0 * PI * k as f64;
        let cases: [(&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64); 2] = [
            (&move |x: f64| (w * x).cos(), &move |x: f64| -w * (w * x).sin()),
            (&move |x: f64| (w * x).sin(), &move |x: f64| w * (w * x).cos()),
        ];
        for (f, df) in cases {
            let spec = half_laplacian_spectral(&GridField::from_fn(grid, 0.0, f).map_err(fail)?).map_err(fail)?;
            let scale = sup(spec.values.iter().copied());
            for j in (0..64).step_by(5) {
                let x = grid.node(j);
                let q = quad.apply(f, df(x), x).map_err(fail)?;
                worst = worst.max((q - spec.values[j]).abs() / scale);
            }
        }
    }
    // The same integral with the compensation radius moved across [0.05, 0.5].
    let f = |x: f64| (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin();
    let df = |x: f64| -2.0 * PI * (2.0 * PI * x).sin() + 2.0 * PI * (4.0 * PI * x).cos();
    let mut spread = 0.0f64;
    for x in [0.0, 0.17, 0.42] {
        let vals: Vec<f64> = [0.05, 0.1, 0.2, 0.35, 0.5]
            .iter()
            .map(|&r| {
                let cfg = LevyQuadratureConfig {
                    inner_radius: r,
                    ..LevyQuadratureConfig::default()
                };
                LevyQuadrature::new(cfg).and_then(|q| q.apply(f, df(x), x))
            })
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        spread = spread.max(hi - lo);
    }
    Ok((
        worst <= 1e-6 && spread <= 1e-6,
        format!("max rel err {worst:.2e} (<= 1e-6), r-spread {spread:.2e} (<= 1e-6)"),
    ))
}

fn arctan_oracle() -> Outcome {
    let quad = LevyQuadrature::new(LevyQuadratureConfig {
        outer_cutoff: 1e4,
        ..LevyQuadratureConfig::default()
    })
    .map_err(fail)?;
    let mut worst = 0.0f64;
    for j in 0..=100 {
        let x = -5.0 + 0.1 * j as f64;
        let v = quad.apply(f64::atan, 1.0 / (1.0 + x * x), x).map_err(fail)?;
        worst = worst.max((v + x / (1.0 + x * x)).abs());
    }
    Ok((worst <= 1e-4, format!("sup |I1[atan] + x/(1+x^2)| on [-5,5] = {worst:.2e} (<= 1e-4)")))
}

fn layer_oracle() -> Outcome {
    let layer = standard_layer();
    let dev = sup((0..=4000).map(|j| {
        let x = -20.0 + 0.01 * j as f64;
        layer.eval(x, 0) - 0.5 - x.atan() / PI
    }));
    let mid = (layer.eval(0.0, 0) - 0.5).abs();
    let min_slope_nodes = layer.phi1.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_slope_tail = (0..=200)
        .map(|m| layer.half_width() * 10f64.powf(m as f64 / 40.0))
        .flat_map(|x| [layer.eval(x, 1), layer.eval(-x, 1)])
        .fold(f64::INFINITY, f64::min);
    let slope = min_slope_nodes.min(min_slope_tail);
    Ok((
        dev <= 1e-3 && mid <= 1e-12 && slope > 0.0,
        format!("sup dev {dev:.2e} (<= 1e-3), |phi(0)-1/2| = {mid:.1e}, min phi' = {slope:.3e} (> 0)"),
    ))
}

fn orowan_constant() -> Outcome {
    let c40 = standard_layer().c0;
    let wide = LayerConfig {
        half_width: 80.0,
        count: 8192,
        ..LayerConfig::default()
    };
    let c80 = solve_layer(standard(), &wide).map_err(fail)?.c0;
    let err = (c40 - 2.0 * PI).abs() / (2.0 * PI);
    let drift = (c80 - c40).abs() / c40;
    Ok((
        err <= 0.01 && drift <= 1e-3,
        format!("c0 = {c40:.10}, rel err vs 2pi {err:.2e} (<= 1e-2), X 40->80 change {drift:.2e} (<= 1e-3)"),
    ))
}

fn decay_suites() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    for (name, layer) in [("standard", standard_layer()), ("skewed", skewed_layer())] {
        let r = verify_layer_decay(layer);
        pass &= r.holds() && r.k0.is_finite() && r.k1.is_finite();
        parts.push(format!("{name}: K0 {:.3} K1 {:.3} ({} viol)", r.k0, r.k1, r.violations.len()));
    }
    for l in [1.0, -0.5] {
        let c = solve_corrector(skewed_layer(), skewed(), l, CORRECTOR_TOL).map_err(fail)?;
        let r = verify_corrector_decay(&c);
        pass &= r.holds() && r.k2.is_finite() && r.k3.is_finite();
        parts.push(format!("skewed L={l}: K2 {:.3} K3 {:.3} ({} viol)", r.k2, r.k3, r.violations.len()));
    }
    let zero = verify_corrector_decay(&solve_corrector(skewed_layer(), skewed(), 0.0, CORRECTOR_TOL).map_err(fail)?);
    pass &= zero.k2 == 0.0 && zero.k3 == 0.0 && zero.holds();
    parts.push(format!("L=0: K2 {} K3 {}", zero.k2, zero.k3));
    Ok((pass, parts.join("; ")))
}

fn corrector_checks() -> Outcome {
    let tol = CORRECTOR_TOL;
    let layer = skewed_layer();
    let zero = solve_corrector(layer, skewed(), 0.0, tol).map_err(fail)?;
    let zero_sup = sup(zero.psi.iter().copied()).max(zero.c.abs());
    let one = solve_corrector(layer, skewed(), 1.0, tol).map_err(fail)?;
    let two = solve_corrector(layer, skewed(), 2.5, tol).map_err(fail)?;
    let scale = sup(one.psi.iter().copied());
    let lin = sup(one.psi.iter().zip(&two.psi).map(|(a, b)| b - 2.5 * a)) / scale;
    let fred = one.fredholm_defect.max(two.fredholm_defect);
    Ok((
        zero_sup <= tol && lin <= 1e-6 && fred <= 1e-8,
        format!("L=0 sup|psi|,|c| = {zero_sup:.1e}; linearity rel dev {lin:.2e} (<= 1e-6); Fredholm {fred:.2e} (<= 1e-8)"),
    ))
}

fn series_claims() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];

    // Reference sums: brute force to 10⁶ plus the integral tail estimate.
    let n = 1_000_000u64;
    let mut worst = 0.0f64;
    for gamma in [0.5, 0.0, 0.3, -0.2] {
        let r = claim1_reference_sums(gamma, n).map_err(fail)?;
        let nf = n as f64 + 0.5;
        let tail1 = -2.0 * gamma / nf;
        let tail2 = 1.0 / (nf + gamma);
        let tail3 = 1.0 / (nf - gamma);
        worst = worst
            .max((r.s1 + tail1 - r.s1_limit).abs())
            .max((r.s2 + tail2 - r.s2_limit).abs())
            .max((r.s3 + tail3 - r.s3_limit).abs());
    }
    let half = claim1_reference_sums(0.5, 1).map_err(fail)?;
    let zero = claim1_reference_sums(0.0, 1).map_err(fail)?;
    let basel = PI * PI / 6.0;
    let exact = (half.s1_limit + 2.0)
        .abs()
        .max(zero.s1_limit.abs())
        .max((zero.s2_limit - basel).abs())
        .max((zero.s3_limit - basel).abs());
    pass &= worst <= 1e-10 && exact <= 1e-12;
    parts.push(format!("limits vs brute force {worst:.1e}, exact oracles {exact:.1e}"));

    // Cauchy increments of s, s', s'' over a compact set.
    let mut incs = [0.0f64; 3];
    let layer = skewed_layer();
    let corr = solve_corrector(layer, skewed(), 0.5, CORRECTOR_TOL).map_err(fail)?;
    for x in [-1.7, -0.5, 0.0, 0.3, 1.25, 2.0] {
        for (order, inc) in incs.iter_mut().enumerate() {
            let at = |n| {
                HullParams::new(0.1, 1.0, 0.5, n, layer, &corr, skewed())
                    .and_then(|p| ansatz_partial_sum(&p, x, order))
            };
            let d = (at(1 << 21).map_err(fail)? - at(1 << 20).map_err(fail)?).abs();
            *inc = inc.max(d);
        }
    }
    let cauchy_tol = 1e-6;
    pass &= incs.iter().all(|d| *d <= cauchy_tol);
    parts.push(format!(
        "|s_2n - s_n| at n=2^20 for s,s',s'' = {:.1e},{:.1e},{:.1e} (<= {cauchy_tol:.0e})",
        incs[0], incs[1], incs[2]
    ));

    // Termwise operator sums: increments shrink and the extrapolated limit
    // agrees with the spectral I₁[h].
    let params = HullParams::new(0.1, 1.0, 0.5, 8, layer, &corr, skewed()).map_err(fail)?;
    let quad = LevyQuadrature::new(LevyQuadratureConfig::default()).map_err(fail)?;
    let x = 0.3;
    let eps = params.epsilon();
    let sums: Vec<f64> = [8u64, 16, 32, 64]
        .iter()
        .map(|&n| claim5_partial_sums(&params, &quad, x, n).map(|(a, b)| (a + params.delta * b) / eps))
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    let steps: Vec<f64> = sums.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let shrinking = steps.windows(2).all(|w| w[1] <= 0.6 * w[0]);
    let extrap = 2.0 * sums[3] - sums[2];
    let hull = Hull::new(params, 1e-10).map_err(fail)?;
    let gap = (extrap - hull.i1_at(x)).abs();
    pass &= shrinking && gap <= 1e-3 * hull.i1_at(x).abs().max(1.0);
    parts.push(format!(
        "operator sums steps {:.1e},{:.1e},{:.1e}; extrapolated vs spectral I1[h] {gap:.1e}",
        steps[0], steps[1], steps[2]
    ));
    Ok((pass, parts.join("; ")))
}

fn hull_residual() -> Outcome {
    let deltas = [0.2, 0.1, 0.05];
    let mut sups = vec![];
    for &d in &deltas {
        let p = HullParams::new(d, 1.0, 1.0, 8, standard_layer(), standard_corrector(), standard()).map_err(fail)?;
        sups.push(Hull::new(p, 1e-10).map_err(fail)?.nl_sup());
    }
    let c = deltas.iter().zip(&sups).map(|(d, s)| s / (d * d)).fold(0.0, f64::max);
    let slope = loglog_slope(&deltas, &sups);
    Ok((
        slope >= 1.8,
        format!(
            "sup|NL| = {:.3e}, {:.3e}, {:.3e}; C = {c:.3}; log-log slope {slope:.3} (>= 1.8)",
            sups[0], sups[1], sups[2]
        ),
    ))
}

fn far_field() -> Outcome {
    let p = HullParams::new(0.1, 1.0, 1.0, 8, standard_layer(), standard_corrector(), standard()).map_err(fail)?;
    let a_vals = [2.0, 4.0, 8.0, 16.0];
    let mut vals = vec![];
    for &a in &a_vals {
        let (v, _) = far_field_limit(&p, 0.3, a, 32, 1e-6).map_err(fail)?;
        vals.push(v);
    }
    let c = a_vals.iter().zip(&vals).map(|(a, v)| a * v.abs()).fold(0.0, f64::max);
    let ratios: Vec<f64> = vals.windows(2).map(|w| w[1].abs() / w[0].abs()).collect();
    let halving = ratios.iter().all(|r| (r - 0.5).abs() <= 0.15);
    let bounded = a_vals.iter().zip(&vals).all(|(a, v)| v.abs() <= c / a);
    Ok((
        halving && bounded,
        format!(
            "a*value = {:.4}, {:.4}, {:.4}, {:.4}; C = {c:.4}; ratios {:.3}, {:.3}, {:.3} (0.5 +- 30%)",
            2.0 * vals[0],
            4.0 * vals[1],
            8.0 * vals[2],
            16.0 * vals[3],
            ratios[0],
            ratios[1],
            ratios[2]
        ),
    ))
}

fn orowan_law() -> Outcome {
    let c0 = standard_layer().c0;
    let base = CellProblemConfig::default();
    let rows = orowan_scan(1.0, 1.0, &[0.2, 0.1, 0.05], c0, standard(), &base).map_err(fail)?;
    let errs: Vec<f64> = rows.iter().map(|r| r.relative_error().unwrap_or(f64::INFINITY)).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let last = errs[2];
    let lambda_at = |cfg: CellProblemConfig| -> Result<f64, String> {
        let cfg = CellProblemConfig {
            p: 0.05,
            l: 0.05,
            horizon: base.horizon * 4.0,
            ..cfg
        };
        let traj = evolve_cell(&cfg, standard()).map_err(fail)?;
        Ok(estimate_lambda(&traj, cfg.burn_in).map_err(fail)?.lambda)
    };
    let coarse = lambda_at(base)?;
    let fine_grid = lambda_at(CellProblemConfig {
        points_per_unit: 2.0 * base.points_per_unit,
        ..base
    })?;
    let fine_dt = lambda_at(CellProblemConfig {
        dt_factor: 0.5 * base.dt_factor,
        ..base
    })?;
    let refine = ((fine_grid - coarse) / coarse).abs().max(((fine_dt - coarse) / coarse).abs());
    Ok((
        monotone && last <= 0.1 && refine <= 0.01,
        format!(
            "rel err {:.4}, {:.4}, {:.4} (decreasing, last <= 0.1); refinement change {refine:.2e} (<= 1e-2)",
            errs[0], errs[1], errs[2]
        ),
    ))
}

fn hamiltonian_monotone() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    for p in [0.1, 0.3] {
        let mut est = vec![];
        for l in [0.05, 0.1, 0.2] {
            let cfg = CellProblemConfig {
                p,
                l,
                ..CellProblemConfig::default()
            };
            let traj = evolve_cell(&cfg, standard()).map_err(fail)?;
            est.push(estimate_lambda(&traj, cfg.burn_in).map_err(fail)?);
        }
        let ok = est
            .windows(2)
            .all(|w| w[1].lambda >= w[0].lambda - 2.0 * w[0].slope_fit_stderr.max(w[1].slope_fit_stderr));
        pass &= ok;
        parts.push(format!(
            "p={p}: lambda = {:.5}, {:.5}, {:.5}",
            est[0].lambda, est[1].lambda, est[2].lambda
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn particle_dynamics() -> Outcome {
    let c0 = standard_layer().c0;
    let single = ParticleState::new(vec![0.4], c0, 0.7, None).map_err(fail)?;
    let end = integrate(&single, 0.05, 2.0).map_err(fail)?.states.last().unwrap().positions[0];
    let drift = (end - (0.4 - c0 * 0.7 * 2.0)).abs();

    let d0 = 0.5;
    let pair = ParticleState::new(vec![-d0, d0], c0, 0.0, None).map_err(fail)?;
    let traj = integrate(&pair, 1e-3, 1.0).map_err(fail)?;
    let gap_err = sup(traj.states.iter().map(|s| {
        let gap = s.positions[1] - s.positions[0];
        let law = 4.0 * (d0 * d0 + c0 * s.t / PI);
        (gap * gap - law) / law
    }));

    let lattice = ParticleState::lattice(32, 1.0, 0.0, c0, 1.0, true).map_err(fail)?;
    let v = lattice_mean_velocity(&integrate(&lattice, 1e-2, 1.0).map_err(fail)?, None).map_err(fail)?;
    let lat_err = (v + c0).abs() / c0;

    // Order: error of the gap at t = 1 against the exact law as dt halves.
    let close = ParticleState::new(vec![-0.1, 0.1], c0, 0.0, None).map_err(fail)?;
    let exact = 2.0 * (0.01 + c0 / PI).sqrt();
    let err = |dt: f64| -> Result<f64, String> {
        let s = integrate(&close, dt, 1.0).map_err(fail)?;
        let p = &s.states.last().unwrap().positions;
        Ok((p[1] - p[0] - exact).abs())
    };
    let (e1, e2, e3) = (err(0.01)?, err(0.005)?, err(0.0025)?);
    let (o1, o2) = ((e1 / e2).log2(), (e2 / e3).log2());
    let order_ok = (3.5..=4.5).contains(&o1) && (3.5..=4.5).contains(&o2);
    Ok((
        drift <= 1e-12 && gap_err <= 1e-6 && lat_err <= 1e-6 && order_ok,
        format!(
            "drift err {drift:.1e}; gap law rel err {gap_err:.1e} (<= 1e-6); lattice rel err {lat_err:.1e} (<= 1e-6); observed order {o1:.2}, {o2:.2}"
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("operator cross-validation", operator_cross_validation),
        ("arctan operator oracle", arctan_oracle),
        ("layer oracle", layer_oracle),
        ("Orowan constant", orowan_constant),
        ("decay bounds", decay_suites),
        ("corrector checks", corrector_checks),
        ("series claims", series_claims),
        ("hull residual rate", hull_residual),
        ("far-field integral", far_field),
        ("Orowan law scan", orowan_law),
        ("effective Hamiltonian monotone in L", hamiltonian_monotone),
        ("particle dynamics", particle_dynamics),
    ];
    // Shared solutions first so the threads do not race to build them.
    let _ = (standard_layer(), skewed_layer(), standard_corrector());
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".to_string()));
                    (out, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (out, secs))) in criteria.iter().zip(results).enumerate() {
        let (pass, detail) = match out {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {name}: {} [{secs:.1}s] {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
