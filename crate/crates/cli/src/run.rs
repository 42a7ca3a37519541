//! Subcommand execution. Every artifact is built in memory first and written
//! only once the whole computation succeeded.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use orowan_core::cell::{estimate_lambda, evolve_cell, orowan_scan, CellProblemConfig};
use orowan_core::corrector::{solve_corrector, verify_corrector_decay, CorrectorSolution};
use orowan_core::hull::{Hull, HullParams};
use orowan_core::layer::{solve_layer, verify_layer_decay, LayerSolution};
use orowan_core::operator::half_laplacian_quadrature;
use orowan_core::particles::{integrate, lattice_mean_velocity, ParticleState};
use orowan_core::potential::{validate_potential, PotentialSpec};
use orowan_core::Error;
use sha2::{Digest, Sha256};

use crate::cache;
use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Layer,
    Corrector,
    Hull,
    Cell,
    Orowan,
    Particles,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Layer => "layer",
            Subcommand::Corrector => "corrector",
            Subcommand::Hull => "hull",
            Subcommand::Cell => "cell",
            Subcommand::Orowan => "orowan",
            Subcommand::Particles => "particles",
            Subcommand::Verify => "verify",
        }
    }
}

#[derive(Debug)]
pub struct RunError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for RunError {}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for orowan_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|error| RunError { stage, error })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Written files, in order, relative to the output directory.
    pub files: Vec<String>,
    /// Failed scan rows or verify checks. Artifacts are still written.
    pub failures: Vec<String>,
    pub summary: String,
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

trait Show {
    fn show(&self) -> String;
}

impl Show for f64 {
    fn show(&self) -> String {
        num(*self)
    }
}

macro_rules! show_display {
    ($($t:ty),*) => {$(impl Show for $t {
        fn show(&self) -> String {
            self.to_string()
        }
    })*};
}
show_display!(usize, bool, &str, String, &String);

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

struct Session<'c> {
    cfg: &'c RunConfig,
    potential: PotentialSpec,
    layer: Option<LayerSolution>,
    artifacts: Vec<(String, Vec<u8>)>,
    summary: String,
    failures: Vec<String>,
}

impl<'c> Session<'c> {
    fn emit(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push((name.to_string(), bytes));
    }

    fn note(&mut self, key: &str, value: impl Show) {
        let _ = writeln!(self.summary, "{key} = {}", value.show());
    }

    /// The layer, from the cache when an identical solve was stored before.
    fn layer(&mut self) -> Result<&LayerSolution, RunError> {
        if self.layer.is_none() {
            let path = cache::cache_path(&self.cfg.output_dir.join("cache"), &self.cfg.potential, &self.cfg.layer);
            let layer = match cache::load(&path).stage("layer cache")? {
                Some(l) => l,
                None => {
                    let l = solve_layer(&self.potential, &self.cfg.layer).stage("layer")?;
                    cache::store(&path, &l).stage("layer cache")?;
                    l
                }
            };
            self.layer = Some(layer);
        }
        Ok(self.layer.as_ref().unwrap())
    }

    fn corrector(&mut self, l: f64) -> Result<CorrectorSolution, RunError> {
        let tol = self.cfg.corrector.tol;
        let potential = self.potential.clone();
        let layer = self.layer()?;
        solve_corrector(layer, &potential, l, tol).stage("corrector")
    }

    fn c0(&mut self) -> Result<f64, RunError> {
        Ok(self.layer()?.c0)
    }

    fn run_layer(&mut self) -> Result<(), RunError> {
        let layer = self.layer()?.clone();
        let rows = layer
            .xs
            .iter()
            .enumerate()
            .map(|(j, &x)| vec![num(x), num(layer.phi[j]), num(layer.phi1[j]), num(layer.phi2[j]), num(layer.phi3[j])]);
        let bytes = table(&["x", "phi", "phi1", "phi2", "phi3"], rows);
        self.emit("layer.csv", bytes);
        if self.cfg.emit_plot_data {
            let a = layer.alpha;
            let rows = layer.xs.iter().zip(&layer.phi).map(|(&x, &p)| {
                let r = 0.5 + (a * x).atan() / PI;
                vec![num(x), num(p), num(r), num(p - r)]
            });
            let bytes = table(&["x", "phi", "arctan_reference", "difference"], rows);
            self.emit("plot_layer.csv", bytes);
        }
        self.note("c0", layer.c0);
        self.note("k0", layer.k0);
        self.note("k1", layer.k1);
        self.note("residual", layer.residual);
        self.note("newton_iterations", layer.iterations);
        Ok(())
    }

    fn run_corrector(&mut self) -> Result<(), RunError> {
        let sol = self.corrector(self.cfg.corrector.l)?;
        let rows = sol
            .xs
            .iter()
            .enumerate()
            .map(|(j, &x)| vec![num(x), num(sol.psi[j]), num(sol.psi1[j]), num(sol.psi2[j])]);
        let bytes = table(&["x", "psi", "psi1", "psi2"], rows);
        self.emit("corrector.csv", bytes);
        self.note("L", sol.l);
        self.note("c", sol.c);
        self.note("k2", sol.k2);
        self.note("k3", sol.k3);
        self.note("residual", sol.residual);
        self.note("fredholm_defect", sol.fredholm_defect);
        self.note("gmres_iterations", sol.gmres_iterations);
        Ok(())
    }

    fn run_hull(&mut self) -> Result<(), RunError> {
        let hc = self.cfg.hull.clone();
        let corrector = self.corrector(hc.l)?;
        let layer = self.layer()?.clone();
        let potential = self.potential.clone();
        let params = HullParams::new(hc.delta, hc.p0, hc.l, hc.n, &layer, &corrector, &potential).stage("hull")?;
        let hull = Hull::new(params, hc.tol).stage("hull")?;
        let nl = hull.nl_on_nodes();
        let rows = hull
            .nodes()
            .iter()
            .zip(hull.offsets())
            .zip(&nl)
            .map(|((&x, &g), &r)| vec![num(x), num(x + g), num(g), num(r)]);
        let bytes = table(&["x", "h", "h_minus_x", "nl_residual"], rows);
        self.emit("hull.csv", bytes);
        let sup = hull.nl_sup();
        self.note("delta", hc.delta);
        self.note("epsilon", params.epsilon());
        self.note("lambda_bar", params.lambda_bar());
        self.note("nl_sup", sup);
        self.note("nl_sup_over_delta2", sup / (hc.delta * hc.delta));
        self.note("band", hull.band());
        self.note("min_slope", hull.min_slope());
        Ok(())
    }

    fn cell_config(&self) -> CellProblemConfig {
        CellProblemConfig {
            p: self.cfg.cell.p,
            l: self.cfg.cell.l,
            ..self.cfg.cell.base
        }
    }

    fn run_cell(&mut self) -> Result<(), RunError> {
        let cfg = self.cell_config();
        let traj = evolve_cell(&cfg, &self.potential).stage("cell")?;
        let est = estimate_lambda(&traj, cfg.burn_in).stage("cell")?;
        let rows = (0..traj.times.len()).map(|i| vec![num(traj.times[i]), num(traj.means[i]), num(traj.sup_norms[i])]);
        let bytes = table(&["tau", "mean_w", "sup_w"], rows);
        self.emit("cell.csv", bytes);
        if self.cfg.emit_plot_data {
            if let Some((t, w)) = traj.snapshots.last() {
                let grid = w.grid;
                let rows = w.values.iter().enumerate().map(|(j, &v)| vec![num(*t), num(grid.node(j)), num(v)]);
                let bytes = table(&["tau", "y", "w"], rows);
                self.emit("plot_cell.csv", bytes);
            }
        }
        self.note("p", cfg.p);
        self.note("L", cfg.l);
        self.note("lambda", est.lambda);
        self.note("slope_fit_stderr", est.slope_fit_stderr);
        self.note("fit_residual", est.fit_residual);
        self.note("converged", est.converged);
        self.note("steps", traj.steps);
        for w in &traj.warnings {
            self.note("warning", w);
        }
        Ok(())
    }

    fn run_orowan(&mut self) -> Result<(), RunError> {
        let c0 = self.c0()?;
        let cc = self.cfg.cell.clone();
        let rows = orowan_scan(cc.p0, cc.l0, &cc.deltas, c0, &self.potential, &cc.base).stage("orowan")?;
        let mut out = vec![];
        for row in &rows {
            let rel = row.relative_error();
            match &row.outcome {
                Ok((est, scaled)) => out.push(vec![
                    num(row.delta),
                    num(row.p),
                    num(row.l),
                    num(est.lambda),
                    num(*scaled),
                    num(row.target),
                    num(rel.unwrap_or(f64::NAN)),
                    est.converged.to_string(),
                ]),
                Err(msg) => {
                    self.failures.push(format!("orowan row delta = {}: {msg}", row.delta));
                    out.push(vec![
                        num(row.delta),
                        num(row.p),
                        num(row.l),
                        String::new(),
                        String::new(),
                        num(row.target),
                        String::new(),
                        "false".into(),
                    ]);
                }
            }
        }
        let header = [
            "delta",
            "p",
            "L",
            "lambda",
            "lambda_over_delta2",
            "target_c0_p0_L0",
            "rel_error",
            "converged",
        ];
        self.emit("orowan.csv", table(&header, out));
        self.note("c0", c0);
        self.note("target_c0_p0_L0", c0 * cc.p0.abs() * cc.l0);
        for row in &rows {
            if let Some(r) = row.relative_error() {
                self.note(&format!("rel_error[delta={}]", row.delta), r);
            }
        }
        Ok(())
    }

    fn particle_state(&mut self) -> Result<ParticleState, RunError> {
        let pc = self.cfg.particles.clone();
        let c0 = match pc.c0 {
            Some(c) => c,
            None => self.c0()?,
        };
        ParticleState::lattice(pc.n, pc.spacing, pc.x0, c0, pc.l0, pc.wrap).stage("particles")
    }

    fn run_particles(&mut self) -> Result<(), RunError> {
        let pc = self.cfg.particles.clone();
        let state = self.particle_state()?;
        let traj = integrate(&state, pc.dt, pc.horizon).stage("particles")?;
        let last = traj.states.len() - 1;
        let rows = traj
            .states
            .iter()
            .enumerate()
            .filter(|(i, _)| i % pc.record_every == 0 || *i == last)
            .map(|(_, s)| std::iter::once(num(s.t)).chain(s.positions.iter().map(|&x| num(x))).collect());
        let mut header = vec!["t".to_string()];
        header.extend((1..=pc.n).map(|i| format!("x_{i}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        self.emit("particles.csv", table(&header, rows));
        let v = lattice_mean_velocity(&traj, None).stage("particles")?;
        self.note("c0", state.c0);
        self.note("mean_velocity", v);
        self.note("lattice_velocity_minus_c0_L0", -state.c0 * state.l0);
        Ok(())
    }

    fn run_verify(&mut self) -> Result<(), RunError> {
        let mut checks: Vec<(String, f64, f64, bool)> = vec![];
        let mut check = |name: &str, value: f64, limit: f64, pass: bool| checks.push((name.to_string(), value, limit, pass));

        let grid: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
        let report = validate_potential(&self.potential, &grid).stage("potential")?;
        check("potential_admissible", report.periodicity_defect, 1e-12, report.is_admissible());

        let x = 0.3;
        let k = 2.0 * PI;
        let quad = half_laplacian_quadrature(|y| (k * y).cos(), -k * (k * x).sin(), x, &self.cfg.levy).stage("operator")?;
        let err = (quad + k * (k * x).cos()).abs();
        check("operator_quadrature_cos", err, 1e-6, err <= 1e-6);

        let layer = self.layer()?.clone();
        check("layer_residual", layer.residual, 1e-8, layer.residual <= 1e-8);
        let min_slope = layer.phi1.iter().cloned().fold(f64::INFINITY, f64::min);
        check("layer_min_slope", min_slope, 0.0, min_slope > 0.0);
        let decay = verify_layer_decay(&layer);
        let count = decay.violations.len() as f64;
        check("layer_decay_violations", count, 0.0, decay.holds());
        if self.potential.name() == "standard" {
            let rel = (layer.c0 - 2.0 * PI).abs() / (2.0 * PI);
            check("layer_c0_vs_2pi", rel, 0.01, rel <= 0.01);
        }

        let hc = self.cfg.hull.clone();
        let corrector = solve_corrector(&layer, &self.potential, hc.l, self.cfg.corrector.tol).stage("corrector")?;
        let cd = verify_corrector_decay(&corrector);
        check("corrector_decay_violations", cd.violations.len() as f64, 0.0, cd.holds());
        let tol = self.cfg.corrector.tol;
        check("corrector_residual", corrector.residual, tol, corrector.residual <= tol);

        let mut sups = vec![];
        for delta in [hc.delta, hc.delta / 2.0] {
            let params =
                HullParams::new(delta, hc.p0, hc.l, hc.n, &layer, &corrector, &self.potential).stage("hull")?;
            let hull = Hull::new(params, hc.tol).stage("hull")?;
            if sups.is_empty() {
                check("hull_min_slope", hull.min_slope(), 0.0, hull.min_slope() > 0.0);
            }
            sups.push(hull.nl_sup());
        }
        let rate = (sups[0] / sups[1]).log2();
        check("hull_nl_rate", rate, 1.8, rate >= 1.8);

        let state = self.particle_state()?;
        if state.wrap.is_some() {
            let v = lattice_mean_velocity(&integrate(&state, 0.01, 0.1).stage("particles")?, None).stage("particles")?;
            let dev = (v + state.c0 * state.l0).abs() / (state.c0 * state.l0).abs().max(1.0);
            check("particles_lattice_velocity", dev, 1e-10, dev <= 1e-10);
        }

        let cfg = self.cell_config();
        let est = evolve_cell(&cfg, &self.potential)
            .and_then(|t| estimate_lambda(&t, cfg.burn_in))
            .stage("cell")?;
        check("cell_lambda_converged", est.slope_fit_stderr, 0.0, est.converged);

        for (name, value, _, pass) in &checks {
            self.note(name, *value);
            if !pass {
                self.failures.push(format!("check {name} failed (value {})", num(*value)));
            }
        }
        let rows = checks.into_iter().map(|(n, v, l, p)| vec![n, num(v), num(l), p.to_string()]);
        self.emit("verify.csv", table(&["check", "value", "limit", "pass"], rows));
        Ok(())
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs one subcommand and writes its artifacts, a summary and a manifest to
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig, cmd: Subcommand) -> Result<RunReport, RunError> {
    let potential = PotentialSpec::from_label(&cfg.potential).stage("potential")?;
    let mut s = Session {
        cfg,
        potential,
        layer: None,
        artifacts: vec![],
        summary: String::new(),
        failures: vec![],
    };
    s.note("subcommand", cmd.name());
    s.note("potential", &cfg.potential);
    match cmd {
        Subcommand::Layer => s.run_layer(),
        Subcommand::Corrector => s.run_corrector(),
        Subcommand::Hull => s.run_hull(),
        Subcommand::Cell => s.run_cell(),
        Subcommand::Orowan => s.run_orowan(),
        Subcommand::Particles => s.run_particles(),
        Subcommand::Verify => s.run_verify(),
    }?;
    for f in &s.failures {
        let _ = writeln!(s.summary, "failure = {f}");
    }
    let summary = s.summary.clone();
    s.emit("summary.txt", summary.clone().into_bytes());

    let canonical = cfg.canonical();
    let mut manifest = format!(
        "orowan {}\nsubcommand = {}\nconfig_sha256 = {}\n\n[config]\n{canonical}\n[outputs]\n",
        env!("CARGO_PKG_VERSION"),
        cmd.name(),
        sha256(canonical.as_bytes())
    );
    for (name, bytes) in &s.artifacts {
        let _ = writeln!(manifest, "{}  {name}", sha256(bytes));
    }
    s.emit("manifest.txt", manifest.into_bytes());

    write_all(&cfg.output_dir, &s.artifacts).stage("output")?;
    Ok(RunReport {
        files: s.artifacts.iter().map(|(n, _)| n.clone()).collect(),
        failures: s.failures,
        summary,
    })
}

fn write_all(dir: &Path, artifacts: &[(String, Vec<u8>)]) -> orowan_core::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in artifacts {
        let path: PathBuf = dir.join(name);
        fs::write(path, bytes)?;
    }
    Ok(())
}
