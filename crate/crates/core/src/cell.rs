//! The cell problem `∂_τ v = L + I₁[v] − W'(v)`, `v(0, y) = py`, and the
//! effective Hamiltonian `H̄(p, L)` as the drift rate of `v − py`.
//!
//! `w = v − py` is `1/|p|`-periodic and `I₁[v] = I₁[w]`, so the evolution
//! runs on a periodic grid. Stepping is implicit in `I₁` (diagonal in
//! frequency) and explicit in `W'`:
//! `ŵ ← (ŵ + dt·F[L − W'(py + w)]) / (1 + dt|k|)`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{Grid1D, GridField, SpectralOperator};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProblemConfig {
    pub p: f64,
    pub l: f64,
    /// Grid nodes per unit length of `y`.
    pub points_per_unit: f64,
    /// Time step as a multiple of the grid spacing.
    pub dt_factor: f64,
    pub horizon: f64,
    pub burn_in: f64,
    /// Number of mean samples recorded over the horizon.
    pub samples: usize,
    /// Number of stored snapshots of `w` (the final state is always kept).
    pub snapshots: usize,
    /// Constant added to the initial data `w(0) = k`.
    pub initial_offset: f64,
}

impl Default for CellProblemConfig {
    fn default() -> Self {
        CellProblemConfig {
            p: 1.0,
            l: 0.0,
            points_per_unit: 32.0,
            dt_factor: 0.1,
            horizon: 100.0,
            burn_in: 0.2,
            samples: 400,
            snapshots: 4,
            initial_offset: 0.0,
        }
    }
}

impl CellProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p != 0.0) {
            return Err(Error::invalid(format!("cell p must be finite and nonzero, got {}", self.p)));
        }
        if !self.l.is_finite() || !self.initial_offset.is_finite() {
            return Err(Error::non_finite("cell L or initial offset"));
        }
        if !(self.points_per_unit >= 4.0 && self.points_per_unit.is_finite()) {
            return Err(Error::invalid("points_per_unit must be at least 4"));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon T must be positive"));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::invalid(format!("burn_in must lie in [0, 1), got {}", self.burn_in)));
        }
        if self.samples < 20 {
            return Err(Error::invalid("need at least 20 mean samples"));
        }
        let count = self.count();
        if count > 1 << 24 {
            return Err(Error::invalid(format!("cell grid of {count} nodes is too large")));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.p.abs()
    }

    /// Even node count covering one period at the requested density.
    pub fn count(&self) -> usize {
        let c = (self.points_per_unit * self.period()).ceil() as usize;
        (c + c % 2).max(16)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.period(), self.count())
    }

    pub fn dt(&self) -> f64 {
        self.dt_factor * self.period() / self.count() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTrajectory {
    pub times: Vec<f64>,
    /// Spatial mean of `w` at `times`.
    pub means: Vec<f64>,
    /// `‖w‖∞` at `times`.
    pub sup_norms: Vec<f64>,
    /// `(τ, w)` snapshots; the last is the final state.
    pub snapshots: Vec<(f64, GridField)>,
    pub steps: usize,
    pub dt: f64,
    pub warnings: Vec<String>,
}

pub fn evolve_cell(cfg: &CellProblemConfig, potential: &PotentialSpec) -> Result<CellTrajectory> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let op = SpectralOperator::new(grid);
    let n = grid.count();
    let ys = grid.nodes();
    let dt = cfg.dt();
    let steps = (cfg.horizon / dt).ceil() as usize;
    let dt = cfg.horizon / steps as f64;

    let mut warnings = Vec::new();
    // Explicit W' is stable for dt·max|W''| < 2.
    let stiff = (0..256)
        .map(|j| potential.d2w(j as f64 / 256.0).abs())
        .fold(0.0, f64::max);
    if dt * stiff >= 1.0 {
        warnings.push(format!("dt·max|W''| = {:.3} is outside the monotone range of the explicit step", dt * stiff));
    }

    let denom: Vec<f64> = op.wavenumbers().iter().map(|k| 1.0 / (1.0 + dt * k.abs())).collect();
    let py: Vec<f64> = ys.iter().map(|&y| cfg.p * y).collect();
    let mut w = vec![cfg.initial_offset; n];
    let mut spec: Vec<Complex64>;

    let record_every = (steps / cfg.samples).max(1);
    let snap_every = if cfg.snapshots > 0 { (steps / cfg.snapshots).max(1) } else { usize::MAX };
    let mut times = Vec::with_capacity(cfg.samples + 1);
    let mut means = Vec::with_capacity(cfg.samples + 1);
    let mut sup_norms = Vec::with_capacity(cfg.samples + 1);
    let mut snapshots = Vec::new();
    let mean = |w: &[f64]| w.iter().sum::<f64>() / n as f64;
    let sup = |w: &[f64]| w.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    times.push(0.0);
    means.push(mean(&w));
    sup_norms.push(sup(&w));

    let mut force = vec![0.0; n];
    for step in 1..=steps {
        for j in 0..n {
            force[j] = w[j] + dt * (cfg.l - potential.dw(py[j] + w[j]));
        }
        spec = op.forward(&force);
        for (c, d) in spec.iter_mut().zip(&denom) {
            *c *= *d;
        }
        w = op.inverse(spec);
        if step % record_every == 0 || step == steps {
            let tau = step as f64 * dt;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::non_finite(format!("cell evolution at tau = {tau} (step {step})")));
            }
            times.push(tau);
            means.push(mean(&w));
            sup_norms.push(sup(&w));
        }
        if step % snap_every == 0 && step != steps {
            snapshots.push((step as f64 * dt, GridField::new(grid, w.clone(), 0.0)?));
        }
    }
    snapshots.push((cfg.horizon, GridField::new(grid, w, 0.0)?));
    Ok(CellTrajectory {
        times,
        means,
        sup_norms,
        snapshots,
        steps,
        dt,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonianEstimate {
    pub lambda: f64,
    pub slope_fit_stderr: f64,
    /// `(τ, mean w)` over the fit window.
    pub drift: Vec<(f64, f64)>,
    /// Largest deviation of the mean from the fitted line, relative to the
    /// drift over the window.
    pub fit_residual: f64,
    pub converged: bool,
}

/// Least-squares slope and its standard error.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mm)).sum();
    let slope = sxy / sxx;
    let intercept = mm - slope * mt;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (n - 2.0).max(1.0) / sxx).sqrt();
    (slope, intercept, stderr)
}

pub fn estimate_lambda(traj: &CellTrajectory, burn_in: f64) -> Result<EffectiveHamiltonianEstimate> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::invalid(format!("burn_in must lie in [0, 1), got {burn_in}")));
    }
    let t_end = *traj.times.last().ok_or_else(|| Error::invalid("empty trajectory"))?;
    let start = burn_in * t_end;
    let drift: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.means)
        .filter(|(t, _)| **t >= start)
        .map(|(&t, &m)| (t, m))
        .collect();
    if drift.len() < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 samples after burn-in, got {}",
            drift.len()
        )));
    }
    let (lambda, intercept, stderr) = linear_fit(&drift);
    let (half_slope, _, half_err) = linear_fit(&drift[drift.len() / 2..]);
    let span = (drift[drift.len() - 1].1 - drift[0].1).abs();
    let dev = drift
        .iter()
        .map(|p| (p.1 - intercept - lambda * p.0).abs())
        .fold(0.0, f64::max);
    let fit_residual = if span > 0.0 { dev / span } else { dev };
    // Round-off floor so an exactly linear drift counts as converged.
    let floor = 1e-12 * (lambda.abs() + 1.0);
    let converged = stderr.is_finite() && (half_slope - lambda).abs() <= 2.0 * stderr.max(half_err) + floor;
    Ok(EffectiveHamiltonianEstimate {
        lambda,
        slope_fit_stderr: stderr,
        drift,
        fit_residual,
        converged,
    })
}

/// One row of the Orowan scan.
#[derive(Debug, Clone, PartialEq)]
pub struct OrowanRow {
    pub delta: f64,
    pub p: f64,
    pub l: f64,
    /// `λ` and `λ/δ²`, or the error message of a failed row.
    pub outcome: std::result::Result<(EffectiveHamiltonianEstimate, f64), String>,
    pub target: f64,
}

impl OrowanRow {
    pub fn relative_error(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|(_, r)| (r - self.target).abs() / self.target.abs())
    }
}

/// Runs the cell problem at `(p, L) = (δp₀, δL₀)` for every `δ` and compares
/// `λ/δ²` with `c₀|p₀|L₀`. `base` supplies the resolution, step factor,
/// burn-in and sampling; its `p` and `l` are overwritten, and its horizon is
/// scaled by `δ_max/δ` so every row follows its layers over a comparable
/// distance.
pub fn orowan_scan(
    p0: f64,
    l0: f64,
    deltas: &[f64],
    c0: f64,
    potential: &PotentialSpec,
    base: &CellProblemConfig,
) -> Result<Vec<OrowanRow>> {
    if deltas.is_empty() || deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::invalid("deltas must be positive"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("deltas must be sorted in descending order"));
    }
    if !(p0.is_finite() && p0 != 0.0) || !l0.is_finite() {
        return Err(Error::invalid("p0 must be nonzero and L0 finite"));
    }
    let target = c0 * p0.abs() * l0;
    let d_max = deltas[0];
    let row = |&delta: &f64| {
        let cfg = CellProblemConfig {
            p: delta * p0,
            l: delta * l0,
            horizon: base.horizon * d_max / delta,
            ..*base
        };
        let outcome = evolve_cell(&cfg, potential)
            .and_then(|traj| estimate_lambda(&traj, cfg.burn_in))
            .map(|est| {
                let scaled = est.lambda / (delta * delta);
                (est, scaled)
            })
            .map_err(|e| e.to_string());
        OrowanRow {
            delta,
            p: cfg.p,
            l: cfg.l,
            outcome,
            target,
        }
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        deltas.par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows = deltas.iter().map(row).collect();
    Ok(rows)
}
