//! Interacting dislocation particles
//!
//! ```text
//! dx_i/dt = c₀ (−L₀ + (1/π) Σ_{j≠i} 1/(x_i − x_j)),
//! ```
//!
//! integrated with the classical fourth-order Runge–Kutta method. With a wrap
//! period `P` every particle also interacts with the images `x_j + mP`; the
//! image sum is taken in closed form, `Σ_m 1/(d + mP) = (π/P) cot(πd/P)`,
//! which pairs `±m` symmetrically so an equispaced lattice cancels exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_COLLISION_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub positions: Vec<f64>,
    pub t: f64,
    pub c0: f64,
    pub l0: f64,
    /// Period of the emulated lattice; `None` for a free finite group.
    pub wrap: Option<f64>,
    pub collision_gap: f64,
}

impl ParticleState {
    pub fn new(positions: Vec<f64>, c0: f64, l0: f64, wrap: Option<f64>) -> Result<Self> {
        let s = ParticleState {
            positions,
            t: 0.0,
            c0,
            l0,
            wrap,
            collision_gap: DEFAULT_COLLISION_GAP,
        };
        s.validate()?;
        Ok(s)
    }

    /// `n` particles with the given spacing starting at `x0`.
    pub fn lattice(n: usize, spacing: f64, x0: f64, c0: f64, l0: f64, wrapped: bool) -> Result<Self> {
        let positions = (0..n).map(|i| x0 + spacing * i as f64).collect();
        let wrap = wrapped.then_some(spacing * n as f64);
        Self::new(positions, c0, l0, wrap)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::invalid("at least one particle is required"));
        }
        if self.positions.iter().any(|x| !x.is_finite()) || !self.c0.is_finite() || !self.l0.is_finite() {
            return Err(Error::non_finite("particle state"));
        }
        if let Some(p) = self.wrap {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("wrap period must be positive, got {p}")));
            }
            let span = self.positions[self.positions.len() - 1] - self.positions[0];
            if span >= p {
                return Err(Error::invalid("particles must fit inside one wrap period"));
            }
        }
        if let Some(i) = self.positions.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("positions must be strictly increasing (index {i})")));
        }
        self.check_gaps()
    }

    fn check_gaps(&self) -> Result<()> {
        let x = &self.positions;
        let n = x.len();
        let mut pairs: Vec<(usize, usize, f64)> = x.windows(2).enumerate().map(|(i, w)| (i, i + 1, w[1] - w[0])).collect();
        if let (Some(p), true) = (self.wrap, n > 1) {
            pairs.push((n - 1, 0, x[0] + p - x[n - 1]));
        }
        for (left, right, gap) in pairs {
            if !(gap > self.collision_gap) {
                return Err(Error::Collision {
                    left,
                    right,
                    t: self.t,
                    gap,
                });
            }
        }
        Ok(())
    }
}

/// Velocities of all particles.
pub fn particle_rhs(state: &ParticleState) -> Result<Vec<f64>> {
    state.check_gaps()?;
    Ok(velocities(state, &state.positions))
}

fn velocities(state: &ParticleState, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut v = vec![-state.l0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = x[i] - x[j];
            acc += match state.wrap {
                Some(p) => PI / p / (PI * d / p).tan(),
                None => 1.0 / d,
            };
        }
        v[i] += acc / PI;
    }
    for vi in &mut v {
        *vi *= state.c0;
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrajectory {
    pub states: Vec<ParticleState>,
}

/// RK4 from `state.t` to `state.t + horizon`, recording every step.
pub fn integrate(state: &ParticleState, dt: f64, horizon: f64) -> Result<ParticleTrajectory> {
    state.validate()?;
    if !(dt > 0.0 && dt.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("dt and T must be positive"));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let n = state.positions.len();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(state.clone());
    let mut cur = state.clone();
    let axpy = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    for step in 1..=steps {
        let x = &cur.positions;
        let k1 = velocities(&cur, x);
        let k2 = velocities(&cur, &axpy(x, &k1, 0.5 * h));
        let k3 = velocities(&cur, &axpy(x, &k2, 0.5 * h));
        let k4 = velocities(&cur, &axpy(x, &k3, h));
        let next: Vec<f64> = (0..n)
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("particle positions at step {step}")));
        }
        cur = ParticleState {
            positions: next,
            t: state.t + step as f64 * h,
            ..cur
        };
        // Ordering and gaps; a crossing shows up as a nonpositive gap.
        cur.check_gaps()?;
        states.push(cur.clone());
    }
    Ok(ParticleTrajectory { states })
}

/// Mean displacement over the selected particles per unit time between the
/// first and last states.
pub fn lattice_mean_velocity(traj: &ParticleTrajectory, range: Option<std::ops::Range<usize>>) -> Result<f64> {
    let (first, last) = match (traj.states.first(), traj.states.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("empty trajectory")),
    };
    let elapsed = last.t - first.t;
    if !(elapsed > 0.0) {
        return Err(Error::invalid("trajectory spans zero time"));
    }
    let range = range.unwrap_or(0..first.positions.len());
    if range.is_empty() || range.end > first.positions.len() {
        return Err(Error::invalid("particle range out of bounds"));
    }
    let count = range.len() as f64;
    let disp: f64 = range.map(|i| last.positions[i] - first.positions[i]).sum();
    Ok(disp / count / elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_drifts() {
        let s = ParticleState::new(vec![0.3], 2.0, 1.5, None).unwrap();
        assert_eq!(particle_rhs(&s).unwrap(), vec![-3.0]);
        let traj = integrate(&s, 0.1, 1.0).unwrap();
        assert!((traj.states.last().unwrap().positions[0] - (0.3 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn pair_velocities() {
        let c0 = 2.0 * PI;
        let d = 0.7;
        let s = ParticleState::new(vec![-d, d], c0, 0.0, None).unwrap();
        let v = particle_rhs(&s).unwrap();
        assert!((v[1] - c0 / (2.0 * PI * d)).abs() < 1e-15);
        assert!((v[0] + v[1]).abs() < 1e-15);
    }

    #[test]
    fn wrapped_lattice_cancels() {
        let s = ParticleState::lattice(32, 0.5, -3.0, 2.0 * PI, 1.0, true).unwrap();
        let v = particle_rhs(&s).unwrap();
        assert!(v.iter().all(|v| (v + 2.0 * PI).abs() < 1e-12), "{v:?}");
    }

    #[test]
    fn collision_is_reported() {
        let s = ParticleState::new(vec![0.0, 1.0], 1.0, 0.0, None).unwrap();
        let close = ParticleState::new(vec![0.0, 5e-7], 1.0, 0.0, None);
        assert!(matches!(close, Err(Error::Collision { left: 0, right: 1, .. })));
        assert!(particle_rhs(&s).is_ok());
        assert!(ParticleState::new(vec![1.0, 0.0], 1.0, 0.0, None).is_err());
        assert!(ParticleState::new(vec![0.0, 2.0], 1.0, 0.0, Some(2.0)).is_err());
    }

    #[test]
    fn translation_equivariance() {
        let a = ParticleState::new(vec![-1.0, 0.2, 1.5], 1.0, 0.3, None).unwrap();
        let b = ParticleState::new(vec![9.0, 10.2, 11.5], 1.0, 0.3, None).unwrap();
        let ta = integrate(&a, 0.01, 0.5).unwrap();
        let tb = integrate(&b, 0.01, 0.5).unwrap();
        let (xa, xb) = (&ta.states.last().unwrap().positions, &tb.states.last().unwrap().positions);
        for (p, q) in xa.iter().zip(xb) {
            assert!((q - p - 10.0).abs() < 1e-12);
        }
    }
}
