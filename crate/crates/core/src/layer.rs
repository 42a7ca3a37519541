//! The layer profile: the monotone solution of `I₁[φ] = W'(φ)` with
//! `φ(−∞) = 0`, `φ(+∞) = 1`, `φ(0) = 1/2`.
//!
//! The unknown is split as `φ = φ_ref + u` with `φ_ref = 1/2 + arctan(αx)/π`.
//! The reference carries the jump and the `−1/(απx)` tail, and its `I₁` is
//! known in closed form; the remainder `u` decays like `x⁻²` and is solved on
//! a periodic box `[−X, X)` with the spectral operator. Damped Newton with a
//! matrix-free GMRES inner solve.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::operator::{Grid1D, SpectralOperator};
use crate::potential::PotentialSpec;
use crate::profile::{FarField, TabulatedProfile, FAR_POWERS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerConfig {
    pub half_width: f64,
    pub count: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// The initial guess is `1/2 + arctan(αx/s)/π` blended into the reference
    /// away from the origin. `s = 1` starts from the reference itself.
    pub initial_stretch: f64,
    /// Subtract the field of the periodic images of the decaying part.
    pub image_correction: bool,
}

impl Default for LayerConfig {
    fn default() -> Self {
        LayerConfig {
            half_width: 40.0,
            count: 4096,
            tol: 1e-10,
            max_iter: 50,
            initial_stretch: 1.0,
            image_correction: true,
        }
    }
}

impl LayerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width >= 20.0) {
            return Err(Error::invalid(format!(
                "layer half-width X must be at least 20, got {}",
                self.half_width
            )));
        }
        if self.count < 512 {
            return Err(Error::invalid(format!(
                "layer grid needs at least 512 nodes, got {}",
                self.count
            )));
        }
        if self.count % 2 != 0 {
            return Err(Error::invalid("layer grid count must be even"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("layer tolerance must be positive"));
        }
        if !(self.initial_stretch >= 1.0 && self.initial_stretch.is_finite()) {
            return Err(Error::invalid("initial stretch must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("layer max_iter must be positive"));
        }
        Ok(())
    }
}

/// Solved layer. The samples cover the central part `[−X_s, X_s]` of the
/// solver box; beyond it the layer is represented by its tail model.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSolution {
    pub xs: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi3: Vec<f64>,
    pub alpha: f64,
    pub potential: String,
    pub k0: f64,
    pub k1: f64,
    pub c0: f64,
    /// Sup-norm equation residual over the nodes.
    pub residual: f64,
    /// Multiplier `μ` of the bordered system. The discrete equation holds up to
    /// `−μ·φ_ref'`; `μ` measures the solvability defect left by closing the
    /// problem on a finite box and vanishes for point-symmetric layers.
    pub multiplier: f64,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Coefficients `b` (left, right) of the `b/x²` correction to the
    /// `−1/(απx)` tail.
    pub tail_b: [f64; 2],
    /// Periodic box the layer was solved on: half-width and node count.
    pub box_half_width: f64,
    pub box_count: usize,
    pub(crate) profile: TabulatedProfile,
}

/// `dᵐ/dxᵐ (1/2 + arctan(αx)/π)`.
pub(crate) fn atan_derivative(alpha: f64, x: f64, order: u32) -> f64 {
    let t = alpha * x;
    let g = 1.0 / (1.0 + t * t);
    let d = match order {
        0 => return 0.5 + t.atan() / PI,
        1 => g,
        2 => -2.0 * t * g * g,
        3 => (6.0 * t * t - 2.0) * g * g * g,
        4 => -24.0 * t * (t * t - 1.0) * g * g * g * g,
        5 => 24.0 * (5.0 * t.powi(4) - 10.0 * t * t + 1.0) * g.powi(5),
        _ => unreachable!("order ≤ 5"),
    };
    d * alpha.powi(order as i32) / PI
}

/// `I₁[1/2 + arctan(αx)/π]`.
fn reference_i1(alpha: f64, x: f64) -> f64 {
    let t = alpha * x;
    -(alpha / PI) * t / (1.0 + t * t)
}

/// Far field of the reference: `−(1/π) arctan(1/(αy))` as a series in `1/y`.
fn reference_far_field(alpha: f64) -> FarField {
    let mut f = FarField::zero();
    let mut p = 1;
    let mut sign = -1.0;
    while p <= FAR_POWERS {
        f.coeffs[p] = sign / (PI * p as f64 * alpha.powi(p as i32));
        sign = -sign;
        p += 2;
    }
    f
}

struct LayerSystem<'a> {
    op: SpectralOperator,
    xs: Vec<f64>,
    pin: usize,
    alpha: f64,
    potential: &'a PotentialSpec,
    ref_i1: Vec<f64>,
    ref_phi: Vec<f64>,
    /// Direction of the multiplier that absorbs the solvability defect.
    border: Vec<f64>,
    /// Image-mass kernel, see `image_kernel`.
    images: Option<Vec<f64>>,
}

/// `(1/π) Σ_{m≠0} (x − 2Xm)⁻²`: the field a unit mass at the origin induces
/// through its periodic images.
pub(crate) fn image_kernel(x: f64, x_max: f64) -> f64 {
    let a = PI / (2.0 * x_max);
    if x.abs() < 1e-4 {
        return a * a / (3.0 * PI) * (1.0 + (a * x).powi(2) / 5.0);
    }
    let s = (a * x).sin();
    (a * a / (s * s) - 1.0 / (x * x)) / PI
}

impl LayerSystem<'_> {
    fn spacing(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    /// `I₁` of the decaying part: periodic multiplier, minus the field of the
    /// periodic images when enabled.
    fn operator(&self, u: &[f64]) -> Vec<f64> {
        let mut su = self.op.half_laplacian(u);
        if let Some(g) = &self.images {
            let mass = self.spacing() * u.iter().sum::<f64>();
            su.iter_mut().zip(g).for_each(|(s, g)| *s -= mass * g);
        }
        su
    }

    /// Equation residual `I₁[φ] − W'(φ)` at every node.
    fn equation(&self, u: &[f64]) -> Vec<f64> {
        let su = self.operator(u);
        (0..u.len())
            .map(|j| su[j] + self.ref_i1[j] - self.potential.dw(self.ref_phi[j] + u[j]))
            .collect()
    }

    /// Bordered residual for the unknowns `(u, μ)`: `F(u) + μ·t` and the pin
    /// `u(0) = 0`.
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let n = self.xs.len();
        let (u, mu) = (&z[..n], z[n]);
        let mut r = self.equation(u);
        r.iter_mut().zip(&self.border).for_each(|(r, t)| *r += mu * t);
        r.push(u[self.pin]);
        r
    }

    fn check_monotone(&self, u: &[f64], iteration: usize) -> Result<()> {
        let du = self.op.derivative(u, 1);
        for (j, &x) in self.xs.iter().enumerate() {
            let d = atan_derivative(self.alpha, x, 1) + du[j];
            if !(d > 0.0) {
                return Err(Error::MonotonicityLoss {
                    iteration,
                    x,
                    derivative: d,
                });
            }
        }
        Ok(())
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn solve_layer(potential: &PotentialSpec, cfg: &LayerConfig) -> Result<LayerSolution> {
    cfg.validate()?;
    let alpha = potential.alpha();
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "layer needs W''(0) > 0, potential `{}` has {alpha}",
            potential.name()
        )));
    }
    let x_max = cfg.half_width;
    let n = cfg.count;
    let grid = Grid1D::with_origin(2.0 * x_max, n, -x_max)?;
    let xs = grid.nodes();
    let border: Vec<f64> = xs.iter().map(|&x| atan_derivative(alpha, x, 1)).collect();
    let sys = LayerSystem {
        op: SpectralOperator::new(grid),
        pin: n / 2,
        alpha,
        potential,
        ref_i1: xs.iter().map(|&x| reference_i1(alpha, x)).collect(),
        ref_phi: xs.iter().map(|&x| atan_derivative(alpha, x, 0)).collect(),
        images: cfg.image_correction.then(|| xs.iter().map(|&x| image_kernel(x, x_max)).collect()),
        border,
        xs,
    };

    // Initial guess, windowed so that it is periodic on the box.
    let s = cfg.initial_stretch;
    let mut z: Vec<f64> = sys
        .xs
        .iter()
        .map(|&x| {
            let window = (-(2.0 * x / x_max).powi(4)).exp();
            window * ((alpha * x / s).atan() - (alpha * x).atan()) / PI
        })
        .collect();
    z.push(0.0);
    sys.check_monotone(&z[..n], 0)?;

    let precond_symbol: Vec<f64> = sys.op.wavenumbers().iter().map(|k| -1.0 / (k.abs() + alpha)).collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        let mut spec = sys.op.forward(&v[..n]);
        for (c, s) in spec.iter_mut().zip(&precond_symbol) {
            *c *= *s;
        }
        out[..n].copy_from_slice(&sys.op.inverse(spec));
        out[n] = v[n];
    };
    let h = sys.spacing();

    let mut r = sys.residual(&z);
    let mut history = vec![sup(&r)];
    let mut iterations = 0;
    while sup(&r) > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence {
                solver: "layer Newton",
                iterations,
                residual: *history.last().unwrap(),
                history,
            });
        }
        iterations += 1;

        let d2w: Vec<f64> = sys
            .ref_phi
            .iter()
            .zip(&z)
            .map(|(p, v)| potential.d2w(p + v))
            .collect();
        let jac = |v: &[f64], out: &mut [f64]| {
            let sv = sys.op.half_laplacian(&v[..n]);
            let mass = h * v[..n].iter().sum::<f64>();
            for j in 0..n {
                out[j] = sv[j] - d2w[j] * v[j] + v[n] * sys.border[j];
                if let Some(g) = &sys.images {
                    out[j] -= mass * g[j];
                }
            }
            out[n] = v[sys.pin];
        };
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut step = vec![0.0; n + 1];
        gmres(jac, precond, &rhs, &mut step, 1e-13, 60, 600);

        // Backtracking on the sup-norm of the residual.
        let current = sup(&r);
        let mut t = 1.0;
        let mut monotone_failure = None;
        loop {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let rt = sys.residual(&trial);
            let st = sup(&rt);
            if st.is_finite() && st < current {
                match sys.check_monotone(&trial[..n], iterations) {
                    Ok(()) => {
                        z = trial;
                        r = rt;
                        history.push(st);
                        break;
                    }
                    Err(e) => monotone_failure = Some(e),
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                if let Some(e) = monotone_failure {
                    return Err(e);
                }
                return Err(Error::NoConvergence {
                    solver: "layer Newton",
                    iterations,
                    residual: current,
                    history,
                });
            }
        }
    }

    let multiplier = z[n];
    z.truncate(n);
    let eq = sys.equation(&z);
    let residual = sup(&eq);
    assemble(sys, z, residual, multiplier, history, iterations)
}

/// Fraction of the periodic box kept in the stored profile. Near the wrap the
/// periodic solution carries ringing from the mismatch of its odd tail terms;
/// beyond the kept part the tail model takes over.
pub(crate) const STORED_FRACTION: f64 = 0.75;

fn assemble(
    sys: LayerSystem<'_>,
    u: Vec<f64>,
    residual: f64,
    multiplier: f64,
    residual_history: Vec<f64>,
    iterations: usize,
) -> Result<LayerSolution> {
    let n = u.len();
    let alpha = sys.alpha;
    let x_max = -sys.xs[0];

    // The `b/x²` tail of u makes its periodic extension kink at the wrap,
    // which spectral derivatives would turn into ringing. Differentiate
    // u − b/(1+x²) spectrally and the subtracted part analytically.
    let b = u[0] * (1.0 + x_max * x_max);
    let bump = |x: f64, order: u32| PI * atan_derivative(1.0, x, order + 1);
    let smooth: Vec<f64> = sys.xs.iter().zip(&u).map(|(&x, v)| v - b * bump(x, 0)).collect();

    let half = (STORED_FRACTION * (n / 2) as f64) as usize;
    let range = sys.pin - half..=sys.pin + half;
    let xs: Vec<f64> = sys.xs[range.clone()].to_vec();
    let mut derivs: [Vec<f64>; 5] = Default::default();
    for (order, d) in derivs.iter_mut().enumerate() {
        let m = order as u32;
        let dv = if order == 0 { smooth.clone() } else { sys.op.derivative(&smooth, m) };
        *d = range
            .clone()
            .map(|j| {
                let x = sys.xs[j];
                atan_derivative(alpha, x, m) + b * bump(x, m) + dv[j]
            })
            .collect();
    }
    if derivs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("layer profile"));
    }

    LayerSolution::from_parts(
        xs,
        derivs,
        alpha,
        sys.potential.name().to_string(),
        (x_max, n),
        (residual, multiplier, residual_history, iterations),
    )
}

impl LayerSolution {
    pub fn half_width(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// `φ^(order)(x)` anywhere on the line (`order ≤ 3`), through the
    /// interpolant inside the box and the tail model outside.
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        self.profile.eval(x, order)
    }

    /// `φ(x) − H(x)`, the decaying part of the layer.
    pub fn eval_reduced(&self, x: f64) -> f64 {
        self.profile.eval_reduced(x, 0)
    }

    pub fn profile(&self) -> &TabulatedProfile {
        &self.profile
    }

    /// Leading tail model `H(x) − 1/(απx) + b/x²`.
    pub fn tail_model(&self, x: f64) -> f64 {
        let (h, b) = if x >= 0.0 { (1.0, self.tail_b[1]) } else { (0.0, self.tail_b[0]) };
        h - 1.0 / (self.alpha * PI * x) + b / (x * x)
    }

    /// Rebuilds a solution from stored samples of `φ` and its first four
    /// derivatives on the kept part of the box, e.g. when reading a cache.
    /// `diagnostics` is `(residual, multiplier, residual history, iterations)`.
    pub fn from_parts(
        xs: Vec<f64>,
        derivs: [Vec<f64>; 5],
        alpha: f64,
        potential: String,
        solver_box: (f64, usize),
        diagnostics: (f64, f64, Vec<f64>, usize),
    ) -> Result<Self> {
        if xs.len() < 3 || derivs.iter().any(|d| d.len() != xs.len()) {
            return Err(Error::invalid("layer samples must have matching lengths of at least 3"));
        }
        if xs.iter().chain(derivs.iter().flatten()).any(|v| !v.is_finite()) || !(alpha > 0.0) {
            return Err(Error::non_finite("layer samples"));
        }
        let n = xs.len() - 1;
        let x_max = xs[n];
        let h = 2.0 * x_max / n as f64;
        if xs.iter().enumerate().any(|(j, &x)| (x - (-x_max + j as f64 * h)).abs() > 1e-9 * x_max) {
            return Err(Error::invalid("layer nodes must be uniform and symmetric about 0"));
        }
        // Far fields continue the samples with matching value, slope and
        // curvature at each end.
        let far = |j: usize| {
            let jump = if j == 0 { 0.0 } else { 1.0 };
            reference_far_field(alpha).matched(xs[j], [derivs[0][j] - jump, derivs[1][j], derivs[2][j]])
        };
        let (left, right) = (far(0), far(n));
        let tail_b = [left.coeffs[2], right.coeffs[2]];
        let profile = TabulatedProfile::new(-x_max, 2.0 * x_max / n as f64, derivs.clone(), left, right, 1.0);
        let [phi, phi1, phi2, phi3, _] = derivs;
        let (residual, multiplier, residual_history, iterations) = diagnostics;
        let mut sol = LayerSolution {
            xs,
            phi,
            phi1,
            phi2,
            phi3,
            alpha,
            potential,
            k0: 0.0,
            k1: 0.0,
            c0: 0.0,
            residual,
            multiplier,
            residual_history,
            iterations,
            tail_b,
            box_half_width: solver_box.0,
            box_count: solver_box.1,
            profile,
        };
        sol.c0 = c0_constant(&sol)?;
        let report = verify_layer_decay(&sol);
        sol.k0 = report.k0;
        sol.k1 = report.k1;
        Ok(sol)
    }
}

/// `(∫ φ'²)⁻¹`: trapezoid over the stored nodes plus the two tails. Each
/// tail integrates the square of the far-field model of `φ'`, scaled to match
/// the sampled `φ'` at the end node.
pub fn c0_constant(layer: &LayerSolution) -> Result<f64> {
    let xs = &layer.xs;
    let d = &layer.phi1;
    if xs.len() < 2 || d.len() != xs.len() {
        return Err(Error::invalid("layer arrays are inconsistent"));
    }
    let mut integral = 0.0;
    for j in 0..xs.len() - 1 {
        integral += 0.5 * (xs[j + 1] - xs[j]) * (d[j] * d[j] + d[j + 1] * d[j + 1]);
    }
    let last = xs.len() - 1;
    for (j, far) in [(0, layer.profile.far_left()), (last, layer.profile.far_right())] {
        let x = xs[j];
        let model = far.derivative(1);
        let m = model.eval(x, 0);
        let scale = if m != 0.0 { d[j] / m } else { 0.0 };
        // ∫ over |y| > |x| of (Σ c_p y^{−p})², term by term.
        let mut tail = 0.0;
        for p in 1..=FAR_POWERS {
            for q in 1..=FAR_POWERS {
                let s = (p + q) as i32;
                let cc = model.coeffs[p] * model.coeffs[q];
                if cc != 0.0 {
                    tail += cc * x.abs().powi(1 - s) / f64::from(s - 1);
                }
            }
        }
        integral += scale * scale * tail;
    }
    if !integral.is_finite() || integral < f64::MIN_POSITIVE {
        return Err(Error::invalid(format!("integral of φ'² is degenerate ({integral:e})")));
    }
    Ok(1.0 / integral)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayViolation {
    pub x: f64,
    pub bound: &'static str,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerDecayReport {
    pub k0: f64,
    pub k1: f64,
    /// Individual suprema entering `k1`: `φ'(1+x²)`, `|φ''|(1+x²)`,
    /// `|φ'''|(1+x²)`, and `|φ − H + 1/(απx)|·x²` over `|x| ≥ 1`.
    pub parts: [f64; 4],
    /// Points beyond the box, evaluated through the tail model, where the
    /// fitted bounds fail.
    pub violations: Vec<DecayViolation>,
}

impl LayerDecayReport {
    pub fn holds(&self) -> bool {
        self.k0 > 0.0 && self.violations.is_empty()
    }
}

/// Fits the constants on the nodes, then checks the same bounds on the tail
/// model out to `100·X`.
pub fn verify_layer_decay(layer: &LayerSolution) -> LayerDecayReport {
    let alpha = layer.alpha;
    let tail = |x: f64, phi: f64| {
        let h = if x >= 0.0 { 1.0 } else { 0.0 };
        ((phi - h + 1.0 / (alpha * PI * x)) * x * x).abs()
    };
    let mut k0 = f64::INFINITY;
    let mut parts = [0.0f64; 4];
    for (j, &x) in layer.xs.iter().enumerate() {
        let w = 1.0 + x * x;
        k0 = k0.min(layer.phi1[j] * w);
        parts[0] = parts[0].max(layer.phi1[j] * w);
        parts[1] = parts[1].max(layer.phi2[j].abs() * w);
        parts[2] = parts[2].max(layer.phi3[j].abs() * w);
        if x.abs() >= 1.0 {
            parts[3] = parts[3].max(tail(x, layer.phi[j]));
        }
    }
    // Limits at infinity of the tail model.
    let limit = 1.0 / (alpha * PI);
    k0 = k0.min(limit);
    parts[0] = parts[0].max(limit);
    parts[3] = parts[3].max(layer.tail_b[0].abs()).max(layer.tail_b[1].abs());
    let k1 = parts.iter().copied().fold(0.0, f64::max);

    let x_max = layer.half_width();
    let mut violations = Vec::new();
    let mut flag = |x: f64, bound: &'static str, value: f64, limit: f64| {
        if !(value <= limit * (1.0 + 1e-9)) {
            violations.push(DecayViolation { x, bound, value, limit });
        }
    };
    for m in 1..=200 {
        let r = x_max * 10f64.powf(m as f64 / 100.0);
        for x in [-r, r] {
            let w = 1.0 + x * x;
            let d1 = layer.eval(x, 1) * w;
            flag(x, "phi1 upper", d1, k1);
            flag(x, "phi1 lower", k0, d1);
            flag(x, "phi2", layer.eval(x, 2).abs() * w, k1);
            flag(x, "phi3", layer.eval(x, 3).abs() * w, k1);
            flag(x, "tail", tail(x, layer.eval(x, 0)), k1);
        }
    }
    LayerDecayReport {
        k0,
        k1,
        parts,
        violations,
    }
}
