//! The hull ansatz
//!
//! ```text
//! s_n(x) = δL/α + Σ_{i=−n}^{n} [φ(x_i) + δψ(x_i)] − n,   x_i = (x − i)/ε,  ε = δ|p₀|,
//! ```
//!
//! its limit `h = lim s_n`, and the residual
//! `NL[h] = λ̄h' − δL − ε·I₁[h] + W'(h)` with `λ̄ = δ²c₀|p₀|L`.
//!
//! Each summand is split into the unit step `H(x_i)` and the decaying part
//! `G = φ − H + δψ`. Terms with `|x_i|` beyond the stored profiles follow the
//! far-field power series of `G`, so sums of them over index ranges reduce to
//! digamma and Hurwitz zeta values and the `n → ∞` limit is exact up to the
//! accuracy of the tail models.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::corrector::CorrectorSolution;
use crate::error::{Error, Result};
use crate::layer::LayerSolution;
use crate::operator::{gauss_legendre, Grid1D, LevyQuadrature, SpectralOperator};
use crate::potential::PotentialSpec;
use crate::profile::{FarField, FAR_POWERS};
use crate::series::{digamma, power_sum, split_lattice};

#[derive(Debug, Clone, Copy)]
pub struct HullParams<'a> {
    pub delta: f64,
    pub p0: f64,
    pub l: f64,
    /// Truncation index of the partial sums.
    pub n: u64,
    pub layer: &'a LayerSolution,
    pub corrector: &'a CorrectorSolution,
    pub potential: &'a PotentialSpec,
}

impl<'a> HullParams<'a> {
    pub fn new(
        delta: f64,
        p0: f64,
        l: f64,
        n: u64,
        layer: &'a LayerSolution,
        corrector: &'a CorrectorSolution,
        potential: &'a PotentialSpec,
    ) -> Result<Self> {
        let params = HullParams {
            delta,
            p0,
            l,
            n,
            layer,
            corrector,
            potential,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.p0.is_finite() && self.p0 != 0.0) {
            return Err(Error::invalid(format!("p0 must be finite and nonzero, got {}", self.p0)));
        }
        if !self.l.is_finite() {
            return Err(Error::non_finite("hull stress L"));
        }
        if self.epsilon() > 0.5 {
            return Err(Error::invalid(format!(
                "need 1/(delta |p0|) >= 2, got delta |p0| = {}",
                self.epsilon()
            )));
        }
        if self.n < 1 {
            return Err(Error::invalid("truncation n must be at least 1"));
        }
        if (self.corrector.l - self.l).abs() > 1e-12 * self.l.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "corrector was solved for L = {}, hull asks for L = {}",
                self.corrector.l, self.l
            )));
        }
        if (self.potential.alpha() - self.layer.alpha).abs() > 1e-12 * self.layer.alpha {
            return Err(Error::invalid("potential does not match the layer"));
        }
        Ok(())
    }

    /// `ε = δ|p₀|`, the width of each layer in the hull variable.
    pub fn epsilon(&self) -> f64 {
        self.delta * self.p0.abs()
    }

    pub fn lambda_bar(&self) -> f64 {
        self.delta * self.delta * self.layer.c0 * self.p0.abs() * self.l
    }

    fn shift(&self) -> f64 {
        self.delta * self.l / self.layer.alpha
    }
}

/// Precomputed far fields of `G = φ − H + δψ` and its first two derivatives.
struct Superposition<'a> {
    p: HullParams<'a>,
    eps: f64,
    /// Beyond `|z| > z_cut` both profiles are given by their far fields.
    z_cut: f64,
    left: [FarField; 3],
    right: [FarField; 3],
}

impl<'a> Superposition<'a> {
    fn new(p: HullParams<'a>) -> Self {
        let lp = p.layer.profile();
        let cp = p.corrector.profile();
        let z_cut = [lp.start(), lp.end(), cp.start(), cp.end()]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let left = lp.far_left().add(&cp.far_left().scaled(p.delta));
        let right = lp.far_right().add(&cp.far_right().scaled(p.delta));
        Superposition {
            eps: p.epsilon(),
            z_cut,
            left: [0, 1, 2].map(|m| left.derivative(m)),
            right: [0, 1, 2].map(|m| right.derivative(m)),
            p,
        }
    }

    /// `G^(order)(z)`.
    fn term(&self, z: f64, order: usize) -> f64 {
        let phi = if order == 0 {
            self.p.layer.profile().eval_reduced(z, 0)
        } else {
            self.p.layer.eval(z, order)
        };
        phi + self.p.delta * self.p.corrector.eval(z, order)
    }

    /// Far-field sum over `j = start, start + 1, …` (`count` terms, or all of
    /// them) of `Σ_q d_q ε^{q−m} (sign·j)^{−q}`. The `q = 1` term of an
    /// infinite range is omitted; callers pair it across the two sides.
    fn model_sum(&self, far: &FarField, order: usize, start: f64, count: Option<u64>, sign: f64) -> f64 {
        let mut acc = 0.0;
        for q in 1..=FAR_POWERS {
            let d = far.coeffs[q];
            if d == 0.0 || (q == 1 && count.is_none()) {
                continue;
            }
            let w = self.eps.powi(q as i32 - order as i32);
            // Cheap bound on the whole range; skip negligible powers.
            let bound = d.abs() * w * (start.powi(-(q as i32)) + start.powi(1 - q as i32));
            if q >= 2 && bound < 1e-22 {
                continue;
            }
            acc += d * w * sign.powi(q as i32) * power_sum(q as u32, start, count);
        }
        acc
    }

    /// `Σ_{i=lo}^{hi} G^(m)(x_i)/ε^m` with `None` bounds meaning the full
    /// lattice in that direction (the `1/z` parts of both infinite sides are
    /// then summed symmetrically).
    fn sum(&self, x: f64, order: usize, n: Option<u64>) -> f64 {
        let reach = self.eps * self.z_cut;
        let near_lo = (x - reach).ceil() as i64;
        let near_hi = (x + reach).floor() as i64;
        let (lo, hi) = match n {
            Some(n) => (-(n as i64), n as i64),
            None => (i64::MIN, i64::MAX),
        };
        let mut acc = 0.0;
        for i in near_lo.max(lo)..=near_hi.min(hi) {
            acc += self.term((x - i as f64) / self.eps, order);
        }
        acc *= self.eps.powi(-(order as i32));

        // Right far field: i ≤ near_lo − 1, x − i ≥ x − near_lo + 1.
        let ir = (near_lo - 1).min(hi);
        let a_r = x - ir as f64;
        let cnt_r = n.map(|n| (ir + n as i64 + 1).max(0) as u64);
        // Left far field: i ≥ near_hi + 1, i − x ≥ near_hi + 1 − x.
        let il = (near_hi + 1).max(lo);
        let a_l = il as f64 - x;
        let cnt_l = n.map(|n| (n as i64 - il + 1).max(0) as u64);

        acc += self.model_sum(&self.right[order], order, a_r, cnt_r, 1.0);
        acc += self.model_sum(&self.left[order], order, a_l, cnt_l, -1.0);
        if n.is_none() {
            acc += self.paired_inverse_sum(order, a_l, a_r);
        }
        acc
    }

    /// Symmetric limit of the `1/(x − i)` parts of the two infinite far
    /// sides, `d₁(ψ(a_l) − ψ(a_r))`.
    fn paired_inverse_sum(&self, order: usize, a_l: f64, a_r: f64) -> f64 {
        let d_r = self.right[order].coeffs[1];
        let d_l = self.left[order].coeffs[1];
        if d_r == 0.0 && d_l == 0.0 {
            return 0.0;
        }
        let d = 0.5 * (d_r + d_l);
        self.eps.powi(1 - order as i32) * d * (digamma(a_l) - digamma(a_r))
    }

    /// Number of `i ∈ [−n, n]` with `i ≤ x` (all `i ≤ x` for `None`,
    /// reported relative to `−n` so that `count − n` is finite).
    fn steps(x: f64, n: Option<u64>) -> f64 {
        let f = x.floor();
        match n {
            Some(n) => {
                let n = n as f64;
                f.clamp(-n - 1.0, n) + 1.0
            }
            None => f + 1.0,
        }
    }

    /// `s_n^(order)(x)`, or `h^(order)(x)` for `n = None`.
    fn value(&self, x: f64, order: usize, n: Option<u64>) -> f64 {
        let g = self.sum(x, order, n);
        if order == 0 {
            self.p.shift() + Self::steps(x, n) + g
        } else {
            g
        }
    }

    /// Partial sum at `n` with the terms `|i| > n` replaced by the closed
    /// form of their far fields. Exact once `n` exceeds `|x| + ε·z_cut`.
    fn accelerated(&self, x: f64, order: usize, n: u64) -> f64 {
        let nf = n as f64;
        let mut acc = self.value(x, order, Some(n));
        // i ≥ n + 1 on the left side, i ≤ −n − 1 on the right.
        let a_l = nf + 1.0 - x;
        let a_r = nf + 1.0 + x;
        if a_l <= 0.0 || a_r <= 0.0 {
            return acc;
        }
        acc += self.model_sum(&self.left[order], order, a_l, None, -1.0);
        acc += self.model_sum(&self.right[order], order, a_r, None, 1.0);
        acc += self.paired_inverse_sum(order, a_l, a_r);
        acc
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::non_finite("hull argument x"))
    }
}

/// `s_{δ,n}^(order)(x)` for `order ≤ 2`. Terms outside the stored profiles
/// are summed in closed form from their far fields.
pub fn ansatz_partial_sum(params: &HullParams, x: f64, order: usize) -> Result<f64> {
    params.validate()?;
    check_x(x)?;
    if order > 2 {
        return Err(Error::invalid(format!("order must be at most 2, got {order}")));
    }
    Ok(Superposition::new(*params).value(x, order, Some(params.n)))
}

/// Term-by-term `s_{δ,n}^(order)(x)`: `2n + 1` profile evaluations, no
/// closed forms.
pub fn raw_partial_sum(params: &HullParams, x: f64, order: usize) -> Result<f64> {
    params.validate()?;
    check_x(x)?;
    if order > 2 {
        return Err(Error::invalid(format!("order must be at most 2, got {order}")));
    }
    let eps = params.epsilon();
    let n = params.n as i64;
    let mut acc = 0.0;
    for i in -n..=n {
        let z = (x - i as f64) / eps;
        acc += params.layer.eval(z, order) + params.delta * params.corrector.eval(z, order);
    }
    acc *= eps.powi(-(order as i32));
    if order == 0 {
        acc += params.shift() - n as f64;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullEvaluation {
    pub x: f64,
    pub gamma: f64,
    pub i0: i64,
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
    /// `I₁[h](x)`.
    pub i1: f64,
    pub nl: f64,
    pub lambda_bar: f64,
    /// `sup |h − x|` over one period.
    pub band: f64,
    /// Truncation at which the accelerated sums settled.
    pub n_used: u64,
}

const N_MAX: u64 = 1 << 40;

/// The limit `h` on one period, tabulated for the spectral evaluation of
/// `I₁[h]`. Since `h(x + 1) = h(x) + 1`, `g = h − x` is 1-periodic and
/// `I₁[h] = I₁[g]`.
pub struct Hull<'a> {
    sup: Superposition<'a>,
    tol: f64,
    op: SpectralOperator,
    nodes: Vec<f64>,
    g: Vec<f64>,
    h1: Vec<f64>,
    i1: Vec<f64>,
    i1_spectrum: Vec<Complex64>,
}

impl<'a> Hull<'a> {
    pub fn new(params: HullParams<'a>, tol: f64) -> Result<Self> {
        params.validate()?;
        if !(tol > 0.0) {
            return Err(Error::invalid("hull tolerance must be positive"));
        }
        let sup = Superposition::new(params);
        let count = ((16.0 / sup.eps).ceil() as usize).next_power_of_two().max(256);
        let grid = Grid1D::with_origin(1.0, count, 0.0)?;
        let op = SpectralOperator::new(grid);
        let nodes = grid.nodes();
        let g: Vec<f64> = nodes.iter().map(|&x| sup.value(x, 0, None) - x).collect();
        let h1: Vec<f64> = nodes.iter().map(|&x| sup.value(x, 1, None)).collect();
        if g.iter().chain(&h1).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("hull table"));
        }
        let mut spectrum = op.forward(&g);
        for (c, k) in spectrum.iter_mut().zip(op.wavenumbers()) {
            *c *= -k.abs();
        }
        let i1 = op.inverse(spectrum.clone());
        Ok(Hull {
            sup,
            tol,
            op,
            nodes,
            g,
            h1,
            i1,
            i1_spectrum: spectrum,
        })
    }

    pub fn params(&self) -> &HullParams<'a> {
        &self.sup.p
    }

    /// Table nodes on `[0, 1)`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `h − x` at the table nodes.
    pub fn offsets(&self) -> &[f64] {
        &self.g
    }

    /// `sup |h − x|` over the table.
    pub fn band(&self) -> f64 {
        self.g.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest `h'` over the table.
    pub fn min_slope(&self) -> f64 {
        self.h1.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `I₁[h]` at arbitrary `x` by trigonometric interpolation.
    pub fn i1_at(&self, x: f64) -> f64 {
        self.op.interpolate(&self.i1_spectrum, x.rem_euclid(1.0))
    }

    /// `NL` at every table node.
    pub fn nl_on_nodes(&self) -> Vec<f64> {
        let p = &self.sup.p;
        let lb = p.lambda_bar();
        (0..self.nodes.len())
            .map(|j| {
                let h = self.g[j] + self.nodes[j];
                lb * self.h1[j] - p.delta * p.l - p.epsilon() * self.i1[j] + p.potential.dw(h)
            })
            .collect()
    }

    /// `sup |NL|` over the table nodes.
    pub fn nl_sup(&self) -> f64 {
        self.nl_on_nodes().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h^(order)(x)` by doubling `n` until successive accelerated sums
    /// differ by less than the tolerance.
    pub fn limit(&self, x: f64, order: usize) -> Result<(f64, u64)> {
        check_x(x)?;
        let mut n = self.sup.p.n.max(1);
        let mut prev = self.sup.accelerated(x, order, n);
        let mut history = vec![];
        loop {
            n *= 2;
            let next = self.sup.accelerated(x, order, n);
            let inc = (next - prev).abs();
            history.push(inc);
            if inc < self.tol {
                return Ok((next, n));
            }
            if n >= N_MAX || !next.is_finite() {
                return Err(Error::NoConvergence {
                    solver: "hull",
                    iterations: history.len(),
                    residual: inc,
                    history,
                });
            }
            prev = next;
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<HullEvaluation> {
        let (h, n0) = self.limit(x, 0)?;
        let (h1, n1) = self.limit(x, 1)?;
        let (h2, n2) = self.limit(x, 2)?;
        let p = &self.sup.p;
        let i1 = self.i1_at(x);
        let lambda_bar = p.lambda_bar();
        let nl = lambda_bar * h1 - p.delta * p.l - p.epsilon() * i1 + p.potential.dw(h);
        let (i0, gamma) = split_lattice(x);
        Ok(HullEvaluation {
            x,
            gamma,
            i0,
            h,
            h1,
            h2,
            i1,
            nl,
            lambda_bar,
            band: self.band(),
            n_used: n0.max(n1).max(n2),
        })
    }

    /// `I₁[h](x)` by the linear-growth quadrature, for cross-checking the
    /// spectral value.
    pub fn i1_by_quadrature(&self, quad: &LevyQuadrature, x: f64) -> Result<f64> {
        quad.apply_linear_growth(|y| self.sup.value(y, 0, None), 1.0, x)
    }
}

pub fn hull_value(params: &HullParams, x: f64, tol: f64) -> Result<HullEvaluation> {
    Hull::new(*params, tol)?.evaluate(x)
}

pub fn nl_residual(params: &HullParams, x: f64) -> Result<f64> {
    Ok(hull_value(params, x, 1e-12)?.nl)
}

/// Partial sums `Σ_{i=−n}^{n} I₁[φ](x_i)` and `Σ_{i=−n}^{n} I₁[ψ](x_i)` with
/// every term computed by the quadrature operator.
pub fn claim5_partial_sums(params: &HullParams, quad: &LevyQuadrature, x: f64, n: u64) -> Result<(f64, f64)> {
    params.validate()?;
    check_x(x)?;
    let eps = params.epsilon();
    let (layer, corr) = (params.layer, params.corrector);
    let (mut s_phi, mut s_psi) = (0.0, 0.0);
    for i in -(n as i64)..=n as i64 {
        let z = (x - i as f64) / eps;
        s_phi += quad.apply(|y| layer.eval(y, 0), layer.eval(z, 1), z)?;
        s_psi += quad.apply(|y| corr.eval(y, 0), corr.eval(z, 1), z)?;
    }
    Ok((s_phi, s_psi))
}

/// `∫_{|y|≥a} [s_n(x + y) − s_n(x)] dy/(πy²)`, split at `n − 1 − |i₀|` and
/// `n + 1 + |i₀|` where `x ± y` leaves the lattice.
pub fn far_field_contribution(params: &HullParams, x: f64, a: f64, n: u64) -> Result<f64> {
    params.validate()?;
    check_x(x)?;
    if !(a >= 1.0) {
        return Err(Error::invalid(format!("a must be at least 1, got {a}")));
    }
    let (i0, _) = split_lattice(x);
    let i0 = i0.unsigned_abs() as f64;
    let nf = n as f64;
    if !(nf > i0 + 1.0 + a) {
        return Err(Error::invalid(format!(
            "n = {n} too small for a = {a} at x = {x}; need n > |i0| + 1 + a"
        )));
    }
    let sup = Superposition::new(*params);
    let eps = sup.eps;
    let s = |y: f64| sup.value(y, 0, Some(n));
    let sx = s(x);
    let pair = |y: f64| s(x + y) + s(x - y) - 2.0 * sx;

    let (gx, gw) = gauss_legendre(8);
    let panel = |lo: f64, hi: f64| {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        gx.iter()
            .zip(&gw)
            .map(|(t, w)| {
                let y = mid + half * t;
                w * pair(y) / (y * y)
            })
            .sum::<f64>()
            * half
    };
    let uniform = |lo: f64, hi: f64| {
        if hi <= lo {
            return 0.0;
        }
        let k = ((hi - lo) / (0.5 * eps)).ceil().max(1.0) as usize;
        let w = (hi - lo) / k as f64;
        (0..k).map(|j| panel(lo + j as f64 * w, lo + (j + 1) as f64 * w)).sum()
    };

    let y1 = nf - 1.0 - i0;
    let y2 = nf + 1.0 + i0;
    let mut acc = uniform(a, y1) + uniform(y1, y2);
    // Outside the lattice the sum saturates; panels grow with the distance.
    let y_far = y2 * 1e6;
    let mut lo = y2;
    let mut width = 0.5 * eps;
    while lo < y_far {
        let hi = (lo + width).min(y_far);
        acc += panel(lo, hi);
        lo = hi;
        width = (width * 1.25).min(0.25 * lo);
    }
    // Beyond y_far both ends are flat: s(±∞) = δL/α + n + 1 and δL/α − n.
    let flat = 2.0 * params.shift() + 1.0 - 2.0 * sx;
    acc += flat / y_far;
    Ok(acc / PI)
}

/// `lim_n` of [`far_field_contribution`] by doubling `n` from `n0` with a
/// first-order extrapolation, until successive extrapolants agree to `tol`.
/// Returns the limit and the sequence of raw values.
pub fn far_field_limit(params: &HullParams, x: f64, a: f64, n0: u64, tol: f64) -> Result<(f64, Vec<f64>)> {
    let mut n = n0;
    let mut raw = vec![far_field_contribution(params, x, a, n)?];
    let mut prev_extrap = f64::NAN;
    for _ in 0..8 {
        n *= 2;
        raw.push(far_field_contribution(params, x, a, n)?);
        let k = raw.len();
        let extrap = 2.0 * raw[k - 1] - raw[k - 2];
        if (extrap - prev_extrap).abs() < tol {
            return Ok((extrap, raw));
        }
        prev_extrap = extrap;
    }
    Err(Error::NoConvergence {
        solver: "far-field integral",
        iterations: raw.len(),
        residual: (raw[raw.len() - 1] - raw[raw.len() - 2]).abs(),
        history: raw,
    })
}
