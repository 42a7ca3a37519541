//! The order-one Lévy operator `I₁ = −(−Δ)^{1/2}` with measure
//! `μ(dz) = dz/(πz²)`.
//!
//! Two independent realizations are provided: a spectral multiplier `−|k|`
//! on periodic grids, and a pointwise singular-integral quadrature on
//! symmetric, log-graded Gauss–Legendre panels. The quadrature also covers
//! functions of linear growth, for which the linear part cancels pairwise.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid with nodes `x_j = origin + j·spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    period: f64,
    count: usize,
    origin: f64,
}

impl Grid1D {
    pub fn new(period: f64, count: usize) -> Result<Self> {
        Self::with_origin(period, count, 0.0)
    }

    /// Same as [`Grid1D::new`] but with nodes starting at `origin`.
    pub fn with_origin(period: f64, count: usize, origin: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::invalid(format!("grid period must be positive, got {period}")));
        }
        if count < 4 {
            return Err(Error::invalid(format!("grid needs at least 4 nodes, got {count}")));
        }
        if !origin.is_finite() {
            return Err(Error::non_finite("grid origin"));
        }
        Ok(Grid1D {
            period,
            count,
            origin,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.count as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.node(j)).collect()
    }

    /// Signed angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.count as i64;
        (0..n)
            .map(|m| {
                let mm = if m <= n / 2 { m } else { m - n };
                2.0 * PI * mm as f64 / self.period
            })
            .collect()
    }
}

/// `slope·x + (periodic interpolant of values)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub slope: f64,
}

impl GridField {
    pub fn new(grid: Grid1D, values: Vec<f64>, slope: f64) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::invalid(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.count()
            )));
        }
        if !slope.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("grid field"));
        }
        Ok(GridField { grid, values, slope })
    }

    pub fn from_fn(grid: Grid1D, slope: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values, slope)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// FFT plans and wavenumbers for one grid, reused across many applications.
#[derive(Clone)]
pub struct SpectralOperator {
    grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for SpectralOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOperator").field("grid", &self.grid).finish()
    }
}

impl SpectralOperator {
    pub fn new(grid: Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        SpectralOperator {
            forward: planner.plan_fft_forward(grid.count()),
            inverse: planner.plan_fft_inverse(grid.count()),
            k: grid.wavenumbers(),
            grid,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Largest |k| on the grid.
    pub fn max_symbol(&self) -> f64 {
        PI * self.grid.count() as f64 / self.grid.period()
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform (normalized), keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.grid.count() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies the transform by `symbol(k)` and transforms back.
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, &k) in spec.iter_mut().zip(&self.k) {
            *c *= symbol(k);
        }
        self.inverse(spec)
    }

    /// `I₁` on periodic samples: symbol `−|k|`.
    pub fn half_laplacian(&self, values: &[f64]) -> Vec<f64> {
        self.apply_symbol(values, |k| Complex64::new(-k.abs(), 0.0))
    }

    /// Spectral derivative of the given order; the Nyquist mode is dropped
    /// for odd orders.
    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        let n = self.grid.count();
        let mut spec = self.forward(values);
        for (m, (c, &k)) in spec.iter_mut().zip(&self.k).enumerate() {
            if order % 2 == 1 && n % 2 == 0 && m == n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, k).powu(order);
            }
        }
        self.inverse(spec)
    }

    /// Evaluates the trigonometric interpolant of a transform at an arbitrary
    /// point, treating the Nyquist mode symmetrically.
    pub fn interpolate(&self, spectrum: &[Complex64], x: f64) -> f64 {
        let n = self.grid.count();
        let t = x - self.grid.origin();
        let mut acc = spectrum[0].re;
        for m in 1..n.div_ceil(2) {
            let k = self.k[m];
            let e = Complex64::from_polar(1.0, k * t);
            acc += 2.0 * (spectrum[m] * e).re;
        }
        if n % 2 == 0 {
            let k = self.k[n / 2];
            acc += spectrum[n / 2].re * (k * t).cos();
        }
        acc / n as f64
    }
}

/// Applies `I₁` to a field by its spectral symbol. The linear part of the
/// field contributes nothing (the measure is even), so the result has slope 0.
pub fn half_laplacian_spectral(field: &GridField) -> Result<GridField> {
    if field.values.iter().any(|v| !v.is_finite()) || !field.slope.is_finite() {
        return Err(Error::non_finite("half_laplacian_spectral input"));
    }
    if field.grid.count() < 4 {
        return Err(Error::invalid("grid needs at least 4 nodes"));
    }
    let op = SpectralOperator::new(field.grid);
    GridField::new(field.grid, op.half_laplacian(&field.values), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyQuadratureConfig {
    /// Compensation radius `r`.
    pub inner_radius: f64,
    /// Truncation radius `R`.
    pub outer_cutoff: f64,
    /// Quadrature nodes per decade of `|z|` (8 Gauss nodes per panel).
    pub nodes_per_decade: usize,
    /// Upper bound on panel length, so oscillatory or sharp features far from
    /// `x` are still resolved.
    pub max_panel_width: f64,
}

impl Default for LevyQuadratureConfig {
    fn default() -> Self {
        LevyQuadratureConfig {
            inner_radius: 0.25,
            outer_cutoff: 1e4,
            nodes_per_decade: 32,
            max_panel_width: 0.5,
        }
    }
}

impl LevyQuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let r = self.inner_radius;
        let big_r = self.outer_cutoff;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(format!("inner_radius must be positive, got {r}")));
        }
        if !(r < 1.0 && 1.0 <= big_r && big_r.is_finite()) {
            return Err(Error::invalid(format!(
                "need inner_radius < 1 <= outer_cutoff, got r = {r}, R = {big_r}"
            )));
        }
        if self.nodes_per_decade < 8 {
            return Err(Error::invalid(format!(
                "nodes_per_decade must be at least 8, got {}",
                self.nodes_per_decade
            )));
        }
        if !(self.max_panel_width.is_finite() && self.max_panel_width > 0.0) {
            return Err(Error::invalid("max_panel_width must be positive"));
        }
        Ok(())
    }
}

const GAUSS_ORDER: usize = 8;
/// Fraction of `r` below which the inner region is a single panel.
const INNER_FLOOR: f64 = 1e-2;

fn gauss_legendre_8() -> &'static ([f64; GAUSS_ORDER], [f64; GAUSS_ORDER]) {
    static RULE: OnceLock<([f64; GAUSS_ORDER], [f64; GAUSS_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(GAUSS_ORDER);
        let mut xs = [0.0; GAUSS_ORDER];
        let mut ws = [0.0; GAUSS_ORDER];
        xs.copy_from_slice(&x);
        ws.copy_from_slice(&w);
        (xs, ws)
    })
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Precomputed one-sided nodes `z > 0` and weights for the two regions.
#[derive(Debug, Clone)]
pub struct LevyQuadrature {
    cfg: LevyQuadratureConfig,
    inner: Vec<(f64, f64)>,
    outer: Vec<(f64, f64)>,
    /// Outer nodes with `z ≥ R/10`, used for the far-field mean.
    far_start: usize,
}

impl LevyQuadrature {
    pub fn new(cfg: LevyQuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let ratio = 10f64.powf(GAUSS_ORDER as f64 / cfg.nodes_per_decade as f64);
        let r = cfg.inner_radius;

        let mut inner_panels = Vec::new();
        let mut hi = r;
        while hi > r * INNER_FLOOR {
            let lo = (hi / ratio).max(hi - cfg.max_panel_width);
            inner_panels.push((lo, hi));
            hi = lo;
        }
        inner_panels.push((0.0, hi));

        let mut outer_panels = Vec::new();
        let mut lo = r;
        while lo < cfg.outer_cutoff {
            let hi = (lo * ratio).min(lo + cfg.max_panel_width).min(cfg.outer_cutoff);
            outer_panels.push((lo, hi));
            lo = hi;
        }

        let inner = expand_panels(&inner_panels);
        let outer = expand_panels(&outer_panels);
        let far_start = outer
            .iter()
            .position(|&(z, _)| z >= cfg.outer_cutoff / 10.0)
            .unwrap_or(outer.len());
        Ok(LevyQuadrature {
            cfg,
            inner,
            outer,
            far_start,
        })
    }

    pub fn config(&self) -> &LevyQuadratureConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        2 * (self.inner.len() + self.outer.len())
    }

    /// `I₁[f](x)` for bounded `f`, given `f'(x)`.
    pub fn apply(&self, f: impl Fn(f64) -> f64, fprime_at_x: f64, x: f64) -> Result<f64> {
        let fx = checked(f(x), x)?;
        let mut inner = 0.0;
        for &(z, w) in &self.inner {
            let plus = checked(f(x + z), x + z)? - fx - fprime_at_x * z;
            let minus = checked(f(x - z), x - z)? - fx + fprime_at_x * z;
            inner += w * (plus + minus) / (z * z);
        }
        let outer = self.outer_part(&f, x, fx, 0.0)?;
        Ok((inner + outer) / PI)
    }

    /// `I₁[f](x)` for `f` with `f − slope·id` bounded; symmetric node pairs
    /// cancel the linear part.
    pub fn apply_linear_growth(&self, f: impl Fn(f64) -> f64, slope: f64, x: f64) -> Result<f64> {
        let fx = checked(f(x), x)?;
        let mut inner = 0.0;
        for &(z, w) in &self.inner {
            let pair = (checked(f(x + z), x + z)? - fx) + (checked(f(x - z), x - z)? - fx);
            inner += w * pair / (z * z);
        }
        let outer = self.outer_part(&f, x, fx, slope)?;
        Ok((inner + outer) / PI)
    }

    /// Outer integral over `r < |z| ≤ R` plus the far-field closure
    /// `(m₊ + m₋ − 2b(x))/R`, where `b = f − slope·id` and `m±` are the
    /// `z⁻²`-weighted means of `b(x ± z)` over the last decade.
    fn outer_part(&self, f: &impl Fn(f64) -> f64, x: f64, fx: f64, slope: f64) -> Result<f64> {
        let mut acc = 0.0;
        let (mut mean_plus, mut mean_minus, mut weight) = (0.0, 0.0, 0.0);
        for (idx, &(z, w)) in self.outer.iter().enumerate() {
            let fp = checked(f(x + z), x + z)?;
            let fm = checked(f(x - z), x - z)?;
            let wz = w / (z * z);
            acc += wz * ((fp - fx) + (fm - fx));
            if idx >= self.far_start {
                mean_plus += wz * (fp - slope * (x + z));
                mean_minus += wz * (fm - slope * (x - z));
                weight += wz;
            }
        }
        if weight > 0.0 {
            let bx = fx - slope * x;
            acc += (mean_plus / weight + mean_minus / weight - 2.0 * bx) / self.cfg.outer_cutoff;
        }
        Ok(acc)
    }
}

fn expand_panels(panels: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre_8();
    let mut out = Vec::with_capacity(panels.len() * GAUSS_ORDER);
    for &(lo, hi) in panels {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in gx.iter().zip(gw) {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

fn checked(v: f64, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::non_finite(format!("evaluator at {at}")))
    }
}

/// Two-region quadrature of `I₁[f](x)` for bounded, twice differentiable `f`.
pub fn half_laplacian_quadrature(
    f: impl Fn(f64) -> f64,
    fprime_at_x: f64,
    x: f64,
    cfg: &LevyQuadratureConfig,
) -> Result<f64> {
    LevyQuadrature::new(*cfg)?.apply(f, fprime_at_x, x)
}

/// Symmetric principal-value quadrature of `I₁[f](x)` for `f` of linear growth.
pub fn half_laplacian_linear_growth(
    f: impl Fn(f64) -> f64,
    slope: f64,
    x: f64,
    cfg: &LevyQuadratureConfig,
) -> Result<f64> {
    LevyQuadrature::new(*cfg)?.apply_linear_growth(f, slope, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i1_arctan(x: f64) -> f64 {
        -x / (1.0 + x * x)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}: {q} vs {exact}");
        }
    }

    #[test]
    fn spectral_constant_is_zero() {
        let grid = Grid1D::new(3.0, 64).unwrap();
        let out = half_laplacian_spectral(&GridField::from_fn(grid, 0.0, |_| 2.5).unwrap()).unwrap();
        assert!(out.values.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn spectral_cosine_eigenfunction() {
        let period = 2.0;
        let grid = Grid1D::new(period, 32).unwrap();
        let k = 2.0 * PI / period;
        let field = GridField::from_fn(grid, 0.0, |x| (k * x).cos()).unwrap();
        let out = half_laplacian_spectral(&field).unwrap();
        for (x, v) in grid.nodes().iter().zip(&out.values) {
            assert!((v + k * (k * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_ignores_linear_part() {
        let grid = Grid1D::new(1.0, 16).unwrap();
        let out = half_laplacian_spectral(&GridField::new(grid, vec![0.0; 16], 3.0).unwrap()).unwrap();
        assert_eq!(out.slope, 0.0);
        assert!(out.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn spectral_rejects_bad_fields() {
        assert!(Grid1D::new(1.0, 3).is_err());
        let grid = Grid1D::new(1.0, 8).unwrap();
        assert!(GridField::new(grid, vec![0.0; 7], 0.0).is_err());
        assert!(GridField::new(grid, vec![f64::NAN; 8], 0.0).is_err());
        let bad = GridField {
            grid,
            values: vec![f64::INFINITY; 8],
            slope: 0.0,
        };
        assert!(half_laplacian_spectral(&bad).is_err());
    }

    #[test]
    fn interpolation_reproduces_trig_polynomials() {
        let grid = Grid1D::with_origin(2.0, 16, -1.0).unwrap();
        let op = SpectralOperator::new(grid);
        let f = |x: f64| (PI * x).sin() + 0.3 * (4.0 * PI * x).cos() + (8.0 * PI * x).cos();
        let spec = op.forward(&grid.nodes().into_iter().map(f).collect::<Vec<_>>());
        for &x in &[-0.77, 0.1, 0.5, 0.93] {
            assert!((op.interpolate(&spec, x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_constant_is_zero() {
        let cfg = LevyQuadratureConfig::default();
        for &x in &[-3.0, 0.0, 1.7] {
            let v = half_laplacian_quadrature(|_| 4.0, 0.0, x, &cfg).unwrap();
            assert!(v.abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn quadrature_arctan() {
        let cfg = LevyQuadratureConfig::default();
        let v = half_laplacian_quadrature(f64::atan, 0.5, 1.0, &cfg).unwrap();
        assert!((v + 0.5).abs() < 1e-4, "{v}");
    }

    #[test]
    fn quadrature_is_independent_of_r() {
        let mut a = LevyQuadratureConfig::default();
        a.inner_radius = 0.1;
        let mut b = a;
        b.inner_radius = 0.5;
        let x = 0.7;
        let fp = 1.0 / (1.0 + x * x);
        let va = half_laplacian_quadrature(f64::atan, fp, x, &a).unwrap();
        let vb = half_laplacian_quadrature(f64::atan, fp, x, &b).unwrap();
        assert!((va - vb).abs() < 1e-8, "{va} {vb}");
    }

    #[test]
    fn linear_growth_examples() {
        let cfg = LevyQuadratureConfig::default();
        let v = half_laplacian_linear_growth(|x| 3.0 * x, 3.0, 0.4, &cfg).unwrap();
        // round-off from |z| up to R
        assert!(v.abs() < 1e-8);
        let f = |x: f64| x + x.atan();
        assert!(half_laplacian_linear_growth(f, 1.0, 0.0, &cfg).unwrap().abs() < 1e-10);
        let v = half_laplacian_linear_growth(f, 1.0, 2.0, &cfg).unwrap();
        assert!((v + 0.4).abs() < 1e-4, "{v}");
    }

    #[test]
    fn quadrature_rejects_bad_config_and_values() {
        let mut cfg = LevyQuadratureConfig::default();
        cfg.inner_radius = -1.0;
        assert!(half_laplacian_quadrature(f64::atan, 1.0, 0.0, &cfg).is_err());
        let mut cfg = LevyQuadratureConfig::default();
        cfg.nodes_per_decade = 4;
        assert!(cfg.validate().is_err());
        let cfg = LevyQuadratureConfig::default();
        let r = half_laplacian_quadrature(|x| if x > 5.0 { f64::NAN } else { 0.0 }, 0.0, 0.0, &cfg);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn quadrature_matches_spectral_on_cosine() {
        let period = 1.5;
        let k = 2.0 * PI / period;
        let cfg = LevyQuadratureConfig::default();
        let quad = LevyQuadrature::new(cfg).unwrap();
        for &x in &[0.0, 0.31, 1.1] {
            let v = quad
                .apply(|y| (k * y).cos(), -k * (k * x).sin(), x)
                .unwrap();
            let exact = -k * (k * x).cos();
            assert!((v - exact).abs() <= 1e-6 * k, "{x}: {v} vs {exact}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn quadrature_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x in -3.0f64..3.0) {
            let cfg = LevyQuadratureConfig { max_panel_width: 5.0, ..Default::default() };
            let quad = LevyQuadrature::new(cfg).unwrap();
            let f = |y: f64| y.atan();
            let g = |y: f64| 1.0 / (1.0 + y * y);
            let fp = 1.0 / (1.0 + x * x);
            let gp = -2.0 * x / (1.0 + x * x).powi(2);
            let lhs = quad.apply(|y| a * f(y) + b * g(y), a * fp + b * gp, x).unwrap();
            let rhs = a * quad.apply(f, fp, x).unwrap() + b * quad.apply(g, gp, x).unwrap();
            proptest::prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn quadrature_is_translation_equivariant(c in -5.0f64..5.0, x in -3.0f64..3.0) {
            let cfg = LevyQuadratureConfig { max_panel_width: 5.0, ..Default::default() };
            let quad = LevyQuadrature::new(cfg).unwrap();
            let shifted = quad.apply(|y| (y - c).atan(), 1.0 / (1.0 + (x - c).powi(2)), x).unwrap();
            proptest::prop_assert!((shifted - i1_arctan(x - c)).abs() < 1e-4);
        }
    }
}
