//! Misfit potentials.
//!
//! A potential is a 1-periodic function `W` vanishing on the integers,
//! positive elsewhere, with `W''(0) > 0`. Derivatives up to fourth order are
//! supplied analytically by the evaluator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Evaluator = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// Highest derivative order an evaluator must provide.
pub const MAX_ORDER: usize = 4;

#[derive(Clone)]
pub struct PotentialSpec {
    name: String,
    alpha: f64,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl PotentialSpec {
    /// Wraps an arbitrary evaluator. `alpha` is the claimed value of `W''(0)`;
    /// use [`validate_potential`] to check it.
    pub fn new<F>(name: impl Into<String>, alpha: f64, eval: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        PotentialSpec {
            name: name.into(),
            alpha,
            eval: Arc::new(eval),
        }
    }

    /// Builds a potential from a finite trigonometric series
    /// `W(v) = c + Σ a_k cos(2πkv) + b_k sin(2πkv)`.
    pub fn trig_series(name: impl Into<String>, constant: f64, terms: Vec<TrigTerm>) -> Self {
        let series = TrigSeries { constant, terms };
        let alpha = series.eval(0.0, 2);
        PotentialSpec::new(name, alpha, move |v, k| series.eval(v, k))
    }

    /// `W(v) = (1 − cos 2πv)/(4π²)`, with `α = 1`. Its layer solution is
    /// `1/2 + arctan(x)/π`.
    pub fn standard() -> Self {
        let c = 1.0 / (4.0 * PI * PI);
        PotentialSpec::trig_series(
            "standard",
            c,
            vec![TrigTerm {
                k: 1,
                cos: -c,
                sin: 0.0,
            }],
        )
    }

    /// `W(v) = (1 − cos 2πv)(1 + κ sin 2πv)/(4π²)` for `|κ| < 1`.
    ///
    /// Admissible, `α = 1`, and `W'''(0) = 6πκ`, so the layer loses its
    /// point symmetry and the corrector is nonzero.
    pub fn skewed(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "skewed potential needs |kappa| < 1, got {kappa}"
            )));
        }
        let c = 1.0 / (4.0 * PI * PI);
        Ok(PotentialSpec::trig_series(
            format!("skewed({kappa})"),
            c,
            vec![
                TrigTerm {
                    k: 1,
                    cos: -c,
                    sin: kappa * c,
                },
                TrigTerm {
                    k: 2,
                    cos: 0.0,
                    sin: -0.5 * kappa * c,
                },
            ],
        ))
    }

    /// `W ≡ 0`. Not admissible; only used to smoke-test the cell evolution,
    /// where it reduces the dynamics to the linear equation.
    pub fn flat() -> Self {
        PotentialSpec::new("flat", 0.0, |_, _| 0.0)
    }

    /// Resolves a label such as `standard` or `skewed(0.3)`.
    pub fn from_label(label: &str) -> Result<Self> {
        let label = label.trim();
        if label == "standard" {
            return Ok(Self::standard());
        }
        if label == "flat" {
            return Ok(Self::flat());
        }
        if let Some(rest) = label.strip_prefix("skewed") {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .unwrap_or("0.3");
            let kappa: f64 = inner
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad skewed parameter `{inner}`")))?;
            return Self::skewed(kappa);
        }
        Err(Error::invalid(format!("unknown potential `{label}`")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Evaluates `W^(order)(v)` for `order` in `0..=4`.
    #[inline]
    pub fn eval(&self, v: f64, order: usize) -> f64 {
        debug_assert!(order <= MAX_ORDER);
        (self.eval)(v, order)
    }

    #[inline]
    pub fn w(&self, v: f64) -> f64 {
        self.eval(v, 0)
    }

    #[inline]
    pub fn dw(&self, v: f64) -> f64 {
        self.eval(v, 1)
    }

    #[inline]
    pub fn d2w(&self, v: f64) -> f64 {
        self.eval(v, 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Debug, Clone)]
struct TrigSeries {
    constant: f64,
    terms: Vec<TrigTerm>,
}

impl TrigSeries {
    fn eval(&self, v: f64, order: usize) -> f64 {
        let mut acc = if order == 0 { self.constant } else { 0.0 };
        for t in &self.terms {
            let w = 2.0 * PI * f64::from(t.k);
            let (s, c) = (w * v).sin_cos();
            // d^n/dv^n of (a cos + b sin) cycles through four phases.
            let scale = w.powi(order as i32);
            let (ca, cb) = match order % 4 {
                0 => (t.cos * c, t.sin * s),
                1 => (-t.cos * s, t.sin * c),
                2 => (-t.cos * c, -t.sin * s),
                _ => (t.cos * s, -t.sin * c),
            };
            acc += scale * (ca + cb);
        }
        acc
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PotentialReport {
    /// `max |W^(k)(v+1) − W^(k)(v)|` over the grid and `k ∈ 0..=4`, each order
    /// scaled by `max(1, sup |W^(k)|)` on the grid.
    pub periodicity_defect: f64,
    /// Non-integer grid points where `W(v) ≤ 0`.
    pub positivity_violations: Vec<f64>,
    /// Integers inside the grid range where `W(m) ≠ 0`, with the value found.
    pub integer_violations: Vec<(i64, f64)>,
    /// `(claimed, evaluated)` when `alpha` disagrees with `W''(0)` or is not positive.
    pub alpha_mismatch: Option<(f64, f64)>,
}

impl PotentialReport {
    pub const PERIODICITY_TOL: f64 = 1e-12;

    pub fn is_admissible(&self) -> bool {
        self.periodicity_defect <= Self::PERIODICITY_TOL
            && self.positivity_violations.is_empty()
            && self.integer_violations.is_empty()
            && self.alpha_mismatch.is_none()
    }
}

/// Checks the admissibility conditions on a sample grid.
pub fn validate_potential(spec: &PotentialSpec, grid: &[f64]) -> Result<PotentialReport> {
    if grid.is_empty() {
        return Err(Error::invalid("validation grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("potential validation grid"));
    }

    // Periodicity defects are measured relative to the size of each derivative.
    let mut scale = [1.0f64; MAX_ORDER + 1];
    for &v in grid {
        for (k, s) in scale.iter_mut().enumerate() {
            *s = s.max(spec.eval(v, k).abs());
        }
    }

    let mut report = PotentialReport::default();
    for &v in grid {
        for (k, s) in scale.iter().enumerate() {
            let d = (spec.eval(v + 1.0, k) - spec.eval(v, k)).abs() / s;
            if !(d <= report.periodicity_defect) {
                report.periodicity_defect = d;
            }
        }
        if (v - v.round()).abs() > 1e-9 && !(spec.w(v) > 0.0) {
            report.positivity_violations.push(v);
        }
    }

    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min).ceil() as i64;
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max).floor() as i64;
    for m in lo..=hi {
        let w = spec.w(m as f64);
        if w.abs() > 1e-12 {
            report.integer_violations.push((m, w));
        }
    }

    let actual = spec.d2w(0.0);
    let scale = actual.abs().max(1.0);
    if !(spec.alpha > 0.0) || (spec.alpha - actual).abs() > 1e-10 * scale {
        report.alpha_mismatch = Some((spec.alpha, actual));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn standard_values() {
        let w = PotentialSpec::standard();
        assert_eq!(w.eval(0.0, 0), 0.0);
        assert!((w.eval(0.5, 0) - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((w.eval(0.0, 2) - 1.0).abs() < 1e-15);
        assert_eq!(w.alpha(), 1.0);
    }

    #[test]
    fn standard_is_admissible() {
        let report = validate_potential(&PotentialSpec::standard(), &grid(1000, -2.0, 2.0)).unwrap();
        assert!(report.is_admissible(), "{report:?}");
    }

    #[test]
    fn skewed_is_admissible() {
        let w = PotentialSpec::skewed(0.4).unwrap();
        let report = validate_potential(&w, &grid(1001, -2.0, 2.0)).unwrap();
        assert!(report.is_admissible(), "{report:?}");
        assert!((w.alpha() - 1.0).abs() < 1e-14);
        assert!((w.eval(0.0, 3) - 6.0 * PI * 0.4).abs() < 1e-12);
    }

    #[test]
    fn injected_offset_is_flagged() {
        let base = PotentialSpec::standard();
        let bad = PotentialSpec::new("offset", 1.0, move |v, k| {
            base.eval(v, k) + if k == 0 { 0.1 } else { 0.0 }
        });
        let report = validate_potential(&bad, &grid(101, -1.0, 1.0)).unwrap();
        assert!(!report.integer_violations.is_empty());
        assert!(report.integer_violations.iter().any(|&(m, _)| m == 0));
    }

    #[test]
    fn alpha_mismatch_is_flagged() {
        let base = PotentialSpec::standard();
        let bad = PotentialSpec::new("liar", 2.0, move |v, k| base.eval(v, k));
        let report = validate_potential(&bad, &[0.25]).unwrap();
        assert_eq!(report.alpha_mismatch, Some((2.0, 1.0)));
    }

    #[test]
    fn flat_is_not_admissible() {
        let report = validate_potential(&PotentialSpec::flat(), &[0.3]).unwrap();
        assert!(!report.is_admissible());
    }

    #[test]
    fn rejects_bad_grids() {
        let w = PotentialSpec::standard();
        assert!(validate_potential(&w, &[]).is_err());
        assert!(validate_potential(&w, &[0.1, f64::NAN]).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(PotentialSpec::from_label("standard").unwrap().name(), "standard");
        let s = PotentialSpec::from_label("skewed(0.25)").unwrap();
        assert!((s.eval(0.0, 3) - 6.0 * PI * 0.25).abs() < 1e-12);
        assert!(PotentialSpec::from_label("skewed(1.5)").is_err());
        assert!(PotentialSpec::from_label("quartic").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for w in [PotentialSpec::standard(), PotentialSpec::skewed(0.5).unwrap()] {
            for &v in &[-0.7, 0.13, 0.5, 0.91] {
                for k in 0..MAX_ORDER {
                    let mut errs = Vec::new();
                    for h in [1e-3, 5e-4] {
                        let fd = (w.eval(v + h, k) - w.eval(v - h, k)) / (2.0 * h);
                        errs.push((fd - w.eval(v, k + 1)).abs());
                    }
                    // O(h²): halving h quarters the error (up to round-off).
                    assert!(errs[1] < errs[0] / 3.0 || errs[1] < 1e-9, "{k} {v} {errs:?}");
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn periodic_in_every_order(v in -50.0f64..50.0, kappa in -0.9f64..0.9) {
            let w = PotentialSpec::skewed(kappa).unwrap();
            for k in 0..=MAX_ORDER {
                let scale = (2.0 * PI).powi(k as i32).max(1.0);
                proptest::prop_assert!((w.eval(v + 1.0, k) - w.eval(v, k)).abs() <= 1e-12 * scale);
            }
        }
    }
}
