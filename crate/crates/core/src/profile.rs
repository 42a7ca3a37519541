//! Tabulated one-dimensional profiles with algebraic far fields.
//!
//! Inside `[−X, X]` a profile is a piecewise quintic Hermite interpolant of
//! its samples; outside it follows a power series in `1/y`, optionally plus a unit
//! jump at the origin (the Heaviside part of a transition layer).

/// Highest power of `1/y` kept in a far-field model.
pub const FAR_POWERS: usize = 12;

/// Far-field model `Σ_{p=1}^{FAR_POWERS} c_p y^{−p}` on one side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FarField {
    /// `coeffs[p]` multiplies `y^{−p}`; index 0 is unused.
    pub coeffs: [f64; FAR_POWERS + 1],
}

impl FarField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Coefficients of the `order`-th derivative, re-indexed by power.
    pub fn derivative(&self, order: usize) -> FarField {
        let mut out = FarField::zero();
        for p in 1..=FAR_POWERS {
            let c = self.coeffs[p];
            if c == 0.0 {
                continue;
            }
            let q = p + order;
            if q > FAR_POWERS {
                continue;
            }
            // d^m/dy^m y^{−p} = (−1)^m p (p+1) … (p+m−1) y^{−p−m}
            let mut factor = 1.0;
            for j in 0..order {
                factor *= -((p + j) as f64);
            }
            out.coeffs[q] += c * factor;
        }
        out
    }

    pub fn eval(&self, y: f64, order: usize) -> f64 {
        let d = if order == 0 { *self } else { self.derivative(order) };
        let inv = 1.0 / y;
        // Horner in 1/y.
        let mut acc = 0.0;
        for p in (1..=FAR_POWERS).rev() {
            acc = (acc + d.coeffs[p]) * inv;
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> FarField {
        let mut out = *self;
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    /// `self` plus multiples of `y^{−2}`, `y^{−3}`, `y^{−4}` chosen so the
    /// model and its first two derivatives take the given values at `y`.
    pub fn matched(&self, y: f64, target: [f64; 3]) -> FarField {
        let r = [
            target[0] - self.eval(y, 0),
            y * (target[1] - self.eval(y, 1)),
            y * y * (target[2] - self.eval(y, 2)),
        ];
        // Unknowns u_p = c_p y^{−p}; rows are the value, y·d/dy and y²·d²/dy².
        let m = [[1.0, 1.0, 1.0], [-2.0, -3.0, -4.0], [6.0, 12.0, 20.0]];
        let det3 = |a: [[f64; 3]; 3]| {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let det = det3(m);
        let mut out = *self;
        for k in 0..3 {
            let mut mk = m;
            for (row, rv) in mk.iter_mut().zip(r) {
                row[k] = rv;
            }
            out.coeffs[k + 2] += det3(mk) / det * y.powi(k as i32 + 2);
        }
        out
    }

    pub fn add(&self, other: &FarField) -> FarField {
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += b;
        }
        out
    }
}

/// Samples of a profile and its first four derivatives on a uniform
/// symmetric grid, with far-field models on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    start: f64,
    spacing: f64,
    /// `samples[m][j]` is the m-th derivative at node j.
    samples: [Vec<f64>; 5],
    left: FarField,
    right: FarField,
    jump: f64,
}

impl TabulatedProfile {
    /// `samples` holds the profile and its first four derivatives at
    /// `start + j·spacing`. `jump` is added on `y ≥ 0` by the far-field
    /// evaluation (1 for a transition layer, 0 for a decaying profile).
    pub fn new(
        start: f64,
        spacing: f64,
        samples: [Vec<f64>; 5],
        left: FarField,
        right: FarField,
        jump: f64,
    ) -> Self {
        debug_assert!(samples.iter().all(|s| s.len() == samples[0].len()));
        TabulatedProfile {
            start,
            spacing,
            samples,
            left,
            right,
            jump,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.spacing * (self.samples[0].len() - 1) as f64
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn jump(&self) -> f64 {
        self.jump
    }

    pub fn far_left(&self) -> &FarField {
        &self.left
    }

    pub fn far_right(&self) -> &FarField {
        &self.right
    }

    pub fn samples(&self, order: usize) -> &[f64] {
        &self.samples[order]
    }

    /// Value of the `order`-th derivative (`order ≤ 3`).
    pub fn eval(&self, y: f64, order: usize) -> f64 {
        debug_assert!(order <= 3);
        if y < self.start {
            return self.left.eval(y, order);
        }
        if y > self.end() {
            let base = self.right.eval(y, order);
            return if order == 0 { base + self.jump } else { base };
        }
        self.hermite(y, order)
    }

    /// Same as [`eval`](Self::eval) with the unit jump removed on `y ≥ 0`.
    pub fn eval_reduced(&self, y: f64, order: usize) -> f64 {
        let v = self.eval(y, order);
        if order == 0 && y >= 0.0 {
            v - self.jump
        } else {
            v
        }
    }

    /// Quintic Hermite for `order ≤ 2` (uses two further derivative
    /// samples), cubic for `order = 3`.
    fn hermite(&self, y: f64, order: usize) -> f64 {
        let n = self.samples[0].len();
        let s = (y - self.start) / self.spacing;
        let j = (s.floor().max(0.0) as usize).min(n - 2);
        let t = s - j as f64;
        let f = &self.samples[order];
        let d = &self.samples[order + 1];
        let h = self.spacing;
        let t2 = t * t;
        let t3 = t2 * t;
        if order + 2 < self.samples.len() {
            let dd = &self.samples[order + 2];
            let t4 = t3 * t;
            let t5 = t4 * t;
            let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
            let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
            let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
            let g0 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
            let g1 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
            let g2 = 0.5 * (t3 - 2.0 * t4 + t5);
            return h0 * f[j]
                + h1 * h * d[j]
                + h2 * h * h * dd[j]
                + g0 * f[j + 1]
                + g1 * h * d[j + 1]
                + g2 * h * h * dd[j + 1];
        }
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * f[j] + h10 * h * d[j] + h01 * f[j + 1] + h11 * h * d[j + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_field_derivatives() {
        let mut f = FarField::zero();
        f.coeffs[1] = 2.0;
        f.coeffs[3] = -0.5;
        let y: f64 = 7.0;
        let exact = |y: f64| 2.0 / y - 0.5 / y.powi(3);
        let d1 = -2.0 / (y * y) + 1.5 / y.powi(4);
        let d2 = 4.0 / y.powi(3) - 6.0 / y.powi(5);
        assert!((f.eval(y, 0) - exact(y)).abs() < 1e-15);
        assert!((f.eval(y, 1) - d1).abs() < 1e-15);
        assert!((f.eval(y, 2) - d2).abs() < 1e-15);
    }

    #[test]
    fn matched_far_field_hits_targets() {
        let mut base = FarField::zero();
        base.coeffs[1] = -0.3;
        for y in [-25.0, 30.0] {
            let target = [0.01, -2e-4, 3e-5];
            let f = base.matched(y, target);
            for (m, t) in target.iter().enumerate() {
                assert!((f.eval(y, m) - t).abs() < 1e-15, "y {y} order {m}");
            }
            assert_eq!(f.coeffs[1], -0.3);
        }
    }

    #[test]
    fn hermite_is_exact_on_quintics() {
        let p = |x: f64| 0.1 * x.powi(5) - 0.3 * x * x * x - x + 2.0;
        let derivs = [
            |x: f64| 0.5 * x.powi(4) - 0.9 * x * x - 1.0,
            |x: f64| 2.0 * x.powi(3) - 1.8 * x,
            |x: f64| 6.0 * x * x - 1.8,
            |x: f64| 12.0 * x,
        ];
        let xs: Vec<f64> = (0..=20).map(|j| -2.0 + 0.2 * j as f64).collect();
        let col = |f: &dyn Fn(f64) -> f64| xs.iter().map(|&x| f(x)).collect::<Vec<_>>();
        let samples = [col(&p), col(&derivs[0]), col(&derivs[1]), col(&derivs[2]), col(&derivs[3])];
        let prof = TabulatedProfile::new(-2.0, 0.2, samples, FarField::zero(), FarField::zero(), 0.0);
        for &y in &[-1.93, -0.5, 0.0, 0.77, 1.999, 2.0] {
            assert!((prof.eval(y, 0) - p(y)).abs() < 1e-12);
            assert!((prof.eval(y, 1) - derivs[0](y)).abs() < 1e-12);
            // order 2 uses samples up to the fourth derivative: exact on quintics
            assert!((prof.eval(y, 2) - derivs[1](y)).abs() < 1e-11);
        }
    }

    #[test]
    fn jump_applies_on_the_right() {
        let samples = [vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]];
        let mut right = FarField::zero();
        right.coeffs[1] = -1.0;
        let prof = TabulatedProfile::new(-1.0, 1.0, samples, FarField::zero(), right, 1.0);
        assert!((prof.eval(4.0, 0) - 0.75).abs() < 1e-15);
        assert!((prof.eval_reduced(4.0, 0) + 0.25).abs() < 1e-15);
        assert_eq!(prof.eval(-4.0, 0), 0.0);
    }
}
