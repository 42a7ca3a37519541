//! Lattice sums of `1/(x − i)^k` and their closed-form limits.
//!
//! The hull ansatz is a superposition of shifted profiles whose far fields
//! decay like powers of `1/(x − i)`. Sums of those powers over index ranges
//! are expressed through the digamma function (`k = 1`) and the Hurwitz zeta
//! function (`k ≥ 2`), which is what makes the infinite superpositions
//! computable to round-off.

use std::f64::consts::PI;

use crate::error::{Error, Result};

// B_{2j}/(2j)! for j = 1..=6.
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

const ASYMPTOTIC_START: f64 = 12.0;

/// Digamma function for `x > 0`.
pub fn digamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma argument must be positive, got {x}");
    let mut acc = 0.0;
    while x < ASYMPTOTIC_START {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // ψ(x) ~ ln x − 1/(2x) − Σ B_{2j}/(2j x^{2j})
    let b = [1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32760.0];
    let mut tail = 0.0;
    let mut p = inv2;
    for c in b {
        tail += c * p;
        p *= inv2;
    }
    acc + x.ln() - 0.5 / x - tail
}

/// Hurwitz zeta `ζ(s, a) = Σ_{j≥0} (a + j)^{−s}` for integer `s ≥ 2`, `a > 0`.
pub fn hurwitz_zeta(s: u32, a: f64) -> f64 {
    debug_assert!(s >= 2 && a > 0.0);
    let s_i = s as i32;
    let mut acc = 0.0;
    let mut x = a;
    while x < ASYMPTOTIC_START {
        acc += x.powi(-s_i);
        x += 1.0;
    }
    // Euler–Maclaurin from x onwards.
    let sf = f64::from(s);
    acc += x.powi(1 - s_i) / (sf - 1.0) + 0.5 * x.powi(-s_i);
    let mut rising = sf; // s (s+1) ... (s+2j−2)
    let mut pow = x.powi(-s_i - 1);
    let inv2 = 1.0 / (x * x);
    for (j, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        acc += c * rising * pow;
        let m = 2.0 * j as f64;
        rising *= (sf + m + 1.0) * (sf + m + 2.0);
        pow *= inv2;
    }
    acc
}

/// `Σ_{j=0}^{count−1} (start + j)^{−k}` for `start > 0`; `count = None` means
/// the infinite sum (only for `k ≥ 2`).
pub fn power_sum(k: u32, start: f64, count: Option<u64>) -> f64 {
    debug_assert!(start > 0.0);
    match (k, count) {
        (_, Some(0)) => 0.0,
        (1, Some(n)) => digamma(start + n as f64) - digamma(start),
        (1, None) => f64::INFINITY,
        (_, None) => hurwitz_zeta(k, start),
        (_, Some(n)) if n <= 16 => (0..n).map(|j| (start + j as f64).powi(-(k as i32))).sum(),
        (_, Some(n)) => hurwitz_zeta(k, start) - hurwitz_zeta(k, start + n as f64),
    }
}

/// Splits `x = i₀ + γ` with `i₀ ∈ ℤ` and `γ ∈ (−1/2, 1/2]`.
pub fn split_lattice(x: f64) -> (i64, f64) {
    let i0 = (x - 0.5).ceil();
    (i0 as i64, x - i0)
}

/// Partial sums and limits of the three reference lattice sums at
/// `x = i₀ + γ` (taken with `i₀ = 0`, the limits depend on `γ` only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSums {
    /// `Σ_{i=−n, i≠0}^{n} 1/(γ − i)`.
    pub s1: f64,
    /// `Σ_{i=−n}^{−1} 1/(γ − i)²`.
    pub s2: f64,
    /// `Σ_{i=1}^{n} 1/(γ − i)²`.
    pub s3: f64,
    /// `−2γ Σ_{i≥1} 1/(i² − γ²)`.
    pub s1_limit: f64,
    /// `Σ_{i≥1} 1/(i + γ)²`.
    pub s2_limit: f64,
    /// `Σ_{i≥1} 1/(i − γ)²`.
    pub s3_limit: f64,
}

pub fn claim1_reference_sums(gamma: f64, n: u64) -> Result<ReferenceSums> {
    if !(gamma > -0.5 && gamma <= 0.5) {
        return Err(Error::invalid(format!("gamma must lie in (-1/2, 1/2], got {gamma}")));
    }
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    // Sum small terms first.
    for i in (1..=n).rev() {
        let fi = i as f64;
        s1 += 1.0 / (gamma - fi) + 1.0 / (gamma + fi);
        s2 += 1.0 / ((gamma + fi) * (gamma + fi));
        s3 += 1.0 / ((fi - gamma) * (fi - gamma));
    }
    Ok(ReferenceSums {
        s1,
        s2,
        s3,
        s1_limit: digamma(1.0 - gamma) - digamma(1.0 + gamma),
        s2_limit: hurwitz_zeta(2, 1.0 + gamma),
        s3_limit: hurwitz_zeta(2, 1.0 - gamma),
    })
}

/// `Σ_{i∈ℤ} 1/(x − i)` in the symmetric sense, `π cot(πx)`.
pub fn cot_sum(x: f64) -> f64 {
    PI / (PI * x).tan()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!((digamma(1.5) - digamma(0.5) - 2.0).abs() < 1e-14);
        assert!((digamma(100.0) - (100f64.ln() - 0.005 - 1.0 / 120000.0)).abs() < 1e-10);
    }

    #[test]
    fn zeta_values() {
        assert!((hurwitz_zeta(2, 1.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!((hurwitz_zeta(4, 1.0) - PI.powi(4) / 90.0).abs() < 1e-15);
        assert!((hurwitz_zeta(2, 0.5) - PI * PI / 2.0).abs() < 1e-14);
        // ζ(3, 1) = Apéry's constant
        assert!((hurwitz_zeta(3, 1.0) - 1.202_056_903_159_594_3).abs() < 1e-15);
    }

    #[test]
    fn split_convention() {
        assert_eq!(split_lattice(0.5), (0, 0.5));
        assert_eq!(split_lattice(-0.5), (-1, 0.5));
        assert_eq!(split_lattice(2.0), (2, 0.0));
        let (i0, g) = split_lattice(-3.3);
        assert_eq!(i0, -3);
        assert!((g + 0.3).abs() < 1e-14);
    }

    #[test]
    fn reference_limits() {
        let s = claim1_reference_sums(0.5, 1).unwrap();
        assert!((s.s1_limit + 2.0).abs() < 1e-14);
        let s = claim1_reference_sums(0.0, 1).unwrap();
        assert_eq!(s.s1_limit, 0.0);
        assert!((s.s2_limit - PI * PI / 6.0).abs() < 1e-15);
        assert!((s.s3_limit - PI * PI / 6.0).abs() < 1e-15);
        assert!(claim1_reference_sums(-0.5, 3).is_err());
        assert!(claim1_reference_sums(0.2, 0).is_err());
    }

    #[test]
    fn cot_sum_matches_reference() {
        let g: f64 = 0.3;
        let s = claim1_reference_sums(g, 1).unwrap();
        assert!((cot_sum(g) - 1.0 / g - s.s1_limit).abs() < 1e-13);
    }

    proptest::proptest! {
        #[test]
        fn finite_power_sums_match_direct(k in 1u32..5, start in 0.05f64..30.0, n in 1u64..60) {
            let direct: f64 = (0..n).map(|j| (start + j as f64).powi(-(k as i32))).sum();
            let fast = power_sum(k, start, Some(n));
            proptest::prop_assert!((direct - fast).abs() <= 1e-13 * direct.abs().max(1.0));
        }
    }
}
