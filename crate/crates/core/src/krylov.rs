//! Restarted GMRES with right preconditioning, for the matrix-free Jacobians
//! of the layer and corrector problems.

#[derive(Debug, Clone, Copy)]
pub(crate) struct GmresOutcome {
    pub iterations: usize,
    /// Final residual norm relative to `‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` starting from the contents of `x`.
pub(crate) fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }

    let mut total = 0;
    let mut work = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut rel;

    loop {
        // r = b − A x
        apply(x, &mut work);
        let r: Vec<f64> = b.iter().zip(&work).map(|(b, ax)| b - ax).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= rel_tol || total >= max_iter {
            return GmresOutcome {
                iterations: total,
                relative_residual: rel,
                converged: rel <= rel_tol,
            };
        }

        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut k_used = 0;
        for k in 0..m {
            precond(&v[k], &mut z);
            apply(&z, &mut work);
            zs.push(z.clone());
            let mut w = work.clone();
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;

            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];

            total += 1;
            k_used = k + 1;
            rel = g[k + 1].abs() / b_norm;
            if rel <= rel_tol || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&zs) {
            x.iter_mut().zip(zi).for_each(|(xj, zj)| *xj += yi * zj);
        }
        if !rel.is_finite() {
            return GmresOutcome {
                iterations: total,
                relative_residual: rel,
                converged: false,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, -1.0, 3.0]];
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        let out = gmres(
            |v, out| {
                for i in 0..3 {
                    out[i] = (0..3).map(|j| a[i][j] * v[j]).sum();
                }
            },
            |v, out| out.copy_from_slice(v),
            &b,
            &mut x,
            1e-14,
            10,
            50,
        );
        assert!(out.converged);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn restarts_and_preconditions() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[i] = diag[i] * v[i] + if i + 1 < n { 0.1 * v[i + 1] } else { 0.0 };
            }
        };
        let out = gmres(
            apply,
            |v, out| {
                for i in 0..n {
                    out[i] = v[i] / diag[i];
                }
            },
            &b,
            &mut x,
            1e-12,
            5,
            200,
        );
        assert!(out.converged, "{out:?}");
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}
