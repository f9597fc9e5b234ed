//! Levenberg-Marquardt least squares with Nielsen's damping update.

use crate::error::Result;
use crate::linalg::solve_real;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions<T> {
    pub max_iter: usize,
    /// Stop when `|J^T r|_inf <= tol_grad * sqrt(max diag J^T J) * |r|`,
    /// i.e. the residual is orthogonal to the model's tangent space.
    pub tol_grad: T,
    /// Stop when `|h| <= tol_step * (|x| + tol_step)`.
    pub tol_step: T,
    /// Initial damping relative to the largest diagonal of `J^T J`.
    pub tau: T,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol_grad: T::lit(1e-12),
            tol_step: T::lit(1e-13),
            tau: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome<T> {
    pub x: Vec<T>,
    /// Sum of squared residuals at `x`.
    pub sse: T,
    /// `J^T J` at `x`, row-major.
    pub normal_matrix: Vec<T>,
    pub n_residuals: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Residuals and, on request, the row-major Jacobian (`m x n`).
pub trait LeastSquares<T> {
    fn n_params(&self) -> usize;
    fn residuals(&self, x: &[T], jacobian: Option<&mut Vec<T>>) -> Vec<T>;
}

fn normal_equations<T: Real>(j: &[T], r: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let m = r.len();
    let mut a = vec![T::zero(); n * n];
    let mut g = vec![T::zero(); n];
    for i in 0..m {
        let row = &j[i * n..(i + 1) * n];
        for p in 0..n {
            g[p] += row[p] * r[i];
            for q in p..n {
                a[p * n + q] += row[p] * row[q];
            }
        }
    }
    for p in 0..n {
        for q in 0..p {
            a[p * n + q] = a[q * n + p];
        }
    }
    (a, g)
}

fn sq_norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum()
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub fn levenberg_marquardt<T: Real, P: LeastSquares<T>>(
    problem: &P,
    x0: &[T],
    opts: &LmOptions<T>,
) -> Result<LmOutcome<T>> {
    let n = problem.n_params();
    let mut x = x0.to_vec();
    let mut jac = Vec::new();
    let mut r = problem.residuals(&x, Some(&mut jac));
    let mut sse = sq_norm(&r);
    let (mut a, mut g) = normal_equations(&jac, &r, n);
    let max_diag = |a: &[T]| (0..n).fold(T::zero(), |m, i| m.max(a[i * n + i]));
    let mut mu = opts.tau * max_diag(&a).max(T::min_positive_value());
    let mut nu = T::lit(2.0);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if !sse.is_finite() {
            break;
        }
        if sse == T::zero() || inf_norm(&g) <= opts.tol_grad * max_diag(&a).sqrt() * sse.sqrt() {
            converged = true;
            break;
        }
        iterations += 1;
        let mut damped = a.clone();
        for i in 0..n {
            damped[i * n + i] += mu;
        }
        let neg_g: Vec<T> = g.iter().map(|v| -*v).collect();
        let h = match solve_real(&damped, &neg_g) {
            Ok(h) => h,
            Err(_) => {
                mu *= nu;
                nu *= T::lit(2.0);
                continue;
            }
        };
        let xnorm = sq_norm(&x).sqrt();
        if sq_norm(&h).sqrt() <= opts.tol_step * (xnorm + opts.tol_step) {
            converged = true;
            break;
        }
        let x_new: Vec<T> = x.iter().zip(&h).map(|(a, b)| *a + *b).collect();
        let r_new = problem.residuals(&x_new, None);
        let sse_new = sq_norm(&r_new);
        // Predicted decrease of sse: h^T (mu h - g).
        let predicted: T = h
            .iter()
            .zip(&g)
            .map(|(hi, gi)| *hi * (mu * *hi - *gi))
            .sum();
        let rho = (sse - sse_new) / predicted;
        if sse_new.is_finite() && rho > T::zero() {
            x = x_new;
            r = problem.residuals(&x, Some(&mut jac));
            sse = sq_norm(&r);
            let ng = normal_equations(&jac, &r, n);
            a = ng.0;
            g = ng.1;
            let t = T::lit(2.0) * rho - T::one();
            mu *= (T::one() / T::lit(3.0)).max(T::one() - t * t * t);
            nu = T::lit(2.0);
        } else {
            mu *= nu;
            nu *= T::lit(2.0);
            if !(nu < T::lit(1e30)) {
                // No step length reduces the cost: a minimum at working precision.
                converged = true;
                break;
            }
        }
    }
    Ok(LmOutcome {
        x,
        sse,
        normal_matrix: a,
        n_residuals: r.len(),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = p0 exp(p1 t)
    struct Exp {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares<f64> for Exp {
        fn n_params(&self) -> usize {
            2
        }
        fn residuals(&self, x: &[f64], jacobian: Option<&mut Vec<f64>>) -> Vec<f64> {
            let r = self
                .t
                .iter()
                .zip(&self.y)
                .map(|(t, y)| x[0] * (x[1] * t).exp() - y)
                .collect();
            if let Some(j) = jacobian {
                j.clear();
                for t in &self.t {
                    let e = (x[1] * t).exp();
                    j.extend([e, x[0] * t * e]);
                }
            }
            r
        }
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.0 * (-1.5 * t).exp()).collect();
        let out = levenberg_marquardt(&Exp { t, y }, &[1.0, 0.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-10 && (out.x[1] + 1.5).abs() < 1e-10);
    }

    #[test]
    fn rosenbrock_valley() {
        struct Rosen;
        impl LeastSquares<f64> for Rosen {
            fn n_params(&self) -> usize {
                2
            }
            fn residuals(&self, x: &[f64], jacobian: Option<&mut Vec<f64>>) -> Vec<f64> {
                if let Some(j) = jacobian {
                    *j = vec![-20.0 * x[0], 10.0, -1.0, 0.0];
                }
                vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]
            }
        }
        let out = levenberg_marquardt(&Rosen, &[-1.2, 1.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }
}
