use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr, ComplexMatrix};
use crate::model::SystemParams;
use crate::scalar::{im, re, Real};
use crate::spectral::cubic::ComplexTriple;

/// Location of the third-order exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Ep3Point<T> {
    /// Triple eigenvalue `-i(gamma + kappa)/3`.
    pub lambda_ep3: Complex<T>,
    pub omega_ep3: T,
    pub g_ep3: T,
}

/// Closed-form EP3 for total atomic decay `gamma` and cavity decay `kappa`.
///
/// Matching `det(x - H_nH)` to `(x - l)^3` term by term gives
///
/// ```text
/// l     = -i s/3,                      s = gamma + kappa
/// W     = (2 s / 3) sqrt(s / (3 kappa))
/// g^2   = s^2/3 - s^3/(27 kappa) - gamma kappa
/// ```
pub fn ep3_analytic<T: Real>(gamma: T, kappa: T) -> Result<Ep3Point<T>> {
    if !(kappa > T::zero()) || !(gamma >= T::zero()) || !gamma.is_finite() || !kappa.is_finite() {
        return Err(Error::InvalidParams(format!(
            "ep3 needs kappa > 0 and gamma >= 0 (got gamma={gamma}, kappa={kappa})"
        )));
    }
    let l = T::lit;
    let s = gamma + kappa;
    let radicand = s * s / l(3.0) - s * s * s / (l(27.0) * kappa) - gamma * kappa;
    if !(radicand > T::zero()) {
        return Err(Error::NoEp3 {
            radicand: radicand.as_f64(),
        });
    }
    Ok(Ep3Point {
        lambda_ep3: im(-s / l(3.0)),
        omega_ep3: l(2.0) * s / l(3.0) * (s / (l(3.0) * kappa)).sqrt(),
        g_ep3: radicand.sqrt(),
    })
}

/// Unnormalized analytic eigenvectors `(W/2 (l+ik)/l, l+ik, g)` in the basis
/// `(|g2,0>, |e,0>, |g1,1>)`. Normalization constants are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct EigvecTriple<T> {
    pub eigenvalues: ComplexTriple<T>,
    /// `vectors[i]` belongs to `eigenvalues.values()[i]`.
    pub vectors: [[Complex<T>; 3]; 3],
}

/// Analytic eigenvectors for the given eigenvalues.
///
/// Fails when an eigenvalue is exactly zero (the first component is then
/// singular), which happens at `W = 0`.
pub fn eigvec_analytic<T: Real>(
    params: &SystemParams<T>,
    triple: &ComplexTriple<T>,
) -> Result<EigvecTriple<T>> {
    params.validate()?;
    let half_omega = re(params.omega * T::lit(0.5));
    let ik = im(params.kappa);
    let scale = triple
        .values()
        .iter()
        .fold(T::one(), |m, z| m.max(z.norm()));
    let zero_tol = T::lit(64.0) * T::eps() * scale;
    let mut vectors = [[Complex::new(T::zero(), T::zero()); 3]; 3];
    for (i, &lambda) in triple.values().iter().enumerate() {
        if lambda.norm() <= zero_tol {
            return Err(Error::SingularComponent { index: i });
        }
        let shifted = lambda + ik;
        vectors[i] = [half_omega * shifted / lambda, shifted, re(params.g)];
    }
    Ok(EigvecTriple {
        eigenvalues: *triple,
        vectors,
    })
}

impl<T: Real> EigvecTriple<T> {
    /// `||H v_i - l_i v_i|| / ||v_i||` for each eigenpair.
    pub fn residuals(&self, h: &ComplexMatrix<T>) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for (i, v) in self.vectors.iter().enumerate() {
            let lambda = self.eigenvalues.values()[i];
            let hv = h.mat_vec(v);
            let r: Vec<_> = hv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
            out[i] = (norm_sqr(&r) / norm_sqr(v)).sqrt();
        }
        out
    }

    /// `|<v_i|v_j>| / (|v_i| |v_j|)` for the pairs (0,1), (0,2), (1,2).
    pub fn pairwise_overlaps(&self) -> [T; 3] {
        let v = &self.vectors;
        let ov = |a: &[Complex<T>; 3], b: &[Complex<T>; 3]| {
            inner(a, b).norm() / (norm_sqr(a) * norm_sqr(b)).sqrt()
        };
        [ov(&v[0], &v[1]), ov(&v[0], &v[2]), ov(&v[1], &v[2])]
    }

    /// Matrix `Xi` whose columns are the eigenvectors.
    pub fn decomposition_matrix(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_fn(3, |row, col| self.vectors[col][row])
    }

    /// `Xi Lambda Xi^-1`, or `None` when `Xi` is too ill-conditioned for the
    /// product to mean anything (near an exceptional point).
    pub fn reconstruct(&self) -> Option<ComplexMatrix<T>> {
        let xi = self.decomposition_matrix();
        let inv = match xi.inverse() {
            Ok(inv) => inv,
            Err(_) => {
                log::warn!("eigenvector matrix is singular; skipping reconstruction");
                return None;
            }
        };
        let cond = xi.norm_one() * inv.norm_one();
        if !(cond < T::lit(1e6)) {
            log::warn!("eigenvector matrix condition {cond:e}; skipping reconstruction");
            return None;
        }
        let lambda = ComplexMatrix::from_fn(3, |i, j| {
            if i == j {
                self.eigenvalues.values()[i]
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        Some(&(&xi * &lambda) * &inv)
    }
}
