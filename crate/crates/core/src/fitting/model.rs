//! Weak-drive steady state and the closed-form transmission.
//!
//! In the single-excitation manifold the driven amplitudes obey
//! `(H_nH - D) psi = -(0, 0, eps)`. Writing the resolvent through the
//! eigenvalues gives the cavity amplitude
//!
//! ```text
//! delta_ss = -N(D) / (kappa p(D)) * eps
//! N(D) = D kappa (i kappa - D + l1 + l2 + l3) - i l1 l2 l3
//! p(D) = (D - l1)(D - l2)(D - l3)
//! ```
//!
//! and `T = |delta_ss kappa / eps|^2 = |N / p|^2`. The expression is symmetric
//! in the eigenvalues. When the eigenvalues come from physical parameters the
//! Vieta identities reduce the numerator to `kappa (W^2/4 - D^2 - i D gamma)`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{build_hnh, Detuning, SystemParams};
use crate::scalar::{i_unit, re, Real};
use crate::spectral::{eigenvalues, ComplexTriple};

/// Steady amplitudes of `|g2,0>`, `|e,0>`, `|g1,1>` under weak driving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SteadyAmplitudes<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub delta: Complex<T>,
}

impl<T: Real> SteadyAmplitudes<T> {
    /// Largest amplitude relative to `eps / kappa`; should be `O(1)` or less
    /// for the single-excitation picture to hold.
    pub fn relative_magnitude(&self, params: &SystemParams<T>) -> T {
        let unit = params.epsilon / params.kappa;
        [self.alpha, self.beta, self.delta]
            .iter()
            .fold(T::zero(), |m, z| m.max(z.norm()))
            / unit
    }
}

/// Solves `(H_nH - D) psi = -(0, 0, eps)`.
pub fn steady_amplitudes<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
) -> Result<SteadyAmplitudes<T>> {
    if params.omega == T::zero() {
        // |g2,0> is decoupled and undriven; solving only the coupled block
        // also avoids the singular row at D = 0.
        let i = i_unit::<T>();
        let d = re(delta.value());
        let a11 = -i * params.gamma() - d;
        let a22 = -i * params.kappa - d;
        let g = re(params.g);
        let det = a11 * a22 - g * g;
        if det.is_zero() {
            return Err(Error::Singular(
                "steady amplitudes: resonant decoupled block".into(),
            ));
        }
        let eps = re(params.epsilon);
        return Ok(SteadyAmplitudes {
            alpha: Complex::zero(),
            beta: g * eps / det,
            delta: -a11 * eps / det,
        });
    }
    let h = build_hnh(params)?;
    let shifted = h - ComplexMatrix::identity(3).scale(re(delta.value()));
    let z = Complex::zero();
    let psi = shifted
        .solve(&[z, z, re(-params.epsilon)])
        .map_err(|e| Error::Singular(format!("steady amplitudes: {e}")))?;
    Ok(SteadyAmplitudes {
        alpha: psi[0],
        beta: psi[1],
        delta: psi[2],
    })
}

/// Closed-form cavity amplitude `-N/(kappa p) eps` for a given triple.
pub fn steady_cavity_amplitude<T: Real>(
    delta: T,
    triple: &ComplexTriple<T>,
    kappa: T,
    epsilon: T,
) -> Complex<T> {
    -transmission_amplitude(delta, triple, kappa) * (epsilon / kappa)
}

fn numerator<T: Real>(d: Complex<T>, triple: &ComplexTriple<T>, kappa: T) -> Complex<T> {
    let i = i_unit::<T>();
    d * kappa * (i * kappa - d + triple.sum()) - i * triple.product()
}

/// `N(D) / p(D)`, whose squared modulus is the transmission.
///
/// At a real eigenvalue `D = l_k` where the numerator also vanishes (for
/// example the null root of the decoupled cavity at `D = 0`) the common
/// factor `D - l_k` is divided out; a genuine pole yields infinity.
pub fn transmission_amplitude<T: Real>(
    delta: T,
    triple: &ComplexTriple<T>,
    kappa: T,
) -> Complex<T> {
    let d = re(delta);
    let l = triple.values();
    let p = (d - l[0]) * (d - l[1]) * (d - l[2]);
    let n = numerator(d, triple, kappa);
    if !p.is_zero() {
        return n / p;
    }
    let k = (0..3)
        .min_by(|&a, &b| {
            (d - l[a])
                .norm()
                .partial_cmp(&(d - l[b]).norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let scale = l.iter().fold(T::one().max(kappa), |m, z| m.max(z.norm()));
    if n.norm() > T::lit(64.0) * T::eps() * scale * scale * scale {
        return Complex::new(T::infinity(), T::zero());
    }
    // N(D) = a D^2 + b D + c; divide by (D - r): quotient a D + (b + a r).
    let a = re(-kappa);
    let b = i_unit::<T>() * kappa * kappa + triple.sum() * kappa;
    let q = a * d + (b + a * l[k]);
    let rest: Complex<T> = (0..3).filter(|&j| j != k).map(|j| d - l[j]).product();
    q / rest
}

/// Cavity transmission `|N/p|^2` for a triple of eigenvalues.
pub fn transmission_model<T: Real>(delta: Detuning<T>, triple: &ComplexTriple<T>, kappa: T) -> T {
    transmission_amplitude(delta.value(), triple, kappa).norm_sqr()
}

/// Numerator reduced by the Vieta identities: `kappa (W^2/4 - D^2 - i D gamma)`.
pub fn simplified_numerator<T: Real>(params: &SystemParams<T>, delta: T) -> Complex<T> {
    let quarter_w2 = params.omega * params.omega * T::lit(0.25);
    Complex::new(quarter_w2 - delta * delta, -delta * params.gamma()) * params.kappa
}

/// Transmission at physical parameters, evaluated both through the general
/// numerator and the simplified one; they must agree to `1e-9` relative.
pub fn transmission_from_params<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
) -> Result<T> {
    params.validate()?;
    let triple = eigenvalues(params);
    let general = transmission_model(delta, &triple, params.kappa);
    let d = re(delta.value());
    let l = triple.values();
    let p = (d - l[0]) * (d - l[1]) * (d - l[2]);
    if p.is_zero() {
        return Ok(general);
    }
    let simple = (simplified_numerator(params, delta.value()) / p).norm_sqr();
    let tol = T::lit(1e-9) * general.max(simple).max(T::lit(1e-300));
    if (general - simple).abs() > tol {
        return Err(Error::Singular(format!(
            "general ({general}) and simplified ({simple}) transmission disagree"
        )));
    }
    Ok(general)
}

/// `dF/dl_k` for `F = N/p`, where `F` is the value at the same point.
pub(crate) fn amplitude_gradient<T: Real>(
    delta: T,
    triple_values: &[Complex<T>; 3],
    kappa: T,
    f: Complex<T>,
) -> [Complex<T>; 3] {
    let d = re(delta);
    let l = triple_values;
    let p = (d - l[0]) * (d - l[1]) * (d - l[2]);
    let i = i_unit::<T>();
    let mut out = [Complex::zero(); 3];
    for k in 0..3 {
        let others: Complex<T> = (0..3).filter(|&j| j != k).map(|j| l[j]).product();
        let dn = d * kappa - i * others;
        out[k] = dn / p + f / (d - l[k]);
    }
    out
}
