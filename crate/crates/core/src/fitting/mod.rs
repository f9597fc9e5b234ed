//! Eigenvalue extraction from transmission spectra.
//!
//! The closed-form weak-drive transmission depends on the system only
//! through the three eigenvalues and `kappa`, so fitting it to a spectrum
//! with `kappa` held fixed recovers the spectrum of the non-Hermitian
//! Hamiltonian. The six real parameters are `(Re l_k, Im l_k)`.

pub mod lm;
pub mod model;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Provenance, SpectrumTrace};
use crate::error::{Error, Result};
use crate::linalg::invert_real;
use crate::model::{Detuning, SystemParams};
use crate::scalar::Real;
use crate::spectral::{best_permutation, eigenvalues, ComplexTriple};

pub use lm::{levenberg_marquardt, LeastSquares, LmOptions, LmOutcome};
pub use model::{
    simplified_numerator, steady_amplitudes, steady_cavity_amplitude, transmission_amplitude,
    transmission_from_params, transmission_model, SteadyAmplitudes,
};

/// Fewest points accepted by [`fit_spectrum`].
pub const MIN_FIT_POINTS: usize = 30;

/// Condition number of `J^T W J` above which uncertainties are flagged.
pub const ILL_CONDITIONED: f64 = 1e10;

/// Where the informed start comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitInit<T: Real> {
    Triple(ComplexTriple<T>),
    /// Rough physical parameters, converted with the cubic solver.
    RoughParams(SystemParams<T>),
}

impl<T: Real> FitInit<T> {
    pub fn triple(&self) -> ComplexTriple<T> {
        match self {
            FitInit::Triple(t) => *t,
            FitInit::RoughParams(p) => eigenvalues(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    /// Informed start plus `starts - 1` perturbed ones.
    pub starts: usize,
    /// Relative size of the start perturbations.
    pub perturbation: T,
    pub seed: u64,
    /// Stochastic traces: stderr floor as a fraction of the median stderr.
    pub stderr_floor: T,
    pub lm: LmOptions<T>,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            starts: 7,
            perturbation: T::lit(0.1),
            seed: 0,
            stderr_floor: T::lit(0.1),
            lm: LmOptions::default(),
        }
    }
}

/// One-sigma uncertainties from the curvature of the cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Uncertainties<T> {
    /// `[sigma(Re l_k), sigma(Im l_k)]` in canonical eigenvalue order;
    /// absent when the normal matrix is singular.
    pub sigma: Option<[[T; 2]; 3]>,
    /// One-norm condition number of `J^T W J`, when finite.
    pub condition_number: Option<T>,
    /// Set near exceptional points, where the cost is flat along the
    /// coalescence directions and `sigma` is unreliable.
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FitResult<T> {
    pub eigenvalues: ComplexTriple<T>,
    /// Root-mean-square weighted residual.
    #[serde(rename = "residual")]
    pub residual_norm: T,
    pub converged: bool,
    pub iterations: usize,
    pub uncertainties: Uncertainties<T>,
    /// Index of the winning start (0 is the informed one).
    pub start: usize,
}

impl<T: Real> FitResult<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Weighted transmission residuals over the six eigenvalue components.
struct SpectrumProblem<'a, T> {
    deltas: &'a [T],
    targets: &'a [T],
    inv_sigma: Vec<T>,
    kappa: T,
}

fn to_triple<T: Real>(x: &[T]) -> [Complex<T>; 3] {
    [
        Complex::new(x[0], x[1]),
        Complex::new(x[2], x[3]),
        Complex::new(x[4], x[5]),
    ]
}

fn to_params<T: Real>(v: &[Complex<T>; 3]) -> Vec<T> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

impl<T: Real> LeastSquares<T> for SpectrumProblem<'_, T> {
    fn n_params(&self) -> usize {
        6
    }

    fn residuals(&self, x: &[T], jacobian: Option<&mut Vec<T>>) -> Vec<T> {
        // The raw (unsorted) order keeps the parameterization smooth.
        let raw = to_triple(x);
        // The model is symmetric in the eigenvalues, so sorting is harmless.
        let triple = ComplexTriple::new(raw);
        let two = T::lit(2.0);
        let mut r = Vec::with_capacity(self.deltas.len());
        let mut jac = jacobian;
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
        }
        for (i, &d) in self.deltas.iter().enumerate() {
            let f = model::transmission_amplitude(d, &triple, self.kappa);
            let w = self.inv_sigma[i];
            r.push((f.norm_sqr() - self.targets[i]) * w);
            if let Some(j) = jac.as_deref_mut() {
                let grad = model::amplitude_gradient(d, &raw, self.kappa, f);
                for dk in grad {
                    let z = f.conj() * dk;
                    j.push(two * z.re * w);
                    j.push(-two * z.im * w);
                }
            }
        }
        r
    }
}

/// Fits the three eigenvalues to a transmission trace with `kappa` fixed.
pub fn fit_spectrum<T: Real>(
    trace: &SpectrumTrace<T>,
    kappa: T,
    init: &FitInit<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    trace.validate()?;
    if trace.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidConfig(format!(
            "a fit needs at least {MIN_FIT_POINTS} points, trace has {}",
            trace.len()
        )));
    }
    if !(kappa > T::zero()) || !kappa.is_finite() {
        return Err(Error::InvalidParams("kappa must be positive".into()));
    }
    if opts.starts < 1 {
        return Err(Error::InvalidConfig(
            "at least one fit start is needed".into(),
        ));
    }
    let problem = SpectrumProblem {
        deltas: &trace.deltas,
        targets: &trace.transmission,
        inv_sigma: inverse_sigma(trace, opts.stderr_floor),
        kappa,
    };
    let starts = start_points(&init.triple(), opts);
    let outcomes: Vec<Result<LmOutcome<T>>> = starts
        .par_iter()
        .map(|x0| levenberg_marquardt(&problem, x0, &opts.lm))
        .collect();

    let mut best: Option<(usize, LmOutcome<T>)> = None;
    let mut diagnostics = Vec::new();
    for (k, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) if o.converged && o.sse.is_finite() => {
                if best.as_ref().is_none_or(|(_, b)| o.sse < b.sse) {
                    best = Some((k, o));
                }
            }
            Ok(o) => diagnostics.push(format!(
                "start {k}: not converged after {} iterations, sse {}",
                o.iterations, o.sse
            )),
            Err(e) => diagnostics.push(format!("start {k}: {e}")),
        }
    }
    let (start, out) = best.ok_or_else(|| Error::FitFailure(diagnostics.join("; ")))?;
    Ok(assemble(start, &out))
}

fn inverse_sigma<T: Real>(trace: &SpectrumTrace<T>, floor_fraction: T) -> Vec<T> {
    if trace.provenance != Provenance::Trajectories {
        return vec![T::one(); trace.len()];
    }
    let mut sorted = trace.stderr.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median = sorted[sorted.len() / 2];
    if !(median > T::zero()) {
        return vec![T::one(); trace.len()];
    }
    let floor = floor_fraction * median;
    trace
        .stderr
        .iter()
        .map(|s| T::one() / s.max(floor))
        .collect()
}

fn start_points<T: Real>(triple: &ComplexTriple<T>, opts: &FitOptions<T>) -> Vec<Vec<T>> {
    let v = triple.values();
    let largest = v.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let mut out = vec![to_params(v)];
    for s in 1..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s as u64);
        let mut u = || T::lit(2.0 * rng.random::<f64>() - 1.0);
        let perturbed: Vec<T> = v
            .iter()
            .flat_map(|z| {
                let scale =
                    opts.perturbation * z.norm().max(T::lit(0.1) * largest).max(T::lit(1e-3));
                [z.re + scale * u(), z.im + scale * u()]
            })
            .collect();
        out.push(perturbed);
    }
    out
}

fn assemble<T: Real>(start: usize, out: &LmOutcome<T>) -> FitResult<T> {
    let raw = to_triple(&out.x);
    let eigenvalues = ComplexTriple::new(raw);
    // Canonical slot c holds raw[order[c]].
    let mut order = [0usize; 3];
    let mut used = [false; 3];
    for (c, z) in eigenvalues.values().iter().enumerate() {
        let k = (0..3).find(|&k| !used[k] && raw[k] == *z).unwrap_or(c);
        used[k] = true;
        order[c] = k;
    }
    let m = out.n_residuals;
    let dof = m.saturating_sub(6).max(1);
    let scale = out.sse / T::lit(dof as f64);
    let a = &out.normal_matrix;
    let (sigma, condition_number) = match invert_real(a, 6) {
        Ok(inv) => {
            let norm1 = |mat: &[T]| {
                (0..6)
                    .map(|j| (0..6).map(|i| mat[i * 6 + j].abs()).sum::<T>())
                    .fold(T::zero(), T::max)
            };
            let cond = norm1(a) * norm1(&inv);
            let mut sig = [[T::zero(); 2]; 3];
            for (row, k) in sig.iter_mut().zip(order) {
                for (part, s) in row.iter_mut().enumerate() {
                    let p = 2 * k + part;
                    *s = (inv[p * 6 + p].abs() * scale).sqrt();
                }
            }
            (Some(sig), cond.is_finite().then_some(cond))
        }
        Err(_) => (None, None),
    };
    let ill_conditioned = condition_number.is_none_or(|c| c > T::lit(ILL_CONDITIONED));
    FitResult {
        eigenvalues,
        residual_norm: (out.sse / T::lit(m.max(1) as f64)).sqrt(),
        converged: out.converged,
        iterations: out.iterations,
        uncertainties: Uncertainties {
            sigma,
            condition_number,
            ill_conditioned,
        },
        start,
    }
}

/// Noiseless model trace for a triple.
pub fn model_trace<T: Real>(
    triple: &ComplexTriple<T>,
    kappa: T,
    deltas: &[T],
) -> Result<SpectrumTrace<T>> {
    let t = deltas
        .iter()
        .map(|&d| Ok(transmission_model(Detuning::new(d)?, triple, kappa)))
        .collect::<Result<Vec<T>>>()?;
    SpectrumTrace::deterministic(deltas.to_vec(), t)
}

/// Fitted eigenvalues matched to the numerical ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EigenvalueComparison<T> {
    /// Cubic-solver eigenvalues in canonical order.
    pub numerical: [Complex<T>; 3],
    /// Fitted eigenvalue paired with each numerical one.
    pub fitted: [Complex<T>; 3],
    /// `fitted - numerical`.
    pub deviation: [Complex<T>; 3],
}

impl<T: Real> EigenvalueComparison<T> {
    /// Largest absolute Re or Im deviation.
    pub fn max_component_deviation(&self) -> T {
        self.deviation
            .iter()
            .fold(T::zero(), |m, d| m.max(d.re.abs()).max(d.im.abs()))
    }

    /// The six `|Re|`, `|Im|` deviations.
    pub fn component_deviations(&self) -> [T; 6] {
        let d = &self.deviation;
        [
            d[0].re.abs(),
            d[0].im.abs(),
            d[1].re.abs(),
            d[1].im.abs(),
            d[2].re.abs(),
            d[2].im.abs(),
        ]
    }
}

/// Pairs fitted and numerical eigenvalues by minimal total distance.
pub fn eigenvalue_comparison<T: Real>(
    fit: &FitResult<T>,
    params: &SystemParams<T>,
) -> EigenvalueComparison<T> {
    compare_triples(&fit.eigenvalues, &eigenvalues(params))
}

pub fn compare_triples<T: Real>(
    fitted: &ComplexTriple<T>,
    numerical: &ComplexTriple<T>,
) -> EigenvalueComparison<T> {
    let num = *numerical.values();
    let fit = fitted.values();
    let (p, _) = best_permutation(&num, fit, |a, b| (a - b).norm());
    let matched = [fit[p[0]], fit[p[1]], fit[p[2]]];
    EigenvalueComparison {
        numerical: num,
        fitted: matched,
        deviation: [
            matched[0] - num[0],
            matched[1] - num[1],
            matched[2] - num[2],
        ],
    }
}
