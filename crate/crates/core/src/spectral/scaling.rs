//! Cube-root splitting of the eigenvalues near the EP3.
//!
//! Along a sweep `g = g_ep3 + x` (or `W = W_ep3 + x`) the eigenvalue
//! differences vanish like `x^(1/3)`. Two fits are run on every
//! non-vanishing component of a difference:
//!
//! * fixed exponent: `a + b x^(1/3)`, weighted by `1/|y|`;
//! * free exponent: `b x^c`, by least squares on `ln|y|` against `ln x`.
//!
//! Both report the RMS relative residual so they can be compared directly.
//! With canonical ordering, `lambda1` and `lambda3` form the `+-Re` pair that
//! is mirrored by `l -> -conj(l)`, so `Im(lambda1 - lambda3)` vanishes
//! identically; `lambda1 - lambda2` carries the imaginary splitting.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_num, parse_num, Table};
use crate::scalar::Real;
use crate::spectral::cubic::{coefficients_from_rates, solve_cubic};
use crate::spectral::ep3::{ep3_analytic, Ep3Point};

/// Components whose peak magnitude is below this fraction of the peak
/// difference are reported as vanishing instead of fitted.
const VANISHING_RTOL: f64 = 1e-9;
pub const SCALING_COLUMNS: [&str; 7] = ["offset", "re1", "im1", "re2", "im2", "re3", "im3"];

/// Two-sided 95% normal quantile for the exponent interval.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepDirection {
    /// `g = g_ep3 + x`, `W = W_ep3`.
    GSweep,
    /// `W = W_ep3 + x`, `g = g_ep3`.
    OmegaSweep,
}

impl std::str::FromStr for SweepDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "g-sweep" => Ok(SweepDirection::GSweep),
            "omega" | "omega-sweep" => Ok(SweepDirection::OmegaSweep),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep direction `{other}`"
            ))),
        }
    }
}

/// `a + b x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PowerLawFit<T> {
    pub a: T,
    pub b: T,
    pub exponent: T,
    /// Approximate 95% interval, only for a fitted exponent.
    pub exponent_ci: Option<(T, T)>,
    /// RMS of `(model - y) / y`.
    pub residual_norm: T,
}

impl<T: Real> PowerLawFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.a + self.b * x.powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ComponentScaling<T> {
    /// e.g. `re(lambda1-lambda3)`.
    pub label: String,
    pub fixed: PowerLawFit<T>,
    pub free: PowerLawFit<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScalingSample<T> {
    pub offset: T,
    /// Canonically ordered eigenvalues at this offset.
    pub eigenvalues: [Complex<T>; 3],
}

impl<T: Real> ScalingSample<T> {
    pub fn diff13(&self) -> Complex<T> {
        self.eigenvalues[0] - self.eigenvalues[2]
    }

    pub fn diff12(&self) -> Complex<T> {
        self.eigenvalues[0] - self.eigenvalues[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScalingFit<T> {
    pub direction: SweepDirection,
    pub gamma: T,
    pub kappa: T,
    pub ep3: Ep3Point<T>,
    pub samples: Vec<ScalingSample<T>>,
    /// Fits of the non-vanishing components, `lambda1-lambda3` first.
    pub components: Vec<ComponentScaling<T>>,
    /// Components that vanish identically and were not fitted.
    pub vanishing: Vec<String>,
    pub warnings: Vec<String>,
}

impl<T: Real> ScalingFit<T> {
    pub fn component(&self, label: &str) -> Option<&ComponentScaling<T>> {
        self.components.iter().find(|c| c.label == label)
    }

    /// Fits of `lambda1 - lambda3`.
    pub fn primary(&self) -> impl Iterator<Item = &ComponentScaling<T>> {
        self.components
            .iter()
            .filter(|c| c.label.ends_with("(lambda1-lambda3)"))
    }
}

/// Writes the sampled eigenvalues, one row per offset.
pub fn write_samples_csv<T: Real, W: Write>(samples: &[ScalingSample<T>], out: W) -> Result<()> {
    let mut t = Table::new(&SCALING_COLUMNS);
    for s in samples {
        let mut row = vec![fmt_num(s.offset)];
        for z in &s.eigenvalues {
            row.push(fmt_num(z.re));
            row.push(fmt_num(z.im));
        }
        t.push(row);
    }
    t.write_to(out)
}

/// Reads samples written by [`write_samples_csv`].
pub fn read_samples_csv<T: Real, R: Read>(input: R) -> Result<Vec<ScalingSample<T>>> {
    let t = Table::read_from(input, &SCALING_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| {
            let v = r.iter().map(|x| parse_num(x)).collect::<Result<Vec<T>>>()?;
            Ok(ScalingSample {
                offset: v[0],
                eigenvalues: [
                    Complex::new(v[1], v[2]),
                    Complex::new(v[3], v[4]),
                    Complex::new(v[5], v[6]),
                ],
            })
        })
        .collect()
}

/// Eigenvalue splitting along one sweep direction through the EP3.
pub fn scaling_analysis<T: Real>(
    gamma: T,
    kappa: T,
    direction: SweepDirection,
    offsets: &[T],
) -> Result<ScalingFit<T>> {
    if offsets.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
        return Err(Error::InvalidConfig(
            "scaling offsets must be strictly positive".into(),
        ));
    }
    let ep3 = ep3_analytic(gamma, kappa)?;
    let warnings = offset_warnings(gamma, offsets);
    for w in &warnings {
        log::warn!("{w}");
    }

    let samples: Vec<ScalingSample<T>> = offsets
        .iter()
        .map(|&x| {
            let (g, w) = match direction {
                SweepDirection::GSweep => (ep3.g_ep3 + x, ep3.omega_ep3),
                SweepDirection::OmegaSweep => (ep3.g_ep3, ep3.omega_ep3 + x),
            };
            let t = solve_cubic(&coefficients_from_rates(g, w, gamma, kappa));
            ScalingSample {
                offset: x,
                eigenvalues: *t.values(),
            }
        })
        .collect();

    let mut components = Vec::new();
    let mut vanishing = Vec::new();
    let diffs: [(&str, Vec<Complex<T>>); 2] = [
        (
            "lambda1-lambda3",
            samples.iter().map(|s| s.diff13()).collect(),
        ),
        (
            "lambda1-lambda2",
            samples.iter().map(|s| s.diff12()).collect(),
        ),
    ];
    for (pair, d) in &diffs {
        let peak = d.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        for (part, values) in [
            ("re", d.iter().map(|z| z.re).collect::<Vec<_>>()),
            ("im", d.iter().map(|z| z.im).collect::<Vec<_>>()),
        ] {
            let label = format!("{part}({pair})");
            let comp_peak = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if comp_peak <= T::lit(VANISHING_RTOL) * peak {
                vanishing.push(label);
                continue;
            }
            components.push(ComponentScaling {
                fixed: fit_fixed_exponent(offsets, &values, T::one() / T::lit(3.0))?,
                free: fit_free_power_law(offsets, &values)?,
                label,
            });
        }
    }

    Ok(ScalingFit {
        direction,
        gamma,
        kappa,
        ep3,
        samples,
        components,
        vanishing,
        warnings,
    })
}

fn offset_warnings<T: Real>(gamma: T, offsets: &[T]) -> Vec<String> {
    let mut out = Vec::new();
    let lo = offsets.iter().copied().fold(T::infinity(), T::min);
    let hi = offsets.iter().copied().fold(T::neg_infinity(), T::max);
    let limit = T::lit(0.1) * gamma;
    if hi > limit * (T::one() + T::lit(1e-9)) {
        out.push(format!(
            "largest offset {hi} exceeds 0.1 gamma = {limit}; higher-order terms bias the exponent"
        ));
    }
    if lo > limit * T::lit(1e-2) * (T::one() + T::lit(1e-9)) {
        out.push(format!(
            "offsets span less than two decades below 0.1 gamma (smallest {lo})"
        ));
    }
    out
}

/// `a + b x^c` at fixed `c`, minimizing `sum ((a + b x^c - y) / y)^2`.
pub fn fit_fixed_exponent<T: Real>(x: &[T], y: &[T], c: T) -> Result<PowerLawFit<T>> {
    check_fit_data(x, y)?;
    // Weighted normal equations for (a, b) with weight w = 1/y^2.
    let (mut s00, mut s01, mut s11, mut r0, mut r1) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let w = T::one() / (yi * yi);
        let phi = xi.powf(c);
        s00 += w;
        s01 += w * phi;
        s11 += w * phi * phi;
        r0 += w * yi;
        r1 += w * phi * yi;
    }
    let det = s00 * s11 - s01 * s01;
    if !(det.abs() > T::eps() * s00 * s11) {
        return Err(Error::FitFailure(
            "singular normal equations in fixed-exponent fit".into(),
        ));
    }
    let a = (r0 * s11 - r1 * s01) / det;
    let b = (s00 * r1 - s01 * r0) / det;
    let fit = PowerLawFit {
        a,
        b,
        exponent: c,
        exponent_ci: None,
        residual_norm: T::zero(),
    };
    Ok(PowerLawFit {
        residual_norm: relative_rms(&fit, x, y),
        ..fit
    })
}

/// `b x^c` by linear regression of `ln|y|` on `ln x`.
pub fn fit_free_power_law<T: Real>(x: &[T], y: &[T]) -> Result<PowerLawFit<T>> {
    check_fit_data(x, y)?;
    let n = T::lit(x.len() as f64);
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.abs().ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let sxx = lx.iter().map(|&v| (v - mx) * (v - mx)).sum::<T>();
    if !(sxx > T::eps() * n) {
        return Err(Error::FitFailure(
            "offsets do not vary; exponent undetermined".into(),
        ));
    }
    let sxy = lx
        .iter()
        .zip(&ly)
        .map(|(&u, &v)| (u - mx) * (v - my))
        .sum::<T>();
    let c = sxy / sxx;
    let intercept = my - c * mx;
    let sign = if y.iter().copied().sum::<T>() < T::zero() {
        -T::one()
    } else {
        T::one()
    };
    let sse = lx
        .iter()
        .zip(&ly)
        .map(|(&u, &v)| {
            let r = v - intercept - c * u;
            r * r
        })
        .sum::<T>();
    let ci = if x.len() > 2 {
        let se = (sse / (n - T::lit(2.0)) / sxx).sqrt();
        let half = T::lit(Z95) * se;
        Some((c - half, c + half))
    } else {
        None
    };
    let fit = PowerLawFit {
        a: T::zero(),
        b: sign * intercept.exp(),
        exponent: c,
        exponent_ci: ci,
        residual_norm: T::zero(),
    };
    Ok(PowerLawFit {
        residual_norm: relative_rms(&fit, x, y),
        ..fit
    })
}

fn check_fit_data<T: Real>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::FitFailure("need at least two samples".into()));
    }
    if y.iter().any(|v| *v == T::zero() || !v.is_finite()) {
        return Err(Error::FitFailure(
            "data contains zero or non-finite values".into(),
        ));
    }
    Ok(())
}

fn relative_rms<T: Real>(fit: &PowerLawFit<T>, x: &[T], y: &[T]) -> T {
    let n = T::lit(x.len() as f64);
    (x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = (fit.eval(xi) - yi) / yi;
            r * r
        })
        .sum::<T>()
        / n)
        .sqrt()
}

/// Logarithmically spaced samples over `[lo, hi]`.
pub fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (a + (b - a) * T::lit(i as f64) / T::lit((n - 1) as f64)).exp())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_near_one_third_for_both_sweeps() {
        let offsets = logspace(1e-4, 1e-1, 40);
        for dir in [SweepDirection::GSweep, SweepDirection::OmegaSweep] {
            let fit = scaling_analysis(1.0, 7.0, dir, &offsets).unwrap();
            assert!(fit.warnings.is_empty(), "{:?}", fit.warnings);
            assert_eq!(fit.vanishing, ["im(lambda1-lambda3)"]);
            let re13 = fit.component("re(lambda1-lambda3)").unwrap();
            let c = re13.free.exponent;
            assert!((0.31..=0.36).contains(&c), "{dir:?}: c = {c}");
            let (lo, hi) = re13.free.exponent_ci.unwrap();
            assert!(lo < c && c < hi);
            for comp in &fit.components {
                assert!(
                    comp.fixed.residual_norm <= 2.0 * comp.free.residual_norm,
                    "{dir:?} {}: fixed {} free {}",
                    comp.label,
                    comp.fixed.residual_norm,
                    comp.free.residual_norm
                );
            }
        }
    }

    #[test]
    fn samples_csv_round_trip() {
        let fit = scaling_analysis(
            1.0f64,
            7.0,
            SweepDirection::GSweep,
            &logspace(1e-4, 1e-1, 7),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&fit.samples, &mut buf).unwrap();
        assert_eq!(
            read_samples_csv::<f64, _>(buf.as_slice()).unwrap(),
            fit.samples
        );
    }

    #[test]
    fn splitting_shrinks_monotonically_toward_ep3() {
        let offsets = logspace(1e-4, 1e-1, 30);
        for dir in [SweepDirection::GSweep, SweepDirection::OmegaSweep] {
            let fit = scaling_analysis(1.0, 7.0, dir, &offsets).unwrap();
            let d: Vec<f64> = fit.samples.iter().map(|s| s.diff13().norm()).collect();
            assert!(d.windows(2).all(|w| w[0] < w[1]), "{dir:?}: {d:?}");
        }
    }

    #[test]
    fn imaginary_splitting_lives_in_lambda1_minus_lambda2() {
        let fit =
            scaling_analysis(1.0, 7.0, SweepDirection::GSweep, &logspace(1e-4, 1e-1, 20)).unwrap();
        let im12 = fit.component("im(lambda1-lambda2)").unwrap();
        assert!((0.28..=0.38).contains(&im12.free.exponent));
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let x = logspace(1e-3f64, 1.0, 25);
        let y: Vec<f64> = x.iter().map(|v: &f64| 2.5 * v.powf(0.4)).collect();
        let free = fit_free_power_law(&x, &y).unwrap();
        assert!((free.exponent - 0.4).abs() < 1e-12);
        assert!((free.b - 2.5).abs() < 1e-12);
        assert!(free.residual_norm < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 0.1 - 3.0 * v.cbrt()).collect();
        let fixed = fit_fixed_exponent(&x, &y, 1.0 / 3.0).unwrap();
        assert!((fixed.a - 0.1).abs() < 1e-10 && (fixed.b + 3.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_offsets() {
        assert!(scaling_analysis(1.0, 7.0, SweepDirection::GSweep, &[0.0, 1e-3]).is_err());
        let err = scaling_analysis(1.0, 7.0, SweepDirection::GSweep, &[1e-3, 1e-3, 1e-3]);
        assert!(matches!(err, Err(Error::FitFailure(_))));
    }

    #[test]
    fn out_of_range_offsets_warn() {
        let fit = scaling_analysis(
            1.0,
            7.0,
            SweepDirection::OmegaSweep,
            &logspace(1e-2, 1.0, 10),
        )
        .unwrap();
        assert_eq!(fit.warnings.len(), 2);
    }
}
