//! Parameter space, unit conventions, and operator builders.
//!
//! # Decay-rate convention
//!
//! All decay rates (`gamma1`, `gamma2`, `kappa`) are *amplitude* rates. The
//! master equation is written with an explicit factor of two,
//!
//! ```text
//! D[c]rho = rate * (2 c rho c^dag - c^dag c rho - rho c^dag c),
//! ```
//!
//! so a field amplitude decays as `exp(-rate t)` and a population as
//! `exp(-2 rate t)`. The equivalent standard-form collapse operators are
//! `sqrt(2 gamma1) sigma_g1e`, `sqrt(2 gamma2) sigma_g2e` and
//! `sqrt(2 kappa) a`; see [`JumpOperator::standard_form`]. With this
//! convention the effective non-Hermitian Hamiltonian acquires `-i gamma`
//! on `|e>` and `-i kappa n` on the `n`-photon states, matching
//! [`build_hnh`].
//!
//! # Basis ordering
//!
//! * Three-level block ([`build_hnh`]): `(|g2,0>, |e,0>, |g1,1>)`.
//! * Truncated space ([`HilbertSpaceConfig`]): atomic index major, Fock index
//!   minor, atomic order `g1, g2, e`. State `|level, n>` sits at
//!   `level.index() * (n_max + 1) + n`.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::{im, re, Real};

/// Default bound on `epsilon / kappa` for weak probing.
pub const DEFAULT_WEAK_PROBE_RATIO: f64 = 0.2;

/// Unit system in which rates are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Unit {
    /// Rates divided by the total atomic decay, so `gamma1 + gamma2 = 1`.
    #[default]
    #[serde(rename = "gamma-units", alias = "gamma")]
    GammaUnits,
    /// Ordinary frequencies `rate / 2pi` in MHz.
    #[serde(rename = "megahertz-over-2pi", alias = "mhz")]
    MegahertzOver2Pi,
}

impl std::str::FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" | "gamma-units" => Ok(Unit::GammaUnits),
            "mhz" | "megahertz-over-2pi" => Ok(Unit::MegahertzOver2Pi),
            other => Err(Error::InvalidConfig(format!("unknown unit `{other}`"))),
        }
    }
}

/// Physical rates of the ion-cavity system.
///
/// Field names are the on-disk JSON schema of parameter files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    /// Atom-cavity coupling.
    pub g: T,
    /// Pump Rabi frequency.
    pub omega: T,
    /// Amplitude decay `|e> -> |g1>`.
    pub gamma1: T,
    /// Amplitude decay `|e> -> |g2>`.
    pub gamma2: T,
    /// Cavity field decay.
    pub kappa: T,
    /// Probe drive amplitude.
    pub epsilon: T,
    #[serde(default)]
    pub unit: Unit,
}

impl<T: Real> SystemParams<T> {
    /// Validated constructor in gamma units.
    pub fn new(g: T, omega: T, gamma1: T, gamma2: T, kappa: T, epsilon: T) -> Result<Self> {
        let p = Self {
            g,
            omega,
            gamma1,
            gamma2,
            kappa,
            epsilon,
            unit: Unit::GammaUnits,
        };
        p.validate()?;
        Ok(p)
    }

    /// Gamma-unit parameters with `gamma2 = 0`, `gamma1 = 1` and the probe set
    /// to `epsilon_over_kappa * kappa`.
    pub fn lambda_system(g: T, omega: T, kappa: T, epsilon_over_kappa: T) -> Result<Self> {
        Self::new(
            g,
            omega,
            T::one(),
            T::zero(),
            kappa,
            epsilon_over_kappa * kappa,
        )
    }

    /// Total atomic decay `gamma1 + gamma2`.
    #[inline]
    pub fn gamma(&self) -> T {
        self.gamma1 + self.gamma2
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("omega", self.omega),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("kappa", self.kappa),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
            if v < T::zero() {
                return Err(Error::InvalidParams(format!("{name} = {v} is negative")));
            }
        }
        if self.gamma() <= T::zero() {
            return Err(Error::InvalidParams(
                "gamma1 + gamma2 must be positive".into(),
            ));
        }
        if self.kappa <= T::zero() {
            return Err(Error::InvalidParams("kappa must be positive".into()));
        }
        Ok(())
    }

    /// Fails when `epsilon / kappa` exceeds `max_ratio`.
    pub fn check_weak_probe(&self, max_ratio: T) -> Result<()> {
        let ratio = self.epsilon / self.kappa;
        if ratio > max_ratio {
            return Err(Error::InvalidParams(format!(
                "probe too strong for the weak-drive regime: epsilon/kappa = {ratio} > {max_ratio}"
            )));
        }
        Ok(())
    }

    pub fn with_g(mut self, g: T) -> Self {
        self.g = g;
        self
    }

    pub fn with_omega(mut self, omega: T) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Converts `params` into `target` units.
///
/// Going to gamma units divides every rate by `gamma1 + gamma2`. Going to
/// MHz/2pi needs the total atomic decay in MHz/2pi as `reference_gamma`,
/// since gamma units carry no absolute scale.
pub fn convert_units<T: Real>(
    params: &SystemParams<T>,
    target: Unit,
    reference_gamma: Option<T>,
) -> Result<SystemParams<T>> {
    params.validate()?;
    if params.unit == target {
        return Ok(*params);
    }
    let factor = match target {
        Unit::GammaUnits => {
            let gamma = params.gamma();
            if gamma <= T::zero() {
                return Err(Error::ZeroGamma);
            }
            T::one() / gamma
        }
        Unit::MegahertzOver2Pi => match reference_gamma {
            Some(s) if s > T::zero() && s.is_finite() => s,
            _ => {
                return Err(Error::InvalidConfig(
                    "converting to MHz/2pi requires a positive reference gamma".into(),
                ))
            }
        },
    };
    Ok(SystemParams {
        g: params.g * factor,
        omega: params.omega * factor,
        gamma1: params.gamma1 * factor,
        gamma2: params.gamma2 * factor,
        kappa: params.kappa * factor,
        epsilon: params.epsilon * factor,
        unit: target,
    })
}

/// Probe detuning `omega_p - omega_c`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Detuning<T>(T);

impl<T: Real> Detuning<T> {
    pub fn new(delta: T) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidParams("detuning must be finite".into()));
        }
        Ok(Self(delta))
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Atomic levels of the lambda system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomicLevel {
    G1,
    G2,
    E,
}

impl AtomicLevel {
    pub const ALL: [AtomicLevel; 3] = [AtomicLevel::G1, AtomicLevel::G2, AtomicLevel::E];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            AtomicLevel::G1 => 0,
            AtomicLevel::G2 => 1,
            AtomicLevel::E => 2,
        }
    }
}

/// Truncated atom-cavity Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpaceConfig {
    /// Largest retained photon number.
    pub fock_cutoff: usize,
}

impl Default for HilbertSpaceConfig {
    fn default() -> Self {
        Self { fock_cutoff: 3 }
    }
}

impl HilbertSpaceConfig {
    pub const ATOMIC_LEVELS: usize = 3;

    pub fn new(fock_cutoff: usize) -> Result<Self> {
        let cfg = Self { fock_cutoff };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fock_cutoff < 1 {
            return Err(Error::InvalidConfig(
                "fock_cutoff must be at least 1".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    #[inline]
    pub fn dim(&self) -> usize {
        Self::ATOMIC_LEVELS * self.fock_dim()
    }

    #[inline]
    pub fn index(&self, level: AtomicLevel, n: usize) -> usize {
        debug_assert!(n <= self.fock_cutoff);
        level.index() * self.fock_dim() + n
    }

    /// Photon number of basis state `idx`.
    #[inline]
    pub fn photon_number(&self, idx: usize) -> usize {
        idx % self.fock_dim()
    }

    /// Atomic level of basis state `idx`.
    #[inline]
    pub fn level(&self, idx: usize) -> AtomicLevel {
        AtomicLevel::ALL[idx / self.fock_dim()]
    }

    /// Cavity annihilation operator `a` (identity on the atom).
    pub fn annihilation<T: Real>(&self) -> ComplexMatrix<T> {
        let mut a = ComplexMatrix::zeros(self.dim());
        for level in AtomicLevel::ALL {
            for n in 1..=self.fock_cutoff {
                a[(self.index(level, n - 1), self.index(level, n))] = re(T::lit(n as f64).sqrt());
            }
        }
        a
    }

    /// Atomic transition `|to><from|` (identity on the cavity).
    pub fn transition<T: Real>(&self, to: AtomicLevel, from: AtomicLevel) -> ComplexMatrix<T> {
        let mut s = ComplexMatrix::zeros(self.dim());
        for n in 0..self.fock_dim() {
            s[(self.index(to, n), self.index(from, n))] = re(T::one());
        }
        s
    }

    /// Number operator `a^dag a` as its diagonal.
    pub fn photon_number_diagonal<T: Real>(&self) -> Vec<T> {
        (0..self.dim())
            .map(|i| T::lit(self.photon_number(i) as f64))
            .collect()
    }
}

/// The 3x3 non-Hermitian Hamiltonian in the basis `(|g2,0>, |e,0>, |g1,1>)`:
///
/// ```text
/// [[0,     W/2,     0      ],
///  [W/2,   -i gamma, g     ],
///  [0,     g,       -i kappa]]
/// ```
pub fn build_hnh<T: Real>(params: &SystemParams<T>) -> Result<ComplexMatrix<T>> {
    params.validate()?;
    let z = Complex::zero();
    let half_omega = re(params.omega * T::lit(0.5));
    let g = re(params.g);
    Ok(ComplexMatrix::from_rows([
        [z, half_omega, z],
        [half_omega, im(-params.gamma()), g],
        [z, g, im(-params.kappa)],
    ]))
}

/// Probe-frame Hamiltonian on the truncated space:
///
/// `-D (s_e + s_g2 + a^dag a) + g (a^dag s_g1e + h.c.) + W/2 (s_g2e + h.c.) + eps (a + a^dag)`.
pub fn build_probe_hamiltonian<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
) -> Result<ComplexMatrix<T>> {
    params.validate()?;
    cfg.validate()?;
    use AtomicLevel::*;
    let d = delta.value();
    let mut h = ComplexMatrix::zeros(cfg.dim());
    for level in AtomicLevel::ALL {
        for n in 0..cfg.fock_dim() {
            let i = cfg.index(level, n);
            let atomic = if matches!(level, E | G2) {
                T::one()
            } else {
                T::zero()
            };
            h[(i, i)] = re(-d * (atomic + T::lit(n as f64)));
        }
    }
    let half_omega = params.omega * T::lit(0.5);
    for n in 0..cfg.fock_dim() {
        // g (a^dag s_g1e + s_eg1 a): |e,n> <-> |g1,n+1>
        if n < cfg.fock_cutoff {
            let c = re(params.g * T::lit((n + 1) as f64).sqrt());
            let (e_n, g1_n1) = (cfg.index(E, n), cfg.index(G1, n + 1));
            h[(g1_n1, e_n)] += c;
            h[(e_n, g1_n1)] += c;
        }
        // W/2 (s_g2e + s_eg2): |e,n> <-> |g2,n>
        let (e_n, g2_n) = (cfg.index(E, n), cfg.index(G2, n));
        h[(g2_n, e_n)] += re(half_omega);
        h[(e_n, g2_n)] += re(half_omega);
    }
    // eps (a + a^dag)
    for level in AtomicLevel::ALL {
        for n in 1..cfg.fock_dim() {
            let c = re(params.epsilon * T::lit(n as f64).sqrt());
            let (lo, hi) = (cfg.index(level, n - 1), cfg.index(level, n));
            h[(lo, hi)] += c;
            h[(hi, lo)] += c;
        }
    }
    Ok(h)
}

/// A dissipation channel `rate * (2 c rho c^dag - {c^dag c, rho})`.
#[derive(Debug, Clone)]
pub struct JumpOperator<T: Real> {
    pub label: &'static str,
    /// Bare operator `c`.
    pub operator: ComplexMatrix<T>,
    /// Amplitude rate multiplying the factor-two dissipator.
    pub rate: T,
}

impl<T: Real> JumpOperator<T> {
    /// Collapse operator in the standard `C rho C^dag - {C^dag C, rho}/2` form,
    /// `C = sqrt(2 rate) c`.
    pub fn standard_form(&self) -> ComplexMatrix<T> {
        self.operator.scale(re((T::lit(2.0) * self.rate).sqrt()))
    }
}

/// Collapse channels `sigma_g1e` at `gamma1`, `sigma_g2e` at `gamma2` and
/// `a` at `kappa`. Zero-rate channels are omitted.
pub fn build_jump_operators<T: Real>(
    params: &SystemParams<T>,
    cfg: &HilbertSpaceConfig,
) -> Result<Vec<JumpOperator<T>>> {
    params.validate()?;
    cfg.validate()?;
    use AtomicLevel::*;
    let channels = [
        ("sigma_g1e", params.gamma1, cfg.transition(G1, E)),
        ("sigma_g2e", params.gamma2, cfg.transition(G2, E)),
        ("a", params.kappa, cfg.annihilation()),
    ];
    Ok(channels
        .into_iter()
        .filter(|(_, rate, _)| *rate > T::zero())
        .map(|(label, rate, operator)| JumpOperator {
            label,
            operator,
            rate,
        })
        .collect())
}
