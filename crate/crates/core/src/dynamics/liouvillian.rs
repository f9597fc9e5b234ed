//! Density-matrix steady states of the driven, damped master equation.
//!
//! `d rho/dt = -i (H_eff rho - rho H_eff^dag) + sum_k 2 rate_k c_k rho c_k^dag`
//! with `H_eff = H - i sum_k rate_k c_k^dag c_k`, the factor-two convention of
//! [`crate::model`]. The density matrix is vectorized row-major,
//! `vec(rho)[i d + j] = rho_ij`.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Lu};
use crate::model::{
    build_jump_operators, build_probe_hamiltonian, AtomicLevel, Detuning, HilbertSpaceConfig,
    SystemParams,
};
use crate::scalar::{i_unit, re, Real};

/// Largest tolerated population of the top Fock level.
pub const CUTOFF_LIMIT: f64 = 1e-6;

/// Pivot ratio below which the stationarity system counts as singular.
const DEGENERACY_RATIO: f64 = 1e-12;

/// Hamiltonian and damping channels `(rate, c)` of one detuning point.
#[derive(Debug, Clone)]
pub struct OpenSystem<T: Real> {
    pub hamiltonian: ComplexMatrix<T>,
    pub channels: Vec<(T, ComplexMatrix<T>)>,
}

impl<T: Real> OpenSystem<T> {
    pub fn new(
        params: &SystemParams<T>,
        delta: Detuning<T>,
        cfg: &HilbertSpaceConfig,
    ) -> Result<Self> {
        let hamiltonian = build_probe_hamiltonian(params, delta, cfg)?;
        let channels = build_jump_operators(params, cfg)?
            .into_iter()
            .map(|j| (j.rate, j.operator))
            .collect();
        Ok(Self {
            hamiltonian,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `H - i sum rate c^dag c`.
    pub fn effective_hamiltonian(&self) -> ComplexMatrix<T> {
        let mut h = self.hamiltonian.clone();
        for (rate, c) in &self.channels {
            let cdc = &c.adjoint() * c;
            h = h - cdc.scale(Complex::new(T::zero(), *rate));
        }
        h
    }

    /// Right-hand side of the master equation.
    pub fn rhs(&self, heff: &ComplexMatrix<T>, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mi = -i_unit::<T>();
        let mut out = (&(heff * rho) - &(rho * &heff.adjoint())).scale(mi);
        for (rate, c) in &self.channels {
            let jump = &(c * rho) * &c.adjoint();
            out = out + jump.scale(re(T::lit(2.0) * *rate));
        }
        out
    }

    /// Basis states connected to `start` by the Hamiltonian and the jumps.
    ///
    /// The span of these states is invariant under the dynamics, so a state
    /// prepared in it never leaves. Decoupled blocks (for instance `|g2>`
    /// when the pump and its decay are both off) are excluded, which makes the
    /// steady state reached from `start` unique.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let d = self.dim();
        let mut seen = vec![false; d];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(j) = stack.pop() {
            for i in 0..d {
                if seen[i] {
                    continue;
                }
                let via_h = !self.hamiltonian[(i, j)].is_zero();
                let via_jump = self.channels.iter().any(|(_, c)| !c[(i, j)].is_zero());
                if via_h || via_jump {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        (0..d).filter(|&i| seen[i]).collect()
    }

    /// Restriction to the basis states `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let sub =
            |m: &ComplexMatrix<T>| ComplexMatrix::from_fn(keep.len(), |i, j| m[(keep[i], keep[j])]);
        Self {
            hamiltonian: sub(&self.hamiltonian),
            channels: self.channels.iter().map(|(r, c)| (*r, sub(c))).collect(),
        }
    }

    /// Liouvillian superoperator acting on row-major `vec(rho)`.
    pub fn liouvillian(&self) -> ComplexMatrix<T> {
        let d = self.dim();
        let heff = self.effective_hamiltonian();
        let i = i_unit::<T>();
        let mut l = ComplexMatrix::zeros(d * d);
        for a in 0..d {
            for b in 0..d {
                let row = a * d + b;
                for k in 0..d {
                    // -i H_eff rho: (a,b) <- (k,b)
                    let h = heff[(a, k)];
                    if !h.is_zero() {
                        l[(row, k * d + b)] -= i * h;
                    }
                    // +i rho H_eff^dag: (a,b) <- (a,k), coefficient conj(H_eff[b,k])
                    let h = heff[(b, k)];
                    if !h.is_zero() {
                        l[(row, a * d + k)] += i * h.conj();
                    }
                }
            }
        }
        for (rate, c) in &self.channels {
            let two_rate = re(T::lit(2.0) * *rate);
            for a in 0..d {
                for k in 0..d {
                    let cak = c[(a, k)];
                    if cak.is_zero() {
                        continue;
                    }
                    for b in 0..d {
                        for m in 0..d {
                            let cbm = c[(b, m)];
                            if !cbm.is_zero() {
                                l[(a * d + b, k * d + m)] += two_rate * cak * cbm.conj();
                            }
                        }
                    }
                }
            }
        }
        l
    }

    /// Unique trace-one solution of `L vec(rho) = 0`.
    ///
    /// The stationarity row of `rho_00` is replaced by the trace condition;
    /// this loses nothing because trace preservation makes the diagonal rows
    /// of `L` sum to zero.
    pub fn stationary_state(&self) -> Result<ComplexMatrix<T>> {
        let d = self.dim();
        let mut l = self.liouvillian();
        for col in 0..d * d {
            l[(0, col)] = Complex::zero();
        }
        for k in 0..d {
            l[(0, k * d + k)] = Complex::one();
        }
        let lu = Lu::new(&l).map_err(|_| Error::DegenerateSteadyState)?;
        if lu.pivot_ratio() < T::lit(DEGENERACY_RATIO) {
            return Err(Error::DegenerateSteadyState);
        }
        let mut rhs = vec![Complex::zero(); d * d];
        rhs[0] = Complex::one();
        let v = lu.solve(&rhs);
        let rho = ComplexMatrix::from_row_major(d, v)?;
        // Remove rounding-level anti-Hermitian parts.
        Ok((&rho + &rho.adjoint()).scale(re(T::lit(0.5))))
    }
}

/// Steady density matrix on the full truncated space.
#[derive(Debug, Clone)]
pub struct SteadyState<T: Real> {
    pub rho: ComplexMatrix<T>,
    pub cfg: HilbertSpaceConfig,
}

impl<T: Real> SteadyState<T> {
    /// `<a^dag a>`.
    pub fn photon_number(&self) -> T {
        diagonal_sum(&self.rho, |i| T::lit(self.cfg.photon_number(i) as f64))
    }

    /// Population of one atomic level, summed over photon numbers.
    pub fn level_population(&self, level: AtomicLevel) -> T {
        diagonal_sum(&self.rho, |i| {
            if self.cfg.level(i) == level {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Population of the highest retained Fock state.
    pub fn top_fock_occupancy(&self) -> T {
        let top = self.cfg.fock_cutoff;
        diagonal_sum(&self.rho, |i| {
            if self.cfg.photon_number(i) == top {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Fails with [`Error::CutoffTooSmall`] when the top Fock level holds
    /// more than [`CUTOFF_LIMIT`] of the population.
    pub fn check_cutoff(&self) -> Result<()> {
        check_cutoff(self.top_fock_occupancy())
    }
}

pub(crate) fn check_cutoff<T: Real>(occupancy: T) -> Result<()> {
    if occupancy > T::lit(CUTOFF_LIMIT) {
        return Err(Error::CutoffTooSmall {
            occupancy: occupancy.as_f64(),
            limit: CUTOFF_LIMIT,
        });
    }
    Ok(())
}

fn diagonal_sum<T: Real>(rho: &ComplexMatrix<T>, weight: impl Fn(usize) -> T) -> T {
    (0..rho.dim()).map(|i| weight(i) * rho[(i, i)].re).sum()
}

/// Steady state reached from `|g1, 0>`, without the cutoff check.
pub fn steady_state_unchecked<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
) -> Result<SteadyState<T>> {
    let system = OpenSystem::new(params, delta, cfg)?;
    let keep = system.reachable_from(cfg.index(AtomicLevel::G1, 0));
    let reduced = system.restrict(&keep).stationary_state()?;
    let mut rho = ComplexMatrix::zeros(cfg.dim());
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            rho[(i, j)] = reduced[(a, b)];
        }
    }
    Ok(SteadyState { rho, cfg: *cfg })
}

/// Steady state reached from `|g1, 0>`, with the Fock-cutoff check.
pub fn steady_state<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
) -> Result<SteadyState<T>> {
    let ss = steady_state_unchecked(params, delta, cfg)?;
    ss.check_cutoff()?;
    Ok(ss)
}

/// Steady-state `<a^dag a>` at one detuning.
pub fn steady_state_photon_number<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
) -> Result<T> {
    Ok(steady_state(params, delta, cfg)?.photon_number())
}

/// Integrates the master equation from `|g1, 0><g1, 0|` with classical RK4.
pub fn evolve_master_equation<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
    t_final: T,
    dt: T,
) -> Result<SteadyState<T>> {
    if !(dt > T::zero()) || !(t_final >= T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidConfig(
            "need dt > 0 and finite t_final >= 0".into(),
        ));
    }
    let system = OpenSystem::new(params, delta, cfg)?;
    let heff = system.effective_hamiltonian();
    let d = cfg.dim();
    let start = cfg.index(AtomicLevel::G1, 0);
    let mut rho = ComplexMatrix::from_fn(d, |i, j| {
        if i == start && j == start {
            Complex::one()
        } else {
            Complex::zero()
        }
    });
    let steps = (t_final / dt).ceil().to_usize().unwrap_or(0);
    let h = if steps > 0 {
        t_final / T::lit(steps as f64)
    } else {
        T::zero()
    };
    let half = re(h * T::lit(0.5));
    let sixth = re(h / T::lit(6.0));
    for _ in 0..steps {
        let k1 = system.rhs(&heff, &rho);
        let k2 = system.rhs(&heff, &(&rho + &k1.scale(half)));
        let k3 = system.rhs(&heff, &(&rho + &k2.scale(half)));
        let k4 = system.rhs(&heff, &(&rho + &k3.scale(re(h))));
        let incr = k1 + k2.scale(re(T::lit(2.0))) + k3.scale(re(T::lit(2.0))) + k4;
        rho = &rho + &incr.scale(sixth);
    }
    if !rho.max_abs().is_finite() {
        return Err(Error::IntegratorStep(
            "master-equation integration diverged".into(),
        ));
    }
    Ok(SteadyState { rho, cfg: *cfg })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64) -> Detuning<f64> {
        Detuning::new(x).unwrap()
    }

    fn bare(kappa: f64) -> SystemParams<f64> {
        SystemParams::lambda_system(0.0, 0.0, kappa, 0.1183).unwrap()
    }

    #[test]
    fn bare_cavity_photon_number() {
        let cfg = HilbertSpaceConfig::default();
        let n0 = steady_state_photon_number(&bare(7.0), det(0.0), &cfg).unwrap();
        assert!((n0 - 0.014).abs() < 1e-4, "{n0}");
        let nk = steady_state_photon_number(&bare(7.0), det(7.0), &cfg).unwrap();
        assert!((nk / n0 - 0.5).abs() < 1e-3, "{}", nk / n0);
    }

    #[test]
    fn state_is_a_density_matrix() {
        let p = SystemParams::lambda_system(4.6, 2.0, 7.0, 0.1183).unwrap();
        let ss = steady_state(&p, det(1.3), &HilbertSpaceConfig::default()).unwrap();
        assert!((ss.rho.trace() - Complex::one()).norm() < 1e-12);
        assert!(ss.rho.is_hermitian(1e-12));
        for i in 0..ss.rho.dim() {
            assert!(ss.rho[(i, i)].re > -1e-12);
        }
    }

    #[test]
    fn liouvillian_preserves_trace() {
        let p = SystemParams::new(2.0, 3.0, 0.7, 0.3, 7.0, 0.8).unwrap();
        let sys = OpenSystem::new(&p, det(-2.0), &HilbertSpaceConfig::new(2).unwrap()).unwrap();
        let l = sys.liouvillian();
        let d = sys.dim();
        for col in 0..d * d {
            let s: Complex<f64> = (0..d).map(|k| l[(k * d + k, col)]).sum();
            assert!(s.norm() < 1e-12, "column {col}: {s}");
        }
    }

    #[test]
    fn liouvillian_matches_direct_rhs() {
        let p = SystemParams::new(2.0, 3.0, 0.7, 0.3, 7.0, 0.8).unwrap();
        let sys = OpenSystem::new(&p, det(0.4), &HilbertSpaceConfig::new(2).unwrap()).unwrap();
        let d = sys.dim();
        let rho = ComplexMatrix::from_fn(d, |i, j| {
            Complex::new((i + 2 * j) as f64 * 0.1, i as f64 - j as f64)
        });
        let direct = sys.rhs(&sys.effective_hamiltonian(), &rho);
        let via_l = sys.liouvillian().mat_vec(rho.as_slice());
        let via_l = ComplexMatrix::from_row_major(d, via_l).unwrap();
        assert!((direct - via_l).max_abs() < 1e-12);
    }

    #[test]
    fn decoupled_pump_level_is_excluded() {
        let cfg = HilbertSpaceConfig::default();
        let sys = OpenSystem::new(&bare(7.0), det(0.0), &cfg).unwrap();
        let keep = sys.reachable_from(cfg.index(AtomicLevel::G1, 0));
        assert_eq!(keep, (0..cfg.fock_dim()).collect::<Vec<_>>());
        let p = SystemParams::lambda_system(1.0, 1.0, 7.0, 0.1).unwrap();
        let sys = OpenSystem::new(&p, det(0.0), &cfg).unwrap();
        assert_eq!(sys.reachable_from(0).len(), cfg.dim());
    }

    #[test]
    fn degenerate_system_is_reported() {
        // Two undamped, uncoupled levels: every diagonal state is stationary.
        let sys = OpenSystem::<f64> {
            hamiltonian: ComplexMatrix::from_fn(2, |i, j| {
                if i == j {
                    re(i as f64)
                } else {
                    Complex::zero()
                }
            }),
            channels: Vec::new(),
        };
        assert!(matches!(
            sys.stationary_state(),
            Err(Error::DegenerateSteadyState)
        ));
    }

    #[test]
    fn cutoff_breach_is_reported() {
        // A strong probe fills the top Fock level.
        let p = SystemParams::lambda_system(0.0, 0.0, 1.0, 1.0).unwrap();
        let err = steady_state_photon_number(&p, det(0.0), &HilbertSpaceConfig::new(2).unwrap());
        assert!(matches!(err, Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn integration_relaxes_to_the_steady_state() {
        let p = SystemParams::lambda_system(2.0, 6.0, 7.0, 0.1183).unwrap();
        let cfg = HilbertSpaceConfig::default();
        let ss = steady_state(&p, det(1.0), &cfg).unwrap().photon_number();
        let me = evolve_master_equation(&p, det(1.0), &cfg, 40.0, 0.01)
            .unwrap()
            .photon_number();
        assert!(((me - ss) / ss).abs() < 1e-4, "{me} vs {ss}");
    }

    #[test]
    fn weak_probe_leaves_atom_in_g1() {
        // 1 - P(g1) scales as (eps/kappa)^2.
        let cfg = HilbertSpaceConfig::default();
        let loss = |r: f64| {
            let p = SystemParams::lambda_system(3.0, 3.0, 7.0, r).unwrap();
            1.0 - steady_state(&p, det(0.5), &cfg)
                .unwrap()
                .level_population(AtomicLevel::G1)
        };
        let (a, b) = (loss(0.02), loss(0.01));
        assert!(a < 0.02);
        assert!((a / b - 4.0).abs() < 0.05, "ratio {}", a / b);
    }
}
