//! Monte-Carlo wave-function trajectories.
//!
//! Each trajectory propagates an unnormalized state under
//! `H_eff = H - i sum rate c^dag c` until its squared norm drops below a
//! uniform random threshold (the waiting-time algorithm). The crossing time
//! is located by bisection on a Taylor expansion of the propagator over the
//! current step, so jump times do not depend on the step size; the step only
//! sets the grid on which the photon number is sampled. A jump through channel
//! `k` happens with probability proportional to `2 rate_k |c_k psi|^2`.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::liouvillian::{check_cutoff, OpenSystem};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, ComplexMatrix};
use crate::model::{AtomicLevel, Detuning, HilbertSpaceConfig, SystemParams};
use crate::scalar::{i_unit, Real};

const MAX_TAYLOR_TERMS: usize = 120;
const BISECTION_STEPS: usize = 64;

/// Numerical settings of a trajectory ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrajectoryConfig<T> {
    pub n_traj: usize,
    /// End time in units of `1/gamma`.
    pub t_final: T,
    /// Upper bound on the sampling step.
    pub dt_max: T,
    pub seed: u64,
    /// Fraction of `[0, t_final]`, counted from the end, that is time-averaged.
    pub steady_window: T,
}

impl<T: Real> Default for TrajectoryConfig<T> {
    fn default() -> Self {
        Self {
            n_traj: 2000,
            t_final: T::lit(50.0),
            dt_max: T::lit(0.05),
            seed: 0,
            steady_window: T::lit(0.5),
        }
    }
}

impl<T: Real> TrajectoryConfig<T> {
    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self, params: &SystemParams<T>) -> Result<Vec<String>> {
        if self.n_traj < 1 {
            return Err(Error::InvalidConfig("n_traj must be at least 1".into()));
        }
        if !(self.t_final > T::zero()) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(
                "t_final must be positive and finite".into(),
            ));
        }
        if !(self.dt_max > T::zero()) || self.dt_max > self.t_final {
            return Err(Error::InvalidConfig(
                "dt_max must lie in (0, t_final]".into(),
            ));
        }
        if !(self.steady_window > T::zero() && self.steady_window < T::one()) {
            return Err(Error::InvalidConfig(
                "steady_window must lie in (0, 1)".into(),
            ));
        }
        let slowest = [params.gamma1, params.gamma2, params.kappa]
            .into_iter()
            .filter(|r| *r > T::zero())
            .fold(T::infinity(), T::min);
        let mut warnings = Vec::new();
        if self.t_final < T::lit(10.0) / slowest {
            warnings.push(format!(
                "t_final = {} is shorter than 10 / (slowest rate {slowest}); the transient may not have decayed",
                self.t_final
            ));
        }
        Ok(warnings)
    }

    fn steps(&self) -> usize {
        (self.t_final / self.dt_max)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1)
    }
}

/// Independent random stream of trajectory `traj` at detuning point `point`.
///
/// The ChaCha key comes from the master seed and the stream id from the two
/// indices, so every trajectory draws the same numbers whichever worker runs it.
pub fn trajectory_rng(seed: u64, point: u32, traj: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(point) << 32) | u64::from(traj));
    rng
}

/// Master seed of the `index`-th member of a sweep, derived from `master`.
///
/// Uses a separate key from [`trajectory_rng`] so derived seeds never reuse
/// the trajectory streams of the master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(index);
    rng.next_u64()
}

/// One quantum jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct JumpRecord<T> {
    pub time: T,
    /// Index into the non-zero-rate channels (`sigma_g1e`, `sigma_g2e`, `a`).
    pub channel: usize,
}

/// Result of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome<T> {
    /// Time average of `<a^dag a>` over the steady window.
    pub photon_number: T,
    /// Time average of the top-Fock-level population over the steady window.
    pub top_fock: T,
    pub jumps: Vec<JumpRecord<T>>,
}

/// Ensemble mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrajectoryEstimate<T> {
    pub mean: T,
    /// Sample standard deviation over `sqrt(n_traj)`.
    pub stderr: T,
    pub n_traj: usize,
    pub top_fock: T,
}

/// Precomputed propagators for one detuning point.
#[derive(Debug, Clone)]
pub struct Mcwf<T: Real> {
    /// `-i H_eff`.
    generator: ComplexMatrix<T>,
    /// `exp(-i H_eff dt)`.
    propagator: ComplexMatrix<T>,
    channels: Vec<(T, ComplexMatrix<T>)>,
    photon: Vec<T>,
    top: Vec<bool>,
    start: usize,
    dt: T,
    steps: usize,
    first_sample: usize,
}

/// Partial sums `sum_k w_k s^k` of `exp(len * G) psi` with `w_k = (len G)^k psi / k!`.
struct TaylorSegment<T: Real> {
    terms: Vec<Vec<Complex<T>>>,
}

impl<T: Real> TaylorSegment<T> {
    fn new(generator: &ComplexMatrix<T>, psi: &[Complex<T>], len: T) -> Result<Self> {
        let base = norm_sqr(psi);
        let tol = T::eps() * T::eps() * T::lit(1e-2) * base;
        let mut terms = vec![psi.to_vec()];
        for k in 1..MAX_TAYLOR_TERMS {
            let mut next = generator.mat_vec(&terms[k - 1]);
            let f = len / T::lit(k as f64);
            next.iter_mut().for_each(|z| *z *= f);
            let small = norm_sqr(&next) <= tol;
            terms.push(next);
            if small {
                return Ok(Self { terms });
            }
        }
        Err(Error::IntegratorStep(
            "propagator series did not converge; reduce dt_max".into(),
        ))
    }

    fn eval(&self, s: T) -> Vec<Complex<T>> {
        let mut acc = self.terms[self.terms.len() - 1].clone();
        for w in self.terms.iter().rev().skip(1) {
            for (a, b) in acc.iter_mut().zip(w) {
                *a = *a * s + *b;
            }
        }
        acc
    }
}

impl<T: Real> Mcwf<T> {
    pub fn new(
        params: &SystemParams<T>,
        delta: Detuning<T>,
        cfg: &HilbertSpaceConfig,
        tcfg: &TrajectoryConfig<T>,
    ) -> Result<Self> {
        for w in tcfg.validate(params)? {
            log::warn!("{w}");
        }
        let system = OpenSystem::new(params, delta, cfg)?;
        let generator = system.effective_hamiltonian().scale(-i_unit::<T>());
        let steps = tcfg.steps();
        let dt = tcfg.t_final / T::lit(steps as f64);
        let propagator = generator.scale(Complex::new(dt, T::zero())).expm();
        let window_start = tcfg.t_final * (T::one() - tcfg.steady_window);
        let first_sample = (window_start / dt - T::lit(1e-9))
            .ceil()
            .to_usize()
            .unwrap_or(0)
            .max(1);
        let dim = cfg.dim();
        Ok(Self {
            generator,
            propagator,
            channels: system.channels,
            photon: (0..dim)
                .map(|i| T::lit(cfg.photon_number(i) as f64))
                .collect(),
            top: (0..dim)
                .map(|i| cfg.photon_number(i) == cfg.fock_cutoff)
                .collect(),
            start: cfg.index(AtomicLevel::G1, 0),
            dt,
            steps,
            first_sample,
        })
    }

    /// Runs one trajectory from `|g1, 0>`.
    pub fn run<R: Rng>(&self, rng: &mut R) -> Result<TrajectoryOutcome<T>> {
        let dim = self.photon.len();
        let mut psi = vec![Complex::zero(); dim];
        psi[self.start] = Complex::new(T::one(), T::zero());
        let mut threshold = draw_threshold::<T, R>(rng);
        let mut jumps = Vec::new();
        let (mut photon_acc, mut top_acc) = (T::zero(), T::zero());
        let mut next = vec![Complex::zero(); dim];

        for step in 1..=self.steps {
            self.propagator.mat_vec_into(&psi, &mut next);
            if norm_sqr(&next) >= threshold {
                std::mem::swap(&mut psi, &mut next);
            } else {
                let t0 = self.dt * T::lit((step - 1) as f64);
                psi = self.resolve_jumps(&psi, t0, &mut threshold, &mut jumps, rng)?;
            }
            let norm = norm_sqr(&psi);
            if !(norm > T::zero()) || !norm.is_finite() {
                return Err(Error::IntegratorStep(format!(
                    "state norm {norm} at step {step}"
                )));
            }
            if step >= self.first_sample {
                let (mut n, mut top) = (T::zero(), T::zero());
                for (i, z) in psi.iter().enumerate() {
                    let p = z.norm_sqr();
                    n += self.photon[i] * p;
                    if self.top[i] {
                        top += p;
                    }
                }
                photon_acc += n / norm;
                top_acc += top / norm;
            }
        }
        let samples = T::lit((self.steps + 1 - self.first_sample) as f64);
        Ok(TrajectoryOutcome {
            photon_number: photon_acc / samples,
            top_fock: top_acc / samples,
            jumps,
        })
    }

    /// Advances `psi` over one step that contains at least one jump.
    fn resolve_jumps<R: Rng>(
        &self,
        psi: &[Complex<T>],
        t0: T,
        threshold: &mut T,
        jumps: &mut Vec<JumpRecord<T>>,
        rng: &mut R,
    ) -> Result<Vec<Complex<T>>> {
        let mut start = psi.to_vec();
        let mut t = t0;
        let mut remaining = self.dt;
        loop {
            let seg = TaylorSegment::new(&self.generator, &start, remaining)?;
            let end = seg.eval(T::one());
            if norm_sqr(&end) >= *threshold {
                return Ok(end);
            }
            let (mut lo, mut hi) = (T::zero(), T::one());
            for _ in 0..BISECTION_STEPS {
                let mid = (lo + hi) * T::lit(0.5);
                if norm_sqr(&seg.eval(mid)) >= *threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= T::eps() {
                    break;
                }
            }
            let s = (lo + hi) * T::lit(0.5);
            let at = seg.eval(s);
            let weights: Vec<T> = self
                .channels
                .iter()
                .map(|(rate, c)| T::lit(2.0) * *rate * norm_sqr(&c.mat_vec(&at)))
                .collect();
            let total: T = weights.iter().copied().sum();
            if !(total > T::zero()) {
                return Err(Error::IntegratorStep(
                    "norm decayed but no jump channel is populated".into(),
                ));
            }
            let mut u = T::lit(rng.random::<f64>()) * total;
            let mut channel = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    channel = k;
                    break;
                }
                u -= *w;
            }
            let mut jumped = self.channels[channel].1.mat_vec(&at);
            let norm = norm_sqr(&jumped).sqrt();
            jumped.iter_mut().for_each(|z| *z /= norm);
            t += s * remaining;
            jumps.push(JumpRecord { time: t, channel });
            *threshold = draw_threshold::<T, R>(rng);
            remaining *= T::one() - s;
            start = jumped;
            if !(remaining > T::zero()) {
                return Ok(start);
            }
        }
    }
}

/// Uniform in `(0, 1]`.
fn draw_threshold<T: Real, R: Rng>(rng: &mut R) -> T {
    T::lit(1.0 - rng.random::<f64>())
}

/// All trajectories of one point, in trajectory order.
pub fn run_ensemble<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
    tcfg: &TrajectoryConfig<T>,
    point: u32,
) -> Result<Vec<TrajectoryOutcome<T>>> {
    let n_traj = u32::try_from(tcfg.n_traj)
        .map_err(|_| Error::InvalidConfig("n_traj exceeds 2^32".into()))?;
    let mcwf = Mcwf::new(params, delta, cfg, tcfg)?;
    (0..n_traj)
        .into_par_iter()
        .map(|j| mcwf.run(&mut trajectory_rng(tcfg.seed, point, j)))
        .collect()
}

/// Mean photon number at one detuning, with `point` selecting the random
/// streams (the index of the detuning within a spectrum).
pub fn run_trajectories_at<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
    tcfg: &TrajectoryConfig<T>,
    point: u32,
) -> Result<TrajectoryEstimate<T>> {
    let outcomes = run_ensemble(params, delta, cfg, tcfg, point)?;
    let est = summarize(&outcomes);
    check_cutoff(est.top_fock)?;
    Ok(est)
}

/// Mean photon number at one detuning (random streams of point 0).
pub fn run_trajectories<T: Real>(
    params: &SystemParams<T>,
    delta: Detuning<T>,
    cfg: &HilbertSpaceConfig,
    tcfg: &TrajectoryConfig<T>,
) -> Result<TrajectoryEstimate<T>> {
    run_trajectories_at(params, delta, cfg, tcfg, 0)
}

/// Index-ordered reduction, independent of how the work was scheduled.
pub fn summarize<T: Real>(outcomes: &[TrajectoryOutcome<T>]) -> TrajectoryEstimate<T> {
    let n = T::lit(outcomes.len() as f64);
    let mean = outcomes.iter().map(|o| o.photon_number).sum::<T>() / n;
    let top_fock = outcomes.iter().map(|o| o.top_fock).sum::<T>() / n;
    let stderr = if outcomes.len() > 1 {
        let ss: T = outcomes
            .iter()
            .map(|o| (o.photon_number - mean).powi(2))
            .sum();
        (ss / (n - T::one())).sqrt() / n.sqrt()
    } else {
        T::zero()
    };
    TrajectoryEstimate {
        mean,
        stderr,
        n_traj: outcomes.len(),
        top_fock,
    }
}
