//! Transmission spectra: photon numbers over a detuning grid, normalized by
//! the resonant bare-cavity value `(epsilon / kappa)^2`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::liouvillian::steady_state_photon_number;
use crate::dynamics::mcwf::{run_trajectories_at, TrajectoryConfig};
use crate::error::{Error, Result};
use crate::io::{fmt_num, parse_num, Table};
use crate::model::{Detuning, HilbertSpaceConfig, SystemParams};
use crate::scalar::Real;

pub const SPECTRUM_COLUMNS: [&str; 4] = ["delta", "transmission", "stderr", "provenance"];

/// How a trace was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SteadyState,
    Trajectories,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SteadyState => "steady-state",
            Provenance::Trajectories => "trajectories",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady-state" => Ok(Provenance::SteadyState),
            "trajectories" => Ok(Provenance::Trajectories),
            other => Err(Error::Parse(format!("unknown provenance `{other}`"))),
        }
    }
}

/// A transmission spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectrumTrace<T> {
    /// Strictly increasing detunings.
    pub deltas: Vec<T>,
    /// `<a^dag a> / (epsilon/kappa)^2`.
    pub transmission: Vec<T>,
    /// Standard error in transmission units; zero for deterministic solves.
    pub stderr: Vec<T>,
    pub provenance: Provenance,
    /// Master seed and trajectory count of stochastic traces.
    pub seed: Option<u64>,
    pub n_traj: Option<usize>,
}

impl<T: Real> SpectrumTrace<T> {
    /// Deterministic trace; checks the invariants.
    pub fn deterministic(deltas: Vec<T>, transmission: Vec<T>) -> Result<Self> {
        let stderr = vec![T::zero(); deltas.len()];
        let t = Self {
            deltas,
            transmission,
            stderr,
            provenance: Provenance::SteadyState,
            seed: None,
            n_traj: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.deltas.len();
        if self.transmission.len() != n || self.stderr.len() != n {
            return Err(Error::InvalidConfig(
                "trace columns differ in length".into(),
            ));
        }
        validate_deltas(&self.deltas)?;
        if self
            .transmission
            .iter()
            .any(|t| !(*t >= T::zero()) || !t.is_finite())
        {
            return Err(Error::InvalidConfig(
                "transmission must be finite and non-negative".into(),
            ));
        }
        if self
            .stderr
            .iter()
            .any(|s| !(*s >= T::zero()) || !s.is_finite())
        {
            return Err(Error::InvalidConfig(
                "stderr must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&SPECTRUM_COLUMNS);
        for i in 0..self.len() {
            t.push(vec![
                fmt_num(self.deltas[i]),
                fmt_num(self.transmission[i]),
                fmt_num(self.stderr[i]),
                self.provenance.as_str().to_string(),
            ]);
        }
        t
    }

    /// CSV with a leading `# seed=.. n_traj=..` comment for stochastic traces.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if let (Some(seed), Some(n)) = (self.seed, self.n_traj) {
            writeln!(out, "# seed={seed} n_traj={n}")?;
        }
        self.to_table().write_to(out)
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let (mut seed, mut n_traj) = (None, None);
        if let Some(first) = text.lines().next().and_then(|l| l.strip_prefix('#')) {
            for kv in first.split_whitespace() {
                match kv.split_once('=') {
                    Some(("seed", v)) => {
                        seed = Some(
                            v.parse()
                                .map_err(|_| Error::Parse(format!("bad seed `{v}`")))?,
                        )
                    }
                    Some(("n_traj", v)) => {
                        n_traj = Some(
                            v.parse()
                                .map_err(|_| Error::Parse(format!("bad n_traj `{v}`")))?,
                        )
                    }
                    _ => {}
                }
            }
        }
        let table = Table::read_from(text.as_bytes(), &SPECTRUM_COLUMNS)?;
        let mut trace = Self {
            deltas: Vec::new(),
            transmission: Vec::new(),
            stderr: Vec::new(),
            provenance: Provenance::SteadyState,
            seed,
            n_traj,
        };
        for (i, row) in table.rows.iter().enumerate() {
            trace.deltas.push(parse_num(&row[0])?);
            trace.transmission.push(parse_num(&row[1])?);
            trace.stderr.push(parse_num(&row[2])?);
            let p: Provenance = row[3].parse()?;
            if i == 0 {
                trace.provenance = p;
            } else if p != trace.provenance {
                return Err(Error::Parse("mixed provenance within one trace".into()));
            }
        }
        trace.validate()?;
        Ok(trace)
    }
}

fn validate_deltas<T: Real>(deltas: &[T]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::InvalidConfig("detuning list is empty".into()));
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidConfig("detunings must be finite".into()));
    }
    if deltas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(
            "detunings must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Provenance record written next to a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectrumMeta<T> {
    pub params: SystemParams<T>,
    pub hilbert: HilbertSpaceConfig,
    pub trajectories: Option<TrajectoryConfig<T>>,
    pub seed: Option<u64>,
}

/// Transmission over `deltas`, from the Liouvillian steady state when
/// `tcfg` is `None` and from trajectories otherwise. Point `i` uses the
/// random streams of point index `i`.
pub fn transmission_spectrum<T: Real>(
    params: &SystemParams<T>,
    deltas: &[T],
    cfg: &HilbertSpaceConfig,
    tcfg: Option<&TrajectoryConfig<T>>,
) -> Result<SpectrumTrace<T>> {
    params.validate()?;
    validate_deltas(deltas)?;
    if !(params.epsilon > T::zero()) {
        return Err(Error::InvalidParams(
            "a transmission spectrum needs epsilon > 0".into(),
        ));
    }
    let norm = (params.epsilon / params.kappa).powi(2);
    let detunings: Vec<Detuning<T>> = deltas
        .iter()
        .map(|&d| Detuning::new(d))
        .collect::<Result<_>>()?;
    match tcfg {
        None => {
            let n: Vec<T> = detunings
                .par_iter()
                .map(|&d| steady_state_photon_number(params, d, cfg))
                .collect::<Result<_>>()?;
            SpectrumTrace::deterministic(
                deltas.to_vec(),
                n.into_iter().map(|x| (x / norm).max(T::zero())).collect(),
            )
        }
        Some(tcfg) => {
            let mut transmission = Vec::with_capacity(deltas.len());
            let mut stderr = Vec::with_capacity(deltas.len());
            for (i, &d) in detunings.iter().enumerate() {
                let point = u32::try_from(i)
                    .map_err(|_| Error::InvalidConfig("too many detunings".into()))?;
                let est = run_trajectories_at(params, d, cfg, tcfg, point)?;
                transmission.push(est.mean / norm);
                stderr.push(est.stderr / norm);
            }
            let trace = SpectrumTrace {
                deltas: deltas.to_vec(),
                transmission,
                stderr,
                provenance: Provenance::Trajectories,
                seed: Some(tcfg.seed),
                n_traj: Some(tcfg.n_traj),
            };
            trace.validate()?;
            Ok(trace)
        }
    }
}
