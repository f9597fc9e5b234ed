//! Subcommand bodies. Each writes its files into the output directory and
//! finishes with a `<command>.meta.json` sidecar.

use std::io::Write as _;
use std::path::PathBuf;

use ep3_core::dynamics::{derive_seed, transmission_spectrum, SpectrumTrace};
use ep3_core::fitting::{eigenvalue_comparison, fit_spectrum, FitInit, FitOptions, FitResult};
use ep3_core::model::{convert_units, DEFAULT_WEAK_PROBE_RATIO};
use ep3_core::spectral::ep2::write_locus_csv;
use ep3_core::spectral::{
    ep2_locus, ep3_analytic, scaling_analysis, sweep_surfaces, write_samples_csv, SweepDirection,
};
use ep3_core::{Ep3, HilbertSpaceConfig, Params, Unit};
use serde::Serialize;

use crate::config::{default_params, Method, RunConfig, SpectrumConfig, SweepAxis};
use crate::error::{CliError, CliResult};
use crate::output::{OutputDir, RunRecord};
use crate::sweep::{write_sweep_csv, SweepRow};

/// Resolved inputs shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    /// Gamma units.
    pub params: Params,
    pub source_params: Params,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    /// Reads the parameter file (if any), applies the unit override and
    /// normalizes to gamma units.
    pub fn resolve(config: RunConfig, out: PathBuf) -> CliResult<Self> {
        let mut source = match &config.params {
            Some(path) => Params::from_json_file(path).map_err(|e| {
                CliError::Config(format!("cannot load parameters {}: {e}", path.display()))
            })?,
            None => default_params(),
        };
        if let Some(unit) = config.unit {
            source.unit = unit;
        }
        source.validate()?;
        let params = convert_units(&source, Unit::GammaUnits, None)?;
        let seed = config.seed.unwrap_or(0);
        Ok(Self {
            config,
            params,
            source_params: source,
            seed,
            out,
        })
    }

    fn record(&self) -> RunRecord<'_> {
        RunRecord {
            seed: self.seed,
            params: &self.params,
            source_params: &self.source_params,
            config: &self.config,
        }
    }
}

#[derive(Serialize)]
struct Ep3Report {
    ep3: Option<Ep3>,
    /// Grid node closest to the EP3.
    nearest_node: Option<[f64; 2]>,
}

fn nearest(axis: &[f64], x: f64) -> f64 {
    axis.iter()
        .copied()
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
        .unwrap_or(f64::NAN)
}

pub fn surfaces(ctx: &Context) -> CliResult<PathBuf> {
    let s = ctx.config.surfaces;
    s.g.validate("g")?;
    s.omega.validate("omega")?;
    let (ga, wa) = (s.g.linear(), s.omega.linear());
    let (gamma, kappa) = (ctx.params.gamma(), ctx.params.kappa);
    let grid = sweep_surfaces(gamma, kappa, &ga, &wa)?;
    let locus = ep2_locus(gamma, kappa, &ga, &wa)?;
    let ep3 = ep3_analytic(gamma, kappa).ok();

    let mut out = OutputDir::create(&ctx.out)?;
    out.write("surfaces.csv", |w| Ok(grid.write_csv(w)?))?;
    out.write("ep2_locus.csv", |w| Ok(write_locus_csv(&locus, w)?))?;
    let report = Ep3Report {
        ep3,
        nearest_node: ep3.map(|e| [nearest(&ga, e.g_ep3), nearest(&wa, e.omega_ep3)]),
    };
    out.write_json("ep3.json", &report)?;

    #[derive(Serialize)]
    struct Notes {
        grid: [usize; 2],
        ep2_polylines: usize,
        ep2_vertices: usize,
    }
    let notes = Notes {
        grid: [ga.len(), wa.len()],
        ep2_polylines: locus.len(),
        ep2_vertices: locus.iter().map(Vec::len).sum(),
    };
    out.finish("surfaces", &ctx.record(), &notes)
}

fn compute_trace(params: &Params, sc: &SpectrumConfig, seed: u64) -> CliResult<SpectrumTrace<f64>> {
    sc.deltas.validate("deltas")?;
    if let Err(e) = params.check_weak_probe(DEFAULT_WEAK_PROBE_RATIO) {
        log::warn!("{e}");
    }
    let cfg = HilbertSpaceConfig::new(sc.fock_cutoff)?;
    let tcfg = match sc.method {
        Method::SteadyState => None,
        Method::Trajectories => {
            let t = sc.trajectories.with_seed(seed);
            for w in t.validate(params)? {
                log::warn!("{w}");
            }
            Some(t)
        }
    };
    Ok(transmission_spectrum(
        params,
        &sc.deltas.linear(),
        &cfg,
        tcfg.as_ref(),
    )?)
}

fn fit_trace(trace: &SpectrumTrace<f64>, params: &Params, seed: u64) -> CliResult<FitResult<f64>> {
    let opts = FitOptions {
        seed,
        ..FitOptions::default()
    };
    Ok(fit_spectrum(
        trace,
        params.kappa,
        &FitInit::RoughParams(*params),
        &opts,
    )?)
}

#[derive(Serialize, Default)]
struct SpectrumNotes {
    provenance: &'static str,
    fit_residual: Option<f64>,
    residual_threshold: Option<f64>,
    fit_below_threshold: Option<bool>,
    fit_ill_conditioned: Option<bool>,
    /// Largest |Re| or |Im| gap between fitted and numerical eigenvalues.
    max_eigenvalue_deviation: Option<f64>,
    /// RMS relative change of the trace when `gamma2` is folded into `gamma1`.
    gamma2_rms_relative_change: Option<f64>,
}

pub fn spectrum(ctx: &Context) -> CliResult<PathBuf> {
    let sc = ctx.config.spectrum;
    let trace = compute_trace(&ctx.params, &sc, ctx.seed)?;
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("spectrum.csv", |w| Ok(trace.write_csv(w)?))?;
    let mut notes = SpectrumNotes {
        provenance: trace.provenance.as_str(),
        ..SpectrumNotes::default()
    };

    if sc.fit {
        let fit = fit_trace(&trace, &ctx.params, ctx.seed)?;
        out.write("fit.json", |w| {
            writeln!(w, "{}", fit.to_json()?)?;
            Ok(())
        })?;
        let cmp = eigenvalue_comparison(&fit, &ctx.params);
        let ok = fit.residual_norm <= sc.residual_threshold;
        if !ok {
            log::warn!(
                "fit residual {} exceeds the threshold {}",
                fit.residual_norm,
                sc.residual_threshold
            );
        }
        notes.fit_residual = Some(fit.residual_norm);
        notes.residual_threshold = Some(sc.residual_threshold);
        notes.fit_below_threshold = Some(ok);
        notes.fit_ill_conditioned = Some(fit.uncertainties.ill_conditioned);
        notes.max_eigenvalue_deviation = Some(cmp.max_component_deviation());
    }

    if sc.pair_gamma2 {
        if ctx.params.gamma2 > 0.0 {
            let folded = Params {
                gamma1: ctx.params.gamma1 + ctx.params.gamma2,
                gamma2: 0.0,
                ..ctx.params
            };
            let off = compute_trace(&folded, &sc, ctx.seed)?;
            out.write("spectrum_gamma2_off.csv", |w| Ok(off.write_csv(w)?))?;
            let n = trace.len() as f64;
            let rms = (trace
                .transmission
                .iter()
                .zip(&off.transmission)
                .map(|(a, b)| if *b > 0.0 { ((a - b) / b).powi(2) } else { 0.0 })
                .sum::<f64>()
                / n)
                .sqrt();
            notes.gamma2_rms_relative_change = Some(rms);
        } else {
            log::warn!("pair_gamma2 requested but gamma2 = 0; no paired trace written");
        }
    }
    out.finish("spectrum", &ctx.record(), &notes)
}

pub fn eigensweep(ctx: &Context) -> CliResult<PathBuf> {
    let ec = &ctx.config.eigensweep;
    if ec.values.is_empty() {
        return Err(CliError::Config(
            "eigensweep needs at least one value".into(),
        ));
    }
    if ec.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(CliError::Config(
            "eigensweep values must be finite and non-negative".into(),
        ));
    }
    let sc = ctx.config.spectrum;
    let mut rows = Vec::with_capacity(ec.values.len());
    let mut seeds = Vec::with_capacity(ec.values.len());
    for (k, &v) in ec.values.iter().enumerate() {
        let p = match ec.axis {
            SweepAxis::G => ctx.params.with_g(v),
            SweepAxis::Omega => ctx.params.with_omega(v),
        };
        let seed = derive_seed(ctx.seed, k as u64);
        seeds.push(seed);
        log::info!("sweep point {k}: {} = {v}", ec.axis.as_str());
        let trace = compute_trace(&p, &sc, seed)?;
        let fit = fit_trace(&trace, &p, seed)?;
        let cmp = eigenvalue_comparison(&fit, &p);
        rows.push(SweepRow::new(
            ec.axis,
            v,
            &cmp,
            fit.residual_norm,
            fit.converged,
        ));
    }
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("eigensweep.csv", |w| Ok(write_sweep_csv(&rows, w)?))?;

    #[derive(Serialize)]
    struct Notes {
        axis: &'static str,
        point_seeds: Vec<u64>,
        max_deviation: f64,
    }
    let notes = Notes {
        axis: ec.axis.as_str(),
        point_seeds: seeds,
        max_deviation: rows.iter().map(SweepRow::max_deviation).fold(0.0, f64::max),
    };
    out.finish("eigensweep", &ctx.record(), &notes)
}

fn direction_name(d: SweepDirection) -> &'static str {
    match d {
        SweepDirection::GSweep => "g",
        SweepDirection::OmegaSweep => "omega",
    }
}

pub fn scaling(ctx: &Context) -> CliResult<PathBuf> {
    let sc = &ctx.config.scaling;
    sc.offsets.validate("offsets")?;
    if !(sc.offsets.min > 0.0) {
        return Err(CliError::Config("scaling offsets must be positive".into()));
    }
    if sc.directions.is_empty() {
        return Err(CliError::Config("no scaling direction selected".into()));
    }
    let mut dirs = sc.directions.clone();
    dirs.dedup();
    let offsets = sc.offsets.logarithmic();

    #[derive(Serialize)]
    struct Exponent {
        direction: &'static str,
        component: String,
        free_exponent: f64,
        exponent_ci: Option<(f64, f64)>,
        fixed_residual: f64,
        free_residual: f64,
    }
    #[derive(Serialize)]
    struct Notes {
        exponents: Vec<Exponent>,
        warnings: Vec<String>,
    }
    let mut notes = Notes {
        exponents: Vec::new(),
        warnings: Vec::new(),
    };
    let mut out = OutputDir::create(&ctx.out)?;
    for dir in dirs {
        let fit = scaling_analysis(ctx.params.gamma(), ctx.params.kappa, dir, &offsets)?;
        let name = direction_name(dir);
        out.write_json(&format!("scaling_{name}.json"), &fit)?;
        out.write(&format!("scaling_{name}_samples.csv"), |w| {
            Ok(write_samples_csv(&fit.samples, w)?)
        })?;
        for c in &fit.components {
            notes.exponents.push(Exponent {
                direction: name,
                component: c.label.clone(),
                free_exponent: c.free.exponent,
                exponent_ci: c.free.exponent_ci,
                fixed_residual: c.fixed.residual_norm,
                free_residual: c.free.residual_norm,
            });
        }
        notes
            .warnings
            .extend(fit.warnings.iter().map(|w| format!("{name}: {w}")));
    }
    out.finish("scaling", &ctx.record(), &notes)
}

/// EP3 for explicit rates, or for the run's parameters in their own unit.
pub fn ep3(ctx: &Context, gamma: Option<f64>, kappa: Option<f64>) -> CliResult<Ep3> {
    let gamma = gamma.unwrap_or(ctx.source_params.gamma());
    let kappa = kappa.unwrap_or(ctx.source_params.kappa);
    Ok(ep3_analytic(gamma, kappa)?)
}
