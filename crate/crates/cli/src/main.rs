use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ep3_cli::commands;
use ep3_cli::config::{AxisSpec, Method, SweepAxis};
use ep3_cli::error::EXIT_CONFIG;
use ep3_cli::{CliError, CliResult, Context, RunConfig};
use ep3_core::spectral::SweepDirection;
use ep3_core::Unit;

#[derive(Parser, Debug)]
#[command(
    name = "ep3",
    version,
    about = "Third-order exceptional points of a driven ion-cavity system"
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON parameter file {g, omega, gamma1, gamma2, kappa, epsilon, unit}.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed of all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Unit of the parameter file, overriding its `unit` field.
    #[arg(long, global = true, value_enum)]
    unit: Option<UnitArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Gamma,
    Mhz,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Gamma => Unit::GammaUnits,
            UnitArg::Mhz => Unit::MegahertzOver2Pi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    G,
    Omega,
}

#[derive(clap::Args, Debug, Default)]
struct SpectrumFlags {
    /// Detuning grid as min:max:n.
    #[arg(long)]
    deltas: Option<AxisSpec>,
    /// Exact Liouvillian steady state or Monte-Carlo trajectories.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Trajectories per detuning.
    #[arg(long)]
    n_traj: Option<usize>,
    /// Highest cavity Fock state kept.
    #[arg(long)]
    fock_cutoff: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalue sheets over (g, Omega), the EP2 locus and the EP3.
    Surfaces {
        /// g axis as min:max:n.
        #[arg(long)]
        g_axis: Option<AxisSpec>,
        /// Omega axis as min:max:n.
        #[arg(long)]
        omega_axis: Option<AxisSpec>,
    },
    /// Transmission spectrum, optionally fitted with the three-eigenvalue model.
    Spectrum {
        #[command(flatten)]
        flags: SpectrumFlags,
        /// Override the coupling of the parameter file.
        #[arg(long)]
        g: Option<f64>,
        /// Override the pump Rabi frequency of the parameter file.
        #[arg(long)]
        omega: Option<f64>,
        /// Skip the eigenvalue fit.
        #[arg(long)]
        no_fit: bool,
        /// Also write the trace with gamma2 folded into gamma1.
        #[arg(long)]
        pair_gamma2: bool,
    },
    /// Fitted versus numerical eigenvalues along a g or Omega sweep.
    Eigensweep {
        #[command(flatten)]
        flags: SpectrumFlags,
        /// Swept coupling; the other stays at its parameter-file value.
        #[arg(long, value_enum)]
        axis: Option<SweepAxis>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Cube-root splitting of the eigenvalues near the EP3.
    Scaling {
        /// Offsets from the EP3 as min:max:n, logarithmically spaced.
        #[arg(long)]
        offsets: Option<AxisSpec>,
        /// Sweep direction; repeat for both.
        #[arg(long, value_enum)]
        direction: Vec<DirectionArg>,
    },
    /// Prints the analytic EP3 for the given decay rates.
    Ep3 {
        /// Total atomic decay (default: from the parameters).
        #[arg(long)]
        gamma: Option<f64>,
        /// Cavity decay (default: from the parameters).
        #[arg(long)]
        kappa: Option<f64>,
    },
}

fn apply_spectrum_flags(cfg: &mut RunConfig, f: &SpectrumFlags) {
    let s = &mut cfg.spectrum;
    if let Some(d) = f.deltas {
        s.deltas = d;
    }
    if let Some(m) = f.method {
        s.method = m;
    }
    if let Some(n) = f.n_traj {
        s.trajectories.n_traj = n;
    }
    if let Some(n) = f.fock_cutoff {
        s.fock_cutoff = n;
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.params.is_some() {
        cfg.params = cli.params.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(u) = cli.unit {
        cfg.unit = Some(u.into());
    }
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    let mut overrides = (None, None);
    match &cli.command {
        Command::Surfaces { g_axis, omega_axis } => {
            if let Some(a) = g_axis {
                cfg.surfaces.g = *a;
            }
            if let Some(a) = omega_axis {
                cfg.surfaces.omega = *a;
            }
        }
        Command::Spectrum {
            flags,
            g,
            omega,
            no_fit,
            pair_gamma2,
        } => {
            apply_spectrum_flags(&mut cfg, flags);
            if *no_fit {
                cfg.spectrum.fit = false;
            }
            if *pair_gamma2 {
                cfg.spectrum.pair_gamma2 = true;
            }
            overrides = (*g, *omega);
        }
        Command::Eigensweep {
            flags,
            axis,
            values,
        } => {
            apply_spectrum_flags(&mut cfg, flags);
            if let Some(a) = axis {
                cfg.eigensweep.axis = *a;
            }
            if let Some(v) = values {
                cfg.eigensweep.values = v.clone();
            }
        }
        Command::Scaling { offsets, direction } => {
            if let Some(o) = offsets {
                cfg.scaling.offsets = *o;
            }
            if !direction.is_empty() {
                cfg.scaling.directions = direction
                    .iter()
                    .map(|d| match d {
                        DirectionArg::G => SweepDirection::GSweep,
                        DirectionArg::Omega => SweepDirection::OmegaSweep,
                    })
                    .collect();
            }
        }
        Command::Ep3 { .. } => {}
    }

    let mut ctx = Context::resolve(cfg, cli.out.clone())?;
    // Coupling overrides are given in gamma units.
    if let Some(g) = overrides.0 {
        ctx.params = ctx.params.with_g(g);
    }
    if let Some(w) = overrides.1 {
        ctx.params = ctx.params.with_omega(w);
    }
    ctx.params.validate()?;

    match cli.command {
        Command::Surfaces { .. } => commands::surfaces(&ctx).map(drop),
        Command::Spectrum { .. } => commands::spectrum(&ctx).map(drop),
        Command::Eigensweep { .. } => commands::eigensweep(&ctx).map(drop),
        Command::Scaling { .. } => commands::scaling(&ctx).map(drop),
        Command::Ep3 { gamma, kappa } => {
            let ep = commands::ep3(&ctx, gamma, kappa)?;
            println!("{}", serde_json::to_string_pretty(&ep)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
