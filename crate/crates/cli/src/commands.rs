use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use piqsim_core::analytic::{meanfield_delay_estimate, MeanField};
use piqsim_core::dynamics::{
    evolve_populations, sweep as pulse_sweep, write_metrics_csv, write_trajectory_csv, PulseOptions,
};
use piqsim_core::motional::{
    thomas_fermi_x, write_rates_csv, CustomIsotropic, MotionalModel, RadialDensity, RateRow,
    TabulatedDensity,
};
use piqsim_core::ode::Tolerances;
use piqsim_core::oracle::{run_oracle, write_oracle_csv, OracleOptions, MAX_ATOMS};
use piqsim_core::state::fmt_f64;
use piqsim_core::{Populations, SystemParams};

use crate::config::{check_output, load, merge, resolve_dgamma, Grid, InitialSpec};

/// Finished command output, written only after everything succeeded.
pub struct Output {
    pub bytes: Vec<u8>,
    /// Set when the output is complete but reports a failed check.
    pub failure: Option<String>,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            failure: None,
        }
    }
}

fn tolerances(rtol: Option<f64>, atol: Option<f64>) -> Result<Tolerances> {
    let tol = Tolerances::new(rtol.unwrap_or(1e-10), atol.unwrap_or(1e-12));
    tol.validate()?;
    Ok(tol)
}

fn sample_grid(t_end: f64, samples: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        bail!("t-end must be positive, got {t_end}");
    }
    if samples < 2 {
        bail!("samples must be at least 2, got {samples}");
    }
    let last = samples - 1;
    Ok((0..samples)
        .map(|k| {
            if k == last {
                t_end
            } else {
                t_end * k as f64 / last as f64
            }
        })
        .collect())
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvolveArgs {
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of atoms.
    #[arg(long)]
    n: Option<usize>,
    /// Collective-rate deficit gamma0 - gamma (default 0).
    #[arg(long)]
    dgamma: Option<f64>,
    /// Off-diagonal decay rate, instead of dgamma.
    #[arg(long)]
    gamma: Option<f64>,
    /// Dipole-dipole shift (default 0).
    #[arg(long)]
    ddd: Option<f64>,
    /// fully_excited, ground or dicke:2J,2M (default fully_excited).
    #[arg(long)]
    initial: Option<InitialSpec>,
    /// Final time (default 10).
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of equally spaced sample times including 0 and t-end (default 201).
    #[arg(long)]
    samples: Option<usize>,
    /// Relative tolerance of the integrator (default 1e-10).
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute tolerance of the integrator (default 1e-12).
    #[arg(long)]
    atol: Option<f64>,
    /// Append one column per population.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    populations: Option<bool>,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn evolve(mut a: EvolveArgs) -> Result<(Option<PathBuf>, Output)> {
    let mut f: EvolveArgs = load(a.config.as_deref())?;
    let dgamma = resolve_dgamma((a.gamma, a.dgamma), (f.gamma, f.dgamma), 0.0)?;
    merge!(a, f; n, ddd, initial, t_end, samples, rtol, atol, populations, output);
    check_output(a.output.as_ref())?;
    let n = a.n.context("missing --n")?;
    let params = SystemParams::new(n, dgamma, a.ddd.unwrap_or(0.0))?;
    let initial = match a.initial.unwrap_or(InitialSpec::FullyExcited) {
        InitialSpec::FullyExcited => Populations::dicke(n, n as u32, n as i32)?,
        InitialSpec::Ground => Populations::dicke(n, n as u32, -(n as i32))?,
        InitialSpec::Dicke(j, m) => Populations::dicke(n, j, m)?,
    };
    let t_end = a.t_end.unwrap_or(10.0);
    let grid = sample_grid(t_end, a.samples.unwrap_or(201))?;
    let tol = tolerances(a.rtol, a.atol)?;
    let traj = evolve_populations(&params, &initial, t_end, tol, &grid)?;
    let mut bytes = Vec::new();
    write_trajectory_csv(&mut bytes, &params, &traj, a.populations.unwrap_or(false))?;
    Ok((a.output, Output::ok(bytes)))
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepArgs {
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Atom numbers, e.g. `3:30:1` or `10,20`.
    #[arg(long)]
    n: Option<Grid>,
    /// dgamma values, e.g. `0:1:0.02`.
    #[arg(long)]
    dgamma: Option<Grid>,
    /// Dipole-dipole shift (default 0).
    #[arg(long)]
    ddd: Option<f64>,
    /// Minimum integration horizon (default 10).
    #[arg(long)]
    horizon: Option<f64>,
    /// Relative tolerance of the integrator (default 1e-8).
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute tolerance of the integrator (default 1e-10).
    #[arg(long)]
    atol: Option<f64>,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn sweep(mut a: SweepArgs) -> Result<(Option<PathBuf>, Output)> {
    let mut f: SweepArgs = load(a.config.as_deref())?;
    merge!(a, f; n, dgamma, ddd, horizon, rtol, atol, output);
    check_output(a.output.as_ref())?;
    let ns = a.n.context("missing --n")?.counts("atom numbers")?;
    let dgammas = a.dgamma.context("missing --dgamma")?.0;
    let ddd = a.ddd.unwrap_or(0.0);
    let mut opts = PulseOptions::default();
    opts.tol = Tolerances::new(
        a.rtol.unwrap_or(opts.tol.rtol),
        a.atol.unwrap_or(opts.tol.atol),
    );
    opts.tol.validate()?;
    if let Some(h) = a.horizon {
        opts.horizon = h;
    }
    for &n in &ns {
        for &dg in &dgammas {
            SystemParams::new(n, dg, ddd)?;
        }
    }
    let rows = pulse_sweep(&ns, &dgammas, ddd, &opts)?;
    let mut bytes = Vec::new();
    write_metrics_csv(&mut bytes, &rows)?;
    Ok((a.output, Output::ok(bytes)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gaussian,
    ThomasFermi,
    ThermalBose,
    ThermalCloud,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// Where the model supports it and k0 > 0.
    Auto,
    /// Always; unsupported models and k0 = 0 are errors.
    On,
    Off,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RatesArgs {
    /// Motional state.
    #[arg(value_enum)]
    model: Option<ModelKind>,
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Lamb-Dicke parameter k0 ell (gaussian, thermal-bose; thomas-fermi with --atoms).
    #[arg(long)]
    eta: Option<Grid>,
    /// k0 R_TF (thomas-fermi).
    #[arg(long)]
    x: Option<Grid>,
    /// Atom number, to derive x from eta (thomas-fermi).
    #[arg(long)]
    atoms: Option<f64>,
    /// Scattering length over oscillator width, to derive x from eta (thomas-fermi).
    #[arg(long)]
    a_over_ell: Option<f64>,
    /// beta hbar Omega (thermal-bose).
    #[arg(long)]
    beta_omega: Option<Grid>,
    /// Fugacity in [0, 1] (thermal-bose).
    #[arg(long)]
    z: Option<Grid>,
    /// k0 R (thermal-cloud).
    #[arg(long)]
    k0r: Option<Grid>,
    /// Two-column CSV `r,rho1` (custom).
    #[arg(long)]
    density: Option<PathBuf>,
    /// Radiation wavenumber in the density's length unit (custom).
    #[arg(long)]
    k0: Option<Grid>,
    /// Dipole-dipole shift column (default auto).
    #[arg(long, value_enum)]
    delta: Option<DeltaMode>,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn required<'a>(grid: &'a Option<Grid>, flag: &str, model: &str) -> Result<&'a [f64]> {
    match grid {
        Some(g) => Ok(&g.0),
        None => bail!("{model} needs --{flag}"),
    }
}

fn models(a: &RatesArgs, kind: ModelKind) -> Result<Vec<MotionalModel>> {
    let out = match kind {
        ModelKind::Gaussian => required(&a.eta, "eta", "gaussian")?
            .iter()
            .map(|&eta| MotionalModel::GaussianGround { eta })
            .collect(),
        ModelKind::ThomasFermi => match (&a.x, a.atoms, a.a_over_ell) {
            (Some(x), None, None) => {
                x.0.iter()
                    .map(|&x| MotionalModel::ThomasFermi { x })
                    .collect()
            }
            (None, Some(atoms), Some(ratio)) => required(&a.eta, "eta", "thomas-fermi")?
                .iter()
                .map(|&eta| {
                    Ok(MotionalModel::ThomasFermi {
                        x: thomas_fermi_x(eta, atoms, ratio)?,
                    })
                })
                .collect::<Result<_>>()?,
            _ => bail!("thomas-fermi needs either --x or all of --eta, --atoms and --a-over-ell"),
        },
        ModelKind::ThermalBose => {
            let etas = required(&a.eta, "eta", "thermal-bose")?;
            let bs = required(&a.beta_omega, "beta-omega", "thermal-bose")?;
            let zs = required(&a.z, "z", "thermal-bose")?;
            let mut out = Vec::new();
            for &beta_omega in bs {
                for &z in zs {
                    for &eta in etas {
                        out.push(MotionalModel::ThermalBose { eta, beta_omega, z });
                    }
                }
            }
            out
        }
        ModelKind::ThermalCloud => required(&a.k0r, "k0r", "thermal-cloud")?
            .iter()
            .map(|&k0r| MotionalModel::ThermalCloud { k0r })
            .collect(),
        ModelKind::Custom => {
            let path = a.density.as_deref().context("custom needs --density")?;
            let density = read_density(path)?;
            required(&a.k0, "k0", "custom")?
                .iter()
                .map(|&k0| {
                    Ok(MotionalModel::CustomIsotropic(CustomIsotropic::new(
                        density.clone(),
                        k0,
                    )?))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(out)
}

fn read_density(path: &Path) -> Result<RadialDensity> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open density file {}", path.display()))?;
    let table = TabulatedDensity::read_csv(file)
        .with_context(|| format!("invalid density file {}", path.display()))?;
    Ok(RadialDensity::Tabulated(table))
}

fn wavenumber(m: &MotionalModel) -> f64 {
    match m {
        MotionalModel::GaussianGround { eta } | MotionalModel::ThermalBose { eta, .. } => *eta,
        MotionalModel::ThomasFermi { x } => *x,
        MotionalModel::ThermalCloud { k0r } => *k0r,
        MotionalModel::CustomIsotropic(c) => c.k0(),
    }
}

pub fn rates(mut a: RatesArgs) -> Result<(Option<PathBuf>, Output)> {
    let mut f: RatesArgs = load(a.config.as_deref())?;
    merge!(a, f; model, eta, x, atoms, a_over_ell, beta_omega, z, k0r, density, k0, delta, output);
    check_output(a.output.as_ref())?;
    let kind = a
        .model
        .context("missing model (gaussian, thomas-fermi, thermal-bose, thermal-cloud or custom)")?;
    let delta = a.delta.unwrap_or(DeltaMode::Auto);
    if delta == DeltaMode::On && kind == ModelKind::ThermalBose {
        return Err(piqsim_core::Error::Unsupported(
            "dipole-dipole shift for the thermal-bose model".into(),
        )
        .into());
    }
    let list = models(&a, kind)?;
    let rows = list
        .par_iter()
        .map(|m| {
            let with_delta = match delta {
                DeltaMode::On => true,
                DeltaMode::Off => false,
                DeltaMode::Auto => kind != ModelKind::ThermalBose && wavenumber(m) > 0.0,
            };
            RateRow::compute(m, with_delta)
        })
        .collect::<piqsim_core::Result<Vec<_>>>()?;
    let mut bytes = Vec::new();
    write_rates_csv(&mut bytes, &rows)?;
    Ok((a.output, Output::ok(bytes)))
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OracleArgs {
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Atom numbers, at most 6 (default 2:6:1).
    #[arg(long)]
    n: Option<Grid>,
    /// Number of random cases per N (default 10).
    #[arg(long)]
    seeds: Option<u64>,
    /// First seed (default 0).
    #[arg(long)]
    seed_start: Option<u64>,
    /// Final time (default 8).
    #[arg(long)]
    t_end: Option<f64>,
    /// Sample times including 0 and t-end (default 50).
    #[arg(long)]
    samples: Option<usize>,
    /// Largest accepted deviation of I and <J_z> (default 1e-6).
    #[arg(long)]
    threshold: Option<f64>,
    /// Dipole-dipole shifts are drawn from [-max-ddd, max-ddd] (default 2).
    #[arg(long)]
    max_ddd: Option<f64>,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn oracle(mut a: OracleArgs) -> Result<(Option<PathBuf>, Output)> {
    let mut f: OracleArgs = load(a.config.as_deref())?;
    merge!(a, f; n, seeds, seed_start, t_end, samples, threshold, max_ddd, output);
    check_output(a.output.as_ref())?;
    let ns =
        a.n.unwrap_or(Grid(vec![2.0, 3.0, 4.0, 5.0, 6.0]))
            .counts("atom numbers")?;
    if let Some(&n) = ns.iter().find(|&&n| n > MAX_ATOMS) {
        return Err(piqsim_core::Error::Capacity { n, max: MAX_ATOMS }.into());
    }
    let defaults = OracleOptions::default();
    let opts = OracleOptions {
        t_end: a.t_end.unwrap_or(defaults.t_end),
        samples: a.samples.unwrap_or(defaults.samples),
        threshold: a.threshold.unwrap_or(defaults.threshold),
        max_ddd: a.max_ddd.unwrap_or(defaults.max_ddd),
        ..defaults
    };
    sample_grid(opts.t_end, opts.samples)?;
    if !(opts.threshold > 0.0) || !(opts.max_ddd >= 0.0) || !opts.max_ddd.is_finite() {
        bail!("threshold must be positive and max-ddd finite and nonnegative");
    }
    let start = a.seed_start.unwrap_or(0);
    let count = a.seeds.unwrap_or(10);
    if count == 0 {
        bail!("seeds must be positive");
    }
    let end = start.checked_add(count).context("seed range overflows")?;
    let seeds: Vec<u64> = (start..end).collect();
    let rows = run_oracle(&ns, &seeds, &opts)?;
    let mut bytes = Vec::new();
    write_oracle_csv(&mut bytes, &rows)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let failure = (failed > 0).then(|| format!("{failed} of {} oracle cases failed", rows.len()));
    Ok((a.output, Output { bytes, failure }))
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct MeanfieldArgs {
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Number of atoms.
    #[arg(long)]
    n: Option<usize>,
    /// Collective-rate deficit gamma0 - gamma (default 0).
    #[arg(long)]
    dgamma: Option<f64>,
    /// Off-diagonal decay rate, instead of dgamma.
    #[arg(long)]
    gamma: Option<f64>,
    /// Dipole-dipole shift (default 0).
    #[arg(long)]
    ddd: Option<f64>,
    /// Pulse delay (default ln N / (N gamma)).
    #[arg(long)]
    t_i: Option<f64>,
    /// Initial relative phase (default 0).
    #[arg(long)]
    theta0: Option<f64>,
    /// Final time (default 3 t-i).
    #[arg(long)]
    t_end: Option<f64>,
    /// Sample times including 0 and t-end (default 201).
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn meanfield(mut a: MeanfieldArgs) -> Result<(Option<PathBuf>, Output)> {
    let mut f: MeanfieldArgs = load(a.config.as_deref())?;
    let dgamma = resolve_dgamma((a.gamma, a.dgamma), (f.gamma, f.dgamma), 0.0)?;
    merge!(a, f; n, ddd, t_i, theta0, t_end, samples, output);
    check_output(a.output.as_ref())?;
    let n = a.n.context("missing --n")?;
    let params = SystemParams::new(n, dgamma, a.ddd.unwrap_or(0.0))?;
    let t_i = match a.t_i {
        Some(t) => t,
        None => meanfield_delay_estimate(n, params.gamma())?,
    };
    let mf =
        MeanField::new(n, params.gamma(), params.ddd(), t_i)?.with_theta0(a.theta0.unwrap_or(0.0));
    let grid = sample_grid(a.t_end.unwrap_or(3.0 * t_i), a.samples.unwrap_or(201))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "p", "theta", "intensity"])?;
    for t in grid {
        w.write_record([
            fmt_f64(t),
            fmt_f64(mf.p(t)),
            fmt_f64(mf.theta(t)),
            fmt_f64(mf.intensity(t)),
        ])?;
    }
    let bytes = w.into_inner().context("cannot buffer the output")?;
    Ok((a.output, Output::ok(bytes)))
}
