//! `efp`: runs, convergence studies, phase tables and references.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical abort
//! (blow-up, unreachable quadrature tolerance), 3 I/O failure.

mod opts;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use efp_core::experiments::{emit_report, spatial_study, temporal_study, Coupling, Norm, ReferenceParams, StudyConfig, StudyScheme, Sweep};
use efp_core::potentials::{phase_projection, PotentialSpec};
use efp_core::propagators::{refined_reference, reference_solution, run, FswqInit, InitialDatum, ReferenceSpec, Scheme, SchemeConfig};
use efp_core::spectral::{diff_norm, save_spectral_csv, Domain};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;

use opts::{CoeffOpts, ReferenceOpts, SolveOpts, StudyOpts};

#[derive(Parser, Debug)]
#[command(name = "efp", version, about = "Extended Fourier pseudospectral solvers for the 1D Gross-Pitaevskii equation")]
struct Cli {
    /// TOML file with option values; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the fully resolved options as TOML ("-" for stdout) and exit
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,
    /// Not supported: every command is deterministic
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scheme and write snapshots plus a manifest
    Solve(SolveOpts),
    /// Errors against a reference for a sweep of grids at fixed tau
    SpatialStudy(StudyOpts),
    /// Errors against a reference with tau tied to h by C:gamma couplings
    TemporalStudy(StudyOpts),
    /// Tabulate P_2N(e^{-i tau V}) with a JSON sidecar
    PotentialCoeffs(CoeffOpts),
    /// Compute or look up a cached STeFP reference solution
    Reference(ReferenceOpts),
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(efp_core::Error),
}

impl From<efp_core::Error> for CliError {
    fn from(e: efp_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use efp_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 1,
            CliError::Core(E::Blowup { .. } | E::Quadrature { .. }) => 2,
            CliError::Core(E::Io { .. } | E::Parse { .. }) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("efp: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `efp <command> --help` for the available options");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if cli.seed.is_some() {
        return Err(usage("--seed is not supported: every command is deterministic"));
    }
    let config = cli.config.as_deref();
    let dump = cli.dump_config.as_deref();
    match cli.command {
        Command::Solve(mut o) => {
            if let Some(file) = load_config::<SolveOpts>(config)? {
                o.merge(file);
            }
            o.fill_defaults();
            if dump_config(&o, dump)? {
                return Ok(());
            }
            solve(&o)
        }
        Command::SpatialStudy(mut o) => {
            if let Some(file) = load_config::<StudyOpts>(config)? {
                o.merge(file);
            }
            o.fill_spatial_defaults();
            if dump_config(&o, dump)? {
                return Ok(());
            }
            study(&o, false)
        }
        Command::TemporalStudy(mut o) => {
            if let Some(file) = load_config::<StudyOpts>(config)? {
                o.merge(file);
            }
            o.fill_temporal_defaults();
            if dump_config(&o, dump)? {
                return Ok(());
            }
            study(&o, true)
        }
        Command::PotentialCoeffs(mut o) => {
            if let Some(file) = load_config::<CoeffOpts>(config)? {
                o.merge(file);
            }
            o.fill_defaults();
            if dump_config(&o, dump)? {
                return Ok(());
            }
            potential_coeffs(&o)
        }
        Command::Reference(mut o) => {
            if let Some(file) = load_config::<ReferenceOpts>(config)? {
                o.merge(file);
            }
            o.fill_defaults();
            if dump_config(&o, dump)? {
                return Ok(());
            }
            reference(&o)
        }
    }
}

fn load_config<T: DeserializeOwned>(path: Option<&Path>) -> CliResult<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| efp_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text)
        .map(Some)
        .map_err(|e| usage(format!("bad config file {}: {e}", path.display())))
}

/// Writes `opts` as TOML when requested; returns whether it did.
fn dump_config<T: Serialize>(opts: &T, path: Option<&Path>) -> CliResult<bool> {
    let Some(path) = path else { return Ok(false) };
    let text = toml::to_string(opts).map_err(|e| usage(format!("cannot serialise options: {e}")))?;
    if path == Path::new("-") {
        print!("{text}");
    } else {
        std::fs::write(path, text).map_err(|e| efp_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(true)
}

fn potential(name: &Option<String>) -> CliResult<PotentialSpec> {
    let name = name
        .as_deref()
        .ok_or_else(|| usage("missing --potential (one of zero, v1, v2, v3, v4)"))?;
    Ok(PotentialSpec::by_name(name, Domain::default())?)
}

fn datum(amplitude: f64) -> CliResult<InitialDatum> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(usage(format!("amplitude must be positive, got {amplitude}")));
    }
    if amplitude == 1.0 {
        return Ok(InitialDatum::gaussian());
    }
    Ok(InitialDatum::new(format!("gaussian-a{amplitude:e}"), move |x| {
        Complex64::new(amplitude * (-x * x / 2.0).exp(), 0.0)
    }))
}

fn fswq_init(s: &str) -> CliResult<FswqInit> {
    match s {
        "paper" => Ok(FswqInit::Paper),
        "plain" => Ok(FswqInit::Plain),
        other => Err(usage(format!("--fswq-init must be paper or plain, got '{other}'"))),
    }
}

fn solve_scheme(s: &str, n: usize) -> CliResult<Scheme> {
    match s {
        "lt-efp" => Ok(Scheme::LtEfp),
        "st-efp" => Ok(Scheme::StEfp),
        "fp" => Ok(Scheme::Fswq { m: n }),
        _ => s
            .strip_prefix("fswq-")
            .and_then(|m| m.parse().ok())
            .map(|m| Scheme::Fswq { m })
            .ok_or_else(|| usage(format!("unknown scheme '{s}' (lt-efp, st-efp, fp or fswq-<M>)"))),
    }
}

fn solve(o: &SolveOpts) -> CliResult<()> {
    let n = o.n.unwrap();
    let cfg = SchemeConfig::new(solve_scheme(o.scheme.as_deref().unwrap(), n)?, n, o.tau.unwrap(), o.t.unwrap(), potential(&o.potential)?)
        .with_beta(o.beta.unwrap())
        .with_sigma(o.sigma.unwrap())
        .with_fswq_init(fswq_init(o.fswq_init.as_deref().unwrap())?);
    cfg.validate()?;
    let traj = run(&cfg, &datum(o.amplitude.unwrap())?, o.stride.unwrap())?;
    let manifest = traj.write(o.out.as_deref().unwrap())?;
    let last = traj.last().expect("trajectory has an initial snapshot");
    println!(
        "{} {} N = {} tau = {:e}: {} steps to t = {}",
        cfg.scheme.label(),
        cfg.potential.name(),
        cfg.n,
        cfg.tau,
        last.step,
        last.time
    );
    println!("final L2 norm {:.15e}", last.field.norm(0));
    println!("final H1 norm {:.15e}", last.field.norm(1));
    println!("manifest {}", manifest.display());
    Ok(())
}

fn study(o: &StudyOpts, temporal: bool) -> CliResult<()> {
    let grids = o.grids.clone().unwrap();
    let sweep = if temporal {
        let couplings = o
            .couplings
            .as_ref()
            .unwrap()
            .iter()
            .map(|c| Coupling::parse(c))
            .collect::<Result<Vec<_>, _>>()?;
        Sweep::Temporal { grids, couplings }
    } else {
        Sweep::Spatial { grids, tau: o.tau.unwrap() }
    };
    let reference = ReferenceParams {
        n_ref: o.n_ref.unwrap(),
        tau_ref: o.tau_ref.unwrap(),
        self_check: o.self_check.unwrap(),
        cache_dir: o.cache_dir.clone(),
    };
    let mut cfg = StudyConfig::new(sweep, StudyScheme::parse(o.scheme.as_deref().unwrap())?, potential(&o.potential)?, o.t.unwrap(), reference);
    cfg.beta = o.beta.unwrap();
    cfg.sigma = o.sigma.unwrap();
    cfg.psi0 = datum(o.amplitude.unwrap())?;
    cfg.fswq_init = fswq_init(o.fswq_init.as_deref().unwrap())?;
    cfg.norms = Norm::parse_list(&o.norms.as_ref().unwrap().join(","))?;
    cfg.theorem_regime = o.theorem_regime.unwrap();
    cfg.jobs = o.jobs.unwrap();
    cfg.timing = o.timing.unwrap();
    let report = if temporal { temporal_study(&cfg)? } else { spatial_study(&cfg)? };
    let out = o.out.as_deref().unwrap();
    emit_report(&report, out)?;
    for f in &report.fits {
        let coupling = f.coupling.map(|c| format!(" tau = {}h^{}", c.c, c.gamma)).unwrap_or_default();
        match f.fit {
            Some(fit) => println!(
                "{}{coupling}: slope {:.3}, residual {:.3}, {} points ({} below floor)",
                f.norm, fit.slope, fit.residual, f.points, f.floored
            ),
            None => println!(
                "{}{coupling}: no slope, {} of {} points below the reference floor {:.2e}",
                f.norm,
                f.floored,
                f.points + f.floored,
                report.floor(f.norm)
            ),
        }
    }
    println!("report {}", out.display());
    Ok(())
}

fn potential_coeffs(o: &CoeffOpts) -> CliResult<()> {
    let spec = potential(&o.potential)?;
    let tol = o.tol.unwrap();
    let table = phase_projection(&spec, o.tau.unwrap(), o.n.unwrap(), tol)?;
    let csv = o.out.clone().unwrap();
    save_spectral_csv(&csv, &table.coeffs)?;
    let sidecar = csv.with_extension("json");
    std::fs::write(&sidecar, table.sidecar_json(spec.name(), tol)).map_err(|e| efp_core::Error::Io {
        path: sidecar.clone(),
        source: e,
    })?;
    println!("provenance {}", table.provenance);
    println!("achieved tolerance {:e}", table.achieved_tolerance());
    println!("table {} (sidecar {})", csv.display(), sidecar.display());
    Ok(())
}

fn reference(o: &ReferenceOpts) -> CliResult<()> {
    let spec = ReferenceSpec {
        sigma: o.sigma.unwrap(),
        psi0: datum(o.amplitude.unwrap())?,
        ..ReferenceSpec::new(potential(&o.potential)?, o.beta.unwrap(), o.t.unwrap(), o.n_ref.unwrap(), o.tau_ref.unwrap())
    };
    let dir = o.cache_dir.as_deref().unwrap();
    let field = reference_solution(&spec, Some(dir))?;
    println!("reference {}", dir.join(spec.cache_file_name()).display());
    println!("L2 norm {:.15e}, H1 norm {:.15e}", field.norm(0), field.norm(1));
    if o.self_check.unwrap() {
        let finer = refined_reference(&spec, Some(dir))?;
        println!(
            "self-consistency against N = {}, tau = {:e}: l2 {:.3e}, h1 {:.3e}",
            2 * spec.n_ref,
            spec.tau_ref / 2.0,
            diff_norm(&field, &finer, 0)?,
            diff_norm(&field, &finer, 1)?
        );
    }
    if let Some(out) = &o.out {
        save_spectral_csv(out, &field)?;
        println!("copy {}", out.display());
    }
    Ok(())
}
