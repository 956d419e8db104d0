//! Convergence studies against a fine STeFP reference, log-log order fits and
//! report emission (`errors.csv`, `orders.csv`, a gnuplot script).

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potentials::{PhaseFactorCache, PotentialSpec};
use crate::propagators::{advance, reference_solution, refined_reference, FswqInit, InitialDatum, ReferenceSpec, Scheme, SchemeConfig, Stepper};
use crate::spectral::{diff_norm, sobolev_norm, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Norm {
    L2,
    H1,
}

impl Norm {
    pub fn sobolev_order(self) -> u32 {
        match self {
            Norm::L2 => 0,
            Norm::H1 => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::H1 => "h1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2" => Ok(Norm::L2),
            "h1" => Ok(Norm::H1),
            other => Err(Error::config(format!("unknown norm '{other}' (expected l2 or h1)"))),
        }
    }

    /// Comma-separated list such as `l2,h1`; duplicates are dropped.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let norm = Norm::parse(part)?;
            if !out.contains(&norm) {
                out.push(norm);
            }
        }
        if out.is_empty() {
            return Err(Error::config("empty norm list"));
        }
        Ok(out)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Time-step/mesh coupling `tau ~ c h^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub c: f64,
    pub gamma: f64,
}

impl Coupling {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("coupling needs c > 0 and gamma > 0, got {c}:{gamma}")));
        }
        Ok(Self { c, gamma })
    }

    /// Parses `C:gamma`, e.g. `0.2:2`.
    pub fn parse(s: &str) -> Result<Self> {
        let (c, g) = s
            .split_once(':')
            .ok_or_else(|| Error::config(format!("coupling '{s}' is not of the form C:gamma")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad number '{v}' in coupling '{s}'")))
        };
        Coupling::new(parse(c)?, parse(g)?)
    }

    /// Largest step not above `c h^gamma` that divides `t_final` evenly.
    pub fn step(&self, h: f64, t_final: f64) -> f64 {
        let target = self.c * h.powf(self.gamma);
        if t_final == 0.0 {
            return target;
        }
        t_final / (t_final / target).ceil().max(1.0)
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.c, self.gamma)
    }
}

/// Scheme family of a study; FSwQ takes `M = m_factor * N` at each grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyScheme {
    LtEfp,
    StEfp,
    Fswq { m_factor: usize },
}

impl StudyScheme {
    pub fn at(&self, n: usize) -> Scheme {
        match *self {
            StudyScheme::LtEfp => Scheme::LtEfp,
            StudyScheme::StEfp => Scheme::StEfp,
            StudyScheme::Fswq { m_factor } => Scheme::Fswq { m: m_factor * n },
        }
    }

    pub fn label(&self) -> String {
        match self {
            StudyScheme::LtEfp => "lt-efp".into(),
            StudyScheme::StEfp => "st-efp".into(),
            StudyScheme::Fswq { m_factor } => format!("fswq-{m_factor}n"),
        }
    }

    /// `lt-efp`, `st-efp`, `fp` (FSwQ with `M = N`) or `fswq-<k>n`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "lt-efp" => return Ok(StudyScheme::LtEfp),
            "st-efp" => return Ok(StudyScheme::StEfp),
            "fp" => return Ok(StudyScheme::Fswq { m_factor: 1 }),
            _ => {}
        }
        s.strip_prefix("fswq-")
            .and_then(|r| r.strip_suffix('n'))
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .map(|m_factor| StudyScheme::Fswq { m_factor })
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown scheme '{s}' (expected lt-efp, st-efp, fp or fswq-<k>n)"
                ))
            })
    }
}

impl fmt::Display for StudyScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Fixed `tau`, varying `N`; slopes against `h`.
    Spatial { grids: Vec<usize>, tau: f64 },
    /// `tau` tied to `h` by each coupling; slopes against `tau`.
    Temporal { grids: Vec<usize>, couplings: Vec<Coupling> },
}

impl Sweep {
    pub fn grids(&self) -> &[usize] {
        match self {
            Sweep::Spatial { grids, .. } | Sweep::Temporal { grids, .. } => grids,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Sweep::Spatial { .. } => "spatial",
            Sweep::Temporal { .. } => "temporal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceParams {
    pub n_ref: usize,
    pub tau_ref: f64,
    /// Also compute the `(2 n_ref, tau_ref / 2)` reference and use the
    /// difference as the accuracy floor of the study.
    pub self_check: bool,
    pub cache_dir: Option<PathBuf>,
}

impl ReferenceParams {
    pub fn new(n_ref: usize, tau_ref: f64) -> Self {
        Self {
            n_ref,
            tau_ref,
            self_check: true,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub sweep: Sweep,
    pub scheme: StudyScheme,
    pub potential: PotentialSpec,
    pub beta: f64,
    pub sigma: f64,
    pub t_final: f64,
    pub norms: Vec<Norm>,
    pub reference: ReferenceParams,
    /// Refuse runs with `tau > h^2 / pi`.
    pub theorem_regime: bool,
    /// Worker threads; `1` runs sequentially.
    pub jobs: usize,
    /// Record wall time per run. Off by default so reports are byte-stable.
    pub timing: bool,
    pub fswq_init: FswqInit,
    pub psi0: InitialDatum,
}

impl StudyConfig {
    /// `beta = 1`, `sigma = 1`, both norms, Gaussian datum, sequential, no timing.
    pub fn new(sweep: Sweep, scheme: StudyScheme, potential: PotentialSpec, t_final: f64, reference: ReferenceParams) -> Self {
        Self {
            sweep,
            scheme,
            potential,
            beta: 1.0,
            sigma: 1.0,
            t_final,
            norms: vec![Norm::L2, Norm::H1],
            reference,
            theorem_regime: false,
            jobs: 1,
            timing: false,
            fswq_init: FswqInit::default(),
            psi0: InitialDatum::gaussian(),
        }
    }

    pub fn reference_spec(&self) -> ReferenceSpec {
        ReferenceSpec {
            potential: self.potential.clone(),
            beta: self.beta,
            sigma: self.sigma,
            t_final: self.t_final,
            n_ref: self.reference.n_ref,
            tau_ref: self.reference.tau_ref,
            psi0: self.psi0.clone(),
        }
    }

    fn scheme_config(&self, n: usize, tau: f64) -> SchemeConfig {
        SchemeConfig::new(self.scheme.at(n), n, tau, self.t_final, self.potential.clone())
            .with_beta(self.beta)
            .with_sigma(self.sigma)
            .with_fswq_init(self.fswq_init)
    }

    /// Every run of the study, ordered by `(N, tau)`.
    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        let length = self.potential.domain().length();
        let mut runs = Vec::new();
        match &self.sweep {
            Sweep::Spatial { grids, tau } => {
                for &n in grids {
                    runs.push(RunSpec { n, tau: *tau, coupling: None });
                }
            }
            Sweep::Temporal { grids, couplings } => {
                if couplings.is_empty() {
                    return Err(Error::config("temporal study needs at least one coupling"));
                }
                for &n in grids {
                    for c in couplings {
                        let h = length / n as f64;
                        runs.push(RunSpec {
                            n,
                            tau: c.step(h, self.t_final),
                            coupling: Some(*c),
                        });
                    }
                }
            }
        }
        runs.sort_by(|a, b| a.n.cmp(&b.n).then(a.tau.total_cmp(&b.tau)));
        Ok(runs)
    }

    pub fn validate(&self) -> Result<()> {
        let grids = self.sweep.grids();
        if grids.is_empty() {
            return Err(Error::config("study needs at least one grid"));
        }
        if self.norms.is_empty() {
            return Err(Error::config("study needs at least one norm"));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs must be at least 1"));
        }
        let finest = *grids.iter().max().unwrap();
        if self.reference.n_ref < finest {
            return Err(Error::config(format!(
                "reference grid N_ref = {} is coarser than the finest study grid N = {finest}",
                self.reference.n_ref
            )));
        }
        let length = self.potential.domain().length();
        for run in self.runs()? {
            self.scheme_config(run.n, run.tau).validate()?;
            let h = length / run.n as f64;
            if self.theorem_regime && run.tau > h * h / std::f64::consts::PI {
                return Err(Error::config(format!(
                    "theorem regime violated: tau = {:e} > h^2/pi = {:e} at N = {}",
                    run.tau,
                    h * h / std::f64::consts::PI,
                    run.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub n: usize,
    pub tau: f64,
    pub coupling: Option<Coupling>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub scheme: String,
    pub coupling: Option<Coupling>,
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    pub e_l2: f64,
    pub e_h1: f64,
    pub wall_ms: f64,
}

impl ErrorRow {
    pub fn error(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L2 => self.e_l2,
            Norm::H1 => self.e_h1,
        }
    }
}

/// Least-squares slope on `(log10 x, log10 e)` and the largest absolute
/// residual, in decades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub residual: f64,
}

/// Fitted order for one `(norm, coupling)` group of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFit {
    pub norm: Norm,
    pub coupling: Option<Coupling>,
    /// `None` when fewer than three points survive the floor filter.
    pub fit: Option<OrderFit>,
    pub points: usize,
    pub floored: usize,
    /// Errors never grow by more than 5% as `N` doubles.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub study: String,
    pub scheme: String,
    pub potential: String,
    pub beta: f64,
    pub sigma: f64,
    pub t_final: f64,
    pub reference_key: String,
    pub version: String,
    /// Accuracy floor per norm (`[l2, h1]`); points below ten times it are
    /// excluded from fits.
    pub floor: [f64; 2],
    pub self_checked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub meta: ReportMeta,
    pub norms: Vec<Norm>,
    pub rows: Vec<ErrorRow>,
    pub fits: Vec<GroupFit>,
}

impl ErrorReport {
    pub fn new(meta: ReportMeta, norms: Vec<Norm>) -> Self {
        Self {
            meta,
            norms,
            rows: Vec::new(),
            fits: Vec::new(),
        }
    }

    pub fn floor(&self, norm: Norm) -> f64 {
        self.meta.floor[norm.sobolev_order() as usize]
    }

    pub fn is_floored(&self, row: &ErrorRow, norm: Norm) -> bool {
        row.error(norm) < 10.0 * self.floor(norm)
    }

    pub fn fit(&self, norm: Norm, coupling: Option<Coupling>) -> Option<&GroupFit> {
        self.fits.iter().find(|f| f.norm == norm && f.coupling == coupling)
    }

    /// Rows of one coupling group, ordered by `N`.
    pub fn group(&self, coupling: Option<Coupling>) -> Vec<&ErrorRow> {
        let mut rows: Vec<_> = self.rows.iter().filter(|r| r.coupling == coupling).collect();
        rows.sort_by_key(|r| r.n);
        rows
    }

    fn couplings(&self) -> Vec<Option<Coupling>> {
        let mut out: Vec<Option<Coupling>> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.coupling) {
                out.push(r.coupling);
            }
        }
        out
    }

    /// Recomputes [`fits`](Self::fits) from the rows: abscissa `tau` for
    /// coupled rows, `h` otherwise.
    pub fn refit(&mut self) {
        let mut fits = Vec::new();
        for coupling in self.couplings() {
            let rows = self.group(coupling);
            for &norm in &self.norms {
                let monotone = rows
                    .windows(2)
                    .all(|p| p[1].error(norm) <= 1.05 * p[0].error(norm));
                let kept: Vec<_> = rows.iter().filter(|r| !self.is_floored(r, norm)).collect();
                let xs: Vec<f64> = kept
                    .iter()
                    .map(|r| if coupling.is_some() { r.tau } else { r.h })
                    .collect();
                let es: Vec<f64> = kept.iter().map(|r| r.error(norm)).collect();
                let fit = match fit_order(&xs, &es) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        log::info!("no {norm} order fitted: {e}");
                        None
                    }
                };
                fits.push(GroupFit {
                    norm,
                    coupling,
                    fit,
                    points: kept.len(),
                    floored: rows.len() - kept.len(),
                    monotone,
                });
            }
        }
        self.fits = fits;
    }
}

/// Ordinary least squares on `(log10 x, log10 e)`.
///
/// Non-positive errors are dropped with a warning; fewer than three remaining
/// points is an error.
pub fn fit_order(xs: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if xs.len() != errors.len() {
        return Err(Error::config(format!(
            "fit_order: {} abscissae but {} errors",
            xs.len(),
            errors.len()
        )));
    }
    let mut pts = Vec::with_capacity(xs.len());
    for (&x, &e) in xs.iter().zip(errors) {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::config(format!("fit_order: abscissa {x} is not positive")));
        }
        if !(e > 0.0 && e.is_finite()) {
            log::warn!("fit_order: dropping non-positive error {e} at x = {x}");
            continue;
        }
        pts.push((x.log10(), e.log10()));
    }
    if pts.len() < 3 {
        return Err(Error::config(format!(
            "fit_order needs at least 3 positive points, got {}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("fit_order: all abscissae coincide"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).abs())
        .fold(0.0, f64::max);
    Ok(OrderFit { slope, residual })
}

/// Spatial sweep: fixed `tau`, errors against `h`.
pub fn spatial_study(cfg: &StudyConfig) -> Result<ErrorReport> {
    if !matches!(cfg.sweep, Sweep::Spatial { .. }) {
        return Err(Error::config("spatial_study needs a spatial sweep"));
    }
    run_study(cfg)
}

/// Temporal sweep: `tau` coupled to `h`, errors against `tau`.
pub fn temporal_study(cfg: &StudyConfig) -> Result<ErrorReport> {
    if !matches!(cfg.sweep, Sweep::Temporal { .. }) {
        return Err(Error::config("temporal_study needs a temporal sweep"));
    }
    run_study(cfg)
}

fn run_study(cfg: &StudyConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let runs = cfg.runs()?;
    let ref_spec = cfg.reference_spec();
    let cache_dir = cfg.reference.cache_dir.as_deref();
    let reference = reference_solution(&ref_spec, cache_dir)?;

    // Round-off floor, raised to the reference self-consistency gap when checked.
    let mut floor = [0.0; 2];
    for norm in [Norm::L2, Norm::H1] {
        floor[norm.sobolev_order() as usize] = 64.0 * f64::EPSILON * sobolev_norm(&reference, norm.sobolev_order());
    }
    if cfg.reference.self_check {
        let finer = refined_reference(&ref_spec, cache_dir)?;
        for norm in [Norm::L2, Norm::H1] {
            let gap = diff_norm(&reference, &finer, norm.sobolev_order())?;
            let slot = &mut floor[norm.sobolev_order() as usize];
            *slot = slot.max(gap);
        }
        log::info!(
            "reference self-consistency: l2 {:e}, h1 {:e}",
            floor[0],
            floor[1]
        );
    }

    let rows: Vec<ErrorRow> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
        pool.install(|| runs.par_iter().map(|r| run_one(cfg, r, &reference)).collect::<Result<_>>())?
    } else {
        runs.iter().map(|r| run_one(cfg, r, &reference)).collect::<Result<_>>()?
    };

    let meta = ReportMeta {
        study: cfg.sweep.kind().into(),
        scheme: cfg.scheme.label(),
        potential: cfg.potential.name().into(),
        beta: cfg.beta,
        sigma: cfg.sigma,
        t_final: cfg.t_final,
        reference_key: ref_spec.cache_file_name(),
        version: env!("CARGO_PKG_VERSION").into(),
        floor,
        self_checked: cfg.reference.self_check,
    };
    let mut report = ErrorReport::new(meta, cfg.norms.clone());
    report.rows = rows;
    report.refit();
    if cfg.theorem_regime && matches!(cfg.sweep, Sweep::Spatial { .. }) {
        for f in report.fits.iter().filter(|f| !f.monotone) {
            log::warn!("{} errors grow under refinement by more than 5%", f.norm);
        }
    }
    Ok(report)
}

fn run_one(cfg: &StudyConfig, run: &RunSpec, reference: &SpectralField) -> Result<ErrorRow> {
    let sc = cfg.scheme_config(run.n, run.tau);
    let stepper = Stepper::new(&sc, PhaseFactorCache::global())?;
    let steps = sc.n_steps()?;
    let init = stepper.initial_state(&cfg.psi0)?;
    let start = Instant::now();
    let last = advance(&stepper, init, steps, |_| {})?;
    let wall_ms = if cfg.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let row = ErrorRow {
        scheme: sc.scheme.label(),
        coupling: run.coupling,
        n: run.n,
        h: sc.h(),
        tau: run.tau,
        e_l2: diff_norm(&last.spectral, reference, 0)?,
        e_h1: diff_norm(&last.spectral, reference, 1)?,
        wall_ms,
    };
    log::debug!(
        "{} N = {} tau = {:e}: l2 {:e}, h1 {:e}",
        row.scheme,
        row.n,
        row.tau,
        row.e_l2,
        row.e_h1
    );
    Ok(row)
}

pub const ERRORS_HEADER: &str = "scheme,potential,norm,N,h,tau,error,wall_ms";
pub const ORDERS_HEADER: &str = "scheme,potential,norm,coupling,against,slope,residual,points,floored,monotone";

/// `errors.csv` contents: one line per (run, norm).
pub fn errors_csv(report: &ErrorReport) -> String {
    let mut out = format!("{ERRORS_HEADER}\n");
    for row in &report.rows {
        for &norm in &report.norms {
            out.push_str(&format!(
                "{},{},{},{},{:e},{:e},{:.9e},{:.3}\n",
                row.scheme,
                report.meta.potential,
                norm,
                row.n,
                row.h,
                row.tau,
                row.error(norm),
                row.wall_ms
            ));
        }
    }
    out
}

/// `orders.csv` contents: one line per (norm, coupling).
pub fn orders_csv(report: &ErrorReport) -> String {
    let mut out = format!("{ORDERS_HEADER}\n");
    for f in &report.fits {
        let (coupling, against) = match f.coupling {
            Some(c) => (c.to_string(), "tau"),
            None => ("-".to_string(), "h"),
        };
        let (slope, residual) = match f.fit {
            Some(fit) => (format!("{:.6}", fit.slope), format!("{:.6}", fit.residual)),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            report.meta.scheme,
            report.meta.potential,
            f.norm,
            coupling,
            against,
            slope,
            residual,
            f.points,
            f.floored,
            f.monotone
        ));
    }
    out
}

/// gnuplot script plotting `errors.csv` against `h` and `tau` on log-log axes.
pub fn plot_script(report: &ErrorReport) -> String {
    let norms: Vec<&str> = report.norms.iter().map(|n| n.label()).collect();
    let norms = norms.join(" ");
    format!(
        "# gnuplot errors.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set logscale xy\n\
         set key top left\n\
         set ylabel 'error'\n\
         set title '{scheme}, {potential}'\n\
         set output 'error_vs_h.png'\n\
         set xlabel 'h'\n\
         plot for [nm in \"{norms}\"] 'errors.csv' every ::1 using (strcol(3) eq nm ? $5 : 1/0):7 with linespoints title nm\n\
         set output 'error_vs_tau.png'\n\
         set xlabel 'tau'\n\
         plot for [nm in \"{norms}\"] 'errors.csv' every ::1 using (strcol(3) eq nm ? $6 : 1/0):7 with linespoints title nm\n",
        scheme = report.meta.scheme,
        potential = report.meta.potential,
    )
}

/// Key-value description of the study (`metadata.csv`).
pub fn metadata_csv(report: &ErrorReport) -> String {
    let m = &report.meta;
    format!(
        "key,value\nstudy,{}\nscheme,{}\npotential,{}\nbeta,{:e}\nsigma,{:e}\nt_final,{:e}\nreference,{}\nfloor_l2,{:e}\nfloor_h1,{:e}\nself_checked,{}\nversion,{}\n",
        m.study, m.scheme, m.potential, m.beta, m.sigma, m.t_final, m.reference_key, m.floor[0], m.floor[1], m.self_checked, m.version
    )
}

/// Writes `errors.csv`, `orders.csv`, `metadata.csv` and `errors.gp` into `dir`.
pub fn emit_report(report: &ErrorReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("errors.csv", errors_csv(report)),
        ("orders.csv", orders_csv(report)),
        ("metadata.csv", metadata_csv(report)),
        ("errors.gp", plot_script(report)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
