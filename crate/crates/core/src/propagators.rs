//! Time steppers and the run loop.
//!
//! Every scheme splits the flow into the free Schrodinger part, integrated
//! exactly in Fourier space, and the potential-plus-nonlinearity part, whose
//! exact flow is a pointwise phase `e^{-i tau (V + beta |psi|^{2 sigma})}`.
//! The schemes differ in how the product of that phase with the current
//! field is projected back onto `X_N`:
//!
//! * LTeFP / STeFP: nonlinearity by interpolation on the `N` grid, potential
//!   through the precomputed `P_{2N}(e^{-i tau V})` and the exact
//!   [`extended_product`](crate::spectral::extended_product).
//! * FSwQ-M: the whole phase is sampled on an `M`-point grid and the
//!   coefficients come from an `M`-point transform. `M = N` is the standard
//!   Fourier pseudospectral method.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::{PhaseFactorCache, PhaseFactorTable, PotentialSpec};
use crate::spectral::{
    apply_phases, coefficients_from_samples, evaluate_on_grid, extended_product_sampled,
    free_flow_phases, interpolate, load_spectral_csv, sample_periodic, save_spectral_csv,
    sobolev_norm, Domain, NodalField, SpectralField, UniformGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Lie-Trotter splitting with eFP in space.
    LtEfp,
    /// Strang splitting with eFP in space.
    StEfp,
    /// Lie-Trotter splitting with `m`-point quadrature for the Fourier coefficients.
    Fswq { m: usize },
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::LtEfp => "lt-efp".into(),
            Scheme::StEfp => "st-efp".into(),
            Scheme::Fswq { m } => format!("fswq-{m}"),
        }
    }

    pub fn is_efp(&self) -> bool {
        matches!(self, Scheme::LtEfp | Scheme::StEfp)
    }
}

/// Initial coefficients for FSwQ-M.
///
/// `Paper` applies `e^{-i tau mu_l^2}` to the quadrature coefficients of
/// `psi_0`, `Plain` uses them as they are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FswqInit {
    #[default]
    Paper,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub tau: f64,
    pub t_final: f64,
    pub beta: f64,
    pub sigma: f64,
    pub potential: PotentialSpec,
    pub fswq_init: FswqInit,
}

impl SchemeConfig {
    /// Cubic nonlinearity with `beta = 1`.
    pub fn new(scheme: Scheme, n: usize, tau: f64, t_final: f64, potential: PotentialSpec) -> Self {
        Self {
            scheme,
            n,
            tau,
            t_final,
            beta: 1.0,
            sigma: 1.0,
            potential,
            fswq_init: FswqInit::default(),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_fswq_init(mut self, init: FswqInit) -> Self {
        self.fswq_init = init;
        self
    }

    pub fn domain(&self) -> Domain {
        self.potential.domain()
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.domain(), self.n)
    }

    pub fn h(&self) -> f64 {
        self.domain().length() / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(format!("final time must be non-negative, got {}", self.t_final)));
        }
        if !self.beta.is_finite() {
            return Err(Error::config("beta must be finite"));
        }
        if !(self.sigma >= 1.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!("sigma must be >= 1, got {}", self.sigma)));
        }
        if let Scheme::Fswq { m } = self.scheme {
            if m < self.n || m % 2 != 0 {
                return Err(Error::config(format!(
                    "FSwQ needs an even M >= N, got M = {m}, N = {}",
                    self.n
                )));
            }
        }
        self.n_steps().map(|_| ())
    }

    /// `round(T / tau)`, provided `|n tau - T| <= 1e-9 T`.
    pub fn n_steps(&self) -> Result<usize> {
        let steps = (self.t_final / self.tau).round();
        if (steps * self.tau - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::config(format!(
                "tau = {} does not divide T = {} (nearest step count {steps})",
                self.tau, self.t_final
            )));
        }
        Ok(steps as usize)
    }
}

/// Closed-form initial datum `psi_0(x)`.
#[derive(Clone)]
pub struct InitialDatum {
    name: String,
    func: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl std::fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialDatum").field("name", &self.name).finish_non_exhaustive()
    }
}

impl InitialDatum {
    pub fn new(name: impl Into<String>, func: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    /// `e^{-x^2/2}`.
    pub fn gaussian() -> Self {
        Self::new("gaussian", |x| Complex64::new((-x * x / 2.0).exp(), 0.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.func)(x)
    }
}

impl Default for InitialDatum {
    fn default() -> Self {
        Self::gaussian()
    }
}

/// The grid vector `psi^n` together with its interpolant `I_N psi^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub step_index: usize,
    pub tau: f64,
    pub nodal: NodalField,
    pub spectral: SpectralField,
}

impl SolverState {
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.tau
    }

    /// State from grid values; the spectral mirror is recomputed.
    pub fn from_nodal(nodal: NodalField, tau: f64) -> Self {
        let spectral = interpolate(&nodal);
        Self {
            step_index: 0,
            tau,
            nodal,
            spectral,
        }
    }
}

#[inline]
fn nonlinear_density(rho: f64, beta: f64, sigma: f64) -> f64 {
    if sigma == 1.0 {
        beta * rho
    } else {
        beta * rho.powf(sigma)
    }
}

/// Exact nonlinear flow at the nodes: `v_j <- v_j e^{-i tau beta |v_j|^{2 sigma}}`.
pub fn nonlinear_nodal_step(v: &NodalField, tau: f64, beta: f64, sigma: f64) -> NodalField {
    v.map_values(|z| z * Complex64::cis(-tau * nonlinear_density(z.norm_sqr(), beta, sigma)))
}

/// `P_N(e^{-i tau V} I_N(v e^{-i tau f(|v|^2)}))` with the phase table pre-sampled on the `4N` grid.
fn efp_block(v: &NodalField, table_fine: &[Complex64], tau: f64, beta: f64, sigma: f64) -> SpectralField {
    let g = interpolate(&nonlinear_nodal_step(v, tau, beta, sigma));
    extended_product_sampled(table_fine, &g)
}

fn finish_step(state: &SolverState, u: SpectralField) -> SolverState {
    let nodal = evaluate_on_grid(&u, u.bandwidth()).expect("bandwidth is a valid grid size");
    SolverState {
        step_index: state.step_index + 1,
        tau: state.tau,
        nodal,
        spectral: u,
    }
}

enum Kernel {
    Efp {
        table: Arc<PhaseFactorTable>,
        table_fine: Vec<Complex64>,
        strang: bool,
    },
    Fswq {
        m: usize,
        potential_fine: Vec<f64>,
    },
}

/// A scheme bound to its configuration with all step-invariant data precomputed:
/// the phase table sampled on the `4N` grid (eFP), the potential on the `M` grid
/// (FSwQ) and the free-flow phases.
pub struct Stepper {
    cfg: SchemeConfig,
    kernel: Kernel,
    full_phases: Vec<Complex64>,
    half_phases: Vec<Complex64>,
}

impl Stepper {
    /// Looks the phase table up in `cache` for eFP schemes.
    pub fn new(cfg: &SchemeConfig, cache: &PhaseFactorCache) -> Result<Self> {
        cfg.validate()?;
        match cfg.scheme {
            Scheme::LtEfp | Scheme::StEfp => {
                let table = cache.get(&cfg.potential, cfg.tau, cfg.n)?;
                Self::with_table(cfg, table)
            }
            Scheme::Fswq { m } => {
                let grid = UniformGrid::new(cfg.domain(), m)?;
                let potential_fine = (0..m).map(|j| cfg.potential.value(grid.node(j))).collect();
                Ok(Self::assemble(cfg, Kernel::Fswq { m, potential_fine }))
            }
        }
    }

    /// eFP stepper with an explicitly supplied table; the table must match `(V, tau, N)`.
    pub fn with_table(cfg: &SchemeConfig, table: Arc<PhaseFactorTable>) -> Result<Self> {
        cfg.validate()?;
        let strang = match cfg.scheme {
            Scheme::LtEfp => false,
            Scheme::StEfp => true,
            Scheme::Fswq { .. } => {
                return Err(Error::config("FSwQ does not use a phase-factor table"));
            }
        };
        if !table.matches(&cfg.potential, cfg.tau, cfg.n) {
            return Err(Error::config(format!(
                "phase table (N = {}, tau = {}, {}) does not match the scheme (N = {}, tau = {}, {})",
                table.n,
                table.tau,
                table.potential_key,
                cfg.n,
                cfg.tau,
                cfg.potential.key()
            )));
        }
        let table_fine = sample_periodic(&table.coeffs, 4 * cfg.n);
        Ok(Self::assemble(
            cfg,
            Kernel::Efp {
                table,
                table_fine,
                strang,
            },
        ))
    }

    fn assemble(cfg: &SchemeConfig, kernel: Kernel) -> Self {
        let domain = cfg.domain();
        Self {
            cfg: cfg.clone(),
            kernel,
            full_phases: free_flow_phases(domain, cfg.n, cfg.tau),
            half_phases: free_flow_phases(domain, cfg.n, cfg.tau / 2.0),
        }
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn table(&self) -> Option<&Arc<PhaseFactorTable>> {
        match &self.kernel {
            Kernel::Efp { table, .. } => Some(table),
            Kernel::Fswq { .. } => None,
        }
    }

    /// Initial state: grid samples of `psi_0` for eFP, quadrature coefficients
    /// on the `M` grid (optionally phase-shifted, see [`FswqInit`]) for FSwQ.
    pub fn initial_state(&self, psi0: &InitialDatum) -> Result<SolverState> {
        let cfg = &self.cfg;
        let grid = cfg.grid()?;
        match &self.kernel {
            Kernel::Efp { .. } => Ok(SolverState::from_nodal(
                NodalField::from_fn(grid, |x| psi0.eval(x)),
                cfg.tau,
            )),
            Kernel::Fswq { m, .. } => {
                let fine = UniformGrid::new(cfg.domain(), *m)?;
                let samples: Vec<Complex64> = (0..*m).map(|j| psi0.eval(fine.node(j))).collect();
                let mut u = SpectralField::from_coeffs(cfg.domain(), coefficients_from_samples(&samples, cfg.n))?;
                if cfg.fswq_init == FswqInit::Paper {
                    u = apply_phases(&u, &self.full_phases);
                }
                let nodal = evaluate_on_grid(&u, cfg.n)?;
                Ok(SolverState {
                    step_index: 0,
                    tau: cfg.tau,
                    nodal,
                    spectral: u,
                })
            }
        }
    }

    /// Advances one step. The result is bitwise identical to the corresponding
    /// free function ([`lt_efp_step`], [`st_efp_step`], [`lt_fswq_step`]).
    pub fn step(&self, state: &SolverState) -> SolverState {
        let SchemeConfig {
            tau, beta, sigma, ..
        } = self.cfg;
        let n = self.cfg.n;
        match &self.kernel {
            Kernel::Efp {
                table_fine,
                strang: false,
                ..
            } => {
                let u = efp_block(&state.nodal, table_fine, tau, beta, sigma);
                finish_step(state, apply_phases(&u, &self.full_phases))
            }
            Kernel::Efp {
                table_fine,
                strang: true,
                ..
            } => {
                let u = apply_phases(&interpolate(&state.nodal), &self.half_phases);
                let half = evaluate_on_grid(&u, n).expect("valid grid");
                let u = efp_block(&half, table_fine, tau, beta, sigma);
                finish_step(state, apply_phases(&u, &self.half_phases))
            }
            Kernel::Fswq { m, potential_fine } => {
                let mut fine = sample_periodic(&state.spectral, *m);
                for (z, v) in fine.iter_mut().zip(potential_fine) {
                    *z *= Complex64::cis(-tau * (v + nonlinear_density(z.norm_sqr(), beta, sigma)));
                }
                let u = SpectralField::from_coeffs(self.cfg.domain(), coefficients_from_samples(&fine, n))
                    .expect("valid bandwidth");
                finish_step(state, apply_phases(&u, &self.full_phases))
            }
        }
    }
}

fn check_state(state: &SolverState, cfg: &SchemeConfig) -> Result<()> {
    if state.nodal.grid().n_points() != cfg.n || state.spectral.bandwidth() != cfg.n {
        return Err(Error::config(format!(
            "state lives on a {}-point grid but the scheme uses N = {}",
            state.nodal.grid().n_points(),
            cfg.n
        )));
    }
    Ok(())
}

/// One Lie-Trotter eFP step:
/// `g = I_N(nonlinear(psi^n))`, `u = P_N(P_{2N}(e^{-i tau V}) g)`,
/// `u <- e^{-i tau mu_l^2} u`, `psi^{n+1} = u` on the grid.
pub fn lt_efp_step(state: &SolverState, cfg: &SchemeConfig, table: &PhaseFactorTable) -> Result<SolverState> {
    let cfg = SchemeConfig {
        scheme: Scheme::LtEfp,
        ..cfg.clone()
    };
    check_state(state, &cfg)?;
    let stepper = Stepper::with_table(&cfg, Arc::new(table.clone()))?;
    Ok(stepper.step(state))
}

/// One Strang eFP step: half free flow, the eFP potential/nonlinear block, half free flow.
pub fn st_efp_step(state: &SolverState, cfg: &SchemeConfig, table: &PhaseFactorTable) -> Result<SolverState> {
    let cfg = SchemeConfig {
        scheme: Scheme::StEfp,
        ..cfg.clone()
    };
    check_state(state, &cfg)?;
    let stepper = Stepper::with_table(&cfg, Arc::new(table.clone()))?;
    Ok(stepper.step(state))
}

/// One Lie-Trotter FSwQ-M step; `cfg.scheme` must be `Fswq`.
pub fn lt_fswq_step(state: &SolverState, cfg: &SchemeConfig) -> Result<SolverState> {
    if !matches!(cfg.scheme, Scheme::Fswq { .. }) {
        return Err(Error::config("lt_fswq_step needs an FSwQ scheme"));
    }
    check_state(state, cfg)?;
    let stepper = Stepper::new(cfg, PhaseFactorCache::global())?;
    Ok(stepper.step(state))
}

/// A recorded field at `(step, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: SpectralField,
}

/// Snapshots in increasing time; the final state is always the last entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Writes `snapshot_<step>.csv` files and `manifest.csv`
    /// (`step,time,file,l2_norm,h1_norm`). Returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::from("step,time,file,l2_norm,h1_norm\n");
        for snap in &self.snapshots {
            let file = format!("snapshot_{:08}.csv", snap.step);
            save_spectral_csv(&dir.join(&file), &snap.field)?;
            manifest.push_str(&format!(
                "{},{:e},{file},{:e},{:e}\n",
                snap.step,
                snap.time,
                sobolev_norm(&snap.field, 0),
                sobolev_norm(&snap.field, 1)
            ));
        }
        let path = dir.join("manifest.csv");
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Advances `stepper` from `state` for `steps` steps, aborting on non-finite values.
pub fn advance(stepper: &Stepper, mut state: SolverState, steps: usize, mut observe: impl FnMut(&SolverState)) -> Result<SolverState> {
    for _ in 0..steps {
        state = stepper.step(&state);
        if !state.nodal.is_finite() {
            return Err(Error::Blowup {
                step: state.step_index,
                time: state.time(),
                detail: format!("non-finite grid values ({})", stepper.config().scheme.label()),
            });
        }
        observe(&state);
    }
    Ok(state)
}

/// Runs `cfg` from `psi0`, recording every `snapshot_stride`-th state
/// (`0` records only the initial and final states).
pub fn run(cfg: &SchemeConfig, psi0: &InitialDatum, snapshot_stride: usize) -> Result<Trajectory> {
    run_with_cache(cfg, psi0, snapshot_stride, PhaseFactorCache::global())
}

pub fn run_with_cache(
    cfg: &SchemeConfig,
    psi0: &InitialDatum,
    snapshot_stride: usize,
    cache: &PhaseFactorCache,
) -> Result<Trajectory> {
    let stepper = Stepper::new(cfg, cache)?;
    let steps = cfg.n_steps()?;
    let init = stepper.initial_state(psi0)?;
    let mut snapshots = vec![Snapshot {
        step: 0,
        time: 0.0,
        field: init.spectral.clone(),
    }];
    let last = advance(&stepper, init, steps, |s| {
        if snapshot_stride > 0 && s.step_index % snapshot_stride == 0 && s.step_index != steps {
            snapshots.push(Snapshot {
                step: s.step_index,
                time: s.time(),
                field: s.spectral.clone(),
            });
        }
    })?;
    if last.step_index > 0 {
        snapshots.push(Snapshot {
            step: last.step_index,
            time: last.time(),
            field: last.spectral,
        });
    }
    Ok(Trajectory { snapshots })
}

/// Runs `cfg` and returns only the final state.
pub fn run_final(cfg: &SchemeConfig, psi0: &InitialDatum, cache: &PhaseFactorCache) -> Result<SolverState> {
    let stepper = Stepper::new(cfg, cache)?;
    let steps = cfg.n_steps()?;
    let init = stepper.initial_state(psi0)?;
    advance(&stepper, init, steps, |_| {})
}

/// Parameters of an STeFP reference ("exact") solution.
#[derive(Debug, Clone)]
pub struct ReferenceSpec {
    pub potential: PotentialSpec,
    pub beta: f64,
    pub sigma: f64,
    pub t_final: f64,
    pub n_ref: usize,
    pub tau_ref: f64,
    pub psi0: InitialDatum,
}

impl ReferenceSpec {
    pub fn new(potential: PotentialSpec, beta: f64, t_final: f64, n_ref: usize, tau_ref: f64) -> Self {
        Self {
            potential,
            beta,
            sigma: 1.0,
            t_final,
            n_ref,
            tau_ref,
            psi0: InitialDatum::gaussian(),
        }
    }

    /// Same physics, `n_ref` doubled and `tau_ref` halved.
    pub fn refined(&self) -> Self {
        Self {
            n_ref: 2 * self.n_ref,
            tau_ref: self.tau_ref / 2.0,
            ..self.clone()
        }
    }

    /// Filename encoding every parameter of the reference.
    pub fn cache_file_name(&self) -> String {
        format!(
            "ref_{}_psi0-{}_beta{:e}_sigma{:e}_T{:e}_N{}_tau{:e}.csv",
            self.potential.key(),
            self.psi0.name(),
            self.beta,
            self.sigma,
            self.t_final,
            self.n_ref,
            self.tau_ref
        )
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig::new(Scheme::StEfp, self.n_ref, self.tau_ref, self.t_final, self.potential.clone())
            .with_beta(self.beta)
            .with_sigma(self.sigma)
    }
}

/// Cache directory: `$EFP_CACHE_DIR` if set, `.efp-cache` otherwise.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("EFP_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".efp-cache"))
}

/// STeFP reference solution at `t_final`, cached as a spectral CSV in `cache_dir`.
///
/// Requires `tau_ref <= h_ref^2 / pi`. Writes go through a temporary file and
/// a rename so concurrent producers never expose a partial file.
pub fn reference_solution(spec: &ReferenceSpec, cache_dir: Option<&Path>) -> Result<SpectralField> {
    let h = spec.potential.domain().length() / spec.n_ref as f64;
    if spec.tau_ref > h * h / std::f64::consts::PI {
        return Err(Error::config(format!(
            "reference step {} exceeds h^2/pi = {} for N_ref = {}",
            spec.tau_ref,
            h * h / std::f64::consts::PI,
            spec.n_ref
        )));
    }
    cached_reference(spec, cache_dir)
}

/// The `spec.refined()` reference used to estimate the accuracy of `spec`.
///
/// Halving `tau` while doubling `N` can leave the `h^2/pi` regime, so the
/// step guard of [`reference_solution`] is not applied here; STeFP itself is
/// unconditionally stable.
pub fn refined_reference(spec: &ReferenceSpec, cache_dir: Option<&Path>) -> Result<SpectralField> {
    cached_reference(&spec.refined(), cache_dir)
}

fn cached_reference(spec: &ReferenceSpec, cache_dir: Option<&Path>) -> Result<SpectralField> {
    let path = cache_dir.map(|d| d.join(spec.cache_file_name()));
    if let Some(path) = &path {
        if path.exists() {
            log::debug!("reference cache hit: {}", path.display());
            return load_spectral_csv(path, spec.potential.domain());
        }
    }
    log::info!(
        "computing reference {} (N = {}, tau = {:e}, T = {})",
        spec.potential.name(),
        spec.n_ref,
        spec.tau_ref,
        spec.t_final
    );
    let state = run_final(&spec.scheme_config(), &spec.psi0, PhaseFactorCache::global())?;
    if let (Some(dir), Some(path)) = (cache_dir, &path) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = dir.join(format!(
            ".{}.{}.tmp",
            spec.cache_file_name(),
            std::process::id()
        ));
        save_spectral_csv(&tmp, &state.spectral)?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    }
    Ok(state.spectral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::phase_projection;
    use crate::spectral::{free_flow, sobolev_norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dom() -> Domain {
        Domain::default()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn zero_cfg(scheme: Scheme, n: usize) -> SchemeConfig {
        SchemeConfig::new(scheme, n, 0.01, 0.1, PotentialSpec::zero(dom())).with_beta(0.0)
    }

    #[test]
    fn nonlinear_step_examples() {
        let grid = UniformGrid::new(dom(), 8).unwrap();
        let v = NodalField::from_fn(grid, |x| c(x.cos(), 0.3 * x));
        assert_eq!(nonlinear_nodal_step(&v, 0.1, 0.0, 1.0), v);
        let out = nonlinear_nodal_step(&v, 0.1, 7.0, 2.0);
        for (a, b) in out.values().iter().zip(v.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm().max(1.0));
        }
        let ones = NodalField::from_fn(grid, |_| c(1.0, 0.0));
        let out = nonlinear_nodal_step(&ones, std::f64::consts::PI, 1.0, 1.0);
        for z in out.values() {
            assert!((z - c(-1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn step_count_rounding() {
        let v = PotentialSpec::zero(dom());
        let cfg = SchemeConfig::new(Scheme::LtEfp, 8, 0.1, 1.0, v.clone());
        assert_eq!(cfg.n_steps().unwrap(), 10);
        let cfg = SchemeConfig::new(Scheme::LtEfp, 8, 0.3, 1.0, v.clone());
        assert!(cfg.validate().is_err());
        let cfg = SchemeConfig::new(Scheme::Fswq { m: 4 }, 8, 0.1, 1.0, v.clone());
        assert!(cfg.validate().is_err());
        let cfg = SchemeConfig::new(Scheme::LtEfp, 8, 0.1, 1.0, v).with_sigma(0.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lt_efp_reduces_to_free_flow() {
        let cfg = zero_cfg(Scheme::LtEfp, 32);
        let table = phase_projection(&cfg.potential, cfg.tau, cfg.n, 1e-12).unwrap();
        let state = SolverState::from_nodal(
            NodalField::from_fn(cfg.grid().unwrap(), |x| c((-x * x / 2.0).exp(), x.sin())),
            cfg.tau,
        );
        let next = lt_efp_step(&state, &cfg, &table).unwrap();
        let expected = free_flow(&interpolate(&state.nodal), cfg.tau);
        assert!(max_diff(next.spectral.coeffs(), expected.coeffs()) <= 1e-13);
        assert_eq!(next.step_index, 1);
    }

    #[test]
    fn lt_efp_single_mode_is_exact() {
        let cfg = zero_cfg(Scheme::LtEfp, 16);
        let table = phase_projection(&cfg.potential, cfg.tau, cfg.n, 1e-12).unwrap();
        let mode = SpectralField::single_mode(dom(), 16, 3, c(1.0, 0.0)).unwrap();
        let state = SolverState::from_nodal(evaluate_on_grid(&mode, 16).unwrap(), cfg.tau);
        let next = lt_efp_step(&state, &cfg, &table).unwrap();
        let mu = dom().frequency(3);
        let exact = Complex64::cis(-cfg.tau * mu * mu);
        assert!((next.spectral.coeff(3) - exact).norm() < 1e-14);
    }

    #[test]
    fn st_efp_reduces_to_free_flow() {
        let cfg = zero_cfg(Scheme::StEfp, 32);
        let table = phase_projection(&cfg.potential, cfg.tau, cfg.n, 1e-12).unwrap();
        let state = SolverState::from_nodal(
            NodalField::from_fn(cfg.grid().unwrap(), |x| c((-x * x / 2.0).exp(), 0.0)),
            cfg.tau,
        );
        let next = st_efp_step(&state, &cfg, &table).unwrap();
        let expected = free_flow(&interpolate(&state.nodal), cfg.tau);
        assert!(max_diff(next.spectral.coeffs(), expected.coeffs()) <= 1e-13);
    }

    #[test]
    fn table_mismatch_is_rejected() {
        let v1 = PotentialSpec::by_name("v1", dom()).unwrap();
        let cfg = SchemeConfig::new(Scheme::LtEfp, 16, 0.01, 0.1, v1.clone());
        let wrong_tau = phase_projection(&v1, 0.02, 16, 1e-12).unwrap();
        let state = SolverState::from_nodal(NodalField::from_fn(cfg.grid().unwrap(), |_| c(1.0, 0.0)), 0.01);
        assert!(lt_efp_step(&state, &cfg, &wrong_tau).is_err());
        let wrong_n = phase_projection(&v1, 0.01, 32, 1e-12).unwrap();
        assert!(st_efp_step(&state, &cfg, &wrong_n).is_err());
        let v2 = PotentialSpec::by_name("v2", dom()).unwrap();
        let wrong_v = phase_projection(&v2, 0.01, 16, 1e-12).unwrap();
        assert!(lt_efp_step(&state, &cfg, &wrong_v).is_err());
    }

    #[test]
    fn fswq_with_m_equal_n_matches_lt_efp_for_zero_potential() {
        let efp = zero_cfg(Scheme::LtEfp, 32);
        let fswq = zero_cfg(Scheme::Fswq { m: 32 }, 32).with_fswq_init(FswqInit::Plain);
        let table = phase_projection(&efp.potential, efp.tau, efp.n, 1e-12).unwrap();
        let psi0 = InitialDatum::gaussian();
        let cache = PhaseFactorCache::new(1e-12);
        let s_efp = Stepper::new(&efp, &cache).unwrap().initial_state(&psi0).unwrap();
        let s_fswq = Stepper::new(&fswq, &cache).unwrap().initial_state(&psi0).unwrap();
        assert!(max_diff(s_efp.spectral.coeffs(), s_fswq.spectral.coeffs()) < 1e-15);
        let a = lt_efp_step(&s_efp, &efp, &table).unwrap();
        let b = lt_fswq_step(&s_fswq, &fswq).unwrap();
        assert!(max_diff(a.spectral.coeffs(), b.spectral.coeffs()) <= 1e-13);
    }

    #[test]
    fn fswq_paper_init_applies_free_phase() {
        let cfg = zero_cfg(Scheme::Fswq { m: 64 }, 32);
        let cache = PhaseFactorCache::new(1e-12);
        let psi0 = InitialDatum::gaussian();
        let paper = Stepper::new(&cfg, &cache).unwrap().initial_state(&psi0).unwrap();
        let plain = Stepper::new(&cfg.clone().with_fswq_init(FswqInit::Plain), &cache)
            .unwrap()
            .initial_state(&psi0)
            .unwrap();
        let expected = free_flow(&plain.spectral, cfg.tau);
        assert!(max_diff(paper.spectral.coeffs(), expected.coeffs()) < 1e-15);
    }

    #[test]
    fn run_with_zero_steps_records_initial_only() {
        let cfg = SchemeConfig::new(Scheme::StEfp, 16, 0.01, 0.0, PotentialSpec::zero(dom()));
        let traj = run(&cfg, &InitialDatum::gaussian(), 1).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].step, 0);
    }

    #[test]
    fn run_snapshots_are_strided_and_end_with_final() {
        let cfg = SchemeConfig::new(Scheme::LtEfp, 16, 0.01, 0.1, PotentialSpec::zero(dom()));
        let traj = run(&cfg, &InitialDatum::gaussian(), 3).unwrap();
        let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 9, 10]);
        assert!(traj.snapshots.windows(2).all(|w| w[0].time < w[1].time));
        let traj = run(&cfg, &InitialDatum::gaussian(), 0).unwrap();
        assert_eq!(traj.snapshots.len(), 2);
    }

    #[test]
    fn linear_free_run_conserves_mass() {
        let cfg = SchemeConfig::new(Scheme::LtEfp, 64, 0.01, 1.0, PotentialSpec::zero(dom())).with_beta(0.0);
        let traj = run(&cfg, &InitialDatum::gaussian(), 0).unwrap();
        let m0 = sobolev_norm(&traj.snapshots[0].field, 0);
        let m1 = sobolev_norm(&traj.last().unwrap().field, 0);
        assert!((m1 - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn reference_rejects_large_step() {
        let spec = ReferenceSpec::new(PotentialSpec::zero(dom()), 0.0, 0.1, 256, 0.01);
        assert!(reference_solution(&spec, None).is_err());
    }
}
