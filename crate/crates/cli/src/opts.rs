//! Subcommand options. Each struct is both a clap argument group and the
//! schema of the `--config` file; flags win over file values, unset fields
//! fall back to the defaults in `fill_defaults`.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

/// `self.f = self.f.or(file.f)` for every listed field.
macro_rules! merge {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

/// Fills unset fields with the given defaults.
macro_rules! defaults {
    ($dst:ident; $($f:ident = $v:expr),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = Some($v); } )*
    };
}

fn cache_dir_default() -> PathBuf {
    efp_core::propagators::default_cache_dir()
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolveOpts {
    /// lt-efp, st-efp, fp (FSwQ with M = N) or fswq-<M> [default: st-efp]
    #[arg(long)]
    pub scheme: Option<String>,
    /// zero, v1, v2, v3 or v4
    #[arg(long)]
    pub potential: Option<String>,
    /// Grid size N [default: 256]
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Time step [default: 1e-3]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Final time [default: 1]
    #[arg(long = "t")]
    pub t: Option<f64>,
    /// Nonlinear coupling [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Nonlinearity exponent, |psi|^{2 sigma} [default: 1]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Peak of the Gaussian datum A e^{-x^2/2} [default: 1]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// FSwQ initial coefficients: paper or plain [default: paper]
    #[arg(long)]
    pub fswq_init: Option<String>,
    /// Snapshot every this many steps; 0 keeps first and last [default: 0]
    #[arg(long)]
    pub stride: Option<usize>,
    /// Output directory for snapshots and manifest [default: efp-run]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SolveOpts {
    pub fn merge(&mut self, file: SolveOpts) {
        merge!(self, file; scheme, potential, n, tau, t, beta, sigma, amplitude, fswq_init, stride, out);
    }

    pub fn fill_defaults(&mut self) {
        defaults!(self;
            scheme = "st-efp".into(), n = 256, tau = 1e-3, t = 1.0, beta = 1.0, sigma = 1.0,
            amplitude = 1.0, fswq_init = "paper".into(), stride = 0, out = "efp-run".into());
    }
}

/// Options shared by both study kinds.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StudyOpts {
    /// lt-efp, st-efp, fp or fswq-<k>n (M = k N)
    #[arg(long)]
    pub scheme: Option<String>,
    /// zero, v1, v2, v3 or v4
    #[arg(long)]
    pub potential: Option<String>,
    /// Grid sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<usize>>,
    /// Time step of a spatial study [default: 1e-5]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Couplings tau = C h^gamma of a temporal study, as C:gamma [default: 0.2:2]
    #[arg(long = "coupling", value_delimiter = ',')]
    pub couplings: Option<Vec<String>>,
    /// Final time
    #[arg(long = "t")]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub fswq_init: Option<String>,
    /// Norms to report, comma separated [default: l2,h1]
    #[arg(long, value_delimiter = ',')]
    pub norms: Option<Vec<String>>,
    /// Reference grid [default: 4096]
    #[arg(long)]
    pub n_ref: Option<usize>,
    /// Reference time step [default: 1e-5]
    #[arg(long)]
    pub tau_ref: Option<f64>,
    /// Estimate the reference floor from a (2 N_ref, tau_ref / 2) run [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub self_check: Option<bool>,
    /// Refuse runs with tau > h^2/pi [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub theorem_regime: Option<bool>,
    /// Parallel runs [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall time per run (makes errors.csv run-dependent) [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
    /// Reference cache [default: $EFP_CACHE_DIR or .efp-cache]
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Report directory [default: efp-study]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl StudyOpts {
    pub fn merge(&mut self, file: StudyOpts) {
        merge!(self, file; scheme, potential, grids, tau, couplings, t, beta, sigma, amplitude, fswq_init,
            norms, n_ref, tau_ref, self_check, theorem_regime, jobs, timing, cache_dir, out);
    }

    fn fill_common(&mut self) {
        defaults!(self;
            beta = 1.0, sigma = 1.0, amplitude = 1.0, fswq_init = "paper".into(),
            norms = vec!["l2".into(), "h1".into()], n_ref = 4096, tau_ref = 1e-5, self_check = true,
            theorem_regime = false, jobs = 1, timing = false, cache_dir = cache_dir_default(),
            out = "efp-study".into());
    }

    pub fn fill_spatial_defaults(&mut self) {
        defaults!(self; scheme = "st-efp".into(), grids = vec![128, 256, 512, 1024], tau = 1e-5, t = 0.5);
        self.fill_common();
    }

    pub fn fill_temporal_defaults(&mut self) {
        defaults!(self;
            scheme = "lt-efp".into(), grids = vec![64, 128, 256, 512, 1024],
            couplings = vec!["0.2:2".into()], t = 1.0);
        self.fill_common();
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoeffOpts {
    #[arg(long)]
    pub potential: Option<String>,
    /// [default: 0.01]
    #[arg(long)]
    pub tau: Option<f64>,
    /// The table has bandwidth 2N [default: 64]
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Quadrature tolerance [default: 1e-12]
    #[arg(long)]
    pub tol: Option<f64>,
    /// CSV path; the JSON sidecar goes next to it [default: phase-table.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CoeffOpts {
    pub fn merge(&mut self, file: CoeffOpts) {
        merge!(self, file; potential, tau, n, tol, out);
    }

    pub fn fill_defaults(&mut self) {
        defaults!(self; tau = 0.01, n = 64, tol = efp_core::potentials::DEFAULT_PHASE_TOL, out = "phase-table.csv".into());
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReferenceOpts {
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// [default: 1]
    #[arg(long = "t")]
    pub t: Option<f64>,
    /// [default: 4096]
    #[arg(long)]
    pub n_ref: Option<usize>,
    /// [default: 1e-5]
    #[arg(long)]
    pub tau_ref: Option<f64>,
    /// Also compute the refined reference and print the difference [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub self_check: Option<bool>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Copy of the reference as spectral CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ReferenceOpts {
    pub fn merge(&mut self, file: ReferenceOpts) {
        merge!(self, file; potential, beta, sigma, amplitude, t, n_ref, tau_ref, self_check, cache_dir, out);
    }

    pub fn fill_defaults(&mut self) {
        defaults!(self;
            beta = 1.0, sigma = 1.0, amplitude = 1.0, t = 1.0, n_ref = 4096, tau_ref = 1e-5,
            self_check = false, cache_dir = cache_dir_default());
    }
}
