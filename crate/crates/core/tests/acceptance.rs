//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each and exits non-zero if any failed.
//!
//! Reference solutions are cached under `$EFP_CACHE_DIR`, or the cargo
//! target tmpdir when unset; a cold run computes them (tens of minutes on
//! one core), later runs reuse them.

mod common;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use efp_core::experiments::{
    fit_order, spatial_study, temporal_study, Coupling, ErrorReport, Norm, ReferenceParams, StudyConfig, StudyScheme, Sweep,
};
use efp_core::potentials::{
    phase_projection, PhaseFactorCache, PotentialKind, PotentialSpec, TabulatedPotential, DEFAULT_PHASE_TOL,
};
use efp_core::propagators::{
    advance, lt_efp_step, nonlinear_nodal_step, InitialDatum, Scheme, SchemeConfig, SolverState, Stepper,
};
use efp_core::spectral::{extended_product, free_flow, Domain, NodalField, SpectralField, UniformGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPATIAL_GRIDS: [usize; 4] = [128, 256, 512, 1024];
const TEMPORAL_GRIDS: [usize; 5] = [64, 128, 256, 512, 1024];
const N_REF: usize = 4096;
const TAU_REF: f64 = 1e-5;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Check = fn(&mut Ctx) -> efp_core::Result<Outcome>;

struct Ctx {
    cache_dir: PathBuf,
    reports: HashMap<String, Arc<ErrorReport>>,
}

impl Ctx {
    fn reference(&self) -> ReferenceParams {
        ReferenceParams {
            cache_dir: Some(self.cache_dir.clone()),
            ..ReferenceParams::new(N_REF, TAU_REF)
        }
    }

    fn spatial(&mut self, pot: &str, scheme: StudyScheme) -> efp_core::Result<Arc<ErrorReport>> {
        let key = format!("spatial/{pot}/{scheme}");
        if let Some(r) = self.reports.get(&key) {
            return Ok(r.clone());
        }
        let mut cfg = StudyConfig::new(
            Sweep::Spatial { grids: SPATIAL_GRIDS.to_vec(), tau: 1e-5 },
            scheme,
            spec(pot),
            0.5,
            self.reference(),
        );
        cfg.theorem_regime = true;
        let report = Arc::new(spatial_study(&cfg)?);
        self.reports.insert(key, report.clone());
        Ok(report)
    }

    fn temporal(&mut self, pot: &str, scheme: StudyScheme, couplings: &[Coupling]) -> efp_core::Result<Arc<ErrorReport>> {
        let cfg = StudyConfig::new(
            Sweep::Temporal { grids: TEMPORAL_GRIDS.to_vec(), couplings: couplings.to_vec() },
            scheme,
            spec(pot),
            1.0,
            self.reference(),
        );
        Ok(Arc::new(temporal_study(&cfg)?))
    }
}

fn spec(name: &str) -> PotentialSpec {
    PotentialSpec::by_name(name, Domain::default()).unwrap()
}

fn slope(report: &ErrorReport, norm: Norm, coupling: Option<Coupling>) -> Option<(f64, f64)> {
    report.fit(norm, coupling).and_then(|f| f.fit).map(|f| (f.slope, f.residual))
}

fn show(s: Option<(f64, f64)>) -> String {
    match s {
        Some((slope, res)) => format!("{slope:.3} (residual {res:.3})"),
        None => "not fitted".into(),
    }
}

fn within(s: Option<(f64, f64)>, lo: f64, hi: f64) -> bool {
    s.is_some_and(|(v, _)| (lo..=hi).contains(&v))
}

fn errors_of(report: &ErrorReport, norm: Norm, coupling: Option<Coupling>) -> Vec<f64> {
    report.group(coupling).iter().map(|r| r.error(norm)).collect()
}

fn random_coeffs(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
    (0..k)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn c1_extended_product(_: &mut Ctx) -> efp_core::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for n in [4usize, 8, 16, 32] {
        for _ in 0..20 {
            let w = random_coeffs(&mut rng, 2 * n);
            let g = random_coeffs(&mut rng, n);
            let got = extended_product(
                &SpectralField::from_coeffs(Domain::default(), w.clone())?,
                &SpectralField::from_coeffs(Domain::default(), g.clone())?,
            )?;
            let want = convolve(|l| w[(l + n as i64) as usize], &g);
            worst = worst.max(rel_l2(got.coeffs(), &want));
        }
    }
    Ok(Outcome::new(worst <= 1e-12, format!("max relative l2 error {worst:.2e} (<= 1e-12)")))
}

fn c2_step_oracle(_: &mut Ctx) -> efp_core::Result<Outcome> {
    let (n, tau) = (16, 0.05);
    let cfg = SchemeConfig::new(Scheme::LtEfp, n, tau, tau, spec("v1"));
    let table = PhaseFactorCache::global().get(&cfg.potential, tau, n)?;
    let mut worst = 0.0f64;
    let mut state = SolverState::from_nodal(
        NodalField::from_fn(cfg.grid()?, |x| Complex64::new((-x * x / 2.0).exp(), 0.2 * (x / 3.0).cos())),
        tau,
    );
    for _ in 0..5 {
        let want = lt_efp_step_direct(state.nodal.periodic_values(), tau, 1.0);
        let next = lt_efp_step(&state, &cfg, &table)?;
        worst = worst.max(rel_l2(next.nodal.periodic_values(), &want));
        state = SolverState::from_nodal(next.nodal, tau);
    }
    Ok(Outcome::new(worst <= 1e-12, format!("max relative error vs direct convolution {worst:.2e} (<= 1e-12)")))
}

fn c3_spatial_v1(ctx: &mut Ctx) -> efp_core::Result<Outcome> {
    let r = ctx.spatial("v1", StudyScheme::StEfp)?;
    let l2 = slope(&r, Norm::L2, None);
    let h1 = slope(&r, Norm::H1, None);
    Ok(Outcome::new(
        within(l2, 2.2, 2.8) && within(h1, 1.2, 1.8),
        format!("L2 slope {} in [2.2, 2.8], H1 slope {} in [1.2, 1.8]", show(l2), show(h1)),
    ))
}

fn c4_spatial_trend(ctx: &mut Ctx) -> efp_core::Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for norm in [Norm::L2, Norm::H1] {
        let mut slopes = Vec::new();
        for pot in ["v1", "v2", "v3", "v4"] {
            let r = ctx.spatial(pot, StudyScheme::StEfp)?;
            match slope(&r, norm, None) {
                Some((s, res)) => {
                    pass &= res < 0.25;
                    slopes.push(s);
                    parts.push(format!("{pot} {norm} {s:.2}/{res:.2}"));
                }
                None => {
                    pass = false;
                    parts.push(format!("{pot} {norm} not fitted"));
                }
            }
        }
        pass &= slopes.len() == 4 && slopes.windows(2).all(|p| p[1] > p[0]);
    }
    Ok(Outcome::new(
        pass,
        format!("slope/residual: {} (increasing V1 to V4, residual < 0.25)", parts.join(", ")),
    ))
}

fn c5_fp_order_reduction(ctx: &mut Ctx) -> efp_core::Result<Outcome> {
    let fp = ctx.spatial("v1", StudyScheme::Fswq { m_factor: 1 })?;
    let efp = ctx.spatial("v1", StudyScheme::StEfp)?;
    let tail = |r: &ErrorReport| -> efp_core::Result<f64> {
        let rows: Vec<_> = r
            .group(None)
            .into_iter()
            .filter(|row| row.n >= 256 && !r.is_floored(row, Norm::L2))
            .collect();
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let es: Vec<f64> = rows.iter().map(|r| r.e_l2).collect();
        Ok(fit_order(&hs, &es)?.slope)
    };
    let s_fp = tail(&fp)?;
    let s_efp = tail(&efp)?;
    Ok(Outcome::new(
        s_fp < 1.5 && s_fp < s_efp,
        format!("FP L2 slope over N = 256..1024 {s_fp:.3} (< 1.5), eFP {s_efp:.3}"),
    ))
}

fn c6_temporal_v1(ctx: &mut Ctx) -> efp_core::Result<Outcome> {
    let c2 = Coupling::new(0.2, 2.0)?;
    let c1 = Coupling::new(0.2, 1.0)?;
    let r = ctx.temporal("v1", StudyScheme::LtEfp, &[c2, c1])?;
    let l2 = slope(&r, Norm::L2, Some(c2));
    let h1 = slope(&r, Norm::H1, Some(c2));
    let flat = errors_of(&r, Norm::H1, Some(c1));
    let non_decreasing = flat.windows(2).all(|p| p[1] >= p[0]);
    let flat_s: Vec<String> = flat.iter().map(|e| format!("{e:.3e}")).collect();
    Ok(Outcome::new(
        within(l2, 0.8, 1.2) && within(h1, 0.35, 0.65) && non_decreasing,
        format!(
            "tau = 0.2h^2: L2 slope {} in [0.8, 1.2], H1 slope {} in [0.35, 0.65]; tau = 0.2h: H1 errors [{}] non-decreasing: {non_decreasing}",
            show(l2),
            show(h1),
            flat_s.join(", ")
        ),
    ))
}

fn c7_temporal_v2(ctx: &mut Ctx) -> efp_core::Result<Outcome> {
    let c2 = Coupling::new(0.2, 2.0)?;
    let r = ctx.temporal("v2", StudyScheme::LtEfp, &[c2])?;
    let h1 = slope(&r, Norm::H1, Some(c2));
    Ok(Outcome::new(within(h1, 0.8, 1.2), format!("H1 slope {} in [0.8, 1.2]", show(h1))))
}

fn c8_temporal_strang(ctx: &mut Ctx) -> efp_core::Result<Outcome> {
    let c2 = Coupling::new(0.2, 2.0)?;
    let r3 = ctx.temporal("v3", StudyScheme::StEfp, &[c2])?;
    let r4 = ctx.temporal("v4", StudyScheme::StEfp, &[c2])?;
    let l2 = slope(&r3, Norm::L2, Some(c2));
    let h1 = slope(&r4, Norm::H1, Some(c2));
    Ok(Outcome::new(
        within(l2, 1.8, 2.2) && within(h1, 1.8, 2.2),
        format!("V3 L2 slope {} in [1.8, 2.2], V4 H1 slope {} in [1.8, 2.2]", show(l2), show(h1)),
    ))
}

fn negated(name: &str, breakpoints: Vec<f64>) -> efp_core::Result<PotentialSpec> {
    let v = spec(name);
    PotentialSpec::new(
        format!("{name}-neg"),
        PotentialKind::Tabulated(TabulatedPotential {
            name: format!("{name}-neg"),
            func: Arc::new(move |x| -v.eval(x).unwrap_or(f64::NAN)),
            breakpoints,
        }),
        Domain::default(),
    )
}

fn c9_invariants(_: &mut Ctx) -> efp_core::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let domain = Domain::default();
    let mut notes = Vec::new();
    let mut pass = true;

    // free-flow unitarity, per step, in L2 and H1
    let mut drift = 0.0f64;
    for n in [16usize, 64, 256] {
        let mut u = SpectralField::from_coeffs(domain, random_coeffs(&mut rng, n))?;
        for _ in 0..100 {
            let next = free_flow(&u, 0.013);
            for m in [0, 1] {
                drift = drift.max((next.norm(m) - u.norm(m)).abs() / u.norm(m));
            }
            u = next;
        }
    }
    pass &= drift <= 1e-14;
    notes.push(format!("free-flow drift {drift:.1e}"));

    // nonlinear factor is unimodular at the nodes
    let grid = UniformGrid::new(domain, 128)?;
    let v = NodalField::from_fn(grid, |x| Complex64::new((-x * x / 4.0).exp() * 3.0, x.sin()));
    let mut modulus = 0.0f64;
    for (beta, sigma) in [(1.0, 1.0), (-50.0, 1.0), (7.0, 2.5)] {
        let out = nonlinear_nodal_step(&v, 0.1, beta, sigma);
        for (a, b) in out.values().iter().zip(v.values()) {
            modulus = modulus.max((a.norm() - b.norm()).abs() / b.norm().max(f64::MIN_POSITIVE));
        }
    }
    pass &= modulus <= 4.0 * f64::EPSILON;
    notes.push(format!("modulus change {modulus:.1e} (<= 4 ulp)"));

    // discrete l2 identity along a run
    let mut parseval = 0.0f64;
    for scheme in [Scheme::LtEfp, Scheme::StEfp] {
        let cfg = SchemeConfig::new(scheme, 128, 0.01, 1.0, spec("v2"));
        let stepper = Stepper::new(&cfg, PhaseFactorCache::global())?;
        let init = stepper.initial_state(&InitialDatum::gaussian())?;
        advance(&stepper, init, cfg.n_steps()?, |s| {
            let mass = s.nodal.discrete_mass();
            parseval = parseval.max((mass - s.spectral.norm(0).powi(2)).abs() / mass);
        })?;
    }
    pass &= parseval <= 1e-13;
    notes.push(format!("discrete l2 identity {parseval:.1e}"));

    // phase tables: conjugate reflection between e^{-i tau V} and e^{+i tau V}, Bessel bound
    let tol = DEFAULT_PHASE_TOL;
    let mut reflect = 0.0f64;
    let mut energy = 0.0f64;
    for (name, bps) in [("v1", vec![-4.0, 4.0]), ("v2", vec![0.0]), ("v3", vec![0.0]), ("v4", vec![0.0])] {
        let minus = phase_projection(&spec(name), 0.05, 64, tol)?;
        let plus = phase_projection(&negated(name, bps)?, 0.05, 64, tol)?;
        for l in -63..64 {
            reflect = reflect.max((plus.coeffs.coeff(-l) - minus.coeffs.coeff(l).conj()).norm());
        }
        energy = energy.max(minus.energy());
    }
    pass &= reflect <= 10.0 * tol && energy <= 1.0 + tol;
    notes.push(format!("table reflection {reflect:.1e}, max sum |c|^2 = {energy:.15}"));

    Ok(Outcome::new(pass, notes.join(", ")))
}

fn per_step_seconds(cfg: &SchemeConfig) -> efp_core::Result<f64> {
    let stepper = Stepper::new(cfg, PhaseFactorCache::global())?;
    let state = stepper.initial_state(&InitialDatum::gaussian())?;
    let steps = (200_000 / cfg.n).max(10);
    let mut best = f64::INFINITY;
    let mut s = state;
    for _ in 0..7 {
        let start = Instant::now();
        s = advance(&stepper, s, steps, |_| {})?;
        best = best.min(start.elapsed().as_secs_f64() / steps as f64);
    }
    Ok(best)
}

fn c10_cost(_: &mut Ctx) -> efp_core::Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [256usize, 1024, 4096] {
        let lt = per_step_seconds(&SchemeConfig::new(Scheme::LtEfp, n, 1e-4, 1.0, spec("v2")))?;
        let fs = per_step_seconds(&SchemeConfig::new(Scheme::Fswq { m: 4 * n }, n, 1e-4, 1.0, spec("v2")))?;
        let ratio = lt / fs;
        pass &= (1.0 / 3.0..=3.0).contains(&ratio);
        parts.push(format!("N = {n}: {:.1} us vs {:.1} us (ratio {ratio:.2})", lt * 1e6, fs * 1e6));
    }
    Ok(Outcome::new(pass, format!("LTeFP vs FSwQ-4N per step: {}", parts.join("; "))))
}

fn main() {
    let cache_dir = std::env::var_os("EFP_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("efp-reference-cache"));
    let mut ctx = Ctx {
        cache_dir,
        reports: HashMap::new(),
    };
    let checks: [(u32, &str, Check); 10] = [
        (1, "extended product exactness", c1_extended_product),
        (2, "LTeFP step oracle", c2_step_oracle),
        (3, "spatial order V1", c3_spatial_v1),
        (4, "spatial orders V1..V4", c4_spatial_trend),
        (5, "FSwQ order reduction", c5_fp_order_reduction),
        (6, "temporal order LTeFP V1", c6_temporal_v1),
        (7, "temporal order LTeFP V2", c7_temporal_v2),
        (8, "temporal order STeFP V3/V4", c8_temporal_strang),
        (9, "invariants", c9_invariants),
        (10, "cost trend", c10_cost),
    ];
    let mut failed = Vec::new();
    for (k, name, check) in checks {
        let start = Instant::now();
        let outcome = check(&mut ctx).unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        println!(
            "{} criterion {k} ({name}): {} [{:.1} s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: {} of 10 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
