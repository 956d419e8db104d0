//! Periodic grids, trigonometric polynomials and the operators acting on them.
//!
//! Fourier convention: on `Omega = (a, b)` with `L = b - a` the basis is
//! `e^{i mu_l (x - a)}` with `mu_l = 2 pi l / L`. A field of bandwidth `K`
//! carries the coefficients for `l` in `T_K = {-K/2, ..., K/2 - 1}`.
//!
//! Coefficients are stored in natural frequency order: slot `i` holds
//! frequency `l = i - K/2`. Transform-native order (slot `l mod K`) only
//! exists inside this module; the helpers `to_transform_order` and
//! `natural_from_transform` convert between the two.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// The periodic box `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    a: f64,
    b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::config(format!(
                "domain requires finite a < b, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Angular frequency `mu_l = 2 pi l / L`.
    pub fn frequency(&self, l: i64) -> f64 {
        2.0 * PI * l as f64 / self.length()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

impl Default for Domain {
    /// `(-16, 16)`, the box used throughout the convergence studies.
    fn default() -> Self {
        Self { a: -16.0, b: 16.0 }
    }
}

fn check_bandwidth(k: usize, what: &str) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::config(format!(
            "{what} must be an even integer >= 2, got {k}"
        )));
    }
    Ok(())
}

/// Uniform grid `x_j = a + j h`, `j = 0..=K`, with `h = L / K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    domain: Domain,
    n: usize,
}

impl UniformGrid {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        check_bandwidth(n, "grid size")?;
        Ok(Self { domain, n })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.domain.length() / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n {
            return self.domain.b;
        }
        self.domain.a + j as f64 * self.h()
    }

    /// All `K + 1` nodes including the closing node `x_K = b`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.node(j)).collect()
    }
}

/// A trigonometric polynomial in `X_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: Domain,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(domain: Domain, bandwidth: usize) -> Result<Self> {
        check_bandwidth(bandwidth, "bandwidth")?;
        Ok(Self {
            domain,
            coeffs: vec![Complex64::new(0.0, 0.0); bandwidth],
        })
    }

    /// Builds a field from coefficients in natural order (`l = -K/2` first).
    pub fn from_coeffs(domain: Domain, coeffs: Vec<Complex64>) -> Result<Self> {
        check_bandwidth(coeffs.len(), "bandwidth")?;
        Ok(Self { domain, coeffs })
    }

    pub fn single_mode(domain: Domain, bandwidth: usize, l: i64, value: Complex64) -> Result<Self> {
        let mut field = Self::zeros(domain, bandwidth)?;
        let slot = field
            .slot(l)
            .ok_or_else(|| Error::config(format!("mode {l} is outside T_{bandwidth}")))?;
        field.coeffs[slot] = value;
        Ok(field)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn bandwidth(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Lowest frequency `-K/2`.
    pub fn min_frequency(&self) -> i64 {
        -(self.bandwidth() as i64) / 2
    }

    /// The frequencies `T_K` in storage order.
    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let lo = self.min_frequency();
        (0..self.bandwidth() as i64).map(move |i| lo + i)
    }

    fn slot(&self, l: i64) -> Option<usize> {
        let i = l - self.min_frequency();
        (0..self.bandwidth() as i64).contains(&i).then_some(i as usize)
    }

    /// Coefficient of frequency `l`; zero when `l` is outside `T_K`.
    pub fn coeff(&self, l: i64) -> Complex64 {
        self.slot(l)
            .map(|i| self.coeffs[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set_coeff(&mut self, l: i64, value: Complex64) -> Result<()> {
        let k = self.bandwidth();
        let slot = self
            .slot(l)
            .ok_or_else(|| Error::config(format!("mode {l} is outside T_{k}")))?;
        self.coeffs[slot] = value;
        Ok(())
    }

    /// Pointwise value of the polynomial at `x`.
    pub fn value_at(&self, x: f64) -> Complex64 {
        self.frequencies()
            .zip(&self.coeffs)
            .map(|(l, c)| c * Complex64::cis(self.domain.frequency(l) * (x - self.domain.a)))
            .sum()
    }

    pub fn norm(&self, m: u32) -> f64 {
        sobolev_norm(self, m)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Samples on the `K`-point grid, an element of `Y_K`.
///
/// `values` has `K + 1` entries and the closure `v_0 = v_K` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    grid: UniformGrid,
    values: Vec<Complex64>,
}

impl NodalField {
    /// Takes `K + 1` values and checks the periodic closure exactly.
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() + 1 {
            return Err(Error::config(format!(
                "nodal field on a {}-point grid needs {} values, got {}",
                grid.n_points(),
                grid.n_points() + 1,
                values.len()
            )));
        }
        if values[0] != values[grid.n_points()] {
            return Err(Error::config("nodal field violates periodic closure v_0 = v_K"));
        }
        Ok(Self { grid, values })
    }

    /// Takes the `K` values `v_0..v_{K-1}` and appends `v_K = v_0`.
    pub fn from_periodic(grid: UniformGrid, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::config(format!(
                "expected {} periodic samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        values.push(values[0]);
        Ok(Self { grid, values })
    }

    /// Samples `f` at `x_0..x_{K-1}`; the closing value is copied from `x_0`.
    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let mut values: Vec<Complex64> = (0..grid.n_points()).map(|j| f(grid.node(j))).collect();
        values.push(values[0]);
        Self { grid, values }
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `v_0..v_{K-1}`, without the duplicated closing node.
    pub fn periodic_values(&self) -> &[Complex64] {
        &self.values[..self.grid.n_points()]
    }

    /// Applies `f` to every node value, keeping the closure intact.
    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut values: Vec<Complex64> = self.periodic_values().iter().map(|&v| f(v)).collect();
        values.push(values[0]);
        Self {
            grid: self.grid,
            values,
        }
    }

    /// `h * sum_{j<K} |v_j|^2`.
    pub fn discrete_mass(&self) -> f64 {
        self.grid.h() * self.periodic_values().iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Places natural-order coefficients into a zeroed length-`m` buffer at slots `l mod m`.
fn to_transform_order(u: &SpectralField, m: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (l, &c) in u.frequencies().zip(u.coeffs()) {
        buf[l.rem_euclid(m as i64) as usize] = c;
    }
    buf
}

/// Reads frequencies `T_n` out of a transformed length-`m` buffer and applies the `1/m` scale.
fn natural_from_transform(buf: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = buf.len() as i64;
    let scale = buf.len() as f64;
    let lo = -(n as i64) / 2;
    (0..n as i64)
        .map(|i| buf[(lo + i).rem_euclid(m) as usize] / scale)
        .collect()
}

/// Values of `u` at `x^M_0..x^M_{M-1}` (no closing node).
pub(crate) fn sample_periodic(u: &SpectralField, m: usize) -> Vec<Complex64> {
    let mut buf = to_transform_order(u, m);
    fft::inverse(&mut buf);
    buf
}

/// Discrete Fourier coefficients on `T_n` of `m` periodic samples, `n <= m`.
pub(crate) fn coefficients_from_samples(samples: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    fft::forward(&mut buf);
    natural_from_transform(&buf, n)
}

/// Fourier interpolation `I_K v`.
pub fn interpolate(v: &NodalField) -> SpectralField {
    let k = v.grid.n_points();
    SpectralField {
        domain: v.grid.domain(),
        coeffs: coefficients_from_samples(v.periodic_values(), k),
    }
}

/// Evaluates `u` on the `m`-point grid by zero padding and one inverse transform.
pub fn evaluate_on_grid(u: &SpectralField, m: usize) -> Result<NodalField> {
    let grid = UniformGrid::new(u.domain, m)?;
    if m < u.bandwidth() {
        return Err(Error::config(format!(
            "evaluation grid of {m} points would alias a bandwidth-{} field",
            u.bandwidth()
        )));
    }
    let mut values = sample_periodic(u, m);
    values.push(values[0]);
    Ok(NodalField { grid, values })
}

/// `P_N` restricted to trigonometric polynomials: keep the frequencies in `T_N`.
pub fn truncate(u: &SpectralField, n: usize) -> Result<SpectralField> {
    check_bandwidth(n, "truncation bandwidth")?;
    let k = u.bandwidth();
    if n > k {
        return Err(Error::config(format!(
            "cannot truncate a bandwidth-{k} field to larger bandwidth {n}"
        )));
    }
    let start = k / 2 - n / 2;
    Ok(SpectralField {
        domain: u.domain,
        coeffs: u.coeffs[start..start + n].to_vec(),
    })
}

/// Embeds `u` into `X_K` for `K >= bandwidth(u)`, filling new modes with zero.
pub fn zero_pad(u: &SpectralField, k: usize) -> Result<SpectralField> {
    check_bandwidth(k, "padded bandwidth")?;
    let n = u.bandwidth();
    if k < n {
        return Err(Error::config(format!(
            "cannot pad a bandwidth-{n} field to smaller bandwidth {k}"
        )));
    }
    let mut out = SpectralField::zeros(u.domain, k)?;
    let start = k / 2 - n / 2;
    out.coeffs[start..start + n].copy_from_slice(&u.coeffs);
    Ok(out)
}

/// Phase multipliers `e^{-i t mu_l^2}` of the free Schrodinger flow for `T_K`.
pub(crate) fn free_flow_phases(domain: Domain, bandwidth: usize, t: f64) -> Vec<Complex64> {
    let lo = -(bandwidth as i64) / 2;
    (0..bandwidth as i64)
        .map(|i| {
            let mu = domain.frequency(lo + i);
            Complex64::cis(-t * mu * mu)
        })
        .collect()
}

/// Exact free flow `e^{i t Delta}` on `X_K`: `c_l <- e^{-i t mu_l^2} c_l`.
pub fn free_flow(u: &SpectralField, t: f64) -> SpectralField {
    apply_phases(u, &free_flow_phases(u.domain, u.bandwidth(), t))
}

/// Multiplies coefficients by precomputed [`free_flow_phases`].
pub(crate) fn apply_phases(u: &SpectralField, phases: &[Complex64]) -> SpectralField {
    debug_assert_eq!(phases.len(), u.bandwidth());
    SpectralField {
        domain: u.domain,
        coeffs: u.coeffs.iter().zip(phases).map(|(c, p)| c * p).collect(),
    }
}

/// Exact `P_N (W g)` for `W` in `X_{2N}` and `g` in `X_N`.
///
/// Both factors are evaluated on the `4N`-point grid, multiplied, transformed
/// back and truncated to `T_N`. The product has frequencies in
/// `[-3N/2, 3N/2 - 2]`, and any alias of `T_N` modulo `4N` lies beyond
/// `|l| >= 7N/2`, so the result is the exact convolution
/// `sum_{k in T_N} W_{l-k} g_k`.
pub fn extended_product(w: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let n = g.bandwidth();
    if w.bandwidth() != 2 * n {
        return Err(Error::config(format!(
            "extended product needs bandwidths 2N and N, got {} and {n}",
            w.bandwidth()
        )));
    }
    if w.domain != g.domain {
        return Err(Error::config("extended product factors live on different domains"));
    }
    let w_fine = sample_periodic(w, 4 * n);
    Ok(extended_product_sampled(&w_fine, g))
}

/// `extended_product` with the first factor already sampled on the `4N` grid.
pub(crate) fn extended_product_sampled(w_fine: &[Complex64], g: &SpectralField) -> SpectralField {
    let n = g.bandwidth();
    debug_assert_eq!(w_fine.len(), 4 * n);
    let mut prod = sample_periodic(g, 4 * n);
    for (p, w) in prod.iter_mut().zip(w_fine) {
        *p = w * *p;
    }
    SpectralField {
        domain: g.domain,
        coeffs: coefficients_from_samples(&prod, n),
    }
}

/// `(L * sum_l (1 + mu_l^2)^m |c_l|^2)^{1/2}`; `m = 0` is `L^2`, `m = 1` is `H^1`.
pub fn sobolev_norm(u: &SpectralField, m: u32) -> f64 {
    let sum: f64 = u
        .frequencies()
        .zip(&u.coeffs)
        .map(|(l, c)| {
            let mu = u.domain.frequency(l);
            (1.0 + mu * mu).powi(m as i32) * c.norm_sqr()
        })
        .sum();
    (u.domain.length() * sum).sqrt()
}

/// Sobolev norm of `u - reference` with `u` zero-padded to the reference bandwidth.
pub fn diff_norm(u: &SpectralField, reference: &SpectralField, m: u32) -> Result<f64> {
    if u.domain != reference.domain {
        return Err(Error::config("cannot compare fields on different domains"));
    }
    if reference.bandwidth() < u.bandwidth() {
        return Err(Error::config(format!(
            "reference bandwidth {} is coarser than the field ({})",
            reference.bandwidth(),
            u.bandwidth()
        )));
    }
    let padded = zero_pad(u, reference.bandwidth())?;
    let diff = SpectralField {
        domain: u.domain,
        coeffs: padded
            .coeffs
            .iter()
            .zip(&reference.coeffs)
            .map(|(a, b)| a - b)
            .collect(),
    };
    Ok(sobolev_norm(&diff, m))
}

/// Writes `l,re,im` rows in ascending `l`.
pub fn write_spectral_csv<W: Write>(mut out: W, u: &SpectralField) -> std::io::Result<()> {
    writeln!(out, "l,re,im")?;
    for (l, c) in u.frequencies().zip(&u.coeffs) {
        writeln!(out, "{l},{:e},{:e}", c.re, c.im)?;
    }
    Ok(())
}

/// Writes `j,x,re,im` rows for `j = 0..=K`.
pub fn write_nodal_csv<W: Write>(mut out: W, v: &NodalField) -> std::io::Result<()> {
    writeln!(out, "j,x,re,im")?;
    for (j, c) in v.values.iter().enumerate() {
        writeln!(out, "{j},{:e},{:e},{:e}", v.grid.node(j), c.re, c.im)?;
    }
    Ok(())
}

pub fn save_spectral_csv(path: &Path, u: &SpectralField) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_spectral_csv(&mut out, u).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a field written by [`write_spectral_csv`]; rows must cover a contiguous `T_K`.
pub fn read_spectral_csv<R: BufRead>(input: R, domain: Domain, path: &Path) -> Result<SpectralField> {
    let parse_err = |detail: String| Error::Parse {
        path: path.to_path_buf(),
        detail,
    };
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "l,re,im" => {}
        _ => return Err(parse_err("missing `l,re,im` header".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = |name: &str| {
            parts
                .next()
                .ok_or_else(|| parse_err(format!("line {}: missing {name}", lineno + 2)))
        };
        let l: i64 = next("l")?
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("line {}: {e}", lineno + 2)))?;
        let re: f64 = next("re")?
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("line {}: {e}", lineno + 2)))?;
        let im: f64 = next("im")?
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("line {}: {e}", lineno + 2)))?;
        rows.push((l, Complex64::new(re, im)));
    }
    let k = rows.len();
    if k < 2 || k % 2 != 0 {
        return Err(parse_err(format!("expected an even number (>= 2) of rows, got {k}")));
    }
    let lo = -(k as i64) / 2;
    for (i, (l, _)) in rows.iter().enumerate() {
        if *l != lo + i as i64 {
            return Err(parse_err(format!("row {i} has l = {l}, expected {}", lo + i as i64)));
        }
    }
    SpectralField::from_coeffs(domain, rows.into_iter().map(|(_, c)| c).collect())
}

pub fn load_spectral_csv(path: &Path, domain: Domain) -> Result<SpectralField> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_spectral_csv(std::io::BufReader::new(file), domain, path)
}
