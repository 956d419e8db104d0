//! Independent O(N^2) oracles: direct DFT sums, direct convolution and the
//! closed-form Fourier coefficients of the square-well phase.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

pub const A: f64 = -16.0;
pub const L: f64 = 32.0;

pub fn mu(l: i64) -> f64 {
    2.0 * PI * l as f64 / L
}

pub fn node(j: usize, n: usize) -> f64 {
    A + j as f64 * L / n as f64
}

/// Discrete coefficients on `T_n` (natural order) of `n` periodic samples.
pub fn dft(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let lo = -(n as i64) / 2;
    (0..n as i64)
        .map(|i| {
            let l = lo + i;
            values
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::cis(-mu(l) * (node(j, n) - A)))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

/// Values at the `m` periodic nodes of the polynomial with natural-order `coeffs`.
pub fn synth(coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    let lo = -(coeffs.len() as i64) / 2;
    (0..m)
        .map(|j| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::cis(mu(lo + i as i64) * (node(j, m) - A)))
                .sum()
        })
        .collect()
}

/// `(P_N (W g))_k = sum_{l in T_N} W_{k-l} g_l`, with `w(l)` the coefficients of `W`.
pub fn convolve(w: impl Fn(i64) -> Complex64, g: &[Complex64]) -> Vec<Complex64> {
    let n = g.len() as i64;
    (0..n)
        .map(|i| {
            let k = i - n / 2;
            (0..n).map(|j| w(k - (j - n / 2)) * g[j as usize]).sum()
        })
        .collect()
}

/// Exact Fourier coefficient of `e^{-i tau V}` for the well `V = 0` on `(-4, 4)`, `10` outside.
pub fn square_well_phase_coeff(tau: f64, l: i64) -> Complex64 {
    let outside = Complex64::cis(-10.0 * tau);
    let jump = Complex64::new(1.0, 0.0) - outside;
    if l == 0 {
        outside + jump * (8.0 / L)
    } else {
        let m = mu(l);
        jump * Complex64::cis(-m * (-A)) * (2.0 * (4.0 * m).sin() / (m * L))
    }
}

pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// One Lie-Trotter eFP step computed by direct sums from grid values `psi`.
pub fn lt_efp_step_direct(psi: &[Complex64], tau: f64, beta: f64) -> Vec<Complex64> {
    let n = psi.len();
    let g: Vec<Complex64> = psi
        .iter()
        .map(|z| z * Complex64::cis(-tau * beta * z.norm_sqr()))
        .collect();
    let g_hat = dft(&g);
    let lo = -(n as i64) / 2;
    let u: Vec<Complex64> = convolve(|l| square_well_phase_coeff(tau, l), &g_hat)
        .into_iter()
        .enumerate()
        .map(|(i, c)| c * Complex64::cis(-tau * mu(lo + i as i64).powi(2)))
        .collect();
    synth(&u, n)
}
