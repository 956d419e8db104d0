//! Thin wrapper over `rustfft` with a per-thread plan cache.
//!
//! Plans are looked up by length in a thread-local planner, so concurrent
//! solver runs never contend on a shared lock. For a fixed length the planner
//! always selects the same algorithm on a given machine, which keeps results
//! bitwise reproducible across threads.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward transform, `X_k = sum_j x_j e^{-2 pi i jk/n}`.
pub(crate) fn forward(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Unnormalized inverse transform, `x_j = sum_k X_k e^{2 pi i jk/n}`.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}
