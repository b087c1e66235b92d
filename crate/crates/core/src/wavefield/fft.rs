//! Cached 1-D plans and the row/column passes used by the propagators.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<HashMap<usize, Plans>> = RefCell::new(HashMap::new());
}

pub(crate) fn plans(n: usize) -> Plans {
    PLANS.with(|cell| {
        cell.borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    })
}

/// Unnormalised FFT over every row of an `n`-wide row-major buffer.
pub(crate) fn rows(data: &mut [Complex64], n: usize, inverse: bool) {
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
}

/// Full 2-D transform (unnormalised) via row pass, transpose, row pass, transpose.
pub fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    rows(data, n, inverse);
    transpose(data, n);
    rows(data, n, inverse);
    transpose(data, n);
}

pub(crate) fn transpose(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    let mut bi = 0;
    while bi < n {
        let mut bj = bi;
        while bj < n {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
            bj += B;
        }
        bi += B;
    }
}

/// Signed frequency index of FFT bin `i` on an `n`-point transform.
#[inline]
pub(crate) fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
