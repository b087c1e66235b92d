//! Composable finite-key bound for BB84 with a sampled parameter-estimation
//! set.

use serde::Serialize;

use crate::wavefield::golden_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteKeyParams {
    /// Error-correction leakage relative to the Shannon limit.
    pub ec_inefficiency: f64,
    pub eps_sec: f64,
    pub eps_cor: f64,
}

impl Default for FiniteKeyParams {
    fn default() -> Self {
        Self {
            ec_inefficiency: 1.16,
            eps_sec: 1e-9,
            eps_cor: 1e-9,
        }
    }
}

pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

fn length_with_sample(sifted: f64, k: f64, qber: f64, p: &FiniteKeyParams) -> f64 {
    let n = sifted - k;
    if k < 1.0 || n < 1.0 {
        return f64::NEG_INFINITY;
    }
    // statistical deviation of the phase error rate estimated from k bits
    let mu = ((n + k) / (n * k) * (k + 1.0) / k * (2.0 / p.eps_sec).ln()).sqrt();
    if qber + mu >= 0.5 {
        return f64::NEG_INFINITY;
    }
    n * (1.0 - binary_entropy(qber + mu))
        - p.ec_inefficiency * n * binary_entropy(qber)
        - (2.0 / (p.eps_sec * p.eps_sec * p.eps_cor)).log2()
}

/// Extractable key bits from `sifted` sifted bits at error rate `qber`,
/// with the parameter-estimation sample size optimised. Never negative.
pub fn finite_key_length(sifted: f64, qber: f64, params: &FiniteKeyParams) -> f64 {
    if !(sifted >= 2.0) || !(qber < 0.5) {
        return 0.0;
    }
    let f = |lk: f64| length_with_sample(sifted, lk.exp(), qber, params);
    let (lo, hi) = (0.0, (sifted / 2.0).ln());
    if hi <= lo {
        return 0.0;
    }
    // coarse scan, then refine around the best bracket
    const STEPS: usize = 48;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=STEPS {
        let x = lo + (hi - lo) * i as f64 / STEPS as f64;
        let v = f(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    let step = (hi - lo) / STEPS as f64;
    let x = golden_max(f, (best.1 - step).max(lo), (best.1 + step).min(hi), 1e-9);
    f(x).max(best.0).max(0.0)
}

/// Asymptotic secret fraction per sifted bit.
pub fn asymptotic_fraction(qber: f64, params: &FiniteKeyParams) -> f64 {
    (1.0 - binary_entropy(qber) - params.ec_inefficiency * binary_entropy(qber)).max(0.0)
}
