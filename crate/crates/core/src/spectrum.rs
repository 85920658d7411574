//! Single-bin DFT helpers over whole cycles.

use std::f64::consts::PI;

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// RMS of harmonic `k` of a record spanning whole cycles of
/// `samples_per_cycle` samples. Trailing partial cycles are ignored.
pub fn harmonic_rms(x: &[f64], samples_per_cycle: usize, k: usize) -> f64 {
    let n = x.len() / samples_per_cycle * samples_per_cycle;
    if n == 0 {
        return 0.0;
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (m, v) in x[..n].iter().enumerate() {
        let phase = 2.0 * PI * (k * (m % samples_per_cycle)) as f64 / samples_per_cycle as f64;
        re += v * phase.cos();
        im -= v * phase.sin();
    }
    (re * re + im * im).sqrt() * 2f64.sqrt() / n as f64
}
