//! One analysis/synthesis stage under zero boundary conditions.

use super::filters::FilterBank;
use crate::error::{check_len, Error, Result};

/// Number of coefficients per channel for a length-`m` input.
pub fn stage_len(m: usize, taps: usize) -> usize {
    (m + taps - 1) / 2
}

/// Full convolution with both analysis filters, keeping odd samples.
pub fn analyze_stage_zpd(y: &[f64], fb: &FilterBank, use_dual: bool) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = fb.analysis(use_dual);
    let (m, taps) = (y.len(), lo.len());
    let k = stage_len(m, taps);
    let mut a = Vec::with_capacity(k);
    let mut d = Vec::with_capacity(k);
    for i in 0..k {
        // a[i] = Σ_j h[j] y[2i + 1 - j] over the taps that land inside y
        let centre = 2 * i + 1;
        let j_lo = centre.saturating_sub(m - 1);
        let j_hi = centre.min(taps - 1);
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in j_lo..=j_hi {
            let v = y[centre - j];
            sa += lo[j] * v;
            sd += hi[j] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

/// Inverse of [`analyze_stage_zpd`]: upsample, filter, sum, crop to `out_len`.
pub fn synth_stage_zpd(
    approx: &[f64],
    detail: &[f64],
    fb: &FilterBank,
    use_dual: bool,
    out_len: usize,
) -> Result<Vec<f64>> {
    let taps = fb.taps();
    let k = stage_len(out_len, taps);
    check_len("synthesis approximation", k, approx.len())?;
    check_len("synthesis detail", k, detail.len())?;
    if out_len == 0 {
        return Err(Error::Empty("synthesis output"));
    }
    let (lo, hi) = fb.synthesis(use_dual);
    let mut y = vec![0.0; out_len];
    for (i, (a, d)) in approx.iter().zip(detail).enumerate() {
        // g index = n + taps - 2 - 2i
        let offset = 2 * i as isize + 2 - taps as isize;
        let j_lo = (-offset).max(0) as usize;
        let j_hi = (out_len as isize - offset).min(taps as isize).max(0) as usize;
        for j in j_lo..j_hi {
            y[(offset + j as isize) as usize] += a * lo[j] + d * hi[j];
        }
    }
    Ok(y)
}
