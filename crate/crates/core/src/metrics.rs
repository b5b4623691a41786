//! Relative error, sparsity and SSIM.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::linop::norm2;

/// Coefficients with magnitude at or below this count as zero.
pub const NNZ_THRESHOLD: f64 = 1e-12;

/// `‖estimate − reference‖₂ / ‖reference‖₂`.
pub fn rel_err(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    check_len("relative error operands", reference.len(), estimate.len())?;
    let denom = norm2(reference);
    if denom == 0.0 {
        return Err(Error::InvalidParameter("relative error against a zero reference".into()));
    }
    let diff: f64 = estimate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / denom)
}

/// Fraction of entries with `|c| > 1e-12`.
pub fn nnz_fraction(coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::Empty("coefficients"));
    }
    let nnz = coeffs.iter().filter(|c| c.abs() > NNZ_THRESHOLD).count();
    Ok(nnz as f64 / coeffs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Odd side of the Gaussian window.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 || self.window == 0 {
            return Err(Error::InvalidParameter(format!("SSIM window must be odd, got {}", self.window)));
        }
        if !(self.sigma > 0.0 && self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::InvalidParameter("SSIM sigma, k1, k2 and range must be positive".into()));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        let c = (self.window / 2) as f64;
        let w: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - c;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }
}

/// Separable weighted local means over the "valid" window positions.
fn filter_valid(img: &Image, w: &[f64]) -> Image {
    let k = w.len();
    let horiz = img.map_rows(|r| r.windows(k).map(|win| dot_window(win, w)).collect());
    horiz.map_cols(|c| c.windows(k).map(|win| dot_window(win, w)).collect())
}

fn dot_window(win: &[f64], w: &[f64]) -> f64 {
    win.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Mean of the Gaussian-weighted local SSIM map.
pub fn ssim(a: &Image, b: &Image, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    b.require_shape(a.rows(), a.cols())?;
    if a.rows().min(a.cols()) < params.window {
        return Err(Error::InvalidParameter(format!(
            "SSIM window {} exceeds image side {}",
            params.window,
            a.rows().min(a.cols())
        )));
    }
    let w = params.weights();
    let prod = |x: &Image, y: &Image| {
        Image::new(
            x.rows(),
            x.cols(),
            x.as_slice().iter().zip(y.as_slice()).map(|(u, v)| u * v).collect(),
        )
        .expect("same shape")
    };
    let mu_a = filter_valid(a, &w);
    let mu_b = filter_valid(b, &w);
    let e_aa = filter_valid(&prod(a, a), &w);
    let e_bb = filter_valid(&prod(b, b), &w);
    let e_ab = filter_valid(&prod(a, b), &w);

    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a.as_slice()[i], mu_b.as_slice()[i]);
        let va = e_aa.as_slice()[i] - ma * ma;
        let vb = e_bb.as_slice()[i] - mb * mb;
        let cov = e_ab.as_slice()[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::randn;

    #[test]
    fn rel_err_examples() {
        let r = randn(256, 1);
        assert_eq!(rel_err(&r, &r).unwrap(), 0.0);
        let e: Vec<f64> = r.iter().map(|v| 1.01 * v).collect();
        assert!((rel_err(&e, &r).unwrap() - 0.01).abs() < 1e-14);
        assert!(rel_err(&r, &vec![0.0; 256]).is_err());
    }

    #[test]
    fn nnz_examples() {
        assert_eq!(nnz_fraction(&[0.0; 10]).unwrap(), 0.0);
        assert_eq!(nnz_fraction(&randn(50, 2)).unwrap(), 1.0);
        assert_eq!(nnz_fraction(&[1e-13, -2e-12, 0.5, 0.0]).unwrap(), 0.5);
        assert!(nnz_fraction(&[]).is_err());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let p = SsimParams::default();
        let a = Image::new(24, 20, randn(480, 3).iter().map(|v| 0.5 + 0.1 * v).collect()).unwrap();
        let b = Image::new(24, 20, randn(480, 4).iter().map(|v| 0.5 + 0.1 * v).collect()).unwrap();
        assert_eq!(ssim(&a, &a, &p).unwrap(), 1.0);
        let ab = ssim(&a, &b, &p).unwrap();
        assert_eq!(ab, ssim(&b, &a, &p).unwrap());
        assert!(ab < 0.5 && ab > -1.0);
    }

    #[test]
    fn ssim_rejects_bad_shapes() {
        let p = SsimParams::default();
        assert!(ssim(&Image::zeros(8, 8), &Image::zeros(8, 8), &p).is_err());
        assert!(ssim(&Image::zeros(12, 12), &Image::zeros(12, 13), &p).is_err());
    }
}
