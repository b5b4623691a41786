//! Penalties: the ℓ1 prox, the Huber function, first differences and the
//! Huber-smoothed total variation `L_δ(Dh)/δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::LinearOperator;

/// `sign(v) · max(|v| - tau, 0)`, the prox of `tau‖·‖₁`.
pub fn soft_threshold(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(v.iter().map(|&x| shrink(x, tau)).collect())
}

pub(crate) fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberSpec {
    delta: f64,
}

impl HuberSpec {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("Huber delta must be positive, got {delta}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// `Σ L_δ(z_i)` with `L_δ(z) = z²/2` for `|z| ≤ δ` and `δ(|z| - δ/2)` beyond.
pub fn huber_value(z: &[f64], spec: &HuberSpec) -> f64 {
    let d = spec.delta;
    z.iter()
        .map(|&v| {
            let a = v.abs();
            if a <= d {
                0.5 * v * v
            } else {
                d * (a - 0.5 * d)
            }
        })
        .sum()
}

pub fn huber_grad(z: &[f64], spec: &HuberSpec) -> Vec<f64> {
    let d = spec.delta;
    z.iter().map(|&v| v.clamp(-d, d)).collect()
}

fn diff(h: &[f64]) -> Vec<f64> {
    h.windows(2).map(|w| w[1] - w[0]).collect()
}

fn diff_adjoint(g: &[f64]) -> Vec<f64> {
    let n = g.len() + 1;
    (0..n)
        .map(|j| {
            let left = if j > 0 { g[j - 1] } else { 0.0 };
            let right = if j < n - 1 { g[j] } else { 0.0 };
            left - right
        })
        .collect()
}

/// `D`: `(Dh)_j = h_{j+1} - h_j`, mapping length `n` to `n - 1`.
pub fn diff_op(n: usize) -> Result<LinearOperator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("difference operator needs n >= 2, got {n}")));
    }
    Ok(LinearOperator::new(n, n - 1, diff, diff_adjoint))
}

fn check_tv_len(h: &[f64]) -> Result<()> {
    if h.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "smoothed TV needs at least 2 samples, got {}",
            h.len()
        )));
    }
    Ok(())
}

/// `L_δ(Dh)/δ`, a differentiable stand-in for `‖Dh‖₁`.
pub fn tv_soft_value(h: &[f64], spec: &HuberSpec) -> Result<f64> {
    check_tv_len(h)?;
    Ok(huber_value(&diff(h), spec) / spec.delta)
}

/// `Dᵀ ∇L_δ(Dh) / δ`.
pub fn tv_soft_grad(h: &[f64], spec: &HuberSpec) -> Result<Vec<f64>> {
    check_tv_len(h)?;
    let g = huber_grad(&diff(h), spec);
    Ok(diff_adjoint(&g).into_iter().map(|v| v / spec.delta).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{dot_test, randn};

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -0.5, 0.0], 1.0).unwrap(), vec![2.0, 0.0, 0.0]);
        let v = randn(9, 1);
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v);
        assert!(soft_threshold(&v, -1.0).is_err());
    }

    #[test]
    fn soft_threshold_minimizes_per_coordinate() {
        let v = randn(20, 2);
        let tau = 0.4;
        let out = soft_threshold(&v, tau).unwrap();
        for (x, z) in v.iter().zip(&out) {
            let obj = |t: f64| 0.5 * (t - x).powi(2) + tau * t.abs();
            let best = (-40_000..=40_000)
                .map(|i| i as f64 * 1e-4)
                .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
                .unwrap();
            assert!((best - z).abs() <= 1e-4, "{x}: {best} vs {z}");
        }
    }

    #[test]
    fn huber_branches() {
        let s = HuberSpec::new(0.1).unwrap();
        assert_eq!(huber_value(&[0.0], &s), 0.0);
        assert_eq!(huber_grad(&[0.0], &s), vec![0.0]);
        assert!((huber_value(&[0.05], &s) - 0.00125).abs() < 1e-17);
        assert_eq!(huber_grad(&[0.05], &s), vec![0.05]);
        assert!((huber_value(&[1.0], &s) - 0.095).abs() < 1e-15);
        assert_eq!(huber_grad(&[-1.0, 1.0], &s), vec![-0.1, 0.1]);
        // both branches meet at δ²/2
        assert!((huber_value(&[0.1], &s) - 0.005).abs() < 1e-17);
        assert!(HuberSpec::new(0.0).is_err());
    }

    #[test]
    fn difference_operator() {
        let d = diff_op(3).unwrap();
        assert_eq!(d.apply(&[1.0, 2.0, 4.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(d.apply(&[7.0; 3]).unwrap(), vec![0.0; 2]);
        assert_eq!(d.apply_adjoint(&[1.0, 2.0]).unwrap(), vec![-1.0, -1.0, 2.0]);
        assert!(dot_test(&diff_op(17).unwrap(), 20, 1) <= 1e-14);
        assert!(diff_op(1).is_err());
    }

    #[test]
    fn tv_soft_examples() {
        let s = HuberSpec::new(0.1).unwrap();
        assert_eq!(tv_soft_value(&[2.0; 5], &s).unwrap(), 0.0);
        assert_eq!(tv_soft_grad(&[2.0; 5], &s).unwrap(), vec![0.0; 5]);
        assert!(tv_soft_value(&[1.0], &s).is_err());

        let h = [0.0, 1.0, -0.5, 2.0];
        let l1: f64 = diff(&h).iter().map(|v| v.abs()).sum();
        let v = tv_soft_value(&h, &s).unwrap();
        assert!((l1 - v - 3.0 * 0.1 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn tv_soft_grad_matches_finite_differences() {
        let s = HuberSpec::new(0.1).unwrap();
        let h: Vec<f64> = randn(20, 3).iter().map(|v| 0.2 * v).collect();
        let g = tv_soft_grad(&h, &s).unwrap();
        let eps = 1e-6;
        let fd: Vec<f64> = (0..h.len())
            .map(|i| {
                let mut p = h.clone();
                let mut m = h.clone();
                p[i] += eps;
                m[i] -= eps;
                (tv_soft_value(&p, &s).unwrap() - tv_soft_value(&m, &s).unwrap()) / (2.0 * eps)
            })
            .collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den <= 1e-6, "{}", num / den);
    }
}
