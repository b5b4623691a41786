//! Dense checks of the primal/dual frame relations for one zero-boundary stage.

use serde::Serialize;

use super::filters::{FilterBank, WaveletKind};
use super::stage::{analyze_stage_zpd, stage_len, synth_stage_zpd};
use crate::error::Result;
use crate::linop::{dense_pinv, to_dense, DenseMatrix, LinearOperator};

/// Max-entry norms of the frame identities at one signal length.
///
/// `phi` is the primal analysis matrix, `phi_dual` the dual-filter analysis
/// matrix and `synth` the zero-boundary synthesis matrix, all for a single
/// stage on length-`n` signals.
#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub wavelet: String,
    pub n: usize,
    pub coefficients: usize,
    /// `‖Φ†Φ − I‖`.
    pub pinv_left_inverse: f64,
    /// `‖Φ̃* − Φ†‖`: does the dual-filter frame reconstruct like the pseudoinverse?
    pub dual_adjoint_vs_pinv: f64,
    /// `‖(Φ†)* − Φ̃‖`.
    pub pinv_adjoint_vs_dual: f64,
    /// `‖ΦΦ† − I‖`, nonzero whenever the frame is redundant.
    pub tightness_gap: f64,
    /// `‖SΦ − I‖`: filter-bank synthesis is a left inverse.
    pub synthesis_left_inverse: f64,
    /// `‖S − Φ̃*‖`: the adjoint of synthesis is dual analysis.
    pub synthesis_vs_dual_adjoint: f64,
    /// `‖Φ̃ − Φ‖`, zero for orthogonal banks.
    pub dual_vs_primal: f64,
}

fn stage_op(fb: &FilterBank, n: usize, dual: bool) -> LinearOperator {
    let k = stage_len(n, fb.taps());
    let fb = fb.clone();
    LinearOperator::new(
        n,
        2 * k,
        move |y| {
            let (a, d) = analyze_stage_zpd(y, &fb, dual);
            a.into_iter().chain(d).collect()
        },
        |_| unreachable!("only materialized"),
    )
}

fn synth_op(fb: &FilterBank, n: usize) -> LinearOperator {
    let k = stage_len(n, fb.taps());
    let fb = fb.clone();
    LinearOperator::new(
        2 * k,
        n,
        move |x| synth_stage_zpd(&x[..k], &x[k..], &fb, false, n).expect("sized"),
        |_| unreachable!("only materialized"),
    )
}

pub fn frame_relation_check(kind: WaveletKind, n: usize) -> Result<FrameReport> {
    let fb = FilterBank::new(kind);
    let phi = to_dense(&stage_op(&fb, n, false));
    let phi_dual = to_dense(&stage_op(&fb, n, true));
    let synth = to_dense(&synth_op(&fb, n));
    let pinv = dense_pinv(&phi)?;

    let ident = |m: usize| DenseMatrix::identity(m);
    Ok(FrameReport {
        wavelet: kind.name().to_string(),
        n,
        coefficients: phi.rows(),
        pinv_left_inverse: pinv.matmul(&phi)?.max_abs_diff(&ident(n)),
        dual_adjoint_vs_pinv: phi_dual.transpose().max_abs_diff(&pinv),
        pinv_adjoint_vs_dual: pinv.transpose().max_abs_diff(&phi_dual),
        tightness_gap: phi.matmul(&pinv)?.max_abs_diff(&ident(phi.rows())),
        synthesis_left_inverse: synth.matmul(&phi)?.max_abs_diff(&ident(n)),
        synthesis_vs_dual_adjoint: synth.max_abs_diff(&phi_dual.transpose()),
        dual_vs_primal: phi_dual.max_abs_diff(&phi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_an_orthonormal_basis() {
        let r = frame_relation_check(WaveletKind::Haar, 8).unwrap();
        assert_eq!(r.dual_vs_primal, 0.0);
        assert!(r.pinv_left_inverse < 1e-14);
        assert!(r.dual_adjoint_vs_pinv < 1e-14);
    }

    #[test]
    fn orthogonal_banks_satisfy_every_relation() {
        for kind in [WaveletKind::Db2, WaveletKind::Db4] {
            let r = frame_relation_check(kind, 16).unwrap();
            assert!(r.pinv_left_inverse < 1e-10, "{r:?}");
            assert!(r.dual_adjoint_vs_pinv < 1e-10, "{r:?}");
            assert!(r.pinv_adjoint_vs_dual < 1e-10, "{r:?}");
            assert!(r.tightness_gap > 1e-3, "redundant frame: {r:?}");
        }
    }

    #[test]
    fn synthesis_is_always_the_dual_adjoint() {
        for kind in WaveletKind::ALL {
            let r = frame_relation_check(kind, 16).unwrap();
            assert!(r.synthesis_left_inverse < 1e-12, "{r:?}");
            assert!(r.synthesis_vs_dual_adjoint < 1e-15, "{r:?}");
            assert!(r.pinv_left_inverse < 1e-10, "{r:?}");
        }
    }
}
