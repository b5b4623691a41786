//! Wavelet-regularized inverse problems with exact adjoints.
//!
//! Boundary-extended discrete wavelet transforms are frames, not orthonormal
//! bases, so the pseudoinverse used for reconstruction is generally not the
//! adjoint of the synthesis operator. This crate builds every operator
//! together with its exact adjoint and uses them in proximal-gradient solvers
//! for image deblurring and multi-channel blind channel estimation.
//!
//! ```
//! use fastadj::{dot_test, AdjointMode, Dwt, ExtensionKind, WaveletKind};
//!
//! let dwt = Dwt::new(WaveletKind::Cdf97, 2, ExtensionKind::Sym).unwrap();
//! let w = dwt.synthesis_op(64, AdjointMode::TrueAdjoint).unwrap();
//! assert!(dot_test(&w, 10, 1) < 1e-12);
//! ```

pub mod conv;
pub mod dwt;
pub mod error;
pub mod extend;
pub mod image;
pub mod linop;
pub mod metrics;
pub mod problems;
pub mod regularizers;
pub mod solvers;

pub use conv::{blur_op, blur_op_with_path, conv_full, gaussian_psf, xcorr_valid, ConvPath, Psf};
pub use dwt::{AdjointMode, Dwt, FilterBank, Pyramid2d, WaveletCoeffs, WaveletKind};
pub use error::{Error, Result};
pub use extend::{Axis, ExtensionKind, ExtensionSpec};
pub use image::Image;
pub use linop::{compose, dense_pinv, dot_test, randn, to_dense, DenseMatrix, LinearOperator};
pub use metrics::{nnz_fraction, rel_err, ssim, SsimParams};
pub use problems::{
    bce_solve, bce_synthesize_data, deblur_solve, synthetic_chart, BceData, BceInit, BceProblem, BceReport,
    BceWeights, DeblurProblem, DeblurReport,
};
pub use solvers::{fista, ista, prox_grad_multiblock, Composite, MultiBlock, SolveReport, SolverConfig, StopReason};
