//! Multi-stage discrete wavelet transforms with exact adjoints.
//!
//! A stage of analysis is `W†_zpd ∘ E`: extend the current approximation,
//! then run the zero-boundary filter bank over the extended signal and keep
//! every coefficient. A stage of synthesis is the left inverse
//! `E† ∘ W_zpd`. The adjoint of synthesis is therefore
//! `W*_zpd ∘ (E†)*`, and `W*_zpd` is the *dual* zero-boundary analysis.
//! Using primal analysis in its place (the "pseudoinverse approximation")
//! is available through [`AdjointMode::PinvApprox`] and is only exact for
//! orthogonal banks with zero padding.

mod filters;
mod frame;
mod stage;
mod twod;

pub use filters::{FilterBank, WaveletKind};
pub use frame::{frame_relation_check, FrameReport};
pub use stage::{analyze_stage_zpd, stage_len, synth_stage_zpd};
pub use twod::{Pyramid2d, Subbands};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::extend::{extend, extend_adjoint, extend_pinv, extend_pinv_adjoint, ExtensionKind, ExtensionSpec};
use crate::linop::LinearOperator;

/// What occupies the adjoint slot of a synthesis operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjointMode {
    #[serde(rename = "true")]
    TrueAdjoint,
    /// Primal analysis, i.e. `W†` standing in for `W*`.
    PinvApprox,
}

impl AdjointMode {
    pub fn name(self) -> &'static str {
        match self {
            AdjointMode::TrueAdjoint => "true",
            AdjointMode::PinvApprox => "pinv-approx",
        }
    }
}

impl fmt::Display for AdjointMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdjointMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" | "true-adjoint" | "adjoint" => Ok(AdjointMode::TrueAdjoint),
            "pinv-approx" | "pinv" => Ok(AdjointMode::PinvApprox),
            other => Err(Error::InvalidParameter(format!(
                "unknown adjoint mode '{other}' (expected true or pinv-approx)"
            ))),
        }
    }
}

/// Multi-level 1-D coefficients.
///
/// `details` runs from the coarsest level to the finest. `level_lengths`
/// is `[N, K1, …, KJ]`: the signal length followed by the per-channel
/// coefficient count of each stage, so `details[i]` has length
/// `level_lengths[J - i]` and `approx` has length `level_lengths[J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub level_lengths: Vec<usize>,
}

impl WaveletCoeffs {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn zeros(level_lengths: &[usize]) -> Self {
        let j = level_lengths.len() - 1;
        Self {
            approx: vec![0.0; level_lengths[j]],
            details: (1..=j).rev().map(|l| vec![0.0; level_lengths[l]]).collect(),
            level_lengths: level_lengths.to_vec(),
        }
    }

    pub fn total_len(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    /// `[approx, details[0], details[1], …]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        out.extend(&self.approx);
        for d in &self.details {
            out.extend(d);
        }
        out
    }

    pub fn from_flat(flat: &[f64], level_lengths: &[usize]) -> Result<Self> {
        if level_lengths.len() < 2 {
            return Err(Error::InvalidParameter("level_lengths needs at least one stage".into()));
        }
        let j = level_lengths.len() - 1;
        let total = level_lengths[j] + level_lengths[1..].iter().sum::<usize>();
        check_len("flattened wavelet coefficients", total, flat.len())?;
        let (approx, mut rest) = flat.split_at(level_lengths[j]);
        let mut details = Vec::with_capacity(j);
        for l in (1..=j).rev() {
            let (d, r) = rest.split_at(level_lengths[l]);
            details.push(d.to_vec());
            rest = r;
        }
        Ok(Self {
            approx: approx.to_vec(),
            details,
            level_lengths: level_lengths.to_vec(),
        })
    }

    fn check(&self, expected: &[usize]) -> Result<()> {
        if self.level_lengths != expected {
            return Err(Error::InvalidParameter(format!(
                "coefficient level lengths {:?} do not match the transform ({:?})",
                self.level_lengths, expected
            )));
        }
        let j = expected.len() - 1;
        check_len("number of detail levels", j, self.details.len())?;
        check_len("approximation coefficients", expected[j], self.approx.len())?;
        for (i, d) in self.details.iter().enumerate() {
            check_len("detail coefficients", expected[j - i], d.len())?;
        }
        Ok(())
    }
}

/// A `levels`-stage transform for one filter bank and extension mode.
///
/// Sym and per extend by `L - 1` samples per stage (`L` the longest filter
/// support); zpd relies on the implicit zeros of the full convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Dwt {
    bank: FilterBank,
    levels: usize,
    ext: ExtensionKind,
}

impl Dwt {
    pub fn new(kind: WaveletKind, levels: usize, ext: ExtensionKind) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter("at least one stage is required".into()));
        }
        Ok(Self {
            bank: FilterBank::new(kind),
            levels,
            ext,
        })
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn extension(&self) -> ExtensionKind {
        self.ext
    }

    pub fn pad(&self) -> usize {
        match self.ext {
            ExtensionKind::Zpd => 0,
            _ => self.bank.max_len() - 1,
        }
    }

    pub fn spec(&self) -> ExtensionSpec {
        ExtensionSpec::new(self.ext, self.pad())
    }

    /// `[N, K1, …, KJ]` for a length-`n` signal.
    pub fn level_lengths(&self, n: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(Error::Empty("signal to transform"));
        }
        let pad = self.pad();
        let mut lengths = vec![n];
        let mut m = n;
        for level in 1..=self.levels {
            if m < pad {
                return Err(Error::TooManyLevels { level, len: m, pad });
            }
            m = stage_len(m + 2 * pad, self.bank.taps());
            lengths.push(m);
        }
        Ok(lengths)
    }

    pub fn coeff_len(&self, n: usize) -> Result<usize> {
        let l = self.level_lengths(n)?;
        Ok(l[self.levels] + l[1..].iter().sum::<usize>())
    }

    // Single stages; these are what the 2-D transform applies along each axis.

    pub(crate) fn analysis_step(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ext = extend(y, &self.spec()).expect("length validated by level_lengths");
        analyze_stage_zpd(&ext, &self.bank, false)
    }

    pub(crate) fn synthesis_step(&self, a: &[f64], d: &[f64], m: usize) -> Result<Vec<f64>> {
        let spec = self.spec();
        let ext = synth_stage_zpd(a, d, &self.bank, false, spec.extended_len(m))?;
        extend_pinv(&ext, &spec, m)
    }

    pub(crate) fn synthesis_step_adjoint(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ext = extend_pinv_adjoint(v, &self.spec()).expect("length validated by level_lengths");
        analyze_stage_zpd(&ext, &self.bank, true)
    }

    pub(crate) fn analysis_step_adjoint(&self, a: &[f64], d: &[f64], m: usize) -> Result<Vec<f64>> {
        let spec = self.spec();
        let ext = synth_stage_zpd(a, d, &self.bank, true, spec.extended_len(m))?;
        extend_adjoint(&ext, &spec, m)
    }

    /// `W† y`.
    pub fn analyze(&self, y: &[f64]) -> Result<WaveletCoeffs> {
        let level_lengths = self.level_lengths(y.len())?;
        Ok(self.cascade(y, level_lengths, |v| self.analysis_step(v)))
    }

    /// `W* v`: the exact adjoint of [`Dwt::synthesize`].
    pub fn synthesize_adjoint(&self, v: &[f64]) -> Result<WaveletCoeffs> {
        let level_lengths = self.level_lengths(v.len())?;
        Ok(self.cascade(v, level_lengths, |u| self.synthesis_step_adjoint(u)))
    }

    fn cascade(
        &self,
        y: &[f64],
        level_lengths: Vec<usize>,
        step: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
    ) -> WaveletCoeffs {
        let mut approx = y.to_vec();
        let mut details = Vec::with_capacity(self.levels);
        for _ in 0..self.levels {
            let (a, d) = step(&approx);
            details.push(d);
            approx = a;
        }
        details.reverse();
        WaveletCoeffs {
            approx,
            details,
            level_lengths,
        }
    }

    /// `W x`: exact left inverse of [`Dwt::analyze`].
    pub fn synthesize(&self, x: &WaveletCoeffs) -> Result<Vec<f64>> {
        self.uncascade(x, |a, d, m| self.synthesis_step(a, d, m))
    }

    /// `(W†)* x`: the exact adjoint of [`Dwt::analyze`].
    pub fn analyze_adjoint(&self, x: &WaveletCoeffs) -> Result<Vec<f64>> {
        self.uncascade(x, |a, d, m| self.analysis_step_adjoint(a, d, m))
    }

    fn uncascade(
        &self,
        x: &WaveletCoeffs,
        step: impl Fn(&[f64], &[f64], usize) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let n = *x.level_lengths.first().ok_or(Error::Empty("level lengths"))?;
        x.check(&self.level_lengths(n)?)?;
        let mut approx = x.approx.clone();
        for (i, d) in x.details.iter().enumerate() {
            let level = self.levels - i;
            approx = step(&approx, d, x.level_lengths[level - 1])?;
        }
        Ok(approx)
    }

    /// `W` on flattened coefficients for length-`n` signals.
    pub fn synthesis_op(&self, n: usize, mode: AdjointMode) -> Result<LinearOperator> {
        let lengths = self.level_lengths(n)?;
        let k = self.coeff_len(n)?;
        let fwd = self.clone();
        let adj = self.clone();
        let ll = lengths.clone();
        Ok(LinearOperator::new(
            k,
            n,
            move |x| {
                let c = WaveletCoeffs::from_flat(x, &ll).expect("length checked");
                fwd.synthesize(&c).expect("consistent by construction")
            },
            move |v| {
                match mode {
                    AdjointMode::TrueAdjoint => adj.synthesize_adjoint(v),
                    AdjointMode::PinvApprox => adj.analyze(v),
                }
                .expect("length checked")
                .to_flat()
            },
        ))
    }

    /// `W†` on length-`n` signals, with `(W†)*` as its adjoint.
    pub fn analysis_op(&self, n: usize) -> Result<LinearOperator> {
        let lengths = self.level_lengths(n)?;
        let k = self.coeff_len(n)?;
        let fwd = self.clone();
        let adj = self.clone();
        Ok(LinearOperator::new(
            n,
            k,
            move |y| fwd.analyze(y).expect("length checked").to_flat(),
            move |x| {
                let c = WaveletCoeffs::from_flat(x, &lengths).expect("length checked");
                adj.analyze_adjoint(&c).expect("consistent by construction")
            },
        ))
    }
}
