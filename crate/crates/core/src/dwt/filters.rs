use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveletKind {
    Haar,
    /// Daubechies, 4 taps.
    Db2,
    /// Daubechies, 8 taps.
    Db4,
    /// Cohen-Daubechies-Feauveau 9/7 biorthogonal spline pair.
    Cdf97,
}

impl WaveletKind {
    pub const ALL: [WaveletKind; 4] = [
        WaveletKind::Haar,
        WaveletKind::Db2,
        WaveletKind::Db4,
        WaveletKind::Cdf97,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveletKind::Haar => "haar",
            WaveletKind::Db2 => "db2",
            WaveletKind::Db4 => "db4",
            WaveletKind::Cdf97 => "cdf97",
        }
    }
}

impl fmt::Display for WaveletKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletKind::Haar),
            "db2" => Ok(WaveletKind::Db2),
            "db4" => Ok(WaveletKind::Db4),
            "cdf97" | "cdf9/7" | "bior4.4" => Ok(WaveletKind::Cdf97),
            other => Err(Error::InvalidParameter(format!(
                "unknown wavelet '{other}' (expected haar, db2, db4 or cdf97)"
            ))),
        }
    }
}

const DB4_REC_LO: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

// Symmetric halves, outermost tap first.
const CDF97_H9: [f64; 5] = [
    0.037_828_455_506_995_461,
    -0.023_849_465_019_380_002,
    -0.110_624_404_418_423_41,
    0.377_402_855_612_653_76,
    0.852_698_679_009_403_42,
];
const CDF97_H7: [f64; 4] = [
    -0.064_538_882_628_938_439,
    -0.040_689_417_609_558_437,
    0.418_092_273_222_212_2,
    0.788_485_616_405_664_4,
];

fn mirror<const K: usize>(half: &[f64; K]) -> Vec<f64> {
    half.iter().chain(half.iter().rev().skip(1)).copied().collect()
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// Two-channel filter bank.
///
/// Conventions (all filters of one bank share the same length `taps`):
///
/// * analysis keeps the odd samples of the full convolution,
///   `a[k] = Σ_j h[j] y[2k+1-j]`;
/// * synthesis is `y[n] = Σ_k a[k] g[n+taps-2-2k]`, cropped to the signal length;
/// * the dual bank swaps roles by time reversal: dual analysis filters are
///   the reversed primal synthesis filters and vice versa. With these
///   conventions, dual analysis is exactly the transpose of primal synthesis.
///
/// For the Haar bank, `[1, -1]` has detail coefficient `+√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    kind: WaveletKind,
    lo_a: Vec<f64>,
    hi_a: Vec<f64>,
    lo_s: Vec<f64>,
    hi_s: Vec<f64>,
    // dual analysis and synthesis, derived once
    lo_da: Vec<f64>,
    hi_da: Vec<f64>,
    lo_ds: Vec<f64>,
    hi_ds: Vec<f64>,
    support: usize,
}

impl FilterBank {
    pub fn new(kind: WaveletKind) -> Self {
        match kind {
            WaveletKind::Haar => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Self::orthogonal(kind, vec![s, s])
            }
            WaveletKind::Db2 => {
                let r3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                Self::orthogonal(
                    kind,
                    vec![(1.0 + r3) / d, (3.0 + r3) / d, (3.0 - r3) / d, (1.0 - r3) / d],
                )
            }
            WaveletKind::Db4 => Self::orthogonal(kind, DB4_REC_LO.to_vec()),
            WaveletKind::Cdf97 => Self::cdf97(),
        }
    }

    /// Orthogonal bank from its synthesis lowpass (quadrature mirror).
    fn orthogonal(kind: WaveletKind, lo_s: Vec<f64>) -> Self {
        let l = lo_s.len();
        let hi_s: Vec<f64> = (0..l)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * lo_s[l - 1 - n])
            .collect();
        Self::assemble(kind, reversed(&lo_s), reversed(&hi_s), lo_s, hi_s, l)
    }

    // Stored with ten taps: the 9- and 7-tap filters need delays of opposite
    // parity for the odd-phase downsampling to reconstruct.
    fn cdf97() -> Self {
        let h9 = mirror(&CDF97_H9);
        let h7 = mirror(&CDF97_H7);
        let alt = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };

        let mut lo_a = vec![0.0];
        lo_a.extend(&h9);
        let mut hi_a = vec![0.0];
        hi_a.extend(h7.iter().enumerate().map(|(n, v)| alt(n) * v));
        hi_a.extend([0.0, 0.0]);
        let mut lo_s = vec![0.0];
        lo_s.extend(&h7);
        lo_s.extend([0.0, 0.0]);
        let mut hi_s = vec![0.0];
        hi_s.extend(h9.iter().enumerate().map(|(n, v)| -alt(n) * v));

        Self::assemble(WaveletKind::Cdf97, lo_a, hi_a, lo_s, hi_s, 9)
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    fn assemble(
        kind: WaveletKind,
        lo_a: Vec<f64>,
        hi_a: Vec<f64>,
        lo_s: Vec<f64>,
        hi_s: Vec<f64>,
        support: usize,
    ) -> Self {
        Self {
            kind,
            lo_da: reversed(&lo_s),
            hi_da: reversed(&hi_s),
            lo_ds: reversed(&lo_a),
            hi_ds: reversed(&hi_a),
            lo_a,
            hi_a,
            lo_s,
            hi_s,
            support,
        }
    }

    /// The dual bank; for orthogonal families it equals `self`.
    pub fn dual(&self) -> Self {
        Self::assemble(
            self.kind,
            self.lo_da.clone(),
            self.hi_da.clone(),
            self.lo_ds.clone(),
            self.hi_ds.clone(),
            self.support,
        )
    }

    /// (lowpass, highpass) analysis filters, primal or dual.
    pub fn analysis(&self, dual: bool) -> (&[f64], &[f64]) {
        if dual {
            (&self.lo_da, &self.hi_da)
        } else {
            (&self.lo_a, &self.hi_a)
        }
    }

    /// (lowpass, highpass) synthesis filters, primal or dual.
    pub fn synthesis(&self, dual: bool) -> (&[f64], &[f64]) {
        if dual {
            (&self.lo_ds, &self.hi_ds)
        } else {
            (&self.lo_s, &self.hi_s)
        }
    }

    /// Stored filter length (shared by all four filters).
    pub fn taps(&self) -> usize {
        self.lo_a.len()
    }

    /// Longest filter support `L`; boundary extensions use `L - 1` samples.
    pub fn max_len(&self) -> usize {
        self.support
    }

    pub fn is_orthogonal(&self) -> bool {
        self.kind != WaveletKind::Cdf97
    }
}
