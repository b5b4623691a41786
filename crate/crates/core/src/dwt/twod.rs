//! Separable 2-D transforms: each stage filters rows, then columns.

use super::{AdjointMode, Dwt};
use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::linop::LinearOperator;

/// Detail subbands of one stage. The first letter names the filter applied
/// along rows, the second the filter applied along columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    pub lh: Image,
    pub hl: Image,
    pub hh: Image,
}

/// 2-D coefficients. `details` runs coarsest first; `level_shapes` is
/// `[(H, W), (H1, W1), …, (HJ, WJ)]`, each subband of stage `j` being `Hj x Wj`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid2d {
    pub approx: Image,
    pub details: Vec<Subbands>,
    pub level_shapes: Vec<(usize, usize)>,
}

impl Pyramid2d {
    pub fn zeros(level_shapes: &[(usize, usize)]) -> Self {
        let j = level_shapes.len() - 1;
        let img = |(r, c): (usize, usize)| Image::zeros(r, c);
        Self {
            approx: img(level_shapes[j]),
            details: (1..=j)
                .rev()
                .map(|l| Subbands {
                    lh: img(level_shapes[l]),
                    hl: img(level_shapes[l]),
                    hh: img(level_shapes[l]),
                })
                .collect(),
            level_shapes: level_shapes.to_vec(),
        }
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn total_len(&self) -> usize {
        self.approx.len() + self.details.iter().map(|s| 3 * s.lh.len()).sum::<usize>()
    }

    /// `[approx, (lh, hl, hh) coarsest, …, (lh, hl, hh) finest]`, each row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        out.extend(self.approx.as_slice());
        for s in &self.details {
            out.extend(s.lh.as_slice());
            out.extend(s.hl.as_slice());
            out.extend(s.hh.as_slice());
        }
        out
    }

    pub fn from_flat(flat: &[f64], level_shapes: &[(usize, usize)]) -> Result<Self> {
        if level_shapes.len() < 2 {
            return Err(Error::InvalidParameter("level_shapes needs at least one stage".into()));
        }
        let j = level_shapes.len() - 1;
        let area = |(r, c): (usize, usize)| r * c;
        let total = area(level_shapes[j]) + level_shapes[1..].iter().map(|s| 3 * area(*s)).sum::<usize>();
        check_len("flattened 2-D coefficients", total, flat.len())?;
        let mut rest = flat;
        let mut take = |(r, c): (usize, usize)| {
            let (head, tail) = rest.split_at(r * c);
            rest = tail;
            Image::new(r, c, head.to_vec()).expect("sized above")
        };
        let approx = take(level_shapes[j]);
        let details = (1..=j)
            .rev()
            .map(|l| Subbands {
                lh: take(level_shapes[l]),
                hl: take(level_shapes[l]),
                hh: take(level_shapes[l]),
            })
            .collect();
        Ok(Self {
            approx,
            details,
            level_shapes: level_shapes.to_vec(),
        })
    }

    /// Every coefficient, in flattened order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.approx.as_slice().iter().chain(
            self.details
                .iter()
                .flat_map(|s| s.lh.as_slice().iter().chain(s.hl.as_slice()).chain(s.hh.as_slice())),
        )
    }

    fn check(&self, expected: &[(usize, usize)]) -> Result<()> {
        if self.level_shapes != expected {
            return Err(Error::InvalidParameter(format!(
                "pyramid level shapes {:?} do not match the transform ({:?})",
                self.level_shapes, expected
            )));
        }
        let j = expected.len() - 1;
        check_len("number of 2-D detail levels", j, self.details.len())?;
        let (r, c) = expected[j];
        self.approx.require_shape(r, c)?;
        for (i, s) in self.details.iter().enumerate() {
            let (r, c) = expected[j - i];
            for band in [&s.lh, &s.hl, &s.hh] {
                band.require_shape(r, c)?;
            }
        }
        Ok(())
    }
}

type Split<'a> = &'a dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>);
type Merge<'a> = &'a dyn Fn(&[f64], &[f64], usize) -> Result<Vec<f64>>;

fn split_rows(img: &Image, f: Split) -> (Image, Image) {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut k = 0;
    for r in 0..img.rows() {
        let (a, d) = f(img.row(r));
        k = a.len();
        lo.extend(a);
        hi.extend(d);
    }
    let shape_ok = "every row yields the same length";
    (
        Image::new(img.rows(), k, lo).expect(shape_ok),
        Image::new(img.rows(), k, hi).expect(shape_ok),
    )
}

// Column passes run as row passes on the transpose.
fn split_cols(img: &Image, f: Split) -> (Image, Image) {
    let (lo, hi) = split_rows(&img.transpose(), f);
    (lo.transpose(), hi.transpose())
}

fn merge_rows(lo: &Image, hi: &Image, m: usize, f: Merge) -> Result<Image> {
    let mut data = Vec::with_capacity(lo.rows() * m);
    for r in 0..lo.rows() {
        data.extend(f(lo.row(r), hi.row(r), m)?);
    }
    Image::new(lo.rows(), m, data)
}

fn merge_cols(lo: &Image, hi: &Image, m: usize, f: Merge) -> Result<Image> {
    Ok(merge_rows(&lo.transpose(), &hi.transpose(), m, f)?.transpose())
}

impl Dwt {
    /// `[(H, W), (H1, W1), …]` for an `rows x cols` image.
    pub fn level_shapes(&self, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
        let r = self.level_lengths(rows)?;
        let c = self.level_lengths(cols)?;
        Ok(r.into_iter().zip(c).collect())
    }

    pub fn coeff_len2d(&self, rows: usize, cols: usize) -> Result<usize> {
        Ok(Pyramid2d::zeros(&self.level_shapes(rows, cols)?).total_len())
    }

    fn cascade2d(&self, img: &Image, step: Split) -> Result<Pyramid2d> {
        let level_shapes = self.level_shapes(img.rows(), img.cols())?;
        let mut approx = img.clone();
        let mut details = Vec::with_capacity(self.levels);
        for _ in 0..self.levels {
            let (lo, hi) = split_rows(&approx, step);
            let (ll, lh) = split_cols(&lo, step);
            let (hl, hh) = split_cols(&hi, step);
            details.push(Subbands { lh, hl, hh });
            approx = ll;
        }
        details.reverse();
        Ok(Pyramid2d {
            approx,
            details,
            level_shapes,
        })
    }

    fn uncascade2d(&self, p: &Pyramid2d, step: Merge) -> Result<Image> {
        let (rows, cols) = *p.level_shapes.first().ok_or(Error::Empty("level shapes"))?;
        p.check(&self.level_shapes(rows, cols)?)?;
        let mut approx = p.approx.clone();
        for (i, s) in p.details.iter().enumerate() {
            let (mr, mc) = p.level_shapes[self.levels - i - 1];
            let lo = merge_cols(&approx, &s.lh, mr, step)?;
            let hi = merge_cols(&s.hl, &s.hh, mr, step)?;
            approx = merge_rows(&lo, &hi, mc, step)?;
        }
        Ok(approx)
    }

    pub fn analyze2d(&self, img: &Image) -> Result<Pyramid2d> {
        self.cascade2d(img, &|y| self.analysis_step(y))
    }

    pub fn synthesize2d(&self, p: &Pyramid2d) -> Result<Image> {
        self.uncascade2d(p, &|a, d, m| self.synthesis_step(a, d, m))
    }

    /// Exact adjoint of [`Dwt::synthesize2d`].
    pub fn synthesize2d_adjoint(&self, img: &Image) -> Result<Pyramid2d> {
        self.cascade2d(img, &|y| self.synthesis_step_adjoint(y))
    }

    /// Exact adjoint of [`Dwt::analyze2d`].
    pub fn analyze2d_adjoint(&self, p: &Pyramid2d) -> Result<Image> {
        self.uncascade2d(p, &|a, d, m| self.analysis_step_adjoint(a, d, m))
    }

    /// 2-D `W` on flattened pyramids, producing row-major images.
    pub fn synthesis2d_op(&self, rows: usize, cols: usize, mode: AdjointMode) -> Result<LinearOperator> {
        let shapes = self.level_shapes(rows, cols)?;
        let k = self.coeff_len2d(rows, cols)?;
        let (fwd, adj) = (self.clone(), self.clone());
        Ok(LinearOperator::new(
            k,
            rows * cols,
            move |x| {
                let p = Pyramid2d::from_flat(x, &shapes).expect("length checked");
                fwd.synthesize2d(&p).expect("consistent by construction").into_vec()
            },
            move |v| {
                let img = Image::new(rows, cols, v.to_vec()).expect("length checked");
                match mode {
                    AdjointMode::TrueAdjoint => adj.synthesize2d_adjoint(&img),
                    AdjointMode::PinvApprox => adj.analyze2d(&img),
                }
                .expect("shape checked")
                .to_flat()
            },
        ))
    }

    /// 2-D `W†` with `(W†)*` as its adjoint.
    pub fn analysis2d_op(&self, rows: usize, cols: usize) -> Result<LinearOperator> {
        let shapes = self.level_shapes(rows, cols)?;
        let k = self.coeff_len2d(rows, cols)?;
        let (fwd, adj) = (self.clone(), self.clone());
        Ok(LinearOperator::new(
            rows * cols,
            k,
            move |v| {
                let img = Image::new(rows, cols, v.to_vec()).expect("length checked");
                fwd.analyze2d(&img).expect("shape checked").to_flat()
            },
            move |x| {
                let p = Pyramid2d::from_flat(x, &shapes).expect("length checked");
                adj.analyze2d_adjoint(&p).expect("consistent by construction").into_vec()
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::WaveletKind;
    use crate::extend::ExtensionKind;
    use crate::linop::{dot_test, randn, to_dense};

    #[test]
    fn round_trip_rectangular() {
        for kind in [WaveletKind::Haar, WaveletKind::Cdf97] {
            let w = Dwt::new(kind, 2, ExtensionKind::Sym).unwrap();
            let img = Image::new(16, 24, randn(16 * 24, 9)).unwrap();
            let back = w.synthesize2d(&w.analyze2d(&img).unwrap()).unwrap();
            let err = img
                .as_slice()
                .iter()
                .zip(back.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{kind}: {err}");
        }
    }

    #[test]
    fn constant_image_has_no_detail() {
        let w = Dwt::new(WaveletKind::Haar, 1, ExtensionKind::Sym).unwrap();
        let p = w.analyze2d(&Image::filled(8, 12, 0.7)).unwrap();
        let s = &p.details[0];
        for band in [&s.lh, &s.hl, &s.hh] {
            assert!(band.as_slice().iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn one_stage_is_kronecker_of_1d() {
        let w = Dwt::new(WaveletKind::Db2, 1, ExtensionKind::Per).unwrap();
        let a1r = to_dense(&w.analysis_op(6).unwrap());
        let a1c = to_dense(&w.analysis_op(5).unwrap());
        let k = a1r.rows() / 2;
        let kc = a1c.rows() / 2;
        let a2 = to_dense(&w.analysis2d_op(6, 5).unwrap());
        // hl: highpass along rows (width 5), lowpass along columns (height 6)
        let offset = 2 * k * kc;
        for i in 0..k {
            for j in 0..kc {
                for r in 0..6 {
                    for c in 0..5 {
                        let want = a1r[(i, r)] * a1c[(kc + j, c)];
                        let got = a2[(offset + i * kc + j, r * 5 + c)];
                        assert!((want - got).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn adjoints_pass_dot_test() {
        for kind in WaveletKind::ALL {
            for ext in ExtensionKind::ALL {
                let w = Dwt::new(kind, 2, ext).unwrap();
                let s = w.synthesis2d_op(16, 16, AdjointMode::TrueAdjoint).unwrap();
                let a = w.analysis2d_op(16, 16).unwrap();
                assert!(dot_test(&s, 5, 1) < 1e-12, "{kind} {ext}");
                assert!(dot_test(&a, 5, 2) < 1e-12, "{kind} {ext}");
            }
        }
    }

    #[test]
    fn rejects_mismatched_pyramid() {
        let w = Dwt::new(WaveletKind::Haar, 2, ExtensionKind::Zpd).unwrap();
        let p = Pyramid2d::zeros(&w.level_shapes(8, 8).unwrap());
        let other = Dwt::new(WaveletKind::Haar, 2, ExtensionKind::Sym).unwrap();
        assert!(other.synthesize2d(&p).is_err());
        assert!(w.synthesize2d(&p).is_ok());
    }
}
