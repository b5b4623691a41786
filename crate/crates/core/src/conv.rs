//! Convolutions: full 1-D convolution and its valid-correlation adjoint,
//! the two matrix factorizations of `h ∗ s`, and the boundary-aware
//! 2-D blur `R = Crop ∘ CircConv(psf) ∘ E`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::extend::{extend2d, extend2d_adjoint, Axis, ExtensionKind, ExtensionSpec};
use crate::image::Image;
use crate::linop::LinearOperator;

/// `(h ∗ s)[n] = Σ_k h[k] s[n-k]`, length `K + N - 1`.
pub fn conv_full(h: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    if h.is_empty() || s.is_empty() {
        return Err(Error::Empty("convolution operand"));
    }
    let mut out = vec![0.0; h.len() + s.len() - 1];
    for (i, hi) in h.iter().enumerate() {
        for (j, sj) in s.iter().enumerate() {
            out[i + j] += hi * sj;
        }
    }
    Ok(out)
}

/// Same result as [`conv_full`] through a zero-padded power-of-two FFT.
pub fn conv_full_fft(h: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    if h.is_empty() || s.is_empty() {
        return Err(Error::Empty("convolution operand"));
    }
    let len = h.len() + s.len() - 1;
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let spectrum = |v: &[f64]| {
        let mut buf = vec![Complex64::default(); size];
        for (b, x) in buf.iter_mut().zip(v) {
            b.re = *x;
        }
        fwd.process(&mut buf);
        buf
    };
    let mut prod: Vec<Complex64> = spectrum(h).iter().zip(spectrum(s)).map(|(a, b)| a * b).collect();
    inv.process(&mut prod);
    Ok(prod[..len].iter().map(|c| c.re / size as f64).collect())
}

/// `out[n] = Σ_k s[k] r[k+n]` for `n < len(r) - len(s) + 1`: the transpose
/// of convolution with `s`, restricted to full-overlap lags.
pub fn xcorr_valid(r: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::Empty("correlation kernel"));
    }
    if r.len() < s.len() {
        return Err(Error::InvalidParameter(format!(
            "valid correlation needs len(r) >= len(s), got {} < {}",
            r.len(),
            s.len()
        )));
    }
    Ok((0..r.len() - s.len() + 1)
        .map(|n| s.iter().zip(&r[n..]).map(|(a, b)| a * b).sum())
        .collect())
}

/// `h ↦ h ∗ s` for length-`k` `h` (the banded matrix of `s` entries).
pub fn conv_op_fixed_s(s: &[f64], k: usize) -> Result<LinearOperator> {
    conv_op(s, k)
}

/// `s ↦ h ∗ s` for length-`n` `s` (the banded matrix of `h` entries).
pub fn conv_op_fixed_h(h: &[f64], n: usize) -> Result<LinearOperator> {
    conv_op(h, n)
}

fn conv_op(fixed: &[f64], n: usize) -> Result<LinearOperator> {
    if fixed.is_empty() || n == 0 {
        return Err(Error::Empty("convolution operand"));
    }
    let f = Arc::new(fixed.to_vec());
    let g = Arc::clone(&f);
    Ok(LinearOperator::new(
        n,
        n + fixed.len() - 1,
        move |x| conv_full(x, &f).expect("nonempty"),
        move |r| xcorr_valid(r, &g).expect("sized"),
    ))
}

/// Point spread function with odd side lengths and unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    kernel: Image,
    sigma: Option<f64>,
}

impl Psf {
    /// Normalizes `kernel` to unit sum.
    pub fn from_kernel(kernel: Image) -> Result<Self> {
        if kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "PSF sides must be odd, got {}x{}",
                kernel.rows(),
                kernel.cols()
            )));
        }
        let total: f64 = kernel.as_slice().iter().sum();
        if !total.is_finite() || total == 0.0 {
            return Err(Error::InvalidParameter("PSF entries must have a nonzero finite sum".into()));
        }
        let mut kernel = kernel;
        kernel.as_mut_slice().iter_mut().for_each(|v| *v /= total);
        Ok(Self { kernel, sigma: None })
    }

    pub fn delta() -> Self {
        Self {
            kernel: Image::filled(1, 1, 1.0),
            sigma: None,
        }
    }

    pub fn kernel(&self) -> &Image {
        &self.kernel
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Boundary samples needed on each side: the larger half-width.
    pub fn half_width(&self) -> usize {
        self.kernel.rows().max(self.kernel.cols()) / 2
    }

    fn rotated(&self) -> Image {
        let (r, c) = self.kernel.shape();
        Image::from_fn(r, c, |i, j| self.kernel.get(r - 1 - i, c - 1 - j))
    }
}

/// Centered Gaussian `exp(-(i² + j²) / 2σ²)` on a `side x side` grid, unit sum.
pub fn gaussian_psf(side: usize, sigma: f64) -> Result<Psf> {
    if side % 2 == 0 {
        return Err(Error::InvalidParameter(format!("PSF side must be odd, got {side}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("PSF sigma must be positive, got {sigma}")));
    }
    let c = (side / 2) as f64;
    let g = |i: usize| {
        let d = i as f64 - c;
        (-d * d / (2.0 * sigma * sigma)).exp()
    };
    let raw = Image::from_fn(side, side, |i, j| g(i) * g(j));
    let mut psf = Psf::from_kernel(raw)?;
    psf.sigma = Some(sigma);
    Ok(psf)
}

/// How the circular convolution inside [`blur_op`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvPath {
    Direct,
    Fft,
    /// FFT once the larger extended side exceeds the threshold.
    Auto(usize),
}

impl Default for ConvPath {
    fn default() -> Self {
        ConvPath::Auto(64)
    }
}

/// Circular convolution of an image with a centered odd kernel.
trait Circular: Send + Sync {
    fn apply(&self, x: &Image) -> Image;
}

struct DirectCirc {
    kernel: Image,
}

impl Circular for DirectCirc {
    fn apply(&self, x: &Image) -> Image {
        let (m, n) = x.shape();
        let (kr, kc) = self.kernel.shape();
        let (cr, cc) = (kr / 2, kc / 2);
        let mut out = Image::zeros(m, n);
        for a in 0..kr {
            for b in 0..kc {
                let k = self.kernel.get(a, b);
                if k == 0.0 {
                    continue;
                }
                // out[i][j] += k · x[i - a + cr][j - b + cc] (mod)
                let dr = (cr + m * kr - a) % m;
                let dc = (cc + n * kc - b) % n;
                for i in 0..m {
                    let src = x.row((i + dr) % m);
                    let dst = &mut out.as_mut_slice()[i * n..(i + 1) * n];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d += k * src[(j + dc) % n];
                    }
                }
            }
        }
        out
    }
}

struct FftCirc {
    rows: usize,
    cols: usize,
    p: usize,
    q: usize,
    centre: (usize, usize),
    fwd_p: Arc<dyn Fft<f64>>,
    fwd_q: Arc<dyn Fft<f64>>,
    inv_p: Arc<dyn Fft<f64>>,
    inv_q: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

impl FftCirc {
    fn new(kernel: &Image, rows: usize, cols: usize) -> Self {
        let (kr, kc) = kernel.shape();
        let p = (rows + kr - 1).next_power_of_two();
        let q = (cols + kc - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut me = Self {
            rows,
            cols,
            p,
            q,
            centre: (kr / 2, kc / 2),
            fwd_p: planner.plan_fft_forward(p),
            fwd_q: planner.plan_fft_forward(q),
            inv_p: planner.plan_fft_inverse(p),
            inv_q: planner.plan_fft_inverse(q),
            spectrum: Vec::new(),
        };
        me.spectrum = me.transform(kernel);
        me
    }

    fn transform(&self, img: &Image) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.p * self.q];
        for r in 0..img.rows() {
            for (c, v) in img.row(r).iter().enumerate() {
                buf[r * self.q + c].re = *v;
            }
        }
        self.fft2(&mut buf, &self.fwd_q, &self.fwd_p);
        buf
    }

    fn fft2(&self, buf: &mut [Complex64], along_rows: &Arc<dyn Fft<f64>>, along_cols: &Arc<dyn Fft<f64>>) {
        along_rows.process(buf);
        let mut t = transpose(buf, self.p, self.q);
        along_cols.process(&mut t);
        buf.copy_from_slice(&transpose(&t, self.q, self.p));
    }
}

fn transpose(buf: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = buf[r * cols + c];
        }
    }
    out
}

impl Circular for FftCirc {
    fn apply(&self, x: &Image) -> Image {
        let mut buf = self.transform(x);
        buf.iter_mut().zip(&self.spectrum).for_each(|(a, b)| *a *= b);
        self.fft2(&mut buf, &self.inv_q, &self.inv_p);
        let scale = 1.0 / (self.p * self.q) as f64;
        let (m, n) = (self.rows, self.cols);
        let (cr, cc) = self.centre;
        // fold the linear result back onto the m x n torus
        let mut out = Image::zeros(m, n);
        for i in 0..self.p {
            let r = (i + m * self.p - cr) % m;
            for j in 0..self.q {
                let c = (j + n * self.q - cc) % n;
                let v = buf[i * self.q + j].re * scale;
                let o = out.get(r, c);
                out.set(r, c, o + v);
            }
        }
        out
    }
}

fn circular(kernel: &Image, rows: usize, cols: usize, path: ConvPath) -> Arc<dyn Circular> {
    let fft = match path {
        ConvPath::Direct => false,
        ConvPath::Fft => true,
        ConvPath::Auto(t) => rows.max(cols) > t,
    };
    if fft {
        Arc::new(FftCirc::new(kernel, rows, cols))
    } else {
        Arc::new(DirectCirc { kernel: kernel.clone() })
    }
}

/// Blur `R` of an `h x w` image under boundary condition `bc`, with the
/// default convolution path.
pub fn blur_op(psf: &Psf, h: usize, w: usize, bc: ExtensionKind) -> Result<LinearOperator> {
    blur_op_with_path(psf, h, w, bc, ConvPath::default())
}

/// `R = Crop ∘ CircConv(psf) ∘ E` with `E` extending both axes by the PSF
/// half-width; `R* = E* ∘ CircConv(rotated psf) ∘ Cropᵀ`.
pub fn blur_op_with_path(
    psf: &Psf,
    h: usize,
    w: usize,
    bc: ExtensionKind,
    path: ConvPath,
) -> Result<LinearOperator> {
    if h == 0 || w == 0 {
        return Err(Error::Empty("image to blur"));
    }
    let pad = psf.half_width();
    let spec = ExtensionSpec::new(bc, pad);
    spec.validate(h)?;
    spec.validate(w)?;
    let (eh, ew) = (spec.extended_len(h), spec.extended_len(w));
    let fwd = circular(psf.kernel(), eh, ew, path);
    let adj = circular(&psf.rotated(), eh, ew, path);

    Ok(LinearOperator::new(
        h * w,
        h * w,
        move |x| {
            let img = Image::new(h, w, x.to_vec()).expect("length checked");
            let ext = extend2d(&img, &spec, Axis::Both).expect("validated");
            let full = fwd.apply(&ext);
            let mut out = Vec::with_capacity(h * w);
            for r in pad..pad + h {
                out.extend_from_slice(&full.row(r)[pad..pad + w]);
            }
            out
        },
        move |y| {
            let mut emb = Image::zeros(eh, ew);
            for r in 0..h {
                for c in 0..w {
                    emb.set(r + pad, c + pad, y[r * w + c]);
                }
            }
            let corr = adj.apply(&emb);
            extend2d_adjoint(&corr, &spec, Axis::Both, h, w)
                .expect("validated")
                .into_vec()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{dot_test, randn, to_dense};

    #[test]
    fn conv_examples() {
        assert_eq!(conv_full(&[1.0, 2.0, 3.0], &[1.0; 5]).unwrap(), vec![1.0, 3.0, 6.0, 6.0, 6.0, 5.0, 3.0]);
        let s = randn(6, 1);
        assert_eq!(conv_full(&[1.0], &s).unwrap(), s);
        assert!(conv_full(&[], &s).is_err());
    }

    #[test]
    fn xcorr_examples() {
        assert_eq!(xcorr_valid(&[1.0; 7], &[1.0; 5]).unwrap(), vec![5.0; 3]);
        let s = randn(4, 2);
        let mut r = vec![0.0; 6];
        r[0] = 1.0;
        assert_eq!(xcorr_valid(&r, &s).unwrap(), vec![s[0], 0.0, 0.0]);
        assert!(xcorr_valid(&[1.0; 3], &[1.0; 4]).is_err());
    }

    #[test]
    fn displayed_banded_matrix() {
        let h = [2.0, 3.0, 5.0];
        let m = to_dense(&conv_op_fixed_h(&h, 5).unwrap());
        assert_eq!((m.rows(), m.cols()), (7, 5));
        for i in 0..7 {
            for j in 0..5 {
                let want = if i >= j && i - j < 3 { h[i - j] } else { 0.0 };
                assert_eq!(m[(i, j)], want);
            }
        }
    }

    #[test]
    fn fft_agrees_with_direct() {
        for (k, n) in [(1, 1), (3, 5), (17, 100), (64, 1000)] {
            let h = randn(k, k as u64);
            let s = randn(n, n as u64 + 1);
            let a = conv_full(&h, &s).unwrap();
            let b = conv_full_fft(&h, &s).unwrap();
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = a.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            assert!(err <= 1e-11 * scale.max(1.0), "{k} {n}: {err}");
        }
    }

    #[test]
    fn gaussian_shape() {
        assert_eq!(gaussian_psf(1, 0.5).unwrap().kernel().as_slice(), &[1.0]);
        let p = gaussian_psf(9, 2.0).unwrap();
        let k = p.kernel();
        assert!((k.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(k.get(i, j), k.get(8 - i, 8 - j));
                assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
        assert!(gaussian_psf(4, 1.0).is_err());
        assert!(gaussian_psf(5, 0.0).is_err());
    }

    #[test]
    fn delta_blur_is_identity() {
        let op = blur_op(&Psf::delta(), 6, 5, ExtensionKind::Sym).unwrap();
        let x = randn(30, 3);
        assert_eq!(op.apply(&x).unwrap(), x);
    }

    #[test]
    fn sym_blur_preserves_constants() {
        let psf = gaussian_psf(5, 1.5).unwrap();
        for path in [ConvPath::Direct, ConvPath::Fft] {
            let op = blur_op_with_path(&psf, 12, 10, ExtensionKind::Sym, path).unwrap();
            let y = op.apply(&[0.3; 120]).unwrap();
            assert!(y.iter().all(|v| (v - 0.3).abs() < 1e-14));
        }
    }

    #[test]
    fn paths_agree_and_adjoints_hold() {
        let psf = Psf::from_kernel(Image::new(3, 5, randn(15, 4)).unwrap()).unwrap();
        for bc in ExtensionKind::ALL {
            let d = blur_op_with_path(&psf, 12, 12, bc, ConvPath::Direct).unwrap();
            let f = blur_op_with_path(&psf, 12, 12, bc, ConvPath::Fft).unwrap();
            let (dd, fd) = (to_dense(&d), to_dense(&f));
            assert!(dd.max_abs_diff(&fd) < 1e-12);
            let dt = to_dense(&d.adjoint_view());
            assert!(dt.max_abs_diff(&dd.transpose()) < 1e-12);
            assert!(dot_test(&f, 10, 5) < 1e-12);
        }
    }
}
