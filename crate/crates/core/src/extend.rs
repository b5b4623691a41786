//! Signal extension operators `E`, their adjoints `E*`, pseudoinverses `E†`
//! and pseudoinverse adjoints `(E†)*`.
//!
//! Every extension here copies each output sample from exactly one input
//! sample (or writes a zero), so `EᵀE` is diagonal: entry `i` counts how
//! many times sample `i` appears in the extended signal. That makes
//! `E† = (EᵀE)⁻¹Eᵀ` a sum-of-copies followed by a division, and
//! `(E†)* = E (EᵀE)⁻¹` a division followed by the extension.
//!
//! For `N > 2·pad` the counts are 2 on the first and last `pad` samples
//! (sym, per) and 1 elsewhere. Shorter signals divide by the actual counts,
//! which can reach 3 when one sample is copied to both ends.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::linop::{DenseMatrix, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtensionKind {
    /// Zero padding.
    Zpd,
    /// Half-point symmetric: `… y1 y0 | y0 y1 …`.
    Sym,
    /// Periodic wrap.
    Per,
}

impl ExtensionKind {
    pub const ALL: [ExtensionKind; 3] = [ExtensionKind::Zpd, ExtensionKind::Sym, ExtensionKind::Per];

    pub fn name(self) -> &'static str {
        match self {
            ExtensionKind::Zpd => "zpd",
            ExtensionKind::Sym => "sym",
            ExtensionKind::Per => "per",
        }
    }
}

impl fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtensionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zpd" | "zero" => Ok(ExtensionKind::Zpd),
            "sym" | "symh" | "symmetric" => Ok(ExtensionKind::Sym),
            "per" | "ppd" | "periodic" => Ok(ExtensionKind::Per),
            other => Err(Error::InvalidParameter(format!(
                "unknown extension mode '{other}' (expected zpd, sym or per)"
            ))),
        }
    }
}

/// Extension kind plus the number of samples added on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtensionSpec {
    pub kind: ExtensionKind,
    pub pad: usize,
}

impl ExtensionSpec {
    pub fn new(kind: ExtensionKind, pad: usize) -> Self {
        Self { kind, pad }
    }

    pub fn extended_len(&self, n: usize) -> usize {
        n + 2 * self.pad
    }

    /// Whether the halving closed form applies; otherwise weights come from
    /// the copy counts.
    pub fn has_closed_form(&self, n: usize) -> bool {
        self.kind == ExtensionKind::Zpd || n > 2 * self.pad
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Empty("signal to extend"));
        }
        if self.kind != ExtensionKind::Zpd && n < self.pad {
            return Err(Error::UnsupportedSize {
                kind: self.kind,
                len: n,
                pad: self.pad,
            });
        }
        Ok(())
    }

    /// Source index in `y` for each slot of the extension (`None` = zero).
    fn source(&self, n: usize, slot: usize) -> Option<usize> {
        let p = self.pad;
        if (p..p + n).contains(&slot) {
            return Some(slot - p);
        }
        match self.kind {
            ExtensionKind::Zpd => None,
            ExtensionKind::Sym if slot < p => Some(p - 1 - slot),
            ExtensionKind::Sym => Some(n - 1 - (slot - p - n)),
            ExtensionKind::Per if slot < p => Some(n - p + slot),
            ExtensionKind::Per => Some(slot - p - n),
        }
    }

    /// Diagonal of `EᵀE`.
    fn copy_counts(&self, n: usize) -> Vec<f64> {
        let mut counts = vec![0.0; n];
        for slot in 0..self.extended_len(n) {
            if let Some(i) = self.source(n, slot) {
                counts[i] += 1.0;
            }
        }
        counts
    }
}

pub fn extend(y: &[f64], spec: &ExtensionSpec) -> Result<Vec<f64>> {
    let n = y.len();
    spec.validate(n)?;
    Ok((0..spec.extended_len(n))
        .map(|slot| spec.source(n, slot).map_or(0.0, |i| y[i]))
        .collect())
}

/// `Eᵀz`: each sample collects the sum of all of its copies.
pub fn extend_adjoint(z: &[f64], spec: &ExtensionSpec, n: usize) -> Result<Vec<f64>> {
    spec.validate(n)?;
    check_len("extension adjoint input", spec.extended_len(n), z.len())?;
    let mut out = vec![0.0; n];
    for (slot, &v) in z.iter().enumerate() {
        if let Some(i) = spec.source(n, slot) {
            out[i] += v;
        }
    }
    Ok(out)
}

/// `E†z = (EᵀE)⁻¹Eᵀz`.
pub fn extend_pinv(z: &[f64], spec: &ExtensionSpec, n: usize) -> Result<Vec<f64>> {
    spec.validate(n)?;
    check_len("extension pseudoinverse input", spec.extended_len(n), z.len())?;
    let mut out = extend_adjoint(z, spec, n)?;
    if !spec.has_closed_form(n) {
        divide_by_counts(&mut out, spec);
    } else if spec.kind != ExtensionKind::Zpd {
        halve_boundary(&mut out, spec.pad);
    }
    Ok(out)
}

/// `(E†)*y = E(EᵀE)⁻¹y`: the extension with every duplicated copy weighted.
pub fn extend_pinv_adjoint(y: &[f64], spec: &ExtensionSpec) -> Result<Vec<f64>> {
    let n = y.len();
    spec.validate(n)?;
    if !spec.has_closed_form(n) {
        let mut scaled = y.to_vec();
        divide_by_counts(&mut scaled, spec);
        return extend(&scaled, spec);
    }
    if spec.kind == ExtensionKind::Zpd {
        return extend(y, spec);
    }
    let mut scaled = y.to_vec();
    halve_boundary(&mut scaled, spec.pad);
    extend(&scaled, spec)
}

// Short signals: copies of one sample can reach both boundaries, so the
// weights are general counts rather than one half.
fn divide_by_counts(v: &mut [f64], spec: &ExtensionSpec) {
    let counts = spec.copy_counts(v.len());
    for (x, c) in v.iter_mut().zip(counts) {
        *x /= c;
    }
}

fn halve_boundary(v: &mut [f64], pad: usize) {
    let n = v.len();
    for i in 0..pad {
        v[i] *= 0.5;
        v[n - 1 - i] *= 0.5;
    }
}

/// Dense `E` for a length-`n` signal.
pub fn extension_matrix(n: usize, spec: &ExtensionSpec) -> Result<DenseMatrix> {
    spec.validate(n)?;
    let mut m = DenseMatrix::zeros(spec.extended_len(n), n);
    for slot in 0..spec.extended_len(n) {
        if let Some(i) = spec.source(n, slot) {
            m[(slot, i)] = 1.0;
        }
    }
    Ok(m)
}

/// Number of copies of each sample, i.e. the diagonal of `EᵀE`.
pub fn copy_counts(n: usize, spec: &ExtensionSpec) -> Result<Vec<f64>> {
    spec.validate(n)?;
    Ok(spec.copy_counts(n))
}

/// `E` as an operator on length-`n` signals.
pub fn extend_op(spec: ExtensionSpec, n: usize) -> Result<LinearOperator> {
    spec.validate(n)?;
    Ok(LinearOperator::new(
        n,
        spec.extended_len(n),
        move |y| extend(y, &spec).expect("length checked by operator"),
        move |z| extend_adjoint(z, &spec, n).expect("length checked by operator"),
    ))
}

/// `E†` as an operator; its adjoint slot is `(E†)*`.
pub fn extend_pinv_op(spec: ExtensionSpec, n: usize) -> Result<LinearOperator> {
    spec.validate(n)?;
    Ok(LinearOperator::new(
        spec.extended_len(n),
        n,
        move |z| extend_pinv(z, &spec, n).expect("length checked by operator"),
        move |y| extend_pinv_adjoint(y, &spec).expect("length checked by operator"),
    ))
}

/// Direction(s) along which a 2-D extension acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Extend within each row (the image grows wider).
    Rows,
    /// Extend within each column (the image grows taller).
    Cols,
    Both,
}

impl Axis {
    fn rows(self) -> bool {
        matches!(self, Axis::Rows | Axis::Both)
    }

    fn cols(self) -> bool {
        matches!(self, Axis::Cols | Axis::Both)
    }

    /// Shape after extension of a `rows x cols` image.
    pub fn extended_shape(self, spec: &ExtensionSpec, rows: usize, cols: usize) -> (usize, usize) {
        (
            if self.cols() { spec.extended_len(rows) } else { rows },
            if self.rows() { spec.extended_len(cols) } else { cols },
        )
    }
}

fn validate2d(spec: &ExtensionSpec, axis: Axis, rows: usize, cols: usize) -> Result<()> {
    if axis.rows() {
        spec.validate(cols)?;
    }
    if axis.cols() {
        spec.validate(rows)?;
    }
    Ok(())
}

pub fn extend2d(img: &Image, spec: &ExtensionSpec, axis: Axis) -> Result<Image> {
    validate2d(spec, axis, img.rows(), img.cols())?;
    let mut out = img.clone();
    if axis.rows() {
        out = out.try_map_rows(|r| extend(r, spec))?;
    }
    if axis.cols() {
        out = out.try_map_cols(|c| extend(c, spec))?;
    }
    Ok(out)
}

/// Adjoint of [`extend2d`] back to a `rows x cols` image.
pub fn extend2d_adjoint(
    img: &Image,
    spec: &ExtensionSpec,
    axis: Axis,
    rows: usize,
    cols: usize,
) -> Result<Image> {
    validate2d(spec, axis, rows, cols)?;
    let (er, ec) = axis.extended_shape(spec, rows, cols);
    img.require_shape(er, ec)?;
    let mut out = img.clone();
    if axis.cols() {
        out = out.try_map_cols(|c| extend_adjoint(c, spec, rows))?;
    }
    if axis.rows() {
        out = out.try_map_rows(|r| extend_adjoint(r, spec, cols))?;
    }
    Ok(out)
}

pub fn extend2d_pinv(
    img: &Image,
    spec: &ExtensionSpec,
    axis: Axis,
    rows: usize,
    cols: usize,
) -> Result<Image> {
    validate2d(spec, axis, rows, cols)?;
    let (er, ec) = axis.extended_shape(spec, rows, cols);
    img.require_shape(er, ec)?;
    let mut out = img.clone();
    if axis.cols() {
        out = out.try_map_cols(|c| extend_pinv(c, spec, rows))?;
    }
    if axis.rows() {
        out = out.try_map_rows(|r| extend_pinv(r, spec, cols))?;
    }
    Ok(out)
}

pub fn extend2d_pinv_adjoint(img: &Image, spec: &ExtensionSpec, axis: Axis) -> Result<Image> {
    validate2d(spec, axis, img.rows(), img.cols())?;
    let mut out = img.clone();
    if axis.rows() {
        out = out.try_map_rows(|r| extend_pinv_adjoint(r, spec))?;
    }
    if axis.cols() {
        out = out.try_map_cols(|c| extend_pinv_adjoint(c, spec))?;
    }
    Ok(out)
}

fn image_op<F, A>(in_shape: (usize, usize), out_shape: (usize, usize), f: F, a: A) -> LinearOperator
where
    F: Fn(&Image) -> Result<Image> + Send + Sync + 'static,
    A: Fn(&Image) -> Result<Image> + Send + Sync + 'static,
{
    LinearOperator::new(
        in_shape.0 * in_shape.1,
        out_shape.0 * out_shape.1,
        move |x| {
            let img = Image::new(in_shape.0, in_shape.1, x.to_vec()).expect("length checked");
            f(&img).expect("shape checked at construction").into_vec()
        },
        move |y| {
            let img = Image::new(out_shape.0, out_shape.1, y.to_vec()).expect("length checked");
            a(&img).expect("shape checked at construction").into_vec()
        },
    )
}

/// 2-D `E` acting on row-major vectorized `rows x cols` images.
pub fn extend2d_op(spec: ExtensionSpec, axis: Axis, rows: usize, cols: usize) -> Result<LinearOperator> {
    validate2d(&spec, axis, rows, cols)?;
    let ext = axis.extended_shape(&spec, rows, cols);
    Ok(image_op(
        (rows, cols),
        ext,
        move |img| extend2d(img, &spec, axis),
        move |img| extend2d_adjoint(img, &spec, axis, rows, cols),
    ))
}

/// 2-D `E†` with `(E†)*` in the adjoint slot.
pub fn extend2d_pinv_op(spec: ExtensionSpec, axis: Axis, rows: usize, cols: usize) -> Result<LinearOperator> {
    validate2d(&spec, axis, rows, cols)?;
    let ext = axis.extended_shape(&spec, rows, cols);
    Ok(image_op(
        ext,
        (rows, cols),
        move |img| extend2d_pinv(img, &spec, axis, rows, cols),
        move |img| extend2d_pinv_adjoint(img, &spec, axis),
    ))
}
