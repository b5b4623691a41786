use crate::error::{check_len, Error, Result};

/// Row-major real image. Operators see it as its flattened data vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("image data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Image {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            data.extend(self.data.iter().skip(c).step_by(self.cols.max(1)));
        }
        Image {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Applies `f` to every row; all outputs must share one length.
    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Image {
        let mut data = Vec::new();
        let mut cols = 0;
        for r in 0..self.rows {
            let out = f(self.row(r));
            cols = out.len();
            data.extend(out);
        }
        Image {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Applies `f` to every column; all outputs must share one length.
    pub fn map_cols(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Image {
        let outs: Vec<Vec<f64>> = (0..self.cols).map(|c| f(&self.column(c))).collect();
        let rows = outs.first().map_or(0, Vec::len);
        Image::from_fn(rows, self.cols, |r, c| outs[c][r])
    }

    pub fn try_map_rows(&self, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Image> {
        let mut data = Vec::new();
        let mut cols = 0;
        for r in 0..self.rows {
            let out = f(self.row(r))?;
            cols = out.len();
            data.extend(out);
        }
        Ok(Image {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn try_map_cols(&self, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Image> {
        let outs = (0..self.cols)
            .map(|c| f(&self.column(c)))
            .collect::<Result<Vec<_>>>()?;
        let rows = outs.first().map_or(0, Vec::len);
        Ok(Image::from_fn(rows, self.cols, |r, c| outs[c][r]))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn require_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::InvalidParameter(format!(
                "expected a {rows}x{cols} image, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}
