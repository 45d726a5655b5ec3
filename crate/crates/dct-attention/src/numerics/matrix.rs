use crate::error::{Error, Result};
use crate::numerics::alloc;
use crate::numerics::rng::Rng;

/// Dense row-major matrix of `f64`.
///
/// All linear algebra in this crate runs on this one type. Construction
/// and destruction are reported to the global [`AllocationCounter`]
/// (element counts, not bytes), which is what makes the memory
/// measurements in the benchmark harness exact and repeatable.
///
/// Degenerate shapes with zero rows or columns are valid and hold no
/// storage.
///
/// [`AllocationCounter`]: crate::numerics::AllocationCounter
#[derive(Debug)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn track(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
        debug_assert_eq!(data.len(), rows * cols);
        alloc::record_alloc(data.len());
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix::track(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                op: "from_vec",
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix::track(rows, cols, data))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Matrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::invalid(
                    "from_rows",
                    format!("row 0 has {c} columns but row {i} has {}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix::track(r, c, data))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::track(rows, cols, data)
    }

    /// Matrix with every element drawn uniformly from `[lo, hi)`.
    pub fn rand_uniform(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
        // NaN bounds fail here too: neither side of the comparison holds.
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::invalid(
                "rand_uniform",
                format!("empty range: lo={lo} is not below hi={hi}"),
            ));
        }
        Ok(Matrix::from_fn(rows, cols, |_, _| rng.uniform(lo, hi)))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// New matrix with rows and columns exchanged.
    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    /// Add `row` to every row of the matrix.
    pub fn add_row_in_place(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::shape_mismatch(
                "add_row_in_place",
                (self.rows, self.cols),
                (1, row.len()),
            ));
        }
        for r in 0..self.rows {
            let dst = self.row_mut(r);
            for (x, b) in dst.iter_mut().zip(row) {
                *x += b;
            }
        }
        Ok(())
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Index of the first non-finite element, if any.
    pub(crate) fn first_non_finite(&self) -> Option<(usize, usize, f64)> {
        self.data
            .iter()
            .position(|x| !x.is_finite())
            .map(|p| (p / self.cols.max(1), p % self.cols.max(1), self.data[p]))
    }
}

impl Drop for Matrix {
    fn drop(&mut self) {
        alloc::record_free(self.data.len());
    }
}

// Manual impl so copies register with the allocation counter like any
// other construction.
impl Clone for Matrix {
    fn clone(&self) -> Matrix {
        Matrix::track(self.rows, self.cols, self.data.clone())
    }
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

/// `a + b`, elementwise.
pub fn add(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::shape_mismatch("add", a.shape(), b.shape()));
    }
    let mut out = a.clone();
    for (x, y) in out.data.iter_mut().zip(&b.data) {
        *x += y;
    }
    Ok(out)
}

/// `a - b`, elementwise.
pub fn sub(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::shape_mismatch("sub", a.shape(), b.shape()));
    }
    let mut out = a.clone();
    for (x, y) in out.data.iter_mut().zip(&b.data) {
        *x -= y;
    }
    Ok(out)
}

/// Largest absolute elementwise difference between two same-shaped matrices.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape_mismatch("max_abs_diff", a.shape(), b.shape()));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// Frobenius norm of `a - b`.
pub fn frob_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape_mismatch("frob_diff", a.shape(), b.shape()));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Concatenate matrices left to right. All inputs must share a row count.
pub fn hstack(mats: &[Matrix]) -> Result<Matrix> {
    let rows = mats.first().map_or(0, Matrix::rows);
    let mut cols = 0;
    for m in mats {
        if m.rows() != rows {
            return Err(Error::shape_mismatch("hstack", (rows, cols), m.shape()));
        }
        cols += m.cols();
    }
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let dst = out.row_mut(i);
        let mut offset = 0;
        for m in mats {
            dst[offset..offset + m.cols()].copy_from_slice(m.row(i));
            offset += m.cols();
        }
    }
    Ok(out)
}
