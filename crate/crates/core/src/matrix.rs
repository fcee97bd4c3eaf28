//! Dense column-major data matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A dense `rows × cols` real matrix whose columns are samples or dictionary atoms.
///
/// Construction rejects empty shapes and non-finite entries, so every solver can assume
/// clean input.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::dim(format!(
                "matrix must be non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry at linear index {pos}"
            )));
        }
        Ok(DataMatrix(matrix))
    }

    /// Builds a matrix from column-major storage.
    pub fn from_column_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Self::new(DMatrix::from_column_slice(rows, cols, data))
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::dim("at least one column is required"));
        };
        if let Some(bad) = columns.iter().find(|c| c.len() != first.len()) {
            return Err(Error::dim(format!(
                "columns have differing lengths {} and {}",
                first.len(),
                bad.len()
            )));
        }
        Self::new(DMatrix::from_columns(columns))
    }

    /// Horizontal concatenation `[A_0 A_1 …]`.
    pub fn hstack(blocks: &[&DataMatrix]) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::dim("at least one block is required"));
        };
        let rows = first.rows();
        if let Some(bad) = blocks.iter().find(|b| b.rows() != rows) {
            return Err(Error::dim(format!(
                "blocks have differing row counts {rows} and {}",
                bad.rows()
            )));
        }
        let cols: usize = blocks.iter().map(|b| b.cols()).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut offset = 0;
        for block in blocks {
            out.columns_mut(offset, block.cols()).copy_from(block.as_matrix());
            offset += block.cols();
        }
        Ok(DataMatrix(out))
    }

    /// Selects the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols()) {
            return Err(Error::dim(format!(
                "column {bad} out of range for {} columns",
                self.cols()
            )));
        }
        Self::new(self.0.select_columns(indices))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.0.column(j).into_owned()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Checks that `x` has one entry per row and only finite values.
    pub(crate) fn check_rhs(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.rows() {
            return Err(Error::dim(format!(
                "vector has length {}, matrix has {} rows",
                x.len(),
                self.rows()
            )));
        }
        check_finite(x)
    }
}

pub(crate) fn check_finite(x: &DVector<f64>) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::input(format!("non-finite vector entry at {pos}"))),
        None => Ok(()),
    }
}

impl AsRef<DMatrix<f64>> for DataMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}
