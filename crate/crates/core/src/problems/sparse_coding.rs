//! Sparse-coding step of dictionary learning with the cardinality
//! constraint dropped: `f(x) = |y - Dx|²`.

use std::path::Path;

use nalgebra::{DMatrix, DVector, DVectorView};

use super::least_squares::largest_gram_eigenvalue;
use super::matrix_io::read_matrix;
use crate::error::{Error, Result};
use crate::problem::Problem;

#[derive(Clone, Debug)]
pub struct SparseCodingProblem {
    dictionary: DMatrix<f64>,
    signal: DVector<f64>,
    lipschitz: f64,
}

impl SparseCodingProblem {
    pub fn new(dictionary: DMatrix<f64>, signal: DVector<f64>) -> Result<Self> {
        if dictionary.nrows() != signal.len() {
            return Err(Error::contract(format!(
                "dictionary has {} rows but signal has length {}",
                dictionary.nrows(),
                signal.len()
            )));
        }
        let lipschitz = 2.0 * largest_gram_eigenvalue(&dictionary);
        Ok(SparseCodingProblem {
            dictionary,
            signal,
            lipschitz,
        })
    }

    /// Uses column `column` of `data` as the signal.
    pub fn from_column(
        dictionary: DMatrix<f64>,
        data: &DMatrix<f64>,
        column: usize,
    ) -> Result<Self> {
        if column >= data.ncols() {
            return Err(Error::contract(format!(
                "column {column} out of range for {} data columns",
                data.ncols()
            )));
        }
        Self::new(dictionary, data.column(column).into_owned())
    }

    /// Loads the dictionary and data matrix from PADM or CSV files.
    pub fn load(dictionary: &Path, data: &Path, column: usize) -> Result<Self> {
        Self::from_column(read_matrix(dictionary)?, &read_matrix(data)?, column)
    }

    pub fn dictionary(&self) -> &DMatrix<f64> {
        &self.dictionary
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVectorView::from_slice(x, self.dictionary.ncols());
        &self.dictionary * xv - &self.signal
    }
}

impl Problem for SparseCodingProblem {
    fn dim(&self) -> usize {
        self.dictionary.ncols()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.residual(x).norm_squared()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let g = self.dictionary.tr_mul(&self.residual(x)) * 2.0;
        out.copy_from_slice(g.as_slice());
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}
