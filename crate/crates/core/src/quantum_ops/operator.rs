use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{f17, max_abs, CMatrix};

/// Dense complex operator on a finite Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    diagonal: bool,
}

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension {
                context: "operator",
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let diagonal = is_diagonal(&matrix);
        Ok(Operator { matrix, diagonal })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Operator {
            matrix: m,
            diagonal: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            matrix: CMatrix::zeros(dim, dim),
            diagonal: true,
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `‖A − A†‖_max ≤ tol · ‖A‖_max`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = max_abs(&self.matrix);
        max_abs(&(&self.matrix - self.matrix.adjoint())) <= tol * scale
    }

    pub fn to_json(&self) -> OperatorJson {
        let n = self.dimension();
        OperatorJson {
            dimension: n,
            entries: (0..n * n)
                .map(|i| {
                    let z = self.matrix[(i / n, i % n)];
                    ComplexPair([z.re, z.im])
                })
                .collect(),
        }
    }

    pub fn from_json(j: &OperatorJson) -> Result<Self> {
        let n = j.dimension;
        if j.entries.len() != n * n {
            return Err(Error::Dimension {
                context: "operator entries",
                expected: n * n,
                got: j.entries.len(),
            });
        }
        Operator::new(CMatrix::from_fn(n, n, |r, c| {
            let [re, im] = j.entries[r * n + c].0;
            Complex64::new(re, im)
        }))
    }
}

impl Deref for Operator {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.matrix
    }
}

fn is_diagonal(m: &CMatrix) -> bool {
    m.iter()
        .enumerate()
        .all(|(i, z)| i % m.nrows() == i / m.nrows() || *z == Complex64::new(0.0, 0.0))
}

/// JSON form: dimension plus row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dimension: usize,
    pub entries: Vec<ComplexPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ComplexPair(pub [f64; 2]);

impl Serialize for ComplexPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        f17::vec::serialize(&self.0, s)
    }
}
