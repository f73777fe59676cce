//! Symmetric matrices: a dense f64 wrapper around nalgebra for the numeric
//! path, and an exact rational matrix with Gauss–Jordan inversion for the
//! exact path.
//!
//! The JSON schema for both is `{"size": M, "rows": [[…], …]}` row-major.
//! Entries may be JSON numbers or decimal strings; the exact path reads
//! string entries (and dyadic-exact numbers) without rounding.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational};

/// Dense symmetric f64 matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from rows; must be square and symmetric to 1e-9 relative (the
    /// stored matrix is the symmetrized average).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("matrix must be square and non-empty".into()));
        }
        let mut scale = 0.0f64;
        for r in rows {
            for &v in r {
                if !v.is_finite() {
                    return Err(Error::Input("matrix entries must be finite".into()));
                }
                scale = scale.max(v.abs());
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (rows[i][j] - rows[j][i]).abs() > 1e-9 * scale.max(1.0) {
                    return Err(Error::Input(format!(
                        "matrix is not symmetric: a[{i}][{j}] = {} vs a[{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
        Ok(SymMatrix { m })
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SymMatrix {
            m: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }),
        }
    }

    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.m[(i, j)]).collect())
            .collect()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Scale every entry.
    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix { m: &self.m * c }
    }

    /// Matrix product (result is not necessarily symmetric, so plain rows).
    pub fn mul_raw(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        let p = &self.m * &other.m;
        (0..p.nrows())
            .map(|i| (0..p.ncols()).map(|j| p[(i, j)]).collect())
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.m * v).iter().copied().collect()
    }

    /// xᵀ A x.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Eigenvalues of the symmetric matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.m.clone().symmetric_eigen();
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// 2-norm condition number |λ|max/|λ|min (∞ when singular).
    pub fn condition_number(&self) -> f64 {
        let eigs = self.eigenvalues();
        let max = eigs.iter().map(|e| e.abs()).fold(0.0f64, f64::max);
        let min = eigs.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Cholesky-based positive-definiteness test.
    pub fn is_positive_definite(&self) -> bool {
        self.m.clone().cholesky().is_some()
    }

    /// Inverse via Cholesky; errors if the matrix is not positive definite.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let chol = self
            .m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        Ok(SymMatrix { m: chol.inverse() })
    }

    /// Solve A x = b via Cholesky.
    pub fn solve_pd(&self, b: &[f64]) -> Result<Vec<f64>> {
        let chol = self
            .m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let x = chol.solve(&nalgebra::DVector::from_column_slice(b));
        Ok(x.iter().copied().collect())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: MatrixRepr = serde_json::from_str(s)?;
        repr.to_f64()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixRepr::from_f64(self)).expect("matrix serialization")
    }
}

/// Exact rational symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    rows: Vec<Vec<BigRational>>,
}

impl RatMatrix {
    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("matrix must be square and non-empty".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Input(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(RatMatrix { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        RatMatrix { rows }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn to_f64(&self) -> Result<SymMatrix> {
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(crate::scalar::Coeff::to_f64).collect())
            .collect();
        SymMatrix::from_rows(&rows)
    }

    /// Exact inverse by Gauss–Jordan elimination with column pivoting.
    pub fn inverse(&self) -> Result<RatMatrix> {
        let n = self.size();
        let mut a = self.rows.clone();
        let mut inv = RatMatrix::identity(n).rows;
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !a[r][col].is_zero())
                .ok_or_else(|| Error::SingularMatrix("exact elimination hit a zero column".into()))?;
            a.swap(col, pivot_row);
            inv.swap(col, pivot_row);
            let pivot = a[col][col].clone();
            for j in 0..n {
                a[col][j] = &a[col][j] / &pivot;
                inv[col][j] = &inv[col][j] / &pivot;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].clone();
                for j in 0..n {
                    let s = &a[col][j] * &factor;
                    a[r][j] = &a[r][j] - &s;
                    let s = &inv[col][j] * &factor;
                    inv[r][j] = &inv[r][j] - &s;
                }
            }
        }
        // inverse of a symmetric matrix is symmetric; build unchecked to
        // avoid spurious asymmetry errors from pivoting order (exact
        // arithmetic keeps it symmetric anyway)
        Ok(RatMatrix { rows: inv })
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<Vec<Vec<BigRational>>> {
        let n = self.size();
        if other.size() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: other.size(),
            });
        }
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| &self.rows[i][k] * &other.rows[k][j])
                            .fold(BigRational::zero(), |acc, v| acc + v)
                    })
                    .collect()
            })
            .collect())
    }

    /// Exact positive-definiteness via leading principal minors
    /// (Sylvester's criterion).
    pub fn is_positive_definite(&self) -> bool {
        let n = self.size();
        let mut a = self.rows.clone();
        // fraction-free-ish LDL: eliminate and check pivots stay positive
        for col in 0..n {
            if !a[col][col].is_positive() {
                return false;
            }
            let pivot = a[col][col].clone();
            for r in (col + 1)..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = &a[r][col] / &pivot;
                for j in col..n {
                    let s = &a[col][j] * &factor;
                    a[r][j] = &a[r][j] - &s;
                }
            }
        }
        true
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: MatrixRepr = serde_json::from_str(s)?;
        repr.to_rational()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixRepr::from_rational(self)).expect("matrix serialization")
    }
}

/// JSON entry: a plain number or a decimal/rational string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumOrStr {
    Num(f64),
    Str(String),
}

/// On-disk matrix schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixRepr {
    pub size: usize,
    pub rows: Vec<Vec<NumOrStr>>,
}

impl MatrixRepr {
    pub fn from_f64(m: &SymMatrix) -> Self {
        MatrixRepr {
            size: m.size(),
            rows: m
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(NumOrStr::Num).collect())
                .collect(),
        }
    }

    pub fn from_rational(m: &RatMatrix) -> Self {
        MatrixRepr {
            size: m.size(),
            rows: m
                .rows()
                .iter()
                .map(|r| r.iter().map(|v| NumOrStr::Str(format_rational(v))).collect())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> Result<SymMatrix> {
        self.validate()?;
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| match e {
                        NumOrStr::Num(v) => Ok(*v),
                        NumOrStr::Str(s) => s
                            .parse::<f64>()
                            .or_else(|_| parse_rational(s).map(|q| crate::scalar::Coeff::to_f64(&q)))
                            .map_err(|_| Error::Input(format!("bad matrix entry {s:?}"))),
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        SymMatrix::from_rows(&rows)
    }

    pub fn to_rational(&self) -> Result<RatMatrix> {
        self.validate()?;
        let rows: Vec<Vec<BigRational>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| match e {
                        // f64 numbers convert exactly (they are dyadic)
                        NumOrStr::Num(v) => BigRational::from_f64(*v)
                            .ok_or_else(|| Error::Input(format!("non-finite matrix entry {v}"))),
                        NumOrStr::Str(s) => parse_rational(s),
                    })
                    .collect::<Result<Vec<BigRational>>>()
            })
            .collect::<Result<_>>()?;
        RatMatrix::from_rows(rows)
    }

    fn validate(&self) -> Result<()> {
        if self.rows.len() != self.size || self.rows.iter().any(|r| r.len() != self.size) {
            return Err(Error::Input(format!(
                "matrix declares size {} but rows are {:?}",
                self.size,
                self.rows.iter().map(|r| r.len()).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }
}
