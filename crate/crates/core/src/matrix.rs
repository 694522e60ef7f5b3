//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Matrices are stored row-major. Qubit 0 is the most significant tensor
//! factor: basis index `i` of an n-qubit register has qubit 0 in bit `n - 1`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RandomSource;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance used when a matrix is accepted as unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries supplied for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        let mut m = Self::zeros(ket.len(), bra.len());
        for (i, a) in ket.iter().enumerate() {
            for (j, b) in bra.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::new(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn multiply(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(self.mismatch(other));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor_product(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = ComplexMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.shape() != other.shape() {
            return Err(self.mismatch(other));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.add(&other.scale(-ONE))
    }

    pub fn add_assign(&mut self, other: &ComplexMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(self.mismatch(other));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(self.mismatch(other));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> Result<f64> {
        self.max_abs_diff(&self.adjoint())
    }

    /// `‖U U† − I‖_max`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let gram = self.multiply(&self.adjoint())?;
        gram.max_abs_diff(&ComplexMatrix::identity(self.rows))
    }

    fn mismatch(&self, other: &ComplexMatrix) -> Error {
        Error::DimensionMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Square matrix checked to be unitary at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.unitarity_defect()?;
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn tensor_product(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(self.0.tensor_product(&other.0))
    }

    pub fn multiply(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        Ok(UnitaryMatrix(self.0.multiply(&other.0)?))
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.0.apply(v)
    }

    /// `U† v`, without forming the adjoint.
    pub fn apply_adjoint(&self, v: &[C64]) -> Result<Vec<C64>> {
        let d = self.dim();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                left_rows: d,
                left_cols: d,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        let mut out = vec![ZERO; d];
        for (r, &x) in v.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (o, u) in out.iter_mut().zip(self.0.row(r)) {
                *o += u.conj() * x;
            }
        }
        Ok(out)
    }
}

/// Pure state vector or density operator.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(Vec<C64>),
    Density(ComplexMatrix),
}

impl QuantumState {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn pure(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Ok(Self::Pure(amplitudes))
    }

    /// Hermitian, unit trace and positive semidefinite (the last is checked
    /// through the diagonal and 2x2 principal minors only).
    pub fn density(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::NotSquare {
                rows: rho.rows(),
                cols: rho.cols(),
            });
        }
        let herm = rho.hermiticity_defect()?;
        if herm > Self::TOLERANCE {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > Self::TOLERANCE {
            return Err(Error::InvalidState(format!("density matrix has trace {tr}")));
        }
        let d = rho.rows();
        for i in 0..d {
            if rho[(i, i)].re < -Self::TOLERANCE {
                return Err(Error::InvalidState("negative diagonal entry".into()));
            }
            for j in i + 1..d {
                let minor = rho[(i, i)].re * rho[(j, j)].re - rho[(i, j)].norm_sqr();
                if minor < -Self::TOLERANCE {
                    return Err(Error::InvalidState("density matrix is not positive".into()));
                }
            }
        }
        Ok(Self::Density(rho))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, d: dim });
        }
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Ok(Self::Pure(v))
    }

    /// `|0...0>` on `dim` levels.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::basis(dim, 0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Density(m) => m.rows(),
        }
    }

    pub fn to_density(&self) -> ComplexMatrix {
        match self {
            Self::Pure(v) => ComplexMatrix::outer(v, v),
            Self::Density(m) => m.clone(),
        }
    }

    /// Basis index `i` if this is exactly `|i>` up to a global phase.
    pub fn as_basis_state(&self) -> Option<usize> {
        match self {
            Self::Pure(v) => {
                let nonzero: Vec<usize> = (0..v.len()).filter(|&i| v[i] != ZERO).collect();
                (nonzero.len() == 1).then(|| nonzero[0])
            }
            Self::Density(m) => {
                let d = m.rows();
                let hits: Vec<usize> = (0..d).filter(|&i| m[(i, i)] != ZERO).collect();
                if hits.len() != 1 || (m[(hits[0], hits[0])] - ONE).norm() > Self::TOLERANCE {
                    return None;
                }
                let only_diag = (0..d).all(|r| (0..d).all(|c| (r == hits[0] && c == r) || m[(r, c)] == ZERO));
                only_diag.then(|| hits[0])
            }
        }
    }
}

/// Embed a single-qubit operator acting on `qubit` (0 = most significant)
/// of an `n`-qubit register.
pub fn embed_single_qubit(op: &ComplexMatrix, qubit: usize, n: usize) -> Result<ComplexMatrix> {
    if op.shape() != (2, 2) {
        return Err(Error::InvalidMatrix("single-qubit operator must be 2x2".into()));
    }
    if qubit >= n {
        return Err(Error::IndexOutOfRange { index: qubit, d: n });
    }
    let left = ComplexMatrix::identity(1 << qubit);
    let right = ComplexMatrix::identity(1 << (n - qubit - 1));
    Ok(left.tensor_product(op).tensor_product(&right))
}

/// Permutation unitary exchanging qubits `a` and `b` of an `n`-qubit register.
pub fn swap_qubits(a: usize, b: usize, n: usize) -> Result<UnitaryMatrix> {
    if a >= n || b >= n {
        return Err(Error::IndexOutOfRange { index: a.max(b), d: n });
    }
    let d = 1usize << n;
    let (ba, bb) = (n - 1 - a, n - 1 - b);
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        let bit_a = (i >> ba) & 1;
        let bit_b = (i >> bb) & 1;
        let mut j = i & !(1 << ba) & !(1 << bb);
        j |= bit_a << bb;
        j |= bit_b << ba;
        m[(j, i)] = ONE;
    }
    UnitaryMatrix::new(m)
}

/// Haar-random unitary on `dim` levels.
///
/// Ginibre matrix, Householder QR, then `Q · diag(r_jj / |r_jj|)` so that the
/// effective R has a positive diagonal. Without that phase correction the
/// distribution of Q is not Haar.
pub fn sample_haar_unitary(dim: usize, rng: &mut RandomSource) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let ginibre: Vec<C64> = (0..dim * dim).map(|_| rng.complex_normal()).collect();
    // Column-major working copy: columns[j][i] = A[i][j].
    let mut columns: Vec<Vec<C64>> = (0..dim)
        .map(|j| (0..dim).map(|i| ginibre[i * dim + j]).collect())
        .collect();

    let mut reflectors: Vec<Option<Vec<C64>>> = Vec::with_capacity(dim);
    let mut phases = vec![ONE; dim];
    for k in 0..dim {
        let x = &columns[k][k..];
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = x.to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(None);
            phases[k] = alpha / alpha.norm();
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        for col in columns.iter_mut().skip(k) {
            reflect(&v, &mut col[k..]);
        }
        phases[k] = alpha / alpha.norm();
        reflectors.push(Some(v));
    }

    // Q = H_0 H_1 ... H_{d-1}; accumulate by applying to the identity from the right end.
    let mut q: Vec<Vec<C64>> = (0..dim)
        .map(|j| {
            let mut e = vec![ZERO; dim];
            e[j] = ONE;
            e
        })
        .collect();
    for k in (0..dim).rev() {
        if let Some(v) = &reflectors[k] {
            for col in q.iter_mut() {
                reflect(v, &mut col[k..]);
            }
        }
    }

    let mut data = vec![ZERO; dim * dim];
    for (j, col) in q.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            data[i * dim + j] = z * phases[j];
        }
    }
    Ok(UnitaryMatrix(ComplexMatrix { rows: dim, cols: dim, data }))
}

/// `x <- (I - 2 v v†) x` for unit `v`.
fn reflect(v: &[C64], x: &mut [C64]) {
    let s: C64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
    if s == ZERO {
        return;
    }
    let s2 = s * 2.0;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= vi * s2;
    }
}
