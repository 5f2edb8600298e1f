//! Dense operator algebra on small tensor-product spaces.
//!
//! Qubit local basis is `(|g>, |e>) = (0, 1)`. Kronecker products put the
//! first subsystem in the most significant position, so on three qubits the
//! bare index of `|q0 q1 q2>` is `4*q0 + 2*q1 + q2`.

use ndarray::{linalg::kron, Array1, Array2};
use ndarray_linalg::{EigValsh, Eigh, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("subsystem dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("site {site} out of range for {n} subsystems")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("site {site} has dimension {dim}, expected a qubit")]
    NotQubit { site: usize, dim: usize },
    #[error("matrix shape {got:?} does not match space dimension {dim}")]
    ShapeMismatch { got: (usize, usize), dim: usize },
    #[error("operator spaces differ: {0:?} vs {1:?}")]
    SpaceMismatch(Vec<usize>, Vec<usize>),
    #[error("n_fock must be at least 2, got {0}")]
    FockTooSmall(usize),
    #[error("empty operator list")]
    Empty,
    #[error("density matrix invalid: {0}")]
    InvalidDensity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self, HilbertError> {
        if dims.is_empty() {
            return Err(HilbertError::Empty);
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(HilbertError::BadDimension(d));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n.max(1)] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Bare basis label such as `"egg"` for a pure qubit register.
    pub fn bare_label(&self, index: usize) -> String {
        let mut digits = vec![0usize; self.dims.len()];
        let mut rem = index;
        for (k, &d) in self.dims.iter().enumerate().rev() {
            digits[k] = rem % d;
            rem /= d;
        }
        digits
            .iter()
            .zip(&self.dims)
            .map(|(&x, &d)| match (d, x) {
                (2, 0) => "g".to_string(),
                (2, _) => "e".to_string(),
                _ => x.to_string(),
            })
            .collect()
    }

    fn concat(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSpace { dims }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpace,
    data: Array2<C64>,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpace, data: Array2<C64>) -> Result<Self, HilbertError> {
        let n = space.total_dim();
        if data.dim() != (n, n) {
            return Err(HilbertError::ShapeMismatch { got: data.dim(), dim: n });
        }
        Ok(Self { space, data })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, data: Array2::zeros((n, n)) }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, data: Array2::eye(n) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), data: self.data.t().mapv(|z| z.conj()) }
    }

    fn check_space(&self, other: &Self) -> Result<(), HilbertError> {
        if self.space != other.space {
            return Err(HilbertError::SpaceMismatch(self.space.dims.clone(), other.space.dims.clone()));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check_space(other)?;
        Ok(Self { space: self.space.clone(), data: self.data.dot(&other.data) })
    }

    pub fn add(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check_space(other)?;
        Ok(Self { space: self.space.clone(), data: &self.data + &other.data })
    }

    pub fn add_scaled(&mut self, c: C64, other: &Self) -> Result<(), HilbertError> {
        self.check_space(other)?;
        self.data.scaled_add(c, &other.data);
        Ok(())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { space: self.space.clone(), data: self.data.mapv(|z| z * c) }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            data: self.data.dot(&other.data) - other.data.dot(&self.data),
        })
    }

    /// Largest entry of `|M - M^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.data.dot(v)
    }
}

/// Eigen-decomposition `a = V diag(w) V^dagger` of a Hermitian matrix with
/// ascending `w`. The LAPACK binding returns conjugated vectors for
/// row-major complex input, so the matrix is handed over column-major.
pub fn eigh_hermitian(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>), ndarray_linalg::error::LinalgError> {
    let col_major = a.t().as_standard_layout().into_owned().reversed_axes();
    col_major.eigh(UPLO::Upper)
}

pub fn sigma_minus() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = ONE;
    m
}

pub fn sigma_plus() -> Array2<C64> {
    sigma_minus().reversed_axes()
}

/// Qubit lowering operator on `site`, identity elsewhere.
pub fn embed_lowering(site: usize, space: &HilbertSpace) -> Result<OperatorMatrix, HilbertError> {
    embed_local(&sigma_minus(), site, space)
}

/// Embeds a single-site operator into the full space.
pub fn embed_local(op: &Array2<C64>, site: usize, space: &HilbertSpace) -> Result<OperatorMatrix, HilbertError> {
    let n = space.n_subsystems();
    if site >= n {
        return Err(HilbertError::SiteOutOfRange { site, n });
    }
    let d = space.dims[site];
    if op.dim() != (d, d) {
        if op.nrows() == 2 {
            return Err(HilbertError::NotQubit { site, dim: d });
        }
        return Err(HilbertError::ShapeMismatch { got: op.dim(), dim: d });
    }
    let mut acc = Array2::<C64>::eye(1);
    for (k, &dk) in space.dims.iter().enumerate() {
        acc = if k == site { kron(&acc, op) } else { kron(&acc, &Array2::eye(dk)) };
    }
    OperatorMatrix::new(space.clone(), acc)
}

/// Truncated bosonic `(a, a^dagger)` with `<n-1|a|n> = sqrt(n)`.
pub fn ladder_operators(n_fock: usize) -> Result<(OperatorMatrix, OperatorMatrix), HilbertError> {
    if n_fock < 2 {
        return Err(HilbertError::FockTooSmall(n_fock));
    }
    let space = HilbertSpace::new(vec![n_fock])?;
    let mut a = Array2::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a = OperatorMatrix::new(space, a)?;
    let ad = a.dagger();
    Ok((a, ad))
}

pub fn tensor_product(ops: &[OperatorMatrix]) -> Result<OperatorMatrix, HilbertError> {
    let (first, rest) = ops.split_first().ok_or(HilbertError::Empty)?;
    let mut acc = first.clone();
    for op in rest {
        acc = OperatorMatrix { space: acc.space.concat(&op.space), data: kron(&acc.data, &op.data) };
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    data: Array2<C64>,
}

pub const DENSITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

impl DensityMatrix {
    /// Validates trace, Hermiticity and numerical positivity.
    pub fn new(space: HilbertSpace, data: Array2<C64>) -> Result<Self, HilbertError> {
        let op = OperatorMatrix::new(space.clone(), data)?;
        let tr = op.trace();
        if (tr - ONE).norm() > DENSITY_TOL {
            return Err(HilbertError::InvalidDensity(format!("trace {tr}")));
        }
        let herm = op.hermiticity_error();
        if herm > DENSITY_TOL {
            return Err(HilbertError::InvalidDensity(format!("hermiticity error {herm:e}")));
        }
        let rho = Self { space, data: op.into_matrix() };
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(HilbertError::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Hermitizes and renormalizes before validating.
    pub fn from_unnormalized(space: HilbertSpace, data: Array2<C64>) -> Result<Self, HilbertError> {
        let herm = (&data + &data.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let tr = herm.diag().sum();
        Self::new(space, herm.mapv(|z| z / tr))
    }

    pub fn pure(space: HilbertSpace, psi: &Array1<C64>) -> Result<Self, HilbertError> {
        let n = psi.len();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let data = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / norm);
        Self::new(space, data)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn expect(&self, op: &OperatorMatrix) -> C64 {
        let n = self.data.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += op.data[[i, j]] * self.data[[j, i]];
            }
        }
        acc
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.data
            .eigvalsh(UPLO::Upper)
            .map(|ev| ev.iter().cloned().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.data[[index, index]].re
    }
}
