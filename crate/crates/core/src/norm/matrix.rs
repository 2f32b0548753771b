use std::ops::{Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::NormError;

/// Largest supported dimension (six qubits).
pub const MAX_DIMENSION: usize = 64;

/// Square complex matrix whose dimension is a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

pub(crate) fn check_dimension(d: usize) -> Result<(), NormError> {
    if d == 0 || !d.is_power_of_two() || d > MAX_DIMENSION {
        return Err(NormError::Dimension(format!(
            "dimension {d} must be a power of two no larger than {MAX_DIMENSION}"
        )));
    }
    Ok(())
}

impl ComplexMatrix {
    /// Build from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self, NormError> {
        check_dimension(dim)?;
        if entries.len() != dim * dim {
            return Err(NormError::Dimension(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn identity(dim: usize) -> Self {
        check_dimension(dim).expect("valid dimension");
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diagonal: &[Complex64]) -> Result<Self, NormError> {
        check_dimension(diagonal.len())?;
        let d = diagonal.len();
        Ok(Self(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                diagonal[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })))
    }

    pub(crate) fn from_inner(inner: DMatrix<Complex64>) -> Self {
        Self(inner)
    }

    pub(crate) fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_qubits(&self) -> u32 {
        self.dim().trailing_zeros()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `gate` (2×2) acting on `qubit` of an `n`-qubit register; qubit 0 is the
    /// leftmost tensor factor.
    pub fn embed_single(gate: &Self, qubit: u32, n: u32) -> Self {
        assert_eq!(gate.dim(), 2);
        assert!(qubit < n);
        let mut out: Option<Self> = None;
        for q in 0..n {
            let factor = if q == qubit { gate.clone() } else { Self::identity(2) };
            out = Some(match out {
                None => factor,
                Some(acc) => acc.kron(&factor),
            });
        }
        out.expect("n >= 1")
    }

    pub fn pow(&self, exponent: usize) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// `‖M†M − I‖` measured in the spectral norm.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = &self.adjoint() * self;
        spectral_norm(&(&gram - &Self::identity(self.dim()))).unwrap_or(f64::INFINITY)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64, NormError> {
    if !a.is_finite() {
        return Err(NormError::Domain("matrix has non-finite entries".into()));
    }
    Ok(a.0.singular_values().max())
}

/// `diag(e^{-iθ/2}, e^{iθ/2})`.
pub fn rz(theta: f64) -> ComplexMatrix {
    let half = Complex64::new(0.0, theta / 2.0);
    ComplexMatrix::from_diagonal(&[(-half).exp(), half.exp()]).expect("2x2")
}

/// `H · Rz(θ) · H = e^{-iθX/2}`.
pub fn rx(theta: f64) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = ComplexMatrix::from_row_major(
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ],
    )
    .expect("2x2");
    &(&h * &rz(theta)) * &h
}
