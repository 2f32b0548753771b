use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{rx, rz, spectral_norm, ComplexMatrix};
use super::NormError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOrder {
    /// `(U_J(τ) U_Γ(τ))^M`.
    First,
    /// `(U_Γ(τ/2) U_J(τ) U_Γ(τ/2))^M`.
    Second,
}

/// Periodic transverse-field Ising chain `H = −Σ J_i Z_i Z_{i+1} − Σ Γ_i X_i`
/// evolved for time `time` in `steps` Trotter steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfimHamiltonianSpec {
    pub n: usize,
    /// `couplings[i]` couples sites `i` and `(i + 1) mod n`.
    pub couplings: Vec<f64>,
    pub fields: Vec<f64>,
    pub time: f64,
    pub steps: usize,
    pub order: SplitOrder,
}

impl TfimHamiltonianSpec {
    pub fn uniform(n: usize, coupling: f64, field: f64, time: f64, steps: usize, order: SplitOrder) -> Self {
        Self {
            n,
            couplings: vec![coupling; n],
            fields: vec![field; n],
            time,
            steps,
            order,
        }
    }

    fn check(&self) -> Result<(), NormError> {
        if !(2..=6).contains(&self.n) {
            return Err(NormError::Dimension(format!("chain length {} outside 2..=6", self.n)));
        }
        if self.couplings.len() != self.n || self.fields.len() != self.n {
            return Err(NormError::Dimension("one coupling and one field per site".into()));
        }
        if self.steps == 0 {
            return Err(NormError::Domain("at least one Trotter step".into()));
        }
        Ok(())
    }
}

fn pauli_x() -> ComplexMatrix {
    let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    ComplexMatrix::from_row_major(2, &[o, l, l, o]).expect("2x2")
}

fn bit(state: usize, qubit: usize, n: usize) -> usize {
    (state >> (n - 1 - qubit)) & 1
}

/// The Hamiltonian assembled from Pauli terms.
pub fn tfim_hamiltonian(spec: &TfimHamiltonianSpec) -> Result<ComplexMatrix, NormError> {
    spec.check()?;
    let n = spec.n;
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        let zz: f64 = (0..n)
            .map(|i| {
                let parity = bit(s, i, n) ^ bit(s, (i + 1) % n, n);
                spec.couplings[i] * if parity == 0 { 1.0 } else { -1.0 }
            })
            .sum();
        h[(s, s)] -= Complex64::new(zz, 0.0);
    }
    let x = pauli_x();
    for (i, &g) in spec.fields.iter().enumerate() {
        let xi = ComplexMatrix::embed_single(&x, i as u32, n as u32);
        h -= xi.inner() * Complex64::new(g, 0.0);
    }
    let deviation = spectral_norm(&ComplexMatrix::from_inner(&h - h.adjoint()))?;
    if deviation > 1e-12 {
        return Err(NormError::NonHermitian(deviation));
    }
    Ok(ComplexMatrix::from_inner(h))
}

/// `e^{−i t H}` from the Hermitian eigendecomposition.
fn exact_propagator(h: &ComplexMatrix, time: f64) -> ComplexMatrix {
    let eig = h.inner().clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(0.0, -time * l).exp()));
    let v = &eig.eigenvectors;
    ComplexMatrix::from_inner(v * phases * v.adjoint())
}

/// `e^{−iτ H_J}` as a product of parity rotations with angle
/// `θ_z = −2τJ` (computed on the parity of each neighbouring pair).
fn coupling_step(spec: &TfimHamiltonianSpec, tau: f64) -> ComplexMatrix {
    let n = spec.n;
    let dim = 1usize << n;
    let gates: Vec<ComplexMatrix> = spec.couplings.iter().map(|&j| rz(-2.0 * tau * j)).collect();
    let diagonal: Vec<Complex64> = (0..dim)
        .map(|s| {
            (0..n)
                .map(|i| {
                    let parity = bit(s, i, n) ^ bit(s, (i + 1) % n, n);
                    gates[i].get(parity, parity)
                })
                .product()
        })
        .collect();
    ComplexMatrix::from_diagonal(&diagonal).expect("power of two")
}

/// `e^{−iτ H_Γ}` as a tensor product of `Rx(θ_x)` with `θ_x = −2τΓ`.
fn field_step(spec: &TfimHamiltonianSpec, tau: f64) -> ComplexMatrix {
    let mut out: Option<ComplexMatrix> = None;
    for &g in &spec.fields {
        let gate = rx(-2.0 * tau * g);
        out = Some(match out {
            None => gate,
            Some(acc) => acc.kron(&gate),
        });
    }
    out.expect("n >= 2")
}

pub fn trotter_product(spec: &TfimHamiltonianSpec) -> Result<ComplexMatrix, NormError> {
    spec.check()?;
    let tau = spec.time / spec.steps as f64;
    let step = match spec.order {
        SplitOrder::First => &coupling_step(spec, tau) * &field_step(spec, tau),
        SplitOrder::Second => {
            let half = field_step(spec, tau / 2.0);
            &(&half * &coupling_step(spec, tau)) * &half
        }
    };
    Ok(step.pow(spec.steps))
}

/// `‖e^{−iδH} − product‖` in the spectral norm.
pub fn trotter_error(spec: &TfimHamiltonianSpec) -> Result<f64, NormError> {
    let h = tfim_hamiltonian(spec)?;
    let exact = exact_propagator(&h, spec.time);
    let approx = trotter_product(spec)?;
    spectral_norm(&(&exact - &approx))
}

/// Errors for each step count in `steps`, with everything else from `spec`.
pub fn trotter_sweep(spec: &TfimHamiltonianSpec, steps: &[usize]) -> Result<Vec<f64>, NormError> {
    steps
        .iter()
        .map(|&m| {
            trotter_error(&TfimHamiltonianSpec {
                steps: m,
                ..spec.clone()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_is_hermitian_and_real() {
        let spec = TfimHamiltonianSpec {
            n: 4,
            couplings: vec![1.0, 0.5, -0.3, 2.0],
            fields: vec![0.1, 0.2, 0.3, 0.4],
            time: 1.0,
            steps: 4,
            order: SplitOrder::First,
        };
        let h = tfim_hamiltonian(&spec).unwrap();
        assert_eq!(h.dim(), 16);
        assert!((0..16).all(|i| (0..16).all(|j| h.get(i, j).im == 0.0 && h.get(i, j) == h.get(j, i))));
        // All spins up: −Σ J.
        assert_eq!(h.get(0, 0).re, -(1.0 + 0.5 - 0.3 + 2.0));
    }

    #[test]
    fn exact_splitting_without_field() {
        for order in [SplitOrder::First, SplitOrder::Second] {
            for m in [1, 3, 17] {
                let spec = TfimHamiltonianSpec::uniform(3, 1.0, 0.0, 1.0, m, order);
                assert!(trotter_error(&spec).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn product_is_unitary() {
        let spec = TfimHamiltonianSpec::uniform(5, 0.7, 1.3, 0.5, 6, SplitOrder::Second);
        assert!(trotter_product(&spec).unwrap().is_unitary(1e-10));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(trotter_error(&TfimHamiltonianSpec::uniform(7, 1.0, 1.0, 1.0, 4, SplitOrder::First)).is_err());
        assert!(trotter_error(&TfimHamiltonianSpec::uniform(3, 1.0, 1.0, 1.0, 0, SplitOrder::First)).is_err());
    }
}
