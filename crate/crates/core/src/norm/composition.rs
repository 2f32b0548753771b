use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::matrix::{check_dimension, rz, spectral_norm, ComplexMatrix};
use super::NormError;

/// Upper bound on `factors · trials` for one composition check.
pub const MAX_PRODUCTS: usize = 100_000;

/// Slack for floating-point noise when comparing against the bound.
const BOUND_SLACK: f64 = 1e-12;

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix, NormError> {
    if dim == 0 || !dim.is_power_of_two() || dim > super::MAX_DIMENSION {
        return Err(NormError::Dimension(format!("dimension {dim}")));
    }
    let gauss = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = gauss.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(ComplexMatrix::from_inner(q))
}

/// Unitary `V` with `‖V − U‖ ∈ [0.9ε, ε]`: `U` followed by a z-rotation of a
/// random qubit whose distance from the identity is drawn uniformly from that
/// interval. `‖Rz(φ) − I‖ = 2|sin(φ/4)|` fixes the angle.
pub fn perturb_unitary<R: Rng + ?Sized>(u: &ComplexMatrix, eps: f64, rng: &mut R) -> Result<ComplexMatrix, NormError> {
    if !(0.0..2.0).contains(&eps) {
        return Err(NormError::Domain(format!("perturbation {eps} must lie in [0, 2)")));
    }
    let n = u.num_qubits();
    if n == 0 {
        return Err(NormError::Dimension("perturbation needs at least one qubit".into()));
    }
    let qubit = rng.random_range(0..n);
    let target = eps * (0.9 + 0.1 * rng.random::<f64>());
    let phi = 4.0 * (target / 2.0).asin();
    let dressing = ComplexMatrix::embed_single(&rz(phi), qubit, n);
    Ok(u * &dressing)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub factors: usize,
    pub dim: usize,
    pub trials: usize,
    pub bound: f64,
    pub violations: usize,
    /// Largest `‖ΠU − ΠV‖ / Σε`.
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Compose `eps.len()` random unitaries and their perturbations, `trials`
/// times, and compare the distance of the products with `Σ ε_i`. Trial `t`
/// draws from its own generator seeded with `seed + t`.
pub fn verify_composition_bound(dim: usize, eps: &[f64], trials: usize, seed: u64) -> Result<CompositionReport, NormError> {
    check_dimension(dim)?;
    let factors = eps.len();
    if factors == 0 {
        return Err(NormError::Domain("at least one factor is required".into()));
    }
    let products = factors.saturating_mul(trials);
    if products > MAX_PRODUCTS {
        return Err(NormError::TooLarge(products));
    }
    let bound: f64 = eps.iter().sum();
    let mut ratios = Vec::with_capacity(trials);
    let mut violations = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let mut exact = ComplexMatrix::identity(dim);
        let mut approx = ComplexMatrix::identity(dim);
        for &e in eps {
            let u = random_unitary(dim, &mut rng)?;
            let v = perturb_unitary(&u, e, &mut rng)?;
            exact = &u * &exact;
            approx = &v * &approx;
        }
        let observed = spectral_norm(&(&exact - &approx))?;
        if observed > bound + BOUND_SLACK {
            violations += 1;
        }
        ratios.push(if bound > 0.0 { observed / bound } else { 0.0 });
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mean_ratio = if trials > 0 { ratios.iter().sum::<f64>() / trials as f64 } else { 0.0 };
    Ok(CompositionReport {
        factors,
        dim,
        trials,
        bound,
        violations,
        max_ratio,
        mean_ratio,
        ratios,
    })
}
