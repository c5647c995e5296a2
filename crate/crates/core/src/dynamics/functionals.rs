use faer::Mat;

use super::state::DensityMatrix;
use crate::{linalg, Error, Result};

const EIGEN_FLOOR: f64 = 1e-14;
const SUPPORT_TOL: f64 = 1e-8;

/// `D(ρ‖σ) = Tr ρ (ln ρ − ln σ)`.
///
/// Eigenvalues of `σ` below `1e-14` are clipped to that floor inside the
/// logarithm, so `σ` is effectively full rank. Eigenvalues that are not
/// positive at all mark an empty support; weight of `ρ` there beyond `1e-8`
/// is an error.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.require_same(sigma)?;
    let (p, r) = linalg::hermitian_eigen(rho.matrix().as_ref())?;
    let (q, s) = linalg::hermitian_eigen(sigma.matrix().as_ref())?;
    let overlap = r.adjoint() * &s;
    let n = p.len();

    let mut self_term = 0.0;
    let mut cross = 0.0;
    let mut outside = 0.0;
    for i in 0..n {
        if p[i] <= EIGEN_FLOOR {
            continue;
        }
        self_term += p[i] * p[i].ln();
        for j in 0..n {
            let w = p[i] * overlap[(i, j)].norm_sqr();
            if q[j] <= 0.0 {
                outside += w;
            }
            cross += w * q[j].max(EIGEN_FLOOR).ln();
        }
    }
    if outside > SUPPORT_TOL {
        return Err(Error::Support { weight: outside });
    }
    Ok(self_term - cross)
}

/// `F = Tr √(√ρ σ √ρ)`, with round-off above 1 clamped.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.require_same(sigma)?;
    let root = linalg::hermitian_function(rho.matrix().as_ref(), |x| x.max(0.0).sqrt())?;
    let inner: Mat<_> = &root * sigma.matrix() * &root;
    let inner = super::state::hermitize(&inner);
    let values = linalg::hermitian_eigenvalues(inner.as_ref())?;
    Ok(values.iter().map(|&v| v.max(0.0).sqrt()).sum::<f64>().min(1.0))
}

/// `S(ρ) = −Tr ρ ln ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let p = rho.eigenvalues()?;
    Ok(-p
        .iter()
        .filter(|&&x| x > EIGEN_FLOOR)
        .map(|&x| x * x.ln())
        .sum::<f64>())
}

/// `½ ‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.require_same(sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let values = linalg::hermitian_eigenvalues(diff.as_ref())?;
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Representation;
    use crate::spectrum::SpectrumId;
    use approx::assert_abs_diff_eq;
    use faer::c64;

    fn rep(n: usize) -> Representation {
        Representation::Eigenbasis {
            spectrum: SpectrumId(3),
            n_kept: n,
        }
    }

    #[test]
    fn classical_oracles() {
        let p = DensityMatrix::from_populations(rep(2), &[0.8, 0.2]).unwrap();
        let q = DensityMatrix::from_populations(rep(2), &[0.5, 0.5]).unwrap();
        let kl = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
        assert_abs_diff_eq!(relative_entropy(&p, &q).unwrap(), kl, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_entropy(&p, &q).unwrap(), 0.19274, epsilon = 1e-5);
        let bc = 0.4f64.sqrt() + 0.1f64.sqrt();
        assert_abs_diff_eq!(uhlmann_fidelity(&p, &q).unwrap(), bc, epsilon = 1e-12);
        assert_abs_diff_eq!(uhlmann_fidelity(&p, &q).unwrap(), 0.94868, epsilon = 1e-5);
        assert_abs_diff_eq!(trace_distance(&p, &q).unwrap(), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(
            von_neumann_entropy(&q).unwrap(),
            2.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn identities() {
        let m = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => c64::new(0.5, 0.0),
            (1, 1) => c64::new(0.3, 0.0),
            (2, 2) => c64::new(0.2, 0.0),
            (0, 1) => c64::new(0.1, 0.05),
            (1, 0) => c64::new(0.1, -0.05),
            _ => c64::new(0.0, 0.0),
        });
        let rho = DensityMatrix::new(rep(3), m).unwrap();
        assert_abs_diff_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(uhlmann_fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_pure_states() {
        let a = DensityMatrix::pure(rep(2), &[1.0, 1.0]).unwrap();
        let b = DensityMatrix::pure(rep(2), &[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(uhlmann_fidelity(&a, &b).unwrap(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
        let up = DensityMatrix::from_populations(rep(2), &[1.0, 0.0]).unwrap();
        let down = DensityMatrix::from_populations(rep(2), &[0.0, 1.0]).unwrap();
        assert!(matches!(relative_entropy(&up, &down), Err(Error::Support { .. })));
        // Small but positive reference weight gives a large finite value.
        let small = DensityMatrix::from_populations(rep(2), &[1e-10, 1.0]).unwrap();
        let d = relative_entropy(&up, &small).unwrap();
        assert_abs_diff_eq!(d, -(1e-10f64 / (1.0 + 1e-10)).ln(), epsilon = 1e-6);
    }

    #[test]
    fn representation_mismatch() {
        let a = DensityMatrix::from_populations(rep(2), &[0.5, 0.5]).unwrap();
        let b = DensityMatrix::from_populations(
            Representation::Eigenbasis {
                spectrum: SpectrumId(4),
                n_kept: 2,
            },
            &[0.5, 0.5],
        )
        .unwrap();
        assert!(uhlmann_fidelity(&a, &b).is_err());
    }
}
