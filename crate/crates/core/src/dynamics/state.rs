use faer::{c64, Mat};

use crate::spectrum::{FockSpace, FockVectors, SpectrumId};
use crate::{linalg, Error, Result};

const HERMITICITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-9;

/// Basis in which a density matrix is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Lowest `n_kept` eigenstates of a spectrum.
    Eigenbasis { spectrum: SpectrumId, n_kept: usize },
    /// Truncated bare Fock ⊗ spin space.
    Fock { fock_cutoff: usize, n_atoms: usize },
}

impl Representation {
    pub fn dim(&self) -> usize {
        match *self {
            Representation::Eigenbasis { n_kept, .. } => n_kept,
            Representation::Fock {
                fock_cutoff,
                n_atoms,
            } => FockSpace::new(fock_cutoff, n_atoms).dim(),
        }
    }

    pub fn of_space(space: &FockSpace) -> Self {
        Representation::Fock {
            fock_cutoff: space.fock_cutoff,
            n_atoms: space.n_atoms,
        }
    }
}

/// Hermitian, positive, unit-trace matrix in a declared representation.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    representation: Representation,
    matrix: Mat<c64>,
}

impl DensityMatrix {
    /// Validates and, when the violation is within tolerance, repairs the
    /// matrix: it is Hermitized, small negative eigenvalues are clipped and
    /// the trace is renormalized.
    pub fn new(representation: Representation, matrix: Mat<c64>) -> Result<Self> {
        let n = representation.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::RepresentationMismatch(format!(
                "{}x{} matrix for a representation of dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::all_finite(matrix.as_ref()) {
            return Err(Error::InvalidState("non-finite entries".to_string()));
        }
        let scale = linalg::max_abs_complex(matrix.as_ref()).max(1.0);
        let herm = linalg::anti_hermiticity(matrix.as_ref());
        if herm > HERMITICITY_TOL * scale {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = linalg::trace(matrix.as_ref());
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let mut m = hermitize(&matrix);
        let (values, vecs) = linalg::hermitian_eigen(m.as_ref())?;
        let min = values.first().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e}")));
        }
        if min < 0.0 {
            let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let scaled = Mat::from_fn(n, n, |i, j| vecs[(i, j)] * (clipped[j] / total));
            m = hermitize(&(&scaled * vecs.adjoint()));
        } else if tr.re != 1.0 {
            let inv = 1.0 / tr.re;
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] *= inv;
                }
            }
        }
        Ok(DensityMatrix {
            representation,
            matrix: m,
        })
    }

    /// Diagonal state with the given populations (normalized here).
    pub fn from_populations(representation: Representation, populations: &[f64]) -> Result<Self> {
        let total: f64 = populations.iter().sum();
        if populations.iter().any(|&p| !(p >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidState(
                "populations must be non-negative with positive sum".to_string(),
            ));
        }
        let n = populations.len();
        let m = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(populations[i] / total, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        DensityMatrix::new(representation, m)
    }

    /// `|ψ⟩⟨ψ|` for a (renormalized) real vector.
    pub fn pure(representation: Representation, psi: &[f64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero vector".to_string()));
        }
        let n = psi.len();
        let m = Mat::from_fn(n, n, |i, j| c64::new(psi[i] * psi[j] / (norm * norm), 0.0));
        DensityMatrix::new(representation, m)
    }

    /// Trace-renormalizes first; used after representation changes that leak
    /// a little weight out of the target space.
    pub fn renormalized(representation: Representation, matrix: Mat<c64>) -> Result<(Self, f64)> {
        let tr = linalg::trace(matrix.as_ref()).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        let n = matrix.nrows();
        let m = Mat::from_fn(n, n, |i, j| matrix[(i, j)] / tr);
        Ok((DensityMatrix::new(representation, m)?, 1.0 - tr))
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(self.matrix.as_ref(), self.matrix.as_ref()).re
    }

    /// `Σ_a E_a ρ_aa`, the energy of an eigenbasis state.
    pub fn diagonal_expectation(&self, energies: &[f64]) -> f64 {
        energies
            .iter()
            .enumerate()
            .map(|(a, e)| e * self.matrix[(a, a)].re)
            .sum()
    }

    /// `Tr(O ρ)` for a real operator written in the same basis.
    pub fn expectation(&self, op: &Mat<f64>) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += op[(i, k)] * self.matrix[(k, i)].re;
            }
        }
        acc
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.matrix.as_ref())
    }

    pub(crate) fn require_same(&self, other: &DensityMatrix) -> Result<()> {
        if self.representation != other.representation {
            return Err(Error::RepresentationMismatch(format!(
                "{:?} vs {:?}",
                self.representation, other.representation
            )));
        }
        Ok(())
    }

    /// `V ρ Vᵀ`: from the eigenbasis spanned by `vectors` into their Fock space.
    pub fn to_fock(&self, vectors: &FockVectors) -> Result<DensityMatrix> {
        let k = vectors.vectors.ncols();
        match self.representation {
            Representation::Eigenbasis { n_kept, .. } if n_kept == k && vectors.levels.start == 0 => {}
            other => {
                return Err(Error::RepresentationMismatch(format!(
                    "cannot lift {other:?} with {k} Fock vectors"
                )))
            }
        }
        let v = linalg::to_complex(vectors.vectors.as_ref());
        let m = hermitize(&(&v * &self.matrix * v.transpose()));
        let (rho, _) = DensityMatrix::renormalized(Representation::of_space(&vectors.space), m)?;
        Ok(rho)
    }

    /// `Vᵀ ρ V`, renormalized; also returns the weight lost outside the span.
    pub fn to_eigenbasis(
        &self,
        vectors: &FockVectors,
        spectrum: SpectrumId,
    ) -> Result<(DensityMatrix, f64)> {
        if self.representation != Representation::of_space(&vectors.space) || vectors.levels.start != 0 {
            return Err(Error::RepresentationMismatch(format!(
                "state in {:?}, vectors in {:?}",
                self.representation, vectors.space
            )));
        }
        let v = linalg::to_complex(vectors.vectors.as_ref());
        let m = hermitize(&(v.transpose() * &self.matrix * &v));
        DensityMatrix::renormalized(
            Representation::Eigenbasis {
                spectrum,
                n_kept: vectors.vectors.ncols(),
            },
            m,
        )
    }
}

pub(crate) fn hermitize(m: &Mat<c64>) -> Mat<c64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(n: usize) -> Representation {
        Representation::Eigenbasis {
            spectrum: SpectrumId(7),
            n_kept: n,
        }
    }

    #[test]
    fn rejects_invalid_matrices() {
        let bad_trace = Mat::from_fn(2, 2, |i, j| c64::new(if i == j { 0.7 } else { 0.0 }, 0.0));
        assert!(DensityMatrix::new(rep(2), bad_trace).is_err());
        let negative = Mat::from_fn(2, 2, |i, j| {
            c64::new(if i == j { [1.5, -0.5][i] } else { 0.0 }, 0.0)
        });
        assert!(DensityMatrix::new(rep(2), negative).is_err());
        let non_herm = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c64::new(0.1, 0.0),
            (i, j) if i == j => c64::new(0.5, 0.0),
            _ => c64::new(0.0, 0.0),
        });
        assert!(DensityMatrix::new(rep(2), non_herm).is_err());
        assert!(DensityMatrix::new(rep(3), Mat::identity(2, 2)).is_err());
    }

    #[test]
    fn clips_tiny_negative_eigenvalues() {
        let m = Mat::from_fn(2, 2, |i, j| {
            c64::new(if i == j { [1.0 + 5e-10, -5e-10][i] } else { 0.0 }, 0.0)
        });
        let rho = DensityMatrix::new(rep(2), m).unwrap();
        let ev = rho.eigenvalues().unwrap();
        assert!(ev[0] >= 0.0);
        assert!((rho.populations().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_state_purity() {
        let rho = DensityMatrix::pure(rep(3), &[1.0, 2.0, 2.0]).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::from_populations(rep(3), &[1.0, 1.0, 2.0]).unwrap();
        assert!((mixed.purity() - 0.375).abs() < 1e-14);
    }
}
