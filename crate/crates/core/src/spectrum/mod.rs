//! Rotated Dicke–Stark Hamiltonian in the extended coherent-state basis.
//!
//! In the rotated frame the model reads
//! `H = ω a†a − (Δ/2 + U a†a/(2N)) (J₊ + J₋) + (2λ/√N)(a† + a) J_z`,
//! so each `J_z = m` sector is a displaced oscillator with displacement
//! `g_m = 2λm/(ω√N)`. The basis index is `(m + j)(n_tr + 1) + k`.

mod fock;
mod hamiltonian;
mod overlap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{linalg, Error, Result};

pub use fock::{ecs_to_fock, FockHamiltonian, FockSpace, FockVectors, SparseMatrix};
pub use hamiltonian::build_hamiltonian_ecs;
pub use overlap::{displaced_overlap, ln_factorial, overlap_table};

/// One point in `(ω, Δ, λ, U, N)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta: f64,
    pub lambda: f64,
    pub u: f64,
    pub n_atoms: usize,
}

impl ModelParams {
    pub fn new(omega: f64, delta: f64, lambda: f64, u: f64, n_atoms: usize) -> Result<Self> {
        let p = ModelParams {
            omega,
            delta,
            lambda,
            u,
            n_atoms,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(invalid("omega", format!("must be positive, got {}", self.omega)));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite".to_string()));
        }
        if !(self.u.is_finite() && self.u.abs() < self.omega) {
            return Err(invalid(
                "u",
                format!("requires |u| < omega = {}, got {}", self.omega, self.u),
            ));
        }
        if self.n_atoms == 0 {
            return Err(invalid("n_atoms", "must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Copy with a new boson frequency, revalidated.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        let p = ModelParams { omega, ..*self };
        p.validate()?;
        Ok(p)
    }

    /// Total spin `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// `J_z` eigenvalue of sector `mi` (`mi = 0..=N`).
    pub fn m_of(&self, mi: usize) -> f64 {
        mi as f64 - self.j()
    }

    /// Displacement `g_m` of sector `mi`.
    pub fn displacement(&self, mi: usize) -> f64 {
        self.sector_shift() * self.m_of(mi)
    }

    /// `G = g_{m+1} − g_m`.
    pub fn sector_shift(&self) -> f64 {
        2.0 * self.lambda / (self.omega * (self.n_atoms as f64).sqrt())
    }

    /// `j⁺_m = √(j(j+1) − m(m+1))`.
    pub fn raising(&self, mi: usize) -> f64 {
        let j = self.j();
        let m = self.m_of(mi);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

/// Truncation and convergence settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub n_tr: usize,
    pub fock_cutoff: usize,
    pub convergence_rel_tol: f64,
    pub n_levels_checked: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig {
            n_tr: 60,
            fock_cutoff: 120,
            convergence_rel_tol: 1e-4,
            n_levels_checked: 20,
        }
    }
}

impl BasisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tr < 1 {
            return Err(invalid("n_tr", "must be at least 1".to_string()));
        }
        if self.fock_cutoff < self.n_tr {
            return Err(invalid(
                "fock_cutoff",
                format!("must be at least n_tr = {}, got {}", self.n_tr, self.fock_cutoff),
            ));
        }
        if !(self.convergence_rel_tol.is_finite() && self.convergence_rel_tol > 0.0) {
            return Err(invalid("convergence_rel_tol", "must be positive".to_string()));
        }
        Ok(())
    }

    pub fn dim(&self, n_atoms: usize) -> usize {
        (n_atoms + 1) * (self.n_tr + 1)
    }
}

/// Stable fingerprint of the inputs a spectrum was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpectrumId(pub u64);

impl SpectrumId {
    pub fn of(params: &ModelParams, basis: &BasisConfig) -> Self {
        // FNV-1a over the exact bit patterns.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(params.omega.to_bits());
        eat(params.delta.to_bits());
        eat(params.lambda.to_bits());
        eat(params.u.to_bits());
        eat(params.n_atoms as u64);
        eat(basis.n_tr as u64);
        eat(basis.fock_cutoff as u64);
        SpectrumId(h)
    }
}

impl std::fmt::Display for SpectrumId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Default number of levels handed to the dynamics.
pub const DEFAULT_N_KEPT: usize = 40;

/// Ascending eigenpairs of one Hamiltonian plus a truncation certificate.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub params: ModelParams,
    pub basis: BasisConfig,
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in the ECS basis; absent for energy-only runs.
    pub eigvecs_ecs: Option<Mat<f64>>,
    pub converged: bool,
    /// Largest relative move of the checked levels under `n_tr → n_tr + 10`.
    pub max_level_shift: f64,
    pub n_kept: usize,
    id: SpectrumId,
}

impl Spectrum {
    pub fn id(&self) -> SpectrumId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn eigvecs(&self) -> Result<&Mat<f64>> {
        self.eigvecs_ecs.as_ref().ok_or_else(|| {
            Error::InvalidState("spectrum was computed without eigenvectors".to_string())
        })
    }

    pub fn with_n_kept(mut self, n_kept: usize) -> Result<Self> {
        if n_kept == 0 || n_kept > self.dim() {
            return Err(invalid(
                "n_kept",
                format!("must lie in 1..={}, got {n_kept}", self.dim()),
            ));
        }
        self.n_kept = n_kept;
        Ok(self)
    }
}

/// What `diagonalize_with` should compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumRequest {
    pub eigenvectors: bool,
    pub certify: bool,
}

impl Default for SpectrumRequest {
    fn default() -> Self {
        SpectrumRequest {
            eigenvectors: true,
            certify: true,
        }
    }
}

/// Full eigendecomposition with convergence certificate.
pub fn diagonalize(params: &ModelParams, basis: &BasisConfig) -> Result<Spectrum> {
    diagonalize_with(params, basis, SpectrumRequest::default())
}

pub fn diagonalize_with(
    params: &ModelParams,
    basis: &BasisConfig,
    request: SpectrumRequest,
) -> Result<Spectrum> {
    let h = build_hamiltonian_ecs(params, basis)?;
    let (energies, vecs) = if request.eigenvectors {
        let (e, v) = linalg::symmetric_eigen(h.as_ref())?;
        check_residuals(&h, &e, &v, basis.n_levels_checked)?;
        (e, Some(v))
    } else {
        (linalg::symmetric_eigenvalues(h.as_ref())?, None)
    };

    let (converged, max_level_shift) = if request.certify {
        certify(params, basis, &energies)?
    } else {
        (false, f64::NAN)
    };
    if request.certify && !converged {
        log::warn!(
            "spectrum at {params:?} not converged with n_tr = {} (level shift {max_level_shift:.3e})",
            basis.n_tr
        );
    }

    let n_kept = DEFAULT_N_KEPT.min(energies.len());
    Ok(Spectrum {
        params: *params,
        basis: *basis,
        energies,
        eigvecs_ecs: vecs,
        converged,
        max_level_shift,
        n_kept,
        id: SpectrumId::of(params, basis),
    })
}

fn check_residuals(h: &Mat<f64>, energies: &[f64], vecs: &Mat<f64>, levels: usize) -> Result<()> {
    let n = h.nrows();
    for lvl in 0..levels.min(n) {
        let v = vecs.col(lvl);
        let hv = h * v;
        let mut r2 = 0.0;
        for i in 0..n {
            r2 += (hv[i] - energies[lvl] * v[i]).powi(2);
        }
        if r2.sqrt() > 1e-8 * energies[lvl].abs().max(1.0) {
            return Err(Error::Eigensolver {
                dim: n,
                detail: Some(format!("residual {:.3e} at level {lvl}", r2.sqrt())),
            });
        }
    }
    Ok(())
}

fn certify(params: &ModelParams, basis: &BasisConfig, energies: &[f64]) -> Result<(bool, f64)> {
    let bigger = BasisConfig {
        n_tr: basis.n_tr + 10,
        fock_cutoff: basis.fock_cutoff.max(basis.n_tr + 10),
        ..*basis
    };
    let h = build_hamiltonian_ecs(params, &bigger)?;
    let reference = linalg::symmetric_eigenvalues(h.as_ref())?;
    let checked = basis.n_levels_checked.min(energies.len());
    let shift = level_shift(&energies[..checked], &reference[..checked]);
    Ok((shift < basis.convergence_rel_tol, shift))
}

/// Largest `|a − b| / max(|b|, 1)` over paired levels.
pub fn level_shift(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
