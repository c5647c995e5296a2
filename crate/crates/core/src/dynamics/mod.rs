//! Dressed Lindblad dynamics in the eigenbasis of a static Hamiltonian.
//!
//! Jump operators `|φ_j⟩⟨φ_k|` connect exact eigenstates with rates set by an
//! Ohmic spectral function at the transition gap. For a single bath the
//! generator is of Pauli form: populations obey a classical rate equation and
//! each coherence precesses and decays on its own.

mod channels;
mod functionals;
mod master;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Error, Result};

pub use channels::{build_channels, DressedChannelSet, RateMatrix, DEGENERATE_GAP};
pub use functionals::{relative_entropy, trace_distance, uhlmann_fidelity, von_neumann_entropy};
pub use master::{evolve_isochoric, generator_apply, Generator, IsochoricTrajectory};
pub use state::{DensityMatrix, Representation};

/// Ohmic reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub alpha: f64,
    pub omega_cut: f64,
    pub temperature: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.001;
pub const DEFAULT_OMEGA_CUT: f64 = 10.0;

impl BathSpec {
    pub fn new(alpha: f64, omega_cut: f64, temperature: f64) -> Result<Self> {
        let b = BathSpec {
            alpha,
            omega_cut,
            temperature,
        };
        b.validate()?;
        Ok(b)
    }

    /// Default coupling and cutoff at the given temperature.
    pub fn ohmic(temperature: f64) -> Result<Self> {
        Self::new(DEFAULT_ALPHA, DEFAULT_OMEGA_CUT, temperature)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.omega_cut.is_finite() && self.omega_cut > 0.0) {
            return Err(invalid(
                "omega_cut",
                format!("must be positive, got {}", self.omega_cut),
            ));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(invalid(
                "temperature",
                format!("must be positive, got {}", self.temperature),
            ));
        }
        Ok(())
    }
}

/// `γ(Δ) = π α Δ e^{−Δ/ω_cut}`; zero for non-positive gaps.
pub fn spectral_rate(gap: f64, bath: &BathSpec) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    std::f64::consts::PI * bath.alpha * gap * (-gap / bath.omega_cut).exp()
}

/// Bose–Einstein occupation `1/(e^{Δ/T} − 1)`.
pub fn bose_occupation(gap: f64, temperature: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::Domain {
            what: "bose_occupation",
            detail: format!("gap must be positive, got {gap}"),
        });
    }
    if !(temperature > 0.0) {
        return Err(Error::Domain {
            what: "bose_occupation",
            detail: format!("temperature must be positive, got {temperature}"),
        });
    }
    let x = gap / temperature;
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}
