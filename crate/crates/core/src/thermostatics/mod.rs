//! Quasistatic Otto-cycle thermodynamics from Gibbs populations.

mod cycle;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DensityMatrix, Representation};
use crate::error::invalid;
use crate::spectrum::SpectrumId;
use crate::{Error, Result, Spectrum};

pub use cycle::{
    quasistatic_cycle, quasistatic_cycle_with, quasistatic_from_spectra, DeltaProtocol,
    QuasistaticCycleSpec, QuasistaticOptions, QuasistaticReport,
};
pub use sweep::{sweep, SpectrumCache, SweepAxis, SweepGrid, SweepRow};

/// Canonical populations of one spectrum.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub spectrum_id: SpectrumId,
    pub temperature: f64,
    pub populations: Vec<f64>,
    /// `ln Z`.
    pub partition_log: f64,
}

impl GibbsState {
    /// Diagonal state over the lowest `n_kept` levels, renormalized.
    pub fn density_matrix(&self, n_kept: usize) -> Result<DensityMatrix> {
        if n_kept == 0 || n_kept > self.populations.len() {
            return Err(invalid(
                "n_kept",
                format!("must lie in 1..={}, got {n_kept}", self.populations.len()),
            ));
        }
        DensityMatrix::from_populations(
            Representation::Eigenbasis {
                spectrum: self.spectrum_id,
                n_kept,
            },
            &self.populations[..n_kept],
        )
    }
}

/// `P_n = e^{−(E_n − E_0)/T} / Σ_m e^{−(E_m − E_0)/T}`.
pub fn gibbs(spectrum: &Spectrum, temperature: f64) -> Result<GibbsState> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(invalid(
            "temperature",
            format!("must be positive, got {temperature}"),
        ));
    }
    if !spectrum.converged {
        log::warn!("Gibbs state built from an uncertified spectrum");
    }
    let (populations, ln_z) = boltzmann(&spectrum.energies, temperature);
    Ok(GibbsState {
        spectrum_id: spectrum.id(),
        temperature,
        populations,
        partition_log: ln_z,
    })
}

/// Ground-shifted Boltzmann weights and `ln Z` for ascending energies.
pub(crate) fn boltzmann(energies: &[f64], temperature: f64) -> (Vec<f64>, f64) {
    let e0 = energies[0];
    let mut w: Vec<f64> = energies
        .iter()
        .map(|e| (-(e - e0) / temperature).exp())
        .collect();
    let z: f64 = w.iter().sum();
    for x in &mut w {
        *x /= z;
    }
    (w, -e0 / temperature + z.ln())
}

/// Finite-temperature critical coupling
/// `λ_c = √{(Δ/4)[ω / tanh(Δ/2T) − U/2]}`.
pub fn critical_coupling(delta: f64, omega: f64, u: f64, temperature: f64) -> Result<f64> {
    if !(delta > 0.0 && omega > 0.0 && temperature > 0.0) {
        return Err(Error::Domain {
            what: "critical_coupling",
            detail: "delta, omega and temperature must be positive".to_string(),
        });
    }
    let radicand = delta / 4.0 * (omega / (delta / (2.0 * temperature)).tanh() - u / 2.0);
    if radicand.abs() <= 1e-15 {
        return Ok(0.0);
    }
    if radicand < 0.0 {
        return Err(Error::Domain {
            what: "critical_coupling",
            detail: format!("negative radicand {radicand:.3e}: Stark strength {u} too large"),
        });
    }
    Ok(radicand.sqrt())
}

/// Operating regime of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Engine,
    Refrigerator,
    Heater,
    Accelerator,
    Idle,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Engine => "engine",
            Mode::Refrigerator => "refrigerator",
            Mode::Heater => "heater",
            Mode::Accelerator => "accelerator",
            Mode::Idle => "idle",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign table used for the refrigerator.
///
/// `Standard` requires `W < 0`, consistent with `W = Q_h + Q_c`. `Literal`
/// follows the literal table with `W > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeConvention {
    #[default]
    Standard,
    Literal,
}

/// Classification with the standard convention and unit energy scale.
pub fn classify_mode(q_hot: f64, q_cold: f64, work: f64) -> Mode {
    classify_mode_with(q_hot, q_cold, work, ModeConvention::Standard, 1.0)
}

/// Values within `1e-12 · scale` of zero count as zero, which maps to `Idle`.
pub fn classify_mode_with(
    q_hot: f64,
    q_cold: f64,
    work: f64,
    convention: ModeConvention,
    scale: f64,
) -> Mode {
    let eps = 1e-12 * scale.abs().max(f64::MIN_POSITIVE);
    let sign = |x: f64| {
        if x > eps {
            1
        } else if x < -eps {
            -1
        } else {
            0
        }
    };
    let refrigerator_work = match convention {
        ModeConvention::Standard => -1,
        ModeConvention::Literal => 1,
    };
    match (sign(q_hot), sign(q_cold), sign(work)) {
        (1, -1, 1) => Mode::Engine,
        (-1, 1, w) if w == refrigerator_work => Mode::Refrigerator,
        (-1, -1, -1) => Mode::Heater,
        (1, -1, -1) => Mode::Accelerator,
        _ => Mode::Idle,
    }
}
