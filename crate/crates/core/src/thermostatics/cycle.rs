use serde::Serialize;

use super::{boltzmann, classify_mode_with, critical_coupling, Mode, ModeConvention};
use crate::error::invalid;
use crate::spectrum::{diagonalize_with, SpectrumRequest};
use crate::{BasisConfig, Error, ModelParams, Result, Spectrum};

/// How the qubit splitting is chosen on each leg of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DeltaProtocol {
    /// `Δ = ω` on every leg and along every ramp.
    #[default]
    Resonant,
    /// A constant splitting.
    Fixed(f64),
}

impl DeltaProtocol {
    pub fn at(&self, omega: f64) -> f64 {
        match *self {
            DeltaProtocol::Resonant => omega,
            DeltaProtocol::Fixed(d) => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DeltaProtocol::Fixed(d) if !(d.is_finite() && d > 0.0) => {
                Err(invalid("delta", format!("must be positive, got {d}")))
            }
            _ => Ok(()),
        }
    }
}

/// Infinite-time Otto cycle between a hot leg `H(ω_h, U_2)` and a cold leg
/// `H(ω_c, U_4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasistaticCycleSpec {
    pub lambda: f64,
    pub delta: DeltaProtocol,
    pub n_atoms: usize,
    pub omega_h: f64,
    pub omega_c: f64,
    /// Stark strength on the hot leg (`U_2`).
    pub u_expansion: f64,
    /// Stark strength on the cold leg (`U_4`).
    pub u_compression: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    pub basis: BasisConfig,
}

impl QuasistaticCycleSpec {
    /// `ω_h = 2`, `ω_c = 1`, `T_h = 0.5`, `T_c = 0.1`, resonant splitting,
    /// symmetric Stark strength.
    pub fn standard(lambda: f64, u: f64, n_atoms: usize) -> Self {
        QuasistaticCycleSpec {
            lambda,
            delta: DeltaProtocol::Resonant,
            n_atoms,
            omega_h: 2.0,
            omega_c: 1.0,
            u_expansion: u,
            u_compression: u,
            t_hot: 0.5,
            t_cold: 0.1,
            basis: BasisConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c > 0.0 && self.omega_h > self.omega_c) {
            return Err(invalid(
                "omega_h",
                format!(
                    "requires omega_h > omega_c > 0, got {} and {}",
                    self.omega_h, self.omega_c
                ),
            ));
        }
        if !(self.t_cold > 0.0 && self.t_hot > self.t_cold) {
            return Err(invalid(
                "t_hot",
                format!(
                    "requires t_hot > t_cold > 0, got {} and {}",
                    self.t_hot, self.t_cold
                ),
            ));
        }
        self.delta.validate()?;
        self.basis.validate()?;
        self.hot_params()?;
        self.cold_params()?;
        Ok(())
    }

    pub fn hot_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.omega_h,
            self.delta.at(self.omega_h),
            self.lambda,
            self.u_expansion,
            self.n_atoms,
        )
    }

    pub fn cold_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.omega_c,
            self.delta.at(self.omega_c),
            self.lambda,
            self.u_compression,
            self.n_atoms,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasistaticReport {
    pub q_hot: f64,
    pub q_cold: f64,
    pub work: f64,
    /// `W / Q_h`, only when heat is absorbed from the hot bath.
    pub efficiency: Option<f64>,
    pub mode: Mode,
    /// Critical coupling of the cold leg at `T_c`, when defined.
    pub lambda_c_cold: Option<f64>,
    /// Both spectra passed their truncation certificate.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasistaticOptions {
    pub convention: ModeConvention,
    /// Run the truncation certificate on both spectra.
    pub certify: bool,
}

impl Default for QuasistaticOptions {
    fn default() -> Self {
        QuasistaticOptions {
            convention: ModeConvention::Standard,
            certify: true,
        }
    }
}

pub fn quasistatic_cycle(spec: &QuasistaticCycleSpec) -> Result<QuasistaticReport> {
    quasistatic_cycle_with(spec, &QuasistaticOptions::default())
}

pub fn quasistatic_cycle_with(
    spec: &QuasistaticCycleSpec,
    options: &QuasistaticOptions,
) -> Result<QuasistaticReport> {
    spec.validate()?;
    let request = SpectrumRequest {
        eigenvectors: false,
        certify: options.certify,
    };
    let hot = diagonalize_with(&spec.hot_params()?, &spec.basis, request)?;
    let cold = diagonalize_with(&spec.cold_params()?, &spec.basis, request)?;
    quasistatic_from_spectra(spec, &hot, &cold, options.convention)
}

/// Heat and work from already computed leg spectra, pairing levels by index:
/// `Q_h = Σ E^h_n (P^h_n − P^c_n)`, `Q_c = Σ E^c_n (P^c_n − P^h_n)`.
pub fn quasistatic_from_spectra(
    spec: &QuasistaticCycleSpec,
    hot: &Spectrum,
    cold: &Spectrum,
    convention: ModeConvention,
) -> Result<QuasistaticReport> {
    if hot.dim() != cold.dim() {
        return Err(Error::DimensionMismatch {
            hot: hot.dim(),
            cold: cold.dim(),
        });
    }
    let (p_hot, _) = boltzmann(&hot.energies, spec.t_hot);
    let (p_cold, _) = boltzmann(&cold.energies, spec.t_cold);
    let mut q_hot = 0.0;
    let mut q_cold = 0.0;
    for n in 0..hot.dim() {
        let dp = p_hot[n] - p_cold[n];
        q_hot += hot.energies[n] * dp;
        q_cold -= cold.energies[n] * dp;
    }
    let work = q_hot + q_cold;
    let scale = q_hot.abs().max(q_cold.abs()).max(1.0);
    let mode = classify_mode_with(q_hot, q_cold, work, convention, scale);
    let efficiency = (q_hot > 1e-12 * scale).then(|| work / q_hot);
    let lambda_c_cold = critical_coupling(
        spec.delta.at(spec.omega_c),
        spec.omega_c,
        spec.u_compression,
        spec.t_cold,
    )
    .ok();
    Ok(QuasistaticReport {
        q_hot,
        q_cold,
        work,
        efficiency,
        mode,
        lambda_c_cold,
        converged: hot.converged && cold.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(lambda: f64, u: f64) -> QuasistaticCycleSpec {
        let mut s = QuasistaticCycleSpec::standard(lambda, u, 2);
        s.basis.n_tr = 30;
        s.basis.fock_cutoff = 60;
        s
    }

    #[test]
    fn equal_temperatures() {
        let mut s = small(0.4, 0.2);
        let hot = crate::spectrum::diagonalize(&s.hot_params().unwrap(), &s.basis).unwrap();
        let cold = crate::spectrum::diagonalize(&s.cold_params().unwrap(), &s.basis).unwrap();
        s.t_cold = s.t_hot;
        // Same leg on both sides: identical populations, nothing exchanged.
        let r = quasistatic_from_spectra(&s, &hot, &hot, ModeConvention::Standard).unwrap();
        assert_eq!((r.q_hot, r.q_cold, r.work), (0.0, 0.0, 0.0));
        assert_eq!(r.mode, Mode::Idle);
        // Distinct legs, one temperature: no work can be extracted.
        let r = quasistatic_from_spectra(&s, &hot, &cold, ModeConvention::Standard).unwrap();
        assert!(r.work <= 1e-12);
        assert_ne!(r.mode, Mode::Engine);
    }

    #[test]
    fn first_law_identity() {
        let r = quasistatic_cycle(&small(0.3, 0.0)).unwrap();
        assert!((r.work - (r.q_hot + r.q_cold)).abs() <= 1e-12 * r.q_hot.abs().max(1.0));
        assert_eq!(r.mode, Mode::Engine);
        let eta = r.efficiency.unwrap();
        assert!(eta > 0.0 && eta <= 1.0 - 0.1 / 0.5 + 1e-9);
    }

    #[test]
    fn rejects_bad_spec() {
        let mut s = small(0.3, 0.0);
        s.t_cold = 0.6;
        assert!(quasistatic_cycle(&s).is_err());
        let mut s = small(0.3, 0.0);
        s.omega_h = 0.5;
        assert!(quasistatic_cycle(&s).is_err());
        let s = small(0.3, 1.2);
        assert!(quasistatic_cycle(&s).is_err());
    }
}
