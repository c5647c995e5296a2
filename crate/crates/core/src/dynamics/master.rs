use faer::{c64, Mat};

use super::channels::{DressedChannelSet, RateMatrix};
use super::state::{DensityMatrix, Representation};
use super::BathSpec;
use crate::error::invalid;
use crate::spectrum::SpectrumId;
use crate::{Error, Result};

const POSITIVITY_TOL: f64 = 1e-9;

/// Dressed master-equation generator for one bath.
#[derive(Debug, Clone)]
pub struct Generator {
    spectrum_id: SpectrumId,
    energies: Vec<f64>,
    rates: RateMatrix,
}

impl Generator {
    pub fn new(channels: &DressedChannelSet, bath: &BathSpec) -> Result<Self> {
        Ok(Generator {
            spectrum_id: channels.spectrum_id,
            energies: channels.energies.clone(),
            rates: RateMatrix::new(channels, bath)?,
        })
    }

    pub fn rates(&self) -> &RateMatrix {
        &self.rates
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn representation(&self) -> Representation {
        Representation::Eigenbasis {
            spectrum: self.spectrum_id,
            n_kept: self.energies.len(),
        }
    }

    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.representation() != self.representation() {
            return Err(Error::RepresentationMismatch(format!(
                "state in {:?}, generator in {:?}",
                rho.representation(),
                self.representation()
            )));
        }
        Ok(())
    }

    /// `dρ/dt`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<Mat<c64>> {
        self.check(rho)?;
        let n = self.energies.len();
        let m = rho.matrix();
        let mut out = Mat::from_fn(n, n, |a, b| {
            let decay = -0.5 * (self.rates.outflow(a) + self.rates.outflow(b));
            let phase = c64::new(0.0, -(self.energies[a] - self.energies[b]));
            m[(a, b)] * (phase + decay)
        });
        let p = rho.populations();
        let mut dp = vec![0.0; n];
        self.rates.population_derivative(&p, &mut dp);
        for a in 0..n {
            out[(a, a)] = c64::new(dp[a], 0.0);
        }
        Ok(out)
    }

    /// Fixed-step RK4 over `[0, tau]`.
    ///
    /// Integration happens in the interaction picture, where only the
    /// dissipative part remains; the coherent phases are applied exactly at
    /// the end. Populations and coherences decouple, so each coherence picks
    /// up the RK4 amplification factor of its own decay rate once per step.
    pub fn evolve(&self, rho0: &DensityMatrix, tau: f64, dt: f64) -> Result<IsochoricTrajectory> {
        self.check(rho0)?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(invalid("tau", format!("must be non-negative, got {tau}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let n = self.energies.len();
        let steps = if tau == 0.0 { 0 } else { (tau / dt).ceil() as usize };
        let h = if steps == 0 { 0.0 } else { tau / steps as f64 };

        let mut p = rho0.populations();
        let energy = |p: &[f64]| self.energies.iter().zip(p).map(|(e, q)| e * q).sum::<f64>();
        let mut times = Vec::with_capacity(steps + 1);
        let mut energies = Vec::with_capacity(steps + 1);
        times.push(0.0);
        energies.push(energy(&p));

        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        for step in 1..=steps {
            self.rates.population_derivative(&p, &mut k1);
            axpy(&p, 0.5 * h, &k1, &mut tmp);
            self.rates.population_derivative(&tmp, &mut k2);
            axpy(&p, 0.5 * h, &k2, &mut tmp);
            self.rates.population_derivative(&tmp, &mut k3);
            axpy(&p, h, &k3, &mut tmp);
            self.rates.population_derivative(&tmp, &mut k4);
            for i in 0..n {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let t = step as f64 * h;
            if let Some(&min) = p.iter().min_by(|a, b| a.total_cmp(b)) {
                if min < -POSITIVITY_TOL {
                    return Err(Error::Positivity {
                        time: t,
                        min_eigenvalue: min,
                        dt: h,
                    });
                }
            }
            times.push(t);
            energies.push(energy(&p));
        }

        let m0 = rho0.matrix();
        let mut m = Mat::from_fn(n, n, |a, b| {
            if a == b {
                return c64::new(p[a], 0.0);
            }
            let z = -0.5 * (self.rates.outflow(a) + self.rates.outflow(b)) * h;
            let amp = 1.0 + z * (1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0)));
            let angle = -(self.energies[a] - self.energies[b]) * tau;
            m0[(a, b)] * amp.powi(steps as i32) * c64::new(angle.cos(), angle.sin())
        });
        // Exact Hermitian symmetry of the off-diagonal part.
        for a in 0..n {
            for b in (a + 1)..n {
                m[(b, a)] = m[(a, b)].conj();
            }
        }
        let final_state = DensityMatrix::new(rho0.representation(), m).map_err(|e| match e {
            Error::InvalidState(_) => Error::Positivity {
                time: tau,
                min_eigenvalue: f64::NAN,
                dt: h,
            },
            other => other,
        })?;
        Ok(IsochoricTrajectory {
            times,
            energies,
            final_state,
        })
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = x[i] + a * y[i];
    }
}

/// Energies `Tr(Hρ(t))` along an isochoric stroke and the final state.
#[derive(Debug, Clone)]
pub struct IsochoricTrajectory {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub final_state: DensityMatrix,
}

impl IsochoricTrajectory {
    /// `Tr(Hρ(τ)) − Tr(Hρ(0))`.
    pub fn heat(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }
}

/// Instantaneous `dρ/dt` under the dressed master equation.
pub fn generator_apply(
    rho: &DensityMatrix,
    channels: &DressedChannelSet,
    bath: &BathSpec,
) -> Result<Mat<c64>> {
    Generator::new(channels, bath)?.apply(rho)
}

/// Isochoric stroke of duration `tau` against a single bath.
pub fn evolve_isochoric(
    rho0: &DensityMatrix,
    channels: &DressedChannelSet,
    bath: &BathSpec,
    tau: f64,
    dt: f64,
) -> Result<IsochoricTrajectory> {
    Generator::new(channels, bath)?.evolve(rho0, tau, dt)
}
