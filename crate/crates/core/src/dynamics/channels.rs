use faer::Mat;

use super::{bose_occupation, spectral_rate, BathSpec};
use crate::error::invalid;
use crate::spectrum::{ecs_to_fock, SpectrumId};
use crate::{Result, Spectrum};

/// Transitions with gaps below this are treated as degenerate and skipped.
pub const DEGENERATE_GAP: f64 = 1e-9;

const ZERO_ENTRY: f64 = 1e-14;

/// Transition matrix elements between the lowest `n_kept` eigenstates.
#[derive(Debug, Clone)]
pub struct DressedChannelSet {
    pub spectrum_id: SpectrumId,
    pub n_kept: usize,
    /// Energies of the retained levels.
    pub energies: Vec<f64>,
    /// `⟨φ_j|(a† + a)|φ_k⟩`.
    pub s_boson: Mat<f64>,
    /// `⟨φ_j|(J₊ + J₋)|φ_k⟩` times the atomic scale factor.
    pub s_atom: Mat<f64>,
}

impl DressedChannelSet {
    /// `E_j − E_k`.
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        self.energies[j] - self.energies[k]
    }

    /// Rescales the atomic channel (default scale 1).
    pub fn with_atom_scale(mut self, scale: f64) -> Self {
        for j in 0..self.n_kept {
            for k in 0..self.n_kept {
                self.s_atom[(j, k)] *= scale;
            }
        }
        self
    }
}

/// Matrix elements of both system operators in the lowest `n_kept` levels,
/// evaluated in a Fock ⊗ spin space with the given cutoff.
pub fn build_channels(
    spectrum: &Spectrum,
    n_kept: usize,
    fock_cutoff: usize,
) -> Result<DressedChannelSet> {
    if n_kept == 0 || n_kept > spectrum.dim() {
        return Err(invalid(
            "n_kept",
            format!("must lie in 1..={}, got {n_kept}", spectrum.dim()),
        ));
    }
    let fock = ecs_to_fock(spectrum, 0..n_kept, fock_cutoff)?;
    let clean = |mut m: Mat<f64>| {
        for j in 0..n_kept {
            for k in 0..n_kept {
                if m[(j, k)].abs() < ZERO_ENTRY {
                    m[(j, k)] = 0.0;
                }
            }
        }
        m
    };
    let s_boson = clean(fock.space.quadrature().project(&fock.vectors));
    let s_atom = clean(fock.space.spin_flip().project(&fock.vectors));
    Ok(DressedChannelSet {
        spectrum_id: spectrum.id(),
        n_kept,
        energies: spectrum.energies[..n_kept].to_vec(),
        s_boson,
        s_atom,
    })
}

/// Classical rates of the Pauli part: `rate(k → j)` and total outflow per level.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n: usize,
    rates: Vec<f64>,
    outflow: Vec<f64>,
}

impl RateMatrix {
    pub fn new(channels: &DressedChannelSet, bath: &BathSpec) -> Result<Self> {
        bath.validate()?;
        let n = channels.n_kept;
        let mut rates = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..j {
                let gap = channels.gap(j, k);
                if gap < DEGENERATE_GAP {
                    continue;
                }
                let strength =
                    channels.s_boson[(j, k)].powi(2) + channels.s_atom[(j, k)].powi(2);
                if strength == 0.0 {
                    continue;
                }
                let g = spectral_rate(gap, bath) * strength;
                let occ = bose_occupation(gap, bath.temperature)?;
                rates[j * n + k] += g * occ;
                rates[k * n + j] += g * (1.0 + occ);
            }
        }
        let outflow = (0..n).map(|k| (0..n).map(|j| rates[j * n + k]).sum()).collect();
        Ok(RateMatrix { n, rates, outflow })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Rate of the transition `from → to`.
    pub fn rate(&self, to: usize, from: usize) -> f64 {
        self.rates[to * self.n + from]
    }

    pub fn outflow(&self, level: usize) -> f64 {
        self.outflow[level]
    }

    pub fn max_rate(&self) -> f64 {
        self.outflow.iter().copied().fold(0.0, f64::max)
    }

    /// `dp/dt` of the population vector.
    pub fn population_derivative(&self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let row = &self.rates[j * n..(j + 1) * n];
            let gain: f64 = row.iter().zip(p).map(|(r, q)| r * q).sum();
            out[j] = gain - self.outflow[j] * p[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{diagonalize, BasisConfig, FockSpace, ModelParams};

    fn dominant_photon_number(fock: &crate::spectrum::FockVectors, level: usize) -> usize {
        let space = fock.space;
        let mut weights = vec![0.0; space.fock_cutoff + 1];
        for mi in 0..=space.n_atoms {
            for (n, w) in weights.iter_mut().enumerate() {
                *w += fock.vectors[(space.index(mi, n), level)].powi(2);
            }
        }
        let (n, w) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!(*w > 1.0 - 1e-10);
        n
    }

    #[test]
    fn decoupled_selection_rule() {
        let p = ModelParams::new(1.0, 1.3, 0.0, 0.0, 2).unwrap();
        let b = BasisConfig {
            n_tr: 20,
            fock_cutoff: 30,
            ..BasisConfig::default()
        };
        let s = diagonalize(&p, &b).unwrap();
        let ch = build_channels(&s, 30, 30).unwrap();
        let fock = ecs_to_fock(&s, 0..30, 30).unwrap();
        let n: Vec<usize> = (0..30).map(|l| dominant_photon_number(&fock, l)).collect();
        for j in 0..30 {
            for k in 0..30 {
                if ch.s_boson[(j, k)] != 0.0 {
                    assert_eq!(n[j].abs_diff(n[k]), 1, "levels {j},{k}");
                }
            }
        }
    }

    #[test]
    fn parity_selection_and_symmetry() {
        let p = ModelParams::new(1.0, 1.0, 0.47, 0.0, 2).unwrap();
        let s = diagonalize(&p, &BasisConfig::default()).unwrap();
        let ch = build_channels(&s, 40, 120).unwrap();
        let fock = ecs_to_fock(&s, 0..40, 120).unwrap();
        let parity = FockSpace::new(120, 2).parity().project(&fock.vectors);
        for j in 0..40 {
            for k in 0..40 {
                assert!((ch.s_boson[(j, k)] - ch.s_boson[(k, j)]).abs() < 1e-10);
                assert!((ch.s_atom[(j, k)] - ch.s_atom[(k, j)]).abs() < 1e-10);
                let same = parity[(j, j)] * parity[(k, k)] > 0.0;
                if same {
                    assert!(ch.s_boson[(j, k)].abs() < 1e-8);
                } else {
                    assert!(ch.s_atom[(j, k)].abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn detailed_balance() {
        let p = ModelParams::new(1.0, 1.0, 0.47, 0.0, 2).unwrap();
        let s = diagonalize(&p, &BasisConfig::default()).unwrap();
        let ch = build_channels(&s, 40, 120).unwrap();
        let bath = BathSpec::ohmic(0.5).unwrap();
        let r = RateMatrix::new(&ch, &bath).unwrap();
        for j in 0..40 {
            for k in 0..j {
                let down = r.rate(k, j);
                if down > 1e-300 {
                    let ratio = r.rate(j, k) / down;
                    let expect = (-ch.gap(j, k) / 0.5).exp();
                    assert!((ratio - expect).abs() <= 1e-12 * expect, "{ratio} vs {expect}");
                }
            }
        }
    }
}
