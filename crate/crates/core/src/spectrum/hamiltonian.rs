use faer::Mat;

use super::{overlap_table, BasisConfig, ModelParams};
use crate::{linalg, Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Hamiltonian matrix in the ECS basis, ordered `(m + j)(n_tr + 1) + k`.
///
/// Inside a sector the boson part is `ω(A_m†A_m − g_m²)`. Between sectors the
/// `(J₊ + J₋)` terms need `⟨l|_{A_{m'}}|k⟩_{A_m}` and the matrix of `a†a`,
/// which in the sector-`m` ladder is
/// `A_m†A_m − g_m(A_m + A_m†) + g_m²`. Both off-diagonal blocks are assembled
/// independently; a mismatch means an indexing or sign bug.
pub fn build_hamiltonian_ecs(params: &ModelParams, basis: &BasisConfig) -> Result<Mat<f64>> {
    params.validate()?;
    basis.validate()?;
    let n = params.n_atoms;
    let nk = basis.n_tr + 1;
    let dim = (n + 1) * nk;
    let big_g = params.sector_shift();
    let half_delta = params.delta / 2.0;
    let stark = params.u / (2.0 * n as f64);

    let mut h = Mat::<f64>::zeros(dim, dim);
    for mi in 0..=n {
        let g = params.displacement(mi);
        for k in 0..nk {
            h[(mi * nk + k, mi * nk + k)] = params.omega * (k as f64 - g * g);
        }
    }

    // One extra ket column so that a†a can act on the last ladder state.
    let up = overlap_table(nk, nk + 1, -big_g);
    let down = overlap_table(nk, nk + 1, big_g);
    let element = |o: &Mat<f64>, g: f64, l: usize, k: usize| -> f64 {
        let kf = k as f64;
        let mut number = (kf + g * g) * o[(l, k)] - g * (kf + 1.0).sqrt() * o[(l, k + 1)];
        if k > 0 {
            number -= g * kf.sqrt() * o[(l, k - 1)];
        }
        half_delta * o[(l, k)] + stark * number
    };

    for mi in 0..n {
        let c = -params.raising(mi);
        let g_lo = params.displacement(mi);
        let g_hi = params.displacement(mi + 1);
        for l in 0..nk {
            for k in 0..nk {
                // ⟨l, m+1| H |k, m⟩
                h[((mi + 1) * nk + l, mi * nk + k)] = c * element(&up, g_lo, l, k);
                // ⟨l, m| H |k, m+1⟩
                h[(mi * nk + l, (mi + 1) * nk + k)] = c * element(&down, g_hi, l, k);
            }
        }
    }

    let scale = linalg::max_abs(h.as_ref());
    let asym = linalg::asymmetry(h.as_ref());
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::BasisAssembly {
            asymmetry: asym,
            scale,
            tolerance: SYMMETRY_TOL,
        });
    }
    for j in 0..dim {
        for i in (j + 1)..dim {
            let avg = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = avg;
            h[(j, i)] = avg;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_blocks_agree() {
        for &(lambda, u, n) in &[(0.47, 0.0, 2), (0.68, -0.9, 2), (0.3, 0.5, 5), (1.2, 0.9, 8)] {
            let p = ModelParams::new(1.0, 1.0, lambda, u, n).unwrap();
            let b = BasisConfig::default();
            build_hamiltonian_ecs(&p, &b).unwrap();
        }
    }

    #[test]
    fn stark_free_diagonal_blocks() {
        let p = ModelParams::new(1.5, 0.7, 0.4, 0.0, 3).unwrap();
        let b = BasisConfig {
            n_tr: 8,
            fock_cutoff: 8,
            ..BasisConfig::default()
        };
        let h = build_hamiltonian_ecs(&p, &b).unwrap();
        let g = p.displacement(0);
        assert!((h[(2, 2)] - 1.5 * (2.0 - g * g)).abs() < 1e-14);
        // No coupling between sectors two apart.
        assert_eq!(h[(0, 2 * 9)], 0.0);
    }
}
