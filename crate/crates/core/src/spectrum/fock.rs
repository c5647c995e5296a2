//! Bare Fock ⊗ spin representation, ordered `(m + j)(cutoff + 1) + n`.

use std::ops::Range;

use faer::Mat;

use super::{overlap_table, Spectrum};
use crate::error::invalid;
use crate::{Error, Result};

/// Vectors losing more norm than this are flagged.
pub const DEFICIENCY_FLAG: f64 = 1e-6;
/// Vectors losing more norm than this are rejected.
pub const DEFICIENCY_LIMIT: f64 = 1e-3;

/// Real sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.vals.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut triplets = Vec::with_capacity(self.vals.len());
        for (r, c, v) in self.iter() {
            if v != 0.0 {
                triplets.push((r, c, v));
            }
        }
        *self = SparseMatrix::from_triplets(self.dim, triplets);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p], self.vals[p]))
        })
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| {
                let (c, v) = self.row(r);
                c.iter().zip(v).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// `Σ coeff_i M_i` over matrices of equal dimension.
    pub fn combine(terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
        let dim = terms.first().map_or(0, |t| t.1.dim);
        let mut triplets = Vec::new();
        for &(w, m) in terms {
            assert_eq!(m.dim, dim, "dimension mismatch in sparse combination");
            if w != 0.0 {
                triplets.extend(m.iter().map(|(r, c, v)| (r, c, w * v)));
            }
        }
        SparseMatrix::from_triplets(dim, triplets)
    }

    /// `Vᵀ M V` for a dense block `V`.
    pub fn project(&self, v: &Mat<f64>) -> Mat<f64> {
        let k = v.ncols();
        let mut mv = Mat::<f64>::zeros(self.dim, k);
        for r in 0..self.dim {
            let (cs, vs) = self.row(r);
            for j in 0..k {
                let mut acc = 0.0;
                for (&c, &x) in cs.iter().zip(vs) {
                    acc += x * v[(c, j)];
                }
                mv[(r, j)] = acc;
            }
        }
        v.transpose() * &mv
    }
}

/// Truncated Fock ⊗ spin space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub fock_cutoff: usize,
    pub n_atoms: usize,
}

impl FockSpace {
    pub fn new(fock_cutoff: usize, n_atoms: usize) -> Self {
        FockSpace {
            fock_cutoff,
            n_atoms,
        }
    }

    pub fn dim(&self) -> usize {
        (self.n_atoms + 1) * (self.fock_cutoff + 1)
    }

    pub fn index(&self, mi: usize, n: usize) -> usize {
        mi * (self.fock_cutoff + 1) + n
    }

    fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    fn raising(&self, mi: usize) -> f64 {
        let j = self.j();
        let m = mi as f64 - j;
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }

    fn states(&self) -> impl Iterator<Item = (usize, usize)> {
        let nf = self.fock_cutoff + 1;
        (0..=self.n_atoms).flat_map(move |mi| (0..nf).map(move |n| (mi, n)))
    }

    /// `a†a`.
    pub fn number(&self) -> SparseMatrix {
        let t = self
            .states()
            .map(|(mi, n)| (self.index(mi, n), self.index(mi, n), n as f64))
            .collect();
        SparseMatrix::from_triplets(self.dim(), t)
    }

    /// `a + a†`.
    pub fn quadrature(&self) -> SparseMatrix {
        let mut t = Vec::new();
        for (mi, n) in self.states() {
            if n < self.fock_cutoff {
                let v = ((n + 1) as f64).sqrt();
                t.push((self.index(mi, n + 1), self.index(mi, n), v));
                t.push((self.index(mi, n), self.index(mi, n + 1), v));
            }
        }
        SparseMatrix::from_triplets(self.dim(), t)
    }

    /// `J_z`.
    pub fn jz(&self) -> SparseMatrix {
        let t = self
            .states()
            .map(|(mi, n)| (self.index(mi, n), self.index(mi, n), mi as f64 - self.j()))
            .collect();
        SparseMatrix::from_triplets(self.dim(), t)
    }

    /// `J₊ + J₋`.
    pub fn spin_flip(&self) -> SparseMatrix {
        let mut t = Vec::new();
        for (mi, n) in self.states() {
            if mi < self.n_atoms {
                let v = self.raising(mi);
                t.push((self.index(mi + 1, n), self.index(mi, n), v));
                t.push((self.index(mi, n), self.index(mi + 1, n), v));
            }
        }
        SparseMatrix::from_triplets(self.dim(), t)
    }

    /// Parity `|n, m⟩ ↦ (−1)^n |n, −m⟩`, the image in the rotated frame of
    /// `exp[iπ(a†a + J_z + j)]` up to a global phase.
    pub fn parity(&self) -> SparseMatrix {
        let t = self
            .states()
            .map(|(mi, n)| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                (self.index(self.n_atoms - mi, n), self.index(mi, n), sign)
            })
            .collect();
        SparseMatrix::from_triplets(self.dim(), t)
    }

    /// Hamiltonian split as `H(ω, Δ) = ω A + Δ B + C` at fixed `λ` and `U`.
    pub fn hamiltonian(&self, lambda: f64, u: f64) -> FockHamiltonian {
        let n_at = self.n_atoms as f64;
        let number = self.number();
        let flip = self.spin_flip();
        let mut rest = Vec::new();
        for (r, c, v) in self.quadrature().iter() {
            // J_z is diagonal, so (a + a†) J_z only rescales columns.
            let m = (c / (self.fock_cutoff + 1)) as f64 - self.j();
            rest.push((r, c, 2.0 * lambda / n_at.sqrt() * v * m));
        }
        for (r, c, v) in flip.iter() {
            let n = (r % (self.fock_cutoff + 1)) as f64;
            rest.push((r, c, -u / (2.0 * n_at) * n * v));
        }
        FockHamiltonian {
            space: *self,
            omega_part: number,
            delta_part: SparseMatrix::combine(&[(-0.5, &flip)]),
            rest: SparseMatrix::from_triplets(self.dim(), rest),
        }
    }
}

/// `H(ω, Δ) = ω A + Δ B + C` on a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    pub space: FockSpace,
    pub omega_part: SparseMatrix,
    pub delta_part: SparseMatrix,
    pub rest: SparseMatrix,
}

impl FockHamiltonian {
    pub fn at(&self, omega: f64, delta: f64) -> SparseMatrix {
        SparseMatrix::combine(&[
            (omega, &self.omega_part),
            (delta, &self.delta_part),
            (1.0, &self.rest),
        ])
    }
}

/// Eigenvectors expressed in a Fock ⊗ spin space.
#[derive(Debug, Clone)]
pub struct FockVectors {
    pub space: FockSpace,
    pub levels: Range<usize>,
    /// Columns are the renormalized vectors.
    pub vectors: Mat<f64>,
    /// `1 − ‖ψ‖` before renormalization, per vector.
    pub deficiency: Vec<f64>,
    /// Levels whose deficiency exceeds [`DEFICIENCY_FLAG`].
    pub flagged: Vec<usize>,
}

/// Expands ECS eigenvectors in bare Fock states using
/// `⟨n|k⟩_{A_m} = displaced_overlap(n, k, g_m)`.
pub fn ecs_to_fock(
    spectrum: &Spectrum,
    levels: Range<usize>,
    fock_cutoff: usize,
) -> Result<FockVectors> {
    let basis = &spectrum.basis;
    if fock_cutoff < basis.n_tr {
        return Err(invalid(
            "fock_cutoff",
            format!("must be at least n_tr = {}, got {fock_cutoff}", basis.n_tr),
        ));
    }
    if levels.start >= levels.end || levels.end > spectrum.dim() {
        return Err(Error::LevelRange {
            range: levels,
            available: spectrum.dim(),
        });
    }
    let ecs = spectrum.eigvecs()?;
    let params = &spectrum.params;
    let space = FockSpace::new(fock_cutoff, params.n_atoms);
    let nk = basis.n_tr + 1;
    let nf = fock_cutoff + 1;
    let count = levels.len();
    let mut out = Mat::<f64>::zeros(space.dim(), count);

    for mi in 0..=params.n_atoms {
        let t = overlap_table(nf, nk, params.displacement(mi));
        let block = ecs.subrows(mi * nk, nk).subcols(levels.start, count);
        let fock = &t * block;
        out.subrows_mut(mi * nf, nf).copy_from(&fock);
    }

    let mut deficiency = Vec::with_capacity(count);
    let mut flagged = Vec::new();
    for c in 0..count {
        let norm = out.col(c).norm_l2();
        let lost = 1.0 - norm;
        let level = levels.start + c;
        if lost > DEFICIENCY_LIMIT {
            return Err(Error::RepresentationLoss {
                level,
                deficiency: lost,
                fock_cutoff,
            });
        }
        if lost > DEFICIENCY_FLAG {
            log::warn!("level {level} loses {lost:.2e} of its norm at fock cutoff {fock_cutoff}");
            flagged.push(level);
        }
        deficiency.push(lost);
        let inv = 1.0 / norm;
        for r in 0..space.dim() {
            out[(r, c)] *= inv;
        }
    }

    Ok(FockVectors {
        space,
        levels,
        vectors: out,
        deficiency,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{diagonalize, BasisConfig, ModelParams};

    #[test]
    fn sparse_roundtrip() {
        let m = SparseMatrix::from_triplets(3, vec![(0, 1, 2.0), (0, 1, 1.0), (2, 2, 0.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[(0, 1)], 3.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, -1.0, 0.0]);
    }

    #[test]
    fn identity_embedding_when_decoupled() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0, 2).unwrap();
        let b = BasisConfig {
            n_tr: 10,
            fock_cutoff: 15,
            ..BasisConfig::default()
        };
        let s = diagonalize(&p, &b).unwrap();
        let f = ecs_to_fock(&s, 0..s.dim(), 15).unwrap();
        let v = s.eigvecs().unwrap();
        for c in 0..s.dim() {
            assert!(f.deficiency[c].abs() < 1e-14);
            for mi in 0..3 {
                for n in 0..16 {
                    let expect = if n <= 10 { v[(mi * 11 + n, c)] } else { 0.0 };
                    assert!((f.vectors[(f.space.index(mi, n), c)] - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn conversion_preserves_inner_products() {
        let p = ModelParams::new(1.0, 1.0, 0.47, 0.0, 2).unwrap();
        let s = diagonalize(&p, &BasisConfig::default()).unwrap();
        let f = ecs_to_fock(&s, 0..40, 120).unwrap();
        assert!(f.deficiency.iter().all(|&d| d < 1e-8));
        assert!(f.flagged.is_empty());
        let g = f.vectors.transpose() * &f.vectors;
        for i in 0..40 {
            for j in 0..40 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn too_small_cutoff_is_reported() {
        let p = ModelParams::new(1.0, 1.0, 3.0, 0.0, 2).unwrap();
        let b = BasisConfig {
            n_tr: 20,
            fock_cutoff: 20,
            ..BasisConfig::default()
        };
        let s = diagonalize(&p, &b).unwrap();
        let err = ecs_to_fock(&s, 0..10, 20).unwrap_err();
        assert!(matches!(err, Error::RepresentationLoss { .. }), "{err}");
        assert!(matches!(
            ecs_to_fock(&s, 0..1000, 20),
            Err(Error::LevelRange { .. })
        ));
    }

    #[test]
    fn parity_is_an_involution_commuting_with_h() {
        let space = FockSpace::new(12, 3);
        let pi = space.parity().to_dense();
        let sq = &pi * &pi;
        let h = space.hamiltonian(0.6, 0.4).at(1.3, 0.8).to_dense();
        let comm = &h * &pi - &pi * &h;
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert_eq!(sq[(i, j)], target);
                assert!(comm[(i, j)].abs() < 1e-12);
            }
        }
    }
}
