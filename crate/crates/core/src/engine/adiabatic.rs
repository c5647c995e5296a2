//! Unitary frequency ramps in the bare Fock ⊗ spin representation.

use faer::{c64, Mat, MatRef};

use crate::dynamics::{DensityMatrix, Representation};
use crate::error::invalid;
use crate::spectrum::{FockHamiltonian, FockSpace};
use crate::{linalg, Error, ModelParams, Result};

/// Pure-state weights below this are dropped when unravelling a mixed state.
const WEIGHT_FLOOR: f64 = 1e-14;
/// Upper bound on the spacing of the samples used for the work integral.
const SAMPLE_SPACING: f64 = 0.01;
pub const PURITY_TOL: f64 = 1e-6;

/// `ω(t)` and `Δ(t)` interpolate linearly between the endpoint parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub omega: (f64, f64),
    pub delta: (f64, f64),
    pub tau: f64,
}

impl Ramp {
    pub fn between(start: &ModelParams, end: &ModelParams, tau: f64) -> Result<Self> {
        start.validate()?;
        end.validate()?;
        if start.lambda != end.lambda || start.u != end.u || start.n_atoms != end.n_atoms {
            return Err(invalid(
                "params_end",
                "a ramp may only change omega and delta".to_string(),
            ));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(invalid("tau", format!("must be non-negative, got {tau}")));
        }
        Ok(Ramp {
            omega: (start.omega, end.omega),
            delta: (start.delta, end.delta),
            tau,
        })
    }

    fn at(&self, t: f64) -> (f64, f64) {
        if self.tau == 0.0 {
            return (self.omega.0, self.delta.0);
        }
        let s = t / self.tau;
        (
            self.omega.0 + s * (self.omega.1 - self.omega.0),
            self.delta.0 + s * (self.delta.1 - self.delta.0),
        )
    }

    /// `(dω/dt, dΔ/dt)`.
    fn rates(&self) -> (f64, f64) {
        if self.tau == 0.0 {
            return (0.0, 0.0);
        }
        (
            (self.omega.1 - self.omega.0) / self.tau,
            (self.delta.1 - self.delta.0) / self.tau,
        )
    }
}

/// `ωA + ΔB + C` with a shared sparsity pattern.
struct MergedHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coef: Vec<[f64; 3]>,
}

impl MergedHamiltonian {
    fn new(h: &FockHamiltonian) -> Self {
        let dim = h.space.dim();
        let mut entries: Vec<(usize, usize, [f64; 3])> = Vec::new();
        for (slot, m) in [&h.omega_part, &h.delta_part, &h.rest].into_iter().enumerate() {
            for (r, c, v) in m.iter() {
                let mut coef = [0.0; 3];
                coef[slot] = v;
                entries.push((r, c, coef));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut coef: Vec<[f64; 3]> = Vec::new();
        let mut last = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                let e = coef.last_mut().unwrap();
                for k in 0..3 {
                    e[k] += v[k];
                }
            } else {
                cols.push(c);
                coef.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        MergedHamiltonian {
            dim,
            row_ptr,
            cols,
            coef,
        }
    }

    /// `y = weights · (A, B, C) applied to x`, times `factor`; `x` and `y` are
    /// row-major `dim × width` blocks.
    fn apply(&self, weights: [f64; 3], factor: c64, x: &[c64], y: &mut [c64], width: usize) {
        let vals: Vec<f64> = self
            .coef
            .iter()
            .map(|c| weights[0] * c[0] + weights[1] * c[1] + weights[2] * c[2])
            .collect();
        for r in 0..self.dim {
            let out = &mut y[r * width..(r + 1) * width];
            out.fill(c64::new(0.0, 0.0));
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = vals[p];
                if v == 0.0 {
                    continue;
                }
                let src = &x[self.cols[p] * width..(self.cols[p] + 1) * width];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += s * v;
                }
            }
            for o in out.iter_mut() {
                *o *= factor;
            }
        }
    }
}

/// Result of carrying a block of initial vectors through a ramp. Everything
/// is reduced to matrices over the block, so any state supported on the
/// initial span can be pushed through afterwards at negligible cost.
#[derive(Debug, Clone)]
pub struct BlockEvolution {
    pub ramp: Ramp,
    pub steps: usize,
    pub dt: f64,
    /// `V† H_start V`.
    pub h_start: Mat<c64>,
    /// `W† H_end W` with `W = U V`.
    pub h_end: Mat<c64>,
    /// `∫ W(t)† (dH/dt) W(t) dt`.
    pub power_kernel: Mat<c64>,
    /// `W† W`, the identity up to integration error.
    pub gram: Mat<c64>,
    /// Final vectors `W`.
    pub vectors: Mat<c64>,
}

/// Propagates the columns of `initial` under `i dψ/dt = H(t) ψ` with RK4.
pub fn propagate_block(
    hamiltonian: &FockHamiltonian,
    ramp: Ramp,
    dt: f64,
    initial: MatRef<'_, c64>,
) -> Result<BlockEvolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt_adiabatic", format!("must be positive, got {dt}")));
    }
    let dim = hamiltonian.space.dim();
    if initial.nrows() != dim {
        return Err(Error::RepresentationMismatch(format!(
            "{} rows for a Fock space of dimension {dim}",
            initial.nrows()
        )));
    }
    let width = initial.ncols();
    let merged = MergedHamiltonian::new(hamiltonian);
    let (w0, d0) = ramp.at(0.0);
    let (w1, d1) = (ramp.omega.1, ramp.delta.1);

    let mut x: Vec<c64> = (0..dim * width)
        .map(|i| initial[(i / width, i % width)])
        .collect();
    let h_start = sandwich(&merged, [w0, d0, 1.0], &x, dim, width);

    if ramp.tau == 0.0 {
        let h_end = sandwich(&merged, [w1, d1, 1.0], &x, dim, width);
        let power_kernel = &h_end - &h_start;
        let gram = gram_of(&x, dim, width);
        return Ok(BlockEvolution {
            ramp,
            steps: 0,
            dt,
            h_start,
            h_end,
            power_kernel,
            gram,
            vectors: to_mat(&x, dim, width),
        });
    }

    // Even number of sample intervals for Simpson, whole RK4 steps per interval.
    let intervals = 2 * ((ramp.tau / (2.0 * SAMPLE_SPACING)).ceil() as usize).max(1);
    let per_interval = ((ramp.tau / intervals as f64) / dt).ceil().max(1.0) as usize;
    let steps = intervals * per_interval;
    let h = ramp.tau / steps as f64;
    let (dw, dd) = ramp.rates();
    let minus_i = c64::new(0.0, -1.0);

    let mut kernel = Mat::<c64>::zeros(width, width);
    let accumulate = |x: &[c64], weight: f64, kernel: &mut Mat<c64>| {
        let s = sandwich(&merged, [dw, dd, 0.0], x, dim, width);
        for j in 0..width {
            for i in 0..width {
                kernel[(i, j)] += s[(i, j)] * weight;
            }
        }
    };
    let sample_h = h * per_interval as f64;
    accumulate(&x, sample_h / 3.0, &mut kernel);

    let n = dim * width;
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![c64::new(0.0, 0.0); n],
        vec![c64::new(0.0, 0.0); n],
        vec![c64::new(0.0, 0.0); n],
        vec![c64::new(0.0, 0.0); n],
    );
    let mut tmp = vec![c64::new(0.0, 0.0); n];
    for step in 0..steps {
        let t = step as f64 * h;
        let (wa, da) = ramp.at(t);
        let (wm, dm) = ramp.at(t + 0.5 * h);
        let (wb, db) = ramp.at(t + h);
        merged.apply([wa, da, 1.0], minus_i, &x, &mut k1, width);
        combine(&x, 0.5 * h, &k1, &mut tmp);
        merged.apply([wm, dm, 1.0], minus_i, &tmp, &mut k2, width);
        combine(&x, 0.5 * h, &k2, &mut tmp);
        merged.apply([wm, dm, 1.0], minus_i, &tmp, &mut k3, width);
        combine(&x, h, &k3, &mut tmp);
        merged.apply([wb, db, 1.0], minus_i, &tmp, &mut k4, width);
        for i in 0..n {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let done = step + 1;
        if done % per_interval == 0 {
            let sample = done / per_interval;
            let weight = if sample == intervals {
                1.0
            } else if sample % 2 == 1 {
                4.0
            } else {
                2.0
            };
            accumulate(&x, weight * sample_h / 3.0, &mut kernel);
        }
    }

    let h_end = sandwich(&merged, [w1, d1, 1.0], &x, dim, width);
    let gram = gram_of(&x, dim, width);
    Ok(BlockEvolution {
        ramp,
        steps,
        dt: h,
        h_start,
        h_end,
        power_kernel: kernel,
        gram,
        vectors: to_mat(&x, dim, width),
    })
}

fn combine(x: &[c64], a: f64, k: &[c64], out: &mut [c64]) {
    for i in 0..x.len() {
        out[i] = x[i] + k[i] * a;
    }
}

fn to_mat(x: &[c64], dim: usize, width: usize) -> Mat<c64> {
    MatRef::from_row_major_slice(x, dim, width).to_owned()
}

/// `X† H X` for a row-major block `X`.
fn sandwich(h: &MergedHamiltonian, weights: [f64; 3], x: &[c64], dim: usize, width: usize) -> Mat<c64> {
    let mut hx = vec![c64::new(0.0, 0.0); dim * width];
    h.apply(weights, c64::new(1.0, 0.0), x, &mut hx, width);
    let xm = MatRef::from_row_major_slice(x, dim, width);
    let hm = MatRef::from_row_major_slice(&hx, dim, width);
    xm.adjoint() * hm
}

fn gram_of(x: &[c64], dim: usize, width: usize) -> Mat<c64> {
    let xm = MatRef::from_row_major_slice(x, dim, width);
    xm.adjoint() * xm
}

/// Bookkeeping for one ramp applied to one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticTranscript {
    pub steps: usize,
    pub dt: f64,
    /// `Tr(H_end ρ_end) − Tr(H_start ρ_0)`.
    pub work_endpoint: f64,
    /// `∫ Tr(dH/dt ρ(t)) dt` by composite Simpson.
    pub work_integral: f64,
    /// `|endpoint − integral| / max(|endpoint|, 1e-12)`.
    pub integral_mismatch: f64,
    pub purity_drift: f64,
}

impl BlockEvolution {
    /// Pushes a state written over the initial block (`ρ = V c V†`) through
    /// the ramp. Returns the coefficient matrix of `ρ_end = W c W†` and the
    /// transcript.
    pub fn apply(&self, coefficients: &Mat<c64>) -> Result<AdiabaticTranscript> {
        let e0 = linalg::trace_product(self.h_start.as_ref(), coefficients.as_ref()).re;
        let e1 = linalg::trace_product(self.h_end.as_ref(), coefficients.as_ref()).re;
        let integral = linalg::trace_product(self.power_kernel.as_ref(), coefficients.as_ref()).re;
        let before = linalg::trace_product(coefficients.as_ref(), coefficients.as_ref()).re;
        let gc = &self.gram * coefficients;
        let after = linalg::trace_product(gc.as_ref(), gc.as_ref()).re;
        let drift = (after - before).abs();
        if drift > PURITY_TOL {
            return Err(Error::Unitarity {
                drift,
                dt: self.dt,
                steps: self.steps,
            });
        }
        let work = e1 - e0;
        Ok(AdiabaticTranscript {
            steps: self.steps,
            dt: self.dt,
            work_endpoint: work,
            work_integral: integral,
            integral_mismatch: (work - integral).abs() / work.abs().max(1e-12),
            purity_drift: drift,
        })
    }
}

/// Unitary ramp of a Fock-space state from `params_start` to `params_end`.
///
/// The state is unravelled into its eigenvectors, which are propagated
/// together; `τ = 0` is the sudden quench.
pub fn evolve_adiabatic(
    rho0: &DensityMatrix,
    params_start: &ModelParams,
    params_end: &ModelParams,
    tau: f64,
    dt: f64,
) -> Result<(DensityMatrix, f64, AdiabaticTranscript)> {
    let ramp = Ramp::between(params_start, params_end, tau)?;
    let space = match rho0.representation() {
        Representation::Fock {
            fock_cutoff,
            n_atoms,
        } if n_atoms == params_start.n_atoms => FockSpace::new(fock_cutoff, n_atoms),
        other => {
            return Err(Error::RepresentationMismatch(format!(
                "adiabatic strokes need a Fock state for {} atoms, got {other:?}",
                params_start.n_atoms
            )))
        }
    };
    let hamiltonian = space.hamiltonian(params_start.lambda, params_start.u);
    let (weights, vecs) = linalg::hermitian_eigen(rho0.matrix().as_ref())?;
    let kept: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > WEIGHT_FLOOR).collect();
    let block = Mat::from_fn(space.dim(), kept.len(), |r, c| vecs[(r, kept[c])]);
    let evolution = propagate_block(&hamiltonian, ramp, dt, block.as_ref())?;
    let coefficients = Mat::from_fn(kept.len(), kept.len(), |i, j| {
        if i == j {
            c64::new(weights[kept[i]], 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let transcript = evolution.apply(&coefficients)?;
    let w = &evolution.vectors;
    let rho_end = w * &coefficients * w.adjoint();
    let (rho_end, _) = DensityMatrix::renormalized(rho0.representation(), rho_end)?;
    Ok((rho_end, transcript.work_endpoint, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{diagonalize, ecs_to_fock, BasisConfig};

    fn ground_state(params: &ModelParams, cutoff: usize) -> (DensityMatrix, Vec<f64>) {
        let basis = BasisConfig {
            n_tr: 40,
            fock_cutoff: cutoff,
            ..BasisConfig::default()
        };
        let s = diagonalize(params, &basis).unwrap();
        let f = ecs_to_fock(&s, 0..1, cutoff).unwrap();
        let psi: Vec<f64> = (0..f.space.dim()).map(|i| f.vectors[(i, 0)]).collect();
        (
            DensityMatrix::pure(Representation::of_space(&f.space), &psi).unwrap(),
            psi,
        )
    }

    #[test]
    fn sudden_quench() {
        let a = ModelParams::new(2.0, 2.0, 0.47, 0.0, 2).unwrap();
        let b = ModelParams::new(1.0, 1.0, 0.47, 0.0, 2).unwrap();
        let (rho, _) = ground_state(&a, 60);
        let (end, work, t) = evolve_adiabatic(&rho, &a, &b, 0.0, 0.002).unwrap();
        let space = FockSpace::new(60, 2);
        let h = space.hamiltonian(0.47, 0.0);
        let diff = h.at(1.0, 1.0).to_dense() - h.at(2.0, 2.0).to_dense();
        assert!((work - rho.expectation(&diff)).abs() < 1e-12);
        assert_eq!(t.steps, 0);
        let d = crate::dynamics::trace_distance(&end, &rho).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn slow_ramp_follows_ground_state() {
        let a = ModelParams::new(2.0, 2.0, 0.47, 0.0, 2).unwrap();
        let b = ModelParams::new(1.0, 1.0, 0.47, 0.0, 2).unwrap();
        let (rho, _) = ground_state(&a, 60);
        let (end, work, t) = evolve_adiabatic(&rho, &a, &b, 40.0, 0.002).unwrap();
        let (_, target) = ground_state(&b, 60);
        let e0 = |p: &ModelParams| {
            let basis = BasisConfig { n_tr: 40, fock_cutoff: 60, ..BasisConfig::default() };
            diagonalize(p, &basis).unwrap().ground_energy()
        };
        let n = target.len();
        let mut overlap = 0.0;
        for i in 0..n {
            for j in 0..n {
                overlap += target[i] * end.matrix()[(i, j)].re * target[j];
            }
        }
        assert!(overlap > 0.999, "{overlap}");
        assert!(t.integral_mismatch < 1e-6, "{t:?}");
        assert!(t.purity_drift < 1e-8);
        // Following the ground state, the work is the ground-energy change.
        assert!((work - (e0(&b) - e0(&a))).abs() < 1e-3, "{work}");
    }

    #[test]
    fn spectrum_of_state_preserved() {
        let a = ModelParams::new(1.0, 1.0, 0.3, 0.2, 1).unwrap();
        let b = ModelParams::new(1.6, 1.6, 0.3, 0.2, 1).unwrap();
        let space = FockSpace::new(30, 1);
        let dim = space.dim();
        let p: Vec<f64> = (0..dim).map(|i| if i < 4 { [0.4, 0.3, 0.2, 0.1][i] } else { 0.0 }).collect();
        let rho = DensityMatrix::from_populations(Representation::of_space(&space), &p).unwrap();
        let (end, _, t) = evolve_adiabatic(&rho, &a, &b, 3.0, 0.002).unwrap();
        let ev0 = rho.eigenvalues().unwrap();
        let ev1 = end.eigenvalues().unwrap();
        for (x, y) in ev0.iter().zip(&ev1) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!(t.integral_mismatch < 1e-6, "{t:?}");
    }

    #[test]
    fn ramp_rejects_coupling_change() {
        let a = ModelParams::new(2.0, 2.0, 0.47, 0.0, 2).unwrap();
        let b = ModelParams::new(1.0, 1.0, 0.40, 0.0, 2).unwrap();
        assert!(Ramp::between(&a, &b, 1.0).is_err());
    }
}
