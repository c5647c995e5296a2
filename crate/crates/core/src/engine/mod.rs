//! Finite-time four-stroke Otto cycle.
//!
//! Stroke 1 thermalizes `H_h` against the hot bath, stroke 2 ramps
//! `ω_h → ω_c` in isolation, stroke 3 thermalizes `H_c` against the cold
//! bath and stroke 4 ramps back. Isochores run in the eigenbasis of the
//! static Hamiltonian (lowest `n_kept` levels); ramps run in the bare
//! Fock ⊗ spin space.

mod adiabatic;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

pub use adiabatic::{
    evolve_adiabatic, propagate_block, AdiabaticTranscript, BlockEvolution, Ramp, PURITY_TOL,
};

use crate::dynamics::{
    build_channels, relative_entropy, trace_distance, uhlmann_fidelity, BathSpec, DensityMatrix,
    Generator, Representation, DEFAULT_ALPHA, DEFAULT_OMEGA_CUT,
};
use crate::error::invalid;
use crate::spectrum::{diagonalize, ecs_to_fock, FockHamiltonian, FockVectors, DEFAULT_N_KEPT};
use crate::thermostatics::{classify_mode_with, DeltaProtocol, Mode, ModeConvention};
use crate::{linalg, BasisConfig, Error, ModelParams, Result, Spectrum};

/// Cycles whose start states agree to this fidelity count as steady.
pub const STEADY_FIDELITY: f64 = 1.0 - 1e-4;

/// Stroke durations, integrator steps and number of cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrokeSchedule {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    pub dt_isochoric: f64,
    pub dt_adiabatic: f64,
    pub n_cycles: usize,
}

impl Default for StrokeSchedule {
    fn default() -> Self {
        StrokeSchedule::symmetric(1000.0, 20.0)
    }
}

impl StrokeSchedule {
    /// `τ_1 = τ_3 = tau_iso`, `τ_2 = τ_4 = tau_ad`, default steps, five cycles.
    pub fn symmetric(tau_iso: f64, tau_ad: f64) -> Self {
        StrokeSchedule {
            tau1: tau_iso,
            tau2: tau_ad,
            tau3: tau_iso,
            tau4: tau_ad,
            dt_isochoric: 0.1,
            dt_adiabatic: 0.002,
            n_cycles: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tau3", self.tau3),
            ("tau4", self.tau4),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        for (name, v) in [
            ("dt_isochoric", self.dt_isochoric),
            ("dt_adiabatic", self.dt_adiabatic),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.n_cycles == 0 {
            return Err(invalid("n_cycles", "must be at least 1".to_string()));
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.tau1 + self.tau2 + self.tau3 + self.tau4
    }
}

/// Working-substance parameters shared by both legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleParams {
    pub lambda: f64,
    pub u: f64,
    pub delta: DeltaProtocol,
    pub n_atoms: usize,
    pub omega_h: f64,
    pub omega_c: f64,
}

impl CycleParams {
    /// Two atoms, `ω_h = 2`, `ω_c = 1`, resonant splitting.
    pub fn standard(lambda: f64, u: f64) -> Self {
        CycleParams {
            lambda,
            u,
            delta: DeltaProtocol::Resonant,
            n_atoms: 2,
            omega_h: 2.0,
            omega_c: 1.0,
        }
    }

    pub fn hot_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.omega_h,
            self.delta.at(self.omega_h),
            self.lambda,
            self.u,
            self.n_atoms,
        )
    }

    pub fn cold_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.omega_c,
            self.delta.at(self.omega_c),
            self.lambda,
            self.u,
            self.n_atoms,
        )
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
        self.delta.validate()?;
        self.hot_params()?;
        self.cold_params()?;
        Ok(())
    }
}

/// Both reservoirs; they share the Ohmic coupling and cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleBaths {
    pub t_hot: f64,
    pub t_cold: f64,
    pub alpha: f64,
    pub omega_cut: f64,
}

impl Default for CycleBaths {
    fn default() -> Self {
        CycleBaths {
            t_hot: 0.5,
            t_cold: 0.1,
            alpha: DEFAULT_ALPHA,
            omega_cut: DEFAULT_OMEGA_CUT,
        }
    }
}

impl CycleBaths {
    pub fn hot(&self) -> Result<BathSpec> {
        BathSpec::new(self.alpha, self.omega_cut, self.t_hot)
    }

    pub fn cold(&self) -> Result<BathSpec> {
        BathSpec::new(self.alpha, self.omega_cut, self.t_cold)
    }

    pub fn carnot(&self) -> f64 {
        1.0 - self.t_cold / self.t_hot
    }
}

/// Reference state in the friction relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrictionReference {
    /// Gibbs state of the ramp's final Hamiltonian at the temperature of the
    /// preceding bath.
    #[default]
    Gibbs,
    /// Populations before the ramp carried over level by level.
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub basis: BasisConfig,
    pub n_kept: usize,
    pub convention: ModeConvention,
    pub friction_ref: FrictionReference,
    /// Scale of the collective atomic jump operator.
    pub atom_scale: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            basis: BasisConfig::default(),
            n_kept: DEFAULT_N_KEPT,
            convention: ModeConvention::Standard,
            friction_ref: FrictionReference::Gibbs,
            atom_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrokeKind {
    IsochoricHot,
    AdiabaticExpand,
    IsochoricCold,
    AdiabaticCompress,
}

/// Endpoint bookkeeping of one stroke.
#[derive(Debug, Clone)]
pub struct StrokeRecord {
    /// 1 to 4.
    pub index: usize,
    pub kind: StrokeKind,
    pub heat: f64,
    pub work_on_system: f64,
    pub energy_start: f64,
    pub energy_end: f64,
    /// For ramps this is the state after projection onto the next leg's
    /// eigenbasis.
    pub state_end: DensityMatrix,
    pub transcript: Option<AdiabaticTranscript>,
    /// Weight lost by that projection.
    pub leakage: f64,
}

/// Thermodynamic summary of one cycle.
#[derive(Debug, Clone)]
pub struct CycleReport {
    /// 1-based.
    pub cycle: usize,
    pub strokes: Vec<StrokeRecord>,
    pub q_hot: f64,
    pub q_cold: f64,
    /// `−(W_2 + W_4)`.
    pub work: f64,
    pub efficiency: Option<f64>,
    pub eta_via_entropy: Option<f64>,
    pub eta_carnot: f64,
    pub power: Option<f64>,
    pub entropy_total: f64,
    pub friction_expand: f64,
    pub friction_compress: f64,
    /// Fidelity between this cycle's start state and the previous one's.
    pub fidelity: Option<f64>,
    /// Trace distance between the same two states.
    pub start_distance: Option<f64>,
    pub mode: Mode,
    pub steady: bool,
}

impl CycleReport {
    /// State handed to the next cycle.
    pub fn final_state(&self) -> &DensityMatrix {
        &self.strokes[3].state_end
    }
}

struct Leg {
    spectrum: Spectrum,
    fock: FockVectors,
    generator: Generator,
    bath: BathSpec,
}

impl Leg {
    fn new(params: &ModelParams, bath: BathSpec, options: &EngineOptions) -> Result<Self> {
        let spectrum = diagonalize(params, &options.basis)?.with_n_kept(options.n_kept)?;
        let fock = ecs_to_fock(&spectrum, 0..options.n_kept, options.basis.fock_cutoff)?;
        let channels = build_channels(&spectrum, options.n_kept, options.basis.fock_cutoff)?
            .with_atom_scale(options.atom_scale);
        let generator = Generator::new(&channels, &bath)?;
        Ok(Leg {
            spectrum,
            fock,
            generator,
            bath,
        })
    }

    fn representation(&self) -> Representation {
        self.generator.representation()
    }

    fn energies(&self) -> &[f64] {
        self.generator.energies()
    }

    fn gibbs(&self, temperature: f64) -> Result<DensityMatrix> {
        let e = self.energies();
        let w: Vec<f64> = e.iter().map(|x| (-(x - e[0]) / temperature).exp()).collect();
        DensityMatrix::from_populations(self.representation(), &w)
    }
}

/// A ramp pushed through the retained eigenvectors of its starting leg,
/// plus the overlaps with the target leg's eigenvectors.
struct PreparedRamp {
    evolution: BlockEvolution,
    overlap: Mat<c64>,
}

/// Precomputed spectra, channels and ramp propagators for one working
/// substance; cheap to run many schedules against.
pub struct Engine {
    params: CycleParams,
    baths: CycleBaths,
    options: EngineOptions,
    hot: Leg,
    cold: Leg,
    hamiltonian: FockHamiltonian,
    ramps: Mutex<HashMap<(u64, u64, bool), Arc<PreparedRamp>>>,
}

impl Engine {
    pub fn new(params: CycleParams, baths: CycleBaths, options: EngineOptions) -> Result<Self> {
        params.validate()?;
        if !(baths.t_hot > 0.0 && baths.t_cold > 0.0) {
            return Err(invalid("t_hot", "temperatures must be positive".to_string()));
        }
        options.basis.validate()?;
        let hot = Leg::new(&params.hot_params()?, baths.hot()?, &options)?;
        let cold = Leg::new(&params.cold_params()?, baths.cold()?, &options)?;
        let hamiltonian = hot.fock.space.hamiltonian(params.lambda, params.u);
        Ok(Engine {
            params,
            baths,
            options,
            hot,
            cold,
            hamiltonian,
            ramps: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &CycleParams {
        &self.params
    }

    pub fn hot_spectrum(&self) -> &Spectrum {
        &self.hot.spectrum
    }

    pub fn cold_spectrum(&self) -> &Spectrum {
        &self.cold.spectrum
    }

    /// Gibbs state of `H_h` at `T_h`: the default first-cycle state.
    pub fn hot_gibbs(&self) -> Result<DensityMatrix> {
        self.hot.gibbs(self.baths.t_hot)
    }

    fn ramp(&self, expand: bool, tau: f64, dt: f64) -> Result<Arc<PreparedRamp>> {
        let key = (tau.to_bits(), dt.to_bits(), expand);
        if let Some(r) = self.ramps.lock().expect("ramp cache poisoned").get(&key) {
            return Ok(Arc::clone(r));
        }
        let (from, to) = if expand {
            (&self.hot, &self.cold)
        } else {
            (&self.cold, &self.hot)
        };
        let ramp = Ramp::between(&from.spectrum.params, &to.spectrum.params, tau)?;
        let start = linalg::to_complex(from.fock.vectors.as_ref());
        let evolution = propagate_block(&self.hamiltonian, ramp, dt, start.as_ref())?;
        let target = linalg::to_complex(to.fock.vectors.as_ref());
        let overlap = target.transpose() * &evolution.vectors;
        let prepared = Arc::new(PreparedRamp { evolution, overlap });
        let mut map = self.ramps.lock().expect("ramp cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(prepared)))
    }

    fn isochore(&self, leg: &Leg, rho: &DensityMatrix, tau: f64, dt: f64, index: usize) -> Result<StrokeRecord> {
        let traj = leg.generator.evolve(rho, tau, dt)?;
        let (e0, e1) = (traj.energies[0], traj.energies[traj.energies.len() - 1]);
        Ok(StrokeRecord {
            index,
            kind: if index == 1 {
                StrokeKind::IsochoricHot
            } else {
                StrokeKind::IsochoricCold
            },
            heat: e1 - e0,
            work_on_system: 0.0,
            energy_start: e0,
            energy_end: e1,
            state_end: traj.final_state,
            transcript: None,
            leakage: 0.0,
        })
    }

    fn adiabat(
        &self,
        expand: bool,
        rho: &DensityMatrix,
        tau: f64,
        dt: f64,
    ) -> Result<StrokeRecord> {
        let (from, to) = if expand {
            (&self.hot, &self.cold)
        } else {
            (&self.cold, &self.hot)
        };
        if rho.representation() != from.representation() {
            return Err(Error::RepresentationMismatch(format!(
                "ramp expects {:?}, got {:?}",
                from.representation(),
                rho.representation()
            )));
        }
        let prepared = self.ramp(expand, tau, dt)?;
        let c = rho.matrix();
        let transcript = prepared.evolution.apply(c)?;
        let projected = &prepared.overlap * c * prepared.overlap.adjoint();
        let (state_end, leakage) = DensityMatrix::renormalized(to.representation(), projected)?;
        let e0 = linalg::trace_product(prepared.evolution.h_start.as_ref(), c.as_ref()).re;
        let e1 = linalg::trace_product(prepared.evolution.h_end.as_ref(), c.as_ref()).re;
        Ok(StrokeRecord {
            index: if expand { 2 } else { 4 },
            kind: if expand {
                StrokeKind::AdiabaticExpand
            } else {
                StrokeKind::AdiabaticCompress
            },
            heat: 0.0,
            work_on_system: e1 - e0,
            energy_start: e0,
            energy_end: e1,
            state_end,
            transcript: Some(transcript),
            leakage,
        })
    }

    /// One cycle from `start`, which must live in the hot eigenbasis.
    pub fn run_cycle(
        &self,
        start: &DensityMatrix,
        schedule: &StrokeSchedule,
        cycle: usize,
    ) -> Result<CycleReport> {
        schedule.validate()?;
        let wrap = |stroke: usize| move |e: Error| Error::Stroke {
            cycle,
            stroke,
            source: Box::new(e),
        };
        if start.representation() != self.hot.representation() {
            return Err(wrap(1)(Error::RepresentationMismatch(
                "cycles start in the hot eigenbasis".to_string(),
            )));
        }
        let s1 = self
            .isochore(&self.hot, start, schedule.tau1, schedule.dt_isochoric, 1)
            .map_err(wrap(1))?;
        let s2 = self
            .adiabat(true, &s1.state_end, schedule.tau2, schedule.dt_adiabatic)
            .map_err(wrap(2))?;
        let s3 = self
            .isochore(&self.cold, &s2.state_end, schedule.tau3, schedule.dt_isochoric, 3)
            .map_err(wrap(3))?;
        let s4 = self
            .adiabat(false, &s3.state_end, schedule.tau4, schedule.dt_adiabatic)
            .map_err(wrap(4))?;

        let q_hot = s1.heat;
        let q_cold = s3.heat;
        let work = -(s2.work_on_system + s4.work_on_system);
        let scale = q_hot.abs().max(q_cold.abs()).max(1.0);
        let efficiency = (q_hot > 1e-12 * scale).then(|| work / q_hot);
        let mode = classify_mode_with(q_hot, q_cold, work, self.options.convention, scale);

        let entropy = entropy_production(
            [&s1.state_end, &s2.state_end, &s3.state_end, &s4.state_end],
            self.hot.energies(),
            self.cold.energies(),
            self.baths.t_hot,
            self.baths.t_cold,
        )
        .map_err(wrap(4))?;

        let (ref_expand, ref_compress) = match self.options.friction_ref {
            FrictionReference::Gibbs => (
                self.cold.gibbs(self.hot.bath.temperature).map_err(wrap(2))?,
                self.hot.gibbs(self.cold.bath.temperature).map_err(wrap(4))?,
            ),
            FrictionReference::Adiabatic => (
                DensityMatrix::from_populations(self.cold.representation(), &s1.state_end.populations())
                    .map_err(wrap(2))?,
                DensityMatrix::from_populations(self.hot.representation(), &s3.state_end.populations())
                    .map_err(wrap(4))?,
            ),
        };
        let friction_expand =
            friction(&s2.state_end, &ref_expand, self.hot.bath.temperature).map_err(wrap(2))?;
        let friction_compress =
            friction(&s4.state_end, &ref_compress, self.cold.bath.temperature).map_err(wrap(4))?;

        let total = schedule.total_time();
        Ok(CycleReport {
            cycle,
            strokes: vec![s1, s2, s3, s4],
            q_hot,
            q_cold,
            work,
            efficiency,
            eta_via_entropy: entropy.eta_via_entropy,
            eta_carnot: self.baths.carnot(),
            power: (total > 0.0).then(|| work / total),
            entropy_total: entropy.sigma_total,
            friction_expand,
            friction_compress,
            fidelity: None,
            start_distance: None,
            mode,
            steady: false,
        })
    }

    /// `n_cycles` chained cycles starting from the hot Gibbs state.
    pub fn run(&self, schedule: &StrokeSchedule) -> Result<Vec<CycleReport>> {
        self.run_from(&self.hot_gibbs()?, schedule)
    }

    pub fn run_from(&self, initial: &DensityMatrix, schedule: &StrokeSchedule) -> Result<Vec<CycleReport>> {
        schedule.validate()?;
        let mut reports: Vec<CycleReport> = Vec::with_capacity(schedule.n_cycles);
        let mut start = initial.clone();
        for cycle in 1..=schedule.n_cycles {
            let mut report = self.run_cycle(&start, schedule, cycle)?;
            if let Some(prev) = reports.last() {
                let prev_start = if cycle == 2 {
                    initial
                } else {
                    reports[cycle - 3].final_state()
                };
                debug_assert_eq!(prev.cycle, cycle - 1);
                report.fidelity = Some(uhlmann_fidelity(prev_start, &start)?);
                report.start_distance = Some(trace_distance(prev_start, &start)?);
            }
            start = report.final_state().clone();
            reports.push(report);
        }
        if let Some(last) = reports.last_mut() {
            last.steady = last.fidelity.is_some_and(|f| f > STEADY_FIDELITY);
        }
        Ok(reports)
    }
}

/// One cycle with freshly built spectra; `initial` defaults to the hot Gibbs
/// state.
pub fn run_cycle(
    initial: Option<&DensityMatrix>,
    params: &CycleParams,
    baths: &CycleBaths,
    schedule: &StrokeSchedule,
    options: &EngineOptions,
) -> Result<CycleReport> {
    let engine = Engine::new(*params, *baths, *options)?;
    let start = match initial {
        Some(s) => s.clone(),
        None => engine.hot_gibbs()?,
    };
    engine.run_cycle(&start, schedule, 1)
}

/// `schedule.n_cycles` chained cycles from the hot Gibbs state.
pub fn run_engine(
    params: &CycleParams,
    baths: &CycleBaths,
    schedule: &StrokeSchedule,
    options: &EngineOptions,
) -> Result<Vec<CycleReport>> {
    Engine::new(*params, *baths, *options)?.run(schedule)
}

/// `T · D(ρ‖ρ_ref)`.
pub fn friction(rho: &DensityMatrix, reference: &DensityMatrix, temperature: f64) -> Result<f64> {
    Ok(temperature * relative_entropy(rho, reference)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyProduction {
    pub sigma_total: f64,
    /// `η_c − T_c Σ / (E_1 − E_4)`, when the denominator is positive.
    pub eta_via_entropy: Option<f64>,
}

/// Entropy produced per cycle from the states at the ends of strokes 1–4:
/// `Σ = −(E_1 − E_4)/T_h − (E_3 − E_2)/T_c` with `E_1, E_4` measured with
/// `H_h` and `E_2, E_3` with `H_c`.
pub fn entropy_production(
    states: [&DensityMatrix; 4],
    hot_energies: &[f64],
    cold_energies: &[f64],
    t_hot: f64,
    t_cold: f64,
) -> Result<EntropyProduction> {
    let energy = |rho: &DensityMatrix, e: &[f64]| -> Result<f64> {
        if rho.dim() != e.len() {
            return Err(Error::RepresentationMismatch(format!(
                "state of dimension {} measured with {} energies",
                rho.dim(),
                e.len()
            )));
        }
        Ok(rho.diagonal_expectation(e))
    };
    let e1 = energy(states[0], hot_energies)?;
    let e2 = energy(states[1], cold_energies)?;
    let e3 = energy(states[2], cold_energies)?;
    let e4 = energy(states[3], hot_energies)?;
    let sigma_total = -(e1 - e4) / t_hot - (e3 - e2) / t_cold;
    let absorbed = e1 - e4;
    let eta_via_entropy = (absorbed > 1e-12 * absorbed.abs().max(1.0))
        .then(|| 1.0 - t_cold / t_hot - t_cold * sigma_total / absorbed);
    Ok(EntropyProduction {
        sigma_total,
        eta_via_entropy,
    })
}
