use dicke_otto::thermostatics::{
    critical_coupling, quasistatic_cycle, quasistatic_cycle_with, Mode, ModeConvention,
    QuasistaticCycleSpec, QuasistaticOptions,
};
use proptest::prelude::*;

/// Product levels `ω k + Δ m` of the uncoupled model, sorted and paired by
/// index.
fn decoupled_oracle(spec: &QuasistaticCycleSpec) -> (f64, f64, f64) {
    let levels = |omega: f64| {
        let delta = spec.delta.at(omega);
        let j = spec.n_atoms as f64 / 2.0;
        let mut e: Vec<f64> = (0..=spec.basis.n_tr)
            .flat_map(|k| (0..=spec.n_atoms).map(move |s| omega * k as f64 + delta * (s as f64 - j)))
            .collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let populations = |e: &[f64], t: f64| {
        let w: Vec<f64> = e.iter().map(|x| (-(x - e[0]) / t).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect::<Vec<_>>()
    };
    let (eh, ec) = (levels(spec.omega_h), levels(spec.omega_c));
    let (ph, pc) = (populations(&eh, spec.t_hot), populations(&ec, spec.t_cold));
    let q_hot: f64 = (0..eh.len()).map(|n| eh[n] * (ph[n] - pc[n])).sum();
    let q_cold: f64 = (0..ec.len()).map(|n| ec[n] * (pc[n] - ph[n])).sum();
    (q_hot, q_cold, q_hot + q_cold)
}

#[test]
fn decoupled_limit_matches_product_levels() {
    for n_atoms in [1, 2, 5] {
        let spec = QuasistaticCycleSpec::standard(0.0, 0.0, n_atoms);
        let r = quasistatic_cycle(&spec).unwrap();
        let (qh, qc, w) = decoupled_oracle(&spec);
        assert!((r.q_hot - qh).abs() < 1e-10, "{} vs {qh}", r.q_hot);
        assert!((r.q_cold - qc).abs() < 1e-10, "{} vs {qc}", r.q_cold);
        assert!((r.work - w).abs() < 1e-10, "{} vs {w}", r.work);
    }
}

#[test]
fn engine_region_at_moderate_coupling() {
    let r = quasistatic_cycle(&QuasistaticCycleSpec::standard(0.45, 0.0, 8)).unwrap();
    assert_eq!(r.mode, Mode::Engine);
    assert!(r.converged);
    let eta = r.efficiency.unwrap();
    assert!(eta > 0.0 && eta <= 0.8);
}

#[test]
fn work_peak_location() {
    // N = 8, U = 0: argmax over λ ∈ {0.30, …, 0.52} at 0.40 ± 0.01.
    let lambdas: Vec<f64> = (0..=22).map(|i| 0.30 + 0.01 * i as f64).collect();
    let works: Vec<f64> = lambdas
        .iter()
        .map(|&l| quasistatic_cycle(&QuasistaticCycleSpec::standard(l, 0.0, 8)).unwrap().work)
        .collect();
    let best = (0..works.len()).max_by(|&a, &b| works[a].total_cmp(&works[b])).unwrap();
    assert!((lambdas[best] - 0.40).abs() <= 0.01 + 1e-12, "argmax {}", lambdas[best]);
}

#[test]
fn zero_crossing_tracks_critical_coupling() {
    // Work changes sign within 0.02 of λ_c(T_c, ω_c).
    for u in [-0.9, 0.0, 0.9] {
        let lc = critical_coupling(1.0, 1.0, u, 0.1).unwrap();
        let below = quasistatic_cycle(&QuasistaticCycleSpec::standard(lc - 0.02, u, 8)).unwrap();
        let above = quasistatic_cycle(&QuasistaticCycleSpec::standard(lc + 0.02, u, 8)).unwrap();
        assert!(below.work > 0.0 && above.work < 0.0, "U={u}: {} {}", below.work, above.work);
    }
}

#[test]
fn literal_convention_only_changes_refrigerator_label() {
    let spec = QuasistaticCycleSpec::standard(0.7, 0.0, 2);
    let a = quasistatic_cycle_with(&spec, &QuasistaticOptions::default()).unwrap();
    let b = quasistatic_cycle_with(
        &spec,
        &QuasistaticOptions {
            convention: ModeConvention::Literal,
            certify: true,
        },
    )
    .unwrap();
    assert_eq!(a.work, b.work);
    if a.mode != Mode::Refrigerator && b.mode != Mode::Refrigerator {
        assert_eq!(a.mode, b.mode);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn first_law_and_carnot_bound(
        lambda in 0.0f64..0.9,
        u in -0.9f64..0.9,
        t_cold in 0.05f64..0.3,
        ratio in 1.5f64..6.0,
    ) {
        let mut spec = QuasistaticCycleSpec::standard(lambda, u, 2);
        spec.basis.n_tr = 40;
        spec.basis.fock_cutoff = 60;
        spec.t_cold = t_cold;
        spec.t_hot = t_cold * ratio;
        let r = quasistatic_cycle(&spec).unwrap();
        let scale = r.q_hot.abs().max(r.q_cold.abs()).max(1e-300);
        prop_assert!((r.work - r.q_hot - r.q_cold).abs() <= 1e-12 * scale);
        if r.mode == Mode::Engine {
            prop_assert!(r.efficiency.unwrap() <= 1.0 - 1.0 / ratio + 1e-9);
        }
    }
}
