use dicke_otto::engine::{
    entropy_production, run_engine, CycleBaths, CycleParams, Engine, EngineOptions, FrictionReference,
    StrokeSchedule,
};
use dicke_otto::thermostatics::{quasistatic_cycle, QuasistaticCycleSpec};
use dicke_otto::BasisConfig;

fn options() -> EngineOptions {
    EngineOptions {
        basis: BasisConfig {
            n_tr: 30,
            fock_cutoff: 40,
            ..BasisConfig::default()
        },
        n_kept: 30,
        ..EngineOptions::default()
    }
}

fn schedule(tau_iso: f64, tau_ad: f64, n_cycles: usize) -> StrokeSchedule {
    StrokeSchedule {
        n_cycles,
        ..StrokeSchedule::symmetric(tau_iso, tau_ad)
    }
}

#[test]
fn finite_time_work_stays_below_quasistatic() {
    for (lambda, u) in [(0.3, 0.0), (0.47, 0.5), (0.2, -0.5)] {
        let mut spec = QuasistaticCycleSpec::standard(lambda, u, 2);
        spec.basis = options().basis;
        let w_qs = quasistatic_cycle(&spec).unwrap().work;
        let reports = run_engine(
            &CycleParams::standard(lambda, u),
            &CycleBaths::default(),
            &schedule(300.0, 5.0, 3),
            &options(),
        )
        .unwrap();
        for r in &reports {
            assert!(r.work <= w_qs + 1e-6, "λ={lambda} U={u}: {} > {w_qs}", r.work);
            assert!(r.entropy_total >= -1e-9, "Σ = {}", r.entropy_total);
            // Over a cycle that has not closed yet, W = Q_h + Q_c − ΔE.
            let stored = r.strokes[3].energy_end - r.strokes[0].energy_start;
            assert!((r.work - r.q_hot - r.q_cold + stored).abs() < 1e-9);
            if let Some(eta) = r.efficiency {
                assert!(eta <= r.eta_carnot + 1e-12);
            }
        }
    }
}

#[test]
fn entropy_matches_stroke_endpoints() {
    let engine = Engine::new(CycleParams::standard(0.4, 0.2), CycleBaths::default(), options()).unwrap();
    let r = engine.run(&schedule(200.0, 2.0, 2)).unwrap().pop().unwrap();
    let states = [
        &r.strokes[0].state_end,
        &r.strokes[1].state_end,
        &r.strokes[2].state_end,
        &r.strokes[3].state_end,
    ];
    let n = options().n_kept;
    let hot = &engine.hot_spectrum().energies[..n];
    let cold = &engine.cold_spectrum().energies[..n];
    let e = entropy_production(states, hot, cold, 0.5, 0.1).unwrap();
    assert!((e.sigma_total - r.entropy_total).abs() < 1e-12);
    let e1 = states[0].diagonal_expectation(hot);
    assert!((e1 - r.strokes[0].energy_end).abs() < 1e-12);
    assert_eq!(r.q_hot, r.strokes[0].heat);
}

#[test]
fn closed_cycle_efficiency_from_entropy() {
    // Once the limit cycle is reached, W/Q_h = η_c − T_c Σ/(E1 − E4).
    let reports = run_engine(
        &CycleParams::standard(0.45, 0.0),
        &CycleBaths::default(),
        &schedule(3000.0, 20.0, 4),
        &options(),
    )
    .unwrap();
    let r = reports.last().unwrap();
    assert!(r.steady);
    let (eta, via) = (r.efficiency.unwrap(), r.eta_via_entropy.unwrap());
    assert!((eta - via).abs() < 1e-3 * eta, "{eta} vs {via}");
}

#[test]
fn halving_steps_changes_little() {
    let params = CycleParams::standard(0.45, 0.0);
    let coarse = schedule(100.0, 2.0, 2);
    let fine = StrokeSchedule {
        dt_isochoric: coarse.dt_isochoric / 2.0,
        dt_adiabatic: coarse.dt_adiabatic / 2.0,
        ..coarse
    };
    let a = run_engine(&params, &CycleBaths::default(), &coarse, &options()).unwrap();
    let b = run_engine(&params, &CycleBaths::default(), &fine, &options()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let scale = x.q_hot.abs().max(1e-3);
        assert!((x.work - y.work).abs() < 1e-6 * scale, "{} vs {}", x.work, y.work);
        assert!((x.q_hot - y.q_hot).abs() < 1e-6 * scale);
    }
}

#[test]
fn slower_ramps_lose_less_to_friction() {
    let params = CycleParams::standard(0.45, 0.0);
    let fast = run_engine(&params, &CycleBaths::default(), &schedule(300.0, 0.5, 2), &options()).unwrap();
    let slow = run_engine(&params, &CycleBaths::default(), &schedule(300.0, 20.0, 2), &options()).unwrap();
    let (f, s) = (fast.last().unwrap(), slow.last().unwrap());
    assert!(s.friction_expand < f.friction_expand);
    assert!(s.work > f.work);
}

#[test]
fn adiabatic_reference_friction_is_nonnegative() {
    let opts = EngineOptions {
        friction_ref: FrictionReference::Adiabatic,
        ..options()
    };
    let reports = run_engine(&CycleParams::standard(0.35, -0.3), &CycleBaths::default(), &schedule(100.0, 1.0, 2), &opts).unwrap();
    for r in &reports {
        assert!(r.friction_expand >= -1e-9 && r.friction_compress >= -1e-9);
    }
}
