use std::sync::OnceLock;

use dicke_otto::dynamics::{
    bose_occupation, build_channels, relative_entropy, trace_distance, uhlmann_fidelity,
    BathSpec, DensityMatrix, DressedChannelSet, Generator, RateMatrix, Representation,
};
use dicke_otto::spectrum::diagonalize;
use dicke_otto::{BasisConfig, ModelParams, Spectrum};
use faer::{c64, Mat};
use proptest::prelude::*;

const N_KEPT: usize = 8;

fn setup() -> &'static (Spectrum, DressedChannelSet) {
    static CELL: OnceLock<(Spectrum, DressedChannelSet)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = ModelParams::new(1.0, 1.0, 0.4, 0.3, 2).unwrap();
        let basis = BasisConfig { n_tr: 30, fock_cutoff: 50, ..BasisConfig::default() };
        let s = diagonalize(&p, &basis).unwrap();
        let ch = build_channels(&s, N_KEPT, 60).unwrap();
        (s, ch)
    })
}

fn representation() -> Representation {
    Representation::Eigenbasis {
        spectrum: setup().0.id(),
        n_kept: N_KEPT,
    }
}

/// `(A A† + εI) / Tr(A A† + εI)` from raw entries.
fn random_state(entries: &[(f64, f64)]) -> DensityMatrix {
    let a = Mat::<c64>::from_fn(N_KEPT, N_KEPT, |i, j| {
        let (re, im) = entries[i * N_KEPT + j];
        c64::new(re, im)
    });
    let mut m = &a * a.adjoint();
    for i in 0..N_KEPT {
        m[(i, i)] += c64::new(1e-3, 0.0);
    }
    let tr: f64 = (0..N_KEPT).map(|i| m[(i, i)].re).sum();
    for i in 0..N_KEPT {
        for j in 0..N_KEPT {
            m[(i, j)] = m[(i, j)] / tr;
        }
    }
    DensityMatrix::new(representation(), m).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), N_KEPT * N_KEPT)
}

fn hermiticity_defect(m: &Mat<c64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn detailed_balance(t in 0.05f64..2.0) {
        let (s, ch) = setup();
        let bath = BathSpec::ohmic(t).unwrap();
        let rates = RateMatrix::new(ch, &bath).unwrap();
        for j in 0..N_KEPT {
            for k in 0..N_KEPT {
                let (up, down) = (rates.rate(j, k), rates.rate(k, j));
                let gap = s.energies[j] - s.energies[k];
                if up > 1e-200 && down > 1e-200 && gap.abs() > 1e-9 {
                    let ratio = (up / down).ln();
                    prop_assert!((ratio + gap / t).abs() < 1e-8 * (gap / t).abs().max(1.0),
                        "{} vs {}", ratio, -gap / t);
                }
            }
        }
    }

    #[test]
    fn bose_occupation_ratio(gap in 0.01f64..5.0, t in 0.05f64..3.0) {
        let n = bose_occupation(gap, t).unwrap();
        prop_assert!(((n + 1.0) / n - (gap / t).exp()).abs() < 1e-9 * (gap / t).exp());
    }

    #[test]
    fn evolution_keeps_a_state(e in entries(), t in 0.1f64..1.0, tau in 1.0f64..50.0) {
        let (_, ch) = setup();
        let generator = Generator::new(ch, &BathSpec::ohmic(t).unwrap()).unwrap();
        let rho = random_state(&e);
        let out = generator.evolve(&rho, tau, 0.1).unwrap().final_state;
        let m = out.matrix();
        let tr: f64 = (0..N_KEPT).map(|i| m[(i, i)].re).sum();
        prop_assert!((tr - 1.0).abs() < 1e-12, "trace {}", tr);
        prop_assert!(hermiticity_defect(m) < 1e-12);
        let low = out.eigenvalues().unwrap().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(low > -1e-12, "eigenvalue {}", low);
    }

    #[test]
    fn relative_entropy_is_nonnegative(a in entries(), b in entries()) {
        let (rho, sigma) = (random_state(&a), random_state(&b));
        prop_assert!(relative_entropy(&rho, &sigma).unwrap() >= -1e-10);
        prop_assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-9);
    }

    #[test]
    fn fidelity_bounds_and_symmetry(a in entries(), b in entries()) {
        let (rho, sigma) = (random_state(&a), random_state(&b));
        let f = uhlmann_fidelity(&rho, &sigma).unwrap();
        let g = uhlmann_fidelity(&sigma, &rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - g).abs() < 1e-8, "{} vs {}", f, g);
        prop_assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        // Fuchs–van de Graaf for the root fidelity: 1 − F ≤ T ≤ √(1 − F²).
        let d = trace_distance(&rho, &sigma).unwrap();
        prop_assert!(d <= 1.0 + 1e-12);
        prop_assert!(1.0 - f <= d + 1e-8);
        prop_assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-8);
    }
}
