//! Module-level invariants checked against independent oracles.

use proptest::prelude::*;

use nonlocal_spectral::analysis::{self, eigenfunction_l2_distance, solve_problem};
use nonlocal_spectral::chebyshev::{self, ChebBasisSpec, Parity};
use nonlocal_spectral::fourier;
use nonlocal_spectral::{BoundaryCondition, Interval, Micromodulus, SpectralProblem};

const LEVELS: [usize; 4] = [20, 40, 80, 160];

fn benchmark() -> Micromodulus {
    Micromodulus::benchmark(3.0)
}

fn cheb(n: usize) -> SpectralProblem {
    SpectralProblem::chebyshev(benchmark(), n, Interval::periodic_cell(), BoundaryCondition::Periodic).unwrap()
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn fourier_dominates_multiplier_at_matched_frequency() {
    let k = benchmark();
    for n in LEVELS {
        let lambda = fourier::frequency_eigenvalues(&SpectralProblem::fourier(k.clone(), n).unwrap()).unwrap();
        for (h, l) in lambda.iter().enumerate() {
            assert!(*l >= k.fourier_multiplier(h as f64).lambda - 1e-6, "N={n} h={h}");
        }
    }
}

#[test]
fn fourier_spectrum_structure() {
    let k = benchmark();
    let d = fourier::eigen_fourier(&SpectralProblem::fourier(k.clone(), 40).unwrap()).unwrap();
    assert_eq!(d.values[0], 0.0);
    for pair in d.values[1..].chunks(2) {
        assert_eq!(pair[0], pair[1]);
    }
    assert!(d.values.iter().all(|v| (0.0..=2.0 * k.beta()).contains(v)));
}

#[test]
fn fourier_eigenvalue_convergence_order() {
    // the FFT path is exact to rounding at every N, so there is no decay to observe
    let k = benchmark();
    for h in 1..=5 {
        let errors: Vec<f64> = LEVELS
            .iter()
            .map(|&n| {
                let l = fourier::frequency_eigenvalues(&SpectralProblem::fourier(k.clone(), n).unwrap()).unwrap();
                (l[h] - k.fourier_multiplier(h as f64).lambda).abs()
            })
            .collect();
        let orders = observed_orders(&errors);
        assert!(orders.iter().all(|o| *o >= 1.9), "h={h}: errors {errors:?}, orders {orders:?}");
    }
}

#[test]
fn fourier_eigenfunction_stable_under_refinement() {
    let k = benchmark();
    let coarse = fourier::eigen_fourier(&SpectralProblem::fourier(k.clone(), 20).unwrap()).unwrap();
    let fine = fourier::eigen_fourier(&SpectralProblem::fourier(k, 160).unwrap()).unwrap();
    let d = eigenfunction_l2_distance(&coarse.eigenfunction(1).unwrap(), &fine.eigenfunction(1).unwrap(), 2001).unwrap();
    assert!(d <= 1e-8, "{d}");
}

#[test]
fn chebyshev_assembled_form_is_nonnegative() {
    let beta = benchmark().beta();
    for n in [20, 40] {
        let s = chebyshev::assemble_chebyshev(&cheb(n)).unwrap();
        let sym = (&s.a + s.a.transpose()) * 0.5;
        let min = sym.symmetric_eigenvalues().min();
        assert!(min >= -1e-8 * beta, "N={n}: {min}");
    }
}

#[test]
fn chebyshev_monotone_refinement() {
    let spectra: Vec<Vec<f64>> = LEVELS.iter().map(|&n| solve_problem(&cheb(n), None).unwrap().values).collect();
    for k in 0..=8 {
        for w in spectra.windows(2) {
            assert!(w[1][k] <= w[0][k] + 1e-6, "k={k}: {} then {}", w[0][k], w[1][k]);
        }
    }
}

#[test]
fn chebyshev_eigenfunction_convergence_order() {
    let decs: Vec<_> = LEVELS.iter().map(|&n| solve_problem(&cheb(n), None).unwrap()).collect();
    for k in 0..=5 {
        let dist: Vec<f64> = decs
            .windows(2)
            .map(|w| eigenfunction_l2_distance(&w[0].eigenfunction(k).unwrap(), &w[1].eigenfunction(k).unwrap(), 4001).unwrap())
            .collect();
        let orders = observed_orders(&dist);
        assert!(orders.iter().all(|o| *o >= 1.5), "k={k}: distances {dist:?}, orders {orders:?}");
    }
}

#[test]
fn chebyshev_even_subbasis_matches_deduplicated_fourier() {
    let even = chebyshev::eigen_with_parity(&cheb(160), Parity::EvenOnly).unwrap();
    let mut f = fourier::frequency_eigenvalues(&SpectralProblem::fourier(benchmark(), 160).unwrap()).unwrap();
    f.sort_by(f64::total_cmp);
    let dev: Vec<f64> = (0..10).map(|i| (even.values[i] - f[i]).abs()).collect();
    assert!(dev.iter().all(|d| *d <= 1e-3), "{dev:?}");
}

#[test]
fn antiperiodic_reference_is_stable() {
    let domain = Interval::new(-1.0, 1.0).unwrap();
    let a = chebyshev::antiperiodic_eigen(&Micromodulus::benchmark(1.0), domain, 50).unwrap();
    let b = chebyshev::antiperiodic_eigen(&Micromodulus::benchmark(1.0), domain, 100).unwrap();
    for k in 0..8 {
        assert!(((a.values[k] - b.values[k]) / b.values[k]).abs() <= 1e-4, "k={k}");
    }
}

#[test]
fn rate_of_exact_quadratic_decay() {
    let ns = [20, 40, 80];
    let e: Vec<f64> = ns.iter().map(|&n| 1.0 / (n * n) as f64).collect();
    let r = analysis::convergence_rates(&ns, &e);
    assert_eq!(r[0], None);
    assert!(r[1..].iter().all(|x| (x.unwrap() - 2.0).abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fourier_spectrum_bounds(amp in 0.1f64..5.0, width in 0.2f64..3.0, delta in 0.05f64..3.0) {
        let k = Micromodulus::gaussian(amp, width, delta).unwrap();
        let d = fourier::eigen_fourier(&SpectralProblem::fourier(k.clone(), 24).unwrap()).unwrap();
        let beta = k.beta();
        prop_assert_eq!(d.values[0], 0.0);
        for v in &d.values {
            prop_assert!(*v >= 0.0 && *v <= 2.0 * beta + 1e-12);
        }
        for pair in d.values[1..].chunks(2) {
            prop_assert_eq!(pair[0], pair[1]);
        }
    }

    #[test]
    fn chebyshev_values_bounded(k in 0usize..40, t in 0.0f64..=1.0) {
        let domain = Interval::new(-2.0, 5.0).unwrap();
        let spec = ChebBasisSpec { n: 40, parity: Parity::All, domain };
        let x = domain.a + t * domain.length();
        let v = chebyshev::eval_t(&spec, k, x).unwrap();
        prop_assert!(v.abs() <= 1.0 + 1e-15);
        let s = (x - domain.center()) / domain.half_width();
        prop_assert!((v - (k as f64 * s.clamp(-1.0, 1.0).acos()).cos()).abs() < 1e-12);
    }

    #[test]
    fn relative_error_is_scale_free(values in prop::collection::vec(0.1f64..4.0, 1..30), scale in 0.01f64..100.0, shift in -0.1f64..0.1) {
        let approx: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let e1 = analysis::relative_l2_error(&approx, &values).unwrap();
        let sa: Vec<f64> = approx.iter().map(|v| v * scale).collect();
        let se: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let e2 = analysis::relative_l2_error(&sa, &se).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.max(1.0));
    }

    #[test]
    fn multiplier_oracle_pairs(delta in 0.1f64..3.0, m in 0usize..20) {
        let k = Micromodulus::benchmark(delta);
        let paired = analysis::multiplier_oracle(&k, Interval::periodic_cell(), 2 * m + 1, false);
        let mut expect = vec![k.fourier_multiplier(0.0).lambda];
        for h in 1..=m {
            let l = k.fourier_multiplier(h as f64).lambda;
            expect.extend([l, l]);
        }
        expect.sort_by(f64::total_cmp);
        prop_assert_eq!(paired, expect);
    }
}
