use otto_core::cycle::simulate;
use otto_core::disorder::{quenched_efficiency, AveragingMethod, DisorderKind, DisorderSpec};
use otto_core::model::EngineParams;

const STEPS: usize = 2_000;

fn params(g: f64, p_hot: f64) -> EngineParams {
    EngineParams::nmr_reference(100.0, g, p_hot).unwrap()
}

fn quad(kind: DisorderKind, sigma: f64, order: usize) -> DisorderSpec {
    DisorderSpec {
        kind,
        sigma,
        method: AveragingMethod::Quadrature,
        quadrature_order: order,
        n_steps: STEPS,
        ..DisorderSpec::default()
    }
}

fn mc(kind: DisorderKind, sigma: f64, n: usize, seed: u64) -> DisorderSpec {
    DisorderSpec {
        kind,
        sigma,
        n_samples: n,
        seed,
        method: AveragingMethod::MonteCarlo,
        n_steps: STEPS,
        ..DisorderSpec::default()
    }
}

#[test]
fn continuity_at_zero_strength() {
    let p = params(0.2, 0.99);
    let clean = simulate(&p, STEPS).unwrap().eta;
    for kind in [DisorderKind::Gaussian, DisorderKind::Uniform] {
        let q = quenched_efficiency(&p, &quad(kind, 1e-4, 8)).unwrap();
        assert!((q.mean_eta - clean).abs() < 1e-4);
    }
}

#[test]
fn quadrature_converges_in_order() {
    let p = params(0.2, 0.99);
    for kind in [DisorderKind::Gaussian, DisorderKind::Uniform] {
        for sigma in [0.01, 0.05, 0.1] {
            let a = quenched_efficiency(&p, &quad(kind, sigma, 12))
                .unwrap()
                .mean_eta;
            let b = quenched_efficiency(&p, &quad(kind, sigma, 24))
                .unwrap()
                .mean_eta;
            assert!((a - b).abs() < 1e-8, "{kind} sigma {sigma}: {a} vs {b}");
        }
    }
}

#[test]
fn quadrature_ignores_sample_count_and_seed() {
    let p = params(0.2, 0.9);
    let a = quenched_efficiency(&p, &quad(DisorderKind::Gaussian, 0.05, 6)).unwrap();
    let b = quenched_efficiency(
        &p,
        &DisorderSpec {
            n_samples: 17,
            seed: 99,
            ..quad(DisorderKind::Gaussian, 0.05, 6)
        },
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.std_error, 0.0);
    assert_eq!(a.n_effective + a.rejected, 36);
}

#[test]
fn disorder_does_not_raise_efficiency() {
    for p_hot in [0.9, 0.99] {
        let p = params(0.2, p_hot);
        let clean = simulate(&p, STEPS).unwrap().eta;
        for sigma in [0.01, 0.05, 0.1] {
            let q = quenched_efficiency(&p, &mc(DisorderKind::Gaussian, sigma, 2000, 3)).unwrap();
            assert!(
                q.mean_eta <= clean + 3.0 * q.std_error,
                "p_hot {p_hot}, sigma {sigma}: {} > {clean} + 3 x {}",
                q.mean_eta,
                q.std_error
            );
        }
    }
}

#[test]
fn uniform_monte_carlo_agrees_with_legendre_rule() {
    let p = params(0.2, 0.99);
    for sigma in [0.05, 0.1] {
        let m = quenched_efficiency(&p, &mc(DisorderKind::Uniform, sigma, 4000, 11)).unwrap();
        let q = quenched_efficiency(&p, &quad(DisorderKind::Uniform, sigma, 12)).unwrap();
        assert!((m.mean_eta - q.mean_eta).abs() < 3.0 * m.std_error);
    }
}

#[test]
fn seeds_change_monte_carlo_but_not_its_expectation() {
    let p = params(0.2, 0.99);
    let a = quenched_efficiency(&p, &mc(DisorderKind::Gaussian, 0.05, 1000, 1)).unwrap();
    let b = quenched_efficiency(&p, &mc(DisorderKind::Gaussian, 0.05, 1000, 2)).unwrap();
    assert_ne!(a.mean_eta, b.mean_eta);
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean_eta - b.mean_eta).abs() < 4.0 * se);
}
