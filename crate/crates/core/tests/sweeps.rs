use otto_core::disorder::DisorderSpec;
use otto_core::model::EngineParams;
use otto_core::sweep::{run_sweep, Output, SweepAxis, SweepSpec};

fn reference(tau_us: f64) -> EngineParams {
    EngineParams::nmr_reference(tau_us, 0.0, 0.99).unwrap()
}

#[test]
fn transition_probability_against_driving_time() {
    let taus: Vec<f64> = (0..=35).map(|k| 50.0 + 10.0 * k as f64).collect();
    let mut spec = SweepSpec::new(reference(100.0), SweepAxis::Tau, taus.clone());
    spec.g_series = vec![0.0, 0.01, 0.2];
    spec.outputs = [Output::Xi].into_iter().collect();
    spec.resolution = 8000;
    let rows = run_sweep(&spec).unwrap();
    let curve = |g: f64| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.g == g)
            .map(|r| r.xi.unwrap())
            .collect()
    };
    let (flat, strong) = (curve(0.0), curve(0.2));
    assert_eq!(flat.len(), taus.len());
    let window = flat.iter().zip(&strong).filter(|(a, b)| b > a).count();
    assert!(window > 0);
    let peak =
        (1..strong.len() - 1).any(|i| strong[i] > strong[i - 1] && strong[i] > strong[i + 1]);
    assert!(peak, "no interior maximum in {strong:?}");
}

#[test]
fn best_field_ratio_at_short_stroke() {
    let mut spec = SweepSpec::new(reference(100.0), SweepAxis::PPlusHot, vec![0.9, 0.95, 0.99]);
    spec.g_series = vec![0.0, 0.1, 0.2, 0.3];
    spec.outputs = [Output::Eta, Output::DeltaEtaVsG0].into_iter().collect();
    let rows = run_sweep(&spec).unwrap();
    let at_099: Vec<_> = rows.iter().filter(|r| r.p_plus_hot == 0.99).collect();
    let best = at_099
        .iter()
        .max_by(|a, b| a.eta.unwrap().total_cmp(&b.eta.unwrap()))
        .unwrap();
    assert_eq!(best.g, 0.2);
    assert!(at_099.iter().all(|r| r.delta_eta_vs_g0.unwrap() >= 0.0));
}

#[test]
fn zero_strength_sigma_sweep_matches_clean_row() {
    let base = EngineParams::nmr_reference(100.0, 0.2, 0.99).unwrap();
    let mut spec = SweepSpec::new(base, SweepAxis::Sigma, vec![0.0, 0.05]);
    spec.outputs = [Output::Eta, Output::QuenchedEta].into_iter().collect();
    spec.resolution = 1000;
    spec.disorder = Some(DisorderSpec {
        n_samples: 50,
        n_steps: 1000,
        ..DisorderSpec::default()
    });
    let rows = run_sweep(&spec).unwrap();
    assert_eq!(
        rows[0].quenched_eta.unwrap().to_bits(),
        rows[0].eta.unwrap().to_bits()
    );
    assert_ne!(rows[1].quenched_eta, rows[1].eta);
}
