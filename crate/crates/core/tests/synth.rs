mod common;

use common::*;
use hodgeflow::io::{complex_from_json, complex_to_json, signals_from_csv, signals_to_csv};
use hodgeflow::synth::{
    add_noise, experiment_pe_vs_snr, experiment_recovery_vs_samples, noise_sigma, pe_csv,
    random_bandlimited, random_complex, random_complex_with, recovery_csv, stream_rng,
    ExperimentConfig, Purpose, Snr,
};
use hodgeflow::{build_incidence, HodgeBasis, Layer};
use proptest::prelude::*;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        num_vertices: 15,
        edge_prob: 0.3,
        num_signals: 20,
        snr_db: vec![Snr(0.0), Snr(10.0), Snr(f64::INFINITY)],
        trials: 4,
        training_signals: 200,
        ..Default::default()
    }
}

#[test]
fn fixed_seed_gives_identical_json() {
    let a = complex_to_json(&random_complex(42, 20, 0.3, 0.5).unwrap());
    let b = complex_to_json(&random_complex(42, 20, 0.3, 0.5).unwrap());
    assert_eq!(a, b);
    let back = complex_from_json(&a).unwrap().unwrap();
    assert_eq!(complex_to_json(&back), a);
    assert_ne!(
        a,
        complex_to_json(&random_complex(43, 20, 0.3, 0.5).unwrap())
    );
}

#[test]
fn generated_complexes_are_connected_and_valid() {
    for seed in 0..10 {
        let c = random_complex(seed, 25, 0.2, 0.5).unwrap();
        assert_eq!(union_find_components(25, c.edges()), 1);
        let ip = build_incidence(&c);
        assert!(ip.boundary_product().iter().all(|&v| v == 0));
        let cliques = scan_cliques(25, c.edges()).len();
        assert_eq!(c.num_triangles(), (0.5 * cliques as f64).ceil() as usize);
    }
}

#[test]
fn bandlimited_signal_is_supported_on_band() {
    let ip = build_incidence(&fig1());
    let basis = HodgeBasis::with_default_tol(&ip).unwrap();
    let band = [1, 4, 9];
    let s = random_bandlimited(&basis, Layer::Edge, &band, 3).unwrap();
    let hat = basis.gft(&s).unwrap();
    for k in 0..11 {
        if !band.contains(&k) {
            assert!(hat[k].abs() <= 1e-12);
        }
    }
}

#[test]
fn empirical_snr_matches_target() {
    let ip = build_incidence(&fig1());
    let basis = HodgeBasis::with_default_tol(&ip).unwrap();
    let s = random_bandlimited(&basis, Layer::Edge, &(0..11).collect::<Vec<_>>(), 1).unwrap();
    for target in [-6.0, 0.0, 12.0] {
        let mut noise_energy = 0.0;
        let n = 10_000;
        for seed in 0..n {
            noise_energy += (add_noise(&s, target, seed).values - &s.values).norm_squared();
        }
        let snr = 10.0 * (s.values.norm_squared() / (noise_energy / n as f64)).log10();
        assert!((snr - target).abs() <= 0.2, "target {target} got {snr}");
    }
    assert_eq!(noise_sigma(4.0, 4, f64::INFINITY), 0.0);
}

#[test]
fn signals_csv_round_trips() {
    let x = gaussian_mat(&mut rng(5), 7, 3);
    let text = signals_to_csv(Some(Layer::Edge), &x);
    let (layer, back) = signals_from_csv(&text).unwrap();
    assert_eq!(layer, Some(Layer::Edge));
    assert_eq!(back, x);
}

#[test]
fn pe_experiment_is_deterministic_and_bounded() {
    let cfg = small_config();
    let rows = experiment_pe_vs_snr(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        for pe in [r.pe_mtv, r.pe_pcabfmtv] {
            assert!((0.0..=1.0).contains(&pe));
        }
    }
    assert_eq!(rows[2].pe_mtv, 0.0, "noiseless harmonic row");
    let again = experiment_pe_vs_snr(&cfg).unwrap();
    assert_eq!(pe_csv(&cfg, &rows), pe_csv(&cfg, &again));

    let single = ExperimentConfig { trials: 1, ..cfg };
    assert_eq!(
        pe_csv(&single, &experiment_pe_vs_snr(&single).unwrap()),
        pe_csv(&single, &experiment_pe_vs_snr(&single).unwrap())
    );
}

#[test]
fn recovery_experiment_rows() {
    let cfg = ExperimentConfig {
        num_vertices: 12,
        edge_prob: 0.4,
        trials: 6,
        band_size: 5,
        budgets: vec![3, 5, 8, 1000],
        ..Default::default()
    };
    let rows = experiment_recovery_vs_samples(&cfg).unwrap();
    assert_eq!(rows[0].recovered, 0);
    assert_eq!(rows[0].median_relative_error, None);
    assert_eq!(rows[0].not_recoverable, 6);
    for r in &rows[1..3] {
        assert!(r.recovered > 0);
        assert!(r.max_relative_error.unwrap() <= 1e-6);
    }
    assert_eq!(rows[3].skipped, 6);
    let csv = recovery_csv(&cfg, &rows);
    assert!(
        csv.lines()
            .any(|l| l.starts_with("3,,,0,6,0,NotRecoverable")),
        "{csv}"
    );
    assert_eq!(
        csv,
        recovery_csv(&cfg, &experiment_recovery_vs_samples(&cfg).unwrap())
    );
}

#[test]
fn full_budget_recovery_is_exact() {
    for seed in 0..5 {
        let mut r = stream_rng(seed, 0, Purpose::Complex);
        let c = random_complex_with(&mut r, 10, 0.4, 0.5).unwrap();
        let cfg = ExperimentConfig {
            seed,
            num_vertices: 10,
            edge_prob: 0.4,
            trials: 1,
            band_size: 4,
            budgets: vec![c.num_edges()],
            ..Default::default()
        };
        let rows = experiment_recovery_vs_samples(&cfg).unwrap();
        assert_eq!(rows[0].recovered, 1);
        assert!(rows[0].max_relative_error.unwrap() <= 1e-10);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = ExperimentConfig {
        edge_prob: 1.5,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let bad = ExperimentConfig {
        trials: 0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    assert!(serde_json::from_str::<ExperimentConfig>(r#"{"unknown_field": 1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generator_is_a_pure_function_of_seed(seed in any::<u64>(), fill in 0.0f64..=1.0) {
        let a = random_complex(seed, 12, 0.4, fill);
        let b = random_complex(seed, 12, 0.4, fill);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "nondeterministic outcome"),
        }
    }
}
