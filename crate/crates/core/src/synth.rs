//! Seeded generators and Monte-Carlo experiments.
//!
//! Every random draw comes from a ChaCha8 stream keyed by `(seed, trial, purpose)`
//! through SplitMix64, so results do not depend on thread scheduling.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::complex::{
    build_incidence, enumerate_3cliques, IncidencePair, Layer, LayerSignal, SimplicialComplex2,
};
use crate::error::{Error, Result};
use crate::inference::{self, CliqueCandidates, EnergyTest, PcaBfmtvOptions, PcaDim};
use crate::linalg;
use crate::sampling::{self, LayerSamples};
use crate::spectral::HodgeBasis;

/// Attempts at drawing a connected graph before giving up.
pub const MAX_GRAPH_ATTEMPTS: usize = 100;

/// Independent random streams used within one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Complex = 1,
    Signal = 2,
    Noise = 3,
    Band = 4,
    Training = 5,
    TrainingNoise = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 generator for the stream `(seed, trial, purpose)`.
pub fn stream_rng(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ purpose as u64);
    ChaCha8Rng::seed_from_u64(key)
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must lie in [0, 1], got {p}"),
        });
    }
    Ok(())
}

/// Erdos-Renyi graph conditioned on connectivity, with a uniformly random
/// `ceil(fill_fraction * #cliques)` of its 3-cliques filled.
pub fn random_complex(
    seed: u64,
    num_vertices: usize,
    edge_prob: f64,
    fill_fraction: f64,
) -> Result<SimplicialComplex2> {
    random_complex_with(
        &mut stream_rng(seed, 0, Purpose::Complex),
        num_vertices,
        edge_prob,
        fill_fraction,
    )
}

pub fn random_complex_with<R: Rng>(
    rng: &mut R,
    num_vertices: usize,
    edge_prob: f64,
    fill_fraction: f64,
) -> Result<SimplicialComplex2> {
    check_probability("edge_prob", edge_prob)?;
    check_probability("fill_fraction", fill_fraction)?;
    if num_vertices == 0 {
        return Err(Error::NoVertices);
    }
    for _ in 0..MAX_GRAPH_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..num_vertices {
            for j in i + 1..num_vertices {
                if rng.random::<f64>() < edge_prob {
                    edges.push([i, j]);
                }
            }
        }
        let graph = SimplicialComplex2::new(num_vertices, edges, vec![])?;
        if graph.connected_components() != 1 {
            continue;
        }
        let cliques = enumerate_3cliques(&graph);
        let k = ((fill_fraction * cliques.len() as f64).ceil() as usize).min(cliques.len());
        let mut chosen = index::sample(rng, cliques.len(), k).into_vec();
        chosen.sort_unstable();
        return graph.with_triangles(chosen.into_iter().map(|n| cliques[n]).collect());
    }
    Err(Error::DisconnectedAfterRetries(MAX_GRAPH_ATTEMPTS))
}

/// Matrix of standard normal entries.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    // column-major fill order is part of the stream definition
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `U_F c` with `c` standard normal.
pub fn random_bandlimited(
    basis: &HodgeBasis,
    layer: Layer,
    band: &[usize],
    seed: u64,
) -> Result<LayerSignal> {
    random_bandlimited_with(
        &mut stream_rng(seed, 0, Purpose::Signal),
        basis,
        layer,
        band,
    )
}

pub fn random_bandlimited_with<R: Rng>(
    rng: &mut R,
    basis: &HodgeBasis,
    layer: Layer,
    band: &[usize],
) -> Result<LayerSignal> {
    let u = basis.eigenvectors(layer);
    for &k in band {
        if k >= u.ncols() {
            return Err(Error::IndexOutOfBounds {
                what: "frequency set",
                index: k,
                size: u.ncols(),
            });
        }
    }
    let uf = linalg::select_columns(u, band);
    let c = gaussian_matrix(rng, band.len(), 1);
    Ok(LayerSignal::new(layer, (uf * c).column(0).into_owned()))
}

/// Noise standard deviation giving `10 log10(|s|^2 / E|v|^2) = snr_db` for `n` entries.
pub fn noise_sigma(signal_energy: f64, n: usize, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY || n == 0 {
        return 0.0;
    }
    (signal_energy / (n as f64 * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// `s + v` with i.i.d. normal `v` at the given SNR; `+inf` returns `s` unchanged.
pub fn add_noise(s: &LayerSignal, snr_db: f64, seed: u64) -> LayerSignal {
    add_noise_with(&mut stream_rng(seed, 0, Purpose::Noise), s, snr_db)
}

pub fn add_noise_with<R: Rng>(rng: &mut R, s: &LayerSignal, snr_db: f64) -> LayerSignal {
    let sigma = noise_sigma(s.values.norm_squared(), s.len(), snr_db);
    if sigma == 0.0 {
        return s.clone();
    }
    let v = gaussian_matrix(rng, s.len(), 1);
    LayerSignal::new(s.layer, &s.values + v.column(0) * sigma)
}

/// SNR in dB, written as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Snr(pub f64);

impl std::str::FromStr for Snr {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "inf" | "+inf" | "Inf" | "infinity" => Ok(Snr(f64::INFINITY)),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan() && *v != f64::NEG_INFINITY)
                .map(Snr)
                .ok_or_else(|| format!("invalid SNR {t:?}")),
        }
    }
}

impl std::fmt::Display for Snr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            ser.serialize_f64(self.0)
        } else {
            ser.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(v) => Ok(Snr(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parameters of the Monte-Carlo experiments; every field has a default.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub num_vertices: usize,
    pub edge_prob: f64,
    pub fill_fraction: f64,
    /// Signals observed per trial.
    pub num_signals: usize,
    pub snr_db: Vec<Snr>,
    /// Triangles to detect; the true number of filled triangles when absent.
    pub t_star: Option<usize>,
    pub trials: usize,
    /// Solenoidal frequencies mixed into the observed flows.
    pub sol_dim: usize,
    /// PCA dimension; the dimension of the true signal subspace when absent.
    pub pca_dim: Option<usize>,
    pub gamma: f64,
    pub max_iter: usize,
    pub eta: f64,
    /// Independent observations used to estimate the covariance; zero uses the observed signals.
    pub training_signals: usize,
    /// Band size of the edge signals in the recovery experiment.
    pub band_size: usize,
    /// Sample budgets of the recovery experiment.
    pub budgets: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            num_vertices: 50,
            edge_prob: 0.22,
            fill_fraction: 0.5,
            num_signals: 50,
            snr_db: [-6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0]
                .into_iter()
                .map(Snr)
                .collect(),
            t_star: None,
            trials: 200,
            sol_dim: 0,
            pca_dim: None,
            gamma: 1e-2,
            max_iter: 100,
            eta: inference::DEFAULT_ETA,
            training_signals: 1000,
            band_size: 10,
            budgets: vec![5, 10, 15, 20, 30, 40, 60],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("edge_prob", self.edge_prob)?;
        check_probability("fill_fraction", self.fill_fraction)?;
        let positive = [
            ("trials", self.trials),
            ("num_vertices", self.num_vertices),
            ("num_signals", self.num_signals),
            ("max_iter", self.max_iter),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be positive, got {}", self.gamma),
            });
        }
        if self
            .snr_db
            .iter()
            .any(|s| s.0.is_nan() || s.0 == f64::NEG_INFINITY)
        {
            return Err(Error::InvalidParameter {
                name: "snr_db",
                reason: "entries must be numbers or \"inf\"".into(),
            });
        }
        Ok(())
    }

    /// `# key=value` lines recording the configuration.
    pub fn header(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                let _ = writeln!(out, "# {k}={v}");
            }
        }
        out
    }
}

/// Floats in CSV and JSON output: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One SNR point of [`experiment_pe_vs_snr`].
#[derive(Clone, Debug, Serialize)]
pub struct PeRow {
    pub snr_db: Snr,
    pub pe_mtv: f64,
    pub pe_pcabfmtv: f64,
    pub stderr_mtv: f64,
    pub stderr_pcabfmtv: f64,
    /// Trials in which PCA-BFMTV stopped without reaching a fixed point.
    pub pcabfmtv_not_converged: usize,
}

/// Per-trial output of the triangle-inference experiment.
#[derive(Clone, Debug)]
pub struct PeTrial {
    pub pe_mtv: Vec<f64>,
    pub pe_pcabfmtv: Vec<f64>,
    pub converged: Vec<bool>,
    /// Objective traces of every PCA-BFMTV run, one per SNR point.
    pub objective_traces: Vec<Vec<f64>>,
}

/// Orthonormal basis of the gradient flows, from the nonzero `L0` eigenvectors.
fn irrotational_basis(ip: &IncidencePair) -> DMatrix<f64> {
    let l0 = linalg::sym_eigen(&crate::spectral::laplacian(ip, Layer::Vertex));
    let cutoff = crate::spectral::DEFAULT_TOL * l0.max_value().max(1.0);
    let idx: Vec<usize> = (0..l0.len()).filter(|&k| l0.values[k] > cutoff).collect();
    let mut u = ip.b1_real().transpose() * linalg::select_columns(&l0.vectors, &idx);
    for mut col in u.column_iter_mut() {
        let n = col.norm();
        col /= n;
    }
    u
}

fn centered(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let mean = x.column_mean();
    for mut col in x.column_iter_mut() {
        col -= &mean;
    }
    x
}

/// Run one trial of the inference experiment at every SNR in `config`.
pub fn pe_trial(config: &ExperimentConfig, trial: u64) -> Result<PeTrial> {
    let seed = config.seed;
    let complex = random_complex_with(
        &mut stream_rng(seed, trial, Purpose::Complex),
        config.num_vertices,
        config.edge_prob,
        config.fill_fraction,
    )?;
    let graph = complex.graph();
    let ip = build_incidence(&complex);
    let basis = HodgeBasis::with_default_tol(&ip)?;
    let cands = CliqueCandidates::from_graph(&graph);
    let truth = cands.indicator(complex.triangles());
    let t_star = config.t_star.unwrap_or(complex.num_triangles());
    let e = complex.num_edges();
    let m = config.num_signals;

    let mut cols: Vec<usize> = basis.harm_idx().to_vec();
    let sol = basis.sol_idx();
    if config.sol_dim > sol.len() {
        return Err(Error::InvalidParameter {
            name: "sol_dim",
            reason: format!("complex has only {} solenoidal frequencies", sol.len()),
        });
    }
    let mut pick = index::sample(
        &mut stream_rng(seed, trial, Purpose::Band),
        sol.len(),
        config.sol_dim,
    )
    .into_vec();
    pick.sort_unstable();
    cols.extend(pick.into_iter().map(|k| sol[k]));
    let u_sig = linalg::select_columns(basis.eigenvectors(Layer::Edge), &cols);
    let clean =
        &u_sig * gaussian_matrix(&mut stream_rng(seed, trial, Purpose::Signal), cols.len(), m);
    let noise = gaussian_matrix(&mut stream_rng(seed, trial, Purpose::Noise), e, m);

    let u_irr = irrotational_basis(&build_incidence(&graph));
    let project = |x: &DMatrix<f64>| x - &u_irr * u_irr.tr_mul(x);
    let dim = config.pca_dim.unwrap_or(cols.len()).clamp(1, e);

    // covariance of sH-projected training data: C(sigma) = Cyy + sigma (Cyw + Cwy) + sigma^2 Cww
    let training = (config.training_signals > 0).then(|| {
        let n = config.training_signals;
        let y = project(&centered(
            &u_sig
                * gaussian_matrix(
                    &mut stream_rng(seed, trial, Purpose::Training),
                    cols.len(),
                    n,
                ),
        ));
        let w = project(&centered(gaussian_matrix(
            &mut stream_rng(seed, trial, Purpose::TrainingNoise),
            e,
            n,
        )));
        let cyy = &y * y.transpose() / n as f64;
        let cyw = &y * w.transpose() / n as f64;
        let cww = &w * w.transpose() / n as f64;
        (cyy, &cyw + cyw.transpose(), cww)
    });

    let mut out = PeTrial {
        pe_mtv: Vec::new(),
        pe_pcabfmtv: Vec::new(),
        converged: Vec::new(),
        objective_traces: Vec::new(),
    };
    for snr in &config.snr_db {
        let sigma = noise_sigma(clean.norm_squared(), e * m, snr.0);
        let x = &clean + &noise * sigma;
        let x_sh = EnergyTest::from_irr_basis(&u_irr, &x, config.eta)?.x_sh;
        let mtv = inference::mtv_infer(&cands, &x_sh, t_star)?;
        // training observations share the noise level of the data
        let covariance = training
            .as_ref()
            .map(|(cyy, cross, cww)| cyy + cross * sigma + cww * (sigma * sigma));
        let opts = PcaBfmtvOptions {
            dim: PcaDim::Fixed(dim),
            gamma: config.gamma,
            max_iter: config.max_iter,
            covariance,
        };
        let pca = inference::pca_bfmtv_infer(&cands, &x_sh, t_star, &opts)?;
        out.pe_mtv
            .push(inference::error_probability(&mtv.t, &truth));
        out.pe_pcabfmtv
            .push(inference::error_probability(&pca.inference.t, &truth));
        out.converged.push(pca.inference.converged);
        out.objective_traces.push(pca.inference.objective_trace);
    }
    Ok(out)
}

/// Error probability of MTV and PCA-BFMTV versus SNR, averaged over trials.
pub fn experiment_pe_vs_snr(config: &ExperimentConfig) -> Result<Vec<PeRow>> {
    Ok(summarize_pe(config, &pe_trials(config)?))
}

/// Every trial of the inference experiment, in trial order.
pub fn pe_trials(config: &ExperimentConfig) -> Result<Vec<PeTrial>> {
    config.validate()?;
    (0..config.trials as u64)
        .into_par_iter()
        .map(|k| pe_trial(config, k))
        .collect()
}

/// Per-SNR means and standard errors of the trials.
pub fn summarize_pe(config: &ExperimentConfig, trials: &[PeTrial]) -> Vec<PeRow> {
    config
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let mtv: Vec<f64> = trials.iter().map(|t| t.pe_mtv[i]).collect();
            let pca: Vec<f64> = trials.iter().map(|t| t.pe_pcabfmtv[i]).collect();
            let (pe_mtv, stderr_mtv) = mean_and_stderr(&mtv);
            let (pe_pcabfmtv, stderr_pcabfmtv) = mean_and_stderr(&pca);
            PeRow {
                snr_db: snr,
                pe_mtv,
                pe_pcabfmtv,
                stderr_mtv,
                stderr_pcabfmtv,
                pcabfmtv_not_converged: trials.iter().filter(|t| !t.converged[i]).count(),
            }
        })
        .collect()
}

pub fn pe_csv(config: &ExperimentConfig, rows: &[PeRow]) -> String {
    let mut out = config.header();
    out.push_str("snr_db,pe_mtv,pe_pcabfmtv,stderr_mtv,stderr_pcabfmtv,pcabfmtv_not_converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.snr_db,
            fmt_float(r.pe_mtv),
            fmt_float(r.pe_pcabfmtv),
            fmt_float(r.stderr_mtv),
            fmt_float(r.stderr_pcabfmtv),
            r.pcabfmtv_not_converged
        );
    }
    out
}

/// One budget of [`experiment_recovery_vs_samples`].
#[derive(Clone, Debug, Serialize)]
pub struct RecoveryRow {
    pub num_samples: usize,
    /// Median relative error over the recoverable trials; `None` when there were none.
    pub median_relative_error: Option<f64>,
    pub max_relative_error: Option<f64>,
    pub recovered: usize,
    pub not_recoverable: usize,
    /// Trials whose edge count is below the budget.
    pub skipped: usize,
}

/// Relative error of bandlimited edge-signal recovery from greedily chosen samples.
///
/// The band is the `band_size` lowest `L1` frequencies of each random complex.
pub fn experiment_recovery_vs_samples(config: &ExperimentConfig) -> Result<Vec<RecoveryRow>> {
    config.validate()?;
    // per trial, per budget: Some(Ok(err)) recovered, Some(Err(())) refused, None skipped
    let outcomes: Vec<Vec<Option<std::result::Result<f64, ()>>>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<_> {
            let complex = random_complex_with(
                &mut stream_rng(config.seed, trial, Purpose::Complex),
                config.num_vertices,
                config.edge_prob,
                config.fill_fraction,
            )?;
            let ip = build_incidence(&complex);
            let basis = HodgeBasis::with_default_tol(&ip)?;
            let e = ip.num_edges();
            let band: Vec<usize> = (0..config.band_size.min(e)).collect();
            let s = random_bandlimited_with(
                &mut stream_rng(config.seed, trial, Purpose::Signal),
                &basis,
                Layer::Edge,
                &band,
            )?;
            let mut row = Vec::with_capacity(config.budgets.len());
            for &budget in &config.budgets {
                if budget > e {
                    row.push(None);
                    continue;
                }
                if budget < band.len() {
                    row.push(Some(Err(())));
                    continue;
                }
                let set = sampling::select_samples_greedy(&basis, Layer::Edge, &band, budget)?;
                let samples = LayerSamples::observe(&s, &set)?;
                match sampling::recover_single_layer(&basis, &samples, &band) {
                    Ok(r) => row.push(Some(Ok((&r.values - &s.values).norm() / s.norm()))),
                    Err(Error::NotRecoverable { .. } | Error::SingularSystem(_)) => {
                        row.push(Some(Err(())))
                    }
                    Err(other) => return Err(other),
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    Ok(config
        .budgets
        .iter()
        .enumerate()
        .map(|(i, &budget)| {
            let mut errs: Vec<f64> = outcomes
                .iter()
                .filter_map(|r| r[i].and_then(|o| o.ok()))
                .collect();
            errs.sort_by(f64::total_cmp);
            let median = (!errs.is_empty()).then(|| {
                let k = errs.len();
                if k % 2 == 1 {
                    errs[k / 2]
                } else {
                    0.5 * (errs[k / 2 - 1] + errs[k / 2])
                }
            });
            RecoveryRow {
                num_samples: budget,
                median_relative_error: median,
                max_relative_error: errs.last().copied(),
                recovered: errs.len(),
                not_recoverable: outcomes
                    .iter()
                    .filter(|r| matches!(r[i], Some(Err(()))))
                    .count(),
                skipped: outcomes.iter().filter(|r| r[i].is_none()).count(),
            }
        })
        .collect())
}

pub fn recovery_csv(config: &ExperimentConfig, rows: &[RecoveryRow]) -> String {
    let mut out = config.header();
    out.push_str("num_samples,median_relative_error,max_relative_error,recovered,not_recoverable,skipped,status\n");
    for r in rows {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        let status = match (r.recovered, r.not_recoverable) {
            (0, 0) => "skipped",
            (0, _) => "NotRecoverable",
            _ => "ok",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.num_samples,
            opt(r.median_relative_error),
            opt(r.max_relative_error),
            r.recovered,
            r.not_recoverable,
            r.skipped,
            status
        );
    }
    out
}

/// Bandlimited noiseless signal for the complex in `ip`, as used by the CLI.
pub fn bandlimited_for(
    ip: &IncidencePair,
    layer: Layer,
    band: &[usize],
    seed: u64,
) -> Result<LayerSignal> {
    let basis = HodgeBasis::with_default_tol(ip)?;
    random_bandlimited(&basis, layer, band, seed)
}
