use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hodgeflow::complex::{self, build_incidence, Layer, LayerSignal, SimplicialComplex2};
use hodgeflow::flowfilter::{self, MetricSet, PfOptions};
use hodgeflow::inference::{self, CliqueCandidates, PcaBfmtvOptions, PcaDim};
use hodgeflow::sampling::{self, BandModel};
use hodgeflow::synth::{self, fmt_float, ExperimentConfig, Snr};
use hodgeflow::{io, spectral, Error, HodgeBasis, Subspace};
use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "hodgeflow",
    version,
    about = "Signal processing over simplicial complexes"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect or validate a complex.
    #[command(subcommand)]
    Complex(ComplexCmd),
    /// Eigenbases and total variation.
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Hodge decomposition of edge flows.
    Decompose(DecomposeArgs),
    /// Sample selection and bandlimited recovery.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Triangle inference and sparse coding.
    #[command(subcommand)]
    Infer(InferCmd),
    /// Smooth-plus-sparse edge-flow filtering.
    Filter(FilterArgs),
    /// Monte-Carlo experiments.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Random complexes and signals.
    #[command(subcommand)]
    Synth(SynthCmd),
}

#[derive(Args, Debug)]
struct ComplexArg {
    #[arg(long)]
    complex: PathBuf,
}

#[derive(Subcommand, Debug)]
enum ComplexCmd {
    Info(ComplexArg),
    Validate(ComplexArg),
}

#[derive(Subcommand, Debug)]
enum SpectralCmd {
    /// Eigenvalues and eigenvectors of one Hodge Laplacian.
    Basis {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
        layer: u8,
        #[arg(long, default_value_t = spectral::DEFAULT_TOL)]
        tol: f64,
    },
    /// Total variation of edge flows: sum of absolute curls and sum of squared curls.
    Tv {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long)]
        signal: PathBuf,
    },
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    c: ComplexArg,
    #[arg(long)]
    signal: PathBuf,
    /// Project onto one subspace instead: irr, sol, harm, not_irr, not_sol.
    #[arg(long)]
    project: Option<Subspace>,
}

#[derive(Subcommand, Debug)]
enum SampleCmd {
    /// Greedy sample selection for a band.
    Select {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
        layer: u8,
        #[arg(long, alias = "band-file")]
        band: PathBuf,
        #[arg(long)]
        budget: usize,
    },
    /// Localization norm of a sample set.
    Check {
        #[command(flatten)]
        c: ComplexArg,
        /// Sample-set JSON.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, alias = "band-file")]
        band: PathBuf,
    },
    /// Recover one layer from samples.
    Recover {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
        layer: u8,
        #[arg(long, alias = "band-file")]
        band: PathBuf,
        /// Samples CSV (index,value).
        #[arg(long)]
        samples: PathBuf,
    },
    /// Joint recovery from vertex and edge samples, plus triangle samples if given.
    ///
    /// The band file's F1 is the solenoidal-plus-harmonic band without triangle
    /// samples and the harmonic band with them.
    RecoverMulti {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long, alias = "band-file")]
        band: PathBuf,
        #[arg(long)]
        vertex_samples: PathBuf,
        #[arg(long)]
        edge_samples: PathBuf,
        #[arg(long)]
        triangle_samples: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InferArgs {
    /// Graph JSON; triangles, if present, are ignored.
    #[command(flatten)]
    c: ComplexArg,
    /// Edge flows, one per column.
    #[arg(long)]
    signals: PathBuf,
    /// Number of triangles, or `auto` for cross-validation.
    #[arg(long)]
    tstar: String,
    #[arg(long, default_value_t = inference::DEFAULT_ETA)]
    eta: f64,
    /// Relative basis-pursuit tolerance used by `--tstar auto`.
    #[arg(long, default_value_t = 0.1)]
    cv_eps: f64,
}

#[derive(Subcommand, Debug)]
enum InferCmd {
    Mtv(InferArgs),
    Pcabfmtv {
        #[command(flatten)]
        a: InferArgs,
        #[arg(long, conflicts_with = "pca_energy")]
        pca_dim: Option<usize>,
        /// Pick the PCA dimension capturing this fraction of the variance (default 0.95).
        #[arg(long)]
        pca_energy: Option<f64>,
        #[arg(long, default_value_t = 1e-2)]
        gamma: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Basis pursuit of each column in the L1 eigenbasis of the complex.
    Bp {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long)]
        signal: PathBuf,
        /// Absolute residual bound.
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    c: ComplexArg,
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, default_value_t = PfOptions::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = PfOptions::default().tol)]
    tol: f64,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Experiment configuration JSON; defaults for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ExperimentCmd {
    PeVsSnr(ConfigArg),
    RecoveryVsSamples(ConfigArg),
}

#[derive(Subcommand, Debug)]
enum SynthCmd {
    Complex {
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        edge_prob: f64,
        #[arg(long, default_value_t = 0.5)]
        fill: f64,
    },
    /// Bandlimited signals, optionally noisy.
    Signal {
        #[command(flatten)]
        c: ComplexArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
        layer: u8,
        /// Band JSON; the entry for the chosen layer is used.
        #[arg(long, alias = "band-file")]
        band: PathBuf,
        #[arg(long, default_value = "inf")]
        snr: Snr,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotRecoverable { .. } => 3,
            e if e.is_validation() => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// What a command produced: its output text and whether it is complete.
struct Output {
    text: String,
    partial: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            partial: false,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .init();
    eprintln!("# resolved config: {cli:?}");
    match run(&cli) {
        Ok(out) => {
            if let Err(f) = emit(&cli, &out.text) {
                eprintln!("error: {}", f.message);
                return ExitCode::from(f.code);
            }
            ExitCode::from(if out.partial { 3 } else { 0 })
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(p) => io::write_file(p, text).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn layer_of(k: u8) -> Layer {
    Layer::try_from(k).expect("clap restricts the range")
}

fn load(c: &ComplexArg) -> CliResult<(SimplicialComplex2, complex::IncidencePair)> {
    let cx = io::read_complex(&c.complex)?;
    let ip = build_incidence(&cx);
    Ok((cx, ip))
}

fn vec_json(v: &DVector<f64>) -> Value {
    Value::from(v.iter().copied().collect::<Vec<f64>>())
}

fn to_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn read_edge_signals(path: &Path, e: usize) -> CliResult<DMatrix<f64>> {
    Ok(io::read_layer_signals(path, Layer::Edge, e)?)
}

fn run(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Complex(cmd) => complex_cmd(cli, cmd),
        Command::Spectral(cmd) => spectral_cmd(cli, cmd),
        Command::Decompose(a) => decompose_cmd(cli, a),
        Command::Sample(cmd) => sample_cmd(cli, cmd),
        Command::Infer(cmd) => infer_cmd(cli, cmd),
        Command::Filter(a) => filter_cmd(cli, a),
        Command::Experiment(cmd) => experiment_cmd(cmd),
        Command::Synth(cmd) => synth_cmd(cli, cmd),
    }
}

fn complex_cmd(cli: &Cli, cmd: &ComplexCmd) -> CliResult<Output> {
    match cmd {
        ComplexCmd::Validate(c) => {
            let (cx, _) = load(c)?;
            Ok(Output::ok(format!(
                "valid: V={} E={} T={}\n",
                cx.num_vertices(),
                cx.num_edges(),
                cx.num_triangles()
            )))
        }
        ComplexCmd::Info(c) => {
            let (cx, ip) = load(c)?;
            let betti = complex::betti_numbers_exact(&ip);
            let cliques = complex::enumerate_3cliques(&cx).len();
            let text = match cli.format {
                Format::Json => to_text(&json!({
                    "V": cx.num_vertices(),
                    "E": cx.num_edges(),
                    "T": cx.num_triangles(),
                    "betti": betti,
                    "three_cliques": cliques,
                })),
                Format::Csv => format!(
                    "V,E,T,beta0,beta1,beta2,three_cliques\n{},{},{},{},{},{},{}\n",
                    cx.num_vertices(),
                    cx.num_edges(),
                    cx.num_triangles(),
                    betti[0],
                    betti[1],
                    betti[2],
                    cliques
                ),
            };
            Ok(Output::ok(text))
        }
    }
}

fn spectral_cmd(cli: &Cli, cmd: &SpectralCmd) -> CliResult<Output> {
    match cmd {
        SpectralCmd::Basis { c, layer, tol } => {
            let (_, ip) = load(c)?;
            let basis = HodgeBasis::new(&ip, *tol)?;
            let layer = layer_of(*layer);
            let text = match cli.format {
                Format::Csv => io::basis_to_csv(&basis, layer),
                Format::Json => {
                    let vecs = basis.eigenvectors(layer);
                    let cols: Vec<Value> = vecs
                        .column_iter()
                        .map(|c| vec_json(&c.into_owned()))
                        .collect();
                    let mut v = json!({
                        "layer": layer.order(),
                        "eigenvalues": vec_json(basis.eigenvalues(layer)),
                        "eigenvectors": cols,
                    });
                    if layer == Layer::Edge {
                        v["classes"] =
                            serde_json::to_value(basis.classes()).expect("classes serialize");
                    }
                    to_text(&v)
                }
            };
            Ok(Output::ok(text))
        }
        SpectralCmd::Tv { c, signal } => {
            let (_, ip) = load(c)?;
            let x = read_edge_signals(signal, ip.num_edges())?;
            let mut rows = Vec::new();
            for col in x.column_iter() {
                let s = LayerSignal::new(Layer::Edge, col.into_owned());
                rows.push((
                    spectral::lovasz_tv(&ip, &s)?,
                    spectral::relaxed_tv(&ip, &s)?,
                ));
            }
            let text = match cli.format {
                Format::Json => to_text(&json!({
                    "lovasz_tv": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                    "relaxed_tv": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
                })),
                Format::Csv => {
                    let mut t = String::from("lovasz_tv,relaxed_tv\n");
                    for (a, b) in rows {
                        t.push_str(&format!("{},{}\n", fmt_float(a), fmt_float(b)));
                    }
                    t
                }
            };
            Ok(Output::ok(text))
        }
    }
}

fn decompose_cmd(cli: &Cli, a: &DecomposeArgs) -> CliResult<Output> {
    let (_, ip) = load(&a.c)?;
    let x = read_edge_signals(&a.signal, ip.num_edges())?;
    if let Some(which) = a.project {
        let basis = HodgeBasis::with_default_tol(&ip)?;
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            let s = LayerSignal::new(Layer::Edge, col.into_owned());
            out.set_column(j, &hodgeflow::project_component(&basis, &s, which)?.values);
        }
        return Ok(Output::ok(io::signals_to_csv(Some(Layer::Edge), &out)));
    }
    let mut parts = Vec::new();
    for col in x.column_iter() {
        let s = LayerSignal::new(Layer::Edge, col.into_owned());
        parts.push(hodgeflow::decompose(&ip, &s)?);
    }
    let text = match cli.format {
        Format::Json => {
            let items: Vec<Value> = parts
                .iter()
                .map(|h| {
                    let [ei, es, eh] = h.energies();
                    json!({
                        "s_irr": vec_json(&h.s_irr),
                        "s_sol": vec_json(&h.s_sol),
                        "s_harm": vec_json(&h.s_harm),
                        "s0": vec_json(&h.s0_hat),
                        "s2": vec_json(&h.s2_hat),
                        "energy": {"irr": ei, "sol": es, "harm": eh},
                    })
                })
                .collect();
            to_text(&json!({ "signals": items }))
        }
        Format::Csv => {
            // columns: irr, sol, harm for each input signal
            let mut m = DMatrix::zeros(x.nrows(), 3 * parts.len());
            for (j, h) in parts.iter().enumerate() {
                m.set_column(3 * j, &h.s_irr);
                m.set_column(3 * j + 1, &h.s_sol);
                m.set_column(3 * j + 2, &h.s_harm);
            }
            format!(
                "# columns=irr,sol,harm per signal\n{}",
                io::signals_to_csv(Some(Layer::Edge), &m)
            )
        }
    };
    Ok(Output::ok(text))
}

fn not_recoverable_json(e: &Error) -> Value {
    match e {
        Error::NotRecoverable {
            layer,
            norm,
            samples,
            band,
            ..
        } => json!({
            "status": "NotRecoverable",
            "layer": layer.order(),
            "norm": norm,
            "samples": samples,
            "band": band,
            "message": e.to_string(),
        }),
        _ => json!({ "status": "error", "message": e.to_string() }),
    }
}

/// Report a refused recovery: write the status record and exit with code 3.
fn refused(e: Error) -> CliResult<Output> {
    eprintln!("error: {e}");
    Ok(Output {
        text: to_text(&not_recoverable_json(&e)),
        partial: true,
    })
}

fn sample_cmd(cli: &Cli, cmd: &SampleCmd) -> CliResult<Output> {
    match cmd {
        SampleCmd::Select {
            c,
            layer,
            band,
            budget,
        } => {
            let (_, ip) = load(c)?;
            let basis = HodgeBasis::with_default_tol(&ip)?;
            let bands = io::read_band(band)?;
            bands.validate(&basis)?;
            let layer = layer_of(*layer);
            let f = bands.band(layer);
            let set = sampling::select_samples_greedy(&basis, layer, f, *budget)?;
            let norm = sampling::check_recoverable(&basis, &set, f)?;
            info!("localization norm {norm}");
            if !(norm < 1.0 - sampling::RECOVERY_MARGIN) {
                warn!("selected set does not satisfy the recovery condition (norm {norm})");
            }
            Ok(Output::ok(io::sample_set_to_json(&set)))
        }
        SampleCmd::Check { c, samples, band } => {
            let (_, ip) = load(c)?;
            let basis = HodgeBasis::with_default_tol(&ip)?;
            let bands = io::read_band(band)?;
            bands.validate(&basis)?;
            let set = io::read_sample_set(samples, &ip)?;
            let f = bands.band(set.layer);
            let norm = sampling::check_recoverable(&basis, &set, f)?;
            let ok = set.len() >= f.len() && norm < 1.0 - sampling::RECOVERY_MARGIN;
            Ok(Output::ok(to_text(&json!({
                "layer": set.layer.order(),
                "norm": norm,
                "samples": set.len(),
                "band": f.len(),
                "recoverable": ok,
            }))))
        }
        SampleCmd::Recover {
            c,
            layer,
            band,
            samples,
        } => {
            let (_, ip) = load(c)?;
            let basis = HodgeBasis::with_default_tol(&ip)?;
            let bands = io::read_band(band)?;
            bands.validate(&basis)?;
            let layer = layer_of(*layer);
            let obs = io::read_samples(samples, layer, ip.layer_size(layer))?;
            match sampling::recover_single_layer(&basis, &obs, bands.band(layer)) {
                Ok(s) => {
                    let m = DMatrix::from_column_slice(s.len(), 1, s.values.as_slice());
                    Ok(Output::ok(match cli.format {
                        Format::Csv => io::signals_to_csv(Some(layer), &m),
                        Format::Json => {
                            to_text(&json!({"status": "ok", "signal": vec_json(&s.values)}))
                        }
                    }))
                }
                Err(e @ Error::NotRecoverable { .. }) => refused(e),
                Err(e) => Err(e.into()),
            }
        }
        SampleCmd::RecoverMulti {
            c,
            band,
            vertex_samples,
            edge_samples,
            triangle_samples,
        } => {
            let (_, ip) = load(c)?;
            let basis = HodgeBasis::with_default_tol(&ip)?;
            let bands: BandModel = io::read_band(band)?;
            bands.validate(&basis)?;
            let a = io::read_samples(vertex_samples, Layer::Vertex, ip.num_vertices())?;
            let s = io::read_samples(edge_samples, Layer::Edge, ip.num_edges())?;
            let result = match triangle_samples {
                None => sampling::recover_two_layer(&ip, &basis, &a, &s, &bands.f0, &bands.f1).map(
                    |r| {
                        json!({
                            "status": "ok",
                            "s0": vec_json(&r.s0),
                            "s1_bar": vec_json(&r.s1_bar),
                            "s1": vec_json(&r.s1),
                            "diagnostics": r.diagnostics,
                        })
                    },
                ),
                Some(p) => {
                    let m = io::read_samples(p, Layer::Triangle, ip.num_triangles())?;
                    sampling::recover_three_layer(
                        &ip, &basis, &a, &s, &m, &bands.f0, &bands.f1, &bands.f2,
                    )
                    .map(|r| {
                        json!({
                            "status": "ok",
                            "s0": vec_json(&r.s0),
                            "s_harm": vec_json(&r.s_harm),
                            "s2": vec_json(&r.s2),
                            "s1": vec_json(&r.s1),
                            "diagnostics": r.diagnostics,
                        })
                    })
                }
            };
            match result {
                Ok(v) => {
                    if v["diagnostics"]["ill_conditioned"] == json!(true) {
                        warn!("recovery system is ill-conditioned");
                    }
                    Ok(Output::ok(to_text(&v)))
                }
                Err(e @ Error::NotRecoverable { .. }) => refused(e),
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn resolve_t_star(
    a: &InferArgs,
    graph: &SimplicialComplex2,
    cands: &CliqueCandidates,
    x_sh: &DMatrix<f64>,
) -> CliResult<(usize, Option<inference::TStarSelection>)> {
    if a.tstar == "auto" {
        let grid: Vec<usize> = (0..=cands.len()).collect();
        let sel = inference::cross_validate_t_star(graph, cands, x_sh, &grid, a.cv_eps)?;
        info!("cross-validated t* = {}", sel.t_star);
        return Ok((sel.t_star, Some(sel)));
    }
    let t: usize = a.tstar.parse().map_err(|_| Failure {
        code: 2,
        message: format!(
            "--tstar must be a non-negative integer or `auto`, got {:?}",
            a.tstar
        ),
    })?;
    Ok((t, None))
}

fn infer_cmd(cli: &Cli, cmd: &InferCmd) -> CliResult<Output> {
    let a = match cmd {
        InferCmd::Bp { c, signal, eps } => return bp_cmd(cli, c, signal, *eps),
        InferCmd::Mtv(a) => a,
        InferCmd::Pcabfmtv { a, .. } => a,
    };
    let (cx, _) = load(&a.c)?;
    let graph = cx.graph();
    let gip = build_incidence(&graph);
    let gbasis = HodgeBasis::with_default_tol(&gip)?;
    let x = read_edge_signals(&a.signals, graph.num_edges())?;
    let test = inference::sol_harm_energy_test(&gbasis, &x, a.eta)?;
    let cands = CliqueCandidates::from_graph(&graph);
    if !test.proceed {
        warn!(
            "flows are almost entirely gradient (ratio {}); no triangles inferred",
            test.ratio
        );
        return Ok(Output::ok(to_text(&json!({
            "status": "gradient_only",
            "energy_ratio": test.ratio,
            "t": vec![0u8; cands.len()],
            "selected": Vec::<[usize; 3]>::new(),
        }))));
    }
    let (t_star, cv) = resolve_t_star(a, &graph, &cands, &test.x_sh)?;
    let (result, extra) = match cmd {
        InferCmd::Mtv(_) => (inference::mtv_infer(&cands, &test.x_sh, t_star)?, json!({})),
        InferCmd::Pcabfmtv {
            pca_dim,
            pca_energy,
            gamma,
            max_iter,
            ..
        } => {
            let dim = match (pca_dim, pca_energy) {
                (Some(f), _) => PcaDim::Fixed(*f),
                (None, Some(e)) => PcaDim::Energy(*e),
                (None, None) => PcaDim::Energy(0.95),
            };
            let opts = PcaBfmtvOptions {
                dim,
                gamma: *gamma,
                max_iter: *max_iter,
                covariance: None,
            };
            let r = inference::pca_bfmtv_infer(&cands, &test.x_sh, t_star, &opts)?;
            let extra = json!({ "pca_dim": r.basis.ncols(), "cycled": r.cycled });
            (r.inference, extra)
        }
        InferCmd::Bp { .. } => unreachable!(),
    };
    let selected: Vec<[usize; 3]> = result
        .selected()
        .iter()
        .map(|&n| cands.cliques()[n])
        .collect();
    let mut v = json!({
        "status": if result.converged { "ok" } else { "NotConverged" },
        "t_star": t_star,
        "energy_ratio": test.ratio,
        "cliques": cands.cliques(),
        "t": result.t,
        "selected": selected,
        "c": result.c,
        "objective_trace": result.objective_trace,
        "iterations": result.iterations,
        "converged": result.converged,
    });
    if let Value::Object(m) = extra {
        for (k, val) in m {
            v[k] = val;
        }
    }
    if let Some(sel) = cv {
        v["cross_validation"] = serde_json::to_value(sel).expect("selection serializes");
    }
    Ok(Output {
        text: to_text(&v),
        partial: !result.converged,
    })
}

fn bp_cmd(cli: &Cli, c: &ComplexArg, signal: &Path, eps: f64) -> CliResult<Output> {
    let (_, ip) = load(c)?;
    let basis = HodgeBasis::with_default_tol(&ip)?;
    let x = read_edge_signals(signal, ip.num_edges())?;
    let v = basis.eigenvectors(Layer::Edge);
    let mut coeffs = DMatrix::zeros(v.ncols(), x.ncols());
    let mut info_rows = Vec::new();
    for (j, col) in x.column_iter().enumerate() {
        let bp = inference::basis_pursuit(v, &col.into_owned(), eps)?;
        coeffs.set_column(j, &bp.coefficients);
        info_rows.push(json!({"l1_norm": bp.l1_norm, "residual_norm": bp.residual_norm, "multiplier": bp.multiplier}));
    }
    Ok(Output::ok(match cli.format {
        Format::Csv => io::signals_to_csv(None, &coeffs),
        Format::Json => {
            let cols: Vec<Value> = coeffs
                .column_iter()
                .map(|c| vec_json(&c.into_owned()))
                .collect();
            to_text(&json!({"coefficients": cols, "signals": info_rows}))
        }
    }))
}

fn filter_cmd(cli: &Cli, a: &FilterArgs) -> CliResult<Output> {
    let (_, ip) = load(&a.c)?;
    let x = read_edge_signals(&a.signal, ip.num_edges())?;
    let metrics = match &a.metrics {
        Some(p) => io::read_metrics(p, &ip)?,
        None => MetricSet::identity(&ip),
    };
    let opts = PfOptions {
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let sols = flowfilter::solve_pf_batch(&ip, &x, &metrics, a.lambda, a.gamma, &opts)?;
    let all_converged = sols.iter().all(|s| s.converged);
    if !all_converged {
        warn!("filter did not reach the optimality tolerance for every signal");
    }
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (j, s) in sols.iter().enumerate() {
        out.set_column(j, &s.signal.values);
    }
    let text = match cli.format {
        Format::Csv => {
            let status = if all_converged { "ok" } else { "NotConverged" };
            format!(
                "# status={status}\n{}",
                io::signals_to_csv(Some(Layer::Edge), &out)
            )
        }
        Format::Json => {
            let items: Vec<Value> = sols
                .iter()
                .map(|s| {
                    json!({
                        "signal": vec_json(&s.signal.values),
                        "objective": s.objective_trace.last(),
                        "iterations": s.iterations,
                        "residual": s.residual,
                        "converged": s.converged,
                    })
                })
                .collect();
            to_text(&json!({
                "status": if all_converged { "ok" } else { "NotConverged" },
                "signals": items,
            }))
        }
    };
    Ok(Output {
        text,
        partial: !all_converged,
    })
}

fn load_config(a: &ConfigArg) -> CliResult<ExperimentConfig> {
    let cfg: ExperimentConfig = match &a.config {
        None => ExperimentConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.clone(),
                message: e.to_string(),
            })?
        }
    };
    cfg.validate()?;
    eprint!("{}", cfg.header());
    Ok(cfg)
}

fn experiment_cmd(cmd: &ExperimentCmd) -> CliResult<Output> {
    match cmd {
        ExperimentCmd::PeVsSnr(a) => {
            let cfg = load_config(a)?;
            let rows = synth::experiment_pe_vs_snr(&cfg)?;
            Ok(Output::ok(synth::pe_csv(&cfg, &rows)))
        }
        ExperimentCmd::RecoveryVsSamples(a) => {
            let cfg = load_config(a)?;
            let rows = synth::experiment_recovery_vs_samples(&cfg)?;
            Ok(Output::ok(synth::recovery_csv(&cfg, &rows)))
        }
    }
}

fn synth_cmd(cli: &Cli, cmd: &SynthCmd) -> CliResult<Output> {
    match cmd {
        SynthCmd::Complex {
            vertices,
            edge_prob,
            fill,
        } => {
            let c = synth::random_complex(cli.seed, *vertices, *edge_prob, *fill)?;
            Ok(Output::ok(io::complex_to_json(&c)))
        }
        SynthCmd::Signal {
            c,
            layer,
            band,
            snr,
            count,
        } => {
            let (_, ip) = load(c)?;
            let basis = HodgeBasis::with_default_tol(&ip)?;
            let bands = io::read_band(band)?;
            bands.validate(&basis)?;
            let layer = layer_of(*layer);
            let n = ip.layer_size(layer);
            let mut m = DMatrix::zeros(n, *count);
            for j in 0..*count {
                let mut rng = synth::stream_rng(cli.seed, j as u64, synth::Purpose::Signal);
                let s = synth::random_bandlimited_with(&mut rng, &basis, layer, bands.band(layer))?;
                let mut noise_rng = synth::stream_rng(cli.seed, j as u64, synth::Purpose::Noise);
                let noisy = synth::add_noise_with(&mut noise_rng, &s, snr.0);
                m.set_column(j, &noisy.values);
            }
            Ok(Output::ok(io::signals_to_csv(Some(layer), &m)))
        }
    }
}
