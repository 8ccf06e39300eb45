//! File formats.
//!
//! * Complex: JSON `{"num_vertices": V, "edges": [[i, j], ...], "triangles": [[i, j, k], ...]}`,
//!   `triangles` optional.
//! * Signals: CSV without index column, one signal per column, `#` comment lines,
//!   optionally `# layer=0|1|2`.
//! * Samples: CSV `index,value` rows, an optional `index,value` header line.
//! * Band: JSON `{"F0": [...], "F1": [...], "F2": [...]}`.
//! * Sample set: JSON `{"layer": 1, "indices": [...]}`.
//! * Metrics: JSON `{"M0": [[...]], "M1": [[...]], "M2": [[...]]}`, rows of each matrix,
//!   missing entries meaning identity.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::complex::{IncidencePair, Layer, SimplicialComplex2};
use crate::error::{Error, Result};
use crate::flowfilter::MetricSet;
use crate::sampling::{LayerSamples, SampleSet};
use crate::spectral::HodgeBasis;
use crate::synth::fmt_float;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| parse_error(path, e))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexFile {
    num_vertices: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    triangles: Vec<[usize; 3]>,
}

pub fn complex_from_json(
    text: &str,
) -> std::result::Result<Result<SimplicialComplex2>, serde_json::Error> {
    let f: ComplexFile = serde_json::from_str(text)?;
    Ok(SimplicialComplex2::new(
        f.num_vertices,
        f.edges,
        f.triangles,
    ))
}

pub fn read_complex(path: &Path) -> Result<SimplicialComplex2> {
    complex_from_json(&read_to_string(path)?).map_err(|e| parse_error(path, e))?
}

pub fn complex_to_json(c: &SimplicialComplex2) -> String {
    let f = ComplexFile {
        num_vertices: c.num_vertices(),
        edges: c.edges().to_vec(),
        triangles: c.triangles().to_vec(),
    };
    serde_json::to_string_pretty(&f).expect("complex serializes") + "\n"
}

/// Signals matrix and the layer named by a `# layer=k` comment, if any.
pub fn signals_from_csv(text: &str) -> std::result::Result<(Option<Layer>, DMatrix<f64>), String> {
    let mut layer = None;
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("layer=") {
                let k: u8 = v
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad layer comment {line:?}"))?;
                layer = Some(Layer::try_from(k).map_err(|e| e.to_string())?);
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format!("row {}: not a number: {f:?}", i + 1))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(format!(
            "row {} has {} columns, expected {cols}",
            bad + 1,
            rows[bad].len()
        ));
    }
    Ok((layer, DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c])))
}

pub fn read_signals(path: &Path) -> Result<(Option<Layer>, DMatrix<f64>)> {
    signals_from_csv(&read_to_string(path)?).map_err(|e| parse_error(path, e))
}

/// Read signals and check them against the expected layer and length.
pub fn read_layer_signals(path: &Path, layer: Layer, len: usize) -> Result<DMatrix<f64>> {
    let (found, x) = read_signals(path)?;
    if let Some(found) = found {
        if found != layer {
            return Err(Error::LayerMismatch {
                expected: layer,
                found,
            });
        }
    }
    if x.nrows() != len {
        return Err(Error::LengthMismatch {
            what: "signal rows",
            expected: len,
            found: x.nrows(),
        });
    }
    Ok(x)
}

pub fn signals_to_csv(layer: Option<Layer>, x: &DMatrix<f64>) -> String {
    let mut out = String::new();
    if let Some(l) = layer {
        out.push_str(&format!("# layer={}\n", l.order()));
    }
    for r in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|c| fmt_float(x[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn samples_from_csv(
    text: &str,
    layer: Layer,
    layer_size: usize,
) -> std::result::Result<Result<LayerSamples>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if i == 0 && rec.get(0) == Some("index") {
            continue;
        }
        if rec.len() != 2 {
            return Err(format!("line {}: expected index,value", i + 1));
        }
        idx.push(
            rec[0]
                .parse::<usize>()
                .map_err(|_| format!("line {}: bad index {:?}", i + 1, &rec[0]))?,
        );
        vals.push(
            rec[1]
                .parse::<f64>()
                .map_err(|_| format!("line {}: bad value {:?}", i + 1, &rec[1]))?,
        );
    }
    // pair values with indices before SampleSet sorts them
    let mut pairs: Vec<(usize, f64)> = idx.into_iter().zip(vals).collect();
    pairs.sort_by_key(|p| p.0);
    let set = match SampleSet::new(layer, pairs.iter().map(|p| p.0).collect(), layer_size) {
        Ok(s) => s,
        Err(e) => return Ok(Err(e)),
    };
    let values = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.1));
    Ok(LayerSamples::new(set, values))
}

pub fn read_samples(path: &Path, layer: Layer, layer_size: usize) -> Result<LayerSamples> {
    samples_from_csv(&read_to_string(path)?, layer, layer_size).map_err(|e| parse_error(path, e))?
}

pub fn samples_to_csv(samples: &LayerSamples) -> String {
    let mut out = String::from("index,value\n");
    for (&i, &v) in samples.set.indices.iter().zip(samples.values.iter()) {
        out.push_str(&format!("{i},{}\n", fmt_float(v)));
    }
    out
}

pub fn read_band(path: &Path) -> Result<crate::sampling::BandModel> {
    read_json(path)
}

/// Read a sample set and validate it against the layer of `ip` it names.
pub fn read_sample_set(path: &Path, ip: &IncidencePair) -> Result<SampleSet> {
    let raw: SampleSet = read_json(path)?;
    SampleSet::new(raw.layer, raw.indices, ip.layer_size(raw.layer))
}

pub fn sample_set_to_json(set: &SampleSet) -> String {
    serde_json::to_string(set).expect("sample set serializes") + "\n"
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsFile {
    #[serde(rename = "M0")]
    m0: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M1")]
    m1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M2")]
    m2: Option<Vec<Vec<f64>>>,
}

fn rows_to_matrix(
    rows: Vec<Vec<f64>>,
    n: usize,
    name: &str,
) -> std::result::Result<DMatrix<f64>, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{name} must be {n}x{n}"));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

pub fn read_metrics(path: &Path, ip: &IncidencePair) -> Result<MetricSet> {
    let f: MetricsFile = read_json(path)?;
    let mut m = MetricSet::identity(ip);
    let conv = |rows, n, name| rows_to_matrix(rows, n, name).map_err(|e| parse_error(path, e));
    if let Some(r) = f.m0 {
        m.m0 = conv(r, ip.num_vertices(), "M0")?;
    }
    if let Some(r) = f.m1 {
        m.m1 = conv(r, ip.num_edges(), "M1")?;
    }
    if let Some(r) = f.m2 {
        m.m2 = conv(r, ip.num_triangles(), "M2")?;
    }
    m.validate(ip)?;
    Ok(m)
}

/// Eigenbasis of one layer: a row of eigenvalues, then one row per simplex.
pub fn basis_to_csv(basis: &HodgeBasis, layer: Layer) -> String {
    let mut out = format!("# layer={}\n", layer.order());
    if layer == Layer::Edge {
        let classes: Vec<&str> = basis
            .classes()
            .iter()
            .map(|c| match c {
                crate::spectral::HodgeClass::Irrotational => "irr",
                crate::spectral::HodgeClass::Solenoidal => "sol",
                crate::spectral::HodgeClass::Harmonic => "harm",
            })
            .collect();
        out.push_str(&format!("# classes={}\n", classes.join(",")));
    }
    out.push_str("# first row: eigenvalues; following rows: eigenvector entries\n");
    let vals = basis.eigenvalues(layer);
    let vecs = basis.eigenvectors(layer);
    let mut m = DMatrix::zeros(vecs.nrows() + 1, vecs.ncols());
    m.row_mut(0).copy_from(&vals.transpose());
    m.view_mut((1, 0), (vecs.nrows(), vecs.ncols()))
        .copy_from(vecs);
    out + &signals_to_csv(None, &m)
}
