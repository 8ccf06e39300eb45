//! Signal processing over 2-dimensional simplicial complexes.
//!
//! The crate covers the full pipeline for vertex, edge and triangle signals:
//!
//! * [`complex`]: oriented incidence matrices, 3-clique enumeration, Betti numbers;
//! * [`spectral`]: Hodge Laplacians, their eigenbases, curl/divergence/gradient,
//!   the graph Fourier transform and total-variation functionals;
//! * [`hodge`]: Hodge decomposition of noisy edge flows;
//! * [`sampling`]: bandlimited recovery from samples on one or several layers;
//! * [`flowfilter`]: smooth-plus-sparse edge-flow filtering;
//! * [`inference`]: inference of the filled triangles from observed flows;
//! * [`synth`]: seeded generators and Monte-Carlo experiments;
//! * [`io`]: JSON and CSV file formats.

pub mod complex;
pub mod error;
pub mod flowfilter;
pub mod hodge;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod spectral;
pub mod synth;

pub use complex::{build_incidence, IncidencePair, Layer, LayerSignal, SimplicialComplex2};
pub use error::{Error, Result};
pub use hodge::{decompose, project_component, HodgeComponents, Subspace};
pub use spectral::{HodgeBasis, HodgeClass};
