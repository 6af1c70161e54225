//! Norms, lengths and distances on symplectic vector fields and isotopies of
//! the flat 2-torus, computed spectrally on a periodic grid.

pub mod error;
pub mod fixtures;
pub mod grid;
pub mod hodge;
pub mod hofer;
pub mod interp;
pub mod io;
pub mod isotopy;
pub mod metrics;
pub mod verify;
mod spectral;

pub use error::{Error, Result};
pub use grid::{GridSpec, OneForm, ScalarField, TimeSeries, VectorField};
pub use hofer::{EnergyReport, OptConfig, PathAnsatz};
pub use hodge::{HarmonicBasis, HodgeSplit, MetricSpec};
pub use isotopy::{DisplacementField, GeneratorPath, Isotopy, MapPair};
pub use metrics::{DistanceReport, NormContext, TimeMode};
