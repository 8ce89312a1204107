//! Numerical toolkit for capillary geodesics on Riemannian 2-disks.

pub mod capillary;
pub mod cone;
pub mod curve;
mod error;
pub mod flow;
pub mod geom;
pub mod minmax;

pub use capillary::{CapillaryError, CapillaryGeodesic, LassoRecord, SpectrumReport, StarVerdict};
pub use cone::{ConeError, SharpnessDisk};
pub use curve::{CapillaryMeasure, CurveError, DomainState, Side, SimpleDomain};
pub use error::Error;
pub use flow::{FlowError, FlowState};
pub use geom::{ChartKind, GeomError, MetricChart, Sym2, Trajectory, Vec2};
pub use minmax::{MinmaxError, Sweepout, WidthReport};
