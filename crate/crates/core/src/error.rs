use thiserror::Error;

use crate::capillary::CapillaryError;
use crate::cone::ConeError;
use crate::curve::CurveError;
use crate::flow::FlowError;
use crate::geom::GeomError;
use crate::minmax::MinmaxError;

/// Any error of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Capillary(#[from] CapillaryError),
    #[error(transparent)]
    Minmax(#[from] MinmaxError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

fn geom_numerical(e: &GeomError) -> bool {
    matches!(
        e,
        GeomError::NonFiniteCurvature(..)
            | GeomError::LeftChart(..)
            | GeomError::StepUnderflow(_)
            | GeomError::QuadratureFailure { .. }
    )
}

fn flow_numerical(e: &FlowError) -> bool {
    !matches!(e, FlowError::Curve(_))
}

fn capillary_numerical(e: &CapillaryError) -> bool {
    match e {
        CapillaryError::Geom(g) => geom_numerical(g),
        CapillaryError::ResidualTooLarge(_) | CapillaryError::WidthEstimate(_) => true,
        _ => false,
    }
}

impl Error {
    /// True for failures of the numerics (non-convergence, integrator
    /// breakdown, quadrature trouble); false for invalid inputs and domain
    /// conditions.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Geom(e) => geom_numerical(e),
            Error::Curve(_) => false,
            Error::Flow(e) => flow_numerical(e),
            Error::Capillary(e) => capillary_numerical(e),
            Error::Minmax(e) => match e {
                MinmaxError::Flow { source, .. } => flow_numerical(source),
                MinmaxError::TighteningIncrease { .. }
                | MinmaxError::ContinuityCheckFailed { .. }
                | MinmaxError::DegreeCheckFailed { .. } => true,
                _ => false,
            },
            Error::Cone(e) => match e {
                ConeError::Geom(g) => geom_numerical(g),
                ConeError::Capillary(c) => capillary_numerical(c),
                ConeError::BlendFailure(_) | ConeError::LassoNotFound(_) => true,
                _ => false,
            },
        }
    }
}
