use thiserror::Error;

/// Broad failure classes, used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Geometry,
    Convergence,
    Stiffness,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 16")]
    GridSize(usize),
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("tan(w/2) has a pole at w = {re} + {im}i")]
    Pole { re: f64, im: f64 },
    #[error("within {distance:e} of singular point q{index}")]
    SingularPoint { index: usize, distance: f64 },
    #[error("curve crosses the branch cut near sample {0}")]
    BranchCut(usize),
    #[error("degenerate tangent at sample {0}")]
    DegenerateTangent(usize),
    #[error("chord-arc condition violated (constant {0:e})")]
    ChordArc(f64),
    #[error("splash curve construction failed: {0}")]
    Construction(&'static str),
    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("time step underflow at t = {t}: dt = {dt:e}")]
    StepUnderflow { t: f64, dt: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::GridSize(_) | Error::NonFinite(_) | Error::LengthMismatch(..) | Error::InvalidParameter(_) => {
                ErrorKind::Input
            }
            Error::Pole { .. }
            | Error::SingularPoint { .. }
            | Error::BranchCut(_)
            | Error::DegenerateTangent(_)
            | Error::ChordArc(_)
            | Error::Construction(_) => ErrorKind::Geometry,
            Error::NoConvergence { .. } => ErrorKind::Convergence,
            Error::StepUnderflow { .. } => ErrorKind::Stiffness,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
