use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({u}, {v}) lies outside the chart domain")]
    OutsideDomain { u: f64, v: f64 },

    #[error("chart formula is not smooth at ({u}, {v}): {detail}")]
    NotSmooth { u: f64, v: f64, detail: String },

    #[error("degenerate first fundamental form at ({u}, {v}): det = {det:e}")]
    DegenerateMetric { u: f64, v: f64, det: f64 },

    #[error("normal space N_{level} has rank {rank} > 2 at ({u}, {v}); chart is not minimal or mislabeled")]
    InconsistentRank { u: f64, v: f64, level: usize, rank: usize },

    #[error("surface is not regular at ({u}, {v}): {detail}")]
    NotRegular { u: f64, v: f64, detail: String },

    #[error("chart is not minimal at ({u}, {v}): |trace of second fundamental form| = {trace:e}")]
    NotMinimal { u: f64, v: f64, trace: f64 },

    #[error("curvature ellipse of order {order} is not a circle at ({u}, {v}): deviation {deviation:e}")]
    NotIsotropic { u: f64, v: f64, order: usize, deviation: f64 },

    #[error("curvature ellipse of order {order} is degenerate at ({u}, {v})")]
    DegenerateEllipse { u: f64, v: f64, order: usize },

    #[error("frame gauge discontinuity at ({u}, {v}): {detail}")]
    Gauge { u: f64, v: f64, detail: String },

    #[error("compatibility residual {residual:e} exceeds threshold {threshold:e}")]
    Compatibility { residual: f64, threshold: f64 },

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("sample grids do not match")]
    GridMismatch,

    #[error("underdetermined: {rows} samples for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("unknown catalog label `{0}`")]
    UnknownLabel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("chart definition error: {0}")]
    ChartDefinition(String),
}

impl Error {
    /// Failures of the numerics, as opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Compatibility { .. }
                | Error::Gauge { .. }
                | Error::Integration(_)
                | Error::DegenerateEllipse { .. }
        )
    }
}
