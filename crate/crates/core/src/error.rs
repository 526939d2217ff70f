use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    /// The endpoints do not define a unique shortest arc (antipodal or coincident).
    #[error("degenerate arc: endpoints do not define a unique great circle")]
    DegenerateArc,
    #[error("no candidate satellite available")]
    NoCandidate,
    #[error("hop repair found no eligible relay")]
    RepairFailed,
    #[error("numeric error: {0}")]
    Numeric(&'static str),
    #[error("internal consistency violated: {0}")]
    Internal(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
