use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{name} = {value:e} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("posterior collapsed at step {step}: evidence integral {integral:e}")]
    PosteriorCollapse { step: usize, integral: f64 },

    #[error("degenerate prior: standard deviation {0:e} must be positive")]
    DegeneratePrior(f64),

    #[error("point identification requested but disabled for this schedule")]
    PointIdentificationDisabled,

    #[error("phase {0:e} rad sits on a fringe extremum; per-shot precision is undefined")]
    FringeExtremum(f64),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("fringe fit failed (rms residual {residual:e})")]
    FitFailed { residual: f64 },

    #[error("pre-estimation found {0} common fringe minima, expected exactly one")]
    AmbiguousMinimum(usize),

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
