use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("axis {axis} out of range for dimension {n}")]
    Axis { axis: usize, n: usize },
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("singular metric: {0}")]
    SingularMetric(String),
    #[error("spectral derivative produced imaginary part {imag:e} (scale {scale:e})")]
    Imaginary { imag: f64, scale: f64 },
    #[error("unsupported dimension n={0}")]
    Dimension(usize),
    #[error("series truncation exceeded: {0}")]
    Truncation(String),
    #[error("log grading above cap: {0}")]
    LogCap(String),
    #[error("indicial root reached at order {order} with residual {residual:e}")]
    IndicialRoot { order: i32, residual: f64 },
    #[error("residual guard tripped: {0}")]
    Guard(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("input form is not closed (|d w| = {0:e})")]
    NotClosed(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
